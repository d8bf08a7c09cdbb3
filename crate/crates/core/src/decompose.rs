//! Constructive decompositions of biased measures into weighted simple
//! components, and martingale coupling construction for discrete marginals
//! in convex order.

use crate::coupling::DiscreteCoupling;
use crate::error::{Error, Result};
use crate::lp::{solve, LinearProgram, LpStatus};
use crate::measure::{
    make_measure, mixture, BiasParams, DiscreteMeasure, MERGE_TOL, TAU_MASS, TAU_MEAN, TAU_ORDER,
};
use crate::order::{convex_order, is_beta_biased, reflect};
use serde::{Deserialize, Serialize};

/// Reassembly tolerance for decompositions, in 1-Wasserstein distance.
pub const TAU_REASSEMBLE: f64 = 1e-9;

/// A weighted simple block: a sub-measure strictly left of the center plus a
/// single atom `(M, γ)` at or right of it, together a centered probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimpleComponent {
    #[serde(rename = "w")]
    pub weight: f64,
    pub left: DiscreteMeasure,
    #[serde(rename = "M")]
    pub atom_location: f64,
    #[serde(rename = "gamma")]
    pub atom_mass: f64,
}

impl SimpleComponent {
    pub fn dirac(weight: f64, x: f64) -> Self {
        SimpleComponent {
            weight,
            left: DiscreteMeasure::empty(),
            atom_location: x,
            atom_mass: 1.0,
        }
    }

    /// The component's probability measure `left + γ δ_M`.
    pub fn measure(&self) -> Result<DiscreteMeasure> {
        self.left.with_atom(self.atom_location, self.atom_mass)
    }

    /// Structural invariants relative to a center and bias level.
    pub fn validate(&self, x: f64, beta: &BiasParams) -> Result<()> {
        if self.weight <= 0.0 {
            return Err(Error::InvalidComponent("nonpositive weight".into()));
        }
        if self.atom_location < x - MERGE_TOL {
            return Err(Error::InvalidComponent("atom left of center".into()));
        }
        if self.atom_mass < beta.beta() - TAU_ORDER || self.atom_mass > 1.0 + TAU_MASS {
            return Err(Error::InvalidComponent(format!(
                "atom mass {} outside [beta, 1]",
                self.atom_mass
            )));
        }
        if let Some(top) = self.left.max_support() {
            if top >= x - MERGE_TOL {
                return Err(Error::InvalidComponent(
                    "left part reaches the center".into(),
                ));
            }
        }
        let mass = self.left.total_mass() + self.atom_mass;
        if (mass - 1.0).abs() > TAU_MASS {
            return Err(Error::InvalidComponent(format!(
                "total mass {mass} differs from one"
            )));
        }
        let mean = self.left.total_integral() + self.atom_mass * self.atom_location;
        if (mean - x).abs() > TAU_MEAN * (1.0 + x.abs()) {
            return Err(Error::BarycenterMismatch(mean, x));
        }
        Ok(())
    }
}

/// A mixture of simple components centered at a common point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub x: f64,
    pub beta: f64,
    pub components: Vec<SimpleComponent>,
}

impl Decomposition {
    /// Mixture of the components; equals the decomposed measure up to
    /// reassembly tolerance.
    pub fn reassemble(&self) -> Result<DiscreteMeasure> {
        let parts: Result<Vec<(f64, DiscreteMeasure)>> = self
            .components
            .iter()
            .map(|c| c.measure().map(|m| (c.weight, m)))
            .collect();
        mixture(&parts?)
    }

    pub fn total_weight(&self) -> f64 {
        self.components.iter().map(|c| c.weight).sum()
    }
}

fn require_centered_probability(nu: &DiscreteMeasure, x: f64) -> Result<f64> {
    if !nu.is_probability() {
        return Err(Error::MassMismatch(nu.total_mass(), 1.0));
    }
    let bar = nu.barycenter()?;
    if (bar - x).abs() > TAU_MEAN * (1.0 + x.abs()) {
        return Err(Error::BarycenterMismatch(bar, x));
    }
    Ok(bar)
}

/// Decomposes an atomic biased measure by the closed-formula kernel: each
/// right atom `(y, m)` becomes a component with atom mass
/// `B_y = (x − m̄_L)/(y − m̄_L)` and weight `m / B_y`, sharing the rescaled
/// left part.
pub fn decompose_atomic(
    nu: &DiscreteMeasure,
    x: f64,
    beta: &BiasParams,
) -> Result<Decomposition> {
    let bar = require_centered_probability(nu, x)?;
    let top = nu.max_support().ok_or(Error::EmptyMeasure)?;
    if nu.mass_at(top) < beta.beta() - TAU_ORDER {
        return Err(Error::NotAtomicBiased);
    }
    let (left, right) = nu.split_lr(bar);
    if left.is_empty() {
        return Ok(Decomposition {
            x,
            beta: beta.beta(),
            components: vec![SimpleComponent::dirac(1.0, x)],
        });
    }
    let left_bar = left.barycenter()?;
    let left_mass = left.total_mass();
    let mut components = Vec::with_capacity(right.len());
    for atom in right.atoms() {
        let b = (x - left_bar) / (atom.x - left_bar);
        let weight = atom.m / b;
        components.push(SimpleComponent {
            weight,
            left: left.scale_mass((1.0 - b) / left_mass),
            atom_location: atom.x,
            atom_mass: b,
        });
    }
    Ok(Decomposition {
        x,
        beta: beta.beta(),
        components,
    })
}

/// Martingale coupling between two measures in convex order, selected
/// deterministically by minimizing `Σ w_ij |y_j − x_i|`.
pub fn construct_martingale_coupling(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
) -> Result<DiscreteCoupling> {
    let order = convex_order(mu, nu)?;
    if !order.holds {
        return Err(Error::NotInConvexOrder);
    }
    let xs: Vec<f64> = mu.atoms().iter().map(|a| a.x).collect();
    let ys: Vec<f64> = nu.atoms().iter().map(|a| a.x).collect();
    let (n, m) = (xs.len(), ys.len());
    let idx = |i: usize, j: usize| i * m + j;
    let mut lp = LinearProgram::new(n * m);
    for (i, atom) in mu.atoms().iter().enumerate() {
        let mut row = vec![0.0; n * m];
        for j in 0..m {
            row[idx(i, j)] = 1.0;
        }
        lp.add_eq(row, atom.m);
    }
    for (j, atom) in nu.atoms().iter().enumerate() {
        let mut row = vec![0.0; n * m];
        for i in 0..n {
            row[idx(i, j)] = 1.0;
        }
        lp.add_eq(row, atom.m);
    }
    for (i, &x) in xs.iter().enumerate() {
        let mut row = vec![0.0; n * m];
        for (j, &y) in ys.iter().enumerate() {
            row[idx(i, j)] = y - x;
        }
        lp.add_eq(row, 0.0);
    }
    let mut cost = vec![0.0; n * m];
    for (i, &x) in xs.iter().enumerate() {
        for (j, &y) in ys.iter().enumerate() {
            cost[idx(i, j)] = (y - x).abs();
        }
    }
    lp.set_objective(cost);
    let out = solve(&lp)?;
    match out.status {
        LpStatus::Feasible => {
            let point = out.point.expect("feasible outcome carries a point");
            let w = (0..n)
                .map(|i| (0..m).map(|j| point[idx(i, j)].max(0.0)).collect())
                .collect();
            DiscreteCoupling::new(xs, ys, w)
        }
        LpStatus::Infeasible => Err(Error::Infeasible),
    }
}

/// Inner coupling for the biased decomposition: martingale coupling between
/// the normalized right part and the comparison measure. In strong mode an
/// auxiliary variable maximizes the minimal row fraction sent to the center
/// atom, so every emitted component gets `γ > β` strictly.
fn inner_coupling(
    right: &DiscreteMeasure,
    comp: &DiscreteMeasure,
    center: f64,
    strong: bool,
) -> Result<DiscreteCoupling> {
    let scale = right.total_mass();
    let rn = right.scale_mass(1.0 / scale);
    let cn = comp.scale_mass(1.0 / scale);
    if !strong {
        return construct_martingale_coupling(&rn, &cn);
    }
    let xs: Vec<f64> = rn.atoms().iter().map(|a| a.x).collect();
    let ys: Vec<f64> = cn.atoms().iter().map(|a| a.x).collect();
    let (n, m) = (xs.len(), ys.len());
    let jx = ys
        .iter()
        .position(|&y| (y - center).abs() <= MERGE_TOL)
        .ok_or_else(|| Error::NotBiased("no center atom in the comparison measure".into()))?;
    let nv = n * m + 1; // trailing variable: minimal center fraction t
    let idx = |i: usize, j: usize| i * m + j;
    let mut lp = LinearProgram::new(nv);
    for (i, atom) in rn.atoms().iter().enumerate() {
        let mut row = vec![0.0; nv];
        for j in 0..m {
            row[idx(i, j)] = 1.0;
        }
        lp.add_eq(row, atom.m);
    }
    for (j, atom) in cn.atoms().iter().enumerate() {
        let mut row = vec![0.0; nv];
        for i in 0..n {
            row[idx(i, j)] = 1.0;
        }
        lp.add_eq(row, atom.m);
    }
    for (i, &x) in xs.iter().enumerate() {
        let mut row = vec![0.0; nv];
        for (j, &y) in ys.iter().enumerate() {
            row[idx(i, j)] = y - x;
        }
        lp.add_eq(row, 0.0);
    }
    for (i, atom) in rn.atoms().iter().enumerate() {
        // t · m_i − w_{i,jx} ≤ 0
        let mut row = vec![0.0; nv];
        row[n * m] = atom.m;
        row[idx(i, jx)] = -1.0;
        lp.add_ineq(row, 0.0);
    }
    let mut cost = vec![0.0; nv];
    cost[n * m] = -1.0;
    lp.set_objective(cost);
    let out = solve(&lp)?;
    match out.status {
        LpStatus::Feasible => {
            let point = out.point.expect("feasible outcome carries a point");
            let w = (0..n)
                .map(|i| (0..m).map(|j| point[idx(i, j)].max(0.0)).collect())
                .collect();
            DiscreteCoupling::new(xs, ys, w)
        }
        LpStatus::Infeasible => Err(Error::Infeasible),
    }
}

/// Decomposes a β-biased measure via a martingale coupling between its right
/// part and the distorted reflection of its left part. With `strong` set the
/// coupling is chosen to put positive mass on the center column in every row,
/// which makes every component's atom mass strictly exceed β.
pub fn decompose_biased_with(
    nu: &DiscreteMeasure,
    x: f64,
    beta: &BiasParams,
    strong: bool,
) -> Result<Decomposition> {
    let verdict = is_beta_biased(nu, x, beta);
    if !verdict.holds {
        return Err(Error::NotBiased(verdict.reason));
    }
    let bar = nu.barycenter()?;
    let (left, right) = nu.split_lr(bar);
    if left.is_empty() {
        return Ok(Decomposition {
            x,
            beta: beta.beta(),
            components: vec![SimpleComponent::dirac(1.0, x)],
        });
    }
    let a = beta.a();
    let alpha = (right.total_mass() - a * left.total_mass()).max(0.0);
    let (comp, _) = crate::order::comparison_measure(&left, x, beta, alpha)?;
    let pi = inner_coupling(&right, &comp, x, strong)?;

    let mut components = Vec::with_capacity(right.len());
    for (i, atom) in right.atoms().iter().enumerate() {
        let row = pi.row_measure(i)?.normalize()?;
        let center_mass = row.mass_at(x);
        let beta_x = 1.0 / a + 1.0 - center_mass / a;
        let gamma = 1.0 / beta_x;
        // Reflect the off-center part of the kernel back to the left side.
        let off_center: Vec<(f64, f64)> = row
            .atoms()
            .iter()
            .filter(|at| (at.x - x).abs() > MERGE_TOL)
            .map(|at| (reflect(at.x, x, beta), at.m / (a * beta_x)))
            .collect();
        components.push(SimpleComponent {
            weight: beta_x * atom.m,
            left: make_measure(&off_center)?,
            atom_location: atom.x,
            atom_mass: gamma,
        });
    }
    Ok(Decomposition {
        x,
        beta: beta.beta(),
        components,
    })
}

/// Decomposition of a β-biased measure into simple components.
pub fn decompose_biased(nu: &DiscreteMeasure, x: f64, beta: &BiasParams) -> Result<Decomposition> {
    decompose_biased_with(nu, x, beta, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::w1;

    fn m(pairs: &[(f64, f64)]) -> DiscreteMeasure {
        make_measure(pairs).unwrap()
    }

    fn bp(beta: f64) -> BiasParams {
        BiasParams::new(beta).unwrap()
    }

    #[test]
    fn atomic_symmetric_single_component() {
        let nu = m(&[(-1.0, 0.5), (1.0, 0.5)]);
        let d = decompose_atomic(&nu, 0.0, &bp(0.5)).unwrap();
        assert_eq!(d.components.len(), 1);
        let c = &d.components[0];
        assert!((c.weight - 1.0).abs() < 1e-12);
        assert!((c.atom_mass - 0.5).abs() < 1e-12, "B_1 = 1/2");
        assert_eq!(c.atom_location, 1.0);
        assert_eq!(c.left, m(&[(-1.0, 0.5)]));
        assert!(w1(&d.reassemble().unwrap(), &nu).unwrap() < 1e-12);
    }

    #[test]
    fn atomic_dirac_trivial() {
        let d = decompose_atomic(&DiscreteMeasure::dirac(0.0), 0.0, &bp(0.3)).unwrap();
        assert_eq!(d.components.len(), 1);
        assert_eq!(d.components[0].atom_mass, 1.0);
        assert!(w1(&d.reassemble().unwrap(), &DiscreteMeasure::dirac(0.0)).unwrap() < 1e-12);
    }

    #[test]
    fn atomic_fig4b_formulas() {
        let nu = m(&[(2.0, 0.5), (-1.0, 0.25), (-3.0, 0.25)]);
        let d = decompose_atomic(&nu, 0.0, &bp(0.5)).unwrap();
        assert_eq!(d.components.len(), 1);
        let c = &d.components[0];
        // Left barycenter −2 gives B_2 = 2/(2+2) = 1/2, weight 1.
        assert!((c.atom_mass - 0.5).abs() < 1e-12);
        assert!((c.weight - 1.0).abs() < 1e-12);
        assert_eq!(c.atom_location, 2.0);
        assert!((c.left.total_mass() - 0.5).abs() < 1e-12);
        assert!(w1(&d.reassemble().unwrap(), &nu).unwrap() < 1e-12);
    }

    #[test]
    fn atomic_rejects_low_top_mass() {
        let nu = m(&[(-1.0, 0.5), (1.0, 0.5)]);
        assert_eq!(
            decompose_atomic(&nu, 0.0, &bp(0.7)),
            Err(Error::NotAtomicBiased)
        );
        assert!(matches!(
            decompose_atomic(&nu, 1.0, &bp(0.5)),
            Err(Error::BarycenterMismatch(_, _))
        ));
    }

    #[test]
    fn martingale_coupling_examples() {
        let pi = construct_martingale_coupling(
            &DiscreteMeasure::dirac(0.0),
            &m(&[(-1.0, 0.5), (1.0, 0.5)]),
        )
        .unwrap();
        assert!((pi.w[0][0] - 0.5).abs() < 1e-9 && (pi.w[0][1] - 0.5).abs() < 1e-9);

        // Identity marginals force the identity coupling.
        let nu = m(&[(-1.0, 0.5), (1.0, 0.5)]);
        let pi = construct_martingale_coupling(&nu, &nu).unwrap();
        assert!((pi.w[0][0] - 0.5).abs() < 1e-9 && pi.w[0][1].abs() < 1e-9);
        assert!((pi.w[1][1] - 0.5).abs() < 1e-9 && pi.w[1][0].abs() < 1e-9);

        // The symmetric two-point spread has the unique hand-solvable system.
        let wide = m(&[(-2.0, 0.5), (2.0, 0.5)]);
        let pi = construct_martingale_coupling(&nu, &wide).unwrap();
        assert!((pi.w[0][0] - 0.375).abs() < 1e-9, "3/4 of mass 1/2 to -2");
        assert!((pi.w[0][1] - 0.125).abs() < 1e-9);
        assert!((pi.w[1][0] - 0.125).abs() < 1e-9);
        assert!((pi.w[1][1] - 0.375).abs() < 1e-9);

        assert_eq!(
            construct_martingale_coupling(&wide, &nu),
            Err(Error::NotInConvexOrder)
        );
    }

    #[test]
    fn biased_symmetric_matches_atomic() {
        let nu = m(&[(-1.0, 0.5), (1.0, 0.5)]);
        let d = decompose_biased(&nu, 0.0, &bp(0.5)).unwrap();
        assert_eq!(d.components.len(), 1);
        let c = &d.components[0];
        assert!((c.atom_mass - 0.5).abs() < 1e-9, "alpha = 0 forces gamma = 1/2");
        assert!(w1(&d.reassemble().unwrap(), &nu).unwrap() < TAU_REASSEMBLE);
        for c in &d.components {
            c.validate(0.0, &bp(0.5)).unwrap();
        }
    }

    #[test]
    fn biased_dirac_trivial() {
        let d = decompose_biased(&DiscreteMeasure::dirac(3.0), 3.0, &bp(0.4)).unwrap();
        assert_eq!(d.components.len(), 1);
        assert_eq!(d.components[0].atom_location, 3.0);
    }

    #[test]
    fn biased_agrees_with_atomic_on_reassembly() {
        let nu = m(&[(2.0, 0.5), (-1.0, 0.25), (-3.0, 0.25)]);
        let beta = bp(0.5);
        let da = decompose_atomic(&nu, 0.0, &beta).unwrap();
        let db = decompose_biased(&nu, 0.0, &beta).unwrap();
        let ra = da.reassemble().unwrap();
        let rb = db.reassemble().unwrap();
        assert!(w1(&ra, &rb).unwrap() < 1e-9);
        for c in &db.components {
            c.validate(0.0, &beta).unwrap();
        }
        assert!((db.total_weight() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn biased_rejects_unbiased_input() {
        let nu = m(&[(-1.0, 0.5), (1.0, 0.5)]);
        assert!(matches!(
            decompose_biased(&nu, 0.0, &bp(0.7)),
            Err(Error::NotBiased(_))
        ));
    }

    #[test]
    fn strong_mode_pushes_gamma_strictly_above_beta() {
        // Strictly biased example: right atom above the reflected left part.
        let nu = m(&[(-1.0, 0.4), (1.5, 0.6)]);
        let beta = bp(0.5);
        let d = decompose_biased_with(&nu, 0.5, &beta, true).unwrap();
        for c in &d.components {
            assert!(
                c.atom_mass > beta.beta() + 1e-9,
                "gamma {} must strictly exceed beta",
                c.atom_mass
            );
        }
        assert!(w1(&d.reassemble().unwrap(), &nu).unwrap() < TAU_REASSEMBLE);
    }

    #[test]
    fn weights_sum_to_one() {
        let nu = m(&[(2.0, 0.5), (-1.0, 0.3), (-4.0, 0.2)]);
        let x = nu.barycenter().unwrap();
        let shifted = nu.translate(-x); // center at zero
        let d = decompose_atomic(&shifted, 0.0, &bp(0.45)).unwrap();
        assert!((d.total_weight() - 1.0).abs() < 1e-12);
    }
}
