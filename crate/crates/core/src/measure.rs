//! Finitely-atomic measures on the real line and their primitive calculus:
//! mass, barycenter, splits, potential functions, quantiles, push-forwards,
//! mixtures, and the 1-Wasserstein distance.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Atoms closer than this are merged on construction. Push-forwards of
/// reflections routinely create near-duplicate locations.
pub const MERGE_TOL: f64 = 1e-12;
/// Tolerance on total masses (probability checks, marginal comparisons).
pub const TAU_MASS: f64 = 1e-9;
/// Tolerance on barycenters and mean comparisons.
pub const TAU_MEAN: f64 = 1e-9;
/// Tolerance on weak (non-strict) order inequalities.
pub const TAU_ORDER: f64 = 1e-9;
/// Tolerance on strict inequalities; strict gaps must dominate rounding.
pub const TAU_STRICT: f64 = 1e-10;

/// A weighted point mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub x: f64,
    pub m: f64,
}

/// A nonnegative measure on the line carried by finitely many atoms.
///
/// Locations are strictly increasing and every mass is positive. Total mass
/// may be below one: sub-measures such as the left/right parts of a split are
/// first-class values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteMeasure {
    atoms: Vec<Atom>,
}

impl<'de> Deserialize<'de> for DiscreteMeasure {
    fn deserialize<D>(deserializer: D) -> std::result::Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        #[derive(Deserialize)]
        struct Raw {
            atoms: Vec<Atom>,
        }
        let raw = Raw::deserialize(deserializer)?;
        let pairs: Vec<(f64, f64)> = raw.atoms.iter().map(|a| (a.x, a.m)).collect();
        make_measure(&pairs).map_err(serde::de::Error::custom)
    }
}

/// Builds a measure from raw pairs: sorts, merges locations within
/// [`MERGE_TOL`], and drops zero masses.
pub fn make_measure(pairs: &[(f64, f64)]) -> Result<DiscreteMeasure> {
    let mut items: Vec<Atom> = Vec::with_capacity(pairs.len());
    for &(x, m) in pairs {
        if !x.is_finite() {
            return Err(Error::NonFinite(x));
        }
        if !m.is_finite() {
            return Err(Error::NonFinite(m));
        }
        if m < -TAU_MASS {
            return Err(Error::Negative(m));
        }
        if m > 0.0 {
            items.push(Atom { x, m });
        }
    }
    items.sort_by(|a, b| a.x.total_cmp(&b.x));
    let mut atoms: Vec<Atom> = Vec::with_capacity(items.len());
    for it in items {
        match atoms.last_mut() {
            Some(last) if (it.x - last.x).abs() <= MERGE_TOL => last.m += it.m,
            _ => atoms.push(it),
        }
    }
    atoms.retain(|a| a.m > 0.0);
    Ok(DiscreteMeasure { atoms })
}

impl DiscreteMeasure {
    pub fn empty() -> Self {
        DiscreteMeasure { atoms: Vec::new() }
    }

    pub fn dirac(x: f64) -> Self {
        DiscreteMeasure {
            atoms: vec![Atom { x, m: 1.0 }],
        }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.m).sum()
    }

    /// Total integral of the identity, `∫ y dν`.
    pub fn total_integral(&self) -> f64 {
        self.atoms.iter().map(|a| a.x * a.m).sum()
    }

    pub fn is_probability(&self) -> bool {
        (self.total_mass() - 1.0).abs() <= TAU_MASS
    }

    /// Mass-weighted mean.
    pub fn barycenter(&self) -> Result<f64> {
        let mass = self.total_mass();
        if mass <= 0.0 {
            return Err(Error::EmptyMeasure);
        }
        Ok(self.total_integral() / mass)
    }

    /// Infimum of the support.
    pub fn min_support(&self) -> Option<f64> {
        self.atoms.first().map(|a| a.x)
    }

    /// Supremum of the support.
    pub fn max_support(&self) -> Option<f64> {
        self.atoms.last().map(|a| a.x)
    }

    /// Mass carried at `x`, matching locations within [`MERGE_TOL`].
    pub fn mass_at(&self, x: f64) -> f64 {
        self.atoms
            .iter()
            .filter(|a| (a.x - x).abs() <= MERGE_TOL)
            .map(|a| a.m)
            .sum()
    }

    /// Splits into atoms strictly left of `x` and atoms at or right of `x`.
    /// The boundary atom goes right, matching the restriction to `[x, ∞)`.
    pub fn split_lr(&self, x: f64) -> (DiscreteMeasure, DiscreteMeasure) {
        let (l, r): (Vec<Atom>, Vec<Atom>) = self.atoms.iter().partition(|a| a.x < x);
        (DiscreteMeasure { atoms: l }, DiscreteMeasure { atoms: r })
    }

    /// Put-style potential `p(k) = ∫ (k − y)₊ dν`.
    pub fn potential(&self, k: f64) -> f64 {
        self.atoms
            .iter()
            .take_while(|a| a.x < k)
            .map(|a| (k - a.x) * a.m)
            .sum()
    }

    /// Call-style counterpart `∫ (y − k)₊ dν`.
    pub fn call_value(&self, k: f64) -> f64 {
        self.atoms
            .iter()
            .rev()
            .take_while(|a| a.x > k)
            .map(|a| (a.x - k) * a.m)
            .sum()
    }

    pub fn potential_curve(&self) -> PotentialCurve {
        let kinks = self
            .atoms
            .iter()
            .map(|a| (a.x, self.potential(a.x)))
            .collect();
        PotentialCurve {
            kinks,
            right_slope: self.total_mass(),
        }
    }

    /// Left-continuous generalized inverse of the CDF.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        let mass = self.total_mass();
        if p <= 0.0 || p > mass + TAU_MASS {
            return Err(Error::OutOfRange(p));
        }
        let mut cum = 0.0;
        for a in &self.atoms {
            cum += a.m;
            if cum >= p {
                return Ok(a.x);
            }
        }
        Ok(self.atoms.last().expect("nonempty by mass check").x)
    }

    /// Image measure under `map`; collided atoms are merged.
    pub fn pushforward(&self, map: impl Fn(f64) -> f64) -> Result<DiscreteMeasure> {
        let pairs: Vec<(f64, f64)> = self.atoms.iter().map(|a| (map(a.x), a.m)).collect();
        make_measure(&pairs)
    }

    /// Translation by `x`.
    pub fn translate(&self, x: f64) -> DiscreteMeasure {
        DiscreteMeasure {
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom { x: a.x + x, m: a.m })
                .collect(),
        }
    }

    /// Scales all masses by `w ≥ 0`.
    pub fn scale_mass(&self, w: f64) -> DiscreteMeasure {
        if w == 0.0 {
            return DiscreteMeasure::empty();
        }
        DiscreteMeasure {
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom { x: a.x, m: a.m * w })
                .collect(),
        }
    }

    /// Rescales to total mass one.
    pub fn normalize(&self) -> Result<DiscreteMeasure> {
        let mass = self.total_mass();
        if mass <= 0.0 {
            return Err(Error::EmptyMeasure);
        }
        Ok(self.scale_mass(1.0 / mass))
    }

    /// Adds an atom and re-merges.
    pub fn with_atom(&self, x: f64, m: f64) -> Result<DiscreteMeasure> {
        let mut pairs: Vec<(f64, f64)> = self.atoms.iter().map(|a| (a.x, a.m)).collect();
        pairs.push((x, m));
        make_measure(&pairs)
    }
}

/// Weighted sum of measures, merged.
pub fn mixture(components: &[(f64, DiscreteMeasure)]) -> Result<DiscreteMeasure> {
    let mut pairs = Vec::new();
    for (w, nu) in components {
        if !w.is_finite() {
            return Err(Error::NonFinite(*w));
        }
        if *w < 0.0 {
            return Err(Error::Negative(*w));
        }
        for a in nu.atoms() {
            pairs.push((a.x, w * a.m));
        }
    }
    make_measure(&pairs)
}

/// Exact 1-Wasserstein distance via the integrated |CDF difference|.
pub fn w1(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    if mu.is_empty() || nu.is_empty() {
        return Err(Error::EmptyMeasure);
    }
    let (ma, mb) = (mu.total_mass(), nu.total_mass());
    if (ma - mb).abs() > TAU_MASS {
        return Err(Error::MassMismatch(ma, mb));
    }
    let mut grid: Vec<f64> = mu
        .atoms()
        .iter()
        .chain(nu.atoms().iter())
        .map(|a| a.x)
        .collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let mut dist = 0.0;
    let mut fa = 0.0;
    let mut fb = 0.0;
    let mut ia = 0;
    let mut ib = 0;
    for win in grid.windows(2) {
        let (t, next) = (win[0], win[1]);
        while ia < mu.len() && mu.atoms()[ia].x <= t {
            fa += mu.atoms()[ia].m;
            ia += 1;
        }
        while ib < nu.len() && nu.atoms()[ib].x <= t {
            fb += nu.atoms()[ib].m;
            ib += 1;
        }
        dist += (fa - fb).abs() * (next - t);
    }
    Ok(dist)
}

/// Bias level together with its derived constants: the distortion ratio
/// `a = β/(1−β)` and the clock horizon `t_β = log(1/β)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasParams {
    beta: f64,
    a: f64,
    t_beta: f64,
}

impl BiasParams {
    pub fn new(beta: f64) -> Result<Self> {
        if !beta.is_finite() || beta <= 0.0 || beta >= 1.0 {
            return Err(Error::OutOfRange(beta));
        }
        Ok(BiasParams {
            beta,
            a: beta / (1.0 - beta),
            t_beta: (1.0 / beta).ln(),
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn t_beta(&self) -> f64 {
        self.t_beta
    }
}

/// Piecewise-linear convex potential curve: zero left of the first kink,
/// slope equal to the total mass right of the last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialCurve {
    pub kinks: Vec<(f64, f64)>,
    pub right_slope: f64,
}

impl PotentialCurve {
    pub fn eval(&self, k: f64) -> f64 {
        if self.kinks.is_empty() {
            return 0.0;
        }
        if k <= self.kinks[0].0 {
            return 0.0;
        }
        let last = self.kinks.len() - 1;
        if k >= self.kinks[last].0 {
            return self.kinks[last].1 + self.right_slope * (k - self.kinks[last].0);
        }
        let idx = self.kinks.partition_point(|&(x, _)| x <= k);
        let (x0, y0) = self.kinks[idx - 1];
        let (x1, y1) = self.kinks[idx];
        y0 + (y1 - y0) * (k - x0) / (x1 - x0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(pairs: &[(f64, f64)]) -> DiscreteMeasure {
        make_measure(pairs).unwrap()
    }

    #[test]
    fn make_measure_sorts_and_merges() {
        let nu = m(&[(1.0, 0.5), (-1.0, 0.5)]);
        assert_eq!(nu.atoms(), &[Atom { x: -1.0, m: 0.5 }, Atom { x: 1.0, m: 0.5 }]);

        let merged = m(&[(0.0, 0.3), (0.0, 0.7)]);
        assert_eq!(merged.atoms(), &[Atom { x: 0.0, m: 1.0 }]);

        let fig4b = m(&[(2.0, 0.5), (-1.0, 0.25), (-3.0, 0.25)]);
        assert_eq!(
            fig4b.atoms(),
            &[
                Atom { x: -3.0, m: 0.25 },
                Atom { x: -1.0, m: 0.25 },
                Atom { x: 2.0, m: 0.5 }
            ]
        );
    }

    #[test]
    fn make_measure_rejects_bad_input() {
        assert!(matches!(
            make_measure(&[(f64::NAN, 1.0)]),
            Err(Error::NonFinite(_))
        ));
        assert!(matches!(
            make_measure(&[(0.0, f64::INFINITY)]),
            Err(Error::NonFinite(_))
        ));
        assert!(matches!(
            make_measure(&[(0.0, -1.0)]),
            Err(Error::Negative(_))
        ));
        // Masses within -τ_mass..0 are treated as zero.
        assert!(make_measure(&[(0.0, -1e-12)]).unwrap().is_empty());
    }

    #[test]
    fn barycenter_examples() {
        assert_eq!(m(&[(-1.0, 0.5), (1.0, 0.5)]).barycenter().unwrap(), 0.0);
        let fig4b = m(&[(2.0, 0.5), (-1.0, 0.25), (-3.0, 0.25)]);
        assert_eq!(fig4b.barycenter().unwrap(), 0.0);
        assert_eq!(DiscreteMeasure::dirac(5.0).barycenter().unwrap(), 5.0);
        assert_eq!(DiscreteMeasure::empty().barycenter(), Err(Error::EmptyMeasure));
    }

    #[test]
    fn split_boundary_goes_right() {
        let nu = m(&[(-1.0, 0.5), (1.0, 0.5)]);
        let (l, r) = nu.split_lr(0.0);
        assert_eq!(l.atoms(), &[Atom { x: -1.0, m: 0.5 }]);
        assert_eq!(r.atoms(), &[Atom { x: 1.0, m: 0.5 }]);

        let (l, r) = DiscreteMeasure::dirac(0.0).split_lr(0.0);
        assert!(l.is_empty());
        assert_eq!(r.atoms(), &[Atom { x: 0.0, m: 1.0 }]);

        let fig4b = m(&[(2.0, 0.5), (-1.0, 0.25), (-3.0, 0.25)]);
        let (l, r) = fig4b.split_lr(0.0);
        assert_eq!(l.total_mass(), 0.5);
        assert_eq!(r.atoms(), &[Atom { x: 2.0, m: 0.5 }]);
        let back = mixture(&[(1.0, l), (1.0, r)]).unwrap();
        assert_eq!(back, fig4b);
    }

    #[test]
    fn potential_examples() {
        let nu = m(&[(-1.0, 0.5), (1.0, 0.5)]);
        assert_eq!(nu.potential(0.0), 0.5);
        assert_eq!(nu.potential(-1.0), 0.0);
        assert_eq!(nu.potential(-5.0), 0.0);
        assert_eq!(DiscreteMeasure::dirac(0.0).potential(3.0), 3.0);
    }

    #[test]
    fn potential_curve_matches_pointwise() {
        let nu = m(&[(-3.0, 0.25), (-1.0, 0.25), (2.0, 0.5)]);
        let curve = nu.potential_curve();
        for k in [-4.0, -3.0, -2.0, -1.0, -0.5, 0.0, 1.0, 2.0, 3.5, 10.0] {
            assert!((curve.eval(k) - nu.potential(k)).abs() < 1e-15);
        }
        assert_eq!(curve.right_slope, 1.0);
    }

    #[test]
    fn quantile_steps() {
        let half = m(&[(-1.0, 0.5)]);
        assert_eq!(half.quantile(0.25).unwrap(), -1.0);
        let two = m(&[(-3.0, 0.25), (-1.0, 0.25)]);
        assert_eq!(two.quantile(0.25).unwrap(), -3.0);
        assert_eq!(two.quantile(0.3).unwrap(), -1.0);
        let sym = m(&[(-1.0, 0.5), (1.0, 0.5)]);
        assert_eq!(sym.quantile(1.0).unwrap(), 1.0);
        assert!(sym.quantile(0.0).is_err());
        assert!(sym.quantile(1.1).is_err());
    }

    #[test]
    fn pushforward_examples() {
        let sym = m(&[(-1.0, 0.5), (1.0, 0.5)]);
        assert_eq!(sym.pushforward(|y| -y).unwrap(), sym);
        assert_eq!(
            DiscreteMeasure::dirac(3.0).pushforward(|y| y + 2.0).unwrap(),
            DiscreteMeasure::dirac(5.0)
        );
        // Reflection at a(1/2) = 1 around 0.
        let left = m(&[(-1.0, 0.25), (-3.0, 0.25)]);
        assert_eq!(
            left.pushforward(|y| -y).unwrap(),
            m(&[(1.0, 0.25), (3.0, 0.25)])
        );
    }

    #[test]
    fn mixture_examples() {
        let sym = mixture(&[
            (0.5, DiscreteMeasure::dirac(1.0)),
            (0.5, DiscreteMeasure::dirac(-1.0)),
        ])
        .unwrap();
        assert_eq!(sym, m(&[(-1.0, 0.5), (1.0, 0.5)]));
        let nu = m(&[(-3.0, 0.25), (2.0, 0.75)]);
        assert_eq!(mixture(&[(1.0, nu.clone())]).unwrap(), nu);
    }

    #[test]
    fn w1_examples() {
        let nu = m(&[(-3.0, 0.25), (-1.0, 0.25), (2.0, 0.5)]);
        assert_eq!(w1(&nu, &nu).unwrap(), 0.0);
        assert_eq!(
            w1(&DiscreteMeasure::dirac(0.0), &DiscreteMeasure::dirac(3.0)).unwrap(),
            3.0
        );
        let sym = m(&[(-1.0, 0.5), (1.0, 0.5)]);
        assert_eq!(w1(&sym, &DiscreteMeasure::dirac(0.0)).unwrap(), 1.0);
        assert!(matches!(
            w1(&sym, &m(&[(0.0, 0.5)])),
            Err(Error::MassMismatch(_, _))
        ));
    }

    #[test]
    fn bias_params_roundtrip() {
        for beta in [1e-6, 0.1, 0.5, 0.9, 1.0 - 1e-9] {
            let p = BiasParams::new(beta).unwrap();
            assert!((p.a() / (1.0 + p.a()) - beta).abs() < 1e-12);
            assert!(((-p.t_beta()).exp() - beta).abs() < 1e-12);
        }
        assert!(BiasParams::new(0.0).is_err());
        assert!(BiasParams::new(1.0).is_err());
        assert!(BiasParams::new(1.5).is_err());
    }

    #[test]
    fn pushforward_preserves_mass_and_shifts_mean() {
        let nu = m(&[(-3.0, 0.25), (-1.0, 0.25), (2.0, 0.5)]);
        let shifted = nu.translate(4.0);
        assert!((shifted.total_mass() - nu.total_mass()).abs() < 1e-15);
        assert!((shifted.barycenter().unwrap() - nu.barycenter().unwrap() - 4.0).abs() < 1e-12);
    }
}
