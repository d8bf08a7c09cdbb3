//! Exact embeddings against the compensated Poisson clock: closed-form
//! piecewise-exponential integrands, exact terminal and intermediate laws,
//! seeded trajectory sampling, and the stopped (strong order) variant.
//!
//! A simple component with left quantiles `q(t) = Q(1 − e^{−t})` admits the
//! integrand `H(t) = c_j e^t` on the quantile pieces, with
//! `c_j = −(F(a_j) + q_j e^{−a_j})` and `F(t) = ∫₀ᵗ e^{−s} q(s) ds`
//! accumulated exactly; the drift stops at `log(1/γ)`.

use crate::coupling::{check_strong_biased_coupling, construct_biased_coupling, CouplingOutcome};
use crate::decompose::{decompose_biased_with, SimpleComponent};
use crate::error::{Error, Result};
use crate::measure::{make_measure, BiasParams, DiscreteMeasure};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Piecewise-exponential integrand `H(t) = c_j·e^t` on `[a_j, a_{j+1})`,
/// identically zero past the cutoff (the last breakpoint).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegrandSchedule {
    pub breaks: Vec<f64>,
    pub coefs: Vec<f64>,
    pub cutoff: f64,
}

impl IntegrandSchedule {
    pub fn empty() -> Self {
        IntegrandSchedule {
            breaks: vec![0.0],
            coefs: Vec::new(),
            cutoff: 0.0,
        }
    }

    pub fn n_pieces(&self) -> usize {
        self.coefs.len()
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t < 0.0 || t >= self.cutoff {
            return 0.0;
        }
        let j = self.breaks.partition_point(|&b| b <= t) - 1;
        if j < self.coefs.len() {
            self.coefs[j] * t.exp()
        } else {
            0.0
        }
    }

    /// `∫₀ᵗ H(s) ds` from exponential differences; no quadrature.
    pub fn drift(&self, t: f64) -> f64 {
        let t = t.min(self.cutoff);
        let mut acc = 0.0;
        for (j, &c) in self.coefs.iter().enumerate() {
            let lo = self.breaks[j];
            if t <= lo {
                break;
            }
            let hi = self.breaks[j + 1].min(t);
            acc += c * (hi.exp() - lo.exp());
        }
        acc
    }

    pub fn total_drift(&self) -> f64 {
        self.drift(self.cutoff)
    }

    /// Post-jump displacement for a jump inside piece `j`:
    /// `∫₀^τ H − H(τ) = drift(a_j) − c_j e^{a_j}`, constant on the piece.
    pub fn piece_value(&self, j: usize) -> f64 {
        self.drift(self.breaks[j]) - self.coefs[j] * self.breaks[j].exp()
    }

    /// Probability that the first jump lands in piece `j`.
    pub fn piece_mass(&self, j: usize) -> f64 {
        (-self.breaks[j]).exp() - (-self.breaks[j + 1]).exp()
    }
}

/// One simple component of an embedding: selection weight, the top atom it
/// reproduces, and the drift schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanComponent {
    #[serde(rename = "w")]
    pub weight: f64,
    pub gamma: f64,
    #[serde(rename = "M")]
    pub atom: f64,
    pub schedule: IntegrandSchedule,
}

/// Embedding data for one initial atom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanRow {
    pub x: f64,
    #[serde(rename = "p")]
    pub prob: f64,
    pub components: Vec<PlanComponent>,
}

/// Full embedding: initial law, per-atom component mixtures, and the common
/// clock horizon. `stopping_bound` is the largest component cutoff; for
/// strong plans it sits strictly below the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingPlan {
    pub beta: f64,
    pub t_beta: f64,
    pub initial: DiscreteMeasure,
    pub rows: Vec<PlanRow>,
    pub stopping_bound: f64,
}

/// Closed-form integrand reproducing a simple component around `x`.
pub fn integrand_for_simple(
    comp: &SimpleComponent,
    x: f64,
    beta: &BiasParams,
) -> Result<IntegrandSchedule> {
    comp.validate(x, beta)?;
    let gamma = comp.atom_mass.min(1.0);
    if comp.left.is_empty() {
        return Ok(IntegrandSchedule::empty());
    }
    let cutoff = -(gamma.ln());
    let mut breaks: Vec<f64> = Vec::with_capacity(comp.left.len() + 1);
    breaks.push(0.0);
    let mut coefs = Vec::with_capacity(comp.left.len());
    let mut cum = 0.0;
    let mut f_acc = 0.0; // F(a_j) accumulated per piece
    let n = comp.left.len();
    for (i, atom) in comp.left.atoms().iter().enumerate() {
        let q = atom.x - x; // centered quantile value, strictly negative
        if q >= 0.0 {
            return Err(Error::InvalidComponent(
                "left part reaches the center".into(),
            ));
        }
        let lo = *breaks.last().expect("nonempty");
        let c = -(f_acc + q * (-lo).exp());
        cum += atom.m;
        let hi = if i + 1 == n { cutoff } else { -(-cum).ln_1p() };
        f_acc += q * ((-lo).exp() - (-hi).exp());
        breaks.push(hi);
        coefs.push(c);
    }
    Ok(IntegrandSchedule {
        breaks,
        coefs,
        cutoff,
    })
}

fn rows_from_coupling(
    pi: &crate::coupling::DiscreteCoupling,
    beta: &BiasParams,
    strong: bool,
) -> Result<Vec<PlanRow>> {
    let mut rows = Vec::with_capacity(pi.xs.len());
    for i in 0..pi.xs.len() {
        let mass = pi.row_mass(i);
        if mass < crate::coupling::ROW_MASS_FLOOR {
            continue;
        }
        let x = pi.xs[i];
        let row = pi.row_measure(i)?.normalize()?;
        let decomp = decompose_biased_with(&row, x, beta, strong)?;
        let mut components = Vec::with_capacity(decomp.components.len());
        for c in &decomp.components {
            if strong && c.atom_mass <= beta.beta() {
                return Err(Error::NotInStrongOrder(c.atom_mass));
            }
            components.push(PlanComponent {
                weight: c.weight,
                gamma: c.atom_mass,
                atom: c.atom_location,
                schedule: integrand_for_simple(c, x, beta)?,
            });
        }
        rows.push(PlanRow {
            x,
            prob: mass,
            components,
        });
    }
    Ok(rows)
}

fn assemble_plan(
    pi: &crate::coupling::DiscreteCoupling,
    beta: &BiasParams,
    strong: bool,
) -> Result<EmbeddingPlan> {
    let rows = rows_from_coupling(pi, beta, strong)?;
    let stopping_bound = rows
        .iter()
        .flat_map(|r| r.components.iter())
        .map(|c| c.schedule.cutoff)
        .fold(0.0, f64::max);
    Ok(EmbeddingPlan {
        beta: beta.beta(),
        t_beta: beta.t_beta(),
        initial: pi.row_marginal()?,
        rows,
        stopping_bound,
    })
}

/// Builds the embedding realizing `μ ≺_β ν`: a biased coupling, a simple
/// decomposition of every kernel, and one schedule per component.
pub fn plan_embedding(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    beta: &BiasParams,
) -> Result<EmbeddingPlan> {
    match construct_biased_coupling(mu, nu, beta)? {
        CouplingOutcome::Feasible(pi) => assemble_plan(&pi, beta, false),
        CouplingOutcome::Infeasible(_) => Err(Error::NotInBiasedOrder),
    }
}

/// Strong-order variant: every component's atom mass strictly exceeds β, so
/// every cutoff sits strictly below the horizon and acts as a stopping time.
pub fn strong_plan(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    beta: &BiasParams,
    margin: f64,
) -> Result<EmbeddingPlan> {
    match check_strong_biased_coupling(mu, nu, beta, margin)? {
        CouplingOutcome::Feasible(pi) => assemble_plan(&pi, beta, true),
        CouplingOutcome::Infeasible(_) => Err(Error::NotInStrongOrder(margin)),
    }
}

/// Exact law of the embedding at the horizon, computed from the schedules:
/// each component contributes `γ` at its drift top and the piece masses at
/// the post-jump values.
pub fn exact_terminal_law(plan: &EmbeddingPlan) -> Result<DiscreteMeasure> {
    let mut pairs = Vec::new();
    for row in &plan.rows {
        for c in &row.components {
            let w = row.prob * c.weight;
            pairs.push((row.x + c.schedule.total_drift(), w * c.gamma));
            for j in 0..c.schedule.n_pieces() {
                pairs.push((row.x + c.schedule.piece_value(j), w * c.schedule.piece_mass(j)));
            }
        }
    }
    make_measure(&pairs)
}

/// Exact law of the embedding at an intermediate time `0 ≤ t ≤ t_β`.
pub fn marginal_law(plan: &EmbeddingPlan, t: f64) -> Result<DiscreteMeasure> {
    let mut pairs = Vec::new();
    for row in &plan.rows {
        for c in &row.components {
            let w = row.prob * c.weight;
            let horizon = t.min(c.schedule.cutoff);
            // No jump before the horizon: sitting at the accumulated drift.
            pairs.push((row.x + c.schedule.drift(horizon), w * (-horizon).exp()));
            for j in 0..c.schedule.n_pieces() {
                let lo = c.schedule.breaks[j];
                if horizon <= lo {
                    break;
                }
                let hi = c.schedule.breaks[j + 1].min(horizon);
                let mass = (-lo).exp() - (-hi).exp();
                pairs.push((row.x + c.schedule.piece_value(j), w * mass));
            }
        }
    }
    make_measure(&pairs)
}

/// One simulated path: grid samples, the jump time when it lands before the
/// cutoff, and the terminal value.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub points: Vec<(f64, f64)>,
    pub jump_time: Option<f64>,
    pub terminal: f64,
}

struct Draw {
    x: f64,
    component: PlanComponent,
    tau: f64,
}

fn draw_one(plan: &EmbeddingPlan, rng: &mut ChaCha8Rng) -> Draw {
    let u_row: f64 = rng.gen();
    let total: f64 = plan.rows.iter().map(|r| r.prob).sum();
    let mut acc = 0.0;
    let mut row = plan.rows.last().expect("plan has rows");
    for r in &plan.rows {
        acc += r.prob / total;
        if u_row < acc {
            row = r;
            break;
        }
    }
    let u_comp: f64 = rng.gen();
    let wsum: f64 = row.components.iter().map(|c| c.weight).sum();
    let mut cacc = 0.0;
    let mut comp = row.components.last().expect("row has components");
    for c in &row.components {
        cacc += c.weight / wsum;
        if u_comp < cacc {
            comp = c;
            break;
        }
    }
    let u_exp: f64 = rng.gen();
    let tau = -(-u_exp).ln_1p(); // Exp(1) by inverse CDF
    Draw {
        x: row.x,
        component: comp.clone(),
        tau,
    }
}

fn terminal_of(draw: &Draw) -> f64 {
    let s = &draw.component.schedule;
    if draw.tau >= s.cutoff || s.n_pieces() == 0 {
        draw.x + s.total_drift()
    } else {
        let j = s.breaks.partition_point(|&b| b <= draw.tau) - 1;
        let j = j.min(s.n_pieces() - 1);
        draw.x + s.piece_value(j)
    }
}

/// Terminal value of sample `index` under the given seed. Each index owns a
/// substream of a counter-based generator, so any partition of the index
/// range reproduces the sequential output.
pub fn sample_indexed(plan: &EmbeddingPlan, index: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    terminal_of(&draw_one(plan, &mut rng))
}

/// Seeded terminal samples.
pub fn sample(plan: &EmbeddingPlan, n: usize, seed: u64) -> Vec<f64> {
    (0..n).map(|i| sample_indexed(plan, i, seed)).collect()
}

/// Seeded trajectories on a uniform grid over `[0, t_β]` with the exact jump
/// time inserted. Shares substreams with [`sample`]: path `i` ends at the
/// same terminal value as sample `i`.
pub fn sample_paths(plan: &EmbeddingPlan, grid_points: usize, n: usize, seed: u64) -> Vec<Trajectory> {
    let grid_points = grid_points.max(2);
    let horizon = plan.t_beta;
    (0..n)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let draw = draw_one(plan, &mut rng);
            let terminal = terminal_of(&draw);
            let s = &draw.component.schedule;
            let jumped = draw.tau < s.cutoff && s.n_pieces() > 0;
            let mut times: Vec<f64> = (0..grid_points)
                .map(|k| horizon * k as f64 / (grid_points - 1) as f64)
                .collect();
            if jumped {
                times.push(draw.tau);
                times.sort_by(f64::total_cmp);
            }
            let points = times
                .into_iter()
                .map(|t| {
                    let v = if jumped && t >= draw.tau {
                        terminal
                    } else {
                        draw.x + s.drift(t)
                    };
                    (t, v)
                })
                .collect();
            Trajectory {
                points,
                jump_time: jumped.then_some(draw.tau),
                terminal,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::w1;
    use crate::order::is_beta_biased;

    fn m(pairs: &[(f64, f64)]) -> DiscreteMeasure {
        make_measure(pairs).unwrap()
    }

    fn bp(beta: f64) -> BiasParams {
        BiasParams::new(beta).unwrap()
    }

    #[test]
    fn integrand_symmetric_two_point() {
        // ν = ½δ_{-1}+½δ_1 around 0 at γ = 1/2: single piece H(t) = e^t.
        let comp = SimpleComponent {
            weight: 1.0,
            left: m(&[(-1.0, 0.5)]),
            atom_location: 1.0,
            atom_mass: 0.5,
        };
        let s = integrand_for_simple(&comp, 0.0, &bp(0.5)).unwrap();
        assert_eq!(s.n_pieces(), 1);
        assert!((s.coefs[0] - 1.0).abs() <= 1e-12);
        assert!((s.cutoff - 2f64.ln()).abs() <= 1e-12);
        assert!((s.total_drift() - 1.0).abs() <= 1e-12, "∫H = S(ν)");
    }

    #[test]
    fn integrand_two_piece_fig4b() {
        let comp = SimpleComponent {
            weight: 1.0,
            left: m(&[(-3.0, 0.25), (-1.0, 0.25)]),
            atom_location: 2.0,
            atom_mass: 0.5,
        };
        let s = integrand_for_simple(&comp, 0.0, &bp(0.5)).unwrap();
        assert_eq!(s.n_pieces(), 2);
        assert!((s.coefs[0] - 3.0).abs() <= 1e-12);
        assert!((s.coefs[1] - 1.5).abs() <= 1e-12);
        assert!((s.breaks[1] - (4.0f64 / 3.0).ln()).abs() <= 1e-12);
        assert!((s.total_drift() - 2.0).abs() <= 1e-12);
    }

    #[test]
    fn integrand_dirac_empty() {
        let comp = SimpleComponent::dirac(1.0, 4.0);
        let s = integrand_for_simple(&comp, 4.0, &bp(0.3)).unwrap();
        assert_eq!(s.n_pieces(), 0);
        assert_eq!(s.cutoff, 0.0);
    }

    #[test]
    fn volterra_identity_on_piece_interiors() {
        let comp = SimpleComponent {
            weight: 1.0,
            left: m(&[(-3.0, 0.25), (-1.0, 0.25)]),
            atom_location: 2.0,
            atom_mass: 0.5,
        };
        let left = comp.left.clone();
        let s = integrand_for_simple(&comp, 0.0, &bp(0.5)).unwrap();
        for j in 0..s.n_pieces() {
            let t = 0.5 * (s.breaks[j] + s.breaks[j + 1]);
            let lhs = s.drift(t) - s.eval(t);
            let q = left.quantile(1.0 - (-t).exp()).unwrap();
            assert!((lhs - q).abs() < 1e-9, "piece {j}: {lhs} vs {q}");
            assert!(s.eval(t) >= 0.0, "integrand stays nonnegative");
        }
    }

    #[test]
    fn plan_and_exact_law_fig4a() {
        let mu = DiscreteMeasure::dirac(0.0);
        let nu = m(&[(-1.0, 0.5), (1.0, 0.5)]);
        let plan = plan_embedding(&mu, &nu, &bp(0.5)).unwrap();
        assert_eq!(plan.rows.len(), 1);
        assert_eq!(plan.rows[0].components.len(), 1);
        let law = exact_terminal_law(&plan).unwrap();
        assert!(w1(&law, &nu).unwrap() <= 1e-9);
    }

    #[test]
    fn plan_identity_embedding_is_empty() {
        let nu = m(&[(-1.0, 0.5), (1.0, 0.5)]);
        let plan = plan_embedding(&nu, &nu, &bp(0.4)).unwrap();
        for row in &plan.rows {
            for c in &row.components {
                assert_eq!(c.schedule.n_pieces(), 0, "identity embedding never drifts");
            }
        }
        let law = exact_terminal_law(&plan).unwrap();
        assert!(w1(&law, &nu).unwrap() <= 1e-12);
    }

    #[test]
    fn plan_fig4b_law_exact() {
        let mu = DiscreteMeasure::dirac(0.0);
        let nu = m(&[(2.0, 0.5), (-1.0, 0.25), (-3.0, 0.25)]);
        let plan = plan_embedding(&mu, &nu, &bp(0.5)).unwrap();
        let law = exact_terminal_law(&plan).unwrap();
        assert!(w1(&law, &nu).unwrap() <= 1e-9);
    }

    #[test]
    fn strong_plan_cutoffs_below_horizon() {
        let mu = DiscreteMeasure::dirac(0.0);
        let nu = m(&[(-1.0, 0.5), (1.0, 0.5)]);
        let beta = bp(0.4);
        let plan = strong_plan(&mu, &nu, &beta, 1e-4).unwrap();
        assert!(plan.stopping_bound < beta.t_beta());
        assert!((plan.stopping_bound - 2f64.ln()).abs() < 1e-9, "cutoff ln 2");
        let law = exact_terminal_law(&plan).unwrap();
        assert!(w1(&law, &nu).unwrap() <= 1e-9);

        assert!(matches!(
            strong_plan(&mu, &nu, &bp(0.5), 1e-4),
            Err(Error::NotInStrongOrder(_))
        ));

        let d = DiscreteMeasure::dirac(1.0);
        let trivial = strong_plan(&d, &d, &bp(0.7), 1e-4).unwrap();
        assert_eq!(trivial.stopping_bound, 0.0);
    }

    #[test]
    fn no_jump_mass_matches_gamma() {
        let mu = DiscreteMeasure::dirac(0.0);
        let nu = m(&[(2.0, 0.5), (-1.0, 0.25), (-3.0, 0.25)]);
        let plan = plan_embedding(&mu, &nu, &bp(0.5)).unwrap();
        let law = exact_terminal_law(&plan).unwrap();
        // P(no jump) = γ sits at the top of support.
        let c = &plan.rows[0].components[0];
        let top_mass = law.mass_at(plan.rows[0].x + c.schedule.total_drift());
        assert!((top_mass - c.weight * c.gamma).abs() < 1e-12);
    }

    #[test]
    fn sampled_paths_monotone_then_constant() {
        let mu = DiscreteMeasure::dirac(0.0);
        let nu = m(&[(2.0, 0.5), (-1.0, 0.25), (-3.0, 0.25)]);
        let plan = plan_embedding(&mu, &nu, &bp(0.5)).unwrap();
        let paths = sample_paths(&plan, 50, 20, 7);
        let terminals = sample(&plan, 20, 7);
        for (p, &t_direct) in paths.iter().zip(&terminals) {
            assert_eq!(p.terminal, t_direct, "paths share substreams with sample");
            let jump = p.jump_time.unwrap_or(f64::INFINITY);
            let mut prev = f64::NEG_INFINITY;
            for &(t, v) in &p.points {
                if t < jump {
                    assert!(v >= prev - 1e-12, "drift is increasing");
                    prev = v;
                } else {
                    assert_eq!(v, p.terminal, "constant after the jump");
                }
            }
        }
    }

    #[test]
    fn empirical_frequency_near_exact_law() {
        let mu = DiscreteMeasure::dirac(0.0);
        let nu = m(&[(-1.0, 0.5), (1.0, 0.5)]);
        let plan = plan_embedding(&mu, &nu, &bp(0.5)).unwrap();
        let n = 100_000;
        let hits = sample(&plan, n, 42)
            .into_iter()
            .filter(|&v| (v - 1.0).abs() < 1e-9)
            .count();
        let p_hat = hits as f64 / n as f64;
        // 3σ binomial band around 1/2.
        assert!((p_hat - 0.5).abs() < 3.0 * 0.5 / (n as f64).sqrt());
    }

    #[test]
    fn marginal_laws_are_biased_snapshots() {
        let mu = DiscreteMeasure::dirac(0.0);
        let nu = m(&[(2.0, 0.5), (-1.0, 0.25), (-3.0, 0.25)]);
        let beta = bp(0.5);
        let plan = plan_embedding(&mu, &nu, &beta).unwrap();
        let t = 0.3;
        let law = marginal_law(&plan, t).unwrap();
        assert!(law.is_probability());
        // The time-t marginal is e^{-t}-biased around the start.
        let bt = BiasParams::new((-t).exp()).unwrap();
        assert!(is_beta_biased(&law, 0.0, &bt).holds);
        // At the horizon it matches the terminal law.
        let end = marginal_law(&plan, beta.t_beta()).unwrap();
        let terminal = exact_terminal_law(&plan).unwrap();
        assert!(w1(&end, &terminal).unwrap() < 1e-12);
    }
}
