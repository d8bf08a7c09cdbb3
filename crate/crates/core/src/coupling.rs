//! Biased martingale couplings between discrete marginals: existence and
//! construction by LP feasibility, the margin-based strong variant, gluing
//! through a shared middle marginal, and row-wise verification.
//!
//! The per-row bias criterion is a finite family of potential inequalities:
//! both sides are piecewise linear in the strike with kinks only at column
//! atoms, their reflections, and the row center, so the LP decides membership
//! exactly.

use crate::envelope::PiecewiseLinear;
use crate::error::{Error, Result};
use crate::lp::{solve, FarkasCertificate, LinearProgram, LpStatus};
use crate::measure::{
    make_measure, BiasParams, DiscreteMeasure, MERGE_TOL, TAU_MASS, TAU_MEAN,
};
use crate::order::{is_beta_biased, is_strongly_beta_biased, reflect, OrderVerdict};
use serde::{Deserialize, Serialize};

/// Rows with less mass than this are skipped by row-wise checks.
pub const ROW_MASS_FLOOR: f64 = 1e-14;

/// Joint weight matrix over a product grid of atom locations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteCoupling {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub w: Vec<Vec<f64>>,
}

impl<'de> Deserialize<'de> for DiscreteCoupling {
    fn deserialize<D>(deserializer: D) -> std::result::Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        #[derive(Deserialize)]
        struct Raw {
            xs: Vec<f64>,
            ys: Vec<f64>,
            w: Vec<Vec<f64>>,
        }
        let raw = Raw::deserialize(deserializer)?;
        DiscreteCoupling::new(raw.xs, raw.ys, raw.w).map_err(serde::de::Error::custom)
    }
}

impl DiscreteCoupling {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, w: Vec<Vec<f64>>) -> Result<Self> {
        if w.len() != xs.len() || w.iter().any(|row| row.len() != ys.len()) {
            return Err(Error::OutOfRange(w.len() as f64));
        }
        for row in &w {
            for &v in row {
                if !v.is_finite() {
                    return Err(Error::NonFinite(v));
                }
                if v < -TAU_MASS {
                    return Err(Error::Negative(v));
                }
            }
        }
        Ok(DiscreteCoupling { xs, ys, w })
    }

    /// The coupling that leaves every atom of `nu` in place.
    pub fn identity(nu: &DiscreteMeasure) -> Self {
        let xs: Vec<f64> = nu.atoms().iter().map(|a| a.x).collect();
        let n = xs.len();
        let mut w = vec![vec![0.0; n]; n];
        for (i, a) in nu.atoms().iter().enumerate() {
            w[i][i] = a.m;
        }
        DiscreteCoupling {
            xs: xs.clone(),
            ys: xs,
            w,
        }
    }

    pub fn row_mass(&self, i: usize) -> f64 {
        self.w[i].iter().sum()
    }

    pub fn col_mass(&self, j: usize) -> f64 {
        self.w.iter().map(|row| row[j]).sum()
    }

    pub fn row_marginal(&self) -> Result<DiscreteMeasure> {
        let pairs: Vec<(f64, f64)> = self
            .xs
            .iter()
            .enumerate()
            .map(|(i, &x)| (x, self.row_mass(i)))
            .collect();
        make_measure(&pairs)
    }

    pub fn col_marginal(&self) -> Result<DiscreteMeasure> {
        let pairs: Vec<(f64, f64)> = self
            .ys
            .iter()
            .enumerate()
            .map(|(j, &y)| (y, self.col_mass(j)))
            .collect();
        make_measure(&pairs)
    }

    /// Unnormalized conditional measure of row `i`.
    pub fn row_measure(&self, i: usize) -> Result<DiscreteMeasure> {
        let pairs: Vec<(f64, f64)> = self
            .ys
            .iter()
            .zip(&self.w[i])
            .map(|(&y, &m)| (y, m))
            .collect();
        make_measure(&pairs)
    }

    /// Martingale residual `Σ_j w_ij (y_j − x_i)` of row `i`.
    pub fn martingale_residual(&self, i: usize) -> f64 {
        self.ys
            .iter()
            .zip(&self.w[i])
            .map(|(&y, &m)| m * (y - self.xs[i]))
            .sum()
    }

    /// Checks marginals and per-row martingale identities.
    pub fn is_martingale_coupling(&self, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> bool {
        let Ok(rm) = self.row_marginal() else { return false };
        let Ok(cm) = self.col_marginal() else { return false };
        let close = |a: &DiscreteMeasure, b: &DiscreteMeasure| {
            crate::measure::w1(a, b).map(|d| d <= 1e-7).unwrap_or(false)
        };
        if !close(&rm, mu) || !close(&cm, nu) {
            return false;
        }
        (0..self.xs.len())
            .all(|i| self.martingale_residual(i).abs() <= TAU_MEAN * self.row_mass(i).max(1e-12))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum RowKind {
    RowMass(usize),
    ColMass(usize),
    Martingale(usize),
    BiasMass(usize),
    Strike(usize, f64),
    StrongBias(usize),
    ZeroAtBoundary(usize),
}

struct BiasedLp {
    lp: LinearProgram,
    eq_kinds: Vec<RowKind>,
    ineq_kinds: Vec<RowKind>,
}

/// Per-row test strikes: column atoms at or right of the center, reflections
/// of columns strictly left of it, and the center itself.
fn row_strikes(x: f64, ys: &[f64], beta: &BiasParams) -> Vec<f64> {
    let mut ks: Vec<f64> = Vec::with_capacity(ys.len() + 1);
    for &y in ys {
        if y >= x {
            ks.push(y);
        } else {
            ks.push(reflect(y, x, beta));
        }
    }
    ks.push(x);
    ks.sort_by(f64::total_cmp);
    ks.dedup_by(|a, b| (*a - *b).abs() <= MERGE_TOL);
    ks
}

fn build_biased_lp(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    beta: &BiasParams,
    strong_margin: Option<f64>,
) -> BiasedLp {
    let xs: Vec<f64> = mu.atoms().iter().map(|a| a.x).collect();
    let ys: Vec<f64> = nu.atoms().iter().map(|a| a.x).collect();
    let (n, m) = (xs.len(), ys.len());
    let a = beta.a();
    let idx = |i: usize, j: usize| i * m + j;
    let mut lp = LinearProgram::new(n * m);
    let mut eq_kinds = Vec::new();
    let mut ineq_kinds = Vec::new();

    for (i, atom) in mu.atoms().iter().enumerate() {
        let mut row = vec![0.0; n * m];
        for j in 0..m {
            row[idx(i, j)] = 1.0;
        }
        lp.add_eq(row, atom.m);
        eq_kinds.push(RowKind::RowMass(i));
    }
    for (j, atom) in nu.atoms().iter().enumerate() {
        let mut row = vec![0.0; n * m];
        for i in 0..n {
            row[idx(i, j)] = 1.0;
        }
        lp.add_eq(row, atom.m);
        eq_kinds.push(RowKind::ColMass(j));
    }
    for (i, &x) in xs.iter().enumerate() {
        let mut row = vec![0.0; n * m];
        for (j, &y) in ys.iter().enumerate() {
            row[idx(i, j)] = y - x;
        }
        lp.add_eq(row, 0.0);
        eq_kinds.push(RowKind::Martingale(i));
    }

    for (i, &x) in xs.iter().enumerate() {
        let mu_i = mu.atoms()[i].m;
        let center_col = ys.iter().position(|&y| (y - x).abs() <= MERGE_TOL);
        match strong_margin {
            None => {
                // α_i ≥ 0: right mass dominates a times the left mass.
                let mut row = vec![0.0; n * m];
                for (j, &y) in ys.iter().enumerate() {
                    row[idx(i, j)] = if y < x { a } else { -1.0 };
                }
                lp.add_ineq(row, 0.0);
                ineq_kinds.push(RowKind::BiasMass(i));
            }
            Some(eps) => {
                // After stripping the center atom c_i: α_i − c_i ≥ ε(μ_i − c_i).
                let mut row = vec![0.0; n * m];
                for (j, &y) in ys.iter().enumerate() {
                    row[idx(i, j)] = if y < x { a } else { -1.0 };
                }
                if let Some(jx) = center_col {
                    row[idx(i, jx)] = -eps;
                }
                lp.add_ineq(row, -eps * mu_i);
                ineq_kinds.push(RowKind::StrongBias(i));
            }
        }

        let has_left = ys.first().map_or(false, |&y| y < x);
        let s_max = if has_left { reflect(ys[0], x, beta) } else { x };
        if strong_margin.is_some() && has_left {
            // No mass exactly at the support bound point of the row.
            for (j, &y) in ys.iter().enumerate() {
                if y >= x && (y - s_max).abs() <= 1e-9 {
                    let mut row = vec![0.0; n * m];
                    row[idx(i, j)] = 1.0;
                    lp.add_ineq(row, 0.0);
                    ineq_kinds.push(RowKind::ZeroAtBoundary(i));
                }
            }
        }

        for k in row_strikes(x, &ys, beta) {
            if k <= x + MERGE_TOL {
                continue; // trivial row of zeros
            }
            let mut row = vec![0.0; n * m];
            for (j, &y) in ys.iter().enumerate() {
                if y >= x {
                    row[idx(i, j)] = (k - y).max(0.0) - (k - x);
                } else {
                    let r = reflect(y, x, beta);
                    row[idx(i, j)] = a * ((k - x) - (k - r).max(0.0));
                }
            }
            // Strikes strictly inside the row's maximal irreducibility
            // interval must hold with slack in strong mode.
            let rhs = match strong_margin {
                Some(eps) if has_left && k < s_max - MERGE_TOL => -eps * mu_i,
                _ => 0.0,
            };
            lp.add_ineq(row, rhs);
            ineq_kinds.push(RowKind::Strike(i, k));
        }
    }

    BiasedLp {
        lp,
        eq_kinds,
        ineq_kinds,
    }
}

/// Infeasibility report: the raw Farkas certificate together with a payoff
/// witnessing the dual violation `μ(g_β) > ν(g)` (exact mode only; the
/// margin-based strong check is one-sided and carries no payoff).
#[derive(Debug, Clone)]
pub struct Infeasibility {
    pub certificate: FarkasCertificate,
    pub payoff: Option<PiecewiseLinear>,
}

#[derive(Debug, Clone)]
pub enum CouplingOutcome {
    Feasible(DiscreteCoupling),
    Infeasible(Infeasibility),
}

impl CouplingOutcome {
    pub fn coupling(self) -> Option<DiscreteCoupling> {
        match self {
            CouplingOutcome::Feasible(c) => Some(c),
            CouplingOutcome::Infeasible(_) => None,
        }
    }

    pub fn is_feasible(&self) -> bool {
        matches!(self, CouplingOutcome::Feasible(_))
    }
}

fn coupling_from_point(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    point: &[f64],
) -> DiscreteCoupling {
    let xs: Vec<f64> = mu.atoms().iter().map(|a| a.x).collect();
    let ys: Vec<f64> = nu.atoms().iter().map(|a| a.x).collect();
    let m = ys.len();
    let w = (0..xs.len())
        .map(|i| (0..m).map(|j| point[i * m + j].max(0.0)).collect())
        .collect();
    DiscreteCoupling { xs, ys, w }
}

/// Decides `μ ≺_β ν` and constructs a coupling whose rows are all β-biased
/// around their conditioning point. Infeasibility comes with a Farkas
/// certificate and a payoff realizing the dual violation.
pub fn construct_biased_coupling(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    beta: &BiasParams,
) -> Result<CouplingOutcome> {
    if !mu.is_probability() {
        return Err(Error::MassMismatch(mu.total_mass(), 1.0));
    }
    if !nu.is_probability() {
        return Err(Error::MassMismatch(nu.total_mass(), 1.0));
    }
    let parts = build_biased_lp(mu, nu, beta, None);
    let out = solve(&parts.lp)?;
    match out.status {
        LpStatus::Feasible => Ok(CouplingOutcome::Feasible(coupling_from_point(
            mu,
            nu,
            &out.point.expect("feasible outcome carries a point"),
        ))),
        LpStatus::Infeasible => {
            let certificate = out.certificate.expect("infeasible outcome carries a certificate");
            let payoff = farkas_payoff(mu, nu, beta, &parts, &certificate);
            Ok(CouplingOutcome::Infeasible(Infeasibility {
                certificate,
                payoff,
            }))
        }
    }
}

/// One-sided decision for the strong order at margin `ε`: a feasible point
/// yields a coupling whose rows are strongly β-biased; infeasibility only
/// means "no coupling at margin ε".
pub fn check_strong_biased_coupling(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    beta: &BiasParams,
    margin: f64,
) -> Result<CouplingOutcome> {
    if margin <= 0.0 {
        return Err(Error::OutOfRange(margin));
    }
    if !mu.is_probability() {
        return Err(Error::MassMismatch(mu.total_mass(), 1.0));
    }
    if !nu.is_probability() {
        return Err(Error::MassMismatch(nu.total_mass(), 1.0));
    }
    let parts = build_biased_lp(mu, nu, beta, Some(margin));
    let out = solve(&parts.lp)?;
    match out.status {
        LpStatus::Feasible => Ok(CouplingOutcome::Feasible(coupling_from_point(
            mu,
            nu,
            &out.point.expect("feasible outcome carries a point"),
        ))),
        LpStatus::Infeasible => Ok(CouplingOutcome::Infeasible(Infeasibility {
            certificate: out.certificate.expect("infeasible outcome carries a certificate"),
            payoff: None,
        })),
    }
}

/// Converts a Farkas certificate of the exact LP into a payoff `g` with
/// `μ(g_β) > ν(g)`.
///
/// With multipliers `r_i, c_j, m_i` on the equality rows and `b_i, s_ik ≥ 0`
/// on the bias rows, the certificate states `r_i + c_j + φ_i(y_j) ≥ 0` on the
/// grid and `Σ r_i μ_i + Σ c_j ν_j < 0`, where `φ_i` collects the bias-row
/// column profiles. Every biased kernel integrates each profile to at most
/// zero, so `g := max_i (−r_i − φ_i)` has `g_β(x_i) ≥ −r_i` while
/// `ν(g) ≤ Σ c_j ν_j`. The sign jump of the mass profile at the center is
/// replaced by a steep ramp placed strictly between grid points.
fn farkas_payoff(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    beta: &BiasParams,
    parts: &BiasedLp,
    cert: &FarkasCertificate,
) -> Option<PiecewiseLinear> {
    let n = mu.len();
    let a = beta.a();
    let mut r = vec![0.0; n];
    let mut c = vec![0.0; nu.len()];
    let mut mart = vec![0.0; n];
    for (kind, &y) in parts.eq_kinds.iter().zip(&cert.eq_multipliers) {
        match *kind {
            RowKind::RowMass(i) => r[i] = y,
            RowKind::ColMass(j) => c[j] = y,
            RowKind::Martingale(i) => mart[i] = y,
            _ => {}
        }
    }
    let mut bias = vec![0.0; n];
    let mut strikes: Vec<Vec<(f64, f64)>> = vec![Vec::new(); n];
    for (kind, &y) in parts.ineq_kinds.iter().zip(&cert.ineq_multipliers) {
        match *kind {
            RowKind::BiasMass(i) => bias[i] = y.max(0.0),
            RowKind::Strike(i, k) => strikes[i].push((k, y.max(0.0))),
            _ => return None, // strong rows carry no payoff construction
        }
    }
    let gap: f64 = -(mu
        .atoms()
        .iter()
        .zip(&r)
        .map(|(atom, y)| atom.m * y)
        .sum::<f64>()
        + nu
            .atoms()
            .iter()
            .zip(&c)
            .map(|(atom, y)| atom.m * y)
            .sum::<f64>());
    if gap <= 1e-12 {
        return None;
    }
    let scale = 1.0 / gap;

    let mut g: Option<PiecewiseLinear> = None;
    for (i, atom) in mu.atoms().iter().enumerate() {
        let x = atom.x;
        // φ_i = m_i (y − x) + b_i χ̃(y) + Σ_k s_ik ψ_k(y), all scaled.
        let mut phi = PiecewiseLinear {
            kinks: vec![(x, 0.0)],
            left_slope: mart[i] * scale,
            right_slope: mart[i] * scale,
        };
        if bias[i] > 0.0 {
            let below = nu
                .atoms()
                .iter()
                .map(|a| a.x)
                .filter(|&y| y < x - MERGE_TOL)
                .fold(f64::NEG_INFINITY, f64::max);
            let delta = if below.is_finite() {
                (0.5 * (x - below)).min(0.5)
            } else {
                0.5
            };
            let ramp = PiecewiseLinear {
                kinks: vec![(x - delta, a), (x, -1.0)],
                left_slope: 0.0,
                right_slope: 0.0,
            };
            phi = phi.add(&ramp.scale(bias[i] * scale));
        }
        for &(k, s) in &strikes[i] {
            if s <= 0.0 {
                continue;
            }
            let rk = reflect(k, x, beta);
            let psi = PiecewiseLinear {
                kinks: vec![(rk, a * (k - x)), (k, x - k)],
                left_slope: 0.0,
                right_slope: 0.0,
            };
            phi = phi.add(&psi.scale(s * scale));
        }
        let piece = phi
            .scale(-1.0)
            .add(&PiecewiseLinear::constant(-r[i] * scale));
        g = Some(match g {
            None => piece,
            Some(acc) => acc.max(&piece),
        });
    }
    g
}

/// Kernel composition through the shared middle marginal:
/// `ŵ_ij = Σ_k w1_ik w2_kj / ν1_k`.
pub fn glue(pi1: &DiscreteCoupling, pi2: &DiscreteCoupling) -> Result<DiscreteCoupling> {
    let mid_mass_1: Vec<f64> = (0..pi1.ys.len()).map(|k| pi1.col_mass(k)).collect();
    let mid_mass_2: Vec<f64> = (0..pi2.xs.len()).map(|k| pi2.row_mass(k)).collect();
    // Match every positive-mass middle atom of π1 to a row of π2.
    let mut link = vec![usize::MAX; pi1.ys.len()];
    for (k, &y) in pi1.ys.iter().enumerate() {
        if mid_mass_1[k] <= ROW_MASS_FLOOR {
            continue;
        }
        let found = pi2
            .xs
            .iter()
            .position(|&x| (x - y).abs() <= 1e-9)
            .ok_or(Error::MarginalMismatch)?;
        if (mid_mass_1[k] - mid_mass_2[found]).abs() > TAU_MASS {
            return Err(Error::MarginalMismatch);
        }
        link[k] = found;
    }
    for (k2, &m2) in mid_mass_2.iter().enumerate() {
        if m2 > TAU_MASS && !link.contains(&k2) {
            return Err(Error::MarginalMismatch);
        }
    }
    let mut w = vec![vec![0.0; pi2.ys.len()]; pi1.xs.len()];
    for i in 0..pi1.xs.len() {
        for (k, &wik) in pi1.w[i].iter().enumerate() {
            if wik <= 0.0 || link[k] == usize::MAX {
                continue;
            }
            let k2 = link[k];
            let inv = 1.0 / mid_mass_2[k2];
            for (j, &wkj) in pi2.w[k2].iter().enumerate() {
                w[i][j] += wik * wkj * inv;
            }
        }
    }
    DiscreteCoupling::new(pi1.xs.clone(), pi2.ys.clone(), w)
}

/// Applies the (strongly) biased check to every row kernel with positive
/// mass and aggregates the minimal margin.
pub fn rows_biased(pi: &DiscreteCoupling, beta: &BiasParams, strong: bool) -> OrderVerdict {
    let mut holds = true;
    let mut margin = f64::INFINITY;
    let mut witness = None;
    let mut reason = String::new();
    for i in 0..pi.xs.len() {
        let mass = pi.row_mass(i);
        if mass < ROW_MASS_FLOOR {
            continue;
        }
        let Ok(row) = pi.row_measure(i).and_then(|m| m.normalize()) else {
            continue;
        };
        let v = if strong {
            is_strongly_beta_biased(&row, pi.xs[i], beta)
        } else {
            is_beta_biased(&row, pi.xs[i], beta)
        };
        if v.margin < margin {
            margin = v.margin;
        }
        if !v.holds && holds {
            holds = false;
            witness = Some(pi.xs[i]);
            reason = format!("row at {} fails: {}", pi.xs[i], v.reason);
        }
    }
    OrderVerdict {
        holds,
        margin,
        witness,
        reason,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envelope::{beta_envelope, EnvelopeValue};

    fn m(pairs: &[(f64, f64)]) -> DiscreteMeasure {
        make_measure(pairs).unwrap()
    }

    fn bp(beta: f64) -> BiasParams {
        BiasParams::new(beta).unwrap()
    }

    #[test]
    fn dirac_to_symmetric_at_half() {
        let mu = DiscreteMeasure::dirac(0.0);
        let nu = m(&[(-1.0, 0.5), (1.0, 0.5)]);
        let out = construct_biased_coupling(&mu, &nu, &bp(0.5)).unwrap();
        let pi = out.coupling().expect("the symmetric target is 1/2-biased");
        assert!((pi.w[0][0] - 0.5).abs() < 1e-9);
        assert!((pi.w[0][1] - 0.5).abs() < 1e-9);
        assert!(rows_biased(&pi, &bp(0.5), false).holds);
    }

    #[test]
    fn dirac_to_symmetric_above_half_infeasible_with_payoff() {
        let mu = DiscreteMeasure::dirac(0.0);
        let nu = m(&[(-1.0, 0.5), (1.0, 0.5)]);
        let beta = bp(0.6);
        let out = construct_biased_coupling(&mu, &nu, &beta).unwrap();
        let CouplingOutcome::Infeasible(report) = out else {
            panic!("symmetric law is not 0.6-biased");
        };
        let g = report.payoff.expect("exact mode derives a payoff");
        // μ(g_β) must exceed ν(g) by about the normalized certificate gap.
        let lhs = match beta_envelope(&g, &beta, 0.0) {
            EnvelopeValue::Finite(v) => v,
            EnvelopeValue::MinusInfinity => panic!("payoff envelope must stay finite on supp μ"),
        };
        let rhs = g.integrate(&nu);
        assert!(lhs > rhs + 1e-10, "lhs {lhs} rhs {rhs}");
    }

    #[test]
    fn two_point_threshold_matches_row_analysis() {
        let mu = m(&[(-1.0, 0.5), (1.0, 0.5)]);
        let nu = m(&[(-2.0, 0.5), (2.0, 0.5)]);
        // Row thresholds: from x = ±1 the kernels must be β-biased; brute
        // force over a β grid against the LP decision.
        for &beta in &[0.05, 0.15, 0.25, 0.35, 0.45, 0.55] {
            let params = bp(beta);
            let out = construct_biased_coupling(&mu, &nu, &params).unwrap();
            if let CouplingOutcome::Feasible(pi) = &out {
                assert!(rows_biased(pi, &params, false).holds, "beta={beta}");
                assert!(pi.is_martingale_coupling(&mu, &nu));
            }
        }
        // Feasible at small beta, infeasible near one: a threshold exists.
        assert!(construct_biased_coupling(&mu, &nu, &bp(0.05))
            .unwrap()
            .is_feasible());
        assert!(!construct_biased_coupling(&mu, &nu, &bp(0.9))
            .unwrap()
            .is_feasible());
    }

    #[test]
    fn strong_check_examples() {
        let mu = DiscreteMeasure::dirac(0.0);
        let nu = m(&[(-1.0, 0.5), (1.0, 0.5)]);
        // Symmetric law cannot be strongly 1/2-biased.
        assert!(!check_strong_biased_coupling(&mu, &nu, &bp(0.5), 1e-4)
            .unwrap()
            .is_feasible());
        // At 0.4 the margin is macroscopic.
        let out = check_strong_biased_coupling(&mu, &nu, &bp(0.4), 1e-4).unwrap();
        let pi = out.coupling().expect("strongly biased at 0.4");
        assert!(rows_biased(&pi, &bp(0.4), true).holds);
        // Dirac to itself is feasible at any level.
        let d = DiscreteMeasure::dirac(2.0);
        assert!(check_strong_biased_coupling(&d, &d, &bp(0.8), 1e-4)
            .unwrap()
            .is_feasible());
    }

    #[test]
    fn glue_with_identity_is_identity() {
        let mu = DiscreteMeasure::dirac(0.0);
        let nu = m(&[(-1.0, 0.5), (1.0, 0.5)]);
        let pi = construct_biased_coupling(&mu, &nu, &bp(0.5))
            .unwrap()
            .coupling()
            .unwrap();
        let id = DiscreteCoupling::identity(&nu);
        let glued = glue(&pi, &id).unwrap();
        assert_eq!(glued.xs, pi.xs);
        for (row_g, row_p) in glued.w.iter().zip(&pi.w) {
            for (a, b) in row_g.iter().zip(row_p) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn glue_symmetric_chain_passes_quarter() {
        let mu = DiscreteMeasure::dirac(0.0);
        let nu1 = m(&[(-1.0, 0.5), (1.0, 0.5)]);
        let pi1 = construct_biased_coupling(&mu, &nu1, &bp(0.5))
            .unwrap()
            .coupling()
            .unwrap();
        // Split each of ±1 symmetrically by ±1 again.
        let pi2 = DiscreteCoupling::new(
            vec![-1.0, 1.0],
            vec![-2.0, 0.0, 2.0],
            vec![vec![0.25, 0.25, 0.0], vec![0.0, 0.25, 0.25]],
        )
        .unwrap();
        assert!(rows_biased(&pi2, &bp(0.5), false).holds);
        let glued = glue(&pi1, &pi2).unwrap();
        assert!(rows_biased(&glued, &bp(0.25), false).holds);
        // The glued coupling is also accepted by the feasibility engine.
        let nu2 = glued.col_marginal().unwrap();
        assert!(construct_biased_coupling(&mu, &nu2, &bp(0.25))
            .unwrap()
            .is_feasible());
    }

    #[test]
    fn glue_marginal_mismatch_detected() {
        let pi1 = DiscreteCoupling::new(vec![0.0], vec![-1.0, 1.0], vec![vec![0.5, 0.5]]).unwrap();
        let pi2 = DiscreteCoupling::new(vec![-1.0, 2.0], vec![-1.0, 2.0], vec![
            vec![0.5, 0.0],
            vec![0.0, 0.5],
        ])
        .unwrap();
        assert_eq!(glue(&pi1, &pi2), Err(Error::MarginalMismatch));
    }

    #[test]
    fn rows_biased_flags_level_mismatch() {
        let mu = DiscreteMeasure::dirac(0.0);
        let nu = m(&[(-1.0, 0.5), (1.0, 0.5)]);
        let pi = construct_biased_coupling(&mu, &nu, &bp(0.5))
            .unwrap()
            .coupling()
            .unwrap();
        assert!(rows_biased(&pi, &bp(0.5), false).holds);
        assert!(!rows_biased(&pi, &bp(0.6), false).holds);
    }
}
