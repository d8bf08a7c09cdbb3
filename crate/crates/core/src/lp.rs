//! Dense linear-program feasibility and optimization: equality and `≤`
//! inequality rows over nonnegative variables, phase-1 simplex with Bland's
//! rule, optional phase-2 objective, and Farkas certificates on infeasibility.
//!
//! Feasibility problems arising from coupling constructions are highly
//! degenerate (many zero masses), so anti-cycling matters more than speed.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Relative tolerance for constraint residuals of accepted points.
pub const TAU_LP: f64 = 1e-8;
/// Minimal admissible pivot magnitude.
pub const PIVOT_TOL: f64 = 1e-11;
/// Reduced-cost threshold for entering variables.
const REDCOST_TOL: f64 = 1e-10;

/// `row · w (= | ≤) rhs` over variables `w ≥ 0`.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub n_vars: usize,
    pub eq: Vec<(Vec<f64>, f64)>,
    pub ineq: Vec<(Vec<f64>, f64)>,
    /// Coefficients of a linear objective to minimize, if any.
    pub objective: Option<Vec<f64>>,
}

impl LinearProgram {
    pub fn new(n_vars: usize) -> Self {
        LinearProgram {
            n_vars,
            eq: Vec::new(),
            ineq: Vec::new(),
            objective: None,
        }
    }

    pub fn add_eq(&mut self, row: Vec<f64>, rhs: f64) {
        debug_assert_eq!(row.len(), self.n_vars);
        self.eq.push((row, rhs));
    }

    pub fn add_ineq(&mut self, row: Vec<f64>, rhs: f64) {
        debug_assert_eq!(row.len(), self.n_vars);
        self.ineq.push((row, rhs));
    }

    pub fn set_objective(&mut self, c: Vec<f64>) {
        debug_assert_eq!(c.len(), self.n_vars);
        self.objective = Some(c);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Feasible,
    Infeasible,
}

/// Multipliers `y` (free on equalities, nonnegative on inequalities) with
/// `Σ y_r · row_r ≥ 0` componentwise and `y · rhs < 0`: no `w ≥ 0` can
/// satisfy the system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FarkasCertificate {
    pub eq_multipliers: Vec<f64>,
    pub ineq_multipliers: Vec<f64>,
}

impl FarkasCertificate {
    /// Re-checks the certificate against the raw program data.
    pub fn verify(&self, lp: &LinearProgram) -> bool {
        let scale: f64 = self
            .eq_multipliers
            .iter()
            .chain(self.ineq_multipliers.iter())
            .map(|y| y.abs())
            .fold(0.0, f64::max)
            .max(1.0);
        let mut combo = vec![0.0; lp.n_vars];
        let mut rhs_combo = 0.0;
        for (y, (row, b)) in self.eq_multipliers.iter().zip(&lp.eq) {
            for (c, a) in combo.iter_mut().zip(row) {
                *c += y * a;
            }
            rhs_combo += y * b;
        }
        for (y, (row, b)) in self.ineq_multipliers.iter().zip(&lp.ineq) {
            if *y < -TAU_LP * scale {
                return false;
            }
            for (c, a) in combo.iter_mut().zip(row) {
                *c += y * a;
            }
            rhs_combo += y * b;
        }
        combo.iter().all(|c| *c >= -TAU_LP * scale) && rhs_combo < -TAU_LP * scale
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpOutcome {
    pub status: LpStatus,
    pub point: Option<Vec<f64>>,
    pub certificate: Option<FarkasCertificate>,
    /// Objective value at the returned point, when an objective was set.
    pub objective_value: Option<f64>,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    /// Rows found redundant after phase 1; excluded from pivoting.
    dead: Vec<bool>,
    n_total: usize,
}

impl Tableau {
    fn pivot(&mut self, prow: usize, pcol: usize) {
        let piv = self.rows[prow][pcol];
        let inv = 1.0 / piv;
        for v in self.rows[prow].iter_mut() {
            *v *= inv;
        }
        self.rhs[prow] *= inv;
        self.rows[prow][pcol] = 1.0;
        for r in 0..self.rows.len() {
            if r == prow {
                continue;
            }
            let factor = self.rows[r][pcol];
            if factor == 0.0 {
                continue;
            }
            for c in 0..self.n_total {
                let delta = factor * self.rows[prow][c];
                self.rows[r][c] -= delta;
            }
            self.rows[r][pcol] = 0.0;
            self.rhs[r] -= factor * self.rhs[prow];
        }
        self.basis[prow] = pcol;
    }
}

/// Runs Bland-rule simplex on the tableau with the given reduced-cost row.
/// `allowed` bounds the entering-column range (artificials stay out).
fn optimize(tab: &mut Tableau, red: &mut Vec<f64>, z: &mut f64, allowed: usize) -> Result<()> {
    let iter_cap = 200_000 + 200 * (tab.rows.len() + tab.n_total);
    for _ in 0..iter_cap {
        let entering = (0..allowed).find(|&j| red[j] < -REDCOST_TOL);
        let Some(pcol) = entering else {
            return Ok(());
        };
        let mut best: Option<(f64, usize, usize)> = None;
        for r in 0..tab.rows.len() {
            if tab.dead[r] {
                continue;
            }
            let a = tab.rows[r][pcol];
            if a > PIVOT_TOL {
                let ratio = tab.rhs[r] / a;
                let key = (ratio, tab.basis[r]);
                match best {
                    None => best = Some((key.0, key.1, r)),
                    Some((br, bb, _)) if key.0 < br || (key.0 == br && key.1 < bb) => {
                        best = Some((key.0, key.1, r))
                    }
                    _ => {}
                }
            }
        }
        let Some((_, _, prow)) = best else {
            // Entering column has no blocking row: cost unbounded below.
            return Err(Error::Unbounded);
        };
        tab.pivot(prow, pcol);
        // Row-reduce the cost row; the entering variable takes the pivot
        // row's rhs, moving the objective by red[pcol] times it.
        let factor = red[pcol];
        if factor != 0.0 {
            for c in 0..tab.n_total {
                red[c] -= factor * tab.rows[prow][c];
            }
            red[pcol] = 0.0;
            *z += factor * tab.rhs[prow];
        }
    }
    Err(Error::NumericalBreakdown)
}

/// Decides feasibility of `lp` and, when an objective is present, returns an
/// optimal basic solution. Deterministic: fixed pivot rule, fixed orderings.
pub fn solve(lp: &LinearProgram) -> Result<LpOutcome> {
    let n = lp.n_vars;
    if n == 0 {
        return Err(Error::OutOfRange(0.0));
    }
    for (row, rhs) in lp.eq.iter().chain(lp.ineq.iter()) {
        if !rhs.is_finite() || row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(*rhs));
        }
    }
    let n_eq = lp.eq.len();
    let n_ineq = lp.ineq.len();
    let m = n_eq + n_ineq;
    let n_struct = n + n_ineq;
    let n_total = n_struct + m;

    // Row max-norm scaling; strikes and masses differ by orders of magnitude.
    let mut scales = Vec::with_capacity(m);
    let mut signs = Vec::with_capacity(m);
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut rhs: Vec<f64> = Vec::with_capacity(m);
    for (r, (row, b)) in lp.eq.iter().chain(lp.ineq.iter()).enumerate() {
        let norm = row.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1e-300);
        let norm = if norm < 1e-30 { 1.0 } else { norm };
        let mut full = vec![0.0; n_total];
        for (j, v) in row.iter().enumerate() {
            full[j] = v / norm;
        }
        let mut b = b / norm;
        if r >= n_eq {
            full[n + (r - n_eq)] = 1.0; // slack
        }
        let sign = if b < 0.0 { -1.0 } else { 1.0 };
        if sign < 0.0 {
            for v in full.iter_mut() {
                *v = -*v;
            }
            b = -b;
        }
        full[n_struct + r] = 1.0; // artificial
        scales.push(norm);
        signs.push(sign);
        rows.push(full);
        rhs.push(b);
    }

    let mut tab = Tableau {
        rows,
        rhs,
        basis: (0..m).map(|r| n_struct + r).collect(),
        dead: vec![false; m],
        n_total,
    };

    // Phase 1: minimize the sum of artificials.
    let phase1_costs: Vec<f64> = (0..n_total)
        .map(|j| if j >= n_struct { 1.0 } else { 0.0 })
        .collect();
    let mut red = vec![0.0; n_total];
    let mut z = 0.0;
    for j in 0..n_total {
        let mut v = phase1_costs[j];
        for r in 0..m {
            if tab.basis[r] == n_struct + r {
                v -= tab.rows[r][j];
            }
        }
        red[j] = v;
    }
    for r in 0..m {
        z += tab.rhs[r];
    }
    optimize(&mut tab, &mut red, &mut z, n_struct).map_err(|_| Error::NumericalBreakdown)?;

    let b_scale: f64 = tab.rhs.iter().map(|b| b.abs()).sum::<f64>().max(1.0);
    if z > 1e-9 * b_scale {
        // Infeasible: read multipliers off the artificial reduced costs.
        let mut eq_mult = vec![0.0; n_eq];
        let mut ineq_mult = vec![0.0; n_ineq];
        for r in 0..m {
            let ybar = 1.0 - red[n_struct + r];
            let y = -ybar * signs[r] / scales[r];
            if r < n_eq {
                eq_mult[r] = y;
            } else {
                ineq_mult[r - n_eq] = y.max(0.0);
            }
        }
        return Ok(LpOutcome {
            status: LpStatus::Infeasible,
            point: None,
            certificate: Some(FarkasCertificate {
                eq_multipliers: eq_mult,
                ineq_multipliers: ineq_mult,
            }),
            objective_value: None,
        });
    }

    // Drive residual artificials out of the basis; failed rows are redundant.
    for r in 0..m {
        if tab.basis[r] >= n_struct {
            let col = (0..n_struct).find(|&j| tab.rows[r][j].abs() > PIVOT_TOL);
            match col {
                Some(j) => tab.pivot(r, j),
                None => tab.dead[r] = true,
            }
        }
    }

    let mut objective_value = None;
    if let Some(c_obj) = &lp.objective {
        let costs: Vec<f64> = (0..n_total)
            .map(|j| if j < n { c_obj[j] } else { 0.0 })
            .collect();
        let mut red2 = vec![0.0; n_total];
        let mut z2 = 0.0;
        for j in 0..n_total {
            let mut v = costs[j];
            for r in 0..m {
                if tab.dead[r] {
                    continue;
                }
                let cb = costs[tab.basis[r]];
                if cb != 0.0 {
                    v -= cb * tab.rows[r][j];
                }
            }
            red2[j] = v;
        }
        for r in 0..m {
            if !tab.dead[r] {
                z2 += costs[tab.basis[r]] * tab.rhs[r];
            }
        }
        optimize(&mut tab, &mut red2, &mut z2, n_struct)?;
        objective_value = Some(z2);
    }

    let mut point = vec![0.0; n];
    for r in 0..m {
        if !tab.dead[r] && tab.basis[r] < n {
            point[tab.basis[r]] = tab.rhs[r].max(0.0);
        }
    }
    Ok(LpOutcome {
        status: LpStatus::Feasible,
        point: Some(point),
        certificate: None,
        objective_value,
    })
}

/// Residual check of a candidate point against the raw program data.
pub fn point_satisfies(lp: &LinearProgram, w: &[f64]) -> bool {
    let dot = |row: &[f64]| -> f64 { row.iter().zip(w).map(|(a, x)| a * x).sum() };
    for (row, b) in &lp.eq {
        if (dot(row) - b).abs() > TAU_LP * (1.0 + b.abs()) {
            return false;
        }
    }
    for (row, b) in &lp.ineq {
        if dot(row) - b > TAU_LP * (1.0 + b.abs()) {
            return false;
        }
    }
    w.iter().all(|x| *x >= -TAU_LP)
}
