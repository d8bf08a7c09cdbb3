//! Order predicates: convex order, irreducible convex order, biased and
//! strongly biased tests around a point, distorted reflections, test-function
//! transforms, support bounds, and the maximal bias level.

use crate::error::{Error, Result};
use crate::measure::{
    BiasParams, DiscreteMeasure, MERGE_TOL, TAU_MASS, TAU_MEAN, TAU_ORDER, TAU_STRICT,
};
use serde::{Deserialize, Serialize};

/// Outcome of an order check. `margin` is the minimal slack over all checked
/// inequalities (negative when violated); `witness` is the strike where the
/// binding violation occurred, when one exists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderVerdict {
    pub holds: bool,
    pub margin: f64,
    pub witness: Option<f64>,
    pub reason: String,
}

impl OrderVerdict {
    fn pass(margin: f64) -> Self {
        OrderVerdict {
            holds: true,
            margin,
            witness: None,
            reason: String::new(),
        }
    }

    fn fail(margin: f64, witness: Option<f64>, reason: impl Into<String>) -> Self {
        OrderVerdict {
            holds: false,
            margin,
            witness,
            reason: reason.into(),
        }
    }

    fn note(mut self, reason: impl Into<String>) -> Self {
        let extra = reason.into();
        if self.reason.is_empty() {
            self.reason = extra;
        } else {
            self.reason.push_str("; ");
            self.reason.push_str(&extra);
        }
        self
    }
}

/// Distorted reflection around `x`: compresses by `1/a` left of `x` and
/// stretches by `a` right of it. At β = 1/2 this is the ordinary reflection.
pub fn reflect(y: f64, x: f64, beta: &BiasParams) -> f64 {
    let a = beta.a();
    if y <= x {
        x - (y - x) / a
    } else {
        x - a * (y - x)
    }
}

/// Equal mass, equal total integral, and `p_μ ≤ p_ν` at every atom location
/// of either measure. The potentials are piecewise linear with kinks exactly
/// there, so this finite check is equivalent to the full convex order.
pub fn convex_order(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<OrderVerdict> {
    if mu.is_empty() || nu.is_empty() {
        return Err(Error::EmptyMeasure);
    }
    let mass_gap = (mu.total_mass() - nu.total_mass()).abs();
    if mass_gap > TAU_MASS {
        return Ok(OrderVerdict::fail(-mass_gap, None, "total masses differ"));
    }
    let mean_gap = (mu.total_integral() - nu.total_integral()).abs();
    if mean_gap > TAU_MEAN {
        return Ok(OrderVerdict::fail(-mean_gap, None, "total integrals differ"));
    }
    let mut margin = f64::INFINITY;
    let mut witness = None;
    for a in mu.atoms().iter().chain(nu.atoms().iter()) {
        let slack = nu.potential(a.x) - mu.potential(a.x);
        if slack < margin {
            margin = slack;
            witness = Some(a.x);
        }
    }
    if margin >= -TAU_ORDER {
        Ok(OrderVerdict::pass(margin))
    } else {
        Ok(OrderVerdict::fail(margin, witness, "potential inequality violated"))
    }
}

/// Gap test points for strict positivity of `p_ν − p_μ` on the open interval
/// `(s, S)`: every kink strictly inside plus midpoints of kink-free segments.
fn strict_gap_points(mu: &DiscreteMeasure, nu: &DiscreteMeasure, s: f64, big_s: f64) -> Vec<f64> {
    let mut pts: Vec<f64> = mu
        .atoms()
        .iter()
        .chain(nu.atoms().iter())
        .map(|a| a.x)
        .filter(|&x| x > s + MERGE_TOL && x < big_s - MERGE_TOL)
        .collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() <= MERGE_TOL);
    let mut anchors = Vec::with_capacity(pts.len() + 2);
    anchors.push(s);
    anchors.extend_from_slice(&pts);
    anchors.push(big_s);
    for win in anchors.windows(2) {
        pts.push(0.5 * (win[0] + win[1]));
    }
    pts
}

/// Irreducible convex order: either both are the same Dirac, or the potential
/// gap is strictly positive on the open interval spanned by `supp ν`, with all
/// of `μ` strictly inside. Errors with [`Error::NotInConvexOrder`] if the weak
/// order already fails.
pub fn irreducible_convex_order(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
) -> Result<OrderVerdict> {
    let weak = convex_order(mu, nu)?;
    if !weak.holds {
        return Err(Error::NotInConvexOrder);
    }
    let s = nu.min_support().expect("nonempty");
    let big_s = nu.max_support().expect("nonempty");
    if big_s - s <= MERGE_TOL {
        // Equal mass and mean force μ = ν = the same Dirac.
        return Ok(OrderVerdict::pass(0.0).note("dirac pair"));
    }
    for a in mu.atoms() {
        if a.x <= s + MERGE_TOL || a.x >= big_s - MERGE_TOL {
            return Ok(OrderVerdict::fail(
                0.0,
                Some(a.x),
                "mass of the smaller measure on the interval boundary",
            ));
        }
    }
    let mut margin = f64::INFINITY;
    let mut witness = None;
    for k in strict_gap_points(mu, nu, s, big_s) {
        let gap = nu.potential(k) - mu.potential(k);
        if gap < margin {
            margin = gap;
            witness = Some(k);
        }
    }
    if margin > TAU_STRICT {
        Ok(OrderVerdict::pass(margin))
    } else {
        Ok(OrderVerdict::fail(margin, witness, "no strict potential gap"))
    }
}

/// Necessary support bound for β-bias around `x`: `S(ν) ≤ x/β − s(ν)/a`.
pub fn support_bound(nu: &DiscreteMeasure, x: f64, beta: &BiasParams) -> Result<OrderVerdict> {
    if nu.is_empty() {
        return Err(Error::EmptyMeasure);
    }
    let s = nu.min_support().expect("nonempty");
    let big_s = nu.max_support().expect("nonempty");
    let bound = x / beta.beta() - s / beta.a();
    let margin = bound - big_s;
    if margin >= -TAU_ORDER {
        Ok(OrderVerdict::pass(margin))
    } else {
        Ok(OrderVerdict::fail(margin, Some(big_s), "support exceeds the bias bound"))
    }
}

/// Comparison measure `a·R^{β,x}_# ν^L + α δ_x` for the around-`x` criteria.
/// `alpha` must be nonnegative; merge collisions are reported by the caller.
pub(crate) fn comparison_measure(
    left: &DiscreteMeasure,
    x: f64,
    beta: &BiasParams,
    alpha: f64,
) -> Result<(DiscreteMeasure, bool)> {
    let reflected = left.pushforward(|y| reflect(y, x, beta))?;
    let mut comp = reflected.scale_mass(beta.a());
    if alpha > 0.0 {
        comp = comp.with_atom(x, alpha)?;
    }
    let merged = comp.len() < reflected.len() + usize::from(alpha > 0.0);
    Ok((comp, merged))
}

/// Criterion for ν being β-biased around `x`: split at the barycenter,
/// require `α = ‖ν^R‖ − a‖ν^L‖ ≥ 0`, and check
/// `ν^R ≺ a·R^{β,x}_# ν^L + α δ_x`.
pub fn is_beta_biased(nu: &DiscreteMeasure, x: f64, beta: &BiasParams) -> OrderVerdict {
    let Ok(bar) = nu.barycenter() else {
        return OrderVerdict::fail(f64::NEG_INFINITY, None, "empty measure");
    };
    if !nu.is_probability() {
        return OrderVerdict::fail(
            -(nu.total_mass() - 1.0).abs(),
            None,
            "not a probability measure",
        );
    }
    if (bar - x).abs() > TAU_MEAN {
        // A measure biased around x necessarily has barycenter x.
        return OrderVerdict::fail(-(bar - x).abs(), None, "barycenter differs from center");
    }
    let (left, right) = nu.split_lr(bar);
    if left.is_empty() {
        // All mass at or right of the mean: ν = δ_x.
        return OrderVerdict::pass(1.0 - beta.beta()).note("dirac");
    }
    let alpha = right.total_mass() - beta.a() * left.total_mass();
    if alpha < -TAU_MASS {
        return OrderVerdict::fail(alpha, None, "right mass below a(beta) * left mass");
    }
    let (comp, merged) = match comparison_measure(&left, x, beta, alpha.max(0.0)) {
        Ok(v) => v,
        Err(_) => return OrderVerdict::fail(f64::NEG_INFINITY, None, "reflection overflowed"),
    };
    let verdict = match convex_order(&right, &comp) {
        Ok(v) => v,
        Err(_) => return OrderVerdict::fail(f64::NEG_INFINITY, None, "degenerate split"),
    };
    if merged {
        verdict.note("comparison measure merged colliding atoms")
    } else {
        verdict
    }
}

/// Criterion for ν being strongly β-biased around `x`. A Dirac at `x` passes
/// for every β; an atom at `x` is stripped and the remainder tested; otherwise
/// requires `α > 0` strictly and the irreducible order against the comparison
/// measure.
pub fn is_strongly_beta_biased(nu: &DiscreteMeasure, x: f64, beta: &BiasParams) -> OrderVerdict {
    let Ok(bar) = nu.barycenter() else {
        return OrderVerdict::fail(f64::NEG_INFINITY, None, "empty measure");
    };
    if !nu.is_probability() {
        return OrderVerdict::fail(
            -(nu.total_mass() - 1.0).abs(),
            None,
            "not a probability measure",
        );
    }
    if (bar - x).abs() > TAU_MEAN {
        return OrderVerdict::fail(-(bar - x).abs(), None, "barycenter differs from center");
    }
    if nu.len() == 1 {
        return OrderVerdict::pass(1.0).note("dirac");
    }
    let center_mass = nu.mass_at(x);
    if center_mass > 0.0 {
        // Strip the center atom; the property transfers to the remainder.
        let stripped: Vec<(f64, f64)> = nu
            .atoms()
            .iter()
            .filter(|a| (a.x - x).abs() > MERGE_TOL)
            .map(|a| (a.x, a.m / (1.0 - center_mass)))
            .collect();
        let Ok(rest) = crate::measure::make_measure(&stripped) else {
            return OrderVerdict::fail(f64::NEG_INFINITY, None, "degenerate strip");
        };
        return is_strongly_beta_biased(&rest, x, beta).note("center atom stripped");
    }
    let (left, right) = nu.split_lr(bar);
    if left.is_empty() || right.is_empty() {
        return OrderVerdict::fail(0.0, None, "one-sided mass with non-dirac support");
    }
    let alpha = right.total_mass() - beta.a() * left.total_mass();
    if alpha <= TAU_STRICT {
        return OrderVerdict::fail(alpha, None, "alpha not strictly positive");
    }
    let (comp, merged) = match comparison_measure(&left, x, beta, alpha) {
        Ok(v) => v,
        Err(_) => return OrderVerdict::fail(f64::NEG_INFINITY, None, "reflection overflowed"),
    };
    let verdict = match irreducible_convex_order(&right, &comp) {
        Ok(v) => v,
        Err(Error::NotInConvexOrder) => {
            return OrderVerdict::fail(-1.0, None, "comparison pair not in convex order")
        }
        Err(_) => return OrderVerdict::fail(f64::NEG_INFINITY, None, "degenerate split"),
    };
    if merged {
        verdict.note("comparison measure merged colliding atoms")
    } else {
        verdict
    }
}

/// Supremum of bias levels at which ν is biased around `x`, by bisection to
/// width `tol` (clipped to 1e-12). Level one is reported only for ν = δ_x.
pub fn max_bias(nu: &DiscreteMeasure, x: f64, tol: f64) -> Result<f64> {
    let tol = tol.max(1e-12).min(0.25);
    if nu.is_empty() {
        return Err(Error::EmptyMeasure);
    }
    if nu.len() == 1 && (nu.atoms()[0].x - x).abs() <= MERGE_TOL && nu.is_probability() {
        return Ok(1.0);
    }
    let probe = BiasParams::new(tol.min(0.5))?;
    if !is_beta_biased(nu, x, &probe).holds {
        return Err(Error::NotBiased(format!("fails already at beta = {}", probe.beta())));
    }
    let mut lo = probe.beta();
    let mut hi = 1.0;
    for _ in 0..60 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let params = BiasParams::new(mid)?;
        if is_beta_biased(nu, x, &params).holds {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// A test function `Z^β(f)` where `f` is the antisymmetric extension of a
/// convex piecewise-linear `φ` on the nonnegative half-line with `φ(0) = 0`.
/// Values: `(1/a)·φ(a·y)` for `y ≥ 0` and `−φ(−y)` for `y ≤ 0`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestFunction {
    /// Kinks `(t, φ(t))` of the base function with `t ≥ 0`, increasing;
    /// the origin is implicit.
    pub base_kinks: Vec<(f64, f64)>,
    /// Slope of φ past the last kink.
    pub right_slope: f64,
    pub beta: BiasParams,
}

impl TestFunction {
    /// The hockey-stick base `φ(t) = (t − k)₊`.
    pub fn hockey_stick(k: f64, beta: BiasParams) -> Self {
        TestFunction {
            base_kinks: if k > 0.0 { vec![(k, 0.0)] } else { Vec::new() },
            right_slope: 1.0,
            beta,
        }
    }

    /// Evaluates the base φ at `t ≥ 0` by linear interpolation.
    fn base(&self, t: f64) -> f64 {
        let mut prev = (0.0, 0.0);
        for &(kx, ky) in &self.base_kinks {
            if t <= kx {
                let frac = if kx > prev.0 { (t - prev.0) / (kx - prev.0) } else { 0.0 };
                return prev.1 + (ky - prev.1) * frac;
            }
            prev = (kx, ky);
        }
        prev.1 + self.right_slope * (t - prev.0)
    }

    /// `Z^β(f)(y)` for the antisymmetric extension of the base.
    pub fn eval(&self, y: f64) -> f64 {
        let a = self.beta.a();
        if y >= 0.0 {
            self.base(a * y) / a
        } else {
            -self.base(-y)
        }
    }
}

/// Evaluates the shifted test function at `y`, i.e. `Z^β(f)(y − x_shift)`.
pub fn test_function_value(f: &TestFunction, x_shift: f64, y: f64) -> f64 {
    f.eval(y - x_shift)
}

/// `ν(f ∘ T_{−x})`. Any strictly positive value certifies that ν is not
/// β-biased around `x_shift`; the converse does not hold for a single f.
pub fn test_inequality(nu: &DiscreteMeasure, x_shift: f64, f: &TestFunction) -> f64 {
    nu.atoms()
        .iter()
        .map(|a| a.m * test_function_value(f, x_shift, a.x))
        .sum()
}

/// Sweeps the hockey-stick family over the kinks of the pushed-forward
/// measures and reports the largest integral with its kink, when positive.
pub fn sweep_test_functions(
    nu: &DiscreteMeasure,
    x: f64,
    beta: &BiasParams,
) -> Option<(f64, f64)> {
    let a = beta.a();
    let mut kinks: Vec<f64> = vec![0.0];
    for atom in nu.atoms() {
        if atom.x >= x {
            kinks.push(a * (atom.x - x));
        } else {
            kinks.push(-(atom.x - x));
        }
    }
    let mut best: Option<(f64, f64)> = None;
    for k in kinks {
        if k < 0.0 {
            continue;
        }
        let f = TestFunction::hockey_stick(k, *beta);
        let val = test_inequality(nu, x, &f);
        if best.map_or(true, |(_, bv)| val > bv) {
            best = Some((k, val));
        }
    }
    best.filter(|&(_, v)| v > TAU_ORDER)
}
