//! One-step market application: recovery of the implied distribution from an
//! American-put price curve, the no-arbitrage consistency verdict, and the
//! put valuation itself.

use crate::error::{Error, Result};
use crate::measure::{make_measure, BiasParams, DiscreteMeasure, PotentialCurve, TAU_MASS, TAU_MEAN};
use crate::order::{is_strongly_beta_biased, max_bias, OrderVerdict};
use serde::{Deserialize, Serialize};

/// One-step market with unit numeraire today and deterministic `B1 > 1` at
/// maturity; the implied bias level is `β = 1 − 1/B1`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MarketSpec {
    pub s0: f64,
    pub b1: f64,
}

impl MarketSpec {
    pub fn new(s0: f64, b1: f64) -> Result<Self> {
        if !s0.is_finite() || s0 < 0.0 {
            return Err(Error::OutOfRange(s0));
        }
        if !b1.is_finite() || b1 <= 1.0 {
            return Err(Error::OutOfRange(b1));
        }
        Ok(MarketSpec { s0, b1 })
    }

    pub fn beta(&self) -> Result<BiasParams> {
        BiasParams::new(1.0 - 1.0 / self.b1)
    }
}

/// Inverts a put-price curve into the measure whose potential it is: atoms at
/// slope-change points, masses equal to the slope increments.
pub fn measure_from_put_curve(curve: &PotentialCurve) -> Result<DiscreteMeasure> {
    if curve.kinks.is_empty() {
        return Err(Error::BadAsymptotics("curve has no kinks".into()));
    }
    if curve.kinks[0].1.abs() > 1e-12 {
        return Err(Error::BadAsymptotics(format!(
            "value {} at the first kink; potentials vanish left of the support",
            curve.kinks[0].1
        )));
    }
    if curve.right_slope > 1.0 + TAU_MASS {
        return Err(Error::BadAsymptotics(format!(
            "terminal slope {} exceeds total mass one",
            curve.right_slope
        )));
    }
    let mut slopes = Vec::with_capacity(curve.kinks.len() + 1);
    slopes.push(0.0);
    for win in curve.kinks.windows(2) {
        let dx = win[1].0 - win[0].0;
        if dx <= 0.0 {
            return Err(Error::NotConvex("kink locations must increase".into()));
        }
        slopes.push((win[1].1 - win[0].1) / dx);
    }
    slopes.push(curve.right_slope);
    let mut pairs = Vec::with_capacity(curve.kinks.len());
    for (i, win) in slopes.windows(2).enumerate() {
        let incr = win[1] - win[0];
        if incr < -1e-10 {
            return Err(Error::NotConvex(format!(
                "slope decreases at kink {}",
                curve.kinks[i].0
            )));
        }
        if incr > 0.0 {
            pairs.push((curve.kinks[i].0, incr));
        }
    }
    make_measure(&pairs)
}

/// Diagnostics attached to a consistency verdict.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarketDiagnostics {
    /// Top of the implied support: the strike threshold above which immediate
    /// exercise is optimal.
    pub k_tilde: f64,
    /// Largest bias level the implied law admits around the spot, when any.
    pub max_bias: Option<f64>,
    /// Bias level demanded by the numeraire.
    pub beta_required: f64,
}

/// No-arbitrage consistency of an American-put curve: the implied law must be
/// supported on the nonnegative axis, have mean equal to the spot, and be
/// strongly β-biased around it with `β = 1 − 1/B1`. The Dirac-rooted check is
/// exact, so no feasibility margin enters.
pub fn check_american_consistency(
    curve: &PotentialCurve,
    market: &MarketSpec,
) -> Result<(OrderVerdict, MarketDiagnostics)> {
    let nu = measure_from_put_curve(curve)?;
    let beta = market.beta()?;
    let diagnostics = |nu: &DiscreteMeasure| MarketDiagnostics {
        k_tilde: nu.max_support().unwrap_or(market.s0),
        max_bias: max_bias(nu, market.s0, 1e-9).ok(),
        beta_required: beta.beta(),
    };
    if nu.is_empty() || !nu.is_probability() {
        return Err(Error::BadAsymptotics(format!(
            "implied mass {} is not one",
            nu.total_mass()
        )));
    }
    if nu.min_support().expect("nonempty") < -TAU_MEAN {
        let verdict = OrderVerdict {
            holds: false,
            margin: nu.min_support().expect("nonempty"),
            witness: nu.min_support(),
            reason: "implied law charges negative prices".into(),
        };
        return Ok((verdict, diagnostics(&nu)));
    }
    let verdict = is_strongly_beta_biased(&nu, market.s0, &beta);
    Ok((verdict, diagnostics(&nu)))
}

/// One-step American put value: the better of immediate exercise and the
/// continuation leg against the implied terminal law.
pub fn american_put_value(nu: &DiscreteMeasure, market: &MarketSpec, k: f64) -> f64 {
    let immediate = (k - market.s0).max(0.0);
    let continuation = nu.potential(k);
    immediate.max(continuation)
}
