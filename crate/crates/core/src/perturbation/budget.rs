use serde::Serialize;

use super::constants::{
    constants_unbounded, eta_hat_with, shape_constants, GridConfig, PerturbationConstants,
    ShapeConstants,
};
use crate::error::{domain, Result};

/// Deepest level of the search grid `s = 1 + 2^{-k}`.
pub const MAX_LEVEL: u32 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BudgetOutcome {
    pub s: f64,
    pub k: u32,
    /// False when no grid point passed and the finest one was returned anyway.
    pub certified: bool,
    pub constants: PerturbationConstants,
}

/// Whether the `η̂_s` envelope keeps both distance conditions inside `ε`.
///
/// Each side of `η̂_s(x)/2 <= e^ε (x/2)^{e^{-ε}}` (and of the reverse bound) is
/// a power of `x` on `(0, 1]` and on `(1, 2]`, so once the exponent ratio is
/// right the worst case sits at `x = 1` or `x = 2`.
fn distances_within(c: &ShapeConstants, eps: f64) -> bool {
    let (s, a, b) = (c.s, c.a.lower, c.b.upper);
    let (grow, shrink) = (eps.exp(), (-eps).exp());
    if a / s < shrink {
        return false;
    }
    let hat = |x: f64| eta_hat_with(a, b, s, x) / 2.0;
    let upper = |x: f64| hat(x) <= grow * (x / 2.0).powf(shrink);
    let lower = |y: f64| (-eps * grow).exp() * hat(y).powf(grow) <= y / 2.0;
    upper(1.0) && upper(2.0) && lower(1.0) && lower(2.0)
}

/// Largest `s = 1 + 2^{-k}` with `s <= r` whose certified constants make every
/// exponent map with `1 <= q/p <= s` an ε-perturbation of the unit balls.
///
/// The midpoint condition needs `3C_s/2 <= ε`, the norm condition `C_s <= ε`,
/// and the distance conditions are checked against `η̂_s`.
pub fn perturbation_budget(r: f64, eps: f64, cfg: &GridConfig) -> Result<BudgetOutcome> {
    if !(eps > 0.0) {
        return domain(format!("eps = {eps} must be > 0"));
    }
    if !(r >= 1.0) || !r.is_finite() {
        return domain(format!("r = {r} must be finite and >= 1"));
    }
    let mut last = None;
    for k in 0..=MAX_LEVEL {
        let s = 1.0 + (-(k as f64)).exp2();
        if s > r && r > 1.0 {
            continue;
        }
        let shape = shape_constants(s, cfg)?;
        if !distances_within(&shape, eps) || 1.5 * shape.c2.upper > eps {
            last = Some((k, s));
            continue;
        }
        let constants = constants_unbounded(s, cfg)?;
        if 1.5 * constants.c.upper <= eps {
            return Ok(BudgetOutcome {
                s,
                k,
                certified: true,
                constants,
            });
        }
        last = Some((k, s));
    }
    let (k, s) = last.expect("search grid is never empty");
    log::warn!("no grid point certified for eps = {eps}; returning s = {s}");
    Ok(BudgetOutcome {
        s,
        k,
        certified: false,
        constants: constants_unbounded(s, cfg)?,
    })
}
