//! Exponent perturbation: the maps `E_{p,q} f = sgn(f)|f|^{p/q}`, the
//! constants controlling how far they are from isometries, and verifiers for
//! the inequalities those constants certify.

mod budget;
mod constants;
mod verify;

pub use budget::{perturbation_budget, BudgetOutcome, MAX_LEVEL};
pub use constants::{
    compute_constants, midpoint_defect, phi, Bounds, GridConfig, PerturbationConstants,
    ShapeConstants,
};
pub use verify::{
    is_epsilon_perturbation, verify_lemma_4_1, verify_lemma_4_2, verify_prop_4_6, verify_prop_4_8,
    PerturbationCheck, NORM_TOL, POINTWISE_TOL,
};

pub(crate) use constants::signed_pow;

use crate::error::{domain, Result};
use crate::measure::SimpleFunction;
use crate::nakano::NakanoSpace;

/// `η_s(x)` on `[0, 2]`, using the lower bound on `A_s`.
pub fn eta(consts: &PerturbationConstants, x: f64) -> Result<f64> {
    consts.eta(x)
}

/// `η̂_s(x)` on `[0, 2]`; never below the exact value.
pub fn eta_hat(consts: &PerturbationConstants, x: f64) -> Result<f64> {
    consts.eta_hat(x)
}

/// `(E_{p,q} f)_i = sgn(f_i)|f_i|^{p_i/q_i}` between two exponents on one measure.
pub fn exponent_map(
    from: &NakanoSpace,
    to: &NakanoSpace,
    f: &SimpleFunction,
) -> Result<SimpleFunction> {
    if from.space() != to.space() {
        return domain("exponent map needs both spaces over the same measure");
    }
    from.space().check(f)?;
    let values = f
        .values()
        .iter()
        .zip(from.exponent().iter().zip(to.exponent()))
        .map(|(&v, (p, q))| signed_pow(v, p / q))
        .collect();
    from.function(values)
}

/// `Δ_r(ε) = min{(2^{A_r−1} A_r ε / B_r)^{r/A_r}, 1}` with `(A_lower, B_upper)`.
///
/// Both substitutions can only shrink the value, so the continuity guarantee
/// `‖f − g‖ < Δ ⟹ ‖Ef − Eg‖ <= ε` is kept.
pub fn delta_modulus(r: f64, eps: f64, cfg: &GridConfig) -> Result<f64> {
    if !(eps > 0.0) {
        return domain(format!("eps = {eps} must be > 0"));
    }
    let c = compute_constants(r, r, cfg)?;
    Ok(delta_from(&c, eps))
}

pub(crate) fn delta_from(c: &PerturbationConstants, eps: f64) -> f64 {
    let (a, b) = (c.a.lower, c.b.upper);
    let base = (a - 1.0).exp2() * a * eps / b;
    let e = c.s / a;
    let v = if e == 1.0 { base } else { base.powf(e) };
    v.min(1.0)
}

/// Replaces `p` by a finite-range `q` with `p <= q <= min(s·p, r)`.
///
/// The range of `q` is drawn from the geometric grid `b_j = min(r, s^j)`,
/// `j >= 1`; each `p_i` goes to the smallest grid point at or above it.
pub fn quantize_exponent(n: &NakanoSpace, s: f64) -> Result<NakanoSpace> {
    if !(s > 1.0) || !s.is_finite() {
        return domain(format!("quantization ratio s = {s} must be finite and > 1"));
    }
    let r = n.r();
    let q = n
        .exponent()
        .iter()
        .map(|&p| {
            let mut b = s;
            while b < p && b < r {
                b *= s;
            }
            b.min(r)
        })
        .collect();
    n.with_exponent(q, r)
}
