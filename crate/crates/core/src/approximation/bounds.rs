use crate::error::{contract, Result};
use crate::measure::SimpleFunction;
use crate::nakano::NakanoSpace;
use crate::report::{InequalityReport, SuiteReport};

use super::chunk::chunk_constant;

/// Allowance for the Luxemburg norm being solved only to ~1e-13.
const TOL: f64 = 1e-10;

/// `x|ln x|` with `0 ln 0 = 0`.
fn x_abs_ln(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln().abs()
    }
}

/// With exponents in `[s, s+ε]` and `‖f‖ = a <= 1`, checks the bracket
/// `a^{s+ε} <= Θ(f) <= a^s` and `|Θ(f) − a^{s+ε}| <= (ε/s)|ln Θ(f)| Θ(f)`.
pub fn verify_lemma_b1(
    n: &NakanoSpace,
    f: &SimpleFunction,
    s: f64,
    eps: f64,
) -> Result<SuiteReport> {
    if !(s >= 1.0) || !(eps > 0.0) {
        return contract(format!("need s >= 1 and eps > 0, got s = {s}, eps = {eps}"));
    }
    if let Some(p) = n.exponent().iter().find(|&&p| p < s || p > s + eps) {
        return contract(format!("exponent {p} outside [{s}, {}]", s + eps));
    }
    let a = n.norm(f)?;
    if a > 1.0 + TOL {
        return contract(format!("‖f‖ = {a} exceeds 1"));
    }
    let theta = n.modular(f)?.value();
    let low = a.powf(s + eps);
    let high = a.powf(s);

    let mut lower = InequalityReport::new("bracket_lower");
    let mut upper = InequalityReport::new("bracket_upper");
    let mut main = InequalityReport::new("modular_vs_norm_power");
    let describe = || format!("‖f‖ = {a}, Θ(f) = {theta}");
    lower.record(low, theta, TOL, describe);
    upper.record(theta, high, TOL, describe);
    main.record(
        (theta - low).abs(),
        eps / s * x_abs_ln(theta),
        TOL,
        describe,
    );
    Ok(SuiteReport::new(
        "norm_power_bracket",
        vec![lower, upper, main],
    ))
}

/// `Σ_k a_k|ln a_k|/(k+n) <= C/√n` for `a_k >= 0`, `Σ a_k <= 1`.
pub fn verify_lemma_b2(a: &[f64], n: usize) -> Result<InequalityReport> {
    if n == 0 {
        return contract("n must be >= 1");
    }
    if let Some(x) = a.iter().find(|x| !(**x >= 0.0) || !x.is_finite()) {
        return contract(format!(
            "sequence entry {x} is not a finite nonnegative number"
        ));
    }
    let total: f64 = a.iter().sum();
    if total > 1.0 + 1e-12 {
        return contract(format!("sequence sums to {total} > 1"));
    }
    let lhs: f64 = a
        .iter()
        .enumerate()
        .map(|(k, &x)| x_abs_ln(x) / (k + n) as f64)
        .sum();
    let rhs = chunk_constant().c / (n as f64).sqrt();
    let mut report = InequalityReport::new(format!("entropy_sum[n={n}]"));
    report.record(lhs, rhs, 0.0, || format!("length {}, sum {total}", a.len()));
    Ok(report)
}
