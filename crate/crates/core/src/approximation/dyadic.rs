use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{contract, domain, Result};
use crate::measure::SimpleFunction;
use crate::nakano::NakanoSpace;

const FIT_POINTS: usize = 2048;
const CERT_POINTS: usize = 4 * FIT_POINTS;
const REWEIGHT_ROUNDS: usize = 40;
const NORM_SLACK: f64 = 1e-9;

/// Largest number of terms tried before giving up; beyond this the monomial
/// coefficients grow so large that rounding swamps the fit.
pub const MAX_TERMS: usize = 64;

/// Coefficients with `Σ_k a_k 2^{-kx} ≈ m^x` on `[1, r]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyadicFit {
    pub m: u32,
    pub r: f64,
    pub eps: f64,
    pub n: usize,
    pub coefficients: Vec<f64>,
    /// Largest error seen on the certification grid plus a spacing allowance.
    pub certified_error: f64,
}

impl DyadicFit {
    /// `Σ_k a_k 2^{-kx}`.
    pub fn eval(&self, x: f64) -> f64 {
        horner(&self.coefficients, (-x).exp2())
    }

    /// Largest `|Σ a_k 2^{-kx} − m^x|` over `points` evenly spaced points of `[1, r]`.
    pub fn max_error_on(&self, points: usize) -> f64 {
        max_error(&self.coefficients, self.m, self.r, points).0
    }
}

fn horner(a: &[f64], y: f64) -> f64 {
    a.iter().rev().fold(0.0, |acc, &c| acc * y + c)
}

fn linspace(a: f64, b: f64, points: usize) -> impl Iterator<Item = f64> {
    let last = (points - 1).max(1) as f64;
    (0..points).map(move |i| {
        if i + 1 == points {
            b
        } else {
            a + (b - a) * i as f64 / last
        }
    })
}

/// Max error on the grid and the largest jump between neighbouring errors.
fn max_error(a: &[f64], m: u32, r: f64, points: usize) -> (f64, f64) {
    let mf = f64::from(m);
    let mut worst: f64 = 0.0;
    let mut jump: f64 = 0.0;
    let mut prev: Option<f64> = None;
    for x in linspace(1.0, r, points) {
        let e = (horner(a, (-x).exp2()) - mf.powf(x)).abs();
        worst = worst.max(e);
        if let Some(p) = prev {
            jump = jump.max((e - p).abs());
        }
        prev = Some(e);
    }
    (worst, jump)
}

/// Minimax-style fit with `n` terms: Chebyshev basis in `y = 2^{-x}`,
/// least squares followed by Lawson reweighting, then converted to powers of `y`.
fn fit_terms(m: u32, r: f64, n: usize) -> Vec<f64> {
    let (lo, hi) = ((-r).exp2(), 0.5);
    let scale = 2.0 / (hi - lo);
    let shift = -(lo + hi) / (hi - lo);
    let mf = f64::from(m);

    let xs: Vec<f64> = linspace(1.0, r, FIT_POINTS).collect();
    let basis = DMatrix::from_fn(FIT_POINTS, n, |i, j| {
        let u = scale * (-xs[i]).exp2() + shift;
        chebyshev(j, u)
    });
    let target = DVector::from_iterator(FIT_POINTS, xs.iter().map(|&x| mf.powf(x)));

    let mut weights = vec![1.0 / FIT_POINTS as f64; FIT_POINTS];
    let mut best: Option<(f64, DVector<f64>)> = None;
    for _ in 0..=REWEIGHT_ROUNDS {
        let mut a = basis.clone();
        let mut b = target.clone();
        for (i, w) in weights.iter().enumerate() {
            let sw = w.sqrt();
            a.row_mut(i).scale_mut(sw);
            b[i] *= sw;
        }
        let Ok(c) = a.svd(true, true).solve(&b, f64::EPSILON) else {
            break;
        };
        let resid = &basis * &c - &target;
        let err = resid.amax();
        if best.as_ref().map_or(true, |(e, _)| err < *e) {
            best = Some((err, c));
        }
        let total: f64 = weights
            .iter()
            .zip(resid.iter())
            .map(|(w, e)| w * e.abs())
            .sum();
        if !(total > 0.0) {
            break;
        }
        for (w, e) in weights.iter_mut().zip(resid.iter()) {
            *w *= e.abs() / total;
        }
    }
    let cheb = best.map(|(_, c)| c).unwrap_or_else(|| DVector::zeros(n));
    to_monomial(cheb.as_slice(), scale, shift)
}

fn chebyshev(j: usize, u: f64) -> f64 {
    let (mut t0, mut t1) = (1.0, u);
    match j {
        0 => t0,
        _ => {
            for _ in 1..j {
                (t0, t1) = (t1, 2.0 * u * t1 - t0);
            }
            t1
        }
    }
}

/// Rewrites `Σ c_j T_j(scale·y + shift)` as `Σ a_k y^k`.
fn to_monomial(c: &[f64], scale: f64, shift: f64) -> Vec<f64> {
    let n = c.len();
    let mut out = vec![0.0; n];
    let mut prev = vec![0.0; n];
    let mut cur = vec![0.0; n];
    cur[0] = 1.0;
    for (j, &cj) in c.iter().enumerate() {
        for k in 0..n {
            out[k] += cj * cur[k];
        }
        if j + 1 == n {
            break;
        }
        // T_{j+1} = 2(scale·y + shift)T_j − T_{j−1}, with T_1 = scale·y + shift
        let factor = if j == 0 { 1.0 } else { 2.0 };
        let mut next = vec![0.0; n];
        for k in 0..n {
            next[k] = factor * shift * cur[k] - if j == 0 { 0.0 } else { prev[k] };
            if k > 0 {
                next[k] += factor * scale * cur[k - 1];
            }
        }
        prev = std::mem::replace(&mut cur, next);
    }
    out
}

/// Finds `a_k` with `sup_{x∈[1,r]} |Σ_{k<n} a_k 2^{-kx} − m^x| <= eps`.
///
/// The number of terms runs through `1, 2, 4, ...` until the error on a grid
/// four times finer than the fitting grid, plus the largest jump between
/// neighbouring grid errors, is at most `eps`.
pub fn fit_dyadic(m: u32, r: f64, eps: f64) -> Result<DyadicFit> {
    if m == 0 {
        return domain("m must be a positive integer");
    }
    if !r.is_finite() || r < 1.0 {
        return domain(format!("r = {r} must be finite and >= 1"));
    }
    if !(eps > 0.0) {
        return domain(format!("eps = {eps} must be > 0"));
    }
    let exact = |coefficients: Vec<f64>| DyadicFit {
        m,
        r,
        eps,
        n: coefficients.len(),
        coefficients,
        certified_error: 0.0,
    };
    if m == 1 {
        return Ok(exact(vec![1.0]));
    }
    if r == 1.0 {
        return Ok(exact(vec![f64::from(m)]));
    }
    let mut n = 1;
    while n <= MAX_TERMS {
        let coefficients = fit_terms(m, r, n);
        let (worst, jump) = max_error(&coefficients, m, r, CERT_POINTS);
        let certified_error = worst + jump;
        log::debug!("fit m={m} r={r}: n={n} certified {certified_error:e}");
        if certified_error <= eps {
            return Ok(DyadicFit {
                m,
                r,
                eps,
                n,
                coefficients,
                certified_error,
            });
        }
        n *= 2;
    }
    domain(format!(
        "no fit with at most {MAX_TERMS} terms reaches eps = {eps} for m = {m}, r = {r}"
    ))
}

/// `Σ_k a_k Θ(2^{-k} f)`, within `fit.certified_error` of `Θ(m f)` when `‖f‖ <= 1`.
pub fn theta_scaled(n: &NakanoSpace, f: &SimpleFunction, fit: &DyadicFit) -> Result<f64> {
    if fit.r < n.r() {
        return contract(format!(
            "fit covers exponents up to {} but the space allows {}",
            fit.r,
            n.r()
        ));
    }
    let norm = n.norm(f)?;
    if norm > 1.0 + NORM_SLACK {
        return contract(format!("‖f‖ = {norm} exceeds 1"));
    }
    let mut total = 0.0;
    for (k, &a) in fit.coefficients.iter().enumerate() {
        let scaled = f.scale((-(k as f64)).exp2());
        total += a * n.modular(&scaled)?.value();
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::AtomicMeasureSpace;

    #[test]
    fn trivial_fits_are_exact() {
        let f = fit_dyadic(1, 3.0, 1e-6).unwrap();
        assert_eq!(f.coefficients, vec![1.0]);
        assert_eq!(f.certified_error, 0.0);

        let f = fit_dyadic(2, 1.0, 1e-6).unwrap();
        assert_eq!(f.coefficients, vec![2.0]);
        assert_eq!(f.eval(1.0), 2.0);
    }

    #[test]
    fn fit_two_on_one_to_three() {
        let fit = fit_dyadic(2, 3.0, 1e-3).unwrap();
        assert!(fit.n <= 32);
        assert!(fit.certified_error <= 1e-3);
        let brute = fit.max_error_on(100_000);
        assert!(
            brute <= fit.certified_error + 1e-9,
            "{brute} vs {}",
            fit.certified_error
        );
    }

    #[test]
    fn monomial_conversion_matches_chebyshev_sum() {
        let c = [0.3, -1.2, 0.7, 2.0, -0.1];
        let (scale, shift) = (2.5, -1.25);
        let a = to_monomial(&c, scale, shift);
        for y in [0.0, 0.1, 0.37, 0.5] {
            let direct: f64 = c
                .iter()
                .enumerate()
                .map(|(j, cj)| cj * chebyshev(j, scale * y + shift))
                .sum();
            assert!((horner(&a, y) - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn theta_scaled_identity_and_zero() {
        let space = AtomicMeasureSpace::from_weights(&[0.5, 0.25]).unwrap();
        let n = NakanoSpace::new(space, vec![1.5, 2.5], 3.0).unwrap();
        let one = fit_dyadic(1, 3.0, 1e-3).unwrap();
        let f = n.function(vec![0.4, -0.9]).unwrap();
        assert_eq!(
            theta_scaled(&n, &f, &one).unwrap(),
            n.modular(&f).unwrap().value()
        );

        let two = fit_dyadic(2, 3.0, 1e-3).unwrap();
        assert_eq!(theta_scaled(&n, &n.space().zero(), &two).unwrap(), 0.0);

        let big = n.function(vec![5.0, 5.0]).unwrap();
        assert!(theta_scaled(&n, &big, &two).is_err());
        let narrow = fit_dyadic(2, 2.0, 1e-3).unwrap();
        assert!(theta_scaled(&n, &f, &narrow).is_err());
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(fit_dyadic(0, 2.0, 1e-3).is_err());
        assert!(fit_dyadic(2, 0.5, 1e-3).is_err());
        assert!(fit_dyadic(2, 2.0, 0.0).is_err());
    }
}
