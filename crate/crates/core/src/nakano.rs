//! Nakano spaces `L_{p(·)}` over finite atomic measure spaces.
//!
//! The modular is `Θ(f) = Σ_i μ_i |f_i|^{p_i}` and the Luxemburg norm is the
//! unique `c > 0` with `Θ(f/c) = 1`.

use crate::error::{domain, Result};
use crate::measure::{AtomicMeasureSpace, SimpleFunction};

/// Relative bracket width at which the norm bisection stops.
pub const NORM_BRACKET_WIDTH: f64 = 1e-13;

const MAX_BRACKET_STEPS: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct NakanoSpace {
    space: AtomicMeasureSpace,
    exponent: Vec<f64>,
    r: f64,
}

/// Value of the modular functional; always nonnegative.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ModularValue(f64);

impl ModularValue {
    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<ModularValue> for f64 {
    fn from(m: ModularValue) -> f64 {
        m.0
    }
}

/// Outcome of the norm root-finder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormSolve {
    pub norm: f64,
    /// `|Θ(f/norm) − 1|`, zero for the zero function.
    pub residual: f64,
    pub evaluations: usize,
}

impl NakanoSpace {
    /// Pairs `space` with an exponent per atom; every exponent must lie in `[1, r]`.
    pub fn new(space: AtomicMeasureSpace, exponent: Vec<f64>, r: f64) -> Result<Self> {
        if !r.is_finite() || r < 1.0 {
            return domain(format!("exponent bound r = {r} must be finite and >= 1"));
        }
        if exponent.len() != space.len() {
            return domain(format!(
                "{} exponents for {} atoms",
                exponent.len(),
                space.len()
            ));
        }
        for (id, &p) in space.ids().iter().zip(&exponent) {
            if !(1.0..=r).contains(&p) {
                return domain(format!("exponent {p} at atom {id:?} outside [1, {r}]"));
            }
        }
        Ok(Self { space, exponent, r })
    }

    /// Like [`NakanoSpace::new`] with `r` set to the largest exponent.
    pub fn tight(space: AtomicMeasureSpace, exponent: Vec<f64>) -> Result<Self> {
        let r = exponent.iter().copied().fold(1.0, f64::max);
        Self::new(space, exponent, r)
    }

    pub fn space(&self) -> &AtomicMeasureSpace {
        &self.space
    }

    pub fn exponent(&self) -> &[f64] {
        &self.exponent
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    /// Same exponent over another measure on the same atoms.
    pub fn over(&self, measure: &AtomicMeasureSpace) -> Result<Self> {
        self.space.check_same_atoms(measure)?;
        Ok(Self {
            space: measure.clone(),
            exponent: self.exponent.clone(),
            r: self.r,
        })
    }

    /// Same measure with a new exponent (and bound).
    pub fn with_exponent(&self, exponent: Vec<f64>, r: f64) -> Result<Self> {
        Self::new(self.space.clone(), exponent, r)
    }

    pub fn function(&self, values: Vec<f64>) -> Result<SimpleFunction> {
        self.space.function(values)
    }

    pub fn modular(&self, f: &SimpleFunction) -> Result<ModularValue> {
        self.space.check(f)?;
        Ok(ModularValue(self.modular_scaled(f.values(), 1.0)))
    }

    /// `Θ(f/c)` without atom checks.
    fn modular_scaled(&self, values: &[f64], c: f64) -> f64 {
        self.space
            .weights()
            .iter()
            .zip(values)
            .zip(&self.exponent)
            .map(|((w, v), p)| w * (v.abs() / c).powf(*p))
            .sum()
    }

    /// `Σ p_i μ_i |f_i/c|^{p_i}`, minus the log-derivative of `Θ(f/c)` in `c`.
    fn modular_log_slope(&self, values: &[f64], c: f64) -> f64 {
        self.space
            .weights()
            .iter()
            .zip(values)
            .zip(&self.exponent)
            .map(|((w, v), p)| p * w * (v.abs() / c).powf(*p))
            .sum()
    }

    pub fn norm(&self, f: &SimpleFunction) -> Result<f64> {
        Ok(self.solve_norm(f)?.norm)
    }

    /// Luxemburg norm by bracketing and bisection on `ln c`.
    ///
    /// After scaling `f` by a power of two so its largest entry lies in
    /// `[1, 2)`, the bracket starts at `c = 1` and doubles or halves until
    /// `Θ(f/hi) <= 1 < Θ(f/lo)`. Bisection in the geometric mean stops at
    /// relative width [`NORM_BRACKET_WIDTH`], then a single Newton step on
    /// `ln c` is kept if it lowers the residual.
    pub fn solve_norm(&self, f: &SimpleFunction) -> Result<NormSolve> {
        self.space.check(f)?;
        if let Some(v) = f.values().iter().find(|v| !v.is_finite()) {
            return domain(format!("function value {v} is not finite"));
        }
        if f.is_zero() {
            return Ok(NormSolve {
                norm: 0.0,
                residual: 0.0,
                evaluations: 0,
            });
        }
        // Rescale by a power of two so the largest entry lies in [1, 2); the
        // norm is homogeneous and the bracket below then never nears the
        // ends of the float range.
        let peak = f.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let unit = peak.log2().floor().exp2();
        let scaled: Vec<f64> = f.values().iter().map(|v| v / unit).collect();
        let values = scaled.as_slice();
        let mut evaluations = 0usize;
        let mut theta = |c: f64| {
            evaluations += 1;
            self.modular_scaled(values, c)
        };

        let (mut lo, mut hi);
        if theta(1.0) > 1.0 {
            hi = 1.0;
            let mut steps = 0;
            while theta(hi) > 1.0 {
                hi *= 2.0;
                steps += 1;
                if steps > MAX_BRACKET_STEPS || !hi.is_finite() {
                    return domain("norm bracket overflow");
                }
            }
            lo = hi / 2.0;
        } else {
            lo = 1.0;
            let mut steps = 0;
            while theta(lo) <= 1.0 {
                lo /= 2.0;
                steps += 1;
                if steps > MAX_BRACKET_STEPS || lo == 0.0 {
                    return domain("norm bracket underflow");
                }
            }
            hi = lo * 2.0;
        }

        while hi / lo - 1.0 > NORM_BRACKET_WIDTH {
            let mid = lo * (hi / lo).sqrt();
            if mid <= lo || mid >= hi {
                break;
            }
            if theta(mid) > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut c = lo * (hi / lo).sqrt();
        let mut residual = (theta(c) - 1.0).abs();

        let slope = self.modular_log_slope(values, c);
        if slope > 0.0 {
            let t = self.modular_scaled(values, c);
            let candidate = c * ((t - 1.0) / slope).exp();
            let r = (self.modular_scaled(values, candidate) - 1.0).abs();
            evaluations += 2;
            if r < residual {
                c = candidate;
                residual = r;
            }
        }
        Ok(NormSolve {
            norm: c * unit,
            residual,
            evaluations,
        })
    }
}

/// `Θ_{p(·)}(f) = Σ_i μ_i |f_i|^{p_i}`.
pub fn modular(n: &NakanoSpace, f: &SimpleFunction) -> Result<ModularValue> {
    n.modular(f)
}

pub fn luxemburg_norm(n: &NakanoSpace, f: &SimpleFunction) -> Result<f64> {
    n.norm(f)
}

pub fn abs(f: &SimpleFunction) -> SimpleFunction {
    f.map(f64::abs)
}

pub fn join(f: &SimpleFunction, g: &SimpleFunction) -> Result<SimpleFunction> {
    f.zip_with(g, f64::max)
}

pub fn meet(f: &SimpleFunction, g: &SimpleFunction) -> Result<SimpleFunction> {
    f.zip_with(g, f64::min)
}

pub fn pos_part(f: &SimpleFunction) -> SimpleFunction {
    f.map(|v| v.max(0.0))
}

pub fn neg_part(f: &SimpleFunction) -> SimpleFunction {
    f.map(|v| (-v).max(0.0))
}

/// The isometry `D_{μ,ν} f = (dμ/dν)^{1/p} f` from `L_p(μ)` onto `L_p(ν)`.
pub fn density_change(
    n: &NakanoSpace,
    nu: &AtomicMeasureSpace,
    f: &SimpleFunction,
) -> Result<SimpleFunction> {
    let mu = n.space();
    mu.check_same_atoms(nu)?;
    mu.check(f)?;
    let values = f
        .values()
        .iter()
        .zip(mu.weights().iter().zip(nu.weights()))
        .zip(n.exponent())
        .map(|((v, (m, w)), p)| (m / w).powf(1.0 / p) * v)
        .collect();
    mu.function(values)
}

/// Distinct exponent values, ascending. Equality is exact.
pub fn essential_range(n: &NakanoSpace) -> Vec<f64> {
    let mut values = n.exponent.clone();
    values.sort_by(f64::total_cmp);
    values.dedup();
    values
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nakano(weights: &[f64], p: &[f64]) -> NakanoSpace {
        NakanoSpace::tight(
            AtomicMeasureSpace::from_weights(weights).unwrap(),
            p.to_vec(),
        )
        .unwrap()
    }

    #[test]
    fn modular_examples() {
        let n = nakano(&[0.5, 0.25], &[1.0, 3.0]);
        let f = n.function(vec![2.0, -1.0]).unwrap();
        assert_eq!(modular(&n, &f).unwrap().value(), 1.25);
        assert_eq!(modular(&n, &n.space().zero()).unwrap().value(), 0.0);

        let n = nakano(&[1.0, 1.0], &[1.0, 2.0]);
        let f = n.function(vec![1.0, 1.0]).unwrap();
        assert_eq!(modular(&n, &f).unwrap().value(), 2.0);
    }

    /// Independent oracle: plain bisection on `1/c + 1/c² = 1` in `c`.
    fn golden_by_bisection() -> f64 {
        let (mut lo, mut hi) = (1.0f64, 2.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if 1.0 / mid + 1.0 / (mid * mid) > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn norm_examples() {
        let n = nakano(&[1.0, 1.0], &[2.0, 2.0]);
        let f = n.function(vec![1.0, 1.0]).unwrap();
        assert!((luxemburg_norm(&n, &f).unwrap() - 2f64.sqrt()).abs() < 1e-12);

        let n = nakano(&[1.0, 1.0], &[1.0, 2.0]);
        let f = n.function(vec![1.0, 1.0]).unwrap();
        let oracle = golden_by_bisection();
        assert!((oracle - 1.618_033_988_749_895).abs() < 1e-14);
        let sol = n.solve_norm(&f).unwrap();
        assert!((sol.norm - oracle).abs() < 1e-10 * oracle);
        assert!(sol.residual <= 1e-12);

        assert_eq!(luxemburg_norm(&n, &n.space().zero()).unwrap(), 0.0);
    }

    #[test]
    fn norm_handles_extreme_scales() {
        let n = nakano(&[1.0, 3.0], &[1.5, 2.5]);
        for scale in [1e-200, 1e-8, 1e8, 1e200] {
            let f = n.function(vec![scale, -2.0 * scale]).unwrap();
            let sol = n.solve_norm(&f).unwrap();
            assert!(
                sol.residual <= 1e-12,
                "scale {scale}: residual {}",
                sol.residual
            );
        }
        // subnormal entries with small weights
        let n = nakano(&[1.0 / 16.0], &[3.0]);
        let f = n.function(vec![1e-320]).unwrap();
        let norm = n.norm(&f).unwrap();
        assert!(norm > 0.0 && norm < 1e-320);
    }

    #[test]
    fn norm_rejects_non_finite() {
        let n = nakano(&[1.0], &[2.0]);
        let f = n.function(vec![f64::NAN]).unwrap();
        assert!(matches!(n.norm(&f), Err(crate::Error::Domain(_))));
        let f = n.function(vec![f64::INFINITY]).unwrap();
        assert!(n.norm(&f).is_err());
    }

    #[test]
    fn exponent_bounds_enforced() {
        let s = AtomicMeasureSpace::from_weights(&[1.0, 1.0]).unwrap();
        assert!(NakanoSpace::new(s.clone(), vec![0.5, 2.0], 3.0).is_err());
        assert!(NakanoSpace::new(s.clone(), vec![1.0, 4.0], 3.0).is_err());
        assert!(NakanoSpace::new(s.clone(), vec![1.0, 2.0], f64::INFINITY).is_err());
        assert!(NakanoSpace::new(s, vec![1.0, 2.0], 2.0).is_ok());
    }

    #[test]
    fn lattice_examples() {
        let s = AtomicMeasureSpace::from_weights(&[1.0, 1.0]).unwrap();
        let f = s.function(vec![-2.0, 3.0]).unwrap();
        assert_eq!(abs(&f).values(), &[2.0, 3.0]);
        assert_eq!(join(&f, &f).unwrap(), f);
        assert_eq!(meet(&f, &f).unwrap(), f);

        let f = s.function(vec![-1.0, 2.0]).unwrap();
        let sum = pos_part(&f).add(&neg_part(&f)).unwrap();
        assert_eq!(sum.values(), &[1.0, 2.0]);
        assert_eq!(sum, abs(&f));

        let g = s.function(vec![0.0, 5.0]).unwrap();
        assert_eq!(join(&f, &g).unwrap().values(), &[0.0, 5.0]);
        assert_eq!(meet(&f, &g).unwrap().values(), &[-1.0, 2.0]);
    }

    #[test]
    fn density_change_examples() {
        let n = nakano(&[1.0, 2.0], &[1.5, 2.0]);
        let f = n.function(vec![0.3, -0.7]).unwrap();
        assert_eq!(density_change(&n, n.space(), &f).unwrap(), f);

        let n = nakano(&[1.0], &[2.0]);
        let nu = n.space().reweighted(vec![4.0]).unwrap();
        let f = n.function(vec![1.0]).unwrap();
        let d = density_change(&n, &nu, &f).unwrap();
        assert_eq!(d.values(), &[0.5]);
        let n_nu = n.over(&nu).unwrap();
        assert_eq!(n_nu.modular(&d).unwrap().value(), 1.0);
        assert_eq!(n.modular(&f).unwrap().value(), 1.0);

        // inverse pair
        let n = nakano(&[0.3, 1.7, 2.2], &[1.0, 1.9, 3.0]);
        let nu = n.space().reweighted(vec![2.5, 0.1, 0.9]).unwrap();
        let f = n.function(vec![0.4, -1.3, 2.0]).unwrap();
        let there = density_change(&n, &nu, &f).unwrap();
        let back = density_change(&n.over(&nu).unwrap(), n.space(), &there).unwrap();
        for (a, b) in back.values().iter().zip(f.values()) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn essential_range_examples() {
        let n = nakano(&[1.0, 1.0, 1.0], &[2.0, 2.0, 3.0]);
        assert_eq!(essential_range(&n), vec![2.0, 3.0]);
        let n = nakano(&[1.0, 1.0], &[1.7, 1.7]);
        assert_eq!(essential_range(&n), vec![1.7]);
        let n = nakano(&[1.0; 4], &[1.0, 1.5, 1.5, 2.0]);
        assert_eq!(essential_range(&n), vec![1.0, 1.5, 2.0]);
    }
}
