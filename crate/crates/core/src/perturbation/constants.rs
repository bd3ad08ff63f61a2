//! Certified two-sided bounds for the perturbation constants `A_s`, `B_s`, `C_s`.
//!
//! Each constant is an infimum or supremum of an explicit function over a
//! compact box. We sample the function on a grid, take the grid extremum as
//! the attained side of the bound, and widen the other side by a slack equal
//! to twice the largest difference between adjacent grid values at the
//! extremal cell. Infima come back as `(grid min − slack, grid min)`, suprema
//! as `(grid max, grid max + slack)`.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{domain, Result};

/// Below this distance from `γ = 1` the asymptotic form of `φ` is used.
const PHI_ASYMPTOTIC_GAP: f64 = 1e-8;
const REFINE_SEED: u64 = 0xc0ffee;

/// Grid resolutions for [`compute_constants`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridConfig {
    /// Step of the `γ ∈ [½, 1 − gamma_gap]` grid for `A_s`.
    pub gamma_step: f64,
    pub gamma_gap: f64,
    /// `γ` step of the two-dimensional grids for `B_s^±`.
    pub b_gamma_step: f64,
    /// Step of the `t ∈ [1/s, s]` axis for `B_s^±`.
    pub t_step: f64,
    /// Step of the `x ∈ [0, 2]` grid for `C_s^2`.
    pub x_step: f64,
    /// Step per axis of the `(α, β, t)` grid for `C_s^1`; must be `2^-k`.
    pub c1_step: f64,
    /// Random refinement samples around the `C_s^1` grid argmax.
    pub c1_refine_samples: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            gamma_step: 1e-5,
            gamma_gap: 1e-9,
            b_gamma_step: 1e-3,
            t_step: 1e-3,
            x_step: 1e-4,
            c1_step: 1.0 / 512.0,
            c1_refine_samples: 100_000,
        }
    }
}

impl GridConfig {
    /// Default configuration with the `A_s` grid step overridden.
    pub fn with_grid_step(step: f64) -> Self {
        Self {
            gamma_step: step,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        let steps = [
            self.gamma_step,
            self.gamma_gap,
            self.b_gamma_step,
            self.t_step,
            self.x_step,
            self.c1_step,
        ];
        if steps.iter().any(|s| !s.is_finite() || *s <= 0.0) {
            return domain(format!("grid steps must be finite and > 0: {self:?}"));
        }
        let k = -self.c1_step.log2();
        if k.fract() != 0.0 || !(1.0..=12.0).contains(&k) {
            return domain(format!(
                "c1_step must be 2^-k with 1 <= k <= 12, got {}",
                self.c1_step
            ));
        }
        Ok(())
    }

    fn key(&self) -> [u64; 7] {
        [
            self.gamma_step.to_bits(),
            self.gamma_gap.to_bits(),
            self.b_gamma_step.to_bits(),
            self.t_step.to_bits(),
            self.x_step.to_bits(),
            self.c1_step.to_bits(),
            self.c1_refine_samples as u64,
        ]
    }
}

/// A closed interval known to contain a constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bounds {
    pub lower: f64,
    pub upper: f64,
}

impl Bounds {
    pub fn exact(v: f64) -> Self {
        Self { lower: v, upper: v }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    fn max(self, other: Bounds) -> Bounds {
        Bounds {
            lower: self.lower.max(other.lower),
            upper: self.upper.max(other.upper),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerturbationConstants {
    pub s: f64,
    pub a: Bounds,
    pub b_minus: Bounds,
    pub b_plus: Bounds,
    pub b: Bounds,
    pub c1: Bounds,
    pub c2: Bounds,
    pub c: Bounds,
    pub grid_step: f64,
    /// Largest slack applied to any of the three constants.
    pub slack: f64,
}

/// `φ(γ, s) = ln(1 − γ^s) / ln(1 − γ)`, extended by `φ(1, s) = 1`.
pub fn phi(gamma: f64, s: f64) -> f64 {
    if s == 1.0 || gamma >= 1.0 {
        return 1.0;
    }
    let gap = 1.0 - gamma;
    if gap < PHI_ASYMPTOTIC_GAP {
        // 1 − γ^s ≈ s(1 − γ)
        return 1.0 + s.ln() / gap.ln();
    }
    let ln_gamma = (-gap).ln_1p();
    let ln_one_minus_pow = (-(s * ln_gamma).exp_m1()).ln();
    ln_one_minus_pow / gap.ln()
}

/// `x^e`, returning `x` unchanged when `e == 1`.
pub(crate) fn pow_exact(x: f64, e: f64) -> f64 {
    if e == 1.0 {
        x
    } else {
        x.powf(e)
    }
}

/// `sgn(x)|x|^t`.
pub(crate) fn signed_pow(x: f64, t: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.signum() * pow_exact(x.abs(), t)
    }
}

/// Uniform grid on `[a, b]` with both endpoints exact and spacing at most `step`.
pub(crate) fn grid(a: f64, b: f64, step: f64) -> Vec<f64> {
    if b <= a {
        return vec![a];
    }
    let n = ((b - a) / step).ceil().max(1.0) as usize;
    (0..=n)
        .map(|i| {
            if i == n {
                b
            } else {
                a + (b - a) * (i as f64 / n as f64)
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
enum Extremum {
    Inf,
    Sup,
}

/// Tracks the grid extremum and the slack-widened bound over adjacent pairs.
#[derive(Debug, Clone, Copy)]
struct Tracker {
    kind: Extremum,
    attained: f64,
    certified: f64,
}

impl Tracker {
    fn new(kind: Extremum) -> Self {
        let (attained, certified) = match kind {
            Extremum::Inf => (f64::INFINITY, f64::INFINITY),
            Extremum::Sup => (f64::NEG_INFINITY, f64::NEG_INFINITY),
        };
        Self {
            kind,
            attained,
            certified,
        }
    }

    #[inline]
    fn point(&mut self, v: f64) {
        match self.kind {
            Extremum::Inf => {
                self.attained = self.attained.min(v);
                self.certified = self.certified.min(v);
            }
            Extremum::Sup => {
                self.attained = self.attained.max(v);
                self.certified = self.certified.max(v);
            }
        }
    }

    /// Adjacent grid values: the cell between them is bounded by the
    /// better endpoint widened by twice the local difference.
    #[inline]
    fn pair(&mut self, a: f64, b: f64) {
        let slack = 2.0 * (a - b).abs();
        match self.kind {
            Extremum::Inf => self.certified = self.certified.min(a.min(b) - slack),
            Extremum::Sup => self.certified = self.certified.max(a.max(b) + slack),
        }
    }

    fn bounds(&self) -> Bounds {
        match self.kind {
            Extremum::Inf => Bounds {
                lower: self.certified,
                upper: self.attained,
            },
            Extremum::Sup => Bounds {
                lower: self.attained,
                upper: self.certified,
            },
        }
    }

    fn slack(&self) -> f64 {
        (self.certified - self.attained).abs()
    }
}

fn track_1d(kind: Extremum, values: &[f64]) -> Tracker {
    let mut t = Tracker::new(kind);
    for &v in values {
        t.point(v);
    }
    for w in values.windows(2) {
        t.pair(w[0], w[1]);
    }
    t
}

fn track_2d(kind: Extremum, rows: &[f64], cols: &[f64], f: impl Fn(f64, f64) -> f64) -> Tracker {
    let mut t = Tracker::new(kind);
    let mut prev: Vec<f64> = Vec::new();
    let mut cur = Vec::with_capacity(cols.len());
    for &r in rows {
        cur.clear();
        cur.extend(cols.iter().map(|&c| f(r, c)));
        for &v in &cur {
            t.point(v);
        }
        for w in cur.windows(2) {
            t.pair(w[0], w[1]);
        }
        for (&a, &b) in prev.iter().zip(&cur) {
            t.pair(a, b);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    t
}

/// `A_s = inf { φ(γ, s)/s : γ ∈ [½, 1) }`.
fn bound_a(s: f64, cfg: &GridConfig) -> (Bounds, f64) {
    let values: Vec<f64> = grid(0.5, 1.0 - cfg.gamma_gap, cfg.gamma_step)
        .into_iter()
        .map(|g| phi(g, s) / s)
        .collect();
    let t = track_1d(Extremum::Inf, &values);
    let mut b = t.bounds();
    // the infimum never exceeds the limit value 1/s at γ → 1
    b.upper = b.upper.min(1.0 / s);
    b.lower = b.lower.min(b.upper);
    (b, t.slack())
}

/// `B_s^- = sup (1 − γ^t)/(1 − γ)^t` over `γ ∈ [0, ½]`, `t ∈ [1/s, s]`.
fn bound_b_minus(s: f64, cfg: &GridConfig) -> (Bounds, f64) {
    let ts = grid(1.0 / s, s, cfg.t_step);
    let gs = grid(0.0, 0.5, cfg.b_gamma_step);
    let t = track_2d(Extremum::Sup, &ts, &gs, |t, g| {
        (1.0 - pow_exact(g, t)) / pow_exact(1.0 - g, t)
    });
    (t.bounds(), t.slack())
}

/// `B_s^+ = sup (1 + γ^t)/(1 + γ)^t` over `γ ∈ [0, 1]`, `t ∈ [1/s, s]`.
fn bound_b_plus(s: f64, cfg: &GridConfig) -> (Bounds, f64) {
    let ts = grid(1.0 / s, s, cfg.t_step);
    let gs = grid(0.0, 1.0, cfg.b_gamma_step);
    let t = track_2d(Extremum::Sup, &ts, &gs, |t, g| {
        (1.0 + pow_exact(g, t)) / pow_exact(1.0 + g, t)
    });
    (t.bounds(), t.slack())
}

/// Midpoint defect `|sgn(m)|m|^t − (sgn(α)|α|^t + sgn(β)|β|^t)/2|`, `m = (α+β)/2`.
pub fn midpoint_defect(alpha: f64, beta: f64, t: f64) -> f64 {
    let m = 0.5 * (alpha + beta);
    (signed_pow(m, t) - 0.5 * (signed_pow(alpha, t) + signed_pow(beta, t))).abs()
}

/// `C_s^1 = sup midpoint_defect(α, β, t)` over `α, β ∈ [−1, 1]`, `t ∈ [1/s, s]`.
///
/// The `(α, β)` grid is dyadic, so every midpoint `(α_i + α_j)/2` lies on the
/// half-step grid and `sgn(x)|x|^t` is tabulated once per `t`. The function
/// is symmetric in `(α, β)`; only `j <= i` is visited.
fn bound_c1(s: f64, cfg: &GridConfig) -> (Bounds, f64) {
    let h = cfg.c1_step;
    let m = (2.0 / h).round() as usize;
    let ts = grid(1.0 / s, s, h);
    let mut tracker = Tracker::new(Extremum::Sup);
    let mut best = (f64::NEG_INFINITY, 0usize, 0usize, 0usize);
    let mut table = vec![0.0; 2 * m + 1];
    let width = m + 1;
    let mut prev = vec![0.0; width * width];
    let mut cur = vec![0.0; width * width];

    for (ti, &t) in ts.iter().enumerate() {
        for (k, v) in table.iter_mut().enumerate() {
            *v = signed_pow(-1.0 + k as f64 * (h / 2.0), t);
        }
        for i in 0..=m {
            let row = &mut cur[i * width..(i + 1) * width];
            let ti2 = table[2 * i];
            for (j, slot) in row.iter_mut().enumerate().take(i + 1) {
                *slot = (table[i + j] - 0.5 * (ti2 + table[2 * j])).abs();
            }
        }
        for i in 0..=m {
            for j in 0..=i {
                let v = cur[i * width + j];
                tracker.point(v);
                if v > best.0 {
                    best = (v, i, j, ti);
                }
                if i < m {
                    tracker.pair(v, cur[(i + 1) * width + j]);
                }
                if j < i {
                    tracker.pair(v, cur[i * width + j + 1]);
                }
                if ti > 0 {
                    tracker.pair(v, prev[i * width + j]);
                }
            }
        }
        std::mem::swap(&mut prev, &mut cur);
    }

    let mut bounds = tracker.bounds();
    let slack = tracker.slack();

    // random refinement in the grid cells around the argmax
    let (_, bi, bj, bt) = best;
    let (a0, b0, t0) = (-1.0 + bi as f64 * h, -1.0 + bj as f64 * h, ts[bt]);
    let t_lo = if bt > 0 { ts[bt - 1] } else { ts[bt] };
    let t_hi = if bt + 1 < ts.len() {
        ts[bt + 1]
    } else {
        ts[bt]
    };
    let mut rng = ChaCha8Rng::seed_from_u64(REFINE_SEED);
    let mut refined = f64::NEG_INFINITY;
    for _ in 0..cfg.c1_refine_samples {
        let a = (a0 + rng.gen_range(-h..=h)).clamp(-1.0, 1.0);
        let b = (b0 + rng.gen_range(-h..=h)).clamp(-1.0, 1.0);
        let t = if t_hi > t_lo {
            rng.gen_range(t_lo..=t_hi)
        } else {
            t0
        };
        refined = refined.max(midpoint_defect(a, b, t));
    }
    bounds.lower = bounds.lower.max(refined);
    bounds.upper = bounds.upper.max(refined);
    (bounds, slack)
}

/// `η_s(x)` for a given value of `A_s`.
pub(crate) fn eta_with(a: f64, s: f64, x: f64) -> f64 {
    if x <= 1.0 {
        pow_exact(x, a / s)
    } else {
        pow_exact(x, s)
    }
}

/// `η̂_s(x) = 2^{1−A} B η_s(x) / A` for given values of `A` and `B`.
pub(crate) fn eta_hat_with(a: f64, b: f64, s: f64, x: f64) -> f64 {
    let prefactor = if a == 1.0 {
        b
    } else {
        (1.0 - a).exp2() * b / a
    };
    prefactor * eta_with(a, s, x)
}

/// `C_s^2 = sup { |x − η̂_s(x)| : x ∈ [0, 2] }` from the bounds on `A_s`, `B_s`.
///
/// `η̂_s` decreases in `A_s` and increases in `B_s`, so `(A_lower, B_upper)`
/// gives a pointwise upper envelope and `(A_upper, B_lower)` a lower one.
fn bound_c2(s: f64, a: Bounds, b: Bounds, cfg: &GridConfig) -> (Bounds, f64) {
    let xs = grid(0.0, 2.0, cfg.x_step);
    let high: Vec<f64> = xs
        .iter()
        .map(|&x| (x - eta_hat_with(a.lower, b.upper, s, x)).abs())
        .collect();
    let t = track_1d(Extremum::Sup, &high);
    let low = xs
        .iter()
        .map(|&x| (x - eta_hat_with(a.upper, b.lower, s, x)).abs())
        .fold(0.0, f64::max);
    (
        Bounds {
            lower: low.min(t.bounds().lower),
            upper: t.bounds().upper,
        },
        t.slack(),
    )
}

/// The `A` and `B` parts only; cheap compared with `C_s^1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShapeConstants {
    pub s: f64,
    pub a: Bounds,
    pub b_minus: Bounds,
    pub b_plus: Bounds,
    pub b: Bounds,
    pub c2: Bounds,
    pub slack: f64,
}

pub(crate) fn shape_constants(s: f64, cfg: &GridConfig) -> Result<ShapeConstants> {
    cfg.validate()?;
    if !s.is_finite() || s < 1.0 {
        return domain(format!("s = {s} must be finite and >= 1"));
    }
    let (a, sa) = bound_a(s, cfg);
    let (b_minus, sbm) = bound_b_minus(s, cfg);
    let (b_plus, sbp) = bound_b_plus(s, cfg);
    let b = b_minus.max(b_plus);
    let (c2, sc2) = bound_c2(s, a, b, cfg);
    Ok(ShapeConstants {
        s,
        a,
        b_minus,
        b_plus,
        b,
        c2,
        slack: sa.max(sbm).max(sbp).max(sc2),
    })
}

type CacheKey = (u64, [u64; 7]);

fn cache() -> &'static Mutex<HashMap<CacheKey, PerturbationConstants>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, PerturbationConstants>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Bounds for every constant at `s`, without the `s <= r` check.
pub(crate) fn constants_unbounded(s: f64, cfg: &GridConfig) -> Result<PerturbationConstants> {
    let key = (s.to_bits(), cfg.key());
    if let Some(c) = cache().lock().expect("cache poisoned").get(&key) {
        return Ok(*c);
    }
    let shape = shape_constants(s, cfg)?;
    let (c1, sc1) = bound_c1(s, cfg);
    let consts = PerturbationConstants {
        s,
        a: shape.a,
        b_minus: shape.b_minus,
        b_plus: shape.b_plus,
        b: shape.b,
        c1,
        c2: shape.c2,
        c: c1.max(shape.c2),
        grid_step: cfg.gamma_step,
        slack: shape.slack.max(sc1),
    };
    cache().lock().expect("cache poisoned").insert(key, consts);
    Ok(consts)
}

/// Certified bounds on `A_s`, `B_s`, `C_s` for `1 <= s <= r`.
pub fn compute_constants(s: f64, r: f64, cfg: &GridConfig) -> Result<PerturbationConstants> {
    if !(1.0..=r).contains(&s) {
        return domain(format!("s = {s} outside [1, r = {r}]"));
    }
    constants_unbounded(s, cfg)
}

impl PerturbationConstants {
    /// `η_s(x)` with the smaller `A_s` bound, an upper envelope for `x <= 1`.
    pub fn eta(&self, x: f64) -> Result<f64> {
        check_x(x)?;
        Ok(eta_with(self.a.lower, self.s, x))
    }

    /// Upper envelope of `η̂_s(x)` built from `(A_lower, B_upper)`.
    pub fn eta_hat(&self, x: f64) -> Result<f64> {
        check_x(x)?;
        Ok(eta_hat_with(self.a.lower, self.b.upper, self.s, x))
    }

    /// Lower envelope of `η̂_s(x)` built from `(A_upper, B_lower)`.
    pub fn eta_hat_lower(&self, x: f64) -> Result<f64> {
        check_x(x)?;
        Ok(eta_hat_with(self.a.upper, self.b.lower, self.s, x))
    }
}

fn check_x(x: f64) -> Result<()> {
    if (0.0..=2.0).contains(&x) {
        Ok(())
    } else {
        domain(format!("x = {x} outside [0, 2]"))
    }
}
