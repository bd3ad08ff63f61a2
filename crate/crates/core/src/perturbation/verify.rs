//! Numerical verifiers for the perturbation inequalities.
//!
//! Every verifier evaluates the inequality with the conservative side of the
//! certified constants, so a violation is a genuine counterexample up to the
//! stated floating tolerance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::constants::{
    constants_unbounded, grid, pow_exact, shape_constants, signed_pow, GridConfig,
};
use super::exponent_map;
use crate::error::{contract, Result};
use crate::measure::SimpleFunction;
use crate::nakano::{abs, NakanoSpace};
use crate::report::{InequalityReport, SuiteReport, Witness};
use crate::sampling::random_unit_ball;

/// Slack for pointwise inequalities between O(1) quantities.
pub const POINTWISE_TOL: f64 = 1e-12;
/// Slack for inequalities between Luxemburg norms (each solved to ~1e-13).
pub const NORM_TOL: f64 = 1e-9;

/// `|sgn(α)|α|^t − sgn(β)|β|^t| <= max{|α−β|^{A_s t}, B_s|α−β|^t}` for
/// `α, β ∈ [−1, 1]`, `t ∈ [1/s, s]`.
///
/// Checked on a `per_axis³` grid plus `samples` random points. The right side
/// is maximised over the certified interval for `A_s` and uses `B_upper`.
pub fn verify_lemma_4_1(
    s: f64,
    cfg: &GridConfig,
    per_axis: usize,
    samples: usize,
    seed: u64,
) -> Result<InequalityReport> {
    let c = shape_constants(s, cfg)?;
    let (a_lo, a_hi, b_hi) = (c.a.lower, c.a.upper, c.b.upper);
    let mut report = InequalityReport::new(format!("signed_power[s={s}]"));
    let mut check = |alpha: f64, beta: f64, t: f64| {
        let lhs = (signed_pow(alpha, t) - signed_pow(beta, t)).abs();
        let d = (alpha - beta).abs();
        let rhs = pow_exact(d, a_lo * t)
            .max(pow_exact(d, a_hi * t))
            .max(b_hi * pow_exact(d, t));
        report.record(lhs, rhs, POINTWISE_TOL, || {
            format!("alpha={alpha}, beta={beta}, t={t}")
        });
    };
    let axis = |a: f64, b: f64| {
        if per_axis < 2 {
            vec![a]
        } else {
            (0..per_axis)
                .map(|i| a + (b - a) * i as f64 / (per_axis - 1) as f64)
                .collect::<Vec<_>>()
        }
    };
    let ab = axis(-1.0, 1.0);
    let ts = axis(1.0 / s, s);
    for &t in &ts {
        for &alpha in &ab {
            for &beta in &ab {
                check(alpha, beta, t);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let alpha = rng.gen_range(-1.0..=1.0);
        let beta = rng.gen_range(-1.0..=1.0);
        let t = if s > 1.0 {
            rng.gen_range(1.0 / s..=s)
        } else {
            1.0
        };
        check(alpha, beta, t);
    }
    Ok(report)
}

/// `t(1 − γ) + γ^t <= 1` for `γ, t ∈ [0, 1]` (with `0^0 = 1`).
pub fn verify_lemma_4_2(per_axis: usize, samples: usize, seed: u64) -> InequalityReport {
    let mut report = InequalityReport::new("power_mix");
    let mut check = |g: f64, t: f64| {
        let lhs = t * (1.0 - g) + g.powf(t);
        report.record(lhs, 1.0, POINTWISE_TOL, || format!("gamma={g}, t={t}"));
    };
    let axis = grid(0.0, 1.0, 1.0 / (per_axis.max(2) - 1) as f64);
    for &g in &axis {
        for &t in &axis {
            check(g, t);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        check(rng.gen_range(0.0..=1.0), rng.gen_range(0.0..=1.0));
    }
    report
}

fn check_ratio(np: &NakanoSpace, nq: &NakanoSpace, s: f64) -> Result<()> {
    if np.space() != nq.space() {
        return contract("both exponents must live over the same measure");
    }
    for (i, (p, q)) in np.exponent().iter().zip(nq.exponent()).enumerate() {
        let ratio = p / q;
        if ratio < (1.0 / s) * (1.0 - 1e-12) || ratio > s * (1.0 + 1e-12) {
            return contract(format!(
                "p/q = {ratio} at atom {:?} outside [1/s, s] for s = {s}",
                np.space().ids()[i]
            ));
        }
    }
    Ok(())
}

fn unit_ball_pairs(
    np: &NakanoSpace,
    trials: usize,
    seed: u64,
) -> Result<Vec<(SimpleFunction, SimpleFunction)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials)
        .map(|_| {
            Ok((
                random_unit_ball(np, &mut rng)?,
                random_unit_ball(np, &mut rng)?,
            ))
        })
        .collect()
}

/// Both directions of `‖Ef − Eg‖ <= η̂_s(‖f − g‖)` on random unit-ball pairs.
pub fn verify_prop_4_6(
    np: &NakanoSpace,
    nq: &NakanoSpace,
    s: f64,
    trials: usize,
    seed: u64,
    cfg: &GridConfig,
) -> Result<SuiteReport> {
    check_ratio(np, nq, s)?;
    let c = shape_constants(s, cfg)?;
    let eta_hat = |x: f64| super::constants::eta_hat_with(c.a.lower, c.b.upper, s, x.min(2.0));
    let mut forward = InequalityReport::new("forward");
    let mut backward = InequalityReport::new("backward");
    for (k, (f, g)) in unit_ball_pairs(np, trials, seed)?.into_iter().enumerate() {
        let ef = exponent_map(np, nq, &f)?;
        let eg = exponent_map(np, nq, &g)?;
        let d = np.norm(&f.sub(&g)?)?;
        let de = nq.norm(&ef.sub(&eg)?)?;
        forward.record(de, eta_hat(d), NORM_TOL, || format!("trial {k}: |f-g|={d}"));
        backward.record(d, eta_hat(de), NORM_TOL, || {
            format!("trial {k}: |Ef-Eg|={de}")
        });
    }
    Ok(SuiteReport::new(
        format!("prop_4_6[s={s}]"),
        vec![forward, backward],
    ))
}

/// The three items of the near-isometry statement for `E_{p,q}` on random
/// unit-ball pairs: exact symmetry identities, distance defect `<= C_s`, and
/// midpoint defect `<= 2C_s`.
pub fn verify_prop_4_8(
    np: &NakanoSpace,
    nq: &NakanoSpace,
    s: f64,
    trials: usize,
    seed: u64,
    cfg: &GridConfig,
) -> Result<SuiteReport> {
    check_ratio(np, nq, s)?;
    let c = constants_unbounded(s, cfg)?;
    let c_up = c.c.upper;
    let mut identities = InequalityReport::new("identities");
    let mut distance = InequalityReport::new("distance_defect");
    let mut midpoint = InequalityReport::new("midpoint_defect");

    let zero = np.space().zero();
    identities.record_exact(exponent_map(np, nq, &zero)?.is_zero(), || "E0 = 0".into());

    for (k, (f, g)) in unit_ball_pairs(np, trials, seed)?.into_iter().enumerate() {
        let ef = exponent_map(np, nq, &f)?;
        let eg = exponent_map(np, nq, &g)?;
        identities.record_exact(
            exponent_map(np, nq, &f.scale(-1.0))? == ef.scale(-1.0),
            || format!("trial {k}: E(-f) != -E(f)"),
        );
        identities.record_exact(exponent_map(np, nq, &abs(&f))? == abs(&ef), || {
            format!("trial {k}: E|f| != |Ef|")
        });

        let d = np.norm(&f.sub(&g)?)?;
        let de = nq.norm(&ef.sub(&eg)?)?;
        distance.record((d - de).abs(), c_up, NORM_TOL, || {
            format!("trial {k}: |f-g|={d}, |Ef-Eg|={de}")
        });

        let mid = exponent_map(np, nq, &f.midpoint(&g)?)?;
        let defect = nq.norm(&mid.sub(&ef.midpoint(&eg)?)?)?;
        midpoint.record(defect, 2.0 * c_up, NORM_TOL, || format!("trial {k}"));
    }
    Ok(SuiteReport::new(
        format!("prop_4_8[s={s}]"),
        vec![identities, distance, midpoint],
    ))
}

/// Result of [`is_epsilon_perturbation`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbationCheck {
    pub holds: bool,
    pub eps: f64,
    pub conditions: Vec<InequalityReport>,
}

impl PerturbationCheck {
    /// First violated instance, if any.
    pub fn witness(&self) -> Option<&Witness> {
        self.conditions
            .iter()
            .find(|c| !c.passed)
            .and_then(|c| c.worst.as_ref())
    }

    pub fn condition(&self, name: &str) -> Option<&InequalityReport> {
        self.conditions.iter().find(|c| c.name == name)
    }
}

/// Checks the ε-perturbation conditions for `map: N → N'` on the probe pairs.
///
/// Distances follow the unit-ball convention `d(f, g) = ‖f − g‖/2`. Midpoint
/// distances are taken against `h ∈ {f, g, 0, next probe}`.
pub fn is_epsilon_perturbation<M>(
    source: &NakanoSpace,
    target: &NakanoSpace,
    map: M,
    probes: &[(SimpleFunction, SimpleFunction)],
    eps: f64,
) -> Result<PerturbationCheck>
where
    M: Fn(&SimpleFunction) -> Result<SimpleFunction>,
{
    if !(eps >= 0.0) {
        return contract(format!("eps = {eps} must be >= 0"));
    }
    for (k, (f, g)) in probes.iter().enumerate() {
        for h in [f, g] {
            let n = source.norm(h)?;
            if n > 1.0 + NORM_TOL {
                return contract(format!("probe {k} has norm {n} > 1"));
            }
        }
    }

    let mut identities = InequalityReport::new("identities");
    let mut midpoint = InequalityReport::new("midpoint_distance");
    let mut norm = InequalityReport::new("norm");
    let mut dist_upper = InequalityReport::new("distance_upper");
    let mut dist_lower = InequalityReport::new("distance_lower");

    let zero = source.space().zero();
    let tzero = map(&zero)?;
    identities.record_exact(tzero.is_zero(), || "theta(0) != 0".into());

    let d_src = |a: &SimpleFunction, b: &SimpleFunction| -> Result<f64> {
        Ok(source.norm(&a.sub(b)?)? / 2.0)
    };
    let d_tgt = |a: &SimpleFunction, b: &SimpleFunction| -> Result<f64> {
        Ok(target.norm(&a.sub(b)?)? / 2.0)
    };
    let (grow, shrink) = (eps.exp(), (-eps).exp());
    let lower_scale = (-eps * grow).exp();

    let images: Vec<(SimpleFunction, SimpleFunction)> = probes
        .iter()
        .map(|(f, g)| Ok((map(f)?, map(g)?)))
        .collect::<Result<_>>()?;

    for (k, ((f, g), (tf, tg))) in probes.iter().zip(&images).enumerate() {
        for (name, x, tx) in [("f", f, tf), ("g", g, tg)] {
            identities.record_exact(map(&x.scale(-1.0))? == tx.scale(-1.0), || {
                format!("probe {k}.{name}: theta(-x) != -theta(x)")
            });
            identities.record_exact(map(&abs(x))? == abs(tx), || {
                format!("probe {k}.{name}: theta|x| != |theta x|")
            });
            let a = source.norm(x)?;
            let b = target.norm(tx)?;
            norm.record((a - b).abs(), eps, NORM_TOL, || {
                format!("probe {k}.{name}: |x|={a}, |theta x|={b}")
            });
        }

        let mid = f.midpoint(g)?;
        let tmid = tf.midpoint(tg)?;
        let next = (k + 1) % probes.len();
        let (nf, ntf) = (&probes[next].0, &images[next].0);
        for (hname, h, th) in [
            ("f", f, tf),
            ("g", g, tg),
            ("0", &zero, &tzero),
            ("next", nf, ntf),
        ] {
            let a = d_src(&mid, h)?;
            let b = d_tgt(&tmid, th)?;
            midpoint.record((a - b).abs(), eps, NORM_TOL, || {
                format!("probe {k}, h={hname}: d={a}, d'={b}")
            });
        }

        let d = d_src(f, g)?;
        let dt = d_tgt(tf, tg)?;
        dist_upper.record(dt, grow * pow_exact(d, shrink), NORM_TOL, || {
            format!("probe {k}: d={d}, d'={dt}")
        });
        dist_lower.record(lower_scale * pow_exact(d, grow), dt, NORM_TOL, || {
            format!("probe {k}: d={d}, d'={dt}")
        });
    }

    let conditions = vec![identities, midpoint, norm, dist_upper, dist_lower];
    Ok(PerturbationCheck {
        holds: conditions.iter().all(|c| c.passed),
        eps,
        conditions,
    })
}
