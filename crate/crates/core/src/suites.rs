//! Randomised verification suites: each draws instances from a seed, runs the
//! matching verifier, and returns a [`SuiteReport`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::approximation::{
    chunk, chunk_error_bound, chunked_estimate, fit_dyadic, theta_scaled, verify_lemma_b1,
    verify_lemma_b2,
};
use crate::error::Result;
use crate::nakano::NakanoSpace;
use crate::perturbation::{
    delta_modulus, exponent_map, is_epsilon_perturbation, perturbation_budget, quantize_exponent,
    verify_lemma_4_1, verify_lemma_4_2, verify_prop_4_6, verify_prop_4_8, GridConfig, NORM_TOL,
};
use crate::report::{InequalityReport, SuiteReport};
use crate::sampling::{
    random_exponent, random_measure, random_simplex, random_space, random_unit_ball,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    /// `|sgn α|α|^t − sgn β|β|^t|` against `max{|α−β|^{At}, B|α−β|^t}`.
    SignedPower,
    /// `t(1−γ) + γ^t <= 1`.
    PowerMix,
    /// Both directions of the `η̂_s` modulus for exponent maps.
    Modulus,
    /// Distance and midpoint defects of exponent maps against `C_s`.
    NearIsometry,
    /// `‖f − g‖ < Δ_r(ε) ⟹ ‖Ef − Eg‖ <= ε`.
    Continuity,
    /// Quantized exponent maps at the budgeted `s` are ε-perturbations.
    EpsilonPerturbation,
    /// `a^{s+ε} <= Θ(f) <= a^s` and the resulting log bound.
    NormPowerBracket,
    /// `Σ a_k|ln a_k|/(k+n) <= C/√n` on random simplex sequences.
    EntropySum,
    /// Chunked modular estimate within `C/√n`.
    Chunking,
    /// `Θ(mf)` through a certified dyadic fit.
    DyadicFit,
}

impl Suite {
    pub const ALL: [Suite; 10] = [
        Suite::SignedPower,
        Suite::PowerMix,
        Suite::Modulus,
        Suite::NearIsometry,
        Suite::Continuity,
        Suite::EpsilonPerturbation,
        Suite::NormPowerBracket,
        Suite::EntropySum,
        Suite::Chunking,
        Suite::DyadicFit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::SignedPower => "signed-power",
            Suite::PowerMix => "power-mix",
            Suite::Modulus => "modulus",
            Suite::NearIsometry => "near-isometry",
            Suite::Continuity => "continuity",
            Suite::EpsilonPerturbation => "epsilon-perturbation",
            Suite::NormPowerBracket => "norm-power-bracket",
            Suite::EntropySum => "entropy-sum",
            Suite::Chunking => "chunking",
            Suite::DyadicFit => "dyadic-fit",
        }
    }

    pub fn from_name(name: &str) -> Option<Suite> {
        Suite::ALL.into_iter().find(|s| s.name() == name)
    }
}

/// Sizes and parameters shared by the suites. Empty lists select each
/// suite's own defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Random instances per parameter value.
    pub trials: usize,
    /// Points per axis for the deterministic grids of the pointwise suites.
    pub per_axis: usize,
    pub atoms: usize,
    pub r: f64,
    pub s_values: Vec<f64>,
    pub eps_values: Vec<f64>,
    pub n_values: Vec<usize>,
    pub grid: GridConfig,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            trials: 100,
            per_axis: 100,
            atoms: 8,
            r: 3.0,
            s_values: Vec::new(),
            eps_values: Vec::new(),
            n_values: Vec::new(),
            grid: GridConfig::default(),
        }
    }
}

impl SuiteConfig {
    fn s_or(&self, default: &[f64]) -> Vec<f64> {
        if self.s_values.is_empty() {
            default.to_vec()
        } else {
            self.s_values.clone()
        }
    }

    fn eps_or(&self, default: &[f64]) -> Vec<f64> {
        if self.eps_values.is_empty() {
            default.to_vec()
        } else {
            self.eps_values.clone()
        }
    }

    fn n_or(&self, default: &[usize]) -> Vec<usize> {
        if self.n_values.is_empty() {
            default.to_vec()
        } else {
            self.n_values.clone()
        }
    }

    /// Independent stream per suite and parameter index.
    fn rng(&self, suite: Suite, index: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(((suite as u64) << 32) | index as u64);
        rng
    }

    fn sub_seed(&self, suite: Suite, index: usize) -> u64 {
        self.rng(suite, index).gen()
    }
}

pub fn run_suite(suite: Suite, cfg: &SuiteConfig) -> Result<SuiteReport> {
    let items = match suite {
        Suite::SignedPower => signed_power(cfg)?,
        Suite::PowerMix => vec![verify_lemma_4_2(
            cfg.per_axis * 10,
            cfg.trials,
            cfg.sub_seed(suite, 0),
        )],
        Suite::Modulus => exponent_suite(cfg, suite, |np, nq, s, seed| {
            verify_prop_4_6(np, nq, s, cfg.trials, seed, &cfg.grid)
        })?,
        Suite::NearIsometry => exponent_suite(cfg, suite, |np, nq, s, seed| {
            verify_prop_4_8(np, nq, s, cfg.trials, seed, &cfg.grid)
        })?,
        Suite::Continuity => continuity(cfg)?,
        Suite::EpsilonPerturbation => epsilon_perturbation(cfg)?,
        Suite::NormPowerBracket => norm_power_bracket(cfg)?,
        Suite::EntropySum => entropy_sum(cfg)?,
        Suite::Chunking => chunking(cfg)?,
        Suite::DyadicFit => dyadic(cfg)?,
    };
    Ok(SuiteReport::new(suite.name(), items))
}

fn signed_power(cfg: &SuiteConfig) -> Result<Vec<InequalityReport>> {
    cfg.s_or(&[1.1, 1.5, 2.0])
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            verify_lemma_4_1(
                s,
                &cfg.grid,
                cfg.per_axis,
                cfg.trials,
                cfg.sub_seed(Suite::SignedPower, i),
            )
        })
        .collect()
}

/// Runs `check` on a random space and its quantization at each `s`.
fn exponent_suite(
    cfg: &SuiteConfig,
    suite: Suite,
    check: impl Fn(&NakanoSpace, &NakanoSpace, f64, u64) -> Result<SuiteReport>,
) -> Result<Vec<InequalityReport>> {
    let mut items = Vec::new();
    for (i, s) in cfg.s_or(&[1.05, 1.2, 1.5]).into_iter().enumerate() {
        let mut rng = cfg.rng(suite, i);
        let np = random_space(&mut rng, cfg.atoms, cfg.r)?;
        let nq = quantize_exponent(&np, s)?;
        let report = check(&np, &nq, s, rng.gen())?;
        items.extend(report.items.into_iter().map(|mut r| {
            r.name = format!("{}[s={s}]", r.name);
            r
        }));
    }
    Ok(items)
}

/// Pairs at distance below `Δ_r(ε)` between random exponents in `[1, r]`.
fn continuity(cfg: &SuiteConfig) -> Result<Vec<InequalityReport>> {
    let mut items = Vec::new();
    for (i, eps) in cfg.eps_or(&[0.1, 0.01]).into_iter().enumerate() {
        let mut rng = cfg.rng(Suite::Continuity, i);
        let delta = delta_modulus(cfg.r, eps, &cfg.grid)?;
        let mut report = InequalityReport::new(format!("continuity[eps={eps}]"));
        for k in 0..cfg.trials {
            let np = random_space(&mut rng, cfg.atoms, cfg.r)?;
            let q = random_exponent(&mut rng, cfg.atoms, cfg.r);
            let nq = np.with_exponent(q, cfg.r)?;
            let f = random_unit_ball(&np, &mut rng)?;
            let h = random_unit_ball(&np, &mut rng)?;
            let hn = np.norm(&h)?;
            if hn == 0.0 {
                continue;
            }
            let step: f64 = rng.gen_range(0.0..1.0);
            let g = f.add(&h.scale(step * delta / hn))?;
            let d = np.norm(&f.sub(&g)?)?;
            if np.norm(&g)? > 1.0 || d >= delta {
                continue;
            }
            let de = nq.norm(&exponent_map(&np, &nq, &f)?.sub(&exponent_map(&np, &nq, &g)?)?)?;
            report.record(de, eps, NORM_TOL, || {
                format!("trial {k}: |f-g|={d}, delta={delta}")
            });
        }
        items.push(report);
    }
    Ok(items)
}

/// End to end: budget `s` for `ε`, quantize, check the ε-perturbation
/// conditions for the resulting exponent map on random unit-ball pairs.
fn epsilon_perturbation(cfg: &SuiteConfig) -> Result<Vec<InequalityReport>> {
    let mut items = Vec::new();
    let mut previous = f64::INFINITY;
    let mut monotone = InequalityReport::new("budget_monotone");
    for (i, eps) in cfg.eps_or(&[1.0, 0.1, 0.01]).into_iter().enumerate() {
        let mut rng = cfg.rng(Suite::EpsilonPerturbation, i);
        let budget = perturbation_budget(cfg.r, eps, &cfg.grid)?;
        monotone.record(budget.s, previous, 0.0, || {
            format!("eps={eps}: s={}", budget.s)
        });
        previous = budget.s;
        let np = random_space(&mut rng, cfg.atoms, cfg.r)?;
        let nq = quantize_exponent(&np, budget.s)?;
        let probes = (0..cfg.trials)
            .map(|_| {
                Ok((
                    random_unit_ball(&np, &mut rng)?,
                    random_unit_ball(&np, &mut rng)?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        let check = is_epsilon_perturbation(&np, &nq, |f| exponent_map(&np, &nq, f), &probes, eps)?;
        items.extend(check.conditions.into_iter().map(|mut r| {
            r.name = format!("{}[eps={eps}]", r.name);
            r
        }));
        let mut certified = InequalityReport::new(format!("budget_certified[eps={eps}]"));
        certified.record_exact(budget.certified, || format!("no certified s for eps={eps}"));
        items.push(certified);
    }
    items.push(monotone);
    Ok(items)
}

fn norm_power_bracket(cfg: &SuiteConfig) -> Result<Vec<InequalityReport>> {
    let mut rng = cfg.rng(Suite::NormPowerBracket, 0);
    let mut merged: Vec<InequalityReport> = Vec::new();
    for _ in 0..cfg.trials {
        let s = rng.gen_range(1.0..cfg.r.max(1.0 + 1e-9));
        let eps = rng.gen_range(0.0..=(cfg.r - s)).max(1e-6);
        let measure = random_measure(&mut rng, cfg.atoms)?;
        let p = (0..cfg.atoms).map(|_| rng.gen_range(s..=s + eps)).collect();
        let n = NakanoSpace::new(measure, p, s + eps)?;
        let f = random_unit_ball(&n, &mut rng)?;
        let report = verify_lemma_b1(&n, &f, s, eps)?;
        merge(&mut merged, report.items);
    }
    Ok(merged)
}

fn entropy_sum(cfg: &SuiteConfig) -> Result<Vec<InequalityReport>> {
    let mut items = Vec::new();
    for (i, n) in cfg.n_or(&[1, 4, 16, 64]).into_iter().enumerate() {
        let mut rng = cfg.rng(Suite::EntropySum, i);
        let mut merged = Vec::new();
        for _ in 0..cfg.trials {
            let a = random_simplex(&mut rng, 64);
            merge(&mut merged, vec![verify_lemma_b2(&a, n)?]);
        }
        items.extend(merged);
    }
    Ok(items)
}

fn chunking(cfg: &SuiteConfig) -> Result<Vec<InequalityReport>> {
    let ns = cfg.n_or(&[4, 16, 64, 256]);
    let mut reports: Vec<InequalityReport> = ns
        .iter()
        .map(|n| InequalityReport::new(format!("chunked_estimate[n={n}]")))
        .collect();
    let mut rng = cfg.rng(Suite::Chunking, 0);
    for k in 0..cfg.trials {
        let space = random_space(&mut rng, cfg.atoms, cfg.r)?;
        let f = random_unit_ball(&space, &mut rng)?;
        let theta = space.modular(&f)?.value();
        for (report, &n) in reports.iter_mut().zip(&ns) {
            let estimate = chunked_estimate(&chunk(&space, &f, n)?)?;
            report.record((theta - estimate).abs(), chunk_error_bound(n)?, 0.0, || {
                format!("trial {k}: modular {theta}, estimate {estimate}")
            });
        }
    }
    Ok(reports)
}

fn dyadic(cfg: &SuiteConfig) -> Result<Vec<InequalityReport>> {
    let eps = cfg.eps_values.first().copied().unwrap_or(1e-3);
    let fit = fit_dyadic(2, cfg.r, eps)?;
    let mut certified = InequalityReport::new("certified_error");
    certified.record(fit.certified_error, eps, 0.0, || format!("n = {}", fit.n));
    let mut scaled = InequalityReport::new("theta_scaled");
    let mut rng = cfg.rng(Suite::DyadicFit, 0);
    for k in 0..cfg.trials {
        let space = random_space(&mut rng, cfg.atoms, cfg.r)?;
        let f = random_unit_ball(&space, &mut rng)?;
        let exact = space.modular(&f.scale(2.0))?.value();
        let approx = theta_scaled(&space, &f, &fit)?;
        scaled.record(
            (exact - approx).abs(),
            fit.certified_error,
            NORM_TOL,
            || format!("trial {k}: Θ(2f) = {exact}, fit gives {approx}"),
        );
    }
    Ok(vec![certified, scaled])
}

/// Folds reports into `acc` by name, keeping counts and the worst witness.
fn merge(acc: &mut Vec<InequalityReport>, reports: Vec<InequalityReport>) {
    for r in reports {
        match acc.iter_mut().find(|a| a.name == r.name) {
            Some(a) => a.absorb(r),
            None => acc.push(r),
        }
    }
}
