//! Command-line front end.
//!
//! Exit status: 0 on success, 1 when a verifier finds a violation (the report
//! is still written), 2 on unreadable input or a violated precondition.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::approximation::{chunk, chunk_error_bound, chunked_estimate, fit_dyadic};
use crate::embedding::{normalize, rigidity_check, RigidityReport};
use crate::error::Error;
use crate::format::row;
use crate::io::{function_file, load_embedding, load_function, load_space, InputError, SpaceFile};
use crate::measure::SimpleFunction;
use crate::nakano::NakanoSpace;
use crate::perturbation::{compute_constants, exponent_map, quantize_exponent, GridConfig};
use crate::report::SuiteReport;
use crate::sampling::{random_space, random_unit_ball};
use crate::suites::{run_suite, Suite, SuiteConfig};

#[derive(Debug, Parser)]
#[command(
    name = "nakano",
    version,
    about = "Computations in variable-exponent Lebesgue spaces"
)]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,

    /// Input JSON file; repeat for commands taking several.
    #[arg(long, global = true)]
    pub input: Vec<PathBuf>,

    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Exponent ratio(s) s; comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub s: Vec<f64>,

    /// Resolution(s) n; comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub n: Vec<usize>,

    #[arg(long, global = true)]
    pub m: Option<u32>,

    /// Tolerance(s) ε; comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub eps: Vec<f64>,

    /// Upper bound on exponents.
    #[arg(long, global = true)]
    pub r: Option<f64>,

    /// Step of the γ grid used to bound A_s.
    #[arg(long = "grid-step", global = true)]
    pub grid_step: Option<f64>,

    #[arg(long, global = true)]
    pub trials: Option<usize>,

    /// Verification suite name, or `all`.
    #[arg(long, global = true, default_value = "all")]
    pub suite: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Luxemburg norm and modular of functions: CSV `id,norm,modular`.
    Norm,
    /// Same output as `norm`.
    Modular,
    /// Certified constant bounds: CSV per value of `--s`.
    ConstantsTable,
    /// Exponent map onto the quantized exponent: CSV `function,id,p,q,value,image`.
    Perturb,
    /// Quantized exponent, written as a space file.
    Quantize,
    /// Normalisation and rigidity checks for an embedding (inputs: source, target, map).
    EmbedCheck,
    /// Dyadic-exponential fit of `m^x` on `[1, r]`: JSON.
    Fit,
    /// Chunked modular estimate against the exact modular: CSV.
    Converge,
    /// Randomised verification suites: JSON reports.
    Verify,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Input(#[from] InputError),
    #[error(transparent)]
    Library(#[from] Error),
    #[error("{0}")]
    Usage(String),
    #[error("writing output: {0}")]
    Output(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        2
    }
}

/// Whether every check in the run passed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Clean,
    Violations,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Clean => 0,
            Status::Violations => 1,
        }
    }

    fn from_passed(passed: bool) -> Self {
        if passed {
            Status::Clean
        } else {
            Status::Violations
        }
    }
}

fn usage<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Usage(msg.into()))
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serialisable");
    s.push('\n');
    s
}

fn emit(cfg: &RunConfig, text: &str) -> Result<(), CliError> {
    match &cfg.output {
        Some(path) => fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

impl RunConfig {
    fn grid(&self) -> Result<GridConfig, CliError> {
        match self.grid_step {
            None => Ok(GridConfig::default()),
            Some(step) if step > 0.0 && step <= 0.25 => Ok(GridConfig::with_grid_step(step)),
            Some(step) => usage(format!("--grid-step {step} must lie in (0, 0.25]")),
        }
    }

    fn single_s(&self) -> Result<f64, CliError> {
        match self.s.as_slice() {
            [s] => Ok(*s),
            _ => usage("this command takes exactly one --s"),
        }
    }

    /// The space from the first input and the functions it or later inputs carry.
    fn space_and_functions(
        &self,
    ) -> Result<(NakanoSpace, Vec<(String, SimpleFunction)>), CliError> {
        let Some(first) = self.input.first() else {
            return usage("expected --input <space.json>");
        };
        let (n, inline) = load_space(first)?;
        let mut functions = Vec::new();
        if let Some(f) = inline {
            functions.push((stem(first), f));
        }
        for path in &self.input[1..] {
            functions.push((stem(path), load_function(path, n.space())?));
        }
        Ok((n, functions))
    }
}

pub fn run(cfg: &RunConfig) -> Result<Status, CliError> {
    match cfg.command {
        Command::Norm | Command::Modular => norm(cfg),
        Command::ConstantsTable => constants_table(cfg),
        Command::Perturb => perturb(cfg),
        Command::Quantize => quantize(cfg),
        Command::EmbedCheck => embed_check(cfg),
        Command::Fit => fit(cfg),
        Command::Converge => converge(cfg),
        Command::Verify => verify(cfg),
    }
}

fn norm(cfg: &RunConfig) -> Result<Status, CliError> {
    let (n, functions) = cfg.space_and_functions()?;
    if functions.is_empty() {
        return usage(
            "no function given: add \"values\" to the space file or pass a function file",
        );
    }
    let mut out = String::from("id,norm,modular\n");
    for (id, f) in &functions {
        let norm = n.norm(f)?;
        let modular = n.modular(f)?.value();
        writeln!(out, "{id},{}", row(&[norm, modular])).expect("string write");
    }
    emit(cfg, &out)?;
    Ok(Status::Clean)
}

fn constants_table(cfg: &RunConfig) -> Result<Status, CliError> {
    let grid = cfg.grid()?;
    let s_values = if cfg.s.is_empty() {
        std::iter::once(1.0)
            .chain((0..=10).rev().map(|k| 1.0 + (-(k as f64)).exp2()))
            .collect()
    } else {
        cfg.s.clone()
    };
    let r = cfg
        .r
        .unwrap_or_else(|| s_values.iter().copied().fold(1.0, f64::max));
    let mut out =
        String::from("s,A_lower,A_upper,B_lower,B_upper,C_lower,C_upper,grid_step,slack\n");
    for &s in &s_values {
        let c = compute_constants(s, r, &grid)?;
        out.push_str(&row(&[
            s,
            c.a.lower,
            c.a.upper,
            c.b.lower,
            c.b.upper,
            c.c.lower,
            c.c.upper,
            c.grid_step,
            c.slack,
        ]));
        out.push('\n');
    }
    emit(cfg, &out)?;
    Ok(Status::Clean)
}

fn perturb(cfg: &RunConfig) -> Result<Status, CliError> {
    let s = cfg.single_s()?;
    let (np, functions) = cfg.space_and_functions()?;
    let nq = quantize_exponent(&np, s)?;
    let mut out = String::from("function,id,p,q,value,image\n");
    for (name, f) in &functions {
        let image = exponent_map(&np, &nq, f)?;
        for i in 0..np.len() {
            writeln!(
                out,
                "{name},{},{}",
                np.space().ids()[i],
                row(&[
                    np.exponent()[i],
                    nq.exponent()[i],
                    f.values()[i],
                    image.values()[i]
                ])
            )
            .expect("string write");
        }
    }
    emit(cfg, &out)?;
    Ok(Status::Clean)
}

fn quantize(cfg: &RunConfig) -> Result<Status, CliError> {
    let s = cfg.single_s()?;
    let (np, _) = cfg.space_and_functions()?;
    let nq = quantize_exponent(&np, s)?;
    emit(cfg, &json(&SpaceFile::from_nakano(&nq)))?;
    Ok(Status::Clean)
}

#[derive(Serialize)]
struct EmbedOutput {
    isometric: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<Witness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    zeta: Option<std::collections::BTreeMap<String, f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rigidity: Option<RigidityReport>,
}

#[derive(Serialize)]
struct Witness {
    probe: String,
    source_norm: f64,
    image_norm: f64,
}

fn embed_check(cfg: &RunConfig) -> Result<Status, CliError> {
    let [source, target, map] = cfg.input.as_slice() else {
        return usage("embed-check takes --input source.json --input target.json --input map.json");
    };
    let (source, _) = load_space(source)?;
    let (target, _) = load_space(target)?;
    let e = load_embedding(map, source, target)?;
    let output = match normalize(&e) {
        Ok(norm) => {
            let rigidity = if e.source().len() >= 2 {
                Some(rigidity_check(&e)?)
            } else {
                None
            };
            EmbedOutput {
                isometric: true,
                witness: None,
                zeta: Some(function_file(&norm.zeta).values),
                rigidity,
            }
        }
        Err(Error::NotIsometric {
            probe,
            source_norm,
            image_norm,
        }) => EmbedOutput {
            isometric: false,
            witness: Some(Witness {
                probe,
                source_norm,
                image_norm,
            }),
            zeta: None,
            rigidity: None,
        },
        Err(other) => return Err(other.into()),
    };
    emit(cfg, &json(&output))?;
    let passed = output.isometric && output.rigidity.as_ref().map_or(true, |r| r.passed);
    Ok(Status::from_passed(passed))
}

fn fit(cfg: &RunConfig) -> Result<Status, CliError> {
    let m = cfg.m.unwrap_or(2);
    let r = cfg.r.unwrap_or(3.0);
    let eps = match cfg.eps.as_slice() {
        [] => 1e-3,
        [e] => *e,
        _ => return usage("fit takes one --eps"),
    };
    let fit = fit_dyadic(m, r, eps)?;
    emit(cfg, &json(&fit))?;
    Ok(Status::Clean)
}

/// Converges on the function from the inputs, or on a random unit-ball
/// function (over a random 32-atom space when no space is given).
fn converge(cfg: &RunConfig) -> Result<Status, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (space, f) = if cfg.input.is_empty() {
        let space = random_space(&mut rng, 32, cfg.r.unwrap_or(3.0))?;
        let f = random_unit_ball(&space, &mut rng)?;
        (space, f)
    } else {
        let (space, mut functions) = cfg.space_and_functions()?;
        let f = match functions.len() {
            0 => random_unit_ball(&space, &mut rng)?,
            1 => functions.pop().expect("one function").1,
            _ => return usage("converge takes at most one function"),
        };
        let norm = space.norm(&f)?;
        if norm > 1.0 + 1e-9 {
            return Err(Error::Contract(format!("‖f‖ = {norm} exceeds 1")).into());
        }
        (space, f)
    };
    let ns = if cfg.n.is_empty() {
        vec![4, 16, 64, 256]
    } else {
        cfg.n.clone()
    };
    let exact = space.modular(&f)?.value();
    let mut out = String::from("n,estimate,true_modular,abs_error,bound\n");
    let mut passed = true;
    for &n in &ns {
        let estimate = chunked_estimate(&chunk(&space, &f, n)?)?;
        let bound = chunk_error_bound(n)?;
        let err = (estimate - exact).abs();
        passed &= err <= bound;
        writeln!(out, "{n},{}", row(&[estimate, exact, err, bound])).expect("string write");
    }
    emit(cfg, &out)?;
    Ok(Status::from_passed(passed))
}

fn verify(cfg: &RunConfig) -> Result<Status, CliError> {
    let suites: Vec<Suite> = if cfg.suite == "all" {
        Suite::ALL.to_vec()
    } else {
        cfg.suite
            .split(',')
            .map(|name| {
                Suite::from_name(name.trim()).ok_or_else(|| {
                    let known: Vec<&str> = Suite::ALL.iter().map(|s| s.name()).collect();
                    CliError::Usage(format!(
                        "unknown suite {name:?}; known: all, {}",
                        known.join(", ")
                    ))
                })
            })
            .collect::<Result<_, _>>()?
    };
    let mut suite_cfg = SuiteConfig {
        seed: cfg.seed,
        s_values: cfg.s.clone(),
        eps_values: cfg.eps.clone(),
        n_values: cfg.n.clone(),
        grid: cfg.grid()?,
        ..SuiteConfig::default()
    };
    if let Some(trials) = cfg.trials {
        suite_cfg.trials = trials;
    }
    if let Some(r) = cfg.r {
        suite_cfg.r = r;
    }
    let reports: Vec<SuiteReport> = suites
        .into_iter()
        .map(|s| {
            log::info!("running suite {}", s.name());
            run_suite(s, &suite_cfg)
        })
        .collect::<Result<_, _>>()?;
    let passed = reports.iter().all(|r| r.passed);
    emit(cfg, &json(&reports))?;
    Ok(Status::from_passed(passed))
}

/// Runs the CLI on `args` and returns the process exit code, printing errors.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cfg = match RunConfig::try_parse_from(args) {
        Ok(cfg) => cfg,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cfg) {
        Ok(status) => status.exit_code(),
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
