//! Lattice embeddings between Nakano spaces realised on atom refinements.
//!
//! Each source atom is sent to a set of target atoms with positive
//! coefficients; the sets are pairwise disjoint, so disjoint functions map to
//! disjoint functions. Normalisation rescales the target measure so that the
//! embedding sends indicators to indicators, after which the rigidity
//! conclusions (exponent matching, measure preservation, modular
//! preservation) can be checked numerically.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{contract, domain, Error, Result};
use crate::measure::{integrate, AtomicMeasureSpace, SimpleFunction};
use crate::nakano::{essential_range, NakanoSpace};

/// Relative tolerance for the isometry probe and every rigidity check.
pub const RIGIDITY_TOL: f64 = 1e-9;

const RANDOM_PROBES: usize = 64;
const PROBE_SEED: u64 = 0x6e616b616e6f;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ImageAtom {
    /// Index into the target space.
    pub atom: usize,
    pub coeff: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinementEmbedding {
    source: NakanoSpace,
    target: NakanoSpace,
    image: Vec<Vec<ImageAtom>>,
    owner: Vec<Option<usize>>,
}

impl RefinementEmbedding {
    /// `image[i]` lists the target atoms (by index) and coefficients for source atom `i`.
    pub fn new(
        source: NakanoSpace,
        target: NakanoSpace,
        image: Vec<Vec<ImageAtom>>,
    ) -> Result<Self> {
        if image.len() != source.len() {
            return domain(format!(
                "embedding maps {} atoms but the source has {}",
                image.len(),
                source.len()
            ));
        }
        let mut owner = vec![None; target.len()];
        for (i, atoms) in image.iter().enumerate() {
            if atoms.is_empty() {
                return domain(format!(
                    "source atom {:?} has an empty image",
                    source.space().ids()[i]
                ));
            }
            for a in atoms {
                if a.atom >= target.len() {
                    return domain(format!("target atom index {} out of range", a.atom));
                }
                if !a.coeff.is_finite() || a.coeff <= 0.0 {
                    return domain(format!(
                        "coefficient {} on target atom {:?} must be finite and > 0",
                        a.coeff,
                        target.space().ids()[a.atom]
                    ));
                }
                if let Some(prev) = owner[a.atom].replace(i) {
                    return domain(format!(
                        "target atom {:?} is claimed by source atoms {:?} and {:?}",
                        target.space().ids()[a.atom],
                        source.space().ids()[prev],
                        source.space().ids()[i]
                    ));
                }
            }
        }
        Ok(Self {
            source,
            target,
            image,
            owner,
        })
    }

    /// Builds from atom ids: `map` holds `(source id, [(target id, coeff)])`.
    pub fn from_ids(
        source: NakanoSpace,
        target: NakanoSpace,
        map: &[(String, Vec<(String, f64)>)],
    ) -> Result<Self> {
        let mut image = vec![None; source.len()];
        for (src, targets) in map {
            let i = source
                .space()
                .index_of(src)
                .ok_or_else(|| Error::Domain(format!("unknown source atom {src:?}")))?;
            let atoms = targets
                .iter()
                .map(|(t, c)| {
                    target
                        .space()
                        .index_of(t)
                        .map(|atom| ImageAtom { atom, coeff: *c })
                        .ok_or_else(|| Error::Domain(format!("unknown target atom {t:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            if image[i].replace(atoms).is_some() {
                return domain(format!("source atom {src:?} mapped twice"));
            }
        }
        let image = image
            .into_iter()
            .enumerate()
            .map(|(i, a)| {
                a.ok_or_else(|| {
                    Error::Domain(format!(
                        "source atom {:?} is not mapped",
                        source.space().ids()[i]
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(source, target, image)
    }

    pub fn source(&self) -> &NakanoSpace {
        &self.source
    }

    pub fn target(&self) -> &NakanoSpace {
        &self.target
    }

    pub fn image(&self, source_atom: usize) -> &[ImageAtom] {
        &self.image[source_atom]
    }

    /// Source atom whose image contains target atom `y`.
    pub fn owner(&self, y: usize) -> Option<usize> {
        self.owner[y]
    }

    pub fn apply(&self, f: &SimpleFunction) -> Result<SimpleFunction> {
        self.source.space().check(f)?;
        let mut out = vec![0.0; self.target.len()];
        for (atoms, v) in self.image.iter().zip(f.values()) {
            for a in atoms {
                out[a.atom] = a.coeff * v;
            }
        }
        self.target.function(out)
    }

    pub fn is_characteristic_preserving(&self) -> bool {
        self.image.iter().flatten().all(|a| a.coeff == 1.0)
    }

    /// Largest relative gap between a source weight and the target mass of its image.
    pub fn measure_defect(&self) -> f64 {
        let tw = self.target.space().weights();
        self.image
            .iter()
            .zip(self.source.space().weights())
            .map(|(atoms, w)| {
                let mass: f64 = atoms.iter().map(|a| tw[a.atom]).sum();
                (mass - w).abs() / w
            })
            .fold(0.0, f64::max)
    }

    fn with_target(&self, target: NakanoSpace, image: Vec<Vec<ImageAtom>>) -> Self {
        Self {
            source: self.source.clone(),
            target,
            image,
            owner: self.owner.clone(),
        }
    }
}

pub fn apply(e: &RefinementEmbedding, f: &SimpleFunction) -> Result<SimpleFunction> {
    e.apply(f)
}

/// Compares `∫ f dμ` with `∫ θ̂f dν` for an indicator- and measure-preserving embedding.
pub fn check_integral_preservation(e: &RefinementEmbedding, f: &SimpleFunction) -> Result<bool> {
    if !e.is_characteristic_preserving() {
        return contract("integral preservation needs all coefficients equal to 1");
    }
    let defect = e.measure_defect();
    if defect > 1e-12 {
        return contract(format!(
            "embedding is not measure preserving (relative defect {defect:e})"
        ));
    }
    let lhs = integrate(e.source.space(), f)?;
    let rhs = integrate(e.target.space(), &e.apply(f)?)?;
    Ok((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()))
}

/// Zero-fixing pointwise operations that commute with indicator-preserving embeddings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PointwiseOp {
    Abs,
    Join,
    Meet,
    Sum,
    /// `t ↦ sgn(t)|t|^a`
    SignedPower(f64),
}

impl PointwiseOp {
    /// Evaluates at `(a, b)`; unary operations ignore `b`.
    pub fn eval(self, a: f64, b: f64) -> f64 {
        match self {
            PointwiseOp::Abs => a.abs(),
            PointwiseOp::Join => a.max(b),
            PointwiseOp::Meet => a.min(b),
            PointwiseOp::Sum => a + b,
            PointwiseOp::SignedPower(e) => a.signum() * a.abs().powf(e) * f64::from(a != 0.0),
        }
    }

    pub fn apply(self, f: &SimpleFunction, g: &SimpleFunction) -> Result<SimpleFunction> {
        f.zip_with(g, |a, b| self.eval(a, b))
    }
}

/// The probe set on which isometry is tested: indicators of single atoms,
/// indicators of atom pairs, and a fixed batch of random nonnegative functions.
pub fn probe_set(space: &AtomicMeasureSpace) -> Vec<(String, SimpleFunction)> {
    let n = space.len();
    let mut probes = Vec::new();
    for i in 0..n {
        probes.push((format!("chi[{}]", space.ids()[i]), space.indicator(&[i])));
    }
    for i in 0..n {
        for j in i + 1..n {
            probes.push((
                format!("chi[{}]+chi[{}]", space.ids()[i], space.ids()[j]),
                space.indicator(&[i, j]),
            ));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED);
    for k in 0..RANDOM_PROBES {
        let values = (0..n).map(|_| rng.gen_range(0.0..2.0)).collect();
        probes.push((
            format!("random[{k}]"),
            space.function(values).expect("sized"),
        ));
    }
    probes
}

/// Worst relative norm change over the probe set, with the first offending probe.
fn isometry_defect(e: &RefinementEmbedding) -> Result<(f64, Option<Error>)> {
    let mut worst = 0.0f64;
    let mut witness = None;
    for (name, f) in probe_set(e.source.space()) {
        let a = e.source.norm(&f)?;
        let b = e.target.norm(&e.apply(&f)?)?;
        let rel = (a - b).abs() / a.max(f64::MIN_POSITIVE);
        worst = worst.max(rel);
        if rel > RIGIDITY_TOL && witness.is_none() {
            witness = Some(Error::NotIsometric {
                probe: name,
                source_norm: a,
                image_norm: b,
            });
        }
    }
    Ok((worst, witness))
}

/// Result of [`normalize`].
#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    /// Density `dλ/dν`.
    pub zeta: SimpleFunction,
    /// The rescaled target measure `λ`.
    pub lambda: AtomicMeasureSpace,
    /// `D_{ν,λ} ∘ θ`, targeting `L_q(λ)`.
    pub embedding: RefinementEmbedding,
}

fn normalize_unchecked(e: &RefinementEmbedding) -> Result<Normalized> {
    let nu = e.target.space();
    let q = e.target.exponent();
    let mut zeta = vec![1.0; nu.len()];
    for a in e.image.iter().flatten() {
        zeta[a.atom] = a.coeff.powf(q[a.atom]);
    }
    let lambda_weights = nu.weights().iter().zip(&zeta).map(|(w, z)| w * z).collect();
    let lambda = nu.reweighted(lambda_weights)?;
    let image = e
        .image
        .iter()
        .map(|atoms| {
            atoms
                .iter()
                .map(|a| ImageAtom {
                    atom: a.atom,
                    coeff: a.coeff * zeta[a.atom].powf(-1.0 / q[a.atom]),
                })
                .collect()
        })
        .collect();
    let target = e.target.over(&lambda)?;
    Ok(Normalized {
        zeta: nu.function(zeta)?,
        lambda,
        embedding: e.with_target(target, image),
    })
}

/// Rescales the target measure by `ζ = coeff^q` on image atoms (1 elsewhere)
/// so that the composed embedding sends indicators to indicators.
pub fn normalize(e: &RefinementEmbedding) -> Result<Normalized> {
    if let (_, Some(witness)) = isometry_defect(e)? {
        return Err(witness);
    }
    normalize_unchecked(e)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RigidityReport {
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

impl RigidityReport {
    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub const CHECK_ISOMETRY: &str = "isometric_on_probes";
pub const CHECK_INDICATORS: &str = "characteristic_preserving";
pub const CHECK_EXPONENT: &str = "exponent_matches";
pub const CHECK_MEASURE: &str = "measure_preserving";
pub const CHECK_MODULAR: &str = "modular_preserved";
pub const CHECK_RANGE: &str = "essential_range_contained";

/// Normalises `e` and checks the rigidity conclusions on the result.
///
/// The isometry probe is reported as its own check rather than aborting, so a
/// broken embedding still yields residuals for every conclusion.
pub fn rigidity_check(e: &RefinementEmbedding) -> Result<RigidityReport> {
    if e.source.len() < 2 {
        return contract(format!(
            "rigidity needs a source of dimension >= 2, got {}",
            e.source.len()
        ));
    }
    let (iso, _) = isometry_defect(e)?;
    let norm = normalize_unchecked(e)?;
    let ne = &norm.embedding;

    let coeff_residual = ne
        .image
        .iter()
        .flatten()
        .map(|a| (a.coeff - 1.0).abs())
        .fold(0.0, f64::max);

    let p = e.source.exponent();
    let q = e.target.exponent();
    let exponent_residual = ne
        .image
        .iter()
        .enumerate()
        .flat_map(|(i, atoms)| atoms.iter().map(move |a| (q[a.atom] - p[i]).abs()))
        .fold(0.0, f64::max);

    let lw = norm.lambda.weights();
    let measure_residual = ne
        .image
        .iter()
        .zip(e.source.space().weights())
        .map(|(atoms, w)| (atoms.iter().map(|a| lw[a.atom]).sum::<f64>() - w).abs() / w)
        .fold(0.0, f64::max);

    let mut modular_residual = 0.0f64;
    for (_, f) in probe_set(e.source.space()) {
        let a = e.source.modular(&f)?.value();
        let b = ne.target.modular(&ne.apply(&f)?)?.value();
        modular_residual = modular_residual.max((a - b).abs() / a.max(f64::MIN_POSITIVE));
    }

    let q_range = essential_range(&e.target);
    let range_residual = essential_range(&e.source)
        .iter()
        .map(|pv| {
            q_range
                .iter()
                .map(|qv| (qv - pv).abs())
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);

    let checks: Vec<CheckResult> = [
        (CHECK_ISOMETRY, iso),
        (CHECK_INDICATORS, coeff_residual),
        (CHECK_EXPONENT, exponent_residual),
        (CHECK_MEASURE, measure_residual),
        (CHECK_MODULAR, modular_residual),
        (CHECK_RANGE, range_residual),
    ]
    .into_iter()
    .map(|(name, residual)| CheckResult {
        name: name.to_string(),
        passed: residual <= RIGIDITY_TOL,
        residual,
    })
    .collect();
    Ok(RigidityReport {
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}
