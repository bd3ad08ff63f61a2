//! Seeded random generators for spaces, functions and embeddings.
//!
//! Used by the verifiers, the CLI suites and the tests. Every generator draws
//! only from the supplied RNG, so a fixed seed reproduces the same instances.

use rand::Rng;

use crate::embedding::{ImageAtom, RefinementEmbedding};
use crate::error::Result;
use crate::measure::{AtomicMeasureSpace, SimpleFunction};
use crate::nakano::NakanoSpace;

/// Weight drawn log-uniformly from `[1/16, 16]`.
pub fn random_weight<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.gen_range(-4.0..=4.0f64).exp2()
}

pub fn random_measure<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Result<AtomicMeasureSpace> {
    let weights: Vec<f64> = (0..len).map(|_| random_weight(rng)).collect();
    AtomicMeasureSpace::from_weights(&weights)
}

/// Exponents uniform on `[1, r]`.
pub fn random_exponent<R: Rng + ?Sized>(rng: &mut R, len: usize, r: f64) -> Vec<f64> {
    (0..len)
        .map(|_| if r > 1.0 { rng.gen_range(1.0..=r) } else { 1.0 })
        .collect()
}

pub fn random_space<R: Rng + ?Sized>(rng: &mut R, len: usize, r: f64) -> Result<NakanoSpace> {
    let measure = random_measure(rng, len)?;
    let p = random_exponent(rng, len, r);
    NakanoSpace::new(measure, p, r)
}

/// Values in `[-2, 2]` with roughly one atom in five set to zero.
pub fn random_function<R: Rng + ?Sized>(rng: &mut R, space: &AtomicMeasureSpace) -> SimpleFunction {
    let values = (0..space.len())
        .map(|_| {
            if rng.gen_bool(0.2) {
                0.0
            } else {
                rng.gen_range(-2.0..=2.0)
            }
        })
        .collect();
    space.function(values).expect("length matches")
}

/// A random function rescaled to a norm drawn from `(0, 1]`; one draw in ten
/// lands exactly on the unit sphere.
pub fn random_unit_ball<R: Rng + ?Sized>(n: &NakanoSpace, rng: &mut R) -> Result<SimpleFunction> {
    let f = random_function(rng, n.space());
    let norm = n.norm(&f)?;
    let target = if rng.gen_bool(0.1) {
        1.0
    } else {
        rng.gen_range(0.0..1.0f64).max(1e-6)
    };
    if norm == 0.0 {
        return Ok(f);
    }
    Ok(f.scale(target / norm))
}

/// Nonnegative weights on `len` points summing to one (a uniform draw from the
/// simplex), with a random subset zeroed.
pub fn random_simplex<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..len)
        .map(|_| {
            if rng.gen_bool(0.25) {
                0.0
            } else {
                -rng.gen_range(f64::MIN_POSITIVE..1.0f64).ln()
            }
        })
        .collect();
    let total: f64 = v.iter().sum();
    if total > 0.0 {
        let scale: f64 = rng.gen_range(0.5..=1.0);
        v.iter_mut().for_each(|x| *x *= scale / total);
    }
    v
}

/// An isometric refinement of `source`: each atom splits into one to three
/// target atoms carrying the same exponent, with random target weights and
/// coefficients solving `Σ ν_y c_y^p = μ_x`. `extra` unused target atoms are
/// appended.
pub fn random_isometric_embedding<R: Rng + ?Sized>(
    rng: &mut R,
    source: &NakanoSpace,
    extra: usize,
) -> Result<RefinementEmbedding> {
    let mu = source.space().weights();
    let mut nu = Vec::new();
    let mut q = Vec::new();
    let mut image = Vec::with_capacity(source.len());
    for (x, &p) in source.exponent().iter().enumerate() {
        let parts = rng.gen_range(1..=3usize);
        let shares: Vec<f64> = (0..parts).map(|_| rng.gen_range(0.1..=1.0f64)).collect();
        let total: f64 = shares.iter().sum();
        let mut atoms = Vec::with_capacity(parts);
        for share in shares {
            let weight = random_weight(rng);
            let coeff = (share / total * mu[x] / weight).powf(p.recip());
            atoms.push(ImageAtom {
                atom: nu.len(),
                coeff,
            });
            nu.push(weight);
            q.push(p);
        }
        image.push(atoms);
    }
    for _ in 0..extra {
        nu.push(random_weight(rng));
        q.push(if source.r() > 1.0 {
            rng.gen_range(1.0..=source.r())
        } else {
            1.0
        });
    }
    let target = NakanoSpace::new(AtomicMeasureSpace::from_weights(&nu)?, q, source.r())?;
    RefinementEmbedding::new(source.clone(), target, image)
}

/// A refinement that preserves measure and has all coefficients one: the
/// setting in which integrals are preserved.
pub fn random_measure_preserving<R: Rng + ?Sized>(
    rng: &mut R,
    source: &NakanoSpace,
) -> Result<RefinementEmbedding> {
    let mu = source.space().weights();
    let mut nu = Vec::new();
    let mut q = Vec::new();
    let mut image = Vec::with_capacity(source.len());
    for (x, &p) in source.exponent().iter().enumerate() {
        let parts = rng.gen_range(1..=3usize);
        let shares: Vec<f64> = (0..parts).map(|_| rng.gen_range(0.1..=1.0f64)).collect();
        let total: f64 = shares.iter().sum();
        let mut atoms = Vec::with_capacity(parts);
        let mut used = 0.0;
        for (j, share) in shares.iter().enumerate() {
            let weight = if j + 1 == parts {
                mu[x] - used
            } else {
                share / total * mu[x]
            };
            used += weight;
            atoms.push(ImageAtom {
                atom: nu.len(),
                coeff: 1.0,
            });
            nu.push(weight);
            q.push(p);
        }
        image.push(atoms);
    }
    let target = NakanoSpace::new(AtomicMeasureSpace::from_weights(&nu)?, q, source.r())?;
    RefinementEmbedding::new(source.clone(), target, image)
}
