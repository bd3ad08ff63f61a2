use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{domain, Result};
use crate::measure::{restrict_indices, SimpleFunction};
use crate::nakano::NakanoSpace;

/// Last index of the explicit partial sum for `C_0`.
const PARTIAL_TERMS: u64 = 1_000_000;

/// One exponent slice `K_k = [(n+k)/n, (n+k+1)/n)` with the part of `f` living on it.
#[derive(Debug, Clone, PartialEq)]
pub struct Chunk {
    pub k: usize,
    pub lower: f64,
    pub upper: f64,
    /// Atoms of the parent space whose exponent falls in the slice.
    pub atoms: Vec<usize>,
    pub space: NakanoSpace,
    pub function: SimpleFunction,
}

impl Chunk {
    /// Exponent applied to the chunk norm, `(n+k+1)/n`.
    pub fn power(&self) -> f64 {
        self.upper
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChunkPartition {
    pub n: usize,
    /// Number of slices, the least integer above `n(r−1)`.
    pub ell: usize,
    pub chunks: Vec<Chunk>,
}

fn slice_bound(n: usize, k: usize) -> f64 {
    (n + k) as f64 / n as f64
}

/// The `k` with `p ∈ K_k`, computed against the same floating bounds used
/// for the slices so that every exponent lands in exactly one of them.
fn slice_index(n: usize, p: f64) -> usize {
    let mut k = ((p - 1.0) * n as f64).floor().max(0.0) as usize;
    while k > 0 && slice_bound(n, k) > p {
        k -= 1;
    }
    while slice_bound(n, k + 1) <= p {
        k += 1;
    }
    k
}

/// Splits `f` by exponent value into `ℓ` slices of width `1/n`.
pub fn chunk(space: &NakanoSpace, f: &SimpleFunction, n: usize) -> Result<ChunkPartition> {
    if n == 0 {
        return domain("chunk resolution n must be >= 1");
    }
    space.space().check(f)?;
    let ell = (n as f64 * (space.r() - 1.0)).floor() as usize + 1;
    let mut members = vec![Vec::new(); ell];
    for (i, &p) in space.exponent().iter().enumerate() {
        let k = slice_index(n, p);
        debug_assert!(k < ell, "exponent {p} beyond the last slice");
        members[k.min(ell - 1)].push(i);
    }
    let chunks = members
        .into_iter()
        .enumerate()
        .map(|(k, atoms)| {
            let (measure, function) = restrict_indices(space.space(), f, &atoms)?;
            let exponent = atoms.iter().map(|&i| space.exponent()[i]).collect();
            Ok(Chunk {
                k,
                lower: slice_bound(n, k),
                upper: slice_bound(n, k + 1),
                atoms,
                space: NakanoSpace::new(measure, exponent, space.r())?,
                function,
            })
        })
        .collect::<Result<_>>()?;
    Ok(ChunkPartition { n, ell, chunks })
}

/// `Σ_k ‖f_k‖^{(n+k+1)/n}`; empty slices contribute nothing.
pub fn chunked_estimate(cp: &ChunkPartition) -> Result<f64> {
    let mut total = 0.0;
    for c in &cp.chunks {
        if c.atoms.is_empty() {
            continue;
        }
        let norm = c.space.norm(&c.function)?;
        if norm > 0.0 {
            total += norm.powf(c.power());
        }
    }
    Ok(total)
}

/// `C = C_0 + 4/e` with `C_0 = Σ_{k>=0} ln(k+3)/(k+3)^{3/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChunkConstant {
    /// Partial sum of `C_0` over `k <= 10^6`.
    pub c0_partial: f64,
    /// Integral bound on the remaining terms.
    pub c0_tail: f64,
    /// `c0_partial + c0_tail + 4/e`, an upper bound on `C`.
    pub c: f64,
}

/// The constant behind [`chunk_error_bound`], computed once.
pub fn chunk_constant() -> ChunkConstant {
    static CONSTANT: OnceLock<ChunkConstant> = OnceLock::new();
    *CONSTANT.get_or_init(|| {
        // summed from the smallest term up to keep the rounding small
        let c0_partial: f64 = (0..=PARTIAL_TERMS)
            .rev()
            .map(|k| {
                let x = (k + 3) as f64;
                x.ln() / (x * x.sqrt())
            })
            .sum();
        // the terms decrease, so Σ_{k>K} <= ∫_K^∞ ln(x+3)/(x+3)^{3/2} dx
        let z = (PARTIAL_TERMS + 3) as f64;
        let c0_tail = 2.0 * (z.ln() + 2.0) / z.sqrt();
        ChunkConstant {
            c0_partial,
            c0_tail,
            c: c0_partial + c0_tail + 4.0 / std::f64::consts::E,
        }
    })
}

/// `C/√n`.
pub fn chunk_error_bound(n: usize) -> Result<f64> {
    if n == 0 {
        return domain("chunk resolution n must be >= 1");
    }
    Ok(chunk_constant().c / (n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::AtomicMeasureSpace;

    fn nakano(weights: &[f64], p: &[f64], r: f64) -> NakanoSpace {
        NakanoSpace::new(
            AtomicMeasureSpace::from_weights(weights).unwrap(),
            p.to_vec(),
            r,
        )
        .unwrap()
    }

    #[test]
    fn slices_are_half_open() {
        assert_eq!(slice_index(4, 1.0), 0);
        assert_eq!(slice_index(4, 1.25), 1);
        assert_eq!(slice_index(4, 1.2499999), 0);
        assert_eq!(slice_index(3, 1.0 + 1.0 / 3.0), 1);
        assert_eq!(slice_index(10, 3.0), 20);
        for n in [1, 3, 7, 10, 64] {
            for i in 0..=200 {
                let p = 1.0 + 2.0 * i as f64 / 200.0;
                let k = slice_index(n, p);
                assert!(slice_bound(n, k) <= p && p < slice_bound(n, k + 1));
            }
        }
    }

    #[test]
    fn top_exponent_lands_in_last_slice() {
        let n = nakano(&[1.0, 1.0], &[1.0, 3.0], 3.0);
        let f = n.function(vec![0.5, 0.5]).unwrap();
        let cp = chunk(&n, &f, 4).unwrap();
        assert_eq!(cp.ell, 9);
        assert_eq!(cp.chunks[0].atoms, vec![0]);
        assert_eq!(cp.chunks[8].atoms, vec![1]);
        assert_eq!(cp.chunks.iter().map(|c| c.atoms.len()).sum::<usize>(), 2);
    }

    #[test]
    fn single_chunk_unit_norm_is_exact() {
        let n = nakano(&[0.3, 0.7], &[2.1, 2.1], 3.0);
        let f = n.function(vec![1.0, -2.0]).unwrap();
        let f = f.scale(1.0 / n.norm(&f).unwrap());
        let cp = chunk(&n, &f, 4).unwrap();
        let est = chunked_estimate(&cp).unwrap();
        assert!((est - 1.0).abs() < 1e-12);
        assert!((est - n.modular(&f).unwrap().value()).abs() < 1e-12);

        let zero = chunk(&n, &n.space().zero(), 4).unwrap();
        assert_eq!(chunked_estimate(&zero).unwrap(), 0.0);
    }

    #[test]
    fn constant_and_bound_scaling() {
        let c = chunk_constant();
        assert!(c.c > 4.0 / std::f64::consts::E);
        assert!(c.c0_tail > 0.0 && c.c0_tail < 0.05);
        // crude oracle: the integral from −1 bounds the whole series from above
        let whole = 2.0 * (2f64.ln() + 2.0) / 2f64.sqrt();
        assert!(c.c0_partial < whole);
        for n in [1, 3, 16, 100] {
            let b = chunk_error_bound(n).unwrap();
            let b4 = chunk_error_bound(4 * n).unwrap();
            assert!((b4 - b / 2.0).abs() < 1e-15);
            assert!(chunk_error_bound(n + 1).unwrap() < b);
        }
    }
}
