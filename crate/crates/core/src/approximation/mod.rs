//! Approximation schemes for the modular: dyadic-exponential fits of `m^x`,
//! which express `Θ(m f)` through `Θ(2^{-k} f)`, and the exponent-chunking
//! estimate `Σ_k ‖f_k‖^{(n+k+1)/n}`.

mod bounds;
mod chunk;
mod dyadic;

pub use bounds::{verify_lemma_b1, verify_lemma_b2};
pub use chunk::{
    chunk, chunk_constant, chunk_error_bound, chunked_estimate, Chunk, ChunkConstant,
    ChunkPartition,
};
pub use dyadic::{fit_dyadic, theta_scaled, DyadicFit, MAX_TERMS};
