//! Deterministic, stream-keyed random numbers.
//!
//! Every stochastic routine in this crate draws from an [`RngStream`]
//! identified by `(master_seed, stream_index)`. The generator is ChaCha12:
//! a keyed counter cipher, so distinct stream indices give statistically
//! independent sequences and the draw order never depends on scheduling.
//! Batch drivers split work into fixed-size chunks, pin chunk `i` to stream
//! `base + i`, and concatenate in chunk order — results are identical no
//! matter how many workers run.

use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::matrix::Scalar;

/// Draws per substream chunk in parallel batch drivers. Part of the
/// reproducibility contract: changing it reshuffles which stream serves
/// which draw.
pub const CHUNK: usize = 1024;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// One reproducible random stream.
#[derive(Debug, Clone)]
pub struct RngStream {
    master_seed: u64,
    stream_index: u64,
    rng: ChaCha12Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        // Expand the 64-bit master seed into a full ChaCha key; the stream
        // index becomes the cipher's stream word, not part of the key, so
        // all streams share one key schedule.
        let mut state = master_seed;
        let mut seed = [0u8; 32];
        for word in seed.chunks_exact_mut(8) {
            word.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut rng = ChaCha12Rng::from_seed(seed);
        rng.set_stream(stream_index);
        RngStream { master_seed, stream_index, rng }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }

    /// Fresh stream with the same master seed and a different index.
    pub fn substream(&self, stream_index: u64) -> Self {
        RngStream::new(self.master_seed, stream_index)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Standard normal draw.
    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Uniform in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }

    /// Uniform index in `[0, bound)`.
    pub fn index(&mut self, bound: usize) -> usize {
        self.rng.gen_range(0..bound)
    }

    /// Binomial(n, p) draw; `p` is clamped to [0, 1].
    pub fn binomial(&mut self, n: u64, p: f64) -> u64 {
        let p = p.clamp(0.0, 1.0);
        self.rng.sample(rand_distr::Binomial::new(n, p).expect("clamped probability"))
    }

    /// Standard entry for Gaussian matrix ensembles: N(0,1) over the reals,
    /// (N(0,1/2), N(0,1/2)) over the complexes so that E|z|^2 = 1.
    pub fn gaussian_entry<T: Scalar>(&mut self) -> T {
        match T::FIELD {
            crate::matrix::Field::Real => T::from_re(self.normal()),
            crate::matrix::Field::Complex => {
                let re = self.normal() * std::f64::consts::FRAC_1_SQRT_2;
                let im = self.normal() * std::f64::consts::FRAC_1_SQRT_2;
                // Build via Complex64 then convert; T is Complex64 here.
                let z = Complex64::new(re, im);
                scalar_from_complex::<T>(z)
            }
        }
    }
}

fn scalar_from_complex<T: Scalar>(z: Complex64) -> T {
    // Safe by construction: only called when T::FIELD is Complex, and the
    // only complex Scalar is Complex64 itself.
    debug_assert_eq!(T::FIELD, crate::matrix::Field::Complex);
    let any: &dyn std::any::Any = &z;
    *any.downcast_ref::<T>().expect("complex scalar must be Complex64")
}

/// Run `draws_per_item(stream, k)` for `k in 0..count`, chunked over
/// substreams `base_stream + chunk_id`. Deterministic in the worker count:
/// chunk boundaries depend only on `count` and [`CHUNK`].
pub fn parallel_batch<T, F>(seed: u64, base_stream: u64, count: usize, per_item: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut RngStream, usize) -> T + Sync,
{
    let chunks = count.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut stream = RngStream::new(seed, base_stream + c as u64);
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(count);
            (lo..hi).map(|k| per_item(&mut stream, k)).collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}
