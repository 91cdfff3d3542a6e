//! Synthetic ground truth and the two observation-noise processes.
//!
//! Random draws are keyed on `(seed, stream, voxel index)`: a ChaCha8 stream
//! is positioned at a fixed word offset per voxel, so the value drawn for a
//! voxel never depends on how the work is split between threads.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cube::{Dims, HsiCube};
use crate::error::{Error, Result};

const GAUSSIAN_STREAM: u64 = 0;
const IMPULSE_STREAM: u64 = 1;
const SYNTH_STREAM: u64 = 2;

/// 32-bit words consumed per voxel by every keyed draw.
const WORDS_PER_VOXEL: u128 = 4;
const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub sigma0: f64,
    pub impulse_ratio: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn gaussian(sigma0: f64, seed: u64) -> Self {
        NoiseSpec {
            sigma0,
            impulse_ratio: 0.0,
            seed,
        }
    }

    pub fn with_impulse(mut self, ratio: f64) -> Self {
        self.impulse_ratio = ratio;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_sigma(self.sigma0)?;
        check_ratio(self.impulse_ratio)
    }

    /// Gaussian noise followed by impulse corruption, both keyed on `seed`.
    pub fn apply(&self, clean: &HsiCube) -> Result<HsiCube> {
        self.validate()?;
        let noisy = add_gaussian(clean, self.sigma0, self.seed)?;
        if self.impulse_ratio > 0.0 {
            add_impulse(&noisy, self.impulse_ratio, self.seed)
        } else {
            Ok(noisy)
        }
    }
}

fn check_sigma(sigma0: f64) -> Result<()> {
    if sigma0.is_finite() && sigma0 >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("sigma0 must be finite and >= 0, got {sigma0}")))
    }
}

fn check_ratio(ratio: f64) -> Result<()> {
    if (0.0..=1.0).contains(&ratio) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("impulse ratio must lie in [0, 1], got {ratio}")))
    }
}

fn keyed_rng(seed: u64, stream: u64, first_voxel: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(first_voxel as u128 * WORDS_PER_VOXEL);
    rng
}

/// Uniform in (0, 1].
fn open_unit(bits: u64) -> f64 {
    ((bits >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform in [0, 1).
fn half_open_unit(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Runs `f(voxel_value, rng)` over every voxel, with `rng` positioned at that
/// voxel's keyed offset. Each call must consume exactly two `u64`s.
fn keyed_map(
    cube: &HsiCube,
    seed: u64,
    stream: u64,
    f: impl Fn(f64, &mut ChaCha8Rng) -> f64 + Sync,
) -> Result<HsiCube> {
    let src = cube.data();
    let mut out = vec![0.0; src.len()];
    out.par_chunks_mut(CHUNK).enumerate().for_each(|(c, dst)| {
        let start = c * CHUNK;
        let mut rng = keyed_rng(seed, stream, start);
        for (d, &s) in dst.iter_mut().zip(&src[start..]) {
            *d = f(s, &mut rng);
        }
    });
    HsiCube::new(cube.dims(), out)
}

/// Adds i.i.d. `N(0, sigma0²)` noise to every voxel. No clipping.
pub fn add_gaussian(cube: &HsiCube, sigma0: f64, seed: u64) -> Result<HsiCube> {
    check_sigma(sigma0)?;
    if sigma0 == 0.0 {
        return Ok(cube.clone());
    }
    keyed_map(cube, seed, GAUSSIAN_STREAM, |v, rng| {
        // Box–Muller, cosine branch only
        let u1 = open_unit(rng.next_u64());
        let u2 = half_open_unit(rng.next_u64());
        let z = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
        v + sigma0 * z
    })
}

/// Replaces each voxel, independently with probability `ratio`, by 0 or 1
/// (equally likely). Untouched voxels keep their value.
pub fn add_impulse(cube: &HsiCube, ratio: f64, seed: u64) -> Result<HsiCube> {
    check_ratio(ratio)?;
    if ratio == 0.0 {
        return Ok(cube.clone());
    }
    keyed_map(cube, seed, IMPULSE_STREAM, |v, rng| {
        let hit = half_open_unit(rng.next_u64()) < ratio;
        let salt = rng.next_u64() & 1 == 1;
        match (hit, salt) {
            (false, _) => v,
            (true, true) => 1.0,
            (true, false) => 0.0,
        }
    })
}

/// Ground-truth cube whose every full-band window has rank at most
/// `true_rank`.
///
/// Each pixel is a non-negative mixture of `true_rank` random spectra with
/// Dirichlet(1, …, 1) abundances scaled by a per-pixel brightness. The cube
/// is then divided by its maximum so values lie in [0, 1]; a pure scaling
/// keeps the separable rank structure intact.
pub fn synth_lowrank_cube(dims: Dims, true_rank: usize, seed: u64) -> Result<HsiCube> {
    dims.ensure_nonempty()?;
    if true_rank == 0 {
        return Err(Error::InvalidArgument("true rank must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(SYNTH_STREAM);

    let spectra: Vec<Vec<f64>> = (0..true_rank)
        .map(|_| (0..dims.bands).map(|_| rng.random_range(0.1..1.0)).collect())
        .collect();
    let pixels = dims.band_len();
    let mut abundance = vec![0.0; pixels * true_rank];
    for px in abundance.chunks_mut(true_rank) {
        let brightness = rng.random_range(0.5..1.0);
        for a in px.iter_mut() {
            *a = -open_unit(rng.next_u64()).ln();
        }
        let total: f64 = px.iter().sum();
        for a in px.iter_mut() {
            *a *= brightness / total;
        }
    }

    let mut data = vec![0.0; dims.len()];
    for (band, out) in data.chunks_mut(pixels).enumerate() {
        for (px, o) in out.iter_mut().enumerate() {
            let mix = &abundance[px * true_rank..(px + 1) * true_rank];
            *o = mix.iter().zip(&spectra).map(|(a, s)| a * s[band]).sum();
        }
    }
    let peak = data.iter().copied().fold(0.0f64, f64::max);
    for v in &mut data {
        *v /= peak;
    }
    HsiCube::new(dims, data)
}
