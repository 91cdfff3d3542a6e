//! Closed-form variance of the denoised cube.
//!
//! Per patch, the entry `(u, v)` of a rank-r fit has variance
//! `σ₀² (‖U_u‖² + ‖V_v‖²)`. Overlapping patches estimate the same voxel with
//! correlated errors; their average is propagated as the variance of a
//! weighted sum with pairwise correlation `η`.

use rayon::prelude::*;

use crate::cube::{Dims, HsiCube};
use crate::error::{Error, Result};
use crate::lowrank::LowRankFactors;
use crate::window::{order_by_grid, PatchGrid, PatchOrigin};

/// Row and column leverage scores of a factorisation.
#[derive(Debug, Clone, PartialEq)]
pub struct LeverageMap {
    /// `‖U_u‖²` for each of the K rows.
    pub row: Vec<f64>,
    /// `‖V_v‖²` for each of the L columns.
    pub col: Vec<f64>,
}

impl LeverageMap {
    /// `v̂_uv`.
    pub fn value(&self, u: usize, v: usize) -> f64 {
        self.row[u] + self.col[v]
    }
}

pub fn leverage_map(factors: &LowRankFactors) -> LeverageMap {
    LeverageMap {
        row: factors.u.row_iter().map(|r| r.norm_squared()).collect(),
        col: factors.v.row_iter().map(|r| r.norm_squared()).collect(),
    }
}

/// Patch-shaped variance `σ₀² v̂_uv`, laid out through the inverse permutation.
pub fn patch_variance(lev: &LeverageMap, sigma0: f64, patch_side: usize, bands: usize) -> Result<HsiCube> {
    if !(sigma0.is_finite() && sigma0 >= 0.0) {
        return Err(Error::InvalidArgument(format!("sigma0 must be finite and >= 0, got {sigma0}")));
    }
    let k = patch_side * patch_side;
    if lev.row.len() != k || lev.col.len() != bands {
        return Err(Error::ShapeMismatch(format!(
            "leverage map {}x{} does not match a {patch_side}x{patch_side}x{bands} patch",
            lev.row.len(),
            lev.col.len()
        )));
    }
    let s2 = sigma0 * sigma0;
    // column-major K×L is exactly the BSQ patch layout
    let mut data = Vec::with_capacity(k * bands);
    for &c in &lev.col {
        data.extend(lev.row.iter().map(|&r| s2 * (r + c)));
    }
    Ok(HsiCube::from_raw(Dims::new(patch_side, patch_side, bands), data))
}

/// Correlation model between two patches' estimates of a shared voxel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CorrelationRule {
    /// `η = N_shared / (K·L)`, the fraction of elements the windows share.
    #[default]
    OverlapRatio,
    /// `η ≡ 0`.
    Independent,
    /// `η ≡ 1`.
    Full,
}

impl CorrelationRule {
    pub fn eta(&self, p: PatchOrigin, q: PatchOrigin, patch_side: usize) -> f64 {
        match self {
            CorrelationRule::OverlapRatio => overlap_ratio(p, q, patch_side),
            CorrelationRule::Independent => 0.0,
            CorrelationRule::Full => 1.0,
        }
    }
}

/// Shared fraction of two full-band `J×J` windows. The band extent is common
/// to both windows and cancels.
pub fn overlap_ratio(p: PatchOrigin, q: PatchOrigin, patch_side: usize) -> f64 {
    let shared = |a: usize, b: usize| patch_side.saturating_sub(a.abs_diff(b));
    (shared(p.row, q.row) * shared(p.col, q.col)) as f64 / (patch_side * patch_side) as f64
}

/// η for every relative offset `(Δrow, Δcol)` with `|Δ| < J`; η depends only
/// on the offset, never on absolute position.
#[derive(Debug, Clone)]
pub struct EtaTable {
    side: usize,
    values: Vec<f64>,
}

impl EtaTable {
    pub fn new(rule: CorrelationRule, patch_side: usize) -> Self {
        let w = 2 * patch_side - 1;
        let mut values = Vec::with_capacity(w * w);
        let anchor = PatchOrigin::new(patch_side - 1, patch_side - 1);
        for dr in 0..w {
            for dc in 0..w {
                values.push(rule.eta(anchor, PatchOrigin::new(dr, dc), patch_side));
            }
        }
        EtaTable {
            side: patch_side,
            values,
        }
    }

    pub fn get(&self, p: PatchOrigin, q: PatchOrigin) -> f64 {
        let j = self.side;
        if p.row.abs_diff(q.row) >= j || p.col.abs_diff(q.col) >= j {
            return 0.0;
        }
        let dr = q.row + j - 1 - p.row;
        let dc = q.col + j - 1 - p.col;
        self.values[dr * (2 * j - 1) + dc]
    }
}

/// Sliding-window variance aggregation. For voxel ξ covered by φ patches,
///
/// `σ̂²_ξ = (1/φ²) [ Σ_p σ²_p + 2 Σ_{p<q} η(p,q) σ_p σ_q ]`,
///
/// with each unordered pair counted once.
pub fn aggregate_variance(
    patch_vars: &[(PatchOrigin, HsiCube)],
    grid: &PatchGrid,
    rule: CorrelationRule,
) -> Result<HsiCube> {
    let ordered = order_by_grid(patch_vars, grid)?;
    aggregate_variance_ordered(&ordered, grid, rule)
}

pub(crate) fn aggregate_variance_ordered(
    patch_vars: &[&HsiCube],
    grid: &PatchGrid,
    rule: CorrelationRule,
) -> Result<HsiCube> {
    let expected = grid.patch_dims();
    if patch_vars.len() != grid.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} variance patches for {} windows",
            patch_vars.len(),
            grid.len()
        )));
    }
    for p in patch_vars {
        if p.dims() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: p.dims(),
            });
        }
        if let Some((index, &value)) = p.data().iter().enumerate().find(|(_, &v)| !(v >= 0.0)) {
            return Err(Error::NegativeVariance { index, value });
        }
    }
    let (k, bands) = (expected.rows * expected.cols, expected.bands);
    let pixel_major: Vec<Vec<f64>> = patch_vars
        .par_iter()
        .map(|p| {
            let d = p.data();
            let mut t = vec![0.0; d.len()];
            for band in 0..bands {
                for u in 0..k {
                    t[u * bands + band] = d[band * k + u];
                }
            }
            t
        })
        .collect();
    let slices: Vec<&[f64]> = pixel_major.iter().map(Vec::as_slice).collect();
    Ok(HsiCube::from_raw(grid.dims(), accumulate_variance(&slices, grid, rule)))
}

/// Pixel-major patch variance `σ₀² v̂_uv` stored at `u·L + v`, the layout
/// consumed by [`accumulate_variance`].
pub(crate) fn pixel_major_variance(lev: &LeverageMap, sigma0: f64) -> Vec<f64> {
    let s2 = sigma0 * sigma0;
    let mut out = Vec::with_capacity(lev.row.len() * lev.col.len());
    for &r in &lev.row {
        out.extend(lev.col.iter().map(|&c| s2 * (r + c)));
    }
    out
}

/// Core of the aggregation over validated, grid-ordered, non-negative patch
/// variances in pixel-major layout (all bands of a pixel contiguous).
///
/// Work is split by image row. The covering set and pair weights of a pixel
/// are shared by all its bands, and every per-voxel sum runs in grid order so
/// the result does not depend on scheduling.
pub(crate) fn accumulate_variance(patch_vars: &[&[f64]], grid: &PatchGrid, rule: CorrelationRule) -> Vec<f64> {
    let dims = grid.dims();
    let (rows, cols, bands) = (dims.rows, dims.cols, dims.bands);
    let j = grid.patch_dims().rows;
    let eta = EtaTable::new(rule, j);
    let origins = grid.origins();
    let correlated = rule != CorrelationRule::Independent;

    let row_blocks: Vec<Vec<f64>> = (0..rows)
        .into_par_iter()
        .map(|row| {
            let mut block = vec![0.0; cols * bands];
            let mut covering: Vec<usize> = Vec::new();
            let mut weights: Vec<f64> = Vec::new();
            let mut totals = vec![0.0; bands];
            let mut stds: Vec<f64> = Vec::new();
            for col in 0..cols {
                covering.clear();
                covering.extend(grid.covering(row, col));
                let phi = covering.len();
                let pairs = correlated && phi > 1;
                totals.iter_mut().for_each(|t| *t = 0.0);
                if pairs {
                    stds.resize(phi * bands, 0.0);
                }
                for (a, &p) in covering.iter().enumerate() {
                    let o = origins[p];
                    let u = (row - o.row) * j + (col - o.col);
                    let src = &patch_vars[p][u * bands..(u + 1) * bands];
                    for (t, v) in totals.iter_mut().zip(src) {
                        *t += v;
                    }
                    if pairs {
                        for (s, v) in stds[a * bands..(a + 1) * bands].iter_mut().zip(src) {
                            *s = v.sqrt();
                        }
                    }
                }
                if pairs {
                    weights.clear();
                    for (a, &pa) in covering.iter().enumerate() {
                        for &pb in &covering[a + 1..] {
                            weights.push(2.0 * eta.get(origins[pa], origins[pb]));
                        }
                    }
                    let mut w = weights.iter();
                    for a in 0..phi {
                        let sa = &stds[a * bands..(a + 1) * bands];
                        for b in a + 1..phi {
                            let wab = *w.next().expect("one weight per pair");
                            if wab == 0.0 {
                                continue;
                            }
                            let sb = &stds[b * bands..(b + 1) * bands];
                            for ((t, x), y) in totals.iter_mut().zip(sa).zip(sb) {
                                *t += wab * x * y;
                            }
                        }
                    }
                }
                let denom = (phi * phi) as f64;
                for (band, t) in totals.iter().enumerate() {
                    block[band * cols + col] = t / denom;
                }
            }
            block
        })
        .collect();

    let band_len = dims.band_len();
    let mut out = vec![0.0; dims.len()];
    for (row, block) in row_blocks.iter().enumerate() {
        for band in 0..bands {
            let dst = band * band_len + row * cols;
            out[dst..dst + cols].copy_from_slice(&block[band * cols..(band + 1) * cols]);
        }
    }
    out
}
