//! Dense hyperspectral cube stored band-sequential (BSQ).
//!
//! Flat index of voxel `(row, col, band)` is `band * rows * cols + row * cols + col`,
//! so every band is a contiguous row-major image.

use std::fmt;

use crate::error::{Error, Result};

/// Extents of a cube: `rows` (M) × `cols` (N) × `bands` (P).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dims {
    pub rows: usize,
    pub cols: usize,
    pub bands: usize,
}

impl Dims {
    pub const fn new(rows: usize, cols: usize, bands: usize) -> Self {
        Dims { rows, cols, bands }
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols * self.bands
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn band_len(&self) -> usize {
        self.rows * self.cols
    }

    #[inline]
    pub fn flat(&self, row: usize, col: usize, band: usize) -> usize {
        band * self.rows * self.cols + row * self.cols + col
    }

    /// Checked voxel constructor.
    pub fn voxel(&self, row: usize, col: usize, band: usize) -> Result<VoxelIndex> {
        if row < self.rows && col < self.cols && band < self.bands {
            Ok(VoxelIndex { row, col, band })
        } else {
            Err(Error::OutOfBounds(format!(
                "voxel ({row}, {col}, {band}) outside {self}"
            )))
        }
    }

    pub(crate) fn ensure_nonempty(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 || self.bands == 0 {
            Err(Error::EmptyDims(*self))
        } else {
            Ok(())
        }
    }
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.rows, self.cols, self.bands)
    }
}

/// Zero-based `(row, col, band)` coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VoxelIndex {
    pub row: usize,
    pub col: usize,
    pub band: usize,
}

impl VoxelIndex {
    pub const fn new(row: usize, col: usize, band: usize) -> Self {
        VoxelIndex { row, col, band }
    }
}

/// Dense real-valued M×N×P cube. Also used for patch-shaped blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct HsiCube {
    dims: Dims,
    data: Vec<f64>,
}

impl HsiCube {
    /// Wraps `data` (BSQ order). Rejects wrong lengths and non-finite values.
    pub fn new(dims: Dims, data: Vec<f64>) -> Result<Self> {
        dims.ensure_nonempty()?;
        if data.len() != dims.len() {
            return Err(Error::DataLength {
                dims,
                expected: dims.len(),
                actual: data.len(),
            });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(HsiCube { dims, data })
    }

    /// Widens single-precision input.
    pub fn from_f32(dims: Dims, data: &[f32]) -> Result<Self> {
        Self::new(dims, data.iter().map(|&v| f64::from(v)).collect())
    }

    pub fn filled(dims: Dims, value: f64) -> Result<Self> {
        Self::new(dims, vec![value; dims.len()])
    }

    pub fn zeros(dims: Dims) -> Result<Self> {
        Self::filled(dims, 0.0)
    }

    /// Builds a cube from a function of `(row, col, band)`.
    pub fn from_fn(dims: Dims, mut f: impl FnMut(usize, usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(dims.len());
        for band in 0..dims.bands {
            for row in 0..dims.rows {
                for col in 0..dims.cols {
                    data.push(f(row, col, band));
                }
            }
        }
        Self::new(dims, data)
    }

    /// Internal constructor for buffers already known to be valid.
    pub(crate) fn from_raw(dims: Dims, data: Vec<f64>) -> Self {
        debug_assert_eq!(dims.len(), data.len());
        HsiCube { dims, data }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize, band: usize) -> f64 {
        self.data[self.dims.flat(row, col, band)]
    }

    #[inline]
    pub fn at(&self, v: VoxelIndex) -> f64 {
        self.get(v.row, v.col, v.band)
    }

    /// Contiguous slice of one band.
    pub fn band(&self, band: usize) -> &[f64] {
        let n = self.dims.band_len();
        &self.data[band * n..(band + 1) * n]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<HsiCube> {
        HsiCube::new(self.dims, self.data.iter().map(|&v| f(v)).collect())
    }

    pub(crate) fn zip_with(&self, other: &HsiCube, f: impl Fn(f64, f64) -> f64) -> Result<HsiCube> {
        self.ensure_same_dims(other)?;
        HsiCube::new(
            self.dims,
            self.data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn ensure_same_dims(&self, other: &HsiCube) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch {
                expected: self.dims,
                actual: other.dims,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &HsiCube) -> Result<HsiCube> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &HsiCube) -> Result<HsiCube> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn max_abs_diff(&self, other: &HsiCube) -> Result<f64> {
        self.ensure_same_dims(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    pub fn rmse(&self, other: &HsiCube) -> Result<f64> {
        self.ensure_same_dims(other)?;
        let sse: f64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        Ok((sse / self.data.len() as f64).sqrt())
    }
}

/// Element-wise quotient `num ⊘ den`.
///
/// Every denominator entry must be strictly positive; a zero count means some
/// voxel was covered by no patch.
pub fn hadamard_divide(num: &HsiCube, den: &HsiCube) -> Result<HsiCube> {
    num.ensure_same_dims(den)?;
    if let Some((index, &value)) = den.data.iter().enumerate().find(|(_, &v)| v <= 0.0) {
        return Err(Error::NonPositiveDenominator { index, value });
    }
    num.zip_with(den, |a, b| a / b)
}

fn check_fits(dims: Dims, origin: VoxelIndex, size: Dims) -> Result<()> {
    size.ensure_nonempty()?;
    let fits = origin.row + size.rows <= dims.rows
        && origin.col + size.cols <= dims.cols
        && origin.band + size.bands <= dims.bands;
    if fits {
        Ok(())
    } else {
        Err(Error::OutOfBounds(format!(
            "block {size} at ({}, {}, {}) exceeds cube {dims}",
            origin.row, origin.col, origin.band
        )))
    }
}

/// Copies the sub-cube of extent `size` starting at `origin`.
pub fn extract_patch(cube: &HsiCube, origin: VoxelIndex, size: Dims) -> Result<HsiCube> {
    check_fits(cube.dims, origin, size)?;
    let mut data = Vec::with_capacity(size.len());
    for band in 0..size.bands {
        for row in 0..size.rows {
            let start = cube.dims.flat(origin.row + row, origin.col, origin.band + band);
            data.extend_from_slice(&cube.data[start..start + size.cols]);
        }
    }
    Ok(HsiCube::from_raw(size, data))
}

/// Adds `patch` into `acc` at `origin`. Equivalent to zero-padding the patch to
/// the size of `acc` and adding, without materialising the padded cube.
pub fn scatter_add_patch(acc: &mut HsiCube, origin: VoxelIndex, patch: &HsiCube) -> Result<()> {
    let size = patch.dims;
    check_fits(acc.dims, origin, size)?;
    for band in 0..size.bands {
        for row in 0..size.rows {
            let dst = acc.dims.flat(origin.row + row, origin.col, origin.band + band);
            let src = size.flat(row, 0, band);
            for (a, p) in acc.data[dst..dst + size.cols]
                .iter_mut()
                .zip(&patch.data[src..src + size.cols])
            {
                *a += p;
            }
        }
    }
    Ok(())
}
