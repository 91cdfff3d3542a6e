//! Sliding-window geometry, the patch ↔ matrix permutation, and patch-mean
//! aggregation.

use nalgebra::DMatrix;

use crate::cube::{hadamard_divide, scatter_add_patch, Dims, HsiCube, VoxelIndex};
use crate::error::{Error, Result};
use crate::lowrank::SparseBudget;

/// Window geometry and solver rank shared by every patch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowConfig {
    /// Spatial side `J_s` of the square full-band window.
    pub patch_side: usize,
    pub step: usize,
    pub rank: usize,
    /// Impulse budget handed to the GoDec solver.
    pub sparse: SparseBudget,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig {
            patch_side: 20,
            step: 4,
            rank: 7,
            sparse: SparseBudget::Count(0),
        }
    }
}

impl WindowConfig {
    pub fn new(patch_side: usize, step: usize, rank: usize) -> Self {
        WindowConfig {
            patch_side,
            step,
            rank,
            sparse: SparseBudget::Count(0),
        }
    }

    pub fn with_sparse(mut self, sparse: SparseBudget) -> Self {
        self.sparse = sparse;
        self
    }

    /// `K = J_s²`, the row count of a permuted patch.
    pub fn pixels(&self) -> usize {
        self.patch_side * self.patch_side
    }

    pub fn validate(&self, dims: Dims) -> Result<()> {
        dims.ensure_nonempty()?;
        let j = self.patch_side;
        if j == 0 || self.step == 0 {
            return Err(Error::InvalidWindow("patch side and step must be positive".into()));
        }
        if self.step > j {
            return Err(Error::InvalidWindow(format!(
                "step {} exceeds patch side {j}; some voxels would be uncovered",
                self.step
            )));
        }
        if j > dims.rows.min(dims.cols) {
            return Err(Error::InvalidWindow(format!(
                "patch side {j} larger than image {}x{}",
                dims.rows, dims.cols
            )));
        }
        let max_rank = self.pixels().min(dims.bands);
        if self.rank == 0 || self.rank > max_rank {
            return Err(Error::InvalidRank {
                rank: self.rank,
                max: max_rank,
            });
        }
        self.sparse.resolve(self.pixels() * dims.bands)?;
        Ok(())
    }
}

/// Spatial top-left corner of a full-band window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PatchOrigin {
    pub row: usize,
    pub col: usize,
}

impl PatchOrigin {
    pub const fn new(row: usize, col: usize) -> Self {
        PatchOrigin { row, col }
    }

    pub fn voxel(&self) -> VoxelIndex {
        VoxelIndex::new(self.row, self.col, 0)
    }
}

/// The enumerated window set Ω together with the coverage-count cube Q.
#[derive(Debug, Clone)]
pub struct PatchGrid {
    dims: Dims,
    config: WindowConfig,
    row_origins: Vec<usize>,
    col_origins: Vec<usize>,
    origins: Vec<PatchOrigin>,
    coverage: HsiCube,
}

fn axis_origins(extent: usize, side: usize, step: usize) -> Vec<usize> {
    let last = extent - side;
    let mut out: Vec<usize> = (0..=last).step_by(step).collect();
    if out.last() != Some(&last) {
        out.push(last);
    }
    out
}

/// Enumerates window origins at multiples of the step on each spatial axis,
/// plus a clamped final origin so that the far border is covered.
pub fn enumerate_patches(dims: Dims, config: WindowConfig) -> Result<PatchGrid> {
    config.validate(dims)?;
    let j = config.patch_side;
    let row_origins = axis_origins(dims.rows, j, config.step);
    let col_origins = axis_origins(dims.cols, j, config.step);
    let origins: Vec<PatchOrigin> = row_origins
        .iter()
        .flat_map(|&r| col_origins.iter().map(move |&c| PatchOrigin::new(r, c)))
        .collect();

    // per-axis counts multiply because the window set is a Cartesian product
    let row_count = axis_counts(dims.rows, j, &row_origins);
    let col_count = axis_counts(dims.cols, j, &col_origins);
    let coverage = HsiCube::from_fn(dims, |r, c, _| (row_count[r] * col_count[c]) as f64)?;

    Ok(PatchGrid {
        dims,
        config,
        row_origins,
        col_origins,
        origins,
        coverage,
    })
}

fn axis_counts(extent: usize, side: usize, origins: &[usize]) -> Vec<usize> {
    let mut counts = vec![0usize; extent];
    for &o in origins {
        for c in &mut counts[o..o + side] {
            *c += 1;
        }
    }
    counts
}

/// Range of indices into sorted `origins` whose windows contain `pos`.
fn covering_range(origins: &[usize], side: usize, pos: usize) -> std::ops::Range<usize> {
    let start = origins.partition_point(|&o| o + side <= pos);
    let end = origins.partition_point(|&o| o <= pos);
    start..end
}

impl PatchGrid {
    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn config(&self) -> WindowConfig {
        self.config
    }

    pub fn origins(&self) -> &[PatchOrigin] {
        &self.origins
    }

    pub fn len(&self) -> usize {
        self.origins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.origins.is_empty()
    }

    pub fn row_origins(&self) -> &[usize] {
        &self.row_origins
    }

    pub fn col_origins(&self) -> &[usize] {
        &self.col_origins
    }

    /// Coverage count cube Q.
    pub fn coverage(&self) -> &HsiCube {
        &self.coverage
    }

    /// Extent of a full-band patch.
    pub fn patch_dims(&self) -> Dims {
        Dims::new(self.config.patch_side, self.config.patch_side, self.dims.bands)
    }

    pub fn index_of(&self, origin: PatchOrigin) -> Option<usize> {
        self.origins.binary_search(&origin).ok()
    }

    /// Indices (in canonical order) of the patches covering spatial pixel
    /// `(row, col)`; this is Φ(ξ) for every band of that pixel.
    pub fn covering(&self, row: usize, col: usize) -> impl Iterator<Item = usize> + '_ {
        let j = self.config.patch_side;
        let rows = covering_range(&self.row_origins, j, row);
        let cols = covering_range(&self.col_origins, j, col);
        let ncols = self.col_origins.len();
        rows.flat_map(move |ri| cols.clone().map(move |ci| ri * ncols + ci))
    }

    /// φ(ξ) = |Φ(ξ)|.
    pub fn phi(&self, row: usize, col: usize) -> usize {
        let j = self.config.patch_side;
        covering_range(&self.row_origins, j, row).len() * covering_range(&self.col_origins, j, col).len()
    }
}

/// Reshapes a `J×J×P` patch into a `J²×P` matrix: row `u` is the spatial pixel
/// in row-major order, column `v` is the band.
pub fn permute_g(patch: &HsiCube) -> DMatrix<f64> {
    let d = patch.dims();
    // BSQ bands are contiguous row-major images, i.e. exactly the columns of
    // a column-major K×L matrix.
    DMatrix::from_column_slice(d.rows * d.cols, d.bands, patch.data())
}

/// Inverse of [`permute_g`] for a square `patch_side × patch_side × bands` patch.
pub fn inverse_permute_g(mat: &DMatrix<f64>, patch_side: usize, bands: usize) -> Result<HsiCube> {
    if mat.nrows() != patch_side * patch_side || mat.ncols() != bands {
        return Err(Error::ShapeMismatch(format!(
            "matrix {}x{} cannot be reshaped into {patch_side}x{patch_side}x{bands}",
            mat.nrows(),
            mat.ncols()
        )));
    }
    HsiCube::new(Dims::new(patch_side, patch_side, bands), mat.as_slice().to_vec())
}

/// Maps voxel `xi` to its `(u, v)` position inside the permuted matrix of the
/// window at `origin`.
pub fn index_map(xi: VoxelIndex, origin: PatchOrigin, patch_side: usize) -> Result<(usize, usize)> {
    let inside = xi.row >= origin.row
        && xi.row < origin.row + patch_side
        && xi.col >= origin.col
        && xi.col < origin.col + patch_side;
    if !inside {
        return Err(Error::OutOfBounds(format!(
            "voxel ({}, {}) outside window at ({}, {}) of side {patch_side}",
            xi.row, xi.col, origin.row, origin.col
        )));
    }
    Ok(((xi.row - origin.row) * patch_side + (xi.col - origin.col), xi.band))
}

/// Orders `(origin, value)` pairs by grid index, failing on any missing,
/// duplicated or foreign origin.
pub(crate) fn order_by_grid<'a, T>(
    items: &'a [(PatchOrigin, T)],
    grid: &PatchGrid,
) -> Result<Vec<&'a T>> {
    let mut slots: Vec<Option<&T>> = vec![None; grid.len()];
    for (origin, item) in items {
        match grid.index_of(*origin) {
            Some(i) if slots[i].is_none() => slots[i] = Some(item),
            _ => return Err(Error::UnexpectedPatch(origin.row, origin.col)),
        }
    }
    slots
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            s.ok_or_else(|| {
                let o = grid.origins[i];
                Error::MissingPatch(o.row, o.col)
            })
        })
        .collect()
}

/// Patch-mean reconstruction `(Σ f_p(patch)) ⊘ Q`.
///
/// Patches may arrive in any order; they are summed in canonical grid order so
/// the result is bit-identical for any permutation of the input.
pub fn aggregate_mean(patches: &[(PatchOrigin, HsiCube)], grid: &PatchGrid) -> Result<HsiCube> {
    let ordered = order_by_grid(patches, grid)?;
    aggregate_mean_ordered(ordered.into_iter(), grid)
}

pub(crate) fn aggregate_mean_ordered<'a>(
    patches: impl Iterator<Item = &'a HsiCube>,
    grid: &PatchGrid,
) -> Result<HsiCube> {
    let mut acc = HsiCube::zeros(grid.dims)?;
    let expected = grid.patch_dims();
    for (origin, patch) in grid.origins.iter().zip(patches) {
        if patch.dims() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: patch.dims(),
            });
        }
        scatter_add_patch(&mut acc, origin.voxel(), patch)?;
    }
    hadamard_divide(&acc, &grid.coverage)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_phi(grid: &PatchGrid, r: usize, c: usize) -> Vec<usize> {
        let j = grid.config.patch_side;
        grid.origins
            .iter()
            .enumerate()
            .filter(|(_, o)| o.row <= r && r < o.row + j && o.col <= c && c < o.col + j)
            .map(|(i, _)| i)
            .collect()
    }

    #[test]
    fn single_window() {
        let g = enumerate_patches(Dims::new(8, 8, 5), WindowConfig::new(8, 8, 2)).unwrap();
        assert_eq!(g.origins(), &[PatchOrigin::new(0, 0)]);
        assert!(g.coverage().data().iter().all(|&q| q == 1.0));
    }

    #[test]
    fn exact_tiling() {
        let g = enumerate_patches(Dims::new(4, 4, 1), WindowConfig::new(2, 2, 1)).unwrap();
        assert_eq!(g.len(), 4);
        assert!(g.coverage().data().iter().all(|&q| q == 1.0));
    }

    #[test]
    fn unit_stride_counts() {
        let g = enumerate_patches(Dims::new(4, 4, 2), WindowConfig::new(2, 1, 1)).unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g.coverage().get(0, 0, 0), 1.0);
        assert_eq!(g.coverage().get(1, 1, 1), 4.0);
        assert_eq!(brute_phi(&g, 1, 1).len(), 4);
    }

    #[test]
    fn clamped_final_origin() {
        let g = enumerate_patches(Dims::new(10, 7, 1), WindowConfig::new(4, 3, 1)).unwrap();
        assert_eq!(g.row_origins(), &[0, 3, 6]);
        assert_eq!(g.col_origins(), &[0, 3]);
        let g = enumerate_patches(Dims::new(11, 11, 1), WindowConfig::new(4, 3, 1)).unwrap();
        assert_eq!(g.row_origins(), &[0, 3, 6, 7]);
        assert!(g.coverage().data().iter().all(|&q| q >= 1.0));
    }

    #[test]
    fn coverage_matches_brute_force() {
        for (m, n, j, s) in [(9, 13, 4, 3), (20, 20, 8, 4), (7, 5, 5, 1), (12, 10, 6, 6)] {
            let g = enumerate_patches(Dims::new(m, n, 2), WindowConfig::new(j, s, 1)).unwrap();
            for r in 0..m {
                for c in 0..n {
                    let brute = brute_phi(&g, r, c);
                    assert_eq!(g.covering(r, c).collect::<Vec<_>>(), brute);
                    assert_eq!(g.phi(r, c), brute.len());
                    assert_eq!(g.coverage().get(r, c, 1), brute.len() as f64);
                }
            }
        }
    }

    #[test]
    fn invalid_configs() {
        let d = Dims::new(8, 8, 4);
        assert!(matches!(enumerate_patches(d, WindowConfig::new(9, 2, 1)), Err(Error::InvalidWindow(_))));
        assert!(matches!(enumerate_patches(d, WindowConfig::new(4, 5, 1)), Err(Error::InvalidWindow(_))));
        assert!(matches!(enumerate_patches(d, WindowConfig::new(4, 0, 1)), Err(Error::InvalidWindow(_))));
        assert!(matches!(enumerate_patches(d, WindowConfig::new(4, 2, 5)), Err(Error::InvalidRank { .. })));
    }

    #[test]
    fn permutation_examples() {
        let spectrum = HsiCube::new(Dims::new(1, 1, 3), vec![0.1, 0.2, 0.3]).unwrap();
        let m = permute_g(&spectrum);
        assert_eq!((m.nrows(), m.ncols()), (1, 3));
        assert_eq!(m.row(0).iter().copied().collect::<Vec<_>>(), vec![0.1, 0.2, 0.3]);
        assert_eq!(inverse_permute_g(&m, 1, 3).unwrap(), spectrum);

        // [[a, b], [c, d]] -> (a, b, c, d)^T
        let p = HsiCube::new(Dims::new(2, 2, 1), vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let m = permute_g(&p);
        assert_eq!(m, DMatrix::from_column_slice(4, 1, &[1.0, 2.0, 3.0, 4.0]));

        let z = inverse_permute_g(&DMatrix::zeros(4, 3), 2, 3).unwrap();
        assert!(z.data().iter().all(|&v| v == 0.0));
        assert!(inverse_permute_g(&DMatrix::zeros(5, 3), 2, 3).is_err());
    }

    #[test]
    fn permutation_entry_semantics() {
        let p = HsiCube::from_fn(Dims::new(3, 3, 2), |r, c, b| (r * 10 + c + 100 * b) as f64).unwrap();
        let m = permute_g(&p);
        for r in 0..3 {
            for c in 0..3 {
                for b in 0..2 {
                    assert_eq!(m[(r * 3 + c, b)], p.get(r, c, b));
                }
            }
        }
    }

    #[test]
    fn index_map_examples() {
        let o = PatchOrigin::new(2, 2);
        assert_eq!(index_map(VoxelIndex::new(2, 2, 0), o, 2).unwrap(), (0, 0));
        assert_eq!(index_map(VoxelIndex::new(3, 2, 1), o, 2).unwrap(), (2, 1));
        assert!(index_map(VoxelIndex::new(4, 2, 0), o, 2).is_err());
        assert!(index_map(VoxelIndex::new(1, 2, 0), o, 2).is_err());
    }

    #[test]
    fn index_map_consistent_with_permute() {
        let cube = HsiCube::from_fn(Dims::new(6, 6, 3), |r, c, b| (r * 36 + c * 6 + b) as f64).unwrap();
        let origin = PatchOrigin::new(1, 2);
        let patch = crate::cube::extract_patch(&cube, origin.voxel(), Dims::new(3, 3, 3)).unwrap();
        let m = permute_g(&patch);
        for r in 1..4 {
            for c in 2..5 {
                for b in 0..3 {
                    let (u, v) = index_map(VoxelIndex::new(r, c, b), origin, 3).unwrap();
                    assert_eq!(m[(u, v)], cube.get(r, c, b));
                }
            }
        }
    }

    #[test]
    fn mean_of_single_and_overlapping() {
        let d = Dims::new(3, 3, 2);
        let g = enumerate_patches(d, WindowConfig::new(3, 3, 1)).unwrap();
        let patch = HsiCube::from_fn(d, |r, c, b| (r + c + b) as f64).unwrap();
        let out = aggregate_mean(&[(PatchOrigin::new(0, 0), patch.clone())], &g).unwrap();
        assert_eq!(out, patch);

        // 4x4 image, 2x2 windows, unit stride, constant patches
        let g = enumerate_patches(Dims::new(4, 4, 2), WindowConfig::new(2, 1, 1)).unwrap();
        let patches: Vec<_> = g
            .origins()
            .iter()
            .map(|&o| (o, HsiCube::filled(g.patch_dims(), 0.7).unwrap()))
            .collect();
        let out = aggregate_mean(&patches, &g).unwrap();
        assert!(out.data().iter().all(|&v| (v - 0.7).abs() < 1e-15));
    }

    #[test]
    fn two_full_overlaps_average() {
        // two windows at the same place cannot be enumerated, so exercise the
        // ordered reduction directly
        let d = Dims::new(2, 2, 1);
        let a = HsiCube::filled(d, 1.0).unwrap();
        let b = HsiCube::filled(d, 4.0).unwrap();
        let mut acc = HsiCube::zeros(d).unwrap();
        scatter_add_patch(&mut acc, VoxelIndex::new(0, 0, 0), &a).unwrap();
        scatter_add_patch(&mut acc, VoxelIndex::new(0, 0, 0), &b).unwrap();
        let out = hadamard_divide(&acc, &HsiCube::filled(d, 2.0).unwrap()).unwrap();
        assert!(out.data().iter().all(|&v| v == 2.5));
    }

    #[test]
    fn mean_errors() {
        let g = enumerate_patches(Dims::new(4, 4, 1), WindowConfig::new(2, 2, 1)).unwrap();
        let p = HsiCube::zeros(g.patch_dims()).unwrap();
        let mut patches: Vec<_> = g.origins().iter().map(|&o| (o, p.clone())).collect();
        patches.pop();
        assert!(matches!(aggregate_mean(&patches, &g), Err(Error::MissingPatch(2, 2))));
        patches.push((PatchOrigin::new(1, 1), p.clone()));
        assert!(matches!(aggregate_mean(&patches, &g), Err(Error::UnexpectedPatch(1, 1))));
    }

    #[test]
    fn ground_truth_patches_reproduce_cube() {
        let d = Dims::new(11, 9, 3);
        let truth = HsiCube::from_fn(d, |r, c, b| ((r * 13 + c * 7 + b * 3) % 17) as f64 / 17.0).unwrap();
        for (j, s) in [(4, 3), (3, 3), (5, 1)] {
            let g = enumerate_patches(d, WindowConfig::new(j, s, 1)).unwrap();
            let patches: Vec<_> = g
                .origins()
                .iter()
                .map(|&o| (o, crate::cube::extract_patch(&truth, o.voxel(), g.patch_dims()).unwrap()))
                .collect();
            let out = aggregate_mean(&patches, &g).unwrap();
            assert!(out.max_abs_diff(&truth).unwrap() < 1e-15);
        }
    }
}
