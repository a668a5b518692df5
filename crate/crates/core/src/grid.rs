//! Uniform grid substrate.
//!
//! A [`Grid`] describes a bounded axis-aligned domain in dimension 1 or 2,
//! split into cells of side `spacing`. A [`GridFunction`] holds one sample per
//! cell (row-major) and is interpreted as the step function taking that value
//! on the whole cell and zero outside the domain. All quadrature is midpoint
//! quadrature: a cell belongs to a cube or ball exactly when its center does.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum supported dimension. Axis 1 is trivial (length 1) in 1D so that
/// most code can be written uniformly over `[usize; 2]` index pairs.
const MAX_DIM: usize = 2;

/// Geometry of a uniform grid: `shape[a]` cells of side `spacing` per axis,
/// lower corner at `origin`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid", into = "RawGrid")]
pub struct Grid {
    dim: usize,
    origin: [f64; MAX_DIM],
    spacing: f64,
    shape: [usize; MAX_DIM],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawGrid {
    dim: usize,
    origin: Vec<f64>,
    spacing: f64,
    shape: Vec<usize>,
}

impl From<Grid> for RawGrid {
    fn from(g: Grid) -> Self {
        RawGrid {
            dim: g.dim,
            origin: g.origin[..g.dim].to_vec(),
            spacing: g.spacing,
            shape: g.shape[..g.dim].to_vec(),
        }
    }
}

impl TryFrom<RawGrid> for Grid {
    type Error = Error;
    fn try_from(raw: RawGrid) -> Result<Grid> {
        Grid::new(raw.dim, &raw.origin, raw.spacing, &raw.shape)
    }
}

impl Grid {
    pub fn new(dim: usize, origin: &[f64], spacing: f64, shape: &[usize]) -> Result<Grid> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidGrid(format!("dim must be 1 or 2, got {dim}")));
        }
        if origin.len() != dim || shape.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "origin/shape length must equal dim={dim} (got {}/{})",
                origin.len(),
                shape.len()
            )));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::InvalidGrid(format!("spacing must be finite and positive, got {spacing}")));
        }
        if origin.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid("origin must be finite".into()));
        }
        if shape.iter().any(|&n| n == 0) {
            return Err(Error::InvalidGrid("every axis must have at least one cell".into()));
        }
        let mut o = [0.0; MAX_DIM];
        let mut s = [1usize; MAX_DIM];
        o[..dim].copy_from_slice(origin);
        s[..dim].copy_from_slice(shape);
        Ok(Grid { dim, origin: o, spacing, shape: s })
    }

    /// 1D grid over `[lo, lo + n*h)`.
    pub fn line(lo: f64, spacing: f64, n: usize) -> Result<Grid> {
        Grid::new(1, &[lo], spacing, &[n])
    }

    /// Square 2D grid over `[lo, lo + n*h)^2`.
    pub fn square(lo: f64, spacing: f64, n: usize) -> Result<Grid> {
        Grid::new(2, &[lo, lo], spacing, &[n, n])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape[..self.dim]
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin[..self.dim]
    }

    pub fn cell_count(&self) -> usize {
        self.shape[..self.dim].iter().product()
    }

    /// Lebesgue measure of one cell, `spacing^dim`.
    pub fn cell_measure(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    /// Upper corner of the domain.
    pub fn upper(&self) -> [f64; MAX_DIM] {
        let mut u = self.origin;
        for a in 0..self.dim {
            u[a] += self.spacing * self.shape[a] as f64;
        }
        u
    }

    /// The whole domain as a cube. Requires equal axis extents.
    pub fn domain_cube(&self) -> Result<Cube> {
        if self.dim == 2 && self.shape[0] != self.shape[1] {
            return Err(Error::InvalidGrid("domain cube requires a square grid".into()));
        }
        Cube::new(self.dim, &self.origin()[..self.dim].to_vec(), self.spacing * self.shape[0] as f64)
    }

    /// Side length of the (square) domain.
    pub fn domain_side(&self) -> f64 {
        self.spacing * self.shape[0] as f64
    }

    pub fn multi_index(&self, idx: usize) -> [usize; MAX_DIM] {
        if self.dim == 1 {
            [idx, 0]
        } else {
            [idx / self.shape[1], idx % self.shape[1]]
        }
    }

    pub fn flat_index(&self, mi: [usize; MAX_DIM]) -> usize {
        if self.dim == 1 {
            mi[0]
        } else {
            mi[0] * self.shape[1] + mi[1]
        }
    }

    /// Center coordinates of a cell (trailing axis padded with 0 in 1D).
    pub fn cell_center(&self, idx: usize) -> [f64; MAX_DIM] {
        let mi = self.multi_index(idx);
        let mut c = [0.0; MAX_DIM];
        for a in 0..self.dim {
            c[a] = self.origin[a] + (mi[a] as f64 + 0.5) * self.spacing;
        }
        c
    }

    /// Index range of cells whose centers lie in the cube, clipped to the
    /// domain. A cube too small to catch any center snaps to the single cell
    /// containing its midpoint. `None` when the cube misses the domain.
    pub fn cube_box(&self, cube: &Cube) -> Option<CellBox> {
        debug_assert_eq!(cube.dim, self.dim);
        let mut lo = [0usize; MAX_DIM];
        let mut hi = [1usize; MAX_DIM];
        let mut empty = false;
        for a in 0..self.dim {
            let rel_lo = (cube.lower[a] - self.origin[a]) / self.spacing - 0.5;
            let rel_hi = (cube.lower[a] + cube.side - self.origin[a]) / self.spacing - 0.5;
            let i_lo = rel_lo.ceil().max(0.0) as usize;
            let i_hi = (rel_hi.ceil().min(self.shape[a] as f64) as isize).max(0) as usize;
            if i_lo >= i_hi {
                empty = true;
            }
            lo[a] = i_lo.min(self.shape[a]);
            hi[a] = i_hi;
        }
        if !empty {
            return Some(CellBox { lo, hi });
        }
        // Degenerate cube: snap to the cell containing its midpoint.
        for a in 0..self.dim {
            let mid = cube.lower[a] + cube.side / 2.0;
            let i = ((mid - self.origin[a]) / self.spacing).floor();
            if i < 0.0 || i >= self.shape[a] as f64 {
                return None;
            }
            lo[a] = i as usize;
            hi[a] = lo[a] + 1;
        }
        Some(CellBox { lo, hi })
    }

    /// Ascending indices of cells whose centers lie strictly inside the ball.
    pub fn ball_cells(&self, center: &[f64], radius: f64) -> Vec<usize> {
        let mut cells = Vec::new();
        let mut c = [0.0; MAX_DIM];
        c[..center.len().min(MAX_DIM)].copy_from_slice(&center[..center.len().min(MAX_DIM)]);
        // Bounding box to avoid a full scan.
        let bound = Cube {
            dim: self.dim,
            lower: {
                let mut l = [0.0; MAX_DIM];
                for a in 0..self.dim {
                    l[a] = c[a] - radius;
                }
                l
            },
            side: 2.0 * radius,
        };
        let Some(bbox) = self.cube_box(&bound) else {
            return cells;
        };
        for idx in bbox.iter(self) {
            let x = self.cell_center(idx);
            let mut d2 = 0.0;
            for a in 0..self.dim {
                d2 += (x[a] - c[a]) * (x[a] - c[a]);
            }
            if d2.sqrt() < radius {
                cells.push(idx);
            }
        }
        cells
    }
}

/// Half-open axis-aligned cube `[lower, lower + side)^dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCube", into = "RawCube")]
pub struct Cube {
    dim: usize,
    lower: [f64; MAX_DIM],
    side: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawCube {
    dim: usize,
    lower: Vec<f64>,
    side: f64,
}

impl From<Cube> for RawCube {
    fn from(c: Cube) -> Self {
        RawCube { dim: c.dim, lower: c.lower[..c.dim].to_vec(), side: c.side }
    }
}

impl TryFrom<RawCube> for Cube {
    type Error = Error;
    fn try_from(raw: RawCube) -> Result<Cube> {
        Cube::new(raw.dim, &raw.lower, raw.side)
    }
}

impl Cube {
    pub fn new(dim: usize, lower: &[f64], side: f64) -> Result<Cube> {
        if dim == 0 || dim > MAX_DIM || lower.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim.clamp(1, MAX_DIM), got: lower.len() });
        }
        if !(side.is_finite() && side > 0.0) || lower.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("cube must have finite corner and positive side, got side={side}")));
        }
        let mut l = [0.0; MAX_DIM];
        l[..dim].copy_from_slice(lower);
        Ok(Cube { dim, lower: l, side })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower[..self.dim]
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn center(&self) -> [f64; MAX_DIM] {
        let mut c = self.lower;
        for a in 0..self.dim {
            c[a] += self.side / 2.0;
        }
        c
    }

    /// Nominal Lebesgue measure `side^dim` (ignores clipping by any domain).
    pub fn measure(&self) -> f64 {
        self.side.powi(self.dim as i32)
    }

    /// Concentric dilation by `factor` (same center).
    pub fn dilate(&self, factor: f64) -> Cube {
        let mut lower = self.lower;
        for a in 0..self.dim {
            lower[a] -= self.side * (factor - 1.0) / 2.0;
        }
        Cube { dim: self.dim, lower, side: self.side * factor }
    }

    pub fn contains_point(&self, x: &[f64]) -> bool {
        (0..self.dim).all(|a| x[a] >= self.lower[a] && x[a] < self.lower[a] + self.side)
    }

    pub fn contains_cube(&self, other: &Cube) -> bool {
        (0..self.dim).all(|a| {
            other.lower[a] >= self.lower[a] - 1e-12 * self.side
                && other.lower[a] + other.side <= self.lower[a] + self.side + 1e-12 * self.side
        })
    }
}

/// Euclidean ball; membership of a cell is strict inequality at the center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Ball> {
        if !(radius.is_finite() && radius > 0.0) || center.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("ball must have finite center and positive radius, got r={radius}")));
        }
        Ok(Ball { center, radius })
    }
}

/// Region of integration: an explicit cell set, a cube, or a ball.
#[derive(Debug, Clone)]
pub enum Region {
    Cells(Vec<usize>),
    Cube(Cube),
    Ball(Ball),
}

/// Half-open box of cell indices, `lo[a] <= i < hi[a]` per axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellBox {
    pub lo: [usize; MAX_DIM],
    pub hi: [usize; MAX_DIM],
}

impl CellBox {
    pub fn cell_count(&self) -> usize {
        (0..MAX_DIM).map(|a| self.hi[a].saturating_sub(self.lo[a])).product()
    }

    pub fn contains(&self, mi: [usize; MAX_DIM]) -> bool {
        (0..MAX_DIM).all(|a| mi[a] >= self.lo[a] && mi[a] < self.hi[a])
    }

    pub fn contains_box(&self, other: &CellBox) -> bool {
        (0..MAX_DIM).all(|a| other.lo[a] >= self.lo[a] && other.hi[a] <= self.hi[a])
    }

    /// Ascending flat indices of the cells in the box.
    pub fn iter<'a>(&self, grid: &'a Grid) -> impl Iterator<Item = usize> + 'a {
        let b = *self;
        (b.lo[0]..b.hi[0]).flat_map(move |i| (b.lo[1]..b.hi[1]).map(move |j| grid.flat_index([i, j])))
    }
}

/// Samples of a step function on a grid, row-major, one value per cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGridFunction", into = "RawGridFunction")]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawGridFunction {
    dim: usize,
    origin: Vec<f64>,
    spacing: f64,
    shape: Vec<usize>,
    values: Vec<f64>,
}

impl From<GridFunction> for RawGridFunction {
    fn from(f: GridFunction) -> Self {
        RawGridFunction {
            dim: f.grid.dim,
            origin: f.grid.origin().to_vec(),
            spacing: f.grid.spacing,
            shape: f.grid.shape().to_vec(),
            values: f.values,
        }
    }
}

impl TryFrom<RawGridFunction> for GridFunction {
    type Error = Error;
    fn try_from(raw: RawGridFunction) -> Result<GridFunction> {
        let grid = Grid::new(raw.dim, &raw.origin, raw.spacing, &raw.shape)?;
        GridFunction::new(grid, raw.values)
    }
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<GridFunction> {
        if values.len() != grid.cell_count() {
            return Err(Error::InvalidGrid(format!(
                "value count {} does not match cell count {}",
                values.len(),
                grid.cell_count()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("value at cell {i} is {}", values[i])));
        }
        Ok(GridFunction { grid, values })
    }

    pub fn constant(grid: Grid, c: f64) -> Result<GridFunction> {
        let n = grid.cell_count();
        GridFunction::new(grid, vec![c; n])
    }

    /// Sample a closure at cell centers.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Result<GridFunction> {
        let values: Vec<f64> = (0..grid.cell_count())
            .map(|i| {
                let c = grid.cell_center(i);
                f(&c[..grid.dim()])
            })
            .collect();
        GridFunction::new(grid, values)
    }

    /// Indicator of a cube, rasterized at cell centers.
    pub fn indicator_cube(grid: Grid, cube: &Cube) -> Result<GridFunction> {
        let mut values = vec![0.0; grid.cell_count()];
        if let Some(b) = grid.cube_box(cube) {
            for idx in b.iter(&grid) {
                values[idx] = 1.0;
            }
        }
        GridFunction::new(grid, values)
    }

    /// Indicator of a ball, rasterized at cell centers.
    pub fn indicator_ball(grid: Grid, ball: &Ball) -> Result<GridFunction> {
        let mut values = vec![0.0; grid.cell_count()];
        for idx in grid.ball_cells(&ball.center, ball.radius) {
            values[idx] = 1.0;
        }
        GridFunction::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    pub fn same_grid(&self, other: &GridFunction) -> bool {
        self.grid == other.grid
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn abs(&self) -> GridFunction {
        self.map(f64::abs)
    }

    pub fn scale(&self, c: f64) -> GridFunction {
        self.map(|v| c * v)
    }

    pub fn zip_with(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<GridFunction> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(GridFunction { grid: self.grid.clone(), values })
    }

    pub fn add(&self, other: &GridFunction) -> Result<GridFunction> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &GridFunction) -> Result<GridFunction> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Restrict to a cell box (zero outside).
    pub fn restrict_box(&self, b: &CellBox) -> GridFunction {
        let mut values = vec![0.0; self.values.len()];
        for idx in b.iter(&self.grid) {
            values[idx] = self.values[idx];
        }
        GridFunction { grid: self.grid.clone(), values }
    }

    /// Ascending indices of cells with nonzero value.
    pub fn support(&self) -> Vec<usize> {
        (0..self.values.len()).filter(|&i| self.values[i] != 0.0).collect()
    }
}

fn check_weight_grid(f: &GridFunction, weight: Option<&GridFunction>) -> Result<()> {
    if let Some(w) = weight {
        if !f.same_grid(w) {
            return Err(Error::GridMismatch);
        }
    }
    Ok(())
}

/// `∫_R f dμ` where `dμ = w dx` (or `dx` without a weight): the sum of
/// `f * w * h^dim` over the region's cells, accumulated in ascending cell
/// order so repeated calls are bit-identical.
pub fn integrate(f: &GridFunction, region: &Region, weight: Option<&GridFunction>) -> Result<f64> {
    check_weight_grid(f, weight)?;
    let h = f.grid().cell_measure();
    let term = |idx: usize| -> f64 {
        let w = weight.map_or(1.0, |w| w.value(idx));
        f.value(idx) * w
    };
    let sum = match region {
        Region::Cells(cells) => {
            let mut cs = cells.clone();
            cs.sort_unstable();
            cs.dedup();
            if let Some(&bad) = cs.last() {
                if bad >= f.grid().cell_count() {
                    return Err(Error::InvalidParameter(format!("cell index {bad} out of range")));
                }
            }
            cs.iter().map(|&i| term(i)).sum::<f64>()
        }
        Region::Cube(c) => {
            if c.dim() != f.grid().dim() {
                return Err(Error::DimensionMismatch { expected: f.grid().dim(), got: c.dim() });
            }
            match f.grid().cube_box(c) {
                Some(b) => b.iter(f.grid()).map(term).sum::<f64>(),
                None => 0.0,
            }
        }
        Region::Ball(b) => f.grid().ball_cells(&b.center, b.radius).iter().map(|&i| term(i)).sum::<f64>(),
    };
    Ok(sum * h)
}

/// Mean of `f` over the cells of a cube (clipped to the domain):
/// `integrate(f, Q) / |Q ∩ grid|`. Errors when no cell intersects the cube.
pub fn local_average(f: &GridFunction, cube: &Cube) -> Result<f64> {
    if cube.dim() != f.grid().dim() {
        return Err(Error::DimensionMismatch { expected: f.grid().dim(), got: cube.dim() });
    }
    let b = f.grid().cube_box(cube).ok_or(Error::DegenerateCube)?;
    let sum: f64 = b.iter(f.grid()).map(|i| f.value(i)).sum();
    Ok(sum / b.cell_count() as f64)
}

/// Distribution function `d_f(s) = μ({|f| > s})` for the (possibly weighted)
/// measure; strict inequality.
pub fn level_measure(f: &GridFunction, s: f64, weight: Option<&GridFunction>) -> Result<f64> {
    check_weight_grid(f, weight)?;
    let h = f.grid().cell_measure();
    let mut sum = 0.0;
    for i in 0..f.values().len() {
        if f.value(i).abs() > s {
            sum += weight.map_or(1.0, |w| w.value(i));
        }
    }
    Ok(sum * h)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// f = 2·χ_[0,1) + 1·χ_[1,3) on [0,4) with h = 1/4.
    fn staircase() -> GridFunction {
        let grid = Grid::line(0.0, 0.25, 16).unwrap();
        GridFunction::from_fn(grid, |x| {
            if x[0] < 1.0 {
                2.0
            } else if x[0] < 3.0 {
                1.0
            } else {
                0.0
            }
        })
        .unwrap()
    }

    #[test]
    fn integrate_staircase_over_cube() {
        let f = staircase();
        let q = Cube::new(1, &[0.0], 3.0).unwrap();
        // 2·1 + 1·2 = 4, enumerated by hand over 12 cells.
        let v = integrate(&f, &Region::Cube(q), None).unwrap();
        assert_eq!(v, 4.0);
    }

    #[test]
    fn integrate_is_linear() {
        let f = staircase();
        let g = f.map(|v| 0.5 * v + 1.0);
        let q = Region::Cube(Cube::new(1, &[0.25], 2.5).unwrap());
        let lhs = integrate(&f.add(&g).unwrap(), &q, None).unwrap();
        let rhs = integrate(&f, &q, None).unwrap() + integrate(&g, &q, None).unwrap();
        assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
    }

    #[test]
    fn integrate_empty_region_is_zero() {
        let f = staircase();
        let q = Cube::new(1, &[10.0], 1.0).unwrap();
        assert_eq!(integrate(&f, &Region::Cube(q), None).unwrap(), 0.0);
    }

    #[test]
    fn local_average_staircase() {
        let f = staircase();
        let q = Cube::new(1, &[0.0], 3.0).unwrap();
        let v = local_average(&f, &q).unwrap();
        assert!((v - 4.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn local_average_constant_is_exact() {
        let grid = Grid::square(-1.0, 0.125, 16).unwrap();
        let f = GridFunction::constant(grid, 3.5).unwrap();
        let q = Cube::new(2, &[-0.5, -0.25], 0.75).unwrap();
        assert_eq!(local_average(&f, &q).unwrap(), 3.5);
    }

    #[test]
    fn degenerate_cube_snaps_to_cell() {
        let f = staircase();
        // Entirely inside the cell [0.5, 0.75): no center caught.
        let q = Cube::new(1, &[0.55, ], 0.05).unwrap();
        assert_eq!(local_average(&f, &q).unwrap(), 2.0);
        // Off-domain degenerate cube errors.
        let q = Cube::new(1, &[40.0], 0.05).unwrap();
        assert!(matches!(local_average(&f, &q), Err(Error::DegenerateCube)));
    }

    #[test]
    fn level_measure_staircase() {
        let f = staircase();
        assert_eq!(level_measure(&f, 1.5, None).unwrap(), 1.0);
        assert_eq!(level_measure(&f, 0.5, None).unwrap(), 3.0);
        assert_eq!(level_measure(&f, 2.0, None).unwrap(), 0.0);
        // Monotone nonincreasing in s.
        let mut prev = f64::INFINITY;
        for k in 0..20 {
            let s = 0.125 * k as f64;
            let m = level_measure(&f, s, None).unwrap();
            assert!(m <= prev);
            prev = m;
        }
    }

    #[test]
    fn weighted_integration_uses_weight() {
        let f = staircase();
        let w = f.map(|_| 2.0);
        let q = Region::Cube(Cube::new(1, &[0.0], 4.0).unwrap());
        let a = integrate(&f, &q, None).unwrap();
        let b = integrate(&f, &q, Some(&w)).unwrap();
        assert!((b - 2.0 * a).abs() < 1e-14);
    }

    #[test]
    fn weight_on_other_grid_rejected() {
        let f = staircase();
        let other = Grid::line(0.0, 0.5, 8).unwrap();
        let w = GridFunction::constant(other, 1.0).unwrap();
        assert!(matches!(integrate(&f, &Region::Cells(vec![0]), Some(&w)), Err(Error::GridMismatch)));
    }

    #[test]
    fn cube_box_half_open_convention() {
        let grid = Grid::line(-2.0, 0.25, 16).unwrap();
        let q = Cube::new(1, &[0.0], 1.0).unwrap();
        let b = grid.cube_box(&q).unwrap();
        // Cells with centers 0.125, .375, .625, .875.
        assert_eq!(b.cell_count(), 4);
        assert_eq!(b.lo[0], 8);
        assert_eq!(b.hi[0], 12);
    }

    #[test]
    fn ball_cells_match_centers() {
        let grid = Grid::square(-1.0, 0.25, 8).unwrap();
        let cells = grid.ball_cells(&[0.0, 0.0], 0.6);
        for &i in &cells {
            let c = grid.cell_center(i);
            assert!((c[0] * c[0] + c[1] * c[1]).sqrt() < 0.6);
        }
        let inside = (0..grid.cell_count())
            .filter(|&i| {
                let c = grid.cell_center(i);
                (c[0] * c[0] + c[1] * c[1]).sqrt() < 0.6
            })
            .count();
        assert_eq!(cells.len(), inside);
    }

    #[test]
    fn json_round_trip_and_validation() {
        let f = staircase();
        let s = serde_json::to_string(&f).unwrap();
        let back: GridFunction = serde_json::from_str(&s).unwrap();
        assert_eq!(f, back);
        // Shape/value mismatch rejected.
        let bad = r#"{"dim":1,"origin":[0.0],"spacing":0.5,"shape":[4],"values":[1.0,2.0]}"#;
        assert!(serde_json::from_str::<GridFunction>(bad).is_err());
        // Non-finite values rejected (JSON has no NaN literal; huge exponents
        // parse to infinity and must be caught).
        let inf = r#"{"dim":1,"origin":[0.0],"spacing":0.5,"shape":[1],"values":[1e999]}"#;
        assert!(serde_json::from_str::<GridFunction>(inf).is_err());
    }

    #[test]
    fn repeated_calls_bit_identical() {
        let f = staircase();
        let r = Region::Ball(Ball::new(vec![1.0], 0.9).unwrap());
        let a = integrate(&f, &r, None).unwrap();
        let b = integrate(&f, &r, None).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
