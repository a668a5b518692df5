//! Dyadic lattices on a bounded grid.
//!
//! Two lattice kinds are provided:
//!
//! - the **base** lattice: the domain cube split recursively into `2^dim`
//!   halves, down to single cells; every cube lies inside the domain;
//! - **triple** lattices, one per class `j ∈ {0,1,2}^dim`: cubes of side
//!   `3·2^l·h`, with top-scale lower corners at `(3m + j)·2^l·h` (in cell
//!   units, relative to the grid origin) and consecutive scales nesting two
//!   to one per axis, exactly like a dyadic grid. Halving a corner `(3m+j)·2s`
//!   yields corners `≡ −j (mod 3)` in units of `s`, so the corner residue
//!   alternates between `j` and `−j` down the scales. Cubes may stick out of
//!   the domain; they are rasterized to their in-domain cells.
//!
//! Together the base lattice and the triple classes realize a shifted-lattice
//! cover: every concentric dilate `3Q` of a base cube `Q` belongs to exactly
//! one class, and any axis-aligned cube of side `s` is contained in a lattice
//! cube of side at most `3s` up to the scale cap. Chains of clipped cubes
//! that rasterize to identical cell sets are contracted to a single node so
//! that strict inclusion of nodes is strict inclusion of cell sets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{CellBox, Cube, Grid};

/// Which family a lattice belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LatticeKind {
    Base,
    /// Shift class per axis, entries in `{0,1,2}` (axis 1 ignored in 1D).
    Triple { class: [usize; 2] },
}

/// One cube of a lattice together with its rasterization.
#[derive(Debug, Clone)]
pub struct LatticeNode {
    pub cube: Cube,
    /// In-domain cells (clipped).
    pub cbox: CellBox,
    /// Side length in cell units (nominal, before clipping).
    pub side_cells: usize,
    pub children: Vec<usize>,
    pub parent: Option<usize>,
}

impl LatticeNode {
    pub fn cell_count(&self) -> usize {
        self.cbox.cell_count()
    }
}

/// A finite lattice over a square power-of-two grid.
#[derive(Debug, Clone)]
pub struct DyadicLattice {
    kind: LatticeKind,
    grid: Grid,
    nodes: Vec<LatticeNode>,
    tops: Vec<usize>,
}

fn require_square_pow2(grid: &Grid) -> Result<usize> {
    let shape = grid.shape();
    let n = shape[0];
    if shape.iter().any(|&s| s != n) {
        return Err(Error::InvalidGrid("lattices require equal axis extents".into()));
    }
    if !n.is_power_of_two() {
        return Err(Error::InvalidGrid(format!("lattices require a power-of-two extent, got {n}")));
    }
    Ok(n)
}

struct Builder<'a> {
    grid: &'a Grid,
    nodes: Vec<LatticeNode>,
}

impl<'a> Builder<'a> {
    /// Cube at integer cell coordinates (lower corner `coords`, side
    /// `side_cells`), which may extend beyond the domain.
    fn cube_at(&self, coords: [i64; 2], side_cells: usize) -> Cube {
        let h = self.grid.spacing();
        let dim = self.grid.dim();
        let lower: Vec<f64> = (0..dim).map(|a| self.grid.origin()[a] + coords[a] as f64 * h).collect();
        Cube::new(dim, &lower, side_cells as f64 * h).expect("valid lattice cube")
    }

    /// Recursively build the node for this cube; `None` when no cell falls
    /// inside. Chains with identical rasterizations are contracted to their
    /// deepest node.
    fn build(&mut self, coords: [i64; 2], side_cells: usize, min_side_cells: usize) -> Option<usize> {
        let cube = self.cube_at(coords, side_cells);
        let cbox = self.grid.cube_box(&cube)?;
        let mut children = Vec::new();
        if side_cells > min_side_cells {
            let half = side_cells / 2;
            let dim = self.grid.dim();
            let offsets: &[[i64; 2]] = if dim == 1 { &[[0, 0], [1, 0]] } else { &[[0, 0], [0, 1], [1, 0], [1, 1]] };
            for off in offsets {
                let c = [coords[0] + off[0] * half as i64, coords[1] + off[1] * half as i64];
                if let Some(id) = self.build(c, half, min_side_cells) {
                    children.push(id);
                }
            }
        }
        if children.len() == 1 && self.nodes[children[0]].cbox == cbox {
            return Some(children[0]);
        }
        let id = self.nodes.len();
        self.nodes.push(LatticeNode { cube, cbox, side_cells, children: children.clone(), parent: None });
        for c in children {
            self.nodes[c].parent = Some(id);
        }
        Some(id)
    }
}

impl DyadicLattice {
    /// The base lattice: domain cube down to single cells.
    pub fn base(grid: &Grid) -> Result<DyadicLattice> {
        let n = require_square_pow2(grid)?;
        let mut b = Builder { grid, nodes: Vec::new() };
        let top = b.build([0, 0], n, 1).expect("domain cube is never empty");
        Ok(DyadicLattice { kind: LatticeKind::Base, grid: grid.clone(), nodes: b.nodes, tops: vec![top] })
    }

    /// The triple lattice of one shift class. Top scale is capped at side
    /// `3·2^(L-2)` cells (three quarters of the domain) so that every lattice
    /// cube fits inside some inside-the-domain square of equal side; the tops
    /// at that scale tile the plane, hence cover the domain.
    pub fn triple(grid: &Grid, class: [usize; 2]) -> Result<DyadicLattice> {
        let n = require_square_pow2(grid)?;
        let dim = grid.dim();
        for a in 0..dim {
            if class[a] > 2 {
                return Err(Error::InvalidParameter(format!("shift class entries must be in 0..3, got {}", class[a])));
            }
        }
        if n < 4 {
            return Err(Error::InvalidGrid("triple lattices require at least 4 cells per axis".into()));
        }
        let l = n.trailing_zeros();
        let scale = 1usize << (l - 2); // 2^(L-2)
        let side = 3 * scale;
        let mut b = Builder { grid, nodes: Vec::new() };
        let mut tops = Vec::new();
        // Lower corners (3m + j)·scale intersecting [0, n).
        let positions = |j: usize| -> Vec<i64> {
            let mut ps = Vec::new();
            let mut t = j as i64 - 3; // start safely left of the domain
            while t * (scale as i64) < n as i64 {
                if (t + 3) * (scale as i64) > 0 {
                    ps.push(t * (scale as i64));
                }
                t += 3;
            }
            ps
        };
        let axis0 = positions(class[0]);
        let axis1 = if dim == 2 { positions(class[1]) } else { vec![0] };
        for &c0 in &axis0 {
            for &c1 in &axis1 {
                if let Some(id) = b.build([c0, c1], side, 3) {
                    tops.push(id);
                }
            }
        }
        if tops.is_empty() {
            return Err(Error::EmptyFamily("triple lattice has no in-domain cubes".into()));
        }
        Ok(DyadicLattice { kind: LatticeKind::Triple { class }, grid: grid.clone(), nodes: b.nodes, tops })
    }

    /// All `3^dim` triple lattices, classes in row-major order.
    pub fn all_triples(grid: &Grid) -> Result<Vec<DyadicLattice>> {
        let dim = grid.dim();
        let mut out = Vec::new();
        if dim == 1 {
            for j in 0..3 {
                out.push(DyadicLattice::triple(grid, [j, 0])?);
            }
        } else {
            for j0 in 0..3 {
                for j1 in 0..3 {
                    out.push(DyadicLattice::triple(grid, [j0, j1])?);
                }
            }
        }
        Ok(out)
    }

    pub fn kind(&self) -> LatticeKind {
        self.kind
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn nodes(&self) -> &[LatticeNode] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &LatticeNode {
        &self.nodes[id]
    }

    pub fn tops(&self) -> &[usize] {
        &self.tops
    }

    /// Node whose cube matches `cube` up to a `1e-9·h` tolerance.
    pub fn find_node(&self, cube: &Cube) -> Option<usize> {
        let tol = 1e-9 * self.grid.spacing();
        self.nodes.iter().position(|n| {
            (n.cube.side() - cube.side()).abs() <= tol
                && n.cube
                    .lower()
                    .iter()
                    .zip(cube.lower())
                    .all(|(a, b)| (a - b).abs() <= tol)
        })
    }

    /// Mean of `f` over the node's in-domain cells.
    pub fn node_average(&self, f: &crate::grid::GridFunction, id: usize) -> f64 {
        let node = &self.nodes[id];
        let sum: f64 = node.cbox.iter(&self.grid).map(|i| f.value(i)).sum();
        sum / node.cell_count() as f64
    }
}

/// Assignment of one base cube to its concentric triple.
#[derive(Debug, Clone)]
pub struct CoverAssignment {
    pub base_node: usize,
    /// Class of `3Q` per axis.
    pub class: [usize; 2],
    /// Flattened class (row-major), indexing `TripleCover::lattices`.
    pub lattice_index: usize,
    /// The cover cube `3Q` (nominal; may stick out of the domain).
    pub cube: Cube,
    /// Whether `3Q` sticks out of the domain.
    pub clipped: bool,
}

/// The `3^dim` triple lattices together with the base-cube assignments.
#[derive(Debug)]
pub struct TripleCover {
    pub base: DyadicLattice,
    pub lattices: Vec<DyadicLattice>,
    pub assignments: Vec<CoverAssignment>,
}

/// For every base cube `Q`, the concentric dilate `3Q` is a cube of one of
/// the `3^dim` shifted classes. For `Q` of side `2^l` cells with lower corner
/// at cell coordinate `i·2^l`, the dilate has corner `(i−1)·2^l`; its class is
/// `±(i−1) mod 3` per axis, the sign alternating with the distance
/// `(L−2) − l` from the top triple scale (halving flips the corner residue).
pub fn three_lattice_cover(grid: &Grid) -> Result<TripleCover> {
    let base = DyadicLattice::base(grid)?;
    let lattices = DyadicLattice::all_triples(grid)?;
    let dim = grid.dim();
    let h = grid.spacing();
    let n = grid.shape()[0] as f64;
    let top_exp = grid.shape()[0].trailing_zeros() as i64 - 2;
    let mut assignments = Vec::with_capacity(base.nodes().len());
    for (id, node) in base.nodes().iter().enumerate() {
        let side = node.side_cells as i64;
        let level_exp = node.side_cells.trailing_zeros() as i64;
        let flip = (top_exp - level_exp).rem_euclid(2) == 1;
        let mut class = [0usize; 2];
        for a in 0..dim {
            let coord = ((node.cube.lower()[a] - grid.origin()[a]) / h).round() as i64;
            let i = coord / side;
            let residue = if flip { 1 - i } else { i - 1 };
            class[a] = residue.rem_euclid(3) as usize;
        }
        let lattice_index = if dim == 1 { class[0] } else { class[0] * 3 + class[1] };
        let cube = node.cube.dilate(3.0);
        let clipped = (0..dim).any(|a| {
            cube.lower()[a] < grid.origin()[a] - 1e-9 * h
                || cube.lower()[a] + cube.side() > grid.origin()[a] + n * h + 1e-9 * h
        });
        assignments.push(CoverAssignment { base_node: id, class, lattice_index, cube, clipped });
    }
    Ok(TripleCover { base, lattices, assignments })
}
