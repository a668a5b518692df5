//! Seeded corpora of grid functions for the verification suites.
//!
//! Every generator is driven by a counter-based RNG, so a `(kind, grid, n,
//! seed)` quadruple always reproduces the same functions bit for bit.
//! Integrand kinds ([`CorpusKind::Step`], [`CorpusKind::SmoothBump`],
//! [`CorpusKind::RandomSign`]) are supported in the middle third of the
//! domain, keeping kernel integrals and tripled cubes inside the grid;
//! [`CorpusKind::PowerWeight`] produces strictly positive weights and
//! [`CorpusKind::BmoLog`] produces symbols with positive mean oscillation,
//! both defined on the whole domain.

use crate::error::{Error, Result};
use crate::grid::{Cube, Grid, GridFunction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// The family of random function generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorpusKind {
    /// Sums of a few rectangle indicators with random levels.
    Step,
    /// Sums of compactly supported smooth bumps.
    SmoothBump,
    /// Independent `±1` values on every cell of the middle third.
    RandomSign,
    /// Strictly positive weights `c·|x−x₀|^a + δ`.
    PowerWeight,
    /// Logarithmic symbols `c·ln|x−x₀|` with unbounded oscillation.
    BmoLog,
}

impl CorpusKind {
    pub const ALL: [CorpusKind; 5] =
        [CorpusKind::Step, CorpusKind::SmoothBump, CorpusKind::RandomSign, CorpusKind::PowerWeight, CorpusKind::BmoLog];

    pub fn name(self) -> &'static str {
        match self {
            CorpusKind::Step => "step",
            CorpusKind::SmoothBump => "smooth-bump",
            CorpusKind::RandomSign => "random-sign",
            CorpusKind::PowerWeight => "power-weight",
            CorpusKind::BmoLog => "bmo-log",
        }
    }
}

impl fmt::Display for CorpusKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CorpusKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<CorpusKind> {
        CorpusKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown corpus kind {s:?}")))
    }
}

/// The concentric cube covering the middle third of the domain.
pub fn middle_third(grid: &Grid) -> Result<Cube> {
    Ok(grid.domain_cube()?.dilate(1.0 / 3.0))
}

/// Generate `n` functions of the given kind on the grid, deterministically
/// from the seed.
pub fn generate_corpus(kind: CorpusKind, grid: &Grid, n: usize, seed: u64) -> Result<Vec<GridFunction>> {
    if n == 0 {
        return Err(Error::InvalidParameter("corpus size must be at least 1".into()));
    }
    let stream = seed.wrapping_add((kind as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let mut rng = ChaCha8Rng::seed_from_u64(stream);
    (0..n).map(|_| sample_nonzero(kind, grid, &mut rng)).collect()
}

fn sample_nonzero(kind: CorpusKind, grid: &Grid, rng: &mut ChaCha8Rng) -> Result<GridFunction> {
    for _ in 0..64 {
        let f = sample(kind, grid, rng)?;
        if f.values().iter().any(|&v| v != 0.0) {
            return Ok(f);
        }
    }
    Err(Error::Convergence("corpus generator kept producing the zero function".into()))
}

fn random_point_in(cube: &Cube, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..cube.dim()).map(|a| cube.lower()[a] + rng.random_range(0.0..cube.side())).collect()
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn sample(kind: CorpusKind, grid: &Grid, rng: &mut ChaCha8Rng) -> Result<GridFunction> {
    let dim = grid.dim();
    let mid = middle_third(grid)?;
    let n = grid.cell_count();
    match kind {
        CorpusKind::Step => {
            let mut values = vec![0.0; n];
            let pieces = rng.random_range(2..=5);
            for _ in 0..pieces {
                let side = mid.side() * rng.random_range(0.15..0.6);
                let lower: Vec<f64> =
                    (0..dim).map(|a| mid.lower()[a] + rng.random_range(0.0..(mid.side() - side))).collect();
                let level = rng.random_range(0.25..1.5) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                let piece = Cube::new(dim, &lower, side)?;
                if let Some(b) = grid.cube_box(&piece) {
                    for i in b.iter(grid) {
                        if mid.contains_point(&grid.cell_center(i)[..dim]) {
                            values[i] += level;
                        }
                    }
                }
            }
            GridFunction::new(grid.clone(), values)
        }
        CorpusKind::SmoothBump => {
            let core = mid.dilate(0.5);
            let bumps: Vec<(Vec<f64>, f64, f64)> = (0..rng.random_range(1..=3))
                .map(|_| {
                    let center = random_point_in(&core, rng);
                    let slack = (0..dim)
                        .map(|a| (center[a] - mid.lower()[a]).min(mid.lower()[a] + mid.side() - center[a]))
                        .fold(f64::MAX, f64::min);
                    let radius = slack * rng.random_range(0.5..0.95);
                    let amp = rng.random_range(0.3..1.5) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                    (center, radius, amp)
                })
                .collect();
            GridFunction::from_fn(grid.clone(), |x| {
                bumps
                    .iter()
                    .map(|(c, radius, amp)| {
                        let t = distance(x, c) / radius;
                        if t < 1.0 {
                            amp * (1.0 - 1.0 / (1.0 - t * t)).exp()
                        } else {
                            0.0
                        }
                    })
                    .sum()
            })
        }
        CorpusKind::RandomSign => {
            let mut values = vec![0.0; n];
            for i in 0..n {
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                if mid.contains_point(&grid.cell_center(i)[..dim]) {
                    values[i] = sign;
                }
            }
            GridFunction::new(grid.clone(), values)
        }
        CorpusKind::PowerWeight => {
            let x0 = random_point_in(&mid, rng);
            let a = rng.random_range(0.2..1.4);
            let floor = rng.random_range(0.05..0.5);
            let c = rng.random_range(0.5..2.0);
            GridFunction::from_fn(grid.clone(), |x| c * distance(x, &x0).powf(a) + floor)
        }
        CorpusKind::BmoLog => {
            let x0 = random_point_in(&mid, rng);
            let c = rng.random_range(0.5..2.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let cutoff = grid.spacing() * 1e-6;
            GridFunction::from_fn(grid.clone(), |x| c * distance(x, &x0).max(cutoff).ln())
        }
    }
}
