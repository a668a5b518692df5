//! Model singular operators realized as kernel quadratures.
//!
//! All operators act on grid functions and return grid functions on the same
//! grid. Principal-value singularities are handled by omitting the diagonal
//! cell — the midpoint rule plus kernel antisymmetry makes that consistent —
//! and integrals never extend past the grid domain, so input supports should
//! stay well inside it. Inner sums run in ascending cell order, making every
//! evaluation deterministic.

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::maximal::{multilinear_maximal, CubeFamily, CubeFamilySpec, FamilyCube};
use crate::sparse::{sparse_operator, SparseFamily};
use crate::spaces::bmo_norm;

/// Sign with a genuine zero at `0` (both `±0.0` map to `0`), so kernels built
/// from it stay odd on grid-aligned differences.
fn sgn(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Discrete principal-value convolution with the kernel `1/(π(x−y))`:
/// `(h/π) Σ_{j≠i} f(x_j)/(x_i−x_j)`.
pub fn hilbert_transform(f: &GridFunction) -> Result<GridFunction> {
    let grid = f.grid();
    if grid.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: grid.dim() });
    }
    let n = grid.cell_count();
    let h = grid.spacing();
    let xs: Vec<f64> = (0..n).map(|i| grid.cell_center(i)[0]).collect();
    let mut out = vec![0.0; n];
    for i in 0..n {
        let mut sum = 0.0;
        for j in 0..n {
            if j != i {
                sum += f.value(j) / (xs[i] - xs[j]);
            }
        }
        out[i] = sum * h / std::f64::consts::PI;
    }
    GridFunction::new(grid.clone(), out)
}

/// A bounded zero-mean symbol on the unit circle, steering the homogeneous
/// planar kernel `Ω(y/|y|)/|y|²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SphereSymbol {
    Zero,
    /// `sgn(u·e₁)`.
    SignFirst,
    /// `sgn((u·e₁)(u·e₂))`.
    SignProduct,
    /// `cos(kθ)`, `k ≥ 1`.
    Cosine { k: u32 },
}

impl SphereSymbol {
    /// Value at the direction of `d ≠ 0`.
    pub fn eval(&self, d: [f64; 2]) -> f64 {
        match self {
            SphereSymbol::Zero => 0.0,
            SphereSymbol::SignFirst => sgn(d[0]),
            SphereSymbol::SignProduct => sgn(d[0]) * sgn(d[1]),
            SphereSymbol::Cosine { k } => (*k as f64 * d[1].atan2(d[0])).cos(),
        }
    }

    /// Checks boundedness and zero mean over a dense sample of directions.
    pub fn validate(&self) -> Result<()> {
        const SAMPLES: usize = 1 << 12;
        let mut sum = 0.0;
        for t in 0..SAMPLES {
            let theta = 2.0 * std::f64::consts::PI * (t as f64 + 0.5) / SAMPLES as f64;
            let v = self.eval([theta.cos(), theta.sin()]);
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("circle symbol at angle {theta}")));
            }
            sum += v;
        }
        let mean = sum / SAMPLES as f64;
        if mean.abs() > 1e-10 {
            return Err(Error::InvalidParameter(format!("circle symbol must have zero mean, sampled mean {mean:e}")));
        }
        Ok(())
    }
}

/// Planar homogeneous singular operator:
/// `Σ_{j≠i} f(x_j) · Ω((x_i−x_j)/|x_i−x_j|) / |x_i−x_j|² · h²`.
pub fn rough_homogeneous(f: &GridFunction, omega: &SphereSymbol) -> Result<GridFunction> {
    let grid = f.grid();
    if grid.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: grid.dim() });
    }
    omega.validate()?;
    let n = grid.cell_count();
    let cell = grid.cell_measure();
    let centers: Vec<[f64; 2]> = (0..n).map(|i| grid.cell_center(i)).collect();
    let mut out = vec![0.0; n];
    for i in 0..n {
        let mut sum = 0.0;
        for j in 0..n {
            if j != i {
                let d = [centers[i][0] - centers[j][0], centers[i][1] - centers[j][1]];
                let r2 = d[0] * d[0] + d[1] * d[1];
                sum += f.value(j) * omega.eval(d) / r2;
            }
        }
        out[i] = sum * cell;
    }
    GridFunction::new(grid.clone(), out)
}

/// Binary model kernel `sgn(x−y₁)·sgn(x−y₂)/((|x−y₁|+|x−y₂|)²)` applied to a
/// pair of inputs on a shared 1-D grid, diagonal cells excluded in each slot.
pub fn bilinear_model(f1: &GridFunction, f2: &GridFunction) -> Result<GridFunction> {
    bilinear_model_commutator(&[], &[], f1, f2)
}

/// The model pair operator with oscillation weights
/// `Π_s (b_s(x) − b_s(y_{slot_s}))` inserted into the kernel; `slots` selects
/// per symbol which of the two integration variables it attaches to.
pub fn bilinear_model_commutator(
    bs: &[GridFunction],
    slots: &[usize],
    f1: &GridFunction,
    f2: &GridFunction,
) -> Result<GridFunction> {
    let grid = f1.grid();
    if grid.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: grid.dim() });
    }
    if f2.grid() != grid || bs.iter().any(|b| b.grid() != grid) {
        return Err(Error::GridMismatch);
    }
    if bs.len() != slots.len() {
        return Err(Error::InvalidParameter(format!("{} symbols for {} slots", bs.len(), slots.len())));
    }
    if let Some(&s) = slots.iter().find(|&&s| s > 1) {
        return Err(Error::InvalidParameter(format!("slot {s} out of range for a binary operator")));
    }
    let n = grid.cell_count();
    let h = grid.spacing();
    let xs: Vec<f64> = (0..n).map(|i| grid.cell_center(i)[0]).collect();
    let mut out = vec![0.0; n];
    for i in 0..n {
        let mut sum = 0.0;
        for j1 in 0..n {
            if j1 == i || f1.value(j1) == 0.0 {
                continue;
            }
            let d1 = xs[i] - xs[j1];
            for j2 in 0..n {
                if j2 == i {
                    continue;
                }
                let d2 = xs[i] - xs[j2];
                let kernel = sgn(d1) * sgn(d2) / ((d1.abs() + d2.abs()) * (d1.abs() + d2.abs()));
                let mut weight = 1.0;
                for (b, &slot) in bs.iter().zip(slots) {
                    let y = if slot == 0 { j1 } else { j2 };
                    weight *= b.value(i) - b.value(y);
                }
                sum += weight * kernel * f1.value(j1) * f2.value(j2);
            }
        }
        out[i] = sum * h * h;
    }
    GridFunction::new(grid.clone(), out)
}

/// A named operator with a uniform `inputs → output` evaluation contract.
#[derive(Debug, Clone)]
pub enum OperatorDescriptor {
    Hilbert,
    RoughOmega { omega: SphereSymbol },
    BilinearModel,
    MultilinearMaximal,
    /// Pointwise maximum of the sparse operators of the listed families.
    SparseRealization(Vec<SparseFamily>),
}

impl OperatorDescriptor {
    /// Required input count; `None` accepts any positive arity.
    pub fn arity(&self) -> Option<usize> {
        match self {
            OperatorDescriptor::Hilbert | OperatorDescriptor::RoughOmega { .. } | OperatorDescriptor::SparseRealization(_) => Some(1),
            OperatorDescriptor::BilinearModel => Some(2),
            OperatorDescriptor::MultilinearMaximal => None,
        }
    }

    pub fn apply(&self, fs: &[GridFunction]) -> Result<GridFunction> {
        if fs.is_empty() {
            return Err(Error::EmptyFamily("operator needs at least one input".into()));
        }
        if let Some(a) = self.arity() {
            if fs.len() != a {
                return Err(Error::InvalidParameter(format!("operator expects {a} inputs, got {}", fs.len())));
            }
        }
        match self {
            OperatorDescriptor::Hilbert => hilbert_transform(&fs[0]),
            OperatorDescriptor::RoughOmega { omega } => rough_homogeneous(&fs[0], omega),
            OperatorDescriptor::BilinearModel => bilinear_model(&fs[0], &fs[1]),
            OperatorDescriptor::MultilinearMaximal => {
                let family = CubeFamily::build(fs[0].grid(), CubeFamilySpec::DyadicShifted)?;
                multilinear_maximal(fs, &family)
            }
            OperatorDescriptor::SparseRealization(families) => {
                if families.is_empty() {
                    return Err(Error::EmptyFamily("sparse realization needs at least one family".into()));
                }
                let mut out = sparse_operator(&fs[0], &families[0], 1.0)?;
                for fam in &families[1..] {
                    let t = sparse_operator(&fs[0], fam, 1.0)?;
                    out = out.zip_with(&t, f64::max)?;
                }
                Ok(out)
            }
        }
    }
}

/// Iterated commutator of a kernel-quadrature operator: each kernel term is
/// weighted by `(b(x_i) − b(x_j))^m`, realizing `T((b(x) − b(·))^m f)(x)`.
/// Only kernel-form operators support this.
pub fn commutator_iterated(t: &OperatorDescriptor, b: &GridFunction, m: u32, f: &GridFunction) -> Result<GridFunction> {
    if m < 1 {
        return Err(Error::InvalidParameter("commutator order must be at least 1".into()));
    }
    if b.grid() != f.grid() {
        return Err(Error::GridMismatch);
    }
    match t {
        OperatorDescriptor::Hilbert => {
            let weighted = move |i: usize, j: usize| (b.value(i) - b.value(j)).powi(m as i32);
            kernel_weighted_hilbert(f, weighted)
        }
        OperatorDescriptor::RoughOmega { omega } => {
            let weighted = move |i: usize, j: usize| (b.value(i) - b.value(j)).powi(m as i32);
            kernel_weighted_rough(f, omega, weighted)
        }
        _ => Err(Error::Unsupported("iterated commutators need a kernel-form operator".into())),
    }
}

fn kernel_weighted_hilbert(f: &GridFunction, weight: impl Fn(usize, usize) -> f64) -> Result<GridFunction> {
    let grid = f.grid();
    if grid.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: grid.dim() });
    }
    let n = grid.cell_count();
    let h = grid.spacing();
    let xs: Vec<f64> = (0..n).map(|i| grid.cell_center(i)[0]).collect();
    let mut out = vec![0.0; n];
    for i in 0..n {
        let mut sum = 0.0;
        for j in 0..n {
            if j != i {
                sum += weight(i, j) * f.value(j) / (xs[i] - xs[j]);
            }
        }
        out[i] = sum * h / std::f64::consts::PI;
    }
    GridFunction::new(grid.clone(), out)
}

fn kernel_weighted_rough(f: &GridFunction, omega: &SphereSymbol, weight: impl Fn(usize, usize) -> f64) -> Result<GridFunction> {
    let grid = f.grid();
    if grid.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: grid.dim() });
    }
    omega.validate()?;
    let n = grid.cell_count();
    let cell = grid.cell_measure();
    let centers: Vec<[f64; 2]> = (0..n).map(|i| grid.cell_center(i)).collect();
    let mut out = vec![0.0; n];
    for i in 0..n {
        let mut sum = 0.0;
        for j in 0..n {
            if j != i {
                let d = [centers[i][0] - centers[j][0], centers[i][1] - centers[j][1]];
                let r2 = d[0] * d[0] + d[1] * d[1];
                sum += weight(i, j) * f.value(j) * omega.eval(d) / r2;
            }
        }
        out[i] = sum * cell;
    }
    GridFunction::new(grid.clone(), out)
}

/// Empirical local weak-type profile of an operator: for each `λ`, the
/// smallest multiple `c` such that, over every (cube, input) pair,
/// `|{x ∈ Q : |T(f·χ_Q)(x)| > c·⟨|f|^r⟩_Q^{1/r}}| ≤ λ|Q|`. The profile is
/// nonincreasing in `λ` by construction. Pairs with a vanishing local
/// average are skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakTypeProfile {
    pub lambdas: Vec<f64>,
    pub thresholds: Vec<f64>,
    /// Number of (cube, input) pairs that entered the maximum.
    pub pairs: usize,
}

pub fn weak_type_profile(
    t: impl Fn(&GridFunction) -> Result<GridFunction>,
    r: f64,
    cubes: &CubeFamily,
    corpus: &[GridFunction],
    lambdas: &[f64],
) -> Result<WeakTypeProfile> {
    if !(r.is_finite() && r >= 1.0) {
        return Err(Error::InvalidParameter(format!("profile exponent must satisfy r ≥ 1, got {r}")));
    }
    if corpus.is_empty() {
        return Err(Error::EmptyFamily("weak-type profile needs inputs".into()));
    }
    if let Some(&l) = lambdas.iter().find(|&&l| !(l > 0.0 && l < 1.0)) {
        return Err(Error::InvalidParameter(format!("levels must lie in (0,1), got {l}")));
    }
    let grid = cubes.grid();
    let local_norm = |f: &GridFunction, fc: &FamilyCube| -> f64 {
        let count = fc.cbox.cell_count() as f64;
        if r == 1.0 {
            fc.cbox.iter(grid).map(|i| f.value(i).abs()).sum::<f64>() / count
        } else {
            (fc.cbox.iter(grid).map(|i| f.value(i).abs().powf(r)).sum::<f64>() / count).powf(1.0 / r)
        }
    };
    let mut thresholds = vec![0.0f64; lambdas.len()];
    let mut pairs = 0usize;
    for f in corpus {
        if f.grid() != grid {
            return Err(Error::GridMismatch);
        }
        for fc in cubes.cubes() {
            let denom = local_norm(f, fc);
            if denom == 0.0 {
                continue;
            }
            pairs += 1;
            let cut = f.restrict_box(&fc.cbox);
            let tf = t(&cut)?;
            let mut ratios: Vec<f64> = fc.cbox.iter(grid).map(|i| tf.value(i).abs() / denom).collect();
            ratios.sort_by(|a, b| b.partial_cmp(a).unwrap());
            for (ti, &lambda) in thresholds.iter_mut().zip(lambdas) {
                let allowed = (lambda * ratios.len() as f64).floor() as usize;
                let need = if allowed < ratios.len() { ratios[allowed] } else { 0.0 };
                if need > *ti {
                    *ti = need;
                }
            }
        }
    }
    if pairs == 0 {
        return Err(Error::EmptyFamily("every (cube, input) pair had zero local average".into()));
    }
    Ok(WeakTypeProfile { lambdas: lambdas.to_vec(), thresholds, pairs })
}

/// Exponential level-set check for mean oscillation: violations of
/// `|{x ∈ Q : |b − ⟨b⟩_Q| > α}| ≤ e·|Q|·exp(−α/(2^n · e · ‖b‖))` are counted
/// twice — once with `‖b‖` estimated on the supplied cubes, once with the
/// broader base-plus-shifted scan (a larger estimate, hence a weaker bound).
#[derive(Debug, Clone, PartialEq)]
pub struct OscillationDecayOutcome {
    pub checks: usize,
    pub violations_family_norm: usize,
    pub violations_wide_norm: usize,
    pub family_norm: f64,
    pub wide_norm: f64,
}

pub fn john_nirenberg_check(b: &GridFunction, cubes: &CubeFamily, alphas: &[f64]) -> Result<OscillationDecayOutcome> {
    let grid = cubes.grid();
    if b.grid() != grid {
        return Err(Error::GridMismatch);
    }
    if alphas.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
        return Err(Error::InvalidParameter("levels must be positive".into()));
    }
    let family_cubes: Vec<_> = cubes.cubes().iter().map(|fc| fc.cube.clone()).collect();
    let family_norm = bmo_norm(b, &family_cubes)?;
    if family_norm == 0.0 {
        return Err(Error::InvalidParameter("symbol has zero oscillation on the family".into()));
    }
    let wide_family = CubeFamily::build(grid, CubeFamilySpec::DyadicShifted)?;
    let wide_cubes: Vec<_> = wide_family.cubes().iter().map(|fc| fc.cube.clone()).collect();
    let wide_norm = bmo_norm(b, &wide_cubes)?.max(family_norm);
    let cell = grid.cell_measure();
    let scale = 2f64.powi(grid.dim() as i32) * std::f64::consts::E;
    let mut out = OscillationDecayOutcome { checks: 0, violations_family_norm: 0, violations_wide_norm: 0, family_norm, wide_norm };
    for fc in cubes.cubes() {
        let count = fc.cbox.cell_count() as f64;
        let sum: f64 = fc.cbox.iter(grid).map(|i| b.value(i)).sum();
        let mean = sum / count;
        let measure_q = count * cell;
        for &alpha in alphas {
            let exceed = fc.cbox.iter(grid).filter(|&i| (b.value(i) - mean).abs() > alpha).count() as f64 * cell;
            out.checks += 1;
            if exceed > std::f64::consts::E * measure_q * (-alpha / (scale * family_norm)).exp() {
                out.violations_family_norm += 1;
            }
            if exceed > std::f64::consts::E * measure_q * (-alpha / (scale * wide_norm)).exp() {
                out.violations_wide_norm += 1;
            }
        }
    }
    Ok(out)
}
