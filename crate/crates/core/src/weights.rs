//! Muckenhoupt-type weight characteristics over finite cube families.
//!
//! A characteristic here is the max of the defining functional over the cubes
//! of a family, so it is a lower bound for the analytic sup; tests compare
//! lattice families against dense brute-force families instead of asserting
//! analytic values. Cube averages divide by the number of in-domain cells
//! (weights are never zero-extended).

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::lattice::DyadicLattice;
use crate::maximal::{hl_maximal, CubeFamily, FamilyCube};

/// Lower clip applied to positive samples, guarding conjugate-power overflow.
pub const WEIGHT_FLOOR: f64 = 1e-12;

/// A strictly positive grid function.
#[derive(Debug, Clone, PartialEq)]
pub struct Weight {
    f: GridFunction,
}

impl Weight {
    /// Validates positivity; values in `(0, 1e-12)` are raised to the floor,
    /// values `≤ 0` are rejected.
    pub fn new(f: GridFunction) -> Result<Weight> {
        if let Some(i) = f.values().iter().position(|&v| v <= 0.0) {
            return Err(Error::NonPositiveWeight(format!("weight sample {} at cell {i}", f.value(i))));
        }
        Ok(Weight { f: f.map(|v| v.max(WEIGHT_FLOOR)) })
    }

    pub fn constant(grid: Grid, c: f64) -> Result<Weight> {
        Weight::new(GridFunction::constant(grid, c)?)
    }

    pub fn function(&self) -> &GridFunction {
        &self.f
    }

    pub fn grid(&self) -> &Grid {
        self.f.grid()
    }

    pub fn values(&self) -> &[f64] {
        self.f.values()
    }

    /// Pointwise positive multiple.
    pub fn scale(&self, c: f64) -> Result<Weight> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidParameter(format!("weight scale must be positive, got {c}")));
        }
        Weight::new(self.f.scale(c))
    }

    /// Pointwise power (exponent 1 is the identity, bitwise).
    pub fn pow(&self, e: f64) -> Result<Weight> {
        if !e.is_finite() {
            return Err(Error::InvalidParameter(format!("weight exponent must be finite, got {e}")));
        }
        if e == 1.0 {
            return Ok(self.clone());
        }
        Weight::new(self.f.map(|v| v.powf(e)))
    }
}

/// A vector of weights with integrability exponents `1 ≤ p_i < ∞` and the
/// combined exponent `1/p = Σ 1/p_i`.
#[derive(Debug, Clone)]
pub struct WeightVector {
    weights: Vec<Weight>,
    exponents: Vec<f64>,
    p: f64,
}

impl WeightVector {
    pub fn new(weights: Vec<Weight>, exponents: Vec<f64>) -> Result<WeightVector> {
        if weights.is_empty() || weights.len() != exponents.len() {
            return Err(Error::InvalidParameter(format!(
                "need equally many weights and exponents, got {} and {}",
                weights.len(),
                exponents.len()
            )));
        }
        for w in &weights[1..] {
            if w.grid() != weights[0].grid() {
                return Err(Error::GridMismatch);
            }
        }
        for &p in &exponents {
            if !(p.is_finite() && p >= 1.0) {
                return Err(Error::InvalidParameter(format!("vector exponents must satisfy 1 ≤ p < ∞, got {p}")));
            }
        }
        let p = 1.0 / exponents.iter().map(|&p| 1.0 / p).sum::<f64>();
        Ok(WeightVector { weights, exponents, p })
    }

    pub fn weights(&self) -> &[Weight] {
        &self.weights
    }

    pub fn exponents(&self) -> &[f64] {
        &self.exponents
    }

    /// The combined exponent `p` with `1/p = Σ 1/p_i`.
    pub fn holder_exponent(&self) -> f64 {
        self.p
    }

    /// The product weight `Π w_i^{p/p_i}`.
    pub fn combined(&self) -> Result<Weight> {
        let mut acc = self.weights[0].pow(self.p / self.exponents[0])?;
        for (w, &pi) in self.weights.iter().zip(&self.exponents).skip(1) {
            let factor = w.pow(self.p / pi)?;
            acc = Weight::new(acc.f.mul(&factor.f)?)?;
        }
        Ok(acc)
    }
}

fn check_weight_family(w: &Weight, cubes: &CubeFamily) -> Result<()> {
    if w.grid() != cubes.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

fn box_average(values: &[f64], grid: &Grid, fc: &FamilyCube) -> f64 {
    let sum: f64 = fc.cbox.iter(grid).map(|i| values[i]).sum();
    sum / fc.cbox.cell_count() as f64
}

fn box_min(values: &[f64], grid: &Grid, fc: &FamilyCube) -> f64 {
    fc.cbox.iter(grid).map(|i| values[i]).fold(f64::INFINITY, f64::min)
}

/// All cubes of the base dyadic lattice, as a family (used for
/// characteristics that want unclipped cubes only).
pub fn base_dyadic_family(grid: &Grid) -> Result<CubeFamily> {
    let lat = DyadicLattice::base(grid)?;
    let cubes: Vec<_> = lat.nodes().iter().map(|n| n.cube.clone()).collect();
    CubeFamily::from_cubes(grid, &cubes)
}

/// Muckenhoupt characteristic for `p > 1`:
/// `max_Q ⟨w⟩_Q · ⟨w^{1−p'}⟩_Q^{p−1}`.
pub fn ap_constant(w: &Weight, p: f64, cubes: &CubeFamily) -> Result<f64> {
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::InvalidParameter(format!("characteristic exponent must satisfy p > 1, got {p}")));
    }
    check_weight_family(w, cubes)?;
    let sigma = dual_weight(w, p)?;
    let grid = cubes.grid();
    let mut best = f64::NEG_INFINITY;
    for fc in cubes.cubes() {
        let value = box_average(w.values(), grid, fc) * box_average(sigma.values(), grid, fc).powf(p - 1.0);
        best = best.max(value);
    }
    Ok(best)
}

/// `A_1` characteristic: `max_Q ⟨w⟩_Q / min_Q w`.
pub fn a1_constant(w: &Weight, cubes: &CubeFamily) -> Result<f64> {
    check_weight_family(w, cubes)?;
    let grid = cubes.grid();
    let mut best = f64::NEG_INFINITY;
    for fc in cubes.cubes() {
        best = best.max(box_average(w.values(), grid, fc) / box_min(w.values(), grid, fc));
    }
    Ok(best)
}

/// Measure-of-maximal characteristic:
/// `max_Q (1/w(Q)) ∫_Q M(w·χ_Q)` with `M` the grid maximal operator over
/// `maximal_family`. Costs one maximal sweep per cube.
pub fn ainfty_constant(w: &Weight, cubes: &CubeFamily, maximal_family: &CubeFamily) -> Result<f64> {
    check_weight_family(w, cubes)?;
    check_weight_family(w, maximal_family)?;
    let grid = cubes.grid();
    let mut best = f64::NEG_INFINITY;
    for fc in cubes.cubes() {
        let cut = w.function().restrict_box(&fc.cbox);
        let m = hl_maximal(&cut, maximal_family)?;
        let num: f64 = fc.cbox.iter(grid).map(|i| m.value(i)).sum();
        let den: f64 = fc.cbox.iter(grid).map(|i| w.values()[i]).sum();
        best = best.max(num / den);
    }
    Ok(best)
}

/// Multilinear characteristic:
/// `max_Q ⟨Π w_i^{p/p_i}⟩_Q · Π_i F_i(Q)` where `F_i = ⟨w_i^{1−p_i'}⟩_Q^{p/p_i'}`
/// for `p_i > 1` and `F_i = (min_Q w_i)^{−p}` for `p_i = 1`.
pub fn multi_ap_constant(ws: &WeightVector, cubes: &CubeFamily) -> Result<f64> {
    check_weight_family(&ws.weights[0], cubes)?;
    let grid = cubes.grid();
    let p = ws.p;
    let nu = ws.combined()?;
    // Per input: either the conjugate-power samples with the outer exponent,
    // or the raw samples for the min branch.
    enum Factor {
        Conjugate { powered: Vec<f64>, exponent: f64 },
        Infimum,
    }
    let factors: Vec<Factor> = ws
        .weights
        .iter()
        .zip(&ws.exponents)
        .map(|(w, &pi)| {
            if pi == 1.0 {
                Factor::Infimum
            } else {
                let powered = w.values().iter().map(|&v| v.powf(1.0 - pi / (pi - 1.0))).collect();
                Factor::Conjugate { powered, exponent: p * (pi - 1.0) / pi }
            }
        })
        .collect();
    let mut best = f64::NEG_INFINITY;
    for fc in cubes.cubes() {
        let mut value = box_average(nu.values(), grid, fc);
        for (factor, w) in factors.iter().zip(&ws.weights) {
            value *= match factor {
                Factor::Conjugate { powered, exponent } => box_average(powered, grid, fc).powf(*exponent),
                Factor::Infimum => box_min(w.values(), grid, fc).powf(-p),
            };
        }
        best = best.max(value);
    }
    Ok(best)
}

/// Conjugate-exponent dual weight `σ = w^{1−p'}`, `p > 1`.
pub fn dual_weight(w: &Weight, p: f64) -> Result<Weight> {
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::InvalidParameter(format!("dual weight needs p > 1, got {p}")));
    }
    w.pow(1.0 - p / (p - 1.0))
}

/// `(∫ |f|^p w)^{1/p}` over the whole domain.
pub fn weighted_lp_norm(f: &GridFunction, w: &Weight, p: f64) -> Result<f64> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::InvalidParameter(format!("norm exponent must satisfy 1 ≤ p < ∞, got {p}")));
    }
    if f.grid() != w.grid() {
        return Err(Error::GridMismatch);
    }
    let h = f.grid().cell_measure();
    let sum: f64 = f.values().iter().zip(w.values()).map(|(&v, &wv)| v.abs().powf(p) * wv * h).sum();
    Ok(sum.powf(1.0 / p))
}

/// Result of [`weak_norm_lower_estimate`]: the best ratio and the index of
/// the candidate attaining it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakNormEstimate {
    pub value: f64,
    pub argmax: usize,
}

/// Lower estimate of the weak-type norm of the maximal operator on `L^p(w)`:
/// the max over candidates `f` of
/// `sup_t t·w({M f ≥ t})^{1/p} / ‖f‖_{L^p(w)}`, the sup scanned over the
/// distinct values of `M f`.
pub fn weak_norm_lower_estimate(
    w: &Weight,
    p: f64,
    maximal_family: &CubeFamily,
    candidates: &[GridFunction],
) -> Result<WeakNormEstimate> {
    if candidates.is_empty() {
        return Err(Error::EmptyFamily("weak-norm estimation needs candidates".into()));
    }
    check_weight_family(w, maximal_family)?;
    let h = w.grid().cell_measure();
    let mut best = WeakNormEstimate { value: f64::NEG_INFINITY, argmax: 0 };
    for (idx, f) in candidates.iter().enumerate() {
        let denom = weighted_lp_norm(f, w, p)?;
        if denom == 0.0 {
            return Err(Error::InvalidParameter(format!("candidate {idx} has zero norm")));
        }
        let m = hl_maximal(f, maximal_family)?;
        // Cells sorted by M f descending; prefix sums give w({M f ≥ v}).
        let mut order: Vec<usize> = (0..m.values().len()).collect();
        order.sort_by(|&a, &b| m.value(b).partial_cmp(&m.value(a)).unwrap().then(a.cmp(&b)));
        let mut cum = 0.0;
        let mut sup: f64 = 0.0;
        let mut i = 0;
        while i < order.len() {
            let v = m.value(order[i]);
            while i < order.len() && m.value(order[i]) == v {
                cum += w.values()[order[i]] * h;
                i += 1;
            }
            if v > 0.0 {
                sup = sup.max(v * cum.powf(1.0 / p));
            }
        }
        let ratio = sup / denom;
        if ratio > best.value {
            best = WeakNormEstimate { value: ratio, argmax: idx };
        }
    }
    Ok(best)
}

/// The per-cube witness inputs `σ·χ_Q` (dual weight cut to each family cube),
/// the canonical candidates for [`weak_norm_lower_estimate`].
pub fn buckley_witnesses(w: &Weight, p: f64, cubes: &CubeFamily) -> Result<Vec<GridFunction>> {
    check_weight_family(w, cubes)?;
    let sigma = dual_weight(w, p)?;
    Ok(cubes.cubes().iter().map(|fc| sigma.function().restrict_box(&fc.cbox)).collect())
}
