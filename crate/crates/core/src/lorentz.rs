//! Decreasing rearrangements and Lorentz norms.
//!
//! A grid function is a step function, so its decreasing rearrangement is a
//! step profile and every Lorentz integral below is evaluated in closed form,
//! piecewise over the profile's plateaus. No quadrature error enters beyond
//! the rasterization of the function itself.

use crate::error::{Error, Result};
use crate::grid::GridFunction;

/// Step profile of a decreasing rearrangement: value `levels[k]` on
/// `[breakpoints[k-1], breakpoints[k])` (with an implicit leading 0), zero
/// from the last breakpoint on. Levels are strictly decreasing and positive,
/// breakpoints strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct RearrangementProfile {
    breakpoints: Vec<f64>,
    levels: Vec<f64>,
}

impl RearrangementProfile {
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn is_zero(&self) -> bool {
        self.levels.is_empty()
    }

    /// Total measure of the support, i.e. the last breakpoint.
    pub fn support_measure(&self) -> f64 {
        self.breakpoints.last().copied().unwrap_or(0.0)
    }

    /// `f*(t)`; right-continuous, zero past the support.
    pub fn eval(&self, t: f64) -> f64 {
        for (k, &bp) in self.breakpoints.iter().enumerate() {
            if t < bp {
                return self.levels[k];
            }
        }
        0.0
    }

    /// Distribution function of the profile, `|{f* > s}|`.
    pub fn level_measure(&self, s: f64) -> f64 {
        let mut m = 0.0;
        for (k, &v) in self.levels.iter().enumerate() {
            if v > s {
                m = self.breakpoints[k];
            }
        }
        m
    }
}

/// Decreasing rearrangement of `f` with respect to `w dx` (Lebesgue without a
/// weight). Ties between equal |values| are broken by ascending cell index,
/// which only affects which cell is credited, not the profile. Negative
/// weight samples are rejected.
pub fn decreasing_rearrangement(
    f: &GridFunction,
    weight: Option<&GridFunction>,
) -> Result<RearrangementProfile> {
    if let Some(w) = weight {
        if !f.same_grid(w) {
            return Err(Error::GridMismatch);
        }
        if let Some(i) = w.values().iter().position(|&v| v < 0.0) {
            return Err(Error::NonPositiveWeight(format!("weight sample {} at cell {i}", w.value(i))));
        }
    }
    let h = f.grid().cell_measure();
    let mut atoms: Vec<(f64, usize)> = (0..f.values().len())
        .filter_map(|i| {
            let v = f.value(i).abs();
            let m = weight.map_or(1.0, |w| w.value(i)) * h;
            (v > 0.0 && m > 0.0).then_some((v, i))
        })
        .collect();
    atoms.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));

    let mut breakpoints = Vec::new();
    let mut levels = Vec::new();
    let mut cum = 0.0;
    for (v, i) in atoms {
        let m = weight.map_or(1.0, |w| w.value(i)) * h;
        cum += m;
        if levels.last() == Some(&v) {
            *breakpoints.last_mut().unwrap() = cum;
        } else {
            levels.push(v);
            breakpoints.push(cum);
        }
    }
    Ok(RearrangementProfile { breakpoints, levels })
}

fn check_pair(p: f64, q: f64) -> Result<()> {
    let p_ok = p > 0.0 && (p.is_finite() || p == f64::INFINITY);
    let q_ok = q > 0.0 && (q.is_finite() || q == f64::INFINITY);
    if !p_ok || !q_ok {
        return Err(Error::InadmissiblePair(format!("({p}, {q})")));
    }
    if p == f64::INFINITY && q != f64::INFINITY {
        return Err(Error::InadmissiblePair(format!("({p}, {q}): first exponent ∞ forces second ∞")));
    }
    Ok(())
}

/// Lorentz norm of a step profile.
///
/// For finite `q` the integral `∫ (t^{1/p} f*(t))^q dt/t` is a finite sum of
/// exact plateau contributions `v^q (p/q)(t_k^{q/p} - t_{k-1}^{q/p})`; for
/// `q = ∞` the supremum of `t^{1/p} f*(t)` is attained at a plateau edge and
/// both edges of every plateau are inspected to be robust against rounding.
pub fn lorentz_norm_of_profile(profile: &RearrangementProfile, p: f64, q: f64) -> Result<f64> {
    check_pair(p, q)?;
    if profile.is_zero() {
        return Ok(0.0);
    }
    if p == f64::INFINITY {
        // Essential supremum.
        return Ok(profile.levels[0]);
    }
    if q == f64::INFINITY {
        let mut sup: f64 = 0.0;
        let mut prev = 0.0_f64;
        for (k, &t) in profile.breakpoints.iter().enumerate() {
            let v = profile.levels[k];
            sup = sup.max(t.powf(1.0 / p) * v).max(prev.powf(1.0 / p) * v);
            prev = t;
        }
        return Ok(sup);
    }
    let mut sum = 0.0;
    let mut prev = 0.0_f64;
    for (k, &t) in profile.breakpoints.iter().enumerate() {
        let v = profile.levels[k];
        sum += v.powf(q) * (p / q) * (t.powf(q / p) - prev.powf(q / p));
        prev = t;
    }
    Ok(sum.powf(1.0 / q))
}

/// `‖f‖_{L^{p,q}(w)}` computed exactly from the rearrangement profile.
pub fn lorentz_norm(f: &GridFunction, p: f64, q: f64, weight: Option<&GridFunction>) -> Result<f64> {
    check_pair(p, q)?;
    let profile = decreasing_rearrangement(f, weight)?;
    lorentz_norm_of_profile(&profile, p, q)
}

/// Result of the multilinear Lorentz Hölder bound: the product pair and the
/// certified upper bound for `‖Π f_i‖_{L^{p,q}}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HolderBound {
    pub p: f64,
    pub q: f64,
    pub bound: f64,
}

/// Sharp-constant Hölder bound for a product of Lorentz norms.
///
/// Input: `(‖f_i‖_{L^{p_i,q_i}}, p_i, q_i)` with each pair admissible for the
/// product inequality: `1 < p_i < ∞` with `0 < q_i ≤ ∞`, or `p_i = q_i = ∞`.
/// With `1/p = Σ 1/p_i` and `1/q = Σ 1/q_i`:
///
/// - `q < ∞`:        bound = `m^{1/p} · Π ‖f_i‖`
/// - `q = ∞, p < ∞`: bound = `p^{-1/p} · Π p_i^{1/p_i} · Π ‖f_i‖`
/// - `p = q = ∞`:    bound = `Π ‖f_i‖`
///
/// where `∞^{1/∞}` counts as 1.
pub fn lorentz_holder_bound(factors: &[(f64, f64, f64)]) -> Result<HolderBound> {
    if factors.is_empty() {
        return Err(Error::EmptyFamily("no factors given".into()));
    }
    let m = factors.len() as f64;
    let mut inv_p = 0.0;
    let mut inv_q = 0.0;
    let mut prod = 1.0;
    let mut p_pow = 1.0; // Π p_i^{1/p_i}
    for &(norm, p_i, q_i) in factors {
        if !(norm >= 0.0 && norm.is_finite()) {
            return Err(Error::InvalidParameter(format!("factor norm must be finite and nonnegative, got {norm}")));
        }
        let infinite = p_i == f64::INFINITY;
        let interior = p_i > 1.0 && p_i.is_finite() && q_i > 0.0;
        if !(interior || (infinite && q_i == f64::INFINITY)) {
            return Err(Error::InadmissiblePair(format!("({p_i}, {q_i})")));
        }
        if p_i.is_finite() {
            inv_p += 1.0 / p_i;
            p_pow *= p_i.powf(1.0 / p_i);
        }
        if q_i.is_finite() {
            inv_q += 1.0 / q_i;
        }
        prod *= norm;
    }
    let p = if inv_p > 0.0 { 1.0 / inv_p } else { f64::INFINITY };
    let q = if inv_q > 0.0 { 1.0 / inv_q } else { f64::INFINITY };
    let bound = if q.is_finite() {
        m.powf(1.0 / p) * prod
    } else if p.is_finite() {
        p.powf(-1.0 / p) * p_pow * prod
    } else {
        prod
    };
    Ok(HolderBound { p, q, bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{level_measure, Grid};

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

    fn unit_indicator() -> GridFunction {
        let grid = Grid::line(-2.0, 0.25, 16).unwrap();
        GridFunction::from_fn(grid, |x| if (0.0..1.0).contains(&x[0]) { 1.0 } else { 0.0 }).unwrap()
    }

    #[test]
    fn staircase_profile() {
        let f = staircase();
        let prof = decreasing_rearrangement(&f, None).unwrap();
        assert_eq!(prof.levels(), &[2.0, 1.0]);
        assert_eq!(prof.breakpoints(), &[1.0, 3.0]);
        assert_eq!(prof.eval(0.5), 2.0);
        assert_eq!(prof.eval(2.0), 1.0);
        assert_eq!(prof.eval(3.0), 0.0);
    }

    #[test]
    fn rearrangement_preserves_distribution() {
        let f = staircase();
        let prof = decreasing_rearrangement(&f, None).unwrap();
        for k in 0..30 {
            let s = 0.1 * k as f64;
            let lhs = prof.level_measure(s);
            let rhs = level_measure(&f, s, None).unwrap();
            assert!((lhs - rhs).abs() < 1e-12, "s={s}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn weighted_rearrangement_counts_weighted_mass() {
        let f = staircase();
        let w = f.map(|_| 3.0);
        let prof = decreasing_rearrangement(&f, Some(&w)).unwrap();
        assert_eq!(prof.breakpoints(), &[3.0, 9.0]);
        let wn = f.map(|_| -1.0);
        assert!(decreasing_rearrangement(&f, Some(&wn)).is_err());
    }

    #[test]
    fn indicator_norms_match_closed_forms() {
        // χ of a set of measure 1: ‖χ‖_{p,q} = (p/q)^{1/q}.
        let f = unit_indicator();
        let n21 = lorentz_norm(&f, 2.0, 1.0, None).unwrap();
        assert!((n21 - 2.0).abs() < 1e-12);
        let n22 = lorentz_norm(&f, 2.0, 2.0, None).unwrap();
        assert!((n22 - 1.0).abs() < 1e-12);
        let nw = lorentz_norm(&f, 2.0, f64::INFINITY, None).unwrap();
        assert!((nw - 1.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_pair_recovers_lebesgue() {
        let f = staircase();
        let h = f.grid().cell_measure();
        for p in [1.0, 2.0, 3.5] {
            let direct: f64 = f.values().iter().map(|v| v.abs().powf(p) * h).sum::<f64>().powf(1.0 / p);
            let viaprof = lorentz_norm(&f, p, p, None).unwrap();
            assert!((direct - viaprof).abs() < 1e-12 * (1.0 + direct), "p={p}");
        }
    }

    #[test]
    fn weak_norm_at_plateau_edges() {
        let f = staircase();
        // sup t·f*(t) = max(1·2, 3·1) = 3.
        let n = lorentz_norm(&f, 1.0, f64::INFINITY, None).unwrap();
        assert!((n - 3.0).abs() < 1e-12);
    }

    #[test]
    fn ess_sup_norm() {
        let f = staircase();
        assert_eq!(lorentz_norm(&f, f64::INFINITY, f64::INFINITY, None).unwrap(), 2.0);
        let zero = f.map(|_| 0.0);
        assert_eq!(lorentz_norm(&zero, 2.0, 1.0, None).unwrap(), 0.0);
    }

    #[test]
    fn infinite_p_finite_q_rejected() {
        let f = staircase();
        assert!(matches!(
            lorentz_norm(&f, f64::INFINITY, 1.0, None),
            Err(Error::InadmissiblePair(_))
        ));
        assert!(lorentz_norm(&f, 0.0, 1.0, None).is_err());
        assert!(lorentz_norm(&f, 2.0, -1.0, None).is_err());
    }

    #[test]
    fn norm_is_homogeneous() {
        let f = staircase();
        for (p, q) in [(2.0, 1.0), (1.5, 3.0), (2.0, f64::INFINITY)] {
            let a = lorentz_norm(&f.scale(-2.5), p, q, None).unwrap();
            let b = 2.5 * lorentz_norm(&f, p, q, None).unwrap();
            assert!((a - b).abs() < 1e-12 * (1.0 + b), "(p,q)=({p},{q})");
        }
    }

    #[test]
    fn weak_strong_comparison_constant() {
        // ‖f‖_{p,∞} ≤ (q/p)^{1/q} ‖f‖_{p,q}.
        let f = staircase();
        for (p, q) in [(2.0, 1.0), (2.0, 2.0), (3.0, 2.0)] {
            let weak = lorentz_norm(&f, p, f64::INFINITY, None).unwrap();
            let strong = lorentz_norm(&f, p, q, None).unwrap();
            assert!(weak <= (q / p).powf(1.0 / q) * strong * (1.0 + 1e-12));
        }
    }

    #[test]
    fn holder_bound_three_regimes() {
        // (1,2,2) x (1,2,2) -> p=1, q=1, bound m^{1/p} = 2.
        let b = lorentz_holder_bound(&[(1.0, 2.0, 2.0), (1.0, 2.0, 2.0)]).unwrap();
        assert_eq!((b.p, b.q), (1.0, 1.0));
        assert!((b.bound - 2.0).abs() < 1e-12);
        // Two sup-norm factors multiply with constant 1.
        let inf = f64::INFINITY;
        let b = lorentz_holder_bound(&[(3.0, inf, inf), (0.5, inf, inf)]).unwrap();
        assert_eq!((b.p, b.q), (inf, inf));
        assert!((b.bound - 1.5).abs() < 1e-12);
        // (1,2,∞) x (1,2,∞) -> (1, ∞), bound 1^{-1}·2^{1/2}·2^{1/2} = 2.
        let b = lorentz_holder_bound(&[(1.0, 2.0, inf), (1.0, 2.0, inf)]).unwrap();
        assert_eq!((b.p, b.q), (1.0, inf));
        assert!((b.bound - 2.0).abs() < 1e-12);
    }

    #[test]
    fn holder_bound_rejects_bad_pairs() {
        assert!(lorentz_holder_bound(&[(1.0, 1.0, 1.0)]).is_err()); // p_i = 1 excluded
        assert!(lorentz_holder_bound(&[(1.0, f64::INFINITY, 2.0)]).is_err());
        assert!(lorentz_holder_bound(&[]).is_err());
    }

    #[test]
    fn holder_bound_verified_on_grid_functions() {
        // Pointwise products on a shared grid never beat the bound.
        let grid = Grid::line(0.0, 0.125, 32).unwrap();
        let f = GridFunction::from_fn(grid.clone(), |x| (1.0 + x[0]).recip()).unwrap();
        let g = GridFunction::from_fn(grid, |x| if x[0] < 2.0 { 1.5 } else { 0.25 }).unwrap();
        let cases = [(2.0, 2.0, 2.0, 2.0), (2.0, 1.0, 2.0, 2.0), (3.0, f64::INFINITY, 1.5, f64::INFINITY)];
        for (p1, q1, p2, q2) in cases {
            let n1 = lorentz_norm(&f, p1, q1, None).unwrap();
            let n2 = lorentz_norm(&g, p2, q2, None).unwrap();
            let b = lorentz_holder_bound(&[(n1, p1, q1), (n2, p2, q2)]).unwrap();
            let prod_norm = lorentz_norm(&f.mul(&g).unwrap(), b.p, b.q, None).unwrap();
            assert!(
                prod_norm <= b.bound * (1.0 + 1e-12),
                "(p1,q1,p2,q2)=({p1},{q1},{p2},{q2}): {prod_norm} > {}",
                b.bound
            );
        }
    }
}
