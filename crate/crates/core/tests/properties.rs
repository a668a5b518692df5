//! Randomized structural invariants: norm axioms, classical pointwise
//! comparisons, and lossless serialization, checked over generated inputs.

use proptest::prelude::*;
use sparsedom_core::maximal::{hl_maximal, CubeFamily, CubeFamilySpec};
use sparsedom_core::spaces::{lorentz_norm_of, SpaceDescriptor};
use sparsedom_core::{Grid, GridFunction};

const CELLS: usize = 32;

fn line_grid() -> Grid {
    Grid::line(0.0, 1.0 / CELLS as f64, CELLS).unwrap()
}

fn function(values: Vec<f64>) -> GridFunction {
    GridFunction::new(line_grid(), values).unwrap()
}

fn values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, CELLS)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lebesgue_norm_is_absolutely_homogeneous(
        vals in values(),
        c in -4.0f64..4.0,
        p in 1.0f64..5.0,
    ) {
        let f = function(vals);
        let space = SpaceDescriptor::lebesgue(p).unwrap();
        let lhs = space.norm(&f.scale(c)).unwrap();
        let rhs = c.abs() * space.norm(&f).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs.max(1.0), "{lhs} vs {rhs}");
    }

    #[test]
    fn lebesgue_norms_satisfy_the_triangle_inequality(
        a in values(),
        b in values(),
        p in 1.0f64..5.0,
    ) {
        let f = function(a);
        let g = function(b);
        let space = SpaceDescriptor::lebesgue(p).unwrap();
        let lhs = space.norm(&f.add(&g).unwrap()).unwrap();
        let rhs = space.norm(&f).unwrap() + space.norm(&g).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-9), "{lhs} > {rhs}");
    }

    #[test]
    fn diagonal_lorentz_norms_match_lebesgue_norms(
        vals in values(),
        p in 1.0f64..5.0,
    ) {
        let f = function(vals);
        let lhs = lorentz_norm_of(&f, p, p).unwrap();
        let rhs = SpaceDescriptor::lebesgue(p).unwrap().norm(&f).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs.max(1.0), "{lhs} vs {rhs}");
    }

    #[test]
    fn holder_bounds_the_product_norm(
        a in values(),
        b in values(),
        p in 1.1f64..4.0,
    ) {
        let f = function(a);
        let g = function(b);
        let q = p / (p - 1.0);
        let product = GridFunction::new(
            f.grid().clone(),
            f.values().iter().zip(g.values()).map(|(x, y)| x * y).collect(),
        )
        .unwrap();
        let lhs = SpaceDescriptor::lebesgue(1.0).unwrap().norm(&product).unwrap();
        let rhs = SpaceDescriptor::lebesgue(p).unwrap().norm(&f).unwrap()
            * SpaceDescriptor::lebesgue(q).unwrap().norm(&g).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-9), "{lhs} > {rhs}");
    }

    #[test]
    fn maximal_function_dominates_and_is_sublinear(
        a in values(),
        b in values(),
    ) {
        let f = function(a);
        let g = function(b);
        let family = CubeFamily::build(f.grid(), CubeFamilySpec::DyadicShifted).unwrap();
        let mf = hl_maximal(&f, &family).unwrap();
        let mg = hl_maximal(&g, &family).unwrap();
        let msum = hl_maximal(&f.add(&g).unwrap(), &family).unwrap();
        for i in 0..CELLS {
            let x = f.values()[i].abs();
            prop_assert!(mf.values()[i] >= x * (1.0 - 1e-12), "domination fails at {i}");
            let split = mf.values()[i] + mg.values()[i];
            prop_assert!(msum.values()[i] <= split * (1.0 + 1e-9), "sublinearity fails at {i}");
        }
    }

    #[test]
    fn json_round_trips_preserve_every_bit(
        bits in prop::collection::vec(any::<u64>(), 16),
    ) {
        let vals: Vec<f64> = bits
            .iter()
            .map(|&w| {
                let x = f64::from_bits(w);
                if x.is_finite() { x } else { 0.0 }
            })
            .collect();
        let grid = Grid::line(-1.0, 0.125, 16).unwrap();
        let f = GridFunction::new(grid, vals).unwrap();
        let text = serde_json::to_string(&f).unwrap();
        let back: GridFunction = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(f.grid(), back.grid());
        for (x, y) in f.values().iter().zip(back.values()) {
            prop_assert_eq!(x.to_bits(), y.to_bits(), "{} reparsed as {}", x, y);
        }
    }
}
