mod common;

use proptest::prelude::*;
use syncgrid::equilibrium::{kuramoto_rhs, wrap_angle};
use syncgrid::experiments::report::fmt_g;
use syncgrid::graph::build_laplacian;
use syncgrid::sync::{acyclic_equilibrium, min_infinity_norm_solution, spectral_margin, sync_margin};
use syncgrid::WeightedGraph;

fn network() -> impl Strategy<Value = (WeightedGraph, Vec<f64>)> {
    (2usize..25, 0.0f64..0.6, any::<u64>()).prop_map(|(n, p, seed)| {
        let mut rng = common::rng(seed);
        let g = common::connected_graph(&mut rng, n, p);
        let w = common::frequencies(&mut rng, n, 1.0);
        (g, w)
    })
}

fn tree_network() -> impl Strategy<Value = (WeightedGraph, Vec<f64>)> {
    (2usize..20, any::<u64>()).prop_map(|(n, seed)| {
        let mut rng = common::rng(seed);
        let g = common::tree(&mut rng, n);
        let w = common::frequencies(&mut rng, n, 1.0);
        (g, w)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn laplacian_is_psd_with_zero_row_sums((g, _w) in network()) {
        let l = g.laplacian();
        for r in 0..g.n() {
            prop_assert!(l.row(r).sum().abs() < 1e-12);
        }
        let b = build_laplacian(&g).unwrap();
        prop_assert!(b.eigenvalues.iter().all(|v| *v >= -b.zero_tolerance()));
    }

    #[test]
    fn spectral_margin_agrees((g, w) in network()) {
        let direct = sync_margin(&g, &w).unwrap().margin;
        let spec = spectral_margin(&build_laplacian(&g).unwrap(), &g, &w).unwrap();
        prop_assert!((direct - spec).abs() <= 1e-10 * (1.0 + direct));
    }

    #[test]
    fn margin_scales_inversely_with_coupling((g, w) in network(), k in 0.1f64..10.0, c in 0.1f64..10.0) {
        let base = sync_margin(&g, &w).unwrap().margin;
        let scaled = sync_margin(&g.scaled(k).unwrap(), &w).unwrap().margin;
        prop_assert!((scaled * k - base).abs() <= 1e-9 * (1.0 + base));
        let wc: Vec<f64> = w.iter().map(|v| v * c).collect();
        prop_assert!((sync_margin(&g, &wc).unwrap().margin - c * base).abs() <= 1e-9 * (1.0 + c * base));
    }

    #[test]
    fn min_norm_never_exceeds_margin((g, w) in network()) {
        let m = sync_margin(&g, &w).unwrap().margin;
        let sol = min_infinity_norm_solution(&g, &w).unwrap();
        prop_assert!(sol.norm <= m + 1e-9);
    }

    #[test]
    fn dynamics_are_gauge_invariant((g, w) in network(), shift in -10.0f64..10.0) {
        let theta: Vec<f64> = (0..g.n()).map(|i| (i as f64 * 0.37).sin()).collect();
        let moved: Vec<f64> = theta.iter().map(|t| t + shift).collect();
        prop_assert!(common::max_abs_diff(&kuramoto_rhs(&g, &w, &theta), &kuramoto_rhs(&g, &w, &moved)) < 1e-9);
    }

    #[test]
    fn trees_are_feasible_exactly_below_the_margin((g, w) in tree_network(), gamma in 0.05f64..1.5) {
        let m = sync_margin(&g, &w).unwrap().margin;
        let feasible = acyclic_equilibrium(&g, &w, gamma).unwrap().is_feasible();
        if m < gamma.sin() * (1.0 - 1e-9) {
            prop_assert!(feasible);
        } else if m > gamma.sin() * (1.0 + 1e-9) {
            prop_assert!(!feasible);
        }
    }

    #[test]
    fn wrapped_angles_are_in_range(x in -1e4f64..1e4) {
        let y = wrap_angle(x);
        prop_assert!(y > -std::f64::consts::PI && y <= std::f64::consts::PI);
        prop_assert!(((x - y) / std::f64::consts::TAU - ((x - y) / std::f64::consts::TAU).round()).abs() < 1e-9);
    }

    #[test]
    fn g_format_round_trips(x in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
        let s = fmt_g(x);
        let back: f64 = s.parse().unwrap();
        prop_assert!((back - x).abs() <= 1e-11 * x.abs());
        prop_assert!(s.len() <= 19);
    }
}
