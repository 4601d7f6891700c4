use approx::assert_abs_diff_eq;
use syncgrid::powerflow::contingency::{apply_trips, ramped_case, simulate_loading};
use syncgrid::powerflow::scenario::scenario_batch;
use syncgrid::powerflow::*;
use syncgrid::sync::sync_margin;
use syncgrid::SyncError;

#[test]
fn nine_bus_dc_equals_margin() {
    let m = build_oscillator_model(&bundled_case("case9").unwrap(), false).unwrap();
    assert_eq!(m.graph().n(), 9);
    assert_eq!(m.graph().edge_count(), 9);
    let dc = dc_power_flow(&m).unwrap();
    let margin = sync_margin(m.graph(), m.omega()).unwrap().margin;
    assert_abs_diff_eq!(dc.max_angle_diff, margin, epsilon = 1e-10);
    assert_eq!(dc.delta[0], 0.0);
}

#[test]
fn nine_bus_ac_close_to_prediction() {
    let m = build_oscillator_model(&bundled_case("case9").unwrap(), false).unwrap();
    let margin = sync_margin(m.graph(), m.omega()).unwrap().margin;
    let AcFlow::Converged(sol) = ac_power_flow(&m).unwrap() else { panic!("AC flow failed") };
    let gap = sol.cohesiveness - margin.asin();
    assert!(gap.abs() <= 5e-3, "{gap}");
    assert!(sol.stable);
}

#[test]
fn matpower_and_json_agree() {
    let mp = bundled_case("case9").unwrap();
    let json = serde_json::to_string(&mp).unwrap();
    let back = parse_case(&json).unwrap();
    assert_eq!(back.buses, mp.buses);
    assert_eq!(back.branches, mp.branches);
    assert_eq!(back.generators, mp.generators);
}

#[test]
fn matpower_errors_carry_positions() {
    let text = "mpc.baseMVA = 100;\nmpc.bus = [\n 1 3 0 0 0 0 1 1 0;\n 2 1 x 0 0 0 1 1 0;\n];\n";
    match parse_matpower(text) {
        Err(SyncError::Parse { line, .. }) => assert_eq!(line, 4),
        other => panic!("unexpected {other:?}"),
    }
    assert!(parse_case("{\"buses\": 3}").is_err());
}

#[test]
fn lossy_branches_are_noted() {
    let m = build_oscillator_model(&bundled_case("case9").unwrap(), false).unwrap();
    assert!(m.approximations.iter().any(|a| a.contains("resistance")));
    assert!(matches!(build_oscillator_model(&bundled_case("case9").unwrap(), true), Err(SyncError::NonLosslessCase(_))));
}

#[test]
fn islanding_is_detected() {
    // bus 1 hangs off bus 4 alone
    let case = bundled_case("case9").unwrap();
    let err = contingency_scan(&case, &[Trip::Branch { from: 1, to: 4 }], None, &[0.0]).unwrap_err();
    assert_eq!(err, SyncError::IslandingDetected);
}

#[test]
fn scan_is_affine_in_loading() {
    let case = bundled_case("rts96").unwrap();
    let trips = [Trip::Gen { bus: 323 }];
    let loadings = [0.0, 0.1, 0.25, 0.4];
    let scan = contingency_scan(&case, &trips, Some("southeast"), &loadings).unwrap();
    let tripped = apply_trips(&case, &trips).unwrap();
    for p in &scan.points {
        let m = build_oscillator_model(&ramped_case(&tripped, "southeast", p.loading).unwrap(), false).unwrap();
        let direct = sync_margin(m.graph(), m.omega()).unwrap().margin;
        assert_abs_diff_eq!(p.margin, direct, epsilon = 1e-10);
    }
    let first = scan.predicted_limit_loading.unwrap();
    let line = scan.lines.iter().find(|l| Some((l.from, l.to)) == scan.limiting_line).unwrap();
    assert_eq!(line.loading_at_limit, Some(first));
    assert!(scan.lines.iter().filter_map(|l| l.loading_at_limit).all(|v| v >= first));
}

#[test]
fn ramp_keeps_balance() {
    let case = bundled_case("rts96").unwrap();
    let before: f64 = case.injections_mw().iter().sum();
    let after: f64 = ramped_case(&case, "southeast", 0.5).unwrap().injections_mw().iter().sum();
    assert_abs_diff_eq!(before, after, epsilon = 1e-8);
    assert!(ramped_case(&case, "north", 0.5).is_err());
}

#[test]
fn nominal_rts_synchronizes_in_simulation() {
    let case = bundled_case("rts96").unwrap();
    let d = simulate_loading(&case, &[], None, 0.0, 10.0, 1e-3).unwrap();
    assert!(d.freq_synced && d.cohesive);
}

#[test]
fn scenarios_are_reproducible() {
    let case = bundled_case("case9").unwrap();
    let cfg = ScenarioConfig { seed: 4, ..Default::default() };
    let a = scenario_batch(&case, &cfg, 8).unwrap();
    let b = scenario_batch(&case, &cfg, 8).unwrap();
    assert_eq!(a, b);
    for o in &a {
        if let (Some(p), Some(r)) = (o.predicted, o.realized) {
            assert!((r - p).abs() < 0.05);
        }
    }
}

#[test]
fn unknown_bundled_case() {
    assert!(bundled_case("case14").is_err());
}
