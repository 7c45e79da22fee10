use super::*;
use crate::dynamics::Mechanism;
use crate::meanfield::p_star;
use proptest::prelude::*;

fn small_config() -> GeneratorConfig {
    GeneratorConfig {
        nodes_s: 150,
        nodes_w: 150,
        ..GeneratorConfig::default()
    }
}

fn point(control: f64, f_s: f64, f_w: f64) -> CurvePoint {
    CurvePoint {
        control,
        a_s: 1.0 - f_s,
        a_w: 1.0 - f_w,
        converged: true,
        residual: f64::NAN,
        iterations: 0,
    }
}

#[test]
fn schedule_lookup_and_validation() {
    let s = AttackSchedule {
        baseline: (0.001, 0.001),
        segments: vec![
            Segment { start: 10, end: 20, p1_s: 0.01, p1_w: 0.001 },
            Segment { start: 20, end: 30, p1_s: 0.02, p1_w: 0.001 },
        ],
    };
    assert!(s.validate().is_ok());
    assert_eq!(s.p1_at(0), (0.001, 0.001));
    assert_eq!(s.p1_at(10), (0.01, 0.001));
    assert_eq!(s.p1_at(29), (0.02, 0.001));
    assert_eq!(s.p1_at(30), (0.001, 0.001));

    let mut gap = s.clone();
    gap.segments[1].start = 21;
    assert!(gap.validate().is_err());
    let mut bad = s.clone();
    bad.segments[0].p1_s = 2.0;
    assert!(bad.validate().is_err());
}

#[test]
fn empty_horizon() {
    let net = replicate_network(&small_config(), 1, 0).unwrap();
    let ts = run_timeseries(net, &DynamicsParams::default(), &AttackSchedule::constant(0.0, 0.0), 0, 1, 0).unwrap();
    assert!(ts.records.is_empty());
}

#[test]
fn timeseries_is_deterministic() {
    let params = DynamicsParams {
        p2: 0.5,
        mechanism: Mechanism::Takeover,
        n: 1.0,
        cost_enabled: true,
        ..DynamicsParams::default()
    };
    let schedule = AttackSchedule::constant(0.003, 0.003);
    let a = run_timeseries_replicates(&small_config(), &params, &schedule, 300, 9, 2).unwrap();
    let b = run_timeseries_replicates(&small_config(), &params, &schedule, 300, 9, 2).unwrap();
    assert_eq!(a, b);
    assert_ne!(a[0].records, a[1].records);
    assert_eq!(a[0].records.len(), 300);
    assert!(a[0].records.windows(2).all(|w| w[1].t == w[0].t + 1));
    assert!(a[0].records.windows(2).all(|w| w[1].threshold_s >= w[0].threshold_s));
}

#[test]
fn decoupled_hysteresis_follows_occupancy() {
    // without external failures both branches sit on 1 - p*(p1)
    let params = DynamicsParams {
        tau: 20,
        ..DynamicsParams::default()
    };
    let net = replicate_network(&small_config(), 3, 0).unwrap();
    let grid = [0.0, 0.002, 0.005];
    let curve = run_hysteresis_sim(net, &params, &grid, 2000, 3, 0).unwrap();
    for p in curve.ascending.iter().chain(&curve.descending) {
        let expect = 1.0 - p_star(p.control, 20.0);
        assert!((p.f_s() - expect).abs() < 0.02, "{p:?}");
        assert!((p.f_w() - expect).abs() < 0.02, "{p:?}");
    }
    assert_eq!(curve.descending[0].control, 0.005);
}

#[test]
fn phase_diagram_trivial_cells() {
    let params = DynamicsParams {
        tau: 20,
        ..DynamicsParams::default()
    };
    let pd = run_phase_diagram(&small_config(), &params, &[0.0, 0.004], &[0.0, 0.05], 2, 400, 4).unwrap();
    assert_eq!(pd.cells.len(), 8);
    // p1 = 0, p2 small, active start: nothing ever fails
    let c = pd.cell(0, 1, Sheet::ActiveStart);
    assert_eq!((c.f_s_mean, c.f_w_mean), (1.0, 1.0));
    // p2 = 0 column: both sheets relax onto the occupancy level
    for sheet in [Sheet::ActiveStart, Sheet::FailedStart] {
        let c = pd.cell(1, 0, sheet);
        let expect = 1.0 - p_star(0.004, 20.0);
        assert!((c.f_s_mean - expect).abs() < 0.03, "{c:?}");
        assert_eq!(c.sheet, sheet);
    }
    let again = run_phase_diagram(&small_config(), &params, &[0.0, 0.004], &[0.0, 0.05], 2, 400, 4).unwrap();
    assert_eq!(pd, again);
}

#[test]
fn constant_series_has_flat_indicator() {
    let ew = early_warning(&[0.8; 50], &[0.4; 50], 20).unwrap();
    assert_eq!(ew.indicator.len(), 30);
    assert!(ew.indicator.iter().all(|v| *v == Some(0.0)));
    assert_eq!(ew.stop_time, Some(0));
    assert!(early_warning(&[1.0; 20], &[1.0; 20], 20).is_err());
}

fn brute_argmax(f_s: &[f64], f_w: &[f64], dt: usize) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for t in 0..f_s.len() - dt {
        if f_w[t] == 0.0 || f_w[t + dt] == 0.0 {
            continue;
        }
        let v = f_s[t + dt] / f_w[t + dt] - f_s[t] / f_w[t];
        if best.map_or(true, |(_, b)| v > b) {
            best = Some((t, v));
        }
    }
    best.map(|b| b.0)
}

#[test]
fn linear_decline_argmax() {
    let f_w: Vec<f64> = (0..100).map(|t| if t < 50 { 1.0 - 0.01 * t as f64 } else { 0.5 }).collect();
    let f_s = vec![1.0; 100];
    let ew = early_warning(&f_s, &f_w, 20).unwrap();
    // the ratio 1/f_W is convex while f_W falls, so the largest 20-step
    // gain is the window that ends where the decline stops
    assert_eq!(ew.stop_time, Some(30));
    assert_eq!(ew.stop_time, brute_argmax(&f_s, &f_w, 20));
}

#[test]
fn zero_weak_fraction_is_skipped() {
    let f_w = [0.5, 0.0, 0.0, 0.0];
    let ew = early_warning(&[1.0; 4], &f_w, 1).unwrap();
    assert_eq!(ew.skipped, 3);
    assert_eq!(ew.stop_time, None);
}

#[test]
fn collapse_estimates() {
    let curve: Vec<_> = [0.0001, 0.001, 0.0015, 0.002, 0.003]
        .iter()
        .map(|&c| point(c, 0.95, if c >= 0.002 { 0.1 } else { 0.9 }))
        .collect();
    let [s, w] = collapse_threshold_estimate(&curve, 0.0001, DEFAULT_COLLAPSE_FLOOR);
    assert!(s.open_ended());
    assert_eq!(w.p1c, Some(0.002));
    assert!((w.fluctuation.unwrap() - 0.0019).abs() < 1e-15);
}

#[test]
fn flip_detector() {
    let mut f = vec![1.0; 300];
    for (i, v) in f.iter_mut().enumerate().skip(150) {
        *v = (1.0 - 0.125 * (i - 149) as f64).max(0.0);
    }
    // 1.0 -> 0.5 completes four steps into the decline
    assert_eq!(detect_flip(&f, 0.4, 100), Some(153));
    assert_eq!(detect_flip(&f, 0.4, 3), None);
    assert_eq!(detect_flip(&[0.9; 50], 0.4, 100), None);
}

#[test]
fn sweep_with_unreachable_period_has_no_takeovers() {
    let params = DynamicsParams {
        p2: 0.5,
        mechanism: Mechanism::Takeover,
        cost_enabled: true,
        ..DynamicsParams::default()
    };
    let schedule = AttackSchedule::constant(0.004, 0.004);
    let sweep = takeover_sweep(&small_config(), &params, &schedule, &[1.0, 100.0], 2, 400, 5).unwrap();
    assert_eq!(sweep[1].takeover_mean, 0.0);
    assert_eq!(sweep[1].threshold_mean, 0.3);
    assert!(sweep[0].takeover_mean >= sweep[1].takeover_mean);
    let again = takeover_sweep(&small_config(), &params, &schedule, &[1.0, 100.0], 2, 400, 5).unwrap();
    assert_eq!(sweep, again);
}

#[test]
fn mean_se_values() {
    assert_eq!(mean_se(&[2.0]), (2.0, 0.0));
    let (m, se) = mean_se(&[1.0, 2.0, 3.0, 4.0]);
    assert_eq!(m, 2.5);
    assert!((se - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
}

proptest! {
    #[test]
    fn argmax_matches_scan(f_s in prop::collection::vec(0.0f64..1.2, 30..80),
                           seed in prop::collection::vec(0.0f64..1.0, 80),
                           dt in 1usize..25) {
        let f_w: Vec<f64> = seed[..f_s.len()].iter().map(|&v| if v < 0.1 { 0.0 } else { v }).collect();
        prop_assume!(f_s.len() > dt);
        let ew = early_warning(&f_s, &f_w, dt).unwrap();
        prop_assert_eq!(ew.stop_time, brute_argmax(&f_s, &f_w, dt));
    }

    #[test]
    fn collapse_floor_monotone(fw in prop::collection::vec(0.0f64..1.0, 2..30), lo in 0.0f64..1.0, gap in 0.0f64..1.0) {
        let curve: Vec<_> = fw.iter().enumerate().map(|(i, &f)| point(i as f64, 1.0, f)).collect();
        let hi = (lo + gap).min(1.0);
        let [_, low] = collapse_threshold_estimate(&curve, 0.0, lo);
        let [_, high] = collapse_threshold_estimate(&curve, 0.0, hi);
        let key = |c: Option<f64>| c.unwrap_or(f64::INFINITY);
        prop_assert!(key(low.p1c) >= key(high.p1c));
    }

    #[test]
    fn flip_matches_scan(f in prop::collection::vec(0.0f64..1.0, 1..120), window in 1usize..40) {
        let brute = (0..f.len()).find(|&t| (t.saturating_sub(window)..t).any(|s| f[s] - f[t] >= 0.4));
        prop_assert_eq!(detect_flip(&f, 0.4, window), brute);
    }
}
