use rivalnet::dynamics::{DynamicsParams, NodeStreams, SimulationState};
use rivalnet::meanfield::p_star;
use rivalnet::protocols::{mean_se, replicate_network};
use rivalnet::topology::GeneratorConfig;

/// Long-run inactive fraction with p2 = 0 against the restart-spell law
/// 1 - (1 - p1)^tau.
#[test]
fn decoupled_occupancy() {
    let config = GeneratorConfig {
        nodes_s: 400,
        nodes_w: 400,
        ..GeneratorConfig::default()
    };
    for (p1, tau) in [(0.002, 50u32), (0.01, 20)] {
        let params = DynamicsParams {
            p1_s: p1,
            p1_w: p1,
            tau,
            ..DynamicsParams::default()
        };
        let net = replicate_network(&config, 17, 0).unwrap();
        let mut streams = NodeStreams::new(17, 0, net.len());
        let mut state = SimulationState::new(net, &params);
        let mut samples = Vec::new();
        for t in 0..20_000 {
            state.step(&params, &mut streams);
            if t >= 500 {
                let (fs, fw) = state.measure_fractions();
                samples.push(1.0 - (fs + fw) / 2.0);
            }
        }
        let (mean, _) = mean_se(&samples);
        let exact = 1.0 - (1.0 - p1).powi(tau as i32);
        assert!((mean / exact - 1.0).abs() < 0.03, "p1 {p1}: {mean} vs {exact}");
        // the exponential law is within a percent of the exact one here
        assert!((p_star(p1, tau as f64) / exact - 1.0).abs() < 0.01);
    }
}

/// With certain external failure every node next to a failed node fails
/// on the following step, so the S-network's active fraction can only
/// stay at 1 while no internal failure has happened.
#[test]
fn external_failures_follow_internal_ones() {
    let net = replicate_network(&GeneratorConfig { nodes_s: 200, nodes_w: 200, ..GeneratorConfig::default() }, 3, 0).unwrap();
    let params = DynamicsParams {
        p1_s: 0.0,
        p1_w: 0.0,
        p2: 1.0,
        ..DynamicsParams::default()
    };
    let mut streams = NodeStreams::new(3, 0, net.len());
    let mut state = SimulationState::new(net, &params);
    for _ in 0..200 {
        state.step(&params, &mut streams);
        assert_eq!(state.measure_fractions(), (1.0, 1.0));
    }
}
