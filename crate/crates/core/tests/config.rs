use proptest::prelude::*;
use rivalnet::config::{parse_config, ErSection, ExperimentConfig, Grid, Protocol, SegmentSection};
use rivalnet::dynamics::Mechanism;
use rivalnet::topology::TopologyKind;
use rivalnet::ConfigError;

fn base(protocol: Protocol) -> ExperimentConfig {
    let text = format!("protocol = \"{}\"\nseed = 1\n", protocol.name());
    match protocol {
        Protocol::Timeseries | Protocol::EarlyWarning => parse_config(&text).unwrap(),
        _ => {
            let mut cfg: ExperimentConfig = toml::from_str(&text).unwrap();
            let g = Some(Grid {
                start: 0.0,
                stop: 0.01,
                points: 3,
            });
            cfg.hysteresis.grid = g;
            cfg.phase_diagram.p1 = g;
            cfg.phase_diagram.p2 = g;
            cfg.meanfield.grid = g;
            cfg.sweep.n = Some(vec![1.0, 2.0]);
            cfg
        }
    }
}

fn protocol() -> impl Strategy<Value = Protocol> {
    prop_oneof![
        Just(Protocol::Timeseries),
        Just(Protocol::HysteresisSim),
        Just(Protocol::PhaseDiagram),
        Just(Protocol::MeanfieldTrace),
        Just(Protocol::TakeoverSweep),
        Just(Protocol::EarlyWarning),
    ]
}

prop_compose! {
    fn valid_config()(
        protocol in protocol(),
        seed in 0u64..(i64::MAX as u64),
        replicates in 1u64..50,
        kind in prop_oneof![Just(TopologyKind::Ba), Just(TopologyKind::Er), Just(TopologyKind::ErAssortative)],
        nodes in 10usize..2000,
        m in 1usize..4,
        p1 in 0.0f64..1.0,
        p2 in 0.0f64..1.0,
        tau in 1u32..200,
        t_s in 0.0f64..0.5,
        t_gap in 0.0f64..0.5,
        dual in any::<bool>(),
        t_x in 0.0f64..1.0,
        n in 0.01f64..20.0,
        mech in 0usize..3,
        cost in any::<bool>(),
        segs in prop::collection::vec((1u64..100, 0.0f64..1.0), 0..4),
        dwell in 1u64..2000,
        damping in 0.01f64..1.0,
        tol in 1e-14f64..1e-3,
        delta_t in 1usize..40,
    ) -> ExperimentConfig {
        let mut c = base(protocol);
        c.seed = seed;
        c.replicates = replicates;
        c.network.kind = kind;
        c.network.nodes_s = nodes;
        c.network.nodes_w = nodes + 7;
        c.network.m_s = m;
        c.network.m_sw = m;
        if kind == TopologyKind::Er && seed % 2 == 0 {
            c.network.er = ErSection::Probability { intra_s: p1, intra_w: p2, inter: 0.01 };
        }
        c.dynamics.p1_s = p1;
        c.dynamics.p1_w = p1 / 2.0;
        c.dynamics.p2 = p2;
        c.dynamics.tau = tau;
        c.dynamics.t_s = t_s;
        c.dynamics.t_w = t_s + t_gap;
        c.dynamics.n = n;
        c.dynamics.cost = cost;
        c.dynamics.mechanism = [Mechanism::None, Mechanism::Takeover, Mechanism::Substitution][mech];
        if dual || mech == 2 {
            c.dynamics.t_ws = Some(t_x);
            c.dynamics.t_sw = Some(1.0 - t_x);
        }
        let mut at = 0;
        c.schedule.segments = segs
            .iter()
            .map(|&(len, p)| {
                let s = SegmentSection { start: at, end: at + len, p1_s: p, p1_w: p / 3.0 };
                at += len;
                s
            })
            .collect();
        c.schedule.horizon = at + 100;
        c.hysteresis.dwell = dwell;
        c.meanfield.damping = damping;
        c.meanfield.tolerance = tol;
        c.early_warning.delta_t = delta_t;
        c
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn parse_serialize_parse_is_identity(cfg in valid_config()) {
        cfg.validate().unwrap();
        let text = cfg.to_toml();
        let parsed = parse_config(&text).unwrap();
        prop_assert_eq!(&parsed, &cfg);
        prop_assert_eq!(parsed.to_toml(), text);
    }
}

#[test]
fn missing_required_fields_are_named() {
    assert_eq!(
        parse_config("protocol = \"timeseries\"\n").unwrap_err(),
        ConfigError::Missing("seed".into())
    );
    assert_eq!(
        parse_config("protocol = \"phase-diagram\"\nseed = 1\n[phase_diagram]\np1 = { start = 0.0, stop = 0.1, points = 3 }\n")
            .unwrap_err(),
        ConfigError::Missing("phase_diagram.p2".into())
    );
    assert_eq!(
        parse_config("protocol = \"timeseries\"\nseed = 1\n[dynamics]\nt_ws = 0.4\n").unwrap_err(),
        ConfigError::Missing("dynamics.t_sw".into())
    );
}

#[test]
fn nested_range_errors() {
    let err = parse_config(
        "protocol = \"meanfield-trace\"\nseed = 1\n[meanfield]\ngrid = { start = 0.0, stop = 1.5, points = 4 }\n",
    )
    .unwrap_err();
    assert!(
        matches!(&err, ConfigError::OutOfRange { field, value, .. } if field == "meanfield.grid" && value == "1.5"),
        "{err:?}"
    );
    let err = parse_config("protocol = \"timeseries\"\nseed = 1\n[dynamics]\nt_s = 0.8\nt_w = 0.7\n").unwrap_err();
    assert!(matches!(&err, ConfigError::OutOfRange { field, .. } if field == "dynamics.t_s"), "{err:?}");
    let err = parse_config("protocol = \"timeseries\"\nseed = 1\n[meanfield]\ncontrol = \"x\"\n").unwrap_err();
    assert!(matches!(&err, ConfigError::OutOfRange { field, .. } if field == "meanfield.control"), "{err:?}");
}

#[test]
fn shipped_configs_parse() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/configs");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        parse_config(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        n += 1;
    }
    assert_eq!(n, 9);
}
