//! Experiment configuration documents.
//!
//! A config is a TOML document. Top-level keys pick the protocol and the run
//! plumbing; each table configures one stage:
//!
//! ```toml
//! protocol = "timeseries"      # hysteresis-sim | phase-diagram | meanfield-trace
//!                              # | takeover-sweep | early-warning
//! seed = 7
//! replicates = 10
//!
//! [network]                    # kind, nodes_s, nodes_w, n0, m_s, m_w, m_sw
//! [network.er]                 # mode = "match-ba" | "edges" | "probability"
//! [network.regular]            # k_s, k_w, k_ws, k_sw
//! [dynamics]                   # p1_s, p1_w, p2, tau, t_s, t_w, t_ws, t_sw, n,
//!                              # mechanism, cost
//! [schedule]                   # horizon, [[schedule.segments]]
//! [hysteresis]                 # grid = { start, stop, points }, dwell
//! [phase_diagram]              # p1, p2 (grids), steps
//! [meanfield]                  # degrees, thresholds, control, grid, solver
//! [sweep]                      # n = [..]
//! [early_warning]              # delta_t, flip_drop, flip_window
//! ```
//!
//! Only `protocol` and `seed` are required, plus the grid the chosen
//! protocol sweeps. Parsing fills every other key with its default, and
//! [`ExperimentConfig::to_toml`] writes all of them back out, so a parsed
//! config has no hidden state.

use serde::{Deserialize, Serialize};

use crate::dynamics::{CrossThresholds, DynamicsParams, Mechanism};
use crate::error::ConfigError;
use crate::meanfield::{Control, MeanFieldSystem, SolverOptions};
use crate::protocols::{AttackSchedule, Segment};
use crate::topology::{ErDensity, GeneratorConfig, RegularDegrees, TopologyKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    Timeseries,
    HysteresisSim,
    PhaseDiagram,
    MeanfieldTrace,
    TakeoverSweep,
    EarlyWarning,
}

impl Protocol {
    pub fn name(self) -> &'static str {
        match self {
            Protocol::Timeseries => "timeseries",
            Protocol::HysteresisSim => "hysteresis-sim",
            Protocol::PhaseDiagram => "phase-diagram",
            Protocol::MeanfieldTrace => "meanfield-trace",
            Protocol::TakeoverSweep => "takeover-sweep",
            Protocol::EarlyWarning => "early-warning",
        }
    }
}

/// Inclusive, evenly spaced grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        let span = self.stop - self.start;
        let last = self.points - 1;
        (0..self.points)
            .map(|i| if i == last { self.stop } else { self.start + span * i as f64 / last as f64 })
            .collect()
    }

    fn check(&self, field: &str) -> Result<(), ConfigError> {
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return Err(range(format!("{field}.start"), self.start, "finite numbers"));
        }
        if self.points == 0 {
            return Err(range(format!("{field}.points"), self.points, ">= 1"));
        }
        if self.points > 1 && !(self.stop > self.start) {
            return Err(range(format!("{field}.stop"), self.stop, format!("> start = {}", self.start)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ErSection {
    MatchBa,
    Edges { intra_s: usize, intra_w: usize, inter: usize },
    Probability { intra_s: f64, intra_w: f64, inter: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegularSection {
    pub k_s: usize,
    pub k_w: usize,
    pub k_ws: usize,
    pub k_sw: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkSection {
    pub kind: TopologyKind,
    pub nodes_s: usize,
    pub nodes_w: usize,
    pub n0: usize,
    pub m_s: usize,
    pub m_w: usize,
    pub m_sw: usize,
    pub er: ErSection,
    pub regular: RegularSection,
}

impl Default for NetworkSection {
    fn default() -> Self {
        let g = GeneratorConfig::default();
        NetworkSection {
            kind: g.kind,
            nodes_s: g.nodes_s,
            nodes_w: g.nodes_w,
            n0: g.n0,
            m_s: g.m_s,
            m_w: g.m_w,
            m_sw: g.m_sw,
            er: ErSection::MatchBa,
            regular: RegularSection::default(),
        }
    }
}

impl Default for RegularSection {
    fn default() -> Self {
        let r = GeneratorConfig::default().regular;
        RegularSection {
            k_s: r.k_s,
            k_w: r.k_w,
            k_ws: r.k_ws,
            k_sw: r.k_sw,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsSection {
    pub p1_s: f64,
    pub p1_w: f64,
    pub p2: f64,
    pub tau: u32,
    pub t_s: f64,
    pub t_w: f64,
    /// Setting both cross thresholds switches to dual-threshold criticality.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_ws: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_sw: Option<f64>,
    pub n: f64,
    pub mechanism: Mechanism,
    pub cost: bool,
}

impl Default for DynamicsSection {
    fn default() -> Self {
        let d = DynamicsParams::default();
        DynamicsSection {
            p1_s: d.p1_s,
            p1_w: d.p1_w,
            p2: d.p2,
            tau: d.tau,
            t_s: d.t_s,
            t_w: d.t_w,
            t_ws: None,
            t_sw: None,
            n: d.n,
            mechanism: d.mechanism,
            cost: d.cost_enabled,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentSection {
    pub start: u64,
    pub end: u64,
    pub p1_s: f64,
    pub p1_w: f64,
}

/// Attack schedule. Steps outside every segment use `dynamics.p1_*`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleSection {
    pub horizon: u64,
    pub segments: Vec<SegmentSection>,
}

impl Default for ScheduleSection {
    fn default() -> Self {
        ScheduleSection {
            horizon: 10_000,
            segments: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HysteresisSection {
    /// `p1` grid, applied to both networks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<Grid>,
    pub dwell: u64,
}

impl Default for HysteresisSection {
    fn default() -> Self {
        HysteresisSection { grid: None, dwell: 500 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseDiagramSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p1: Option<Grid>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p2: Option<Grid>,
    pub steps: u64,
}

impl Default for PhaseDiagramSection {
    fn default() -> Self {
        PhaseDiagramSection {
            p1: None,
            p2: None,
            steps: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeanFieldSection {
    pub k_s: u32,
    pub k_w: u32,
    pub k_ws: u32,
    pub k_sw: u32,
    /// Absolute thresholds (active-neighbour counts).
    pub t_s: u32,
    pub t_w: u32,
    pub p2_s: f64,
    pub p2_w: f64,
    pub pstar_s: f64,
    pub pstar_w: f64,
    pub control: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<Grid>,
    pub damping: f64,
    pub tolerance: f64,
    pub max_iter: u64,
    pub jump_floor: f64,
}

impl Default for MeanFieldSection {
    fn default() -> Self {
        let opts = SolverOptions::default();
        MeanFieldSection {
            k_s: 20,
            k_w: 5,
            k_ws: 10,
            k_sw: 10,
            t_s: 10,
            t_w: 10,
            p2_s: 0.8,
            p2_w: 0.8,
            pstar_s: 0.0,
            pstar_w: 0.05,
            control: Control::PstarS.name().into(),
            grid: None,
            damping: opts.damping,
            tolerance: opts.tolerance,
            max_iter: opts.max_iter,
            jump_floor: crate::meanfield::DEFAULT_JUMP_FLOOR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    /// Acquisition multipliers; the period is `n * tau`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EarlyWarningSection {
    pub delta_t: usize,
    pub flip_drop: f64,
    pub flip_window: usize,
}

impl Default for EarlyWarningSection {
    fn default() -> Self {
        EarlyWarningSection {
            delta_t: crate::protocols::DEFAULT_WINDOW,
            flip_drop: crate::protocols::DEFAULT_FLIP_DROP,
            flip_window: crate::protocols::DEFAULT_FLIP_WINDOW,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub protocol: Protocol,
    pub seed: u64,
    #[serde(default = "default_replicates")]
    pub replicates: u64,
    /// Worker threads; 0 uses every available core.
    #[serde(default)]
    pub workers: usize,
    #[serde(default = "default_output")]
    pub output: String,
    #[serde(default)]
    pub network: NetworkSection,
    #[serde(default)]
    pub dynamics: DynamicsSection,
    #[serde(default)]
    pub schedule: ScheduleSection,
    #[serde(default)]
    pub hysteresis: HysteresisSection,
    #[serde(default)]
    pub phase_diagram: PhaseDiagramSection,
    #[serde(default)]
    pub meanfield: MeanFieldSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub early_warning: EarlyWarningSection,
}

fn default_replicates() -> u64 {
    1
}

fn default_output() -> String {
    "out.csv".into()
}

fn range(field: impl Into<String>, value: impl ToString, legal: impl Into<String>) -> ConfigError {
    ConfigError::OutOfRange {
        field: field.into(),
        value: value.to_string(),
        range: legal.into(),
    }
}

fn unit(field: &str, value: f64) -> Result<(), ConfigError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(range(field, value, "[0, 1]"))
    }
}

fn at_least(field: &str, value: u64, min: u64) -> Result<(), ConfigError> {
    if value >= min {
        Ok(())
    } else {
        Err(range(field, value, format!(">= {min}")))
    }
}

fn backtick(msg: &str, after: &str) -> Option<String> {
    let rest = &msg[msg.find(after)? + after.len()..];
    Some(rest[..rest.find('`')?].to_string())
}

/// Map a deserializer error onto the config error kinds.
fn classify(err: toml::de::Error) -> ConfigError {
    let msg = err.message();
    if let Some(key) = backtick(msg, "unknown field `") {
        return ConfigError::UnknownKey(key);
    }
    if let Some(key) = backtick(msg, "unknown variant `") {
        return ConfigError::Invalid(format!("unknown value `{key}`: {}", msg.trim()));
    }
    if let Some(key) = backtick(msg, "missing field `") {
        return ConfigError::Missing(key);
    }
    ConfigError::Syntax(err.to_string().trim().to_string())
}

/// Parse and validate a config document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let cfg: ExperimentConfig = toml::from_str(text).map_err(classify)?;
    cfg.validate()?;
    Ok(cfg)
}

impl ExperimentConfig {
    /// Every key, defaults included.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        at_least("replicates", self.replicates, 1)?;
        if self.replicates >= 1 << 32 {
            return Err(range("replicates", self.replicates, "< 2^32"));
        }
        if i64::try_from(self.seed).is_err() {
            return Err(range("seed", self.seed, format!("<= {}", i64::MAX)));
        }
        if self.output.is_empty() {
            return Err(ConfigError::Missing("output".into()));
        }

        let net = &self.network;
        at_least("network.nodes_s", net.nodes_s as u64, 1)?;
        at_least("network.nodes_w", net.nodes_w as u64, 1)?;
        if let ErSection::Probability { intra_s, intra_w, inter } = net.er {
            unit("network.er.intra_s", intra_s)?;
            unit("network.er.intra_w", intra_w)?;
            unit("network.er.inter", inter)?;
        }
        self.generator()
            .validate()
            .map_err(|e| ConfigError::Invalid(format!("network: {e}")))?;

        let d = &self.dynamics;
        for (field, v) in [
            ("dynamics.p1_s", d.p1_s),
            ("dynamics.p1_w", d.p1_w),
            ("dynamics.p2", d.p2),
            ("dynamics.t_s", d.t_s),
            ("dynamics.t_w", d.t_w),
        ] {
            unit(field, v)?;
        }
        match (d.t_ws, d.t_sw) {
            (Some(a), Some(b)) => {
                unit("dynamics.t_ws", a)?;
                unit("dynamics.t_sw", b)?;
            }
            (None, None) => {}
            (Some(_), None) => return Err(ConfigError::Missing("dynamics.t_sw".into())),
            (None, Some(_)) => return Err(ConfigError::Missing("dynamics.t_ws".into())),
        }
        if d.t_s > d.t_w {
            return Err(range("dynamics.t_s", d.t_s, format!("[0, t_w = {}]", d.t_w)));
        }
        at_least("dynamics.tau", d.tau as u64, 1)?;
        if !(d.n > 0.0) {
            return Err(range("dynamics.n", d.n, "> 0"));
        }
        self.params()
            .validate()
            .map_err(|e| ConfigError::Invalid(format!("dynamics: {e}")))?;

        for (i, s) in self.schedule.segments.iter().enumerate() {
            unit(&format!("schedule.segments[{i}].p1_s"), s.p1_s)?;
            unit(&format!("schedule.segments[{i}].p1_w"), s.p1_w)?;
        }
        self.schedule()
            .validate()
            .map_err(|e| ConfigError::Invalid(format!("schedule: {e}")))?;

        let h = &self.hysteresis;
        at_least("hysteresis.dwell", h.dwell, 1)?;
        if let Some(g) = h.grid {
            g.check("hysteresis.grid")?;
            for v in g.values() {
                unit("hysteresis.grid", v)?;
            }
        }

        let pd = &self.phase_diagram;
        at_least("phase_diagram.steps", pd.steps, 1)?;
        for (field, g) in [("phase_diagram.p1", pd.p1), ("phase_diagram.p2", pd.p2)] {
            if let Some(g) = g {
                g.check(field)?;
                for v in g.values() {
                    unit(field, v)?;
                }
            }
        }

        let mf = &self.meanfield;
        for (field, v) in [
            ("meanfield.p2_s", mf.p2_s),
            ("meanfield.p2_w", mf.p2_w),
            ("meanfield.pstar_s", mf.pstar_s),
            ("meanfield.pstar_w", mf.pstar_w),
        ] {
            unit(field, v)?;
        }
        if mf.t_s > mf.k_s + mf.k_ws {
            return Err(range("meanfield.t_s", mf.t_s, format!("[0, k_s + k_ws = {}]", mf.k_s + mf.k_ws)));
        }
        if mf.t_w > mf.k_w + mf.k_sw {
            return Err(range("meanfield.t_w", mf.t_w, format!("[0, k_w + k_sw = {}]", mf.k_w + mf.k_sw)));
        }
        Control::parse(&mf.control)
            .ok_or_else(|| range("meanfield.control", &mf.control, "pstar_S, pstar_W, p2_S, p2_W or p2"))?;
        if let Some(g) = mf.grid {
            g.check("meanfield.grid")?;
            for v in g.values() {
                unit("meanfield.grid", v)?;
            }
        }
        if !(mf.damping > 0.0 && mf.damping <= 1.0) {
            return Err(range("meanfield.damping", mf.damping, "(0, 1]"));
        }
        if !(mf.tolerance > 0.0) {
            return Err(range("meanfield.tolerance", mf.tolerance, "> 0"));
        }
        at_least("meanfield.max_iter", mf.max_iter, 1)?;
        if !(mf.jump_floor >= 0.0) {
            return Err(range("meanfield.jump_floor", mf.jump_floor, ">= 0"));
        }

        if let Some(ns) = &self.sweep.n {
            if ns.is_empty() {
                return Err(range("sweep.n", "[]", "a non-empty list"));
            }
            for (i, &n) in ns.iter().enumerate() {
                if !(n > 0.0) {
                    return Err(range(format!("sweep.n[{i}]"), n, "> 0"));
                }
                if i > 0 && !(n > ns[i - 1]) {
                    return Err(range(format!("sweep.n[{i}]"), n, format!("> previous entry {}", ns[i - 1])));
                }
            }
        }

        let ew = &self.early_warning;
        at_least("early_warning.delta_t", ew.delta_t as u64, 1)?;
        at_least("early_warning.flip_window", ew.flip_window as u64, 1)?;
        if !(ew.flip_drop > 0.0 && ew.flip_drop <= 1.0) {
            return Err(range("early_warning.flip_drop", ew.flip_drop, "(0, 1]"));
        }

        let need = |present: bool, field: &str| {
            if present {
                Ok(())
            } else {
                Err(ConfigError::Missing(field.into()))
            }
        };
        match self.protocol {
            Protocol::Timeseries => Ok(()),
            Protocol::EarlyWarning => {
                if self.schedule.horizon as usize <= ew.delta_t {
                    return Err(range(
                        "schedule.horizon",
                        self.schedule.horizon,
                        format!("> early_warning.delta_t = {}", ew.delta_t),
                    ));
                }
                Ok(())
            }
            Protocol::HysteresisSim => need(h.grid.is_some(), "hysteresis.grid"),
            Protocol::PhaseDiagram => {
                need(pd.p1.is_some(), "phase_diagram.p1")?;
                need(pd.p2.is_some(), "phase_diagram.p2")
            }
            Protocol::MeanfieldTrace => need(mf.grid.is_some(), "meanfield.grid"),
            Protocol::TakeoverSweep => need(self.sweep.n.is_some(), "sweep.n"),
        }
    }

    pub fn generator(&self) -> GeneratorConfig {
        let n = &self.network;
        GeneratorConfig {
            kind: n.kind,
            nodes_s: n.nodes_s,
            nodes_w: n.nodes_w,
            n0: n.n0,
            m_s: n.m_s,
            m_w: n.m_w,
            m_sw: n.m_sw,
            er: match n.er {
                ErSection::MatchBa => ErDensity::MatchBa,
                ErSection::Edges { intra_s, intra_w, inter } => ErDensity::Edges { intra_s, intra_w, inter },
                ErSection::Probability { intra_s, intra_w, inter } => {
                    ErDensity::Probability { intra_s, intra_w, inter }
                }
            },
            regular: RegularDegrees {
                k_s: n.regular.k_s,
                k_w: n.regular.k_w,
                k_ws: n.regular.k_ws,
                k_sw: n.regular.k_sw,
            },
        }
    }

    pub fn params(&self) -> DynamicsParams {
        let d = &self.dynamics;
        DynamicsParams {
            p1_s: d.p1_s,
            p1_w: d.p1_w,
            p2: d.p2,
            tau: d.tau,
            t_s: d.t_s,
            t_w: d.t_w,
            cross: match (d.t_ws, d.t_sw) {
                (Some(t_ws), Some(t_sw)) => Some(CrossThresholds { t_ws, t_sw }),
                _ => None,
            },
            n: d.n,
            mechanism: d.mechanism,
            cost_enabled: d.cost,
        }
    }

    pub fn schedule(&self) -> AttackSchedule {
        AttackSchedule {
            baseline: (self.dynamics.p1_s, self.dynamics.p1_w),
            segments: self
                .schedule
                .segments
                .iter()
                .map(|s| Segment {
                    start: s.start,
                    end: s.end,
                    p1_s: s.p1_s,
                    p1_w: s.p1_w,
                })
                .collect(),
        }
    }

    pub fn mean_field_system(&self) -> MeanFieldSystem {
        let m = &self.meanfield;
        MeanFieldSystem {
            k_s: m.k_s,
            k_w: m.k_w,
            k_ws: m.k_ws,
            k_sw: m.k_sw,
            t_s: m.t_s,
            t_w: m.t_w,
            p2_s: m.p2_s,
            p2_w: m.p2_w,
            pstar_s: m.pstar_s,
            pstar_w: m.pstar_w,
        }
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            damping: self.meanfield.damping,
            tolerance: self.meanfield.tolerance,
            max_iter: self.meanfield.max_iter,
        }
    }

    /// Valid once [`validate`](Self::validate) has passed.
    pub fn control(&self) -> Control {
        Control::parse(&self.meanfield.control).unwrap_or(Control::PstarS)
    }
}
