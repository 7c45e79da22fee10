//! Experiment protocols built on the dynamics engine.
//!
//! Every protocol derives its randomness from one base seed. Replicate `r`
//! generates its network from stream `(seed, r, None)` and drives its nodes
//! from `NodeStreams::new(seed, lane_replicate(lane, r), ..)`, where the lane
//! separates work units that share a network (phase-diagram cells and
//! sheets). Replicates and cells run on the rayon pool and are merged in
//! index order, so results do not depend on scheduling.

use std::sync::Arc;

use rayon::prelude::*;

use crate::dynamics::{DynamicsParams, NodeStreams, SimulationState};
use crate::error::{DynamicsError, Error, MeanFieldError, Result};
use crate::meanfield::{check_grid, CurvePoint, CurveSource, HysteresisCurve};
use crate::rng::{derive_stream, lane_replicate};
use crate::topology::{generate, DuplexNetwork, GeneratorConfig};

/// Network of replicate `r`.
pub fn replicate_network(config: &GeneratorConfig, seed: u64, replicate: u64) -> Result<Arc<DuplexNetwork>> {
    Ok(Arc::new(generate(config, &mut derive_stream(seed, replicate, None))?))
}

/// Mean and standard error of the mean (zero SE for a single value).
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: u64,
    /// Exclusive.
    pub end: u64,
    pub p1_s: f64,
    pub p1_w: f64,
}

/// Piecewise-constant internal failure probabilities. Steps outside every
/// segment use the baseline `p_X`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackSchedule {
    pub baseline: (f64, f64),
    pub segments: Vec<Segment>,
}

impl AttackSchedule {
    pub fn constant(p1_s: f64, p1_w: f64) -> Self {
        AttackSchedule {
            baseline: (p1_s, p1_w),
            segments: Vec::new(),
        }
    }

    /// Segments must be non-empty, back to back and hold probabilities.
    pub fn validate(&self) -> Result<(), DynamicsError> {
        let bad = |field, value| DynamicsError::Param {
            field,
            value,
            reason: "schedule probabilities must lie in [0, 1]",
        };
        for (field, v) in [("baseline.p1_s", self.baseline.0), ("baseline.p1_w", self.baseline.1)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(bad(field, v));
            }
        }
        for (i, s) in self.segments.iter().enumerate() {
            if !(0.0..=1.0).contains(&s.p1_s) {
                return Err(bad("segment.p1_s", s.p1_s));
            }
            if !(0.0..=1.0).contains(&s.p1_w) {
                return Err(bad("segment.p1_w", s.p1_w));
            }
            if s.end <= s.start {
                return Err(DynamicsError::Param {
                    field: "segment.end",
                    value: s.end as f64,
                    reason: "segment must end after it starts",
                });
            }
            if i > 0 && self.segments[i - 1].end != s.start {
                return Err(DynamicsError::Param {
                    field: "segment.start",
                    value: s.start as f64,
                    reason: "segments must be contiguous",
                });
            }
        }
        Ok(())
    }

    pub fn p1_at(&self, t: u64) -> (f64, f64) {
        self.segments
            .iter()
            .find(|s| s.start <= t && t < s.end)
            .map_or(self.baseline, |s| (s.p1_s, s.p1_w))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Record {
    pub t: u64,
    pub f_s: f64,
    pub f_w: f64,
    pub threshold_s: f64,
    pub takeovers: usize,
    pub wealth_s: f64,
    pub wealth_w: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub seed: u64,
    pub replicate: u64,
    pub records: Vec<Record>,
}

impl TimeSeries {
    pub fn f_s(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.f_s).collect()
    }

    pub fn f_w(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.f_w).collect()
    }
}

fn record(state: &SimulationState, params: &DynamicsParams) -> Record {
    let (f_s, f_w) = state.measure_fractions();
    let (wealth_s, wealth_w) = state.wealth(params);
    Record {
        // state after the step taken at clock t
        t: state.clock() - 1,
        f_s,
        f_w,
        threshold_s: state.threshold_s(),
        takeovers: state.acquisitions(),
        wealth_s,
        wealth_w,
    }
}

/// Step `horizon` times from the all-active state, recording after every
/// step. `params.p1_*` are replaced by the schedule.
pub fn run_timeseries(
    network: Arc<DuplexNetwork>,
    params: &DynamicsParams,
    schedule: &AttackSchedule,
    horizon: u64,
    seed: u64,
    replicate: u64,
) -> Result<TimeSeries> {
    params.validate()?;
    schedule.validate()?;
    let mut streams = NodeStreams::new(seed, replicate, network.len());
    let mut state = SimulationState::new(network, params);
    let mut p = params.clone();
    let mut records = Vec::with_capacity(horizon as usize);
    for t in 0..horizon {
        (p.p1_s, p.p1_w) = schedule.p1_at(t);
        state.step(&p, &mut streams);
        records.push(record(&state, &p));
    }
    Ok(TimeSeries {
        seed,
        replicate,
        records,
    })
}

/// Replicates of [`run_timeseries`], each on its own network.
pub fn run_timeseries_replicates(
    config: &GeneratorConfig,
    params: &DynamicsParams,
    schedule: &AttackSchedule,
    horizon: u64,
    seed: u64,
    replicates: u64,
) -> Result<Vec<TimeSeries>> {
    (0..replicates)
        .into_par_iter()
        .map(|r| run_timeseries(replicate_network(config, seed, r)?, params, schedule, horizon, seed, r))
        .collect()
}

/// Share of the dwell (from the end) that is averaged.
pub const TAIL_FRACTION: f64 = 0.5;

fn tail_len(steps: u64) -> u64 {
    ((steps as f64 * TAIL_FRACTION).ceil() as u64).clamp(1, steps.max(1))
}

/// Run `steps` steps with fixed parameters and return the tail-averaged
/// `(f_S, f_W)`.
fn dwell(state: &mut SimulationState, params: &DynamicsParams, streams: &mut NodeStreams, steps: u64) -> (f64, f64) {
    let tail = tail_len(steps);
    let (mut s, mut w) = (0.0, 0.0);
    for i in 0..steps {
        state.step(params, streams);
        if i >= steps - tail {
            let (fs, fw) = state.measure_fractions();
            s += fs;
            w += fw;
        }
    }
    (s / tail as f64, w / tail as f64)
}

/// Ramp `p1` (both networks) up the grid and back down, carrying the state
/// between grid points. Each point is the tail average over its dwell.
pub fn run_hysteresis_sim(
    network: Arc<DuplexNetwork>,
    params: &DynamicsParams,
    grid: &[f64],
    dwell_steps: u64,
    seed: u64,
    replicate: u64,
) -> Result<HysteresisCurve> {
    check_grid(grid, 1)?;
    if dwell_steps == 0 {
        return Err(Error::Runtime("dwell must be at least one step".into()));
    }
    let mut p = params.clone();
    for &v in grid {
        (p.p1_s, p.p1_w) = (v, v);
        p.validate()?;
    }
    let mut streams = NodeStreams::new(seed, replicate, network.len());
    let mut state = SimulationState::new(network, params);
    let mut point = |v: f64, state: &mut SimulationState| {
        (p.p1_s, p.p1_w) = (v, v);
        let (f_s, f_w) = dwell(state, &p, &mut streams, dwell_steps);
        CurvePoint {
            control: v,
            a_s: 1.0 - f_s,
            a_w: 1.0 - f_w,
            converged: true,
            residual: f64::NAN,
            iterations: dwell_steps,
        }
    };
    let ascending: Vec<_> = grid.iter().map(|&v| point(v, &mut state)).collect();
    let descending: Vec<_> = grid.iter().rev().map(|&v| point(v, &mut state)).collect();
    Ok(HysteresisCurve {
        control: "p1".into(),
        source: CurveSource::Sim,
        ascending,
        descending,
    })
}

/// One simulated hysteresis curve per replicate.
pub fn run_hysteresis_replicates(
    config: &GeneratorConfig,
    params: &DynamicsParams,
    grid: &[f64],
    dwell_steps: u64,
    seed: u64,
    replicates: u64,
) -> Result<Vec<HysteresisCurve>> {
    (0..replicates)
        .into_par_iter()
        .map(|r| run_hysteresis_sim(replicate_network(config, seed, r)?, params, grid, dwell_steps, seed, r))
        .collect()
}

/// Pointwise replicate mean of simulated curves sharing one grid.
pub fn mean_curve(curves: &[HysteresisCurve]) -> Option<HysteresisCurve> {
    let first = curves.first()?;
    let avg = |pick: fn(&HysteresisCurve) -> &Vec<CurvePoint>| -> Vec<CurvePoint> {
        (0..pick(first).len())
            .map(|i| {
                let n = curves.len() as f64;
                let mut p = pick(first)[i];
                p.a_s = curves.iter().map(|c| pick(c)[i].a_s).sum::<f64>() / n;
                p.a_w = curves.iter().map(|c| pick(c)[i].a_w).sum::<f64>() / n;
                p
            })
            .collect()
    };
    Some(HysteresisCurve {
        control: first.control.clone(),
        source: first.source,
        ascending: avg(|c| &c.ascending),
        descending: avg(|c| &c.descending),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sheet {
    ActiveStart,
    FailedStart,
}

impl Sheet {
    pub fn name(self) -> &'static str {
        match self {
            Sheet::ActiveStart => "active",
            Sheet::FailedStart => "failed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseCell {
    pub p1: f64,
    pub p2: f64,
    pub sheet: Sheet,
    pub f_s_mean: f64,
    pub f_w_mean: f64,
    pub f_s_se: f64,
    pub f_w_se: f64,
    pub replicates: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDiagram {
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
    /// Row-major over (p1, p2, sheet), sheets innermost.
    pub cells: Vec<PhaseCell>,
}

impl PhaseDiagram {
    pub fn cell(&self, i1: usize, i2: usize, sheet: Sheet) -> &PhaseCell {
        &self.cells[(i1 * self.p2.len() + i2) * 2 + sheet as usize]
    }
}

/// Tail-averaged fractions of every (p1, p2, sheet, replicate) work unit.
#[allow(clippy::too_many_arguments)]
pub fn phase_diagram_samples(
    config: &GeneratorConfig,
    params: &DynamicsParams,
    p1_grid: &[f64],
    p2_grid: &[f64],
    replicates: u64,
    steps: u64,
    seed: u64,
) -> Result<Vec<Vec<(f64, f64)>>> {
    if p1_grid.is_empty() || p2_grid.is_empty() {
        return Err(MeanFieldError::Grid { min: 1 }.into());
    }
    if steps == 0 {
        return Err(Error::Runtime("steps must be at least one".into()));
    }
    let mut p = params.clone();
    for &p1 in p1_grid {
        for &p2 in p2_grid {
            (p.p1_s, p.p1_w, p.p2) = (p1, p1, p2);
            p.validate()?;
        }
    }
    let networks: Vec<_> = (0..replicates)
        .into_par_iter()
        .map(|r| replicate_network(config, seed, r))
        .collect::<Result<_>>()?;
    let units = p1_grid.len() * p2_grid.len() * 2;
    let samples: Vec<Vec<(f64, f64)>> = (0..units)
        .into_par_iter()
        .map(|lane| {
            let cell = lane / 2;
            let (p1, p2) = (p1_grid[cell / p2_grid.len()], p2_grid[cell % p2_grid.len()]);
            let mut p = params.clone();
            (p.p1_s, p.p1_w, p.p2) = (p1, p1, p2);
            (0..replicates)
                .map(|r| {
                    let net = networks[r as usize].clone();
                    let mut streams = NodeStreams::new(seed, lane_replicate(lane as u64 + 1, r), net.len());
                    let mut state = if lane % 2 == 0 {
                        SimulationState::new(net, &p)
                    } else {
                        SimulationState::all_failed(net, &p)
                    };
                    dwell(&mut state, &p, &mut streams, steps)
                })
                .collect()
        })
        .collect();
    Ok(samples)
}

/// Two sheets per (p1, p2) cell: runs from the all-active and from the
/// all-failed state, tail-averaged over the last half of `steps`.
#[allow(clippy::too_many_arguments)]
pub fn run_phase_diagram(
    config: &GeneratorConfig,
    params: &DynamicsParams,
    p1_grid: &[f64],
    p2_grid: &[f64],
    replicates: u64,
    steps: u64,
    seed: u64,
) -> Result<PhaseDiagram> {
    let samples = phase_diagram_samples(config, params, p1_grid, p2_grid, replicates, steps, seed)?;
    let cells = samples
        .iter()
        .enumerate()
        .map(|(lane, reps)| {
            let cell = lane / 2;
            let fs: Vec<f64> = reps.iter().map(|r| r.0).collect();
            let fw: Vec<f64> = reps.iter().map(|r| r.1).collect();
            let (f_s_mean, f_s_se) = mean_se(&fs);
            let (f_w_mean, f_w_se) = mean_se(&fw);
            PhaseCell {
                p1: p1_grid[cell / p2_grid.len()],
                p2: p2_grid[cell % p2_grid.len()],
                sheet: if lane % 2 == 0 { Sheet::ActiveStart } else { Sheet::FailedStart },
                f_s_mean,
                f_w_mean,
                f_s_se,
                f_w_se,
                replicates,
            }
        })
        .collect();
    Ok(PhaseDiagram {
        p1: p1_grid.to_vec(),
        p2: p2_grid.to_vec(),
        cells,
    })
}

pub const DEFAULT_WINDOW: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct EarlyWarning {
    pub delta_t: usize,
    /// `indicator[t]`, `None` where `f_W` is zero at `t` or `t + delta_t`.
    pub indicator: Vec<Option<f64>>,
    /// Earliest argmax over valid points; `None` when every point was
    /// skipped.
    pub stop_time: Option<usize>,
    pub skipped: usize,
}

/// `f_S(t+dt)/f_W(t+dt) - f_S(t)/f_W(t)` for every `t` with both ends in
/// range.
pub fn early_warning(f_s: &[f64], f_w: &[f64], delta_t: usize) -> Result<EarlyWarning> {
    if f_s.len() != f_w.len() {
        return Err(Error::Runtime("f_S and f_W series differ in length".into()));
    }
    if delta_t == 0 || f_s.len() <= delta_t {
        return Err(Error::Runtime(format!(
            "series of length {} is too short for a window of {delta_t}",
            f_s.len()
        )));
    }
    let ratio = |t: usize| (f_w[t] > 0.0).then(|| f_s[t] / f_w[t]);
    let indicator: Vec<Option<f64>> = (0..f_s.len() - delta_t)
        .map(|t| Some(ratio(t + delta_t)? - ratio(t)?))
        .collect();
    let mut stop: Option<(usize, f64)> = None;
    for (t, v) in indicator.iter().enumerate() {
        if let Some(v) = *v {
            if stop.is_none_or(|(_, b)| v > b) {
                stop = Some((t, v));
            }
        }
    }
    Ok(EarlyWarning {
        delta_t,
        skipped: indicator.iter().filter(|v| v.is_none()).count(),
        stop_time: stop.map(|(t, _)| t),
        indicator,
    })
}

/// First `t` at which `f_W` falls by at least `drop` within `window` steps,
/// reported as the step where the drop completes.
pub fn detect_flip(f_w: &[f64], drop: f64, window: usize) -> Option<usize> {
    // running maximum over the trailing window
    let mut deque = std::collections::VecDeque::new();
    for (t, &v) in f_w.iter().enumerate() {
        while deque.front().is_some_and(|&i| i + window < t) {
            deque.pop_front();
        }
        if let Some(&i) = deque.front() {
            if f_w[i] - v >= drop {
                return Some(t);
            }
        }
        while deque.back().is_some_and(|&i| f_w[i] <= v) {
            deque.pop_back();
        }
        deque.push_back(t);
    }
    None
}

pub const DEFAULT_FLIP_DROP: f64 = 0.4;
pub const DEFAULT_FLIP_WINDOW: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollapseEstimate {
    /// First control value whose fraction is below the floor.
    pub p1c: Option<f64>,
    /// `p1c - p_X`.
    pub fluctuation: Option<f64>,
}

impl CollapseEstimate {
    pub fn open_ended(&self) -> bool {
        self.p1c.is_none()
    }
}

pub const DEFAULT_COLLAPSE_FLOOR: f64 = 0.5;

/// Collapse point of each network along an ascending branch. The floor is a
/// fraction of the first point's level.
pub fn collapse_threshold_estimate(ascending: &[CurvePoint], baseline: f64, floor: f64) -> [CollapseEstimate; 2] {
    let one = |f: fn(&CurvePoint) -> f64| {
        let Some(first) = ascending.first() else {
            return CollapseEstimate {
                p1c: None,
                fluctuation: None,
            };
        };
        let level = floor * f(first);
        let p1c = ascending.iter().find(|p| f(p) < level).map(|p| p.control);
        CollapseEstimate {
            p1c,
            fluctuation: p1c.map(|c| c - baseline),
        }
    };
    [one(CurvePoint::f_s), one(CurvePoint::f_w)]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepReplicate {
    /// Acquisitions over the initial W count.
    pub takeover_fraction: f64,
    pub final_threshold: f64,
    pub max_f_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub n: f64,
    pub takeover_mean: f64,
    pub takeover_se: f64,
    pub threshold_mean: f64,
    pub threshold_se: f64,
    pub replicates: Vec<SweepReplicate>,
}

/// For each `n`, run every replicate under `schedule` for `horizon` steps.
/// All `n` share the replicate networks and node streams, so the sweep
/// compares like with like.
pub fn takeover_sweep(
    config: &GeneratorConfig,
    params: &DynamicsParams,
    schedule: &AttackSchedule,
    n_grid: &[f64],
    replicates: u64,
    horizon: u64,
    seed: u64,
) -> Result<Vec<SweepPoint>> {
    check_grid(n_grid, 1)?;
    let networks: Vec<_> = (0..replicates)
        .into_par_iter()
        .map(|r| replicate_network(config, seed, r))
        .collect::<Result<_>>()?;
    let units: Vec<(usize, u64)> = (0..n_grid.len())
        .flat_map(|i| (0..replicates).map(move |r| (i, r)))
        .collect();
    let results: Vec<SweepReplicate> = units
        .par_iter()
        .map(|&(i, r)| {
            let p = DynamicsParams {
                n: n_grid[i],
                ..params.clone()
            };
            let ts = run_timeseries(networks[r as usize].clone(), &p, schedule, horizon, seed, r)?;
            let n_w = networks[r as usize].initial_counts().1;
            let last = ts.records.last();
            Ok(SweepReplicate {
                takeover_fraction: last.map_or(0.0, |l| l.takeovers as f64 / n_w as f64),
                final_threshold: last.map_or(params.t_s, |l| l.threshold_s),
                max_f_s: ts.records.iter().map(|r| r.f_s).fold(f64::NAN, f64::max),
            })
        })
        .collect::<Result<_>>()?;
    Ok(n_grid
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let reps = results[i * replicates as usize..(i + 1) * replicates as usize].to_vec();
            let (takeover_mean, takeover_se) = mean_se(&reps.iter().map(|r| r.takeover_fraction).collect::<Vec<_>>());
            let (threshold_mean, threshold_se) = mean_se(&reps.iter().map(|r| r.final_threshold).collect::<Vec<_>>());
            SweepPoint {
                n,
                takeover_mean,
                takeover_se,
                threshold_mean,
                threshold_se,
                replicates: reps,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests;
