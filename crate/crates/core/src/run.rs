//! Config-driven protocol runs: one entry point per command, returning the
//! file contents to write. Writing and pool setup are left to the caller.

use std::path::{Path, PathBuf};

use crate::config::{EarlyWarningSection, ExperimentConfig, Protocol};
use crate::error::{ConfigError, Error, Result};
use crate::meanfield::{effective_region, spinodal_detect, trace_hysteresis};
use crate::output::{self, companion, WarningReport};
use crate::protocols::{
    collapse_threshold_estimate, detect_flip, early_warning, mean_curve, replicate_network, run_hysteresis_replicates,
    run_phase_diagram, run_timeseries_replicates, takeover_sweep, CollapseEstimate, DEFAULT_COLLAPSE_FLOOR,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    /// Edge list of one replicate's network.
    Generate { replicate: u64 },
    Simulate,
    Hysteresis,
    PhaseDiagram,
    MeanField,
    SweepTakeover,
    /// Early-warning analysis of an existing time-series CSV.
    Analyze { input: PathBuf },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Generate { .. } => "generate",
            Command::Simulate => "simulate",
            Command::Hysteresis => "hysteresis",
            Command::PhaseDiagram => "phase-diagram",
            Command::MeanField => "meanfield",
            Command::SweepTakeover => "sweep-takeover",
            Command::Analyze { .. } => "analyze",
        }
    }

    /// Protocols this command can run.
    pub fn accepts(&self, protocol: Protocol) -> bool {
        match self {
            Command::Generate { .. } => true,
            Command::Simulate => matches!(protocol, Protocol::Timeseries | Protocol::EarlyWarning),
            Command::Hysteresis => protocol == Protocol::HysteresisSim,
            Command::PhaseDiagram => protocol == Protocol::PhaseDiagram,
            Command::MeanField => protocol == Protocol::MeanfieldTrace,
            Command::SweepTakeover => protocol == Protocol::TakeoverSweep,
            Command::Analyze { .. } => matches!(protocol, Protocol::Timeseries | Protocol::EarlyWarning),
        }
    }
}

#[derive(Debug, Default)]
pub struct RunOutput {
    /// Final path and content of every file, main output first.
    pub files: Vec<(PathBuf, String)>,
    /// Unconverged mean-field points.
    pub unconverged: usize,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".into(), |v| v.to_string())
}

fn collapse_facts(prefix: &str, est: &[CollapseEstimate; 2]) -> Vec<(String, String)> {
    ["S", "W"]
        .iter()
        .zip(est)
        .flat_map(|(label, e)| {
            [
                (format!("{prefix}.p1c_{label}"), fmt_opt(e.p1c)),
                (format!("{prefix}.fluctuation_{label}"), fmt_opt(e.fluctuation)),
            ]
        })
        .collect()
}

/// Flip detection and early-warning indicator for one replicate. When a
/// flip is found the indicator covers the series only up to `flip_window`
/// steps past the flip, so the post-collapse regime cannot supply the
/// maximum.
pub fn warning_report(replicate: u64, f_s: &[f64], f_w: &[f64], ew: &EarlyWarningSection) -> Result<WarningReport> {
    let flip_time = detect_flip(f_w, ew.flip_drop, ew.flip_window);
    let analyzed = flip_time.map_or(f_s.len(), |t| (t + ew.flip_window).max(ew.delta_t + 1).min(f_s.len()));
    let warning = early_warning(&f_s[..analyzed], &f_w[..analyzed], ew.delta_t)?;
    Ok(WarningReport {
        replicate,
        length: f_s.len(),
        analyzed,
        flip_time,
        warning,
    })
}

/// Run `command` under `config`, with `out` as the main output path.
pub fn execute(command: &Command, config: &ExperimentConfig, out: &Path) -> Result<RunOutput> {
    if !command.accepts(config.protocol) {
        return Err(ConfigError::Invalid(format!(
            "command `{}` cannot run protocol `{}`",
            command.name(),
            config.protocol.name()
        ))
        .into());
    }
    let mut run = RunOutput::default();
    let head = |extra: &[(String, String)]| output::header(config, extra);
    let seed = config.seed;
    let reps = config.replicates;
    match command {
        Command::Generate { replicate } => {
            let net = replicate_network(&config.generator(), seed, *replicate)?;
            let mut buf = Vec::new();
            net.write_edge_list(&mut buf, &format!("rivalnet edge list, seed {seed}, replicate {replicate}"))
                .map_err(|e| Error::io(out.display().to_string(), e))?;
            let mut text = head(&[]);
            text.push_str(&String::from_utf8(buf).expect("edge list is ASCII"));
            run.files.push((out.to_path_buf(), text));
        }
        Command::Simulate => {
            let series = run_timeseries_replicates(
                &config.generator(),
                &config.params(),
                &config.schedule(),
                config.schedule.horizon,
                seed,
                reps,
            )?;
            let rows = output::timeseries_rows(&series);
            if config.protocol == Protocol::EarlyWarning {
                let reports = series
                    .iter()
                    .map(|ts| warning_report(ts.replicate, &ts.f_s(), &ts.f_w(), &config.early_warning))
                    .collect::<Result<Vec<_>>>()?;
                run.files.push((out.to_path_buf(), head(&[]) + &output::indicator_rows(&reports)));
                run.files.push((
                    companion(out, ".summary.csv"),
                    head(&[]) + &output::warning_summary_rows(&reports),
                ));
                run.files.push((companion(out, ".timeseries.csv"), head(&[]) + &rows));
            } else {
                run.files.push((out.to_path_buf(), head(&[]) + &rows));
            }
        }
        Command::Analyze { input } => {
            let text = std::fs::read_to_string(input).map_err(|e| Error::io(input.display().to_string(), e))?;
            let reports = output::read_timeseries(&text)?
                .iter()
                .map(|(r, fs, fw)| warning_report(*r, fs, fw, &config.early_warning))
                .collect::<Result<Vec<_>>>()?;
            let extra = [("input".to_string(), input.display().to_string())];
            run.files.push((out.to_path_buf(), head(&extra) + &output::indicator_rows(&reports)));
            run.files.push((
                companion(out, ".summary.csv"),
                head(&extra) + &output::warning_summary_rows(&reports),
            ));
        }
        Command::Hysteresis => {
            let grid = config.hysteresis.grid.expect("validated").values();
            let curves = run_hysteresis_replicates(
                &config.generator(),
                &config.params(),
                &grid,
                config.hysteresis.dwell,
                seed,
                reps,
            )?;
            let mean = mean_curve(&curves).expect("at least one replicate");
            let est = collapse_threshold_estimate(&mean.ascending, grid[0], DEFAULT_COLLAPSE_FLOOR);
            let extra = collapse_facts("collapse", &est);
            run.files.push((out.to_path_buf(), head(&extra) + &output::hysteresis_rows(&mean)));
            run.files.push((
                companion(out, ".replicates.csv"),
                head(&[]) + &output::hysteresis_replicate_rows(&curves),
            ));
        }
        Command::PhaseDiagram => {
            let pd = &config.phase_diagram;
            let diagram = run_phase_diagram(
                &config.generator(),
                &config.params(),
                &pd.p1.expect("validated").values(),
                &pd.p2.expect("validated").values(),
                reps,
                pd.steps,
                seed,
            )?;
            run.files.push((out.to_path_buf(), head(&[]) + &output::phase_rows(&diagram)));
        }
        Command::MeanField => {
            let grid = config.meanfield.grid.expect("validated").values();
            let curve = trace_hysteresis(
                &config.mean_field_system(),
                config.control(),
                &grid,
                &config.solver_options(),
            )?;
            run.unconverged = curve
                .ascending
                .iter()
                .chain(&curve.descending)
                .filter(|p| !p.converged)
                .count();
            let mut extra = vec![("unconverged".to_string(), run.unconverged.to_string())];
            if grid.len() >= 3 {
                let sp = spinodal_detect(&curve, config.meanfield.jump_floor)?;
                extra.extend([
                    ("spinodal.ascending.S".into(), fmt_opt(sp.ascending.s)),
                    ("spinodal.ascending.W".into(), fmt_opt(sp.ascending.w)),
                    ("spinodal.descending.S".into(), fmt_opt(sp.descending.s)),
                    ("spinodal.descending.W".into(), fmt_opt(sp.descending.w)),
                ]);
            }
            let region = effective_region(&curve.ascending);
            extra.push(("effective.start".into(), fmt_opt(region.map(|r| r.0))));
            extra.push(("effective.end".into(), fmt_opt(region.map(|r| r.1))));
            run.files.push((out.to_path_buf(), head(&extra) + &output::hysteresis_rows(&curve)));
        }
        Command::SweepTakeover => {
            let points = takeover_sweep(
                &config.generator(),
                &config.params(),
                &config.schedule(),
                config.sweep.n.as_deref().expect("validated"),
                reps,
                config.schedule.horizon,
                seed,
            )?;
            run.files.push((out.to_path_buf(), head(&[]) + &output::sweep_rows(&points)));
            run.files.push((
                companion(out, ".replicates.csv"),
                head(&[]) + &output::sweep_replicate_rows(&points),
            ));
        }
    }
    Ok(run)
}
