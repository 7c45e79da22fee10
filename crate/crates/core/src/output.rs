//! CSV and manifest serialization.
//!
//! CSVs are UTF-8 with LF line endings and a `#`-prefixed header that echoes
//! the run's config. Floats use the shortest representation that parses
//! back to the same value, so equal results give equal bytes.
//!
//! The echo leaves out `output` and `workers`: neither changes a result, and
//! keeping them out lets a replay into a different path reproduce the file
//! byte for byte.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::meanfield::{CurvePoint, HysteresisCurve};
use crate::protocols::{EarlyWarning, PhaseDiagram, SweepPoint, TimeSeries};

pub const TIMESERIES_COLUMNS: &str = "replicate,t,f_S,f_W,T_S_current,n_takeovers_cum,wealth_S,wealth_W";
pub const HYSTERESIS_COLUMNS: &str = "source,branch,control,a_S,a_W,f_S,f_W,converged,residual,iterations";
pub const PHASE_COLUMNS: &str = "p1,p2,sheet,f_S_mean,f_W_mean,f_S_se,f_W_se,replicates";
pub const SWEEP_COLUMNS: &str = "n,takeover_mean,takeover_se,T_S_final_mean,T_S_final_se,replicates";
pub const SWEEP_REPLICATE_COLUMNS: &str = "n,replicate,takeover_fraction,T_S_final,max_f_S";
pub const INDICATOR_COLUMNS: &str = "replicate,t,indicator";
pub const WARNING_SUMMARY_COLUMNS: &str = "replicate,length,analyzed,flip_time,stop_time,skipped";

/// `# `-prefixed header: program line, the config echo, then extra
/// `key = value` lines.
pub fn header(config: &ExperimentConfig, extra: &[(String, String)]) -> String {
    let mut out = format!("# rivalnet {}\n", env!("CARGO_PKG_VERSION"));
    for line in config.to_toml().lines() {
        if line.starts_with("output =") || line.starts_with("workers =") || line.is_empty() {
            continue;
        }
        let _ = writeln!(out, "# {line}");
    }
    for (k, v) in extra {
        let _ = writeln!(out, "# {k} = {v}");
    }
    out
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

pub fn timeseries_rows(series: &[TimeSeries]) -> String {
    let mut out = format!("{TIMESERIES_COLUMNS}\n");
    for ts in series {
        for r in &ts.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                ts.replicate, r.t, r.f_s, r.f_w, r.threshold_s, r.takeovers, r.wealth_s, r.wealth_w
            );
        }
    }
    out
}

fn curve_rows(out: &mut String, prefix: &str, curve: &HysteresisCurve) {
    let branches: [(&str, &[CurvePoint]); 2] = [("ascending", &curve.ascending), ("descending", &curve.descending)];
    for (branch, points) in branches {
        for p in points {
            let _ = writeln!(
                out,
                "{prefix}{},{branch},{},{},{},{},{},{},{},{}",
                curve.source.name(),
                p.control,
                p.a_s,
                p.a_w,
                p.f_s(),
                p.f_w(),
                p.converged,
                p.residual,
                p.iterations
            );
        }
    }
}

pub fn hysteresis_rows(curve: &HysteresisCurve) -> String {
    let mut out = format!("{HYSTERESIS_COLUMNS}\n");
    curve_rows(&mut out, "", curve);
    out
}

/// Per-replicate curves, with a leading `replicate` column.
pub fn hysteresis_replicate_rows(curves: &[HysteresisCurve]) -> String {
    let mut out = format!("replicate,{HYSTERESIS_COLUMNS}\n");
    for (r, c) in curves.iter().enumerate() {
        curve_rows(&mut out, &format!("{r},"), c);
    }
    out
}

pub fn phase_rows(pd: &PhaseDiagram) -> String {
    let mut out = format!("{PHASE_COLUMNS}\n");
    for c in &pd.cells {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            c.p1,
            c.p2,
            c.sheet.name(),
            c.f_s_mean,
            c.f_w_mean,
            c.f_s_se,
            c.f_w_se,
            c.replicates
        );
    }
    out
}

pub fn sweep_rows(points: &[SweepPoint]) -> String {
    let mut out = format!("{SWEEP_COLUMNS}\n");
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            p.n,
            p.takeover_mean,
            p.takeover_se,
            p.threshold_mean,
            p.threshold_se,
            p.replicates.len()
        );
    }
    out
}

pub fn sweep_replicate_rows(points: &[SweepPoint]) -> String {
    let mut out = format!("{SWEEP_REPLICATE_COLUMNS}\n");
    for p in points {
        for (r, rep) in p.replicates.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{r},{},{},{}",
                p.n, rep.takeover_fraction, rep.final_threshold, rep.max_f_s
            );
        }
    }
    out
}

/// Early-warning analysis of one replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct WarningReport {
    pub replicate: u64,
    pub length: usize,
    /// Length of the prefix the indicator was computed on.
    pub analyzed: usize,
    pub flip_time: Option<usize>,
    pub warning: EarlyWarning,
}

pub fn indicator_rows(reports: &[WarningReport]) -> String {
    let mut out = format!("{INDICATOR_COLUMNS}\n");
    for r in reports {
        for (t, v) in r.warning.indicator.iter().enumerate() {
            let _ = writeln!(out, "{},{t},{}", r.replicate, opt(*v));
        }
    }
    out
}

pub fn warning_summary_rows(reports: &[WarningReport]) -> String {
    let mut out = format!("{WARNING_SUMMARY_COLUMNS}\n");
    for r in reports {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.replicate,
            r.length,
            r.analyzed,
            opt(r.flip_time),
            opt(r.warning.stop_time),
            r.warning.skipped
        );
    }
    out
}

/// Parse a time-series CSV back into per-replicate series, in order of
/// first appearance. Only `replicate`, `f_S` and `f_W` are required.
pub fn read_timeseries(text: &str) -> Result<Vec<(u64, Vec<f64>, Vec<f64>)>> {
    let bad = |line: usize, msg: &str| Error::Runtime(format!("time series line {line}: {msg}"));
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.starts_with('#') && !l.is_empty());
    let (_, head) = lines.next().ok_or_else(|| Error::Runtime("time series is empty".into()))?;
    let cols: Vec<&str> = head.split(',').collect();
    let col = |name: &str| {
        cols.iter()
            .position(|c| *c == name)
            .ok_or_else(|| Error::Runtime(format!("time series has no `{name}` column")))
    };
    let (ir, is, iw) = (col("replicate")?, col("f_S")?, col("f_W")?);
    let mut out: Vec<(u64, Vec<f64>, Vec<f64>)> = Vec::new();
    for (n, line) in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(bad(n + 1, "wrong number of fields"));
        }
        let num = |i: usize| fields[i].parse::<f64>().map_err(|_| bad(n + 1, "not a number"));
        let rep: u64 = fields[ir].parse().map_err(|_| bad(n + 1, "bad replicate"))?;
        let (fs, fw) = (num(is)?, num(iw)?);
        match out.iter_mut().find(|e| e.0 == rep) {
            Some(e) => {
                e.1.push(fs);
                e.2.push(fw);
            }
            None => out.push((rep, vec![fs], vec![fw])),
        }
    }
    Ok(out)
}

/// `path` with its extension replaced by `suffix` (which carries its own).
pub fn companion(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

/// Files staged under temporary names and renamed into place together.
#[derive(Debug, Default)]
pub struct Staged {
    files: Vec<(PathBuf, PathBuf)>,
}

impl Staged {
    pub fn new() -> Self {
        Staged::default()
    }

    /// Write `content` next to `path` under a temporary name.
    pub fn add(&mut self, path: &Path, content: &str) -> Result<()> {
        let name = path
            .file_name()
            .ok_or_else(|| Error::Runtime(format!("output path {} has no file name", path.display())))?;
        let tmp = path.with_file_name(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
        }
        let write = || -> std::io::Result<()> {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(content.as_bytes())?;
            f.sync_all()
        };
        if let Err(e) = write() {
            let _ = fs::remove_file(&tmp);
            return Err(Error::io(tmp.display().to_string(), e));
        }
        self.files.push((tmp, path.to_path_buf()));
        Ok(())
    }

    pub fn paths(&self) -> impl Iterator<Item = &Path> {
        self.files.iter().map(|f| f.1.as_path())
    }

    /// Rename every staged file to its final name.
    pub fn commit(mut self) -> Result<()> {
        for (tmp, dst) in std::mem::take(&mut self.files) {
            fs::rename(&tmp, &dst).map_err(|e| Error::io(dst.display().to_string(), e))?;
        }
        Ok(())
    }
}

impl Drop for Staged {
    fn drop(&mut self) {
        for (tmp, _) in &self.files {
            let _ = fs::remove_file(tmp);
        }
    }
}

fn flatten(out: &mut String, prefix: &str, table: &toml::Table) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            toml::Value::Table(t) => flatten(out, &key, t),
            other => {
                let _ = writeln!(out, "{key} = {other}");
            }
        }
    }
}

/// Flat `key = value` manifest. Run facts come first, then the config
/// under dotted `config.` keys. The document is valid TOML, so
/// [`read_manifest`] can hand the config back to the parser.
pub fn manifest(facts: &[(&str, toml::Value)], config: &ExperimentConfig) -> String {
    let mut out = String::from("# rivalnet run manifest\n");
    for (k, v) in facts {
        let _ = writeln!(out, "{k} = {v}");
    }
    let table: toml::Table = toml::from_str(&config.to_toml()).expect("config echo parses");
    flatten(&mut out, "config", &table);
    out
}

/// Run facts and the embedded config of a manifest.
pub fn read_manifest(text: &str) -> Result<(toml::Table, ExperimentConfig)> {
    let mut table: toml::Table =
        toml::from_str(text).map_err(|e| Error::Runtime(format!("manifest: {}", e.message())))?;
    let config = table
        .remove("config")
        .ok_or_else(|| Error::Runtime("manifest has no config".into()))?;
    let text = toml::to_string(&config).map_err(|e| Error::Runtime(format!("manifest: {e}")))?;
    let config = crate::config::parse_config(&text)?;
    Ok((table, config))
}
