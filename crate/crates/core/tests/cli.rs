use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_rivalnet");

fn rivalnet(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

const SMALL_SIM: &str = r#"
protocol = "timeseries"
seed = 11
replicates = 2

[network]
nodes_s = 80
nodes_w = 80

[dynamics]
p1_s = 0.004
p1_w = 0.004
p2 = 0.5
mechanism = "takeover"
n = 1.0
cost = true

[schedule]
horizon = 400
"#;

const SMALL_MF: &str = r#"
protocol = "meanfield-trace"
seed = 1

[meanfield]
grid = { start = 0.0, stop = 0.5, points = 26 }
"#;

#[test]
fn empty_config_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "empty.toml", "");
    let out = rivalnet(&["simulate", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("protocol"));
}

#[test]
fn range_and_unknown_key_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "protocol = \"timeseries\"\nseed = 1\n[dynamics]\nt_s = 1.5\n");
    let out = rivalnet(&["simulate", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("dynamics.t_s") && err.contains("1.5") && err.contains("[0, 1]"), "{err}");

    let cfg = write(dir.path(), "typo.toml", "protocol = \"timeseries\"\nseed = 1\nhorizon = 5\n");
    let out = rivalnet(&["simulate", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`horizon`"));
}

#[test]
fn protocol_must_match_command() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "mf.toml", SMALL_MF);
    let out = rivalnet(&["simulate", "--config", &cfg, "--out", &dir.path().join("x.csv").display().to_string()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("x.csv").exists());
}

#[test]
fn same_invocation_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sim.toml", SMALL_SIM);
    let a = dir.path().join("a.csv").display().to_string();
    let b = dir.path().join("b.csv").display().to_string();
    assert!(rivalnet(&["simulate", "--config", &cfg, "--out", &a]).status.success());
    assert!(rivalnet(&["simulate", "--config", &cfg, "--out", &b, "--workers", "2"]).status.success());
    let (ta, tb) = (fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let text = String::from_utf8(ta).unwrap();
    assert!(text.starts_with("# rivalnet "));
    assert!(text.contains("\nreplicate,t,f_S,f_W,T_S_current,n_takeovers_cum,wealth_S,wealth_W\n"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 1 + 2 * 400);

    let c = dir.path().join("c.csv").display().to_string();
    assert!(rivalnet(&["simulate", "--config", &cfg, "--out", &c, "--seed", "12"]).status.success());
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn manifest_replay_reproduces_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sim.toml", SMALL_SIM);
    let first = dir.path().join("run.csv");
    let out = rivalnet(&["simulate", "--config", &cfg, "--out", &first.display().to_string(), "--seed", "99"]);
    assert!(out.status.success());
    let manifest = dir.path().join("run.manifest");
    let text = fs::read_to_string(&manifest).unwrap();
    for key in ["command = \"simulate\"", "seed = 99", "wall_time_s = ", "version = ", "config.dynamics.tau = 50"] {
        assert!(text.contains(key), "{key} not in manifest:\n{text}");
    }
    // config.seed keeps the override
    assert!(text.contains("config.seed = 99"));
    let second = dir.path().join("replayed.csv");
    let out = rivalnet(&[
        "replay",
        "--manifest",
        &manifest.display().to_string(),
        "--out",
        &second.display().to_string(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read(&first).unwrap(), fs::read(&second).unwrap());
}

#[test]
fn meanfield_writes_converged_trace() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "mf.toml", SMALL_MF);
    let csv = dir.path().join("mf.csv");
    let out = rivalnet(&["meanfield", "--config", &cfg, "--out", &csv.display().to_string(), "--strict"]);
    assert!(out.status.success());
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.contains("# unconverged = 0"));
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "source,branch,control,a_S,a_W,f_S,f_W,converged,residual,iterations");
    assert_eq!(rows.len(), 1 + 2 * 26);
    assert!(rows[1].starts_with("meanfield,ascending,0,"));
    assert!(rows[27].starts_with("meanfield,descending,0.5,"));
}

#[test]
fn strict_turns_unconverged_points_into_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "mf.toml", &format!("{SMALL_MF}max_iter = 1\n"));
    let csv = dir.path().join("mf.csv").display().to_string();
    let lax = rivalnet(&["meanfield", "--config", &cfg, "--out", &csv]);
    assert_eq!(lax.status.code(), Some(0));
    let strict = rivalnet(&["meanfield", "--config", &cfg, "--out", &csv, "--strict"]);
    assert_eq!(strict.status.code(), Some(4));
    assert!(fs::read_to_string(&csv).unwrap().contains("false"));
}

#[test]
fn failed_run_leaves_no_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "ew.toml", "protocol = \"early-warning\"\nseed = 1\n");
    let csv = dir.path().join("ew.csv");
    let missing = dir.path().join("nope.csv").display().to_string();
    let out = rivalnet(&["analyze", "--config", &cfg, "--input", &missing, "--out", &csv.display().to_string()]);
    assert_eq!(out.status.code(), Some(3));
    let left: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(left.len(), 1, "{left:?}");
}

#[test]
fn analyze_matches_inline_early_warning() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "ew.toml",
        &SMALL_SIM.replace("\"timeseries\"", "\"early-warning\""),
    );
    let inline = dir.path().join("inline.csv");
    assert!(rivalnet(&["simulate", "--config", &cfg, "--out", &inline.display().to_string()]).status.success());
    let series = dir.path().join("inline.timeseries.csv");
    assert!(series.exists() && dir.path().join("inline.summary.csv").exists());
    let offline = dir.path().join("offline.csv");
    let out = rivalnet(&[
        "analyze",
        "--config",
        &cfg,
        "--input",
        &series.display().to_string(),
        "--out",
        &offline.display().to_string(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let body = |p: &Path| -> Vec<String> {
        fs::read_to_string(p).unwrap().lines().filter(|l| !l.starts_with('#')).map(String::from).collect()
    };
    assert_eq!(body(&inline), body(&offline));
    assert_eq!(body(&offline)[0], "replicate,t,indicator");
}

#[test]
fn generate_writes_edge_list() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sim.toml", SMALL_SIM);
    let edges = dir.path().join("net.edges");
    let out = rivalnet(&["generate", "--config", &cfg, "--out", &edges.display().to_string(), "--replicate", "1"]);
    assert!(out.status.success());
    let text = fs::read_to_string(&edges).unwrap();
    let n = text.lines().filter(|l| !l.starts_with('#')).count();
    assert!(n > 300, "{n} edges");
    assert!(fs::read_to_string(dir.path().join("net.manifest")).unwrap().contains("replicate = 1"));
}
