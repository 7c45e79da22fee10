//! Compile and run a C program against the generated header and the
//! static library.

use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "rivalnet.h"

int main(void) {
    RnNetwork *net = NULL;
    if (rn_network_ba(100, 100, 3, 3, 3, 2, 5, 0, &net) != RN_STATUS_OK) return 10;
    RnParams p;
    rn_params_default(&p);
    p.p1_s = p.p1_w = 0.004;
    p.p2 = 0.5;
    RnSimulation *sim = NULL;
    if (rn_simulation_new(net, &p, 5, 0, &sim) != RN_STATUS_OK) return 11;
    rn_network_free(net);
    rn_simulation_step(sim, 200);
    double fs = 0, fw = 0;
    rn_simulation_fractions(sim, &fs, &fw);
    rn_simulation_free(sim);
    if (!(fs > 0.5 && fs <= 1.0 && fw > 0.0 && fw <= 1.0)) return 12;

    if (rn_network_ba(10, 10, 1, 3, 3, 2, 0, 0, &net) != RN_STATUS_INVALID_ARGUMENT) return 13;
    if (rn_last_error() == NULL || strstr(rn_last_error(), "n0") == NULL) return 14;
    printf("%s %.4f %.4f\n", rn_version(), fs, fw);
    return 0;
}
"#;

fn target_dir() -> PathBuf {
    // tests run from <target>/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

fn compiler() -> Option<&'static str> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok_and(|o| o.status.success()))
}

#[test]
fn c_program_links_and_runs() {
    let Some(cc) = compiler() else {
        eprintln!("no C compiler found, skipping");
        return;
    };
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(&src, PROGRAM).unwrap();

    let check = Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(&include)
        .arg(&src)
        .output()
        .unwrap();
    assert!(check.status.success(), "{}", String::from_utf8_lossy(&check.stderr));

    let lib = target_dir().join("librivalnet_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built, header checked only", lib.display());
        return;
    }
    let exe = dir.path().join("smoke");
    let build = Command::new(cc)
        .args(["-std=c99", "-I"])
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(build.status.success(), "{}", String::from_utf8_lossy(&build.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    let out = String::from_utf8_lossy(&run.stdout);
    assert!(out.starts_with(env!("CARGO_PKG_VERSION")), "{out}");
}
