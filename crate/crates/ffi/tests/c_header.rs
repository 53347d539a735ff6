//! Compiles and runs a small C program against the generated header and the
//! static library.

use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <math.h>
#include <stdio.h>
#include "mmi_lab.h"

int main(void) {
    MmiMatrix *m = NULL;
    if (mmi_matrix_measured_chip(&m) != MMI_STATUS_OK) return 1;
    double q[10], c[10];
    if (mmi_coincidence_table(m, 0, 1, MMI_TABLE_QUANTUM, false, 0.0, q, 10) != MMI_STATUS_OK) return 2;
    if (mmi_coincidence_table(m, 0, 1, MMI_TABLE_CLASSICAL, false, 0.0, c, 10) != MMI_STATUS_OK) return 3;
    double qx[6], cx[6];
    int n = 0;
    for (int k = 0, idx = 0; k < 4; k++)
        for (int l = k; l < 4; l++, idx++)
            if (k != l) { qx[n] = q[idx]; cx[n] = c[idx]; n++; }
    double s = 0.0;
    if (mmi_similarity(qx, cx, 6, &s) != MMI_STATUS_OK) return 4;
    if (mmi_coincidence_table(m, 0, 0, MMI_TABLE_QUANTUM, false, 0.0, q, 10) != MMI_STATUS_INVALID_ARGUMENT) return 5;
    char msg[128];
    size_t len = mmi_last_error_message(msg, sizeof msg);
    mmi_matrix_free(m);
    printf("%.4f %zu %s\n", s, len, mmi_version());
    return fabs(s - 0.901) < 0.003 ? 0 : 6;
}
"#;

#[test]
fn c_program_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let exe = std::env::current_exe().unwrap();
    // `cargo test` refreshes the copy in deps/; the uplifted one can be stale.
    let deps_dir = exe.parent().unwrap();
    let lib = [deps_dir, deps_dir.parent().unwrap()]
        .iter()
        .map(|d| d.join("libmmi_lab_ffi.a"))
        .find(|p| p.exists())
        .unwrap_or_default();
    if !lib.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!(
            "skipping: no C compiler or static library at {}",
            lib.display()
        );
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(&src, PROGRAM).unwrap();
    let bin = dir.path().join("main");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = Command::new(&bin).output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        out.status.success(),
        "exit {:?}: {stdout}",
        out.status.code()
    );
    assert!(stdout.starts_with("0.901"), "{stdout}");
}
