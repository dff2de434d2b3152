//! Compiles a small C program against the generated header and the static
//! library, then runs it.

use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "hydropseudo.h"

int main(void) {
    HpConfig *cfg = NULL;
    if (hp_config_from_json("{\"mode\":\"n2-conditions\",\"trials\":1}", &cfg) != HP_STATUS_OK) return 2;
    HpReport *report = NULL;
    if (hp_run(cfg, &report) != HP_STATUS_OK) return 3;
    bool passed = false;
    size_t count = 0;
    hp_report_passed(report, &passed);
    hp_report_suite_count(report, &count);
    char name[64];
    hp_report_suite_name(report, 0, name, sizeof name, NULL);
    printf("%s %zu %s %s\n", hp_version(), count, passed ? "pass" : "fail", name);
    hp_report_free(report);
    hp_config_free(cfg);

    HpTheta *theta = NULL;
    if (hp_theta_new(0.0, 0.01, &theta) != HP_STATUS_CONFIG) return 4;
    size_t needed = 0;
    hp_last_error(NULL, 0, &needed);
    return needed > 1 ? 0 : 5;
}
"#;

fn artifact_dir() -> PathBuf {
    // target/<profile>/deps/c_program-<hash>
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn header_compiles_and_links() {
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let lib = artifact_dir().join("libhydropseudo_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let dir = std::env::temp_dir().join(format!("hydropseudo-c-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let src = dir.join("main.c");
    let exe = dir.join("main");
    std::fs::write(&src, PROGRAM).unwrap();
    let status = Command::new("cc")
        .args(["-std=c11", "-Wall", "-Werror", "-o"])
        .arg(&exe)
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl"])
        .status()
        .expect("C compiler available");
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    std::fs::remove_dir_all(&dir).ok();
    assert_eq!(out.status.code(), Some(0));
    let line = String::from_utf8(out.stdout).unwrap();
    assert_eq!(line.trim(), format!("{} 4 pass n2/closure", env!("CARGO_PKG_VERSION")));
}
