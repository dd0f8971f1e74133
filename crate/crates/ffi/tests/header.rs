//! Compiles and runs a small C program against the generated header and
//! the static library.

use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include "slsh.h"

int main(void) {
    double values[] = {1, 0, 0.9, 0.1, -1, 0, -0.9, -0.1, 0, 1, 0.1, 0.9};
    int64_t labels[] = {0, 0, 1, 1, 2, 2};
    SlshDataset *data = NULL;
    if (slsh_dataset_new(values, labels, 6, 2, &data) != SLSH_STATUS_OK) return 1;
    SlshFitConfig cfg = slsh_fit_config_default();
    cfg.scheme = SLSH_SCHEME_PCAH;
    cfg.pca_ratio = 1.0;
    cfg.bits = 3;
    SlshModel *model = NULL;
    SlshStatus s = slsh_model_fit(data, &cfg, &model);
    if (s != SLSH_STATUS_CAPABILITY || slsh_last_error() == NULL) return 2;
    cfg.scheme = SLSH_SCHEME_LSH;
    cfg.bits = 8;
    if (slsh_model_fit(data, &cfg, &model) != SLSH_STATUS_OK) return 3;
    uint64_t words[6];
    if (slsh_model_encode(model, data, 0, words, 6) != SLSH_STATUS_OK) return 4;
    printf("%u\n", slsh_hamming(&words[0], &words[4], 8));
    slsh_model_free(model);
    slsh_dataset_free(data);
    return 0;
}
"#;

#[test]
fn c_program_links_and_runs() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found, skipping");
        return;
    };
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // test binaries live in target/<profile>/deps; the static library is one level up
    let exe = std::env::current_exe().unwrap();
    let lib_dir = exe.parent().unwrap().parent().unwrap().to_path_buf();
    let lib = lib_dir.join("libslsh_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built, skipping", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    let bin = dir.path().join("main");
    std::fs::write(&src, PROGRAM).unwrap();
    let status = Command::new(&cc)
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    let d: u32 = String::from_utf8(out.stdout).unwrap().trim().parse().unwrap();
    assert!(d <= 8);
}

fn which_cc() -> Result<String, ()> {
    for cc in ["cc", "gcc", "clang"] {
        if Command::new(cc).arg("--version").output().is_ok() {
            return Ok(cc.to_owned());
        }
    }
    Err(())
}
