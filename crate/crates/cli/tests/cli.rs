use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_structseg"))
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

#[test]
fn synth_then_run_is_reproducible() {
    let d = tempfile::tempdir().unwrap();
    let img = d.path().join("img");
    let st = bin().args(["synth", "line-grid", "--out"]).arg(&img).args(["--width", "40", "--height", "40", "--spacing", "12", "--weak-segments", "2", "--distractors", "2"]).status().unwrap();
    assert!(st.success());
    let cfg = d.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"field": "img/field.raw", "gt": "img/gt.pgm", "output_dir": "out", "n": 4, "seed": 11, "patch": {"size": 16, "count": 20, "seed": 2}}"#).unwrap();
    let first = bin().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let a = snapshot(&d.path().join("out"));
    std::fs::remove_dir_all(d.path().join("out")).unwrap();
    assert!(bin().args(["run", "--config"]).arg(&cfg).status().unwrap().success());
    let b = snapshot(&d.path().join("out"));
    assert_eq!(a, b);
    for name in ["family.json", "persistence.csv", "report.json", "segmentation.pgm", "sample_003.pgm", "uncertainty_empirical.raw", "uncertainty_analytic.raw", "skeleton.csv"] {
        assert!(a.contains_key(name), "{name}");
    }

    let m = bin().args(["metrics", "--pred"]).arg(d.path().join("out/segmentation.pgm")).arg("--gt").arg(img.join("gt.pgm")).output().unwrap();
    assert!(m.status.success());
    let v: serde_json::Value = serde_json::from_slice(&m.stdout).unwrap();
    assert!(v["dice"].as_f64().unwrap() > 0.5);
    assert_eq!(v["patch_params"]["size"], 40);
}

#[test]
fn missing_input_exits_with_error_json() {
    let d = tempfile::tempdir().unwrap();
    let out = bin().args(["run", "--field", "/no/such/field.pgm", "--output-dir"]).arg(d.path()).args(["--mu", "0.1", "--sigma", "0.05"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(v["error"], "IoFailure");
    assert_eq!(v["path"], "/no/such/field.pgm");
}
