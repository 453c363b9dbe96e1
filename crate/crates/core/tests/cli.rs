use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_relay-aoi");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn small_config(dir: &Path) -> String {
    let path = dir.join("small.cfg");
    fs::write(
        &path,
        "# four devices behind one relay\nM = 4\nN = 1\nL = 2\nK = 1\nT = 8\n",
    )
    .unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for (out, extra) in [(&a, None), (&b, Some("--sequential"))] {
        let mut args = vec![
            "simulate",
            "--config",
            &cfg,
            "--seeds",
            "2",
            "--episodes",
            "30",
            "--out",
            out.to_str().unwrap(),
        ];
        args.extend(extra);
        ok(&args);
    }
    for file in ["results.csv", "trace.csv"] {
        let x = fs::read(a.join(file)).unwrap();
        assert_eq!(x, fs::read(b.join(file)).unwrap(), "{file} differs");
    }
    let results = fs::read_to_string(a.join("results.csv")).unwrap();
    // header plus four baselines over two seeds
    assert_eq!(results.lines().count(), 1 + 4 * 2);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "simulate");
    assert_eq!(manifest["scenario"]["devices"], 4);
}

#[test]
fn action_space_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    ok(&["action-space", "--devices", "16", "--out", out]);
    let csv = fs::read_to_string(dir.path().join("action_space.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("M,N,L,K,combinatorial,linear"));
    assert_eq!(lines.next(), Some("16,1,8,8,165636900,32"));
}

#[test]
fn bad_input_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let cases: [&[&str]; 4] = [
        &["simulate", "--scheduler", "oracle", "--out", out],
        &["simulate", "--mode", "lossy", "--out", out],
        &[
            "evaluate",
            "--scheduler",
            "vppo",
            "--episodes",
            "2",
            "--out",
            out,
        ],
        &["sweep", "--var", "Q", "--values", "1,2", "--out", out],
    ];
    for args in cases {
        let res = run(args);
        assert!(!res.status.success(), "{args:?} should fail");
        assert!(!res.stderr.is_empty());
    }
    let bad_cfg = dir.path().join("bad.cfg");
    fs::write(&bad_cfg, "M = 4\nL 2\n").unwrap();
    let res = run(&[
        "simulate",
        "--config",
        bad_cfg.to_str().unwrap(),
        "--out",
        out,
    ]);
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("line 2"));
}

#[test]
fn train_evaluate_transfer_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let train_out = dir.path().join("train");
    let common = [
        "--config",
        &cfg,
        "--seeds",
        "1",
        "--episodes",
        "5",
        "--hidden",
        "8",
    ];
    let mut args = vec![
        "train",
        "--train-episodes",
        "64",
        "--out",
        train_out.to_str().unwrap(),
    ];
    args.extend(common);
    ok(&args);
    let ckpt = train_out.join("policy_final.ckpt");
    assert!(ckpt.exists());
    let log = fs::read_to_string(train_out.join("training_log.csv")).unwrap();
    assert!(log.lines().count() > 1);

    let eval_out = dir.path().join("eval");
    ok(&[
        "evaluate",
        "--config",
        &cfg,
        "--scheduler",
        "vppo,maf_mad",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--seeds",
        "1",
        "--episodes",
        "5",
        "--out",
        eval_out.to_str().unwrap(),
    ]);
    let results = fs::read_to_string(eval_out.join("results.csv")).unwrap();
    assert!(results.lines().any(|l| l.starts_with("vppo,")));

    let transfer_out = dir.path().join("transfer");
    let mut args = vec![
        "transfer",
        "--transfer-mode",
        "adapt",
        "--perturb",
        "periodicity",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--train-episodes",
        "32",
        "--out",
        transfer_out.to_str().unwrap(),
    ];
    args.extend(common);
    ok(&args);
    assert!(transfer_out.join("policy_final.ckpt").exists());

    // a checkpoint trained for four devices does not fit eight
    let res = run(&[
        "evaluate",
        "--scheduler",
        "vppo",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--episodes",
        "2",
        "--out",
        dir.path().join("mismatch").to_str().unwrap(),
    ]);
    assert!(!res.status.success());
}
