use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mcmult(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mcmult"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn count_params_prints_five_descending_rows() {
    let o = mcmult(&["count-params"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    let rows: Vec<(String, usize)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let (v, n) = l.split_once(',').unwrap();
            (v.to_string(), n.parse().unwrap())
        })
        .collect();
    let names: Vec<&str> = rows.iter().map(|r| r.0.as_str()).collect();
    assert_eq!(names, ["Dense", "LocalDense", "MCMulT", "MulT", "Global"]);
    assert!(rows.windows(2).all(|w| w[0].1 > w[1].1), "{text}");
}

#[test]
fn unknown_config_key_exits_2_and_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "dim=8\nblokcs=3\n").unwrap();
    let o = mcmult(&["count-params", "--config", path(&cfg)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("blokcs"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_2_and_help_exits_0() {
    assert_eq!(code(&mcmult(&["count-params", "--no-such-flag"])), 2);
    assert_eq!(code(&mcmult(&["frobnicate"])), 2);
    assert_eq!(code(&mcmult(&["--dim", "x", "count-params"])), 2);
    let help = mcmult(&["--help"]);
    assert_eq!(code(&help), 0);
    for cmd in ["gen-data", "train", "eval", "ablate", "count-params", "grad-check", "export-attn"] {
        assert!(stdout(&help).contains(cmd), "{cmd}");
    }
}

#[test]
fn missing_config_file_exits_3() {
    let o = mcmult(&["count-params", "--config", "/no/such/file.cfg"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn eval_without_params_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = mcmult(&["eval", "--out", path(dir.path()), "--samples", "50"]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

#[test]
fn untrained_model_is_at_chance_and_flags_beat_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "variant=dense\nblocks=3\nlayers=1\nepochs=7\n").unwrap();
    let common = ["--config", path(&cfg), "--out", path(&out), "--variant", "mcmult", "--epochs", "0"];

    let o = mcmult(&[&["train"], &common[..]].concat());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["params.json", "history.csv", "metrics.csv", "config.txt"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let echo = fs::read_to_string(out.join("config.txt")).unwrap();
    assert!(echo.contains("variant=MCMulT\n"), "{echo}");
    assert!(echo.contains("blocks=3\n"));
    assert!(echo.contains("epochs=0\n"));
    let history = fs::read_to_string(out.join("history.csv")).unwrap();
    assert_eq!(history.lines().count(), 1);

    let o = mcmult(&[&["eval"], &common[..]].concat());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("acc7,acc2,f1,mae,corr"));
    let acc2: f64 = lines.next().unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((acc2 - 0.5).abs() <= 0.1, "{text}");
    assert!(text.contains("Acc2"), "{text}");

    // The echoed config alone reproduces the evaluation.
    let again = mcmult(&["eval", "--config", path(&out.join("config.txt"))]);
    assert_eq!(code(&again), 0, "{}", stderr(&again));
    assert_eq!(stdout(&again), text);
}

#[test]
fn generated_dataset_trains_through_the_loader() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let out = dir.path().join("run");
    let small = ["--samples", "40", "--dim", "4", "--blocks", "1", "--layers", "1"];
    let o = mcmult(&[&["gen-data", "--out", path(&data)], &small[..]].concat());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(data.join("manifest").exists());
    assert!(data.join("39.A.csv").exists());

    let o = mcmult(&[&["train", "--data", path(&data), "--out", path(&out), "--epochs", "2"], &small[..]].concat());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let history = fs::read_to_string(out.join("history.csv")).unwrap();
    assert_eq!(history.lines().count(), 3);
    assert!(history.starts_with("epoch,train_loss,acc7,acc2,f1,mae,corr,wall_seconds\n"));
}

#[test]
fn grad_check_exit_code_follows_the_tolerance() {
    let base = ["grad-check", "--dim", "4", "--blocks", "1", "--layers", "0"];
    let loose = mcmult(&[&base[..], &["--set", "grad_tolerance=0.1"]].concat());
    assert_eq!(code(&loose), 0, "{}", stderr(&loose));
    assert!(stdout(&loose).contains("max relative error"));
    let strict = mcmult(&[&base[..], &["--set", "grad_tolerance=1e-15"]].concat());
    assert_eq!(code(&strict), 1, "{}", stdout(&strict));
}

#[test]
fn export_attn_writes_csv_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let common = [
        "--out", path(&out), "--samples", "30", "--dim", "4", "--blocks", "2", "--layers", "1",
    ];
    let o = mcmult(&[&["train", "--epochs", "0"], &common[..]].concat());
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let o = mcmult(&[&["export-attn", "--branch", "V->L", "--block-index", "2", "--head-index", "1"], &common[..]].concat());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("attn_VL_b2_h1_s0.csv")).unwrap();
    for row in csv.lines() {
        let sum: f64 = row.split(',').map(|v| v.parse::<f64>().unwrap()).sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }
    let meta = fs::read_to_string(out.join("attn_VL_b2_h1_s0.meta")).unwrap();
    assert!(meta.contains("branch=V->L\n") && meta.contains("block=2\n") && meta.contains("head=1\n"));

    let o = mcmult(&[&["export-attn", "--block-index", "3"], &common[..]].concat());
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    assert!(stderr(&o).contains("block 3"), "{}", stderr(&o));
}

#[test]
fn ablate_smoke_run_writes_a_complete_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("abl");
    let o = mcmult(&[
        "ablate", "--axis", "variants", "--out", path(&out), "--samples", "40", "--epochs", "1", "--dim", "4",
        "--blocks", "2", "--layers", "1", "--seeds", "3,4",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let table = fs::read_to_string(out.join("ablation_variants.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some("arm,seed,acc7,acc2,f1,mae,corr,params,wall_seconds"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 10);
    for r in rows {
        let cols: Vec<&str> = r.split(',').collect();
        assert_eq!(cols.len(), 9);
        assert!(cols[2..].iter().all(|c| c.parse::<f64>().is_ok()), "{r}");
    }
    assert!(out.join("config.txt").exists());
}
