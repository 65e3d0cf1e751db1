use std::path::Path;
use std::process::{Command, Output};

fn relaxlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relaxlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn tableau_list_and_verify() {
    let out = relaxlab(&["tableau", "list"]);
    assert!(out.status.success());
    let text = stdout(&out);
    for name in ["ars111", "ars222", "ars443", "bhr553s"] {
        assert!(text.contains(name));
    }

    let out = relaxlab(&["tableau", "verify", "ars222"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("sum_b_c = 1/2"));
    assert!(text.contains("order     2"));

    let out = relaxlab(&["tableau", "verify", "no-such-scheme"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn tableau_file_with_structure_violation() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.txt");
    std::fs::write(&good, "2\n0 0\n1 0\n0 0\n0 1\n1 0\n0 1\n").unwrap();
    let out = relaxlab(&["tableau", "verify", good.to_str().unwrap()]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(stdout(&out).contains("CK yes"));

    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "2\n0 1\n1 0\n0 0\n0 1\n1 0\n0 1\n").unwrap();
    let out = relaxlab(&["tableau", "verify", bad.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(!out.stderr.is_empty());
}

#[test]
fn system_check_builtin_and_files() {
    for model in ["broadwell", "grad:5"] {
        let out = relaxlab(&["system", "check", model]);
        assert!(out.status.success(), "{model}");
        assert!(stdout(&out).contains("condition (iii)"));
    }
    assert_eq!(
        relaxlab(&["system", "check", "grad:2"]).status.code(),
        Some(3)
    );

    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, text: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p
    };
    let a = write("a.txt", "2 2\n0 1\n1 0\n");
    let q = write("q.txt", "2 2\n0 0\n0 -1\n");
    let args = |q: &Path| {
        vec![
            "system".to_string(),
            "check".into(),
            "--a".into(),
            a.to_str().unwrap().into(),
            "--q".into(),
            q.to_str().unwrap().into(),
            "--r".into(),
            "1".into(),
        ]
    };
    let run = |v: Vec<String>| {
        Command::new(env!("CARGO_BIN_EXE_relaxlab"))
            .args(v)
            .output()
            .unwrap()
    };
    assert!(run(args(&q)).status.success());
    let p = write("p.txt", "2 2\n1 0\n0 1\n");
    let a0 = write("a0.txt", "2 2\n1 0\n0 1\n");
    let unstable = write("q2.txt", "2 2\n0 0\n0 1\n");
    let mut v = args(&unstable);
    v.extend([
        "--p".into(),
        p.to_str().unwrap().into(),
        "--a0".into(),
        a0.to_str().unwrap().into(),
    ]);
    let out = run(v);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("FAIL"));
}

#[test]
fn run_writes_grid_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("u.csv");
    let out = relaxlab(&[
        "run",
        "--model",
        "broadwell",
        "--scheme",
        "ars222",
        "--eps",
        "1e-3",
        "--dt",
        "0.01",
        "--t0",
        "0.5",
        "--t",
        "1",
        "--n",
        "8",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x,comp1,comp2,comp3");
    assert_eq!(lines.len(), 1 + 18);

    let out = relaxlab(&[
        "run",
        "--model",
        "broadwell",
        "--scheme",
        "ars222",
        "--eps",
        "1",
        "--dt",
        "0.3",
        "--t",
        "1",
        "--n",
        "8",
    ]);
    assert_eq!(out.status.code(), Some(2), "non-commensurate step");
}

#[test]
fn converge_with_config_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("study.toml");
    std::fs::write(
        &cfg,
        "model = \"grad:5\"\nschemes = [\"ars222\", \"bhr553s\"]\neps_count = 3\ndt_levels = 3\nn = 8\nt0 = 0.5\nt = 1.0\n",
    )
    .unwrap();
    let table = dir.path().join("table.csv");
    let fits = dir.path().join("fits.csv");
    let out = relaxlab(&[
        "converge",
        "--config",
        cfg.to_str().unwrap(),
        "--schemes",
        "ars222",
        "--out",
        table.to_str().unwrap(),
        "--fits",
        fits.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let parsed = relaxlab::lab::read_table(&std::fs::read_to_string(&table).unwrap()).unwrap();
    assert_eq!(parsed.len(), 9);
    assert!(parsed
        .rows
        .iter()
        .all(|r| r.model == "grad:5" && r.scheme == "ars222"));
    let fit_text = std::fs::read_to_string(&fits).unwrap();
    assert!(fit_text.starts_with("scheme,epsilon,slope,residual\n"));
    assert!(fit_text.contains("ars222,uniform,"));

    let out = relaxlab(&["converge", "--config", cfg.to_str().unwrap(), "--t", "0.25"]);
    assert_eq!(out.status.code(), Some(3));
    let out = relaxlab(&["converge", "--schemes", "rk4", "--n", "8"]);
    assert_eq!(out.status.code(), Some(3));
    let missing = dir.path().join("missing.toml");
    let out = relaxlab(&["converge", "--config", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}
