use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cablebarrier"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn cablebarrier")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn barrier(dir: &Path, extra: &[&str]) -> Output {
    let out = dir.to_str().unwrap();
    let mut args = vec!["--out", out];
    args.extend_from_slice(extra);
    args.push("barrier");
    run(&args)
}

#[test]
fn endpoints_table_carries_residuals() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["--M", "0.1", "--out", dir.path().to_str().unwrap(), "endpoints"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("endpoints.csv")).unwrap();
    let mut lines = csv.lines();
    let header = lines.next().unwrap();
    assert!(header.contains("g_tilde") && header.contains("tangency_residual"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 12);
    for row in rows {
        assert!(row.ends_with(",true"), "{row}");
        let cols: Vec<&str> = row.split(',').collect();
        let g: f64 = cols[9].parse().unwrap();
        assert!(g.abs() < 1e-10);
    }
}

#[test]
fn invalid_parameters_are_usage_errors() {
    for m in ["-1", "0", "nan"] {
        let o = run(&["--M", m, "query", "0", "0"]);
        assert_eq!(o.status.code(), Some(2), "M={m}: {}", stderr(&o));
        assert!(stderr(&o).contains("config"), "{}", stderr(&o));
    }
    assert_eq!(run(&["--M", "abc", "endpoints"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn config_file_overrides_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("in.cfg");
    fs::write(&cfg, "# light cart\nM = 0.1\nseed = 7\ngrid_nx = 360\ngrid_ny = 480\n").unwrap();
    let out = dir.path().join("out");
    let o = run(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "9", "barrier"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let written = fs::read_to_string(out.join("run.cfg")).unwrap();
    assert!(written.contains("seed=9") || written.contains("seed = 9"), "{written}");
    let again = dir.path().join("again");
    let o = run(&["--config", out.join("run.cfg").to_str().unwrap(), "--out", again.to_str().unwrap(), "barrier"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(again.join("run.cfg")).unwrap(), written);
    assert_eq!(fs::read(again.join("model.json")).unwrap(), fs::read(out.join("model.json")).unwrap());

    fs::write(&cfg, "M = 0.1\nwidth = 3\n").unwrap();
    let o = run(&["--config", cfg.to_str().unwrap(), "endpoints"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["--config", dir.path().join("missing.cfg").to_str().unwrap(), "endpoints"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn barrier_outputs_are_complete_and_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = barrier(d.path(), &["--M", "0.1"]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(stdout(&o).contains("stopping points per period: 2"), "{}", stdout(&o));
    }
    let mut names = Vec::new();
    for entry in walk(a.path()) {
        let rel = entry.strip_prefix(a.path()).unwrap().to_path_buf();
        assert_eq!(fs::read(&entry).unwrap(), fs::read(b.path().join(&rel)).unwrap(), "{}", rel.display());
        names.push(rel.to_string_lossy().into_owned());
    }
    for f in ["endpoints.csv", "stopping_points.csv", "model.json", "barrier.svg", "run.cfg", "arcs/smoothm_k0.csv", "arcs/nonsmoothp_km1.csv"] {
        assert!(names.iter().any(|n| n == f), "missing {f} in {names:?}");
    }
    assert_eq!(names.iter().filter(|n| n.starts_with("arcs/")).count(), 12);

    let svg = fs::read_to_string(a.path().join("barrier.svg")).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
    for class in ["class=\"g0\"", "class=\"smooth\"", "class=\"nonsmooth\"", "class=\"switch\"", "class=\"exit\"", "class=\"stop\""] {
        assert!(svg.contains(class), "{class}");
    }
    let arc = fs::read_to_string(a.path().join("arcs/smoothm_k0.csv")).unwrap();
    let first = arc.lines().nth(1).unwrap();
    let digits = first.split(',').nth(1).unwrap().split('e').next().unwrap().replace(['-', '.'], "");
    assert_eq!(digits.len(), 17, "{first}");
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let path = e.unwrap().path();
        if path.is_dir() {
            out.extend(walk(&path));
        } else {
            out.push(path);
        }
    }
    out.sort();
    out
}

#[test]
fn query_examples() {
    let dir = tempfile::tempdir().unwrap();
    assert!(barrier(dir.path(), &["--M", "0.1"]).status.success());
    let model = dir.path().join("model.json");
    let m = model.to_str().unwrap();
    let q = |t1: &str, t2: &str| run(&["query", "--model", m, t1, t2]);

    let o = q("0", "0");
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("OutsideG"), "{}", stdout(&o));
    let o = q("3.14159", "0");
    assert!(stdout(&o).starts_with("Interior"), "{}", stdout(&o));
    let o = q("-3.14159", "0");
    assert!(stdout(&o).starts_with("Interior"), "{}", stdout(&o));

    let arc = fs::read_to_string(dir.path().join("arcs/smoothm_k0.csv")).unwrap();
    let rows: Vec<&str> = arc.lines().skip(1).collect();
    let row: Vec<&str> = rows[rows.len() / 2].split(',').collect();
    let o = q(row[1], row[2]);
    assert!(stdout(&o).starts_with("Boundary"), "{} at {row:?}", stdout(&o));

    let o = q("0", "1e3");
    assert!(!o.status.success());
    assert!(stderr(&o).contains("setassembly"), "{}", stderr(&o));

    let o = run(&["--M", "0.1", "query", "3.14159", "0"]);
    assert!(stdout(&o).starts_with("Interior"), "{}", stdout(&o));
}

#[test]
fn stopping_points_listing() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["--M", "0.1", "--out", dir.path().to_str().unwrap(), "stopping-points"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 6, "{text}");
    assert!(text.contains("-2.1496737"), "{text}");
    let o = run(&["--M", "0.5", "--out", dir.path().to_str().unwrap(), "stopping-points"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 0);
}

#[test]
fn oracle_agrees_on_the_light_cart() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["--M", "0.1", "--out", dir.path().to_str().unwrap(), "oracle"]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("0 disagreements"));
    let csv = fs::read_to_string(dir.path().join("oracle.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 60 * 60);
}

#[test]
fn plot_writes_svg() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["--out", dir.path().to_str().unwrap(), "plot"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let svg = fs::read_to_string(dir.path().join("barrier.svg")).unwrap();
    assert!(svg.contains("class=\"bounded\""));
    assert!(svg.trim_end().ends_with("</svg>"));
}
