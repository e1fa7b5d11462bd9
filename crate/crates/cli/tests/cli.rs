use std::path::Path;
use std::process::{Command, Output};

fn srank1(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_srank1"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn field(report: &str, key: &str) -> f64 {
    report
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key},")))
        .unwrap_or_else(|| panic!("no {key} in {report}"))
        .parse()
        .unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn gen_then_approx_and_refine() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t.sten");
    let o = srank1(&["gen", "sparse-cp", "--dims", "8,8,8", "--rank", "3", "--seed", "4", "--out", p(&t)]);
    assert!(o.status.success(), "{o:?}");

    let mut values = Vec::new();
    for alg in ["A", "B", "C", "D"] {
        let o = srank1(&["approx", "--alg", alg, "--input", p(&t), "--budget", "3,3,3"]);
        assert!(o.status.success(), "{o:?}");
        let r = stdout(&o);
        let v = field(&r, "value");
        assert!(v > 0.0 && v <= field(&r, "upper_bound") * (1.0 + 1e-9));
        values.push(v);
    }

    let o = srank1(&["refine", "--init", "C", "--input", p(&t), "--budget", "3,3,3"]);
    assert!(o.status.success(), "{o:?}");
    let r = stdout(&o);
    assert!(field(&r, "value") >= values[2] - 1e-12);
    assert!(field(&r, "value") >= field(&r, "init_value") - 1e-12);

    let o = srank1(&["refine", "--model", "l1", "--rho", "0.05", "--init", "random", "--input", p(&t)]);
    assert!(o.status.success(), "{o:?}");
    assert!(stdout(&o).contains("penalized_objective,"));
}

#[test]
fn oracle_dominates_algorithms_on_tiny_input() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t.sten");
    assert!(srank1(&["gen", "sparse-cp", "--dims", "4,4,4", "--rank", "2", "--out", p(&t)]).status.success());
    let oracle = field(&stdout(&srank1(&["oracle", "--input", p(&t), "--budget", "2,2,2"])), "value");
    for alg in ["A", "B", "C", "D"] {
        let v = field(&stdout(&srank1(&["approx", "--alg", alg, "--input", p(&t), "--budget", "2,2,2"])), "value");
        assert!(v <= oracle * (1.0 + 1e-9), "{alg}: {v} > {oracle}");
    }
}

#[test]
fn cluster_recovers_synthetic_groups() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let o = srank1(&["gen", "cluster", "--samples", "20", "--noise", "0.1", "--seed", "3", "--out", p(&data)]);
    assert!(o.status.success(), "{o:?}");
    let labels = dir.path().join("labels.csv");
    let o = srank1(&[
        "cluster", "--dir", p(&data), "--ranks", "4", "--budgets", "8,8", "--seed", "1", "--out", p(&labels),
    ]);
    assert!(o.status.success(), "{o:?}");

    let read = |path: &Path| -> Vec<usize> {
        let text = std::fs::read_to_string(path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("sample_index,label"));
        lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect()
    };
    let pred = read(&labels);
    let truth = read(&data.join("truth.csv"));
    assert_eq!(pred.len(), 20);
    for i in 0..20 {
        for j in 0..20 {
            assert_eq!(pred[i] == pred[j], truth[i] == truth[j], "pair ({i},{j})");
        }
    }
}

#[test]
fn bench_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("sweep.spec");
    std::fs::write(&spec, "kind = rank1-sweep\nseed = 7\ndims = 6\norders = 3\ninstances = 2\ntiming = false\n").unwrap();
    let a = srank1(&["bench", p(&spec)]);
    let b = srank1(&["bench", p(&spec)]);
    assert!(a.status.success(), "{a:?}");
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).starts_with("# kind=rank1-sweep"));
    let c = srank1(&["bench", p(&spec), "--seed", "8"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.sten");
    assert_eq!(srank1(&["approx", "--alg", "A", "--input", p(&missing)]).status.code(), Some(2));
    assert_eq!(srank1(&["approx", "--alg", "Z", "--input", p(&missing)]).status.code(), Some(2));

    let t = dir.path().join("t.sten");
    std::fs::write(&t, "3\n2 2 2\n1 2 3 4 5 6 7 8\n").unwrap();
    assert_eq!(srank1(&["approx", "--alg", "A", "--input", p(&t), "--budget", "3,1,1"]).status.code(), Some(2));

    let zero = dir.path().join("zero.sten");
    std::fs::write(&zero, "3\n2 2 2\n0 0 0 0 0 0 0 0\n").unwrap();
    assert_eq!(srank1(&["approx", "--alg", "C", "--input", p(&zero)]).status.code(), Some(3));
}
