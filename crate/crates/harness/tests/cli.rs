use std::path::Path;
use std::process::{Command, Output};

use bagcq_core::QueryExpr;
use bagcq_harness::formats::{write_query, write_query_expr};

fn bagcq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bagcq")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 temp path")
}

#[test]
fn eval_prints_factored_and_decimal() {
    let dir = tempfile::tempdir().unwrap();
    let q = dir.path().join("q.cq");
    let d = dir.path().join("d.db");
    std::fs::write(&q, "atom E(x, y)\natom E(y, z)\n").unwrap();
    std::fs::write(&d, "elem a b\nfact E(a, b)\nfact E(b, a)\nfact E(a, a)\n").unwrap();
    let o = bagcq(&["eval", "-q", p(&q), "-d", p(&d)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("count: 5\n"), "{}", stdout(&o));
    assert!(stdout(&o).contains("decimal: 5\n"));

    let x = dir.path().join("e.qx");
    std::fs::write(&x, "(pow (leaf \"q.cq\") 3)").unwrap();
    let o = bagcq(&["eval", "-q", p(&x), "-d", p(&d)]);
    assert!(stdout(&o).contains("count: 5^3\n"), "{}", stdout(&o));
    assert!(stdout(&o).contains("decimal: 125\n"));
}

#[test]
fn reduce_then_classify_and_search() {
    let dir = tempfile::tempdir().unwrap();
    let poly = dir.path().join("q.poly");
    std::fs::write(&poly, "vars 2\nterm 1 2\nterm -1\n").unwrap();
    let out = dir.path().join("red");
    let o = bagcq(&["reduce", "-p", p(&poly), "-o", p(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("c = 3^22 * 5^21"), "{}", stdout(&o));
    for f in ["phi_s.cq", "phi_b.qx", "c.count", "arena.db", "instance.poly.json-lines"] {
        assert!(out.join(f).exists(), "{f}");
    }

    let db = dir.path().join("correct.db");
    let mut text = std::fs::read_to_string(out.join("arena.db")).unwrap();
    text.push_str("fact X(b1, u)\nfact X(b2, w)\n");
    std::fs::write(&db, text).unwrap();
    let o = bagcq(&["classify", "-d", p(&db), "-i", p(&out)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("classification: Correct"));
    assert!(stdout(&o).contains("x1 = 1, x2 = 1"));
    assert!(stdout(&o).contains("violates the instance: true"));

    let o = bagcq(&["search", "-i", p(&out), "--trials", "20", "--max-domain", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn gadget_directories_and_search() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("alpha");
    let o = bagcq(&["gadget", "alpha", "--param", "2", "-o", p(&out)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("witness: q_s = 48, q_b = 24"), "{}", stdout(&o));
    let o = bagcq(&["eval", "-q", p(&out.join("phi_s.cq")), "-d", p(&out.join("witness.db"))]);
    assert!(stdout(&o).contains("decimal: 48"));
    let o = bagcq(&["search", "-i", p(&out), "--trials", "200", "--max-domain", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));

    // Claiming α_s ≥ 3·α_b is refuted wherever α_b ≠ 0.
    let g = bagcq_core::gadgets::build_alpha(2).unwrap();
    let swapped = dir.path().join("swapped");
    std::fs::create_dir(&swapped).unwrap();
    std::fs::write(swapped.join("phi_s.cq"), write_query(&g.q_b)).unwrap();
    std::fs::write(swapped.join("phi_b.qx"), write_query_expr(&QueryExpr::leaf(g.q_s))).unwrap();
    std::fs::write(swapped.join("c.count"), "3\n").unwrap();
    let o = bagcq(&["search", "-i", p(&swapped), "--trials", "2000", "--max-domain", "2", "--max-facts", "16"]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert!(stdout(&o).starts_with("violation: "));
}

#[test]
fn verify_and_exit_codes() {
    let o = bagcq(&["verify", "--suite", "beta", "--trials", "30", "--seed", "42"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("suite beta: 30 trials, 0 failures"));
    assert_eq!(bagcq(&["verify", "--suite", "nope"]).status.code(), Some(2));
    assert_eq!(bagcq(&["frobnicate"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cq");
    std::fs::write(&bad, "atom R(x\n").unwrap();
    let d = dir.path().join("d.db");
    std::fs::write(&d, "elem a\n").unwrap();
    assert_eq!(bagcq(&["eval", "-q", p(&bad), "-d", p(&d)]).status.code(), Some(2));
}

#[test]
fn transforms() {
    let dir = tempfile::tempdir().unwrap();
    let q = dir.path().join("q.cq");
    std::fs::write(&q, "atom R(x, y)\nneq x y\n").unwrap();
    let o = bagcq(&["transform", "strip-neq", "-q", p(&q)]);
    assert_eq!(stdout(&o), "atom R(x, y)\n");

    let d = dir.path().join("d.db");
    std::fs::write(&d, "elem 1 2\nfact R(1, 2)\n").unwrap();
    let o = bagcq(&["transform", "blowup", "-d", p(&d), "-k", "2"]);
    assert_eq!(stdout(&o).matches("fact R").count(), 4);
    let o = bagcq(&["transform", "product", "-d", p(&d), "--with", p(&d)]);
    assert_eq!(stdout(&o).matches("fact R").count(), 1);

    let qb = dir.path().join("qb.cq");
    std::fs::write(&qb, "atom S(z, z)\n").unwrap();
    let out = dir.path().join("w.db");
    let o = bagcq(&["transform", "eliminate-neq", "--q-s", p(&q), "--q-b", p(&qb), "-d", p(&d), "-o", p(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = bagcq(&["eval", "-q", p(&q), "-d", p(&out)]);
    assert!(stdout(&o).contains("decimal: 4"), "{}", stdout(&o));
}
