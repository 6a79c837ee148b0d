use std::cmp::Ordering;

use bagcq_core::gadgets::{alpha_witness, beta_witness, build_alpha, build_beta};
use bagcq_core::qalgebra::{power, product};
use bagcq_core::random::random_database_stream;
use bagcq_core::{compare_counts, hom_count, Count, Database, Query, QueryExpr, Schema, Term};
use num_bigint::BigUint;

fn edge_schema() -> Schema {
    Schema::new().with_relation("E", 2).unwrap()
}

fn clique(n: usize, loops: bool) -> Database {
    let mut d = Database::new(edge_schema());
    let names: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
    for v in &names {
        d.add_element(v);
    }
    for a in &names {
        for b in &names {
            if loops || a != b {
                d.add_fact("E", &[a.as_str(), b.as_str()]).unwrap();
            }
        }
    }
    d
}

fn path(vars: &[&str]) -> Query {
    let mut q = Query::new(edge_schema());
    for w in vars.windows(2) {
        q.atom("E", vec![Term::var(w[0]), Term::var(w[1])]).unwrap();
    }
    q
}

#[test]
fn triangle_in_a_clique() {
    let mut q = path(&["x", "y", "z"]);
    q.atom("E", vec![Term::var("z"), Term::var("x")]).unwrap();
    assert_eq!(hom_count(&q, &clique(3, false)).unwrap(), BigUint::from(6u32));
    assert_eq!(hom_count(&q, &clique(4, false)).unwrap(), BigUint::from(24u32));
    assert_eq!(hom_count(&q, &clique(2, false)).unwrap(), BigUint::from(0u32));
}

#[test]
fn paths_in_a_looped_clique() {
    let q = path(&["a", "b", "c", "d"]);
    assert_eq!(hom_count(&q, &clique(4, true)).unwrap(), BigUint::from(256u32));
}

#[test]
fn inequality_removes_diagonal() {
    let mut q = path(&["x", "y"]);
    q.push_neq(Term::var("x"), Term::var("y")).unwrap();
    assert_eq!(hom_count(&q, &clique(5, true)).unwrap(), BigUint::from(20u32));
}

#[test]
fn counts_are_multiplicative_over_products() {
    let q = path(&["x", "y", "z"]);
    let d1 = clique(2, true);
    let d2 = clique(3, false);
    let lhs = hom_count(&q, &product(&d1, &d2).unwrap()).unwrap();
    assert_eq!(lhs, hom_count(&q, &d1).unwrap() * hom_count(&q, &d2).unwrap());
}

#[test]
fn huge_powers_compare_exactly() {
    let e = power(QueryExpr::leaf(path(&["x", "y"])), BigUint::from(10u32).pow(30));
    let a = e.eval(&clique(3, true)).unwrap();
    let b = e.eval(&clique(3, false)).unwrap();
    assert_eq!(compare_counts(&a, &b), Ordering::Greater);
    assert_eq!(compare_counts(&a.mul(&Count::from_u64(2)), &a), Ordering::Greater);
    assert_eq!(compare_counts(&a, &a.clone()), Ordering::Equal);
}

#[test]
fn beta_witness_attains_the_multiplier() {
    let g = build_beta(3).unwrap();
    let (s, b) = g.counts(&beta_witness(3).unwrap()).unwrap();
    assert_eq!(s * g.multiplier.denom(), b * g.multiplier.numer());
}

#[test]
fn alpha_is_bounded_by_its_multiplier() {
    let g = build_alpha(2).unwrap();
    let schema = g.q_s.schema().merge(g.q_b.schema()).unwrap();
    let (s, b) = g.counts(&alpha_witness(2).unwrap()).unwrap();
    assert!(b > BigUint::from(0u32));
    assert_eq!(s, b * 2u32);
    for trial in 0..40 {
        let d = random_database_stream(&schema, 3, 0.5, 11, trial, true).unwrap();
        let (s, b) = g.counts(&d).unwrap();
        assert!(s <= b * 2u32);
    }
}
