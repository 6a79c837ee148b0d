//! Query and structure algebra.
//!
//! [`QueryExpr`] trees combine queries by disjoint conjunction and
//! exponentiation; they are evaluated by multiplying and powering factored
//! counts, so exponents far beyond anything materializable are fine.
//! The structure side provides blow-up and product, which scale counts of
//! inequality-free queries by `k^j` and square them respectively.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::count::Count;
use crate::error::{Error, Result};
use crate::homcount::hom_count;
use crate::relcore::{Atom, Database, ElemId, Query, Schema, Term};

/// Default cap on the number of variables a flattened expression may have.
pub const DEFAULT_FLATTEN_CAP: usize = 10_000;

/// Default cap on the product exponent searched by
/// [`inequality_elimination_witness`].
pub const DEFAULT_K_CAP: u32 = 16;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum QueryExpr {
    Leaf(Query),
    DisjointAnd(Vec<QueryExpr>),
    Power(Box<QueryExpr>, BigUint),
}

impl QueryExpr {
    pub fn leaf(q: Query) -> QueryExpr {
        QueryExpr::Leaf(q)
    }

    pub fn dand(items: Vec<QueryExpr>) -> QueryExpr {
        QueryExpr::DisjointAnd(items)
    }

    /// Exact count on `d`: products for disjoint conjunction, powers for `↑k`.
    pub fn eval(&self, d: &Database) -> Result<Count> {
        match self {
            QueryExpr::Leaf(q) => Ok(Count::from_biguint(hom_count(q, d)?)),
            QueryExpr::DisjointAnd(items) => {
                let mut acc = Count::one();
                for e in items {
                    let c = e.eval(d)?;
                    if c.is_zero() {
                        return Ok(c);
                    }
                    acc = acc.mul(&c);
                }
                Ok(acc)
            }
            QueryExpr::Power(e, k) => {
                if k.is_zero() {
                    return Ok(Count::one());
                }
                Ok(e.eval(d)?.pow(k))
            }
        }
    }

    /// Union of the leaf schemas.
    pub fn schema(&self) -> Result<Schema> {
        match self {
            QueryExpr::Leaf(q) => Ok(q.schema().clone()),
            QueryExpr::DisjointAnd(items) => {
                let mut s = Schema::new();
                for e in items {
                    s = s.merge(&e.schema()?)?;
                }
                Ok(s)
            }
            QueryExpr::Power(e, _) => e.schema(),
        }
    }

    /// Number of variables of the flattened query.
    pub fn materialized_variables(&self) -> BigUint {
        match self {
            QueryExpr::Leaf(q) => BigUint::from(q.num_variables()),
            QueryExpr::DisjointAnd(items) => items.iter().map(QueryExpr::materialized_variables).sum(),
            QueryExpr::Power(e, k) => e.materialized_variables() * k,
        }
    }

    pub fn has_inequalities(&self) -> bool {
        match self {
            QueryExpr::Leaf(q) => !q.inequalities().is_empty(),
            QueryExpr::DisjointAnd(items) => items.iter().any(QueryExpr::has_inequalities),
            QueryExpr::Power(e, _) => e.has_inequalities(),
        }
    }

    /// Materializes the expression as one query, renaming leaves apart.
    /// Fails if the result would have more than `cap` variables.
    pub fn flatten(&self, cap: usize) -> Result<Query> {
        let vars = self.materialized_variables();
        if vars > BigUint::from(cap) {
            return Err(Error::CapExceeded(format!("flattening needs {vars} variables, cap is {cap}")));
        }
        let mut leaves = Vec::new();
        self.collect_leaves(&mut leaves)?;
        let mut out = Query::new(self.schema()?);
        let mut used: BTreeSet<String> = BTreeSet::new();
        let mut counter = 0usize;
        for q in leaves {
            append_renamed(&mut out, q, &mut used, &mut counter)?;
        }
        Ok(out)
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a Query>) -> Result<()> {
        match self {
            QueryExpr::Leaf(q) => out.push(q),
            QueryExpr::DisjointAnd(items) => {
                for e in items {
                    e.collect_leaves(out)?;
                }
            }
            QueryExpr::Power(e, k) => {
                let k = k.to_usize().ok_or_else(|| Error::CapExceeded("power exponent too large to flatten".into()))?;
                for _ in 0..k {
                    e.collect_leaves(out)?;
                }
            }
        }
        Ok(())
    }
}

impl From<Query> for QueryExpr {
    fn from(q: Query) -> QueryExpr {
        QueryExpr::Leaf(q)
    }
}

impl fmt::Display for QueryExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QueryExpr::Leaf(q) => write!(f, "[{q}]"),
            QueryExpr::DisjointAnd(items) => {
                write!(f, "(")?;
                for (i, e) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ∧̄ ")?;
                    }
                    write!(f, "{e}")?;
                }
                write!(f, ")")
            }
            QueryExpr::Power(e, k) => write!(f, "{e}↑{k}"),
        }
    }
}

// Appends `q` to `out`. The first leaf keeps its names; later leaves get the
// suffix `·i`, with `i` bumped past any collision.
fn append_renamed(out: &mut Query, q: &Query, used: &mut BTreeSet<String>, counter: &mut usize) -> Result<()> {
    let vars = q.variables();
    let rename: HashMap<String, String> = if used.is_empty() {
        vars.iter().map(|v| (v.clone(), v.clone())).collect()
    } else {
        loop {
            *counter += 1;
            let map: HashMap<String, String> = vars.iter().map(|v| (v.clone(), format!("{v}·{counter}"))).collect();
            if map.values().all(|n| !used.contains(n)) {
                break map;
            }
        }
    };
    let sub = |t: &Term| match t {
        Term::Var(v) => Term::Var(rename[v].clone()),
        c => c.clone(),
    };
    out.extend_schema(q.schema())?;
    for a in q.atoms() {
        out.push_atom(Atom::new(a.relation.clone(), a.args.iter().map(sub).collect()))?;
    }
    for (a, b) in q.inequalities() {
        out.push_neq(sub(a), sub(b))?;
    }
    for v in q.declared_vars() {
        out.push_var(&rename[v]);
    }
    used.extend(rename.into_values());
    Ok(())
}

/// `q1 ∧ q2`: variables with equal names are identified.
pub fn conjoin_shared(q1: &Query, q2: &Query) -> Result<Query> {
    let schema = q1.schema().merge(q2.schema())?;
    let atoms = q1.atoms().iter().chain(q2.atoms()).cloned().collect();
    let neqs = q1.inequalities().iter().chain(q2.inequalities()).cloned().collect();
    let free = q1.declared_vars().iter().chain(q2.declared_vars()).cloned().collect();
    Query::from_parts(schema, atoms, neqs, free)
}

/// `q1 ∧̄ q2`: the variables of `q2` are renamed apart with a `·i` suffix.
pub fn conjoin_disjoint(q1: &Query, q2: &Query) -> Result<Query> {
    let mut out = q1.clone();
    out.extend_schema(q2.schema())?;
    let mut used: BTreeSet<String> = q1.variables().into_iter().collect();
    // An empty q1 would otherwise let q2 keep its names, which is still disjoint.
    let mut counter = 0;
    append_renamed(&mut out, q2, &mut used, &mut counter)?;
    Ok(out)
}

/// `e↑k`. For `k = 0` this is the empty conjunction, with count 1.
pub fn power(e: QueryExpr, k: impl Into<BigUint>) -> QueryExpr {
    QueryExpr::Power(Box::new(e), k.into())
}

pub fn strip_inequalities(q: &Query) -> Query {
    q.without_inequalities()
}

/// Blow-up by `k`: element `s` becomes `[s,1] … [s,k]`, and a fact holds on
/// copies iff it holds on the originals. Constants go to copy 1.
pub fn blowup(d: &Database, k: usize) -> Result<Database> {
    if k == 0 {
        return Err(Error::Precondition("blow-up factor must be at least 1".into()));
    }
    let mut out = Database::new(d.schema().clone());
    let n = d.num_elements();
    for s in d.elements() {
        for i in 1..=k {
            out.add_element(&format!("[{s},{i}]"));
        }
    }
    let copy = |e: ElemId, i: usize| (e as usize * k + i) as ElemId;
    for (rel, tuple) in d.facts() {
        let r = tuple.len();
        let mut idx = vec![0usize; r];
        loop {
            let t = tuple.iter().zip(&idx).map(|(&e, &i)| copy(e, i)).collect();
            out.add_fact_ids(rel, t)?;
            let mut p = 0;
            while p < r && idx[p] + 1 == k {
                idx[p] = 0;
                p += 1;
            }
            if p == r {
                break;
            }
            idx[p] += 1;
        }
    }
    for (c, &e) in d.const_interp() {
        out.set_constant(c, copy(e, 0))?;
    }
    debug_assert_eq!(out.num_elements(), n * k);
    Ok(out)
}

/// Direct product: elements are pairs `[s,t]` and facts hold componentwise.
/// A constant interpreted in both factors is interpreted as the pair.
pub fn product(d1: &Database, d2: &Database) -> Result<Database> {
    let schema = d1.schema().merge(d2.schema())?;
    let mut out = Database::new(schema);
    let m = d2.num_elements();
    for s in d1.elements() {
        for t in d2.elements() {
            out.add_element(&format!("[{s},{t}]"));
        }
    }
    let pair = |a: ElemId, b: ElemId| (a as usize * m + b as usize) as ElemId;
    let rels: BTreeSet<&str> = d1.facts().map(|(r, _)| r).collect();
    for rel in rels {
        for f1 in d1.relation_facts(rel) {
            for f2 in d2.relation_facts(rel) {
                let t = f1.iter().zip(f2).map(|(&a, &b)| pair(a, b)).collect();
                out.add_fact_ids(rel, t)?;
            }
        }
    }
    for (c, &a) in d1.const_interp() {
        if let Some(b) = d2.interp(c) {
            out.set_constant(c, pair(a, b))?;
        }
    }
    Ok(out)
}

/// `d^×k` for `k ≥ 1`.
pub fn power_product(d: &Database, k: usize) -> Result<Database> {
    if k == 0 {
        return Err(Error::Precondition("product power must be at least 1".into()));
    }
    let mut acc = d.clone();
    for _ in 1..k {
        acc = product(&acc, d)?;
    }
    Ok(acc)
}

/// Turns a database separating the inequality-stripped `q_s` from `q_b` into
/// one separating `q_s` itself: `blowup(d0^×k, 2n)` for the least suitable `k`,
/// where `n` is the number of inequalities of `q_s`.
///
/// `k` is the least value with `s^k > (2n)^(j+1)·b^k`, where `s` and `b` are the
/// counts of `strip(q_s)` and `q_b` on `d0` and `j = |Var(q_b)|`. Powers of
/// `d0` scale counts by the same exponent, so `k` is found without building them.
pub fn inequality_elimination_witness(q_s: &Query, q_b: &Query, d0: &Database, k_cap: u32) -> Result<Database> {
    if !q_b.inequalities().is_empty() {
        return Err(Error::Precondition("q_b must be inequality-free".into()));
    }
    let n = q_s.inequalities().len();
    if n == 0 {
        return Ok(d0.clone());
    }
    let s = hom_count(&strip_inequalities(q_s), d0)?;
    let b = hom_count(q_b, d0)?;
    if s <= b {
        return Err(Error::Precondition(format!(
            "stripped q_s must exceed q_b on the seed database ({s} <= {b})"
        )));
    }
    let factor = BigUint::from(2 * n as u64).pow(q_b.num_variables() as u32 + 1);
    let mut sk = BigUint::one();
    let mut bk = BigUint::one();
    for k in 1..=k_cap {
        sk *= &s;
        bk *= &b;
        if sk > &factor * &bk {
            return blowup(&power_product(d0, k as usize)?, 2 * n);
        }
    }
    Err(Error::CapExceeded(format!("no product exponent up to {k_cap} separates the counts")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relcore::{MARS, VENUS};
    use proptest::prelude::*;

    fn v(s: &str) -> Term {
        Term::var(s)
    }

    fn schema() -> Schema {
        Schema::new()
            .with_relation("R", 2)
            .unwrap()
            .with_relation("S", 2)
            .unwrap()
            .with_relation("U", 1)
            .unwrap()
    }

    fn db(n: usize, facts: &[(&str, &[u32])]) -> Database {
        let mut d = Database::new(schema());
        for i in 0..n {
            d.add_element(&(i + 1).to_string());
        }
        for (r, t) in facts {
            d.add_fact_ids(r, t.to_vec()).unwrap();
        }
        d
    }

    fn rxy() -> Query {
        let mut q = Query::new(schema());
        q.atom("R", vec![v("x"), v("y")]).unwrap();
        q
    }

    fn count(q: &Query, d: &Database) -> BigUint {
        hom_count(q, d).unwrap()
    }

    #[test]
    fn shared_conjunction() {
        let mut q2 = Query::new(schema());
        q2.atom("S", vec![v("y"), v("z")]).unwrap();
        let q = conjoin_shared(&rxy(), &q2).unwrap();
        assert_eq!(q.atoms().len(), 2);
        assert_eq!(q.variables(), vec!["x", "y", "z"]);
        assert_eq!(conjoin_shared(&rxy(), &rxy()).unwrap(), rxy());
    }

    #[test]
    fn disjoint_conjunction() {
        let q = conjoin_disjoint(&rxy(), &rxy()).unwrap();
        assert_eq!(q.variables(), vec!["x", "y", "x·1", "y·1"]);
        let d = db(3, &[("R", &[0, 1]), ("R", &[0, 2])]);
        assert_eq!(count(&q, &d), BigUint::from(4u32));

        let mut free = Query::new(schema());
        free.push_var("w");
        free.push_var("u");
        let q = conjoin_disjoint(&rxy(), &free).unwrap();
        assert_eq!(count(&q, &d), BigUint::from(2u32 * 9));
    }

    #[test]
    fn renaming_avoids_collisions() {
        let mut q1 = Query::new(schema());
        q1.atom("R", vec![v("x"), v("x·1")]).unwrap();
        let mut q2 = Query::new(schema());
        q2.atom("R", vec![v("x"), v("y")]).unwrap();
        let q = conjoin_disjoint(&q1, &q2).unwrap();
        assert_eq!(q.num_variables(), 4);
    }

    #[test]
    fn power_expressions() {
        let d = db(3, &[("R", &[0, 1]), ("R", &[0, 2])]);
        let e = power(QueryExpr::leaf(rxy()), 3u32);
        assert_eq!(e.eval(&d).unwrap(), Count::from_u64(8));
        assert_eq!(power(QueryExpr::leaf(rxy()), 0u32).eval(&d).unwrap(), Count::one());
        let flat = e.flatten(DEFAULT_FLATTEN_CAP).unwrap();
        assert_eq!(flat.num_variables(), 6);
        assert_eq!(count(&flat, &d), BigUint::from(8u32));
        let huge = power(QueryExpr::leaf(rxy()), BigUint::from(10u32).pow(25));
        assert!(matches!(huge.flatten(DEFAULT_FLATTEN_CAP), Err(Error::CapExceeded(_))));
        assert_eq!(huge.eval(&d).unwrap().to_string(), "2^10000000000000000000000000");
    }

    #[test]
    fn blowup_examples() {
        let d = db(2, &[("R", &[0, 1])]);
        let b = blowup(&d, 2).unwrap();
        assert_eq!(b.num_facts(), 4);
        assert_eq!(count(&rxy(), &b), BigUint::from(4u32));
        assert_eq!(b.elements()[0], "[1,1]");

        let mut loop_q = Query::new(schema());
        loop_q.atom("R", vec![v("x"), v("x")]).unwrap();
        let d = db(1, &[("R", &[0, 0])]);
        assert_eq!(count(&loop_q, &blowup(&d, 3).unwrap()), BigUint::from(3u32));

        let d = db(3, &[("R", &[0, 1]), ("S", &[2, 2])]);
        let b1 = blowup(&d, 1).unwrap();
        assert_eq!(b1.num_facts(), d.num_facts());
        assert_eq!(b1.num_elements(), d.num_elements());
        assert!(blowup(&d, 0).is_err());
    }

    #[test]
    fn product_examples() {
        let d = db(2, &[("R", &[0, 1]), ("R", &[1, 0])]);
        let p = product(&d, &d).unwrap();
        assert_eq!(p.num_elements(), 4);
        assert_eq!(count(&rxy(), &p), BigUint::from(4u32));
        let mut cyc = Query::new(schema());
        cyc.atom("R", vec![v("x"), v("y")]).unwrap();
        cyc.atom("R", vec![v("y"), v("x")]).unwrap();
        assert_eq!(count(&cyc, &p), BigUint::from(4u32));

        let one = db(1, &[("R", &[0, 0]), ("S", &[0, 0]), ("U", &[0])]);
        let q = product(&d, &one).unwrap();
        assert_eq!(q.num_facts(), d.num_facts());
        assert!(power_product(&d, 0).is_err());
        assert_eq!(power_product(&d, 3).unwrap().num_elements(), 8);
    }

    #[test]
    fn strip() {
        let mut q = rxy();
        q.push_neq(v("x"), v("y")).unwrap();
        assert_eq!(strip_inequalities(&q), rxy());
        assert_eq!(strip_inequalities(&rxy()), rxy());
    }

    #[test]
    fn elimination_witness_crafted() {
        let mut qs = rxy();
        qs.push_neq(v("x"), v("y")).unwrap();
        let mut qb = Query::new(schema());
        qb.atom("S", vec![v("z"), v("z")]).unwrap();
        let d0 = db(2, &[("R", &[0, 1])]);
        let d = inequality_elimination_witness(&qs, &qb, &d0, DEFAULT_K_CAP).unwrap();
        assert_eq!(d.num_facts(), 4);
        assert_eq!(count(&qs, &d), BigUint::from(4u32));
        assert_eq!(count(&qb, &d), BigUint::zero());
        let n = BigUint::from(2u32);
        assert!(count(&qs, &d) * &n >= count(&strip_inequalities(&qs), &d));

        assert_eq!(inequality_elimination_witness(&rxy(), &qb, &d0, DEFAULT_K_CAP).unwrap(), d0);
        assert!(matches!(
            inequality_elimination_witness(&qs, &qs, &d0, DEFAULT_K_CAP),
            Err(Error::Precondition(_))
        ));
        // s = b on a database with only loops.
        let loops = db(1, &[("R", &[0, 0]), ("S", &[0, 0])]);
        assert!(matches!(
            inequality_elimination_witness(&qs, &qb, &loops, DEFAULT_K_CAP),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn elimination_witness_needs_powers() {
        let mut qs = Query::new(schema());
        qs.atom("U", vec![v("x")]).unwrap();
        qs.atom("U", vec![v("y")]).unwrap();
        qs.push_neq(v("x"), v("y")).unwrap();
        let mut qb = Query::new(schema());
        qb.atom("S", vec![v("z"), v("z")]).unwrap();
        let d0 = db(2, &[("U", &[0]), ("U", &[1]), ("S", &[1, 1])]);
        assert_eq!(count(&strip_inequalities(&qs), &d0), BigUint::from(4u32));
        assert_eq!(count(&qb, &d0), BigUint::one());
        // Need 4^k > 2^(1+1)·1^k, first true at k = 2.
        let d = inequality_elimination_witness(&qs, &qb, &d0, DEFAULT_K_CAP).unwrap();
        assert_eq!(d.num_elements(), 4 * 2);
        assert!(count(&qs, &d) > count(&qb, &d));
        assert!(matches!(inequality_elimination_witness(&qs, &qb, &d0, 1), Err(Error::CapExceeded(_))));
    }

    fn arb_term() -> impl Strategy<Value = Term> {
        (0..3usize).prop_map(|i| Term::var(format!("v{i}")))
    }

    fn arb_query(neq: bool) -> impl Strategy<Value = Query> {
        let atom = prop_oneof![
            (arb_term(), arb_term()).prop_map(|(a, b)| ("R", vec![a, b])),
            (arb_term(), arb_term()).prop_map(|(a, b)| ("S", vec![a, b])),
            arb_term().prop_map(|a| ("U", vec![a])),
        ];
        let n_neq = if neq { 0..2usize } else { 0..1usize };
        (
            proptest::collection::vec(atom, 1..4),
            proptest::collection::vec((arb_term(), arb_term()), n_neq),
        )
            .prop_map(move |(atoms, neqs)| {
                let mut q = Query::new(schema());
                for (r, a) in atoms {
                    q.atom(r, a).unwrap();
                }
                if neq {
                    for (a, b) in neqs {
                        q.push_neq(a, b).unwrap();
                    }
                }
                q
            })
    }

    fn arb_db() -> impl Strategy<Value = Database> {
        (1..=3usize).prop_flat_map(|n| {
            let e = 0..n as u32;
            (
                Just(n),
                proptest::collection::vec((e.clone(), e.clone()), 0..7),
                proptest::collection::vec((e.clone(), e.clone()), 0..7),
                proptest::collection::vec(e.clone(), 0..3),
                e.clone(),
                e,
            )
                .prop_map(|(n, r, s, u, m, f)| {
                    let mut d = db(n, &[]);
                    for (a, b) in r {
                        d.add_fact_ids("R", vec![a, b]).unwrap();
                    }
                    for (a, b) in s {
                        d.add_fact_ids("S", vec![a, b]).unwrap();
                    }
                    for a in u {
                        d.add_fact_ids("U", vec![a]).unwrap();
                    }
                    d.set_constant(MARS, m).unwrap();
                    d.set_constant(VENUS, f).unwrap();
                    d
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn disjoint_conjunction_multiplies(q1 in arb_query(true), q2 in arb_query(true), d in arb_db()) {
            let q = conjoin_disjoint(&q1, &q2).unwrap();
            prop_assert_eq!(count(&q, &d), count(&q1, &d) * count(&q2, &d));
            let e = QueryExpr::dand(vec![q1.clone().into(), q2.clone().into()]);
            prop_assert_eq!(e.eval(&d).unwrap(), Count::from_biguint(count(&q, &d)));
        }

        #[test]
        fn power_identity(q in arb_query(true), d in arb_db(), k in 0u32..4) {
            let e = power(q.clone().into(), k);
            let expected = count(&q, &d).pow(k);
            prop_assert_eq!(e.eval(&d).unwrap(), Count::from_biguint(expected.clone()));
            let flat = e.flatten(DEFAULT_FLATTEN_CAP).unwrap();
            prop_assert_eq!(count(&flat, &d), expected);
        }

        #[test]
        fn blowup_scales(q in arb_query(false), d in arb_db(), k in 1usize..4) {
            let j = q.num_variables() as u32;
            let b = blowup(&d, k).unwrap();
            prop_assert_eq!(count(&q, &b), BigUint::from(k).pow(j) * count(&q, &d));
        }

        #[test]
        fn product_squares(q in arb_query(false), d in arb_db()) {
            let p = product(&d, &d).unwrap();
            let c = count(&q, &d);
            prop_assert_eq!(count(&q, &p), &c * &c);
        }

        #[test]
        fn stripping_never_decreases(q in arb_query(true), d in arb_db()) {
            prop_assert!(count(&strip_inequalities(&q), &d) >= count(&q, &d));
        }

        #[test]
        fn blowup_halves_at_most(q in arb_query(true), d in arb_db()) {
            let n = q.inequalities().len();
            prop_assume!(n >= 1 && q.inequalities().iter().all(|(a, b)| a != b));
            let b = blowup(&d, 2 * n).unwrap();
            let stripped = count(&strip_inequalities(&q), &b);
            prop_assert!(count(&q, &b) * 2u32 >= stripped);
        }
    }
}
