//! Multiplication gadgets.
//!
//! A pair `(q_s, q_b)` multiplies by `q` if `q_s(D) ≤ q·q_b(D)` on every
//! non-trivial `D` and equality holds, with nonzero counts, on some witness.
//! The β pair multiplies by `(n+1)²/2n`, the γ pair by `(m−1)/m`, and their
//! disjoint conjunction α by `c` when `n = 2c−1` and `m = 2c`.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::homcount::hom_count;
use crate::qalgebra::{conjoin_disjoint, conjoin_shared};
use crate::relcore::{canonical_structure, Database, ElemId, Query, Schema, Term};

/// Relation of the β gadget.
pub const BETA_REL: &str = "R_beta";
/// Relation of the γ gadget.
pub const GAMMA_REL: &str = "P_gamma";
pub const GAMMA_A: &str = "A";
pub const GAMMA_B: &str = "B";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GadgetPair {
    pub q_s: Query,
    pub q_b: Query,
    pub multiplier: Ratio<BigUint>,
    pub schema: Schema,
}

impl GadgetPair {
    /// Counts `(q_s(d), q_b(d))`.
    pub fn counts(&self, d: &Database) -> Result<(BigUint, BigUint)> {
        Ok((hom_count(&self.q_s, d)?, hom_count(&self.q_b, d)?))
    }

    /// `den·q_s(d) ≤ num·q_b(d)`.
    pub fn upper_bound_holds(&self, d: &Database) -> Result<bool> {
        let (s, b) = self.counts(d)?;
        Ok(s * self.multiplier.denom() <= b * self.multiplier.numer())
    }

    /// `den·q_s(d) = num·q_b(d) ≠ 0`.
    pub fn equality_holds(&self, d: &Database) -> Result<bool> {
        let (s, b) = self.counts(d)?;
        Ok(!s.is_zero() && s * self.multiplier.denom() == b * self.multiplier.numer())
    }
}

/// Cyclic shifts of `args` as atoms of `relation`.
fn shifts(q: &mut Query, relation: &str, args: &[Term]) -> Result<()> {
    let n = args.len();
    for k in 0..n {
        let shifted = (0..n).map(|i| args[(i + k) % n].clone()).collect();
        q.atom(relation, shifted)?;
    }
    Ok(())
}

fn check_tail(arity: usize, tail: &[Term]) -> Result<()> {
    if arity < 3 {
        return Err(Error::Precondition(format!("cyclique arity must be at least 3, got {arity}")));
    }
    if tail.len() + 1 != arity {
        return Err(Error::ArityMismatch {
            relation: "CYCLIQ".into(),
            expected: arity,
            found: tail.len() + 1,
        });
    }
    Ok(())
}

/// `CYCLIQ(head, tail)` over the β relation of the given arity.
pub fn build_cycliq(arity: usize, head: Term, tail: &[Term]) -> Result<Query> {
    check_tail(arity, tail)?;
    let mut q = Query::new(Schema::new().with_relation(BETA_REL, arity)?);
    let args: Vec<Term> = std::iter::once(head).chain(tail.iter().cloned()).collect();
    shifts(&mut q, BETA_REL, &args)?;
    Ok(q)
}

/// `CYCLIQ_U(head, tail)` over the γ relation plus `U(t)` for every argument.
pub fn build_cycliq_unary(arity: usize, unary: &str, head: Term, tail: &[Term]) -> Result<Query> {
    check_tail(arity, tail)?;
    let mut q = Query::new(gamma_schema(arity)?);
    let args: Vec<Term> = std::iter::once(head).chain(tail.iter().cloned()).collect();
    shifts(&mut q, GAMMA_REL, &args)?;
    for t in &args {
        q.atom(unary, vec![t.clone()])?;
    }
    Ok(q)
}

fn vars(prefix: &str, from: usize, to: usize) -> Vec<Term> {
    (from..=to).map(|i| Term::var(format!("{prefix}{i}"))).collect()
}

fn venus_bar(len: usize) -> Vec<Term> {
    vec![Term::venus(); len]
}

fn beta_schema(n: usize) -> Result<Schema> {
    Schema::new().with_relation(BETA_REL, n)
}

fn gamma_schema(m: usize) -> Result<Schema> {
    Schema::new()
        .with_relation(GAMMA_REL, m)?
        .with_relation(GAMMA_A, 1)?
        .with_relation(GAMMA_B, 1)
}

fn ratio(num: u64, den: u64) -> Ratio<BigUint> {
    Ratio::new(BigUint::from(num), BigUint::from(den))
}

/// β over arity `n`: multiplies by `(n+1)²/2n`.
pub fn build_beta(n: usize) -> Result<GadgetPair> {
    if n < 3 {
        return Err(Error::Precondition(format!("β needs arity at least 3, got {n}")));
    }
    let x = build_cycliq(n, Term::var("x1"), &vars("x", 2, n))?;
    let y = build_cycliq(n, Term::var("y1"), &vars("y", 2, n))?;
    let base = conjoin_shared(&x, &y)?;
    let vv = build_cycliq(n, Term::venus(), &venus_bar(n - 1))?;
    let mv = build_cycliq(n, Term::mars(), &venus_bar(n - 1))?;
    let q_s = conjoin_shared(&conjoin_shared(&base, &vv)?, &mv)?;
    let mut q_b = base;
    q_b.push_neq(Term::var("x1"), Term::var("y1"))?;
    let n = n as u64;
    Ok(GadgetPair {
        q_s,
        q_b,
        multiplier: ratio((n + 1) * (n + 1), 2 * n),
        schema: beta_schema(n as usize)?,
    })
}

/// Canonical structure of `CYCLIQ(♀,♀̄) ∧ CYCLIQ(♂,♀̄)`.
pub fn beta_witness(n: usize) -> Result<Database> {
    let vv = build_cycliq(n, Term::venus(), &venus_bar(n - 1))?;
    let mv = build_cycliq(n, Term::mars(), &venus_bar(n - 1))?;
    Ok(canonical_structure(&conjoin_shared(&vv, &mv)?))
}

/// γ over arity `m`: multiplies by `(m−1)/m`, without inequalities.
pub fn build_gamma(m: usize) -> Result<GadgetPair> {
    if m < 3 {
        return Err(Error::Precondition(format!("γ needs arity at least 3, got {m}")));
    }
    let mut g1s = build_cycliq_unary(m, GAMMA_A, Term::mars(), &venus_bar(m - 1))?;
    g1s.atom(GAMMA_B, vec![Term::mars()])?;
    let mut g2s = build_cycliq_unary(m, GAMMA_B, Term::var("x1"), &vars("x", 2, m))?;
    g2s.atom(GAMMA_A, vec![Term::var("x1")])?;
    let mut g1b = build_cycliq_unary(m, GAMMA_A, Term::var("y1"), &vars("y", 2, m))?;
    g1b.atom(GAMMA_B, vec![Term::var("y1")])?;
    let g2b = build_cycliq_unary(m, GAMMA_B, Term::var("x1"), &vars("x", 2, m))?;
    let m = m as u64;
    Ok(GadgetPair {
        q_s: conjoin_shared(&g1s, &g2s)?,
        q_b: conjoin_shared(&g1b, &g2b)?,
        multiplier: ratio(m - 1, m),
        schema: gamma_schema(m as usize)?,
    })
}

/// Disjoint union of the canonical structures of `CYCLIQ_A(♂,♀̄) ∧ B(♂)` and
/// `CYCLIQ_B(x1..xm) ∧ A(x1) ∧ … ∧ A(x_{m−1})`.
pub fn gamma_witness(m: usize) -> Result<Database> {
    let mut g1s = build_cycliq_unary(m, GAMMA_A, Term::mars(), &venus_bar(m - 1))?;
    g1s.atom(GAMMA_B, vec![Term::mars()])?;
    let mut other = build_cycliq_unary(m, GAMMA_B, Term::var("x1"), &vars("x", 2, m))?;
    for t in vars("x", 1, m - 1) {
        other.atom(GAMMA_A, vec![t])?;
    }
    union(&canonical_structure(&g1s), &canonical_structure(&other))
}

/// Union of two databases, identifying elements with equal names.
fn union(d1: &Database, d2: &Database) -> Result<Database> {
    let mut out = Database::new(d1.schema().merge(d2.schema())?);
    for d in [d1, d2] {
        for e in d.elements() {
            out.add_element(e);
        }
        for (rel, t) in d.facts() {
            let names: Vec<&str> = t.iter().map(|&e| d.element_name(e)).collect();
            out.add_fact(rel, &names)?;
        }
        for (c, &e) in d.const_interp() {
            let id = out.element_id(d.element_name(e)).expect("element copied");
            if out.interp(c).is_some_and(|old| old != id) {
                return Err(Error::MalformedDatabase(format!("constant @{c} interpreted twice")));
            }
            out.set_constant(c, id)?;
        }
    }
    Ok(out)
}

/// α for a target multiplier `c`: `β(2c−1) ∧̄ γ(2c)`. For `c = 1` both queries
/// are empty.
pub fn build_alpha(c: usize) -> Result<GadgetPair> {
    if c == 0 {
        return Err(Error::Precondition("α needs c at least 1".into()));
    }
    if c == 1 {
        let q = Query::new(Schema::new());
        return Ok(GadgetPair {
            q_s: q.clone(),
            q_b: q,
            multiplier: Ratio::one(),
            schema: Schema::new(),
        });
    }
    let beta = build_beta(2 * c - 1)?;
    let gamma = build_gamma(2 * c)?;
    Ok(GadgetPair {
        q_s: conjoin_disjoint(&beta.q_s, &gamma.q_s)?,
        q_b: conjoin_disjoint(&beta.q_b, &gamma.q_b)?,
        multiplier: &beta.multiplier * &gamma.multiplier,
        schema: beta.schema.merge(&gamma.schema)?,
    })
}

/// Union of the β and γ witnesses, sharing the two constants.
pub fn alpha_witness(c: usize) -> Result<Database> {
    if c == 0 {
        return Err(Error::Precondition("α needs c at least 1".into()));
    }
    if c == 1 {
        let mut d = Database::new(Schema::new());
        let m = d.add_element(crate::relcore::MARS);
        let v = d.add_element(crate::relcore::VENUS);
        d.set_constant(crate::relcore::MARS, m)?;
        d.set_constant(crate::relcore::VENUS, v)?;
        return Ok(d);
    }
    union(&beta_witness(2 * c - 1)?, &gamma_witness(2 * c)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CycliqueKind {
    Homogeneous,
    Degenerate,
    Normal,
}

/// One class of cycliques under cyclic shifting.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CycliqueClass {
    /// The least member, comparing element ids.
    pub representative: Vec<String>,
    pub members: BTreeSet<Vec<String>>,
    pub kind: CycliqueKind,
}

fn rotate(t: &[ElemId], k: usize) -> Vec<ElemId> {
    let n = t.len();
    (0..n).map(|i| t[(i + k) % n]).collect()
}

/// All cycliques of `relation` in `d` (with every element in `filter`, if
/// given), grouped into shift classes.
pub fn classify_cycliques(d: &Database, relation: &str, filter: Option<&str>) -> Result<Vec<CycliqueClass>> {
    let Some(n) = d.schema().arity(relation) else {
        return Ok(Vec::new());
    };
    if n < 3 {
        return Err(Error::Precondition(format!("cyclique arity must be at least 3, got {n}")));
    }
    let is_cyclique = |t: &[ElemId]| {
        (0..n).all(|k| d.has_fact(relation, &rotate(t, k)))
            && filter.is_none_or(|u| t.iter().all(|&e| d.has_fact(u, &[e])))
    };
    let mut classes: BTreeMap<Vec<ElemId>, BTreeSet<Vec<ElemId>>> = BTreeMap::new();
    for t in d.relation_facts(relation) {
        if !is_cyclique(t) {
            continue;
        }
        let members: BTreeSet<Vec<ElemId>> = (0..n).map(|k| rotate(t, k)).collect();
        let rep = members.iter().next().expect("nonempty").clone();
        classes.entry(rep).or_insert(members);
    }
    let names = |t: &Vec<ElemId>| t.iter().map(|&e| d.element_name(e).to_string()).collect::<Vec<_>>();
    Ok(classes
        .into_iter()
        .map(|(rep, members)| {
            let kind = match members.len() {
                1 => CycliqueKind::Homogeneous,
                k if k < n => CycliqueKind::Degenerate,
                _ => CycliqueKind::Normal,
            };
            CycliqueClass {
                representative: names(&rep),
                members: members.iter().map(names).collect(),
                kind,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::random_database;
    use crate::relcore::{MARS, VENUS};

    fn big(n: u64) -> BigUint {
        BigUint::from(n)
    }

    #[test]
    fn cycliq_shapes() {
        let q = build_cycliq(3, Term::var("x1"), &[Term::var("x2"), Term::var("x3")]).unwrap();
        assert_eq!(q.atoms().len(), 3);
        assert_eq!(q.atoms()[1].to_string(), "R_beta(x2,x3,x1)");
        let q = build_cycliq(3, Term::venus(), &venus_bar(2)).unwrap();
        assert_eq!(q.atoms().len(), 1);
        let q = build_cycliq(4, Term::mars(), &venus_bar(3)).unwrap();
        assert_eq!(q.atoms().len(), 4);
        assert!(build_cycliq(2, Term::mars(), &venus_bar(1)).is_err());
        assert!(build_cycliq(4, Term::mars(), &venus_bar(2)).is_err());
    }

    #[test]
    fn beta_witness_counts() {
        for n in [3usize, 4, 5, 9] {
            let pair = build_beta(n).unwrap();
            let w = beta_witness(n).unwrap();
            assert!(w.is_nontrivial().unwrap());
            let n64 = n as u64;
            assert_eq!(pair.counts(&w).unwrap(), (big((n64 + 1).pow(2)), big(2 * n64)));
            assert!(pair.equality_holds(&w).unwrap());
            assert_eq!(pair.q_b.inequalities().len(), 1);
            assert!(pair.q_s.inequalities().is_empty());
        }
        assert_eq!(beta_witness(3).unwrap().num_facts(), 4);
        assert_eq!(beta_witness(4).unwrap().num_facts(), 5);
        assert_eq!(build_beta(3).unwrap().multiplier, ratio(8, 3));
        assert_eq!(build_beta(5).unwrap().multiplier, ratio(18, 5));
        assert!(build_beta(2).is_err());
    }

    #[test]
    fn gamma_witness_counts() {
        let pair = build_gamma(4).unwrap();
        let w = gamma_witness(4).unwrap();
        assert!(w.is_nontrivial().unwrap());
        assert_eq!(pair.counts(&w).unwrap(), (big(3), big(4)));
        assert_eq!(pair.multiplier, ratio(3, 4));
        assert!(pair.q_b.inequalities().is_empty());
        assert!(build_gamma(2).is_err());
    }

    #[test]
    fn gamma_parts_on_witness() {
        let m = 4;
        let w = gamma_witness(m).unwrap();
        let mut g2s = build_cycliq_unary(m, GAMMA_B, Term::var("x1"), &vars("x", 2, m)).unwrap();
        let g2b = g2s.clone();
        g2s.atom(GAMMA_A, vec![Term::var("x1")]).unwrap();
        assert_eq!(hom_count(&g2s, &w).unwrap(), big(3));
        assert_eq!(hom_count(&g2b, &w).unwrap(), big(4));
        let mut g1b = build_cycliq_unary(m, GAMMA_A, Term::var("y1"), &vars("y", 2, m)).unwrap();
        g1b.atom(GAMMA_B, vec![Term::var("y1")]).unwrap();
        assert_eq!(hom_count(&g1b, &w).unwrap(), big(1));
    }

    #[test]
    fn alpha_multiplies_by_c() {
        for c in [2usize, 3] {
            let pair = build_alpha(c).unwrap();
            assert_eq!(pair.multiplier, ratio(c as u64, 1));
            let w = alpha_witness(c).unwrap();
            let (s, b) = pair.counts(&w).unwrap();
            assert!(!b.is_zero());
            assert_eq!(s, b * big(c as u64));
            assert_eq!(pair.q_b.inequalities().len(), 1);
            assert!(pair.q_s.inequalities().is_empty());
        }
        let (s, b) = build_alpha(2).unwrap().counts(&alpha_witness(2).unwrap()).unwrap();
        assert_eq!((s, b), (big(48), big(24)));
        let one = build_alpha(1).unwrap();
        assert!(one.equality_holds(&alpha_witness(1).unwrap()).unwrap());
    }

    #[test]
    fn classify_beta_witness() {
        let w = beta_witness(3).unwrap();
        let classes = classify_cycliques(&w, BETA_REL, None).unwrap();
        assert_eq!(classes.len(), 2);
        let kinds: Vec<CycliqueKind> = classes.iter().map(|c| c.kind).collect();
        assert!(kinds.contains(&CycliqueKind::Homogeneous));
        assert!(kinds.contains(&CycliqueKind::Normal));
        let normal = classes.iter().find(|c| c.kind == CycliqueKind::Normal).unwrap();
        assert_eq!(normal.members.len(), 3);
        assert!(normal.members.contains(&vec![MARS.to_string(), VENUS.to_string(), VENUS.to_string()]));
    }

    #[test]
    fn classify_degenerate() {
        let schema = Schema::new().with_relation("Q", 4).unwrap();
        let mut d = Database::new(schema);
        d.add_element("a");
        d.add_element("b");
        d.add_fact("Q", &["a", "b", "a", "b"]).unwrap();
        d.add_fact("Q", &["b", "a", "b", "a"]).unwrap();
        let classes = classify_cycliques(&d, "Q", None).unwrap();
        assert_eq!(classes.len(), 1);
        assert_eq!(classes[0].kind, CycliqueKind::Degenerate);
        assert_eq!(classes[0].members.len(), 2);
        assert_eq!(classes[0].representative, vec!["a", "b", "a", "b"]);

        let empty = Database::new(Schema::new().with_relation("Q", 3).unwrap());
        assert!(classify_cycliques(&empty, "Q", None).unwrap().is_empty());
    }

    #[test]
    fn classify_with_filter() {
        let w = gamma_witness(4).unwrap();
        let a = classify_cycliques(&w, GAMMA_REL, Some(GAMMA_A)).unwrap();
        assert_eq!(a.len(), 1);
        assert_eq!(a[0].kind, CycliqueKind::Normal);
        let b = classify_cycliques(&w, GAMMA_REL, Some(GAMMA_B)).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b[0].representative, vec!["x1", "x2", "x3", "x4"]);
    }

    #[test]
    fn classes_partition_cycliques_on_random_databases() {
        let schema = beta_schema(4).unwrap();
        for seed in 0..200 {
            let d = random_database(&schema, 3, 0.6, seed, true).unwrap();
            let classes = classify_cycliques(&d, BETA_REL, None).unwrap();
            let mut seen = BTreeSet::new();
            for c in &classes {
                assert!(!c.members.is_empty() && c.members.len() <= 4);
                if c.kind == CycliqueKind::Degenerate {
                    assert!(c.members.len() <= 2);
                }
                for m in &c.members {
                    assert!(seen.insert(m.clone()), "classes overlap");
                    let rep = &c.representative;
                    assert!((0..4).any(|k| (0..4).all(|i| m[i] == rep[(i + k) % 4])));
                }
            }
            let cycliques = d
                .relation_facts(BETA_REL)
                .filter(|t| (0..4).all(|k| d.has_fact(BETA_REL, &rotate(t, k))))
                .count();
            assert_eq!(seen.len(), cycliques);
        }
    }

    #[test]
    fn upper_bounds_on_random_databases() {
        let beta = build_beta(3).unwrap();
        let gamma = build_gamma(3).unwrap();
        for seed in 0..150 {
            let d = random_database(&beta.schema, 3, 0.5, seed, true).unwrap();
            assert!(beta.upper_bound_holds(&d).unwrap(), "β seed {seed}");
            let d = random_database(&gamma.schema, 3, 0.6, seed, true).unwrap();
            assert!(gamma.upper_bound_holds(&d).unwrap(), "γ seed {seed}");
        }
    }
}
