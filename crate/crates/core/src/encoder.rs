//! Compiles a Hilbert instance into a constant `c` and queries `phi_s`, `phi_b`
//! such that some non-trivial `D` has `c·phi_s(D) > phi_b(D)` iff the instance
//! has a violating valuation.
//!
//! `phi_s = Arena ∧̄ π_s` and `phi_b = π_b ∧̄ ζ_b ∧̄ δ_b`. On a correct database
//! (the arena structure plus `X`-edges) `π_s` and `π_b` evaluate the two
//! polynomials at the valuation read off the `X`-edges, `ζ_b` is `c₁`, and
//! `δ_b` is 1. Extra facts inflate `ζ_b` by at least `ƈ`; identified constants
//! inflate `δ_b` to at least `2^c`.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};

use crate::count::Count;
use crate::error::{Error, Result};
use crate::homcount::hom_count;
use crate::polyreduce::{HilbertInstance, Valuation};
use crate::qalgebra::{power, QueryExpr};
use crate::relcore::{canonical_structure, Database, ElemId, Query, Schema, Term, MARS, VENUS};

/// Longest ray the encoder will build for a single coefficient.
pub const MAX_RAY: u64 = 100_000;

pub const E_REL: &str = "E";
pub const X_REL: &str = "X";
pub const A_CONST: &str = "a";

pub fn s_rel(m: usize) -> String {
    format!("S{m}")
}

pub fn r_rel(d: usize) -> String {
    format!("R{d}")
}

pub fn a_const(m: usize) -> String {
    format!("a{m}")
}

pub fn b_const(n: usize) -> String {
    format!("b{n}")
}

fn c(name: &str) -> Term {
    Term::constant(name)
}

fn v(name: impl Into<String>) -> Term {
    Term::var(name)
}

/// Schema Σ: `S_1..S_m`, `R_1..R_d`, `E`, `X`, and the arena constants.
pub fn instance_schema(inst: &HilbertInstance) -> Result<Schema> {
    let mut s = Schema::new();
    for m in 1..=inst.m_count {
        s.add_relation(&s_rel(m), 2)?;
        s.add_constant(&a_const(m));
    }
    for d in 1..=inst.d {
        s.add_relation(&r_rel(d), 2)?;
    }
    for n in 1..=inst.n_count {
        s.add_constant(&b_const(n));
    }
    s.add_relation(E_REL, 2)?;
    s.add_relation(X_REL, 2)?;
    s.add_constant(A_CONST);
    Ok(s)
}

/// The constants of the arena: `a`, `a_1..a_m`, `b_1..b_n`, mars, venus.
pub fn arena_constants(inst: &HilbertInstance) -> Vec<String> {
    let mut out = vec![MARS.to_string(), VENUS.to_string(), A_CONST.to_string()];
    out.extend((1..=inst.m_count).map(a_const));
    out.extend((1..=inst.n_count).map(b_const));
    out
}

fn small(x: &BigUint) -> Result<u64> {
    x.to_u64()
        .filter(|&k| k <= MAX_RAY)
        .ok_or_else(|| Error::Unsupported(format!("coefficient {x} exceeds the ray limit {MAX_RAY}")))
}

// Star with an S_m loop and an S_m-ray of coeff−1 edges per monomial, plus
// an R_j/X ray of length two per position.
fn star(inst: &HilbertInstance, schema: &Schema, coeffs: &[BigUint]) -> Result<Query> {
    let mut q = Query::new(schema.clone());
    for (i, coeff) in coeffs.iter().enumerate() {
        let m = i + 1;
        let s = s_rel(m);
        q.atom(&s, vec![v("x"), v("x")])?;
        let len = small(coeff)?;
        let ray = |k: u64| v(format!("x{m}_{k}"));
        if len >= 2 {
            q.atom(&s, vec![v("x"), ray(len - 1)])?;
            for k in 1..len - 1 {
                q.atom(&s, vec![ray(k + 1), ray(k)])?;
            }
        }
    }
    for d in 1..=inst.d {
        q.atom(&r_rel(d), vec![v("x"), v(format!("y{d}"))])?;
        q.atom(X_REL, vec![v(format!("y{d}")), v(format!("z{d}"))])?;
    }
    Ok(q)
}

/// `(π_s, π_b)`. `π_b` has longer rays and `d` extra `R_1/X` rays.
pub fn build_pi(inst: &HilbertInstance) -> Result<(Query, Query)> {
    let schema = instance_schema(inst)?;
    let pi_s = star(inst, &schema, &inst.coeffs_s())?;
    let mut pi_b = star(inst, &schema, &inst.coeffs_b())?;
    for d in 1..=inst.d {
        pi_b.atom(&r_rel(1), vec![v("x"), v(format!("yp{d}"))])?;
        pi_b.atom(X_REL, vec![v(format!("yp{d}")), v(format!("zp{d}"))])?;
    }
    Ok((pi_s, pi_b))
}

/// The ground arena query and its canonical structure.
pub fn build_arena(inst: &HilbertInstance) -> Result<(Query, Database)> {
    let schema = instance_schema(inst)?;
    let mut q = Query::new(schema);
    for &(n, d, m) in &inst.positions {
        q.atom(&r_rel(d), vec![c(&a_const(m)), c(&b_const(n))])?;
    }
    for m in 1..=inst.m_count {
        for m2 in 1..=inst.m_count {
            q.atom(&s_rel(m2), vec![c(&a_const(m)), c(&a_const(m))])?;
        }
        q.atom(&s_rel(m), vec![c(&a_const(m)), c(A_CONST)])?;
        q.atom(&s_rel(m), vec![c(A_CONST), c(A_CONST)])?;
    }
    q.atom(E_REL, vec![Term::mars(), Term::mars()])?;
    let cycle: Vec<String> = std::iter::once(VENUS.to_string())
        .chain(std::iter::once(A_CONST.to_string()))
        .chain((1..=inst.m_count).map(a_const))
        .chain((1..=inst.n_count).map(b_const))
        .collect();
    for i in 0..cycle.len() {
        let next = &cycle[(i + 1) % cycle.len()];
        q.atom(E_REL, vec![c(&cycle[i]), c(next)])?;
    }
    let d = canonical_structure(&q);
    Ok((q, d))
}

/// `j` for every relation of `S_1..S_m, R_1..R_d`: its number of arena atoms.
pub fn atoms_per_relation(inst: &HilbertInstance, arena: &Query) -> BTreeMap<String, usize> {
    let mut j = BTreeMap::new();
    for m in 1..=inst.m_count {
        j.insert(s_rel(m), 0);
    }
    for d in 1..=inst.d {
        j.insert(r_rel(d), 0);
    }
    for a in arena.atoms() {
        if let Some(n) = j.get_mut(&a.relation) {
            *n += 1;
        }
    }
    j
}

/// Least `k` with `((j+1)/j)^k ≥ ƈ`.
pub fn least_k(j: usize, c_frak: &BigUint) -> u64 {
    let (j, j1) = (BigUint::from(j), BigUint::from(j + 1));
    let mut k = 0u64;
    let (mut num, mut den) = (BigUint::from(1u32), BigUint::from(1u32));
    while num < c_frak * &den {
        num *= &j1;
        den *= &j;
        k += 1;
    }
    k
}

/// `ζ_b = ∧̄_P P(w,v)↑k` with `k` and `c₁ = ζ_b(D_Arena) = Π_P (j^P)^k`.
pub fn build_zeta(inst: &HilbertInstance, arena: &Query) -> Result<(QueryExpr, u64, Count)> {
    let schema = instance_schema(inst)?;
    let j = atoms_per_relation(inst, arena);
    let jmax = *j.values().max().expect("at least one relation");
    let k = least_k(jmax, &inst.c_frak);
    let mut parts = Vec::new();
    let mut c1 = Count::one();
    for (rel, &jp) in &j {
        let mut q = Query::new(schema.clone());
        q.atom(rel, vec![v("w"), v("v")])?;
        parts.push(power(QueryExpr::leaf(q), k));
        c1 = c1.mul(&Count::from_u64(jp as u64).pow(&BigUint::from(k)));
    }
    Ok((QueryExpr::DisjointAnd(parts), k, c1))
}

/// `L = {1..l−1} ∪ {l+1}` for the arena cycle length `l`.
pub fn cycle_lengths(inst: &HilbertInstance) -> BTreeSet<usize> {
    let l = cycle_length(inst);
    (1..l).chain(std::iter::once(l + 1)).collect()
}

/// `l = m + n + 2`.
pub fn cycle_length(inst: &HilbertInstance) -> usize {
    inst.m_count + inst.n_count + 2
}

/// The `E`-cycle query `δ_{b,l}` on variables `z1..zl`.
pub fn delta_cycle(schema: &Schema, l: usize) -> Result<Query> {
    let mut q = Query::new(schema.clone());
    for i in 1..=l {
        let next = i % l + 1;
        q.atom(E_REL, vec![v(format!("z{i}")), v(format!("z{next}"))])?;
    }
    Ok(q)
}

/// `δ_b = (∧̄_{l∈L} δ_{b,l})↑c`.
pub fn build_delta(inst: &HilbertInstance, c: &BigUint) -> Result<QueryExpr> {
    Ok(power(delta_base(inst)?, c.clone()))
}

/// `∧̄_{l∈L} δ_{b,l}`.
pub fn delta_base(inst: &HilbertInstance) -> Result<QueryExpr> {
    let schema = instance_schema(inst)?;
    let parts = cycle_lengths(inst)
        .into_iter()
        .map(|l| delta_cycle(&schema, l).map(QueryExpr::leaf))
        .collect::<Result<Vec<_>>>()?;
    Ok(QueryExpr::DisjointAnd(parts))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncoderConstants {
    pub k: u64,
    pub c1: Count,
    /// Arena cycle length.
    pub l_len: usize,
    pub cycle_lengths: BTreeSet<usize>,
    pub j_per_relation: BTreeMap<String, usize>,
    pub j: usize,
}

#[derive(Clone, Debug)]
pub struct EncoderOutput {
    pub c: Count,
    pub phi_s: QueryExpr,
    pub phi_b: QueryExpr,
    pub arena_query: Query,
    pub arena_db: Database,
    pub pi_s: Query,
    pub pi_b: Query,
    pub zeta_b: QueryExpr,
    pub delta_b: QueryExpr,
    pub constants: EncoderConstants,
    pub schema: Schema,
}

/// Builds the full reduction output for a validated instance.
pub fn assemble(inst: &HilbertInstance) -> Result<EncoderOutput> {
    let violations = crate::polyreduce::validate_instance(inst);
    if !violations.is_empty() {
        let list: Vec<String> = violations.iter().map(ToString::to_string).collect();
        return Err(Error::Precondition(format!("invalid instance: {}", list.join("; "))));
    }
    let schema = instance_schema(inst)?;
    let (pi_s, pi_b) = build_pi(inst)?;
    let (arena_query, arena_db) = build_arena(inst)?;
    let (zeta_b, k, c1) = build_zeta(inst, &arena_query)?;
    let c = Count::from_biguint(inst.c_frak.clone()).mul(&c1);
    let delta_b = build_delta(inst, &c.to_biguint())?;
    let phi_s = QueryExpr::DisjointAnd(vec![QueryExpr::leaf(arena_query.clone()), QueryExpr::leaf(pi_s.clone())]);
    let phi_b = QueryExpr::DisjointAnd(vec![QueryExpr::leaf(pi_b.clone()), zeta_b.clone(), delta_b.clone()]);
    let j_per_relation = atoms_per_relation(inst, &arena_query);
    let j = *j_per_relation.values().max().expect("nonempty");
    Ok(EncoderOutput {
        c,
        phi_s,
        phi_b,
        arena_query,
        arena_db,
        pi_s,
        pi_b,
        zeta_b,
        delta_b,
        constants: EncoderConstants {
            k,
            c1,
            l_len: cycle_length(inst),
            cycle_lengths: cycle_lengths(inst),
            j_per_relation,
            j,
        },
        schema,
    })
}

/// The arena structure plus `v(n)` fresh `X`-successors `e{n}_{i}` of each `b_n`.
pub fn build_correct_database(inst: &HilbertInstance, val: &Valuation) -> Result<Database> {
    let (_, mut d) = build_arena(inst)?;
    for n in 1..=inst.n_count {
        let count = *val
            .get(&n)
            .ok_or_else(|| Error::Precondition(format!("valuation misses variable x{n}")))?;
        let b = d.interp(&b_const(n)).expect("arena interprets b_n");
        for i in 1..=count {
            let e = d.add_element(&format!("e{n}_{i}"));
            d.add_fact_ids(X_REL, vec![b, e])?;
        }
    }
    Ok(d)
}

fn models_arena(d: &Database, arena: &Query) -> Result<bool> {
    Ok(!hom_count(arena, d)?.is_zero())
}

/// `Ξ_D(x_n)` = number of `X`-successors of `b_n`.
pub fn extract_valuation(d: &Database, inst: &HilbertInstance) -> Result<Valuation> {
    let (arena, _) = build_arena(inst)?;
    if !models_arena(d, &arena)? {
        return Err(Error::Precondition("database does not satisfy the arena".into()));
    }
    let mut val = Valuation::new();
    for n in 1..=inst.n_count {
        let b = d.interp(&b_const(n)).expect("checked by the arena query");
        let succ = d.relation_facts(X_REL).filter(|t| t[0] == b).count();
        val.insert(n, succ as u64);
    }
    Ok(val)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DbClassification {
    NotModel,
    Correct,
    SlightlyIncorrect,
    SeriouslyIncorrect,
}

/// Places `d` in the correct / slightly incorrect / seriously incorrect
/// trichotomy, or reports that it does not satisfy the arena at all.
pub fn classify_database(d: &Database, inst: &HilbertInstance) -> Result<DbClassification> {
    let (arena, arena_db) = build_arena(inst)?;
    if !models_arena(d, &arena)? {
        return Ok(DbClassification::NotModel);
    }
    let consts = arena_constants(inst);
    let images: BTreeSet<ElemId> = consts.iter().map(|k| d.interp(k).expect("arena model")).collect();
    if images.len() < consts.len() {
        return Ok(DbClassification::SeriouslyIncorrect);
    }
    let map = |e: ElemId| {
        let name = arena_db.element_name(e);
        d.interp(name).expect("arena elements are constants")
    };
    let image: BTreeSet<(String, Vec<ElemId>)> = arena_db
        .facts()
        .map(|(r, t)| (r.to_string(), t.iter().map(|&e| map(e)).collect()))
        .collect();
    let extra = d
        .facts()
        .filter(|(r, _)| *r != X_REL)
        .any(|(r, t)| !image.contains(&(r.to_string(), t.clone())));
    Ok(if extra {
        DbClassification::SlightlyIncorrect
    } else {
        DbClassification::Correct
    })
}

/// Copy of `d` in which the element of constant `drop` is merged into the
/// element of constant `keep`; facts are remapped accordingly.
pub fn identify_constants(d: &Database, keep: &str, drop: &str) -> Result<Database> {
    let k = d.interp(keep).ok_or_else(|| Error::UninterpretedConstant(keep.to_string()))?;
    let r = d.interp(drop).ok_or_else(|| Error::UninterpretedConstant(drop.to_string()))?;
    let mut out = Database::new(d.schema().clone());
    for (i, name) in d.elements().iter().enumerate() {
        if i as ElemId != r {
            out.add_element(name);
        }
    }
    let new_id = |e: ElemId| {
        let src = if e == r { k } else { e };
        out.element_id(d.element_name(src)).expect("kept element")
    };
    let facts: Vec<(String, Vec<ElemId>)> = d
        .facts()
        .map(|(rel, t)| (rel.to_string(), t.iter().map(|&e| new_id(e)).collect()))
        .collect();
    let consts: Vec<(String, ElemId)> = d.const_interp().iter().map(|(c, &e)| (c.clone(), new_id(e))).collect();
    for (rel, t) in facts {
        out.add_fact_ids(&rel, t)?;
    }
    for (c, e) in consts {
        out.set_constant(&c, e)?;
    }
    Ok(out)
}
