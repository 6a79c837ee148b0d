//! Random queries and a naive counting oracle.

use bagcq_core::relcore::ElemId;
use bagcq_core::{Database, Query, Schema, Term};
use num_bigint::BigUint;
use rand::seq::SliceRandom;
use rand::Rng;

/// Shape of generated queries.
#[derive(Clone, Copy, Debug)]
pub struct QueryShape {
    pub max_vars: usize,
    pub max_atoms: usize,
    /// Probability that an argument is a constant instead of a variable.
    pub const_prob: f64,
    /// Probability of each of up to two inequalities.
    pub neq_prob: f64,
}

impl QueryShape {
    pub fn plain(max_vars: usize, max_atoms: usize) -> QueryShape {
        QueryShape {
            max_vars,
            max_atoms,
            const_prob: 0.0,
            neq_prob: 0.0,
        }
    }
}

/// A random query over `schema` with variables drawn from `x0 … x{max_vars−1}`.
pub fn random_query<R: Rng>(schema: &Schema, shape: QueryShape, rng: &mut R) -> Query {
    let rels: Vec<(&str, usize)> = schema.relations().collect();
    let consts: Vec<&str> = schema.constants().collect();
    let nvars = rng.gen_range(1..=shape.max_vars.max(1));
    let term = |rng: &mut R| {
        if !consts.is_empty() && rng.gen_bool(shape.const_prob) {
            Term::constant(*consts.choose(rng).expect("nonempty"))
        } else {
            Term::var(format!("x{}", rng.gen_range(0..nvars)))
        }
    };
    let mut q = Query::new(schema.clone());
    if !rels.is_empty() {
        for _ in 0..rng.gen_range(0..=shape.max_atoms) {
            let (rel, k) = *rels.choose(rng).expect("nonempty");
            let args = (0..k).map(|_| term(rng)).collect();
            q.atom(rel, args).expect("generated within the schema");
        }
    }
    for _ in 0..2 {
        if rng.gen_bool(shape.neq_prob) {
            let (a, b) = (term(rng), term(rng));
            if a != b {
                q.push_neq(a, b).expect("generated within the schema");
            }
        }
    }
    if q.variables().is_empty() && rng.gen_bool(0.5) {
        q.push_var("x0");
    }
    q
}

/// `|Hom(q, d)|` by enumerating all `|V|^|Var|` assignments.
///
/// Returns `None` if `q` mentions a constant that `d` does not interpret.
pub fn naive_count(q: &Query, d: &Database) -> Option<BigUint> {
    let vars = q.variables();
    let n = d.num_elements() as ElemId;
    let resolve = |t: &Term, asg: &[ElemId]| -> Option<ElemId> {
        match t {
            Term::Var(v) => Some(asg[vars.iter().position(|x| x == v).expect("own variable")]),
            Term::Const(c) => d.interp(c),
        }
    };
    for t in q.atoms().iter().flat_map(|a| a.args.iter()).chain(q.inequalities().iter().flat_map(|(a, b)| [a, b])) {
        if let Term::Const(c) = t {
            d.interp(c)?;
        }
    }
    if n == 0 && !vars.is_empty() {
        return Some(BigUint::from(0u32));
    }
    let mut asg = vec![0 as ElemId; vars.len()];
    let mut total = BigUint::from(0u32);
    loop {
        let atoms_ok = q.atoms().iter().all(|a| {
            let t: Vec<ElemId> = a.args.iter().map(|x| resolve(x, &asg).expect("checked")).collect();
            d.has_fact(&a.relation, &t)
        });
        let neq_ok = q
            .inequalities()
            .iter()
            .all(|(a, b)| resolve(a, &asg) != resolve(b, &asg));
        if atoms_ok && neq_ok {
            total += 1u32;
        }
        let mut p = asg.len();
        loop {
            if p == 0 {
                return Some(total);
            }
            p -= 1;
            asg[p] += 1;
            if asg[p] < n {
                break;
            }
            asg[p] = 0;
        }
    }
}
