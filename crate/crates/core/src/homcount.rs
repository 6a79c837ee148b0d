//! Exact homomorphism counting.
//!
//! The counter is a backtracking search with forward candidate filtering and a
//! dynamic most-constrained-first variable order. Before each branch the
//! still-unassigned variables are split into Gaifman components whose counts
//! multiply; component counts are memoized within one call, keyed by the
//! component and the values of its assigned neighbours.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::count::Count;
use crate::error::{Error, Result};
use crate::relcore::{canonical_structure, Database, ElemId, Query, Term};

/// A homomorphism, as a map from variable name to element name.
pub type Assignment = BTreeMap<String, String>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Slot {
    Var(usize),
    Elem(ElemId),
}

struct CAtom {
    rel: usize,
    slots: Vec<Slot>,
    // For each position, the first position holding the same slot.
    first: Vec<usize>,
    // Whether some variable occurs twice.
    repeats: bool,
}

// Facts of one relation grouped by their values at a set of positions.
type ValuesKey = (usize, u64, usize, Vec<ElemId>);
type ProjectionIndex = HashMap<Vec<ElemId>, Vec<usize>>;

type MemoKey = (Vec<usize>, Vec<ElemId>);

struct Engine {
    var_names: Vec<String>,
    atoms: Vec<CAtom>,
    facts: Vec<Vec<Vec<ElemId>>>,
    // (relation, bitmask of positions) -> facts keyed by those positions.
    index: RefCell<HashMap<(usize, u64), ProjectionIndex>>,
    // (relation, bitmask, position, values at the bitmask) -> sorted values
    // at the position; valid for atoms without repeated variables.
    values: RefCell<HashMap<ValuesKey, Vec<ElemId>>>,
    var_atoms: Vec<Vec<usize>>,
    var_neq: Vec<Vec<usize>>,
    neighbors: Vec<Vec<usize>>,
    init_dom: Vec<Vec<ElemId>>,
    memo: HashMap<MemoKey, BigUint>,
}

/// Result of compiling a query against a database.
enum Compiled {
    Zero,
    Ready(Box<Engine>),
}

fn resolve(t: &Term, vars: &HashMap<&str, usize>, d: &Database) -> Result<Slot> {
    match t {
        Term::Var(v) => Ok(Slot::Var(vars[v.as_str()])),
        Term::Const(c) => d
            .interp(c)
            .map(Slot::Elem)
            .ok_or_else(|| Error::UninterpretedConstant(c.clone())),
    }
}

fn compile(q: &Query, d: &Database) -> Result<Compiled> {
    for (rel, arity) in q.relations_used() {
        if arity > 64 {
            return Err(Error::Unsupported(format!("relation {rel} has arity {arity} above 64")));
        }
        if let Some(a) = d.schema().arity(&rel) {
            if a != arity {
                return Err(Error::SchemaMismatch {
                    relation: rel,
                    left: arity,
                    right: a,
                });
            }
        }
    }
    let var_names = q.variables();
    let var_idx: HashMap<&str, usize> = var_names.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
    let n = var_names.len();

    let mut rel_ids: HashMap<String, usize> = HashMap::new();
    let mut facts: Vec<Vec<Vec<ElemId>>> = Vec::new();
    let mut atoms = Vec::new();
    let mut zero = false;
    for a in q.atoms() {
        let slots = a
            .args
            .iter()
            .map(|t| resolve(t, &var_idx, d))
            .collect::<Result<Vec<_>>>()?;
        let rel = *rel_ids.entry(a.relation.clone()).or_insert_with(|| {
            facts.push(d.relation_facts(&a.relation).cloned().collect());
            facts.len() - 1
        });
        if slots.iter().all(|s| matches!(s, Slot::Elem(_))) {
            let tuple: Vec<ElemId> = slots
                .iter()
                .map(|s| match s {
                    Slot::Elem(e) => *e,
                    Slot::Var(_) => unreachable!(),
                })
                .collect();
            if !d.has_fact(&a.relation, &tuple) {
                zero = true;
            }
            continue;
        }
        let first: Vec<usize> = (0..slots.len())
            .map(|p| slots.iter().position(|s| *s == slots[p]).expect("own slot"))
            .collect();
        let repeats = slots
            .iter()
            .enumerate()
            .any(|(p, s)| matches!(s, Slot::Var(_)) && first[p] != p);
        atoms.push(CAtom { rel, slots, first, repeats });
    }

    let universe: Vec<ElemId> = (0..d.num_elements() as ElemId).collect();
    let mut init_dom: Vec<Vec<ElemId>> = vec![universe; n];
    let mut var_neq: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (a, b) in q.inequalities() {
        match (resolve(a, &var_idx, d)?, resolve(b, &var_idx, d)?) {
            (Slot::Elem(x), Slot::Elem(y)) => zero |= x == y,
            (Slot::Var(x), Slot::Var(y)) if x == y => zero = true,
            (Slot::Var(x), Slot::Var(y)) => {
                var_neq[x].push(y);
                var_neq[y].push(x);
            }
            (Slot::Var(x), Slot::Elem(e)) | (Slot::Elem(e), Slot::Var(x)) => {
                init_dom[x].retain(|&v| v != e);
            }
        }
    }
    if zero {
        return Ok(Compiled::Zero);
    }

    let mut var_atoms: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut neighbors: Vec<Vec<usize>> = var_neq.clone();
    for (ai, atom) in atoms.iter().enumerate() {
        let vs = atom_vars(atom);
        for &v in &vs {
            var_atoms[v].push(ai);
            neighbors[v].extend(vs.iter().copied().filter(|&u| u != v));
        }
        // Projection of the consistent facts onto each variable of the atom.
        let mut proj: Vec<Vec<ElemId>> = vec![Vec::new(); vs.len()];
        for f in &facts[atom.rel] {
            if let Some(vals) = match_fact(atom, f, &[]) {
                for (k, &v) in vs.iter().enumerate() {
                    proj[k].push(vals[v_pos(atom, v)]);
                }
            }
        }
        for (k, &v) in vs.iter().enumerate() {
            proj[k].sort_unstable();
            proj[k].dedup();
            init_dom[v] = intersect(&init_dom[v], &proj[k]);
        }
    }
    for nb in &mut neighbors {
        nb.sort_unstable();
        nb.dedup();
    }

    Ok(Compiled::Ready(Box::new(Engine {
        var_names,
        atoms,
        facts,
        index: RefCell::new(HashMap::new()),
        values: RefCell::new(HashMap::new()),
        var_atoms,
        var_neq,
        neighbors,
        init_dom,
        memo: HashMap::new(),
    })))
}

fn atom_vars(atom: &CAtom) -> Vec<usize> {
    let mut vs: Vec<usize> = atom
        .slots
        .iter()
        .filter_map(|s| match s {
            Slot::Var(v) => Some(*v),
            Slot::Elem(_) => None,
        })
        .collect();
    vs.sort_unstable();
    vs.dedup();
    vs
}

fn v_pos(atom: &CAtom, v: usize) -> usize {
    atom.slots.iter().position(|s| *s == Slot::Var(v)).expect("variable occurs in atom")
}

fn projection_key(fact: &[ElemId], mask: u64) -> Vec<ElemId> {
    fact.iter()
        .enumerate()
        .filter(|(p, _)| mask >> p & 1 == 1)
        .map(|(_, &e)| e)
        .collect()
}

/// Checks a fact against an atom under a partial assignment; returns the fact
/// itself when constants, assigned variables and repeated variables agree.
fn match_fact<'f>(atom: &CAtom, fact: &'f [ElemId], assign: &[Option<ElemId>]) -> Option<&'f [ElemId]> {
    for (p, s) in atom.slots.iter().enumerate() {
        match *s {
            Slot::Elem(e) if fact[p] != e => return None,
            Slot::Var(v) => {
                if let Some(Some(e)) = assign.get(v) {
                    if fact[p] != *e {
                        return None;
                    }
                }
                if fact[atom.first[p]] != fact[p] {
                    return None;
                }
            }
            _ => {}
        }
    }
    Some(fact)
}

fn intersect(a: &[ElemId], b: &[ElemId]) -> Vec<ElemId> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

impl Engine {
    fn num_vars(&self) -> usize {
        self.var_names.len()
    }

    /// Values of `v` consistent with every atom that has a bound position and
    /// with every inequality to an assigned variable. Sorted ascending.
    fn candidates(&self, v: usize, assign: &[Option<ElemId>]) -> Vec<ElemId> {
        let mut cands = self.init_dom[v].clone();
        for &ai in &self.var_atoms[v] {
            if cands.is_empty() {
                break;
            }
            let atom = &self.atoms[ai];
            let mut mask = 0u64;
            let mut key = Vec::new();
            for (p, s) in atom.slots.iter().enumerate() {
                let e = match *s {
                    Slot::Elem(e) => e,
                    Slot::Var(u) => match assign[u] {
                        Some(e) => e,
                        None => continue,
                    },
                };
                mask |= 1 << p;
                key.push(e);
            }
            if mask == 0 {
                continue;
            }
            let pos = v_pos(atom, v);
            if !atom.repeats {
                let mut values = self.values.borrow_mut();
                let vals = values
                    .entry((atom.rel, mask, pos, key))
                    .or_insert_with_key(|(_, _, _, key)| self.matching_values(atom, mask, key, pos, assign));
                cands = intersect(&cands, vals);
            } else {
                let vals = self.matching_values(atom, mask, &key, pos, assign);
                cands = intersect(&cands, &vals);
            }
        }
        for &u in &self.var_neq[v] {
            if let Some(e) = assign[u] {
                cands.retain(|&x| x != e);
            }
        }
        cands
    }

    /// Sorted values at `pos` of the facts of `atom` agreeing with `key` on
    /// the positions in `mask` and consistent with `assign`.
    fn matching_values(&self, atom: &CAtom, mask: u64, key: &[ElemId], pos: usize, assign: &[Option<ElemId>]) -> Vec<ElemId> {
        let facts = &self.facts[atom.rel];
        let mut index = self.index.borrow_mut();
        let by_key = index.entry((atom.rel, mask)).or_insert_with(|| {
            let mut m: ProjectionIndex = HashMap::new();
            for (fi, f) in facts.iter().enumerate() {
                m.entry(projection_key(f, mask)).or_default().push(fi);
            }
            m
        });
        let Some(list) = by_key.get(key) else {
            return Vec::new();
        };
        let mut vals: Vec<ElemId> = list
            .iter()
            .filter_map(|&fi| match_fact(atom, &facts[fi], assign).map(|f| f[pos]))
            .collect();
        vals.sort_unstable();
        vals.dedup();
        vals
    }

    /// Splits `vars` (all unassigned) into connected components.
    fn components(&self, vars: &[usize], assign: &[Option<ElemId>]) -> Vec<Vec<usize>> {
        let mut in_set = vec![false; self.num_vars()];
        for &v in vars {
            in_set[v] = true;
        }
        let mut seen = vec![false; self.num_vars()];
        let mut comps = Vec::new();
        for &start in vars {
            if seen[start] {
                continue;
            }
            let mut comp = vec![start];
            seen[start] = true;
            let mut i = 0;
            while i < comp.len() {
                let v = comp[i];
                i += 1;
                for &u in &self.neighbors[v] {
                    if in_set[u] && !seen[u] && assign[u].is_none() {
                        seen[u] = true;
                        comp.push(u);
                    }
                }
            }
            comp.sort_unstable();
            comps.push(comp);
        }
        comps
    }

    fn count_component(&mut self, comp: &[usize], assign: &mut Vec<Option<ElemId>>) -> BigUint {
        let mut boundary: Vec<usize> = comp
            .iter()
            .flat_map(|&v| self.neighbors[v].iter().copied())
            .filter(|&u| assign[u].is_some())
            .collect();
        boundary.sort_unstable();
        boundary.dedup();
        let mut key_vals: Vec<ElemId> = Vec::with_capacity(boundary.len() * 2);
        for &u in &boundary {
            key_vals.push(u as ElemId);
            key_vals.push(assign[u].unwrap());
        }
        let key = (comp.to_vec(), key_vals);
        if let Some(c) = self.memo.get(&key) {
            return c.clone();
        }

        let mut best: Option<(usize, Vec<ElemId>)> = None;
        for &v in comp {
            let c = self.candidates(v, assign);
            let better = match &best {
                None => true,
                Some((bv, bc)) => {
                    c.len() < bc.len() || (c.len() == bc.len() && self.var_names[v] < self.var_names[*bv])
                }
            };
            if better {
                let empty = c.is_empty();
                best = Some((v, c));
                if empty {
                    break;
                }
            }
        }
        let (v, cands) = best.expect("component is nonempty");
        let rest: Vec<usize> = comp.iter().copied().filter(|&u| u != v).collect();
        let mut total = BigUint::zero();
        for val in cands {
            assign[v] = Some(val);
            let mut prod = BigUint::one();
            for sub in self.components(&rest, assign) {
                let c = self.count_component(&sub, assign);
                if c.is_zero() {
                    prod = BigUint::zero();
                    break;
                }
                prod *= c;
            }
            total += prod;
        }
        assign[v] = None;
        self.memo.insert(key, total.clone());
        total
    }

    fn count(&mut self) -> BigUint {
        let mut assign = vec![None; self.num_vars()];
        let all: Vec<usize> = (0..self.num_vars()).collect();
        let mut total = BigUint::one();
        for comp in self.components(&all, &assign) {
            let c = self.count_component(&comp, &mut assign);
            if c.is_zero() {
                return c;
            }
            total *= c;
        }
        total
    }

    fn enumerate(&self, order: &[usize], depth: usize, assign: &mut Vec<Option<ElemId>>, limit: usize, out: &mut Vec<Vec<ElemId>>) {
        if out.len() >= limit {
            return;
        }
        if depth == order.len() {
            out.push(assign.iter().map(|e| e.unwrap()).collect());
            return;
        }
        let v = order[depth];
        for val in self.candidates(v, assign) {
            assign[v] = Some(val);
            self.enumerate(order, depth + 1, assign, limit, out);
            if out.len() >= limit {
                break;
            }
        }
        assign[v] = None;
    }
}

/// `|Hom(q, d)|` as a factored count.
pub fn count_homomorphisms(q: &Query, d: &Database) -> Result<Count> {
    hom_count(q, d).map(Count::from_biguint)
}

/// `|Hom(q, d)|` as a plain integer.
pub fn hom_count(q: &Query, d: &Database) -> Result<BigUint> {
    match compile(q, d)? {
        Compiled::Zero => Ok(BigUint::zero()),
        Compiled::Ready(mut e) => Ok(e.count()),
    }
}

/// Up to `limit` homomorphisms, lexicographic in element id along the order in
/// which variables first appear in `q`.
pub fn enumerate_homomorphisms(q: &Query, d: &Database, limit: usize) -> Result<Vec<Assignment>> {
    let engine = match compile(q, d)? {
        Compiled::Zero => return Ok(Vec::new()),
        Compiled::Ready(e) => e,
    };
    let order: Vec<usize> = (0..engine.num_vars()).collect();
    let mut assign = vec![None; engine.num_vars()];
    let mut raw = Vec::new();
    if limit > 0 {
        engine.enumerate(&order, 0, &mut assign, limit, &mut raw);
    }
    Ok(raw
        .into_iter()
        .map(|vals| {
            engine
                .var_names
                .iter()
                .zip(vals)
                .map(|(v, e)| (v.clone(), d.element_name(e).to_string()))
                .collect()
        })
        .collect())
}

/// Searches for a homomorphism from `q_from` into the canonical structure of
/// `q_to` that fixes constants and hits every variable of `q_to`. Returns the
/// image of each variable of `q_from` as a term of `q_to`.
pub fn exists_onto_homomorphism(q_from: &Query, q_to: &Query) -> Result<Option<BTreeMap<String, Term>>> {
    if !q_from.inequalities().is_empty() || !q_to.inequalities().is_empty() {
        return Err(Error::Unsupported("onto-homomorphism search requires inequality-free queries".into()));
    }
    let target = canonical_structure(q_to);
    if q_from.constants_used().iter().any(|c| target.interp(c).is_none()) {
        return Ok(None);
    }
    let engine = match compile(q_from, &target)? {
        Compiled::Zero => return Ok(None),
        Compiled::Ready(e) => e,
    };
    let to_vars = q_to.variables();
    let targets: Vec<ElemId> = to_vars.iter().map(|v| target.element_id(v).expect("variable element")).collect();
    let mut is_target = vec![false; target.num_elements()];
    for &t in &targets {
        is_target[t as usize] = true;
    }
    let mut search = OntoSearch {
        engine: &engine,
        target: &target,
        is_target,
        hits: vec![0; target.num_elements()],
        unhit: targets.len(),
        assign: vec![None; engine.num_vars()],
    };
    if !search.run(engine.num_vars()) {
        return Ok(None);
    }
    let const_elem: HashMap<ElemId, &str> = target.const_interp().iter().map(|(c, &e)| (e, c.as_str())).collect();
    let map = engine
        .var_names
        .iter()
        .zip(&search.assign)
        .map(|(v, e)| {
            let e = e.expect("complete assignment");
            let t = match const_elem.get(&e) {
                Some(c) => Term::constant(*c),
                None => Term::var(target.element_name(e)),
            };
            (v.clone(), t)
        })
        .collect();
    Ok(Some(map))
}

struct OntoSearch<'a> {
    engine: &'a Engine,
    target: &'a Database,
    is_target: Vec<bool>,
    hits: Vec<usize>,
    unhit: usize,
    assign: Vec<Option<ElemId>>,
}

impl OntoSearch<'_> {
    fn run(&mut self, remaining: usize) -> bool {
        if remaining < self.unhit {
            return false;
        }
        if remaining == 0 {
            return true;
        }
        let mut best: Option<(usize, Vec<ElemId>)> = None;
        for v in 0..self.engine.num_vars() {
            if self.assign[v].is_some() {
                continue;
            }
            let c = self.engine.candidates(v, &self.assign);
            if best.as_ref().is_none_or(|(_, bc)| c.len() < bc.len()) {
                let empty = c.is_empty();
                best = Some((v, c));
                if empty {
                    break;
                }
            }
        }
        let (v, mut cands) = best.expect("an unassigned variable exists");
        // Same-named element first, then elements not yet hit.
        let name = &self.engine.var_names[v];
        cands.sort_by_key(|&e| {
            let same = self.target.element_name(e) == name;
            let fresh = self.is_target[e as usize] && self.hits[e as usize] == 0;
            (!same, !fresh, e)
        });
        for e in cands {
            self.assign[v] = Some(e);
            let newly = self.is_target[e as usize] && self.hits[e as usize] == 0;
            self.hits[e as usize] += 1;
            if newly {
                self.unhit -= 1;
            }
            if self.run(remaining - 1) {
                return true;
            }
            self.hits[e as usize] -= 1;
            if newly {
                self.unhit += 1;
            }
        }
        self.assign[v] = None;
        false
    }
}
