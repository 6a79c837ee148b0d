//! Bounded search for a non-trivial database with `c_s·φ_s(D) > c_b·φ_b(D)`.

use std::cmp::Ordering;

use bagcq_core::relcore::ElemId;
use bagcq_core::{compare_counts, Count, Database, QueryExpr, Schema, MARS, VENUS};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchMode {
    Exhaustive,
    Random,
}

#[derive(Clone, Debug)]
pub struct SearchConfig {
    /// Databases have between 2 and `max_domain` elements.
    pub max_domain: usize,
    pub max_facts_per_relation: usize,
    /// Databases drawn in random mode.
    pub trials: u64,
    pub seed: u64,
    pub mode: SearchMode,
    /// Databases checked in exhaustive mode.
    pub max_states: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            max_domain: 3,
            max_facts_per_relation: 4,
            trials: 1000,
            seed: 0,
            mode: SearchMode::Random,
            max_states: 100_000,
        }
    }
}

/// The inequality `c_s·φ_s(D) > c_b·φ_b(D)` whose witnesses are sought.
#[derive(Clone, Debug)]
pub struct ScaledCheck {
    pub c_s: Count,
    pub phi_s: QueryExpr,
    pub c_b: Count,
    pub phi_b: QueryExpr,
}

impl ScaledCheck {
    pub fn new(c: Count, phi_s: QueryExpr, phi_b: QueryExpr) -> ScaledCheck {
        ScaledCheck {
            c_s: c,
            phi_s,
            c_b: Count::one(),
            phi_b,
        }
    }

    pub fn schema(&self) -> bagcq_core::Result<Schema> {
        self.phi_s.schema()?.merge(&self.phi_b.schema()?)
    }

    /// `(c_s·φ_s(d), c_b·φ_b(d))`.
    pub fn sides(&self, d: &Database) -> bagcq_core::Result<(Count, Count)> {
        Ok((self.c_s.mul(&self.phi_s.eval(d)?), self.c_b.mul(&self.phi_b.eval(d)?)))
    }

    pub fn violated(&self, d: &Database) -> bagcq_core::Result<bool> {
        let (s, b) = self.sides(d)?;
        Ok(compare_counts(&s, &b) == Ordering::Greater)
    }
}

/// `c·φ_s(D) > φ_b(D)` searched per `cfg`.
pub fn search_counterexample(
    c: &Count,
    phi_s: &QueryExpr,
    phi_b: &QueryExpr,
    cfg: &SearchConfig,
) -> bagcq_core::Result<Option<Database>> {
    search_scaled(&ScaledCheck::new(c.clone(), phi_s.clone(), phi_b.clone()), cfg)
}

/// First violating non-trivial database in search order, minimized.
pub fn search_scaled(check: &ScaledCheck, cfg: &SearchConfig) -> bagcq_core::Result<Option<Database>> {
    let schema = check.schema()?;
    let found = match cfg.mode {
        SearchMode::Random => random_search(check, &schema, cfg)?,
        SearchMode::Exhaustive => exhaustive_search(check, &schema, cfg)?,
    };
    found.map(|d| minimize(check, &d)).transpose()
}

fn all_tuples(dom: usize, arity: usize) -> Vec<Vec<ElemId>> {
    let mut out = Vec::new();
    let mut t = vec![0 as ElemId; arity];
    loop {
        out.push(t.clone());
        let mut p = arity;
        loop {
            if p == 0 {
                return out;
            }
            p -= 1;
            t[p] += 1;
            if (t[p] as usize) < dom {
                break;
            }
            t[p] = 0;
        }
    }
}

fn skeleton(schema: &Schema, dom: usize) -> Database {
    let mut d = Database::new(schema.clone());
    for i in 0..dom {
        d.add_element(&format!("e{i}"));
    }
    d
}

fn set_distinguished(d: &mut Database) -> bagcq_core::Result<()> {
    d.set_constant(MARS, 0)?;
    d.set_constant(VENUS, 1)
}

fn other_constants(schema: &Schema) -> Vec<String> {
    schema
        .constants()
        .filter(|c| *c != MARS && *c != VENUS)
        .map(str::to_string)
        .collect()
}

fn random_search(check: &ScaledCheck, schema: &Schema, cfg: &SearchConfig) -> bagcq_core::Result<Option<Database>> {
    let max_domain = cfg.max_domain.max(2);
    let others = other_constants(schema);
    for trial in 0..cfg.trials {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(trial);
        let dom = rng.gen_range(2..=max_domain);
        let mut d = skeleton(schema, dom);
        for (rel, k) in schema.relations() {
            let tuples = all_tuples(dom, k);
            let n = rng.gen_range(0..=cfg.max_facts_per_relation.min(tuples.len()));
            for i in sample(&mut rng, tuples.len(), n).into_iter() {
                d.add_fact_ids(rel, tuples[i].clone())?;
            }
        }
        set_distinguished(&mut d)?;
        for c in &others {
            d.set_constant(c, rng.gen_range(0..dom) as ElemId)?;
        }
        if check.violated(&d)? {
            return Ok(Some(d));
        }
    }
    Ok(None)
}

// Advances a little-endian odometer with per-digit radix; false on wrap.
fn advance(digits: &mut [usize], radix: usize) -> bool {
    for x in digits.iter_mut() {
        *x += 1;
        if *x < radix {
            return true;
        }
        *x = 0;
    }
    false
}

fn exhaustive_search(check: &ScaledCheck, schema: &Schema, cfg: &SearchConfig) -> bagcq_core::Result<Option<Database>> {
    let others = other_constants(schema);
    let mut states = 0u64;
    for dom in 2..=cfg.max_domain.max(2) {
        let slots: Vec<(String, Vec<ElemId>)> = schema
            .relations()
            .flat_map(|(rel, k)| all_tuples(dom, k).into_iter().map(move |t| (rel.to_string(), t)))
            .collect();
        let mut mask = vec![0usize; slots.len()];
        loop {
            let mut per_rel = std::collections::BTreeMap::<&str, usize>::new();
            for (i, &bit) in mask.iter().enumerate() {
                if bit == 1 {
                    *per_rel.entry(slots[i].0.as_str()).or_default() += 1;
                }
            }
            if per_rel.values().all(|&n| n <= cfg.max_facts_per_relation) {
                let mut base = skeleton(schema, dom);
                for (i, &bit) in mask.iter().enumerate() {
                    if bit == 1 {
                        base.add_fact_ids(&slots[i].0, slots[i].1.clone())?;
                    }
                }
                set_distinguished(&mut base)?;
                let mut interp = vec![0usize; others.len()];
                loop {
                    if states >= cfg.max_states {
                        return Ok(None);
                    }
                    states += 1;
                    let mut d = base.clone();
                    for (c, &e) in others.iter().zip(&interp) {
                        d.set_constant(c, e as ElemId)?;
                    }
                    if check.violated(&d)? {
                        return Ok(Some(d));
                    }
                    if !advance(&mut interp, dom) {
                        break;
                    }
                }
            }
            if !advance(&mut mask, 2) {
                break;
            }
        }
    }
    Ok(None)
}

/// Greedy single-fact removal, re-checking the violation after every step.
pub fn minimize(check: &ScaledCheck, d: &Database) -> bagcq_core::Result<Database> {
    let mut cur = d.clone();
    loop {
        let facts: Vec<(String, Vec<ElemId>)> = cur.facts().map(|(r, t)| (r.to_string(), t.clone())).collect();
        let mut changed = false;
        for (rel, t) in facts {
            let mut next = cur.clone();
            next.remove_fact(&rel, &t);
            if check.violated(&next)? {
                cur = next;
                changed = true;
            }
        }
        if !changed {
            return Ok(cur);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use bagcq_core::gadgets::{alpha_witness, build_alpha, build_beta};
    use bagcq_core::{Query, Term};

    #[test]
    fn misdeclared_alpha_is_refuted() {
        let g = build_alpha(2).unwrap();
        // α_s ≥ 3·α_b fails on the witness, where α_s = 2·α_b.
        let check = ScaledCheck::new(Count::from_u64(3), QueryExpr::leaf(g.q_b.clone()), QueryExpr::leaf(g.q_s.clone()));
        assert!(check.violated(&alpha_witness(2).unwrap()).unwrap());
        let cfg = SearchConfig {
            max_domain: 2,
            max_facts_per_relation: 16,
            trials: 3000,
            seed: 1,
            ..SearchConfig::default()
        };
        let found = search_scaled(&check, &cfg).unwrap().expect("violation");
        assert!(found.is_nontrivial().unwrap());
        assert!(check.violated(&found).unwrap());
        let min = minimize(&check, &found).unwrap();
        assert_eq!(min, found);
    }

    #[test]
    fn beta_at_its_multiplier_is_not_refuted() {
        let g = build_beta(3).unwrap();
        let check = ScaledCheck {
            c_s: Count::from_biguint(g.multiplier.denom().clone()),
            phi_s: QueryExpr::leaf(g.q_s),
            c_b: Count::from_biguint(g.multiplier.numer().clone()),
            phi_b: QueryExpr::leaf(g.q_b),
        };
        let cfg = SearchConfig {
            trials: 300,
            max_facts_per_relation: 12,
            ..SearchConfig::default()
        };
        assert!(search_scaled(&check, &cfg).unwrap().is_none());
    }

    #[test]
    fn empty_schema_finds_nothing() {
        let q = QueryExpr::leaf(Query::new(Schema::new()));
        let cfg = SearchConfig {
            mode: SearchMode::Exhaustive,
            ..SearchConfig::default()
        };
        assert!(search_counterexample(&Count::one(), &q, &q, &cfg).unwrap().is_none());
    }

    #[test]
    fn exhaustive_finds_a_minimal_witness() {
        let schema = Schema::new().with_relation("R", 2).unwrap();
        let mut s = Query::new(schema.clone());
        s.atom("R", vec![Term::var("x"), Term::var("y")]).unwrap();
        let mut b = Query::new(schema);
        b.atom("R", vec![Term::var("x"), Term::var("x")]).unwrap();
        let cfg = SearchConfig {
            mode: SearchMode::Exhaustive,
            max_domain: 2,
            ..SearchConfig::default()
        };
        let d = search_counterexample(&Count::one(), &QueryExpr::leaf(s), &QueryExpr::leaf(b), &cfg)
            .unwrap()
            .expect("R(e0,e1) alone");
        assert_eq!(d.num_facts(), 1);
        assert!(!d.has_fact("R", &[0, 0]) && !d.has_fact("R", &[1, 1]));
    }

    #[test]
    fn exhaustive_respects_state_budget() {
        let schema = Schema::new().with_relation("R", 2).unwrap();
        let mut s = Query::new(schema);
        s.atom("R", vec![Term::var("x"), Term::var("y")]).unwrap();
        let q = QueryExpr::leaf(s);
        let cfg = SearchConfig {
            mode: SearchMode::Exhaustive,
            max_states: 1,
            ..SearchConfig::default()
        };
        assert!(search_counterexample(&Count::from_u64(2), &q, &q, &cfg).unwrap().is_none());
        let cfg = SearchConfig { max_states: 2, ..cfg };
        assert!(search_counterexample(&Count::from_u64(2), &q, &q, &cfg).unwrap().is_some());
    }
}
