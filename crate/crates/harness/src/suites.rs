//! Named property suites over random or exhaustive inputs.
//!
//! Every trial draws from stream `trial` of a generator keyed by the suite
//! seed, so a failure replays from `(suite, params, seed, trial)` alone.

use std::cmp::Ordering;
use std::time::{Duration, Instant};

use bagcq_core::encoder::{
    assemble, build_correct_database, build_pi, classify_database, delta_base, identify_constants, instance_schema,
    DbClassification,
};
use bagcq_core::gadgets::{alpha_witness, beta_witness, build_alpha, build_beta, build_gamma, gamma_witness, GadgetPair};
use bagcq_core::polyreduce::{eval_poly, normalize_hilbert, validate_instance, HilbertInstance, Monomial, Polynomial, Valuation};
use bagcq_core::qalgebra::{blowup, inequality_elimination_witness, power, power_product, product, strip_inequalities, DEFAULT_K_CAP};
use bagcq_core::random::random_database_stream;
use bagcq_core::{compare_counts, hom_count, Count, Database, Query, QueryExpr, Schema, Term};
use num_bigint::{BigInt, BigUint};
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::formats::{write_database, write_query};
use crate::gen::{naive_count, random_query, QueryShape};

pub const SUITES: &[&str] = &[
    "beta", "gamma", "alpha", "lemma1", "lemma17", "lemma4", "lemma7", "encoder", "assembly", "appendixB", "ineq_elim",
    "oracle",
];

#[derive(Debug, thiserror::Error)]
pub enum SuiteError {
    #[error("unknown suite `{0}` (known: {known})", known = SUITES.join(", "))]
    UnknownSuite(String),
    #[error(transparent)]
    Core(#[from] bagcq_core::Error),
}

#[derive(Clone, Debug)]
pub struct SuiteParams {
    /// Gadget parameter: β arity, γ arity, or α multiplier.
    pub n: usize,
    /// Random databases have between 2 and `max_domain` elements.
    pub max_domain: usize,
    /// Largest value in exhaustive valuation boxes.
    pub bound: u64,
}

impl Default for SuiteParams {
    fn default() -> Self {
        SuiteParams {
            n: 3,
            max_domain: 4,
            bound: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Failure {
    pub trial: u64,
    pub seed: u64,
    pub detail: String,
    /// Serialized inputs of the failing trial.
    pub witness: String,
}

#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub suite: String,
    pub trials: u64,
    pub failures: Vec<Failure>,
    pub wall_time: Duration,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

impl std::fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "suite {}: {} trials, {} failures, {:.2?}",
            self.suite,
            self.trials,
            self.failures.len(),
            self.wall_time
        )?;
        for x in &self.failures {
            writeln!(f, "  trial {} (seed {}): {}", x.trial, x.seed, x.detail)?;
            for line in x.witness.lines() {
                writeln!(f, "    {line}")?;
            }
        }
        Ok(())
    }
}

type Outcome = Result<Option<(String, String)>, SuiteError>;

fn fail(detail: impl Into<String>, witness: impl Into<String>) -> Outcome {
    Ok(Some((detail.into(), witness.into())))
}

fn rng_for(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// A random non-trivial database over `schema` for one trial.
pub fn trial_database(schema: &Schema, max_domain: usize, seed: u64, trial: u64) -> bagcq_core::Result<Database> {
    let mut rng = rng_for(seed, trial);
    let dom = rng.gen_range(2..=max_domain.max(2));
    let density = rng.gen_range(0.1..0.9);
    // Stream offset keeps the database draw independent of the two above.
    random_database_stream(schema, dom, density, seed, trial | 1 << 63, true)
}

/// The polynomials `ξ₂−1`, `1`, `2ξ₂+1`, `ξ₂ξ₃−6`, `ξ₂²+1`.
pub fn builtin_family() -> Vec<Polynomial> {
    let p = |n: usize, terms: &[(i64, &[usize])]| {
        Polynomial::new(n, terms.iter().map(|(c, m)| (BigInt::from(*c), Monomial::new(m.to_vec()))).collect())
            .expect("indices in range")
    };
    vec![
        p(2, &[(1, &[2]), (-1, &[])]),
        p(1, &[(1, &[])]),
        p(2, &[(2, &[2]), (1, &[])]),
        p(3, &[(1, &[2, 3]), (-6, &[])]),
        p(2, &[(1, &[2, 2]), (1, &[])]),
    ]
}

/// `Q = ξ₂ − 1`.
pub fn tiny_polynomial() -> Polynomial {
    builtin_family().swap_remove(0)
}

/// All valuations of `1..=n` with values in `0..=bound`, last index fastest.
pub fn valuation_box(n: usize, bound: u64) -> Vec<Valuation> {
    let mut out = vec![Valuation::new()];
    for x in 1..=n {
        out = out
            .into_iter()
            .flat_map(|v| {
                (0..=bound).map(move |a| {
                    let mut w = v.clone();
                    w.insert(x, a);
                    w
                })
            })
            .collect();
    }
    out
}

fn gadget_trial(g: &GadgetPair, witness: &Database, p: &SuiteParams, seed: u64, trial: u64) -> Outcome {
    if trial == 0 && !g.equality_holds(witness)? {
        let (s, b) = g.counts(witness)?;
        return fail(format!("witness gives ({s}, {b}), not multiplier {}", g.multiplier), write_database(witness));
    }
    let d = trial_database(&g.schema, p.max_domain, seed, trial)?;
    if !g.upper_bound_holds(&d)? {
        let (s, b) = g.counts(&d)?;
        return fail(format!("q_s = {s} exceeds {} · q_b = {b}", g.multiplier), write_database(&d));
    }
    Ok(None)
}

fn lemma1_trial(seed: u64, trial: u64) -> Outcome {
    let schema = Schema::new().with_relation("R", 2)?.with_relation("U", 1)?.with_constant("c");
    let mut rng = rng_for(seed, trial);
    let shape = QueryShape {
        max_vars: 3,
        max_atoms: 3,
        const_prob: 0.2,
        neq_prob: 0.3,
    };
    let q1 = random_query(&schema, shape, &mut rng);
    let q2 = random_query(&schema, shape, &mut rng);
    let d = random_database_stream(&schema, rng.gen_range(2..=3), rng.gen_range(0.2..0.8), seed, trial | 1 << 63, true)?;
    let witness = || format!("{}---\n{}---\n{}", write_query(&q1), write_query(&q2), write_database(&d));
    let (c1, c2) = (hom_count(&q1, &d)?, hom_count(&q2, &d)?);
    let both = QueryExpr::dand(vec![QueryExpr::leaf(q1.clone()), QueryExpr::leaf(q2.clone())]);
    let flat = both.flatten(bagcq_core::qalgebra::DEFAULT_FLATTEN_CAP)?;
    let expected = Count::from_biguint(&c1 * &c2);
    if both.eval(&d)? != expected || Count::from_biguint(hom_count(&flat, &d)?) != expected {
        return fail("disjoint conjunction does not multiply", witness());
    }
    for k in 0..=3u32 {
        let e = power(QueryExpr::leaf(q1.clone()), k);
        let want = Count::from_biguint(c1.pow(k));
        if e.eval(&d)? != want || Count::from_biguint(hom_count(&e.flatten(1000)?, &d)?) != want {
            return fail(format!("power {k} does not exponentiate"), witness());
        }
    }
    Ok(None)
}

fn lemma17_trial(seed: u64, trial: u64) -> Outcome {
    let schema = Schema::new().with_relation("R", 2)?.with_relation("U", 1)?;
    let mut rng = rng_for(seed, trial);
    let q = random_query(&schema, QueryShape::plain(3, 3), &mut rng);
    let d = random_database_stream(&schema, rng.gen_range(2..=3), rng.gen_range(0.2..0.8), seed, trial | 1 << 63, true)?;
    let witness = || format!("{}---\n{}", write_query(&q), write_database(&d));
    let base = hom_count(&q, &d)?;
    let j = q.num_variables() as u32;
    let k = rng.gen_range(1..=3usize);
    if hom_count(&q, &blowup(&d, k)?)? != BigUint::from(k).pow(j) * &base {
        return fail(format!("blowup by {k} does not scale by {k}^{j}"), witness());
    }
    if hom_count(&q, &product(&d, &d)?)? != &base * &base {
        return fail("product does not square", witness());
    }
    if trial.is_multiple_of(4) && hom_count(&q, &power_product(&d, 3)?)? != base.pow(3) {
        return fail("third power product does not cube", witness());
    }
    Ok(None)
}

fn lemma4_trial(p: &SuiteParams, seed: u64, trial: u64) -> Outcome {
    let inst = normalize_hilbert(&tiny_polynomial())?;
    let (pi_s, pi_b) = build_pi(&inst)?;
    let d = trial_database(&instance_schema(&inst)?, p.max_domain, seed, trial)?;
    let (s, b) = (hom_count(&pi_s, &d)?, hom_count(&pi_b, &d)?);
    if s > b {
        return fail(format!("π_s = {s} > π_b = {b}"), write_database(&d));
    }
    Ok(None)
}

fn lemma7_item(inst: &HilbertInstance, v: &Valuation) -> Outcome {
    let (pi_s, pi_b) = build_pi(inst)?;
    let d = build_correct_database(inst, v)?;
    let s = BigInt::from(hom_count(&pi_s, &d)?);
    let b = BigInt::from(hom_count(&pi_b, &d)?);
    let ps = eval_poly(&inst.p_s, v)?;
    let x1 = BigInt::from(*v.get(&1).unwrap_or(&0));
    let pb = x1.pow(inst.d as u32) * eval_poly(&inst.p_b, v)?;
    if s != ps || b != pb {
        return fail(format!("at {v:?}: π_s = {s} vs {ps}, π_b = {b} vs {pb}"), write_database(&d));
    }
    Ok(None)
}

fn encoder_checks() -> Outcome {
    let inst = normalize_hilbert(&tiny_polynomial())?;
    let out = assemble(&inst)?;
    let arena = &out.arena_db;
    if out.zeta_b.eval(arena)? != out.constants.c1 {
        return fail("ζ_b(arena) differs from c₁", "");
    }
    if !out.delta_b.eval(arena)?.is_one() {
        return fail("δ_b(arena) differs from 1", "");
    }
    let correct = build_correct_database(&inst, &[(1, 1), (2, 1)].into_iter().collect())?;
    let mut slight = correct.clone();
    slight.add_fact("S1", &["a", "a1"])?;
    if classify_database(&slight, &inst)? != DbClassification::SlightlyIncorrect
        || compare_counts(&out.zeta_b.eval(&slight)?, &out.c) == Ordering::Less
    {
        return fail("slightly incorrect database escapes ζ_b", write_database(&slight));
    }
    let serious = identify_constants(&correct, "b1", "b2")?;
    if classify_database(&serious, &inst)? != DbClassification::SeriouslyIncorrect
        || compare_counts(&delta_base(&inst)?.eval(&serious)?, &Count::from_u64(2)) == Ordering::Less
    {
        return fail("seriously incorrect database escapes δ_b", write_database(&serious));
    }
    Ok(None)
}

/// `c·φ_s(D)` against `φ_b(D)` on the correct database for `v`.
pub fn assembly_sides(inst: &HilbertInstance, v: &Valuation) -> bagcq_core::Result<(Count, Count)> {
    let out = assemble(inst)?;
    let d = build_correct_database(inst, v)?;
    Ok((out.c.mul(&out.phi_s.eval(&d)?), out.phi_b.eval(&d)?))
}

fn assembly_item(inst: &HilbertInstance, v: &Valuation) -> Outcome {
    let (lhs, rhs) = assembly_sides(inst, v)?;
    let expect = if inst.violated_at(v)? { Ordering::Greater } else { Ordering::Less };
    let got = compare_counts(&lhs, &rhs);
    // Violations must carry over; non-violations may tie.
    let ok = match expect {
        Ordering::Greater => got == Ordering::Greater,
        _ => got != Ordering::Greater,
    };
    if !ok {
        return fail(format!("at {v:?}: c·φ_s = {lhs}, φ_b = {rhs}"), "");
    }
    Ok(None)
}

fn appendix_b_item(q: &Polynomial, v: &Valuation) -> Outcome {
    let inst = normalize_hilbert(q)?;
    let issues = validate_instance(&inst);
    if !issues.is_empty() {
        let list: Vec<String> = issues.iter().map(ToString::to_string).collect();
        return fail(format!("{q}: invalid instance: {}", list.join("; ")), "");
    }
    let im = inst.intermediates.as_ref().expect("recorded by normalization");
    let root = eval_poly(q, v)?.is_zero();
    let wins = eval_poly(&im.p1, v)? > eval_poly(&im.p2, v)?;
    if root != wins {
        return fail(format!("{q} at {v:?}: root {root}, P₁ > P₂ {wins}"), "");
    }
    Ok(None)
}

/// `R(x,y) ∧ x≠y` against `S(z,z)` on `{R(1,2)}`.
pub fn crafted_inequality_example() -> bagcq_core::Result<(Query, Query, Database)> {
    let schema = Schema::new().with_relation("R", 2)?.with_relation("S", 2)?;
    let mut q_s = Query::new(schema.clone());
    q_s.atom("R", vec![Term::var("x"), Term::var("y")])?;
    q_s.push_neq(Term::var("x"), Term::var("y"))?;
    let mut q_b = Query::new(schema.clone());
    q_b.atom("S", vec![Term::var("z"), Term::var("z")])?;
    let mut d0 = Database::new(schema);
    d0.add_element("1");
    d0.add_element("2");
    d0.add_fact("R", &["1", "2"])?;
    Ok((q_s, q_b, d0))
}

fn ineq_elim_trial(seed: u64, trial: u64) -> Outcome {
    let (q_s, q_b, d0) = crafted_inequality_example()?;
    if trial == 0 {
        let d = inequality_elimination_witness(&q_s, &q_b, &d0, DEFAULT_K_CAP)?;
        if hom_count(&q_s, &d)? <= hom_count(&q_b, &d)? {
            return fail("transform output does not separate the pair", write_database(&d));
        }
    }
    let mut rng = rng_for(seed, trial);
    let dom = rng.gen_range(1..=3);
    let d = random_database_stream(q_s.schema(), dom, rng.gen_range(0.2..0.9), seed, trial | 1 << 63, false)?;
    let b = blowup(&d, 2)?;
    let (s, stripped) = (hom_count(&q_s, &b)?, hom_count(&strip_inequalities(&q_s), &b)?);
    if &s * 2u32 < stripped {
        return fail(format!("ψ_s = {s} below ψ′_s / 2 = {stripped}/2 on the blow-up"), write_database(&d));
    }
    Ok(None)
}

fn oracle_trial(seed: u64, trial: u64) -> Outcome {
    let schema = Schema::new().with_relation("R", 2)?.with_relation("U", 1)?.with_relation("T", 3)?.with_constant("c");
    let mut rng = rng_for(seed, trial);
    let shape = QueryShape {
        max_vars: 4,
        max_atoms: 4,
        const_prob: 0.15,
        neq_prob: 0.3,
    };
    let q = random_query(&schema, shape, &mut rng);
    let d = random_database_stream(&schema, rng.gen_range(2..=4), rng.gen_range(0.1..0.9), seed, trial | 1 << 63, true)?;
    let want = naive_count(&q, &d).expect("all constants interpreted");
    let got = hom_count(&q, &d)?;
    if got != want {
        return fail(format!("engine {got}, enumeration {want}"), format!("{}---\n{}", write_query(&q), write_database(&d)));
    }
    Ok(None)
}

// Items of the exhaustive suites, indexed like trials.
fn lemma7_items(p: &SuiteParams) -> bagcq_core::Result<(HilbertInstance, Vec<Valuation>)> {
    let inst = normalize_hilbert(&tiny_polynomial())?;
    let vals = valuation_box(inst.n_count, p.bound);
    Ok((inst, vals))
}

fn assembly_items(p: &SuiteParams) -> bagcq_core::Result<Vec<(HilbertInstance, Valuation)>> {
    let mut out = Vec::new();
    for q in [tiny_polynomial(), builtin_family().swap_remove(2)] {
        let inst = normalize_hilbert(&q)?;
        for v in valuation_box(inst.n_count, p.bound) {
            out.push((inst.clone(), v));
        }
    }
    Ok(out)
}

fn appendix_b_items(p: &SuiteParams) -> Vec<(Polynomial, Valuation)> {
    builtin_family()
        .into_iter()
        .flat_map(|q| {
            valuation_box(q.num_vars(), p.bound.max(1))
                .into_iter()
                .map(move |v| (q.clone(), v))
        })
        .collect()
}

fn gadget(name: &str, n: usize) -> bagcq_core::Result<(GadgetPair, Database)> {
    Ok(match name {
        "beta" => (build_beta(n)?, beta_witness(n)?),
        "gamma" => (build_gamma(n)?, gamma_witness(n)?),
        _ => (build_alpha(n)?, alpha_witness(n)?),
    })
}

/// Number of trials the suite runs: the requested count for random suites,
/// the size of the input box for exhaustive ones.
pub fn suite_trials(name: &str, p: &SuiteParams, trials: u64) -> Result<u64, SuiteError> {
    Ok(match name {
        "lemma7" => lemma7_items(p)?.1.len() as u64,
        "assembly" => assembly_items(p)?.len() as u64,
        "appendixB" => appendix_b_items(p).len() as u64,
        "encoder" => 1,
        n if SUITES.contains(&n) => trials,
        other => return Err(SuiteError::UnknownSuite(other.to_string())),
    })
}

/// Runs one trial; `Some` describes a failure.
pub fn run_trial(name: &str, p: &SuiteParams, seed: u64, trial: u64) -> Result<Option<Failure>, SuiteError> {
    let outcome = match name {
        "beta" | "gamma" | "alpha" => {
            let (g, w) = gadget(name, p.n)?;
            gadget_trial(&g, &w, p, seed, trial)
        }
        "lemma1" => lemma1_trial(seed, trial),
        "lemma17" => lemma17_trial(seed, trial),
        "lemma4" => lemma4_trial(p, seed, trial),
        "lemma7" => {
            let (inst, vals) = lemma7_items(p)?;
            lemma7_item(&inst, &vals[trial as usize])
        }
        "encoder" => encoder_checks(),
        "assembly" => {
            let (inst, v) = assembly_items(p)?.swap_remove(trial as usize);
            assembly_item(&inst, &v)
        }
        "appendixB" => {
            let (q, v) = appendix_b_items(p).swap_remove(trial as usize);
            appendix_b_item(&q, &v)
        }
        "ineq_elim" => ineq_elim_trial(seed, trial),
        "oracle" => oracle_trial(seed, trial),
        other => return Err(SuiteError::UnknownSuite(other.to_string())),
    }?;
    Ok(outcome.map(|(detail, witness)| Failure {
        trial,
        seed,
        detail,
        witness,
    }))
}

/// Runs all trials of a suite; the report is deterministic given the seed.
pub fn run_suite(name: &str, p: &SuiteParams, trials: u64, seed: u64) -> Result<SuiteReport, SuiteError> {
    let start = Instant::now();
    let n = suite_trials(name, p, trials)?;
    let mut failures = Vec::new();
    match name {
        // Exhaustive suites share their setup across items.
        "lemma7" => {
            let (inst, vals) = lemma7_items(p)?;
            for (i, v) in vals.iter().enumerate() {
                collect(&mut failures, lemma7_item(&inst, v)?, i as u64, seed);
            }
        }
        "assembly" => {
            for (i, (inst, v)) in assembly_items(p)?.iter().enumerate() {
                collect(&mut failures, assembly_item(inst, v)?, i as u64, seed);
            }
        }
        _ => {
            for t in 0..n {
                if let Some(f) = run_trial(name, p, seed, t)? {
                    failures.push(f);
                }
            }
        }
    }
    Ok(SuiteReport {
        suite: name.to_string(),
        trials: n,
        failures,
        wall_time: start.elapsed(),
    })
}

fn collect(failures: &mut Vec<Failure>, outcome: Option<(String, String)>, trial: u64, seed: u64) {
    if let Some((detail, witness)) = outcome {
        failures.push(Failure {
            trial,
            seed,
            detail,
            witness,
        });
    }
}
