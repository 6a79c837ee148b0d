//! Integer polynomials and their normalization into Hilbert instances.
//!
//! A Hilbert instance is a pair `P_s`, `P_b` with natural coefficients over the
//! same monomials `T_1 … T_m`, all of one degree `d` and all starting with
//! variable 1, with `1 ≤ c_{s,m} ≤ c_{b,m}`, plus a constant `ƈ ≥ 2`. The
//! instance asks whether `ƈ·P_s(Ξ) > Ξ(1)^d·P_b(Ξ)` for some valuation `Ξ`.
//! [`normalize_hilbert`] produces one from any nonzero `Q` over variables
//! `2..n` such that such a `Ξ` exists iff `Q` has a natural root.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Values of numerical variables, by index.
pub type Valuation = BTreeMap<usize, u64>;

/// A monomial as its sorted list of variable indices (with repetition).
///
/// Sorting ascending puts every occurrence of variable 1 first.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial {
    vars: Vec<usize>,
}

impl Monomial {
    pub fn new(mut vars: Vec<usize>) -> Monomial {
        vars.sort_unstable();
        Monomial { vars }
    }

    pub fn one() -> Monomial {
        Monomial { vars: Vec::new() }
    }

    pub fn vars(&self) -> &[usize] {
        &self.vars
    }

    pub fn degree(&self) -> usize {
        self.vars.len()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial::new(self.vars.iter().chain(&other.vars).copied().collect())
    }

    /// `ξ_1^k · self`.
    pub fn pad_first(&self, k: usize) -> Monomial {
        Monomial::new(std::iter::repeat_n(1, k).chain(self.vars.iter().copied()).collect())
    }

    pub fn eval(&self, v: &Valuation) -> Result<BigUint> {
        let mut acc = BigUint::one();
        for i in &self.vars {
            let x = v
                .get(i)
                .ok_or_else(|| Error::Polynomial(format!("valuation misses variable x{i}")))?;
            acc *= BigUint::from(*x);
        }
        Ok(acc)
    }
}

/// Canonical term order: degree descending, then index list descending.
fn term_order(a: &Monomial, b: &Monomial) -> Ordering {
    b.degree().cmp(&a.degree()).then_with(|| b.vars.cmp(&a.vars))
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.vars.is_empty() {
            return write!(f, "1");
        }
        let mut first = true;
        let mut i = 0;
        while i < self.vars.len() {
            let x = self.vars[i];
            let run = self.vars[i..].iter().take_while(|&&y| y == x).count();
            if !first {
                write!(f, "*")?;
            }
            first = false;
            write!(f, "x{x}")?;
            if run > 1 {
                write!(f, "^{run}")?;
            }
            i += run;
        }
        Ok(())
    }
}

/// A polynomial with integer coefficients over variables `1..=num_vars`.
///
/// Terms are kept merged, nonzero, and sorted in the canonical term order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Polynomial {
    num_vars: usize,
    terms: Vec<(BigInt, Monomial)>,
}

impl Polynomial {
    pub fn new(num_vars: usize, terms: Vec<(BigInt, Monomial)>) -> Result<Polynomial> {
        if num_vars == 0 {
            return Err(Error::Polynomial("a polynomial needs at least one variable slot".into()));
        }
        if let Some(bad) = terms.iter().flat_map(|(_, m)| m.vars.iter()).find(|&&i| i == 0 || i > num_vars) {
            return Err(Error::Polynomial(format!("variable index {bad} outside 1..={num_vars}")));
        }
        let mut merged: BTreeMap<Monomial, BigInt> = BTreeMap::new();
        for (c, m) in terms {
            *merged.entry(m).or_default() += c;
        }
        let mut terms: Vec<(BigInt, Monomial)> = merged.into_iter().filter(|(_, c)| !c.is_zero()).map(|(m, c)| (c, m)).collect();
        terms.sort_by(|a, b| term_order(&a.1, &b.1));
        Ok(Polynomial { num_vars, terms })
    }

    pub fn zero(num_vars: usize) -> Polynomial {
        Polynomial { num_vars, terms: Vec::new() }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn terms(&self) -> &[(BigInt, Monomial)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn monomials(&self) -> Vec<Monomial> {
        self.terms.iter().map(|(_, m)| m.clone()).collect()
    }

    /// Coefficient of `m` (zero if absent).
    pub fn coefficient(&self, m: &Monomial) -> BigInt {
        self.terms.iter().find(|(_, t)| t == m).map(|(c, _)| c.clone()).unwrap_or_default()
    }

    /// Indices of variables occurring in some term, ascending.
    pub fn occurring_vars(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = self.terms.iter().flat_map(|(_, m)| m.vars.iter().copied()).collect();
        set.into_iter().collect()
    }

    pub fn max_degree(&self) -> usize {
        self.terms.iter().map(|(_, m)| m.degree()).max().unwrap_or(0)
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let n = self.num_vars.max(other.num_vars);
        Polynomial::new(n, self.terms.iter().chain(&other.terms).cloned().collect()).expect("indices already valid")
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let n = self.num_vars.max(other.num_vars);
        let mut terms = Vec::new();
        for (a, ma) in &self.terms {
            for (b, mb) in &other.terms {
                terms.push((a * b, ma.mul(mb)));
            }
        }
        Polynomial::new(n, terms).expect("indices already valid")
    }

    pub fn scale(&self, k: &BigInt) -> Polynomial {
        Polynomial::new(self.num_vars, self.terms.iter().map(|(c, m)| (c * k, m.clone())).collect()).expect("indices already valid")
    }

    /// Terms with positive coefficient, and the negated negative terms.
    fn split_signs(&self) -> (Polynomial, Polynomial) {
        let pick = |sign: Sign| {
            let terms = self
                .terms
                .iter()
                .filter(|(c, _)| c.sign() == sign)
                .map(|(c, m)| (c.abs(), m.clone()))
                .collect();
            Polynomial::new(self.num_vars, terms).expect("indices already valid")
        };
        (pick(Sign::Plus), pick(Sign::Minus))
    }

    fn constant(num_vars: usize, c: i64) -> Polynomial {
        Polynomial::new(num_vars, vec![(BigInt::from(c), Monomial::one())]).expect("valid")
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (c, m)) in self.terms.iter().enumerate() {
            let mag = c.abs();
            match (i, c.is_negative()) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            if m.degree() == 0 {
                write!(f, "{mag}")?;
            } else if mag.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{mag}*{m}")?;
            }
        }
        Ok(())
    }
}

/// Exact value of `p` at `v`.
pub fn eval_poly(p: &Polynomial, v: &Valuation) -> Result<BigInt> {
    let mut acc = BigInt::zero();
    for (c, m) in &p.terms {
        acc += c * BigInt::from(m.eval(v)?);
    }
    Ok(acc)
}

/// Steps of the normalization, kept for inspection.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Intermediates {
    pub q: Polynomial,
    /// `Q²₋ + 1`.
    pub p1: Polynomial,
    /// `Q²₊`.
    pub p2: Polynomial,
    /// `P₁ + P` where `P` sums the monomials of `P₁` and `P₂`.
    pub p1_prime: Polynomial,
    pub p2_prime: Polynomial,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HilbertInstance {
    pub p_s: Polynomial,
    pub p_b: Polynomial,
    pub c_frak: BigUint,
    /// Common degree of the monomials.
    pub d: usize,
    /// Number of monomials.
    pub m_count: usize,
    /// Number of numerical variables.
    pub n_count: usize,
    /// `(n, j, m)` such that variable `n` is the `j`-th variable of `T_m`; 1-based.
    pub positions: BTreeSet<(usize, usize, usize)>,
    pub intermediates: Option<Intermediates>,
}

impl HilbertInstance {
    /// Derives `d`, `m`, `n` and the position relation from `P_s`.
    pub fn from_parts(p_s: Polynomial, p_b: Polynomial, c_frak: BigUint) -> HilbertInstance {
        let d = p_s.max_degree();
        let m_count = p_s.terms.len();
        let n_count = p_s.num_vars.max(p_b.num_vars);
        let mut positions = BTreeSet::new();
        for (mi, (_, t)) in p_s.terms.iter().enumerate() {
            for (j, &n) in t.vars.iter().enumerate() {
                positions.insert((n, j + 1, mi + 1));
            }
        }
        HilbertInstance {
            p_s,
            p_b,
            c_frak,
            d,
            m_count,
            n_count,
            positions,
            intermediates: None,
        }
    }

    /// `T_1 … T_m`.
    pub fn monomials(&self) -> Vec<Monomial> {
        self.p_s.monomials()
    }

    /// `c_{s,m}` for `m = 1..`, as naturals.
    pub fn coeffs_s(&self) -> Vec<BigUint> {
        self.p_s.terms.iter().map(|(c, _)| c.magnitude().clone()).collect()
    }

    /// `c_{b,m}` aligned with the monomials of `P_s`.
    pub fn coeffs_b(&self) -> Vec<BigUint> {
        self.monomials().iter().map(|m| self.p_b.coefficient(m).magnitude().clone()).collect()
    }

    /// Whether `ƈ·P_s(Ξ) > Ξ(1)^d·P_b(Ξ)`.
    pub fn violated_at(&self, v: &Valuation) -> Result<bool> {
        let lhs = BigInt::from(self.c_frak.clone()) * eval_poly(&self.p_s, v)?;
        let x1 = v.get(&1).copied().ok_or_else(|| Error::Polynomial("valuation misses variable x1".into()))?;
        let rhs = BigInt::from(x1).pow(self.d as u32) * eval_poly(&self.p_b, v)?;
        Ok(lhs > rhs)
    }
}

/// Builds a Hilbert instance from a nonzero `Q` over variables `2..n`.
pub fn normalize_hilbert(q: &Polynomial) -> Result<HilbertInstance> {
    if q.is_zero() {
        return Err(Error::Polynomial("Q is identically zero".into()));
    }
    if q.occurring_vars().contains(&1) {
        return Err(Error::Polynomial("variable x1 is reserved for homogenization".into()));
    }
    let n = q.num_vars;
    let square = q.mul(q);
    let (pos, neg) = square.split_signs();
    let p1 = neg.add(&Polynomial::constant(n, 1));
    let p2 = pos;
    let t: BTreeSet<Monomial> = p1.monomials().into_iter().chain(p2.monomials()).collect();
    let sum_t = Polynomial::new(n, t.iter().map(|m| (BigInt::one(), m.clone())).collect())?;
    let p1_prime = p1.add(&sum_t);
    let p2_prime = p2.add(&sum_t);
    let d = 1 + t.iter().map(Monomial::degree).max().expect("T is nonempty");
    let homogenize = |p: &Polynomial| {
        let terms = p.terms.iter().map(|(c, m)| (c.clone(), m.pad_first(d - m.degree()))).collect();
        Polynomial::new(n, terms)
    };
    let p_s = homogenize(&p1_prime)?;
    let c_frak = p1_prime
        .terms
        .iter()
        .map(|(c, _)| c.magnitude().clone())
        .max()
        .expect("P'1 is nonempty");
    let p_b = homogenize(&p2_prime)?.scale(&BigInt::from(c_frak.clone()));
    let mut inst = HilbertInstance::from_parts(p_s, p_b, c_frak);
    inst.intermediates = Some(Intermediates {
        q: q.clone(),
        p1,
        p2,
        p1_prime,
        p2_prime,
    });
    Ok(inst)
}

/// A failed instance condition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub kind: &'static str,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.detail)
    }
}

/// Checks the instance conditions; an empty list means the instance is valid.
pub fn validate_instance(inst: &HilbertInstance) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut bad = |kind: &'static str, detail: String| out.push(Violation { kind, detail });
    if inst.p_s.monomials() != inst.p_b.monomials() {
        bad("monomial lists", "P_s and P_b have different monomials".into());
    }
    if inst.m_count != inst.p_s.terms.len() || inst.m_count == 0 {
        bad("monomial lists", format!("expected {} monomials, found {}", inst.m_count, inst.p_s.terms.len()));
    }
    for (mi, (_, t)) in inst.p_s.terms.iter().chain(&inst.p_b.terms).enumerate() {
        if t.degree() != inst.d {
            bad("degree", format!("monomial {t} has degree {}, expected {}", t.degree(), inst.d));
        }
        if t.vars.first() != Some(&1) {
            bad("first variable", format!("monomial #{} ({t}) does not start with x1", mi + 1));
        }
    }
    for (mi, (cs, t)) in inst.p_s.terms.iter().enumerate() {
        let cb = inst.p_b.coefficient(t);
        if *cs < BigInt::one() || *cs > cb {
            bad("coefficient order", format!("T_{} = {t}: need 1 <= {cs} <= {cb}", mi + 1));
        }
    }
    if inst.c_frak < BigUint::from(2u32) {
        bad("constant", format!("ƈ = {} is below 2", inst.c_frak));
    }
    for (j, m) in (1..=inst.d).flat_map(|j| (1..=inst.m_count).map(move |m| (j, m))) {
        let hits = inst.positions.iter().filter(|&&(_, pj, pm)| pj == j && pm == m).count();
        if hits != 1 {
            bad("positions", format!("position {j} of T_{m} has {hits} variables"));
        }
    }
    if let Some(&(n, _, _)) = inst.positions.iter().find(|&&(n, _, _)| n == 0 || n > inst.n_count) {
        bad("positions", format!("variable index {n} outside 1..={}", inst.n_count));
    }
    out
}

/// Lexicographically least root of `q` with every occurring variable at most
/// `bound`, if any.
pub fn find_root_bruteforce(q: &Polynomial, bound: u64) -> Option<Valuation> {
    let vars = q.occurring_vars();
    let mut vals = vec![0u64; vars.len()];
    loop {
        let v: Valuation = vars.iter().copied().zip(vals.iter().copied()).collect();
        if eval_poly(q, &v).expect("valuation covers occurring variables").is_zero() {
            return Some(v);
        }
        // Last variable varies fastest.
        let mut p = vars.len();
        loop {
            if p == 0 {
                return None;
            }
            p -= 1;
            if vals[p] < bound {
                vals[p] += 1;
                break;
            }
            vals[p] = 0;
        }
    }
}
