//! Exact naturals in factored form `Π base^exp`.
//!
//! The reduction raises small bases to exponents around `10^25`, so counts are
//! kept factored. Bases that fit in 64 bits are split into primes, which makes
//! the representation canonical; comparison of unequal values falls back to
//! interval evaluation of `Σ exp·ln(base)` at increasing precision.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Values whose estimated size is at most this many bits are compared by
/// materializing them.
const MATERIALIZE_BITS: f64 = 8192.0;

#[derive(Clone, Debug)]
pub struct Count {
    // Normal form: sorted by base, bases distinct and > 1, exponents > 0.
    // The single pair (1,1) is the value 1 and (0,1) is the value 0.
    factors: Vec<(BigUint, BigUint)>,
}

impl Count {
    pub fn zero() -> Count {
        Count {
            factors: vec![(BigUint::zero(), BigUint::one())],
        }
    }

    pub fn one() -> Count {
        Count {
            factors: vec![(BigUint::one(), BigUint::one())],
        }
    }

    pub fn from_u64(n: u64) -> Count {
        Count::from_biguint(BigUint::from(n))
    }

    pub fn from_biguint(n: BigUint) -> Count {
        Count::from_factors(vec![(n, BigUint::one())])
    }

    /// Builds a count from arbitrary `(base, exponent)` pairs and normalizes it.
    pub fn from_factors(pairs: Vec<(BigUint, BigUint)>) -> Count {
        let mut flat: Vec<(BigUint, BigUint)> = Vec::new();
        for (base, exp) in pairs {
            if exp.is_zero() || base.is_one() {
                continue;
            }
            if base.is_zero() {
                return Count::zero();
            }
            match base.to_u64() {
                Some(small) => {
                    for p in factor_u64(small) {
                        flat.push((BigUint::from(p), exp.clone()));
                    }
                }
                None => flat.push((base, exp)),
            }
        }
        flat.sort_by(|a, b| a.0.cmp(&b.0));
        let mut factors: Vec<(BigUint, BigUint)> = Vec::new();
        for (b, e) in flat {
            match factors.last_mut() {
                Some(last) if last.0 == b => last.1 += e,
                _ => factors.push((b, e)),
            }
        }
        if factors.is_empty() {
            Count::one()
        } else {
            Count { factors }
        }
    }

    /// The normal-form factor list.
    pub fn factors(&self) -> &[(BigUint, BigUint)] {
        &self.factors
    }

    pub fn is_zero(&self) -> bool {
        self.factors[0].0.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.factors[0].0.is_one()
    }

    // Factors excluding the sentinel pair for 1.
    fn proper(&self) -> &[(BigUint, BigUint)] {
        if self.is_one() {
            &[]
        } else {
            &self.factors
        }
    }

    pub fn mul(&self, other: &Count) -> Count {
        if self.is_zero() || other.is_zero() {
            return Count::zero();
        }
        let pairs = self.proper().iter().chain(other.proper()).cloned().collect();
        Count::from_factors(pairs)
    }

    pub fn pow(&self, exp: &BigUint) -> Count {
        if exp.is_zero() {
            return Count::one();
        }
        if self.is_zero() || self.is_one() {
            return self.clone();
        }
        Count {
            factors: self.factors.iter().map(|(b, e)| (b.clone(), e * exp)).collect(),
        }
    }

    pub fn product<'a>(items: impl IntoIterator<Item = &'a Count>) -> Count {
        items.into_iter().fold(Count::one(), |acc, c| acc.mul(c))
    }

    /// Estimated `log2` of the value (`-inf` for zero).
    pub fn log2_estimate(&self) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        self.proper()
            .iter()
            .map(|(b, e)| e.to_f64().unwrap_or(f64::INFINITY) * log2_big(b))
            .sum()
    }

    /// Materializes the value. Only call this when the value is known to be small.
    pub fn to_biguint(&self) -> BigUint {
        if self.is_zero() {
            return BigUint::zero();
        }
        let mut acc = BigUint::one();
        for (b, e) in self.proper() {
            let e = e.to_u32().expect("exponent too large to materialize");
            acc *= b.pow(e);
        }
        acc
    }

    /// Materializes the value if it is below `2^max_bits`.
    pub fn to_biguint_below(&self, max_bits: u64) -> Option<BigUint> {
        if self.log2_estimate() > max_bits as f64 + 1.0 {
            return None;
        }
        let n = self.to_biguint();
        (n.bits() <= max_bits).then_some(n)
    }
}

impl Default for Count {
    fn default() -> Self {
        Count::one()
    }
}

impl From<u64> for Count {
    fn from(n: u64) -> Count {
        Count::from_u64(n)
    }
}

impl From<BigUint> for Count {
    fn from(n: BigUint) -> Count {
        Count::from_biguint(n)
    }
}

impl std::ops::Mul for &Count {
    type Output = Count;
    fn mul(self, rhs: &Count) -> Count {
        Count::mul(self, rhs)
    }
}

impl PartialEq for Count {
    fn eq(&self, other: &Count) -> bool {
        compare_counts(self, other) == Ordering::Equal
    }
}

impl Eq for Count {}

impl PartialOrd for Count {
    fn partial_cmp(&self, other: &Count) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Count {
    fn cmp(&self, other: &Count) -> Ordering {
        compare_counts(self, other)
    }
}

impl fmt::Display for Count {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        if self.is_one() {
            return write!(f, "1");
        }
        for (i, (b, e)) in self.factors.iter().enumerate() {
            if i > 0 {
                write!(f, " * ")?;
            }
            if e.is_one() {
                write!(f, "{b}")?;
            } else {
                write!(f, "{b}^{e}")?;
            }
        }
        Ok(())
    }
}

impl FromStr for Count {
    type Err = Error;

    /// Parses `N`, `B^E`, or products of those joined by `*`.
    fn from_str(s: &str) -> Result<Count> {
        let bad = || Error::Unsupported(format!("malformed count literal `{s}`"));
        let mut pairs = Vec::new();
        for part in s.split('*') {
            let part = part.trim();
            if part.is_empty() {
                return Err(bad());
            }
            let (b, e) = match part.split_once('^') {
                Some((b, e)) => (b.trim(), e.trim()),
                None => (part, "1"),
            };
            let b: BigUint = b.parse().map_err(|_| bad())?;
            let e: BigUint = e.parse().map_err(|_| bad())?;
            pairs.push((b, e));
        }
        Ok(Count::from_factors(pairs))
    }
}

/// Exact three-way comparison of two counts.
pub fn compare_counts(a: &Count, b: &Count) -> Ordering {
    match (a.is_zero(), b.is_zero()) {
        (true, true) => return Ordering::Equal,
        (true, false) => return Ordering::Less,
        (false, true) => return Ordering::Greater,
        _ => {}
    }
    if a.factors == b.factors {
        return Ordering::Equal;
    }
    let (la, lb) = (a.log2_estimate(), b.log2_estimate());
    if la.max(lb) <= MATERIALIZE_BITS {
        return a.to_biguint().cmp(&b.to_biguint());
    }

    // Rewrite both sides over a common pairwise-coprime basis, then cancel.
    let all: Vec<BigUint> = a.proper().iter().chain(b.proper()).map(|(x, _)| x.clone()).collect();
    let basis = coprime_basis(all);
    let va = exponent_vector(a.proper(), &basis);
    let vb = exponent_vector(b.proper(), &basis);
    let mut left = Vec::new();
    let mut right = Vec::new();
    for (i, base) in basis.iter().enumerate() {
        match va[i].cmp(&vb[i]) {
            Ordering::Greater => left.push((base.clone(), &va[i] - &vb[i])),
            Ordering::Less => right.push((base.clone(), &vb[i] - &va[i])),
            Ordering::Equal => {}
        }
    }
    match (left.is_empty(), right.is_empty()) {
        (true, true) => Ordering::Equal,
        (false, true) => Ordering::Greater,
        (true, false) => Ordering::Less,
        (false, false) => compare_log_sums(&left, &right),
    }
}

fn log2_big(b: &BigUint) -> f64 {
    let bits = b.bits();
    if bits <= 1000 {
        b.to_f64().unwrap_or(f64::INFINITY).log2()
    } else {
        let shift = bits - 64;
        (b >> shift).to_f64().unwrap().log2() + shift as f64
    }
}

/// Refines a list of integers > 1 into a pairwise-coprime basis such that each
/// input is a product of basis elements.
fn coprime_basis(mut work: Vec<BigUint>) -> Vec<BigUint> {
    work.sort();
    work.dedup();
    'outer: loop {
        for i in 0..work.len() {
            for j in (i + 1)..work.len() {
                let g = work[i].gcd(&work[j]);
                if g.is_one() {
                    continue;
                }
                let (x, y) = (work[i].clone(), work[j].clone());
                work.remove(j);
                work.remove(i);
                for v in [&x / &g, &y / &g, g] {
                    if !v.is_one() {
                        work.push(v);
                    }
                }
                work.sort();
                work.dedup();
                continue 'outer;
            }
        }
        return work;
    }
}

fn exponent_vector(factors: &[(BigUint, BigUint)], basis: &[BigUint]) -> Vec<BigUint> {
    let mut v = vec![BigUint::zero(); basis.len()];
    for (b, e) in factors {
        let mut rest = b.clone();
        for (k, p) in basis.iter().enumerate() {
            let mut mult = 0u64;
            while (&rest % p).is_zero() {
                rest /= p;
                mult += 1;
            }
            if mult > 0 {
                v[k] += e * BigUint::from(mult);
            }
        }
        debug_assert!(rest.is_one(), "base not covered by coprime basis");
    }
    v
}

/// Compares `Σ e·ln b` over two factor lists with disjoint coprime bases.
fn compare_log_sums(left: &[(BigUint, BigUint)], right: &[(BigUint, BigUint)]) -> Ordering {
    let max_exp_bits = left.iter().chain(right).map(|(_, e)| e.bits()).max().unwrap_or(0);
    let mut prec = 64 + max_exp_bits as u32;
    loop {
        let (sl, el) = log_sum(left, prec);
        let (sr, er) = log_sum(right, prec);
        let diff = &sl - &sr;
        let slack = BigInt::from(el + er);
        if diff > slack {
            return Ordering::Greater;
        }
        if -diff > slack {
            return Ordering::Less;
        }
        // Distinct multiplicatively independent sides have distinct logs, so
        // enough precision always separates them.
        prec *= 2;
    }
}

// Returns an approximation of Σ e·ln(b)·2^prec and an absolute error bound.
fn log_sum(factors: &[(BigUint, BigUint)], prec: u32) -> (BigInt, BigUint) {
    let (ln2, ln2_err) = ln2_fixed(prec);
    let mut sum = BigInt::zero();
    let mut err = BigUint::zero();
    for (b, e) in factors {
        let (l, l_err) = ln_fixed(b, prec, &ln2, ln2_err);
        sum += BigInt::from(e * l);
        err += e * BigUint::from(l_err);
    }
    (sum, err)
}

// atanh(u) for fixed-point u = U/2^prec, |u| <= 1/3. Returns (value, ulp error bound).
fn atanh_fixed(u: &BigUint, prec: u32) -> (BigUint, u64) {
    let u2 = u * u;
    let mut pow = u.clone();
    let mut sum = BigUint::zero();
    let mut k = 0u64;
    loop {
        let term = &pow / BigUint::from(2 * k + 1);
        if term.is_zero() {
            break;
        }
        sum += term;
        pow = (&pow * &u2) >> (2 * prec as u64);
        k += 1;
    }
    (sum, 3 * (k + 2))
}

fn ln2_fixed(prec: u32) -> (BigUint, u64) {
    let third = (BigUint::one() << prec) / BigUint::from(3u32);
    let (a, err) = atanh_fixed(&third, prec);
    (a << 1, 2 * err + 4)
}

fn ln_fixed(b: &BigUint, prec: u32, ln2: &BigUint, ln2_err: u64) -> (BigUint, u64) {
    let s = b.bits() - 1;
    let p = prec as u64;
    let mantissa = if p >= s { b << (p - s) } else { b >> (s - p) };
    let unit = BigUint::one() << p;
    let u = ((&mantissa - &unit) << p) / (&mantissa + &unit);
    let (at, at_err) = atanh_fixed(&u, prec);
    let value = BigUint::from(s) * ln2 + (at << 1);
    (value, s * ln2_err + 2 * at_err + 8)
}

const SMALL_PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut a: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1u64 % m;
    a %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, a, m);
        }
        a = mul_mod(a, a, m);
        e >>= 1;
    }
    r
}

/// Deterministic Miller-Rabin for 64-bit integers.
fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in SMALL_PRIMES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for a in SMALL_PRIMES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

// Brent's variant of Pollard's rho; n must be odd and composite.
fn pollard_rho(n: u64) -> u64 {
    let mut c = 1u64;
    loop {
        let f = |x: u64| (mul_mod(x, x, n) + c) % n;
        let (mut x, mut y, mut d) = (2u64, 2u64, 1u64);
        while d == 1 {
            x = f(x);
            y = f(f(y));
            d = x.abs_diff(y).gcd(&n);
        }
        if d != n {
            return d;
        }
        c += 1;
    }
}

/// Prime factors of `n` with multiplicity, ascending. `n >= 2`.
pub(crate) fn factor_u64(n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut n = n;
    for p in 2..1000u64 {
        if p * p > n {
            break;
        }
        while n.is_multiple_of(p) {
            out.push(p);
            n /= p;
        }
    }
    let mut stack = vec![n];
    while let Some(m) = stack.pop() {
        if m == 1 {
            continue;
        }
        if is_prime_u64(m) {
            out.push(m);
        } else {
            let d = pollard_rho(m);
            stack.push(d);
            stack.push(m / d);
        }
    }
    out.sort_unstable();
    out
}
