//! Exact integer arithmetic for square-free inputs.
//!
//! Everything downstream consumes a [`FactoredSquareFree`]: a signed
//! square-free integer split as `sign * 2^has2 * 3^has3 * l_1 * ... * l_k`
//! with `5 <= l_1 < ... < l_k`. Quadratic symbols are kept additively
//! (`0` for a residue, `1` for a non-residue) so the matrix code never has to
//! translate between `{+1, -1}` and bits.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest accepted magnitude (exclusive).
pub const MAGNITUDE_LIMIT: u64 = 1 << 62;

/// Trial division bound before Pollard rho takes over.
const TRIAL_BOUND: u64 = 1_000_000;

/// Iteration budget for a single Pollard rho attempt.
const RHO_BUDGET: u64 = 1 << 22;

/// Polynomial constants tried by Pollard rho, in order.
const RHO_CONSTANTS: [u64; 8] = [1, 3, 5, 7, 11, 13, 17, 19];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ArithError {
    #[error("{0} is not square-free")]
    NotSquareFree(i64),
    #[error("could not factor cofactor {cofactor} of {n} within budget")]
    FactorizationFailure { n: i64, cofactor: u64 },
    #[error("domain error: {0}")]
    Domain(String),
}

/// A signed square-free integer with its prime factorization.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FactoredSquareFree {
    value: i64,
    sign: i8,
    has2: bool,
    has3: bool,
    odd_primes: Vec<u64>,
}

impl FactoredSquareFree {
    pub fn value(&self) -> i64 {
        self.value
    }

    pub fn magnitude(&self) -> u64 {
        self.value.unsigned_abs()
    }

    /// `+1` or `-1`.
    pub fn sign(&self) -> i8 {
        self.sign
    }

    pub fn has2(&self) -> bool {
        self.has2
    }

    pub fn has3(&self) -> bool {
        self.has3
    }

    /// Prime factors `> 3`, strictly ascending.
    pub fn odd_primes(&self) -> &[u64] {
        &self.odd_primes
    }

    /// All odd prime factors (3 included when present), ascending.
    pub fn odd_prime_factors(&self) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.odd_primes.len() + 1);
        if self.has3 {
            out.push(3);
        }
        out.extend_from_slice(&self.odd_primes);
        out
    }

    /// All prime factors, ascending.
    pub fn prime_factors(&self) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.odd_primes.len() + 2);
        if self.has2 {
            out.push(2);
        }
        out.extend(self.odd_prime_factors());
        out
    }

    /// Number of distinct prime factors.
    pub fn omega(&self) -> usize {
        self.odd_primes.len() + usize::from(self.has2) + usize::from(self.has3)
    }

    /// The prime-to-6 part of `|n|`.
    pub fn prime_to_six(&self) -> u64 {
        self.odd_primes.iter().product()
    }

    /// `-n`, already factored.
    pub fn negate(&self) -> Self {
        Self {
            value: -self.value,
            sign: -self.sign,
            ..self.clone()
        }
    }

    /// `|n|`, already factored.
    pub fn abs(&self) -> Self {
        if self.sign > 0 {
            self.clone()
        } else {
            self.negate()
        }
    }

    /// Builds a factored value from a sign and a list of distinct primes.
    pub fn from_primes(sign: i8, primes: &[u64]) -> Result<Self, ArithError> {
        let mut sorted = primes.to_vec();
        sorted.sort_unstable();
        let mut value: u64 = 1;
        for w in sorted.windows(2) {
            if w[0] == w[1] {
                return Err(ArithError::Domain(format!("repeated prime {}", w[0])));
            }
        }
        for &p in &sorted {
            if !is_prime(p) {
                return Err(ArithError::Domain(format!("{p} is not prime")));
            }
            value = value
                .checked_mul(p)
                .filter(|v| *v < MAGNITUDE_LIMIT)
                .ok_or_else(|| ArithError::Domain("product exceeds 2^62".into()))?;
        }
        let sign = if sign < 0 { -1 } else { 1 };
        Ok(Self {
            value: i64::from(sign) * value as i64,
            sign,
            has2: sorted.first() == Some(&2),
            has3: sorted.contains(&3),
            odd_primes: sorted.into_iter().filter(|&p| p > 3).collect(),
        })
    }

    /// Divisors of `|n|`, ascending.
    pub fn divisors(&self) -> Vec<u64> {
        let mut out = vec![1u64];
        for p in self.prime_factors() {
            let len = out.len();
            for i in 0..len {
                out.push(out[i] * p);
            }
        }
        out.sort_unstable();
        out
    }
}

/// Miller–Rabin bases that are deterministic for every `u64`.
const MR_BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

#[inline]
fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic primality test for all `u64`.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &MR_BASES {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &MR_BASES {
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

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Brent's variant of Pollard rho with a fixed constant; `None` on budget.
fn pollard_rho(n: u64, c: u64) -> Option<u64> {
    if n % 2 == 0 {
        return Some(2);
    }
    let f = |x: u64| (mul_mod(x, x, n) + c) % n;
    let (mut x, mut y, mut q) = (2u64, 2u64, 1u64);
    let mut g = 1;
    let mut r = 1u64;
    let mut ys = y;
    let mut spent = 0u64;
    while g == 1 {
        x = y;
        for _ in 0..r {
            y = f(y);
        }
        let mut k = 0;
        while k < r && g == 1 {
            ys = y;
            let steps = 128.min(r - k);
            for _ in 0..steps {
                y = f(y);
                q = mul_mod(q, x.abs_diff(y), n);
            }
            g = gcd(q, n);
            k += steps;
            spent += steps;
        }
        r *= 2;
        if spent > RHO_BUDGET {
            return None;
        }
    }
    if g == n {
        loop {
            ys = f(ys);
            g = gcd(x.abs_diff(ys), n);
            if g > 1 {
                break;
            }
        }
    }
    (g != n).then_some(g)
}

fn split_into(n: u64, out: &mut Vec<u64>) -> Result<(), u64> {
    if n == 1 {
        return Ok(());
    }
    if is_prime(n) {
        out.push(n);
        return Ok(());
    }
    for &c in &RHO_CONSTANTS {
        if let Some(d) = pollard_rho(n, c) {
            split_into(d, out)?;
            split_into(n / d, out)?;
            return Ok(());
        }
    }
    Err(n)
}

/// Factors `|n|` into primes (with multiplicity), ascending.
pub fn factor_u64(n: u64) -> Result<Vec<u64>, u64> {
    let mut out = Vec::new();
    let mut rest = n;
    for p in [2u64, 3, 5] {
        while rest % p == 0 {
            out.push(p);
            rest /= p;
        }
    }
    // wheel mod 30 for the remaining trial division
    const STEPS: [u64; 8] = [4, 2, 4, 2, 4, 6, 2, 6];
    let mut p = 7u64;
    let mut i = 0;
    while p <= TRIAL_BOUND && p * p <= rest {
        while rest % p == 0 {
            out.push(p);
            rest /= p;
        }
        p += STEPS[i];
        i = (i + 1) % 8;
    }
    if rest > 1 {
        split_into(rest, &mut out)?;
    }
    out.sort_unstable();
    Ok(out)
}

/// Factors a nonzero square-free integer.
pub fn factor_squarefree(n: i64) -> Result<FactoredSquareFree, ArithError> {
    if n == 0 {
        return Err(ArithError::Domain("zero has no square-free factorization".into()));
    }
    let mag = n.unsigned_abs();
    if mag >= MAGNITUDE_LIMIT {
        return Err(ArithError::Domain(format!("|{n}| >= 2^62")));
    }
    let primes =
        factor_u64(mag).map_err(|cofactor| ArithError::FactorizationFailure { n, cofactor })?;
    if primes.windows(2).any(|w| w[0] == w[1]) {
        return Err(ArithError::NotSquareFree(n));
    }
    let sign = if n < 0 { -1 } else { 1 };
    Ok(FactoredSquareFree {
        value: n,
        sign,
        has2: primes.first() == Some(&2),
        has3: primes.contains(&3),
        odd_primes: primes.into_iter().filter(|&p| p > 3).collect(),
    })
}

/// Cheap square-freeness check for range scans.
pub fn is_squarefree(n: u64) -> bool {
    if n == 0 {
        return false;
    }
    match factor_u64(n) {
        Ok(ps) => ps.windows(2).all(|w| w[0] != w[1]),
        Err(_) => false,
    }
}

/// Smallest-prime-factor table for every `n < limit`.
#[derive(Debug, Clone)]
pub struct FactorSieve {
    spf: Vec<u32>,
}

impl FactorSieve {
    pub fn new(limit: u32) -> Self {
        let limit = limit as usize;
        let mut spf = vec![0u32; limit.max(2)];
        for i in 2..limit {
            if spf[i] == 0 {
                spf[i] = i as u32;
                for j in (i.saturating_mul(i)..limit).step_by(i) {
                    if spf[j] == 0 {
                        spf[j] = i as u32;
                    }
                }
            }
        }
        Self { spf }
    }

    pub fn limit(&self) -> u64 {
        self.spf.len() as u64
    }

    /// Ascending prime factors of `n`, or `None` when `n` is not square-free.
    pub fn squarefree_primes(&self, mut n: u64) -> Option<Vec<u64>> {
        assert!(n >= 1 && n < self.limit(), "{n} outside the sieve");
        let mut out: Vec<u64> = Vec::new();
        while n > 1 {
            let p = u64::from(self.spf[n as usize]);
            if out.last() == Some(&p) {
                return None;
            }
            out.push(p);
            n /= p;
        }
        Some(out)
    }
}

/// Jacobi symbol `(a/n)` for odd positive `n`, as `-1`, `0` or `1`.
pub fn jacobi(a: i64, n: u64) -> i8 {
    debug_assert!(n % 2 == 1);
    let mut a = a.rem_euclid(n as i64) as u64;
    let mut n = n;
    let mut t = 1i8;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            if matches!(n % 8, 3 | 5) {
                t = -t;
            }
        }
        (a, n) = (n, a);
        if a % 4 == 3 && n % 4 == 3 {
            t = -t;
        }
        a %= n;
    }
    if n == 1 {
        t
    } else {
        0
    }
}

/// Additive symbol `[a/p] = (1 - (a/p)) / 2` for an odd prime `p` not dividing `a`.
pub fn additive_legendre(a: i64, p: u64) -> Result<bool, ArithError> {
    if p % 2 == 0 || !is_prime(p) {
        return Err(ArithError::Domain(format!("{p} is not an odd prime")));
    }
    match jacobi(a, p) {
        0 => Err(ArithError::Domain(format!("{p} divides {a}"))),
        s => Ok(s < 0),
    }
}

/// Unchecked additive Legendre bit; callers guarantee `p` odd prime, `p ∤ a`.
#[inline]
pub(crate) fn leg(a: i64, p: u64) -> bool {
    jacobi(a, p) < 0
}

/// Additive Jacobi symbol `[a/n]` for odd positive `n` coprime to `a`.
pub fn additive_jacobi(a: i64, n: u64) -> Result<bool, ArithError> {
    if n % 2 == 0 {
        return Err(ArithError::Domain(format!("{n} is even")));
    }
    match jacobi(a, n) {
        0 => Err(ArithError::Domain(format!("gcd({a}, {n}) > 1"))),
        s => Ok(s < 0),
    }
}

/// Σ-equivalence class for `Σ = {∞, 2, 3}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SigmaClass {
    pub sign: i8,
    pub v2: bool,
    /// Odd part of `|n|` (2 removed) modulo 8.
    pub odd8: u8,
    pub v3: bool,
    /// 3-free part of `|n|` modulo 3.
    pub mod3: u8,
}

impl SigmaClass {
    /// All 64 classes, in a fixed order.
    pub fn all() -> Vec<SigmaClass> {
        let mut out = Vec::with_capacity(64);
        for sign in [1i8, -1] {
            for v2 in [false, true] {
                for odd8 in [1u8, 3, 5, 7] {
                    for v3 in [false, true] {
                        for mod3 in [1u8, 2] {
                            out.push(SigmaClass { sign, v2, odd8, v3, mod3 });
                        }
                    }
                }
            }
        }
        out
    }

    /// Smallest positive-magnitude square-free representative.
    pub fn representative(&self) -> i64 {
        (1..)
            .find(|&m: &u64| {
                m % 4 != 0
                    && m % 9 != 0
                    && is_squarefree(m)
                    && sigma_class_of(i64::from(self.sign) * m as i64) == *self
            })
            .map(|m| i64::from(self.sign) * m as i64)
            .expect("every class is inhabited")
    }
}

impl std::fmt::Display for SigmaClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "[{}|v2={}|{} mod 8|v3={}|{} mod 3]",
            if self.sign > 0 { '+' } else { '-' },
            u8::from(self.v2),
            self.odd8,
            u8::from(self.v3),
            self.mod3
        )
    }
}

/// Class of an arbitrary nonzero integer (not necessarily square-free).
pub fn sigma_class_of(n: i64) -> SigmaClass {
    assert!(n != 0);
    let mut m = n.unsigned_abs();
    let v2 = m.trailing_zeros();
    m >>= v2;
    let odd8 = (m % 8) as u8;
    let mut m3 = n.unsigned_abs();
    let mut v3 = 0;
    while m3 % 3 == 0 {
        m3 /= 3;
        v3 += 1;
    }
    SigmaClass {
        sign: if n < 0 { -1 } else { 1 },
        v2: v2 % 2 == 1,
        odd8,
        v3: v3 % 2 == 1,
        mod3: (m3 % 3) as u8,
    }
}

pub fn sigma_class(n: &FactoredSquareFree) -> SigmaClass {
    sigma_class_of(n.value())
}

/// Positive divisors `d` of `|n|` with `d ≡ residue (mod modulus)`, ascending.
pub fn divisors_matching(n: &FactoredSquareFree, residue: i64, modulus: u64) -> Vec<u64> {
    let r = residue.rem_euclid(modulus as i64) as u64;
    n.divisors().into_iter().filter(|d| d % modulus == r).collect()
}

/// Square-class product: `a * b` with common square factors removed.
/// Both inputs must be square-free.
pub fn sqfree_mul(a: i64, b: i64) -> i64 {
    let g = gcd(a.unsigned_abs(), b.unsigned_abs()) as i64;
    (a / g) * (b / g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sieve_matches_factor() {
        let sv = FactorSieve::new(5000);
        for n in 1..5000u64 {
            let got = sv.squarefree_primes(n);
            assert_eq!(got.is_some(), is_squarefree(n), "n = {n}");
            if let Some(ps) = got {
                assert_eq!(ps, factor_u64(n).unwrap());
            }
        }
    }

    #[test]
    fn factor_examples() {
        let f = factor_squarefree(7).unwrap();
        assert_eq!(f.sign(), 1);
        assert_eq!(f.odd_primes(), &[7]);
        assert!(!f.has2() && !f.has3());

        let f = factor_squarefree(51).unwrap();
        assert!(f.has3());
        assert_eq!(f.odd_primes(), &[17]);

        assert_eq!(factor_squarefree(12), Err(ArithError::NotSquareFree(12)));
        assert!(matches!(factor_squarefree(0), Err(ArithError::Domain(_))));
    }

    #[test]
    fn factor_negative_and_large() {
        let f = factor_squarefree(-2 * 3 * 5 * 7).unwrap();
        assert_eq!(f.sign(), -1);
        assert!(f.has2() && f.has3());
        assert_eq!(f.odd_primes(), &[5, 7]);
        // two primes above the trial-division bound
        let p = 1_000_003u64;
        let q = 2_147_483_647u64;
        let f = factor_squarefree((p * q) as i64).unwrap();
        assert_eq!(f.odd_primes(), &[p, q]);
        assert_eq!(
            factor_squarefree((p * p) as i64),
            Err(ArithError::NotSquareFree((p * p) as i64))
        );
    }

    #[test]
    fn primality_small_table() {
        let sieve: Vec<u64> = (2..2000u64)
            .filter(|&n| (2..n).take_while(|d| d * d <= n).all(|d| n % d != 0))
            .collect();
        let mr: Vec<u64> = (0..2000).filter(|&n| is_prime(n)).collect();
        assert_eq!(sieve, mr);
        // strong pseudoprime to bases 2..=11
        assert!(!is_prime(3_215_031_751));
        assert!(is_prime(18_446_744_073_709_551_557));
    }

    #[test]
    fn additive_legendre_examples() {
        assert_eq!(additive_legendre(1, 7), Ok(false));
        assert_eq!(additive_legendre(3, 7), Ok(true));
        assert_eq!(additive_legendre(-1, 7), Ok(true));
        assert!(additive_legendre(14, 7).is_err());
        assert!(additive_legendre(3, 8).is_err());
    }

    #[test]
    fn sigma_class_examples() {
        let s = sigma_class(&factor_squarefree(7).unwrap());
        assert_eq!(s, SigmaClass { sign: 1, v2: false, odd8: 7, v3: false, mod3: 1 });
        let s = sigma_class(&factor_squarefree(-5).unwrap());
        assert_eq!(s, SigmaClass { sign: -1, v2: false, odd8: 5, v3: false, mod3: 2 });
        assert_eq!(sigma_class_of(51), sigma_class_of(51 * 25));
        assert_eq!(SigmaClass::all().len(), 64);
    }

    #[test]
    fn every_class_has_a_representative() {
        for c in SigmaClass::all() {
            assert_eq!(sigma_class_of(c.representative()), c);
        }
    }

    #[test]
    fn divisor_examples() {
        let n = |v| factor_squarefree(v).unwrap();
        assert_eq!(divisors_matching(&n(55), 11, 24), vec![11]);
        assert_eq!(divisors_matching(&n(7), 11, 24), Vec::<u64>::new());
        assert_eq!(divisors_matching(&n(51), 1, 24), vec![1]);
        assert_eq!(n(30).divisors(), vec![1, 2, 3, 5, 6, 10, 15, 30]);
    }
}
