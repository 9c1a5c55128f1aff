//! Class groups of imaginary quadratic fields: Rédei-matrix parities and an
//! exact oracle built on reduced binary quadratic forms.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{factor_u64, FactorSieve, FactoredSquareFree};
use crate::descent::DescentData;
use crate::f2linalg::{block, Cell, F2Matrix, F2Vector};

/// Largest `|disc|` the oracle accepts.
pub const ORACLE_DISC_LIMIT: u64 = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ClassGroupError {
    #[error("{0} is not a negative fundamental discriminant")]
    NotFundamental(i64),
    #[error("|disc| = {0} exceeds the oracle limit")]
    TooLarge(u64),
    #[error("domain error: {0}")]
    Domain(String),
}

/// Positive definite form `a x^2 + b xy + c y^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QuadForm {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl QuadForm {
    pub fn new(a: i64, b: i64, c: i64) -> Self {
        Self { a, b, c }
    }

    pub fn disc(&self) -> i64 {
        self.b * self.b - 4 * self.a * self.c
    }

    pub fn is_reduced(&self) -> bool {
        let Self { a, b, c } = *self;
        b.abs() <= a && a <= c && !(b < 0 && (b.abs() == a || a == c))
    }

    /// Principal form of discriminant `d`.
    pub fn identity(d: i64) -> Self {
        let b = d.rem_euclid(2);
        Self { a: 1, b, c: (b * b - d) / 4 }
    }

    pub fn inverse(&self) -> Self {
        Self { a: self.a, b: -self.b, c: self.c }.reduce()
    }

    /// Ambiguous reduced forms are exactly the classes of order dividing 2.
    pub fn is_ambiguous(&self) -> bool {
        self.b == 0 || self.a == self.b || self.a == self.c
    }

    pub fn reduce(mut self) -> Self {
        loop {
            if self.b > self.a || self.b <= -self.a {
                // x -> x + ky brings b into (-a, a]
                let two_a = 2 * self.a;
                let mut r = self.b.rem_euclid(two_a);
                if r > self.a {
                    r -= two_a;
                }
                let k = (r - self.b) / two_a;
                self.c += k * (self.a * k + self.b);
                self.b = r;
            }
            if self.a > self.c {
                self = Self { a: self.c, b: -self.b, c: self.a };
                continue;
            }
            if self.a == self.c && self.b < 0 {
                self.b = -self.b;
            }
            return self;
        }
    }

    /// Gauss composition, reduced.
    pub fn compose(&self, other: &QuadForm) -> QuadForm {
        let (mut f1, mut f2) = (*self, *other);
        if f1.a > f2.a {
            std::mem::swap(&mut f1, &mut f2);
        }
        let (a1, b1) = (f1.a, f1.b);
        let (a2, b2, c2) = (f2.a, f2.b, f2.c);
        let s = (b1 + b2) / 2;
        let n = b2 - s;
        let (d, y1) = if a2 % a1 == 0 {
            (a1, 0)
        } else {
            let (g, u, _) = ext_gcd(a2, a1);
            (g, u)
        };
        let (d1, x2, y2) = if s % d == 0 {
            (d, 0, -1)
        } else {
            let (g, x, y) = ext_gcd(s, d);
            (g, x, -y)
        };
        let v1 = a1 / d1;
        let v2 = a2 / d1;
        let r = (y1 * y2 * n - x2 * c2).rem_euclid(v1);
        let b3 = b2 + 2 * v2 * r;
        let a3 = v1 * v2;
        let c3 = (c2 * d1 + r * (b2 + v2 * r)) / v1;
        QuadForm { a: a3, b: b3, c: c3 }.reduce()
    }
}

/// `(g, x, y)` with `a x + b y = g = gcd(a, b) >= 0`.
fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    let (mut r0, mut r1) = (a, b);
    let (mut x0, mut x1) = (1i64, 0i64);
    let (mut y0, mut y1) = (0i64, 1i64);
    while r1 != 0 {
        let q = r0.div_euclid(r1);
        (r0, r1) = (r1, r0 - q * r1);
        (x0, x1) = (x1, x0 - q * x1);
        (y0, y1) = (y1, y0 - q * y1);
    }
    if r0 < 0 {
        (-r0, -x0, -y0)
    } else {
        (r0, x0, y0)
    }
}

/// Discriminant of `Q(sqrt(-n))` for square-free `n > 0`.
pub fn field_disc(n: u64) -> i64 {
    if n % 4 == 3 {
        -(n as i64)
    } else {
        -4 * n as i64
    }
}

/// Number of distinct primes dividing `d`.
pub fn mu(d: i64) -> u32 {
    let mut ps = factor_u64(d.unsigned_abs()).expect("small discriminant factors");
    ps.dedup();
    ps.len() as u32
}

pub fn is_fundamental(d: i64) -> bool {
    if d >= 0 {
        return false;
    }
    let m = d.unsigned_abs();
    let sqfree = |x: u64| {
        let ps = factor_u64(x).expect("small input factors");
        ps.windows(2).all(|w| w[0] != w[1])
    };
    match d.rem_euclid(4) {
        1 => sqfree(m),
        0 => {
            let q = m / 4;
            // d/4 ≡ 2, 3 mod 4 for negative d means q ≡ 2, 1 mod 4
            matches!(q % 4, 1 | 2) && sqfree(q)
        }
        _ => false,
    }
}

/// All reduced forms of discriminant `d < 0`, sorted.
pub fn reduced_forms(d: i64) -> Vec<QuadForm> {
    let mut out = Vec::new();
    let amax = ((-d) as f64 / 3.0).sqrt() as i64 + 1;
    for a in 1..=amax {
        for b in -a + 1..=a {
            if (b - d).rem_euclid(2) != 0 {
                continue;
            }
            let num = b * b - d;
            if num % (4 * a) != 0 {
                continue;
            }
            let f = QuadForm { a, b, c: num / (4 * a) };
            if f.is_reduced() && gcd3(f.a, f.b, f.c) == 1 {
                out.push(f);
            }
        }
    }
    out.sort();
    out
}

fn gcd3(a: i64, b: i64, c: i64) -> i64 {
    let g = |mut x: i64, mut y: i64| {
        x = x.abs();
        y = y.abs();
        while y != 0 {
            (x, y) = (y, x % y);
        }
        x
    };
    g(g(a, b), c)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassGroupSummary {
    pub disc: i64,
    pub h: u64,
    pub two_cl: u64,
    pub four_rank: u32,
}

/// Class number, `#2Cl` and 4-rank by exhaustive enumeration of reduced forms.
pub fn class_group_oracle(disc: i64) -> Result<ClassGroupSummary, ClassGroupError> {
    if disc.unsigned_abs() > ORACLE_DISC_LIMIT {
        return Err(ClassGroupError::TooLarge(disc.unsigned_abs()));
    }
    if !is_fundamental(disc) {
        return Err(ClassGroupError::NotFundamental(disc));
    }
    let forms = reduced_forms(disc);
    let h = forms.len() as u64;
    let squares: HashSet<QuadForm> = forms.iter().map(|f| f.compose(f)).collect();
    let amb_sq = squares.iter().filter(|f| f.is_ambiguous()).count();
    let genus = 1u64 << (mu(disc) - 1);
    Ok(ClassGroupSummary {
        disc,
        h,
        two_cl: h / genus,
        four_rank: amb_sq.trailing_zeros(),
    })
}

fn check_n(n: &FactoredSquareFree) -> Result<(), ClassGroupError> {
    if n.sign() < 0 || n.magnitude() <= 1 {
        return Err(ClassGroupError::Domain(format!("need n > 1, got {}", n.value())));
    }
    Ok(())
}

fn odd_part(n: &FactoredSquareFree) -> FactoredSquareFree {
    FactoredSquareFree::from_primes(1, &n.odd_prime_factors()).expect("sub-product of a square-free")
}

/// Parity of `g(n) = #2Cl(Q(sqrt(-n)))` from Rédei matrices (1 = odd).
pub fn genus_parity_redei(n: &FactoredSquareFree) -> Result<bool, ClassGroupError> {
    check_n(n)?;
    if n.has2() {
        let dd = DescentData::from_odd(&odd_part(n)).expect("odd part");
        return Ok(dd.a_plus_d(2).det().expect("square"));
    }
    let dd = DescentData::from_odd(n).expect("odd input");
    if n.magnitude() % 4 == 3 {
        Ok(dd.a_plus_d(-1).det().expect("square"))
    } else {
        genus_parity_bordered(&dd, 0)
    }
}

/// `det [[A, z_2], [e_i^T, 0]]` for `n ≡ 1 mod 4`; the value does not depend on `i`.
pub fn genus_parity_bordered(dd: &DescentData, i: usize) -> Result<bool, ClassGroupError> {
    let k = dd.k();
    if i >= k {
        return Err(ClassGroupError::Domain(format!("border index {i} out of range 0..{k}")));
    }
    let m = block(&[
        vec![Cell::M(dd.a().clone()), Cell::Col(dd.z(2))],
        vec![Cell::Row(F2Vector::unit(k, i)), Cell::Bit(false)],
    ])
    .expect("consistent shapes");
    Ok(m.det().expect("square"))
}

/// Alternative border for `n ≡ 1 mod 4`:
/// `det [[A + D_{-1}, e_i], [z_2^T + [2/n] z_{-1}^T, 0]]`.
pub fn genus_parity_bordered_alt(dd: &DescentData, i: usize) -> Result<bool, ClassGroupError> {
    let k = dd.k();
    if i >= k {
        return Err(ClassGroupError::Domain(format!("border index {i} out of range 0..{k}")));
    }
    let two_n = crate::arith::jacobi(2, dd.n().magnitude()) < 0;
    let mut row = dd.z(2);
    if two_n {
        row.xor_assign(&dd.z(-1));
    }
    let m = block(&[
        vec![Cell::M(dd.a_plus_d(-1)), Cell::Col(F2Vector::unit(k, i))],
        vec![Cell::Row(row), Cell::Bit(false)],
    ])
    .expect("consistent shapes");
    Ok(m.det().expect("square"))
}

/// 4-rank of `Cl(Q(sqrt(-n)))` for `n ≡ 3 mod 4` as `corank(A + D_{-1})`.
pub fn four_rank_redei(n: &FactoredSquareFree) -> Result<u32, ClassGroupError> {
    check_n(n)?;
    if n.magnitude() % 4 != 3 {
        return Err(ClassGroupError::Domain(format!("{} is not 3 mod 4", n.value())));
    }
    let dd = DescentData::from_odd(n).expect("odd input");
    Ok(dd.a_plus_d(-1).corank() as u32)
}

/// `corank(A) - 1`, the other expression for the same 4-rank.
pub fn four_rank_from_a(n: &FactoredSquareFree) -> Result<u32, ClassGroupError> {
    four_rank_redei(n)?;
    let dd = DescentData::from_odd(n).expect("odd input");
    Ok(dd.a().corank() as u32 - 1)
}

/// Rédei matrix `A(n)` including the prime 3 when it divides `n`.
pub fn redei_matrix(n: &FactoredSquareFree) -> Result<F2Matrix, ClassGroupError> {
    check_n(n)?;
    Ok(DescentData::from_odd(&odd_part(n)).expect("odd part").a().clone())
}

/// `(#{g(n) odd}, #{n})` over square-free `n ≡ 3 mod 4`, `n < sieve.limit()`,
/// with exactly `omega` prime factors.
pub fn genus_odd_frequency(sieve: &FactorSieve, omega: usize) -> (u64, u64) {
    use rayon::prelude::*;
    (0..sieve.limit().saturating_sub(3).div_ceil(4))
        .into_par_iter()
        .filter_map(|i| {
            let n = 4 * i + 3;
            let ps = sieve.squarefree_primes(n)?;
            (ps.len() == omega).then(|| {
                let f = FactoredSquareFree::from_primes(1, &ps).expect("sieve primes");
                genus_parity_redei(&f).expect("odd n")
            })
        })
        .fold(|| (0u64, 0u64), |(odd, all), g| (odd + u64::from(g), all + 1))
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::factor_squarefree;

    fn f(n: i64) -> FactoredSquareFree {
        factor_squarefree(n).unwrap()
    }

    #[test]
    fn oracle_examples() {
        let s = class_group_oracle(-7).unwrap();
        assert_eq!((s.h, s.two_cl, s.four_rank), (1, 1, 0));
        let s = class_group_oracle(-39).unwrap();
        assert_eq!((s.h, s.two_cl, s.four_rank), (4, 2, 1));
        let s = class_group_oracle(-20).unwrap();
        assert_eq!((s.h, s.two_cl, s.four_rank), (2, 1, 0));
        assert_eq!(reduced_forms(-20), vec![QuadForm::new(1, 0, 5), QuadForm::new(2, 2, 3)]);
        assert_eq!(class_group_oracle(-12), Err(ClassGroupError::NotFundamental(-12)));
    }

    #[test]
    fn redei_examples() {
        assert!(genus_parity_redei(&f(7)).unwrap());
        assert!(!genus_parity_redei(&f(39)).unwrap());
        assert!(genus_parity_redei(&f(51)).unwrap());
        assert_eq!(four_rank_redei(&f(7)).unwrap(), 0);
        assert_eq!(four_rank_redei(&f(39)).unwrap(), 1);
        assert_eq!(four_rank_redei(&f(219)).unwrap(), 1);
        assert!(matches!(four_rank_redei(&f(5)), Err(ClassGroupError::Domain(_))));
    }

    #[test]
    fn reduction_and_composition_basics() {
        let f = QuadForm::new(3, 13, 15).reduce();
        assert!(f.is_reduced());
        assert_eq!(f.disc(), 13 * 13 - 180);
        let d = -23;
        let forms = reduced_forms(d);
        assert_eq!(forms.len(), 3);
        let id = QuadForm::identity(d);
        let g = QuadForm::new(2, 1, 3);
        assert_eq!(g.compose(&id), g);
        assert_eq!(g.compose(&g.inverse()), id);
        assert_eq!(g.compose(&g).compose(&g), id);
    }
}
