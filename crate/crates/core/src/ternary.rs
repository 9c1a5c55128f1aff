//! Representation counts of diagonal ternary forms `a x^2 + b y^2 + c z^2`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::FactoredSquareFree;

/// Largest `n` accepted by the counters.
pub const COUNT_LIMIT: u64 = 100_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TernaryError {
    #[error("n = {0} outside 1..=10^8")]
    Overflow(u64),
    #[error("odd plain count {count} for {form} at n = {n}")]
    ParityViolation { form: TernaryForm, n: u64, count: u64 },
    #[error("no ternary criterion for n = {0}")]
    UnsupportedClass(u64),
    #[error("r = {r} at n = {n} has 2-adic valuation below {mu}")]
    NotSquareCompatible { n: u64, r: i64, mu: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TernaryForm {
    pub a: u64,
    pub b: u64,
    pub c: u64,
}

impl std::fmt::Display for TernaryForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x^2+{}y^2+{}z^2", self.a, self.b, self.c)
    }
}

/// `x^2 + 3y^2 + 36z^2`, for `CL(-n)`, `n ≡ 7 mod 24`.
pub const FORM_1_3_36: TernaryForm = TernaryForm { a: 1, b: 3, c: 36 };
/// `x^2 + 3y^2 + 12z^2`, for `CL(n)`, `n ≡ 7 mod 24`.
pub const FORM_1_3_12: TernaryForm = TernaryForm { a: 1, b: 3, c: 12 };
/// `6x^2 + y^2 + 2z^2`, for `CL(-n)`, `n ≡ 3 mod 24`, evaluated at `n/3`.
pub const FORM_6_1_2: TernaryForm = TernaryForm { a: 6, b: 1, c: 2 };
/// `x^2 + 3y^2 + 4z^2`, for `CL(n)`, `n ≡ 3 mod 24`, evaluated at `n/3`.
pub const FORM_1_3_4: TernaryForm = TernaryForm { a: 1, b: 3, c: 4 };

fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// `#{(x, y, z) in Z^3 : Q(x, y, z) = n}`, or with `z` replaced by `2z`.
pub fn count_representations(q: TernaryForm, n: u64, double_third: bool) -> Result<u64, TernaryError> {
    if n == 0 || n > COUNT_LIMIT {
        return Err(TernaryError::Overflow(n));
    }
    let mut coef = [q.a, q.b, if double_third { 4 * q.c } else { q.c }];
    // loop over the two largest coefficients, solve for the smallest
    coef.sort_unstable_by(|x, y| y.cmp(x));
    let [c1, c2, c3] = coef;
    let mut count = 0;
    let xmax = isqrt(n / c1);
    for x in 0..=xmax {
        let rx = n - c1 * x * x;
        let wx = if x == 0 { 1 } else { 2 };
        let ymax = isqrt(rx / c2);
        for y in 0..=ymax {
            let ry = rx - c2 * y * y;
            if ry % c3 != 0 {
                continue;
            }
            let s = ry / c3;
            let t = isqrt(s);
            if t * t == s {
                let wy = if y == 0 { 1 } else { 2 };
                let wz = if t == 0 { 1 } else { 2 };
                count += wx * wy * wz;
            }
        }
    }
    Ok(count)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepCount {
    pub n: u64,
    pub plain: u64,
    pub doubled: u64,
    pub r: i64,
}

/// `r_Q(n) = #{Q(x, y, 2z) = n} - #{Q(x, y, z) = n} / 2`.
pub fn rep_count(q: TernaryForm, n: u64) -> Result<RepCount, TernaryError> {
    let plain = count_representations(q, n, false)?;
    if plain % 2 == 1 {
        return Err(TernaryError::ParityViolation { form: q, n, count: plain });
    }
    let doubled = count_representations(q, n, true)?;
    Ok(RepCount { n, plain, doubled, r: doubled as i64 - (plain / 2) as i64 })
}

pub fn r_value(q: TernaryForm, n: u64) -> Result<i64, TernaryError> {
    Ok(rep_count(q, n)?.r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TernaryParity {
    pub form: TernaryForm,
    /// Argument at which the form is evaluated (`n` or `n/3`).
    pub argument: u64,
    pub mu: u32,
    pub r: i64,
    pub cl_odd: bool,
}

/// Form and evaluation point for the twist `twist_sign * n`.
pub fn criterion_for(n: u64, twist_sign: i8) -> Option<(TernaryForm, u64)> {
    match (n % 24, twist_sign < 0) {
        (7, true) => Some((FORM_1_3_36, n)),
        (7, false) => Some((FORM_1_3_12, n)),
        (3, true) if n > 3 => Some((FORM_6_1_2, n / 3)),
        (3, false) if n > 3 => Some((FORM_1_3_4, n / 3)),
        _ => None,
    }
}

/// Parity of `CL(twist_sign * n)` from `ord_2 r_Q = μ`; `r = 0` counts as even.
pub fn sha_parity_ternary(n: &FactoredSquareFree, twist_sign: i8) -> Result<TernaryParity, TernaryError> {
    let nv = n.magnitude();
    if n.sign() < 0 {
        return Err(TernaryError::UnsupportedClass(nv));
    }
    let (form, argument) = criterion_for(nv, twist_sign).ok_or(TernaryError::UnsupportedClass(nv))?;
    let mu = if argument == nv { n.omega() } else { n.omega() - 1 } as u32;
    let r = r_value(form, argument)?;
    if r == 0 {
        return Ok(TernaryParity { form, argument, mu, r, cl_odd: false });
    }
    let v = r.unsigned_abs().trailing_zeros();
    if v < mu {
        return Err(TernaryError::NotSquareCompatible { n: argument, r, mu });
    }
    Ok(TernaryParity { form, argument, mu, r, cl_odd: v == mu })
}
