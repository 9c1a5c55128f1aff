//! Parity of the analytic Sha `CL(±n)` from genus numbers, and the GF(2)
//! determinant identities tying those parities to Selmer ranks.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{factor_squarefree, ArithError, FactoredSquareFree};
use crate::classgroup::{genus_parity_redei, ClassGroupError};
use crate::curveinv::root_number;
use crate::densitylab::{DensityError, OmegaSample};
use crate::descent::{selmer_dim_matrix, DescentData, DescentError};
use crate::f2linalg::{block, Cell, F2Matrix, F2Vector, LinalgError};

/// Cap on `k` for the subset-sum side of [`det_identity_3`].
pub const SUBSET_SUM_MAX_PRIMES: usize = 12;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ShaError {
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error(transparent)]
    ClassGroup(#[from] ClassGroupError),
    #[error(transparent)]
    Descent(#[from] DescentError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("no genus expression for CL({sign}{n})")]
    UnsupportedClass { n: u64, sign: char },
    #[error("root number of E^({sign}{n}) is -1")]
    SignMinusOne { n: u64, sign: char },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("index {index} out of range for k = {k}")]
    IndexOutOfRange { index: usize, k: usize },
    #[error("mismatch: {0}")]
    Mismatch(String),
}

fn sign_char(s: i8) -> char {
    if s < 0 {
        '-'
    } else {
        '+'
    }
}

/// Parity of `g(d) = #2Cl(Q(sqrt(-d)))`, 1 = odd.
pub fn genus_parity(d: u64) -> Result<bool, ShaError> {
    Ok(genus_parity_redei(&factor_squarefree(d as i64)?)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormulaCase {
    /// `CL(-n) = g(n)` for `n ≡ 2, 6 mod 12` or `n ≡ 3, 11 mod 24`.
    NegGenus,
    /// `CL(-n)`, `n ≡ 7 mod 24`, sum over `d ≡ 11 mod 24`.
    NegSeven,
    /// `CL(-n)` even for `n ≡ 1 mod 12`.
    NegForcedEven,
    /// `CL(n) = g(n)` for `n ≡ 3, 7 mod 12`.
    PosGenus,
    /// `CL(n)`, `n ≡ 5 mod 24`, sum over `d ≡ 7 mod 24`.
    PosFive,
    /// `CL(n)`, `n ≡ 9 mod 24`, nested sum over `d ≡ n - 18 mod 72`.
    PosNine,
}

impl FormulaCase {
    pub fn of(n: u64, twist_sign: i8) -> Option<Self> {
        if twist_sign < 0 {
            match (n % 12, n % 24) {
                (2 | 6, _) | (_, 3 | 11) => Some(Self::NegGenus),
                (_, 7) => Some(Self::NegSeven),
                (1, _) => Some(Self::NegForcedEven),
                _ => None,
            }
        } else {
            match (n % 12, n % 24) {
                (3 | 7, _) => Some(Self::PosGenus),
                (_, 5) => Some(Self::PosFive),
                (_, 9) => Some(Self::PosNine),
                _ => None,
            }
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::NegGenus => "-n: g(n)",
            Self::NegSeven => "-n, 7 mod 24",
            Self::NegForcedEven => "-n, 1 mod 12: even",
            Self::PosGenus => "+n: g(n)",
            Self::PosFive => "+n, 5 mod 24",
            Self::PosNine => "+n, 9 mod 24",
        }
    }
}

/// One product term `left(d) * g(d)`; `left` is `g(n/d)` or, in the nested
/// case, `g(n/d) + Σ g(n/dd') g(d')`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Term {
    pub d: u64,
    pub left: bool,
    pub g_d: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShaParityReport {
    pub twist_sign: i8,
    pub n: u64,
    pub cl_odd: bool,
    pub formula_case: FormulaCase,
    pub g_n: Option<bool>,
    pub terms: Vec<Term>,
}

/// Proper divisors `d ≠ 1, n` of `n` with `d ≡ r mod m`, ascending.
fn proper_divisors(n: &FactoredSquareFree, r: u64, m: u64) -> Vec<u64> {
    crate::arith::divisors_matching(n, r as i64, m)
        .into_iter()
        .filter(|&d| d != 1 && d != n.magnitude())
        .collect()
}

/// The divisor `d` of `n`, factored from the primes of `n`.
fn part(n: &FactoredSquareFree, d: u64) -> FactoredSquareFree {
    let ps: Vec<u64> = n.prime_factors().into_iter().filter(|&p| d % p == 0).collect();
    FactoredSquareFree::from_primes(1, &ps).expect("sub-product of a square-free")
}

fn g_part(n: &FactoredSquareFree, d: u64) -> Result<bool, ShaError> {
    Ok(genus_parity_redei(&part(n, d))?)
}

/// `Σ_{d | n, d ≠ 1, n, d ≡ r mod 24} g(n/d) g(d)` as explicit terms.
fn genus_terms(n: &FactoredSquareFree, r: u64) -> Result<Vec<Term>, ShaError> {
    proper_divisors(n, r, 24)
        .into_iter()
        .map(|d| Ok(Term { d, left: g_part(n, n.magnitude() / d)?, g_d: g_part(n, d)? }))
        .collect()
}

/// `CL(twist_sign * n) mod 2` from the genus-number formulas.
pub fn cl_parity(n: &FactoredSquareFree, twist_sign: i8) -> Result<ShaParityReport, ShaError> {
    let nv = n.magnitude();
    let sign = sign_char(twist_sign);
    if n.sign() < 0 || nv <= 3 {
        return Err(ShaError::Domain(format!("need n > 3 positive, got {}", n.value())));
    }
    let twist = factor_squarefree(i64::from(twist_sign) * nv as i64)?;
    if root_number(&twist) < 0 {
        return Err(ShaError::SignMinusOne { n: nv, sign });
    }
    let case = FormulaCase::of(nv, twist_sign).ok_or(ShaError::UnsupportedClass { n: nv, sign })?;
    let (g_n, terms) = match case {
        FormulaCase::NegForcedEven => (None, Vec::new()),
        FormulaCase::NegGenus | FormulaCase::PosGenus => (Some(genus_parity_redei(n)?), Vec::new()),
        FormulaCase::NegSeven => (Some(genus_parity_redei(n)?), genus_terms(n, 11)?),
        FormulaCase::PosFive => (Some(genus_parity_redei(n)?), genus_terms(n, 7)?),
        FormulaCase::PosNine => {
            let r = (nv + 72 - 18) % 72;
            let mut terms = Vec::new();
            for d in proper_divisors(n, r, 72) {
                let q = part(n, nv / d);
                let mut left = genus_parity_redei(&q)?;
                for t in genus_terms(&q, 11)? {
                    left ^= t.left & t.g_d;
                }
                terms.push(Term { d, left, g_d: g_part(n, d)? });
            }
            (Some(genus_parity_redei(n)?), terms)
        }
    };
    let cl_odd = terms.iter().fold(g_n.unwrap_or(false), |acc, t| acc ^ (t.left & t.g_d));
    Ok(ShaParityReport { twist_sign, n: nv, cl_odd, formula_case: case, g_n, terms })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comparison7 {
    pub invariant_odd: bool,
    pub selmer_trivial: bool,
}

/// Genus invariant of `n ≡ 7 mod 24` against triviality of `Sel_2(E^(-n))` mod torsion.
pub fn comparison_7(n: &FactoredSquareFree) -> Result<Comparison7, ShaError> {
    if n.sign() < 0 || n.magnitude() % 24 != 7 {
        return Err(ShaError::Domain(format!("{} is not 7 mod 24", n.value())));
    }
    let invariant_odd = cl_parity(n, -1)?.cl_odd;
    let selmer_trivial = selmer_dim_matrix(&n.negate())?.dim_mod_torsion == 0;
    if invariant_odd != selmer_trivial {
        return Err(ShaError::Mismatch(format!(
            "n = {}: genus invariant odd = {invariant_odd}, Selmer trivial = {selmer_trivial}",
            n.value()
        )));
    }
    Ok(Comparison7 { invariant_odd, selmer_trivial })
}

/// The symbol data the identities consume; built from an integer or a model sample.
#[derive(Debug, Clone)]
pub struct Symbols {
    pub a: F2Matrix,
    pub z_m1: F2Vector,
    pub z_2: F2Vector,
    pub z_m3: F2Vector,
}

impl Symbols {
    pub fn from_descent(dd: &DescentData) -> Self {
        Self { a: dd.a().clone(), z_m1: dd.z(-1), z_2: dd.z(2), z_m3: dd.z(-3) }
    }

    /// Needs `-1, 2, 3` in the sample's sigma.
    pub fn from_omega(w: &OmegaSample) -> Result<Self, DensityError> {
        Ok(Self { a: w.a(), z_m1: w.z(-1)?, z_2: w.z(2)?, z_m3: w.z(-3)? })
    }

    pub fn k(&self) -> usize {
        self.z_m1.len()
    }

    fn a_plus_dm1(&self) -> F2Matrix {
        self.a.add(&F2Matrix::diag(&self.z_m1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub lhs: bool,
    pub rhs: bool,
}

impl IdentityCheck {
    pub fn holds(&self) -> bool {
        self.lhs == self.rhs
    }
}

/// `det [[A + D_{-1}, z_{-3}], [z_2^T, 1]]` against
/// `det [[z_{-1} z_{-2}^T + z_2 z_{-1}^T, A^T + D_{-1}], [A + D_{-1}, D_{-3}]]`.
pub fn det_identity_7_symbols(s: &Symbols) -> IdentityCheck {
    let apd = s.a_plus_dm1();
    let lhs = block(&[
        vec![Cell::M(apd.clone()), Cell::Col(s.z_m3.clone())],
        vec![Cell::Row(s.z_2.clone()), Cell::Bit(true)],
    ])
    .expect("shapes")
    .det()
    .expect("square");
    let z_m2 = s.z_m1.xor(&s.z_2);
    let top_left = F2Matrix::outer(&s.z_m1, &z_m2).add(&F2Matrix::outer(&s.z_2, &s.z_m1));
    let rhs = block(&[
        vec![Cell::M(top_left), Cell::M(s.a.transpose().add(&F2Matrix::diag(&s.z_m1)))],
        vec![Cell::M(apd), Cell::M(F2Matrix::diag(&s.z_m3))],
    ])
    .expect("shapes")
    .det()
    .expect("square");
    IdentityCheck { lhs, rhs }
}

pub fn det_identity_7(n: &FactoredSquareFree) -> Result<IdentityCheck, ShaError> {
    if n.sign() < 0 || n.magnitude() % 24 != 7 {
        return Err(ShaError::Domain(format!("{} is not 7 mod 24", n.value())));
    }
    let dd = crate::descent::build_descent(n)?;
    Ok(det_identity_7_symbols(&Symbols::from_descent(&dd)))
}

/// `M[I, I]` with each diagonal entry replaced by its row sum over `I`.
fn rows_normalized(a: &F2Matrix, idx: &[usize]) -> F2Matrix {
    let mut m = a.submatrix(idx, idx);
    for i in 0..idx.len() {
        let s = (0..idx.len()).filter(|&j| j != i).fold(false, |acc, j| acc ^ m.get(i, j));
        m.set(i, i, s);
    }
    m
}

/// `det [[M, e_t], [e_t^T, 0]]` for the position `t` of `target` within `idx`.
fn bordered_unit(m: &F2Matrix, idx: &[usize], target: usize) -> bool {
    let pos = idx.iter().position(|&i| i == target).expect("target in index set");
    let e = F2Vector::unit(idx.len(), pos);
    block(&[vec![Cell::M(m.clone()), Cell::Col(e.clone())], vec![Cell::Row(e), Cell::Bit(false)]])
        .expect("shapes")
        .det()
        .expect("square")
}

/// Subset-sum of bordered minors against `det [[A + D_{-1}, e_{i1}], [e_{i1}^T + e_{i2}^T, 0]]`
/// (indices 0-based).
pub fn det_identity_3(n: &FactoredSquareFree, i1: usize, i2: usize) -> Result<IdentityCheck, ShaError> {
    let dd = DescentData::from_odd(n)?;
    let k = dd.k();
    for index in [i1, i2] {
        if index >= k {
            return Err(ShaError::IndexOutOfRange { index, k });
        }
    }
    if k > SUBSET_SUM_MAX_PRIMES {
        return Err(ShaError::Domain(format!("k = {k} exceeds the subset-sum cap")));
    }
    let a = dd.a();
    let zm1 = dd.z(-1);
    let mut lhs = false;
    if i1 != i2 {
        for mask in 0u32..1 << k {
            if mask >> i1 & 1 == 0 || mask >> i2 & 1 == 1 {
                continue;
            }
            let inside: Vec<usize> = (0..k).filter(|&i| mask >> i & 1 == 1).collect();
            let outside: Vec<usize> = (0..k).filter(|&i| mask >> i & 1 == 0).collect();
            let weight = outside.iter().fold(false, |acc, &i| acc ^ zm1.get(i));
            if !weight {
                continue;
            }
            let d_out = bordered_unit(&rows_normalized(a, &outside), &outside, i2);
            let d_in = bordered_unit(&rows_normalized(a, &inside), &inside, i1);
            lhs ^= d_out & d_in;
        }
    }
    let mut row = F2Vector::unit(k, i1);
    row.flip(i2);
    let rhs = block(&[
        vec![Cell::M(dd.a_plus_d(-1)), Cell::Col(F2Vector::unit(k, i1))],
        vec![Cell::Row(row), Cell::Bit(false)],
    ])?
    .det()?;
    Ok(IdentityCheck { lhs, rhs })
}

/// `Σ_{l_t | d | n, d ≡ 5 mod 8} g(n/d) g(d)` against `det [[A + D_{-1}, e_t], [z_2^T, 0]]`
/// (`t` 0-based).
pub fn genus_sum_7(n: &FactoredSquareFree, t: usize) -> Result<IdentityCheck, ShaError> {
    if n.sign() < 0 || n.magnitude() % 8 != 7 {
        return Err(ShaError::Domain(format!("{} is not 7 mod 8", n.value())));
    }
    let dd = DescentData::from_odd(n)?;
    let k = dd.k();
    if t >= k {
        return Err(ShaError::IndexOutOfRange { index: t, k });
    }
    let lt = dd.primes()[t];
    let mut lhs = false;
    for d in crate::arith::divisors_matching(n, 5, 8) {
        if d % lt == 0 {
            lhs ^= g_part(n, n.magnitude() / d)? & g_part(n, d)?;
        }
    }
    let rhs = block(&[
        vec![Cell::M(dd.a_plus_d(-1)), Cell::Col(F2Vector::unit(k, t))],
        vec![Cell::Row(dd.z(2)), Cell::Bit(false)],
    ])?
    .det()?;
    Ok(IdentityCheck { lhs, rhs })
}

/// Residue classes with an induction equality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InductionCase {
    Five,
    Seven,
    Nine,
}

impl InductionCase {
    pub fn of(n: u64) -> Option<Self> {
        match n % 24 {
            5 => Some(Self::Five),
            7 => Some(Self::Seven),
            9 => Some(Self::Nine),
            _ => None,
        }
    }
}

fn cl(n: &FactoredSquareFree, d: u64, sign: i8) -> Result<bool, ShaError> {
    Ok(cl_parity(&part(n, d), sign)?.cl_odd)
}

/// Residual of the induction equality at `n` with every `CL` expanded by
/// [`cl_parity`]; zero when the closed forms are consistent.
pub fn induction_residual(n: &FactoredSquareFree) -> Result<bool, ShaError> {
    let nv = n.magnitude();
    let case = InductionCase::of(nv).ok_or(ShaError::UnsupportedClass { n: nv, sign: '±' })?;
    let g = genus_parity_redei(n)?;
    let mut acc = g;
    match case {
        InductionCase::Five => {
            acc ^= cl(n, nv, 1)?;
            for d in proper_divisors(n, 7, 24) {
                acc ^= cl(n, nv / d, -1)? & cl(n, d, 1)?;
            }
        }
        InductionCase::Seven => {
            acc ^= cl(n, nv, -1)?;
            for d in proper_divisors(n, 11, 24) {
                acc ^= cl(n, nv / d, 1)? & cl(n, d, -1)?;
            }
        }
        InductionCase::Nine => {
            acc ^= cl(n, nv, 1)?;
            for d in proper_divisors(n, (nv + 72 - 18) % 72, 72) {
                acc ^= cl(n, nv / d, -1)? & cl(n, d, 1)?;
            }
        }
    }
    Ok(acc)
}

/// `Σ g(d'') g(d') g(d)` over ordered `d d' d'' = n`, all `≠ 1`,
/// `(d, d', d'') ≡ (11, 7, 11) mod 24`.
pub fn triple_sum(n: &FactoredSquareFree) -> Result<bool, ShaError> {
    let nv = n.magnitude();
    let mut acc = false;
    for d in proper_divisors(n, 11, 24) {
        let rest = part(n, nv / d);
        for d1 in proper_divisors(&rest, 7, 24) {
            let d2 = rest.magnitude() / d1;
            if d2 % 24 == 11 {
                acc ^= g_part(n, d)? & g_part(n, d1)? & g_part(n, d2)?;
            }
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(n: i64) -> FactoredSquareFree {
        factor_squarefree(n).unwrap()
    }

    #[test]
    fn cl_parity_examples() {
        let r = cl_parity(&f(31), -1).unwrap();
        assert!(r.cl_odd);
        assert!(r.terms.is_empty());
        let r = cl_parity(&f(55), -1).unwrap();
        assert_eq!(r.g_n, Some(false));
        assert_eq!(r.terms, vec![Term { d: 11, left: true, g_d: true }]);
        assert!(r.cl_odd);
        assert!(!cl_parity(&f(13), -1).unwrap().cl_odd);
        assert!(cl_parity(&f(51), 1).unwrap().cl_odd);
    }

    #[test]
    fn cl_parity_refusals() {
        assert_eq!(
            cl_parity(&f(14), 1),
            Err(ShaError::UnsupportedClass { n: 14, sign: '+' })
        );
        assert_eq!(cl_parity(&f(5), -1), Err(ShaError::SignMinusOne { n: 5, sign: '-' }));
    }

    #[test]
    fn comparison_examples() {
        for n in [7, 31, 55] {
            let c = comparison_7(&f(n)).unwrap();
            assert_eq!((c.invariant_odd, c.selmer_trivial), (true, true), "n = {n}");
        }
    }

    #[test]
    fn identity_examples() {
        for n in [7, 55, 31] {
            let c = det_identity_7(&f(n)).unwrap();
            assert_eq!((c.lhs, c.rhs), (true, true), "n = {n}");
        }
        let c = det_identity_3(&f(55), 0, 0).unwrap();
        assert_eq!((c.lhs, c.rhs), (false, false));
        assert!(det_identity_3(&f(55), 0, 1).unwrap().holds());
        assert!(det_identity_3(&f(105), 0, 2).unwrap().holds());
        assert!(matches!(
            det_identity_3(&f(55), 0, 2),
            Err(ShaError::IndexOutOfRange { index: 2, k: 2 })
        ));
        let c = genus_sum_7(&f(7), 0).unwrap();
        assert_eq!((c.lhs, c.rhs), (false, false));
        assert!(genus_sum_7(&f(55), 0).unwrap().holds());
        assert!(genus_sum_7(&f(119), 1).unwrap().holds());
    }

    #[test]
    fn induction_examples() {
        assert_eq!(induction_residual(&f(55)), Ok(false));
        assert_eq!(induction_residual(&f(29)), Ok(false));
        assert!(matches!(
            induction_residual(&f(5005)),
            Err(ShaError::UnsupportedClass { n: 5005, .. })
        ));
    }
}
