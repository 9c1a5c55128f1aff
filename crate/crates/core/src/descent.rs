//! 2-descent on `E^(m): y^2 = x(x - m)(x + 3m)`.
//!
//! Two routes to the 2-Selmer rank: closed-form matrix formulas over GF(2)
//! for the residue classes where they are known, and a brute-force oracle
//! that tests every pair `(b1, b2)` in `Q(S, 2)^2` for local solvability.

pub mod local;

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{leg, ArithError, FactoredSquareFree};
use crate::f2linalg::{block, Cell, F2Matrix, F2Vector, LinalgError};
use local::{local_ok_table, padic_solvable, Place};

/// Torsion image in the Selmer group has dimension 2 for every twist.
pub const TORSION_DIM: u32 = 2;

/// Default magnitude bound for the oracle.
pub const ORACLE_BOUND: u64 = 10_000;

/// Prime count cap (primes of `m` other than 2 and 3) for the oracle.
pub const ORACLE_MAX_PRIMES: usize = 8;

/// 2-adic precision exponent for the even-`m` search.
pub const TWO_ADIC_PRECISION: u32 = 12;

/// Symbols `[d/l]` tabulated for every [`DescentData`].
pub const STANDARD_SYMBOLS: [i64; 5] = [-1, 2, -2, 3, -3];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DescentError {
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("no closed-form Selmer formula for m = {0}")]
    UnsupportedClass(i64),
    #[error("2-adic solvability undecided for m = {m}, (b1, b2) = ({b1}, {b2})")]
    UnsupportedLocal { m: i64, b1: i64, b2: i64 },
    #[error("m = {m} exceeds oracle limits (|m| <= {bound}, at most {max_primes} primes > 3)")]
    OracleBound { m: i64, bound: u64, max_primes: usize },
    #[error("internal inconsistency: {0}")]
    Inconsistent(String),
}

/// Symbol data of an odd positive square-free `n = l_1 ... l_k`.
#[derive(Debug, Clone)]
pub struct DescentData {
    n: FactoredSquareFree,
    primes: Vec<u64>,
    a: F2Matrix,
    z: BTreeMap<i64, F2Vector>,
}

impl DescentData {
    /// Builds `A(n)` and the `z_d` for any odd positive square-free `n`;
    /// the prime 3 is allowed here (Rédei matrices need it), and `z_3`,
    /// `z_{-3}` are then omitted.
    pub fn from_odd(n: &FactoredSquareFree) -> Result<Self, DescentError> {
        if n.sign() < 0 || n.has2() {
            return Err(DescentError::Domain(format!("{} is not odd and positive", n.value())));
        }
        let primes = n.odd_prime_factors();
        let k = primes.len();
        let mut a = F2Matrix::zeros(k, k);
        for i in 0..k {
            let mut row_sum = false;
            for j in 0..k {
                if i != j {
                    let bit = leg(primes[j] as i64, primes[i]);
                    a.set(i, j, bit);
                    row_sum ^= bit;
                }
            }
            a.set(i, i, row_sum);
        }
        let mut z = BTreeMap::new();
        for d in STANDARD_SYMBOLS {
            if !(n.has3() && d.abs() == 3) {
                z.insert(d, symbol_vector(&primes, d));
            }
        }
        Ok(Self { n: n.clone(), primes, a, z })
    }

    pub fn n(&self) -> &FactoredSquareFree {
        &self.n
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn k(&self) -> usize {
        self.primes.len()
    }

    pub fn a(&self) -> &F2Matrix {
        &self.a
    }

    /// `z_d = ([d/l_1], ..., [d/l_k])`; `d` must be coprime to `n`.
    pub fn z(&self, d: i64) -> F2Vector {
        match self.z.get(&d) {
            Some(v) => v.clone(),
            None => symbol_vector(&self.primes, d),
        }
    }

    /// `D_d = diag(z_d)`.
    pub fn d(&self, d: i64) -> F2Matrix {
        F2Matrix::diag(&self.z(d))
    }

    /// `A + D_d`.
    pub fn a_plus_d(&self, d: i64) -> F2Matrix {
        self.a.add(&self.d(d))
    }

    /// Same data with the primes reordered by `perm` (`new[i] = old[perm[i]]`).
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            n: self.n.clone(),
            primes: perm.iter().map(|&i| self.primes[i]).collect(),
            a: self.a.permuted(perm),
            z: self.z.iter().map(|(&d, v)| (d, v.permuted(perm))).collect(),
        }
    }
}

fn symbol_vector(primes: &[u64], d: i64) -> F2Vector {
    F2Vector::from_bits(primes.iter().map(|&p| {
        assert!(d % p as i64 != 0, "{p} divides {d}");
        leg(d, p)
    }))
}

/// Descent data for `n` positive, square-free and coprime to 6.
pub fn build_descent(n: &FactoredSquareFree) -> Result<DescentData, DescentError> {
    if n.has3() || n.has2() || n.sign() < 0 {
        return Err(DescentError::Domain(format!(
            "{} must be positive and coprime to 6",
            n.value()
        )));
    }
    DescentData::from_odd(n)
}

/// Which closed-form formula applies to `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DispatchCase {
    /// `m = n > 0`, `n ≡ 7 mod 12`.
    PosSevenMod12,
    /// `m = -n`, `n ≡ 7 mod 24`.
    NegSevenMod24,
    /// `m = -n`, `n ≡ 1 mod 12`, `n ≠ 1`.
    NegOneMod12,
    /// `m = 3n`, `n ≡ 1 mod 4` coprime to 6, `n ≠ 1`.
    PlusThree,
    /// `m = -3n`, `n ≡ 1 mod 8` coprime to 6.
    MinusThree,
}

impl DispatchCase {
    pub fn of(m: &FactoredSquareFree) -> Option<Self> {
        if m.has2() {
            return None;
        }
        let n = m.prime_to_six();
        match (m.sign() > 0, m.has3()) {
            (true, false) if n % 12 == 7 => Some(Self::PosSevenMod12),
            (false, false) if n % 24 == 7 => Some(Self::NegSevenMod24),
            (false, false) if n % 12 == 1 && n != 1 => Some(Self::NegOneMod12),
            (true, true) if n % 4 == 1 && n != 1 => Some(Self::PlusThree),
            (false, true) if n % 8 == 1 => Some(Self::MinusThree),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::PosSevenMod12 => "n=7mod12",
            Self::NegSevenMod24 => "-n,n=7mod24",
            Self::NegOneMod12 => "-n,n=1mod12",
            Self::PlusThree => "3n,n=1mod4",
            Self::MinusThree => "-3n,n=1mod8",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    MatrixFormula,
    KernelMatrix,
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelmerReport {
    pub twist_sign: i8,
    pub n: u64,
    pub method: Method,
    pub dim_total: u32,
    pub dim_mod_torsion: u32,
}

impl SelmerReport {
    fn new(m: &FactoredSquareFree, method: Method, dim_total: u32) -> Result<Self, DescentError> {
        if dim_total < TORSION_DIM {
            return Err(DescentError::Inconsistent(format!(
                "Selmer dimension {dim_total} below torsion dimension for m = {}",
                m.value()
            )));
        }
        Ok(Self {
            twist_sign: m.sign(),
            n: m.magnitude(),
            method,
            dim_total,
            dim_mod_torsion: dim_total - TORSION_DIM,
        })
    }

    pub fn m(&self) -> i64 {
        i64::from(self.twist_sign) * self.n as i64
    }
}

fn not_special(m: &FactoredSquareFree) -> Result<(), DescentError> {
    if m.magnitude() == 1 || m.value() == 3 {
        return Err(DescentError::Domain(format!("m = {} is handled as a special case", m.value())));
    }
    Ok(())
}

fn data_for(m: &FactoredSquareFree) -> Result<(DispatchCase, DescentData), DescentError> {
    not_special(m)?;
    let case = DispatchCase::of(m).ok_or(DescentError::UnsupportedClass(m.value()))?;
    let n = FactoredSquareFree::from_primes(1, m.odd_primes())?;
    Ok((case, build_descent(&n)?))
}

fn bit(b: bool) -> Cell {
    Cell::Bit(b)
}

/// The matrix whose rank gives `dim_mod_torsion` in each dispatch case.
pub fn reduced_matrix(case: DispatchCase, dd: &DescentData) -> Result<F2Matrix, DescentError> {
    use Cell::{Col, Row, Zero, M};
    let a = dd.a().clone();
    let (zm1, z2, z3, zm3, zm2) = (dd.z(-1), dd.z(2), dd.z(3), dd.z(-3), dd.z(-2));
    let grid = match case {
        DispatchCase::PosSevenMod12 => vec![
            vec![M(a.clone()), M(dd.d(-3)), Col(z3)],
            vec![Zero, M(dd.a_plus_d(-1)), Zero],
        ],
        DispatchCase::NegSevenMod24 => vec![
            vec![M(dd.a_plus_d(-1)), M(dd.d(-3)), Zero],
            vec![Zero, M(a), Col(z2)],
            vec![Zero, Row(zm3), bit(true)],
            vec![Row(zm2), Row(zm1), bit(false)],
        ],
        DispatchCase::NegOneMod12 => vec![
            vec![M(dd.a_plus_d(-1)), M(dd.d(-3))],
            vec![Zero, M(a)],
        ],
        DispatchCase::PlusThree => vec![
            vec![M(dd.a_plus_d(3)), M(dd.d(-3)), Col(zm1.clone())],
            vec![Zero, M(dd.a_plus_d(-3)), Col(zm1.clone())],
            vec![Zero, Row(zm1), bit(true)],
        ],
        DispatchCase::MinusThree => vec![
            vec![M(dd.a_plus_d(3)), Zero, Zero],
            vec![M(dd.d(-3)), M(dd.a_plus_d(-3)), Col(zm1.clone())],
            vec![Zero, Row(zm1), bit(true)],
        ],
    };
    Ok(block(&grid)?)
}

/// Full kernel matrix `B`: its right kernel is the 2-Selmer group.
pub fn kernel_matrix_for(case: DispatchCase, dd: &DescentData) -> Result<F2Matrix, DescentError> {
    use Cell::{Col, Row, Zero, M};
    let a = dd.a().clone();
    let (zm1, z2, z3, zm3, zm2) = (dd.z(-1), dd.z(2), dd.z(3), dd.z(-3), dd.z(-2));
    let t = leg(dd.n().value(), 3);
    let grid = match case {
        DispatchCase::PosSevenMod12 => vec![
            vec![M(a.clone()), M(dd.d(-3)), Col(zm1.clone()), Col(z3)],
            vec![Zero, M(dd.a_plus_d(-1)), Col(zm1.clone()), Zero],
            vec![Zero, Row(zm1), bit(true), bit(false)],
            vec![Zero, Row(zm3), bit(true), bit(true)],
        ],
        DispatchCase::NegSevenMod24 => vec![
            vec![M(dd.a_plus_d(-1)), M(dd.d(-3)), Col(zm1.clone()), Col(z3), Zero],
            vec![Zero, M(a), Zero, Zero, Col(z2)],
            vec![Zero, Row(zm3), bit(false), bit(false), bit(true)],
            vec![Row(zm2), Row(zm1.clone()), bit(true), bit(false), bit(false)],
            vec![Row(zm1), Zero, bit(true), bit(true), bit(true)],
        ],
        DispatchCase::NegOneMod12 => vec![
            vec![M(dd.a_plus_d(-1)), M(dd.d(-3)), Col(zm1.clone()), Col(z3)],
            vec![Zero, M(a), Zero, Zero],
            vec![Zero, Row(zm3), bit(false), bit(false)],
            vec![Zero, Row(zm1), bit(false), bit(false)],
        ],
        DispatchCase::PlusThree => vec![
            vec![M(dd.a_plus_d(3)), M(dd.d(-3)), Col(zm1.clone()), Col(z3.clone()), Zero],
            vec![Zero, M(dd.a_plus_d(-3)), Col(zm1.clone()), Zero, Col(z3)],
            vec![Zero, Row(zm1), bit(true), bit(false), bit(true)],
            vec![Row(zm3.clone()), Zero, bit(true), bit(t), bit(!t)],
            vec![Zero, Row(zm3), bit(true), bit(false), bit(!t)],
        ],
        DispatchCase::MinusThree => vec![
            vec![M(dd.a_plus_d(-3)), M(dd.d(-3)), Col(zm1.clone()), Col(z3.clone()), Zero],
            vec![Zero, M(dd.a_plus_d(3)), Zero, Zero, Col(z3)],
            vec![Row(zm1), Zero, bit(true), bit(true), bit(false)],
            vec![Row(zm3.clone()), Zero, bit(true), bit(!t), bit(t)],
            vec![Zero, Row(zm3), bit(false), bit(false), bit(t)],
        ],
    };
    Ok(block(&grid)?)
}

fn formula_dim(case: DispatchCase, dd: &DescentData) -> Result<u32, DescentError> {
    let k = dd.k() as u32;
    let rank = reduced_matrix(case, dd)?.rank() as u32;
    let base = match case {
        DispatchCase::PosSevenMod12 | DispatchCase::NegOneMod12 => 2 * k,
        _ => 2 * k + 1,
    };
    let dim = base.checked_sub(rank).ok_or_else(|| {
        DescentError::Inconsistent(format!("rank {rank} exceeds {base}"))
    })?;
    if case == DispatchCase::NegOneMod12 && (dim < 2 || dim % 2 == 1) {
        return Err(DescentError::Inconsistent(format!(
            "dimension {dim} for n = {} should be even and at least 2",
            dd.n().value()
        )));
    }
    Ok(dim)
}

/// Selmer dimension from the closed-form rank formula.
pub fn selmer_dim_matrix(m: &FactoredSquareFree) -> Result<SelmerReport, DescentError> {
    let (case, dd) = data_for(m)?;
    let dim = formula_dim(case, &dd)?;
    SelmerReport::new(m, Method::MatrixFormula, dim + TORSION_DIM)
}

/// The kernel matrix `B` for `m`.
pub fn build_kernel_matrix(m: &FactoredSquareFree) -> Result<F2Matrix, DescentError> {
    let (case, dd) = data_for(m)?;
    kernel_matrix_for(case, &dd)
}

/// Selmer dimension as the corank of `B`.
pub fn selmer_dim_kernel(m: &FactoredSquareFree) -> Result<SelmerReport, DescentError> {
    let b = build_kernel_matrix(m)?;
    SelmerReport::new(m, Method::KernelMatrix, b.corank() as u32)
}

/// Limits for [`brute_force_selmer`].
#[derive(Debug, Clone, Copy)]
pub struct OracleConfig {
    pub bound: u64,
    pub max_primes: usize,
    pub two_adic_precision: u32,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            bound: ORACLE_BOUND,
            max_primes: ORACLE_MAX_PRIMES,
            two_adic_precision: TWO_ADIC_PRECISION,
        }
    }
}

/// The set of pairs `(b1, b2)` passing every local test, as an F2-space.
#[derive(Debug, Clone)]
pub struct SelmerSet {
    /// Generators of `Q(S, 2)`: `-1` followed by the primes of `6m`.
    pub basis: Vec<i64>,
    /// Passing pairs encoded as `mask(b1) | mask(b2) << basis.len()`.
    pub members: Vec<u64>,
}

impl SelmerSet {
    pub fn decode(&self, mask: u64) -> i64 {
        self.basis
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, &g)| g)
            .product()
    }

    pub fn pairs(&self) -> Vec<(i64, i64)> {
        let w = self.basis.len();
        let lo = (1u64 << w) - 1;
        self.members
            .iter()
            .map(|&x| (self.decode(x & lo), self.decode(x >> w)))
            .collect()
    }

    pub fn contains(&self, b1: i64, b2: i64) -> bool {
        let enc = |b: i64| -> u64 {
            let mut mask = 0;
            if b < 0 {
                mask |= 1;
            }
            for (i, &g) in self.basis.iter().enumerate().skip(1) {
                if b % g == 0 {
                    mask |= 1 << i;
                }
            }
            mask
        };
        let key = enc(b1) | enc(b2) << self.basis.len();
        self.members.binary_search(&key).is_ok()
    }
}

fn place_ok(
    m: &FactoredSquareFree,
    b1: i64,
    b2: i64,
    place: Place,
    cfg: &OracleConfig,
) -> Result<bool, DescentError> {
    match local_ok_table(m, b1, b2, place) {
        Some(ok) => Ok(ok),
        None => {
            let Place::Prime(p) = place else { unreachable!("real place always tabulated") };
            padic_solvable(p, b1, b2, m.value(), cfg.two_adic_precision).ok_or(
                DescentError::UnsupportedLocal { m: m.value(), b1, b2 },
            )
        }
    }
}

/// Enumerates `Q(S, 2)^2` and keeps the everywhere locally solvable pairs.
pub fn selmer_set(m: &FactoredSquareFree, cfg: &OracleConfig) -> Result<SelmerSet, DescentError> {
    if m.magnitude() == 1 {
        return Err(DescentError::Domain("m = ±1 excluded from the oracle".into()));
    }
    if m.magnitude() > cfg.bound || m.odd_primes().len() > cfg.max_primes {
        return Err(DescentError::OracleBound {
            m: m.value(),
            bound: cfg.bound,
            max_primes: cfg.max_primes,
        });
    }
    let mut basis: Vec<i64> = vec![-1, 2, 3];
    basis.extend(m.odd_primes().iter().map(|&p| p as i64));
    let w = basis.len();
    let values: Vec<i64> = (0..1u64 << w)
        .map(|mask| {
            basis
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, &g)| g)
                .product()
        })
        .collect();
    // 2 last: for even m it is the expensive place
    let mut places = vec![Place::Infinity, Place::Prime(3)];
    places.extend(m.odd_primes().iter().map(|&p| Place::Prime(p)));
    places.push(Place::Prime(2));

    let mut members = Vec::new();
    for (m1, &b1) in values.iter().enumerate() {
        for (m2, &b2) in values.iter().enumerate() {
            let mut ok = true;
            for &pl in &places {
                if !place_ok(m, b1, b2, pl, cfg)? {
                    ok = false;
                    break;
                }
            }
            if ok {
                members.push(m1 as u64 | (m2 as u64) << w);
            }
        }
    }
    members.sort_unstable();
    let set = SelmerSet { basis, members };
    check_group(m, &set)?;
    Ok(set)
}

fn check_group(m: &FactoredSquareFree, set: &SelmerSet) -> Result<(), DescentError> {
    let mv = m.value();
    let torsion = [(1, 1), (-3, -mv), (mv, 1), (crate::arith::sqfree_mul(-3, mv), -mv)];
    for (b1, b2) in torsion {
        if !set.contains(b1, b2) {
            return Err(DescentError::Inconsistent(format!(
                "torsion image ({b1}, {b2}) fails a local test for m = {mv}"
            )));
        }
    }
    let n = set.members.len();
    if !n.is_power_of_two() {
        return Err(DescentError::Inconsistent(format!(
            "{n} locally solvable pairs for m = {mv}, not a power of two"
        )));
    }
    let lookup: HashSet<u64> = set.members.iter().copied().collect();
    for &x in &set.members {
        for &y in &set.members {
            if !lookup.contains(&(x ^ y)) {
                return Err(DescentError::Inconsistent(format!(
                    "locally solvable pairs for m = {mv} not closed under multiplication"
                )));
            }
        }
    }
    Ok(())
}

/// Selmer dimension by exhaustive local testing.
pub fn brute_force_selmer(m: &FactoredSquareFree) -> Result<SelmerReport, DescentError> {
    brute_force_selmer_with(m, &OracleConfig::default())
}

pub fn brute_force_selmer_with(
    m: &FactoredSquareFree,
    cfg: &OracleConfig,
) -> Result<SelmerReport, DescentError> {
    let set = selmer_set(m, cfg)?;
    SelmerReport::new(m, Method::Oracle, set.members.len().trailing_zeros())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::factor_squarefree;

    fn f(n: i64) -> FactoredSquareFree {
        factor_squarefree(n).unwrap()
    }

    #[test]
    fn descent_data_examples() {
        let d = build_descent(&f(7)).unwrap();
        assert_eq!(d.a(), &F2Matrix::from_rows(&[&[0]]));
        assert_eq!(d.z(-1), F2Vector::from_u8(&[1]));
        assert_eq!(d.z(2), F2Vector::from_u8(&[0]));
        assert_eq!(d.z(3), F2Vector::from_u8(&[1]));
        assert_eq!(d.z(-3), F2Vector::from_u8(&[0]));

        assert!(matches!(build_descent(&f(15)), Err(DescentError::Domain(_))));

        let d = build_descent(&f(55)).unwrap();
        assert!(d.a().is_zero());
        assert_eq!(d.z(-1), F2Vector::from_u8(&[0, 1]));
        assert_eq!(d.z(2), F2Vector::from_u8(&[1, 1]));
        assert_eq!(d.z(-3), F2Vector::from_u8(&[1, 1]));
        assert_eq!(d.z(-2), F2Vector::from_u8(&[1, 0]));
    }

    #[test]
    fn reduced_matrix_for_seven() {
        let dd = build_descent(&f(7)).unwrap();
        let m = reduced_matrix(DispatchCase::PosSevenMod12, &dd).unwrap();
        assert_eq!(m, F2Matrix::from_rows(&[&[0, 0, 1], &[0, 1, 0]]));
    }

    #[test]
    fn matrix_formula_examples() {
        for (m, dim) in [(7, 0), (-13, 2), (51, 0), (-51, 0), (219, 2), (-219, 2)] {
            let r = selmer_dim_matrix(&f(m)).unwrap();
            assert_eq!(r.dim_mod_torsion, dim, "m = {m}");
        }
        assert_eq!(
            selmer_dim_matrix(&f(5)),
            Err(DescentError::UnsupportedClass(5))
        );
    }

    #[test]
    fn kernel_matrix_examples() {
        let b = build_kernel_matrix(&f(7)).unwrap();
        assert_eq!((b.rows(), b.cols()), (4, 4));
        assert_eq!(b.corank(), 2);
        assert_eq!(build_kernel_matrix(&f(-55)).unwrap().corank(), 2);
        assert_eq!(build_kernel_matrix(&f(-13)).unwrap().corank(), 4);
    }

    #[test]
    fn oracle_examples() {
        let r = brute_force_selmer(&f(7)).unwrap();
        assert_eq!((r.dim_total, r.dim_mod_torsion), (2, 0));
        assert_eq!(brute_force_selmer(&f(-13)).unwrap().dim_mod_torsion, 2);
        assert_eq!(brute_force_selmer(&f(-7)).unwrap().dim_mod_torsion, 0);
    }

    #[test]
    fn oracle_rejects_unit_and_large() {
        assert!(matches!(brute_force_selmer(&f(1)), Err(DescentError::Domain(_))));
        assert!(matches!(
            brute_force_selmer(&f(10_007)),
            Err(DescentError::OracleBound { .. })
        ));
    }
}
