//! Closed-form invariants of `E^(n): y^2 = x(x - n)(x + 3n)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::arith::FactoredSquareFree;

pub const CONDUCTOR_E: u32 = 24;
pub const CONDUCTOR_E_MINUS_ONE: u32 = 48;
pub const MANIN_CONSTANT: u32 = 1;
pub const MODULAR_DEGREE_E: u32 = 1;
pub const MODULAR_DEGREE_E_MINUS_ONE: u32 = 2;

/// Residues of square-free positive `n` mod 24 with the root numbers of
/// `E^(n)` and `E^(-n)`.
pub const ROOT_NUMBER_TABLE: [(u8, i8, i8); 18] = [
    (1, 1, 1),
    (2, 1, 1),
    (3, 1, 1),
    (5, 1, -1),
    (6, -1, 1),
    (7, 1, 1),
    (9, 1, -1),
    (10, -1, -1),
    (11, -1, 1),
    (13, -1, 1),
    (14, 1, 1),
    (15, 1, -1),
    (17, -1, -1),
    (18, -1, 1),
    (19, 1, -1),
    (21, -1, -1),
    (22, -1, -1),
    (23, -1, -1),
];

/// `ε(E^(n)) = -ε_2 ε_3 (-1)^((n'-1)/2)`, `n'` the prime-to-6 part of `|n|`.
pub fn root_number(n: &FactoredSquareFree) -> i8 {
    root_number_of(n.value(), n.prime_to_six())
}

fn root_number_of(n: i64, prime_to_six: u64) -> i8 {
    let e2 = match n.rem_euclid(8) {
        1 | 6 => -1,
        _ => 1,
    };
    let e3 = if n.rem_euclid(3) == 1 { 1 } else { -1 };
    let e = if prime_to_six % 4 == 1 { 1 } else { -1 };
    -e2 * e3 * e
}

/// Table lookup by sign and residue mod 24.
pub fn root_number_from_table(n: i64) -> Option<i8> {
    let r = (n.unsigned_abs() % 24) as u8;
    ROOT_NUMBER_TABLE
        .iter()
        .find(|row| row.0 == r)
        .map(|&(_, pos, neg)| if n > 0 { pos } else { neg })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tamagawa {
    pub local: BTreeMap<u64, u32>,
    pub product: u64,
}

pub fn tamagawa(n: &FactoredSquareFree) -> Tamagawa {
    let mut local = BTreeMap::new();
    let c2 = match n.value().rem_euclid(8) {
        3 | 5 | 7 => 2,
        _ => 4,
    };
    local.insert(2, c2);
    local.insert(3, if n.has3() { 4 } else { 2 });
    for &p in n.odd_primes() {
        local.insert(p, 4);
    }
    let product = local.values().map(|&c| u64::from(c)).product();
    Tamagawa { local, product }
}

/// Affine rational torsion points (the point at infinity is implicit).
pub fn torsion_points(n: &FactoredSquareFree) -> Vec<(i64, i64)> {
    let m = n.value();
    let mut pts = vec![(0, 0), (m, 0), (-3 * m, 0)];
    if m == 1 {
        pts.extend([(-1, 2), (-1, -2), (3, 6), (3, -6)]);
    }
    pts
}

pub fn torsion_order(n: &FactoredSquareFree) -> u32 {
    torsion_points(n).len() as u32 + 1
}

pub fn on_curve(n: i64, (x, y): (i64, i64)) -> bool {
    let (x, y, n) = (x as i128, y as i128, n as i128);
    y * y == x * (x - n) * (x + 3 * n)
}

/// `x(2P)` for a non-2-torsion point, as an exact fraction `(num, den)`.
pub fn double_x(n: i64, (x, y): (i64, i64)) -> (i128, i128) {
    let (x, y, n) = (x as i128, y as i128, n as i128);
    let num = x * x + 3 * n * n;
    let den = 2 * y;
    (num * num, den * den)
}

pub fn discriminant_valuation(n: &FactoredSquareFree, p: u64) -> u32 {
    // Δ = 2^8 3^2 n^6
    let base = match p {
        2 => 8,
        3 => 2,
        _ => 0,
    };
    let divides = match p {
        2 => n.has2(),
        3 => n.has3(),
        _ => n.odd_primes().contains(&p),
    };
    base + if divides { 6 } else { 0 }
}

/// Minimality sanity check at the primes `p >= 5` dividing `n`.
pub fn minimal_at_large_primes(n: &FactoredSquareFree) -> bool {
    n.odd_primes().iter().all(|&p| discriminant_valuation(n, p) < 12)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BasePeriod {
    /// `Ω(E)`
    Real,
    /// `Ω^-(E)`
    Minus,
}

/// `(num / den) * base / sqrt(n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodRatio {
    pub num: i64,
    pub den: i64,
    pub base: BasePeriod,
    pub sqrt_of: i64,
}

/// `(Ω(E^(n)), Ω^-(E^(n)))` in terms of the periods of `E`.
pub fn twist_periods(n: i64) -> (PeriodRatio, PeriodRatio) {
    if n > 0 {
        (
            PeriodRatio { num: 1, den: 1, base: BasePeriod::Real, sqrt_of: n },
            PeriodRatio { num: 1, den: 1, base: BasePeriod::Minus, sqrt_of: n },
        )
    } else {
        (
            PeriodRatio { num: 2, den: 1, base: BasePeriod::Minus, sqrt_of: n },
            PeriodRatio { num: -1, den: 2, base: BasePeriod::Real, sqrt_of: n },
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurveInvariants {
    pub n: i64,
    pub root_number: i8,
    pub tamagawa: Tamagawa,
    pub torsion_order: u32,
    pub conductor_e: u32,
    pub conductor_e_minus_one: u32,
    pub manin_constant: u32,
    pub modular_degrees: (u32, u32),
}

pub fn invariants(n: &FactoredSquareFree) -> CurveInvariants {
    CurveInvariants {
        n: n.value(),
        root_number: root_number(n),
        tamagawa: tamagawa(n),
        torsion_order: torsion_order(n),
        conductor_e: CONDUCTOR_E,
        conductor_e_minus_one: CONDUCTOR_E_MINUS_ONE,
        manin_constant: MANIN_CONSTANT,
        modular_degrees: (MODULAR_DEGREE_E, MODULAR_DEGREE_E_MINUS_ONE),
    }
}
