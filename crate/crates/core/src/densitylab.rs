//! The random matrix model `Ω_{k,Σ}`: uniform samples of Legendre-symbol
//! data for `k` primes, exhaustive enumeration, seeded Monte Carlo and the
//! limiting densities `δ_{∞,m}`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::f2linalg::{F2Matrix, F2Vector};

/// Largest constrained space that [`exhaustive_probability`] walks, as log2.
pub const MAX_EXHAUSTIVE_BITS: u32 = 26;
/// Monte Carlo work is cut into this many streams whatever the thread count.
pub const MC_SHARDS: u64 = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DensityError {
    #[error("constraints are inconsistent")]
    UnsatisfiableConstraint,
    #[error("constrained space has 2^{bits} points, above 2^{MAX_EXHAUSTIVE_BITS}")]
    SpaceTooLarge { bits: u32 },
    #[error("{0} is not a product of symbols in sigma")]
    UnknownSymbol(i64),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unknown predicate {0:?}")]
    UnknownPredicate(String),
}

/// `sum(z_d) = parity`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constraint {
    pub d: i64,
    pub parity: bool,
}

impl Constraint {
    pub fn new(d: i64, parity: bool) -> Self {
        Self { d, parity }
    }
}

/// `sum(z_{-1}) = 1, sum(z_2) = 0, sum(z_{-3}) = 0`, the class of `n ≡ 7 mod 24`.
pub fn seven_mod_24_constraints() -> Vec<Constraint> {
    vec![Constraint::new(-1, true), Constraint::new(2, false), Constraint::new(-3, false)]
}

/// `sum(z_{-1}) = 1`, the class `n ≡ 3 mod 4`.
pub fn three_mod_4_constraints() -> Vec<Constraint> {
    vec![Constraint::new(-1, true)]
}

/// Bit mask over `sigma` of the symbols making up `d`.
fn symbol_mask(sigma: &[i64], d: i64) -> Result<u32, DensityError> {
    let mut mask = 0u32;
    if d < 0 {
        let i = sigma.iter().position(|&p| p == -1).ok_or(DensityError::UnknownSymbol(d))?;
        mask ^= 1 << i;
    }
    let mut rest = d.unsigned_abs();
    for (i, &p) in sigma.iter().enumerate() {
        if p > 1 && rest % p as u64 == 0 {
            rest /= p as u64;
            if rest % p as u64 == 0 {
                return Err(DensityError::UnknownSymbol(d));
            }
            mask ^= 1 << i;
        }
    }
    if rest != 1 {
        return Err(DensityError::UnknownSymbol(d));
    }
    Ok(mask)
}

/// One point `ω` of `Ω_{k,Σ}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OmegaSample {
    k: usize,
    sigma: Vec<i64>,
    /// `a_ij` for `i < j`; entries on and below the diagonal are unused.
    upper: F2Matrix,
    z: Vec<F2Vector>,
}

impl OmegaSample {
    /// Checks shapes and that `sigma` starts with `-1` and is otherwise distinct primes.
    pub fn new(sigma: Vec<i64>, upper: F2Matrix, z: Vec<F2Vector>) -> Result<Self, DensityError> {
        validate_sigma(&sigma)?;
        let k = upper.rows();
        if upper.cols() != k || z.len() != sigma.len() || z.iter().any(|v| v.len() != k) {
            return Err(DensityError::Domain("shape mismatch".into()));
        }
        let mut upper = upper;
        for i in 0..k {
            for j in 0..=i {
                upper.set(i, j, false);
            }
        }
        Ok(Self { k, sigma, upper, z })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn sigma(&self) -> &[i64] {
        &self.sigma
    }

    pub fn upper(&self, i: usize, j: usize) -> bool {
        debug_assert!(i < j);
        self.upper.get(i, j)
    }

    /// `z_p` for `p ∈ Σ`.
    pub fn z_symbol(&self, p: i64) -> Option<&F2Vector> {
        self.sigma.iter().position(|&s| s == p).map(|i| &self.z[i])
    }

    /// `z_d` for `d ∈ ℚ(Σ, 2)`.
    pub fn z(&self, d: i64) -> Result<F2Vector, DensityError> {
        let mask = symbol_mask(&self.sigma, d)?;
        let mut v = F2Vector::zeros(self.k);
        for (i, zi) in self.z.iter().enumerate() {
            if mask >> i & 1 == 1 {
                v.xor_assign(zi);
            }
        }
        Ok(v)
    }

    pub fn zm1(&self) -> &F2Vector {
        &self.z[0]
    }

    pub fn a(&self) -> F2Matrix {
        let k = self.k;
        let zm1 = self.zm1();
        let mut a = F2Matrix::zeros(k, k);
        for i in 0..k {
            for j in i + 1..k {
                let b = self.upper.get(i, j);
                a.set(i, j, b);
                a.set(j, i, b ^ (zm1.get(i) & zm1.get(j)));
            }
        }
        for i in 0..k {
            let s = (0..k).filter(|&j| j != i).fold(false, |acc, j| acc ^ a.get(i, j));
            a.set(i, i, s);
        }
        a
    }

    pub fn a_plus_d(&self, d: i64) -> Result<F2Matrix, DensityError> {
        Ok(self.a().add(&F2Matrix::diag(&self.z(d)?)))
    }

    /// Relabels the `k` indices; entry `i` of `perm` is the new position of index `i`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let a = self.a().permuted(perm);
        let mut upper = F2Matrix::zeros(self.k, self.k);
        for i in 0..self.k {
            for j in i + 1..self.k {
                upper.set(i, j, a.get(i, j));
            }
        }
        let z = self.z.iter().map(|v| v.permuted(perm)).collect();
        Self { k: self.k, sigma: self.sigma.clone(), upper, z }
    }

    /// Position-wise encoding: upper bits row-major, then each `z_p`.
    pub fn encode(&self) -> u128 {
        let mut code = 0u128;
        let mut pos = 0;
        for i in 0..self.k {
            for j in i + 1..self.k {
                code |= u128::from(self.upper.get(i, j)) << pos;
                pos += 1;
            }
        }
        for v in &self.z {
            for i in 0..self.k {
                code |= u128::from(v.get(i)) << pos;
                pos += 1;
            }
        }
        code
    }
}

fn validate_sigma(sigma: &[i64]) -> Result<(), DensityError> {
    if sigma.first() != Some(&-1) {
        return Err(DensityError::Domain("sigma must start with -1".into()));
    }
    let rest = &sigma[1..];
    for (i, &p) in rest.iter().enumerate() {
        if p < 2 || !crate::arith::is_prime(p as u64) || rest[..i].contains(&p) {
            return Err(DensityError::Domain(format!("bad symbol {p} in sigma")));
        }
    }
    if sigma.len() > 16 {
        return Err(DensityError::Domain("sigma too large".into()));
    }
    Ok(())
}

/// `Ω_{k,Σ}` cut out by sum-constraints, with the pivot data used to
/// correct raw draws and to enumerate.
#[derive(Debug, Clone)]
pub struct OmegaSpace {
    k: usize,
    sigma: Vec<i64>,
    /// Reduced constraint rows `(mask over sigma, parity)`, one pivot each.
    rows: Vec<(u32, bool)>,
    pivots: Vec<usize>,
}

impl OmegaSpace {
    pub fn new(k: usize, sigma: &[i64], constraints: &[Constraint]) -> Result<Self, DensityError> {
        if k == 0 || k > 63 {
            return Err(DensityError::Domain(format!("k = {k} outside 1..=63")));
        }
        validate_sigma(sigma)?;
        let mut rows: Vec<(u32, bool)> = Vec::new();
        let mut pivots: Vec<usize> = Vec::new();
        for c in constraints {
            let (mut mask, mut parity) = (symbol_mask(sigma, c.d)?, c.parity);
            for (&(m, p), &piv) in rows.iter().zip(&pivots) {
                if mask >> piv & 1 == 1 {
                    mask ^= m;
                    parity ^= p;
                }
            }
            if mask == 0 {
                if parity {
                    return Err(DensityError::UnsatisfiableConstraint);
                }
                continue;
            }
            let piv = mask.trailing_zeros() as usize;
            for (m, p) in rows.iter_mut() {
                if *m >> piv & 1 == 1 {
                    *m ^= mask;
                    *p ^= parity;
                }
            }
            rows.push((mask, parity));
            pivots.push(piv);
        }
        Ok(Self { k, sigma: sigma.to_vec(), rows, pivots })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn sigma(&self) -> &[i64] {
        &self.sigma
    }

    fn raw_bits(&self) -> u32 {
        (self.k * (self.k - 1) / 2 + self.k * self.sigma.len()) as u32
    }

    /// log2 of the number of points.
    pub fn size_bits(&self) -> u32 {
        self.raw_bits() - self.rows.len() as u32
    }

    /// Flips `z_p[0]` at pivot symbols until every constraint holds.
    fn correct(&self, z: &mut [F2Vector]) {
        let sums: u32 = z.iter().enumerate().fold(0, |acc, (i, v)| acc | u32::from(v.sum()) << i);
        for (&(mask, parity), &piv) in self.rows.iter().zip(&self.pivots) {
            if ((sums & mask).count_ones() & 1 == 1) != parity {
                z[piv].flip(0);
            }
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> OmegaSample {
        let k = self.k;
        let mut upper = F2Matrix::zeros(k, k);
        for i in 0..k {
            for j in i + 1..k {
                upper.set(i, j, rng.random());
            }
        }
        let mut z: Vec<F2Vector> =
            (0..self.sigma.len()).map(|_| F2Vector::from_bits((0..k).map(|_| rng.random::<bool>()))).collect();
        self.correct(&mut z);
        OmegaSample { k, sigma: self.sigma.clone(), upper, z }
    }

    /// The point with free coordinates read from `code` (bit `t` is the
    /// `t`-th non-pivot coordinate).
    pub fn point(&self, code: u64) -> OmegaSample {
        let k = self.k;
        let mut t = 0;
        let mut next = || {
            let b = code >> t & 1 == 1;
            t += 1;
            b
        };
        let mut upper = F2Matrix::zeros(k, k);
        for i in 0..k {
            for j in i + 1..k {
                upper.set(i, j, next());
            }
        }
        let mut z = Vec::with_capacity(self.sigma.len());
        for s in 0..self.sigma.len() {
            let pivot = self.pivots.contains(&s);
            z.push(F2Vector::from_bits((0..k).map(|i| if i == 0 && pivot { false } else { next() })));
        }
        self.correct(&mut z);
        OmegaSample { k, sigma: self.sigma.clone(), upper, z }
    }

    pub fn contains(&self, w: &OmegaSample) -> bool {
        w.k == self.k
            && w.sigma == self.sigma
            && self.rows.iter().all(|&(mask, parity)| {
                let s = (0..self.sigma.len()).filter(|&i| mask >> i & 1 == 1).fold(false, |a, i| a ^ w.z[i].sum());
                s == parity
            })
    }
}

pub fn sample_omega(
    k: usize,
    sigma: &[i64],
    constraints: &[Constraint],
    seed: u64,
) -> Result<OmegaSample, DensityError> {
    let space = OmegaSpace::new(k, sigma, constraints)?;
    Ok(space.sample(&mut ChaCha8Rng::seed_from_u64(seed)))
}

/// Events over `Ω_{k,Σ}`; `eval` returns `None` off the conditioning set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Predicate {
    Always,
    /// `corank(A + D_d) = m`.
    CorankEq { d: i64, m: usize },
    /// `det(A + D_{-1}) = 1`.
    DetCondPos7,
    /// `det [[A + D_{-1}, z_{-3}], [z_2^T, 1]] = 1`.
    DetCondNeg7,
    Joint7,
    /// `DetCondPos7 xor DetCondNeg7`.
    DetXor7,
    /// Bordered determinant of variant 2 (corner 1) or 3 (corner 0) is 1,
    /// given `corank(A + D_{-1}) = j`.
    CondQ { j: usize, variant: u8 },
}

fn bordered(apd: &F2Matrix, col: &F2Vector, row: &F2Vector, corner: bool) -> bool {
    let k = apd.rows();
    let mut m = F2Matrix::zeros(k + 1, k + 1);
    for i in 0..k {
        for j in 0..k {
            if apd.get(i, j) {
                m.set(i, j, true);
            }
        }
        m.set(i, k, col.get(i));
        m.set(k, i, row.get(i));
    }
    m.set(k, k, corner);
    m.det().expect("square")
}

impl Predicate {
    pub fn eval(&self, w: &OmegaSample) -> Result<Option<bool>, DensityError> {
        let neg7 = |apd: &F2Matrix, corner: bool| -> Result<bool, DensityError> {
            Ok(bordered(apd, &w.z(-3)?, &w.z(2)?, corner))
        };
        Ok(match *self {
            Predicate::Always => Some(true),
            Predicate::CorankEq { d, m } => Some(w.a_plus_d(d)?.corank() == m),
            Predicate::DetCondPos7 => Some(w.a_plus_d(-1)?.det().expect("square")),
            Predicate::DetCondNeg7 => Some(neg7(&w.a_plus_d(-1)?, true)?),
            Predicate::Joint7 | Predicate::DetXor7 => {
                let apd = w.a_plus_d(-1)?;
                let (p, n) = (apd.det().expect("square"), neg7(&apd, true)?);
                Some(if *self == Predicate::Joint7 { p & n } else { p ^ n })
            }
            Predicate::CondQ { j, variant } => {
                let apd = w.a_plus_d(-1)?;
                if apd.corank() != j {
                    None
                } else {
                    match variant {
                        2 => Some(neg7(&apd, true)?),
                        3 => Some(neg7(&apd, false)?),
                        v => return Err(DensityError::Domain(format!("variant {v} not in {{2, 3}}"))),
                    }
                }
            }
        })
    }

    pub fn parse(s: &str) -> Result<Self, DensityError> {
        let bad = || DensityError::UnknownPredicate(s.to_string());
        let parts: Vec<&str> = s.split(':').collect();
        let num = |i: usize| parts.get(i).and_then(|t| t.parse::<i64>().ok()).ok_or_else(bad);
        Ok(match parts[0] {
            "always" if parts.len() == 1 => Predicate::Always,
            "det_cond_pos7" if parts.len() == 1 => Predicate::DetCondPos7,
            "det_cond_neg7" if parts.len() == 1 => Predicate::DetCondNeg7,
            "joint_7" if parts.len() == 1 => Predicate::Joint7,
            "det_xor7" if parts.len() == 1 => Predicate::DetXor7,
            "corank_eq" if parts.len() == 3 => Predicate::CorankEq { d: num(1)?, m: num(2)? as usize },
            "cond_q" if parts.len() == 3 => Predicate::CondQ { j: num(1)? as usize, variant: num(2)? as u8 },
            _ => return Err(bad()),
        })
    }

    pub fn name(&self) -> String {
        match *self {
            Predicate::Always => "always".into(),
            Predicate::CorankEq { d, m } => format!("corank_eq:{d}:{m}"),
            Predicate::DetCondPos7 => "det_cond_pos7".into(),
            Predicate::DetCondNeg7 => "det_cond_neg7".into(),
            Predicate::Joint7 => "joint_7".into(),
            Predicate::DetXor7 => "det_xor7".into(),
            Predicate::CondQ { j, variant } => format!("cond_q:{j}:{variant}"),
        }
    }
}

pub fn corank_eq(d: i64, m: usize) -> Predicate {
    Predicate::CorankEq { d, m }
}

pub fn cond_q(j: usize, variant: u8) -> Predicate {
    Predicate::CondQ { j, variant }
}

/// Exact probability `num / den` in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    pub fn new(num: u64, den: u64) -> Self {
        let g = crate::arith::gcd(num, den).max(1);
        Self { num: num / g, den: den / g }
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn is_dyadic(&self) -> bool {
        self.den.is_power_of_two()
    }
}

impl std::fmt::Display for Ratio {
    /// `p/2^e` when dyadic, else `p/q`.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_dyadic() {
            write!(f, "{}/2^{}", self.num, self.den.trailing_zeros())
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub p_hat: f64,
    pub stderr: f64,
    /// Points drawn or enumerated.
    pub n_samples: u64,
    /// Points inside the conditioning set.
    pub n_given: u64,
    pub hits: u64,
    pub seed: u64,
    pub exact: bool,
    pub ratio: Option<Ratio>,
}

impl DensityEstimate {
    fn from_counts(hits: u64, given: u64, n_samples: u64, seed: u64, exact: bool) -> Self {
        let p_hat = if given == 0 { 0.0 } else { hits as f64 / given as f64 };
        let (stderr, ratio) = if exact {
            (0.0, (given > 0).then(|| Ratio::new(hits, given)))
        } else {
            ((p_hat * (1.0 - p_hat) / given.max(1) as f64).sqrt(), None)
        };
        Self { p_hat, stderr, n_samples, n_given: given, hits, seed, exact, ratio }
    }
}

/// `(hits, given)` for each predicate over one full enumeration.
pub fn exhaustive_counts(space: &OmegaSpace, preds: &[Predicate]) -> Result<Vec<(u64, u64)>, DensityError> {
    let bits = space.size_bits();
    if bits > MAX_EXHAUSTIVE_BITS {
        return Err(DensityError::SpaceTooLarge { bits });
    }
    let zero = || vec![(0u64, 0u64); preds.len()];
    (0..1u64 << bits)
        .into_par_iter()
        .try_fold(zero, |mut acc, code| {
            let w = space.point(code);
            for (slot, p) in acc.iter_mut().zip(preds) {
                if let Some(b) = p.eval(&w)? {
                    slot.0 += u64::from(b);
                    slot.1 += 1;
                }
            }
            Ok(acc)
        })
        .try_reduce(zero, |mut a, b| {
            for (x, y) in a.iter_mut().zip(b) {
                x.0 += y.0;
                x.1 += y.1;
            }
            Ok(a)
        })
}

pub fn exhaustive_probability(
    k: usize,
    sigma: &[i64],
    constraints: &[Constraint],
    pred: Predicate,
) -> Result<DensityEstimate, DensityError> {
    let space = OmegaSpace::new(k, sigma, constraints)?;
    let (hits, given) = exhaustive_counts(&space, &[pred])?[0];
    Ok(DensityEstimate::from_counts(hits, given, 1 << space.size_bits(), 0, true))
}

/// Seeded estimate; shard `s` draws from stream `s` of the seed, so the
/// result does not depend on the thread count.
pub fn monte_carlo(
    k: usize,
    sigma: &[i64],
    constraints: &[Constraint],
    pred: Predicate,
    n_samples: u64,
    seed: u64,
) -> Result<DensityEstimate, DensityError> {
    let (hits, given) = monte_carlo_counts(&OmegaSpace::new(k, sigma, constraints)?, &[pred], n_samples, seed)?[0];
    Ok(DensityEstimate::from_counts(hits, given, n_samples, seed, false))
}

pub fn monte_carlo_counts(
    space: &OmegaSpace,
    preds: &[Predicate],
    n_samples: u64,
    seed: u64,
) -> Result<Vec<(u64, u64)>, DensityError> {
    if n_samples == 0 {
        return Err(DensityError::Domain("n_samples must be positive".into()));
    }
    let shard_counts = (0..MC_SHARDS)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s);
            let quota = n_samples / MC_SHARDS + u64::from(s < n_samples % MC_SHARDS);
            let mut acc = vec![(0u64, 0u64); preds.len()];
            for _ in 0..quota {
                let w = space.sample(&mut rng);
                for (slot, p) in acc.iter_mut().zip(preds) {
                    if let Some(b) = p.eval(&w)? {
                        slot.0 += u64::from(b);
                        slot.1 += 1;
                    }
                }
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>, DensityError>>()?;
    let mut total = vec![(0u64, 0u64); preds.len()];
    for acc in shard_counts {
        for (t, a) in total.iter_mut().zip(acc) {
            t.0 += a.0;
            t.1 += a.1;
        }
    }
    Ok(total)
}

/// `δ_{∞,m} = 2^{-m^2} ∏_{i≤m} (1 - 2^{-i})^{-2} ∏_{i≥1} (1 - 2^{-i})`.
pub fn delta_inf(m: u32) -> f64 {
    let mut tail = 1.0;
    for i in 1.. {
        let f = 1.0 - 0.5f64.powi(i);
        if 1.0 - f < 1e-15 {
            break;
        }
        tail *= f;
    }
    let head: f64 = (1..=m as i32).map(|i| (1.0 - 0.5f64.powi(i)).powi(-2)).product();
    0.5f64.powi((m * m) as i32) * head * tail
}

/// Lifts `ω ∈ Ω_{k,Σ∪{q}}` to `Ω_{k+1,Σ}` given `[p/q]` for each `p ∈ Σ`:
/// the new last column of `A` is `z^{(q)}`, the new last entries of each `z_p`
/// are the given symbols.
pub fn add_prime_embed(omega: &OmegaSample, q: i64, q_symbols: &[bool]) -> Result<OmegaSample, DensityError> {
    let qi = omega.sigma.iter().position(|&p| p == q).ok_or(DensityError::UnknownSymbol(q))?;
    let sigma: Vec<i64> = omega.sigma.iter().copied().filter(|&p| p != q).collect();
    if q_symbols.len() != sigma.len() {
        return Err(DensityError::Domain("one symbol per remaining sigma entry".into()));
    }
    let k = omega.k;
    let mut upper = F2Matrix::zeros(k + 1, k + 1);
    for i in 0..k {
        for j in i + 1..k {
            upper.set(i, j, omega.upper.get(i, j));
        }
        upper.set(i, k, omega.z[qi].get(i));
    }
    let mut z = Vec::with_capacity(sigma.len());
    let mut sym = q_symbols.iter();
    for (i, v) in omega.z.iter().enumerate() {
        if i != qi {
            z.push(F2Vector::from_bits(v.iter().chain(std::iter::once(*sym.next().expect("len")))));
        }
    }
    Ok(OmegaSample { k: k + 1, sigma, upper, z })
}

/// Whether `w ∈ Ω_{k+1,Σ}` lies in the image of [`add_prime_embed`] for these symbols.
pub fn in_embed_image(w: &OmegaSample, q_symbols: &[bool]) -> bool {
    w.z.len() == q_symbols.len() && w.z.iter().zip(q_symbols).all(|(v, &s)| v.get(w.k - 1) == s)
}

/// `2^{#Σ} (ln(k+1) + 13/12) / sqrt(k+1)`.
pub fn add_prime_bound(sigma_len: usize, k: usize) -> f64 {
    let k1 = (k + 1) as f64;
    2f64.powi(sigma_len as i32) * (k1.ln() + 13.0 / 12.0) / k1.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_sample() {
        let w = sample_omega(1, &[-1], &[Constraint::new(-1, true)], 5).unwrap();
        assert_eq!(w.zm1(), &F2Vector::from_u8(&[1]));
        assert!(w.a().is_zero());
    }

    #[test]
    fn sample_invariants_and_determinism() {
        let sigma = [-1, 2, 3];
        let cons = seven_mod_24_constraints();
        for seed in 0..50 {
            let w = sample_omega(3, &sigma, &cons, seed).unwrap();
            assert_eq!(w, sample_omega(3, &sigma, &cons, seed).unwrap());
            let (a, zm1) = (w.a(), w.zm1().clone());
            for i in 0..3 {
                for j in 0..3 {
                    if i != j {
                        assert_eq!(a.get(j, i), a.get(i, j) ^ (zm1.get(i) & zm1.get(j)));
                    }
                }
                let row: bool = (0..3).fold(false, |acc, j| acc ^ a.get(i, j));
                assert!(!row);
            }
            assert!(w.z(-1).unwrap().sum());
            assert!(!w.z(2).unwrap().sum());
            assert!(!w.z(-3).unwrap().sum());
            assert_eq!(w.z(-3).unwrap(), w.z(-1).unwrap().xor(w.z_symbol(3).unwrap()));
        }
    }

    #[test]
    fn inconsistent_constraints() {
        let c = [Constraint::new(-1, true), Constraint::new(2, false), Constraint::new(-2, false)];
        assert_eq!(OmegaSpace::new(2, &[-1, 2], &c).unwrap_err(), DensityError::UnsatisfiableConstraint);
        assert_eq!(
            OmegaSpace::new(2, &[-1], &[Constraint::new(5, true)]).unwrap_err(),
            DensityError::UnknownSymbol(5)
        );
    }

    #[test]
    fn small_exact_values() {
        let c = three_mod_4_constraints();
        let p = exhaustive_probability(2, &[-1], &c, corank_eq(-1, 0)).unwrap();
        assert_eq!(p.ratio, Some(Ratio::new(1, 2)));
        assert_eq!(p.n_samples, 4);
        let p = exhaustive_probability(1, &[-1], &c, corank_eq(-1, 0)).unwrap();
        assert_eq!(p.ratio, Some(Ratio::new(1, 1)));
        let p = exhaustive_probability(3, &[-1, 2, 3], &seven_mod_24_constraints(), cond_q(0, 2)).unwrap();
        assert_eq!(p.ratio, Some(Ratio::new(5, 8)));
        assert_eq!(p.ratio.unwrap().to_string(), "5/2^3");
    }

    #[test]
    fn space_too_large() {
        let e = exhaustive_probability(8, &[-1, 2, 3], &[], Predicate::Always).unwrap_err();
        assert_eq!(e, DensityError::SpaceTooLarge { bits: 52 });
    }

    #[test]
    fn enumeration_is_a_bijection() {
        let space = OmegaSpace::new(3, &[-1, 2, 3], &seven_mod_24_constraints()).unwrap();
        let mut seen = std::collections::HashSet::new();
        for code in 0..1u64 << space.size_bits() {
            let w = space.point(code);
            assert!(space.contains(&w));
            assert!(seen.insert(w.encode()));
        }
    }

    #[test]
    fn delta_values() {
        assert!((delta_inf(0) - 0.288788).abs() < 1e-6);
        assert!((delta_inf(1) - 2.0 * delta_inf(0)).abs() < 1e-12);
        assert!((delta_inf(2) - 4.0 / 9.0 * delta_inf(0)).abs() < 1e-12);
    }

    #[test]
    fn monte_carlo_basics() {
        let space = [-1, 2, 3];
        let c = seven_mod_24_constraints();
        let e = monte_carlo(5, &space, &c, Predicate::Always, 1000, 3).unwrap();
        assert_eq!(e.p_hat, 1.0);
        let a = monte_carlo(6, &space, &c, Predicate::Joint7, 5000, 9).unwrap();
        let b = monte_carlo(6, &space, &c, Predicate::Joint7, 5000, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn predicate_names_round_trip() {
        for p in [Predicate::Always, corank_eq(-1, 2), Predicate::Joint7, cond_q(1, 3), Predicate::DetXor7] {
            assert_eq!(Predicate::parse(&p.name()).unwrap(), p);
        }
        assert!(Predicate::parse("nope").is_err());
    }

    #[test]
    fn embed_unfolds_definition() {
        let w = sample_omega(1, &[-1, 7], &[Constraint::new(-1, true)], 1).unwrap();
        let e = add_prime_embed(&w, 7, &[true]).unwrap();
        assert_eq!(e.k(), 2);
        assert_eq!(e.sigma(), &[-1]);
        assert_eq!(e.upper(0, 1), w.z_symbol(7).unwrap().get(0));
        assert!(e.zm1().get(1));
        assert!(in_embed_image(&e, &[true]));
        assert!(!in_embed_image(&e, &[false]));
    }
}
