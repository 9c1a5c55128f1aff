//! Range-wide consistency suites shared by the CLI and the acceptance run.
//! Each suite returns the number of inputs checked and every violation found.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{factor_squarefree, is_squarefree, FactorSieve, FactoredSquareFree};
use crate::classgroup::{
    class_group_oracle, field_disc, four_rank_from_a, four_rank_redei, genus_odd_frequency, genus_parity_redei,
};
use crate::curveinv::{root_number, ROOT_NUMBER_TABLE};
use crate::densitylab::{
    cond_q, corank_eq, delta_inf, exhaustive_counts, exhaustive_probability, monte_carlo_counts,
    seven_mod_24_constraints, three_mod_4_constraints, OmegaSpace, Predicate, Ratio,
};
use crate::descent::{brute_force_selmer, build_kernel_matrix, selmer_dim_matrix, DescentData, DispatchCase};
use crate::shaparity::{
    cl_parity, comparison_7, det_identity_3, det_identity_7, det_identity_7_symbols, genus_sum_7,
    induction_residual, triple_sum, InductionCase, Symbols,
};
use crate::ternary::{sha_parity_ternary, FORM_1_3_36, FORM_1_3_12};

/// Tolerance for the Monte Carlo densities at `k = 20`.
pub const MC_TOLERANCE: f64 = 0.005;
/// Tolerance for the model-vs-integers genus frequency.
pub const GERTH_TOLERANCE: f64 = 0.02;
/// `δ = 0.288788...`, as displayed.
pub const DELTA_DISPLAYED: f64 = 0.288788;
/// `δ/2 = 0.144394...`, as displayed.
pub const HALF_DELTA_DISPLAYED: f64 = 0.144394;

#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub input: String,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub checked: u64,
    pub violations: Vec<Violation>,
    /// Headline numbers (frequencies, exact ratios) for printing.
    pub notes: Vec<String>,
}

impl SuiteReport {
    fn new(suite: &str) -> Self {
        Self { suite: suite.into(), checked: 0, violations: Vec::new(), notes: Vec::new() }
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.checked > 0
    }

    fn fail(&mut self, input: impl ToString, detail: impl ToString) {
        self.violations.push(Violation { input: input.to_string(), detail: detail.to_string() });
    }

    fn absorb(&mut self, results: Vec<Result<(), Violation>>) {
        self.checked += results.len() as u64;
        self.violations.extend(results.into_iter().filter_map(Result::err));
    }

    fn merge(&mut self, other: SuiteReport) {
        self.checked += other.checked;
        self.violations.extend(other.violations);
        self.notes.extend(other.notes);
    }
}

fn violation(input: impl ToString, detail: impl ToString) -> Violation {
    Violation { input: input.to_string(), detail: detail.to_string() }
}

fn squarefree_in_class(bound: u64, r: u64, m: u64) -> Vec<u64> {
    (r..=bound).step_by(m as usize).filter(|&n| n > 3 && is_squarefree(n)).collect()
}

fn fac(n: i64) -> FactoredSquareFree {
    factor_squarefree(n).expect("square-free by construction")
}

/// Selmer triviality of both twists, 4-rank by forms, both ternary criteria,
/// for square-free `n ≡ 3 mod 24`, `3 < n ≤ bound`.
pub fn theorem_a(bound: u64) -> SuiteReport {
    let mut rep = SuiteReport::new("theorem-A");
    let results = squarefree_in_class(bound, 3, 24)
        .into_par_iter()
        .map(|n| {
            let f = fac(n as i64);
            let err = |e: &dyn std::fmt::Display| violation(n, e);
            let pos = selmer_dim_matrix(&f).map_err(|e| err(&e))?.dim_mod_torsion == 0;
            let neg = selmer_dim_matrix(&f.negate()).map_err(|e| err(&e))?.dim_mod_torsion == 0;
            let four = class_group_oracle(-(n as i64)).map_err(|e| err(&e))?.four_rank == 0;
            let t_pos = sha_parity_ternary(&f, 1).map_err(|e| err(&e))?.cl_odd;
            let t_neg = sha_parity_ternary(&f, -1).map_err(|e| err(&e))?.cl_odd;
            let bits = [pos, neg, four, t_pos, t_neg];
            if bits.iter().all(|&b| b == bits[0]) {
                Ok(())
            } else {
                Err(violation(n, format!("sel(+n), sel(-n), 4-rank 0, ternary(x^2+3y^2+4z^2), ternary(6x^2+y^2+2z^2) = {bits:?}")))
            }
        })
        .collect();
    rep.absorb(results);
    rep
}

/// Genus invariant against descent case (b), and the ternary criteria, for
/// square-free `n ≡ 7 mod 24`, `n ≤ bound`.
pub fn comparison_seven(bound: u64) -> SuiteReport {
    let mut rep = SuiteReport::new("comparison-7");
    let results = squarefree_in_class(bound, 7, 24)
        .into_par_iter()
        .map(|n| {
            let f = fac(n as i64);
            let c = comparison_7(&f).map_err(|e| violation(n, e))?;
            let t36 = sha_parity_ternary(&f, -1).map_err(|e| violation(n, e))?;
            let t12 = sha_parity_ternary(&f, 1).map_err(|e| violation(n, e))?;
            let g_pos = cl_parity(&f, 1).map_err(|e| violation(n, e))?.cl_odd;
            if t36.form != FORM_1_3_36 || t12.form != FORM_1_3_12 {
                return Err(violation(n, "unexpected ternary form"));
            }
            if t36.cl_odd != c.invariant_odd {
                return Err(violation(n, format!("{FORM_1_3_36}: r = {}, invariant odd = {}", t36.r, c.invariant_odd)));
            }
            if t12.cl_odd != g_pos {
                return Err(violation(n, format!("{FORM_1_3_12}: r = {}, CL(n) = g(n) odd = {g_pos}", t12.r)));
            }
            Ok(())
        })
        .collect();
    rep.absorb(results);
    rep
}

/// Odd `m`, `1 < |m| ≤ bound`, in the matrix dispatch cases, except `m = 3`.
pub fn oracle_inputs(bound: i64) -> Vec<FactoredSquareFree> {
    (-bound..=bound)
        .filter(|&m| m.abs() > 1 && m % 2 != 0 && m != 3 && is_squarefree(m.unsigned_abs()))
        .map(fac)
        .filter(|m| DispatchCase::of(m).is_some())
        .collect()
}

/// Matrix formula and kernel corank against the local-table enumeration.
pub fn oracle_equiv(bound: i64) -> SuiteReport {
    let mut rep = SuiteReport::new("oracle-equiv");
    let results = oracle_inputs(bound)
        .into_par_iter()
        .map(|m| {
            let v = m.value();
            let oracle = brute_force_selmer(&m).map_err(|e| violation(v, e))?;
            let formula = selmer_dim_matrix(&m).map_err(|e| violation(v, e))?;
            let corank = build_kernel_matrix(&m).map_err(|e| violation(v, e))?.corank() as u32;
            if formula.dim_mod_torsion != oracle.dim_mod_torsion || corank != oracle.dim_total {
                return Err(violation(
                    v,
                    format!(
                        "formula {} / oracle {} mod torsion; kernel corank {} / oracle total {}",
                        formula.dim_mod_torsion, oracle.dim_mod_torsion, corank, oracle.dim_total
                    ),
                ));
            }
            Ok(())
        })
        .collect();
    rep.absorb(results);
    rep
}

/// `dim Sel_2(E^(-n))/E[2]` is even and at least 2 for square-free `n ≡ 1 mod 12`, `1 < n ≤ bound`.
pub fn nontrivial_example(bound: u64) -> SuiteReport {
    let mut rep = SuiteReport::new("descent-non-trivial");
    let results = (13..=bound)
        .step_by(12)
        .filter(|&n| is_squarefree(n))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|n| {
            let d = selmer_dim_matrix(&fac(-(n as i64))).map_err(|e| violation(n, e))?.dim_mod_torsion;
            if d % 2 == 0 && d >= 2 {
                Ok(())
            } else {
                Err(violation(n, format!("dim_mod_torsion = {d}")))
            }
        })
        .collect();
    rep.absorb(results);
    rep
}

/// Rédei-matrix genus parity and 4-rank against reduced forms, square-free `n ≤ bound`.
pub fn redei_oracle(bound: u64) -> SuiteReport {
    let mut rep = SuiteReport::new("redei-oracle");
    let results = (2..=bound)
        .into_par_iter()
        .filter(|&n| is_squarefree(n))
        .map(|n| {
            let f = fac(n as i64);
            let s = class_group_oracle(field_disc(n)).map_err(|e| violation(n, e))?;
            let g = genus_parity_redei(&f).map_err(|e| violation(n, e))?;
            if g != (s.two_cl % 2 == 1) {
                return Err(violation(n, format!("Redei parity {g}, oracle #2Cl = {}", s.two_cl)));
            }
            if n % 4 == 3 {
                let a = four_rank_redei(&f).map_err(|e| violation(n, e))?;
                let b = four_rank_from_a(&f).map_err(|e| violation(n, e))?;
                if a != s.four_rank || b != s.four_rank {
                    return Err(violation(n, format!("4-rank {a}, {b} vs oracle {}", s.four_rank)));
                }
            }
            Ok(())
        })
        .collect();
    rep.absorb(results);
    rep
}

/// The 36 tabulated root numbers against the formula.
pub fn root_table() -> SuiteReport {
    let mut rep = SuiteReport::new("root-table");
    for &(r, pos, neg) in &ROOT_NUMBER_TABLE {
        let n = (u64::from(r)..).step_by(24).find(|&n| is_squarefree(n)).expect("some square-free member");
        for (sign, want) in [(1i64, pos), (-1, neg)] {
            rep.checked += 1;
            let got = root_number(&fac(sign * n as i64));
            if got != want {
                rep.fail(sign * n as i64, format!("formula {got}, table {want}"));
            }
        }
    }
    rep.notes.push(format!("{}/{} entries", rep.checked - rep.violations.len() as u64, rep.checked));
    rep
}

/// Random square-free `n` with `n ≡ r mod m` and `k` prime factors drawn below `max_prime`.
pub fn random_factored(
    rng: &mut ChaCha8Rng,
    k_range: std::ops::RangeInclusive<usize>,
    r: u64,
    m: u64,
    max_prime: u64,
) -> FactoredSquareFree {
    loop {
        let k = rng.random_range(k_range.clone());
        // keep the product below 2^61
        let max_prime = max_prime.min(1 << (61 / k as u32)).max(8);
        let mut ps: Vec<u64> = Vec::with_capacity(k);
        while ps.len() < k {
            let p = rng.random_range(3..max_prime);
            if crate::arith::is_prime(p) && !ps.contains(&p) {
                ps.push(p);
            }
        }
        let n: u128 = ps.iter().map(|&p| p as u128).product();
        if n % m as u128 == r as u128 {
            return FactoredSquareFree::from_primes(1, &ps).expect("distinct primes");
        }
    }
}

/// Parameters of the identity suite.
#[derive(Debug, Clone, Copy)]
pub struct IdentityConfig {
    pub samples: usize,
    pub bound: u64,
    pub seed: u64,
}

impl Default for IdentityConfig {
    fn default() -> Self {
        Self { samples: 10_000, bound: 10_000, seed: 20 }
    }
}

/// Each determinant identity over seeded random inputs or a full range.
pub fn identities(cfg: IdentityConfig) -> SuiteReport {
    let mut rep = SuiteReport::new("identities");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut sub = SuiteReport::new("A+D-1");
    for _ in 0..cfg.samples {
        let n = random_factored(&mut rng, 1..=10, 3, 4, 1 << 16);
        let dd = DescentData::from_odd(&n).expect("odd");
        sub.checked += 1;
        let (r1, r0) = (dd.a_plus_d(-1).rank(), dd.a().rank());
        if r1 != r0 + 1 {
            sub.fail(n.value(), format!("rank(A + D_-1) = {r1}, rank A = {r0}"));
        }
    }
    rep.merge(sub);

    let inputs: Vec<(FactoredSquareFree, usize, usize)> = (0..cfg.samples)
        .map(|_| {
            let n = random_factored(&mut rng, 1..=10, 1, 2, 1 << 16);
            let k = n.odd_prime_factors().len();
            (n, rng.random_range(0..k), rng.random_range(0..k))
        })
        .collect();
    let results = inputs
        .into_par_iter()
        .map(|(n, i1, i2)| {
            let c = det_identity_3(&n, i1, i2).map_err(|e| violation(n.value(), e))?;
            if c.holds() && (i1 != i2 || !c.lhs) {
                Ok(())
            } else {
                Err(violation(format!("{} i1={i1} i2={i2}", n.value()), format!("{c:?}")))
            }
        })
        .collect();
    rep.absorb(results);

    let inputs: Vec<(FactoredSquareFree, usize)> = (0..cfg.samples)
        .map(|_| {
            let n = random_factored(&mut rng, 1..=10, 7, 8, 1 << 16);
            let k = n.odd_prime_factors().len();
            (n, rng.random_range(0..k))
        })
        .collect();
    let results = inputs
        .into_par_iter()
        .map(|(n, t)| {
            let c = genus_sum_7(&n, t).map_err(|e| violation(n.value(), e))?;
            c.holds().then_some(()).ok_or_else(|| violation(format!("{} t={t}", n.value()), format!("{c:?}")))
        })
        .collect();
    rep.absorb(results);

    let results = (7..=cfg.bound)
        .step_by(24)
        .filter(|&n| is_squarefree(n))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|n| {
            let f = fac(n as i64);
            let c = det_identity_7(&f).map_err(|e| violation(n, e))?;
            c.holds().then_some(()).ok_or_else(|| violation(n, format!("{c:?}")))?;
            let t = triple_sum(&f).map_err(|e| violation(n, e))?;
            (!t).then_some(()).ok_or_else(|| violation(n, "triple sum is 1"))
        })
        .collect();
    rep.absorb(results);

    let space = OmegaSpace::new(6, &[-1, 2, 3], &seven_mod_24_constraints()).expect("consistent");
    for _ in 0..cfg.samples {
        let k = rng.random_range(1..=12);
        let space = if k == space.k() {
            space.clone()
        } else {
            OmegaSpace::new(k, &[-1, 2, 3], &seven_mod_24_constraints()).expect("consistent")
        };
        let w = space.sample(&mut rng);
        rep.checked += 1;
        let c = det_identity_7_symbols(&Symbols::from_omega(&w).expect("sigma has -1, 2, 3"));
        if !c.holds() {
            rep.fail(format!("model sample k={k} code={:#x}", w.encode()), format!("{c:?}"));
        }
    }

    let results = (5..=cfg.bound)
        .into_par_iter()
        .filter(|&n| InductionCase::of(n).is_some() && is_squarefree(n))
        .map(|n| match induction_residual(&fac(n as i64)) {
            Ok(false) => Ok(()),
            Ok(true) => Err(violation(n, "residual 1")),
            Err(e) => Err(violation(n, e)),
        })
        .collect();
    rep.absorb(results);
    rep
}

/// Parameters of the density suite.
#[derive(Debug, Clone, Copy)]
pub struct DensityConfig {
    pub mc_k: usize,
    pub mc_samples: u64,
    pub seed: u64,
    pub gerth_bound: u32,
    pub gerth_omega: usize,
}

impl Default for DensityConfig {
    fn default() -> Self {
        Self { mc_k: 20, mc_samples: 1_000_000, seed: 1, gerth_bound: 10_000_000, gerth_omega: 4 }
    }
}

/// `Q_{k,0}^{(2)} = 1/2 + 2^-k`, `Q_{k,1}^{(2)} = Q_{k,1}^{(3)} = 1/4` for `k = 3, 4, 5`;
/// `δ_{1,0} = 1`, `δ_{2,0} = 1/2`.
pub fn density_exact() -> SuiteReport {
    let mut rep = SuiteReport::new("density-exact");
    for k in 3..=5usize {
        let space = OmegaSpace::new(k, &[-1, 2, 3], &seven_mod_24_constraints()).expect("consistent");
        let preds = [cond_q(0, 2), cond_q(1, 2), cond_q(1, 3)];
        let want = [Ratio::new((1 << k) / 2 + 1, 1 << k), Ratio::new(1, 4), Ratio::new(1, 4)];
        let counts = exhaustive_counts(&space, &preds).expect("small space");
        for ((p, w), (hits, given)) in preds.iter().zip(want).zip(counts) {
            rep.checked += 1;
            let got = Ratio::new(hits, given);
            rep.notes.push(format!("k={k} {} = {got}", p.name()));
            if got != w {
                rep.fail(format!("k={k} {}", p.name()), format!("{got} != {w}"));
            }
        }
    }
    for (k, w) in [(1usize, Ratio::new(1, 1)), (2, Ratio::new(1, 2))] {
        rep.checked += 1;
        let e = exhaustive_probability(k, &[-1], &three_mod_4_constraints(), corank_eq(-1, 0)).expect("small");
        let got = e.ratio.expect("nonempty");
        rep.notes.push(format!("delta_{{{k},0}} = {got}"));
        if got != w {
            rep.fail(format!("delta_{{{k},0}}"), format!("{got} != {w}"));
        }
    }
    rep
}

/// Frequencies of the two determinant conditions and their conjunction at large `k`.
pub fn density_monte_carlo(cfg: DensityConfig) -> SuiteReport {
    let mut rep = SuiteReport::new("density-mc");
    let space = OmegaSpace::new(cfg.mc_k, &[-1, 2, 3], &seven_mod_24_constraints()).expect("consistent");
    let preds = [Predicate::DetCondPos7, Predicate::DetCondNeg7, Predicate::Joint7];
    let targets = [DELTA_DISPLAYED, DELTA_DISPLAYED, HALF_DELTA_DISPLAYED];
    let counts = monte_carlo_counts(&space, &preds, cfg.mc_samples, cfg.seed).expect("positive samples");
    for ((p, t), (hits, given)) in preds.iter().zip(targets).zip(counts) {
        rep.checked += 1;
        let f = hits as f64 / given as f64;
        rep.notes.push(format!("{} = {f:.6} (target {t:.6})", p.name()));
        if (f - t).abs() > MC_TOLERANCE {
            rep.fail(p.name(), format!("{f:.6} off {t:.6} by more than {MC_TOLERANCE}"));
        }
    }
    rep
}

/// Odd-genus frequency among integers against the exhaustive model with the same `k`.
pub fn density_gerth(cfg: DensityConfig) -> SuiteReport {
    let mut rep = SuiteReport::new("density-gerth");
    let sieve = FactorSieve::new(cfg.gerth_bound);
    let (odd, all) = genus_odd_frequency(&sieve, cfg.gerth_omega);
    let model = exhaustive_probability(cfg.gerth_omega, &[-1], &three_mod_4_constraints(), corank_eq(-1, 0))
        .expect("small space");
    let f = odd as f64 / all.max(1) as f64;
    rep.checked += 1;
    rep.notes.push(format!(
        "omega={} n<{}: {odd}/{all} = {f:.6}, model {} = {:.6}",
        cfg.gerth_omega,
        cfg.gerth_bound,
        model.ratio.expect("nonempty"),
        model.p_hat
    ));
    if (f - model.p_hat).abs() > GERTH_TOLERANCE {
        rep.fail(
            format!("omega={} n<{}", cfg.gerth_omega, cfg.gerth_bound),
            format!("|{f:.6} - {:.6}| > {GERTH_TOLERANCE}", model.p_hat),
        );
    }
    rep
}

/// Exact, Monte Carlo and integer-side density checks, plus `δ_{∞,m}` relations.
pub fn density(cfg: DensityConfig) -> SuiteReport {
    let mut rep = density_exact();
    rep.suite = "density".into();
    rep.merge(density_monte_carlo(cfg));
    rep.merge(density_gerth(cfg));
    rep.checked += 1;
    let d0 = delta_inf(0);
    if (d0 - DELTA_DISPLAYED).abs() > 1e-6
        || (delta_inf(1) - 2.0 * d0).abs() > 1e-12
        || (delta_inf(2) - 4.0 / 9.0 * d0).abs() > 1e-12
    {
        rep.fail("delta_inf", format!("delta_inf(0) = {d0}"));
    }
    rep
}

pub const SUITES: [&str; 7] =
    ["theorem-A", "comparison-7", "oracle-equiv", "identities", "density", "rednei-oracle", "root-table"];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_bounds_pass() {
        assert!(theorem_a(600).passed());
        assert!(comparison_seven(600).passed());
        assert!(oracle_equiv(60).passed());
        assert!(nontrivial_example(600).passed());
        assert!(redei_oracle(600).passed());
        let r = root_table();
        assert!(r.passed());
        assert_eq!(r.checked, 36);
    }

    #[test]
    fn small_identity_run() {
        let r = identities(IdentityConfig { samples: 100, bound: 500, seed: 3 });
        assert!(r.passed(), "{:?}", r.violations);
    }

    #[test]
    fn random_factored_respects_class() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            let n = random_factored(&mut rng, 2..=5, 7, 8, 1000);
            assert_eq!(n.magnitude() % 8, 7);
        }
    }
}
