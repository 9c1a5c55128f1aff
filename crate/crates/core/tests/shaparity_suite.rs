use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tiling_core::arith::{factor_squarefree, is_squarefree};
use tiling_core::crosscheck::random_factored;
use tiling_core::densitylab::{seven_mod_24_constraints, OmegaSpace};
use tiling_core::shaparity::{
    cl_parity, comparison_7, det_identity_3, det_identity_7_symbols, genus_parity, FormulaCase, ShaError,
    Symbols,
};
use tiling_core::ternary::sha_parity_ternary;

#[test]
fn genus_formula_agrees_with_ternary_counts() {
    let mut checked = 0;
    for n in (4..=20_000u64).filter(|&n| matches!(n % 24, 3 | 7) && is_squarefree(n)) {
        let f = factor_squarefree(n as i64).unwrap();
        for s in [1i8, -1] {
            let g = cl_parity(&f, s).unwrap();
            let t = sha_parity_ternary(&f, s).unwrap();
            assert_eq!(g.cl_odd, t.cl_odd, "n = {n}, sign {s}, r = {}", t.r);
            checked += 1;
        }
    }
    assert!(checked > 2000);
}

#[test]
fn report_sums_its_terms() {
    for n in (4..=6000u64).filter(|&n| is_squarefree(n)) {
        let f = factor_squarefree(n as i64).unwrap();
        for s in [1i8, -1] {
            match cl_parity(&f, s) {
                Ok(r) => {
                    let sum = r.terms.iter().fold(r.g_n.unwrap_or(false), |a, t| a ^ (t.left & t.g_d));
                    assert_eq!(sum, r.cl_odd);
                    if r.formula_case != FormulaCase::PosNine {
                        for t in &r.terms {
                            assert_eq!(t.left, genus_parity(n / t.d).unwrap());
                            assert_eq!(t.g_d, genus_parity(t.d).unwrap());
                        }
                    }
                    if r.formula_case == FormulaCase::NegForcedEven {
                        assert!(!r.cl_odd);
                    }
                }
                Err(ShaError::SignMinusOne { .. } | ShaError::UnsupportedClass { .. }) => {}
                Err(e) => panic!("n = {n}: {e}"),
            }
        }
    }
}

#[test]
fn refusals_follow_root_number_then_class() {
    // n ≡ 2 mod 12 on the positive twist needs more than genus numbers
    for n in [14u64, 26, 38, 62, 74, 86] {
        let f = factor_squarefree(n as i64).unwrap();
        assert!(matches!(cl_parity(&f, 1), Err(ShaError::UnsupportedClass { .. })), "n = {n}");
    }
    let f = factor_squarefree(5).unwrap();
    assert!(matches!(cl_parity(&f, -1), Err(ShaError::SignMinusOne { .. })));
    assert!(matches!(cl_parity(&factor_squarefree(3).unwrap(), 1), Err(ShaError::Domain(_))));
}

#[test]
fn comparison_holds_beyond_the_scan_range() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..300 {
        let n = random_factored(&mut rng, 1..=6, 7, 24, 5000);
        let c = comparison_7(&n).unwrap();
        assert_eq!(c.invariant_odd, c.selmer_trivial, "n = {}", n.value());
    }
}

#[test]
fn identity_seven_on_model_samples() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for k in 1..=14 {
        let space = OmegaSpace::new(k, &[-1, 2, 3], &seven_mod_24_constraints()).unwrap();
        for _ in 0..200 {
            let w = space.sample(&mut rng);
            assert!(det_identity_7_symbols(&Symbols::from_omega(&w).unwrap()).holds(), "k = {k}");
        }
    }
}

#[test]
fn subset_identity_on_every_index_pair() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..200 {
        let n = random_factored(&mut rng, 1..=7, 1, 2, 4000);
        let k = n.odd_prime_factors().len();
        let (i1, i2) = (rng.random_range(0..k), rng.random_range(0..k));
        let c = det_identity_3(&n, i1, i2).unwrap();
        assert!(c.holds(), "n = {} ({i1}, {i2})", n.value());
        if i1 == i2 {
            assert!(!c.lhs && !c.rhs);
        }
    }
}
