use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tiling_core::arith::{factor_squarefree, gcd, is_squarefree};
use tiling_core::curveinv::{invariants, root_number, root_number_from_table, tamagawa, torsion_order};
use tiling_core::ternary::{count_representations, r_value, FORM_1_3_12, FORM_1_3_36};

#[test]
fn root_number_is_stable_under_squares() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut done = 0;
    while done < 1000 {
        let n: i64 = rng.random_range(-100_000..100_000);
        let m: i64 = rng.random_range(1..200);
        if n == 0 || !is_squarefree(n.unsigned_abs()) || gcd(m as u64, 6) != 1 {
            continue;
        }
        let f = factor_squarefree(n).unwrap();
        assert_eq!(root_number_from_table(n * m * m), Some(root_number(&f)), "n = {n} m = {m}");
        done += 1;
    }
}

#[test]
fn invariants_are_consistent() {
    for n in (-3000i64..3000).filter(|&n| n != 0 && is_squarefree(n.unsigned_abs())) {
        let f = factor_squarefree(n).unwrap();
        let inv = invariants(&f);
        let t = tamagawa(&f);
        assert_eq!(t.product, t.local.values().map(|&c| u64::from(c)).product::<u64>());
        assert_eq!(inv.torsion_order == 8, n == 1);
        assert_eq!(torsion_order(&f), inv.torsion_order);
    }
}

#[test]
fn r_at_seven_is_two() {
    // r/4 is then not an integer
    assert_eq!(r_value(FORM_1_3_36, 7), Ok(2));
    assert_eq!(r_value(FORM_1_3_12, 7), Ok(2));
}

#[test]
fn plain_counts_are_even_off_squares() {
    for n in (1..3000u64).filter(|&n| is_squarefree(n) && n > 1) {
        for q in [FORM_1_3_36, FORM_1_3_12] {
            assert_eq!(count_representations(q, n, false).unwrap() % 2, 0, "{q} at {n}");
        }
    }
}
