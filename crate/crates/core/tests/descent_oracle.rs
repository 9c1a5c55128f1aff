use rayon::prelude::*;
use tiling_core::arith::{factor_squarefree, is_squarefree, FactoredSquareFree};
use tiling_core::descent::local::{local_ok_table, padic_solvable, Place};
use tiling_core::descent::{
    brute_force_selmer, build_descent, build_kernel_matrix, reduced_matrix, selmer_dim_matrix,
    DispatchCase,
};

fn squarefree_odd_in_cases(bound: i64) -> Vec<FactoredSquareFree> {
    (-bound..=bound)
        .filter(|&m| m.abs() > 1 && m % 2 != 0 && is_squarefree(m.unsigned_abs()))
        .map(|m| factor_squarefree(m).unwrap())
        .filter(|m| DispatchCase::of(m).is_some() && m.value() != 3)
        .collect()
}

#[test]
fn matrix_formula_matches_oracle_up_to_1000() {
    let mut checked = 0;
    for m in squarefree_odd_in_cases(1000) {
        let oracle = brute_force_selmer(&m).unwrap();
        let formula = selmer_dim_matrix(&m).unwrap();
        assert_eq!(formula.dim_mod_torsion, oracle.dim_mod_torsion, "m = {}", m.value());
        let b = build_kernel_matrix(&m).unwrap();
        assert_eq!(b.corank() as u32, oracle.dim_total, "kernel corank at m = {}", m.value());
        checked += 1;
    }
    assert!(checked > 200, "only {checked} values checked");
}

/// Real solvability straight from the linear system in the squares.
fn real_solvable(b1: i64, b2: i64, m: i64) -> bool {
    let rows = [[b1, -b2, 0, -m], [b1, 0, -b1 * b2, 3 * m]];
    let col = |j: usize| [rows[0][j] as i128, rows[1][j] as i128];
    for j in 0..4 {
        if col(j) == [0, 0] {
            return true;
        }
    }
    // supports of size 2 and 3 with a one-dimensional kernel
    for a in 0..4 {
        for b in a + 1..4 {
            let (u, v) = (col(a), col(b));
            if u[0] * v[1] - u[1] * v[0] == 0 {
                // dependent pair: kernel spanned by (|v|, -|u|) up to sign pattern
                let s = if u != [0, 0] { (u, v) } else { continue };
                let (u, v) = s;
                let ratio_pos = u[0] * v[0] + u[1] * v[1] < 0;
                if ratio_pos {
                    return true;
                }
            }
        }
    }
    for skip in 0..4 {
        let idx: Vec<usize> = (0..4).filter(|&j| j != skip).collect();
        let c: Vec<[i128; 2]> = idx.iter().map(|&j| col(j)).collect();
        let k = [
            c[1][0] * c[2][1] - c[1][1] * c[2][0],
            c[2][0] * c[0][1] - c[2][1] * c[0][0],
            c[0][0] * c[1][1] - c[0][1] * c[1][0],
        ];
        if k == [0, 0, 0] {
            continue;
        }
        if k.iter().all(|&x| x > 0) || k.iter().all(|&x| x < 0) {
            return true;
        }
    }
    false
}

fn square_classes(primes: &[i64]) -> Vec<i64> {
    let mut basis = vec![-1i64];
    basis.extend_from_slice(primes);
    (0..1u32 << basis.len())
        .map(|mask| {
            basis
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, &g)| g)
                .product()
        })
        .collect()
}

#[test]
fn tables_agree_with_generic_local_search() {
    // small-prime m so the generic search stays cheap at every bad place
    // every residue of m mod 8, both signs, with and without 3
    let ms: Vec<i64> = [5i64, 7, 13, 15, 21, 33, 35, 39, 17, 41]
        .into_iter()
        .flat_map(|m| [m, -m])
        .chain([-105])
        .collect();
    ms.into_par_iter().for_each(|mv| {
        let m = factor_squarefree(mv).unwrap();
        let mut primes = vec![2i64, 3];
        primes.extend(m.odd_primes().iter().map(|&p| p as i64));
        let classes = square_classes(&primes);
        let mut places = vec![Place::Infinity, Place::Prime(2), Place::Prime(3)];
        places.extend(m.odd_primes().iter().filter(|&&p| p <= 7).map(|&p| Place::Prime(p)));
        for &b1 in &classes {
            for &b2 in &classes {
                for &pl in &places {
                    let table = local_ok_table(&m, b1, b2, pl).unwrap();
                    let generic = match pl {
                        Place::Infinity => real_solvable(b1, b2, mv),
                        Place::Prime(p) => {
                            let depth = if p == 2 { 12 } else { 5 };
                            padic_solvable(p, b1, b2, mv, depth).expect("undecided")
                        }
                    };
                    assert_eq!(table, generic, "m={mv} b=({b1},{b2}) at {pl:?}");
                }
            }
        }
    });
}

#[test]
fn even_twists_use_generic_two_adic_search() {
    for mv in [2i64, -2, 6, -6, 10, -10, 14, -14, 22, -30, 34] {
        let m = factor_squarefree(mv).unwrap();
        let r = brute_force_selmer(&m).unwrap();
        assert!(r.dim_total >= 2, "m = {mv}");
    }
}

#[test]
fn permuting_primes_keeps_dimensions() {
    for nv in [5 * 7 * 13 * 17i64, 7 * 11 * 13, 5 * 13 * 29 * 37, 7 * 31 * 43] {
        let n = factor_squarefree(nv).unwrap();
        let dd = build_descent(&n).unwrap();
        let k = dd.k();
        let cases: Vec<DispatchCase> = [1i64, -1, 3, -3]
            .iter()
            .filter_map(|&s| DispatchCase::of(&factor_squarefree(s * nv).unwrap()))
            .collect();
        for case in cases {
            let base = reduced_matrix(case, &dd).unwrap().rank();
            let mut perm: Vec<usize> = (0..k).collect();
            for shift in 1..k {
                perm.rotate_left(1);
                if shift % 2 == 0 {
                    perm.swap(0, k - 1);
                }
                let pd = dd.permuted(&perm);
                assert_eq!(reduced_matrix(case, &pd).unwrap().rank(), base, "n = {nv} {case:?}");
            }
        }
    }
}
