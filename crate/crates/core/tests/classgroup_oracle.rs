use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tiling_core::arith::{factor_squarefree, is_squarefree, FactoredSquareFree};
use tiling_core::classgroup::{
    class_group_oracle, field_disc, four_rank_from_a, four_rank_redei, genus_parity_bordered,
    genus_parity_bordered_alt, genus_parity_redei, mu, reduced_forms, QuadForm,
};
use tiling_core::descent::DescentData;

const BOUND: u64 = 20_000;

fn squarefree_upto(bound: u64) -> impl Iterator<Item = FactoredSquareFree> {
    (2..=bound).filter(|&n| is_squarefree(n)).map(|n| factor_squarefree(n as i64).unwrap())
}

#[test]
fn redei_parity_matches_oracle() {
    for n in squarefree_upto(BOUND) {
        let s = class_group_oracle(field_disc(n.magnitude())).unwrap();
        assert_eq!(
            genus_parity_redei(&n).unwrap(),
            s.two_cl % 2 == 1,
            "n = {} h = {}",
            n.value(),
            s.h
        );
    }
}

#[test]
fn four_rank_matches_oracle() {
    for n in squarefree_upto(BOUND).filter(|n| n.magnitude() % 4 == 3) {
        let s = class_group_oracle(-n.value()).unwrap();
        assert_eq!(four_rank_redei(&n).unwrap(), s.four_rank, "n = {}", n.value());
        assert_eq!(four_rank_from_a(&n).unwrap(), s.four_rank, "n = {}", n.value());
    }
}

#[test]
fn ambiguous_classes_count_genera() {
    for n in squarefree_upto(3000) {
        let d = field_disc(n.magnitude());
        let amb = reduced_forms(d).iter().filter(|f| f.is_ambiguous()).count();
        assert_eq!(amb, 1 << (mu(d) - 1), "d = {d}");
    }
}

fn random_squarefree(rng: &mut ChaCha8Rng, residue: u64, modulus: u64, max: u64) -> FactoredSquareFree {
    loop {
        let n = rng.random_range(2..max);
        if n % modulus == residue && is_squarefree(n) {
            return factor_squarefree(n as i64).unwrap();
        }
    }
}

#[test]
fn adding_d_minus_one_raises_rank_by_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10_000 {
        let n = random_squarefree(&mut rng, 3, 4, 1 << 40);
        let dd = DescentData::from_odd(&n).unwrap();
        assert_eq!(dd.a_plus_d(-1).rank(), dd.a().rank() + 1, "n = {}", n.value());
    }
}

#[test]
fn border_index_does_not_matter() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut multi = 0;
    for _ in 0..1000 {
        let n = random_squarefree(&mut rng, 1, 4, 1 << 36);
        let dd = DescentData::from_odd(&n).unwrap();
        let first = genus_parity_bordered(&dd, 0).unwrap();
        for i in 0..dd.k() {
            assert_eq!(genus_parity_bordered(&dd, i).unwrap(), first, "n = {} i = {i}", n.value());
            assert_eq!(genus_parity_bordered_alt(&dd, i).unwrap(), first, "n = {} i = {i}", n.value());
        }
        multi += usize::from(dd.k() > 1);
    }
    assert!(multi > 500);
}

#[test]
fn composition_stays_reduced_and_is_a_group() {
    for d in [-23i64, -39, -56, -84, -155, -231, -420, -1155, -3315, -9240] {
        let forms = reduced_forms(d);
        let id = QuadForm::identity(d);
        assert!(forms.contains(&id));
        for f in &forms {
            assert!(f.is_reduced());
            assert_eq!(f.compose(&f.inverse()), id);
            for g in &forms {
                let fg = f.compose(g);
                assert!(fg.is_reduced(), "{f:?} * {g:?} = {fg:?}");
                assert_eq!(fg.disc(), d);
                assert_eq!(fg, g.compose(f));
            }
        }
        // associativity on a sample
        for f in forms.iter().take(6) {
            for g in forms.iter().take(6) {
                for h in forms.iter().take(6) {
                    assert_eq!(f.compose(g).compose(h), f.compose(&g.compose(h)));
                }
            }
        }
    }
}
