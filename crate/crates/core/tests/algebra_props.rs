//! Properties of permutations, cycle types and permanents.

use indist::matrix::Matrix;
use indist::permanent::{permanent, permanent_laplace, permanent_naive, permanent_ryser};
use indist::symgroup::{cycle_index, cycle_monomial, enumerate, factorial, subgroup_members, Permutation};
use indist::{CMatrix64, C64};
use num_rational::Ratio;
use proptest::prelude::*;

fn permutation(max_n: usize) -> impl Strategy<Value = Permutation> {
    (1..=max_n).prop_flat_map(|n| Just((0..n).collect::<Vec<_>>()).prop_shuffle()).prop_map(|v| Permutation::new(v).unwrap())
}

fn permutation_pair(max_n: usize) -> impl Strategy<Value = (Permutation, Permutation)> {
    (1..=max_n).prop_flat_map(|n| {
        let base = Just((0..n).collect::<Vec<_>>());
        (base.clone().prop_shuffle(), base.prop_shuffle())
            .prop_map(|(a, b)| (Permutation::new(a).unwrap(), Permutation::new(b).unwrap()))
    })
}

fn complex_matrix(n: usize) -> impl Strategy<Value = CMatrix64> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n)
        .prop_map(move |v| CMatrix64::from_fn(n, |i, j| C64::new(v[i * n + j].0, v[i * n + j].1)))
}

fn matrix_and_perm(max_n: usize) -> impl Strategy<Value = (CMatrix64, Vec<usize>, Vec<usize>)> {
    (1..=max_n).prop_flat_map(|n| {
        let base = Just((0..n).collect::<Vec<_>>());
        (complex_matrix(n), base.clone().prop_shuffle(), base.prop_shuffle())
    })
}

fn close(a: C64, b: C64, scale: f64) -> bool {
    (a - b).norm() <= 1e-10 * scale.max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn inverse_has_same_cycle_type(p in permutation(9)) {
        prop_assert_eq!(p.inverse().cycle_type(), p.cycle_type());
        prop_assert!(p.compose(&p.inverse()).is_identity());
    }

    #[test]
    fn conjugation_preserves_cycle_type((s1, s2) in permutation_pair(9)) {
        let conj = s1.compose(&s2).compose(&s1.inverse());
        prop_assert_eq!(conj.cycle_type(), s2.cycle_type());
    }

    #[test]
    fn lex_index_round_trips(p in permutation(8)) {
        prop_assert_eq!(Permutation::from_lex_index(p.len(), p.lex_index()), p);
    }

    #[test]
    fn cycle_index_matches_enumeration(n in 1usize..=6, a in prop::collection::vec(-3i64..=3, 6)) {
        let a: Vec<Ratio<i64>> = a[..n].iter().map(|&x| Ratio::from_integer(x)).collect();
        let sum = enumerate(n).unwrap().iter().fold(Ratio::from_integer(0), |acc, p| acc + cycle_monomial(&p.cycle_type(), &a));
        let expected = sum / Ratio::from_integer(factorial(n) as i64);
        prop_assert_eq!(cycle_index(n, &a).unwrap(), expected);
    }

    #[test]
    fn subgroup_is_closed(blocks in prop::collection::vec(0usize..=3, 1..=4)) {
        prop_assume!((1..=7).contains(&blocks.iter().sum::<usize>()));
        let members = subgroup_members(&blocks).unwrap();
        let order: usize = blocks.iter().map(|&b| factorial(b) as usize).product();
        prop_assert_eq!(members.len(), order);
        for a in &members {
            prop_assert!(members.contains(&a.inverse()));
            for b in &members {
                prop_assert!(members.contains(&a.compose(b)));
            }
        }
    }

    #[test]
    fn permanent_symmetries((a, rows, cols) in matrix_and_perm(7)) {
        let n = a.dim();
        let p = permanent(&a).unwrap();
        let scale = p.norm();
        let shuffled = CMatrix64::from_fn(n, |i, j| a[(rows[i], cols[j])]);
        prop_assert!(close(permanent(&shuffled).unwrap(), p, scale));
        let row_only = CMatrix64::from_fn(n, |i, j| a[(rows[i], j)]);
        prop_assert!(close(permanent(&row_only).unwrap(), p, scale));
        prop_assert!(close(permanent(&a.transpose()).unwrap(), p, scale));
    }

    #[test]
    fn permanent_is_multilinear_in_columns(
        (a, b) in (1usize..=6).prop_flat_map(|n| (complex_matrix(n), complex_matrix(n))),
        c in 0usize..6,
    ) {
        let n = a.dim();
        let c = c % n;
        let with = |col: &dyn Fn(usize) -> C64| CMatrix64::from_fn(n, |i, j| if j == c { col(i) } else { a[(i, j)] });
        let sum = permanent(&with(&|i| a[(i, c)] + b[(i, c)])).unwrap();
        let parts = permanent(&a).unwrap() + permanent(&with(&|i| b[(i, c)])).unwrap();
        prop_assert!(close(sum, parts, parts.norm()));
    }

    #[test]
    fn ryser_laplace_naive_agree(a in (1usize..=8).prop_flat_map(complex_matrix), k in 1usize..4) {
        let n = a.dim();
        let reference = permanent_naive(&a).unwrap();
        let scale = reference.norm();
        prop_assert!(close(permanent_ryser(&a).unwrap(), reference, scale));
        if n >= 2 {
            let k = 1 + k % (n - 1);
            prop_assert!(close(permanent_laplace(&a, k).unwrap(), reference, scale));
        }
    }
}

#[test]
fn exact_rational_permanent() {
    // per [[1/2, 1/3], [1/4, 1/5]] = 1/10 + 1/12 = 11/60.
    let r = |a, b| Ratio::<i64>::new(a, b);
    let m = Matrix::from_rows(vec![vec![r(1, 2), r(1, 3)], vec![r(1, 4), r(1, 5)]]).unwrap();
    assert_eq!(permanent_ryser(&m).unwrap(), r(11, 60));
    assert_eq!(permanent_naive(&m).unwrap(), r(11, 60));
}
