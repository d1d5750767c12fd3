//! Suppression scans, group factorization, the three-photon witness and the
//! boson-sampling purity law.

use indist::bosonsampling::{
    gk_closed, gk_exact, gk_quadrature, j_entry, jmatrix as bs_jmatrix, jmatrix_exact, purity_closed, purity_curve, purity_direct,
    small_gamma_expansion_check, BSParams,
};
use indist::jmatrix::{build_pure, OutputContext};
use indist::network::{enumerate_outputs, NetworkMatrix};
use indist::probability::Engine;
use indist::spectral::{DetectorModel, GaussianState, PureState};
use indist::symgroup::{cycle_index, enumerate, CycleType};
use indist::zeroprob::{
    prob_group_factorized, suppression_scan, three_photon_incompatibility, Group, GroupSpec, Verdict,
};
use indist::{CMatrix64, C64};
use num_rational::Ratio;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn gaussian(omega: f64, t: f64) -> PureState<f64> {
    PureState::Gaussian(GaussianState::new(omega, 1.0, t, 0).unwrap())
}

/// Groups of photons in the residue classes of the modes modulo `stride`.
fn periodic_groups(modes: usize, stride: usize) -> GroupSpec<f64> {
    let groups = (0..stride)
        .map(|q| Group { state: gaussian(0.0, 1.5 * q as f64), modes: (q..modes).step_by(stride).collect() })
        .collect();
    GroupSpec::new(modes, groups).unwrap()
}

#[test]
fn fourier_scans_keep_flagged_outputs_dark() {
    let cases = [(3, 1), (4, 1), (4, 2), (6, 2), (6, 3)];
    for (modes, stride) in cases {
        let u = NetworkMatrix::fourier(modes).unwrap();
        let spec = periodic_groups(modes, stride);
        let records = suppression_scan(&u, &spec).unwrap();
        let flagged: Vec<_> = records.iter().filter(|r| r.verdict == Verdict::SuppressedByCancellation).collect();
        assert!(!flagged.is_empty(), "Fourier-{modes} stride {stride} flagged nothing");
        for r in &records {
            assert_eq!(r.violation(), None, "Fourier-{modes} stride {stride} at {}", r.output);
        }
        for r in flagged {
            assert!(r.settings.iter().all(|s| s.p < 1e-12));
        }
    }
}

#[test]
fn identity_network_flags_nothing() {
    let u = NetworkMatrix::identity(3);
    let records = suppression_scan(&u, &periodic_groups(3, 1)).unwrap();
    assert!(records.iter().all(|r| r.verdict != Verdict::SuppressedByCancellation));
}

#[test]
fn orthogonal_groups_give_block_structure() {
    // Polarization makes the two group states exactly orthogonal.
    let h = PureState::Gaussian(GaussianState::new(0.0, 1.0, 0.0, 0).unwrap());
    let v = PureState::Gaussian(GaussianState::new(0.0, 1.0, 0.0, 1).unwrap());
    for labels in [vec![0, 1], vec![0, 0, 1], vec![0, 1, 1, 0], vec![1, 0, 1, 1]] {
        let n = labels.len();
        let states: Vec<_> = labels.iter().map(|&q| if q == 0 { h.clone() } else { v.clone() }).collect();
        let j = build_pure(&states, &vec![DetectorModel::Ideal; n], OutputContext::Any).unwrap();
        let perms = enumerate(n).unwrap();
        for (a, s1) in perms.iter().enumerate() {
            for (b, s2) in perms.iter().enumerate() {
                let same = (0..n).all(|alpha| labels[s1.apply(alpha)] == labels[s2.apply(alpha)]);
                let expected = C64::new(f64::from(u8::from(same)), 0.0);
                assert!((j.entry_at(a, b) - expected).norm() < 1e-12);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn group_factorization_matches_jmatrix(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let modes = rng.gen_range(2..=4);
        let q = rng.gen_range(1..=modes.min(3));
        let mut owner: Vec<usize> = (0..modes).map(|k| if k < q { k } else { rng.gen_range(0..q) }).collect();
        owner.rotate_left(rng.gen_range(0..modes));
        let groups = (0..q)
            .map(|g| Group {
                state: gaussian(rng.gen_range(-0.5..0.5), rng.gen_range(-1.0..1.0)),
                modes: (0..modes).filter(|&k| owner[k] == g).collect(),
            })
            .collect();
        let spec = GroupSpec::new(modes, groups).unwrap();
        let u = NetworkMatrix::random_unitary(modes, rng.gen()).unwrap();
        let e = spec.experiment(&u).unwrap();
        for m in enumerate_outputs(modes, spec.photons()).unwrap() {
            let (factorized, _) = prob_group_factorized(&spec, &u, &m).unwrap();
            let direct = e.probability(Engine::JMatrix, &m).unwrap().p;
            prop_assert!((factorized.p - direct).abs() < 1e-10);
        }
    }

    #[test]
    fn gk_closed_is_submultiplicative(gamma in 0.0f64..0.99, k in 1usize..20, m in 1usize..20) {
        let lhs = gk_closed(gamma, k + m).unwrap();
        prop_assert!(lhs <= gk_closed(gamma, k).unwrap() * gk_closed(gamma, m).unwrap() + 1e-15);
    }

    #[test]
    fn exact_model_j_is_psd(n in 1usize..=5, gamma in 0.0f64..0.95) {
        let p = BSParams::from_gamma(n, gamma).unwrap();
        let j = jmatrix_exact(&p).unwrap();
        prop_assert_eq!(j.to_matrix().unwrap().hermiticity_deviation(), 0.0);
        prop_assert!(j.min_eigenvalue().unwrap() >= -1e-9);
        let closed = bs_jmatrix(&p).unwrap();
        prop_assert_eq!(closed.to_matrix().unwrap().hermiticity_deviation(), 0.0);
    }
}

#[test]
fn three_photon_equations_are_incompatible() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (c1, c2) = (C64::new(0.6, 0.2), C64::new(-0.3, 0.7));
    let mut tested = 0;
    while tested < 100 {
        let u = NetworkMatrix::<f64>::random_unitary(3, rng.gen()).unwrap();
        if u.matrix().as_slice().iter().any(|z| z.norm() <= 1e-3) {
            continue;
        }
        let r = three_photon_incompatibility(u.matrix(), c1, c2).unwrap();
        assert!(!r.trivial_zero_branch);
        assert!(r.combined > 1e-6, "combined residual {}", r.combined);
        assert!(r.witness_error() < 1e-12);
        assert_eq!((r.pair_relations_value, r.triple_relations_value), (-1.0, 1.0));
        tested += 1;
    }
}

#[test]
fn three_photon_zero_entry_branch() {
    let mut u = CMatrix64::identity(3);
    u[(0, 1)] = C64::new(0.0, 0.0);
    let r = three_photon_incompatibility(&u, C64::new(1.0, 0.0), C64::new(1.0, 0.0)).unwrap();
    assert!(r.trivial_zero_branch);
    assert!(three_photon_incompatibility(&u, C64::new(0.0, 0.0), C64::new(1.0, 0.0)).is_err());
}

#[test]
fn purity_law_closed_equals_direct() {
    for n in 2..=10 {
        for g in 1..=9 {
            let p = BSParams::from_gamma(n, g as f64 / 10.0).unwrap();
            let closed = purity_closed(&p);
            let direct = purity_direct(&p).unwrap();
            assert!((closed.trace_sq - direct.trace_sq).abs() < 1e-10);
            assert!((closed.purity.unwrap() - direct.purity.unwrap()).abs() < 1e-10);
        }
    }
}

#[test]
fn q_pochhammer_identity_is_exact_in_rationals() {
    for (num, den) in [(1i128, 2i128), (1, 3), (2, 5)] {
        let g = Ratio::new(num, den);
        let one = Ratio::from_integer(1);
        for n in 1..=6usize {
            let a: Vec<_> = (1..=n).map(|k| one / (one - pow(g, k))).collect();
            let lhs = pow(one - g, n) * cycle_index(n, &a).unwrap();
            let rhs = (1..=n).fold(pow(one - g, n), |acc, k| acc / (one - pow(g, k)));
            assert_eq!(lhs, rhs, "gamma={g} N={n}");
        }
    }
}

fn pow(x: Ratio<i128>, k: usize) -> Ratio<i128> {
    (0..k).fold(Ratio::from_integer(1), |acc, _| acc * x)
}

#[test]
fn gk_quadrature_matches_exact_trace() {
    for gamma in [0.1f64, 0.5, 0.9] {
        for k in 1..=5 {
            let q = gk_quadrature(gamma, k).unwrap();
            assert!(q.converged, "gamma={gamma} k={k} did not converge");
            assert!((q.value - gk_exact(gamma, k).unwrap()).abs() < 1e-8, "gamma={gamma} k={k}");
            if k <= 2 {
                assert!((q.value - gk_closed(gamma, k).unwrap()).abs() < 1e-8, "gamma={gamma} k={k}");
            }
        }
    }
}

#[test]
fn closed_form_j_has_negative_eigenvalues() {
    // The closed-form g_k is not Tr ρ^k for k >= 3, and the J it induces is
    // not a Gram matrix. Minimum eigenvalues near γ = 0.28.
    for (n, floor) in [(3, -0.0146), (4, -0.0225), (5, -0.0515)] {
        let j = bs_jmatrix(&BSParams::from_gamma(n, 0.28f64).unwrap()).unwrap();
        let lambda = j.min_eigenvalue().unwrap();
        assert!(lambda < 0.9 * floor && lambda > 1.1 * floor, "N={n}: {lambda}");
    }
    let j = bs_jmatrix(&BSParams::from_gamma(2, 0.28f64).unwrap()).unwrap();
    assert!(j.min_eigenvalue().unwrap() >= -1e-12);
}

#[test]
fn purity_curve_decreases_in_gamma_and_n() {
    let ns = [2, 4, 10, 20, 30];
    let gammas: Vec<f64> = (0..20).map(|i| 0.05 * i as f64).collect();
    let rows = purity_curve(&ns, &gammas).unwrap();
    assert_eq!(rows.len(), ns.len() * gammas.len());
    let at = |gi: usize, ni: usize| rows[gi * ns.len() + ni].purity.unwrap();
    for ni in 0..ns.len() {
        assert_eq!(at(0, ni), 1.0);
        for gi in 1..gammas.len() {
            assert!(at(gi, ni) < at(gi - 1, ni));
        }
    }
    for gi in 1..gammas.len() {
        for ni in 1..ns.len() {
            assert!(at(gi, ni) < at(gi, ni - 1));
        }
    }
}

#[test]
fn small_gamma_expansion() {
    for n in [2, 5, 10, 30] {
        let r = small_gamma_expansion_check(&BSParams::from_eta(n, 1e-2f64).unwrap()).unwrap();
        assert!(r.deviation < 10.0 * 1e-8 * (n * n) as f64, "N={n}: {r:?}");
    }
    assert!(small_gamma_expansion_check(&BSParams::from_eta(3, 0.5f64).unwrap()).is_err());
}

#[test]
fn cycle_values_follow_gk() {
    let p = BSParams::from_gamma(5, 0.4f64).unwrap();
    let j = bs_jmatrix(&p).unwrap();
    for ct in CycleType::all(5) {
        let expected: f64 = ct.counts().iter().enumerate().map(|(i, &c)| gk_closed(0.4f64, i + 1).unwrap().powi(c as i32)).product();
        assert!((j_entry(&p, &ct).unwrap() - expected).abs() < 1e-15);
        assert!((j.cycle_values().unwrap()[&ct].re - expected).abs() < 1e-15);
    }
}
