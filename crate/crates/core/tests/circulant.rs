mod common;

use num_complex::Complex64;
use proptest::prelude::*;
use zqwalk::circulant::*;
use zqwalk::zq_core::CyclicElement;

fn law_strategy() -> impl Strategy<Value = IncrementLaw1D<f64>> {
    (2usize..=32)
        .prop_flat_map(|q| prop::collection::vec(0.0f64..1.0, q))
        .prop_filter("nonzero mass", |w| w.iter().sum::<f64>() > 1e-3)
        .prop_map(|w| {
            let s: f64 = w.iter().sum();
            IncrementLaw1D::new(w.into_iter().map(|x| x / s).collect()).unwrap()
        })
}

fn symmetric_strategy() -> impl Strategy<Value = IncrementLaw1D<f64>> {
    prop::sample::select(vec![3usize, 5, 7, 11, 13])
        .prop_flat_map(|q| prop::collection::vec(0.0f64..1.0, q / 2 + 1).prop_map(move |h| (q, h)))
        .prop_filter("nonzero mass", |(_, h)| h.iter().sum::<f64>() > 1e-3)
        .prop_map(|(q, h)| {
            let mut v = vec![0.0; q];
            for (j, &x) in h.iter().enumerate() {
                v[j] = x;
                v[(q - j) % q] = x;
            }
            let s: f64 = v.iter().sum();
            IncrementLaw1D::new(v.into_iter().map(|x| x / s).collect()).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn spectral_entries_match_direct_matrix(v in law_strategy()) {
        let q = v.q();
        let p = build_circulant(&v);
        let eta = eigenvalues_1d(&v);
        for a in 0..q {
            for b in 0..q {
                let s = spectral_transition_1d(&eta, CyclicElement::new(a, q).unwrap(), CyclicElement::new(b, q).unwrap()).unwrap();
                prop_assert!((s - p[[a, b]]).abs() < 1e-12);
            }
        }
        // uniform stationarity: e P = e
        for b in 0..q {
            let col: f64 = (0..q).map(|a| p[[a, b]]).sum();
            prop_assert!((col - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn recovery_round_trip(v in law_strategy()) {
        let back = recover_increment(&eigenvalues_1d(&v)).unwrap();
        for (a, b) in v.probs().iter().zip(back.probs()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetrize_squares_moduli(v in law_strategy()) {
        let eta = eigenvalues_1d(&v);
        let eta2 = eigenvalues_1d(&symmetrize(&v));
        for r in 0..v.q() {
            prop_assert!((eta2.get(r) - Complex64::new(eta.get(r).norm_sqr(), 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn symmetric_laws_are_real(v in symmetric_strategy()) {
        let q = v.q();
        let eta = eigenvalues_1d(&v);
        for r in 0..q {
            prop_assert!(eta.get(r).im.abs() < 1e-12);
        }
        let p = build_circulant(&v);
        for a in 0..q {
            for b in 0..q {
                prop_assert!((p[[a, b]] - p[[b, a]]).abs() < 1e-15);
            }
        }
        if is_ergodic_sufficient(&v).unwrap() {
            prop_assert!(is_ergodic_direct(&v));
        }
    }

    #[test]
    fn gcd_test_agrees_with_matrix_powers(
        q in 2usize..=12,
        support in prop::collection::btree_set(0usize..12, 1..4),
    ) {
        let support: Vec<usize> = support.into_iter().filter(|&s| s < q).collect();
        prop_assume!(!support.is_empty());
        let mut v = vec![0.0; q];
        for &s in &support {
            v[s] = 1.0 / support.len() as f64;
        }
        let law = IncrementLaw1D::new(v).unwrap();
        prop_assert_eq!(is_ergodic_direct(&law), is_ergodic_matrix_power(&law));
    }
}

#[test]
fn spectral_powers_match_matrix_powers() {
    let mut rng = common::rng(3);
    for _ in 0..20 {
        let v = common::random_law1d(&mut rng, 7);
        let p = build_circulant(&v);
        let p4 = p.dot(&p).dot(&p).dot(&p);
        let s4 = spectral_matrix_1d(&eigenvalues_1d(&v).powi(4)).unwrap();
        for (a, b) in p4.iter().zip(s4.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
