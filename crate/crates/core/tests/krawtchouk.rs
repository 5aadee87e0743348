use num_complex::Complex64;
use zqwalk::krawtchouk::*;
use zqwalk::scalar::Real;
use zqwalk::zq_core::{multinomial_coeff, stationary_pmf, CountVector, MultiIndex};

fn cases() -> Vec<(usize, usize)> {
    let mut v = Vec::new();
    for q in 2..=4 {
        for d in 2..=6 {
            v.push((q, d));
        }
    }
    v
}

#[test]
fn orthogonality() {
    for (q, d) in cases() {
        let t = mvk_build::<f64>(q, d).unwrap();
        let pmf: Vec<f64> = t.states().states().iter().map(|m| stationary_pmf(m, q).unwrap()).collect();
        let n = t.indices().len();
        for a in 0..n {
            for b in 0..n {
                let s: Complex64 = (0..pmf.len()).map(|mi| t.at(a, mi) * t.at(b, mi).conj() * pmf[mi]).sum();
                let want = if a == b { f64::of_big_uint(t.h_inv(a)) } else { 0.0 };
                assert!((s - want).norm() < 1e-9, "q={q} d={d}");
            }
        }
    }
}

#[test]
fn duality() {
    for (q, d) in cases() {
        let t = mvk_build::<f64>(q, d).unwrap();
        for (li, l) in t.indices().indices().iter().enumerate() {
            let lp = l.plus();
            for (mi, m) in t.states().states().iter().enumerate() {
                let lhs = t.at(li, mi) * f64::of_big_uint(&multinomial_coeff(m));
                let rhs = t.value(&m.minus(), &lp).unwrap() * f64::of_big_uint(&multinomial_coeff(&lp));
                assert!((lhs - rhs).norm() < 1e-9 * lhs.norm().max(1.0), "q={q} d={d}");
            }
        }
    }
}

#[test]
fn origin_values_are_inverse_norms() {
    for (q, d) in cases() {
        let t = mvk_build::<f64>(q, d).unwrap();
        let m0 = CountVector::origin(d, q).unwrap();
        for (li, l) in t.indices().indices().iter().enumerate() {
            let v = t.value(l, &m0).unwrap();
            assert_eq!(v, Complex64::new(f64::of_big_uint(t.h_inv(li)), 0.0));
        }
    }
}

#[test]
fn binary_case_is_univariate_krawtchouk() {
    for d in 1..=8 {
        let t = mvk_build::<f64>(2, d).unwrap();
        for l in 0..=d {
            for m1 in 0..=d {
                let m = CountVector::new(vec![d - m1, m1], d).unwrap();
                let li = MultiIndex::new(vec![l], d).unwrap();
                let k: f64 = univariate_k(l, m1, d, 2).unwrap();
                assert!((t.value(&li, &m).unwrap() - k).norm() < 1e-10);
            }
        }
    }
}

#[test]
fn reproducing_kernels_are_basis_free() {
    let q = 4;
    let d = 4;
    let a = mvk_build::<f64>(q, d).unwrap();
    for basis in [vec![2, 3, 1], vec![3, 1, 2], vec![3, 2, 1]] {
        let b = mvk_build_with_basis::<f64>(q, d, &basis).unwrap();
        for n in a.states().states() {
            for m in a.states().states() {
                for level in 0..=d {
                    let x = rk_poly(&a, level, n, m).unwrap();
                    let y = rk_poly(&b, level, n, m).unwrap();
                    assert!((x - y).abs() < 1e-9);
                }
            }
        }
    }
}

#[test]
fn reproducing_kernel_matches_overlap_formula() {
    for d in 1..=5 {
        let t = mvk_build::<f64>(3, d).unwrap();
        for n in t.states().states() {
            for m in t.states().states() {
                for level in 0..=d {
                    let x = rk_poly(&t, level, n, m).unwrap();
                    let y: f64 = rk_overlap(level, n, m).unwrap();
                    assert!((x - y).abs() < 1e-8 * x.abs().max(1.0), "d={d} L={level}");
                }
            }
        }
    }
}

#[test]
fn conditional_reduction_matches_conditional_expectation() {
    let (q, d) = (3, 4);
    let t = mvk_build::<f64>(q, d).unwrap();
    for (li, l) in t.indices().indices().iter().enumerate() {
        for m0 in 0..=d {
            // Given M[0] = m0 the rest is multinomial(d - m0, uniform over q - 1).
            let mut num = Complex64::new(0.0, 0.0);
            let mut den = 0.0;
            for (mi, m) in t.states().states().iter().enumerate() {
                if m[0] == m0 {
                    let p = stationary_pmf::<f64>(m, q).unwrap();
                    num += t.at(li, mi) * p;
                    den += p;
                }
            }
            let want = num / den;
            let got: f64 = conditional_reduction(l, m0, d, q).unwrap();
            assert!((want - got).norm() < 1e-9);
        }
    }
}

#[test]
fn hypergroup_coefficients() {
    for &(q, dmax) in &[(2, 4), (3, 3)] {
        for d in 1..=dmax {
            let t = mvk_build::<f64>(q, d).unwrap();
            let states = t.states().states();
            for m in states {
                for n in states {
                    let mut total = 0.0;
                    for g in states {
                        let c = hypergroup_coeff(&t, m, n, g).unwrap();
                        assert!(c >= -1e-9);
                        total += c;
                    }
                    assert!((total - 1.0).abs() < 1e-8);
                }
            }
        }
    }
}
