mod common;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use zqwalk::asymptotics::*;
use zqwalk::series::SeriesBasis;

#[test]
fn hermite_quadrature_orthogonality() {
    let nodes = common::gauss_hermite(64);
    let total: f64 = nodes.iter().map(|(_, w)| w).sum();
    assert!((total - std::f64::consts::PI.sqrt()).abs() < 1e-12);
    for q in [2usize, 3, 5] {
        let scale = (2.0 / q as f64).sqrt();
        for j in 0..=6 {
            for k in 0..=6 {
                let e: f64 = nodes
                    .iter()
                    .map(|&(x, w)| w * hermite_chebycheff(j, scale * x, q) * hermite_chebycheff(k, scale * x, q))
                    .sum::<f64>()
                    / std::f64::consts::PI.sqrt();
                let want = if j == k {
                    (1..=k).map(|i| i as f64).product::<f64>() / (q as f64).powi(k as i32)
                } else {
                    0.0
                };
                assert!((e - want).abs() < 1e-10, "q={q} j={j} k={k}");
            }
        }
    }
}

#[test]
fn hermite_matches_generating_function() {
    let basis = SeriesBasis::new(1, 10).unwrap();
    for q in [2usize, 3, 7] {
        for &x in &[-1.1, 0.4, 2.0] {
            let mut p = vec![Complex64::new(0.0, 0.0); basis.len()];
            p[basis.rank(&[1]).unwrap()] = Complex64::new(x, 0.0);
            p[basis.rank(&[2]).unwrap()] = Complex64::new(-1.0 / (2.0 * q as f64), 0.0);
            let g = basis.exp(&p);
            for k in 0..=10 {
                let fact: f64 = (1..=k).map(|i| i as f64).product();
                let coef = g[basis.rank(&[k]).unwrap()].re * fact;
                let h = hermite_chebycheff(k, x, q);
                assert!((coef - h).abs() < 1e-10 * h.abs().max(1.0));
            }
        }
    }
}

#[test]
fn clt_forms_agree_for_q3() {
    let m = GaussianCoordinate::from_plus(&[0.41, -0.23]);
    for l in zqwalk::zq_core::enumerate_multi_indices(4, 3).unwrap() {
        let a = mvk_clt(&m, l.entries(), 3).unwrap();
        let b = mvk_clt_hermite(&m, l.entries(), 3).unwrap();
        let c = mvk_clt_unsimplified(&m, l.entries(), 3).unwrap();
        assert!((a - b).norm() < 1e-9 && (a - c).norm() < 1e-9);
    }
}

#[test]
fn sampled_coordinates_have_the_limit_covariance() {
    let q = 4;
    let n = 200_000;
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut s = vec![vec![0.0; q]; q];
    let mut s2 = vec![vec![0.0; q]; q];
    for _ in 0..n {
        let m = sample_clt_point(q, &mut rng);
        let v = m.values();
        assert!(v.iter().sum::<f64>().abs() < 1e-12);
        for a in 0..q {
            for b in 0..q {
                s[a][b] += v[a] * v[b];
                s2[a][b] += (v[a] * v[b]).powi(2);
            }
        }
    }
    for a in 0..q {
        for b in 0..q {
            let mean = s[a][b] / n as f64;
            let sd = ((s2[a][b] / n as f64 - mean * mean) / n as f64).sqrt();
            let want = (if a == b { 1.0 } else { 0.0 } - 1.0 / q as f64) / q as f64;
            assert!((mean - want).abs() < 4.0 * sd, "({a},{b}) {mean} vs {want}");
        }
    }
}

#[test]
fn monte_carlo_biorthogonality() {
    let dev = clt_orthogonality_check(3, 2, 1_000_000, 5).unwrap();
    assert!(dev < 5e-3, "deviation {dev}");
}

#[test]
fn finite_d_krawtchouk_approaches_limit() {
    let z = FractionVector::new(vec![0.2, 0.3]).unwrap();
    let errs: Vec<f64> = [16, 32, 64].iter().map(|&d| mvk_limit_error(d, &z, &[1, 1], 3).unwrap()).collect();
    for w in errs.windows(2) {
        let ratio = w[1] / w[0];
        assert!((0.3..=0.8).contains(&ratio), "{errs:?}");
    }
}

#[test]
fn finite_d_clt_scaling_approaches_limit() {
    let m = GaussianCoordinate::from_plus(&[0.3, -0.1]);
    let basis = SeriesBasis::new(2, 3).unwrap();
    // Degree one is linear in the point, so the scaling is exact there.
    let li = basis.rank(&[1, 0]).unwrap();
    let limit = mvk_clt(&m, &[1, 0], 3).unwrap();
    for d in [16, 32, 64] {
        assert!((clt_scaled_finite(d, &m, 3, 3).unwrap()[li] - limit).norm() < 1e-12);
    }
    for l in [[0usize, 2], [2, 0], [2, 1], [3, 0]] {
        let li = basis.rank(&l).unwrap();
        let limit = mvk_clt(&m, &l, 3).unwrap();
        let errs: Vec<f64> = [16, 32, 64, 128]
            .iter()
            .map(|&d| (clt_scaled_finite(d, &m, 3, 3).unwrap()[li] - limit).norm())
            .collect();
        for w in errs.windows(2) {
            assert!(w[1] < w[0], "{l:?}: {errs:?}");
        }
    }
}

#[test]
fn limit_density_integrates_to_one() {
    let q = 3;
    let m = GaussianCoordinate::from_plus(&[0.2, -0.35]);
    let v = FractionVector::new(vec![0.15, 0.1]).unwrap();
    let h = 0.05;
    let mut total = 0.0;
    let mut x = -3.0;
    while x <= 3.0 + 1e-9 {
        let mut y = -3.0;
        while y <= 3.0 + 1e-9 {
            let n = GaussianCoordinate::from_plus(&[x, y]);
            total += clt_transition_density(&m, &n, &v, q, 6).unwrap() * h * h;
            y += h;
        }
        x += h;
    }
    assert!((total - 1.0).abs() < 0.02, "integral {total}");
}

#[test]
fn limit_density_at_the_centre_is_real() {
    let q = 4;
    let zero = GaussianCoordinate::from_plus(&[0.0; 3]);
    let f = clt_transition_density(&zero, &zero, &FractionVector::zero(q), q, 8).unwrap();
    assert!(f.is_finite());
}
