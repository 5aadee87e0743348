use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use zqwalk::torus::*;

#[test]
fn uniform_steps_are_uniform() {
    let law = TorusLaw::uniform();
    let n = 100_000;
    let mut b = torus_paths(0.37, &law, 1, n, 9).unwrap();
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let ks = b
        .iter()
        .enumerate()
        .map(|(i, &x)| ((i + 1) as f64 / n as f64 - x).abs().max((x - i as f64 / n as f64).abs()))
        .fold(0.0, f64::max);
    // Kolmogorov critical value at level 0.001 is about 1.95/√n.
    assert!(ks < 1.95 / (n as f64).sqrt(), "D = {ks}");
}

#[test]
fn third_of_a_turn_returns_every_three_steps() {
    let law = TorusLaw::point(1.0 / 3.0).unwrap();
    for t in [3, 6, 9] {
        for b in torus_paths(0.25, &law, t, 4, 1).unwrap() {
            let off = (b - 0.25).rem_euclid(1.0);
            assert!(off < 1e-12 || 1.0 - off < 1e-12);
        }
    }
    for b in torus_paths(0.25, &law, 4, 4, 1).unwrap() {
        assert!((b - (0.25 + 1.0 / 3.0)).abs() < 1e-12);
    }
}

#[test]
fn densities_integrate_to_one() {
    let law = TorusLaw::von_mises(2.0).unwrap();
    let n = 1 << 12;
    for t in [1, 3] {
        // trapezoid on a periodic grid is the grid mean
        let over_b: f64 = (0..n).map(|j| density_series(&law, t, 0.3, j as f64 / n as f64, 1e-10).unwrap()).sum::<f64>()
            / n as f64;
        assert!((over_b - 1.0).abs() < 1e-6);
        let over_a: f64 = (0..n).map(|j| density_series(&law, t, j as f64 / n as f64, 0.8, 1e-10).unwrap()).sum::<f64>()
            / n as f64;
        assert!((over_a - 1.0).abs() < 1e-6);
    }
}

#[test]
fn von_mises_relaxes_to_uniform() {
    let law = TorusLaw::von_mises(2.0).unwrap();
    let early = density_grid(&law, 1, 0.0, 256, 1e-10).unwrap();
    let late = density_grid(&law, 40, 0.0, 256, 1e-10).unwrap();
    let dev = |g: &[(f64, f64)]| g.iter().map(|(_, f)| (f - 1.0).abs()).fold(0.0, f64::max);
    assert!(dev(&late) < 1e-3);
    assert!(dev(&early) > dev(&late));
}

#[test]
fn sampled_von_mises_matches_cdf() {
    let k = 2.0;
    let law = TorusLaw::von_mises(k).unwrap();
    let n = 100_000;
    let draws = torus_paths(0.0, &law, 1, n, 4).unwrap();
    // compare bin frequencies with integrated density
    let bins = 20;
    let mut counts = vec![0usize; bins];
    for x in draws {
        counts[((x * bins as f64) as usize).min(bins - 1)] += 1;
    }
    for (i, &c) in counts.iter().enumerate() {
        let m = 200;
        let p: f64 = (0..m)
            .map(|j| von_mises_density(k, (i as f64 + (j as f64 + 0.5) / m as f64) / bins as f64).unwrap())
            .sum::<f64>()
            / (m * bins) as f64;
        let f = c as f64 / n as f64;
        let z = (f - p).abs() / (p * (1.0 - p) / n as f64).sqrt();
        assert!(z < 5.0, "bin {i}: z = {z}");
    }
}

#[test]
fn two_step_return_from_tail_mass() {
    let eps = 0.05;
    // 𝔙 uniform on [0, ε) ∪ (1 - ε, 1)
    let law = TorusLaw::new(
        move |r| {
            if r == 0 {
                return Complex64::new(1.0, 0.0);
            }
            let w = 2.0 * PI * r as f64;
            Complex64::new((w * eps).sin() / (w * eps), 0.0)
        },
        None,
    )
    .unwrap()
    .with_sampler(move |rng| {
        let u: f64 = rng.random::<f64>() * 2.0 * eps;
        if u < eps { u } else { 1.0 - (u - eps) }
    });
    let freq = two_step_return_frequency(0.5, &law, eps, 1_000_000, 17).unwrap();
    assert!(freq * 1e6 >= 10.0);
}

/// ∫_0^1 (e^{iϑv} - 1) v^{-γ} (1-v)^{γ-1} dv by tanh-sinh quadrature.
fn subordinator_exponent(gamma: f64, vartheta: f64, h: f64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    let n = (6.0 / h) as i64;
    for k in -n..=n {
        let t = k as f64 * h;
        let s = PI / 2.0 * t.sinh();
        // v and 1 - v without cancellation
        let v = 1.0 / (1.0 + (-2.0 * s).exp());
        let w = 1.0 / (1.0 + (2.0 * s).exp());
        if v == 0.0 || w == 0.0 {
            continue;
        }
        let dv = PI / 2.0 * t.cosh() / (2.0 * s.cosh().powi(2));
        let f = (Complex64::new(0.0, vartheta * v).exp() - 1.0) * v.powf(-gamma) * w.powf(gamma - 1.0);
        acc += f * dv * h;
    }
    acc
}

#[test]
fn beta_subordinator_matches_quadrature() {
    for &(gamma, r, tau) in &[(0.5, 1, 1.0), (0.3, 2, 0.7), (0.8, 1, 2.0)] {
        let vartheta = 2.0 * PI * r as f64;
        let coarse = subordinator_exponent(gamma, vartheta, 1.0 / 32.0);
        let fine = subordinator_exponent(gamma, vartheta, 1.0 / 64.0);
        assert!((coarse - fine).norm() < 1e-10);
        // Γ(2-γ)Γ(γ) = (1-γ)π / sin(πγ)
        let norm = (1.0 - gamma) * PI / (PI * gamma).sin();
        let want = (fine / norm * tau).exp();
        let got = beta_subordinator_eigenvalue(gamma, tau, r).unwrap();
        assert!((got - want).norm() < 1e-8, "{got} vs {want}");
    }
}
