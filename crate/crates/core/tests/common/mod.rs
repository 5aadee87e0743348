#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use zqwalk::circulant::IncrementLaw1D;
use zqwalk::product::IncrementDist;
use zqwalk::zq_core::enumerate_count_vectors;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Flat Dirichlet draw of length n.
pub fn dirichlet(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

/// Dirichlet draw with some entries forced to zero.
pub fn sparse_dirichlet(rng: &mut ChaCha8Rng, n: usize, keep: f64) -> Vec<f64> {
    loop {
        let mut w = dirichlet(rng, n);
        for x in w.iter_mut() {
            if rng.random::<f64>() > keep {
                *x = 0.0;
            }
        }
        let s: f64 = w.iter().sum();
        if s > 0.0 {
            return w.into_iter().map(|x| x / s).collect();
        }
    }
}

pub fn random_law1d(rng: &mut ChaCha8Rng, q: usize) -> IncrementLaw1D<f64> {
    IncrementLaw1D::new(dirichlet(rng, q)).unwrap()
}

/// Law over every point of Z_q^d with Dirichlet weights.
pub fn random_explicit(rng: &mut ChaCha8Rng, q: usize, d: usize) -> IncrementDist<f64> {
    let n = q.pow(d as u32);
    let w = sparse_dirichlet(rng, n, 0.6);
    let atoms = w
        .into_iter()
        .enumerate()
        .filter(|(_, p)| *p > 0.0)
        .map(|(i, p)| (point(i, q, d), p))
        .collect();
    IncrementDist::explicit(q, d, atoms).unwrap()
}

pub fn random_exchangeable(rng: &mut ChaCha8Rng, q: usize, d: usize) -> IncrementDist<f64> {
    let states = enumerate_count_vectors(d, q).unwrap();
    let w = sparse_dirichlet(rng, states.len(), 0.7);
    let law = states
        .iter()
        .zip(w)
        .filter(|(_, p)| *p > 0.0)
        .map(|(c, p)| (c.counts().to_vec(), p))
        .collect();
    IncrementDist::exchangeable(q, d, law).unwrap()
}

pub fn random_iid(rng: &mut ChaCha8Rng, q: usize, d: usize) -> IncrementDist<f64> {
    IncrementDist::iid_product((0..d).map(|_| random_law1d(rng, q)).collect()).unwrap()
}

/// One of the four increment variants, chosen by `kind`.
pub fn random_dist(rng: &mut ChaCha8Rng, q: usize, d: usize, kind: usize) -> IncrementDist<f64> {
    match kind % 4 {
        0 => random_explicit(rng, q, d),
        1 => random_iid(rng, q, d),
        2 => random_exchangeable(rng, q, d),
        _ => {
            let a = random_iid(rng, q, d);
            let b = random_exchangeable(rng, q, d);
            let w: f64 = rng.random_range(0.1..0.9);
            IncrementDist::mixture(vec![(w, a), (1.0 - w, b)]).unwrap()
        }
    }
}

/// Base-q digits with the first coordinate most significant.
pub fn point(mut i: usize, q: usize, d: usize) -> Vec<usize> {
    let mut x = vec![0; d];
    for k in (0..d).rev() {
        x[k] = i % q;
        i /= q;
    }
    x
}

/// Nodes and weights of n-point Gauss–Hermite quadrature for e^{-x²}.
pub fn gauss_hermite(n: usize) -> Vec<(f64, f64)> {
    let pim4 = std::f64::consts::PI.powf(-0.25);
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(n);
    let mut z = 0.0;
    for i in 0..n.div_ceil(2) {
        z = match i {
            0 => (2.0 * n as f64 + 1.0).sqrt() - 1.85575 * (2.0 * n as f64 + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * (n as f64).powf(0.426) / z,
            2 => 1.86 * z - 0.86 * out[0].0,
            3 => 1.91 * z - 0.91 * out[1].0,
            _ => 2.0 * z - out[i - 2].0,
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (pim4, 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = z * (2.0 / (j + 1) as f64).sqrt() * p2 - (j as f64 / (j + 1) as f64).sqrt() * p3;
            }
            pp = (2.0 * n as f64).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() < 1e-15 {
                break;
            }
        }
        out.push((z, 2.0 / (pp * pp)));
    }
    let mut all: Vec<(f64, f64)> = out.iter().map(|&(x, w)| (-x, w)).collect();
    for &(x, w) in out.iter().rev() {
        if x != 0.0 || n % 2 == 0 {
            all.push((x, w));
        }
    }
    all
}
