//! Named increment laws on Z_q^d.

use crate::circulant::{lazy_law, mixture_law, shift_law, symmetric_law, IncrementLaw1D};
use crate::error::{Error, Result};
use crate::grouped::HammingModel;
use crate::product::IncrementDist;
use crate::scalar::Real;
use crate::zq_core::{check_modulus, enumerate_count_vectors, multinomial_of};
use num_bigint::BigInt;
use num_rational::BigRational;

fn check_d(d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::Parameter("d must be at least 1".into()));
    }
    Ok(())
}

/// Every coordinate moves by +1.
pub fn shift<T: Real>(q: usize, d: usize) -> Result<IncrementDist<T>> {
    check_d(d)?;
    IncrementDist::iid(shift_law(q, 1)?, d)
}

/// Each coordinate independently moves by +1 with probability γ.
pub fn lazy<T: Real>(q: usize, d: usize, gamma: T) -> Result<IncrementDist<T>> {
    check_d(d)?;
    IncrementDist::iid(lazy_law(q, gamma)?, d)
}

/// Uniform increment; mixes in one step.
pub fn uniform<T: Real>(q: usize, d: usize) -> Result<IncrementDist<T>> {
    check_d(d)?;
    IncrementDist::iid(IncrementLaw1D::uniform(q)?, d)
}

/// Independent coordinates with the (β, γ) mixture law.
pub fn mixture<T: Real>(q: usize, d: usize, beta: T, gamma: T) -> Result<IncrementDist<T>> {
    check_d(d)?;
    IncrementDist::iid(mixture_law(q, beta, gamma)?, d)
}

/// Independent coordinates with a symmetric law given by v_0..v_{q/2}.
pub fn symmetric<T: Real>(q: usize, d: usize, half: &[T]) -> Result<IncrementDist<T>> {
    check_d(d)?;
    IncrementDist::iid(symmetric_law(q, half)?, d)
}

fn one_coordinate<T: Real>(q: usize, d: usize, moves: &[(usize, T)]) -> Result<IncrementDist<T>> {
    check_modulus(q)?;
    check_d(d)?;
    let mut law: Vec<(Vec<usize>, T)> = Vec::new();
    for &(v, p) in moves {
        let mut c = vec![0; q];
        c[0] = d - 1;
        c[v % q] += 1;
        match law.iter_mut().find(|(x, _)| *x == c) {
            Some(slot) => slot.1 += p,
            None => law.push((c, p)),
        }
    }
    IncrementDist::exchangeable(q, d, law)
}

/// One uniformly chosen coordinate moves by -1.
pub fn left_shift<T: Real>(q: usize, d: usize) -> Result<IncrementDist<T>> {
    check_modulus(q)?;
    one_coordinate(q, d, &[(q - 1, T::one())])
}

/// One uniformly chosen coordinate moves to a left or right neighbour.
pub fn neighbor<T: Real>(q: usize, d: usize) -> Result<IncrementDist<T>> {
    let half = T::of(0.5);
    one_coordinate(q, d, &[(1, half), (q - 1, half)])
}

/// One uniformly chosen coordinate moves to a uniformly chosen other value.
pub fn mizukawa_main<T: Real>(q: usize, d: usize) -> Result<IncrementDist<T>> {
    check_modulus(q)?;
    let p = T::one() / T::of_usize(q - 1);
    let moves: Vec<(usize, T)> = (1..q).map(|v| (v, p)).collect();
    one_coordinate(q, d, &moves)
}

/// A uniformly chosen set of A coordinates is changed to uniform nonzero
/// offsets. For q = 2 this toggles the chosen bits.
pub fn subset_toggle<T: Real>(q: usize, d: usize, a: usize) -> Result<IncrementDist<T>> {
    check_modulus(q)?;
    check_d(d)?;
    if a > d {
        return Err(Error::Parameter(format!("A = {a} exceeds d = {d}")));
    }
    let mut law = Vec::new();
    for c in enumerate_count_vectors(d, q)? {
        if c[0] != d - a {
            continue;
        }
        let w = BigRational::new(
            multinomial_of(&c.counts()[1..]).into(),
            num_traits::pow(BigInt::from(q - 1), a),
        );
        law.push((c.counts().to_vec(), T::of_rational(&w)));
    }
    IncrementDist::exchangeable(q, d, law)
}

/// Increment of a Hamming model with change probabilities q_h.
pub fn hamming<T: Real>(q: usize, qh: Vec<T>) -> Result<IncrementDist<T>> {
    HammingModel::new(qh)?.to_increment(q)
}
