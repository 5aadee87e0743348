//! Brute-force and Monte Carlo references for the spectral formulas.
//!
//! Nothing here uses eigenvalues: one-step matrices come from direct lookup
//! of P(V = y - x mod q) and path samples from the increment sampler.

use std::collections::BTreeMap;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::product::{counts_of, guard_states, index_point, point_index, IncrementDist, StatePoint, MATRIX_LIMIT};
use crate::scalar::Real;
use crate::zq_core::CountVectorSpace;

/// z-score above which a comparison is reported as failing.
pub const Z_THRESHOLD: f64 = 5.0;

/// What is recorded at the end of each path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    /// The end state X_t.
    State,
    /// Count vector of X_t - x0.
    Counts,
    /// Hamming distance between X_t and x0, as a one-entry key.
    Hamming,
}

fn observe(x0: &[usize], x: &[usize], q: usize, what: Observable) -> Vec<usize> {
    match what {
        Observable::State => x.to_vec(),
        Observable::Counts => {
            let diff: Vec<usize> = x0.iter().zip(x).map(|(a, b)| (b + q - a) % q).collect();
            counts_of(&diff, q)
        }
        Observable::Hamming => vec![x0.iter().zip(x).filter(|(a, b)| a != b).count()],
    }
}

/// Outcome counts from simulated paths.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmpiricalDist {
    #[serde(with = "cells")]
    pub counts: BTreeMap<Vec<usize>, u64>,
    pub total: u64,
    pub seed: u64,
}

// JSON object keys must be strings, so cells are written as a list.
mod cells {
    use super::*;
    use serde::{Deserializer, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Cell {
        outcome: Vec<usize>,
        count: u64,
    }

    pub fn serialize<S: Serializer>(m: &BTreeMap<Vec<usize>, u64>, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<Cell> = m
            .iter()
            .map(|(k, &c)| Cell {
                outcome: k.clone(),
                count: c,
            })
            .collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<BTreeMap<Vec<usize>, u64>, D::Error> {
        let v = Vec::<Cell>::deserialize(d)?;
        Ok(v.into_iter().map(|c| (c.outcome, c.count)).collect())
    }
}

impl EmpiricalDist {
    pub fn frequency(&self, key: &[usize]) -> f64 {
        self.counts.get(key).copied().unwrap_or(0) as f64 / self.total.max(1) as f64
    }

    pub fn frequencies(&self) -> BTreeMap<Vec<usize>, f64> {
        self.counts
            .iter()
            .map(|(k, &c)| (k.clone(), c as f64 / self.total.max(1) as f64))
            .collect()
    }
}

/// Runs `n_paths` walks of t steps from x0. Path i uses a ChaCha8 generator
/// seeded with seed ^ i, so results do not depend on thread scheduling.
pub fn simulate_paths<T: Real>(
    incr: &IncrementDist<T>,
    x0: &StatePoint,
    t: usize,
    n_paths: usize,
    seed: u64,
    what: Observable,
) -> Result<EmpiricalDist> {
    if n_paths == 0 {
        return Err(Error::Parameter("need at least one path".into()));
    }
    if x0.q() != incr.q() || x0.d() != incr.d() {
        return Err(Error::Shape("start point and increment live on different spaces".into()));
    }
    let q = incr.q();
    let sampler = incr.sampler()?;
    let counts = (0..n_paths)
        .into_par_iter()
        .fold(BTreeMap::new, |mut acc: BTreeMap<Vec<usize>, u64>, i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ i as u64);
            let mut x = x0.entries().to_vec();
            for _ in 0..t {
                let z = sampler.sample(&mut rng);
                for (a, b) in x.iter_mut().zip(&z) {
                    *a = (*a + b) % q;
                }
            }
            *acc.entry(observe(x0.entries(), &x, q, what)).or_insert(0) += 1;
            acc
        })
        .reduce(BTreeMap::new, |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_insert(0) += v;
            }
            a
        });
    Ok(EmpiricalDist {
        counts,
        total: n_paths as u64,
        seed,
    })
}

/// One-step matrix P[x, y] = P(V = y - x mod q) by direct lookup.
pub fn one_step_reference<T: Real>(incr: &IncrementDist<T>) -> Result<Array2<T>> {
    let (q, d) = (incr.q(), incr.d());
    let n = guard_states(q, d, MATRIX_LIMIT, "reference matrix")?;
    let pmf: Vec<T> = (0..n).map(|i| incr.point_probability(&index_point(i, d, q))).collect();
    Ok(Array2::from_shape_fn((n, n), |(i, j)| {
        let x = index_point(i, d, q);
        let y = index_point(j, d, q);
        let diff: Vec<usize> = x.iter().zip(&y).map(|(a, b)| (b + q - a) % q).collect();
        pmf[point_index(&diff, q)]
    }))
}

/// Dense P^t by repeated squaring of the lookup matrix.
pub fn matrix_power_reference<T: Real>(incr: &IncrementDist<T>, t: u32) -> Result<Array2<T>> {
    let p = one_step_reference(incr)?;
    Ok(matrix_power(&p, t))
}

/// A^t for a square matrix.
pub fn matrix_power<T: Real>(a: &Array2<T>, mut t: u32) -> Array2<T> {
    let n = a.nrows();
    let mut acc = Array2::from_shape_fn((n, n), |(i, j)| if i == j { T::one() } else { T::zero() });
    let mut base = a.clone();
    while t > 0 {
        if t & 1 == 1 {
            acc = acc.dot(&base);
        }
        t >>= 1;
        if t > 0 {
            base = base.dot(&base);
        }
    }
    acc
}

/// Lumps a product-chain matrix onto count vectors: the (m, n) entry sums
/// row x_m over all y whose counts are n, where x_m is any point with
/// counts m. Rows and columns follow the lexicographic count order.
pub fn group_by_counts<T: Real>(p: &Array2<T>, q: usize, d: usize) -> Result<Array2<T>> {
    let space = CountVectorSpace::new(d, q)?;
    let n = space.len();
    let mut out = Array2::from_elem((n, n), T::zero());
    for (mi, m) in space.states().iter().enumerate() {
        let x: Vec<usize> = m
            .counts()
            .iter()
            .enumerate()
            .flat_map(|(j, &c)| std::iter::repeat_n(j, c))
            .collect();
        let row = point_index(&x, q);
        for col in 0..p.ncols() {
            let y = index_point(col, d, q);
            let ni = space.rank_of(&counts_of(&y, q))?;
            out[[mi, ni]] += p[[row, col]];
        }
    }
    Ok(out)
}

/// Law of the Hamming distance of X_t from x0 = 0 read off row 0 of P^t.
pub fn group_by_hamming<T: Real>(pt: &Array2<T>, q: usize, d: usize) -> Vec<T> {
    let mut out = vec![T::zero(); d + 1];
    for col in 0..pt.ncols() {
        let y = index_point(col, d, q);
        out[y.iter().filter(|&&v| v != 0).count()] += pt[[0, col]];
    }
    out
}

/// Expected outcome probabilities for paths from x0 read off P^t.
pub fn expected_table<T: Real>(pt: &Array2<T>, x0: &StatePoint, what: Observable) -> BTreeMap<Vec<usize>, f64> {
    let (q, d) = (x0.q(), x0.d());
    let row = x0.index();
    let mut out = BTreeMap::new();
    for col in 0..pt.ncols() {
        let p = pt[[row, col]].to_f64_lossy();
        if p == 0.0 {
            continue;
        }
        let y = index_point(col, d, q);
        *out.entry(observe(x0.entries(), &y, q, what)).or_insert(0.0) += p;
    }
    out
}

/// Largest deviations between a probability table and sampled frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub max_abs_dev: f64,
    pub max_z: f64,
    pub n_cells: usize,
}

impl ComparisonReport {
    pub fn passes(&self) -> bool {
        self.max_z < Z_THRESHOLD
    }
}

/// Per-cell z-scores |f - p| / sqrt(p(1-p)/N) over the union of cells.
///
/// With many cells some z near 4 is expected; the threshold of 5 keeps the
/// false-alarm rate small even across thousands of cells.
pub fn compare(expected: &BTreeMap<Vec<usize>, f64>, observed: &EmpiricalDist) -> Result<ComparisonReport> {
    let n = observed.total as f64;
    if n == 0.0 {
        return Err(Error::Parameter("no observations".into()));
    }
    let mut keys: Vec<&Vec<usize>> = expected.keys().collect();
    keys.extend(observed.counts.keys().filter(|k| !expected.contains_key(*k)));
    let mut max_abs_dev: f64 = 0.0;
    let mut max_z: f64 = 0.0;
    for key in &keys {
        let p = expected.get(*key).copied().unwrap_or(0.0);
        let hits = observed.counts.get(*key).copied().unwrap_or(0);
        let f = hits as f64 / n;
        if p <= 0.0 {
            if hits > 0 {
                return Err(Error::ImpossibleOutcome(format!("{key:?} observed {hits} times")));
            }
            continue;
        }
        let dev = (f - p).abs();
        max_abs_dev = max_abs_dev.max(dev);
        let se = (p * (1.0 - p) / n).sqrt();
        let z = if se > 0.0 {
            dev / se
        } else if dev > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        max_z = max_z.max(z);
    }
    Ok(ComparisonReport {
        max_abs_dev,
        max_z,
        n_cells: keys.len(),
    })
}
