//! Turning a deterministic map over continuous parents into a CPT.
//!
//! Each parent state is a point or an interval. For every parent
//! configuration the same shifted Halton point set is mapped into the
//! configuration's box, the map is applied, the result is perturbed by
//! mean-one lognormal noise and histogrammed into the child bins. Using one
//! point set per CPT keeps rows comparable: a map that is monotone in a
//! parent yields rows that are stochastically ordered in that parent.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{CoreError, Result};
use crate::schema::bin_of;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Point(f64),
    Interval(f64, f64),
}

impl Domain {
    fn at(self, u: f64) -> f64 {
        match self {
            Domain::Point(x) => x,
            Domain::Interval(lo, hi) => lo + u * (hi - lo),
        }
    }
}

/// One interval per bin.
pub fn intervals(edges: &[f64]) -> Vec<Domain> {
    edges.windows(2).map(|w| Domain::Interval(w[0], w[1])).collect()
}

pub fn points(values: &[f64]) -> Vec<Domain> {
    values.iter().map(|&x| Domain::Point(x)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discretization {
    pub samples_per_cell: usize,
    /// Relative standard deviation of the multiplicative noise.
    pub noise_sd: f64,
    pub seed: u64,
}

/// Samples that fell outside the child range and were clamped.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClampCounts {
    pub below: usize,
    pub above: usize,
    pub total: usize,
}

const PRIMES: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let (mut f, mut r) = (inv, 0.0);
    while i > 0 {
        r += f * (i % b) as f64;
        i /= b;
        f *= inv;
    }
    r
}

/// `n` points of the Halton sequence in `dim` dimensions, shifted modulo 1
/// by a random vector drawn from `seed`.
pub fn shifted_halton(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    assert!(dim <= PRIMES.len(), "at most {} dimensions", PRIMES.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
    (1..=n as u64)
        .map(|i| (0..dim).map(|j| (radical_inverse(i, PRIMES[j]) + shift[j]).fract()).collect())
        .collect()
}

/// Mean-one lognormal factor at probability `u`.
pub fn lognormal_factor(sd: f64, u: f64) -> f64 {
    if sd == 0.0 {
        return 1.0;
    }
    let sigma = (1.0 + sd * sd).ln().sqrt();
    let z = Normal::standard().inverse_cdf(u.clamp(1e-12, 1.0 - 1e-12));
    (sigma * z - 0.5 * sigma * sigma).exp()
}

/// Rows of the CPT of a child with bins `child_edges` given `parents`, in
/// the engine layout (first parent slowest, child fastest).
pub fn discretize_model(
    f: impl Fn(&[f64]) -> f64,
    parents: &[Vec<Domain>],
    child_edges: &[f64],
    opts: &Discretization,
) -> Result<(Vec<f64>, ClampCounts)> {
    if opts.samples_per_cell == 0 {
        return Err(CoreError::Invalid("samples_per_cell must be at least 1".into()));
    }
    let k = child_edges.len() - 1;
    let dim = parents.len() + 1;
    let pts = shifted_halton(opts.samples_per_cell, dim, opts.seed);
    let noise: Vec<f64> = pts.iter().map(|p| lognormal_factor(opts.noise_sd, p[dim - 1])).collect();
    let rows: usize = parents.iter().map(Vec::len).product();
    let mut out = vec![0.0; rows * k];
    let mut clamps = ClampCounts::default();
    let mut states = vec![0usize; parents.len()];
    let mut x = vec![0.0; parents.len()];
    let w = 1.0 / opts.samples_per_cell as f64;
    for row in 0..rows {
        for (p, n) in pts.iter().zip(&noise) {
            for (j, s) in states.iter().enumerate() {
                x[j] = parents[j][*s].at(p[j]);
            }
            let v = f(&x) * n;
            if v.is_nan() {
                return Err(CoreError::Invalid(format!("model produced NaN at {x:?}")));
            }
            let (bin, clamped) = bin_of(child_edges, v);
            if clamped {
                if v < child_edges[0] {
                    clamps.below += 1;
                } else {
                    clamps.above += 1;
                }
            }
            clamps.total += 1;
            out[row * k + bin] += w;
        }
        for j in (0..states.len()).rev() {
            states[j] += 1;
            if states[j] < parents[j].len() {
                break;
            }
            states[j] = 0;
        }
    }
    for r in out.chunks_mut(k) {
        let s: f64 = r.iter().sum();
        r.iter_mut().for_each(|x| *x /= s);
    }
    Ok((out, clamps))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(noise_sd: f64) -> Discretization {
        Discretization { samples_per_cell: 64, noise_sd, seed: 11 }
    }

    #[test]
    fn identity_is_diagonal() {
        let edges = [0.0, 1.0, 2.0, 5.0];
        let (cpt, c) = discretize_model(|x| x[0], &[intervals(&edges)], &edges, &opts(0.0)).unwrap();
        for r in 0..3 {
            assert_eq!(cpt[r * 3 + r], 1.0);
        }
        assert_eq!(c.above + c.below, 0);
    }

    #[test]
    fn identity_with_noise_keeps_diagonal_dominant() {
        let edges = [0.0, 1.0, 2.0, 5.0];
        let (cpt, _) = discretize_model(|x| x[0], &[intervals(&edges)], &edges, &opts(0.25)).unwrap();
        for r in 0..3 {
            for c in 0..3 {
                assert!(cpt[r * 3 + r] >= cpt[r * 3 + c]);
            }
        }
    }

    #[test]
    fn constant_map_lands_in_one_bin() {
        let edges = [0.0, 1.0, 2.0, 5.0];
        let (cpt, _) = discretize_model(|_| 1.5, &[intervals(&edges)], &edges, &opts(0.0)).unwrap();
        for r in cpt.chunks(3) {
            assert_eq!(r, &[0.0, 1.0, 0.0]);
        }
    }

    #[test]
    fn out_of_range_values_are_clamped_and_counted() {
        let edges = [0.0, 1.0, 2.0];
        let (cpt, c) = discretize_model(|x| x[0] * 10.0, &[points(&[1.0])], &edges, &opts(0.0)).unwrap();
        assert_eq!(cpt, vec![0.0, 1.0]);
        assert_eq!(c.above, 64);
    }

    #[test]
    fn same_seed_same_table() {
        let edges = [0.0, 1.0, 2.0, 5.0];
        let f = |x: &[f64]| x[0] * x[1];
        let parents = [intervals(&edges), points(&[0.5, 1.0, 2.0])];
        let a = discretize_model(f, &parents, &edges, &opts(0.25)).unwrap().0;
        let b = discretize_model(f, &parents, &edges, &opts(0.25)).unwrap().0;
        assert_eq!(a, b);
    }

    #[test]
    fn lognormal_has_mean_one() {
        let n = 20000;
        let m: f64 = (0..n).map(|i| lognormal_factor(0.25, (i as f64 + 0.5) / n as f64)).sum::<f64>() / n as f64;
        assert!((m - 1.0).abs() < 1e-3, "{m}");
    }

    #[test]
    fn halton_first_points() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert!((radical_inverse(2, 3) - 2.0 / 3.0).abs() < 1e-15);
    }
}
