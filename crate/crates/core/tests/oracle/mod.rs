//! Independent reference computations shared by the integration tests.
//!
//! Nothing here calls the library's own oracles or decoders: ball
//! enumeration uses a general matrix inverse for its bounding box and a
//! direct matrix-vector product for distances, and Klein probabilities are
//! summed term by term.

#![allow(dead_code)]

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Upper-triangular `R` from the QR of an i.i.d. Gaussian matrix, with a
/// positive diagonal, computed by nalgebra's Householder QR.
pub fn random_r<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DMatrix<f64> {
    loop {
        let b = DMatrix::from_fn(n, n, |_, _| Distribution::<f64>::sample(&StandardNormal, rng));
        let mut r = b.qr().r();
        for i in 0..n {
            if r[(i, i)] < 0.0 {
                for j in i..n {
                    r[(i, j)] = -r[(i, j)];
                }
            }
        }
        if (0..n).all(|i| r[(i, i)] > 1e-3) {
            return r;
        }
    }
}

/// `y = R x + e` for `x` uniform in `[-3, 3]^n` and `e` with per-entry
/// deviation `noise * min r_ii`.
pub fn random_target<R: Rng + ?Sized>(rng: &mut R, r: &DMatrix<f64>, noise: f64) -> (Vec<i64>, Vec<f64>) {
    let n = r.nrows();
    let x: Vec<i64> = (0..n).map(|_| rng.random_range(-3..=3)).collect();
    let scale = noise * min_diag(r);
    let clean = r * DVector::from_iterator(n, x.iter().map(|&v| v as f64));
    let y = clean.iter().map(|v| v + scale * Distribution::<f64>::sample(&StandardNormal, rng)).collect();
    (x, y)
}

pub fn min_diag(r: &DMatrix<f64>) -> f64 {
    (0..r.nrows()).map(|i| r[(i, i)].abs()).fold(f64::INFINITY, f64::min)
}

pub fn paper_sigma(r: &DMatrix<f64>) -> f64 {
    min_diag(r) / (2.0 * std::f64::consts::PI.sqrt())
}

pub fn sq_dist(r: &DMatrix<f64>, x: &[i64], y: &[f64]) -> f64 {
    let v = r * DVector::from_iterator(x.len(), x.iter().map(|&t| t as f64));
    v.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

fn covering_box(r: &DMatrix<f64>, y: &[f64], d: f64) -> Vec<(i64, i64)> {
    let inv = r.clone().try_inverse().expect("invertible");
    let centre = &inv * DVector::from_column_slice(y);
    (0..r.nrows())
        .map(|i| {
            let w = inv.row(i).norm() * d;
            ((centre[i] - w).ceil() as i64, (centre[i] + w).floor() as i64)
        })
        .collect()
}

/// Number of integer points [`ball`] would scan.
pub fn box_volume(r: &DMatrix<f64>, y: &[f64], d: f64) -> f64 {
    covering_box(r, y, d).iter().map(|(lo, hi)| (hi - lo + 1).max(0) as f64).product()
}

/// Every integer `x` with `|Rx - y| <= d`, by scanning the smallest box that
/// contains the ball: `x = R^{-1}(y + v)` with `|v| <= d`.
pub fn ball(r: &DMatrix<f64>, y: &[f64], d: f64) -> BTreeSet<Vec<i64>> {
    let n = r.nrows();
    let ranges = covering_box(r, y, d);
    let volume: f64 = ranges.iter().map(|(lo, hi)| (hi - lo + 1).max(0) as f64).product();
    assert!(volume <= 5e7, "oracle box of {volume} points");
    let mut out = BTreeSet::new();
    let mut x: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    if ranges.iter().any(|(lo, hi)| lo > hi) {
        return out;
    }
    loop {
        if sq_dist(r, &x, y) <= d * d {
            out.insert(x.clone());
        }
        let mut i = 0;
        loop {
            if i == n {
                return out;
            }
            if x[i] < ranges[i].1 {
                x[i] += 1;
                break;
            }
            x[i] = ranges[i].0;
            i += 1;
        }
    }
}

/// Closest lattice point, scanning the ball through the nearest of the given
/// lattice points.
pub fn closest(r: &DMatrix<f64>, y: &[f64], through: &[&[i64]]) -> (Vec<i64>, f64) {
    let d = through.iter().map(|x| sq_dist(r, x, y)).fold(f64::INFINITY, f64::min).sqrt();
    let d = d * (1.0 + 1e-9) + 1e-12;
    ball(r, y, d)
        .into_iter()
        .map(|x| {
            let d = sq_dist(r, &x, y).sqrt();
            (x, d)
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("ball through a lattice point is non-empty")
}

/// Centre of layer `i` (0-based) given the assignment of layers above it.
pub fn centre(r: &DMatrix<f64>, y: &[f64], x: &[i64], i: usize) -> f64 {
    let n = r.nrows();
    let s: f64 = (i + 1..n).map(|j| r[(i, j)] * x[j] as f64).sum();
    (y[i] - s) / r[(i, i)]
}

/// Discrete Gaussian mass over the integers, by direct summation.
pub fn mass(c: f64, sigma_i: f64) -> f64 {
    let reach = (40.0 * sigma_i).ceil() as i64 + 2;
    let base = c.round() as i64;
    (base - reach..=base + reach)
        .map(|z| (-(z as f64 - c).powi(2) / (2.0 * sigma_i * sigma_i)).exp())
        .sum()
}

/// Klein probability of `x`: product of one-dimensional discrete Gaussian
/// probabilities, layer `n - 1` first.
pub fn klein_prob(r: &DMatrix<f64>, y: &[f64], sigma: f64, x: &[i64]) -> f64 {
    let n = r.nrows();
    (0..n)
        .rev()
        .map(|i| {
            let c = centre(r, y, x, i);
            let s = sigma / r[(i, i)].abs();
            (-(x[i] as f64 - c).powi(2) / (2.0 * s * s)).exp() / mass(c, s)
        })
        .product()
}

/// `ln` of the product of per-layer masses along `x`'s path.
pub fn ln_mass_product(r: &DMatrix<f64>, y: &[f64], sigma: f64, x: &[i64]) -> f64 {
    (0..r.nrows())
        .map(|i| mass(centre(r, y, x, i), sigma / r[(i, i)].abs()).ln())
        .sum()
}

/// `{x : P_Klein(x) >= 1/K}`. Such points satisfy
/// `|Rx - y|^2 <= 2 sigma^2 (ln K + ln prod rho)`, and each per-layer mass is
/// at most its value at an integer centre, which bounds the search ball.
pub fn klein_superlevel(r: &DMatrix<f64>, y: &[f64], sigma: f64, k: f64) -> BTreeSet<Vec<i64>> {
    let n = r.nrows();
    let ln_rho_max: f64 = (0..n).map(|i| mass(0.0, sigma / r[(i, i)].abs()).ln()).sum();
    let d = (2.0 * sigma * sigma * (k.ln() + ln_rho_max)).sqrt() * (1.0 + 1e-9);
    ball(r, y, d)
        .into_iter()
        .filter(|x| klein_prob(r, y, sigma, x) * k >= 1.0 - 1e-12)
        .collect()
}

/// Babai nearest-plane point, ties to the smaller integer.
pub fn babai(r: &DMatrix<f64>, y: &[f64]) -> Vec<i64> {
    let n = r.nrows();
    let mut x = vec![0i64; n];
    for i in (0..n).rev() {
        x[i] = (centre(r, y, &x, i) - 0.5).ceil() as i64;
    }
    x
}
