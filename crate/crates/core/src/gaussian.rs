//! Lattice Gaussian machinery: the Gaussian weight, one-dimensional discrete
//! Gaussians over the integers, Klein's per-layer distribution, the Jacobi
//! theta function and a small-dimension lattice Gaussian oracle.
//!
//! Products over layers are accumulated in natural-log space; at `n = 32` the
//! plain products underflow long before anything interesting happens.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{for_each_box_point, min_diag, QrFactors};

/// Default truncation tolerance for sums over the integers.
pub const DEFAULT_RHO_TOL: f64 = 1e-15;

/// How the Gaussian parameter `sigma` is chosen for a decode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[derive(Default)]
pub enum SigmaPolicy {
    Fixed(f64),
    /// `min_i |r_ii| / (2 sqrt(pi))`, the value under which the node-count
    /// bounds `|S| < nK` hold.
    #[default]
    PaperDefault,
}


impl SigmaPolicy {
    pub fn resolve(&self, r: &QrFactors) -> Result<f64> {
        match *self {
            SigmaPolicy::Fixed(s) if s > 0.0 && s.is_finite() => Ok(s),
            SigmaPolicy::Fixed(s) => Err(Error::InvalidConfig(format!("sigma must be positive, got {s}"))),
            SigmaPolicy::PaperDefault => Ok(default_sigma(r)),
        }
    }
}

pub fn resolve_sigma(policy: SigmaPolicy, r: &QrFactors) -> Result<f64> {
    policy.resolve(r)
}

/// `min_i |r_ii| / (2 sqrt(pi))`.
pub fn default_sigma(r: &QrFactors) -> f64 {
    min_diag(r) / (2.0 * PI.sqrt())
}

/// Centre and width of the one-dimensional distribution at one layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerContext {
    pub layer: usize,
    pub center: f64,
    pub sigma_i: f64,
}

impl LayerContext {
    /// Context for `layer` given the assignments `x[layer + 1..]`.
    pub fn new(r: &QrFactors, y: &[f64], x: &[i64], layer: usize, sigma: f64) -> Self {
        Self {
            layer,
            center: layer_center(y, r, x, layer),
            sigma_i: sigma / r.diag(layer).abs(),
        }
    }

    pub fn with_center(layer: usize, center: f64, sigma_i: f64) -> Self {
        Self { layer, center, sigma_i }
    }

    /// Exponent `-(x - c)^2 / (2 sigma_i^2)` of the Gaussian weight.
    #[inline]
    pub fn ln_weight(&self, x_hat: i64) -> f64 {
        let d = x_hat as f64 - self.center;
        -d * d / (2.0 * self.sigma_i * self.sigma_i)
    }
}

/// `(y_i - sum_{j > i} r_ij x_j) / r_ii`; only `x[layer + 1..]` is read.
pub fn layer_center(y: &[f64], r: &QrFactors, x: &[i64], layer: usize) -> f64 {
    let rm = r.r();
    let mut s = y[layer];
    for j in layer + 1..r.dim() {
        s -= rm[(layer, j)] * x[j] as f64;
    }
    s / rm[(layer, layer)]
}

/// Unnormalised Gaussian weight `exp(-(x - c)^2 / (2 sigma_i^2))`.
pub fn f_weight(x_hat: i64, ctx: &LayerContext) -> f64 {
    ctx.ln_weight(x_hat).exp()
}

pub(crate) fn truncation_radius(sigma_i: f64, tol: f64) -> i64 {
    (sigma_i * (2.0 * (1.0 / tol).ln()).sqrt()).ceil() as i64 + 2
}

/// `ln rho_{sigma_i, c}(Z)`, truncated to the integers within the tail radius
/// implied by `tol`.
pub fn ln_rho_z(ctx: &LayerContext, tol: f64) -> f64 {
    let radius = truncation_radius(ctx.sigma_i, tol);
    let base = ctx.center.floor() as i64;
    let nearest = ZigZag::new(ctx.center).next().unwrap_or(base);
    let top = ctx.ln_weight(nearest);
    let mut sum = 0.0;
    for k in (base - radius)..=(base + 1 + radius) {
        sum += (ctx.ln_weight(k) - top).exp();
    }
    top + sum.ln()
}

/// One-dimensional Gaussian mass `rho_{sigma_i, c}(Z)`.
pub fn rho_z(ctx: &LayerContext, tol: f64) -> f64 {
    ln_rho_z(ctx, tol).exp()
}

/// Integers in order of increasing distance from a centre: the nearest
/// integer first, then alternating outward. Equidistant pairs yield the
/// smaller integer first.
#[derive(Debug, Clone)]
pub struct ZigZag {
    nearest: i64,
    step: i64,
    k: i64,
}

impl ZigZag {
    pub fn new(center: f64) -> Self {
        let nearest = (center - 0.5).ceil() as i64;
        let d = center - nearest as f64;
        let step = if d > 0.0 { 1 } else { -1 };
        Self { nearest, step, k: 0 }
    }
}

impl Iterator for ZigZag {
    type Item = i64;

    fn next(&mut self) -> Option<i64> {
        let k = self.k;
        self.k += 1;
        // 0, +1, -1, +2, -2, ... scaled by the direction of the centre.
        let m = (k + 1) / 2;
        let offset = if k % 2 == 1 { m } else { -m };
        Some(self.nearest + self.step * offset)
    }
}

/// The `j_max` integers closest to the centre with their probabilities under
/// `D_{Z, sigma_i, c}`.
pub fn klein_layer_pmf(ctx: &LayerContext, j_max: usize) -> Vec<(i64, f64)> {
    let ln_rho = ln_rho_z(ctx, DEFAULT_RHO_TOL);
    ZigZag::new(ctx.center)
        .take(j_max)
        .map(|x| (x, (ctx.ln_weight(x) - ln_rho).exp()))
        .collect()
}

/// `ln P_Klein(x)`: the sum of per-layer log probabilities along `x`'s path.
pub fn ln_klein_prob(x: &[i64], r: &QrFactors, y: &[f64], sigma: f64) -> f64 {
    let n = r.dim();
    let mut total = 0.0;
    for layer in (0..n).rev() {
        let ctx = LayerContext::new(r, y, x, layer, sigma);
        total += ctx.ln_weight(x[layer]) - ln_rho_z(&ctx, DEFAULT_RHO_TOL);
    }
    total
}

/// Klein's sampling probability of `x`.
pub fn klein_prob(x: &[i64], r: &QrFactors, y: &[f64], sigma: f64) -> f64 {
    ln_klein_prob(x, r, y, sigma).exp()
}

/// `ln prod_i rho_{sigma_i, c_i}(Z)` along `x`'s path.
pub fn ln_layer_mass_product(x: &[i64], r: &QrFactors, y: &[f64], sigma: f64) -> f64 {
    (0..r.dim())
        .rev()
        .map(|layer| ln_rho_z(&LayerContext::new(r, y, x, layer, sigma), DEFAULT_RHO_TOL))
        .sum()
}

/// Jacobi theta function `sum_n exp(-pi nu n^2)`.
pub fn jacobi_theta3(nu: f64, tol: f64) -> Result<f64> {
    if !(nu > 0.0) || !nu.is_finite() {
        return Err(Error::InvalidConfig(format!("theta argument must be positive, got {nu}")));
    }
    let q = (-PI * nu).exp();
    let mut sum = 1.0;
    let mut k = 1.0f64;
    loop {
        sum += 2.0 * (-PI * nu * k * k).exp();
        // Remaining terms shrink at least geometrically with ratio q.
        let tail = 2.0 * (-PI * nu * (k + 1.0) * (k + 1.0)).exp() / (1.0 - q);
        if tail < tol {
            return Ok(sum);
        }
        k += 1.0;
    }
}

/// Box-truncated lattice Gaussian distribution.
#[derive(Debug, Clone)]
pub struct LatticeGaussMass {
    /// `rho_{sigma, y}(Lambda)` restricted to the box.
    pub total_mass: f64,
    /// `D_{Lambda, sigma, y}(x)` for every box point, normalised over the box.
    pub probs: Vec<(Vec<i64>, f64)>,
}

impl LatticeGaussMass {
    pub fn argmax(&self) -> Option<&[i64]> {
        self.probs
            .iter()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(x, _)| x.as_slice())
    }

    pub fn prob(&self, x: &[i64]) -> Option<f64> {
        self.probs.iter().find(|(p, _)| p == x).map(|(_, v)| *v)
    }
}

/// Largest dimension accepted by [`lattice_gauss_mass`].
pub const GAUSS_MASS_MAX_DIM: usize = 8;

pub fn lattice_gauss_mass(
    r: &QrFactors,
    y: &[f64],
    sigma: f64,
    box_halfwidth: i64,
) -> Result<LatticeGaussMass> {
    let n = r.dim();
    if n > GAUSS_MASS_MAX_DIM {
        return Err(Error::DimensionTooLarge { n, max: GAUSS_MASS_MAX_DIM });
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!("target has length {}, expected {n}", y.len())));
    }
    let mut center = vec![0i64; n];
    for i in (0..n).rev() {
        center[i] = layer_center(y, r, &center, i).round() as i64;
    }
    let mut exps = Vec::new();
    for_each_box_point(&center, box_halfwidth, |x| {
        exps.push((x.to_vec(), -r.sq_dist(x, y) / (2.0 * sigma * sigma)));
    });
    let top = exps.iter().map(|e| e.1).fold(f64::NEG_INFINITY, f64::max);
    let scaled: f64 = exps.iter().map(|e| (e.1 - top).exp()).sum();
    let total_mass = (top + scaled.ln()).exp();
    let probs = exps
        .into_iter()
        .map(|(x, e)| (x, (e - top).exp() / scaled))
        .collect();
    Ok(LatticeGaussMass { total_mass, probs })
}
