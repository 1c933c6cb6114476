//! Randomized property suites over random Gaussian bases, shared by the
//! `verify` subcommand. Each suite reports instance and check counts, the
//! number of failures and its worst observed margin.

use std::fmt;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::decoders::{
    babai_sic, equivalent_radius, esd, fincke_pohst, gain_upper_bound, gain_upper_bound_rigorous,
    k_for_radius, regularized_radius_along_path, rsd, DecodeOptions,
};
use crate::error::{Error, Result};
use crate::gaussian::{
    default_sigma, jacobi_theta3, klein_layer_pmf, ln_rho_z, LayerContext, DEFAULT_RHO_TOL,
};
use crate::lattice::{enumerate_in_radius_exhaustive, min_diag, QrFactors};

/// Published value of `theta3(2)`.
pub const THETA3_2_PUBLISHED: f64 = 1.0039;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Theorem1,
    Theorem5,
    Bounds,
    Tail,
    Gain,
    K1Babai,
    Theta,
    Theorem4,
    Lemma3,
}

impl Suite {
    pub const ALL: [Suite; 9] = [
        Suite::Theorem1,
        Suite::Theorem5,
        Suite::Bounds,
        Suite::Tail,
        Suite::Gain,
        Suite::K1Babai,
        Suite::Theta,
        Suite::Theorem4,
        Suite::Lemma3,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Theorem1 => "theorem1",
            Suite::Theorem5 => "theorem5",
            Suite::Bounds => "bounds",
            Suite::Tail => "tail",
            Suite::Gain => "gain",
            Suite::K1Babai => "k1-babai",
            Suite::Theta => "theta",
            Suite::Theorem4 => "theorem4",
            Suite::Lemma3 => "lemma3",
        }
    }

    pub fn parse(s: &str) -> Option<Suite> {
        Suite::ALL.into_iter().find(|x| x.name() == s)
    }

    fn default_instances(&self) -> usize {
        match self {
            Suite::Theorem1 => 200,
            Suite::Theorem5 => 100,
            Suite::Bounds => 10,
            Suite::Tail => 100,
            Suite::Gain => 200,
            Suite::K1Babai => 10_000,
            Suite::Theta => 1,
            Suite::Theorem4 => 50,
            Suite::Lemma3 => 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteParams {
    pub seed: u64,
    /// Overrides the suite's default instance count.
    pub instances: Option<usize>,
    /// Largest dimension for the bounds suite.
    pub n_max: Option<usize>,
    /// Largest initial pruning size for the bounds suite.
    pub k_max: Option<f64>,
}

impl SuiteParams {
    pub fn new(seed: u64) -> Self {
        Self { seed, instances: None, n_max: None, k_max: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub instances: u64,
    pub checks: u64,
    pub failures: u64,
    /// Description and value of the tightest observed margin.
    pub worst: Option<(String, f64)>,
    pub notes: Vec<String>,
}

impl SuiteReport {
    fn new(suite: Suite) -> Self {
        Self { suite, instances: 0, checks: 0, failures: 0, worst: None, notes: Vec::new() }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    fn check(&mut self, ok: bool) {
        self.checks += 1;
        if !ok {
            self.failures += 1;
        }
    }

    /// Track the largest value of a quantity that must stay small.
    fn track_max(&mut self, what: &str, value: f64) {
        if self.worst.as_ref().is_none_or(|w| value > w.1) {
            self.worst = Some((what.to_string(), value));
        }
    }

    /// Track the smallest value of a quantity that must stay large.
    fn track_min(&mut self, what: &str, value: f64) {
        if self.worst.as_ref().is_none_or(|w| value < w.1) {
            self.worst = Some((what.to_string(), value));
        }
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} - {} instances, {} checks, {} failures",
            self.suite.name(),
            if self.passed() { "PASS" } else { "FAIL" },
            self.instances,
            self.checks,
            self.failures
        )?;
        if let Some((what, v)) = &self.worst {
            write!(f, "; worst {what} = {v}")?;
        }
        for note in &self.notes {
            write!(f, "\n  {note}")?;
        }
        Ok(())
    }
}

/// A random decoding problem with the lattice point it was generated from.
#[derive(Debug, Clone)]
pub struct Instance {
    pub r: QrFactors,
    pub y: Vec<f64>,
    pub x: Vec<i64>,
}

/// QR of an i.i.d. Gaussian basis and `y = R x + e` with `x` uniform in
/// `[-3, 3]^n` and `e` Gaussian with per-entry deviation
/// `noise_scale * min |r_ii|`.
pub fn random_instance<R: Rng + ?Sized>(rng: &mut R, n: usize, noise_scale: f64) -> Instance {
    loop {
        let b = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(rng));
        let Ok(r) = QrFactors::decompose(&b) else { continue };
        let x: Vec<i64> = (0..n).map(|_| rng.random_range(-3..=3)).collect();
        let scale = noise_scale * min_diag(&r);
        let y = r
            .apply(&x)
            .into_iter()
            .map(|v| v + scale * Distribution::<f64>::sample(&StandardNormal, rng))
            .collect();
        return Instance { r, y, x };
    }
}

pub fn run_suite(suite: Suite, params: &SuiteParams) -> Result<SuiteReport> {
    let instances = params.instances.unwrap_or(suite.default_instances());
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    match suite {
        Suite::Theorem1 => theorem1(&mut rng, instances),
        Suite::Theorem5 => theorem5(&mut rng, instances),
        Suite::Bounds => bounds(&mut rng, instances, params.n_max.unwrap_or(16), params.k_max.unwrap_or(1000.0)),
        Suite::Tail => tail(&mut rng, instances),
        Suite::Gain => gain(&mut rng, instances),
        Suite::K1Babai => k1_babai(&mut rng, instances),
        Suite::Theta => theta(),
        Suite::Theorem4 => theorem4(&mut rng, instances),
        Suite::Lemma3 => lemma3(&mut rng, instances),
    }
}

/// Pruning-size search equals the sphere search of radius `sigma sqrt(2 ln K)`.
fn theorem1(rng: &mut ChaCha8Rng, instances: usize) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new(Suite::Theorem1);
    let mut points = 0usize;
    for idx in 0..instances {
        let k = [2.0, 10.0, 100.0][idx % 3];
        let n = 2 + (idx / 3) % 7;
        let Instance { r, y, .. } = random_instance(rng, n, 0.3);
        let out = esd(&r, &y, &DecodeOptions::esd(k))?;
        let fp = fincke_pohst(&r, &y, equivalent_radius(default_sigma(&r), k), u64::MAX)?;
        points += fp.candidate_count();
        rep.instances += 1;
        rep.check(out.candidate_set() == fp.candidate_set());
    }
    rep.notes.push(format!("{points} lattice points compared"));
    Ok(rep)
}

/// The regularized decoder returns every point with `P_Klein(x) >= 1/K`.
fn theorem5(rng: &mut ChaCha8Rng, instances: usize) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new(Suite::Theorem5);
    let mut required = 0usize;
    for idx in 0..instances {
        let n = 1 + idx % 6;
        let k = [2.0, 5.0, 10.0, 20.0, 50.0][(idx / 6) % 5];
        let Instance { r, y, .. } = random_instance(rng, n, 0.3);
        let sigma = default_sigma(&r);
        let out = rsd(&r, &y, &DecodeOptions::rsd(k))?;
        let found = out.candidate_set();
        for x in klein_superlevel_set(&r, &y, sigma, k) {
            required += 1;
            rep.check(found.contains(&x));
        }
        rep.instances += 1;
    }
    rep.notes.push(format!("{required} points with P_Klein >= 1/K"));
    Ok(rep)
}

/// All `x` with `P_Klein(x) >= 1/K`. Every layer probability is at most 1,
/// so each prefix of such an `x` already has `K prod p >= 1`; the search
/// keeps every integer meeting that condition, with no child limit.
pub fn klein_superlevel_set(r: &QrFactors, y: &[f64], sigma: f64, k: f64) -> Vec<Vec<i64>> {
    fn walk(r: &QrFactors, y: &[f64], sigma: f64, top: usize, ln_k: f64, x: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        let i = top - 1;
        let ctx = LayerContext::new(r, y, x, i, sigma);
        let ln_rho = ln_rho_z(&ctx, DEFAULT_RHO_TOL);
        let reach = ctx.sigma_i * (2.0 * (ln_k - ln_rho).max(0.0)).sqrt() + 1.0;
        let lo = (ctx.center - reach).floor() as i64;
        let hi = (ctx.center + reach).ceil() as i64;
        for v in lo..=hi {
            let ln_child = ln_k + ctx.ln_weight(v) - ln_rho;
            if ln_child < -1e-12 {
                continue;
            }
            x[i] = v;
            if i == 0 {
                out.push(x.clone());
            } else {
                walk(r, y, sigma, i, ln_child, x, out);
            }
        }
    }
    let mut out = Vec::new();
    walk(r, y, sigma, r.dim(), k.ln(), &mut vec![0; r.dim()], &mut out);
    out
}

/// `|S| <= nK` and `|L| <= max(1, K)` for both pruned decoders with and
/// without candidate protection.
fn bounds(rng: &mut ChaCha8Rng, instances: usize, n_max: usize, k_max: f64) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new(Suite::Bounds);
    let dims: Vec<usize> = [2, 4, 8, 12, 16].into_iter().filter(|&n| n < n_max).chain([n_max]).collect();
    let ks: Vec<f64> = [1.0, 1.5, 2.0, 5.0, 10.0, 50.0, 100.0, 500.0]
        .into_iter()
        .filter(|&k| k < k_max)
        .chain([k_max])
        .collect();
    let mut max_s_at_top = 0u64;
    for &n in &dims {
        for &k in &ks {
            for _ in 0..instances {
                let Instance { r, y, .. } = random_instance(rng, n, 0.5);
                rep.instances += 1;
                for protection in [false, true] {
                    for out in [
                        esd(&r, &y, &DecodeOptions::esd(k).with_protection(protection))?,
                        rsd(&r, &y, &DecodeOptions::rsd(k).with_protection(protection))?,
                    ] {
                        let s = out.visited_nodes as f64;
                        rep.check(s <= n as f64 * k);
                        rep.check(out.candidate_count() as f64 <= k.max(1.0));
                        rep.track_max("|S| / nK", s / (n as f64 * k));
                        if n == n_max && k == k_max {
                            max_s_at_top = max_s_at_top.max(out.visited_nodes);
                        }
                    }
                }
            }
        }
    }
    rep.notes.push(format!(
        "max |S| at n = {n_max}, K = {k_max}: {max_s_at_top} (bound {})",
        n_max as f64 * k_max
    ));
    Ok(rep)
}

/// The three closest integers carry at least 0.999 of each layer's mass.
fn tail(rng: &mut ChaCha8Rng, instances: usize) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new(Suite::Tail);
    let mut worst_tail = 0.0f64;
    for idx in 0..instances {
        let n = 2 + idx % 15;
        let Instance { r, .. } = random_instance(rng, n, 0.0);
        let sigma = default_sigma(&r);
        for layer in 0..n {
            let sigma_i = sigma / r.diag(layer).abs();
            for step in 0..=50 {
                let ctx = LayerContext::with_center(layer, step as f64 * 0.01, sigma_i);
                let mass: f64 = klein_layer_pmf(&ctx, 3).iter().map(|p| p.1).sum();
                rep.check(mass >= 0.999);
                rep.track_min("top-3 mass", mass);
                worst_tail = worst_tail.max(1.0 - mass);
            }
        }
        rep.instances += 1;
    }
    rep.notes.push(format!("largest tail mass beyond three children: {worst_tail:e} (published bound 5e-6)"));
    if worst_tail > 5e-6 {
        rep.failures += 1;
    }
    Ok(rep)
}

/// Per-candidate radius guarantee and gain bounds of the regularized decoder.
fn gain(rng: &mut ChaCha8Rng, instances: usize) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new(Suite::Gain);
    let (mut radius_fail, mut lower_fail, mut upper_fail, mut rigorous_fail) = (0u64, 0u64, 0u64, 0u64);
    let mut max_over_bound = f64::NEG_INFINITY;
    for idx in 0..instances {
        let k = [10.0, 100.0][idx % 2];
        let n = 2 + (idx / 2) % 7;
        let Instance { r, y, .. } = random_instance(rng, n, 0.3);
        let sigma = default_sigma(&r);
        let d_eq = equivalent_radius(sigma, k);
        let upper = gain_upper_bound(&r, k);
        let rigorous = gain_upper_bound_rigorous(&r, k);
        let out = rsd(&r, &y, &DecodeOptions::rsd(k))?;
        for c in out.candidates.iter().filter(|c| !c.protected) {
            let d_reg = regularized_radius_along_path(&c.x, &r, &y, sigma, k)?;
            let g = d_reg / d_eq;
            rep.checks += 1;
            let mut bad = false;
            if c.dist > d_reg * (1.0 + 1e-9) {
                radius_fail += 1;
                bad = true;
            }
            if g < 0.99 {
                lower_fail += 1;
                bad = true;
            }
            if g > upper {
                upper_fail += 1;
                bad = true;
            }
            if g > rigorous {
                rigorous_fail += 1;
            }
            max_over_bound = max_over_bound.max(g / upper);
            rep.failures += u64::from(bad);
            rep.track_min("G", g);
        }
        rep.instances += 1;
    }
    rep.notes.push(format!(
        "radius violations {radius_fail}, G < 0.99: {lower_fail}, G above published bound: {upper_fail}, \
         G above squared-ratio bound: {rigorous_fail}; max G / published bound = {max_over_bound}"
    ));
    Ok(rep)
}

/// `K = 1` reduces the regularized decoder to nearest-plane rounding.
fn k1_babai(rng: &mut ChaCha8Rng, instances: usize) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new(Suite::K1Babai);
    for _ in 0..instances {
        let n = rng.random_range(1..=16);
        let Instance { r, y, .. } = random_instance(rng, n, 0.5);
        let out = rsd(&r, &y, &DecodeOptions::rsd(1.0))?;
        rep.check(out.best.as_deref() == Some(&babai_sic(&r, &y)[..]) && out.visited_nodes == n as u64);
        rep.instances += 1;
    }
    Ok(rep)
}

fn theta() -> Result<SuiteReport> {
    let mut rep = SuiteReport::new(Suite::Theta);
    let value = jacobi_theta3(2.0, 1e-15)?;
    let gap = (value - THETA3_2_PUBLISHED).abs();
    rep.instances = 1;
    rep.check(gap <= 1e-4);
    rep.track_max("|theta3(2) - 1.0039|", gap);
    rep.notes.push(format!("theta3(2) = {value}"));
    Ok(rep)
}

/// With `K` from the oracle distance, the equivalent decoder finds the optimum.
fn theorem4(rng: &mut ChaCha8Rng, instances: usize) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new(Suite::Theorem4);
    for idx in 0..instances {
        let n = 1 + idx % 6;
        let Instance { r, y, x } = random_instance(rng, n, 0.2);
        let sigma = default_sigma(&r);
        let (x_opt, d) = exhaustive_cvp(&r, &y, &[babai_sic(&r, &y), x])?;
        let pk = k_for_radius(d, sigma)?;
        if pk.capped {
            rep.notes.push(format!("instance {idx}: K capped"));
        }
        let out = esd(&r, &y, &DecodeOptions::esd(pk.k * (1.0 + 1e-9)))?;
        rep.check(out.best.as_ref() == Some(&x_opt));
        rep.instances += 1;
    }
    Ok(rep)
}

/// Closest point by scanning the box covering the ball through the nearest
/// of the given reference points.
pub fn exhaustive_cvp(r: &QrFactors, y: &[f64], references: &[Vec<i64>]) -> Result<(Vec<i64>, f64)> {
    let d_ref = references
        .iter()
        .map(|x| r.sq_dist(x, y).sqrt())
        .fold(f64::INFINITY, f64::min);
    let ball = enumerate_in_radius_exhaustive(r, y, d_ref * (1.0 + 1e-9) + 1e-12)?;
    ball.into_iter()
        .map(|x| {
            let d = r.sq_dist(&x, y).sqrt();
            (x, d)
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| Error::InvalidConfig("oracle ball is empty".into()))
}

/// The summed pruning size of saved nodes strictly decreases layer by layer.
/// Restricted to `K <= 500`: beyond `e^(2 pi)` a node whose centre is an
/// integer can keep children with total weight `1 + 2 e^(-2 pi) > 1`.
fn lemma3(rng: &mut ChaCha8Rng, instances: usize) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new(Suite::Lemma3);
    for idx in 0..instances {
        let k = [2.0, 10.0, 100.0, 500.0][idx % 4];
        let n = 2 + (idx / 4) % 7;
        let Instance { r, y, .. } = random_instance(rng, n, 0.3);
        let out = esd(&r, &y, &DecodeOptions::esd(k).with_trace(true))?;
        let mut sums = vec![0.0; n + 1];
        sums[n] = k;
        for node in &out.trace {
            sums[node.layer] += node.pruning_size;
        }
        for layer in (0..n).rev() {
            if sums[layer + 1] > 0.0 {
                rep.check(sums[layer] < sums[layer + 1]);
                rep.track_max("layer sum ratio", sums[layer] / sums[layer + 1]);
            }
        }
        rep.instances += 1;
    }
    Ok(rep)
}
