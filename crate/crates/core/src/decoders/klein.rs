use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::decoders::{Candidate, DecodeOutcome};
use crate::error::{Error, Result};
use crate::gaussian::{ln_rho_z, truncation_radius, LayerContext, ZigZag, DEFAULT_RHO_TOL};
use crate::lattice::QrFactors;

/// Draw one integer from `D_{Z, sigma_i, c}` by inverse CDF over the
/// truncated support, walked closest first.
pub(crate) fn sample_layer<R: Rng + ?Sized>(ctx: &LayerContext, rng: &mut R) -> i64 {
    let ln_rho = ln_rho_z(ctx, DEFAULT_RHO_TOL);
    let support = 2 * truncation_radius(ctx.sigma_i, DEFAULT_RHO_TOL) as usize + 2;
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for v in ZigZag::new(ctx.center).take(support) {
        acc += (ctx.ln_weight(v) - ln_rho).exp();
        last = v;
        if u < acc {
            return v;
        }
    }
    last
}

/// Klein's randomized decoder: `num_samples` independent backward samples,
/// distinct results kept as candidates.
pub fn klein_sampler_decode(
    r: &QrFactors,
    y: &[f64],
    sigma: f64,
    num_samples: usize,
    rng_seed: u64,
) -> Result<DecodeOutcome> {
    let n = r.dim();
    if num_samples == 0 {
        return Err(Error::InvalidConfig("at least one sample is required".into()));
    }
    if !(sigma > 0.0) {
        return Err(Error::InvalidConfig(format!("sigma must be positive, got {sigma}")));
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!("target has length {}, expected {n}", y.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut out = DecodeOutcome::default();
    let mut seen = HashSet::new();
    let mut x = vec![0i64; n];
    for _ in 0..num_samples {
        for i in (0..n).rev() {
            let ctx = LayerContext::new(r, y, &x, i, sigma);
            x[i] = sample_layer(&ctx, &mut rng);
        }
        out.visited_nodes += n as u64;
        if seen.insert(x.clone()) {
            out.candidates.push(Candidate { x: x.clone(), dist: r.sq_dist(&x, y).sqrt(), protected: false });
        }
    }
    out.finish();
    Ok(out)
}
