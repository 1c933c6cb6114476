use crate::decoders::babai::babai_outcome;
use crate::decoders::{Candidate, DecodeOutcome};
use crate::error::{Error, Result};
use crate::gaussian::layer_center;
use crate::lattice::QrFactors;

/// Enumerate every `x` with `||Rx - y|| <= d_radius` using the per-layer
/// interval `|x_i - c_i| <= sqrt(D^2 - partial) / |r_ii|`.
pub fn fincke_pohst(r: &QrFactors, y: &[f64], d_radius: f64, node_cap: u64) -> Result<DecodeOutcome> {
    let n = r.dim();
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!("target has length {}, expected {n}", y.len())));
    }
    if !(d_radius > 0.0) {
        return Err(Error::InvalidConfig(format!("radius must be positive, got {d_radius}")));
    }
    let mut search = Search { r, y, d2: d_radius * d_radius, node_cap, x: vec![0; n], out: DecodeOutcome::default() };
    search.descend(n, 0.0)?;
    let mut out = search.out;
    out.finish();
    Ok(out)
}

struct Search<'a> {
    r: &'a QrFactors,
    y: &'a [f64],
    d2: f64,
    node_cap: u64,
    x: Vec<i64>,
    out: DecodeOutcome,
}

impl Search<'_> {
    /// Expand the children at layer `top - 1`.
    fn descend(&mut self, top: usize, partial: f64) -> Result<()> {
        let i = top - 1;
        let rii = self.r.diag(i);
        let center = layer_center(self.y, self.r, &self.x, i);
        let remaining = self.d2 - partial;
        if remaining < 0.0 {
            return Ok(());
        }
        let half = remaining.sqrt() / rii.abs();
        let lo = (center - half).ceil() as i64;
        let hi = (center + half).floor() as i64;
        for v in lo..=hi {
            let e = rii * (v as f64 - center);
            let dist = partial + e * e;
            if dist > self.d2 {
                self.out.probe_count += 1;
                continue;
            }
            self.out.visited_nodes += 1;
            if self.out.visited_nodes > self.node_cap {
                return Err(Error::NodeCapExceeded { cap: self.node_cap });
            }
            self.x[i] = v;
            if i == 0 {
                self.out.candidates.push(Candidate { x: self.x.clone(), dist: dist.sqrt(), protected: false });
            } else {
                self.descend(i, dist)?;
            }
        }
        self.x[i] = 0;
        Ok(())
    }
}

/// Maximum-likelihood reference: sphere decoding with the Babai distance as
/// radius, which always contains at least the Babai point.
pub fn ml_reference(r: &QrFactors, y: &[f64], node_cap: u64) -> Result<DecodeOutcome> {
    let babai = babai_outcome(r, y);
    if babai.best_dist == 0.0 {
        return Ok(babai);
    }
    let mut out = fincke_pohst(r, y, babai.best_dist * (1.0 + 1e-9), node_cap)?;
    if out.best.is_none() {
        // Only reachable through rounding at the radius boundary.
        out.candidates = babai.candidates;
        out.finish();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{brute_force_cvp, enumerate_in_radius_exhaustive};
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn identity(n: usize) -> QrFactors {
        QrFactors::from_upper_triangular(DMatrix::identity(n, n)).unwrap()
    }

    #[test]
    fn small_radius_example() {
        let out = fincke_pohst(&identity(2), &[0.2, -0.3], 0.5, 1000).unwrap();
        assert_eq!(out.candidate_set().into_iter().collect::<Vec<_>>(), vec![vec![0, 0]]);
        assert!((out.best_dist - 0.13f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn radius_below_optimum_is_empty() {
        let r = QrFactors::from_rows(&[vec![1.0, 0.5], vec![0.0, 0.5]]).unwrap();
        let y = [0.0, 0.4];
        let (x, d) = brute_force_cvp(&r, &y, 3).unwrap();
        let out = fincke_pohst(&r, &y, d * (1.0 - 1e-9), 1000).unwrap();
        assert!(out.is_empty());
        assert!(out.best_dist.is_infinite());
        let out = fincke_pohst(&r, &y, d * (1.0 + 1e-9), 1000).unwrap();
        assert_eq!(out.best, Some(x));
    }

    #[test]
    fn matches_naive_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let n = rng.random_range(1..=6);
            let mut m = DMatrix::<f64>::zeros(n, n);
            for i in 0..n {
                for j in i..n {
                    m[(i, j)] = rng.sample::<f64, _>(StandardNormal);
                }
                m[(i, i)] = m[(i, i)].abs() + 0.3;
            }
            let r = QrFactors::from_upper_triangular(m).unwrap();
            let y: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let (_, d) = brute_force_cvp(&r, &y, 3).unwrap();
            let radius = d * rng.random_range(1.0..1.6);
            let out = fincke_pohst(&r, &y, radius, 1_000_000).unwrap();
            let naive = enumerate_in_radius_exhaustive(&r, &y, radius).unwrap();
            assert_eq!(out.candidate_set(), naive);
        }
    }

    #[test]
    fn node_cap_is_enforced() {
        let err = fincke_pohst(&identity(4), &[0.0; 4], 3.0, 10).unwrap_err();
        assert_eq!(err, Error::NodeCapExceeded { cap: 10 });
    }

    #[test]
    fn ml_reference_matches_oracle() {
        let r = QrFactors::from_rows(&[vec![1.0, 0.9], vec![0.0, 0.2]]).unwrap();
        let y = [0.0, 0.11];
        let (x, d) = brute_force_cvp(&r, &y, 3).unwrap();
        let out = ml_reference(&r, &y, 1000).unwrap();
        assert_eq!(out.best, Some(x));
        assert!((out.best_dist - d).abs() < 1e-12);
    }
}
