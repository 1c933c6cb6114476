use crate::decoders::{Candidate, DecodeOutcome};
use crate::gaussian::{layer_center, ZigZag};
use crate::lattice::QrFactors;

/// Nearest-plane rounding from the top layer down; half-integer centres
/// round to the smaller integer.
pub fn babai_sic(r: &QrFactors, y: &[f64]) -> Vec<i64> {
    let n = r.dim();
    let mut x = vec![0i64; n];
    complete_from(r, y, &mut x, n);
    x
}

/// Round layers `top - 1` down to 0 given `x[top..]`.
pub(crate) fn complete_from(r: &QrFactors, y: &[f64], x: &mut [i64], top: usize) {
    for i in (0..top).rev() {
        x[i] = nearest(layer_center(y, r, x, i));
    }
}

#[inline]
pub(crate) fn nearest(center: f64) -> i64 {
    ZigZag::new(center).next().expect("zig-zag is infinite")
}

/// Babai wrapped as an outcome with one candidate and `|S| = n`.
pub fn babai_outcome(r: &QrFactors, y: &[f64]) -> DecodeOutcome {
    let x = babai_sic(r, y);
    let dist = r.sq_dist(&x, y).sqrt();
    let mut out = DecodeOutcome {
        candidates: vec![Candidate { x, dist, protected: false }],
        visited_nodes: r.dim() as u64,
        ..Default::default()
    };
    out.finish();
    out
}
