//! Per-trial detection: real model, optional MMSE extension, shift to the
//! integer lattice, QR, optional LLL, decode, map back and clip.

use nalgebra::{Complex, DMatrix, DVector};

use crate::decoders::{babai_outcome, DecodeOutcome, DecoderKind, DecodeOptions};
use crate::error::Result;
use crate::lattice::{
    complex_to_real_matrix, complex_to_real_vector, lll_reduce, QrFactors, LatticeBasis,
    UnimodularTransform, DEFAULT_LLL_DELTA,
};
use crate::mimo::channel::mmse_augment;
use crate::mimo::qam::Qam;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preprocessing {
    pub lll: bool,
    pub mmse: bool,
    pub lll_delta: f64,
}

impl Default for Preprocessing {
    fn default() -> Self {
        Self { lll: false, mmse: false, lll_delta: DEFAULT_LLL_DELTA }
    }
}

/// Triangular system ready for decoding, plus the map back to symbol indices.
#[derive(Debug, Clone)]
pub struct PreparedSystem {
    pub qr: QrFactors,
    pub y: Vec<f64>,
    pub transform: Option<UnimodularTransform>,
}

impl PreparedSystem {
    /// Symbol indices `u = U z` for a decoded lattice vector `z`.
    pub fn to_indices(&self, z: &[i64]) -> Vec<i64> {
        match &self.transform {
            Some(u) => u.apply(z),
            None => z.to_vec(),
        }
    }
}

/// Build the integer-lattice system for received `c = H s + w`.
///
/// With `s = 2u - (sqrt(M) - 1)`, the target becomes
/// `c + (sqrt(M) - 1) H 1` against the basis `2H`. `sigma_w` is the noise
/// level relative to the symbol energy, used only by the MMSE extension.
pub fn prepare(
    h: &DMatrix<Complex<f64>>,
    c: &DVector<Complex<f64>>,
    qam: &Qam,
    sigma_w: f64,
    pre: Preprocessing,
) -> Result<PreparedSystem> {
    let mut hr = if pre.mmse && sigma_w > 0.0 { mmse_augment(h, sigma_w) } else { complex_to_real_matrix(h) };
    let mut target = DVector::zeros(hr.nrows());
    target.rows_mut(0, 2 * c.len()).copy_from(&complex_to_real_vector(c));
    let ones = DVector::from_element(hr.ncols(), 1.0);
    target += &hr * ones * qam.offset();
    hr *= 2.0;
    let qr = QrFactors::decompose(&hr)?;
    let y = qr.project(&target)?;
    if !pre.lll {
        return Ok(PreparedSystem { qr, y, transform: None });
    }
    let (reduced, u) = lll_reduce(&LatticeBasis::new(qr.r().clone())?, pre.lll_delta)?;
    let qr2 = QrFactors::decompose(reduced.matrix())?;
    let y2 = qr2.project(&DVector::from_vec(y))?;
    Ok(PreparedSystem { qr: qr2, y: y2, transform: Some(u) })
}

/// Result of detecting one received vector.
#[derive(Debug, Clone)]
pub struct Detection {
    /// Symbol indices clipped to the alphabet.
    pub indices: Vec<i64>,
    pub outcome: DecodeOutcome,
    /// The decoder returned nothing and the Babai point was used instead.
    pub fell_back: bool,
}

pub fn detect(
    sys: &PreparedSystem,
    kind: DecoderKind,
    opts: &DecodeOptions,
    qam: &Qam,
) -> Result<Detection> {
    let outcome = kind.run(&sys.qr, &sys.y, opts)?;
    let (z, fell_back) = match &outcome.best {
        Some(z) => (z.clone(), false),
        None => (babai_outcome(&sys.qr, &sys.y).best.expect("babai is never empty"), true),
    };
    let last = qam.side() as i64 - 1;
    let indices = sys.to_indices(&z).into_iter().map(|v| v.clamp(0, last)).collect();
    Ok(Detection { indices, outcome, fell_back })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mimo::channel::sample_channel;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symbols(rng: &mut ChaCha8Rng, qam: &Qam, n: usize) -> (Vec<u8>, Vec<Complex<f64>>) {
        let bits: Vec<u8> = (0..n * qam.bits_per_symbol()).map(|_| rng.random_range(0..2)).collect();
        let symbols = qam.map(&bits).unwrap();
        (bits, symbols)
    }

    #[test]
    fn zero_noise_recovers_indices() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let qam = Qam::new(16).unwrap();
        for &(lll, mmse) in &[(false, false), (true, false), (false, true), (true, true)] {
            for _ in 0..20 {
                let h = sample_channel(&mut rng, 3);
                let (bits, s) = random_symbols(&mut rng, &qam, 3);
                let c = &h * DVector::from_vec(s.clone());
                let pre = Preprocessing { lll, mmse, ..Default::default() };
                let sys = prepare(&h, &c, &qam, 0.0, pre).unwrap();
                for kind in [DecoderKind::Babai, DecoderKind::Rsd, DecoderKind::Ml] {
                    let d = detect(&sys, kind, &DecodeOptions::rsd(10.0), &qam).unwrap();
                    assert_eq!(d.indices, qam.symbols_to_lattice(&s), "{kind:?} lll={lll} mmse={mmse}");
                    assert_eq!(qam.demap_indices(&d.indices), bits);
                }
            }
        }
    }

    #[test]
    fn shifted_lattice_preserves_distances() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let qam = Qam::new(16).unwrap();
        let h = sample_channel(&mut rng, 2);
        let (_, s) = random_symbols(&mut rng, &qam, 2);
        let c = &h * DVector::from_vec(s.clone()) + DVector::from_element(2, Complex::new(0.3, -0.2));
        let sys = prepare(&h, &c, &qam, 0.0, Preprocessing::default()).unwrap();
        let u = qam.symbols_to_lattice(&s);
        let hr = complex_to_real_matrix(&h);
        let sr = DVector::from_vec(s.iter().map(|z| z.re).chain(s.iter().map(|z| z.im)).collect());
        let direct = (complex_to_real_vector(&c) - hr * sr).norm();
        assert!((sys.qr.sq_dist(&u, &sys.y).sqrt() - direct).abs() < 1e-9);
    }

    #[test]
    fn small_mmse_term_keeps_babai_decisions() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let qam = Qam::new(16).unwrap();
        for _ in 0..50 {
            let h = sample_channel(&mut rng, 2);
            let (_, s) = random_symbols(&mut rng, &qam, 2);
            let noise = DVector::from_fn(2, |_, _| Complex::new(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3)));
            let c = &h * DVector::from_vec(s) + noise;
            let plain = prepare(&h, &c, &qam, 0.0, Preprocessing::default()).unwrap();
            let ext = prepare(&h, &c, &qam, 1e-9, Preprocessing { mmse: true, ..Default::default() }).unwrap();
            let opts = DecodeOptions::rsd(1.0);
            let a = detect(&plain, DecoderKind::Babai, &opts, &qam).unwrap();
            let b = detect(&ext, DecoderKind::Babai, &opts, &qam).unwrap();
            assert_eq!(a.indices, b.indices);
        }
    }
}
