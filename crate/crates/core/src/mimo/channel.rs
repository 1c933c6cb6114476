use nalgebra::{Complex, DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::lattice::complex_to_real_matrix;

/// `n x n` Rayleigh channel: i.i.d. entries with real and imaginary parts
/// `N(0, 1/2)`.
pub fn sample_channel<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DMatrix<Complex<f64>> {
    let half = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).expect("valid normal");
    DMatrix::from_fn(n, n, |_, _| Complex::new(half.sample(rng), half.sample(rng)))
}

/// Complex noise vector with `E|w_i|^2 = 1`.
pub fn sample_unit_noise<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DVector<Complex<f64>> {
    let half = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).expect("valid normal");
    DVector::from_fn(n, |_, _| Complex::new(half.sample(rng), half.sample(rng)))
}

/// Per-complex-dimension noise standard deviation for `E_b/N_0` in dB:
/// `sigma_w^2 = n / (log2(M) 10^(snr_db / 10))`, relative to unit-energy
/// symbols.
pub fn noise_sigma(snr_db: f64, n: usize, order: usize) -> f64 {
    let bits = (order as f64).log2();
    (n as f64 / (bits * 10f64.powf(snr_db / 10.0))).sqrt()
}

/// Real model of `h` stacked over `sigma_w I`; the matching target is the
/// real target extended with zeros.
pub fn mmse_augment(h: &DMatrix<Complex<f64>>, sigma_w: f64) -> DMatrix<f64> {
    let real = complex_to_real_matrix(h);
    let n = real.ncols();
    let mut ext = DMatrix::zeros(real.nrows() + n, n);
    ext.view_mut((0, 0), real.shape()).copy_from(&real);
    for i in 0..n {
        ext[(real.nrows() + i, i)] = sigma_w;
    }
    ext
}
