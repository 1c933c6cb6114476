//! Conversions between pruning sizes and sphere radii.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::gaussian::ln_layer_mass_product;
use crate::lattice::{min_diag, QrFactors};

/// Largest exponent passed to `exp` before the value is capped.
const MAX_EXPONENT: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PruningSize {
    pub k: f64,
    /// Set when `d^2 / (2 sigma^2)` exceeded the overflow guard.
    pub capped: bool,
}

/// `K = exp(d^2 / (2 sigma^2))`, the pruning size whose equivalent radius is
/// `d_target`.
pub fn k_for_radius(d_target: f64, sigma: f64) -> Result<PruningSize> {
    if !(d_target >= 0.0) {
        return Err(Error::InvalidConfig(format!("target radius must be non-negative, got {d_target}")));
    }
    if !(sigma > 0.0) {
        return Err(Error::InvalidConfig(format!("sigma must be positive, got {sigma}")));
    }
    let exponent = d_target * d_target / (2.0 * sigma * sigma);
    if exponent > MAX_EXPONENT {
        Ok(PruningSize { k: MAX_EXPONENT.exp(), capped: true })
    } else {
        Ok(PruningSize { k: exponent.exp(), capped: false })
    }
}

/// Radius `sigma sqrt(2 ln K)` searched by the equivalent decoder.
pub fn equivalent_radius(sigma: f64, k: f64) -> f64 {
    sigma * (2.0 * k.ln()).sqrt()
}

/// Radius `sigma sqrt(2 ln(K / prod_i rho_i))` implied for the path of `x`
/// by the regularized decoder, with the per-layer masses taken along that
/// path.
pub fn regularized_radius_along_path(x: &[i64], r: &QrFactors, y: &[f64], sigma: f64, k: f64) -> Result<f64> {
    let ln_mass = ln_layer_mass_product(x, r, y, sigma);
    let ln_k = k.ln();
    if ln_k < ln_mass {
        return Err(Error::RadiusUndefined { ln_k, ln_mass });
    }
    Ok(sigma * (2.0 * (ln_k - ln_mass)).sqrt())
}

/// Upper bound `sqrt(1 + sum_i (|r_ii| / min|r_jj|) pi / (2 ln K))` on the
/// regularized-to-equivalent radius ratio, as published.
pub fn gain_upper_bound(r: &QrFactors, k: f64) -> f64 {
    let m = min_diag(r);
    let s: f64 = (0..r.dim()).map(|i| r.diag(i).abs() / m).sum();
    (1.0 + s * PI / (2.0 * k.ln())).sqrt()
}

/// The same bound with the ratios squared. Each layer mass satisfies
/// `rho_i >= exp(-1 / (8 sigma_i^2))`, which at the default sigma gives
/// `-ln rho_i <= (pi / 2) (|r_ii| / min|r_jj|)^2`.
pub fn gain_upper_bound_rigorous(r: &QrFactors, k: f64) -> f64 {
    let m = min_diag(r);
    let s: f64 = (0..r.dim()).map(|i| (r.diag(i).abs() / m).powi(2)).sum();
    (1.0 + s * PI / (2.0 * k.ln())).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{rho_z, LayerContext, DEFAULT_RHO_TOL};
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;

    const SIGMA_UNIT: f64 = 0.282_094_791_773_878_1;

    #[test]
    fn k_for_radius_examples() {
        assert_eq!(k_for_radius(0.0, 1.0).unwrap(), PruningSize { k: 1.0, capped: false });
        assert_abs_diff_eq!(k_for_radius(1.0, SIGMA_UNIT).unwrap().k, 535.4917, epsilon = 1e-3);
        let big = k_for_radius(100.0, SIGMA_UNIT).unwrap();
        assert!(big.capped && big.k.is_finite());
        assert!(k_for_radius(-1.0, 1.0).is_err());
        assert!(k_for_radius(1.0, 0.0).is_err());
    }

    #[test]
    fn k_for_radius_inverts_equivalent_radius() {
        for d in [0.1, 0.7, 2.3] {
            let k = k_for_radius(d, 0.4).unwrap().k;
            assert_abs_diff_eq!(equivalent_radius(0.4, k), d, epsilon = 1e-12);
        }
    }

    #[test]
    fn regularized_radius_single_layer() {
        let r = QrFactors::from_upper_triangular(DMatrix::identity(1, 1)).unwrap();
        let rho = rho_z(&LayerContext::with_center(0, 0.0, SIGMA_UNIT), DEFAULT_RHO_TOL);
        let k = std::f64::consts::E.powi(2) * rho;
        let d = regularized_radius_along_path(&[0], &r, &[0.0], SIGMA_UNIT, k).unwrap();
        assert_abs_diff_eq!(d, 2.0 * SIGMA_UNIT, epsilon = 1e-12);
    }

    #[test]
    fn regularized_radius_undefined_below_mass() {
        let r = QrFactors::from_upper_triangular(DMatrix::identity(1, 1)).unwrap();
        // At an integer centre the mass exceeds 1, so K = 1 is below it.
        let err = regularized_radius_along_path(&[0], &r, &[0.0], SIGMA_UNIT, 1.0).unwrap_err();
        assert!(matches!(err, Error::RadiusUndefined { .. }));
    }

    #[test]
    fn gain_bounds_identity() {
        let r = QrFactors::from_upper_triangular(DMatrix::identity(3, 3)).unwrap();
        let expected = (1.0 + 3.0 * PI / (2.0 * 10f64.ln())).sqrt();
        assert_abs_diff_eq!(gain_upper_bound(&r, 10.0), expected, epsilon = 1e-15);
        assert_abs_diff_eq!(gain_upper_bound_rigorous(&r, 10.0), expected, epsilon = 1e-15);
    }
}
