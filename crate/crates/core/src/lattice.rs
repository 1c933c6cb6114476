//! Lattice bases, QR factors, LLL reduction and the exhaustive oracles.
//!
//! Conventions: a basis is an `n x n` matrix whose columns generate the
//! lattice, layers are indexed `0..n` (index `n - 1` is decoded first), and
//! integer vectors are plain `Vec<i64>`.

use std::collections::BTreeSet;

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

/// Diagonal magnitudes of `R` below this are treated as rank loss.
pub const SINGULAR_TOL: f64 = 1e-12;

/// Default LLL parameter.
pub const DEFAULT_LLL_DELTA: f64 = 0.75;

/// Default half-width of the integer box scanned by the oracles.
pub const DEFAULT_BOX_HALFWIDTH: i64 = 3;

/// Largest dimension the exhaustive oracles accept.
pub const ORACLE_MAX_DIM: usize = 10;

/// A full-rank square lattice basis (columns are basis vectors).
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeBasis {
    b: DMatrix<f64>,
}

impl LatticeBasis {
    pub fn new(b: DMatrix<f64>) -> Result<Self> {
        if b.nrows() == 0 || b.nrows() != b.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "basis must be square and non-empty, got {}x{}",
                b.nrows(),
                b.ncols()
            )));
        }
        // Rank check; the factors themselves are discarded.
        QrFactors::decompose(&b)?;
        Ok(Self { b })
    }

    /// Builds a basis from row-major data.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch("basis rows have unequal lengths".into()));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn dim(&self) -> usize {
        self.b.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.b
    }
}

/// Thin QR factors `B = QR` with `r[(i, i)] > 0` whenever they come from
/// [`QrFactors::decompose`].
#[derive(Debug, Clone, PartialEq)]
pub struct QrFactors {
    q: DMatrix<f64>,
    r: DMatrix<f64>,
}

impl QrFactors {
    /// Modified Gram-Schmidt with one re-orthogonalisation pass.
    ///
    /// Accepts tall `m x n` matrices (`m >= n`), in which case `q` is `m x n`
    /// with orthonormal columns and `r` is `n x n`.
    pub fn decompose(a: &DMatrix<f64>) -> Result<Self> {
        let (m, n) = a.shape();
        if n == 0 || m < n {
            return Err(Error::DimensionMismatch(format!(
                "QR needs a non-empty matrix with rows >= columns, got {m}x{n}"
            )));
        }
        let mut q = DMatrix::<f64>::zeros(m, n);
        let mut r = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            let mut v: DVector<f64> = a.column(j).into_owned();
            for _pass in 0..2 {
                for k in 0..j {
                    let c = q.column(k).dot(&v);
                    r[(k, j)] += c;
                    v.axpy(-c, &q.column(k), 1.0);
                }
            }
            let norm = v.norm();
            if !(norm >= SINGULAR_TOL) {
                return Err(Error::SingularBasis { index: j, value: norm });
            }
            r[(j, j)] = norm;
            q.set_column(j, &(v / norm));
        }
        Ok(Self { q, r })
    }

    /// Wraps an already upper-triangular `R` (with `Q = I`).
    pub fn from_upper_triangular(r: DMatrix<f64>) -> Result<Self> {
        let n = r.nrows();
        if n == 0 || r.ncols() != n {
            return Err(Error::DimensionMismatch("R must be square and non-empty".into()));
        }
        for j in 0..n {
            for i in (j + 1)..n {
                if r[(i, j)].abs() > SINGULAR_TOL {
                    return Err(Error::DimensionMismatch(format!(
                        "R is not upper triangular at ({i}, {j})"
                    )));
                }
            }
            if !(r[(j, j)].abs() >= SINGULAR_TOL) {
                return Err(Error::SingularBasis { index: j, value: r[(j, j)].abs() });
            }
        }
        Ok(Self { q: DMatrix::identity(n, n), r })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch("R rows have unequal lengths".into()));
        }
        Self::from_upper_triangular(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn dim(&self) -> usize {
        self.r.ncols()
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }

    #[inline]
    pub fn diag(&self, i: usize) -> f64 {
        self.r[(i, i)]
    }

    /// `y = Q^T c`.
    pub fn project(&self, c: &DVector<f64>) -> Result<Vec<f64>> {
        if c.len() != self.q.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "target has length {}, expected {}",
                c.len(),
                self.q.nrows()
            )));
        }
        Ok((self.q.transpose() * c).iter().copied().collect())
    }

    /// `R x` for an integer vector.
    pub fn apply(&self, x: &[i64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| (i..n).map(|j| self.r[(i, j)] * x[j] as f64).sum())
            .collect()
    }

    /// `||R x - y||^2`.
    pub fn sq_dist(&self, x: &[i64], y: &[f64]) -> f64 {
        self.apply(x).iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
    }
}

pub fn qr_decompose(basis: &LatticeBasis) -> Result<QrFactors> {
    QrFactors::decompose(basis.matrix())
}

/// `min_i |r_{i,i}|`.
pub fn min_diag(r: &QrFactors) -> f64 {
    (0..r.dim()).map(|i| r.diag(i).abs()).fold(f64::INFINITY, f64::min)
}

/// Integer change of basis with determinant +-1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnimodularTransform {
    u: DMatrix<i64>,
}

impl UnimodularTransform {
    pub fn identity(n: usize) -> Self {
        Self { u: DMatrix::identity(n, n) }
    }

    pub fn matrix(&self) -> &DMatrix<i64> {
        &self.u
    }

    /// `U z`.
    pub fn apply(&self, z: &[i64]) -> Vec<i64> {
        let n = self.u.nrows();
        (0..n).map(|i| (0..n).map(|j| self.u[(i, j)] * z[j]).sum()).collect()
    }

    /// Exact determinant by fraction-free (Bareiss) elimination.
    pub fn determinant(&self) -> i128 {
        let n = self.u.nrows();
        let mut a: Vec<Vec<i128>> =
            (0..n).map(|i| (0..n).map(|j| self.u[(i, j)] as i128).collect()).collect();
        let mut sign = 1i128;
        let mut prev = 1i128;
        for k in 0..n {
            if a[k][k] == 0 {
                match (k + 1..n).find(|&i| a[i][k] != 0) {
                    Some(p) => {
                        a.swap(k, p);
                        sign = -sign;
                    }
                    None => return 0,
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
                }
            }
            prev = a[k][k];
        }
        sign * a[n - 1][n - 1]
    }
}

/// LLL reduction of the columns of `basis`.
///
/// Gram-Schmidt data are kept in floating point (as an `R` factor) while the
/// transform is tracked in integers, so `output = input * U` holds exactly up
/// to the rounding of the float column updates.
pub fn lll_reduce(basis: &LatticeBasis, delta: f64) -> Result<(LatticeBasis, UnimodularTransform)> {
    if !(delta > 0.25 && delta <= 1.0) {
        return Err(Error::InvalidConfig(format!("LLL delta {delta} outside (0.25, 1]")));
    }
    let n = basis.dim();
    let mut b = basis.matrix().clone();
    let mut u = DMatrix::<i64>::identity(n, n);
    let mut r = QrFactors::decompose(&b)?.r;
    let mut k = 1;
    while k < n {
        for j in (0..k).rev() {
            let mu = r[(j, k)] / r[(j, j)];
            if mu.abs() > 0.5 {
                let q = mu.round();
                let qi = q as i64;
                for row in 0..b.nrows() {
                    b[(row, k)] -= q * b[(row, j)];
                }
                for row in 0..n {
                    u[(row, k)] -= qi * u[(row, j)];
                }
                for row in 0..=j {
                    r[(row, k)] -= q * r[(row, j)];
                }
            }
        }
        let mu = r[(k - 1, k)] / r[(k - 1, k - 1)];
        let lhs = r[(k, k)] * r[(k, k)];
        let rhs = (delta - mu * mu) * r[(k - 1, k - 1)] * r[(k - 1, k - 1)];
        if lhs >= rhs {
            k += 1;
        } else {
            b.swap_columns(k - 1, k);
            u.swap_columns(k - 1, k);
            r = QrFactors::decompose(&b)?.r;
            k = (k - 1).max(1);
        }
    }
    Ok((LatticeBasis { b }, UnimodularTransform { u }))
}

/// Real-valued model of a complex system: `[[Re H, -Im H], [Im H, Re H]]`.
pub fn complex_to_real_matrix(h: &DMatrix<Complex<f64>>) -> DMatrix<f64> {
    let (m, n) = h.shape();
    DMatrix::from_fn(2 * m, 2 * n, |i, j| {
        let z = h[(i % m, j % n)];
        match (i < m, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

/// Stacks `[Re c; Im c]`.
pub fn complex_to_real_vector(c: &DVector<Complex<f64>>) -> DVector<f64> {
    let m = c.len();
    DVector::from_fn(2 * m, |i, _| if i < m { c[i].re } else { c[i - m].im })
}

pub fn complex_to_real(
    h: &DMatrix<Complex<f64>>,
    c: &DVector<Complex<f64>>,
) -> Result<(LatticeBasis, DVector<f64>)> {
    if h.nrows() != c.len() {
        return Err(Error::DimensionMismatch(format!(
            "channel has {} rows but target has length {}",
            h.nrows(),
            c.len()
        )));
    }
    Ok((LatticeBasis::new(complex_to_real_matrix(h))?, complex_to_real_vector(c)))
}

fn check_oracle_dims(r: &QrFactors, y: &[f64], max: usize) -> Result<()> {
    if r.dim() > max {
        return Err(Error::DimensionTooLarge { n: r.dim(), max });
    }
    if y.len() != r.dim() {
        return Err(Error::DimensionMismatch(format!(
            "target has length {}, expected {}",
            y.len(),
            r.dim()
        )));
    }
    Ok(())
}

/// Nearest-plane point used to centre the oracle box.
fn box_center(r: &QrFactors, y: &[f64]) -> Vec<i64> {
    let n = r.dim();
    let mut x = vec![0i64; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| r.r()[(i, j)] * x[j] as f64).sum();
        x[i] = ((y[i] - s) / r.diag(i)).round() as i64;
    }
    x
}

/// Visits every integer point of the box `center +- halfwidth`.
pub(crate) fn for_each_box_point(center: &[i64], halfwidth: i64, visit: impl FnMut(&[i64])) {
    let ranges: Vec<(i64, i64)> = center.iter().map(|c| (c - halfwidth, c + halfwidth)).collect();
    for_each_range_point(&ranges, visit);
}

/// Exhaustive closest-vector search over the integer box of the given
/// half-width around the nearest-plane point.
///
/// Only correct when the box is wide enough to contain the optimum, which
/// callers must arrange (small noise, reduced bases).
pub fn brute_force_cvp(r: &QrFactors, y: &[f64], box_halfwidth: i64) -> Result<(Vec<i64>, f64)> {
    check_oracle_dims(r, y, ORACLE_MAX_DIM)?;
    let center = box_center(r, y);
    let mut best = (center.clone(), f64::INFINITY);
    for_each_box_point(&center, box_halfwidth, |x| {
        let d = r.sq_dist(x, y);
        if d < best.1 {
            best = (x.to_vec(), d);
        }
    });
    Ok((best.0, best.1.sqrt()))
}

/// Exactly the box points with `||R x - y|| <= d_radius`.
pub fn enumerate_in_radius_naive(
    r: &QrFactors,
    y: &[f64],
    d_radius: f64,
    box_halfwidth: i64,
) -> Result<BTreeSet<Vec<i64>>> {
    check_oracle_dims(r, y, ORACLE_MAX_DIM)?;
    let center = box_center(r, y);
    let d2 = d_radius * d_radius;
    let mut out = BTreeSet::new();
    for_each_box_point(&center, box_halfwidth, |x| {
        if r.sq_dist(x, y) <= d2 {
            out.insert(x.to_vec());
        }
    });
    Ok(out)
}

/// Largest box accepted by [`enumerate_in_radius_exhaustive`].
pub const EXHAUSTIVE_MAX_POINTS: f64 = 2e8;

/// Per-coordinate integer ranges covering the ellipsoid `||R x - y|| <= d`:
/// `x_i` lies within `d * ||row_i(R^-1)||` of the real solution `R^-1 y`.
pub fn covering_ranges(r: &QrFactors, y: &[f64], d_radius: f64) -> Result<Vec<(i64, i64)>> {
    check_oracle_dims(r, y, ORACLE_MAX_DIM)?;
    let n = r.dim();
    let inv = r
        .r()
        .clone()
        .solve_upper_triangular(&DMatrix::identity(n, n))
        .ok_or(Error::SingularBasis { index: 0, value: 0.0 })?;
    let x0 = &inv * DVector::from_column_slice(y);
    Ok((0..n)
        .map(|i| {
            let extent = d_radius * inv.row(i).norm();
            ((x0[i] - extent).ceil() as i64, (x0[i] + extent).floor() as i64)
        })
        .collect())
}

/// Every integer `x` with `||R x - y|| <= d_radius`, by scanning the box from
/// [`covering_ranges`]. Unlike [`enumerate_in_radius_naive`] the result does
/// not depend on a box width guess.
pub fn enumerate_in_radius_exhaustive(r: &QrFactors, y: &[f64], d_radius: f64) -> Result<BTreeSet<Vec<i64>>> {
    let ranges = covering_ranges(r, y, d_radius)?;
    let mut out = BTreeSet::new();
    if ranges.iter().any(|(lo, hi)| lo > hi) {
        return Ok(out);
    }
    let volume: f64 = ranges.iter().map(|(lo, hi)| (hi - lo + 1) as f64).product();
    if volume > EXHAUSTIVE_MAX_POINTS {
        return Err(Error::InvalidConfig(format!("oracle box of {volume:e} points is too large")));
    }
    let d2 = d_radius * d_radius;
    for_each_range_point(&ranges, |x| {
        if r.sq_dist(x, y) <= d2 {
            out.insert(x.to_vec());
        }
    });
    Ok(out)
}

/// Visits every integer point of the product of closed ranges.
pub(crate) fn for_each_range_point(ranges: &[(i64, i64)], mut visit: impl FnMut(&[i64])) {
    let n = ranges.len();
    let mut x: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    loop {
        visit(&x);
        let mut i = 0;
        loop {
            if i == n {
                return;
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
