//! Dense complex matrices.
//!
//! This is the only linear algebra used by the rest of the crate: LU-based
//! determinants (plain and log-magnitude form), numerical rank by full
//! pivoting, Gauss-Jordan inversion, and Hermiticity/unitarity residuals.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const DEFAULT_RANK_TOL: f64 = 1e-10;
pub const DEFAULT_STRUCTURE_TOL: f64 = 1e-10;

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

/// Determinant in polar form: `det = exp(ln_abs + i*phase)`.
///
/// A singular matrix is represented with `ln_abs = -inf`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogDet {
    pub ln_abs: f64,
    pub phase: f64,
}

impl LogDet {
    pub fn is_zero(&self) -> bool {
        self.ln_abs == f64::NEG_INFINITY
    }

    /// Converts back to a plain complex number (may overflow to inf).
    pub fn to_complex(self) -> Complex64 {
        if self.is_zero() {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::from_polar(self.ln_abs.exp(), self.phase)
    }
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_diag(diag: &[Complex64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        m
    }

    /// Builds a matrix from nested rows; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Self::new(r, c, rows.iter().flatten().copied().collect())
    }

    /// Real-valued convenience constructor.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let rows: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn scale(&self, k: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * k).collect(),
        }
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut out = Self::zeros(rows, cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        out[(i * other.rows + k, j * other.cols + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        out
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hcat(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "hcat of {} and {} rows",
                self.rows, other.rows
            )));
        }
        let cols = self.cols + other.cols;
        let mut out = Self::zeros(self.rows, cols);
        for i in 0..self.rows {
            out.data[i * cols..i * cols + self.cols].copy_from_slice(self.row(i));
            out.data[i * cols + self.cols..(i + 1) * cols].copy_from_slice(other.row(i));
        }
        Ok(out)
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "product of {}x{} and {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    fn require_square(&self) -> Result<()> {
        if self.is_square() {
            Ok(())
        } else {
            Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            })
        }
    }

    /// LU factorisation with partial (row) pivoting, in place on a copy.
    /// Returns the packed factors and the permutation parity, or `None`
    /// for the parity when a zero pivot column is met.
    fn lu(&self) -> (Vec<Complex64>, bool, bool) {
        let n = self.rows;
        let mut a = self.data.clone();
        let mut odd = false;
        let mut singular = false;
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, a[i * n + k].norm()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if pmax == 0.0 {
                singular = true;
                continue;
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                odd = !odd;
            }
            let pivot = a[k * n + k];
            for i in k + 1..n {
                let factor = a[i * n + k] / pivot;
                if factor == Complex64::new(0.0, 0.0) {
                    continue;
                }
                a[i * n + k] = factor;
                for j in k + 1..n {
                    let t = a[k * n + j];
                    a[i * n + j] -= factor * t;
                }
            }
        }
        (a, odd, singular)
    }

    /// Determinant by partially pivoted elimination.
    ///
    /// Returns [`Error::Overflow`] when the product leaves the f64 range;
    /// [`ComplexMatrix::log_determinant`] is the fallback for large matrices.
    pub fn determinant(&self) -> Result<Complex64> {
        self.require_square()?;
        let n = self.rows;
        if n == 0 {
            return Ok(Complex64::new(1.0, 0.0));
        }
        let (lu, odd, singular) = self.lu();
        if singular {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let mut det = Complex64::new(if odd { -1.0 } else { 1.0 }, 0.0);
        for i in 0..n {
            det *= lu[i * n + i];
        }
        if !det.re.is_finite() || !det.im.is_finite() {
            return Err(Error::Overflow);
        }
        Ok(det)
    }

    /// Determinant as `(ln|det|, arg det)`; never overflows.
    pub fn log_determinant(&self) -> Result<LogDet> {
        self.require_square()?;
        let n = self.rows;
        let (lu, odd, singular) = self.lu();
        if singular {
            return Ok(LogDet {
                ln_abs: f64::NEG_INFINITY,
                phase: 0.0,
            });
        }
        let mut ln_abs = 0.0;
        let mut phase = if odd { std::f64::consts::PI } else { 0.0 };
        for i in 0..n {
            let d = lu[i * n + i];
            ln_abs += d.norm().ln();
            phase += d.arg();
        }
        Ok(LogDet {
            ln_abs,
            phase: wrap_phase(phase),
        })
    }

    /// Numerical rank: number of pivots of magnitude above `tol` times the
    /// largest pivot, under full (row and column) pivoting.
    pub fn rank(&self, tol: f64) -> usize {
        let (pivots, _) = self.full_pivot_magnitudes();
        let Some(&first) = pivots.first() else {
            return 0;
        };
        if first == 0.0 {
            return 0;
        }
        pivots.iter().take_while(|&&p| p > tol * first).count()
    }

    /// Dimension of the right null space implied by [`ComplexMatrix::rank`].
    pub fn nullity(&self, tol: f64) -> usize {
        self.cols - self.rank(tol)
    }

    fn full_pivot_magnitudes(&self) -> (Vec<f64>, usize) {
        let (m, n) = (self.rows, self.cols);
        let mut a = self.data.clone();
        let steps = m.min(n);
        let mut pivots = Vec::with_capacity(steps);
        for k in 0..steps {
            let mut best = (k, k, -1.0);
            for i in k..m {
                for j in k..n {
                    let v = a[i * n + j].norm();
                    if v > best.2 {
                        best = (i, j, v);
                    }
                }
            }
            let (pi, pj, pv) = best;
            pivots.push(pv);
            if pv == 0.0 {
                break;
            }
            if pi != k {
                for j in 0..n {
                    a.swap(k * n + j, pi * n + j);
                }
            }
            if pj != k {
                for i in 0..m {
                    a.swap(i * n + k, i * n + pj);
                }
            }
            let pivot = a[k * n + k];
            for i in k + 1..m {
                let factor = a[i * n + k] / pivot;
                for j in k..n {
                    let t = a[k * n + j];
                    a[i * n + j] -= factor * t;
                }
            }
        }
        (pivots, steps)
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting.
    pub fn inverse(&self) -> Result<Self> {
        self.require_square()?;
        let n = self.rows;
        let mut a = self.data.clone();
        let mut inv = Self::identity(n).data;
        let scale = self.max_abs();
        let mut min_pivot = f64::INFINITY;
        let mut max_pivot: f64 = 0.0;
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, a[i * n + k].norm()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            min_pivot = min_pivot.min(pmax);
            max_pivot = max_pivot.max(pmax);
            if pmax <= 1e-14 * scale || pmax == 0.0 {
                let cond = if pmax == 0.0 {
                    f64::INFINITY
                } else {
                    max_pivot / pmax
                };
                return Err(Error::Singular { cond });
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                    inv.swap(k * n + j, p * n + j);
                }
            }
            let pinv = a[k * n + k].inv();
            for j in 0..n {
                a[k * n + j] *= pinv;
                inv[k * n + j] *= pinv;
            }
            for i in 0..n {
                if i == k {
                    continue;
                }
                let factor = a[i * n + k];
                if factor == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    let (t, u) = (a[k * n + j], inv[k * n + j]);
                    a[i * n + j] -= factor * t;
                    inv[i * n + j] -= factor * u;
                }
            }
        }
        Self::new(n, n, inv).map_err(|_| Error::Singular {
            cond: max_pivot / min_pivot,
        })
    }

    /// Solves `self * X = rhs` (used to avoid forming explicit inverses).
    pub fn solve(&self, rhs: &Self) -> Result<Self> {
        self.inverse()?.matmul(rhs)
    }

    /// `max |M - M†|`.
    pub fn hermitian_residual(&self) -> Result<f64> {
        self.require_square()?;
        let n = self.rows;
        let mut r: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                r = r.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        Ok(r)
    }

    /// `max |M†M - I|`.
    pub fn unitary_residual(&self) -> Result<f64> {
        self.require_square()?;
        let prod = self.adjoint().matmul(self)?;
        Ok((&prod - &Self::identity(self.rows)).max_abs())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_residual().is_ok_and(|r| r <= tol)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitary_residual().is_ok_and(|r| r <= tol)
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_phase(x: f64) -> f64 {
    use std::f64::consts::PI;
    let mut y = x % (2.0 * PI);
    if y <= -PI {
        y += 2.0 * PI;
    } else if y > PI {
        y -= 2.0 * PI;
    }
    y
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs).expect("matrix product dimensions")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
        let data = (0..n * n)
            .map(|_| {
                let r: f64 = rng.gen::<f64>().sqrt();
                let t: f64 = rng.gen::<f64>() * std::f64::consts::TAU;
                Complex64::from_polar(r, t)
            })
            .collect();
        ComplexMatrix::new(n, n, data).unwrap()
    }

    // Cofactor expansion along the first row; exponential cost, small n only.
    fn cofactor_det(m: &ComplexMatrix) -> Complex64 {
        let n = m.rows();
        if n == 1 {
            return m[(0, 0)];
        }
        let mut total = c(0.0, 0.0);
        for j in 0..n {
            let mut minor = Vec::with_capacity((n - 1) * (n - 1));
            for i in 1..n {
                for k in 0..n {
                    if k != j {
                        minor.push(m[(i, k)]);
                    }
                }
            }
            let minor = ComplexMatrix::new(n - 1, n - 1, minor).unwrap();
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            total += sign * m[(0, j)] * cofactor_det(&minor);
        }
        total
    }

    #[test]
    fn determinant_of_identity_and_swap() {
        assert_eq!(ComplexMatrix::identity(4).determinant().unwrap(), c(1.0, 0.0));
        let swap = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        assert_eq!(swap.determinant().unwrap(), c(-1.0, 0.0));
    }

    #[test]
    fn determinant_matches_cofactor_expansion() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [3, 4, 5] {
            let m = random_matrix(&mut rng, n);
            let lu = m.determinant().unwrap();
            let cof = cofactor_det(&m);
            assert!((lu - cof).norm() <= 1e-13 * cof.norm().max(1.0), "{lu} vs {cof}");
        }
    }

    #[test]
    fn determinant_rejects_rectangular() {
        let m = ComplexMatrix::zeros(2, 3);
        assert!(matches!(m.determinant(), Err(Error::NotSquare { .. })));
    }

    #[test]
    fn log_determinant_survives_overflow() {
        let m = ComplexMatrix::identity(200).scale(c(0.0, 1e3));
        assert!(matches!(m.determinant(), Err(Error::Overflow)));
        let ld = m.log_determinant().unwrap();
        assert!((ld.ln_abs - 200.0 * 1e3f64.ln()).abs() < 1e-9);
        // i^200 = 1
        assert!(wrap_phase(ld.phase).abs() < 1e-9);
    }

    #[test]
    fn multiplicativity_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let a = random_matrix(&mut rng, 6);
            let b = random_matrix(&mut rng, 6);
            let lhs = (&a * &b).determinant().unwrap();
            let rhs = a.determinant().unwrap() * b.determinant().unwrap();
            assert!((lhs - rhs).norm() <= 1e-9 * rhs.norm());
        }
    }

    #[test]
    fn permutation_flips_sign() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_matrix(&mut rng, 5);
        let mut p = ComplexMatrix::zeros(5, 5);
        // a 3-cycle (even) combined with a transposition: odd overall
        for (i, j) in [(0, 1), (1, 2), (2, 0), (3, 4), (4, 3)] {
            p[(i, j)] = c(1.0, 0.0);
        }
        let lhs = (&p * &a).determinant().unwrap();
        let rhs = -a.determinant().unwrap();
        assert!((lhs - rhs).norm() <= 1e-12 * rhs.norm());
    }

    #[test]
    fn rank_examples() {
        assert_eq!(ComplexMatrix::zeros(3, 3).rank(1e-12), 0);
        assert_eq!(ComplexMatrix::identity(5).rank(1e-12), 5);
        assert_eq!(ComplexMatrix::zeros(0, 0).rank(1e-12), 0);
        let m = ComplexMatrix::from_real_rows(&[&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0], &[0.0, 1.0, 1.0]])
            .unwrap();
        assert_eq!(m.rank(1e-12), 2);
    }

    #[test]
    fn rank_plus_nullity_is_cols() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for k in 1..5 {
            // product of 6xk and kx7 factors has rank k
            let left = ComplexMatrix::new(6, k, (0..6 * k).map(|_| c(rng.gen(), rng.gen())).collect())
                .unwrap();
            let right = ComplexMatrix::new(k, 7, (0..7 * k).map(|_| c(rng.gen(), rng.gen())).collect())
                .unwrap();
            let m = &left * &right;
            assert_eq!(m.rank(DEFAULT_RANK_TOL), k);
            assert_eq!(m.rank(DEFAULT_RANK_TOL) + m.nullity(DEFAULT_RANK_TOL), 7);
        }
    }

    #[test]
    fn inverse_examples() {
        let id = ComplexMatrix::identity(3);
        assert_eq!(id.inverse().unwrap(), id);
        let d = ComplexMatrix::from_diag(&[c(2.0, 0.0), c(0.0, 1.0)]);
        let inv = d.inverse().unwrap();
        assert!((inv[(0, 0)] - c(0.5, 0.0)).norm() < 1e-15);
        assert!((inv[(1, 1)] - c(0.0, -1.0)).norm() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let m = random_matrix(&mut rng, 4);
        let res = (&(&m * &m.inverse().unwrap()) - &ComplexMatrix::identity(4)).max_abs();
        assert!(res <= 1e-10 * m.max_abs());
    }

    #[test]
    fn inverse_of_singular_reports_condition() {
        let m = ComplexMatrix::from_real_rows(&[&[1.0, 2.0], &[2.0, 4.0]]).unwrap();
        assert!(matches!(m.inverse(), Err(Error::Singular { .. })));
    }

    #[test]
    fn hermitian_and_unitary() {
        let id = ComplexMatrix::identity(2);
        assert!(id.is_hermitian(1e-12) && id.is_unitary(1e-12));
        let j = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]).unwrap();
        assert!(!j.is_hermitian(1e-12));
        assert!(j.is_unitary(1e-12));
    }

    #[test]
    fn kron_and_hcat_shapes() {
        let a = ComplexMatrix::from_real_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        let k = a.kron(&ComplexMatrix::identity(2));
        assert_eq!((k.rows(), k.cols()), (4, 4));
        assert_eq!(k[(2, 0)], c(3.0, 0.0));
        assert_eq!(k[(3, 1)], c(3.0, 0.0));
        assert_eq!(k[(3, 0)], c(0.0, 0.0));
        let h = a.hcat(&a).unwrap();
        assert_eq!((h.rows(), h.cols()), (2, 4));
        assert_eq!(h[(1, 3)], c(4.0, 0.0));
    }

    #[test]
    fn construction_rejects_nan() {
        let r = ComplexMatrix::new(1, 1, vec![c(f64::NAN, 0.0)]);
        assert!(matches!(r, Err(Error::NonFinite)));
    }
}
