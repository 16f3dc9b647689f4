//! Dense complex matrices and the handful of factorizations the decomposer
//! needs: Householder QR, Householder RQ and Haar-random unitary sampling.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

pub type Complex = Complex64;

const ZERO: Complex = Complex::new(0.0, 0.0);
const ONE: Complex = Complex::new(1.0, 0.0);

/// Dense complex matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    /// Diagonal matrix with the given entries.
    pub fn from_diagonal(diag: &[Complex]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        m
    }

    /// Builds a matrix from row-major entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(bad) = data.iter().position(|z| !z.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "entry {bad} is not finite"
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<Complex>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Self::from_vec(rows.len(), cols, rows.concat())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
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

    /// Row-major entries.
    pub fn as_slice(&self) -> &[Complex] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<Complex> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[Complex] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Standard matrix product `self * rhs`.
    pub fn matmul(&self, rhs: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == ZERO {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: Complex) -> ComplexMatrix {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn trace(&self) -> Complex {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> Result<f64> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "cannot compare {}x{} with {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// Submatrix picked out by explicit row and column index lists.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> ComplexMatrix {
        ComplexMatrix::from_fn(rows.len(), cols.len(), |i, j| self[(rows[i], cols[j])])
    }

    /// In-place `self[:, cols] <- self[:, cols] * block`.
    ///
    /// Equivalent to right-multiplying by `block` embedded into the identity
    /// at `cols`, without forming the embedded matrix.
    pub fn right_apply_block(&mut self, cols: &[usize], block: &ComplexMatrix) {
        let k = cols.len();
        debug_assert_eq!(block.rows, k);
        debug_assert_eq!(block.cols, k);
        let mut gathered = vec![ZERO; k];
        for r in 0..self.rows {
            let row = &mut self.data[r * self.cols..(r + 1) * self.cols];
            for (g, &c) in gathered.iter_mut().zip(cols) {
                *g = row[c];
            }
            for (l, &c) in cols.iter().enumerate() {
                let mut acc = ZERO;
                for (p, g) in gathered.iter().enumerate() {
                    acc += g * block[(p, l)];
                }
                row[c] = acc;
            }
        }
    }

    /// In-place `self[:, cols] <- self[:, cols] * block^dagger`.
    pub fn right_apply_block_dagger(&mut self, cols: &[usize], block: &ComplexMatrix) {
        let k = cols.len();
        debug_assert_eq!(block.rows, k);
        debug_assert_eq!(block.cols, k);
        let mut gathered = vec![ZERO; k];
        for r in 0..self.rows {
            let row = &mut self.data[r * self.cols..(r + 1) * self.cols];
            for (g, &c) in gathered.iter_mut().zip(cols) {
                *g = row[c];
            }
            for (l, &c) in cols.iter().enumerate() {
                let mut acc = ZERO;
                for (p, g) in gathered.iter().enumerate() {
                    acc += g * block[(l, p)].conj();
                }
                row[c] = acc;
            }
        }
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex;

    fn index(&self, (i, j): (usize, usize)) -> &Complex {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex {
        &mut self.data[i * self.cols + j]
    }
}

/// Outcome of a unitarity check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitarityReport {
    /// Max-norm of `a^dagger a - I`.
    pub defect: f64,
    pub is_unitary: bool,
}

pub fn unitarity(a: &ComplexMatrix, tol: f64) -> Result<UnitarityReport> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows,
            cols: a.cols,
        });
    }
    let n = a.rows;
    let mut defect: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            let mut acc = ZERO;
            for k in 0..n {
                acc += a[(k, i)].conj() * a[(k, j)];
            }
            if i == j {
                acc -= ONE;
            }
            defect = defect.max(acc.norm());
        }
    }
    Ok(UnitarityReport {
        defect,
        is_unitary: defect <= tol,
    })
}

/// Householder reflector `H = I - 2 v v^dagger / (v^dagger v)` sending `x` to
/// a multiple of the basis vector `e_pivot`. Returns `None` when `x` is
/// already such a multiple.
fn householder_vector(x: &[Complex], pivot: usize) -> Option<(Vec<Complex>, f64)> {
    let off: f64 = x
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != pivot)
        .map(|(_, z)| z.norm_sqr())
        .sum();
    if off == 0.0 {
        return None;
    }
    let norm = (off + x[pivot].norm_sqr()).sqrt();
    let p = x[pivot];
    let phase = if p.norm() > 0.0 { p / p.norm() } else { ONE };
    let alpha = -phase * norm;
    let mut v = x.to_vec();
    v[pivot] -= alpha;
    let vnorm_sqr: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    Some((v, vnorm_sqr))
}

/// Householder QR: returns `(q, r)` with `a = q r`, `q` unitary and `r`
/// upper triangular. No phase normalization of `r`'s diagonal.
pub fn qr_decompose(a: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows,
            cols: a.cols,
        });
    }
    let n = a.rows;
    let mut r = a.clone();
    let mut q = ComplexMatrix::identity(n);
    for k in 0..n.saturating_sub(1) {
        let x: Vec<Complex> = (k..n).map(|i| r[(i, k)]).collect();
        let Some((v, vv)) = householder_vector(&x, 0) else {
            continue;
        };
        // r[k.., :] <- H r[k.., :]
        for j in 0..n {
            let mut dot = ZERO;
            for (t, vt) in v.iter().enumerate() {
                dot += vt.conj() * r[(k + t, j)];
            }
            let s = dot * (2.0 / vv);
            for (t, vt) in v.iter().enumerate() {
                r[(k + t, j)] -= vt * s;
            }
        }
        // q[:, k..] <- q[:, k..] H
        for i in 0..n {
            let mut dot = ZERO;
            for (t, vt) in v.iter().enumerate() {
                dot += q[(i, k + t)] * vt;
            }
            let s = dot * (2.0 / vv);
            for (t, vt) in v.iter().enumerate() {
                q[(i, k + t)] -= s * vt.conj();
            }
        }
        for i in k + 1..n {
            r[(i, k)] = ZERO;
        }
    }
    Ok((q, r))
}

/// RQ decomposition in the form `a q = r`: `q` unitary, `r` upper
/// triangular (so `a = r q^{-1}`).
///
/// Rows are eliminated bottom-up with Householder reflectors applied from the
/// right; each reflector acts on columns `0..=k` only, so rows already reduced
/// keep their zeros. The diagonal of `r` carries arbitrary phases.
pub fn rq_decompose(a: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows,
            cols: a.cols,
        });
    }
    let m = a.rows;
    let mut w = a.clone();
    let mut q = ComplexMatrix::identity(m);
    for k in (1..m).rev() {
        let y: Vec<Complex> = (0..=k).map(|j| w[(k, j)].conj()).collect();
        let Some((v, vv)) = householder_vector(&y, k) else {
            continue;
        };
        reflect_right(&mut w, &v, vv);
        reflect_right(&mut q, &v, vv);
        for j in 0..k {
            w[(k, j)] = ZERO;
        }
    }
    Ok((w, q))
}

/// `x <- x H` on the leading `v.len()` columns.
fn reflect_right(x: &mut ComplexMatrix, v: &[Complex], vv: f64) {
    let scale = 2.0 / vv;
    for i in 0..x.rows {
        let mut dot = ZERO;
        for (t, vt) in v.iter().enumerate() {
            dot += x[(i, t)] * vt;
        }
        let s = dot * scale;
        for (t, vt) in v.iter().enumerate() {
            x[(i, t)] -= s * vt.conj();
        }
    }
}

/// Samples an `n x n` unitary from the Haar measure, deterministically in
/// `seed`.
///
/// QR of a Ginibre matrix (i.i.d. standard complex Gaussians) with the
/// columns of `q` rephased so that `r` has a positive real diagonal.
pub fn haar_random_unitary(n: usize, seed: u64) -> Result<ComplexMatrix> {
    if n == 0 {
        return Err(Error::InvalidArgument("unitary size must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let z = ComplexMatrix::from_fn(n, n, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        Complex::new(re * s, im * s)
    });
    let (mut q, r) = qr_decompose(&z)?;
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    Ok(q)
}
