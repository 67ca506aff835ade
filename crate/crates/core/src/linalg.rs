//! Design matrices and exact/floating-point linear algebra on them.
//!
//! The central identity here is the generalized Pythagoras/de Gua theorem for
//! Gram determinants: for any n x q matrix V,
//!
//! ```text
//! det(V^T V) = sum over all q-subsets I of det(V_I)^2
//! ```
//!
//! together with the inequality chain
//!
//! ```text
//! max_I |det V_I|  <=  sqrt(det(V^T V))  <=  sum_I |det V_I|
//! C(n,q)^(-1/2) * sum_I |det V_I|  <=  sqrt(det(V^T V))
//! ```
//!
//! Everything in this module is a pure function of immutable inputs; minor
//! enumeration runs in lexicographic subset order so reports and sums are
//! deterministic.

use std::sync::OnceLock;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::special::binomial_u128;

/// Relative singularity tolerance: a q x q minor counts as zero when
/// |det X_I| < TAU_SING * (max row norm)^q, and a singular value counts as
/// zero when sigma < TAU_SING * sigma_max.
pub const TAU_SING: f64 = 1e-9;

/// Default cap on the number of enumerated q-subsets. Exceeding it is an
/// explicit error rather than a silent multi-hour loop.
pub const DEFAULT_SUBSET_CAP: u128 = 1_000_000;

/// Strictly increasing set of q row indices (0-based) into an n-row matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSubset {
    indices: Vec<usize>,
}

impl IndexSubset {
    /// Validates that `indices` is strictly increasing and within `0..n`.
    pub fn new(indices: Vec<usize>, n: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidSubset("empty subset".into()));
        }
        for w in indices.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::InvalidSubset(format!(
                    "indices must be strictly increasing, got {:?}",
                    indices
                )));
            }
        }
        if let Some(&last) = indices.last() {
            if last >= n {
                return Err(Error::IndexOutOfRange { index: last, n });
            }
        }
        Ok(Self { indices })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Lexicographic iterator over all q-subsets of {0, .., n-1}.
pub struct Subsets {
    n: usize,
    q: usize,
    cur: Option<Vec<usize>>,
}

/// All q-subsets of {0, .., n-1} in lexicographic order.
pub fn q_subsets(n: usize, q: usize) -> Subsets {
    let cur = if q <= n && q > 0 { Some((0..q).collect()) } else { None };
    Subsets { n, q, cur }
}

impl Iterator for Subsets {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let cur = self.cur.as_mut()?;
        let out = cur.clone();
        // advance to the next combination
        let (n, q) = (self.n, self.q);
        let mut i = q;
        loop {
            if i == 0 {
                self.cur = None;
                break;
            }
            i -= 1;
            if cur[i] + 1 <= n - q + i {
                cur[i] += 1;
                for j in i + 1..q {
                    cur[j] = cur[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegeneracyReport {
    /// Number of q-subsets I with |det X_I| below the singularity threshold.
    pub n0_degenerate: usize,
    /// Number of q-subsets with a nonvanishing minor; N0 + N1 = C(n,q).
    pub n1_nondegenerate: usize,
    pub is_generic: bool,
    pub rank: usize,
}

/// An n x q design matrix (q <= n) with cached rank, zero-row count and a
/// lazily computed degeneracy report.
#[derive(Debug)]
pub struct DesignMatrix {
    m: DMatrix<f64>,
    rank: usize,
    n0_zero_rows: usize,
    degeneracy: OnceLock<DegeneracyReport>,
}

impl Clone for DesignMatrix {
    fn clone(&self) -> Self {
        let degeneracy = OnceLock::new();
        if let Some(d) = self.degeneracy.get() {
            let _ = degeneracy.set(*d);
        }
        Self { m: self.m.clone(), rank: self.rank, n0_zero_rows: self.n0_zero_rows, degeneracy }
    }
}

impl DesignMatrix {
    /// Wraps a matrix, computing rank and the exact zero-row count.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        Self::with_zero_row_tol(m, 0.0)
    }

    /// Like [`DesignMatrix::new`], but rows whose entries are all <= `tol` in
    /// absolute value count as zero rows. `tol = 0` is the exact-zero default.
    pub fn with_zero_row_tol(m: DMatrix<f64>, tol: f64) -> Result<Self> {
        let (n, q) = (m.nrows(), m.ncols());
        if q > n {
            return Err(Error::WideDesign { n, q });
        }
        if q == 0 || n == 0 {
            return Err(Error::EmptyInput("design matrix must be nonempty".into()));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("design matrix entries must be finite".into()));
        }
        let rank = numeric_rank(&m);
        let n0_zero_rows =
            (0..n).filter(|&i| (0..q).all(|j| m[(i, j)].abs() <= tol)).count();
        Ok(Self { m, rank, n0_zero_rows, degeneracy: OnceLock::new() })
    }

    /// Convenience constructor from a row-major slice.
    pub fn from_rows(n: usize, q: usize, data: &[f64]) -> Result<Self> {
        if data.len() != n * q {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries for a {}x{} matrix, got {}",
                n * q,
                n,
                q,
                data.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(n, q, data))
    }

    pub fn n(&self) -> usize {
        self.m.nrows()
    }

    pub fn q(&self) -> usize {
        self.m.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank == self.q()
    }

    /// Number of exactly-zero rows (or zero up to the construction tolerance).
    pub fn n0_zero_rows(&self) -> usize {
        self.n0_zero_rows
    }

    pub fn row_vec(&self, i: usize) -> Vec<f64> {
        (0..self.q()).map(|j| self.m[(i, j)]).collect()
    }

    /// x_i . beta for row i.
    pub fn row_dot(&self, i: usize, beta: &[f64]) -> f64 {
        (0..self.q()).map(|j| self.m[(i, j)] * beta[j]).sum()
    }

    /// Degeneracy counts over all C(n,q) row subsets, cached after the first
    /// successful computation. Errors when C(n,q) exceeds `cap`.
    pub fn degeneracy_report(&self, cap: u128) -> Result<DegeneracyReport> {
        if let Some(r) = self.degeneracy.get() {
            return Ok(*r);
        }
        let r = degeneracy_report_impl(self, cap)?;
        Ok(*self.degeneracy.get_or_init(|| r))
    }

    /// True when every q-subset of rows is linearly independent
    /// (no vanishing minor), using the default subset cap.
    pub fn is_generic(&self) -> Result<bool> {
        Ok(self.degeneracy_report(DEFAULT_SUBSET_CAP)?.is_generic)
    }
}

/// Rank from singular values with the relative TAU_SING threshold.
fn numeric_rank(m: &DMatrix<f64>) -> usize {
    let sv = m.clone().singular_values();
    let smax = sv.iter().cloned().fold(0.0f64, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > TAU_SING * smax).count()
}

/// The q rows of X with indices in I, in order.
pub fn row_submatrix(x: &DesignMatrix, subset: &IndexSubset) -> Result<DMatrix<f64>> {
    if subset.len() != x.q() {
        return Err(Error::InvalidSubset(format!(
            "subset has {} indices, expected q = {}",
            subset.len(),
            x.q()
        )));
    }
    if let Some(&bad) = subset.indices().iter().find(|&&i| i >= x.n()) {
        return Err(Error::IndexOutOfRange { index: bad, n: x.n() });
    }
    Ok(select_rows(x.matrix(), subset.indices()))
}

fn select_rows(m: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    let q = m.ncols();
    DMatrix::from_fn(rows.len(), q, |i, j| m[(rows[i], j)])
}

/// det of a square matrix via LU with partial pivoting.
pub fn det_lu(m: &DMatrix<f64>) -> f64 {
    debug_assert_eq!(m.nrows(), m.ncols());
    if m.nrows() == 1 {
        return m[(0, 0)];
    }
    if m.nrows() == 2 {
        return m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    }
    m.clone().lu().determinant()
}

/// det(V^T V) >= 0 for an arbitrary n x q matrix, via QR of V:
/// det(V^T V) = prod r_ii^2. Zero iff rank(V) < q.
pub fn gram_det(v: &DMatrix<f64>) -> f64 {
    let q = v.ncols();
    if v.nrows() < q {
        return 0.0;
    }
    sqrt_gram_det(v).powi(2)
}

/// sqrt(det(V^T V)) = prod |r_ii| from the QR factorization of V.
///
/// This is the volume-density evaluation path: it avoids squaring singular
/// values before the square root and so stays accurate for thin matrices.
pub fn sqrt_gram_det(v: &DMatrix<f64>) -> f64 {
    let q = v.ncols();
    if v.nrows() < q {
        return 0.0;
    }
    if q == 1 {
        return v.column(0).norm();
    }
    if q == 2 && v.nrows() == 2 {
        return det_lu(v).abs();
    }
    let qr = v.clone().qr();
    let r = qr.r();
    (0..q).map(|i| r[(i, i)].abs()).product()
}

#[derive(Debug, Clone, Copy)]
pub struct MinorSumReport {
    /// det(V^T V) computed by QR.
    pub lhs: f64,
    /// Sum over all q-subsets I of det(V_I)^2, lexicographic order.
    pub rhs: f64,
    /// |lhs - rhs| / max(|lhs|, |rhs|, 1e-300).
    pub rel_err: f64,
    /// max(0, max_I |det V_I| - sqrt(lhs)): violation of the lower inequality.
    pub lower_violation: f64,
    /// max(0, sqrt(lhs) - sum_I |det V_I|): violation of the upper inequality.
    pub upper_violation: f64,
    /// max(0, C(n,q)^{-1/2} sum_I |det V_I| - sqrt(lhs)).
    pub mean_violation: f64,
}

/// Checks the minor-sum identity and its inequality chain on V, reporting
/// violation magnitudes instead of erroring.
pub fn minor_sum_check(v: &DMatrix<f64>) -> MinorSumReport {
    let (n, q) = (v.nrows(), v.ncols());
    let lhs = gram_det(v);
    let mut rhs = 0.0f64;
    let mut comp = 0.0f64; // Neumaier compensation
    let mut abs_sum = 0.0f64;
    let mut abs_max = 0.0f64;
    for idx in q_subsets(n, q) {
        let d = det_lu(&select_rows(v, &idx));
        let term = d * d;
        let t = rhs + term;
        comp += if rhs.abs() >= term.abs() { (rhs - t) + term } else { (term - t) + rhs };
        rhs = t;
        abs_sum += d.abs();
        abs_max = abs_max.max(d.abs());
    }
    rhs += comp;
    let sqrt_lhs = lhs.max(0.0).sqrt();
    let count = binomial_u128(n, q) as f64;
    MinorSumReport {
        lhs,
        rhs,
        rel_err: (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1e-300),
        lower_violation: (abs_max - sqrt_lhs).max(0.0),
        upper_violation: (sqrt_lhs - abs_sum).max(0.0),
        mean_violation: (abs_sum / count.sqrt() - sqrt_lhs).max(0.0),
    }
}

fn degeneracy_report_impl(x: &DesignMatrix, cap: u128) -> Result<DegeneracyReport> {
    let (n, q) = (x.n(), x.q());
    let count = binomial_u128(n, q);
    if count > cap {
        return Err(Error::SubsetCapExceeded { n, q, count, cap });
    }
    let max_row_norm = (0..n).map(|i| x.matrix().row(i).norm()).fold(0.0f64, f64::max);
    let threshold = TAU_SING * max_row_norm.powi(q as i32);
    let mut n0 = 0usize;
    for idx in q_subsets(n, q) {
        let d = det_lu(&select_rows(x.matrix(), &idx));
        if d.abs() <= threshold {
            n0 += 1;
        }
    }
    let total = count as usize;
    Ok(DegeneracyReport {
        n0_degenerate: n0,
        n1_nondegenerate: total - n0,
        is_generic: n0 == 0,
        rank: x.rank(),
    })
}

/// Smallest singular value over all q-subset row submatrices X_I.
/// Strictly positive iff X is generic. Subject to the subset cap.
pub fn min_subset_sigma(x: &DesignMatrix, cap: u128) -> Result<f64> {
    let (n, q) = (x.n(), x.q());
    let count = binomial_u128(n, q);
    if count > cap {
        return Err(Error::SubsetCapExceeded { n, q, count, cap });
    }
    let mut min_sigma = f64::INFINITY;
    for idx in q_subsets(n, q) {
        let sub = select_rows(x.matrix(), &idx);
        let sv = sub.singular_values();
        let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        min_sigma = min_sigma.min(smin);
    }
    Ok(min_sigma)
}

/// True iff col(X) = col(Xbar), tested as rank [X | Xbar] = rank X = rank Xbar
/// on singular values with the TAU_SING threshold.
pub fn column_space_equal(x: &DesignMatrix, xbar: &DesignMatrix) -> Result<bool> {
    if x.n() != xbar.n() || x.q() != xbar.q() {
        return Err(Error::DimensionMismatch(format!(
            "designs are {}x{} and {}x{}",
            x.n(),
            x.q(),
            xbar.n(),
            xbar.q()
        )));
    }
    let n = x.n();
    let q = x.q();
    let mut stacked = DMatrix::zeros(n, 2 * q);
    stacked.view_mut((0, 0), (n, q)).copy_from(x.matrix());
    stacked.view_mut((0, q), (n, q)).copy_from(xbar.matrix());
    let r_both = numeric_rank(&stacked);
    Ok(r_both == x.rank() && x.rank() == xbar.rank())
}
