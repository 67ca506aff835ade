//! l1-regularized logistic regression path fitting.
//!
//! Proximal coordinate descent on the IRLS quadratic approximation
//! (glmnet-style), with warm starts along a log-spaced lambda grid and
//! active-set cycling. The objective at each lambda is
//!
//! ```text
//! min over (b0, beta) of  -(1/n) loglik(b0, beta) + lambda * |beta|_1
//! ```
//!
//! with the intercept unpenalized. Columns may be dense or 0/1 indicator
//! lists; the image-denoising dictionaries are all indicators, which makes a
//! full coordinate sweep O(total nnz).

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::sigmoid;
use crate::linalg::DesignMatrix;

/// One penalized column.
#[derive(Debug, Clone)]
pub enum Column {
    Dense(Vec<f64>),
    /// Sorted row indices carrying the value 1.
    Indicator(Vec<u32>),
}

/// Penalized design for the path fitter. The unpenalized intercept column is
/// implicit and handled separately.
#[derive(Debug, Clone)]
pub struct LassoDesign {
    n: usize,
    cols: Vec<Column>,
}

impl LassoDesign {
    pub fn new(n: usize, cols: Vec<Column>) -> Result<Self> {
        for (j, c) in cols.iter().enumerate() {
            match c {
                Column::Dense(v) if v.len() != n => {
                    return Err(Error::DimensionMismatch(format!(
                        "dense column {j} has {} entries, expected {n}",
                        v.len()
                    )));
                }
                Column::Indicator(idx) => {
                    if idx.windows(2).any(|w| w[0] >= w[1]) {
                        return Err(Error::InvalidParameter(format!(
                            "indicator column {j} must be strictly increasing"
                        )));
                    }
                    if idx.last().is_some_and(|&l| l as usize >= n) {
                        return Err(Error::IndexOutOfRange { index: *idx.last().unwrap() as usize, n });
                    }
                }
                _ => {}
            }
        }
        Ok(Self { n, cols })
    }

    pub fn from_design(x: &DesignMatrix) -> Self {
        let cols = (0..x.q())
            .map(|j| Column::Dense((0..x.n()).map(|i| x.matrix()[(i, j)]).collect()))
            .collect();
        Self { n: x.n(), cols }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> usize {
        self.cols.len()
    }

    fn col_dot(&self, j: usize, v: &[f64]) -> f64 {
        match &self.cols[j] {
            Column::Dense(c) => c.iter().zip(v).map(|(a, b)| a * b).sum(),
            Column::Indicator(idx) => idx.iter().map(|&i| v[i as usize]).sum(),
        }
    }

    fn col_weighted_dot(&self, j: usize, w: &[f64], v: &[f64]) -> f64 {
        match &self.cols[j] {
            Column::Dense(c) => (0..self.n).map(|i| c[i] * w[i] * v[i]).sum(),
            Column::Indicator(idx) => idx.iter().map(|&i| w[i as usize] * v[i as usize]).sum(),
        }
    }

    fn col_weighted_sq(&self, j: usize, w: &[f64]) -> f64 {
        match &self.cols[j] {
            Column::Dense(c) => (0..self.n).map(|i| c[i] * c[i] * w[i]).sum(),
            Column::Indicator(idx) => idx.iter().map(|&i| w[i as usize]).sum(),
        }
    }

    fn axpy_col(&self, j: usize, scale: f64, out: &mut [f64]) {
        if scale == 0.0 {
            return;
        }
        match &self.cols[j] {
            Column::Dense(c) => {
                for i in 0..self.n {
                    out[i] += scale * c[i];
                }
            }
            Column::Indicator(idx) => {
                for &i in idx {
                    out[i as usize] += scale;
                }
            }
        }
    }

    /// out += scale * column j. Public variant for predictor assembly.
    pub fn accumulate_col(&self, j: usize, scale: f64, out: &mut [f64]) {
        self.axpy_col(j, scale, out);
    }

    /// Rows not touched by any of the `active` columns (zero rows of the
    /// submodel design, intercept excluded).
    pub fn uncovered_rows(&self, active: &[usize]) -> usize {
        let mut covered = vec![false; self.n];
        for &j in active {
            match &self.cols[j] {
                Column::Dense(c) => {
                    for i in 0..self.n {
                        if c[i] != 0.0 {
                            covered[i] = true;
                        }
                    }
                }
                Column::Indicator(idx) => {
                    for &i in idx {
                        covered[i as usize] = true;
                    }
                }
            }
        }
        covered.iter().filter(|&&c| !c).count()
    }

    /// Restriction of the design to the rows flagged in `keep`.
    pub fn subset_rows(&self, keep: &[bool]) -> Self {
        assert_eq!(keep.len(), self.n);
        let mut new_index = vec![u32::MAX; self.n];
        let mut m = 0u32;
        for i in 0..self.n {
            if keep[i] {
                new_index[i] = m;
                m += 1;
            }
        }
        let cols = self
            .cols
            .iter()
            .map(|c| match c {
                Column::Dense(v) => Column::Dense(
                    (0..self.n).filter(|&i| keep[i]).map(|i| v[i]).collect(),
                ),
                Column::Indicator(idx) => Column::Indicator(
                    idx.iter()
                        .filter(|&&i| keep[i as usize])
                        .map(|&i| new_index[i as usize])
                        .collect(),
                ),
            })
            .collect();
        Self { n: m as usize, cols }
    }
}

#[derive(Debug, Clone)]
pub struct LassoConfig {
    pub n_lambdas: usize,
    pub lambda_min_ratio: f64,
    pub intercept: bool,
    /// Subgradient residual tolerance certified at every reported lambda.
    pub tol_kkt: f64,
    pub max_outer: usize,
    pub max_sweeps: usize,
}

impl Default for LassoConfig {
    fn default() -> Self {
        Self {
            n_lambdas: 100,
            lambda_min_ratio: 1e-3,
            intercept: true,
            tol_kkt: 1e-6,
            max_outer: 60,
            max_sweeps: 300,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LassoPath {
    /// Strictly decreasing penalty grid.
    pub lambdas: Vec<f64>,
    pub intercepts: Vec<f64>,
    /// Dense coefficient vector per lambda.
    pub betas: Vec<Vec<f64>>,
    /// Binomial deviance -2 loglik per lambda.
    pub dev: Vec<f64>,
    /// Active-set size per lambda (intercept not counted).
    pub nonzero: Vec<usize>,
    /// KKT certification per lambda.
    pub converged: Vec<bool>,
    pub intercept: bool,
    pub n: usize,
}

impl LassoPath {
    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn active_set(&self, k: usize) -> Vec<usize> {
        self.betas[k]
            .iter()
            .enumerate()
            .filter(|(_, &b)| b != 0.0)
            .map(|(j, _)| j)
            .collect()
    }

    /// Log-likelihood at path point k (nats).
    pub fn loglik(&self, k: usize) -> f64 {
        -0.5 * self.dev[k]
    }
}

fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Exact solver for the penalized weighted least squares subproblem
///   min (1/2n) sum w_i (z_i - b0 - x_i beta)^2 + lambda |beta|_1
/// by coordinate descent. Exposed for the closed-form soft-threshold oracle
/// tests on orthogonal designs.
pub(crate) fn pwls_lasso(
    design: &LassoDesign,
    w: &[f64],
    z: &[f64],
    lambda: f64,
    intercept: bool,
    b0: &mut f64,
    beta: &mut [f64],
    max_sweeps: usize,
) -> bool {
    let n = design.n();
    let nf = n as f64;
    let q = design.q();
    // residual r = z - b0 - X beta
    let mut r: Vec<f64> = (0..n).map(|i| z[i] - *b0).collect();
    for j in 0..q {
        design.axpy_col(j, -beta[j], &mut r);
    }
    let wsum: f64 = w.iter().sum();
    let cj: Vec<f64> = (0..q).map(|j| design.col_weighted_sq(j, w) / nf).collect();

    let sweep = |r: &mut Vec<f64>, b0: &mut f64, beta: &mut [f64], cols: &[usize]| -> f64 {
        let mut max_delta = 0.0f64;
        if intercept && wsum > 0.0 {
            let d0: f64 = (0..n).map(|i| w[i] * r[i]).sum::<f64>() / wsum;
            *b0 += d0;
            for v in r.iter_mut() {
                *v -= d0;
            }
            max_delta = max_delta.max(d0.abs());
        }
        for &j in cols {
            if cj[j] <= 0.0 {
                continue;
            }
            let rho = design.col_weighted_dot(j, w, r) / nf + cj[j] * beta[j];
            let new = soft_threshold(rho, lambda) / cj[j];
            let d = new - beta[j];
            if d != 0.0 {
                design.axpy_col(j, -d, r);
                beta[j] = new;
                max_delta = max_delta.max(d.abs());
            }
        }
        max_delta
    };

    let all: Vec<usize> = (0..q).collect();
    let tol = 1e-11;
    let mut sweeps = 0usize;
    loop {
        // full pass picks up violators
        let delta_full = sweep(&mut r, b0, beta, &all);
        sweeps += 1;
        if delta_full < tol || sweeps >= max_sweeps {
            return delta_full < tol;
        }
        // cycle the active set until stable
        loop {
            let active: Vec<usize> = (0..q).filter(|&j| beta[j] != 0.0).collect();
            let d = sweep(&mut r, b0, beta, &active);
            sweeps += 1;
            if d < tol || sweeps >= max_sweeps {
                break;
            }
        }
    }
}

/// glmnet-style probability clamp inside the IRLS weights.
fn irls_prob(eta: f64) -> (f64, f64) {
    let p = sigmoid(eta);
    let pc = p.clamp(1e-5, 1.0 - 1e-5);
    (p, pc * (1.0 - pc))
}

/// Deviance with probabilities clamped at 1e-12; clamping is for evaluation
/// only and never enters the fitting algebra.
pub fn binomial_deviance(eta: &[f64], y: &[u8]) -> f64 {
    let mut dev = 0.0;
    for i in 0..y.len() {
        let p = sigmoid(eta[i]).clamp(1e-12, 1.0 - 1e-12);
        dev -= 2.0 * if y[i] == 1 { p.ln() } else { (1.0 - p).ln() };
    }
    dev
}

/// Largest penalty with an all-zero solution: |X^T (y - p_null)|_inf / n.
pub fn lambda_max(design: &LassoDesign, y: &[u8], intercept: bool) -> Result<f64> {
    let n = design.n();
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "response has {} entries, design has {n} rows",
            y.len()
        )));
    }
    let ybar = y.iter().map(|&v| v as f64).sum::<f64>() / n as f64;
    if intercept && !(ybar > 0.0 && ybar < 1.0) {
        return Err(Error::InvalidParameter("response is constant; no path exists".into()));
    }
    let p0 = if intercept { ybar } else { 0.5 };
    let resid: Vec<f64> = y.iter().map(|&v| v as f64 - p0).collect();
    let mut lmax = 0.0f64;
    for j in 0..design.q() {
        lmax = lmax.max((design.col_dot(j, &resid) / n as f64).abs());
    }
    if lmax <= 0.0 {
        return Err(Error::InvalidParameter(
            "zero gradient at the null model; no informative path".into(),
        ));
    }
    Ok(lmax)
}

pub fn fit_lasso_path(design: &LassoDesign, y: &[u8], cfg: &LassoConfig) -> Result<LassoPath> {
    let lmax = lambda_max(design, y, cfg.intercept)?;
    if cfg.n_lambdas < 1 || !(cfg.lambda_min_ratio > 0.0 && cfg.lambda_min_ratio < 1.0) {
        return Err(Error::InvalidParameter("bad lambda grid parameters".into()));
    }
    let k = cfg.n_lambdas;
    // one-ulp-scale guard so the grid head provably zeroes every coefficient
    // even though lambda_max and the CD gradient take different float paths
    let head = lmax * (1.0 + 1e-9);
    let lambdas: Vec<f64> = (0..k)
        .map(|i| {
            if k == 1 {
                head
            } else {
                head * cfg.lambda_min_ratio.powf(i as f64 / (k - 1) as f64)
            }
        })
        .collect();
    fit_lasso_path_with_lambdas(design, y, &lambdas, cfg)
}

/// Path fit on an explicit (strictly decreasing) lambda grid; used directly
/// by cross-validation so every fold shares one grid.
pub fn fit_lasso_path_with_lambdas(
    design: &LassoDesign,
    y: &[u8],
    lambdas: &[f64],
    cfg: &LassoConfig,
) -> Result<LassoPath> {
    let n = design.n();
    let nf = n as f64;
    let q = design.q();
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "response has {} entries, design has {n} rows",
            y.len()
        )));
    }
    if lambdas.windows(2).any(|w| w[0] <= w[1]) {
        return Err(Error::InvalidParameter("lambda grid must be strictly decreasing".into()));
    }

    let mut b0 = if cfg.intercept {
        let ybar = y.iter().map(|&v| v as f64).sum::<f64>() / nf;
        (ybar.clamp(1e-12, 1.0 - 1e-12) / (1.0 - ybar.clamp(1e-12, 1.0 - 1e-12))).ln()
    } else {
        0.0
    };
    let mut beta = vec![0.0f64; q];
    let mut eta = vec![b0; n];

    let mut path = LassoPath {
        lambdas: lambdas.to_vec(),
        intercepts: Vec::with_capacity(lambdas.len()),
        betas: Vec::with_capacity(lambdas.len()),
        dev: Vec::with_capacity(lambdas.len()),
        nonzero: Vec::with_capacity(lambdas.len()),
        converged: Vec::with_capacity(lambdas.len()),
        intercept: cfg.intercept,
        n,
    };

    let mut w = vec![0.0f64; n];
    let mut z = vec![0.0f64; n];
    for &lambda in lambdas {
        let mut kkt_ok = false;
        for _outer in 0..cfg.max_outer {
            // quadratic approximation at the current eta
            for i in 0..n {
                let (p, wi) = irls_prob(eta[i]);
                w[i] = wi;
                z[i] = eta[i] + (y[i] as f64 - p) / wi;
            }
            let old_b0 = b0;
            let old_beta = beta.clone();
            pwls_lasso(design, &w, &z, lambda, cfg.intercept, &mut b0, &mut beta, cfg.max_sweeps);
            // refresh eta from scratch to avoid drift
            for e in eta.iter_mut() {
                *e = b0;
            }
            for j in 0..q {
                design.axpy_col(j, beta[j], &mut eta);
            }
            let step = beta
                .iter()
                .zip(old_beta.iter())
                .map(|(a, b)| (a - b).abs())
                .fold((b0 - old_b0).abs(), f64::max);
            // KKT on the true gradient
            let resid: Vec<f64> = (0..n).map(|i| y[i] as f64 - sigmoid(eta[i])).collect();
            kkt_ok = true;
            if cfg.intercept {
                let g0: f64 = resid.iter().sum::<f64>() / nf;
                if g0.abs() > cfg.tol_kkt {
                    kkt_ok = false;
                }
            }
            if kkt_ok {
                for j in 0..q {
                    let g = design.col_dot(j, &resid) / nf;
                    let ok = if beta[j] != 0.0 {
                        (g - lambda * beta[j].signum()).abs() <= cfg.tol_kkt
                    } else {
                        g.abs() <= lambda + cfg.tol_kkt
                    };
                    if !ok {
                        kkt_ok = false;
                        break;
                    }
                }
            }
            if kkt_ok {
                break;
            }
            if step < 1e-13 {
                break; // stalled; flagged below
            }
        }
        path.intercepts.push(b0);
        path.betas.push(beta.clone());
        path.dev.push(binomial_deviance(&eta, y));
        path.nonzero.push(beta.iter().filter(|&&b| b != 0.0).count());
        path.converged.push(kkt_ok);
    }
    Ok(path)
}

#[derive(Debug, Clone)]
pub struct CvResult {
    pub selected_index: usize,
    /// Mean held-out deviance per observation, per lambda.
    pub mean_deviance: Vec<f64>,
    pub fold_of: Vec<usize>,
}

/// K-fold cross-validation over a fitted path's lambda grid. Deterministic
/// under `seed`; ties in the deviance curve pick the sparser (larger) lambda.
pub fn cross_validate_path(
    design: &LassoDesign,
    y: &[u8],
    path: &LassoPath,
    folds: usize,
    seed: u64,
    cfg: &LassoConfig,
) -> Result<CvResult> {
    let n = design.n();
    if folds < 2 || folds > n {
        return Err(Error::InvalidParameter(format!(
            "folds must lie in [2, n]; got {folds} with n = {n}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let mut fold_of = vec![0usize; n];
    for (pos, &i) in order.iter().enumerate() {
        fold_of[i] = pos % folds;
    }
    cross_validate_with_assignment(design, y, path, &fold_of, folds, cfg)
}

pub(crate) fn cross_validate_with_assignment(
    design: &LassoDesign,
    y: &[u8],
    path: &LassoPath,
    fold_of: &[usize],
    folds: usize,
    cfg: &LassoConfig,
) -> Result<CvResult> {
    let n = design.n();
    let mut dev_sum = vec![0.0f64; path.len()];
    for fold in 0..folds {
        let keep: Vec<bool> = (0..n).map(|i| fold_of[i] != fold).collect();
        let train = design.subset_rows(&keep);
        let y_train: Vec<u8> = (0..n).filter(|&i| keep[i]).map(|i| y[i]).collect();
        let sub = fit_lasso_path_with_lambdas(&train, &y_train, &path.lambdas, cfg)?;
        for k in 0..path.len() {
            // full-length predictor, then read off the held-out rows
            let mut eta = vec![sub.intercepts[k]; n];
            for (j, &b) in sub.betas[k].iter().enumerate() {
                design.axpy_col(j, b, &mut eta);
            }
            for i in 0..n {
                if fold_of[i] == fold {
                    let p = sigmoid(eta[i]).clamp(1e-12, 1.0 - 1e-12);
                    dev_sum[k] -=
                        2.0 * if y[i] == 1 { p.ln() } else { (1.0 - p).ln() };
                }
            }
        }
    }
    let mean_deviance: Vec<f64> = dev_sum.iter().map(|d| d / n as f64).collect();
    let mut selected_index = 0usize;
    for k in 1..mean_deviance.len() {
        if mean_deviance[k] < mean_deviance[selected_index] {
            selected_index = k;
        }
    }
    Ok(CvResult { selected_index, mean_deviance, fold_of: fold_of.to_vec() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::{fit_mle_default, BinaryResponse};
    use rand::Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn lambda_max_zeroes_the_path_head() {
        let mut r = rng(1);
        let n = 40;
        let cols: Vec<Column> = (0..6)
            .map(|_| Column::Dense((0..n).map(|_| r.random::<f64>() * 2.0 - 1.0).collect()))
            .collect();
        let design = LassoDesign::new(n, cols).unwrap();
        let y: Vec<u8> = (0..n).map(|i| (i % 3 == 0) as u8).collect();
        let cfg = LassoConfig { n_lambdas: 5, ..Default::default() };
        let path = fit_lasso_path(&design, &y, &cfg).unwrap();
        assert_eq!(path.nonzero[0], 0, "all penalized coefficients zero at lambda_max");
        assert!(path.converged[0]);
        // KKT at the boundary: |g_j| <= lambda_max holds with equality for
        // the maximizing column
        let lmax = lambda_max(&design, &y, true).unwrap();
        assert!((path.lambdas[0] - lmax).abs() < 1e-8 * lmax);
    }

    #[test]
    fn small_lambda_approaches_unpenalized_mle() {
        let mut r = rng(2);
        let n = 60;
        let data: Vec<f64> = (0..n * 2).map(|_| r.random::<f64>() * 2.0 - 1.0).collect();
        let x = DesignMatrix::from_rows(n, 2, &data).unwrap();
        // simulate a stable response
        let y: Vec<u8> = (0..n)
            .map(|i| {
                let eta = 0.8 * x.matrix()[(i, 0)] - 0.5 * x.matrix()[(i, 1)];
                (r.random::<f64>() < sigmoid(eta)) as u8
            })
            .collect();

        let design = LassoDesign::from_design(&x);
        let cfg = LassoConfig {
            n_lambdas: 60,
            lambda_min_ratio: 1e-6,
            intercept: false,
            ..Default::default()
        };
        let path = fit_lasso_path(&design, &y, &cfg).unwrap();
        let fit = fit_mle_default(&x, &BinaryResponse::new(y.clone()).unwrap()).unwrap();
        assert!(fit.converged);
        let last = path.len() - 1;
        for j in 0..2 {
            assert!(
                (path.betas[last][j] - fit.beta_hat.0[j]).abs() < 1e-4,
                "lasso {} vs mle {}",
                path.betas[last][j],
                fit.beta_hat.0[j]
            );
        }
    }

    #[test]
    fn kkt_residuals_certified_along_path() {
        let mut r = rng(3);
        let n = 50;
        let cols: Vec<Column> = (0..8)
            .map(|_| Column::Dense((0..n).map(|_| r.random::<f64>() * 2.0 - 1.0).collect()))
            .collect();
        let design = LassoDesign::new(n, cols).unwrap();
        let y: Vec<u8> = (0..n).map(|_| (r.random::<f64>() < 0.4) as u8).collect();
        let cfg = LassoConfig { n_lambdas: 30, ..Default::default() };
        let path = fit_lasso_path(&design, &y, &cfg).unwrap();
        assert!(path.converged.iter().all(|&c| c), "every path point certified");
    }

    #[test]
    fn orthogonal_design_matches_soft_threshold_oracle() {
        // weighted-orthogonal columns: the PWLS subproblem decouples and the
        // exact solution is S(rho_j, lambda) / c_j
        let n = 8usize;
        let mut cols = Vec::new();
        for j in 0..4usize {
            let mut c = vec![0.0; n];
            c[2 * j] = 1.0;
            c[2 * j + 1] = -1.0;
            cols.push(Column::Dense(c));
        }
        let design = LassoDesign::new(n, cols).unwrap();
        let w = vec![1.0; n];
        let z: Vec<f64> = vec![2.0, -1.0, 0.3, -0.1, -0.8, 0.9, 0.05, -0.02];
        let lambda = 0.1;
        let mut b0 = 0.0;
        let mut beta = vec![0.0; 4];
        let done = pwls_lasso(&design, &w, &z, lambda, false, &mut b0, &mut beta, 200);
        assert!(done);
        let nf = n as f64;
        for j in 0..4 {
            let cj = 2.0 / nf;
            let rho = (z[2 * j] - z[2 * j + 1]) / nf;
            let want = soft_threshold(rho, lambda) / cj;
            assert!((beta[j] - want).abs() < 1e-6, "j={j} got {} want {want}", beta[j]);
        }
    }

    #[test]
    fn indicator_and_dense_columns_agree() {
        let n = 30usize;
        let idx: Vec<u32> = vec![2, 5, 11, 17, 23];
        let mut dense = vec![0.0; n];
        for &i in &idx {
            dense[i as usize] = 1.0;
        }
        let d1 = LassoDesign::new(n, vec![Column::Indicator(idx)]).unwrap();
        let d2 = LassoDesign::new(n, vec![Column::Dense(dense)]).unwrap();
        let y: Vec<u8> = (0..n).map(|i| (i % 4 == 0) as u8).collect();
        let cfg = LassoConfig { n_lambdas: 12, ..Default::default() };
        let p1 = fit_lasso_path(&d1, &y, &cfg).unwrap();
        let p2 = fit_lasso_path(&d2, &y, &cfg).unwrap();
        for k in 0..p1.len() {
            assert!((p1.betas[k][0] - p2.betas[k][0]).abs() < 1e-12);
            assert!((p1.intercepts[k] - p2.intercepts[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn uncovered_rows_counts_zero_rows_of_submodel() {
        let n = 10usize;
        let design = LassoDesign::new(
            n,
            vec![
                Column::Indicator(vec![0, 1, 2]),
                Column::Indicator(vec![2, 3]),
                Column::Indicator(vec![8]),
            ],
        )
        .unwrap();
        assert_eq!(design.uncovered_rows(&[0, 1]), 6);
        assert_eq!(design.uncovered_rows(&[2]), 9);
        assert_eq!(design.uncovered_rows(&[]), 10);
    }

    #[test]
    fn loo_matches_direct_enumeration() {
        let n = 10usize;
        let mut r = rng(5);
        let cols: Vec<Column> = (0..2)
            .map(|_| Column::Dense((0..n).map(|_| r.random::<f64>() * 2.0 - 1.0).collect()))
            .collect();
        let design = LassoDesign::new(n, cols).unwrap();
        let y: Vec<u8> = vec![1, 0, 1, 1, 0, 0, 1, 0, 1, 0];
        let cfg = LassoConfig { n_lambdas: 8, ..Default::default() };
        let path = fit_lasso_path(&design, &y, &cfg).unwrap();

        let cv = cross_validate_path(&design, &y, &path, n, 99, &cfg).unwrap();

        // direct leave-one-out enumeration, independent accumulation
        let mut dev = vec![0.0f64; path.len()];
        for i in 0..n {
            let keep: Vec<bool> = (0..n).map(|k| k != i).collect();
            let train = design.subset_rows(&keep);
            let y_train: Vec<u8> = (0..n).filter(|&k| k != i).map(|k| y[k]).collect();
            let sub = fit_lasso_path_with_lambdas(&train, &y_train, &path.lambdas, &cfg).unwrap();
            for k in 0..path.len() {
                let mut eta = sub.intercepts[k];
                for (j, &b) in sub.betas[k].iter().enumerate() {
                    if b != 0.0 {
                        if let Column::Dense(c) = &design.cols[j] {
                            eta += b * c[i];
                        }
                    }
                }
                let p = sigmoid(eta).clamp(1e-12, 1.0 - 1e-12);
                dev[k] -= 2.0 * if y[i] == 1 { p.ln() } else { (1.0 - p).ln() };
            }
        }
        let mut best = 0usize;
        for k in 1..dev.len() {
            if dev[k] < dev[best] {
                best = k;
            }
        }
        assert_eq!(cv.selected_index, best);
        for k in 0..dev.len() {
            assert!((cv.mean_deviance[k] - dev[k] / n as f64).abs() < 1e-10);
        }
    }

    #[test]
    fn identical_folds_score_identically() {
        // three copies of the same block, assigned to three folds
        let block = 8usize;
        let n = 3 * block;
        let mut r = rng(6);
        let base: Vec<f64> = (0..block).map(|_| r.random::<f64>() * 2.0 - 1.0).collect();
        let col: Vec<f64> = (0..n).map(|i| base[i % block]).collect();
        let design = LassoDesign::new(n, vec![Column::Dense(col)]).unwrap();
        let yb: Vec<u8> = (0..block).map(|i| (i % 2) as u8).collect();
        let y: Vec<u8> = (0..n).map(|i| yb[i % block]).collect();
        let fold_of: Vec<usize> = (0..n).map(|i| i / block).collect();
        let cfg = LassoConfig { n_lambdas: 6, ..Default::default() };
        let path = fit_lasso_path(&design, &y, &cfg).unwrap();
        let cv = cross_validate_with_assignment(&design, &y, &path, &fold_of, 3, &cfg).unwrap();
        // per-fold deviances equal means the mean is exactly each fold's value;
        // verify by recomputing one fold by hand
        let keep: Vec<bool> = (0..n).map(|i| fold_of[i] != 0).collect();
        let train = design.subset_rows(&keep);
        let y_train: Vec<u8> = (0..n).filter(|&i| keep[i]).map(|i| y[i]).collect();
        let sub = fit_lasso_path_with_lambdas(&train, &y_train, &path.lambdas, &cfg).unwrap();
        for k in 0..path.len() {
            let mut dev0 = 0.0;
            for i in 0..n {
                if fold_of[i] == 0 {
                    let mut eta = sub.intercepts[k];
                    if let Column::Dense(c) = &design.cols[0] {
                        eta += sub.betas[k][0] * c[i];
                    }
                    let p = sigmoid(eta).clamp(1e-12, 1.0 - 1e-12);
                    dev0 -= 2.0 * if y[i] == 1 { p.ln() } else { (1.0 - p).ln() };
                }
            }
            assert!((cv.mean_deviance[k] - 3.0 * dev0 / n as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn cv_rejects_bad_fold_counts() {
        let design = LassoDesign::new(4, vec![Column::Dense(vec![1.0, -1.0, 0.5, -0.5])]).unwrap();
        let y = vec![1u8, 0, 1, 0];
        let cfg = LassoConfig { n_lambdas: 3, ..Default::default() };
        let path = fit_lasso_path(&design, &y, &cfg).unwrap();
        assert!(cross_validate_path(&design, &y, &path, 1, 0, &cfg).is_err());
        assert!(cross_validate_path(&design, &y, &path, 5, 0, &cfg).is_err());
    }
}
