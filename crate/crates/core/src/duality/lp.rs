//! Margin LP for linear separation.
//!
//! A response y is separated by the design X when some beta satisfies
//! (2 y_i - 1) x_i beta > 0 for every i, which is exactly the condition under
//! which the logistic MLE fails to exist. The constructive test maximizes the
//! margin t subject to (2y_i - 1) x_i beta >= t and |beta_j| <= 1; y is
//! declared separated when the optimum exceeds a small positive epsilon.
//!
//! The solver is a dense tableau simplex with Bland's rule. Instances here are
//! small (q + 1 structural variables), so simplicity beats speed.

use nalgebra::DMatrix;

pub const SEPARATION_MARGIN: f64 = 1e-7;

#[derive(Debug, Clone)]
pub struct SeparationResult {
    pub separated: bool,
    /// Optimal margin of the LP (>= 0).
    pub margin: f64,
    /// A separating direction when one exists, |beta|_inf <= 1.
    pub direction: Option<Vec<f64>>,
}

/// max c.x  s.t.  A x <= b, x >= 0, with b >= 0 (slack basis start).
/// Returns (objective, primal solution). Bland's rule, so it terminates.
fn simplex_max(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> (f64, Vec<f64>) {
    let m = a.len();
    let nv = c.len();
    let cols = nv + m + 1;
    let mut t = vec![vec![0.0f64; cols]; m + 1];
    for i in 0..m {
        for j in 0..nv {
            t[i][j] = a[i][j];
        }
        t[i][nv + i] = 1.0;
        t[i][cols - 1] = b[i];
    }
    for j in 0..nv {
        t[m][j] = -c[j];
    }
    let mut basis: Vec<usize> = (nv..nv + m).collect();

    loop {
        // entering: lowest-index column with negative reduced cost
        let mut enter = None;
        for j in 0..cols - 1 {
            if t[m][j] < -1e-12 {
                enter = Some(j);
                break;
            }
        }
        let Some(e) = enter else { break };
        // leaving: min ratio, ties by lowest basis index
        let mut leave: Option<usize> = None;
        let mut best = f64::INFINITY;
        for i in 0..m {
            if t[i][e] > 1e-12 {
                let ratio = t[i][cols - 1] / t[i][e];
                let better = ratio < best - 1e-15
                    || ((ratio - best).abs() <= 1e-15
                        && leave.map_or(true, |l| basis[i] < basis[l]));
                if better {
                    best = ratio;
                    leave = Some(i);
                }
            }
        }
        let Some(l) = leave else {
            // unbounded; cannot happen with our bounded feasible sets
            break;
        };
        let piv = t[l][e];
        for j in 0..cols {
            t[l][j] /= piv;
        }
        for i in 0..=m {
            if i != l && t[i][e].abs() > 0.0 {
                let f = t[i][e];
                for j in 0..cols {
                    t[i][j] -= f * t[l][j];
                }
            }
        }
        basis[l] = e;
    }

    let mut x = vec![0.0f64; nv];
    for i in 0..m {
        if basis[i] < nv {
            x[basis[i]] = t[i][cols - 1];
        }
    }
    (t[m][cols - 1], x)
}

/// Tests whether the 0/1 response `y` is linearly separated by the rows of
/// `x` (n x q). Margin-LP per module docs.
pub fn separation_test(x: &DMatrix<f64>, y: &[u8]) -> SeparationResult {
    let n = x.nrows();
    let q = x.ncols();
    assert_eq!(y.len(), n, "response length must match row count");
    // structural vars: u_0..u_{q-1}, v_0..v_{q-1}, t
    let nv = 2 * q + 1;
    let mut a = Vec::with_capacity(n + 2 * q + 1);
    let mut b = Vec::with_capacity(n + 2 * q + 1);
    for i in 0..n {
        let s = 2.0 * y[i] as f64 - 1.0;
        let mut row = vec![0.0; nv];
        for j in 0..q {
            row[j] = -s * x[(i, j)];
            row[q + j] = s * x[(i, j)];
        }
        row[2 * q] = 1.0;
        a.push(row);
        b.push(0.0);
    }
    for j in 0..2 * q {
        let mut row = vec![0.0; nv];
        row[j] = 1.0;
        a.push(row);
        b.push(1.0);
    }
    let mut row = vec![0.0; nv];
    row[2 * q] = 1.0;
    a.push(row);
    b.push(1.0);

    let mut c = vec![0.0; nv];
    c[2 * q] = 1.0;
    let (margin, sol) = simplex_max(&a, &b, &c);

    let separated = margin >= SEPARATION_MARGIN;
    let direction = if separated {
        Some((0..q).map(|j| sol[j] - sol[q + j]).collect())
    } else {
        None
    };
    SeparationResult { separated, margin: margin.max(0.0), direction }
}
