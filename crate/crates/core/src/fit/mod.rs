//! Logistic regression fitting.
//!
//! Exact maximum likelihood by Newton iterations on the natural parameter,
//! with step-halving line search. The Newton direction is built from the same
//! `fisher_info` the volume code integrates, so the fitting and geometry
//! paths cannot drift apart. Separation (nonexistence of the MLE) manifests
//! as parameter escape to infinity; the escape guard triggers the margin-LP
//! certificate from the duality module.

pub mod lasso;

pub use lasso::{
    binomial_deviance, cross_validate_path, fit_lasso_path, fit_lasso_path_with_lambdas, Column,
    CvResult, LassoConfig, LassoDesign, LassoPath,
};

use nalgebra::{Cholesky, DVector};

use crate::duality::lp;
use crate::error::{Error, Result};
use crate::geometry::{fisher_info, sigmoid, NaturalParam};
use crate::linalg::DesignMatrix;

/// Binary response vector with entries in {0, 1}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryResponse(Vec<u8>);

impl BinaryResponse {
    pub fn new(y: Vec<u8>) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::EmptyInput("response".into()));
        }
        if y.iter().any(|&v| v > 1) {
            return Err(Error::InvalidParameter("response entries must be 0 or 1".into()));
        }
        Ok(Self(y))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn mean(&self) -> f64 {
        self.0.iter().map(|&v| v as f64).sum::<f64>() / self.0.len() as f64
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub beta_hat: NaturalParam,
    /// Log-likelihood at `beta_hat` (nats). For separated fits this is the
    /// value at the last iterate, not a maximum (none exists).
    pub loglik: f64,
    pub converged: bool,
    pub separated: bool,
    pub iterations: usize,
}

impl FitResult {
    /// Neither converged nor certified separated.
    pub fn ambiguous(&self) -> bool {
        !self.converged && !self.separated
    }
}

/// ln(1 + e^u) without overflow.
fn softplus(u: f64) -> f64 {
    if u > 0.0 {
        u + (-u).exp().ln_1p()
    } else {
        u.exp().ln_1p()
    }
}

/// Log-likelihood l(beta) = y^T X beta - sum softplus(x_i beta).
pub fn loglik(x: &DesignMatrix, beta: &NaturalParam, y: &BinaryResponse) -> Result<f64> {
    if y.len() != x.n() {
        return Err(Error::DimensionMismatch(format!(
            "response has {} entries, design has {} rows",
            y.len(),
            x.n()
        )));
    }
    let lambda = x.matrix() * &beta.0;
    let mut acc = 0.0;
    for i in 0..x.n() {
        acc += y.as_slice()[i] as f64 * lambda[i] - softplus(lambda[i]);
    }
    Ok(acc)
}

/// Gradient X^T (y - e(X beta)).
pub fn loglik_gradient(x: &DesignMatrix, beta: &NaturalParam, y: &BinaryResponse) -> DVector<f64> {
    let lambda = x.matrix() * &beta.0;
    let resid = DVector::from_fn(x.n(), |i, _| y.as_slice()[i] as f64 - sigmoid(lambda[i]));
    x.matrix().transpose() * resid
}

/// Norm guard beyond which the fit attempts a separation certificate.
const ESCAPE_NORM: f64 = 1e4;

pub fn fit_mle(
    x: &DesignMatrix,
    y: &BinaryResponse,
    tol_grad: f64,
    max_iter: usize,
) -> Result<FitResult> {
    if !x.is_full_rank() {
        return Err(Error::RankDeficient { rank: x.rank(), q: x.q() });
    }
    if y.len() != x.n() {
        return Err(Error::DimensionMismatch(format!(
            "response has {} entries, design has {} rows",
            y.len(),
            x.n()
        )));
    }
    let q = x.q();
    let mut beta = NaturalParam::zeros(q);
    let mut ll = loglik(x, &beta, y)?;
    let mut iterations = 0usize;

    let separated_result = |beta: NaturalParam, ll: f64, it: usize| FitResult {
        beta_hat: beta,
        loglik: ll,
        converged: false,
        separated: true,
        iterations: it,
    };

    // Saturated fitted log-odds make the gradient vanish along the escape
    // path to infinity (grad ~ e^{-|lambda|}), so a small gradient alone
    // cannot certify an MLE. The threshold sits below ln(1/tol_grad) so the
    // separation check always fires before the gradient test can lie.
    const SATURATION_LOGODDS: f64 = 12.0;

    for it in 1..=max_iter {
        iterations = it;
        let grad = loglik_gradient(x, &beta, y);
        if grad.amax() <= tol_grad {
            let saturated = (x.matrix() * &beta.0).amax() > SATURATION_LOGODDS;
            if saturated && lp::separation_test(x.matrix(), y.as_slice()).separated {
                return Ok(separated_result(beta, ll, it - 1));
            }
            return Ok(FitResult { beta_hat: beta, loglik: ll, converged: true, separated: false, iterations: it - 1 });
        }
        let fisher = fisher_info(x, &beta);
        let dir = match Cholesky::new(fisher) {
            Some(ch) => ch.solve(&grad),
            None => {
                // curvature vanished: the iterate is far out on a flat ridge
                return if lp::separation_test(x.matrix(), y.as_slice()).separated {
                    Ok(separated_result(beta, ll, it))
                } else {
                    Ok(FitResult { beta_hat: beta, loglik: ll, converged: false, separated: false, iterations: it })
                };
            }
        };
        let slope = grad.dot(&dir);
        // Once the Newton decrement falls below the float resolution of the
        // log-likelihood, the line search can only creep on rounding noise.
        // The full Newton step still collapses the gradient quadratically,
        // so switch to gradient-norm acceptance for the endgame.
        if slope <= 8.0 * f64::EPSILON * (1.0 + ll.abs()) {
            let cand = NaturalParam(&beta.0 + &dir);
            let cand_grad = loglik_gradient(x, &cand, y);
            if cand_grad.amax() < grad.amax() {
                ll = loglik(x, &cand, y)?;
                beta = cand;
                continue;
            }
            break;
        }
        let mut step = 1.0f64;
        let mut improved = false;
        for _ in 0..40 {
            let cand = NaturalParam(&beta.0 + &dir * step);
            let cand_ll = loglik(x, &cand, y)?;
            if cand_ll >= ll + 1e-4 * step * slope {
                beta = cand;
                ll = cand_ll;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            let cand = NaturalParam(&beta.0 + &dir);
            let cand_grad = loglik_gradient(x, &cand, y);
            if cand_grad.amax() < grad.amax() {
                ll = loglik(x, &cand, y)?;
                beta = cand;
            } else {
                break;
            }
        }
        if beta.0.norm() > ESCAPE_NORM {
            if lp::separation_test(x.matrix(), y.as_slice()).separated {
                return Ok(separated_result(beta, ll, it));
            }
        }
    }
    // iteration cap (or stalled line search): certify separation or report
    // the ambiguous outcome
    if lp::separation_test(x.matrix(), y.as_slice()).separated {
        return Ok(separated_result(beta, ll, iterations));
    }
    let grad = loglik_gradient(x, &beta, y);
    Ok(FitResult {
        beta_hat: beta,
        loglik: ll,
        converged: grad.amax() <= tol_grad,
        separated: false,
        iterations,
    })
}

/// [`fit_mle`] with the default gradient tolerance 1e-8 and 100 iterations.
pub fn fit_mle_default(x: &DesignMatrix, y: &BinaryResponse) -> Result<FitResult> {
    fit_mle(x, y, 1e-8, 100)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn design(n: usize, q: usize, data: &[f64]) -> DesignMatrix {
        DesignMatrix::from_rows(n, q, data).unwrap()
    }

    fn resp(bits: &[u8]) -> BinaryResponse {
        BinaryResponse::new(bits.to_vec()).unwrap()
    }

    #[test]
    fn loglik_examples() {
        let x = design(4, 2, &[1.0, 0.2, -0.3, 1.0, 0.5, -0.5, 0.9, 0.1]);
        let y = resp(&[1, 0, 1, 0]);
        let ll = loglik(&x, &NaturalParam::zeros(2), &y).unwrap();
        assert!((ll + 4.0 * 2f64.ln()).abs() < 1e-12);

        // n=1: P(y=1) = 0.75 at beta = ln 3
        let x = design(1, 1, &[1.0]);
        let y = resp(&[1]);
        let beta = NaturalParam(DVector::from_element(1, 3f64.ln()));
        assert!((loglik(&x, &beta, &y).unwrap() - 0.75f64.ln()).abs() < 1e-12);

        // length mismatch is an error
        assert!(loglik(&x, &NaturalParam::zeros(1), &resp(&[1, 0])).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = design(5, 2, &[1.0, 0.4, -0.8, 0.3, 0.2, -0.9, 0.7, 0.6, -0.1, 1.0]);
        let y = resp(&[1, 0, 0, 1, 1]);
        for _ in 0..10 {
            let beta = DVector::from_fn(2, |_, _| rng.random::<f64>() * 4.0 - 2.0);
            let g = loglik_gradient(&x, &NaturalParam(beta.clone()), &y);
            let h = 1e-6;
            for c in 0..2 {
                let mut bp = beta.clone();
                bp[c] += h;
                let mut bm = beta.clone();
                bm[c] -= h;
                let fd = (loglik(&x, &NaturalParam(bp), &y).unwrap()
                    - loglik(&x, &NaturalParam(bm), &y).unwrap())
                    / (2.0 * h);
                assert!((fd - g[c]).abs() < 1e-6, "fd {fd} vs {}", g[c]);
            }
        }
    }

    #[test]
    fn symmetric_counts_give_zero_mle() {
        let x = design(2, 1, &[1.0, 1.0]);
        let y = resp(&[1, 0]);
        let fit = fit_mle_default(&x, &y).unwrap();
        assert!(fit.converged && !fit.separated);
        assert!(fit.beta_hat.0[0].abs() < 1e-9);
        assert!((fit.loglik + 2.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn single_observation_is_separated() {
        let x = design(1, 1, &[1.0]);
        let fit = fit_mle_default(&x, &resp(&[1])).unwrap();
        assert!(fit.separated);
        assert!(!fit.converged);
    }

    #[test]
    fn newton_matches_bisection_oracle_q1() {
        // q = 1: the score is strictly decreasing in beta, so bisection on it
        // is an independent oracle
        let x = design(5, 1, &[0.8, -1.2, 0.5, 2.0, -0.4]);
        let y = resp(&[1, 0, 0, 1, 1]);
        let fit = fit_mle_default(&x, &y).unwrap();
        assert!(fit.converged);

        let score = |b: f64| -> f64 {
            (0..5)
                .map(|i| {
                    let xi = x.matrix()[(i, 0)];
                    xi * (y.as_slice()[i] as f64 - sigmoid(xi * b))
                })
                .sum()
        };
        let (mut lo, mut hi) = (-50.0f64, 50.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if score(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let oracle = 0.5 * (lo + hi);
        assert!((fit.beta_hat.0[0] - oracle).abs() < 1e-5, "newton {} oracle {oracle}", fit.beta_hat.0[0]);
    }

    #[test]
    fn newton_matches_gradient_ascent_oracle_q2() {
        let x = design(
            8,
            2,
            &[
                1.0, 0.3, -0.7, 0.9, 0.4, -1.1, 1.2, 0.2, -0.5, -0.6, 0.8, 1.0, -0.9, 0.4, 0.1,
                -1.3,
            ],
        );
        // compare on the first few responses that actually admit an MLE
        let mut checked = 0;
        for mask in 1u32..255 {
            let bits: Vec<u8> = (0..8).map(|i| (mask >> i & 1) as u8).collect();
            if lp::separation_test(x.matrix(), &bits).separated {
                continue;
            }
            let y = resp(&bits);
            let fit = fit_mle_default(&x, &y).unwrap();
            assert!(fit.converged, "mask {mask:#b}");

            // plain gradient ascent with backtracking, independent of the
            // Newton machinery
            let mut b = DVector::<f64>::zeros(2);
            let mut ll = loglik(&x, &NaturalParam(b.clone()), &y).unwrap();
            for _ in 0..200_000 {
                let g = loglik_gradient(&x, &NaturalParam(b.clone()), &y);
                if g.amax() < 1e-11 {
                    break;
                }
                let mut t = 4.0;
                loop {
                    let cand = &b + &g * t;
                    let cll = loglik(&x, &NaturalParam(cand.clone()), &y).unwrap();
                    if cll > ll {
                        b = cand;
                        ll = cll;
                        break;
                    }
                    t *= 0.5;
                    if t < 1e-16 {
                        break;
                    }
                }
            }
            assert!(
                (fit.beta_hat.0.clone() - b.clone()).amax() < 1e-5,
                "mask {mask:#b}: newton {:?} ascent {:?}",
                fit.beta_hat.0.as_slice(),
                b.as_slice()
            );
            checked += 1;
            if checked == 3 {
                break;
            }
        }
        assert_eq!(checked, 3);
    }

    #[test]
    fn loglik_concave_along_segments() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = design(6, 2, &[1.0, 0.4, -0.8, 0.3, 0.2, -0.9, 0.7, 0.6, -0.1, 1.0, 0.5, 0.5]);
        let y = resp(&[1, 0, 0, 1, 1, 0]);
        for _ in 0..200 {
            let a = DVector::from_fn(2, |_, _| rng.random::<f64>() * 8.0 - 4.0);
            let b = DVector::from_fn(2, |_, _| rng.random::<f64>() * 8.0 - 4.0);
            let mid = (&a + &b) * 0.5;
            let la = loglik(&x, &NaturalParam(a), &y).unwrap();
            let lb = loglik(&x, &NaturalParam(b), &y).unwrap();
            let lm = loglik(&x, &NaturalParam(mid), &y).unwrap();
            assert!(lm >= la.min(lb) - 1e-12);
        }
    }

    #[test]
    fn fit_is_equivariant_under_reparameterization() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = design(8, 2, &[1.0, 0.3, -0.7, 0.9, 0.4, -1.1, 1.2, 0.2, -0.5, -0.6, 0.8, 1.0, -0.9, 0.4, 0.1, -1.3]);
        let y = resp(&[1, 0, 1, 1, 0, 1, 0, 0]);
        let fit = fit_mle_default(&x, &y).unwrap();
        for _ in 0..5 {
            let m = loop {
                let m = DMatrix::from_fn(2, 2, |_, _| rng.random::<f64>() * 2.0 - 1.0);
                if m.determinant().abs() > 0.2 {
                    break m;
                }
            };
            let xm = DesignMatrix::new(x.matrix() * &m).unwrap();
            let fit_m = fit_mle_default(&xm, &y).unwrap();
            let pred_x = x.matrix() * &fit.beta_hat.0;
            let pred_xm = xm.matrix() * &fit_m.beta_hat.0;
            assert!((pred_x - pred_xm).amax() < 1e-8);
        }
    }

    #[test]
    fn separated_flag_agrees_with_lp_on_enumerable_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..6 {
            let n = 4 + trial % 3;
            let m = DMatrix::from_fn(n, 2, |_, _| rng.random::<f64>() * 2.0 - 1.0);
            let x = DesignMatrix::new(m).unwrap();
            for mask in 0..(1u32 << n) {
                let y: Vec<u8> = (0..n).map(|i| (mask >> i & 1) as u8).collect();
                let lp_sep = lp::separation_test(x.matrix(), &y).separated;
                let fit = fit_mle_default(&x, &BinaryResponse::new(y).unwrap()).unwrap();
                assert_eq!(fit.separated, lp_sep, "n={n} mask={mask:#b}");
                assert!(!fit.ambiguous());
            }
        }
    }

    #[test]
    fn rank_deficiency_is_an_error() {
        let x = design(3, 2, &[1.0, 1.0, 2.0, 2.0, 3.0, 3.0]);
        assert!(matches!(
            fit_mle_default(&x, &resp(&[1, 0, 1])),
            Err(Error::RankDeficient { .. })
        ));
    }
}
