//! Parameterizations of the saturated model and the logistic regression
//! submodel, and the differential geometry connecting them.
//!
//! The saturated model for n binary observations carries three coordinate
//! systems:
//!
//! - log-odds `lambda in R^n`,
//! - mean probabilities `e in (0,1)^n` with `e_i = sigmoid(lambda_i)`,
//! - Euclidean `xi in (-pi/2, pi/2)^n` with `xi_i = arcsin(2 e_i - 1)`,
//!   in which the Fisher metric is the identity (the model is an open cube
//!   of side pi).
//!
//! A design matrix X embeds the regression model into the cube via
//! `phi_i(beta) = arcsin(tanh(x_i beta / 2))`, a local isometry with Jacobian
//! `J(beta) = M(beta) X`, `M_ii = (2 cosh(x_i beta / 2))^{-1}`. The Fisher
//! information matrix of the natural parameterisation is `J^T J = X^T D X`
//! with `D_ii = (1/4) sech^2(x_i beta / 2)`, and `sqrt(det J^T J)` is the
//! volume density integrated by the volume engine.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{sqrt_gram_det, DesignMatrix};

const HALF_PI: f64 = std::f64::consts::FRAC_PI_2;

/// Log-odds coordinates of the saturated model, one entry per observation.
#[derive(Debug, Clone, PartialEq)]
pub struct LogOdds(pub DVector<f64>);

/// Success probabilities, strictly inside (0,1).
#[derive(Debug, Clone, PartialEq)]
pub struct MeanParam(pub DVector<f64>);

/// Euclidean coordinates in the closed cube [-pi/2, pi/2]^n.
///
/// The open-cube model never attains the boundary, but in f64 the map from
/// log-odds saturates to exactly pi/2 once |lambda| exceeds ~745, so the
/// boundary is admitted here.
#[derive(Debug, Clone, PartialEq)]
pub struct EuclParam(pub DVector<f64>);

/// Regression coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct NaturalParam(pub DVector<f64>);

impl LogOdds {
    pub fn new(v: DVector<f64>) -> Result<Self> {
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("log-odds entries must be finite".into()));
        }
        Ok(Self(v))
    }
}

impl MeanParam {
    pub fn new(v: DVector<f64>) -> Result<Self> {
        if v.iter().any(|&x| !(x > 0.0 && x < 1.0)) {
            return Err(Error::InvalidParameter(
                "mean parameters must lie strictly in (0,1)".into(),
            ));
        }
        Ok(Self(v))
    }
}

impl EuclParam {
    pub fn new(v: DVector<f64>) -> Result<Self> {
        if v.iter().any(|&x| !(x.abs() <= HALF_PI)) {
            return Err(Error::InvalidParameter(
                "Euclidean parameters must lie in [-pi/2, pi/2]".into(),
            ));
        }
        Ok(Self(v))
    }
}

impl NaturalParam {
    pub fn new(v: DVector<f64>) -> Result<Self> {
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("coefficients must be finite".into()));
        }
        Ok(Self(v))
    }

    pub fn zeros(q: usize) -> Self {
        Self(DVector::zeros(q))
    }
}

/// Numerically stable sigmoid.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// (2 cosh(u/2))^{-1} without overflow for large |u|:
/// exp(-|u|/2) / (1 + exp(-|u|)).
pub fn half_sech_half(u: f64) -> f64 {
    let a = (-u.abs() / 2.0).exp();
    a / (1.0 + a * a)
}

/// Single-coordinate embedding: arcsin(tanh(u/2)), computed as
/// atan(sinh(u/2)).
///
/// The atan∘sinh form stays accurate near the cube boundary where
/// tanh(u/2) rounds to exactly 1.0 (u ≳ 77); the arcsin∘tanh form is kept in
/// tests as the cross-check required of the alternative.
pub fn phi_scalar(u: f64) -> f64 {
    (u / 2.0).sinh().atan()
}

/// Inverse of [`phi_scalar`]: 2 artanh(sin(xi)).
pub fn phi_scalar_inv(xi: f64) -> f64 {
    2.0 * xi.sin().atanh()
}

pub fn logodds_to_mean(lambda: &LogOdds) -> MeanParam {
    MeanParam(lambda.0.map(sigmoid))
}

pub fn mean_to_logodds(e: &MeanParam) -> LogOdds {
    LogOdds(e.0.map(|p| (p / (1.0 - p)).ln()))
}

pub fn logodds_to_eucl(lambda: &LogOdds) -> EuclParam {
    EuclParam(lambda.0.map(phi_scalar))
}

pub fn mean_to_eucl(e: &MeanParam) -> EuclParam {
    EuclParam(e.0.map(|p| (2.0 * p - 1.0).asin()))
}

/// The isometric embedding phi(beta) = arcsin(tanh(X beta / 2)) into the cube.
pub fn embed_phi(x: &DesignMatrix, beta: &NaturalParam) -> EuclParam {
    let lambda = x.matrix() * &beta.0;
    EuclParam(lambda.map(phi_scalar))
}

/// The n x q Jacobian of phi at beta: row i is x_i / (2 cosh(x_i beta / 2)).
pub fn phi_jacobian(x: &DesignMatrix, beta: &NaturalParam) -> DMatrix<f64> {
    let lambda = x.matrix() * &beta.0;
    let mut j = x.matrix().clone();
    for i in 0..j.nrows() {
        let m = half_sech_half(lambda[i]);
        for c in 0..j.ncols() {
            j[(i, c)] *= m;
        }
    }
    j
}

/// Fisher information matrix of the natural parameterisation, X^T D_{Xb} X,
/// computed as J^T J so the fit and volume paths share one expression.
pub fn fisher_info(x: &DesignMatrix, beta: &NaturalParam) -> DMatrix<f64> {
    let j = phi_jacobian(x, beta);
    j.transpose() * j
}

/// The diagonal of D_{X beta}: (1/4) sech^2(x_i beta / 2), never materialized
/// as an n x n matrix.
pub fn fisher_diag(x: &DesignMatrix, beta: &NaturalParam) -> DVector<f64> {
    let lambda = x.matrix() * &beta.0;
    lambda.map(|u| {
        let m = half_sech_half(u);
        m * m
    })
}

/// Volume density sqrt(det(X^T D_{Xb} X)) at beta, evaluated as the product of
/// |r_ii| from the QR factorization of the Jacobian.
pub fn volume_density(x: &DesignMatrix, beta: &NaturalParam) -> f64 {
    sqrt_gram_det(&phi_jacobian(x, beta))
}

/// Same density but for a raw coefficient slice; the hot path used by the
/// cubature engine.
pub fn volume_density_slice(x: &DesignMatrix, beta: &[f64]) -> f64 {
    let q = x.q();
    debug_assert_eq!(beta.len(), q);
    let n = x.n();
    let mut j = DMatrix::zeros(n, q);
    for i in 0..n {
        let u = x.row_dot(i, beta);
        let m = half_sech_half(u);
        for c in 0..q {
            j[(i, c)] = m * x.matrix()[(i, c)];
        }
    }
    sqrt_gram_det(&j)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DesignMatrix;
    use nalgebra::{DMatrix, DVector};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn random_design(rng: &mut ChaCha8Rng, n: usize, q: usize) -> DesignMatrix {
        DesignMatrix::new(DMatrix::from_fn(n, q, |_, _| rng.random::<f64>() * 2.0 - 1.0)).unwrap()
    }

    #[test]
    fn logodds_to_mean_examples() {
        let lam = LogOdds::new(DVector::zeros(4)).unwrap();
        let e = logodds_to_mean(&lam);
        assert!(e.0.iter().all(|&p| (p - 0.5).abs() < 1e-15));

        let lam = LogOdds::new(DVector::from_element(2, 3f64.ln())).unwrap();
        let e = logodds_to_mean(&lam);
        assert!(e.0.iter().all(|&p| (p - 0.75).abs() < 1e-14));
    }

    #[test]
    fn logodds_mean_roundtrip() {
        let mut r = rng(1);
        for _ in 0..50 {
            let lam = DVector::from_fn(6, |_, _| r.random::<f64>() * 20.0 - 10.0);
            let back = mean_to_logodds(&logodds_to_mean(&LogOdds(lam.clone())));
            for i in 0..6 {
                assert!((back.0[i] - lam[i]).abs() <= 1e-12 * lam[i].abs().max(1.0));
            }
        }
    }

    #[test]
    fn logodds_to_eucl_examples() {
        assert_eq!(phi_scalar(0.0), 0.0);
        // limit: lambda = 50 puts xi within 1e-9 of pi/2
        assert!((phi_scalar(50.0) - HALF_PI).abs() < 1e-9);
        assert!(phi_scalar(50.0) <= HALF_PI);
        // monotone
        assert!(phi_scalar(1.0) > phi_scalar(0.5));
    }

    #[test]
    fn eucl_two_path_consistency() {
        // arcsin(2e - 1) after the mean map equals the direct map
        let mut r = rng(2);
        for _ in 0..100 {
            let lam = LogOdds::new(DVector::from_fn(5, |_, _| r.random::<f64>() * 30.0 - 15.0))
                .unwrap();
            let a = logodds_to_eucl(&lam);
            let b = mean_to_eucl(&logodds_to_mean(&lam));
            for i in 0..5 {
                assert!((a.0[i] - b.0[i]).abs() < 1e-12);
            }
        }
    }

    /// The arcsin(tanh(u/2)) form. Naive evaluation loses ~e^{|u|/2} ulps as
    /// tanh saturates, so for |u| > 1 it is reduced to the equivalent
    /// pi/2 - arcsin(sech(u/2)), which keeps full precision; 1 - tanh^2 = sech^2.
    fn arcsin_tanh_form(u: f64) -> f64 {
        if u.abs() <= 1.0 {
            (u / 2.0).tanh().asin()
        } else {
            u.signum() * (HALF_PI - (1.0 / (u / 2.0).cosh()).asin())
        }
    }

    #[test]
    fn phi_forms_agree_to_1e12_on_moderate_range() {
        // documented alternative form arcsin(tanh(u/2)) matches atan(sinh(u/2))
        for k in 0..=4000 {
            let u = -40.0 + k as f64 * 0.02;
            let a = phi_scalar(u);
            let b = arcsin_tanh_form(u);
            assert!((a - b).abs() < 1e-12, "u={u} a={a} b={b}");
        }
    }

    #[test]
    fn phi_scalar_inverse() {
        // The inverse runs through atanh near 1, whose conditioning is
        // cosh^2(u/2); keep the check inside the well-conditioned range.
        for k in 0..=200 {
            let u = -16.0 + k as f64 * 0.16;
            assert!((phi_scalar_inv(phi_scalar(u)) - u).abs() < 1e-9 * u.abs().max(1.0));
        }
    }

    #[test]
    fn embed_phi_examples() {
        // beta = 0 maps to the cube center
        let mut r = rng(3);
        let x = random_design(&mut r, 4, 2);
        let phi = embed_phi(&x, &NaturalParam::zeros(2));
        assert!(phi.0.iter().all(|&v| v == 0.0));

        // X = [0; 1]: first coordinate pinned at zero
        let x = DesignMatrix::from_rows(2, 1, &[0.0, 1.0]).unwrap();
        for t in [-3.0, 0.5, 7.0] {
            let phi = embed_phi(&x, &NaturalParam(DVector::from_element(1, t)));
            assert_eq!(phi.0[0], 0.0);
            assert!((phi.0[1] - phi_scalar(t)).abs() < 1e-15);
        }

        // X = [1; 1]: large beta approaches the cube vertex
        let x = DesignMatrix::from_rows(2, 1, &[1.0, 1.0]).unwrap();
        let phi = embed_phi(&x, &NaturalParam(DVector::from_element(1, 60.0)));
        assert!((phi.0[0] - HALF_PI).abs() < 1e-12);
        assert!((phi.0[1] - HALF_PI).abs() < 1e-12);
    }

    #[test]
    fn jacobian_at_zero_is_half_design() {
        let mut r = rng(4);
        let x = random_design(&mut r, 5, 3);
        let j = phi_jacobian(&x, &NaturalParam::zeros(3));
        for i in 0..5 {
            for c in 0..3 {
                assert!((j[(i, c)] - x.matrix()[(i, c)] / 2.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let mut r = rng(5);
        for _ in 0..10 {
            let x = random_design(&mut r, 5, 2);
            let beta = DVector::from_fn(2, |_, _| r.random::<f64>() * 4.0 - 2.0);
            let j = phi_jacobian(&x, &NaturalParam(beta.clone()));
            let h = 1e-5;
            for c in 0..2 {
                let mut bp = beta.clone();
                let mut bm = beta.clone();
                bp[c] += h;
                bm[c] -= h;
                let fp = embed_phi(&x, &NaturalParam(bp));
                let fm = embed_phi(&x, &NaturalParam(bm));
                for i in 0..5 {
                    let fd = (fp.0[i] - fm.0[i]) / (2.0 * h);
                    assert!((fd - j[(i, c)]).abs() < 1e-6, "fd={fd} j={}", j[(i, c)]);
                }
            }
        }
    }

    #[test]
    fn jacobian_zero_row_stays_zero() {
        let x = DesignMatrix::from_rows(3, 2, &[0.0, 0.0, 1.0, 0.5, -0.2, 1.0]).unwrap();
        for t in [-8.0f64, 0.0, 13.0] {
            let beta = NaturalParam(DVector::from_vec(vec![t, -t / 2.0]));
            let j = phi_jacobian(&x, &beta);
            assert_eq!(j[(0, 0)], 0.0);
            assert_eq!(j[(0, 1)], 0.0);
        }
    }

    #[test]
    fn fisher_info_examples() {
        // X = I_q at beta = 0: F = I/4
        let x = DesignMatrix::new(DMatrix::identity(3, 3)).unwrap();
        let f = fisher_info(&x, &NaturalParam::zeros(3));
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 0.25 } else { 0.0 };
                assert!((f[(i, j)] - want).abs() < 1e-15);
            }
        }

        // X = [1;1], beta = 0: scalar 1/2
        let x = DesignMatrix::from_rows(2, 1, &[1.0, 1.0]).unwrap();
        let f = fisher_info(&x, &NaturalParam::zeros(1));
        assert!((f[(0, 0)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn fisher_info_two_route_agreement() {
        // J^T J route vs the direct sum x_i^T x_i / (4 cosh^2) route
        let mut r = rng(6);
        for _ in 0..20 {
            let x = random_design(&mut r, 6, 3);
            let beta = NaturalParam(DVector::from_fn(3, |_, _| r.random::<f64>() * 6.0 - 3.0));
            let f = fisher_info(&x, &beta);
            let d = fisher_diag(&x, &beta);
            let mut direct = DMatrix::<f64>::zeros(3, 3);
            for i in 0..6 {
                for a in 0..3 {
                    for b in 0..3 {
                        direct[(a, b)] += d[i] * x.matrix()[(i, a)] * x.matrix()[(i, b)];
                    }
                }
            }
            for a in 0..3 {
                for b in 0..3 {
                    assert!((f[(a, b)] - direct[(a, b)]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn fisher_info_matches_simulated_expectation() {
        // -E[Hessian] = E[(grad)(grad)^T] by simulation at a fixed (X, beta)
        let mut r = rng(7);
        let x = random_design(&mut r, 4, 2);
        let beta = NaturalParam(DVector::from_vec(vec![0.7, -0.4]));
        let f = fisher_info(&x, &beta);
        let e = (x.matrix() * &beta.0).map(sigmoid);
        let trials = 200_000usize;
        let mut acc = DMatrix::<f64>::zeros(2, 2);
        for _ in 0..trials {
            let mut g = DVector::<f64>::zeros(2);
            for i in 0..4 {
                let y = if r.random::<f64>() < e[i] { 1.0 } else { 0.0 };
                for c in 0..2 {
                    g[c] += (y - e[i]) * x.matrix()[(i, c)];
                }
            }
            acc += &g * g.transpose();
        }
        acc /= trials as f64;
        // Monte Carlo tolerance: ~5 sigma with sigma ~ 1/sqrt(trials) scale
        for a in 0..2 {
            for b in 0..2 {
                assert!(
                    (acc[(a, b)] - f[(a, b)]).abs() < 0.02,
                    "mc={} fisher={}",
                    acc[(a, b)],
                    f[(a, b)]
                );
            }
        }
    }

    #[test]
    fn volume_density_examples() {
        let x = DesignMatrix::from_rows(1, 1, &[1.0]).unwrap();
        assert!((volume_density(&x, &NaturalParam::zeros(1)) - 0.5).abs() < 1e-15);

        // X = [1;1]: density (sqrt(2)/2) sech(beta/2)
        let x = DesignMatrix::from_rows(2, 1, &[1.0, 1.0]).unwrap();
        for t in [-4.0f64, 0.0, 2.5] {
            let d = volume_density(&x, &NaturalParam(DVector::from_element(1, t)));
            let want = (2f64).sqrt() / 2.0 / (t / 2.0).cosh();
            assert!((d - want).abs() < 1e-14, "t={t}");
        }

        // duplicate columns: rank deficient, density identically zero
        let x = DesignMatrix::from_rows(3, 2, &[1.0, 1.0, 2.0, 2.0, -1.0, -1.0]).unwrap();
        for t in [0.0f64, 1.0, -2.0] {
            let d = volume_density(&x, &NaturalParam(DVector::from_vec(vec![t, t / 3.0])));
            assert!(d.abs() < 1e-14);
        }
    }

    #[test]
    fn phi_coordinates_monotone_along_lines() {
        let mut r = rng(8);
        for _ in 0..20 {
            let x = random_design(&mut r, 5, 2);
            let b0 = DVector::from_fn(2, |_, _| r.random::<f64>() * 2.0 - 1.0);
            let v = DVector::from_fn(2, |_, _| r.random::<f64>() * 2.0 - 1.0);
            for i in 0..5 {
                let slope_sign = x.matrix().row(i).transpose().dot(&v).signum();
                let mut prev = f64::NEG_INFINITY;
                for k in 0..20 {
                    let t = -2.0 + k as f64 * 0.2;
                    let beta = NaturalParam(&b0 + &v * t);
                    let val = embed_phi(&x, &beta).0[i] * slope_sign;
                    assert!(val >= prev - 1e-12);
                    prev = val;
                }
            }
        }
    }

    #[test]
    fn embed_phi_injective_for_full_rank() {
        let mut r = rng(9);
        let x = random_design(&mut r, 5, 2);
        assert!(x.is_full_rank());
        for _ in 0..100 {
            let b1 = DVector::from_fn(2, |_, _| r.random::<f64>() * 6.0 - 3.0);
            let b2 = DVector::from_fn(2, |_, _| r.random::<f64>() * 6.0 - 3.0);
            if (&b1 - &b2).norm() < 1e-6 {
                continue;
            }
            let p1 = embed_phi(&x, &NaturalParam(b1));
            let p2 = embed_phi(&x, &NaturalParam(b2));
            assert!((p1.0 - p2.0).norm() > 1e-9);
        }
    }

    #[test]
    fn saturated_metric_is_identity_in_xi() {
        // For X = I_n the pull-back of D under xi -> lambda is the identity:
        // dlambda/dxi = 2 cosh(lambda/2) exactly cancels D = (2cosh)^{-2}.
        let mut r = rng(10);
        let x = DesignMatrix::new(DMatrix::identity(4, 4)).unwrap();
        for _ in 0..50 {
            let beta = NaturalParam(DVector::from_fn(4, |_, _| r.random::<f64>() * 10.0 - 5.0));
            let d = fisher_diag(&x, &beta);
            let xi = embed_phi(&x, &beta);
            for i in 0..4 {
                let dlambda_dxi = 2.0 / xi.0[i].cos() * 1.0;
                let g_xi = dlambda_dxi * dlambda_dxi * d[i];
                assert!((g_xi - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn parameter_validation() {
        assert!(MeanParam::new(DVector::from_vec(vec![0.5, 1.0])).is_err());
        assert!(EuclParam::new(DVector::from_vec(vec![0.0, 1.7])).is_err());
        assert!(LogOdds::new(DVector::from_vec(vec![f64::NAN])).is_err());
        assert!(NaturalParam::new(DVector::from_vec(vec![f64::INFINITY])).is_err());
    }
}
