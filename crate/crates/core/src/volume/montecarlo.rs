//! Importance-sampled Monte Carlo volume estimation for q > 4.
//!
//! The volume density decays exponentially in every radial direction, so a
//! heavy-tailed (polynomial) proposal has bounded importance weights. The
//! proposal is a multivariate Student-t with nu = 3 degrees of freedom and
//! scale 2.5^2 * F(0)^{-1}, where F(0) = X^T X / 4 is the Fisher matrix at the
//! origin; its covariance-like scale matches the bulk of the density while the
//! t tails dominate the exponential decay.

use nalgebra::{Cholesky, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{volume_density_slice, NaturalParam};
use crate::linalg::DesignMatrix;
use crate::special::ln_gamma;

const NU: f64 = 3.0;
const SCALE: f64 = 2.5;

pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub evaluations: u64,
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box–Muller; one draw per call keeps the stream layout simple
    loop {
        let u1: f64 = rng.random();
        let u2: f64 = rng.random();
        if u1 > 1e-300 {
            return (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
        }
    }
}

/// Deterministic (seeded) importance-sampling estimate of the volume integral.
pub fn mc_volume(x: &DesignMatrix, samples: u64, seed: u64) -> Result<McEstimate> {
    let q = x.q();
    let f0 = crate::geometry::fisher_info(x, &NaturalParam::zeros(q));
    let prec = Cholesky::new(f0.clone())
        .ok_or(Error::RankDeficient { rank: x.rank(), q })?;
    // proposal scale: Sigma = SCALE^2 * F(0)^{-1}; sample beta = SCALE * L^{-T} z * sqrt(nu/w)
    // where F(0) = L L^T, z ~ N(0, I), w ~ chi^2_nu.
    let l = prec.l();
    let lt_inv = l
        .transpose()
        .try_inverse()
        .ok_or(Error::RankDeficient { rank: x.rank(), q })?;

    // log normalizing constant of the t density with Sigma = s^2 F^{-1}:
    // log c = ln Gamma((nu+q)/2) - ln Gamma(nu/2) - (q/2) ln(nu pi)
    //         - (1/2) ln det Sigma
    // with ln det Sigma = 2 q ln s - ln det F = 2 q ln s - 2 sum ln L_ii.
    let ln_det_f: f64 = (0..q).map(|i| l[(i, i)].ln()).sum::<f64>() * 2.0;
    let ln_norm = ln_gamma((NU + q as f64) / 2.0)
        - ln_gamma(NU / 2.0)
        - 0.5 * (q as f64) * (NU * std::f64::consts::PI).ln()
        - 0.5 * (2.0 * q as f64 * SCALE.ln() - ln_det_f);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = 0.0f64;
    let mut sumsq = 0.0f64;
    let mut beta = vec![0.0f64; q];
    for _ in 0..samples {
        let z = DVector::<f64>::from_fn(q, |_, _| standard_normal(&mut rng));
        let w: f64 = (0..3).map(|_| standard_normal(&mut rng).powi(2)).sum();
        let w = w.max(1e-12);
        let y = &lt_inv * &z;
        let r = (NU / w).sqrt() * SCALE;
        for i in 0..q {
            beta[i] = y[i] * r;
        }
        // t density at beta: quadratic form beta^T Sigma^{-1} beta = |z|^2 nu / w
        let quad = z.norm_squared() * NU / w;
        let ln_p = ln_norm - 0.5 * (NU + q as f64) * (1.0 + quad / NU).ln();
        let weight = volume_density_slice(x, &beta) * (-ln_p).exp();
        sum += weight;
        sumsq += weight * weight;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = (sumsq / n - mean * mean).max(0.0) / n;
    Ok(McEstimate { value: mean, std_error: var.sqrt(), evaluations: samples })
}

#[allow(unused_imports)]
use crate::geometry::fisher_info as _keep;
