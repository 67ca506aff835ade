//! Fisher information volume of a logistic regression model by validated
//! numerical integration.
//!
//! The volume is `vol(S_X) = \int_{R^q} sqrt(det(X^T D_{X beta} X)) dbeta`,
//! finite for every full-rank X and bounded between `pi^q` and
//! `C(n,q) pi^q`. The engine integrates over growing centered cubes
//! (onion-peel shells) until the last shell is negligible and a tail bound for
//! the rest of R^q is below tolerance, then re-integrates the final cube in
//! one adaptive pass so the reported error estimate is clean.
//!
//! Two tail bounds are in play:
//!
//! - generic X: the analytic face bound `|S| * delta * pi^{q-1} * C(n,q)`,
//!   valid once the truncation radius exceeds the stabilization radius
//!   `sqrt(q) * Delta_delta / sigma_min` (sigma_min over all q-row
//!   submatrices). The engine picks the smallest delta valid at its radius.
//! - otherwise: a geometric extrapolation of the observed shell decay,
//!   reported as a lower-confidence heuristic.

pub mod cubature;
pub mod montecarlo;

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::duality;
use crate::error::{Error, Result};
use crate::geometry::volume_density_slice;
use crate::linalg::{min_subset_sigma, DesignMatrix, DEFAULT_SUBSET_CAP};
use crate::special::{binomial_u128, ln_binomial};
use cubature::{integrate_boxes, shell_boxes, BoxRegion};

const PI: f64 = std::f64::consts::PI;

/// Hard ceiling on q for volume computation.
pub const MAX_VOLUME_DIM: usize = 8;
/// Deterministic cubature is used up to this dimension, Monte Carlo above.
pub const MAX_CUBATURE_DIM: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VolumeMethod {
    #[serde(rename = "adaptive-cubature")]
    AdaptiveCubature,
    #[serde(rename = "monte-carlo")]
    MonteCarlo,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntegrationConfig {
    /// Target relative error of the reported value.
    pub rel_tol: f64,
    /// Radius multiplier per adaptive shell step.
    pub shell_growth: f64,
    /// Stop growing once the last shell adds less than this fraction.
    pub shell_stop_frac: f64,
    /// Integrand evaluation budget.
    pub max_evals: u64,
    /// Sample count for the Monte Carlo method (q > 4).
    pub mc_samples: u64,
    pub seed: u64,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-6,
            shell_growth: 1.5,
            shell_stop_frac: 1e-8,
            max_evals: 80_000_000,
            mc_samples: 400_000,
            seed: 0,
        }
    }
}

impl IntegrationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) {
            return Err(Error::InvalidParameter("rel_tol must be positive".into()));
        }
        if !(self.shell_growth > 1.0) {
            return Err(Error::InvalidParameter("shell_growth must exceed 1".into()));
        }
        if !(self.shell_stop_frac > 0.0) {
            return Err(Error::InvalidParameter("shell_stop_frac must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VolumeEstimate {
    pub value: f64,
    /// Cubature (or Monte Carlo standard) error over the truncated domain.
    pub err_integration: f64,
    /// Bound or estimate for the mass outside the truncation radius.
    pub tail_bound: f64,
    /// Truncation radius (0 for Monte Carlo, which has none).
    pub radius: f64,
    pub method: VolumeMethod,
    pub evaluations: u64,
    pub converged: bool,
    /// True when `tail_bound` is the analytic generic-face bound rather than
    /// a shell-decay extrapolation. Diagnostic only, not serialized.
    #[serde(skip)]
    pub tail_is_analytic: bool,
}

impl VolumeEstimate {
    pub fn total_uncertainty(&self) -> f64 {
        self.err_integration + self.tail_bound
    }

    fn exact_zero() -> Self {
        Self {
            value: 0.0,
            err_integration: 0.0,
            tail_bound: 0.0,
            radius: 0.0,
            method: VolumeMethod::AdaptiveCubature,
            evaluations: 0,
            converged: true,
            tail_is_analytic: true,
        }
    }
}

/// Integration region for [`restricted_volume`].
#[derive(Debug, Clone)]
pub enum Region {
    Empty,
    Ball { radius: f64 },
    Box { center: Vec<f64>, half: Vec<f64> },
}

/// Smallest delta whose stabilization radius does not exceed `radius`:
/// delta = arccos(tanh(radius * sigma_min / (2 sqrt(q)))), evaluated stably
/// as 2 asin(sqrt(sigmoid(-2a))).
pub fn matched_delta(sigma_min: f64, q: usize, radius: f64) -> f64 {
    let a = radius * sigma_min / (2.0 * (q as f64).sqrt());
    let x = crate::geometry::sigmoid(-2.0 * a); // (1 - tanh a) / 2
    2.0 * x.sqrt().asin()
}

/// Analytic bound on vol(S_X | R^q \ B_R): |S| * delta * pi^{q-1} * C(n,q).
///
/// Requires a generic design and a radius at or above the stabilization
/// radius sqrt(q) * Delta_delta / sigma_min, where sigma_min is the smallest
/// singular value over all q-row submatrices.
pub fn tail_bound(x: &DesignMatrix, radius: f64, delta: f64, s_count: usize) -> Result<f64> {
    if !(delta > 0.0 && delta < PI / 2.0) {
        return Err(Error::InvalidParameter(format!("delta must lie in (0, pi/2), got {delta}")));
    }
    let report = x.degeneracy_report(DEFAULT_SUBSET_CAP).map_err(|e| match e {
        Error::SubsetCapExceeded { .. } => {
            Error::TailBoundUnavailable("subset enumeration exceeds the cap".into())
        }
        other => other,
    })?;
    if !report.is_generic {
        return Err(Error::TailBoundUnavailable(
            "design is not generic; no stabilization radius exists".into(),
        ));
    }
    let sigma = min_subset_sigma(x, DEFAULT_SUBSET_CAP)?;
    let required = (x.q() as f64).sqrt() * duality::delta_threshold(delta)? / sigma;
    if radius < required {
        return Err(Error::StabilizationRadius { radius, required });
    }
    Ok(s_count as f64 * delta * PI.powi(x.q() as i32 - 1) * binomial_u128(x.n(), x.q()) as f64)
}

struct TailContext {
    sigma_min: Option<f64>,
    cnq: f64,
}

impl TailContext {
    fn prepare(x: &DesignMatrix) -> Self {
        let generic = x
            .degeneracy_report(DEFAULT_SUBSET_CAP)
            .map(|r| r.is_generic)
            .unwrap_or(false);
        let sigma_min = if generic {
            min_subset_sigma(x, DEFAULT_SUBSET_CAP).ok().filter(|&s| s > 0.0)
        } else {
            None
        };
        Self { sigma_min, cnq: binomial_u128(x.n(), x.q()) as f64 }
    }

    /// Analytic bound at radius r with the matched delta, when available.
    /// The |S| count is sampled, so the bound is lower-confidence.
    fn analytic(&self, x: &DesignMatrix, r: f64, seed: u64) -> Option<f64> {
        let sigma = self.sigma_min?;
        let q = x.q();
        let delta = matched_delta(sigma, q, r);
        if !(delta > 0.0) {
            // delta underflowed: the bound is far below anything measurable
            return Some(0.0);
        }
        let threshold = r * sigma / (q as f64).sqrt();
        let s_count = sampled_sign_count(x, r, threshold, 4096, seed);
        Some(s_count as f64 * delta * PI.powi(q as i32 - 1) * self.cnq)
    }
}

/// Distinct thresholded sign vectors observed on the radius-r sphere.
fn sampled_sign_count(x: &DesignMatrix, r: f64, threshold: f64, samples: usize, seed: u64) -> usize {
    let q = x.q();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = std::collections::BTreeSet::new();
    for _ in 0..samples {
        let beta = duality::sample_sphere(q, r, &mut rng);
        let s: Vec<i8> = (0..x.n())
            .map(|i| {
                let v = x.row_dot(i, &beta);
                if v > threshold {
                    1
                } else if v < -threshold {
                    -1
                } else {
                    0
                }
            })
            .collect();
        seen.insert(s);
    }
    seen.len()
}

/// vol(S_X) with the method chosen by dimension: adaptive cubature for
/// q <= 4, importance-sampled Monte Carlo for 4 < q <= 8.
pub fn integrate_volume(x: &DesignMatrix, cfg: &IntegrationConfig) -> Result<VolumeEstimate> {
    let q = x.q();
    if q > MAX_VOLUME_DIM {
        return Err(Error::InvalidParameter(format!(
            "volume computation is capped at q = {MAX_VOLUME_DIM}, got q = {q}"
        )));
    }
    let method = if q <= MAX_CUBATURE_DIM {
        VolumeMethod::AdaptiveCubature
    } else {
        VolumeMethod::MonteCarlo
    };
    integrate_volume_with_method(x, cfg, method)
}

/// Same as [`integrate_volume`] with an explicit method override.
pub fn integrate_volume_with_method(
    x: &DesignMatrix,
    cfg: &IntegrationConfig,
    method: VolumeMethod,
) -> Result<VolumeEstimate> {
    cfg.validate()?;
    if !x.is_full_rank() {
        return Ok(VolumeEstimate::exact_zero());
    }
    match method {
        VolumeMethod::MonteCarlo => {
            let est = montecarlo::mc_volume(x, cfg.mc_samples, cfg.seed)?;
            Ok(VolumeEstimate {
                value: est.value,
                err_integration: est.std_error,
                tail_bound: 0.0,
                radius: 0.0,
                method,
                evaluations: est.evaluations,
                converged: est.std_error <= cfg.rel_tol * est.value,
                tail_is_analytic: true,
            })
        }
        VolumeMethod::AdaptiveCubature => {
            if x.q() > MAX_CUBATURE_DIM {
                return Err(Error::InvalidParameter(format!(
                    "adaptive cubature is limited to q <= {MAX_CUBATURE_DIM}"
                )));
            }
            integrate_cubature(x, cfg)
        }
    }
}

fn integrate_cubature(x: &DesignMatrix, cfg: &IntegrationConfig) -> Result<VolumeEstimate> {
    let q = x.q();
    if q == 2 {
        // ridge-aware polar integration: in Cartesian boxes the far-field
        // mass hides in angular needles the cubature rule cannot see
        let anchors = ridge_anchors_q2(x);
        let f = polar_density_q2(x);
        adaptive_shell_driver(
            x,
            cfg,
            &f,
            &|a, b| polar_ring_cells_q2(&anchors, a, b),
            &|r| polar_cells_q2(x, 0.0, r),
        )
    } else {
        let f = |beta: &[f64]| volume_density_slice(x, beta);
        adaptive_shell_driver(
            x,
            cfg,
            &f,
            &|a, b| shell_boxes(q, a, b),
            &|r| vec![BoxRegion::centered_cube(q, r)],
        )
    }
}

fn adaptive_shell_driver(
    x: &DesignMatrix,
    cfg: &IntegrationConfig,
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    shell_regions: &dyn Fn(f64, f64) -> Vec<BoxRegion>,
    full_regions: &dyn Fn(f64) -> Vec<BoxRegion>,
) -> Result<VolumeEstimate> {
    let tail_ctx = TailContext::prepare(x);

    // Phase 1: grow shells until the stopping rule fires. Loose per-shell
    // tolerances; this phase only fixes the truncation radius.
    let mut evals: u64 = 0;
    let mut total = 0.0f64;
    let mut r_prev = 0.0f64;
    let mut r = 1.0f64;
    let mut shell_prev: Option<f64> = None;
    let mut tail = f64::INFINITY;
    let mut tail_is_analytic = false;
    let mut radius_found = false;
    let mut shell_idx: u64 = 0;
    while evals < cfg.max_evals {
        let boxes = shell_regions(r_prev, r);
        let abs_tol = (total * cfg.shell_stop_frac * 0.1).max(1e-280);
        let res = integrate_boxes(&f, &boxes, 1e-3, abs_tol, cfg.max_evals - evals);
        evals += res.evaluations;
        total += res.value;
        let shell = res.value;

        let heuristic = match shell_prev {
            Some(prev) if prev > 0.0 && shell > 0.0 && shell < prev => {
                let ratio = shell / prev;
                shell * ratio / (1.0 - ratio)
            }
            _ if shell == 0.0 => 0.0,
            _ => f64::INFINITY,
        };
        let analytic = tail_ctx.analytic(x, r, cfg.seed.wrapping_add(shell_idx));
        (tail, tail_is_analytic) = match analytic {
            Some(a) => (a, true),
            None => (heuristic, false),
        };

        let tail_target = cfg.rel_tol * total * 0.25;
        if total > 0.0 && shell < cfg.shell_stop_frac * total && tail <= tail_target {
            radius_found = true;
            break;
        }
        shell_prev = Some(shell);
        r_prev = r;
        r *= cfg.shell_growth;
        shell_idx += 1;
        if r > 1e12 {
            break;
        }
    }

    // Phase 2: one clean adaptive pass over the final truncated domain.
    let budget = cfg.max_evals.saturating_sub(evals);
    let final_pass = integrate_boxes(&f, &full_regions(r), cfg.rel_tol * 0.5, 0.0, budget);
    evals += final_pass.evaluations;
    let value = final_pass.value;
    let tail = if tail.is_finite() { tail } else { 0.0 };
    let converged = radius_found
        && final_pass.converged
        && value > 0.0
        && final_pass.error + tail <= cfg.rel_tol * value;
    Ok(VolumeEstimate {
        value,
        err_integration: final_pass.error,
        tail_bound: tail,
        radius: r,
        method: VolumeMethod::AdaptiveCubature,
        evaluations: evals,
        converged,
        tail_is_analytic,
    })
}

/// Ridge directions of a q=2 design: the angles of the lines x_i beta = 0,
/// where the integrand's mass concentrates far from the origin. Each nonzero
/// row contributes two opposite angles; returned sorted over [0, 2pi) with
/// the row norm attached (it sets the ridge's angular width).
fn ridge_anchors_q2(x: &DesignMatrix) -> Vec<(f64, f64)> {
    let tau = 2.0 * PI;
    let mut anchors = Vec::new();
    for i in 0..x.n() {
        let row = x.row_vec(i);
        let norm = (row[0] * row[0] + row[1] * row[1]).sqrt();
        if norm < 1e-300 {
            continue;
        }
        // direction perpendicular to the row
        let phi = (row[0]).atan2(-row[1]).rem_euclid(tau);
        anchors.push((phi, norm));
        anchors.push(((phi + PI).rem_euclid(tau), norm));
    }
    anchors.sort_by(|a, b| a.0.total_cmp(&b.0));
    // merge coincident directions, keeping the larger norm (narrower ridge)
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(anchors.len());
    for (phi, norm) in anchors {
        match merged.last_mut() {
            Some((p, m)) if (phi - *p).abs() < 1e-9 => *m = m.max(norm),
            _ => merged.push((phi, norm)),
        }
    }
    merged
}

/// Log-odds reach beyond which a sech factor is numerically zero.
const RIDGE_REACH: f64 = 40.0;

/// (r, theta) cells tiling the ring [r_lo, r_hi] x [0, 2pi), with theta
/// breakpoints laddered geometrically toward each ridge angle so that a
/// ridge's angular bump is always comparable to the width of the cells
/// around it. Plain large cells would hide the bumps from the cubature rule
/// entirely once r >> bump width.
fn polar_ring_cells_q2(anchors: &[(f64, f64)], r_lo: f64, r_hi: f64) -> Vec<BoxRegion> {
    let tau = 2.0 * PI;
    let mut breaks: Vec<f64> = Vec::new();
    if anchors.len() < 2 {
        for k in 0..8 {
            breaks.push(k as f64 / 8.0 * tau);
        }
    } else {
        let m = anchors.len();
        for k in 0..m {
            let (a, norm_a) = anchors[k];
            let (b_raw, norm_b) = anchors[(k + 1) % m];
            let b = if k + 1 == m { b_raw + tau } else { b_raw };
            let gap = b - a;
            breaks.push(a.rem_euclid(tau));
            if gap <= 1e-12 {
                continue;
            }
            breaks.push((a + gap / 2.0).rem_euclid(tau));
            let scale = r_lo.max(1.0);
            let wa = (RIDGE_REACH / (norm_a * scale)).clamp(gap * 2f64.powi(-40), gap / 4.0);
            let wb = (RIDGE_REACH / (norm_b * scale)).clamp(gap * 2f64.powi(-40), gap / 4.0);
            let mut off = wa;
            while off < gap / 2.0 {
                breaks.push((a + off).rem_euclid(tau));
                off *= 2.0;
            }
            let mut off = wb;
            while off < gap / 2.0 {
                breaks.push((b - off).rem_euclid(tau));
                off *= 2.0;
            }
        }
    }
    breaks.sort_by(|x, y| x.total_cmp(y));
    breaks.dedup_by(|x, y| (*x - *y).abs() < 1e-13);
    let mut cells = Vec::with_capacity(breaks.len());
    let rc = (r_lo + r_hi) / 2.0;
    let rh = (r_hi - r_lo) / 2.0;
    for k in 0..breaks.len() {
        let t0 = breaks[k];
        let t1 = if k + 1 == breaks.len() { breaks[0] + tau } else { breaks[k + 1] };
        if t1 - t0 < 1e-13 {
            continue;
        }
        cells.push(BoxRegion::new(vec![rc, (t0 + t1) / 2.0], vec![rh, (t1 - t0) / 2.0]));
    }
    cells
}

/// Geometric ring decomposition of the disk/annulus [r_lo, r_hi], each ring
/// tiled by [`polar_ring_cells_q2`].
fn polar_cells_q2(x: &DesignMatrix, r_lo: f64, r_hi: f64) -> Vec<BoxRegion> {
    let anchors = ridge_anchors_q2(x);
    let mut cells = Vec::new();
    let mut lo = r_lo;
    let mut hi = if r_lo == 0.0 { 2.0f64.min(r_hi) } else { (2.0 * r_lo).min(r_hi) };
    loop {
        cells.extend(polar_ring_cells_q2(&anchors, lo, hi));
        if hi >= r_hi {
            break;
        }
        lo = hi;
        hi = (2.0 * hi).min(r_hi);
    }
    cells
}

/// Polar integrand for q=2: f(r, theta) = r * density(r cos, r sin).
fn polar_density_q2<'a>(x: &'a DesignMatrix) -> impl Fn(&[f64]) -> f64 + Sync + 'a {
    move |z: &[f64]| {
        let (r, theta) = (z[0], z[1]);
        let beta = [r * theta.cos(), r * theta.sin()];
        r * volume_density_slice(x, &beta)
    }
}

/// Map hyperspherical coordinates (r, angles...) to Cartesian; returns the
/// Jacobian r^{q-1} prod sin^{q-1-k}(phi_k).
fn spherical_to_cartesian(z: &[f64], beta: &mut [f64]) -> f64 {
    let q = beta.len();
    let r = z[0];
    if q == 1 {
        beta[0] = r;
        return 1.0;
    }
    let mut jac = r.powi(q as i32 - 1);
    let mut sinprod = 1.0;
    for k in 1..q {
        let ang = z[k];
        if k < q - 1 {
            beta[k - 1] = r * sinprod * ang.cos();
            jac *= ang.sin().powi((q - 1 - k) as i32);
            sinprod *= ang.sin();
        } else {
            beta[q - 2] = r * sinprod * ang.cos();
            beta[q - 1] = r * sinprod * ang.sin();
        }
    }
    jac
}

/// vol(S_X | U) for a ball or box region U. Balls use a hyperspherical change
/// of variables so the radial direction is adapted directly.
pub fn restricted_volume(x: &DesignMatrix, region: &Region, cfg: &IntegrationConfig) -> Result<f64> {
    cfg.validate()?;
    let q = x.q();
    if q > MAX_CUBATURE_DIM {
        return Err(Error::InvalidParameter(format!(
            "restricted volumes use deterministic cubature and are limited to q <= {MAX_CUBATURE_DIM}"
        )));
    }
    if !x.is_full_rank() {
        return Ok(0.0);
    }
    match region {
        Region::Empty => Ok(0.0),
        Region::Box { center, half } => {
            if center.len() != q || half.len() != q {
                return Err(Error::DimensionMismatch(format!(
                    "region dimension {} vs q = {}",
                    center.len(),
                    q
                )));
            }
            if half.iter().any(|&h| h <= 0.0) {
                return Ok(0.0);
            }
            let f = |beta: &[f64]| volume_density_slice(x, beta);
            let res = integrate_boxes(
                &f,
                &[BoxRegion::new(center.clone(), half.clone())],
                cfg.rel_tol,
                0.0,
                cfg.max_evals,
            );
            Ok(res.value)
        }
        Region::Ball { radius } => {
            if !(radius.is_finite() && *radius >= 0.0) {
                return Err(Error::InvalidParameter("ball radius must be finite and >= 0".into()));
            }
            if *radius == 0.0 {
                return Ok(0.0);
            }
            if q == 1 {
                let f = |beta: &[f64]| volume_density_slice(x, beta);
                let res = integrate_boxes(
                    &f,
                    &[BoxRegion::new(vec![0.0], vec![*radius])],
                    cfg.rel_tol,
                    0.0,
                    cfg.max_evals,
                );
                return Ok(res.value);
            }
            if q == 2 {
                let f = polar_density_q2(x);
                let res = integrate_boxes(
                    &f,
                    &polar_cells_q2(x, 0.0, *radius),
                    cfg.rel_tol,
                    0.0,
                    cfg.max_evals,
                );
                return Ok(res.value);
            }
            // z = (r, phi_1..phi_{q-2}, theta) over [0,R] x [0,pi]^{q-2} x [0,2pi]
            let mut center = vec![radius / 2.0];
            let mut half = vec![radius / 2.0];
            for _ in 0..q - 2 {
                center.push(PI / 2.0);
                half.push(PI / 2.0);
            }
            center.push(PI);
            half.push(PI);
            let f = |z: &[f64]| {
                let mut beta = [0.0f64; MAX_CUBATURE_DIM];
                let jac = spherical_to_cartesian(z, &mut beta[..q]);
                jac * volume_density_slice(x, &beta[..q])
            };
            let res = integrate_boxes(
                &f,
                &[BoxRegion::new(center, half)],
                cfg.rel_tol,
                0.0,
                cfg.max_evals,
            );
            Ok(res.value)
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BoundsReport {
    pub value: f64,
    /// value - pi^q; negative beyond tolerance flags a violation.
    pub lower_margin: f64,
    /// C(n,q) pi^q - value.
    pub upper_margin: f64,
    /// value - N1 pi^q / sqrt(C(n,q)).
    pub n1_lower_margin: f64,
    /// N1 pi^q - value.
    pub n1_upper_margin: f64,
    /// value - pi^q sqrt(C(n,q)), present only for generic designs.
    pub generic_lower_margin: Option<f64>,
}

impl BoundsReport {
    pub fn satisfied(&self, tol: f64) -> bool {
        self.lower_margin >= -tol
            && self.upper_margin >= -tol
            && self.n1_lower_margin >= -tol
            && self.n1_upper_margin >= -tol
            && self.generic_lower_margin.map_or(true, |m| m >= -tol)
    }
}

/// Checks a volume estimate against the pi^q / C(n,q) pi^q bounds and their
/// N1 refinements. Violations are reported, not errors: they indicate
/// integration bugs, not invalid input.
pub fn bounds_check(x: &DesignMatrix, v: &VolumeEstimate) -> Result<BoundsReport> {
    if !x.is_full_rank() {
        return Err(Error::RankDeficient { rank: x.rank(), q: x.q() });
    }
    let report = x.degeneracy_report(DEFAULT_SUBSET_CAP)?;
    let q = x.q() as i32;
    let piq = PI.powi(q);
    let cnq = binomial_u128(x.n(), x.q()) as f64;
    let n1 = report.n1_nondegenerate as f64;
    Ok(BoundsReport {
        value: v.value,
        lower_margin: v.value - piq,
        upper_margin: cnq * piq - v.value,
        n1_lower_margin: v.value - n1 * piq / cnq.sqrt(),
        n1_upper_margin: n1 * piq - v.value,
        generic_lower_margin: if report.is_generic {
            Some(v.value - piq * cnq.sqrt())
        } else {
            None
        },
    })
}

/// Closed-form volume approximation pi^q sqrt(C(n - n0, q)) for a design with
/// n0 zero rows.
pub fn approx_volume(n: usize, q: usize, n0: usize) -> Result<f64> {
    if n0 > n || n - n0 < q {
        return Err(Error::Overparameterized { effective: n.saturating_sub(n0), q });
    }
    Ok(PI.powi(q as i32) * (0.5 * ln_binomial(n - n0, q)).exp())
}

#[derive(Debug, Clone)]
pub struct JumpEstimate {
    pub base_volume: f64,
    pub jump_min: f64,
    pub jump_max: f64,
    pub perturbed_volumes: Vec<f64>,
}

/// Measures vol(S_Z) - vol(S_X) over `trials` random generic perturbations Z
/// with Frobenius distance below `eps`.
pub fn volume_jump(
    x: &DesignMatrix,
    eps: f64,
    trials: usize,
    cfg: &IntegrationConfig,
) -> Result<JumpEstimate> {
    if !x.is_full_rank() {
        return Err(Error::RankDeficient { rank: x.rank(), q: x.q() });
    }
    if !(eps > 0.0) || trials == 0 {
        return Err(Error::InvalidParameter("eps must be positive and trials >= 1".into()));
    }
    let base = integrate_volume(x, cfg)?;
    let (n, q) = (x.n(), x.q());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x9e3779b97f4a7c15));
    let mut vols = Vec::with_capacity(trials);
    for _ in 0..trials {
        let mut attempts = 0;
        let z = loop {
            attempts += 1;
            if attempts > 200 {
                return Err(Error::InvalidParameter(
                    "could not find a generic perturbation; eps may be degenerate".into(),
                ));
            }
            let p = DMatrix::from_fn(n, q, |_, _| {
                // Box-Muller pair, cosine branch
                let u1: f64 = rng.random::<f64>().max(1e-300);
                let u2: f64 = rng.random();
                (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
            });
            let scale = 0.9 * eps / p.norm();
            let z = DesignMatrix::new(x.matrix() + p * scale)?;
            if z.is_full_rank() && z.degeneracy_report(DEFAULT_SUBSET_CAP)?.is_generic {
                break z;
            }
        };
        vols.push(integrate_volume(&z, cfg)?.value);
    }
    let jump_min = vols.iter().map(|v| v - base.value).fold(f64::INFINITY, f64::min);
    let jump_max = vols.iter().map(|v| v - base.value).fold(f64::NEG_INFINITY, f64::max);
    Ok(JumpEstimate { base_volume: base.value, jump_min, jump_max, perturbed_volumes: vols })
}
