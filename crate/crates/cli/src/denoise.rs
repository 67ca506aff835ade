//! Reduced-scale image denoising simulation.
//!
//! A binary signal image built from a dictionary of thickened line segments
//! is corrupted by independent pixel flips; an l1-regularized logistic
//! regression on the segment dictionary (plus an unpenalized intercept) is
//! fitted along a penalty path, and the path point is chosen either by the
//! approximate volume criterion or by cross-validation. Reported errors
//! compare fitted probabilities against the clean signal.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use logvol_core::error::{Error, Result as CoreResult};
use logvol_core::fit::{
    cross_validate_path, fit_lasso_path, Column, LassoConfig, LassoDesign, LassoPath,
};
use logvol_core::geometry::sigmoid;
use logvol_core::selection::select_lambda_approx_volume;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DenoiseSpec {
    pub width: usize,
    pub height: usize,
    /// Independent flip probability in [0, 0.5).
    pub noise_rate: f64,
    /// Segment length in pixels.
    pub segment_len: f64,
    /// Segment thickness in pixels.
    pub segment_thickness: f64,
    /// Number of segment orientations (angles k*pi/m).
    pub orientations: usize,
    /// Stride of the center lattice; 2 puts a center on ~1/4 of pixels.
    pub lattice_stride: usize,
    /// Number of dictionary segments unioned into the clean signal.
    pub signal_segments: usize,
    pub cv_folds: usize,
    pub seed: u64,
}

impl Default for DenoiseSpec {
    fn default() -> Self {
        Self {
            width: 48,
            height: 32,
            noise_rate: 0.1,
            segment_len: 9.0,
            segment_thickness: 2.0,
            orientations: 12,
            lattice_stride: 2,
            signal_segments: 6,
            cv_folds: 10,
            seed: 0,
        }
    }
}

impl DenoiseSpec {
    pub fn validate(&self) -> CoreResult<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidParameter("image dimensions must be positive".into()));
        }
        if !(0.0..0.5).contains(&self.noise_rate) {
            return Err(Error::InvalidParameter("noise_rate must lie in [0, 0.5)".into()));
        }
        if self.orientations == 0 || self.lattice_stride == 0 || self.signal_segments == 0 {
            return Err(Error::InvalidParameter("dictionary parameters must be positive".into()));
        }
        if self.cv_folds < 2 {
            return Err(Error::InvalidParameter("cv_folds must be at least 2".into()));
        }
        Ok(())
    }

    pub fn pixels(&self) -> usize {
        self.width * self.height
    }
}

/// Rasterizes one thickened segment centered at (cx, cy) with direction
/// angle theta: all pixels whose center lies within thickness/2 of the
/// segment. Indices are row-major (y * width + x), sorted.
fn rasterize_segment(
    width: usize,
    height: usize,
    cx: f64,
    cy: f64,
    theta: f64,
    len: f64,
    thickness: f64,
) -> Vec<u32> {
    let (dx, dy) = (theta.cos(), theta.sin());
    let half = len / 2.0;
    let r = thickness / 2.0;
    let reach = half + r + 1.0;
    let x_lo = ((cx - reach).floor().max(0.0)) as usize;
    let x_hi = ((cx + reach).ceil().min(width as f64 - 1.0)) as usize;
    let y_lo = ((cy - reach).floor().max(0.0)) as usize;
    let y_hi = ((cy + reach).ceil().min(height as f64 - 1.0)) as usize;
    let mut out = Vec::new();
    for y in y_lo..=y_hi {
        for x in x_lo..=x_hi {
            let px = x as f64 - cx;
            let py = y as f64 - cy;
            // distance from pixel center to the segment
            let t = (px * dx + py * dy).clamp(-half, half);
            let ex = px - t * dx;
            let ey = py - t * dy;
            if ex * ex + ey * ey <= r * r {
                out.push((y * width + x) as u32);
            }
        }
    }
    out
}

/// The full segment dictionary as indicator columns.
pub fn build_dictionary(spec: &DenoiseSpec) -> CoreResult<LassoDesign> {
    let mut cols = Vec::new();
    let mut cy = 0usize;
    while cy < spec.height {
        let mut cx = 0usize;
        while cx < spec.width {
            for k in 0..spec.orientations {
                let theta = k as f64 * std::f64::consts::PI / spec.orientations as f64;
                let idx = rasterize_segment(
                    spec.width,
                    spec.height,
                    cx as f64,
                    cy as f64,
                    theta,
                    spec.segment_len,
                    spec.segment_thickness,
                );
                if !idx.is_empty() {
                    cols.push(Column::Indicator(idx));
                }
            }
            cx += spec.lattice_stride;
        }
        cy += spec.lattice_stride;
    }
    LassoDesign::new(spec.pixels(), cols)
}

/// Clean signal: union of `signal_segments` random dictionary atoms.
pub fn generate_signal(spec: &DenoiseSpec, design: &LassoDesign, rng: &mut ChaCha8Rng) -> Vec<u8> {
    let mut marker = vec![0.0f64; spec.pixels()];
    for _ in 0..spec.signal_segments {
        let j = rng.random_range(0..design.q());
        design.accumulate_col(j, 1.0, &mut marker);
    }
    marker.iter().map(|&m| (m > 0.0) as u8).collect()
}

fn design_axpy(design: &LassoDesign, beta: &[f64], out: &mut [f64]) {
    for (j, &b) in beta.iter().enumerate() {
        if b != 0.0 {
            design.accumulate_col(j, b, out);
        }
    }
}

pub fn flip_noise(signal: &[u8], rate: f64, rng: &mut ChaCha8Rng) -> Vec<u8> {
    signal
        .iter()
        .map(|&s| if rng.random::<f64>() < rate { 1 - s } else { s })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct SelectionMetrics {
    pub lambda_index: usize,
    pub lambda: f64,
    pub nonzero: usize,
    pub mae: f64,
    pub rmse: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DenoiseRun {
    pub seed: u64,
    pub n_pixels: usize,
    pub dictionary_columns: usize,
    pub volume_criterion: SelectionMetrics,
    pub cross_validation: SelectionMetrics,
}

fn eta_at(design: &LassoDesign, path: &LassoPath, k: usize) -> Vec<f64> {
    let mut eta = vec![path.intercepts[k]; design.n()];
    design_axpy(design, &path.betas[k], &mut eta);
    eta
}

fn metrics(design: &LassoDesign, path: &LassoPath, k: usize, signal: &[u8]) -> SelectionMetrics {
    let eta = eta_at(design, path, k);
    let n = signal.len() as f64;
    let mut abs = 0.0;
    let mut sq = 0.0;
    for (i, &s) in signal.iter().enumerate() {
        let p = sigmoid(eta[i]);
        let d = (p - s as f64).abs();
        abs += d;
        sq += d * d;
    }
    SelectionMetrics {
        lambda_index: k,
        lambda: path.lambdas[k],
        nonzero: path.nonzero[k],
        mae: abs / n,
        rmse: (sq / n).sqrt(),
    }
}

/// One full simulation run: signal, noise, path fit, both selections,
/// error metrics against the clean signal.
pub fn run_denoise(spec: &DenoiseSpec) -> CoreResult<(DenoiseRun, DenoiseArtifacts)> {
    spec.validate()?;
    let design = build_dictionary(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let signal = generate_signal(spec, &design, &mut rng);
    let noisy = flip_noise(&signal, spec.noise_rate, &mut rng);

    let lcfg = LassoConfig::default();
    let path = fit_lasso_path(&design, &noisy, &lcfg)?;
    let (vol_idx, _scores) = select_lambda_approx_volume(&design, &path)?;
    let cv = cross_validate_path(&design, &noisy, &path, spec.cv_folds, spec.seed ^ 0xc0ffee, &lcfg)?;

    let vol = metrics(&design, &path, vol_idx, &signal);
    let cvm = metrics(&design, &path, cv.selected_index, &signal);
    let probs_vol: Vec<f64> = eta_at(&design, &path, vol_idx).iter().map(|&e| sigmoid(e)).collect();
    let probs_cv: Vec<f64> =
        eta_at(&design, &path, cv.selected_index).iter().map(|&e| sigmoid(e)).collect();

    Ok((
        DenoiseRun {
            seed: spec.seed,
            n_pixels: spec.pixels(),
            dictionary_columns: design.q(),
            volume_criterion: vol,
            cross_validation: cvm,
        },
        DenoiseArtifacts { signal, noisy, probs_vol, probs_cv },
    ))
}

/// Raw images for CSV emission.
pub struct DenoiseArtifacts {
    pub signal: Vec<u8>,
    pub noisy: Vec<u8>,
    pub probs_vol: Vec<f64>,
    pub probs_cv: Vec<f64>,
}

/// Row-major grid rendered as CSV lines.
pub fn grid_csv<T: Copy, F: Fn(T) -> String>(values: &[T], width: usize, fmt: F) -> String {
    let mut out = String::new();
    for row in values.chunks(width) {
        let cells: Vec<String> = row.iter().map(|&v| fmt(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}
