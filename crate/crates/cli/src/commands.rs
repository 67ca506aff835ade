//! Subcommand implementations. Each returns the JSON payload bytes plus the
//! process exit code, and writes any sidecar CSV artifacts itself.

use std::path::{Path, PathBuf};

use serde::Serialize;

use logvol_core::duality::{duality_check, FaceDualityRow};
use logvol_core::geometry::{phi_scalar, NaturalParam};
use logvol_core::selection::{select_with_config, Criterion};
use logvol_core::volume::{integrate_volume, IntegrationConfig, VolumeEstimate};
use logvol_core::DesignMatrix;
use nalgebra::DVector;

use crate::denoise::{grid_csv, run_denoise, DenoiseRun, DenoiseSpec};
use crate::error::{CliError, Result};
use crate::io;
use crate::jsonfmt::{csv_f64, to_json_bytes};
use crate::{EXIT_NONCONVERGED, EXIT_OK};

#[derive(Debug, Clone, Serialize)]
struct Envelope<C: Serialize, R: Serialize> {
    config: C,
    result: R,
}

fn emit<C: Serialize, R: Serialize>(config: C, result: R) -> Result<Vec<u8>> {
    Ok(to_json_bytes(&Envelope { config, result })?)
}

// ---------------------------------------------------------------- volume

#[derive(Debug, Clone, Serialize)]
pub struct VolumeConfig {
    pub design: PathBuf,
    pub zero_row_tol: f64,
    pub integration: IntegrationConfig,
}

#[derive(Debug, Clone, Serialize)]
struct VolumeResult {
    #[serde(flatten)]
    estimate: VolumeEstimate,
    rank: usize,
    q: usize,
    n: usize,
    note: Option<String>,
}

pub fn cmd_volume(cfg: &VolumeConfig) -> Result<(Vec<u8>, i32)> {
    let x = io::load_design(&cfg.design, cfg.zero_row_tol)?;
    let est = integrate_volume(&x, &cfg.integration)?;
    let note = if !x.is_full_rank() {
        Some(format!("rank {} < q = {}: volume is exactly zero", x.rank(), x.q()))
    } else {
        None
    };
    let exit = if est.converged { EXIT_OK } else { EXIT_NONCONVERGED };
    let bytes = emit(
        cfg,
        VolumeResult { estimate: est, rank: x.rank(), q: x.q(), n: x.n(), note },
    )?;
    Ok((bytes, exit))
}

// ---------------------------------------------------------------- select

#[derive(Debug, Clone, Serialize)]
pub struct SelectConfig {
    pub designs_dir: PathBuf,
    pub response: PathBuf,
    pub criterion: Criterion,
    pub zero_row_tol: f64,
    pub integration: IntegrationConfig,
}

pub fn cmd_select(cfg: &SelectConfig) -> Result<(Vec<u8>, i32)> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&cfg.designs_dir)
        .map_err(|source| CliError::Io { path: cfg.designs_dir.clone(), source })?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::Usage(format!(
            "no .csv designs found in {}",
            cfg.designs_dir.display()
        )));
    }
    let y = io::load_response(&cfg.response)?;
    let mut entries = Vec::new();
    for p in &paths {
        let x = io::load_design(p, cfg.zero_row_tol)?;
        io::check_lengths(&x, &y)?;
        let name = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        entries.push((name, x));
    }
    let candidates = logvol_core::selection::CandidateSet::new(entries)?;
    let ranking = select_with_config(&candidates, &y, cfg.criterion, &cfg.integration)?;
    let bytes = emit(cfg, &ranking)?;
    Ok((bytes, EXIT_OK))
}

// ---------------------------------------------------------------- duality

#[derive(Debug, Clone, Serialize)]
pub struct DualityConfig {
    pub design: PathBuf,
    pub r_list: Vec<f64>,
    pub delta: f64,
    pub samples: usize,
    pub seed: u64,
    pub points_csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
struct DualityRow {
    s: String,
    n_s: usize,
    r: f64,
    d_h_phi_g: f64,
    d_h_f_h: f64,
    sample_count: usize,
}

impl From<&FaceDualityRow> for DualityRow {
    fn from(row: &FaceDualityRow) -> Self {
        Self {
            s: row.s.label(),
            n_s: row.s.n_zeros(),
            r: row.r,
            d_h_phi_g: row.d_h_phi_g,
            d_h_f_h: row.d_h_f_h,
            sample_count: row.sample_count,
        }
    }
}

pub fn cmd_duality(cfg: &DualityConfig) -> Result<(Vec<u8>, i32)> {
    let x = io::load_design(&cfg.design, 0.0)?;
    let rows = duality_check(&x, &cfg.r_list, cfg.delta, cfg.samples, cfg.seed)?;
    if let Some(csv_path) = &cfg.points_csv {
        write_point_cloud(csv_path, &x, &cfg.r_list, cfg.delta, cfg.samples, cfg.seed)?;
    }
    let out: Vec<DualityRow> = rows.iter().map(DualityRow::from).collect();
    let bytes = emit(cfg, &out)?;
    Ok((bytes, EXIT_OK))
}

/// Point clouds for external plotting: beta samples with their cube images
/// phi(beta) and expectation images f(beta), one row per sampled point.
fn write_point_cloud(
    path: &Path,
    x: &DesignMatrix,
    r_list: &[f64],
    delta: f64,
    samples: usize,
    seed: u64,
) -> Result<()> {
    use logvol_core::duality::{reparam_map_f, sample_faces};
    use logvol_core::geometry::embed_phi;

    let (n, q) = (x.n(), x.q());
    let mut out = String::new();
    out.push_str("r,face");
    for j in 0..q {
        out.push_str(&format!(",beta_{j}"));
    }
    for i in 0..n {
        out.push_str(&format!(",phi_{i}"));
    }
    for j in 0..q {
        out.push_str(&format!(",f_{j}"));
    }
    out.push('\n');
    for (ri, &r) in r_list.iter().enumerate() {
        let faces = sample_faces(x, r, delta, samples, seed.wrapping_add(ri as u64))?;
        for face in &faces {
            for beta in &face.points {
                let b = NaturalParam(DVector::from_column_slice(beta));
                let phi = embed_phi(x, &b);
                let f = reparam_map_f(x, &b);
                out.push_str(&csv_f64(r));
                out.push(',');
                out.push_str(&face.s.label());
                for v in beta {
                    out.push(',');
                    out.push_str(&csv_f64(*v));
                }
                for i in 0..n {
                    out.push(',');
                    out.push_str(&csv_f64(phi.0[i]));
                }
                for j in 0..q {
                    out.push(',');
                    out.push_str(&csv_f64(f.0[j]));
                }
                out.push('\n');
            }
        }
    }
    io::write_text(path, &out)
}

// ------------------------------------------------------------ denoise-sim

pub fn cmd_denoise_sim(
    spec: &DenoiseSpec,
    out_prefix: Option<&Path>,
) -> Result<(Vec<u8>, i32)> {
    let (run, artifacts) = run_denoise(spec)?;
    if let Some(prefix) = out_prefix {
        let base = prefix.to_string_lossy();
        io::write_text(
            Path::new(&format!("{base}.signal.csv")),
            &grid_csv(&artifacts.signal, spec.width, |v| v.to_string()),
        )?;
        io::write_text(
            Path::new(&format!("{base}.noisy.csv")),
            &grid_csv(&artifacts.noisy, spec.width, |v| v.to_string()),
        )?;
        io::write_text(
            Path::new(&format!("{base}.predicted_volume.csv")),
            &grid_csv(&artifacts.probs_vol, spec.width, csv_f64),
        )?;
        io::write_text(
            Path::new(&format!("{base}.predicted_cv.csv")),
            &grid_csv(&artifacts.probs_cv, spec.width, csv_f64),
        )?;
    }
    let bytes = emit(spec, RunWrap(&run))?;
    Ok((bytes, EXIT_OK))
}

#[derive(Serialize)]
struct RunWrap<'a>(&'a DenoiseRun);

// ---------------------------------------------------------------- figure1

#[derive(Debug, Clone, Serialize)]
pub struct Figure1Config {
    pub x1_list: Vec<f64>,
    pub integration: IntegrationConfig,
    pub curves_csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
struct Figure1Row {
    x1: f64,
    volume: f64,
    converged: bool,
}

/// Embedding curves for designs [x1; 1] and their volumes. The x1 = 0 member
/// is the pinned horizontal segment.
pub fn cmd_figure1(cfg: &Figure1Config) -> Result<(Vec<u8>, i32)> {
    let mut rows = Vec::new();
    let mut all_converged = true;
    let mut curves = String::from("x1,beta,xi1,xi2\n");
    for &x1 in &cfg.x1_list {
        if !(x1 >= 0.0) {
            return Err(CliError::Usage(format!("x1 values must be >= 0, got {x1}")));
        }
        let x = DesignMatrix::from_rows(2, 1, &[x1, 1.0])?;
        let est = integrate_volume(&x, &cfg.integration)?;
        all_converged &= est.converged;
        rows.push(Figure1Row { x1, volume: est.value, converged: est.converged });

        // curve sampling: gd-uniform grids at both coordinate scales so the
        // trace is dense near all cube boundaries it approaches
        let mut betas: Vec<f64> = Vec::new();
        let steps = 200;
        for k in 0..=steps {
            let xi = -1.5 + 3.0 * k as f64 / steps as f64;
            let b = 2.0 * (xi as f64).sin().atanh();
            betas.push(b);
            if x1 > 0.0 {
                betas.push(b / x1);
            }
        }
        betas.sort_by(|a, b| a.total_cmp(b));
        betas.dedup();
        for &b in &betas {
            let xi1 = phi_scalar(x1 * b);
            let xi2 = phi_scalar(b);
            curves.push_str(&format!("{},{},{},{}\n", csv_f64(x1), csv_f64(b), csv_f64(xi1), csv_f64(xi2)));
        }
    }
    if let Some(path) = &cfg.curves_csv {
        io::write_text(path, &curves)?;
    }
    let bytes = emit(cfg, &rows)?;
    Ok((bytes, if all_converged { EXIT_OK } else { EXIT_NONCONVERGED }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn volume_command_pi_and_exit_codes() {
        let dir = tempfile::tempdir().unwrap();
        let design = dir.path().join("sat1.csv");
        std::fs::write(&design, "1\n").unwrap();
        let cfg = VolumeConfig {
            design,
            zero_row_tol: 0.0,
            integration: IntegrationConfig::default(),
        };
        let (bytes, exit) = cmd_volume(&cfg).unwrap();
        assert_eq!(exit, EXIT_OK);
        let v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
        let value = v["result"]["value"].as_f64().unwrap();
        assert!((value - std::f64::consts::PI).abs() < 1e-6);
        assert_eq!(v["result"]["method"], "adaptive-cubature");
        assert!(v["config"]["integration"]["seed"].is_number());

        // starved budget: exit 2
        let mut starved = cfg.clone();
        starved.integration.max_evals = 100;
        let (_, exit) = cmd_volume(&starved).unwrap();
        assert_eq!(exit, EXIT_NONCONVERGED);
    }

    #[test]
    fn volume_command_rank_deficient_note() {
        let dir = tempfile::tempdir().unwrap();
        let design = dir.path().join("rankdef.csv");
        std::fs::write(&design, "1,1\n2,2\n-1,-1\n").unwrap();
        let cfg = VolumeConfig {
            design,
            zero_row_tol: 0.0,
            integration: IntegrationConfig::default(),
        };
        let (bytes, exit) = cmd_volume(&cfg).unwrap();
        assert_eq!(exit, EXIT_OK);
        let v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
        assert_eq!(v["result"]["value"].as_f64().unwrap(), 0.0);
        assert!(v["result"]["converged"].as_bool().unwrap());
        assert!(v["result"]["note"].as_str().unwrap().contains("rank"));
    }

    #[test]
    fn figure1_emits_monotone_volumes_and_curves() {
        let dir = tempfile::tempdir().unwrap();
        let curves = dir.path().join("curves.csv");
        let cfg = Figure1Config {
            x1_list: vec![0.0, 1.0],
            integration: IntegrationConfig::default(),
            curves_csv: Some(curves.clone()),
        };
        let (bytes, exit) = cmd_figure1(&cfg).unwrap();
        assert_eq!(exit, EXIT_OK);
        let v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
        let v0 = v["result"][0]["volume"].as_f64().unwrap();
        let v1 = v["result"][1]["volume"].as_f64().unwrap();
        assert!((v0 - std::f64::consts::PI).abs() < 1e-5);
        assert!((v1 - 2f64.sqrt() * std::f64::consts::PI).abs() < 1e-5);

        let text = std::fs::read_to_string(&curves).unwrap();
        // x1 = 0 rows keep xi1 pinned at zero
        let mut saw_zero_rows = false;
        for line in text.lines().skip(1) {
            let cells: Vec<&str> = line.split(',').collect();
            let x1: f64 = cells[0].parse().unwrap();
            let xi1: f64 = cells[2].parse().unwrap();
            if x1 == 0.0 {
                saw_zero_rows = true;
                assert_eq!(xi1, 0.0);
            }
        }
        assert!(saw_zero_rows);
    }
}
