//! Model scoring and selection.
//!
//! The MDL score of a model is `-maximized loglik + COMP`, with the
//! parametric complexity COMP approximated either from the closed-form
//! volume approximation,
//!
//! ```text
//! COMP ~ (q/2) ln(pi/2) + (1/2) ln C(n - n0, q)
//! ```
//!
//! (n0 = number of zero rows; sparse designs are cheaper), from the
//! numerically integrated volume via `COMP ~ -(q/2) ln(2 pi) + ln vol(S_X)`,
//! or by the BIC baseline `(q/2) ln n`. The exact 2^n-enumeration COMP is
//! implemented as a desk-scale test oracle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit_mle_default, BinaryResponse, LassoDesign, LassoPath};
use crate::linalg::DesignMatrix;
use crate::special::ln_binomial;
use crate::volume::{integrate_volume, IntegrationConfig, VolumeEstimate};

const PI: f64 = std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Criterion {
    #[serde(rename = "approx-volume")]
    ApproxVolume,
    #[serde(rename = "bic")]
    Bic,
    #[serde(rename = "exact-volume")]
    ExactVolume,
}

impl std::str::FromStr for Criterion {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "approx-volume" => Ok(Self::ApproxVolume),
            "bic" => Ok(Self::Bic),
            "exact-volume" => Ok(Self::ExactVolume),
            other => Err(Error::InvalidParameter(format!(
                "unknown criterion '{other}' (expected approx-volume, bic or exact-volume)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelScore {
    /// -maximized log-likelihood in nats; +inf for separated models.
    pub fit_term: f64,
    pub complexity_term: f64,
    /// fit_term + complexity_term.
    pub total: f64,
    pub q: usize,
    pub n: usize,
    pub n0: usize,
    pub criterion: Criterion,
    pub separated: bool,
}

/// COMP approximation (q/2) ln(pi/2) + (1/2) ln C(n - n0, q), in nats.
/// Log-gamma arithmetic, so n = 10^6 stays finite.
pub fn complexity_approx(q: usize, n: usize, n0: usize) -> Result<f64> {
    if n0 > n || n - n0 < q {
        return Err(Error::Overparameterized { effective: n.saturating_sub(n0), q });
    }
    Ok(q as f64 / 2.0 * (PI / 2.0).ln() + 0.5 * ln_binomial(n - n0, q))
}

#[derive(Debug, Clone, Copy)]
pub struct ExactVolumeComplexity {
    pub value: f64,
    /// Interval from propagating the estimate's total uncertainty.
    pub lo: f64,
    pub hi: f64,
}

/// COMP from an integrated volume: -(q/2) ln(2 pi) + ln vol.
pub fn complexity_exact_volume(v: &VolumeEstimate, q: usize) -> Result<ExactVolumeComplexity> {
    if !v.converged {
        return Err(Error::NotConverged);
    }
    if !(v.value > 0.0) {
        return Err(Error::InvalidParameter("volume must be positive for a complexity".into()));
    }
    let base = -(q as f64) / 2.0 * (2.0 * PI).ln();
    let unc = v.total_uncertainty();
    Ok(ExactVolumeComplexity {
        value: base + v.value.ln(),
        lo: base + (v.value - unc).max(f64::MIN_POSITIVE).ln(),
        hi: base + (v.value + unc).ln(),
    })
}

/// Exact parametric complexity ln sum_y p(y | beta_hat(y)) by full 2^n
/// enumeration; separated responses contribute their supremum likelihood 1.
/// Test oracle, guarded to n <= 16.
pub fn comp_exact_enumeration(x: &DesignMatrix) -> Result<f64> {
    let n = x.n();
    const MAX_N: usize = 16;
    if n > MAX_N {
        return Err(Error::EnumerationGuard { n, max: MAX_N });
    }
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for mask in 0..(1u64 << n) {
        let y: Vec<u8> = (0..n).map(|i| (mask >> i & 1) as u8).collect();
        // gradient tolerance 1e-6 puts the likelihood itself within ~1e-12,
        // far below the oracle's needs, and stays achievable in f64 even on
        // flat instances where 1e-8 hits the float plateau
        let fit = crate::fit::fit_mle(x, &BinaryResponse::new(y)?, 1e-6, 200)?;
        let term = if fit.separated {
            1.0
        } else if fit.converged {
            fit.loglik.exp()
        } else {
            return Err(Error::InvalidParameter(format!(
                "ambiguous fit during enumeration (mask {mask})"
            )));
        };
        let t = sum + term;
        comp += if sum.abs() >= term { (sum - t) + term } else { (term - t) + sum };
        sum = t;
    }
    Ok((sum + comp).ln())
}

/// Scores one design against a response under the given criterion.
/// Separated models score +inf (the NML fit term is undefined without an
/// MLE) and are flagged.
pub fn score(x: &DesignMatrix, y: &BinaryResponse, criterion: Criterion) -> Result<ModelScore> {
    score_with_config(x, y, criterion, &IntegrationConfig::default())
}

pub fn score_with_config(
    x: &DesignMatrix,
    y: &BinaryResponse,
    criterion: Criterion,
    integration: &IntegrationConfig,
) -> Result<ModelScore> {
    let (q, n, n0) = (x.q(), x.n(), x.n0_zero_rows());
    let complexity_term = match criterion {
        Criterion::ApproxVolume => complexity_approx(q, n, n0)?,
        Criterion::Bic => q as f64 / 2.0 * (n as f64).ln(),
        Criterion::ExactVolume => {
            let v = integrate_volume(x, integration)?;
            complexity_exact_volume(&v, q)?.value
        }
    };
    let fit = fit_mle_default(x, y)?;
    if fit.separated {
        return Ok(ModelScore {
            fit_term: f64::INFINITY,
            complexity_term,
            total: f64::INFINITY,
            q,
            n,
            n0,
            criterion,
            separated: true,
        });
    }
    if !fit.converged {
        return Err(Error::NotConverged);
    }
    let fit_term = -fit.loglik;
    Ok(ModelScore {
        fit_term,
        complexity_term,
        total: fit_term + complexity_term,
        q,
        n,
        n0,
        criterion,
        separated: false,
    })
}

/// Named candidate designs sharing one response length.
#[derive(Debug, Clone)]
pub struct CandidateSet {
    entries: Vec<(String, DesignMatrix)>,
}

impl CandidateSet {
    pub fn new(entries: Vec<(String, DesignMatrix)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyInput("candidate set".into()));
        }
        let n = entries[0].1.n();
        if entries.iter().any(|(_, x)| x.n() != n) {
            return Err(Error::DimensionMismatch(
                "all candidate designs must share the observation count".into(),
            ));
        }
        Ok(Self { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(String, DesignMatrix)> {
        self.entries.iter()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RankedModel {
    pub name: String,
    #[serde(flatten)]
    pub score: ModelScore,
}

/// Scores every candidate and ranks ascending by total; ties break toward
/// smaller q, then input order. Errors when every candidate is separated.
pub fn select(
    candidates: &CandidateSet,
    y: &BinaryResponse,
    criterion: Criterion,
) -> Result<Vec<RankedModel>> {
    select_with_config(candidates, y, criterion, &IntegrationConfig::default())
}

pub fn select_with_config(
    candidates: &CandidateSet,
    y: &BinaryResponse,
    criterion: Criterion,
    integration: &IntegrationConfig,
) -> Result<Vec<RankedModel>> {
    let mut scored = Vec::with_capacity(candidates.len());
    for (idx, (name, x)) in candidates.iter().enumerate() {
        let s = score_with_config(x, y, criterion, integration)?;
        scored.push((idx, RankedModel { name: name.clone(), score: s }));
    }
    if scored.iter().all(|(_, r)| r.score.separated) {
        return Err(Error::AllSeparated);
    }
    scored.sort_by(|(ia, a), (ib, b)| {
        a.score
            .total
            .total_cmp(&b.score.total)
            .then_with(|| a.score.q.cmp(&b.score.q))
            .then_with(|| ia.cmp(ib))
    });
    Ok(scored.into_iter().map(|(_, r)| r).collect())
}

/// Selects a lasso path point by the approximate volume criterion. The
/// submodel at path index k has q = active-set size (+1 for the intercept)
/// and n0 = rows untouched by the active columns (intercept excluded).
/// Points whose submodel is overparameterized (n - n0 < q) or uncertified
/// score +inf.
pub fn select_lambda_approx_volume(
    design: &LassoDesign,
    path: &LassoPath,
) -> Result<(usize, Vec<f64>)> {
    if path.is_empty() {
        return Err(Error::EmptyInput("lasso path".into()));
    }
    let n = design.n();
    let mut scores = Vec::with_capacity(path.len());
    for k in 0..path.len() {
        let active = path.active_set(k);
        let q = active.len() + if path.intercept { 1 } else { 0 };
        let n0 = design.uncovered_rows(&active);
        let comp = if q == 0 || n - n0 < q {
            f64::INFINITY
        } else {
            complexity_approx(q, n, n0)?
        };
        let score = if path.converged[k] { -path.loglik(k) + comp } else { f64::INFINITY };
        scores.push(score);
    }
    let mut best = 0usize;
    for k in 1..scores.len() {
        if scores[k] < scores[best] {
            best = k;
        }
    }
    if !scores[best].is_finite() {
        return Err(Error::AllSeparated);
    }
    Ok((best, scores))
}
