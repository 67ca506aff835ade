//! Fisher information volumes of logistic regression models.
//!
//! A logistic regression model with full-rank `n x q` design matrix `X`
//! constrains the per-observation log-odds to `lambda = X beta`. Equipping the
//! natural parameter space with the Fisher information metric makes the model a
//! Riemannian manifold whose total volume is finite and bounded between
//! `pi^q` and `C(n,q) pi^q`. This crate computes that volume by validated
//! adaptive cubature, verifies the bounding theory with brute-force oracles at
//! desk scale, and uses the volume (and a closed-form approximation to it) as a
//! complexity term for MDL-style model selection.
//!
//! Module map:
//!
//! - [`linalg`]: design matrices, minors over row subsets, rank/genericity,
//!   degeneracy counting and the generalized Pythagoras/minor-sum identity.
//! - [`geometry`]: saturated-model parameterizations, the isometric embedding
//!   of the model into the Euclidean cube, its Jacobian, the Fisher matrix and
//!   the volume density.
//! - [`volume`]: adaptive-shell cubature for the volume integral, analytic
//!   tail bounds, bound checks and volume-jump measurement.
//! - [`duality`]: sign-vector faces on large spheres, the reparameterisation
//!   map to expectation parameters, Hausdorff-distance duality checks and
//!   MLE-nonexistence counting.
//! - [`fit`]: Newton maximum-likelihood fitting with separation detection and
//!   an l1-regularized path fitter.
//! - [`selection`]: parametric-complexity approximations and model scoring.

pub mod duality;
pub mod error;
pub mod fit;
pub mod geometry;
pub mod linalg;
pub mod selection;
pub mod special;
pub mod volume;

pub use error::Error;
pub use linalg::{DesignMatrix, IndexSubset};
pub use volume::{IntegrationConfig, VolumeEstimate};
