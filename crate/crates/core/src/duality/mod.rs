//! Sign-vector faces at the sphere-at-infinity and the boundary duality
//! between the natural and expectation parameter spaces.
//!
//! The hyperplanes `x_i beta = 0` cut the radius-r sphere S_r into spherical
//! polytopes labeled by sign vectors `sigma(beta) = (sign(x_1 beta), ...)`.
//! The delta-softened variant thresholds at `Delta_delta = 2 artanh(cos
//! delta)`, chosen so that `|phi_i(beta)| < pi/2 - delta` exactly when
//! `|x_i beta| < Delta_delta`. For generic X the embedding phi carries the
//! face F_s toward the cube face G_s (xi_i pinned at +-pi/2 where s_i != 0),
//! and the reparameterisation map f = X^T h ∘ phi carries it toward the
//! polytope H_s = X^T h(G_s) in the boundary of the expectation polytope;
//! dimensions flip (k-dimensional faces pair with (q-1-k)-dimensional ones).
//! Both convergences are measured here with sampled Hausdorff distances.
//!
//! The vertices of the expectation polytope correspond to data vectors with
//! no MLE, which is why the LP separation count equals the number of chambers
//! of the arrangement.

pub mod lp;

use std::collections::BTreeMap;

use nalgebra::DVector;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{embed_phi, NaturalParam};
use crate::linalg::DesignMatrix;
use crate::special::binomial_u128;

const HALF_PI: f64 = std::f64::consts::FRAC_PI_2;

/// Element of {-1, 0, +1}^n labeling a face of the arrangement on S_r.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SignVector {
    s: Vec<i8>,
}

impl SignVector {
    pub fn new(s: Vec<i8>) -> Result<Self> {
        if s.iter().any(|&v| !(-1..=1).contains(&v)) {
            return Err(Error::InvalidParameter("sign entries must be -1, 0 or +1".into()));
        }
        if s.is_empty() {
            return Err(Error::EmptyInput("sign vector".into()));
        }
        Ok(Self { s })
    }

    pub fn entries(&self) -> &[i8] {
        &self.s
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    /// Number of zero components n_s.
    pub fn n_zeros(&self) -> usize {
        self.s.iter().filter(|&&v| v == 0).count()
    }

    pub fn is_full_sign(&self) -> bool {
        self.n_zeros() == 0
    }

    /// Compact display like "++-0+".
    pub fn label(&self) -> String {
        self.s
            .iter()
            .map(|&v| match v {
                1 => '+',
                -1 => '-',
                _ => '0',
            })
            .collect()
    }
}

/// Delta_delta = 2 artanh(sin(pi/2 - delta)) for delta in (0, pi/2).
///
/// Evaluated as ln((1 + cos delta) / (2 sin^2(delta/2))), which stays finite
/// and accurate for delta down to the underflow threshold, where the naive
/// artanh(cos delta) would round to artanh(1) = inf.
pub fn delta_threshold(delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < HALF_PI) {
        return Err(Error::InvalidParameter(format!(
            "delta must lie in (0, pi/2), got {delta}"
        )));
    }
    let s = (delta / 2.0).sin();
    Ok(((1.0 + delta.cos()) / (2.0 * s * s)).ln())
}

/// Plain sign vector of (x_1 beta, ..., x_n beta); exact zeros map to 0.
pub fn sign_map(x: &DesignMatrix, beta: &[f64]) -> SignVector {
    let s = (0..x.n())
        .map(|i| {
            let v = x.row_dot(i, beta);
            if v > 0.0 {
                1
            } else if v < 0.0 {
                -1
            } else {
                0
            }
        })
        .collect();
    SignVector { s }
}

/// Softened sign vector: entries with |x_i beta| <= Delta_delta map to 0.
pub fn sign_map_delta(x: &DesignMatrix, beta: &[f64], delta: f64) -> Result<SignVector> {
    let thr = delta_threshold(delta)?;
    let s = (0..x.n())
        .map(|i| {
            let v = x.row_dot(i, beta);
            if v > thr {
                1
            } else if v < -thr {
                -1
            } else {
                0
            }
        })
        .collect();
    Ok(SignVector { s })
}

/// Uniform point on the radius-r sphere in R^q (Gaussian direction).
pub fn sample_sphere(q: usize, r: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..q).map(|_| standard_normal(rng)).collect();
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|a| a * r / norm).collect();
        }
    }
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let u1: f64 = rng.random();
        let u2: f64 = rng.random();
        if u1 > 1e-300 {
            return (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
        }
    }
}

/// Points of one delta-face F_{s delta} collected by sampling S_r.
#[derive(Debug, Clone)]
pub struct FaceSample {
    pub s: SignVector,
    pub points: Vec<Vec<f64>>,
    pub r: f64,
    pub delta: f64,
}

impl FaceSample {
    /// Checks the defining inequalities of F_{s delta} on every stored point.
    pub fn validate(&self, x: &DesignMatrix) -> Result<()> {
        let thr = delta_threshold(self.delta)?;
        for p in &self.points {
            for (i, &si) in self.s.entries().iter().enumerate() {
                let v = x.row_dot(i, p);
                let ok = match si {
                    0 => v.abs() <= thr,
                    1 => v > thr,
                    _ => v < -thr,
                };
                if !ok {
                    return Err(Error::InvalidParameter(format!(
                        "point violates face definition at row {i}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Samples S_r and groups the points by their delta-sign vector.
pub fn sample_faces(
    x: &DesignMatrix,
    r: f64,
    delta: f64,
    samples: usize,
    seed: u64,
) -> Result<Vec<FaceSample>> {
    let thr = delta_threshold(delta)?;
    let q = x.q();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut groups: BTreeMap<SignVector, Vec<Vec<f64>>> = BTreeMap::new();
    for _ in 0..samples {
        let beta = sample_sphere(q, r, &mut rng);
        let s = (0..x.n())
            .map(|i| {
                let v = x.row_dot(i, &beta);
                if v > thr {
                    1
                } else if v < -thr {
                    -1
                } else {
                    0
                }
            })
            .collect::<Vec<i8>>();
        groups.entry(SignVector { s }).or_default().push(beta);
    }
    Ok(groups
        .into_iter()
        .map(|(s, points)| FaceSample { s, points, r, delta })
        .collect())
}

/// Observed delta-sign vectors on S_r with multiplicities.
pub fn enumerate_sign_vectors(
    x: &DesignMatrix,
    r: f64,
    delta: f64,
    samples: usize,
    seed: u64,
) -> Result<BTreeMap<SignVector, usize>> {
    let faces = sample_faces(x, r, delta, samples, seed)?;
    Ok(faces.into_iter().map(|f| (f.s, f.points.len())).collect())
}

/// Chamber count of a generic central arrangement of n hyperplanes in R^q:
/// 2 * sum_{k=0}^{q-1} C(n-1, k).
pub fn generic_region_count(n: usize, q: usize) -> u128 {
    2 * (0..q).map(|k| binomial_u128(n - 1, k)).sum::<u128>()
}

/// Expectation parameter eta = X^T e for some mean vector e in [0,1]^n; lies
/// in the convex hull of {X^T y : y in {0,1}^n} by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectationPoint(pub DVector<f64>);

/// The reparameterisation map f(beta) = X^T h(phi(beta)) with
/// h_i(xi) = (1 + sin xi_i)/2, composed literally through the cube.
pub fn reparam_map_f(x: &DesignMatrix, beta: &NaturalParam) -> ExpectationPoint {
    let xi = embed_phi(x, beta);
    let e = xi.0.map(|v| 0.5 * (1.0 + v.sin()));
    ExpectationPoint(x.matrix().transpose() * e)
}

fn reparam_map_f_slice(x: &DesignMatrix, beta: &[f64]) -> Vec<f64> {
    let q = x.q();
    let mut out = vec![0.0; q];
    for i in 0..x.n() {
        let xi = crate::geometry::phi_scalar(x.row_dot(i, beta));
        let e = 0.5 * (1.0 + xi.sin());
        for j in 0..q {
            out[j] += x.matrix()[(i, j)] * e;
        }
    }
    out
}

/// Face of the closed cube: xi_i pinned at s_i pi/2 wherever s_i != 0, the
/// remaining n_s coordinates free in [-pi/2, pi/2].
#[derive(Debug, Clone)]
pub struct CubeFace {
    pub s: SignVector,
    pub fixed: Vec<(usize, f64)>,
    pub free: Vec<usize>,
}

impl CubeFace {
    pub fn dim(&self) -> usize {
        self.free.len()
    }

    /// The 2^{n_s} corner points of the face.
    pub fn vertices(&self) -> Vec<DVector<f64>> {
        let n = self.s.len();
        let k = self.free.len();
        let mut out = Vec::with_capacity(1 << k);
        for mask in 0..(1u64 << k) {
            let mut v = DVector::zeros(n);
            for &(i, val) in &self.fixed {
                v[i] = val;
            }
            for (b, &j) in self.free.iter().enumerate() {
                v[j] = if mask >> b & 1 == 1 { HALF_PI } else { -HALF_PI };
            }
            out.push(v);
        }
        out
    }

    /// Exact Euclidean distance from a point of R^n to the face.
    pub fn distance_to(&self, p: &DVector<f64>) -> f64 {
        let mut acc = 0.0;
        for &(i, val) in &self.fixed {
            acc += (p[i] - val).powi(2);
        }
        for &j in &self.free {
            let d = (p[j].abs() - HALF_PI).max(0.0);
            acc += d * d;
        }
        acc.sqrt()
    }

    /// Deterministic reference points: all vertices plus `extra` uniform
    /// interior samples of the free coordinates.
    pub fn reference_points(&self, extra: usize, seed: u64) -> Vec<DVector<f64>> {
        let mut pts = self.vertices();
        if !self.free.is_empty() {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..extra {
                let mut v = DVector::zeros(self.s.len());
                for &(i, val) in &self.fixed {
                    v[i] = val;
                }
                for &j in &self.free {
                    v[j] = (rng.random::<f64>() * 2.0 - 1.0) * HALF_PI;
                }
                pts.push(v);
            }
        }
        pts
    }
}

/// G_s, the cube face selected by a sign vector.
pub fn cube_face_g(s: &SignVector) -> CubeFace {
    let mut fixed = Vec::new();
    let mut free = Vec::new();
    for (i, &si) in s.entries().iter().enumerate() {
        if si == 0 {
            free.push(i);
        } else {
            fixed.push((i, si as f64 * HALF_PI));
        }
    }
    CubeFace { s: s.clone(), fixed, free }
}

/// H_s = X^T h(G_s) described by the images of the 2^{n_s} face vertices.
/// Errors when n_s exceeds q-1, which cannot occur for generic X on S_r.
pub fn exp_face_h(x: &DesignMatrix, s: &SignVector) -> Result<Vec<DVector<f64>>> {
    if s.len() != x.n() {
        return Err(Error::DimensionMismatch(format!(
            "sign vector length {} vs n = {}",
            s.len(),
            x.n()
        )));
    }
    if s.n_zeros() > x.q().saturating_sub(1) {
        return Err(Error::InvalidParameter(format!(
            "face has n_s = {} zeros; generic designs admit at most q-1 = {}",
            s.n_zeros(),
            x.q() - 1
        )));
    }
    let face = cube_face_g(s);
    Ok(face
        .vertices()
        .into_iter()
        .map(|v| {
            let e = v.map(|t| 0.5 * (1.0 + t.sin()));
            x.matrix().transpose() * e
        })
        .collect())
}

/// Hausdorff distance between two finite point sets, brute force.
pub fn hausdorff_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput("hausdorff distance of an empty set".into()));
    }
    let directed = |from: &[Vec<f64>], to: &[Vec<f64>]| -> f64 {
        from.iter()
            .map(|p| {
                to.iter()
                    .map(|r| {
                        p.iter()
                            .zip(r.iter())
                            .map(|(u, v)| (u - v) * (u - v))
                            .sum::<f64>()
                            .sqrt()
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    Ok(directed(a, b).max(directed(b, a)))
}

#[derive(Debug, Clone)]
pub struct FaceDualityRow {
    pub s: SignVector,
    pub r: f64,
    pub d_h_phi_g: f64,
    pub d_h_f_h: f64,
    pub sample_count: usize,
}

/// Per-face, per-radius Hausdorff distances d_H(phi(F_{s d}), G_s) and
/// d_H(f(F_{s d}), H_s) from dense sphere samples. Faces that are empty at a
/// given radius are skipped (they simply produce no row).
pub fn duality_check(
    x: &DesignMatrix,
    r_list: &[f64],
    delta: f64,
    samples: usize,
    seed: u64,
) -> Result<Vec<FaceDualityRow>> {
    let mut rows = Vec::new();
    for (ri, &r) in r_list.iter().enumerate() {
        let faces = sample_faces(x, r, delta, samples, seed.wrapping_add(ri as u64))?;
        for (fi, face) in faces.iter().enumerate() {
            if face.s.n_zeros() > x.q().saturating_sub(1) {
                continue;
            }
            let g = cube_face_g(&face.s);
            let phi_pts: Vec<DVector<f64>> = face
                .points
                .iter()
                .map(|b| embed_phi(x, &NaturalParam(DVector::from_column_slice(b))).0)
                .collect();
            // direction phi(F) -> G_s is exact; direction G_s -> phi(F) uses
            // reference points on the face
            let to_face = phi_pts.iter().map(|p| g.distance_to(p)).fold(0.0, f64::max);
            let refs = g.reference_points(
                256 * (1 << g.dim().min(3)),
                seed.wrapping_add(7919 * (fi as u64 + 1)),
            );
            let from_face = refs
                .iter()
                .map(|gp| phi_pts.iter().map(|p| (gp - p).norm()).fold(f64::INFINITY, f64::min))
                .fold(0.0, f64::max);
            let d_h_phi_g = to_face.max(from_face);

            let f_pts: Vec<Vec<f64>> =
                face.points.iter().map(|b| reparam_map_f_slice(x, b)).collect();
            let h_refs: Vec<Vec<f64>> = refs
                .iter()
                .map(|v| {
                    let e = v.map(|t| 0.5 * (1.0 + t.sin()));
                    let eta = x.matrix().transpose() * e;
                    eta.iter().cloned().collect()
                })
                .collect();
            let d_h_f_h = hausdorff_distance(&f_pts, &h_refs)?;
            rows.push(FaceDualityRow {
                s: face.s.clone(),
                r,
                d_h_phi_g,
                d_h_f_h,
                sample_count: face.points.len(),
            });
        }
    }
    Ok(rows)
}

/// Number of data vectors y in {0,1}^n admitting no MLE, by exhaustive LP
/// separation tests. Guarded to n <= 20.
pub fn count_no_mle(x: &DesignMatrix) -> Result<usize> {
    let n = x.n();
    const MAX_N: usize = 20;
    if n > MAX_N {
        return Err(Error::EnumerationGuard { n, max: MAX_N });
    }
    let mut count = 0usize;
    let mut y = vec![0u8; n];
    for mask in 0..(1u64 << n) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = (mask >> i & 1) as u8;
        }
        if lp::separation_test(x.matrix(), &y).separated {
            count += 1;
        }
    }
    Ok(count)
}

/// Number of connected components of {beta : x_i beta != 0 for all i},
/// counted as distinct full-sign vectors observed on the unit sphere.
///
/// Random sampling alone misses thin chambers, so for q <= 3 the sampler is
/// seeded with deterministic probes: every chamber of a central arrangement
/// with n >= 2 touches an arrangement vertex (q = 3: directions x_i cross
/// x_j; q = 2: rotated rows), and the sign vectors adjacent to each vertex
/// are enumerated and kept when the separation LP certifies a witness.
pub fn count_components(x: &DesignMatrix, samples: usize, seed: u64) -> usize {
    let q = x.q();
    let mut seen: std::collections::BTreeSet<SignVector> = std::collections::BTreeSet::new();

    let try_candidate = |seen: &mut std::collections::BTreeSet<SignVector>, s: Vec<i8>| {
        if s.iter().any(|&v| v == 0) {
            return;
        }
        let sv = SignVector { s };
        if seen.contains(&sv) {
            return;
        }
        let y: Vec<u8> = sv.entries().iter().map(|&v| ((v + 1) / 2) as u8).collect();
        if lp::separation_test(x.matrix(), &y).separated {
            seen.insert(sv);
        }
    };

    let template = |dir: &[f64]| -> Vec<i8> {
        (0..x.n())
            .map(|i| {
                let v = x.row_dot(i, dir);
                if v > 1e-12 {
                    1
                } else if v < -1e-12 {
                    -1
                } else {
                    0
                }
            })
            .collect()
    };

    match q {
        1 => {
            try_candidate(&mut seen, template(&[1.0]));
            try_candidate(&mut seen, template(&[-1.0]));
        }
        2 => {
            for i in 0..x.n() {
                let row = x.row_vec(i);
                for dir in [[-row[1], row[0]], [row[1], -row[0]]] {
                    if dir[0].abs() + dir[1].abs() < 1e-14 {
                        continue;
                    }
                    let base = template(&dir);
                    for si in [-1i8, 1] {
                        let mut s = base.clone();
                        s[i] = si;
                        try_candidate(&mut seen, s);
                    }
                }
            }
        }
        3 => {
            for i in 0..x.n() {
                for j in (i + 1)..x.n() {
                    let a = x.row_vec(i);
                    let b = x.row_vec(j);
                    let cross = [
                        a[1] * b[2] - a[2] * b[1],
                        a[2] * b[0] - a[0] * b[2],
                        a[0] * b[1] - a[1] * b[0],
                    ];
                    let norm = cross.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if norm < 1e-14 {
                        continue;
                    }
                    for sign in [1.0f64, -1.0] {
                        let dir: Vec<f64> = cross.iter().map(|v| sign * v / norm).collect();
                        let base = template(&dir);
                        for si in [-1i8, 1] {
                            for sj in [-1i8, 1] {
                                let mut s = base.clone();
                                s[i] = si;
                                s[j] = sj;
                                try_candidate(&mut seen, s);
                            }
                        }
                    }
                }
            }
        }
        _ => {}
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let batch = 4096usize;
    let mut drawn = 0usize;
    let mut quiet_batches = 0usize;
    while drawn < samples && quiet_batches < 8 {
        let before = seen.len();
        for _ in 0..batch.min(samples - drawn) {
            let beta = sample_sphere(q, 1.0, &mut rng);
            let s = sign_map(x, &beta);
            if s.is_full_sign() {
                seen.insert(s);
            }
        }
        drawn += batch;
        quiet_batches = if seen.len() == before { quiet_batches + 1 } else { 0 };
    }
    seen.len()
}
