//! Deterministic adaptive cubature over axis-aligned boxes.
//!
//! Dimension 1 uses the 7/15 Gauss–Kronrod pair; dimensions 2..=4 use the
//! Genz–Malik degree 7 rule with its embedded degree 5 companion. Regions are
//! kept in a worst-error-first queue; each refinement wave pops a batch,
//! bisects every popped region along its suggested axis and evaluates the
//! children in parallel. All orderings (queue tie-breaks, batch layout,
//! summation) are fixed, so results are bit-identical regardless of the rayon
//! pool in use.

use rayon::prelude::*;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Axis-aligned box given by center and half-widths.
#[derive(Debug, Clone)]
pub struct BoxRegion {
    pub center: Vec<f64>,
    pub half: Vec<f64>,
}

impl BoxRegion {
    pub fn new(center: Vec<f64>, half: Vec<f64>) -> Self {
        assert_eq!(center.len(), half.len());
        Self { center, half }
    }

    /// The cube [-r, r]^q.
    pub fn centered_cube(q: usize, r: f64) -> Self {
        Self { center: vec![0.0; q], half: vec![r; q] }
    }

    pub fn volume(&self) -> f64 {
        self.half.iter().map(|h| 2.0 * h).product()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubatureResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: u64,
    pub converged: bool,
}

struct Region {
    center: Vec<f64>,
    half: Vec<f64>,
    value: f64,
    error: f64,
    split_axis: usize,
    seq: u64,
}

impl PartialEq for Region {
    fn eq(&self, other: &Self) -> bool {
        self.seq == other.seq
    }
}
impl Eq for Region {}
impl PartialOrd for Region {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Region {
    fn cmp(&self, other: &Self) -> Ordering {
        // max-heap on error; older region wins ties so order is total
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Neumaier compensated accumulator.
#[derive(Clone, Copy, Default)]
struct Kahan {
    sum: f64,
    c: f64,
}

impl Kahan {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        self.c += if self.sum.abs() >= v.abs() { (self.sum - t) + v } else { (v - t) + self.sum };
        self.sum = t;
    }
    fn value(&self) -> f64 {
        self.sum + self.c
    }
}

// 15-point Kronrod nodes with embedded 7-point Gauss rule (QUADPACK dqk15).
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

fn eval_gk15<F: Fn(&[f64]) -> f64>(f: &F, center: f64, half: f64) -> (f64, f64, u64) {
    let mut fv = [0.0f64; 15];
    for (k, &x) in XGK.iter().enumerate() {
        if k == 7 {
            fv[7] = f(&[center]);
        } else {
            fv[k] = f(&[center - half * x]);
            fv[14 - k] = f(&[center + half * x]);
        }
    }
    let mut resk = 0.0;
    let mut resabs = 0.0;
    for k in 0..8 {
        let pair = if k == 7 { fv[7] } else { fv[k] + fv[14 - k] };
        resk += WGK[k] * pair;
        resabs += WGK[k] * if k == 7 { fv[7].abs() } else { fv[k].abs() + fv[14 - k].abs() };
    }
    let mut resg = WG[3] * fv[7];
    for k in 0..3 {
        let j = 2 * k + 1;
        resg += WG[k] * (fv[j] + fv[14 - j]);
    }
    let reskh = resk * 0.5;
    let mut resasc = WGK[7] * (fv[7] - reskh).abs();
    for k in 0..7 {
        resasc += WGK[k] * ((fv[k] - reskh).abs() + (fv[14 - k] - reskh).abs());
    }
    let value = resk * half;
    let resabs = resabs * half;
    let resasc = resasc * half;
    let mut err = ((resk - resg) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    err = err.max(f64::EPSILON * 50.0 * resabs);
    (value, err, 15)
}

/// Genz–Malik degree 7/5 pair for 2 <= q. Returns (I7, |I7 - I5|, split axis,
/// evaluation count).
fn eval_genz_malik<F: Fn(&[f64]) -> f64>(
    f: &F,
    center: &[f64],
    half: &[f64],
) -> (f64, f64, usize, u64) {
    let q = center.len();
    let qf = q as f64;
    let lambda2 = (9.0f64 / 70.0).sqrt();
    let lambda4 = (9.0f64 / 10.0).sqrt();
    let lambda5 = (9.0f64 / 19.0).sqrt();
    let ratio = lambda2 * lambda2 / (lambda4 * lambda4);

    let w1 = (12824.0 - 9120.0 * qf + 400.0 * qf * qf) / 19683.0;
    let w2 = 980.0 / 6561.0;
    let w3 = (1820.0 - 400.0 * qf) / 19683.0;
    let w4 = 200.0 / 19683.0;
    let w5 = 6859.0 / 19683.0 / (1u64 << q) as f64;
    let we1 = (729.0 - 950.0 * qf + 50.0 * qf * qf) / 729.0;
    let we2 = 245.0 / 486.0;
    let we3 = (265.0 - 100.0 * qf) / 1458.0;
    let we4 = 25.0 / 729.0;

    let mut pt = center.to_vec();
    let f0 = f(&pt);
    let mut evals: u64 = 1;

    let mut sum2 = 0.0;
    let mut sum3 = 0.0;
    let mut divdiff = vec![0.0f64; q];
    for i in 0..q {
        let h = half[i];
        pt[i] = center[i] - lambda2 * h;
        let f1a = f(&pt);
        pt[i] = center[i] + lambda2 * h;
        let f1b = f(&pt);
        pt[i] = center[i] - lambda4 * h;
        let f2a = f(&pt);
        pt[i] = center[i] + lambda4 * h;
        let f2b = f(&pt);
        pt[i] = center[i];
        evals += 4;
        sum2 += f1a + f1b;
        sum3 += f2a + f2b;
        divdiff[i] = ((f1a + f1b - 2.0 * f0) - ratio * (f2a + f2b - 2.0 * f0)).abs();
    }

    let mut sum4 = 0.0;
    for i in 0..q {
        for j in (i + 1)..q {
            for &si in &[-1.0f64, 1.0] {
                for &sj in &[-1.0f64, 1.0] {
                    pt[i] = center[i] + si * lambda4 * half[i];
                    pt[j] = center[j] + sj * lambda4 * half[j];
                    sum4 += f(&pt);
                    evals += 1;
                }
            }
            pt[i] = center[i];
            pt[j] = center[j];
        }
    }

    let mut sum5 = 0.0;
    for mask in 0..(1u64 << q) {
        for i in 0..q {
            let s = if mask >> i & 1 == 1 { 1.0 } else { -1.0 };
            pt[i] = center[i] + s * lambda5 * half[i];
        }
        sum5 += f(&pt);
        evals += 1;
    }

    let vol = half.iter().map(|h| 2.0 * h).product::<f64>();
    let i7 = vol * (w1 * f0 + w2 * sum2 + w3 * sum3 + w4 * sum4 + w5 * sum5);
    let i5 = vol * (we1 * f0 + we2 * sum2 + we3 * sum3 + we4 * sum4);
    let err = (i7 - i5).abs();

    // split along the axis with the largest fourth divided difference,
    // falling back to the widest axis
    let mut axis = 0usize;
    let mut best = -1.0f64;
    for i in 0..q {
        let d = divdiff[i];
        if d > best + 1e-300 || (d == best && half[i] > half[axis]) {
            best = d;
            axis = i;
        }
    }
    if best <= 0.0 {
        for i in 0..q {
            if half[i] > half[axis] {
                axis = i;
            }
        }
    }
    (i7, err, axis, evals)
}

fn eval_region<F: Fn(&[f64]) -> f64>(f: &F, center: Vec<f64>, half: Vec<f64>, seq: u64) -> (Region, u64) {
    let q = center.len();
    if q == 1 {
        let (value, error, n) = eval_gk15(f, center[0], half[0]);
        (Region { center, half, value, error, split_axis: 0, seq }, n)
    } else {
        let (value, error, split_axis, n) = eval_genz_malik(f, &center, &half);
        (Region { center, half, value, error, split_axis, seq }, n)
    }
}

const BATCH: usize = 64;

/// Adaptively integrates `f` over the union of `boxes` until the summed error
/// estimate drops below `max(abs_tol, rel_tol * |value|)` or the evaluation
/// budget is exhausted.
pub fn integrate_boxes<F: Fn(&[f64]) -> f64 + Sync>(
    f: &F,
    boxes: &[BoxRegion],
    rel_tol: f64,
    abs_tol: f64,
    max_evals: u64,
) -> CubatureResult {
    assert!(!boxes.is_empty(), "at least one region required");
    let mut seq: u64 = 0;
    let mut evals: u64 = 0;

    let init: Vec<(Region, u64)> = boxes
        .par_iter()
        .enumerate()
        .map(|(i, b)| eval_region(f, b.center.clone(), b.half.clone(), i as u64))
        .collect();
    seq += boxes.len() as u64;

    let mut heap = BinaryHeap::with_capacity(1024);
    let mut total_val = Kahan::default();
    let mut total_err = Kahan::default();
    for (r, n) in init {
        evals += n;
        total_val.add(r.value);
        total_err.add(r.error);
        heap.push(r);
    }

    let exact_totals = |heap: &BinaryHeap<Region>| -> (f64, f64) {
        let mut items: Vec<(u64, f64, f64)> =
            heap.iter().map(|r| (r.seq, r.value, r.error)).collect();
        items.sort_unstable_by_key(|t| t.0);
        let mut v = Kahan::default();
        let mut e = Kahan::default();
        for (_, val, err) in items {
            v.add(val);
            e.add(err);
        }
        (v.value(), e.value())
    };

    let mut wave: u64 = 0;
    let converged = loop {
        let v = total_val.value();
        let e = total_err.value();
        if e <= abs_tol.max(rel_tol * v.abs()) {
            break true;
        }
        if evals >= max_evals {
            break false;
        }
        let k = BATCH.min(heap.len());
        if k == 0 {
            break true;
        }
        let mut parents = Vec::with_capacity(k);
        for _ in 0..k {
            let r = heap.pop().unwrap();
            total_val.add(-r.value);
            total_err.add(-r.error);
            parents.push(r);
        }
        // bisect each parent along its split axis and lay out children in a
        // fixed order
        let mut jobs: Vec<(Vec<f64>, Vec<f64>, u64)> = Vec::with_capacity(2 * k);
        for p in &parents {
            let a = p.split_axis;
            let mut h = p.half.clone();
            h[a] *= 0.5;
            let mut c_lo = p.center.clone();
            c_lo[a] -= h[a];
            let mut c_hi = p.center.clone();
            c_hi[a] += h[a];
            jobs.push((c_lo, h.clone(), seq));
            jobs.push((c_hi, h, seq + 1));
            seq += 2;
        }
        let children: Vec<(Region, u64)> = jobs
            .into_par_iter()
            .map(|(c, h, s)| eval_region(f, c, h, s))
            .collect();
        for (r, n) in children {
            evals += n;
            total_val.add(r.value);
            total_err.add(r.error);
            heap.push(r);
        }
        wave += 1;
        if wave % 256 == 0 {
            let (v, e) = exact_totals(&heap);
            total_val = Kahan { sum: v, c: 0.0 };
            total_err = Kahan { sum: e, c: 0.0 };
        }
    };

    let (value, error) = exact_totals(&heap);
    CubatureResult { value, error, evaluations: evals, converged }
}

/// Decomposes the hollow box [-b,b]^q minus [-a,a]^q into 2q disjoint slabs
/// (the onion-peel decomposition). `a = 0` degenerates to the full cube.
pub fn shell_boxes(q: usize, a: f64, b: f64) -> Vec<BoxRegion> {
    assert!(b > a && a >= 0.0);
    if a == 0.0 {
        return vec![BoxRegion::centered_cube(q, b)];
    }
    let mut out = Vec::with_capacity(2 * q);
    for d in 0..q {
        for &side in &[-1.0f64, 1.0] {
            let mut center = vec![0.0; q];
            let mut half = vec![0.0; q];
            for j in 0..q {
                if j < d {
                    half[j] = a;
                } else if j > d {
                    half[j] = b;
                } else {
                    center[j] = side * (a + b) / 2.0;
                    half[j] = (b - a) / 2.0;
                }
            }
            out.push(BoxRegion::new(center, half));
        }
    }
    out
}
