//! The `verify` subcommand: a fast self-check suite over the library's core
//! identities and invariants. One line per check on stderr, JSON summary on
//! stdout, exit 2 on any failure.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use logvol_core::duality;
use logvol_core::fit::{fit_lasso_path, fit_mle_default, BinaryResponse, LassoConfig, LassoDesign};
use logvol_core::geometry::{self, NaturalParam};
use logvol_core::linalg::{column_space_equal, minor_sum_check, DesignMatrix};
use logvol_core::selection;
use logvol_core::volume::{integrate_volume, IntegrationConfig};

const PI: f64 = std::f64::consts::PI;

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: String, out: &mut Vec<CheckResult>) {
    eprintln!("[{}] {name}: {detail}", if passed { "pass" } else { "FAIL" });
    out.push(CheckResult { name: name.into(), passed, detail });
}

pub fn run_verify(seed: u64) -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut results = Vec::new();

    // minor-sum identity and inequality chain
    {
        let mut worst = 0.0f64;
        let mut draws = 0;
        for n in 2..=8usize {
            for q in 1..=n.min(4) {
                for _ in 0..3 {
                    let v = DMatrix::from_fn(n, q, |_, _| rng.random::<f64>() * 2.0 - 1.0);
                    let r = minor_sum_check(&v);
                    worst = worst
                        .max(r.rel_err)
                        .max(r.lower_violation)
                        .max(r.upper_violation)
                        .max(r.mean_violation);
                    draws += 1;
                }
            }
        }
        check(
            "minor-sum-identity",
            worst < 1e-10,
            format!("max deviation {worst:.3e} over {draws} draws"),
            &mut results,
        );
    }

    // saturated volumes
    {
        let cfg = IntegrationConfig::default();
        let mut ok = true;
        let mut detail = String::new();
        for q in 1..=2usize {
            let x = DesignMatrix::new(DMatrix::identity(q, q)).unwrap();
            let v = integrate_volume(&x, &cfg).unwrap();
            let want = PI.powi(q as i32);
            let rel = (v.value - want).abs() / want;
            ok &= v.converged && rel < 1e-6;
            detail.push_str(&format!("q={q} rel {rel:.2e}; "));
        }
        check("saturated-volume", ok, detail, &mut results);
    }

    // closed-form diagonal
    {
        let x = DesignMatrix::from_rows(2, 1, &[1.0, 1.0]).unwrap();
        let v = integrate_volume(&x, &IntegrationConfig::default()).unwrap();
        let want = 2f64.sqrt() * PI;
        let rel = (v.value - want).abs() / want;
        check(
            "diagonal-volume-sqrt2pi",
            v.converged && rel < 1e-6,
            format!("rel {rel:.2e}"),
            &mut results,
        );
    }

    // Fisher matrix two-route and Jacobian finite differences
    {
        let x = DesignMatrix::new(DMatrix::from_fn(5, 2, |_, _| rng.random::<f64>() * 2.0 - 1.0))
            .unwrap();
        let beta = NaturalParam(DVector::from_fn(2, |_, _| rng.random::<f64>() * 2.0 - 1.0));
        let f = geometry::fisher_info(&x, &beta);
        let j = geometry::phi_jacobian(&x, &beta);
        let jj = j.transpose() * &j;
        let mut worst = (f.clone() - &jj).amax();
        let h = 1e-5;
        for c in 0..2 {
            let mut bp = beta.0.clone();
            bp[c] += h;
            let mut bm = beta.0.clone();
            bm[c] -= h;
            let fp = geometry::embed_phi(&x, &NaturalParam(bp));
            let fm = geometry::embed_phi(&x, &NaturalParam(bm));
            for i in 0..5 {
                let fd = (fp.0[i] - fm.0[i]) / (2.0 * h);
                worst = worst.max((fd - j[(i, c)]).abs());
            }
        }
        check(
            "fisher-jacobian-consistency",
            worst < 1e-6,
            format!("max deviation {worst:.2e}"),
            &mut results,
        );
    }

    // delta-threshold equivalence
    {
        let mut ok = true;
        for _ in 0..500 {
            let delta = rng.random::<f64>() * 1.4 + 0.05;
            let u = (rng.random::<f64>() * 2.0 - 1.0) * 25.0;
            let thr = duality::delta_threshold(delta).unwrap();
            let phi = geometry::phi_scalar(u);
            if (phi.abs() - (PI / 2.0 - delta)).abs() < 1e-9 || (u.abs() - thr).abs() < 1e-9 {
                continue;
            }
            ok &= (phi.abs() < PI / 2.0 - delta) == (u.abs() < thr);
        }
        check("delta-threshold-equivalence", ok, "500 sampled points".into(), &mut results);
    }

    // MLE-count corollary on the reference generic design
    {
        let x = DesignMatrix::from_rows(3, 2, &[1.0, 0.1, -0.2, 1.0, 0.8, -0.7]).unwrap();
        let lp_count = duality::count_no_mle(&x).unwrap();
        let comp = duality::count_components(&x, 100_000, seed);
        check(
            "mle-count-corollary",
            lp_count == 6 && comp == 6,
            format!("no-MLE {lp_count}, components {comp}"),
            &mut results,
        );
    }

    // complexity: integrated volume vs closed form on the pinned design
    {
        let x = DesignMatrix::from_rows(2, 1, &[0.0, 1.0]).unwrap();
        let v = integrate_volume(&x, &IntegrationConfig::default()).unwrap();
        let exact = selection::complexity_exact_volume(&v, 1).unwrap().value;
        let approx = selection::complexity_approx(1, 2, 1).unwrap();
        check(
            "complexity-exact-vs-approx",
            (exact - approx).abs() < 1e-4,
            format!("exact {exact:.8} approx {approx:.8}"),
            &mut results,
        );
    }

    // determinism: bit-identical rerun
    {
        let x = DesignMatrix::from_rows(3, 2, &[1.0, 0.1, -0.2, 1.0, 0.8, -0.7]).unwrap();
        let a = integrate_volume(&x, &IntegrationConfig::default()).unwrap();
        let b = integrate_volume(&x, &IntegrationConfig::default()).unwrap();
        check(
            "volume-determinism",
            a.value.to_bits() == b.value.to_bits() && a.evaluations == b.evaluations,
            format!("value {:.12}", a.value),
            &mut results,
        );
    }

    // column-space invariance
    {
        let x = DesignMatrix::from_rows(3, 2, &[1.0, 0.1, -0.2, 1.0, 0.8, -0.7]).unwrap();
        let m = DMatrix::from_row_slice(2, 2, &[1.3, -0.4, 0.2, 0.9]);
        let xm = DesignMatrix::new(x.matrix() * &m).unwrap();
        let same = column_space_equal(&x, &xm).unwrap();
        let va = integrate_volume(&x, &IntegrationConfig::default()).unwrap();
        let vb = integrate_volume(&xm, &IntegrationConfig::default()).unwrap();
        let rel = (va.value - vb.value).abs() / va.value;
        check(
            "column-space-invariance",
            same && rel < 2e-4,
            format!("rel {rel:.2e}"),
            &mut results,
        );
    }

    // Newton vs separation on an enumerable instance
    {
        let x = DesignMatrix::new(DMatrix::from_fn(5, 2, |_, _| rng.random::<f64>() * 2.0 - 1.0))
            .unwrap();
        let mut ok = true;
        for mask in 0..32u32 {
            let y: Vec<u8> = (0..5).map(|i| (mask >> i & 1) as u8).collect();
            let lp = duality::lp::separation_test(x.matrix(), &y).separated;
            let fit = fit_mle_default(&x, &BinaryResponse::new(y).unwrap()).unwrap();
            ok &= fit.separated == lp && !fit.ambiguous();
        }
        check("newton-separation-agreement", ok, "32 responses enumerated".into(), &mut results);
    }

    // lasso path head and KKT certification
    {
        let n = 40usize;
        let design = LassoDesign::new(
            n,
            (0..6)
                .map(|_| {
                    logvol_core::fit::Column::Dense(
                        (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect(),
                    )
                })
                .collect(),
        )
        .unwrap();
        let y: Vec<u8> = (0..n).map(|_| (rng.random::<f64>() < 0.5) as u8).collect();
        let cfg = LassoConfig { n_lambdas: 20, ..Default::default() };
        let path = fit_lasso_path(&design, &y, &cfg).unwrap();
        check(
            "lasso-kkt-certified",
            path.nonzero[0] == 0 && path.converged.iter().all(|&c| c),
            format!("{} path points", path.len()),
            &mut results,
        );
    }

    results
}
