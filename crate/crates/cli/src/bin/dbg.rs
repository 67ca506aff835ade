use logvol_core::linalg::{DesignMatrix, min_subset_sigma, DEFAULT_SUBSET_CAP};
use logvol_core::volume::{integrate_volume, IntegrationConfig};
use nalgebra::DMatrix;
use rand::Rng; use rand::SeedableRng; use rand_chacha::ChaCha8Rng;
fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    for trial in 0..100usize {
        let q = 1 + trial % 3;
        let n = q + (trial / 3) % (7 - q);
        let n = n.max(q);
        let x = loop {
            let m = DMatrix::from_fn(n, q, |_, _| rng.random::<f64>() * 2.0 - 1.0);
            let x = DesignMatrix::new(m).unwrap();
            if x.is_full_rank() { break x; }
        };
        if trial != 8 { continue; }
        let sigma = min_subset_sigma(&x, DEFAULT_SUBSET_CAP).unwrap();
        let t0 = std::time::Instant::now();
        let v = integrate_volume(&x, &IntegrationConfig::default()).unwrap();
        println!("trial={trial} n={n} q={q} sigma={sigma:.2e} conv={} val={:.6} err={:.2e} tail={:.2e} analytic={} R={:.1} evals={} t={:.1}s",
            v.converged, v.value, v.err_integration, v.tail_bound, v.tail_is_analytic, v.radius, v.evaluations, t0.elapsed().as_secs_f64());
        break;
    }
}
