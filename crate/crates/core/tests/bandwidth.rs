use spikerate::bandwidth::{jump_chain_density, scv_score, scv_select, ChainView, ScvConfig};
use spikerate::kernel::{kernel_make, KernelFamily};
use spikerate::model::{ModelParams, RateFunction};
use spikerate::simulator::{simulate, EventLog, SimConfig};

fn log(n: usize, horizon: f64) -> EventLog {
    let params = ModelParams::new(n, 1.0, 1.0, 2.0).unwrap();
    simulate(&params, &RateFunction::identity(2.0).unwrap(), &SimConfig::new(horizon, 31)).unwrap()
}

#[test]
fn chain_density_integrates_to_one_on_every_grid_bandwidth() {
    let log = log(20, 100.0);
    let cfg = ScvConfig::for_log(&log);
    let chain = ChainView::of(&log);
    for family in [KernelFamily::Epanechnikov, KernelFamily::TruncGaussian, KernelFamily::HighOrder(2)] {
        let q = kernel_make(family, 1.0, 1).unwrap();
        for &h in &cfg.grid {
            let d = jump_chain_density(&chain, cfg.ell, cfg.n, h, &q).unwrap();
            let mass = d.integral(-h, 2.0 + h, 1e-6).unwrap();
            // The truncated Gaussian jumps at its edges, which slows the quadrature.
            let allowed = if family == KernelFamily::TruncGaussian { 1e-4 } else { 1e-5 };
            assert!((mass - 1.0).abs() <= allowed, "{family} h = {h}: mass {mass}");
        }
    }
}

#[test]
fn score_is_finite_along_the_grid() {
    let log = log(20, 100.0);
    let cfg = ScvConfig::for_log(&log);
    let q = kernel_make(KernelFamily::Epanechnikov, 1.0, 1).unwrap();
    let (h, curve) = scv_select(&log, &cfg, &q).unwrap();
    assert_eq!(curve.len(), cfg.grid.len());
    assert!(curve.iter().all(|(_, s)| s.is_finite()));
    assert!(cfg.grid.contains(&h));
    let min = curve.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    assert_eq!(curve.iter().find(|c| c.0 == h).unwrap().1, min);

    // Quadrature path for ∫π̂², checked at both ends of the grid only.
    let q = kernel_make(KernelFamily::TruncGaussian, 1.0, 1).unwrap();
    for h in [cfg.grid[0], cfg.grid[cfg.grid.len() - 1]] {
        assert!(scv_score(&log, &cfg, h, &q).unwrap().is_finite());
    }
}

#[test]
fn square_term_is_exact_for_polynomial_kernels() {
    // Refining the quadrature tolerance must not move the score of a
    // polynomial kernel, whose squared density is integrated in closed form.
    let log = log(10, 60.0);
    let q = kernel_make(KernelFamily::Epanechnikov, 1.0, 1).unwrap();
    let mut cfg = ScvConfig::for_log(&log);
    let h = cfg.grid[10];
    let coarse = scv_score(&log, &cfg, h, &q).unwrap();
    cfg.tol = 1e-12;
    let fine = scv_score(&log, &cfg, h, &q).unwrap();
    assert_eq!(coarse, fine);
}

#[test]
fn too_few_jumps_is_an_error() {
    let log = log(2, 0.5);
    let q = kernel_make(KernelFamily::Epanechnikov, 1.0, 1).unwrap();
    let mut cfg = ScvConfig::for_log(&log);
    cfg.n = log.len() + 10;
    cfg.ell = cfg.n - 1;
    assert!(scv_score(&log, &cfg, 0.3, &q).is_err());
}
