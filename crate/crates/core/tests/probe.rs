//! Temporary scale-calibration probe; run with --ignored --nocapture.

use ndarray::Array2;
use tvfwi_core::harness::{cmd_forward, cmd_noise, cmd_smooth, cmd_sweep, ExperimentConfig};
use tvfwi_core::{io, models, proximal};

fn smoke_model() -> tvfwi_core::VelocityModel {
    let salt = models::salt().unwrap();
    tvfwi_core::VelocityModel::new(
        20.0,
        20.0,
        Array2::from_shape_fn((25, 50), |(i, j)| salt.values()[[2 * i, 2 * j]]),
    )
    .unwrap()
}

fn trace_summary(path: &std::path::Path) -> (f64, f64, f64, f64) {
    // returns (final tv, final rmse, final ssim, max ssim)
    let text = std::fs::read_to_string(path).unwrap();
    let mut last = (0.0, 0.0, 0.0);
    let mut max_ssim = f64::MIN;
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let tv: f64 = f[2].parse().unwrap();
        let rmse: f64 = f[4].parse().unwrap();
        let ssim: f64 = f[5].parse().unwrap();
        max_ssim = max_ssim.max(ssim);
        last = (tv, rmse, ssim);
    }
    (last.0, last.1, last.2, max_ssim)
}

#[test]
#[ignore]
fn probe_smoke_sweep() {
    let smoke = smoke_model();
    let tv = proximal::l12_norm(&proximal::diff_apply(smoke.values()));
    println!("smoke TV = {tv:.2}");

    let dir = tempfile::tempdir().unwrap();
    let gt = dir.path().join("gt.tvfw");
    io::write_grid(&smoke, &gt).unwrap();

    let mut cfg = ExperimentConfig::default();
    cfg.ground_truth = gt.clone();
    cfg.n_sources = 2;
    cfg.n_receivers = 13;
    cfg.record_length = 0.5;
    cfg.amplitude = 60.0;
    cfg.sponge_width = 20;
    cfg.smooth_sigma = 8.0;
    cfg.iterations = 300;
    cfg.alphas = vec![80.0, 110.0, 140.0];

    let init = dir.path().join("init.tvfw");
    cmd_smooth(&gt, &init, cfg.smooth_sigma).unwrap();
    let im = io::read_grid(&init).unwrap();
    println!(
        "init: min {:.3} max {:.3} rmse {:.4} tv {:.2}",
        im.min_velocity(),
        im.max_velocity(),
        tvfwi_core::metrics::rmse(im.values(), smoke.values()).unwrap(),
        proximal::l12_norm(&proximal::diff_apply(im.values())),
    );

    for noisy in [false, true] {
        cfg.output_dir = dir.path().join(if noisy { "noisy" } else { "clean" });
        let observed = cmd_forward(&cfg).unwrap();
        let obs = if noisy {
            let p = cfg.output_dir.join("observed_noisy.tvfg");
            cmd_noise(&observed, &p, cfg.noise_variance, cfg.noise_seed).unwrap();
            p
        } else {
            observed
        };
        let t0 = std::time::Instant::now();
        let (_, rows) = cmd_sweep(&cfg, &obs, &init).unwrap();
        println!("--- noisy={noisy} ({} s) ---", t0.elapsed().as_secs());
        for r in &rows {
            println!(
                "{:?} alpha={:?}: rmse {:.4} ssim {:.4}",
                r.method, r.alpha, r.rmse, r.ssim
            );
        }
        for label in ["pds_alpha_80", "pds_alpha_110", "pds_alpha_140", "gd_baseline"] {
            let (tv, rmse, ssim, max_ssim) =
                trace_summary(&cfg.output_dir.join(label).join("trace.csv"));
            println!(
                "{label}: final tv {tv:.2} rmse {rmse:.4} ssim {ssim:.4} (max ssim {max_ssim:.4})"
            );
        }
    }
}
