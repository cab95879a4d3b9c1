use gibbs_bps::ct::{build_radon, phantom_shepp_logan, simulate_measurement, NoiseMode};
use gibbs_bps::ct::metrics;
use gibbs_bps::samplers::{gibbs_run, gibbs_bps_run, GibbsBpsOptions};
use gibbs_bps::{HyperParams, RngStream};
use std::time::Instant;

fn main() {
    // Criterion 6 preview: 16x16, 8 angles, cross-sampler agreement.
    let d = 16;
    let mut model = build_radon(d, 8).unwrap();
    let truth = phantom_shepp_logan(d).unwrap();
    let mut rng = RngStream::from_seed(7);
    simulate_measurement(&mut model, &truth, NoiseMode::InfNorm, 0.01, 8, &mut rng).unwrap();
    let hyper = HyperParams::default();

    let mut r1 = RngStream::from_seed(1);
    let gibbs = gibbs_run(&model, &hyper, 4000, 800, &mut r1, None).unwrap();
    let gmean = gibbs.posterior_mean();

    for events in [200_000u64, 400_000] {
        let mut r2 = RngStream::from_seed(2);
        let opts = GibbsBpsOptions { max_events: Some(events), ..Default::default() };
        let t0 = Instant::now();
        let rec = gibbs_bps_run(&model, &hyper, &opts, &mut r2, None).unwrap();
        let (bmean, _) = rec.moments.finalize().unwrap();
        let mad = gmean.iter().zip(&bmean).map(|(a,b)| (a-b).abs()).sum::<f64>() / gmean.len() as f64;
        println!("events {events}: mad vs gibbs = {mad:.5}  (T = {:.3}, wall {:.1}s, psnr {:.2})",
            rec.total_time, t0.elapsed().as_secs_f64(),
            metrics::psnr_slices(truth.values(), &bmean).unwrap());
    }

    // Criterion 8 preview: per-event and per-iteration cost scaling.
    for d in [16usize, 32, 64] {
        let mut model = build_radon(d, d / 2).unwrap();
        let truth = phantom_shepp_logan(d).unwrap();
        let mut rng = RngStream::from_seed(7);
        simulate_measurement(&mut model, &truth, NoiseMode::InfNorm, 0.01, d / 2, &mut rng).unwrap();
        let hyper = HyperParams::default();
        let opts = GibbsBpsOptions { max_events: Some(4000), ..Default::default() };
        let mut r = RngStream::from_seed(3);
        let t0 = Instant::now();
        gibbs_bps_run(&model, &hyper, &opts, &mut r, None).unwrap();
        let per_event = t0.elapsed().as_secs_f64() / 4000.0;
        let iters = if d == 64 { 3 } else { 20 };
        let t0 = Instant::now();
        gibbs_run(&model, &hyper, iters + 1, iters, &mut r, None).unwrap();
        let per_iter = t0.elapsed().as_secs_f64() / (iters + 1) as f64;
        println!("d {d:>3}: per-event {:.3e}s  per-iter {:.3e}s", per_event, per_iter);
    }
}
