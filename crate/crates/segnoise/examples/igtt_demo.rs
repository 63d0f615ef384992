//! Scratch harness: runs the unsupervised loop on seeded blob scenes and
//! prints per-seed Dice against the Otsu baseline, with and without the
//! refinement stage.

use segnoise::baseline::otsu_mask;
use segnoise::fixtures::{gen_fixture, FixtureSpec};
use segnoise::igtt::{igtt_run, IgttConfig};
use segnoise::metrics::overlap_metrics;
use segnoise::predictor::LogisticPredictor;

fn main() {
    let size: usize = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(256);
    let epochs: usize = std::env::args()
        .nth(2)
        .and_then(|s| s.parse().ok())
        .unwrap_or(30);

    let mut with_ems = Vec::new();
    let mut without_ems = Vec::new();
    let mut otsu_scores = Vec::new();
    let mut beat = 0;
    for seed in 0..10u64 {
        let f = gen_fixture(FixtureSpec::Blobs { size, seed }).unwrap();
        let intensity = f.intensity.clone().unwrap();
        let otsu = overlap_metrics(&otsu_mask(&intensity), &f.mask).unwrap().dice;

        let run = |ems: bool| {
            let config = IgttConfig {
                k: 30,
                ems_shift_radius: 1,
                ems_p_sample: 0.1,
                ems_enabled: ems,
                max_iters: epochs,
                learning_rate: 0.1,
                seed,
                predict_before_fit: false,
            };
            let mut model = LogisticPredictor::new();
            let images = vec![intensity.clone()];
            let refs = vec![f.mask.clone()];
            let out = igtt_run(&images, Some(&refs), &config, &mut model).unwrap();
            let final_metrics = out.epochs.last().unwrap()[0].metrics.unwrap();
            final_metrics.dice
        };
        let start = std::time::Instant::now();
        let d_ems = run(true);
        let t = start.elapsed();
        let d_plain = run(false);
        if d_ems >= otsu {
            beat += 1;
        }
        println!(
            "seed {seed}: otsu {otsu:.4}  igtt+ems {d_ems:.4}  igtt-ems {d_plain:.4}  ({t:?}/run)"
        );
        with_ems.push(d_ems);
        without_ems.push(d_plain);
        otsu_scores.push(otsu);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    println!(
        "means: otsu {:.4}  with-ems {:.4}  without-ems {:.4}  | ems>=otsu on {beat}/10 seeds",
        mean(&otsu_scores),
        mean(&with_ems),
        mean(&without_ems)
    );
}
