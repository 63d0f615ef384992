//! Scratch harness: cluster summary on a corrupted stripes scene.

use segnoise::corrupt::apply_ntm;
use segnoise::fixtures::{gen_fixture, rcl_ntm_suite, FixtureSpec};
use segnoise::sdd::{count_semantic_classes, debug_channel_modes};

fn main() {
    let h: usize = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(8);
    let seed: u64 = std::env::args()
        .nth(2)
        .and_then(|s| s.parse().ok())
        .unwrap_or(0);
    let stripes = gen_fixture(FixtureSpec::Stripes3 { size: 256 }).unwrap().mask;
    for (i, (q, rank, _)) in rcl_ntm_suite().into_iter().enumerate() {
        let corrupted = apply_ntm(&stripes, &q, seed).unwrap();
        let summary = count_semantic_classes(&corrupted, h).unwrap();
        println!("matrix {i} (rank {rank}): d = {}", summary.d);
        for (ch, (modes, tol)) in debug_channel_modes(&corrupted, h).iter().enumerate() {
            println!(
                "   ch{ch} modes {:?} tol {:.1} (levels/289: {:?})",
                modes,
                tol,
                modes.iter().map(|m| (m / ((2.0*h as f64+1.0)*(2.0*h as f64+1.0)) * 100.0).round() / 100.0).collect::<Vec<_>>()
            );
        }
        for c in &summary.clusters {
            println!(
                "   share {:.4} level {:.3} centroid {:?}",
                c.share,
                c.level,
                c.centroid.iter().map(|v| (v * 1000.0).round() / 1000.0).collect::<Vec<_>>()
            );
        }
    }
}
