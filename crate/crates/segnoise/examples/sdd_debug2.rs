//! Scratch harness: sweep suite x seeds x window widths for class counts.

use segnoise::corrupt::apply_ntm;
use segnoise::fixtures::{gen_fixture, rcl_ntm_suite, FixtureSpec};
use segnoise::sdd::count_semantic_classes;

fn main() {
    let h: usize = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(12);
    let stripes = gen_fixture(FixtureSpec::Stripes3 { size: 256 }).unwrap().mask;
    for (i, (q, rank, _)) in rcl_ntm_suite().into_iter().enumerate() {
        print!("matrix {i} (rank {rank}) d per seed:");
        for seed in 0..10u64 {
            let corrupted = apply_ntm(&stripes, &q, seed).unwrap();
            let summary = count_semantic_classes(&corrupted, h).unwrap();
            let mark = if summary.d == rank { ' ' } else { '!' };
            print!(" {}{mark}", summary.d);
        }
        println!();
    }
}
