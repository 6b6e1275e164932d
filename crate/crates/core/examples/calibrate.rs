//! Re-derives the frozen corpus constants used by the verification suites.
//!
//! Run with `cargo run --release -p paley --example calibrate`. The printed
//! values (before the x1.1 margin) are the raw measurements behind
//! `src/calibration.rs`; re-run after any change to the partition profile,
//! norm quadrature, or the preset scenarios.

use paley::besov::{bernstein_ratio, sobolev_equivalence_report_with};
use paley::config::{execute_run, preset, PRESET_NAMES};
use paley::dyadic::{build_partition, PartitionProfile};
use paley::synth::random_field;
use paley::PeriodicGrid;

fn main() {
    let grid = PeriodicGrid::standard(2, 64).unwrap();
    let partition = build_partition(grid, PartitionProfile::energy()).unwrap();

    println!("== Besov/Sobolev equivalence (p=q=2, energy mode, N=64, 100 seeds) ==");
    for s in [0.5, 1.0, 2.0] {
        let mut worst = 1.0f64;
        for seed in 0..100u64 {
            let f = random_field(grid, seed);
            let r = sobolev_equivalence_report_with(&partition, &f, s).unwrap();
            worst = worst.max(r.ratio).max(1.0 / r.ratio);
        }
        println!("  s = {s}: C = {worst:.6}  (frozen: {:.6})", worst * 1.1);
    }

    println!("== Bernstein constants (N=64, 100 seeds) ==");
    for p in [1.0, 2.0] {
        let mut worst = 0.0f64;
        for seed in 0..100u64 {
            let f = random_field(grid, seed);
            for (_, r) in bernstein_ratio(&partition, &f, p).unwrap() {
                worst = worst.max(r);
            }
        }
        println!("  p = {p}: B = {worst:.6}  (frozen: {:.6})", worst * 1.1);
    }

    println!("== Preset regressions ==");
    for name in PRESET_NAMES {
        let t0 = std::time::Instant::now();
        let config = preset(name).unwrap();
        let output = execute_run(&config).unwrap();
        let energy = output
            .record
            .series("energy")
            .map(|e| *e.last().unwrap())
            .unwrap_or(f64::NAN);
        let apriori = output
            .besov_apriori
            .first()
            .map(|(_, r)| r.constant)
            .unwrap_or(f64::NAN);
        let gronwall_ok = output.gronwall.iter().all(|r| r.satisfied);
        println!(
            "  {name}: final energy = {energy:.12e}, besov a-priori C = {apriori:.12e}, \
             gronwall ok = {gronwall_ok}, {:.2} s",
            t0.elapsed().as_secs_f64()
        );
    }
}
