//! Scratch: locate the gronwall violation on the forced preset.

use paley::config::{execute_run, preset};

fn main() {
    let config = preset("forced-single-mode").unwrap();
    let output = execute_run(&config).unwrap();
    let times = output.record.times();
    for report in &output.gronwall {
        println!(
            "{}: satisfied={} worst_margin={:.6e}",
            report.bound_name, report.satisfied, report.worst_margin
        );
        for (i, (l, r)) in report
            .lhs_series
            .iter()
            .zip(&report.rhs_series)
            .enumerate()
        {
            if l - r > 1e-9 * r.abs().max(1.0) {
                println!("  violated at t={}: lhs={l:.9e} rhs={r:.9e}", times[i]);
                if i < 8 || i % 50 == 0 {
                    continue;
                }
                break;
            }
        }
    }
}
