//! Internal multi-dimensional FFT engine on top of `rustfft`.
//!
//! Plans are cached per axis length and shared across threads; transforms are
//! applied axis by axis on the row-major buffer.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::PeriodicGrid;

#[derive(Clone)]
struct PlanPair {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

fn plan_pair(n: usize) -> PlanPair {
    static PLANS: OnceLock<Mutex<HashMap<usize, PlanPair>>> = OnceLock::new();
    let cache = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut cache = cache.lock().expect("fft plan cache poisoned");
    cache
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            PlanPair {
                forward: planner.plan_fft_forward(n),
                inverse: planner.plan_fft_inverse(n),
            }
        })
        .clone()
}

#[derive(Clone, Copy, PartialEq)]
pub(crate) enum Direction {
    Forward,
    Inverse,
}

/// In-place unnormalized DFT along every axis of the row-major buffer.
pub(crate) fn transform(grid: &PeriodicGrid, data: &mut [Complex64], direction: Direction) {
    debug_assert_eq!(data.len(), grid.num_points());
    let n = grid.n_per_axis();
    let plans = plan_pair(n);
    let plan = match direction {
        Direction::Forward => plans.forward,
        Direction::Inverse => plans.inverse,
    };
    let mut scratch = vec![Complex64::ZERO; plan.get_inplace_scratch_len()];
    let mut line = vec![Complex64::ZERO; n];

    for axis in 0..grid.dim() {
        let stride = n.pow((grid.dim() - 1 - axis) as u32);
        if stride == 1 {
            for chunk in data.chunks_exact_mut(n) {
                plan.process_with_scratch(chunk, &mut scratch);
            }
        } else {
            // Iterate over all lines along `axis`: indices with that axis at 0.
            let lines = data.len() / n;
            for l in 0..lines {
                // Decompose l over the remaining axes to find the base offset.
                let block = l / stride; // index over axes before `axis`
                let within = l % stride; // index over axes after `axis`
                let base = block * stride * n + within;
                for (j, slot) in line.iter_mut().enumerate() {
                    *slot = data[base + j * stride];
                }
                plan.process_with_scratch(&mut line, &mut scratch);
                for (j, value) in line.iter().enumerate() {
                    data[base + j * stride] = *value;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_then_inverse_is_scaled_identity() {
        let grid = PeriodicGrid::standard(3, 8).unwrap();
        let total = grid.num_points();
        let mut data: Vec<Complex64> = (0..total)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let original = data.clone();
        transform(&grid, &mut data, Direction::Forward);
        transform(&grid, &mut data, Direction::Inverse);
        let scale = total as f64;
        for (a, b) in data.iter().zip(&original) {
            assert!((a / scale - b).norm() < 1e-12);
        }
    }

    #[test]
    fn forward_matches_direct_dft_in_2d() {
        let grid = PeriodicGrid::standard(2, 4).unwrap();
        let total = grid.num_points();
        let mut data: Vec<Complex64> = (0..total)
            .map(|i| Complex64::new(i as f64, -(i as f64) * 0.5))
            .collect();
        let original = data.clone();
        transform(&grid, &mut data, Direction::Forward);
        let n = 4usize;
        for k0 in 0..n {
            for k1 in 0..n {
                let mut acc = Complex64::ZERO;
                for m0 in 0..n {
                    for m1 in 0..n {
                        let angle = -std::f64::consts::TAU
                            * ((k0 * m0) as f64 + (k1 * m1) as f64)
                            / n as f64;
                        acc += original[m0 * n + m1] * Complex64::new(angle.cos(), angle.sin());
                    }
                }
                assert!((acc - data[k0 * n + k1]).norm() < 1e-10);
            }
        }
    }
}
