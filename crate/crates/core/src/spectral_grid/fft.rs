use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::{Fft, FftPlanner};

use super::Lattice;
use crate::mode_engine::C64;

type PlanPair = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

fn plans(n: usize) -> PlanPair {
    static CACHE: OnceLock<Mutex<HashMap<usize, PlanPair>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
        })
        .clone()
}

/// In-place multidimensional DFT along every lattice axis. The forward transform
/// uses `exp(-i k.x)` and is unnormalized; the inverse divides by the point count.
pub(crate) fn transform(data: &mut [C64], lattice: &Lattice, inverse: bool) {
    let n = lattice.points_per_axis();
    let dims = lattice.dims();
    let (fwd, inv) = plans(n);
    let plan = if inverse { inv } else { fwd };
    let mut line = vec![C64::new(0.0, 0.0); n];
    let mut scratch = vec![C64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
    for axis in 0..dims {
        let stride = n.pow((dims - 1 - axis) as u32);
        let block = stride * n;
        for start in (0..data.len()).step_by(block) {
            for offset in 0..stride {
                let base = start + offset;
                for (j, v) in line.iter_mut().enumerate() {
                    *v = data[base + j * stride];
                }
                plan.process_with_scratch(&mut line, &mut scratch);
                for (j, v) in line.iter().enumerate() {
                    data[base + j * stride] = *v;
                }
            }
        }
    }
    if inverse {
        let s = 1.0 / data.len() as f64;
        for v in data.iter_mut() {
            *v *= s;
        }
    }
}

/// Applies the Fourier multiplier `m(k)` to a lattice array.
pub fn apply_multiplier(
    data: &[C64],
    lattice: &Lattice,
    m: impl Fn(&[f64; 3]) -> C64,
) -> Vec<C64> {
    let mut out = data.to_vec();
    transform(&mut out, lattice, false);
    for (idx, v) in out.iter_mut().enumerate() {
        *v *= m(&lattice.wavevector(idx));
    }
    transform(&mut out, lattice, true);
    out
}
