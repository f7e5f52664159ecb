//! Reproducible random fields for fixtures and experiments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{KgError, Result};
use crate::mode_engine::{self, ChargeParity, ModeField, C64};
use crate::params::InnerParams;
use crate::spectral_grid::{self, GridState, Lattice};

/// Default index band `|n_i| <= N/4 - 1`: products of two band-limited fields stay
/// below the Nyquist index, so quadratic currents are resolved exactly.
pub fn default_band(lattice: &Lattice) -> i64 {
    (lattice.points_per_axis() / 4) as i64 - 1
}

/// Random boxed field with `mode_count` modes, lattice indices in `[-band, band]` on
/// the used axes, complex normal amplitudes and random charge parity, scaled so that
/// `(psi, psi)_0 = 1` over the lattice box.
pub fn random_mode_field_in_band(
    lattice: &Lattice,
    mass: f64,
    seed: u64,
    mode_count: usize,
    band: i64,
) -> Result<ModeField> {
    if mode_count == 0 {
        return Err(KgError::InvalidLattice("mode_count must be at least 1".into()));
    }
    if band < 0 || band >= (lattice.points_per_axis() / 2) as i64 {
        return Err(KgError::Aliasing {
            index: [band, 0, 0],
            bound: (lattice.points_per_axis() / 2) as i64,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut modes = Vec::with_capacity(mode_count);
    for _ in 0..mode_count {
        let mut n = [0i64; 3];
        for c in n.iter_mut().take(lattice.dims()) {
            *c = rng.random_range(-band..=band);
        }
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        let eps = if rng.random::<bool>() {
            ChargeParity::Positive
        } else {
            ChargeParity::Negative
        };
        modes.push((C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2, n, eps));
    }
    let f = ModeField::from_indices(mass, lattice.box_length(), modes)?;
    if f.is_empty() {
        return random_mode_field_in_band(lattice, mass, seed.wrapping_add(1), mode_count, band);
    }
    let norm = mode_engine::ip_a_box(&f, &f, &InnerParams::standard(mass)?, lattice.dims())?.re;
    let s = 1.0 / norm.sqrt();
    Ok(f.map_amplitudes(|_| C64::new(s, 0.0)))
}

pub fn random_mode_field(lattice: &Lattice, mass: f64, seed: u64, mode_count: usize) -> Result<ModeField> {
    random_mode_field_in_band(lattice, mass, seed, mode_count, default_band(lattice))
}

/// [`random_mode_field`] sampled on the lattice at `x0 = 0`.
pub fn random_state(lattice: &Lattice, mass: f64, seed: u64, mode_count: usize) -> Result<GridState> {
    spectral_grid::sample(&random_mode_field(lattice, mass, seed, mode_count)?, lattice)
}
