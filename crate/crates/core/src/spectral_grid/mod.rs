//! Pseudospectral Klein-Gordon data `(psi, psi_dot)` on a periodic lattice.
//!
//! Every operator that is a function of the wavevector (`D^alpha`, gradients, the
//! propagator) acts as a Fourier multiplier. Wavevectors are `2 pi n / L` with
//! `n` in `[-N/2, N/2)`; the Nyquist index uses the same multiplier formula as
//! every other index.

mod fft;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{KgError, Result};
use crate::mode_engine::{self, ChargeParity, ModeField, SpacetimePoint, C64};
use crate::params::check_mass;

pub use fft::apply_multiplier as fourier_multiplier;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    dims: usize,
    points_per_axis: usize,
    box_length: f64,
}

impl Lattice {
    pub fn new(dims: usize, points_per_axis: usize, box_length: f64) -> Result<Self> {
        let l = Self {
            dims,
            points_per_axis,
            box_length,
        };
        l.validate()?;
        Ok(l)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.dims) {
            return Err(KgError::InvalidLattice(format!(
                "dims must be 1, 2 or 3, got {}",
                self.dims
            )));
        }
        if self.points_per_axis < 8 || !self.points_per_axis.is_power_of_two() {
            return Err(KgError::InvalidLattice(format!(
                "points per axis must be a power of two >= 8, got {}",
                self.points_per_axis
            )));
        }
        if !(self.box_length > 0.0 && self.box_length.is_finite()) {
            return Err(KgError::NonPositiveLength(self.box_length));
        }
        Ok(())
    }

    /// Parses `d,N,L`.
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(',').map(str::trim).collect();
        let bad = || KgError::InvalidLattice(format!("expected d,N,L, got `{text}`"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let dims = parts[0].parse().map_err(|_| bad())?;
        let n = parts[1].parse().map_err(|_| bad())?;
        let l = parts[2].parse().map_err(|_| bad())?;
        Lattice::new(dims, n, l)
    }

    pub fn descriptor(&self) -> String {
        format!("{},{},{}", self.dims, self.points_per_axis, self.box_length)
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    pub fn spacing(&self) -> f64 {
        self.box_length / self.points_per_axis as f64
    }

    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dims as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight `(L/N)^d` of one site.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dims as i32)
    }

    pub fn volume(&self) -> f64 {
        self.box_length.powi(self.dims as i32)
    }

    /// Per-axis indices of a row-major flat index (unused axes are 0).
    pub fn multi_index(&self, flat: usize) -> [usize; 3] {
        let n = self.points_per_axis;
        let mut out = [0usize; 3];
        let mut rest = flat;
        for axis in (0..self.dims).rev() {
            out[axis] = rest % n;
            rest /= n;
        }
        out
    }

    pub fn flat_index(&self, idx: [usize; 3]) -> usize {
        (0..self.dims).fold(0, |acc, axis| acc * self.points_per_axis + idx[axis])
    }

    pub fn position(&self, flat: usize) -> [f64; 3] {
        let h = self.spacing();
        self.multi_index(flat).map(|i| i as f64 * h)
    }

    /// Signed frequency index in `[-N/2, N/2)` of a DFT bin.
    pub fn frequency_index(&self, bin: usize) -> i64 {
        let n = self.points_per_axis as i64;
        let b = bin as i64;
        if b < n / 2 {
            b
        } else {
            b - n
        }
    }

    pub fn wavevector(&self, flat: usize) -> [f64; 3] {
        let idx = self.multi_index(flat);
        let mut k = [0.0; 3];
        for axis in 0..self.dims {
            k[axis] = 2.0 * PI * self.frequency_index(idx[axis]) as f64 / self.box_length;
        }
        k
    }

    /// Site index of a position that lies on the lattice.
    pub fn site_of(&self, y: &[f64; 3]) -> Result<usize> {
        let h = self.spacing();
        let mut idx = [0usize; 3];
        for axis in 0..3 {
            if axis >= self.dims {
                if y[axis] != 0.0 {
                    return Err(KgError::OffLattice(*y));
                }
                continue;
            }
            let q = y[axis] / h;
            let r = q.round();
            if (q - r).abs() > 1e-9 || r < 0.0 || r >= self.points_per_axis as f64 {
                return Err(KgError::OffLattice(*y));
            }
            idx[axis] = r as usize;
        }
        Ok(self.flat_index(idx))
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(KgError::LengthMismatch {
                expected: self.len(),
                found: len,
            });
        }
        Ok(())
    }
}

fn d_multiplier(k: &[f64; 3], mass: f64, alpha: f64) -> f64 {
    (k[0] * k[0] + k[1] * k[1] + k[2] * k[2] + mass * mass).powf(alpha)
}

/// `D^alpha v` with `D = -laplacian + M^2`.
pub fn apply_d_power(v: &[C64], lattice: &Lattice, mass: f64, alpha: f64) -> Result<Vec<C64>> {
    check_mass(mass)?;
    lattice.check_len(v.len())?;
    if alpha == 0.0 {
        return Ok(v.to_vec());
    }
    Ok(fft::apply_multiplier(v, lattice, |k| {
        C64::new(d_multiplier(k, mass, alpha), 0.0)
    }))
}

/// Spectral partial derivative along `axis`.
pub fn gradient(v: &[C64], lattice: &Lattice, axis: usize) -> Result<Vec<C64>> {
    lattice.check_len(v.len())?;
    if axis >= lattice.dims() {
        return Ok(vec![C64::new(0.0, 0.0); v.len()]);
    }
    Ok(fft::apply_multiplier(v, lattice, |k| C64::new(0.0, k[axis])))
}

/// Discrete pairing `sum conj(a) b (L/N)^d`.
/// Dense matrix of `d^order / dx_axis^order` (multiplier `(i k)^order`).
pub(crate) fn gradient_matrix(lattice: &Lattice, axis: usize, order: i32) -> faer::Mat<C64> {
    let n = lattice.len();
    let mut m = faer::Mat::<C64>::zeros(n, n);
    let mut unit = vec![C64::new(0.0, 0.0); n];
    for j in 0..n {
        unit[j] = C64::new(1.0, 0.0);
        let col = fourier_multiplier(&unit, lattice, |k| C64::new(0.0, k[axis]).powi(order));
        for (i, v) in col.into_iter().enumerate() {
            m[(i, j)] = v;
        }
        unit[j] = C64::new(0.0, 0.0);
    }
    m
}

pub fn pairing(a: &[C64], b: &[C64], lattice: &Lattice) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<C64>() * lattice.cell_volume()
}

pub(crate) fn max_abs(v: &[C64]) -> f64 {
    v.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Cauchy data of a Klein-Gordon field on one time slice.
#[derive(Debug, Clone, PartialEq)]
pub struct GridState {
    lattice: Lattice,
    mass: f64,
    x0: f64,
    psi: Vec<C64>,
    psidot: Vec<C64>,
}

impl GridState {
    pub fn new(lattice: Lattice, mass: f64, x0: f64, psi: Vec<C64>, psidot: Vec<C64>) -> Result<Self> {
        check_mass(mass)?;
        lattice.validate()?;
        lattice.check_len(psi.len())?;
        lattice.check_len(psidot.len())?;
        if !x0.is_finite() {
            return Err(KgError::StateMismatch("non-finite time".into()));
        }
        Ok(Self {
            lattice,
            mass,
            x0,
            psi,
            psidot,
        })
    }

    pub fn zero(lattice: Lattice, mass: f64, x0: f64) -> Result<Self> {
        let z = vec![C64::new(0.0, 0.0); lattice.len()];
        Self::new(lattice, mass, x0, z.clone(), z)
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn psi(&self) -> &[C64] {
        &self.psi
    }

    pub fn psidot(&self) -> &[C64] {
        &self.psidot
    }

    pub fn with_data(&self, psi: Vec<C64>, psidot: Vec<C64>) -> Result<GridState> {
        GridState::new(self.lattice, self.mass, self.x0, psi, psidot)
    }

    pub fn with_time(&self, x0: f64) -> GridState {
        GridState { x0, ..self.clone() }
    }

    pub fn scaled(&self, s: C64) -> GridState {
        GridState {
            psi: self.psi.iter().map(|v| v * s).collect(),
            psidot: self.psidot.iter().map(|v| v * s).collect(),
            ..self.clone()
        }
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, other: &GridState, s: C64) -> Result<GridState> {
        self.check_compatible(other)?;
        Ok(GridState {
            psi: self.psi.iter().zip(&other.psi).map(|(a, b)| a + b * s).collect(),
            psidot: self
                .psidot
                .iter()
                .zip(&other.psidot)
                .map(|(a, b)| a + b * s)
                .collect(),
            ..self.clone()
        })
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.psi).max(max_abs(&self.psidot))
    }

    /// Largest difference of `psi` and `psi_dot` arrays.
    pub fn max_difference(&self, other: &GridState) -> f64 {
        let d = |a: &[C64], b: &[C64]| a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        d(&self.psi, &other.psi).max(d(&self.psidot, &other.psidot))
    }

    pub(crate) fn check_compatible(&self, other: &GridState) -> Result<()> {
        if self.lattice != other.lattice || !mode_engine::same_value(self.mass, other.mass) {
            return Err(KgError::StateMismatch("lattice or mass differ".into()));
        }
        if (self.x0 - other.x0).abs() > 1e-12 * self.x0.abs().max(other.x0.abs()).max(1.0) {
            return Err(KgError::StateMismatch(format!(
                "states live at different times {} and {}",
                self.x0, other.x0
            )));
        }
        Ok(())
    }

    pub fn d_power(&self, v: &[C64], alpha: f64) -> Vec<C64> {
        apply_d_power(v, &self.lattice, self.mass, alpha).expect("array on own lattice")
    }

    fn spectra(&self) -> (Vec<C64>, Vec<C64>) {
        let mut p = self.psi.clone();
        let mut q = self.psidot.clone();
        fft::transform(&mut p, &self.lattice, false);
        fft::transform(&mut q, &self.lattice, false);
        (p, q)
    }

    fn from_spectra(&self, x0: f64, mut p: Vec<C64>, mut q: Vec<C64>) -> GridState {
        fft::transform(&mut p, &self.lattice, true);
        fft::transform(&mut q, &self.lattice, true);
        GridState {
            lattice: self.lattice,
            mass: self.mass,
            x0,
            psi: p,
            psidot: q,
        }
    }

    fn omega_at(&self, bin: usize) -> f64 {
        d_multiplier(&self.lattice.wavevector(bin), self.mass, 0.5)
    }

    /// Exact propagation by `delta` through per-mode sector phases `exp(-+ i omega delta)`.
    pub fn evolve(&self, delta: f64) -> GridState {
        if delta == 0.0 {
            return self.clone();
        }
        let (mut p, mut q) = self.spectra();
        for bin in 0..p.len() {
            let w = self.omega_at(bin);
            let plus = 0.5 * (p[bin] + C64::new(0.0, 1.0) * q[bin] / w);
            let minus = 0.5 * (p[bin] - C64::new(0.0, 1.0) * q[bin] / w);
            let ph = C64::from_polar(1.0, -w * delta);
            let plus = plus * ph;
            let minus = minus * ph.conj();
            p[bin] = plus + minus;
            q[bin] = C64::new(0.0, -w) * (plus - minus);
        }
        self.from_spectra(self.x0 + delta, p, q)
    }

    /// Definite charge-parity component `psi_eps` with its time derivative.
    pub fn energy_project(&self, eps: ChargeParity) -> GridState {
        let (mut p, mut q) = self.spectra();
        let e = eps.sign();
        for bin in 0..p.len() {
            let w = self.omega_at(bin);
            let part = 0.5 * (p[bin] + C64::new(0.0, e) * q[bin] / w);
            p[bin] = part;
            q[bin] = C64::new(0.0, -e * w) * part;
        }
        self.from_spectra(self.x0, p, q)
    }

    /// Largest frequency `omega` among Fourier components above `1e-10` of the peak.
    pub fn omega_band(&self) -> f64 {
        let (p, q) = self.spectra();
        let peak = p
            .iter()
            .zip(&q)
            .enumerate()
            .map(|(b, (x, y))| x.norm().max(y.norm() / self.omega_at(b)))
            .fold(0.0, f64::max);
        if peak == 0.0 {
            return self.mass;
        }
        p.iter()
            .zip(&q)
            .enumerate()
            .filter(|(b, (x, y))| x.norm().max(y.norm() / self.omega_at(*b)) > 1e-10 * peak)
            .map(|(b, _)| self.omega_at(b))
            .fold(self.mass, f64::max)
    }
}

/// `psi_c = i D^{-1/2} psi_dot`, `psi_dot_c = -i D^{1/2} psi`.
pub fn charge_conjugate_grid(s: &GridState) -> GridState {
    let i = C64::new(0.0, 1.0);
    let psi: Vec<C64> = s.d_power(&s.psidot, -0.5).into_iter().map(|v| i * v).collect();
    let psidot: Vec<C64> = s.d_power(&s.psi, 0.5).into_iter().map(|v| -i * v).collect();
    GridState { psi, psidot, ..s.clone() }
}

/// Samples a boxed mode field and its time derivative at the lattice sites at time `x0`.
pub fn sample_at(f: &ModeField, lattice: &Lattice, x0: f64) -> Result<GridState> {
    lattice.validate()?;
    check_field_on_lattice(f, lattice)?;
    let mut psi = Vec::with_capacity(lattice.len());
    let mut psidot = Vec::with_capacity(lattice.len());
    for idx in 0..lattice.len() {
        let x = SpacetimePoint::new(x0, lattice.position(idx));
        psi.push(mode_engine::eval_field(f, &x));
        psidot.push(mode_engine::eval_time_derivative(f, &x));
    }
    GridState::new(*lattice, f.mass(), x0, psi, psidot)
}

pub fn sample(f: &ModeField, lattice: &Lattice) -> Result<GridState> {
    sample_at(f, lattice, 0.0)
}

pub(crate) fn check_field_on_lattice(f: &ModeField, lattice: &Lattice) -> Result<()> {
    if !f.is_boxed() {
        return Err(KgError::IncompatibleField("field is not boxed".into()));
    }
    if !mode_engine::same_value(f.box_length(), lattice.box_length()) {
        return Err(KgError::IncompatibleField(format!(
            "box length {} differs from lattice length {}",
            f.box_length(),
            lattice.box_length()
        )));
    }
    let bound = (lattice.points_per_axis() / 2) as i64;
    for m in f.modes() {
        let n = f.lattice_index(m).expect("boxed modes carry lattice indices");
        for (axis, &c) in n.iter().enumerate() {
            if axis >= lattice.dims() && c != 0 {
                return Err(KgError::IncompatibleField(format!(
                    "mode {n:?} has a component along unused axis {axis}"
                )));
            }
            if c.abs() >= bound {
                return Err(KgError::Aliasing { index: n, bound });
            }
        }
    }
    Ok(())
}

fn richardson<F: Fn(f64) -> Vec<C64>>(estimate: F, h: f64) -> Vec<C64> {
    let coarse = estimate(h);
    let fine = estimate(0.5 * h);
    fine.iter().zip(&coarse).map(|(f, c)| (4.0 * f - c) / 3.0).collect()
}

/// KG consistency of the state at `trajectory(0)` against its neighbours `trajectory(t)`:
/// max of `|psi_tt + D psi|` and `omega |psi_t - psi_dot|`, relative to `max |D psi|`.
/// Derivatives are central differences with one Richardson level.
pub fn kg_residual_along(trajectory: impl Fn(f64) -> GridState, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(KgError::NonPositiveArgument(h));
    }
    let center = trajectory(0.0);
    let d_psi = center.d_power(&center.psi, 1.0);
    let scale = max_abs(&d_psi);
    if scale == 0.0 {
        return Ok(0.0);
    }
    let second = richardson(
        |step| {
            let fwd = trajectory(step);
            let bwd = trajectory(-step);
            (0..center.psi.len())
                .map(|i| (fwd.psi[i] - 2.0 * center.psi[i] + bwd.psi[i]) / (step * step))
                .collect()
        },
        h,
    );
    let first = richardson(
        |step| {
            let fwd = trajectory(step);
            let bwd = trajectory(-step);
            (0..center.psi.len())
                .map(|i| (fwd.psi[i] - bwd.psi[i]) / (2.0 * step))
                .collect()
        },
        h,
    );
    let w = center.omega_band();
    let mut worst: f64 = 0.0;
    for i in 0..center.psi.len() {
        worst = worst.max((second[i] + d_psi[i]).norm());
        worst = worst.max(w * (first[i] - center.psidot[i]).norm());
    }
    Ok(worst / scale)
}

/// [`kg_residual_along`] for the exact evolution of `s`.
pub fn kg_residual(s: &GridState, h: f64) -> Result<f64> {
    kg_residual_along(|t| s.evolve(t), h)
}

pub fn default_step(mass: f64) -> f64 {
    1e-3 / mass
}

#[derive(Serialize, Deserialize)]
struct Snapshot {
    lattice: Lattice,
    mass: f64,
    x0: f64,
    psi_re: Vec<f64>,
    psi_im: Vec<f64>,
    psidot_re: Vec<f64>,
    psidot_im: Vec<f64>,
}

impl GridState {
    pub fn to_json(&self) -> String {
        let snap = Snapshot {
            lattice: self.lattice,
            mass: self.mass,
            x0: self.x0,
            psi_re: self.psi.iter().map(|c| c.re).collect(),
            psi_im: self.psi.iter().map(|c| c.im).collect(),
            psidot_re: self.psidot.iter().map(|c| c.re).collect(),
            psidot_im: self.psidot.iter().map(|c| c.im).collect(),
        };
        serde_json::to_string(&snap).expect("snapshot serializes")
    }

    pub fn from_json(text: &str) -> Result<GridState> {
        let s: Snapshot = serde_json::from_str(text).map_err(|e| KgError::Document(e.to_string()))?;
        s.lattice.validate()?;
        let join = |re: Vec<f64>, im: Vec<f64>| -> Result<Vec<C64>> {
            if re.len() != im.len() {
                return Err(KgError::Document("real and imaginary parts differ in length".into()));
            }
            Ok(re.into_iter().zip(im).map(|(r, i)| C64::new(r, i)).collect())
        };
        let psi = join(s.psi_re, s.psi_im)?;
        let psidot = join(s.psidot_re, s.psidot_im)?;
        GridState::new(s.lattice, s.mass, s.x0, psi, psidot)
    }
}
