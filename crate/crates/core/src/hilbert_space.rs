//! Inner products on grid states, the unitary maps `U_a`, position wave functions
//! and the localization densities `rho_a`.

use crate::error::{KgError, Result};
use crate::mode_engine::{ChargeParity, C64};
use crate::params::InnerParams;
use crate::spectral_grid::{charge_conjugate_grid, fourier_multiplier, pairing, GridState, Lattice};

const I: C64 = C64::new(0.0, 1.0);

fn omega_of(k: &[f64; 3], mass: f64) -> f64 {
    (k[0] * k[0] + k[1] * k[1] + k[2] * k[2] + mass * mass).sqrt()
}

fn check_params(s: &GridState, params: &InnerParams) -> Result<()> {
    params.validate()?;
    if !crate::mode_engine::same_value(s.mass(), params.mass) {
        return Err(KgError::StateMismatch(format!(
            "state mass {} differs from parameter mass {}",
            s.mass(),
            params.mass
        )));
    }
    Ok(())
}

fn check_time(s: &GridState, x0_0: f64) -> Result<()> {
    if (s.x0() - x0_0).abs() > 1e-12 * s.x0().abs().max(x0_0.abs()).max(1.0) {
        return Err(KgError::StateMismatch(format!(
            "state is at x0 = {}, expected the reference time {}",
            s.x0(),
            x0_0
        )));
    }
    Ok(())
}

/// `i g [<psi1|psi_dot2> - <psi_dot1|psi2>]`.
pub fn ip_kg(s1: &GridState, s2: &GridState, g: f64) -> Result<C64> {
    s1.check_compatible(s2)?;
    if !(g > 0.0 && g.is_finite()) {
        return Err(KgError::NonPositiveNorm(g));
    }
    let lat = s1.lattice();
    Ok(I * g * (pairing(s1.psi(), s2.psidot(), lat) - pairing(s1.psidot(), s2.psi(), lat)))
}

/// `(1/2M) [<psi1|D^{1/2} psi2> + <psi_dot1|D^{-1/2} psi_dot2>]`.
pub fn ip_plain(s1: &GridState, s2: &GridState) -> Result<C64> {
    s1.check_compatible(s2)?;
    let lat = s1.lattice();
    let a = pairing(s1.psi(), &s2.d_power(s2.psi(), 0.5), lat);
    let b = pairing(s1.psidot(), &s2.d_power(s2.psidot(), -0.5), lat);
    Ok((a + b) / (2.0 * s1.mass()))
}

/// `(psi1, psi2)_a` for states on the same time slice.
pub fn ip_a(s1: &GridState, s2: &GridState, params: &InnerParams) -> Result<C64> {
    check_params(s1, params)?;
    s1.check_compatible(s2)?;
    let lat = s1.lattice();
    let plain = pairing(s1.psi(), &s2.d_power(s2.psi(), 0.5), lat)
        + pairing(s1.psidot(), &s2.d_power(s2.psidot(), -0.5), lat);
    let kg = I * (pairing(s1.psi(), s2.psidot(), lat) - pairing(s1.psidot(), s2.psi(), lat));
    Ok((plain + kg * params.a) * (params.kappa / (2.0 * params.mass)))
}

/// [`ip_a`] after evolving `s2` to the time of `s1`.
pub fn ip_a_evolving(s1: &GridState, s2: &GridState, params: &InnerParams) -> Result<C64> {
    let moved = s2.evolve(s1.x0() - s2.x0()).with_time(s1.x0());
    ip_a(s1, &moved, params)
}

/// Element of `L^2 + L^2` sampled on a lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoComponentVector {
    lattice: Lattice,
    pub xi1: Vec<C64>,
    pub xi2: Vec<C64>,
}

impl TwoComponentVector {
    pub fn new(lattice: Lattice, xi1: Vec<C64>, xi2: Vec<C64>) -> Result<Self> {
        lattice.check_len(xi1.len())?;
        lattice.check_len(xi2.len())?;
        Ok(Self { lattice, xi1, xi2 })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    /// `<xi|eta>` with quadrature weight `(L/N)^d`.
    pub fn inner(&self, other: &TwoComponentVector) -> Result<C64> {
        if self.lattice != other.lattice {
            return Err(KgError::StateMismatch("vectors live on different lattices".into()));
        }
        Ok(pairing(&self.xi1, &other.xi1, &self.lattice) + pairing(&self.xi2, &other.xi2, &self.lattice))
    }
}

/// `U_a psi` built from the Cauchy data at `x0_0`.
pub fn map_u_a(s: &GridState, params: &InnerParams, x0_0: f64) -> Result<TwoComponentVector> {
    check_params(s, params)?;
    check_time(s, x0_0)?;
    let sc = charge_conjugate_grid(s);
    let pre = 0.5 * (params.kappa / params.mass).sqrt();
    let wp = pre * (1.0 + params.a).sqrt();
    let wm = pre * (1.0 - params.a).sqrt();
    let sum: Vec<C64> = s.psi().iter().zip(sc.psi()).map(|(p, c)| p + c).collect();
    let dif: Vec<C64> = s.psi().iter().zip(sc.psi()).map(|(p, c)| p - c).collect();
    let xi1 = s.d_power(&sum, 0.25).into_iter().map(|v| v * wp).collect();
    let xi2 = s.d_power(&dif, 0.25).into_iter().map(|v| v * wm).collect();
    TwoComponentVector::new(*s.lattice(), xi1, xi2)
}

/// `U_a^{-1} xi` evaluated at time `x0`.
pub fn map_u_inverse(v: &TwoComponentVector, params: &InnerParams, x0_0: f64, x0: f64) -> Result<GridState> {
    params.validate()?;
    let lat = *v.lattice();
    let m = params.mass;
    let dt = x0 - x0_0;
    let pre = (m / params.kappa).sqrt();
    let s1 = pre / (1.0 + params.a).sqrt();
    let s2 = pre / (1.0 - params.a).sqrt();
    let branch = |xi: &[C64], sign: f64, deriv: bool| {
        fourier_multiplier(xi, &lat, |k| {
            let w = omega_of(k, m);
            let phase = C64::from_polar(w.powf(-0.5), -sign * w * dt);
            if deriv {
                phase * C64::new(0.0, -sign * w)
            } else {
                phase
            }
        })
    };
    let p1 = branch(&v.xi1, 1.0, false);
    let p2 = branch(&v.xi2, -1.0, false);
    let q1 = branch(&v.xi1, 1.0, true);
    let q2 = branch(&v.xi2, -1.0, true);
    let psi = p1.iter().zip(&p2).map(|(a, b)| a * s1 + b * s2).collect();
    let psidot = q1.iter().zip(&q2).map(|(a, b)| a * s1 + b * s2).collect();
    GridState::new(lat, m, x0, psi, psidot)
}

/// Position wave function `f(eps, x)` tagged with its reference time.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    pub eps: ChargeParity,
    pub values: Vec<C64>,
    pub reference_time: f64,
    lattice: Lattice,
}

impl WaveFunction {
    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn inner(&self, other: &WaveFunction) -> C64 {
        pairing(&self.values, &other.values, &self.lattice)
    }
}

/// `f(eps, .) = sqrt(kappa/M) D^{1/4} psi_eps(x0_0, .)`.
pub fn wavefunction(s: &GridState, eps: ChargeParity, params: &InnerParams, x0_0: f64) -> Result<WaveFunction> {
    check_params(s, params)?;
    check_time(s, x0_0)?;
    let part = s.energy_project(eps);
    let w = (params.kappa / params.mass).sqrt();
    Ok(WaveFunction {
        eps,
        values: s.d_power(part.psi(), 0.25).into_iter().map(|v| v * w).collect(),
        reference_time: x0_0,
        lattice: *s.lattice(),
    })
}

/// Wave function of a state in `H_a`: the `eps` component of `U_a psi`.
pub fn wavefunction_a(s: &GridState, eps: ChargeParity, params: &InnerParams, x0_0: f64) -> Result<WaveFunction> {
    let v = map_u_a(s, params, x0_0)?;
    Ok(WaveFunction {
        eps,
        values: match eps {
            ChargeParity::Positive => v.xi1,
            ChargeParity::Negative => v.xi2,
        },
        reference_time: x0_0,
        lattice: *s.lattice(),
    })
}

/// `rho_a` on the lattice sites.
pub fn rho_a(s: &GridState, params: &InnerParams) -> Result<Vec<f64>> {
    check_params(s, params)?;
    let u = s.d_power(s.psi(), 0.25);
    let w = s.d_power(s.psidot(), -0.25);
    let pre = params.kappa / (2.0 * params.mass);
    Ok(u
        .iter()
        .zip(&w)
        .map(|(u, w)| pre * (u.norm_sqr() + w.norm_sqr() - 2.0 * params.a * (u.conj() * w).im))
        .collect())
}

/// `psi'_a = alpha_+ psi + i alpha_- D^{-1/2} psi_dot`, the preimage in `H_0` of `psi` in `H_a`.
pub fn transport(s: &GridState, params: &InnerParams) -> Result<GridState> {
    check_params(s, params)?;
    let (ap, am) = params.alphas();
    let a = s.d_power(s.psidot(), -0.5);
    let b = s.d_power(s.psi(), 0.5);
    let psi = s.psi().iter().zip(&a).map(|(p, q)| p * ap + I * am * q).collect();
    let psidot = s.psidot().iter().zip(&b).map(|(q, p)| q * ap - I * am * p).collect();
    s.with_data(psi, psidot)
}

/// Inverse of [`transport`]: sector `eps` divided by `sqrt(1 + a eps)`.
pub fn transport_inverse(s: &GridState, params: &InnerParams) -> Result<GridState> {
    check_params(s, params)?;
    let plus = s.energy_project(ChargeParity::Positive);
    let minus = s.energy_project(ChargeParity::Negative);
    plus.scaled(C64::new(1.0 / (1.0 + params.a).sqrt(), 0.0))
        .add_scaled(&minus, C64::new(1.0 / (1.0 - params.a).sqrt(), 0.0))
}

/// Riemann sum of `rho_a`.
pub fn total_probability(s: &GridState, params: &InnerParams) -> Result<f64> {
    let rho = rho_a(s, params)?;
    Ok(rho.iter().sum::<f64>() * s.lattice().cell_volume())
}

/// Conserved charge `(psi, psi)_KG` with normalization `g`.
pub fn charge_q(s: &GridState, g: f64) -> Result<f64> {
    Ok(ip_kg(s, s, g)?.re)
}

pub fn probability_in_region(s: &GridState, params: &InnerParams, mask: &[bool]) -> Result<f64> {
    s.lattice().check_len(mask.len())?;
    let rho = rho_a(s, params)?;
    Ok(rho
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(r, _)| r)
        .sum::<f64>()
        * s.lattice().cell_volume())
}

/// State normalized to `(psi, psi)_a = 1`.
pub fn normalized(s: &GridState, params: &InnerParams) -> Result<GridState> {
    let n = ip_a(s, s, params)?.re;
    if !(n > 0.0) {
        return Err(KgError::NonPositiveArgument(n));
    }
    Ok(s.scaled(C64::new(1.0 / n.sqrt(), 0.0)))
}

pub(crate) fn grid_check(s: &GridState, params: &InnerParams) -> Result<()> {
    check_params(s, params)
}
