//! Localized states `psi^(eps, y)`, the Bessel-K closed form of their profile, and
//! the position and momentum operators on grid states.

mod special;

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{KgError, Result};
use crate::hilbert_space::{map_u_a, map_u_inverse, TwoComponentVector};
use crate::mode_engine::{ChargeParity, SpacetimePoint, C64};
use crate::params::InnerParams;
use crate::spectral_grid::{fourier_multiplier, max_abs, GridState, Lattice};

pub use special::{bessel_k, gamma};
pub(crate) use special::gauss_legendre as gauss_legendre_rule;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalizedStateSpec {
    pub eps: ChargeParity,
    pub center: [f64; 3],
    pub x0_0: f64,
    pub params: InnerParams,
}

impl LocalizedStateSpec {
    pub fn new(eps: ChargeParity, center: [f64; 3], x0_0: f64, params: InnerParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { eps, center, x0_0, params })
    }

    fn distance(&self, x: &[f64; 3]) -> Result<f64> {
        let r = (0..3).map(|i| (x[i] - self.center[i]).powi(2)).sum::<f64>().sqrt();
        if r == 0.0 {
            return Err(KgError::CoincidentPoints);
        }
        Ok(r)
    }
}

/// Profile of `psi^(eps, y)` at the reference time, for either `eps`.
pub fn nw_closed_form(spec: &LocalizedStateSpec, x: &[f64; 3]) -> Result<f64> {
    let r = spec.distance(x)?;
    let m = spec.params.mass;
    let pre = (m / spec.params.kappa).sqrt() / (2f64.powf(0.75) * PI.powf(1.5) * gamma(0.25));
    Ok(pre * (m / r).powf(1.25) * bessel_k(1.25, m * r)?)
}

/// Default relative tolerance of [`nw_quadrature`].
pub const NW_TOLERANCE: f64 = 1e-10;

pub fn nw_quadrature(spec: &LocalizedStateSpec, x: &SpacetimePoint) -> Result<C64> {
    nw_quadrature_with_tolerance(spec, x, NW_TOLERANCE)
}

/// `sqrt(M/kappa) / (2 pi^2 r) int_0^inf k sin(rk) exp(-i eps dt w) w^{-1/2} dk`.
///
/// After two integrations by parts the integral is `-(1/r^2) int sin(rk) h'(k) dk`
/// with `h = d(k g)/dk`. The remaining growth (present when `dt != 0`) is tamed by
/// `exp(-delta k)` and the result is extrapolated to `delta = 0` by Neville's scheme
/// on a geometric sequence of `delta`.
pub fn nw_quadrature_with_tolerance(spec: &LocalizedStateSpec, x: &SpacetimePoint, tol: f64) -> Result<C64> {
    let r = spec.distance(&x.x)?;
    let m = spec.params.mass;
    let beta = spec.eps.sign() * (x.x0 - spec.x0_0);
    let hprime = |k: f64| -> C64 {
        let w2 = k * k + m * m;
        let w = w2.sqrt();
        let g = C64::from_polar(w.powf(-0.5), -beta * w);
        let c = C64::new(1.0 / (2.0 * w2), beta / w);
        let q = -c * k;
        let dq = -c + C64::new(k * k / (w2 * w2), beta * k * k / (w2 * w));
        g * (2.0 * q + k * (dq + q * q))
    };
    let integral = |delta: f64| -> C64 {
        let k_max = if delta > 0.0 { -(1e-18f64).ln() / delta } else { 0.0 };
        let osc = std::f64::consts::PI / (r + beta.abs());
        let rule = special::gauss_legendre();
        let mut sum = C64::new(0.0, 0.0);
        let mut a = 0.0;
        while a < k_max {
            let width = osc.min((0.5 * m).max(0.25 * a));
            let b = a + width;
            let (mid, half) = (0.5 * (a + b), 0.5 * width);
            for (t, wt) in rule {
                let k = mid + half * t;
                sum += hprime(k) * ((r * k).sin() * (-delta * k).exp() * wt * half);
            }
            a = b;
        }
        sum * (-1.0 / (r * r))
    };
    let light = (r - beta.abs()).abs();
    let delta0 = 0.5 * light.max(0.05 * r).min(2.0 / m);
    const LEVELS: usize = 10;
    let mut deltas = Vec::with_capacity(LEVELS);
    let mut table: Vec<C64> = Vec::with_capacity(LEVELS);
    let mut best = C64::new(0.0, 0.0);
    let mut err = f64::INFINITY;
    for level in 0..LEVELS {
        let d = delta0 * 0.5f64.powi(level as i32);
        deltas.push(d);
        table.push(integral(d));
        // Neville: table[j] becomes the extrapolation over deltas[j..=level]
        for j in (0..level).rev() {
            let (dj, dl) = (deltas[j], deltas[level]);
            table[j] = (table[j + 1] * dj - table[j] * dl) / (dj - dl);
        }
        if level >= 2 {
            let e = (table[0] - table[1]).norm();
            if e < err {
                err = e;
                best = table[0];
            }
            if err <= tol * best.norm() {
                break;
            }
        }
    }
    if !(err <= tol.max(1e-14) * best.norm() * 10.0) {
        return Err(KgError::Quadrature(format!(
            "radial integral at r = {r} reached relative error {:.3e}",
            err / best.norm()
        )));
    }
    let pre = (m / spec.params.kappa).sqrt() / (2.0 * PI * PI * r);
    Ok(best * pre)
}

/// `|y>` on the lattice: `(N/L)^d` at the site of `y`.
pub fn lattice_delta(lattice: &Lattice, y: &[f64; 3]) -> Result<Vec<C64>> {
    let site = lattice.site_of(y)?;
    let mut v = vec![C64::new(0.0, 0.0); lattice.len()];
    v[site] = C64::new(1.0 / lattice.cell_volume(), 0.0);
    Ok(v)
}

/// `psi^(eps, y) = U_a^{-1}(|y> e_eps)` sampled at `x0`.
pub fn localized_basis_grid_at(
    lattice: &Lattice,
    params: &InnerParams,
    eps: ChargeParity,
    y: &[f64; 3],
    x0_0: f64,
    x0: f64,
) -> Result<GridState> {
    let delta = lattice_delta(lattice, y)?;
    let zero = vec![C64::new(0.0, 0.0); lattice.len()];
    let v = match eps {
        ChargeParity::Positive => TwoComponentVector::new(*lattice, delta, zero)?,
        ChargeParity::Negative => TwoComponentVector::new(*lattice, zero, delta)?,
    };
    map_u_inverse(&v, params, x0_0, x0)
}

pub fn localized_basis_grid(
    lattice: &Lattice,
    params: &InnerParams,
    eps: ChargeParity,
    y: &[f64; 3],
    x0_0: f64,
) -> Result<GridState> {
    localized_basis_grid_at(lattice, params, eps, y, x0_0, x0_0)
}

/// Fraction of the box at each end of an axis treated as boundary layer.
pub const BOUNDARY_LAYER: f64 = 0.1;
/// Largest allowed magnitude in the boundary layer relative to the maximum.
pub const BOUNDARY_THRESHOLD: f64 = 1e-10;

fn check_boundary(v: &[C64], peak: f64, lattice: &Lattice, axis: usize) -> Result<()> {
    if peak == 0.0 {
        return Ok(());
    }
    let l = lattice.box_length();
    let worst = (0..lattice.len())
        .filter(|&i| {
            let x = lattice.position(i)[axis];
            x < BOUNDARY_LAYER * l || x > (1.0 - BOUNDARY_LAYER) * l
        })
        .map(|i| v[i].norm())
        .fold(0.0, f64::max);
    if worst > BOUNDARY_THRESHOLD * peak {
        return Err(KgError::BoundarySupport { axis, magnitude: worst / peak });
    }
    Ok(())
}

fn check_axis(lattice: &Lattice, axis: usize) -> Result<()> {
    if axis >= lattice.dims() {
        return Err(KgError::InvalidLattice(format!(
            "axis {axis} is not below the dimension {}",
            lattice.dims()
        )));
    }
    Ok(())
}

/// `X = U_a^{-1} (x (x) sigma_0) U_a` on a state given at `x0_0`.
///
/// Coordinate multiplication is not periodic, so both components of `U_a psi`
/// must vanish near the box boundary along `axis`.
pub fn apply_position(s: &GridState, params: &InnerParams, x0_0: f64, axis: usize) -> Result<GridState> {
    let lat = *s.lattice();
    check_axis(&lat, axis)?;
    let v = map_u_a(s, params, x0_0)?;
    let peak = max_abs(&v.xi1).max(max_abs(&v.xi2));
    check_boundary(&v.xi1, peak, &lat, axis)?;
    check_boundary(&v.xi2, peak, &lat, axis)?;
    let coord = |xi: &[C64]| -> Vec<C64> {
        xi.iter().enumerate().map(|(i, z)| z * lat.position(i)[axis]).collect()
    };
    let w = TwoComponentVector::new(lat, coord(&v.xi1), coord(&v.xi2))?;
    map_u_inverse(&w, params, x0_0, x0_0)
}

/// `P = -i d/dx` along `axis`; it commutes with the evolution.
pub fn apply_momentum(s: &GridState, axis: usize) -> Result<GridState> {
    let lat = *s.lattice();
    check_axis(&lat, axis)?;
    let p = |v: &[C64]| fourier_multiplier(v, &lat, |k| C64::new(k[axis], 0.0));
    s.with_data(p(s.psi()), p(s.psidot()))
}

/// Newton-Wigner `x + i p / (2 (p^2 + M^2))` along `axis`, or its adjoint.
pub fn newton_wigner_operator(v: &[C64], lattice: &Lattice, mass: f64, axis: usize, adjoint: bool) -> Result<Vec<C64>> {
    check_axis(lattice, axis)?;
    lattice.check_len(v.len())?;
    let sign = if adjoint { -1.0 } else { 1.0 };
    let shift = fourier_multiplier(v, lattice, |k| {
        let w2 = k.iter().map(|c| c * c).sum::<f64>() + mass * mass;
        C64::new(0.0, sign * k[axis] / (2.0 * w2))
    });
    Ok(v.iter()
        .zip(shift)
        .enumerate()
        .map(|(i, (z, d))| z * lattice.position(i)[axis] + d)
        .collect())
}

/// Relative defect of `(X psi)(x0_0) = N psi(x0_0)` and
/// `d0 (X psi)(x0_0) = N^dagger psi_dot(x0_0)`, with `N` the Newton-Wigner operator.
pub fn nw_initial_condition_defect(s: &GridState, params: &InnerParams, x0_0: f64, axis: usize) -> Result<f64> {
    let xs = apply_position(s, params, x0_0, axis)?;
    let lat = *s.lattice();
    let n_psi = newton_wigner_operator(s.psi(), &lat, s.mass(), axis, false)?;
    let n_dot = newton_wigner_operator(s.psidot(), &lat, s.mass(), axis, true)?;
    let d1 = xs.psi().iter().zip(&n_psi).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    let d2 = xs.psidot().iter().zip(&n_dot).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    let scale = max_abs(&n_psi).max(max_abs(&n_dot));
    Ok(if scale == 0.0 { 0.0 } else { d1.max(d2) / scale })
}

#[derive(Debug, Clone, Serialize)]
pub struct NwComparison {
    pub eps: ChargeParity,
    pub mr: f64,
    pub closed_form: f64,
    pub quadrature: f64,
    pub rel_err: f64,
}

/// Closed form against quadrature at the reference time, at distances `mr / M`
/// along the first axis.
pub fn nw_comparison(params: &InnerParams, mrs: &[f64]) -> Result<Vec<NwComparison>> {
    let mut out = Vec::new();
    for eps in ChargeParity::BOTH {
        let spec = LocalizedStateSpec::new(eps, [0.0; 3], 0.0, *params)?;
        for &mr in mrs {
            let x = [mr / params.mass, 0.0, 0.0];
            let c = nw_closed_form(&spec, &x)?;
            let q = nw_quadrature(&spec, &SpacetimePoint::new(0.0, x))?;
            out.push(NwComparison {
                eps,
                mr,
                closed_form: c,
                quadrature: q.re,
                rel_err: (q - c).norm() / c.abs(),
            });
        }
    }
    Ok(out)
}

pub fn nw_comparison_csv(rows: &[NwComparison]) -> String {
    let mut s = String::from("eps,M_r,closed_form,quadrature,rel_err\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{},{}", r.eps.sign(), r.mr, r.closed_form, r.quadrature, r.rel_err);
    }
    s
}
