//! Grid currents `J_a^mu` and `script J_a^mu`, continuity residuals, and the two
//! mode-engine experiments: boost covariance and the nonrelativistic limit.

use serde::Serialize;

use crate::error::{KgError, Result};
use crate::hilbert_space;
use crate::mode_engine::{self, ChargeParity, LorentzBoost, ModeField, SpacetimePoint, C64};
use crate::params::InnerParams;
use crate::spectral_grid::{charge_conjugate_grid, gradient, max_abs, GridState, Lattice};

const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CurrentKind {
    /// The conserved current `J_a^mu`.
    Conserved,
    /// The probability current `script J_a^mu` whose time component is `rho_a`.
    Probability,
}

impl CurrentKind {
    pub fn label(self) -> &'static str {
        match self {
            CurrentKind::Conserved => "J",
            CurrentKind::Probability => "script_J",
        }
    }
}

/// Four sampled components with upper indices; unused spatial axes are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct FourField {
    lattice: Lattice,
    pub components: [Vec<C64>; 4],
    pub kind: CurrentKind,
    pub params: InnerParams,
    pub x0: f64,
}

impl FourField {
    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn component(&self, mu: usize) -> &[C64] {
        &self.components[mu]
    }

    pub fn max_abs(&self) -> f64 {
        self.components.iter().map(|c| max_abs(c)).fold(0.0, f64::max)
    }

    /// `Re T^0` and `|T^0|`; the conserved `J^0` can be complex pointwise.
    pub fn time_density_re(&self) -> Vec<f64> {
        self.components[0].iter().map(|v| v.re).collect()
    }

    pub fn time_density_abs(&self) -> Vec<f64> {
        self.components[0].iter().map(|v| v.norm()).collect()
    }

    /// Riemann sum of the time component.
    pub fn time_integral(&self) -> C64 {
        self.components[0].iter().sum::<C64>() * self.lattice.cell_volume()
    }

    pub fn max_imaginary(&self) -> f64 {
        self.components
            .iter()
            .flat_map(|c| c.iter().map(|v| v.im.abs()))
            .fold(0.0, f64::max)
    }

    pub fn max_difference(&self, other: &FourField) -> f64 {
        (0..4)
            .map(|mu| {
                self.components[mu]
                    .iter()
                    .zip(&other.components[mu])
                    .map(|(a, b)| (a - b).norm())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    /// Spectral `sum_i d_i T^i`.
    pub fn spatial_divergence(&self) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.lattice.len()];
        for axis in 0..self.lattice.dims() {
            let d = gradient(&self.components[axis + 1], &self.lattice, axis).expect("own lattice");
            for (o, v) in out.iter_mut().zip(d) {
                *o += v;
            }
        }
        out
    }
}

fn zeros(n: usize) -> Vec<C64> {
    vec![C64::new(0.0, 0.0); n]
}

fn grads(v: &[C64], lattice: &Lattice) -> [Vec<C64>; 3] {
    std::array::from_fn(|axis| gradient(v, lattice, axis).expect("own lattice"))
}

/// `J_a^mu`: time component from the inner-product integrand, spatial components from
/// the boosted-frame expression with spectral gradients.
pub fn current_j(s: &GridState, params: &InnerParams) -> Result<FourField> {
    hilbert_space::grid_check(s, params)?;
    let lat = *s.lattice();
    let (psi, pd) = (s.psi(), s.psidot());
    let dh = s.d_power(psi, 0.5);
    let w = s.d_power(pd, -0.5);
    let pre = params.kappa / (2.0 * params.mass);
    let a = params.a;
    let j0 = (0..lat.len())
        .map(|i| pre * (psi[i].conj() * dh[i] + pd[i].conj() * w[i] + I * a * (psi[i].conj() * pd[i] - pd[i].conj() * psi[i])))
        .collect();
    let gpsi = grads(psi, &lat);
    let gw = grads(&w, &lat);
    let spatial: [Vec<C64>; 3] = std::array::from_fn(|axis| {
        if axis >= lat.dims() {
            return zeros(lat.len());
        }
        (0..lat.len())
            .map(|i| {
                let (p, gp, ww, gww) = (psi[i], gpsi[axis][i], w[i], gw[axis][i]);
                pre * (p.conj() * gww - gp.conj() * ww - I * a * (p.conj() * gp - gp.conj() * p))
            })
            .collect()
    });
    let [j1, j2, j3] = spatial;
    Ok(FourField {
        lattice: lat,
        components: [j0, j1, j2, j3],
        kind: CurrentKind::Conserved,
        params: *params,
        x0: s.x0(),
    })
}

/// `J_a^mu = -(i kappa/2M) psi^* <->d^mu psi~_a` evaluated on the grid; the time
/// derivative of `psi~_a` uses `d0 psi_c = -i D^{1/2} psi`.
pub fn current_j_tilde(s: &GridState, params: &InnerParams) -> Result<FourField> {
    hilbert_space::grid_check(s, params)?;
    let lat = *s.lattice();
    let sc = charge_conjugate_grid(s);
    let a = params.a;
    let tilde: Vec<C64> = sc.psi().iter().zip(s.psi()).map(|(c, p)| c + a * p).collect();
    let tilde_dot: Vec<C64> = sc.psidot().iter().zip(s.psidot()).map(|(c, p)| c + a * p).collect();
    let pre = C64::new(0.0, -params.kappa / (2.0 * params.mass));
    let psi = s.psi();
    let pd = s.psidot();
    // d^0 = -d_0
    let j0 = (0..lat.len())
        .map(|i| pre * (psi[i].conj() * (-tilde_dot[i]) - (-pd[i]).conj() * tilde[i]))
        .collect();
    let gpsi = grads(psi, &lat);
    let gt = grads(&tilde, &lat);
    let [j1, j2, j3]: [Vec<C64>; 3] = std::array::from_fn(|axis| {
        (0..lat.len())
            .map(|i| pre * (psi[i].conj() * gt[axis][i] - gpsi[axis][i].conj() * tilde[i]))
            .collect()
    });
    Ok(FourField {
        lattice: lat,
        components: [j0, j1, j2, j3],
        kind: CurrentKind::Conserved,
        params: *params,
        x0: s.x0(),
    })
}

/// `script J_a^mu`, real-valued.
pub fn current_j_script(s: &GridState, params: &InnerParams) -> Result<FourField> {
    hilbert_space::grid_check(s, params)?;
    let lat = *s.lattice();
    let sc = charge_conjugate_grid(s);
    let u = s.d_power(s.psi(), 0.25);
    let v = s.d_power(sc.psi(), 0.25);
    let p = s.d_power(s.psi(), -0.25);
    let q = s.d_power(sc.psi(), -0.25);
    // d^0 P = -D^{-1/4} psi_dot, d^0 Q = -D^{-1/4} psi_dot_c
    let p0: Vec<C64> = s.d_power(s.psidot(), -0.25).into_iter().map(|x| -x).collect();
    let q0: Vec<C64> = s.d_power(sc.psidot(), -0.25).into_iter().map(|x| -x).collect();
    let gp = grads(&p, &lat);
    let gq = grads(&q, &lat);
    let pre = params.kappa / (2.0 * params.mass);
    let a = params.a;
    let build = |dp: &[C64], dq: &[C64]| -> Vec<C64> {
        (0..lat.len())
            .map(|i| {
                let inner = u[i].conj() * dq[i] - v[i] * dp[i].conj()
                    + a * (u[i].conj() * dp[i] - v[i] * dq[i].conj());
                C64::new(pre * inner.im, 0.0)
            })
            .collect()
    };
    let components = [
        build(&p0, &q0),
        build(&gp[0], &gq[0]),
        build(&gp[1], &gq[1]),
        build(&gp[2], &gq[2]),
    ];
    Ok(FourField {
        lattice: lat,
        components,
        kind: CurrentKind::Probability,
        params: *params,
        x0: s.x0(),
    })
}

pub fn current(s: &GridState, params: &InnerParams, kind: CurrentKind) -> Result<FourField> {
    match kind {
        CurrentKind::Conserved => current_j(s, params),
        CurrentKind::Probability => current_j_script(s, params),
    }
}

/// Re and Im of grid `J_a^mu` assembled from the sector components.
pub fn decompose_current_j(s: &GridState, params: &InnerParams) -> Result<([Vec<f64>; 4], [Vec<f64>; 4])> {
    hilbert_space::grid_check(s, params)?;
    let lat = *s.lattice();
    let plus = s.energy_project(ChargeParity::Positive);
    let minus = s.energy_project(ChargeParity::Negative);
    let derivs = |st: &GridState| -> [Vec<C64>; 4] {
        let g = grads(st.psi(), &lat);
        let [g1, g2, g3] = g;
        [st.psidot().iter().map(|v| -v).collect(), g1, g2, g3]
    };
    let dp = derivs(&plus);
    let dm = derivs(&minus);
    let (pp, mm) = (plus.psi(), minus.psi());
    let scale = params.kappa / (2.0 * params.mass);
    let a = params.a;
    let mut re: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; lat.len()]);
    let mut im: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; lat.len()]);
    for mu in 0..4 {
        for i in 0..lat.len() {
            let lr = |l: C64, dl: C64, r: C64, dr: C64| l.conj() * dr - dl.conj() * r;
            let cpp = lr(pp[i], dp[mu][i], pp[i], dp[mu][i]);
            let cmm = lr(mm[i], dm[mu][i], mm[i], dm[mu][i]);
            let cpm = lr(pp[i], dp[mu][i], mm[i], dm[mu][i]);
            let bracket = cpp * (1.0 + a) - cmm * (1.0 - a) + I * (2.0 * a * cpm.im);
            re[mu][i] = (C64::new(0.0, -scale) * bracket).re;
            im[mu][i] = 2.0 * scale * cpm.re;
        }
    }
    Ok((re, im))
}

fn time_component(s: &GridState, params: &InnerParams, kind: CurrentKind) -> Result<Vec<C64>> {
    let f = current(s, params, kind)?;
    let [t, ..] = f.components;
    Ok(t)
}

/// `d_0 T^0 + div T` on the lattice: the time derivative is a central difference of
/// exactly evolved states with one Richardson level, the divergence is spectral.
pub fn divergence_field(s: &GridState, params: &InnerParams, kind: CurrentKind, h: f64) -> Result<Vec<C64>> {
    if !(h > 0.0) {
        return Err(KgError::NonPositiveArgument(h));
    }
    let central = |step: f64| -> Result<Vec<C64>> {
        let f = time_component(&s.evolve(step), params, kind)?;
        let b = time_component(&s.evolve(-step), params, kind)?;
        Ok(f.iter().zip(&b).map(|(x, y)| (x - y) / (2.0 * step)).collect())
    };
    let coarse = central(h)?;
    let fine = central(0.5 * h)?;
    let here = current(s, params, kind)?;
    let div = here.spatial_divergence();
    Ok((0..div.len())
        .map(|i| (4.0 * fine[i] - coarse[i]) / 3.0 + div[i])
        .collect())
}

/// Max-norm of [`divergence_field`] relative to `max|T| * omega_band`.
pub fn continuity_residual(s: &GridState, params: &InnerParams, kind: CurrentKind, h: f64) -> Result<f64> {
    let div = divergence_field(s, params, kind, h)?;
    let scale = current(s, params, kind)?.max_abs() * s.omega_band();
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok(max_abs(&div) / scale)
}

#[derive(Debug, Clone, Serialize)]
pub struct CovariancePoint {
    pub point: [f64; 4],
    pub defect_j: f64,
    pub defect_script: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CovarianceReport {
    pub beta: [f64; 3],
    pub points: Vec<CovariancePoint>,
    /// Largest `|J|` and `|script J|` over the points, used to make defects relative.
    pub scale_j: f64,
    pub scale_script: f64,
}

impl CovarianceReport {
    pub fn max_defect_j(&self) -> f64 {
        self.points.iter().map(|p| p.defect_j).fold(0.0, f64::max)
    }

    pub fn max_defect_script(&self) -> f64 {
        self.points.iter().map(|p| p.defect_script).fold(0.0, f64::max)
    }

    pub fn relative_defect_j(&self) -> f64 {
        relative(self.max_defect_j(), self.scale_j)
    }

    pub fn relative_defect_script(&self) -> f64 {
        relative(self.max_defect_script(), self.scale_script)
    }
}

fn relative(d: f64, scale: f64) -> f64 {
    if scale == 0.0 {
        d
    } else {
        d / scale
    }
}

/// For each point compares the current of the boosted field at `Lambda x` with the
/// boosted current at `x`, for both `J` and `script J`.
pub fn covariance_experiment(
    f: &ModeField,
    params: &InnerParams,
    lambda: &LorentzBoost,
    points: &[SpacetimePoint],
) -> Result<CovarianceReport> {
    let boosted = mode_engine::boost(f, lambda);
    let mut out = Vec::with_capacity(points.len());
    let mut scale_j: f64 = 0.0;
    let mut scale_script: f64 = 0.0;
    for x in points {
        let xb = lambda.apply_point(x);
        let j = mode_engine::eval_j(f, params, x)?;
        let jb = mode_engine::eval_j(&boosted, params, &xb)?;
        let s = mode_engine::eval_j_script(f, params, x)?;
        let sb = mode_engine::eval_j_script(&boosted, params, &xb)?;
        scale_j = scale_j.max(j.max_abs());
        scale_script = scale_script.max(s.max_abs());
        out.push(CovariancePoint {
            point: x.to_array(),
            defect_j: (jb - lambda.apply(&j)).max_abs(),
            defect_script: (sb - lambda.apply(&s)).max_abs(),
        });
    }
    Ok(CovarianceReport {
        beta: lambda.beta(),
        points: out,
        scale_j,
        scale_script,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct NonrelRow {
    pub scale: f64,
    pub deviation_j: f64,
    pub deviation_script: f64,
    /// `sum T^0 / sum rho` over the sample points for `J` and `script J`.
    pub ratio_j: f64,
    pub ratio_script: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct NonrelTable {
    pub rows: Vec<NonrelRow>,
    pub slope_j: f64,
    pub slope_script: f64,
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let num: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    num / den
}

/// Nonrelativistic points: `x = s xi` and `x0 = s^2 tau` follow the field as all
/// wavevectors shrink by `s`, so the Schrodinger densities at these points converge.
pub fn default_nonrel_points(dims: usize) -> Vec<(f64, [f64; 3])> {
    let mut out = Vec::new();
    for t in 0..4 {
        for j in 0..8 {
            let mut xi = [0.0; 3];
            for (axis, x) in xi.iter_mut().enumerate().take(dims) {
                *x = 0.37 * j as f64 + 0.61 * axis as f64 + 0.13 * t as f64;
            }
            out.push((0.45 * t as f64, xi));
        }
    }
    out
}

/// Deviations `max|T^0 - rho| / max rho` and `max|T - j| / max|j|` (the larger is
/// reported) of both currents from the Schrodinger densities `rho = |psi|^2`,
/// `j = -(i/2M)[psi^* grad psi - psi grad psi^*]`, for `k -> k/s`.
pub fn nonrel_limit_scan(
    base: &ModeField,
    params: &InnerParams,
    scales: &[f64],
    points: &[(f64, [f64; 3])],
) -> Result<NonrelTable> {
    if base.modes().iter().any(|m| m.eps != ChargeParity::Positive) {
        return Err(KgError::IncompatibleField(
            "the nonrelativistic limit needs a positive-energy field".into(),
        ));
    }
    if scales.len() < 2 || scales.iter().any(|s| !(*s > 0.0)) {
        return Err(KgError::NonPositiveArgument(scales.first().copied().unwrap_or(0.0)));
    }
    let mut rows = Vec::with_capacity(scales.len());
    for &s in scales {
        let f = base.rescaled_wavevectors(s)?;
        let mut rho = Vec::new();
        let mut flux = Vec::new();
        let mut tj = Vec::new();
        let mut ts = Vec::new();
        for &(tau, xi) in points {
            let x = SpacetimePoint::new(s * s * tau, xi.map(|c| c * s));
            let jet = mode_engine::jet(&f, &x, |_, _| 1.0);
            let psi = jet.value;
            rho.push(psi.norm_sqr());
            let mut j = [0.0; 3];
            for i in 0..3 {
                let g = jet.grad[i + 1];
                j[i] = (C64::new(0.0, -1.0 / (2.0 * params.mass)) * (psi.conj() * g - psi * g.conj())).re;
            }
            flux.push(j);
            tj.push(mode_engine::eval_j(&f, params, &x)?);
            ts.push(mode_engine::eval_j_script(&f, params, &x)?);
        }
        let rho_max = rho.iter().cloned().fold(0.0, f64::max);
        let flux_max = flux
            .iter()
            .map(|j| j.iter().map(|c| c * c).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        let deviation = |t: &[mode_engine::FourVector]| -> (f64, f64) {
            let mut d0: f64 = 0.0;
            let mut dv: f64 = 0.0;
            let mut sum_t = 0.0;
            for (k, v) in t.iter().enumerate() {
                d0 = d0.max((v[0] - rho[k]).norm());
                sum_t += v[0].re;
                let dd: f64 = (0..3).map(|i| (v[i + 1] - flux[k][i]).norm_sqr()).sum::<f64>().sqrt();
                dv = dv.max(dd);
            }
            let spatial = if flux_max > 0.0 { dv / flux_max } else { 0.0 };
            (
                (d0 / rho_max).max(spatial),
                sum_t / rho.iter().sum::<f64>(),
            )
        };
        let (deviation_j, ratio_j) = deviation(&tj);
        let (deviation_script, ratio_script) = deviation(&ts);
        rows.push(NonrelRow {
            scale: s,
            deviation_j,
            deviation_script,
            ratio_j,
            ratio_script,
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.scale).collect();
    let slope_j = log_log_slope(&xs, &rows.iter().map(|r| r.deviation_j).collect::<Vec<_>>());
    let slope_script = log_log_slope(&xs, &rows.iter().map(|r| r.deviation_script).collect::<Vec<_>>());
    Ok(NonrelTable {
        rows,
        slope_j,
        slope_script,
    })
}
