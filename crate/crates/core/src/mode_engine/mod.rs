//! Closed-form evaluation for finite superpositions of on-shell plane waves.
//!
//! A mode with amplitude `c`, wavevector `k` and charge parity `eps` contributes
//! `c exp(-i eps omega x0 + i k.x)` with `omega = sqrt(k^2 + M^2)`, i.e. it carries
//! the four-momentum `p = (eps omega, k)` (upper indices) and the phase `p.x`.
//! Every operator used by the currents (`D^alpha`, charge conjugation, the sector
//! projections) acts on a mode by a scalar factor, so all quantities here are
//! exact mode sums with no discretization.

mod kinematics;

use std::collections::HashMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{KgError, Result};
use crate::params::{check_mass, InnerParams};

pub use kinematics::{FourVector, LorentzBoost, SpacetimePoint, C64, METRIC};
pub(crate) use kinematics::minkowski;

const BOX_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ChargeParity {
    Positive,
    Negative,
}

impl ChargeParity {
    pub const BOTH: [ChargeParity; 2] = [ChargeParity::Positive, ChargeParity::Negative];

    pub fn sign(self) -> f64 {
        match self {
            ChargeParity::Positive => 1.0,
            ChargeParity::Negative => -1.0,
        }
    }

    pub fn from_sign(s: i64) -> Result<Self> {
        match s {
            1 => Ok(ChargeParity::Positive),
            -1 => Ok(ChargeParity::Negative),
            other => Err(KgError::Document(format!("eps must be 1 or -1, got {other}"))),
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            ChargeParity::Positive => ChargeParity::Negative,
            ChargeParity::Negative => ChargeParity::Positive,
        }
    }
}

impl Serialize for ChargeParity {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_i8(self.sign() as i8)
    }
}

impl<'de> Deserialize<'de> for ChargeParity {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = i64::deserialize(d)?;
        ChargeParity::from_sign(v).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSpec {
    pub amplitude: C64,
    pub wavevec: [f64; 3],
    pub eps: ChargeParity,
}

impl ModeSpec {
    pub fn new(amplitude: C64, wavevec: [f64; 3], eps: ChargeParity) -> Self {
        Self {
            amplitude,
            wavevec,
            eps,
        }
    }

    pub fn omega(&self, mass: f64) -> f64 {
        omega_unchecked(&self.wavevec, mass)
    }

    /// `(eps omega, k)`, upper indices.
    pub fn four_momentum(&self, mass: f64) -> [f64; 4] {
        let w = self.omega(mass);
        let k = self.wavevec;
        [self.eps.sign() * w, k[0], k[1], k[2]]
    }
}

/// `sqrt(|k|^2 + M^2)`.
pub fn omega(wavevec: &[f64; 3], mass: f64) -> Result<f64> {
    check_mass(mass)?;
    Ok(omega_unchecked(wavevec, mass))
}

pub(crate) fn omega_unchecked(k: &[f64; 3], mass: f64) -> f64 {
    (k[0] * k[0] + k[1] * k[1] + k[2] * k[2] + mass * mass).sqrt()
}

/// A finite superposition of plane-wave solutions, optionally confined to the
/// periodic box `[0, L)^3` (wavevectors on the lattice `2 pi n / L`).
#[derive(Debug, Clone, PartialEq)]
pub struct ModeField {
    mass: f64,
    box_length: f64,
    boxed: bool,
    modes: Vec<ModeSpec>,
}

#[derive(PartialEq, Eq, Hash)]
enum MergeKey {
    Lattice([i64; 3], ChargeParity),
    Exact([u64; 3], ChargeParity),
}

impl ModeField {
    /// Validates the field and merges modes sharing `(k, eps)`; zero amplitudes are dropped.
    pub fn new(mass: f64, box_length: f64, boxed: bool, modes: Vec<ModeSpec>) -> Result<Self> {
        check_mass(mass)?;
        if !(box_length > 0.0 && box_length.is_finite()) {
            return Err(KgError::NonPositiveLength(box_length));
        }
        let mut order: Vec<MergeKey> = Vec::new();
        let mut merged: HashMap<MergeKey, ModeSpec> = HashMap::new();
        for m in modes {
            if m.wavevec.iter().any(|k| !k.is_finite())
                || !m.amplitude.re.is_finite()
                || !m.amplitude.im.is_finite()
            {
                return Err(KgError::IncompatibleField("non-finite mode data".into()));
            }
            let key = if boxed {
                let n = lattice_index_of(&m.wavevec, box_length).ok_or_else(|| {
                    KgError::IncompatibleField(format!(
                        "wavevector {:?} is not on the 2 pi n / L lattice",
                        m.wavevec
                    ))
                })?;
                MergeKey::Lattice(n, m.eps)
            } else {
                MergeKey::Exact(m.wavevec.map(f64::to_bits), m.eps)
            };
            match merged.get_mut(&key) {
                Some(existing) => existing.amplitude += m.amplitude,
                None => {
                    let mut m = m;
                    if boxed {
                        if let MergeKey::Lattice(n, _) = key {
                            m.wavevec = lattice_wavevec(n, box_length);
                        }
                    }
                    merged.insert(
                        match &key {
                            MergeKey::Lattice(n, e) => MergeKey::Lattice(*n, *e),
                            MergeKey::Exact(b, e) => MergeKey::Exact(*b, *e),
                        },
                        m,
                    );
                    order.push(key);
                }
            }
        }
        let modes = order
            .into_iter()
            .filter_map(|k| merged.remove(&k))
            .filter(|m| m.amplitude != C64::new(0.0, 0.0))
            .collect();
        Ok(Self {
            mass,
            box_length,
            boxed,
            modes,
        })
    }

    pub fn empty(mass: f64, box_length: f64) -> Result<Self> {
        Self::new(mass, box_length, true, Vec::new())
    }

    /// Boxed field from integer lattice indices.
    pub fn from_indices(
        mass: f64,
        box_length: f64,
        modes: impl IntoIterator<Item = (C64, [i64; 3], ChargeParity)>,
    ) -> Result<Self> {
        let specs = modes
            .into_iter()
            .map(|(c, n, e)| ModeSpec::new(c, lattice_wavevec(n, box_length), e))
            .collect();
        Self::new(mass, box_length, true, specs)
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    pub fn is_boxed(&self) -> bool {
        self.boxed
    }

    pub fn modes(&self) -> &[ModeSpec] {
        &self.modes
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn lattice_index(&self, mode: &ModeSpec) -> Option<[i64; 3]> {
        if self.boxed {
            lattice_index_of(&mode.wavevec, self.box_length)
        } else {
            None
        }
    }

    /// Multiplies every amplitude by a mode-dependent factor.
    pub fn map_amplitudes(&self, factor: impl Fn(&ModeSpec) -> C64) -> ModeField {
        let modes = self
            .modes
            .iter()
            .map(|m| ModeSpec {
                amplitude: m.amplitude * factor(m),
                ..*m
            })
            .filter(|m| m.amplitude != C64::new(0.0, 0.0))
            .collect();
        ModeField { modes, ..self.clone() }
    }

    /// Same-type superposition; both fields must share mass, box and boxing.
    pub fn superpose(&self, other: &ModeField) -> Result<ModeField> {
        self.check_compatible(other)?;
        let mut modes = self.modes.clone();
        modes.extend_from_slice(&other.modes);
        ModeField::new(self.mass, self.box_length, self.boxed, modes)
    }

    /// Wavevectors divided by `s`; the box grows by `s` so a boxed field stays boxed.
    pub fn rescaled_wavevectors(&self, s: f64) -> Result<ModeField> {
        let modes = self
            .modes
            .iter()
            .map(|m| ModeSpec {
                wavevec: m.wavevec.map(|k| k / s),
                ..*m
            })
            .collect();
        ModeField::new(self.mass, self.box_length * s, self.boxed, modes)
    }

    pub fn with_modes(&self, modes: Vec<ModeSpec>) -> Result<ModeField> {
        ModeField::new(self.mass, self.box_length, self.boxed, modes)
    }

    /// Largest component magnitude `|n_i|` of the lattice indices.
    pub fn max_index(&self) -> Option<i64> {
        if !self.boxed {
            return None;
        }
        Some(
            self.modes
                .iter()
                .filter_map(|m| self.lattice_index(m))
                .flat_map(|n| n.into_iter().map(i64::abs))
                .max()
                .unwrap_or(0),
        )
    }

    fn check_compatible(&self, other: &ModeField) -> Result<()> {
        if !same_value(self.mass, other.mass)
            || !same_value(self.box_length, other.box_length)
            || self.boxed != other.boxed
        {
            return Err(KgError::StateMismatch(
                "mode fields differ in mass, box length or boxing".into(),
            ));
        }
        Ok(())
    }

    pub(crate) fn check_params(&self, params: &InnerParams) -> Result<()> {
        params.validate()?;
        if !same_value(self.mass, params.mass) {
            return Err(KgError::StateMismatch(format!(
                "field mass {} differs from parameter mass {}",
                self.mass, params.mass
            )));
        }
        Ok(())
    }
}

pub(crate) fn same_value(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

pub(crate) fn lattice_wavevec(n: [i64; 3], box_length: f64) -> [f64; 3] {
    n.map(|c| 2.0 * PI * c as f64 / box_length)
}

pub(crate) fn lattice_index_of(k: &[f64; 3], box_length: f64) -> Option<[i64; 3]> {
    let mut out = [0i64; 3];
    for i in 0..3 {
        let q = k[i] * box_length / (2.0 * PI);
        let r = q.round();
        if (q - r).abs() > BOX_TOL * r.abs().max(1.0) {
            return None;
        }
        out[i] = r as i64;
    }
    Some(out)
}

/// Value, four-gradient (upper) and d'Alembertian of a mode sum at a point.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Jet {
    pub value: C64,
    pub grad: [C64; 4],
    pub wave: C64,
}

impl Jet {
    fn grad_lower(&self) -> [C64; 4] {
        let mut g = self.grad;
        g[0] = -g[0];
        g
    }
}

/// Mode sum with each amplitude weighted by `weight(mode, omega)`.
pub(crate) fn jet(f: &ModeField, x: &SpacetimePoint, weight: impl Fn(&ModeSpec, f64) -> f64) -> Jet {
    let mut out = Jet::default();
    for m in &f.modes {
        let w = m.omega(f.mass);
        let p = [m.eps.sign() * w, m.wavevec[0], m.wavevec[1], m.wavevec[2]];
        let phase = -p[0] * x.x0 + p[1] * x.x[0] + p[2] * x.x[1] + p[3] * x.x[2];
        let e = m.amplitude * weight(m, w) * C64::from_polar(1.0, phase);
        out.value += e;
        for mu in 0..4 {
            out.grad[mu] += C64::new(0.0, p[mu]) * e;
        }
        out.wave += e * (-minkowski(&p, &p));
    }
    out
}

pub fn eval_field(f: &ModeField, x: &SpacetimePoint) -> C64 {
    jet(f, x, |_, _| 1.0).value
}

/// `psi_dot = d psi / d x0` at a point.
pub fn eval_time_derivative(f: &ModeField, x: &SpacetimePoint) -> C64 {
    -jet(f, x, |_, _| 1.0).grad[0]
}

/// `i D^{-1/2} d/dx0` acts on a mode as multiplication by `eps`.
pub fn charge_conjugate(f: &ModeField) -> ModeField {
    f.map_amplitudes(|m| C64::new(m.eps.sign(), 0.0))
}

pub fn energy_project(f: &ModeField, eps: ChargeParity) -> ModeField {
    f.map_amplitudes(|m| {
        if m.eps == eps {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// `i d0 psi_eps - eps D^{1/2} psi_eps` at a point; zero for a sector-pure field.
pub fn foldy_residual(f: &ModeField, eps: ChargeParity, x: &SpacetimePoint) -> C64 {
    let proj = energy_project(f, eps);
    let j = jet(&proj, x, |_, _| 1.0);
    let d0 = -j.grad[0];
    let sqrt_d = jet(&proj, x, |_, w| w).value;
    C64::new(0.0, 1.0) * d0 - sqrt_d * eps.sign()
}

fn sesqui_current(left: &Jet, right: &Jet) -> FourVector {
    // left^* d^mu right - (d^mu left)^* right
    let mut out = [C64::new(0.0, 0.0); 4];
    for mu in 0..4 {
        out[mu] = left.value.conj() * right.grad[mu] - left.grad[mu].conj() * right.value;
    }
    FourVector(out)
}

fn sesqui_divergence(left: &Jet, right: &Jet) -> C64 {
    let gl = left.grad_lower();
    let mut cross_a = C64::new(0.0, 0.0);
    let mut cross_b = C64::new(0.0, 0.0);
    for mu in 0..4 {
        cross_a += gl[mu].conj() * right.grad[mu];
        cross_b += left.grad[mu].conj() * right.grad_lower()[mu];
    }
    cross_a + left.value.conj() * right.wave - left.wave.conj() * right.value - cross_b
}

fn tilde_weight(a: f64) -> impl Fn(&ModeSpec, f64) -> f64 {
    move |m, _| m.eps.sign() + a
}

/// `J_a^mu = -(i kappa / 2M) [psi^* <->d^mu psi~_a]` with `psi~_a = psi_c + a psi`.
pub fn eval_j(f: &ModeField, params: &InnerParams, x: &SpacetimePoint) -> Result<FourVector> {
    f.check_params(params)?;
    let psi = jet(f, x, |_, _| 1.0);
    let tilde = jet(f, x, tilde_weight(params.a));
    let pref = C64::new(0.0, -params.kappa / (2.0 * params.mass));
    Ok(sesqui_current(&psi, &tilde).scale(pref))
}

/// Analytic `d_mu J_a^mu` from differentiated mode sums.
pub fn div_j(f: &ModeField, params: &InnerParams, x: &SpacetimePoint) -> Result<C64> {
    f.check_params(params)?;
    let psi = jet(f, x, |_, _| 1.0);
    let tilde = jet(f, x, tilde_weight(params.a));
    let pref = C64::new(0.0, -params.kappa / (2.0 * params.mass));
    Ok(pref * sesqui_divergence(&psi, &tilde))
}

struct ScriptJets {
    u: Jet,
    v: Jet,
    p: Jet,
    q: Jet,
}

fn script_jets(f: &ModeField, x: &SpacetimePoint) -> ScriptJets {
    ScriptJets {
        // D^{1/4} psi, D^{1/4} psi_c, D^{-1/4} psi, D^{-1/4} psi_c
        u: jet(f, x, |_, w| w.sqrt()),
        v: jet(f, x, |m, w| m.eps.sign() * w.sqrt()),
        p: jet(f, x, |_, w| 1.0 / w.sqrt()),
        q: jet(f, x, |m, w| m.eps.sign() / w.sqrt()),
    }
}

/// Real probability current `J_a^mu` (script J) whose time component is `rho_a`.
pub fn eval_j_script(f: &ModeField, params: &InnerParams, x: &SpacetimePoint) -> Result<FourVector> {
    f.check_params(params)?;
    let s = script_jets(f, x);
    let a = params.a;
    let pref = params.kappa / (2.0 * params.mass);
    let mut out = [C64::new(0.0, 0.0); 4];
    for mu in 0..4 {
        let inner = s.u.value.conj() * s.q.grad[mu] - s.v.value * s.p.grad[mu].conj()
            + a * (s.u.value.conj() * s.p.grad[mu] - s.v.value * s.q.grad[mu].conj());
        out[mu] = C64::new(pref * inner.im, 0.0);
    }
    Ok(FourVector(out))
}

/// Analytic `d_mu` of the script current.
pub fn div_j_script(f: &ModeField, params: &InnerParams, x: &SpacetimePoint) -> Result<f64> {
    f.check_params(params)?;
    let s = script_jets(f, x);
    let a = params.a;
    let pref = params.kappa / (2.0 * params.mass);
    // d_mu (A^* d^mu B) = (d_mu A)^* d^mu B + A^* box B
    let conj_first = |l: &Jet, r: &Jet| -> C64 {
        let gl = l.grad_lower();
        (0..4).map(|mu| gl[mu].conj() * r.grad[mu]).sum::<C64>() + l.value.conj() * r.wave
    };
    // d_mu (A (d^mu B)^*) = d_mu A (d^mu B)^* + A (box B)^*
    let conj_second = |l: &Jet, r: &Jet| -> C64 {
        let gl = l.grad_lower();
        (0..4).map(|mu| gl[mu] * r.grad[mu].conj()).sum::<C64>() + l.value * r.wave.conj()
    };
    let inner = conj_first(&s.u, &s.q) - conj_second(&s.v, &s.p)
        + a * (conj_first(&s.u, &s.p) - conj_second(&s.v, &s.q));
    Ok(pref * inner.im)
}

/// Re and Im of `J_a^mu` assembled from the sector components `psi_+`, `psi_-`.
pub fn decompose_j(
    f: &ModeField,
    params: &InnerParams,
    x: &SpacetimePoint,
) -> Result<([f64; 4], [f64; 4])> {
    f.check_params(params)?;
    let a = params.a;
    let plus = jet(&energy_project(f, ChargeParity::Positive), x, |_, _| 1.0);
    let minus = jet(&energy_project(f, ChargeParity::Negative), x, |_, _| 1.0);
    let pp = sesqui_current(&plus, &plus);
    let mm = sesqui_current(&minus, &minus);
    let pm = sesqui_current(&plus, &minus);
    let scale = params.kappa / (2.0 * params.mass);
    let mut re = [0.0; 4];
    let mut im = [0.0; 4];
    for mu in 0..4 {
        let bracket = pp[mu] * (1.0 + a) - mm[mu] * (1.0 - a) + C64::new(0.0, 2.0 * a * pm[mu].im);
        re[mu] = (C64::new(0.0, -scale) * bracket).re;
        im[mu] = 2.0 * scale * pm[mu].re;
    }
    Ok((re, im))
}

fn check_on_shell(k: &FourVector, mass: f64) -> Result<[f64; 4]> {
    check_mass(mass)?;
    if k.0.iter().any(|c| c.im != 0.0) {
        return Err(KgError::OffShell {
            found: f64::NAN,
            expected: -mass * mass,
        });
    }
    let r = k.re();
    let kk = minkowski(&r, &r);
    if (kk + mass * mass).abs() > 1e-10 * (mass * mass).max(r[0] * r[0]) || r[0] <= 0.0 {
        return Err(KgError::OffShell {
            found: kk,
            expected: -mass * mass,
        });
    }
    Ok(r)
}

/// `K^mu = sqrt(w2/w1) k1^mu + sqrt(w1/w2) k2^mu` for positive-energy on-shell momenta.
pub fn k_vector(k1: &FourVector, k2: &FourVector, mass: f64) -> Result<FourVector> {
    let a = check_on_shell(k1, mass)?;
    let b = check_on_shell(k2, mass)?;
    let r12 = (b[0] / a[0]).sqrt();
    let mut out = [0.0; 4];
    for mu in 0..4 {
        out[mu] = r12 * a[mu] + b[mu] / r12;
    }
    Ok(FourVector::from_real(out))
}

/// `K_mu K^mu`, evaluated by direct contraction.
pub fn k_invariant(k1: &FourVector, k2: &FourVector, mass: f64) -> Result<f64> {
    let k = k_vector(k1, k2, mass)?;
    let r = k.re();
    Ok(minkowski(&r, &r))
}

/// Boosts every mode's four-momentum; the result is evaluated off-lattice.
pub fn boost(f: &ModeField, lambda: &LorentzBoost) -> ModeField {
    let modes = f
        .modes
        .iter()
        .map(|m| {
            let p = lambda.apply_real(m.four_momentum(f.mass));
            ModeSpec {
                wavevec: [p[1], p[2], p[3]],
                ..*m
            }
        })
        .collect();
    ModeField {
        mass: f.mass,
        box_length: f.box_length,
        boxed: false,
        modes,
    }
}

/// `(psi1, psi2)_a` for boxed fields over `[0, L)^dims`; only equal `(k, eps)` pairs contribute.
pub fn ip_a_box(f1: &ModeField, f2: &ModeField, params: &InnerParams, dims: usize) -> Result<C64> {
    f1.check_params(params)?;
    f1.check_compatible(f2)?;
    if !f1.boxed {
        return Err(KgError::IncompatibleField("box inner product needs boxed fields".into()));
    }
    let volume = f1.box_length.powi(dims as i32);
    let mut total = C64::new(0.0, 0.0);
    for m1 in &f1.modes {
        let n1 = f1.lattice_index(m1);
        for m2 in &f2.modes {
            if m1.eps == m2.eps && n1 == f2.lattice_index(m2) {
                let w = m1.omega(f1.mass);
                total += m1.amplitude.conj() * m2.amplitude * (1.0 + params.a * m1.eps.sign()) * w;
            }
        }
    }
    Ok(total * (params.kappa * volume / params.mass))
}

/// Flux of `J_a` through the box rest slice `x0 = t0`, computed in the boosted frame
/// from the boosted mode data: the slice is the image of `{t0} x [0, L)^dims` and has
/// unit normal `Lambda (1, 0, 0, 0)`. Exact for the trigonometric integrand because
/// the sum runs over a lattice finer than twice the largest mode index.
pub fn ip_a_flux(
    f: &ModeField,
    params: &InnerParams,
    lambda: &LorentzBoost,
    t0: f64,
    dims: usize,
) -> Result<f64> {
    f.check_params(params)?;
    let nmax = f
        .max_index()
        .ok_or_else(|| KgError::IncompatibleField("flux integral needs a boxed field".into()))?;
    if !(1..=3).contains(&dims) {
        return Err(KgError::InvalidLattice(format!("dims must be 1, 2 or 3, got {dims}")));
    }
    let n = ((2 * nmax + 1) as usize).next_power_of_two().max(2);
    let boosted = boost(f, lambda);
    let normal = lambda.apply_real([1.0, 0.0, 0.0, 0.0]);
    let h = f.box_length / n as f64;
    let counts: Vec<usize> = (0..3).map(|i| if i < dims { n } else { 1 }).collect();
    let mut total = C64::new(0.0, 0.0);
    for i in 0..counts[0] {
        for j in 0..counts[1] {
            for l in 0..counts[2] {
                let x = SpacetimePoint::new(t0, [i as f64 * h, j as f64 * h, l as f64 * h]);
                let xb = lambda.apply_point(&x);
                let jb = eval_j(&boosted, params, &xb)?;
                // -n_mu J^mu
                let mut flux = C64::new(0.0, 0.0);
                for mu in 0..4 {
                    flux -= jb[mu] * (METRIC[mu] * normal[mu]);
                }
                total += flux;
            }
        }
    }
    Ok((total * h.powi(dims as i32)).re)
}

#[derive(Serialize, Deserialize)]
struct ModeDoc {
    re: f64,
    im: f64,
    k: [f64; 3],
    eps: ChargeParity,
}

#[derive(Serialize, Deserialize)]
struct ModeFieldDoc {
    mass: f64,
    box_length: f64,
    boxed: bool,
    modes: Vec<ModeDoc>,
}

impl ModeField {
    /// JSON document; floats are written in shortest round-trip form, so parsing is exact.
    pub fn to_json(&self) -> String {
        let doc = ModeFieldDoc {
            mass: self.mass,
            box_length: self.box_length,
            boxed: self.boxed,
            modes: self
                .modes
                .iter()
                .map(|m| ModeDoc {
                    re: m.amplitude.re,
                    im: m.amplitude.im,
                    k: m.wavevec,
                    eps: m.eps,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("mode field serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModeFieldDoc =
            serde_json::from_str(text).map_err(|e| KgError::Document(e.to_string()))?;
        let modes = doc
            .modes
            .into_iter()
            .map(|m| ModeSpec::new(C64::new(m.re, m.im), m.k, m.eps))
            .collect();
        ModeField::new(doc.mass, doc.box_length, doc.boxed, modes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn single(c0: C64, k: [f64; 3], eps: ChargeParity, mass: f64) -> ModeField {
        ModeField::new(mass, 2.0 * PI, false, vec![ModeSpec::new(c0, k, eps)]).unwrap()
    }

    #[test]
    fn omega_examples() {
        assert_eq!(omega(&[0.0; 3], 1.0).unwrap(), 1.0);
        assert_eq!(omega(&[3.0, 0.0, 0.0], 4.0).unwrap(), 5.0);
        assert_eq!(omega(&[1.0, 1.0, 1.0], 1.0).unwrap(), 2.0);
        assert!(omega(&[1.0, 0.0, 0.0], 0.0).is_err());
        assert!(omega(&[1.0, 0.0, 0.0], -2.0).is_err());
    }

    #[test]
    fn field_values() {
        let f = single(c(1.0, 0.0), [0.0; 3], ChargeParity::Positive, 1.0);
        let v = eval_field(&f, &SpacetimePoint::new(PI, [0.0; 3]));
        assert!((v - c(-1.0, 0.0)).norm() < 1e-15);
        let empty = ModeField::empty(1.0, 1.0).unwrap();
        assert_eq!(eval_field(&empty, &SpacetimePoint::default()), c(0.0, 0.0));
    }

    #[test]
    fn merging_and_dropping() {
        let f = ModeField::from_indices(
            1.0,
            3.0,
            [
                (c(1.0, 0.0), [1, 0, 0], ChargeParity::Positive),
                (c(0.5, 1.0), [1, 0, 0], ChargeParity::Positive),
                (c(2.0, 0.0), [1, 0, 0], ChargeParity::Negative),
                (c(1.0, 0.0), [0, 2, 0], ChargeParity::Negative),
                (c(-1.0, 0.0), [0, 2, 0], ChargeParity::Negative),
            ],
        )
        .unwrap();
        assert_eq!(f.modes().len(), 2);
        assert_eq!(f.modes()[0].amplitude, c(1.5, 1.0));
        assert!(ModeField::new(1.0, 3.0, true, vec![ModeSpec::new(c(1.0, 0.0), [0.3, 0.0, 0.0], ChargeParity::Positive)]).is_err());
    }

    #[test]
    fn charge_conjugation_flips_negative_modes() {
        let f = single(c(2.0, 0.0), [0.5, 0.0, 0.0], ChargeParity::Negative, 1.0);
        let cf = charge_conjugate(&f);
        assert_eq!(cf.modes()[0].amplitude, c(-2.0, 0.0));
        assert_eq!(charge_conjugate(&cf), f);
        let p = single(c(1.0, 2.0), [0.5, 0.0, 0.0], ChargeParity::Positive, 1.0);
        assert_eq!(charge_conjugate(&p), p);
    }

    #[test]
    fn projection_examples() {
        let f = single(c(1.0, 0.0), [0.5, 0.0, 0.0], ChargeParity::Negative, 1.0);
        assert!(energy_project(&f, ChargeParity::Positive).is_empty());
        assert_eq!(energy_project(&f, ChargeParity::Negative), f);
    }

    #[test]
    fn single_mode_currents() {
        let x = SpacetimePoint::new(0.3, [0.1, -0.2, 0.7]);
        let f = single(c(1.0, 0.0), [0.0; 3], ChargeParity::Positive, 1.0);
        let j = eval_j(&f, &InnerParams::new(0.0, 1.0, 1.0).unwrap(), &x).unwrap();
        assert!((j[0] - c(1.0, 0.0)).norm() < 1e-15);
        for i in 1..4 {
            assert!(j[i].norm() < 1e-15);
        }
        let g = single(c(1.0, 0.0), [0.0; 3], ChargeParity::Negative, 1.0);
        let j = eval_j(&g, &InnerParams::new(0.5, 1.0, 1.0).unwrap(), &x).unwrap();
        assert!((j[0] - c(0.5, 0.0)).norm() < 1e-15);
        let js = eval_j_script(&f, &InnerParams::new(0.0, 1.0, 1.0).unwrap(), &x).unwrap();
        assert!((js[0].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn charge_parity_positivity() {
        let x = SpacetimePoint::new(1.1, [0.4, 0.0, -0.3]);
        for eps in ChargeParity::BOTH {
            for a in [-0.99, -0.4, 0.0, 0.6, 0.99] {
                let f = single(c(0.7, -0.2), [0.3, -1.2, 0.5], eps, 1.3);
                let p = InnerParams::new(a, 1.7, 1.3).unwrap();
                let w = f.modes()[0].omega(1.3);
                let expected = 1.7 * (1.0 + a * eps.sign()) * w * f.modes()[0].amplitude.norm_sqr() / 1.3;
                let j = eval_j(&f, &p, &x).unwrap();
                assert!((j[0].re - expected).abs() < 1e-13 * expected);
                assert!(j[0].re > 0.0);
                let js = eval_j_script(&f, &p, &x).unwrap();
                assert!((js[0].re - expected).abs() < 1e-13 * expected);
            }
        }
    }

    #[test]
    fn mass_mismatch_is_rejected() {
        let f = single(c(1.0, 0.0), [0.0; 3], ChargeParity::Positive, 1.0);
        let p = InnerParams::new(0.0, 1.0, 2.0).unwrap();
        assert!(eval_j(&f, &p, &SpacetimePoint::default()).is_err());
    }

    #[test]
    fn k_vector_examples() {
        let m = 1.0;
        let k = FourVector::from_real([omega_unchecked(&[0.3, 0.4, 0.0], m), 0.3, 0.4, 0.0]);
        let kk = k_vector(&k, &k, m).unwrap();
        for mu in 0..4 {
            assert!((kk[mu] - k[mu] * 2.0).norm() < 1e-15);
        }
        assert!((k_invariant(&k, &k, m).unwrap() + 4.0).abs() < 1e-13);
        let off = FourVector::from_real([1.0, 1.0, 0.0, 0.0]);
        assert!(k_vector(&off, &k, m).is_err());
    }

    #[test]
    fn boost_of_rest_mode() {
        let f = single(c(1.0, 0.0), [0.0; 3], ChargeParity::Positive, 1.0);
        let b = boost(&f, &LorentzBoost::new([0.6, 0.0, 0.0]).unwrap());
        let m = b.modes()[0];
        assert!((m.wavevec[0] + 0.75).abs() < 1e-15);
        assert!((m.omega(1.0) - 1.25).abs() < 1e-15);
        assert!(!b.is_boxed());
        let same = boost(&f, &LorentzBoost::identity());
        assert_eq!(same.modes(), f.modes());
    }

    #[test]
    fn box_inner_product_single_mode() {
        let f = ModeField::from_indices(2.0, 3.0, [(c(1.0, 1.0), [1, 0, 0], ChargeParity::Negative)]).unwrap();
        let p = InnerParams::new(0.25, 1.5, 2.0).unwrap();
        let w = f.modes()[0].omega(2.0);
        let expected = 1.5 * 0.75 * w * 2.0 * 3.0 / 2.0;
        let got = ip_a_box(&f, &f, &p, 1).unwrap();
        assert!((got.re - expected).abs() < 1e-13 * expected);
        assert_eq!(got.im, 0.0);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let f = ModeField::from_indices(
            1.0 / 3.0,
            2.0 * PI,
            [
                (c(0.1, -1.0 / 7.0), [1, -2, 0], ChargeParity::Positive),
                (c(PI, 1e-300), [0, 0, 3], ChargeParity::Negative),
            ],
        )
        .unwrap();
        let back = ModeField::from_json(&f.to_json()).unwrap();
        assert_eq!(back, f);
        assert!(ModeField::from_json("{\"mass\": 1}").is_err());
        assert!(ModeField::from_json(
            r#"{"mass":1,"box_length":1,"boxed":false,"modes":[{"re":1,"im":0,"k":[0,0,0],"eps":2}]}"#
        )
        .is_err());
    }
}
