//! The global gauge group `G_a` generated by `C + a`, and its classification as
//! `U(1)` (rational `a`) or `R+` (irrational `a`).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{KgError, Result};
use crate::mode_engine::{ModeField, C64};
use crate::spectral_grid::{charge_conjugate_grid, GridState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaugeElement {
    theta: f64,
    a: f64,
}

impl GaugeElement {
    pub fn new(theta: f64, a: f64) -> Result<Self> {
        if !(a.abs() < 1.0) {
            return Err(KgError::ParameterOutOfRange(a));
        }
        if !theta.is_finite() {
            return Err(KgError::NonPositiveArgument(theta));
        }
        Ok(Self { theta, a })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    /// `e^{-i (a + eps) theta}`.
    pub fn phase(&self, eps: f64) -> C64 {
        C64::from_polar(1.0, -(self.a + eps) * self.theta)
    }

    pub fn compose(&self, other: &GaugeElement) -> Result<GaugeElement> {
        if self.a != other.a {
            return Err(KgError::IncompatibleField(format!(
                "gauge elements of G_{} and G_{} do not compose",
                self.a, other.a
            )));
        }
        GaugeElement::new(self.theta + other.theta, self.a)
    }
}

pub type Matrix2 = [[C64; 2]; 2];

/// `diag(e^{-i(a+1)theta}, e^{-i(a-1)theta})`.
pub fn group_matrix(g: &GaugeElement) -> Matrix2 {
    let z = C64::new(0.0, 0.0);
    [[g.phase(1.0), z], [z, g.phase(-1.0)]]
}

pub fn matmul(x: &Matrix2, y: &Matrix2) -> Matrix2 {
    let mut out = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = x[i][0] * y[0][j] + x[i][1] * y[1][j];
        }
    }
    out
}

/// Max-norm distance to the identity.
pub fn distance_to_identity(x: &Matrix2) -> f64 {
    let mut d: f64 = 0.0;
    for (i, row) in x.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let id = if i == j { 1.0 } else { 0.0 };
            d = d.max((v - id).norm());
        }
    }
    d
}

pub trait GaugeAction: Sized {
    fn gauge_apply(&self, g: &GaugeElement) -> Self;
}

impl GaugeAction for ModeField {
    fn gauge_apply(&self, g: &GaugeElement) -> Self {
        self.map_amplitudes(|m| g.phase(m.eps.sign()))
    }
}

impl GaugeAction for GridState {
    /// `e^{-i a theta} [cos theta - i sin theta C] psi`.
    fn gauge_apply(&self, g: &GaugeElement) -> Self {
        let c = charge_conjugate_grid(self);
        let common = C64::from_polar(1.0, -g.a * g.theta);
        let s = self.scaled(common * g.theta.cos());
        s.add_scaled(&c, common * C64::new(0.0, -g.theta.sin())).expect("same lattice")
    }
}

pub fn gauge_apply<T: GaugeAction>(f: &T, g: &GaugeElement) -> T {
    f.gauge_apply(g)
}

/// `G_a` element followed by the electric-charge phase `e^{-i phi}`, i.e. an element
/// of the embedding group `U(1) x U(1)`.
pub fn gauge_and_charge_apply<T: GaugeAction + ChargePhase>(f: &T, g: &GaugeElement, phi: f64) -> T {
    f.gauge_apply(g).charge_phase(phi)
}

pub trait ChargePhase {
    fn charge_phase(&self, phi: f64) -> Self;
}

impl ChargePhase for ModeField {
    fn charge_phase(&self, phi: f64) -> Self {
        self.map_amplitudes(|_| C64::from_polar(1.0, -phi))
    }
}

impl ChargePhase for GridState {
    fn charge_phase(&self, phi: f64) -> Self {
        self.scaled(C64::from_polar(1.0, -phi))
    }
}

/// Relative first-order defect `|(g(dtheta) s - s)/dtheta + i (C + a) s| / |s|` in
/// the max norm over `psi` and `psi_dot`.
pub fn generator_check(s: &GridState, a: f64, dtheta: f64) -> Result<f64> {
    if !(dtheta > 0.0) {
        return Err(KgError::NonPositiveArgument(dtheta));
    }
    let g = GaugeElement::new(dtheta, a)?;
    let moved = s.gauge_apply(&g);
    let gen = charge_conjugate_grid(s).add_scaled(s, C64::new(a, 0.0))?;
    let diff = moved
        .add_scaled(s, C64::new(-1.0, 0.0))?
        .scaled(C64::new(1.0 / dtheta, 0.0))
        .add_scaled(&gen, C64::new(0.0, 1.0))?;
    let norm = s.max_abs();
    Ok(if norm == 0.0 { 0.0 } else { diff.max_abs() / norm })
}

fn gcd(mut x: u64, mut y: u64) -> u64 {
    while y != 0 {
        (x, y) = (y, x % y);
    }
    x
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalParam {
    m: i64,
    n: u64,
}

impl RationalParam {
    pub fn new(m: i64, n: u64) -> Result<Self> {
        let bad = |reason: &str| KgError::InvalidRational { m, n, reason: reason.into() };
        if n == 0 {
            return Err(bad("denominator must be positive"));
        }
        if gcd(m.unsigned_abs(), n) != 1 {
            return Err(bad("numerator and denominator are not coprime"));
        }
        if m.unsigned_abs() >= n {
            return Err(bad("|m| < n is required for |a| < 1"));
        }
        Ok(Self { m, n })
    }

    pub fn numerator(&self) -> i64 {
        self.m
    }

    pub fn denominator(&self) -> u64 {
        self.n
    }

    pub fn value(&self) -> f64 {
        self.m as f64 / self.n as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GroupParam {
    Rational(RationalParam),
    /// A value declared irrational by the caller; only its approximation is stored.
    Irrational(f64),
}

impl GroupParam {
    pub fn irrational(approx: f64) -> Result<Self> {
        if !(approx.abs() < 1.0) {
            return Err(KgError::ParameterOutOfRange(approx));
        }
        Ok(GroupParam::Irrational(approx))
    }

    pub fn value(&self) -> f64 {
        match self {
            GroupParam::Rational(r) => r.value(),
            GroupParam::Irrational(x) => *x,
        }
    }

    pub fn to_value(&self) -> Value {
        match self {
            GroupParam::Rational(r) => json!({"type": "rational", "m": r.m, "n": r.n}),
            GroupParam::Irrational(x) => json!({"type": "irrational", "approx": x}),
        }
    }

    /// Parses `{"type": "rational", "m", "n"}` or `{"type": "irrational", "approx"}`.
    /// A bare number is rejected: rationality has to be declared.
    pub fn from_value(v: &Value) -> Result<Self> {
        let obj = match v {
            Value::Object(o) => o,
            Value::Number(_) => return Err(KgError::UndeclaredRationality),
            _ => return Err(KgError::Document("gauge parameter must be an object".into())),
        };
        let int = |k: &str| {
            obj.get(k)
                .and_then(Value::as_i64)
                .ok_or_else(|| KgError::Document(format!("rational parameter needs an integer `{k}`")))
        };
        match obj.get("type").and_then(Value::as_str) {
            Some("rational") => {
                let n = int("n")?;
                if n <= 0 {
                    return Err(KgError::InvalidRational {
                        m: int("m")?,
                        n: 0,
                        reason: format!("denominator must be positive, got {n}"),
                    });
                }
                Ok(GroupParam::Rational(RationalParam::new(int("m")?, n as u64)?))
            }
            Some("irrational") => {
                let x = obj
                    .get("approx")
                    .and_then(Value::as_f64)
                    .ok_or_else(|| KgError::Document("irrational parameter needs `approx`".into()))?;
                GroupParam::irrational(x)
            }
            Some(other) => Err(KgError::Document(format!("unknown parameter type `{other}`"))),
            None => Err(KgError::UndeclaredRationality),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GroupKind {
    #[serde(rename = "U1")]
    U1,
    #[serde(rename = "R+")]
    RPlus,
}

/// Closest approach of `g_a(pi j)`, `1 <= j <= pi^{-1} theta_max`, to the identity.
///
/// `g_a(theta) = 1` forces `2 theta` into `2 pi Z`, so these are the only candidates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanEvidence {
    pub theta_max: f64,
    pub candidates: u64,
    pub min_distance: f64,
    pub argmin_theta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub param: GroupParam,
    pub group: GroupKind,
    /// `2 pi n` for `a = m/n`.
    pub period: Option<f64>,
    /// Smallest `theta > 0` with `g_a(theta) = 1`: `pi n` when `m` and `n` are both odd.
    pub minimal_period: Option<f64>,
    pub scan: Option<ScanEvidence>,
}

impl Classification {
    /// The isomorphism onto `U(1)` or `R+`, evaluated at `theta`. For `U(1)` it
    /// divides by the minimal period so that it is injective on `G_a`.
    pub fn witness(&self, theta: f64) -> C64 {
        match (self.group, self.minimal_period) {
            (GroupKind::U1, Some(p)) => C64::from_polar(1.0, -2.0 * PI * theta / p),
            _ => C64::new(theta.exp(), 0.0),
        }
    }

    pub fn to_value(&self) -> Value {
        let mut v = json!({
            "a": self.param.to_value(),
            "group": self.group,
            "period": self.period,
            "minimal_period": self.minimal_period,
        });
        if let Some(s) = &self.scan {
            v["scan"] = serde_json::to_value(s).expect("plain data");
        }
        v
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_value()).expect("plain data")
    }
}

/// Default scan range for irrational parameters.
pub const SCAN_THETA_MAX: f64 = 1e6;
/// Distance to the identity below which a scan hit counts as a period.
pub const IDENTITY_TOLERANCE: f64 = 1e-9;

pub fn scan_for_period(a: f64, theta_max: f64) -> ScanEvidence {
    let candidates = (theta_max / PI).floor() as u64;
    let mut best = (f64::INFINITY, 0.0);
    for j in 1..=candidates {
        // exact reduction of (a + 1) pi j mod 2 pi: j mod 2 carries the pi j part
        let frac = (a * j as f64 / 2.0).rem_euclid(1.0);
        let theta = PI * j as f64;
        let phase = 2.0 * PI * frac + if j % 2 == 1 { PI } else { 0.0 };
        let d = (C64::from_polar(1.0, -phase) - 1.0).norm();
        if d < best.0 {
            best = (d, theta);
        }
    }
    ScanEvidence {
        theta_max,
        candidates,
        min_distance: best.0,
        argmin_theta: best.1,
    }
}

pub fn classify_group(param: &GroupParam) -> Result<Classification> {
    match param {
        GroupParam::Rational(r) => {
            let n = r.n as f64;
            let both_odd = r.m.rem_euclid(2) == 1 && r.n % 2 == 1;
            let period = 2.0 * PI * n;
            let minimal = if both_odd { PI * n } else { period };
            for theta in [period, minimal] {
                let g = GaugeElement::new(theta, r.value())?;
                let d = distance_to_identity(&group_matrix(&g));
                if d > 1e-9 * n {
                    return Err(KgError::InvalidRational {
                        m: r.m,
                        n: r.n,
                        reason: format!("g_a({theta}) is {d} away from the identity"),
                    });
                }
            }
            Ok(Classification {
                param: *param,
                group: GroupKind::U1,
                period: Some(period),
                minimal_period: Some(minimal),
                scan: None,
            })
        }
        GroupParam::Irrational(x) => Ok(Classification {
            param: *param,
            group: GroupKind::RPlus,
            period: None,
            minimal_period: None,
            scan: Some(scan_for_period(*x, SCAN_THETA_MAX)),
        }),
    }
}
