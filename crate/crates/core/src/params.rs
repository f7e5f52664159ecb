use serde::{Deserialize, Serialize};

use crate::error::{KgError, Result};

/// Parameters of the inner-product family `(.,.)_a` and of the currents built on it.
///
/// `kg_norm` is the constant `g` multiplying the Klein-Gordon form. It defaults to
/// `1/(2M)`, the value for which `(.,.)_a = kappa [(.,.) + a (.,.)_KG]` holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InnerParams {
    pub a: f64,
    pub kappa: f64,
    pub mass: f64,
    pub kg_norm: f64,
}

impl InnerParams {
    pub fn new(a: f64, kappa: f64, mass: f64) -> Result<Self> {
        Self::with_norm(a, kappa, mass, 0.5 / mass)
    }

    pub fn with_norm(a: f64, kappa: f64, mass: f64, kg_norm: f64) -> Result<Self> {
        let p = Self {
            a,
            kappa,
            mass,
            kg_norm,
        };
        p.validate()?;
        Ok(p)
    }

    /// `a = 0`, `kappa = 1`.
    pub fn standard(mass: f64) -> Result<Self> {
        Self::new(0.0, 1.0, mass)
    }

    /// The normalization `kappa = 1/(1+a)` used for the nonrelativistic limit.
    pub fn nonrelativistic(a: f64, mass: f64) -> Result<Self> {
        Self::new(a, 1.0 / (1.0 + a), mass)
    }

    pub fn validate(&self) -> Result<()> {
        check_mass(self.mass)?;
        if !(self.a.abs() < 1.0) {
            return Err(KgError::ParameterOutOfRange(self.a));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(KgError::NonPositiveKappa(self.kappa));
        }
        if !(self.kg_norm > 0.0 && self.kg_norm.is_finite()) {
            return Err(KgError::NonPositiveNorm(self.kg_norm));
        }
        Ok(())
    }

    pub fn with_a(&self, a: f64) -> Result<Self> {
        Self::with_norm(a, self.kappa, self.mass, self.kg_norm)
    }

    /// `alpha_+` and `alpha_-` of the transport map between `H_0` and `H_a`.
    pub fn alphas(&self) -> (f64, f64) {
        let p = (1.0 + self.a).sqrt();
        let m = (1.0 - self.a).sqrt();
        (0.5 * (p + m), 0.5 * (p - m))
    }
}

pub(crate) fn check_mass(mass: f64) -> Result<()> {
    if mass > 0.0 && mass.is_finite() {
        Ok(())
    } else {
        Err(KgError::NonPositiveMass(mass))
    }
}
