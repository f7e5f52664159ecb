use std::ops::{Add, Index, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{KgError, Result};

pub type C64 = Complex64;

/// Diagonal of the Minkowski metric, signature (-1, 1, 1, 1).
pub const METRIC: [f64; 4] = [-1.0, 1.0, 1.0, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SpacetimePoint {
    pub x0: f64,
    pub x: [f64; 3],
}

impl SpacetimePoint {
    pub fn new(x0: f64, x: [f64; 3]) -> Self {
        Self { x0, x }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.x0, self.x[0], self.x[1], self.x[2]]
    }

    pub fn from_array(v: [f64; 4]) -> Self {
        Self {
            x0: v[0],
            x: [v[1], v[2], v[3]],
        }
    }
}

/// Complex four-vector stored with upper indices.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FourVector(pub [C64; 4]);

impl FourVector {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_real(v: [f64; 4]) -> Self {
        Self(v.map(|c| C64::new(c, 0.0)))
    }

    pub fn lowered(&self) -> [C64; 4] {
        let mut out = self.0;
        out[0] = -out[0];
        out
    }

    /// Bilinear (not sesquilinear) contraction `a_mu b^mu`.
    pub fn dot(&self, other: &FourVector) -> C64 {
        (0..4).map(|mu| self.0[mu] * other.0[mu] * METRIC[mu]).sum()
    }

    pub fn re(&self) -> [f64; 4] {
        self.0.map(|c| c.re)
    }

    pub fn im(&self) -> [f64; 4] {
        self.0.map(|c| c.im)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, s: C64) -> Self {
        Self(self.0.map(|c| c * s))
    }

    pub fn conj(&self) -> Self {
        Self(self.0.map(|c| c.conj()))
    }
}

impl Index<usize> for FourVector {
    type Output = C64;
    fn index(&self, mu: usize) -> &C64 {
        &self.0[mu]
    }
}

impl Add for FourVector {
    type Output = FourVector;
    fn add(self, rhs: FourVector) -> FourVector {
        let mut out = self.0;
        for (o, r) in out.iter_mut().zip(rhs.0) {
            *o += r;
        }
        FourVector(out)
    }
}

impl Sub for FourVector {
    type Output = FourVector;
    fn sub(self, rhs: FourVector) -> FourVector {
        let mut out = self.0;
        for (o, r) in out.iter_mut().zip(rhs.0) {
            *o -= r;
        }
        FourVector(out)
    }
}

impl Mul<f64> for FourVector {
    type Output = FourVector;
    fn mul(self, rhs: f64) -> FourVector {
        FourVector(self.0.map(|c| c * rhs))
    }
}

pub(crate) fn minkowski(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    -a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

/// Pure boost to the frame moving with velocity `beta` (units of c).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzBoost {
    beta: [f64; 3],
}

impl LorentzBoost {
    pub fn new(beta: [f64; 3]) -> Result<Self> {
        let b2: f64 = beta.iter().map(|b| b * b).sum();
        if !(b2 < 1.0) || beta.iter().any(|b| !b.is_finite()) {
            return Err(KgError::Superluminal(b2.sqrt()));
        }
        Ok(Self { beta })
    }

    pub fn identity() -> Self {
        Self { beta: [0.0; 3] }
    }

    pub fn beta(&self) -> [f64; 3] {
        self.beta
    }

    pub fn speed(&self) -> f64 {
        self.beta.iter().map(|b| b * b).sum::<f64>().sqrt()
    }

    pub fn gamma(&self) -> f64 {
        let b2: f64 = self.beta.iter().map(|b| b * b).sum();
        1.0 / (1.0 - b2).sqrt()
    }

    pub fn inverse(&self) -> Self {
        Self {
            beta: self.beta.map(|b| -b),
        }
    }

    /// `Lambda^mu_nu`.
    pub fn matrix(&self) -> [[f64; 4]; 4] {
        let g = self.gamma();
        let b = self.beta;
        let b2: f64 = b.iter().map(|x| x * x).sum();
        let mut m = [[0.0; 4]; 4];
        m[0][0] = g;
        for i in 0..3 {
            m[0][i + 1] = -g * b[i];
            m[i + 1][0] = -g * b[i];
            for j in 0..3 {
                let delta = if i == j { 1.0 } else { 0.0 };
                let along = if b2 > 0.0 {
                    (g - 1.0) * b[i] * b[j] / b2
                } else {
                    0.0
                };
                m[i + 1][j + 1] = delta + along;
            }
        }
        m
    }

    pub fn apply_real(&self, v: [f64; 4]) -> [f64; 4] {
        let m = self.matrix();
        let mut out = [0.0; 4];
        for mu in 0..4 {
            out[mu] = (0..4).map(|nu| m[mu][nu] * v[nu]).sum();
        }
        out
    }

    pub fn apply(&self, v: &FourVector) -> FourVector {
        let m = self.matrix();
        let mut out = [C64::new(0.0, 0.0); 4];
        for mu in 0..4 {
            out[mu] = (0..4).map(|nu| v.0[nu] * m[mu][nu]).sum();
        }
        FourVector(out)
    }

    pub fn apply_point(&self, x: &SpacetimePoint) -> SpacetimePoint {
        SpacetimePoint::from_array(self.apply_real(x.to_array()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boost_preserves_interval_and_inverts() {
        let b = LorentzBoost::new([0.3, -0.4, 0.5]).unwrap();
        let v = [1.7, 0.2, -0.9, 2.5];
        let w = b.apply_real(v);
        assert!((minkowski(&v, &v) - minkowski(&w, &w)).abs() < 1e-12);
        let back = b.inverse().apply_real(w);
        for mu in 0..4 {
            assert!((back[mu] - v[mu]).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_superluminal() {
        assert!(LorentzBoost::new([0.8, 0.6, 0.0]).is_err());
        assert!(LorentzBoost::new([f64::NAN, 0.0, 0.0]).is_err());
    }

    #[test]
    fn rest_vector_boost() {
        let b = LorentzBoost::new([0.6, 0.0, 0.0]).unwrap();
        let w = b.apply_real([1.0, 0.0, 0.0, 0.0]);
        assert!((w[0] - 1.25).abs() < 1e-15);
        assert!((w[1] + 0.75).abs() < 1e-15);
    }
}
