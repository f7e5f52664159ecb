//! Minimal coupling to a stationary magnetic background: the dense operator `D_q`,
//! its functional calculus, the induced inner products and evolution, and the gauge
//! factor `u` for a scalar potential.

use std::fmt;
use std::sync::{Arc, OnceLock};

use faer::{Mat, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::error::{KgError, Result};
use crate::localization::gauss_legendre_rule;
use crate::mode_engine::C64;
use crate::params::InnerParams;
use crate::spectral_grid::{gradient_matrix, GridState, Lattice};

/// Largest lattice (total points) handled by dense work.
pub const DENSE_CAP: usize = 4096;

pub type PotentialFn = Arc<dyn Fn(f64, &[f64; 3]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum ScalarPotential {
    Zero,
    Constant(f64),
    /// `phi(x0, x)`, only used by [`gauge_factor`].
    Function(PotentialFn),
}

impl fmt::Debug for ScalarPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarPotential::Zero => write!(f, "Zero"),
            ScalarPotential::Constant(c) => write!(f, "Constant({c})"),
            ScalarPotential::Function(_) => write!(f, "Function(..)"),
        }
    }
}

impl ScalarPotential {
    fn is_zero(&self) -> bool {
        matches!(self, ScalarPotential::Zero) || matches!(self, ScalarPotential::Constant(c) if *c == 0.0)
    }

    fn value(&self, x0: f64, x: &[f64; 3]) -> f64 {
        match self {
            ScalarPotential::Zero => 0.0,
            ScalarPotential::Constant(c) => *c,
            ScalarPotential::Function(f) => f(x0, x),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EMConfig {
    pub q: f64,
    /// One array of lattice-site values per spatial axis in use.
    pub vector_potential: Vec<Vec<f64>>,
    pub scalar_potential: ScalarPotential,
}

impl EMConfig {
    pub fn free(lattice: &Lattice) -> Self {
        EMConfig {
            q: 0.0,
            vector_potential: vec![vec![0.0; lattice.len()]; lattice.dims()],
            scalar_potential: ScalarPotential::Zero,
        }
    }

    pub fn magnetic(q: f64, vector_potential: Vec<Vec<f64>>) -> Self {
        EMConfig {
            q,
            vector_potential,
            scalar_potential: ScalarPotential::Zero,
        }
    }

    /// Fills `A_j(x)` from a function of the site position.
    pub fn from_fn(lattice: &Lattice, q: f64, a: impl Fn(&[f64; 3]) -> [f64; 3]) -> Self {
        let mut vp = vec![vec![0.0; lattice.len()]; lattice.dims()];
        for i in 0..lattice.len() {
            let v = a(&lattice.position(i));
            for (axis, comp) in vp.iter_mut().enumerate() {
                comp[i] = v[axis];
            }
        }
        EMConfig::magnetic(q, vp)
    }

    pub fn validate(&self, lattice: &Lattice) -> Result<()> {
        if !self.q.is_finite() {
            return Err(KgError::Document(format!("coupling q must be finite, got {}", self.q)));
        }
        if self.vector_potential.len() != lattice.dims() {
            return Err(KgError::LengthMismatch {
                expected: lattice.dims(),
                found: self.vector_potential.len(),
            });
        }
        for comp in &self.vector_potential {
            lattice.check_len(comp.len())?;
            if comp.iter().any(|v| !v.is_finite()) {
                return Err(KgError::Document("vector potential has non-finite entries".into()));
            }
        }
        Ok(())
    }

    /// `{"q": q, "A": [[...], ...], "phi": "zero" | {"constant": c}}`.
    pub fn to_json(&self) -> Result<String> {
        let phi = match &self.scalar_potential {
            ScalarPotential::Zero => json!("zero"),
            ScalarPotential::Constant(c) => json!({ "constant": c }),
            ScalarPotential::Function(_) => {
                return Err(KgError::Document("a functional scalar potential has no document form".into()))
            }
        };
        Ok(serde_json::to_string_pretty(&json!({"q": self.q, "A": self.vector_potential, "phi": phi}))?)
    }

    pub fn from_json(text: &str, lattice: &Lattice) -> Result<Self> {
        let v: Value = serde_json::from_str(text).map_err(|e| KgError::Document(e.to_string()))?;
        let q = v
            .get("q")
            .and_then(Value::as_f64)
            .ok_or_else(|| KgError::Document("EM document needs a numeric `q`".into()))?;
        let a: Vec<Vec<f64>> = match v.get("A") {
            Some(a) => serde_json::from_value(a.clone()).map_err(|e| KgError::Document(format!("`A`: {e}")))?,
            None => return Err(KgError::Document("EM document needs `A`".into())),
        };
        let phi = match v.get("phi") {
            None => ScalarPotential::Zero,
            Some(Value::String(s)) if s == "zero" => ScalarPotential::Zero,
            Some(p) => match p.get("constant").and_then(Value::as_f64) {
                Some(c) => ScalarPotential::Constant(c),
                None => return Err(KgError::Document(format!("unsupported `phi`: {p}"))),
            },
        };
        let em = EMConfig {
            q,
            vector_potential: a,
            scalar_potential: phi,
        };
        em.validate(lattice)?;
        Ok(em)
    }
}

struct Eigen {
    values: Vec<f64>,
    vectors: Mat<C64>,
}

/// Dense Hermitian operator on lattice arrays with a lazily computed, cached
/// eigendecomposition.
pub struct DenseOperator {
    lattice: Lattice,
    mass: f64,
    matrix: Mat<C64>,
    eigen: OnceLock<std::result::Result<Eigen, String>>,
}

impl fmt::Debug for DenseOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DenseOperator")
            .field("lattice", &self.lattice)
            .field("mass", &self.mass)
            .field("size", &self.matrix.nrows())
            .finish()
    }
}

impl DenseOperator {
    /// Checks hermiticity to `1e-12` of the largest entry, then symmetrizes.
    pub fn new(lattice: Lattice, mass: f64, matrix: Mat<C64>) -> Result<Self> {
        let n = lattice.len();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(KgError::LengthMismatch {
                expected: n,
                found: matrix.nrows(),
            });
        }
        let mut peak: f64 = 0.0;
        let mut skew: f64 = 0.0;
        for j in 0..n {
            for i in 0..n {
                peak = peak.max(matrix[(i, j)].norm());
                skew = skew.max((matrix[(i, j)] - matrix[(j, i)].conj()).norm());
            }
        }
        if skew > 1e-12 * peak.max(1.0) {
            return Err(KgError::NotHermitian(skew / peak.max(1.0)));
        }
        let matrix = Mat::from_fn(n, n, |i, j| (matrix[(i, j)] + matrix[(j, i)].conj()) * 0.5);
        Ok(DenseOperator {
            lattice,
            mass,
            matrix,
            eigen: OnceLock::new(),
        })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.matrix[(i, j)]
    }

    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        self.lattice.check_len(v.len())?;
        let n = self.size();
        Ok((0..n)
            .map(|i| (0..n).map(|j| self.matrix[(i, j)] * v[j]).sum())
            .collect())
    }

    fn eigen(&self) -> Result<&Eigen> {
        let e = self.eigen.get_or_init(|| {
            let evd = self.matrix.self_adjoint_eigen(Side::Lower).map_err(|e| format!("{e:?}"))?;
            let s = evd.S().column_vector();
            let values = (0..self.size()).map(|i| s[i].re).collect();
            Ok(Eigen {
                values,
                vectors: evd.U().to_owned(),
            })
        });
        e.as_ref().map_err(|m| KgError::Eigen(m.clone()))
    }

    /// Eigenvalues in nondecreasing order.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(self.eigen()?.values.clone())
    }

    /// `g(lambda)` applied through the eigendecomposition.
    pub fn apply_function(&self, v: &[C64], g: impl Fn(f64) -> C64) -> Result<Vec<C64>> {
        self.lattice.check_len(v.len())?;
        let e = self.eigen()?;
        if let Some(&l) = e.values.iter().find(|&&l| !(l > 0.0)) {
            return Err(KgError::NonPositiveEigenvalue(l));
        }
        let n = self.size();
        let u = &e.vectors;
        let coeff: Vec<C64> = (0..n)
            .map(|k| {
                let c: C64 = (0..n).map(|i| u[(i, k)].conj() * v[i]).sum();
                c * g(e.values[k])
            })
            .collect();
        Ok((0..n).map(|i| (0..n).map(|k| u[(i, k)] * coeff[k]).sum()).collect())
    }
}

/// `-(grad - i q A)^2 + M^2` with spectral derivatives. With `Pi_j = P_j - q A_j`
/// and `P_j = -i d_j` this is `sum_j (P_j^2 - q (P_j A_j + A_j P_j) + q^2 A_j^2) + M^2`.
pub fn build_dq(lattice: &Lattice, mass: f64, em: &EMConfig) -> Result<DenseOperator> {
    crate::params::check_mass(mass)?;
    let n = lattice.len();
    if n > DENSE_CAP {
        return Err(KgError::SizeCap { size: n, cap: DENSE_CAP });
    }
    if !em.scalar_potential.is_zero() {
        return Err(KgError::NonzeroScalarPotential);
    }
    em.validate(lattice)?;
    let mut m = Mat::<C64>::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = C64::new(mass * mass, 0.0);
    }
    let q = em.q;
    for axis in 0..lattice.dims() {
        let d = gradient_matrix(lattice, axis, 1);
        let d2 = gradient_matrix(lattice, axis, 2);
        let a = &em.vector_potential[axis];
        for j in 0..n {
            for i in 0..n {
                // P = -i d, P^2 = -d^2
                let p = C64::new(0.0, -1.0) * d[(i, j)];
                let mut v = -d2[(i, j)] - p * (q * (a[i] + a[j]));
                if i == j {
                    v += q * q * a[i] * a[i];
                }
                m[(i, j)] += v;
            }
        }
    }
    DenseOperator::new(*lattice, mass, m)
}

pub fn dq_power_apply(op: &DenseOperator, alpha: f64, v: &[C64]) -> Result<Vec<C64>> {
    if alpha == 0.0 {
        op.lattice.check_len(v.len())?;
        return Ok(v.to_vec());
    }
    op.apply_function(v, |l| C64::new(l.powf(alpha), 0.0))
}

fn check_state(s: &GridState, op: &DenseOperator) -> Result<()> {
    if s.lattice() != op.lattice() {
        return Err(KgError::StateMismatch("state and operator live on different lattices".into()));
    }
    if !crate::mode_engine::same_value(s.mass(), op.mass()) {
        return Err(KgError::StateMismatch(format!(
            "state mass {} differs from operator mass {}",
            s.mass(),
            op.mass()
        )));
    }
    Ok(())
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// `(psi1, psi2)_a` with `D` replaced by `D_q`.
pub fn ip_a_magnetic(s1: &GridState, s2: &GridState, params: &InnerParams, op: &DenseOperator) -> Result<C64> {
    params.validate()?;
    s1.check_compatible(s2)?;
    check_state(s1, op)?;
    if !crate::mode_engine::same_value(params.mass, op.mass()) {
        return Err(KgError::StateMismatch("parameter mass differs from operator mass".into()));
    }
    let h = dq_power_apply(op, 0.5, s2.psi())?;
    let w = dq_power_apply(op, -0.5, s2.psidot())?;
    let plain = dot(s1.psi(), &h) + dot(s1.psidot(), &w);
    let kg = dot(s1.psi(), s2.psidot()) - dot(s1.psidot(), s2.psi());
    let pre = params.kappa / (2.0 * params.mass) * s1.lattice().cell_volume();
    Ok((plain + C64::new(0.0, params.a) * kg) * pre)
}

/// Exact evolution of `psi_ddot + D_q psi = 0` in the eigenbasis of `D_q`.
pub fn evolve_magnetic(s: &GridState, delta: f64, op: &DenseOperator) -> Result<GridState> {
    check_state(s, op)?;
    let c = |l: f64| C64::new((l.sqrt() * delta).cos(), 0.0);
    let psi: Vec<C64> = {
        let a = op.apply_function(s.psi(), c)?;
        let b = op.apply_function(s.psidot(), |l| C64::new((l.sqrt() * delta).sin() / l.sqrt(), 0.0))?;
        a.iter().zip(&b).map(|(x, y)| x + y).collect()
    };
    let psidot: Vec<C64> = {
        let a = op.apply_function(s.psi(), |l| C64::new(-l.sqrt() * (l.sqrt() * delta).sin(), 0.0))?;
        let b = op.apply_function(s.psidot(), c)?;
        a.iter().zip(&b).map(|(x, y)| x + y).collect()
    };
    GridState::new(*s.lattice(), s.mass(), s.x0() + delta, psi, psidot)
}

/// Absolute tolerance of the time quadrature in [`gauge_factor`].
pub const GAUGE_QUADRATURE_TOL: f64 = 1e-10;

fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, depth: usize) -> Result<f64> {
    let rule = gauss_legendre_rule();
    let panel = |lo: f64, hi: f64| -> f64 {
        let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        rule.iter().map(|(t, w)| w * half * f(mid + half * t)).sum()
    };
    let whole = panel(a, b);
    let m = 0.5 * (a + b);
    let split = panel(a, m) + panel(m, b);
    if (whole - split).abs() <= GAUGE_QUADRATURE_TOL * split.abs().max(1.0) {
        return Ok(split);
    }
    if depth == 0 {
        return Err(KgError::Quadrature(format!(
            "scalar potential integral on [{a}, {b}] did not converge"
        )));
    }
    Ok(integrate(f, a, m, depth - 1)? + integrate(f, m, b, depth - 1)?)
}

/// `u(x0, x) = exp(i q int_{x0_0}^{x0} phi(tau, x) dtau)` on the lattice sites.
pub fn gauge_factor(em: &EMConfig, lattice: &Lattice, x0_0: f64, x0: f64) -> Result<Vec<C64>> {
    (0..lattice.len())
        .map(|i| {
            let x = lattice.position(i);
            let integral = match &em.scalar_potential {
                ScalarPotential::Zero => 0.0,
                ScalarPotential::Constant(c) => c * (x0 - x0_0),
                phi => integrate(&|t| phi.value(t, &x), x0_0, x0, 30)?,
            };
            Ok(C64::from_polar(1.0, em.q * integral))
        })
        .collect()
}

/// Reproducible smooth vector potential on the lattice: per axis a constant plus three
/// low Fourier terms with uniform coefficients in `[-0.5, 0.5)`.
pub fn random_smooth_potential(lattice: &Lattice, q: f64, seed: u64) -> EMConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = lattice.box_length();
    let coef: Vec<[f64; 4]> = (0..3).map(|_| std::array::from_fn(|_| rng.random_range(-0.5..0.5))).collect();
    let t = 2.0 * std::f64::consts::PI / l;
    EMConfig::from_fn(lattice, q, |x| {
        std::array::from_fn(|axis| {
            let c = coef[axis];
            c[0] + c[1] * (t * x[0]).sin() + c[2] * (t * x[1]).cos() + c[3] * (2.0 * t * (x[0] + x[1])).sin()
        })
    })
}
