//! Python bindings: lattices, mode fields, grid states and the main verification quantities.

use kgfield::currents::{self, CurrentKind};
use kgfield::em_background;
use kgfield::gauge_symmetry::{self, GaugeAction, GaugeElement, GroupParam, RationalParam};
use kgfield::hilbert_space as hs;
use kgfield::localization;
use kgfield::mode_engine::{self as me, ChargeParity, LorentzBoost, ModeField, SpacetimePoint, C64};
use kgfield::random;
use kgfield::spectral_grid::{self as sg, GridState, Lattice};
use kgfield::{InnerParams, KgError};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: KgError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parity(eps: i64) -> PyResult<ChargeParity> {
    ChargeParity::from_sign(eps).map_err(err)
}

fn kind(name: &str) -> PyResult<CurrentKind> {
    match name {
        "conserved" | "J" => Ok(CurrentKind::Conserved),
        "probability" | "script_J" => Ok(CurrentKind::Probability),
        other => Err(PyValueError::new_err(format!(
            "current kind must be `conserved` or `probability`, got `{other}`"
        ))),
    }
}

#[pyclass(name = "Lattice", module = "pykgfield", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyLattice(Lattice);

#[pymethods]
impl PyLattice {
    #[new]
    fn new(dims: usize, points_per_axis: usize, box_length: f64) -> PyResult<Self> {
        Lattice::new(dims, points_per_axis, box_length).map(PyLattice).map_err(err)
    }

    /// Parses `d,N,L`.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Lattice::parse(text).map(PyLattice).map_err(err)
    }

    #[getter]
    fn dims(&self) -> usize {
        self.0.dims()
    }

    #[getter]
    fn points_per_axis(&self) -> usize {
        self.0.points_per_axis()
    }

    #[getter]
    fn box_length(&self) -> f64 {
        self.0.box_length()
    }

    #[getter]
    fn cell_volume(&self) -> f64 {
        self.0.cell_volume()
    }

    fn descriptor(&self) -> String {
        self.0.descriptor()
    }

    fn positions(&self) -> Vec<[f64; 3]> {
        (0..self.0.len()).map(|i| self.0.position(i)).collect()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("Lattice({})", self.0.descriptor())
    }
}

#[pyclass(name = "InnerParams", module = "pykgfield", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyInnerParams(InnerParams);

#[pymethods]
impl PyInnerParams {
    #[new]
    #[pyo3(signature = (a = 0.0, kappa = 1.0, mass = 1.0, g = None))]
    fn new(a: f64, kappa: f64, mass: f64, g: Option<f64>) -> PyResult<Self> {
        InnerParams::with_norm(a, kappa, mass, g.unwrap_or(0.5 / mass))
            .map(PyInnerParams)
            .map_err(err)
    }

    /// `kappa = 1/(1+a)`.
    #[staticmethod]
    fn nonrelativistic(a: f64, mass: f64) -> PyResult<Self> {
        InnerParams::nonrelativistic(a, mass).map(PyInnerParams).map_err(err)
    }

    #[getter]
    fn a(&self) -> f64 {
        self.0.a
    }

    #[getter]
    fn kappa(&self) -> f64 {
        self.0.kappa
    }

    #[getter]
    fn mass(&self) -> f64 {
        self.0.mass
    }

    #[getter]
    fn g(&self) -> f64 {
        self.0.kg_norm
    }

    fn __repr__(&self) -> String {
        let p = self.0;
        format!("InnerParams(a={}, kappa={}, mass={}, g={})", p.a, p.kappa, p.mass, p.kg_norm)
    }
}

#[pyclass(name = "ModeField", module = "pykgfield", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyModeField(ModeField);

#[pymethods]
impl PyModeField {
    /// Boxed field from `(amplitude, (n1, n2, n3), eps)` triples with `k = 2 pi n / L`.
    #[staticmethod]
    fn from_indices(mass: f64, box_length: f64, modes: Vec<(C64, [i64; 3], i64)>) -> PyResult<Self> {
        let modes = modes
            .into_iter()
            .map(|(c, n, e)| Ok((c, n, parity(e)?)))
            .collect::<PyResult<Vec<_>>>()?;
        ModeField::from_indices(mass, box_length, modes).map(PyModeField).map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        ModeField::from_json(text).map(PyModeField).map_err(err)
    }

    #[staticmethod]
    fn random(lattice: &PyLattice, mass: f64, seed: u64, mode_count: usize) -> PyResult<Self> {
        random::random_mode_field(&lattice.0, mass, seed, mode_count)
            .map(PyModeField)
            .map_err(err)
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    #[getter]
    fn mass(&self) -> f64 {
        self.0.mass()
    }

    #[getter]
    fn box_length(&self) -> f64 {
        self.0.box_length()
    }

    /// `(amplitude, k, eps)` per mode.
    fn modes(&self) -> Vec<(C64, [f64; 3], i64)> {
        self.0
            .modes()
            .iter()
            .map(|m| (m.amplitude, m.wavevec, m.eps.sign() as i64))
            .collect()
    }

    fn __len__(&self) -> usize {
        self.0.modes().len()
    }

    fn value(&self, x0: f64, x: [f64; 3]) -> C64 {
        me::eval_field(&self.0, &SpacetimePoint::new(x0, x))
    }

    fn time_derivative(&self, x0: f64, x: [f64; 3]) -> C64 {
        me::eval_time_derivative(&self.0, &SpacetimePoint::new(x0, x))
    }

    /// Conserved current `J^mu` at `(x0, x)`.
    fn current(&self, params: &PyInnerParams, x0: f64, x: [f64; 3]) -> PyResult<[C64; 4]> {
        me::eval_j(&self.0, &params.0, &SpacetimePoint::new(x0, x))
            .map(|j| j.0)
            .map_err(err)
    }

    /// Probability current `script J^mu` at `(x0, x)`.
    fn probability_current(&self, params: &PyInnerParams, x0: f64, x: [f64; 3]) -> PyResult<[f64; 4]> {
        me::eval_j_script(&self.0, &params.0, &SpacetimePoint::new(x0, x))
            .map(|j| j.re())
            .map_err(err)
    }

    fn divergence(&self, params: &PyInnerParams, x0: f64, x: [f64; 3]) -> PyResult<C64> {
        me::div_j(&self.0, &params.0, &SpacetimePoint::new(x0, x)).map_err(err)
    }

    fn probability_divergence(&self, params: &PyInnerParams, x0: f64, x: [f64; 3]) -> PyResult<f64> {
        me::div_j_script(&self.0, &params.0, &SpacetimePoint::new(x0, x)).map_err(err)
    }

    fn boosted(&self, beta: [f64; 3]) -> PyResult<Self> {
        let lambda = LorentzBoost::new(beta).map_err(err)?;
        Ok(PyModeField(me::boost(&self.0, &lambda)))
    }

    fn charge_conjugate(&self) -> Self {
        PyModeField(me::charge_conjugate(&self.0))
    }

    fn energy_project(&self, eps: i64) -> PyResult<Self> {
        Ok(PyModeField(me::energy_project(&self.0, parity(eps)?)))
    }

    fn gauge_apply(&self, theta: f64, a: f64) -> PyResult<Self> {
        let g = GaugeElement::new(theta, a).map_err(err)?;
        Ok(PyModeField(self.0.gauge_apply(&g)))
    }

    /// `(self, other)_a` over the box in `dims` dimensions.
    fn ip_a_box(&self, other: &PyModeField, params: &PyInnerParams, dims: usize) -> PyResult<C64> {
        me::ip_a_box(&self.0, &other.0, &params.0, dims).map_err(err)
    }

    /// `(psi, psi)_a` as the flux of `J` through the boosted image of the box slice.
    fn ip_a_flux(&self, params: &PyInnerParams, beta: [f64; 3], t0: f64, dims: usize) -> PyResult<f64> {
        let lambda = LorentzBoost::new(beta).map_err(err)?;
        me::ip_a_flux(&self.0, &params.0, &lambda, t0, dims).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("ModeField(mass={}, box_length={}, modes={})", self.0.mass(), self.0.box_length(), self.0.modes().len())
    }
}

#[pyclass(name = "GridState", module = "pykgfield", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGridState(GridState);

#[pymethods]
impl PyGridState {
    #[new]
    #[pyo3(signature = (lattice, mass, psi, psidot, x0 = 0.0))]
    fn new(lattice: &PyLattice, mass: f64, psi: Vec<C64>, psidot: Vec<C64>, x0: f64) -> PyResult<Self> {
        GridState::new(lattice.0, mass, x0, psi, psidot).map(PyGridState).map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (field, lattice, x0 = 0.0))]
    fn sample(field: &PyModeField, lattice: &PyLattice, x0: f64) -> PyResult<Self> {
        sg::sample_at(&field.0, &lattice.0, x0).map(PyGridState).map_err(err)
    }

    /// Random boxed state normalized to `(psi, psi)_0 = 1`.
    #[staticmethod]
    fn random(lattice: &PyLattice, mass: f64, seed: u64, mode_count: usize) -> PyResult<Self> {
        random::random_state(&lattice.0, mass, seed, mode_count)
            .map(PyGridState)
            .map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        GridState::from_json(text).map(PyGridState).map_err(err)
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    #[getter]
    fn lattice(&self) -> PyLattice {
        PyLattice(*self.0.lattice())
    }

    #[getter]
    fn mass(&self) -> f64 {
        self.0.mass()
    }

    #[getter]
    fn x0(&self) -> f64 {
        self.0.x0()
    }

    fn psi(&self) -> Vec<C64> {
        self.0.psi().to_vec()
    }

    fn psidot(&self) -> Vec<C64> {
        self.0.psidot().to_vec()
    }

    fn evolve(&self, delta: f64) -> Self {
        PyGridState(self.0.evolve(delta))
    }

    fn energy_project(&self, eps: i64) -> PyResult<Self> {
        Ok(PyGridState(self.0.energy_project(parity(eps)?)))
    }

    fn charge_conjugate(&self) -> Self {
        PyGridState(sg::charge_conjugate_grid(&self.0))
    }

    fn gauge_apply(&self, theta: f64, a: f64) -> PyResult<Self> {
        let g = GaugeElement::new(theta, a).map_err(err)?;
        Ok(PyGridState(self.0.gauge_apply(&g)))
    }

    fn max_difference(&self, other: &PyGridState) -> f64 {
        self.0.max_difference(&other.0)
    }

    fn __repr__(&self) -> String {
        format!("GridState(lattice={}, mass={}, x0={})", self.0.lattice().descriptor(), self.0.mass(), self.0.x0())
    }
}

#[pyfunction]
fn ip_a(s1: &PyGridState, s2: &PyGridState, params: &PyInnerParams) -> PyResult<C64> {
    hs::ip_a(&s1.0, &s2.0, &params.0).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (s1, s2, g = None))]
fn ip_kg(s1: &PyGridState, s2: &PyGridState, g: Option<f64>) -> PyResult<C64> {
    hs::ip_kg(&s1.0, &s2.0, g.unwrap_or(0.5 / s1.0.mass())).map_err(err)
}

#[pyfunction]
fn rho_a(s: &PyGridState, params: &PyInnerParams) -> PyResult<Vec<f64>> {
    hs::rho_a(&s.0, &params.0).map_err(err)
}

#[pyfunction]
fn total_probability(s: &PyGridState, params: &PyInnerParams) -> PyResult<f64> {
    hs::total_probability(&s.0, &params.0).map_err(err)
}

#[pyfunction]
fn charge_q(s: &PyGridState, params: &PyInnerParams) -> PyResult<f64> {
    hs::charge_q(&s.0, params.0.kg_norm).map_err(err)
}

/// Preimage in `H_0` of a state in `H_a`.
#[pyfunction]
fn transport(s: &PyGridState, params: &PyInnerParams) -> PyResult<PyGridState> {
    hs::transport(&s.0, &params.0).map(PyGridState).map_err(err)
}

/// The four components of `J` (or `script J`) on the lattice sites.
#[pyfunction]
#[pyo3(signature = (s, params, kind = "conserved"))]
fn current(s: &PyGridState, params: &PyInnerParams, kind: &str) -> PyResult<Vec<Vec<C64>>> {
    let f = currents::current(&s.0, &params.0, self::kind(kind)?).map_err(err)?;
    Ok(f.components.to_vec())
}

#[pyfunction]
#[pyo3(signature = (s, params, kind = "conserved", h = None))]
fn continuity_residual(s: &PyGridState, params: &PyInnerParams, kind: &str, h: Option<f64>) -> PyResult<f64> {
    let h = h.unwrap_or(sg::default_step(s.0.mass()));
    currents::continuity_residual(&s.0, &params.0, self::kind(kind)?, h).map_err(err)
}

/// Relative first-order defect of the gauge generator `-i(C + a)`.
#[pyfunction]
#[pyo3(signature = (s, a, dtheta = 1e-6))]
fn generator_check(s: &PyGridState, a: f64, dtheta: f64) -> PyResult<f64> {
    gauge_symmetry::generator_check(&s.0, a, dtheta).map_err(err)
}

/// `(eps, M r, closed form, quadrature, relative error)` rows.
#[pyfunction]
fn nw_comparison(params: &PyInnerParams, mrs: Vec<f64>) -> PyResult<Vec<(i64, f64, f64, f64, f64)>> {
    let rows = localization::nw_comparison(&params.0, &mrs).map_err(err)?;
    Ok(rows
        .into_iter()
        .map(|r| (r.eps.sign() as i64, r.mr, r.closed_form, r.quadrature, r.rel_err))
        .collect())
}

#[pyfunction]
fn bessel_k(nu: f64, z: f64) -> PyResult<f64> {
    localization::bessel_k(nu, z).map_err(err)
}

/// Classification of `G_a` for `a = m/n`, as a JSON document.
#[pyfunction]
fn classify_rational(m: i64, n: u64) -> PyResult<String> {
    let p = GroupParam::Rational(RationalParam::new(m, n).map_err(err)?);
    Ok(gauge_symmetry::classify_group(&p).map_err(err)?.to_json())
}

/// Classification of `G_a` for a parameter declared irrational, as a JSON document.
#[pyfunction]
fn classify_irrational(approx: f64) -> PyResult<String> {
    let p = GroupParam::irrational(approx).map_err(err)?;
    Ok(gauge_symmetry::classify_group(&p).map_err(err)?.to_json())
}

/// Sorted eigenvalues of `D_q` for a reproducible smooth vector potential.
#[pyfunction]
fn magnetic_spectrum(lattice: &PyLattice, mass: f64, q: f64, seed: u64) -> PyResult<Vec<f64>> {
    let em = em_background::random_smooth_potential(&lattice.0, q, seed);
    let op = em_background::build_dq(&lattice.0, mass, &em).map_err(err)?;
    let mut eig = op.eigenvalues().map_err(err)?;
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

#[pymodule]
fn pykgfield(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyLattice>()?;
    m.add_class::<PyInnerParams>()?;
    m.add_class::<PyModeField>()?;
    m.add_class::<PyGridState>()?;
    m.add_function(wrap_pyfunction!(ip_a, m)?)?;
    m.add_function(wrap_pyfunction!(ip_kg, m)?)?;
    m.add_function(wrap_pyfunction!(rho_a, m)?)?;
    m.add_function(wrap_pyfunction!(total_probability, m)?)?;
    m.add_function(wrap_pyfunction!(charge_q, m)?)?;
    m.add_function(wrap_pyfunction!(transport, m)?)?;
    m.add_function(wrap_pyfunction!(current, m)?)?;
    m.add_function(wrap_pyfunction!(continuity_residual, m)?)?;
    m.add_function(wrap_pyfunction!(generator_check, m)?)?;
    m.add_function(wrap_pyfunction!(nw_comparison, m)?)?;
    m.add_function(wrap_pyfunction!(bessel_k, m)?)?;
    m.add_function(wrap_pyfunction!(classify_rational, m)?)?;
    m.add_function(wrap_pyfunction!(classify_irrational, m)?)?;
    m.add_function(wrap_pyfunction!(magnetic_spectrum, m)?)?;
    Ok(())
}
