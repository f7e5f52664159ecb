//! Verification experiments behind the `kgfield` command.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{CommandFactory, Parser, ValueEnum};
use kgfield::currents::{self, CurrentKind, FourField};
use kgfield::em_background::{self, EMConfig};
use kgfield::gauge_symmetry::{self, GaugeAction, GaugeElement, GroupKind, GroupParam, RationalParam};
use kgfield::hilbert_space as hs;
use kgfield::localization;
use kgfield::mode_engine::{self as me, ChargeParity, FourVector, LorentzBoost, ModeField, ModeSpec, SpacetimePoint, C64};
use kgfield::random;
use kgfield::report::{Bound, Report};
use kgfield::spectral_grid::{self as sg, GridState, Lattice};
use kgfield::{InnerParams, KgError};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_TOLERANCE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DOCUMENT: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    Continuity,
    Covariance,
    NonrelLimit,
    InnerProducts,
    LocalizedCompare,
    GaugeOrbit,
    ClassifyGroup,
    EmSpectrum,
    TotalProbability,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Continuity => "continuity",
            Experiment::Covariance => "covariance",
            Experiment::NonrelLimit => "nonrel-limit",
            Experiment::InnerProducts => "inner-products",
            Experiment::LocalizedCompare => "localized-compare",
            Experiment::GaugeOrbit => "gauge-orbit",
            Experiment::ClassifyGroup => "classify-group",
            Experiment::EmSpectrum => "em-spectrum",
            Experiment::TotalProbability => "total-probability",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Command line of `kgfield`.
#[derive(Debug, Clone, Parser)]
#[command(name = "kgfield", version, about = "Run a Klein-Gordon verification experiment and write its report")]
pub struct ExperimentConfig {
    #[arg(value_enum)]
    pub experiment: Experiment,

    /// Inner-product parameter, |a| < 1
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,

    #[arg(long)]
    pub kappa: Option<f64>,

    #[arg(long)]
    pub mass: Option<f64>,

    /// Klein-Gordon normalization (default 1/(2M))
    #[arg(long)]
    pub g: Option<f64>,

    /// Boost velocity bx,by,bz
    #[arg(long, value_parser = parse_triple, allow_hyphen_values = true)]
    pub beta: Option<[f64; 3]>,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Lattice as d,N,L
    #[arg(long, value_parser = parse_lattice)]
    pub lattice: Option<Lattice>,

    /// Input document (mode field, EM background or gauge parameter)
    #[arg(long = "in")]
    pub inputs: Vec<PathBuf>,

    #[arg(long)]
    pub out: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t)]
    pub format: Format,

    /// Multiplies every upper tolerance; recorded in the report
    #[arg(long, default_value_t = 1.0)]
    pub tolerance_scale: f64,

    /// Scale factors for the nonrelativistic scan
    #[arg(long, value_delimiter = ',')]
    pub scales: Vec<f64>,

    /// Modes per random field
    #[arg(long, default_value_t = 4)]
    pub modes: usize,

    /// Number of random states
    #[arg(long)]
    pub states: Option<usize>,

    /// Coupling constant q of the magnetic background
    #[arg(long, allow_hyphen_values = true)]
    pub q: Option<f64>,

    /// Rational gauge parameter m/n
    #[arg(long, allow_hyphen_values = true)]
    pub rational: Vec<String>,

    /// Gauge parameter declared irrational, given by an approximation
    #[arg(long, allow_hyphen_values = true)]
    pub irrational: Vec<f64>,
}

impl ExperimentConfig {
    pub fn parse_args<I, T>(args: I) -> std::result::Result<Self, clap::Error>
    where
        I: IntoIterator<Item = T>,
        T: Into<OsString> + Clone,
    {
        Self::try_parse_from(args)
    }

    fn validate(&self) -> Result<(), CliError> {
        if !(self.tolerance_scale > 0.0 && self.tolerance_scale.is_finite()) {
            return Err(CliError::Usage(format!(
                "--tolerance-scale must be positive, got {}",
                self.tolerance_scale
            )));
        }
        if self.modes == 0 {
            return Err(CliError::Usage("--modes must be at least 1".into()));
        }
        if self.states == Some(0) {
            return Err(CliError::Usage("--states must be at least 1".into()));
        }
        if let Some(b) = self.beta {
            LorentzBoost::new(b)?;
        }
        if let Some(q) = self.q {
            if !q.is_finite() {
                return Err(CliError::Usage(format!("--q must be finite, got {q}")));
            }
        }
        if self.scales.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(CliError::Usage("--scales must be positive".into()));
        }
        if let Some(a) = self.a {
            InnerParams::standard(1.0)?.with_a(a)?;
        }
        for (flag, v) in [("--kappa", self.kappa), ("--mass", self.mass), ("--g", self.g)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(CliError::Usage(format!("{flag} must be positive, got {v}")));
                }
            }
        }
        Ok(())
    }
}

fn parse_triple(text: &str) -> std::result::Result<[f64; 3], String> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    match parts.len() {
        1 => Ok([parts[0], 0.0, 0.0]),
        3 => Ok([parts[0], parts[1], parts[2]]),
        n => Err(format!("expected 1 or 3 components, got {n}")),
    }
}

fn parse_lattice(text: &str) -> std::result::Result<Lattice, String> {
    Lattice::parse(text).map_err(|e| e.to_string())
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Precondition(KgError),
    Document(String),
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Precondition(_) => EXIT_USAGE,
            CliError::Document(_) | CliError::Output(_) => EXIT_DOCUMENT,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Precondition(e) => write!(f, "precondition violation: {e}"),
            CliError::Document(m) => write!(f, "input document error: {m}"),
            CliError::Output(m) => write!(f, "cannot write report: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<KgError> for CliError {
    fn from(e: KgError) -> Self {
        match e {
            KgError::Document(m) => CliError::Document(m),
            KgError::Json(e) => CliError::Document(e.to_string()),
            other => CliError::Precondition(other),
        }
    }
}

/// Parses `args`, runs the experiment, writes the report and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let config = match ExperimentConfig::parse_args(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            if !e.use_stderr() {
                return EXIT_PASS;
            }
            eprintln!("\n{}", ExperimentConfig::command().render_usage());
            return EXIT_USAGE;
        }
    };
    match execute(&config) {
        Ok(true) => EXIT_PASS,
        Ok(false) => EXIT_TOLERANCE,
        Err(e) => {
            eprintln!("kgfield: {e}");
            e.exit_code()
        }
    }
}

/// Runs the experiment and writes the rendered report to `--out` or stdout.
pub fn execute(config: &ExperimentConfig) -> Result<bool, CliError> {
    let report = run(config)?;
    let text = render(&report, config.format);
    match &config.out {
        Some(path) => fs::write(path, &text).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    Ok(report.passed())
}

pub fn render(report: &Report, format: Format) -> String {
    match format {
        Format::Csv => report.to_csv(),
        Format::Json => report.to_json() + "\n",
    }
}

pub fn run(config: &ExperimentConfig) -> Result<Report, CliError> {
    config.validate()?;
    match config.experiment {
        Experiment::Continuity => continuity(config),
        Experiment::Covariance => covariance(config),
        Experiment::NonrelLimit => nonrel_limit(config),
        Experiment::InnerProducts => inner_products(config),
        Experiment::LocalizedCompare => localized_compare(config),
        Experiment::GaugeOrbit => gauge_orbit(config),
        Experiment::ClassifyGroup => classify_group(config),
        Experiment::EmSpectrum => em_spectrum(config),
        Experiment::TotalProbability => total_probability(config),
    }
}

fn read_document(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Document(format!("{}: {e}", path.display())))
}

fn single_input(config: &ExperimentConfig) -> Result<Option<(PathBuf, String)>, CliError> {
    match config.inputs.as_slice() {
        [] => Ok(None),
        [p] => Ok(Some((p.clone(), read_document(p)?))),
        _ => Err(CliError::Usage(format!("{} takes at most one --in document", config.experiment.name()))),
    }
}

/// Loads the `--in` mode field; every failure here is a document error.
fn load_field(config: &ExperimentConfig) -> Result<Option<ModeField>, CliError> {
    let Some((path, text)) = single_input(config)? else {
        return Ok(None);
    };
    let f = ModeField::from_json(&text).map_err(|e| CliError::Document(format!("{}: {e}", path.display())))?;
    if f.is_empty() {
        return Err(CliError::Document(format!("{}: the field has no modes", path.display())));
    }
    if let Some(m) = config.mass {
        if m != f.mass() {
            return Err(CliError::Usage(format!("--mass {m} differs from the document mass {}", f.mass())));
        }
    }
    Ok(Some(f))
}

fn make_params(config: &ExperimentConfig, mass: f64, nonrel: bool) -> Result<InnerParams, CliError> {
    let a = config.a.unwrap_or(0.0);
    let kappa = config.kappa.unwrap_or(if nonrel { 1.0 / (1.0 + a) } else { 1.0 });
    let g = config.g.unwrap_or(0.5 / mass);
    Ok(InnerParams::with_norm(a, kappa, mass, g)?)
}

fn mass_of(config: &ExperimentConfig) -> f64 {
    config.mass.unwrap_or(1.0)
}

fn field_dims(f: &ModeField) -> usize {
    let mut dims = 1;
    for m in f.modes() {
        for (axis, k) in m.wavevec.iter().enumerate() {
            if *k != 0.0 {
                dims = dims.max(axis + 1);
            }
        }
    }
    dims
}

/// Lattice for a loaded boxed field: `--lattice` if given, else 32 points per axis
/// over the field's box in the dimensions it uses.
fn lattice_for(config: &ExperimentConfig, f: &ModeField) -> Result<Lattice, CliError> {
    match config.lattice {
        Some(l) => Ok(l),
        None => Ok(Lattice::new(field_dims(f), 32, f.box_length())?),
    }
}

fn max_abs(v: &[C64]) -> f64 {
    v.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

fn rel(d: f64, scale: f64) -> f64 {
    if scale == 0.0 {
        d
    } else {
        d / scale
    }
}

fn site_point(lat: &Lattice, i: usize, x0: f64) -> SpacetimePoint {
    SpacetimePoint::new(x0, lat.position(i))
}

/// Bound on the individual terms of `d_mu J^mu` for a mode sum:
/// `(kappa/M)(1+|a|)(sum |c| omega)^2`.
fn divergence_scale(f: &ModeField, params: &InnerParams) -> f64 {
    let s: f64 = f.modes().iter().map(|m| m.amplitude.norm() * m.omega(f.mass())).sum();
    params.kappa / params.mass * (1.0 + params.a.abs()) * s * s
}

/// `d_mu script J^mu` for `c1 e^{i k1.x} + c2 e^{i k2.x}` with positive energies:
/// `(M^2 + k1.k2)(sqrt(w1/w2) - sqrt(w2/w1)) F(x)`,
/// `F = -(kappa(1+a)/M) Im[c1 c2^* e^{i(k1-k2).x}]`.
pub fn two_mode_script_divergence(f: &ModeField, params: &InnerParams, x: &SpacetimePoint) -> Option<f64> {
    let [m1, m2] = f.modes() else {
        return None;
    };
    if m1.eps != ChargeParity::Positive || m2.eps != ChargeParity::Positive {
        return None;
    }
    let mass = f.mass();
    let (k1, k2) = (m1.four_momentum(mass), m2.four_momentum(mass));
    let (w1, w2) = (k1[0], k2[0]);
    let dot = |p: &[f64; 4], q: &[f64; 4]| -p[0] * q[0] + p[1] * q[1] + p[2] * q[2] + p[3] * q[3];
    let xv = x.to_array();
    let phase = dot(&k1, &xv) - dot(&k2, &xv);
    let big_f = -params.kappa * (1.0 + params.a) / mass
        * (m1.amplitude * m2.amplitude.conj() * C64::from_polar(1.0, phase)).im;
    Some((mass * mass + dot(&k1, &k2)) * ((w1 / w2).sqrt() - (w2 / w1).sqrt()) * big_f)
}

fn sample_stride(len: usize) -> usize {
    (len / 1024).max(1)
}

fn continuity(config: &ExperimentConfig) -> Result<Report, CliError> {
    let (field, lat) = match load_field(config)? {
        Some(f) => {
            let lat = lattice_for(config, &f)?;
            (f, lat)
        }
        None => {
            let lat = config.lattice.unwrap_or(Lattice::new(2, 32, 6.0)?);
            (random::random_mode_field(&lat, mass_of(config), config.seed, config.modes)?, lat)
        }
    };
    let params = make_params(config, field.mass(), false)?;
    let mut rep = Report::new("continuity", config.tolerance_scale)
        .with_params(&params)
        .with_lattice(&lat);
    let s = sg::sample(&field, &lat)?;
    let h = sg::default_step(params.mass);
    let res_j = currents::continuity_residual(&s, &params, CurrentKind::Conserved, h)?;
    rep.check("residual_J", res_j, Bound::Max, 1e-8);
    let res_script = currents::continuity_residual(&s, &params, CurrentKind::Probability, h)?;
    rep.info("residual_script_J", res_script, 0.0);

    let stride = sample_stride(lat.len());
    let dscale = divergence_scale(&field, &params);
    let mut mode_div: f64 = 0.0;
    for i in (0..lat.len()).step_by(stride) {
        mode_div = mode_div.max(me::div_j(&field, &params, &site_point(&lat, i, 0.0))?.norm());
    }
    rep.check("mode_div_J", rel(mode_div, dscale), Bound::Max, 1e-12);

    let grid_div = currents::divergence_field(&s, &params, CurrentKind::Probability, h)?;
    let grid_scale = max_abs(&grid_div);
    let mut grid_vs_mode: f64 = 0.0;
    let mut mode_vs_closed: f64 = 0.0;
    let mut closed_scale: f64 = 0.0;
    let mut grid_vs_closed: f64 = 0.0;
    let mut has_closed = false;
    for i in (0..lat.len()).step_by(stride) {
        let x = site_point(&lat, i, 0.0);
        let m = me::div_j_script(&field, &params, &x)?;
        grid_vs_mode = grid_vs_mode.max((grid_div[i] - m).norm());
        if let Some(c) = two_mode_script_divergence(&field, &params, &x) {
            has_closed = true;
            closed_scale = closed_scale.max(c.abs());
            mode_vs_closed = mode_vs_closed.max((m - c).abs());
            grid_vs_closed = grid_vs_closed.max((grid_div[i] - c).norm());
        }
    }
    rep.check("div_script_J_grid_vs_mode", rel(grid_vs_mode, grid_scale), Bound::Max, 1e-6);
    if has_closed {
        rep.check("div_script_J_mode_vs_closed_form", rel(mode_vs_closed, closed_scale), Bound::Max, 1e-12);
        rep.check("div_script_J_grid_vs_closed_form", rel(grid_vs_closed, closed_scale), Bound::Max, 1e-6);
        let [m1, m2] = field.modes() else { unreachable!() };
        if m1.omega(field.mass()) != m2.omega(field.mass()) {
            rep.check("div_script_J_magnitude", rel(closed_scale, dscale), Bound::Min, 1e-3);
        }
    }
    Ok(rep)
}

fn default_boosts() -> Vec<[f64; 3]> {
    vec![[0.3, 0.0, 0.0], [0.0, -0.6, 0.2], [0.5, 0.4, -0.3], [-0.8, 0.0, 0.0]]
}

fn covariance_points() -> Vec<SpacetimePoint> {
    (0..8)
        .map(|k| {
            let t = k as f64;
            SpacetimePoint::new(0.3 * t - 0.7, [0.5 * t, 0.4 - 0.2 * t, 0.15 * t * t - 0.5])
        })
        .collect()
}

fn covariance(config: &ExperimentConfig) -> Result<Report, CliError> {
    let field = match load_field(config)? {
        Some(f) => f,
        None => {
            let lat = config.lattice.unwrap_or(Lattice::new(3, 16, 5.0)?);
            random::random_mode_field(&lat, mass_of(config), config.seed, config.modes)?
        }
    };
    let params = make_params(config, field.mass(), false)?;
    let mut rep = Report::new("covariance", config.tolerance_scale).with_params(&params);
    let boosts = config.beta.map(|b| vec![b]).unwrap_or_else(default_boosts);
    let mass = field.mass();
    let omegas: Vec<f64> = field.modes().iter().map(|m| m.omega(mass)).collect();
    let distinct = omegas.iter().any(|w| *w != omegas[0]);
    let points = covariance_points();
    for beta in &boosts {
        let lambda = LorentzBoost::new(*beta)?;
        let r = currents::covariance_experiment(&field, &params, &lambda, &points)?;
        let row = rep.check("covariance_defect_J", r.relative_defect_j(), Bound::Max, 1e-12);
        row.beta = Some(*beta);
        row.defect = Some(r.max_defect_j());
        let d = r.relative_defect_script();
        let row = if distinct {
            rep.check("covariance_defect_script_J", d, Bound::Min, 1e-3)
        } else {
            rep.check("covariance_defect_script_J", d, Bound::Max, 1e-12)
        };
        row.beta = Some(*beta);
        row.defect = Some(r.max_defect_script());
    }
    // K_mu K^mu for the first positive-energy pair with distinct frequencies
    let positive: Vec<&ModeSpec> = field.modes().iter().filter(|m| m.eps == ChargeParity::Positive).collect();
    let pair = positive.iter().enumerate().find_map(|(i, m1)| {
        positive[i + 1..]
            .iter()
            .find(|m2| m2.omega(mass) != m1.omega(mass))
            .map(|m2| (**m1, **m2))
    });
    if let Some((m1, m2)) = pair {
        let k1 = m1.four_momentum(mass);
        let k2 = m2.four_momentum(mass);
        let kk = |p: [f64; 4], q: [f64; 4]| -> Result<(f64, f64), KgError> {
            let direct = me::k_invariant(&FourVector::from_real(p), &FourVector::from_real(q), mass)?;
            let dot = -p[0] * q[0] + p[1] * q[1] + p[2] * q[2] + p[3] * q[3];
            let closed = 2.0 * dot - mass * mass * (q[0] / p[0] + p[0] / q[0]);
            Ok((direct, closed))
        };
        let (rest, rest_closed) = kk(k1, k2)?;
        rep.check("KK_direct_vs_closed_form", rel((rest - rest_closed).abs(), rest.abs()), Bound::Max, 1e-12);
        let mut frame_change: f64 = 0.0;
        for beta in &boosts {
            let lambda = LorentzBoost::new(*beta)?;
            let (moved, moved_closed) = kk(lambda.apply_real(k1), lambda.apply_real(k2))?;
            let row = rep.check(
                "KK_direct_vs_closed_form",
                rel((moved - moved_closed).abs(), moved.abs()),
                Bound::Max,
                1e-12,
            );
            row.beta = Some(*beta);
            let change = rel((moved - rest).abs(), rest.abs());
            rep.info("KK_frame_change", change, 0.0).beta = Some(*beta);
            frame_change = frame_change.max(change);
        }
        rep.check("KK_frame_dependence", frame_change, Bound::Min, 1e-3);
    }
    Ok(rep)
}

fn nonrel_limit(config: &ExperimentConfig) -> Result<Report, CliError> {
    let base = match load_field(config)? {
        Some(f) => f,
        None => ModeField::new(
            mass_of(config),
            1.0,
            false,
            vec![
                ModeSpec::new(C64::new(1.0, 0.0), [0.9, 0.2, 0.0], ChargeParity::Positive),
                ModeSpec::new(C64::new(0.6, -0.3), [-0.4, 0.7, 0.0], ChargeParity::Positive),
            ],
        )?,
    };
    let params = make_params(config, base.mass(), true)?;
    let scales = if config.scales.is_empty() {
        vec![2.0, 4.0, 8.0, 16.0, 32.0]
    } else {
        config.scales.clone()
    };
    let points = currents::default_nonrel_points(field_dims(&base).max(2));
    let table = currents::nonrel_limit_scan(&base, &params, &scales, &points)?;
    let mut rep = Report::new("nonrel-limit", config.tolerance_scale).with_params(&params);
    for r in &table.rows {
        let row = rep.info("deviation_J", r.deviation_j, 0.0);
        row.scale_s = Some(r.scale);
        let row = rep.info("deviation_script_J", r.deviation_script, 0.0);
        row.scale_s = Some(r.scale);
        let row = rep.info("charge_ratio_J", r.ratio_j, 0.0);
        row.scale_s = Some(r.scale);
        let row = rep.info("charge_ratio_script_J", r.ratio_script, 0.0);
        row.scale_s = Some(r.scale);
    }
    let row = rep.check("slope_error_J", (table.slope_j + 2.0).abs(), Bound::Max, 0.1);
    row.slope = Some(table.slope_j);
    let row = rep.check("slope_error_script_J", (table.slope_script + 2.0).abs(), Bound::Max, 0.1);
    row.slope = Some(table.slope_script);
    Ok(rep)
}

fn random_fields(config: &ExperimentConfig, lat: &Lattice, count: usize) -> Result<Vec<ModeField>, CliError> {
    (0..count as u64)
        .map(|i| Ok(random::random_mode_field(lat, mass_of(config), config.seed.wrapping_add(i), config.modes)?))
        .collect()
}

fn a_values(config: &ExperimentConfig) -> Vec<f64> {
    match config.a {
        Some(a) => vec![a],
        None => vec![-0.9, -0.5, 0.0, 0.5, 0.9],
    }
}

fn params_with_a(config: &ExperimentConfig, mass: f64, a: f64) -> Result<InnerParams, CliError> {
    Ok(make_params(config, mass, false)?.with_a(a)?)
}

fn inner_products(config: &ExperimentConfig) -> Result<Report, CliError> {
    let lat = config.lattice.unwrap_or(Lattice::new(1, 64, 8.0)?);
    let mass = mass_of(config);
    let fields = random_fields(config, &lat, config.states.unwrap_or(10))?;
    let states: Vec<GridState> = fields.iter().map(|f| sg::sample(f, &lat)).collect::<Result<_, _>>()?;
    let mut rep = Report::new("inner-products", config.tolerance_scale).with_lattice(&lat);
    let beta = config.beta.unwrap_or([0.6, 0.0, 0.0]);
    let lambda = LorentzBoost::new(beta)?;
    for a in a_values(config) {
        let p = params_with_a(config, mass, a)?;
        rep.set_params(&p);
        let mut min_norm = f64::INFINITY;
        let mut decomposition: f64 = 0.0;
        let mut drift: f64 = 0.0;
        let mut boosted: f64 = 0.0;
        let mut unitarity: f64 = 0.0;
        let mut round_trip: f64 = 0.0;
        let mut transport: f64 = 0.0;
        let p0 = p.with_a(0.0)?;
        for (k, (s, f)) in states.iter().zip(&fields).enumerate() {
            let other = &states[(k + 1) % states.len()];
            let n = hs::ip_a(s, s, &p)?;
            min_norm = min_norm.min(n.re);
            let scale = n.norm();
            for t in [s, other] {
                let v = hs::ip_a(s, t, &p)?;
                let parts = (hs::ip_plain(s, t)? + hs::ip_kg(s, t, 0.5 / mass)? * a) * p.kappa;
                decomposition = decomposition.max(rel((v - parts).norm(), scale));
                let later = hs::ip_a(&s.evolve(1.0), &t.evolve(1.0), &p)?;
                drift = drift.max(rel((later - v).norm(), scale));
                let us = hs::map_u_a(s, &p, s.x0())?;
                let ut = hs::map_u_a(t, &p, t.x0())?;
                unitarity = unitarity.max(rel((us.inner(&ut)? - v).norm(), scale));
            }
            let back = hs::map_u_inverse(&hs::map_u_a(s, &p, 0.0)?, &p, 0.0, 0.0)?;
            round_trip = round_trip.max(rel(back.max_difference(s), s.max_abs()));
            let rho = hs::rho_a(s, &p)?;
            let rho0 = hs::rho_a(&hs::transport(s, &p)?, &p0)?;
            let rmax = rho.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let d = rho.iter().zip(&rho0).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            transport = transport.max(rel(d, rmax));
            let boxed = me::ip_a_box(f, f, &p, lat.dims())?.re;
            let flux = me::ip_a_flux(f, &p, &lambda, 0.0, lat.dims())?;
            boosted = boosted.max(rel((flux - boxed).abs(), boxed.abs()));
        }
        rep.check("min_norm", min_norm, Bound::Min, 0.0);
        rep.check("decomposition_identity", decomposition, Bound::Max, 1e-14);
        rep.check("drift_per_unit_time", drift, Bound::Max, 1e-12);
        rep.check("boosted_frame_invariance", boosted, Bound::Max, 1e-12).beta = Some(beta);
        rep.check("U_a_unitarity", unitarity, Bound::Max, 1e-12);
        rep.check("U_a_round_trip", round_trip, Bound::Max, 1e-12);
        rep.check("transport_rho", transport, Bound::Max, 1e-12);
    }
    Ok(rep)
}

fn localized_compare(config: &ExperimentConfig) -> Result<Report, CliError> {
    let mass = mass_of(config);
    let p = make_params(config, mass, false)?;
    let mut rep = Report::new("localized-compare", config.tolerance_scale).with_params(&p);
    let mrs = if config.scales.is_empty() {
        vec![0.1, 0.3, 1.0, 2.5, 5.0, 10.0]
    } else {
        config.scales.clone()
    };
    for c in localization::nw_comparison(&p, &mrs)? {
        let q = format!("nw_rel_err[eps={};Mr={}]", c.eps.sign(), c.mr);
        rep.check(&q, c.rel_err, Bound::Max, 1e-8).defect = Some(c.quadrature - c.closed_form);
    }

    let lat = config.lattice.unwrap_or(Lattice::new(1, 16, 4.0)?);
    let w = 1.0 / lat.cell_volume();
    let mut basis = Vec::with_capacity(2 * lat.len());
    for eps in ChargeParity::BOTH {
        for i in 0..lat.len() {
            basis.push((eps, i, localization::localized_basis_grid(&lat, &p, eps, &lat.position(i), 0.0)?));
        }
    }
    let mut ortho: f64 = 0.0;
    let mut parity: f64 = 0.0;
    for (e1, i1, s1) in &basis {
        for (e2, i2, s2) in &basis {
            let expect = if e1 == e2 && i1 == i2 { w } else { 0.0 };
            ortho = ortho.max((hs::ip_a(s1, s2, &p)? - expect).norm() / w);
        }
        let c = sg::charge_conjugate_grid(s1);
        parity = parity.max(rel(c.add_scaled(s1, C64::new(-e1.sign(), 0.0))?.max_abs(), s1.max_abs()));
    }
    let target = random::random_state(&lat, mass, config.seed, config.modes)?;
    let mut rebuilt = GridState::zero(lat, mass, 0.0)?;
    for (_, _, b) in &basis {
        let c = hs::ip_a(b, &target, &p)? * lat.cell_volume();
        rebuilt = rebuilt.add_scaled(b, c)?;
    }
    rep.set_params(&p);
    let mut rep = rep.with_lattice(&lat);
    rep.check("basis_orthonormality", ortho, Bound::Max, 1e-11);
    rep.check("basis_completeness", rel(rebuilt.max_difference(&target), target.max_abs()), Bound::Max, 1e-11);
    rep.check("C_parity", parity, Bound::Max, 1e-12);

    let plat = Lattice::new(1, 256, 80.0)?;
    let packet = gaussian_packet(&plat, mass, 40.0, 2.5, 0.7)?;
    let d = localization::nw_initial_condition_defect(&packet, &p, 0.0, 0)?;
    rep.check("nw_initial_condition_defect", d, Bound::Max, 1e-6);
    Ok(rep)
}

/// Positive-energy Gaussian packet on a 1D lattice.
fn gaussian_packet(lat: &Lattice, mass: f64, center: f64, width: f64, k0: f64) -> Result<GridState, KgError> {
    let psi: Vec<C64> = (0..lat.len())
        .map(|i| {
            let x = lat.position(i)[0] - center;
            C64::from_polar((-(x * x) / (2.0 * width * width)).exp(), k0 * x)
        })
        .collect();
    let root = sg::apply_d_power(&psi, lat, mass, 0.5)?;
    let psidot = root.iter().map(|v| v * C64::new(0.0, -1.0)).collect();
    GridState::new(*lat, mass, 0.0, psi, psidot)
}

fn theta_grid() -> Vec<f64> {
    vec![0.0, 0.3, 1.0, std::f64::consts::FRAC_PI_2, 2.5, std::f64::consts::PI, 5.0, 12.7]
}

/// `J` split into sector-diagonal parts and the cross terms `B_{+-}`, `B_{-+}`.
fn sector_parts(s: &GridState, p: &InnerParams) -> Result<[FourField; 4], KgError> {
    let plus = s.energy_project(ChargeParity::Positive);
    let minus = s.energy_project(ChargeParity::Negative);
    let jp = currents::current_j(&plus, p)?;
    let jm = currents::current_j(&minus, p)?;
    let x1 = currents::current_j(s, p)?;
    let x2 = currents::current_j(&plus.add_scaled(&minus, C64::new(0.0, 1.0))?, p)?;
    let mut bpm = x1.clone();
    let mut bmp = x1.clone();
    for mu in 0..4 {
        for i in 0..x1.components[mu].len() {
            let c1 = x1.components[mu][i] - jp.components[mu][i] - jm.components[mu][i];
            let c2 = x2.components[mu][i] - jp.components[mu][i] - jm.components[mu][i];
            bpm.components[mu][i] = (c1 - C64::new(0.0, 1.0) * c2) * 0.5;
            bmp.components[mu][i] = (c1 + C64::new(0.0, 1.0) * c2) * 0.5;
        }
    }
    Ok([jp, jm, bpm, bmp])
}

fn gauge_orbit(config: &ExperimentConfig) -> Result<Report, CliError> {
    let lat = config.lattice.unwrap_or(Lattice::new(2, 16, 5.0)?);
    let mass = mass_of(config);
    let a = config.a.unwrap_or(0.3);
    let p = params_with_a(config, mass, a)?;
    let mut rep = Report::new("gauge-orbit", config.tolerance_scale)
        .with_params(&p)
        .with_lattice(&lat);
    let s = random::random_state(&lat, mass, config.seed, config.modes)?;
    let t = random::random_state(&lat, mass, config.seed.wrapping_add(1), config.modes)?;
    let norm = hs::ip_a(&s, &s, &p)?;
    let cross = hs::ip_a(&s, &t, &p)?;
    let prob = hs::total_probability(&s, &p)?;
    let parts = sector_parts(&s, &p)?;
    let j_scale = parts.iter().map(FourField::max_abs).fold(0.0, f64::max);
    let pure: Vec<(GridState, FourField)> = ChargeParity::BOTH
        .iter()
        .map(|e| {
            let q = s.energy_project(*e);
            let j = currents::current_j(&q, &p)?;
            Ok((q, j))
        })
        .collect::<Result<_, KgError>>()?;
    let (mut d_norm, mut d_cross, mut d_prob, mut d_pure, mut d_mixed): (f64, f64, f64, f64, f64) =
        (0.0, 0.0, 0.0, 0.0, 0.0);
    for theta in theta_grid() {
        let g = GaugeElement::new(theta, a)?;
        let gs = s.gauge_apply(&g);
        let gt = t.gauge_apply(&g);
        d_norm = d_norm.max(rel((hs::ip_a(&gs, &gs, &p)? - norm).norm(), norm.norm()));
        d_cross = d_cross.max(rel((hs::ip_a(&gs, &gt, &p)? - cross).norm(), norm.norm()));
        d_prob = d_prob.max(rel((hs::total_probability(&gs, &p)? - prob).abs(), prob.abs()));
        for (q, j) in &pure {
            let moved = currents::current_j(&q.gauge_apply(&g), &p)?;
            d_pure = d_pure.max(rel(moved.max_difference(j), j.max_abs()));
        }
        let moved = currents::current_j(&gs, &p)?;
        let rot = C64::from_polar(1.0, 2.0 * theta);
        let mut worst: f64 = 0.0;
        for mu in 0..4 {
            for i in 0..lat.len() {
                let c = |k: usize| parts[k].components[mu][i];
                let predicted = c(0) + c(1) + rot * c(2) + rot.conj() * c(3);
                worst = worst.max((moved.components[mu][i] - predicted).norm());
            }
        }
        d_mixed = d_mixed.max(rel(worst, j_scale));
    }
    rep.check("ip_a_invariance", d_norm, Bound::Max, 1e-12);
    rep.check("ip_a_cross_invariance", d_cross, Bound::Max, 1e-12);
    rep.check("total_probability_invariance", d_prob, Bound::Max, 1e-12);
    rep.check("J_pointwise_invariance_sector_pure", d_pure, Bound::Max, 1e-12);
    rep.check("J_cross_sector_rotation", d_mixed, Bound::Max, 1e-12);
    let cross_size = rel(parts[2].max_abs(), j_scale);
    rep.info("J_cross_sector_magnitude", cross_size, 0.0);
    rep.check("generator_defect", gauge_symmetry::generator_check(&s, a, 1e-6)?, Bound::Max, 1e-5);
    let mut law: f64 = 0.0;
    for (t1, t2) in [(0.4, 1.1), (-2.0, 7.5), (13.0, -0.25)] {
        let g1 = GaugeElement::new(t1, a)?;
        let g2 = GaugeElement::new(t2, a)?;
        let two = s.gauge_apply(&g1).gauge_apply(&g2);
        let one = s.gauge_apply(&g1.compose(&g2)?);
        law = law.max(rel(two.max_difference(&one), s.max_abs()));
    }
    rep.check("group_law", law, Bound::Max, 1e-12);
    Ok(rep)
}

fn parse_rational(text: &str) -> Result<GroupParam, CliError> {
    let (m, n) = text
        .split_once('/')
        .ok_or_else(|| CliError::Usage(format!("--rational expects m/n, got `{text}`")))?;
    let m: i64 = m.trim().parse().map_err(|_| CliError::Usage(format!("bad numerator in `{text}`")))?;
    let n: u64 = n.trim().parse().map_err(|_| CliError::Usage(format!("bad denominator in `{text}`")))?;
    Ok(GroupParam::Rational(RationalParam::new(m, n)?))
}

fn default_group_params() -> Result<Vec<GroupParam>, KgError> {
    let mut out = Vec::new();
    for (m, n) in [(1, 2), (-1, 3), (2, 5), (3, 7), (-5, 9)] {
        out.push(GroupParam::Rational(RationalParam::new(m, n)?));
    }
    out.push(GroupParam::irrational(std::f64::consts::FRAC_1_SQRT_2)?);
    out.push(GroupParam::irrational(std::f64::consts::PI - 3.0)?);
    Ok(out)
}

fn group_label(p: &GroupParam) -> String {
    match p {
        GroupParam::Rational(r) => format!("a={}/{}", r.numerator(), r.denominator()),
        GroupParam::Irrational(x) => format!("a~{x}"),
    }
}

fn classify_group(config: &ExperimentConfig) -> Result<Report, CliError> {
    let mut params = Vec::new();
    if let Some((path, text)) = single_input(config)? {
        let v: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| CliError::Document(format!("{}: {e}", path.display())))?;
        let docs = match v {
            serde_json::Value::Array(items) => items,
            other => vec![other],
        };
        for d in &docs {
            params.push(GroupParam::from_value(d).map_err(|e| match e {
                KgError::UndeclaredRationality => CliError::Precondition(e),
                other => CliError::Document(format!("{}: {other}", path.display())),
            })?);
        }
    }
    for r in &config.rational {
        params.push(parse_rational(r)?);
    }
    for x in &config.irrational {
        params.push(GroupParam::irrational(*x)?);
    }
    if params.is_empty() {
        if config.a.is_some() {
            return Err(CliError::Precondition(KgError::UndeclaredRationality));
        }
        params = default_group_params()?;
    }
    let mut rep = Report::new("classify-group", config.tolerance_scale);
    for param in &params {
        let c = gauge_symmetry::classify_group(param)?;
        let label = group_label(param);
        match (c.group, param) {
            (GroupKind::U1, GroupParam::Rational(r)) => {
                let expected = 2.0 * std::f64::consts::PI * r.denominator() as f64;
                let period = c.period.expect("U1 carries a period");
                rep.info(&format!("group_U1[{label}]"), 1.0, 0.0);
                rep.check(&format!("period_error[{label}]"), rel((period - expected).abs(), expected), Bound::Max, 1e-15)
                    .defect = Some(period);
                for (name, theta) in [("period", period), ("minimal_period", c.minimal_period.expect("U1"))] {
                    let g = GaugeElement::new(theta, param.value())?;
                    let d = gauge_symmetry::distance_to_identity(&gauge_symmetry::group_matrix(&g));
                    rep.check(&format!("{name}_identity_distance[{label}]"), d, Bound::Max, 1e-9)
                        .defect = Some(theta);
                }
            }
            (_, _) => {
                let scan = c.scan.expect("R+ carries scan evidence");
                rep.info(&format!("group_R+[{label}]"), 1.0, 0.0);
                rep.info(&format!("scan_candidates[{label}]"), scan.candidates as f64, 0.0);
                rep.check(&format!("scan_min_distance[{label}]"), scan.min_distance, Bound::Min, gauge_symmetry::IDENTITY_TOLERANCE)
                    .defect = Some(scan.argmin_theta);
            }
        }
    }
    Ok(rep)
}

fn em_spectrum(config: &ExperimentConfig) -> Result<Report, CliError> {
    let lat = config.lattice.unwrap_or(Lattice::new(2, 16, 4.0)?);
    let mass = mass_of(config);
    let p = make_params(config, mass, false)?;
    let em = match single_input(config)? {
        Some((path, text)) => {
            EMConfig::from_json(&text, &lat).map_err(|e| CliError::Document(format!("{}: {e}", path.display())))?
        }
        None => em_background::random_smooth_potential(&lat, config.q.unwrap_or(1.0), config.seed),
    };
    let mut rep = Report::new("em-spectrum", config.tolerance_scale)
        .with_params(&p)
        .with_lattice(&lat);
    let op = em_background::build_dq(&lat, mass, &em)?;
    let eig = op.eigenvalues()?;
    let lowest = eig.iter().copied().fold(f64::INFINITY, f64::min);
    rep.check("min_eigenvalue_minus_M2", lowest - mass * mass, Bound::Min, -1e-9);
    for (k, v) in eig.iter().take(3).enumerate() {
        rep.info(&format!("eigenvalue[{k}]"), *v, 0.0);
    }

    let s = random::random_state(&lat, mass, config.seed, config.modes)?;
    let free = em_background::build_dq(&lat, mass, &EMConfig { q: 0.0, ..em.clone() })?;
    let mut reduction: f64 = 0.0;
    for alpha in [1.0, 0.5, -0.5] {
        let dense = em_background::dq_power_apply(&free, alpha, s.psi())?;
        let spectral = sg::apply_d_power(s.psi(), &lat, mass, alpha)?;
        let d = dense.iter().zip(&spectral).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        reduction = reduction.max(rel(d, max_abs(&spectral)));
    }
    let free_ip = em_background::ip_a_magnetic(&s, &s, &p, &free)?;
    let grid_ip = hs::ip_a(&s, &s, &p)?;
    reduction = reduction.max(rel((free_ip - grid_ip).norm(), grid_ip.norm()));
    rep.check("q0_reduction", reduction, Bound::Max, 1e-11);

    let start = em_background::ip_a_magnetic(&s, &s, &p, &op)?;
    let mut state = s.clone();
    let mut drift: f64 = 0.0;
    for _ in 0..50 {
        state = em_background::evolve_magnetic(&state, 0.1, &op)?;
        let now = em_background::ip_a_magnetic(&state, &state, &p, &op)?;
        drift = drift.max(rel((now - start).norm(), start.norm()));
    }
    rep.check("ip_a_magnetic_drift", drift, Bound::Max, 1e-11);
    Ok(rep)
}

fn total_probability(config: &ExperimentConfig) -> Result<Report, CliError> {
    let lat = config.lattice.unwrap_or(Lattice::new(1, 64, 8.0)?);
    let mass = mass_of(config);
    let p = make_params(config, mass, false)?;
    let mut rep = Report::new("total-probability", config.tolerance_scale)
        .with_params(&p)
        .with_lattice(&lat);
    let (mut three_way, mut imag, mut drift): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for f in random_fields(config, &lat, config.states.unwrap_or(5))? {
        let s = sg::sample(&f, &lat)?;
        let rho = hs::total_probability(&s, &p)?;
        let j0 = currents::current_j(&s, &p)?.time_integral();
        let ip = hs::ip_a(&s, &s, &p)?;
        let scale = ip.norm();
        three_way = three_way
            .max(rel((rho - ip.re).abs(), scale))
            .max(rel((j0.re - ip.re).abs(), scale))
            .max(rel((rho - j0.re).abs(), scale));
        imag = imag.max(rel(j0.im.abs().max(ip.im.abs()), scale));
        let mut state = s.clone();
        for _ in 0..100 {
            state = state.evolve(0.05);
            let now = hs::total_probability(&state, &p)?;
            drift = drift.max(rel((now - rho).abs(), rho.abs()));
        }
    }
    rep.check("rho_J0_ip_three_way", three_way, Bound::Max, 1e-12);
    rep.check("imaginary_part", imag, Bound::Max, 1e-12);
    rep.check("drift_100_steps", drift, Bound::Max, 1e-12);
    Ok(rep)
}
