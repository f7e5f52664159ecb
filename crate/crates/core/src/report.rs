//! Versioned verification reports: one row per checked quantity.

use std::fmt::Write as _;

use serde::Serialize;

use crate::params::InnerParams;
use crate::spectral_grid::Lattice;

pub const SCHEMA: &str = "schema=1";

pub const COLUMNS: [&str; 16] = [
    "experiment",
    "a",
    "kappa",
    "mass",
    "lattice",
    "quantity",
    "value_re",
    "value_im",
    "bound",
    "tolerance",
    "pass",
    "beta",
    "scale_s",
    "defect",
    "slope",
    "tolerance_scale",
];

/// How `value_re` is compared with `tolerance`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Bound {
    /// Passes when `value <= tolerance`; scaled by the tolerance scale.
    Max,
    /// Passes when `value > tolerance` (a threshold, never scaled).
    Min,
    /// Reported only.
    Info,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub experiment: String,
    pub a: Option<f64>,
    pub kappa: Option<f64>,
    pub mass: Option<f64>,
    pub lattice: Option<String>,
    pub quantity: String,
    pub value_re: f64,
    pub value_im: f64,
    pub bound: Bound,
    pub tolerance: Option<f64>,
    pub pass: bool,
    pub beta: Option<[f64; 3]>,
    pub scale_s: Option<f64>,
    pub defect: Option<f64>,
    pub slope: Option<f64>,
    pub tolerance_scale: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    experiment: String,
    params: Option<InnerParams>,
    lattice: Option<String>,
    tolerance_scale: f64,
    rows: Vec<Row>,
}

impl Report {
    pub fn new(experiment: &str, tolerance_scale: f64) -> Self {
        Report {
            experiment: experiment.to_string(),
            params: None,
            lattice: None,
            tolerance_scale,
            rows: Vec::new(),
        }
    }

    pub fn with_params(mut self, params: &InnerParams) -> Self {
        self.params = Some(*params);
        self
    }

    pub fn with_lattice(mut self, lattice: &Lattice) -> Self {
        self.lattice = Some(lattice.descriptor());
        self
    }

    pub fn set_params(&mut self, params: &InnerParams) {
        self.params = Some(*params);
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    fn base(&self, quantity: &str, value: f64, bound: Bound, tolerance: Option<f64>) -> Row {
        let tol = match (bound, tolerance) {
            (Bound::Max, Some(t)) => Some(t * self.tolerance_scale),
            (_, t) => t,
        };
        let pass = match (bound, tol) {
            (Bound::Max, Some(t)) => value <= t,
            (Bound::Min, Some(t)) => value > t,
            _ => true,
        };
        Row {
            experiment: self.experiment.clone(),
            a: self.params.map(|p| p.a),
            kappa: self.params.map(|p| p.kappa),
            mass: self.params.map(|p| p.mass),
            lattice: self.lattice.clone(),
            quantity: quantity.to_string(),
            value_re: value,
            value_im: 0.0,
            bound,
            tolerance: tol,
            pass,
            beta: None,
            scale_s: None,
            defect: None,
            slope: None,
            tolerance_scale: self.tolerance_scale,
        }
    }

    /// Adds a row and returns it for optional decoration.
    pub fn check(&mut self, quantity: &str, value: f64, bound: Bound, tolerance: f64) -> &mut Row {
        let row = self.base(quantity, value, bound, Some(tolerance));
        self.rows.push(row);
        self.rows.last_mut().expect("just pushed")
    }

    pub fn info(&mut self, quantity: &str, value_re: f64, value_im: f64) -> &mut Row {
        let mut row = self.base(quantity, value_re, Bound::Info, None);
        row.value_im = value_im;
        self.rows.push(row);
        self.rows.last_mut().expect("just pushed")
    }

    /// `schema=1`, the column header, then one line per row.
    pub fn to_csv(&self) -> String {
        let mut s = format!("{SCHEMA}\n{}\n", COLUMNS.join(","));
        let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
        for r in &self.rows {
            let beta = r
                .beta
                .map(|b| b.iter().map(|x| num(*x)).collect::<Vec<_>>().join(";"))
                .unwrap_or_default();
            let bound = match r.bound {
                Bound::Max => "max",
                Bound::Min => "min",
                Bound::Info => "info",
            };
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.experiment,
                opt(r.a),
                opt(r.kappa),
                opt(r.mass),
                quote(&r.lattice.clone().unwrap_or_default()),
                quote(&r.quantity),
                num(r.value_re),
                num(r.value_im),
                bound,
                opt(r.tolerance),
                r.pass,
                beta,
                opt(r.scale_s),
                opt(r.defect),
                opt(r.slope),
                num(r.tolerance_scale),
            );
        }
        s
    }

    pub fn to_json(&self) -> String {
        let v = serde_json::json!({
            "schema": 1,
            "experiment": self.experiment,
            "tolerance_scale": self.tolerance_scale,
            "pass": self.passed(),
            "rows": self.rows,
        });
        serde_json::to_string_pretty(&v).expect("plain data")
    }
}

/// Shortest round-trip form, in exponent notation outside `[1e-4, 1e15)`.
fn num(x: f64) -> String {
    let m = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&m) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

fn quote(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout_and_verdicts() {
        let p = InnerParams::new(0.5, 1.0, 2.0).unwrap();
        let mut r = Report::new("continuity", 10.0).with_params(&p).with_lattice(&Lattice::new(1, 16, 2.0).unwrap());
        r.check("residual", 5e-8, Bound::Max, 1e-8);
        r.check("defect", 1e-4, Bound::Min, 1e-3).beta = Some([0.5, 0.0, 0.0]);
        r.info("charge", 1.0, -0.5).slope = Some(-2.0);
        let csv = r.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "schema=1");
        assert_eq!(lines[1].split(',').count(), COLUMNS.len());
        assert_eq!(lines[2].split(',').count(), COLUMNS.len() + 2);
        assert!(lines[2].starts_with("continuity,0.5,1,2,\"1,16,2\",residual,"));
        assert_eq!(r.rows()[0].tolerance, Some(1e-7));
        assert!(r.rows()[0].pass);
        assert!(!r.rows()[1].pass);
        assert!(lines[3].contains(",0.5;0;0,"));
        assert!(lines[2].contains(",5e-8,"));
        assert_eq!(num(1e-12), "1e-12");
        assert_eq!(num(0.25), "0.25");
        assert!(!r.passed());
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["schema"], 1);
        assert_eq!(v["rows"].as_array().unwrap().len(), 3);
    }
}
