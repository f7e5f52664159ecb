//! Gamma and modified Bessel K, plus a fixed Gauss-Legendre rule.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{KgError, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Lanczos approximation with reflection for `x < 1/2`.
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma(1.0 - x));
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
}

/// `K_nu(z) = int_0^inf exp(-z cosh t) cosh(nu t) dt`, trapezoid rule on the even,
/// doubly exponentially decaying integrand, truncated once it falls below
/// `1e-18` of its peak.
pub fn bessel_k(nu: f64, z: f64) -> Result<f64> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(KgError::NonPositiveArgument(z));
    }
    let nu = nu.abs();
    let log_f = |t: f64| -z * t.cosh() + nu * t + (0.5 * (1.0 + (-2.0 * nu * t).exp())).ln();
    // peak of -z cosh t + nu t sits at sinh t = nu / z
    let t_peak = (nu / z).asinh();
    let log_peak = log_f(t_peak).max(log_f(0.0));
    let cutoff = log_peak + (1e-18f64).ln();
    let h = 0.02;
    let mut sum = 0.5 * log_f(0.0).exp();
    let mut t = h;
    loop {
        let lf = log_f(t);
        sum += lf.exp();
        if t > t_peak && lf < cutoff {
            break;
        }
        t += h;
        if t > 1e3 {
            return Err(KgError::Quadrature(format!("K_{nu}({z}) did not terminate")));
        }
    }
    Ok(sum * h)
}

const GL_ORDER: usize = 20;

/// Nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
pub(crate) fn gauss_legendre() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_ORDER;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
        }
        out
    })
}
