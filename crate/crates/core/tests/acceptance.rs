//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::f64::consts::PI;
use std::time::Instant;

use kgfield::currents::{self, CurrentKind};
use kgfield::em_background::{self, EMConfig};
use kgfield::gauge_symmetry::{self, GaugeAction, GaugeElement, GroupKind, GroupParam, RationalParam};
use kgfield::hilbert_space as hs;
use kgfield::localization;
use kgfield::mode_engine::{self as me, ChargeParity, FourVector, LorentzBoost, ModeField, SpacetimePoint, C64};
use kgfield::random;
use kgfield::spectral_grid::{self as sg, GridState, Lattice};
use kgfield::InnerParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

struct Checks {
    notes: Vec<String>,
    failures: Vec<String>,
}

impl Checks {
    fn new() -> Self {
        Checks {
            notes: Vec::new(),
            failures: Vec::new(),
        }
    }

    fn max(&mut self, what: &str, value: f64, tol: f64) {
        let line = format!("{what} {value:.2e} <= {tol:.0e}");
        if value <= tol {
            self.notes.push(line);
        } else {
            self.failures.push(line);
        }
    }

    fn min(&mut self, what: &str, value: f64, tol: f64) {
        let line = format!("{what} {value:.2e} > {tol:.0e}");
        if value > tol {
            self.notes.push(line);
        } else {
            self.failures.push(line);
        }
    }

    fn runtime(&mut self, start: Instant, limit: f64) {
        let t = start.elapsed().as_secs_f64();
        self.max("runtime_s", t, limit);
    }

    fn done(self) -> Outcome {
        if self.failures.is_empty() {
            Ok(self.notes.join("; "))
        } else {
            Err(format!("{} | ok: {}", self.failures.join("; "), self.notes.join("; ")))
        }
    }
}

fn rel(d: f64, scale: f64) -> f64 {
    if scale == 0.0 {
        d
    } else {
        d / scale
    }
}

fn dot(p: &[f64; 4], q: &[f64; 4]) -> f64 {
    -p[0] * q[0] + p[1] * q[1] + p[2] * q[2] + p[3] * q[3]
}

fn max_abs(v: &[C64]) -> f64 {
    v.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

fn site(lat: &Lattice, i: usize, x0: f64) -> SpacetimePoint {
    SpacetimePoint::new(x0, lat.position(i))
}

/// Bound on the individual terms of a divergence of a mode-sum current.
fn divergence_scale(f: &ModeField, p: &InnerParams) -> f64 {
    let s: f64 = f.modes().iter().map(|m| m.amplitude.norm() * m.omega(f.mass())).sum();
    p.kappa / p.mass * (1.0 + p.a.abs()) * s * s
}

/// Plane-wave sum evaluated from scratch: `sum c e^{i(-eps w x0 + k.x)}` and its time derivative.
fn direct_field(f: &ModeField, x: &SpacetimePoint) -> (C64, C64) {
    let xv = x.to_array();
    let mut v = C64::new(0.0, 0.0);
    let mut d = C64::new(0.0, 0.0);
    for m in f.modes() {
        let k = m.four_momentum(f.mass());
        let e = m.amplitude * C64::from_polar(1.0, dot(&k, &xv));
        v += e;
        d += e * C64::new(0.0, -k[0]);
    }
    (v, d)
}

/// `(psi, psi)_a` of a boxed mode sum: `kappa L^d / M sum |c|^2 (1 + a eps) w`.
fn box_norm(f: &ModeField, p: &InnerParams, dims: usize) -> f64 {
    let v = f.box_length().powi(dims as i32);
    f.modes()
        .iter()
        .map(|m| m.amplitude.norm_sqr() * (1.0 + p.a * m.eps.sign()) * m.omega(f.mass()))
        .sum::<f64>()
        * p.kappa
        * v
        / p.mass
}

/// Two positive-energy plane waves: `(J, script J, d script J)` in closed form.
fn two_mode_closed(f: &ModeField, p: &InnerParams, x: &SpacetimePoint) -> ([f64; 4], [f64; 4], f64) {
    let [m1, m2] = f.modes() else { panic!("two modes") };
    let mass = f.mass();
    let (k1, k2) = (m1.four_momentum(mass), m2.four_momentum(mass));
    let (w1, w2) = (k1[0], k2[0]);
    let xv = x.to_array();
    let z = m1.amplitude * m2.amplitude.conj() * C64::from_polar(1.0, dot(&k1, &xv) - dot(&k2, &xv));
    let pre = p.kappa * (1.0 + p.a) / mass;
    let (n1, n2) = (m1.amplitude.norm_sqr(), m2.amplitude.norm_sqr());
    let mut j = [0.0; 4];
    let mut script = [0.0; 4];
    for mu in 0..4 {
        let big_k = (w2 / w1).sqrt() * k1[mu] + (w1 / w2).sqrt() * k2[mu];
        j[mu] = pre * (n1 * k1[mu] + n2 * k2[mu] + z.re * (k1[mu] + k2[mu]));
        script[mu] = pre * (n1 * k1[mu] + n2 * k2[mu] + z.re * big_k);
    }
    let div = (mass * mass + dot(&k1, &k2)) * ((w1 / w2).sqrt() - (w2 / w1).sqrt()) * (-pre * z.im);
    (j, script, div)
}

/// `d_mu J^mu` by fourth-order central differences of the mode-engine current.
fn fd_divergence(f: &ModeField, p: &InnerParams, x: &SpacetimePoint, h: f64) -> C64 {
    let mut total = C64::new(0.0, 0.0);
    for mu in 0..4 {
        let at = |s: f64| {
            let mut v = x.to_array();
            v[mu] += s;
            me::eval_j(f, p, &SpacetimePoint::from_array(v)).unwrap().0[mu]
        };
        total += (at(-2.0 * h) - 8.0 * at(-h) + 8.0 * at(h) - at(2.0 * h)) / (12.0 * h);
    }
    total
}

fn random_params(rng: &mut ChaCha8Rng, mass: f64) -> InnerParams {
    InnerParams::new(rng.random_range(-0.9..0.9), rng.random_range(0.5..2.0), mass).unwrap()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut c = Checks::new();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let lat = Lattice::new(3, 16, 5.0).unwrap();
    let (mut worst, mut fd_worst) = (0.0f64, 0.0f64);
    for seed in 0..100u64 {
        let mass = rng.random_range(0.5..2.0);
        let f = random::random_mode_field(&lat, mass, seed, 1 + (seed % 8) as usize).unwrap();
        let p = random_params(&mut rng, mass);
        let scale = divergence_scale(&f, &p);
        for k in 0..4 {
            let x = SpacetimePoint::new(
                rng.random_range(-3.0..3.0),
                std::array::from_fn(|_| rng.random_range(0.0..5.0)),
            );
            let d = me::div_j(&f, &p, &x).unwrap();
            worst = worst.max(rel(d.norm(), scale));
            if k == 0 && seed % 10 == 0 {
                fd_worst = fd_worst.max(rel((fd_divergence(&f, &p, &x, 1e-3) - d).norm(), scale));
            }
        }
    }
    c.max("mode_div_J/scale(100 fields)", worst, 1e-12);
    c.max("mode_div_J_vs_finite_difference", fd_worst, 1e-8);
    let mut grid = 0.0f64;
    for (lat, count) in [(Lattice::new(1, 256, 12.0).unwrap(), 10), (Lattice::new(3, 32, 6.0).unwrap(), 10)] {
        for seed in 0..count {
            let mass = 0.8 + 0.1 * seed as f64;
            let s = random::random_state(&lat, mass, 100 + seed, 8).unwrap();
            let p = InnerParams::new(-0.6 + 0.13 * seed as f64, 1.0, mass).unwrap();
            let r = currents::continuity_residual(&s, &p, CurrentKind::Conserved, sg::default_step(mass)).unwrap();
            grid = grid.max(r);
        }
    }
    c.max("grid_residual_J(20 states)", grid, 1e-8);
    c.runtime(start, 60.0);
    c.done()
}

fn criterion_2() -> Outcome {
    let mut c = Checks::new();
    let lat = Lattice::new(2, 32, 8.0).unwrap();
    let f = ModeField::from_indices(
        1.0,
        8.0,
        [
            (C64::new(1.0, 0.0), [1, 0, 0], ChargeParity::Positive),
            (C64::new(0.6, -0.4), [-2, 1, 0], ChargeParity::Positive),
        ],
    )
    .unwrap();
    let (mut grid_err, mut mode_err, mut j_err, mut script_err, mut size) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for a in [-0.5, 0.0, 0.7] {
        let p = InnerParams::new(a, 1.3, 1.0).unwrap();
        let s = sg::sample(&f, &lat).unwrap();
        let div = currents::divergence_field(&s, &p, CurrentKind::Probability, 1e-3).unwrap();
        let mut scale = 0.0f64;
        let mut mode_abs = 0.0f64;
        let mut pairs = Vec::new();
        for i in 0..lat.len() {
            let x = site(&lat, i, 0.0);
            let (j, script, closed) = two_mode_closed(&f, &p, &x);
            scale = scale.max(closed.abs());
            pairs.push((div[i], closed));
            if i % 7 == 0 {
                mode_abs = mode_abs.max((me::div_j_script(&f, &p, &x).unwrap() - closed).abs());
                let ej = me::eval_j(&f, &p, &x).unwrap();
                let es = me::eval_j_script(&f, &p, &x).unwrap();
                let js = j.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                for mu in 0..4 {
                    j_err = j_err.max(rel((ej.0[mu] - j[mu]).norm(), js));
                    script_err = script_err.max(rel((es.0[mu] - script[mu]).norm(), js));
                }
            }
        }
        for (g, e) in pairs {
            grid_err = grid_err.max(rel((g - e).norm(), scale));
        }
        mode_err = mode_err.max(rel(mode_abs, scale));
        size = size.max(rel(scale, divergence_scale(&f, &p)));
    }
    c.max("grid_div_script_J_vs_closed_form", grid_err, 1e-6);
    c.max("mode_div_script_J_vs_closed_form", mode_err, 1e-12);
    c.min("|div_script_J|/scale", size, 1e-3);
    c.max("J_vs_closed_form", j_err, 1e-12);
    c.max("script_J_vs_closed_form", script_err, 1e-12);
    c.done()
}

fn boost_vector(lambda: &LorentzBoost, v: &FourVector) -> [C64; 4] {
    let m = lambda.matrix();
    std::array::from_fn(|mu| (0..4).map(|nu| v.0[nu] * m[mu][nu]).sum())
}

fn criterion_3() -> Outcome {
    let mut c = Checks::new();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let lat = Lattice::new(3, 16, 5.0).unwrap();
    let (mut dj, mut ds_min, mut ds_len) = (0.0f64, f64::INFINITY, 0usize);
    for seed in 0..20u64 {
        let mass = rng.random_range(0.5..1.5);
        let f = random::random_mode_field(&lat, mass, 300 + seed, 2 + (seed % 6) as usize).unwrap();
        let p = random_params(&mut rng, mass);
        let speed = rng.random_range(0.2..0.8);
        let dir: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let n = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
        let lambda = LorentzBoost::new(dir.map(|d| speed * d / n)).unwrap();
        let boosted = me::boost(&f, &lambda);
        let (mut ej, mut es, mut sj, mut ss) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for _ in 0..6 {
            let x = SpacetimePoint::new(rng.random_range(-2.0..2.0), std::array::from_fn(|_| rng.random_range(0.0..5.0)));
            let xb = lambda.apply_point(&x);
            let j = me::eval_j(&f, &p, &x).unwrap();
            let s = me::eval_j_script(&f, &p, &x).unwrap();
            let jb = me::eval_j(&boosted, &p, &xb).unwrap();
            let sb = me::eval_j_script(&boosted, &p, &xb).unwrap();
            let (pj, ps) = (boost_vector(&lambda, &j), boost_vector(&lambda, &s));
            for mu in 0..4 {
                ej = ej.max((jb.0[mu] - pj[mu]).norm());
                es = es.max((sb.0[mu] - ps[mu]).norm());
            }
            sj = sj.max(j.max_abs());
            ss = ss.max(s.max_abs());
        }
        dj = dj.max(rel(ej, sj));
        let omegas: Vec<f64> = f.modes().iter().map(|m| m.omega(mass)).collect();
        if omegas.iter().any(|w| *w != omegas[0]) {
            ds_min = ds_min.min(rel(es, ss));
            ds_len += 1;
        }
    }
    c.max("J_covariance_defect(20 pairs)", dj, 1e-12);
    c.min(&format!("min script_J_defect/scale({ds_len} pairs with w1!=w2)"), ds_min, 1e-3);

    let mass = 1.0;
    let on_shell = |k: [f64; 3]| [(k[0] * k[0] + k[1] * k[1] + k[2] * k[2] + mass * mass).sqrt(), k[0], k[1], k[2]];
    let (k1, k2) = (on_shell([0.3, 0.0, 0.1]), on_shell([-0.8, 0.6, 0.0]));
    let kk = |a: [f64; 4], b: [f64; 4]| {
        let big: [f64; 4] = std::array::from_fn(|mu| (b[0] / a[0]).sqrt() * a[mu] + (a[0] / b[0]).sqrt() * b[mu]);
        let direct = dot(&big, &big);
        let closed = 2.0 * dot(&a, &b) - mass * mass * (b[0] / a[0] + a[0] / b[0]);
        let lib = me::k_invariant(&FourVector::from_real(a), &FourVector::from_real(b), mass).unwrap();
        (direct, closed, lib)
    };
    let (rest, rest_closed, rest_lib) = kk(k1, k2);
    let lambda = LorentzBoost::new([0.6, 0.0, 0.0]).unwrap();
    let (moved, moved_closed, moved_lib) = kk(lambda.apply_real(k1), lambda.apply_real(k2));
    let formula = rel((rest - rest_closed).abs(), rest.abs()).max(rel((moved - moved_closed).abs(), moved.abs()));
    let lib = rel((rest - rest_lib).abs(), rest.abs()).max(rel((moved - moved_lib).abs(), moved.abs()));
    c.max("KK_contraction_vs_closed_form", formula.max(lib), 1e-12);
    c.min("KK_frame_change", rel((moved - rest).abs(), rest.abs()), 1e-3);
    c.done()
}

fn criterion_4() -> Outcome {
    let mut c = Checks::new();
    let lat = Lattice::new(1, 64, 8.0).unwrap();
    let (mut min_norm, mut decomposition, mut drift, mut boosted, mut oracle) =
        (f64::INFINITY, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let fields: Vec<ModeField> = (0..50u64)
        .map(|seed| random::random_mode_field(&lat, 1.1, 400 + seed, 1 + (seed % 6) as usize).unwrap())
        .collect();
    let lambda = LorentzBoost::new([-0.7, 0.0, 0.0]).unwrap();
    for a in [-0.9, -0.5, 0.0, 0.5, 0.9] {
        let p = InnerParams::new(a, 1.0, 1.1).unwrap();
        for (k, f) in fields.iter().enumerate() {
            let s = sg::sample(f, &lat).unwrap();
            let t = sg::sample(&fields[(k + 7) % fields.len()], &lat).unwrap();
            let n = hs::ip_a(&s, &s, &p).unwrap();
            min_norm = min_norm.min(n.re);
            oracle = oracle.max(rel((n.re - box_norm(f, &p, 1)).abs(), n.re));
            let v = hs::ip_a(&s, &t, &p).unwrap();
            let parts = (hs::ip_plain(&s, &t).unwrap() + hs::ip_kg(&s, &t, 0.5 / p.mass).unwrap() * a) * p.kappa;
            decomposition = decomposition.max(rel((v - parts).norm(), n.norm()));
            let later = hs::ip_a(&s.evolve(1.0), &t.evolve(1.0), &p).unwrap();
            drift = drift.max(rel((later - v).norm(), n.norm()));
            if k % 5 == 0 {
                let flux = me::ip_a_flux(f, &p, &lambda, 0.3, 1).unwrap();
                boosted = boosted.max(rel((flux - box_norm(f, &p, 1)).abs(), n.re));
            }
        }
    }
    c.min("min ip_a(s,s)(5 a x 50 states)", min_norm, 0.0);
    c.max("ip_a_vs_mode_sum", oracle, 1e-12);
    c.max("decomposition_identity", decomposition, 1e-14);
    c.max("drift_per_unit_time", drift, 1e-12);
    c.max("boosted_frame_invariance", boosted, 1e-12);
    c.done()
}

fn criterion_5() -> Outcome {
    let mut c = Checks::new();
    let lat = Lattice::new(2, 16, 4.0).unwrap();
    let (mut unitary, mut trip, mut transport) = (0.0f64, 0.0f64, 0.0f64);
    for a in [-0.9, -0.5, 0.0, 0.5, 0.9] {
        let p = InnerParams::new(a, 1.4, 0.9).unwrap();
        let p0 = p.with_a(0.0).unwrap();
        let states: Vec<GridState> =
            (0..20u64).map(|seed| random::random_state(&lat, 0.9, 500 + seed, 5).unwrap()).collect();
        for (k, s) in states.iter().enumerate() {
            let t = &states[(k + 1) % states.len()];
            let scale = hs::ip_a(s, s, &p).unwrap().norm();
            let us = hs::map_u_a(s, &p, 0.0).unwrap();
            let ut = hs::map_u_a(t, &p, 0.0).unwrap();
            unitary = unitary.max(rel((us.inner(&ut).unwrap() - hs::ip_a(s, t, &p).unwrap()).norm(), scale));
            trip = trip.max(rel(hs::map_u_inverse(&us, &p, 0.0, 0.0).unwrap().max_difference(s), s.max_abs()));
            let rho = hs::rho_a(s, &p).unwrap();
            let rho0 = hs::rho_a(&hs::transport(s, &p).unwrap(), &p0).unwrap();
            let rmax = rho.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let d = rho.iter().zip(&rho0).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            transport = transport.max(rel(d, rmax));
        }
    }
    c.max("U_a_unitarity", unitary, 1e-12);
    c.max("U_a_round_trip", trip, 1e-12);
    c.max("rho_0(transport)=rho_a", transport, 1e-12);
    c.done()
}

fn criterion_6() -> Outcome {
    let mut c = Checks::new();
    let lat = Lattice::new(2, 16, 5.0).unwrap();
    let (mut three, mut drift) = (0.0f64, 0.0f64);
    for seed in 0..10u64 {
        let p = InnerParams::new(-0.8 + 0.17 * seed as f64, 0.7 + 0.1 * seed as f64, 1.2).unwrap();
        let f = random::random_mode_field(&lat, 1.2, 600 + seed, 6).unwrap();
        let s = sg::sample(&f, &lat).unwrap();
        let rho = hs::total_probability(&s, &p).unwrap();
        let j0 = currents::current_j(&s, &p).unwrap().time_integral();
        let ip = hs::ip_a(&s, &s, &p).unwrap();
        let exact = box_norm(&f, &p, 2);
        for v in [rho, j0.re, ip.re] {
            three = three.max(rel((v - exact).abs(), exact));
        }
        three = three.max(rel(j0.im.abs(), exact));
        let mut state = s.clone();
        for _ in 0..100 {
            state = state.evolve(0.07);
            drift = drift.max(rel((hs::total_probability(&state, &p).unwrap() - rho).abs(), rho));
        }
    }
    c.max("int_rho=int_J0=ip_a", three, 1e-12);
    c.max("drift_100_steps", drift, 1e-12);
    c.done()
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let mut c = Checks::new();
    let base = ModeField::new(
        1.0,
        1.0,
        false,
        vec![
            me::ModeSpec::new(C64::new(1.0, 0.0), [0.9, 0.2, 0.0], ChargeParity::Positive),
            me::ModeSpec::new(C64::new(0.6, -0.3), [-0.4, 0.7, 0.0], ChargeParity::Positive),
        ],
    )
    .unwrap();
    let scales = [2.0, 4.0, 8.0, 16.0, 32.0];
    let points = currents::default_nonrel_points(2);
    for a in [-0.5, 0.0, 0.3] {
        let p = InnerParams::nonrelativistic(a, 1.0).unwrap();
        let t = currents::nonrel_limit_scan(&base, &p, &scales, &points).unwrap();
        c.max(&format!("|slope_J+2|(a={a})"), (t.slope_j + 2.0).abs(), 0.1);
        c.max(&format!("|slope_script_J+2|(a={a})"), (t.slope_script + 2.0).abs(), 0.1);
    }
    c.runtime(start, 30.0);
    c.done()
}

fn criterion_8() -> Outcome {
    let mut c = Checks::new();
    let p = InnerParams::new(0.0, 1.0, 1.3).unwrap();
    let mrs: Vec<f64> = (0..=12).map(|k| 0.1 * 100f64.powf(k as f64 / 12.0)).collect();
    let worst = localization::nw_comparison(&p, &mrs)
        .unwrap()
        .iter()
        .map(|r| r.rel_err)
        .fold(0.0, f64::max);
    c.max("closed_form_vs_quadrature(Mr in [0.1,10])", worst, 1e-8);

    let lat = Lattice::new(1, 16, 4.0).unwrap();
    let pa = InnerParams::new(0.4, 1.2, 1.3).unwrap();
    let w = 1.0 / lat.cell_volume();
    let mut basis = Vec::new();
    for eps in ChargeParity::BOTH {
        for i in 0..lat.len() {
            basis.push((eps, i, localization::localized_basis_grid(&lat, &pa, eps, &lat.position(i), 0.0).unwrap()));
        }
    }
    let (mut ortho, mut parity) = (0.0f64, 0.0f64);
    for (e1, i1, s1) in &basis {
        for (e2, i2, s2) in &basis {
            let expect = if e1 == e2 && i1 == i2 { w } else { 0.0 };
            ortho = ortho.max((hs::ip_a(s1, s2, &pa).unwrap() - expect).norm() / w);
        }
        let cc = sg::charge_conjugate_grid(s1);
        parity = parity.max(rel(cc.add_scaled(s1, C64::new(-e1.sign(), 0.0)).unwrap().max_abs(), s1.max_abs()));
    }
    let target = random::random_state(&lat, 1.3, 8, 5).unwrap();
    let mut rebuilt = GridState::zero(lat, 1.3, 0.0).unwrap();
    for (_, _, b) in &basis {
        rebuilt = rebuilt.add_scaled(b, hs::ip_a(b, &target, &pa).unwrap() * lat.cell_volume()).unwrap();
    }
    c.max("basis_orthonormality", ortho, 1e-11);
    c.max("basis_completeness", rel(rebuilt.max_difference(&target), target.max_abs()), 1e-11);
    c.max("C_parity", parity, 1e-12);

    let plat = Lattice::new(1, 256, 80.0).unwrap();
    let mut nw = 0.0f64;
    for (center, width, k0) in [(40.0, 2.5, 0.7), (35.0, 3.0, -0.4), (45.0, 2.0, 0.0)] {
        let psi: Vec<C64> = (0..plat.len())
            .map(|i| {
                let x = plat.position(i)[0] - center;
                C64::from_polar((-(x * x) / (2.0 * width * width)).exp(), k0 * x)
            })
            .collect();
        let pd: Vec<C64> = sg::apply_d_power(&psi, &plat, 1.3, 0.5)
            .unwrap()
            .iter()
            .zip(&psi)
            .map(|(r, v)| r * C64::new(0.0, -1.0) + v * 0.2)
            .collect();
        let s = GridState::new(plat, 1.3, 0.0, psi, pd).unwrap();
        nw = nw.max(localization::nw_initial_condition_defect(&s, &pa, 0.0, 0).unwrap());
    }
    c.max("newton_wigner_initial_condition", nw, 1e-6);
    c.done()
}

fn criterion_9() -> Outcome {
    let mut c = Checks::new();
    let lat = Lattice::new(2, 16, 5.0).unwrap();
    let thetas = [0.0, 0.4, 1.0, PI / 2.0, 2.2, PI, 4.0, 9.3];
    let (mut ip, mut prob, mut pure, mut rotation, mut mixed) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut generator = 0.0f64;
    for seed in 0..5u64 {
        let a = -0.7 + 0.3 * seed as f64;
        let p = InnerParams::new(a, 1.0, 1.0).unwrap();
        let s = random::random_state(&lat, 1.0, 700 + seed, 6).unwrap();
        let t = random::random_state(&lat, 1.0, 800 + seed, 6).unwrap();
        let n = hs::ip_a(&s, &t, &p).unwrap();
        let scale = hs::ip_a(&s, &s, &p).unwrap().re;
        let tp = hs::total_probability(&s, &p).unwrap();
        let plus = s.energy_project(ChargeParity::Positive);
        let minus = s.energy_project(ChargeParity::Negative);
        let jp = currents::current_j(&plus, &p).unwrap();
        let jm = currents::current_j(&minus, &p).unwrap();
        let j = currents::current_j(&s, &p).unwrap();
        let cross: Vec<Vec<C64>> = (0..4)
            .map(|mu| (0..lat.len()).map(|i| j.components[mu][i] - jp.components[mu][i] - jm.components[mu][i]).collect())
            .collect();
        let jscale = j.max_abs();
        // cross terms B_{+-} e^{2i theta} + B_{-+} e^{-2i theta}; theta = pi/4 isolates i(B_{+-} - B_{-+})
        let quarter = currents::current_j(&s.gauge_apply(&GaugeElement::new(PI / 4.0, a).unwrap()), &p).unwrap();
        for theta in thetas {
            let g = GaugeElement::new(theta, a).unwrap();
            let gs = s.gauge_apply(&g);
            ip = ip.max(rel((hs::ip_a(&gs, &t.gauge_apply(&g), &p).unwrap() - n).norm(), scale));
            prob = prob.max(rel((hs::total_probability(&gs, &p).unwrap() - tp).abs(), tp));
            for (q, jq) in [(&plus, &jp), (&minus, &jm)] {
                let moved = currents::current_j(&q.gauge_apply(&g), &p).unwrap();
                pure = pure.max(rel(moved.max_difference(jq), jscale));
            }
            let moved = currents::current_j(&gs, &p).unwrap();
            mixed = mixed.max(rel(moved.max_difference(&j), jscale));
            let (co, si) = ((2.0 * theta).cos(), (2.0 * theta).sin());
            for mu in 0..4 {
                for i in 0..lat.len() {
                    let x1 = cross[mu][i];
                    let x2 = quarter.components[mu][i] - jp.components[mu][i] - jm.components[mu][i];
                    let predicted = jp.components[mu][i] + jm.components[mu][i] + x1 * co + x2 * si;
                    rotation = rotation.max(rel((moved.components[mu][i] - predicted).norm(), jscale));
                }
            }
        }
        generator = generator.max(gauge_symmetry::generator_check(&s, a, 1e-6).unwrap());
    }
    c.max("ip_a_invariance", ip, 1e-12);
    c.max("total_probability_invariance", prob, 1e-12);
    c.max("pointwise_J_invariance(sector-pure)", pure, 1e-12);
    c.max("mixed_J_cross_terms_rotate_by_e^{+-2i theta}", rotation, 1e-12);
    c.notes.push(format!(
        "note: mixed-sector J is not pointwise invariant (max change {mixed:.2e}); cross terms rotate as predicted"
    ));
    c.max("generator_defect(dtheta=1e-6)", generator, 1e-5);

    for (m, n) in [(1i64, 2u64), (-1, 3), (2, 5), (3, 7), (-5, 9)] {
        let param = GroupParam::Rational(RationalParam::new(m, n).unwrap());
        let cl = gauge_symmetry::classify_group(&param).unwrap();
        let expected = 2.0 * PI * n as f64;
        let period_ok = cl.group == GroupKind::U1 && cl.period == Some(expected);
        let g = GaugeElement::new(expected, m as f64 / n as f64).unwrap();
        let d = gauge_symmetry::distance_to_identity(&gauge_symmetry::group_matrix(&g));
        if period_ok {
            c.max(&format!("U1(a={m}/{n}) |g(2 pi n) - 1|"), d, 1e-9);
        } else {
            c.failures.push(format!("a={m}/{n}: {:?} period {:?}", cl.group, cl.period));
        }
    }
    for x in [std::f64::consts::FRAC_1_SQRT_2, PI - 3.0] {
        let cl = gauge_symmetry::classify_group(&GroupParam::irrational(x).unwrap()).unwrap();
        let scan = cl.scan.unwrap();
        if cl.group == GroupKind::RPlus {
            c.min(&format!("R+(a~{x:.4}) scan min distance over {} candidates", scan.candidates), scan.min_distance, gauge_symmetry::IDENTITY_TOLERANCE);
        } else {
            c.failures.push(format!("a~{x}: {:?}", cl.group));
        }
    }
    c.done()
}

fn criterion_10() -> Outcome {
    let start = Instant::now();
    let mut c = Checks::new();
    let mass = 0.9;
    let p = InnerParams::new(0.35, 1.0, mass).unwrap();
    let (mut lowest, mut reduction, mut drift) = (f64::INFINITY, 0.0f64, 0.0f64);
    for (lat, seed) in [(Lattice::new(1, 512, 10.0).unwrap(), 1u64), (Lattice::new(2, 32, 6.0).unwrap(), 2)] {
        let em = em_background::random_smooth_potential(&lat, 1.4, seed);
        let op = em_background::build_dq(&lat, mass, &em).unwrap();
        let eig = op.eigenvalues().unwrap();
        lowest = lowest.min(eig.iter().copied().fold(f64::INFINITY, f64::min) - mass * mass);

        let s = random::random_state(&lat, mass, 900 + seed, 6).unwrap();
        let free = em_background::build_dq(&lat, mass, &EMConfig { q: 0.0, ..em.clone() }).unwrap();
        for alpha in [1.0, 0.5, -0.25] {
            let dense = em_background::dq_power_apply(&free, alpha, s.psi()).unwrap();
            let spectral = sg::apply_d_power(s.psi(), &lat, mass, alpha).unwrap();
            let d = dense.iter().zip(&spectral).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
            reduction = reduction.max(rel(d, max_abs(&spectral)));
        }
        let ip_free = em_background::ip_a_magnetic(&s, &s, &p, &free).unwrap();
        let ip_grid = hs::ip_a(&s, &s, &p).unwrap();
        reduction = reduction.max(rel((ip_free - ip_grid).norm(), ip_grid.norm()));
        let evolved = em_background::evolve_magnetic(&s, 0.8, &free).unwrap();
        reduction = reduction.max(rel(evolved.max_difference(&s.evolve(0.8)), s.max_abs()));

        let start_ip = em_background::ip_a_magnetic(&s, &s, &p, &op).unwrap();
        let mut state = s.clone();
        for _ in 0..40 {
            state = em_background::evolve_magnetic(&state, 0.15, &op).unwrap();
            let now = em_background::ip_a_magnetic(&state, &state, &p, &op).unwrap();
            drift = drift.max(rel((now - start_ip).norm(), start_ip.norm()));
        }
    }
    c.min("min eig(D_q) - M^2 (1D N=512, 2D N=32)", lowest, -1e-9);
    c.max("q=0_reduction", reduction, 1e-11);
    c.max("ip_a_magnetic_drift", drift, 1e-11);
    c.runtime(start, 120.0);
    c.done()
}

fn criterion_11() -> Outcome {
    let mut c = Checks::new();
    let suite = [
        (Lattice::new(1, 64, 7.0).unwrap(), 0.7),
        (Lattice::new(2, 16, 4.0).unwrap(), 1.0),
        (Lattice::new(3, 16, 5.0).unwrap(), 1.6),
    ];
    let (mut field, mut current, mut script, mut density, mut inner) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for (lat, mass) in suite {
        for seed in 0..4u64 {
            let p = InnerParams::new(-0.6 + 0.4 * seed as f64, 0.8 + 0.3 * seed as f64, mass).unwrap();
            let f = random::random_mode_field(&lat, mass, 1000 + seed, 2 + 2 * seed as usize).unwrap();
            let g = random::random_mode_field(&lat, mass, 1100 + seed, 3).unwrap();
            let x0 = 0.37 * seed as f64;
            let s = sg::sample_at(&f, &lat, x0).unwrap();
            let t = sg::sample_at(&g, &lat, x0).unwrap();
            let j = currents::current_j(&s, &p).unwrap();
            let sj = currents::current_j_script(&s, &p).unwrap();
            let rho = hs::rho_a(&s, &p).unwrap();
            let (fs, js, ss) = (s.max_abs(), j.max_abs(), sj.max_abs());
            for i in (0..lat.len()).step_by((lat.len() / 512).max(1)) {
                let x = site(&lat, i, x0);
                let (v, d) = direct_field(&f, &x);
                field = field.max(rel((s.psi()[i] - v).norm().max((s.psidot()[i] - d).norm() / mass), fs));
                let ej = me::eval_j(&f, &p, &x).unwrap();
                let es = me::eval_j_script(&f, &p, &x).unwrap();
                for mu in 0..4 {
                    current = current.max(rel((j.components[mu][i] - ej.0[mu]).norm(), js));
                    script = script.max(rel((sj.components[mu][i] - es.0[mu]).norm(), ss));
                }
                density = density.max(rel((rho[i] - es.0[0].re).abs(), ss));
            }
            let scale = box_norm(&f, &p, lat.dims());
            let mode_ip = me::ip_a_box(&f, &g, &p, lat.dims()).unwrap();
            inner = inner
                .max(rel((hs::ip_a(&s, &t, &p).unwrap() - mode_ip).norm(), scale))
                .max(rel((hs::ip_a(&s, &s, &p).unwrap().re - scale).abs(), scale));
        }
    }
    c.max("fields", field, 1e-11);
    c.max("J", current, 1e-11);
    c.max("script_J", script, 1e-11);
    c.max("rho_a", density, 1e-11);
    c.max("inner_products", inner, 1e-11);
    c.done()
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("conservation of J", criterion_1),
        ("non-conservation of script J", criterion_2),
        ("covariance dichotomy", criterion_3),
        ("inner-product family", criterion_4),
        ("unitary maps", criterion_5),
        ("total-probability identity", criterion_6),
        ("nonrelativistic limit", criterion_7),
        ("localized states", criterion_8),
        ("gauge symmetry", criterion_9),
        ("magnetic coupling", criterion_10),
        ("oracle equivalence", criterion_11),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let id = k + 1;
        if !filter.is_empty() && !filter.iter().any(|f| f == &id.to_string()) {
            continue;
        }
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {id:>2} PASS {name} ({secs:.1}s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {id:>2} FAIL {name} ({secs:.1}s): {detail}");
            }
        }
    }
    if failed > 0 {
        println!("acceptance: {failed} criteria failed");
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}
