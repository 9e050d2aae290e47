use std::f64::consts::PI;
use std::sync::Arc;

use hamosc_core::coefsys::{make_family, Coeffs, Scenario};
use hamosc_core::odeint::{quadrature, solve_matrix_riccati, IntegratorTol, Y_MAX};
use hamosc_core::riccati::{
    cauchy_bound_check, chi_diag, comparison_oracle, diag_source, nonnegativity_check, partition_search,
    subsystem_solve, weighted_integral, C12Sign, ChiBranch, Envelope, GridOptions, Kernel, Partition,
    RiccatiError, Subsystem, SubsystemInit,
};
use hamosc_core::{Cx, Mat2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cx(re: f64, im: f64) -> Cx {
    Cx::new(re, im)
}

fn tol() -> IntegratorTol {
    IntegratorTol::default()
}

fn validated(s: Scenario, window: (f64, f64)) -> Scenario {
    s.validated(window, 64).unwrap()
}

// I(xi; t) by quadrature over s of exp(-int_s^t g) h(s), inner integral by quadrature too
fn nested_quadrature(g: &dyn Fn(f64) -> f64, h: &dyn Fn(f64) -> f64, xi: f64, t: f64) -> f64 {
    let inner = |s: f64| quadrature(g, s, t, 1e-13, 1e-13).value;
    quadrature(|s| (-inner(s)).exp() * h(s), xi, t, 1e-12, 1e-12).value
}

// Cumulative trapezoid evaluation of the displayed condition integral
// D(t) = int_xi^t exp(int_xi^s (g - I)) h ds with I(s) = int_xi^s exp(-int_r^s g) h dr.
fn condition_by_trapezoid(g: &dyn Fn(f64) -> f64, h: &dyn Fn(f64) -> f64, xi: f64, t1: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let dt = (t1 - xi) / n as f64;
    let ts: Vec<f64> = (0..=n).map(|k| xi + dt * k as f64).collect();
    let cum = |v: &[f64]| {
        let mut out = vec![0.0; v.len()];
        for k in 1..v.len() {
            out[k] = out[k - 1] + 0.5 * dt * (v[k] + v[k - 1]);
        }
        out
    };
    let gv: Vec<f64> = ts.iter().map(|&t| g(t)).collect();
    let hv: Vec<f64> = ts.iter().map(|&t| h(t)).collect();
    let big_g = cum(&gv);
    let weighted: Vec<f64> = (0..=n).map(|k| big_g[k].exp() * hv[k]).collect();
    let inner = cum(&weighted);
    let iv: Vec<f64> = (0..=n).map(|k| (-big_g[k]).exp() * inner[k]).collect();
    let expo = cum(&(0..=n).map(|k| gv[k] - iv[k]).collect::<Vec<_>>());
    let d = cum(&(0..=n).map(|k| expo[k].exp() * hv[k]).collect::<Vec<_>>());
    (ts, d)
}

#[test]
fn weighted_integral_examples() {
    let k = Kernel::new(|_| 0.0, |_| 1.0);
    assert!((weighted_integral(&k, 0.0, 3.5, tol()).unwrap() - 3.5).abs() < 1e-12);
    let k = Kernel::new(|t: f64| t.sin(), |_| 0.0);
    assert_eq!(weighted_integral(&k, 0.0, 5.0, tol()).unwrap(), 0.0);
    let k = Kernel::new(|_| 1.0, |_| 1.0);
    let v = weighted_integral(&k, 0.0, 1.0, tol()).unwrap();
    assert!((v - 0.6321205588285577).abs() < 1e-9);
    assert_eq!(weighted_integral(&k, 2.0, 2.0, tol()).unwrap(), 0.0);
    assert!(matches!(weighted_integral(&k, 2.0, 1.0, tol()), Err(RiccatiError::InvalidWindow(..))));
}

#[test]
fn weighted_integral_matches_nested_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let (a, b, w) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(0.2..3.0));
        let (c, d, v) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(0.2..3.0));
        let g = move |t: f64| a + b * (w * t).sin();
        let h = move |t: f64| c + d * (v * t).cos() + 0.1 * t;
        let xi = rng.gen_range(0.0..1.0);
        let t = xi + rng.gen_range(0.5..4.0);
        let k = Kernel::new(g, h);
        let ode = weighted_integral(&k, xi, t, tol()).unwrap();
        let quad = nested_quadrature(&g, &h, xi, t);
        assert!((ode - quad).abs() <= 1e-8 * (1.0 + quad.abs()), "ode {ode} quad {quad}");
    }
}

#[test]
fn nonpositive_free_term_passes_every_partition() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let (a, b, c) = (rng.gen_range(-1.0..1.0), rng.gen_range(0.0..2.0), rng.gen_range(0.1..3.0));
        let k = Kernel::new(move |t: f64| a * t.cos(), move |t: f64| -b * (c * t).sin().powi(2));
        let n = rng.gen_range(1..6);
        let mut points: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..20.0)).collect();
        points.push(0.0);
        points.sort_by(f64::total_cmp);
        points.dedup();
        let part = Partition { points, end: 20.0 };
        let out = nonnegativity_check(&k, &part, 64, tol()).unwrap();
        assert!(out.holds, "{out:?}");
    }
}

#[test]
fn positive_free_term_fails_immediately() {
    let k = Kernel::new(|_| 0.0, |_| 1.0);
    let out = nonnegativity_check(&k, &Partition::single((0.0, 5.0)), 64, tol()).unwrap();
    assert!(!out.holds);
    let (idx, t) = out.first_violation.unwrap();
    assert_eq!(idx, 0);
    assert!(t < 5.0 / 64.0 + 1e-12);
}

#[test]
fn cosine_free_term_agrees_with_trapezoid_oracle() {
    let g = |_: f64| 0.0;
    let h = |t: f64| -t.cos();
    let (_, d) = condition_by_trapezoid(&g, &h, 0.0, 2.0 * PI, 200_000);
    let oracle = d.iter().all(|&v| v <= 1e-10);
    let k = Kernel::new(g, h);
    let out = nonnegativity_check(&k, &Partition::single((0.0, 2.0 * PI)), 64, tol()).unwrap();
    assert_eq!(out.holds, oracle);
    assert!(!oracle);
    // the oracle's first positive value and the checker's first violation agree to a grid cell
    let dt = 2.0 * PI / 200_000.0;
    let t_oracle = d.iter().position(|&v| v > 1e-10).unwrap() as f64 * dt;
    let (_, t_check) = out.first_violation.unwrap();
    assert!(t_check >= t_oracle - 2.0 * PI / 64.0 - 1e-9 && t_check <= t_oracle + 2.0 * PI / 64.0);
}

#[test]
fn partition_search_examples() {
    let grid = GridOptions::default();
    let k = Kernel::new(|_| 0.0, |t: f64| -1.0 - t.sin().powi(2));
    assert_eq!(partition_search(&k, (0.0, 30.0), 16, &grid).unwrap(), Partition::single((0.0, 30.0)));
    let k = Kernel::new(|_| 0.0, |_| 1.0);
    assert!(matches!(partition_search(&k, (0.0, 30.0), 16, &grid), Err(RiccatiError::PartitionNotFound { .. })));
    let k = Kernel::new(|_| 0.0, |t: f64| -1.0 + 0.5 * t.sin());
    assert_eq!(partition_search(&k, (0.0, 40.0), 16, &grid).unwrap(), Partition::single((0.0, 40.0)));
}

// Every partition returned by the search satisfies the condition according to
// the trapezoid oracle on each subinterval.
#[test]
fn found_partitions_pass_the_trapezoid_oracle() {
    let grid = GridOptions::default();
    let (mut found, mut split) = (0, 0);
    for (amp, g0) in [(1.2, 0.0), (1.5, 0.3), (1.1, -0.05), (2.0, 0.5), (0.9, 0.0)] {
        let g = move |_: f64| g0;
        let h = move |t: f64| -1.0 + amp * t.sin();
        let k = Kernel::new(g, h);
        let Ok(part) = partition_search(&k, (0.0, 30.0), 256, &grid) else { continue };
        found += 1;
        split += (part.points.len() > 1) as usize;
        for (a, b) in part.intervals() {
            let (_, d) = condition_by_trapezoid(&g, &h, a, b, 20_000);
            let top = d.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
            assert!(top <= 1e-6, "amp {amp}: [{a}, {b}] reaches {top}");
        }
    }
    assert!(found >= 3 && split >= 2, "{found} kernels certified, {split} with several points");
}

#[test]
fn comparison_oracle_examples() {
    let t = tol();
    let w = (0.0, 3.0);
    assert!(comparison_oracle(|_| 1.0, |_| 0.0, |t: f64| t.cos(), |t: f64| t.cos(), 0.3, 0.3, w, t).unwrap());
    assert!(comparison_oracle(|_| 1.0, |_| 0.0, |_| -1.0, |_| 0.0, 0.0, 0.0, w, t).unwrap());
    let err = comparison_oracle(|_| 1.0, |_| 0.0, |_| 1.0, |_| 0.0, 0.0, 0.0, w, t).unwrap_err();
    assert!(matches!(err, RiccatiError::HypothesisViolated { ref which, .. } if which == "h <= h1"));
    let err = comparison_oracle(|_| -1.0, |_| 0.0, |_| 0.0, |_| 0.0, 0.0, 0.0, w, t).unwrap_err();
    assert!(matches!(err, RiccatiError::HypothesisViolated { ref which, .. } if which == "f >= 0"));
    let err = comparison_oracle(|_| 1.0, |_| 0.0, |_| 0.0, |_| 0.0, 1.0, 0.0, w, t).unwrap_err();
    assert!(matches!(err, RiccatiError::HypothesisViolated { .. }));
}

#[test]
fn comparison_monotonicity_campaign() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..100 {
        let p: [f64; 3] = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0), rng.gen_range(0.0..0.5)];
        let (g0, g1) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let (s0, s1, om) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(0.5..3.0));
        let d = rng.gen_range(0.0..1.5);
        let y1 = rng.gen_range(-1.0..1.0);
        let y0 = y1 + rng.gen_range(0.0..1.0);
        let f = move |t: f64| p[0] + p[1] * t + p[2] * t * t;
        let g = move |t: f64| g0 + g1 * t.sin();
        let h1 = move |t: f64| s0 + s1 * (om * t).cos();
        let h = move |t: f64| h1(t) - d * (1.0 + t.sin().powi(2));
        assert!(comparison_oracle(f, g, h, h1, y1, y0, (0.0, 3.0), tol()).unwrap());
    }
}

fn example_3_1() -> Scenario {
    let s = hamosc_core::coefsys::catalogue().iter().find(|e| e.name == "example_3_1").unwrap().scenario().unwrap();
    validated(s, (0.0, 20.0))
}

#[test]
fn chi_examples() {
    let s = example_3_1();
    let chi1 = chi_diag(&s, 1, false).unwrap();
    for t in [0.0, 0.7, 3.0, 11.0] {
        let mu = -s.eval(t).unwrap().c.e11.re;
        let v = chi1.at(t).unwrap();
        assert!((v.value - mu).abs() < 1e-14);
        assert_eq!(v.branch, ChiBranch::BNonzero);
    }
    let zero = validated(make_family("zero", &Default::default()).unwrap(), (0.0, 1.0));
    for j in [1, 2] {
        let p = chi_diag(&zero, j, false).unwrap();
        assert!(p.sample((0.0, 1.0), 16).unwrap().iter().all(|s| s.value == 0.0 && s.branch == ChiBranch::BZero));
    }
    let mut a = Mat2::zero();
    a.e21 = cx(2.0, 0.0);
    let mut c = Mat2::zero();
    c.e11 = cx(1.0, 0.0);
    let s = validated(Scenario::constant("d", a, Mat2::diag(1.0, 2.0), c), (0.0, 1.0));
    assert_eq!(chi_diag(&s, 1, false).unwrap().value(0.5), -3.0);
    assert_eq!(chi_diag(&s, 1, true).unwrap().value(0.5), 3.0);
    assert_eq!(chi_diag(&s, 2, false).unwrap().value(0.5), 0.0);
    let full = validated(Scenario::constant("f", Mat2::zero(), Mat2::ones(), Mat2::zero()), (0.0, 1.0));
    assert!(chi_diag(&full, 1, false).is_err());
    assert!(chi_diag(&s, 3, false).is_err());
}

fn envelope(s: &Scenario, window: (f64, f64), sign: C12Sign) -> Envelope {
    Envelope::build(diag_source(s).unwrap(), window, sign, &GridOptions::default()).unwrap()
}

#[test]
fn envelope_examples() {
    let c = Mat2::diag(0.5, -2.0);
    let s = validated(Scenario::constant("a0", Mat2::zero(), Mat2::identity(), c), (0.0, 5.0));
    for sign in [C12Sign::Plus, C12Sign::Minus] {
        let e = envelope(&s, (0.0, 5.0), sign);
        for t in [0.0, 1.0, 4.9] {
            let v = e.at(t).unwrap();
            assert_eq!(v.frak_m, 0.0);
            assert!((v.chi3 + 0.5).abs() < 1e-12 && (v.chi4 - 2.0).abs() < 1e-12);
        }
    }
    let mut a = Mat2::zero();
    a.e12 = cx(1.0, 0.0);
    let s = validated(Scenario::constant("m1", a, Mat2::identity(), Mat2::zero()), (0.0, 5.0));
    let e = envelope(&s, (0.0, 5.0), C12Sign::Plus);
    for t in [0.0, 0.3, 2.0, 5.0] {
        assert!((e.at(t).unwrap().frak_m - 1.0).abs() < 1e-12);
    }
}

#[test]
fn envelope_with_decaying_gap() {
    // a11 = a22 = -1/2, r1 - r2 = 1 + s: exp(-s) (1 + s) peaks at s = 0, so M = exp(t)
    let s = Scenario::from_fn("gap", 0.0, |t| Coeffs {
        a: Mat2::new(cx(-0.5, 0.0), cx(1.0 + t, 0.0), cx(0.0, 0.0), cx(-0.5, 0.0)),
        b: Mat2::identity(),
        c: Mat2::zero(),
    });
    let s = validated(s, (0.0, 4.0));
    let e = envelope(&s, (0.0, 4.0), C12Sign::Plus);
    for t in [0.0, 1.0, 3.3] {
        assert!((e.at(t).unwrap().frak_m - t.exp()).abs() < 1e-9 * t.exp());
    }
    let s = Scenario::from_fn("gap2", 0.0, |t| Coeffs {
        a: Mat2::new(cx(0.5, 0.0), cx((-t).exp(), 0.0), cx(0.0, 0.0), cx(0.5, 0.0)),
        b: Mat2::identity(),
        c: Mat2::zero(),
    });
    let s = validated(s, (0.0, 4.0));
    let e = envelope(&s, (0.0, 4.0), C12Sign::Plus);
    for t in [0.5, 2.0, 4.0] {
        // max over s of exp(s) exp(-s) = 1, so M = exp(-t)
        assert!((e.at(t).unwrap().frak_m - (-t).exp()).abs() < 1e-9);
    }
}

#[test]
fn example_3_1_envelope_under_both_conventions() {
    let s = example_3_1();
    for sign in [C12Sign::Plus, C12Sign::Minus] {
        let e = envelope(&s, (0.0, 20.0), sign);
        for t in [0.0, 1.0, 7.5, 19.0] {
            let mu = -s.eval(t).unwrap().c.e11.re;
            let v = e.at(t).unwrap();
            let expect = (10.0 * t).powi(2) + mu;
            assert!((v.chi3 - expect).abs() <= 1e-8 * (1.0 + expect.abs()), "{sign:?} t={t}: {} vs {expect}", v.chi3);
        }
    }
}

#[test]
fn envelope_needs_positive_b() {
    let s = validated(Scenario::constant("neg", Mat2::zero(), Mat2::diag(1.0, -1.0), Mat2::zero()), (0.0, 1.0));
    let err = Envelope::build(diag_source(&s).unwrap(), (0.0, 1.0), C12Sign::Plus, &GridOptions::default());
    assert!(matches!(err, Err(RiccatiError::NotPositiveB(_))));
}

#[test]
fn subsystem_closed_forms() {
    let s = validated(Scenario::constant("free", Mat2::zero(), Mat2::identity(), Mat2::zero()), (0.0, 5.0));
    for which in [Subsystem::Upper, Subsystem::Lower] {
        let init = SubsystemInit { z: 1.0, w: cx(0.0, 0.0), partner: 0.5 };
        let run = subsystem_solve(&s, which, init, (0.0, 5.0), tol()).unwrap();
        assert!(run.blowup.is_none());
        for t in [0.0, 1.0, 2.5, 5.0] {
            assert!((run.z(t).unwrap() - 1.0 / (1.0 + t)).abs() < 1e-9);
            assert_eq!(run.w(t).unwrap(), cx(0.0, 0.0));
        }
        let init = SubsystemInit { z: 0.0, w: cx(0.0, 0.0), partner: 0.0 };
        let run = subsystem_solve(&s, which, init, (0.0, 5.0), tol()).unwrap();
        assert!((0..run.traj.len()).all(|i| run.traj.state(i).iter().all(|&v| v == 0.0)));
    }
    let zero_b = validated(Scenario::constant("zb", Mat2::zero(), Mat2::diag(1.0, 0.0), Mat2::zero()), (0.0, 1.0));
    let init = SubsystemInit { z: 0.0, w: cx(0.0, 0.0), partner: 0.0 };
    assert!(subsystem_solve(&zero_b, Subsystem::Upper, init, (0.0, 1.0), tol()).is_err());
}

fn random_hermitian(rng: &mut ChaCha8Rng, scale: f64) -> Mat2 {
    let off = cx(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale));
    Mat2::new(cx(rng.gen_range(-scale..scale), 0.0), off, off.conj(), cx(rng.gen_range(-scale..scale), 0.0))
}

fn random_complex(rng: &mut ChaCha8Rng, scale: f64) -> Cx {
    cx(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale))
}

#[test]
fn subsystems_match_the_full_riccati_flow() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..10 {
        let a = Mat2::new(
            random_complex(&mut rng, 1.0),
            random_complex(&mut rng, 1.0),
            random_complex(&mut rng, 1.0),
            random_complex(&mut rng, 1.0),
        );
        let b = Mat2::diag(rng.gen_range(0.5..2.0), rng.gen_range(-2.0..-0.5));
        let c = random_hermitian(&mut rng, 1.0);
        let s = validated(Scenario::constant("rand", a, b, c), (0.0, 1.0));
        let z0 = random_hermitian(&mut rng, 0.5);
        let full = solve_matrix_riccati(&s, z0, (0.0, 1.0), Y_MAX, tol()).unwrap();
        let end = full.blowup.map_or(1.0, |bl| bl.escape_time * 0.9);
        let r1 = a.e12 / b.e11.re;
        let r2 = a.e21.conj() / b.e22.re;
        let upper = SubsystemInit { z: z0.e11.re, w: z0.e12 + r2, partner: z0.e22.re };
        let lower = SubsystemInit { z: z0.e22.re, w: z0.e12 + r1, partner: z0.e11.re };
        let up = subsystem_solve(&s, Subsystem::Upper, upper, (0.0, end), tol()).unwrap();
        let lo = subsystem_solve(&s, Subsystem::Lower, lower, (0.0, end), tol()).unwrap();
        for k in 0..=40 {
            let t = end * k as f64 / 40.0;
            let z = full.z_at(t).unwrap();
            let sc = 1.0 + z.norm();
            assert!((up.z(t).unwrap() - z.e11.re).abs() <= 1e-6 * sc);
            assert!((up.w(t).unwrap() - (z.e12 + r2)).norm() <= 1e-6 * sc);
            assert!((up.partner(t).unwrap() - z.e22.re).abs() <= 1e-6 * sc);
            assert!((lo.z(t).unwrap() - z.e22.re).abs() <= 1e-6 * sc);
            assert!((lo.w(t).unwrap() - (z.e12 + r1)).norm() <= 1e-6 * sc);
        }
    }
}

#[test]
fn time_varying_subsystem_matches_the_full_flow() {
    let s = Scenario::from_fn("tv", 0.0, |t| Coeffs {
        a: Mat2::new(cx(0.1 * t.sin(), 0.2), cx(1.0 + 0.5 * t, -0.3), cx(t.cos(), 0.4 * t), cx(-0.2, 0.0)),
        b: Mat2::diag(1.0 + 0.5 * t.sin(), 2.0 + t.cos()),
        c: Mat2::new(cx(-1.0, 0.0), cx(0.3, 0.2 * t), cx(0.3, -0.2 * t), cx(0.5, 0.0)),
    });
    let s = validated(s, (0.0, 2.0));
    let z0 = Mat2::new(cx(1.0, 0.0), cx(0.2, -0.1), cx(0.2, 0.1), cx(0.7, 0.0));
    let full = solve_matrix_riccati(&s, z0, (0.0, 2.0), Y_MAX, tol()).unwrap();
    assert!(full.is_global());
    let rf = hamosc_core::coefsys::ratio_fns(&s).unwrap();
    let init = SubsystemInit { z: 1.0, w: z0.e12 + rf.r2(0.0).unwrap(), partner: 0.7 };
    let up = subsystem_solve(&s, Subsystem::Upper, init, (0.0, 2.0), tol()).unwrap();
    for k in 0..=40 {
        let t = 2.0 * k as f64 / 40.0;
        let z = full.z_at(t).unwrap();
        assert!((up.w(t).unwrap() - (z.e12 + rf.r2(t).unwrap())).norm() <= 1e-6 * (1.0 + z.norm()));
        assert!((up.z(t).unwrap() - z.e11.re).abs() <= 1e-6 * (1.0 + z.norm()));
    }
}

#[test]
fn cauchy_bound_trivial_and_example() {
    let grid = GridOptions::default();
    let s = validated(Scenario::constant("free", Mat2::zero(), Mat2::identity(), Mat2::zero()), (0.0, 5.0));
    let r = cauchy_bound_check(&s, (0.0, 5.0), 1.0, C12Sign::Plus, &grid).unwrap();
    assert!(r.holds && r.hypotheses_held);
    assert!(r.worst_margin <= 0.0);

    let s = example_3_1();
    let r = cauchy_bound_check(&s, (0.0, 3.0), 1.0, C12Sign::Plus, &grid).unwrap();
    assert!(r.holds, "{r:?}");
    assert!(r.checked_until[0] > 0.0);
    assert!(cauchy_bound_check(&s, (0.0, 3.0), -1.0, C12Sign::Plus, &grid).is_err());
}

fn random_positive_diag(rng: &mut ChaCha8Rng) -> Scenario {
    let a12 = (random_complex(rng, 1.0), random_complex(rng, 1.0), rng.gen_range(0.2..2.0));
    let a21 = (random_complex(rng, 1.0), random_complex(rng, 1.0), rng.gen_range(0.2..2.0));
    let d = (random_complex(rng, 0.5), random_complex(rng, 0.5));
    let b = (rng.gen_range(0.5..2.0), rng.gen_range(0.0..0.4), rng.gen_range(0.5..2.0));
    let c = (rng.gen_range(0.0..2.0), random_complex(rng, 1.0), rng.gen_range(0.0..2.0), random_complex(rng, 0.5));
    Scenario::from_fn("pos", 0.0, move |t| {
        let c12 = c.1 + c.3 * t.sin();
        Coeffs {
            a: Mat2::new(d.0, a12.0 + a12.1 * (a12.2 * t).sin(), a21.0 + a21.1 * (a21.2 * t).cos(), d.1),
            b: Mat2::diag(b.0 * (1.0 + b.1 * t.sin()), b.2),
            c: Mat2::new(cx(c.0, 0.0), c12, c12.conj(), cx(c.2, 0.0)),
        }
    })
}

#[test]
fn cauchy_bound_campaign() {
    let grid = GridOptions { envelope_samples: 2048, ..GridOptions::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(5150);
    let mut full_windows = 0;
    for _ in 0..50 {
        let s = validated(random_positive_diag(&mut rng), (0.0, 6.0));
        let r = cauchy_bound_check(&s, (0.0, 6.0), 1.0, C12Sign::Plus, &grid).unwrap();
        assert!(r.holds, "{r:?}");
        full_windows += r.hypotheses_held as usize;
    }
    assert!(full_windows >= 25, "only {full_windows} runs kept z >= 0 on the whole window");
}

#[test]
fn kernel_closures_are_shareable() {
    let s = example_3_1();
    let h = chi_diag(&s, 1, false).unwrap().as_fn();
    let k = Kernel { g: Arc::new(|_| 0.0), h };
    let handles: Vec<_> = (0..4)
        .map(|i| {
            let k = k.clone();
            std::thread::spawn(move || weighted_integral(&k, 0.0, 1.0 + i as f64, IntegratorTol::default()).unwrap())
        })
        .collect();
    for h in handles {
        assert!(h.join().unwrap().is_finite());
    }
}

// With r1 = r2 = 1, a11 = a22 = 1/2 and c12 = 1 the forcing of y is
// r2 (conj(a11) + a22) + c12 = 2; the opposite sign cancels it to 0 and the
// resulting bound (identically 0) is undercut as soon as y moves.
#[test]
fn minus_sign_envelope_is_undercut() {
    let a = Mat2::from_real(0.5, 1.0, 1.0, 0.5);
    let c = Mat2::from_real(2.0, 1.0, 1.0, 2.0);
    let s = validated(Scenario::constant("cancel", a, Mat2::identity(), c), (0.0, 4.0));
    let grid = GridOptions::default();
    let plus = cauchy_bound_check(&s, (0.0, 4.0), 1.0, C12Sign::Plus, &grid).unwrap();
    assert!(plus.hypotheses_held && plus.holds, "{plus:?}");
    let minus = cauchy_bound_check(&s, (0.0, 4.0), 1.0, C12Sign::Minus, &grid).unwrap();
    assert!(minus.hypotheses_held && !minus.holds, "{minus:?}");
}
