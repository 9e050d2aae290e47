//! Acceptance suite. Every test prints one `criterion N: PASS|FAIL` line to
//! stderr before asserting.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use hamosc_core::coefsys::{catalogue, Coeffs, Scenario};
use hamosc_core::criteria::{
    analyze, cross_validate, run_criterion, scalar_oscillation, simulate, AnalysisOptions, CriteriaError,
    Criterion, ExponentSource, ScalarSystem, ScalarVerdict, SimVerdict, VerdictKind,
};
use hamosc_core::odeint::{
    detect_det_zeros, solve_hamiltonian, solve_hamiltonian_normalized, solve_matrix_riccati, IntegratorTol, Y_MAX,
};
use hamosc_core::riccati::{
    cauchy_bound_check, comparison_oracle, nonnegativity_check, subsystem_solve, C12Sign, GridOptions, Kernel,
    Partition, RealFn, Subsystem, SubsystemInit,
};
use hamosc_core::{Cx, Mat2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(n: usize, what: &str, ok: bool, detail: &str) {
    use std::io::Write;
    let status = if ok { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "criterion {n}: {status} {what} ({detail})");
}

fn cx(re: f64, im: f64) -> Cx {
    Cx::new(re, im)
}

fn konst(v: f64) -> RealFn {
    Arc::new(move |_| v)
}

fn entry(name: &str) -> (Scenario, (f64, f64), AnalysisOptions) {
    let e = catalogue().iter().find(|e| e.name == name).unwrap();
    let mut o = AnalysisOptions::default();
    if let Some(n) = e.n_min {
        o.n_min = n;
    }
    (e.scenario().unwrap(), e.window, o)
}

fn rand_mat(rng: &mut ChaCha8Rng, scale: f64) -> Mat2 {
    let mut v = [0.0; 8];
    for x in v.iter_mut() {
        *x = rng.gen_range(-scale..scale);
    }
    Mat2::from_flat(&v)
}

fn rand_herm(rng: &mut ChaCha8Rng, scale: f64) -> Mat2 {
    rand_mat(rng, scale).hermitian_part()
}

fn rand_cx(rng: &mut ChaCha8Rng, scale: f64) -> Cx {
    cx(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale))
}

#[test]
fn criterion_01_harmonic_ground_truth() {
    let (s, _, opts) = entry("harmonic");
    let window = (0.0, 100.0);
    let run = solve_hamiltonian_normalized(&s, Mat2::identity(), Mat2::zero(), window, opts.grid.tol).unwrap();
    let zeros: Vec<f64> = detect_det_zeros(&run, opts.eps_zero).iter().map(|z| z.time).collect();
    let worst = zeros
        .iter()
        .enumerate()
        .map(|(k, t)| (t - (FRAC_PI_2 + k as f64 * PI)).abs())
        .fold(0.0f64, f64::max);
    let zeros_ok = zeros.len() == 32 && worst < 1e-6;
    let osc = run_criterion(Criterion::DiagonalOscillation, &s, window, &opts).verdict.kind;
    let red = run_criterion(Criterion::ReducedOscillation, &s, window, &opts).verdict.kind;
    let ok = zeros_ok && osc == VerdictKind::Oscillatory && red == VerdictKind::Oscillatory;
    report(1, "harmonic ground truth", ok, &format!("{} zeros, max error {worst:e}, 3.1 {osc:?}, cor3.1 {red:?}", zeros.len()));
    assert!(ok);
}

// Zero counts of the five starts on [0, 200], frozen from the simulation.
const EXAMPLE_3_1_ZERO_COUNTS: [usize; 5] = [37; 5];

#[test]
fn criterion_02_first_example() {
    let (s, window, opts) = entry("example_3_1");
    let osc = run_criterion(Criterion::DiagonalOscillation, &s, window, &opts);
    let cv = cross_validate(&s, window, &opts).unwrap();
    let counts: Vec<usize> = cv.simulation.starts.iter().map(|st| st.zeros.len()).collect();
    // the first scalar equation phi1'' + mu phi1 = 0 is the one that fires
    let fired = osc.verdict.notes.contains("j = 1 oscillates");
    let ok = osc.verdict.kind == VerdictKind::Oscillatory
        && fired
        && cv.simulation.verdict == SimVerdict::Oscillatory
        && cv.simulation.starts.len() == 5
        && counts.iter().all(|&c| c >= 5)
        && counts == EXAMPLE_3_1_ZERO_COUNTS;
    report(2, "first example", ok, &format!("3.1 {:?}, simulation {:?}, zeros per start {counts:?}", osc.verdict.kind, cv.simulation.verdict));
    assert!(ok);
}

#[test]
fn criterion_03_zero_drift_oscillates() {
    let (s, window, opts) = entry("example_3_2_zero_drift");
    assert_eq!(s.f_override.as_ref().map(|o| o.label.as_str()), Some("paper_sqrt2_identity"));
    let red = run_criterion(Criterion::ReducedOscillation, &s, window, &opts).verdict.kind;
    let sim = simulate(&s, window, &opts).unwrap();
    let worst_gap = sim
        .starts
        .iter()
        .flat_map(|st| st.zeros.windows(2).map(|w| (w[1] - w[0] - PI).abs()))
        .fold(0.0f64, f64::max);
    let ok = red == VerdictKind::Oscillatory
        && sim.verdict == SimVerdict::Oscillatory
        && sim.starts.iter().all(|st| st.zeros.len() >= 2)
        && worst_gap < 1e-3;
    report(3, "zero-drift branch oscillates", ok, &format!("cor3.1 {red:?}, simulation {:?}, max |gap - pi| {worst_gap:e}", sim.verdict));
    assert!(ok);
}

// Smallest scale-free |det Phi| per start on [1, 1000], frozen from the simulation.
const EULER_MIN_ABS_DET: [f64; 5] = [0.9990814084661028, 0.5, 0.693480274854178, 0.004744540115707532, 0.6476940040286105];

#[test]
fn criterion_04_euler_branch_is_nonoscillatory() {
    let (s, window, base) = entry("example_3_2_euler_a05");
    let mut table = Vec::new();
    let mut certified = Vec::new();
    for sign in [C12Sign::Plus, C12Sign::Minus] {
        for source in [ExponentSource::P, ExponentSource::A] {
            let opts = AnalysisOptions { sign_convention: sign, exponent_source: source, ..base.clone() };
            let k = run_criterion(Criterion::ReducedEnvelope, &s, window, &opts).verdict.kind;
            table.push(format!("{}/{source:?}: {k:?}", sign.label()));
            if k == VerdictKind::NonOscillatory {
                certified.push((sign, source));
            }
        }
    }
    let sim = simulate(&s, window, &base).unwrap();
    let mins: Vec<f64> = sim.starts.iter().map(|st| st.min_abs_det).collect();
    let frozen = mins.iter().zip(EULER_MIN_ABS_DET).all(|(m, f)| (m - f).abs() <= 1e-6 * f);
    let ok = !certified.is_empty()
        && certified.contains(&(C12Sign::Plus, ExponentSource::P))
        && sim.starts.len() == 5
        && mins.iter().all(|&m| m > 0.0)
        && frozen
        && sim.verdict == SimVerdict::NonOscillatory;
    report(4, "Euler branch is non-oscillatory", ok, &format!("3.4 [{}], min |det| {mins:?}", table.join(", ")));
    assert!(ok);
}

#[test]
fn criterion_05_euler_threshold() {
    let window = (1.0, 1e4);
    let tol = IntegratorTol::default();
    let mut ok = true;
    let mut lines = Vec::new();
    for (c, want) in [
        (0.2, ScalarVerdict::NonOscillatory),
        (0.25, ScalarVerdict::NonOscillatory),
        (1.0, ScalarVerdict::Oscillatory),
        (2.5, ScalarVerdict::Oscillatory),
    ] {
        let sys = ScalarSystem { f11: konst(0.0), f12: konst(1.0), f21: Arc::new(move |t: f64| -c / (t * t)), f22: konst(0.0) };
        let out = scalar_oscillation(&sys, window, 3, 0.1, tol).unwrap();
        ok &= out.verdict == want;
        lines.push(format!("c = {c}: {:?}", out.verdict));
        if c == 2.5 {
            let ratio = (PI / 1.5).exp();
            let worst = out.zeros[0].windows(2).map(|w| (w[1] / w[0] / ratio - 1.0).abs()).fold(0.0f64, f64::max);
            ok &= out.zeros[0].len() >= 3 && worst < 1e-3;
            lines.push(format!("ratio error {worst:e}"));
        }
    }
    report(5, "Euler threshold", ok, &lines.join(", "));
    assert!(ok);
}

#[test]
fn criterion_06_comparison_campaign() {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut passed = 0;
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
        if matches!(comparison_oracle(f, g, h, h1, y1, y0, (0.0, 3.0), IntegratorTol::default()), Ok(true)) {
            passed += 1;
        }
    }
    let ok = passed == 100;
    report(6, "comparison campaign", ok, &format!("{passed}/100 instances"));
    assert!(ok);
}

#[test]
fn criterion_07_nonnegativity_condition() {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let tol = IntegratorTol::default();
    let window = (0.0, 20.0);
    let (mut negative_ok, mut positive_ok) = (0, 0);
    for _ in 0..20 {
        let (a, b, c) = (rng.gen_range(-1.0..1.0), rng.gen_range(0.0..2.0), rng.gen_range(0.1..3.0));
        let k = Kernel::new(move |t: f64| a * t.cos(), move |t: f64| -b * (c * t).sin().powi(2));
        let out = nonnegativity_check(&k, &Partition::single(window), 64, tol).unwrap();
        negative_ok += out.holds as usize;
        let floor = rng.gen_range(0.05..1.0);
        let k = Kernel::new(move |t: f64| a * t.cos(), move |t: f64| floor + b * (c * t).sin().powi(2));
        let out = nonnegativity_check(&k, &Partition::single(window), 64, tol).unwrap();
        positive_ok += (!out.holds && matches!(out.first_violation, Some((0, _)))) as usize;
    }
    let ok = negative_ok == 20 && positive_ok == 20;
    report(7, "nonnegativity condition", ok, &format!("h <= 0: {negative_ok}/20 hold, h > 0: {positive_ok}/20 fail at once"));
    assert!(ok);
}

fn random_positive_diag(rng: &mut ChaCha8Rng) -> Scenario {
    let a12 = (rand_cx(rng, 1.0), rand_cx(rng, 1.0), rng.gen_range(0.2..2.0));
    let a21 = (rand_cx(rng, 1.0), rand_cx(rng, 1.0), rng.gen_range(0.2..2.0));
    let d = (rand_cx(rng, 0.5), rand_cx(rng, 0.5));
    let b = (rng.gen_range(0.5..2.0), rng.gen_range(0.0..0.4), rng.gen_range(0.5..2.0));
    let c = (rng.gen_range(0.0..2.0), rand_cx(rng, 1.0), rng.gen_range(0.0..2.0), rand_cx(rng, 0.5));
    Scenario::from_fn("positive_diagonal", 0.0, move |t| {
        let c12 = c.1 + c.3 * t.sin();
        Coeffs {
            a: Mat2::new(d.0, a12.0 + a12.1 * (a12.2 * t).sin(), a21.0 + a21.1 * (a21.2 * t).cos(), d.1),
            b: Mat2::diag(b.0 * (1.0 + b.1 * t.sin()), b.2),
            c: Mat2::new(cx(c.0, 0.0), c12, c12.conj(), cx(c.2, 0.0)),
        }
    })
}

#[test]
fn criterion_08_cauchy_bound_campaign() {
    let grid = GridOptions { envelope_samples: 2048, ..GridOptions::default() };
    let window = (0.0, 6.0);
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let (mut held, mut worst) = (0, f64::NEG_INFINITY);
    for _ in 0..50 {
        let s = random_positive_diag(&mut rng).validated(window, 64).unwrap();
        let r = cauchy_bound_check(&s, window, 1.0, C12Sign::Plus, &grid).unwrap();
        held += r.holds as usize;
        worst = worst.max(r.worst_margin);
    }
    let ok = held == 50;
    report(8, "bound campaign", ok, &format!("{held}/50 scenarios within bounds, worst relative margin {worst:e}"));
    assert!(ok);
}

#[test]
fn criterion_09_algebra() {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let (mut trace_worst, mut sqrt_worst, mut sandwich_worst) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..1000 {
        let (a, b) = (rand_mat(&mut rng, 3.0), rand_mat(&mut rng, 3.0));
        let scale = a.norm() * b.norm();
        trace_worst = trace_worst.max(((a * b).tr() - (b * a).tr()).norm() / (f64::EPSILON * scale));
        let h = rand_herm(&mut rng, 3.0);
        let psd = h * h;
        let root = psd.sqrt_psd().unwrap();
        sqrt_worst = sqrt_worst.max((root * root - psd).norm() / (1.0 + psd.norm()));
        let s = psd + Mat2::identity().scale(0.5);
        let m = rand_mat(&mut rng, 1.0);
        sandwich_worst = sandwich_worst.max(Mat2::solve_sandwich(&s, &m).residual);
    }
    let ok = trace_worst <= 4.0 && sqrt_worst <= 1e-10 && sandwich_worst <= 1e-12;
    report(
        9,
        "algebra",
        ok,
        &format!("trace gap {trace_worst:.2} eps, sqrt round trip {sqrt_worst:e}, sandwich residual {sandwich_worst:e}"),
    );
    assert!(ok);
}

#[test]
fn criterion_10_correspondence_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let tol = IntegratorTol::default();
    let (mut ratio_worst, mut defect_worst, mut sub_worst) = (0.0f64, 0.0f64, 0.0f64);
    for k in 0..50 {
        let s = Scenario::constant(format!("random_{k}"), rand_mat(&mut rng, 1.0), rand_herm(&mut rng, 1.0), rand_herm(&mut rng, 1.0));
        let z0 = rand_herm(&mut rng, 1.0);
        let ham = solve_hamiltonian(&s, Mat2::identity(), z0, (0.0, 2.0), tol).unwrap();
        defect_worst = defect_worst.max(ham.max_defect());
        let ric = solve_matrix_riccati(&s, z0, (0.0, 2.0), Y_MAX, tol).unwrap();
        let stop = ric.blowup.map_or(2.0, |b| b.escape_time);
        for j in 0..=200 {
            let t = 2.0 * j as f64 / 200.0;
            if t > stop || ham.normalized_det(t).unwrap().norm() < 1e-2 {
                break;
            }
            let (phi, psi) = ham.phi_psi(t).unwrap();
            let z = ric.z_at(t).unwrap();
            let scale = 1.0 + psi.norm() + z.norm() * phi.norm();
            ratio_worst = ratio_worst.max((psi - z * phi).norm() / scale);
        }
        let long = solve_hamiltonian_normalized(&s, Mat2::identity(), z0, (0.0, 20.0), tol).unwrap();
        defect_worst = defect_worst.max(long.max_defect());
    }
    for k in 0..10 {
        let a = Mat2::new(rand_cx(&mut rng, 1.0), rand_cx(&mut rng, 1.0), rand_cx(&mut rng, 1.0), rand_cx(&mut rng, 1.0));
        let b = Mat2::diag(rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0));
        let s = Scenario::constant(format!("diagonal_{k}"), a, b, rand_herm(&mut rng, 1.0)).validated((0.0, 1.0), 64).unwrap();
        let z0 = rand_herm(&mut rng, 0.5);
        let full = solve_matrix_riccati(&s, z0, (0.0, 1.0), Y_MAX, tol).unwrap();
        let end = full.blowup.map_or(1.0, |bl| bl.escape_time * 0.9);
        let (r1, r2) = (a.e12 / b.e11.re, a.e21.conj() / b.e22.re);
        let upper = SubsystemInit { z: z0.e11.re, w: z0.e12 + r2, partner: z0.e22.re };
        let lower = SubsystemInit { z: z0.e22.re, w: z0.e12 + r1, partner: z0.e11.re };
        let up = subsystem_solve(&s, Subsystem::Upper, upper, (0.0, end), tol).unwrap();
        let lo = subsystem_solve(&s, Subsystem::Lower, lower, (0.0, end), tol).unwrap();
        for j in 0..=40 {
            let t = end * j as f64 / 40.0;
            let z = full.z_at(t).unwrap();
            let sc = 1.0 + z.norm();
            let gaps = [
                (up.z(t).unwrap() - z.e11.re).abs(),
                (up.w(t).unwrap() - (z.e12 + r2)).norm(),
                (lo.z(t).unwrap() - z.e22.re).abs(),
                (lo.w(t).unwrap() - (z.e12 + r1)).norm(),
            ];
            sub_worst = gaps.iter().fold(sub_worst, |m, g| m.max(g / sc));
        }
    }
    let ok = ratio_worst <= 1e-6 && sub_worst <= 1e-6 && defect_worst <= 1e-8;
    report(
        10,
        "correspondence invariants",
        ok,
        &format!("Psi - Z Phi {ratio_worst:e}, subsystem gap {sub_worst:e}, conjoined defect {defect_worst:e}"),
    );
    assert!(ok);
}

fn random_scenario(rng: &mut ChaCha8Rng, k: usize) -> Scenario {
    let mut u = |lo: f64, hi: f64| rng.gen_range(lo..hi);
    let off = cx(u(-1.0, 1.0), u(-1.0, 1.0));
    let c = Mat2::new(cx(u(-3.0, 3.0), 0.0), off, off.conj(), cx(u(-3.0, 3.0), 0.0));
    let a = Mat2::new(cx(u(-0.5, 0.5), 0.0), cx(u(-0.5, 0.5), u(-0.5, 0.5)), cx(u(-0.5, 0.5), u(-0.5, 0.5)), cx(u(-0.5, 0.5), 0.0));
    let b = match k % 3 {
        0 => Mat2::diag(u(0.5, 2.0), u(0.5, 2.0)),
        1 => {
            let sg = if u(0.0, 1.0) < 0.5 { 1.0 } else { -1.0 };
            Mat2::diag(sg * u(0.5, 2.0), -sg * u(0.5, 2.0))
        }
        _ => Mat2::identity(),
    };
    Scenario::constant(format!("random_{k}"), a, b, c)
}

#[test]
fn criterion_11_no_conflicts() {
    let mut conflicts = Vec::new();
    let mut runs = 0;
    let mut tally = |name: String, r: Result<_, CriteriaError>| {
        runs += 1;
        match r {
            Err(CriteriaError::CriteriaConflict { .. }) => conflicts.push(name),
            Err(e) => panic!("{name}: {e}"),
            Ok(_) => {}
        }
    };
    for e in catalogue() {
        let (s, window, opts) = entry(e.name);
        tally(e.name.to_string(), analyze(&s, window, &opts).map(|_| ()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1111);
    for k in 0..60 {
        let s = random_scenario(&mut rng, k);
        tally(s.name.clone(), analyze(&s, (0.0, 8.0), &AnalysisOptions::default()).map(|_| ()));
    }
    let ok = conflicts.is_empty();
    report(11, "no conflicts", ok, &format!("{runs} analyses, conflicts {conflicts:?}"));
    assert!(ok);
}
