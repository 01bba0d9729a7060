//! Acceptance suite. Each test writes one `criterion N: PASS|FAIL` line to
//! stderr (outside the harness capture) and then asserts.
use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use jumprec::generator::{
    apply_l1, apply_l2, decay_check, default_radii, drift_profile_l1, GeneratorPart, RadialFunction, SmoothFunction,
    TestFunction,
};
use jumprec::lambda::{i1_closed, i1_quad, i1_series, l2_psi_factorized, lambda_report};
use jumprec::model::{make_model, ModelParams, KernelVariant};
use jumprec::quad::QuadOptions;
use jumprec::recurrence::{
    analyze, boundary_growth, critical_growth, LFamily, RecurrenceInput, RecurrenceSettings, Verdict,
};
use jumprec::simulate::{dynkin_check, run_big_jump_paths, SimConfig};
use jumprec::specfun::{identity_suite, IDENTITY_ALPHAS, IDENTITY_DIMS};

fn report(id: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "criterion {id}: {verdict} ({detail})");
}

fn stable(d: usize, alpha: f64, p: f64, q: f64) -> ModelParams {
    make_model(d, alpha, alpha, p, q, KernelVariant::StablePair).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

const CRITICAL_POINTS: [(usize, f64); 5] = [(2, 1.0), (3, 1.0), (3, 1.5), (4, 1.0), (2, 0.5)];

#[test]
fn criterion_01_critical_cancellation() {
    let t = Instant::now();
    let mut pass = true;
    let mut worst = (0.0f64, 0.0f64);
    for (d, alpha) in CRITICAL_POINTS {
        let q = (alpha - d as f64) / 2.0;
        let r = lambda_report(0.0, q, d, alpha, QuadOptions::new(1e-12, 1e-10)).unwrap();
        let lp = r.lambda_prime_zero.abs();
        let cancel = (r.i1_quad + r.i2_quad).abs() / r.i1_quad.abs();
        worst = (worst.0.max(lp), worst.1.max(cancel));
        pass &= lp <= 1e-6 && cancel <= 1e-5;
    }
    let secs = t.elapsed().as_secs_f64();
    pass &= secs < 120.0;
    report(
        "1",
        pass,
        &format!("max |Λ'(0)| {:.1e}, max |I1+I2|/|I1| {:.1e}, {secs:.1} s", worst.0, worst.1),
    );
    assert!(pass);
}

#[test]
fn criterion_02_i1_triple_agreement() {
    let mut pass = true;
    let mut worst = 0.0f64;
    for (d, alpha) in CRITICAL_POINTS {
        let closed = i1_closed(d, alpha).unwrap();
        let series = i1_series(d, alpha).unwrap().value;
        let quad = i1_quad(d, alpha, QuadOptions::new(1e-12, 1e-10)).unwrap().require("I1").unwrap();
        let pair = rel(closed, series).max(rel(closed, quad)).max(rel(series, quad));
        worst = worst.max(pair);
        pass &= pair <= 1e-5;
        if (d, alpha) == (2, 1.0) {
            let two_pi = 2.0 * std::f64::consts::PI;
            pass &= [closed, series, quad].iter().all(|v| rel(*v, two_pi) <= 1e-5);
        }
    }
    report("2", pass, &format!("worst pairwise relative gap {worst:.1e}, (2,1) against 2π"));
    assert!(pass);
}

#[test]
fn criterion_03_identity_suite() {
    let t = Instant::now();
    let rows = identity_suite(&IDENTITY_DIMS, &IDENTITY_ALPHAS, 1e-8).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let failed = rows.iter().filter(|r| !r.pass).count();
    let mut kinds: Vec<&str> = rows.iter().map(|r| r.identity.as_str()).collect();
    kinds.sort();
    kinds.dedup();
    let pass = failed == 0 && kinds.len() == 4 && secs < 10.0;
    report(
        "3",
        pass,
        &format!("{} rows over {} identities, {failed} failed, {secs:.2} s", rows.len(), kinds.len()),
    );
    assert!(pass);
}

#[test]
fn criterion_04_drift_negativity() {
    let mut radii = default_radii();
    radii.extend([1e3, 1e4]);
    radii.sort_by(f64::total_cmp);
    let grid = [
        (1, 1.2, 0.6),
        (1, 0.8, 0.8),
        (1, 1.6, 1.0),
        (2, 1.2, 0.2),
        (2, 0.8, 0.5),
        (2, 1.6, 0.9),
        (3, 1.2, -0.3),
        (3, 0.8, 0.0),
        (3, 1.6, 0.5),
    ];
    let mut pass = true;
    let mut worst_m = 0.0f64;
    let mut worst_stab = 0.0f64;
    for (d, alpha, p) in grid {
        let m = stable(d, alpha, p, 0.0);
        let delta = 0.5 * (p - (2.0 - d as f64) / 2.0);
        let r = drift_profile_l1(&m, delta, &radii, 1e-6).unwrap();
        let stab = r.stabilization(1e3, 1e4).unwrap();
        worst_m = worst_m.max(r.fitted_m);
        worst_stab = worst_stab.max(stab);
        pass &= r.all_negative_beyond_m && r.fitted_m < 1e3 && stab <= 0.01;
    }
    report(
        "4",
        pass,
        &format!("9 models, max fitted M {worst_m}, max change 1e3 → 1e4 {worst_stab:.1e}"),
    );
    assert!(pass);
}

/// (𝓛⁽¹⁾u)(x) by Monte Carlo over |z| < 1 with |z| drawn from the density
/// (2−α)ρ^{1−α}, uniform directions and antithetic pairs z, −z.
fn l1_monte_carlo(u: &TestFunction, m: &ModelParams, xn: f64, n: usize, seed: u64) -> (f64, f64) {
    let d = m.d;
    let co = m.coefficients();
    let omega = m.kernel().omega_d1();
    let alpha = m.alpha;
    let x: Vec<f64> = (0..d).map(|i| if i == 0 { xn } else { 0.0 }).collect();
    let ux = u.profile(xn);
    let a1x = co.a1(&x);
    let g = u.d1(xn);
    let hess = u.hessian(&x);
    // ∂a₁/∂x₁ at x = |x|e₁
    let grad_a1 = 2.0 * m.p * (1.0 + xn * xn).powf(m.p - 1.0) * xn;
    let chunks = 64;
    let per = n / chunks;
    let sums: Vec<(f64, f64)> = (0..chunks as u64)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (c << 32));
            let mut dir = vec![0.0; d];
            let mut plus = vec![0.0; d];
            let mut minus = vec![0.0; d];
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..per {
                let rho: f64 = rng.gen::<f64>().powf(1.0 / (2.0 - alpha));
                loop {
                    for v in dir.iter_mut() {
                        *v = rng.sample(StandardNormal);
                    }
                    let nrm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if nrm > 1e-12 {
                        dir.iter_mut().for_each(|v| *v /= nrm);
                        break;
                    }
                }
                for i in 0..d {
                    plus[i] = x[i] + rho * dir[i];
                    minus[i] = x[i] - rho * dir[i];
                }
                let gz = g * rho * dir[0];
                let f = if rho < 1e-6 {
                    // second-order expansion; the exact differences cancel to noise here
                    let mut hz = 0.0;
                    for i in 0..d {
                        for j in 0..d {
                            hz += hess[i * d + j] * dir[i] * dir[j];
                        }
                    }
                    let da = 2.0 * grad_a1 * rho * dir[0];
                    0.5 * hz * rho * rho * 2.0 * a1x + 0.5 * gz * da
                } else {
                    let (ap, am) = (co.a1(&plus), co.a1(&minus));
                    let up = u.value(&plus);
                    let um = u.value(&minus);
                    let fp = (up - ux - gz) * (a1x + ap) + 0.5 * gz * (ap - am);
                    let fm = (um - ux + gz) * (a1x + am) - 0.5 * gz * (am - ap);
                    0.5 * (fp + fm)
                };
                let v = f * omega / ((2.0 - alpha) * rho * rho);
                s1 += v;
                s2 += v * v;
            }
            (s1, s2)
        })
        .collect();
    let total = (per * chunks) as f64;
    let s1: f64 = sums.iter().map(|s| s.0).sum();
    let s2: f64 = sums.iter().map(|s| s.1).sum();
    let mean = s1 / total;
    let var = (s2 / total - mean * mean).max(0.0);
    (mean, (var / total).sqrt())
}


#[test]
fn criterion_05_generator_cross_route() {
    let opts = QuadOptions::new(1e-14, 1e-11);
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut worst = 0.0f64;
    let mut pass_l2 = true;
    for _ in 0..50 {
        let d = rng.gen_range(1..=3usize);
        let alpha = rng.gen_range(0.6..1.9);
        let q = rng.gen_range(-1.2..alpha / 2.0 - 0.05);
        let delta = rng.gen_range(0.05..0.6);
        let xn = 10f64.powf(rng.gen_range(-1.0..3.0));
        let m = stable(d, alpha, 0.0, q);
        let psi = TestFunction::new(delta).unwrap();
        let x: Vec<f64> = (0..d).map(|i| if i == 0 { xn } else { 0.0 }).collect();
        let direct = apply_l2(&psi, &x, &m, opts).unwrap();
        let factored = l2_psi_factorized(delta, xn, &m.big_jump_setting(), opts).unwrap();
        let r = rel(direct, factored);
        worst = worst.max(r);
        pass_l2 &= r <= 1e-6;
    }
    let tuples = [
        (1, 1.2, 0.0, 0.3, 2.0),
        (2, 0.8, 0.4, 0.2, 5.0),
        (3, 1.5, -0.2, 0.1, 1.0),
        (2, 1.9, 0.8, 0.5, 0.5),
        (1, 0.5, 0.3, 0.25, 10.0),
    ];
    let mut pass_l1 = true;
    let mut worst_z = 0.0f64;
    for (i, (d, alpha, p, delta, xn)) in tuples.into_iter().enumerate() {
        let m = stable(d, alpha, p, 0.0);
        let psi = TestFunction::new(delta).unwrap();
        let x: Vec<f64> = (0..d).map(|i| if i == 0 { xn } else { 0.0 }).collect();
        let quad = apply_l1(&psi, &x, &m, QuadOptions::new(1e-13, 1e-10)).unwrap();
        let (mc, se) = l1_monte_carlo(&psi, &m, xn, 10_000_000, 7_000 + i as u64);
        let z = (mc - quad).abs() / se;
        worst_z = worst_z.max(z);
        pass_l1 &= z <= 3.0;
    }
    report(
        "5",
        pass_l2 && pass_l1,
        &format!("50 tuples L2 worst relative gap {worst:.1e}; 5 tuples L1 worst |MC − quad|/se {worst_z:.2}"),
    );
    assert!(pass_l2 && pass_l1);
}

#[test]
fn criterion_06_decay_bounds() {
    let opts = QuadOptions::new(1e-300, 1e-9);
    let psi = TestFunction::new(0.2).unwrap();
    let near = [1e2, 1e3, 1e4];
    let far = [1e5, 1e6, 1e7];
    let configs: [(ModelParams, GeneratorPart, &[f64]); 6] = [
        (stable(1, 1.2, 0.6, 0.0), GeneratorPart::L1, &near),
        (stable(2, 0.8, 0.3, 0.0), GeneratorPart::L1, &near),
        (stable(3, 1.6, -0.2, 0.0), GeneratorPart::L1, &near),
        // q above, at and below −d/2
        (stable(1, 1.2, 0.0, 0.2), GeneratorPart::L2, &near),
        (stable(1, 1.2, 0.0, -0.5), GeneratorPart::L2, &far),
        (stable(2, 1.2, 0.0, -1.4), GeneratorPart::L2, &near),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (m, which, radii) in configs {
        let fit = decay_check(&psi, &m, which, radii, opts).unwrap();
        parts.push(format!("{:.3}≤{:.3}", fit.slope, fit.theoretical + 0.05));
        pass &= fit.pass;
    }
    report("6", pass, &format!("slopes {}", parts.join(", ")));
    assert!(pass);
}

#[test]
fn criterion_07_dynkin_residual() {
    let t = Instant::now();
    let mut pass = true;
    let mut worst = 0.0f64;
    for (i, q) in [-0.2, 0.0, 0.3].into_iter().enumerate() {
        for (j, delta) in [0.1, 0.3, 0.5].into_iter().enumerate() {
            let m = stable(1, 1.2, 0.0, q);
            let cfg = SimConfig::new(m, 5.0, 1.0, 100_000, 100_000, 700 + (3 * i + j) as u64);
            let r = dynkin_check(&cfg, delta, 10.0).unwrap();
            worst = worst.max(r.residual.abs() / r.se);
            pass &= r.within(3.0);
        }
    }
    let secs = t.elapsed().as_secs_f64();
    pass &= secs < 300.0;
    report("7", pass, &format!("9 grid points, max |residual|/se {worst:.2}, {secs:.0} s"));
    assert!(pass);
}

#[test]
fn criterion_08_threshold_monte_carlo() {
    let t = Instant::now();
    let transient = SimConfig::new(stable(1, 1.2, 0.0, 0.3), 100.0, 1.0, 1_000_000, 10_000, 800);
    let est = run_big_jump_paths(&transient).unwrap();
    let upper = est.freq + est.ci_half_width();
    let pass_a = upper < est.theory_bound;
    report(
        "8a",
        pass_a,
        &format!(
            "q = 0.3: freq {:.4} + half-width {:.4} against bound {:.4}, {} censored",
            est.freq,
            est.ci_half_width(),
            est.theory_bound,
            est.censored
        ),
    );

    let recurrent = SimConfig::new(stable(1, 1.2, 0.0, 0.0), 100.0, 1.0, 1_000_000, 10_000, 801);
    let est = run_big_jump_paths(&recurrent).unwrap();
    let pass_b = est.ci_high >= 0.9;
    report(
        "8b",
        pass_b,
        &format!(
            "q = 0: freq {:.4}, 95% interval [{:.4}, {:.4}] against 0.9, {} censored",
            est.freq, est.ci_low, est.ci_high, est.censored
        ),
    );
    let secs = t.elapsed().as_secs_f64();
    let pass_t = secs < 900.0;
    report("8 runtime", pass_t, &format!("{secs:.0} s against 900 s"));
    assert!(pass_a && pass_b && pass_t);
}

#[test]
fn criterion_09_recurrence_criterion() {
    let settings = RecurrenceSettings {
        chain_links: 0,
        ..RecurrenceSettings::default()
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for d in 1..=3 {
        for (name, input) in [
            ("boundary", boundary_growth(d, 1.0, 1.5).unwrap()),
            ("critical", critical_growth(d, 1.0).unwrap()),
        ] {
            let r = analyze(&input, &settings).unwrap();
            let ok = r.spread <= 0.1 && r.integral.verdict == Verdict::DivergesNumerically;
            parts.push(format!("{name} d={d} spread {:.3}", r.spread));
            pass &= ok;
        }
    }
    report("9", pass, &parts.join(", "));
    assert!(pass);
}

#[test]
fn criterion_10_capacity_chain() {
    let settings = RecurrenceSettings::default();
    let check = |input: &RecurrenceInput| {
        let r = analyze(input, &settings).unwrap();
        let energies: Vec<f64> = r.capacity.iter().map(|c| c.energy).collect();
        (r.capacity_decreasing && r.capacity_within_bound, energies)
    };
    let (ok_bg, e_bg) = check(&boundary_growth(1, 1.0, 1.5).unwrap());
    let input = RecurrenceInput::from_model(stable(1, 1.2, 0.0, 0.0), LFamily::Power { kappa: 0.0 });
    let (ok_pq, e_pq) = check(&input);
    let pass_a = ok_bg && ok_pq;
    let fmt = |e: &[f64]| e.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>().join(" > ");
    report(
        "10a",
        pass_a,
        &format!("decreasing and under K/∫: boundary growth {}, p = q = 0 {}", fmt(&e_bg), fmt(&e_pq)),
    );
    let span = e_pq[0] / e_pq[e_pq.len() - 1];
    let pass_b = e_pq.len() == 4 && span >= 10.0;
    report("10b", pass_b, &format!("p = q = 0 decrease over three extensions {span:.2}x against 10x"));
    assert!(pass_a && pass_b);
}

fn run_cli(args: &[&str]) -> i32 {
    let mut full = vec!["jumprec"];
    full.extend_from_slice(args);
    jumprec::cli::run(full)
}

#[test]
fn criterion_11_reproducibility() {
    let full = std::env::var_os("JUMPREC_FULL_REPRO").is_some();
    let (hit_paths, dyn_paths) = if full { (10_000, 100_000) } else { (200, 2_000) };
    let configs = [
        format!("d = 1\nalpha = 1.2\nbeta = 1.2\nq = 0.3\nx0 = 100\nn_paths = {hit_paths}\nmax_jumps = 1000000\nevents = 5\nseed = 800\n"),
        format!("d = 1\nalpha = 1.2\nbeta = 1.2\nq = 0\nx0 = 100\nn_paths = {hit_paths}\nmax_jumps = 1000000\nevents = 5\nseed = 801\n"),
        format!("mode = dynkin\nd = 1\nalpha = 1.2\nbeta = 1.2\nq = -0.2\ndelta = 0.3\nt_star = 10\nx0 = 5\nn_paths = {dyn_paths}\nmax_jumps = 100000\nseed = 700\n"),
        format!("mode = dynkin\nd = 1\nalpha = 1.2\nbeta = 1.2\nq = 0.3\ndelta = 0.5\nt_star = 10\nx0 = 5\nn_paths = {dyn_paths}\nmax_jumps = 100000\nseed = 708\n"),
    ];
    let dir = tempfile::tempdir().unwrap();
    let mut pass = true;
    for (i, config) in configs.iter().enumerate() {
        let base = dir.path().join(format!("run{i}"));
        let first = base.join("first");
        let second = base.join("second");
        std::fs::create_dir_all(&base).unwrap();
        let cfg = base.join("sim.cfg");
        std::fs::write(&cfg, config).unwrap();
        let c1 = run_cli(&["simulate", "--config", cfg.to_str().unwrap(), "--out", first.to_str().unwrap()]);
        let manifest = first.join("manifest.json");
        let c2 = run_cli(&[
            "simulate",
            "--config",
            manifest.to_str().unwrap(),
            "--out",
            second.to_str().unwrap(),
            "--threads",
            "2",
        ]);
        pass &= c1 == c2;
        let result = |p: &std::path::Path| {
            let v: serde_json::Value =
                serde_json::from_str(&std::fs::read_to_string(p.join("simulate.json")).unwrap()).unwrap();
            serde_json::to_vec(&v["result"]).unwrap()
        };
        pass &= result(&first) == result(&second);
        for f in ["events.csv"] {
            let (a, b) = (first.join(f), second.join(f));
            if a.exists() || b.exists() {
                pass &= std::fs::read(a).ok() == std::fs::read(b).ok();
            }
        }
    }
    report(
        "11",
        pass,
        &format!(
            "{} simulate manifests re-run, results and event logs compared byte for byte ({} size)",
            configs.len(),
            if full { "full" } else { "reduced" }
        ),
    );
    assert!(pass);
}
