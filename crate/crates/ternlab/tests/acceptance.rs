//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::process::{Command, ExitCode};
use std::time::Instant;

use ternlab::{parse_csv, run_sweep, ExperimentConfig};
use ternlab_core::selftest::{module_identities, submultiplicativity, SLOW_CONTRACTION_ITERATIONS};
use ternlab_core::verifier::constants;
use ternlab_core::{
    generalized_distance, make_perturbed_map, run_experiment, stabilize, Arity, DilationMode,
    Experiment, PerturbationSpec, RunStatus,
};

const EXPAND: DilationMode = DilationMode::Expand;
const CONTRACT: DilationMode = DilationMode::Contract;

struct Verdict {
    ok: bool,
    detail: String,
}

fn verdict(ok: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        ok,
        detail: detail.into(),
    }
}

fn exp(
    k: usize,
    theta_prime: f64,
    p: f64,
    mode: DilationMode,
    arity: Arity,
    seed: u64,
) -> Experiment {
    let mut e = Experiment::canonical(k, theta_prime, p, mode, arity, seed);
    e.stabilizer.max_iterations = SLOW_CONTRACTION_ITERATIONS;
    e
}

/// Exact derivations are fixed points: d(f, D) and all residuals vanish.
fn exact_recovery(arity: Arity) -> Verdict {
    let mut worst_distance: f64 = 0.0;
    let mut worst_residual: f64 = 0.0;
    let mut runs = 0;
    let mut all_certified = true;
    for k in [2, 3, 4] {
        for seed in 0..20u64 {
            for (p, mode) in [(0.5, EXPAND), (4.0, CONTRACT)] {
                let out = run_experiment(&exp(k, 0.0, p, mode, arity, 1000 + seed)).unwrap();
                all_certified &= out.status == RunStatus::Certified;
                let cert = out.certificate.unwrap();
                worst_distance = worst_distance.max(cert.d_f_d);
                worst_residual = worst_residual.max(cert.residuals.unwrap().max_normalized());
                runs += 1;
            }
        }
    }
    verdict(
        all_certified && worst_distance <= 1e-10 && worst_residual <= 1e-10,
        format!("{runs} runs, max d(f,D) = {worst_distance:e}, max residual = {worst_residual:e} (limit 1e-10)"),
    )
}

/// Successive distances follow `L^n profile[0]` for the pure perturbation.
fn geometric_contraction(arity: Arity) -> Verdict {
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for (p, mode) in [(0.5, EXPAND), (4.0, CONTRACT)] {
        for k in [2, 3] {
            for seed in 0..4u64 {
                let mut e = exp(k, 0.01, p, mode, arity, 2000 + seed);
                e.derivation_norm = 0.0;
                let cert = run_experiment(&e).unwrap().certificate.unwrap();
                let expected_l = 3f64.powf(if mode == EXPAND { p - 1.0 } else { 1.0 - p });
                if (cert.contraction_constant - expected_l).abs() > 1e-15 {
                    return verdict(
                        false,
                        format!("L = {} != {expected_l}", cert.contraction_constant),
                    );
                }
                worst = worst.max(cert.geometric_deviation(20));
                checked += 1;
            }
        }
    }
    verdict(
        worst <= 1e-9,
        format!("{checked} profiles, max relative deviation = {worst:e} (limit 1e-9)"),
    )
}

/// The limit equals the unperturbed derivation; the remaining gap is the
/// closed-form amplitude `L^n theta'/theta`.
fn limit_oracle(arity: Arity) -> Verdict {
    let mut worst_gap: f64 = 0.0;
    let mut worst_closed_form: f64 = 0.0;
    let mut ok = true;
    for (p, mode) in [
        (0.25, EXPAND),
        (0.5, EXPAND),
        (4.0, CONTRACT),
        (5.0, CONTRACT),
    ] {
        for k in [2, 3, 4] {
            let e = exp(k, 0.01, p, mode, arity, 3000 + k as u64);
            let tol = e.stabilizer.convergence_tolerance;
            let out = run_experiment(&e).unwrap();
            let cert = out.certificate.unwrap();
            let gap = out.limit_gap.unwrap();
            let closed_form = 0.25 * cert.contraction_constant.powi(cert.n_star as i32);
            ok &= cert.converged && gap <= 10.0 * tol && (gap - closed_form).abs() <= 10.0 * tol;
            worst_gap = worst_gap.max(gap);
            worst_closed_form = worst_closed_form.max((gap - closed_form).abs());
        }
    }
    verdict(
        ok,
        format!("max d(D, D0) = {worst_gap:e} (limit 1e-8), max |d(D, D0) - L^n/4| = {worst_closed_form:e}"),
    )
}

/// `d(f, D) <= d(f, Jf)/(1 - L)` on every converged row of a 3x3x3 sweep.
fn sound_bound_sweep(arity: Arity) -> Verdict {
    let text = format!(
        "[control]\narity = {}\n[grid]\np = [0.25, 0.5, 4.0]\ntheta_prime = [0.001, 0.01, 0.1]\nk = [2, 3, 4]\nseed = [4000]\n",
        arity.count()
    );
    let cfg = ExperimentConfig::from_toml(&text).unwrap();
    let points = run_sweep(&cfg, None).unwrap();
    let mut converged = 0;
    let mut violations = 0;
    let mut errors = 0;
    for pt in &points {
        match &pt.result {
            Ok(out) => {
                if let Some(c) = out.certificate.as_ref().filter(|c| c.converged) {
                    converged += 1;
                    if c.d_f_d > c.sound_bound * (1.0 + 1e-6) {
                        violations += 1;
                    }
                }
            }
            Err(_) => errors += 1,
        }
    }
    verdict(
        points.len() == 27 && violations == 0 && errors == 0 && converged == 27,
        format!(
            "{} rows, {converged} converged, {violations} violations, {errors} errors",
            points.len()
        ),
    )
}

/// Measured sup ratio against `L/(1-L)` in the expand regime.
fn theorem_bound(arity: Arity) -> Verdict {
    let mut ok = true;
    let mut lines = Vec::new();
    for p in [0.25, 0.5, 0.75] {
        let out = run_experiment(&exp(3, 0.01, p, EXPAND, arity, 5000)).unwrap();
        let cert = out.certificate.unwrap();
        let l = 3f64.powf(p - 1.0);
        let bound = l / (1.0 - l);
        ok &= cert.converged && cert.d_f_d <= bound * (1.0 + 1e-6) && cert.paper_bound_holds;
        ok &= (cert.d_f_d - 0.25).abs() <= 1e-6;
        lines.push(format!("p={p}: {:.6} <= {bound:.6}", cert.d_f_d));
    }
    // Independent closed form at p = 1/2: L/(1-L) = (sqrt 3 + 1)/2.
    ok &= (constants::theorem_constant(EXPAND, 3f64.powf(-0.5)) - (3f64.sqrt() + 1.0) / 2.0).abs()
        < 1e-12;
    verdict(ok, lines.join(", "))
}

fn criteria_one_to_five(arity: Arity) -> Vec<(&'static str, Verdict)> {
    vec![
        ("exact fixed-point recovery", exact_recovery(arity)),
        ("geometric contraction", geometric_contraction(arity)),
        ("limit oracle", limit_oracle(arity)),
        ("sound bound over 3x3x3 sweep", sound_bound_sweep(arity)),
        ("expand theorem bound", theorem_bound(arity)),
    ]
}

/// Stated 2-based constant holds and the 3-based one is tighter.
fn stated_expand_constant() -> Verdict {
    let mut ok = true;
    let mut lines = Vec::new();
    for p in [0.25, 0.5, 0.75] {
        let row = run_experiment(&exp(3, 0.01, p, EXPAND, Arity::Six, 5000))
            .unwrap()
            .ledger;
        let two_based = 2f64.powf(p) / (2.0 - 2f64.powf(p));
        let three_based = 3f64.powf(p) / (3.0 - 3f64.powf(p));
        ok &= row
            .paper_constant
            .is_some_and(|c| (c - two_based).abs() <= 1e-12 * two_based);
        ok &= (row.derived_constant - three_based).abs() <= 1e-12 * three_based;
        ok &= row.paper_holds == Some(true);
        ok &= row.derived_tighter_than_paper == Some(true) && three_based < two_based;
        lines.push(format!("p={p}: {three_based:.4} < {two_based:.4}"));
    }
    // At p = 1/2 the two closed forms are (sqrt 3 + 1)/2 and 1 + sqrt 2.
    ok &= ((3f64.sqrt() + 1.0) / 2.0 - 1.3660254037844386).abs() < 1e-15;
    ok &= (1.0 + 2f64.sqrt() - 2.414213562373095).abs() < 1e-15;
    verdict(ok, lines.join(", "))
}

/// In the contract regime the measured ratio 1/4 exceeds the stated
/// constant `1/(3^p - 3)` while the sound bound holds.
fn contract_constant_falsified() -> Verdict {
    let mut ok = true;
    let mut lines = Vec::new();
    for p in [4.0, 5.0] {
        let row = run_experiment(&exp(3, 0.01, p, CONTRACT, Arity::Six, 6000))
            .unwrap()
            .ledger;
        let stated = 1.0 / (3f64.powf(p) - 3.0);
        let measured = row.measured_ratio.unwrap();
        ok &= (measured - 0.25).abs() <= 1e-6;
        ok &= measured > stated;
        ok &= row
            .paper_constant
            .is_some_and(|c| (c - stated).abs() <= 1e-15);
        ok &= row.paper_holds == Some(false) && row.sound_holds == Some(true);
        lines.push(format!(
            "p={p}: measured {measured:.6} > stated {stated:.6}"
        ));
    }
    ok &= (1.0 / (3f64.powi(4) - 3.0) - 1.0 / 78.0).abs() < 1e-18;
    verdict(ok, lines.join(", "))
}

fn jordan_chain() -> Verdict {
    let results = criteria_one_to_five(Arity::Four);
    let failed: Vec<&str> = results
        .iter()
        .filter(|(_, v)| !v.ok)
        .map(|(n, _)| *n)
        .collect();
    let detail = if failed.is_empty() {
        format!(
            "criteria 1-5 pass with arity-4 control ({})",
            results[0].1.detail
        )
    } else {
        format!("failed with arity-4 control: {}", failed.join(", "))
    };
    verdict(failed.is_empty(), detail)
}

fn algebra_axioms() -> Verdict {
    let identities = module_identities(9000, 1000).unwrap();
    let norm = submultiplicativity(9000, 1000, 1.0).unwrap();
    verdict(
        identities.ok() && norm.ok(),
        format!(
            "module identities {}/{}, norm inequality {}/{}",
            identities.passed, identities.total, norm.passed, norm.total
        ),
    )
}

/// Three starting maps at finite distance share one limit.
fn uniqueness() -> Verdict {
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for (p, mode) in [(0.5, EXPAND), (4.0, CONTRACT)] {
        let e = exp(3, 0.01, p, mode, Arity::Six, 7000);
        let alg = e.algebra().unwrap();
        let phi = e.control().unwrap();
        let probes = e.probes.build(3).unwrap();
        let d0 = e.reference_derivation().unwrap();
        let starts = [
            make_perturbed_map(d0.clone(), &PerturbationSpec::power(0.01, p, 1), &alg).unwrap(),
            make_perturbed_map(d0.clone(), &PerturbationSpec::power(0.02, p, 1), &alg).unwrap(),
            make_perturbed_map(d0.clone(), &PerturbationSpec::power(0.015, p, 2), &alg).unwrap(),
        ];
        let tol = e.stabilizer.convergence_tolerance;
        let limits: Vec<_> = starts
            .iter()
            .map(|f| {
                let (d, cert) = stabilize(f, &phi, &e.stabilizer, &probes).unwrap();
                ok &= cert.converged;
                d
            })
            .collect();
        for i in 0..3 {
            for j in i + 1..3 {
                ok &= generalized_distance(&starts[i], &starts[j], &phi, &probes)
                    .unwrap()
                    .is_finite();
                let gap = generalized_distance(&limits[i], &limits[j], &phi, &probes).unwrap();
                worst = worst.max(gap);
                ok &= gap <= 10.0 * tol;
            }
        }
    }
    verdict(
        ok,
        format!("max pairwise limit distance = {worst:e} (limit 1e-8)"),
    )
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    std::fs::write(
        &cfg,
        "[grid]\np = [0.5, 4.0]\ntheta_prime = [0.01, 0.1]\nk = [2, 3]\nseed = [1, 2]\n",
    )
    .unwrap();
    let mut outputs = Vec::new();
    for (name, jobs) in [("a.csv", "1"), ("b.csv", "4")] {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_ternlab"))
            .args([
                "sweep",
                "--config",
                cfg.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
                "--jobs",
                jobs,
            ])
            .status()
            .unwrap();
        if !status.success() {
            return verdict(false, format!("sweep exited with {status}"));
        }
        outputs.push(std::fs::read(&out).unwrap());
    }
    let rows = parse_csv(std::str::from_utf8(&outputs[0]).unwrap())
        .map(|r| r.len())
        .unwrap_or(0);
    verdict(
        outputs[0] == outputs[1] && rows == 16,
        format!(
            "{rows} rows, {} bytes, identical = {}",
            outputs[0].len(),
            outputs[0] == outputs[1]
        ),
    )
}

fn main() -> ExitCode {
    let started = Instant::now();
    let mut criteria: Vec<(String, Box<dyn Fn() -> Verdict>)> = Vec::new();
    let names = [
        "exact fixed-point recovery",
        "geometric contraction",
        "limit oracle",
        "sound bound over 3x3x3 sweep",
        "expand theorem bound",
    ];
    let runners: [fn(Arity) -> Verdict; 5] = [
        exact_recovery,
        geometric_contraction,
        limit_oracle,
        sound_bound_sweep,
        theorem_bound,
    ];
    for (name, run) in names.into_iter().zip(runners) {
        criteria.push((name.to_owned(), Box::new(move || run(Arity::Six))));
    }
    criteria.push((
        "stated expand constant".into(),
        Box::new(stated_expand_constant),
    ));
    criteria.push((
        "contract constant falsified".into(),
        Box::new(contract_constant_falsified),
    ));
    criteria.push(("jordan chain".into(), Box::new(jordan_chain)));
    criteria.push(("algebra axioms".into(), Box::new(algebra_axioms)));
    criteria.push(("uniqueness of the limit".into(), Box::new(uniqueness)));
    criteria.push(("sweep determinism".into(), Box::new(determinism)));

    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let v = run();
        if !v.ok {
            failures += 1;
        }
        println!(
            "criterion {:>2} {:<30} {} ({:.1}s) {}",
            i + 1,
            name,
            if v.ok { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64(),
            v.detail
        );
    }
    println!(
        "acceptance: {} of {} criteria passed in {:.1}s",
        criteria.len() - failures,
        criteria.len(),
        started.elapsed().as_secs_f64()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
