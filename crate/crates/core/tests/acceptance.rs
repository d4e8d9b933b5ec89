//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any criterion fails or overruns its time budget.

mod common;

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use num_complex::Complex64;
use nv_detect::discrim::{conditional_errors, error_at_chi, lambda_eigenvalues, ConditionalErrors};
use nv_detect::field::{cpmg_sequence, Tone};
use nv_detect::noise::{w_cpmg_analytic, w_numeric};
use nv_detect::simulate::{closed_form_multicopy, simulate_detection, simulate_multicopy};
use nv_detect::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = std::result::Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fig5_anchor() -> Outcome {
    let opt = optimize_pulses(&ac_scenario(0.0), 2, 200).map_err(|e| e.to_string())?;
    ensure((opt.p_error - 0.124).abs() <= 0.01, || {
        format!("P_e = {:.5}", opt.p_error)
    })?;
    Ok(format!("min P_e = {:.5} at N = {}", opt.p_error, opt.point.value()))
}

fn fig1_anchor() -> Outcome {
    let opt = optimize_time(&dc_scenario(50.0), 0.0, 3.0).map_err(|e| e.to_string())?;
    ensure((opt.p_error - 0.2).abs() <= 0.02, || {
        format!("P_e = {:.5}", opt.p_error)
    })?;
    Ok(format!(
        "min P_e = {:.5} at T = {:.4} µs",
        opt.p_error,
        opt.point.value()
    ))
}

fn echo_time() -> Outcome {
    let noise = bath();
    let excess = |t: f64| noise.kappa.powi(2) * w_numeric(&PulseSequence::new(t, vec![t / 2.0]).unwrap(), &noise) - 1.0;
    let (mut lo, mut hi) = (0.5, 10.0);
    ensure(excess(lo) < 0.0 && excess(hi) > 0.0, || "root not bracketed".into())?;
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if excess(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    ensure((lo - 2.8).abs() <= 0.2, || format!("T = {lo:.4}"))?;
    Ok(format!("ν = 1/e at T = {lo:.4} µs"))
}

fn cpmg_closed_form() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in [2, 4, 8, 16, 32] {
        for tau in [0.1, 0.25, 0.5, 1.0, 2.0] {
            for rate in [0.01, 0.04, 0.2] {
                let noise = NoiseModel::new(1.0, 1.0 / rate).unwrap();
                let a = w_cpmg_analytic(n, tau, &noise).map_err(|e| e.to_string())?;
                let b = w_numeric(&cpmg_sequence(n, tau).unwrap(), &noise);
                let rel = (a - b).abs() / b;
                ensure(rel < 1e-8, || format!("N={n} τ={tau} R={rate}: rel {rel:e}"))?;
                worst = worst.max(rel);
            }
        }
    }
    Ok(format!("75 cases, worst relative difference {worst:.2e}"))
}

fn helstrom_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let grid: Vec<f64> = (0..10_000).map(|k| -PI + 2.0 * PI * k as f64 / 10_000.0).collect();
    let mut measured = 0;
    for case in 0..1000 {
        let p1: f64 = rng.random();
        let priors = Priors::new(1.0 - p1, p1).unwrap();
        let coh = CoherencePair::new(
            rng.random(),
            Complex64::from_polar(rng.random(), rng.random_range(-PI..PI)),
        )
        .unwrap();
        let (lm, lp) = lambda_eigenvalues(&priors, &coh);
        let general = helstrom_general(&coh.rho0(), &coh.rho1(), &priors).map_err(|e| e.to_string())?;
        let out = discriminate(&priors, &coh);
        ensure(
            (lm - general.eigenvalues[0]).abs() < 1e-12 && (lp - general.eigenvalues[1]).abs() < 1e-12,
            || format!("case {case}: eigenvalues differ"),
        )?;
        ensure((out.p_error - general.p_error).abs() < 1e-12, || {
            format!("case {case}: P_e differs")
        })?;
        ensure(out.regime == general.regime, || format!("case {case}: regime differs"))?;
        if let Some(chi) = out.chi {
            measured += 1;
            let (pi0, pi1) = projectors_from_chi(chi);
            ensure(
                pi0.max_diff(&general.pi0) < 1e-12 && pi1.max_diff(&general.pi1) < 1e-12,
                || format!("case {case}: projectors differ"),
            )?;
            let best = error_at_chi(&priors, &coh, chi);
            let beaten = grid.iter().any(|&x| error_at_chi(&priors, &coh, x) < best - 1e-15);
            ensure(!beaten, || format!("case {case}: grid angle beats χ*"))?;
        }
    }
    Ok(format!("1000 cases ({measured} needing a measurement)"))
}

fn multicopy_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for pair in 0..100 {
        let p1: f64 = rng.random();
        let priors = Priors::new(1.0 - p1, p1).unwrap();
        let cond = ConditionalErrors {
            c_1_given_0: rng.random(),
            c_0_given_1: rng.random(),
        };
        for m in 1..=9 {
            let f = multicopy_error(&priors, &cond, m).map_err(|e| e.to_string())?;
            let e = enumerate_multicopy(&priors, cond.c_1_given_0, cond.c_0_given_1, m);
            ensure((f - e).abs() < 1e-14, || format!("pair {pair}, M={m}: {f} vs {e}"))?;
        }
    }
    let s = ac_scenario(0.0);
    let opt = optimize_pulses(&s, 2, 200).map_err(|e| e.to_string())?;
    let coh = s.coherence(opt.point).map_err(|e| e.to_string())?;
    let cond = conditional_errors(&coh, opt.chi.ok_or("no measurement at the optimum")?);
    let mut prev = f64::NEG_INFINITY;
    for m in (1..=41).step_by(2) {
        let score = -multicopy_error(&s.priors, &cond, m).map_err(|e| e.to_string())?.ln();
        ensure(score > prev, || format!("−ln P_e,M not increasing at M={m}"))?;
        prev = score;
    }
    Ok(format!("enumeration agrees for M ≤ 9; −ln P_e,41 = {prev:.3}"))
}

fn efficiency_model() -> Outcome {
    let check = |priors: &Priors, coh: &CoherencePair| -> std::result::Result<(), String> {
        let out = discriminate(priors, coh);
        let Some(chi) = out.chi else { return Ok(()) };
        let at = |eta: f64| inefficient_error(priors, coh, chi, eta).unwrap();
        let (e0, e1) = (at(0.0), at(1.0));
        ensure((e0 - priors.p1).abs() < 1e-12, || {
            format!("η=0 gives {e0}, P₁ = {}", priors.p1)
        })?;
        ensure((e1 - out.p_error).abs() < 1e-12, || {
            format!("η=1 gives {e1}, Helstrom {}", out.p_error)
        })?;
        for k in 1..10 {
            let eta = k as f64 / 10.0;
            ensure((at(eta) - (e0 + eta * (e1 - e0))).abs() < 1e-12, || {
                format!("not affine at η={eta}")
            })?;
        }
        Ok(())
    };
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1000 {
        let p1: f64 = rng.random();
        let priors = Priors::new(1.0 - p1, p1).unwrap();
        let coh = CoherencePair::new(
            rng.random(),
            Complex64::from_polar(rng.random(), rng.random_range(-PI..PI)),
        )
        .unwrap();
        check(&priors, &coh)?;
    }
    let s = ac_scenario(0.0);
    let opt = optimize_pulses(&s, 2, 200).map_err(|e| e.to_string())?;
    let coh = s.coherence(opt.point).map_err(|e| e.to_string())?;
    check(&s.priors, &coh)?;
    Ok(format!("1000 random cases and the N = {} optimum", opt.point.value()))
}

/// One randomized scenario of the Monte Carlo battery.
fn battery_case(i: u64, rng: &mut ChaCha8Rng) -> (Scenario, Interrogation, u32) {
    let p1 = rng.random_range(0.3..0.7);
    let eta = if i.is_multiple_of(3) {
        1.0
    } else {
        rng.random_range(0.5..1.0)
    };
    let (scenario, point) = match i % 5 {
        0 => (
            dc_scenario(rng.random_range(5.0..60.0)).with_dephasing(Dephasing::Exact),
            Interrogation::Time(rng.random_range(0.05..0.6)),
        ),
        1 => (
            dc_gaussian_scenario(rng.random_range(20.0..60.0), rng.random_range(0.5..20.0))
                .with_dephasing(Dephasing::Exact),
            Interrogation::Time(rng.random_range(0.05..0.5)),
        ),
        2 => (
            ac_scenario(rng.random_range(0.0..0.6)),
            Interrogation::Pulses(2 * rng.random_range(5..40)),
        ),
        3 => {
            let mut s = ac_scenario(rng.random_range(0.0..0.4));
            if let FieldHypothesis::AcCosine { sigma_f, .. } = &mut s.field {
                *sigma_f = rng.random_range(0.005..0.03);
            }
            (s, Interrogation::Pulses(2 * rng.random_range(5..30)))
        }
        _ => {
            let field = MultiTone::new(vec![
                Tone::sine(rng.random_range(0.5..2.0), 1.0),
                Tone::sine(rng.random_range(0.5..2.0), 1.5),
            ])
            .unwrap();
            (
                Scenario::new(bath(), FieldHypothesis::MultiTone(field), Protocol::NodeLocked),
                Interrogation::Time(rng.random_range(1.0..8.0)),
            )
        }
    };
    let copies = if i >= 15 { 3 } else { 1 };
    (
        scenario.with_priors(Priors::new(1.0 - p1, p1).unwrap()).with_eta(eta),
        point,
        copies,
    )
}

fn monte_carlo_battery() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let (s, point, copies) = battery_case(i, &mut rng);
        let seed = 1000 + i;
        let (expect, got) = if copies == 1 {
            let e = s.evaluate(point).map_err(|e| e.to_string())?.p_error;
            (
                e,
                simulate_detection(&s, point, 100_000, seed).map_err(|e| e.to_string())?,
            )
        } else {
            let e = closed_form_multicopy(&s, point, copies).map_err(|e| e.to_string())?;
            (
                e,
                simulate_multicopy(&s, point, copies, 100_000, seed).map_err(|e| e.to_string())?,
            )
        };
        let z = got.z_score(expect);
        ensure(z < 3.0, || {
            format!(
                "scenario {i}: empirical {:.5} vs closed form {expect:.5} ({z:.2} SE)",
                got.error_rate
            )
        })?;
        worst = worst.max(z);
    }
    Ok(format!("20 scenarios × 10⁵ shots, worst deviation {worst:.2} SE"))
}

fn sigma_ordering() -> Outcome {
    let dc: Vec<f64> = [1.0, 25.0, 50.0]
        .iter()
        .map(|&s| optimize_time(&dc_gaussian_scenario(50.0, s), 0.0, 3.0).map(|o| o.p_error))
        .collect::<Result<_>>()
        .map_err(|e| e.to_string())?;
    let ac: Vec<f64> = [0.2, 0.4, 0.6]
        .iter()
        .map(|&s| optimize_pulses(&ac_scenario(s), 2, 200).map(|o| o.p_error))
        .collect::<Result<_>>()
        .map_err(|e| e.to_string())?;
    for (name, v) in [("DC", &dc), ("AC", &ac)] {
        ensure(v.windows(2).all(|w| w[0] < w[1]), || {
            format!("{name} minima not increasing: {v:?}")
        })?;
    }
    Ok(format!(
        "DC {:.4} < {:.4} < {:.4}; AC {:.4} < {:.4} < {:.4}",
        dc[0], dc[1], dc[2], ac[0], ac[1], ac[2]
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("AC anchor: min P_e ≈ 0.124", Duration::from_secs(1), fig5_anchor),
        ("DC anchor: min P_e ≈ 0.2", Duration::from_secs(1), fig1_anchor),
        ("echo dephasing time ≈ 2.8 µs", Duration::from_secs(1), echo_time),
        (
            "CPMG closed form vs exact integral",
            Duration::from_secs(5),
            cpmg_closed_form,
        ),
        (
            "Helstrom closed form vs eigen-decomposition",
            Duration::from_secs(5),
            helstrom_equivalence,
        ),
        (
            "multi-copy formula vs enumeration",
            Duration::from_secs(5),
            multicopy_oracle,
        ),
        ("efficiency model affine in η", Duration::from_secs(1), efficiency_model),
        ("Monte Carlo battery", Duration::from_secs(60), monte_carlo_battery),
        ("σ_b ordering of minima", Duration::from_secs(5), sigma_ordering),
    ];
    let mut failed = 0;
    for (k, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let (status, detail) = match outcome {
            Ok(d) if elapsed <= *budget => ("PASS", d),
            Ok(d) => ("FAIL", format!("{d}; over budget {budget:?}")),
            Err(e) => ("FAIL", e),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!("{status} [{}] {name}: {detail} ({:.3} s)", k + 1, elapsed.as_secs_f64());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
