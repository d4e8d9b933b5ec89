//! A quick oracle battery runnable from the command line.

use std::f64::consts::PI;
use std::io::Write;
use std::time::Instant;

use num_complex::Complex64;
use nv_detect::discrim::{error_at_chi, ConditionalErrors};
use nv_detect::field::cpmg_sequence;
use nv_detect::noise::{mc_nu_estimate, nu_free_exact, w_cpmg_analytic, w_numeric};
use nv_detect::{
    discriminate, helstrom_general, inefficient_error, multicopy_error, optimize_pulses, optimize_time, CoherencePair,
    FieldHypothesis, NoiseModel, Priors, Protocol, PulseSequence, Scenario,
};

use crate::failure::Failure;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn bath() -> NoiseModel {
    NoiseModel::new(3.6, 25.0).expect("valid noise")
}

fn cases() -> Vec<(Priors, CoherencePair)> {
    let mut out = Vec::new();
    for p1 in [0.1, 0.3, 0.5, 0.7, 0.9] {
        for nu in [0.2, 0.6, 1.0] {
            for r in [0.3, 1.0] {
                for k in 0..8 {
                    let mu = Complex64::from_polar(r, -PI + PI * k as f64 / 4.0 + 0.1);
                    out.push((Priors::new(1.0 - p1, p1).unwrap(), CoherencePair::new(nu, mu).unwrap()));
                }
            }
        }
    }
    out
}

fn cpmg_closed_form() -> Check {
    let mut worst: f64 = 0.0;
    for n in [2, 4, 8, 16, 32] {
        for tau in [0.1, 0.25, 0.5, 1.0, 2.0] {
            for rate in [0.01, 0.04, 0.2] {
                let noise = NoiseModel::new(1.0, 1.0 / rate).unwrap();
                let a = w_cpmg_analytic(n, tau, &noise).map_err(|e| e.to_string())?;
                let b = w_numeric(&cpmg_sequence(n, tau).unwrap(), &noise);
                worst = worst.max((a - b).abs() / b);
            }
        }
    }
    ensure(worst < 1e-8, || format!("relative difference {worst:e}"))?;
    Ok(format!("worst relative difference {worst:.1e}"))
}

fn helstrom() -> Check {
    let grid: Vec<f64> = (0..2000).map(|k| -PI + 2.0 * PI * k as f64 / 2000.0).collect();
    for (priors, coh) in cases() {
        let out = discriminate(&priors, &coh);
        let g = helstrom_general(&coh.rho0(), &coh.rho1(), &priors).map_err(|e| e.to_string())?;
        ensure((out.p_error - g.p_error).abs() < 1e-12, || {
            format!("{priors:?} {coh:?}")
        })?;
        if let Some(chi) = out.chi {
            let best = error_at_chi(&priors, &coh, chi);
            ensure(
                grid.iter().all(|&x| error_at_chi(&priors, &coh, x) >= best - 1e-15),
                || format!("grid beats χ* for {priors:?} {coh:?}"),
            )?;
        }
    }
    Ok("closed form matches eigen-decomposition".into())
}

/// Majority-vote error over all 2ᴹ outcome strings, Neumaier-summed.
fn enumerate(priors: &Priors, cond: &ConditionalErrors, m: u32) -> f64 {
    let (mut sum, mut carry) = (0.0f64, 0.0f64);
    for bits in 0u32..(1 << m) {
        let yes = bits.count_ones();
        let (mut p0, mut p1) = (1.0, 1.0);
        for k in 0..m {
            let set = bits >> k & 1 == 1;
            p0 *= if set { cond.c_1_given_0 } else { 1.0 - cond.c_1_given_0 };
            p1 *= if set { 1.0 - cond.c_0_given_1 } else { cond.c_0_given_1 };
        }
        let says_yes = match (2 * yes).cmp(&m) {
            std::cmp::Ordering::Greater => 1.0,
            std::cmp::Ordering::Equal => 0.5,
            std::cmp::Ordering::Less => 0.0,
        };
        for t in [priors.p0 * p0 * says_yes, priors.p1 * p1 * (1.0 - says_yes)] {
            let next = sum + t;
            carry += if sum.abs() >= t.abs() {
                (sum - next) + t
            } else {
                (t - next) + sum
            };
            sum = next;
        }
    }
    sum + carry
}

fn multicopy() -> Check {
    for p1 in [0.2, 0.5, 0.8] {
        let priors = Priors::new(1.0 - p1, p1).unwrap();
        for a in [0.05, 0.3, 0.7] {
            for b in [0.1, 0.45, 0.9] {
                let cond = ConditionalErrors {
                    c_1_given_0: a,
                    c_0_given_1: b,
                };
                for m in 1..=9 {
                    let f = multicopy_error(&priors, &cond, m).map_err(|e| e.to_string())?;
                    let e = enumerate(&priors, &cond, m);
                    ensure((f - e).abs() < 1e-14, || format!("M={m}: {f} vs {e}"))?;
                }
            }
        }
    }
    Ok("formula matches enumeration for M ≤ 9".into())
}

fn efficiency() -> Check {
    for (priors, coh) in cases() {
        let out = discriminate(&priors, &coh);
        let Some(chi) = out.chi else { continue };
        let e0 = inefficient_error(&priors, &coh, chi, 0.0).map_err(|e| e.to_string())?;
        let e1 = inefficient_error(&priors, &coh, chi, 1.0).map_err(|e| e.to_string())?;
        let mid = inefficient_error(&priors, &coh, chi, 0.5).map_err(|e| e.to_string())?;
        ensure((e0 - priors.p1).abs() < 1e-12, || format!("η=0: {e0}"))?;
        ensure((e1 - out.p_error).abs() < 1e-12, || format!("η=1: {e1}"))?;
        ensure((mid - 0.5 * (e0 + e1)).abs() < 1e-12, || format!("η=0.5: {mid}"))?;
    }
    Ok("affine in η with the expected endpoints".into())
}

fn monte_carlo() -> Check {
    let noise = bath();
    let seq = PulseSequence::free_evolution(0.3).unwrap();
    let est = mc_nu_estimate(&seq, &noise, 100_000, noise.default_dt(), 7).map_err(|e| e.to_string())?;
    let exact = nu_free_exact(&noise, 0.3).map_err(|e| e.to_string())?;
    let z = (est.estimate - exact).abs() / est.standard_error;
    ensure(z < 3.0, || format!("ν̂ = {} vs {exact} ({z:.2} SE)", est.estimate))?;
    Ok(format!("ν̂ within {z:.2} SE of the exact value"))
}

fn anchors() -> Check {
    let dc = Scenario::new(bath(), FieldHypothesis::DcKnown { b: 50.0 }, Protocol::FreeEvolution);
    let ac = Scenario::new(
        bath(),
        FieldHypothesis::AcCosine {
            b0: 1.0,
            sigma_b: 0.0,
            f: 1.0,
            sigma_f: 0.0,
        },
        Protocol::Cpmg { tau: None },
    );
    let a = optimize_time(&dc, 0.0, 3.0).map_err(|e| e.to_string())?.p_error;
    let b = optimize_pulses(&ac, 2, 200).map_err(|e| e.to_string())?.p_error;
    ensure((a - 0.2).abs() <= 0.02, || format!("DC minimum {a}"))?;
    ensure((b - 0.124).abs() <= 0.01, || format!("AC minimum {b}"))?;
    Ok(format!("DC minimum {a:.4}, AC minimum {b:.4}"))
}

type CheckFn = fn() -> Check;

pub fn run<W: Write>(mut out: W) -> Result<(), Failure> {
    let checks: [(&str, CheckFn); 6] = [
        ("cpmg closed form", cpmg_closed_form),
        ("helstrom", helstrom),
        ("multicopy", multicopy),
        ("efficiency", efficiency),
        ("monte carlo", monte_carlo),
        ("anchors", anchors),
    ];
    let mut failed = Vec::new();
    for (name, check) in checks {
        let start = Instant::now();
        let (status, detail) = match check() {
            Ok(d) => ("PASS", d),
            Err(e) => {
                failed.push(name);
                ("FAIL", e)
            }
        };
        writeln!(
            out,
            "{status} {name}: {detail} ({:.3} s)",
            start.elapsed().as_secs_f64()
        )?;
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Numerical(format!("self-test failed: {}", failed.join(", "))))
    }
}
