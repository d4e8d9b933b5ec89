//! Shot-by-shot Monte Carlo of the whole detection protocol.
//!
//! Each shot draws the truth from the priors, the field from its prior, an
//! OU noise history, then measures with the rotated projectors, passes the
//! bright outcome through the photon-detection model and decides "present"
//! on a click. The empirical error rate validates the closed forms in
//! [`crate::discrim`].

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::discrim::{conditional_errors_with_efficiency, multicopy_error, Regime};
use crate::error::{domain, Result};
use crate::exec::Execution;
use crate::field::{signed_cosine_integral, signed_duration, signed_field_integral, FieldHypothesis};
use crate::noise::{run_batches, ExactPhaseSampler, PulseSequence};
use crate::optimize::{Interrogation, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Truth {
    Absent,
    Present,
}

/// One simulated measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShotRecord {
    pub truth: Truth,
    /// At least one photon registered.
    pub photon: bool,
    pub decision: Truth,
}

impl ShotRecord {
    pub fn is_error(&self) -> bool {
        self.truth != self.decision
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalResult {
    pub n_shots: u64,
    pub errors: u64,
    pub error_rate: f64,
    /// √(p(1 − p)/n)
    pub standard_error: f64,
    pub seed: u64,
}

impl EmpiricalResult {
    fn new(n: u64, errors: u64, seed: u64) -> Self {
        let p = errors as f64 / n as f64;
        Self {
            n_shots: n,
            errors,
            error_rate: p,
            standard_error: (p * (1.0 - p) / n as f64).sqrt(),
            seed,
        }
    }

    /// |rate − expected| in units of the standard error. A zero standard
    /// error counts as agreement only on an exact match.
    pub fn z_score(&self, expected: f64) -> f64 {
        let diff = (self.error_rate - expected).abs();
        if self.standard_error > 0.0 {
            diff / self.standard_error
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// How the field-induced phase is drawn for a shot.
#[derive(Debug, Clone)]
enum FieldPhase {
    /// θ = k · b with b ~ Normal(b0, σ²).
    Linear { per_ut: f64, b0: f64, sigma_b: f64 },
    /// Cosine field with uncertain frequency: θ depends on f nonlinearly.
    Cosine {
        scale: f64,
        b0: f64,
        sigma_b: f64,
        f: f64,
        sigma_f: f64,
        seq: PulseSequence,
    },
}

impl FieldPhase {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let normal = |rng: &mut R, m: f64, s: f64| {
            if s == 0.0 {
                m
            } else {
                m + s * rng.sample::<f64, _>(StandardNormal)
            }
        };
        match self {
            FieldPhase::Linear { per_ut, b0, sigma_b } => per_ut * normal(rng, *b0, *sigma_b),
            FieldPhase::Cosine {
                scale,
                b0,
                sigma_b,
                f,
                sigma_f,
                seq,
            } => {
                let f = normal(rng, *f, *sigma_f);
                let b = normal(rng, *b0, *sigma_b);
                scale * b * signed_cosine_integral(f, seq)
            }
        }
    }
}

/// A protocol prepared for repeated shots.
#[derive(Debug, Clone)]
pub struct Detector {
    p1: f64,
    eta: f64,
    regime: Regime,
    chi: f64,
    noise: ExactPhaseSampler,
    field: FieldPhase,
}

impl Detector {
    /// Uses the closed-form optimal measurement for `scenario` at `point`.
    pub fn new(scenario: &Scenario, point: Interrogation) -> Result<Self> {
        scenario.validate()?;
        let eval = scenario.evaluate(point)?;
        let seq = scenario.sequence(point)?;
        let two_pi_gamma = 2.0 * PI * scenario.gamma.value();
        let field = match &scenario.field {
            &FieldHypothesis::DcKnown { b } => FieldPhase::Linear {
                per_ut: two_pi_gamma * signed_duration(&seq),
                b0: b,
                sigma_b: 0.0,
            },
            &FieldHypothesis::DcGaussian { b0, sigma_b } => FieldPhase::Linear {
                per_ut: two_pi_gamma * signed_duration(&seq),
                b0,
                sigma_b,
            },
            &FieldHypothesis::AcCosine {
                b0,
                sigma_b,
                f,
                sigma_f: 0.0,
            } => FieldPhase::Linear {
                per_ut: two_pi_gamma * signed_cosine_integral(f, &seq),
                b0,
                sigma_b,
            },
            &FieldHypothesis::AcCosine {
                b0,
                sigma_b,
                f,
                sigma_f,
            } => FieldPhase::Cosine {
                scale: two_pi_gamma,
                b0,
                sigma_b,
                f,
                sigma_f,
                seq: seq.clone(),
            },
            FieldHypothesis::MultiTone(m) => FieldPhase::Linear {
                per_ut: two_pi_gamma * signed_field_integral(m, &seq),
                b0: 1.0,
                sigma_b: 0.0,
            },
        };
        Ok(Self {
            p1: scenario.priors.p1,
            eta: scenario.eta,
            regime: eval.outcome.regime,
            chi: eval.outcome.chi.unwrap_or(0.0),
            noise: ExactPhaseSampler::new(&seq, &scenario.noise),
            field,
        })
    }

    fn measure<R: Rng + ?Sized>(&self, truth: Truth, rng: &mut R) -> (bool, Truth) {
        match self.regime {
            Regime::AlwaysPresent => return (false, Truth::Present),
            Regime::AlwaysAbsent | Regime::Indifferent => return (false, Truth::Absent),
            Regime::Measure => {}
        }
        let mut psi = self.noise.sample(rng);
        if truth == Truth::Present {
            psi += self.field.sample(rng);
        }
        // Conditional state ½[[1, e^{−iψ}], [e^{iψ}, 1]]; Tr[ρ Π₁].
        let p_bright = 0.5 * (1.0 - (self.chi - psi).cos());
        let bright = rng.random::<f64>() < p_bright;
        let photon = bright && rng.random::<f64>() < self.eta;
        (photon, if photon { Truth::Present } else { Truth::Absent })
    }

    fn draw_truth<R: Rng + ?Sized>(&self, rng: &mut R) -> Truth {
        if rng.random::<f64>() < self.p1 {
            Truth::Present
        } else {
            Truth::Absent
        }
    }

    pub fn shot<R: Rng + ?Sized>(&self, rng: &mut R) -> ShotRecord {
        let truth = self.draw_truth(rng);
        let (photon, decision) = self.measure(truth, rng);
        ShotRecord {
            truth,
            photon,
            decision,
        }
    }

    /// Majority vote over `m` independent copies; even ties go to a fair coin.
    pub fn vote<R: Rng + ?Sized>(&self, m: u32, rng: &mut R) -> ShotRecord {
        let truth = self.draw_truth(rng);
        let mut present = 0u32;
        let mut clicks = false;
        for _ in 0..m {
            let (photon, decision) = self.measure(truth, rng);
            clicks |= photon;
            if decision == Truth::Present {
                present += 1;
            }
        }
        let absent = m - present;
        let decision = if present > absent || (present == absent && rng.random::<bool>()) {
            Truth::Present
        } else {
            Truth::Absent
        };
        ShotRecord {
            truth,
            photon: clicks,
            decision,
        }
    }
}

pub fn simulate_detection(
    scenario: &Scenario,
    point: Interrogation,
    n_shots: u64,
    seed: u64,
) -> Result<EmpiricalResult> {
    simulate_detection_with(scenario, point, n_shots, seed, Execution::default())
}

pub fn simulate_detection_with(
    scenario: &Scenario,
    point: Interrogation,
    n_shots: u64,
    seed: u64,
    exec: Execution,
) -> Result<EmpiricalResult> {
    if n_shots == 0 {
        return domain("n_shots must be at least 1");
    }
    let detector = Detector::new(scenario, point)?;
    let errors: u64 = run_batches(n_shots as usize, seed, exec, |rng, len| {
        (0..len).filter(|_| detector.shot(rng).is_error()).count() as u64
    })
    .into_iter()
    .sum();
    Ok(EmpiricalResult::new(n_shots, errors, seed))
}

pub fn simulate_multicopy(
    scenario: &Scenario,
    point: Interrogation,
    m_copies: u32,
    n_trials: u64,
    seed: u64,
) -> Result<EmpiricalResult> {
    simulate_multicopy_with(scenario, point, m_copies, n_trials, seed, Execution::default())
}

pub fn simulate_multicopy_with(
    scenario: &Scenario,
    point: Interrogation,
    m_copies: u32,
    n_trials: u64,
    seed: u64,
    exec: Execution,
) -> Result<EmpiricalResult> {
    if m_copies == 0 {
        return domain("at least one copy is required");
    }
    if n_trials == 0 {
        return domain("n_trials must be at least 1");
    }
    let detector = Detector::new(scenario, point)?;
    let errors: u64 = run_batches(n_trials as usize, seed, exec, |rng, len| {
        (0..len).filter(|_| detector.vote(m_copies, rng).is_error()).count() as u64
    })
    .into_iter()
    .sum();
    Ok(EmpiricalResult::new(n_trials, errors, seed))
}

/// Closed-form counterpart of [`simulate_multicopy`], including the
/// detection efficiency.
pub fn closed_form_multicopy(scenario: &Scenario, point: Interrogation, m_copies: u32) -> Result<f64> {
    let eval = scenario.evaluate(point)?;
    let cond = match eval.outcome.chi {
        Some(chi) => conditional_errors_with_efficiency(&eval.coherence(), chi, scenario.eta)?,
        None => eval.outcome.conditional_errors(),
    };
    multicopy_error(&scenario.priors, &cond, m_copies)
}
