//! Choosing the interrogation: total time T for free evolution and
//! node-locked sequences, pulse count N for CPMG.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::discrim::{discriminate, inefficient_error, CoherencePair, DiscriminationOutcome, Priors, Regime};
use crate::error::{domain, Result};
use crate::exec::Execution;
use crate::field::{
    cpmg_sequence, mu_ac_cpmg, mu_cosine_uncertain_frequency, mu_dc_gaussian, mu_dc_known, mu_waveform_rectified,
    node_locked_sequence, FieldHypothesis, Gyromagnetic,
};
use crate::noise::{
    nu_free_exact, nu_free_quasistatic, nu_from_w, w_cpmg_analytic, w_numeric, NoiseModel, PulseSequence,
};
use crate::numeric::golden_section;

/// Interrogation protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Protocol {
    /// No pulses; DC fields.
    FreeEvolution,
    /// CPMG train for a cosine field; τ defaults to 1/(2f).
    Cpmg {
        #[serde(default)]
        tau: Option<f64>,
    },
    /// π pulses at every node of a known waveform.
    NodeLocked,
}

/// Free-evolution dephasing model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dephasing {
    /// e^{−κ²T²/2}, valid for T ≪ τ_c.
    #[default]
    QuasiStatic,
    /// e^{−κ²W(T)} with the exact filter integral.
    Exact,
}

fn default_eta() -> f64 {
    1.0
}

/// Everything needed to evaluate the error probability of a protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub noise: NoiseModel,
    pub field: FieldHypothesis,
    #[serde(default)]
    pub priors: Priors,
    pub protocol: Protocol,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default)]
    pub gamma: Gyromagnetic,
    #[serde(default)]
    pub dephasing: Dephasing,
}

/// Where the protocol is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interrogation {
    /// Total time in µs.
    Time(f64),
    /// Number of CPMG pulses.
    Pulses(u32),
}

impl Interrogation {
    /// The swept quantity as a number (T or N).
    pub fn value(&self) -> f64 {
        match *self {
            Interrogation::Time(t) => t,
            Interrogation::Pulses(n) => f64::from(n),
        }
    }
}

/// Closed-form evaluation of a scenario at one interrogation point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub point: Interrogation,
    pub nu: f64,
    pub mu: Complex64,
    pub outcome: DiscriminationOutcome,
    /// Error including the detection efficiency.
    pub p_error: f64,
}

impl Evaluation {
    pub fn chi(&self) -> Option<f64> {
        self.outcome.chi
    }

    pub fn regime(&self) -> Regime {
        self.outcome.regime
    }

    pub fn coherence(&self) -> CoherencePair {
        CoherencePair {
            nu: self.nu,
            mu: self.mu,
        }
    }
}

/// Best interrogation found by a search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Optimum {
    pub point: Interrogation,
    pub p_error: f64,
    pub chi: Option<f64>,
    pub nu: f64,
    pub mu: Complex64,
    pub regime: Regime,
}

impl From<Evaluation> for Optimum {
    fn from(e: Evaluation) -> Self {
        Self {
            point: e.point,
            p_error: e.p_error,
            chi: e.outcome.chi,
            nu: e.nu,
            mu: e.mu,
            regime: e.outcome.regime,
        }
    }
}

impl Scenario {
    /// Equal priors, η = 1, the NV gyromagnetic ratio and quasi-static
    /// free-evolution dephasing.
    pub fn new(noise: NoiseModel, field: FieldHypothesis, protocol: Protocol) -> Self {
        Self {
            noise,
            field,
            priors: Priors::default(),
            protocol,
            eta: default_eta(),
            gamma: Gyromagnetic::default(),
            dephasing: Dephasing::default(),
        }
    }

    pub fn with_priors(mut self, priors: Priors) -> Self {
        self.priors = priors;
        self
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn with_dephasing(mut self, dephasing: Dephasing) -> Self {
        self.dephasing = dephasing;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.noise.validate()?;
        self.field.validate()?;
        self.priors.validate()?;
        if !(0.0..=1.0).contains(&self.eta) {
            return domain(format!("eta must lie in [0, 1], got {}", self.eta));
        }
        Gyromagnetic::new(self.gamma.value())?;
        match (&self.protocol, &self.field) {
            (Protocol::FreeEvolution, FieldHypothesis::DcKnown { .. } | FieldHypothesis::DcGaussian { .. }) => Ok(()),
            (Protocol::Cpmg { tau }, FieldHypothesis::AcCosine { .. }) => match tau {
                Some(t) if !(*t > 0.0) => domain(format!("tau must be positive, got {t}")),
                _ => Ok(()),
            },
            (Protocol::NodeLocked, FieldHypothesis::MultiTone(_)) => Ok(()),
            (p, f) => domain(format!("protocol {p:?} is not compatible with field {f:?}")),
        }
    }

    /// CPMG spacing: explicit τ or 1/(2f).
    pub fn cpmg_tau(&self) -> Option<f64> {
        match (&self.protocol, &self.field) {
            (Protocol::Cpmg { tau: Some(t) }, _) => Some(*t),
            (Protocol::Cpmg { tau: None }, FieldHypothesis::AcCosine { f, .. }) => Some(0.5 / f),
            _ => None,
        }
    }

    /// The pulse sequence applied at `point`.
    pub fn sequence(&self, point: Interrogation) -> Result<PulseSequence> {
        match (self.protocol, point) {
            (Protocol::FreeEvolution, Interrogation::Time(t)) => PulseSequence::free_evolution(t),
            (Protocol::NodeLocked, Interrogation::Time(t)) => match &self.field {
                FieldHypothesis::MultiTone(m) => node_locked_sequence(m, t),
                _ => domain("node-locked protocol needs a multi-tone field"),
            },
            (Protocol::Cpmg { .. }, Interrogation::Pulses(n)) => {
                cpmg_sequence(n, self.cpmg_tau().expect("validated CPMG scenario"))
            }
            (p, i) => domain(format!("{i:?} does not apply to protocol {p:?}")),
        }
    }

    /// ν and μ at `point`.
    pub fn coherence(&self, point: Interrogation) -> Result<CoherencePair> {
        let gamma = self.gamma;
        let (nu, mu) = match (self.protocol, &self.field, point) {
            (Protocol::FreeEvolution, field, Interrogation::Time(t)) => {
                let nu = match self.dephasing {
                    Dephasing::QuasiStatic => nu_free_quasistatic(&self.noise, t)?,
                    Dephasing::Exact => nu_free_exact(&self.noise, t)?,
                };
                let mu = match *field {
                    FieldHypothesis::DcKnown { b } => mu_dc_known(b, gamma, t)?,
                    FieldHypothesis::DcGaussian { b0, sigma_b } => mu_dc_gaussian(b0, sigma_b, gamma, t)?,
                    _ => return domain("free evolution needs a DC field"),
                };
                (nu, mu)
            }
            (
                Protocol::Cpmg { .. },
                &FieldHypothesis::AcCosine {
                    b0,
                    sigma_b,
                    f,
                    sigma_f,
                },
                Interrogation::Pulses(n),
            ) => {
                let tau = self.cpmg_tau().expect("validated CPMG scenario");
                let nu = nu_from_w(&self.noise, w_cpmg_analytic(n, tau, &self.noise)?);
                let locked = (tau - 0.5 / f).abs() <= 1e-12 * tau;
                let mu = if sigma_f == 0.0 && locked {
                    mu_ac_cpmg(b0, sigma_b, gamma, f, n)?
                } else {
                    mu_cosine_uncertain_frequency(b0, sigma_b, gamma, f, sigma_f, &cpmg_sequence(n, tau)?)?
                };
                (nu, mu)
            }
            (Protocol::NodeLocked, FieldHypothesis::MultiTone(m), Interrogation::Time(t)) => {
                let seq = node_locked_sequence(m, t)?;
                let nu = nu_from_w(&self.noise, w_numeric(&seq, &self.noise));
                (nu, mu_waveform_rectified(m, &seq, gamma)?)
            }
            (p, _, i) => return domain(format!("{i:?} does not apply to protocol {p:?}")),
        };
        CoherencePair::new(nu.clamp(0.0, 1.0), mu)
    }

    pub fn evaluate(&self, point: Interrogation) -> Result<Evaluation> {
        let coh = self.coherence(point)?;
        let outcome = discriminate(&self.priors, &coh);
        let p_error = match outcome.chi {
            Some(chi) if self.eta < 1.0 => inefficient_error(&self.priors, &coh, chi, self.eta)?,
            _ => outcome.p_error,
        };
        Ok(Evaluation {
            point,
            nu: coh.nu,
            mu: coh.mu,
            outcome,
            p_error,
        })
    }

    fn p_error_at_time(&self, t: f64) -> f64 {
        self.evaluate(Interrogation::Time(t))
            .map(|e| e.p_error)
            .unwrap_or(f64::INFINITY)
    }
}

/// Settings of the time search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeSearch {
    pub grid_points: usize,
    /// Bracket width at which golden-section refinement stops, µs.
    pub tolerance: f64,
    /// Basins whose grid minimum is within this relative margin of the best
    /// grid value are refined.
    pub basin_margin: f64,
}

impl Default for TimeSearch {
    fn default() -> Self {
        Self {
            grid_points: 2000,
            tolerance: 1e-9,
            basin_margin: 0.01,
        }
    }
}

/// Minimises P_e over T ∈ [t_min, t_max].
///
/// P_e(T) is multimodal (|sin| oscillations, and jumps for node-locked
/// sequences), so the whole range is scanned on a uniform grid and every
/// competitive basin is refined by golden-section search.
pub fn optimize_time(scenario: &Scenario, t_min: f64, t_max: f64) -> Result<Optimum> {
    optimize_time_with(scenario, t_min, t_max, TimeSearch::default(), Execution::default())
}

pub fn optimize_time_with(
    scenario: &Scenario,
    t_min: f64,
    t_max: f64,
    search: TimeSearch,
    exec: Execution,
) -> Result<Optimum> {
    scenario.validate()?;
    if !(t_min >= 0.0 && t_max > t_min && t_max.is_finite()) {
        return domain(format!("empty or invalid time range [{t_min}, {t_max}]"));
    }
    if matches!(scenario.protocol, Protocol::Cpmg { .. }) {
        return domain("CPMG is optimised over the pulse count; use optimize_pulses");
    }
    let n = search.grid_points.max(3);
    let step = (t_max - t_min) / (n - 1) as f64;
    let grid = |i: usize| if i == n - 1 { t_max } else { t_min + step * i as f64 };
    let values = exec.map(n, |i| scenario.p_error_at_time(grid(i)));

    let (best_i, best_v) = values
        .iter()
        .cloned()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    if !best_v.is_finite() {
        return domain("scenario could not be evaluated on the search grid");
    }
    let cutoff = best_v * (1.0 + search.basin_margin) + 1e-15;
    let basins: Vec<usize> = (0..n)
        .filter(|&i| {
            let v = values[i];
            v <= cutoff && (i == 0 || values[i - 1] >= v) && (i == n - 1 || values[i + 1] >= v)
        })
        .collect();

    let refined = exec.map(basins.len(), |k| {
        let i = basins[k];
        let lo = grid(i.saturating_sub(1));
        let hi = grid((i + 1).min(n - 1));
        golden_section(|t| scenario.p_error_at_time(t), lo, hi, search.tolerance)
    });
    let mut best = (grid(best_i), best_v);
    for (t, v) in refined {
        if v < best.1 {
            best = (t, v);
        }
    }
    Ok(scenario.evaluate(Interrogation::Time(best.0))?.into())
}

/// Exhaustive search over even N in [n_min, n_max]; ties go to the smaller N.
pub fn optimize_pulses(scenario: &Scenario, n_min: u32, n_max: u32) -> Result<Optimum> {
    optimize_pulses_with(scenario, n_min, n_max, Execution::default())
}

pub fn optimize_pulses_with(scenario: &Scenario, n_min: u32, n_max: u32, exec: Execution) -> Result<Optimum> {
    scenario.validate()?;
    if !matches!(scenario.protocol, Protocol::Cpmg { .. }) {
        return domain("pulse-count search needs the CPMG protocol");
    }
    if n_min < 2 || !n_min.is_multiple_of(2) || !n_max.is_multiple_of(2) || n_max < n_min {
        return domain(format!(
            "need even bounds with 2 <= n_min <= n_max, got [{n_min}, {n_max}]"
        ));
    }
    let count = ((n_max - n_min) / 2 + 1) as usize;
    let evals = exec.map(count, |k| {
        scenario.evaluate(Interrogation::Pulses(n_min + 2 * k as u32))
    });
    let mut best: Option<Evaluation> = None;
    for e in evals {
        let e = e?;
        if best.is_none_or(|b| e.p_error < b.p_error) {
            best = Some(e);
        }
    }
    Ok(best.expect("non-empty range").into())
}
