//! Field hypotheses, their phase factor μ, and the pulse sequences used to
//! interrogate them.
//!
//! Convention: the field-present state carries the off-diagonal ν·μ with
//! μ = e^{−iθ} and θ = 2πγ ∫₀ᵀ ξ(t) B(t) dt.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{contract, domain, Result};
use crate::noise::PulseSequence;
use crate::numeric::{bisect, gauss_hermite};

/// Gyromagnetic ratio in MHz/µT. 28 Hz/nT = 0.028 MHz/µT.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Gyromagnetic(f64);

impl Gyromagnetic {
    pub const NV: Gyromagnetic = Gyromagnetic(0.028);

    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return domain(format!("gamma must be positive, got {gamma}"));
        }
        Ok(Self(gamma))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for Gyromagnetic {
    fn default() -> Self {
        Self::NV
    }
}

/// One component `amplitude · sin(2π·frequency·t + phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tone {
    /// µT
    pub amplitude: f64,
    /// MHz
    pub frequency: f64,
    /// rad; 0 gives a sine, π/2 a cosine.
    #[serde(default)]
    pub phase: f64,
}

impl Tone {
    pub fn sine(amplitude: f64, frequency: f64) -> Self {
        Self {
            amplitude,
            frequency,
            phase: 0.0,
        }
    }

    pub fn cosine(amplitude: f64, frequency: f64) -> Self {
        Self {
            amplitude,
            frequency,
            phase: PI / 2.0,
        }
    }

    fn value(&self, t: f64) -> f64 {
        self.amplitude * (2.0 * PI * self.frequency * t + self.phase).sin()
    }

    fn integral(&self, a: f64, b: f64) -> f64 {
        let w = 2.0 * PI * self.frequency;
        self.amplitude / w * ((w * a + self.phase).cos() - (w * b + self.phase).cos())
    }
}

/// A deterministic multi-tone waveform B(t) = Σᵢ bᵢ sin(2π fᵢ t + φᵢ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiTone {
    pub terms: Vec<Tone>,
}

impl MultiTone {
    pub fn new(terms: Vec<Tone>) -> Result<Self> {
        let field = Self { terms };
        field.validate()?;
        Ok(field)
    }

    /// b₁ sin(2π f₁ t) + b₂ sin(2π f₂ t).
    pub fn bichromatic(b1: f64, f1: f64, b2: f64, f2: f64) -> Result<Self> {
        Self::new(vec![Tone::sine(b1, f1), Tone::sine(b2, f2)])
    }

    pub fn validate(&self) -> Result<()> {
        if self.terms.is_empty() {
            return domain("multi-tone field needs at least one term");
        }
        for (i, t) in self.terms.iter().enumerate() {
            if !(t.frequency > 0.0 && t.frequency.is_finite()) {
                return domain(format!("tone frequency must be positive, got {}", t.frequency));
            }
            if !t.amplitude.is_finite() || !t.phase.is_finite() {
                return domain("tone amplitude and phase must be finite");
            }
            if self.terms[..i].iter().any(|o| o.frequency == t.frequency) {
                return domain(format!("duplicate tone frequency {}", t.frequency));
            }
        }
        Ok(())
    }

    pub fn value(&self, t: f64) -> f64 {
        self.terms.iter().map(|tone| tone.value(t)).sum()
    }

    /// ∫ₐᵇ B(t) dt.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        self.terms.iter().map(|tone| tone.integral(a, b)).sum()
    }

    pub fn max_frequency(&self) -> f64 {
        self.terms.iter().map(|t| t.frequency).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.amplitude == 0.0)
    }

    /// Σ |bᵢ|, an upper bound on |B|.
    pub fn amplitude_bound(&self) -> f64 {
        self.terms.iter().map(|t| t.amplitude.abs()).sum()
    }
}

/// What is known about the field if it is present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldHypothesis {
    /// Static field of known strength `b` (µT).
    DcKnown { b: f64 },
    /// Static field drawn from Normal(b0, sigma_b²).
    DcGaussian { b0: f64, sigma_b: f64 },
    /// b cos(2π f t) with b ~ Normal(b0, sigma_b²) and optionally
    /// f ~ Normal(f, sigma_f²).
    AcCosine {
        b0: f64,
        sigma_b: f64,
        f: f64,
        #[serde(default)]
        sigma_f: f64,
    },
    /// Fully known waveform.
    MultiTone(MultiTone),
}

impl FieldHypothesis {
    pub fn validate(&self) -> Result<()> {
        let finite = |x: f64, name: &str| {
            if x.is_finite() {
                Ok(())
            } else {
                domain(format!("{name} must be finite"))
            }
        };
        match *self {
            FieldHypothesis::DcKnown { b } => finite(b, "b"),
            FieldHypothesis::DcGaussian { b0, sigma_b } => {
                finite(b0, "b0")?;
                check_sigma(sigma_b, "sigma_b")
            }
            FieldHypothesis::AcCosine {
                b0,
                sigma_b,
                f,
                sigma_f,
            } => {
                finite(b0, "b0")?;
                check_sigma(sigma_b, "sigma_b")?;
                check_sigma(sigma_f, "sigma_f")?;
                if !(f > 0.0 && f.is_finite()) {
                    return domain(format!("frequency must be positive, got {f}"));
                }
                Ok(())
            }
            FieldHypothesis::MultiTone(ref m) => m.validate(),
        }
    }

    /// Whether the field is known deterministically (|μ| = 1).
    pub fn is_deterministic(&self) -> bool {
        match *self {
            FieldHypothesis::DcKnown { .. } | FieldHypothesis::MultiTone(_) => true,
            FieldHypothesis::DcGaussian { sigma_b, .. } => sigma_b == 0.0,
            FieldHypothesis::AcCosine { sigma_b, sigma_f, .. } => sigma_b == 0.0 && sigma_f == 0.0,
        }
    }

    /// Same hypothesis with the amplitude spread replaced.
    pub fn with_sigma_b(&self, sigma: f64) -> Result<Self> {
        check_sigma(sigma, "sigma_b")?;
        match *self {
            FieldHypothesis::DcKnown { b } | FieldHypothesis::DcGaussian { b0: b, .. } => {
                Ok(FieldHypothesis::DcGaussian { b0: b, sigma_b: sigma })
            }
            FieldHypothesis::AcCosine { b0, f, sigma_f, .. } => Ok(FieldHypothesis::AcCosine {
                b0,
                sigma_b: sigma,
                f,
                sigma_f,
            }),
            FieldHypothesis::MultiTone(_) => domain("multi-tone fields are deterministic; sigma_b does not apply"),
        }
    }
}

fn check_sigma(sigma: f64, name: &str) -> Result<()> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return domain(format!("{name} must be finite and >= 0, got {sigma}"));
    }
    Ok(())
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return domain(format!("time must be finite and >= 0, got {t}"));
    }
    Ok(())
}

/// e^{−iθ} e^{−θ²σ²/2}: the average of e^{−iθb} over b ~ Normal(b0, σ²),
/// where `theta_per_ut` is the phase per µT.
fn gaussian_average(theta_per_ut: f64, b0: f64, sigma_b: f64) -> Complex64 {
    let modulus = (-0.5 * theta_per_ut * theta_per_ut * sigma_b * sigma_b).exp();
    Complex64::from_polar(modulus, -theta_per_ut * b0)
}

/// μ = e^{−i2πγbt} for a static, perfectly known field.
pub fn mu_dc_known(b: f64, gamma: Gyromagnetic, t: f64) -> Result<Complex64> {
    check_time(t)?;
    Ok(Complex64::from_polar(1.0, -2.0 * PI * gamma.value() * b * t))
}

/// μ = e^{−i2πγb₀t} e^{−2π²γ²t²σ_b²} for a Gaussian prior on a static field.
pub fn mu_dc_gaussian(b0: f64, sigma_b: f64, gamma: Gyromagnetic, t: f64) -> Result<Complex64> {
    check_time(t)?;
    check_sigma(sigma_b, "sigma_b")?;
    Ok(gaussian_average(2.0 * PI * gamma.value() * t, b0, sigma_b))
}

/// μ = e^{−i2Nγb₀/f} e^{−2N²γ²σ_b²/f²}: cosine field under CPMG with τ = 1/2f.
pub fn mu_ac_cpmg(b0: f64, sigma_b: f64, gamma: Gyromagnetic, f: f64, n_pulses: u32) -> Result<Complex64> {
    check_pulse_count(n_pulses)?;
    check_sigma(sigma_b, "sigma_b")?;
    if !(f > 0.0 && f.is_finite()) {
        return domain(format!("frequency must be positive, got {f}"));
    }
    let theta = 2.0 * f64::from(n_pulses) * gamma.value() / f;
    Ok(gaussian_average(theta, b0, sigma_b))
}

fn check_pulse_count(n: u32) -> Result<()> {
    if n == 0 || !n.is_multiple_of(2) {
        return domain(format!("CPMG needs an even, positive pulse count, got {n}"));
    }
    Ok(())
}

/// `[U(τ/2) R(π) U(τ) R(π) U(τ/2)]^{N/2}`: pulses at τ/2, 3τ/2, …, (2N−1)τ/2.
pub fn cpmg_sequence(n_pulses: u32, tau: f64) -> Result<PulseSequence> {
    check_pulse_count(n_pulses)?;
    if !(tau > 0.0 && tau.is_finite()) {
        return domain(format!("tau must be positive, got {tau}"));
    }
    let pulses = (0..n_pulses).map(|k| f64::from(2 * k + 1) * tau / 2.0).collect();
    PulseSequence::new(f64::from(n_pulses) * tau, pulses)
}

/// ∫₀ᵀ ξ(t) dt.
pub fn signed_duration(seq: &PulseSequence) -> f64 {
    seq.segments().map(|(a, b, s)| s * (b - a)).sum()
}

/// ∫₀ᵀ ξ(t) cos(2π f t) dt, in closed form per segment.
pub fn signed_cosine_integral(f: f64, seq: &PulseSequence) -> f64 {
    let w = 2.0 * PI * f;
    seq.segments()
        .map(|(a, b, s)| s * ((w * b).sin() - (w * a).sin()) / w)
        .sum()
}

/// ∫₀ᵀ ξ(t) B(t) dt, in closed form per segment.
pub fn signed_field_integral(field: &MultiTone, seq: &PulseSequence) -> f64 {
    seq.segments().map(|(a, b, s)| s * field.integral(a, b)).sum()
}

const FREQUENCY_QUADRATURE_NODES: usize = 64;

/// μ for b cos(2π f t) under a fixed pulse sequence when both the amplitude
/// (Normal(b0, σ_b²)) and the frequency (Normal(f0, σ_f²)) are uncertain.
///
/// The amplitude average is analytic; the frequency average uses 64-node
/// Gauss–Hermite quadrature. With σ_f = 0 and CPMG timing at f0 this reduces
/// to [`mu_ac_cpmg`].
pub fn mu_cosine_uncertain_frequency(
    b0: f64,
    sigma_b: f64,
    gamma: Gyromagnetic,
    f0: f64,
    sigma_f: f64,
    seq: &PulseSequence,
) -> Result<Complex64> {
    check_sigma(sigma_b, "sigma_b")?;
    check_sigma(sigma_f, "sigma_f")?;
    if !(f0 > 0.0 && f0.is_finite()) {
        return domain(format!("frequency must be positive, got {f0}"));
    }
    let at = |f: f64| {
        let theta = 2.0 * PI * gamma.value() * signed_cosine_integral(f, seq);
        gaussian_average(theta, b0, sigma_b)
    };
    if sigma_f == 0.0 {
        return Ok(at(f0));
    }
    let (nodes, weights) = gauss_hermite(FREQUENCY_QUADRATURE_NODES);
    let norm = PI.sqrt();
    Ok(nodes
        .iter()
        .zip(&weights)
        .map(|(&x, &w)| at(f0 + SQRT_2 * sigma_f * x) * (w / norm))
        .sum())
}

const NODE_SCAN_PER_PERIOD: f64 = 20.0;
const NODE_TOLERANCE: f64 = 1e-12;
const NODE_EDGE_MARGIN: f64 = 1e-9;
const NODE_MATCH_TOLERANCE: f64 = 1e-9;

/// Zero crossings of B(t) strictly inside `(0, t_max)`, ascending.
///
/// Sign changes are bracketed on a grid of 20 points per period of the
/// highest tone and refined by bisection to 1e-12 µs. Tangential zeros
/// (no sign change) are not reported.
pub fn find_nodes(field: &MultiTone, t_max: f64) -> Result<Vec<f64>> {
    field.validate()?;
    if !(t_max > 0.0 && t_max.is_finite()) {
        return domain(format!("t_max must be positive, got {t_max}"));
    }
    if field.is_zero() {
        return domain("field is identically zero; nodes are undefined");
    }
    let step = 1.0 / (NODE_SCAN_PER_PERIOD * field.max_frequency());
    let n = (t_max / step).ceil().max(1.0) as usize;
    let grid = |i: usize| t_max * i as f64 / n as f64;

    let mut nodes = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for i in 0..=n {
        let t = grid(i);
        let v = field.value(t);
        if v == 0.0 {
            nodes.push(t);
            prev = None;
            continue;
        }
        if let Some((tp, vp)) = prev {
            if (vp < 0.0) != (v < 0.0) {
                nodes.push(bisect(|x| field.value(x), tp, t, NODE_TOLERANCE));
            }
        }
        prev = Some((t, v));
    }
    nodes.retain(|&t| t > NODE_EDGE_MARGIN && t < t_max - NODE_EDGE_MARGIN);
    nodes.dedup_by(|b, a| (*b - *a).abs() < NODE_MATCH_TOLERANCE);
    Ok(nodes)
}

/// Free evolution of length `t` with a π pulse at every interior node of B.
pub fn node_locked_sequence(field: &MultiTone, t: f64) -> Result<PulseSequence> {
    check_time(t)?;
    if t == 0.0 || field.is_zero() {
        return PulseSequence::free_evolution(t);
    }
    PulseSequence::new(t, find_nodes(field, t)?)
}

/// μ = e^{−i2πγ ∫ ξ B dt} for a known waveform under node-locked pulses,
/// which equals e^{−i2πγ ∫ |B| dt} when every node carries a pulse.
///
/// Returns a contract error when the pulses do not sit on the nodes of B
/// within 1e-9 µs.
pub fn mu_waveform_rectified(field: &MultiTone, seq: &PulseSequence, gamma: Gyromagnetic) -> Result<Complex64> {
    field.validate()?;
    if field.is_zero() {
        return Ok(Complex64::new(1.0, 0.0));
    }
    if seq.total_time() > 0.0 {
        let nodes = find_nodes(field, seq.total_time())?;
        let pulses = seq.pulse_times();
        let matched = nodes.len() == pulses.len()
            && nodes
                .iter()
                .zip(pulses)
                .all(|(n, p)| (n - p).abs() <= NODE_MATCH_TOLERANCE);
        if !matched {
            return contract(format!(
                "pulses {:?} do not coincide with field nodes {:?}",
                pulses, nodes
            ));
        }
    }
    let theta = 2.0 * PI * gamma.value() * signed_field_integral(field, seq);
    Ok(Complex64::from_polar(1.0, -theta))
}
