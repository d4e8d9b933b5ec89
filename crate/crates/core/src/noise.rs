//! Dephasing of the NV spin under stationary Ornstein–Uhlenbeck noise.
//!
//! For a π-pulse sequence with switching function ξ(t) the coherence decays
//! as ν = exp(−κ² W), where
//!
//! ```text
//! W = ∫₀ᵀ e^{−R s} p(s) ds,    p(s) = ∫₀^{T−s} ξ(t) ξ(t+s) dt,    R = 1/τ_c.
//! ```
//!
//! `p` is piecewise linear with breakpoints at pairwise differences of the
//! switching instants, so W is evaluated exactly segment by segment.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::exec::Execution;
use crate::numeric::{exp_integral0, exp_integral1, ExpPoly};

/// Classical OU noise: ⟨B(0)B(t)⟩ = κ² e^{−|t|/τ_c}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    /// Coupling strength, µs⁻¹.
    pub kappa: f64,
    /// Correlation time, µs.
    pub tau_c: f64,
}

impl NoiseModel {
    pub fn new(kappa: f64, tau_c: f64) -> Result<Self> {
        let model = Self { kappa, tau_c };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return domain(format!("kappa must be positive, got {}", self.kappa));
        }
        if !(self.tau_c > 0.0) {
            return domain(format!("tau_c must be positive, got {}", self.tau_c));
        }
        Ok(())
    }

    /// Decay rate R = 1/τ_c in µs⁻¹.
    pub fn rate(&self) -> f64 {
        1.0 / self.tau_c
    }

    /// Default Monte Carlo step, τ_c / 500.
    pub fn default_dt(&self) -> f64 {
        self.tau_c / 500.0
    }
}

/// Total duration plus the instants of ideal, instantaneous π pulses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    total_time: f64,
    pulse_times: Vec<f64>,
}

impl PulseSequence {
    /// Pulse times must be strictly increasing and strictly inside `(0, T)`.
    pub fn new(total_time: f64, pulse_times: Vec<f64>) -> Result<Self> {
        if !(total_time >= 0.0 && total_time.is_finite()) {
            return domain(format!("total time must be finite and >= 0, got {total_time}"));
        }
        if let Some(&t) = pulse_times.iter().find(|&&t| !(t > 0.0 && t < total_time)) {
            return domain(format!("pulse at {t} lies outside (0, {total_time})"));
        }
        if pulse_times.windows(2).any(|w| w[0] >= w[1]) {
            return domain("pulse times must be strictly increasing");
        }
        Ok(Self {
            total_time,
            pulse_times,
        })
    }

    pub fn free_evolution(total_time: f64) -> Result<Self> {
        Self::new(total_time, Vec::new())
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    pub fn pulse_times(&self) -> &[f64] {
        &self.pulse_times
    }

    pub fn n_pulses(&self) -> usize {
        self.pulse_times.len()
    }

    /// `0, t₁, …, t_n, T`.
    pub fn knots(&self) -> Vec<f64> {
        let mut k = Vec::with_capacity(self.pulse_times.len() + 2);
        k.push(0.0);
        k.extend_from_slice(&self.pulse_times);
        k.push(self.total_time);
        k
    }

    /// `(start, end, sign)` for every interval on which ξ is constant.
    pub fn segments(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let n = self.pulse_times.len();
        (0..=n).map(move |i| {
            let a = if i == 0 { 0.0 } else { self.pulse_times[i - 1] };
            let b = if i == n { self.total_time } else { self.pulse_times[i] };
            (a, b, if i % 2 == 0 { 1.0 } else { -1.0 })
        })
    }

    pub fn switching_profile(&self) -> SwitchingProfile {
        SwitchingProfile {
            breakpoints: self.knots(),
        }
    }
}

/// ξ(t) as a ±1 step function starting at +1 and flipping at every pulse.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchingProfile {
    breakpoints: Vec<f64>,
}

impl SwitchingProfile {
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn n_segments(&self) -> usize {
        self.breakpoints.len() - 1
    }

    pub fn segment_sign(&self, index: usize) -> f64 {
        if index.is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }

    /// ξ(t); a pulse instant belongs to the segment it opens.
    pub fn sign_at(&self, t: f64) -> f64 {
        let idx = self.segment_index(t);
        self.segment_sign(idx)
    }

    fn segment_index(&self, t: f64) -> usize {
        let k = self.breakpoints.partition_point(|&b| b <= t);
        k.saturating_sub(1).min(self.n_segments() - 1)
    }

    /// p(s) = ∫₀^{T−s} ξ(t) ξ(t+s) dt by sweeping both step functions.
    pub fn autocorrelation_at(&self, s: f64) -> f64 {
        let knots = &self.breakpoints;
        let total = knots[knots.len() - 1];
        let end = total - s;
        if end <= 0.0 {
            return 0.0;
        }
        let last = self.n_segments() - 1;
        let mut i = 0;
        let mut j = self.segment_index(s);
        let mut t = 0.0;
        let mut acc = 0.0;
        loop {
            let next_i = knots[i + 1];
            let next_j = knots[j + 1] - s;
            let next = next_i.min(next_j).min(end);
            acc += self.segment_sign(i) * self.segment_sign(j) * (next - t);
            if next >= end {
                break;
            }
            if next_i <= next && i < last {
                i += 1;
            }
            if next_j <= next && j < last {
                j += 1;
            }
            t = next;
        }
        acc
    }
}

/// Exact piecewise-linear representation of p(s) on `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Autocorrelation {
    lags: Vec<f64>,
    values: Vec<f64>,
}

impl Autocorrelation {
    /// Breakpoints of p, ascending from 0 to T.
    pub fn lags(&self) -> &[f64] {
        &self.lags
    }

    /// p at each breakpoint.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn total_time(&self) -> f64 {
        self.lags[self.lags.len() - 1]
    }

    /// Linear interpolation between breakpoints; zero outside `[0, T]`.
    pub fn eval(&self, s: f64) -> f64 {
        let total = self.total_time();
        if !(0.0..=total).contains(&s) {
            return 0.0;
        }
        let k = self.lags.partition_point(|&l| l <= s);
        if k == 0 {
            return self.values[0];
        }
        if k == self.lags.len() {
            return self.values[k - 1];
        }
        let (s0, s1) = (self.lags[k - 1], self.lags[k]);
        let (p0, p1) = (self.values[k - 1], self.values[k]);
        p0 + (p1 - p0) * (s - s0) / (s1 - s0)
    }

    /// ∫₀ᵀ e^{−rate·s} p(s) ds, closed form on every linear piece.
    pub fn integrate_exp(&self, rate: f64) -> f64 {
        self.lags
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(s, p)| {
                let h = s[1] - s[0];
                if h <= 0.0 {
                    return 0.0;
                }
                let slope = (p[1] - p[0]) / h;
                (-rate * s[0]).exp() * (p[0] * exp_integral0(rate, h) + slope * exp_integral1(rate, h))
            })
            .sum()
    }
}

/// ν = e^{−κ²t²/2}: free evolution in the quasi-static limit t ≪ τ_c.
pub fn nu_free_quasistatic(noise: &NoiseModel, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return domain(format!("time must be >= 0, got {t}"));
    }
    Ok((-0.5 * noise.kappa * noise.kappa * t * t).exp())
}

/// W for free evolution, (RT − 1 + e^{−RT}) / R², stable as RT → 0.
pub fn w_free(noise: &NoiseModel, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return domain(format!("time must be >= 0, got {t}"));
    }
    let r = noise.rate();
    Ok(t * exp_integral0(r, t) - exp_integral1(r, t))
}

/// ν from the exact free-evolution filter integral.
pub fn nu_free_exact(noise: &NoiseModel, t: f64) -> Result<f64> {
    Ok(nu_from_w(noise, w_free(noise, t)?))
}

/// Piecewise-linear p(s) for the sequence.
pub fn autocorrelation(seq: &PulseSequence) -> Autocorrelation {
    let profile = seq.switching_profile();
    let knots = profile.breakpoints();
    let total = seq.total_time();
    if total == 0.0 {
        return Autocorrelation {
            lags: vec![0.0, 0.0],
            values: vec![0.0, 0.0],
        };
    }
    let mut lags: Vec<f64> = Vec::with_capacity(knots.len() * knots.len() / 2 + 2);
    for (a, &ka) in knots.iter().enumerate() {
        for &kb in &knots[a..] {
            let d = kb - ka;
            if (0.0..=total).contains(&d) {
                lags.push(d);
            }
        }
    }
    lags.push(0.0);
    lags.push(total);
    lags.sort_by(f64::total_cmp);
    let eps = 1e-13 * total;
    lags.dedup_by(|b, a| (*b - *a).abs() <= eps);
    let n = lags.len();
    lags[0] = 0.0;
    lags[n - 1] = total;
    let values = lags.iter().map(|&s| profile.autocorrelation_at(s)).collect();
    Autocorrelation { lags, values }
}

/// W(T) for any pulse sequence, integrated exactly over p(s).
pub fn w_numeric(seq: &PulseSequence, noise: &NoiseModel) -> f64 {
    autocorrelation(seq).integrate_exp(noise.rate())
}

/// W for the CPMG train with `n_pulses` pulses and spacing τ, from the
/// closed form W = Γ_N (Q₁₁ + Q₁₂) − P_N Q₁₂ with δ = Rτ.
///
/// The bracketed parts of Q₁₁ and Q₁₂ vanish to third order in δ, so they
/// are summed from their Taylor series for small δ.
pub fn w_cpmg_analytic(n_pulses: u32, tau: f64, noise: &NoiseModel) -> Result<f64> {
    if n_pulses == 0 || !n_pulses.is_multiple_of(2) {
        return domain(format!("CPMG needs an even, positive pulse count, got {n_pulses}"));
    }
    if !(tau > 0.0) {
        return domain(format!("tau must be positive, got {tau}"));
    }
    let r = noise.rate();
    let n = f64::from(n_pulses);
    let d = r * tau;

    let em2 = (-2.0 * d).exp_m1();
    let p_n = (-n * d).exp_m1() / em2;
    let gamma_n = (-(0.5 * n + 1.0) * em2 + (-(n + 2.0) * d).exp_m1()) / (em2 * em2);

    let q11 = ExpPoly::new(&[
        (2.0, 1, 0.0),
        (-5.0, 0, 0.0),
        (4.0, 0, 0.5),
        (4.0, 0, 1.0),
        (-4.0, 0, 1.5),
        (1.0, 0, 2.0),
    ])
    .eval(d)
        / (r * r);
    let q12 = ExpPoly::new(&[
        (1.0, 0, 0.0),
        (-4.0, 0, 0.5),
        (4.0, 0, 1.0),
        (4.0, 0, 1.5),
        (-2.0, 1, 2.0),
        (-5.0, 0, 2.0),
    ])
    .eval(d)
        / (r * r);

    Ok(gamma_n * (q11 + q12) - p_n * q12)
}

/// ν = e^{−κ² W}.
pub fn nu_from_w(noise: &NoiseModel, w: f64) -> f64 {
    (-noise.kappa * noise.kappa * w).exp()
}

/// Sample mean of a Monte Carlo estimate and its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub standard_error: f64,
}

const MC_BATCH: usize = 2048;

pub(crate) fn batch_rng(seed: u64, batch: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(batch as u64);
    rng
}

/// Splits `n` items into fixed batches, evaluates each batch with its own
/// deterministic stream and returns the per-batch results in order.
pub(crate) fn run_batches<T, F>(n: usize, seed: u64, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, usize) -> T + Sync + Send,
{
    let batches = n.div_ceil(MC_BATCH);
    exec.map(batches, |b| {
        let mut rng = batch_rng(seed, b);
        let len = MC_BATCH.min(n - b * MC_BATCH);
        f(&mut rng, len)
    })
}

/// Monte Carlo estimate of ν = ⟨cos ∫ ξ(t) B(t) dt⟩.
///
/// Each trajectory starts from the stationary law, advances with the exact
/// OU update `x ← x e^{−dt/τ_c} + κ √(1 − e^{−2dt/τ_c}) z` and accumulates
/// the left-point sum Σ ξ(t_k) x_k dt. The step is shrunk so that `T` is a
/// whole number of steps; pulses are snapped to the nearest grid point.
pub fn mc_nu_estimate(
    seq: &PulseSequence,
    noise: &NoiseModel,
    n_traj: usize,
    dt: f64,
    seed: u64,
) -> Result<McEstimate> {
    mc_nu_estimate_with(seq, noise, n_traj, dt, seed, Execution::default())
}

pub fn mc_nu_estimate_with(
    seq: &PulseSequence,
    noise: &NoiseModel,
    n_traj: usize,
    dt: f64,
    seed: u64,
    exec: Execution,
) -> Result<McEstimate> {
    if n_traj == 0 {
        return domain("n_traj must be at least 1");
    }
    if !(dt > 0.0) {
        return domain(format!("dt must be positive, got {dt}"));
    }
    let total = seq.total_time();
    let steps = ((total / dt).ceil() as usize).max(1);
    let h = total / steps as f64;
    let mut signs = vec![1.0; steps];
    let mut flips: Vec<usize> = seq
        .pulse_times()
        .iter()
        .map(|&t| ((t / h).round() as usize).min(steps))
        .collect();
    flips.sort_unstable();
    let mut sign = 1.0;
    let mut next = 0;
    for (k, s) in signs.iter_mut().enumerate() {
        while next < flips.len() && flips[next] <= k {
            sign = -sign;
            next += 1;
        }
        *s = sign;
    }
    let decay = (-h / noise.tau_c).exp();
    let kick = noise.kappa * (-(-2.0 * h / noise.tau_c).exp_m1()).sqrt();
    let kappa = noise.kappa;

    let sums = run_batches(n_traj, seed, exec, |rng, len| {
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        for _ in 0..len {
            let mut x = kappa * rng.sample::<f64, _>(StandardNormal);
            let mut phase = 0.0;
            for &xi in &signs {
                phase += xi * x * h;
                x = decay * x + kick * rng.sample::<f64, _>(StandardNormal);
            }
            let c = phase.cos();
            s1 += c;
            s2 += c * c;
        }
        (s1, s2)
    });
    Ok(summarize(n_traj, sums.into_iter()))
}

fn summarize(n: usize, sums: impl Iterator<Item = (f64, f64)>) -> McEstimate {
    let (s1, s2) = sums.fold((0.0, 0.0), |acc, (a, b)| (acc.0 + a, acc.1 + b));
    let nf = n as f64;
    let mean = s1 / nf;
    let var = if n > 1 {
        ((s2 - nf * mean * mean) / (nf - 1.0)).max(0.0)
    } else {
        0.0
    };
    McEstimate {
        estimate: mean,
        standard_error: (var / nf).sqrt(),
    }
}

/// Samples ∫₀ᵀ ξ(t) B(t) dt without time discretisation.
///
/// Over each constant-ξ segment of length h the pair (x(h), ∫₀ʰ x dt)
/// conditioned on x(0) is bivariate Gaussian; drawing it directly makes the
/// phase exact for any segment length.
#[derive(Debug, Clone)]
pub struct ExactPhaseSampler {
    kappa: f64,
    steps: Vec<SegmentStep>,
}

#[derive(Debug, Clone, Copy)]
struct SegmentStep {
    sign: f64,
    decay: f64,
    mean_gain: f64,
    sd_end: f64,
    cross: f64,
    sd_resid: f64,
}

impl ExactPhaseSampler {
    pub fn new(seq: &PulseSequence, noise: &NoiseModel) -> Self {
        let r = noise.rate();
        let k2 = noise.kappa * noise.kappa;
        // x − 2(1 − e^{−x}) + (1 − e^{−2x})/2
        let f = ExpPoly::new(&[(1.0, 1, 0.0), (-1.5, 0, 0.0), (2.0, 0, 1.0), (-0.5, 0, 2.0)]);
        let steps = seq
            .segments()
            .map(|(a, b, sign)| {
                let h = b - a;
                let x = r * h;
                let u = -(-x).exp_m1();
                let decay = 1.0 - u;
                let var_end = k2 * u * (1.0 + decay);
                let sd_end = var_end.sqrt();
                let cov = k2 * u * u / r;
                let cross = if sd_end > 0.0 { cov / sd_end } else { 0.0 };
                let resid = k2 / (r * r) * (2.0 * f.eval(x) - u * u * u / (1.0 + decay));
                SegmentStep {
                    sign,
                    decay,
                    mean_gain: exp_integral0(r, h),
                    sd_end,
                    cross,
                    sd_resid: resid.max(0.0).sqrt(),
                }
            })
            .collect();
        Self {
            kappa: noise.kappa,
            steps,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mut x = self.kappa * rng.sample::<f64, _>(StandardNormal);
        let mut phase = 0.0;
        for s in &self.steps {
            let z1: f64 = rng.sample(StandardNormal);
            let z2: f64 = rng.sample(StandardNormal);
            let integral = x * s.mean_gain + s.cross * z1 + s.sd_resid * z2;
            phase += s.sign * integral;
            x = s.decay * x + s.sd_end * z1;
        }
        phase
    }
}

/// ν estimated with [`ExactPhaseSampler`] (no discretisation bias).
pub fn mc_nu_exact(
    seq: &PulseSequence,
    noise: &NoiseModel,
    n_traj: usize,
    seed: u64,
    exec: Execution,
) -> Result<McEstimate> {
    if n_traj == 0 {
        return domain("n_traj must be at least 1");
    }
    let sampler = ExactPhaseSampler::new(seq, noise);
    let sums = run_batches(n_traj, seed, exec, |rng, len| {
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        for _ in 0..len {
            let c = sampler.sample(rng).cos();
            s1 += c;
            s2 += c * c;
        }
        (s1, s2)
    });
    Ok(summarize(n_traj, sums.into_iter()))
}
