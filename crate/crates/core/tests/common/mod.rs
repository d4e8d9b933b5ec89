//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use num_complex::Complex64;
use nv_detect::{CoherencePair, FieldHypothesis, NoiseModel, Priors, Protocol, PulseSequence, Scenario};

pub const KAPPA: f64 = 3.6;
pub const TAU_C: f64 = 25.0;

pub fn bath() -> NoiseModel {
    NoiseModel::new(KAPPA, TAU_C).unwrap()
}

/// Known DC field, free evolution.
pub fn dc_scenario(b: f64) -> Scenario {
    Scenario::new(bath(), FieldHypothesis::DcKnown { b }, Protocol::FreeEvolution)
}

pub fn dc_gaussian_scenario(b0: f64, sigma_b: f64) -> Scenario {
    Scenario::new(
        bath(),
        FieldHypothesis::DcGaussian { b0, sigma_b },
        Protocol::FreeEvolution,
    )
}

/// 1 µT cosine at 1 MHz probed with CPMG at τ = 0.5 µs.
pub fn ac_scenario(sigma_b: f64) -> Scenario {
    Scenario::new(
        bath(),
        FieldHypothesis::AcCosine {
            b0: 1.0,
            sigma_b,
            f: 1.0,
            sigma_f: 0.0,
        },
        Protocol::Cpmg { tau: Some(0.5) },
    )
}

/// ∫₀ᴸ∫₀ᴸ e^{−R|t−t'|} dt dt'.
fn same_segment(rate: f64, len: f64) -> f64 {
    let x = rate * len;
    // 2L² (x − 1 + e^{−x}) / x²
    let g = if x < 0.1 {
        // Σ_{k≥2} (−x)^{k−2} / k!
        let (mut term, mut sum) = (0.5, 0.5);
        for k in 3..30 {
            term *= -x / k as f64;
            sum += term;
        }
        sum
    } else {
        (x - 1.0 + (-x).exp()) / (x * x)
    };
    2.0 * len * len * g
}

fn one_sided(rate: f64, len: f64) -> f64 {
    if rate == 0.0 {
        len
    } else {
        -(-rate * len).exp_m1() / rate
    }
}

/// W = ½ ∫₀ᵀ∫₀ᵀ ξ(t)ξ(t') e^{−R|t−t'|} dt dt', summed segment pair by
/// segment pair.
pub fn w_double_integral(seq: &PulseSequence, rate: f64) -> f64 {
    let segs: Vec<(f64, f64, f64)> = seq.segments().collect();
    let mut diag = 0.0;
    let mut off = 0.0;
    for (i, &(a, b, s)) in segs.iter().enumerate() {
        diag += same_segment(rate, b - a);
        for &(c, d, s2) in &segs[i + 1..] {
            off += s * s2 * (-rate * (c - b)).exp() * one_sided(rate, b - a) * one_sided(rate, d - c);
        }
    }
    0.5 * diag + off
}

/// Adaptive Simpson quadrature.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Λ = P₁ρ₁ − P₀ρ₀ assembled entry by entry; eigenvalues from the
/// characteristic polynomial of a general Hermitian 2×2 matrix.
pub fn dense_eigenvalues(priors: &Priors, coh: &CoherencePair) -> (f64, f64) {
    let (p0, p1) = (priors.p0, priors.p1);
    let r0 = [[0.5, 0.5 * coh.nu], [0.5 * coh.nu, 0.5]];
    let c1 = 0.5 * coh.nu * coh.mu;
    let d00 = p1 * 0.5 - p0 * r0[0][0];
    let d11 = p1 * 0.5 - p0 * r0[1][1];
    let off: Complex64 = p1 * c1 - p0 * r0[0][1];
    let mean = 0.5 * (d00 + d11);
    let radius = (0.25 * (d00 - d11).powi(2) + off.norm_sqr()).sqrt();
    (mean - radius, mean + radius)
}

/// P₀ Tr[ρ₀Π₁] + P₁ Tr[ρ₁Π₀] with Π₁ = |φ₊⟩⟨φ₊|, φ₊ = (1, −e^{iχ})/√2.
pub fn trace_error(priors: &Priors, coh: &CoherencePair, chi: f64) -> f64 {
    let phi = [Complex64::new(1.0, 0.0), -Complex64::from_polar(1.0, chi)];
    let expect = |off: Complex64| {
        // ⟨φ|ρ|φ⟩ / 2 with ρ = ½[[1, off], [off*, 1]]
        let rho = [
            [Complex64::new(0.5, 0.0), 0.5 * off],
            [0.5 * off.conj(), Complex64::new(0.5, 0.0)],
        ];
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..2 {
            for j in 0..2 {
                acc += phi[i].conj() * rho[i][j] * phi[j];
            }
        }
        0.5 * acc.re
    };
    let p1_given_0 = expect(Complex64::new(coh.nu, 0.0));
    let p1_given_1 = expect(coh.nu * coh.mu);
    priors.p0 * p1_given_0 + priors.p1 * (1.0 - p1_given_1)
}

/// Majority-vote error by enumerating all 2ᴹ decision strings; even ties
/// are split evenly. Terms are accumulated with Neumaier summation.
pub fn enumerate_multicopy(priors: &Priors, c_1_given_0: f64, c_0_given_1: f64, m: u32) -> f64 {
    let (mut err, mut carry) = (0.0f64, 0.0f64);
    for bits in 0u32..(1 << m) {
        let present = bits.count_ones();
        let absent = m - present;
        let mut p_if_0 = 1.0;
        let mut p_if_1 = 1.0;
        for k in 0..m {
            if bits >> k & 1 == 1 {
                p_if_0 *= c_1_given_0;
                p_if_1 *= 1.0 - c_0_given_1;
            } else {
                p_if_0 *= 1.0 - c_1_given_0;
                p_if_1 *= c_0_given_1;
            }
        }
        let says_present = if present > absent {
            1.0
        } else if present < absent {
            0.0
        } else {
            0.5
        };
        for term in [
            priors.p0 * p_if_0 * says_present,
            priors.p1 * p_if_1 * (1.0 - says_present),
        ] {
            let next = err + term;
            carry += if err.abs() >= term.abs() {
                (err - next) + term
            } else {
                (term - next) + err
            };
            err = next;
        }
    }
    err + carry
}
