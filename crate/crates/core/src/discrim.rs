//! Binary discrimination between the field-absent state ρ₀ and the
//! field-present state ρ₁ of the dephased qubit.
//!
//! Both states have unit diagonal/2; they differ only in the coherence:
//!
//! ```text
//! ρ₀ = ½ [[1, ν], [ν, 1]]        ρ₁ = ½ [[1, νμ], [νμ*, 1]]
//! ```
//!
//! The minimum error follows from the spectrum of Λ = P₁ρ₁ − P₀ρ₀. Closed
//! forms live here next to [`helstrom_general`], which diagonalises an
//! arbitrary 2×2 Λ and serves as the reference for them.

use std::ops::{Add, Mul, Sub};

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{contract, domain, Result};

/// Eigenvalues with magnitude below this count as zero.
pub const ZERO_EIGENVALUE: f64 = 1e-14;

const PRIOR_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Priors {
    /// Probability that no field is present.
    pub p0: f64,
    /// Probability that the field is present.
    pub p1: f64,
}

impl Priors {
    pub fn new(p0: f64, p1: f64) -> Result<Self> {
        let priors = Self { p0, p1 };
        priors.validate()?;
        Ok(priors)
    }

    pub fn equal() -> Self {
        Self { p0: 0.5, p1: 0.5 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p0 >= 0.0 && self.p1 >= 0.0) {
            return domain(format!("priors must be non-negative, got ({}, {})", self.p0, self.p1));
        }
        if (self.p0 + self.p1 - 1.0).abs() > PRIOR_SUM_TOLERANCE {
            return domain(format!("priors must sum to 1, got {}", self.p0 + self.p1));
        }
        Ok(())
    }
}

impl Default for Priors {
    fn default() -> Self {
        Self::equal()
    }
}

/// (ν, μ): sufficient statistics for the pair ρ₀, ρ₁.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherencePair {
    pub nu: f64,
    pub mu: Complex64,
}

impl CoherencePair {
    pub fn new(nu: f64, mu: Complex64) -> Result<Self> {
        if !(0.0..=1.0).contains(&nu) {
            return domain(format!("nu must lie in [0, 1], got {nu}"));
        }
        if !(mu.norm() <= 1.0 + 1e-12) {
            return domain(format!("|mu| must not exceed 1, got {}", mu.norm()));
        }
        Ok(Self { nu, mu })
    }

    pub fn rho0(&self) -> DensityMatrix {
        DensityMatrix::from_coherence(Complex64::new(self.nu, 0.0))
    }

    pub fn rho1(&self) -> DensityMatrix {
        DensityMatrix::from_coherence(self.mu * self.nu)
    }

    /// √(P₀² + P₁²|μ|² − 2P₀P₁ Re μ) = |P₁μ − P₀|.
    fn radicand_root(&self, priors: &Priors) -> f64 {
        let (p0, p1) = (priors.p0, priors.p1);
        (p0 * p0 + p1 * p1 * self.mu.norm_sqr() - 2.0 * p0 * p1 * self.mu.re)
            .max(0.0)
            .sqrt()
    }
}

/// A 2×2 complex matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Operator(pub [[Complex64; 2]; 2]);

impl Operator {
    pub fn zero() -> Self {
        Self([[Complex64::new(0.0, 0.0); 2]; 2])
    }

    pub fn identity() -> Self {
        let mut m = Self::zero();
        m.0[0][0] = Complex64::new(1.0, 0.0);
        m.0[1][1] = Complex64::new(1.0, 0.0);
        m
    }

    /// |v⟩⟨v|
    pub fn outer(v: [Complex64; 2]) -> Self {
        let mut m = Self::zero();
        for i in 0..2 {
            for j in 0..2 {
                m.0[i][j] = v[i] * v[j].conj();
            }
        }
        m
    }

    pub fn trace(&self) -> Complex64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Self([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = *self;
        out.0.iter_mut().flatten().for_each(|z| *z *= s);
        out
    }

    /// Largest entrywise deviation from another operator.
    pub fn max_diff(&self, other: &Operator) -> f64 {
        self.0
            .iter()
            .flatten()
            .zip(other.0.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_diff(&self.adjoint()) <= tol
    }

    fn to_nalgebra(self) -> Matrix2<Complex64> {
        let m = self.0;
        Matrix2::new(m[0][0], m[0][1], m[1][0], m[1][1])
    }
}

impl Add for Operator {
    type Output = Operator;
    fn add(self, rhs: Operator) -> Operator {
        let mut out = self;
        for i in 0..2 {
            for j in 0..2 {
                out.0[i][j] += rhs.0[i][j];
            }
        }
        out
    }
}

impl Sub for Operator {
    type Output = Operator;
    fn sub(self, rhs: Operator) -> Operator {
        self + rhs.scale(-1.0)
    }
}

impl Mul for Operator {
    type Output = Operator;
    fn mul(self, rhs: Operator) -> Operator {
        let mut out = Operator::zero();
        for i in 0..2 {
            for j in 0..2 {
                out.0[i][j] = self.0[i][0] * rhs.0[0][j] + self.0[i][1] * rhs.0[1][j];
            }
        }
        out
    }
}

/// A validated qubit state: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix(Operator);

impl DensityMatrix {
    pub fn new(op: Operator) -> Result<Self> {
        if !op.is_hermitian(1e-12) {
            return contract("density matrix is not Hermitian");
        }
        let tr = op.trace();
        if (tr - Complex64::new(1.0, 0.0)).norm() > 1e-12 {
            return contract(format!("density matrix trace is {tr}, expected 1"));
        }
        let eig = op.to_nalgebra().symmetric_eigenvalues();
        if eig.iter().any(|&l| l < -1e-10) {
            return contract("density matrix is not positive semidefinite");
        }
        Ok(Self(op))
    }

    /// ½ [[1, c], [c*, 1]]. Valid whenever |c| ≤ 1.
    pub fn from_coherence(c: Complex64) -> Self {
        let half = Complex64::new(0.5, 0.0);
        Self(Operator([[half, c * 0.5], [c.conj() * 0.5, half]]))
    }

    pub fn operator(&self) -> &Operator {
        &self.0
    }

    /// Tr[ρ Π], real for Hermitian Π.
    pub fn expectation(&self, op: &Operator) -> f64 {
        (self.0 * *op).trace().re
    }
}

/// How the optimal decision is made.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Eigenvalues of opposite sign: measure and decide by outcome.
    Measure,
    /// Λ ≥ 0: always declare "field present".
    AlwaysPresent,
    /// Λ ≤ 0: always declare "field absent".
    AlwaysAbsent,
    /// Λ = 0: both answers are equally good.
    Indifferent,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Measure => "measure",
            Regime::AlwaysPresent => "always_present",
            Regime::AlwaysAbsent => "always_absent",
            Regime::Indifferent => "indifferent",
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// C₁|₀ (false alarm) and C₀|₁ (missed detection) for one measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalErrors {
    pub c_1_given_0: f64,
    pub c_0_given_1: f64,
}

impl ConditionalErrors {
    /// P₀ C₁|₀ + P₁ C₀|₁.
    pub fn total(&self, priors: &Priors) -> f64 {
        priors.p0 * self.c_1_given_0 + priors.p1 * self.c_0_given_1
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscriminationOutcome {
    pub regime: Regime,
    pub p_error: f64,
    /// Measurement angle; `None` unless a measurement is required.
    pub chi: Option<f64>,
    pub lambda_minus: f64,
    pub lambda_plus: f64,
    pub c_0_given_1: f64,
    pub c_1_given_0: f64,
}

impl DiscriminationOutcome {
    pub fn conditional_errors(&self) -> ConditionalErrors {
        ConditionalErrors {
            c_1_given_0: self.c_1_given_0,
            c_0_given_1: self.c_0_given_1,
        }
    }
}

/// λ± = ½(P₁ − P₀) ± ½ν √(P₀² + P₁²|μ|² − 2P₀P₁ Re μ), returned as (λ₋, λ₊).
pub fn lambda_eigenvalues(priors: &Priors, coh: &CoherencePair) -> (f64, f64) {
    let centre = 0.5 * (priors.p1 - priors.p0);
    let half_gap = 0.5 * coh.nu * coh.radicand_root(priors);
    (centre - half_gap, centre + half_gap)
}

pub fn classify_regime(lambda_minus: f64, lambda_plus: f64) -> Regime {
    let sign = |l: f64| {
        if l > ZERO_EIGENVALUE {
            1
        } else if l < -ZERO_EIGENVALUE {
            -1
        } else {
            0
        }
    };
    match (sign(lambda_minus), sign(lambda_plus)) {
        (0, 0) => Regime::Indifferent,
        (a, b) if a >= 0 && b >= 0 => Regime::AlwaysPresent,
        (a, b) if a <= 0 && b <= 0 => Regime::AlwaysAbsent,
        _ => Regime::Measure,
    }
}

/// Minimum error ½(1 − |λ₋| − |λ₊|).
pub fn helstrom_error(priors: &Priors, coh: &CoherencePair) -> f64 {
    let (lm, lp) = lambda_eigenvalues(priors, coh);
    0.5 * (1.0 - lm.abs() - lp.abs())
}

/// Error of the projective measurement with angle χ.
pub fn error_at_chi(priors: &Priors, coh: &CoherencePair, chi: f64) -> f64 {
    conditional_errors(coh, chi).total(priors)
}

/// Optimal measurement angle.
///
/// χ satisfies tan χ = P₁ Im μ / (P₀ − P₁ Re μ); the branch is the one whose
/// projectors attain the Helstrom error.
pub fn optimal_chi(priors: &Priors, coh: &CoherencePair) -> Result<f64> {
    let (lm, lp) = lambda_eigenvalues(priors, coh);
    let regime = classify_regime(lm, lp);
    if regime != Regime::Measure {
        return contract(format!("no measurement is needed in the {regime} regime"));
    }
    let chi = (priors.p1 * coh.mu.im).atan2(priors.p0 - priors.p1 * coh.mu.re);
    let flipped = wrap_angle(chi + std::f64::consts::PI);
    if error_at_chi(priors, coh, flipped) < error_at_chi(priors, coh, chi) {
        Ok(flipped)
    } else {
        Ok(chi)
    }
}

fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let w = a.rem_euclid(two_pi);
    if w > std::f64::consts::PI {
        w - two_pi
    } else {
        w
    }
}

/// (Π₀, Π₁) projecting onto |φ∓⟩ = (1, ±e^{iχ})/√2; Π₁ declares "present".
pub fn projectors_from_chi(chi: f64) -> (Operator, Operator) {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let phase = Complex64::from_polar(s, chi);
    let one = Complex64::new(s, 0.0);
    let pi0 = Operator::outer([one, phase]);
    let pi1 = Operator::outer([one, -phase]);
    (pi0, pi1)
}

/// C₁|₀ = ½(1 − ν cos χ), C₀|₁ = ½(1 + ν Re(μ e^{iχ})).
pub fn conditional_errors(coh: &CoherencePair, chi: f64) -> ConditionalErrors {
    let rot = Complex64::from_polar(1.0, chi);
    ConditionalErrors {
        c_1_given_0: 0.5 * (1.0 - coh.nu * chi.cos()),
        c_0_given_1: 0.5 * (1.0 + coh.nu * (coh.mu * rot).re),
    }
}

/// Conditional errors when the bright outcome is registered with
/// probability η and a click means "field present".
pub fn conditional_errors_with_efficiency(coh: &CoherencePair, chi: f64, eta: f64) -> Result<ConditionalErrors> {
    check_eta(eta)?;
    let ideal = conditional_errors(coh, chi);
    Ok(ConditionalErrors {
        c_1_given_0: eta * ideal.c_1_given_0,
        c_0_given_1: 1.0 - eta * (1.0 - ideal.c_0_given_1),
    })
}

/// Full solution of the problem for a coherence pair.
pub fn discriminate(priors: &Priors, coh: &CoherencePair) -> DiscriminationOutcome {
    let (lambda_minus, lambda_plus) = lambda_eigenvalues(priors, coh);
    let regime = classify_regime(lambda_minus, lambda_plus);
    let p_error = 0.5 * (1.0 - lambda_minus.abs() - lambda_plus.abs());
    let (chi, cond) = match regime {
        Regime::Measure => {
            let chi = optimal_chi(priors, coh).expect("measure regime");
            (Some(chi), conditional_errors(coh, chi))
        }
        Regime::AlwaysPresent => (
            None,
            ConditionalErrors {
                c_1_given_0: 1.0,
                c_0_given_1: 0.0,
            },
        ),
        Regime::AlwaysAbsent | Regime::Indifferent => (
            None,
            ConditionalErrors {
                c_1_given_0: 0.0,
                c_0_given_1: 1.0,
            },
        ),
    };
    DiscriminationOutcome {
        regime,
        p_error,
        chi,
        lambda_minus,
        lambda_plus,
        c_0_given_1: cond.c_0_given_1,
        c_1_given_0: cond.c_1_given_0,
    }
}

/// Result of the eigen-decomposition route.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralHelstrom {
    pub p_error: f64,
    /// Eigenvalues of Λ, ascending.
    pub eigenvalues: [f64; 2],
    pub regime: Regime,
    pub pi0: Operator,
    pub pi1: Operator,
}

/// Helstrom measurement for arbitrary qubit states: assemble Λ, diagonalise
/// it, put negative-eigenvalue eigenvectors in Π₀ and the rest in Π₁.
pub fn helstrom_general(rho0: &DensityMatrix, rho1: &DensityMatrix, priors: &Priors) -> Result<GeneralHelstrom> {
    priors.validate()?;
    let lambda = rho1.operator().scale(priors.p1) - rho0.operator().scale(priors.p0);
    let eig = lambda.to_nalgebra().symmetric_eigen();
    let mut order = [0usize, 1];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = [eig.eigenvalues[order[0]], eig.eigenvalues[order[1]]];

    let mut pi0 = Operator::zero();
    let mut pi1 = Operator::zero();
    for &k in &order {
        let v = eig.eigenvectors.column(k);
        let proj = Operator::outer([v[0], v[1]]);
        if eig.eigenvalues[k] < -ZERO_EIGENVALUE {
            pi0 = pi0 + proj;
        } else {
            pi1 = pi1 + proj;
        }
    }
    Ok(GeneralHelstrom {
        p_error: 0.5 * (1.0 - eigenvalues[0].abs() - eigenvalues[1].abs()),
        eigenvalues,
        regime: classify_regime(eigenvalues[0], eigenvalues[1]),
        pi0,
        pi1,
    })
}

/// Error of majority voting over `m_copies` independent, identical
/// measurements. For even M the value equals that for M − 1.
pub fn multicopy_error(priors: &Priors, cond: &ConditionalErrors, m_copies: u32) -> Result<f64> {
    if m_copies == 0 {
        return domain("at least one copy is required");
    }
    for c in [cond.c_0_given_1, cond.c_1_given_0] {
        if !(0.0..=1.0).contains(&c) {
            return domain(format!("conditional error {c} is not a probability"));
        }
    }
    let m = if m_copies.is_multiple_of(2) {
        m_copies - 1
    } else {
        m_copies
    };
    Ok(priors.p1 * majority_wrong(m, cond.c_0_given_1) + priors.p0 * majority_wrong(m, cond.c_1_given_0))
}

/// P[at most ⌊m/2⌋ of m votes are right] when each vote is wrong with
/// probability `c`.
fn majority_wrong(m: u32, c: f64) -> f64 {
    let half = m / 2;
    if m <= 200 {
        let mut binom = 1.0;
        let mut sum = 0.0;
        for k in 0..=half {
            if k > 0 {
                binom = binom * f64::from(m - k + 1) / f64::from(k);
            }
            sum += binom * (1.0 - c).powi(k as i32) * c.powi((m - k) as i32);
        }
        return sum;
    }
    // Large m: sum in log space.
    if c == 0.0 {
        return 0.0;
    }
    if c == 1.0 {
        return 1.0;
    }
    let ln_fact = |n: u32| -> f64 { (2..=n).map(|i| f64::from(i).ln()).sum() };
    let ln_m = ln_fact(m);
    let (lc, lq) = (c.ln(), (1.0 - c).ln());
    let mut ln_k = 0.0;
    let mut ln_mk = ln_m;
    let mut terms = Vec::with_capacity(half as usize + 1);
    for k in 0..=half {
        if k > 0 {
            ln_k += f64::from(k).ln();
            ln_mk -= f64::from(m - k + 1).ln();
        }
        terms.push(ln_m - ln_k - ln_mk + f64::from(k) * lq + f64::from(m - k) * lc);
    }
    let top = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    top.exp() * terms.iter().map(|t| (t - top).exp()).sum::<f64>()
}

fn check_eta(eta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eta) {
        return domain(format!("efficiency must lie in [0, 1], got {eta}"));
    }
    Ok(())
}

/// Error with photon detection efficiency η:
/// P₁ − (η/2)[(P₁ − P₀) − ν(P₁ Re(μ e^{iχ}) − P₀ cos χ)].
pub fn inefficient_error(priors: &Priors, coh: &CoherencePair, chi: f64, eta: f64) -> Result<f64> {
    check_eta(eta)?;
    let (p0, p1) = (priors.p0, priors.p1);
    let rotated = (coh.mu * Complex64::from_polar(1.0, chi)).re;
    Ok(p1 - 0.5 * eta * ((p1 - p0) - coh.nu * (p1 * rotated - p0 * chi.cos())))
}
