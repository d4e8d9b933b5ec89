//! Small numerical kernels shared by the physics modules.

/// Inverse golden ratio, (√5 − 1) / 2.
const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for a local minimum of `f` on `[a, b]`.
///
/// Returns `(x, f(x))` for the best point seen once the bracket is narrower
/// than `tol`.
pub(crate) fn golden_section<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let (mut lo, mut hi) = (a.min(b), a.max(b));
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut best = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    // 200 iterations shrink any finite bracket far below f64 resolution.
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
            if f1 < best.1 {
                best = (x1, f1);
            }
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
            if f2 < best.1 {
                best = (x2, f2);
            }
        }
    }
    let mid = 0.5 * (lo + hi);
    let fm = f(mid);
    if fm < best.1 {
        (mid, fm)
    } else {
        best
    }
}

/// Bisection for a sign change of `f` on `[a, b]`. The caller guarantees
/// `f(a)` and `f(b)` have opposite signs.
pub(crate) fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fa < 0.0) == (fm < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Gauss–Hermite nodes and weights for ∫ e^{−x²} g(x) dx, by Newton
/// iteration on the orthonormal Hermite recurrence.
pub(crate) fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let pim4 = std::f64::consts::PI.powf(-0.25);
    let m = n.div_ceil(2);
    let nf = n as f64;
    let mut z = 0.0_f64;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = (j + 1) as f64;
                p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    // Nodes come out descending; flip to ascending.
    x.reverse();
    w.reverse();
    (x, w)
}

/// ∫₀ʰ e^{−r u} du, stable as r·h → 0.
pub(crate) fn exp_integral0(r: f64, h: f64) -> f64 {
    let x = r * h;
    if x.abs() < 1e-300 {
        h
    } else {
        -(-x).exp_m1() / r
    }
}

/// ∫₀ʰ u e^{−r u} du, stable as r·h → 0.
pub(crate) fn exp_integral1(r: f64, h: f64) -> f64 {
    let x = r * h;
    // h² Σ_k (−x)^k / (k! (k + 2))
    let g = if x.abs() < 0.1 {
        let mut term = 1.0;
        let mut sum = 0.5;
        for k in 1..25 {
            term *= -x / k as f64;
            sum += term / (k + 2) as f64;
        }
        sum
    } else {
        (1.0 - (-x).exp() * (1.0 + x)) / (x * x)
    };
    h * h * g
}

/// A sum of terms `coeff · δ^power · e^{−rate · δ}`.
///
/// Closed forms built from such sums often cancel to high order as δ → 0.
/// Below `SERIES_BELOW` the sum is evaluated from its Taylor series, whose
/// low-order coefficients are exact dyadic rationals and cancel exactly.
#[derive(Debug, Clone)]
pub(crate) struct ExpPoly {
    terms: Vec<(f64, u32, f64)>,
}

impl ExpPoly {
    const SERIES_BELOW: f64 = 0.25;
    const ORDER: u32 = 40;

    pub(crate) fn new(terms: &[(f64, u32, f64)]) -> Self {
        Self { terms: terms.to_vec() }
    }

    pub(crate) fn direct(&self, d: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(c, p, r)| c * d.powi(p as i32) * (-r * d).exp())
            .sum()
    }

    /// Taylor coefficient of δ^k.
    pub(crate) fn coefficient(&self, k: u32) -> f64 {
        // k! · coeff is a sum of exact dyadic rationals for small k.
        let mut scaled = 0.0;
        for &(c, p, r) in &self.terms {
            if k < p {
                continue;
            }
            let j = k - p;
            // k!/j! for p ∈ {0, 1, …}
            let falling: f64 = ((j + 1)..=k).map(f64::from).product();
            scaled += c * (-r).powi(j as i32) * falling;
        }
        let fact: f64 = (1..=k).map(f64::from).product();
        scaled / fact
    }

    pub(crate) fn eval(&self, d: f64) -> f64 {
        if d.abs() >= Self::SERIES_BELOW {
            return self.direct(d);
        }
        let mut sum = 0.0;
        let mut pow = 1.0;
        for k in 0..=Self::ORDER {
            sum += self.coefficient(k) * pow;
            pow *= d;
        }
        sum
    }
}
