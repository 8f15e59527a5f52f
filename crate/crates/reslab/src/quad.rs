//! Quadrature toolbox: cached Gauss-Legendre rules, adaptive Simpson
//! integration for complex integrands, and fixed-order Taylor jets used to
//! evaluate high derivatives of smooth window functions exactly.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::C64;

/// Nodes and weights on the reference interval `[-1, 1]`.
pub struct GlRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

static RULE_CACHE: OnceLock<Mutex<HashMap<usize, Arc<GlRule>>>> = OnceLock::new();

fn legendre_and_deriv(n: usize, x: f64) -> (f64, f64) {
    debug_assert!(n >= 1);
    let mut p_prev = 1.0;
    let mut p = x;
    for k in 2..=n {
        let kf = k as f64;
        let next = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * p_prev) / kf;
        p_prev = p;
        p = next;
    }
    let d = n as f64 * (x * p - p_prev) / (x * x - 1.0);
    (p, d)
}

/// Gauss-Legendre rule of the given order, cached for reuse across calls.
/// Callers that derive the order from a frequency should bucket it (e.g. to
/// multiples of 64) so the cache stays small.
pub fn gauss_legendre(order: usize) -> Arc<GlRule> {
    assert!(order >= 1, "quadrature order must be positive");
    let cache = RULE_CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(rule) = cache.lock().unwrap().get(&order) {
        return Arc::clone(rule);
    }
    let rule = Arc::new(build_rule(order));
    cache
        .lock()
        .unwrap()
        .entry(order)
        .or_insert_with(|| Arc::clone(&rule));
    rule
}

fn build_rule(n: usize) -> GlRule {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi-style initial guess, then Newton on the recurrence.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut d = 0.0;
        for _ in 0..100 {
            let (p, dp) = legendre_and_deriv(n, x);
            d = dp;
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                let (p2, dp2) = legendre_and_deriv(n, x);
                d = dp2;
                x -= p2 / dp2;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * d * d);
        nodes[i] = x;
        weights[i] = w;
        nodes[n - 1 - i] = -x;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
        let (_, d) = legendre_and_deriv(n, 0.0);
        weights[n / 2] = 2.0 / (d * d);
    }
    GlRule { nodes, weights }
}

/// Integrate `f` over `[a, b]` with a fixed Gauss-Legendre rule.
pub fn integrate_gl<F: Fn(f64) -> C64>(rule: &GlRule, a: f64, b: f64, f: F) -> C64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = C64::new(0.0, 0.0);
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        acc += f(mid + half * x) * *w;
    }
    acc * half
}

/// Adaptive Simpson integration of a complex-valued function on `[a, b]`
/// to the given absolute tolerance. Depth is capped; on smooth integrands
/// the classic `|S2 - S1| < 15 tol` criterion triggers long before the cap.
pub fn adaptive_simpson<F: Fn(f64) -> C64>(f: &F, a: f64, b: f64, abs_tol: f64) -> C64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (fa + fm * 4.0 + fb) * ((b - a) / 6.0);
    simpson_rec(f, a, b, fa, fm, fb, whole, abs_tol, 40)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> C64>(
    f: &F,
    a: f64,
    b: f64,
    fa: C64,
    fm: C64,
    fb: C64,
    whole: C64,
    tol: f64,
    depth: u32,
) -> C64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (fa + flm * 4.0 + fm) * ((m - a) / 6.0);
    let right = (fm + frm * 4.0 + fb) * ((b - m) / 6.0);
    let delta = left + right - whole;
    if depth == 0 || delta.norm() < 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Real-valued convenience wrapper around [`adaptive_simpson`].
pub fn adaptive_simpson_re<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, abs_tol: f64) -> f64 {
    adaptive_simpson(&|x| C64::new(f(x), 0.0), a, b, abs_tol).re
}

/// Truncated Taylor expansion of order 8 (nine coefficients) about a point.
/// Coefficient `k` stores `f^(k)(x0) / k!`; arithmetic on jets propagates
/// derivatives exactly, so 8th derivatives come out to round-off rather than
/// finite-difference accuracy.
#[derive(Clone, Copy, Debug)]
pub struct Jet(pub [f64; 9]);

impl Jet {
    pub fn constant(c: f64) -> Self {
        let mut a = [0.0; 9];
        a[0] = c;
        Jet(a)
    }

    /// The identity function expanded at `x0`.
    pub fn variable(x0: f64) -> Self {
        let mut a = [0.0; 9];
        a[0] = x0;
        a[1] = 1.0;
        Jet(a)
    }

    pub fn mul(&self, other: &Jet) -> Jet {
        let mut out = [0.0; 9];
        for i in 0..9 {
            for j in 0..9 - i {
                out[i + j] += self.0[i] * other.0[j];
            }
        }
        Jet(out)
    }

    pub fn sub(&self, other: &Jet) -> Jet {
        let mut out = [0.0; 9];
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.0[k] - other.0[k];
        }
        Jet(out)
    }

    /// Reciprocal via the standard convolution recurrence; the constant term
    /// must be nonzero.
    pub fn recip(&self) -> Jet {
        let a = &self.0;
        let mut b = [0.0; 9];
        b[0] = 1.0 / a[0];
        for n in 1..9 {
            let mut s = 0.0;
            for k in 1..=n {
                s += a[k] * b[n - k];
            }
            b[n] = -b[0] * s;
        }
        Jet(b)
    }

    /// Exponential via `e' = a' e`, i.e. `n e_n = sum k a_k e_{n-k}`.
    pub fn exp(&self) -> Jet {
        let a = &self.0;
        let mut e = [0.0; 9];
        e[0] = a[0].exp();
        for n in 1..9 {
            let mut s = 0.0;
            for k in 1..=n {
                s += (k as f64) * a[k] * e[n - k];
            }
            e[n] = s / n as f64;
        }
        Jet(e)
    }

    /// `f^(k)(x0)` recovered from the stored coefficient.
    pub fn derivative(&self, k: usize) -> f64 {
        const FACT: [f64; 9] = [1.0, 1.0, 2.0, 6.0, 24.0, 120.0, 720.0, 5040.0, 40320.0];
        self.0[k] * FACT[k]
    }
}
