//! Gauss–Legendre quadrature with a simple bisection-adaptive driver.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

/// Nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct Rule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Rule {
    /// Roots of `P_n` by Newton iteration from the Tricomi initial guesses.
    fn new(n: usize) -> Self {
        assert!(n >= 1, "quadrature order must be positive");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_p(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            if dp == 0.0 {
                dp = legendre_p(n, x).1;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Rule { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre_p(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    (p1, n as f64 * (x * p1 - p0) / (x * x - 1.0))
}

/// Cached Gauss–Legendre rule of order `n`.
pub fn legendre(n: usize) -> &'static Rule {
    static RULES: OnceLock<Mutex<HashMap<usize, &'static Rule>>> = OnceLock::new();
    let cache = RULES.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry(n)
        .or_insert_with(|| Box::leak(Box::new(Rule::new(n))))
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    /// Sum of |whole - halves| over accepted panels.
    pub abs_error: f64,
    /// False when some panel hit the depth cap before meeting the tolerance.
    pub converged: bool,
}

/// Adaptive integration with a 16-point rule.
pub fn adaptive<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, tol: f64, max_depth: u32) -> Integral {
    adaptive_with(legendre(16), f, a, b, tol, max_depth)
}

/// Adaptive integration: a panel is accepted when the rule applied to the
/// whole panel and to its two halves agree within the panel's share of `tol`;
/// otherwise both halves are refined, down to `max_depth` bisections.
pub fn adaptive_with<F: FnMut(f64) -> f64>(
    rule: &Rule,
    mut f: F,
    a: f64,
    b: f64,
    tol: f64,
    max_depth: u32,
) -> Integral {
    let whole = rule.integrate(&mut f, a, b);
    refine(rule, &mut f, a, b, whole, tol, max_depth)
}

fn refine<F: FnMut(f64) -> f64>(
    rule: &Rule,
    f: &mut F,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Integral {
    let mid = 0.5 * (a + b);
    let left = rule.integrate(&mut *f, a, mid);
    let right = rule.integrate(&mut *f, mid, b);
    let halves = left + right;
    let err = (whole - halves).abs();
    // below this the two estimates differ by rounding only
    let floor = 64.0 * f64::EPSILON * halves.abs();
    if err <= tol.max(floor) || !err.is_finite() {
        return Integral {
            value: halves,
            abs_error: err,
            converged: err.is_finite(),
        };
    }
    if depth == 0 {
        return Integral {
            value: halves,
            abs_error: err,
            converged: false,
        };
    }
    let l = refine(rule, f, a, mid, left, 0.5 * tol, depth - 1);
    let r = refine(rule, f, mid, b, right, 0.5 * tol, depth - 1);
    Integral {
        value: l.value + r.value,
        abs_error: l.abs_error + r.abs_error,
        converged: l.converged && r.converged,
    }
}
