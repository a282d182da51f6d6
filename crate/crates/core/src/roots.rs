//! Scalar root finding for monotone targets.

/// Bracket width at which bisection hands over to Newton.
pub const BRACKET_TOL: f64 = 1e-10;
/// Bisection iteration cap.
pub const MAX_BISECTIONS: usize = 200;

/// Solves `f(x) = target` for `x` in `(lo, hi)` where `f` is nondecreasing.
///
/// Bisection narrows the bracket to [`BRACKET_TOL`], then a few Newton steps
/// with derivative `df` polish the midpoint; a step that leaves the bracket
/// is rejected. Returns the best point and whether the bracket converged.
pub fn invert_increasing<F, D>(f: F, df: D, target: f64, lo: f64, hi: f64) -> (f64, bool)
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let (mut lo, mut hi) = (lo, hi);
    let mut iters = 0;
    while hi - lo > BRACKET_TOL * hi.abs().max(1.0) && iters < MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        iters += 1;
    }
    let converged = iters < MAX_BISECTIONS;
    let mut x = 0.5 * (lo + hi);
    for _ in 0..4 {
        let r = f(x) - target;
        let d = df(x);
        if r == 0.0 || !(d > 0.0 && d.is_finite()) {
            break;
        }
        let next = x - r / d;
        if !(next >= lo && next <= hi) {
            break;
        }
        let done = (next - x).abs() <= 1e-15 * x.abs().max(1e-300);
        x = next;
        if done {
            break;
        }
    }
    (x, converged)
}

/// Plain bisection for a monotone `f` (either direction) to absolute width `tol`.
pub fn bisect<F: Fn(f64) -> f64>(f: F, target: f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let increasing = f(hi) >= f(lo);
    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if (f(mid) < target) == increasing {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverts_a_cubic() {
        let (x, ok) = invert_increasing(|x| x * x * x, |x| 3.0 * x * x, 0.125, 0.0, 1.0);
        assert!(ok);
        assert!((x - 0.5).abs() < 1e-14);
    }

    #[test]
    fn bisects_decreasing() {
        let x = bisect(|x| -x, -0.3, 0.0, 1.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-11);
    }
}
