//! Derivative-free maximizers.

/// Iteration cap shared by both methods.
pub const MAX_ITER: usize = 500;
/// Relative tolerance on the objective (Nelder-Mead) and on the bracket
/// width (golden section).
pub const REL_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct Optimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`.
pub fn golden_max<F: FnMut(f64) -> f64>(f: F, lo: f64, hi: f64) -> Optimum {
    golden_max_tol(f, lo, hi, REL_TOL)
}

/// [`golden_max`] with a custom relative bracket tolerance.
pub fn golden_max_tol<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, rel_tol: f64) -> Optimum {
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (finite(f(c)), finite(f(d)));
    let mut iterations = 0;
    while iterations < MAX_ITER {
        let mid = 0.5 * (a + b);
        if b - a <= 10.0 * rel_tol * (1.0 + mid.abs()) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = finite(f(c));
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = finite(f(d));
        }
        iterations += 1;
    }
    let (x, value) = if fc >= fd { (c, fc) } else { (d, fd) };
    Optimum {
        x: vec![x],
        value,
        iterations,
        converged: iterations < MAX_ITER,
    }
}

fn finite(v: f64) -> f64 {
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

/// Nelder-Mead maximization from `x0` with initial edge lengths `step`.
///
/// Converges when the spread of objective values over the simplex falls
/// below [`REL_TOL`] relative to the best value; one restart from the best
/// vertex guards against a collapsed simplex.
pub fn nelder_mead_max<F: FnMut(&[f64]) -> f64>(mut f: F, x0: &[f64], step: f64) -> Optimum {
    let mut total = 0;
    let mut best = run_nm(&mut f, x0, step, &mut total);
    if best.converged {
        let again = run_nm(&mut f, &best.x.clone(), 0.5 * step, &mut total);
        if again.value >= best.value {
            best = Optimum {
                converged: again.converged,
                ..again
            };
        }
    }
    best.iterations = total;
    best
}

fn run_nm<F: FnMut(&[f64]) -> f64>(f: &mut F, x0: &[f64], step: f64, total: &mut usize) -> Optimum {
    let n = x0.len();
    let mut pts: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += step;
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| finite(f(p))).collect();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_ITER {
        // descending by value: best first
        let mut idx: Vec<usize> = (0..=n).collect();
        idx.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
        pts = idx.iter().map(|&i| pts[i].clone()).collect();
        vals = idx.iter().map(|&i| vals[i]).collect();
        let (fb, fw) = (vals[0], vals[n]);
        if fb.is_finite() && fw.is_finite() && (fb - fw).abs() <= REL_TOL * (fb.abs() + 1e-10) {
            converged = true;
            break;
        }
        iterations += 1;
        let centroid: Vec<f64> = (0..n)
            .map(|j| pts[..n].iter().map(|p| p[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&pts[n])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };
        let xr = along(1.0);
        let fr = finite(f(&xr));
        if fr > vals[0] {
            let xe = along(2.0);
            let fe = finite(f(&xe));
            if fe > fr {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
        } else if fr > vals[n - 1] {
            pts[n] = xr;
            vals[n] = fr;
        } else {
            let outside = fr > vals[n];
            let xc = along(if outside { 0.5 } else { -0.5 });
            let fc = finite(f(&xc));
            if (outside && fc >= fr) || (!outside && fc > vals[n]) {
                pts[n] = xc;
                vals[n] = fc;
            } else {
                for i in 1..=n {
                    let p: Vec<f64> = pts[0].iter().zip(&pts[i]).map(|(b, x)| b + 0.5 * (x - b)).collect();
                    vals[i] = finite(f(&p));
                    pts[i] = p;
                }
            }
        }
    }
    *total += iterations;
    let best = (0..=n).max_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
    Optimum {
        x: pts[best].clone(),
        value: vals[best],
        iterations,
        converged,
    }
}
