//! Maximum-likelihood fitting of pair-copulas and trivariate vines.

mod binned;
pub mod optim;

use rayon::prelude::*;
use serde::Serialize;

pub use binned::{fit_nonsimplified_binned, BinnedFit, BinnedOptions, TauCurveEstimate};

use crate::bicop::{gauss_log_pdf_xy, start_from_tau, t_lconst, t_log_pdf_xy};
use crate::bicop::{BivariateCopula, Family, Rotation};
use crate::error::{Error, Result};
use crate::special::{norm_quantile, t_quantile};
use crate::stats::kendall_tau;
use crate::vine3d::VineSpec3D;
use optim::{golden_max, golden_max_tol, nelder_mead_max};

/// Minimum sample size for a pair fit.
pub const MIN_PAIR_N: usize = 20;
/// Minimum sample size for a vine fit.
pub const MIN_VINE_N: usize = 50;
/// Degrees-of-freedom range for the t copula.
pub const NU_RANGE: (f64, f64) = (2.0, 30.0);
const NU_TOL: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub copula: BivariateCopula,
    pub loglik: f64,
    pub aic: f64,
    pub n: usize,
}

impl FitResult {
    fn new(copula: BivariateCopula, loglik: f64, n: usize) -> Self {
        let k = copula.params().len() as f64;
        FitResult {
            copula,
            loglik,
            aic: -2.0 * loglik + 2.0 * k,
            n,
        }
    }
}

/// Every family with each of its distinct rotations.
pub fn all_candidates() -> Vec<(Family, Rotation)> {
    Family::ALL
        .iter()
        .flat_map(|&f| f.rotations().iter().map(move |&r| (f, r)))
        .collect()
}

/// Orders fits by AIC, then higher log-likelihood, then family and rotation.
fn rank(a: &FitResult, b: &FitResult) -> std::cmp::Ordering {
    a.aic
        .total_cmp(&b.aic)
        .then(b.loglik.total_cmp(&a.loglik))
        .then(a.copula.family().cmp(&b.copula.family()))
        .then(a.copula.rotation().degrees().cmp(&b.copula.rotation().degrees()))
}

/// Drops positive-only families whose rotation contradicts the sign of `tau`.
fn sign_filter(cands: &[(Family, Rotation)], tau: f64) -> Vec<(Family, Rotation)> {
    cands
        .iter()
        .copied()
        .filter(|&(f, r)| {
            if !f.positive_only() || tau == 0.0 {
                return true;
            }
            let negative = matches!(r, Rotation::R90 | Rotation::R270);
            negative == (tau < 0.0)
        })
        .collect()
}

/// Fits every admissible candidate and returns the successful fits ranked
/// best first.
pub fn fit_all(data: &[[f64; 2]], candidates: &[(Family, Rotation)]) -> Result<Vec<FitResult>> {
    check_pairs(data)?;
    let (x, y): (Vec<f64>, Vec<f64>) = data.iter().map(|p| (p[0], p[1])).unzip();
    let tau = kendall_tau(&x, &y);
    let cands = sign_filter(candidates, tau);
    let mut fits: Vec<FitResult> = cands
        .par_iter()
        .filter_map(|&(f, r)| fit_family(data, f, r, tau))
        .collect();
    if fits.is_empty() {
        return Err(Error::AllFitsFailed);
    }
    fits.sort_by(rank);
    Ok(fits)
}

/// AIC-selected maximum-likelihood fit over `candidates`.
pub fn fit_bicop(data: &[[f64; 2]], candidates: &[(Family, Rotation)]) -> Result<FitResult> {
    Ok(fit_all(data, candidates)?.swap_remove(0))
}

fn check_pairs(data: &[[f64; 2]]) -> Result<()> {
    if data.len() < MIN_PAIR_N {
        return Err(Error::InsufficientData {
            needed: MIN_PAIR_N,
            got: data.len(),
        });
    }
    if let Some(v) = data.iter().flatten().find(|u| !(**u > 0.0 && **u < 1.0)) {
        return Err(Error::Domain {
            what: "pair observation",
            value: *v,
        });
    }
    Ok(())
}

/// Maximum-likelihood fit of one family and rotation. `tau` is the sample
/// Kendall's tau of `data`, used for starting values. `None` if no finite
/// likelihood was found or the optimizer hit its iteration cap.
pub fn fit_family(data: &[[f64; 2]], family: Family, rotation: Rotation, tau: f64) -> Option<FitResult> {
    let n = data.len();
    let make = |p: &[f64]| BivariateCopula::new(family, rotation, p).ok();
    let ll = |p: &[f64]| make(p).map_or(f64::NEG_INFINITY, |c| c.loglik(data));
    let (params, value, converged) = match family {
        Family::Independence => return Some(FitResult::new(BivariateCopula::independence(), 0.0, n)),
        Family::Gaussian => {
            let xy: Vec<(f64, f64)> = data
                .iter()
                .map(|p| (norm_quantile(clamp(p[0])), norm_quantile(clamp(p[1]))))
                .collect();
            let o = golden_max(|r| gauss_ll(&xy, r), -RHO_MAX, RHO_MAX);
            (vec![o.x[0]], o.value, o.converged)
        }
        Family::StudentT => fit_t(data)?,
        f if f.n_params() == 1 => {
            let tr = Transform::of(f);
            let (lo, hi) = tr.bracket(f, rotation, tau);
            let o = golden_max(|x| ll(&[tr.to(x, 0)]), lo, hi);
            let mut best = (vec![tr.to(o.x[0], 0)], o.value);
            // keep the tau-inversion start if the search ended below it
            if let Some(s) = start_from_tau(f, oriented_tau(rotation, tau)) {
                let v = ll(&s);
                if v > best.1 {
                    best = (s, v);
                }
            }
            (best.0, best.1, o.converged)
        }
        f => {
            let tr = Transform::of(f);
            let start = start_from_tau(f, oriented_tau(rotation, tau))?;
            let x0: Vec<f64> = start.iter().enumerate().map(|(i, &p)| tr.from(p, i)).collect();
            let o = nelder_mead_max(
                |x| {
                    let p = [tr.to(x[0], 0), tr.to(x[1], 1)];
                    ll(&p)
                },
                &x0,
                0.5,
            );
            let p = vec![tr.to(o.x[0], 0), tr.to(o.x[1], 1)];
            (p, o.value, o.converged)
        }
    };
    if !converged || !value.is_finite() {
        return None;
    }
    Some(FitResult::new(make(&params)?, value, n))
}

const RHO_MAX: f64 = 0.9995;

#[inline]
fn clamp(u: f64) -> f64 {
    u.clamp(crate::bicop::EPS, 1.0 - crate::bicop::EPS)
}

/// Tau of the unrotated family given the sample tau.
fn oriented_tau(rotation: Rotation, tau: f64) -> f64 {
    match rotation {
        Rotation::R90 | Rotation::R270 => -tau,
        _ => tau,
    }
}

fn gauss_ll(xy: &[(f64, f64)], rho: f64) -> f64 {
    let s = (1.0 - rho * rho).sqrt();
    xy.iter().map(|&(x, y)| gauss_log_pdf_xy(rho, s, x, y)).sum()
}

fn t_ll(xy: &[(f64, f64)], rho: f64, nu: f64) -> f64 {
    let s = (1.0 - rho * rho).sqrt();
    let lc = t_lconst(rho, nu);
    xy.iter().map(|&(x, y)| t_log_pdf_xy(rho, nu, s, lc, x, y)).sum()
}

/// Profile likelihood: for each `nu` the correlation is maximized exactly,
/// then `nu` is searched on its admissible range.
fn fit_t(data: &[[f64; 2]]) -> Option<(Vec<f64>, f64, bool)> {
    let mut inner_ok = true;
    let mut profile = |nu: f64| -> (f64, f64) {
        let xy: Vec<(f64, f64)> = data
            .iter()
            .map(|p| (t_quantile(clamp(p[0]), nu), t_quantile(clamp(p[1]), nu)))
            .collect();
        let o = golden_max(|r| t_ll(&xy, r, nu), -RHO_MAX, RHO_MAX);
        inner_ok &= o.converged;
        (o.x[0], o.value)
    };
    let (lo, hi) = NU_RANGE;
    // nu is only needed to a few digits; each step costs 2n t quantiles
    let outer = golden_max_tol(|nu| profile(nu).1, lo + 1e-6, hi, NU_TOL);
    // the upper end is admissible; check it explicitly
    let mut nu = outer.x[0];
    let (mut rho, mut value) = profile(nu);
    let (r_hi, v_hi) = profile(hi);
    if v_hi > value {
        (nu, rho, value) = (hi, r_hi, v_hi);
    }
    Some((vec![rho, nu], value, outer.converged && inner_ok))
}

/// Map from an unconstrained coordinate to each parameter.
#[derive(Clone, Copy)]
struct Transform([Map; 2]);

#[derive(Clone, Copy)]
enum Map {
    Identity,
    /// `lower + exp(x)`
    Exp(f64),
    /// `1 / (1 + exp(-x))`
    Logistic,
}

impl Transform {
    fn of(f: Family) -> Self {
        use Map::*;
        Transform(match f {
            Family::Clayton => [Exp(0.0), Identity],
            Family::Gumbel | Family::Joe => [Exp(1.0), Identity],
            Family::Bb1 => [Exp(0.0), Exp(1.0)],
            Family::Bb6 => [Exp(1.0), Exp(1.0)],
            Family::Bb8 | Family::Tawn1 | Family::Tawn2 => [Exp(1.0), Logistic],
            _ => [Identity, Identity],
        })
    }

    fn to(&self, x: f64, i: usize) -> f64 {
        match self.0[i] {
            Map::Identity => x,
            Map::Exp(lo) => lo + x.exp(),
            Map::Logistic => 1.0 / (1.0 + (-x).exp()),
        }
    }

    fn from(&self, p: f64, i: usize) -> f64 {
        match self.0[i] {
            Map::Identity => p,
            Map::Exp(lo) => (p - lo).max(1e-8).ln(),
            Map::Logistic => {
                let p = p.clamp(1e-8, 1.0 - 1e-8);
                (p / (1.0 - p)).ln()
            }
        }
    }

    /// Search interval (in transformed coordinates) for a one-parameter family.
    fn bracket(&self, f: Family, rotation: Rotation, tau: f64) -> (f64, f64) {
        const LOG_MIN: f64 = -9.2; // exp(-9.2) ~ 1e-4
        match f {
            Family::Clayton => (LOG_MIN, 60f64.ln()),
            Family::Gumbel | Family::Joe => (LOG_MIN, 40f64.ln()),
            Family::Frank => {
                let t = oriented_tau(rotation, tau);
                if t > 0.0 {
                    (1e-4, 60.0)
                } else if t < 0.0 {
                    (-60.0, -1e-4)
                } else {
                    (-60.0, 60.0)
                }
            }
            Family::Amh => (0.0, 1.0 - 1e-6),
            _ => (-RHO_MAX, RHO_MAX),
        }
    }
}

/// Index of the variable with the largest total absolute Kendall's tau to
/// the other two (0-based; ties go to the smaller index).
pub fn select_structure(data: &[[f64; 3]]) -> usize {
    let col = |j: usize| -> Vec<f64> { data.iter().map(|r| r[j]).collect() };
    let c = [col(0), col(1), col(2)];
    let mut w = [[0.0; 3]; 3];
    for (a, b) in [(0, 1), (0, 2), (1, 2)] {
        let t = kendall_tau(&c[a], &c[b]).abs();
        w[a][b] = t;
        w[b][a] = t;
    }
    best_center(w)
}

/// The column order that puts conditioning variable `j` in the middle.
pub fn order_for(j: usize) -> [usize; 3] {
    match j {
        0 => [1, 0, 2],
        1 => [0, 1, 2],
        _ => [0, 2, 1],
    }
}

/// A fitted simplified vine. `order[k]` is the data column used as model
/// variable `k + 1`.
#[derive(Debug, Clone, Serialize)]
pub struct FittedVine {
    pub order: [usize; 3],
    pub spec: VineSpec3D,
    pub c12: FitResult,
    pub c23: FitResult,
    pub c13_2: FitResult,
}

/// How the conditioning variable is chosen when fitting a vine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructureCriterion {
    /// Largest total absolute Kendall's tau ([`select_structure`]).
    Tau,
    /// Largest total AIC improvement over independence of the best fitted
    /// pair-copulas. Unlike tau, it registers tail dependence at zero tau.
    #[default]
    Aic,
}

#[derive(Debug, Clone)]
pub struct FitOptions {
    pub candidates: Vec<(Family, Rotation)>,
    pub structure: StructureCriterion,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            candidates: all_candidates(),
            structure: StructureCriterion::default(),
        }
    }
}

pub(crate) struct Unconditional {
    pub order: [usize; 3],
    pub rows: Vec<[f64; 3]>,
    pub c12: FitResult,
    pub c23: FitResult,
}

fn column_pair(data: &[[f64; 3]], a: usize, b: usize) -> Vec<[f64; 2]> {
    data.iter().map(|r| [r[a], r[b]]).collect()
}

/// Index maximizing `w[j][k] + w[j][l]`; ties go to the smaller index.
fn best_center(w: [[f64; 3]; 3]) -> usize {
    let sums = [w[0][1] + w[0][2], w[1][0] + w[1][2], w[2][0] + w[2][1]];
    let mut best = 0;
    for j in 1..3 {
        if sums[j] > sums[best] {
            best = j;
        }
    }
    best
}

pub(crate) fn fit_unconditional(data: &[[f64; 3]], opts: &FitOptions) -> Result<Unconditional> {
    if data.len() < MIN_VINE_N {
        return Err(Error::InsufficientData {
            needed: MIN_VINE_N,
            got: data.len(),
        });
    }
    let mut cache: Vec<((usize, usize), FitResult)> = Vec::new();
    let j = match opts.structure {
        StructureCriterion::Tau => select_structure(data),
        StructureCriterion::Aic => {
            let mut w = [[0.0; 3]; 3];
            for (a, b) in [(0, 1), (0, 2), (1, 2)] {
                let fit = fit_bicop(&column_pair(data, a, b), &opts.candidates)?;
                let gain = (-fit.aic).max(0.0);
                w[a][b] = gain;
                w[b][a] = gain;
                cache.push(((a, b), fit));
            }
            best_center(w)
        }
    };
    let order = order_for(j);
    let mut fit_pair = |a: usize, b: usize| -> Result<FitResult> {
        match cache.iter().position(|(k, _)| *k == (a, b)) {
            Some(i) => Ok(cache.swap_remove(i).1),
            None => fit_bicop(&column_pair(data, a, b), &opts.candidates),
        }
    };
    let c12 = fit_pair(order[0], order[1])?;
    let c23 = fit_pair(order[1], order[2])?;
    let rows: Vec<[f64; 3]> = data.iter().map(|r| order.map(|j| r[j])).collect();
    Ok(Unconditional { order, rows, c12, c23 })
}

/// Conditional pseudo-observations under the given unconditional pairs.
pub(crate) fn conditional_obs(c12: &BivariateCopula, c23: &BivariateCopula, rows: &[[f64; 3]]) -> Vec<[f64; 2]> {
    rows.iter()
        .map(|r| [clamp(c12.h2_at(r[0], r[1])), clamp(c23.h1_at(r[1], r[2]))])
        .collect()
}

/// Structure selection, unconditional fits, then a constant conditional fit.
pub fn fit_simplified_vine(data: &[[f64; 3]], opts: &FitOptions) -> Result<FittedVine> {
    let u = fit_unconditional(data, opts)?;
    let pseudo = conditional_obs(&u.c12.copula, &u.c23.copula, &u.rows);
    let c13_2 = fit_bicop(&pseudo, &opts.candidates)?;
    let spec = VineSpec3D::simplified(u.c12.copula.clone(), u.c23.copula.clone(), &c13_2.copula);
    Ok(FittedVine {
        order: u.order,
        spec,
        c12: u.c12,
        c23: u.c23,
        c13_2,
    })
}

/// Simplified approximation of `spec`: keeps the unconditional pairs and
/// replaces the conditional pair by the best constant fit to the conditional
/// pseudo-observations of a sample of size `n`.
pub fn simplified_approx(
    spec: &VineSpec3D,
    n: usize,
    seed: u64,
    candidates: &[(Family, Rotation)],
) -> Result<(VineSpec3D, FitResult)> {
    let sample = spec.simulate(n, seed)?;
    let pseudo: Vec<[f64; 2]> = spec.pseudo_obs(&sample).into_iter().map(|p| p.map(clamp)).collect();
    let fit = fit_bicop(&pseudo, candidates)?;
    let approx = VineSpec3D::simplified(spec.c12.clone(), spec.c23.clone(), &fit.copula).with_margins(spec.margins);
    Ok((approx, fit))
}
