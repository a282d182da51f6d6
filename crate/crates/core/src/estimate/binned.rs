//! Non-simplified conditional fit by binning on the conditioning variable.
//!
//! Conditional pseudo-observations are split into equal-count bins of `u2`.
//! One family (shared by all bins, chosen by pooled AIC) is fitted in every
//! bin and its parameters are joined by piecewise-linear functions of `u2`
//! on a scale that keeps them admissible. Percentile bands for the tau curve
//! come from a row bootstrap that re-estimates the unconditional pairs within
//! their selected families.

use rayon::prelude::*;
use serde::Serialize;

use super::{conditional_obs, fit_family, fit_unconditional, rank, sign_filter, FitOptions, FitResult};
use crate::bicop::{BivariateCopula, Family, Rotation};
use crate::error::{Error, Result};
use crate::rng;
use crate::stats::kendall_tau;
use crate::vine3d::{ConditionalPair, Link, Margins, ParamFunction, VineSpec3D};

#[derive(Debug, Clone)]
pub struct BinnedOptions {
    pub bins: usize,
    pub bootstrap: usize,
    pub seed: u64,
    /// Smallest admissible bin.
    pub min_per_bin: usize,
    pub fit: FitOptions,
}

impl Default for BinnedOptions {
    fn default() -> Self {
        BinnedOptions {
            bins: 8,
            bootstrap: 200,
            seed: 0,
            min_per_bin: 50,
            fit: FitOptions::default(),
        }
    }
}

/// Estimated conditional tau at the bin centers with 95% percentile bands.
#[derive(Debug, Clone, Serialize)]
pub struct TauCurveEstimate {
    pub grid: Vec<f64>,
    pub tau_hat: Vec<f64>,
    pub ci_lo: Vec<f64>,
    pub ci_hi: Vec<f64>,
    pub family: Family,
    pub rotation: Rotation,
}

#[derive(Debug, Clone, Serialize)]
pub struct BinnedFit {
    pub order: [usize; 3],
    pub spec: VineSpec3D,
    pub c12: FitResult,
    pub c23: FitResult,
    pub bins: Vec<FitResult>,
    pub curve: TauCurveEstimate,
}

/// Equal-count partition of `pseudo` by `u2`: `(mean u2, pairs)` per bin.
fn partition(u2: &[f64], pseudo: &[[f64; 2]], bins: usize) -> Vec<(f64, Vec<[f64; 2]>)> {
    let n = u2.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| u2[a].total_cmp(&u2[b]));
    (0..bins)
        .map(|k| {
            let part = &idx[k * n / bins..(k + 1) * n / bins];
            let center = part.iter().map(|&i| u2[i]).sum::<f64>() / part.len() as f64;
            (center, part.iter().map(|&i| pseudo[i]).collect())
        })
        .collect()
}

fn tau_of(d: &[[f64; 2]]) -> f64 {
    let (x, y): (Vec<f64>, Vec<f64>) = d.iter().map(|p| (p[0], p[1])).unzip();
    kendall_tau(&x, &y)
}

fn fit_bins(parts: &[(f64, Vec<[f64; 2]>)], family: Family, rotation: Rotation) -> Option<Vec<FitResult>> {
    parts
        .iter()
        .map(|(_, d)| fit_family(d, family, rotation, tau_of(d)))
        .collect()
}

/// Interpolation scale for each parameter of `family`.
fn link_for(family: Family, i: usize) -> Link {
    let info = family.param_info()[i];
    if info.lower == -1.0 && info.upper == 1.0 {
        Link::FisherZ
    } else if info.upper.is_infinite() && info.lower.is_finite() {
        Link::Log { lower: info.lower }
    } else {
        Link::Identity
    }
}

fn conditional_pair(family: Family, rotation: Rotation, knots: &[f64], fits: &[FitResult]) -> Result<ConditionalPair> {
    let param_fns = (0..family.n_params())
        .map(|i| {
            let link = link_for(family, i);
            let values = fits.iter().map(|f| link.forward(f.copula.params()[i])).collect();
            ParamFunction::piecewise(knots.to_vec(), values, link)
        })
        .collect::<Result<Vec<_>>>()?;
    let cp = ConditionalPair {
        family,
        base_rotation: rotation,
        param_fns,
        sign_rotation: None,
    };
    Ok(cp)
}

/// Percentile (linear interpolation between order statistics).
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let (i, w) = (h.floor() as usize, h - h.floor());
    if i + 1 < sorted.len() {
        sorted[i] * (1.0 - w) + sorted[i + 1] * w
    } else {
        sorted[i]
    }
}

pub fn fit_nonsimplified_binned(data: &[[f64; 3]], opts: &BinnedOptions) -> Result<BinnedFit> {
    let bins = opts.bins.max(1);
    let per_bin = data.len() / bins;
    if per_bin < opts.min_per_bin {
        return Err(Error::BinTooSmall {
            per_bin,
            needed: opts.min_per_bin,
        });
    }
    let u = fit_unconditional(data, &opts.fit)?;
    let (c12, c23) = (&u.c12.copula, &u.c23.copula);
    let pseudo = conditional_obs(c12, c23, &u.rows);
    let u2: Vec<f64> = u.rows.iter().map(|r| r[1]).collect();
    let parts = partition(&u2, &pseudo, bins);

    let candidates = sign_filter(&opts.fit.candidates, tau_of(&pseudo));
    let mut pooled: Vec<(FitResult, Vec<FitResult>)> = candidates
        .par_iter()
        .filter_map(|&(f, r)| {
            let fits = fit_bins(&parts, f, r)?;
            let ll: f64 = fits.iter().map(|x| x.loglik).sum();
            // pooled record: first bin's copula identifies family/rotation
            let k = (f.n_params() * bins) as f64;
            let summary = FitResult {
                copula: fits[0].copula.clone(),
                loglik: ll,
                aic: -2.0 * ll + 2.0 * k,
                n: data.len(),
            };
            Some((summary, fits))
        })
        .collect();
    if pooled.is_empty() {
        return Err(Error::AllFitsFailed);
    }
    pooled.sort_by(|a, b| rank(&a.0, &b.0));
    let (best, fits) = pooled.swap_remove(0);
    let (family, rotation) = (best.copula.family(), best.copula.rotation());

    let knots: Vec<f64> = parts.iter().map(|p| p.0).collect();
    let c13_2 = conditional_pair(family, rotation, &knots, &fits)?;
    let spec = VineSpec3D::new(c12.clone(), c23.clone(), c13_2, Margins::StdNormal)?;
    let tau_hat: Vec<f64> = fits.iter().map(|f| f.copula.tau()).collect();

    let draws: Vec<Option<Vec<f64>>> = (0..opts.bootstrap)
        .into_par_iter()
        .map(|b| {
            let mut g = rng::stream(opts.seed, b as u64);
            let n = u.rows.len();
            let rows: Vec<[f64; 3]> = (0..n)
                .map(|_| u.rows[((rng::open01(&mut g) * n as f64) as usize).min(n - 1)])
                .collect();
            // the unconditional pairs are re-estimated within their families
            let refit = |a: usize, b: usize, c: &BivariateCopula| {
                let d: Vec<[f64; 2]> = rows.iter().map(|r| [r[a], r[b]]).collect();
                fit_family(&d, c.family(), c.rotation(), tau_of(&d)).map(|f| f.copula)
            };
            let (b12, b23) = (refit(0, 1, c12)?, refit(1, 2, c23)?);
            let ps = conditional_obs(&b12, &b23, &rows);
            let v2: Vec<f64> = rows.iter().map(|r| r[1]).collect();
            let fits = fit_bins(&partition(&v2, &ps, bins), family, rotation)?;
            Some(fits.iter().map(|f| f.copula.tau()).collect())
        })
        .collect();
    let draws: Vec<Vec<f64>> = draws.into_iter().flatten().collect();
    let (mut ci_lo, mut ci_hi) = (tau_hat.clone(), tau_hat.clone());
    if !draws.is_empty() {
        for k in 0..bins {
            let mut col: Vec<f64> = draws.iter().map(|d| d[k]).collect();
            col.sort_by(f64::total_cmp);
            // percentile bands need not contain the point estimate; widen
            ci_lo[k] = quantile(&col, 0.025).min(tau_hat[k]);
            ci_hi[k] = quantile(&col, 0.975).max(tau_hat[k]);
        }
    }
    Ok(BinnedFit {
        order: u.order,
        spec,
        c12: u.c12,
        c23: u.c23,
        bins: fits,
        curve: TauCurveEstimate {
            grid: knots,
            tau_hat,
            ci_lo,
            ci_hi,
            family,
            rotation,
        },
    })
}
