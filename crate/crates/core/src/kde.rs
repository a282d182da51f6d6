//! Rank transforms, normal scores and a trivariate Gaussian kernel density
//! estimate.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{GridSpec, ScalarField3D};
use crate::special::{norm_pdf, norm_quantile};
use crate::stats::std_dev;

/// Kernels are cut off this many bandwidths from their center when a grid
/// is evaluated. Per axis the dropped mass is `2Φ(-5) ≈ 5.7e-7`, so each
/// kernel loses less than `1.8e-6` of its mass.
pub const TRUNCATION: f64 = 5.0;

/// `u_ji = #{k : x_jk <= x_ji} / (N + 1)` per column; tied values share the
/// largest count.
pub fn rank_transform(x: &[[f64; 3]]) -> Vec<[f64; 3]> {
    let n = x.len();
    let mut out = vec![[0.0; 3]; n];
    for j in 0..3 {
        let mut col: Vec<f64> = x.iter().map(|r| r[j]).collect();
        col.sort_by(f64::total_cmp);
        for (o, r) in out.iter_mut().zip(x) {
            let count = col.partition_point(|&v| v <= r[j]);
            o[j] = count as f64 / (n + 1) as f64;
        }
    }
    out
}

/// Componentwise standard normal quantiles of values in `(0, 1)`.
pub fn normal_scores(u: &[[f64; 3]]) -> Result<Vec<[f64; 3]>> {
    u.iter()
        .map(|r| {
            for &v in r {
                if !(v > 0.0 && v < 1.0) {
                    return Err(Error::Domain { what: "u", value: v });
                }
            }
            Ok(r.map(norm_quantile))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bandwidth3D {
    pub h: [f64; 3],
}

impl Bandwidth3D {
    pub fn new(h: [f64; 3]) -> Result<Self> {
        if h.iter().all(|&x| x.is_finite() && x > 0.0) {
            Ok(Bandwidth3D { h })
        } else {
            Err(Error::InvalidSpec(format!("bandwidths must be positive, got {h:?}")))
        }
    }

    /// Normal-reference rule `σ_j (4 / ((d + 2) N))^(1 / (d + 4))`, `d = 3`.
    pub fn normal_reference(z: &[[f64; 3]]) -> Result<Self> {
        if z.len() < 2 {
            return Err(Error::InsufficientData { needed: 2, got: z.len() });
        }
        let factor = (4.0 / (5.0 * z.len() as f64)).powf(1.0 / 7.0);
        let mut h = [0.0; 3];
        for (j, hj) in h.iter_mut().enumerate() {
            let col: Vec<f64> = z.iter().map(|r| r[j]).collect();
            let s = std_dev(&col);
            if !(s > 0.0) {
                return Err(Error::DegenerateData(format!("column {} has zero variance", j + 1)));
            }
            *hj = s * factor;
        }
        Ok(Bandwidth3D { h })
    }
}

/// Product-Gaussian kernel density estimate.
#[derive(Debug, Clone)]
pub struct Kde {
    points: Vec<[f64; 3]>,
    bandwidth: Bandwidth3D,
}

/// Fits a kernel density estimate; without a bandwidth the normal-reference
/// rule is used.
pub fn kde_fit(z: &[[f64; 3]], bw: Option<Bandwidth3D>) -> Result<Kde> {
    if z.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateData("non-finite observation".into()));
    }
    let bandwidth = match bw {
        Some(b) => {
            if z.is_empty() {
                return Err(Error::InsufficientData { needed: 1, got: 0 });
            }
            Bandwidth3D::new(b.h)?
        }
        None => Bandwidth3D::normal_reference(z)?,
    };
    Ok(Kde {
        points: z.to_vec(),
        bandwidth,
    })
}

impl Kde {
    pub fn bandwidth(&self) -> Bandwidth3D {
        self.bandwidth
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Exact (untruncated) estimate at `x`.
    pub fn eval(&self, x: [f64; 3]) -> f64 {
        let h = self.bandwidth.h;
        let norm = 1.0 / (self.points.len() as f64 * h[0] * h[1] * h[2]);
        self.points
            .iter()
            .map(|p| (0..3).map(|a| norm_pdf((x[a] - p[a]) / h[a])).product::<f64>())
            .sum::<f64>()
            * norm
    }

    /// The estimate at every grid node, kernels truncated at
    /// [`TRUNCATION`] bandwidths.
    pub fn sample_grid(&self, grid: &GridSpec) -> Result<ScalarField3D> {
        grid.validate()?;
        let h = self.bandwidth.h;
        let sp = grid.spacing();
        let [n1, n2, _] = grid.n;
        let norm = 1.0 / (self.points.len() as f64 * h[0] * h[1] * h[2]);
        // node window of each point along an axis, with kernel weights
        let window = |a: usize, c: f64| -> (usize, Vec<f64>) {
            let lo = ((c - TRUNCATION * h[a] - grid.lo[a]) / sp[a]).ceil().max(0.0);
            let hi = ((c + TRUNCATION * h[a] - grid.lo[a]) / sp[a]).floor().min((grid.n[a] - 1) as f64);
            if hi < lo {
                return (0, Vec::new());
            }
            let (lo, hi) = (lo as usize, hi as usize);
            let w = (lo..=hi)
                .map(|i| norm_pdf((grid.lo[a] + i as f64 * sp[a] - c) / h[a]))
                .collect();
            (lo, w)
        };
        let mut by_z3: Vec<&[f64; 3]> = self.points.iter().collect();
        by_z3.sort_by(|a, b| a[2].total_cmp(&b[2]));
        let mut values = vec![0.0; grid.len()];
        values.par_chunks_mut(n1 * n2).enumerate().for_each(|(k, slab)| {
            let z3 = grid.lo[2] + k as f64 * sp[2];
            let start = by_z3.partition_point(|p| p[2] < z3 - TRUNCATION * h[2]);
            for p in by_z3[start..].iter().take_while(|p| p[2] <= z3 + TRUNCATION * h[2]) {
                let w3 = norm_pdf((z3 - p[2]) / h[2]);
                let (i0, wi) = window(0, p[0]);
                let (j0, wj) = window(1, p[1]);
                for (dj, &w2) in wj.iter().enumerate() {
                    let row = &mut slab[n1 * (j0 + dj)..];
                    let w23 = w2 * w3;
                    for (di, &w1) in wi.iter().enumerate() {
                        row[i0 + di] += w1 * w23;
                    }
                }
            }
            for v in slab.iter_mut() {
                *v *= norm;
            }
        });
        ScalarField3D::new(*grid, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks() {
        assert_eq!(rank_transform(&[[7.0, -1.0, 0.0]]), vec![[0.5, 0.5, 0.5]]);
        let r = rank_transform(&[[3.0, 1.0, 0.0], [1.0, 1.0, 0.0], [2.0, 2.0, 0.0]]);
        assert_eq!(r.iter().map(|x| x[0]).collect::<Vec<_>>(), [0.75, 0.25, 0.5]);
        assert_eq!(r.iter().map(|x| x[1]).collect::<Vec<_>>(), [0.5, 0.5, 0.75]);
        assert_eq!(r.iter().map(|x| x[2]).collect::<Vec<_>>(), [0.75, 0.75, 0.75]);
    }

    #[test]
    fn scores() {
        let z = normal_scores(&[[0.5, 0.975, 0.025]]).unwrap()[0];
        assert_eq!(z[0], 0.0);
        assert!((z[1] - 1.959_963_985).abs() < 1e-4);
        assert!((z[2] + z[1]).abs() < 1e-12);
        assert!(normal_scores(&[[0.5, 1.0, 0.5]]).is_err());
        assert!(normal_scores(&[[0.0, 0.5, 0.5]]).is_err());
    }

    #[test]
    fn single_kernel_peak() {
        let k = kde_fit(&[[0.0; 3]], Some(Bandwidth3D { h: [1.0; 3] })).unwrap();
        assert!((k.eval([0.0; 3]) - (2.0 * std::f64::consts::PI).powf(-1.5)).abs() < 1e-15);
        let g = k.sample_grid(&GridSpec::cube(-2.0, 2.0, 5)).unwrap();
        assert!((g.at(2, 2, 2) - k.eval([0.0; 3])).abs() < 1e-15);
        assert!((g.at(0, 3, 4) - k.eval([-2.0, 1.0, 2.0])).abs() < 1e-15);
    }

    #[test]
    fn degenerate_columns() {
        let z = [[0.0, 1.0, 2.0], [1.0, 1.0, 3.0]];
        assert!(matches!(kde_fit(&z, None), Err(Error::DegenerateData(_))));
        assert!(kde_fit(&z, Some(Bandwidth3D { h: [0.5; 3] })).is_ok());
        assert!(kde_fit(&z[..1], None).is_err());
        assert!(Bandwidth3D::new([1.0, 0.0, 1.0]).is_err());
    }
}
