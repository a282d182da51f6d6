//! Gridded density fields, iso-surfaces and contour lines.
//!
//! Fields are sampled on regular boxes. Iso-surfaces come from marching
//! cubes ([`marching_cubes`]), planar contours of the bivariate margins from
//! marching squares ([`margin_contours`]).

mod contour;
mod mcubes;
mod mesh;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use contour::{margin_contours, margin_field, marching_squares, ContourSet2D, MarginContours, Pair, ScalarField2D};
pub use mcubes::marching_cubes;
pub use mesh::{read_obj, write_obj, Bundle, IsoMesh, LevelMesh};

use crate::bicop::EPS;
use crate::error::{Error, Result};
use crate::special::{norm_cdf, norm_pdf};
use crate::vine3d::{Margins, VineSpec3D};

/// Contour levels used unless a caller supplies its own.
pub const DEFAULT_LEVELS: [f64; 4] = [0.015, 0.035, 0.075, 0.11];

/// A regular grid over an axis-aligned box, `n[a]` nodes along axis `a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
    pub n: [usize; 3],
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::cube(-3.0, 3.0, 96)
    }
}

impl GridSpec {
    /// The same bounds and resolution on every axis.
    pub fn cube(lo: f64, hi: f64, n: usize) -> Self {
        GridSpec {
            lo: [lo; 3],
            hi: [hi; 3],
            n: [n; 3],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for a in 0..3 {
            if self.n[a] < 2 {
                return Err(Error::InvalidGrid(format!("axis {} needs at least 2 nodes", a + 1)));
            }
            if !(self.lo[a].is_finite() && self.hi[a].is_finite() && self.lo[a] < self.hi[a]) {
                return Err(Error::InvalidGrid(format!(
                    "axis {} bounds [{}, {}] are not an interval",
                    a + 1,
                    self.lo[a],
                    self.hi[a]
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.n.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self) -> [f64; 3] {
        [0, 1, 2].map(|a| (self.hi[a] - self.lo[a]) / (self.n[a] - 1) as f64)
    }

    /// Node coordinates along axis `a`.
    pub fn axis(&self, a: usize) -> Vec<f64> {
        let h = self.spacing()[a];
        (0..self.n[a]).map(|i| self.lo[a] + i as f64 * h).collect()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.n[0] * (j + self.n[1] * k)
    }

    #[inline]
    pub fn point(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        let h = self.spacing();
        [
            self.lo[0] + i as f64 * h[0],
            self.lo[1] + j as f64 * h[1],
            self.lo[2] + k as f64 * h[2],
        ]
    }
}

/// Samples of a scalar function at the nodes of a [`GridSpec`], first axis
/// fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField3D {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

impl ScalarField3D {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(ScalarField3D { grid, values })
    }

    /// Evaluates `f` at every node, in parallel over `z3` slabs.
    pub fn from_fn<F>(grid: GridSpec, f: F) -> Result<Self>
    where
        F: Fn([f64; 3]) -> f64 + Sync,
    {
        grid.validate()?;
        let [n1, n2, _] = grid.n;
        let mut values = vec![0.0; grid.len()];
        values.par_chunks_mut(n1 * n2).enumerate().for_each(|(k, slab)| {
            for j in 0..n2 {
                for i in 0..n1 {
                    slab[i + n1 * j] = f(grid.point(i, j, k));
                }
            }
        });
        Ok(ScalarField3D { grid, values })
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.grid.index(i, j, k)]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Node of the largest value.
    pub fn argmax(&self) -> [usize; 3] {
        let (m, _) = self
            .values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
        let [n1, n2, _] = self.grid.n;
        [m % n1, (m / n1) % n2, m / (n1 * n2)]
    }

    /// Trilinear interpolation; `None` outside the box.
    pub fn interpolate(&self, p: [f64; 3]) -> Option<f64> {
        let h = self.grid.spacing();
        let mut base = [0usize; 3];
        let mut t = [0.0; 3];
        for a in 0..3 {
            let s = (p[a] - self.grid.lo[a]) / h[a];
            let last = (self.grid.n[a] - 1) as f64;
            if !(s >= 0.0 && s <= last) {
                return None;
            }
            let c = s.floor().min(last - 1.0);
            base[a] = c as usize;
            t[a] = s - c;
        }
        let mut acc = 0.0;
        for corner in 0..8 {
            let mut w = 1.0;
            let mut idx = base;
            for a in 0..3 {
                if corner >> a & 1 == 1 {
                    w *= t[a];
                    idx[a] += 1;
                } else {
                    w *= 1.0 - t[a];
                }
            }
            if w != 0.0 {
                acc += w * self.at(idx[0], idx[1], idx[2]);
            }
        }
        Some(acc)
    }

    /// Central-difference gradient at a node (one-sided on the boundary).
    pub fn gradient(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        let h = self.grid.spacing();
        let idx = [i, j, k];
        [0, 1, 2].map(|a| {
            let (mut lo, mut hi) = (idx, idx);
            if idx[a] > 0 {
                lo[a] -= 1;
            }
            if idx[a] + 1 < self.grid.n[a] {
                hi[a] += 1;
            }
            let steps = (hi[a] - lo[a]) as f64;
            (self.at(hi[0], hi[1], hi[2]) - self.at(lo[0], lo[1], lo[2])) / (steps * h[a])
        })
    }
}

/// Per-axis copula arguments and marginal weights of the grid nodes.
fn axis_transforms(grid: &GridSpec, margins: Margins) -> Result<[(Vec<f64>, Vec<f64>); 3]> {
    let mut out: [(Vec<f64>, Vec<f64>); 3] = Default::default();
    for (a, slot) in out.iter_mut().enumerate() {
        let xs = grid.axis(a);
        *slot = match margins {
            Margins::StdNormal => (xs.iter().map(|&z| norm_cdf(z)).collect(), xs.iter().map(|&z| norm_pdf(z)).collect()),
            Margins::Uniform => {
                if grid.lo[a] < 0.0 || grid.hi[a] > 1.0 {
                    return Err(Error::InvalidGrid("uniform margins need a grid inside [0, 1]^3".into()));
                }
                (xs, vec![1.0; grid.n[a]])
            }
        };
    }
    Ok(out)
}

/// The model density at every grid node, on the scale of `spec.margins`.
///
/// The conditional copula is built once per `u2` node, and the unconditional
/// factors once per node pair.
pub fn sample_density(spec: &VineSpec3D, grid: &GridSpec) -> Result<ScalarField3D> {
    grid.validate()?;
    let [(u1, w1), (u2, w2), (u3, w3)] = axis_transforms(grid, spec.margins)?;
    let [n1, n2, n3] = grid.n;
    let c13 = u2
        .iter()
        .map(|&v| spec.conditional_at(v.clamp(EPS, 1.0 - EPS)))
        .collect::<Result<Vec<_>>>()?;
    // (h, pdf) of c12 on (i, j) and of c23 on (j, k)
    let f12: Vec<(f64, f64)> = (0..n1 * n2)
        .map(|m| {
            let (i, j) = (m % n1, m / n1);
            (spec.c12.h2_at(u1[i], u2[j]), spec.c12.pdf_at(u1[i], u2[j]))
        })
        .collect();
    let f23: Vec<(f64, f64)> = (0..n2 * n3)
        .map(|m| {
            let (j, k) = (m % n2, m / n2);
            (spec.c23.h1_at(u2[j], u3[k]), spec.c23.pdf_at(u2[j], u3[k]))
        })
        .collect();
    let mut values = vec![0.0; grid.len()];
    values.par_chunks_mut(n1 * n2).enumerate().for_each(|(k, slab)| {
        for j in 0..n2 {
            let (b, p23) = f23[j + n2 * k];
            let w = w2[j] * w3[k] * p23;
            for i in 0..n1 {
                let (a, p12) = f12[i + n1 * j];
                slab[i + n1 * j] = c13[j].pdf_at(a, b) * p12 * w * w1[i];
            }
        }
    });
    Ok(ScalarField3D { grid: *grid, values })
}

/// Iso-surfaces of `field` at each level, bundled with the grid.
pub fn bundle(field: &ScalarField3D, levels: &[f64], spec: Option<&VineSpec3D>) -> Result<Bundle> {
    check_levels(levels)?;
    let levels = levels
        .iter()
        .map(|&level| LevelMesh {
            level,
            mesh: marching_cubes(field, level),
        })
        .collect();
    Ok(Bundle {
        grid: field.grid,
        field_max: field.max(),
        spec: spec.cloned(),
        levels,
    })
}

/// Levels must be positive, finite and strictly ascending.
pub fn check_levels(levels: &[f64]) -> Result<()> {
    if levels.is_empty() {
        return Err(Error::InvalidGrid("at least one level is required".into()));
    }
    if levels.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
        return Err(Error::InvalidGrid("levels must be positive".into()));
    }
    if levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidGrid("levels must be strictly ascending".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn independence_center() {
        let f = sample_density(&VineSpec3D::independence(), &GridSpec::cube(-3.0, 3.0, 5)).unwrap();
        let c = f.at(2, 2, 2);
        assert!((c - (2.0 * std::f64::consts::PI).powf(-1.5)).abs() < 1e-15);
        assert_eq!(f.argmax(), [2, 2, 2]);
    }

    #[test]
    fn layout_first_axis_fastest() {
        let g = GridSpec {
            lo: [0.0; 3],
            hi: [1.0, 2.0, 3.0],
            n: [2, 3, 4],
        };
        let f = ScalarField3D::from_fn(g, |p| p[0] + 10.0 * p[1] + 100.0 * p[2]).unwrap();
        assert_eq!(f.values[1], 1.0);
        assert_eq!(f.values[2], 10.0);
        assert_eq!(f.values[6], 100.0);
        // trilinear reproduces affine functions
        let v = f.interpolate([0.3, 1.7, 2.2]).unwrap();
        assert!((v - (0.3 + 17.0 + 220.0)).abs() < 1e-12);
        assert!(f.interpolate([1.1, 0.0, 0.0]).is_none());
        assert_eq!(f.gradient(0, 1, 3), [1.0, 10.0, 100.0]);
    }

    #[test]
    fn rejects_bad_grids_and_levels() {
        assert!(GridSpec::cube(0.0, 1.0, 1).validate().is_err());
        assert!(GridSpec::cube(1.0, 0.0, 4).validate().is_err());
        assert!(check_levels(&[0.1, 0.05]).is_err());
        assert!(check_levels(&[0.0]).is_err());
        assert!(check_levels(&DEFAULT_LEVELS).is_ok());
    }
}
