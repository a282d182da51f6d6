//! Bivariate margins on a plane grid and their contour lines.

use std::collections::{BTreeMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::check_levels;
use crate::error::{Error, Result};
use crate::special::{norm_cdf, norm_pdf};
use crate::vine3d::{Margins, VineSpec3D};

/// Which two variables a margin keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pair {
    #[serde(rename = "12")]
    P12,
    #[serde(rename = "23")]
    P23,
    #[serde(rename = "13")]
    P13,
}

impl Pair {
    pub const ALL: [Pair; 3] = [Pair::P12, Pair::P23, Pair::P13];

    pub fn label(self) -> &'static str {
        match self {
            Pair::P12 => "12",
            Pair::P23 => "23",
            Pair::P13 => "13",
        }
    }
}

impl std::str::FromStr for Pair {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "12" => Ok(Pair::P12),
            "23" => Ok(Pair::P23),
            "13" => Ok(Pair::P13),
            _ => Err(Error::InvalidSpec(format!("pair must be 12, 23 or 13, not '{s}'"))),
        }
    }
}

/// Samples on a regular plane grid, first axis fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField2D {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    pub n: [usize; 2],
    pub values: Vec<f64>,
}

impl ScalarField2D {
    /// Evaluates `f` on an `n`-by-`n` grid over `[lo, hi]^2`.
    pub fn from_fn<F>(lo: f64, hi: f64, n: usize, f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> f64 + Sync,
    {
        if n < 2 || !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidGrid(format!("plane grid [{lo}, {hi}] with {n} nodes")));
        }
        let h = (hi - lo) / (n - 1) as f64;
        let values = (0..n * n)
            .into_par_iter()
            .map(|m| f(lo + (m % n) as f64 * h, lo + (m / n) as f64 * h))
            .collect();
        Ok(ScalarField2D {
            lo: [lo; 2],
            hi: [hi; 2],
            n: [n; 2],
            values,
        })
    }

    pub fn spacing(&self) -> [f64; 2] {
        [0, 1].map(|a| (self.hi[a] - self.lo[a]) / (self.n[a] - 1) as f64)
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i + self.n[0] * j]
    }

    #[inline]
    pub fn point(&self, i: usize, j: usize) -> [f64; 2] {
        let h = self.spacing();
        [self.lo[0] + i as f64 * h[0], self.lo[1] + j as f64 * h[1]]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Bilinear interpolation; `None` outside the grid.
    pub fn interpolate(&self, p: [f64; 2]) -> Option<f64> {
        let h = self.spacing();
        let mut base = [0usize; 2];
        let mut t = [0.0; 2];
        for a in 0..2 {
            let s = (p[a] - self.lo[a]) / h[a];
            let last = (self.n[a] - 1) as f64;
            if !(s >= 0.0 && s <= last) {
                return None;
            }
            let c = s.floor().min(last - 1.0);
            base[a] = c as usize;
            t[a] = s - c;
        }
        let [i, j] = base;
        let [x, y] = t;
        Some(
            (1.0 - x) * (1.0 - y) * self.at(i, j)
                + x * (1.0 - y) * self.at(i + 1, j)
                + x * y * self.at(i + 1, j + 1)
                + (1.0 - x) * y * self.at(i, j + 1),
        )
    }
}

/// Contour lines of one level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourSet2D {
    pub level: f64,
    pub polylines: Vec<Vec<[f64; 2]>>,
    /// Whether each polyline closes on itself; closed ones do not repeat
    /// their first point.
    pub closed: Vec<bool>,
}

/// Contour lines of `field` at `level`.
///
/// Saddle cells are resolved by the bilinear saddle value as in
/// [`marching_cubes`](super::marching_cubes).
pub fn marching_squares(field: &ScalarField2D, level: f64) -> ContourSet2D {
    let [n1, n2] = field.n;
    let id = |i: usize, j: usize, axis: usize| ((i + n1 * j) * 2 + axis) as u64;
    let mut links: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
    let mut points: BTreeMap<u64, [f64; 2]> = BTreeMap::new();
    for j in 0..n2 - 1 {
        for i in 0..n1 - 1 {
            let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let v = corners.map(|(a, b)| field.at(a, b));
            let inside = v.map(|x| x > level);
            // cell edges in cyclic order; edge m joins corners m and m+1
            let edges = [id(i, j, 0), id(i + 1, j, 1), id(i, j + 1, 0), id(i, j, 1)];
            let crossing: Vec<usize> = (0..4).filter(|&m| inside[m] != inside[(m + 1) % 4]).collect();
            let mut pairs = Vec::new();
            match crossing.len() {
                2 => pairs.push((crossing[0], crossing[1])),
                4 => {
                    let saddle = (v[0] * v[2] - v[1] * v[3]) / (v[0] + v[2] - v[1] - v[3]);
                    let cut_inside = !(saddle > level);
                    for m in 0..4 {
                        if inside[m] == cut_inside {
                            pairs.push(((m + 3) % 4, m));
                        }
                    }
                }
                _ => {}
            }
            for &m in &crossing {
                points.entry(edges[m]).or_insert_with(|| {
                    let (a, b) = (corners[m], corners[(m + 1) % 4]);
                    let t = (level - v[m]) / (v[(m + 1) % 4] - v[m]);
                    let (pa, pb) = (field.point(a.0, a.1), field.point(b.0, b.1));
                    [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])]
                });
            }
            for (a, b) in pairs {
                links.entry(edges[a]).or_default().push(edges[b]);
                links.entry(edges[b]).or_default().push(edges[a]);
            }
        }
    }

    let mut used: HashSet<u64> = HashSet::new();
    let mut out = ContourSet2D {
        level,
        polylines: Vec::new(),
        closed: Vec::new(),
    };
    let trace = |start: u64, used: &mut HashSet<u64>| -> (Vec<u64>, bool) {
        let mut path = vec![start];
        used.insert(start);
        let mut cur = start;
        loop {
            let next = links[&cur].iter().copied().find(|n| !used.contains(n));
            match next {
                Some(n) => {
                    used.insert(n);
                    path.push(n);
                    cur = n;
                }
                None => {
                    let closed = path.len() > 2 && links[&cur].contains(&start);
                    return (path, closed);
                }
            }
        }
    };
    // open lines start at the grid border, where an edge has one neighbor
    let ends: Vec<u64> = links.iter().filter(|(_, n)| n.len() == 1).map(|(k, _)| *k).collect();
    let starts: Vec<u64> = ends.into_iter().chain(links.keys().copied()).collect();
    for s in starts {
        if used.contains(&s) {
            continue;
        }
        let (path, closed) = trace(s, &mut used);
        let mut line: Vec<[f64; 2]> = Vec::with_capacity(path.len());
        for e in path {
            let p = points[&e];
            if line.last() != Some(&p) {
                line.push(p);
            }
        }
        if closed && line.len() > 1 && line.first() == line.last() {
            line.pop();
        }
        if line.len() >= 2 {
            out.polylines.push(line);
            out.closed.push(closed);
        }
    }
    out
}

/// A bivariate margin density sampled on a plane grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginField {
    pub pair: Pair,
    pub field: ScalarField2D,
    /// Grid points where the `c13` quadrature hit its refinement cap.
    pub unconverged: usize,
}

/// The density of `pair` on the scale of `spec.margins`. Pairs 12 and 23 are
/// closed-form; pair 13 integrates out `u2`.
pub fn margin_field(spec: &VineSpec3D, pair: Pair, lo: f64, hi: f64, n: usize) -> Result<MarginField> {
    let uniform = spec.margins == Margins::Uniform;
    if uniform && (lo < 0.0 || hi > 1.0) {
        return Err(Error::InvalidGrid("uniform margins need a grid inside [0, 1]^2".into()));
    }
    let to_u = |x: f64| if uniform { (x, 1.0) } else { (norm_cdf(x), norm_pdf(x)) };
    let unconverged = std::sync::atomic::AtomicUsize::new(0);
    let failure = std::sync::Mutex::new(None);
    let field = ScalarField2D::from_fn(lo, hi, n, |x, y| {
        let ((u, wu), (v, wv)) = (to_u(x), to_u(y));
        let c = match pair {
            Pair::P12 => spec.c12.pdf_at(u, v),
            Pair::P23 => spec.c23.pdf_at(u, v),
            Pair::P13 => match spec.marginal13_pdf(u, v) {
                Ok(m) => {
                    if !m.converged {
                        unconverged.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                    }
                    m.value
                }
                Err(e) => {
                    failure.lock().unwrap().get_or_insert(e);
                    0.0
                }
            },
        };
        c * wu * wv
    })?;
    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }
    Ok(MarginField {
        pair,
        field,
        unconverged: unconverged.into_inner(),
    })
}

/// A margin field together with its contours at each level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginContours {
    pub pair: Pair,
    pub unconverged: usize,
    pub field_max: f64,
    pub contours: Vec<ContourSet2D>,
}

pub fn margin_contours(spec: &VineSpec3D, pair: Pair, lo: f64, hi: f64, n: usize, levels: &[f64]) -> Result<MarginContours> {
    check_levels(levels)?;
    let m = margin_field(spec, pair, lo, hi, n)?;
    Ok(MarginContours {
        pair,
        unconverged: m.unconverged,
        field_max: m.field.max(),
        contours: levels.iter().map(|&l| marching_squares(&m.field, l)).collect(),
    })
}
