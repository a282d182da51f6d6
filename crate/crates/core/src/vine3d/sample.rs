use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::VineSpec3D;
use crate::error::{Error, Result};
use crate::rng::{self, BLOCK_ROWS};
use crate::special::{norm_cdf, norm_quantile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    /// Copula scale, columns `u1,u2,u3`.
    Uniform,
    /// Normal scores, columns `z1,z2,z3`.
    Normal,
}

impl Scale {
    fn header(self) -> [&'static str; 3] {
        match self {
            Scale::Uniform => ["u1", "u2", "u3"],
            Scale::Normal => ["z1", "z2", "z3"],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Simulated { seed: u64 },
    Ingested { source: String },
}

/// `N x 3` observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMatrix {
    pub scale: Scale,
    pub provenance: Provenance,
    pub rows: Vec<[f64; 3]>,
}

impl SampleMatrix {
    pub fn new(scale: Scale, provenance: Provenance, rows: Vec<[f64; 3]>) -> Self {
        SampleMatrix {
            scale,
            provenance,
            rows,
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    pub fn pair(&self, j: usize, k: usize) -> Vec<[f64; 2]> {
        self.rows.iter().map(|r| [r[j], r[k]]).collect()
    }

    pub fn to_uniform(&self) -> SampleMatrix {
        match self.scale {
            Scale::Uniform => self.clone(),
            Scale::Normal => self.map(Scale::Uniform, norm_cdf),
        }
    }

    pub fn to_normal(&self) -> SampleMatrix {
        match self.scale {
            Scale::Normal => self.clone(),
            Scale::Uniform => self.map(Scale::Normal, norm_quantile),
        }
    }

    fn map(&self, scale: Scale, f: fn(f64) -> f64) -> SampleMatrix {
        SampleMatrix {
            scale,
            provenance: self.provenance.clone(),
            rows: self.rows.iter().map(|r| r.map(f)).collect(),
        }
    }

    /// Column `j` of the result is column `order[j]` of `self`.
    pub fn relabel(&self, order: [usize; 3]) -> SampleMatrix {
        SampleMatrix {
            scale: self.scale,
            provenance: self.provenance.clone(),
            rows: self.rows.iter().map(|r| order.map(|j| r[j])).collect(),
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(self.scale.header())?;
        for r in &self.rows {
            out.write_record(r.iter().map(|v| format!("{v:.17e}")))?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads a CSV whose header is `u1,u2,u3` or `z1,z2,z3`.
    pub fn read_csv<R: Read>(r: R, source: &str) -> Result<SampleMatrix> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_ascii_lowercase).collect();
        let scale = [Scale::Uniform, Scale::Normal]
            .into_iter()
            .find(|s| header == s.header())
            .ok_or_else(|| Error::Parse {
                row: 0,
                message: format!("expected header u1,u2,u3 or z1,z2,z3, got {}", header.join(",")),
            })?;
        let rows = crate::io::parse_rows::<3, _>(&mut rdr)?;
        if scale == Scale::Uniform {
            if let Some(i) = rows.iter().position(|r| r.iter().any(|u| !(0.0..=1.0).contains(u))) {
                return Err(Error::Parse {
                    row: i + 1,
                    message: "uniform-scale values must lie in [0, 1]".into(),
                });
            }
        }
        Ok(SampleMatrix::new(
            scale,
            Provenance::Ingested {
                source: source.to_string(),
            },
            rows,
        ))
    }
}

impl VineSpec3D {
    /// Draws `n` observations on the uniform scale by sequential inversion
    /// in the order `u2, u1, u3`.
    ///
    /// Rows are generated in blocks of [`BLOCK_ROWS`]; block `b` uses stream
    /// `b` of `seed`, so the output does not depend on the thread count.
    pub fn simulate(&self, n: usize, seed: u64) -> Result<SampleMatrix> {
        if n == 0 {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        let blocks = n.div_ceil(BLOCK_ROWS);
        let chunks: Vec<Vec<[f64; 3]>> = (0..blocks)
            .into_par_iter()
            .map(|b| {
                let mut g = rng::stream(seed, b as u64);
                let len = BLOCK_ROWS.min(n - b * BLOCK_ROWS);
                (0..len)
                    .map(|_| {
                        let w1 = rng::open01(&mut g);
                        let w2 = rng::open01(&mut g);
                        let w3 = rng::open01(&mut g);
                        self.invert(w1, w2, w3)
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        Ok(SampleMatrix::new(
            Scale::Uniform,
            Provenance::Simulated { seed },
            chunks.concat(),
        ))
    }

    /// Inverse Rosenblatt transform of one uniform triple.
    pub fn invert(&self, w1: f64, w2: f64, w3: f64) -> Result<[f64; 3]> {
        let u2 = w2;
        let u1 = self.c12.hinv2_at(w1, u2);
        // C1|2(u1|u2) = w1 by construction
        let b = self.conditional_at(u2)?.hinv1_at(w3, w1);
        let u3 = self.c23.hinv1_at(b, u2);
        Ok([u1, u2, u3])
    }

    /// Conditional pseudo-observations `(C1|2(u1|u2), C3|2(u3|u2))`.
    pub fn pseudo_obs(&self, s: &SampleMatrix) -> Vec<[f64; 2]> {
        let s = s.to_uniform();
        s.rows
            .par_iter()
            .map(|&[u1, u2, u3]| {
                let (a, b) = self.conditionals(u1, u2, u3);
                [a, b]
            })
            .collect()
    }
}
