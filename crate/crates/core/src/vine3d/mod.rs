//! The trivariate pair-copula construction with `u2` as conditioning variable.
//!
//! Other decomposition orders are obtained by relabeling the data columns
//! (see [`SampleMatrix::relabel`]).

mod conditional;
mod sample;

use serde::{Deserialize, Serialize};

pub use conditional::{ConditionalPair, Form, Link, ParamFunction};
pub use sample::{Provenance, SampleMatrix, Scale};

use crate::bicop::BivariateCopula;
use crate::error::{Error, Result};
use crate::quadrature::{self, Integral};
use crate::special::{norm_cdf, norm_pdf};

/// Marginal scale on which a model is displayed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Margins {
    Uniform,
    #[default]
    StdNormal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecJson", into = "SpecJson")]
pub struct VineSpec3D {
    pub margins: Margins,
    pub c12: BivariateCopula,
    pub c23: BivariateCopula,
    pub c13_2: ConditionalPair,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecJson {
    #[serde(default)]
    margins: Margins,
    c12: BivariateCopula,
    c23: BivariateCopula,
    c13_2: ConditionalPair,
}

impl TryFrom<SpecJson> for VineSpec3D {
    type Error = Error;

    fn try_from(j: SpecJson) -> Result<Self> {
        VineSpec3D::new(j.c12, j.c23, j.c13_2, j.margins)
    }
}

impl From<VineSpec3D> for SpecJson {
    fn from(s: VineSpec3D) -> Self {
        SpecJson {
            margins: s.margins,
            c12: s.c12,
            c23: s.c23,
            c13_2: s.c13_2,
        }
    }
}

/// Default Gauss-Legendre node count for the `c13` margin.
pub const MARGIN_NODES: usize = 64;
/// The `c13` margin integrates over `z2 = Φ⁻¹(u2)` on `[-MARGIN_Z, MARGIN_Z]`;
/// the neglected `u2` mass is `2Φ(-8.5) ≈ 2e-17`.
pub const MARGIN_Z: f64 = 8.5;
/// Two half-interval estimates must agree to this before a panel is accepted.
pub const MARGIN_TOL: f64 = 1e-5;
/// Bisection depth cap for the `c13` margin.
pub const MARGIN_MAX_DEPTH: u32 = 6;

impl VineSpec3D {
    pub fn new(
        c12: BivariateCopula,
        c23: BivariateCopula,
        c13_2: ConditionalPair,
        margins: Margins,
    ) -> Result<Self> {
        c13_2.validate()?;
        Ok(VineSpec3D {
            margins,
            c12,
            c23,
            c13_2,
        })
    }

    /// A simplified vine with a constant conditional copula.
    pub fn simplified(c12: BivariateCopula, c23: BivariateCopula, c13_2: &BivariateCopula) -> Self {
        VineSpec3D {
            margins: Margins::StdNormal,
            c12,
            c23,
            c13_2: ConditionalPair::constant(c13_2),
        }
    }

    pub fn independence() -> Self {
        let i = BivariateCopula::independence();
        VineSpec3D::simplified(i.clone(), i.clone(), &i)
    }

    pub fn with_margins(mut self, margins: Margins) -> Self {
        self.margins = margins;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.c13_2.validate()
    }

    pub fn is_simplified(&self) -> bool {
        self.c13_2.is_simplified()
    }

    /// The conditional copula in force at `u2`.
    pub fn conditional_at(&self, u2: f64) -> Result<BivariateCopula> {
        self.c13_2.copula_at(u2)
    }

    /// `(C1|2(u1|u2), C3|2(u3|u2))`.
    #[inline]
    pub fn conditionals(&self, u1: f64, u2: f64, u3: f64) -> (f64, f64) {
        (self.c12.h2_at(u1, u2), self.c23.h1_at(u2, u3))
    }

    /// Copula density with a pre-built conditional copula `c13` (valid for
    /// this `u2`); no domain checks.
    #[inline]
    pub fn density_u_with(&self, c13: &BivariateCopula, u1: f64, u2: f64, u3: f64) -> f64 {
        let (a, b) = self.conditionals(u1, u2, u3);
        c13.pdf_at(a, b) * self.c12.pdf_at(u1, u2) * self.c23.pdf_at(u2, u3)
    }

    /// Copula density on `[0, 1]^3` (arguments clamped to the open cube).
    pub fn density_u(&self, u1: f64, u2: f64, u3: f64) -> Result<f64> {
        for (what, u) in [("u1", u1), ("u2", u2), ("u3", u3)] {
            if !(0.0..=1.0).contains(&u) {
                return Err(Error::Domain { what, value: u });
            }
        }
        let u2 = u2.clamp(crate::bicop::EPS, 1.0 - crate::bicop::EPS);
        let c13 = self.conditional_at(u2)?;
        Ok(self.density_u_with(&c13, u1, u2, u3))
    }

    /// Joint density with standard normal margins.
    pub fn density_z(&self, z1: f64, z2: f64, z3: f64) -> Result<f64> {
        for (what, z) in [("z1", z1), ("z2", z2), ("z3", z3)] {
            if z.is_nan() {
                return Err(Error::Domain { what, value: z });
            }
        }
        let c = self.density_u(norm_cdf(z1), norm_cdf(z2), norm_cdf(z3))?;
        Ok(c * norm_pdf(z1) * norm_pdf(z2) * norm_pdf(z3))
    }

    /// Implied bivariate copula density of `(U1, U3)`, integrating out `u2`.
    ///
    /// The integral is taken over the normal score of `u2`, where the
    /// integrand is smooth and close to Gaussian even when it spikes near
    /// the ends of `(0, 1)`.
    pub fn marginal13_pdf(&self, u1: f64, u3: f64) -> Result<Integral> {
        self.marginal13_pdf_with(u1, u3, MARGIN_NODES)
    }

    /// As [`marginal13_pdf`](Self::marginal13_pdf) with a chosen node count.
    pub fn marginal13_pdf_with(&self, u1: f64, u3: f64, nodes: usize) -> Result<Integral> {
        for (what, u) in [("u1", u1), ("u3", u3)] {
            if !(0.0..=1.0).contains(&u) {
                return Err(Error::Domain { what, value: u });
            }
        }
        if nodes < 2 {
            return Err(Error::Unsupported("at least 2 quadrature nodes".into()));
        }
        let mut failure = None;
        let rule = quadrature::legendre(nodes);
        let integral = quadrature::adaptive_with(
            rule,
            |z| {
                let v = norm_cdf(z).clamp(crate::bicop::EPS, 1.0 - crate::bicop::EPS);
                match self.conditional_at(v) {
                    Ok(c13) => self.density_u_with(&c13, u1, v, u3) * norm_pdf(z),
                    Err(e) => {
                        failure.get_or_insert(e);
                        0.0
                    }
                }
            },
            -MARGIN_Z,
            MARGIN_Z,
            MARGIN_TOL,
            MARGIN_MAX_DEPTH,
        );
        match failure {
            Some(e) => Err(e),
            None => Ok(integral),
        }
    }

    /// Implied `(Z1, Z3)` density with standard normal margins.
    pub fn marginal13_pdf_z(&self, z1: f64, z3: f64) -> Result<Integral> {
        let m = self.marginal13_pdf(norm_cdf(z1), norm_cdf(z3))?;
        let w = norm_pdf(z1) * norm_pdf(z3);
        Ok(Integral {
            value: m.value * w,
            abs_error: m.abs_error * w,
            converged: m.converged,
        })
    }

    /// Kendall's tau of the conditional copula at each `u2` in `grid`.
    pub fn tau_curve(&self, grid: &[f64]) -> Result<Vec<f64>> {
        grid.iter()
            .map(|&u2| {
                if !(u2 > 0.0 && u2 < 1.0) {
                    return Err(Error::Domain { what: "u2", value: u2 });
                }
                Ok(self.conditional_at(u2)?.tau())
            })
            .collect()
    }
}
