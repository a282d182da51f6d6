//! Parametric bivariate copulas.
//!
//! A [`BivariateCopula`] is a family, a rotation and a validated parameter
//! vector. Negative dependence for the positive-only families is expressed
//! through 90/270 degree rotations:
//!
//! ```text
//! c90(u1, u2)  = c(1 - u2, u1)
//! c180(u1, u2) = c(1 - u1, 1 - u2)
//! c270(u1, u2) = c(u2, 1 - u1)
//! ```

mod base;
mod family;
mod tau;

use serde::{Deserialize, Serialize};

pub(crate) use base::{gauss_log_pdf_xy, t_lconst, t_log_pdf_xy};
use base::Base;
pub use family::{Family, FamilyInfo, ParamInfo, Rotation};

use crate::error::{Error, Result};

/// Arguments of densities and h-functions are clamped to `[EPS, 1 - EPS]`.
pub const EPS: f64 = 1e-10;

#[inline]
fn clamp(u: f64) -> f64 {
    u.clamp(EPS, 1.0 - EPS)
}

fn check_unit(what: &'static str, u: f64) -> Result<()> {
    if (0.0..=1.0).contains(&u) {
        Ok(())
    } else {
        Err(Error::Domain { what, value: u })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CopulaJson", into = "CopulaJson")]
pub struct BivariateCopula {
    family: Family,
    rotation: Rotation,
    params: [f64; 2],
    base: Base,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CopulaJson {
    family: Family,
    #[serde(default)]
    rotation: Rotation,
    #[serde(default)]
    params: Vec<f64>,
}

impl TryFrom<CopulaJson> for BivariateCopula {
    type Error = Error;

    fn try_from(raw: CopulaJson) -> Result<Self> {
        BivariateCopula::parse(raw.family, raw.rotation, &raw.params)
    }
}

impl From<BivariateCopula> for CopulaJson {
    fn from(c: BivariateCopula) -> Self {
        CopulaJson {
            family: c.family,
            rotation: c.rotation,
            params: c.params().to_vec(),
        }
    }
}

impl BivariateCopula {
    /// Validates `params` against the family's parameter space.
    pub fn new(family: Family, rotation: Rotation, params: &[f64]) -> Result<Self> {
        family.check(params)?;
        let mut p = [0.0; 2];
        p[..params.len()].copy_from_slice(params);
        let base = match family {
            Family::Independence => Base::Indep,
            Family::Gaussian => Base::gauss(p[0]),
            Family::StudentT => Base::student(p[0], p[1]),
            Family::Clayton => Base::Clayton { th: p[0] },
            Family::Gumbel => Base::Gumbel { th: p[0] },
            Family::Frank => Base::frank(p[0]),
            Family::Joe => Base::Joe { th: p[0] },
            Family::Bb1 => Base::Bb1 { th: p[0], de: p[1] },
            Family::Bb6 => Base::Bb6 { th: p[0], de: p[1] },
            Family::Bb8 => Base::bb8(p[0], p[1]),
            Family::Tawn1 => Base::Tawn {
                th: p[0],
                psi1: p[1],
                psi2: 1.0,
            },
            Family::Tawn2 => Base::Tawn {
                th: p[0],
                psi1: 1.0,
                psi2: p[1],
            },
            Family::Amh => Base::Amh { g: p[0] },
        };
        Ok(BivariateCopula {
            family,
            rotation,
            params: p,
            base,
        })
    }

    /// Like [`new`](Self::new), but accepts the shorthand of a negative first
    /// parameter on a 90/270-rotated positive-only family and stores its
    /// absolute value.
    pub fn parse(family: Family, rotation: Rotation, params: &[f64]) -> Result<Self> {
        let mut p = params.to_vec();
        if family.positive_only()
            && matches!(rotation, Rotation::R90 | Rotation::R270)
            && p.first().is_some_and(|&x| x < 0.0)
        {
            p[0] = -p[0];
        }
        Self::new(family, rotation, &p)
    }

    pub fn independence() -> Self {
        Self::new(Family::Independence, Rotation::R0, &[]).expect("independence is always valid")
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn rotation(&self) -> Rotation {
        self.rotation
    }

    pub fn params(&self) -> &[f64] {
        &self.params[..self.family.n_params()]
    }

    /// The same copula rotated further by `r`.
    pub fn rotated(&self, r: Rotation) -> Self {
        BivariateCopula {
            rotation: self.rotation.compose(r),
            ..self.clone()
        }
    }

    pub fn is_independence(&self) -> bool {
        self.family == Family::Independence
    }

    /// Log density at interior (clamped) arguments.
    #[inline]
    pub fn log_pdf_at(&self, u1: f64, u2: f64) -> f64 {
        let (u1, u2) = (clamp(u1), clamp(u2));
        match self.rotation {
            Rotation::R0 => self.base.log_pdf(u1, u2),
            Rotation::R90 => self.base.log_pdf(1.0 - u2, u1),
            Rotation::R180 => self.base.log_pdf(1.0 - u1, 1.0 - u2),
            Rotation::R270 => self.base.log_pdf(u2, 1.0 - u1),
        }
    }

    /// Density at clamped arguments; no domain check.
    #[inline]
    pub fn pdf_at(&self, u1: f64, u2: f64) -> f64 {
        if self.is_independence() {
            return 1.0;
        }
        self.log_pdf_at(u1, u2).exp()
    }

    pub fn pdf(&self, u1: f64, u2: f64) -> Result<f64> {
        check_unit("u1", u1)?;
        check_unit("u2", u2)?;
        Ok(self.pdf_at(u1, u2))
    }

    /// Distribution function; exact on the boundary of the unit square.
    pub fn cdf_at(&self, u1: f64, u2: f64) -> f64 {
        if u1 <= 0.0 || u2 <= 0.0 {
            return 0.0;
        }
        if u1 >= 1.0 {
            return u2.min(1.0);
        }
        if u2 >= 1.0 {
            return u1;
        }
        let c = match self.rotation {
            Rotation::R0 => self.base.cdf(u1, u2),
            Rotation::R90 => u1 - self.base.cdf(1.0 - u2, u1),
            Rotation::R180 => u1 + u2 - 1.0 + self.base.cdf(1.0 - u1, 1.0 - u2),
            Rotation::R270 => u2 - self.base.cdf(u2, 1.0 - u1),
        };
        c.clamp((u1 + u2 - 1.0).max(0.0), u1.min(u2))
    }

    pub fn cdf(&self, u1: f64, u2: f64) -> Result<f64> {
        check_unit("u1", u1)?;
        check_unit("u2", u2)?;
        Ok(self.cdf_at(u1, u2))
    }

    /// `∂C/∂u2`: distribution function of `U1` given `U2 = u2`.
    #[inline]
    pub fn h2_at(&self, u1: f64, u2: f64) -> f64 {
        if u1 <= 0.0 {
            return 0.0;
        }
        if u1 >= 1.0 {
            return 1.0;
        }
        let (u1, u2) = (clamp(u1), clamp(u2));
        match self.rotation {
            Rotation::R0 => self.base.h2(u1, u2),
            Rotation::R90 => self.base.h1(1.0 - u2, u1),
            Rotation::R180 => 1.0 - self.base.h2(1.0 - u1, 1.0 - u2),
            Rotation::R270 => 1.0 - self.base.h1(u2, 1.0 - u1),
        }
    }

    /// `∂C/∂u1`: distribution function of `U2` given `U1 = u1`.
    #[inline]
    pub fn h1_at(&self, u1: f64, u2: f64) -> f64 {
        if u2 <= 0.0 {
            return 0.0;
        }
        if u2 >= 1.0 {
            return 1.0;
        }
        let (u1, u2) = (clamp(u1), clamp(u2));
        match self.rotation {
            Rotation::R0 => self.base.h1(u1, u2),
            Rotation::R90 => 1.0 - self.base.h2(1.0 - u2, u1),
            Rotation::R180 => 1.0 - self.base.h1(1.0 - u1, 1.0 - u2),
            Rotation::R270 => self.base.h2(u2, 1.0 - u1),
        }
    }

    pub fn hfunc2(&self, u1: f64, u2: f64) -> Result<f64> {
        check_unit("u1", u1)?;
        check_unit("u2", u2)?;
        Ok(self.h2_at(u1, u2))
    }

    pub fn hfunc1(&self, u1: f64, u2: f64) -> Result<f64> {
        check_unit("u1", u1)?;
        check_unit("u2", u2)?;
        Ok(self.h1_at(u1, u2))
    }

    /// Solves `h2(u1, u2) = p` for `u1`.
    pub fn hinv2_at(&self, p: f64, u2: f64) -> f64 {
        let u2 = clamp(u2);
        match self.rotation {
            Rotation::R0 => self.base.hinv2(p, u2),
            Rotation::R90 => self.base.hinv1(p, 1.0 - u2),
            Rotation::R180 => 1.0 - self.base.hinv2(1.0 - p, 1.0 - u2),
            Rotation::R270 => 1.0 - self.base.hinv1(1.0 - p, u2),
        }
    }

    /// Solves `h1(u1, u2) = p` for `u2`.
    pub fn hinv1_at(&self, p: f64, u1: f64) -> f64 {
        let u1 = clamp(u1);
        match self.rotation {
            Rotation::R0 => self.base.hinv1(p, u1),
            Rotation::R90 => 1.0 - self.base.hinv2(1.0 - p, u1),
            Rotation::R180 => 1.0 - self.base.hinv1(1.0 - p, 1.0 - u1),
            Rotation::R270 => self.base.hinv2(p, 1.0 - u1),
        }
    }

    pub fn hinv2(&self, p: f64, u2: f64) -> Result<f64> {
        check_unit("p", p)?;
        check_unit("u2", u2)?;
        Ok(self.hinv2_at(p, u2))
    }

    pub fn hinv1(&self, p: f64, u1: f64) -> Result<f64> {
        check_unit("p", p)?;
        check_unit("u1", u1)?;
        Ok(self.hinv1_at(p, u1))
    }

    /// Kendall's tau, sign-flipped for 90/270 rotations.
    pub fn tau(&self) -> f64 {
        let t = self.base.tau();
        match self.rotation {
            Rotation::R90 | Rotation::R270 => -t,
            _ => t,
        }
    }

    /// Sum of log densities over `data`.
    pub fn loglik(&self, data: &[[f64; 2]]) -> f64 {
        if self.is_independence() {
            return 0.0;
        }
        data.iter().map(|&[a, b]| self.log_pdf_at(a, b)).sum()
    }
}

impl std::fmt::Display for BivariateCopula {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.family)?;
        if self.rotation != Rotation::R0 {
            write!(f, "{}", self.rotation.degrees())?;
        }
        let p: Vec<String> = self.params().iter().map(|x| format!("{x:.4}")).collect();
        write!(f, "({})", p.join(", "))
    }
}

pub use tau::params_from_tau;
pub(crate) use tau::start_from_tau;

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cop(f: Family, r: Rotation, p: &[f64]) -> BivariateCopula {
        BivariateCopula::new(f, r, p).unwrap()
    }

    #[test]
    fn rotation_h_functions_match_cdf_derivatives() {
        let base = cop(Family::Tawn1, Rotation::R0, &[3.0, 0.3]);
        for r in Rotation::ALL {
            let c = base.rotated(r);
            let (u1, u2) = (0.37, 0.61);
            let e = 1e-5;
            let d2 = (c.cdf_at(u1, u2 + e) - c.cdf_at(u1, u2 - e)) / (2.0 * e);
            let d1 = (c.cdf_at(u1 + e, u2) - c.cdf_at(u1 - e, u2)) / (2.0 * e);
            assert_relative_eq!(c.h2_at(u1, u2), d2, epsilon = 1e-7);
            assert_relative_eq!(c.h1_at(u1, u2), d1, epsilon = 1e-7);
        }
    }

    #[test]
    fn rotation_inverses() {
        let base = cop(Family::Tawn2, Rotation::R0, &[2.5, 0.4]);
        for r in Rotation::ALL {
            let c = base.rotated(r);
            let p = c.h2_at(0.3, 0.8);
            assert_relative_eq!(c.hinv2_at(p, 0.8), 0.3, epsilon = 1e-9);
            let q = c.h1_at(0.8, 0.3);
            assert_relative_eq!(c.hinv1_at(q, 0.8), 0.3, epsilon = 1e-9);
        }
    }

    #[test]
    fn shorthand_is_canonicalized() {
        let json = r#"{"family":"joe","rotation":270,"params":[-2.0]}"#;
        let c: BivariateCopula = serde_json::from_str(json).unwrap();
        assert_eq!(c.params(), &[2.0]);
        assert_eq!(
            serde_json::to_string(&c).unwrap(),
            r#"{"family":"joe","rotation":270,"params":[2.0]}"#
        );
        let bad = r#"{"family":"clayton","rotation":0,"params":[-2.0]}"#;
        assert!(serde_json::from_str::<BivariateCopula>(bad).is_err());
    }

    #[test]
    fn domain_errors() {
        let c = cop(Family::Clayton, Rotation::R0, &[2.0]);
        assert!(matches!(c.pdf(1.2, 0.5), Err(Error::Domain { .. })));
        assert!(matches!(c.hfunc2(0.5, -0.1), Err(Error::Domain { .. })));
    }
}
