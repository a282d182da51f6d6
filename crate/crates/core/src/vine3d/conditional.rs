use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::bicop::{BivariateCopula, Family, Rotation};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Form {
    /// `a`
    Constant,
    /// `a sin(2π u)`
    Sine,
    /// `a (-(u - b)^2 + c)`
    Quadratic,
    /// `1 - exp(-a u)`
    ExpSaturation,
    /// `a arctan(b (u - c))`
    #[serde(rename = "arctan")]
    ArcTan,
    /// `sgn(u - 0.5) (a - b cos(2π k u))`
    SignCosine,
    /// `a + b u`
    Linear,
    /// Linear interpolation of `coeffs` over `knots` on the link scale,
    /// constant beyond the outer knots.
    Piecewise,
}

impl Form {
    fn n_coeffs(self) -> Option<usize> {
        match self {
            Form::Constant | Form::Sine | Form::ExpSaturation => Some(1),
            Form::Linear => Some(2),
            Form::Quadratic | Form::ArcTan | Form::SignCosine => Some(3),
            Form::Piecewise => None,
        }
    }
}

/// Scale on which a piecewise function is interpolated.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Link {
    #[default]
    Identity,
    /// `value = tanh(x)`
    FisherZ,
    /// `value = lower + exp(x)`
    Log { lower: f64 },
}

impl Link {
    fn is_identity(&self) -> bool {
        *self == Link::Identity
    }

    pub fn inverse(self, x: f64) -> f64 {
        match self {
            Link::Identity => x,
            Link::FisherZ => x.tanh(),
            Link::Log { lower } => lower + x.exp(),
        }
    }

    pub fn forward(self, v: f64) -> f64 {
        match self {
            Link::Identity => v,
            Link::FisherZ => v.clamp(-1.0 + 1e-12, 1.0 - 1e-12).atanh(),
            Link::Log { lower } => (v - lower).max(1e-300).ln(),
        }
    }
}

/// A parameter as a function of the conditioning value `u2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParamFunctionJson", into = "ParamFunctionJson")]
pub struct ParamFunction {
    form: Form,
    coeffs: Vec<f64>,
    knots: Vec<f64>,
    link: Link,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamFunctionJson {
    form: Form,
    coeffs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    knots: Vec<f64>,
    #[serde(default, skip_serializing_if = "Link::is_identity")]
    link: Link,
}

impl TryFrom<ParamFunctionJson> for ParamFunction {
    type Error = Error;

    fn try_from(j: ParamFunctionJson) -> Result<Self> {
        if j.form == Form::Piecewise {
            ParamFunction::piecewise(j.knots, j.coeffs, j.link)
        } else {
            if !j.knots.is_empty() || !j.link.is_identity() {
                return Err(Error::InvalidSpec(
                    "knots and link apply only to the piecewise form".into(),
                ));
            }
            ParamFunction::new(j.form, j.coeffs)
        }
    }
}

impl From<ParamFunction> for ParamFunctionJson {
    fn from(p: ParamFunction) -> Self {
        ParamFunctionJson {
            form: p.form,
            coeffs: p.coeffs,
            knots: p.knots,
            link: p.link,
        }
    }
}

impl ParamFunction {
    pub fn new(form: Form, coeffs: Vec<f64>) -> Result<Self> {
        let need = form.n_coeffs().ok_or_else(|| {
            Error::InvalidSpec("use ParamFunction::piecewise for piecewise forms".into())
        })?;
        if coeffs.len() != need {
            return Err(Error::InvalidSpec(format!(
                "{form:?} takes {need} coefficients, got {}",
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidSpec("coefficients must be finite".into()));
        }
        Ok(ParamFunction {
            form,
            coeffs,
            knots: Vec::new(),
            link: Link::Identity,
        })
    }

    pub fn constant(a: f64) -> Self {
        ParamFunction::new(Form::Constant, vec![a]).expect("one coefficient")
    }

    /// Piecewise-linear on the `link` scale; `values` are link-scale values.
    pub fn piecewise(knots: Vec<f64>, values: Vec<f64>, link: Link) -> Result<Self> {
        if knots.is_empty() || knots.len() != values.len() {
            return Err(Error::InvalidSpec(
                "piecewise form needs matching non-empty knots and coefficients".into(),
            ));
        }
        if knots.windows(2).any(|w| w[0] >= w[1]) || knots.iter().any(|k| !(0.0..=1.0).contains(k))
        {
            return Err(Error::InvalidSpec(
                "knots must be strictly increasing in [0, 1]".into(),
            ));
        }
        if values.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidSpec("coefficients must be finite".into()));
        }
        Ok(ParamFunction {
            form: Form::Piecewise,
            coeffs: values,
            knots,
            link,
        })
    }

    pub fn form(&self) -> Form {
        self.form
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn link(&self) -> Link {
        self.link
    }

    pub fn is_constant(&self) -> bool {
        self.form == Form::Constant
    }

    pub fn eval(&self, u: f64) -> f64 {
        let c = &self.coeffs;
        match self.form {
            Form::Constant => c[0],
            Form::Sine => c[0] * (2.0 * PI * u).sin(),
            Form::Quadratic => c[0] * (-(u - c[1]).powi(2) + c[2]),
            Form::ExpSaturation => -(-c[0] * u).exp_m1(),
            Form::ArcTan => c[0] * (c[1] * (u - c[2])).atan(),
            Form::SignCosine => sign(u - 0.5) * (c[0] - c[1] * (2.0 * PI * c[2] * u).cos()),
            Form::Linear => c[0] + c[1] * u,
            Form::Piecewise => self.link.inverse(interp(&self.knots, c, u)),
        }
    }
}

/// `sgn` with `sgn(0) = 0`.
fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn interp(knots: &[f64], values: &[f64], u: f64) -> f64 {
    let n = knots.len();
    if u <= knots[0] {
        return values[0];
    }
    if u >= knots[n - 1] {
        return values[n - 1];
    }
    let j = knots.partition_point(|&k| k <= u);
    let (k0, k1) = (knots[j - 1], knots[j]);
    let w = (u - k0) / (k1 - k0);
    values[j - 1] * (1.0 - w) + values[j] * w
}

/// The conditional pair-copula `c13;2(·, ·; u2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionalPair {
    pub family: Family,
    #[serde(default)]
    pub base_rotation: Rotation,
    pub param_fns: Vec<ParamFunction>,
    /// Rotation used where the first parameter function is negative (with
    /// its absolute value); independence at an exact zero.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sign_rotation: Option<Rotation>,
}

impl ConditionalPair {
    /// A constant (simplified) conditional pair.
    pub fn constant(cop: &BivariateCopula) -> Self {
        ConditionalPair {
            family: cop.family(),
            base_rotation: cop.rotation(),
            param_fns: cop.params().iter().map(|&p| ParamFunction::constant(p)).collect(),
            sign_rotation: None,
        }
    }

    pub fn is_simplified(&self) -> bool {
        self.param_fns.iter().all(ParamFunction::is_constant)
    }

    /// Raw parameter values at `u2` before the sign rule.
    pub fn params_at(&self, u2: f64) -> Vec<f64> {
        self.param_fns.iter().map(|f| f.eval(u2)).collect()
    }

    /// The copula in force at `u2`.
    pub fn copula_at(&self, u2: f64) -> Result<BivariateCopula> {
        let mut p = [0.0; 2];
        let n = self.param_fns.len().min(2);
        for (dst, f) in p.iter_mut().zip(&self.param_fns) {
            *dst = f.eval(u2);
        }
        let p = &mut p[..n];
        let mut rotation = self.base_rotation;
        if let Some(sr) = self.sign_rotation {
            if p[0] == 0.0 {
                return Ok(BivariateCopula::independence());
            }
            if p[0] < 0.0 {
                p[0] = -p[0];
                rotation = sr;
            }
        }
        if is_degenerate(self.family, p) {
            return Ok(BivariateCopula::independence());
        }
        BivariateCopula::new(self.family, rotation, p)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.param_fns.len() != self.family.n_params() {
            return Err(Error::InvalidSpec(format!(
                "{} needs {} parameter functions, got {}",
                self.family,
                self.family.n_params(),
                self.param_fns.len()
            )));
        }
        // probe the interior, including the knot and zero-crossing points
        for i in 1..256 {
            self.copula_at(i as f64 / 256.0)?;
        }
        for f in &self.param_fns {
            for &k in f.knots() {
                if k > 0.0 && k < 1.0 {
                    self.copula_at(k)?;
                }
            }
        }
        Ok(())
    }
}

/// Parameter values at which a family collapses to independence.
fn is_degenerate(family: Family, p: &[f64]) -> bool {
    match family {
        Family::Clayton | Family::Frank | Family::Amh => p[0] == 0.0,
        // the lower bound is reached exactly by some parameter functions
        Family::Joe | Family::Tawn1 | Family::Tawn2 => (p[0] - 1.0).abs() < 1e-12,
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forms() {
        let f = ParamFunction::new(Form::SignCosine, vec![4.0, 3.0, 4.0]).unwrap();
        assert_eq!(f.eval(0.5), 0.0);
        assert!((f.eval(0.125) + 7.0).abs() < 1e-12);
        assert!((f.eval(0.625) - 7.0).abs() < 1e-12);
        let q = ParamFunction::new(Form::Quadratic, vec![9.0, 0.5, 0.25]).unwrap();
        assert!((q.eval(0.5) - 2.25).abs() < 1e-15);
        assert!(ParamFunction::new(Form::Linear, vec![1.0]).is_err());
    }

    #[test]
    fn piecewise_interpolates_on_link_scale() {
        let f = ParamFunction::piecewise(vec![0.25, 0.75], vec![0.0, 1.0], Link::FisherZ).unwrap();
        assert_eq!(f.eval(0.1), 0.0);
        assert!((f.eval(0.5) - 0.5f64.tanh()).abs() < 1e-15);
        assert!((f.eval(0.9) - 1.0f64.tanh()).abs() < 1e-15);
        let json = serde_json::to_string(&f).unwrap();
        assert_eq!(
            json,
            r#"{"form":"piecewise","coeffs":[0.0,1.0],"knots":[0.25,0.75],"link":"fisher_z"}"#
        );
        assert_eq!(serde_json::from_str::<ParamFunction>(&json).unwrap(), f);
    }

    #[test]
    fn sign_rule_rotates_and_zero_is_independence() {
        let cp = ConditionalPair {
            family: Family::Clayton,
            base_rotation: Rotation::R0,
            param_fns: vec![ParamFunction::new(Form::Sine, vec![2.0]).unwrap()],
            sign_rotation: Some(Rotation::R90),
        };
        let c = cp.copula_at(0.75).unwrap();
        assert_eq!(c.rotation(), Rotation::R90);
        assert!((c.params()[0] - 2.0).abs() < 1e-12);
        assert!(c.tau() < 0.0);
        let crossing = ConditionalPair {
            param_fns: vec![ParamFunction::new(Form::Linear, vec![-1.0, 2.0]).unwrap()],
            ..cp
        };
        assert!(crossing.copula_at(0.5).unwrap().is_independence());
        assert_eq!(crossing.copula_at(0.25).unwrap().rotation(), Rotation::R90);
    }
}
