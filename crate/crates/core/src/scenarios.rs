//! Built-in reference models and the values they are known to produce.

use serde::Serialize;

use crate::bicop::{BivariateCopula, Family, Rotation};
use crate::error::{Error, Result};
use crate::vine3d::{ConditionalPair, Form, Margins, ParamFunction, VineSpec3D};

/// A named reference value with the tolerance it is checked against.
#[derive(Debug, Clone, Serialize)]
pub struct Expected {
    pub name: &'static str,
    pub value: f64,
    pub tolerance: f64,
    /// What the value is and how it arises.
    pub note: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct Scenario {
    pub id: &'static str,
    pub title: &'static str,
    pub description: &'static str,
    pub simplified: bool,
    pub spec: VineSpec3D,
    pub expected: Vec<Expected>,
}

impl Scenario {
    pub fn expected(&self, name: &str) -> Option<&Expected> {
        self.expected.iter().find(|e| e.name == name)
    }

    pub fn value(&self, name: &str) -> f64 {
        self.expected(name)
            .unwrap_or_else(|| panic!("{} has no expected value '{name}'", self.id))
            .value
    }
}

/// Registry order.
pub const IDS: [&str; 9] = ["S1", "S2", "S3", "S4", "S5", "S6", "S7", "S8", "SIM5.1"];

pub fn get(id: &str) -> Result<Scenario> {
    let key = id.trim().to_ascii_uppercase();
    let s = match key.as_str() {
        "S1" => s1(),
        "S2" => s2(),
        "S3" => s3(),
        "S4" => s4(),
        "S5" => s5(),
        "S6" => s6(),
        "S7" => s7(),
        "S8" => s8(),
        "SIM5.1" | "SIM" => sim(),
        _ => return Err(Error::UnknownScenario(id.to_string())),
    };
    Ok(s)
}

pub fn list() -> Vec<Scenario> {
    IDS.iter().map(|id| get(id).expect("registered")).collect()
}

fn cop(family: Family, rotation: u16, params: &[f64]) -> BivariateCopula {
    let r = Rotation::from_degrees(rotation.into()).expect("valid rotation");
    BivariateCopula::new(family, r, params).expect("registry parameters are valid")
}

fn pf(form: Form, coeffs: &[f64]) -> ParamFunction {
    ParamFunction::new(form, coeffs.to_vec()).expect("registry coefficients are valid")
}

fn varying(
    c12: BivariateCopula,
    c23: BivariateCopula,
    family: Family,
    param_fns: Vec<ParamFunction>,
    sign_rotation: Option<Rotation>,
) -> VineSpec3D {
    let c13_2 = ConditionalPair {
        family,
        base_rotation: Rotation::R0,
        param_fns,
        sign_rotation,
    };
    VineSpec3D::new(c12, c23, c13_2, Margins::StdNormal).expect("registry spec is valid")
}

const fn ex(name: &'static str, value: f64, tolerance: f64, note: &'static str) -> Expected {
    Expected {
        name,
        value,
        tolerance,
        note,
    }
}

const TAU: f64 = 0.005;

fn s1() -> Scenario {
    Scenario {
        id: "S1",
        title: "Gaussian vine",
        description: "All three pairs Gaussian; equivalent to a trivariate Gaussian copula.",
        simplified: true,
        spec: VineSpec3D::simplified(
            cop(Family::Gaussian, 0, &[0.6]),
            cop(Family::Gaussian, 0, &[0.7]),
            &cop(Family::Gaussian, 0, &[0.5]),
        ),
        expected: vec![
            ex("tau12", 0.41, TAU, "Kendall's tau of c12, rounded to two digits"),
            ex("tau23", 0.49, TAU, "Kendall's tau of c23, rounded to two digits"),
            ex("tau13_2", 0.33, TAU, "Kendall's tau of c13;2, rounded to two digits"),
            ex("rho13", 0.71, 0.005, "correlation of the implied Gaussian (1,3) margin, rounded"),
            ex("tau13", 0.50, 0.005, "Kendall's tau of the implied (1,3) margin, rounded"),
        ],
    }
}

fn s2() -> Scenario {
    Scenario {
        id: "S2",
        title: "Trivariate Clayton",
        description: "Clayton(2) pairs with conditional Clayton(theta/(theta+1)); equals the \
                      trivariate Clayton copula with theta = 2.",
        simplified: true,
        spec: VineSpec3D::simplified(
            cop(Family::Clayton, 0, &[2.0]),
            cop(Family::Clayton, 0, &[2.0]),
            &cop(Family::Clayton, 0, &[2.0 / 3.0]),
        ),
        expected: vec![
            ex("tau12", 0.50, TAU, "Kendall's tau of c12"),
            ex("tau23", 0.50, TAU, "Kendall's tau of c23"),
            ex("tau13_2", 0.25, TAU, "Kendall's tau of c13;2"),
            ex("theta13_2", 0.67, 0.005, "conditional parameter theta/(theta+1), rounded"),
        ],
    }
}

fn s3() -> Scenario {
    Scenario {
        id: "S3",
        title: "Mixed: Frank, Gumbel, Gaussian",
        description: "Frank(7) and Gumbel(2) unconditional pairs, negatively dependent \
                      Gaussian conditional pair.",
        simplified: true,
        spec: VineSpec3D::simplified(
            cop(Family::Frank, 0, &[7.0]),
            cop(Family::Gumbel, 0, &[2.0]),
            &cop(Family::Gaussian, 0, &[-0.7]),
        ),
        expected: vec![
            ex("tau12", 0.56, TAU, "Kendall's tau of c12"),
            ex("tau23", 0.50, TAU, "Kendall's tau of c23"),
            ex("tau13_2", -0.49, TAU, "Kendall's tau of c13;2"),
        ],
    }
}

fn s4() -> Scenario {
    Scenario {
        id: "S4",
        title: "Mixed: Tawn, rotated Joe, BB1",
        description: "Asymmetric Tawn type 1 pair, Joe rotated by 270 degrees, BB1 conditional pair.",
        simplified: true,
        spec: VineSpec3D::simplified(
            cop(Family::Tawn1, 0, &[3.0, 0.3]),
            cop(Family::Joe, 270, &[2.0]),
            &cop(Family::Bb1, 0, &[2.0, 1.5]),
        ),
        expected: vec![
            ex("tau12", 0.25, TAU, "Kendall's tau of c12"),
            ex("tau23", -0.36, TAU, "Kendall's tau of c23"),
            ex("tau13_2", 0.67, TAU, "Kendall's tau of c13;2"),
        ],
    }
}

fn s5() -> Scenario {
    Scenario {
        id: "S5",
        title: "Gaussian with sine-driven conditional correlation",
        description: "Independent unconditional pairs; conditional Gaussian with \
                      rho(u2) = 0.9 sin(2 pi u2), so dependence switches sign at u2 = 0.5.",
        simplified: false,
        spec: varying(
            cop(Family::Gaussian, 0, &[0.0]),
            cop(Family::Gaussian, 0, &[0.0]),
            Family::Gaussian,
            vec![pf(Form::Sine, &[0.9])],
            None,
        ),
        expected: vec![
            ex("tau12", 0.0, TAU, "Kendall's tau of c12"),
            ex("tau23", 0.0, TAU, "Kendall's tau of c23"),
            ex("tau_curve_max", 0.71, 0.005, "maximum of the conditional tau curve"),
            ex("tau_curve_min", -0.71, 0.005, "minimum of the conditional tau curve"),
            ex("approx_rho", 0.01, 0.05, "estimated t correlation of the simplified approximation"),
            ex("approx_nu", 2.15, 0.7, "estimated t degrees of freedom of the simplified approximation"),
        ],
    }
}

fn s6() -> Scenario {
    Scenario {
        id: "S6",
        title: "Clayton with parabolic conditional parameter",
        description: "Clayton rotated by 90 degrees and Clayton(2) unconditional pairs; \
                      conditional Clayton with theta(u2) = 9(-(u2 - 0.5)^2 + 0.25).",
        simplified: false,
        spec: varying(
            cop(Family::Clayton, 90, &[2.0]),
            cop(Family::Clayton, 0, &[2.0]),
            Family::Clayton,
            vec![pf(Form::Quadratic, &[9.0, 0.5, 0.25])],
            None,
        ),
        expected: vec![
            ex("tau12", -0.50, TAU, "Kendall's tau of c12"),
            ex("tau23", 0.50, TAU, "Kendall's tau of c23"),
            ex("tau_curve_max", 0.53, 0.005, "maximum of the conditional tau curve, at u2 = 0.5"),
            ex("tau_curve_min", 0.0, 0.005, "conditional tau at the ends of the unit interval"),
            ex("approx_theta", 1.75, 0.5, "survival BB6 first parameter of the simplified approximation"),
            ex("approx_delta", 1.16, 0.3, "survival BB6 second parameter of the simplified approximation"),
            ex("approx_tau", 0.39, 0.03, "Kendall's tau of the simplified approximation"),
        ],
    }
}

fn s7() -> Scenario {
    Scenario {
        id: "S7",
        title: "Trivariate Frank",
        description: "Frank(8) unconditional pairs with conditional AMH, gamma(u2) = 1 - exp(-8 u2); \
                      equals the trivariate Frank copula with theta = 8.",
        simplified: false,
        spec: varying(
            cop(Family::Frank, 0, &[8.0]),
            cop(Family::Frank, 0, &[8.0]),
            Family::Amh,
            vec![pf(Form::ExpSaturation, &[8.0])],
            None,
        ),
        expected: vec![
            ex("tau12", 0.60, TAU, "Kendall's tau of c12"),
            ex("tau23", 0.60, TAU, "Kendall's tau of c23"),
            ex("approx_tau", 0.28, 0.03, "Kendall's tau of the simplified approximation"),
        ],
    }
}

fn s8() -> Scenario {
    Scenario {
        id: "S8",
        title: "Strong mixed dependence with oscillating Tawn",
        description: "BB8(6, 0.95) and Gumbel rotated by 270 degrees; conditional Tawn type 2 \
                      with theta(u2) = sgn(u2 - 0.5)(4 - 3 cos(8 pi u2)) and psi(u2) = 0.1 + 0.8 u2, \
                      rotated by 90 degrees where theta is negative.",
        simplified: false,
        spec: varying(
            cop(Family::Bb8, 0, &[6.0, 0.95]),
            cop(Family::Gumbel, 270, &[3.5]),
            Family::Tawn2,
            vec![pf(Form::SignCosine, &[4.0, 3.0, 4.0]), pf(Form::Linear, &[0.1, 0.8])],
            Some(Rotation::R90),
        ),
        expected: vec![
            ex("tau12", 0.69, TAU, "Kendall's tau of c12"),
            ex("tau23", -0.71, TAU, "Kendall's tau of c23"),
            ex("tau_curve_max", 0.71, 0.01, "maximum of the conditional tau curve"),
            ex("tau_curve_min", -0.39, 0.01, "minimum of the conditional tau curve"),
            ex("approx_rho", 0.18, 0.05, "estimated t correlation of the simplified approximation"),
            ex("approx_nu", 2.6, 0.8, "estimated t degrees of freedom of the simplified approximation"),
            ex("approx_tau", 0.11, 0.03, "Kendall's tau of the simplified approximation"),
        ],
    }
}

fn sim() -> Scenario {
    Scenario {
        id: "SIM5.1",
        title: "Simulation-study truth",
        description: "Gumbel(1.5) and t(0, 2.5) unconditional pairs; conditional Frank with \
                      theta(u2) = 3 arctan(10(u2 - 0.5)).",
        simplified: false,
        spec: varying(
            cop(Family::Gumbel, 0, &[1.5]),
            cop(Family::StudentT, 0, &[0.0, 2.5]),
            Family::Frank,
            vec![pf(Form::ArcTan, &[3.0, 10.0, 0.5])],
            None,
        ),
        expected: vec![
            ex("tau12", 0.33, TAU, "Kendall's tau of c12"),
            ex("tau23", 0.0, TAU, "Kendall's tau of c23"),
            ex("density_max", 0.101, 0.006, "maximum of the normal-scale density"),
            ex("fit_theta12", 1.49, 0.08, "Gumbel parameter fitted to a sample of 3000"),
            ex("fit_rho23", 0.04, 0.05, "t correlation fitted to a sample of 3000"),
            ex("fit_nu23", 2.36, 0.6, "t degrees of freedom fitted to a sample of 3000"),
            ex("fit_rho13_2", -0.01, 0.05, "simplified conditional t correlation"),
            ex("fit_nu13_2", 3.42, 6.0, "simplified conditional t degrees of freedom (reported 3.42 and 9.14)"),
            ex("tau_hat_min", -0.36, 0.09, "minimum of the estimated conditional tau curve"),
            ex("tau_hat_max", 0.38, 0.07, "maximum of the estimated conditional tau curve"),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_is_complete_and_ordered() {
        let all = list();
        assert_eq!(all.len(), 9);
        assert_eq!(all.iter().map(|s| s.id).collect::<Vec<_>>(), IDS);
        assert!(matches!(get("S9"), Err(Error::UnknownScenario(_))));
        assert_eq!(get("sim5.1").unwrap().id, "SIM5.1");
    }

    #[test]
    fn json_round_trip_is_stable() {
        for s in list() {
            let a = serde_json::to_string(&s.spec).unwrap();
            let back: VineSpec3D = serde_json::from_str(&a).unwrap();
            assert_eq!(back, s.spec, "{}", s.id);
            assert_eq!(serde_json::to_string(&back).unwrap(), a);
            assert_eq!(s.simplified, s.spec.is_simplified());
        }
    }
}
