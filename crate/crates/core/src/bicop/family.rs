use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Independence,
    Gaussian,
    StudentT,
    Clayton,
    Gumbel,
    Frank,
    Joe,
    Bb1,
    Bb6,
    Bb8,
    Tawn1,
    Tawn2,
    Amh,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace(['-', ' '], "_");
        Family::ALL
            .into_iter()
            .find(|f| f.name() == key)
            .or(match key.as_str() {
                "normal" | "gauss" | "n" => Some(Family::Gaussian),
                "t" | "student" => Some(Family::StudentT),
                "indep" | "i" => Some(Family::Independence),
                _ => None,
            })
            .ok_or_else(|| Error::Unsupported(format!("unknown family '{s}'")))
    }
}

/// One parameter's admissible interval.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ParamInfo {
    pub name: &'static str,
    pub lower: f64,
    pub upper: f64,
    pub lower_inclusive: bool,
    pub upper_inclusive: bool,
}

impl ParamInfo {
    const fn new(name: &'static str, lower: f64, upper: f64, li: bool, ui: bool) -> Self {
        ParamInfo {
            name,
            lower,
            upper,
            lower_inclusive: li,
            upper_inclusive: ui,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        let lo = if self.lower_inclusive { x >= self.lower } else { x > self.lower };
        let hi = if self.upper_inclusive { x <= self.upper } else { x < self.upper };
        lo && hi
    }
}

/// Family metadata served to clients.
#[derive(Debug, Clone, Serialize)]
pub struct FamilyInfo {
    pub family: Family,
    pub params: Vec<ParamInfo>,
    pub rotations: Vec<u16>,
    pub exchangeable: bool,
    pub tau_invertible: bool,
}

const INF: f64 = f64::INFINITY;

impl Family {
    pub const ALL: [Family; 13] = [
        Family::Independence,
        Family::Gaussian,
        Family::StudentT,
        Family::Clayton,
        Family::Gumbel,
        Family::Frank,
        Family::Joe,
        Family::Bb1,
        Family::Bb6,
        Family::Bb8,
        Family::Tawn1,
        Family::Tawn2,
        Family::Amh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Independence => "independence",
            Family::Gaussian => "gaussian",
            Family::StudentT => "student_t",
            Family::Clayton => "clayton",
            Family::Gumbel => "gumbel",
            Family::Frank => "frank",
            Family::Joe => "joe",
            Family::Bb1 => "bb1",
            Family::Bb6 => "bb6",
            Family::Bb8 => "bb8",
            Family::Tawn1 => "tawn1",
            Family::Tawn2 => "tawn2",
            Family::Amh => "amh",
        }
    }

    pub fn param_info(self) -> &'static [ParamInfo] {
        const RHO: ParamInfo = ParamInfo::new("rho", -1.0, 1.0, false, false);
        const NU: ParamInfo = ParamInfo::new("nu", 1.0, INF, false, false);
        const CLAYTON: ParamInfo = ParamInfo::new("theta", 0.0, INF, false, false);
        const GE_ONE: ParamInfo = ParamInfo::new("theta", 1.0, INF, true, false);
        const GT_ONE: ParamInfo = ParamInfo::new("theta", 1.0, INF, false, false);
        const FRANK: ParamInfo = ParamInfo::new("theta", -INF, INF, false, false);
        const DELTA: ParamInfo = ParamInfo::new("delta", 1.0, INF, true, false);
        const DELTA8: ParamInfo = ParamInfo::new("delta", 0.0, 1.0, false, true);
        const PSI: ParamInfo = ParamInfo::new("psi", 0.0, 1.0, false, false);
        const GAMMA: ParamInfo = ParamInfo::new("gamma", 0.0, 1.0, true, false);
        match self {
            Family::Independence => &[],
            Family::Gaussian => &[RHO],
            Family::StudentT => &[RHO, NU],
            Family::Clayton => &[CLAYTON],
            Family::Gumbel => &[GE_ONE],
            Family::Frank => &[FRANK],
            Family::Joe => &[GT_ONE],
            Family::Bb1 => &[CLAYTON, DELTA],
            Family::Bb6 => &[GE_ONE, DELTA],
            Family::Bb8 => &[GE_ONE, DELTA8],
            Family::Tawn1 | Family::Tawn2 => &[GT_ONE, PSI],
            Family::Amh => &[GAMMA],
        }
    }

    pub fn n_params(self) -> usize {
        self.param_info().len()
    }

    /// Families whose negative-dependence versions exist only as rotations.
    pub fn positive_only(self) -> bool {
        !matches!(
            self,
            Family::Independence | Family::Gaussian | Family::StudentT | Family::Frank
        )
    }

    pub fn exchangeable(self) -> bool {
        !matches!(self, Family::Tawn1 | Family::Tawn2)
    }

    /// Rotations that give distinct copulas.
    pub fn rotations(self) -> &'static [Rotation] {
        if self.positive_only() {
            &Rotation::ALL
        } else {
            &[Rotation::R0]
        }
    }

    pub fn info(self) -> FamilyInfo {
        FamilyInfo {
            family: self,
            params: self.param_info().to_vec(),
            rotations: self.rotations().iter().map(|r| r.degrees()).collect(),
            exchangeable: self.exchangeable(),
            tau_invertible: self.n_params() == 1 || self == Family::Independence,
        }
    }

    pub(crate) fn check(self, params: &[f64]) -> Result<()> {
        let info = self.param_info();
        if params.len() != info.len() {
            return Err(Error::invalid(
                self,
                params,
                format!("expected {} parameters", info.len()),
            ));
        }
        for (p, i) in params.iter().zip(info) {
            if !p.is_finite() || !i.contains(*p) {
                return Err(Error::invalid(
                    self,
                    params,
                    format!("{} = {p} outside {}", i.name, interval(i)),
                ));
            }
        }
        if self == Family::Frank && params[0] == 0.0 {
            return Err(Error::invalid(self, params, "theta = 0 is the independence copula"));
        }
        Ok(())
    }
}

fn interval(i: &ParamInfo) -> String {
    format!(
        "{}{}, {}{}",
        if i.lower_inclusive { '[' } else { '(' },
        i.lower,
        i.upper,
        if i.upper_inclusive { ']' } else { ')' }
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "u16")]
pub enum Rotation {
    #[default]
    R0,
    R90,
    R180,
    R270,
}

impl Rotation {
    pub const ALL: [Rotation; 4] = [Rotation::R0, Rotation::R90, Rotation::R180, Rotation::R270];

    pub fn degrees(self) -> u16 {
        match self {
            Rotation::R0 => 0,
            Rotation::R90 => 90,
            Rotation::R180 => 180,
            Rotation::R270 => 270,
        }
    }

    pub fn from_degrees(d: i64) -> Option<Self> {
        match d.rem_euclid(360) {
            0 => Some(Rotation::R0),
            90 => Some(Rotation::R90),
            180 => Some(Rotation::R180),
            270 => Some(Rotation::R270),
            _ => None,
        }
    }

    /// Rotation by `self` followed by `other`.
    pub fn compose(self, other: Rotation) -> Rotation {
        Rotation::from_degrees(i64::from(self.degrees()) + i64::from(other.degrees()))
            .expect("multiples of 90")
    }
}

impl TryFrom<i64> for Rotation {
    type Error = String;

    fn try_from(d: i64) -> std::result::Result<Self, String> {
        if (0..360).contains(&d) {
            if let Some(r) = Rotation::from_degrees(d) {
                return Ok(r);
            }
        }
        Err(format!("rotation must be one of 0, 90, 180, 270 (got {d})"))
    }
}

impl From<Rotation> for u16 {
    fn from(r: Rotation) -> u16 {
        r.degrees()
    }
}
