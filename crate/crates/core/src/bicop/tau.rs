use std::f64::consts::PI;

use super::base::{amh_tau, frank_tau, joe_tau};
use super::Family;
use crate::error::{Error, Result};
use crate::roots;

/// Parameter of a one-parameter family with Kendall's tau `tau`.
///
/// Negative tau is only attainable natively by Gaussian and Frank; the other
/// families reach it through rotation.
pub fn params_from_tau(family: Family, tau: f64) -> Result<Vec<f64>> {
    let out_of_range = || Error::OutOfRange { family, tau };
    if !(tau > -1.0 && tau < 1.0) {
        return Err(out_of_range());
    }
    let p = match family {
        Family::Independence if tau == 0.0 => return Ok(vec![]),
        Family::Independence => return Err(out_of_range()),
        Family::Gaussian => (0.5 * PI * tau).sin(),
        Family::Clayton if tau > 0.0 => 2.0 * tau / (1.0 - tau),
        Family::Gumbel if tau >= 0.0 => 1.0 / (1.0 - tau),
        Family::Frank if tau != 0.0 => {
            let a = tau.abs();
            let hi = 5000.0;
            if frank_tau(hi) <= a {
                return Err(out_of_range());
            }
            tau.signum() * roots::bisect(frank_tau, a, 0.0, hi, 1e-12)
        }
        Family::Joe if tau > 0.0 => {
            let hi = 5000.0;
            if joe_tau(hi) <= tau {
                return Err(out_of_range());
            }
            roots::bisect(joe_tau, tau, 1.0, hi, 1e-12)
        }
        Family::Amh if (0.0..1.0 / 3.0).contains(&tau) => {
            if tau == 0.0 {
                0.0
            } else {
                let hi = 1.0 - 1e-12;
                if amh_tau(hi) <= tau {
                    return Err(out_of_range());
                }
                roots::bisect(amh_tau, tau, 0.0, hi, 1e-14)
            }
        }
        f if f.n_params() == 2 => {
            return Err(Error::Unsupported(format!(
                "{f} has two parameters; tau does not determine them"
            )))
        }
        _ => return Err(out_of_range()),
    };
    Ok(vec![p])
}

/// Starting point for likelihood maximization given a positive-side tau.
///
/// One-parameter families invert tau exactly. Two-parameter families use
/// fixed splits: t starts at nu = 5, BB1 assigns half of tau to its Gumbel
/// part, BB6/BB8 pair the Joe parameter with a mild second parameter, and the
/// Tawn families start at psi = 0.5.
pub(crate) fn start_from_tau(family: Family, tau: f64) -> Option<Vec<f64>> {
    let t = tau.clamp(-0.95, 0.95);
    let tp = t.abs().clamp(0.02, 0.95);
    match family {
        Family::Independence => Some(vec![]),
        Family::StudentT => Some(vec![(0.5 * PI * t).sin(), 5.0]),
        Family::Bb1 => {
            let de = 1.0 / (1.0 - 0.5 * tp);
            let th = (2.0 / (de * (1.0 - tp)) - 2.0).max(0.1);
            Some(vec![th, de])
        }
        Family::Bb6 => {
            let joe = params_from_tau(Family::Joe, 0.5 * tp).ok()?[0];
            Some(vec![joe, 1.0 / (1.0 - 0.5 * tp)])
        }
        Family::Bb8 => {
            let joe = params_from_tau(Family::Joe, tp).ok()?[0];
            Some(vec![joe + 0.5, 0.9])
        }
        Family::Tawn1 | Family::Tawn2 => Some(vec![1.0 / (1.0 - (2.0 * tp).min(0.9)), 0.5]),
        Family::Amh => Some(vec![params_from_tau(Family::Amh, tp.min(0.3)).ok()?[0]]),
        Family::Frank => params_from_tau(Family::Frank, if t == 0.0 { 0.02 } else { t }).ok(),
        Family::Gaussian => params_from_tau(Family::Gaussian, t).ok(),
        f => params_from_tau(f, tp).ok(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bicop::{BivariateCopula, Rotation};
    use approx::assert_relative_eq;

    #[test]
    fn inversion_round_trips() {
        for (f, t) in [
            (Family::Gaussian, -0.4),
            (Family::Clayton, 0.5),
            (Family::Gumbel, 0.2),
            (Family::Frank, 0.56),
            (Family::Frank, -0.3),
            (Family::Joe, 0.36),
            (Family::Amh, 0.2),
        ] {
            let p = params_from_tau(f, t).unwrap();
            let c = BivariateCopula::new(f, Rotation::R0, &p).unwrap();
            assert_relative_eq!(c.tau(), t, epsilon = 1e-6);
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(
            params_from_tau(Family::Bb1, 0.3),
            Err(Error::Unsupported(_))
        ));
        assert!(matches!(
            params_from_tau(Family::Clayton, -0.3),
            Err(Error::OutOfRange { .. })
        ));
        assert!(matches!(
            params_from_tau(Family::Amh, 0.4),
            Err(Error::OutOfRange { .. })
        ));
    }
}
