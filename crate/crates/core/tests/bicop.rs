use proptest::prelude::*;
use trivine::bicop::params_from_tau;
use trivine::quadrature::adaptive;
use trivine::special::{norm_cdf, norm_pdf};
use trivine::stats::kendall_tau;
use trivine::{rng, BivariateCopula, Error, Family, Rotation};

fn cop(f: Family, r: Rotation, p: &[f64]) -> BivariateCopula {
    BivariateCopula::new(f, r, p).unwrap()
}

/// Two parameter settings per family (one for independence).
fn settings() -> Vec<(Family, Vec<f64>)> {
    use Family::*;
    vec![
        (Independence, vec![]),
        (Gaussian, vec![0.6]),
        (Gaussian, vec![-0.4]),
        (StudentT, vec![0.5, 4.0]),
        (StudentT, vec![-0.3, 8.0]),
        (Clayton, vec![2.0]),
        (Clayton, vec![0.7]),
        (Gumbel, vec![2.0]),
        (Gumbel, vec![1.3]),
        (Frank, vec![7.0]),
        (Frank, vec![-3.0]),
        (Joe, vec![2.0]),
        (Joe, vec![3.5]),
        (Bb1, vec![2.0, 1.5]),
        (Bb1, vec![0.5, 2.0]),
        (Bb6, vec![1.5, 1.5]),
        (Bb6, vec![2.0, 1.2]),
        (Bb8, vec![3.0, 0.8]),
        (Bb8, vec![6.0, 0.95]),
        (Tawn1, vec![3.0, 0.3]),
        (Tawn1, vec![2.0, 0.7]),
        (Tawn2, vec![3.0, 0.3]),
        (Tawn2, vec![2.0, 0.7]),
        (Amh, vec![0.7]),
        (Amh, vec![0.3]),
    ]
}

/// Every setting under every rotation the family distinguishes.
fn all_copulas() -> Vec<BivariateCopula> {
    settings()
        .into_iter()
        .flat_map(|(f, p)| f.rotations().iter().map(move |&r| cop(f, r, &p)).collect::<Vec<_>>())
        .collect()
}

fn uniforms(n: usize, seed: u64) -> Vec<[f64; 2]> {
    let mut g = rng::stream(seed, 0);
    (0..n).map(|_| [rng::open01(&mut g), rng::open01(&mut g)]).collect()
}

fn simulate(c: &BivariateCopula, n: usize, seed: u64) -> Vec<[f64; 2]> {
    uniforms(n, seed).into_iter().map(|[w, v]| [c.hinv2_at(w, v), v]).collect()
}

// ---- examples ----

#[test]
fn density_examples() {
    let ind = BivariateCopula::independence();
    assert_eq!(ind.pdf(0.3, 0.7).unwrap(), 1.0);
    assert!((cop(Family::Gaussian, Rotation::R0, &[0.0]).pdf(0.5, 0.5).unwrap() - 1.0).abs() < 1e-15);
    // mixed second difference of the closed-form Clayton(2) distribution function
    let cdf = |u: f64, v: f64| (u.powi(-2) + v.powi(-2) - 1.0).powf(-0.5);
    let (u, v, e) = (0.2, 0.3, 1e-4);
    let fd = (cdf(u + e, v + e) - cdf(u + e, v - e) - cdf(u - e, v + e) + cdf(u - e, v - e)) / (4.0 * e * e);
    let c = cop(Family::Clayton, Rotation::R0, &[2.0]);
    assert!((c.pdf(u, v).unwrap() - fd).abs() <= 1e-5, "{} vs {fd}", c.pdf(u, v).unwrap());
}

#[test]
fn distribution_function_examples() {
    for c in all_copulas() {
        for u in [0.0, 0.25, 1.0] {
            assert_eq!(c.cdf(u, 1.0).unwrap(), u, "{c}");
            assert_eq!(c.cdf(1.0, u).unwrap(), u, "{c}");
            assert_eq!(c.cdf(u, 0.0).unwrap(), 0.0, "{c}");
            assert_eq!(c.cdf(0.0, u).unwrap(), 0.0, "{c}");
        }
    }
    let g0 = cop(Family::Gaussian, Rotation::R0, &[0.0]);
    assert!((g0.cdf(0.4, 0.5).unwrap() - 0.2).abs() < 1e-10);
    let gumbel = cop(Family::Gumbel, Rotation::R0, &[2.0]);
    let expected = (-(2.0 * 2f64.ln().powi(2)).sqrt()).exp();
    assert!((gumbel.cdf(0.5, 0.5).unwrap() - expected).abs() < 1e-14);
    assert!((expected - 0.3753).abs() < 1e-4);
}

#[test]
fn h_function_examples() {
    let ind = BivariateCopula::independence();
    assert_eq!(ind.hfunc2(0.3, 0.9).unwrap(), 0.3);
    assert_eq!(ind.hfunc1(0.7, 0.2).unwrap(), 0.2);
    let g = cop(Family::Gaussian, Rotation::R0, &[0.6]);
    assert!((g.hfunc2(0.5, 0.5).unwrap() - 0.5).abs() < 1e-14);

    // Frank(7): derivative of its closed-form distribution function in u2
    let th: f64 = 7.0;
    let cdf = |u: f64, v: f64| -(1.0 + (-th * u).exp_m1() * (-th * v).exp_m1() / (-th).exp_m1()).ln() / th;
    let e = 1e-5;
    let fd = (cdf(0.3, 0.6 + e) - cdf(0.3, 0.6 - e)) / (2.0 * e);
    let f = cop(Family::Frank, Rotation::R0, &[7.0]);
    assert!((f.hfunc2(0.3, 0.6).unwrap() - fd).abs() <= 1e-6);

    let c = cop(Family::Clayton, Rotation::R0, &[2.0]);
    assert!((c.hfunc1(0.2, 0.7).unwrap() - c.hfunc2(0.7, 0.2).unwrap()).abs() < 1e-15);

    // Tawn1(3, 0.3): extreme-value distribution function written out here
    let (th, psi) = (3.0f64, 0.3f64);
    let tawn = |u: f64, v: f64| {
        let (x, y) = (-u.ln(), -v.ln());
        let t = y / (x + y);
        let a = (1.0 - psi) * (1.0 - t) + ((psi * (1.0 - t)).powf(th) + t.powf(th)).powf(1.0 / th);
        (-(x + y) * a).exp()
    };
    let t1 = cop(Family::Tawn1, Rotation::R0, &[3.0, 0.3]);
    assert!((t1.cdf_at(0.4, 0.6) - tawn(0.4, 0.6)).abs() < 1e-14);
    let fd1 = (tawn(0.4 + e, 0.6) - tawn(0.4 - e, 0.6)) / (2.0 * e);
    let fd2 = (tawn(0.4, 0.6 + e) - tawn(0.4, 0.6 - e)) / (2.0 * e);
    assert!((t1.hfunc1(0.4, 0.6).unwrap() - fd1).abs() <= 1e-6);
    assert!((t1.hfunc2(0.4, 0.6).unwrap() - fd2).abs() <= 1e-6);
    assert!((fd1 - t1.hfunc2(0.6, 0.4).unwrap()).abs() > 1e-3, "non-exchangeable");
}

#[test]
fn inverse_examples() {
    let ind = BivariateCopula::independence();
    assert!((ind.hinv2(0.42, 0.9).unwrap() - 0.42).abs() < 1e-15);
    let g = cop(Family::Gaussian, Rotation::R0, &[0.5]);
    let p = g.hfunc2(0.3, 0.8).unwrap();
    assert!((g.hinv2(p, 0.8).unwrap() - 0.3).abs() < 1e-8);
    // bisection oracle on the closed-form Clayton(2) h-function
    let h = |u: f64, v: f64| v.powi(-3) * (u.powi(-2) + v.powi(-2) - 1.0).powf(-1.5);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid, 0.5) < 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let c = cop(Family::Clayton, Rotation::R0, &[2.0]);
    assert!((c.hinv2(0.5, 0.5).unwrap() - lo).abs() < 1e-8);
}

#[test]
fn tau_examples() {
    let cases = [
        (Family::Gaussian, Rotation::R0, vec![0.6], 0.41),
        (Family::Clayton, Rotation::R0, vec![2.0], 0.50),
        (Family::Frank, Rotation::R0, vec![7.0], 0.56),
        (Family::Gumbel, Rotation::R0, vec![2.0], 0.50),
        (Family::Joe, Rotation::R270, vec![2.0], -0.36),
        (Family::Bb1, Rotation::R0, vec![2.0, 1.5], 0.67),
        (Family::Tawn1, Rotation::R0, vec![3.0, 0.3], 0.25),
    ];
    for (f, r, p, t) in cases {
        let got = cop(f, r, &p).tau();
        assert!((got - t).abs() <= 0.005, "{f} {r:?}: {got}");
    }
    assert_eq!(params_from_tau(Family::Clayton, 0.5).unwrap(), vec![2.0]);
    assert_eq!(params_from_tau(Family::Gaussian, 0.0).unwrap(), vec![0.0]);
    // Frank: tau(7) = 0.5623, so the rounded 0.56 maps slightly below 7;
    // compare with a root of the Debye-integral tau computed here
    let frank_tau = |th: f64| {
        let d = adaptive(|t| if t == 0.0 { 1.0 } else { t / t.exp_m1() }, 0.0, th, 1e-13, 30).value / th;
        1.0 - 4.0 / th * (1.0 - d)
    };
    let (mut lo, mut hi) = (1.0, 20.0);
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if frank_tau(mid) < 0.56 { lo = mid } else { hi = mid }
    }
    let th = params_from_tau(Family::Frank, 0.56).unwrap()[0];
    assert!((th - lo).abs() < 1e-6, "{th} vs {lo}");
    assert!((params_from_tau(Family::Frank, frank_tau(7.0)).unwrap()[0] - 7.0).abs() < 0.01);
    assert!(matches!(params_from_tau(Family::Bb1, 0.5), Err(Error::Unsupported(_))));
    assert!(matches!(params_from_tau(Family::Amh, 0.5), Err(Error::OutOfRange { .. })));
}

#[test]
fn rotation_flips_tau_sign() {
    for c in all_copulas() {
        let base = c.rotated(match c.rotation() {
            Rotation::R0 => Rotation::R0,
            Rotation::R90 => Rotation::R270,
            Rotation::R180 => Rotation::R180,
            Rotation::R270 => Rotation::R90,
        });
        assert_eq!(base.rotation(), Rotation::R0);
        let expect = match c.rotation() {
            Rotation::R90 | Rotation::R270 => -base.tau(),
            _ => base.tau(),
        };
        assert!((c.tau() - expect).abs() < 1e-12, "{c}");
    }
}

#[test]
fn parameter_space_is_enforced() {
    use Family::*;
    for (f, p) in [
        (Gaussian, vec![1.0]),
        (StudentT, vec![0.5, 1.0]),
        (Clayton, vec![0.0]),
        (Gumbel, vec![0.9]),
        (Frank, vec![0.0]),
        (Joe, vec![1.0]),
        (Bb1, vec![0.0, 1.5]),
        (Bb6, vec![1.0, 0.5]),
        (Bb8, vec![2.0, 1.5]),
        (Tawn1, vec![1.0, 0.5]),
        (Tawn2, vec![2.0, 1.0]),
        (Amh, vec![1.0]),
        (Gaussian, vec![0.5, 0.5]),
    ] {
        assert!(
            matches!(BivariateCopula::new(f, Rotation::R0, &p), Err(Error::InvalidParams { .. })),
            "{f} {p:?}"
        );
    }
    let c = cop(Family::Clayton, Rotation::R0, &[2.0]);
    assert!(matches!(c.cdf(0.5, 1.5), Err(Error::Domain { .. })));
    assert!(matches!(c.hinv2(0.5, f64::NAN), Err(Error::Domain { .. })));
}

#[test]
fn json_form() {
    let c = cop(Family::Clayton, Rotation::R90, &[2.0]);
    assert_eq!(serde_json::to_string(&c).unwrap(), r#"{"family":"clayton","rotation":90,"params":[2.0]}"#);
    let back: BivariateCopula = serde_json::from_str(r#"{"family":"clayton","rotation":90,"params":[2.0]}"#).unwrap();
    assert_eq!(back, c);
    let neg: BivariateCopula = serde_json::from_str(r#"{"family":"clayton","rotation":0,"params":[-2.0]}"#)
        .or_else(|_| serde_json::from_str(r#"{"family":"joe","rotation":270,"params":[-2.0]}"#))
        .unwrap();
    assert!(neg.params()[0] > 0.0);
}

// ---- properties ----

/// `∬ pdf` over the unit square, taken on the normal-score scale where the
/// integrand is smooth.
fn total_mass(c: &BivariateCopula) -> f64 {
    let inner = |x: f64| {
        let (u, px) = (norm_cdf(x), norm_pdf(x));
        adaptive(|y| c.pdf_at(u, norm_cdf(y)) * norm_pdf(y), -8.5, 8.5, 1e-9, 12).value * px
    };
    adaptive(inner, -8.5, 8.5, 1e-8, 12).value
}

#[test]
fn densities_integrate_to_one() {
    for c in all_copulas() {
        let m = total_mass(&c);
        assert!((m - 1.0).abs() <= 1e-3, "{c}: {m}");
    }
}

#[test]
fn h_functions_are_derivatives_of_the_distribution_function() {
    let e = 1e-5;
    for (k, c) in all_copulas().iter().enumerate() {
        for [a, b] in uniforms(100, 1000 + k as u64) {
            let (u1, u2) = (0.02 + 0.96 * a, 0.02 + 0.96 * b);
            let d2 = (c.cdf_at(u1, u2 + e) - c.cdf_at(u1, u2 - e)) / (2.0 * e);
            let d1 = (c.cdf_at(u1 + e, u2) - c.cdf_at(u1 - e, u2)) / (2.0 * e);
            assert!((c.h2_at(u1, u2) - d2).abs() <= 1e-5, "{c} h2 at ({u1}, {u2})");
            assert!((c.h1_at(u1, u2) - d1).abs() <= 1e-5, "{c} h1 at ({u1}, {u2})");
        }
    }
}

#[test]
fn inverses_round_trip() {
    for (k, c) in all_copulas().iter().enumerate() {
        for [a, b] in uniforms(200, 2000 + k as u64) {
            let (x, y) = (0.01 + 0.98 * a, 0.01 + 0.98 * b);
            let u1 = c.hinv2_at(x, y);
            assert!((c.h2_at(u1, y) - x).abs() <= 1e-8, "{c}: h2(hinv2({x}, {y}))");
            assert!((c.hinv2_at(c.h2_at(x, y), y) - x).abs() <= 1e-8, "{c}: hinv2(h2({x}, {y}))");
            let u2 = c.hinv1_at(x, y);
            assert!((c.h1_at(y, u2) - x).abs() <= 1e-8, "{c}: h1(hinv1)");
        }
    }
}

#[test]
fn frechet_bounds_and_rectangle_inequality() {
    for (k, c) in all_copulas().iter().enumerate() {
        for [a, b] in uniforms(100, 3000 + k as u64) {
            let v = c.cdf_at(a, b);
            assert!(v >= (a + b - 1.0).max(0.0) - 1e-12 && v <= a.min(b) + 1e-12, "{c}");
            let (a2, b2) = ((a + 0.05).min(1.0), (b + 0.05).min(1.0));
            let vol = c.cdf_at(a2, b2) - c.cdf_at(a, b2) - c.cdf_at(a2, b) + v;
            assert!(vol >= -1e-10, "{c}: rectangle mass {vol}");
        }
    }
}

#[test]
fn four_quarter_turns_are_the_identity() {
    for c in all_copulas() {
        let full = c.rotated(Rotation::R90).rotated(Rotation::R90).rotated(Rotation::R90).rotated(Rotation::R90);
        assert_eq!(full, c);
        for [u, v] in uniforms(50, 4) {
            assert_eq!(full.pdf_at(u, v).to_bits(), c.pdf_at(u, v).to_bits());
        }
    }
}

#[test]
fn rotated_densities_follow_the_reflection_rules() {
    for (f, p) in settings() {
        let c = cop(f, Rotation::R0, &p);
        let (r90, r180, r270) = (c.rotated(Rotation::R90), c.rotated(Rotation::R180), c.rotated(Rotation::R270));
        for [u, v] in uniforms(50, 5) {
            let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs().max(1.0);
            assert!(close(r90.pdf_at(u, v), c.pdf_at(1.0 - v, u)), "{f} 90");
            assert!(close(r180.pdf_at(u, v), c.pdf_at(1.0 - u, 1.0 - v)), "{f} 180");
            assert!(close(r270.pdf_at(u, v), c.pdf_at(v, 1.0 - u)), "{f} 270");
        }
    }
}

#[test]
fn tau_matches_sample_kendall_tau() {
    for (k, (f, p)) in settings().into_iter().enumerate() {
        let c = cop(f, Rotation::R0, &p);
        let s = simulate(&c, 50_000, 77 + k as u64);
        let (x, y): (Vec<f64>, Vec<f64>) = s.iter().map(|q| (q[0], q[1])).unzip();
        let t = kendall_tau(&x, &y);
        assert!((t - c.tau()).abs() <= 0.01, "{c}: sample {t} vs {}", c.tau());
    }
}

#[test]
fn tau_inversion_round_trips() {
    for f in [Family::Gaussian, Family::Clayton, Family::Gumbel, Family::Frank, Family::Joe, Family::Amh] {
        for t in [0.05, 0.2, 0.3] {
            let p = params_from_tau(f, t).unwrap();
            assert!((cop(f, Rotation::R0, &p).tau() - t).abs() < 1e-6, "{f} {t}");
        }
    }
    for t in [-0.7, -0.2] {
        for f in [Family::Gaussian, Family::Frank] {
            let p = params_from_tau(f, t).unwrap();
            assert!((cop(f, Rotation::R0, &p).tau() - t).abs() < 1e-6);
        }
    }
}

proptest! {
    #[test]
    fn densities_are_nonnegative_and_finite(idx in 0usize..200, u in 1e-6f64..1.0, v in 1e-6f64..1.0) {
        let all = all_copulas();
        let c = &all[idx % all.len()];
        let d = c.pdf_at(u, v);
        prop_assert!(d.is_finite() && d >= 0.0, "{} at ({}, {}): {}", c, u, v, d);
    }

    #[test]
    fn h_functions_are_monotone(idx in 0usize..200, a in 0.0f64..1.0, b in 0.0f64..1.0, v in 0.001f64..0.999) {
        let all = all_copulas();
        let c = &all[idx % all.len()];
        let (lo, hi) = (a.min(b), a.max(b));
        prop_assert!(c.h2_at(lo, v) <= c.h2_at(hi, v) + 1e-12);
        prop_assert!(c.h1_at(v, lo) <= c.h1_at(v, hi) + 1e-12);
        prop_assert!((0.0..=1.0).contains(&c.h2_at(a, v)));
    }
}
