//! Unrotated family kernels.
//!
//! Every function takes interior arguments `(u, v)`; `h1 = ∂C/∂u` is the
//! distribution of `v` given `u`, `h2 = ∂C/∂v` the distribution of `u` given
//! `v`. Archimedean-type families are written in log form so the corners stay
//! finite after clamping.

use std::f64::consts::PI;

use libm::lgamma as ln_gamma;
use statrs::function::gamma::digamma;

use crate::quadrature;
use crate::roots;
use crate::special::{debye1, norm_cdf, norm_quantile, t_cdf, t_quantile};

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Base {
    Indep,
    Gauss { rho: f64, s: f64 },
    T { rho: f64, nu: f64, s: f64, lconst: f64 },
    Clayton { th: f64 },
    Gumbel { th: f64 },
    Frank { th: f64, e1: f64 },
    Joe { th: f64 },
    Bb1 { th: f64, de: f64 },
    Bb6 { th: f64, de: f64 },
    Bb8 { th: f64, de: f64, eta: f64, m_de: f64 },
    Tawn { th: f64, psi1: f64, psi2: f64 },
    Amh { g: f64 },
}

#[inline]
fn log_add(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// `ln(e^z - 1)` for `z > 0`.
#[inline]
fn ln_expm1(z: f64) -> f64 {
    if z > 30.0 {
        z + (-(-z).exp()).ln_1p()
    } else {
        z.exp_m1().ln()
    }
}

/// `ln(1 + e^z)`.
#[inline]
fn softplus(z: f64) -> f64 {
    if z > 35.0 {
        z
    } else if z < -35.0 {
        z.exp()
    } else {
        z.exp().ln_1p()
    }
}

/// `ln(u^-θ + v^-θ - 1)` for Clayton.
#[inline]
fn clayton_ln_s(th: f64, u: f64, v: f64) -> f64 {
    let la = -th * u.ln();
    let lb = -th * v.ln();
    let m = la.max(lb);
    if m < 30.0 {
        (la.exp_m1() + lb.exp_m1()).ln_1p()
    } else {
        m + ((la - m).exp() + (lb - m).exp() - (-m).exp()).ln()
    }
}

/// `(ln w, w)` with `w = ((-ln u)^θ + (-ln v)^θ)^{1/θ}` for Gumbel.
#[inline]
fn gumbel_w(th: f64, x: f64, y: f64) -> (f64, f64) {
    let lw = log_add(th * x.ln(), th * y.ln()) / th;
    (lw, lw.exp())
}

/// BB6 per-margin terms: `(ln y, ln(1-t), ln(1-(1-t)^θ))` where
/// `y = -ln(1-(1-t)^θ)`.
#[inline]
fn bb6_margin(th: f64, t: f64) -> (f64, f64, f64) {
    let lbar = (-t).ln_1p();
    let lm = th * lbar;
    let m = lm.exp();
    let om = -lm.exp_m1();
    let y = if m < 0.5 { -(-m).ln_1p() } else { -om.ln() };
    (y.ln(), lbar, om.ln())
}

struct Pickands {
    a: f64,
    /// `A - t A'` and `A + (1 - t) A'`, written as sums of positive terms
    /// so they keep full precision near `t = 0` and `t = 1`.
    lx: f64,
    ly: f64,
    d2: f64,
}

#[inline]
fn pickands(th: f64, psi1: f64, psi2: f64, t: f64) -> Pickands {
    let lp1 = (psi1 * (1.0 - t)).ln();
    let lp2 = (psi2 * t).ln();
    let lb = log_add(th * lp1, th * lp2);
    let a = (1.0 - psi1) * (1.0 - t) + (1.0 - psi2) * t + (lb / th).exp();
    let lx = (1.0 - psi1) + psi1 * ((th - 1.0) * (lp1 - lb / th)).exp();
    let ly = (1.0 - psi2) + psi2 * ((th - 1.0) * (lp2 - lb / th)).exp();
    let d2 = (th - 1.0)
        * ((1.0 / th - 2.0) * lb + (th - 2.0) * (lp1 + lp2)).exp()
        * (psi1 * psi2).powi(2);
    Pickands { a, lx, ly, d2 }
}

/// Shared pieces of the Tawn evaluation at `(u, v)`.
struct TawnEval {
    log_c_cdf: f64,
    lx: f64,
    ly: f64,
    cross: f64,
    x: f64,
    y: f64,
}

#[inline]
fn tawn_eval(th: f64, psi1: f64, psi2: f64, u: f64, v: f64) -> TawnEval {
    let x = -u.ln();
    let y = -v.ln();
    let s = x + y;
    let t = y / s;
    let p = pickands(th, psi1, psi2, t);
    TawnEval {
        log_c_cdf: -s * p.a,
        lx: p.lx,
        ly: p.ly,
        cross: t * (1.0 - t) * p.d2 / s,
        x,
        y,
    }
}

impl Base {
    pub(crate) fn exchangeable(&self) -> bool {
        !matches!(self, Base::Tawn { psi1, psi2, .. } if psi1 != psi2)
    }

    pub(crate) fn gauss(rho: f64) -> Base {
        Base::Gauss {
            rho,
            s: (1.0 - rho * rho).sqrt(),
        }
    }

    pub(crate) fn student(rho: f64, nu: f64) -> Base {
        Base::T {
            rho,
            nu,
            s: (1.0 - rho * rho).sqrt(),
            lconst: t_lconst(rho, nu),
        }
    }

    pub(crate) fn frank(th: f64) -> Base {
        Base::Frank {
            th,
            e1: (-th).exp_m1(),
        }
    }

    pub(crate) fn bb8(th: f64, de: f64) -> Base {
        let lm = th * (-de).ln_1p();
        Base::Bb8 {
            th,
            de,
            eta: -lm.exp_m1(),
            m_de: lm.exp(),
        }
    }

    pub(crate) fn log_pdf(&self, u: f64, v: f64) -> f64 {
        match *self {
            Base::Indep => 0.0,
            Base::Gauss { rho, s } => {
                let x = norm_quantile(u);
                let y = norm_quantile(v);
                gauss_log_pdf_xy(rho, s, x, y)
            }
            Base::T { rho, nu, s, lconst } => {
                let x = t_quantile(u, nu);
                let y = t_quantile(v, nu);
                t_log_pdf_xy(rho, nu, s, lconst, x, y)
            }
            Base::Clayton { th } => {
                let ls = clayton_ln_s(th, u, v);
                th.ln_1p() - (1.0 + th) * (u.ln() + v.ln()) - (2.0 + 1.0 / th) * ls
            }
            Base::Gumbel { th } => {
                let x = -u.ln();
                let y = -v.ln();
                let (lw, w) = gumbel_w(th, x, y);
                -w + (th - 1.0) * (x.ln() + y.ln()) + x + y + (1.0 - 2.0 * th) * lw
                    + (w + th - 1.0).ln()
            }
            Base::Frank { th, e1 } => {
                let eu = (-th * u).exp_m1();
                let ev = (-th * v).exp_m1();
                (th * -e1).ln() - th * (u + v) - 2.0 * (e1 + eu * ev).abs().ln()
            }
            Base::Joe { th } => {
                let lub = (-u).ln_1p();
                let lvb = (-v).ln_1p();
                let a = (th * lub).exp();
                let b = (th * lvb).exp();
                let s = a + b - a * b;
                (1.0 / th - 2.0) * s.ln() + (th - 1.0) * (lub + lvb) + (th - 1.0 + s).ln()
            }
            Base::Bb1 { th, de } => {
                let lxu = ln_expm1(-th * u.ln());
                let lxv = ln_expm1(-th * v.ln());
                let ls = log_add(de * lxu, de * lxv);
                let lw = ls / de;
                let lg = softplus(lw);
                let sig = 1.0 / (1.0 + (-lw).exp());
                let lbr = lg + ((1.0 + th) / (th * de) * sig + (1.0 - 1.0 / de)).ln();
                (th * de).ln() - (1.0 / th + 2.0) * lg + (1.0 / de - 2.0) * ls + lbr
                    + (de - 1.0) * (lxu + lxv)
                    - (th + 1.0) * (u.ln() + v.ln())
            }
            Base::Bb6 { th, de } => {
                let (lyu, lbu, lomu) = bb6_margin(th, u);
                let (lyv, lbv, lomv) = bb6_margin(th, v);
                let ls = log_add(de * lyu, de * lyv);
                let lw = ls / de;
                let w = lw.exp();
                let lq = (-(-w).exp_m1()).ln();
                let lnf = (1.0 / th - 1.0) * lq - w + lw;
                let w_over = if w < 1e-8 { 1.0 } else { w / w.exp_m1() };
                let k = 1.0 - 1.0 / de + (w + (1.0 - 1.0 / th) * w_over) / de;
                lnf + (th * de).ln() - 2.0 * ls + k.ln() + (de - 1.0) * (lyu + lyv)
                    + (th - 1.0) * (lbu + lbv)
                    - lomu
                    - lomv
            }
            Base::Bb8 { th, de, eta, m_de } => {
                let lbu = (-de * u).ln_1p();
                let lbv = (-de * v).ln_1p();
                let mu = (th * lbu).exp();
                let mv = (th * lbv).exp();
                let omr = (mu * (1.0 - mv) + (mv - m_de)) / eta;
                let r = (-(th * lbu).exp_m1()) * (-(th * lbv).exp_m1()) / eta;
                (th * de / eta).ln() + (1.0 / th - 2.0) * omr.ln() + (1.0 - r / th).ln()
                    + (th - 1.0) * (lbu + lbv)
            }
            Base::Tawn { th, psi1, psi2 } => {
                let e = tawn_eval(th, psi1, psi2, u, v);
                e.log_c_cdf + e.x + e.y + (e.lx * e.ly + e.cross).ln()
            }
            Base::Amh { g } => {
                let d = 1.0 - g * (1.0 - u) * (1.0 - v);
                let num = 1.0 + g * ((1.0 + u) * (1.0 + v) - 3.0) + g * g * (1.0 - u) * (1.0 - v);
                num.ln() - 3.0 * d.ln()
            }
        }
    }

    pub(crate) fn cdf(&self, u: f64, v: f64) -> f64 {
        match *self {
            Base::Indep => u * v,
            Base::Gauss { .. } | Base::T { .. } => {
                // C(u, v) = ∫_0^v h2(u | s) ds
                let (a, b) = if u < v { (v, u) } else { (u, v) };
                quadrature::adaptive(|s| self.h2(a, s), 0.0, b, 1e-12, 40).value
            }
            Base::Clayton { th } => (-clayton_ln_s(th, u, v) / th).exp(),
            Base::Gumbel { th } => (-gumbel_w(th, -u.ln(), -v.ln()).1).exp(),
            Base::Frank { th, e1 } => {
                let eu = (-th * u).exp_m1();
                let ev = (-th * v).exp_m1();
                -(eu * ev / e1).ln_1p() / th
            }
            Base::Joe { th } => {
                let a = (th * (-u).ln_1p()).exp();
                let b = (th * (-v).ln_1p()).exp();
                let s = a + b - a * b;
                -(s.ln() / th).exp_m1()
            }
            Base::Bb1 { th, de } => {
                let lxu = ln_expm1(-th * u.ln());
                let lxv = ln_expm1(-th * v.ln());
                let lw = log_add(de * lxu, de * lxv) / de;
                (-softplus(lw) / th).exp()
            }
            Base::Bb6 { th, de } => {
                let (lyu, _, _) = bb6_margin(th, u);
                let (lyv, _, _) = bb6_margin(th, v);
                let w = (log_add(de * lyu, de * lyv) / de).exp();
                let lq = (-(-w).exp_m1()).ln();
                -(lq / th).exp_m1()
            }
            Base::Bb8 { th, de, eta, m_de } => {
                let mu = (th * (-de * u).ln_1p()).exp();
                let mv = (th * (-de * v).ln_1p()).exp();
                let omr = (mu * (1.0 - mv) + (mv - m_de)) / eta;
                -(omr.ln() / th).exp_m1() / de
            }
            Base::Tawn { th, psi1, psi2 } => {
                let x = -u.ln();
                let y = -v.ln();
                let s = x + y;
                (-s * pickands(th, psi1, psi2, y / s).a).exp()
            }
            Base::Amh { g } => u * v / (1.0 - g * (1.0 - u) * (1.0 - v)),
        }
    }

    /// `∂C/∂v`: distribution of the first argument given the second.
    pub(crate) fn h2(&self, u: f64, v: f64) -> f64 {
        let h = match *self {
            Base::Indep => u,
            Base::Gauss { rho, s } => {
                norm_cdf((norm_quantile(u) - rho * norm_quantile(v)) / s)
            }
            Base::T { rho, nu, s, .. } => {
                let x = t_quantile(u, nu);
                let y = t_quantile(v, nu);
                t_cdf(t_h_arg(rho, nu, s, x, y), nu + 1.0)
            }
            Base::Clayton { th } => {
                let ls = clayton_ln_s(th, u, v);
                (-(1.0 + th) * v.ln() - (1.0 + 1.0 / th) * ls).exp()
            }
            Base::Gumbel { th } => {
                let x = -u.ln();
                let y = -v.ln();
                let (lw, w) = gumbel_w(th, x, y);
                (-w + (1.0 - th) * lw + (th - 1.0) * y.ln() + y).exp()
            }
            Base::Frank { th, e1 } => {
                let eu = (-th * u).exp_m1();
                let ev = (-th * v).exp_m1();
                (-th * v).exp() * eu / (e1 + eu * ev)
            }
            Base::Joe { th } => {
                let lub = (-u).ln_1p();
                let lvb = (-v).ln_1p();
                let a = (th * lub).exp();
                let b = (th * lvb).exp();
                let s = a + b - a * b;
                ((1.0 / th - 1.0) * s.ln() + (th - 1.0) * lvb).exp() * -(th * lub).exp_m1()
            }
            Base::Bb1 { th, de } => {
                let lxu = ln_expm1(-th * u.ln());
                let lxv = ln_expm1(-th * v.ln());
                let ls = log_add(de * lxu, de * lxv);
                let lg = softplus(ls / de);
                (-(1.0 / th + 1.0) * lg + (1.0 / de - 1.0) * ls + (de - 1.0) * lxv
                    - (th + 1.0) * v.ln())
                .exp()
            }
            Base::Bb6 { th, de } => {
                let (lyu, _, _) = bb6_margin(th, u);
                let (lyv, lbv, lomv) = bb6_margin(th, v);
                let ls = log_add(de * lyu, de * lyv);
                let lw = ls / de;
                let w = lw.exp();
                let lq = (-(-w).exp_m1()).ln();
                let lnf = (1.0 / th - 1.0) * lq - w + lw;
                (lnf + (de - 1.0) * lyv + (th - 1.0) * lbv - ls - lomv).exp()
            }
            Base::Bb8 { th, de, eta, m_de } => {
                let lbu = (-de * u).ln_1p();
                let lbv = (-de * v).ln_1p();
                let mu = (th * lbu).exp();
                let mv = (th * lbv).exp();
                let omr = (mu * (1.0 - mv) + (mv - m_de)) / eta;
                let gu = -(th * lbu).exp_m1();
                gu / eta * ((1.0 / th - 1.0) * omr.ln() + (th - 1.0) * lbv).exp()
            }
            Base::Tawn { th, psi1, psi2 } => {
                let e = tawn_eval(th, psi1, psi2, u, v);
                (e.log_c_cdf + e.y).exp() * e.ly
            }
            Base::Amh { g } => {
                let d = 1.0 - g * (1.0 - u) * (1.0 - v);
                u * (1.0 - g * (1.0 - u)) / (d * d)
            }
        };
        h.clamp(0.0, 1.0)
    }

    /// `∂C/∂u`: distribution of the second argument given the first.
    pub(crate) fn h1(&self, u: f64, v: f64) -> f64 {
        match *self {
            Base::Tawn { th, psi1, psi2 } if psi1 != psi2 => {
                let e = tawn_eval(th, psi1, psi2, u, v);
                ((e.log_c_cdf + e.x).exp() * e.lx).clamp(0.0, 1.0)
            }
            _ => self.h2(v, u),
        }
    }

    /// Inverse of `h2` in its first argument.
    pub(crate) fn hinv2(&self, p: f64, v: f64) -> f64 {
        match *self {
            Base::Indep => p,
            Base::Gauss { rho, s } => norm_cdf(norm_quantile(p) * s + rho * norm_quantile(v)),
            Base::T { rho, nu, s, .. } => {
                let y = t_quantile(v, nu);
                let scale = ((nu + y * y) * s * s / (nu + 1.0)).sqrt();
                t_cdf(t_quantile(p, nu + 1.0) * scale + rho * y, nu)
            }
            Base::Clayton { th } => {
                let lv = v.ln();
                let big_l = p.ln() + (th + 1.0) * lv;
                let ls = -th * big_l / (1.0 + th);
                let lb = -th * lv;
                // u^-θ = S - v^-θ + 1
                let lut = if ls < 30.0 {
                    (ls.exp_m1() - lb.exp_m1()).ln_1p()
                } else {
                    ls + ((-ls).exp() - (lb - ls).exp()).ln_1p()
                };
                (-lut / th).exp()
            }
            Base::Frank { th, e1 } => {
                let a = p * e1 / (p + (1.0 - p) * (-th * v).exp());
                -a.ln_1p() / th
            }
            _ => self.hinv2_numeric(p, v),
        }
        .clamp(0.0, 1.0)
    }

    /// Inverse of `h1` in its second argument.
    pub(crate) fn hinv1(&self, p: f64, u: f64) -> f64 {
        if self.exchangeable() {
            return self.hinv2(p, u);
        }
        let f = |v: f64| self.h1(u, v);
        let df = |v: f64| self.log_pdf(u, v).exp();
        roots::invert_increasing(f, df, p, 0.0, 1.0).0
    }

    fn hinv2_numeric(&self, p: f64, v: f64) -> f64 {
        let f = |u: f64| self.h2(u, v);
        let df = |u: f64| self.log_pdf(u, v).exp();
        roots::invert_increasing(f, df, p, 0.0, 1.0).0
    }

    /// Kendall's tau of the unrotated copula.
    pub(crate) fn tau(&self) -> f64 {
        match *self {
            Base::Indep => 0.0,
            Base::Gauss { rho, .. } | Base::T { rho, .. } => 2.0 / PI * rho.asin(),
            Base::Clayton { th } => th / (th + 2.0),
            Base::Gumbel { th } => 1.0 - 1.0 / th,
            Base::Frank { th, .. } => frank_tau(th),
            Base::Joe { th } => joe_tau(th),
            Base::Bb1 { th, de } => 1.0 - 2.0 / (de * (th + 2.0)),
            Base::Bb6 { th, de } => {
                // φ/φ' = -y (1 - t̄^θ) / (δθ t̄^{θ-1})
                archimedean_tau(|t| {
                    let (ly, lbar, lom) = bb6_margin(th, t);
                    -(ly + lom - (th - 1.0) * lbar).exp() / (de * th)
                })
            }
            Base::Bb8 { th, de, eta, .. } => {
                // φ/φ' = g ln(g/η) / (θδ (1-δt)^{θ-1})
                // g/η = 1 + ((1-δ)^θ - (1-δt)^θ)/η, kept free of cancellation
                let tail = (th * (-de).ln_1p()).exp();
                archimedean_tau(|t| {
                    let lb = (-de * t).ln_1p();
                    let g = -(th * lb).exp_m1();
                    let log_ratio = ((tail - (th * lb).exp()) / eta).ln_1p();
                    g * log_ratio / (th * de * ((th - 1.0) * lb).exp())
                })
            }
            Base::Tawn { th, psi1, psi2 } => tawn_tau(th, psi1, psi2),
            Base::Amh { g } => amh_tau(g),
        }
    }
}

#[inline]
pub(crate) fn gauss_log_pdf_xy(rho: f64, s: f64, x: f64, y: f64) -> f64 {
    let s2 = s * s;
    -s.ln() - (rho * rho * (x * x + y * y) - 2.0 * rho * x * y) / (2.0 * s2)
}

/// Log normalizing constant of the t copula density.
pub(crate) fn t_lconst(rho: f64, nu: f64) -> f64 {
    ln_gamma(0.5 * (nu + 2.0)) + ln_gamma(0.5 * nu)
        - 2.0 * ln_gamma(0.5 * (nu + 1.0))
        - 0.5 * (1.0 - rho * rho).ln()
}

#[inline]
pub(crate) fn t_log_pdf_xy(rho: f64, nu: f64, s: f64, lconst: f64, x: f64, y: f64) -> f64 {
    let q = (x * x - 2.0 * rho * x * y + y * y) / (nu * s * s);
    lconst - 0.5 * (nu + 2.0) * q.ln_1p()
        + 0.5 * (nu + 1.0) * ((x * x / nu).ln_1p() + (y * y / nu).ln_1p())
}

#[inline]
fn t_h_arg(rho: f64, nu: f64, s: f64, x: f64, y: f64) -> f64 {
    (x - rho * y) / ((nu + y * y) * s * s / (nu + 1.0)).sqrt()
}

pub(crate) fn frank_tau(th: f64) -> f64 {
    if th.abs() < 1e-4 {
        return th / 9.0 - th.powi(3) / 900.0;
    }
    1.0 - 4.0 / th * (1.0 - debye1(th))
}

pub(crate) fn joe_tau(th: f64) -> f64 {
    if th == 1.0 {
        return 0.0;
    }
    // 1 + 2/(2-θ) (ψ(2) - ψ(2/θ + 1)); removable singularity at θ = 2
    let f = |t: f64| 1.0 + 2.0 / (2.0 - t) * (digamma(2.0) - digamma(2.0 / t + 1.0));
    if (th - 2.0).abs() < 1e-5 {
        let h = 1e-4;
        let lo = f(2.0 - h);
        let hi = f(2.0 + h);
        lo + (hi - lo) * (th - 2.0 + h) / (2.0 * h)
    } else {
        f(th)
    }
}

pub(crate) fn amh_tau(g: f64) -> f64 {
    if g.abs() < 1e-3 {
        return 2.0 * g / 9.0 + g * g / 18.0 + g.powi(3) / 45.0;
    }
    1.0 - 2.0 * (g + (1.0 - g).powi(2) * (-g).ln_1p()) / (3.0 * g * g)
}

/// `τ = 1 + 4 ∫_0^1 φ(t)/φ'(t) dt` for an Archimedean generator.
fn archimedean_tau<F: Fn(f64) -> f64>(ratio: F) -> f64 {
    let r = quadrature::adaptive(ratio, 0.0, 1.0, 1e-11, 30);
    1.0 + 4.0 * r.value
}

/// `τ = ∫_0^1 t(1-t) A''(t) / A(t) dt` for an extreme-value copula.
fn tawn_tau(th: f64, psi1: f64, psi2: f64) -> f64 {
    let f = |t: f64| {
        let p = pickands(th, psi1, psi2, t);
        t * (1.0 - t) * p.d2 / p.a
    };
    quadrature::adaptive(f, 0.0, 1.0, 1e-11, 30).value
}
