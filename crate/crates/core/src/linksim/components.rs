//! Per-trial physics of the MRC/MRT relay: power normalization, the six
//! normalized SINR components and the instantaneous SINR.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{inner, EstimatedChannel};
use crate::error::{Error, Result};
use crate::model::NetworkParams;

/// Normalized powers of one trial for the probed user.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SinrComponents {
    /// Desired signal.
    pub p_se: f64,
    /// Average multi-user interference per interferer.
    pub p_ie: f64,
    /// Forwarded relay noise.
    pub p_ne: f64,
    pub p_e1: f64,
    pub p_e2: f64,
    pub p_e3: f64,
    /// Probed user (0-based).
    pub user: usize,
    /// Set when `K = 1`: there is no interferer and `p_ie` is reported as 0.
    pub degenerate: bool,
}

impl SinrComponents {
    pub fn as_array(&self) -> [f64; 6] {
        [self.p_se, self.p_ie, self.p_ne, self.p_e1, self.p_e2, self.p_e3]
    }

    /// Componentwise mean of several users' components.
    pub fn average(items: &[SinrComponents]) -> SinrComponents {
        let n = items.len() as f64;
        let mut out = SinrComponents::default();
        for c in items {
            out.p_se += c.p_se / n;
            out.p_ie += c.p_ie / n;
            out.p_ne += c.p_ne / n;
            out.p_e1 += c.p_e1 / n;
            out.p_e2 += c.p_e2 / n;
            out.p_e3 += c.p_e3 / n;
            out.degenerate |= c.degenerate;
        }
        out
    }
}

pub const COMPONENT_NAMES: [&str; 6] = ["P_se", "P_ie", "P_ne", "P_e1", "P_e2", "P_e3"];

/// Closed-form relay gain `a_e^2 = Q / (P K P_c^3 M^3 (1 + K/(M P_c) + 1/(P P_c M)))`.
pub fn amplification_factor_sq(p: &NetworkParams) -> f64 {
    let (m, k) = (p.m() as f64, p.k() as f64);
    let pc = p.p_c();
    p.q() / (p.p() * k * pc.powi(3) * m.powi(3) * (1.0 + k / (m * pc) + 1.0 / (p.p() * pc * m)))
}

/// Relay-noise term of the SINR denominator, `K P_c^3 (1 + K/(M P_c) + 1/(P P_c M)) / Q`,
/// which equals `1 / (a_e^2 P M^3)` for the closed-form gain.
pub fn relay_noise_term(p: &NetworkParams) -> f64 {
    1.0 / (amplification_factor_sq(p) * p.p() * (p.m() as f64).powi(3))
}

/// Components computed directly from their definitions with explicit
/// length-`M` products. `user` is 0-based.
pub fn sinr_components(est: &EstimatedChannel, p: &NetworkParams, user: usize) -> Result<SinrComponents> {
    let (m, k) = (est.m(), est.k());
    if user >= k {
        return Err(Error::param("user", format!("index {user} out of range for K={k}")));
    }
    if m != p.m() || k != p.k() {
        return Err(Error::Dimension(format!(
            "channel is {m}x{k}, parameters say M={}, K={}",
            p.m(),
            p.k()
        )));
    }
    let pc = p.p_c();
    let mf = m as f64;
    let f_hat = &est.f_hat;
    let g_hat = &est.g_hat;
    let g_true = est.truth.g.lane(user);

    // row vector x Ghat^H Fhat^H, given the K coefficients x Ghat^H
    let through_f_hat = |coef: &[Complex64]| -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); m];
        for (c, col) in coef.iter().zip(f_hat.lanes()) {
            for (o, f) in out.iter_mut().zip(col) {
                *o += c * f.conj();
            }
        }
        out
    };
    let row_dot = |row: &[Complex64], col: &[Complex64]| -> Complex64 { row.iter().zip(col).map(|(a, b)| a * b).sum() };
    let norm_sq = |v: &[Complex64]| -> f64 { v.iter().map(|z| z.norm_sqr()).sum() };

    // ghat_i Ghat^H Fhat^H
    let c_hat: Vec<Complex64> = g_hat.lanes().map(|gk| row_dot(g_hat.lane(user), &conj(gk))).collect();
    let r = through_f_hat(&c_hat);
    // g_i Ghat^H Fhat^H
    let c_true: Vec<Complex64> = g_hat.lanes().map(|gk| row_dot(g_true, &conj(gk))).collect();
    let w = through_f_hat(&c_true);

    let p_se = row_dot(&r, f_hat.lane(user)).norm_sqr() / mf.powi(4);
    let (p_ie, degenerate) = if k == 1 {
        (0.0, true)
    } else {
        let s: f64 = (0..k)
            .filter(|&j| j != user)
            .map(|j| row_dot(&w, est.truth.f.lane(j)).norm_sqr())
            .sum();
        (s / ((k - 1) as f64 * mf.powi(3)), false)
    };
    let p_ne = norm_sq(&w) / mf.powi(3);

    let mut double_sum = Complex64::default();
    for n in 0..k {
        for mm in 0..k {
            let ff = inner(f_hat.lane(n), f_hat.lane(mm));
            let gg = row_dot(g_hat.lane(mm), &conj(g_hat.lane(n)));
            double_sum += ff * gg;
        }
    }
    let p_e1 = (1.0 - pc).powi(2) * double_sum.re / mf.powi(3);
    let p_e2 = (1.0 - pc) * norm_sq(&r) / mf.powi(3);

    // Ghat^H Fhat^H fhat_i
    let z: Vec<Complex64> = f_hat.lanes().map(|fk| inner(fk, f_hat.lane(user))).collect();
    let mut v = vec![Complex64::default(); m];
    for (zk, gk) in z.iter().zip(g_hat.lanes()) {
        for (o, g) in v.iter_mut().zip(gk) {
            *o += g.conj() * zk;
        }
    }
    let p_e3 = (1.0 - pc) * norm_sq(&v) / mf.powi(3);

    Ok(SinrComponents {
        p_se,
        p_ie,
        p_ne,
        p_e1,
        p_e2,
        p_e3,
        user,
        degenerate,
    })
}

fn conj(v: &[Complex64]) -> Vec<Complex64> {
    v.iter().map(|z| z.conj()).collect()
}

/// Sum of the SINR denominator, excluding nothing.
pub fn sinr_denominator(c: &SinrComponents, p: &NetworkParams) -> f64 {
    denominator_with_relay_term(c, p, relay_noise_term(p))
}

fn denominator_with_relay_term(c: &SinrComponents, p: &NetworkParams, relay: f64) -> f64 {
    (p.k() as f64 - 1.0) * c.p_ie + c.p_ne / p.p() + c.p_e1 + c.p_e2 + c.p_e3 + relay
}

/// Instantaneous SINR with the closed-form relay gain.
pub fn instantaneous_sinr(c: &SinrComponents, p: &NetworkParams) -> f64 {
    p.m() as f64 * c.p_se / sinr_denominator(c, p)
}

/// Instantaneous SINR for an arbitrary relay gain `a_e^2`.
pub fn sinr_with_gain(c: &SinrComponents, p: &NetworkParams, gain_sq: f64) -> f64 {
    let relay = 1.0 / (gain_sq * p.p() * (p.m() as f64).powi(3));
    p.m() as f64 * c.p_se / denominator_with_relay_term(c, p, relay)
}

/// Mean relay transmit power per unit gain for one realization, averaged over
/// the data symbols and relay noise: `P ||Ghat^H Fhat^H F||_F^2 + ||Ghat^H Fhat^H||_F^2`.
pub fn relay_power_per_unit_gain(est: &EstimatedChannel, p: &NetworkParams) -> f64 {
    let k = est.k();
    let f_hat = &est.f_hat;
    let g_hat = &est.g_hat;
    let f = &est.truth.f;
    // B = Ghat Ghat^H, A = Fhat^H Fhat, C = Fhat^H F
    let mut b = vec![Complex64::default(); k * k];
    let mut a = vec![Complex64::default(); k * k];
    let mut c = vec![Complex64::default(); k * k];
    for i in 0..k {
        for j in 0..k {
            b[i * k + j] = inner(g_hat.lane(j), g_hat.lane(i));
            a[i * k + j] = inner(f_hat.lane(i), f_hat.lane(j));
            c[i * k + j] = inner(f_hat.lane(i), f.lane(j));
        }
    }
    // tr(B C C^H) and tr(B A)
    let mut t_signal = Complex64::default();
    let mut t_noise = Complex64::default();
    for i in 0..k {
        for j in 0..k {
            let mut cc = Complex64::default();
            for l in 0..k {
                cc += c[j * k + l] * c[i * k + l].conj();
            }
            t_signal += b[i * k + j] * cc;
            t_noise += b[i * k + j] * a[j * k + i];
        }
    }
    p.p() * t_signal.re + t_noise.re
}
