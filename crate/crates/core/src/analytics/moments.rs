//! Dominant-term moments of the SINR components and the rate lower bound.

use serde::Serialize;

use crate::model::NetworkParams;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeanScv {
    pub mean: f64,
    pub scv: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ComponentMoments {
    pub p_se: MeanScv,
    pub p_ie: MeanScv,
    pub p_ne: MeanScv,
    pub p_e1: MeanScv,
    pub p_e2: MeanScv,
    pub p_e3: MeanScv,
    /// Set when `M < 64`, where the dominant-term expansion is unreliable.
    pub small_m_warning: bool,
}

impl ComponentMoments {
    pub fn as_array(&self) -> [MeanScv; 6] {
        [self.p_se, self.p_ie, self.p_ne, self.p_e1, self.p_e2, self.p_e3]
    }
}

/// Mean of the inter-user interference component, `P_c^3 (2 + K/(M P_c))`.
pub fn mean_p_ie(p: &NetworkParams) -> f64 {
    let (m, k, pc) = (p.m() as f64, p.k() as f64, p.p_c());
    pc.powi(3) * (2.0 + k / (m * pc))
}

/// SCV of the interference component. Undefined (NaN) for `K = 1`.
pub fn scv_p_ie(p: &NetworkParams) -> f64 {
    let (m, k, pc) = (p.m() as f64, p.k() as f64, p.p_c());
    if p.k() < 2 {
        return f64::NAN;
    }
    let num = 4.0 / (k - 1.0)
        + (8.0 + 10.0 * pc) / (pc * m)
        + (k * k + 18.0 * (k - 2.0) * pc) / ((k - 1.0) * pc * pc * m * m);
    let den = 4.0 + k * k / (m * m * pc * pc) + 4.0 * k / (m * pc);
    num / den
}

pub fn component_moments(p: &NetworkParams) -> ComponentMoments {
    let (m, k, pc) = (p.m() as f64, p.k() as f64, p.p_c());
    let pc2 = pc * pc;
    let pc3 = pc2 * pc;
    let e2 = MeanScv {
        mean: pc3 * (1.0 - pc),
        scv: 1.0,
    };
    ComponentMoments {
        p_se: MeanScv {
            mean: pc2 * pc2,
            scv: 8.0 / m,
        },
        p_ie: MeanScv {
            mean: mean_p_ie(p),
            scv: scv_p_ie(p),
        },
        p_ne: MeanScv {
            mean: pc3 + k * pc2 / m,
            scv: (2.0 + 5.0 * pc - 2.0 * pc2) / (m * pc + k * k / (m * pc) + 2.0 * k),
        },
        p_e1: MeanScv {
            mean: k / m * pc2 * (1.0 - pc).powi(2),
            scv: 3.0 / k,
        },
        p_e2: e2,
        p_e3: e2,
        small_m_warning: p.m() < 64,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RateBound {
    pub tilde_sinr: f64,
    /// Bits per channel use.
    pub c_lb: f64,
}

/// Jensen lower bound on the per-pair achievable rate.
pub fn rate_lower_bound(p: &NetworkParams) -> RateBound {
    let (m, k, pc) = (p.m() as f64, p.k() as f64, p.p_c());
    let (pw, q) = (p.p(), p.q());
    let a = k / (m * pc);
    let b = 1.0 / (m * pw * pc);
    let den = 2.0 * a + a * a + b + a * b + a / q + a * a / q + a * b / q;
    let tilde_sinr = 1.0 / den;
    RateBound {
        tilde_sinr,
        c_lb: 0.5 * tilde_sinr.ln_1p() / std::f64::consts::LN_2,
    }
}
