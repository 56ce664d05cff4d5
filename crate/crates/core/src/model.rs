//! Network operating points and the exponent algebra of the SINR scaling law.
//!
//! Scaling exponents are exact rationals so that the equality constraint of the
//! determinism condition and the boundary of the favourable region are decided
//! without rounding.

use num_rational::Ratio;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact rational scaling exponent.
pub type Exponent = Ratio<i64>;

/// Pilot training configuration: pilot length and per-node training power.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Training {
    pub tau: usize,
    /// Linear training power. `f64::INFINITY` encodes perfect CSI.
    pub p_t: f64,
}

impl Training {
    /// Total training energy `tau * P_t`.
    pub fn energy(&self) -> f64 {
        self.tau as f64 * self.p_t
    }
}

/// CSI quality `P_c = E_t / (E_t + 1)` with `E_t = tau * P_t`.
///
/// An infinite training power yields `P_c = 1`.
pub fn csi_quality(tau: usize, p_t: f64) -> Result<f64> {
    if tau == 0 {
        return Err(Error::param("tau", "pilot length must be at least 1"));
    }
    if !(p_t > 0.0) {
        return Err(Error::param("P_t", format!("training power must be > 0, got {p_t}")));
    }
    let e_t = tau as f64 * p_t;
    if e_t.is_infinite() {
        return Ok(1.0);
    }
    Ok(e_t / (e_t + 1.0))
}

/// A concrete operating point of the relay network.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NetworkParams {
    m: usize,
    k: usize,
    p: f64,
    q: f64,
    training: Training,
    p_c: f64,
}

impl NetworkParams {
    /// Builds an operating point from an explicit training configuration.
    pub fn new(m: usize, k: usize, p: f64, q: f64, training: Training) -> Result<Self> {
        if k == 0 {
            return Err(Error::param("K", "need at least one source-destination pair"));
        }
        if m < k {
            return Err(Error::Dimension(format!("relay antennas M={m} below pair count K={k}")));
        }
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::param("P", format!("source power must be finite and > 0, got {p}")));
        }
        if !(q > 0.0 && q.is_finite()) {
            return Err(Error::param("Q", format!("relay power must be finite and > 0, got {q}")));
        }
        if training.tau < k {
            return Err(Error::param(
                "tau",
                format!("pilot length {} shorter than K={k}", training.tau),
            ));
        }
        let p_c = csi_quality(training.tau, training.p_t)?;
        Ok(Self {
            m,
            k,
            p,
            q,
            training,
            p_c,
        })
    }

    /// Builds an operating point from a target CSI quality, synthesizing the
    /// minimum-length training (`tau = K`) that realizes it.
    pub fn with_csi_quality(m: usize, k: usize, p: f64, q: f64, p_c: f64) -> Result<Self> {
        if !(p_c > 0.0 && p_c <= 1.0) {
            return Err(Error::param("P_c", format!("CSI quality must lie in (0, 1], got {p_c}")));
        }
        let tau = k.max(1);
        let p_t = if p_c == 1.0 {
            f64::INFINITY
        } else {
            p_c / (tau as f64 * (1.0 - p_c))
        };
        let mut params = Self::new(m, k, p, q, Training { tau, p_t })?;
        // keep the requested value bit-exact instead of the round trip through E_t
        params.p_c = p_c;
        Ok(params)
    }

    pub fn m(&self) -> usize {
        self.m
    }
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn p(&self) -> f64 {
        self.p
    }
    pub fn q(&self) -> f64 {
        self.q
    }
    pub fn p_c(&self) -> f64 {
        self.p_c
    }
    pub fn training(&self) -> Training {
        self.training
    }
    /// Total training energy `E_t`.
    pub fn training_energy(&self) -> f64 {
        self.training.energy()
    }

    /// Copy with a different antenna count.
    pub fn with_m(&self, m: usize) -> Result<Self> {
        let mut out = Self::new(m, self.k, self.p, self.q, self.training)?;
        out.p_c = self.p_c;
        Ok(out)
    }
}

/// Scaling exponents of `K`, `1/P`, `1/Q` and `1/P_c` in the antenna count,
/// together with the base constants that pin them down at finite `M`:
/// `K = k0 M^r_k`, `1/P = p0 M^r_p`, `1/Q = q0 M^r_q`, `1/P_c = c0 M^r_c`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingExponents {
    r_k: Exponent,
    r_p: Exponent,
    r_q: Exponent,
    r_c: Exponent,
    bases: BaseConstants,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaseConstants {
    pub k0: f64,
    pub p0: f64,
    pub q0: f64,
    pub c0: f64,
}

impl Default for BaseConstants {
    fn default() -> Self {
        Self {
            k0: 1.0,
            p0: 1.0,
            q0: 1.0,
            c0: 1.0,
        }
    }
}

fn check_unit(name: &'static str, r: Exponent) -> Result<()> {
    if r < Exponent::zero() || r > Exponent::one() {
        return Err(Error::ExponentOutOfRange {
            name,
            value: r.to_string(),
        });
    }
    Ok(())
}

impl ScalingExponents {
    /// Exponents with unit base constants.
    pub fn new(r_k: Exponent, r_p: Exponent, r_q: Exponent, r_c: Exponent) -> Result<Self> {
        Self::with_bases(r_k, r_p, r_q, r_c, BaseConstants::default())
    }

    pub fn with_bases(
        r_k: Exponent,
        r_p: Exponent,
        r_q: Exponent,
        r_c: Exponent,
        bases: BaseConstants,
    ) -> Result<Self> {
        check_unit("r_k", r_k)?;
        check_unit("r_p", r_p)?;
        check_unit("r_q", r_q)?;
        check_unit("r_c", r_c)?;
        for (name, v) in [
            ("k0", bases.k0),
            ("p0", bases.p0),
            ("q0", bases.q0),
            ("c0", bases.c0),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("base constant must be finite and > 0, got {v}")));
            }
        }
        Ok(Self {
            r_k,
            r_p,
            r_q,
            r_c,
            bases,
        })
    }

    pub fn r_k(&self) -> Exponent {
        self.r_k
    }
    pub fn r_p(&self) -> Exponent {
        self.r_p
    }
    pub fn r_q(&self) -> Exponent {
        self.r_q
    }
    pub fn r_c(&self) -> Exponent {
        self.r_c
    }
    pub fn bases(&self) -> BaseConstants {
        self.bases
    }
}

/// Which per-source power scaling limits the SINR exponent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BindingTerm {
    /// `r_p > r_k + r_q`: the source transmit power.
    SourcePower,
    /// `r_k + r_q >= r_p`: the relay power allocated per user (ties land here).
    RelayPerUserPower,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SinrScaleReport {
    pub r_s: Exponent,
    pub favourable: bool,
    pub deterministic_sufficient: bool,
    pub linear_regime: bool,
    pub binding_term: BindingTerm,
}

fn worst_power_exponent(e: &ScalingExponents) -> (Exponent, BindingTerm) {
    let relay = e.r_k + e.r_q;
    if e.r_p > relay {
        (e.r_p, BindingTerm::SourcePower)
    } else {
        (relay, BindingTerm::RelayPerUserPower)
    }
}

/// SINR exponent `r_s = 1 - r_c - max(r_p, r_k + r_q)`.
pub fn sinr_exponent(e: &ScalingExponents) -> Exponent {
    Exponent::one() - e.r_c - worst_power_exponent(e).0
}

/// Full scaling report for an exponent tuple.
pub fn scaling_report(e: &ScalingExponents) -> SinrScaleReport {
    let (_, binding_term) = worst_power_exponent(e);
    let r_s = sinr_exponent(e);
    SinrScaleReport {
        r_s,
        favourable: r_s >= Exponent::zero(),
        deterministic_sufficient: is_asymptotically_deterministic(e, r_s),
        linear_regime: linear_sinr_condition(e),
        binding_term,
    }
}

/// Favourable-SINR region: `r_c + max(r_p, r_k + r_q) <= 1`.
pub fn is_favourable(e: &ScalingExponents) -> bool {
    e.r_c + worst_power_exponent(e).0 <= Exponent::one()
}

/// Sufficient condition for an asymptotically deterministic SINR, with `r_s`
/// supplied by the caller (it need not come from [`sinr_exponent`]).
pub fn is_asymptotically_deterministic(e: &ScalingExponents, r_s: Exponent) -> bool {
    let one = Exponent::one();
    let two = Exponent::from_integer(2);
    let three = Exponent::from_integer(3);
    let (worst, _) = worst_power_exponent(e);
    let c1 = r_s + e.r_c + worst == one;
    let c2 = two * r_s + two * e.r_c + e.r_k <= one;
    let c3 = two * r_s + three * e.r_c + two * e.r_p <= two;
    // c4 holds by construction of `ScalingExponents`
    c1 && c2 && c3
}

/// Average SINR grows linearly in `M` iff every exponent is zero.
pub fn linear_sinr_condition(e: &ScalingExponents) -> bool {
    e.r_c.is_zero() && e.r_p.is_zero() && e.r_q.is_zero() && e.r_k.is_zero()
}

fn pow_m(m: usize, r: Exponent) -> f64 {
    let m = m as f64;
    if r.is_zero() {
        1.0
    } else if *r.denom() == 1 {
        m.powi(*r.numer() as i32)
    } else if *r.denom() == 2 {
        m.sqrt().powi(*r.numer() as i32)
    } else {
        m.powf(*r.numer() as f64 / *r.denom() as f64)
    }
}

/// Concretizes the exponent model at antenna count `m`.
///
/// `K = max(1, floor(k0 M^r_k))`, powers and CSI quality from the base
/// constants, `P_c` clamped to `(0, 1]`, training synthesized with `tau = K`.
pub fn realize_parameters(e: &ScalingExponents, m: usize) -> Result<NetworkParams> {
    if m == 0 {
        return Err(Error::param("M", "antenna count must be at least 1"));
    }
    let b = e.bases;
    let k_real = b.k0 * pow_m(m, e.r_k);
    // absorb representation error on exact integers such as floor(sqrt(100))
    let k = ((k_real * (1.0 + 1e-12)).floor() as usize).max(1);
    if k > m {
        return Err(Error::Dimension(format!("realized K={k} exceeds M={m}")));
    }
    let p = 1.0 / (b.p0 * pow_m(m, e.r_p));
    let q = 1.0 / (b.q0 * pow_m(m, e.r_q));
    let p_c = (1.0 / (b.c0 * pow_m(m, e.r_c))).min(1.0);
    NetworkParams::with_csi_quality(m, k, p, q, p_c)
}
