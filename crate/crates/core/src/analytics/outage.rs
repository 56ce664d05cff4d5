//! Linear-regime SINR law: density, outage probability and average bit error rate.
//!
//! In the linear regime the SINR is approximated by
//! `M / ((K-1) P_ie / P_c^4 + xi)` with deterministic `xi`, so every
//! SINR statistic is a transform of the interference law in [`super::mixture`].

use serde::Serialize;

use super::mixture::{gamma_mix_params, ln_interference_pdf_closed, ln_interference_tail, GammaMixParams};
use super::special::erfc;
use crate::error::{Error, Result};
use crate::model::NetworkParams;
use crate::quad::{integrate, Tolerance};

/// Deterministic part of the linear-regime SINR denominator. `P` and `Q`
/// may be infinite.
pub fn xi_parts(m: f64, k: f64, p: f64, q: f64, pc: f64) -> f64 {
    (1.0 / p + k / q) * (1.0 / pc + k / (m * pc * pc)) + 2.0 * (1.0 / pc - 1.0) + k / m * (1.0 / pc - 1.0).powi(2)
}

pub fn xi(p: &NetworkParams) -> f64 {
    xi_parts(p.m() as f64, p.k() as f64, p.p(), p.q(), p.p_c())
}

/// `M / (P_ie (K-1)/P_c^4 + xi)`; a vanishing denominator yields `+inf`.
pub fn linear_regime_sinr_parts(p_ie: f64, m: f64, k: f64, p: f64, q: f64, pc: f64) -> f64 {
    let den = p_ie * (k - 1.0) / pc.powi(4) + xi_parts(m, k, p, q, pc);
    if den <= 0.0 {
        f64::INFINITY
    } else {
        m / den
    }
}

pub fn linear_regime_sinr(p_ie: f64, p: &NetworkParams) -> f64 {
    linear_regime_sinr_parts(p_ie, p.m() as f64, p.k() as f64, p.p(), p.q(), p.p_c())
}

/// Factor by which a "much greater than" precondition must hold.
pub const VALIDITY_FACTOR: f64 = 10.0;

/// Flags for the high-SNR approximations. Advisory only.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Validity {
    /// Training energy `E_t >= 10`.
    pub training: bool,
    /// `M >= 10 * gamma * (2 d c (1 + c/b) K (K-1) + 1/P + K/Q)`.
    pub antennas: bool,
    /// `M` divided by the right-hand side above without the factor.
    pub antenna_margin: f64,
}

impl Validity {
    pub fn ok(&self) -> bool {
        self.training && self.antennas
    }

    /// `|`-joined list of failed checks, or `ok`.
    pub fn flags(&self) -> String {
        let mut v = Vec::new();
        if !self.training {
            v.push("low-training-energy");
        }
        if !self.antennas {
            v.push("few-antennas");
        }
        if v.is_empty() {
            "ok".into()
        } else {
            v.join("|")
        }
    }
}

/// Quantities shared by the outage and error-rate expressions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OutageContext {
    pub xi: f64,
    /// Exponent offset `D` of the high-SNR forms.
    pub d_const: f64,
    pub mix: GammaMixParams,
    m: f64,
    k: f64,
    p_c: f64,
    inv_p: f64,
    k_over_q: f64,
    e_t: f64,
}

impl OutageContext {
    pub fn new(p: &NetworkParams) -> Result<Self> {
        Self::with_mix(p, gamma_mix_params(p)?)
    }

    /// Uses caller-supplied mixture parameters, e.g. for sensitivity studies.
    pub fn with_mix(p: &NetworkParams, mix: GammaMixParams) -> Result<Self> {
        if p.k() < 2 {
            return Err(Error::param("K", "outage analysis needs K >= 2"));
        }
        let (m, k, pc) = (p.m() as f64, p.k() as f64, p.p_c());
        let xi = xi(p);
        let d_const = (2.0 * (1.0 - pc) + 1.0 / p.p() + k / p.q()) * pc.powi(3) / ((k - 1.0) * mix.d * (mix.b + mix.c));
        Ok(Self {
            xi,
            d_const,
            mix,
            m,
            k,
            p_c: pc,
            inv_p: 1.0 / p.p(),
            k_over_q: k / p.q(),
            e_t: p.training_energy(),
        })
    }

    /// Upper end `M / xi` of the SINR support.
    pub fn support_end(&self) -> f64 {
        self.m / self.xi
    }

    /// `(K-1) d (b+c)`, the scale of the dominant tail.
    fn tail_scale(&self) -> f64 {
        (self.k - 1.0) * self.mix.d * (self.mix.b + self.mix.c)
    }

    fn validity_for(&self, gamma: f64) -> Validity {
        let g = &self.mix;
        let load = 2.0 * g.d * g.c * (1.0 + g.c / g.b) * self.k * (self.k - 1.0) + self.inv_p + self.k_over_q;
        let margin = self.m / (gamma * load);
        Validity {
            training: self.e_t >= VALIDITY_FACTOR,
            antennas: margin >= VALIDITY_FACTOR,
            antenna_margin: margin,
        }
    }

    /// Preconditions of the high-SNR outage form at `gamma`.
    pub fn outage_validity(&self, gamma: f64) -> Validity {
        self.validity_for(gamma)
    }

    /// Preconditions of the error-rate approximation.
    pub fn aber_validity(&self) -> Validity {
        self.validity_for(1.0)
    }

    /// Interference level at which the SINR equals `gamma`.
    pub fn interference_threshold(&self, gamma: f64) -> f64 {
        (self.m / gamma - self.xi) * self.p_c.powi(4) / (self.k - 1.0)
    }

    /// `f_SINR(r) = f_Pie(y(r)) * M P_c^4 / ((K-1) r^2)` on `(0, M/xi)`, else 0.
    pub fn sinr_pdf(&self, r: f64) -> f64 {
        self.sinr_pdf_ln(r).exp()
    }

    /// The density as a sum of `K - 1` explicit terms, for cross-checking.
    pub fn sinr_pdf_expanded(&self, r: f64) -> f64 {
        if !(r > 0.0 && r < self.support_end()) {
            return 0.0;
        }
        let GammaMixParams { b, c, d, .. } = self.mix;
        let (m, k, pc) = (self.m, self.k, self.p_c);
        let u = m / r - self.xi;
        let first = (b + c).powf(k - 3.0) * m * pc.powi(4) / (r * r * (k - 1.0) * d * b.powf(k - 2.0))
            * (-u * pc.powi(4) / ((k - 1.0) * d * (b + c))).exp();
        let mut rest = 0.0;
        for n in 0..=(self.k as i32 - 3) {
            let nf = n as f64;
            rest += (b + c).powf(k - nf - 3.0) * m * pc.powf(4.0 * nf + 4.0)
                / (super::special::ln_factorial(n as u32).exp() * ((k - 1.0) * d).powf(nf + 1.0) * c.powf(nf) * b.powf(k - nf - 2.0))
                * u.powf(nf)
                / (r * r)
                * (-u * pc.powi(4) / ((k - 1.0) * d * c)).exp();
        }
        first - rest
    }

    /// Outage probability at `gamma` (linear scale).
    pub fn outage(&self, gamma: f64, form: OutageForm) -> Result<Probability> {
        if !(gamma > 0.0) || gamma.is_nan() {
            return Err(Error::param("gamma_th", format!("threshold must be positive, got {gamma}")));
        }
        if gamma >= self.support_end() {
            return Ok(Probability::from_ln(0.0));
        }
        let ln = match form {
            OutageForm::Exact => ln_interference_tail(self.interference_threshold(gamma), &self.mix)?.0,
            OutageForm::HighSnr => self.ln_high_snr(gamma),
        };
        Ok(Probability::from_ln(ln))
    }

    fn ln_ratio_term(&self) -> f64 {
        (2.0 - self.k) * self.mix.ratio().ln()
    }

    fn ln_high_snr(&self, gamma: f64) -> f64 {
        self.ln_ratio_term() + self.d_const - self.m * self.p_c.powi(4) / (gamma * self.tail_scale())
    }

    /// The outage probability written with upper incomplete gamma functions,
    /// evaluated term by term. Cancels badly in the far tail.
    pub fn outage_expanded(&self, gamma: f64) -> Result<f64> {
        if gamma >= self.support_end() {
            return Ok(1.0);
        }
        let GammaMixParams { b, c, d, .. } = self.mix;
        let r = self.mix.ratio();
        let x = self.interference_threshold(gamma);
        let s = x / (d * c);
        let mut sum = 0.0;
        for n in 0..=(self.k as i64 - 3) {
            let g = super::special::upper_incomplete_gamma(n as u32 + 1, s)?;
            sum += r.powf(n as f64 - self.k + 2.0) * g / super::special::ln_factorial(n as u32).exp();
        }
        Ok(r.powf(2.0 - self.k) * (-x / (d * (b + c))).exp() - c / (b + c) * sum)
    }

    /// Average bit error rate of `A erfc(sqrt(B r))` under the high-SNR approximation.
    pub fn aber(&self, a: f64, b: f64) -> Result<Probability> {
        check_modulation(a, b)?;
        let ln = a.ln() + self.ln_ratio_term() + self.d_const
            - 2.0 * self.p_c * self.p_c * (b * self.m / self.tail_scale()).sqrt();
        Ok(Probability::from_ln(ln))
    }

    /// Error rate as the integral of `A erfc(sqrt(B r))` against [`Self::sinr_pdf`].
    ///
    /// The integrand is rescaled by the high-SNR estimate and split on a
    /// geometric grid so the narrow peak is resolved even for very large `M`.
    pub fn aber_quadrature(&self, a: f64, b: f64) -> Result<Probability> {
        check_modulation(a, b)?;
        let shift = -self.aber(1.0, b)?.ln;
        let end = self.support_end();
        let mut edges = vec![0.0];
        let mut x = 1e-3f64.min(end / 2.0);
        while x < end {
            edges.push(x);
            x *= 1.25;
        }
        edges.push(end);
        let tol = Tolerance {
            abs: 0.0,
            rel: 1e-10,
            max_intervals: 2_000,
        };
        let mut total = 0.0;
        for w in edges.windows(2) {
            let f = |r: f64| {
                let pdf = self.sinr_pdf_ln(r);
                if pdf == f64::NEG_INFINITY {
                    return 0.0;
                }
                (libm::log(erfc((b * r).sqrt())) + pdf + shift).exp()
            };
            total += integrate(f, w[0], w[1], tol)?.value;
        }
        Ok(Probability::from_ln(a.ln() + total.ln() - shift))
    }

    fn sinr_pdf_ln(&self, r: f64) -> f64 {
        if !(r > 0.0 && r < self.support_end()) {
            return f64::NEG_INFINITY;
        }
        let y = self.interference_threshold(r);
        match ln_interference_pdf_closed(y, &self.mix) {
            Ok(l) => l + (self.m * self.p_c.powi(4) / ((self.k - 1.0) * r * r)).ln(),
            Err(_) => f64::NEG_INFINITY,
        }
    }

    /// Threshold at which `aber(A, B) = A * outage(gamma, HighSnr)`.
    pub fn aber_bridge_threshold(&self, b: f64) -> f64 {
        (self.m * self.p_c.powi(4) / (4.0 * b * self.tail_scale())).sqrt()
    }
}

fn check_modulation(a: f64, b: f64) -> Result<()> {
    if !(a > 0.0 && a <= 1.0) {
        return Err(Error::param("A", format!("need 0 < A <= 1, got {a}")));
    }
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::param("B", format!("need B > 0, got {b}")));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutageForm {
    /// Exact tail of the mixture law.
    Exact,
    /// Dominant-exponential approximation.
    HighSnr,
}

/// Smallest probability reported on the linear channel.
pub const LINEAR_FLOOR: f64 = 1e-300;

/// A probability carried in both linear and log domains.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Probability {
    /// Linear value clamped to `[0, 1]`; 0 when below [`LINEAR_FLOOR`].
    pub value: f64,
    /// Unclamped natural log.
    pub ln: f64,
    /// The approximation exceeded one and was clamped.
    pub clamped: bool,
    /// The value is only available through `ln`.
    pub underflow: bool,
}

impl Probability {
    pub fn from_ln(ln: f64) -> Self {
        let clamped = ln > 0.0;
        let underflow = ln < LINEAR_FLOOR.ln();
        let value = if clamped {
            1.0
        } else if underflow {
            0.0
        } else {
            ln.exp()
        };
        Self {
            value,
            ln,
            clamped,
            underflow,
        }
    }

    pub fn log10(&self) -> f64 {
        self.ln / std::f64::consts::LN_10
    }
}

/// Outage probability at a linear threshold.
pub fn outage_probability(gamma: f64, p: &NetworkParams, form: OutageForm) -> Result<Probability> {
    OutageContext::new(p)?.outage(gamma, form)
}

/// High-SNR average bit error rate.
pub fn aber(p: &NetworkParams, a: f64, b: f64) -> Result<Probability> {
    OutageContext::new(p)?.aber(a, b)
}

/// Linear-regime SINR density.
pub fn sinr_pdf(r: f64, p: &NetworkParams) -> Result<f64> {
    Ok(OutageContext::new(p)?.sinr_pdf(r))
}
