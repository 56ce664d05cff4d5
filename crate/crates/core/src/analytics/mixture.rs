//! Gamma-mixture law of the interference power.
//!
//! The `K - 1` interference terms are modelled as equicorrelated exponentials,
//! whose sum is a geometric mixture of gamma laws with common scale `d c`:
//!
//! ```text
//! f(y) = c/(b+c) * sum_i r^i * Gamma(y; K-1+i, d c),   r = b/(b+c)
//! ```
//!
//! The closed form is the same sum resummed:
//! `f(y) = r^{2-K} / (d (b+c)) * exp(-y/(d(b+c))) * P(K-2, r y/(d c))`,
//! where `P` is the regularized lower incomplete gamma. Evaluating `P`
//! directly avoids the difference of exponentials in the expanded form.

use serde::Serialize;

use super::special::{ln_factorial, ln_gamma_pdf, ln_reg_gamma, log_add_exp};
use crate::error::{Error, Result};
use crate::model::NetworkParams;

/// How `rho` is evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum RhoForm {
    /// Keeps the `K/(M P_c)` term.
    #[default]
    Exact,
    /// Drops `K/(M P_c)`, as is reasonable for high CSI quality.
    HighQuality,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GammaMixParams {
    pub rho: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub k: usize,
    pub m: usize,
    pub p_c: f64,
}

pub fn gamma_mix_params(p: &NetworkParams) -> Result<GammaMixParams> {
    gamma_mix_params_with(p, RhoForm::Exact)
}

pub fn gamma_mix_params_with(p: &NetworkParams, form: RhoForm) -> Result<GammaMixParams> {
    if p.k() < 2 {
        return Err(Error::param("K", "the interference law needs K >= 2"));
    }
    let (m, k, pc) = (p.m() as f64, p.k() as f64, p.p_c());
    let load = match form {
        RhoForm::Exact => k / (m * pc),
        RhoForm::HighQuality => 0.0,
    };
    let rho = (4.0 / pc + 10.0).sqrt() / ((2.0 + load) * m.sqrt());
    Ok(GammaMixParams {
        rho,
        b: (k - 1.0) * rho,
        c: 1.0 - rho,
        d: pc.powi(3) * (2.0 + load) / (k - 1.0),
        k: p.k(),
        m: p.m(),
        p_c: pc,
    })
}

impl GammaMixParams {
    /// Mixture ratio `b / (b + c)`.
    pub fn ratio(&self) -> f64 {
        self.b / (self.b + self.c)
    }

    /// Common scale `d c` of the mixture components.
    pub fn scale(&self) -> f64 {
        self.d * self.c
    }

    /// Eigenvalues of the covariance: `d (1 - rho)` with multiplicity `K - 2`,
    /// then `d (1 + (K - 2) rho)`.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut s = vec![self.d * (1.0 - self.rho); self.k - 2];
        s.push(self.d * (1.0 + (self.k as f64 - 2.0) * self.rho));
        s
    }

    /// `0 < rho < 1`; fails for very small `M`.
    pub fn is_valid(&self) -> bool {
        self.rho > 0.0 && self.rho < 1.0
    }

    /// Smallest `J` with geometric weight tail `r^{J+1}/(1-r) <= eps`.
    pub fn series_terms(&self, eps: f64) -> usize {
        let r = self.ratio();
        if r <= 0.0 {
            return 0;
        }
        let j = ((eps * (1.0 - r)).ln() / r.ln() - 1.0).ceil();
        j.max(0.0).min(MAX_TERMS as f64) as usize
    }
}

const MAX_TERMS: usize = 1_000_000;

/// Default truncation tolerance of the series form.
pub const SERIES_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PdfForm {
    /// Gamma-mixture series truncated after `J + 1` terms.
    Series(usize),
    Closed,
}

/// Series evaluation with its truncation record.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SeriesValue {
    pub value: f64,
    pub terms: usize,
    /// Upper bound on the omitted mixture weight.
    pub tail_bound: f64,
}

fn check(y: f64, g: &GammaMixParams) -> Result<()> {
    if g.k < 2 {
        return Err(Error::param("K", "the interference law needs K >= 2"));
    }
    if !(y >= 0.0) {
        return Err(Error::param("y", format!("density argument must be >= 0, got {y}")));
    }
    Ok(())
}

pub fn interference_pdf(y: f64, g: &GammaMixParams, form: PdfForm) -> Result<f64> {
    match form {
        PdfForm::Series(j) => interference_pdf_series(y, g, j).map(|s| s.value),
        PdfForm::Closed => interference_pdf_closed(y, g),
    }
}

pub fn interference_pdf_series(y: f64, g: &GammaMixParams, j: usize) -> Result<SeriesValue> {
    check(y, g)?;
    let r = g.ratio();
    let lw0 = (g.c / (g.b + g.c)).ln();
    let theta = g.scale();
    let mut acc = f64::NEG_INFINITY;
    for i in 0..=j {
        let lw = lw0 + i as f64 * r.ln();
        acc = log_add_exp(acc, lw + ln_gamma_pdf(y, (g.k - 1 + i) as u32, theta));
    }
    Ok(SeriesValue {
        value: acc.exp(),
        terms: j + 1,
        tail_bound: r.powi(j as i32 + 1),
    })
}

/// Log of the closed-form density.
pub fn ln_interference_pdf_closed(y: f64, g: &GammaMixParams) -> Result<f64> {
    check(y, g)?;
    let r = g.ratio();
    let k = g.k as u32;
    let base = (2.0 - g.k as f64) * r.ln() - (g.d * (g.b + g.c)).ln() - y / (g.d * (g.b + g.c));
    Ok(base + ln_reg_gamma(k - 2, r * y / g.scale()).0)
}

pub fn interference_pdf_closed(y: f64, g: &GammaMixParams) -> Result<f64> {
    ln_interference_pdf_closed(y, g).map(f64::exp)
}

/// The closed form as printed, a difference of two exponential terms. Loses
/// accuracy to cancellation for small `y` and large `K`; kept as a reference.
pub fn interference_pdf_expanded(y: f64, g: &GammaMixParams) -> Result<f64> {
    check(y, g)?;
    let (b, c, d) = (g.b, g.c, g.d);
    let pre = (b + c).powi(g.k as i32 - 3) / (d * b.powi(g.k as i32 - 2));
    let a = b * y / (d * c * (b + c));
    let sum: f64 = (0..=(g.k as i32 - 3)).map(|n| (n as f64 * a.ln() - ln_factorial(n as u32)).exp()).sum();
    Ok(pre * ((-y / (d * (b + c))).exp() - (-y / (d * c)).exp() * sum))
}

/// `(ln P(P_ie > x), ln P(P_ie <= x))` under the mixture law.
pub fn ln_interference_tail(x: f64, g: &GammaMixParams) -> Result<(f64, f64)> {
    check(x, g)?;
    let r = g.ratio();
    let s = x / g.scale();
    let k = g.k as u32;
    // S(x) = r^{2-K} e^{-(1-r) s} P(K-2, r s) + Q(K-2, s)
    let head = (2.0 - g.k as f64) * r.ln() - (1.0 - r) * s + ln_reg_gamma(k - 2, r * s).0;
    let ln_sf = log_add_exp(head, ln_reg_gamma(k - 2, s).1);
    Ok((ln_sf.min(0.0), (-ln_sf.min(0.0).exp()).ln_1p()))
}

/// Survival function `P(P_ie > x)`.
pub fn interference_sf(x: f64, g: &GammaMixParams) -> Result<f64> {
    ln_interference_tail(x, g).map(|t| t.0.exp())
}

/// Distribution function `P(P_ie <= x)`.
pub fn interference_cdf(x: f64, g: &GammaMixParams) -> Result<f64> {
    if x < 0.0 {
        return Ok(0.0);
    }
    ln_interference_tail(x, g).map(|t| t.1.exp())
}

/// Mixing weights of a sum of independent exponentials.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Weights {
    /// Moschopoulos recursion for arbitrary eigenvalues.
    Recursive,
    /// `delta_j = r^j`, valid when all but the largest eigenvalue coincide.
    Geometric(f64),
}

/// Sum of independent exponentials with means `sigma`, written as a gamma
/// mixture with scale `sigma_1 = min sigma`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrelatedGammaSum {
    sigma: Vec<f64>,
    weights: Weights,
    eps: f64,
}

impl CorrelatedGammaSum {
    pub fn new(mut sigma: Vec<f64>, weights: Weights) -> Result<Self> {
        if sigma.is_empty() {
            return Err(Error::param("sigma", "need at least one eigenvalue"));
        }
        if let Some(&s) = sigma.iter().find(|&&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::param("sigma", format!("eigenvalues must be positive, got {s}")));
        }
        sigma.sort_by(f64::total_cmp);
        Ok(Self {
            sigma,
            weights,
            eps: SERIES_EPS,
        })
    }

    /// The equicorrelated sum of the interference law.
    pub fn from_mixture(g: &GammaMixParams, weights: Weights) -> Result<Self> {
        Self::new(g.eigenvalues(), weights)
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.sigma
    }

    /// `prod_i sigma_1 / sigma_i`.
    pub fn prefactor(&self) -> f64 {
        let s1 = self.sigma[0];
        self.sigma.iter().map(|s| s1 / s).product()
    }

    /// Weights `delta_0 ..= delta_n`.
    pub fn deltas(&self, n: usize) -> Vec<f64> {
        match self.weights {
            Weights::Geometric(r) => (0..=n).map(|j| r.powi(j as i32)).collect(),
            Weights::Recursive => {
                let s1 = self.sigma[0];
                // g_m = sum_n (1 - sigma_1/sigma_n)^m
                let g: Vec<f64> = (0..=n)
                    .map(|m| self.sigma.iter().map(|s| (1.0 - s1 / s).powi(m as i32)).sum())
                    .collect();
                let mut d = vec![1.0; n + 1];
                for j in 0..n {
                    let acc: f64 = (1..=j + 1).map(|m| g[m] * d[j + 1 - m]).sum();
                    d[j + 1] = acc / (j + 1) as f64;
                }
                d
            }
        }
    }

    /// Density, truncated once the retained mixture weight is within `eps` of one.
    pub fn pdf(&self, y: f64) -> Result<SeriesValue> {
        if !(y >= 0.0) {
            return Err(Error::param("y", format!("density argument must be >= 0, got {y}")));
        }
        let c = self.prefactor();
        let s1 = self.sigma[0];
        let shape = self.sigma.len();
        let mut n = 64;
        loop {
            let d = self.deltas(n);
            let mut mass = 0.0;
            let mut value = 0.0;
            for (j, &dj) in d.iter().enumerate() {
                let w = c * dj;
                mass += w;
                value += w * ln_gamma_pdf(y, (shape + j) as u32, s1).exp();
                if 1.0 - mass <= self.eps {
                    return Ok(SeriesValue {
                        value,
                        terms: j + 1,
                        tail_bound: (1.0 - mass).max(0.0),
                    });
                }
            }
            if n >= MAX_TERMS {
                return Ok(SeriesValue {
                    value,
                    terms: n + 1,
                    tail_bound: 1.0 - mass,
                });
            }
            n = (n * 4).min(MAX_TERMS);
        }
    }
}
