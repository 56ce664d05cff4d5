//! Empirical statistics over sample sets.

use std::io::Write;

use serde::Serialize;

use super::components::COMPONENT_NAMES;
use super::engine::SampleSet;
use crate::analytics::special::erfc;
use crate::error::{Error, Result};

/// Mean, variance and squared coefficient of variation of one sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Moments {
    pub n: usize,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    /// `variance / mean^2`, NaN when the mean is not positive.
    pub scv: f64,
    /// Standard error of the mean.
    pub std_err: f64,
}

/// Welford's one-pass accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct Welford {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn finish(&self) -> Result<Moments> {
        if self.n == 0 {
            return Err(Error::EmptySamples);
        }
        let variance = if self.n > 1 { self.m2 / (self.n - 1) as f64 } else { 0.0 };
        let scv = if self.mean > 0.0 { variance / (self.mean * self.mean) } else { f64::NAN };
        Ok(Moments {
            n: self.n,
            mean: self.mean,
            variance,
            scv,
            std_err: (variance / self.n as f64).sqrt(),
        })
    }
}

pub fn moments(xs: &[f64]) -> Result<Moments> {
    let mut w = Welford::default();
    xs.iter().for_each(|&x| w.push(x));
    w.finish()
}

/// Bin-edge rule for [`Histogram::build`].
#[derive(Clone, Debug, PartialEq)]
pub enum Binning {
    FreedmanDiaconis,
    Count(usize),
    Edges(Vec<f64>),
}

const MAX_BINS: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Histogram {
    /// `bins + 1` increasing edges.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// Samples outside explicit edges.
    pub outside: u64,
}

impl Histogram {
    /// Bins are half-open except the last, which includes its right edge.
    /// With the automatic rules every sample lands in a bin.
    pub fn build(xs: &[f64], binning: &Binning) -> Result<Self> {
        if xs.is_empty() {
            return Err(Error::EmptySamples);
        }
        let edges = match binning {
            Binning::Edges(e) => {
                if e.len() < 2 || e.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::param("edges", "need at least two strictly increasing edges"));
                }
                e.clone()
            }
            Binning::Count(n) => uniform_edges(xs, (*n).clamp(1, MAX_BINS)),
            Binning::FreedmanDiaconis => {
                let mut sorted = xs.to_vec();
                sorted.sort_by(f64::total_cmp);
                let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
                let range = sorted[sorted.len() - 1] - sorted[0];
                let h = 2.0 * iqr / (xs.len() as f64).cbrt();
                let bins = if h > 0.0 && range > 0.0 { (range / h).ceil() as usize } else { 1 };
                uniform_edges(xs, bins.clamp(1, MAX_BINS))
            }
        };
        let nb = edges.len() - 1;
        let (lo, hi) = (edges[0], edges[nb]);
        let mut counts = vec![0u64; nb];
        let mut outside = 0;
        for &x in xs {
            if !(x >= lo && x <= hi) {
                outside += 1;
                continue;
            }
            // first edge strictly greater than x, minus one
            let idx = edges.partition_point(|&e| e <= x).saturating_sub(1).min(nb - 1);
            counts[idx] += 1;
        }
        Ok(Self { edges, counts, outside })
    }

    /// Counts normalized by total sample count and bin width.
    pub fn density(&self) -> Vec<f64> {
        let total = (self.counts.iter().sum::<u64>() + self.outside) as f64;
        self.counts
            .iter()
            .zip(self.edges.windows(2))
            .map(|(&c, w)| c as f64 / (total * (w[1] - w[0])))
            .collect()
    }
}

fn uniform_edges(xs: &[f64], bins: usize) -> Vec<f64> {
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        hi = lo + lo.abs().max(1.0) * 1e-9;
    }
    let w = (hi - lo) / bins as f64;
    let mut e: Vec<f64> = (0..=bins).map(|i| lo + w * i as f64).collect();
    e[bins] = hi;
    e
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let f = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] * (1.0 - f) + sorted[i + 1] * f
    } else {
        sorted[i]
    }
}

/// Fraction of samples strictly below `threshold`.
pub fn outage(xs: &[f64], threshold: f64) -> f64 {
    xs.iter().filter(|&&x| x < threshold).count() as f64 / xs.len() as f64
}

/// Per-sample error probability `A erfc(sqrt(B r))`.
pub fn ber(a: f64, b: f64, sinr: f64) -> f64 {
    a * erfc((b * sinr.max(0.0)).sqrt())
}

/// Sample mean of [`ber`].
pub fn aber(xs: &[f64], a: f64, b: f64) -> f64 {
    xs.iter().map(|&r| ber(a, b, r)).sum::<f64>() / xs.len() as f64
}

/// `0.5 log2(1 + SINR)` per sample; its mean is the achievable rate.
pub fn rate_samples(xs: &[f64]) -> Vec<f64> {
    xs.iter().map(|&r| 0.5 * r.ln_1p() / std::f64::consts::LN_2).collect()
}

/// One-sample Kolmogorov-Smirnov statistic against `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(xs: &[f64], cdf: F) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let c = cdf(x);
        d = d.max(c - i as f64 / n).max((i + 1) as f64 / n - c);
    }
    Ok(d)
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Least-squares line through `(ln x, ln y)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
}

pub fn loglog_slope(x: &[f64], y: &[f64]) -> Result<LogLogFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::param("fit", "need at least two paired points"));
    }
    if x.iter().chain(y).any(|&v| !(v > 0.0)) {
        return Err(Error::param("fit", "log-log fit needs positive data"));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::param("fit", "x values are all equal"));
    }
    let slope = sxy / sxx;
    Ok(LogLogFit {
        slope,
        intercept: my - slope * mx,
    })
}

/// Gray-mapped constellation constants of `A erfc(sqrt(B r))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Modulation {
    pub a: f64,
    pub b: f64,
}

impl Modulation {
    pub const BPSK: Modulation = Modulation { a: 0.5, b: 1.0 };
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NamedMoments {
    pub name: &'static str,
    #[serde(flatten)]
    pub moments: Moments,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OutagePoint {
    pub threshold: f64,
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmpiricalStats {
    pub trials: usize,
    pub seed: u64,
    pub components: Vec<NamedMoments>,
    pub sinr: Moments,
    pub histogram: Histogram,
    pub outage: Vec<OutagePoint>,
    pub rate: f64,
    pub rate_std_err: f64,
    pub aber: Option<f64>,
}

pub fn empirical_stats(
    s: &SampleSet,
    thresholds: &[f64],
    modulation: Option<Modulation>,
    binning: &Binning,
) -> Result<EmpiricalStats> {
    let sinr = s.sinr();
    let components = COMPONENT_NAMES
        .iter()
        .enumerate()
        .map(|(i, &name)| Ok(NamedMoments { name, moments: moments(&s.component(i))? }))
        .collect::<Result<Vec<_>>>()?;
    let rate = moments(&rate_samples(&sinr))?;
    Ok(EmpiricalStats {
        trials: s.trials,
        seed: s.seed,
        components,
        sinr: moments(&sinr)?,
        histogram: Histogram::build(&sinr, binning)?,
        outage: thresholds
            .iter()
            .map(|&t| OutagePoint { threshold: t, probability: outage(&sinr, t) })
            .collect(),
        rate: rate.mean,
        rate_std_err: rate.std_err,
        aber: modulation.map(|m| aber(&sinr, m.a, m.b)),
    })
}

impl EmpiricalStats {
    pub fn write_json<W: Write>(&self, w: &mut W) -> Result<()> {
        serde_json::to_writer_pretty(&mut *w, self).map_err(|e| Error::Io(e.to_string()))?;
        writeln!(w)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn welford_matches_two_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| 1e8 + (i as f64 * 0.37).sin()).collect();
        let m = moments(&xs).unwrap();
        let mean = xs.iter().sum::<f64>() / 1000.0;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 999.0;
        assert!((m.mean - mean).abs() < 1e-6);
        assert!((m.variance - var).abs() < 1e-6 * var);
        assert!((m.scv - var / (mean * mean)).abs() < 1e-20);
    }

    #[test]
    fn empty_samples_are_errors() {
        assert!(matches!(moments(&[]), Err(Error::EmptySamples)));
        assert!(Histogram::build(&[], &Binning::FreedmanDiaconis).is_err());
    }

    #[test]
    fn bpsk_at_zero_sinr_is_one_half() {
        assert_eq!(aber(&[0.0; 10], 0.5, 1.0), 0.5);
    }

    #[test]
    fn outage_counts_strictly_below() {
        assert_eq!(outage(&[1.0, 2.0, 3.0, 4.0], 3.0), 0.5);
    }

    #[test]
    fn ks_against_exact_uniform() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        let d = ks_statistic(&xs, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!((d - 0.005).abs() < 1e-12);
        assert_eq!(ks_two_sample(&xs, &xs).unwrap(), 0.0);
        let shifted: Vec<f64> = xs.iter().map(|x| x + 10.0).collect();
        assert_eq!(ks_two_sample(&xs, &shifted).unwrap(), 1.0);
    }

    #[test]
    fn slope_of_power_law() {
        let x = [64.0, 128.0, 256.0, 512.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-0.75)).collect();
        let fit = loglog_slope(&x, &y).unwrap();
        assert!((fit.slope + 0.75).abs() < 1e-12);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn explicit_edges_track_outliers() {
        let h = Histogram::build(&[0.5, 1.0, 1.5, 2.0, 9.0], &Binning::Edges(vec![0.0, 1.0, 2.0])).unwrap();
        assert_eq!(h.counts, vec![1, 3]);
        assert_eq!(h.outside, 1);
    }

    proptest! {
        #[test]
        fn histogram_counts_sum_to_n(xs in proptest::collection::vec(-1e3f64..1e3, 1..400), bins in 1usize..50) {
            for b in [Binning::FreedmanDiaconis, Binning::Count(bins)] {
                let h = Histogram::build(&xs, &b).unwrap();
                prop_assert_eq!(h.counts.iter().sum::<u64>() as usize, xs.len());
                prop_assert_eq!(h.outside, 0);
                prop_assert!(h.edges.windows(2).all(|w| w[1] > w[0]));
            }
        }

        #[test]
        fn scv_is_variance_over_mean_squared(xs in proptest::collection::vec(0.1f64..10.0, 2..100)) {
            let m = moments(&xs).unwrap();
            prop_assert!((m.scv - m.variance / (m.mean * m.mean)).abs() <= 1e-12 * m.scv.max(1e-12));
        }
    }
}
