//! i.i.d. Rayleigh channels and their MMSE estimates.
//!
//! The source-relay matrix `F` is `M x K` and stored column-major so that each
//! source's channel `f_k` is contiguous; the relay-destination matrix `G` is
//! `K x M` and stored row-major so that each destination's channel `g_k` is
//! contiguous. Either way a "lane" is the length-`M` vector of one user.

use std::f64::consts::PI;
use std::io::{Read, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::rng::{RngStream, Slot};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layout {
    RowMajor,
    ColMajor,
}

/// Dense complex matrix with an explicit storage layout.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    layout: Layout,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize, layout: Layout) -> Self {
        Self {
            rows,
            cols,
            layout,
            data: vec![Complex64::default(); rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn layout(&self) -> Layout {
        self.layout
    }
    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }
    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    fn index(&self, r: usize, c: usize) -> usize {
        debug_assert!(r < self.rows && c < self.cols);
        match self.layout {
            Layout::RowMajor => r * self.cols + c,
            Layout::ColMajor => c * self.rows + r,
        }
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[self.index(r, c)]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        let i = self.index(r, c);
        self.data[i] = v;
    }

    fn lane_len(&self) -> usize {
        match self.layout {
            Layout::RowMajor => self.cols,
            Layout::ColMajor => self.rows,
        }
    }

    /// Contiguous row (row-major) or column (column-major) `idx`.
    pub fn lane(&self, idx: usize) -> &[Complex64] {
        let n = self.lane_len();
        &self.data[idx * n..(idx + 1) * n]
    }

    pub fn lanes(&self) -> impl Iterator<Item = &[Complex64]> {
        self.data.chunks_exact(self.lane_len())
    }

    /// Elementwise `self - other`; layouts and shapes must match.
    pub fn sub(&self, other: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols, self.layout), (other.rows, other.cols, other.layout));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            layout: self.layout,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// `sum_m conj(a_m) b_m`.
#[inline]
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        re += x.re * y.re + x.im * y.im;
        im += x.re * y.im - x.im * y.re;
    }
    Complex64::new(re, im)
}

/// True channels: `F` (`M x K`, column-major) and `G` (`K x M`, row-major).
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization {
    pub f: CMatrix,
    pub g: CMatrix,
}

/// MMSE estimates with their error matrices `E_f = F_hat - F`, `E_g = G_hat - G`.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimatedChannel {
    pub truth: ChannelRealization,
    pub f_hat: CMatrix,
    pub g_hat: CMatrix,
    pub e_f: CMatrix,
    pub e_g: CMatrix,
    pub p_c: f64,
}

impl EstimatedChannel {
    pub fn m(&self) -> usize {
        self.f_hat.rows()
    }
    pub fn k(&self) -> usize {
        self.f_hat.cols()
    }
}

fn check_dims(m: usize, k: usize) -> Result<()> {
    if k == 0 || m < k {
        return Err(Error::Dimension(format!("need M >= K >= 1, got M={m}, K={k}")));
    }
    Ok(())
}

/// Draws `F` and `G` with i.i.d. `CN(0, 1)` entries.
pub fn draw_channels(m: usize, k: usize, rng: &mut RngStream) -> Result<ChannelRealization> {
    check_dims(m, k)?;
    let mut f = CMatrix::zeros(m, k, Layout::ColMajor);
    let mut g = CMatrix::zeros(k, m, Layout::RowMajor);
    rng.fill_cn(Slot::ChannelF, 0, 1.0, f.as_mut_slice());
    rng.fill_cn(Slot::ChannelG, 0, 1.0, g.as_mut_slice());
    Ok(ChannelRealization { f, g })
}

/// Orthonormal pilot book `Phi` (`tau x K`, row-major) and training power.
#[derive(Clone, Debug, PartialEq)]
pub struct PilotConfig {
    tau: usize,
    p_t: f64,
    phi: Vec<Complex64>,
    k: usize,
}

impl PilotConfig {
    /// First `K` columns of the unitary `tau`-point DFT matrix.
    pub fn dft(tau: usize, k: usize, p_t: f64) -> Result<Self> {
        if tau < k || k == 0 {
            return Err(Error::param("tau", format!("pilot length {tau} shorter than K={k}")));
        }
        if !(p_t > 0.0 && p_t.is_finite()) {
            return Err(Error::param("P_t", format!("training power must be finite and > 0, got {p_t}")));
        }
        let norm = 1.0 / (tau as f64).sqrt();
        let mut phi = Vec::with_capacity(tau * k);
        for t in 0..tau {
            for c in 0..k {
                // reduce t*c modulo tau first so the phase stays exact for large books
                let idx = (t * c) % tau;
                let angle = -2.0 * PI * idx as f64 / tau as f64;
                phi.push(Complex64::from_polar(norm, angle));
            }
        }
        Ok(Self { tau, p_t, phi, k })
    }

    pub fn tau(&self) -> usize {
        self.tau
    }
    pub fn p_t(&self) -> f64 {
        self.p_t
    }
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn phi(&self, t: usize, c: usize) -> Complex64 {
        self.phi[t * self.k + c]
    }
    pub fn csi_quality(&self) -> f64 {
        let e = self.tau as f64 * self.p_t;
        e / (e + 1.0)
    }

    /// Largest entry of `|Phi^H Phi - I|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in 0..self.k {
            for b in 0..self.k {
                let mut s = Complex64::default();
                for t in 0..self.tau {
                    s += self.phi(t, a).conj() * self.phi(t, b);
                }
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((s - target).norm());
            }
        }
        worst
    }

    /// Runs one training phase for a set of `K` length-`M` lanes (the columns
    /// of `F`, or the rows of `G` under reciprocity) and returns the estimated
    /// lanes together with the filtered noise `N Phi^*`.
    fn train(&self, lanes: &[Complex64], m: usize, noise_slot: Slot, rng: &mut RngStream) -> (Vec<Complex64>, Vec<Complex64>) {
        let k = self.k;
        let e_t = self.tau as f64 * self.p_t;
        let amp = e_t.sqrt();
        // received pilots, M x tau row-major: Y = sqrt(E_t) X Phi^T + N
        let mut y = vec![Complex64::default(); m * self.tau];
        rng.fill_cn(noise_slot, 0, 1.0, &mut y);
        for ant in 0..m {
            for t in 0..self.tau {
                let mut s = Complex64::default();
                for c in 0..k {
                    s += lanes[c * m + ant] * self.phi(t, c);
                }
                y[ant * self.tau + t] += amp * s;
            }
        }
        // MMSE: X_hat = Y Phi^* / sqrt(E_t) * E_t / (1 + E_t)
        let gain = amp / (1.0 + e_t);
        let mut est = vec![Complex64::default(); m * k];
        let mut filtered_noise = vec![Complex64::default(); m * k];
        for c in 0..k {
            for ant in 0..m {
                let mut s = Complex64::default();
                for t in 0..self.tau {
                    s += y[ant * self.tau + t] * self.phi(t, c).conj();
                }
                est[c * m + ant] = gain * s;
                filtered_noise[c * m + ant] = s - amp * lanes[c * m + ant];
            }
        }
        (est, filtered_noise)
    }
}

/// Filtered pilot noise `N Phi^*` of both links, kept for diagnostics.
#[derive(Clone, Debug)]
pub struct PilotObservation {
    pub estimate: EstimatedChannel,
    /// `M x K` column-major.
    pub noise_f: CMatrix,
    /// `M x K` column-major (one column per destination).
    pub noise_g: CMatrix,
}

/// MMSE estimation through explicit pilot transmission on both hops.
pub fn mmse_estimate_pilot(ch: &ChannelRealization, pc: &PilotConfig, rng: &mut RngStream) -> Result<EstimatedChannel> {
    Ok(mmse_estimate_pilot_observed(ch, pc, rng)?.estimate)
}

/// As [`mmse_estimate_pilot`], also returning the filtered pilot noise.
pub fn mmse_estimate_pilot_observed(
    ch: &ChannelRealization,
    pc: &PilotConfig,
    rng: &mut RngStream,
) -> Result<PilotObservation> {
    let m = ch.f.rows();
    let k = ch.f.cols();
    if pc.k() != k || pc.tau() < k {
        return Err(Error::param(
            "tau",
            format!("pilot book is {}x{} but K={k}", pc.tau(), pc.k()),
        ));
    }
    let (f_est, nf) = pc.train(ch.f.as_slice(), m, Slot::PilotNoiseF, rng);
    // destinations transmit pilots: the relay observes G^T, whose columns are the rows of G
    let (g_est, ng) = pc.train(ch.g.as_slice(), m, Slot::PilotNoiseG, rng);

    let mut f_hat = CMatrix::zeros(m, k, Layout::ColMajor);
    f_hat.as_mut_slice().copy_from_slice(&f_est);
    let mut g_hat = CMatrix::zeros(k, m, Layout::RowMajor);
    g_hat.as_mut_slice().copy_from_slice(&g_est);
    let mut noise_f = CMatrix::zeros(m, k, Layout::ColMajor);
    noise_f.as_mut_slice().copy_from_slice(&nf);
    let mut noise_g = CMatrix::zeros(m, k, Layout::ColMajor);
    noise_g.as_mut_slice().copy_from_slice(&ng);

    let e_f = f_hat.sub(&ch.f);
    let e_g = g_hat.sub(&ch.g);
    Ok(PilotObservation {
        estimate: EstimatedChannel {
            truth: ch.clone(),
            f_hat,
            g_hat,
            e_f,
            e_g,
            p_c: pc.csi_quality(),
        },
        noise_f,
        noise_g,
    })
}

/// Distributional shortcut: `F_hat ~ CN(0, P_c)` and `E_f ~ CN(0, 1 - P_c)`
/// independently, `F = F_hat - E_f` (same for `G`).
pub fn mmse_estimate_direct(m: usize, k: usize, p_c: f64, rng: &mut RngStream) -> Result<EstimatedChannel> {
    check_dims(m, k)?;
    if !(p_c > 0.0 && p_c <= 1.0) {
        return Err(Error::param("P_c", format!("CSI quality must lie in (0, 1], got {p_c}")));
    }
    let mut f_hat = CMatrix::zeros(m, k, Layout::ColMajor);
    let mut g_hat = CMatrix::zeros(k, m, Layout::RowMajor);
    let mut e_f = CMatrix::zeros(m, k, Layout::ColMajor);
    let mut e_g = CMatrix::zeros(k, m, Layout::RowMajor);
    rng.fill_cn(Slot::EstimateF, 0, p_c, f_hat.as_mut_slice());
    rng.fill_cn(Slot::EstimateG, 0, p_c, g_hat.as_mut_slice());
    if p_c < 1.0 {
        rng.fill_cn(Slot::ErrorF, 0, 1.0 - p_c, e_f.as_mut_slice());
        rng.fill_cn(Slot::ErrorG, 0, 1.0 - p_c, e_g.as_mut_slice());
    }
    let truth = ChannelRealization {
        f: f_hat.sub(&e_f),
        g: g_hat.sub(&e_g),
    };
    Ok(EstimatedChannel {
        truth,
        f_hat,
        g_hat,
        e_f,
        e_g,
        p_c,
    })
}

/// Matrix identifiers of the binary dump header.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u32)]
pub enum DumpKind {
    F = 0,
    G = 1,
    FHat = 2,
    GHat = 3,
    ErrorF = 4,
    ErrorG = 5,
}

impl DumpKind {
    fn from_u32(v: u32) -> Option<Self> {
        Some(match v {
            0 => DumpKind::F,
            1 => DumpKind::G,
            2 => DumpKind::FHat,
            3 => DumpKind::GHat,
            4 => DumpKind::ErrorF,
            5 => DumpKind::ErrorG,
            _ => return None,
        })
    }

    fn is_source_side(self) -> bool {
        matches!(self, DumpKind::F | DumpKind::FHat | DumpKind::ErrorF)
    }
}

const DUMP_MAGIC: &[u8; 4] = b"MMRL";

/// Writes one matrix: `"MMRL"`, `u32 M`, `u32 K`, `u32 kind`, then row-major
/// little-endian `f64` pairs `(re, im)`.
pub fn write_dump<W: Write>(w: &mut W, kind: DumpKind, mat: &CMatrix) -> Result<()> {
    let (m, k) = if kind.is_source_side() {
        (mat.rows(), mat.cols())
    } else {
        (mat.cols(), mat.rows())
    };
    w.write_all(DUMP_MAGIC)?;
    w.write_all(&(m as u32).to_le_bytes())?;
    w.write_all(&(k as u32).to_le_bytes())?;
    w.write_all(&(kind as u32).to_le_bytes())?;
    for r in 0..mat.rows() {
        for c in 0..mat.cols() {
            let z = mat.get(r, c);
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Reads a matrix written by [`write_dump`], restoring the in-memory layout.
pub fn read_dump<R: Read>(r: &mut R) -> Result<(DumpKind, CMatrix)> {
    let mut header = [0u8; 16];
    r.read_exact(&mut header)?;
    if &header[..4] != DUMP_MAGIC {
        return Err(Error::Io("bad magic in channel dump".into()));
    }
    let word = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().unwrap());
    let (m, k) = (word(4) as usize, word(8) as usize);
    let kind = DumpKind::from_u32(word(12)).ok_or_else(|| Error::Io(format!("unknown dump kind {}", word(12))))?;
    let mut mat = if kind.is_source_side() {
        CMatrix::zeros(m, k, Layout::ColMajor)
    } else {
        CMatrix::zeros(k, m, Layout::RowMajor)
    };
    let mut buf = [0u8; 16];
    for row in 0..mat.rows() {
        for col in 0..mat.cols() {
            r.read_exact(&mut buf)?;
            let re = f64::from_le_bytes(buf[..8].try_into().unwrap());
            let im = f64::from_le_bytes(buf[8..].try_into().unwrap());
            mat.set(row, col, Complex64::new(re, im));
        }
    }
    Ok((kind, mat))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats(v: impl Iterator<Item = Complex64>) -> (Complex64, f64, usize) {
        let mut n = 0;
        let mut sum = Complex64::default();
        let mut pow = 0.0;
        for z in v {
            n += 1;
            sum += z;
            pow += z.norm_sqr();
        }
        (sum / n as f64, pow / n as f64, n)
    }

    #[test]
    fn draw_is_reproducible() {
        let a = draw_channels(4, 2, &mut RngStream::new(11, 5)).unwrap();
        let b = draw_channels(4, 2, &mut RngStream::new(11, 5)).unwrap();
        assert_eq!(a, b);
        let c = draw_channels(4, 2, &mut RngStream::new(11, 6)).unwrap();
        assert_ne!(a, c);
        assert_eq!((a.f.rows(), a.f.cols(), a.g.rows(), a.g.cols()), (4, 2, 2, 4));
    }

    #[test]
    fn draw_rejects_bad_dims() {
        assert!(draw_channels(2, 3, &mut RngStream::new(0, 0)).is_err());
        assert!(draw_channels(2, 0, &mut RngStream::new(0, 0)).is_err());
    }

    #[test]
    fn channel_entries_have_unit_variance() {
        // 10^6 entries across trials
        let mut all = Vec::new();
        for t in 0..1250 {
            let ch = draw_channels(200, 2, &mut RngStream::new(3, t)).unwrap();
            all.extend_from_slice(ch.f.as_slice());
            all.extend_from_slice(ch.g.as_slice());
        }
        let (mean, var, n) = stats(all.into_iter());
        assert_eq!(n, 1_000_000);
        assert!(mean.norm() < 0.005);
        assert!((var - 1.0).abs() < 0.01, "var {var}");
    }

    #[test]
    fn lane_norm_scales_with_m() {
        let mut acc = 0.0;
        let trials = 400;
        for t in 0..trials {
            let ch = draw_channels(128, 4, &mut RngStream::new(9, t)).unwrap();
            acc += ch.f.lane(0).iter().map(|z| z.norm_sqr()).sum::<f64>() / 128.0;
        }
        assert!((acc / trials as f64 - 1.0).abs() < 0.02);
    }

    #[test]
    fn dft_pilots_are_orthonormal() {
        for (tau, k) in [(4, 4), (10, 3), (37, 20), (64, 64)] {
            let pc = PilotConfig::dft(tau, k, 1.0).unwrap();
            assert!(pc.orthonormality_defect() < 1e-12, "tau={tau} k={k}");
        }
        assert!(PilotConfig::dft(3, 4, 1.0).is_err());
    }

    #[test]
    fn pilot_estimate_converges_to_truth_at_high_power() {
        let ch = draw_channels(16, 3, &mut RngStream::new(1, 0)).unwrap();
        let pc = PilotConfig::dft(3, 3, 1e12).unwrap();
        let est = mmse_estimate_pilot(&ch, &pc, &mut RngStream::new(1, 0)).unwrap();
        let worst = est.e_f.as_slice().iter().chain(est.e_g.as_slice()).map(|z| z.norm()).fold(0.0, f64::max);
        assert!(worst < 1e-5, "{worst}");
    }

    #[test]
    fn pilot_estimate_statistics() {
        // tau = K, tau * P_t = 1 -> P_c = 1/2
        let (m, k) = (50, 4);
        let pc = PilotConfig::dft(k, k, 0.25).unwrap();
        assert_eq!(pc.csi_quality(), 0.5);
        let mut hat = Vec::new();
        let mut err = Vec::new();
        let mut cross = Complex64::default();
        let mut noise_cov = [[Complex64::default(); 2]; 2];
        let trials = 600;
        for t in 0..trials {
            let mut rng = RngStream::new(77, t);
            let ch = draw_channels(m, k, &mut rng).unwrap();
            let obs = mmse_estimate_pilot_observed(&ch, &pc, &mut rng).unwrap();
            let est = &obs.estimate;
            for (h, e) in est.f_hat.as_slice().iter().zip(est.e_f.as_slice()) {
                cross += h * e.conj();
            }
            for ant in 0..m {
                let a = obs.noise_f.get(ant, 0);
                let b = obs.noise_f.get(ant, 1);
                noise_cov[0][0] += a * a.conj();
                noise_cov[0][1] += a * b.conj();
                noise_cov[1][1] += b * b.conj();
            }
            hat.extend_from_slice(est.f_hat.as_slice());
            hat.extend_from_slice(est.g_hat.as_slice());
            err.extend_from_slice(est.e_f.as_slice());
            err.extend_from_slice(est.e_g.as_slice());
        }
        let n = hat.len() as f64; // 2.4e5 entries
        let (_, v_hat, _) = stats(hat.into_iter());
        let (_, v_err, _) = stats(err.into_iter());
        assert!((v_hat - 0.5).abs() < 0.005, "{v_hat}");
        assert!((v_err - 0.5).abs() < 0.005, "{v_err}");
        // MMSE orthogonality: |mean(F_hat conj(E_f))| within 3 standard errors of 0
        let half = n / 2.0;
        let se = (0.5 * 0.5 / half).sqrt();
        assert!((cross / half).norm() < 3.0 * se * 2f64.sqrt());
        // filtered noise N Phi^* has identity covariance
        let cnt = (trials as usize * m) as f64;
        assert!((noise_cov[0][0].re / cnt - 1.0).abs() < 0.03);
        assert!((noise_cov[1][1].re / cnt - 1.0).abs() < 0.03);
        assert!((noise_cov[0][1] / cnt).norm() < 0.03);
    }

    #[test]
    fn direct_estimate_with_perfect_csi() {
        let est = mmse_estimate_direct(8, 2, 1.0, &mut RngStream::new(5, 0)).unwrap();
        assert!(est.e_f.as_slice().iter().all(|z| *z == Complex64::default()));
        assert_eq!(est.truth.f, est.f_hat);
        assert_eq!(est.truth.g, est.g_hat);
    }

    #[test]
    fn direct_estimate_rejects_bad_quality() {
        assert!(mmse_estimate_direct(8, 2, 0.0, &mut RngStream::new(5, 0)).is_err());
        assert!(mmse_estimate_direct(8, 2, 1.2, &mut RngStream::new(5, 0)).is_err());
    }

    #[test]
    fn direct_estimate_variances() {
        let p_c = 0.3;
        let mut truth = Vec::new();
        let mut hat = Vec::new();
        for t in 0..500 {
            let est = mmse_estimate_direct(100, 2, p_c, &mut RngStream::new(8, t)).unwrap();
            truth.extend_from_slice(est.truth.f.as_slice());
            hat.extend_from_slice(est.f_hat.as_slice());
        }
        let (_, v, _) = stats(truth.into_iter());
        let (_, vh, _) = stats(hat.into_iter());
        assert!((v - 1.0).abs() < 0.015);
        assert!((vh - p_c).abs() < 0.005);
    }

    #[test]
    fn dump_round_trip() {
        let est = mmse_estimate_direct(5, 3, 0.7, &mut RngStream::new(2, 2)).unwrap();
        let mut buf = Vec::new();
        write_dump(&mut buf, DumpKind::FHat, &est.f_hat).unwrap();
        write_dump(&mut buf, DumpKind::ErrorG, &est.e_g).unwrap();
        assert_eq!(buf.len(), 2 * (16 + 5 * 3 * 16));
        assert_eq!(&buf[..4], b"MMRL");
        assert_eq!(u32::from_le_bytes(buf[4..8].try_into().unwrap()), 5);
        assert_eq!(u32::from_le_bytes(buf[8..12].try_into().unwrap()), 3);
        // first payload value is entry (0, 0) real part, second row starts after K entries
        let re01 = f64::from_le_bytes(buf[32..40].try_into().unwrap());
        assert_eq!(re01, est.f_hat.get(0, 1).re);
        let mut cur = &buf[..];
        let (k1, f) = read_dump(&mut cur).unwrap();
        let (k2, g) = read_dump(&mut cur).unwrap();
        assert_eq!((k1, k2), (DumpKind::FHat, DumpKind::ErrorG));
        assert_eq!(f, est.f_hat);
        assert_eq!(g, est.e_g);
    }
}
