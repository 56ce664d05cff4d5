//! Monte Carlo trial engine.
//!
//! Trials run as a parallel map over the trial index followed by an ordered
//! collect, so a [`SampleSet`] depends only on `(params, trials, seed, options)`
//! and never on the worker count.
//!
//! The default [`Engine::Reduced`] sampler never forms the `M x K` channel
//! matrices. Every component depends on the estimates only through the Gram
//! matrices `A = F_hat^H F_hat` and `B = G_hat G_hat^H`, which are complex
//! Wishart and are drawn by Bartlett decomposition in `O(K^2)` variates.
//! Given `G_hat`, the row `eps_{g,i} G_hat^H` is `CN(0, (1 - P_c) conj(B))`, and
//! the interference needs `w E_f` with `w` independent of `E_f`, so
//! `w eps_k ~ CN(0, (1 - P_c) |w|^2)` i.i.d. over `k`.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::components::{instantaneous_sinr, relay_noise_term, sinr_components, SinrComponents};
use crate::channel::{
    draw_channels, inner, mmse_estimate_direct, mmse_estimate_pilot, CMatrix, EstimatedChannel, PilotConfig,
};
use crate::error::{Error, Result};
use crate::model::NetworkParams;
use crate::rng::{RngStream, Slot};

/// How each trial obtains its channel estimates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    /// Gram-matrix sampler with conditionally Gaussian interference residuals.
    #[default]
    Reduced,
    /// Full matrices from the distributional MMSE shortcut.
    Direct,
    /// Full matrices from explicit pilot training (`tau = K`, DFT pilots).
    Pilot,
}

/// Which user's SINR a trial reports.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UserSelection {
    /// Always the first user.
    #[default]
    First,
    /// A uniformly random user per trial.
    Random,
    /// Componentwise average over all users of the realization (SINR averaged too).
    AllUsers,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimOptions {
    pub engine: Engine,
    pub users: UserSelection,
    /// Worker threads; `None` uses rayon's global pool.
    pub threads: Option<usize>,
}

/// One trial's components and SINR.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub components: SinrComponents,
    pub sinr: f64,
}

/// Output of [`simulate`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleSet {
    pub params: NetworkParams,
    pub seed: u64,
    pub trials: usize,
    pub options: SimOptions,
    pub records: Vec<TrialRecord>,
}

/// Upper bound on the memory of one sample set.
const MAX_SAMPLE_BYTES: usize = 8 << 30;

impl SampleSet {
    pub fn sinr(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.sinr).collect()
    }

    /// Column `idx` of the components in `P_se, P_ie, P_ne, P_e1, P_e2, P_e3` order.
    pub fn component(&self, idx: usize) -> Vec<f64> {
        self.records.iter().map(|r| r.components.as_array()[idx]).collect()
    }

    pub fn p_ie(&self) -> Vec<f64> {
        self.component(1)
    }

    /// SINR denominators, recomputed from the stored components.
    pub fn denominators(&self) -> Vec<f64> {
        self.records
            .iter()
            .map(|r| super::components::sinr_denominator(&r.components, &self.params))
            .collect()
    }

    /// CSV with header `trial,P_se,P_ie,P_ne,P_e1,P_e2,P_e3,sinr`.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "trial,P_se,P_ie,P_ne,P_e1,P_e2,P_e3,sinr")?;
        for (t, r) in self.records.iter().enumerate() {
            let c = &r.components;
            writeln!(
                w,
                "{t},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                c.p_se, c.p_ie, c.p_ne, c.p_e1, c.p_e2, c.p_e3, r.sinr
            )?;
        }
        Ok(())
    }
}

/// Runs `trials` independent trials. Trial `t` uses the stream keyed by `(seed, t)`.
pub fn simulate(p: &NetworkParams, trials: usize, seed: u64, options: SimOptions) -> Result<SampleSet> {
    if trials == 0 {
        return Err(Error::param("trials", "need at least one trial"));
    }
    let bytes = trials
        .checked_mul(std::mem::size_of::<TrialRecord>())
        .ok_or_else(|| Error::Resource(format!("{trials} trials overflow the address space")))?;
    if bytes > MAX_SAMPLE_BYTES {
        return Err(Error::Resource(format!(
            "{trials} trials need {bytes} bytes of records, limit is {MAX_SAMPLE_BYTES}"
        )));
    }
    let pilot = match options.engine {
        Engine::Pilot => Some(PilotConfig::dft(p.k(), p.k(), p.training().p_t)?),
        _ => None,
    };
    let run = || -> Result<Vec<TrialRecord>> {
        (0..trials as u64)
            .into_par_iter()
            .map(|t| run_trial(p, seed, t, options, pilot.as_ref()))
            .collect()
    };
    let records = match options.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Resource(e.to_string()))?
            .install(run)?,
        None => run()?,
    };
    Ok(SampleSet {
        params: *p,
        seed,
        trials,
        options,
        records,
    })
}

fn run_trial(p: &NetworkParams, seed: u64, t: u64, options: SimOptions, pilot: Option<&PilotConfig>) -> Result<TrialRecord> {
    let mut rng = RngStream::new(seed, t);
    let (m, k) = (p.m(), p.k());
    let users: Vec<usize> = match options.users {
        UserSelection::First => vec![0],
        UserSelection::Random => vec![rng.uniform_index(Slot::Aux, k)],
        UserSelection::AllUsers => (0..k).collect(),
    };
    let mut per_user = Vec::with_capacity(users.len());
    match options.engine {
        Engine::Reduced => {
            let draw = ReducedDraw::sample(m, k, p.p_c(), &mut rng);
            for &u in &users {
                per_user.push(draw.components(u, Residuals::Sampled(&mut rng)));
            }
        }
        Engine::Direct | Engine::Pilot => {
            let est = match pilot {
                Some(pc) => {
                    let ch = draw_channels(m, k, &mut rng)?;
                    mmse_estimate_pilot(&ch, pc, &mut rng)?
                }
                None => mmse_estimate_direct(m, k, p.p_c(), &mut rng)?,
            };
            for &u in &users {
                per_user.push(sinr_components(&est, p, u)?);
            }
        }
    }
    let sinr = per_user.iter().map(|c| instantaneous_sinr(c, p)).sum::<f64>() / per_user.len() as f64;
    let mut components = if per_user.len() == 1 {
        per_user[0]
    } else {
        SinrComponents::average(&per_user)
    };
    if per_user.len() > 1 {
        components.user = usize::MAX;
    }
    Ok(TrialRecord { components, sinr })
}

/// Source of the interference residuals `w eps_k` in the reduced sampler.
pub enum Residuals<'a> {
    /// Draw them from their conditional law.
    Sampled(&'a mut RngStream),
    /// Compute them from materialized `F_hat` and `E_f` (`M x K`, column-major).
    Exact { f_hat: &'a CMatrix, e_f: &'a CMatrix },
}

/// Sufficient statistics of one trial for the reduced sampler.
#[derive(Clone, Debug)]
pub struct ReducedDraw {
    k: usize,
    m: usize,
    p_c: f64,
    /// `A = F_hat^H F_hat`, row-major `K x K`.
    a: Vec<Complex64>,
    /// `B = G_hat G_hat^H`, row-major `K x K`.
    b: Vec<Complex64>,
    /// Lower Bartlett factor of `B`, when sampled.
    chol_b: Option<Vec<Complex64>>,
    /// Rows `eps_{g,i} G_hat^H` known up front (exact mode).
    proj: Vec<Option<Vec<Complex64>>>,
    stream: Option<RngStream>,
}

/// `P_c L L^H` with `L` the complex Bartlett factor of a `K x K` Wishart
/// matrix with `M` degrees of freedom: `|L_ii|^2 ~ Gamma(M - i, 1)`,
/// `L_ij ~ CN(0, 1)` below the diagonal. Returns `sqrt(P_c) L`, row-major.
fn bartlett(m: usize, k: usize, p_c: f64, rng: &mut RngStream, lower: Slot, diag: Slot) -> Vec<Complex64> {
    let scale = p_c.sqrt();
    let mut l = vec![Complex64::default(); k * k];
    let mut d = vec![0.0; k];
    rng.fill_gamma(diag, (0..k).map(|i| (m - i) as f64), &mut d);
    rng.seek(lower, 0);
    for i in 0..k {
        l[i * k + i] = Complex64::new(d[i].sqrt() * scale, 0.0);
        for j in 0..i {
            l[i * k + j] = rng.next_cn() * scale;
        }
    }
    l
}

/// `L L^H` for lower-triangular row-major `L`.
fn outer_lower(l: &[Complex64], k: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); k * k];
    for i in 0..k {
        for j in 0..=i {
            let v: Complex64 = (0..=j).map(|t| l[i * k + t] * l[j * k + t].conj()).sum();
            out[i * k + j] = v;
            out[j * k + i] = v.conj();
        }
    }
    out
}

impl ReducedDraw {
    /// Draws `A` and `B` directly from their Wishart laws.
    pub fn sample(m: usize, k: usize, p_c: f64, rng: &mut RngStream) -> Self {
        let lf = bartlett(m, k, p_c, rng, Slot::GramF, Slot::GramDiagF);
        let lg = bartlett(m, k, p_c, rng, Slot::GramG, Slot::GramDiagG);
        Self {
            k,
            m,
            p_c,
            a: outer_lower(&lf, k),
            b: outer_lower(&lg, k),
            chol_b: Some(lg),
            proj: vec![None; k],
            stream: Some(rng.clone()),
        }
    }

    /// Builds the statistics from full estimates, for cross-checking the
    /// algebra against [`sinr_components`].
    pub fn from_estimate(est: &EstimatedChannel) -> Self {
        let k = est.k();
        let proj = (0..k)
            .map(|i| {
                let eps = est.e_g.lane(i);
                Some(
                    est.g_hat
                        .lanes()
                        .map(|g| eps.iter().zip(g).map(|(x, y)| x * y.conj()).sum())
                        .collect(),
                )
            })
            .collect();
        Self {
            k,
            m: est.m(),
            p_c: est.p_c,
            a: gram(&est.f_hat, k, false),
            b: gram(&est.g_hat, k, true),
            chol_b: None,
            proj,
            stream: None,
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `A = F_hat^H F_hat` and `B = G_hat G_hat^H`, row-major.
    pub fn grams(&self) -> (&[Complex64], &[Complex64]) {
        (&self.a, &self.b)
    }

    /// `eps_{g,i} G_hat^H ~ CN(0, (1 - P_c) conj(B))` given `G_hat`.
    fn projection(&self, user: usize) -> Vec<Complex64> {
        if let Some(v) = &self.proj[user] {
            return v.clone();
        }
        let k = self.k;
        let mut out = vec![Complex64::default(); k];
        if self.p_c >= 1.0 {
            return out;
        }
        let l = self.chol_b.as_ref().expect("sampled draws keep their factor");
        let mut z = vec![Complex64::default(); k];
        let mut rng = self.stream.clone().expect("sampled draws keep their stream");
        rng.fill_cn(Slot::ErrorG, (user * k) as u64, 1.0 - self.p_c, &mut z);
        for i in 0..k {
            out[i] = (0..=i).map(|j| l[i * k + j].conj() * z[j]).sum();
        }
        out
    }

    pub fn components(&self, user: usize, residuals: Residuals<'_>) -> SinrComponents {
        let k = self.k;
        let mf = self.m as f64;
        let pc = self.p_c;
        let a = |i: usize, j: usize| self.a[i * k + j];
        let b = |i: usize, j: usize| self.b[i * k + j];
        // sum_{k,l} x_k conj(x_l) A[k][l]
        let a_form = |x: &[Complex64]| -> f64 {
            let mut s = Complex64::default();
            for i in 0..k {
                let mut row = Complex64::default();
                for j in 0..k {
                    row += x[j].conj() * a(i, j);
                }
                s += x[i] * row;
            }
            s.re
        };

        // c_k = ghat_i ghat_k^H
        let c: Vec<Complex64> = (0..k).map(|j| b(user, j)).collect();
        let signal: Complex64 = (0..k).map(|j| c[j] * a(j, user)).sum();
        let p_se = signal.norm_sqr() / mf.powi(4);

        // u_k = g_i ghat_k^H = c_k - eps_{g,i} ghat_k^H
        let e = self.projection(user);
        let u: Vec<Complex64> = c.iter().zip(&e).map(|(x, y)| x - y).collect();
        let w_norm_sq = a_form(&u);
        let p_ne = w_norm_sq / mf.powi(3);

        let (p_ie, degenerate) = if k == 1 {
            (0.0, true)
        } else {
            let residual: Vec<Complex64> = match residuals {
                Residuals::Sampled(rng) => {
                    let mut t = vec![Complex64::default(); k];
                    if pc < 1.0 {
                        rng.fill_cn(Slot::Residual, (user * k) as u64, (1.0 - pc) * w_norm_sq, &mut t);
                    }
                    t
                }
                Residuals::Exact { f_hat, e_f } => {
                    let mut w = vec![Complex64::default(); f_hat.rows()];
                    for (uj, col) in u.iter().zip(f_hat.lanes()) {
                        for (o, f) in w.iter_mut().zip(col) {
                            *o += uj * f.conj();
                        }
                    }
                    e_f.lanes().map(|e| w.iter().zip(e).map(|(x, y)| x * y).sum()).collect()
                }
            };
            let mut s = 0.0;
            for j in (0..k).filter(|&j| j != user) {
                let hat: Complex64 = (0..k).map(|l| u[l] * a(l, j)).sum();
                s += (hat - residual[j]).norm_sqr();
            }
            (s / ((k - 1) as f64 * mf.powi(3)), false)
        };

        let mut tr = Complex64::default();
        for i in 0..k {
            for j in 0..k {
                tr += a(i, j) * b(j, i);
            }
        }
        let p_e1 = (1.0 - pc).powi(2) * tr.re / mf.powi(3);
        let p_e2 = (1.0 - pc) * a_form(&c) / mf.powi(3);
        // z_k = fhat_k^H fhat_i; |Ghat^H z|^2 = sum z_k conj(z_l) B[l][k]
        let z: Vec<Complex64> = (0..k).map(|j| a(j, user)).collect();
        let mut q = Complex64::default();
        for i in 0..k {
            for j in 0..k {
                q += z[i] * z[j].conj() * b(j, i);
            }
        }
        let p_e3 = (1.0 - pc) * q.re / mf.powi(3);

        SinrComponents {
            p_se,
            p_ie,
            p_ne,
            p_e1,
            p_e2,
            p_e3,
            user,
            degenerate,
        }
    }
}

/// Hermitian Gram matrix of the lanes. For `F` (columns) this is
/// `F^H F`; for `G` (rows, `conj_rows = true`) it is `G G^H`.
fn gram(mat: &CMatrix, k: usize, conj_rows: bool) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); k * k];
    for i in 0..k {
        for j in i..k {
            let v = if conj_rows {
                inner(mat.lane(j), mat.lane(i))
            } else {
                inner(mat.lane(i), mat.lane(j))
            };
            out[i * k + j] = v;
            out[j * k + i] = v.conj();
        }
    }
    out
}

/// Relay-noise term used by every trial (exposed for diagnostics).
pub fn relay_term(p: &NetworkParams) -> f64 {
    relay_noise_term(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(m: usize, k: usize, pc: f64) -> NetworkParams {
        NetworkParams::with_csi_quality(m, k, 2.0, 5.0, pc).unwrap()
    }

    #[test]
    fn reduced_algebra_matches_definitions() {
        for (m, k, pc, user) in [(20, 4, 0.7, 0), (33, 5, 0.4, 3), (16, 2, 0.95, 1), (12, 1, 0.5, 0)] {
            let p = params(m, k, pc);
            let est = mmse_estimate_direct(m, k, pc, &mut RngStream::new(99, 4)).unwrap();
            let direct = sinr_components(&est, &p, user).unwrap();
            let draw = ReducedDraw::from_estimate(&est);
            let reduced = draw.components(user, Residuals::Exact { f_hat: &est.f_hat, e_f: &est.e_f });
            for (a, b) in direct.as_array().iter().zip(reduced.as_array()) {
                assert!((a - b).abs() <= 1e-11 * a.abs().max(1e-300), "{direct:?} vs {reduced:?}");
            }
            assert_eq!(direct.degenerate, reduced.degenerate);
        }
    }

    #[test]
    fn bartlett_grams_have_wishart_moments() {
        // E A = M P_c I and E |A_ij|^2 = M P_c^2 off the diagonal
        let (m, k, pc, n) = (12usize, 3usize, 0.7, 20_000);
        let mut diag = 0.0;
        let mut off = 0.0;
        let mut diag_sq = 0.0;
        for t in 0..n {
            let d = ReducedDraw::sample(m, k, pc, &mut RngStream::new(3, t as u64));
            let (a, _) = d.grams();
            diag += a[0].re + a[4].re + a[8].re;
            diag_sq += a[4].re * a[4].re;
            off += a[1].norm_sqr() + a[5].norm_sqr();
            assert!(a[1] == a[3].conj() && a[0].im == 0.0);
        }
        let mean_diag = diag / (3.0 * n as f64);
        assert!((mean_diag / (m as f64 * pc) - 1.0).abs() < 0.01);
        assert!((off / (2.0 * n as f64) / (m as f64 * pc * pc) - 1.0).abs() < 0.03);
        // diagonal is P_c Gamma(M, 1): second moment P_c^2 M (M + 1)
        assert!((diag_sq / n as f64 / (pc * pc * (m * (m + 1)) as f64) - 1.0).abs() < 0.02);
    }

    #[test]
    fn same_seed_same_samples_any_thread_count() {
        let p = params(32, 4, 0.8);
        let one = simulate(&p, 300, 7, SimOptions { threads: Some(1), ..Default::default() }).unwrap();
        let four = simulate(&p, 300, 7, SimOptions { threads: Some(4), ..Default::default() }).unwrap();
        let mut a = Vec::new();
        let mut b = Vec::new();
        one.write_csv(&mut a).unwrap();
        four.write_csv(&mut b).unwrap();
        assert_eq!(a, b);
        let other = simulate(&p, 300, 8, SimOptions::default()).unwrap();
        assert_ne!(one.records, other.records);
    }

    #[test]
    fn csv_header_and_rows() {
        let p = params(8, 2, 0.5);
        let s = simulate(&p, 3, 1, SimOptions::default()).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "trial,P_se,P_ie,P_ne,P_e1,P_e2,P_e3,sinr");
        assert_eq!(lines.len(), 4);
        assert!(lines[3].starts_with("2,"));
        assert_eq!(lines[1].split(',').count(), 8);
    }

    #[test]
    fn zero_trials_and_huge_requests_fail_explicitly() {
        let p = params(8, 2, 0.5);
        assert!(simulate(&p, 0, 1, SimOptions::default()).is_err());
        assert!(matches!(
            simulate(&p, usize::MAX / 2, 1, SimOptions::default()),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn engines_run_and_report_positive_sinr() {
        let p = params(16, 4, 0.75);
        for engine in [Engine::Reduced, Engine::Direct, Engine::Pilot] {
            for users in [UserSelection::First, UserSelection::Random, UserSelection::AllUsers] {
                let s = simulate(&p, 20, 3, SimOptions { engine, users, threads: None }).unwrap();
                assert!(s.records.iter().all(|r| r.sinr > 0.0 && r.sinr.is_finite()));
            }
        }
    }
}
