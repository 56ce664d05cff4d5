//! Experiment runners and the figure datasets.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use relaylab::analytics::mixture::interference_cdf;
use relaylab::analytics::{component_moments, gamma_mix_params, rate_lower_bound, OutageContext, OutageForm};
use relaylab::linksim::stats::{aber, empirical_stats, moments, outage, rate_samples, Binning, EmpiricalStats, Histogram, Modulation};
use relaylab::linksim::{simulate, SampleSet, SimOptions, COMPONENT_NAMES};
use relaylab::model::realize_parameters;
use relaylab::NetworkParams;
use serde::Serialize;

use crate::config::{db_to_linear, linear_to_db, ExperimentConfig};
use crate::error::{HarnessError, Result};
use crate::scenarios::table_one;

/// Seed, trial count and worker threads of one experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct RunOptions {
    pub seed: u64,
    pub trials: usize,
    pub threads: Option<usize>,
}

/// Mixes a master seed with point coordinates (splitmix64 finalizer).
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    let mut x = seed;
    for &t in tags {
        x = x.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_add(t);
        x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        x ^= x >> 31;
    }
    x
}

fn sim(p: &NetworkParams, o: &RunOptions, tags: &[u64]) -> Result<SampleSet> {
    let opts = SimOptions {
        threads: o.threads,
        ..SimOptions::default()
    };
    Ok(simulate(p, o.trials, derive_seed(o.seed, tags), opts)?)
}

/// A CSV table with a fixed header.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub header: &'static str,
    pub rows: Vec<Vec<String>>,
}

impl Dataset {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(self.header);
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

/// Opens `path` for writing, refusing to clobber an existing file unless `force`.
pub fn create(path: &Path, force: bool) -> Result<fs::File> {
    if path.exists() && !force {
        return Err(HarnessError::Overwrite(path.to_path_buf()));
    }
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    Ok(fs::File::create(path)?)
}

pub fn write_text(path: &Path, text: &str, force: bool) -> Result<()> {
    create(path, force)?.write_all(text.as_bytes())?;
    Ok(())
}

// ---------------------------------------------------------------- figures

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Fig1Row {
    pub scenario: &'static str,
    pub m: usize,
    pub mean_sinr: f64,
    pub mean_sinr_db: f64,
    pub std_err: f64,
}

/// Mean SINR against `M` for the five table scenarios.
pub fn fig1(m_grid: &[usize], o: &RunOptions) -> Result<Vec<Fig1Row>> {
    let mut rows = Vec::new();
    for (ci, sc) in table_one().iter().enumerate() {
        for &m in m_grid {
            let p = realize_parameters(&sc.exponents, m)?;
            let s = moments(&sim(&p, o, &[1, ci as u64, m as u64])?.sinr())?;
            rows.push(Fig1Row {
                scenario: sc.name,
                m,
                mean_sinr: s.mean,
                mean_sinr_db: linear_to_db(s.mean),
                std_err: s.std_err,
            });
        }
    }
    Ok(rows)
}

pub fn fig1_dataset(rows: &[Fig1Row]) -> Dataset {
    Dataset {
        header: "scenario,M,mean_sinr_emp,mean_sinr_db",
        rows: rows
            .iter()
            .map(|r| vec![r.scenario.to_owned(), r.m.to_string(), num(r.mean_sinr), num(r.mean_sinr_db)])
            .collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Fig2Row {
    pub k: usize,
    pub m: usize,
    pub rate: f64,
    pub rate_std_err: f64,
    pub rate_lb: f64,
}

/// Achievable rate against `K` at `P = Q = 1`, `P_c = 1/2`.
pub fn fig2(ms: &[usize], ks: &[usize], o: &RunOptions) -> Result<Vec<Fig2Row>> {
    let mut rows = Vec::new();
    for &m in ms {
        for &k in ks {
            let p = NetworkParams::with_csi_quality(m, k, 1.0, 1.0, 0.5)?;
            let r = moments(&rate_samples(&sim(&p, o, &[2, m as u64, k as u64])?.sinr()))?;
            rows.push(Fig2Row {
                k,
                m,
                rate: r.mean,
                rate_std_err: r.std_err,
                rate_lb: rate_lower_bound(&p).c_lb,
            });
        }
    }
    Ok(rows)
}

pub fn fig2_dataset(rows: &[Fig2Row]) -> Dataset {
    Dataset {
        header: "K,M,rate_emp,rate_lb",
        rows: rows
            .iter()
            .map(|r| vec![r.k.to_string(), r.m.to_string(), num(r.rate), num(r.rate_lb)])
            .collect(),
    }
}

/// Empirical interference sample and histogram for one `K`.
#[derive(Clone, Debug, PartialEq)]
pub struct Fig3Panel {
    pub params: NetworkParams,
    pub p_ie: Vec<f64>,
    pub histogram: Histogram,
    /// Mixture-law probability of each bin divided by its width.
    pub density_model: Vec<f64>,
}

/// Interference histogram with the bin-averaged mixture density.
pub fn fig3(ks: &[usize], m: usize, o: &RunOptions) -> Result<Vec<Fig3Panel>> {
    ks.iter()
        .map(|&k| {
            let p = NetworkParams::with_csi_quality(m, k, 1.0, 1.0, 0.8)?;
            let p_ie = sim(&p, o, &[3, m as u64, k as u64])?.p_ie();
            let histogram = Histogram::build(&p_ie, &Binning::FreedmanDiaconis)?;
            let g = gamma_mix_params(&p)?;
            let density_model = histogram
                .edges
                .windows(2)
                .map(|w| Ok((interference_cdf(w[1], &g)? - interference_cdf(w[0], &g)?) / (w[1] - w[0])))
                .collect::<relaylab::Result<Vec<f64>>>()?;
            Ok(Fig3Panel {
                params: p,
                p_ie,
                histogram,
                density_model,
            })
        })
        .collect()
}

pub fn fig3_dataset(panels: &[Fig3Panel]) -> Dataset {
    let mut rows = Vec::new();
    for panel in panels {
        let dens = panel.histogram.density();
        for (i, w) in panel.histogram.edges.windows(2).enumerate() {
            rows.push(vec![
                num(w[0]),
                num(w[1]),
                num(dens[i]),
                num(panel.density_model[i]),
                panel.params.k().to_string(),
            ]);
        }
    }
    Dataset {
        header: "bin_lo,bin_hi,density_emp,density_eq23,K",
        rows,
    }
}

/// Outage and error-rate figures share one simulation per grid point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailRow {
    pub m: usize,
    pub k: usize,
    pub outage_emp: f64,
    pub outage_exact: f64,
    pub outage_high_snr: f64,
    pub outage_valid: String,
    pub aber_emp: f64,
    pub aber_model: f64,
    pub aber_valid: String,
}

/// Setup of the outage and error-rate figures: `P = Q = 10 dB`, `P_c = 0.95`.
pub fn tail_params(m: usize, k: usize) -> Result<NetworkParams> {
    Ok(NetworkParams::with_csi_quality(m, k, db_to_linear(10.0), db_to_linear(10.0), 0.95)?)
}

pub fn tail_sweep(ms: &[usize], ks: &[usize], gamma: f64, md: Modulation, o: &RunOptions) -> Result<Vec<TailRow>> {
    let mut rows = Vec::new();
    for &k in ks {
        for &m in ms {
            let p = tail_params(m, k)?;
            let sinr = sim(&p, o, &[4, m as u64, k as u64])?.sinr();
            let ctx = OutageContext::new(&p)?;
            rows.push(TailRow {
                m,
                k,
                outage_emp: outage(&sinr, gamma),
                outage_exact: ctx.outage(gamma, OutageForm::Exact)?.value,
                outage_high_snr: ctx.outage(gamma, OutageForm::HighSnr)?.value,
                outage_valid: ctx.outage_validity(gamma).flags(),
                aber_emp: aber(&sinr, md.a, md.b),
                aber_model: ctx.aber(md.a, md.b)?.value,
                aber_valid: ctx.aber_validity().flags(),
            });
        }
    }
    Ok(rows)
}

pub fn fig4_dataset(rows: &[TailRow]) -> Dataset {
    Dataset {
        header: "M,K,outage_emp,outage_eq24,outage_eq25",
        rows: rows
            .iter()
            .map(|r| {
                vec![
                    r.m.to_string(),
                    r.k.to_string(),
                    num(r.outage_emp),
                    num(r.outage_exact),
                    num(r.outage_high_snr),
                ]
            })
            .collect(),
    }
}

pub fn fig5_dataset(rows: &[TailRow]) -> Dataset {
    Dataset {
        header: "M,K,aber_emp,aber_eq27",
        rows: rows
            .iter()
            .map(|r| vec![r.m.to_string(), r.k.to_string(), num(r.aber_emp), num(r.aber_model)])
            .collect(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Figure {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
}

impl Figure {
    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig1 => "fig1",
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
        }
    }

    pub fn default_trials(self) -> usize {
        match self {
            Figure::Fig1 | Figure::Fig2 => 10_000,
            Figure::Fig3 => 100_000,
            Figure::Fig4 | Figure::Fig5 => 1_000_000,
        }
    }
}

/// Antenna grids of the figures.
pub const FIG1_M: [usize; 4] = [64, 128, 256, 512];
pub const FIG2_M: [usize; 2] = [100, 200];
pub const FIG3_M: usize = 200;
pub const FIG3_K: [usize; 2] = [10, 20];
pub const TAIL_M: [usize; 6] = [128, 160, 192, 224, 256, 320];
pub const TAIL_K: [usize; 2] = [8, 12];
/// Outage threshold of the outage figure, 8 dB.
pub fn tail_gamma() -> f64 {
    db_to_linear(8.0)
}

pub fn fig2_k() -> Vec<usize> {
    (2..=20).collect()
}

/// Regeneration metadata written next to each dataset.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FigureMeta {
    pub figure: Figure,
    pub seed: u64,
    pub trials: usize,
    pub m_grid: Vec<usize>,
    pub k_grid: Vec<usize>,
    pub notes: &'static str,
    pub version: &'static str,
}

pub fn figure_dataset(fig: Figure, o: &RunOptions) -> Result<(Dataset, FigureMeta)> {
    let meta = |m_grid: Vec<usize>, k_grid: Vec<usize>, notes| FigureMeta {
        figure: fig,
        seed: o.seed,
        trials: o.trials,
        m_grid,
        k_grid,
        notes,
        version: env!("CARGO_PKG_VERSION"),
    };
    Ok(match fig {
        Figure::Fig1 => (
            fig1_dataset(&fig1(&FIG1_M, o)?),
            meta(FIG1_M.to_vec(), vec![], "table scenarios case1..case5"),
        ),
        Figure::Fig2 => (
            fig2_dataset(&fig2(&FIG2_M, &fig2_k(), o)?),
            meta(FIG2_M.to_vec(), fig2_k(), "P = Q = 1, P_c = 0.5"),
        ),
        Figure::Fig3 => (
            fig3_dataset(&fig3(&FIG3_K, FIG3_M, o)?),
            meta(vec![FIG3_M], FIG3_K.to_vec(), "P_c = 0.8, Freedman-Diaconis bins"),
        ),
        Figure::Fig4 => (
            fig4_dataset(&tail_sweep(&TAIL_M, &TAIL_K, tail_gamma(), Modulation::BPSK, o)?),
            meta(TAIL_M.to_vec(), TAIL_K.to_vec(), "P = Q = 10 dB, P_c = 0.95, gamma_th = 8 dB"),
        ),
        Figure::Fig5 => (
            fig5_dataset(&tail_sweep(&TAIL_M, &TAIL_K, tail_gamma(), Modulation::BPSK, o)?),
            meta(TAIL_M.to_vec(), TAIL_K.to_vec(), "BPSK, P = Q = 10 dB, P_c = 0.95"),
        ),
    })
}

/// Writes `<out>/<fig>.csv` and `<out>/<fig>.meta.json`.
pub fn write_figure(fig: Figure, o: &RunOptions, out: &Path, force: bool) -> Result<PathBuf> {
    let csv = out.join(format!("{}.csv", fig.name()));
    let meta_path = out.join(format!("{}.meta.json", fig.name()));
    for p in [&csv, &meta_path] {
        if p.exists() && !force {
            return Err(HarnessError::Overwrite(p.clone()));
        }
    }
    let (data, meta) = figure_dataset(fig, o)?;
    write_text(&csv, &data.to_csv(), force)?;
    let json = serde_json::to_string_pretty(&meta).expect("metadata serializes");
    write_text(&meta_path, &(json + "\n"), force)?;
    Ok(csv)
}

// ---------------------------------------------------------------- configured runs

/// One grid point of a configured experiment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultRecord {
    pub scenario: String,
    pub m: usize,
    pub params: NetworkParams,
    pub seed: u64,
    pub trials: usize,
    pub empirical: EmpiricalStats,
    /// Closed-form values keyed by quantity and form, e.g. `rate_lb_eq14`.
    pub analytic: BTreeMap<String, f64>,
    pub validity: BTreeMap<String, String>,
    pub wall_clock_s: f64,
}

/// Closed-form values for one operating point.
pub fn analytic_values(p: &NetworkParams, cfg: &ExperimentConfig) -> Result<(BTreeMap<String, f64>, BTreeMap<String, String>)> {
    let mut a = BTreeMap::new();
    let mut v = BTreeMap::new();
    let cm = component_moments(p);
    for (name, ms) in COMPONENT_NAMES.iter().zip(cm.as_array()) {
        a.insert(format!("mean_{name}_eq10"), ms.mean);
        a.insert(format!("scv_{name}_eq10"), ms.scv);
    }
    let rb = rate_lower_bound(p);
    a.insert("tilde_sinr_eq14".into(), rb.tilde_sinr);
    a.insert("rate_lb_eq14".into(), rb.c_lb);
    if p.k() >= 2 {
        let ctx = OutageContext::new(p)?;
        for &g in &cfg.thresholds {
            let tag = format!("{g}");
            a.insert(format!("outage_eq24@{tag}"), ctx.outage(g, OutageForm::Exact)?.value);
            a.insert(format!("outage_eq25@{tag}"), ctx.outage(g, OutageForm::HighSnr)?.value);
            v.insert(format!("outage_eq25@{tag}"), ctx.outage_validity(g).flags());
        }
        let md = cfg.modulation;
        a.insert("aber_eq27".into(), ctx.aber(md.a, md.b)?.value);
        v.insert("aber_eq27".into(), ctx.aber_validity().flags());
    }
    if cm.small_m_warning {
        v.insert("moments_eq10".into(), "small-M".into());
    }
    Ok((a, v))
}

/// Simulates and evaluates every grid point of `cfg`.
pub fn run(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<Vec<ResultRecord>> {
    run_with_samples(cfg, threads, |_, _| Ok(()))
}

/// Like [`run`], handing each grid point's samples to `sink` first.
pub fn run_with_samples(
    cfg: &ExperimentConfig,
    threads: Option<usize>,
    mut sink: impl FnMut(usize, &SampleSet) -> Result<()>,
) -> Result<Vec<ResultRecord>> {
    cfg.validate()?;
    let opts = SimOptions {
        engine: cfg.engine,
        users: cfg.users,
        threads,
    };
    cfg.m_grid
        .iter()
        .map(|&m| {
            let start = Instant::now();
            let p = cfg.realize(m)?;
            let seed = derive_seed(cfg.seed, &[m as u64]);
            let s = simulate(&p, cfg.trials, seed, opts)?;
            sink(m, &s)?;
            let empirical = empirical_stats(&s, &cfg.thresholds, Some(cfg.modulation), &Binning::FreedmanDiaconis)?;
            let (analytic, validity) = analytic_values(&p, cfg)?;
            Ok(ResultRecord {
                scenario: cfg.scenario.clone(),
                m,
                params: p,
                seed,
                trials: cfg.trials,
                empirical,
                analytic,
                validity,
                wall_clock_s: start.elapsed().as_secs_f64(),
            })
        })
        .collect()
}

/// Summary table of configured runs; deterministic (no timings).
pub fn records_dataset(records: &[ResultRecord]) -> Dataset {
    let mut rows = Vec::new();
    for r in records {
        rows.push(vec![
            r.scenario.clone(),
            r.m.to_string(),
            r.params.k().to_string(),
            num(r.params.p()),
            num(r.params.q()),
            num(r.params.p_c()),
            r.trials.to_string(),
            r.seed.to_string(),
            num(r.empirical.sinr.mean),
            num(r.empirical.sinr.scv),
            num(r.empirical.rate),
            num(r.analytic["rate_lb_eq14"]),
            num(r.empirical.aber.unwrap_or(f64::NAN)),
            num(r.analytic.get("aber_eq27").copied().unwrap_or(f64::NAN)),
        ]);
    }
    Dataset {
        header: "scenario,M,K,P,Q,P_c,trials,seed,mean_sinr,scv_sinr,rate_emp,rate_lb_eq14,aber_emp,aber_eq27",
        rows,
    }
}

/// Closed-form curves only, as `x,value,form,valid_flags` rows over the grid.
pub fn analytic_curves(cfg: &ExperimentConfig) -> Result<Vec<relaylab::analytics::CurvePoint>> {
    use relaylab::analytics::CurvePoint;
    cfg.validate()?;
    let mut pts = Vec::new();
    for &m in &cfg.m_grid {
        let p = cfg.realize(m)?;
        let (a, v) = analytic_values(&p, cfg)?;
        for (form, value) in a {
            let valid_flags = v.get(&form).cloned().unwrap_or_else(|| "ok".into());
            pts.push(CurvePoint {
                x: m as f64,
                value,
                form,
                valid_flags,
            });
        }
    }
    Ok(pts)
}
