//! Monte Carlo checks of the analytic approximations.

use num_complex::Complex64;
use rayon::prelude::*;
use relaylab::analytics::{component_moments, gamma_mix_params, linear_regime_sinr};
use relaylab::channel::mmse_estimate_direct;
use relaylab::linksim::stats::{ks_two_sample, moments};
use relaylab::linksim::{simulate, SimOptions};
use relaylab::rng::RngStream;
use relaylab::NetworkParams;

fn linear_regime_ks(m: usize) -> f64 {
    let p = NetworkParams::with_csi_quality(m, 20, 1.0, 1.0, 0.8).unwrap();
    let s = simulate(&p, 100_000, 2024, SimOptions::default()).unwrap();
    let approx: Vec<f64> = s.p_ie().iter().map(|&y| linear_regime_sinr(y, &p)).collect();
    ks_two_sample(&approx, &s.sinr()).unwrap()
}

// The approximation freezes the signal power at its mean, whose SCV of 8/M is
// still comparable to the interference SCV of 1/(K-1) at M = 256.
#[test]
#[ignore = "signal-power fluctuation keeps KS near 0.05 at M = 256"]
fn linear_regime_sinr_tracks_full_sinr_at_256() {
    let d = linear_regime_ks(256);
    assert!(d < 0.03, "KS {d}");
}

#[test]
fn linear_regime_sinr_converges_in_distribution() {
    let ks: Vec<f64> = [64, 256, 1024].into_iter().map(linear_regime_ks).collect();
    assert!(ks[0] > ks[1] && ks[1] > ks[2], "{ks:?}");
    assert!(ks[2] < 0.03, "{ks:?}");
}

/// Pearson correlation of two interference terms of one user, with a
/// batch-means standard error.
fn interference_correlation(p: &NetworkParams, trials: u64, seed: u64) -> (f64, f64) {
    let (m, k) = (p.m(), p.k());
    let m3 = (m as f64).powi(3);
    let pairs: Vec<(f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let est = mmse_estimate_direct(m, k, p.p_c(), &mut RngStream::new(seed, t)).unwrap();
            let g0 = est.truth.g.lane(0);
            // c_j = g_0 ghat_j^H, then w = sum_j c_j fhat_j^H
            let c: Vec<Complex64> = est
                .g_hat
                .lanes()
                .map(|gj| g0.iter().zip(gj).map(|(a, b)| a * b.conj()).sum())
                .collect();
            let mut w = vec![Complex64::default(); m];
            for (cj, fj) in c.iter().zip(est.f_hat.lanes()) {
                for (o, f) in w.iter_mut().zip(fj) {
                    *o += cj * f.conj();
                }
            }
            let term = |j: usize| -> f64 {
                let v: Complex64 = w.iter().zip(est.truth.f.lane(j)).map(|(a, b)| a * b).sum();
                v.norm_sqr() / m3
            };
            (term(1), term(2))
        })
        .collect();
    let corr = |xs: &[(f64, f64)]| -> f64 {
        let n = xs.len() as f64;
        let (mx, my) = xs.iter().fold((0.0, 0.0), |a, x| (a.0 + x.0 / n, a.1 + x.1 / n));
        let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
        for (x, y) in xs {
            sxy += (x - mx) * (y - my);
            sxx += (x - mx).powi(2);
            syy += (y - my).powi(2);
        }
        sxy / (sxx * syy).sqrt()
    };
    let batches: Vec<f64> = pairs.chunks(pairs.len() / 20).map(corr).collect();
    let b = moments(&batches).unwrap();
    (corr(&pairs), b.std_err)
}

#[test]
fn interference_terms_correlate_as_modelled() {
    let p = NetworkParams::with_csi_quality(200, 10, 10.0, 10.0, 0.8).unwrap();
    let rho = gamma_mix_params(&p).unwrap().rho;
    let (r, se) = interference_correlation(&p, 100_000, 8);
    assert!((r - rho * rho).abs() < 3.0 * se, "corr {r} vs {} (se {se})", rho * rho);
}

#[test]
fn interference_dominates_error_variance_in_linear_regime() {
    for k in [3, 8, 20] {
        let p = NetworkParams::with_csi_quality(128, k, 1.0, 1.0, 0.8).unwrap();
        let s = simulate(&p, 20_000, 70 + k as u64, SimOptions::default()).unwrap();
        let scale = (k - 1) as f64;
        let v_ie = moments(&s.p_ie().iter().map(|x| x * scale).collect::<Vec<_>>()).unwrap().variance;
        for idx in [4, 5] {
            let v = moments(&s.component(idx)).unwrap().variance;
            assert!(v_ie > v, "K={k}: {v_ie} vs {v}");
        }
    }
}

// Exact finite-M signal mean: P_c^4 ((1 + 1/M)^2 + (K - 1)/M^2).
fn exact_signal_mean(m: f64, k: f64, pc: f64) -> f64 {
    pc.powi(4) * ((1.0 + 1.0 / m).powi(2) + (k - 1.0) / (m * m))
}

#[test]
fn signal_mean_matches_exact_finite_m_value() {
    let p = NetworkParams::with_csi_quality(200, 10, 10.0, 10.0, 0.8).unwrap();
    let s = simulate(&p, 100_000, 99, SimOptions::default()).unwrap();
    let se = moments(&s.component(0)).unwrap();
    let exact = exact_signal_mean(200.0, 10.0, 0.8);
    assert!((se.mean - exact).abs() < 3.0 * se.std_err, "{} vs {exact}", se.mean);
    assert!((se.scv / 0.04 - 1.0).abs() < 0.1, "{}", se.scv);
    let ie = moments(&s.p_ie()).unwrap();
    let expected = component_moments(&p).p_ie.mean;
    assert!((ie.mean / expected - 1.0).abs() < 0.01, "{} vs {expected}", ie.mean);
}

// The dominant-term signal mean sits 1.025% below the exact value here.
#[test]
#[ignore = "dominant-term mean is biased by 2/M + (K-1)/M^2"]
fn signal_mean_within_one_percent_of_dominant_term() {
    let p = NetworkParams::with_csi_quality(200, 10, 10.0, 10.0, 0.8).unwrap();
    let s = simulate(&p, 100_000, 99, SimOptions::default()).unwrap();
    let se = moments(&s.component(0)).unwrap();
    assert!((se.mean / 0.4096 - 1.0).abs() < 0.01, "{}", se.mean);
}

fn case4_interference_scv_ratio(m: usize) -> f64 {
    let p = NetworkParams::with_csi_quality(m, 20, 1.0, 1.0, 0.8).unwrap();
    let s = simulate(&p, 100_000, 404, SimOptions::default()).unwrap();
    moments(&s.p_ie()).unwrap().scv * 19.0
}

// At M = 200 the finite-M correction still adds about 40%.
#[test]
#[ignore = "SCV of P_ie is about 1.4/(K-1) at M = 200"]
fn interference_scv_near_inverse_k_minus_one_at_200() {
    let r = case4_interference_scv_ratio(200);
    assert!((r - 1.0).abs() < 0.15, "{r}");
}

#[test]
fn interference_scv_approaches_inverse_k_minus_one() {
    let r: Vec<f64> = [200, 1024, 8192].into_iter().map(case4_interference_scv_ratio).collect();
    assert!(r[0] > r[1] && r[1] > r[2], "{r:?}");
    assert!((r[2] - 1.0).abs() < 0.05, "{r:?}");
}
