//! Distributional agreement between the three trial engines and the two
//! estimation paths.

use relaylab::channel::{draw_channels, mmse_estimate_direct, mmse_estimate_pilot, PilotConfig};
use relaylab::linksim::stats::{ks_two_sample, moments};
use relaylab::linksim::{simulate, Engine, SimOptions, UserSelection, COMPONENT_NAMES};
use relaylab::rng::RngStream;
use relaylab::NetworkParams;

fn opts(engine: Engine) -> SimOptions {
    SimOptions {
        engine,
        ..SimOptions::default()
    }
}

// Two-sample KS critical value at alpha = 1e-3 for equal sizes n.
fn ks_critical(n: usize) -> f64 {
    1.95 * (2.0 / n as f64).sqrt()
}

#[test]
fn reduced_engine_matches_direct_engine_per_component() {
    let p = NetworkParams::with_csi_quality(32, 4, 3.0, 5.0, 0.7).unwrap();
    let n = 20_000;
    let red = simulate(&p, n, 11, opts(Engine::Reduced)).unwrap();
    let dir = simulate(&p, n, 12, opts(Engine::Direct)).unwrap();
    for (idx, name) in COMPONENT_NAMES.iter().enumerate() {
        let d = ks_two_sample(&red.component(idx), &dir.component(idx)).unwrap();
        assert!(d < ks_critical(n), "{name}: KS {d}");
    }
    let d = ks_two_sample(&red.sinr(), &dir.sinr()).unwrap();
    assert!(d < ks_critical(n), "sinr: KS {d}");
}

#[test]
fn pilot_engine_matches_direct_engine() {
    // tau = K = 3 and P_t = 1 give P_c = 3/4
    let p = NetworkParams::with_csi_quality(24, 3, 2.0, 2.0, 0.75).unwrap();
    let n = 8_000;
    let pil = simulate(&p, n, 21, opts(Engine::Pilot)).unwrap();
    let dir = simulate(&p, n, 22, opts(Engine::Direct)).unwrap();
    let d = ks_two_sample(&pil.sinr(), &dir.sinr()).unwrap();
    assert!(d < ks_critical(n), "KS {d}");
}

#[test]
fn pilot_and_direct_estimate_magnitudes_agree() {
    let (m, k) = (50, 4);
    let pc = PilotConfig::dft(k, k, 0.5).unwrap();
    let quality = pc.csi_quality();
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for t in 0..500u64 {
        let mut rng = RngStream::new(3, t);
        let ch = draw_channels(m, k, &mut rng).unwrap();
        let est = mmse_estimate_pilot(&ch, &pc, &mut rng).unwrap();
        a.extend(est.f_hat.as_slice().iter().map(|z| z.norm()));
        let est = mmse_estimate_direct(m, k, quality, &mut RngStream::new(4, t)).unwrap();
        b.extend(est.f_hat.as_slice().iter().map(|z| z.norm()));
    }
    assert_eq!(a.len(), 100_000);
    let d = ks_two_sample(&a, &b).unwrap();
    assert!(d < 0.01, "KS {d}");
}

#[test]
fn first_user_and_random_user_agree() {
    let p = NetworkParams::with_csi_quality(64, 6, 10.0, 10.0, 0.8).unwrap();
    let n = 40_000;
    let first = moments(&simulate(&p, n, 31, SimOptions::default()).unwrap().sinr()).unwrap();
    let random = SimOptions {
        users: UserSelection::Random,
        ..SimOptions::default()
    };
    let rand = moments(&simulate(&p, n, 32, random).unwrap().sinr()).unwrap();
    let se = (first.std_err.powi(2) + rand.std_err.powi(2)).sqrt();
    assert!((first.mean - rand.mean).abs() < 4.0 * se, "{} vs {}", first.mean, rand.mean);
}

#[test]
fn averaging_over_users_keeps_the_mean_and_shrinks_the_spread() {
    let p = NetworkParams::with_csi_quality(64, 6, 10.0, 10.0, 0.8).unwrap();
    let n = 20_000;
    let one = simulate(&p, n, 41, SimOptions::default()).unwrap();
    let all = SimOptions {
        users: UserSelection::AllUsers,
        ..SimOptions::default()
    };
    let avg = simulate(&p, n, 42, all).unwrap();
    let (m1, ma) = (moments(&one.p_ie()).unwrap(), moments(&avg.p_ie()).unwrap());
    let se = (m1.std_err.powi(2) + ma.std_err.powi(2)).sqrt();
    assert!((m1.mean - ma.mean).abs() < 4.0 * se);
    assert!(ma.variance < m1.variance);
}

#[test]
fn single_pair_network_runs() {
    let p = NetworkParams::with_csi_quality(16, 1, 5.0, 5.0, 0.6).unwrap();
    for engine in [Engine::Reduced, Engine::Direct] {
        let s = simulate(&p, 500, 5, opts(engine)).unwrap();
        assert!(s.p_ie().iter().all(|&x| x == 0.0));
        assert!(s.sinr().iter().all(|x| x.is_finite() && *x > 0.0));
    }
}
