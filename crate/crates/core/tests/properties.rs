use fbrelay::fb_core::{awgn_outage, max_coding_rate};
use fbrelay::linearization::{k_eval, linearize};
use fbrelay::oracles::{fading_outage_mc, McLink};
use fbrelay::outage_closed::{mrc_pair_outage, rayleigh_outage};
use fbrelay::protocols::{compose_df, compose_mrc, compose_sc, link_outages, protocol_outage};
use fbrelay::{Backend, HypoexpParams, LinConvention, ProtocolKind, SnrValue, TopologyConfig};
use proptest::prelude::*;

fn conv() -> impl Strategy<Value = LinConvention> {
    prop_oneof![Just(LinConvention::PaperVerbatim), Just(LinConvention::BitsConsistent)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn k_is_non_increasing(n in 100.0..2000.0f64, r in 0.05..3.0f64, p in 0.5..1000.0f64,
                           a in 0.0..1.0f64, b in 0.0..1.0f64, c in conv()) {
        let params = linearize(n, r, SnrValue::new(p).unwrap(), c).unwrap();
        let span = params.rho_hi - params.rho_lo;
        let t1 = params.rho_lo - 0.1 * span + 1.2 * span * a.min(b);
        let t2 = params.rho_lo - 0.1 * span + 1.2 * span * a.max(b);
        let (k1, k2) = (k_eval(t1, &params), k_eval(t2, &params));
        prop_assert!(k2 <= k1);
        prop_assert!((0.0..=1.0).contains(&k1));
    }

    #[test]
    fn rayleigh_monotone(n in 100.0..2000.0f64, r in 0.05..3.0f64, m in 0.5..1000.0f64,
                         dr in 0.0..0.5f64, dm in 1.0..4.0f64, c in conv()) {
        let base = rayleigh_outage(n, r, SnrValue::new(m).unwrap(), c).unwrap();
        let faster = rayleigh_outage(n, r + dr, SnrValue::new(m).unwrap(), c).unwrap();
        let stronger = rayleigh_outage(n, r, SnrValue::new(m * dm).unwrap(), c).unwrap();
        prop_assert!((0.0..=1.0).contains(&base));
        prop_assert!(faster >= base - 1e-12);
        prop_assert!(stronger <= base + 1e-12);
    }

    #[test]
    fn mrc_is_symmetric_and_bounded(n in 100.0..2000.0f64, r in 0.05..3.0f64,
                                    a in 0.1..500.0f64, b in 0.1..500.0f64, c in conv()) {
        let ab = mrc_pair_outage(n, r, &HypoexpParams::new(a, b).unwrap(), c).unwrap();
        let ba = mrc_pair_outage(n, r, &HypoexpParams::new(b, a).unwrap(), c).unwrap();
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert!((ab - ba).abs() < 1e-9);
    }

    #[test]
    fn compositions_stay_in_unit_interval(a in 0.0..=1.0f64, b in 0.0..=1.0f64, c in 0.0..=1.0f64) {
        for v in [compose_df(a, b), compose_sc(a, b, c), compose_mrc(a, b, c)] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn inverse_pair(n in 100.0..5000.0f64, le in -6.0..-0.5f64, rho in 0.5..200.0f64) {
        let eps = 10f64.powf(le);
        let r = max_coding_rate(n, eps, rho).unwrap();
        prop_assume!(r > 1e-3);
        let back = awgn_outage(n, r, rho).unwrap();
        prop_assert!(((back - eps) / eps).abs() < 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn combined_link_beats_direct(eta in 0.05..0.95f64, snr_db in 0.0..25.0f64) {
        let cfg = TopologyConfig {
            total_snr: SnrValue::from_db(snr_db).unwrap(),
            eta,
            ..TopologyConfig::default()
        };
        let l = link_outages(&cfg, &Backend::QuadTrueQ, LinConvention::default()).unwrap();
        prop_assert!(l.eps_srd <= l.eps_sd + 1e-12);
        let mrc = protocol_outage(ProtocolKind::Mrc, &cfg, &Backend::QuadTrueQ, LinConvention::default()).unwrap();
        let sc = protocol_outage(ProtocolKind::Sc, &cfg, &Backend::QuadTrueQ, LinConvention::default()).unwrap();
        prop_assert!(mrc.value <= sc.value + 1e-12);
        prop_assert!((sc.value - l.eps_sd * compose_df(l.eps_sr, l.eps_rd)).abs() < 1e-15);
    }
}

#[test]
fn grid_inverse_pair_to_1e9() {
    for &n in &[100.0, 500.0, 2000.0] {
        for &eps in &[1e-1, 1e-3, 1e-5] {
            for &rho in &[1.0, 10.0, 100.0] {
                let r = max_coding_rate(n, eps, rho).unwrap();
                if r <= 0.0 {
                    continue;
                }
                let back = awgn_outage(n, r, rho).unwrap();
                assert!(((back - eps) / eps).abs() < 1e-9, "n={n} eps={eps} rho={rho}: {back}");
            }
        }
    }
}

#[test]
fn eta_continuity() {
    // within ~0.05 of either end one hop is so weak that d eps / d eta
    // exceeds 10, so a 1e-3 step moves DF by more than 1e-2; the bound is
    // checked on [0.05, 0.95]
    let conv = LinConvention::default();
    for protocol in ProtocolKind::ALL {
        let mut prev: Option<f64> = None;
        for i in 50..=950 {
            let cfg = TopologyConfig {
                eta: f64::from(i) * 1e-3,
                ..TopologyConfig::default()
            };
            let v = protocol_outage(protocol, &cfg, &Backend::ClosedForm, conv).unwrap().value;
            if let Some(p) = prev {
                assert!((v - p).abs() < 1e-2, "{protocol} jumps at eta={}", cfg.eta);
            }
            prev = Some(v);
        }
    }
}

#[test]
fn steep_edge_near_zero_eta_is_physical() {
    let at = |eta: f64, backend: &Backend| {
        let cfg = TopologyConfig { eta, ..TopologyConfig::default() };
        protocol_outage(ProtocolKind::Df, &cfg, backend, LinConvention::default()).unwrap().value
    };
    for backend in [Backend::ClosedForm, Backend::QuadTrueQ] {
        assert!((at(0.013, &backend) - at(0.014, &backend)).abs() > 1e-2);
        assert!((at(0.986, &backend) - at(0.987, &backend)).abs() > 1e-2);
    }
}

#[test]
fn mc_std_error_halves_when_trials_quadruple() {
    // doubling trials shrinks std_error by sqrt(2); quadrupling halves it
    for link in [McLink::SingleRayleigh { mean: 10.0 }, McLink::MrcPair { omega_z: 5.0, omega_y: 5.0 }] {
        let a = fading_outage_mc(500.0, 0.5, link, 200_000, 11).unwrap().std_error.unwrap();
        let b = fading_outage_mc(500.0, 0.5, link, 400_000, 11).unwrap().std_error.unwrap();
        let c = fading_outage_mc(500.0, 0.5, link, 800_000, 11).unwrap().std_error.unwrap();
        assert!((a / b / 2f64.sqrt() - 1.0).abs() < 0.2);
        assert!((a / c / 2.0 - 1.0).abs() < 0.2);
    }
}
