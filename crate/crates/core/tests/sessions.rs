use hpqkd_core::protocol::{run_session, run_session_detailed, Mode, SessionConfig};

const SLOTS: usize = 6000;

fn ratio(mode: Mode, seed: u64) -> f64 {
    let report = run_session(&SessionConfig::new(mode, SLOTS, seed)).unwrap();
    report.rate_ratio_vs_baseline.unwrap()
}

#[test]
fn rate_ratios_follow_one_two_two_four() {
    for (mode, expected) in [
        (Mode::BaselineBb84, 1.0),
        (Mode::Hybrid, 2.0),
        (Mode::Parallel, 2.0),
        (Mode::HybridParallel, 4.0),
    ] {
        let r = ratio(mode, 11);
        assert!((r - expected).abs() < 0.1 * expected, "{mode}: {r}");
    }
}

#[test]
fn same_seed_same_report() {
    for mode in Mode::ALL {
        let config = SessionConfig::new(mode, 2000, 99);
        let a = run_session_detailed(&config).unwrap();
        let b = run_session_detailed(&config).unwrap();
        assert_eq!(a, b, "{mode}");
    }
}

#[test]
fn ideal_channel_keys_agree() {
    for mode in Mode::ALL {
        let out = run_session_detailed(&SessionConfig::new(mode, 3000, 5)).unwrap();
        assert_eq!(out.report.errors, 0, "{mode}");
        assert_eq!(out.alice_key, out.bob_key, "{mode}");
        assert_eq!(out.alice_key.len(), out.report.sifted_bits);
    }
}

#[test]
fn basis_faults_raise_qber_by_half_the_fault_rate() {
    let mut config = SessionConfig::new(Mode::HybridParallel, 20_000, 3);
    config.bob_basis_fault_fraction = 0.2;
    let q = run_session(&config).unwrap().qber;
    assert!((q - 0.1).abs() < 0.015, "qber {q}");
}

#[test]
fn hybrid_transcripts_never_name_a_basis() {
    let mut config = SessionConfig::new(Mode::Hybrid, 500, 8);
    config.record_transcript = true;
    let report = run_session(&config).unwrap();
    let transcript = report.transcript.as_ref().unwrap();
    assert!(transcript.iter().all(|e| e.announced_basis.is_none()));

    config.mode = Mode::BaselineBb84;
    let report = run_session(&config).unwrap();
    let transcript = report.transcript.as_ref().unwrap();
    assert!(transcript.iter().all(|e| e.announced_basis.is_some()));
}
