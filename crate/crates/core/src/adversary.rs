//! Eavesdropper models against the mesoscopic and weak-pulse channels.
//!
//! * Brute-force polarization identification: Eve splits a mesoscopic pulse
//!   into `M` equal parts, measures part `i` behind a PBS rotated to the
//!   `i`-th candidate angle, and sorts each part into one of three cases
//!   (both detectors click, neither clicks, exactly one clicks).
//! * Amplifier attack: boosting the pulse adds unpolarized ASE photons that
//!   Bob sees in the arm expected to stay dark.
//! * Photon-number splitting: the fraction of weak pulses carrying enough
//!   photons for Eve to split.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::polarization::{
    angle_distance, canonical_angle, pbs_measure, rotate, DetectionEvent, TwoModeCoherentState,
};
use crate::rng::{poisson, stream};

/// Eve's analyzer bank for the brute-force attack.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BruteForceConfig {
    /// Sorted, distinct analyzer angles in `[0, π)`. Each analyzer also
    /// resolves its orthogonal partner `φ + π/2` on the reflect arm.
    pub candidate_angles: Vec<f64>,
    /// Fraction of Alice's pulse Eve diverts (1 = the whole pulse).
    pub tap_fraction: f64,
    pub detector_efficiency: f64,
    pub dark_count_prob: f64,
}

const ANGLE_EPS: f64 = 1e-9;

impl BruteForceConfig {
    /// `φ_i = i·π/(2M)`: the `M` first-quadrant bases of the hybrid
    /// protocol, each with its second-quadrant partner.
    pub fn first_quadrant(basis_count: usize) -> Result<Self> {
        Self::with_angles(
            (0..basis_count)
                .map(|i| i as f64 * FRAC_PI_2 / basis_count as f64)
                .collect(),
        )
    }

    /// `φ_i = i·π/M`: `M` polarizations spread over the half circle.
    pub fn half_circle(basis_count: usize) -> Result<Self> {
        Self::with_angles(
            (0..basis_count)
                .map(|i| i as f64 * PI / basis_count as f64)
                .collect(),
        )
    }

    pub fn with_angles(candidate_angles: Vec<f64>) -> Result<Self> {
        let config = Self {
            candidate_angles,
            tap_fraction: 1.0,
            detector_efficiency: 1.0,
            dark_count_prob: 0.0,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let a = &self.candidate_angles;
        if a.len() < 2 {
            return Err(invalid("basis_count", "brute force needs M >= 2"));
        }
        if a.iter().any(|&x| !(0.0..PI).contains(&x)) {
            return Err(invalid("candidate_angles", "angles must lie in [0, π)"));
        }
        if a.windows(2).any(|w| w[1] - w[0] <= ANGLE_EPS) {
            return Err(invalid(
                "candidate_angles",
                "angles must be sorted and distinct",
            ));
        }
        for (field, p) in [
            ("tap_fraction", self.tap_fraction),
            ("detector_efficiency", self.detector_efficiency),
            ("dark_count_prob", self.dark_count_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(invalid(field, "must be a probability"));
            }
        }
        Ok(())
    }

    pub fn basis_count(&self) -> usize {
        self.candidate_angles.len()
    }

    /// Candidate that an angle belongs to: an exact analyzer match first,
    /// otherwise the analyzer whose orthogonal partner is closest.
    pub fn basis_of(&self, angle: f64) -> usize {
        if let Some(i) = self
            .candidate_angles
            .iter()
            .position(|&phi| angle_distance(angle, phi) < ANGLE_EPS)
        {
            return i;
        }
        let mut best = (f64::INFINITY, 0);
        for (i, &phi) in self.candidate_angles.iter().enumerate() {
            let d = angle_distance(angle, phi).min(angle_distance(angle, phi + FRAC_PI_2));
            if d < best.0 {
                best = (d, i);
            }
        }
        best.1
    }

    /// Alice's polarization for candidate `index`, optionally its partner.
    pub fn alice_angle(&self, index: usize, partner: bool) -> f64 {
        let phi = self.candidate_angles[index];
        canonical_angle(if partner { phi + FRAC_PI_2 } else { phi })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttackOutcome {
    /// Eve's polarization estimate; `None` if every candidate was eliminated.
    pub estimated_angle: Option<f64>,
    pub estimated_index: Option<usize>,
    pub true_index: usize,
    /// Sub-pulses with clicks in both detectors.
    pub case_both: usize,
    /// Sub-pulses with no clicks.
    pub case_none: usize,
    /// Sub-pulses with exactly one detector clicking.
    pub case_one: usize,
    pub success: bool,
}

/// `k·ln λ − λ`, the hypothesis-dependent part of a Poisson log-likelihood.
fn poisson_log_weight(k: u64, lambda: f64) -> f64 {
    if lambda <= 0.0 {
        if k == 0 {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    } else {
        k as f64 * lambda.ln() - lambda
    }
}

fn dark_click<R: Rng + ?Sized>(config: &BruteForceConfig, rng: &mut R) -> u64 {
    u64::from(config.dark_count_prob > 0.0 && rng.random_bool(config.dark_count_prob))
}

/// Brute-force identification of the pulse polarization.
///
/// Candidates whose own sub-pulse lit both detectors are eliminated. Among
/// the rest, those whose sub-pulse lit exactly one detector are eligible;
/// each implies a polarization (the analyzer angle for a transmit click,
/// its partner for a reflect click) and is scored by the Poisson
/// log-likelihood of every sub-pulse's counts under that polarization.
/// The best score wins with uniform tie-breaking. If no candidate is
/// eligible Eve guesses uniformly among the non-eliminated ones.
pub fn brute_force_identify<R: Rng + ?Sized>(
    pulse: &TwoModeCoherentState,
    config: &BruteForceConfig,
    rng: &mut R,
) -> Result<AttackOutcome> {
    config.validate()?;
    let m = config.basis_count();
    let tapped = pulse.scaled(config.tap_fraction);
    let sub = tapped.scaled(1.0 / m as f64);
    let lambda = sub.mean_photons();

    let events: Vec<DetectionEvent> = config
        .candidate_angles
        .iter()
        .map(|&phi| {
            // detector inefficiency thins the coherent state
            let rotated = rotate(sub, -phi).scaled(config.detector_efficiency);
            let mut e = pbs_measure(&rotated, 0.0, rng);
            e.counts_transmit += dark_click(config, rng);
            e.counts_reflect += dark_click(config, rng);
            e
        })
        .collect();

    let case_both = events.iter().filter(|e| e.both_clicked()).count();
    let case_none = events.iter().filter(|e| e.none_clicked()).count();
    let case_one = m - case_both - case_none;

    let eta = config.detector_efficiency;
    let dark = config.dark_count_prob;
    let score = |hypothesis: f64| -> f64 {
        config
            .candidate_angles
            .iter()
            .zip(&events)
            .map(|(&phi, e)| {
                let c = (hypothesis - phi).cos().powi(2);
                poisson_log_weight(e.counts_transmit, eta * lambda * c + dark)
                    + poisson_log_weight(e.counts_reflect, eta * lambda * (1.0 - c) + dark)
            })
            .sum()
    };

    let eligible: Vec<f64> = config
        .candidate_angles
        .iter()
        .zip(&events)
        .filter(|(_, e)| e.transmit_clicked() != e.reflect_clicked())
        .map(|(&phi, e)| {
            if e.transmit_clicked() {
                phi
            } else {
                canonical_angle(phi + FRAC_PI_2)
            }
        })
        .collect();

    let estimated_angle = if eligible.is_empty() {
        let survivors: Vec<f64> = config
            .candidate_angles
            .iter()
            .zip(&events)
            .filter(|(_, e)| !e.both_clicked())
            .map(|(&phi, _)| phi)
            .collect();
        (!survivors.is_empty()).then(|| survivors[rng.random_range(0..survivors.len())])
    } else {
        let scored: Vec<(f64, f64)> = eligible.iter().map(|&h| (h, score(h))).collect();
        let best = scored.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
        let tol = 1e-9 * (1.0 + best.abs());
        let ties: Vec<f64> = scored
            .iter()
            .filter(|(_, s)| *s == best || (best - s).abs() <= tol)
            .map(|(h, _)| *h)
            .collect();
        Some(ties[rng.random_range(0..ties.len())])
    };

    let true_index = config.basis_of(pulse.theta);
    let estimated_index = estimated_angle.map(|a| config.basis_of(a));
    Ok(AttackOutcome {
        estimated_angle,
        estimated_index,
        true_index,
        case_both,
        case_none,
        case_one,
        success: estimated_index == Some(true_index),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SuccessPoint {
    pub alpha_sq: f64,
    pub basis_count: usize,
    pub trials: u64,
    pub successes: u64,
    pub success_rate: f64,
    /// Binomial standard error of `success_rate`.
    pub stderr: f64,
}

impl SuccessPoint {
    fn new(alpha_sq: f64, basis_count: usize, trials: u64, successes: u64) -> Self {
        let p = successes as f64 / trials as f64;
        Self {
            alpha_sq,
            basis_count,
            trials,
            successes,
            success_rate: p,
            stderr: (p * (1.0 - p) / trials as f64).sqrt(),
        }
    }
}

const ROLE_ATTACK: u64 = 0xE7E0_0000;

/// Brute-force success rate at each `|α|²` in the grid.
///
/// Every trial draws a fresh Alice polarization from the candidate set
/// (either an analyzer angle or its partner). Trial `t` of grid point `g`
/// uses the stream `(seed, t, g)`, so results are independent of thread
/// count.
pub fn attack_success_curve(
    alpha_sq_grid: &[f64],
    config: &BruteForceConfig,
    trials: u64,
    seed: u64,
) -> Result<Vec<SuccessPoint>> {
    if alpha_sq_grid.is_empty() {
        return Err(Error::Empty("alpha_sq grid"));
    }
    if trials < 100 {
        return Err(invalid("trials", "need at least 100 trials per grid point"));
    }
    config.validate()?;
    if alpha_sq_grid.iter().any(|a| a.is_nan() || *a < 0.0) {
        return Err(invalid("alpha_sq", "mean photon numbers must be >= 0"));
    }
    let m = config.basis_count();
    alpha_sq_grid
        .iter()
        .enumerate()
        .map(|(g, &alpha_sq)| {
            let successes = (0..trials)
                .into_par_iter()
                .map(|t| {
                    let mut rng = stream(seed, t, ROLE_ATTACK + g as u64);
                    let index = rng.random_range(0..m);
                    let partner = rng.random_bool(0.5);
                    let pulse = TwoModeCoherentState::with_mean_photons(
                        alpha_sq,
                        config.alice_angle(index, partner),
                    );
                    brute_force_identify(&pulse, config, &mut rng).map(|o| u64::from(o.success))
                })
                .sum::<Result<u64>>()?;
            Ok(SuccessPoint::new(alpha_sq, m, trials, successes))
        })
        .collect()
}

/// Pulse after an optical amplifier, with its unpolarized ASE background.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AmplifiedPulse {
    pub signal: TwoModeCoherentState,
    /// Mean ASE photons, split evenly over any analyzer's two arms.
    pub ase_mean: f64,
}

impl AmplifiedPulse {
    /// PBS counts: polarized signal plus `ase_mean/2` Poisson background
    /// per arm.
    pub fn measure<R: Rng + ?Sized>(&self, analyzer_angle: f64, rng: &mut R) -> DetectionEvent {
        let e = pbs_measure(&self.signal, analyzer_angle, rng);
        let half = self.ase_mean / 2.0;
        DetectionEvent::new(
            e.counts_transmit + poisson(rng, half),
            e.counts_reflect + poisson(rng, half),
        )
    }
}

/// Amplifies `pulse` by `gain`. Without an explicit `ase_photons` the
/// background is `G − 1` photons per polarization mode, `2(G − 1)` in
/// total. Noiseless gain is rejected.
pub fn amplifier_attack(
    pulse: &TwoModeCoherentState,
    gain: f64,
    ase_photons: Option<f64>,
) -> Result<AmplifiedPulse> {
    if !(gain >= 1.0 && gain.is_finite()) {
        return Err(invalid("gain", "amplifier gain must be >= 1"));
    }
    let ase_mean = ase_photons.unwrap_or(2.0 * (gain - 1.0));
    if ase_mean.is_nan() || ase_mean < 0.0 {
        return Err(invalid("ase_photons", "must be >= 0"));
    }
    if gain > 1.0 && ase_mean == 0.0 {
        return Err(invalid(
            "ase_photons",
            "amplification without ASE is not physical",
        ));
    }
    Ok(AmplifiedPulse {
        signal: pulse.scaled(gain),
        ase_mean,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnomalyVerdict {
    pub events: u64,
    pub wrong_arm_clicks: u64,
    pub wrong_arm_rate: f64,
    /// `expected_dark_rate` plus five binomial standard errors.
    pub threshold: f64,
    pub anomaly: bool,
}

/// Checks Bob's dark arm against the expected dark-count rate.
///
/// Events are in Bob's expected frame: the transmit arm is the one Alice's
/// polarization should light and the reflect arm should only see dark
/// counts (use [`DetectionEvent::swapped`] to align).
pub fn bob_anomaly_monitor(
    events: &[DetectionEvent],
    expected_dark_rate: f64,
) -> Result<AnomalyVerdict> {
    if events.is_empty() {
        return Err(Error::Empty("detection events"));
    }
    if !(0.0..=1.0).contains(&expected_dark_rate) {
        return Err(invalid("expected_dark_rate", "must be a probability"));
    }
    let n = events.len() as u64;
    let clicks = events.iter().filter(|e| e.reflect_clicked()).count() as u64;
    let rate = clicks as f64 / n as f64;
    let p = expected_dark_rate;
    let threshold = p + 5.0 * (p * (1.0 - p) / n as f64).sqrt();
    Ok(AnomalyVerdict {
        events: n,
        wrong_arm_clicks: clicks,
        wrong_arm_rate: rate,
        threshold,
        anomaly: rate > threshold,
    })
}

/// Weak-pulse source as seen by a photon-number-splitting attacker.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PnsModel {
    pub mu: f64,
    /// Photons a pulse needs before splitting pays off: 2 when bases are
    /// announced, 3 when they never are.
    pub min_exploitable: u32,
}

impl PnsModel {
    pub const ANNOUNCED_BASES: u32 = 2;
    pub const HIDDEN_BASES: u32 = 3;

    pub fn new(mu: f64, min_exploitable: u32) -> Result<Self> {
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(invalid("mu", "mean photon number must be >= 0"));
        }
        if !(2..=3).contains(&min_exploitable) {
            return Err(invalid("min_exploitable", "threshold must be 2 or 3"));
        }
        Ok(Self {
            mu,
            min_exploitable,
        })
    }
}

/// `P(n ≥ min_exploitable)` for `n ~ Poisson(μ)`.
pub fn pns_exploitable_fraction(model: &PnsModel) -> f64 {
    let mu = model.mu;
    if mu == 0.0 {
        return 0.0;
    }
    // For small μ the tail is far below machine epsilon relative to 1, so
    // sum it directly instead of subtracting from 1.
    let mut term = (-mu).exp();
    let mut head = 0.0;
    for k in 0..model.min_exploitable {
        head += term;
        term *= mu / f64::from(k + 1);
    }
    if mu < 1.0 {
        let mut tail = 0.0;
        let mut k = model.min_exploitable;
        while term > tail * 1e-17 && k < 1000 {
            tail += term;
            k += 1;
            term *= mu / f64::from(k);
        }
        tail
    } else {
        (1.0 - head).max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FractionEstimate {
    pub samples: u64,
    pub hits: u64,
    pub fraction: f64,
    pub stderr: f64,
}

/// Monte Carlo estimate of [`pns_exploitable_fraction`].
pub fn pns_monte_carlo<R: Rng + ?Sized>(
    model: &PnsModel,
    samples: u64,
    rng: &mut R,
) -> Result<FractionEstimate> {
    if samples == 0 {
        return Err(invalid("samples", "must be >= 1"));
    }
    let hits = (0..samples)
        .filter(|_| poisson(rng, model.mu) >= u64::from(model.min_exploitable))
        .count() as u64;
    let p = hits as f64 / samples as f64;
    Ok(FractionEstimate {
        samples,
        hits,
        fraction: p,
        stderr: (p * (1.0 - p) / samples as f64).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_layouts_and_validation() {
        let fq = BruteForceConfig::first_quadrant(4).unwrap();
        assert_eq!(fq.candidate_angles.len(), 4);
        assert!(fq.candidate_angles.iter().all(|&a| a < FRAC_PI_2));
        assert_eq!(fq.basis_of(fq.candidate_angles[2] + FRAC_PI_2), 2);
        let hc = BruteForceConfig::half_circle(4).unwrap();
        assert_eq!(hc.basis_of(hc.candidate_angles[1] + FRAC_PI_2), 3);
        assert!(BruteForceConfig::first_quadrant(1).is_err());
        assert!(BruteForceConfig::with_angles(vec![0.5, 0.2]).is_err());
        assert!(BruteForceConfig::with_angles(vec![0.1, 3.5]).is_err());
    }

    #[test]
    fn case_partition_and_energy_split() {
        let config = BruteForceConfig::first_quadrant(16).unwrap();
        let mut rng = stream(9, 0, 0);
        for alpha_sq in [0.0, 1.0, 16.0, 500.0] {
            for k in 0..50 {
                let pulse = TwoModeCoherentState::with_mean_photons(
                    alpha_sq,
                    config.alice_angle(k % 16, k % 2 == 0),
                );
                let o = brute_force_identify(&pulse, &config, &mut rng).unwrap();
                assert_eq!(o.case_both + o.case_none + o.case_one, 16);
            }
        }
        let pulse = TwoModeCoherentState::with_mean_photons(37.0, 0.3);
        let sub = pulse.scaled(1.0 / 16.0);
        assert!((sub.mean_photons() * 16.0 - 37.0).abs() < 1e-12);
    }

    #[test]
    fn vacuum_gives_no_information() {
        let config = BruteForceConfig::first_quadrant(8).unwrap();
        let mut rng = stream(1, 0, 0);
        let pulse = TwoModeCoherentState::with_mean_photons(0.0, config.alice_angle(3, false));
        let o = brute_force_identify(&pulse, &config, &mut rng).unwrap();
        assert_eq!(o.case_none, 8);
        assert!(o.estimated_angle.is_some());
    }

    #[test]
    fn bright_pulses_are_identified() {
        // M = 8: |α|² = 64·M leaves adjacent candidates far apart.
        let config = BruteForceConfig::first_quadrant(8).unwrap();
        let curve = attack_success_curve(&[64.0 * 8.0], &config, 1000, 5).unwrap();
        assert!(curve[0].success_rate >= 0.99, "{curve:?}");
    }

    #[test]
    fn dim_pulses_stay_near_chance() {
        let config = BruteForceConfig::first_quadrant(16).unwrap();
        let p = attack_success_curve(&[1.0], &config, 1000, 6).unwrap()[0];
        assert!(p.success_rate <= 2.0 / 16.0 + 5.0 * p.stderr, "{p:?}");
    }

    #[test]
    fn coin_flip_for_two_bases() {
        let config = BruteForceConfig::first_quadrant(2).unwrap();
        let p = attack_success_curve(&[0.0], &config, 4000, 8).unwrap()[0];
        assert!(
            (p.success_rate - 0.5).abs() <= 3.0 * (0.25f64 / 4000.0).sqrt(),
            "{p:?}"
        );
    }

    #[test]
    fn curve_is_deterministic_and_validates() {
        let config = BruteForceConfig::first_quadrant(4).unwrap();
        let a = attack_success_curve(&[0.5, 4.0], &config, 200, 77).unwrap();
        let b = attack_success_curve(&[0.5, 4.0], &config, 200, 77).unwrap();
        assert_eq!(a, b);
        assert!(attack_success_curve(&[], &config, 200, 1).is_err());
        assert!(attack_success_curve(&[1.0], &config, 99, 1).is_err());
    }

    #[test]
    fn amplifier_examples() {
        let pulse = TwoModeCoherentState::with_mean_photons(10.0, 0.4);
        let same = amplifier_attack(&pulse, 1.0, Some(0.0)).unwrap();
        assert_eq!(same.signal, pulse);
        assert_eq!(same.ase_mean, 0.0);
        assert!(amplifier_attack(&pulse, 4.0, Some(0.0)).is_err());
        assert!(amplifier_attack(&pulse, 0.5, None).is_err());

        let amp = amplifier_attack(&pulse, 4.0, None).unwrap();
        assert!((amp.signal.mean_photons() - 40.0).abs() < 1e-12);
        assert_eq!(amp.ase_mean, 6.0);

        let mut rng = stream(4, 0, 0);
        let n = 20_000;
        let (mut signal, mut crossed) = (0u64, 0u64);
        for _ in 0..n {
            let e = amp.measure(0.4, &mut rng);
            signal += e.counts_transmit;
            crossed += e.counts_reflect;
        }
        let mean_t = signal as f64 / n as f64;
        let mean_r = crossed as f64 / n as f64;
        assert!(
            (mean_t - 43.0).abs() <= 3.0 * (43.0 / n as f64).sqrt(),
            "{mean_t}"
        );
        assert!(
            (mean_r - 3.0).abs() <= 3.0 * (3.0 / n as f64).sqrt(),
            "{mean_r}"
        );
    }

    #[test]
    fn monitor_clean_and_attacked() {
        let mut rng = stream(12, 0, 0);
        let dark = 1e-5;
        let pulse = TwoModeCoherentState::with_mean_photons(25.0, 0.0);
        let clean: Vec<DetectionEvent> = (0..1_000_000)
            .map(|_| {
                let mut e = pbs_measure(&pulse, 0.0, &mut rng);
                e.counts_reflect += u64::from(rng.random_bool(dark));
                e
            })
            .collect();
        let v = bob_anomaly_monitor(&clean, dark).unwrap();
        assert!(!v.anomaly, "{v:?}");

        let amp = amplifier_attack(&pulse, 4.0, None).unwrap();
        let attacked: Vec<DetectionEvent> =
            (0..10_000).map(|_| amp.measure(0.0, &mut rng)).collect();
        let v2 = bob_anomaly_monitor(&attacked, dark).unwrap();
        assert!(v2.anomaly && v2.wrong_arm_rate >= v.wrong_arm_rate);

        let silent = vec![DetectionEvent::default(); 100];
        let v3 = bob_anomaly_monitor(&silent, dark).unwrap();
        assert_eq!(v3.wrong_arm_rate, 0.0);
        assert!(!v3.anomaly);
        assert!(bob_anomaly_monitor(&[], dark).is_err());
    }

    #[test]
    fn pns_tail_values() {
        // Oracle: 1 − e^{−μ}·Σ_{k<n} μ^k/k!, computed by hand.
        let f2 = pns_exploitable_fraction(&PnsModel::new(0.1, 2).unwrap());
        let f3 = pns_exploitable_fraction(&PnsModel::new(0.1, 3).unwrap());
        let e = (-0.1f64).exp();
        assert!((f2 - (1.0 - e * 1.1)).abs() < 1e-15);
        assert!((f3 - (1.0 - e * 1.105)).abs() < 1e-15);
        assert!((f2 - 4.679e-3).abs() < 1e-6);
        assert!((f3 - 1.547e-4).abs() < 1e-7);
        assert!(f2 / f3 > 25.0);
        assert_eq!(
            pns_exploitable_fraction(&PnsModel::new(0.0, 2).unwrap()),
            0.0
        );
        assert!(PnsModel::new(0.1, 4).is_err());
        assert!(PnsModel::new(-0.1, 2).is_err());
    }

    #[test]
    fn pns_monotone() {
        let mut prev2 = 0.0;
        for k in 1..200 {
            let mu = k as f64 * 0.05;
            let f2 = pns_exploitable_fraction(&PnsModel::new(mu, 2).unwrap());
            let f3 = pns_exploitable_fraction(&PnsModel::new(mu, 3).unwrap());
            assert!(f2 > prev2);
            assert!(f3 < f2);
            prev2 = f2;
        }
    }

    #[test]
    fn pns_sampling_agrees() {
        let model = PnsModel::new(0.1, 2).unwrap();
        let mut rng = stream(2, 0, 0);
        let est = pns_monte_carlo(&model, 200_000, &mut rng).unwrap();
        let p = pns_exploitable_fraction(&model);
        let sigma = (p * (1.0 - p) / 200_000.0).sqrt();
        assert!((est.fraction - p).abs() <= 3.0 * sigma, "{est:?}");
    }
}
