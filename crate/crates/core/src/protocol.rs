//! End-to-end key-distribution sessions.
//!
//! Four modes share one slot engine:
//!
//! | mode              | channels | bases from             |
//! |-------------------|----------|------------------------|
//! | `baseline_bb84`   | 1        | independent random     |
//! | `hybrid`          | 1        | shared sequence `R`    |
//! | `parallel`        | 2        | independent random     |
//! | `hybrid_parallel` | 2        | shared sequence `R`    |
//!
//! Basis `b` uses Alice phases `b·π/2 + bit·π` and Bob phase `b·π/2`, so
//! matched bases give `ΔΦ ∈ {0, π}` and mismatched bases `±π/2`. Channel 1
//! reads bit 0 off the upper sideband, channel 2 off the lower one.
//!
//! Every random draw comes from [`crate::rng::stream`] keyed by slot and
//! role, so reports do not depend on the rayon pool size.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::key_pipeline::{
    bits_per_slot, bob_analyzer_angles, bob_decode, build_basis_schedule, expand_key, generate_r,
    SeedKey,
};
use crate::optics::{
    propagate, sideband_intensities_closed_form, Channel, FiberLink, ModulationPlan,
};
use crate::polarization::{pbs_measure, DetectionEvent, TwoModeCoherentState};
use crate::rng::{poisson, stream};
use crate::Warning;

/// Largest tolerated link-phase offset in the two-channel modes, rad.
pub const TUNING_TOLERANCE: f64 = 1e-6;

const ROLE_SLOT: u64 = 0x510_7000;
const ROLE_MESO: u64 = 0x3E50_0000;
const ROLE_R: u64 = 0x0052_0000;
const ROLE_SEED_KEY: u64 = 0x5EED_0000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    BaselineBb84,
    Hybrid,
    Parallel,
    HybridParallel,
}

impl Mode {
    pub const ALL: [Mode; 4] = [
        Mode::BaselineBb84,
        Mode::Hybrid,
        Mode::Parallel,
        Mode::HybridParallel,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::BaselineBb84 => "baseline_bb84",
            Mode::Hybrid => "hybrid",
            Mode::Parallel => "parallel",
            Mode::HybridParallel => "hybrid_parallel",
        }
    }

    /// Bases come from the shared sequence `R`.
    pub fn is_hybrid(self) -> bool {
        matches!(self, Mode::Hybrid | Mode::HybridParallel)
    }

    pub fn is_two_channel(self) -> bool {
        matches!(self, Mode::Parallel | Mode::HybridParallel)
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Lossy link shared by the weak sideband pulses and the mesoscopic pulses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelModel {
    pub length_km: f64,
    pub loss_db_per_km: f64,
    pub detector_efficiency: f64,
    /// Dark-click probability per detector per gate.
    pub dark_count_prob: f64,
    /// Mean photon number of a weak pulse; ignored when `single_photon`.
    pub mu_weak: f64,
    /// Mean photon number of a mesoscopic pulse.
    pub alpha_sq_meso: f64,
    /// Basis count `M` of the mesoscopic channel (pairs of angles).
    pub basis_count: u32,
    /// Weak pulses carry exactly one photon, which survives with the
    /// channel survival probability.
    pub single_photon: bool,
}

impl Default for ChannelModel {
    fn default() -> Self {
        Self::ideal()
    }
}

impl ChannelModel {
    /// Lossless link, unit efficiency, no dark counts, one photon per slot.
    pub fn ideal() -> Self {
        Self {
            length_km: 0.0,
            loss_db_per_km: 0.2,
            detector_efficiency: 1.0,
            dark_count_prob: 0.0,
            mu_weak: 0.1,
            alpha_sq_meso: 25.0,
            basis_count: 64,
            single_photon: true,
        }
    }

    /// Per-photon survival `η·10^(−αL/10)`.
    pub fn survival(&self) -> f64 {
        self.detector_efficiency * 10f64.powf(-self.loss_db_per_km * self.length_km / 10.0)
    }

    pub fn validate(&self) -> Result<Vec<Warning>> {
        let non_negative = [
            ("length_km", self.length_km),
            ("loss_db_per_km", self.loss_db_per_km),
            ("mu_weak", self.mu_weak),
            ("alpha_sq_meso", self.alpha_sq_meso),
        ];
        for (field, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(field, format!("{v} must be finite and >= 0")));
            }
        }
        for (field, p) in [
            ("detector_efficiency", self.detector_efficiency),
            ("dark_count_prob", self.dark_count_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(invalid(field, format!("{p} is not a probability")));
            }
        }
        bits_per_slot(self.basis_count)?;
        let mut warnings = Vec::new();
        if self.alpha_sq_meso >= f64::from(self.basis_count) {
            warnings.push(Warning::SecurityCondition {
                alpha_sq: self.alpha_sq_meso,
                basis_count: self.basis_count,
            });
        }
        Ok(warnings)
    }
}

/// Modulators plus the link between them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpticsSetup {
    pub plan: ModulationPlan,
    pub fiber: FiberLink,
}

impl Default for OpticsSetup {
    /// Default plan on the shortest tuned link at `n = 1.5`.
    fn default() -> Self {
        let plan = ModulationPlan::default();
        let fiber = FiberLink::tuned(&plan, 1.5, 64).expect("default tones are tunable");
        Self { plan, fiber }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub mode: Mode,
    pub num_slots: usize,
    pub channel: ChannelModel,
    pub optics: OpticsSetup,
    pub seed: u64,
    /// Fraction of slots in which Bob's modulator applies the other basis
    /// from the announced or derived one. Fault injection only.
    #[serde(default)]
    pub bob_basis_fault_fraction: f64,
    /// Keep the public transcript in the report.
    #[serde(default)]
    pub record_transcript: bool,
}

impl SessionConfig {
    pub fn new(mode: Mode, num_slots: usize, seed: u64) -> Self {
        Self {
            mode,
            num_slots,
            channel: ChannelModel::ideal(),
            optics: OpticsSetup::default(),
            seed,
            bob_basis_fault_fraction: 0.0,
            record_transcript: false,
        }
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }
}

/// What Bob's two sideband detectors register in one gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitOutcome {
    None,
    Upper,
    Lower,
    Both,
}

/// Routes one weak pulse of `channel` at phase difference `delta_phi` to
/// Bob's upper or lower sideband detector.
///
/// When at least one photon survives exactly one detector fires, upper
/// with the interference fraction of the closed-form spectrum. Dark
/// clicks are added to each detector independently.
pub fn detection_split<R: Rng + ?Sized>(
    delta_phi: f64,
    channel: Channel,
    optics: &OpticsSetup,
    channel_model: &ChannelModel,
    rng: &mut R,
) -> SplitOutcome {
    let plan = optics.plan.with_phases(channel, delta_phi, 0.0);
    let spectrum = sideband_intensities_closed_form(&plan, &optics.fiber);
    let survival = channel_model.survival();
    let (mut upper, mut lower) = (false, false);
    if let Some(p_upper) = spectrum.upper_fraction(channel) {
        let photons = if channel_model.single_photon {
            u64::from(rng.random_bool(survival))
        } else {
            poisson(rng, channel_model.mu_weak * survival)
        };
        if photons > 0 {
            if rng.random_bool(p_upper) {
                upper = true;
            } else {
                lower = true;
            }
        }
    }
    let dark = channel_model.dark_count_prob;
    upper |= rng.random_bool(dark);
    lower |= rng.random_bool(dark);
    match (upper, lower) {
        (false, false) => SplitOutcome::None,
        (true, false) => SplitOutcome::Upper,
        (false, true) => SplitOutcome::Lower,
        (true, true) => SplitOutcome::Both,
    }
}

/// Bit read off a single click; channel 2 has the sidebands swapped.
pub fn decode_click(channel: Channel, outcome: SplitOutcome) -> Option<bool> {
    let upper_bit = match channel {
        Channel::One => false,
        Channel::Two => true,
    };
    match outcome {
        SplitOutcome::Upper => Some(upper_bit),
        SplitOutcome::Lower => Some(!upper_bit),
        SplitOutcome::None | SplitOutcome::Both => None,
    }
}

/// Alice's RF phase for `(basis, bit)`.
pub fn alice_phase(basis: bool, bit: bool) -> f64 {
    f64::from(u8::from(basis)) * FRAC_PI_2 + f64::from(u8::from(bit)) * PI
}

/// Bob's RF phase for `basis`.
pub fn bob_phase(basis: bool) -> f64 {
    f64::from(u8::from(basis)) * FRAC_PI_2
}

/// Fraction of matched slots whose bits differ.
pub fn compute_qber(alice_bits: &[bool], bob_bits: &[bool], matched_slots: &[bool]) -> Result<f64> {
    if alice_bits.len() != bob_bits.len() {
        return Err(Error::LengthMismatch {
            expected: alice_bits.len(),
            actual: bob_bits.len(),
        });
    }
    if matched_slots.len() != alice_bits.len() {
        return Err(Error::LengthMismatch {
            expected: alice_bits.len(),
            actual: matched_slots.len(),
        });
    }
    let (matched, errors) = alice_bits
        .iter()
        .zip(bob_bits)
        .zip(matched_slots)
        .filter(|(_, &m)| m)
        .fold((0usize, 0usize), |(n, e), ((a, b), _)| {
            (n + 1, e + usize::from(a != b))
        });
    if matched == 0 {
        return Err(Error::Empty("matched slots"));
    }
    Ok(errors as f64 / matched as f64)
}

/// Per-channel accounting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelReport {
    pub channel: u8,
    /// Slots not erased on the mesoscopic channel.
    pub usable_slots: usize,
    pub erasures: usize,
    /// Gates with exactly one sideband click.
    pub raw_detections: usize,
    pub double_clicks: usize,
    pub sifted_bits: usize,
    pub errors: usize,
    pub qber: f64,
    /// `sifted_bits / usable_slots`.
    pub useful_rate: f64,
    /// Binomial standard error of `useful_rate`.
    pub useful_rate_stderr: f64,
}

/// Public classical-channel record of one gate.
///
/// Hybrid modes publish only the slot index and the erasure flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TranscriptEntry {
    pub slot: usize,
    pub channel: u8,
    pub erased: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub announced_basis: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionReport {
    pub mode: Mode,
    pub slots: usize,
    pub channels: usize,
    pub raw_detections: usize,
    pub sifted_bits: usize,
    pub errors: usize,
    /// Error fraction of sifted bits; 0 when nothing was sifted.
    pub qber: f64,
    /// Sum over channels of sifted bits per usable slot.
    pub useful_rate_bits_per_slot: f64,
    pub useful_rate_stderr: f64,
    /// Sifted bits per transmitted slot, erasures included.
    pub raw_slot_rate: f64,
    pub rate_ratio_vs_baseline: Option<f64>,
    pub rate_ratio_stderr: Option<f64>,
    pub per_channel: Vec<ChannelReport>,
    pub warnings: Vec<Warning>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transcript: Option<Vec<TranscriptEntry>>,
}

impl SessionReport {
    /// Fraction of detections that survived sifting.
    pub fn sifted_fraction(&self) -> f64 {
        ratio(self.sifted_bits, self.raw_detections)
    }

    /// Standard error of [`Self::sifted_fraction`].
    pub fn sifted_fraction_stderr(&self) -> f64 {
        binomial_stderr(self.sifted_fraction(), self.raw_detections)
    }
}

/// Report together with both parties' final keys.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionOutcome {
    pub report: SessionReport,
    /// Channel-1 key followed by the channel-2 key.
    pub alice_key: Vec<bool>,
    pub bob_key: Vec<bool>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn binomial_stderr(p: f64, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        (p * (1.0 - p) / n as f64).sqrt()
    }
}

/// Delta-method standard error of `a / b` for independent estimates.
pub fn ratio_stderr(a: f64, sa: f64, b: f64, sb: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    (a / b) * ((sa / a).powi(2) + (sb / b).powi(2)).sqrt()
}

#[derive(Debug, Clone, Copy, Default)]
struct Gate {
    erased: bool,
    announced_basis: bool,
    matched: bool,
    outcome: Option<SplitOutcome>,
    alice_bit: bool,
    bob_bit: Option<bool>,
}

fn check_mode(config: &SessionConfig, expected: Mode) -> Result<()> {
    if config.mode != expected {
        return Err(Error::ModeMismatch {
            expected: expected.as_str(),
            actual: config.mode.as_str(),
        });
    }
    Ok(())
}

fn active_channels(config: &SessionConfig, warnings: &mut Vec<Warning>) -> Result<Vec<Channel>> {
    let plan = &config.optics.plan;
    let phases = propagate(plan, &config.optics.fiber);
    if config.mode.is_two_channel() {
        let active: Vec<Channel> = Channel::BOTH
            .into_iter()
            .filter(|&c| plan.channel_active(c))
            .collect();
        if active.is_empty() {
            return Err(invalid("optics.plan", "no sideband channel is modulated"));
        }
        for &c in &active {
            phases.check_tuned(c, TUNING_TOLERANCE)?;
        }
        Ok(active)
    } else {
        if !plan.channel_active(Channel::One) {
            return Err(invalid("optics.plan", "channel 1 is not modulated"));
        }
        let offset = phases.tuning_offset(Channel::One);
        if offset.abs() > TUNING_TOLERANCE {
            warnings.push(Warning::Detuned {
                channel: 1,
                offset_rad: offset,
            });
        }
        Ok(vec![Channel::One])
    }
}

/// Distributes `R` over the mesoscopic channel. Returns Alice's `R` and
/// Bob's decoded copy with erasures as `None`.
fn distribute_r(config: &SessionConfig, length: usize) -> Result<(Vec<bool>, Vec<Option<bool>>)> {
    let model = &config.channel;
    let m = model.basis_count;
    let mut seed_bytes = [0u8; 32];
    stream(config.seed, 0, ROLE_SEED_KEY).fill_bytes(&mut seed_bytes);
    let seed_key = SeedKey::from_bytes(&seed_bytes)?;
    let kprime = expand_key(&seed_key, length * bits_per_slot(m)? as usize)?;
    let r = generate_r(length, &mut stream(config.seed, 0, ROLE_R))?;
    let schedule = build_basis_schedule(&kprime, &r, m)?;
    let analyzers = bob_analyzer_angles(&kprime, m)?;
    let mean = model.alpha_sq_meso * model.survival();
    let dark = model.dark_count_prob;
    let events: Vec<DetectionEvent> = schedule
        .slots
        .par_iter()
        .zip(analyzers.par_iter())
        .enumerate()
        .map(|(j, (slot, &analyzer))| {
            let mut rng = stream(config.seed, j as u64, ROLE_MESO);
            let state = TwoModeCoherentState::with_mean_photons(mean, slot.alice_angle);
            let e = pbs_measure(&state, analyzer, &mut rng);
            DetectionEvent::new(
                e.counts_transmit + u64::from(rng.random_bool(dark)),
                e.counts_reflect + u64::from(rng.random_bool(dark)),
            )
        })
        .collect();
    let decoded = bob_decode(&kprime, &events, m)?;
    Ok((r, decoded))
}

fn run_gate(
    config: &SessionConfig,
    slot: usize,
    channel: Channel,
    bases: Option<(bool, Option<bool>)>,
) -> Gate {
    let mut rng = stream(config.seed, slot as u64, ROLE_SLOT + channel.index() as u64);
    let alice_bit = rng.random_bool(0.5);
    let (alice_basis, bob_basis) = match bases {
        Some((a, Some(b))) => (a, b),
        Some((_, None)) => {
            return Gate {
                erased: true,
                ..Gate::default()
            }
        }
        None => (rng.random_bool(0.5), rng.random_bool(0.5)),
    };
    let fault = config.bob_basis_fault_fraction > 0.0
        && rng.random_bool(config.bob_basis_fault_fraction.min(1.0));
    let applied = bob_basis ^ fault;
    let delta_phi = alice_phase(alice_basis, alice_bit) - bob_phase(applied);
    let outcome = detection_split(
        delta_phi,
        channel,
        &config.optics,
        &config.channel,
        &mut rng,
    );
    Gate {
        erased: false,
        announced_basis: bob_basis,
        // Hybrid parties never compare bases; they believe them equal.
        matched: bases.is_some() || alice_basis == bob_basis,
        outcome: Some(outcome),
        alice_bit,
        bob_bit: decode_click(channel, outcome),
    }
}

fn simulate(config: &SessionConfig) -> Result<SessionOutcome> {
    if config.num_slots == 0 {
        return Err(invalid("num_slots", "must be >= 1"));
    }
    if !(0.0..=1.0).contains(&config.bob_basis_fault_fraction) {
        return Err(invalid("bob_basis_fault_fraction", "must lie in [0, 1]"));
    }
    let mut warnings = config.channel.validate()?;
    warnings.extend(config.optics.plan.validate()?);
    config.optics.fiber.validate()?;
    let channels = active_channels(config, &mut warnings)?;
    let n_ch = channels.len();
    let slots = config.num_slots;

    let shared = if config.mode.is_hybrid() {
        Some(distribute_r(config, slots * n_ch)?)
    } else {
        None
    };

    // gates[slot * n_ch + c]
    let gates: Vec<Gate> = (0..slots * n_ch)
        .into_par_iter()
        .map(|j| {
            let bases = shared.as_ref().map(|(r, decoded)| (r[j], decoded[j]));
            run_gate(config, j / n_ch, channels[j % n_ch], bases)
        })
        .collect();

    let mut per_channel = Vec::with_capacity(n_ch);
    let mut alice_key = Vec::new();
    let mut bob_key = Vec::new();
    for (c, &channel) in channels.iter().enumerate() {
        let mut rep = ChannelReport {
            channel: channel.number(),
            usable_slots: 0,
            erasures: 0,
            raw_detections: 0,
            double_clicks: 0,
            sifted_bits: 0,
            errors: 0,
            qber: 0.0,
            useful_rate: 0.0,
            useful_rate_stderr: 0.0,
        };
        for g in gates.iter().skip(c).step_by(n_ch) {
            if g.erased {
                rep.erasures += 1;
                continue;
            }
            rep.usable_slots += 1;
            if g.outcome == Some(SplitOutcome::Both) {
                rep.double_clicks += 1;
            }
            let Some(bob_bit) = g.bob_bit else { continue };
            rep.raw_detections += 1;
            if g.matched {
                rep.sifted_bits += 1;
                rep.errors += usize::from(bob_bit != g.alice_bit);
                alice_key.push(g.alice_bit);
                bob_key.push(bob_bit);
            }
        }
        rep.qber = ratio(rep.errors, rep.sifted_bits);
        rep.useful_rate = ratio(rep.sifted_bits, rep.usable_slots);
        rep.useful_rate_stderr = binomial_stderr(rep.useful_rate, rep.usable_slots);
        per_channel.push(rep);
    }

    let sum = |f: fn(&ChannelReport) -> usize| per_channel.iter().map(f).sum::<usize>();
    let raw_detections = sum(|r| r.raw_detections);
    let sifted_bits = sum(|r| r.sifted_bits);
    let errors = sum(|r| r.errors);
    let useful = per_channel.iter().map(|r| r.useful_rate).sum();
    let useful_stderr = per_channel
        .iter()
        .map(|r| r.useful_rate_stderr.powi(2))
        .sum::<f64>()
        .sqrt();

    let transcript = config.record_transcript.then(|| {
        gates
            .iter()
            .enumerate()
            .map(|(j, g)| TranscriptEntry {
                slot: j / n_ch,
                channel: channels[j % n_ch].number(),
                erased: g.erased,
                announced_basis: (!config.mode.is_hybrid() && g.outcome.is_some())
                    .then_some(u8::from(g.announced_basis)),
            })
            .collect()
    });

    let report = SessionReport {
        mode: config.mode,
        slots,
        channels: n_ch,
        raw_detections,
        sifted_bits,
        errors,
        qber: ratio(errors, sifted_bits),
        useful_rate_bits_per_slot: useful,
        useful_rate_stderr: useful_stderr,
        raw_slot_rate: sifted_bits as f64 / slots as f64,
        rate_ratio_vs_baseline: None,
        rate_ratio_stderr: None,
        per_channel,
        warnings,
        transcript,
    };
    Ok(SessionOutcome {
        report,
        alice_key,
        bob_key,
    })
}

fn run_mode(config: &SessionConfig, mode: Mode) -> Result<SessionReport> {
    check_mode(config, mode)?;
    Ok(simulate(config)?.report)
}

pub fn run_baseline_bb84(config: &SessionConfig) -> Result<SessionReport> {
    run_mode(config, Mode::BaselineBb84)
}

pub fn run_hybrid(config: &SessionConfig) -> Result<SessionReport> {
    run_mode(config, Mode::Hybrid)
}

pub fn run_parallel(config: &SessionConfig) -> Result<SessionReport> {
    run_mode(config, Mode::Parallel)
}

pub fn run_hybrid_parallel(config: &SessionConfig) -> Result<SessionReport> {
    run_mode(config, Mode::HybridParallel)
}

/// Runs the configured mode and fills the rate ratio against a baseline
/// session on the same channel and seed.
pub fn run_session(config: &SessionConfig) -> Result<SessionReport> {
    Ok(run_session_detailed(config)?.report)
}

/// Like [`run_session`], also returning both parties' keys.
pub fn run_session_detailed(config: &SessionConfig) -> Result<SessionOutcome> {
    let mut outcome = simulate(config)?;
    let report = &mut outcome.report;
    let (base_rate, base_stderr) = if config.mode == Mode::BaselineBb84 {
        (report.useful_rate_bits_per_slot, 0.0)
    } else {
        let mut baseline = config.with_mode(Mode::BaselineBb84);
        baseline.record_transcript = false;
        let b = simulate(&baseline)?.report;
        (b.useful_rate_bits_per_slot, b.useful_rate_stderr)
    };
    if base_rate > 0.0 {
        let r = report.useful_rate_bits_per_slot / base_rate;
        report.rate_ratio_vs_baseline = Some(r);
        report.rate_ratio_stderr = Some(if config.mode == Mode::BaselineBb84 {
            0.0
        } else {
            ratio_stderr(
                report.useful_rate_bits_per_slot,
                report.useful_rate_stderr,
                base_rate,
                base_stderr,
            )
        });
    }
    Ok(outcome)
}
