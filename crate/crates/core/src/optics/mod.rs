//! Two-carrier sideband interference optics.
//!
//! Alice drives a Mach-Zehnder amplitude modulator with two RF tones, the
//! light crosses a dispersionless fiber, and Bob phase-modulates it with the
//! same two tones. Each RF channel produces a pair of sidebands at
//! `carrier ± rf_omega` whose intensities depend only on that channel's
//! phase difference.
//!
//! Fields are in the baseband convention: the optical carrier factor
//! `exp(j·carrier_omega·t)` is dropped and `carrier_omega` is metadata only.

pub mod oracle;

pub use oracle::{sideband_intensities_oracle, MzArms, OracleSampling, TimeDomainField};

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result, Warning};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Modulation depth above which the first-order expansions lose accuracy.
pub const SMALL_SIGNAL_LIMIT: f64 = 0.2;

/// One of the two RF sideband channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Channel {
    One,
    Two,
}

impl Channel {
    pub const BOTH: [Channel; 2] = [Channel::One, Channel::Two];

    pub fn index(self) -> usize {
        match self {
            Channel::One => 0,
            Channel::Two => 1,
        }
    }

    pub fn number(self) -> u8 {
        self.index() as u8 + 1
    }

    /// Link phase that makes this channel's sidebands fully complementary.
    pub fn tuned_link_phase(self) -> f64 {
        match self {
            Channel::One => FRAC_PI_2,
            Channel::Two => 3.0 * FRAC_PI_2,
        }
    }
}

/// Every modulator and carrier parameter of the two-carrier link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModulationPlan {
    /// Input field amplitude (arbitrary units).
    pub field_amplitude: f64,
    /// Optical carrier angular frequency, rad/s. Metadata only.
    pub carrier_omega: f64,
    /// DC bias phase of Alice's Mach-Zehnder, rad.
    pub bias_phase: f64,
    /// Alice's modulation depths for channels 1 and 2.
    pub alice_depth: [f64; 2],
    /// Bob's phase-modulation depths for channels 1 and 2.
    pub bob_depth: [f64; 2],
    /// RF angular frequencies, rad/s.
    pub rf_omega: [f64; 2],
    /// Alice's RF phases, rad.
    pub alice_phase: [f64; 2],
    /// Bob's RF phases, rad.
    pub bob_phase: [f64; 2],
}

impl Default for ModulationPlan {
    /// Quadrature bias, `alice = 2·bob` depths and 1.0/1.4 GHz tones.
    fn default() -> Self {
        Self {
            field_amplitude: 1.0,
            carrier_omega: TAU * 193.4e12,
            bias_phase: 3.0 * FRAC_PI_2,
            alice_depth: [0.1, 0.1],
            bob_depth: [0.05, 0.05],
            rf_omega: [TAU * 1.0e9, TAU * 1.4e9],
            alice_phase: [0.0; 2],
            bob_phase: [0.0; 2],
        }
    }
}

impl ModulationPlan {
    pub fn phase_difference(&self, channel: Channel) -> f64 {
        let i = channel.index();
        self.alice_phase[i] - self.bob_phase[i]
    }

    /// Sets Alice's and Bob's phases on one channel.
    pub fn with_phases(mut self, channel: Channel, alice: f64, bob: f64) -> Self {
        self.alice_phase[channel.index()] = alice;
        self.bob_phase[channel.index()] = bob;
        self
    }

    pub fn with_depths(mut self, alice: [f64; 2], bob: [f64; 2]) -> Self {
        self.alice_depth = alice;
        self.bob_depth = bob;
        self
    }

    /// A channel is active when both ends modulate it.
    pub fn channel_active(&self, channel: Channel) -> bool {
        let i = channel.index();
        self.alice_depth[i] > 0.0 || self.bob_depth[i] > 0.0
    }

    pub fn validate(&self) -> Result<Vec<Warning>> {
        if !(self.field_amplitude.is_finite() && self.field_amplitude >= 0.0) {
            return Err(invalid("field_amplitude", "must be finite and >= 0"));
        }
        let depths = [
            ("alice_depth[0]", self.alice_depth[0]),
            ("alice_depth[1]", self.alice_depth[1]),
            ("bob_depth[0]", self.bob_depth[0]),
            ("bob_depth[1]", self.bob_depth[1]),
        ];
        let mut warnings = Vec::new();
        for (field, depth) in depths {
            if !(depth.is_finite() && depth >= 0.0) {
                return Err(invalid(field, format!("depth {depth} must be >= 0")));
            }
            if depth > SMALL_SIGNAL_LIMIT {
                warnings.push(Warning::SmallSignal { field, depth });
            }
        }
        let [w1, w2] = self.rf_omega;
        if !(w1 > 0.0 && w2 > 0.0 && w1.is_finite() && w2.is_finite()) {
            return Err(invalid("rf_omega", "RF frequencies must be positive"));
        }
        if (w1 - w2).abs() <= 1e-12 * w1.max(w2) {
            return Err(invalid("rf_omega", "the two RF tones must differ"));
        }
        if self.carrier_omega <= w1.max(w2) {
            return Err(invalid(
                "carrier_omega",
                "optical carrier must be far above the RF tones",
            ));
        }
        Ok(warnings)
    }
}

/// A dispersionless fiber link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberLink {
    pub length_m: f64,
    pub refractive_index: f64,
}

impl FiberLink {
    pub fn new(length_m: f64, refractive_index: f64) -> Result<Self> {
        let link = Self {
            length_m,
            refractive_index,
        };
        link.validate()?;
        Ok(link)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length_m.is_finite() && self.length_m >= 0.0) {
            return Err(invalid("length_m", "must be >= 0"));
        }
        if !(self.refractive_index.is_finite() && self.refractive_index >= 1.0) {
            return Err(invalid("refractive_index", "must be >= 1"));
        }
        Ok(())
    }

    /// Group delay `n·L/c` of the link, seconds.
    pub fn delay(&self) -> f64 {
        self.refractive_index * self.length_m / SPEED_OF_LIGHT
    }

    /// Shortest link for which channel 1 accumulates `π/2` and channel 2
    /// `3π/2` (mod 2π). Searches `π/2 + 2πk` on channel 1 for `k < max_order`.
    pub fn tuned(plan: &ModulationPlan, refractive_index: f64, max_order: u32) -> Result<Self> {
        let [w1, w2] = plan.rf_omega;
        for k in 0..max_order {
            let phase1 = FRAC_PI_2 + TAU * f64::from(k);
            let length_m = phase1 * SPEED_OF_LIGHT / (refractive_index * w1);
            let link = FiberLink::new(length_m, refractive_index)?;
            let phase2 = link.delay() * w2;
            if wrapped_offset(phase2, Channel::Two.tuned_link_phase()).abs() < 1e-9 {
                return Ok(link);
            }
        }
        Err(invalid(
            "rf_omega",
            format!("no link length below order {max_order} tunes both channels"),
        ))
    }
}

/// `x - target` wrapped into `(-π, π]`.
pub fn wrapped_offset(x: f64, target: f64) -> f64 {
    let d = (x - target).rem_euclid(TAU);
    if d > PI {
        d - TAU
    } else {
        d
    }
}

/// Phase accumulated by each channel's upper sideband relative to the
/// carrier; the lower sideband accumulates the negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SidebandPhases {
    pub channel: [f64; 2],
}

impl SidebandPhases {
    pub fn phase(&self, channel: Channel) -> f64 {
        self.channel[channel.index()]
    }

    /// Offset of each channel from its tuning target, wrapped to `(-π, π]`.
    pub fn tuning_offset(&self, channel: Channel) -> f64 {
        wrapped_offset(self.phase(channel), channel.tuned_link_phase())
    }

    pub fn check_tuned(&self, channel: Channel, tolerance: f64) -> Result<()> {
        let offset = self.tuning_offset(channel);
        if offset.abs() > tolerance {
            return Err(Error::NotTuned {
                channel: channel.number(),
                offset,
            });
        }
        Ok(())
    }
}

/// Relative sideband phases `(n/c)·Ω·L` after the link; the common
/// `exp(j·β0·L)` is dropped. No chromatic dispersion.
pub fn propagate(plan: &ModulationPlan, fiber: &FiberLink) -> SidebandPhases {
    let delay = fiber.delay();
    SidebandPhases {
        channel: [plan.rf_omega[0] * delay, plan.rf_omega[1] * delay],
    }
}

/// Exact Mach-Zehnder output with one modulated arm (baseband):
/// `(E0/2)·(1 + exp(jΨ)·exp(j[m1 cos(Ω1t+Φ1A) + m2 cos(Ω2t+Φ2A)]))`.
pub fn alice_field_exact(plan: &ModulationPlan, t: f64) -> Complex64 {
    let drive = alice_drive(plan, t);
    let arm = Complex64::from_polar(1.0, plan.bias_phase + drive);
    (Complex64::new(1.0, 0.0) + arm) * (plan.field_amplitude / 2.0)
}

/// Alice's RF drive phase `m1 cos(Ω1t+Φ1A) + m2 cos(Ω2t+Φ2A)`.
pub(crate) fn alice_drive(plan: &ModulationPlan, t: f64) -> f64 {
    (0..2)
        .map(|i| plan.alice_depth[i] * (plan.rf_omega[i] * t + plan.alice_phase[i]).cos())
        .sum()
}

/// First-order intensity of Alice's output.
pub fn alice_intensity_small_signal(plan: &ModulationPlan, t: f64) -> f64 {
    let (s, c) = plan.bias_phase.sin_cos();
    let mut bracket = 1.0 + c;
    for i in 0..2 {
        bracket -= plan.alice_depth[i] * s * (plan.rf_omega[i] * t + plan.alice_phase[i]).cos();
    }
    plan.field_amplitude.powi(2) / 2.0 * bracket
}

/// Intensities at the carrier and the four sidebands, in units of `E0²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SidebandSpectrum {
    pub carrier: f64,
    /// Intensity at `carrier + rf_omega[i]`.
    pub upper: [f64; 2],
    /// Intensity at `carrier - rf_omega[i]`.
    pub lower: [f64; 2],
}

impl SidebandSpectrum {
    pub fn upper(&self, channel: Channel) -> f64 {
        self.upper[channel.index()]
    }

    pub fn lower(&self, channel: Channel) -> f64 {
        self.lower[channel.index()]
    }

    pub fn channel_sum(&self, channel: Channel) -> f64 {
        self.upper(channel) + self.lower(channel)
    }

    /// Probability that a photon of this channel lands on the upper
    /// sideband, or `None` when the channel carries no power.
    pub fn upper_fraction(&self, channel: Channel) -> Option<f64> {
        let sum = self.channel_sum(channel);
        (sum > 0.0).then(|| (self.upper(channel) / sum).clamp(0.0, 1.0))
    }
}

/// First-order sideband intensities after Bob's modulator:
/// `(E0²/8)·[mA²/4 + mB² ± mA·mB·sin(link + ΔΦ)]` per channel.
///
/// With tuned link phases and `mA = 2·mB` this reduces to
/// `(E0²·mA²/8)·cos²(ΔΦ/2)` on the upper channel-1 sideband and
/// `sin²(ΔΦ/2)` on the lower; channel 2 has the orientation swapped.
/// Bob's second-order cross term is not included.
pub fn sideband_intensities_closed_form(
    plan: &ModulationPlan,
    fiber: &FiberLink,
) -> SidebandSpectrum {
    let phases = propagate(plan, fiber);
    let e0_sq = plan.field_amplitude.powi(2);
    let mut upper = [0.0; 2];
    let mut lower = [0.0; 2];
    for ch in Channel::BOTH {
        let i = ch.index();
        let (ma, mb) = (plan.alice_depth[i], plan.bob_depth[i]);
        let base = ma * ma / 4.0 + mb * mb;
        let cross = ma * mb * (phases.phase(ch) + plan.phase_difference(ch)).sin();
        upper[i] = e0_sq / 8.0 * (base + cross);
        lower[i] = e0_sq / 8.0 * (base - cross);
    }
    SidebandSpectrum {
        carrier: e0_sq * (1.0 + plan.bias_phase.cos()) / 2.0,
        upper,
        lower,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tuned() -> (ModulationPlan, FiberLink) {
        let plan = ModulationPlan::default();
        let fiber = FiberLink::tuned(&plan, 1.5, 64).unwrap();
        (plan, fiber)
    }

    #[test]
    fn exact_field_modulation_off() {
        let plan = ModulationPlan {
            bias_phase: 0.0,
            ..ModulationPlan::default()
        }
        .with_depths([0.0; 2], [0.0; 2]);
        for t in [0.0, 1.3e-10, 7.7e-9] {
            let e = alice_field_exact(&plan, t);
            assert!((e - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
        let null = ModulationPlan {
            bias_phase: PI,
            ..plan
        };
        assert!(alice_field_exact(&null, 2e-10).norm() < 1e-15);
    }

    #[test]
    fn exact_field_average_at_quadrature() {
        let plan = ModulationPlan::default().with_depths([0.1, 0.0], [0.0; 2]);
        let period = TAU / plan.rf_omega[0];
        let n = 4096;
        let avg: f64 = (0..n)
            .map(|k| alice_field_exact(&plan, period * k as f64 / n as f64).norm_sqr())
            .sum::<f64>()
            / n as f64;
        assert!((avg - 0.5).abs() < 1e-3, "{avg}");
    }

    #[test]
    fn exact_intensity_identity() {
        let plan = ModulationPlan {
            bias_phase: 1.1,
            alice_phase: [0.3, -2.0],
            ..ModulationPlan::default()
        }
        .with_depths([0.4, 0.25], [0.0; 2]);
        for k in 0..500 {
            let t = k as f64 * 3.1e-12;
            let drive = alice_drive(&plan, t);
            let expected = 0.5 * (1.0 + (plan.bias_phase + drive).cos());
            assert!((alice_field_exact(&plan, t).norm_sqr() - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn small_signal_at_quadrature() {
        let plan = ModulationPlan {
            alice_phase: [0.4, 1.0],
            ..ModulationPlan::default()
        };
        for k in 0..50 {
            let t = k as f64 * 1.7e-11;
            let expected = 0.5
                * (1.0
                    + 0.1 * (plan.rf_omega[0] * t + 0.4).cos()
                    + 0.1 * (plan.rf_omega[1] * t + 1.0).cos());
            assert!((alice_intensity_small_signal(&plan, t) - expected).abs() < 1e-12);
        }
        let flat = ModulationPlan {
            bias_phase: FRAC_PI_2,
            ..plan
        }
        .with_depths([0.0; 2], [0.0; 2]);
        assert!((alice_intensity_small_signal(&flat, 3e-10) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn small_signal_tracks_exact_intensity() {
        let plan = ModulationPlan::default().with_depths([0.05, 0.05], [0.0; 2]);
        // 5 ns is a common period of 1.0 and 1.4 GHz.
        let beat = 5e-9;
        for k in 0..2000 {
            let t = beat * k as f64 / 2000.0;
            let exact = alice_field_exact(&plan, t).norm_sqr();
            let approx = alice_intensity_small_signal(&plan, t);
            assert!(((approx - exact) / exact).abs() <= 0.01);
        }
    }

    #[test]
    fn propagation_phases() {
        let plan = ModulationPlan::default();
        let zero = propagate(&plan, &FiberLink::new(0.0, 1.5).unwrap());
        assert_eq!(zero.channel, [0.0, 0.0]);

        let fiber = FiberLink::new(0.025, 1.5).unwrap();
        let p = propagate(&plan, &fiber);
        let expected = 1.5 / SPEED_OF_LIGHT * TAU * 1e9 * 0.025;
        assert!((p.phase(Channel::One) - expected).abs() < 1e-15);

        let (plan, fiber) = tuned();
        let p = propagate(&plan, &fiber);
        assert!(p.tuning_offset(Channel::One).abs() < 1e-9);
        assert!(p.tuning_offset(Channel::Two).abs() < 1e-9);
        assert!(p.check_tuned(Channel::One, 1e-6).is_ok());
    }

    #[test]
    fn tuning_search_rejects_incompatible_ratio() {
        // Ω2/Ω1 = 1.5 cannot be written as (3+4k2)/(1+4k1).
        let plan = ModulationPlan {
            rf_omega: [TAU * 1.0e9, TAU * 1.5e9],
            ..ModulationPlan::default()
        };
        assert!(FiberLink::tuned(&plan, 1.5, 200).is_err());
    }

    #[test]
    fn fiber_validation() {
        assert!(FiberLink::new(-1.0, 1.5).is_err());
        assert!(FiberLink::new(1.0, 0.9).is_err());
    }

    #[test]
    fn plan_validation_and_warnings() {
        let ok = ModulationPlan::default();
        assert!(ok.validate().unwrap().is_empty());
        let deep = ok.with_depths([0.3, 0.1], [0.05, 0.05]);
        assert_eq!(deep.validate().unwrap().len(), 1);
        assert!(ok.with_depths([-0.1, 0.1], [0.0; 2]).validate().is_err());
        let same = ModulationPlan {
            rf_omega: [1e9, 1e9],
            ..ok
        };
        assert!(same.validate().is_err());
    }

    #[test]
    fn closed_form_interference_extremes() {
        let (plan, fiber) = tuned();
        let s = sideband_intensities_closed_form(&plan, &fiber);
        assert!(s.lower(Channel::One).abs() < 1e-15);
        assert!((s.upper(Channel::One) - 0.01 / 8.0).abs() < 1e-15);

        let s = sideband_intensities_closed_form(&plan.with_phases(Channel::One, PI, 0.0), &fiber);
        assert!(s.upper(Channel::One).abs() < 1e-15);
        assert!((s.lower(Channel::One) - 0.01 / 8.0).abs() < 1e-15);

        // Channel 2 at ΔΦ = 0: all power on the lower sideband.
        let s = sideband_intensities_closed_form(&plan, &fiber);
        assert!(s.upper(Channel::Two).abs() < 1e-15);
        assert!((s.lower(Channel::Two) - 0.01 / 8.0).abs() < 1e-15);
        assert!((s.carrier - 0.5).abs() < 1e-15);
    }

    #[test]
    fn closed_form_reduces_to_half_angle_law() {
        let (plan, fiber) = tuned();
        for k in 0..64 {
            let d = TAU * k as f64 / 64.0;
            let s =
                sideband_intensities_closed_form(&plan.with_phases(Channel::One, d, 0.0), &fiber);
            let a = 0.01 / 8.0;
            assert!((s.upper(Channel::One) - a * (d / 2.0).cos().powi(2)).abs() < 1e-15);
            assert!((s.lower(Channel::One) - a * (d / 2.0).sin().powi(2)).abs() < 1e-15);
            let s =
                sideband_intensities_closed_form(&plan.with_phases(Channel::Two, d, 0.0), &fiber);
            assert!((s.upper(Channel::Two) - a * (d / 2.0).sin().powi(2)).abs() < 1e-15);
            assert!((s.lower(Channel::Two) - a * (d / 2.0).cos().powi(2)).abs() < 1e-15);
        }
    }

    #[test]
    fn closed_form_complementarity_and_visibility() {
        let (plan, fiber) = tuned();
        let expected = 0.25 * (0.01 / 4.0 + 0.0025);
        let (mut lo, mut hi) = (f64::MAX, f64::MIN);
        for k in 0..97 {
            let d = TAU * k as f64 / 97.0 - 1.0;
            let s =
                sideband_intensities_closed_form(&plan.with_phases(Channel::One, d, 0.3), &fiber);
            assert!((s.channel_sum(Channel::One) - expected).abs() < 1e-12);
            lo = lo.min(s.upper(Channel::One));
            hi = hi.max(s.upper(Channel::One));
        }
        // 97 points do not hit the exact extremes; sample them directly.
        for d in [0.0, PI] {
            let s =
                sideband_intensities_closed_form(&plan.with_phases(Channel::One, d, 0.0), &fiber);
            lo = lo.min(s.upper(Channel::One));
            hi = hi.max(s.upper(Channel::One));
        }
        assert!(((hi - lo) / (hi + lo) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_channel_one_ignores_channel_two() {
        let (plan, fiber) = tuned();
        let base =
            sideband_intensities_closed_form(&plan.with_phases(Channel::One, 0.7, 0.0), &fiber);
        for k in 0..32 {
            let d2 = TAU * k as f64 / 32.0;
            let p = plan
                .with_phases(Channel::One, 0.7, 0.0)
                .with_phases(Channel::Two, d2, 0.1);
            let s = sideband_intensities_closed_form(&p, &fiber);
            assert_eq!(s.upper(Channel::One), base.upper(Channel::One));
            assert_eq!(s.lower(Channel::One), base.lower(Channel::One));
        }
    }

    #[test]
    fn spectrum_upper_fraction() {
        let (plan, fiber) = tuned();
        let off = plan.with_depths([0.1, 0.0], [0.05, 0.0]);
        let s = sideband_intensities_closed_form(&off, &fiber);
        assert_eq!(s.upper_fraction(Channel::Two), None);
        assert!((s.upper_fraction(Channel::One).unwrap() - 1.0).abs() < 1e-12);
    }
}
