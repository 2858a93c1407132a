//! Time-domain spectral oracle for the sideband intensities.
//!
//! The field after Bob's modulator is synthesized without any small-depth
//! expansion and the power at each sideband is read off by discrete Fourier
//! projection over an integer number of common RF periods, so every tone
//! falls exactly on a bin and nothing leaks.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{alice_drive, alice_field_exact, FiberLink, ModulationPlan, SidebandSpectrum};
use crate::error::{invalid, Error, Result};

/// Arm configuration of Alice's Mach-Zehnder.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MzArms {
    /// Balanced push-pull drive: `E0·exp(jΨ/2)·cos((Ψ + φ(t))/2)`.
    ///
    /// Same instantaneous intensity as [`MzArms::SingleArm`], without the
    /// drive-dependent phase `exp(jφ(t)/2)`. This is the chirp-free
    /// amplitude modulator assumed by the closed-form sideband model.
    #[default]
    PushPull,
    /// Only one arm is driven, exactly as [`alice_field_exact`]. The output
    /// carries residual phase modulation, which shifts and unbalances the
    /// sideband interference.
    SingleArm,
}

impl MzArms {
    pub fn field(self, plan: &ModulationPlan, t: f64) -> Complex64 {
        match self {
            MzArms::SingleArm => alice_field_exact(plan, t),
            MzArms::PushPull => {
                let psi = plan.bias_phase;
                let amplitude = plan.field_amplitude * ((psi + alice_drive(plan, t)) / 2.0).cos();
                Complex64::from_polar(amplitude, psi / 2.0)
            }
        }
    }
}

/// Sampling parameters for the oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSampling {
    /// Samples over the whole record.
    pub samples: usize,
    /// Number of common RF periods in the record.
    pub periods: u32,
    pub arms: MzArms,
}

impl Default for OracleSampling {
    fn default() -> Self {
        Self {
            samples: 1 << 14,
            periods: 1,
            arms: MzArms::PushPull,
        }
    }
}

/// Largest denominator tried when looking for a common RF period.
const MAX_RATIO_DENOMINATOR: u64 = 10_000;

/// Common period of both RF tones, or an error when their ratio is not a
/// small rational.
pub fn common_period(rf_omega: [f64; 2]) -> Result<f64> {
    let [w1, w2] = rf_omega;
    let ratio = w2 / w1;
    for q in 1..=MAX_RATIO_DENOMINATOR {
        let scaled = ratio * q as f64;
        if (scaled - scaled.round()).abs() <= 1e-9 * scaled.max(1.0) && scaled.round() >= 1.0 {
            return Ok(TAU * q as f64 / w1);
        }
    }
    Err(Error::NotCommensurate(w1, w2))
}

/// Uniformly sampled complex baseband field starting at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeDomainField {
    pub sample_rate: f64,
    pub samples: Vec<Complex64>,
}

impl TimeDomainField {
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    /// Fourier coefficient at angular frequency `omega`: the mean of
    /// `E(t_k)·exp(-jωt_k)`. For a pure tone `A·exp(jωt)` this is `A`.
    pub fn project(&self, omega: f64) -> Complex64 {
        let n = self.samples.len();
        let step = omega / self.sample_rate;
        let sum: Complex64 = self
            .samples
            .iter()
            .enumerate()
            .map(|(k, s)| s * Complex64::from_polar(1.0, -step * k as f64))
            .sum();
        sum / n as f64
    }

    pub fn power_at(&self, omega: f64) -> f64 {
        self.project(omega).norm_sqr()
    }
}

/// Synthesizes the field after Bob's phase modulator.
///
/// The dispersionless link multiplies every spectral line at offset `ω` by
/// `exp(j(n/c)ωL)`, which for a sampled periodic field is the time shift
/// `E(t + nL/c)`.
pub fn synthesize_bob_field(
    plan: &ModulationPlan,
    fiber: &FiberLink,
    sampling: &OracleSampling,
) -> Result<TimeDomainField> {
    plan.validate()?;
    fiber.validate()?;
    if sampling.samples < 2 {
        return Err(invalid("samples", "need at least two samples"));
    }
    if sampling.periods == 0 {
        return Err(invalid("periods", "must cover at least one common period"));
    }
    let duration = common_period(plan.rf_omega)? * f64::from(sampling.periods);
    let sample_rate = sampling.samples as f64 / duration;
    let required = 2.0 * plan.rf_omega[0].max(plan.rf_omega[1]) / std::f64::consts::PI;
    if sample_rate <= required {
        return Err(Error::Nyquist {
            sample_rate,
            required,
        });
    }
    let delay = fiber.delay();
    let samples = (0..sampling.samples)
        .map(|k| {
            let t = k as f64 / sample_rate;
            let bob_phase: f64 = (0..2)
                .map(|i| plan.bob_depth[i] * (plan.rf_omega[i] * t + plan.bob_phase[i]).cos())
                .sum();
            sampling.arms.field(plan, t + delay) * Complex64::from_polar(1.0, bob_phase)
        })
        .collect();
    Ok(TimeDomainField {
        sample_rate,
        samples,
    })
}

/// Sideband intensities measured on the synthesized field.
pub fn sideband_intensities_oracle(
    plan: &ModulationPlan,
    fiber: &FiberLink,
    sampling: &OracleSampling,
) -> Result<SidebandSpectrum> {
    let field = synthesize_bob_field(plan, fiber, sampling)?;
    let [w1, w2] = plan.rf_omega;
    Ok(SidebandSpectrum {
        carrier: field.power_at(0.0),
        upper: [field.power_at(w1), field.power_at(w2)],
        lower: [field.power_at(-w1), field.power_at(-w2)],
    })
}
