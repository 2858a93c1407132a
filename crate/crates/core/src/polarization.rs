//! Linearly polarized two-mode coherent states.

use std::f64::consts::{FRAC_PI_4, PI};

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::rng::poisson;

/// `|α cosθ, α sinθ⟩` in the horizontal/vertical mode basis.
///
/// `theta` is kept in `[0, π)`: linear polarizations at `θ` and `θ + π`
/// are the same physical polarization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoModeCoherentState {
    pub alpha: Complex64,
    pub theta: f64,
}

/// Reduces an angle into `[0, π)`.
pub fn canonical_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(PI);
    // rem_euclid can round up to exactly π for tiny negative inputs
    if t >= PI {
        0.0
    } else {
        t
    }
}

/// Distance between two linear polarizations, in `[0, π/2]`.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    let d = canonical_angle(a - b);
    d.min(PI - d)
}

impl TwoModeCoherentState {
    pub fn new(alpha: Complex64, theta: f64) -> Self {
        Self {
            alpha,
            theta: canonical_angle(theta),
        }
    }

    /// Real-amplitude state with the given mean photon number.
    pub fn with_mean_photons(mean_photons: f64, theta: f64) -> Self {
        Self::new(Complex64::new(mean_photons.max(0.0).sqrt(), 0.0), theta)
    }

    pub fn mean_photons(&self) -> f64 {
        self.alpha.norm_sqr()
    }

    /// Mean photon numbers of the horizontal and vertical modes.
    pub fn mode_means(&self) -> (f64, f64) {
        let n = self.mean_photons();
        let (s, c) = self.theta.sin_cos();
        (n * c * c, n * s * s)
    }

    /// Same polarization, mean photon number scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            alpha: self.alpha * factor.max(0.0).sqrt(),
            theta: self.theta,
        }
    }
}

/// Polarization rotation by `delta`; energy is unchanged.
pub fn rotate(state: TwoModeCoherentState, delta: f64) -> TwoModeCoherentState {
    TwoModeCoherentState::new(state.alpha, state.theta + delta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StokesSummary {
    pub s1_mean: f64,
    pub s2_mean: f64,
    pub s3_mean: f64,
    pub s1_var: f64,
    pub s2_var: f64,
    pub s3_var: f64,
}

pub fn stokes_summary(state: &TwoModeCoherentState) -> StokesSummary {
    let n = state.mean_photons();
    let (s, c) = (2.0 * state.theta).sin_cos();
    StokesSummary {
        s1_mean: n * c,
        s2_mean: n * s,
        s3_mean: 0.0,
        s1_var: n,
        s2_var: n,
        s3_var: n,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StokesParameter {
    S1,
    S2,
    S3,
}

impl StokesParameter {
    pub const ALL: [StokesParameter; 3] = [Self::S1, Self::S2, Self::S3];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleStats {
    pub trials: u64,
    pub mean: f64,
    /// Unbiased sample variance (0 for a single trial).
    pub variance: f64,
}

impl SampleStats {
    pub fn from_values(values: impl IntoIterator<Item = f64>) -> Self {
        // Welford
        let (mut n, mut mean, mut m2) = (0u64, 0.0, 0.0);
        for x in values {
            n += 1;
            let d = x - mean;
            mean += d / n as f64;
            m2 += d * (x - mean);
        }
        let variance = if n > 1 { m2 / (n - 1) as f64 } else { 0.0 };
        Self {
            trials: n,
            mean,
            variance,
        }
    }
}

/// Samples a photon-number-difference Stokes measurement.
///
/// S1 splits on H/V, S2 on ±45°, and S3 on the circular basis, where a
/// linear input puts `|α|²/2` independently into each arm.
pub fn stokes_monte_carlo<R: Rng + ?Sized>(
    state: &TwoModeCoherentState,
    parameter: StokesParameter,
    trials: u64,
    rng: &mut R,
) -> Result<SampleStats> {
    if trials == 0 {
        return Err(invalid("trials", "must be >= 1"));
    }
    let n = state.mean_photons();
    let (plus, minus) = match parameter {
        StokesParameter::S1 => state.mode_means(),
        StokesParameter::S2 => {
            let c = (state.theta - FRAC_PI_4).cos().powi(2);
            (n * c, n * (1.0 - c))
        }
        StokesParameter::S3 => (n / 2.0, n / 2.0),
    };
    Ok(SampleStats::from_values((0..trials).map(|_| {
        poisson(rng, plus) as f64 - poisson(rng, minus) as f64
    })))
}

/// Distinguishability as printed for the brute-force analysis:
/// `exp(-2|α|² sin²θ)`.
pub fn overlap_printed(alpha_sq: f64, theta: f64) -> f64 {
    (-2.0 * alpha_sq * theta.sin().powi(2)).exp()
}

/// `⟨β|γ⟩` for single-mode coherent states.
fn coherent_inner(beta: Complex64, gamma: Complex64) -> Complex64 {
    (-(beta.norm_sqr() + gamma.norm_sqr()) / 2.0 + beta.conj() * gamma).exp()
}

/// Exact `|⟨α,0|α cosθ, α sinθ⟩|²`, evaluated mode by mode. Equals
/// `exp(-2|α|²(1 - cosθ))`.
///
/// `theta` is not reduced: a rotation by `π` flips the amplitude sign and
/// yields a distinct coherent state.
pub fn overlap_exact(alpha: Complex64, theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    let h = coherent_inner(alpha, alpha * c);
    let v = coherent_inner(Complex64::new(0.0, 0.0), alpha * s);
    (h * v).norm_sqr()
}

/// Photon counts at the two outputs of a polarizing beam splitter.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct DetectionEvent {
    pub counts_transmit: u64,
    pub counts_reflect: u64,
}

impl DetectionEvent {
    pub fn new(counts_transmit: u64, counts_reflect: u64) -> Self {
        Self {
            counts_transmit,
            counts_reflect,
        }
    }

    pub fn transmit_clicked(&self) -> bool {
        self.counts_transmit > 0
    }

    pub fn reflect_clicked(&self) -> bool {
        self.counts_reflect > 0
    }

    pub fn both_clicked(&self) -> bool {
        self.transmit_clicked() && self.reflect_clicked()
    }

    pub fn none_clicked(&self) -> bool {
        !self.transmit_clicked() && !self.reflect_clicked()
    }

    /// Arms exchanged.
    pub fn swapped(&self) -> Self {
        Self::new(self.counts_reflect, self.counts_transmit)
    }
}

/// Arm means behind a PBS whose transmit axis sits at `analyzer_angle`.
pub fn pbs_means(state: &TwoModeCoherentState, analyzer_angle: f64) -> (f64, f64) {
    let n = state.mean_photons();
    let c = (state.theta - analyzer_angle).cos().powi(2);
    (n * c, n * (1.0 - c))
}

/// Independent Poisson counts at the transmit (`cos²`) and reflect (`sin²`)
/// arms.
pub fn pbs_measure<R: Rng + ?Sized>(
    state: &TwoModeCoherentState,
    analyzer_angle: f64,
    rng: &mut R,
) -> DetectionEvent {
    let (t, r) = pbs_means(state, analyzer_angle);
    DetectionEvent::new(poisson(rng, t), poisson(rng, r))
}
