//! Optics verification: closed form against the time-domain oracle.

use std::f64::consts::{PI, TAU};

use hpqkd_core::optics::{
    propagate, sideband_intensities_closed_form, sideband_intensities_oracle, Channel, FiberLink,
    ModulationPlan, OracleSampling, SidebandSpectrum, SPEED_OF_LIGHT,
};
use hpqkd_core::protocol::TUNING_TOLERANCE;
use hpqkd_core::Warning;
use rayon::prelude::*;
use serde::Serialize;

/// Relative spread allowed for the closed-form complementarity sum.
pub const CLOSED_FORM_COMPLEMENTARITY: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Law {
    /// `A·cos²(ΔΦ/2)`
    Cos2,
    /// `A·sin²(ΔΦ/2)`
    Sin2,
}

impl Law {
    pub fn shape(self, delta_phi: f64) -> f64 {
        match self {
            Law::Cos2 => (delta_phi / 2.0).cos().powi(2),
            Law::Sin2 => (delta_phi / 2.0).sin().powi(2),
        }
    }

    /// Expected law of a sideband on a tuned link.
    pub fn expected(channel: Channel, upper: bool) -> Self {
        match (channel, upper) {
            (Channel::One, true) | (Channel::Two, false) => Law::Cos2,
            _ => Law::Sin2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fit {
    pub amplitude: f64,
    /// `‖y − A·f‖ / ‖y‖`; `None` when the data carry no power.
    pub relative_residual: Option<f64>,
}

/// One-parameter least-squares fit of `values ≈ A·law(ΔΦ)`.
pub fn fit_law(deltas: &[f64], values: &[f64], law: Law) -> Fit {
    let shapes: Vec<f64> = deltas.iter().map(|&d| law.shape(d)).collect();
    let ff: f64 = shapes.iter().map(|f| f * f).sum();
    let fy: f64 = shapes.iter().zip(values).map(|(f, y)| f * y).sum();
    let amplitude = if ff > 0.0 { fy / ff } else { 0.0 };
    let norm = values.iter().map(|y| y * y).sum::<f64>().sqrt();
    let resid = shapes
        .iter()
        .zip(values)
        .map(|(f, y)| (y - amplitude * f).powi(2))
        .sum::<f64>()
        .sqrt();
    Fit {
        amplitude,
        relative_residual: (norm > 0.0).then(|| resid / norm),
    }
}

/// `(max − min) / mean`, or `None` for an all-zero series.
pub fn relative_spread(values: &[f64]) -> Option<f64> {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    (mean > 0.0).then(|| (max - min) / mean)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    ClosedForm,
    Oracle,
}

/// Intensities at one sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub swept_channel: u8,
    pub delta_phi: f64,
    pub source: Source,
    pub carrier: f64,
    pub upper_1: f64,
    pub lower_1: f64,
    pub upper_2: f64,
    pub lower_2: f64,
}

impl SweepRow {
    fn new(swept: Channel, delta_phi: f64, source: Source, s: &SidebandSpectrum) -> Self {
        Self {
            swept_channel: swept.number(),
            delta_phi,
            source,
            carrier: s.carrier,
            upper_1: s.upper[0],
            lower_1: s.lower[0],
            upper_2: s.upper[1],
            lower_2: s.lower[1],
        }
    }

    fn upper(&self, ch: Channel) -> f64 {
        [self.upper_1, self.upper_2][ch.index()]
    }

    fn lower(&self, ch: Channel) -> f64 {
        [self.lower_1, self.lower_2][ch.index()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitRow {
    pub channel: u8,
    pub sideband: &'static str,
    pub law: Law,
    pub source: Source,
    pub amplitude: f64,
    pub relative_residual: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplementarityRow {
    pub channel: u8,
    pub source: Source,
    /// Relative spread of upper + lower over the sweep.
    pub relative_spread: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VisibilityRow {
    pub channel: u8,
    pub link_offset_rad: f64,
    pub source: Source,
    /// `|I(0) − I(π)| / (I(0) + I(π))` on the upper sideband.
    pub visibility: Option<f64>,
}

/// The channel-1 prefactor measured by the oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prefactor {
    /// Fitted `A` of the channel-1 upper sideband.
    pub fitted_amplitude: f64,
    /// `A / (E0²·m1²)`.
    pub normalized: f64,
    pub relative_error_eighth: f64,
    pub relative_error_sixteenth: f64,
    /// `"1/8"`, `"1/16"`, or `"neither"`.
    pub confirmed: &'static str,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub value: Option<f64>,
    pub limit: f64,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    fn at_most(name: &'static str, value: Option<f64>, limit: f64) -> Self {
        let status = match value {
            Some(v) if v <= limit => Status::Pass,
            Some(_) => Status::Fail,
            None => Status::Skipped,
        };
        Self {
            name,
            value,
            limit,
            status,
            note: value.is_none().then(|| "no sideband power".to_string()),
        }
    }

    fn skipped(name: &'static str, limit: f64, note: &str) -> Self {
        Self {
            name,
            value: None,
            limit,
            status: Status::Skipped,
            note: Some(note.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OpticsVerification {
    pub fiber: FiberLink,
    pub link_offset_rad: [f64; 2],
    pub sweep: Vec<SweepRow>,
    pub fits: Vec<FitRow>,
    pub prefactor: Option<Prefactor>,
    pub complementarity: Vec<ComplementarityRow>,
    /// Largest change of a channel-1 oracle intensity over the channel-2
    /// sweep, relative to the mean channel-1 sum.
    pub channel_independence: Option<f64>,
    pub visibility: Vec<VisibilityRow>,
    pub warnings: Vec<Warning>,
    pub checks: Vec<Check>,
}

impl OpticsVerification {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Verification settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyParams {
    pub sweep_points: usize,
    pub sampling: OracleSampling,
    pub hold_delta_phi: f64,
    pub detune_rad: f64,
    pub tolerance: f64,
}

fn spectra(
    plan: &ModulationPlan,
    fiber: &FiberLink,
    sampling: &OracleSampling,
) -> hpqkd_core::Result<(SidebandSpectrum, SidebandSpectrum)> {
    Ok((
        sideband_intensities_closed_form(plan, fiber),
        sideband_intensities_oracle(plan, fiber, sampling)?,
    ))
}

fn sweep(
    base: &ModulationPlan,
    fiber: &FiberLink,
    params: &VerifyParams,
    swept: Channel,
) -> hpqkd_core::Result<Vec<(SweepRow, SweepRow)>> {
    (0..params.sweep_points)
        .into_par_iter()
        .map(|k| {
            let d = TAU * k as f64 / params.sweep_points as f64;
            let plan = match swept {
                Channel::One => base.with_phases(Channel::One, d, 0.0),
                Channel::Two => base
                    .with_phases(Channel::One, params.hold_delta_phi, 0.0)
                    .with_phases(Channel::Two, d, 0.0),
            };
            let (cf, or) = spectra(&plan, fiber, &params.sampling)?;
            Ok((
                SweepRow::new(swept, d, Source::ClosedForm, &cf),
                SweepRow::new(swept, d, Source::Oracle, &or),
            ))
        })
        .collect()
}

/// Link with the channel-1 phase moved by `offset` radians.
fn detuned(fiber: &FiberLink, plan: &ModulationPlan, offset: f64) -> FiberLink {
    FiberLink {
        length_m: fiber.length_m
            + offset * SPEED_OF_LIGHT / (fiber.refractive_index * plan.rf_omega[0]),
        ..*fiber
    }
}

fn visibility(at_zero: f64, at_pi: f64) -> Option<f64> {
    let sum = at_zero + at_pi;
    (sum > 0.0).then(|| (at_zero - at_pi).abs() / sum)
}

/// Sweeps both phase differences and compares the closed form with the
/// oracle.
pub fn verify_optics(
    plan: &ModulationPlan,
    fiber: &FiberLink,
    params: &VerifyParams,
) -> hpqkd_core::Result<OpticsVerification> {
    let mut warnings = plan.validate()?;
    fiber.validate()?;
    if params.sweep_points < 4 {
        return Err(hpqkd_core::Error::InvalidParameter {
            field: "sweep_points",
            reason: "need at least 4 points".into(),
        });
    }
    let base = ModulationPlan {
        alice_phase: [0.0; 2],
        bob_phase: [0.0; 2],
        ..*plan
    };
    let phases = propagate(&base, fiber);
    let offsets = Channel::BOTH.map(|c| phases.tuning_offset(c));
    let mut tuned = true;
    for c in Channel::BOTH {
        if base.channel_active(c) && offsets[c.index()].abs() > TUNING_TOLERANCE {
            tuned = false;
            warnings.push(Warning::Detuned {
                channel: c.number(),
                offset_rad: offsets[c.index()],
            });
        }
    }

    let sweep1 = sweep(&base, fiber, params, Channel::One)?;
    let sweep2 = sweep(&base, fiber, params, Channel::Two)?;
    let deltas: Vec<f64> = sweep1.iter().map(|(r, _)| r.delta_phi).collect();

    // Unmodulated channels only carry roundoff in the oracle.
    let active = Channel::BOTH.map(|c| base.channel_active(c));
    let mut fits = Vec::new();
    let mut complementarity = Vec::new();
    for (ch, rows) in [(Channel::One, &sweep1), (Channel::Two, &sweep2)] {
        for source in [Source::ClosedForm, Source::Oracle] {
            let pick = |p: &(SweepRow, SweepRow)| match source {
                Source::ClosedForm => p.0,
                Source::Oracle => p.1,
            };
            let upper: Vec<f64> = rows.iter().map(|p| pick(p).upper(ch)).collect();
            let lower: Vec<f64> = rows.iter().map(|p| pick(p).lower(ch)).collect();
            for (name, is_upper, values) in [("upper", true, &upper), ("lower", false, &lower)] {
                let law = Law::expected(ch, is_upper);
                let fit = fit_law(&deltas, values, law);
                fits.push(FitRow {
                    channel: ch.number(),
                    sideband: name,
                    law,
                    source,
                    amplitude: fit.amplitude,
                    relative_residual: fit.relative_residual.filter(|_| active[ch.index()]),
                });
            }
            let sums: Vec<f64> = upper.iter().zip(&lower).map(|(u, l)| u + l).collect();
            complementarity.push(ComplementarityRow {
                channel: ch.number(),
                source,
                relative_spread: relative_spread(&sums).filter(|_| active[ch.index()]),
            });
        }
    }

    let prefactor = fits
        .iter()
        .find(|f| f.channel == 1 && f.sideband == "upper" && f.source == Source::Oracle)
        .and_then(|f| {
            let scale = plan.field_amplitude.powi(2) * plan.alice_depth[0].powi(2);
            (scale > 0.0 && f.amplitude > 0.0).then(|| {
                let normalized = f.amplitude / scale;
                let e8 = (normalized * 8.0 - 1.0).abs();
                let e16 = (normalized * 16.0 - 1.0).abs();
                let confirmed = if e8.min(e16) > params.tolerance {
                    "neither"
                } else if e8 < e16 {
                    "1/8"
                } else {
                    "1/16"
                };
                Prefactor {
                    fitted_amplitude: f.amplitude,
                    normalized,
                    relative_error_eighth: e8,
                    relative_error_sixteenth: e16,
                    confirmed,
                }
            })
        });

    let channel_independence = {
        let rows: Vec<SweepRow> = sweep2.iter().map(|p| p.1).collect();
        let sums: Vec<f64> = rows.iter().map(|r| r.upper_1 + r.lower_1).collect();
        let mean = sums.iter().sum::<f64>() / sums.len() as f64;
        (active[0] && mean > 0.0).then(|| {
            let first = rows[0];
            rows.iter()
                .map(|r| {
                    (r.upper_1 - first.upper_1)
                        .abs()
                        .max((r.lower_1 - first.lower_1).abs())
                })
                .fold(0.0, f64::max)
                / mean
        })
    };

    let mut visibility_rows = Vec::new();
    for offset in [0.0, params.detune_rad] {
        let link = detuned(fiber, &base, offset);
        let at = |d: f64| {
            let plan = base
                .with_phases(Channel::One, d, 0.0)
                .with_phases(Channel::Two, d, 0.0);
            spectra(&plan, &link, &params.sampling)
        };
        let (cf0, or0) = at(0.0)?;
        let (cf_pi, or_pi) = at(PI)?;
        let link_phases = propagate(&base, &link);
        for ch in Channel::BOTH {
            for (source, a, b) in [
                (Source::ClosedForm, &cf0, &cf_pi),
                (Source::Oracle, &or0, &or_pi),
            ] {
                visibility_rows.push(VisibilityRow {
                    channel: ch.number(),
                    link_offset_rad: link_phases.tuning_offset(ch),
                    source,
                    visibility: visibility(a.upper(ch), b.upper(ch)),
                });
            }
        }
    }

    let tol = params.tolerance;
    let mut checks = Vec::new();
    let worst_fit = fits
        .iter()
        .filter(|f| f.source == Source::Oracle)
        .map(|f| f.relative_residual)
        .try_fold(0.0f64, |acc, r| r.map(|r| acc.max(r)));
    if tuned {
        checks.push(Check::at_most("interference_fit_residual", worst_fit, tol));
    } else {
        checks.push(Check::skipped(
            "interference_fit_residual",
            tol,
            "link is not tuned; see warnings",
        ));
    }
    let spread_of = |source: Source| {
        complementarity
            .iter()
            .filter(|c| c.source == source)
            .map(|c| c.relative_spread)
            .try_fold(0.0f64, |acc, r| r.map(|r| acc.max(r)))
    };
    checks.push(Check::at_most(
        "complementarity_closed_form",
        spread_of(Source::ClosedForm),
        CLOSED_FORM_COMPLEMENTARITY,
    ));
    checks.push(Check::at_most(
        "complementarity_oracle",
        spread_of(Source::Oracle),
        tol,
    ));
    checks.push(Check::at_most(
        "channel_independence",
        channel_independence,
        tol,
    ));

    let mut rows = Vec::with_capacity(4 * params.sweep_points);
    for pairs in [&sweep1, &sweep2] {
        rows.extend(pairs.iter().map(|p| p.0));
        rows.extend(pairs.iter().map(|p| p.1));
    }

    Ok(OpticsVerification {
        fiber: *fiber,
        link_offset_rad: offsets,
        sweep: rows,
        fits,
        prefactor,
        complementarity,
        channel_independence,
        visibility: visibility_rows,
        warnings,
        checks,
    })
}
