//! The three commands.

use std::path::PathBuf;

use hpqkd_core::adversary::{
    attack_success_curve, pns_exploitable_fraction, pns_monte_carlo, FractionEstimate, PnsModel,
};
use hpqkd_core::protocol::{run_session, SessionReport};
use hpqkd_core::rng::stream;
use rayon::prelude::*;
use serde::Serialize;

use crate::report::{
    cell, opt_cell, table_path, write_bundle, write_table, Meta, ReportBundle, Table,
};
use crate::scenario::{Layout, LoadedScenario, Scenario};
use crate::verify::{verify_optics, OpticsVerification, Status, VerifyParams};
use crate::CliError;

const ROLE_PNS: u64 = 0x9_0000_0000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    AttackSweep,
    OpticsVerify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::AttackSweep => "attack-sweep",
            Command::OpticsVerify => "optics-verify",
        }
    }
}

/// Command-line overrides of scenario values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    /// Slots per session for `simulate`, trials per grid point for
    /// `attack-sweep`; ignored by `optics-verify`.
    pub trials: Option<u64>,
}

impl Overrides {
    fn apply(&self, command: Command, s: &mut Scenario) -> Result<(), CliError> {
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
        if let Some(t) = self.trials {
            match command {
                Command::Simulate => {
                    s.session.num_slots = usize::try_from(t)
                        .map_err(|_| CliError::Config(format!("--trials {t} is too large")))?;
                }
                Command::AttackSweep => s.attack.trials = t,
                Command::OpticsVerify => {}
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulateData {
    pub sessions: Vec<SessionReport>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AttackRow {
    pub alpha_sq_over_m: f64,
    pub alpha_sq: f64,
    pub basis_count: usize,
    pub trials: u64,
    pub success_rate: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PnsRow {
    pub mu: f64,
    pub threshold: u32,
    pub analytic: f64,
    pub monte_carlo: f64,
    pub monte_carlo_stderr: f64,
    pub samples: u64,
    /// `(monte_carlo − analytic) / stderr`; 0 when the stderr vanishes.
    pub z_score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PnsRatio {
    pub mu: f64,
    /// Analytic threshold-2 tail over threshold-3 tail.
    pub ratio_2_over_3: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Monotonicity {
    /// No point falls below its predecessor by more than two combined
    /// standard errors.
    pub holds: bool,
    /// Largest drop between neighbours in units of their combined stderr.
    pub worst_drop_sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttackSweepData {
    pub basis_count: usize,
    pub layout: Layout,
    pub success: Vec<AttackRow>,
    pub monotonicity: Monotonicity,
    pub pns: Vec<PnsRow>,
    pub pns_ratios: Vec<PnsRatio>,
}

/// Result of a command before it is written out.
#[derive(Debug, Clone)]
pub struct Outcome<T> {
    pub data: T,
    pub tables: Vec<Table>,
    pub summary: Vec<String>,
}

pub fn simulate(s: &Scenario) -> Result<Outcome<SimulateData>, CliError> {
    if s.session.modes.is_empty() {
        return Err(CliError::Config("session.modes is empty".into()));
    }
    let sessions = s
        .session
        .modes
        .iter()
        .map(|&mode| run_session(&s.session_config(mode)?).map_err(CliError::from_core))
        .collect::<Result<Vec<_>, _>>()?;

    let mut table = Table::new(
        "sessions",
        &[
            "mode",
            "slots",
            "channels",
            "raw_detections",
            "sifted_bits",
            "qber",
            "useful_rate_bits_per_slot",
            "useful_rate_stderr",
            "raw_slot_rate",
            "rate_ratio_vs_baseline",
            "rate_ratio_stderr",
        ],
    );
    let mut channels = Table::new(
        "channels",
        &[
            "mode",
            "channel",
            "usable_slots",
            "erasures",
            "raw_detections",
            "double_clicks",
            "sifted_bits",
            "errors",
            "qber",
            "useful_rate",
            "useful_rate_stderr",
        ],
    );
    let mut summary = Vec::new();
    for r in &sessions {
        table.push(vec![
            cell(r.mode),
            cell(r.slots),
            cell(r.channels),
            cell(r.raw_detections),
            cell(r.sifted_bits),
            cell(r.qber),
            cell(r.useful_rate_bits_per_slot),
            cell(r.useful_rate_stderr),
            cell(r.raw_slot_rate),
            opt_cell(r.rate_ratio_vs_baseline),
            opt_cell(r.rate_ratio_stderr),
        ]);
        for c in &r.per_channel {
            channels.push(vec![
                cell(r.mode),
                cell(c.channel),
                cell(c.usable_slots),
                cell(c.erasures),
                cell(c.raw_detections),
                cell(c.double_clicks),
                cell(c.sifted_bits),
                cell(c.errors),
                cell(c.qber),
                cell(c.useful_rate),
                cell(c.useful_rate_stderr),
            ]);
        }
        let ratio = match (r.rate_ratio_vs_baseline, r.rate_ratio_stderr) {
            (Some(x), Some(e)) => format!("{x:.4} ± {e:.4}"),
            _ => "n/a".into(),
        };
        summary.push(format!(
            "{}: useful rate {:.4} bits/slot, QBER {:.4}, ratio {}",
            r.mode, r.useful_rate_bits_per_slot, r.qber, ratio
        ));
        for w in &r.warnings {
            summary.push(format!("  warning: {w}"));
        }
    }
    Ok(Outcome {
        data: SimulateData { sessions },
        tables: vec![table, channels],
        summary,
    })
}

fn monotonicity(rows: &[AttackRow]) -> Monotonicity {
    let worst = rows
        .windows(2)
        .map(|w| {
            let drop = w[0].success_rate - w[1].success_rate;
            let se = (w[0].stderr.powi(2) + w[1].stderr.powi(2)).sqrt();
            if drop <= 0.0 {
                0.0
            } else if se > 0.0 {
                drop / se
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0, f64::max);
    Monotonicity {
        holds: worst <= 2.0,
        worst_drop_sigma: worst,
    }
}

/// PNS rows for every `(μ, threshold)` pair, in grid order.
pub fn pns_table(
    mu: &[f64],
    thresholds: &[u32],
    samples: u64,
    seed: u64,
) -> Result<Vec<PnsRow>, CliError> {
    let grid: Vec<(f64, u32)> = mu
        .iter()
        .flat_map(|&m| thresholds.iter().map(move |&t| (m, t)))
        .collect();
    grid.par_iter()
        .enumerate()
        .map(|(i, &(mu, threshold))| {
            let model = PnsModel::new(mu, threshold).map_err(CliError::from_core)?;
            let analytic = pns_exploitable_fraction(&model);
            let mut rng = stream(seed, i as u64, ROLE_PNS);
            let FractionEstimate {
                fraction, stderr, ..
            } = pns_monte_carlo(&model, samples, &mut rng).map_err(CliError::from_core)?;
            Ok(PnsRow {
                mu,
                threshold,
                analytic,
                monte_carlo: fraction,
                monte_carlo_stderr: stderr,
                samples,
                z_score: if stderr > 0.0 {
                    (fraction - analytic) / stderr
                } else {
                    0.0
                },
            })
        })
        .collect()
}

pub fn attack_sweep(s: &Scenario) -> Result<Outcome<AttackSweepData>, CliError> {
    let a = &s.attack;
    if a.alpha_sq_over_m.is_empty() {
        return Err(CliError::Config(
            "attack.alpha_sq_over_m grid is empty".into(),
        ));
    }
    let config = s.brute_force()?;
    let m = a.basis_count as f64;
    let grid: Vec<f64> = a.alpha_sq_over_m.iter().map(|r| r * m).collect();
    let points =
        attack_success_curve(&grid, &config, a.trials, s.seed).map_err(CliError::from_core)?;
    let success: Vec<AttackRow> = points
        .iter()
        .zip(&a.alpha_sq_over_m)
        .map(|(p, &ratio)| AttackRow {
            alpha_sq_over_m: ratio,
            alpha_sq: p.alpha_sq,
            basis_count: p.basis_count,
            trials: p.trials,
            success_rate: p.success_rate,
            stderr: p.stderr,
        })
        .collect();
    let pns = pns_table(&s.pns.mu, &s.pns.thresholds, s.pns.samples, s.seed)?;
    let pns_ratios: Vec<PnsRatio> = s
        .pns
        .mu
        .iter()
        .filter_map(|&mu| {
            let tail = |t: u32| {
                pns.iter()
                    .find(|r| r.mu == mu && r.threshold == t)
                    .map(|r| r.analytic)
            };
            match (tail(2), tail(3)) {
                (Some(two), Some(three)) if three > 0.0 => Some(PnsRatio {
                    mu,
                    ratio_2_over_3: two / three,
                }),
                _ => None,
            }
        })
        .collect();

    let mut attack = Table::new(
        "attack",
        &[
            "alpha_sq_over_m",
            "alpha_sq",
            "basis_count",
            "trials",
            "success_rate",
            "stderr",
        ],
    );
    for r in &success {
        attack.push(vec![
            cell(r.alpha_sq_over_m),
            cell(r.alpha_sq),
            cell(r.basis_count),
            cell(r.trials),
            cell(r.success_rate),
            cell(r.stderr),
        ]);
    }
    let mut pns_t = Table::new(
        "pns",
        &[
            "mu",
            "threshold",
            "analytic",
            "monte_carlo",
            "monte_carlo_stderr",
            "samples",
            "z_score",
        ],
    );
    for r in &pns {
        pns_t.push(vec![
            cell(r.mu),
            cell(r.threshold),
            cell(r.analytic),
            cell(r.monte_carlo),
            cell(r.monte_carlo_stderr),
            cell(r.samples),
            cell(r.z_score),
        ]);
    }
    let monotonicity = monotonicity(&success);
    let mut summary = vec![format!(
        "brute force M={} ({}): success {:.4} at |α|²/M={} to {:.4} at |α|²/M={}; monotone: {}",
        a.basis_count,
        json_name(&a.layout),
        success[0].success_rate,
        success[0].alpha_sq_over_m,
        success[success.len() - 1].success_rate,
        success[success.len() - 1].alpha_sq_over_m,
        monotonicity.holds
    )];
    for r in &pns_ratios {
        summary.push(format!(
            "PNS μ={}: threshold-2 / threshold-3 exposure = {:.2}",
            r.mu, r.ratio_2_over_3
        ));
    }
    Ok(Outcome {
        data: AttackSweepData {
            basis_count: a.basis_count,
            layout: a.layout,
            success,
            monotonicity,
            pns,
            pns_ratios,
        },
        tables: vec![attack, pns_t],
        summary,
    })
}

pub fn optics_verify(s: &Scenario) -> Result<Outcome<OpticsVerification>, CliError> {
    let v = &s.optics_verify;
    let params = VerifyParams {
        sweep_points: v.sweep_points,
        sampling: v.sampling(),
        hold_delta_phi: v.hold_delta_phi,
        detune_rad: v.detune_rad,
        tolerance: v.tolerance,
    };
    let data = verify_optics(&s.optics, &s.fiber()?, &params).map_err(CliError::from_core)?;

    let mut sweep = Table::new(
        "sweep",
        &[
            "swept_channel",
            "delta_phi",
            "source",
            "carrier",
            "upper_1",
            "lower_1",
            "upper_2",
            "lower_2",
        ],
    );
    for r in &data.sweep {
        sweep.push(vec![
            cell(r.swept_channel),
            cell(r.delta_phi),
            json_name(&r.source),
            cell(r.carrier),
            cell(r.upper_1),
            cell(r.lower_1),
            cell(r.upper_2),
            cell(r.lower_2),
        ]);
    }
    let mut fits = Table::new(
        "fits",
        &[
            "channel",
            "sideband",
            "law",
            "source",
            "amplitude",
            "relative_residual",
        ],
    );
    for f in &data.fits {
        fits.push(vec![
            cell(f.channel),
            cell(f.sideband),
            json_name(&f.law),
            json_name(&f.source),
            cell(f.amplitude),
            opt_cell(f.relative_residual),
        ]);
    }
    let mut checks = Table::new("checks", &["name", "value", "limit", "status"]);
    let mut summary = Vec::new();
    for c in &data.checks {
        checks.push(vec![
            cell(c.name),
            opt_cell(c.value),
            cell(c.limit),
            json_name(&c.status),
        ]);
        summary.push(format!(
            "{:<28} {:<8} value {} limit {}",
            c.name,
            json_name(&c.status),
            opt_cell(c.value),
            c.limit
        ));
    }
    if let Some(p) = &data.prefactor {
        summary.push(format!(
            "sideband prefactor A/(E0²m1²) = {:.6}: confirms {}",
            p.normalized, p.confirmed
        ));
    }
    for w in &data.warnings {
        summary.push(format!("warning: {w}"));
    }
    Ok(Outcome {
        data,
        tables: vec![sweep, fits, checks],
        summary,
    })
}

fn json_name<T: Serialize>(value: &T) -> String {
    serde_json::to_value(value)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default()
}

/// What a finished command reports back to the caller.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub bundle: PathBuf,
    pub tables: Vec<PathBuf>,
    pub lines: Vec<String>,
}

fn emit<T: Serialize>(
    command: Command,
    loaded: &LoadedScenario,
    scenario: &Scenario,
    out: Option<&PathBuf>,
    outcome: Outcome<T>,
) -> Result<RunSummary, CliError> {
    let bundle_path = out
        .cloned()
        .unwrap_or_else(|| PathBuf::from(&scenario.output.path));
    let bundle = ReportBundle {
        meta: Meta::now(command.name(), scenario.seed),
        scenario: &loaded.source,
        data: &outcome.data,
    };
    write_bundle(&bundle_path, &bundle)?;
    let mut tables = Vec::new();
    if scenario.output.csv {
        for t in &outcome.tables {
            let p = table_path(&bundle_path, t.name);
            write_table(&p, t)?;
            tables.push(p);
        }
    }
    Ok(RunSummary {
        bundle: bundle_path,
        tables,
        lines: outcome.summary,
    })
}

/// Runs `command` on a loaded scenario and writes its outputs.
///
/// A failed optics check still writes the bundle before returning
/// [`CliError::CheckFailed`].
pub fn run(
    command: Command,
    loaded: &LoadedScenario,
    overrides: &Overrides,
) -> Result<RunSummary, CliError> {
    let mut scenario = loaded.scenario.clone();
    overrides.apply(command, &mut scenario)?;
    let out = overrides.out.as_ref();
    match command {
        Command::Simulate => emit(command, loaded, &scenario, out, simulate(&scenario)?),
        Command::AttackSweep => emit(command, loaded, &scenario, out, attack_sweep(&scenario)?),
        Command::OpticsVerify => {
            let outcome = optics_verify(&scenario)?;
            let failed: Vec<&str> = outcome
                .data
                .checks
                .iter()
                .filter(|c| c.status == Status::Fail)
                .map(|c| c.name)
                .collect();
            let summary = emit(command, loaded, &scenario, out, outcome)?;
            if failed.is_empty() {
                Ok(summary)
            } else {
                Err(CliError::CheckFailed(failed.join(", ")))
            }
        }
    }
}
