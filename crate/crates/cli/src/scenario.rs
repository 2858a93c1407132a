//! Scenario files.
//!
//! A scenario is one TOML document. Every key has a default except
//! `schema_version`, and unknown keys are rejected.

use std::path::Path;

use hpqkd_core::adversary::BruteForceConfig;
use hpqkd_core::optics::{FiberLink, ModulationPlan};
use hpqkd_core::optics::{MzArms, OracleSampling};
use hpqkd_core::protocol::{ChannelModel, Mode, OpticsSetup, SessionConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub session: SessionSection,
    #[serde(default)]
    pub channel: ChannelModel,
    #[serde(default)]
    pub optics: ModulationPlan,
    #[serde(default)]
    pub fiber: FiberSection,
    #[serde(default)]
    pub attack: AttackSection,
    #[serde(default)]
    pub pns: PnsSection,
    #[serde(default)]
    pub optics_verify: VerifySection,
    #[serde(default)]
    pub output: OutputSection,
}

fn default_seed() -> u64 {
    0x5EED
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SessionSection {
    pub modes: Vec<Mode>,
    pub num_slots: usize,
    pub bob_basis_fault_fraction: f64,
    pub record_transcript: bool,
}

impl Default for SessionSection {
    fn default() -> Self {
        Self {
            modes: Mode::ALL.to_vec(),
            num_slots: 10_000,
            bob_basis_fault_fraction: 0.0,
            record_transcript: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FiberSection {
    /// Omitted: the shortest link that tunes both channels.
    pub length_m: Option<f64>,
    pub refractive_index: f64,
    /// Search bound for the automatic length.
    pub max_order: u32,
}

impl Default for FiberSection {
    fn default() -> Self {
        Self {
            length_m: None,
            refractive_index: 1.5,
            max_order: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    FirstQuadrant,
    HalfCircle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttackSection {
    pub basis_count: usize,
    pub layout: Layout,
    /// Grid of `|α|²/M`.
    pub alpha_sq_over_m: Vec<f64>,
    pub trials: u64,
    pub tap_fraction: f64,
    pub detector_efficiency: f64,
    pub dark_count_prob: f64,
}

impl Default for AttackSection {
    fn default() -> Self {
        Self {
            basis_count: 64,
            layout: Layout::FirstQuadrant,
            alpha_sq_over_m: (-4..=6).map(|k| 2f64.powi(k)).collect(),
            trials: 1000,
            tap_fraction: 1.0,
            detector_efficiency: 1.0,
            dark_count_prob: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PnsSection {
    pub mu: Vec<f64>,
    pub thresholds: Vec<u32>,
    pub samples: u64,
}

impl Default for PnsSection {
    fn default() -> Self {
        Self {
            mu: vec![0.05, 0.1, 0.2],
            thresholds: vec![2, 3],
            samples: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    pub sweep_points: usize,
    pub samples: usize,
    pub periods: u32,
    pub arms: MzArms,
    /// Channel-1 phase difference held while channel 2 is swept, rad.
    pub hold_delta_phi: f64,
    /// Link-phase offset used for the detuned visibility row, rad.
    pub detune_rad: f64,
    /// Relative tolerance of the fit, complementarity and independence
    /// checks.
    pub tolerance: f64,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            sweep_points: 32,
            samples: 1 << 14,
            periods: 1,
            arms: MzArms::PushPull,
            hold_delta_phi: 1.0,
            detune_rad: 0.3,
            tolerance: 0.01,
        }
    }
}

impl VerifySection {
    pub fn sampling(&self) -> OracleSampling {
        OracleSampling {
            samples: self.samples,
            periods: self.periods,
            arms: self.arms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub path: String,
    pub csv: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            path: "hpqkd-report.json".into(),
            csv: true,
        }
    }
}

/// One row of the scenario key reference.
pub struct KeyDoc {
    pub key: &'static str,
    pub unit: &'static str,
    pub meaning: &'static str,
}

const fn key(key: &'static str, unit: &'static str, meaning: &'static str) -> KeyDoc {
    KeyDoc { key, unit, meaning }
}

/// Every scenario key.
pub const SCENARIO_KEYS: &[KeyDoc] = &[
    key("schema_version", "-", "required; must be 1"),
    key("seed", "u64", "master seed of every random stream"),
    key(
        "session.modes",
        "list",
        "baseline_bb84 | hybrid | parallel | hybrid_parallel",
    ),
    key("session.num_slots", "slots", "time slots per session"),
    key(
        "session.bob_basis_fault_fraction",
        "fraction",
        "slots where Bob's modulator uses the wrong basis",
    ),
    key(
        "session.record_transcript",
        "bool",
        "embed the public transcript",
    ),
    key("channel.length_km", "km", "fiber length"),
    key("channel.loss_db_per_km", "dB/km", "fiber attenuation"),
    key(
        "channel.detector_efficiency",
        "probability",
        "detector quantum efficiency",
    ),
    key(
        "channel.dark_count_prob",
        "probability/gate",
        "dark click per detector",
    ),
    key("channel.mu_weak", "photons", "mean photons per weak pulse"),
    key(
        "channel.alpha_sq_meso",
        "photons",
        "mean photons per mesoscopic pulse",
    ),
    key("channel.basis_count", "count", "M, a power of two"),
    key(
        "channel.single_photon",
        "bool",
        "weak pulses carry exactly one photon",
    ),
    key("optics.field_amplitude", "arb.", "input field amplitude E0"),
    key(
        "optics.carrier_omega",
        "rad/s",
        "optical carrier (metadata)",
    ),
    key("optics.bias_phase", "rad", "Mach-Zehnder bias"),
    key(
        "optics.alice_depth",
        "rad, [ch1, ch2]",
        "Alice modulation depths",
    ),
    key(
        "optics.bob_depth",
        "rad, [ch1, ch2]",
        "Bob modulation depths",
    ),
    key(
        "optics.rf_omega",
        "rad/s, [ch1, ch2]",
        "RF angular frequencies",
    ),
    key("optics.alice_phase", "rad, [ch1, ch2]", "Alice RF phases"),
    key("optics.bob_phase", "rad, [ch1, ch2]", "Bob RF phases"),
    key("fiber.length_m", "m", "link length; omitted = auto-tuned"),
    key("fiber.refractive_index", "-", "group index"),
    key("fiber.max_order", "count", "search bound for auto-tuning"),
    key("attack.basis_count", "count", "M of the brute-force bank"),
    key("attack.layout", "-", "first_quadrant | half_circle"),
    key("attack.alpha_sq_over_m", "list", "grid of |alpha|^2 / M"),
    key("attack.trials", "trials", "trials per grid point (>= 100)"),
    key(
        "attack.tap_fraction",
        "fraction",
        "share of the pulse Eve diverts",
    ),
    key(
        "attack.detector_efficiency",
        "probability",
        "Eve's detector efficiency",
    ),
    key(
        "attack.dark_count_prob",
        "probability/gate",
        "Eve's dark click probability",
    ),
    key("pns.mu", "list, photons", "weak-pulse mean photon numbers"),
    key(
        "pns.thresholds",
        "list, photons",
        "exploitable photon thresholds (2 or 3)",
    ),
    key("pns.samples", "pulses", "Monte Carlo pulses per row"),
    key(
        "optics_verify.sweep_points",
        "points",
        "phase-difference sweep resolution",
    ),
    key(
        "optics_verify.samples",
        "samples",
        "oracle samples per record",
    ),
    key(
        "optics_verify.periods",
        "count",
        "common RF periods per record",
    ),
    key("optics_verify.arms", "-", "push_pull | single_arm"),
    key(
        "optics_verify.hold_delta_phi",
        "rad",
        "channel-1 phase held during the channel-2 sweep",
    ),
    key(
        "optics_verify.detune_rad",
        "rad",
        "link offset of the detuned visibility row",
    ),
    key(
        "optics_verify.tolerance",
        "fraction",
        "relative tolerance of the checks",
    ),
    key("output.path", "path", "report bundle (JSON)"),
    key(
        "output.csv",
        "bool",
        "also write CSV tables next to the bundle",
    ),
];

/// Key reference as plain text for `--help`.
pub fn key_reference() -> String {
    let width = SCENARIO_KEYS.iter().map(|k| k.key.len()).max().unwrap_or(0);
    let unit_width = SCENARIO_KEYS
        .iter()
        .map(|k| k.unit.len())
        .max()
        .unwrap_or(0);
    let mut out = String::from("Scenario keys (TOML):\n");
    for k in SCENARIO_KEYS {
        out.push_str(&format!(
            "  {:width$}  {:unit_width$}  {}\n",
            k.key, k.unit, k.meaning
        ));
    }
    out
}

/// A parsed scenario together with its source text.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    pub source: String,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let scenario: Scenario =
            toml::from_str(text).map_err(|e| CliError::Config(format!("scenario: {e}")))?;
        if scenario.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                scenario.schema_version
            )));
        }
        Ok(scenario)
    }

    pub fn load(path: &Path) -> Result<LoadedScenario, CliError> {
        let source = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let scenario = Self::parse(&source)?;
        Ok(LoadedScenario { scenario, source })
    }

    pub fn fiber(&self) -> Result<FiberLink, CliError> {
        let f = &self.fiber;
        let link = match f.length_m {
            Some(length) => FiberLink::new(length, f.refractive_index),
            None => FiberLink::tuned(&self.optics, f.refractive_index, f.max_order),
        };
        link.map_err(CliError::from_core)
    }

    pub fn session_config(&self, mode: Mode) -> Result<SessionConfig, CliError> {
        Ok(SessionConfig {
            mode,
            num_slots: self.session.num_slots,
            channel: self.channel,
            optics: OpticsSetup {
                plan: self.optics,
                fiber: self.fiber()?,
            },
            seed: self.seed,
            bob_basis_fault_fraction: self.session.bob_basis_fault_fraction,
            record_transcript: self.session.record_transcript,
        })
    }

    pub fn brute_force(&self) -> Result<BruteForceConfig, CliError> {
        let a = &self.attack;
        let mut config = match a.layout {
            Layout::FirstQuadrant => BruteForceConfig::first_quadrant(a.basis_count),
            Layout::HalfCircle => BruteForceConfig::half_circle(a.basis_count),
        }
        .map_err(CliError::from_core)?;
        config.tap_fraction = a.tap_fraction;
        config.detector_efficiency = a.detector_efficiency;
        config.dark_count_prob = a.dark_count_prob;
        config.validate().map_err(CliError::from_core)?;
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> Scenario {
        Scenario::parse("schema_version = 1").unwrap()
    }

    #[test]
    fn empty_scenario_is_rejected() {
        let err = Scenario::parse("").unwrap_err();
        assert!(matches!(err, CliError::Config(_)));
        assert!(err.to_string().contains("schema_version"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for text in [
            "schema_version = 1\ncolour = 3",
            "schema_version = 1\n[channel]\nlength = 3.0",
            "schema_version = 1\n[optics]\nbias = 1.0",
            "schema_version = 1\n[nonsense]",
        ] {
            assert!(Scenario::parse(text).is_err(), "{text}");
        }
    }

    #[test]
    fn wrong_schema_version() {
        assert!(Scenario::parse("schema_version = 2").is_err());
    }

    #[test]
    fn defaults_fill_everything() {
        let s = minimal();
        assert_eq!(s.session.modes, Mode::ALL.to_vec());
        assert_eq!(s.attack.alpha_sq_over_m.len(), 11);
        assert_eq!(s.attack.alpha_sq_over_m[0], 1.0 / 16.0);
        assert_eq!(s.attack.alpha_sq_over_m[10], 64.0);
        assert_eq!(s.optics_verify.sweep_points, 32);
        let fiber = s.fiber().unwrap();
        assert!((fiber.length_m - 0.25).abs() < 0.01);
    }

    #[test]
    fn explicit_values_override() {
        let s = Scenario::parse(
            "schema_version = 1\nseed = 9\n[session]\nmodes = [\"hybrid\"]\n\
             [fiber]\nlength_m = 2.0\n[attack]\nlayout = \"half_circle\"\n",
        )
        .unwrap();
        assert_eq!(s.seed, 9);
        assert_eq!(s.session.modes, vec![Mode::Hybrid]);
        assert_eq!(s.fiber().unwrap().length_m, 2.0);
        assert_eq!(s.attack.layout, Layout::HalfCircle);
    }

    fn flatten(prefix: &str, value: &toml::Value, out: &mut Vec<String>) {
        match value {
            toml::Value::Table(t) => {
                for (k, v) in t {
                    let name = if prefix.is_empty() {
                        k.clone()
                    } else {
                        format!("{prefix}.{k}")
                    };
                    flatten(&name, v, out);
                }
            }
            _ => out.push(prefix.to_string()),
        }
    }

    #[test]
    fn reference_lists_every_key() {
        let mut s = minimal();
        s.fiber.length_m = Some(1.0);
        let value = toml::Value::try_from(&s).unwrap();
        let mut keys = Vec::new();
        flatten("", &value, &mut keys);
        let documented: Vec<&str> = SCENARIO_KEYS.iter().map(|k| k.key).collect();
        for k in &keys {
            assert!(documented.contains(&k.as_str()), "undocumented key {k}");
        }
        assert_eq!(keys.len(), documented.len());
        let text = key_reference();
        for k in SCENARIO_KEYS {
            assert!(text.contains(k.key));
        }
    }

    #[test]
    fn round_trips_through_toml() {
        let s = minimal();
        let text = toml::to_string(&s).unwrap();
        assert_eq!(Scenario::parse(&text).unwrap(), s);
    }
}
