use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("RF tones are not commensurate: {0} / {1} has no small rational ratio")]
    NotCommensurate(f64, f64),

    #[error("sampling violates Nyquist: sample rate {sample_rate} Hz <= {required} Hz")]
    Nyquist { sample_rate: f64, required: f64 },

    #[error("fiber link is not tuned: channel {channel} phase off by {offset} rad")]
    NotTuned { channel: u8, offset: f64 },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("session mode mismatch: expected {expected}, config has {actual}")]
    ModeMismatch {
        expected: &'static str,
        actual: &'static str,
    },
}

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field,
        reason: reason.into(),
    }
}

/// Non-fatal conditions surfaced alongside results.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    /// A modulation depth exceeds the small-signal regime.
    SmallSignal { field: &'static str, depth: f64 },
    /// Mesoscopic pulses are not much dimmer than the basis count.
    SecurityCondition { alpha_sq: f64, basis_count: u32 },
    /// The link length does not satisfy the interference tuning condition.
    Detuned { channel: u8, offset_rad: f64 },
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Warning::SmallSignal { field, depth } => {
                write!(f, "{field} = {depth} exceeds the small-signal regime (0.2)")
            }
            Warning::SecurityCondition {
                alpha_sq,
                basis_count,
            } => write!(
                f,
                "mesoscopic mean photon number {alpha_sq} is not << basis count {basis_count}"
            ),
            Warning::Detuned {
                channel,
                offset_rad,
            } => write!(
                f,
                "channel {channel} link phase detuned by {offset_rad} rad"
            ),
        }
    }
}
