//! Shared-key basis distribution over mesoscopic pulses.
//!
//! 1. Alice and Bob expand a shared seed key `K` into `K′`.
//! 2. Alice draws a fresh random sequence `R` with one bit per slot. Slot
//!    `i` reads `log₂M` bits of `K′` as a big-endian basis index `D`, whose
//!    first-quadrant angle is `D·π/(2M)` and second-quadrant partner is that
//!    plus `π/2`. The quadrant follows `parity(D) XOR bit`: 0 selects the
//!    first quadrant, 1 the second.
//! 3. Bob rebuilds every `D` from `K′`, sets the analyzer to the
//!    first-quadrant angle and reads the bit off which arm clicks.
//!
//! # Key expansion
//!
//! Generator `chacha20-sha256-v1`: the seed bits are packed MSB-first into
//! bytes (zero padded), prefixed with the bit length as a little-endian
//! `u64`, and hashed with SHA-256. The digest keys a ChaCha20 block function
//! with zero nonce and block counter starting at 0; keystream bytes are
//! expanded MSB-first into bits. The fingerprint is the first 8 digest bytes
//! in hex.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{invalid, Error, Result};
use crate::polarization::DetectionEvent;

pub const MIN_SEED_BITS: usize = 64;
pub const GENERATOR_ID: &str = "chacha20-sha256-v1";

/// Pre-shared secret `K`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedKey {
    bits: Vec<bool>,
}

impl SeedKey {
    pub fn new(bits: Vec<bool>) -> Result<Self> {
        if bits.len() < MIN_SEED_BITS {
            return Err(invalid(
                "seed_key",
                format!("{} bits, need at least {MIN_SEED_BITS}", bits.len()),
            ));
        }
        Ok(Self { bits })
    }

    /// Bits of `bytes`, MSB first.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        Self::new(bytes_to_bits(bytes))
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }
}

fn bytes_to_bits(bytes: &[u8]) -> Vec<bool> {
    bytes
        .iter()
        .flat_map(|b| (0..8).rev().map(move |k| (b >> k) & 1 == 1))
        .collect()
}

fn bits_to_bytes(bits: &[bool]) -> Vec<u8> {
    bits.chunks(8)
        .map(|c| {
            c.iter()
                .enumerate()
                .fold(0u8, |acc, (k, &b)| acc | (u8::from(b) << (7 - k)))
        })
        .collect()
}

/// Bits as lowercase hex, MSB-first; a trailing partial byte is zero padded.
pub fn bits_to_hex(bits: &[bool]) -> String {
    bits_to_bytes(bits).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Expanded key `K′`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpandedKey {
    pub bits: Vec<bool>,
    pub generator_id: &'static str,
    pub seed_fingerprint: String,
}

impl ExpandedKey {
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

pub fn expand_key(seed: &SeedKey, target_bits: usize) -> Result<ExpandedKey> {
    if target_bits == 0 {
        return Err(invalid("target_bits", "must be >= 1"));
    }
    let mut hasher = Sha256::new();
    hasher.update((seed.bits.len() as u64).to_le_bytes());
    hasher.update(bits_to_bytes(&seed.bits));
    let digest: [u8; 32] = hasher.finalize().into();

    let mut stream = ChaCha20Rng::from_seed(digest);
    let mut bytes = vec![0u8; target_bits.div_ceil(8)];
    stream.fill_bytes(&mut bytes);
    let mut bits = bytes_to_bits(&bytes);
    bits.truncate(target_bits);

    Ok(ExpandedKey {
        bits,
        generator_id: GENERATOR_ID,
        seed_fingerprint: digest[..8].iter().map(|b| format!("{b:02x}")).collect(),
    })
}

/// `log₂M` for a power of two `M ≥ 2`.
pub fn bits_per_slot(basis_count: u32) -> Result<u32> {
    if basis_count < 2 || !basis_count.is_power_of_two() {
        return Err(invalid(
            "basis_count",
            format!("M = {basis_count} must be a power of two >= 2"),
        ));
    }
    Ok(basis_count.trailing_zeros())
}

/// `⌊|K′| / log₂M⌋`.
pub fn r_length(kprime_bits: usize, basis_count: u32) -> Result<usize> {
    Ok(kprime_bits / bits_per_slot(basis_count)? as usize)
}

/// Alice's random sequence `R`, drawn from the injected entropy source.
pub fn generate_r<R: Rng + ?Sized>(length: usize, entropy: &mut R) -> Result<Vec<bool>> {
    if length == 0 {
        return Err(invalid("length", "R must have at least one bit"));
    }
    Ok((0..length).map(|_| entropy.random_bool(0.5)).collect())
}

/// Basis indices `D` read big-endian from consecutive `log₂M`-bit groups of
/// `K′`; trailing bits that do not fill a group are unused.
pub fn basis_indices(kprime: &ExpandedKey, basis_count: u32) -> Result<Vec<u32>> {
    let width = bits_per_slot(basis_count)? as usize;
    Ok(kprime
        .bits
        .chunks_exact(width)
        .map(|group| group.iter().fold(0u32, |acc, &b| (acc << 1) | u32::from(b)))
        .collect())
}

/// First-quadrant angle of basis `d`: `d·π/(2M)`.
pub fn first_quadrant_angle(basis_index: u32, basis_count: u32) -> f64 {
    f64::from(basis_index) * FRAC_PI_2 / f64::from(basis_count)
}

/// Whether `(D, bit)` is sent in the first quadrant.
pub fn uses_first_quadrant(basis_index: u32, bit: bool) -> bool {
    (basis_index % 2 == 1) == bit
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScheduleSlot {
    pub basis_index: u32,
    pub alice_angle: f64,
    pub bit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BasisSchedule {
    pub basis_count: u32,
    pub slots: Vec<ScheduleSlot>,
}

impl BasisSchedule {
    /// Tab-separated `slot, basis_index, angle_rad, bit` columns with a
    /// header line; angles use shortest round-trip formatting.
    pub fn to_columns(&self) -> String {
        let mut out = String::from("slot\tbasis_index\tangle_rad\tbit\n");
        for (i, s) in self.slots.iter().enumerate() {
            let _ = writeln!(
                out,
                "{i}\t{}\t{}\t{}",
                s.basis_index,
                s.alice_angle,
                u8::from(s.bit)
            );
        }
        out
    }
}

pub fn build_basis_schedule(
    kprime: &ExpandedKey,
    r: &[bool],
    basis_count: u32,
) -> Result<BasisSchedule> {
    let indices = basis_indices(kprime, basis_count)?;
    if r.len() != indices.len() {
        return Err(Error::LengthMismatch {
            expected: indices.len(),
            actual: r.len(),
        });
    }
    let slots = indices
        .into_iter()
        .zip(r)
        .map(|(d, &bit)| {
            let first = first_quadrant_angle(d, basis_count);
            let alice_angle = if uses_first_quadrant(d, bit) {
                first
            } else {
                first + FRAC_PI_2
            };
            debug_assert!(alice_angle < PI);
            ScheduleSlot {
                basis_index: d,
                alice_angle,
                bit,
            }
        })
        .collect();
    Ok(BasisSchedule { basis_count, slots })
}

/// Bob's analyzer angle for every slot.
pub fn bob_analyzer_angles(kprime: &ExpandedKey, basis_count: u32) -> Result<Vec<f64>> {
    Ok(basis_indices(kprime, basis_count)?
        .into_iter()
        .map(|d| first_quadrant_angle(d, basis_count))
        .collect())
}

/// Bob's reading of `R`; `None` marks an erasure (no click or a double
/// click).
pub fn bob_decode(
    kprime: &ExpandedKey,
    events: &[DetectionEvent],
    basis_count: u32,
) -> Result<Vec<Option<bool>>> {
    let indices = basis_indices(kprime, basis_count)?;
    if events.len() != indices.len() {
        return Err(Error::LengthMismatch {
            expected: indices.len(),
            actual: events.len(),
        });
    }
    Ok(indices
        .into_iter()
        .zip(events)
        .map(|(d, e)| {
            // The first-quadrant state encodes bit = parity(D).
            let first_quadrant_bit = d % 2 == 1;
            match (e.transmit_clicked(), e.reflect_clicked()) {
                (true, false) => Some(first_quadrant_bit),
                (false, true) => Some(!first_quadrant_bit),
                _ => None,
            }
        })
        .collect())
}
