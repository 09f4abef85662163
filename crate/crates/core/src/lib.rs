//! Seeded simulator for quantum key distribution with a pre-shared basis
//! sequence, alongside the one-basis scheme and a BB84 baseline.
//!
//! The crate is organised bottom-up:
//!
//! * [`quantum`]: real-amplitude qubit kernel (states, Born rule, density
//!   operators, a two-qubit entangled pair).
//! * [`channel`]: the quantum channel (noise plus an optional tap) and the
//!   append-only public classical transcript.
//! * [`protocol`]: Alice/Bob session pipelines for the three schemes, error
//!   check, Toeplitz privacy amplification, key expansion and basis-sequence
//!   lifecycle.
//! * [`adversary`]: Eve's strategies and inference procedures.
//! * [`analysis`]: QBER, hypothesis tests, mutual information, key accounting.
//! * [`scenario`]: seeded batches and their CSV/JSON outputs.
//! * [`verify`]: the acceptance battery shared by the CLI and the test suite.

pub mod adversary;
pub mod analysis;
pub mod channel;
mod error;
mod par;
pub mod protocol;
pub mod quantum;
pub mod rng;
pub mod scenario;
pub mod verify;

pub use error::{QkdError, Result};

/// A classical bit, always 0 or 1.
pub type Bit = u8;

pub(crate) mod bitstr {
    //! Serialize `Vec<u8>` bit vectors as compact "0101" strings.
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bits: &[u8], s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&crate::format_bits(bits))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        crate::parse_bits(&s).map_err(D::Error::custom)
    }
}

/// Render bits as a string of '0'/'1'.
pub fn format_bits(bits: &[Bit]) -> String {
    bits.iter().map(|&b| if b == 0 { '0' } else { '1' }).collect()
}

/// Parse a string of '0'/'1' characters. Commas and whitespace are ignored.
pub fn parse_bits(s: &str) -> Result<Vec<Bit>> {
    s.chars()
        .filter(|c| !c.is_whitespace() && *c != ',')
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            other => Err(QkdError::InvalidBits(other)),
        })
        .collect()
}
