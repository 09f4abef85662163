//! Quantum channel with optional depolarizing noise and adversary tap, and
//! the public classical transcript.

use std::f64::consts::PI;
use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::quantum::{make_state, Basis, QubitState};
use crate::rng::SimRng;
use crate::{QkdError, Result};

/// Adversary hook invoked once per carrier before noise is applied.
pub trait Tap {
    fn intercept(&mut self, position: usize, carrier: QubitState, rng: &mut SimRng) -> QubitState;
}

pub struct QuantumChannel<'a> {
    noise_p: f64,
    tap: Option<&'a mut dyn Tap>,
}

impl<'a> QuantumChannel<'a> {
    pub fn new(noise_p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&noise_p) {
            return Err(QkdError::param("noise_p", "must lie in [0, 1]"));
        }
        Ok(QuantumChannel { noise_p, tap: None })
    }

    /// Noise-free, untapped channel.
    pub fn ideal() -> Self {
        QuantumChannel {
            noise_p: 0.0,
            tap: None,
        }
    }

    pub fn with_tap(mut self, tap: &'a mut dyn Tap) -> Self {
        self.tap = Some(tap);
        self
    }

    pub fn noise_p(&self) -> f64 {
        self.noise_p
    }

    /// Sends one carrier. The tap sees it first; then, with probability
    /// `noise_p`, the carrier is replaced by a random eigenstate of a
    /// uniformly random axis. No randomness is consumed when `noise_p == 0`
    /// and no tap is attached.
    pub fn transmit(&mut self, position: usize, q: QubitState, rng: &mut SimRng) -> QubitState {
        let mut out = match self.tap.as_deref_mut() {
            Some(tap) => tap.intercept(position, q, rng),
            None => q,
        };
        if self.noise_p > 0.0 && rng.random::<f64>() < self.noise_p {
            let theta = rng.random::<f64>() * PI;
            let bit = rng.random_range(0..2u8);
            // theta < π so construction cannot fail.
            out = make_state(Basis::new(theta).expect("finite angle"), bit);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Party {
    Alice,
    Bob,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MessageKind {
    /// One BB84 basis announcement (one position per entry).
    Basis,
    /// Positions retained after sifting.
    SiftResult,
    /// Positions chosen for the error check.
    SubsetIndices,
    /// Bob's bits at the error-check positions.
    SubsetBits,
    /// Error-check verdict (continue or abort).
    CheckOutcome,
    /// Public seed of the privacy-amplification hash.
    HashSeed,
    /// One-time-pad ciphertext.
    Ciphertext,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Payload {
    Basis { position: usize, basis: u8 },
    Indices(Vec<usize>),
    Bits(#[serde(with = "crate::bitstr")] Vec<u8>),
    Verdict { aborted: bool, qber_estimate: f64 },
    Seed(u64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub sender: Party,
    pub kind: MessageKind,
    /// Round index within a key-expansion batch.
    pub round: usize,
    /// Carriers delivered on the quantum channel when this was posted.
    pub at_carrier: usize,
    pub payload: Payload,
}

/// Append-only public log. Eve reads it in full and cannot modify it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassicalTranscript {
    entries: Vec<Entry>,
    #[serde(skip)]
    clock: usize,
    #[serde(skip)]
    round: usize,
}

impl ClassicalTranscript {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends one message stamped with the current carrier clock.
    pub fn announce(&mut self, sender: Party, kind: MessageKind, payload: Payload) {
        self.entries.push(Entry {
            sender,
            kind,
            round: self.round,
            at_carrier: self.clock,
            payload,
        });
    }

    /// Records that `n` further carriers have been delivered.
    pub fn advance_clock(&mut self, n: usize) {
        self.clock += n;
    }

    pub fn set_round(&mut self, round: usize) {
        self.round = round;
    }

    pub fn clock(&self) -> usize {
        self.clock
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count_kind(&self, kind: MessageKind) -> usize {
        self.entries.iter().filter(|e| e.kind == kind).count()
    }

    /// Eve's view: the transcript itself.
    pub fn eve_view(&self) -> &[Entry] {
        &self.entries
    }

    /// Entries posted since index `from`.
    pub fn since(&self, from: usize) -> ClassicalTranscript {
        ClassicalTranscript {
            entries: self.entries[from..].to_vec(),
            clock: self.clock,
            round: self.round,
        }
    }

    /// One JSON object per line.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for e in &self.entries {
            serde_json::to_writer(&mut w, e)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Functional form of [`ClassicalTranscript::announce`].
pub fn announce(
    mut t: ClassicalTranscript,
    sender: Party,
    kind: MessageKind,
    payload: Payload,
) -> ClassicalTranscript {
    t.announce(sender, kind, payload);
    t
}
