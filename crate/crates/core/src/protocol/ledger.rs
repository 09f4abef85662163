use serde::{Deserialize, Serialize};

use super::{Scheme, SessionTranscript};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundLedger {
    pub round: usize,
    pub raw: u64,
    pub sifted: u64,
    pub disclosed: u64,
    pub net_key_bits: u64,
    pub residual_errors: u64,
    pub aborted: bool,
}

/// Key accounting for one batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyLedger {
    pub scheme: Scheme,
    /// Pre-shared secret bits spent (the basis sequence, counted once).
    pub secret_consumed: u64,
    pub rounds: Vec<RoundLedger>,
    pub raw_produced: u64,
    pub sifted: u64,
    pub disclosed: u64,
    pub net_key_bits: u64,
    pub residual_errors: u64,
    /// Net-key bits set aside for the next basis sequence.
    pub reserved_bits: u64,
    /// Fraction of raw positions dropped by sifting.
    pub discard_fraction: f64,
}

impl KeyLedger {
    pub fn from_sessions(scheme: Scheme, secret_consumed: u64, sessions: &[SessionTranscript], reserve: usize) -> Self {
        let rounds: Vec<RoundLedger> = sessions
            .iter()
            .map(|s| RoundLedger {
                round: s.round,
                raw: s.alice_bits.len() as u64,
                sifted: s.sifted_indices.len() as u64,
                disclosed: s.disclosed_indices.len() as u64,
                net_key_bits: s.net_key.len() as u64,
                residual_errors: s.residual_errors as u64,
                aborted: s.aborted,
            })
            .collect();
        let sum = |f: fn(&RoundLedger) -> u64| rounds.iter().map(f).sum::<u64>();
        let raw_produced = sum(|r| r.raw);
        let sifted = sum(|r| r.sifted);
        let net_key_bits = sum(|r| r.net_key_bits);
        KeyLedger {
            scheme,
            secret_consumed,
            raw_produced,
            sifted,
            disclosed: sum(|r| r.disclosed),
            net_key_bits,
            residual_errors: sum(|r| r.residual_errors),
            reserved_bits: (reserve as u64).min(net_key_bits),
            discard_fraction: if raw_produced == 0 {
                0.0
            } else {
                1.0 - sifted as f64 / raw_produced as f64
            },
            rounds,
        }
    }

    /// Net key produced per pre-shared secret bit, when any was consumed.
    pub fn net_per_secret_bit(&self) -> Option<f64> {
        (self.secret_consumed > 0).then(|| self.net_key_bits as f64 / self.secret_consumed as f64)
    }

    /// Net key left for use after the reserve is set aside.
    pub fn usable_key_bits(&self) -> u64 {
        self.net_key_bits - self.reserved_bits
    }
}
