//! Alice and Bob: the one-basis scheme, the BB84 baseline and the
//! pre-shared basis-sequence scheme ("nopab", no public announcement of
//! bases), with the shared post-processing pipeline.

mod hash;
mod ledger;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::adversary::{Eve, EveRecord, EveStrategy};
use crate::analysis::qber;
use crate::channel::{ClassicalTranscript, MessageKind, Party, Payload, QuantumChannel};
use crate::quantum::{make_state, measure, Basis, QubitState};
use crate::rng::SimRng;
use crate::{Bit, QkdError, Result};

pub use hash::{privacy_amplify, ToeplitzHash};
pub use ledger::{KeyLedger, RoundLedger};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Simple,
    Bb84,
    Nopab,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Simple => "simple",
            Scheme::Bb84 => "bb84",
            Scheme::Nopab => "nopab",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = QkdError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simple" => Ok(Scheme::Simple),
            "bb84" => Ok(Scheme::Bb84),
            "nopab" => Ok(Scheme::Nopab),
            _ => Err(QkdError::param("scheme", format!("unknown scheme {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SequenceStatus {
    Fresh,
    InUse,
    Retired,
}

/// The pre-shared secret selecting Z (0) or X (1) per position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisSequence {
    #[serde(with = "crate::bitstr")]
    bits: Vec<Bit>,
    status: SequenceStatus,
    use_count: u64,
}

impl BasisSequence {
    pub fn new(bits: Vec<Bit>) -> Result<Self> {
        if bits.is_empty() {
            return Err(QkdError::Empty("basis sequence"));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(QkdError::param("basis sequence", "bits must be 0 or 1"));
        }
        Ok(BasisSequence {
            bits,
            status: SequenceStatus::Fresh,
            use_count: 0,
        })
    }

    pub fn random<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Result<Self> {
        Self::new((0..m).map(|_| rng.random_range(0..2u8)).collect())
    }

    pub fn bits(&self) -> &[Bit] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bases(&self) -> Vec<Basis> {
        self.bits.iter().map(|&b| Basis::from_bit(b)).collect()
    }

    pub fn status(&self) -> SequenceStatus {
        self.status
    }

    pub fn use_count(&self) -> u64 {
        self.use_count
    }

    pub fn ensure_usable(&self) -> Result<()> {
        if self.status == SequenceStatus::Retired {
            Err(QkdError::RetiredSequence)
        } else {
            Ok(())
        }
    }

    /// One round consumed the sequence.
    pub(crate) fn record_use(&mut self) -> Result<()> {
        self.ensure_usable()?;
        self.status = SequenceStatus::InUse;
        self.use_count += 1;
        Ok(())
    }

    pub(crate) fn retire(&mut self) -> Result<()> {
        self.ensure_usable()?;
        self.status = SequenceStatus::Retired;
        Ok(())
    }
}

/// Session configuration. Construct with [`ProtocolParams::new`] and adjust
/// fields; [`ProtocolParams::validate`] runs before every session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    pub scheme: Scheme,
    /// Carriers per round.
    pub m: usize,
    /// Rounds per batch.
    pub rounds: usize,
    pub check_fraction: f64,
    pub qber_abort_threshold: f64,
    pub pa_compression: f64,
    pub noise_p: f64,
    /// Hold back error checks until every carrier of the batch has arrived.
    pub delay_steps: bool,
    /// Net-key bits set aside as the next basis sequence.
    pub reserve_bits: usize,
    pub seed: u64,
}

pub const DEFAULT_CHECK_FRACTION: f64 = 0.1;
pub const DEFAULT_ABORT_THRESHOLD: f64 = 0.11;
pub const DEFAULT_PA_COMPRESSION: f64 = 0.9;
pub const DEFAULT_PA_COMPRESSION_UNDER_ATTACK: f64 = 0.5;

impl ProtocolParams {
    pub fn new(scheme: Scheme, m: usize) -> Self {
        ProtocolParams {
            scheme,
            m,
            rounds: 1,
            check_fraction: DEFAULT_CHECK_FRACTION,
            qber_abort_threshold: DEFAULT_ABORT_THRESHOLD,
            pa_compression: DEFAULT_PA_COMPRESSION,
            noise_p: 0.0,
            delay_steps: false,
            reserve_bits: 0,
            seed: 0,
        }
    }

    /// Default compression factor depending on whether an attack is configured.
    pub fn default_pa_compression(attack: bool) -> f64 {
        if attack {
            DEFAULT_PA_COMPRESSION_UNDER_ATTACK
        } else {
            DEFAULT_PA_COMPRESSION
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(QkdError::param("m", "must be at least 1"));
        }
        if self.rounds == 0 {
            return Err(QkdError::param("rounds", "must be at least 1"));
        }
        if !(self.check_fraction > 0.0 && self.check_fraction < 1.0) {
            return Err(QkdError::param("check_fraction", "must lie in (0, 1)"));
        }
        if !(self.qber_abort_threshold > 0.0 && self.qber_abort_threshold < 0.5) {
            return Err(QkdError::param("qber_abort_threshold", "must lie in (0, 0.5)"));
        }
        if !(self.pa_compression > 0.0 && self.pa_compression <= 1.0) {
            return Err(QkdError::param("pa_compression", "must lie in (0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.noise_p) {
            return Err(QkdError::param("noise_p", "must lie in [0, 1]"));
        }
        Ok(())
    }

    fn expect_scheme(&self, scheme: Scheme) -> Result<()> {
        if self.scheme != scheme {
            return Err(QkdError::param(
                "scheme",
                format!("expected {}, got {}", scheme.name(), self.scheme.name()),
            ));
        }
        Ok(())
    }
}

/// Everything recorded about one protocol round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionTranscript {
    pub scheme: Scheme,
    pub round: usize,
    pub eve: EveStrategy,
    pub alice_bases: Vec<Basis>,
    pub bob_bases: Vec<Basis>,
    #[serde(with = "crate::bitstr")]
    pub alice_bits: Vec<Bit>,
    #[serde(with = "crate::bitstr")]
    pub bob_bits: Vec<Bit>,
    pub sifted_indices: Vec<usize>,
    /// Raw positions revealed during the error check.
    pub disclosed_indices: Vec<usize>,
    /// Raw positions that were fed into privacy amplification.
    pub key_indices: Vec<usize>,
    pub qber_estimate: f64,
    /// Mismatch rate over all sifted positions (simulator-side ground truth).
    pub sifted_qber: f64,
    /// Undisclosed mismatches left in the key (no reconciliation is run).
    pub residual_errors: usize,
    pub aborted: bool,
    #[serde(with = "crate::bitstr")]
    pub net_key: Vec<Bit>,
    #[serde(with = "crate::bitstr")]
    pub bob_net_key: Vec<Bit>,
    pub classical: ClassicalTranscript,
    /// Carrier clock value after the last carrier of this round arrived.
    pub last_carrier_at: usize,
    pub eve_records: Vec<EveRecord>,
}

impl SessionTranscript {
    pub fn sifted_fraction(&self) -> f64 {
        if self.alice_bits.is_empty() {
            0.0
        } else {
            self.sifted_indices.len() as f64 / self.alice_bits.len() as f64
        }
    }

    /// Fraction of tapped carriers where Eve's outcome equals Alice's bit.
    pub fn eve_bit_agreement(&self) -> f64 {
        if self.eve_records.is_empty() {
            return 0.0;
        }
        let agree = self
            .eve_records
            .iter()
            .filter(|r| r.outcome == self.alice_bits[r.position])
            .count();
        agree as f64 / self.eve_records.len() as f64
    }
}

/// Carriers for `key_bits` under the basis sequence.
pub fn alice_encode(bases: &BasisSequence, key_bits: &[Bit]) -> Result<Vec<QubitState>> {
    bases.ensure_usable()?;
    if bases.len() != key_bits.len() {
        return Err(QkdError::LengthMismatch {
            what: "basis sequence vs key bits",
            left: bases.len(),
            right: key_bits.len(),
        });
    }
    Ok(bases
        .bits()
        .iter()
        .zip(key_bits)
        .map(|(&b, &k)| make_state(Basis::from_bit(b), k))
        .collect())
}

pub fn bob_measure(bases: &BasisSequence, carriers: &[QubitState], rng: &mut SimRng) -> Result<Vec<Bit>> {
    bases.ensure_usable()?;
    if carriers.is_empty() {
        return Ok(Vec::new());
    }
    if bases.len() != carriers.len() {
        return Err(QkdError::LengthMismatch {
            what: "basis sequence vs carriers",
            left: bases.len(),
            right: carriers.len(),
        });
    }
    Ok(carriers
        .iter()
        .zip(bases.bits())
        .map(|(c, &b)| measure(c, Basis::from_bit(b), rng).0)
        .collect())
}

/// Positions where the two parties used the same basis.
pub fn sift(
    alice_bases: &[Basis],
    bob_bases: &[Basis],
    alice_bits: &[Bit],
    bob_bits: &[Bit],
) -> Result<(Vec<usize>, Vec<Bit>, Vec<Bit>)> {
    let n = alice_bases.len();
    for (what, len) in [
        ("bob bases", bob_bases.len()),
        ("alice bits", alice_bits.len()),
        ("bob bits", bob_bits.len()),
    ] {
        if len != n {
            return Err(QkdError::LengthMismatch {
                what,
                left: n,
                right: len,
            });
        }
    }
    let indices: Vec<usize> = (0..n).filter(|&i| alice_bases[i] == bob_bases[i]).collect();
    let a = indices.iter().map(|&i| alice_bits[i]).collect();
    let b = indices.iter().map(|&i| bob_bits[i]).collect();
    Ok((indices, a, b))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorCheck {
    pub qber_estimate: f64,
    pub kept_a: Vec<Bit>,
    pub kept_b: Vec<Bit>,
    /// Indices into the checked strings, ascending.
    pub disclosed: Vec<usize>,
    /// Indices into the checked strings that remain secret, ascending.
    pub kept: Vec<usize>,
}

/// Sacrifice `⌈check_fraction · n⌉` uniformly chosen positions: Alice posts
/// the positions, Bob posts his bits there, and both drop them.
pub fn error_check(
    a_bits: &[Bit],
    b_bits: &[Bit],
    check_fraction: f64,
    transcript: &mut ClassicalTranscript,
    rng: &mut SimRng,
) -> Result<ErrorCheck> {
    if a_bits.len() != b_bits.len() {
        return Err(QkdError::LengthMismatch {
            what: "error check keys",
            left: a_bits.len(),
            right: b_bits.len(),
        });
    }
    if !(check_fraction > 0.0 && check_fraction < 1.0) {
        return Err(QkdError::param("check_fraction", "must lie in (0, 1)"));
    }
    let n = a_bits.len();
    let k = ((check_fraction * n as f64) - 1e-9).ceil().clamp(0.0, n as f64) as usize;
    let mut disclosed = sample(rng, n, k).into_vec();
    disclosed.sort_unstable();

    let revealed: Vec<Bit> = disclosed.iter().map(|&i| b_bits[i]).collect();
    transcript.announce(Party::Alice, MessageKind::SubsetIndices, Payload::Indices(disclosed.clone()));
    transcript.announce(Party::Bob, MessageKind::SubsetBits, Payload::Bits(revealed.clone()));

    let mismatches = disclosed.iter().zip(&revealed).filter(|(&i, &b)| a_bits[i] != b).count();
    let qber_estimate = if k == 0 { 0.0 } else { mismatches as f64 / k as f64 };

    let mut is_disclosed = vec![false; n];
    disclosed.iter().for_each(|&i| is_disclosed[i] = true);
    let kept: Vec<usize> = (0..n).filter(|&i| !is_disclosed[i]).collect();
    Ok(ErrorCheck {
        qber_estimate,
        kept_a: kept.iter().map(|&i| a_bits[i]).collect(),
        kept_b: kept.iter().map(|&i| b_bits[i]).collect(),
        disclosed,
        kept,
    })
}

/// Output of the quantum phase of one round.
struct RawRound {
    round: usize,
    alice_bases: Vec<Basis>,
    bob_bases: Vec<Basis>,
    alice_bits: Vec<Bit>,
    bob_bits: Vec<Bit>,
    last_carrier_at: usize,
    eve_records: Vec<EveRecord>,
}

/// Sends Alice's carriers through the channel and lets Bob measure.
#[allow(clippy::too_many_arguments)]
fn transmit_round(
    params: &ProtocolParams,
    round: usize,
    alice_bases: Vec<Basis>,
    bob_bases: Vec<Basis>,
    alice_bits: Vec<Bit>,
    eve: &mut Eve,
    transcript: &mut ClassicalTranscript,
    rng: &mut SimRng,
) -> Result<RawRound> {
    eve.validate()?;
    let records_before = eve.records().len();
    eve.begin_round(round, &alice_bases);
    let mut channel = QuantumChannel::new(params.noise_p)?;
    if eve.is_active() {
        channel = channel.with_tap(eve);
    }
    let mut bob_bits = Vec::with_capacity(alice_bits.len());
    for (i, (&basis, &bit)) in alice_bases.iter().zip(&alice_bits).enumerate() {
        let received = channel.transmit(i, make_state(basis, bit), rng);
        transcript.advance_clock(1);
        bob_bits.push(measure(&received, bob_bases[i], rng).0);
    }
    Ok(RawRound {
        round,
        alice_bases,
        bob_bases,
        alice_bits,
        bob_bits,
        last_carrier_at: transcript.clock(),
        eve_records: eve.records()[records_before..].to_vec(),
    })
}

/// Error check, abort decision and privacy amplification over the
/// positions in `sifted`.
fn finish_round(
    params: &ProtocolParams,
    raw: RawRound,
    sifted: Vec<usize>,
    eve: &EveStrategy,
    transcript: &mut ClassicalTranscript,
    log_from: usize,
    rng: &mut SimRng,
) -> Result<SessionTranscript> {
    transcript.set_round(raw.round);
    let a: Vec<Bit> = sifted.iter().map(|&i| raw.alice_bits[i]).collect();
    let b: Vec<Bit> = sifted.iter().map(|&i| raw.bob_bits[i]).collect();
    let sifted_qber = if a.is_empty() { 0.0 } else { qber(&a, &b)? };

    let check = error_check(&a, &b, params.check_fraction, transcript, rng)?;
    let aborted = check.qber_estimate > params.qber_abort_threshold;
    transcript.announce(
        Party::Alice,
        MessageKind::CheckOutcome,
        Payload::Verdict {
            aborted,
            qber_estimate: check.qber_estimate,
        },
    );

    let disclosed_indices: Vec<usize> = check.disclosed.iter().map(|&i| sifted[i]).collect();
    let key_indices: Vec<usize> = check.kept.iter().map(|&i| sifted[i]).collect();
    let (net_key, bob_net_key, residual_errors) = if aborted {
        (Vec::new(), Vec::new(), 0)
    } else {
        let seed: u64 = rng.random();
        transcript.announce(Party::Alice, MessageKind::HashSeed, Payload::Seed(seed));
        let residual = check.kept_a.iter().zip(&check.kept_b).filter(|(x, y)| x != y).count();
        (
            privacy_amplify(&check.kept_a, params.pa_compression, seed),
            privacy_amplify(&check.kept_b, params.pa_compression, seed),
            residual,
        )
    };

    Ok(SessionTranscript {
        scheme: params.scheme,
        round: raw.round,
        eve: eve.clone(),
        alice_bases: raw.alice_bases,
        bob_bases: raw.bob_bases,
        alice_bits: raw.alice_bits,
        bob_bits: raw.bob_bits,
        sifted_indices: sifted,
        disclosed_indices,
        key_indices: if aborted { Vec::new() } else { key_indices },
        qber_estimate: check.qber_estimate,
        sifted_qber,
        residual_errors,
        aborted,
        net_key,
        bob_net_key,
        classical: transcript.since(log_from),
        last_carrier_at: raw.last_carrier_at,
        eve_records: raw.eve_records,
    })
}

fn random_bits(m: usize, rng: &mut SimRng) -> Vec<Bit> {
    (0..m).map(|_| rng.random_range(0..2u8)).collect()
}

/// One-basis scheme: every carrier is encoded and measured on the shared
/// secret axis.
pub fn run_simple_scheme(
    params: &ProtocolParams,
    shared_axis: Basis,
    eve: &mut Eve,
    rng: &mut SimRng,
) -> Result<SessionTranscript> {
    let mut transcript = ClassicalTranscript::new();
    run_simple_round(params, shared_axis, 0, eve, &mut transcript, rng)
}

fn run_simple_round(
    params: &ProtocolParams,
    shared_axis: Basis,
    round: usize,
    eve: &mut Eve,
    transcript: &mut ClassicalTranscript,
    rng: &mut SimRng,
) -> Result<SessionTranscript> {
    params.validate()?;
    params.expect_scheme(Scheme::Simple)?;
    transcript.set_round(round);
    let bases = vec![shared_axis; params.m];
    let bits = random_bits(params.m, rng);
    let raw = transmit_round(params, round, bases.clone(), bases, bits, eve, transcript, rng)?;
    let all = (0..params.m).collect();
    let from = transcript.len();
    finish_round(params, raw, all, eve.strategy(), transcript, from, rng)
}

/// BB84: independent uniform Z/X choices on both sides, bases announced
/// once every carrier has arrived, then sifting.
pub fn run_bb84(params: &ProtocolParams, eve: &mut Eve, rng: &mut SimRng) -> Result<SessionTranscript> {
    let mut transcript = ClassicalTranscript::new();
    run_bb84_round(params, 0, eve, &mut transcript, rng)
}

fn run_bb84_round(
    params: &ProtocolParams,
    round: usize,
    eve: &mut Eve,
    transcript: &mut ClassicalTranscript,
    rng: &mut SimRng,
) -> Result<SessionTranscript> {
    params.validate()?;
    params.expect_scheme(Scheme::Bb84)?;
    transcript.set_round(round);
    let start = transcript.len();
    let m = params.m;
    let alice_bits = random_bits(m, rng);
    let alice_bases: Vec<Basis> = random_bits(m, rng).into_iter().map(Basis::from_bit).collect();
    let bob_bases: Vec<Basis> = random_bits(m, rng).into_iter().map(Basis::from_bit).collect();
    let raw = transmit_round(params, round, alice_bases, bob_bases, alice_bits, eve, transcript, rng)?;

    for (position, basis) in raw.bob_bases.iter().enumerate() {
        let bit = basis.as_bit().expect("bb84 uses Z/X");
        transcript.announce(Party::Bob, MessageKind::Basis, Payload::Basis { position, basis: bit });
    }
    let (sifted, _, _) = sift(&raw.alice_bases, &raw.bob_bases, &raw.alice_bits, &raw.bob_bits)?;
    transcript.announce(Party::Alice, MessageKind::SiftResult, Payload::Indices(sifted.clone()));
    finish_round(params, raw, sifted, eve.strategy(), transcript, start, rng)
}

/// Basis-sequence scheme: both sides use the shared sequence; no basis
/// information is ever announced and every position enters the key.
pub fn run_nopab(
    params: &ProtocolParams,
    bases: &mut BasisSequence,
    eve: &mut Eve,
    rng: &mut SimRng,
) -> Result<SessionTranscript> {
    let mut transcript = ClassicalTranscript::new();
    let raw = nopab_transmit(params, 0, bases, eve, &mut transcript, rng)?;
    let all = (0..params.m).collect();
    finish_round(params, raw, all, eve.strategy(), &mut transcript, 0, rng)
}

fn nopab_transmit(
    params: &ProtocolParams,
    round: usize,
    bases: &mut BasisSequence,
    eve: &mut Eve,
    transcript: &mut ClassicalTranscript,
    rng: &mut SimRng,
) -> Result<RawRound> {
    params.validate()?;
    params.expect_scheme(Scheme::Nopab)?;
    bases.ensure_usable()?;
    if bases.len() != params.m {
        return Err(QkdError::LengthMismatch {
            what: "basis sequence vs m",
            left: bases.len(),
            right: params.m,
        });
    }
    eve.validate()?;
    bases.record_use()?;
    transcript.set_round(round);
    let alice_bits = random_bits(params.m, rng);
    let seq = bases.bases();
    transmit_round(params, round, seq.clone(), seq, alice_bits, eve, transcript, rng)
}

/// Result of a multi-round batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expansion {
    pub sessions: Vec<SessionTranscript>,
    pub ledger: KeyLedger,
    /// The batch-wide public log, with carrier clock running across rounds.
    pub classical: ClassicalTranscript,
}

impl Expansion {
    pub fn aborted(&self) -> bool {
        self.sessions.iter().any(|s| s.aborted)
    }

    /// Concatenated net key of all completed rounds.
    pub fn net_key(&self) -> Vec<Bit> {
        self.sessions.iter().flat_map(|s| s.net_key.iter().copied()).collect()
    }

    /// Fresh basis sequence built from the reserved net-key bits, if any.
    pub fn reserved_sequence(&self) -> Option<BasisSequence> {
        let r = self.ledger.reserved_bits as usize;
        (r > 0).then(|| BasisSequence::new(self.net_key()[..r].to_vec()).ok()).flatten()
    }
}

/// Reuses one basis sequence for `params.rounds` rounds of nopab. Stops at
/// the first aborted round. With `delay_steps`, every carrier of the batch
/// is sent before any error check is posted.
pub fn expand_key(
    params: &ProtocolParams,
    bases: &mut BasisSequence,
    eve: &mut Eve,
    rng: &mut SimRng,
) -> Result<Expansion> {
    params.validate()?;
    params.expect_scheme(Scheme::Nopab)?;
    let mut transcript = ClassicalTranscript::new();
    let mut sessions = Vec::with_capacity(params.rounds);
    if params.delay_steps {
        let mut raws = Vec::with_capacity(params.rounds);
        for round in 0..params.rounds {
            raws.push(nopab_transmit(params, round, bases, eve, &mut transcript, rng)?);
        }
        for raw in raws {
            let all = (0..params.m).collect();
            let from = transcript.len();
            let s = finish_round(params, raw, all, eve.strategy(), &mut transcript, from, rng)?;
            let stop = s.aborted;
            sessions.push(s);
            if stop {
                break;
            }
        }
    } else {
        for round in 0..params.rounds {
            let raw = nopab_transmit(params, round, bases, eve, &mut transcript, rng)?;
            let all = (0..params.m).collect();
            let from = transcript.len();
            let s = finish_round(params, raw, all, eve.strategy(), &mut transcript, from, rng)?;
            let stop = s.aborted;
            sessions.push(s);
            if stop {
                break;
            }
        }
    }
    let ledger = KeyLedger::from_sessions(Scheme::Nopab, params.m as u64, &sessions, params.reserve_bits);
    Ok(Expansion {
        sessions,
        ledger,
        classical: transcript,
    })
}

/// `params.rounds` independent rounds of the one-basis or BB84 scheme,
/// accounted in the same ledger format as [`expand_key`]. Does not stop on
/// abort; each round is a fresh attempt.
pub fn run_rounds(
    params: &ProtocolParams,
    shared_axis: Basis,
    eve: &mut Eve,
    rng: &mut SimRng,
) -> Result<Expansion> {
    params.validate()?;
    let mut transcript = ClassicalTranscript::new();
    let mut sessions = Vec::with_capacity(params.rounds);
    for round in 0..params.rounds {
        let s = match params.scheme {
            Scheme::Simple => run_simple_round(params, shared_axis, round, eve, &mut transcript, rng)?,
            Scheme::Bb84 => run_bb84_round(params, round, eve, &mut transcript, rng)?,
            Scheme::Nopab => return Err(QkdError::param("scheme", "use expand_key for nopab")),
        };
        sessions.push(s);
    }
    let ledger = KeyLedger::from_sessions(params.scheme, 0, &sessions, params.reserve_bits);
    Ok(Expansion {
        sessions,
        ledger,
        classical: transcript,
    })
}

/// One-time-pad encrypt `message`, publish the ciphertext, and retire the
/// basis sequence that produced the key.
pub fn publish_ciphertext(
    key: &[Bit],
    message: &[Bit],
    bases: &mut BasisSequence,
    transcript: &mut ClassicalTranscript,
) -> Result<Vec<Bit>> {
    bases.ensure_usable()?;
    if key.len() < message.len() {
        return Err(QkdError::KeyTooShort {
            key: key.len(),
            message: message.len(),
        });
    }
    let ciphertext: Vec<Bit> = message.iter().zip(key).map(|(m, k)| m ^ k).collect();
    transcript.announce(Party::Alice, MessageKind::Ciphertext, Payload::Bits(ciphertext.clone()));
    bases.retire()?;
    Ok(ciphertext)
}

#[cfg(test)]
mod tests;
