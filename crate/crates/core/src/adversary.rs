//! Eavesdropper models.
//!
//! Eve is an intercept-resend adversary: she measures each carrier in a
//! basis chosen by her strategy, keeps a record of the outcome, and forwards
//! the post-measurement eigenstate. Attacks that entangle carriers with an
//! ancilla held in quantum memory are not modelled; for this protocol they
//! reduce to the same indistinguishable ensembles.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::analysis;
use crate::channel::Tap;
use crate::protocol::{run_nopab, BasisSequence, ProtocolParams, SessionTranscript};
use crate::quantum::{make_state, measure, outcome_prob, Basis, QubitState};
use crate::rng::SimRng;
use crate::{Bit, QkdError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EveStrategy {
    None,
    /// Measure every carrier along one fixed axis.
    InterceptFixed { basis: Basis },
    /// Measure along Z or X, chosen uniformly per carrier.
    InterceptRandomZx,
    /// Measure along the true encoding basis. Requires a compromise grant.
    InterceptTrueBasis,
    /// Measure along the bases of a guessed sequence, repeated cyclically.
    IndirectGuess {
        #[serde(with = "crate::bitstr")]
        guess: Vec<Bit>,
    },
}

impl EveStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            EveStrategy::None => "none",
            EveStrategy::InterceptFixed { .. } => "intercept_fixed",
            EveStrategy::InterceptRandomZx => "intercept_random_zx",
            EveStrategy::InterceptTrueBasis => "intercept_true_basis",
            EveStrategy::IndirectGuess { .. } => "indirect_guess",
        }
    }

    pub fn is_active(&self) -> bool {
        !matches!(self, EveStrategy::None)
    }
}

/// One intercepted carrier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EveRecord {
    pub round: usize,
    pub position: usize,
    pub meas_basis: Basis,
    pub outcome: Bit,
}

/// Adversary state carried across the rounds of a batch.
#[derive(Debug, Clone)]
pub struct Eve {
    strategy: EveStrategy,
    record: bool,
    granted: bool,
    revealed: Vec<Basis>,
    round: usize,
    records: Vec<EveRecord>,
}

impl Eve {
    pub fn new(strategy: EveStrategy) -> Self {
        Eve {
            strategy,
            record: true,
            granted: false,
            revealed: Vec::new(),
            round: 0,
            records: Vec::new(),
        }
    }

    pub fn none() -> Self {
        Eve::new(EveStrategy::None)
    }

    /// Compromise scenario: Eve is told the true encoding bases.
    pub fn with_basis_knowledge(mut self) -> Self {
        self.granted = true;
        self
    }

    /// Do not keep records (attack still disturbs carriers).
    pub fn without_records(mut self) -> Self {
        self.record = false;
        self
    }

    pub fn strategy(&self) -> &EveStrategy {
        &self.strategy
    }

    pub fn is_active(&self) -> bool {
        self.strategy.is_active()
    }

    pub fn has_basis_knowledge(&self) -> bool {
        self.granted
    }

    pub fn records(&self) -> &[EveRecord] {
        &self.records
    }

    pub fn take_records(&mut self) -> Vec<EveRecord> {
        std::mem::take(&mut self.records)
    }

    pub fn validate(&self) -> Result<()> {
        match &self.strategy {
            EveStrategy::InterceptTrueBasis if !self.granted => {
                Err(QkdError::StrategyNotGranted("intercept_true_basis"))
            }
            EveStrategy::IndirectGuess { guess } if guess.is_empty() => Err(QkdError::Empty("guess")),
            _ => Ok(()),
        }
    }

    /// Called by the session before carriers are sent. `true_bases` is only
    /// retained when Eve has been granted basis knowledge.
    pub(crate) fn begin_round(&mut self, round: usize, true_bases: &[Basis]) {
        self.round = round;
        self.revealed.clear();
        if self.granted {
            self.revealed.extend_from_slice(true_bases);
        }
    }

    fn choose_basis(&self, position: usize, rng: &mut SimRng) -> Basis {
        match &self.strategy {
            EveStrategy::None => unreachable!("inactive Eve is never attached"),
            EveStrategy::InterceptFixed { basis } => *basis,
            EveStrategy::InterceptRandomZx => Basis::from_bit(rng.random_range(0..2u8)),
            EveStrategy::InterceptTrueBasis => self.revealed[position],
            EveStrategy::IndirectGuess { guess } => Basis::from_bit(guess[position % guess.len()]),
        }
    }
}

impl Tap for Eve {
    fn intercept(&mut self, position: usize, carrier: QubitState, rng: &mut SimRng) -> QubitState {
        let basis = self.choose_basis(position, rng);
        let (resent, outcome) = tap_intercept_resend(&carrier, basis, rng);
        if self.record {
            self.records.push(EveRecord {
                round: self.round,
                position,
                meas_basis: basis,
                outcome,
            });
        }
        resent
    }
}

/// Measure `carrier` along `meas_basis` and resend the collapsed state.
pub fn tap_intercept_resend<R: Rng + ?Sized>(
    carrier: &QubitState,
    meas_basis: Basis,
    rng: &mut R,
) -> (QubitState, Bit) {
    let (outcome, post) = measure(carrier, meas_basis, rng);
    (post, outcome)
}

/// All records Eve holds for one position of the reused basis sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionSet {
    pub position: usize,
    pub records: Vec<EveRecord>,
}

/// Regroup `rounds × m` records by position, ascending round order inside
/// each set.
pub fn rearrange_records(records: &[EveRecord], m: usize, rounds: usize) -> Result<Vec<PositionSet>> {
    let incomplete = || QkdError::IncompleteRounds { m, rounds };
    if records.len() != m * rounds {
        return Err(incomplete());
    }
    let mut slots: Vec<Vec<Option<EveRecord>>> = vec![vec![None; rounds]; m];
    for rec in records {
        let slot = slots
            .get_mut(rec.position)
            .and_then(|s| s.get_mut(rec.round))
            .ok_or_else(incomplete)?;
        if slot.replace(*rec).is_some() {
            return Err(incomplete());
        }
    }
    Ok(slots
        .into_iter()
        .enumerate()
        .map(|(position, s)| PositionSet {
            position,
            records: s.into_iter().map(|r| r.expect("all slots filled")).collect(),
        })
        .collect())
}

/// `P(outcome | encoding basis)` with Alice's bit uniform on {0, 1}.
pub fn record_likelihood(rec: &EveRecord, encoding: Basis) -> f64 {
    (0..2u8)
        .map(|bit| 0.5 * outcome_prob(&make_state(encoding, bit), rec.meas_basis, rec.outcome))
        .sum()
}

/// Posterior probability that a position is Z-encoded given Eve's records,
/// with Alice's data bits uniform and independent across rounds.
pub fn infer_basis(set: &PositionSet, prior_z: f64) -> f64 {
    if prior_z <= 0.0 || prior_z >= 1.0 {
        return prior_z.clamp(0.0, 1.0);
    }
    // Log-likelihood ratio ln L(X) - ln L(Z); products of ½ underflow fast.
    let llr: f64 = set
        .records
        .iter()
        .map(|r| record_likelihood(r, Basis::X).ln() - record_likelihood(r, Basis::Z).ln())
        .sum();
    if llr.is_nan() {
        return prior_z;
    }
    prior_z / (prior_z + (1.0 - prior_z) * llr.exp())
}

/// Posterior that the basis was Z when Eve also knows the encoded bit.
pub fn bayes_update_with_plaintext(rec: &EveRecord, known_bit: Bit, prior_z: f64) -> f64 {
    let lz = outcome_prob(&make_state(Basis::Z, known_bit), rec.meas_basis, rec.outcome);
    let lx = outcome_prob(&make_state(Basis::X, known_bit), rec.meas_basis, rec.outcome);
    let evidence = prior_z * lz + (1.0 - prior_z) * lx;
    if evidence <= 0.0 {
        return prior_z;
    }
    prior_z * lz / evidence
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnownBasisOutcome {
    #[serde(with = "crate::bitstr")]
    pub eve_key: Vec<Bit>,
    pub qber_induced: f64,
    pub agreement: f64,
}

/// Eve's raw key from a session run with a compromised basis sequence.
pub fn known_basis_attack(session: &SessionTranscript) -> Result<KnownBasisOutcome> {
    if session.eve != EveStrategy::InterceptTrueBasis {
        return Err(QkdError::StrategyNotGranted("intercept_true_basis"));
    }
    let m = session.alice_bits.len();
    let mut eve_key = vec![0u8; m];
    let mut seen = vec![false; m];
    for rec in &session.eve_records {
        eve_key[rec.position] = rec.outcome;
        seen[rec.position] = true;
    }
    if seen.iter().any(|s| !s) {
        return Err(QkdError::IncompleteRounds { m, rounds: 1 });
    }
    let agreement = 1.0 - analysis::qber(&eve_key, &session.alice_bits)?;
    Ok(KnownBasisOutcome {
        eve_key,
        qber_induced: session.sifted_qber,
        agreement,
    })
}

/// Feedback Eve observes after trying a guessed basis sequence.
pub trait AbortOracle {
    /// `Some(true)` if Alice and Bob visibly discarded the data, `Some(false)`
    /// if they kept it, `None` if the verdict is withheld.
    fn probe(&mut self, guess: &[Bit], rng: &mut SimRng) -> Option<bool>;
}

/// Idealised oracle: any wrong position is detected.
pub struct IdealOracle<'a> {
    truth: &'a [Bit],
    visible: bool,
}

impl<'a> IdealOracle<'a> {
    pub fn new(truth: &'a [Bit], delay_steps: bool) -> Self {
        IdealOracle {
            truth,
            visible: delayed_steps_countermeasure(delay_steps),
        }
    }
}

impl AbortOracle for IdealOracle<'_> {
    fn probe(&mut self, guess: &[Bit], _: &mut SimRng) -> Option<bool> {
        self.visible.then(|| guess != self.truth)
    }
}

/// Oracle backed by real sessions: Eve attacks with her guess and watches
/// whether the error check aborts any of `params.rounds` rounds.
pub struct SessionOracle {
    params: ProtocolParams,
    bases: BasisSequence,
}

impl SessionOracle {
    pub fn new(params: ProtocolParams, bases: BasisSequence) -> Self {
        SessionOracle { params, bases }
    }
}

impl AbortOracle for SessionOracle {
    fn probe(&mut self, guess: &[Bit], rng: &mut SimRng) -> Option<bool> {
        if self.params.delay_steps {
            return None;
        }
        let mut eve = Eve::new(EveStrategy::IndirectGuess { guess: guess.to_vec() }).without_records();
        let mut bases = self.bases.clone();
        for _ in 0..self.params.rounds {
            match run_nopab(&self.params, &mut bases, &mut eve, rng) {
                Ok(s) if s.aborted => return Some(true),
                Ok(_) => {}
                Err(_) => return Some(true),
            }
        }
        Some(false)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AttackTrials {
    /// The guess at this (1-based) trial was accepted.
    Found(u64),
    /// No success within the trial budget.
    Censored(u64),
}

impl AttackTrials {
    pub fn trials(&self) -> u64 {
        match *self {
            AttackTrials::Found(t) | AttackTrials::Censored(t) => t,
        }
    }

    pub fn succeeded(&self) -> bool {
        matches!(self, AttackTrials::Found(_))
    }
}

/// Eve guesses uniformly random sequences (with replacement) until the
/// oracle stops reporting an abort, or `max_trials` is reached. A withheld
/// verdict gives her nothing to stop on.
pub fn indirect_attack_with_oracle<O: AbortOracle>(
    n: usize,
    oracle: &mut O,
    guesser: &mut SimRng,
    max_trials: u64,
) -> AttackTrials {
    let mut guess = vec![0u8; n];
    for t in 1..=max_trials {
        guess.iter_mut().for_each(|g| *g = guesser.random_range(0..2u8));
        if oracle.probe(&guess, guesser) == Some(false) {
            return AttackTrials::Found(t);
        }
    }
    AttackTrials::Censored(max_trials)
}

/// Indirect attack against an idealised abort signal.
pub fn indirect_attack_trials(true_sequence: &[Bit], guesser: &mut SimRng, max_trials: u64) -> AttackTrials {
    let mut oracle = IdealOracle::new(true_sequence, false);
    indirect_attack_with_oracle(true_sequence.len(), &mut oracle, guesser, max_trials)
}

/// Whether Eve gets a per-round abort signal. Delaying the error check and
/// its verdict until all carriers of the batch have arrived removes it.
pub fn delayed_steps_countermeasure(delay_steps: bool) -> bool {
    !delay_steps
}

/// Under the countermeasure Eve commits to one guess per batch before any
/// verdict exists. Returns whether that single guess was right.
pub fn blind_batch_guess(true_sequence: &[Bit], guesser: &mut SimRng) -> bool {
    true_sequence.iter().all(|&b| guesser.random_range(0..2u8) == b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub prior_z: f64,
    pub positions: usize,
    pub min: f64,
    pub max: f64,
    pub max_abs_shift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub strategy: String,
    pub qber: f64,
    pub eve_bit_agreement: f64,
    pub mi_estimate_bits: f64,
    pub posterior_summary: Option<PosteriorSummary>,
}

/// Summarises an attack over the sessions of one batch. The posterior
/// summary is only produced for nopab batches sharing one basis sequence.
pub fn attack_report(sessions: &[SessionTranscript], prior_z: f64) -> AttackReport {
    let strategy = sessions
        .first()
        .map(|s| s.eve.name())
        .unwrap_or("none")
        .to_string();
    let mut agree = 0usize;
    let mut tapped = 0usize;
    let mut joint = Vec::new();
    let mut qber_sum = 0.0;
    for s in sessions {
        qber_sum += s.sifted_qber;
        for r in &s.eve_records {
            tapped += 1;
            agree += usize::from(r.outcome == s.alice_bits[r.position]);
            if let Some(b) = s.alice_bases[r.position].as_bit() {
                joint.push((r.outcome, b));
            }
        }
    }
    let mi = if joint.is_empty() {
        0.0
    } else {
        analysis::mutual_information(&joint)
    };
    let posterior_summary = posterior_summary(sessions, prior_z);
    AttackReport {
        strategy,
        qber: if sessions.is_empty() { 0.0 } else { qber_sum / sessions.len() as f64 },
        eve_bit_agreement: if tapped == 0 { 0.0 } else { agree as f64 / tapped as f64 },
        mi_estimate_bits: mi,
        posterior_summary,
    }
}

fn posterior_summary(sessions: &[SessionTranscript], prior_z: f64) -> Option<PosteriorSummary> {
    let first = sessions.first()?;
    if first.scheme != crate::protocol::Scheme::Nopab || first.eve_records.is_empty() {
        return None;
    }
    let m = first.alice_bits.len();
    let records: Vec<EveRecord> = sessions.iter().flat_map(|s| s.eve_records.iter().copied()).collect();
    let sets = rearrange_records(&records, m, sessions.len()).ok()?;
    let posts: Vec<f64> = sets.iter().map(|s| infer_basis(s, prior_z)).collect();
    Some(PosteriorSummary {
        prior_z,
        positions: posts.len(),
        min: posts.iter().copied().fold(f64::INFINITY, f64::min),
        max: posts.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        max_abs_shift: posts.iter().map(|p| (p - prior_z).abs()).fold(0.0, f64::max),
    })
}
