//! Seeded batches of sessions: configuration, execution and CSV output.
//!
//! Repetition `r` draws every random number from
//! `rng::derived(config.seed, r)`, so results do not depend on how many
//! workers run the batch.

use serde::{Deserialize, Serialize};

use crate::adversary::{attack_report, AttackReport, Eve, EveStrategy};
use crate::analysis::{accounting_report, AccountingRow};
use crate::protocol::{expand_key, run_rounds, BasisSequence, Expansion, ProtocolParams, Scheme};
use crate::quantum::Basis;
use crate::{par, rng, QkdError, Result};

/// Header of the batch summary CSV.
pub const CSV_HEADER: &str = "scheme,eve,m,N,qber,sifted_fraction,net_key_bits,aborted";

/// One scenario, as read from a config file. Missing fields take defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scheme: Scheme,
    pub m: usize,
    pub rounds: usize,
    pub eve: EveStrategy,
    /// Compromise scenario: Eve is told the encoding bases.
    pub eve_knows_bases: bool,
    pub noise_p: f64,
    pub check_fraction: f64,
    pub qber_abort_threshold: f64,
    /// Defaults to 0.5 under attack and 0.9 otherwise.
    pub pa_compression: Option<f64>,
    /// Axis of the one-basis scheme, radians from z.
    pub shared_axis: f64,
    pub delay_steps: bool,
    pub reserve_bits: usize,
    pub seed: u64,
    pub repetitions: usize,
    pub output: OutputPaths,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputPaths {
    pub csv: Option<String>,
    pub transcript: Option<String>,
    pub report: Option<String>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            scheme: Scheme::Nopab,
            m: 1000,
            rounds: 1,
            eve: EveStrategy::None,
            eve_knows_bases: false,
            noise_p: 0.0,
            check_fraction: crate::protocol::DEFAULT_CHECK_FRACTION,
            qber_abort_threshold: crate::protocol::DEFAULT_ABORT_THRESHOLD,
            pa_compression: None,
            shared_axis: 0.0,
            delay_steps: false,
            reserve_bits: 0,
            seed: 0,
            repetitions: 1,
            output: OutputPaths::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn params(&self) -> ProtocolParams {
        ProtocolParams {
            scheme: self.scheme,
            m: self.m,
            rounds: self.rounds,
            check_fraction: self.check_fraction,
            qber_abort_threshold: self.qber_abort_threshold,
            pa_compression: self
                .pa_compression
                .unwrap_or_else(|| ProtocolParams::default_pa_compression(self.eve.is_active())),
            noise_p: self.noise_p,
            delay_steps: self.delay_steps,
            reserve_bits: self.reserve_bits,
            seed: self.seed,
        }
    }

    /// Checks every field before anything runs; errors name the field.
    pub fn validate(&self) -> Result<()> {
        self.params().validate()?;
        if self.repetitions == 0 {
            return Err(QkdError::param("repetitions", "must be at least 1"));
        }
        if !self.shared_axis.is_finite() {
            return Err(QkdError::param("shared_axis", "must be finite"));
        }
        self.eve()
            .validate().map_err(|e| QkdError::param("eve", e.to_string()))
    }

    fn eve(&self) -> Eve {
        let eve = Eve::new(self.eve.clone());
        if self.eve_knows_bases {
            eve.with_basis_knowledge()
        } else {
            eve
        }
    }
}

/// Outcome of one repetition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Repetition {
    pub rep: usize,
    pub seed: u64,
    pub expansion: Expansion,
}

impl Repetition {
    fn mean_over_sessions(&self, f: impl Fn(&crate::protocol::SessionTranscript) -> f64) -> f64 {
        let s = &self.expansion.sessions;
        if s.is_empty() {
            0.0
        } else {
            s.iter().map(f).sum::<f64>() / s.len() as f64
        }
    }

    /// Mean mismatch rate over sifted positions across the rounds run.
    pub fn qber(&self) -> f64 {
        self.mean_over_sessions(|s| s.sifted_qber)
    }

    pub fn sifted_fraction(&self) -> f64 {
        self.mean_over_sessions(|s| s.sifted_fraction())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchResult {
    pub config: ScenarioConfig,
    pub repetitions: Vec<Repetition>,
}

/// Runs `config.repetitions` independent repetitions, in parallel when the
/// `parallel` feature is on, merged in repetition order.
pub fn run_batch(config: &ScenarioConfig) -> Result<BatchResult> {
    config.validate()?;
    let params = config.params();
    let axis = Basis::new(config.shared_axis)?;
    let reps = par::map_indexed(config.repetitions, |r| -> Result<Repetition> {
        let seed = rng::derive_seed(config.seed, r as u64);
        let mut rng = rng::seeded(seed);
        let mut eve = config.eve();
        let expansion = match config.scheme {
            Scheme::Nopab => {
                let mut bases = BasisSequence::random(config.m, &mut rng)?;
                expand_key(&params, &mut bases, &mut eve, &mut rng)?
            }
            _ => run_rounds(&params, axis, &mut eve, &mut rng)?,
        };
        Ok(Repetition { rep: r, seed, expansion })
    });
    Ok(BatchResult {
        config: config.clone(),
        repetitions: reps.into_iter().collect::<Result<_>>()?,
    })
}

impl BatchResult {
    /// Summary CSV, one row per repetition. Byte-identical for identical
    /// config and seed.
    pub fn csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for rep in &self.repetitions {
            out.push_str(&format!(
                "{},{},{},{},{:.6},{:.6},{},{}\n",
                self.config.scheme.name(),
                self.config.eve.name(),
                self.config.m,
                self.config.rounds,
                rep.qber(),
                rep.sifted_fraction(),
                rep.expansion.ledger.net_key_bits,
                rep.expansion.aborted()
            ));
        }
        out
    }

    /// Public transcript of every repetition, one JSON object per line.
    pub fn transcript_jsonl(&self) -> String {
        let mut out = String::new();
        for rep in &self.repetitions {
            for entry in rep.expansion.classical.entries() {
                let line = serde_json::json!({ "rep": rep.rep, "entry": entry });
                out.push_str(&line.to_string());
                out.push('\n');
            }
        }
        out
    }

    pub fn accounting(&self) -> Vec<AccountingRow> {
        let ledgers: Vec<_> = self.repetitions.iter().map(|r| r.expansion.ledger.clone()).collect();
        accounting_report(&ledgers).unwrap_or_default()
    }

    /// Attack report pooled over repetitions (posterior summary from the
    /// first repetition, whose rounds share one basis sequence).
    pub fn attack(&self) -> Option<AttackReport> {
        if !self.config.eve.is_active() {
            return None;
        }
        let all: Vec<_> = self
            .repetitions
            .iter()
            .flat_map(|r| r.expansion.sessions.iter().cloned())
            .collect();
        let mut report = attack_report(&all, 0.5);
        report.posterior_summary = self
            .repetitions
            .first()
            .and_then(|r| attack_report(&r.expansion.sessions, 0.5).posterior_summary);
        Some(report)
    }

    pub fn mean_qber(&self) -> f64 {
        let n = self.repetitions.len().max(1) as f64;
        self.repetitions.iter().map(Repetition::qber).sum::<f64>() / n
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_like_defaults_and_validation() {
        let c = ScenarioConfig::default();
        assert!(c.validate().is_ok());
        let bad = ScenarioConfig { check_fraction: 1.5, ..Default::default() };
        match bad.validate() {
            Err(QkdError::InvalidParam { field, .. }) => assert_eq!(field, "check_fraction"),
            other => panic!("{other:?}"),
        }
        let bad = ScenarioConfig { repetitions: 0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = ScenarioConfig { eve: EveStrategy::InterceptTrueBasis, ..Default::default() };
        assert!(matches!(bad.validate(), Err(QkdError::InvalidParam { field: "eve", .. })));
    }

    #[test]
    fn attack_changes_default_compression() {
        let c = ScenarioConfig { eve: EveStrategy::InterceptRandomZx, ..Default::default() };
        assert_eq!(c.params().pa_compression, 0.5);
        assert_eq!(ScenarioConfig::default().params().pa_compression, 0.9);
    }

    #[test]
    fn csv_shape_and_determinism() {
        let c = ScenarioConfig { m: 500, rounds: 2, repetitions: 3, seed: 9, ..Default::default() };
        let a = run_batch(&c).unwrap().csv();
        let b = run_batch(&c).unwrap().csv();
        assert_eq!(a, b);
        let lines: Vec<&str> = a.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("nopab,none,500,2,0.000000,1.000000,"));
    }

    #[test]
    fn simple_scheme_batch_uses_axis() {
        let c = ScenarioConfig {
            scheme: Scheme::Simple,
            m: 400,
            shared_axis: 0.3,
            eve: EveStrategy::InterceptFixed { basis: Basis::new(0.3).unwrap() },
            ..Default::default()
        };
        let r = run_batch(&c).unwrap();
        assert_eq!(r.mean_qber(), 0.0);
        assert_eq!(r.attack().unwrap().eve_bit_agreement, 1.0);
    }
}
