//! Statistics over simulated data.

use std::collections::BTreeMap;
use std::f64::consts::SQRT_2;

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::protocol::{KeyLedger, Scheme};
use crate::quantum::{make_bell_pair, make_state, measure, measure_pair, Basis, QubitState, Site};
use crate::rng::SimRng;
use crate::{Bit, QkdError, Result};

/// Hamming distance over length.
pub fn qber(a_bits: &[Bit], b_bits: &[Bit]) -> Result<f64> {
    if a_bits.len() != b_bits.len() {
        return Err(QkdError::LengthMismatch {
            what: "qber inputs",
            left: a_bits.len(),
            right: b_bits.len(),
        });
    }
    if a_bits.is_empty() {
        return Err(QkdError::Empty("qber input"));
    }
    let errors = a_bits.iter().zip(b_bits).filter(|(a, b)| a != b).count();
    Ok(errors as f64 / a_bits.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub test_name: String,
    /// The z statistic.
    pub statistic: f64,
    pub p_value: f64,
    pub alpha: f64,
    pub reject: bool,
    /// Samples per arm.
    pub n_samples: usize,
    pub proportion_a: f64,
    pub proportion_b: f64,
}

impl TestReport {
    /// One-line summary with the p-value to six significant digits.
    pub fn summary(&self) -> String {
        format!(
            "{}: p̂_a={:.6} p̂_b={:.6} z={:.4} p={} {}",
            self.test_name,
            self.proportion_a,
            self.proportion_b,
            self.statistic,
            format_sig6(self.p_value),
            if self.reject { "REJECT" } else { "accept" }
        )
    }
}

/// Six significant digits in scientific notation.
pub fn format_sig6(x: f64) -> String {
    format!("{x:.5e}")
}

/// Pooled two-sided two-proportion z-test. `reject ⇔ p_value < alpha`.
pub fn two_proportion_test(
    test_name: &str,
    successes_a: usize,
    n_a: usize,
    successes_b: usize,
    n_b: usize,
    alpha: f64,
) -> TestReport {
    let pa = successes_a as f64 / n_a as f64;
    let pb = successes_b as f64 / n_b as f64;
    let pooled = (successes_a + successes_b) as f64 / (n_a + n_b) as f64;
    let se = (pooled * (1.0 - pooled) * (1.0 / n_a as f64 + 1.0 / n_b as f64)).sqrt();
    let (statistic, p_value) = if se > 0.0 {
        let z = (pa - pb) / se;
        (z, erfc(z.abs() / SQRT_2).clamp(0.0, 1.0))
    } else if pa == pb {
        (0.0, 1.0)
    } else {
        (f64::INFINITY.copysign(pa - pb), 0.0)
    };
    TestReport {
        test_name: test_name.to_string(),
        statistic,
        p_value,
        alpha,
        reject: p_value < alpha,
        n_samples: n_a.min(n_b),
        proportion_a: pa,
        proportion_b: pb,
    }
}

fn check_n(n: usize) -> Result<()> {
    if n < 100 {
        return Err(QkdError::param("n", "at least 100 samples per arm"));
    }
    Ok(())
}

/// Outcome-0 count of `n` draws from `source` measured along `meas`.
fn count_zeros(
    n: usize,
    meas: Basis,
    rng: &mut SimRng,
    mut source: impl FnMut(&mut SimRng) -> QubitState,
) -> usize {
    (0..n)
        .filter(|_| {
            let q = source(rng);
            measure(&q, meas, rng).0 == 0
        })
        .count()
}

/// Uniform-bit carrier on `basis`.
fn ensemble(basis: Basis) -> impl FnMut(&mut SimRng) -> QubitState {
    move |rng| make_state(basis, rng.random_range(0..2u8))
}

/// Z-encoded vs X-encoded carriers (uniform data bits), all measured along
/// `meas`, compared with a two-proportion test on outcome 0.
pub fn distinguish_ensembles(n: usize, meas: Basis, alpha: f64, rng: &mut SimRng) -> Result<TestReport> {
    check_n(n)?;
    let za = count_zeros(n, meas, rng, ensemble(Basis::Z));
    let zb = count_zeros(n, meas, rng, ensemble(Basis::X));
    Ok(two_proportion_test(
        &format!("ensembles Z vs X, meas θ={:.4}", meas.theta()),
        za,
        n,
        zb,
        n,
        alpha,
    ))
}

/// Power check: the Z ensemble against a pure |z+⟩ stream, measured in Z.
pub fn distinguish_control(n: usize, alpha: f64, rng: &mut SimRng) -> Result<TestReport> {
    check_n(n)?;
    let za = count_zeros(n, Basis::Z, rng, ensemble(Basis::Z));
    let zb = count_zeros(n, Basis::Z, rng, |_| make_state(Basis::Z, 0));
    Ok(two_proportion_test("control: Z ensemble vs |z+>", za, n, zb, n, alpha))
}

/// Plug-in mutual information, in bits, of the empirical joint distribution
/// of `(x, y)` pairs. No bias correction is applied; the plug-in bias is of
/// order `(|X|−1)(|Y|−1) / (2 n ln 2)`.
pub fn mutual_information(records: &[(u8, u8)]) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    let n = records.len() as f64;
    let mut joint: BTreeMap<(u8, u8), usize> = BTreeMap::new();
    let mut px: BTreeMap<u8, usize> = BTreeMap::new();
    let mut py: BTreeMap<u8, usize> = BTreeMap::new();
    for &(x, y) in records {
        *joint.entry((x, y)).or_default() += 1;
        *px.entry(x).or_default() += 1;
        *py.entry(y).or_default() += 1;
    }
    let mi_nats: f64 = joint
        .iter()
        .map(|(&(x, y), &c)| {
            let pxy = c as f64 / n;
            let indep = (px[&x] as f64 / n) * (py[&y] as f64 / n);
            pxy * (pxy / indep).ln()
        })
        .sum();
    (mi_nats / std::f64::consts::LN_2).max(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccountingRow {
    pub scheme: Scheme,
    pub batches: usize,
    pub secret_consumed: u64,
    pub raw: u64,
    pub sifted: u64,
    pub disclosed: u64,
    pub net: u64,
    pub residual_errors: u64,
    pub discard_fraction: f64,
    pub net_per_secret_bit: Option<f64>,
}

/// Per-scheme cumulative accounting, in `Scheme` order.
pub fn accounting_report(ledgers: &[KeyLedger]) -> Result<Vec<AccountingRow>> {
    if ledgers.is_empty() {
        return Err(QkdError::Empty("ledger list"));
    }
    let mut by_scheme: BTreeMap<u8, AccountingRow> = BTreeMap::new();
    for l in ledgers {
        let key = match l.scheme {
            Scheme::Simple => 0,
            Scheme::Bb84 => 1,
            Scheme::Nopab => 2,
        };
        let row = by_scheme.entry(key).or_insert(AccountingRow {
            scheme: l.scheme,
            batches: 0,
            secret_consumed: 0,
            raw: 0,
            sifted: 0,
            disclosed: 0,
            net: 0,
            residual_errors: 0,
            discard_fraction: 0.0,
            net_per_secret_bit: None,
        });
        row.batches += 1;
        row.secret_consumed += l.secret_consumed;
        row.raw += l.raw_produced;
        row.sifted += l.sifted;
        row.disclosed += l.disclosed;
        row.net += l.net_key_bits;
        row.residual_errors += l.residual_errors;
    }
    Ok(by_scheme
        .into_values()
        .map(|mut row| {
            row.discard_fraction = if row.raw == 0 {
                0.0
            } else {
                1.0 - row.sifted as f64 / row.raw as f64
            };
            row.net_per_secret_bit =
                (row.secret_consumed > 0).then(|| row.net as f64 / row.secret_consumed as f64);
            row
        })
        .collect())
}

/// CSV rendering of [`accounting_report`] rows.
pub fn accounting_csv(rows: &[AccountingRow]) -> String {
    let mut out = String::from("scheme,batches,secret_consumed,raw,sifted,disclosed,net,residual_errors,discard_fraction,net_per_secret_bit\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{:.6},{}\n",
            r.scheme.name(),
            r.batches,
            r.secret_consumed,
            r.raw,
            r.sifted,
            r.disclosed,
            r.net,
            r.residual_errors,
            r.discard_fraction,
            r.net_per_secret_bit.map(|v| format!("{v:.6}")).unwrap_or_default()
        ));
    }
    out
}

/// Site-2 Z outcomes after site 1 measured in Z (arm a) or X (arm b).
pub fn nosignaling_report(n: usize, alpha: f64, rng: &mut SimRng) -> Result<TestReport> {
    check_n(n)?;
    let pair = make_bell_pair();
    let arm = |basis: Basis, rng: &mut SimRng| {
        (0..n)
            .filter(|_| {
                let (_, rest) = measure_pair(&pair, Site::One, basis, rng);
                measure(&rest, Basis::Z, rng).0 == 0
            })
            .count()
    };
    let za = arm(Basis::Z, rng);
    let zb = arm(Basis::X, rng);
    Ok(two_proportion_test("no-signaling: site 1 Z vs X", za, n, zb, n, alpha))
}

/// Power check with a fake channel that copies the site-1 basis choice into
/// the site-2 outcome.
pub fn nosignaling_control(n: usize, alpha: f64, rng: &mut SimRng) -> Result<TestReport> {
    check_n(n)?;
    let pair = make_bell_pair();
    let arm = |basis: Basis, rng: &mut SimRng| {
        (0..n)
            .filter(|_| {
                let _ = measure_pair(&pair, Site::One, basis, rng);
                basis.as_bit() == Some(0)
            })
            .count()
    };
    let za = arm(Basis::Z, rng);
    let zb = arm(Basis::X, rng);
    Ok(two_proportion_test("control: signaling channel", za, n, zb, n, alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use proptest::{prop_assert, prop_assert_eq, proptest};
    use std::f64::consts::FRAC_PI_3;

    #[test]
    fn qber_examples() {
        assert_eq!(qber(&[1, 0, 1], &[1, 0, 1]).unwrap(), 0.0);
        assert_eq!(qber(&[1, 0, 1], &[0, 1, 0]).unwrap(), 1.0);
        assert_eq!(qber(&[1, 0, 1, 1, 0], &[1, 0, 0, 1, 1]).unwrap(), 0.4);
        assert!(qber(&[1], &[1, 0]).is_err());
        assert!(qber(&[], &[]).is_err());
    }

    #[test]
    fn z_test_matches_hand_computation() {
        // p̂a = .55, p̂b = .45, pooled .5, se = √(.25·2/100) = .070711; z = 1.41421.
        let r = two_proportion_test("t", 55, 100, 45, 100, 0.05);
        assert!((r.statistic - 2f64.sqrt()).abs() < 1e-9);
        // Two-sided p for |z| = √2 is erfc(1) = 0.157299.
        assert!((r.p_value - 0.157_299_207_050_285).abs() < 1e-9);
        assert!(!r.reject);
        let degenerate = two_proportion_test("d", 0, 100, 0, 100, 0.01);
        assert_eq!((degenerate.p_value, degenerate.reject), (1.0, false));
        let split = two_proportion_test("s", 100, 100, 0, 100, 0.01);
        assert!(split.reject);
    }

    #[test]
    fn ensembles_are_indistinguishable() {
        for (meas, seed) in [(Basis::Z, 1), (Basis::new(FRAC_PI_3).unwrap(), 2)] {
            let r = distinguish_ensembles(100_000, meas, 0.01, &mut seeded(seed)).unwrap();
            let three_sigma = 3.0 * (0.25 / 100_000f64).sqrt();
            assert!((r.proportion_a - 0.5).abs() < three_sigma);
            assert!((r.proportion_b - 0.5).abs() < three_sigma);
            assert!(r.p_value >= 0.0 && r.p_value <= 1.0);
        }
        assert!(distinguish_ensembles(99, Basis::Z, 0.01, &mut seeded(0)).is_err());
    }

    #[test]
    fn control_is_rejected() {
        let r = distinguish_control(100_000, 0.01, &mut seeded(3)).unwrap();
        assert!(r.reject);
        assert_eq!(r.proportion_b, 1.0);
    }

    #[test]
    fn mutual_information_examples() {
        let coupled: Vec<(u8, u8)> = (0..2000).map(|i| ((i % 2) as u8, (i % 2) as u8)).collect();
        assert!((mutual_information(&coupled) - 1.0).abs() < 1e-12);
        let constant_basis: Vec<(u8, u8)> = (0..2000).map(|i| ((i % 2) as u8, 0)).collect();
        assert_eq!(mutual_information(&constant_basis), 0.0);
        let mut rng = seeded(4);
        let indep: Vec<(u8, u8)> = (0..100_000).map(|_| (rng.random_range(0..2), rng.random_range(0..2))).collect();
        assert!(mutual_information(&indep) <= 0.01);
    }

    #[test]
    fn nosignaling_holds_and_control_rejects() {
        let r = nosignaling_report(100, 0.01, &mut seeded(5)).unwrap();
        assert!((0.0..=1.0).contains(&r.p_value));
        let c = nosignaling_control(1000, 0.01, &mut seeded(6)).unwrap();
        assert!(c.reject);
    }

    #[test]
    fn sig6_format() {
        assert_eq!(format_sig6(0.123456789), "1.23457e-1");
    }

    proptest! {
        #[test]
        fn qber_symmetric(pairs in proptest::collection::vec((0u8..2, 0u8..2), 1..200)) {
            let (a, b): (Vec<u8>, Vec<u8>) = pairs.into_iter().unzip();
            prop_assert_eq!(qber(&a, &b).unwrap(), qber(&b, &a).unwrap());
        }

        #[test]
        fn mi_non_negative(pairs in proptest::collection::vec((0u8..2, 0u8..2), 1..500)) {
            prop_assert!(mutual_information(&pairs) >= 0.0);
        }

        #[test]
        fn mi_zero_for_product_distribution(nx in 1usize..6, ny in 1usize..6, ax in 1usize..4, ay in 1usize..4) {
            // Every (x, y) combination with counts cx[x]·cy[y]: an exact product.
            let mut pairs = Vec::new();
            for x in 0..ax as u8 {
                for y in 0..ay as u8 {
                    for _ in 0..(nx + x as usize) * (ny + y as usize) {
                        pairs.push((x, y));
                    }
                }
            }
            prop_assert!(mutual_information(&pairs).abs() < 1e-12);
        }
    }
}
