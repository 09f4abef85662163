use super::*;
use crate::rng::seeded;

fn seq(bits: &[u8]) -> BasisSequence {
    BasisSequence::new(bits.to_vec()).unwrap()
}

fn nopab(m: usize) -> ProtocolParams {
    ProtocolParams::new(Scheme::Nopab, m)
}

#[test]
fn encode_reproduces_worked_example() {
    // Sequence 0,1,1,0,1 with data 1,0,1,0,1.
    let bases = seq(&[0, 1, 1, 0, 1]);
    let carriers = alice_encode(&bases, &[1, 0, 1, 0, 1]).unwrap();
    let expected = [
        make_state(Basis::Z, 1),
        make_state(Basis::X, 0),
        make_state(Basis::X, 1),
        make_state(Basis::Z, 0),
        make_state(Basis::X, 1),
    ];
    assert_eq!(carriers, expected);
    for seed in 0..20 {
        assert_eq!(bob_measure(&bases, &carriers, &mut seeded(seed)).unwrap(), vec![1, 0, 1, 0, 1]);
    }
}

#[test]
fn encode_trivial_and_errors() {
    let bases = seq(&[0; 4]);
    assert!(alice_encode(&bases, &[0; 4]).unwrap().iter().all(|c| *c == make_state(Basis::Z, 0)));
    assert!(matches!(alice_encode(&bases, &[0; 3]), Err(QkdError::LengthMismatch { .. })));
    assert!(bob_measure(&bases, &[], &mut seeded(0)).unwrap().is_empty());
    assert!(BasisSequence::new(vec![]).is_err());
    assert!(BasisSequence::new(vec![2]).is_err());
}

#[test]
fn bob_all_x_on_z_stream_is_uniform() {
    let n = 100_000;
    let bases = seq(&vec![1; n]);
    let carriers = vec![make_state(Basis::Z, 0); n];
    let bits = bob_measure(&bases, &carriers, &mut seeded(1)).unwrap();
    let zeros = bits.iter().filter(|&&b| b == 0).count() as f64 / n as f64;
    assert!((zeros - 0.5).abs() < 0.01);
}

#[test]
fn sift_cases() {
    let z = Basis::Z;
    let x = Basis::X;
    let (idx, a, b) = sift(&[z, x, z], &[z, x, z], &[1, 0, 1], &[1, 1, 1]).unwrap();
    assert_eq!(idx, vec![0, 1, 2]);
    assert_eq!((a, b), (vec![1, 0, 1], vec![1, 1, 1]));
    let (idx, _, _) = sift(&[z, x], &[x, z], &[0, 0], &[0, 0]).unwrap();
    assert!(idx.is_empty());
    assert!(sift(&[z], &[z, x], &[0], &[0]).is_err());

    let mut rng = seeded(2);
    let m = 10_000;
    let ab: Vec<Basis> = (0..m).map(|_| Basis::from_bit(rng.random_range(0..2))).collect();
    let bb: Vec<Basis> = (0..m).map(|_| Basis::from_bit(rng.random_range(0..2))).collect();
    let (idx, _, _) = sift(&ab, &bb, &vec![0; m], &vec![0; m]).unwrap();
    assert!((idx.len() as f64 / m as f64 - 0.5).abs() < 0.015);
}

#[test]
fn error_check_cases() {
    let mut t = ClassicalTranscript::new();
    let a: Vec<u8> = (0..1000).map(|i| (i % 2) as u8).collect();
    let r = error_check(&a, &a, 0.1, &mut t, &mut seeded(3)).unwrap();
    assert_eq!(r.qber_estimate, 0.0);
    assert_eq!(r.disclosed.len(), 100);
    assert_eq!(r.kept_a.len(), 900);
    assert_eq!(t.count_kind(MessageKind::SubsetBits), 1);
    let comp: Vec<u8> = a.iter().map(|b| 1 - b).collect();
    let r = error_check(&a, &comp, 0.1, &mut t, &mut seeded(4)).unwrap();
    assert_eq!(r.qber_estimate, 1.0);
    assert!(error_check(&a, &a[1..], 0.1, &mut t, &mut seeded(0)).is_err());
    assert!(error_check(&a, &a, 1.0, &mut t, &mut seeded(0)).is_err());
}

#[test]
fn error_check_estimates_true_rate() {
    // Exactly 25% of positions differ.
    let n = 10_000;
    let a = vec![0u8; n];
    let b: Vec<u8> = (0..n).map(|i| u8::from(i % 4 == 0)).collect();
    let r = error_check(&a, &b, 0.1, &mut ClassicalTranscript::new(), &mut seeded(5)).unwrap();
    assert!((r.qber_estimate - 0.25).abs() < 0.03);
}

#[test]
fn params_validation() {
    let mut p = nopab(10);
    assert!(p.validate().is_ok());
    p.m = 0;
    assert!(p.validate().is_err());
    let mut p = nopab(10);
    p.rounds = 0;
    assert!(p.validate().is_err());
    let mut p = nopab(10);
    p.check_fraction = 0.0;
    assert!(matches!(p.validate(), Err(QkdError::InvalidParam { field: "check_fraction", .. })));
    let mut p = nopab(10);
    p.qber_abort_threshold = 0.5;
    assert!(p.validate().is_err());
    let mut p = nopab(10);
    p.pa_compression = 0.0;
    assert!(p.validate().is_err());
    assert_eq!(ProtocolParams::default_pa_compression(true), 0.5);
    assert_eq!(ProtocolParams::default_pa_compression(false), 0.9);
}

#[test]
fn simple_scheme_without_eve() {
    let p = ProtocolParams::new(Scheme::Simple, 2000);
    let s = run_simple_scheme(&p, Basis::new(0.7).unwrap(), &mut Eve::none(), &mut seeded(6)).unwrap();
    assert_eq!(s.sifted_qber, 0.0);
    assert_eq!(s.net_key, s.bob_net_key);
    assert!(!s.aborted);
}

#[test]
fn simple_scheme_eve_on_axis_is_invisible() {
    let axis = Basis::new(0.7).unwrap();
    let p = ProtocolParams::new(Scheme::Simple, 2000);
    let mut eve = Eve::new(EveStrategy::InterceptFixed { basis: axis });
    let s = run_simple_scheme(&p, axis, &mut eve, &mut seeded(7)).unwrap();
    assert_eq!(s.sifted_qber, 0.0);
    assert_eq!(s.eve_bit_agreement(), 1.0);
}

#[test]
fn bb84_noiseless() {
    let p = ProtocolParams::new(Scheme::Bb84, 10_000);
    let s = run_bb84(&p, &mut Eve::none(), &mut seeded(8)).unwrap();
    assert!((s.sifted_fraction() - 0.5).abs() < 0.015);
    assert_eq!(s.sifted_qber, 0.0);
    assert_eq!(s.net_key, s.bob_net_key);
    assert_eq!(s.classical.count_kind(MessageKind::Basis), 10_000);
    // Every basis entry is posted after the final carrier.
    assert!(s
        .classical
        .entries()
        .iter()
        .filter(|e| e.kind == MessageKind::Basis)
        .all(|e| e.at_carrier == s.last_carrier_at && e.at_carrier == 10_000));
}

#[test]
fn nopab_noiseless_keeps_everything() {
    let p = nopab(1000);
    let mut bases = BasisSequence::random(1000, &mut seeded(9)).unwrap();
    let s = run_nopab(&p, &mut bases, &mut Eve::none(), &mut seeded(10)).unwrap();
    assert_eq!(s.sifted_fraction(), 1.0);
    assert_eq!(s.sifted_qber, 0.0);
    assert_eq!(s.classical.count_kind(MessageKind::Basis), 0);
    assert_eq!(s.net_key, s.bob_net_key);
    assert_eq!(s.net_key.len(), 810);
    assert_eq!(bases.use_count(), 1);
    assert_eq!(bases.status(), SequenceStatus::InUse);
    let disclosed: std::collections::HashSet<_> = s.disclosed_indices.iter().collect();
    assert!(s.key_indices.iter().all(|i| !disclosed.contains(i)));
}

#[test]
fn nopab_rejects_wrong_scheme_and_length() {
    let mut bases = seq(&[0, 1]);
    assert!(run_nopab(&nopab(3), &mut bases, &mut Eve::none(), &mut seeded(0)).is_err());
    let p = ProtocolParams::new(Scheme::Bb84, 2);
    assert!(run_nopab(&p, &mut bases, &mut Eve::none(), &mut seeded(0)).is_err());
    assert_eq!(bases.use_count(), 0);
}

#[test]
fn high_qber_aborts_with_empty_key() {
    let p = nopab(2000);
    let mut bases = BasisSequence::random(2000, &mut seeded(11)).unwrap();
    let mut eve = Eve::new(EveStrategy::InterceptFixed { basis: Basis::Z });
    let s = run_nopab(&p, &mut bases, &mut eve, &mut seeded(12)).unwrap();
    assert!(s.aborted);
    assert!(s.net_key.is_empty() && s.key_indices.is_empty());
    assert_eq!(s.eve_records.len(), 2000);
}

#[test]
fn expand_key_ledger_arithmetic() {
    let mut p = nopab(1000);
    p.rounds = 10;
    let mut bases = BasisSequence::random(1000, &mut seeded(13)).unwrap();
    let e = expand_key(&p, &mut bases, &mut Eve::none(), &mut seeded(14)).unwrap();
    assert_eq!(e.sessions.len(), 10);
    assert_eq!(e.ledger.secret_consumed, 1000);
    assert_eq!(e.ledger.raw_produced, 10_000);
    assert_eq!(e.ledger.net_key_bits, 8100);
    assert_eq!(e.ledger.discard_fraction, 0.0);
    assert_eq!(bases.use_count(), 10);
    assert!(e.ledger.net_per_secret_bit().unwrap() > 1.0);
    for r in &e.ledger.rounds {
        assert!(r.net_key_bits <= r.sifted - r.disclosed);
    }
}

#[test]
fn bb84_rounds_yield_about_half() {
    let mut p = ProtocolParams::new(Scheme::Bb84, 1000);
    p.rounds = 10;
    let e = run_rounds(&p, Basis::Z, &mut Eve::none(), &mut seeded(15)).unwrap();
    let ratio = e.ledger.net_key_bits as f64 / 8100.0;
    assert!((ratio - 0.5).abs() < 0.05, "{ratio}");
    assert_eq!(e.ledger.secret_consumed, 0);
}

#[test]
fn expand_key_stops_on_abort() {
    let mut p = nopab(500);
    p.rounds = 5;
    let mut bases = BasisSequence::random(500, &mut seeded(16)).unwrap();
    let mut eve = Eve::new(EveStrategy::InterceptRandomZx);
    let e = expand_key(&p, &mut bases, &mut eve, &mut seeded(17)).unwrap();
    assert_eq!(e.sessions.len(), 1);
    assert!(e.aborted());
    assert_eq!(e.ledger.net_key_bits, 0);
}

#[test]
fn delayed_steps_post_verdicts_after_last_carrier() {
    let mut p = nopab(200);
    p.rounds = 4;
    p.delay_steps = true;
    let mut bases = BasisSequence::random(200, &mut seeded(18)).unwrap();
    let e = expand_key(&p, &mut bases, &mut Eve::none(), &mut seeded(19)).unwrap();
    let verdicts: Vec<_> = e.classical.entries().iter().filter(|x| x.kind == MessageKind::CheckOutcome).collect();
    assert_eq!(verdicts.len(), 4);
    assert!(verdicts.iter().all(|v| v.at_carrier == 800));

    p.delay_steps = false;
    let mut bases = BasisSequence::random(200, &mut seeded(18)).unwrap();
    let e = expand_key(&p, &mut bases, &mut Eve::none(), &mut seeded(19)).unwrap();
    let clocks: Vec<usize> = e
        .classical
        .entries()
        .iter()
        .filter(|x| x.kind == MessageKind::CheckOutcome)
        .map(|x| x.at_carrier)
        .collect();
    assert_eq!(clocks, vec![200, 400, 600, 800]);
}

#[test]
fn reserve_bits_seed_next_sequence() {
    let mut p = nopab(300);
    p.rounds = 3;
    p.reserve_bits = 100;
    let mut bases = BasisSequence::random(300, &mut seeded(20)).unwrap();
    let e = expand_key(&p, &mut bases, &mut Eve::none(), &mut seeded(21)).unwrap();
    assert_eq!(e.ledger.reserved_bits, 100);
    assert_eq!(e.ledger.usable_key_bits(), e.ledger.net_key_bits - 100);
    let next = e.reserved_sequence().unwrap();
    assert_eq!(next.len(), 100);
    assert_eq!(next.status(), SequenceStatus::Fresh);
}

#[test]
fn ciphertext_retires_sequence() {
    let mut bases = seq(&[0, 1, 1, 0, 1]);
    let mut t = ClassicalTranscript::new();
    let c = publish_ciphertext(&[1, 1, 1, 1, 1], &[1, 0, 1, 0, 1], &mut bases, &mut t).unwrap();
    assert_eq!(c, vec![0, 1, 0, 1, 0]);
    assert_eq!(t.count_kind(MessageKind::Ciphertext), 1);
    assert_eq!(bases.status(), SequenceStatus::Retired);
    let p = nopab(5);
    assert_eq!(
        run_nopab(&p, &mut bases, &mut Eve::none(), &mut seeded(0)).unwrap_err(),
        QkdError::RetiredSequence
    );
    assert!(alice_encode(&bases, &[0; 5]).is_err());
    assert!(publish_ciphertext(&[1; 5], &[0; 5], &mut bases, &mut t).is_err());
}

#[test]
fn ciphertext_rejects_short_key() {
    let mut bases = seq(&[0]);
    let err = publish_ciphertext(&[1], &[0, 1], &mut bases, &mut ClassicalTranscript::new()).unwrap_err();
    assert!(matches!(err, QkdError::KeyTooShort { key: 1, message: 2 }));
    assert_eq!(bases.status(), SequenceStatus::Fresh);
}

#[test]
fn noise_sets_matched_basis_qber() {
    // Random replacement agrees with the intended basis half the time.
    let mut p = ProtocolParams::new(Scheme::Bb84, 40_000);
    p.noise_p = 0.1;
    let s = run_bb84(&p, &mut Eve::none(), &mut seeded(22)).unwrap();
    let n = s.sifted_indices.len() as f64;
    let sigma = (0.05 * 0.95 / n).sqrt();
    assert!((s.sifted_qber - 0.05).abs() < 3.0 * sigma, "{}", s.sifted_qber);
}

#[test]
fn session_transcript_json_roundtrip() {
    let p = nopab(16);
    let mut bases = BasisSequence::random(16, &mut seeded(23)).unwrap();
    let mut eve = Eve::new(EveStrategy::InterceptFixed { basis: Basis::X });
    let s = run_nopab(&p, &mut bases, &mut eve, &mut seeded(24)).unwrap();
    let json = serde_json::to_string(&s).unwrap();
    let back: SessionTranscript = serde_json::from_str(&json).unwrap();
    assert_eq!(back.alice_bits, s.alice_bits);
    assert_eq!(back.classical.entries(), s.classical.entries());
    assert_eq!(back.eve_records, s.eve_records);
}
