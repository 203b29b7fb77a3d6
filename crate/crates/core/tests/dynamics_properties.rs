use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spincool::dynamics::{echo_pulse_sequence, echo_sequence_m, repeated_blocks, two_pulse_sz, BlockKind, BlockParams};
use spincool::{evolve_sequence, BathKernels, ModelConfig, NamedPulse, Preparation, Pulse, PulseSequence};
use std::f64::consts::{FRAC_PI_2, PI};

fn random_pulse<R: Rng>(rng: &mut R) -> Pulse {
    Pulse::new(rng.random_range(0.0..FRAC_PI_2), rng.random_range(0.0..2.0 * PI), rng.random_range(0.0..2.0 * PI)).unwrap()
}

fn random_cfg<R: Rng>(rng: &mut R) -> ModelConfig {
    let k = BathKernels::ohmic(rng.random_range(0.0..5.0), rng.random_range(0.2..5.0), rng.random_range(0.01..2.0)).unwrap();
    ModelConfig::new(k, rng.random_range(0.0..2.0)).unwrap()
}

fn random_prep<R: Rng>(rng: &mut R) -> Preparation {
    if rng.random_bool(0.5) {
        Preparation::Ergodic
    } else {
        Preparation::Delay(rng.random_range(0.0..10.0))
    }
}

fn agree(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * b.abs() + 1e-13
}

#[test]
fn general_evaluator_reproduces_two_pulse_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(200);
    for i in 0..200 {
        let cfg = random_cfg(&mut rng);
        let prep = random_prep(&mut rng);
        let tau = rng.random_range(0.0..8.0);
        let (p1, p2) = (random_pulse(&mut rng), random_pulse(&mut rng));
        let formula = two_pulse_sz(&cfg, prep, tau, &p1, &p2).unwrap();
        let general = evolve_sequence(&cfg, &PulseSequence::new(prep).then(0.0, p1).then(tau, p2)).unwrap().sz;
        assert!(agree(general, formula), "case {i}: {general} vs {formula}");
    }
}

#[test]
fn general_evaluator_reproduces_echo_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(201);
    for i in 0..200 {
        let cfg = random_cfg(&mut rng);
        let prep = random_prep(&mut rng);
        let tau = rng.random_range(0.0..8.0);
        let (p1, p2) = (random_pulse(&mut rng), random_pulse(&mut rng));
        let formula = echo_sequence_m(&cfg, prep, tau, &p1, &p2).unwrap();
        let general = evolve_sequence(&cfg, &echo_pulse_sequence(prep, tau, p1, p2)).unwrap().sz;
        assert!(agree(general, formula), "case {i}: {general} vs {formula}");
    }
}

#[test]
fn fields_alone_never_cool() {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..10_000 {
        let theta = rng.random_range(0.05..3.0);
        let cfg = ModelConfig::new(BathKernels::ohmic(0.0, 1.0, theta).unwrap(), rng.random_range(0.0..3.0)).unwrap();
        let mut seq = PulseSequence::new(random_prep(&mut rng));
        for _ in 0..rng.random_range(1..=4) {
            seq = seq.then(rng.random_range(0.0..5.0), random_pulse(&mut rng));
        }
        let fin = evolve_sequence(&cfg, &seq).unwrap();
        let gain = fin.polarization() - cfg.initial_polarization().abs();
        worst = worst.max(gain);
        assert!(gain <= 1e-12, "{seq}: gained {gain}");
    }
    println!("largest polarization gain without a bath: {worst:.3e}");
}

#[test]
fn optimal_pair_in_ergodic_limit() {
    let cfg = ModelConfig::new(BathKernels::ohmic(1.0, 1.0, 0.0).unwrap(), 0.0).unwrap();
    let (p1, p2) = (NamedPulse::HalfPiX.pulse(), NamedPulse::MinusHalfPiY.pulse());
    let sz = two_pulse_sz(&cfg, Preparation::Ergodic, 1.0, &p1, &p2).unwrap();
    assert!((sz + 0.5).abs() < 1e-14, "{sz}");
    assert_eq!(two_pulse_sz(&cfg, Preparation::Ergodic, 0.0, &p1, &p2).unwrap(), 0.0);
}

#[test]
fn single_block_trace_matches_evaluator() {
    let cfg = ModelConfig::new(BathKernels::ohmic(1.0, 1.0, 0.2).unwrap(), 0.3).unwrap();
    let bp = BlockParams {
        p1: NamedPulse::HalfPiX.pulse(),
        p2: NamedPulse::MinusHalfPiY.pulse(),
        tau: 0.8,
    };
    let trace = repeated_blocks(&cfg, 3, BlockKind::TwoPulse, &[bp]).unwrap();
    let one = PulseSequence::ergodic().then(0.0, bp.p1).then(bp.tau, bp.p2);
    let seq = one.clone().reset().then(0.0, bp.p1).then(bp.tau, bp.p2).reset().then(0.0, bp.p1).then(bp.tau, bp.p2);
    assert!((trace[1] - evolve_sequence(&cfg, &one).unwrap().sz).abs() < 1e-14);
    assert!((trace[3] - evolve_sequence(&cfg, &seq).unwrap().sz).abs() < 1e-13);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn single_pulse_cannot_cool(gamma in 0.0f64..10.0, theta in 0.01f64..3.0, omega in 0.0f64..3.0,
                                th in 0.0f64..FRAC_PI_2, phi in 0.0f64..6.28, psi in 0.0f64..6.28, wait in 0.0f64..10.0) {
        let cfg = ModelConfig::new(BathKernels::ohmic(gamma, 1.0, theta).unwrap(), omega).unwrap();
        let p = Pulse::new(th, phi, psi).unwrap();
        let fin = evolve_sequence(&cfg, &PulseSequence::ergodic().then(0.0, p).wait(wait)).unwrap();
        let m_i = cfg.initial_polarization();
        prop_assert!(fin.polarization() <= m_i.abs());
        prop_assert!((fin.sz - m_i * (2.0 * th).cos()).abs() <= 1e-15);
    }

    #[test]
    fn bloch_vector_stays_in_the_ball(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = random_cfg(&mut rng);
        let mut seq = PulseSequence::new(random_prep(&mut rng));
        for _ in 0..rng.random_range(1..=5) {
            seq = if rng.random_bool(0.15) { seq.reset() } else { seq.then(rng.random_range(0.0..5.0), random_pulse(&mut rng)) };
        }
        let fin = evolve_sequence(&cfg, &seq.wait(rng.random_range(0.0..3.0))).unwrap();
        prop_assert!(fin.bloch_norm() <= 1.0 + 1e-12, "{}", fin.bloch_norm());
    }
}
