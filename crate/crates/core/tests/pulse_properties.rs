use nalgebra::{Matrix3, Vector3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spincool::pulses::adjoint_of;
use spincool::{NamedPulse, Pulse};
use std::f64::consts::{FRAC_PI_2, PI};

fn random_pulse(rng: &mut ChaCha8Rng) -> Pulse {
    Pulse::new(rng.random_range(0.0..FRAC_PI_2), rng.random_range(0.0..2.0 * PI), rng.random_range(0.0..2.0 * PI)).unwrap()
}

#[test]
fn random_pulses_act_as_proper_rotations() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..10_000 {
        let p = random_pulse(&mut rng);
        let u = p.matrix();
        assert!((u * u.adjoint() - nalgebra::Matrix2::identity()).iter().all(|z| z.norm() < 1e-12));
        assert!((u.determinant() - num_complex::Complex64::new(1.0, 0.0)).norm() < 1e-12);
        let a = p.adjoint_action();
        assert!((a.transpose() * a - Matrix3::identity()).abs().max() <= 1e-10);
        assert!((a.determinant() - 1.0).abs() <= 1e-10);
        let v = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        assert!((p.rotate_bloch(&v).norm() - v.norm()).abs() < 1e-12);
    }
}

#[test]
fn action_of_a_product_is_the_product_of_actions() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..2_000 {
        let (p, q) = (random_pulse(&mut rng), random_pulse(&mut rng));
        let joint = adjoint_of(&(p.matrix() * q.matrix()));
        let composed = q.adjoint_action() * p.adjoint_action();
        assert!((joint - composed).abs().max() <= 1e-10);
    }
}

#[test]
fn named_pulses_match_their_rotations() {
    let half = NamedPulse::HalfPiX.pulse().adjoint_action();
    // σz → σy, σy → -σz, σx → σx; rows are the images of (x, y, z).
    let want = Matrix3::new(1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0);
    assert!((half - want).abs().max() < 1e-12, "{half}");
    let pi = NamedPulse::PiX.pulse().adjoint_action();
    assert!((pi - Matrix3::from_diagonal(&Vector3::new(1.0, -1.0, -1.0))).abs().max() < 1e-12, "{pi}");
    assert!((NamedPulse::Identity.pulse().adjoint_action() - Matrix3::identity()).abs().max() == 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn out_of_range_angles_normalize_to_the_same_action(theta in -10.0f64..10.0, phi in -20.0f64..20.0, psi in -20.0f64..20.0) {
        let p = Pulse::new(theta, phi, psi).unwrap();
        prop_assert!((0.0..=FRAC_PI_2).contains(&p.theta()));
        prop_assert!((0.0..2.0 * PI).contains(&p.phi()) && (0.0..2.0 * PI).contains(&p.psi()));
        let e = |x: f64| num_complex::Complex64::from_polar(1.0, x);
        let (sn, cs) = theta.sin_cos();
        let raw = nalgebra::Matrix2::new(e(-phi) * cs, -e(-psi) * sn, e(psi) * sn, e(phi) * cs);
        prop_assert!((adjoint_of(&raw) - p.adjoint_action()).abs().max() < 1e-10);
    }
}
