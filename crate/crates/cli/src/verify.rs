//! `spincool verify`: the dense oracle and the model invariants, sampled
//! from the configured seed.

use crate::config::RunConfig;
use crate::output::{Failure, Run};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use spincool::dynamics::{echo_from, echo_pulse_sequence, evolve_from, two_pulse_from};
use spincool::oracle::{check_equivalence, decoherence_check, random_case, simulate_with, FiniteBath, Propagator, Strategy};
use spincool::{Backend, BathKernels, Kernel, Mode, ModelConfig, Preparation, Pulse, PulseSequence, SpectralDensity};
use std::f64::consts::{FRAC_PI_2, TAU};

#[derive(Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub tolerance: f64,
    pub achieved: f64,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Serialize)]
struct Report {
    seed: u64,
    passed: bool,
    checks: Vec<Check>,
}

fn check(name: &'static str, tolerance: f64, achieved: f64, detail: String) -> Check {
    Check {
        name,
        tolerance,
        achieved,
        passed: achieved <= tolerance,
        detail,
    }
}

fn failed(name: &'static str, tolerance: f64, e: impl std::fmt::Display) -> Check {
    Check {
        name,
        tolerance,
        achieved: f64::INFINITY,
        passed: false,
        detail: e.to_string(),
    }
}

fn rng_for(seed: u64, stream: u64, i: usize) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r.set_word_pos(i as u128 * 1024);
    r
}

fn random_pulse(rng: &mut ChaCha8Rng) -> Pulse {
    Pulse::new(rng.random_range(0.0..FRAC_PI_2), rng.random_range(0.0..TAU), rng.random_range(0.0..TAU)).expect("finite angles")
}

fn random_ohmic(rng: &mut ChaCha8Rng) -> spincool::Result<BathKernels> {
    BathKernels::ohmic(10f64.powf(rng.random_range(-1.0..1.0)), 1.0, 10f64.powf(rng.random_range(-1.5..0.5)))
}

/// Largest value over samples, or the first error.
fn worst<F>(n: usize, f: F) -> spincool::Result<f64>
where
    F: Fn(usize) -> spincool::Result<f64> + Sync + Send,
{
    let vals = (0..n).into_par_iter().map(f).collect::<spincool::Result<Vec<f64>>>()?;
    Ok(vals.into_iter().fold(0.0, f64::max))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn oracle_checks(cfg: &RunConfig) -> Vec<Check> {
    let v = &cfg.verify;
    let cases: Vec<_> = (0..v.oracle_cases)
        .map(|i| {
            let mut c = random_case(&mut rng_for(cfg.seed, 1, i));
            c.bath = c.bath.with_cap(v.dimension_cap);
            c
        })
        .collect();
    let outcomes = cases.par_iter().map(|c| check_equivalence(c, v.cutoff_tolerance)).collect::<spincool::Result<Vec<_>>>();
    let outcomes = match outcomes {
        Ok(o) => o,
        Err(e) => return vec![failed("oracle_equivalence", v.oracle_tolerance, e)],
    };
    let (arg, err) = outcomes.iter().enumerate().fold((0, 0.0), |acc, (i, o)| if o.error > acc.1 { (i, o.error) } else { acc });
    let max_cutoff = outcomes.iter().map(|o| o.dense.cutoff).max().unwrap_or(0);
    let mut out = vec![check(
        "oracle_equivalence",
        v.oracle_tolerance,
        err,
        format!("{} random discrete baths, worst case {arg}, Fock cutoffs up to {max_cutoff}", cases.len()),
    )];

    // Norm and bath-energy bookkeeping of the dense propagation itself.
    let dense = cases
        .par_iter()
        .zip(&outcomes)
        .map(|(c, o)| {
            let bath = c.bath.with_cutoff(o.dense.cutoff);
            let prop = Propagator::new(&bath, c.omega, Strategy::Factorized)?;
            let r = simulate_with(&prop, &bath, &c.sequence)?;
            Ok((r.norm_error, r.energy_drift))
        })
        .collect::<spincool::Result<Vec<_>>>();
    match dense {
        Ok(d) => {
            let norm = d.iter().map(|x| x.0).fold(0.0, f64::max);
            let drift = d.iter().map(|x| x.1).fold(0.0, f64::max);
            out.push(check("dense_unitarity", 1e-10, norm, format!("max norm error over {} propagations", d.len())));
            out.push(check("dense_bath_energy", 1e-10, drift, "max bath-energy drift between pulses".into()));
        }
        Err(e) => {
            out.push(failed("dense_unitarity", 1e-10, &e));
            out.push(failed("dense_bath_energy", 1e-10, e));
        }
    }
    out
}

fn decoherence(cfg: &RunConfig) -> Check {
    let (g, w) = (0.3, 1.0);
    let bath = FiniteBath::new(vec![Mode::new(g, w)], 12, 0.0).with_cap(cfg.verify.dimension_cap);
    let ts: Vec<f64> = (0..=40).map(|i| i as f64 * 0.25).collect();
    match decoherence_check(&bath, 1.0, &ts) {
        Ok(ratios) => {
            let err = ts
                .iter()
                .zip(&ratios)
                .map(|(&t, r)| (r.norm() - (-g * g * (1.0 - (w * t).cos()) / (w * w)).exp()).abs())
                .fold(0.0, f64::max);
            check("single_mode_decoherence", 1e-8, err, format!("g = {g}, ω = {w}, T = 0, t in [0, 10]"))
        }
        Err(e) => failed("single_mode_decoherence", 1e-8, e),
    }
}

fn invariant_checks(cfg: &RunConfig) -> Vec<Check> {
    let n = cfg.verify.samples;
    let seed = cfg.seed;
    let mut out = Vec::new();

    let r = worst(n, |i| {
        let mut rng = rng_for(seed, 2, i);
        let k = random_ohmic(&mut rng)?;
        let omega = rng.random_range(0.0..2.0);
        let m = -rng.random_range(0.0..1.0);
        let (p1, p2) = (random_pulse(&mut rng), random_pulse(&mut rng));
        let tau = 10f64.powf(rng.random_range(-2.0..1.5));
        let formula = two_pulse_from(&k, omega, Preparation::Ergodic, tau, &p1, &p2, m)?;
        let cfg = ModelConfig::new(k, omega)?;
        let general = evolve_from(&cfg, m, &PulseSequence::ergodic().then(0.0, p1).then(tau, p2))?.sz;
        Ok((formula - general).abs())
    });
    out.push(match r {
        Ok(e) => check("two_pulse_formula", 1e-10, e, format!("{n} random ohmic baths and pulse pairs")),
        Err(e) => failed("two_pulse_formula", 1e-10, e),
    });

    let r = worst(n, |i| {
        let mut rng = rng_for(seed, 3, i);
        let k = random_ohmic(&mut rng)?;
        let m = -rng.random_range(0.0..1.0);
        let (p1, p2) = (random_pulse(&mut rng), random_pulse(&mut rng));
        let tau = 10f64.powf(rng.random_range(-2.0..1.0));
        let formula = echo_from(&k, Preparation::Ergodic, tau, &p1, &p2, m)?;
        let cfg = ModelConfig::new(k, 0.0)?;
        let general = evolve_from(&cfg, m, &echo_pulse_sequence(Preparation::Ergodic, tau, p1, p2))?.sz;
        Ok((formula - general).abs())
    });
    out.push(match r {
        Ok(e) => check("echo_formula", 1e-10, e, format!("{n} random ohmic baths and pulse pairs")),
        Err(e) => failed("echo_formula", 1e-10, e),
    });

    // A single pulse can only shrink |<σz>| from the equilibrium value.
    let r = worst(n, |i| {
        let mut rng = rng_for(seed, 4, i);
        let k = random_ohmic(&mut rng)?;
        let omega = rng.random_range(0.0..2.0);
        let m = -rng.random_range(0.0..1.0);
        let cfg = ModelConfig::new(k, omega)?;
        let seq = PulseSequence::ergodic().then(0.0, random_pulse(&mut rng)).wait(rng.random_range(0.0..5.0));
        Ok(evolve_from(&cfg, m, &seq)?.sz.abs() - m.abs())
    });
    out.push(match r {
        Ok(e) => check("single_pulse_bound", 1e-12, e.max(0.0), format!("{n} random single-pulse protocols")),
        Err(e) => failed("single_pulse_bound", 1e-12, e),
    });

    // Without coupling no protocol beats the equilibrium polarization.
    let r = worst(n, |i| {
        let mut rng = rng_for(seed, 5, i);
        let k = BathKernels::ohmic(0.0, 1.0, 0.5)?;
        let omega = rng.random_range(0.0..2.0);
        let m = -rng.random_range(0.0..1.0);
        let cfg = ModelConfig::new(k, omega)?;
        let mut seq = PulseSequence::new(Preparation::Delay(rng.random_range(0.0..3.0)));
        for _ in 0..rng.random_range(1..=4) {
            seq = seq.then(rng.random_range(0.0..3.0), random_pulse(&mut rng));
        }
        Ok(evolve_from(&cfg, m, &seq)?.sz.abs() - m.abs())
    });
    out.push(match r {
        Ok(e) => check("no_bath_no_cooling", 1e-12, e.max(0.0), format!("{n} random sequences at zero coupling")),
        Err(e) => failed("no_bath_no_cooling", 1e-12, e),
    });

    let r = worst(n, |i| {
        let mut rng = rng_for(seed, 6, i);
        let k = random_ohmic(&mut rng)?;
        let omega = rng.random_range(0.0..2.0);
        let m = -rng.random_range(0.0..1.0);
        let cfg = ModelConfig::new(k, omega)?;
        let mut seq = PulseSequence::ergodic();
        for _ in 0..rng.random_range(1..=4) {
            seq = seq.then(rng.random_range(0.0..3.0), random_pulse(&mut rng));
        }
        Ok(evolve_from(&cfg, m, &seq)?.bloch_norm() - 1.0)
    });
    out.push(match r {
        Ok(e) => check("bloch_norm", 1e-12, e.max(0.0), format!("{n} random sequences")),
        Err(e) => failed("bloch_norm", 1e-12, e),
    });

    let grid: Vec<f64> = (0..=24).map(|i| 10f64.powf(-3.0 + 0.25 * i as f64)).collect();
    let r = (|| -> spincool::Result<f64> {
        let mut err: f64 = 0.0;
        for theta in [0.0, 0.1, 1.0] {
            let spectral = SpectralDensity::ohmic(1.0, 1.0)?;
            let closed = BathKernels::with_backend(spectral.clone(), theta, Backend::ClosedForm)?;
            let quad = BathKernels::with_backend(spectral, theta, Backend::Quadrature)?;
            for &t in &grid {
                err = err.max(rel(closed.big_f(t)?, quad.big_f(t)?)).max(rel(closed.xi(t)?, quad.xi(t)?));
            }
        }
        Ok(err)
    })();
    out.push(match r {
        Ok(e) => check("kernel_backends", 1e-8, e, "ohmic closed form vs quadrature, t in [1e-3, 1e3], Θ in {0, 0.1, 1}".into()),
        Err(e) => failed("kernel_backends", 1e-8, e),
    });
    out
}

pub fn verify(cfg: &RunConfig, run: &mut Run) -> Result<(), Failure> {
    let mut checks = run.phase("oracle", || oracle_checks(cfg));
    checks.push(run.phase("decoherence", || decoherence(cfg)));
    checks.extend(run.phase("invariants", || invariant_checks(cfg)));
    let passed = checks.iter().all(|c| c.passed);
    for c in &checks {
        println!(
            "{} {:<24} {:.3e} (tolerance {:.0e})  {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.achieved,
            c.tolerance,
            c.detail
        );
    }
    let report = Report {
        seed: cfg.seed,
        passed,
        checks,
    };
    let text = serde_json::to_string_pretty(&report).expect("serializable report") + "\n";
    run.write("verify_report.json", &text)?;
    let failing: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    run.note("passed", serde_json::json!(passed));
    run.note("failing", serde_json::json!(failing));
    if passed {
        Ok(())
    } else {
        Err(Failure::Verification(format!("{} check(s) failed: {}", failing.len(), failing.join(", "))))
    }
}
