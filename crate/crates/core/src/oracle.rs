//! Brute-force reference: exact diagonalization of the spin plus a few
//! truncated oscillators.
//!
//! Since `σ̂z` is conserved, `H = ⊕_s H_s` with
//! `H_s = sΩ/2 + Σ_k [ω_k a†a + s g_k (a + a†)/2]` on the bath space. Each
//! `H_s` is a sum of single-mode terms, so its eigenvectors are tensor
//! products of single-mode eigenvectors. States are kept in the eigenbases
//! of `H_+` and `H_-`: free evolution is a phase, and a pulse mixes the two
//! through the overlap `W = Q₊ᵀQ₋`. The thermal initial mixture is summed
//! over product Fock states.

use crate::dynamics::{evolve_sequence, ModelConfig, SpinState};
use crate::error::{invalid, Error, Result};
use crate::kernels::{BathKernels, Mode, SpectralDensity};
use crate::pulses::{Preparation, Pulse, PulseSequence, Step};
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

pub const DEFAULT_DIMENSION_CAP: usize = 16_384;
/// Largest thermal occupation allowed on the top retained Fock level.
pub const MAX_TOP_OCCUPATION: f64 = 1e-6;
/// Initial product states lighter than this are skipped.
const WEIGHT_FLOOR: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteBath {
    pub modes: Vec<Mode>,
    /// Retained Fock levels per mode.
    pub fock_cutoff: Vec<usize>,
    pub temperature: f64,
    pub dimension_cap: usize,
}

impl FiniteBath {
    /// Same cutoff on every mode.
    pub fn new(modes: Vec<Mode>, fock_cutoff: usize, temperature: f64) -> Self {
        let n = modes.len();
        Self {
            modes,
            fock_cutoff: vec![fock_cutoff; n],
            temperature,
            dimension_cap: DEFAULT_DIMENSION_CAP,
        }
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.dimension_cap = cap;
        self
    }

    pub fn with_cutoff(&self, fock_cutoff: usize) -> Self {
        Self {
            fock_cutoff: vec![fock_cutoff; self.modes.len()],
            ..self.clone()
        }
    }

    /// Bath dimension `Π n_k`.
    pub fn bath_dimension(&self) -> usize {
        self.fock_cutoff.iter().product()
    }

    /// Thermal probability of each retained level, renormalized.
    fn level_weights(&self, k: usize) -> Vec<f64> {
        let n = self.fock_cutoff[k];
        if self.temperature == 0.0 {
            let mut w = vec![0.0; n];
            w[0] = 1.0;
            return w;
        }
        let x = (-self.modes[k].omega / self.temperature).exp();
        let raw: Vec<f64> = (0..n).map(|j| x.powi(j as i32)).collect();
        let z: f64 = raw.iter().sum();
        raw.into_iter().map(|w| w / z).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.modes.is_empty() {
            return Err(invalid("modes", "need at least one mode"));
        }
        if self.fock_cutoff.len() != self.modes.len() || self.fock_cutoff.iter().any(|&n| n < 2) {
            return Err(invalid("fock_cutoff", "need one cutoff >= 2 per mode"));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(invalid("temperature", format!("must be finite and >= 0, got {}", self.temperature)));
        }
        for m in &self.modes {
            if !(m.omega > 0.0 && m.omega.is_finite() && m.g.is_finite()) {
                return Err(invalid("modes", format!("need finite g and omega > 0, got {m:?}")));
            }
        }
        let dim = self
            .fock_cutoff
            .iter()
            .try_fold(2usize, |acc, &n| acc.checked_mul(n))
            .unwrap_or(usize::MAX);
        if dim > self.dimension_cap {
            return Err(Error::DimensionCap {
                dim,
                cap: self.dimension_cap,
            });
        }
        for k in 0..self.modes.len() {
            let top = *self.level_weights(k).last().unwrap();
            if top >= MAX_TOP_OCCUPATION {
                return Err(Error::CutoffInadequate {
                    cutoff: self.fock_cutoff[k],
                    omega: self.modes[k].omega,
                    occupation: top,
                });
            }
        }
        Ok(())
    }
}

/// How the truncated Hamiltonian is diagonalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Mode-by-mode diagonalization using the tensor-sum structure.
    Factorized,
    /// Diagonalize the full `Π n_k`-dimensional blocks.
    FullMatrix,
}

/// Real linear map on the bath space, either a Kronecker product of
/// single-mode matrices or a dense matrix.
#[derive(Debug, Clone)]
enum Operator {
    Kron(Vec<DMatrix<f64>>),
    Dense(DMatrix<f64>),
}

impl Operator {
    fn apply(&self, v: &[Complex64], transpose: bool) -> Vec<Complex64> {
        match self {
            Operator::Dense(m) => {
                let n = m.nrows();
                let mut out = vec![Complex64::new(0.0, 0.0); n];
                for (i, o) in out.iter_mut().enumerate() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (j, x) in v.iter().enumerate() {
                        let a = if transpose { m[(j, i)] } else { m[(i, j)] };
                        acc += a * x;
                    }
                    *o = acc;
                }
                out
            }
            Operator::Kron(factors) => {
                let dims: Vec<usize> = factors.iter().map(|f| f.nrows()).collect();
                let mut cur = v.to_vec();
                let mut next = vec![Complex64::new(0.0, 0.0); v.len()];
                for (k, f) in factors.iter().enumerate() {
                    let n = dims[k];
                    let right: usize = dims[k + 1..].iter().product();
                    let left = v.len() / (n * right);
                    for l in 0..left {
                        for i in 0..n {
                            for r in 0..right {
                                let mut acc = Complex64::new(0.0, 0.0);
                                for j in 0..n {
                                    let a = if transpose { f[(j, i)] } else { f[(i, j)] };
                                    acc += a * cur[(l * n + j) * right + r];
                                }
                                next[(l * n + i) * right + r] = acc;
                            }
                        }
                    }
                    std::mem::swap(&mut cur, &mut next);
                }
                cur
            }
        }
    }
}

fn flatten(index: &[usize], dims: &[usize]) -> usize {
    index.iter().zip(dims).fold(0, |acc, (&i, &n)| acc * n + i)
}

fn single_mode_block(mode: &Mode, n: usize, s: f64) -> DMatrix<f64> {
    let mut h = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        h[(j, j)] = j as f64 * mode.omega;
        if j + 1 < n {
            let c = 0.5 * s * mode.g * ((j + 1) as f64).sqrt();
            h[(j, j + 1)] = c;
            h[(j + 1, j)] = c;
        }
    }
    h
}

/// Eigen-decomposed `H_+` and `H_-`, reusable across sequences.
#[derive(Debug, Clone)]
pub struct Propagator {
    dims: Vec<usize>,
    energies: [Vec<f64>; 2],
    /// `Q_s`: columns are eigenvectors in the Fock basis.
    bases: [Operator; 2],
    /// `W = Q₊ᵀQ₋`.
    overlap: Operator,
    omega: f64,
}

impl Propagator {
    pub fn new(bath: &FiniteBath, omega: f64, strategy: Strategy) -> Result<Self> {
        bath.validate()?;
        let dims = bath.fock_cutoff.clone();
        let mut energies: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
        let mut bases: Vec<Operator> = Vec::with_capacity(2);
        for (b, s) in [1.0, -1.0].into_iter().enumerate() {
            match strategy {
                Strategy::Factorized => {
                    let mut factors = Vec::new();
                    let mut e = vec![0.5 * s * omega];
                    for (m, &n) in bath.modes.iter().zip(&dims) {
                        let eig = SymmetricEigen::new(single_mode_block(m, n, s));
                        e = e.iter().flat_map(|a| eig.eigenvalues.iter().map(move |b| a + b)).collect();
                        factors.push(eig.eigenvectors);
                    }
                    energies[b] = e;
                    bases.push(Operator::Kron(factors));
                }
                Strategy::FullMatrix => {
                    let total: usize = dims.iter().product();
                    let mut h = DMatrix::<f64>::identity(total, total) * (0.5 * s * omega);
                    for k in 0..dims.len() {
                        let mut term = DMatrix::<f64>::identity(1, 1);
                        for (j, &n) in dims.iter().enumerate() {
                            let f = if j == k {
                                single_mode_block(&bath.modes[k], n, s)
                            } else {
                                DMatrix::identity(n, n)
                            };
                            term = term.kronecker(&f);
                        }
                        h += term;
                    }
                    let eig = SymmetricEigen::new(h);
                    energies[b] = eig.eigenvalues.iter().copied().collect();
                    bases.push(Operator::Dense(eig.eigenvectors));
                }
            }
        }
        let overlap = match (&bases[0], &bases[1]) {
            (Operator::Kron(p), Operator::Kron(m)) => Operator::Kron(p.iter().zip(m).map(|(a, b)| a.transpose() * b).collect()),
            (Operator::Dense(p), Operator::Dense(m)) => Operator::Dense(p.transpose() * m),
            _ => unreachable!("both blocks share a strategy"),
        };
        let minus = bases.pop().unwrap();
        let plus = bases.pop().unwrap();
        Ok(Self {
            dims,
            energies,
            bases: [plus, minus],
            overlap,
            omega,
        })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Eigen-coefficients of the Fock state `|n⟩` in block `b`.
    fn fock_state(&self, b: usize, index: &[usize]) -> Vec<Complex64> {
        match &self.bases[b] {
            Operator::Dense(m) => {
                let flat = flatten(index, &self.dims);
                m.row(flat).iter().map(|&x| Complex64::new(x, 0.0)).collect()
            }
            Operator::Kron(factors) => {
                let mut out = vec![Complex64::new(1.0, 0.0)];
                for (f, &i) in factors.iter().zip(index) {
                    let r = f.row(i);
                    out = out.iter().flat_map(|a| r.iter().map(move |&x| a * x)).collect();
                }
                out
            }
        }
    }

    fn evolve(&self, state: &mut BlockState, t: f64) {
        if t == 0.0 {
            return;
        }
        for b in 0..2 {
            for (c, &e) in state.c[b].iter_mut().zip(&self.energies[b]) {
                *c *= Complex64::from_polar(1.0, -e * t);
            }
        }
    }

    fn pulse(&self, state: &mut BlockState, pulse: &Pulse) {
        let v = pulse.matrix().adjoint();
        let minus_in_plus = self.overlap.apply(&state.c[1], false);
        let plus_in_minus = self.overlap.apply(&state.c[0], true);
        let plus: Vec<Complex64> = state.c[0]
            .iter()
            .zip(&minus_in_plus)
            .map(|(a, b)| v[(0, 0)] * a + v[(0, 1)] * b)
            .collect();
        let minus: Vec<Complex64> = plus_in_minus
            .iter()
            .zip(&state.c[1])
            .map(|(a, b)| v[(1, 0)] * a + v[(1, 1)] * b)
            .collect();
        state.c = [plus, minus];
    }

    fn observe(&self, state: &BlockState) -> (f64, Complex64, f64, f64) {
        let up: f64 = state.c[0].iter().map(|c| c.norm_sqr()).sum();
        let down: f64 = state.c[1].iter().map(|c| c.norm_sqr()).sum();
        let w = self.overlap.apply(&state.c[1], false);
        let splus: Complex64 = state.c[0].iter().zip(&w).map(|(a, b)| 2.0 * a.conj() * b).sum();
        (up - down, splus, up + down, self.energy(state))
    }

    fn energy(&self, state: &BlockState) -> f64 {
        (0..2)
            .map(|b| state.c[b].iter().zip(&self.energies[b]).map(|(c, e)| c.norm_sqr() * e).sum::<f64>())
            .sum()
    }
}

#[derive(Debug, Clone)]
struct BlockState {
    c: [Vec<Complex64>; 2],
}

/// Diagnostics accumulated over the thermal mixture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenseReport {
    pub state: SpinState,
    /// Largest deviation of any pure component's norm from 1.
    pub norm_error: f64,
    /// Largest change of `⟨H⟩` over any free-evolution interval.
    pub energy_drift: f64,
    /// Boltzmann weight of skipped initial states.
    pub skipped_weight: f64,
}

fn sequence_plan(seq: &PulseSequence) -> Result<(f64, Vec<(f64, Pulse)>)> {
    seq.validate()?;
    let prep = match seq.prep {
        Preparation::Delay(t) => t,
        Preparation::Ergodic => {
            return Err(Error::Unsupported(
                "dense simulation needs a finite preparation delay".into(),
            ))
        }
    };
    let mut steps = Vec::new();
    for s in &seq.steps {
        match s {
            Step::Pulse { delay, pulse } => steps.push((*delay, *pulse)),
            Step::Reset => return Err(Error::Unsupported("dense simulation has no coherence reset".into())),
        }
    }
    Ok((prep, steps))
}

/// Runs `seq` on a prepared propagator.
pub fn simulate_with(prop: &Propagator, bath: &FiniteBath, seq: &PulseSequence) -> Result<DenseReport> {
    let (prep, steps) = sequence_plan(seq)?;
    let m_i = crate::dynamics::initial_polarization(prop.omega, bath.temperature);
    let weights: Vec<Vec<f64>> = (0..bath.modes.len()).map(|k| bath.level_weights(k)).collect();

    let mut components: Vec<(usize, Vec<usize>, f64)> = Vec::new();
    let mut skipped = 0.0;
    let total: usize = prop.dims.iter().product();
    for (b, p_spin) in [(0usize, 0.5 * (1.0 + m_i)), (1usize, 0.5 * (1.0 - m_i))] {
        if p_spin == 0.0 {
            continue;
        }
        for flat in 0..total {
            let mut idx = vec![0usize; prop.dims.len()];
            let mut rem = flat;
            for k in (0..prop.dims.len()).rev() {
                idx[k] = rem % prop.dims[k];
                rem /= prop.dims[k];
            }
            let w = p_spin * idx.iter().enumerate().map(|(k, &i)| weights[k][i]).product::<f64>();
            if w < WEIGHT_FLOOR {
                skipped += w;
                continue;
            }
            components.push((b, idx, w));
        }
    }

    let parts: Vec<(f64, Complex64, f64, f64)> = components
        .par_iter()
        .map(|(b, idx, w)| {
            let zero = vec![Complex64::new(0.0, 0.0); total];
            let mut st = BlockState {
                c: if *b == 0 {
                    [prop.fock_state(0, idx), zero]
                } else {
                    [zero, prop.fock_state(1, idx)]
                },
            };
            let mut drift: f64 = 0.0;
            let mut run = |st: &mut BlockState, t: f64| {
                let e0 = prop.energy(st);
                prop.evolve(st, t);
                drift = drift.max((prop.energy(st) - e0).abs());
            };
            let first = steps.first().map_or(0.0, |s| s.0);
            run(&mut st, prep + first);
            for (k, (delay, pulse)) in steps.iter().enumerate() {
                if k > 0 {
                    run(&mut st, *delay);
                }
                prop.pulse(&mut st, pulse);
            }
            run(&mut st, seq.final_delay);
            let (sz, sp, norm, _) = prop.observe(&st);
            (w * sz, w * sp, (norm - 1.0).abs(), drift)
        })
        .collect();

    let kept: f64 = components.iter().map(|c| c.2).sum();
    let mut sz = 0.0;
    let mut splus = Complex64::new(0.0, 0.0);
    let mut norm_error: f64 = 0.0;
    let mut energy_drift: f64 = 0.0;
    for (a, b, n, d) in parts {
        sz += a;
        splus += b;
        norm_error = norm_error.max(n);
        energy_drift = energy_drift.max(d);
    }
    Ok(DenseReport {
        state: SpinState {
            sz: sz / kept,
            splus: splus / kept,
        },
        norm_error,
        energy_drift,
        skipped_weight: skipped,
    })
}

/// `⟨σ̂z⟩`, `⟨σ̂₊⟩` after `seq` from the factorized thermal state.
pub fn simulate_dense(bath: &FiniteBath, omega: f64, seq: &PulseSequence) -> Result<SpinState> {
    let prop = Propagator::new(bath, omega, Strategy::Factorized)?;
    Ok(simulate_with(&prop, bath, seq)?.state)
}

/// Result of raising the Fock cutoff until the observables settle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Converged {
    pub state: SpinState,
    pub cutoff: usize,
    /// Change of the observables under the last `n_max → n_max + 2` step.
    pub change: f64,
}

/// Raises a uniform cutoff one level at a time, starting from `bath`'s
/// first entry, until the observables at `n` and `n - 2` differ by less
/// than `tol`.
pub fn simulate_converged(bath: &FiniteBath, omega: f64, seq: &PulseSequence, tol: f64) -> Result<Converged> {
    let mut n = bath.fock_cutoff[0];
    let mut history: Vec<SpinState> = Vec::new();
    loop {
        match simulate_dense(&bath.with_cutoff(n), omega, seq) {
            Ok(s) => history.push(s),
            // Below the smallest cutoff that passes the occupation check.
            Err(Error::CutoffInadequate { .. }) if history.is_empty() => {}
            Err(e) => return Err(e),
        }
        if let [.., a, _, b] = history.as_slice() {
            let change = (b.sz - a.sz).abs().max((b.splus - a.splus).norm());
            if change < tol {
                return Ok(Converged {
                    state: *b,
                    cutoff: n,
                    change,
                });
            }
        }
        n += 1;
    }
}

/// Dense `⟨σ̂₊(t)⟩/⟨σ̂₊(0)⟩` after a half-pi-x pulse at `t = 0` on the
/// thermal state.
pub fn decoherence_check(bath: &FiniteBath, omega: f64, t_grid: &[f64]) -> Result<Vec<Complex64>> {
    let prop = Propagator::new(bath, omega, Strategy::Factorized)?;
    let pulse = crate::pulses::NamedPulse::HalfPiX.pulse();
    let base = PulseSequence::new(Preparation::Delay(0.0)).then(0.0, pulse);
    let s0 = simulate_with(&prop, bath, &base)?.state.splus;
    if s0.norm() < 1e-12 {
        return Err(invalid(
            "omega",
            "initial coherence vanishes; need a polarized spin (omega > 0, finite temperature)",
        ));
    }
    t_grid
        .iter()
        .map(|&t| Ok(simulate_with(&prop, bath, &base.clone().wait(t))?.state.splus / s0))
        .collect()
}

/// A discrete bath, spin frequency and pulse sequence for comparing the
/// analytic evaluator with dense simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceCase {
    pub bath: FiniteBath,
    pub omega: f64,
    pub sequence: PulseSequence,
}

/// Random case: 2-4 modes, 1-3 pulses, finite preparation. Couplings
/// (`g < 0.35 min(ω, 1)`) and temperatures are kept where a cutoff of at
/// most 9 levels converges.
pub fn random_case<R: Rng + ?Sized>(rng: &mut R) -> EquivalenceCase {
    let n_modes = rng.random_range(2..=4);
    let modes: Vec<Mode> = (0..n_modes)
        .map(|_| {
            let w: f64 = rng.random_range(0.6..2.0);
            Mode::new(rng.random_range(0.05..0.35) * w.min(1.0), w)
        })
        .collect();
    let w_min = modes.iter().map(|m| m.omega).fold(f64::INFINITY, f64::min);
    let temperature = rng.random_range(0.05..0.3) * w_min;
    let mut seq = PulseSequence::new(Preparation::Delay(rng.random_range(0.0..2.0)));
    for _ in 0..rng.random_range(1..=3) {
        let p = Pulse::new(
            rng.random_range(0.0..std::f64::consts::FRAC_PI_2),
            rng.random_range(0.0..std::f64::consts::TAU),
            rng.random_range(0.0..std::f64::consts::TAU),
        )
        .expect("finite angles");
        seq = seq.then(rng.random_range(0.0..2.0), p);
    }
    seq = seq.wait(rng.random_range(0.0..1.0));
    EquivalenceCase {
        bath: FiniteBath::new(modes, 4, temperature),
        omega: rng.random_range(0.0..1.5),
        sequence: seq,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquivalenceOutcome {
    pub analytic: SpinState,
    pub dense: Converged,
    /// `max(|Δ⟨σ̂z⟩|, |Δ⟨σ̂₊⟩|)`.
    pub error: f64,
}

/// Compares the analytic evaluator (discrete-sum kernels) with the dense
/// simulation converged in the Fock cutoff to `cutoff_tol`.
pub fn check_equivalence(case: &EquivalenceCase, cutoff_tol: f64) -> Result<EquivalenceOutcome> {
    let kernels = BathKernels::new(SpectralDensity::discrete(case.bath.modes.clone())?, case.bath.temperature)?;
    let cfg = ModelConfig::new(kernels, case.omega)?;
    let analytic = evolve_sequence(&cfg, &case.sequence)?;
    let dense = simulate_converged(&case.bath, case.omega, &case.sequence, cutoff_tol)?;
    let error = (analytic.sz - dense.state.sz).abs().max((analytic.splus - dense.state.splus).norm());
    Ok(EquivalenceOutcome { analytic, dense, error })
}
