//! Exact spin observables after a sequence of instantaneous pulses.
//!
//! Because `σ̂z` is conserved between pulses, the reduced dynamics is a sum
//! over spin-label histories: on every free-evolution interval the ket and
//! bra carry labels `s, s' ∈ {±1}`, i.e. a charge `q = (s - s')/2 ∈ {0, ±1}`
//! plus the label itself when `q = 0`. Pulses mix labels with the matrix
//! elements of `U†`. For each history the bath trace is Gaussian and reduces
//! to pairwise contractions of `G = ξ - iF` between interval endpoints, plus
//! the coupling of every interval to the preparation period through `F`.
//! Summing all histories gives `⟨σ̂z⟩` and `⟨σ̂₊⟩` without approximation.

use crate::error::{invalid, Error, Result};
use crate::kernels::{BathKernels, Kernel, SpectralDensity};
use crate::pulses::{Preparation, Pulse, PulseSequence, Step};
use nalgebra::Matrix2;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Largest number of pulses between two coherence resets. Each block costs
/// `2·4^n` label histories.
pub const MAX_BLOCK_PULSES: usize = 10;

/// Reduced spin state: `⟨σ̂z⟩` and `⟨σ̂₊⟩ = ⟨σ̂x⟩ + i⟨σ̂y⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinState {
    pub sz: f64,
    pub splus: Complex64,
}

impl SpinState {
    pub fn diagonal(sz: f64) -> Self {
        Self {
            sz,
            splus: Complex64::new(0.0, 0.0),
        }
    }

    pub fn bloch_norm(&self) -> f64 {
        (self.sz * self.sz + self.splus.norm_sqr()).sqrt()
    }

    /// `P = |⟨σ̂z⟩|`.
    pub fn polarization(&self) -> f64 {
        self.sz.abs()
    }
}

/// Thermal `⟨σ̂z⟩ = -tanh(Ω/2T)`; at `T = 0` the spin sits in its ground state.
pub fn initial_polarization(omega: f64, temperature: f64) -> f64 {
    if temperature == 0.0 {
        if omega == 0.0 {
            0.0
        } else {
            -omega.signum()
        }
    } else {
        -(omega / (2.0 * temperature)).tanh()
    }
}

/// Bath kernels plus the spin frequency `Ω`.
#[derive(Debug, Clone)]
pub struct ModelConfig<K = BathKernels> {
    pub kernels: K,
    pub omega: f64,
}

impl<K: Kernel> ModelConfig<K> {
    pub fn new(kernels: K, omega: f64) -> Result<Self> {
        if !(omega.is_finite() && omega >= 0.0) {
            return Err(invalid("omega", format!("must be finite and >= 0, got {omega}")));
        }
        Ok(Self { kernels, omega })
    }

    pub fn initial_polarization(&self) -> f64 {
        initial_polarization(self.omega, self.kernels.temperature())
    }

    pub fn initial_state(&self) -> SpinState {
        SpinState::diagonal(self.initial_polarization())
    }
}

fn label_index(s: i8) -> usize {
    if s > 0 {
        0
    } else {
        1
    }
}

struct Block {
    /// `U†` for every pulse, in the `(↑, ↓)` basis.
    props: Vec<Matrix2<Complex64>>,
    /// Pairwise interval contractions, `contraction[i][j]` for `j <= i`.
    contraction: Vec<Vec<Complex64>>,
    /// Coupling of interval `i` to the preparation period.
    prep_shift: Vec<f64>,
    /// `Ω ×` interval length.
    spin_phase: Vec<f64>,
    initial_sz: f64,
}

impl Block {
    fn build<K: Kernel + ?Sized>(
        kernels: &K,
        omega: f64,
        prep: Preparation,
        initial_sz: f64,
        pulses: &[(f64, Pulse)],
        final_delay: f64,
    ) -> Result<Self> {
        let n = pulses.len();
        if n > MAX_BLOCK_PULSES {
            return Err(Error::BranchOverflow {
                pulses: n,
                max: MAX_BLOCK_PULSES,
            });
        }
        // Times are measured from the first pulse; the first step's own
        // delay lengthens the preparation.
        let mut edges = Vec::with_capacity(n + 1);
        edges.push(0.0);
        for (delay, _) in pulses.iter().skip(1) {
            edges.push(edges.last().unwrap() + delay);
        }
        edges.push(edges.last().unwrap() + final_delay);
        let intervals: Vec<(f64, f64)> = edges.windows(2).map(|w| (w[0], w[1])).collect();

        let mut g_cache: Vec<(f64, Complex64)> = Vec::new();
        let mut g = |t: f64| -> Result<Complex64> {
            if t <= 0.0 {
                return Ok(Complex64::new(0.0, 0.0));
            }
            if let Some(&(_, v)) = g_cache.iter().find(|(x, _)| *x == t) {
                return Ok(v);
            }
            let v = kernels.g(t)?;
            g_cache.push((t, v));
            Ok(v)
        };

        let mut contraction = vec![Vec::new(); n];
        for i in 0..n {
            let (a, b) = intervals[i];
            for j in 0..i {
                let (c, d) = intervals[j];
                let v = g(b - c)? - g(b - d)? - g(a - c)? + g(a - d)?;
                contraction[i].push(v);
            }
            contraction[i].push(g(b - a)?);
        }

        let prep_shift = match prep {
            Preparation::Ergodic => intervals
                .iter()
                .map(|&(a, b)| if b > a { kernels.ergodic_shift(a, b) } else { Ok(0.0) })
                .collect::<Result<Vec<_>>>()?,
            Preparation::Delay(t) => {
                let t = t + pulses.first().map_or(0.0, |p| p.0);
                intervals
                    .iter()
                    .map(|&(a, b)| {
                        if b > a && t > 0.0 {
                            Ok(kernels.big_f(b + t)? - kernels.big_f(a + t)? - kernels.big_f(b)? + kernels.big_f(a)?)
                        } else {
                            Ok(0.0)
                        }
                    })
                    .collect::<Result<Vec<_>>>()?
            }
        };

        Ok(Self {
            props: pulses.iter().map(|(_, p)| p.matrix().adjoint()).collect(),
            contraction,
            prep_shift,
            spin_phase: intervals.iter().map(|(a, b)| omega * (b - a)).collect(),
            initial_sz,
        })
    }

    fn evaluate(&self) -> SpinState {
        let n = self.props.len();
        let mut acc = Accumulator::default();
        let mut ket = [0i8; MAX_BLOCK_PULSES];
        let mut bra = [0i8; MAX_BLOCK_PULSES];
        for s0 in [1i8, -1] {
            let weight = 0.5 * (1.0 + f64::from(s0) * self.initial_sz);
            if weight == 0.0 {
                continue;
            }
            self.descend(
                0,
                s0,
                s0,
                s0,
                Complex64::new(weight, 0.0),
                Complex64::new(0.0, 0.0),
                &mut ket[..n],
                &mut bra[..n],
                &mut acc,
            );
        }
        SpinState {
            sz: acc.sz.re,
            splus: acc.splus,
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn descend(
        &self,
        depth: usize,
        s0: i8,
        prev_ket: i8,
        prev_bra: i8,
        amp: Complex64,
        exponent: Complex64,
        ket: &mut [i8],
        bra: &mut [i8],
        acc: &mut Accumulator,
    ) {
        let n = ket.len();
        if depth == n {
            let (k, b) = (ket[n - 1], bra[n - 1]);
            if k == b {
                acc.sz += f64::from(k) * amp * exponent.exp();
            } else if k < 0 {
                acc.splus += 2.0 * amp * exponent.exp();
            }
            return;
        }
        let v = &self.props[depth];
        let last = depth + 1 == n;
        for k in [1i8, -1] {
            let vk = v[(label_index(k), label_index(prev_ket))];
            if vk == Complex64::new(0.0, 0.0) {
                continue;
            }
            for b in [1i8, -1] {
                // Only ⟨↑|ρ|↑⟩, ⟨↓|ρ|↓⟩ and ⟨↓|ρ|↑⟩ feed the observables.
                if last && k > b {
                    continue;
                }
                let vb = v[(label_index(b), label_index(prev_bra))];
                if vb == Complex64::new(0.0, 0.0) {
                    continue;
                }
                ket[depth] = k;
                bra[depth] = b;
                let charge = 0.5 * f64::from(k - b);
                let mut e = exponent;
                if charge != 0.0 {
                    let row = &self.contraction[depth];
                    let mut pair = Complex64::new(0.0, 0.0);
                    for j in 0..=depth {
                        let c = row[j];
                        pair += 0.5 * f64::from(ket[j]) * c - 0.5 * f64::from(bra[j]) * c.conj();
                    }
                    e += -charge * pair
                        + Complex64::new(0.0, charge * f64::from(s0) * self.prep_shift[depth])
                        - Complex64::new(0.0, charge * self.spin_phase[depth]);
                }
                self.descend(depth + 1, s0, k, b, amp * vk * vb.conj(), e, ket, bra, acc);
            }
        }
    }
}

#[derive(Default)]
struct Accumulator {
    sz: Complex64,
    splus: Complex64,
}

/// State after one reset-free block of pulses starting from a diagonal spin
/// state with polarization `initial_sz`.
pub fn evolve_block<K: Kernel + ?Sized>(
    kernels: &K,
    omega: f64,
    prep: Preparation,
    initial_sz: f64,
    pulses: &[(f64, Pulse)],
    final_delay: f64,
) -> Result<SpinState> {
    if pulses.is_empty() {
        return Ok(SpinState::diagonal(initial_sz));
    }
    Ok(Block::build(kernels, omega, prep, initial_sz, pulses, final_delay)?.evaluate())
}

/// Exact `⟨σ̂z⟩`, `⟨σ̂₊⟩` after `seq`, starting from the thermal spin state.
pub fn evolve_sequence<K: Kernel>(cfg: &ModelConfig<K>, seq: &PulseSequence) -> Result<SpinState> {
    evolve_from(cfg, cfg.initial_polarization(), seq)
}

/// As [`evolve_sequence`] with an explicit initial polarization.
pub fn evolve_from<K: Kernel>(cfg: &ModelConfig<K>, initial_sz: f64, seq: &PulseSequence) -> Result<SpinState> {
    seq.validate()?;
    if !(-1.0..=1.0).contains(&initial_sz) {
        return Err(invalid("initial_sz", format!("must lie in [-1, 1], got {initial_sz}")));
    }
    let mut blocks: Vec<Vec<(f64, Pulse)>> = vec![Vec::new()];
    for s in &seq.steps {
        match s {
            Step::Pulse { delay, pulse } => blocks.last_mut().unwrap().push((*delay, *pulse)),
            Step::Reset => blocks.push(Vec::new()),
        }
    }
    let count = blocks.len();
    let mut state = SpinState::diagonal(initial_sz);
    for (i, pulses) in blocks.iter().enumerate() {
        let prep = if i == 0 { seq.prep } else { Preparation::Ergodic };
        let final_delay = if i + 1 == count { seq.final_delay } else { 0.0 };
        state = evolve_block(&cfg.kernels, cfg.omega, prep, state.sz, pulses, final_delay)?;
    }
    Ok(state)
}

/// `χ(0, t, τ)` for a preparation of length `t`, with the ergodic limit taken
/// analytically.
fn prep_chi<K: Kernel + ?Sized>(kernels: &K, prep: Preparation, tau: f64) -> Result<f64> {
    match prep {
        Preparation::Ergodic => Ok(-kernels.ergodic_shift(0.0, tau)?),
        Preparation::Delay(t) => kernels.chi(0.0, t, tau),
    }
}

/// Echo backreaction `χ₃ = χ(0, τ, t) - χ(τ, 2τ, t)`.
fn echo_chi<K: Kernel + ?Sized>(kernels: &K, prep: Preparation, tau: f64) -> Result<f64> {
    match prep {
        Preparation::Ergodic => Ok(-kernels.ergodic_shift(0.0, tau)? + kernels.ergodic_shift(tau, 2.0 * tau)?),
        Preparation::Delay(t) => Ok(kernels.chi(0.0, tau, t)? - kernels.chi(tau, 2.0 * tau, t)?),
    }
}

/// Closed-form two-pulse result from polarization `m_i`: pulse `p1` after the
/// preparation, `p2` a time `tau` later.
pub fn two_pulse_from<K: Kernel + ?Sized>(
    kernels: &K,
    omega: f64,
    prep: Preparation,
    tau: f64,
    p1: &Pulse,
    p2: &Pulse,
    m_i: f64,
) -> Result<f64> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(invalid("tau", format!("must be finite and >= 0, got {tau}")));
    }
    let chi = prep_chi(kernels, prep, tau)?;
    let alpha2 = p1.psi() - p2.psi() - p1.phi() - p2.phi();
    let phase = Complex64::from_polar(1.0, omega * tau + alpha2);
    let s2 = -(-kernels.xi(tau)?).exp() * (phase * Complex64::new(m_i * chi.cos(), chi.sin())).re;
    let (s1, c1) = (2.0 * p1.theta()).sin_cos();
    let (s2p, c2) = (2.0 * p2.theta()).sin_cos();
    Ok(m_i * c1 * c2 + s2 * s1 * s2p)
}

/// `⟨σ̂z⟩_f` after two pulses separated by `tau`, from the thermal state.
pub fn two_pulse_sz<K: Kernel>(cfg: &ModelConfig<K>, prep: Preparation, tau: f64, p1: &Pulse, p2: &Pulse) -> Result<f64> {
    two_pulse_from(&cfg.kernels, cfg.omega, prep, tau, p1, p2, cfg.initial_polarization())
}

/// Two optimal pulses in the ergodic limit with negligible `Ω` and `⟨σ̂z⟩_i`.
///
/// Ohmic: `-e^{-ξ(τ)} sin(γ arctan τΓ)` with the kernels' own `ξ`.
/// 1/f: the high-temperature, short-time asymptote
/// `-e^{-Θ_f y²/γ_f} sin(y - π y²/(4γ_f))`, `y = γ_f Λ τ`.
pub fn two_pulse_ergodic_sz(kernels: &BathKernels, tau: f64) -> Result<f64> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(invalid("tau", format!("must be finite and >= 0, got {tau}")));
    }
    match *kernels.spectral() {
        SpectralDensity::Ohmic { gamma, cutoff } => Ok(-(-kernels.xi(tau)?).exp() * (gamma * (tau * cutoff).atan()).sin()),
        SpectralDensity::OneOverF { infrared, .. } => {
            let gamma_f = kernels.spectral().gamma_f().expect("1/f");
            let theta_f = kernels.temperature() / infrared;
            let y = gamma_f * infrared * tau;
            Ok(-(-theta_f * y * y / gamma_f).exp() * (y - PI * y * y / (4.0 * gamma_f)).sin())
        }
        SpectralDensity::Discrete { .. } => Err(Error::Unsupported(
            "ergodic two-pulse formula needs an ohmic or 1/f bath".into(),
        )),
    }
}

/// Echo decoherence exponent `-4ξ(τ) + ξ(2τ)`.
pub fn echo_decoherence_exponent<K: Kernel + ?Sized>(kernels: &K, tau: f64) -> Result<f64> {
    Ok(-4.0 * kernels.xi(tau)? + kernels.xi(2.0 * tau)?)
}

/// Closed-form echo result `P₁ - τ - P_π - τ - P₂` from polarization `m_i`.
pub fn echo_from<K: Kernel + ?Sized>(
    kernels: &K,
    prep: Preparation,
    tau: f64,
    p1: &Pulse,
    p2: &Pulse,
    m_i: f64,
) -> Result<f64> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(invalid("tau", format!("must be finite and >= 0, got {tau}")));
    }
    let chi3 = echo_chi(kernels, prep, tau)?;
    let alpha3 = p1.phi() - p1.psi() - p2.phi() - p2.psi();
    let decay = echo_decoherence_exponent(kernels, tau)?.exp();
    let s3 = -decay * (Complex64::from_polar(1.0, alpha3) * Complex64::new(m_i * chi3.cos(), -chi3.sin())).re;
    let (s1, c1) = (2.0 * p1.theta()).sin_cos();
    let (s2p, c2) = (2.0 * p2.theta()).sin_cos();
    Ok(-m_i * c1 * c2 + s3 * s1 * s2p)
}

/// Echo `m_f` for a single spin from its thermal state.
pub fn echo_sequence_m<K: Kernel>(cfg: &ModelConfig<K>, prep: Preparation, tau: f64, p1: &Pulse, p2: &Pulse) -> Result<f64> {
    echo_from(&cfg.kernels, prep, tau, p1, p2, cfg.initial_polarization())
}

/// The explicit three-pulse sequence the echo formula describes.
pub fn echo_pulse_sequence(prep: Preparation, tau: f64, p1: Pulse, p2: Pulse) -> PulseSequence {
    let pi_x = crate::pulses::NamedPulse::PiX.pulse();
    PulseSequence::new(prep).then(0.0, p1).then(tau, pi_x).then(tau, p2)
}

/// Optimal-pulse echo in the ergodic limit for an ohmic bath:
/// `e^{-4ξ(τ)+ξ(2τ)} sin{γ[2 arctan τΓ - arctan 2τΓ]}`.
pub fn echo_ergodic_m(kernels: &BathKernels, tau: f64) -> Result<f64> {
    match *kernels.spectral() {
        SpectralDensity::Ohmic { gamma, cutoff } => {
            let x = tau * cutoff;
            Ok(echo_decoherence_exponent(kernels, tau)?.exp() * (gamma * (2.0 * x.atan() - (2.0 * x).atan())).sin())
        }
        _ => Err(Error::Unsupported("ergodic echo formula needs an ohmic bath".into())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKind {
    TwoPulse,
    Echo,
}

impl BlockKind {
    pub fn name(&self) -> &'static str {
        match self {
            BlockKind::TwoPulse => "two-pulse",
            BlockKind::Echo => "echo",
        }
    }
}

/// Free parameters of one cooling block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockParams {
    pub p1: Pulse,
    pub p2: Pulse,
    pub tau: f64,
}

/// Polarization after one block applied to an ergodic state with
/// polarization `p`.
pub fn block_map<K: Kernel + ?Sized>(kernels: &K, omega: f64, kind: BlockKind, params: &BlockParams, p: f64) -> Result<f64> {
    match kind {
        BlockKind::TwoPulse => two_pulse_from(kernels, omega, Preparation::Ergodic, params.tau, &params.p1, &params.p2, p),
        BlockKind::Echo => echo_from(kernels, Preparation::Ergodic, params.tau, &params.p1, &params.p2, p),
    }
}

/// Applies `n_blocks` blocks separated by coherence resets. `params` holds
/// either one parameter set reused for every block or one per block.
/// Returns the polarization trace `[p_0, p_1, …, p_n]`.
pub fn repeated_blocks<K: Kernel>(
    cfg: &ModelConfig<K>,
    n_blocks: usize,
    kind: BlockKind,
    params: &[BlockParams],
) -> Result<Vec<f64>> {
    if n_blocks == 0 {
        return Err(invalid("n_blocks", "must be positive"));
    }
    if params.len() != 1 && params.len() != n_blocks {
        return Err(invalid(
            "params",
            format!("expected 1 or {n_blocks} parameter sets, got {}", params.len()),
        ));
    }
    let mut trace = Vec::with_capacity(n_blocks + 1);
    let mut p = cfg.initial_polarization();
    trace.push(p);
    for k in 0..n_blocks {
        let bp = if params.len() == 1 { &params[0] } else { &params[k] };
        p = block_map(&cfg.kernels, cfg.omega, kind, bp, p)?;
        trace.push(p);
    }
    Ok(trace)
}
