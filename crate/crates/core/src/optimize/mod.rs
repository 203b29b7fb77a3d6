//! Maximizing final polarization over pulse parameters and delays.
//!
//! A coarse scan over the delay and the relevant phase combination at
//! `ϑ = π/4` seeds a multistart Nelder-Mead refinement over every free
//! parameter. Starts are independent and run in parallel; the reduction is
//! in start order, so results depend only on the seed.

pub mod nelder_mead;

use crate::dynamics::{echo_from, echo_pulse_sequence, evolve_block, two_pulse_from, BlockKind, BlockParams, ModelConfig};
use crate::error::{invalid, Result};
use crate::kernels::{BathKernels, Kernel, SpectralDensity};
use crate::pulses::{Preparation, Pulse, PulseSequence};
use nelder_mead::{minimize, NelderMeadOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::{FRAC_PI_4, PI};

/// Values closer than this are treated as ties.
const TIE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// `P₁ - τ - P₂` from the ergodic state.
    TwoPulse,
    /// `P₁ - τ₁ - P₂ - τ₂ - P₃` from the ergodic state, read out right after `P₃`.
    ThreePulse,
    /// `P₁ - τ - P_π - τ - P₂` from the ergodic state.
    Echo,
}

impl Objective {
    pub fn name(&self) -> &'static str {
        match self {
            Objective::TwoPulse => "two-pulse",
            Objective::ThreePulse => "three-pulse",
            Objective::Echo => "echo",
        }
    }

    fn pulses(&self) -> usize {
        match self {
            Objective::ThreePulse => 3,
            _ => 2,
        }
    }

    fn delays(&self) -> usize {
        self.pulses() - 1
    }

    pub fn dimension(&self) -> usize {
        3 * self.pulses() + self.delays()
    }
}

impl From<BlockKind> for Objective {
    fn from(k: BlockKind) -> Self {
        match k {
            BlockKind::TwoPulse => Objective::TwoPulse,
            BlockKind::Echo => Objective::Echo,
        }
    }
}

impl std::str::FromStr for Objective {
    type Err = crate::error::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two-pulse" | "2" => Ok(Objective::TwoPulse),
            "three-pulse" | "3" => Ok(Objective::ThreePulse),
            "echo" | "2+pi" => Ok(Objective::Echo),
            _ => Err(invalid("objective", format!("unknown objective '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationProblem {
    pub objective: Objective,
    /// Polarization before the block; `None` uses the thermal value.
    pub initial_sz: Option<f64>,
    pub tau_max: f64,
    pub starts: usize,
    pub seed: u64,
    /// Evaluation budget per start.
    pub max_evals: usize,
    pub value_tol: f64,
    pub param_tol: f64,
    pub grid_tau: usize,
    pub grid_alpha: usize,
}

impl OptimizationProblem {
    pub fn new(objective: Objective, tau_max: f64) -> Self {
        let dim = objective.dimension();
        Self {
            objective,
            initial_sz: None,
            tau_max,
            starts: 16,
            seed: 0,
            max_evals: 400 * dim * dim,
            value_tol: 1e-10,
            param_tol: 1e-8,
            grid_tau: 160,
            grid_alpha: 16,
        }
    }

    /// Uses the natural delay bound of the bath: `10³/Γ` (ohmic),
    /// `y = γ_f Λ τ ≤ 10` (1/f), `10³/ω_min` (discrete).
    pub fn for_kernels(objective: Objective, kernels: &BathKernels) -> Self {
        Self::new(objective, default_tau_max(kernels.spectral()))
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_initial_sz(mut self, sz: f64) -> Self {
        self.initial_sz = Some(sz);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau_max.is_finite() && self.tau_max > 0.0) {
            return Err(invalid("tau_max", format!("must be finite and > 0, got {}", self.tau_max)));
        }
        if self.starts == 0 || self.max_evals == 0 || self.grid_tau < 2 || self.grid_alpha == 0 {
            return Err(invalid("budget", "starts, max_evals, grid_alpha must be >= 1 and grid_tau >= 2"));
        }
        if let Some(p) = self.initial_sz {
            if !(-1.0..=1.0).contains(&p) {
                return Err(invalid("initial_sz", format!("must lie in [-1, 1], got {p}")));
            }
        }
        Ok(())
    }

    /// Signed `⟨σ̂z⟩_f` for explicit pulses and delays.
    pub fn evaluate<K: Kernel + ?Sized>(&self, kernels: &K, omega: f64, m_i: f64, pulses: &[Pulse], delays: &[f64]) -> Result<f64> {
        match self.objective {
            Objective::TwoPulse => two_pulse_from(kernels, omega, Preparation::Ergodic, delays[0], &pulses[0], &pulses[1], m_i),
            Objective::Echo => echo_from(kernels, Preparation::Ergodic, delays[0], &pulses[0], &pulses[1], m_i),
            Objective::ThreePulse => {
                let steps = [(0.0, pulses[0]), (delays[0], pulses[1]), (delays[1], pulses[2])];
                Ok(evolve_block(kernels, omega, Preparation::Ergodic, m_i, &steps, 0.0)?.sz)
            }
        }
    }

    fn decode(&self, x: &[f64]) -> Option<(Vec<Pulse>, Vec<f64>)> {
        let np = self.objective.pulses();
        let mut pulses = Vec::with_capacity(np);
        for k in 0..np {
            let theta = FRAC_PI_4 * (1.0 - x[3 * k].cos());
            pulses.push(Pulse::new(theta, x[3 * k + 1], x[3 * k + 2]).ok()?);
        }
        let delays = x[3 * np..].iter().map(|&l| l.exp().min(self.tau_max)).collect();
        Some((pulses, delays))
    }

    fn encode(&self, pulses: &[Pulse], delays: &[f64]) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.objective.dimension());
        for p in pulses {
            x.push((1.0 - p.theta() / FRAC_PI_4).clamp(-1.0, 1.0).acos());
            x.push(p.phi());
            x.push(p.psi());
        }
        x.extend(delays.iter().map(|d| d.ln()));
        x
    }

    /// Quarter-turn pulses whose phase combination equals `alpha`.
    fn seed_pulses(&self, alpha: f64) -> Vec<Pulse> {
        let q = |phi, psi| Pulse::new(FRAC_PI_4, phi, psi).expect("finite angles");
        match self.objective {
            Objective::TwoPulse => vec![q(0.0, alpha), q(0.0, 0.0)],
            Objective::ThreePulse => vec![q(0.0, alpha), q(0.0, 0.0), Pulse::identity()],
            Objective::Echo => vec![q(alpha, 0.0), q(0.0, 0.0)],
        }
    }
}

pub fn default_tau_max(spectral: &SpectralDensity) -> f64 {
    match *spectral {
        SpectralDensity::Ohmic { cutoff, .. } => 1e3 / cutoff,
        SpectralDensity::OneOverF { infrared, .. } => 10.0 / (spectral.gamma_f().expect("1/f") * infrared),
        SpectralDensity::Discrete { ref modes } => {
            1e3 / modes.iter().map(|m| m.omega).fold(f64::INFINITY, f64::min)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub objective: Objective,
    pub initial_sz: f64,
    pub pulses: Vec<Pulse>,
    pub delays: Vec<f64>,
    /// Signed `⟨σ̂z⟩_f` at the optimum.
    pub sz: f64,
    /// `|⟨σ̂z⟩_f|`.
    pub best_value: f64,
    /// Best value after the grid scan, then after each start in order.
    pub trace: Vec<f64>,
    pub n_evals: usize,
    pub converged: bool,
}

impl OptimizationResult {
    pub fn block_params(&self) -> Option<BlockParams> {
        match self.objective {
            Objective::ThreePulse => None,
            _ => Some(BlockParams {
                p1: self.pulses[0],
                p2: self.pulses[1],
                tau: self.delays[0],
            }),
        }
    }

    /// The optimal protocol as an explicit sequence from the ergodic state.
    pub fn sequence(&self) -> PulseSequence {
        match self.objective {
            Objective::TwoPulse => PulseSequence::ergodic().then(0.0, self.pulses[0]).then(self.delays[0], self.pulses[1]),
            Objective::ThreePulse => PulseSequence::ergodic()
                .then(0.0, self.pulses[0])
                .then(self.delays[0], self.pulses[1])
                .then(self.delays[1], self.pulses[2]),
            Objective::Echo => echo_pulse_sequence(Preparation::Ergodic, self.delays[0], self.pulses[0], self.pulses[1]),
        }
    }

    pub fn total_delay(&self) -> f64 {
        self.delays.iter().sum()
    }
}

struct Candidate {
    pulses: Vec<Pulse>,
    delays: Vec<f64>,
    sz: f64,
    evals: usize,
    converged: bool,
}

impl Candidate {
    fn better_than(&self, other: &Candidate) -> bool {
        let (a, b) = (self.sz.abs(), other.sz.abs());
        a > b + TIE || ((a - b).abs() <= TIE && self.delays.iter().sum::<f64>() < other.delays.iter().sum::<f64>())
    }
}

/// Maximizes `|⟨σ̂z⟩_f|` for one block.
pub fn optimize_block<K: Kernel>(problem: &OptimizationProblem, cfg: &ModelConfig<K>) -> Result<OptimizationResult> {
    problem.validate()?;
    let kernels = &cfg.kernels;
    let omega = cfg.omega;
    let m_i = problem.initial_sz.unwrap_or_else(|| cfg.initial_polarization());
    let eval = |pulses: &[Pulse], delays: &[f64]| problem.evaluate(kernels, omega, m_i, pulses, delays);

    // Coarse scan.
    let tau_min = problem.tau_max * 1e-6;
    let ratio = (problem.tau_max / tau_min).powf(1.0 / (problem.grid_tau - 1) as f64);
    let grid: Vec<(f64, f64)> = (0..problem.grid_tau)
        .flat_map(|i| {
            let tau = tau_min * ratio.powi(i as i32);
            (0..problem.grid_alpha).map(move |j| (tau, 2.0 * PI * j as f64 / problem.grid_alpha as f64))
        })
        .collect();
    let n_delays = problem.objective.delays();
    let candidate = |tau: f64, alpha: f64| {
        let pulses = problem.seed_pulses(alpha);
        let delays = vec![tau; n_delays];
        let sz = eval(&pulses, &delays).unwrap_or(0.0);
        Candidate {
            pulses,
            delays,
            sz,
            evals: 1,
            converged: true,
        }
    };
    let mut scanned: Vec<Candidate> = grid.par_iter().map(|&(tau, alpha)| candidate(tau, alpha)).collect();
    // At the seed pulses the value is A cos α + B sin α, so the best phase
    // for each delay follows from two samples.
    let taus: Vec<f64> = grid.iter().step_by(problem.grid_alpha).map(|g| g.0).collect();
    let phased: Vec<Candidate> = taus
        .par_iter()
        .map(|&tau| {
            let a = candidate(tau, 0.0).sz;
            let b = candidate(tau, 0.5 * PI).sz;
            let mut c = candidate(tau, b.atan2(a));
            c.evals = 3;
            c
        })
        .collect();
    let mut grid_evals = scanned.len() + 3 * phased.len();
    scanned.extend(phased);
    // Doing nothing is always available and keeps the polarization.
    let identity = {
        let mut pulses = problem.seed_pulses(0.0);
        pulses.iter_mut().for_each(|p| *p = Pulse::identity());
        let delays = vec![tau_min; n_delays];
        grid_evals += 1;
        let sz = eval(&pulses, &delays)?;
        Candidate {
            pulses,
            delays,
            sz,
            evals: 1,
            converged: true,
        }
    };
    let mut ranked: Vec<&Candidate> = scanned.iter().chain(std::iter::once(&identity)).collect();
    ranked.sort_by(|a, b| {
        b.sz.abs()
            .total_cmp(&a.sz.abs())
            .then(a.delays.iter().sum::<f64>().total_cmp(&b.delays.iter().sum::<f64>()))
    });
    let grid_best = ranked[0];

    // Starting points: the best grid points, then random perturbations.
    let seeded = problem.starts.min(4).min(ranked.len());
    let mut x0s: Vec<Vec<f64>> = ranked[..seeded].iter().map(|c| problem.encode(&c.pulses, &c.delays)).collect();
    let base_ln_tau = grid_best.delays[0].ln();
    for s in seeded..problem.starts {
        let mut rng = ChaCha8Rng::seed_from_u64(problem.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(s as u64));
        let mut x = Vec::with_capacity(problem.objective.dimension());
        for _ in 0..problem.objective.pulses() {
            x.push(rng.random_range(0.0..PI));
            x.push(rng.random_range(0.0..2.0 * PI));
            x.push(rng.random_range(0.0..2.0 * PI));
        }
        for _ in 0..n_delays {
            x.push((base_ln_tau + rng.random_range(-2.0..2.0)).min(problem.tau_max.ln()));
        }
        x0s.push(x);
    }

    let opts = NelderMeadOptions {
        value_tol: problem.value_tol,
        param_tol: problem.param_tol,
        max_evals: problem.max_evals,
        step: 0.3,
    };
    let refined: Vec<Candidate> = x0s
        .par_iter()
        .map(|x0| {
            let m = minimize(
                |x| match problem.decode(x) {
                    Some((p, d)) => eval(&p, &d).map_or(f64::INFINITY, |v| -v.abs()),
                    None => f64::INFINITY,
                },
                x0,
                &opts,
            );
            let (pulses, delays) = problem.decode(&m.x).expect("finite optimum");
            // Re-evaluate from the stored physical parameters.
            let sz = eval(&pulses, &delays).unwrap_or(0.0);
            Candidate {
                pulses,
                delays,
                sz,
                evals: m.evals + 1,
                converged: m.converged,
            }
        })
        .collect();

    let mut best = grid_best;
    let mut trace = vec![best.sz.abs()];
    let mut n_evals = grid_evals;
    let mut converged = false;
    for c in &refined {
        n_evals += c.evals;
        if c.better_than(best) {
            best = c;
            converged = c.converged;
        }
        trace.push(best.sz.abs());
    }
    if std::ptr::eq(best, grid_best) {
        converged = refined.iter().any(|c| c.converged);
    }
    Ok(OptimizationResult {
        objective: problem.objective,
        initial_sz: m_i,
        pulses: best.pulses.clone(),
        delays: best.delays.clone(),
        sz: best.sz,
        best_value: best.sz.abs(),
        trace,
        n_evals,
        converged,
    })
}

/// Re-evaluates a result's stored parameters.
pub fn reevaluate<K: Kernel>(problem: &OptimizationProblem, cfg: &ModelConfig<K>, result: &OptimizationResult) -> Result<f64> {
    problem.evaluate(&cfg.kernels, cfg.omega, result.initial_sz, &result.pulses, &result.delays)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreedySchedule {
    /// Signed polarization `p_0, …, p_n`.
    pub trace: Vec<f64>,
    pub blocks: Vec<BlockParams>,
    pub converged: bool,
}

impl GreedySchedule {
    pub fn final_polarization(&self) -> f64 {
        self.trace.last().expect("non-empty trace").abs()
    }
}

/// Optimizes each block given the current polarization and applies it.
/// `template` supplies budgets and bounds; its objective is replaced by
/// `kind`.
pub fn greedy_schedule<K: Kernel>(
    cfg: &ModelConfig<K>,
    n_blocks: usize,
    kind: BlockKind,
    template: &OptimizationProblem,
) -> Result<GreedySchedule> {
    if n_blocks == 0 {
        return Err(invalid("n_blocks", "must be positive"));
    }
    let mut p = template.initial_sz.unwrap_or_else(|| cfg.initial_polarization());
    let mut trace = vec![p];
    let mut blocks = Vec::with_capacity(n_blocks);
    let mut converged = true;
    let mut problem = template.clone();
    problem.objective = kind.into();
    while blocks.len() < n_blocks {
        problem.initial_sz = Some(p);
        problem.seed = template.seed.wrapping_add(blocks.len() as u64);
        let r = optimize_block(&problem, cfg)?;
        converged &= r.converged;
        let (params, next) = if r.best_value >= p.abs() {
            (r.block_params().expect("block objective"), r.sz)
        } else {
            let id = BlockParams {
                p1: Pulse::identity(),
                p2: Pulse::identity(),
                tau: r.delays[0],
            };
            (id, p)
        };
        blocks.push(params);
        trace.push(next);
        if next == p {
            // Fixed point: the same block reproduces the same polarization.
            while blocks.len() < n_blocks {
                blocks.push(params);
                trace.push(next);
            }
        }
        p = next;
    }
    Ok(GreedySchedule { trace, blocks, converged })
}
