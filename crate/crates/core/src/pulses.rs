//! Instantaneous SU(2) pulses and pulse sequences.
//!
//! A pulse is stored as `(ϑ, φ, ψ)` with
//!
//! ```text
//!     U = [  e^{-iφ} cos ϑ   -e^{-iψ} sin ϑ ]
//!         [  e^{ iψ} sin ϑ    e^{ iφ} cos ϑ ]
//! ```
//!
//! acting on observables as `A ↦ U A U†`. The corresponding state update is
//! `ρ ↦ U† ρ U`.

use crate::error::{invalid, Error, Result};
use nalgebra::{Matrix2, Matrix3, Vector3};
use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};
use std::fmt;
use std::str::FromStr;

/// What `Pulse::new` had to change to bring its inputs into canonical range.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Normalization {
    /// `ϑ` was shifted by a multiple of `π`; the stored `U` differs from the
    /// requested one by an overall sign (same action on observables).
    pub global_sign: bool,
    /// `ϑ` was reflected to `π - ϑ` with `φ ↦ φ + π` (identical `U`).
    pub theta_reflected: bool,
    /// `φ` or `ψ` was wrapped into `[0, 2π)`.
    pub phases_wrapped: bool,
}

impl Normalization {
    pub fn is_identity(&self) -> bool {
        *self == Normalization::default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pulse {
    theta: f64,
    phi: f64,
    psi: f64,
    normalization: Normalization,
}

fn wrap_phase(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2π for tiny negative inputs.
    if r >= TAU {
        0.0
    } else {
        r
    }
}

impl Pulse {
    /// Builds a pulse, mapping `ϑ` into `[0, π/2]` and the phases into
    /// `[0, 2π)`. Non-finite inputs are rejected.
    pub fn new(theta: f64, phi: f64, psi: f64) -> Result<Self> {
        if !(theta.is_finite() && phi.is_finite() && psi.is_finite()) {
            return Err(invalid("pulse", format!("non-finite angles ({theta}, {phi}, {psi})")));
        }
        let mut norm = Normalization::default();
        let mut th = theta.rem_euclid(TAU);
        if th >= TAU {
            th = 0.0;
        }
        let mut ph = phi;
        if th >= PI {
            th -= PI;
            norm.global_sign = true;
        }
        if th > FRAC_PI_2 {
            th = PI - th;
            ph += PI;
            norm.theta_reflected = true;
        }
        let ph_w = wrap_phase(ph);
        let ps_w = wrap_phase(psi);
        if ph_w != ph || ps_w != psi {
            norm.phases_wrapped = true;
        }
        // Undo the flag when the shift was only the reflection's +π landing in range.
        if norm.theta_reflected && ph_w == ph && ps_w == psi {
            norm.phases_wrapped = false;
        }
        Ok(Self {
            theta: th,
            phi: ph_w,
            psi: ps_w,
            normalization: norm,
        })
    }

    pub fn identity() -> Self {
        Self::new(0.0, 0.0, 0.0).expect("finite")
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
    pub fn phi(&self) -> f64 {
        self.phi
    }
    pub fn psi(&self) -> f64 {
        self.psi
    }
    pub fn normalization(&self) -> Normalization {
        self.normalization
    }
    pub fn params(&self) -> [f64; 3] {
        [self.theta, self.phi, self.psi]
    }

    /// The 2×2 matrix `U(ϑ, φ, ψ)` in the `(↑, ↓)` basis of `σ̂z`.
    pub fn matrix(&self) -> Matrix2<Complex64> {
        let (s, c) = self.theta.sin_cos();
        let e = |x: f64| Complex64::from_polar(1.0, x);
        Matrix2::new(e(-self.phi) * c, -e(-self.psi) * s, e(self.psi) * s, e(self.phi) * c)
    }

    /// `A` with `U σ_a U† = Σ_b A_ab σ_b`, `a, b ∈ {x, y, z}`.
    pub fn adjoint_action(&self) -> Matrix3<f64> {
        adjoint_of(&self.matrix())
    }

    /// Applies the pulse to a Bloch vector of expectation values: the vector
    /// `⟨σ⟩` after the pulse in the Schrödinger picture.
    pub fn rotate_bloch(&self, v: &Vector3<f64>) -> Vector3<f64> {
        // ⟨σ_b⟩' = Tr(U† ρ U σ_b) = Tr(ρ U σ_b U†) = Σ_c A_bc ⟨σ_c⟩
        self.adjoint_action() * v
    }
}

impl Default for Pulse {
    fn default() -> Self {
        Self::identity()
    }
}

pub(crate) fn pauli() -> [Matrix2<Complex64>; 3] {
    let o = Complex64::new(0.0, 0.0);
    let l = Complex64::new(1.0, 0.0);
    let i = Complex64::i();
    [Matrix2::new(o, l, l, o), Matrix2::new(o, -i, i, o), Matrix2::new(l, o, o, -l)]
}

/// Adjoint action of an arbitrary 2×2 unitary.
pub fn adjoint_of(u: &Matrix2<Complex64>) -> Matrix3<f64> {
    let s = pauli();
    let ud = u.adjoint();
    Matrix3::from_fn(|a, b| {
        let m = u * s[a] * ud * s[b];
        0.5 * m.trace().re
    })
}

/// Pulses with a fixed role in the cooling protocols.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NamedPulse {
    /// `σz → σy`, `σy → -σz`, `σx → σx`.
    HalfPiX,
    /// `σz → σx`, `σx → -σz`, `σy → σy`.
    MinusHalfPiY,
    /// `σy,z → -σy,z`, `σx → σx`.
    PiX,
    Identity,
}

impl NamedPulse {
    pub const ALL: [NamedPulse; 4] = [
        NamedPulse::HalfPiX,
        NamedPulse::MinusHalfPiY,
        NamedPulse::PiX,
        NamedPulse::Identity,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            NamedPulse::HalfPiX => "half-pi-x",
            NamedPulse::MinusHalfPiY => "minus-half-pi-y",
            NamedPulse::PiX => "pi-x",
            NamedPulse::Identity => "identity",
        }
    }

    pub fn pulse(&self) -> Pulse {
        let (t, f, p) = match self {
            NamedPulse::HalfPiX => (FRAC_PI_4, 0.0, FRAC_PI_2),
            NamedPulse::MinusHalfPiY => (FRAC_PI_4, 0.0, 0.0),
            NamedPulse::PiX => (FRAC_PI_2, 0.0, 3.0 * FRAC_PI_2),
            NamedPulse::Identity => (0.0, 0.0, 0.0),
        };
        Pulse::new(t, f, p).expect("finite")
    }

    /// The adjoint action this pulse is defined by.
    pub fn expected_action(&self) -> Matrix3<f64> {
        match self {
            NamedPulse::HalfPiX => Matrix3::new(1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0),
            NamedPulse::MinusHalfPiY => Matrix3::new(0.0, 0.0, -1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0),
            NamedPulse::PiX => Matrix3::new(1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, -1.0),
            NamedPulse::Identity => Matrix3::identity(),
        }
    }
}

impl FromStr for NamedPulse {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        NamedPulse::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::UnknownPulse(s.to_string()))
    }
}

/// Pulse by name, validated against its defining adjoint action.
pub fn named_pulse(name: &str) -> Result<Pulse> {
    let named: NamedPulse = name.parse()?;
    let p = named.pulse();
    let diff = (p.adjoint_action() - named.expected_action()).abs().max();
    if diff > 1e-12 {
        return Err(Error::Unsupported(format!("pulse `{name}` realization is off by {diff:e}")));
    }
    Ok(p)
}

/// How the spin and bath are prepared before the first pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Preparation {
    /// Factorized state at `t = 0`, then free evolution for `delay`.
    Delay(f64),
    /// The `delay → ∞` limit: spin and bath in joint equilibrium.
    Ergodic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Step {
    /// Wait `delay`, then apply `pulse`.
    Pulse { delay: f64, pulse: Pulse },
    /// Wait long enough for coherences to vanish and the bath to
    /// re-equilibrate; `⟨σz⟩` is kept.
    Reset,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulseSequence {
    pub prep: Preparation,
    pub steps: Vec<Step>,
    /// Free evolution after the last step.
    pub final_delay: f64,
}

impl PulseSequence {
    pub fn new(prep: Preparation) -> Self {
        Self {
            prep,
            steps: Vec::new(),
            final_delay: 0.0,
        }
    }

    pub fn ergodic() -> Self {
        Self::new(Preparation::Ergodic)
    }

    pub fn with_prep_delay(t: f64) -> Self {
        Self::new(Preparation::Delay(t))
    }

    /// Appends "wait `delay`, then apply `pulse`".
    pub fn then(mut self, delay: f64, pulse: Pulse) -> Self {
        self.steps.push(Step::Pulse { delay, pulse });
        self
    }

    pub fn reset(mut self) -> Self {
        self.steps.push(Step::Reset);
        self
    }

    pub fn wait(mut self, delay: f64) -> Self {
        self.final_delay += delay;
        self
    }

    pub fn pulse_count(&self) -> usize {
        self.steps.iter().filter(|s| matches!(s, Step::Pulse { .. })).count()
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |d: f64| d.is_finite() && d >= 0.0;
        if let Preparation::Delay(t) = self.prep {
            if !ok(t) {
                return Err(invalid("prep_delay", format!("must be finite and >= 0, got {t}")));
            }
        }
        for s in &self.steps {
            if let Step::Pulse { delay, .. } = s {
                if !ok(*delay) {
                    return Err(invalid("delay", format!("must be finite and >= 0, got {delay}")));
                }
            }
        }
        if !ok(self.final_delay) {
            return Err(invalid("final_delay", format!("must be finite and >= 0, got {}", self.final_delay)));
        }
        Ok(())
    }

    /// Validation for runs meant to cool: additionally requires a pulse.
    pub fn validate_for_cooling(&self) -> Result<()> {
        self.validate()?;
        if self.pulse_count() == 0 {
            return Err(invalid("steps", "a cooling sequence needs at least one pulse"));
        }
        Ok(())
    }
}

impl fmt::Display for PulseSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.prep {
            Preparation::Ergodic => write!(f, "prep:ergodic")?,
            Preparation::Delay(t) => write!(f, "prep:{t}")?,
        }
        for s in &self.steps {
            match s {
                Step::Pulse { delay, pulse } => {
                    if *delay != 0.0 {
                        write!(f, " wait:{delay}")?;
                    }
                    write!(f, " pulse:{},{},{}", pulse.theta, pulse.phi, pulse.psi)?;
                }
                Step::Reset => write!(f, " reset")?,
            }
        }
        if self.final_delay != 0.0 {
            write!(f, " wait:{}", self.final_delay)?;
        }
        Ok(())
    }
}

/// Parses the textual sequence format:
///
/// ```text
/// prep:ergodic | prep:<t>       (optional, first token; default ergodic)
/// wait:<d>                      accumulate free evolution
/// pulse:<theta>,<phi>,<psi>     explicit pulse
/// half-pi-x | minus-half-pi-y | pi-x | identity
/// reset
/// ```
///
/// Tokens are separated by whitespace or `;`.
impl FromStr for PulseSequence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let num = |tok: &str, v: &str| -> Result<f64> {
            v.trim()
                .parse::<f64>()
                .map_err(|_| invalid("sequence", format!("bad number `{v}` in `{tok}`")))
        };
        let mut seq = PulseSequence::ergodic();
        let mut pending = 0.0;
        for (i, tok) in s.split(|c: char| c.is_whitespace() || c == ';').filter(|t| !t.is_empty()).enumerate() {
            if let Some(v) = tok.strip_prefix("prep:") {
                if i != 0 {
                    return Err(invalid("sequence", "`prep:` must be the first token"));
                }
                seq.prep = if v == "ergodic" {
                    Preparation::Ergodic
                } else {
                    Preparation::Delay(num(tok, v)?)
                };
            } else if let Some(v) = tok.strip_prefix("wait:") {
                pending += num(tok, v)?;
            } else if let Some(v) = tok.strip_prefix("pulse:") {
                let parts: Vec<&str> = v.split(',').collect();
                if parts.len() != 3 {
                    return Err(invalid("sequence", format!("`{tok}` needs three angles")));
                }
                let p = Pulse::new(num(tok, parts[0])?, num(tok, parts[1])?, num(tok, parts[2])?)?;
                seq.steps.push(Step::Pulse { delay: pending, pulse: p });
                pending = 0.0;
            } else if tok == "reset" {
                if pending != 0.0 {
                    return Err(invalid("sequence", "a wait directly before `reset` has no effect"));
                }
                seq.steps.push(Step::Reset);
            } else {
                let p = named_pulse(tok)?;
                seq.steps.push(Step::Pulse { delay: pending, pulse: p });
                pending = 0.0;
            }
        }
        seq.final_delay = pending;
        seq.validate()?;
        Ok(seq)
    }
}
