//! Bath influence functions.
//!
//! For a spectral density `J(ω)` at temperature `T` (units `ħ = k_B = 1`):
//!
//! * `F(t) = ∫ dω J(ω)/ω · (t - sin(ωt)/ω)` is the backreaction of the spin
//!   on the collective bath coordinate,
//! * `ξ(t) = ∫ dω J(ω) (1 - cos ωt)/ω² · coth(ω/2T)` is the decoherence
//!   exponent,
//! * `χ(t1, t2, t) = F(t2) - F(t1) + F(t1 + t) - F(t2 + t)`.
//!
//! Together `G(t) = ξ(t) - i F(t)` is the doubly integrated time-ordered
//! correlator of the bath noise, which is all the dynamics module needs.

use crate::error::{invalid, Error, Result};
use crate::quadrature::{self, Tolerance};
use crate::special::{ln_gamma, ln_gamma_real};
use num_complex::Complex64;
use parking_lot::Mutex;
use std::collections::HashMap;
use std::fmt;

/// One oscillator of a discrete bath: coupling `g` and frequency `omega`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub g: f64,
    pub omega: f64,
}

impl Mode {
    pub fn new(g: f64, omega: f64) -> Self {
        Self { g, omega }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpectralDensity {
    /// `J(ω) = γ ω exp(-ω/Γ)`.
    Ohmic { gamma: f64, cutoff: f64 },
    /// `J(ω) = (b_f/ω) θ(ω - Λ)`, with the upper cutoff sent to infinity.
    OneOverF { coupling: f64, infrared: f64 },
    /// `J(ω) = Σ g_k² δ(ω - ω_k)`.
    Discrete { modes: Vec<Mode> },
}

impl SpectralDensity {
    pub fn ohmic(gamma: f64, cutoff: f64) -> Result<Self> {
        let s = SpectralDensity::Ohmic { gamma, cutoff };
        s.validate()?;
        Ok(s)
    }

    /// 1/f bath from the dimensionless coupling `γ_f = b_f/Λ²` and `Λ`.
    pub fn one_over_f(gamma_f: f64, infrared: f64) -> Result<Self> {
        let s = SpectralDensity::OneOverF {
            coupling: gamma_f * infrared * infrared,
            infrared,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn discrete(modes: Vec<Mode>) -> Result<Self> {
        let s = SpectralDensity::Discrete { modes };
        s.validate()?;
        Ok(s)
    }

    pub fn name(&self) -> &'static str {
        match self {
            SpectralDensity::Ohmic { .. } => "ohmic",
            SpectralDensity::OneOverF { .. } => "one-over-f",
            SpectralDensity::Discrete { .. } => "discrete",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SpectralDensity::Ohmic { gamma, cutoff } => {
                if !(gamma.is_finite() && *gamma >= 0.0) {
                    return Err(invalid("gamma", format!("must be finite and >= 0, got {gamma}")));
                }
                if !(cutoff.is_finite() && *cutoff > 0.0) {
                    return Err(invalid("cutoff", format!("must be finite and > 0, got {cutoff}")));
                }
            }
            SpectralDensity::OneOverF { coupling, infrared } => {
                if !(coupling.is_finite() && *coupling >= 0.0) {
                    return Err(invalid("coupling", format!("must be finite and >= 0, got {coupling}")));
                }
                if !(infrared.is_finite() && *infrared > 0.0) {
                    return Err(invalid(
                        "infrared",
                        format!("infrared cutoff must be > 0 (ξ diverges otherwise), got {infrared}"),
                    ));
                }
            }
            SpectralDensity::Discrete { modes } => {
                for m in modes {
                    if !m.g.is_finite() {
                        return Err(invalid("g", format!("mode coupling must be finite, got {}", m.g)));
                    }
                    if !(m.omega.is_finite() && m.omega > 0.0) {
                        return Err(invalid("omega", format!("mode frequency must be > 0, got {}", m.omega)));
                    }
                }
            }
        }
        Ok(())
    }

    /// Pointwise `J(ω)`. For discrete baths this is zero almost everywhere
    /// and the weights live in the delta functions.
    pub fn density(&self, omega: f64) -> f64 {
        if omega <= 0.0 {
            return 0.0;
        }
        match self {
            SpectralDensity::Ohmic { gamma, cutoff } => gamma * omega * (-omega / cutoff).exp(),
            SpectralDensity::OneOverF { coupling, infrared } => {
                if omega >= *infrared {
                    coupling / omega
                } else {
                    0.0
                }
            }
            SpectralDensity::Discrete { .. } => 0.0,
        }
    }

    /// `Θ = T/Γ` (ohmic) or `Θ_f = T/Λ` (1/f).
    pub fn dimensionless_temperature(&self, temperature: f64) -> Option<f64> {
        match self {
            SpectralDensity::Ohmic { cutoff, .. } => Some(temperature / cutoff),
            SpectralDensity::OneOverF { infrared, .. } => Some(temperature / infrared),
            SpectralDensity::Discrete { .. } => None,
        }
    }

    /// `γ_f = b_f/Λ²` for the 1/f bath.
    pub fn gamma_f(&self) -> Option<f64> {
        match self {
            SpectralDensity::OneOverF { coupling, infrared } => Some(coupling / (infrared * infrared)),
            _ => None,
        }
    }
}

/// Which evaluator backs a [`BathKernels`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Backend {
    ClosedForm,
    Quadrature,
    DiscreteSum,
}

/// Interface the dynamics code consumes. Implemented by [`BathKernels`];
/// tests also implement it with synthetic kernels.
pub trait Kernel: Send + Sync {
    fn temperature(&self) -> f64;

    fn big_f(&self, t: f64) -> Result<f64>;

    fn xi(&self, t: f64) -> Result<f64>;

    /// `lim_{t→∞} dF/dt = ∫ dω J(ω)/ω`. Needed for the ergodic preparation.
    fn backreaction_rate(&self) -> Result<f64>;

    fn chi(&self, t1: f64, t2: f64, t: f64) -> Result<f64> {
        if t == 0.0 {
            return Ok(0.0);
        }
        Ok(self.big_f(t2)? - self.big_f(t1)? + self.big_f(t1 + t)? - self.big_f(t2 + t)?)
    }

    /// Limit of `F(b + s) - F(a + s) - F(b) + F(a)` for `s → ∞`, i.e.
    /// `(b - a) Ḟ(∞) - F(b) + F(a)`.
    fn ergodic_shift(&self, a: f64, b: f64) -> Result<f64> {
        Ok((b - a) * self.backreaction_rate()? - self.big_f(b)? + self.big_f(a)?)
    }

    /// `G(t) = ξ(t) - i F(t)`.
    fn g(&self, t: f64) -> Result<Complex64> {
        Ok(Complex64::new(self.xi(t)?, -self.big_f(t)?))
    }
}

impl<K: Kernel + ?Sized> Kernel for &K {
    fn temperature(&self) -> f64 {
        (**self).temperature()
    }
    fn big_f(&self, t: f64) -> Result<f64> {
        (**self).big_f(t)
    }
    fn xi(&self, t: f64) -> Result<f64> {
        (**self).xi(t)
    }
    fn backreaction_rate(&self) -> Result<f64> {
        (**self).backreaction_rate()
    }
    fn chi(&self, t1: f64, t2: f64, t: f64) -> Result<f64> {
        (**self).chi(t1, t2, t)
    }
    fn ergodic_shift(&self, a: f64, b: f64) -> Result<f64> {
        (**self).ergodic_shift(a, b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Quantity {
    F,
    Xi,
    Deficit,
}

const CACHE_LIMIT: usize = 1 << 16;

/// Evaluators for `F`, `ξ`, `χ` of a spectral density at fixed temperature.
pub struct BathKernels {
    spectral: SpectralDensity,
    temperature: f64,
    backend: Backend,
    tolerance: Tolerance,
    cache: Mutex<HashMap<(Quantity, u64), f64>>,
}

impl Clone for BathKernels {
    fn clone(&self) -> Self {
        Self {
            spectral: self.spectral.clone(),
            temperature: self.temperature,
            backend: self.backend,
            tolerance: self.tolerance,
            cache: Mutex::new(HashMap::new()),
        }
    }
}

impl fmt::Debug for BathKernels {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BathKernels")
            .field("spectral", &self.spectral)
            .field("temperature", &self.temperature)
            .field("backend", &self.backend)
            .field("tolerance", &self.tolerance)
            .finish()
    }
}

impl BathKernels {
    /// Kernels with the natural backend for the spectral density: closed
    /// forms for ohmic, quadrature for 1/f, finite sums for discrete modes.
    pub fn new(spectral: SpectralDensity, temperature: f64) -> Result<Self> {
        let backend = match spectral {
            SpectralDensity::Ohmic { .. } => Backend::ClosedForm,
            SpectralDensity::OneOverF { .. } => Backend::Quadrature,
            SpectralDensity::Discrete { .. } => Backend::DiscreteSum,
        };
        Self::with_backend(spectral, temperature, backend)
    }

    pub fn with_backend(spectral: SpectralDensity, temperature: f64, backend: Backend) -> Result<Self> {
        spectral.validate()?;
        if !(temperature >= 0.0) || temperature.is_infinite() {
            return Err(invalid("temperature", format!("must be finite and >= 0, got {temperature}")));
        }
        let ok = matches!(
            (&spectral, backend),
            (SpectralDensity::Ohmic { .. }, Backend::ClosedForm | Backend::Quadrature)
                | (SpectralDensity::OneOverF { .. }, Backend::Quadrature)
                | (SpectralDensity::Discrete { .. }, Backend::DiscreteSum)
        );
        if !ok {
            return Err(Error::Unsupported(format!(
                "{backend:?} backend for the {} spectral density",
                spectral.name()
            )));
        }
        Ok(Self {
            spectral,
            temperature,
            backend,
            tolerance: Tolerance::default(),
            cache: Mutex::new(HashMap::new()),
        })
    }

    /// Ohmic kernels from `γ`, `Γ` and the dimensionless temperature `Θ`.
    pub fn ohmic(gamma: f64, cutoff: f64, theta: f64) -> Result<Self> {
        Self::new(SpectralDensity::ohmic(gamma, cutoff)?, theta * cutoff)
    }

    /// 1/f kernels from `γ_f`, `Λ` and `Θ_f = T/Λ`.
    pub fn one_over_f(gamma_f: f64, infrared: f64, theta_f: f64) -> Result<Self> {
        Self::new(SpectralDensity::one_over_f(gamma_f, infrared)?, theta_f * infrared)
    }

    pub fn with_tolerance(mut self, tolerance: Tolerance) -> Self {
        self.tolerance = tolerance;
        self.cache.lock().clear();
        self
    }

    pub fn spectral(&self) -> &SpectralDensity {
        &self.spectral
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn tolerance(&self) -> Tolerance {
        self.tolerance
    }

    /// `T₂ = 1/(2γT)`, the exponential-regime coherence time of an ohmic bath.
    pub fn coherence_time(&self) -> Result<f64> {
        match self.spectral {
            SpectralDensity::Ohmic { gamma, .. } => {
                if gamma <= 0.0 || self.temperature <= 0.0 {
                    return Err(invalid("gamma/temperature", "T₂ is infinite for γ = 0 or T = 0"));
                }
                Ok(1.0 / (2.0 * gamma * self.temperature))
            }
            _ => Err(Error::NoClosedFormT2(self.spectral.name())),
        }
    }

    fn check_time(t: f64) -> Result<()> {
        if t >= 0.0 && t.is_finite() {
            Ok(())
        } else {
            Err(invalid("t", format!("time must be finite and >= 0, got {t}")))
        }
    }

    fn cached(&self, q: Quantity, t: f64, eval: impl FnOnce() -> Result<f64>) -> Result<f64> {
        let key = (q, t.to_bits());
        if let Some(v) = self.cache.lock().get(&key) {
            return Ok(*v);
        }
        let v = eval()?;
        let mut cache = self.cache.lock();
        if cache.len() >= CACHE_LIMIT {
            cache.clear();
        }
        cache.insert(key, v);
        Ok(v)
    }

    fn ohmic_quadrature(&self, q: Quantity, t: f64) -> Result<f64> {
        let SpectralDensity::Ohmic { gamma, cutoff } = self.spectral else {
            unreachable!("ohmic quadrature on non-ohmic density")
        };
        let s = cutoff * t;
        let theta = self.temperature / cutoff;
        const U_MAX: f64 = 60.0;
        let pts = quadrature::oscillation_breakpoints(0.0, U_MAX, s, 50.0);
        let est = match q {
            Quantity::F => quadrature::integrate(|u| (-u).exp() * x_minus_sin(u * s) / u, &pts, self.tolerance)?,
            Quantity::Xi => quadrature::integrate(
                |u| (-u).exp() * one_minus_cos(u * s) / u * coth_half(u, theta),
                &pts,
                self.tolerance,
            )?,
            Quantity::Deficit => quadrature::integrate(|u| (-u).exp() * (u * s).sin() / u, &pts, self.tolerance)?,
        };
        Ok(gamma * est.value)
    }

    fn one_over_f_quadrature(&self, q: Quantity, t: f64) -> Result<f64> {
        let SpectralDensity::OneOverF { coupling, infrared } = self.spectral else {
            unreachable!("1/f quadrature on non-1/f density")
        };
        let gamma_f = coupling / (infrared * infrared);
        let s = infrared * t;
        let theta = self.temperature / infrared;
        // Beyond `upper` coth(u/2Θ) = 1 to double precision and the
        // oscillatory remainder is summed by its asymptotic series.
        let upper = (200.0 / s).max(80.0 * theta).max(10.0);
        let pts = quadrature::oscillation_breakpoints(1.0, upper, s, 50.0);
        let tail = OscillatoryTail::new(s, upper);
        let value = match q {
            Quantity::F => {
                let body = quadrature::integrate(|u| x_minus_sin(u * s) / (u * u * u), &pts, self.tolerance)?;
                body.value + s / upper - tail.sin3
            }
            Quantity::Xi => {
                let body = quadrature::integrate(
                    |u| one_minus_cos(u * s) / (u * u * u) * coth_half(u, theta),
                    &pts,
                    self.tolerance,
                )?;
                body.value + 0.5 / (upper * upper) - tail.cos3
            }
            Quantity::Deficit => {
                let body = quadrature::integrate(|u| (u * s).sin() / (u * u * u), &pts, self.tolerance)?;
                body.value + tail.sin3
            }
        };
        Ok(gamma_f * value)
    }

    fn discrete_sum(&self, q: Quantity, t: f64) -> f64 {
        let SpectralDensity::Discrete { modes } = &self.spectral else {
            unreachable!("discrete sum on continuous density")
        };
        modes
            .iter()
            .map(|m| {
                let w = m.omega;
                let g2 = m.g * m.g;
                match q {
                    Quantity::F => g2 * x_minus_sin(w * t) / (w * w),
                    Quantity::Xi => g2 * one_minus_cos(w * t) / (w * w) * coth_half(w, self.temperature),
                    Quantity::Deficit => g2 * (w * t).sin() / (w * w),
                }
            })
            .sum()
    }

    fn evaluate(&self, q: Quantity, t: f64) -> Result<f64> {
        match (self.backend, &self.spectral) {
            (Backend::ClosedForm, SpectralDensity::Ohmic { gamma, cutoff }) => {
                let s = cutoff * t;
                Ok(match q {
                    Quantity::F => gamma * x_minus_atan(s),
                    Quantity::Xi => ohmic_xi(*gamma, s, self.temperature / cutoff),
                    Quantity::Deficit => gamma * s.atan(),
                })
            }
            (Backend::Quadrature, SpectralDensity::Ohmic { .. }) => self.cached(q, t, || self.ohmic_quadrature(q, t)),
            (Backend::Quadrature, SpectralDensity::OneOverF { .. }) => {
                self.cached(q, t, || self.one_over_f_quadrature(q, t))
            }
            (Backend::DiscreteSum, SpectralDensity::Discrete { .. }) => Ok(self.discrete_sum(q, t)),
            _ => unreachable!("backend/spectral pairing validated at construction"),
        }
    }

    /// `t Ḟ(∞) - F(t)`, evaluated without cancellation where possible.
    pub fn rate_deficit(&self, t: f64) -> Result<f64> {
        Self::check_time(t)?;
        if t == 0.0 {
            return Ok(0.0);
        }
        if let SpectralDensity::Discrete { .. } = self.spectral {
            return Err(Error::NoErgodicLimit("discrete"));
        }
        self.evaluate(Quantity::Deficit, t)
    }
}

impl Kernel for BathKernels {
    fn temperature(&self) -> f64 {
        self.temperature
    }

    fn big_f(&self, t: f64) -> Result<f64> {
        Self::check_time(t)?;
        if t == 0.0 {
            return Ok(0.0);
        }
        self.evaluate(Quantity::F, t)
    }

    fn xi(&self, t: f64) -> Result<f64> {
        Self::check_time(t)?;
        if t == 0.0 {
            return Ok(0.0);
        }
        self.evaluate(Quantity::Xi, t)
    }

    fn backreaction_rate(&self) -> Result<f64> {
        match self.spectral {
            SpectralDensity::Ohmic { gamma, cutoff } => Ok(gamma * cutoff),
            SpectralDensity::OneOverF { coupling, infrared } => Ok(coupling / infrared),
            SpectralDensity::Discrete { .. } => Err(Error::NoErgodicLimit("discrete")),
        }
    }

    fn ergodic_shift(&self, a: f64, b: f64) -> Result<f64> {
        Ok(self.rate_deficit(b)? - self.rate_deficit(a)?)
    }
}

/// Ohmic `ξ` in closed form; `s = Γt`, `theta = T/Γ`.
fn ohmic_xi(gamma: f64, s: f64, theta: f64) -> f64 {
    if theta == 0.0 {
        return 0.5 * gamma * (s * s).ln_1p();
    }
    let z = Complex64::new(1.0 + theta, theta * s);
    gamma * (2.0 * ln_gamma_real(1.0 + theta) + 0.5 * (s * s).ln_1p() - 2.0 * ln_gamma(z).re)
}

/// `x - sin x` without cancellation for small `x`.
pub(crate) fn x_minus_sin(x: f64) -> f64 {
    if x.abs() < 0.1 {
        let x2 = x * x;
        x * x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0 * (1.0 - x2 / 72.0 * (1.0 - x2 / 110.0))))
    } else {
        x - x.sin()
    }
}

/// `x - atan x` without cancellation for small `x`.
fn x_minus_atan(x: f64) -> f64 {
    if x.abs() < 0.05 {
        let x2 = x * x;
        let mut term = x * x2;
        let mut sum = 0.0;
        for k in 0..8 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * term / (2 * k + 3) as f64;
            term *= x2;
        }
        sum
    } else {
        x - x.atan()
    }
}

pub(crate) fn one_minus_cos(x: f64) -> f64 {
    let h = (0.5 * x).sin();
    2.0 * h * h
}

/// `coth(ω / 2T)`, with `T = 0` mapped to 1 and the small-argument pole
/// expanded as `1/x + x/3`.
pub(crate) fn coth_half(omega: f64, temperature: f64) -> f64 {
    if temperature == 0.0 {
        return 1.0;
    }
    let x = omega / (2.0 * temperature);
    if x < 1e-4 {
        1.0 / x + x / 3.0
    } else {
        1.0 / x.tanh()
    }
}

/// `∫_U^∞ sin(su)/u³ du` and `∫_U^∞ cos(su)/u³ du` by repeated
/// integration by parts; accurate once `sU ≳ 100`.
struct OscillatoryTail {
    sin3: f64,
    cos3: f64,
}

impl OscillatoryTail {
    fn new(s: f64, upper: f64) -> Self {
        // E_k = ∫_U^∞ e^{isu} u^{-k} du = i e^{isU}/(s U^k) - (i k / s) E_{k+1}
        let phase = Complex64::from_polar(1.0, s * upper);
        let i = Complex64::i();
        let mut acc = Complex64::new(0.0, 0.0);
        let mut factor = Complex64::new(1.0, 0.0);
        for k in 3..9 {
            let term = i * phase / (s * upper.powi(k));
            acc += factor * term;
            factor *= -i * (k as f64) / s;
        }
        Self {
            sin3: acc.im,
            cos3: acc.re,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn ohmic_f_closed_form_values() {
        let k = BathKernels::ohmic(1.0, 1.0, 0.0).unwrap();
        assert_eq!(k.big_f(0.0).unwrap(), 0.0);
        assert_relative_eq!(k.big_f(1.0).unwrap(), 1.0 - PI / 4.0, max_relative = 1e-15);
    }

    #[test]
    fn ohmic_f_quadrature_matches_closed_form() {
        let sd = SpectralDensity::ohmic(2.0, 3.0).unwrap();
        let k = BathKernels::with_backend(sd, 0.0, Backend::Quadrature).unwrap();
        let expected = 2.0 * (2.1 - 2.1_f64.atan());
        assert!((k.big_f(0.7).unwrap() - expected).abs() < 1e-9);
    }

    #[test]
    fn ohmic_xi_zero_temperature() {
        let k = BathKernels::ohmic(1.0, 1.0, 0.0).unwrap();
        assert_relative_eq!(k.xi(1.0).unwrap(), 0.5 * 2.0_f64.ln(), max_relative = 1e-15);
        assert_eq!(k.xi(0.0).unwrap(), 0.0);
    }

    #[test]
    fn ohmic_xi_closed_form_matches_quadrature_at_theta_one() {
        let closed = BathKernels::ohmic(1.0, 1.0, 1.0).unwrap();
        let quad =
            BathKernels::with_backend(SpectralDensity::ohmic(1.0, 1.0).unwrap(), 1.0, Backend::Quadrature).unwrap();
        let a = closed.xi(2.0).unwrap();
        let b = quad.xi(2.0).unwrap();
        assert!((a - b).abs() <= 1e-8 * a.abs(), "{a} vs {b}");
    }

    #[test]
    fn chi_vanishes_at_zero_shift_and_has_ergodic_limit() {
        let k = BathKernels::ohmic(1.0, 1.0, 0.3).unwrap();
        assert_eq!(k.chi(0.2, 0.9, 0.0).unwrap(), 0.0);
        let c = k.chi(0.0, 1.0, 1e4).unwrap();
        assert!((c + PI / 4.0).abs() < 1e-3, "{c}");
    }

    #[test]
    fn discrete_chi_is_four_term_single_mode_sum() {
        let k = BathKernels::new(SpectralDensity::discrete(vec![Mode::new(0.1, 1.0)]).unwrap(), 0.0).unwrap();
        let f = |t: f64| 0.01 * (t - t.sin());
        let expected = f(1.0) - f(0.0) + f(1.0) - f(2.0);
        assert_relative_eq!(k.chi(0.0, 1.0, 1.0).unwrap(), expected, max_relative = 1e-14);
    }

    #[test]
    fn coherence_time_formula_and_guards() {
        assert_relative_eq!(BathKernels::ohmic(1.0, 1.0, 0.1).unwrap().coherence_time().unwrap(), 5.0);
        assert_relative_eq!(BathKernels::ohmic(10.0, 1.0, 1.0).unwrap().coherence_time().unwrap(), 0.05);
        assert!(BathKernels::ohmic(0.0, 1.0, 1.0).unwrap().coherence_time().is_err());
        let f = BathKernels::one_over_f(1e4, 1.0, 100.0).unwrap();
        assert!(matches!(f.coherence_time(), Err(Error::NoClosedFormT2(_))));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(BathKernels::ohmic(1.0, 1.0, -0.1).is_err());
        assert!(SpectralDensity::one_over_f(1.0, 0.0).is_err());
        assert!(SpectralDensity::ohmic(1.0, 0.0).is_err());
        let k = BathKernels::ohmic(1.0, 1.0, 0.1).unwrap();
        assert!(k.big_f(-1.0).is_err());
        assert!(BathKernels::with_backend(SpectralDensity::one_over_f(1.0, 1.0).unwrap(), 1.0, Backend::ClosedForm).is_err());
    }

    #[test]
    fn one_over_f_deficit_matches_sine_integral_form() {
        // γ_f s² ∫_s^∞ sin x/x³ dx with the closed antiderivative at s = 1e-2.
        let k = BathKernels::one_over_f(1e4, 1.0, 100.0).unwrap();
        let s: f64 = 1e-2;
        // ∫_s^∞ sin x / x³ dx = sin s/(2s²) + cos s/(2s) - (π/2 - Si(s))/2
        let si = {
            // Si(s) series, s small
            let mut sum = 0.0;
            let mut term = s;
            for n in 0..10 {
                sum += term / (2 * n + 1) as f64;
                term *= -s * s / ((2 * n + 2) * (2 * n + 3)) as f64;
            }
            sum
        };
        let integral = s.sin() / (2.0 * s * s) + s.cos() / (2.0 * s) - 0.5 * (PI / 2.0 - si);
        let expected = 1e4 * s * s * integral;
        let got = k.rate_deficit(s).unwrap();
        assert_relative_eq!(got, expected, max_relative = 1e-8);
    }

    #[test]
    fn series_helpers_agree_with_direct_forms() {
        for &x in &[0.09, 0.11, 0.04, 0.06] {
            assert_relative_eq!(x_minus_sin(x), x - x.sin(), max_relative = 1e-9);
            assert_relative_eq!(x_minus_atan(x), x - x.atan(), max_relative = 1e-9);
        }
        assert_relative_eq!(coth_half(2e-4 * 0.999, 1.0), 1.0 / (1e-4 * 0.999_f64).tanh(), max_relative = 1e-12);
    }
}
