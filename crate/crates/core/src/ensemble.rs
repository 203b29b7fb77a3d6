//! Averages over an inhomogeneously broadened ensemble with Gaussian
//! `P(Ω) ∝ exp(-(Ω - Ω₀)²/2d)`.

use crate::dynamics::{echo_from, initial_polarization, two_pulse_from};
use crate::error::{invalid, Error, Result};
use crate::kernels::Kernel;
use crate::pulses::{Preparation, Pulse};
use crate::quadrature::{integrate, Tolerance};
use crate::special::gauss_hermite;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Gauss-Hermite order used when `tanh` is smooth on the scale of the
/// distribution.
pub const HERMITE_NODES: usize = 32;

// Standard-normal mass beyond this many deviations is below 1e-300.
const TAIL: f64 = 38.0;
const MAX_PANELS: usize = 400_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleSpec {
    pub omega0: f64,
    pub dispersion: f64,
}

impl EnsembleSpec {
    pub fn new(omega0: f64, dispersion: f64) -> Result<Self> {
        let s = Self { omega0, dispersion };
        s.validate()?;
        Ok(s)
    }

    pub fn single(omega: f64) -> Self {
        Self {
            omega0: omega,
            dispersion: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega0.is_finite() && self.omega0 >= 0.0) {
            return Err(invalid("omega0", format!("must be finite and >= 0, got {}", self.omega0)));
        }
        if !(self.dispersion.is_finite() && self.dispersion >= 0.0) {
            return Err(invalid("dispersion", format!("must be finite and >= 0, got {}", self.dispersion)));
        }
        Ok(())
    }

    /// Standard deviation `√d` of `Ω`.
    pub fn width(&self) -> f64 {
        self.dispersion.sqrt()
    }

    /// `⟨e^{iΩτ}⟩ = e^{iΩ₀τ - dτ²/2}`.
    pub fn phase_average(&self, tau: f64) -> Complex64 {
        Complex64::from_polar((-0.5 * self.dispersion * tau * tau).exp(), self.omega0 * tau)
    }
}

fn check_temperature(t: f64) -> Result<()> {
    if t.is_nan() || t < 0.0 {
        return Err(invalid("temperature", format!("must be >= 0 (inf allowed), got {t}")));
    }
    Ok(())
}

/// Whether `tanh(Ω/2T)` varies slowly across the distribution.
fn hermite_is_adequate(spec: &EnsembleSpec, temperature: f64) -> bool {
    temperature.is_infinite() || spec.width() <= temperature
}

/// Integrates `f(Ω) · e^{iΩτ}` against `P(Ω)` with adaptive Gauss-Kronrod on
/// the standardized variable, with panels no wider than a quarter period.
fn gaussian_average<G: Fn(f64) -> f64>(spec: &EnsembleSpec, tau: f64, f: G, kink: Option<f64>) -> Result<Complex64> {
    let sigma = spec.width();
    let freq = sigma * tau;
    let width = if freq > 0.0 { (0.5 * PI / freq).min(1.0) } else { 1.0 };
    let panels = (2.0 * TAIL / width).ceil() as usize;
    if panels > MAX_PANELS {
        return Err(Error::QuadratureNonConvergence {
            estimate: f64::INFINITY,
            tolerance: 0.0,
        });
    }
    let mut pts: Vec<f64> = (0..=panels).map(|k| -TAIL + 2.0 * TAIL * k as f64 / panels as f64).collect();
    if let Some(x) = kink {
        if x > -TAIL && x < TAIL {
            pts.push(x);
            pts.sort_by(f64::total_cmp);
            pts.dedup();
        }
    }
    let norm = 1.0 / (2.0 * PI).sqrt();
    let tol = Tolerance {
        abs: 1e-14,
        rel: 1e-12,
        max_intervals: 4 * MAX_PANELS,
    };
    let omega = |x: f64| spec.omega0 + sigma * x;
    let re = integrate(|x| norm * (-0.5 * x * x).exp() * f(omega(x)) * (omega(x) * tau).cos(), &pts, tol)?;
    let im = integrate(|x| norm * (-0.5 * x * x).exp() * f(omega(x)) * (omega(x) * tau).sin(), &pts, tol)?;
    Ok(Complex64::new(re.value, im.value))
}

fn tanh_kink(spec: &EnsembleSpec) -> Option<f64> {
    (spec.width() > 0.0).then(|| -spec.omega0 / spec.width())
}

/// `m_i = -∫dΩ P(Ω) tanh(Ω/2T)`. Exactly zero for `Ω₀ = 0`.
pub fn ensemble_initial_m(spec: &EnsembleSpec, temperature: f64) -> Result<f64> {
    spec.validate()?;
    check_temperature(temperature)?;
    if spec.dispersion == 0.0 {
        return Ok(initial_polarization(spec.omega0, temperature));
    }
    if spec.omega0 == 0.0 || temperature.is_infinite() {
        return Ok(0.0);
    }
    if hermite_is_adequate(spec, temperature) {
        let (x, w) = gauss_hermite(HERMITE_NODES);
        let s = (2.0 * spec.dispersion).sqrt();
        let m = |x: f64| initial_polarization(spec.omega0 + s * x, temperature);
        // Pairwise sums keep the odd part of tanh cancelling exactly.
        let mut acc = 0.0;
        for i in 0..HERMITE_NODES / 2 {
            acc += w[i] * (m(x[i]) + m(x[HERMITE_NODES - 1 - i]));
        }
        if HERMITE_NODES % 2 == 1 {
            acc += w[HERMITE_NODES / 2] * m(0.0);
        }
        return Ok(acc / PI.sqrt());
    }
    let avg = gaussian_average(spec, 0.0, |w| initial_polarization(w, temperature), tanh_kink(spec))?;
    Ok(avg.re)
}

/// Ensemble-averaged two-pulse `m_f` at spin temperature `temperature`.
///
/// The `sin χ` term carries `⟨e^{iΩτ}⟩` analytically; the `m(Ω) cos χ` term
/// is averaged numerically.
#[allow(clippy::too_many_arguments)]
pub fn ensemble_two_pulse_m<K: Kernel + ?Sized>(
    kernels: &K,
    spec: &EnsembleSpec,
    prep: Preparation,
    tau: f64,
    p1: &Pulse,
    p2: &Pulse,
    temperature: f64,
) -> Result<f64> {
    spec.validate()?;
    check_temperature(temperature)?;
    if spec.dispersion == 0.0 {
        let m = initial_polarization(spec.omega0, temperature);
        return two_pulse_from(kernels, spec.omega0, prep, tau, p1, p2, m);
    }
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(invalid("tau", format!("must be finite and >= 0, got {tau}")));
    }
    let m_i = ensemble_initial_m(spec, temperature)?;
    let (s1, c1) = (2.0 * p1.theta()).sin_cos();
    let (s2, c2) = (2.0 * p2.theta()).sin_cos();
    let amp = s1 * s2;
    if amp == 0.0 {
        return Ok(m_i * c1 * c2);
    }
    let xi = kernels.xi(tau)?;
    let alpha2 = p1.psi() - p2.psi() - p1.phi() - p2.phi();
    let chi = match prep {
        Preparation::Ergodic => -kernels.ergodic_shift(0.0, tau)?,
        Preparation::Delay(t) => kernels.chi(0.0, t, tau)?,
    };
    let rot = Complex64::from_polar(1.0, alpha2);
    let phase = spec.phase_average(tau);
    let mut inner = Complex64::new(0.0, chi.sin()) * phase;
    if temperature.is_finite() {
        let weighted = gaussian_average(spec, tau, |w| initial_polarization(w, temperature), tanh_kink(spec))?;
        inner += chi.cos() * weighted;
    }
    let s = -(-xi).exp() * (rot * inner).re;
    Ok(m_i * c1 * c2 + s * amp)
}

/// Ensemble echo `m_f`. The echo removes `e^{iΩτ}`, so `Ω₀` and `d` enter
/// only through `m_i`.
pub fn ensemble_echo_m<K: Kernel + ?Sized>(
    kernels: &K,
    spec: &EnsembleSpec,
    prep: Preparation,
    tau: f64,
    p1: &Pulse,
    p2: &Pulse,
    temperature: f64,
) -> Result<f64> {
    let m_i = ensemble_initial_m(spec, temperature)?;
    echo_from(kernels, prep, tau, p1, p2, m_i)
}
