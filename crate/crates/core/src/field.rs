//! Classical driving field and the quantum state of the driving mode.
//!
//! A coherent component `α = |α₀| e^{iφ}` of the driving mode is associated
//! with the classical field
//!
//! ```text
//! E_cl(t) = -2 κ |α₀| f(t) sin(ω t + φ) = -2 κ f(t) Im(α e^{iωt})
//! ```
//!
//! where `f` is the envelope. The phase enters as a time advance: the field
//! with phase `φ` equals the `φ = 0` field evaluated at `t + φ/ω`. The
//! physical peak amplitude is `E_α = 2 κ |α₀|`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quantum_state::{poisson_tail, truncation_rule, ModeDensityMatrix};

/// Default coupling constant (a.u.).
pub const DEFAULT_KAPPA: f64 = 1e-4;

/// Largest Poisson tail mass tolerated when truncating the driving mode.
pub const DRIVE_TAIL_LIMIT: f64 = 1e-12;

/// Temporal envelope of the driving field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Envelope {
    /// Continuous wave; exactly periodic.
    Flat,
    /// `sin²` pulse lasting `cycles` optical cycles from `t = 0`.
    SinSquared { cycles: u32 },
    /// Gaussian pulse centred in the simulation window; `fwhm_cycles` is the
    /// intensity FWHM in optical cycles.
    Gaussian { fwhm_cycles: f64 },
}

impl Envelope {
    pub fn is_flat(&self) -> bool {
        matches!(self, Envelope::Flat)
    }

    /// Envelope value at time `t`, for a window of `n_cycles` cycles of period `period`.
    pub fn value(&self, t: f64, period: f64, n_cycles: u32) -> f64 {
        match *self {
            Envelope::Flat => 1.0,
            Envelope::SinSquared { cycles } => {
                let len = f64::from(cycles) * period;
                if (0.0..=len).contains(&t) {
                    (PI * t / len).sin().powi(2)
                } else {
                    0.0
                }
            }
            Envelope::Gaussian { fwhm_cycles } => {
                let centre = 0.5 * f64::from(n_cycles) * period;
                let width = fwhm_cycles * period;
                let x = (t - centre) / width;
                // amplitude envelope whose square has the given FWHM
                (-2.0 * std::f64::consts::LN_2 * x * x).exp()
            }
        }
    }
}

/// Classical driving field parameters, in atomic units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    /// Field-mode coupling constant κ (scales as V^{-1/2}).
    pub kappa: f64,
    /// Fundamental angular frequency ω.
    pub omega: f64,
    /// Coherent amplitude modulus |α₀|.
    pub alpha_abs: f64,
    /// Phase φ in radians.
    pub phase: f64,
    pub envelope: Envelope,
    /// Length of the simulation window in optical cycles.
    pub n_cycles: u32,
}

impl FieldConfig {
    /// Configuration with `|α₀|` chosen so that `2 κ |α₀| = peak_field`.
    pub fn from_peak_field(kappa: f64, omega: f64, peak_field: f64, n_cycles: u32) -> Self {
        FieldConfig {
            kappa,
            omega,
            alpha_abs: peak_field / (2.0 * kappa),
            phase: 0.0,
            envelope: Envelope::Flat,
            n_cycles,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa.is_finite() && self.kappa > 0.0) {
            return Err(invalid("field.kappa", format!("must be finite and > 0 (got {})", self.kappa)));
        }
        if !(self.omega.is_finite() && self.omega > 0.0) {
            return Err(invalid("field.omega", format!("must be finite and > 0 (got {})", self.omega)));
        }
        if !(self.alpha_abs.is_finite() && self.alpha_abs >= 0.0) {
            return Err(invalid(
                "field.alpha_abs",
                format!("must be finite and >= 0 (got {})", self.alpha_abs),
            ));
        }
        if !self.phase.is_finite() {
            return Err(invalid("field.phase", "must be finite"));
        }
        if self.n_cycles < 1 {
            return Err(invalid("field.n_cycles", "must be >= 1"));
        }
        match self.envelope {
            Envelope::Flat => {}
            Envelope::SinSquared { cycles } => {
                if cycles < 1 || cycles > self.n_cycles {
                    return Err(invalid(
                        "field.envelope.cycles",
                        format!("must lie in 1..={} (got {cycles})", self.n_cycles),
                    ));
                }
            }
            Envelope::Gaussian { fwhm_cycles } => {
                if !(fwhm_cycles.is_finite() && fwhm_cycles > 0.0) {
                    return Err(invalid("field.envelope.fwhm_cycles", "must be finite and > 0"));
                }
            }
        }
        if !self.amplitude().is_finite() {
            return Err(invalid("field.alpha_abs", "physical amplitude 2·kappa·alpha_abs overflows"));
        }
        Ok(())
    }

    /// Physical peak amplitude `E_α = 2 κ |α₀|`.
    pub fn amplitude(&self) -> f64 {
        2.0 * self.kappa * self.alpha_abs
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega
    }

    /// Ponderomotive energy `E_α² / (4 ω²)`.
    pub fn ponderomotive(&self) -> f64 {
        let e = self.amplitude();
        e * e / (4.0 * self.omega * self.omega)
    }

    /// Same field parameters, driven by the coherent component `alpha`.
    pub fn with_alpha(&self, alpha: Complex64) -> Self {
        FieldConfig {
            alpha_abs: alpha.norm(),
            phase: if alpha.norm() > 0.0 { alpha.arg() } else { self.phase },
            ..*self
        }
    }

    pub fn with_phase(&self, phase: f64) -> Self {
        FieldConfig { phase, ..*self }
    }

    /// Coherent amplitude `α = |α₀| e^{iφ}`.
    pub fn alpha(&self) -> Complex64 {
        Complex64::from_polar(self.alpha_abs, self.phase)
    }

    pub fn envelope_at(&self, t: f64) -> f64 {
        self.envelope.value(t, self.period(), self.n_cycles)
    }

    /// Instantaneous classical field at time `t`.
    pub fn field_at(&self, t: f64) -> f64 {
        -self.amplitude() * self.envelope_at(t) * (self.omega * t + self.phase).sin()
    }
}

/// Uniform time grid `t_j = t0 + j·dt`, `j = 0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t0: f64,
    pub dt: f64,
    pub n: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, dt: f64, n: usize) -> Result<Self> {
        if !t0.is_finite() {
            return Err(invalid("grid.t0", "must be finite"));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(invalid("grid.dt", format!("must be finite and > 0 (got {dt})")));
        }
        if n < 2 {
            return Err(invalid("grid.n", format!("must be >= 2 (got {n})")));
        }
        Ok(TimeGrid { t0, dt, n })
    }

    /// Grid covering exactly `n_cycles` periods of `omega` starting at `t0`,
    /// endpoints included.
    pub fn cycles(omega: f64, n_cycles: u32, samples_per_cycle: usize, t0: f64) -> Result<Self> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(invalid("field.omega", "must be finite and > 0"));
        }
        if n_cycles < 1 {
            return Err(invalid("field.n_cycles", "must be >= 1"));
        }
        if samples_per_cycle < 2 {
            return Err(invalid("grid.samples_per_cycle", "must be >= 2"));
        }
        let dt = 2.0 * PI / omega / samples_per_cycle as f64;
        TimeGrid::new(t0, dt, n_cycles as usize * samples_per_cycle + 1)
    }

    /// Grid spanning the configured window of `config`, starting at `t = 0`.
    pub fn for_config(config: &FieldConfig, samples_per_cycle: usize) -> Result<Self> {
        TimeGrid::cycles(config.omega, config.n_cycles, samples_per_cycle, 0.0)
    }

    pub fn time(&self, j: usize) -> f64 {
        self.t0 + j as f64 * self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |j| self.time(j))
    }

    /// `(n - 1)·dt`.
    pub fn duration(&self) -> f64 {
        (self.n - 1) as f64 * self.dt
    }

    /// Same spacing and length, shifted start.
    pub fn shifted(&self, offset: f64) -> Self {
        TimeGrid { t0: self.t0 + offset, ..*self }
    }

    /// Number of whole optical cycles spanned, if the duration is an integer
    /// number of periods (relative tolerance 1e-9).
    pub fn whole_cycles(&self, omega: f64) -> Option<u64> {
        let cycles = self.duration() * omega / (2.0 * PI);
        let rounded = cycles.round();
        ((cycles - rounded).abs() <= 1e-9 * cycles.max(1.0) && rounded >= 1.0).then_some(rounded as u64)
    }
}

/// Real-valued samples on a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct RealSeries {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
}

/// Quantum state of the driving mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DrivingState {
    /// Pure coherent state `|α⟩`.
    Coherent { alpha: Complex64 },
    /// Uniform mixture of `|(|α₀| e^{iφ_k})⟩` over `n_phi` equally spaced phases.
    PhaseAveraged { alpha_abs: f64, n_phi: usize },
    /// Photon number state `|n⟩`.
    Fock { n: u64 },
}

impl DrivingState {
    pub fn coherent(alpha: Complex64) -> Self {
        DrivingState::Coherent { alpha }
    }

    pub fn phase_averaged(alpha_abs: f64, n_phi: usize) -> Self {
        DrivingState::PhaseAveraged { alpha_abs, n_phi }
    }

    pub fn fock(n: u64) -> Self {
        DrivingState::Fock { n }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            DrivingState::Coherent { alpha } => {
                if !(alpha.re.is_finite() && alpha.im.is_finite()) {
                    return Err(invalid("drive.alpha", "must be finite"));
                }
            }
            DrivingState::PhaseAveraged { alpha_abs, n_phi } => {
                if !(alpha_abs.is_finite() && alpha_abs >= 0.0) {
                    return Err(invalid("drive.alpha_abs", "must be finite and >= 0"));
                }
                if n_phi < 2 {
                    return Err(invalid("drive.n_phi", format!("must be >= 2 (got {n_phi})")));
                }
            }
            DrivingState::Fock { .. } => {}
        }
        Ok(())
    }

    pub fn label(&self) -> &'static str {
        match self {
            DrivingState::Coherent { .. } => "coherent",
            DrivingState::PhaseAveraged { .. } => "phase_averaged",
            DrivingState::Fock { .. } => "fock",
        }
    }
}

/// The `n_phi` uniformly spaced phases `2πk/n_phi`, `k = 0..n_phi`.
pub fn uniform_phases(n_phi: usize) -> impl Iterator<Item = f64> {
    (0..n_phi).map(move |k| 2.0 * PI * k as f64 / n_phi as f64)
}

/// Samples of the classical field of `config` on `grid`.
pub fn classical_field(config: &FieldConfig, grid: &TimeGrid) -> Result<RealSeries> {
    config.validate()?;
    let grid = TimeGrid::new(grid.t0, grid.dt, grid.n)?;
    let values = grid.times().map(|t| config.field_at(t)).collect();
    Ok(RealSeries { grid, values })
}

/// Expectation value of the field operator in the driving state at time `t`.
///
/// `config` supplies κ, ω and the envelope; its amplitude and phase are
/// replaced by those of `state`.
pub fn mean_driving_field(state: &DrivingState, config: &FieldConfig, t: f64) -> f64 {
    let envelope = config.envelope_at(t);
    let rotating = Complex64::from_polar(1.0, config.omega * t);
    let field_of = |a: Complex64| -2.0 * config.kappa * envelope * (a * rotating).im;
    match *state {
        DrivingState::Coherent { alpha } => field_of(alpha),
        DrivingState::PhaseAveraged { alpha_abs, n_phi } => {
            let sum: f64 = uniform_phases(n_phi)
                .map(|phi| field_of(Complex64::from_polar(alpha_abs, phi)))
                .sum();
            sum / n_phi as f64
        }
        DrivingState::Fock { n } => {
            // ⟨n|a|n⟩ from the number-state density matrix
            let rho = ModeDensityMatrix::fock(1, n as usize);
            field_of(rho.mean_field_amplitude())
        }
    }
}

/// Fock-basis density matrix of the phase-averaged driving mixture: a
/// Poisson distribution with mean `|α₀|²` on the diagonal.
pub fn driving_mixture_fock_diagonal(alpha_abs: f64, n_max: usize) -> Result<ModeDensityMatrix> {
    if !(alpha_abs.is_finite() && alpha_abs >= 0.0) {
        return Err(invalid("alpha_abs", "must be finite and >= 0"));
    }
    let mean = alpha_abs * alpha_abs;
    let tail = poisson_tail(mean, n_max);
    if tail > DRIVE_TAIL_LIMIT {
        return Err(Error::Truncation {
            n_max,
            tail,
            limit: DRIVE_TAIL_LIMIT,
            suggested: truncation_rule(mean),
        });
    }
    ModeDensityMatrix::poisson_unchecked(1, mean, n_max)
}
