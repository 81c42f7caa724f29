//! Dipole response of a single atom driven by the classical field of one
//! coherent component of the driving state.
//!
//! Two engines are provided: a strong-field-approximation (SFA) engine
//! with hydrogen-like 1s matrix elements, and a closed-form "toy" response
//! used as an analytic oracle.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::field::{FieldConfig, TimeGrid};

/// Dipole samples `⟨d(t)⟩` on a time grid (atomic units).
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSeries {
    pub grid: TimeGrid,
    pub values: Vec<Complex64>,
}

impl ComplexSeries {
    pub fn new(grid: TimeGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n {
            return Err(invalid("values", format!("length {} does not match grid length {}", values.len(), grid.n)));
        }
        if let Some(j) = values.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonConvergent { t: grid.time(j) });
        }
        Ok(ComplexSeries { grid, values })
    }

    pub fn zeros(grid: TimeGrid) -> Self {
        ComplexSeries { grid, values: vec![Complex64::new(0.0, 0.0); grid.n] }
    }

    /// Largest point-wise distance to `other`.
    pub fn max_deviation(&self, other: &ComplexSeries) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Anything that maps a classical drive to a dipole time series.
pub trait DipoleEngine: Sync {
    fn name(&self) -> &'static str;

    fn dipole(&self, config: &FieldConfig, grid: &TimeGrid) -> Result<ComplexSeries>;
}

/// Atomic parameters of the SFA engine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomParams {
    /// Ionization potential (a.u.).
    pub ip: f64,
    /// Regularization of the `(ε + iτ/2)^{-3/2}` spreading factor.
    pub epsilon: f64,
    /// Excursion-time history kept in the inner integral, in optical cycles.
    pub window_cycles: f64,
}

impl AtomParams {
    pub const DEFAULT_EPSILON: f64 = 1e-6;
    pub const DEFAULT_WINDOW: f64 = 1.0;

    pub fn hydrogen() -> Self {
        AtomParams { ip: 0.5, epsilon: Self::DEFAULT_EPSILON, window_cycles: Self::DEFAULT_WINDOW }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ip.is_finite() && self.ip > 0.0) {
            return Err(invalid("engine.ip", "must be finite and > 0"));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(invalid("engine.epsilon", "must be finite and > 0"));
        }
        if !(self.window_cycles.is_finite() && self.window_cycles > 0.0) {
            return Err(invalid("engine.window_cycles", "must be finite and > 0"));
        }
        Ok(())
    }
}

/// Semiclassical cutoff order `(Ip + 3.17 U_p) / ω`.
pub fn cutoff_order(config: &FieldConfig, ip: f64) -> f64 {
    (ip + 3.17 * config.ponderomotive()) / config.omega
}

/// Fraction of the history window over which the inner integrand is
/// smoothly tapered to zero.
const TAPER_FRACTION: f64 = 0.2;

/// Lewenstein-type SFA dipole with a direct double time integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SfaEngine {
    pub atom: AtomParams,
}

impl SfaEngine {
    pub fn new(atom: AtomParams) -> Self {
        SfaEngine { atom }
    }

    /// Largest admissible time step: `2π / (40 ω q_max)`, with `q_max`
    /// from the cutoff law.
    pub fn max_dt(&self, config: &FieldConfig) -> f64 {
        let q_max = cutoff_order(config, self.atom.ip).ceil().max(1.0);
        2.0 * PI / (40.0 * config.omega * q_max)
    }
}

/// Vector potential and its running integrals, sampled on the grid extended
/// backwards by the history window. Index `i` corresponds to grid index `i - offset`.
struct PotentialTable {
    offset: usize,
    a: Vec<f64>,
    field: Vec<f64>,
    /// Flat envelope: `sin θ`, `sin 2θ`; pulsed: cumulative `∫A`, `∫A²`.
    first: Vec<f64>,
    second: Vec<f64>,
    flat: bool,
    e0: f64,
    omega: f64,
}

impl PotentialTable {
    fn build(config: &FieldConfig, grid: &TimeGrid, offset: usize) -> Self {
        let len = grid.n + offset;
        let time = |i: usize| grid.t0 + (i as f64 - offset as f64) * grid.dt;
        let e0 = config.amplitude();
        let omega = config.omega;
        if config.envelope.is_flat() {
            // A(t) = -(E0/ω) cos θ with E(t) = -dA/dt = -E0 sin θ, θ = ωt + φ
            let theta: Vec<f64> = (0..len).map(|i| omega * time(i) + config.phase).collect();
            PotentialTable {
                offset,
                a: theta.iter().map(|th| -(e0 / omega) * th.cos()).collect(),
                field: theta.iter().map(|th| -e0 * th.sin()).collect(),
                first: theta.iter().map(|th| th.sin()).collect(),
                second: theta.iter().map(|th| (2.0 * th).sin()).collect(),
                flat: true,
                e0,
                omega,
            }
        } else {
            let field: Vec<f64> = (0..len).map(|i| config.field_at(time(i))).collect();
            let a = cumulative(&field, grid.dt, -1.0);
            let first = cumulative(&a, grid.dt, 1.0);
            let a2: Vec<f64> = a.iter().map(|x| x * x).collect();
            let second = cumulative(&a2, grid.dt, 1.0);
            PotentialTable { offset, a, field, first, second, flat: false, e0, omega }
        }
    }

    /// `(∫A, ∫A²)` over `[t_{i-k}, t_i]` of extended indices, `τ = k·dt`.
    fn integrals(&self, i: usize, k: usize, tau: f64) -> (f64, f64) {
        if self.flat {
            let scale = self.e0 / self.omega;
            let ia = -(scale / self.omega) * (self.first[i] - self.first[i - k]);
            let ia2 = scale * scale * (0.5 * tau + (self.second[i] - self.second[i - k]) / (4.0 * self.omega));
            (ia, ia2)
        } else {
            (self.first[i] - self.first[i - k], self.second[i] - self.second[i - k])
        }
    }
}

/// Cumulative trapezoid of `sign · y`, starting at zero.
fn cumulative(y: &[f64], dt: f64, sign: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(y.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in y.windows(2) {
        acc += sign * 0.5 * dt * (w[0] + w[1]);
        out.push(acc);
    }
    out
}

impl DipoleEngine for SfaEngine {
    fn name(&self) -> &'static str {
        "sfa"
    }

    fn dipole(&self, config: &FieldConfig, grid: &TimeGrid) -> Result<ComplexSeries> {
        config.validate()?;
        self.atom.validate()?;
        let grid = TimeGrid::new(grid.t0, grid.dt, grid.n)?;
        let max_dt = self.max_dt(config);
        if grid.dt > max_dt {
            return Err(Error::Resolution(format!(
                "dt = {:.4e} a.u. exceeds 2π/(40·ω·q_max) = {max_dt:.4e} a.u.",
                grid.dt
            )));
        }

        let ip = self.atom.ip;
        let window = self.atom.window_cycles * config.period();
        let k_max = ((window / grid.dt).round() as usize).max(2);
        let table = PotentialTable::build(config, &grid, k_max);

        // hydrogen-like 1s: d(p) = i C p / (p² + 2Ip)³
        let c_norm = 2f64.powf(3.5) * (2.0 * ip).powf(1.25) / PI;
        let c2 = c_norm * c_norm;
        let taper_start = (1.0 - TAPER_FRACTION) * k_max as f64;
        let kernel: Vec<Complex64> = (0..=k_max)
            .map(|k| {
                if k == 0 {
                    return Complex64::new(0.0, 0.0);
                }
                let tau = k as f64 * grid.dt;
                let spread = (Complex64::new(PI, 0.0) / Complex64::new(self.atom.epsilon, 0.5 * tau)).powf(1.5);
                let mut w = grid.dt * c2;
                if k == k_max {
                    w *= 0.5;
                }
                let kf = k as f64;
                if kf > taper_start {
                    let x = (kf - taper_start) / (k_max as f64 - taper_start);
                    w *= (0.5 * PI * x).cos().powi(2);
                }
                spread * w
            })
            .collect();

        let values: Vec<Complex64> = (0..grid.n)
            .into_par_iter()
            .map(|j| {
                let i = j + table.offset;
                let a_now = table.a[i];
                let mut acc = Complex64::new(0.0, 0.0);
                for (k, weight) in kernel.iter().enumerate().skip(1) {
                    let tau = k as f64 * grid.dt;
                    let (ia, ia2) = table.integrals(i, k, tau);
                    let p = ia / tau;
                    let v_now = p - a_now;
                    let v_then = p - table.a[i - k];
                    let action = ip * tau - 0.5 * p * p * tau + 0.5 * ia2;
                    let g_now = v_now / (v_now * v_now + 2.0 * ip).powi(3);
                    let g_then = v_then / (v_then * v_then + 2.0 * ip).powi(3);
                    let amp = g_now * g_then * table.field[i - k];
                    let (s, c) = action.sin_cos();
                    acc += weight * Complex64::new(amp * c, -amp * s);
                }
                // x(t) = i ∫ ... + c.c.
                Complex64::new(2.0 * (Complex64::i() * acc).re, 0.0)
            })
            .collect();
        ComplexSeries::new(grid, values)
    }
}

/// One term `c (E_α / E_ref)^p cos(q (ωt + φ))` of the toy response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToyTerm {
    pub q: u32,
    pub c: f64,
    pub p: u32,
}

/// Closed-form odd-harmonic response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToyDipoleParams {
    pub terms: Vec<ToyTerm>,
    pub e_ref: f64,
}

impl ToyDipoleParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.e_ref.is_finite() && self.e_ref > 0.0) {
            return Err(invalid("engine.e_ref", "must be finite and > 0"));
        }
        for (i, t) in self.terms.iter().enumerate() {
            if t.q % 2 == 0 {
                return Err(invalid(&format!("engine.terms[{i}].q"), format!("must be odd (got {})", t.q)));
            }
            if t.p < 1 {
                return Err(invalid(&format!("engine.terms[{i}].p"), "must be >= 1"));
            }
            if !t.c.is_finite() {
                return Err(invalid(&format!("engine.terms[{i}].c"), "must be finite"));
            }
        }
        Ok(())
    }

    /// Single term `c E^q cos(q(ωt+φ))` with unit reference field, whose
    /// harmonic `q` power scales as `E^{2q}`.
    pub fn monomial(q: u32, c: f64) -> Self {
        ToyDipoleParams { terms: vec![ToyTerm { q, c, p: q }], e_ref: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyEngine {
    pub params: ToyDipoleParams,
}

impl ToyEngine {
    pub fn new(params: ToyDipoleParams) -> Self {
        ToyEngine { params }
    }
}

impl DipoleEngine for ToyEngine {
    fn name(&self) -> &'static str {
        "toy"
    }

    fn dipole(&self, config: &FieldConfig, grid: &TimeGrid) -> Result<ComplexSeries> {
        config.validate()?;
        self.params.validate()?;
        let grid = TimeGrid::new(grid.t0, grid.dt, grid.n)?;
        let e = config.amplitude();
        let values = grid
            .times()
            .map(|t| {
                let ratio = e * config.envelope_at(t) / self.params.e_ref;
                let theta = config.omega * t + config.phase;
                let d: f64 = self
                    .params
                    .terms
                    .iter()
                    .map(|term| term.c * ratio.powi(term.p as i32) * (f64::from(term.q) * theta).cos())
                    .sum();
                Complex64::new(d, 0.0)
            })
            .collect();
        ComplexSeries::new(grid, values)
    }
}

/// Engine selected at run time.
#[derive(Debug, Clone, PartialEq)]
pub enum Engine {
    Sfa(SfaEngine),
    Toy(ToyEngine),
}

impl DipoleEngine for Engine {
    fn name(&self) -> &'static str {
        match self {
            Engine::Sfa(e) => e.name(),
            Engine::Toy(e) => e.name(),
        }
    }

    fn dipole(&self, config: &FieldConfig, grid: &TimeGrid) -> Result<ComplexSeries> {
        match self {
            Engine::Sfa(e) => e.dipole(config, grid),
            Engine::Toy(e) => e.dipole(config, grid),
        }
    }
}

/// Largest deviation between the dipole driven at phase `φ + delta_phi` and
/// the phase-`φ` dipole advanced in time by `delta_phi / ω`.
pub fn covariance_check(
    engine: &dyn DipoleEngine,
    config: &FieldConfig,
    grid: &TimeGrid,
    delta_phi: f64,
) -> Result<f64> {
    if !config.envelope.is_flat() {
        return Err(Error::UnsupportedEnvelope("covariance_check"));
    }
    let shifted = engine.dipole(&config.with_phase(config.phase + delta_phi), grid)?;
    let advanced = engine.dipole(config, &grid.shifted(delta_phi / config.omega))?;
    Ok(shifted.max_deviation(&advanced))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Envelope;
    use approx::assert_abs_diff_eq;

    fn flat(omega: f64, amplitude: f64, phase: f64, n_cycles: u32) -> FieldConfig {
        FieldConfig { phase, ..FieldConfig::from_peak_field(1e-4, omega, amplitude, n_cycles) }
    }

    #[test]
    fn toy_single_term_is_cosine() {
        let params = ToyDipoleParams { terms: vec![ToyTerm { q: 1, c: 1.0, p: 1 }], e_ref: 0.05 };
        let cfg = flat(1.0, 0.05, 0.0, 2);
        let grid = TimeGrid::for_config(&cfg, 32).unwrap();
        let d = ToyEngine::new(params).dipole(&cfg, &grid).unwrap();
        for (t, v) in grid.times().zip(&d.values) {
            assert_abs_diff_eq!(v.re, t.cos(), epsilon = 1e-12);
            assert_eq!(v.im, 0.0);
        }
    }

    #[test]
    fn toy_amplitude_scales_with_field_power() {
        let params = ToyDipoleParams { terms: vec![ToyTerm { q: 3, c: 0.2, p: 3 }], e_ref: 0.01 };
        let cfg = flat(1.0, 0.02, 0.0, 1);
        let grid = TimeGrid::for_config(&cfg, 64).unwrap();
        let d = ToyEngine::new(params).dipole(&cfg, &grid).unwrap();
        let peak = d.values.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
        assert_abs_diff_eq!(peak, 1.6, epsilon = 1e-12);
    }

    #[test]
    fn toy_rejects_even_orders() {
        let params = ToyDipoleParams { terms: vec![ToyTerm { q: 2, c: 1.0, p: 1 }], e_ref: 1.0 };
        assert!(params.validate().is_err());
    }

    #[test]
    fn toy_covariance_is_exact() {
        let params = ToyDipoleParams {
            terms: vec![ToyTerm { q: 1, c: 1.0, p: 1 }, ToyTerm { q: 5, c: -0.3, p: 2 }],
            e_ref: 0.05,
        };
        let engine = ToyEngine::new(params);
        let cfg = flat(0.057, 0.053, 0.2, 4);
        let grid = TimeGrid::for_config(&cfg, 64).unwrap();
        assert_eq!(covariance_check(&engine, &cfg, &grid, 0.0).unwrap(), 0.0);
        for &dphi in &[PI / 3.0, 1.9, -0.4] {
            assert!(covariance_check(&engine, &cfg, &grid, dphi).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn covariance_needs_flat_envelope() {
        let engine = ToyEngine::new(ToyDipoleParams::monomial(1, 1.0));
        let cfg = FieldConfig { envelope: Envelope::SinSquared { cycles: 2 }, ..flat(1.0, 0.05, 0.0, 2) };
        let grid = TimeGrid::for_config(&cfg, 16).unwrap();
        assert!(matches!(covariance_check(&engine, &cfg, &grid, 0.5), Err(Error::UnsupportedEnvelope(_))));
    }

    #[test]
    fn zero_field_gives_zero_dipole() {
        let cfg = flat(0.057, 0.0, 0.0, 2);
        let grid = TimeGrid::for_config(&cfg, 512).unwrap();
        let sfa = SfaEngine::new(AtomParams::hydrogen()).dipole(&cfg, &grid).unwrap();
        assert!(sfa.values.iter().all(|z| *z == Complex64::new(0.0, 0.0)));
        let toy = ToyEngine::new(ToyDipoleParams::monomial(3, 1.0)).dipole(&cfg, &grid).unwrap();
        assert!(toy.values.iter().all(|z| *z == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn sfa_rejects_coarse_grid() {
        let cfg = flat(0.057, 0.053, 0.0, 2);
        let grid = TimeGrid::for_config(&cfg, 100).unwrap();
        assert!(matches!(
            SfaEngine::new(AtomParams::hydrogen()).dipole(&cfg, &grid),
            Err(Error::Resolution(_))
        ));
    }

    #[test]
    fn sfa_dipole_is_periodic_and_half_wave_antisymmetric() {
        let cfg = flat(0.057, 0.053, 0.0, 2);
        let spc = 1024;
        let grid = TimeGrid::for_config(&cfg, spc).unwrap();
        let d = SfaEngine::new(AtomParams::hydrogen()).dipole(&cfg, &grid).unwrap();
        let scale = d.values.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
        assert!(scale > 0.0);
        for j in 0..spc {
            assert_abs_diff_eq!(d.values[j].re, d.values[j + spc].re, epsilon = 1e-9 * scale);
            assert_abs_diff_eq!(d.values[j].re, -d.values[j + spc / 2].re, epsilon = 1e-9 * scale);
        }
    }

    #[test]
    fn sfa_pulsed_envelope_runs() {
        let cfg = FieldConfig { envelope: Envelope::SinSquared { cycles: 2 }, ..flat(0.057, 0.053, 0.0, 2) };
        let grid = TimeGrid::for_config(&cfg, 1024).unwrap();
        let d = SfaEngine::new(AtomParams::hydrogen()).dipole(&cfg, &grid).unwrap();
        // no field before the pulse and at its very start
        assert_eq!(d.values[0].re, 0.0);
        assert!(d.values.iter().any(|z| z.re != 0.0));
    }
}
