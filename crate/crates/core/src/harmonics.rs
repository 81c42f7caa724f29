//! Harmonic coherent-state amplitudes and HHG spectra.
//!
//! `χ_q = -i sqrt(q) ∫ dt ⟨d(t)⟩ e^{i q ω t}` is evaluated by the trapezoidal
//! rule on the dipole grid. For a flat envelope the grid spans whole cycles,
//! so the rule is spectrally exact for band-limited dipoles.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dipole::{ComplexSeries, DipoleEngine, ToyDipoleParams, ToyEngine, ToyTerm};
use crate::error::{invalid, Error, Result};
use crate::field::{DrivingState, FieldConfig, TimeGrid};
use crate::phasespace::{HusimiSampler, Quadrature};

/// Inclusive range of harmonic orders.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QRange {
    pub min: u32,
    pub max: u32,
}

impl QRange {
    pub fn new(min: u32, max: u32) -> Result<Self> {
        let r = QRange { min, max };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if self.min < 1 {
            return Err(invalid("harmonics.min", "must be >= 1"));
        }
        if self.max < self.min {
            return Err(invalid("harmonics.max", format!("must be >= min = {}", self.min)));
        }
        Ok(())
    }

    pub fn orders(&self) -> impl Iterator<Item = u32> {
        self.min..=self.max
    }

    pub fn len(&self) -> usize {
        (self.max - self.min + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Coherent amplitude `χ_q` of harmonic mode `q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicAmplitude {
    pub q: u32,
    pub value: Complex64,
}

/// Optional apodization applied before the harmonic projection.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    #[default]
    None,
    Hann,
}

impl Window {
    fn weight(&self, j: usize, n: usize) -> f64 {
        match self {
            Window::None => 1.0,
            Window::Hann => {
                let x = j as f64 / (n - 1) as f64;
                (PI * x).sin().powi(2)
            }
        }
    }
}

/// `χ_q` of `dipole` by trapezoidal quadrature.
pub fn harmonic_amplitude(dipole: &ComplexSeries, q: u32, omega: f64) -> Result<HarmonicAmplitude> {
    harmonic_amplitude_windowed(dipole, q, omega, Window::None)
}

pub fn harmonic_amplitude_windowed(
    dipole: &ComplexSeries,
    q: u32,
    omega: f64,
    window: Window,
) -> Result<HarmonicAmplitude> {
    if q < 1 {
        return Err(invalid("q", "must be >= 1"));
    }
    let grid = &dipole.grid;
    let nyquist = PI / grid.dt;
    let freq = f64::from(q) * omega;
    if freq > nyquist {
        return Err(Error::Resolution(format!(
            "harmonic {q} (ω_q = {freq:.4e}) is above the grid Nyquist frequency {nyquist:.4e}"
        )));
    }
    let n = grid.n;
    let mut acc = Complex64::new(0.0, 0.0);
    for (j, d) in dipole.values.iter().enumerate() {
        let mut w = window.weight(j, n);
        if j == 0 || j == n - 1 {
            w *= 0.5;
        }
        acc += d * Complex64::from_polar(w, freq * grid.time(j));
    }
    let value = Complex64::new(0.0, -f64::from(q).sqrt()) * acc * grid.dt;
    Ok(HarmonicAmplitude { q, value })
}

pub fn harmonic_amplitudes(dipole: &ComplexSeries, q_range: QRange, omega: f64, window: Window) -> Result<Vec<HarmonicAmplitude>> {
    q_range.orders().map(|q| harmonic_amplitude_windowed(dipole, q, omega, window)).collect()
}

/// One spectral line: `⟨a_q† a_q⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumLine {
    pub q: u32,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumMetadata {
    pub drive: String,
    pub engine: String,
    pub grid: TimeGrid,
    pub kappa: f64,
    pub omega: f64,
    pub quadrature: Option<Quadrature>,
}

/// Mean photon number per harmonic order, ordered by `q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub metadata: SpectrumMetadata,
    pub lines: Vec<SpectrumLine>,
}

impl SpectrumResult {
    pub fn value(&self, q: u32) -> Option<f64> {
        self.lines.iter().find(|l| l.q == q).map(|l| l.value)
    }

    pub fn values(&self) -> Vec<f64> {
        self.lines.iter().map(|l| l.value).collect()
    }

    pub fn peak(&self) -> f64 {
        self.lines.iter().map(|l| l.value).fold(0.0, f64::max)
    }
}

fn check_flat_grid(config: &FieldConfig, grid: &TimeGrid) -> Result<()> {
    if config.envelope.is_flat() && grid.whole_cycles(config.omega).is_none() {
        return Err(invalid("grid", "must span an integer number of optical cycles for a flat envelope"));
    }
    Ok(())
}

/// `χ_q` for every order in `q_range`, for the single classical drive `config`.
pub fn coherent_amplitudes(
    engine: &dyn DipoleEngine,
    config: &FieldConfig,
    grid: &TimeGrid,
    q_range: QRange,
    window: Window,
) -> Result<Vec<HarmonicAmplitude>> {
    q_range.validate()?;
    check_flat_grid(config, grid)?;
    let dipole = engine.dipole(config, grid)?;
    harmonic_amplitudes(&dipole, q_range, config.omega, window)
}

/// Spectrum `|χ_q|²` of a coherent drive.
pub fn spectrum_coherent(
    engine: &dyn DipoleEngine,
    config: &FieldConfig,
    grid: &TimeGrid,
    q_range: QRange,
) -> Result<SpectrumResult> {
    let amplitudes = coherent_amplitudes(engine, config, grid, q_range, Window::None)?;
    Ok(SpectrumResult {
        metadata: SpectrumMetadata {
            drive: "coherent".into(),
            engine: engine.name().into(),
            grid: *grid,
            kappa: config.kappa,
            omega: config.omega,
            quadrature: None,
        },
        lines: amplitudes.iter().map(|a| SpectrumLine { q: a.q, value: a.value.norm_sqr() }).collect(),
    })
}

/// Amplitudes `χ_q(α)` at every quadrature node of `sampler`, in node order.
///
/// The node amplitude `α` sets the physical drive `E = 2κα` through
/// `config` (κ, ω, envelope).
pub fn node_amplitudes(
    sampler: &HusimiSampler,
    engine: &dyn DipoleEngine,
    config: &FieldConfig,
    grid: &TimeGrid,
    q_range: QRange,
) -> Result<Vec<(f64, Vec<HarmonicAmplitude>)>> {
    q_range.validate()?;
    check_flat_grid(config, grid)?;
    sampler
        .nodes()
        .par_iter()
        .map(|node| {
            let cfg = config.with_alpha(node.alpha);
            let dipole = engine.dipole(&cfg, grid)?;
            Ok((node.weight, harmonic_amplitudes(&dipole, q_range, config.omega, Window::None)?))
        })
        .collect()
}

/// Ensemble spectrum `⟨a_q† a_q⟩ = ∫ Q(α) |χ_q(α)|² d²α`.
pub fn spectrum_ensemble(
    sampler: &HusimiSampler,
    engine: &dyn DipoleEngine,
    config: &FieldConfig,
    grid: &TimeGrid,
    q_range: QRange,
) -> Result<SpectrumResult> {
    let per_node = node_amplitudes(sampler, engine, config, grid, q_range)?;
    let total_weight: f64 = per_node.iter().map(|(w, _)| w).sum();
    if (total_weight - 1.0).abs() > 1e-8 {
        return Err(Error::Quadrature(format!("Husimi weights sum to {total_weight}, not 1")));
    }
    let mut values = vec![0.0; q_range.len()];
    // ordered reduction keeps the result bit-stable
    for (weight, amps) in &per_node {
        for (slot, a) in values.iter_mut().zip(amps) {
            *slot += weight * a.value.norm_sqr();
        }
    }
    Ok(SpectrumResult {
        metadata: SpectrumMetadata {
            drive: sampler.drive.label().into(),
            engine: engine.name().into(),
            grid: *grid,
            kappa: config.kappa,
            omega: config.omega,
            quadrature: Some(sampler.quadrature),
        },
        lines: q_range.orders().zip(values).map(|(q, value)| SpectrumLine { q, value }).collect(),
    })
}

/// One κ of a Fock-drive scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FockScanPoint {
    pub kappa: f64,
    pub spectrum: SpectrumResult,
}

/// Ensemble spectra of the Fock drive `|n⟩` at each κ, for a toy response
/// built from monomial terms (`p = q`).
pub fn fock_limit_scan(
    n: u64,
    kappa_values: &[f64],
    params: &ToyDipoleParams,
    base: &FieldConfig,
    grid: &TimeGrid,
    quadrature: Quadrature,
) -> Result<Vec<FockScanPoint>> {
    if kappa_values.len() < 3 {
        return Err(Error::InsufficientScan(kappa_values.len()));
    }
    params.validate()?;
    let orders: Vec<u32> = params.terms.iter().map(|t| t.q).collect();
    let q_range = QRange::new(
        orders.iter().copied().min().unwrap_or(1),
        orders.iter().copied().max().unwrap_or(1),
    )?;
    let engine = ToyEngine::new(params.clone());
    let sampler = HusimiSampler::new(DrivingState::fock(n), quadrature)?;
    kappa_values
        .iter()
        .map(|&kappa| {
            let config = FieldConfig { kappa, ..*base };
            config.validate()?;
            let spectrum = spectrum_ensemble(&sampler, &engine, &config, grid, q_range)?;
            Ok(FockScanPoint { kappa, spectrum })
        })
        .collect()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::InsufficientScan(points.len()));
    }
    if points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(Error::Quadrature("log-log fit needs strictly positive values".into()));
    }
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|&(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Fitted power law of each harmonic's spectrum against κ.
pub fn scan_slopes(scan: &[FockScanPoint], q: u32) -> Result<f64> {
    let points: Vec<(f64, f64)> = scan
        .iter()
        .map(|p| (p.kappa, p.spectrum.value(q).unwrap_or(0.0)))
        .collect();
    log_log_slope(&points)
}

/// Coefficient `k` of the toy amplitude `|χ_q| = k E^p` for a term of
/// `params`, on a flat grid of `n_cycles` whole cycles.
pub fn toy_chi_coefficient(term: &ToyTerm, e_ref: f64, omega: f64, n_cycles: u32) -> f64 {
    let duration = 2.0 * PI * f64::from(n_cycles) / omega;
    term.c * f64::from(term.q).sqrt() * 0.5 * duration / e_ref.powi(term.p as i32)
}

/// Plateau, cutoff and odd/even contrast of an HHG spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlateauAnalysis {
    /// First odd order with photon energy above the ionization threshold.
    pub first: u32,
    /// Last local maximum of the odd-harmonic plateau.
    pub cutoff: u32,
    /// Smallest over largest odd-harmonic power in `first..=cutoff`.
    pub flatness: f64,
    /// Power at `cutoff + 8` relative to the power at `cutoff`.
    pub rolloff: f64,
    /// Smallest ratio of an even line to its weaker odd neighbour, over
    /// even orders up to `cutoff + 1`.
    pub odd_even_contrast: f64,
}

/// Locates the plateau and cutoff of `spectrum`.
///
/// The cutoff is the highest odd order `q ≥ first` that is a local maximum
/// among odd orders and carries at least a tenth of the strongest plateau
/// line; beyond it the spectrum decays monotonically. `threshold_order` is
/// `Ip / ω`. The range must extend at least eight orders past the cutoff.
pub fn analyze_plateau(spectrum: &SpectrumResult, threshold_order: f64) -> Result<PlateauAnalysis> {
    let power = |q: u32| spectrum.value(q);
    let mut first = threshold_order.floor() as u32 + 1;
    if first.is_multiple_of(2) {
        first += 1;
    }
    let odd: Vec<(u32, f64)> = spectrum.lines.iter().filter(|l| l.q % 2 == 1 && l.q >= first).map(|l| (l.q, l.value)).collect();
    let strongest = odd.iter().map(|p| p.1).fold(0.0, f64::max);
    if odd.len() < 3 || strongest <= 0.0 {
        return Err(Error::Quadrature("spectrum has no odd lines above the ionization threshold".into()));
    }
    let cutoff = (1..odd.len() - 1)
        .rev()
        .find(|&i| odd[i].1 >= odd[i - 1].1 && odd[i].1 >= odd[i + 1].1 && odd[i].1 >= 0.1 * strongest)
        .map(|i| odd[i].0)
        .ok_or_else(|| Error::Quadrature("no plateau maximum found".into()))?;
    let beyond = power(cutoff + 8)
        .ok_or_else(|| invalid("harmonics.max", format!("must reach at least {} to measure the roll-off", cutoff + 8)))?;
    let plateau: Vec<f64> = odd.iter().filter(|p| p.0 <= cutoff).map(|p| p.1).collect();
    let top = plateau.iter().copied().fold(0.0, f64::max);
    let bottom = plateau.iter().copied().fold(f64::INFINITY, f64::min);
    let mut contrast = f64::INFINITY;
    for q in (2..=cutoff + 1).step_by(2) {
        if let (Some(lo), Some(even), Some(hi)) = (power(q - 1), power(q), power(q + 1)) {
            contrast = contrast.min(lo.min(hi) / even);
        }
    }
    Ok(PlateauAnalysis {
        first,
        cutoff,
        flatness: bottom / top,
        rolloff: beyond / power(cutoff).unwrap_or(f64::NAN),
        odd_even_contrast: contrast,
    })
}
