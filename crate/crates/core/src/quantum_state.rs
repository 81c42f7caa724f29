//! Truncated Fock-basis states of a single harmonic mode.
//!
//! All Poisson weights and coherent-state amplitudes are assembled from
//! log-space terms so that mean photon numbers up to ~10³ stay representable.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;

use crate::error::{Error, Result};

/// Largest Poisson tail mass tolerated when truncating a harmonic mode.
pub const STATE_TAIL_LIMIT: f64 = 1e-10;

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-10;
const DIAGONAL_FLOOR: f64 = -1e-14;

/// Fock cutoff `ceil(μ + 12 sqrt(μ + 1))` for a Poisson law of mean `μ`.
pub fn truncation_rule(mean: f64) -> usize {
    (mean + 12.0 * (mean + 1.0).sqrt()).ceil() as usize
}

fn ln_poisson(mean: f64, n: u64) -> f64 {
    if mean == 0.0 {
        return if n == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    -mean + n as f64 * mean.ln() - ln_factorial(n)
}

/// Poisson probability of `n` for mean `mean`.
pub fn poisson_pmf(mean: f64, n: u64) -> f64 {
    ln_poisson(mean, n).exp()
}

/// Probability mass beyond `n_max` for a Poisson law of mean `mean`, summed
/// term by term (no `1 - Σ` cancellation).
pub fn poisson_tail(mean: f64, n_max: usize) -> f64 {
    if mean == 0.0 {
        return 0.0;
    }
    let mut tail = 0.0;
    let mut n = n_max as u64 + 1;
    loop {
        let term = poisson_pmf(mean, n);
        tail += term;
        if (n as f64) > mean && (term <= tail * 1e-17 || term < 1e-300) {
            break;
        }
        n += 1;
    }
    tail
}

fn check_truncation(mean: f64, n_max: usize) -> Result<()> {
    let tail = poisson_tail(mean, n_max);
    if tail > STATE_TAIL_LIMIT {
        return Err(Error::Truncation {
            n_max,
            tail,
            limit: STATE_TAIL_LIMIT,
            suggested: truncation_rule(mean),
        });
    }
    Ok(())
}

/// Fock amplitudes `e^{-|χ|²/2} χⁿ / sqrt(n!)`, `n = 0..=n_max`.
fn coherent_amplitudes(chi: Complex64, n_max: usize) -> Vec<Complex64> {
    let r = chi.norm();
    if r == 0.0 {
        let mut v = vec![Complex64::new(0.0, 0.0); n_max + 1];
        v[0] = Complex64::new(1.0, 0.0);
        return v;
    }
    let (ln_r, theta) = (r.ln(), chi.arg());
    (0..=n_max)
        .map(|n| {
            let ln_mag = -0.5 * r * r + n as f64 * ln_r - 0.5 * ln_factorial(n as u64);
            Complex64::from_polar(ln_mag.exp(), n as f64 * theta)
        })
        .collect()
}

/// Density matrix of harmonic mode `q` in the Fock basis `|0⟩..|n_max⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeDensityMatrix {
    q: u32,
    rho: DMatrix<Complex64>,
}

impl ModeDensityMatrix {
    /// Wraps `rho` after checking hermiticity, trace and diagonal sign.
    pub fn from_matrix(q: u32, rho: DMatrix<Complex64>) -> Result<Self> {
        let state = ModeDensityMatrix { q, rho };
        state.validate()?;
        Ok(state)
    }

    pub fn validate(&self) -> Result<()> {
        let rho = &self.rho;
        if !rho.is_square() || rho.nrows() == 0 {
            return Err(Error::InvalidState(format!("matrix is {}x{}", rho.nrows(), rho.ncols())));
        }
        let dim = rho.nrows();
        for n in 0..dim {
            for m in 0..dim {
                let dev = (rho[(n, m)] - rho[(m, n)].conj()).norm();
                if dev.is_nan() || dev > HERMITIAN_TOL {
                    return Err(Error::InvalidState(format!("not Hermitian at ({n}, {m}): deviation {dev:e}")));
                }
            }
            let d = rho[(n, n)];
            if d.im != 0.0 || d.re < DIAGONAL_FLOOR {
                return Err(Error::InvalidState(format!("diagonal entry {n} is {d}")));
            }
        }
        let trace = self.trace();
        if (trace - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {trace} differs from 1")));
        }
        Ok(())
    }

    /// Number state `|n⟩⟨n|`, truncated at `n + 1`.
    pub fn fock(q: u32, n: usize) -> Self {
        let mut rho = DMatrix::zeros(n + 2, n + 2);
        rho[(n, n)] = Complex64::new(1.0, 0.0);
        ModeDensityMatrix { q, rho }
    }

    /// Diagonal Poisson state without the truncation check.
    pub(crate) fn poisson_unchecked(q: u32, mean: f64, n_max: usize) -> Result<Self> {
        let mut rho = DMatrix::zeros(n_max + 1, n_max + 1);
        for n in 0..=n_max {
            rho[(n, n)] = Complex64::new(poisson_pmf(mean, n as u64), 0.0);
        }
        ModeDensityMatrix::from_matrix(q, rho)
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn n_max(&self) -> usize {
        self.rho.nrows() - 1
    }

    pub fn get(&self, n: usize, m: usize) -> Complex64 {
        self.rho[(n, m)]
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.rho
    }

    pub fn trace(&self) -> f64 {
        (0..self.rho.nrows()).map(|n| self.rho[(n, n)].re).sum()
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        self.rho.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `Σ_{n≠m} |ρ_nm|`.
    pub fn l1_coherence(&self) -> f64 {
        l1_coherence(self)
    }

    /// `Σ_n n ρ_nn`.
    pub fn mean_photon(&self) -> f64 {
        (0..self.rho.nrows()).map(|n| n as f64 * self.rho[(n, n)].re).sum()
    }

    pub fn photon_distribution(&self) -> Vec<f64> {
        (0..self.rho.nrows()).map(|n| self.rho[(n, n)].re).collect()
    }

    /// `Tr[a ρ] = Σ_n sqrt(n + 1) ρ_{n+1, n}`.
    pub fn mean_field_amplitude(&self) -> Complex64 {
        (0..self.n_max()).map(|n| ((n + 1) as f64).sqrt() * self.rho[(n + 1, n)]).sum()
    }

    /// Smallest eigenvalue of the Hermitian matrix.
    pub fn min_eigenvalue(&self) -> f64 {
        self.rho
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn coherence_report(&self) -> CoherenceReport {
        CoherenceReport {
            q: self.q,
            n_max: self.n_max(),
            l1_offdiagonal: self.l1_coherence(),
            mean_a: self.mean_field_amplitude(),
            mean_photon: self.mean_photon(),
            purity: self.purity(),
            photon_distribution: self.photon_distribution(),
        }
    }
}

/// Coherence and photon-statistics diagnostics of one mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceReport {
    pub q: u32,
    pub n_max: usize,
    pub l1_offdiagonal: f64,
    pub mean_a: Complex64,
    pub mean_photon: f64,
    pub purity: f64,
    pub photon_distribution: Vec<f64>,
}

/// Coherent state `|χ⟩⟨χ|` of mode `q`.
pub fn coherent_mode_state(q: u32, chi: Complex64, n_max: usize) -> Result<ModeDensityMatrix> {
    check_truncation(chi.norm_sqr(), n_max)?;
    let c = coherent_amplitudes(chi, n_max);
    let rho = DMatrix::from_fn(n_max + 1, n_max + 1, |n, m| c[n] * c[m].conj());
    ModeDensityMatrix::from_matrix(q, rho)
}

/// Equal-weight mixture of the coherent states `|χ_k⟩` of mode `q`.
pub fn mixture_mode_state(q: u32, chis: &[Complex64], n_max: usize) -> Result<ModeDensityMatrix> {
    if chis.is_empty() {
        return Err(Error::InvalidState("mixture has no components".into()));
    }
    let dim = n_max + 1;
    let mut rho = DMatrix::<Complex64>::zeros(dim, dim);
    for &chi in chis {
        check_truncation(chi.norm_sqr(), n_max)?;
        let c = coherent_amplitudes(chi, n_max);
        for n in 0..dim {
            for m in 0..dim {
                rho[(n, m)] += c[n] * c[m].conj();
            }
        }
    }
    rho /= Complex64::new(chis.len() as f64, 0.0);
    // the accumulated diagonal is real up to rounding of c_n c_n*
    for n in 0..dim {
        rho[(n, n)].im = 0.0;
    }
    ModeDensityMatrix::from_matrix(q, rho)
}

/// State of harmonic `q` for a phase-averaged drive: the uniform mixture of
/// `|e^{-iqφ_k} χ_abs⟩` over `n_phi` equally spaced drive phases.
///
/// The phase sum cancels the `(n, m)` coherence exactly whenever
/// `0 < q |n - m| < n_phi`, hence the requirement `n_phi > q · n_max`.
pub fn phase_averaged_mode_state(chi_abs: f64, q: u32, n_phi: usize, n_max: usize) -> Result<ModeDensityMatrix> {
    let product = q as usize * n_max;
    if n_phi <= product {
        return Err(Error::Aliasing { n_phi, product, min: product + 1 });
    }
    if !(chi_abs.is_finite() && chi_abs >= 0.0) {
        return Err(Error::InvalidState(format!("|chi| = {chi_abs} is not a valid modulus")));
    }
    let chis: Vec<Complex64> = (0..n_phi)
        .map(|k| {
            // reduce q·k modulo n_phi before forming the angle
            let turns = (q as usize * k) % n_phi;
            let angle = -2.0 * std::f64::consts::PI * turns as f64 / n_phi as f64;
            Complex64::from_polar(chi_abs, angle)
        })
        .collect();
    mixture_mode_state(q, &chis, n_max)
}

/// Diagonal Poisson state of mean `mean`.
pub fn poisson_mode_state(q: u32, mean: f64, n_max: usize) -> Result<ModeDensityMatrix> {
    if !(mean.is_finite() && mean >= 0.0) {
        return Err(Error::InvalidState(format!("Poisson mean {mean} must be finite and >= 0")));
    }
    check_truncation(mean, n_max)?;
    ModeDensityMatrix::poisson_unchecked(q, mean, n_max)
}

/// l1-norm of coherence: `Σ_{n≠m} |ρ_nm|`.
pub fn l1_coherence(rho: &ModeDensityMatrix) -> f64 {
    let m = rho.matrix();
    let mut sum = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if i != j {
                sum += m[(i, j)].norm();
            }
        }
    }
    sum
}

pub fn mean_photon(rho: &ModeDensityMatrix) -> f64 {
    rho.mean_photon()
}

pub fn photon_distribution(rho: &ModeDensityMatrix) -> Vec<f64> {
    rho.photon_distribution()
}

pub fn mean_field_amplitude(rho: &ModeDensityMatrix) -> Complex64 {
    rho.mean_field_amplitude()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn truncation_rule_bounds_tail() {
        for &mean in &[0.0, 0.25, 1.0, 4.0, 30.0, 400.0] {
            assert!(poisson_tail(mean, truncation_rule(mean)) < 1e-12, "mean {mean}");
        }
        // brute force: 1 - Σ for a moderate case
        let head: f64 = (0..=5).map(|n| poisson_pmf(2.0, n)).sum();
        assert_abs_diff_eq!(poisson_tail(2.0, 5), 1.0 - head, epsilon = 1e-15);
    }

    #[test]
    fn vacuum_coherent_state() {
        let rho = coherent_mode_state(1, c(0.0, 0.0), 5).unwrap();
        assert_eq!(rho.get(0, 0), c(1.0, 0.0));
        assert_eq!(rho.l1_coherence(), 0.0);
    }

    #[test]
    fn coherent_state_entries_and_purity() {
        let rho = coherent_mode_state(1, c(1.0, 0.0), 20).unwrap();
        assert_abs_diff_eq!(rho.get(0, 0).re, 0.367_879_441_171_442_3, epsilon = 1e-15);
        let rho = coherent_mode_state(3, Complex64::from_polar(2.0, 0.4), 40).unwrap();
        assert_abs_diff_eq!(rho.purity(), 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(rho.mean_photon(), 4.0, epsilon = 1e-10);
        let a = rho.mean_field_amplitude();
        assert_abs_diff_eq!(a.re, 2.0 * 0.4f64.cos(), epsilon = 1e-10);
        assert_abs_diff_eq!(a.im, 2.0 * 0.4f64.sin(), epsilon = 1e-10);
    }

    #[test]
    fn truncation_violation_suggests_cutoff() {
        match coherent_mode_state(1, c(3.0, 0.0), 10) {
            Err(Error::Truncation { suggested, .. }) => assert_eq!(suggested, truncation_rule(9.0)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn l1_matches_brute_force_sum() {
        let n_max = 20;
        let rho = coherent_mode_state(1, c(1.0, 0.0), n_max).unwrap();
        let fact = |k: usize| (1..=k).map(|i| i as f64).product::<f64>();
        let mut expected = 0.0;
        for n in 0..=n_max {
            for m in 0..=n_max {
                if n != m {
                    expected += (-1.0f64).exp() / (fact(n) * fact(m)).sqrt();
                }
            }
        }
        assert_abs_diff_eq!(rho.l1_coherence(), expected, epsilon = 1e-12);
    }

    #[test]
    fn opposite_phase_mixture_has_less_coherence() {
        let chi = c(1.2, 0.3);
        let pure = coherent_mode_state(1, chi, 30).unwrap();
        let mixed = mixture_mode_state(1, &[chi, -chi], 30).unwrap();
        assert!(mixed.l1_coherence() <= pure.l1_coherence());
        // only even-order coherences survive
        assert!(mixed.get(0, 1).norm() < 1e-16);
        assert!(mixed.get(0, 2).norm() > 0.1);
    }

    #[test]
    fn phase_averaged_state_is_poisson() {
        let rho = phase_averaged_mode_state(2f64.sqrt(), 1, 64, 30).unwrap();
        assert_abs_diff_eq!(rho.get(2, 2).re, 0.270_670_566_473_225_4, epsilon = 1e-12);
        let poisson = poisson_mode_state(1, 2.0, 30).unwrap();
        for n in 0..=30 {
            for m in 0..=30 {
                assert!((rho.get(n, m) - poisson.get(n, m)).norm() <= 1e-12);
            }
        }
    }

    #[test]
    fn eight_point_phase_sum_cancels() {
        let rho = phase_averaged_mode_state(0.2, 1, 8, 7).unwrap();
        assert!(rho.get(0, 1).norm() < 1e-16);
        assert!(rho.l1_coherence() < 1e-15);
    }

    #[test]
    fn aliasing_is_rejected_with_minimum() {
        match phase_averaged_mode_state(1.0, 3, 30, 10) {
            Err(Error::Aliasing { min, .. }) => assert_eq!(min, 31),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn poisson_statistics() {
        let vac = poisson_mode_state(1, 0.0, 4).unwrap();
        assert_eq!(vac.get(0, 0), c(1.0, 0.0));
        let p = poisson_mode_state(1, 2.0, truncation_rule(2.0)).unwrap();
        assert_abs_diff_eq!(p.mean_photon(), 2.0, epsilon = 1e-10);
        assert_eq!(p.l1_coherence(), 0.0);
        assert_eq!(p.mean_field_amplitude(), c(0.0, 0.0));
    }

    #[test]
    fn positivity_up_to_forty_photons() {
        let states = [
            coherent_mode_state(1, c(1.5, -2.0), 40).unwrap(),
            phase_averaged_mode_state(2.0, 5, 256, 40).unwrap(),
            mixture_mode_state(2, &[c(1.0, 1.0), c(-0.5, 2.0), c(0.0, -1.0)], 40).unwrap(),
        ];
        for s in &states {
            assert!(s.min_eigenvalue() >= -1e-10);
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 0)] = c(0.5, 0.0);
        m[(1, 1)] = c(0.5, 0.0);
        m[(0, 1)] = c(0.1, 0.0);
        assert!(ModeDensityMatrix::from_matrix(1, m).is_err());
    }

    #[test]
    fn fock_state_has_no_mean_field() {
        let rho = ModeDensityMatrix::fock(1, 3);
        assert_eq!(rho.mean_field_amplitude(), c(0.0, 0.0));
        assert_eq!(rho.mean_photon(), 3.0);
    }
}
