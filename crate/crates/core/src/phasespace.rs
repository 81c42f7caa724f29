//! Phase-space representations of the driving mode: Husimi Q functions,
//! the generalized P distribution built from them, and quadrature rules
//! over the complex plane.
//!
//! Integrals `∫ Q(α) f(α) d²α` are evaluated in polar coordinates around the
//! centre of each Gaussian component, `α = α_c + sqrt(u) e^{iθ}`, with a
//! (generalized) Gauss–Laguerre rule in `u` and a uniform rule in `θ`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;

use crate::error::{invalid, Error, Result};
use crate::field::{uniform_phases, DrivingState};

/// Gauss–Laguerre rule for `∫_0^∞ u^a e^{-u} f(u) du`, with weights
/// normalized to sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLaguerre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLaguerre {
    /// Golub–Welsch: nodes are the eigenvalues of the Jacobi matrix of the
    /// generalized Laguerre polynomials, weights the squared first
    /// eigenvector components.
    pub fn new(order: usize, a: f64) -> Self {
        assert!(order >= 1 && a > -1.0);
        let mut jacobi = DMatrix::<f64>::zeros(order, order);
        for i in 0..order {
            let fi = i as f64;
            jacobi[(i, i)] = 2.0 * fi + a + 1.0;
            if i + 1 < order {
                let off = ((fi + 1.0) * (fi + 1.0 + a)).sqrt();
                jacobi[(i, i + 1)] = off;
                jacobi[(i + 1, i)] = off;
            }
        }
        let eig = jacobi.symmetric_eigen();
        let mut pairs: Vec<(f64, f64)> = (0..order)
            .map(|k| (eig.eigenvalues[k], eig.eigenvectors[(0, k)].powi(2)))
            .collect();
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        GaussLaguerre {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1 / total).collect(),
        }
    }
}

/// Node counts of the factorized polar rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    pub radial: usize,
    pub angular: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { radial: 40, angular: 64 }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.radial < 1 {
            return Err(invalid("quadrature.radial", "must be >= 1"));
        }
        if self.angular < 1 {
            return Err(invalid("quadrature.angular", "must be >= 1"));
        }
        Ok(())
    }
}

/// How the Husimi average over the driving distribution is discretized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Quadrature {
    /// Full Q function at finite κ, integrated by the polar rule.
    Gaussian { radial: usize, angular: usize },
    /// κ → 0 at fixed physical field: every Gaussian component collapses onto
    /// its centre (Fock states onto the origin).
    ClassicalLimit,
}

impl Default for Quadrature {
    fn default() -> Self {
        let spec = QuadratureSpec::default();
        Quadrature::Gaussian { radial: spec.radial, angular: spec.angular }
    }
}

/// A weighted point of a complex-plane quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadNode {
    pub alpha: Complex64,
    pub weight: f64,
}

fn polar_rule(centre: Complex64, rule: &GaussLaguerre, angular: usize, scale: f64, out: &mut Vec<QuadNode>) {
    for (&u, &w) in rule.nodes.iter().zip(&rule.weights) {
        let r = u.sqrt();
        for theta in uniform_phases(angular) {
            out.push(QuadNode { alpha: centre + Complex64::from_polar(r, theta), weight: w * scale / angular as f64 });
        }
    }
}

/// Husimi Q function of a driving state together with its quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HusimiSampler {
    pub drive: DrivingState,
    pub quadrature: Quadrature,
}

impl HusimiSampler {
    pub fn new(drive: DrivingState, quadrature: Quadrature) -> Result<Self> {
        drive.validate()?;
        if let Quadrature::Gaussian { radial, angular } = quadrature {
            QuadratureSpec { radial, angular }.validate()?;
        }
        Ok(HusimiSampler { drive, quadrature })
    }

    /// `ln Q(α)`.
    pub fn ln_density(&self, alpha: Complex64) -> f64 {
        match self.drive {
            DrivingState::Coherent { alpha: a0 } => -(alpha - a0).norm_sqr() - PI.ln(),
            DrivingState::PhaseAveraged { alpha_abs, n_phi } => {
                let exponents: Vec<f64> = uniform_phases(n_phi)
                    .map(|phi| -(alpha - Complex64::from_polar(alpha_abs, phi)).norm_sqr())
                    .collect();
                let top = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let sum: f64 = exponents.iter().map(|e| (e - top).exp()).sum();
                top + (sum / n_phi as f64).ln() - PI.ln()
            }
            DrivingState::Fock { n } => {
                let r2 = alpha.norm_sqr();
                if n == 0 {
                    return -r2 - PI.ln();
                }
                if r2 == 0.0 {
                    return f64::NEG_INFINITY;
                }
                n as f64 * r2.ln() - r2 - ln_factorial(n) - PI.ln()
            }
        }
    }

    /// `Q(α) = ⟨α|ρ|α⟩ / π`.
    pub fn density(&self, alpha: Complex64) -> f64 {
        self.ln_density(alpha).exp()
    }

    /// Quadrature nodes with `Σ w f(α) ≈ ∫ Q(α) f(α) d²α`.
    pub fn nodes(&self) -> Vec<QuadNode> {
        match self.quadrature {
            Quadrature::ClassicalLimit => match self.drive {
                DrivingState::Coherent { alpha } => vec![QuadNode { alpha, weight: 1.0 }],
                DrivingState::PhaseAveraged { alpha_abs, n_phi } => uniform_phases(n_phi)
                    .map(|phi| QuadNode { alpha: Complex64::from_polar(alpha_abs, phi), weight: 1.0 / n_phi as f64 })
                    .collect(),
                DrivingState::Fock { .. } => vec![QuadNode { alpha: Complex64::new(0.0, 0.0), weight: 1.0 }],
            },
            Quadrature::Gaussian { radial, angular } => {
                let mut out = Vec::new();
                match self.drive {
                    DrivingState::Coherent { alpha } => {
                        polar_rule(alpha, &GaussLaguerre::new(radial, 0.0), angular, 1.0, &mut out);
                    }
                    DrivingState::PhaseAveraged { alpha_abs, n_phi } => {
                        let rule = GaussLaguerre::new(radial, 0.0);
                        for phi in uniform_phases(n_phi) {
                            let centre = Complex64::from_polar(alpha_abs, phi);
                            polar_rule(centre, &rule, angular, 1.0 / n_phi as f64, &mut out);
                        }
                    }
                    DrivingState::Fock { n } => {
                        let rule = GaussLaguerre::new(radial, n as f64);
                        polar_rule(Complex64::new(0.0, 0.0), &rule, angular, 1.0, &mut out);
                    }
                }
                out
            }
        }
    }

    /// `Σ w f(α)` over the nodes.
    pub fn integrate(&self, f: impl Fn(Complex64) -> f64) -> f64 {
        self.nodes().iter().map(|node| node.weight * f(node.alpha)).sum()
    }

    /// Mean field amplitude `∫ Q(α) α d²α`.
    pub fn centre(&self) -> Complex64 {
        match self.drive {
            DrivingState::Coherent { alpha } => alpha,
            _ => Complex64::new(0.0, 0.0),
        }
    }

    /// Q evaluated on a square `points × points` grid of half-width
    /// `extent` around the origin: `(Re α, Im α, Q)`.
    pub fn grid(&self, extent: f64, points: usize) -> Vec<(f64, f64, f64)> {
        let step = if points > 1 { 2.0 * extent / (points - 1) as f64 } else { 0.0 };
        let mut out = Vec::with_capacity(points * points);
        for i in 0..points {
            for j in 0..points {
                let alpha = Complex64::new(-extent + i as f64 * step, -extent + j as f64 * step);
                out.push((alpha.re, alpha.im, self.density(alpha)));
            }
        }
        out
    }
}

/// Sampler for `drive` with the default quadrature.
pub fn husimi(drive: DrivingState) -> Result<HusimiSampler> {
    HusimiSampler::new(drive, Quadrature::default())
}

/// Generalized P distribution
/// `P(α, β*) = (1/4π) e^{-|α - β*|²/4} Q((α + β*)/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralizedP {
    pub husimi: HusimiSampler,
}

impl GeneralizedP {
    pub fn ln_value(&self, alpha: Complex64, beta_conj: Complex64) -> f64 {
        -(alpha - beta_conj).norm_sqr() / 4.0 - (4.0 * PI).ln() + self.husimi.ln_density(0.5 * (alpha + beta_conj))
    }

    pub fn value(&self, alpha: Complex64, beta_conj: Complex64) -> f64 {
        self.ln_value(alpha, beta_conj).exp()
    }

    /// `∫∫ P(α, β*) d²α d²β` by nested quadrature.
    ///
    /// The integral is taken in midpoint/difference coordinates
    /// `c = (α + β*)/2`, `δ = α - β*` (unit Jacobian). The `δ` rule carries the
    /// weight `(1/4π) e^{-|δ|²/4}` and the `c` rule a unit Gaussian centred on
    /// the mean field; `P` itself is evaluated point-wise at every `(α, β*)`
    /// pair and divided by the two rule weights.
    pub fn normalization(&self, spec: QuadratureSpec) -> Result<f64> {
        spec.validate()?;
        let rule = GaussLaguerre::new(spec.radial, 0.0);
        let mut diff_nodes = Vec::new();
        polar_rule(Complex64::new(0.0, 0.0), &rule, spec.angular, 1.0, &mut diff_nodes);
        let centre = self.husimi.centre();
        let mut mid_nodes = Vec::new();
        polar_rule(centre, &rule, spec.angular, 1.0, &mut mid_nodes);

        let mut total = 0.0;
        for d in &diff_nodes {
            // u = |δ|²/4: δ = 2 sqrt(u) e^{iθ}
            let delta = 2.0 * d.alpha;
            let ln_diff_weight = -delta.norm_sqr() / 4.0 - (4.0 * PI).ln();
            let mut inner = 0.0;
            for c in &mid_nodes {
                let ln_mid_weight = -(c.alpha - centre).norm_sqr() - PI.ln();
                let alpha = c.alpha + 0.5 * delta;
                let beta_conj = c.alpha - 0.5 * delta;
                inner += c.weight * (self.ln_value(alpha, beta_conj) - ln_diff_weight - ln_mid_weight).exp();
            }
            total += d.weight * inner;
        }
        Ok(total)
    }
}

pub fn generalized_p(drive: DrivingState) -> Result<GeneralizedP> {
    Ok(GeneralizedP { husimi: husimi(drive)? })
}

/// Classical-limit probe of the generalized P representation.
///
/// For each κ the drive is the coherent state of physical amplitude
/// `e_center` (`α₀ = e_center / 2κ`). The functional `F(E_α)`, `E_α = 2κα`,
/// is integrated against the full product `P(α, β*)` over both amplitudes,
/// and the distance to `F(e_center)` is reported. For `F = |E - e_center|²`
/// the error is exactly `8κ²`.
pub fn delta_limit_probe(
    kappa_values: &[f64],
    e_center: Complex64,
    spec: QuadratureSpec,
    functional: impl Fn(Complex64) -> f64,
) -> Result<Vec<(f64, f64)>> {
    if kappa_values.len() < 3 {
        return Err(Error::InsufficientScan(kappa_values.len()));
    }
    spec.validate()?;
    let reference = functional(e_center);
    if !reference.is_finite() {
        return Err(Error::Divergent { re: e_center.re, im: e_center.im });
    }
    let rule = GaussLaguerre::new(spec.radial, 0.0);
    let mut unit = Vec::new();
    polar_rule(Complex64::new(0.0, 0.0), &rule, spec.angular, 1.0, &mut unit);

    kappa_values
        .iter()
        .map(|&kappa| {
            if !(kappa.is_finite() && kappa > 0.0) {
                return Err(invalid("kappa", format!("must be finite and > 0 (got {kappa})")));
            }
            let alpha0 = e_center / (2.0 * kappa);
            let mut total = 0.0;
            for d in &unit {
                let half_delta = d.alpha; // δ/2 with δ = 2 sqrt(u) e^{iθ}
                let mut inner = 0.0;
                for c in &unit {
                    let e = 2.0 * kappa * (alpha0 + c.alpha + half_delta);
                    let value = functional(e);
                    if !value.is_finite() {
                        return Err(Error::Divergent { re: e.re, im: e.im });
                    }
                    inner += c.weight * value;
                }
                total += d.weight * inner;
            }
            Ok((kappa, (total - reference).abs()))
        })
        .collect()
}

/// `ln[(n+q)!/n!]`.
pub fn ln_fock_moment(n: u64, q: u64) -> f64 {
    ln_factorial(n + q) - ln_factorial(n)
}

/// `∫ Q_n(α) |α|^{2q} d²α = (n+q)!/n!`.
pub fn fock_moment(n: u64, q: u64) -> f64 {
    let direct: f64 = (n + 1..=n + q).map(|k| k as f64).product();
    if direct.is_finite() {
        direct
    } else {
        ln_fock_moment(n, q).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn laguerre_integrates_gamma_moments() {
        let rule = GaussLaguerre::new(12, 0.0);
        let m5: f64 = rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w * x.powi(5)).sum();
        assert_relative_eq!(m5, 120.0, max_relative = 1e-12);
        // generalized: ∫u^3 e^{-u} u^2 du / Γ(4) = 5!/3!
        let rule = GaussLaguerre::new(12, 3.0);
        let m2: f64 = rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w * x * x).sum();
        assert_relative_eq!(m2, 20.0, max_relative = 1e-12);
    }

    #[test]
    fn fock_q_values() {
        let vac = husimi(DrivingState::fock(0)).unwrap();
        assert_abs_diff_eq!(vac.density(Complex64::new(0.0, 0.0)), 1.0 / PI, epsilon = 1e-15);
        let one = husimi(DrivingState::fock(1)).unwrap();
        assert_abs_diff_eq!(one.density(Complex64::new(0.0, 1.0)), 0.117_099_663_048_638_24, epsilon = 1e-15);
        assert_eq!(one.density(Complex64::new(0.0, 0.0)), 0.0);
    }

    #[test]
    fn phase_averaged_q_is_rotation_invariant() {
        for &a0 in &[2.0, 5.0] {
            let sampler = husimi(DrivingState::phase_averaged(a0, 64)).unwrap();
            for step in 0..12 {
                let r = step as f64 * (a0 + 5.0) / 11.0;
                let samples: Vec<f64> =
                    (0..32).map(|k| sampler.density(Complex64::from_polar(r, 0.1963 * k as f64))).collect();
                let mean = samples.iter().sum::<f64>() / samples.len() as f64;
                let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / samples.len() as f64;
                assert!(var <= 1e-10, "r = {r}: variance {var}");
                let spread = samples.iter().map(|s| (s - mean).abs()).fold(0.0, f64::max);
                assert!(spread <= 1e-10);
            }
        }
    }

    #[test]
    fn samplers_normalize_and_are_non_negative() {
        let drives = [
            DrivingState::coherent(Complex64::new(3.0, -1.0)),
            DrivingState::phase_averaged(4.0, 256),
            DrivingState::fock(0),
            DrivingState::fock(7),
        ];
        for drive in drives {
            let s = husimi(drive).unwrap();
            assert_abs_diff_eq!(s.integrate(|_| 1.0), 1.0, epsilon = 1e-8);
            let extent = match drive {
                DrivingState::Coherent { alpha } => alpha.norm() + 6.0,
                DrivingState::PhaseAveraged { alpha_abs, .. } => alpha_abs + 6.0,
                DrivingState::Fock { n } => (n as f64).sqrt() + 6.0,
            };
            assert!(s.grid(extent, 200).iter().all(|&(_, _, q)| q >= 0.0 && q.is_finite()));
        }
    }

    #[test]
    fn classical_limit_nodes() {
        let s = HusimiSampler::new(DrivingState::phase_averaged(2.0, 8), Quadrature::ClassicalLimit).unwrap();
        let nodes = s.nodes();
        assert_eq!(nodes.len(), 8);
        assert_abs_diff_eq!(nodes.iter().map(|n| n.weight).sum::<f64>(), 1.0, epsilon = 1e-15);
        assert!(nodes.iter().all(|n| (n.alpha.norm() - 2.0).abs() < 1e-14));
    }

    #[test]
    fn fock_moments_closed_form() {
        assert_eq!(fock_moment(2, 1), 3.0);
        assert_eq!(fock_moment(7, 0), 1.0);
        assert_eq!(fock_moment(0, 4), 24.0);
        assert_relative_eq!(ln_fock_moment(1000, 500), (1001..=1500).map(|k| (k as f64).ln()).sum::<f64>(), max_relative = 1e-12);
    }

    #[test]
    fn fock_moments_by_quadrature() {
        for n in 0..=12u64 {
            let s = husimi(DrivingState::fock(n)).unwrap();
            for q in 0..=12u64 {
                let quad = s.integrate(|a| a.norm_sqr().powi(q as i32));
                assert_relative_eq!(quad, fock_moment(n, q), max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn generalized_p_diagonal_and_decay() {
        let p = generalized_p(DrivingState::coherent(Complex64::new(1.0, 0.5))).unwrap();
        let a = Complex64::new(0.3, -0.2);
        assert_relative_eq!(p.value(a, a), p.husimi.density(a) / (4.0 * PI), max_relative = 1e-14);
        let mid = Complex64::new(1.0, 0.5);
        let off = p.value(mid + 3.0, mid - 3.0);
        assert!(off <= (-9.0f64).exp() * p.value(mid, mid));
    }

    #[test]
    fn generalized_p_normalizes() {
        let spec = QuadratureSpec { radial: 20, angular: 16 };
        for drive in [DrivingState::coherent(Complex64::new(2.0, 1.0)), DrivingState::fock(3)] {
            let p = generalized_p(drive).unwrap();
            assert_abs_diff_eq!(p.normalization(spec).unwrap(), 1.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn delta_probe_closed_forms() {
        let spec = QuadratureSpec { radial: 8, angular: 8 };
        let kappas = [0.1, 0.05, 0.025];
        let flat = delta_limit_probe(&kappas, Complex64::new(0.05, 0.0), spec, |_| 1.0).unwrap();
        assert!(flat.iter().all(|&(_, e)| e < 1e-14));
        let second = delta_limit_probe(&kappas, Complex64::new(0.0, 0.0), spec, |e| e.norm_sqr()).unwrap();
        for &(k, e) in &second {
            assert_relative_eq!(e, 8.0 * k * k, max_relative = 1e-12);
        }
        assert_relative_eq!(second[0].1 / second[1].1, 4.0, max_relative = 1e-12);
        assert!(matches!(
            delta_limit_probe(&kappas[..2], Complex64::new(0.0, 0.0), spec, |_| 1.0),
            Err(Error::InsufficientScan(2))
        ));
        assert!(matches!(
            delta_limit_probe(&kappas, Complex64::new(0.0, 0.0), spec, |e| 1.0 / e.norm() - 1e300 * e.norm()),
            Err(Error::Divergent { .. })
        ));
    }
}
