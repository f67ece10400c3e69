//! Analytical backscatter model for a homogeneous scattering medium.
//!
//! Backscattered light arriving with phase shift `φ` (one-to-one with travel
//! distance) has an amplitude density falling off with the inverse-square law
//! and two exponentials: intensity extinction `σᵢ` and loss of the degree of
//! polarization `σₚ`. The polarization-preserving part keeps `e^{-σₚφ}` of it,
//! the depolarized part the remaining `1 − e^{-σₚφ}`. Every integral starts at
//! the near-range phase `φ₀`.
//!
//! The mean phases of both components have closed forms in terms of `E₁` and
//! `E₂`. [`integrate_backscatter`] evaluates the same quantities, plus the
//! complex phasor sum, by direct adaptive quadrature and serves as the oracle
//! for the closed forms.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{geometric_breaks, integrate_with_breaks, QuadratureSpec};
use crate::special::{exp_integral_e1_scaled, exp_integral_e2_scaled};

/// Extinction parameters of the medium, all per radian of phase shift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFog", into = "RawFog")]
pub struct FogParams {
    sigma_i: f64,
    sigma_p: f64,
    phi0: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFog {
    sigma_i: f64,
    sigma_p: f64,
    phi0: f64,
}

impl TryFrom<RawFog> for FogParams {
    type Error = Error;

    fn try_from(r: RawFog) -> Result<Self> {
        FogParams::new(r.sigma_i, r.sigma_p, r.phi0)
    }
}

impl From<FogParams> for RawFog {
    fn from(f: FogParams) -> Self {
        RawFog {
            sigma_i: f.sigma_i,
            sigma_p: f.sigma_p,
            phi0: f.phi0,
        }
    }
}

impl FogParams {
    pub fn new(sigma_i: f64, sigma_p: f64, phi0: f64) -> Result<Self> {
        if !(sigma_i > 0.0 && sigma_i.is_finite()) {
            return Err(Error::Domain(format!("sigma_i must be positive, got {sigma_i}")));
        }
        if !(sigma_p >= 0.0 && sigma_p.is_finite()) {
            return Err(Error::Domain(format!("sigma_p must be non-negative, got {sigma_p}")));
        }
        if !(phi0 > 0.0 && phi0.is_finite()) {
            return Err(Error::Domain(format!("phi0 must be positive, got {phi0}")));
        }
        Ok(FogParams { sigma_i, sigma_p, phi0 })
    }

    /// Split a total decay rate as `σᵢ = α·σ`, `σₚ = σ − σᵢ`.
    pub fn from_total(sigma: f64, alpha: f64, phi0: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::Domain(format!("alpha must lie in (0, 1], got {alpha}")));
        }
        let sigma_i = alpha * sigma;
        FogParams::new(sigma_i, (sigma - sigma_i).max(0.0), phi0)
    }

    pub fn sigma_i(&self) -> f64 {
        self.sigma_i
    }

    pub fn sigma_p(&self) -> f64 {
        self.sigma_p
    }

    pub fn phi0(&self) -> f64 {
        self.phi0
    }

    pub fn sigma_total(&self) -> f64 {
        self.sigma_i + self.sigma_p
    }

    /// `σᵢ/σ`.
    pub fn alpha(&self) -> f64 {
        self.sigma_i / self.sigma_total()
    }

    /// Same medium with all rates multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Result<Self> {
        FogParams::new(self.sigma_i * k, self.sigma_p * k, self.phi0)
    }
}

/// Which part of the backscatter a density or integral refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    Polarized,
    Unpolarized,
}

fn check_phase(phi: f64, fog: &FogParams) -> Result<()> {
    if phi >= fog.phi0 && phi.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "phase {phi} lies below the near-range phase {}",
            fog.phi0
        )))
    }
}

/// `φ⁻²·e^{-σᵢφ}·e^{-σₚφ}` (unnormalized).
pub fn amp_density_polarized(phi: f64, fog: &FogParams) -> Result<f64> {
    check_phase(phi, fog)?;
    Ok((-fog.sigma_i * phi).exp() * (-fog.sigma_p * phi).exp() / (phi * phi))
}

/// `φ⁻²·e^{-σᵢφ}·(1 − e^{-σₚφ})` (unnormalized).
pub fn amp_density_unpolarized(phi: f64, fog: &FogParams) -> Result<f64> {
    check_phase(phi, fog)?;
    Ok((-fog.sigma_i * phi).exp() * -(-fog.sigma_p * phi).exp_m1() / (phi * phi))
}

/// Density multiplied by `e^{rate·φ₀}`, where `rate` is the component's decay
/// rate. Keeps the integrands O(1/φ₀²) at the lower limit for any medium.
fn scaled_density(component: Component, fog: &FogParams) -> impl Fn(f64) -> f64 + Copy {
    let (si, sp, phi0) = (fog.sigma_i, fog.sigma_p, fog.phi0);
    move |phi: f64| match component {
        Component::Polarized => (-(si + sp) * (phi - phi0)).exp() / (phi * phi),
        Component::Unpolarized => (-si * (phi - phi0)).exp() * -(-sp * phi).exp_m1() / (phi * phi),
    }
}

fn decay_rate(component: Component, fog: &FogParams) -> f64 {
    match component {
        Component::Polarized => fog.sigma_total(),
        Component::Unpolarized => fog.sigma_i,
    }
}

/// Mean phase of the polarized backscatter, `f(σ) = φ₀·E₁(σφ₀)/E₂(σφ₀)`.
///
/// Equivalent to `E₁(σφ₀) / (e^{-σφ₀}/φ₀ − σ·E₁(σφ₀))`; written with `E₂`
/// and exponentially scaled functions it stays finite for any `σφ₀`.
pub fn mean_phase_polarized(sigma_total: f64, phi0: f64) -> Result<f64> {
    if !(sigma_total > 0.0 && phi0 > 0.0) {
        return Err(Error::Domain(format!(
            "mean phase needs sigma > 0 and phi0 > 0, got sigma={sigma_total}, phi0={phi0}"
        )));
    }
    let x = sigma_total * phi0;
    Ok(phi0 * exp_integral_e1_scaled(x)? / exp_integral_e2_scaled(x)?)
}

/// `∂f/∂σ` of [`mean_phase_polarized`]. Always negative.
pub fn mean_phase_polarized_slope(sigma_total: f64, phi0: f64) -> Result<f64> {
    if !(sigma_total > 0.0 && phi0 > 0.0) {
        return Err(Error::Domain(format!(
            "mean phase needs sigma > 0 and phi0 > 0, got sigma={sigma_total}, phi0={phi0}"
        )));
    }
    let x = sigma_total * phi0;
    let e1 = exp_integral_e1_scaled(x)?;
    let e2 = exp_integral_e2_scaled(x)?;
    Ok(phi0 * phi0 * (e1 * e1 - e2 / x) / (e2 * e2))
}

/// Mean phase of the depolarized backscatter:
/// `φ₀·(E₁(σᵢφ₀) − E₁(σφ₀)) / (E₂(σᵢφ₀) − E₂(σφ₀))`.
pub fn mean_phase_unpolarized(fog: &FogParams) -> Result<f64> {
    if fog.sigma_p <= 0.0 {
        return Err(Error::NoUnpolarized);
    }
    let xi = fog.sigma_i * fog.phi0;
    let x = fog.sigma_total() * fog.phi0;
    // common factor e^{-xi} removed from numerator and denominator
    let shift = (-fog.sigma_p * fog.phi0).exp();
    let num = exp_integral_e1_scaled(xi)? - shift * exp_integral_e1_scaled(x)?;
    let den = exp_integral_e2_scaled(xi)? - shift * exp_integral_e2_scaled(x)?;
    Ok(fog.phi0 * num / den)
}

/// Moments of a backscatter density over `[φ₀, upper]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackscatterIntegral {
    /// `Z = ∫ a(φ)·e^{iφ} dφ`.
    pub phasor_sum: Complex64,
    /// `M = ∫ a(φ) dφ`.
    pub mass: f64,
    /// `∫ φ·a(φ) dφ`.
    pub moment: f64,
    pub upper: f64,
}

impl BackscatterIntegral {
    /// Arithmetic mean phase, the quantity the closed forms describe.
    pub fn linear_mean(&self) -> f64 {
        self.moment / self.mass
    }

    /// Angle of the summed phasor.
    pub fn circular_phase(&self) -> f64 {
        crate::phasor::wrap_phase(self.phasor_sum.im.atan2(self.phasor_sum.re))
    }

    /// `‖Z‖/M`, at most one.
    pub fn coherence(&self) -> f64 {
        self.phasor_sum.norm() / self.mass
    }
}

/// `Z`, `M` and the first moment of a component over `[φ₀, ∞)` (truncated
/// where the integrand has decayed by `e^{-40}`).
pub fn backscatter_phasor_integral(
    component: Component,
    fog: &FogParams,
    quad: &QuadratureSpec,
) -> Result<BackscatterIntegral> {
    let upper = quad.cutoff_for(fog.phi0, decay_rate(component, fog));
    integrate_backscatter(component, fog, upper, quad)
}

/// Same as [`backscatter_phasor_integral`] with an explicit upper limit.
pub fn integrate_backscatter(
    component: Component,
    fog: &FogParams,
    upper: f64,
    quad: &QuadratureSpec,
) -> Result<BackscatterIntegral> {
    if component == Component::Unpolarized && fog.sigma_p <= 0.0 {
        return Err(Error::NoUnpolarized);
    }
    if !(upper > fog.phi0) {
        return Err(Error::Domain(format!(
            "integration upper limit {upper} must exceed phi0 {}",
            fog.phi0
        )));
    }
    let density = scaled_density(component, fog);
    let breaks = geometric_breaks(fog.phi0, upper);
    let mass = integrate_with_breaks(density, &breaks, quad)?.value;
    let moment = integrate_with_breaks(move |p: f64| p * density(p), &breaks, quad)?.value;
    let sum = integrate_with_breaks(move |p: f64| Complex64::from_polar(density(p), p), &breaks, quad)?.value;
    let unscale = (-decay_rate(component, fog) * fog.phi0).exp();
    Ok(BackscatterIntegral {
        phasor_sum: sum * unscale,
        mass: mass * unscale,
        moment: moment * unscale,
        upper,
    })
}

/// Integrated amplitude-to-offset ratio of the depolarized backscatter,
/// `k̄ = k₀·‖Z‖/M`.
pub fn k_ratio_unpolarized(fog: &FogParams, k0: f64, quad: &QuadratureSpec) -> Result<f64> {
    if !(k0 > 0.0) {
        return Err(Error::Domain(format!("k0 must be positive, got {k0}")));
    }
    let integral = backscatter_phasor_integral(Component::Unpolarized, fog, quad)?;
    Ok(k0 * integral.coherence())
}
