//! Decay-rate estimation: invert the polarized mean-phase model `f(σ)`.
//!
//! `f` is strictly decreasing in `σ`, so a measured polarized backscatter
//! phase pins down a unique decay rate. Two solvers are provided: Adam on
//! `log σ` minimizing the squared phase residual, and bracketed bisection with
//! a Newton polish, which needs no tuning and serves as a cross-check.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plane::{median, Plane};
use crate::scattering::{mean_phase_polarized, mean_phase_polarized_slope};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    #[default]
    Adam,
    Bisection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub optimizer: Optimizer,
    /// Adam step size on `log σ`.
    pub learning_rate: f64,
    pub max_iters: usize,
    /// Convergence threshold on the squared phase residual (rad²).
    pub tol: f64,
    /// Search interval for `σ`; `None` means `[1e-3, 1e3]/φ₀`.
    pub sigma_bounds: Option<(f64, f64)>,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            optimizer: Optimizer::Adam,
            learning_rate: 0.05,
            max_iters: 2000,
            tol: 1e-20,
            sigma_bounds: None,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config("tol must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be positive".into()));
        }
        if let Some((lo, hi)) = self.sigma_bounds {
            if !(lo > 0.0 && hi > lo && hi.is_finite()) {
                return Err(Error::Config(format!("bad sigma bounds ({lo}, {hi})")));
            }
        }
        Ok(())
    }

    pub fn bounds(&self, phi0: f64) -> (f64, f64) {
        self.sigma_bounds.unwrap_or((1e-3 / phi0, 1e3 / phi0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaFit {
    pub sigma: f64,
    /// `f(σ) − measured phase`.
    pub residual: f64,
    pub iterations: usize,
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-12;

/// Fit `σ` to one measured polarized backscatter phase.
pub fn fit_sigma_pixel(phase: f64, phi0: f64, cfg: &FitConfig) -> Result<SigmaFit> {
    let (lo, hi) = cfg.bounds(phi0);
    if !(phase > phi0) {
        return Err(Error::Domain(format!(
            "polarized phase {phase} does not exceed phi0 {phi0}"
        )));
    }
    let (f_lo, f_hi) = (mean_phase_polarized(lo, phi0)?, mean_phase_polarized(hi, phi0)?);
    if !(phase < f_lo && phase > f_hi) {
        return Err(Error::Domain(format!(
            "polarized phase {phase} is outside the model range ({f_hi}, {f_lo})"
        )));
    }
    match cfg.optimizer {
        Optimizer::Adam => adam(phase, phi0, lo, hi, cfg),
        Optimizer::Bisection => bisect(phase, phi0, lo, hi, cfg),
    }
}

fn adam(phase: f64, phi0: f64, lo: f64, hi: f64, cfg: &FitConfig) -> Result<SigmaFit> {
    let (theta_lo, theta_hi) = (lo.ln(), hi.ln());
    // f(σ) ≈ φ₀(1 + 1/(σφ₀)) for dense media; a serviceable starting point everywhere
    let mut theta = (1.0 / (phase - phi0)).ln().clamp(theta_lo, theta_hi);
    let (mut m, mut v) = (0.0, 0.0);
    let mut residual = f64::INFINITY;
    for t in 1..=cfg.max_iters {
        let sigma = theta.exp();
        residual = mean_phase_polarized(sigma, phi0)? - phase;
        if residual * residual < cfg.tol {
            return Ok(SigmaFit {
                sigma,
                residual,
                iterations: t - 1,
            });
        }
        // d(r²)/dθ = 2r · f'(σ) · σ
        let grad = 2.0 * residual * mean_phase_polarized_slope(sigma, phi0)? * sigma;
        m = ADAM_BETA1 * m + (1.0 - ADAM_BETA1) * grad;
        v = ADAM_BETA2 * v + (1.0 - ADAM_BETA2) * grad * grad;
        let m_hat = m / (1.0 - ADAM_BETA1.powi(t as i32));
        let v_hat = v / (1.0 - ADAM_BETA2.powi(t as i32));
        theta -= cfg.learning_rate * m_hat / (v_hat.sqrt() + ADAM_EPS);
        theta = theta.clamp(theta_lo, theta_hi);
    }
    Err(Error::NoConvergence {
        iterations: cfg.max_iters,
        residual,
    })
}

fn bisect(phase: f64, phi0: f64, lo: f64, hi: f64, cfg: &FitConfig) -> Result<SigmaFit> {
    // f decreasing: f(lo) > phase > f(hi)
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let mut iterations = 0;
    while b - a > 1e-12 && iterations < 200 {
        let mid = 0.5 * (a + b);
        if mean_phase_polarized(mid.exp(), phi0)? > phase {
            a = mid;
        } else {
            b = mid;
        }
        iterations += 1;
    }
    let mut sigma = (0.5 * (a + b)).exp();
    let mut residual = mean_phase_polarized(sigma, phi0)? - phase;
    for _ in 0..4 {
        if residual * residual < cfg.tol {
            break;
        }
        let step = residual / mean_phase_polarized_slope(sigma, phi0)?;
        let candidate = sigma - step;
        if !(candidate > a.exp() * (1.0 - 1e-9) && candidate < b.exp() * (1.0 + 1e-9)) {
            break;
        }
        let r = mean_phase_polarized(candidate, phi0)? - phase;
        if r.abs() >= residual.abs() {
            break;
        }
        sigma = candidate;
        residual = r;
        iterations += 1;
    }
    Ok(SigmaFit {
        sigma,
        residual,
        iterations,
    })
}

/// Per-pixel fits and their median.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaFitMap {
    /// `NaN` where the pixel was masked.
    pub sigma_map: Plane<f64>,
    pub residual: Plane<f64>,
    pub valid: Plane<bool>,
    /// Median of the valid per-pixel estimates.
    pub global: f64,
}

/// Fraction of valid pixels below which a map-level fit is refused.
pub const MIN_VALID_FRACTION: f64 = 0.01;

/// Fit `σ` at every pixel of `valid` and take the median. Pixels whose phase
/// lies outside the model range or whose fit fails are masked.
pub fn fit_sigma(phase_p: &Plane<f64>, valid: &Plane<bool>, phi0: f64, cfg: &FitConfig) -> Result<SigmaFitMap> {
    cfg.validate()?;
    if !phase_p.same_dims(valid) {
        return Err(Error::Config("phase and mask planes differ in size".into()));
    }
    let fits = phase_p.par_map(|i, &phase| {
        if !valid.as_slice()[i] {
            return None;
        }
        fit_sigma_pixel(phase, phi0, cfg).ok()
    });
    let sigma_map = fits.map(|f| f.map_or(f64::NAN, |f| f.sigma));
    let residual = fits.map(|f| f.map_or(f64::NAN, |f| f.residual));
    let valid_out = fits.map(|f| f.is_some());
    let count = valid_out.count_true();
    let total = valid_out.len();
    if (count as f64) < MIN_VALID_FRACTION * total as f64 || count == 0 {
        return Err(Error::InsufficientValid { valid: count, total });
    }
    let global = median(sigma_map.as_slice()).expect("at least one valid fit");
    Ok(SigmaFitMap {
        sigma_map,
        residual,
        valid: valid_out,
        global,
    })
}
