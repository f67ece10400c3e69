//! Scattering removal from polarimetric captures.
//!
//! The parallel minus cross difference isolates the polarization-preserving
//! backscatter, whose mean phase fixes the total decay rate `σ`. With the
//! calibrated split `α`, the depolarized backscatter's phase and
//! amplitude-to-offset ratio follow from the model. Its amplitude is then the
//! one value that leaves a residual with the direct-return ratio `k₀`, and
//! subtracting that phasor from the cross capture leaves the target.

use std::collections::HashMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::CalibrationParams;
use crate::camera::{pixel_depth, CameraConfig};
use crate::capture::CaptureStack;
use crate::error::{Error, Result, Stage};
use crate::fit::{fit_sigma, FitConfig};
use crate::floor::NoiseFloor;
use crate::phasor::{decode_taps, tap_subtract, wrap_phase, Phasor};
use crate::plane::Plane;
use crate::quadrature::QuadratureSpec;
use crate::scattering::{k_ratio_unpolarized, mean_phase_unpolarized, FogParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SigmaMode {
    /// One decay rate, the median of the per-pixel fits.
    #[default]
    Global,
    PerPixel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum AlphaMode {
    #[default]
    PerPixel,
    /// Collapse the calibrated plane to its median.
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructConfig {
    pub fit: FitConfig,
    pub sigma_mode: SigmaMode,
    pub alpha_mode: AlphaMode,
    pub floor: NoiseFloor,
    pub quad: QuadratureSpec,
    /// Negative ambient-corrected taps within this margin are clamped silently.
    pub ambient_tolerance: f64,
    /// Relative residual above which a quadratic root is rejected.
    pub root_tolerance: f64,
}

impl Default for ReconstructConfig {
    fn default() -> Self {
        ReconstructConfig {
            fit: FitConfig::default(),
            sigma_mode: SigmaMode::Global,
            alpha_mode: AlphaMode::PerPixel,
            floor: NoiseFloor::default(),
            quad: QuadratureSpec::default(),
            ambient_tolerance: 1e-9,
            root_tolerance: 1e-6,
        }
    }
}

/// Estimated backscatter and the intermediate maps behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct BackscatterEstimate {
    /// Polarized backscatter decoded from the channel difference.
    pub pdi: Plane<Phasor>,
    pub phase_p: Plane<f64>,
    /// Pixels whose polarized backscatter cleared the noise floor.
    pub pdi_valid: Plane<bool>,
    /// Global `σ`; `None` when no fog was detected.
    pub sigma: Option<f64>,
    pub sigma_map: Plane<f64>,
    pub sigma_residual: Plane<f64>,
    pub phase_u: Plane<f64>,
    pub amp_u: Plane<f64>,
    pub k_ratio: Plane<f64>,
    /// Relative residual of the amplitude condition for the chosen root.
    pub root_residual: Plane<f64>,
    /// The other quadratic root had to be used.
    pub alt_branch: Plane<bool>,
    pub valid: Plane<bool>,
    pub fog_detected: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    pub depth: Plane<f64>,
    pub phase: Plane<f64>,
    pub amplitude: Plane<f64>,
    pub valid: Plane<bool>,
}

impl DepthMap {
    pub fn valid_fraction(&self) -> f64 {
        self.valid.count_true() as f64 / self.valid.len() as f64
    }
}

/// Polarized backscatter per pixel from the tap-domain channel difference,
/// with pixels below the floor flagged.
pub fn pdi_backscatter(stack: &CaptureStack, floor: &NoiseFloor) -> (Plane<Phasor>, Plane<bool>) {
    let decoded = stack
        .parallel
        .par_map(|i, par| decode_taps(&tap_subtract(par, &stack.cross.as_slice()[i])));
    let pdi = decoded.map(|d| d.phasor);
    let valid = decoded.map(|d| !d.degenerate && floor.passes(d.phasor.amplitude, d.phasor.offset));
    (pdi, valid)
}

/// Depolarized backscatter phase per pixel with `σᵢ = ασ`, `σₚ = (1−α)σ`.
pub fn predict_unpolarized_phase(sigma: f64, alpha: &Plane<f64>, phi0: f64) -> Result<Plane<f64>> {
    let phases = alpha.par_map(|_, &a| mean_phase_unpolarized(&FogParams::from_total(sigma, a, phi0)?));
    let (w, h) = alpha.dims();
    let data = phases.into_vec().into_iter().collect::<Result<Vec<f64>>>()?;
    Plane::new(w, h, data)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeSolution {
    /// Cross-channel amplitude of the depolarized backscatter.
    pub amplitude: f64,
    /// The root other than the default branch was taken.
    pub alt_branch: bool,
    /// `|‖a⊥e^{iφ⊥} − r·e^{iφᵘ}‖ − k₀(s⊥ − r/k̄)| / (k₀s⊥)`.
    pub residual: f64,
}

fn amplitude_residual(cross: &Phasor, phase_u: f64, r: f64, k_ratio: f64, k0: f64) -> f64 {
    let target = cross.to_complex() - Complex64::from_polar(r, phase_u);
    let scale = k0 * cross.offset;
    (target.norm() - k0 * (cross.offset - r / k_ratio)).abs() / scale
}

/// Amplitude `r` of the depolarized backscatter in the cross channel such that
/// the remainder has amplitude-to-offset ratio `k₀`.
///
/// Both roots of `c₁r² − 2c₂r + c₃ = 0` are checked for `r ≥ 0`, a
/// non-negative remaining offset and a small residual of the unsquared
/// condition. The root `(c₂ + √(c₂² − c₁c₃))/c₁` is preferred.
pub fn solve_amplitude(
    cross: &Phasor,
    phase_u: f64,
    k_ratio: f64,
    k0: f64,
    tolerance: f64,
) -> Result<AmplitudeSolution> {
    if !(k_ratio > 0.0 && k_ratio < k0) {
        return Err(Error::Domain(format!(
            "backscatter ratio {k_ratio} must lie in (0, k0={k0})"
        )));
    }
    if !(cross.offset > 0.0) {
        return Err(Error::Domain("cross offset must be positive".into()));
    }
    let (a, s) = (cross.amplitude, cross.offset);
    let q = k0 / k_ratio;
    let c1 = 1.0 - q * q;
    let c2 = a * (cross.phase - phase_u).cos() - k0 * k0 * s / k_ratio;
    let c3 = a * a - (k0 * s).powi(2);
    let mut disc = c2 * c2 - c1 * c3;
    if disc < 0.0 {
        if disc > -1e-12 * c2 * c2 {
            disc = 0.0;
        } else {
            return Err(Error::Domain(format!("negative discriminant {disc:e}")));
        }
    }
    // cancellation-free pair: q·r₁ = c₃ and c₁·r₂ = q
    let root = disc.sqrt();
    let (plus, minus) = if c2 >= 0.0 {
        let qq = c2 + root;
        (qq / c1, if qq == 0.0 { 0.0 } else { c3 / qq })
    } else {
        let qq = c2 - root;
        (if qq == 0.0 { 0.0 } else { c3 / qq }, qq / c1)
    };
    let scale = k0 * s;
    let check = |r: f64| -> Option<AmplitudeSolution> {
        // allow roundoff-sized negatives, then snap
        let r = if r < 0.0 && r > -1e-12 * scale { 0.0 } else { r };
        if !(r >= 0.0) || s - r / k_ratio < -1e-12 * s {
            return None;
        }
        let residual = amplitude_residual(cross, phase_u, r, k_ratio, k0);
        (residual <= tolerance).then_some(AmplitudeSolution {
            amplitude: r,
            alt_branch: false,
            residual,
        })
    };
    match (check(plus), check(minus)) {
        (Some(p), _) => Ok(p),
        (None, Some(m)) => Ok(AmplitudeSolution { alt_branch: true, ..m }),
        (None, None) => Err(Error::Domain("no feasible backscatter amplitude".into())),
    }
}

/// Cross phasor minus the backscatter phasor `amp_u·e^{iφᵘ}` with offset `amp_u/k̄`.
pub fn remove_scattering(cross: &Phasor, phase_u: f64, amp_u: f64, k_ratio: f64) -> Phasor {
    if amp_u == 0.0 {
        return *cross;
    }
    let z = cross.to_complex() - Complex64::from_polar(amp_u, phase_u);
    Phasor::from_complex(z, cross.offset - amp_u / k_ratio)
}

/// Which capture a conventional reconstruction reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Parallel,
    Cross,
    Pdi,
}

fn depth_from_phasors(phasors: &Plane<Phasor>, usable: &Plane<bool>, cam: &CameraConfig) -> DepthMap {
    let max = cam.max_depth();
    let depth = phasors.par_map(|i, p| pixel_depth(p.phase, i, cam));
    let valid = depth.par_map(|i, &d| usable.as_slice()[i] && d > 0.0 && d < max);
    DepthMap {
        depth,
        phase: phasors.map(|p| p.phase),
        amplitude: phasors.map(|p| p.amplitude),
        valid,
    }
}

/// Depth read directly off one channel, ignoring scattering.
pub fn baseline_depth(stack: &CaptureStack, which: Channel, floor: &NoiseFloor) -> DepthMap {
    let (stack, _) = stack.ambient_subtracted(f64::INFINITY);
    let decoded = match which {
        Channel::Parallel => stack.parallel.map(decode_taps),
        Channel::Cross => stack.cross.map(decode_taps),
        Channel::Pdi => stack
            .parallel
            .par_map(|i, p| decode_taps(&tap_subtract(p, &stack.cross.as_slice()[i]))),
    };
    let usable = decoded.map(|d| !d.degenerate && floor.passes(d.phasor.amplitude, d.phasor.offset));
    depth_from_phasors(&decoded.map(|d| d.phasor), &usable, &stack.camera)
}

fn k_ratio_map(sigma: &Plane<f64>, alpha: &Plane<f64>, phi0: f64, k0: f64, quad: &QuadratureSpec) -> Plane<f64> {
    // the integral is the only expensive step; evaluate it once per distinct (σ, α)
    let mut keys: Vec<(u64, u64)> = sigma
        .iter()
        .zip(alpha.iter())
        .filter(|(s, _)| s.is_finite())
        .map(|(s, a)| (s.to_bits(), a.to_bits()))
        .collect();
    keys.sort_unstable();
    keys.dedup();
    let table: HashMap<(u64, u64), f64> = keys
        .into_par_iter()
        .map(|(s, a)| {
            let k = FogParams::from_total(f64::from_bits(s), f64::from_bits(a), phi0)
                .and_then(|fog| k_ratio_unpolarized(&fog, k0, quad))
                .unwrap_or(f64::NAN);
            ((s, a), k)
        })
        .collect();
    sigma.par_map(|i, s| {
        table
            .get(&(s.to_bits(), alpha.as_slice()[i].to_bits()))
            .copied()
            .unwrap_or(f64::NAN)
    })
}

/// Full scattering removal. Returns the target depth and the backscatter
/// estimate behind it.
///
/// If too few pixels show polarized backscatter to fit `σ`, the scene is
/// treated as fog-free and the cross capture is passed through.
pub fn reconstruct_depth(
    stack: &CaptureStack,
    calib: &CalibrationParams,
    cfg: &ReconstructConfig,
) -> Result<(DepthMap, BackscatterEstimate)> {
    calib.validate()?;
    cfg.fit.validate()?;
    cfg.floor.validate()?;
    cfg.quad.validate()?;
    if calib.alpha.dims() != (stack.width(), stack.height()) {
        return Err(Error::Config(
            "calibration alpha plane does not match the capture".into(),
        ));
    }
    let cam = &stack.camera;
    let phi0 = calib.phi0;
    let k0 = calib.k0;
    let (w, h) = (stack.width(), stack.height());

    let (stack, _) = stack.ambient_subtracted(cfg.ambient_tolerance);
    let cross = stack.cross.par_map(|_, t| decode_taps(t));
    let (pdi, pdi_valid) = pdi_backscatter(&stack, &cfg.floor);
    let phase_p = pdi.map(|p| p.phase);

    let fit = match fit_sigma(&phase_p, &pdi_valid, phi0, &cfg.fit) {
        Ok(f) => Some(f),
        Err(Error::InsufficientValid { .. }) => None,
        Err(e) => return Err(e.at(Stage::SigmaFit)),
    };
    let Some(fit) = fit else {
        log::info!("no polarized backscatter found; passing the cross capture through");
        let usable = cross.map(|d| !d.degenerate && cfg.floor.passes(d.phasor.amplitude, d.phasor.offset));
        let depth = depth_from_phasors(&cross.map(|d| d.phasor), &usable, cam);
        let nan = Plane::filled(w, h, f64::NAN);
        let estimate = BackscatterEstimate {
            pdi,
            phase_p,
            pdi_valid,
            sigma: None,
            sigma_map: nan.clone(),
            sigma_residual: nan.clone(),
            phase_u: nan.clone(),
            amp_u: Plane::filled(w, h, 0.0),
            k_ratio: nan.clone(),
            root_residual: Plane::filled(w, h, 0.0),
            alt_branch: Plane::filled(w, h, false),
            valid: depth.valid.clone(),
            fog_detected: false,
        };
        return Ok((depth, estimate));
    };
    log::debug!(
        "sigma = {} from {} of {} pixels",
        fit.global,
        fit.valid.count_true(),
        fit.valid.len()
    );

    let alpha = match cfg.alpha_mode {
        AlphaMode::PerPixel => calib.alpha.clone(),
        AlphaMode::Global => calib.with_global_alpha().alpha,
    };
    let sigma_px = match cfg.sigma_mode {
        SigmaMode::Global => Plane::filled(w, h, fit.global),
        SigmaMode::PerPixel => fit.sigma_map.clone(),
    };

    let phase_u = sigma_px.par_map(|i, &s| {
        if !s.is_finite() {
            return f64::NAN;
        }
        FogParams::from_total(s, alpha.as_slice()[i], phi0)
            .and_then(|fog| mean_phase_unpolarized(&fog))
            .unwrap_or(f64::NAN)
    });
    if phase_u.iter().all(|p| p.is_nan()) {
        return Err(Error::Domain("depolarized phase is undefined everywhere".into()).at(Stage::UnpolarizedPhase));
    }
    let k_ratio = k_ratio_map(&sigma_px, &alpha, phi0, k0, &cfg.quad);
    if k_ratio.iter().all(|k| k.is_nan()) {
        return Err(Error::Domain("backscatter ratio is undefined everywhere".into()).at(Stage::KRatio));
    }

    let solved = cross.par_map(|i, d| {
        let (pu, kr) = (phase_u.as_slice()[i], k_ratio.as_slice()[i]);
        if d.degenerate || !pu.is_finite() || !kr.is_finite() {
            return None;
        }
        solve_amplitude(&d.phasor, pu, kr, k0, cfg.root_tolerance).ok()
    });
    let target = solved.par_map(|i, sol| {
        sol.map(|sol| {
            remove_scattering(
                &cross.as_slice()[i].phasor,
                phase_u.as_slice()[i],
                sol.amplitude,
                k_ratio.as_slice()[i],
            )
        })
    });
    let usable = target.par_map(|i, t| match t {
        Some(t) => cfg.floor.passes(t.amplitude, cross.as_slice()[i].phasor.offset),
        None => false,
    });
    let depth = depth_from_phasors(&target.map(|t| t.unwrap_or(Phasor::ZERO)), &usable, cam);

    let estimate = BackscatterEstimate {
        pdi,
        phase_p,
        pdi_valid,
        sigma: Some(fit.global),
        sigma_map: fit.sigma_map,
        sigma_residual: fit.residual,
        phase_u,
        amp_u: solved.map(|s| s.map_or(f64::NAN, |s| s.amplitude)),
        k_ratio,
        root_residual: solved.map(|s| s.map_or(f64::NAN, |s| s.residual)),
        alt_branch: solved.map(|s| s.is_some_and(|s| s.alt_branch)),
        valid: depth.valid.clone(),
        fog_detected: true,
    };
    Ok((depth, estimate))
}

/// Distance between two phases on the circle.
pub fn phase_error(a: f64, b: f64) -> f64 {
    let d = wrap_phase(a - b);
    d.min(2.0 * std::f64::consts::PI - d)
}
