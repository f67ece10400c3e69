//! Recovery of the constants the reconstruction depends on: the direct-return
//! amplitude-to-offset ratio `k₀`, the per-pixel extinction split `α = σᵢ/σ`
//! and the fog onset phase `φ₀`.

use crate::camera::{depth_to_phase, CameraConfig};
use crate::capture::CaptureStack;
use crate::error::{Error, Result};
use crate::fit::{fit_sigma_pixel, FitConfig, Optimizer};
use crate::floor::NoiseFloor;
use crate::phasor::{decode_taps, tap_subtract, TapSet};
use crate::plane::{median, Plane};
use crate::scattering::{mean_phase_unpolarized, FogParams};

/// Smallest distance `α` keeps from 0 and 1.
pub const ALPHA_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationParams {
    pub k0: f64,
    pub alpha: Plane<f64>,
    pub phi0: f64,
    pub mod_freq: f64,
}

impl CalibrationParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.k0 > 0.0 && self.k0 <= 1.0) {
            return Err(Error::Config(format!("k0 must lie in (0, 1], got {}", self.k0)));
        }
        if !(self.phi0 > 0.0 && self.phi0.is_finite()) {
            return Err(Error::Config(format!("phi0 must be positive, got {}", self.phi0)));
        }
        if !(self.mod_freq > 0.0 && self.mod_freq.is_finite()) {
            return Err(Error::Config("mod_freq must be positive".into()));
        }
        if self.alpha.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
            return Err(Error::Config("alpha must lie in (0, 1) at every pixel".into()));
        }
        Ok(())
    }

    /// Median of the α plane.
    pub fn global_alpha(&self) -> f64 {
        median(self.alpha.as_slice()).expect("alpha plane holds finite values")
    }

    /// Copy with α replaced by its median at every pixel.
    pub fn with_global_alpha(&self) -> CalibrationParams {
        let a = self.global_alpha();
        CalibrationParams {
            alpha: Plane::filled(self.alpha.width(), self.alpha.height(), a),
            ..self.clone()
        }
    }
}

/// `k₀` as the median `a/s` of the cross channel of a fog-free reference.
///
/// The stack should already be ambient-corrected.
pub fn calibrate_k0(reference: &CaptureStack) -> Result<f64> {
    let ratios: Vec<f64> = reference
        .cross
        .iter()
        .filter_map(|t| {
            let d = decode_taps(t);
            (!d.degenerate && d.phasor.offset > 0.0).then(|| d.phasor.amplitude / d.phasor.offset)
        })
        .collect();
    median(&ratios).ok_or_else(|| Error::Calibration("every reference pixel is degenerate; cannot estimate k0".into()))
}

/// Per-pixel outcome of [`calibrate_alpha`].
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaCalibration {
    /// `α` at every pixel, invalid ones filled from their neighbourhood.
    pub alpha: Plane<f64>,
    /// Pixels whose own inversion succeeded.
    pub valid: Plane<bool>,
    /// Total decay rate found at each valid pixel (`NaN` elsewhere).
    pub sigma: Plane<f64>,
}

/// `α` from one pixel of an empty-fog capture.
///
/// The polarized phase fixes `σ`; the cross phase, which is pure depolarized
/// backscatter when nothing is in the scene, then fixes `σᵢ`.
pub fn alpha_pixel(parallel: &TapSet, cross: &TapSet, phi0: f64, floor: &NoiseFloor) -> Result<(f64, f64)> {
    let pdi = decode_taps(&tap_subtract(parallel, cross));
    let cr = decode_taps(cross);
    if pdi.degenerate || !floor.passes(pdi.phasor.amplitude, pdi.phasor.offset) {
        return Err(Error::Calibration("polarized backscatter below noise floor".into()));
    }
    if cr.degenerate || !floor.passes(cr.phasor.amplitude, cr.phasor.offset) {
        return Err(Error::Calibration("depolarized backscatter below noise floor".into()));
    }
    let cfg = FitConfig {
        optimizer: Optimizer::Bisection,
        ..FitConfig::default()
    };
    let sigma = fit_sigma_pixel(pdi.phasor.phase, phi0, &cfg)?.sigma;
    let sigma_i = solve_sigma_i(cr.phasor.phase, sigma, phi0)?;
    Ok(((sigma_i / sigma).clamp(ALPHA_EPS, 1.0 - ALPHA_EPS), sigma))
}

fn unpolarized_phase_at(sigma_i: f64, sigma: f64, phi0: f64) -> Result<f64> {
    mean_phase_unpolarized(&FogParams::new(sigma_i, sigma - sigma_i, phi0)?)
}

/// Root of `g(σᵢ) = target` on `(0, σ)` by bisection; `g` is monotone there.
fn solve_sigma_i(target: f64, sigma: f64, phi0: f64) -> Result<f64> {
    let (mut lo, mut hi) = (ALPHA_EPS * sigma, (1.0 - ALPHA_EPS) * sigma);
    let g_lo = unpolarized_phase_at(lo, sigma, phi0)? - target;
    let g_hi = unpolarized_phase_at(hi, sigma, phi0)? - target;
    if g_lo * g_hi > 0.0 {
        return Err(Error::Calibration(format!(
            "unpolarized phase {target} is not reachable with sigma {sigma}"
        )));
    }
    let rising = g_hi > g_lo;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-15 * sigma {
            break;
        }
        let g = unpolarized_phase_at(mid, sigma, phi0)? - target;
        if (g > 0.0) == rising {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Per-pixel `α` from a capture of fog with nothing in the scene.
///
/// Pixels where either backscatter component is too weak, or where a root
/// cannot be bracketed, are flagged and filled with the median of the nearest
/// valid neighbourhood.
pub fn calibrate_alpha(empty_fog: &CaptureStack, phi0: f64, floor: &NoiseFloor) -> Result<AlphaCalibration> {
    if !(phi0 > 0.0) {
        return Err(Error::Config(format!("phi0 must be positive, got {phi0}")));
    }
    let fits = empty_fog
        .parallel
        .par_map(|i, par| alpha_pixel(par, &empty_fog.cross.as_slice()[i], phi0, floor).ok());
    let valid = fits.map(|f| f.is_some());
    if valid.count_true() == 0 {
        return Err(Error::Calibration(
            "no pixel of the empty-fog capture yields a valid alpha".into(),
        ));
    }
    let raw = fits.map(|f| f.map_or(f64::NAN, |(a, _)| a));
    let sigma = fits.map(|f| f.map_or(f64::NAN, |(_, s)| s));
    let alpha = infill(&raw, &valid);
    Ok(AlphaCalibration { alpha, valid, sigma })
}

fn infill(values: &Plane<f64>, valid: &Plane<bool>) -> Plane<f64> {
    let (w, h) = values.dims();
    Plane::from_fn(w, h, |x, y| {
        if *valid.get(x, y) {
            return *values.get(x, y);
        }
        let mut radius = 1;
        loop {
            let mut found = Vec::new();
            for yy in y.saturating_sub(radius)..=(y + radius).min(h - 1) {
                for xx in x.saturating_sub(radius)..=(x + radius).min(w - 1) {
                    if *valid.get(xx, yy) {
                        found.push(*values.get(xx, yy));
                    }
                }
            }
            if let Some(m) = median(&found) {
                return m;
            }
            radius += 1;
        }
    })
}

/// The configured `φ₀`, checked.
pub fn resolve_phi0(cam: &CameraConfig) -> Result<f64> {
    if cam.phi0 > 0.0 && cam.phi0.is_finite() {
        Ok(cam.phi0)
    } else {
        Err(Error::Config(format!("phi0 must be positive, got {}", cam.phi0)))
    }
}

/// `φ₀` for fog that starts `distance` meters from the camera.
pub fn phi0_from_onset(distance: f64, cam: &CameraConfig) -> Result<f64> {
    depth_to_phase(distance, cam)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unpolarized_phase_is_monotone_in_sigma_i() {
        for &(sigma, phi0) in &[(1.0, 0.1676), (0.2, 0.05), (10.0, 1.0)] {
            let mut prev = f64::INFINITY;
            for k in 1..200 {
                let si = sigma * k as f64 / 200.0;
                let g = unpolarized_phase_at(si, sigma, phi0).unwrap();
                assert!(g < prev, "sigma={sigma} phi0={phi0} si={si}");
                prev = g;
            }
        }
    }

    #[test]
    fn sigma_i_root_recovers_split() {
        let phi0 = 0.1676;
        let target = unpolarized_phase_at(0.6, 1.0, phi0).unwrap();
        let si = solve_sigma_i(target, 1.0, phi0).unwrap();
        assert!((si - 0.6).abs() < 1e-9);
    }

    #[test]
    fn infill_uses_nearest_ring() {
        let values = Plane::new(3, 3, vec![1.0, 9.0, 9.0, 3.0, f64::NAN, 9.0, 9.0, 9.0, 9.0]).unwrap();
        let mut valid = Plane::filled(3, 3, false);
        valid.as_mut_slice()[0] = true;
        valid.as_mut_slice()[3] = true;
        let out = infill(&values, &valid);
        assert_eq!(out.as_slice()[4], 2.0);
        assert_eq!(out.as_slice()[8], 2.0);
    }

    #[test]
    fn phi0_from_onset_distance() {
        let cam = CameraConfig {
            light_speed: 3e8,
            ..CameraConfig::default()
        };
        let phi0 = phi0_from_onset(0.05, &cam).unwrap();
        assert!((phi0 - 4.0 * std::f64::consts::PI * 8e7 * 0.05 / 3e8).abs() < 1e-15);
        assert!((phi0 - 0.1676).abs() < 1e-4);
        let bad = CameraConfig {
            phi0: 0.0,
            ..CameraConfig::default()
        };
        assert!(resolve_phi0(&bad).is_err());
    }
}
