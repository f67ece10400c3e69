//! Synthetic scenes used by the benchmarks: a staircase target seen through
//! fog of three densities.

use serde::{Deserialize, Serialize};

use crate::camera::CameraConfig;
use crate::error::Result;
use crate::plane::Plane;
use crate::scattering::FogParams;
use crate::sim::SceneSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FogPreset {
    Clear,
    Thin,
    Medium,
    Thick,
}

impl FogPreset {
    pub const DENSE: [FogPreset; 3] = [FogPreset::Thin, FogPreset::Medium, FogPreset::Thick];

    /// Multiplier applied to the base extinction and scattering strength.
    pub fn density(self) -> f64 {
        match self {
            FogPreset::Clear => 0.0,
            FogPreset::Thin => 1.0,
            FogPreset::Medium => 2.0,
            FogPreset::Thick => 4.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FogPreset::Clear => "clear",
            FogPreset::Thin => "thin",
            FogPreset::Medium => "medium",
            FogPreset::Thick => "thick",
        }
    }
}

impl std::str::FromStr for FogPreset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "clear" => Ok(FogPreset::Clear),
            "thin" => Ok(FogPreset::Thin),
            "medium" => Ok(FogPreset::Medium),
            "thick" => Ok(FogPreset::Thick),
            other => Err(format!("unknown fog preset '{other}'")),
        }
    }
}

/// Thin-fog extinction rates per radian of phase.
pub const BASE_SIGMA_I: f64 = 0.06;
pub const BASE_SIGMA_P: f64 = 0.04;
/// Thin-fog backscatter gain.
pub const BASE_GAIN: f64 = 0.02;

pub fn preset_fog(preset: FogPreset, phi0: f64) -> Result<Option<FogParams>> {
    let k = preset.density();
    if k == 0.0 {
        return Ok(None);
    }
    FogParams::new(k * BASE_SIGMA_I, k * BASE_SIGMA_P, phi0).map(Some)
}

pub fn preset_gain(preset: FogPreset) -> f64 {
    preset.density() * BASE_GAIN
}

/// Eight equal steps from 0.3 m on the left to 1.5 m on the right, with
/// reflectance rising from 0.5 at the top row to 1.0 at the bottom.
pub fn staircase_depth(width: usize, height: usize) -> Plane<f64> {
    const STEPS: usize = 8;
    Plane::from_fn(width, height, |x, _| {
        let step = (x * STEPS / width).min(STEPS - 1);
        0.3 + 1.2 * step as f64 / (STEPS - 1) as f64
    })
}

pub fn staircase_reflectance(width: usize, height: usize) -> Plane<f64> {
    Plane::from_fn(width, height, |_, y| 0.5 + 0.5 * y as f64 / (height.max(2) - 1) as f64)
}

/// The staircase under the given fog, without ambient light.
pub fn staircase_scene(cam: &CameraConfig, fog: Option<FogParams>, gain: f64) -> SceneSpec {
    let (w, h) = (cam.width, cam.height);
    SceneSpec {
        depth: staircase_depth(w, h),
        reflectance: staircase_reflectance(w, h),
        fog,
        ambient: Plane::filled(w, h, 0.0),
        backscatter_gain: if fog.is_some() { gain } else { 0.0 },
    }
}

pub fn preset_scene(preset: FogPreset, cam: &CameraConfig) -> Result<SceneSpec> {
    Ok(staircase_scene(cam, preset_fog(preset, cam.phi0)?, preset_gain(preset)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn staircase_spans_range() {
        let d = staircase_depth(64, 48);
        let min = d.iter().copied().fold(f64::INFINITY, f64::min);
        let max = d.iter().copied().fold(0.0, f64::max);
        assert_eq!(min, 0.3);
        assert!((max - 1.5).abs() < 1e-15);
    }

    #[test]
    fn ladder_scales_sigma() {
        let phi0 = 0.2;
        let thin = preset_fog(FogPreset::Thin, phi0).unwrap().unwrap();
        let thick = preset_fog(FogPreset::Thick, phi0).unwrap().unwrap();
        assert!((thick.sigma_total() - 4.0 * thin.sigma_total()).abs() < 1e-15);
        assert!((thick.alpha() - thin.alpha()).abs() < 1e-15);
        assert!(preset_fog(FogPreset::Clear, phi0).unwrap().is_none());
        assert_eq!("medium".parse::<FogPreset>(), Ok(FogPreset::Medium));
    }
}
