use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plane::Plane;

/// Vacuum speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraConfig {
    /// Modulation frequency in Hz.
    pub mod_freq: f64,
    /// Amplitude-to-offset ratio of direct, unscattered returns.
    pub k0: f64,
    /// Phase of the nearest fog-contributing distance, radians.
    pub phi0: f64,
    pub width: usize,
    pub height: usize,
    /// Propagation speed used for phase/depth conversion, m/s.
    #[serde(default = "default_light_speed")]
    pub light_speed: f64,
    /// Extra per-pixel phase from the illumination geometry.
    #[serde(skip)]
    pub illum_phase_offset: Option<Plane<f64>>,
}

fn default_light_speed() -> f64 {
    SPEED_OF_LIGHT
}

impl Default for CameraConfig {
    fn default() -> Self {
        let mut cam = CameraConfig {
            mod_freq: 80e6,
            k0: 0.71,
            phi0: 1.0,
            width: 64,
            height: 48,
            light_speed: SPEED_OF_LIGHT,
            illum_phase_offset: None,
        };
        cam.phi0 = cam.radians_per_meter() * 0.05;
        cam
    }
}

impl CameraConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mod_freq > 0.0 && self.mod_freq.is_finite()) {
            return Err(Error::Config(format!(
                "mod_freq must be positive, got {}",
                self.mod_freq
            )));
        }
        if !(self.k0 > 0.0 && self.k0 <= 1.0) {
            return Err(Error::Config(format!("k0 must lie in (0, 1], got {}", self.k0)));
        }
        if !(self.phi0 > 0.0 && self.phi0.is_finite()) {
            return Err(Error::Config(format!("phi0 must be positive, got {}", self.phi0)));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::Config(format!(
                "image size must be positive, got {}x{}",
                self.width, self.height
            )));
        }
        if !(self.light_speed > 0.0) {
            return Err(Error::Config("light_speed must be positive".into()));
        }
        if let Some(off) = &self.illum_phase_offset {
            if off.dims() != (self.width, self.height) {
                return Err(Error::Config("illumination phase plane has the wrong size".into()));
            }
        }
        Ok(())
    }

    /// `4πf/c`: phase accumulated per meter of depth (round trip).
    pub fn radians_per_meter(&self) -> f64 {
        4.0 * PI * self.mod_freq / self.light_speed
    }

    /// Unambiguous range `c/(2f)`.
    pub fn max_depth(&self) -> f64 {
        self.light_speed / (2.0 * self.mod_freq)
    }

    pub fn pixel_offset(&self, index: usize) -> f64 {
        self.illum_phase_offset.as_ref().map_or(0.0, |p| p.as_slice()[index])
    }
}

/// `φ = 4πfz/c` for a depth inside the unambiguous range.
pub fn depth_to_phase(depth: f64, cam: &CameraConfig) -> Result<f64> {
    let max_depth = cam.max_depth();
    if !(depth > 0.0 && depth < max_depth) {
        return Err(Error::OutOfRange { depth, max_depth });
    }
    Ok(depth * cam.radians_per_meter())
}

/// Inverse of [`depth_to_phase`].
pub fn phase_to_depth(phase: f64, cam: &CameraConfig) -> f64 {
    phase / cam.radians_per_meter()
}

/// Measured phase at a pixel, including the illumination offset plane.
pub fn pixel_phase(depth: f64, index: usize, cam: &CameraConfig) -> Result<f64> {
    Ok(depth_to_phase(depth, cam)? + cam.pixel_offset(index))
}

/// Depth from a measured pixel phase; undoes [`pixel_phase`].
pub fn pixel_depth(phase: f64, index: usize, cam: &CameraConfig) -> f64 {
    phase_to_depth(phase - cam.pixel_offset(index), cam)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nominal() -> CameraConfig {
        CameraConfig {
            light_speed: 3e8,
            ..CameraConfig::default()
        }
    }

    #[test]
    fn depth_phase_examples() {
        let cam = nominal();
        assert!((depth_to_phase(0.9375, &cam).unwrap() - PI).abs() < 1e-12);
        assert!(depth_to_phase(1e-9, &cam).unwrap() < 1e-8);
        assert!(depth_to_phase(0.0, &cam).is_err());
        assert!(matches!(depth_to_phase(1.875, &cam), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn depth_round_trip() {
        let cam = CameraConfig::default();
        for i in 1..180 {
            let z = i as f64 * 0.01;
            let back = phase_to_depth(depth_to_phase(z, &cam).unwrap(), &cam);
            assert!((back - z).abs() < 1e-12);
        }
    }

    #[test]
    fn default_phi0_is_five_centimetres() {
        let cam = nominal();
        let mut c = cam.clone();
        c.phi0 = c.radians_per_meter() * 0.05;
        assert!((c.phi0 - 0.1676).abs() < 1e-4);
    }

    #[test]
    fn pixel_offset_round_trip() {
        let cam = CameraConfig {
            width: 2,
            height: 1,
            illum_phase_offset: Some(Plane::new(2, 1, vec![0.0, 0.3]).unwrap()),
            ..CameraConfig::default()
        };
        cam.validate().unwrap();
        let phi = pixel_phase(0.7, 1, &cam).unwrap();
        assert!((phi - depth_to_phase(0.7, &cam).unwrap() - 0.3).abs() < 1e-15);
        assert!((pixel_depth(phi, 1, &cam) - 0.7).abs() < 1e-12);
    }

    #[test]
    fn validation() {
        let mut cam = CameraConfig::default();
        cam.validate().unwrap();
        cam.width = 0;
        assert!(cam.validate().is_err());
        let cam = CameraConfig {
            k0: 1.2,
            ..CameraConfig::default()
        };
        assert!(cam.validate().is_err());
    }
}
