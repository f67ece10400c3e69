//! Amplitude thresholds below which a decoded phasor carries no usable phase.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plane::median;

/// Threshold `absolute + relative × reference offset`.
///
/// The relative part tracks the brightness of the pixel so that the same
/// floor works for captures at any exposure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseFloor {
    pub absolute: f64,
    pub relative: f64,
}

impl Default for NoiseFloor {
    fn default() -> Self {
        NoiseFloor {
            absolute: 1e-12,
            relative: 1e-6,
        }
    }
}

impl NoiseFloor {
    pub fn validate(&self) -> Result<()> {
        if !(self.absolute >= 0.0 && self.relative >= 0.0) {
            return Err(Error::Config("noise floor terms must be non-negative".into()));
        }
        Ok(())
    }

    pub fn threshold(&self, reference_offset: f64) -> f64 {
        self.absolute + self.relative * reference_offset.abs()
    }

    pub fn passes(&self, amplitude: f64, reference_offset: f64) -> bool {
        amplitude > self.threshold(reference_offset)
    }

    /// Absolute floor of three median absolute deviations of the amplitudes
    /// decoded from fog-free dark frames.
    pub fn from_dark_amplitudes(amplitudes: &[f64]) -> Result<Self> {
        let m = median(amplitudes).ok_or_else(|| Error::Calibration("no finite dark-frame amplitudes".into()))?;
        let deviations: Vec<f64> = amplitudes.iter().map(|a| (a - m).abs()).collect();
        let mad = median(&deviations).expect("same finite values as above");
        Ok(NoiseFloor {
            absolute: 3.0 * mad,
            relative: 0.0,
        })
    }
}
