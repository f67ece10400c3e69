//! Polarimetric indirect time-of-flight imaging through scattering media.
//!
//! The crate synthesizes four-tap iToF captures taken through parallel and
//! crossed polarizers in fog, and recovers scattering-free depth by estimating
//! the depolarized backscatter phasor and subtracting it from the cross
//! capture.

// `!(x > 0.0)` style checks are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod camera;
pub mod capture;
pub mod error;
pub mod fit;
pub mod floor;
pub mod io;
pub mod metrics;
pub mod phasor;
pub mod plane;
pub mod presets;
pub mod quadrature;
pub mod reconstruct;
pub mod scattering;
pub mod sim;
pub mod special;

pub use camera::CameraConfig;
pub use capture::CaptureStack;
pub use error::{Error, ErrorClass, Result, Stage};
pub use phasor::{Phasor, TapKind, TapSet};
pub use plane::Plane;
pub use scattering::FogParams;
