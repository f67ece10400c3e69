use crate::camera::CameraConfig;
use crate::error::{Error, Result};
use crate::phasor::{decode_taps, subtract_ambient, Phasor, TapSet};
use crate::plane::Plane;

/// Raw four-tap frames of one scene through parallel and crossed polarizers.
#[derive(Debug, Clone, PartialEq)]
pub struct CaptureStack {
    pub camera: CameraConfig,
    pub parallel: Plane<TapSet>,
    pub cross: Plane<TapSet>,
    /// Frames captured with the illumination off.
    pub ambient_parallel: Option<Plane<f64>>,
    pub ambient_cross: Option<Plane<f64>>,
}

impl CaptureStack {
    pub fn new(
        camera: CameraConfig,
        parallel: Plane<TapSet>,
        cross: Plane<TapSet>,
        ambient_parallel: Option<Plane<f64>>,
        ambient_cross: Option<Plane<f64>>,
    ) -> Result<Self> {
        if !parallel.same_dims(&cross) {
            return Err(Error::Config("parallel and cross planes differ in size".into()));
        }
        for amb in [&ambient_parallel, &ambient_cross].into_iter().flatten() {
            if !amb.same_dims(&parallel) {
                return Err(Error::Config("ambient plane does not match the tap planes".into()));
            }
        }
        if parallel.dims() != (camera.width, camera.height) {
            return Err(Error::Config(format!(
                "camera is {}x{} but taps are {}x{}",
                camera.width,
                camera.height,
                parallel.width(),
                parallel.height()
            )));
        }
        Ok(CaptureStack {
            camera,
            parallel,
            cross,
            ambient_parallel,
            ambient_cross,
        })
    }

    pub fn width(&self) -> usize {
        self.parallel.width()
    }

    pub fn height(&self) -> usize {
        self.parallel.height()
    }

    pub fn pixel_count(&self) -> usize {
        self.parallel.len()
    }

    /// Remove the ambient frames from the taps. Returns the corrected stack
    /// (without ambient frames) and the number of pixels that needed clamping.
    pub fn ambient_subtracted(&self, tolerance: f64) -> (CaptureStack, usize) {
        let mut clamped = 0;
        let mut fix = |taps: &Plane<TapSet>, amb: &Option<Plane<f64>>| -> Plane<TapSet> {
            match amb {
                None => taps.clone(),
                Some(amb) => {
                    let data: Vec<TapSet> = taps
                        .iter()
                        .zip(amb.iter())
                        .map(|(t, &a)| {
                            let r = subtract_ambient(t, a, tolerance);
                            clamped += usize::from(r.clamped);
                            r.taps
                        })
                        .collect();
                    Plane::new(taps.width(), taps.height(), data).expect("same dims")
                }
            }
        };
        let parallel = fix(&self.parallel, &self.ambient_parallel);
        let cross = fix(&self.cross, &self.ambient_cross);
        (
            CaptureStack {
                camera: self.camera.clone(),
                parallel,
                cross,
                ambient_parallel: None,
                ambient_cross: None,
            },
            clamped,
        )
    }

    pub fn cross_phasors(&self) -> Plane<Phasor> {
        self.cross.map(|t| decode_taps(t).phasor)
    }

    pub fn parallel_phasors(&self) -> Plane<Phasor> {
        self.parallel.map(|t| decode_taps(t).phasor)
    }

    /// Multiply every tap and ambient sample by `k`.
    pub fn scaled(&self, k: f64) -> CaptureStack {
        CaptureStack {
            camera: self.camera.clone(),
            parallel: self.parallel.map(|t| t.map(|v| v * k)),
            cross: self.cross.map(|t| t.map(|v| v * k)),
            ambient_parallel: self.ambient_parallel.as_ref().map(|p| p.map(|v| v * k)),
            ambient_cross: self.ambient_cross.as_ref().map(|p| p.map(|v| v * k)),
        }
    }
}
