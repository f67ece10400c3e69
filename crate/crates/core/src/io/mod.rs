//! On-disk formats: `PITF` plane containers, JSON manifests and calibration
//! files. Every writer goes through a temporary file in the target directory
//! followed by a rename, so readers never observe partial output.

pub mod manifest;
pub mod pitf;

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::calibration::CalibrationParams;
use crate::camera::CameraConfig;
use crate::capture::CaptureStack;
use crate::error::{Error, Result};
use crate::phasor::{TapKind, TapSet};
use crate::plane::Plane;

pub use manifest::{Manifest, Provenance, SceneInfo};
pub use pitf::{Descriptor, PitfFile, PlaneKind};

/// Write `bytes` to `path` via a sibling temporary file and an atomic rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn taps_to_planes(file: &mut PitfFile, kind: PlaneKind, taps: &Plane<TapSet>) -> Result<()> {
    for t in 0..4 {
        let plane = taps.map(|s| s.as_array()[t]);
        file.push(Descriptor::tap(kind, t as u8), &plane)?;
    }
    Ok(())
}

fn planes_to_taps(file: &PitfFile, kind: PlaneKind) -> Result<Plane<TapSet>> {
    let planes = (0..4u8)
        .map(|t| file.require(Descriptor::tap(kind, t)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Plane::from_fn(file.width, file.height, |x, y| {
        TapSet::from_array(
            [
                *planes[0].get(x, y),
                *planes[1].get(x, y),
                *planes[2].get(x, y),
                *planes[3].get(x, y),
            ],
            TapKind::Measured,
        )
    }))
}

pub fn capture_to_pitf(stack: &CaptureStack) -> Result<PitfFile> {
    let mut file = PitfFile::new(stack.width(), stack.height());
    taps_to_planes(&mut file, PlaneKind::Parallel, &stack.parallel)?;
    taps_to_planes(&mut file, PlaneKind::Cross, &stack.cross)?;
    if let Some(a) = &stack.ambient_parallel {
        file.push(Descriptor::plain(PlaneKind::AmbientParallel), a)?;
    }
    if let Some(a) = &stack.ambient_cross {
        file.push(Descriptor::plain(PlaneKind::AmbientCross), a)?;
    }
    Ok(file)
}

pub fn capture_from_pitf(file: &PitfFile, camera: CameraConfig) -> Result<CaptureStack> {
    if (camera.width, camera.height) != (file.width, file.height) {
        return Err(Error::Config(format!(
            "manifest camera is {}x{} but the capture is {}x{}",
            camera.width, camera.height, file.width, file.height
        )));
    }
    CaptureStack::new(
        camera,
        planes_to_taps(file, PlaneKind::Parallel)?,
        planes_to_taps(file, PlaneKind::Cross)?,
        file.get(Descriptor::plain(PlaneKind::AmbientParallel)),
        file.get(Descriptor::plain(PlaneKind::AmbientCross)),
    )
}

/// Read a capture together with the manifest that describes it. Paths inside
/// the manifest are relative to the manifest's directory.
pub fn read_capture(manifest_path: &Path, strict: bool) -> Result<(Manifest, CaptureStack)> {
    let manifest = Manifest::read(manifest_path, strict)?;
    let pitf = PitfFile::read(&sibling(manifest_path, &manifest.files.capture))?;
    let stack = capture_from_pitf(&pitf, manifest.camera.clone())?;
    Ok((manifest, stack))
}

/// `name` resolved against the directory holding `anchor`.
pub fn sibling(anchor: &Path, name: &str) -> PathBuf {
    match anchor.parent() {
        Some(dir) => dir.join(name),
        None => PathBuf::from(name),
    }
}

/// Single plane of the given kind from a container.
pub fn read_plane(path: &Path, kind: PlaneKind) -> Result<Plane<f64>> {
    PitfFile::read(path)?.require(Descriptor::plain(kind))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationFile {
    pub k0: f64,
    pub phi0: f64,
    pub mod_freq: f64,
    pub width: usize,
    pub height: usize,
    /// Median of the α plane.
    pub global_alpha: f64,
    /// Fraction of pixels whose α came from their own inversion.
    pub alpha_valid_fraction: f64,
    /// Container holding the α plane, relative to this file.
    pub alpha_plane: String,
}

/// Write the calibration JSON and its α plane next to it.
pub fn write_calibration(path: &Path, params: &CalibrationParams, valid_fraction: f64) -> Result<()> {
    params.validate()?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "calibration".into());
    let plane_name = format!("{stem}.alpha.pitf");
    let mut pitf = PitfFile::new(params.alpha.width(), params.alpha.height());
    pitf.push(Descriptor::plain(PlaneKind::Alpha), &params.alpha)?;
    pitf.write(&sibling(path, &plane_name))?;
    let file = CalibrationFile {
        k0: params.k0,
        phi0: params.phi0,
        mod_freq: params.mod_freq,
        width: params.alpha.width(),
        height: params.alpha.height(),
        global_alpha: params.global_alpha(),
        alpha_valid_fraction: valid_fraction,
        alpha_plane: plane_name,
    };
    let mut json = serde_json::to_vec_pretty(&file)?;
    json.push(b'\n');
    write_atomic(path, &json)
}

pub fn read_calibration(path: &Path) -> Result<CalibrationParams> {
    let file: CalibrationFile = serde_json::from_slice(&std::fs::read(path)?)?;
    let alpha = read_plane(&sibling(path, &file.alpha_plane), PlaneKind::Alpha)?;
    if alpha.dims() != (file.width, file.height) {
        return Err(Error::Format("alpha plane size disagrees with calibration file".into()));
    }
    let params = CalibrationParams {
        k0: file.k0,
        alpha,
        phi0: file.phi0,
        mod_freq: file.mod_freq,
    };
    params.validate()?;
    Ok(params)
}
