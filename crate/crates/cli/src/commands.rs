use std::fmt;
use std::path::Path;
use std::time::Instant;

use anyhow::{Context as _, Result};
use serde::Serialize;

use fogtof::calibration::{calibrate_alpha, calibrate_k0, resolve_phi0, CalibrationParams};
use fogtof::camera::depth_to_phase;
use fogtof::fit::Optimizer;
use fogtof::floor::NoiseFloor;
use fogtof::io::manifest::ManifestFiles;
use fogtof::io::{
    capture_to_pitf, read_calibration, read_capture, write_atomic, write_calibration, Descriptor, Manifest, PitfFile,
    PlaneKind, Provenance, SceneInfo,
};
use fogtof::metrics::evaluate_depth;
use fogtof::presets::{preset_fog, preset_gain, staircase_scene, FogPreset};
use fogtof::reconstruct::{
    baseline_depth, reconstruct_depth, AlphaMode, BackscatterEstimate, Channel, DepthMap, ReconstructConfig, SigmaMode,
};
use fogtof::sim::{synthesize_capture, Integration, NoiseMode, NoiseSpec, PhaseModel, SimOptions};
use fogtof::{CameraConfig, FogParams, Plane};

use crate::{
    CalibrateArgs, DecayArgs, EvaluateArgs, Method, NoiseKind, OptimizerArg, Preset, ReconstructArgs, SigmaModeArg,
    SimulateArgs,
};

/// Invalid combination of command-line inputs (exit code 2).
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

pub struct Context {
    pub seed: u64,
    pub strict: bool,
}

const CAPTURE_FILE: &str = "capture.pitf";
const TRUTH_FILE: &str = "truth.pitf";
const MANIFEST_FILE: &str = "manifest.json";

impl From<Preset> for FogPreset {
    fn from(p: Preset) -> Self {
        match p {
            Preset::Clear => FogPreset::Clear,
            Preset::Thin => FogPreset::Thin,
            Preset::Medium => FogPreset::Medium,
            Preset::Thick => FogPreset::Thick,
        }
    }
}

fn load_camera(path: Option<&Path>) -> Result<CameraConfig> {
    let cam = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text)
                .map_err(fogtof::Error::from)
                .with_context(|| format!("parsing camera config {}", p.display()))?
        }
        None => CameraConfig::default(),
    };
    Ok(cam)
}

fn fog_for(preset: Preset, sigma_i: Option<f64>, sigma_p: Option<f64>, phi0: f64) -> Result<Option<FogParams>> {
    let base = preset_fog(preset.into(), phi0)?;
    if sigma_i.is_none() && sigma_p.is_none() {
        return Ok(base);
    }
    let si = sigma_i.or(base.map(|f| f.sigma_i()));
    let sp = sigma_p.or(base.map(|f| f.sigma_p())).unwrap_or(0.0);
    let si = si.ok_or_else(|| ConfigError("--sigma-p without a fog preset also needs --sigma-i".into()))?;
    Ok(Some(
        FogParams::new(si, sp, phi0).map_err(|e| ConfigError(e.to_string()))?,
    ))
}

pub fn simulate(ctx: &Context, args: &SimulateArgs) -> Result<()> {
    let mut cam = load_camera(args.camera.as_deref())?;
    if let Some(w) = args.width {
        cam.width = w;
    }
    if let Some(h) = args.height {
        cam.height = h;
    }
    cam.validate()?;
    let fog = fog_for(args.preset, args.sigma_i, args.sigma_p, cam.phi0)?;
    let gain = match (fog, args.gain) {
        (None, _) => 0.0,
        (Some(_), Some(g)) => g,
        (Some(_), None) if args.preset == Preset::Clear => preset_gain(FogPreset::Thin),
        (Some(_), None) => preset_gain(args.preset.into()),
    };
    let mut scene = staircase_scene(&cam, fog, gain);
    if args.empty {
        scene.reflectance = Plane::filled(cam.width, cam.height, 0.0);
    }
    scene.ambient = Plane::filled(cam.width, cam.height, args.ambient);
    let noise = if args.noise > 0.0 {
        NoiseSpec {
            mode: match args.noise_kind {
                NoiseKind::Gaussian => NoiseMode::Gaussian,
                NoiseKind::Shot => NoiseMode::Shot,
            },
            scale: args.noise,
            seed: ctx.seed,
        }
    } else {
        NoiseSpec::none()
    };
    let opts = SimOptions {
        integration: if args.truncated {
            Integration::Truncated
        } else {
            Integration::Infinite
        },
        phase_model: if args.circular_phase {
            PhaseModel::Circular
        } else {
            PhaseModel::Mean
        },
        ..SimOptions::default()
    };
    let (stack, truth) = synthesize_capture(&scene, &cam, &noise, &opts)?;

    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    capture_to_pitf(&stack)?.write(&args.out.join(CAPTURE_FILE))?;
    let mut truth_file = PitfFile::new(cam.width, cam.height);
    truth_file.push(Descriptor::plain(PlaneKind::Depth), &truth.depth)?;
    truth_file.write(&args.out.join(TRUTH_FILE))?;
    let manifest = Manifest {
        camera: cam,
        fog,
        noise: Some(noise),
        scene: Some(SceneInfo {
            preset: Some(FogPreset::from(args.preset).name().to_string()),
            integration: opts.integration,
            phase_model: opts.phase_model,
            backscatter_gain: gain,
        }),
        provenance: Provenance::current(ctx.seed),
        files: ManifestFiles {
            capture: CAPTURE_FILE.into(),
            truth_depth: Some(TRUTH_FILE.into()),
        },
    };
    manifest.write(&args.out.join(MANIFEST_FILE))?;
    log::info!("wrote {}", args.out.display());
    Ok(())
}

pub fn calibrate(ctx: &Context, args: &CalibrateArgs) -> Result<()> {
    let (ref_manifest, reference) = read_capture(&args.reference, ctx.strict)
        .with_context(|| format!("reading reference {}", args.reference.display()))?;
    let cam = &ref_manifest.camera;
    let (reference, _) = reference.ambient_subtracted(1e-9);
    let k0 = calibrate_k0(&reference)?;
    let phi0 = resolve_phi0(cam)?;

    let (alpha, valid_fraction) = match (&args.empty_fog, args.global_alpha) {
        (Some(path), _) => {
            let (m, empty) =
                read_capture(path, ctx.strict).with_context(|| format!("reading empty fog {}", path.display()))?;
            if (m.camera.width, m.camera.height) != (cam.width, cam.height) || m.camera.phi0 != phi0 {
                return Err(ConfigError("empty-fog capture and reference disagree on camera".into()).into());
            }
            let (empty, _) = empty.ambient_subtracted(1e-9);
            let cal = calibrate_alpha(&empty, phi0, &NoiseFloor::default())?;
            let fraction = cal.valid.count_true() as f64 / cal.valid.len() as f64;
            (cal.alpha, fraction)
        }
        (None, Some(a)) => {
            if !(a > 0.0 && a < 1.0) {
                return Err(ConfigError(format!("--global-alpha must lie in (0, 1), got {a}")).into());
            }
            (Plane::filled(cam.width, cam.height, a), 1.0)
        }
        (None, None) => {
            return Err(ConfigError("alpha needs --empty-fog or --global-alpha".into()).into());
        }
    };
    let mut params = CalibrationParams {
        k0,
        alpha,
        phi0,
        mod_freq: cam.mod_freq,
    };
    if args.median_alpha {
        params = params.with_global_alpha();
    }
    write_calibration(&args.out, &params, valid_fraction)?;
    println!(
        "k0 = {:.9}, alpha median = {:.9}, alpha valid fraction = {:.4}",
        params.k0,
        params.global_alpha(),
        valid_fraction
    );
    Ok(())
}

fn write_depth(path: &Path, depth: &DepthMap, estimate: Option<&BackscatterEstimate>) -> Result<()> {
    let (w, h) = depth.depth.dims();
    let mut file = PitfFile::new(w, h);
    file.push(Descriptor::plain(PlaneKind::Depth), &depth.depth)?;
    file.push(
        Descriptor::plain(PlaneKind::Mask),
        &depth.valid.map(|&v| if v { 1.0 } else { 0.0 }),
    )?;
    file.push(Descriptor::plain(PlaneKind::Phase), &depth.phase)?;
    file.push(Descriptor::plain(PlaneKind::Amplitude), &depth.amplitude)?;
    if let Some(est) = estimate {
        file.push(Descriptor::plain(PlaneKind::Sigma), &est.sigma_map)?;
        file.push(Descriptor::plain(PlaneKind::PhaseUnpolarized), &est.phase_u)?;
        file.push(Descriptor::plain(PlaneKind::AmplitudeUnpolarized), &est.amp_u)?;
    }
    file.write(path)?;
    Ok(())
}

pub fn reconstruct(ctx: &Context, args: &ReconstructArgs) -> Result<()> {
    let (manifest, stack) = read_capture(&args.capture, ctx.strict)
        .with_context(|| format!("reading capture {}", args.capture.display()))?;
    let floor = NoiseFloor {
        relative: args.floor,
        ..NoiseFloor::default()
    };
    floor.validate()?;
    let start = Instant::now();
    let declared_clear = manifest.scene.is_some() && manifest.fog.is_none();
    let channel = match args.method {
        Method::Ours if declared_clear => {
            log::info!("manifest declares clear air; using the cross capture directly");
            Some(Channel::Cross)
        }
        Method::Ours => None,
        Method::Cross => Some(Channel::Cross),
        Method::Parallel => Some(Channel::Parallel),
        Method::Pdi => Some(Channel::Pdi),
    };
    let (depth, estimate) = match channel {
        Some(ch) => (baseline_depth(&stack, ch, &floor), None),
        None => {
            let path = args
                .calibration
                .as_ref()
                .ok_or_else(|| ConfigError("--method ours needs --calibration".into()))?;
            let calib = read_calibration(path).with_context(|| format!("reading calibration {}", path.display()))?;
            if calib.alpha.dims() != (stack.width(), stack.height()) || calib.mod_freq != stack.camera.mod_freq {
                return Err(ConfigError("calibration does not match the capture's camera".into()).into());
            }
            let cfg = ReconstructConfig {
                sigma_mode: match args.sigma_mode {
                    SigmaModeArg::Global => SigmaMode::Global,
                    SigmaModeArg::PerPixel => SigmaMode::PerPixel,
                },
                alpha_mode: if args.global_alpha {
                    AlphaMode::Global
                } else {
                    AlphaMode::PerPixel
                },
                floor,
                fit: fogtof::fit::FitConfig {
                    optimizer: match args.optimizer {
                        OptimizerArg::Adam => Optimizer::Adam,
                        OptimizerArg::Bisection => Optimizer::Bisection,
                    },
                    ..Default::default()
                },
                ..ReconstructConfig::default()
            };
            let (d, e) = reconstruct_depth(&stack, &calib, &cfg)?;
            (d, Some(e))
        }
    };
    let elapsed = start.elapsed();
    write_depth(&args.out, &depth, estimate.as_ref())?;
    let sigma = estimate
        .as_ref()
        .and_then(|e| e.sigma)
        .map_or_else(|| "n/a".to_string(), |s| format!("{s:.6}"));
    println!(
        "valid fraction = {:.4}, sigma = {sigma}, runtime_ms = {:.1}",
        depth.valid_fraction(),
        elapsed.as_secs_f64() * 1e3
    );
    Ok(())
}

#[derive(Serialize)]
struct MetricsRow<'a> {
    scene: &'a str,
    method: &'a str,
    fog_preset: &'a str,
    rmse_cm: f64,
    rel_error: f64,
    std_dev_cm: f64,
    valid_fraction: f64,
    runtime_ms: f64,
}

const METRICS_NOTE: &str = "# rel_error = mean over valid pixels of |d - d_gt| / d_gt\n";

pub fn evaluate(args: &EvaluateArgs) -> Result<()> {
    let file = PitfFile::read(&args.depth).with_context(|| format!("reading {}", args.depth.display()))?;
    let depth = file.require(Descriptor::plain(PlaneKind::Depth))?;
    let valid = match file.get(Descriptor::plain(PlaneKind::Mask)) {
        Some(m) => m.map(|&v| v != 0.0),
        None => depth.map(|d| d.is_finite()),
    };
    let truth = fogtof::io::read_plane(&args.truth, PlaneKind::Depth)
        .with_context(|| format!("reading {}", args.truth.display()))?;
    let m = evaluate_depth(&depth, &valid, &truth)?;

    let mut out = match std::fs::read(&args.out) {
        Ok(bytes) => bytes,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
        Err(e) => return Err(e).with_context(|| format!("reading {}", args.out.display())),
    };
    let fresh = out.is_empty();
    if fresh {
        out.extend_from_slice(METRICS_NOTE.as_bytes());
    }
    let mut w = csv::WriterBuilder::new().has_headers(fresh).from_writer(Vec::new());
    w.serialize(MetricsRow {
        scene: &args.scene,
        method: &args.method,
        fog_preset: &args.preset,
        rmse_cm: m.rmse_cm,
        rel_error: m.rel_error,
        std_dev_cm: m.std_dev_cm,
        valid_fraction: m.valid_fraction,
        runtime_ms: args.runtime_ms,
    })?;
    out.extend_from_slice(&w.into_inner().map_err(|e| e.into_error())?);
    write_atomic(&args.out, &out)?;
    println!(
        "rmse_cm = {:.6}, rel_error = {:.6}, std_dev_cm = {:.6}, valid_fraction = {:.4}",
        m.rmse_cm, m.rel_error, m.std_dev_cm, m.valid_fraction
    );
    Ok(())
}

#[derive(Serialize)]
struct DecayRow {
    distance_m: f64,
    intensity_nofog: f64,
    intensity_fog: f64,
    intensity_fog_polarizer: f64,
}

pub fn decay_curve(args: &DecayArgs) -> Result<()> {
    let cam = load_camera(args.camera.as_deref())?;
    cam.validate()?;
    if !(args.min > 0.0 && args.max > args.min) || args.steps < 2 {
        return Err(ConfigError("need 0 < min < max and at least two steps".into()).into());
    }
    let (si, sp) = match fog_for(args.preset, args.sigma_i, args.sigma_p, cam.phi0)? {
        Some(f) => (f.sigma_i(), f.sigma_p()),
        None => (0.0, 0.0),
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    for i in 0..args.steps {
        let d = args.min + (args.max - args.min) * i as f64 / (args.steps - 1) as f64;
        let phi = depth_to_phase(d, &cam)?;
        let nofog = 1.0 / (phi * phi);
        let fog = nofog * (-si * phi).exp();
        w.serialize(DecayRow {
            distance_m: d,
            intensity_nofog: nofog,
            intensity_fog: fog,
            intensity_fog_polarizer: fog * (-sp * phi).exp(),
        })?;
    }
    write_atomic(&args.out, &w.into_inner().map_err(|e| e.into_error())?)?;
    Ok(())
}
