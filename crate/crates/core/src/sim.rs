//! Forward model: synthesizes polarimetric four-tap captures of a scene in fog.
//!
//! Per pixel the sensor sees the unpolarized target return `Tᵘ`, the
//! polarization-preserving backscatter `Sᵖ` and the depolarized backscatter
//! `Sᵘ`. Through a crossed polarizer half of every unpolarized term survives;
//! through a parallel one the polarized backscatter passes in full:
//!
//! ```text
//! cross    = ½Sᵘ ⊕ ½Tᵘ
//! parallel = Sᵖ ⊕ ½Sᵘ ⊕ ½Tᵘ (⊕ Tᵖ)
//! ```
//!
//! where `⊕` adds phasors in the complex plane and adds offsets.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::camera::{depth_to_phase, pixel_phase, CameraConfig};
use crate::capture::CaptureStack;
use crate::error::{Error, Result};
use crate::phasor::{encode_taps, Phasor, TapSet};
use crate::plane::Plane;
use crate::quadrature::QuadratureSpec;
use crate::scattering::{
    backscatter_phasor_integral, integrate_backscatter, mean_phase_polarized, mean_phase_unpolarized,
    BackscatterIntegral, Component, FogParams,
};

/// Source power. Absolute radiometry cancels in every ratio the pipeline uses.
pub const SOURCE_POWER: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    /// Target depth per pixel, meters.
    pub depth: Plane<f64>,
    /// Diffuse reflectance per pixel in `[0, 1]`.
    pub reflectance: Plane<f64>,
    /// `None` for clear air.
    pub fog: Option<FogParams>,
    /// Ambient level added to every tap.
    pub ambient: Plane<f64>,
    /// Proportionality constant of the backscatter densities relative to the
    /// target return (scattering strength of the medium).
    pub backscatter_gain: f64,
}

impl SceneSpec {
    pub fn validate(&self, cam: &CameraConfig) -> Result<()> {
        cam.validate()?;
        let dims = (cam.width, cam.height);
        if self.depth.dims() != dims || self.reflectance.dims() != dims || self.ambient.dims() != dims {
            return Err(Error::Config(format!(
                "scene planes must all be {}x{}",
                cam.width, cam.height
            )));
        }
        for &z in self.depth.iter() {
            depth_to_phase(z, cam)?;
        }
        if self.reflectance.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(Error::Config("reflectance must lie in [0, 1]".into()));
        }
        if self.ambient.iter().any(|a| !(*a >= 0.0)) {
            return Err(Error::Config("ambient must be non-negative".into()));
        }
        if !(self.backscatter_gain >= 0.0 && self.backscatter_gain.is_finite()) {
            return Err(Error::Config("backscatter_gain must be non-negative".into()));
        }
        if let Some(fog) = &self.fog {
            if (fog.phi0() - cam.phi0).abs() > 1e-12 * cam.phi0 {
                return Err(Error::Config(format!(
                    "fog phi0 {} disagrees with camera phi0 {}",
                    fog.phi0(),
                    cam.phi0
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum NoiseMode {
    #[default]
    None,
    /// Zero-mean Gaussian with standard deviation `scale × pixel offset`.
    Gaussian,
    /// Signal-dependent: standard deviation `scale × √(tap × pixel offset)`.
    Shot,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct NoiseSpec {
    pub mode: NoiseMode,
    pub scale: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn none() -> Self {
        NoiseSpec::default()
    }

    pub fn gaussian(scale: f64, seed: u64) -> Self {
        NoiseSpec {
            mode: NoiseMode::Gaussian,
            scale,
            seed,
        }
    }
}

/// Upper limit of the backscatter integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Integration {
    /// Integrate to infinity, as the reconstruction model assumes.
    #[default]
    Infinite,
    /// Stop at the target: no fog exists behind the surface.
    Truncated,
}

/// Phase assigned to each simulated backscatter phasor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PhaseModel {
    /// Arithmetic mean phase of the density, the reconstruction model's own
    /// description. Amplitude and offset still come from `‖Z‖` and `M`.
    #[default]
    Mean,
    /// Angle of the integrated phasor `Z`, the physically summed signal.
    Circular,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    pub integration: Integration,
    pub phase_model: PhaseModel,
    /// Fraction of the target return that keeps the illumination's
    /// polarization. Zero matches the reconstruction assumption.
    pub polarized_target_fraction: f64,
    pub quad: QuadratureSpec,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            integration: Integration::Infinite,
            phase_model: PhaseModel::Mean,
            polarized_target_fraction: 0.0,
            quad: QuadratureSpec::default(),
        }
    }
}

/// Noise-free components behind a synthesized capture.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    /// Full unpolarized target return `Tᵘ` (before the polarizer halves it).
    pub target: Plane<Phasor>,
    pub backscatter_p: Plane<Phasor>,
    /// Full depolarized backscatter `Sᵘ`.
    pub backscatter_u: Plane<Phasor>,
    pub fog: Option<FogParams>,
    pub depth: Plane<f64>,
}

/// Target returns: phase from depth, amplitude `ρ·φ⁻²·e^{-σᵢφ}`, offset `a/k₀`.
pub fn simulate_target(scene: &SceneSpec, cam: &CameraConfig) -> Result<Plane<Phasor>> {
    let sigma_i = scene.fog.map_or(0.0, |f| f.sigma_i());
    let mut out = Vec::with_capacity(scene.depth.len());
    for (idx, (&z, &rho)) in scene.depth.iter().zip(scene.reflectance.iter()).enumerate() {
        let geometric = depth_to_phase(z, cam)?;
        let measured = pixel_phase(z, idx, cam)?;
        let amplitude = SOURCE_POWER * rho * (-sigma_i * geometric).exp() / (geometric * geometric);
        out.push(Phasor::new(amplitude, measured, amplitude / cam.k0));
    }
    Plane::new(scene.depth.width(), scene.depth.height(), out)
}

fn component_phasor(
    integral: &BackscatterIntegral,
    closed_form_mean: Option<f64>,
    model: PhaseModel,
    gain: f64,
    k0: f64,
) -> Phasor {
    let phase = match model {
        PhaseModel::Mean => closed_form_mean.unwrap_or_else(|| integral.linear_mean()),
        PhaseModel::Circular => integral.circular_phase(),
    };
    Phasor::new(gain * integral.phasor_sum.norm(), phase, gain * integral.mass / k0)
}

fn backscatter_pair(
    fog: &FogParams,
    upper: Option<f64>,
    gain: f64,
    cam: &CameraConfig,
    opts: &SimOptions,
) -> Result<(Phasor, Phasor)> {
    let integral = |c: Component| match upper {
        None => backscatter_phasor_integral(c, fog, &opts.quad),
        Some(u) => integrate_backscatter(c, fog, u, &opts.quad),
    };
    let pol = integral(Component::Polarized)?;
    let pol_mean = match upper {
        None => Some(mean_phase_polarized(fog.sigma_total(), fog.phi0())?),
        Some(_) => None,
    };
    let p = component_phasor(&pol, pol_mean, opts.phase_model, gain, cam.k0);
    if fog.sigma_p() <= 0.0 {
        return Ok((p, Phasor::ZERO));
    }
    let unpol = integral(Component::Unpolarized)?;
    let unpol_mean = match upper {
        None => Some(mean_phase_unpolarized(fog)?),
        Some(_) => None,
    };
    let u = component_phasor(&unpol, unpol_mean, opts.phase_model, gain, cam.k0);
    Ok((p, u))
}

/// Polarized and depolarized backscatter phasors per pixel.
pub fn simulate_backscatter(
    scene: &SceneSpec,
    cam: &CameraConfig,
    opts: &SimOptions,
) -> Result<(Plane<Phasor>, Plane<Phasor>)> {
    let (w, h) = scene.depth.dims();
    let Some(fog) = scene.fog else {
        return Ok((Plane::filled(w, h, Phasor::ZERO), Plane::filled(w, h, Phasor::ZERO)));
    };
    let gain = scene.backscatter_gain;
    match opts.integration {
        Integration::Infinite => {
            let (p, u) = backscatter_pair(&fog, None, gain, cam, opts)?;
            Ok((Plane::filled(w, h, p), Plane::filled(w, h, u)))
        }
        Integration::Truncated => {
            let pairs = scene.depth.par_map(|_, &z| -> Result<(Phasor, Phasor)> {
                let upper = depth_to_phase(z, cam)?;
                if upper <= fog.phi0() {
                    return Ok((Phasor::ZERO, Phasor::ZERO));
                }
                backscatter_pair(&fog, Some(upper), gain, cam, opts)
            });
            let mut pol = Vec::with_capacity(pairs.len());
            let mut unpol = Vec::with_capacity(pairs.len());
            for r in pairs.into_vec() {
                let (p, u) = r?;
                pol.push(p);
                unpol.push(u);
            }
            Ok((Plane::new(w, h, pol)?, Plane::new(w, h, unpol)?))
        }
    }
}

fn add_noise(taps: TapSet, noise: &NoiseSpec, stream: u64) -> TapSet {
    if noise.mode == NoiseMode::None || noise.scale == 0.0 {
        return taps;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    rng.set_stream(stream);
    let level = taps.as_array().iter().sum::<f64>() / 4.0;
    let mut out = taps.as_array();
    for v in out.iter_mut() {
        let std = match noise.mode {
            NoiseMode::Gaussian => noise.scale * level.abs(),
            NoiseMode::Shot => noise.scale * (v.max(0.0) * level.abs()).sqrt(),
            NoiseMode::None => 0.0,
        };
        let n: f64 = StandardNormal.sample(&mut rng);
        *v += std * n;
    }
    TapSet::from_array(out, taps.kind)
}

/// Build the parallel and cross captures plus the ground truth behind them.
/// Ambient is added to every tap and recorded in the ambient frames; noise is
/// applied last, per pixel and per channel from independent seeded streams.
pub fn synthesize_capture(
    scene: &SceneSpec,
    cam: &CameraConfig,
    noise: &NoiseSpec,
    opts: &SimOptions,
) -> Result<(CaptureStack, GroundTruth)> {
    scene.validate(cam)?;
    if !(0.0..=1.0).contains(&opts.polarized_target_fraction) {
        return Err(Error::Config("polarized_target_fraction must lie in [0, 1]".into()));
    }
    if !(noise.scale >= 0.0) {
        return Err(Error::Config("noise scale must be non-negative".into()));
    }
    let full_target = simulate_target(scene, cam)?;
    let (back_p, back_u) = simulate_backscatter(scene, cam, opts)?;

    let frac = opts.polarized_target_fraction;
    let target_u = full_target.map(|t| t.scale(1.0 - frac));
    let (w, h) = (cam.width, cam.height);

    let channels: Vec<(TapSet, TapSet)> = (0..w * h)
        .into_par_iter()
        .map(|i| {
            let tu = target_u.as_slice()[i];
            let tp = full_target.as_slice()[i].scale(frac);
            let sp = back_p.as_slice()[i];
            let su = back_u.as_slice()[i];
            let amb = scene.ambient.as_slice()[i];
            let cross = su.scale(0.5) + tu.scale(0.5);
            let parallel = sp + su.scale(0.5) + tu.scale(0.5) + tp;
            let cross_taps = encode_taps(&cross).map(|v| v + amb);
            let par_taps = encode_taps(&parallel).map(|v| v + amb);
            let i = i as u64;
            (
                add_noise(par_taps, noise, 2 * i),
                add_noise(cross_taps, noise, 2 * i + 1),
            )
        })
        .collect();
    let (par, cross): (Vec<TapSet>, Vec<TapSet>) = channels.into_iter().unzip();

    let has_ambient = scene.ambient.iter().any(|&a| a != 0.0);
    let ambient = has_ambient.then(|| scene.ambient.clone());
    let stack = CaptureStack::new(
        cam.clone(),
        Plane::new(w, h, par)?,
        Plane::new(w, h, cross)?,
        ambient.clone(),
        ambient,
    )?;
    let truth = GroundTruth {
        target: target_u,
        backscatter_p: back_p,
        backscatter_u: back_u,
        fog: scene.fog,
        depth: scene.depth.clone(),
    };
    Ok((stack, truth))
}
