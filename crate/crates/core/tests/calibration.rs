use approx::assert_relative_eq;

use fogtof::calibration::{calibrate_alpha, calibrate_k0, phi0_from_onset};
use fogtof::floor::NoiseFloor;
use fogtof::presets::staircase_scene;
use fogtof::sim::{synthesize_capture, NoiseSpec, SimOptions};
use fogtof::{CameraConfig, CaptureStack, FogParams, Plane};

fn camera() -> CameraConfig {
    CameraConfig {
        width: 20,
        height: 10,
        ..CameraConfig::default()
    }
}

fn clear_reference(cam: &CameraConfig) -> CaptureStack {
    let mut scene = staircase_scene(cam, None, 0.0);
    scene.reflectance = Plane::from_fn(cam.width, cam.height, |x, _| {
        0.1 + 0.9 * x as f64 / (cam.width - 1) as f64
    });
    synthesize_capture(&scene, cam, &NoiseSpec::none(), &SimOptions::default())
        .unwrap()
        .0
}

fn empty_fog(cam: &CameraConfig, fog: FogParams) -> CaptureStack {
    let mut scene = staircase_scene(cam, Some(fog), 0.05);
    scene.reflectance = Plane::filled(cam.width, cam.height, 0.0);
    synthesize_capture(&scene, cam, &NoiseSpec::none(), &SimOptions::default())
        .unwrap()
        .0
}

#[test]
fn k0_recovered_over_varying_reflectance() {
    let cam = camera();
    let reference = clear_reference(&cam);
    assert!((calibrate_k0(&reference).unwrap() - 0.71).abs() < 1e-9);
    for p in reference.cross_phasors().iter() {
        assert_relative_eq!(p.amplitude / p.offset, 0.71, max_relative = 1e-12);
    }
}

#[test]
fn k0_ignores_tap_scaling() {
    let cam = camera();
    let reference = clear_reference(&cam);
    let a = calibrate_k0(&reference).unwrap();
    let b = calibrate_k0(&reference.scaled(2.0)).unwrap();
    assert_relative_eq!(a, b, max_relative = 1e-12);
}

#[test]
fn k0_fails_on_all_degenerate_reference() {
    let cam = camera();
    let mut scene = staircase_scene(&cam, None, 0.0);
    scene.reflectance = Plane::filled(cam.width, cam.height, 0.0);
    let (stack, _) = synthesize_capture(&scene, &cam, &NoiseSpec::none(), &SimOptions::default()).unwrap();
    assert!(calibrate_k0(&stack).is_err());
}

#[test]
fn alpha_recovered_at_every_pixel() {
    let cam = camera();
    let fog = FogParams::new(0.6, 0.4, cam.phi0).unwrap();
    let cal = calibrate_alpha(&empty_fog(&cam, fog), cam.phi0, &NoiseFloor::default()).unwrap();
    assert_eq!(cal.valid.count_true(), cal.valid.len());
    for (a, s) in cal.alpha.iter().zip(cal.sigma.iter()) {
        assert!((a - 0.6).abs() < 1e-4, "alpha {a}");
        assert_relative_eq!(*s, 1.0, max_relative = 1e-6);
    }
}

#[test]
fn alpha_ignores_tap_scaling() {
    let cam = camera();
    let fog = FogParams::new(0.9, 1.6, cam.phi0).unwrap();
    let stack = empty_fog(&cam, fog);
    let floor = NoiseFloor::default();
    let a = calibrate_alpha(&stack, cam.phi0, &floor).unwrap();
    let b = calibrate_alpha(&stack.scaled(0.25), cam.phi0, &floor).unwrap();
    for (x, y) in a.alpha.iter().zip(b.alpha.iter()) {
        assert!((x - y).abs() < 1e-9);
    }
}

#[test]
fn vanishing_depolarization_is_flagged() {
    let cam = camera();
    let fog = FogParams::new(0.6, 1e-14, cam.phi0).unwrap();
    let result = calibrate_alpha(&empty_fog(&cam, fog), cam.phi0, &NoiseFloor::default());
    assert!(result.is_err() || result.unwrap().valid.count_true() == 0);
}

#[test]
fn onset_distance_gives_phi0() {
    let cam = CameraConfig {
        light_speed: 3e8,
        ..CameraConfig::default()
    };
    assert!((phi0_from_onset(0.05, &cam).unwrap() - 0.1676).abs() < 1e-4);
}
