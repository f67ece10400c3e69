//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::f64::consts::PI;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fogtof::calibration::{calibrate_alpha, calibrate_k0, CalibrationParams};
use fogtof::camera::depth_to_phase;
use fogtof::floor::NoiseFloor;
use fogtof::metrics::evaluate_depth;
use fogtof::phasor::{decode_taps, encode_taps, tap_subtract};
use fogtof::presets::{preset_fog, preset_gain, staircase_scene, FogPreset};
use fogtof::quadrature::{geometric_breaks, integrate_with_breaks, QuadratureSpec};
use fogtof::reconstruct::{baseline_depth, phase_error, reconstruct_depth, Channel, ReconstructConfig};
use fogtof::scattering::{mean_phase_polarized, mean_phase_unpolarized};
use fogtof::sim::{synthesize_capture, Integration, NoiseSpec, SimOptions};
use fogtof::special::exp_integral_e1;
use fogtof::{CameraConfig, FogParams, Phasor, Plane};

type Check = Result<String, String>;
type Criterion = (u8, &'static str, Option<Duration>, fn() -> Check);

fn oracle_spec() -> QuadratureSpec {
    QuadratureSpec {
        rel_tol: 1e-12,
        abs_tol: 1e-300,
        tail_cutoff: None,
        max_subdivisions: 20_000,
    }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

/// Mean phase of `φ⁻²·w(φ)` over `[φ₀, ∞)`, integrated in `t = 1/φ` where
/// the range becomes `(0, 1/φ₀]` and the power law disappears.
fn oracle_mean(w: impl Fn(f64) -> f64 + Copy, phi0: f64) -> f64 {
    let spec = oracle_spec();
    let upper = 1.0 / phi0;
    let breaks: Vec<f64> = std::iter::once(0.0)
        .chain(geometric_breaks(upper / 1024.0, upper))
        .collect();
    let mass = integrate_with_breaks(|t: f64| w(1.0 / t), &breaks, &spec)
        .unwrap()
        .value;
    let moment = integrate_with_breaks(|t: f64| w(1.0 / t) / t, &breaks, &spec)
        .unwrap()
        .value;
    moment / mass
}

fn criterion_1() -> Check {
    let grid = [0.1, 0.3, 1.0, 3.0, 10.0];
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for &si in &grid {
        for &sp in &grid {
            for &phi0 in &[0.05, 0.2, 1.0] {
                let fog = FogParams::new(si, sp, phi0).map_err(|e| e.to_string())?;
                let sigma = si + sp;
                let pol = mean_phase_polarized(sigma, phi0).map_err(|e| e.to_string())?;
                let pol_ref = oracle_mean(|p| (-sigma * p).exp(), phi0);
                let unp = mean_phase_unpolarized(&fog).map_err(|e| e.to_string())?;
                let unp_ref = oracle_mean(|p| (-si * p).exp() * -(-sp * p).exp_m1(), phi0);
                let e = rel(pol, pol_ref).max(rel(unp, unp_ref));
                if e > 1e-6 {
                    return Err(format!(
                        "sigma_i={si} sigma_p={sp} phi0={phi0}: polarized {pol} vs {pol_ref}, \
                         unpolarized {unp} vs {unp_ref}"
                    ));
                }
                worst = worst.max(e);
                cases += 2;
            }
        }
    }
    Ok(format!(
        "{cases} closed-form values, max relative error {worst:.2e} (limit 1e-6)"
    ))
}

fn criterion_2() -> Check {
    let spec = oracle_spec();
    let mut worst: f64 = 0.0;
    let n = 300;
    for i in 0..n {
        let x = 0.01 * (3000.0f64).powf(i as f64 / (n - 1) as f64);
        // E₁(x) = ∫₀¹ e^{-x/u}/u du
        let breaks: Vec<f64> = std::iter::once(0.0)
            .chain(geometric_breaks(x.min(1.0) / 64.0, 1.0))
            .collect();
        let reference = integrate_with_breaks(|u: f64| (-x / u).exp() / u, &breaks, &spec)
            .map_err(|e| e.to_string())?
            .value;
        let got = exp_integral_e1(x).map_err(|e| e.to_string())?;
        let e = rel(got, reference);
        if e > 1e-10 {
            return Err(format!("E1({x}) = {got}, integral gives {reference}"));
        }
        worst = worst.max(e);
    }
    let spot = exp_integral_e1(1.0).map_err(|e| e.to_string())?;
    if (spot - 0.219_383_934_4).abs() > 1e-9 {
        return Err(format!("E1(1) = {spot}"));
    }
    Ok(format!(
        "{n} points on [0.01, 30], max relative error {worst:.2e}; E1(1) = {spot:.10}"
    ))
}

fn phasor_close(got: &Phasor, want: &Phasor, tol: f64) -> bool {
    let scale = 1.0 + want.amplitude.abs() + want.offset.abs();
    (got.to_complex() - want.to_complex()).norm() <= tol * scale
        && (got.offset - want.offset).abs() <= tol * scale
        && (want.amplitude < 1e-3 || phase_error(got.phase, want.phase) <= tol * scale / want.amplitude)
}

fn criterion_3() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(20_241_019);
    let random = |rng: &mut ChaCha8Rng| {
        let a = 10f64.powf(rng.random_range(-2.0..1.0));
        Phasor::new(a, rng.random_range(0.0..2.0 * PI), a / rng.random_range(0.05..1.0))
    };
    let n = 100_000;
    for case in 0..n {
        let p = random(&mut rng);
        let q = random(&mut rng);
        let k = rng.random_range(0.1..10.0);
        let (tp, tq) = (encode_taps(&p), encode_taps(&q));
        let checks = [
            ("round trip", decode_taps(&tp).phasor, p),
            ("sum", decode_taps(&(tp + tq)).phasor, p + q),
            ("difference", decode_taps(&tap_subtract(&tp, &tq)).phasor, p - q),
            ("scaling", decode_taps(&tp.map(|v| v * k)).phasor, p.scale(k)),
        ];
        for (name, got, want) in checks {
            if !phasor_close(&got, &want, 1e-10) {
                return Err(format!("case {case} ({name}): decoded {got:?}, expected {want:?}"));
            }
        }
        if !(0.0..2.0 * PI).contains(&decode_taps(&tp).phasor.phase) {
            return Err(format!("case {case}: phase outside [0, 2pi)"));
        }
    }
    Ok(format!(
        "{n} random phasor pairs: round trip, sum, difference and scaling within 1e-10"
    ))
}

fn known_alpha(cam: &CameraConfig, alpha: f64) -> CalibrationParams {
    CalibrationParams {
        k0: cam.k0,
        alpha: Plane::filled(cam.width, cam.height, alpha),
        phi0: cam.phi0,
        mod_freq: cam.mod_freq,
    }
}

fn criterion_4() -> Check {
    let cam = CameraConfig::default();
    let fog = FogParams::new(0.6, 0.4, cam.phi0).map_err(|e| e.to_string())?;
    let scene = staircase_scene(&cam, Some(fog), preset_gain(FogPreset::Thin));
    let (stack, truth) =
        synthesize_capture(&scene, &cam, &NoiseSpec::none(), &SimOptions::default()).map_err(|e| e.to_string())?;
    let (depth, est) = reconstruct_depth(&stack, &known_alpha(&cam, fog.alpha()), &ReconstructConfig::default())
        .map_err(|e| e.to_string())?;
    let m = evaluate_depth(&depth.depth, &depth.valid, &truth.depth).map_err(|e| e.to_string())?;
    let worst_residual = est
        .root_residual
        .iter()
        .zip(depth.valid.iter())
        .filter(|(_, v)| **v)
        .map(|(r, _)| *r)
        .fold(0.0, f64::max);
    let cross = baseline_depth(&stack, Channel::Cross, &NoiseFloor::default());
    let cm = evaluate_depth(&cross.depth, &cross.valid, &truth.depth).map_err(|e| e.to_string())?;
    let detail = format!(
        "RMSE {:.2e} cm (limit 0.1), max root residual {worst_residual:.1e} (limit 1e-9), \
         valid {:.3}, cross baseline {:.2} cm",
        m.rmse_cm, m.valid_fraction, cm.rmse_cm
    );
    if m.rmse_cm < 0.1 && worst_residual < 1e-9 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

struct PresetRun {
    ours: f64,
    cross: f64,
    valid: f64,
}

fn run_preset(preset: FogPreset, noise: f64, integration: Integration) -> Result<PresetRun, String> {
    let cam = CameraConfig::default();
    let fog = preset_fog(preset, cam.phi0)
        .map_err(|e| e.to_string())?
        .expect("foggy preset");
    let scene = staircase_scene(&cam, Some(fog), preset_gain(preset));
    let opts = SimOptions {
        integration,
        ..SimOptions::default()
    };
    let seed = 1000 + preset.density() as u64;
    let (stack, truth) =
        synthesize_capture(&scene, &cam, &NoiseSpec::gaussian(noise, seed), &opts).map_err(|e| e.to_string())?;
    let (depth, _) = reconstruct_depth(&stack, &known_alpha(&cam, fog.alpha()), &ReconstructConfig::default())
        .map_err(|e| e.to_string())?;
    let ours = evaluate_depth(&depth.depth, &depth.valid, &truth.depth).map_err(|e| e.to_string())?;
    let cross = baseline_depth(&stack, Channel::Cross, &NoiseFloor::default());
    let cm = evaluate_depth(&cross.depth, &cross.valid, &truth.depth).map_err(|e| e.to_string())?;
    Ok(PresetRun {
        ours: ours.rmse_cm,
        cross: cm.rmse_cm,
        valid: ours.valid_fraction,
    })
}

fn ladder(runs: &[PresetRun]) -> String {
    FogPreset::DENSE
        .iter()
        .zip(runs)
        .map(|(p, r)| format!("{} {:.2}/{:.2} cm (valid {:.2})", p.name(), r.ours, r.cross, r.valid))
        .collect::<Vec<_>>()
        .join(", ")
}

fn criterion_5() -> Check {
    let runs = FogPreset::DENSE
        .iter()
        .map(|&p| run_preset(p, 0.01, Integration::Infinite))
        .collect::<Result<Vec<_>, _>>()?;
    let increasing = runs.windows(2).all(|w| w[1].cross > w[0].cross);
    let better = runs.iter().all(|r| r.ours < r.cross);
    let thick = &runs[2];
    let halved = thick.ours <= 0.5 * thick.cross;
    let detail = format!(
        "ours/cross {}; (a) {increasing} (b) {better} (c) {halved}, thick ratio {:.3}",
        ladder(&runs),
        thick.ours / thick.cross
    );
    if increasing && better && halved {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_6() -> Check {
    let cam = CameraConfig::default();
    let mut clear = staircase_scene(&cam, None, 0.0);
    clear.ambient = Plane::filled(cam.width, cam.height, 0.05);
    let (reference, _) =
        synthesize_capture(&clear, &cam, &NoiseSpec::none(), &SimOptions::default()).map_err(|e| e.to_string())?;
    let (reference, _) = reference.ambient_subtracted(1e-9);
    let k0 = calibrate_k0(&reference).map_err(|e| e.to_string())?;

    let fog = FogParams::new(0.6, 0.4, cam.phi0).map_err(|e| e.to_string())?;
    let mut empty = staircase_scene(&cam, Some(fog), preset_gain(FogPreset::Thin));
    empty.reflectance = Plane::filled(cam.width, cam.height, 0.0);
    let (empty, _) =
        synthesize_capture(&empty, &cam, &NoiseSpec::none(), &SimOptions::default()).map_err(|e| e.to_string())?;
    let cal = calibrate_alpha(&empty, cam.phi0, &NoiseFloor::default()).map_err(|e| e.to_string())?;
    let errors: Vec<f64> = cal.alpha.iter().map(|a| (a - 0.6).abs()).collect();
    let mae = fogtof::plane::median(&errors).unwrap_or(f64::INFINITY);
    let detail = format!(
        "k0 = {k0:.12} (error {:.1e}, limit 1e-6), alpha median abs error {mae:.1e} (limit 1e-4), \
         {} of {} pixels valid",
        (k0 - 0.71).abs(),
        cal.valid.count_true(),
        cal.valid.len()
    );
    if (k0 - 0.71).abs() <= 1e-6 && mae <= 1e-4 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_7() -> Check {
    let levels = [0.0, 0.005, 0.01, 0.02];
    let mut lines = Vec::new();
    let mut ok = true;
    let mut truncated_at_1pct = Vec::new();
    for integration in [Integration::Infinite, Integration::Truncated] {
        for &preset in &FogPreset::DENSE {
            let runs = levels
                .iter()
                .map(|&n| run_preset(preset, n, integration))
                .collect::<Result<Vec<_>, _>>()?;
            let monotone = runs.windows(2).all(|w| w[1].ours >= w[0].ours);
            // The ladder is asserted where simulator and model agree; under
            // truncation a fixed mismatch bias dominates and is only reported.
            let asserted = integration == Integration::Infinite;
            ok &= monotone || !asserted;
            let tag = match (asserted, monotone) {
                (true, true) => "",
                (true, false) => " NOT MONOTONE",
                (false, true) => " (reported)",
                (false, false) => " (reported, not monotone)",
            };
            lines.push(format!(
                "{integration:?}/{}: [{}]{tag}",
                preset.name(),
                runs.iter()
                    .map(|r| format!("{:.3}", r.ours))
                    .collect::<Vec<_>>()
                    .join(", "),
            ));
            if integration == Integration::Truncated {
                truncated_at_1pct.push(runs.into_iter().nth(2).expect("four levels"));
            }
        }
    }
    let infinite = FogPreset::DENSE
        .iter()
        .map(|&p| run_preset(p, 0.01, Integration::Infinite))
        .collect::<Result<Vec<_>, _>>()?;
    let degradation: Vec<String> = infinite
        .iter()
        .zip(&truncated_at_1pct)
        .map(|(i, t)| format!("{:+.3}", t.ours - i.ours))
        .collect();
    let preserved = truncated_at_1pct.iter().all(|r| r.ours < r.cross);
    ok &= preserved;
    let detail = format!(
        "noise ladder {levels:?} RMSE cm: {}; truncated vs infinite at 1% noise: [{}] cm; \
         truncated ours/cross {}; 5(b) preserved {preserved}",
        lines.join("; "),
        degradation.join(", "),
        ladder(&truncated_at_1pct)
    );
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_8() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = dir.path().join("decay.csv");
    let status = Command::new(env!("CARGO_BIN_EXE_fogtof"))
        .args([
            "decay-curve",
            "--preset",
            "thick",
            "--min",
            "0.1",
            "--max",
            "1.6",
            "--steps",
            "61",
            "--out",
        ])
        .arg(&out)
        .status()
        .map_err(|e| e.to_string())?;
    if !status.success() {
        return Err(format!("decay-curve exited with {status}"));
    }
    let cam = CameraConfig::default();
    let fog = preset_fog(FogPreset::Thick, cam.phi0)
        .map_err(|e| e.to_string())?
        .expect("fog");
    let mut reader = csv::Reader::from_path(&out).map_err(|e| e.to_string())?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| e.to_string())?
        .iter()
        .map(String::from)
        .collect();
    if header
        != [
            "distance_m",
            "intensity_nofog",
            "intensity_fog",
            "intensity_fog_polarizer",
        ]
    {
        return Err(format!("unexpected columns {header:?}"));
    }
    let rows: Vec<[f64; 4]> = reader
        .deserialize()
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for r in &rows {
        let phi = depth_to_phase(r[0], &cam).map_err(|e| e.to_string())?;
        worst = worst.max(rel(r[2] / r[1], (-fog.sigma_i() * phi).exp()));
        worst = worst.max(rel(r[3] / r[2], (-fog.sigma_p() * phi).exp()));
    }
    let mut pairs = 0;
    for a in &rows {
        if let Some(b) = rows.iter().find(|b| (b[0] - 2.0 * a[0]).abs() < 1e-9) {
            worst = worst.max(rel(b[1] / a[1], 0.25 * (2.0 * a[0] / b[0]).powi(2)));
            pairs += 1;
        }
    }
    let detail = format!(
        "{} rows, {pairs} doubled-distance pairs, max identity error {worst:.1e} (limit 1e-12)",
        rows.len()
    );
    if worst <= 1e-12 && pairs > 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        (
            1,
            "closed-form mean phases vs quadrature",
            Some(Duration::from_secs(10)),
            criterion_1,
        ),
        (2, "exponential integral", Some(Duration::from_secs(1)), criterion_2),
        (3, "phasor codec invariants", Some(Duration::from_secs(5)), criterion_3),
        (4, "end-to-end exactness", Some(Duration::from_secs(30)), criterion_4),
        (5, "density ladder trend", Some(Duration::from_secs(120)), criterion_5),
        (6, "calibration recovery", Some(Duration::from_secs(20)), criterion_6),
        (7, "robustness to model mismatch and noise", None, criterion_7),
        (8, "decay-curve identities", None, criterion_8),
    ];
    let mut failed = 0;
    for (n, title, limit, check) in criteria {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let in_time = limit.is_none_or(|l| elapsed <= l);
        let budget = limit.map_or(String::new(), |l| format!(", limit {} s", l.as_secs()));
        let (pass, detail) = match result {
            Ok(d) if in_time => (true, d),
            Ok(d) => (false, format!("{d}; too slow")),
            Err(d) => (false, d),
        };
        failed += usize::from(!pass);
        println!(
            "criterion {n} {}: {title}: {detail} [{:.2} s{budget}]",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
    if failed == 0 {
        println!("acceptance: all 8 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} of 8 criteria failed");
        ExitCode::FAILURE
    }
}
