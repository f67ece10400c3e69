use std::f64::consts::PI;

use proptest::prelude::*;

use fogtof::fit::{fit_sigma_pixel, FitConfig, Optimizer};
use fogtof::phasor::{decode_taps, encode_taps, tap_subtract};
use fogtof::reconstruct::{phase_error, solve_amplitude};
use fogtof::scattering::{
    amp_density_polarized, amp_density_unpolarized, mean_phase_polarized, mean_phase_unpolarized,
};
use fogtof::{FogParams, Phasor};

fn phasor() -> impl Strategy<Value = Phasor> {
    (1e-2..10.0f64, 0.0..2.0 * PI, 0.05..1.0f64).prop_map(|(a, p, r)| Phasor::new(a, p, a / r))
}

proptest! {
    #[test]
    fn codec_round_trip(p in phasor()) {
        let d = decode_taps(&encode_taps(&p)).phasor;
        prop_assert!((d.amplitude - p.amplitude).abs() < 1e-10 * (1.0 + p.offset));
        prop_assert!((d.offset - p.offset).abs() < 1e-10 * (1.0 + p.offset));
        prop_assert!(phase_error(d.phase, p.phase) < 1e-9);
    }

    #[test]
    fn decoding_is_linear(p in phasor(), q in phasor()) {
        let diff = decode_taps(&tap_subtract(&encode_taps(&p), &encode_taps(&q))).phasor;
        let want = p.to_complex() - q.to_complex();
        prop_assert!((diff.to_complex() - want).norm() < 1e-9 * (1.0 + p.offset + q.offset));
        prop_assert!((diff.offset - (p.offset - q.offset)).abs() < 1e-9 * (1.0 + p.offset + q.offset));
    }

    #[test]
    fn polarized_mean_decreases_in_sigma(sigma in 0.1..20.0f64, step in 1.001..2.0f64, phi0 in 0.05..1.0f64) {
        let a = mean_phase_polarized(sigma, phi0).unwrap();
        let b = mean_phase_polarized(sigma * step, phi0).unwrap();
        prop_assert!(b < a);
        prop_assert!(b > phi0);
    }

    #[test]
    fn unpolarized_mean_exceeds_polarized(si in 0.1..5.0f64, sp in 0.1..5.0f64, phi0 in 0.05..1.0f64) {
        let fog = FogParams::new(si, sp, phi0).unwrap();
        prop_assert!(mean_phase_unpolarized(&fog).unwrap() > mean_phase_polarized(si + sp, phi0).unwrap());
    }

    #[test]
    fn densities_split_total_return(si in 0.01..5.0f64, sp in 0.01..5.0f64, phi0 in 0.05..1.0f64, t in 0.0..20.0f64) {
        let fog = FogParams::new(si, sp, phi0).unwrap();
        let phi = phi0 + t;
        let p = amp_density_polarized(phi, &fog).unwrap();
        let u = amp_density_unpolarized(phi, &fog).unwrap();
        let total = (-si * phi).exp() / (phi * phi);
        prop_assert!(((p + u) - total).abs() <= 1e-12 * total);
        prop_assert!((p / (p + u) - (-sp * phi).exp()).abs() < 1e-12);
    }

    #[test]
    fn optimizers_agree(sigma in 0.05..50.0f64, phi0 in 0.05..1.0f64) {
        let phase = mean_phase_polarized(sigma, phi0).unwrap();
        let bis = fit_sigma_pixel(phase, phi0, &FitConfig { optimizer: Optimizer::Bisection, ..FitConfig::default() }).unwrap();
        prop_assert!((bis.sigma - sigma).abs() < 1e-6 * sigma);
        let adam = fit_sigma_pixel(phase, phi0, &FitConfig::default()).unwrap();
        prop_assert!((adam.sigma - sigma).abs() < 1e-4 * sigma, "adam {} vs {}", adam.sigma, sigma);
    }

    #[test]
    fn clear_pixel_needs_no_correction(a in 0.01..5.0f64, phase in 0.0..2.0 * PI, phase_u in 0.2..3.0f64, kr in 0.05..0.7f64) {
        let k0 = 0.71;
        let cross = Phasor::new(a, phase, a / k0);
        let sol = solve_amplitude(&cross, phase_u, kr, k0, 1e-6).unwrap();
        prop_assert!(sol.amplitude.abs() < 1e-9 * a);
    }
}
