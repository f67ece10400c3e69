//! Phasor representation of an amplitude-modulated signal and the four-tap codec.
//!
//! A pixel of an iToF sensor correlates the returning light against the
//! emitted modulation at four reference phases labelled 0°, 45°, 90° and 135°.
//! The labels are half of the correlation phase, so the samples follow
//!
//! ```text
//! i_ψ = s − a·cos(φ − 2ψ)
//! ```
//!
//! and decoding recovers amplitude `a`, phase `φ` and offset `s` exactly.
//! Everything here is linear in the taps, so sums and differences of tap sets
//! decode to the complex-plane sum or difference of their phasors.

use std::f64::consts::TAU;
use std::ops::{Add, Sub};

use num_complex::Complex64;

/// Wrap an angle into `[0, 2π)`.
pub fn wrap_phase(phase: f64) -> f64 {
    let w = phase.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Phasor {
    pub amplitude: f64,
    /// Radians, wrapped into `[0, 2π)`.
    pub phase: f64,
    pub offset: f64,
}

impl Phasor {
    pub fn new(amplitude: f64, phase: f64, offset: f64) -> Self {
        Phasor {
            amplitude,
            phase: wrap_phase(phase),
            offset,
        }
    }

    pub const ZERO: Phasor = Phasor {
        amplitude: 0.0,
        phase: 0.0,
        offset: 0.0,
    };

    pub fn from_complex(z: Complex64, offset: f64) -> Self {
        if z.re == 0.0 && z.im == 0.0 {
            return Phasor {
                amplitude: 0.0,
                phase: 0.0,
                offset,
            };
        }
        Phasor::new(z.norm(), z.im.atan2(z.re), offset)
    }

    /// `a·e^{iφ}`; the offset is carried separately by [`phasor_to_complex`].
    pub fn to_complex(&self) -> Complex64 {
        Complex64::from_polar(self.amplitude, self.phase)
    }

    /// Scale amplitude and offset, keeping the phase.
    pub fn scale(&self, k: f64) -> Phasor {
        Phasor {
            amplitude: self.amplitude * k,
            phase: self.phase,
            offset: self.offset * k,
        }
    }

    /// Amplitude-to-offset ratio `a/s`, or `None` when the offset vanishes.
    pub fn ratio(&self) -> Option<f64> {
        (self.offset > 0.0).then(|| self.amplitude / self.offset)
    }
}

impl Add for Phasor {
    type Output = Phasor;

    fn add(self, rhs: Phasor) -> Phasor {
        Phasor::from_complex(self.to_complex() + rhs.to_complex(), self.offset + rhs.offset)
    }
}

impl Sub for Phasor {
    type Output = Phasor;

    fn sub(self, rhs: Phasor) -> Phasor {
        Phasor::from_complex(self.to_complex() - rhs.to_complex(), self.offset - rhs.offset)
    }
}

/// Where a tap set came from. Only difference sets may hold negative samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TapKind {
    #[default]
    Measured,
    Difference,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TapSet {
    pub i0: f64,
    pub i45: f64,
    pub i90: f64,
    pub i135: f64,
    pub kind: TapKind,
}

impl TapSet {
    pub fn new(i0: f64, i45: f64, i90: f64, i135: f64) -> Self {
        TapSet {
            i0,
            i45,
            i90,
            i135,
            kind: TapKind::Measured,
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.i0, self.i45, self.i90, self.i135]
    }

    pub fn from_array(v: [f64; 4], kind: TapKind) -> Self {
        TapSet {
            i0: v[0],
            i45: v[1],
            i90: v[2],
            i135: v[3],
            kind,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> TapSet {
        let [a, b, c, d] = self.as_array();
        TapSet::from_array([f(a), f(b), f(c), f(d)], self.kind)
    }

    pub fn decode(&self) -> Decoded {
        decode_taps(self)
    }
}

impl Add for TapSet {
    type Output = TapSet;

    fn add(self, rhs: TapSet) -> TapSet {
        let kind = if self.kind == TapKind::Difference || rhs.kind == TapKind::Difference {
            TapKind::Difference
        } else {
            TapKind::Measured
        };
        TapSet::from_array(
            [
                self.i0 + rhs.i0,
                self.i45 + rhs.i45,
                self.i90 + rhs.i90,
                self.i135 + rhs.i135,
            ],
            kind,
        )
    }
}

/// Result of decoding a tap set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decoded {
    pub phasor: Phasor,
    /// Both quadrature differences were exactly zero: amplitude is 0 and the
    /// phase (reported as 0) carries no information.
    pub degenerate: bool,
}

pub fn decode_taps(taps: &TapSet) -> Decoded {
    let quad = taps.i135 - taps.i45;
    let in_phase = taps.i90 - taps.i0;
    let offset = (taps.i0 + taps.i45 + taps.i90 + taps.i135) / 4.0;
    if quad == 0.0 && in_phase == 0.0 {
        return Decoded {
            phasor: Phasor {
                amplitude: 0.0,
                phase: 0.0,
                offset,
            },
            degenerate: true,
        };
    }
    Decoded {
        phasor: Phasor {
            amplitude: 0.5 * quad.hypot(in_phase),
            phase: wrap_phase(quad.atan2(in_phase)),
            offset,
        },
        degenerate: false,
    }
}

pub fn encode_taps(p: &Phasor) -> TapSet {
    let (sin, cos) = p.phase.sin_cos();
    let (ac, as_) = (p.amplitude * cos, p.amplitude * sin);
    TapSet::new(p.offset - ac, p.offset - as_, p.offset + ac, p.offset + as_)
}

pub fn tap_subtract(x: &TapSet, y: &TapSet) -> TapSet {
    TapSet::from_array(
        [x.i0 - y.i0, x.i45 - y.i45, x.i90 - y.i90, x.i135 - y.i135],
        TapKind::Difference,
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmbientCorrected {
    pub taps: TapSet,
    /// At least one tap fell below `-tolerance` and was clamped to zero.
    pub clamped: bool,
}

/// Remove a per-pixel ambient level from every tap. Samples that go negative by
/// more than `tolerance` are clamped to zero and reported; smaller excursions
/// are left alone so that zero-mean noise is not rectified.
pub fn subtract_ambient(taps: &TapSet, ambient: f64, tolerance: f64) -> AmbientCorrected {
    let mut clamped = false;
    let mut out = taps.as_array();
    for v in out.iter_mut() {
        *v -= ambient;
        if *v < -tolerance {
            clamped = true;
            *v = 0.0;
        }
    }
    AmbientCorrected {
        taps: TapSet::from_array(out, taps.kind),
        clamped,
    }
}

/// `a·e^{iφ}` together with the offset.
pub fn phasor_to_complex(p: &Phasor) -> (Complex64, f64) {
    (p.to_complex(), p.offset)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_2, PI};

    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    use super::*;

    fn taps(a: f64, b: f64, c: f64, d: f64) -> TapSet {
        TapSet::new(a, b, c, d)
    }

    #[test]
    fn constant_signal_is_degenerate() {
        let d = decode_taps(&taps(2.0, 2.0, 2.0, 2.0));
        assert!(d.degenerate);
        assert_eq!(d.phasor.amplitude, 0.0);
        assert_eq!(d.phasor.phase, 0.0);
        assert_eq!(d.phasor.offset, 2.0);
    }

    #[test]
    fn decode_hand_example() {
        let d = decode_taps(&taps(2.0, 1.0, 2.0, 3.0));
        assert!(!d.degenerate);
        assert_abs_diff_eq!(d.phasor.amplitude, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d.phasor.phase, FRAC_PI_2, epsilon = 1e-15);
        assert_abs_diff_eq!(d.phasor.offset, 2.0, epsilon = 1e-15);
    }

    #[test]
    fn encode_examples() {
        let t = encode_taps(&Phasor::new(1.0, FRAC_PI_2, 2.0));
        for (got, want) in t.as_array().iter().zip([2.0, 1.0, 2.0, 3.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-15);
        }
        let t = encode_taps(&Phasor::new(0.0, 4.2, 5.0));
        assert_eq!(t.as_array(), [5.0; 4]);
        let t = encode_taps(&Phasor::new(1.0, 0.0, 2.0));
        assert_eq!(t.as_array(), [1.0, 2.0, 3.0, 2.0]);
    }

    #[test]
    fn round_trip_example() {
        let p = decode_taps(&encode_taps(&Phasor::new(0.7, 1.3, 2.0))).phasor;
        assert_abs_diff_eq!(p.amplitude, 0.7, epsilon = 1e-12);
        assert_abs_diff_eq!(p.phase, 1.3, epsilon = 1e-12);
        assert_abs_diff_eq!(p.offset, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn subtraction_examples() {
        let d = tap_subtract(&taps(4.0, 3.0, 4.0, 5.0), &taps(2.0, 1.0, 2.0, 3.0));
        assert_eq!(d.as_array(), [2.0; 4]);
        assert_eq!(d.kind, TapKind::Difference);
        assert_eq!(decode_taps(&d).phasor.amplitude, 0.0);

        let x = taps(1.5, -0.25, 3.0, 7.0);
        assert_eq!(tap_subtract(&x, &x).as_array(), [0.0; 4]);
    }

    #[test]
    fn ambient_examples() {
        let r = subtract_ambient(&taps(5.0, 5.0, 5.0, 5.0), 3.0, 1e-9);
        assert_eq!(r.taps.as_array(), [2.0; 4]);
        assert!(!r.clamped);

        let x = taps(2.0, 1.0, 2.0, 3.0);
        assert_eq!(subtract_ambient(&x, 0.0, 1e-9).taps, x);

        let r = subtract_ambient(&x, 1.0, 1e-9);
        assert_eq!(r.taps.as_array(), [1.0, 0.0, 1.0, 2.0]);
        let before = decode_taps(&x).phasor;
        let after = decode_taps(&r.taps).phasor;
        assert_abs_diff_eq!(after.amplitude, before.amplitude, epsilon = 1e-15);
        assert_abs_diff_eq!(after.phase, before.phase, epsilon = 1e-15);
        assert_abs_diff_eq!(after.offset, before.offset - 1.0, epsilon = 1e-15);
    }

    #[test]
    fn ambient_clamps_beyond_tolerance() {
        let r = subtract_ambient(&taps(1.0, 0.5, 1.0, 1.5), 1.0, 0.1);
        assert!(r.clamped);
        assert_eq!(r.taps.i45, 0.0);
        let r = subtract_ambient(&taps(1.0, 0.95, 1.0, 1.05), 1.0, 0.1);
        assert!(!r.clamped);
        assert_abs_diff_eq!(r.taps.i45, -0.05, epsilon = 1e-15);
    }

    #[test]
    fn complex_examples() {
        let (z, s) = phasor_to_complex(&Phasor::new(1.0, 0.0, 2.0));
        assert_eq!((z.re, z.im, s), (1.0, 0.0, 2.0));
        let (z, _) = phasor_to_complex(&Phasor::new(1.0, FRAC_PI_2, 0.0));
        assert_abs_diff_eq!(z.re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(z.im, 1.0, epsilon = 1e-15);
        let (z, _) = phasor_to_complex(&Phasor::new(2.0, PI, 1.0));
        assert_abs_diff_eq!(z.re, -2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(z.im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn wrap_phase_bounds() {
        assert_eq!(wrap_phase(-1e-300), 0.0);
        assert_abs_diff_eq!(wrap_phase(-FRAC_PI_2), 1.5 * PI, epsilon = 1e-15);
        assert_abs_diff_eq!(wrap_phase(TAU + 0.25), 0.25, epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn offset_shift_changes_only_offset(
            a in 0.0..10.0f64, phi in 0.0..TAU, s in 10.0..20.0f64, c in -5.0..5.0f64
        ) {
            let t = encode_taps(&Phasor::new(a, phi, s));
            let before = decode_taps(&t).phasor;
            let after = decode_taps(&t.map(|v| v + c)).phasor;
            prop_assert!((after.amplitude - before.amplitude).abs() < 1e-12);
            prop_assert!((after.to_complex() - before.to_complex()).norm() < 1e-12);
            prop_assert!((after.offset - before.offset - c).abs() < 1e-12);
        }

        #[test]
        fn decoded_phase_is_wrapped(v in prop::array::uniform4(-100.0..100.0f64)) {
            let p = decode_taps(&TapSet::from_array(v, TapKind::Difference)).phasor;
            prop_assert!((0.0..TAU).contains(&p.phase));
        }
    }
}
