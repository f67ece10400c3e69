//! Globally adaptive Gauss–Kronrod (7/15) quadrature over finite intervals.
//!
//! The integrator works for real and complex integrands. Subintervals are kept
//! in a max-heap keyed on their error estimate; the worst one is bisected until
//! the summed error meets `max(abs_tol, rel_tol·|I|)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Fixed upper limit for semi-infinite integrals. `None` derives it from
    /// the decay rate of the integrand.
    pub tail_cutoff: Option<f64>,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            tail_cutoff: None,
            max_subdivisions: 4000,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::Config(format!(
                "quadrature tolerances must be positive (rel {}, abs {})",
                self.rel_tol, self.abs_tol
            )));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::Config("max_subdivisions must be positive".into()));
        }
        Ok(())
    }

    /// Upper limit for an integrand starting at `lower` that decays like
    /// `e^{-rate·φ}`: `lower + 40/rate`, and never below 40 rad.
    pub fn cutoff_for(&self, lower: f64, rate: f64) -> f64 {
        match self.tail_cutoff {
            Some(c) => c,
            None => (lower + 40.0 / rate).max(40.0),
        }
    }
}

/// Value types the integrator can accumulate.
pub trait QuadValue: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> + Send + Sync {
    fn zero() -> Self;
    fn magnitude(self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }

    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }

    fn magnitude(self) -> f64 {
        self.norm()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult<T> {
    pub value: T,
    pub abs_error: f64,
    pub intervals: usize,
}

// Kronrod nodes (positive half, descending), 15-point rule.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for the odd-indexed Kronrod nodes plus the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct Segment<T> {
    lower: f64,
    upper: f64,
    value: T,
    error: f64,
}

impl<T> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl<T> Eq for Segment<T> {}

impl<T> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T> Ord for Segment<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gauss_kronrod<T: QuadValue>(f: &impl Fn(f64) -> T, lower: f64, upper: f64) -> (T, f64, f64) {
    let centre = 0.5 * (lower + upper);
    let half = 0.5 * (upper - lower);
    let fc = f(centre);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs_sum = fc.magnitude() * WGK[7];
    for (j, &x) in XGK.iter().enumerate().take(7) {
        let dx = half * x;
        let f1 = f(centre - dx);
        let f2 = f(centre + dx);
        let pair = f1 + f2;
        kronrod = kronrod + pair * WGK[j];
        abs_sum += (f1.magnitude() + f2.magnitude()) * WGK[j];
        if j % 2 == 1 {
            gauss = gauss + pair * WG[j / 2];
        }
    }
    let err = (kronrod - gauss).magnitude() * half.abs();
    let abs_integral = abs_sum * half.abs();
    // floor the estimate at the roundoff level of the segment
    let err = err.max(50.0 * f64::EPSILON * abs_integral);
    (kronrod * half, err, abs_integral)
}

/// Integrate `f` over `[lower, upper]`.
pub fn integrate<T, F>(f: F, lower: f64, upper: f64, spec: &QuadratureSpec) -> Result<QuadResult<T>>
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    integrate_with_breaks(f, &[lower, upper], spec)
}

/// Integrate over consecutive segments defined by an increasing list of
/// breakpoints. Breakpoints seed the adaptive refinement; they are useful at
/// known features such as a steep lower end.
pub fn integrate_with_breaks<T, F>(f: F, breaks: &[f64], spec: &QuadratureSpec) -> Result<QuadResult<T>>
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    spec.validate()?;
    if breaks.len() < 2 || breaks.windows(2).any(|w| !(w[1] > w[0]) || !w[0].is_finite()) {
        return Err(Error::Domain(format!(
            "quadrature breakpoints must be finite and increasing: {breaks:?}"
        )));
    }
    let mut heap = BinaryHeap::new();
    let mut total = T::zero();
    let mut total_err = 0.0;
    for w in breaks.windows(2) {
        let (value, error, _) = gauss_kronrod(&f, w[0], w[1]);
        total = total + value;
        total_err += error;
        heap.push(Segment {
            lower: w[0],
            upper: w[1],
            value,
            error,
        });
    }
    loop {
        let target = spec.abs_tol.max(spec.rel_tol * total.magnitude());
        if total_err <= target {
            break;
        }
        if heap.len() >= spec.max_subdivisions {
            return Err(Error::Quadrature {
                lower: breaks[0],
                upper: breaks[breaks.len() - 1],
                estimate: total.magnitude(),
                abs_error: total_err,
                intervals: heap.len(),
            });
        }
        let worst = heap.pop().expect("heap holds at least one segment");
        let mid = 0.5 * (worst.lower + worst.upper);
        if mid <= worst.lower || mid >= worst.upper {
            // interval cannot be split further in floating point
            heap.push(worst);
            return Err(Error::Quadrature {
                lower: breaks[0],
                upper: breaks[breaks.len() - 1],
                estimate: total.magnitude(),
                abs_error: total_err,
                intervals: heap.len(),
            });
        }
        let (v1, e1, _) = gauss_kronrod(&f, worst.lower, mid);
        let (v2, e2, _) = gauss_kronrod(&f, mid, worst.upper);
        total = total - worst.value + v1 + v2;
        total_err += e1 + e2 - worst.error;
        heap.push(Segment {
            lower: worst.lower,
            upper: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            lower: mid,
            upper: worst.upper,
            value: v2,
            error: e2,
        });
    }
    // re-sum to shed the drift of incremental updates
    let mut value = T::zero();
    let mut abs_error = 0.0;
    for s in heap.iter() {
        value = value + s.value;
        abs_error += s.error;
    }
    Ok(QuadResult {
        value,
        abs_error,
        intervals: heap.len(),
    })
}

/// Geometric breakpoints `lower, 2·lower, 4·lower, …` up to `upper`, for
/// integrands with a steep power-law lower end.
pub fn geometric_breaks(lower: f64, upper: f64) -> Vec<f64> {
    let mut breaks = vec![lower];
    let mut x = 2.0 * lower;
    while x < upper && breaks.len() < 64 {
        breaks.push(x);
        x *= 2.0;
    }
    breaks.push(upper);
    breaks
}
