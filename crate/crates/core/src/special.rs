//! Exponential integrals `E₁` and `E₂` for positive real arguments.
//!
//! Both are evaluated in exponentially scaled form (`eˣ·Eₙ(x)`) so that the
//! closed-form mean phases can be formed as ratios without underflow for large
//! arguments. Small arguments use the ascending series, large ones the
//! continued fraction evaluated with the modified Lentz method.

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const MAX_TERMS: usize = 500;
const TINY: f64 = 1e-300;

/// `E₁(x) = ∫ₓ^∞ e^{-t}/t dt` for `x > 0`.
pub fn exp_integral_e1(x: f64) -> Result<f64> {
    check_domain(x)?;
    if x <= 1.0 {
        Ok(e1_series(x))
    } else {
        Ok(continued_fraction(1, x) * (-x).exp())
    }
}

/// `eˣ·E₁(x)`, finite for every positive argument.
pub fn exp_integral_e1_scaled(x: f64) -> Result<f64> {
    check_domain(x)?;
    if x <= 1.0 {
        Ok(e1_series(x) * x.exp())
    } else {
        Ok(continued_fraction(1, x))
    }
}

/// `E₂(x) = e^{-x} − x·E₁(x)` for `x > 0`.
pub fn exp_integral_e2(x: f64) -> Result<f64> {
    check_domain(x)?;
    if x <= 1.0 {
        Ok((-x).exp() - x * e1_series(x))
    } else {
        Ok(continued_fraction(2, x) * (-x).exp())
    }
}

/// `eˣ·E₂(x)`.
pub fn exp_integral_e2_scaled(x: f64) -> Result<f64> {
    check_domain(x)?;
    if x <= 1.0 {
        Ok(1.0 - x * e1_series(x) * x.exp())
    } else {
        Ok(continued_fraction(2, x))
    }
}

fn check_domain(x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "exponential integral needs a finite positive argument, got {x}"
        )))
    }
}

fn e1_series(x: f64) -> f64 {
    // E1(x) = -γ - ln x - Σ_{k≥1} (-x)^k / (k·k!)
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 1..MAX_TERMS {
        let kf = k as f64;
        term *= -x / kf;
        let contrib = term / kf;
        sum += contrib;
        if contrib.abs() < sum.abs() * f64::EPSILON * 0.5 {
            break;
        }
    }
    -EULER_GAMMA - x.ln() - sum
}

/// `eˣ·Eₙ(x)` from the continued fraction, valid for `x > 1`.
fn continued_fraction(n: u32, x: f64) -> f64 {
    let nm1 = f64::from(n) - 1.0;
    let mut b = x + f64::from(n);
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_TERMS {
        let fi = i as f64;
        let an = -fi * (nm1 + fi);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let delta = c * d;
        h *= delta;
        if (delta - 1.0).abs() < f64::EPSILON {
            break;
        }
    }
    h
}
