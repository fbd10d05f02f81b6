//! Regularized incomplete gamma function for half-integer shape parameters.
//!
//! Series expansion when `x < a + 1`, modified Lentz continued fraction otherwise;
//! both iterate to relative `1e-15`.

use crate::error::{Error, Result};

const MAX_ITER: usize = 10_000;
const REL_EPS: f64 = 1e-15;

/// `ln Γ(k/2)` for a positive integer `k`, by exact recursion from `Γ(1) = 1` or `Γ(1/2) = √π`.
pub fn ln_gamma_half(k: u32) -> f64 {
    assert!(k > 0, "ln_gamma_half needs k >= 1");
    if k.is_multiple_of(2) {
        (1..k / 2).map(|i| (i as f64).ln()).sum()
    } else {
        let base = 0.5 * std::f64::consts::PI.ln();
        base + (0..k / 2).map(|i| (i as f64 + 0.5).ln()).sum::<f64>()
    }
}

/// Returns `(P(a, x), Q(a, x))` with `a = k/2`.
pub fn gamma_pq_half(k: u32, x: f64) -> Result<(f64, f64)> {
    if k == 0 {
        return Err(Error::Domain("shape must be positive".into()));
    }
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("incomplete gamma needs x >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok((0.0, 1.0));
    }
    if x.is_infinite() {
        return Ok((1.0, 0.0));
    }
    let a = k as f64 / 2.0;
    let log_prefactor = -x + a * x.ln() - ln_gamma_half(k);
    if x < a + 1.0 {
        let p = series(a, x, log_prefactor)?;
        Ok((p, 1.0 - p))
    } else {
        let q = continued_fraction(a, x, log_prefactor)?;
        Ok((1.0 - q, q))
    }
}

fn series(a: f64, x: f64, log_prefactor: f64) -> Result<f64> {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * REL_EPS {
            return Ok(sum * log_prefactor.exp());
        }
    }
    Err(Error::Convergence(format!("incomplete gamma series a={a}, x={x}")))
}

fn continued_fraction(a: f64, x: f64, log_prefactor: f64) -> Result<f64> {
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < REL_EPS {
            return Ok(log_prefactor.exp() * h);
        }
    }
    Err(Error::Convergence(format!("incomplete gamma continued fraction a={a}, x={x}")))
}
