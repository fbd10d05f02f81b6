//! The χ²_(p) law: density, CDF via the regularized incomplete gamma function,
//! and expectations of test functions by adaptive quadrature.

use serde::Serialize;

use crate::error::{domain, Result};
use crate::quad;
use crate::special::{gamma_pq_half, ln_gamma_half};
use crate::testfn::{Growth, TestFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ChiSquareLaw {
    p: u32,
}

impl ChiSquareLaw {
    pub fn new(p: u32) -> Result<Self> {
        if p < 1 {
            return Err(domain("chi-square degrees of freedom must be >= 1"));
        }
        Ok(Self { p })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    /// `P(Y_p ≤ z)`.
    pub fn cdf(&self, z: f64) -> Result<f64> {
        if !(z >= 0.0) {
            return Err(domain(format!("chi-square CDF needs z >= 0, got {z}")));
        }
        Ok(gamma_pq_half(self.p, z / 2.0)?.0)
    }

    /// `P(Y_p > z)`, accurate in the far tail.
    pub fn sf(&self, z: f64) -> Result<f64> {
        if !(z >= 0.0) {
            return Err(domain(format!("chi-square survival needs z >= 0, got {z}")));
        }
        Ok(gamma_pq_half(self.p, z / 2.0)?.1)
    }

    pub fn ln_density(&self, t: f64) -> f64 {
        let half = self.p as f64 / 2.0;
        (half - 1.0) * t.ln() - t / 2.0 - half * std::f64::consts::LN_2 - ln_gamma_half(self.p)
    }

    pub fn density(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        if t == 0.0 {
            return match self.p {
                1 => f64::INFINITY,
                2 => 0.5,
                _ => 0.0,
            };
        }
        self.ln_density(t).exp()
    }

    /// `(E[Y], E[Y²]) = (p, p² + 2p)`.
    pub fn mean_moments(&self) -> (f64, f64) {
        let p = self.p as f64;
        (p, p * p + 2.0 * p)
    }

    /// `E[Y^k] = p(p+2)…(p+2k−2)`.
    pub fn raw_moment(&self, k: u32) -> f64 {
        (0..k).map(|i| (self.p + 2 * i) as f64).product()
    }

    /// Upper bound on `∫_T^∞ |h| dχ²_p` from the growth envelope.
    fn tail_bound(&self, growth: Growth, t: f64) -> Result<f64> {
        match growth {
            Growth::Bounded(b) => Ok(b * self.sf(t)?),
            Growth::Polynomial { coef, degree } => {
                // (1+x)^d ≤ 2^d (1 + x^d) and E[Y^d; Y > T] = E[Y^d] P(Y_{p+2d} > T).
                let shifted = ChiSquareLaw::new(self.p + 2 * degree)?;
                let scale = coef * 2f64.powi(degree as i32);
                Ok(scale * (self.sf(t)? + self.raw_moment(degree) * shifted.sf(t)?))
            }
        }
    }

    /// `E[h(Y_p)]` to absolute tolerance `tol`.
    pub fn expectation<H: TestFunction + ?Sized>(&self, h: &H, tol: f64) -> Result<f64> {
        if !(tol > 0.0) {
            return Err(domain("tolerance must be positive"));
        }
        let p = self.p as f64;
        let mut upper = p + 10.0 * (2.0 * p).sqrt() + 10.0;
        while self.tail_bound(h.growth(), upper)? >= tol / 2.0 {
            upper *= 1.5;
            if upper > 1e6 {
                return Err(crate::error::Error::Convergence(
                    "could not find a truncation point for the chi-square tail".into(),
                ));
            }
        }
        let split = upper.min(1.0);
        let half = p / 2.0;
        let log_norm = half * std::f64::consts::LN_2 + ln_gamma_half(self.p);
        // t = u² on [0, split] removes the t^{p/2−1} endpoint singularity.
        let near = quad::integrate(
            |u: f64| {
                if u == 0.0 {
                    return if self.p == 1 { 2.0 * h.eval(0.0) * (-log_norm).exp() } else { 0.0 };
                }
                let t = u * u;
                let w = 2.0 * ((p - 1.0) * u.ln() - t / 2.0 - log_norm).exp();
                w * h.eval(t)
            },
            0.0,
            split.sqrt(),
            tol / 4.0,
            1,
        )?;
        let pieces = ((upper - split) / 2.0).ceil().max(1.0) as usize;
        let far = quad::integrate(|t| self.density(t) * h.eval(t), split, upper, tol / 4.0, pieces)?;
        Ok(near.value + far.value)
    }
}
