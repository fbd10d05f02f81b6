//! Test functions `h : ℝ⁺ → ℝ` together with the sup-norms of their
//! derivatives, which is everything the error bounds consume.

use serde::Serialize;

use crate::bounds::SmoothNorms;
use crate::error::{domain, Result};

/// How fast `|h|` can grow; used to truncate chi-square expectations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Growth {
    /// `|h(x)| ≤ bound` for all `x ≥ 0`.
    Bounded(f64),
    /// `|h(x)| ≤ coef · (1 + x)^degree`.
    Polynomial { coef: f64, degree: u32 },
}

/// Sup-norms over `ℝ⁺` of `h, h′, h″, h‴, h⁽⁴⁾`; `None` means unbounded or unknown.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivativeNorms(pub [Option<f64>; 5]);

impl DerivativeNorms {
    pub fn get(&self, k: usize) -> Option<f64> {
        self.0.get(k).copied().flatten()
    }

    /// The `(‖h′‖, ‖h″‖, ‖h‴‖)` triple used by the smooth bounds.
    pub fn smooth(&self) -> SmoothNorms {
        SmoothNorms::new(
            self.get(1).unwrap_or(f64::INFINITY),
            self.get(2).unwrap_or(f64::INFINITY),
            self.get(3).unwrap_or(f64::INFINITY),
        )
    }
}

pub trait TestFunction: Sync {
    fn eval(&self, x: f64) -> f64;
    fn norms(&self) -> DerivativeNorms;
    fn growth(&self) -> Growth;
    fn label(&self) -> String;

    /// `E[h(Y_p)]` in closed form, when one is known.
    fn chisq_closed_form(&self, _p: u32) -> Option<f64> {
        None
    }
}

/// Real part of the chi-square characteristic function, `Re[(1 − 2it)^{−p/2}]`.
pub fn chisq_char_re(p: u32, t: f64) -> f64 {
    let (modulus, arg) = chisq_char_polar(p, t);
    modulus * arg.cos()
}

/// Imaginary part of `(1 − 2it)^{−p/2}`.
pub fn chisq_char_im(p: u32, t: f64) -> f64 {
    let (modulus, arg) = chisq_char_polar(p, t);
    modulus * arg.sin()
}

fn chisq_char_polar(p: u32, t: f64) -> (f64, f64) {
    let half = p as f64 / 2.0;
    let modulus = (1.0 + 4.0 * t * t).powf(-half / 2.0);
    // arg(1 − 2it) = −atan(2t); raising to −p/2 negates and scales it.
    let arg = half * (2.0 * t).atan();
    (modulus, arg)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cosine {
    pub t: f64,
}

impl TestFunction for Cosine {
    fn eval(&self, x: f64) -> f64 {
        (self.t * x).cos()
    }
    fn norms(&self) -> DerivativeNorms {
        let t = self.t.abs();
        DerivativeNorms([Some(1.0), Some(t), Some(t * t), Some(t.powi(3)), Some(t.powi(4))])
    }
    fn growth(&self) -> Growth {
        Growth::Bounded(1.0)
    }
    fn label(&self) -> String {
        format!("cos({}x)", self.t)
    }
    fn chisq_closed_form(&self, p: u32) -> Option<f64> {
        Some(chisq_char_re(p, self.t))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sine {
    pub t: f64,
}

impl TestFunction for Sine {
    fn eval(&self, x: f64) -> f64 {
        (self.t * x).sin()
    }
    fn norms(&self) -> DerivativeNorms {
        Cosine { t: self.t }.norms()
    }
    fn growth(&self) -> Growth {
        Growth::Bounded(1.0)
    }
    fn label(&self) -> String {
        format!("sin({}x)", self.t)
    }
    fn chisq_closed_form(&self, p: u32) -> Option<f64> {
        Some(chisq_char_im(p, self.t))
    }
}

/// `h(x) = x^k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Power {
    pub k: u32,
}

impl TestFunction for Power {
    fn eval(&self, x: f64) -> f64 {
        x.powi(self.k as i32)
    }
    fn norms(&self) -> DerivativeNorms {
        // The j-th derivative is bounded on ℝ⁺ only when it is constant (j = k) or zero (j > k).
        let mut out = [None; 5];
        for (j, slot) in out.iter_mut().enumerate() {
            let j = j as u32;
            if j == self.k {
                *slot = Some((1..=self.k).product::<u32>() as f64);
            } else if j > self.k {
                *slot = Some(0.0);
            }
        }
        DerivativeNorms(out)
    }
    fn growth(&self) -> Growth {
        Growth::Polynomial { coef: 1.0, degree: self.k }
    }
    fn label(&self) -> String {
        match self.k {
            1 => "x".into(),
            k => format!("x^{k}"),
        }
    }
    fn chisq_closed_form(&self, p: u32) -> Option<f64> {
        Some((0..self.k).map(|i| (p + 2 * i) as f64).product())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Constant {
    pub c: f64,
}

impl TestFunction for Constant {
    fn eval(&self, _x: f64) -> f64 {
        self.c
    }
    fn norms(&self) -> DerivativeNorms {
        DerivativeNorms([Some(self.c.abs()), Some(0.0), Some(0.0), Some(0.0), Some(0.0)])
    }
    fn growth(&self) -> Growth {
        Growth::Bounded(self.c.abs())
    }
    fn label(&self) -> String {
        format!("{}", self.c)
    }
    fn chisq_closed_form(&self, _p: u32) -> Option<f64> {
        Some(self.c)
    }
}

/// `h + c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shifted<H> {
    pub inner: H,
    pub c: f64,
}

impl<H: TestFunction> TestFunction for Shifted<H> {
    fn eval(&self, x: f64) -> f64 {
        self.inner.eval(x) + self.c
    }
    fn norms(&self) -> DerivativeNorms {
        let mut n = self.inner.norms();
        n.0[0] = n.0[0].map(|v| v + self.c.abs());
        n
    }
    fn growth(&self) -> Growth {
        match self.inner.growth() {
            Growth::Bounded(b) => Growth::Bounded(b + self.c.abs()),
            Growth::Polynomial { coef, degree } => Growth::Polynomial { coef: coef + self.c.abs(), degree },
        }
    }
    fn label(&self) -> String {
        format!("{} + {}", self.inner.label(), self.c)
    }
    fn chisq_closed_form(&self, p: u32) -> Option<f64> {
        self.inner.chisq_closed_form(p).map(|v| v + self.c)
    }
}

/// Closure-backed test function with caller-supplied norms and growth.
pub struct FnTest<F> {
    pub f: F,
    pub norms: DerivativeNorms,
    pub growth: Growth,
    pub label: String,
}

impl<F: Fn(f64) -> f64 + Sync> TestFunction for FnTest<F> {
    fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }
    fn norms(&self) -> DerivativeNorms {
        self.norms
    }
    fn growth(&self) -> Growth {
        self.growth
    }
    fn label(&self) -> String {
        self.label.clone()
    }
}

/// The five-piece cubic step `g` used to smooth the indicator of `(−∞, z]`:
/// 1 left of −1, 0 right of 1, C² at the knots ±1, ±1/2.
pub fn smooth_step(x: f64) -> f64 {
    if x <= -1.0 {
        1.0
    } else if x <= -0.5 {
        1.0 - 2.0 / 3.0 * (x + 1.0).powi(3)
    } else if x <= 0.5 {
        2.0 / 3.0 * x.powi(3) - x + 0.5
    } else if x <= 1.0 {
        2.0 / 3.0 * (1.0 - x).powi(3)
    } else {
        0.0
    }
}

/// First derivative of [`smooth_step`].
pub fn smooth_step_d1(x: f64) -> f64 {
    if x <= -1.0 || x > 1.0 {
        0.0
    } else if x <= -0.5 {
        -2.0 * (x + 1.0).powi(2)
    } else if x <= 0.5 {
        2.0 * x * x - 1.0
    } else {
        -2.0 * (1.0 - x).powi(2)
    }
}

/// Second derivative of [`smooth_step`].
pub fn smooth_step_d2(x: f64) -> f64 {
    if x <= -1.0 || x > 1.0 {
        0.0
    } else if x <= -0.5 {
        -4.0 * (x + 1.0)
    } else if x <= 0.5 {
        4.0 * x
    } else {
        4.0 * (1.0 - x)
    }
}

/// `h_{α,z}(x) = g(1 + 2(x − z)/α)`: equal to 1 for `x ≤ z − α`, 0 for `x ≥ z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmoothingFunction {
    pub alpha: f64,
    pub z: f64,
}

pub fn smoothing_function(alpha: f64, z: f64) -> Result<SmoothingFunction> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(domain(format!("smoothing width must be positive, got {alpha}")));
    }
    if !(z >= 0.0) {
        return Err(domain(format!("threshold must be nonnegative, got {z}")));
    }
    Ok(SmoothingFunction { alpha, z })
}

impl SmoothingFunction {
    fn arg(&self, x: f64) -> f64 {
        1.0 + 2.0 * (x - self.z) / self.alpha
    }

    pub fn d1(&self, x: f64) -> f64 {
        smooth_step_d1(self.arg(x)) * 2.0 / self.alpha
    }

    pub fn d2(&self, x: f64) -> f64 {
        smooth_step_d2(self.arg(x)) * 4.0 / (self.alpha * self.alpha)
    }
}

impl TestFunction for SmoothingFunction {
    fn eval(&self, x: f64) -> f64 {
        smooth_step(self.arg(x))
    }
    fn norms(&self) -> DerivativeNorms {
        let a = self.alpha;
        DerivativeNorms([Some(1.0), Some(2.0 / a), Some(8.0 / (a * a)), Some(32.0 / a.powi(3)), None])
    }
    fn growth(&self) -> Growth {
        Growth::Bounded(1.0)
    }
    fn label(&self) -> String {
        format!("h_(alpha={},z={})", self.alpha, self.z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_step_is_c2_at_knots() {
        for &k in &[-1.0, -0.5, 0.5, 1.0] {
            let eps = 1e-9;
            for f in [smooth_step, smooth_step_d1, smooth_step_d2] {
                let left = f(k);
                let right = f(k + f64::EPSILON * 4.0);
                assert!((left - right).abs() < 1e-12, "jump at {k}");
                assert!((f(k - eps) - f(k + eps)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn smooth_step_derivative_norms() {
        let grid: Vec<f64> = (0..=24_000).map(|i| -1.2 + 2.4 * i as f64 / 24_000.0).collect();
        let d1 = grid.iter().map(|&x| smooth_step_d1(x).abs()).fold(0.0, f64::max);
        let d2 = grid.iter().map(|&x| smooth_step_d2(x).abs()).fold(0.0, f64::max);
        assert!((d1 - 1.0).abs() < 1e-12);
        assert!((d2 - 2.0).abs() < 1e-12);
        // Third derivative is ±4 on every piece.
        let h = 1e-4;
        for &x in &[-0.75, -0.2, 0.3, 0.8] {
            let d3 = (smooth_step_d2(x + h) - smooth_step_d2(x - h)) / (2.0 * h);
            assert!((d3.abs() - 4.0).abs() < 1e-8);
        }
    }

    #[test]
    fn smoothing_function_shape() {
        let h = smoothing_function(0.5, 3.0).unwrap();
        assert_eq!(h.eval(2.0), 1.0);
        assert_eq!(h.eval(2.5), 1.0);
        assert_eq!(h.eval(3.0), 0.0);
        assert_eq!(h.eval(7.0), 0.0);
        let xs: Vec<f64> = (0..=4000).map(|i| 2.0 + 2.0 * i as f64 / 4000.0).collect();
        for w in xs.windows(2) {
            assert!(h.eval(w[1]) <= h.eval(w[0]) + 1e-15, "not nonincreasing");
        }
        let n = h.norms();
        assert_eq!(n.get(1), Some(4.0));
        assert_eq!(n.get(2), Some(32.0));
        assert_eq!(n.get(3), Some(256.0));
        let max_d1 = xs.iter().map(|&x| h.d1(x).abs()).fold(0.0, f64::max);
        let max_d2 = xs.iter().map(|&x| h.d2(x).abs()).fold(0.0, f64::max);
        assert!((max_d1 - 4.0).abs() < 1e-9);
        assert!((max_d2 - 32.0).abs() < 1e-9);
        assert!(smoothing_function(0.0, 1.0).is_err());
    }

    #[test]
    fn characteristic_function_closed_form() {
        // (1 − 2i)^{-2} = 1/(−3 − 4i) = (−3 + 4i)/25
        assert!((chisq_char_re(4, 1.0) + 0.12).abs() < 1e-15);
        assert!((chisq_char_im(4, 1.0) - 0.16).abs() < 1e-15);
        assert_eq!(chisq_char_re(3, 0.0), 1.0);
    }

    #[test]
    fn power_norms() {
        let n = Power { k: 1 }.norms();
        assert_eq!(n.0, [None, Some(1.0), Some(0.0), Some(0.0), Some(0.0)]);
        let n = Power { k: 2 }.norms();
        assert_eq!(n.0, [None, None, Some(2.0), Some(0.0), Some(0.0)]);
        assert_eq!(Power { k: 3 }.chisq_closed_form(2), Some(2.0 * 4.0 * 6.0));
    }
}
