//! Numerical solution of the chi-square Stein equation `x f″ + ½(p − x) f′ = h − χ²_p h`,
//! residual checks, derivative bounds, and the link to the multivariate identity for `F_r`.

use std::collections::HashMap;

use serde::Serialize;

use crate::chisq::ChiSquareLaw;
use crate::error::{domain, Error, Result};
use crate::exact::enumerate::fold_configurations;
use crate::exact::joint::kappa;
use crate::exact::law::exact_law;
use crate::exact::rational::to_f64;
use crate::quad;
use crate::ranks::theoretical_covariance;
use crate::report::Report;
use crate::testfn::{Growth, TestFunction};

/// Absolute quadrature tolerance for `f′`; finite differences of `f′` need it this tight.
pub const FPRIME_TOL: f64 = 1e-13;
/// Tolerance of the cached `χ²_p h` when no closed form exists.
pub const CHISQ_TOL: f64 = 1e-10;

/// `f′` for a fixed `(p, h)`, with `χ²_p h` computed once.
pub struct SteinSolution<'a, H: TestFunction + ?Sized> {
    p: u32,
    h: &'a H,
    chisq_h: f64,
    tol: f64,
}

impl<'a, H: TestFunction + ?Sized> SteinSolution<'a, H> {
    pub fn new(p: u32, h: &'a H) -> Result<Self> {
        Self::with_tolerance(p, h, FPRIME_TOL)
    }

    pub fn with_tolerance(p: u32, h: &'a H, tol: f64) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(domain("tolerance must be positive"));
        }
        let law = ChiSquareLaw::new(p)?;
        let chisq_h = match h.chisq_closed_form(p) {
            Some(v) => v,
            None => law.expectation(h, CHISQ_TOL)?,
        };
        Ok(Self { p, h, chisq_h, tol })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn chisq_h(&self) -> f64 {
        self.chisq_h
    }

    fn centered(&self, t: f64) -> f64 {
        self.h.eval(t) - self.chisq_h
    }

    /// `f′(x) = e^{x/2} x^{−p/2} ∫₀ˣ t^{p/2−1} e^{−t/2} [h(t) − χ²_p h] dt`.
    pub fn fprime(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(domain(format!("f' needs finite x, got {x}")));
        }
        let p = self.p as f64;
        if x <= p {
            // t = x w² gives 2 ∫₀¹ w^{p−1} e^{x(1−w²)/2} [h(x w²) − χ²h] dw, free of the endpoint
            // singularity and valid down to x = 0.
            let q = quad::integrate(
                |w| {
                    let w2 = w * w;
                    2.0 * w.powi(self.p as i32 - 1) * (0.5 * x * (1.0 - w2)).exp() * self.centered(x * w2)
                },
                0.0,
                1.0,
                self.tol,
                4,
            )?;
            return Ok(q.value);
        }
        // The full integral vanishes, so f′(x) = −(1/x) ∫₀^∞ (1 + u/x)^{p/2−1} e^{−u/2} [h(x+u) − χ²h] du.
        let expo = (p / 2.0 - 1.0).max(0.0);
        let rate = 0.5 - expo / x;
        let envelope = |u: f64| {
            let g = match self.h.growth() {
                Growth::Bounded(b) => b,
                Growth::Polynomial { coef, degree } => coef * (1.0 + x + u).powi(degree as i32),
            } + self.chisq_h.abs();
            (1.0 + u / x).powf(expo) * (-0.5 * u).exp() * g / x
        };
        let mut upper = (self.tol.recip().ln() + 10.0) / rate;
        while envelope(upper) * 4.0 / rate > self.tol / 10.0 {
            upper *= 1.5;
            if upper > 1e7 {
                return Err(Error::Convergence("tail of f' did not decay".into()));
            }
        }
        let pieces = (upper / 4.0).ceil() as usize;
        let q = quad::integrate(
            |u| (1.0 + u / x).powf(p / 2.0 - 1.0) * (-0.5 * u).exp() * self.centered(x + u),
            0.0,
            upper,
            self.tol * x,
            pieces,
        )?;
        Ok(-q.value / x)
    }

    /// `f⁽ᵏ⁾(x)` for `k ∈ 1..=4`; orders above one are fourth-order central differences of `f′`.
    pub fn derivative(&self, k: usize, x: f64) -> Result<f64> {
        let j = match k {
            1 => return self.fprime(x),
            2..=4 => (k - 1) as i32,
            _ => return Err(domain(format!("derivative order must be in 1..=4, got {k}"))),
        };
        let step = fd_step(j, x);
        let f = |t: f64| self.fprime(t);
        let (m2, m1, p1, p2) = (f(x - 2.0 * step)?, f(x - step)?, f(x + step)?, f(x + 2.0 * step)?);
        Ok(match j {
            1 => (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * step),
            2 => {
                let c = f(x)?;
                (-m2 + 16.0 * m1 - 30.0 * c + 16.0 * p1 - p2) / (12.0 * step * step)
            }
            _ => {
                let (m3, p3) = (f(x - 3.0 * step)?, f(x + 3.0 * step)?);
                (m3 - 8.0 * m2 + 13.0 * m1 - 13.0 * p1 + 8.0 * p2 - p3) / (8.0 * step.powi(3))
            }
        })
    }

    /// `|x f″ + ½(p − x) f′ − (h(x) − χ²_p h)|`.
    pub fn residual(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(domain(format!("residual needs x > 0, got {x}")));
        }
        let f1 = self.fprime(x)?;
        let f2 = self.derivative(2, x)?;
        Ok((x * f2 + 0.5 * (self.p as f64 - x) * f1 - self.centered(x)).abs())
    }
}

/// Step for the `j`-th difference of `f′`, balancing `h⁴` truncation against rounding.
fn fd_step(j: i32, x: f64) -> f64 {
    let step = f64::EPSILON.powf(1.0 / (j as f64 + 4.0)) * x.abs().max(1.0);
    // Keep the stencil inside x > 0 when x is small; f′ is analytic through 0 regardless.
    if x > 0.0 {
        step.min(x / 4.0)
    } else {
        step
    }
}

pub fn solve_fprime<H: TestFunction + ?Sized>(p: u32, h: &H, x: f64, tol: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(domain(format!("f' needs x > 0, got {x}")));
    }
    SteinSolution::with_tolerance(p, h, tol)?.fprime(x)
}

pub fn stein_residual<H: TestFunction + ?Sized>(p: u32, h: &H, x: f64) -> Result<f64> {
    SteinSolution::new(p, h)?.residual(x)
}

/// 200 points on `[0.05, p + 20√p]`: half geometric from 0.05 to `p`, half linear above.
pub fn default_grid(p: u32) -> Vec<f64> {
    let pf = p as f64;
    let top = pf + 20.0 * pf.sqrt();
    let lo: f64 = 0.05;
    let mid = pf.max(1.0);
    let mut grid: Vec<f64> = (0..100).map(|i| lo * (mid / lo).powf(i as f64 / 100.0)).collect();
    grid.extend((0..100).map(|i| mid + (top - mid) * (i as f64 + 1.0) / 100.0));
    grid
}

/// Largest Stein residual over `grid`, checked against `tol`.
pub fn verify_residuals<H: TestFunction + ?Sized>(p: u32, h: &H, grid: &[f64], tol: f64) -> Result<Report> {
    let sol = SteinSolution::new(p, h)?;
    let mut worst: f64 = 0.0;
    let mut at = f64::NAN;
    for &x in grid {
        let res = sol.residual(x)?;
        if res >= worst {
            worst = res;
            at = x;
        }
    }
    let mut rep = Report::new();
    rep.push(
        format!("max Stein residual, h = {}, p = {p}", h.label()),
        p as usize + 1,
        None,
        worst <= tol,
        format!("{worst:.3e} at x={at:.4}"),
        format!("{tol:e}"),
    );
    Ok(rep)
}

/// Caps on `‖f⁽ᵏ⁾‖` from the norms of `h`, each `None` when a needed norm is unavailable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivativeCaps {
    pub by_same_order: Option<f64>,
    pub by_lower_order: Option<f64>,
    pub by_two_lower_orders: Option<f64>,
}

pub fn derivative_caps(p: u32, k: usize, norms: &crate::testfn::DerivativeNorms) -> DerivativeCaps {
    let m = (p as usize + 2 * k - 2) as f64;
    let lead = 2.0 * std::f64::consts::PI.sqrt() + 2f64.sqrt() * (-1f64).exp();
    DerivativeCaps {
        by_same_order: norms.get(k).map(|v| 2.0 / k as f64 * v),
        by_lower_order: norms.get(k - 1).map(|v| (lead / m.sqrt() + 4.0 / m) * v),
        by_two_lower_orders: if k >= 2 {
            norms.get(k - 1).zip(norms.get(k - 2)).map(|(a, b)| 4.0 / m * (3.0 * a + 2.0 * b))
        } else {
            None
        },
    }
}

/// Slack granted to a cap for quadrature and differencing error in the observed maximum.
fn numerical_slack(k: usize) -> f64 {
    match k {
        1 => 1e-9,
        2 => 1e-7,
        _ => 1e-5,
    }
}

/// Largest `|f⁽ᵏ⁾|` over `grid` against each applicable cap. A grid maximum can only confirm
/// a cap, never refute the supremum bound.
pub fn derivative_bound_check<H: TestFunction + ?Sized>(p: u32, h: &H, k: usize, grid: &[f64]) -> Result<Report> {
    if !(1..=4).contains(&k) {
        return Err(domain(format!("derivative order must be in 1..=4, got {k}")));
    }
    let sol = SteinSolution::new(p, h)?;
    let mut observed: f64 = 0.0;
    let mut at = f64::NAN;
    for &x in grid {
        let v = sol.derivative(k, x)?.abs();
        if v > observed || at.is_nan() {
            observed = v;
            at = x;
        }
    }
    let caps = derivative_caps(p, k, &h.norms());
    let mut rep = Report::new();
    let slack = numerical_slack(k);
    let label = h.label();
    for (name, cap) in [
        ("(2/k)|h^(k)|", caps.by_same_order),
        ("(lead/sqrt(p+2k-2) + 4/(p+2k-2))|h^(k-1)|", caps.by_lower_order),
        ("(4/(p+2k-2))(3|h^(k-1)| + 2|h^(k-2)|)", caps.by_two_lower_orders),
    ] {
        let Some(cap) = cap else { continue };
        rep.push(
            format!("grid max |f^({k})| <= {name}, h = {label}, p = {p}"),
            p as usize + 1,
            None,
            observed <= cap + slack,
            format!("{observed:.10} at x={at:.4}"),
            format!("{cap:.10}"),
        );
    }
    Ok(rep)
}

/// Exact enumeration averages of `∇ᵀΣ∇g(S) − Sᵀ∇g(S)` with `g(s) = f(Σs²)/4`, of
/// `F f″(F) + ½(r−1−F) f′(F)`, and of `h(F) − χ²_{r−1} h` agree.
pub fn verify_lemma21<H: TestFunction + ?Sized>(r: usize, n: usize, h: &H) -> Result<Report> {
    if !(2..=4).contains(&r) || !(1..=3).contains(&n) {
        return Err(domain("Stein identity check needs 2 <= r <= 4 and 1 <= n <= 3"));
    }
    let law = exact_law(r, n)?;
    let sol = SteinSolution::new((r - 1) as u32, h)?;
    let kap = to_f64(&kappa(r, n));
    let mut derivs: HashMap<u64, (f64, f64)> = HashMap::new();
    let (mut rhs, mut direct) = (0.0, 0.0);
    for atom in &law.atoms {
        let x = kap * atom.q as f64;
        let f1 = sol.fprime(x)?;
        let f2 = if atom.q == 0 { 0.0 } else { sol.derivative(2, x)? };
        derivs.insert(atom.q, (f1, f2));
        let prob = to_f64(&atom.prob);
        rhs += prob * (x * f2 + 0.5 * (r as f64 - 1.0 - x) * f1);
        direct += prob * (h.eval(x) - sol.chisq_h());
    }
    let sigma = theoretical_covariance(r)?;
    let scale = kap.sqrt();
    let (count, lhs_sum) = fold_configurations(
        r,
        n,
        1,
        || (0u64, 0.0f64),
        |acc, cfg| {
            let s: Vec<f64> = cfg.doubled_sums().iter().map(|&c| scale * c as f64).collect();
            let q: i64 = cfg.doubled_sums().iter().map(|c| c * c).sum();
            let (f1, f2) = derivs[&(q as u64)];
            let qf: f64 = s.iter().map(|v| v * v).sum();
            // ∇g = f′ s/2 and ∇²g = f″ s sᵀ + (f′/2) I.
            let mut quad_form = 0.0;
            let mut trace = 0.0;
            for j in 0..r {
                trace += sigma.get(j, j);
                for u in 0..r {
                    quad_form += s[j] * sigma.get(j, u) * s[u];
                }
            }
            acc.0 += 1;
            acc.1 += f2 * quad_form + 0.5 * f1 * trace - 0.5 * f1 * qf;
        },
        |a, b| (a.0 + b.0, a.1 + b.1),
    )?;
    let lhs = lhs_sum / count as f64;
    let tol = 1e-5;
    let mut rep = Report::new();
    let label = h.label();
    rep.push(
        format!("E[tr(ΣHess g) - S'grad g] = E[F f''(F) + (r-1-F) f'(F)/2], h = {label}"),
        r,
        Some(n),
        (lhs - rhs).abs() <= tol,
        format!("{lhs:.12}"),
        format!("{rhs:.12}"),
    );
    rep.push(
        format!("E[F f''(F) + (r-1-F) f'(F)/2] = E[h(F)] - χ²h, h = {label}"),
        r,
        Some(n),
        (rhs - direct).abs() <= tol,
        format!("{rhs:.12}"),
        format!("{direct:.12}"),
    );
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testfn::{Constant, Cosine, DerivativeNorms, FnTest, Power, Shifted, Sine};

    fn bounded_rational() -> FnTest<fn(f64) -> f64> {
        // x²/(1+x²): a bounded, smooth truncation of x².
        FnTest {
            f: |x| x * x / (1.0 + x * x),
            norms: DerivativeNorms([Some(1.0), None, None, None, None]),
            growth: Growth::Bounded(1.0),
            label: "x^2/(1+x^2)".into(),
        }
    }

    #[test]
    fn identity_and_constant() {
        for p in 1..=8 {
            for &x in &[0.1, 1.0, 3.0, 7.5, 20.0] {
                let v = solve_fprime(p, &Power { k: 1 }, x, 1e-12).unwrap();
                assert!((v + 2.0).abs() < 1e-10, "p={p} x={x}: {v}");
                let c = solve_fprime(p, &Constant { c: 3.5 }, x, 1e-12).unwrap();
                assert!(c.abs() < 1e-12);
            }
        }
        assert!(stein_residual(4, &Power { k: 1 }, 1.0).unwrap() <= 1e-6);
        assert!(solve_fprime(3, &Power { k: 1 }, 0.0, 1e-12).is_err());
    }

    #[test]
    fn residual_examples() {
        let cos = Cosine { t: 1.0 };
        for &x in &[0.5, 2.0, 10.0] {
            let res = stein_residual(3, &cos, x).unwrap();
            assert!(res <= 1e-6, "x={x}: {res}");
        }
        assert!(stein_residual(1, &Cosine { t: 2.0 }, 0.25).unwrap() <= 1e-5);
    }

    #[test]
    fn residual_uniform_on_grid() {
        let funcs: Vec<Box<dyn TestFunction>> = vec![
            Box::new(Cosine { t: 1.0 }),
            Box::new(Sine { t: 0.5 }),
            Box::new(bounded_rational()),
        ];
        for h in &funcs {
            for p in 1..=10 {
                let sol = SteinSolution::new(p, h.as_ref()).unwrap();
                for x in default_grid(p).into_iter().step_by(7) {
                    let res = sol.residual(x).unwrap();
                    assert!(res <= 1e-5, "{} p={p} x={x}: {res}", h.label());
                }
                assert!(verify_residuals(p, h.as_ref(), &[0.5, 3.0], 1e-5).unwrap().all_pass());
            }
        }
    }

    #[test]
    fn shift_invariance() {
        for p in [1, 4, 9] {
            for &x in &[0.3, 5.0, 25.0] {
                let a = solve_fprime(p, &Cosine { t: 1.0 }, x, 1e-12).unwrap();
                let b = solve_fprime(p, &Shifted { inner: Cosine { t: 1.0 }, c: 2.5 }, x, 1e-12).unwrap();
                assert!((a - b).abs() < 1e-9, "p={p} x={x}");
            }
        }
    }

    #[test]
    fn derivative_caps_examples() {
        let rep = derivative_bound_check(3, &Power { k: 1 }, 1, &[0.5, 1.0, 4.0]).unwrap();
        assert!(rep.all_pass());
        assert!(rep.entries[0].lhs.starts_with("2.0000000000") || rep.entries[0].lhs.starts_with("1.9999999999"));
        let rep = derivative_bound_check(4, &Cosine { t: 1.0 }, 2, &(1..=300).map(|i| i as f64 / 10.0).collect::<Vec<_>>())
            .unwrap();
        assert_eq!(rep.entries.len(), 3);
        assert!(rep.all_pass(), "{rep:?}");
        let caps = derivative_caps(20, 3, &Cosine { t: 1.0 }.norms());
        assert!((caps.by_two_lower_orders.unwrap() - 5.0 / 6.0).abs() < 1e-12);
        let rep = derivative_bound_check(20, &Cosine { t: 1.0 }, 3, &default_grid(20)).unwrap();
        assert!(rep.all_pass(), "{rep:?}");
    }

    #[test]
    fn grid_shape() {
        let g = default_grid(9);
        assert_eq!(g.len(), 200);
        assert!((g[0] - 0.05).abs() < 1e-15);
        assert!((g[199] - 69.0).abs() < 1e-9);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn two_path_examples() {
        let rep = verify_lemma21(3, 2, &Constant { c: 1.0 }).unwrap();
        assert!(rep.entries.iter().all(|e| e.lhs.parse::<f64>().unwrap().abs() < 1e-12));
        let rep = verify_lemma21(3, 2, &Power { k: 1 }).unwrap();
        assert!(rep.all_pass());
        assert!(rep.entries[0].lhs.parse::<f64>().unwrap().abs() < 1e-8);
        for (r, n) in [(2, 3), (3, 2), (4, 1)] {
            let rep = verify_lemma21(r, n, &Cosine { t: 1.0 }).unwrap();
            assert!(rep.all_pass(), "{rep:?}");
        }
    }
}
