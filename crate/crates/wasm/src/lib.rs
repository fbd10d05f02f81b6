//! Browser bindings for the demo page in `www/`. Each export returns a JSON string; the
//! `*_data` functions behind them are plain Rust and are what the native tests exercise.

use friedman_core::bounds::{bound_report, SmoothNorms};
use friedman_core::chisq::ChiSquareLaw;
use friedman_core::exact::exact_law;
use friedman_core::stein::{derivative_caps, SteinSolution};
use friedman_core::testfn::{Cosine, TestFunction};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest n charted by [`bound_curves`].
pub const MAX_CURVE_N: usize = 100_000;
/// Points on the Stein curve.
pub const STEIN_POINTS: usize = 120;

#[derive(Debug, Serialize)]
pub struct BoundPoint {
    pub n: usize,
    pub kolmogorov: f64,
    pub compact: Option<f64>,
    pub sharp: Option<f64>,
    pub trivial: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct BoundCurves {
    pub r: usize,
    pub points: Vec<BoundPoint>,
}

/// Bounds with unit norms at roughly 60 log-spaced n in `[1, n_max]`.
pub fn bound_curves_data(r: usize, n_max: usize) -> Result<BoundCurves, String> {
    if !(2..=50).contains(&r) {
        return Err("r must be between 2 and 50".into());
    }
    if !(1..=MAX_CURVE_N).contains(&n_max) {
        return Err(format!("n_max must be between 1 and {MAX_CURVE_N}"));
    }
    let mut ns: Vec<usize> =
        (0..60).map(|i| (n_max as f64).powf(i as f64 / 59.0).round() as usize).collect();
    ns.dedup();
    let points = ns
        .into_iter()
        .map(|n| {
            let rep = bound_report(n, r, SmoothNorms::unit()).map_err(|e| e.to_string())?;
            Ok(BoundPoint { n, kolmogorov: rep.kolmogorov_raw, compact: rep.compact, sharp: rep.sharp, trivial: rep.trivial })
        })
        .collect::<Result<_, String>>()?;
    Ok(BoundCurves { r, points })
}

#[derive(Debug, Serialize)]
pub struct LawComparison {
    pub r: usize,
    pub n: usize,
    /// Atoms of the exact law: `(value, probability)`.
    pub atoms: Vec<(f64, f64)>,
    /// Chi-square CDF sampled on `[0, x_max]`.
    pub chisq: Vec<(f64, f64)>,
    pub kolmogorov: f64,
    pub kolmogorov_bound: f64,
}

/// The exact law of the statistic against the chi-square CDF.
pub fn law_comparison_data(r: usize, n: usize) -> Result<LawComparison, String> {
    let law = exact_law(r, n).map_err(|e| e.to_string())?;
    let chisq = ChiSquareLaw::new(r as u32 - 1).map_err(|e| e.to_string())?;
    let atoms = law.atoms_f64();
    let last = atoms.last().map_or(1.0, |a| a.0);
    let x_max = last.min(4.0 * r as f64 + 10.0).max(1.0);
    let curve = (0..=200)
        .map(|i| {
            let x = x_max * i as f64 / 200.0;
            chisq.cdf(x).map(|c| (x, c))
        })
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    Ok(LawComparison {
        r,
        n,
        atoms,
        chisq: curve,
        kolmogorov: law.kolmogorov_to_chisq().map_err(|e| e.to_string())?,
        kolmogorov_bound: bound_report(n, r, SmoothNorms::unit()).map_err(|e| e.to_string())?.kolmogorov_raw,
    })
}

#[derive(Debug, Serialize)]
pub struct SteinCurve {
    pub p: u32,
    pub t: f64,
    /// `(x, f'(x))` for the solution with `h = cos(t·)`.
    pub points: Vec<(f64, f64)>,
    /// Smallest available cap on `sup |f'|`.
    pub cap: f64,
}

/// `f'` of the Stein solution for `h(x) = cos(tx)` on `(0, p + 20√p]`.
pub fn stein_curve_data(p: u32, t: f64) -> Result<SteinCurve, String> {
    if !(1..=30).contains(&p) {
        return Err("p must be between 1 and 30".into());
    }
    if !(t.is_finite() && t > 0.0 && t <= 10.0) {
        return Err("t must be in (0, 10]".into());
    }
    let h = Cosine { t };
    let sol = SteinSolution::new(p, &h).map_err(|e| e.to_string())?;
    let x_max = p as f64 + 20.0 * (p as f64).sqrt();
    let points = (1..=STEIN_POINTS)
        .map(|i| {
            let x = x_max * i as f64 / STEIN_POINTS as f64;
            sol.fprime(x).map(|f| (x, f))
        })
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let caps = derivative_caps(p, 1, &h.norms());
    let cap = [caps.by_same_order, caps.by_lower_order].into_iter().flatten().fold(f64::INFINITY, f64::min);
    Ok(SteinCurve { p, t, points, cap })
}

fn to_js<T: Serialize>(v: Result<T, String>) -> Result<String, JsError> {
    let v = v.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn bound_curves(r: usize, n_max: usize) -> Result<String, JsError> {
    to_js(bound_curves_data(r, n_max))
}

#[wasm_bindgen]
pub fn law_comparison(r: usize, n: usize) -> Result<String, JsError> {
    to_js(law_comparison_data(r, n))
}

#[wasm_bindgen]
pub fn stein_curve(p: u32, t: f64) -> Result<String, JsError> {
    to_js(stein_curve_data(p, t))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_curves_are_monotone_in_n() {
        let c = bound_curves_data(3, 10_000).unwrap();
        assert_eq!(c.points.first().unwrap().n, 1);
        assert_eq!(c.points.last().unwrap().n, 10_000);
        for w in c.points.windows(2) {
            assert!(w[0].n < w[1].n);
            assert!(w[1].kolmogorov < w[0].kolmogorov);
        }
        let mid = &c.points[c.points.len() / 2];
        assert_eq!(mid.compact, bound_report(mid.n, 3, SmoothNorms::unit()).unwrap().compact);
        assert!(bound_curves_data(1, 10).is_err());
        assert!(bound_curves_data(3, 0).is_err());
    }

    #[test]
    fn law_comparison_is_a_distribution() {
        let c = law_comparison_data(3, 2).unwrap();
        let total: f64 = c.atoms.iter().map(|a| a.1).sum();
        assert!((total - 1.0).abs() < 1e-15);
        assert!(c.kolmogorov > 0.0 && c.kolmogorov < 1.0);
        assert_eq!(c.chisq.first().unwrap(), &(0.0, 0.0));
        assert!(c.chisq.windows(2).all(|w| w[0].1 <= w[1].1));
        assert!(law_comparison_data(12, 12).is_err());
    }

    #[test]
    fn stein_curve_respects_cap() {
        let c = stein_curve_data(3, 1.0).unwrap();
        assert_eq!(c.points.len(), STEIN_POINTS);
        assert!((c.cap - 2.0).abs() < 1e-15);
        assert!(c.points.iter().all(|&(_, f)| f.abs() <= c.cap + 1e-9));
        assert!(stein_curve_data(0, 1.0).is_err());
        assert!(stein_curve_data(3, f64::NAN).is_err());
    }

    #[test]
    fn exports_serialize() {
        let v: serde_json::Value = serde_json::from_str(&bound_curves(2, 50).unwrap()).unwrap();
        assert_eq!(v["r"], 2);
        let v: serde_json::Value = serde_json::from_str(&stein_curve(2, 0.5).unwrap()).unwrap();
        assert_eq!(v["p"], 2);
    }
}
