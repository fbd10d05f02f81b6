//! Null-distribution samplers and distance estimates against χ²_(r−1).
//!
//! Sampling is split into fixed-size chunks; chunk `i` draws from stream `i` of the seed, and
//! chunk results are combined in stream order, so results do not depend on the thread count.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{bound_report, BoundReport};
use crate::chisq::ChiSquareLaw;
use crate::error::{domain, Result};
use crate::exact::joint::kappa;
use crate::exact::law::{discrete_kolmogorov, exact_law, exact_law_feasible};
use crate::exact::rational::to_f64;
use crate::quad;
use crate::ranks::RankMatrix;
use crate::testfn::TestFunction;

pub use crate::testfn::{smoothing_function, SmoothingFunction};

/// Samples per stream.
pub const CHUNK: usize = 1 << 14;
/// Confidence level of every reported error bar.
pub const CONFIDENCE: f64 = 0.99;
/// Two-sided normal quantile at [`CONFIDENCE`].
const Z99: f64 = 2.575_829_303_548_901;

/// `(seed, stream)` names one ChaCha8 substream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RngContract {
    pub seed: u64,
    pub stream: u64,
}

impl RngContract {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ExactEnumeration,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistanceEstimate {
    pub value: f64,
    /// 99% error bar: DKW for Kolmogorov, CLT for expectation gaps, 0 when exact.
    pub half_width: f64,
    pub samples: u64,
    pub method: Method,
}

/// DKW half-width `√(ln(2/0.01)/(2N))`.
pub fn dkw_half_width(samples: u64) -> f64 {
    ((2.0 / (1.0 - CONFIDENCE)).ln() / (2.0 * samples as f64)).sqrt()
}

/// `n` independent uniform permutations of `1..=r`, one per row.
pub fn sample_rank_matrix<R: rand::Rng + ?Sized>(n: usize, r: usize, rng: &mut R) -> Result<RankMatrix> {
    if n < 1 || r < 2 {
        return Err(domain("sampling needs n >= 1 and r >= 2"));
    }
    let mut data = Vec::with_capacity(n * r);
    let mut row: Vec<u32> = (1..=r as u32).collect();
    for _ in 0..n {
        row.shuffle(rng);
        data.extend_from_slice(&row);
    }
    RankMatrix::new(n, r, data)
}

/// `Σ_j C_j²` on doubled column sums for one sampled ranking.
fn sample_q<R: rand::Rng + ?Sized>(n: usize, row: &mut [i64], sums: &mut [i64], rng: &mut R) -> u64 {
    sums.iter_mut().for_each(|s| *s = 0);
    for _ in 0..n {
        row.shuffle(rng);
        for (s, v) in sums.iter_mut().zip(row.iter()) {
            *s += v;
        }
    }
    sums.iter().map(|c| (c * c) as u64).sum()
}

/// Histogram of `q` over `samples` null draws, reduced in stream order.
pub fn sample_q_histogram(n: usize, r: usize, samples: u64, seed: u64) -> Result<BTreeMap<u64, u64>> {
    if n < 1 || r < 2 {
        return Err(domain("sampling needs n >= 1 and r >= 2"));
    }
    let chunks = samples.div_ceil(CHUNK as u64);
    let parts: Vec<BTreeMap<u64, u64>> = (0..chunks)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngContract::new(seed, i).rng();
            let count = (samples - i * CHUNK as u64).min(CHUNK as u64);
            let mut row: Vec<i64> = (1..=r as i64).map(|v| 2 * v - (r as i64 + 1)).collect();
            let mut sums = vec![0i64; r];
            let mut hist = BTreeMap::new();
            for _ in 0..count {
                *hist.entry(sample_q(n, &mut row, &mut sums, &mut rng)).or_insert(0) += 1;
            }
            hist
        })
        .collect();
    let mut total = BTreeMap::new();
    for part in parts {
        for (q, c) in part {
            *total.entry(q).or_insert(0) += c;
        }
    }
    Ok(total)
}

fn atoms_from_histogram(n: usize, r: usize, hist: &BTreeMap<u64, u64>, samples: u64) -> Vec<(f64, f64)> {
    let k = to_f64(&kappa(r, n));
    hist.iter().map(|(&q, &c)| (k * q as f64, c as f64 / samples as f64)).collect()
}

/// Empirical `sup_z |ECDF(z) − P(χ²_(r−1) ≤ z)|`, exact over both one-sided limits at each sample point.
pub fn estimate_kolmogorov(n: usize, r: usize, samples: u64, seed: u64) -> Result<DistanceEstimate> {
    if samples < 1000 {
        return Err(domain("Kolmogorov estimate needs at least 1000 samples"));
    }
    let hist = sample_q_histogram(n, r, samples, seed)?;
    let atoms = atoms_from_histogram(n, r, &hist, samples);
    Ok(DistanceEstimate {
        value: discrete_kolmogorov(&atoms, &ChiSquareLaw::new(r as u32 - 1)?)?,
        half_width: dkw_half_width(samples),
        samples,
        method: Method::MonteCarlo,
    })
}

/// The exact law is computable within budget, by enumeration or by convolution.
pub fn within_budget(n: usize, r: usize) -> bool {
    exact_law_feasible(r, n)
}

/// Exact `d_K` when the exact law is within budget, Monte Carlo otherwise.
pub fn kolmogorov_distance(n: usize, r: usize, samples: u64, seed: u64) -> Result<DistanceEstimate> {
    if within_budget(n, r) {
        let law = exact_law(r, n)?;
        return Ok(DistanceEstimate {
            value: law.kolmogorov_to_chisq()?,
            half_width: 0.0,
            samples: 0,
            method: Method::ExactEnumeration,
        });
    }
    estimate_kolmogorov(n, r, samples, seed)
}

fn chisq_expectation<H: TestFunction + ?Sized>(p: u32, h: &H) -> Result<f64> {
    match h.chisq_closed_form(p) {
        Some(v) => Ok(v),
        None => ChiSquareLaw::new(p)?.expectation(h, 1e-12),
    }
}

/// `|E[h(F_r)] − χ²_(r−1) h|` with the first term averaged over the exact null law.
pub fn exact_smooth_gap<H: TestFunction + ?Sized>(n: usize, r: usize, h: &H) -> Result<f64> {
    let law = exact_law(r, n)?;
    Ok((law.expectation(h) - chisq_expectation(r as u32 - 1, h)?).abs())
}

/// Monte Carlo `|E[h(F_r)] − χ²_(r−1) h|` with a 99% CLT half-width.
pub fn mc_smooth_gap<H: TestFunction + ?Sized>(n: usize, r: usize, h: &H, samples: u64, seed: u64) -> Result<DistanceEstimate> {
    if samples < 2 {
        return Err(domain("Monte Carlo gap needs at least 2 samples"));
    }
    let hist = sample_q_histogram(n, r, samples, seed)?;
    let atoms = atoms_from_histogram(n, r, &hist, samples);
    let mean: f64 = atoms.iter().map(|&(x, p)| p * h.eval(x)).sum();
    let var: f64 = atoms.iter().map(|&(x, p)| p * (h.eval(x) - mean).powi(2)).sum();
    let sd = (var * samples as f64 / (samples - 1) as f64).sqrt();
    Ok(DistanceEstimate {
        value: (mean - chisq_expectation(r as u32 - 1, h)?).abs(),
        half_width: Z99 * sd / (samples as f64).sqrt(),
        samples,
        method: Method::MonteCarlo,
    })
}

/// `∫₀^∞ |G(x) − P(χ²_p ≤ x)| dx` for a discrete law `G` given by sorted atoms.
pub fn wasserstein_to_chisq(atoms: &[(f64, f64)], law: &ChiSquareLaw) -> Result<f64> {
    let tol = 1e-9;
    let mut total = 0.0;
    let mut left = 0.0;
    let mut below = 0.0;
    for &(v, p) in atoms {
        if v > left {
            let c = below;
            // Adaptive quadrature resolves the kink where the CDF crosses the step level.
            total += quad::integrate(|x| (c - law.cdf(x).unwrap_or(0.0)).abs(), left, v, tol, 4)?.value;
        }
        below += p;
        left = v;
    }
    // Beyond the last atom the step is 1, leaving ∫ P(χ² > x) dx.
    let pf = law.p() as f64;
    let mut upper = left + pf + 10.0;
    while law.sf(upper)? * (upper + 2.0 * pf) > tol {
        upper *= 1.5;
    }
    total += quad::integrate(|x| law.sf(x).unwrap_or(0.0), left, upper, tol, 8)?.value;
    Ok(total)
}

/// Monte Carlo estimate of `d_W(L(F_2), χ²_1)`; the half-width is `0` since no closed error bar
/// is attached to this diagnostic.
pub fn estimate_wasserstein_r2(n: usize, samples: u64, seed: u64) -> Result<DistanceEstimate> {
    let hist = sample_q_histogram(n, 2, samples, seed)?;
    let atoms = atoms_from_histogram(n, 2, &hist, samples);
    Ok(DistanceEstimate {
        value: wasserstein_to_chisq(&atoms, &ChiSquareLaw::new(1)?)?,
        half_width: 0.0,
        samples,
        method: Method::MonteCarlo,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum RateMode {
    /// Exact enumeration; every `n` must fit the budget.
    Exact,
    /// Exact when `(r!)^n` fits the budget, Monte Carlo otherwise.
    Auto { samples: u64, seed: u64 },
    MonteCarlo { samples: u64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateRow {
    pub n: usize,
    pub gap: f64,
    pub n_gap: f64,
    pub half_width: f64,
    pub method: Method,
    pub bounds: BoundReport,
    /// `gap − half_width ≤ selected`, or `None` when no smooth bound applies.
    pub within_bound: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateTable {
    pub r: usize,
    pub h: String,
    pub rows: Vec<RateRow>,
}

impl RateTable {
    /// No row exceeds its selected bound.
    pub fn all_within(&self) -> bool {
        self.rows.iter().all(|row| row.within_bound != Some(false))
    }
}

pub fn rate_experiment<H: TestFunction + ?Sized>(r: usize, n_list: &[usize], h: &H, mode: RateMode) -> Result<RateTable> {
    let norms = h.norms().smooth();
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let (gap, half_width, method) = match mode {
            RateMode::Exact => (exact_smooth_gap(n, r, h)?, 0.0, Method::ExactEnumeration),
            RateMode::Auto { samples, seed } => {
                if within_budget(n, r) {
                    (exact_smooth_gap(n, r, h)?, 0.0, Method::ExactEnumeration)
                } else {
                    let est = mc_smooth_gap(n, r, h, samples, seed)?;
                    (est.value, est.half_width, est.method)
                }
            }
            RateMode::MonteCarlo { samples, seed } => {
                let est = mc_smooth_gap(n, r, h, samples, seed)?;
                (est.value, est.half_width, est.method)
            }
        };
        let bounds = bound_report(n, r, norms)?;
        let within_bound = bounds.selected.map(|b| gap - half_width <= b);
        rows.push(RateRow { n, gap, n_gap: n as f64 * gap, half_width, method, bounds, within_bound });
    }
    Ok(RateTable { r, h: h.label(), rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::bound_theorem1;
    use crate::testfn::{Cosine, Power};

    #[test]
    fn rng_contract_is_deterministic() {
        let a = sample_rank_matrix(5, 4, &mut RngContract::new(7, 3).rng()).unwrap();
        let b = sample_rank_matrix(5, 4, &mut RngContract::new(7, 3).rng()).unwrap();
        let c = sample_rank_matrix(5, 4, &mut RngContract::new(7, 4).rng()).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn r2_rows_are_balanced() {
        let m = sample_rank_matrix(100_000, 2, &mut RngContract::new(1, 0).rng()).unwrap();
        let ones = m.rows().filter(|row| row[0] == 1).count() as f64;
        // 4σ with σ = √(N/4).
        assert!((ones - 50_000.0).abs() <= 4.0 * 158.2);
    }

    #[test]
    fn dkw_arithmetic() {
        assert!((dkw_half_width(1_000_000) - 0.001_627_7).abs() < 1e-6);
        let ratio = dkw_half_width(1000) / dkw_half_width(2000);
        assert!((ratio - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn smooth_gap_examples() {
        assert!(exact_smooth_gap(4, 3, &Power { k: 1 }).unwrap() < 1e-12);
        assert!((exact_smooth_gap(4, 3, &Power { k: 2 }).unwrap() - 1.0).abs() < 1e-9);
        let g = exact_smooth_gap(8, 3, &Cosine { t: 0.01 }).unwrap();
        assert!((g / 2.5e-5 - 1.0).abs() < 0.25, "{g}");
    }

    #[test]
    fn rate_examples() {
        let t = rate_experiment(3, &[2, 3, 4, 5], &Power { k: 2 }, RateMode::Exact).unwrap();
        for row in &t.rows {
            assert!((row.n_gap - 4.0).abs() < 1e-8);
            assert_eq!(row.within_bound, None);
        }
        let t = rate_experiment(3, &[2, 4, 8], &Cosine { t: 1.0 }, RateMode::Exact).unwrap();
        for row in &t.rows {
            assert!(row.gap < bound_theorem1(row.n, 3, crate::bounds::SmoothNorms::unit()).unwrap());
        }
        assert!(t.all_within());
    }

    #[test]
    fn exact_and_mc_kolmogorov_agree() {
        let exact = kolmogorov_distance(2, 2, 0, 0).unwrap();
        assert_eq!(exact.method, Method::ExactEnumeration);
        let mc = estimate_kolmogorov(2, 2, 200_000, 11).unwrap();
        assert!((mc.value - exact.value).abs() <= mc.half_width);
    }

    #[test]
    fn wasserstein_of_point_mass() {
        // A unit atom at the mean: ∫|1{x≥1} − Φ| = E|Y − 1| for Y ~ χ²_1.
        let law = ChiSquareLaw::new(1).unwrap();
        let w = wasserstein_to_chisq(&[(1.0, 1.0)], &law).unwrap();
        // E|Y−1| = 2 E[(1−Y)+] = 2(Φ(1) − E[Y;Y≤1]) = 2(Φ_1(1) − Φ_3(1)).
        let expected = 2.0 * (law.cdf(1.0).unwrap() - ChiSquareLaw::new(3).unwrap().cdf(1.0).unwrap());
        assert!((w - expected).abs() < 1e-8, "{w} vs {expected}");
    }
}
