//! The exact null law of `F_r` for small `(r, n)`.

use serde::Serialize;

use std::ops::AddAssign;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};

use super::enumerate::{check_budget, configuration_count, doubled_permutations, factorial, fold_configurations};
use super::joint::kappa;
use super::rational::{int, to_f64, Rational};
use crate::chisq::ChiSquareLaw;
use crate::error::{domain, Error, Result};
use crate::testfn::TestFunction;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LawAtom {
    /// `Σ_j C_j²` on doubled column sums; `F_r = 3q/(r(r+1)n)`.
    pub q: u64,
    #[serde(serialize_with = "super::serialize_rational")]
    pub value: Rational,
    #[serde(serialize_with = "super::serialize_rational")]
    pub prob: Rational,
}

/// Atoms of the law of `F_r`, sorted by value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactLaw {
    pub r: usize,
    pub n: usize,
    pub atoms: Vec<LawAtom>,
}

fn merge_hist(mut a: Vec<u64>, b: Vec<u64>) -> Vec<u64> {
    if a.len() < b.len() {
        return merge_hist(b, a);
    }
    for (x, y) in a.iter_mut().zip(&b) {
        *x += y;
    }
    a
}

/// Work allowed for the column-sum convolution: states × r! × n.
pub const CONVOLUTION_BUDGET: f64 = 1e8;

/// Exact law by enumeration when `(r!)^n` fits the enumeration budget, otherwise by
/// convolving the law of the column-sum vector one trial at a time.
pub fn exact_law(r: usize, n: usize) -> Result<ExactLaw> {
    if r < 2 || n < 1 {
        return Err(domain("exact law needs r >= 2 and n >= 1"));
    }
    if check_budget(configuration_count(r, n)).is_ok() {
        enumerated_law(r, n)
    } else {
        convolved_law(r, n)
    }
}

/// Whether [`exact_law`] runs within its budgets.
pub fn exact_law_feasible(r: usize, n: usize) -> bool {
    r >= 2 && n >= 1 && (check_budget(configuration_count(r, n)).is_ok() || convolution_work(r, n).is_some())
}

/// States × r! × n for the convolution, or `None` if over budget.
fn convolution_work(r: usize, n: usize) -> Option<f64> {
    let states = ((n * (r - 1) + 1) as f64).powi(r as i32 - 1);
    let work = states * factorial(r) as f64 * n as f64;
    (work <= CONVOLUTION_BUDGET).then_some(work)
}

pub fn enumerated_law(r: usize, n: usize) -> Result<ExactLaw> {
    if r < 2 || n < 1 {
        return Err(domain("exact law needs r >= 2 and n >= 1"));
    }
    // |C_j| ≤ n(r−1), so q ≤ r n² (r−1)².
    let q_max = r * n * n * (r - 1) * (r - 1);
    let hist = fold_configurations(
        r,
        n,
        1,
        Vec::new,
        |h: &mut Vec<u64>, cfg| {
            if h.is_empty() {
                h.resize(q_max + 1, 0);
            }
            let q: i64 = cfg.doubled_sums().iter().map(|&v| v * v).sum();
            h[q as usize] += 1;
        },
        merge_hist,
    )?;
    let hist: Vec<BigInt> = hist.into_iter().map(BigInt::from).collect();
    Ok(law_from_histogram(r, n, &hist))
}

/// Exact law from the distribution of the column sums `S_j = Σ_i (π_ij − 1)`, built one trial
/// at a time over a dense grid of the first `r − 1` coordinates.
pub fn convolved_law(r: usize, n: usize) -> Result<ExactLaw> {
    if r < 2 || n < 1 {
        return Err(domain("exact law needs r >= 2 and n >= 1"));
    }
    if convolution_work(r, n).is_none() {
        return Err(Error::Budget { requested: configuration_count(r, n), cap: CONVOLUTION_BUDGET as u64 });
    }
    let hist = if configuration_count(r, n) < u128::MAX as f64 {
        convolve::<u128>(r, n).into_iter().map(BigInt::from).collect()
    } else {
        convolve::<BigUint>(r, n).into_iter().map(BigInt::from).collect::<Vec<_>>()
    };
    Ok(law_from_histogram(r, n, &hist))
}

/// Histogram of `q` with configuration counts of type `T`.
fn convolve<T: Clone + Zero + One + for<'a> AddAssign<&'a T>>(r: usize, n: usize) -> Vec<T> {
    let top = n * (r - 1);
    let base = top + 1;
    let dims = r - 1;
    let size = base.pow(dims as u32);
    let offsets: Vec<usize> = doubled_permutations(r)
        .iter()
        .map(|v| {
            let mut off = 0;
            for j in (0..dims).rev() {
                off = off * base + ((v[j] + r as i64 - 1) / 2) as usize;
            }
            off
        })
        .collect();
    let mut counts = vec![T::zero(); size];
    counts[0] = T::one();
    for _ in 0..n {
        let mut next = vec![T::zero(); size];
        for (idx, c) in counts.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for &off in &offsets {
                next[idx + off] += c;
            }
        }
        counts = next;
    }
    // Every row sums to r(r−1)/2 before doubling, which fixes the last coordinate.
    let total_sum = (n * r * (r - 1) / 2) as i64;
    let mut hist = vec![T::zero(); r * top * top + 1];
    for (idx, c) in counts.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let (mut rest, mut q, mut partial) = (idx, 0i64, 0i64);
        for _ in 0..dims {
            let s = (rest % base) as i64;
            rest /= base;
            partial += s;
            let d = 2 * s - top as i64;
            q += d * d;
        }
        let d = 2 * (total_sum - partial) - top as i64;
        q += d * d;
        hist[q as usize] += c;
    }
    hist
}

fn law_from_histogram(r: usize, n: usize, hist: &[BigInt]) -> ExactLaw {
    let total: BigInt = hist.iter().sum();
    let k = kappa(r, n);
    let atoms = hist
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(q, c)| LawAtom {
            q: q as u64,
            value: &k * int(q as i128),
            prob: Rational::new(c.clone(), total.clone()),
        })
        .collect();
    ExactLaw { r, n, atoms }
}

impl ExactLaw {
    /// `(value, probability)` pairs in floating point.
    pub fn atoms_f64(&self) -> Vec<(f64, f64)> {
        self.atoms.iter().map(|a| (to_f64(&a.value), to_f64(&a.prob))).collect()
    }

    pub fn prob_zero(&self) -> Rational {
        self.atoms.iter().find(|a| a.q == 0).map(|a| a.prob.clone()).unwrap_or_else(|| int(0))
    }

    /// `P(F_r ≤ z)`.
    pub fn cdf(&self, z: f64) -> f64 {
        self.atoms_f64().iter().filter(|(v, _)| *v <= z).map(|(_, p)| p).sum()
    }

    /// `E[h(F_r)]`, evaluating `h` in floating point at the exact atoms.
    pub fn expectation<H: TestFunction + ?Sized>(&self, h: &H) -> f64 {
        self.atoms_f64().iter().map(|&(v, p)| p * h.eval(v)).sum()
    }

    /// `E[F_r^k]` exactly.
    pub fn raw_moment(&self, k: u32) -> Rational {
        self.atoms
            .iter()
            .map(|a| super::rational::pow(&a.value, k) * &a.prob)
            .fold(int(0), |acc, x| acc + x)
    }

    /// Exact Kolmogorov distance to χ²_(r−1).
    pub fn kolmogorov_to_chisq(&self) -> Result<f64> {
        discrete_kolmogorov(&self.atoms_f64(), &ChiSquareLaw::new(self.r as u32 - 1)?)
    }
}

/// `sup_z |G(z) − Φ(z)|` for a discrete law `G` given by sorted `(value, prob)` atoms and a
/// continuous CDF `Φ`. The supremum is attained at an atom, from the left or the right.
pub fn discrete_kolmogorov(atoms: &[(f64, f64)], law: &ChiSquareLaw) -> Result<f64> {
    let mut below = 0.0;
    let mut sup: f64 = 0.0;
    for &(v, p) in atoms {
        let phi = law.cdf(v.max(0.0))?;
        sup = sup.max((phi - below).abs());
        below += p;
        sup = sup.max((below - phi).abs());
    }
    Ok(sup)
}

/// `C(2k, k)/4^k`, the probability that a symmetric ±1 walk of length `2k` is at 0.
pub fn central_binomial_probability(k: usize) -> Rational {
    let mut num = int(1);
    for i in 0..k {
        num = num * int((2 * k - i) as i128) / int((i + 1) as i128);
    }
    num / super::rational::pow(&int(4), k as u32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rational::rat;

    #[test]
    fn r2_n2_two_atoms() {
        let law = exact_law(2, 2).unwrap();
        assert_eq!(law.atoms.len(), 2);
        assert_eq!(law.atoms[0].value, int(0));
        assert_eq!(law.atoms[0].prob, rat(1, 2));
        assert_eq!(law.atoms[1].value, int(2));
        assert_eq!(law.atoms[1].prob, rat(1, 2));
    }

    #[test]
    fn atom_at_zero_is_central_binomial() {
        assert_eq!(exact_law(2, 4).unwrap().prob_zero(), rat(6, 16));
        for k in 1..=10 {
            assert_eq!(exact_law(2, 2 * k).unwrap().prob_zero(), central_binomial_probability(k));
        }
        assert_eq!(exact_law(2, 5).unwrap().prob_zero(), int(0));
    }

    #[test]
    fn moments_match_closed_forms() {
        for (r, n) in [(3usize, 4usize), (4, 3), (5, 2)] {
            let law = exact_law(r, n).unwrap();
            let total = law.atoms.iter().fold(int(0), |a, x| a + &x.prob);
            assert_eq!(total, int(1));
            assert_eq!(law.raw_moment(1), int(r as i128 - 1));
            let rr = r as i128;
            assert_eq!(law.raw_moment(2), int(rr * rr - 1) - rat(2 * (rr - 1), n as i128));
        }
    }

    #[test]
    fn convolution_matches_enumeration() {
        for (r, n) in [(2usize, 1usize), (2, 7), (3, 1), (3, 5), (4, 3), (5, 2), (6, 1)] {
            assert_eq!(convolved_law(r, n).unwrap(), enumerated_law(r, n).unwrap(), "r={r} n={n}");
        }
    }

    #[test]
    fn convolution_reaches_past_enumeration() {
        let law = exact_law(3, 16).unwrap();
        let rr = 3i128;
        assert_eq!(law.raw_moment(1), int(2));
        assert_eq!(law.raw_moment(2), int(rr * rr - 1) - rat(2 * (rr - 1), 16));
        assert_eq!(exact_law(2, 400).unwrap().prob_zero(), central_binomial_probability(200));
        assert!(exact_law_feasible(4, 10));
        assert!(!exact_law_feasible(8, 10));
        assert!(matches!(exact_law(8, 10), Err(Error::Budget { .. })));
    }

    #[test]
    fn kolmogorov_of_two_atoms() {
        // F ∈ {0, 2} with probability 1/2 each; the sup is at 0 from the right: 1/2 − 0.
        let d = exact_law(2, 2).unwrap().kolmogorov_to_chisq().unwrap();
        assert!((d - 0.5).abs() < 1e-15);
    }
}
