//! Exact single-trial moments: expectations over one uniformly random permutation.

use std::collections::BTreeMap;

use super::enumerate::{factorial, next_permutation};
use super::rational::{int, rat, Rational};
use super::ExactMomentTable;
use crate::error::{domain, Result};

const POSITION_NAMES: [&str; 4] = ["l", "j", "s", "t"];

/// Joint law of `(ρ(1), …, ρ(k))`, `k = min(r, 4)`, tabulated by enumerating all `r!` permutations.
#[derive(Debug, Clone)]
pub struct SingleTrialLaw {
    r: usize,
    k: usize,
    counts: Vec<u64>,
    total: u64,
}

impl SingleTrialLaw {
    pub fn enumerate(r: usize) -> Result<Self> {
        if !(2..=10).contains(&r) {
            return Err(domain(format!("single-trial enumeration needs 2 <= r <= 10, got {r}")));
        }
        let k = r.min(4);
        let mut counts = vec![0u64; r.pow(k as u32)];
        let mut perm: Vec<usize> = (0..r).collect();
        let mut total = 0u64;
        loop {
            let key = perm[..k].iter().fold(0, |acc, &p| acc * r + p);
            counts[key] += 1;
            total += 1;
            if !next_permutation(&mut perm) {
                break;
            }
        }
        debug_assert_eq!(total, factorial(r));
        Ok(Self { r, k, counts, total })
    }

    pub fn r(&self) -> usize {
        self.r
    }

    /// Number of distinct positions tabulated.
    pub fn positions(&self) -> usize {
        self.k
    }

    /// `ρ` for the rank `index + 1`.
    pub fn value(&self, index: usize) -> Rational {
        rat(2 * index as i128 + 1 - self.r as i128, 2)
    }

    /// `E[f(ρ(1), …, ρ(d))]` over distinct positions `1..d`, `d ≤ min(r, 4)`.
    pub fn expect<F: Fn(&[Rational]) -> Rational>(&self, d: usize, f: F) -> Rational {
        assert!(d <= self.k, "at most {} distinct positions, asked for {d}", self.k);
        let values: Vec<Rational> = (0..self.r).map(|i| self.value(i)).collect();
        let mut sum = int(0);
        let mut args = vec![int(0); d];
        for (key, &c) in self.counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let mut rest = key;
            let mut digits = [0usize; 4];
            for slot in (0..self.k).rev() {
                digits[slot] = rest % self.r;
                rest /= self.r;
            }
            for (a, &dgt) in args.iter_mut().zip(&digits[..d]) {
                *a = values[dgt].clone();
            }
            sum += f(&args) * int(c as i128);
        }
        sum / int(self.total as i128)
    }

    /// `E[f(ρ(i_1), …, ρ(i_m))]` for arbitrary (possibly repeated) position labels.
    pub fn expect_indices<F: Fn(&[Rational]) -> Rational>(&self, indices: &[usize], f: F) -> Rational {
        let mut distinct: Vec<usize> = Vec::new();
        let slots: Vec<usize> = indices
            .iter()
            .map(|i| match distinct.iter().position(|d| d == i) {
                Some(p) => p,
                None => {
                    distinct.push(*i);
                    distinct.len() - 1
                }
            })
            .collect();
        self.expect(distinct.len(), |x| {
            let args: Vec<Rational> = slots.iter().map(|&s| x[s].clone()).collect();
            f(&args)
        })
    }

    /// `E[ρ(1)^{e_1} ρ(2)^{e_2} …]` on distinct positions.
    pub fn monomial(&self, exponents: &[u32]) -> Rational {
        self.expect(exponents.len(), |x| {
            x.iter().zip(exponents).fold(int(1), |acc, (v, &e)| acc * super::rational::pow(v, e))
        })
    }

    /// `E[Π ρ(i)]` over a multiset of position labels.
    pub fn product_moment(&self, indices: &[usize]) -> Rational {
        self.expect_indices(indices, |x| x.iter().fold(int(1), |acc, v| acc * v))
    }
}

pub fn monomial_label(exponents: &[u32]) -> String {
    let body: String = exponents
        .iter()
        .zip(POSITION_NAMES)
        .map(|(&e, name)| if e == 1 { format!("ρ({name})") } else { format!("ρ({name})^{e}") })
        .collect();
    format!("E[{body}]")
}

fn partitions(total: u32, max_part: u32, max_len: usize, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if total == 0 {
        out.push(prefix.clone());
        return;
    }
    if prefix.len() == max_len {
        return;
    }
    for part in (1..=max_part.min(total)).rev() {
        prefix.push(part);
        partitions(total - part, part, max_len, prefix, out);
        prefix.pop();
    }
}

/// All monomials in distinct `ρ(l), ρ(j), ρ(s), ρ(t)` of total degree ≤ 8 (as many distinct
/// positions as `r` allows), plus single-position powers up to 16.
pub fn single_trial_moments(r: usize) -> Result<ExactMomentTable> {
    let law = SingleTrialLaw::enumerate(r)?;
    let mut entries = BTreeMap::new();
    for degree in 1..=8 {
        let mut parts = Vec::new();
        partitions(degree, degree, law.positions(), &mut Vec::new(), &mut parts);
        for exps in parts {
            entries.insert(monomial_label(&exps), law.monomial(&exps));
        }
    }
    for e in 9..=16 {
        entries.insert(monomial_label(&[e]), law.monomial(&[e]));
    }
    Ok(ExactMomentTable { r, n: None, entries })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let t = single_trial_moments(3).unwrap();
        assert_eq!(t.get("E[ρ(l)^2]").unwrap(), &rat(2, 3));
        let t = single_trial_moments(2).unwrap();
        assert_eq!(t.get("E[ρ(l)^4]").unwrap(), &rat(1, 16));
        let t = single_trial_moments(4).unwrap();
        assert_eq!(t.get("E[ρ(l)ρ(j)]").unwrap(), &rat(-5, 12));
        assert!(single_trial_moments(1).is_err());
        assert!(single_trial_moments(11).is_err());
    }

    #[test]
    fn table_shape() {
        let t = single_trial_moments(2).unwrap();
        assert!(t.get("E[ρ(l)ρ(j)ρ(s)]").is_none());
        let t = single_trial_moments(5).unwrap();
        assert!(t.get("E[ρ(l)^2ρ(j)^2ρ(s)^2ρ(t)^2]").is_some());
        assert!(t.get("E[ρ(l)^16]").is_some());
    }

    #[test]
    fn repeated_labels_reduce_to_monomials() {
        let law = SingleTrialLaw::enumerate(5).unwrap();
        assert_eq!(law.product_moment(&[0, 3, 0, 0]), law.monomial(&[3, 1]));
        assert_eq!(law.product_moment(&[2, 2, 1, 1]), law.monomial(&[2, 2]));
        assert_eq!(law.product_moment(&[4, 4, 4, 4]), law.monomial(&[4]));
    }

    #[test]
    fn odd_moments_vanish() {
        for r in 2..=7 {
            let law = SingleTrialLaw::enumerate(r).unwrap();
            assert_eq!(law.monomial(&[1]), int(0));
            assert_eq!(law.monomial(&[3]), int(0));
            assert_eq!(law.monomial(&[2, 1]), int(0));
            if r >= 3 {
                assert_eq!(law.monomial(&[1, 1, 1]), int(0));
                assert_eq!(law.monomial(&[3, 1, 1]), int(0));
            }
        }
    }
}
