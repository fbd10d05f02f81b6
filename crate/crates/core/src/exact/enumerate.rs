//! Exhaustive enumeration of ranking configurations.
//!
//! A configuration is an n-tuple of permutations of 1..r, each equally likely under the null.
//! Values are stored doubled (`2ρ = 2π − (r+1)`), so every quantity stays integral.

use rayon::prelude::*;

use crate::error::{domain, Error, Result};

/// Maximum number of configurations (times any per-configuration multiplicity) enumerated.
pub const ENUMERATION_BUDGET: u64 = 20_000_000;

pub fn factorial(r: usize) -> u64 {
    (1..=r as u64).product()
}

/// Fails with `Error::Budget` when `count` exceeds [`ENUMERATION_BUDGET`].
pub fn check_budget(count: f64) -> Result<()> {
    if count > ENUMERATION_BUDGET as f64 {
        return Err(Error::Budget { requested: count, cap: ENUMERATION_BUDGET });
    }
    Ok(())
}

/// Number of configurations `(r!)^n`, as a float so huge requests do not overflow.
pub fn configuration_count(r: usize, n: usize) -> f64 {
    (factorial(r) as f64).powi(n as i32)
}

/// Advances `perm` to the next permutation in lexicographic order; false after the last one.
pub fn next_permutation(perm: &mut [usize]) -> bool {
    let Some(i) = perm.windows(2).rposition(|w| w[0] < w[1]) else {
        return false;
    };
    let j = perm.iter().rposition(|&x| x > perm[i]).expect("successor exists");
    perm.swap(i, j);
    perm[i + 1..].reverse();
    true
}

/// All `r!` permutations as doubled centered ranks, lexicographic in the rank vector.
pub fn doubled_permutations(r: usize) -> Vec<Vec<i64>> {
    let mut perm: Vec<usize> = (0..r).collect();
    let mut out = Vec::with_capacity(factorial(r) as usize);
    loop {
        out.push(perm.iter().map(|&p| 2 * p as i64 + 1 - r as i64).collect());
        if !next_permutation(&mut perm) {
            return out;
        }
    }
}

/// One ranking configuration during enumeration.
pub struct Configuration<'a> {
    perms: &'a [Vec<i64>],
    rows: &'a [usize],
    sums: &'a [i64],
}

impl Configuration<'_> {
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    /// Doubled centered rank `2ρ_i(j)`.
    pub fn doubled(&self, i: usize, j: usize) -> i64 {
        self.perms[self.rows[i]][j]
    }

    pub fn doubled_row(&self, i: usize) -> &[i64] {
        &self.perms[self.rows[i]]
    }

    /// Doubled column sums `2Σ_i ρ_i(j)`.
    pub fn doubled_sums(&self) -> &[i64] {
        self.sums
    }

    /// Ranks `π_i(j)` of row `i`.
    pub fn ranks_row(&self, i: usize) -> Vec<u32> {
        let r = self.sums.len() as i64;
        self.doubled_row(i).iter().map(|&v| ((v + r + 1) / 2) as u32).collect()
    }
}

/// Folds `visit` over all `(r!)^n` configurations, `multiplicity` being extra work per
/// configuration counted against the budget. Work is split over the first row's permutation and
/// partial accumulators are combined with `merge`, which must be associative.
pub fn fold_configurations<A, I, V, M>(
    r: usize,
    n: usize,
    multiplicity: u64,
    init: I,
    visit: V,
    merge: M,
) -> Result<A>
where
    A: Send,
    I: Fn() -> A + Sync + Send,
    V: Fn(&mut A, &Configuration<'_>) + Sync + Send,
    M: Fn(A, A) -> A + Sync + Send,
{
    if r < 2 || n < 1 {
        return Err(domain("enumeration needs r >= 2 and n >= 1"));
    }
    check_budget(configuration_count(r, n) * multiplicity.max(1) as f64)?;
    let perms = doubled_permutations(r);
    let count = perms.len();
    let result = (0..count)
        .into_par_iter()
        .map(|first| {
            let mut acc = init();
            let mut rows = vec![0usize; n];
            rows[0] = first;
            let mut sums: Vec<i64> = (0..r)
                .map(|j| perms[first][j] + (n as i64 - 1) * perms[0][j])
                .collect();
            loop {
                visit(&mut acc, &Configuration { perms: &perms, rows: &rows, sums: &sums });
                let mut i = n - 1;
                loop {
                    if i == 0 {
                        return acc;
                    }
                    for (s, v) in sums.iter_mut().zip(&perms[rows[i]]) {
                        *s -= v;
                    }
                    rows[i] += 1;
                    if rows[i] == count {
                        rows[i] = 0;
                        for (s, v) in sums.iter_mut().zip(&perms[0]) {
                            *s += v;
                        }
                        i -= 1;
                        continue;
                    }
                    for (s, v) in sums.iter_mut().zip(&perms[rows[i]]) {
                        *s += v;
                    }
                    break;
                }
            }
        })
        .reduce(&init, &merge);
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutation_counts() {
        for r in 1..=6 {
            let perms = doubled_permutations(r);
            assert_eq!(perms.len() as u64, factorial(r));
            for p in &perms {
                assert_eq!(p.iter().sum::<i64>(), 0);
            }
        }
        assert_eq!(doubled_permutations(2), vec![vec![-1, 1], vec![1, -1]]);
    }

    #[test]
    fn visits_every_configuration_once() {
        let (count, sum_sq) = fold_configurations(
            3,
            3,
            1,
            || (0u64, 0i64),
            |acc, c| {
                acc.0 += 1;
                let direct: Vec<i64> = (0..3).map(|j| (0..3).map(|i| c.doubled(i, j)).sum()).collect();
                assert_eq!(direct, c.doubled_sums());
                acc.1 += direct.iter().map(|v| v * v).sum::<i64>();
            },
            |a, b| (a.0 + b.0, a.1 + b.1),
        )
        .unwrap();
        assert_eq!(count, 216);
        // E[(2 Σ_i ρ_i(j))²] summed over j = 4 n r (r²−1)/12 = 24 for r = n = 3.
        assert_eq!(sum_sq, 24 * 216);
    }

    #[test]
    fn budget_is_enforced() {
        let err = fold_configurations(6, 3, 1, || (), |_, _| {}, |_, _| ()).unwrap_err();
        assert!(matches!(err, Error::Budget { .. }));
        assert!(fold_configurations(4, 5, 1, || (), |_, _| {}, |_, _| ()).is_ok());
        assert!(fold_configurations(4, 5, 3, || (), |_, _| {}, |_, _| ()).is_err());
    }
}
