//! The exchangeable pair for `S`: pick a trial `M` and treatments `K`, `L` uniformly and swap
//! their ranks in trial `M`. Exact checks run over every configuration and every draw.

use std::collections::HashMap;

use rand::Rng;
use serde::Serialize;

use crate::exact::enumerate::fold_configurations;
use crate::exact::joint::kappa;
use crate::exact::rational::{int, rat, Rational};
use crate::error::{domain, Result};
use crate::ranks::{center, RankMatrix, ScoreVector};
use crate::report::Report;

/// One draw of the coupling. Indices are 0-based.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairSample {
    pub base: ScoreVector,
    pub swapped: ScoreVector,
    pub indices: (usize, usize, usize),
}

/// `Λ = scale · I` with `scale = 2/(rn)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LambdaMatrix {
    pub scale: f64,
}

impl LambdaMatrix {
    pub fn new(n: usize, r: usize) -> Self {
        Self { scale: 2.0 / (r * n) as f64 }
    }

    /// Scale of `Λ^{-T} = (rn/2) I`.
    pub fn inverse_scale(&self) -> f64 {
        1.0 / self.scale
    }
}

/// Doubled increments `2(ΔC)` of the doubled column sums for the swap `(m, k, l)`:
/// entry `k` gets `v_l − v_k`, entry `l` gets `v_k − v_l`, where `v = 2ρ_m`.
fn doubled_increment(row: &[i64], k: usize, l: usize) -> (i64, i64) {
    (row[l] - row[k], row[k] - row[l])
}

/// The pair for a fixed swap of treatments `k`, `l` in trial `m`.
pub fn pair_for(ranks: &RankMatrix, m: usize, k: usize, l: usize) -> Result<PairSample> {
    let (n, r) = (ranks.n(), ranks.r());
    if m >= n || k >= r || l >= r {
        return Err(domain(format!("swap ({m}, {k}, {l}) out of range for n={n}, r={r}")));
    }
    let centered = center(ranks);
    let sums = centered.doubled_column_sums();
    let mut swapped = sums.clone();
    if k != l {
        let (dk, dl) = doubled_increment(centered.doubled_row(m), k, l);
        swapped[k] += dk;
        swapped[l] += dl;
    }
    Ok(PairSample {
        base: ScoreVector::from_doubled_sums(&sums, n),
        swapped: ScoreVector::from_doubled_sums(&swapped, n),
        indices: (m, k, l),
    })
}

/// Draws `M` uniform on trials and `K`, `L` independently uniform on treatments (`K = L` allowed).
pub fn sample_pair<R: Rng + ?Sized>(ranks: &RankMatrix, rng: &mut R) -> PairSample {
    let m = rng.random_range(0..ranks.n());
    let k = rng.random_range(0..ranks.r());
    let l = rng.random_range(0..ranks.r());
    pair_for(ranks, m, k, l).expect("indices drawn in range")
}

fn check_ranges(r: usize, n: usize, r_max: usize, n_max: usize) -> Result<()> {
    if !(2..=r_max).contains(&r) || !(1..=n_max).contains(&n) {
        return Err(domain(format!("coupling checks need 2 <= r <= {r_max}, 1 <= n <= {n_max}")));
    }
    Ok(())
}

/// For every configuration, the average over all `r²n` draws of `S′ − S` equals `−(2/(rn)) S`.
pub fn verify_regression(r: usize, n: usize) -> Result<Report> {
    check_ranges(r, n, 5, 4)?;
    let ri = r as i64;
    let (checked, bad, zero_configs) = fold_configurations(
        r,
        n,
        (n * r * r) as u64,
        || (0u64, 0u64, 0u64),
        |acc, cfg| {
            let sums = cfg.doubled_sums();
            let mut total = vec![0i64; r];
            for m in 0..n {
                let row = cfg.doubled_row(m);
                for k in 0..r {
                    for l in 0..r {
                        if k != l {
                            let (dk, dl) = doubled_increment(row, k, l);
                            total[k] += dk;
                            total[l] += dl;
                        }
                    }
                }
            }
            // Σ_draws ΔC = −2r C  ⇔  mean ΔC = −(2/(rn)) C.
            acc.0 += 1;
            if total.iter().zip(sums).any(|(t, &c)| *t != -2 * ri * c) {
                acc.1 += 1;
            }
            if sums.iter().all(|&c| c == 0) {
                acc.2 += 1;
                if total.iter().any(|&t| t != 0) {
                    acc.1 += 1;
                }
            }
        },
        |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2),
    )?;
    let mut rep = Report::new();
    let coefficient = rat(-2, (r * n) as i128);
    rep.push(
        "E[S'-S | ranking] = -(2/(rn)) S",
        r,
        Some(n),
        bad == 0,
        format!("{} of {checked} configurations violate", bad),
        format!("coefficient {coefficient}"),
    );
    if zero_configs > 0 {
        rep.push(
            "S = 0 configurations have zero mean displacement",
            r,
            Some(n),
            bad == 0,
            format!("{zero_configs} configurations"),
            "0",
        );
    }
    Ok(rep)
}

/// Exact `E[(S′_j − S_j)(S′_u − S_u)]` over all configurations and draws.
pub fn exact_increment_covariance(r: usize, n: usize) -> Result<Vec<Vec<Rational>>> {
    check_ranges(r, n, 5, 4)?;
    let (count, sums) = fold_configurations(
        r,
        n,
        (n * r * r) as u64,
        || (0i128, vec![0i128; r * r]),
        |acc, cfg| {
            for m in 0..n {
                let row = cfg.doubled_row(m);
                for k in 0..r {
                    for l in 0..r {
                        acc.0 += 1;
                        if k == l {
                            continue;
                        }
                        let (dk, dl) = doubled_increment(row, k, l);
                        let (dk, dl) = (dk as i128, dl as i128);
                        acc.1[k * r + k] += dk * dk;
                        acc.1[l * r + l] += dl * dl;
                        acc.1[k * r + l] += dk * dl;
                        acc.1[l * r + k] += dk * dl;
                    }
                }
            }
        },
        |mut a, b| {
            a.0 += b.0;
            for (x, y) in a.1.iter_mut().zip(&b.1) {
                *x += y;
            }
            a
        },
    )?;
    // S = (c/2) C with (c/2)² = κ.
    let k = kappa(r, n);
    Ok((0..r)
        .map(|j| (0..r).map(|u| &k * int(sums[j * r + u]) / int(count)).collect())
        .collect())
}

/// `E[(S′_j − S_j)(S′_u − S_u)] = 4σ_ju/(rn)`: `4(r−1)/(r²n)` on the diagonal, `−4/(r²n)` off it.
pub fn verify_increment_moments(r: usize, n: usize) -> Result<Report> {
    let cov = exact_increment_covariance(r, n)?;
    let (ri, ni) = (r as i128, n as i128);
    let mut rep = Report::new();
    let diag = rat(4 * (ri - 1), ri * ri * ni);
    let off = rat(-4, ri * ri * ni);
    let diag_ok = (0..r).all(|j| cov[j][j] == diag);
    let off_ok = (0..r).all(|j| (0..r).all(|u| u == j || cov[j][u] == off));
    rep.push("E[(S'_j-S_j)^2] = 4(r-1)/(r^2 n)", r, Some(n), diag_ok, &cov[0][0], &diag);
    rep.push("E[(S'_j-S_j)(S'_u-S_u)] = -4/(r^2 n)", r, Some(n), off_ok, &cov[0][1], &off);
    Ok(rep)
}

#[derive(Default, Clone)]
struct TripleTally {
    draws: u64,
    outside_nonzero: u64,
    quartic_mismatch: u64,
    quartic_three_one: u64,
    cubic_mismatch: u64,
    cubic_all_l: u64,
}

impl TripleTally {
    fn merge(mut self, o: TripleTally) -> TripleTally {
        self.draws += o.draws;
        self.outside_nonzero += o.outside_nonzero;
        self.quartic_mismatch += o.quartic_mismatch;
        self.quartic_three_one += o.quartic_three_one;
        self.cubic_mismatch += o.cubic_mismatch;
        self.cubic_all_l += o.cubic_all_l;
        self
    }
}

/// Checks every product of three and four increments on every draw against the indicator forms:
/// with `d = ρ_m(l) − ρ_m(k)`, quartic products equal `c⁴d⁴` when all four indices agree in
/// `{k, l}` or each of `k`, `l` appears twice, and cubic products equal `c³d³` times
/// `+1` (all `k`), `−1` (two `k`, one `l`), `+1` (two `l`, one `k`). Products with any index outside
/// `{k, l}` vanish. Two shapes fall outside those forms and are tallied as notes: three-and-one
/// quartic patterns equal `−c⁴d⁴`, and the all-`l` cubic pattern equals `−c³d³`.
pub fn verify_triple_structure(r: usize, n: usize) -> Result<Report> {
    check_ranges(r, n, 4, 3)?;
    let tally = fold_configurations(
        r,
        n,
        (n * r * r) as u64,
        TripleTally::default,
        |t, cfg| {
            for m in 0..n {
                let row = cfg.doubled_row(m);
                for k in 0..r {
                    for l in 0..r {
                        t.draws += 1;
                        let mut delta = vec![0i64; r];
                        let d = row[l] - row[k];
                        if k != l {
                            let (dk, dl) = doubled_increment(row, k, l);
                            delta[k] = dk;
                            delta[l] = dl;
                        }
                        check_draw(t, &delta, k, l, d);
                    }
                }
            }
        },
        TripleTally::merge,
    )?;
    let mut rep = Report::new();
    let nn = Some(n);
    rep.push(
        "increment products vanish off {K,L}",
        r,
        nn,
        tally.outside_nonzero == 0,
        format!("{} nonzero of {} draws", tally.outside_nonzero, tally.draws),
        "0",
    );
    rep.push(
        "quartic products on all-equal and each-twice patterns = c^4 d^4",
        r,
        nn,
        tally.quartic_mismatch == 0,
        format!("{} mismatches", tally.quartic_mismatch),
        "0",
    );
    rep.push(
        "cubic products on the signed patterns",
        r,
        nn,
        tally.cubic_mismatch == 0,
        format!("{} mismatches", tally.cubic_mismatch),
        "0",
    );
    rep.note(
        "quartic three-and-one patterns equal -c^4 d^4 (absent from the displayed indicator)",
        r,
        nn,
        format!("{} draws with nonzero value", tally.quartic_three_one),
        "display implies 0",
    );
    rep.note(
        "cubic pattern j=u=v=L equals -c^3 d^3 (displayed with + sign)",
        r,
        nn,
        format!("{} draws with nonzero value", tally.cubic_all_l),
        "display implies +c^3 d^3",
    );
    Ok(rep)
}

fn check_draw(t: &mut TripleTally, delta: &[i64], k: usize, l: usize, d: i64) {
    let r = delta.len();
    let inside = |i: usize| k != l && (i == k || i == l);
    // Products in doubled units: each increment is (c/2)·delta, and delta_k = d, delta_l = −d.
    let d3 = d * d * d;
    let d4 = d3 * d;
    for j in 0..r {
        for u in 0..r {
            for v in 0..r {
                let p3 = delta[j] * delta[u] * delta[v];
                let idx3 = [j, u, v];
                if !idx3.iter().all(|&i| inside(i)) {
                    if p3 != 0 {
                        t.outside_nonzero += 1;
                    }
                } else {
                    let nk = idx3.iter().filter(|&&i| i == k).count();
                    match nk {
                        3 | 1 => {
                            if p3 != d3 {
                                t.cubic_mismatch += 1;
                            }
                        }
                        2 => {
                            if p3 != -d3 {
                                t.cubic_mismatch += 1;
                            }
                        }
                        _ => {
                            if p3 != 0 {
                                t.cubic_all_l += 1;
                            }
                            if p3 != -d3 {
                                t.cubic_mismatch += 1;
                            }
                        }
                    }
                }
                for (w, &dw) in delta.iter().enumerate() {
                    let p4 = p3 * dw;
                    let idx = [j, u, v, w];
                    if !idx.iter().all(|&i| inside(i)) {
                        if p4 != 0 {
                            t.outside_nonzero += 1;
                        }
                        continue;
                    }
                    let nk = idx.iter().filter(|&&i| i == k).count();
                    match nk {
                        0 | 2 | 4 => {
                            if p4 != d4 {
                                t.quartic_mismatch += 1;
                            }
                        }
                        _ => {
                            if p4 != 0 {
                                t.quartic_three_one += 1;
                            }
                            if p4 != -d4 {
                                t.quartic_mismatch += 1;
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Over all configurations and draws, the joint histogram of `(F_r, F′_r)` is symmetric.
pub fn verify_exchangeability(r: usize, n: usize) -> Result<Report> {
    check_ranges(r, n, 5, 4)?;
    let hist = fold_configurations(
        r,
        n,
        (n * r * r) as u64,
        HashMap::<(i64, i64), u64>::new,
        |h, cfg| {
            let sums = cfg.doubled_sums();
            let q: i64 = sums.iter().map(|c| c * c).sum();
            for m in 0..n {
                let row = cfg.doubled_row(m);
                for k in 0..r {
                    for l in 0..r {
                        let q2 = if k == l {
                            q
                        } else {
                            let (dk, dl) = doubled_increment(row, k, l);
                            q + 2 * sums[k] * dk + dk * dk + 2 * sums[l] * dl + dl * dl
                        };
                        *h.entry((q, q2)).or_insert(0) += 1;
                    }
                }
            }
        },
        |mut a, b| {
            for (key, v) in b {
                *a.entry(key).or_insert(0) += v;
            }
            a
        },
    )?;
    let asymmetric = hist.iter().filter(|(&(a, b), &v)| hist.get(&(b, a)).copied().unwrap_or(0) != v).count();
    let mut rep = Report::new();
    rep.push(
        "joint histogram of (F, F') is symmetric",
        r,
        Some(n),
        asymmetric == 0,
        format!("{asymmetric} asymmetric cells of {}", hist.len()),
        "0",
    );
    Ok(rep)
}

/// `E[Sᵀ∇g(S)] = (rn/4) E[(S′−S)ᵀ(∇g(S′) − ∇g(S))]` exactly, for `g = (Σs²)²` and `g = Σs³`.
/// Also records, as a note, the left side `E[∇ᵀΣ∇g − Sᵀ∇g]` for the quartic `g`.
pub fn verify_pair_identity(r: usize, n: usize) -> Result<Report> {
    check_ranges(r, n, 5, 4)?;
    // Doubled units: S = aC with a² = κ. For g = (Σs²)² both sides carry 4κ²; for g = Σs³ they
    // carry 3a³. What remains are integer sums.
    let (count, lhs4, rhs4, lhs3, rhs3) = fold_configurations(
        r,
        n,
        (n * r * r) as u64,
        || (0i128, 0i128, 0i128, 0i128, 0i128),
        |acc, cfg| {
            let c = cfg.doubled_sums();
            let q: i128 = c.iter().map(|&x| (x * x) as i128).sum();
            let cube: i128 = c.iter().map(|&x| (x * x * x) as i128).sum();
            for m in 0..n {
                let row = cfg.doubled_row(m);
                for k in 0..r {
                    for l in 0..r {
                        acc.0 += 1;
                        acc.1 += q * q;
                        acc.3 += cube;
                        if k == l {
                            continue;
                        }
                        let (dk, dl) = doubled_increment(row, k, l);
                        let (ck, cl) = (c[k] as i128, c[l] as i128);
                        let (dk, dl) = (dk as i128, dl as i128);
                        let (nk, nl) = (ck + dk, cl + dl);
                        let q2 = q - ck * ck - cl * cl + nk * nk + nl * nl;
                        // Only coordinates k and l move, so δ·(Q′C′ − QC) has two terms.
                        acc.2 += dk * (q2 * nk - q * ck) + dl * (q2 * nl - q * cl);
                        acc.4 += dk * (nk * nk - ck * ck) + dl * (nl * nl - cl * cl);
                    }
                }
            }
        },
        |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2, a.3 + b.3, a.4 + b.4),
    )?;
    let rn4 = rat((r * n) as i128, 4);
    let total = int(count);
    let mut rep = Report::new();
    let l4 = int(lhs4) / &total;
    let r4 = &rn4 * int(rhs4) / &total;
    rep.push("pair identity, g = (Σs^2)^2", r, Some(n), l4 == r4, &l4, &r4);
    let l3 = int(lhs3) / &total;
    let r3 = &rn4 * int(rhs3) / &total;
    rep.push("pair identity, g = Σs^3", r, Some(n), l3 == r3, &l3, &r3);
    // ∇ᵀΣ∇g = 4(r+1)Σs² when Σs = 0, so E[∇ᵀΣ∇g − Sᵀ∇g] = 4(r+1)E[F] − 4E[F²].
    let k = kappa(r, n);
    let e_f2 = &k * &k * &l4;
    let printed_lhs = int(4 * (r as i128 + 1) * (r as i128 - 1)) - int(4) * &e_f2;
    let half_rhs = int(4) * &e_f2;
    rep.note("E[∇'Σ∇g - S'∇g] vs the half-increment side, g = (Σs^2)^2", r, Some(n), &printed_lhs, &half_rhs);
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::Status;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hand_examples() {
        let ranks = RankMatrix::from_rows(&[vec![1, 2]]).unwrap();
        let p = pair_for(&ranks, 0, 0, 1).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((p.base.s[0] + h).abs() < 1e-15 && (p.base.s[1] - h).abs() < 1e-15);
        assert!((p.swapped.s[0] - h).abs() < 1e-15 && (p.swapped.s[1] + h).abs() < 1e-15);
        let p = pair_for(&ranks, 0, 1, 1).unwrap();
        assert_eq!(p.base, p.swapped);
        assert!(pair_for(&ranks, 1, 0, 0).is_err());
    }

    #[test]
    fn sampled_pairs_keep_zero_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ranks = RankMatrix::from_rows(&[vec![3, 1, 4, 2], vec![1, 2, 3, 4], vec![4, 3, 2, 1]]).unwrap();
        for _ in 0..1000 {
            let p = sample_pair(&ranks, &mut rng);
            let (_, k, l) = p.indices;
            assert!(p.swapped.s.iter().sum::<f64>().abs() < 1e-12);
            let dk = p.swapped.s[k] - p.base.s[k];
            let dl = p.swapped.s[l] - p.base.s[l];
            assert!((dk + dl).abs() < 1e-12);
            for j in (0..4).filter(|&j| j != k && j != l) {
                assert_eq!(p.swapped.s[j], p.base.s[j]);
            }
        }
    }

    #[test]
    fn regression_and_moments_examples() {
        for (r, n) in [(2, 1), (3, 2), (4, 3), (5, 2)] {
            let rep = verify_regression(r, n).unwrap();
            assert!(rep.all_pass(), "{:?}", rep);
            assert!(verify_increment_moments(r, n).unwrap().all_pass());
        }
        assert_eq!(verify_regression(3, 2).unwrap().entries[0].rhs, "coefficient -1/3");
        assert!(verify_regression(2, 2).unwrap().entries.len() == 2);
        let cov = exact_increment_covariance(2, 1).unwrap();
        assert_eq!(cov[0][0], int(1));
        assert_eq!(cov[0][1], int(-1));
        let cov = exact_increment_covariance(3, 2).unwrap();
        assert_eq!(cov[0][1], rat(-2, 9));
    }

    #[test]
    fn triple_structure() {
        for (r, n) in [(2, 1), (3, 2), (4, 1)] {
            let rep = verify_triple_structure(r, n).unwrap();
            assert!(rep.all_pass(), "{:?}", rep);
            assert_eq!(rep.count(Status::Note), 2);
        }
    }

    #[test]
    fn exchangeable_and_pair_identity() {
        for (r, n) in [(2, 3), (3, 2), (4, 2)] {
            assert!(verify_exchangeability(r, n).unwrap().all_pass());
            let rep = verify_pair_identity(r, n).unwrap();
            assert!(rep.all_pass(), "{:?}", rep);
        }
    }

    #[test]
    fn lambda() {
        let l = LambdaMatrix::new(4, 3);
        assert!((l.scale - 1.0 / 6.0).abs() < 1e-15);
        assert!((l.inverse_scale() - 6.0).abs() < 1e-12);
    }
}
