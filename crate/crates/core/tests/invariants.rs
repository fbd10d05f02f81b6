use friedman_core::bounds::{bound_kolmogorov, bound_prop14, bound_report, Prop14Kind, SmoothNorms};
use friedman_core::chisq::ChiSquareLaw;
use friedman_core::coupling::sample_pair;
use friedman_core::exact::rational::to_f64;
use friedman_core::exact::{exact_joint_moments, fold_configurations};
use friedman_core::montecarlo::{
    estimate_kolmogorov, estimate_wasserstein_r2, exact_smooth_gap, sample_q_histogram, sample_rank_matrix,
    smoothing_function, RngContract,
};
use friedman_core::ranks::{center, score_vector, RankMatrix};
use friedman_core::stein::solve_fprime;
use friedman_core::testfn::{Cosine, Shifted, Sine, TestFunction};
use proptest::prelude::*;

#[test]
fn enumerated_moments_match_float_path() {
    for (r, n) in [(3, 3), (4, 2), (2, 6)] {
        let (count, f_sum, f2_sum) = fold_configurations(
            r,
            n,
            1,
            || (0u64, 0.0f64, 0.0f64),
            |acc, cfg| {
                let rows: Vec<Vec<u32>> = (0..n).map(|i| cfg.ranks_row(i)).collect();
                let f = score_vector(&center(&RankMatrix::from_rows(&rows).unwrap())).f_r;
                acc.0 += 1;
                acc.1 += f;
                acc.2 += f * f;
            },
            |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2),
        )
        .unwrap();
        let m = exact_joint_moments(r, n).unwrap();
        let (ef, ef2) = (f_sum / count as f64, f2_sum / count as f64);
        assert!((ef / to_f64(&m.f) - 1.0).abs() < 1e-10, "r={r} n={n}");
        assert!((ef2 / to_f64(&m.f2) - 1.0).abs() < 1e-10, "r={r} n={n}");
    }
}

#[test]
fn coupling_regression_monte_carlo() {
    let (r, n, draws) = (6usize, 50usize, 1_000_000u64);
    let mut rng = RngContract::new(42, 0).rng();
    let coef = 2.0 / (r * n) as f64;
    let mut sum = vec![0.0; r];
    let mut sum_sq = vec![0.0; r];
    for _ in 0..draws {
        let ranks = sample_rank_matrix(n, r, &mut rng).unwrap();
        let pair = sample_pair(&ranks, &mut rng);
        for j in 0..r {
            let d = pair.swapped.s[j] - pair.base.s[j] + coef * pair.base.s[j];
            sum[j] += d;
            sum_sq[j] += d * d;
        }
    }
    for j in 0..r {
        let mean = sum[j] / draws as f64;
        let var = sum_sq[j] / draws as f64 - mean * mean;
        let se = (var / draws as f64).sqrt();
        assert!(mean.abs() <= 5.0 * se, "component {j}: {mean} vs se {se}");
    }
}

#[test]
fn sampling_is_independent_of_thread_count() {
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| sample_q_histogram(20, 4, 100_000, 9).unwrap())
    };
    assert_eq!(run(1), run(4));
    let a = estimate_kolmogorov(30, 3, 50_000, 5).unwrap();
    let b = estimate_kolmogorov(30, 3, 50_000, 5).unwrap();
    assert_eq!(a.value.to_bits(), b.value.to_bits());
}

#[test]
fn r3_rows_are_uniform() {
    let draws = 1_000_000usize;
    let m = sample_rank_matrix(draws, 3, &mut RngContract::new(3, 1).rng()).unwrap();
    let mut counts = [0f64; 6];
    for row in m.rows() {
        // A permutation of 1..=3 is fixed by its first two entries.
        let idx = match (row[0], row[1]) {
            (1, 2) => 0,
            (1, 3) => 1,
            (2, 1) => 2,
            (2, 3) => 3,
            (3, 1) => 4,
            _ => 5,
        };
        counts[idx] += 1.0;
    }
    let expected = draws as f64 / 6.0;
    let stat: f64 = counts.iter().map(|c| (c - expected).powi(2) / expected).sum();
    let p = ChiSquareLaw::new(5).unwrap().sf(stat).unwrap();
    assert!(p >= 1e-6, "stat {stat}, p {p}");
}

#[test]
fn kolmogorov_estimates_stay_below_bound() {
    for (r, n) in [(2, 30), (3, 20), (4, 60), (6, 400)] {
        let est = estimate_kolmogorov(n, r, 100_000, 17).unwrap();
        let bound = bound_kolmogorov(n, r).unwrap().min(1.0);
        assert!(est.value <= bound + est.half_width, "r={r} n={n}");
    }
}

#[test]
fn wasserstein_r2_below_bound() {
    let est = estimate_wasserstein_r2(400, 200_000, 21).unwrap();
    let bound = bound_prop14(400, Prop14Kind::Wasserstein, SmoothNorms::unit()).unwrap();
    assert!((bound - 4.47).abs() < 1e-9);
    assert!(est.value <= bound);
    assert!(est.value < 0.1, "{}", est.value);
}

#[test]
fn exact_gaps_below_every_bound() {
    let cases: &[(usize, &[usize])] = &[(2, &[1, 2, 5, 10, 16]), (3, &[1, 2, 4, 7]), (4, &[1, 2, 4]), (5, &[1, 2, 3])];
    let smooth = smoothing_function(1.5, 2.0).unwrap();
    let funcs: Vec<Box<dyn TestFunction>> =
        vec![Box::new(Cosine { t: 1.0 }), Box::new(Sine { t: 0.5 }), Box::new(Cosine { t: 3.0 }), Box::new(smooth)];
    for &(r, ns) in cases {
        for &n in ns {
            for h in &funcs {
                let gap = exact_smooth_gap(n, r, h.as_ref()).unwrap();
                let rep = bound_report(n, r, h.norms().smooth()).unwrap();
                for b in [rep.compact, rep.sharp, rep.trivial, rep.smooth_r2].into_iter().flatten() {
                    assert!(gap <= b, "r={r} n={n} h={}: {gap} > {b}", h.label());
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sampled_pairs_keep_zero_sum(seed in any::<u64>(), n in 1usize..20, r in 2usize..9) {
        let mut rng = RngContract::new(seed, 0).rng();
        let ranks = sample_rank_matrix(n, r, &mut rng).unwrap();
        let pair = sample_pair(&ranks, &mut rng);
        prop_assert!(pair.swapped.s.iter().sum::<f64>().abs() <= 1e-12 * r as f64);
    }

    #[test]
    fn fprime_is_shift_invariant(p in 1u32..=10, x in 0.05f64..40.0, c in -5.0f64..5.0) {
        let a = solve_fprime(p, &Cosine { t: 0.7 }, x, 1e-12).unwrap();
        let b = solve_fprime(p, &Shifted { inner: Cosine { t: 0.7 }, c }, x, 1e-12).unwrap();
        prop_assert!((a - b).abs() <= 1e-9);
    }

    #[test]
    fn same_contract_same_matrix(seed in any::<u64>(), stream in 0u64..1000) {
        let a = sample_rank_matrix(7, 5, &mut RngContract::new(seed, stream).rng()).unwrap();
        let b = sample_rank_matrix(7, 5, &mut RngContract::new(seed, stream).rng()).unwrap();
        prop_assert_eq!(a, b);
    }
}
