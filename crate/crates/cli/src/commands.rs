use std::fmt;
use std::path::Path;

use friedman_core::bounds::{bound_kolmogorov, bound_prop14, bound_report, BoundReport, Prop14Kind, SmoothNorms};
use friedman_core::chisq::ChiSquareLaw;
use friedman_core::coupling::{
    verify_exchangeability, verify_increment_moments, verify_pair_identity, verify_regression, verify_triple_structure,
};
use friedman_core::exact::enumerate::{check_budget, configuration_count};
use friedman_core::exact::{
    exact_law, verify_index_decomposition, verify_inequalities, verify_lemma_formulas, verify_remark13,
};
use friedman_core::montecarlo::{
    estimate_kolmogorov, estimate_wasserstein_r2, exact_smooth_gap, mc_smooth_gap, rate_experiment, wasserstein_to_chisq,
    within_budget, DistanceEstimate, Method, RateMode, RateTable,
};
use friedman_core::ranks::{center, parse_csv, score_vector, InputFormat};
use friedman_core::report::{CheckEntry, Report, Status};
use friedman_core::stein::{default_grid, derivative_bound_check, verify_lemma21, verify_residuals};
use friedman_core::testfn::{Cosine, Power, Sine, TestFunction};
use friedman_core::Error;
use serde::Serialize;

use crate::output::{json_line, opt};
use crate::{BoundsArgs, DistanceArgs, Format, Metric, Mode, RateArgs, RateFunction, Suite, VerifyArgs};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or a request outside what the library supports: exit 2.
    Usage(String),
    /// Unreadable or malformed input: exit 3.
    Input(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Input(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Tie { .. } | Error::NonFinite { .. } | Error::NotPermutation { .. } | Error::Parse(_) => {
                CliError::Input(e.to_string())
            }
            _ => CliError::Usage(e.to_string()),
        }
    }
}

type CliResult = Result<bool, CliError>;

#[derive(Debug, Serialize)]
struct TestReport {
    n: usize,
    r: usize,
    statistic: f64,
    scores: Vec<f64>,
    p_value: f64,
    kolmogorov_bound: f64,
    kolmogorov_bound_raw: f64,
    certified_p_interval: [f64; 2],
    smooth_bounds_unit_norms: BoundReport,
}

pub fn test(path: &Path, format: Format, json: bool) -> CliResult {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let format = match format {
        Format::Scores => InputFormat::Scores,
        Format::Ranks => InputFormat::Ranks,
    };
    let ranks = parse_csv(&text, format)?;
    let (n, r) = (ranks.n(), ranks.r());
    let scores = score_vector(&center(&ranks));
    let p_value = ChiSquareLaw::new(r as u32 - 1)?.sf(scores.f_r.max(0.0))?;
    let raw = bound_kolmogorov(n, r)?;
    let d = raw.min(1.0);
    let report = TestReport {
        n,
        r,
        statistic: scores.f_r,
        scores: scores.s,
        p_value,
        kolmogorov_bound: d,
        kolmogorov_bound_raw: raw,
        certified_p_interval: [(p_value - d).max(0.0), (p_value + d).min(1.0)],
        smooth_bounds_unit_norms: bound_report(n, r, SmoothNorms::unit())?,
    };
    if json {
        json_line(&report);
    } else {
        println!("Friedman test: n = {n} trials, r = {r} treatments");
        println!("statistic F_r      {:.6}", report.statistic);
        println!("p-value (chi2_{})   {:.6}", r - 1, report.p_value);
        println!("Kolmogorov bound   {:.6} (raw {:.6})", d, raw);
        println!(
            "certified p-value  [{:.6}, {:.6}]",
            report.certified_p_interval[0], report.certified_p_interval[1]
        );
    }
    Ok(true)
}

pub fn bounds(args: &BoundsArgs, json: bool) -> CliResult {
    let rep = bound_report(args.n, args.r, SmoothNorms::new(args.h1, args.h2, args.h3))?;
    if json {
        json_line(&rep);
    } else {
        println!("n = {}, r = {}, norms (h1, h2, h3) = ({}, {}, {})", rep.n, rep.r, args.h1, args.h2, args.h3);
        println!("compact          {}", opt(rep.compact));
        println!("sharp            {}", opt(rep.sharp));
        println!("trivial          {}", opt(rep.trivial));
        if rep.r == 2 {
            println!("wasserstein r=2  {}", opt(rep.wasserstein_r2));
            println!("smooth r=2       {}", opt(rep.smooth_r2));
        }
        println!("selected         {}", opt(rep.selected));
        println!("kolmogorov       {:.6} (raw {:.6})", rep.kolmogorov, rep.kolmogorov_raw);
        if let Some(c) = rep.coefficients {
            println!(
                "coefficients     A_n {:.4}, B_n {:.4}, C_T {:.4}, beta (β1, β2, β3) = ({:.4}, {:.4}, {:.4})",
                c.a_n, c.b_n, c.c_t, c.beta1, c.beta2, c.beta3
            );
        }
        println!("jensen           {}", rep.jensen);
    }
    Ok(true)
}

#[derive(Serialize)]
struct SuiteLine<'a, T: Serialize> {
    suite: &'static str,
    #[serde(flatten)]
    entry: &'a T,
}

#[derive(Serialize)]
struct Skipped {
    identity: String,
    r: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    status: &'static str,
    reason: String,
}

struct Sink {
    json: bool,
    failed: usize,
    passed: usize,
    notes: usize,
    skipped: usize,
}

impl Sink {
    fn entry(&mut self, suite: &'static str, e: &CheckEntry) {
        match e.status {
            Status::Pass => self.passed += 1,
            Status::Fail => self.failed += 1,
            Status::Note => self.notes += 1,
        }
        if self.json {
            json_line(&SuiteLine { suite, entry: e });
        } else {
            println!("[{suite}] {e}");
        }
    }

    fn report(&mut self, suite: &'static str, rep: &Report) {
        for e in &rep.entries {
            self.entry(suite, e);
        }
    }

    fn skip(&mut self, suite: &'static str, identity: &str, r: usize, n: Option<usize>, reason: String) {
        self.skipped += 1;
        let s = Skipped { identity: identity.to_string(), r, n, status: "skipped", reason };
        if self.json {
            json_line(&SuiteLine { suite, entry: &s });
        } else {
            let n = n.map(|n| format!(" n={n}")).unwrap_or_default();
            println!("[{suite}] SKIP {} r={}{n}: {}", s.identity, s.r, s.reason);
        }
    }

    /// Records a result, turning budget and range errors into skipped entries.
    fn outcome(&mut self, suite: &'static str, identity: &str, r: usize, n: Option<usize>, res: friedman_core::Result<Report>) -> Result<(), CliError> {
        match res {
            Ok(rep) => {
                self.report(suite, &rep);
                Ok(())
            }
            Err(e @ (Error::Budget { .. } | Error::Domain(_))) => {
                self.skip(suite, identity, r, n, e.to_string());
                Ok(())
            }
            Err(e) => Err(e.into()),
        }
    }
}

fn run_lemmas(sink: &mut Sink, args: &VerifyArgs) -> Result<(), CliError> {
    let r_top = args.r_max.min(10);
    if r_top < 2 {
        return Ok(());
    }
    sink.report("lemmas", &verify_lemma_formulas(r_top, args.n_max)?);
    for r in 2..=r_top {
        for n in 1..=args.n_max {
            if let Err(e) = check_budget(configuration_count(r, n)) {
                sink.skip("lemmas", "joint moment formulas", r, Some(n), e.to_string());
            }
        }
    }
    for r in (r_top + 1)..=args.r_max {
        sink.skip("lemmas", "single-trial formulas", r, None, "exact tables support r <= 10".into());
    }
    sink.report("lemmas", &verify_inequalities(r_top)?);
    Ok(())
}

fn run_coupling(sink: &mut Sink, args: &VerifyArgs) -> Result<(), CliError> {
    for r in 2..=args.r_max {
        for n in 1..=args.n_max {
            let nn = Some(n);
            sink.outcome("coupling", "regression", r, nn, verify_regression(r, n))?;
            sink.outcome("coupling", "increment covariance", r, nn, verify_increment_moments(r, n))?;
            sink.outcome("coupling", "vanishing patterns", r, nn, verify_triple_structure(r, n))?;
            sink.outcome("coupling", "exchangeability", r, nn, verify_exchangeability(r, n))?;
            sink.outcome("coupling", "pair identity", r, nn, verify_pair_identity(r, n))?;
        }
    }
    Ok(())
}

fn run_stein(sink: &mut Sink, args: &VerifyArgs) -> Result<(), CliError> {
    let funcs: [&dyn TestFunction; 3] = [&Cosine { t: 1.0 }, &Sine { t: 1.0 }, &Power { k: 1 }];
    for r in 2..=args.r_max {
        let p = (r - 1) as u32;
        let grid = default_grid(p);
        for h in funcs {
            sink.report("stein", &verify_residuals(p, h, &grid, 1e-5)?);
            for k in 1..=4 {
                sink.report("stein", &derivative_bound_check(p, h, k, &grid)?);
            }
        }
        for n in 1..=args.n_max {
            sink.outcome("stein", "two-path identity", r, Some(n), verify_lemma21(r, n, &Cosine { t: 1.0 }))?;
        }
    }
    Ok(())
}

fn run_identities(sink: &mut Sink, args: &VerifyArgs) -> Result<(), CliError> {
    for r in 2..=args.r_max {
        let seed = args.seed.wrapping_add(r as u64);
        sink.outcome("identities", "index decomposition", r, None, verify_index_decomposition(r, 100, seed))?;
    }
    sink.report("identities", &verify_remark13(6)?);
    Ok(())
}

pub fn verify(args: &VerifyArgs, json: bool) -> CliResult {
    let mut sink = Sink { json, failed: 0, passed: 0, notes: 0, skipped: 0 };
    let all = args.suite == Suite::All;
    if all || args.suite == Suite::Lemmas {
        run_lemmas(&mut sink, args)?;
    }
    if all || args.suite == Suite::Coupling {
        run_coupling(&mut sink, args)?;
    }
    if all || args.suite == Suite::Stein {
        run_stein(&mut sink, args)?;
    }
    if all || args.suite == Suite::Identities {
        run_identities(&mut sink, args)?;
    }
    if !json {
        println!(
            "{} passed, {} failed, {} notes, {} skipped",
            sink.passed, sink.failed, sink.notes, sink.skipped
        );
    }
    Ok(sink.failed == 0)
}

#[derive(Debug, Serialize)]
struct DistanceReport {
    r: usize,
    n: usize,
    metric: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    estimate: DistanceEstimate,
    bound: Option<f64>,
    within_bound: Option<bool>,
}

fn use_exact(mode: Mode, n: usize, r: usize) -> Result<bool, CliError> {
    match mode {
        Mode::Exact => {
            if !within_budget(n, r) {
                check_budget(configuration_count(r, n))?;
            }
            Ok(true)
        }
        Mode::Mc => Ok(false),
        Mode::Auto => Ok(within_budget(n, r)),
    }
}

fn exact_estimate(value: f64) -> DistanceEstimate {
    DistanceEstimate { value, half_width: 0.0, samples: 0, method: Method::ExactEnumeration }
}

pub fn distance(args: &DistanceArgs, json: bool) -> CliResult {
    let (r, n) = (args.r, args.n);
    if r < 2 || n < 1 {
        return Err(CliError::Usage("distance needs r >= 2 and n >= 1".into()));
    }
    let exact = use_exact(args.mode, n, r)?;
    let (metric, t, estimate, bound) = match args.metric {
        Metric::Kolmogorov => {
            let est = if exact {
                exact_estimate(exact_law(r, n)?.kolmogorov_to_chisq()?)
            } else {
                estimate_kolmogorov(n, r, args.samples, args.seed)?
            };
            ("kolmogorov", None, est, Some(bound_kolmogorov(n, r)?.min(1.0)))
        }
        Metric::Wasserstein => {
            if r != 2 {
                return Err(CliError::Usage("the Wasserstein metric is only available for r = 2".into()));
            }
            let est = if exact {
                let law = ChiSquareLaw::new(1)?;
                exact_estimate(wasserstein_to_chisq(&exact_law(2, n)?.atoms_f64(), &law)?)
            } else {
                estimate_wasserstein_r2(n, args.samples, args.seed)?
            };
            ("wasserstein", None, est, Some(bound_prop14(n, Prop14Kind::Wasserstein, SmoothNorms::unit())?))
        }
        Metric::Cos | Metric::Sin => {
            let h: Box<dyn TestFunction> = if args.metric == Metric::Cos {
                Box::new(Cosine { t: args.t })
            } else {
                Box::new(Sine { t: args.t })
            };
            let est = if exact {
                exact_estimate(exact_smooth_gap(n, r, h.as_ref())?)
            } else {
                mc_smooth_gap(n, r, h.as_ref(), args.samples, args.seed)?
            };
            let name = if args.metric == Metric::Cos { "cos" } else { "sin" };
            (name, Some(args.t), est, bound_report(n, r, h.norms().smooth())?.selected)
        }
    };
    let within_bound = bound.map(|b| estimate.value - estimate.half_width <= b);
    let report = DistanceReport {
        r,
        n,
        metric,
        t,
        seed: (estimate.method == Method::MonteCarlo).then_some(args.seed),
        estimate,
        bound,
        within_bound,
    };
    if json {
        json_line(&report);
    } else {
        let method = match estimate.method {
            Method::ExactEnumeration => "exact law".to_string(),
            Method::MonteCarlo => format!("Monte Carlo, {} samples", estimate.samples),
        };
        println!("{metric} distance, r = {r}, n = {n} ({method})");
        println!("estimate  {:.6} ± {:.6} (99%)", estimate.value, estimate.half_width);
        println!("bound     {}", opt(bound));
    }
    Ok(within_bound != Some(false))
}

pub fn rate(args: &RateArgs, json: bool) -> CliResult {
    let h: Box<dyn TestFunction> = match args.h {
        RateFunction::X => Box::new(Power { k: 1 }),
        RateFunction::X2 => Box::new(Power { k: 2 }),
        RateFunction::Cos => Box::new(Cosine { t: args.t }),
        RateFunction::Sin => Box::new(Sine { t: args.t }),
    };
    let mode = match args.mode {
        Mode::Exact => RateMode::Exact,
        Mode::Auto => RateMode::Auto { samples: args.samples, seed: args.seed },
        Mode::Mc => RateMode::MonteCarlo { samples: args.samples, seed: args.seed },
    };
    let table: RateTable = rate_experiment(args.r, &args.n, h.as_ref(), mode)?;
    if json {
        json_line(&table);
    } else {
        println!("r = {}, h = {}", table.r, table.h);
        println!("{:>8} {:>14} {:>14} {:>12} {:>14} {:>8}", "n", "gap", "n*gap", "±", "selected", "ok");
        for row in &table.rows {
            let ok = match row.within_bound {
                Some(true) => "yes",
                Some(false) => "NO",
                None => "-",
            };
            let pm = match row.method {
                Method::ExactEnumeration => "exact".to_string(),
                Method::MonteCarlo => format!("{:.2e}", row.half_width),
            };
            println!(
                "{:>8} {:>14.8} {:>14.8} {:>12} {:>14} {:>8}",
                row.n,
                row.gap,
                row.n_gap,
                pm,
                opt(row.bounds.selected),
                ok
            );
        }
    }
    Ok(table.all_within())
}
