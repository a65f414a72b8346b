//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the process exits non-zero if any criterion fails.

use std::time::{Duration, Instant};

use adoe_core::acquisition::ei_min;
use adoe_core::designgen::ccd;
use adoe_core::engine::{Campaign, CampaignStatus, Mode};
use adoe_core::gp::{GpModel, KernelSpec, Smoothness, TargetScaling};
use adoe_core::linmodel::{anova, fit, ModelSpec, Term};
use adoe_core::moo::{
    composite_desirability, crowding_distance, desirability_min, dominates, fast_nondominated_sort,
    maximize_desirability, nsga2, DesirabilitySpec, Evaluator, Nsga2Config,
};
use adoe_core::plant::{grid_minimum, ccd_runs, PlantOracle};
use adoe_core::rng::seeded;
use adoe_core::simulate::{default_config, sweep};
use adoe_core::stats::f_cdf;
use adoe_core::DesignSpace;
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within_budget(o: Outcome, elapsed: Duration, budget: Duration) -> Outcome {
    let ok = elapsed <= budget;
    check(
        o.pass && ok,
        format!("{}; {:.2?} (budget {:?})", o.detail, elapsed, budget),
    )
}

fn coded_ccd_runs() -> (DesignSpace, Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
    let space = DesignSpace::injection_moulding();
    let t = ccd_runs();
    let coded = t.settings.iter().map(|r| space.to_coded(r).unwrap()).collect();
    (space, coded, t.response_column(0), t.response_column(1))
}

fn criterion_1() -> Outcome {
    let t = ccd_runs();
    let design: Vec<Vec<f64>> = t.settings.iter().map(|r| vec![r[1], r[2]]).collect();
    let cycle = t.response_column(1);
    let m = fit(&design, &cycle, &ModelSpec::linear(2)).unwrap();
    let c = &m.coefficients;
    let max_res = design
        .iter()
        .zip(&cycle)
        .map(|(x, y)| (m.predict(x) - y).abs())
        .fold(0.0, f64::max);
    let ok = (c[0] - 7.3).abs() < 1e-6 && (c[1] - 1.0).abs() < 1e-6 && (c[2] - 1.0).abs() < 1e-6 && max_res < 0.05;
    check(
        ok,
        format!(
            "cycle = {:.4} + {:.4}·cooling + {:.4}·holding, max |residual| {:.2e} s",
            c[0], c[1], c[2], max_res
        ),
    )
}

fn criterion_2() -> Outcome {
    let (space, coded, dt, _) = coded_ccd_runs();
    let names = space.names();
    let report = anova(&coded, &dt, &ModelSpec::reduced_dt(), &names).unwrap();
    let worst_p = report
        .terms
        .iter()
        .filter(|t| t.term != Term::Intercept)
        .map(|t| t.p.unwrap_or(1.0))
        .fold(0.0, f64::max);
    let ok = (report.r2 * 100.0 - 95.43).abs() <= 3.0 && worst_p < 0.01;
    check(ok, format!("R² = {:.2}%, largest term p = {:.4}", report.r2 * 100.0, worst_p))
}

fn criterion_3() -> Outcome {
    let d1 = desirability_min(7.42, 6.5, 9.8);
    let d2 = desirability_min(30.28, 26.8, 46.8);
    let d = composite_desirability(&[d1, d2], &[1.0, 1.0]);
    let ok = (d1 - 0.7212).abs() <= 0.001 && (d2 - 0.8260).abs() <= 0.001 && (d - 0.7718).abs() <= 0.001;
    check(ok, format!("d_ΔT = {d1:.5}, d_cycle = {d2:.5}, D = {d:.5}"))
}

fn criterion_4() -> Outcome {
    let (space, coded, dt, _) = coded_ccd_runs();
    let model = fit(&coded, &dt, &ModelSpec::full_quadratic(4)).unwrap();
    let spec = DesirabilitySpec::from_observations(&dt.iter().map(|v| vec![*v]).collect::<Vec<_>>()).unwrap();
    let opt = maximize_desirability(&[model], &spec, &space, 0).unwrap();
    let target = [90.0, 30.0, 7.5, 195.0];
    let ranges: Vec<f64> = space.natural_bounds().iter().map(|(lo, hi)| hi - lo).collect();
    let worst = opt
        .settings
        .iter()
        .zip(&target)
        .zip(&ranges)
        .map(|((x, t), r)| (x - t).abs() / r)
        .fold(0.0, f64::max);
    let ok = worst <= 0.10 && (opt.desirability - 1.0).abs() < 1e-9;
    check(
        ok,
        format!(
            "optimum ({:.1}, {:.1}, {:.2}, {:.1}), predicted ΔT {:.2}, D = {:.4}, worst factor offset {:.1}% of range",
            opt.settings[0],
            opt.settings[1],
            opt.settings[2],
            opt.settings[3],
            opt.predictions[0],
            opt.desirability,
            worst * 100.0
        ),
    )
}

fn criterion_5() -> (Outcome, Duration) {
    let (space, coded, dt, _) = coded_ccd_runs();
    let model = fit(&coded, &dt, &ModelSpec::full_quadratic(4)).unwrap();
    let dt_space = space.clone();
    let dt_eval = move |x: &[f64]| model.predict(&dt_space.to_coded(x).unwrap());
    let cycle_eval = |x: &[f64]| 7.3 + x[1] + x[2];
    let evaluators: [Evaluator; 2] = [&dt_eval, &cycle_eval];
    let mut lines = Vec::new();
    let mut ok = true;
    let mut slowest = Duration::ZERO;
    for seed in 0..5 {
        let start = Instant::now();
        let cfg = Nsga2Config {
            seed,
            ..Nsga2Config::default()
        };
        let res = nsga2(&evaluators, &space, &cfg).unwrap();
        slowest = slowest.max(start.elapsed());
        let hit = res.front.objectives().iter().any(|o| o[0] <= 7.2 && o[1] <= 34.5);
        let monotone = res
            .history
            .windows(2)
            .all(|w| w[1].hypervolume >= w[0].hypervolume - 1e-12);
        ok &= hit && monotone && res.front.is_mutually_nondominated();
        lines.push(format!(
            "seed {seed}: {} pts, target point {}, HV monotone {}",
            res.front.len(),
            if hit { "yes" } else { "no" },
            monotone
        ));
    }
    (check(ok, lines.join("; ")), slowest)
}

fn criterion_6() -> Outcome {
    let plant = PlantOracle::moulding();
    let summary = sweep(0..20, &plant, |s| default_config(Mode::Multi, s), |r| {
        r.status == CampaignStatus::ThresholdMet && r.trials <= 22
    })
    .unwrap();
    let counts: Vec<String> = summary
        .runs
        .iter()
        .map(|r| {
            if r.status == CampaignStatus::ThresholdMet {
                r.trials.to_string()
            } else {
                "-".into()
            }
        })
        .collect();
    check(
        summary.successes >= 16,
        format!("{}/20 runs met thresholds within 22 trials (trials used: {})", summary.successes, counts.join(" ")),
    )
}

fn criterion_7() -> Outcome {
    let plant = PlantOracle::moulding();
    let (_, oracle_min) = grid_minimum(&plant, 21);
    let summary = sweep(0..20, &plant, |s| default_config(Mode::Single, s), |r| {
        r.best_within(8)[0] <= oracle_min + 0.5
    })
    .unwrap();
    let gaps: Vec<String> = summary
        .runs
        .iter()
        .map(|r| format!("{:.2}", r.best_within(8)[0] - oracle_min))
        .collect();
    check(
        summary.successes >= 16,
        format!(
            "{}/20 runs within 0.5 °C of grid minimum {:.3} after 8 post-seed trials (gaps: {})",
            summary.successes,
            oracle_min,
            gaps.join(" ")
        ),
    )
}

fn brute_force_fronts(points: &[Vec<f64>]) -> Vec<usize> {
    // rank = length of the longest chain of dominators above a point
    let n = points.len();
    let mut rank = vec![usize::MAX; n];
    let mut assigned = 0;
    let mut level = 0;
    while assigned < n {
        let current: Vec<usize> = (0..n)
            .filter(|&i| rank[i] == usize::MAX)
            .filter(|&i| !(0..n).any(|j| rank[j] == usize::MAX && j != i && dominates(&points[j], &points[i])))
            .collect();
        for &i in &current {
            rank[i] = level;
        }
        assigned += current.len();
        level += 1;
    }
    rank
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn f_pdf(x: f64, d1: f64, d2: f64) -> f64 {
    use statrs::function::beta::ln_beta;
    let ln = 0.5 * d1 * (d1 / d2).ln() + (0.5 * d1 - 1.0) * x.ln()
        - 0.5 * (d1 + d2) * (1.0 + d1 * x / d2).ln()
        - ln_beta(0.5 * d1, 0.5 * d2);
    ln.exp()
}

fn criterion_8() -> Outcome {
    let mut failures = Vec::new();
    let mut rng = seeded(2024, 8);

    // GP interpolation and variance monotonicity
    let space = DesignSpace::injection_moulding();
    let xs: Vec<Vec<f64>> = ccd(4, 1, 2.0).unwrap().rows;
    let ys: Vec<f64> = xs.iter().map(|x| x.iter().map(|v| v.sin()).sum()).collect();
    let kernel = KernelSpec::new(Smoothness::FiveHalves, 1.0, vec![1.5; 4]).unwrap();
    let gp = GpModel::new(xs.clone(), &ys, kernel, 0.0, TargetScaling::identity(0.0)).unwrap();
    let interp = xs.iter().zip(&ys).map(|(x, y)| (gp.posterior(x).mean - y).abs()).fold(0.0, f64::max);
    if interp > 1e-6 {
        failures.push(format!("GP interpolation error {interp:e}"));
    }
    let mut prev = 0.0;
    for i in 0..40 {
        let v = gp.posterior(&[2.0 + 0.1 * i as f64, 0.0, 0.0, 0.0]).variance;
        if v + 1e-12 < prev {
            failures.push("GP variance not monotone moving away from data".into());
            break;
        }
        prev = v;
    }

    // EI
    if (ei_min(0.0, 1.0, 0.0) - 0.398_94).abs() > 1e-5 {
        failures.push("EI(z=0) != 0.39894".into());
    }
    for _ in 0..1000 {
        let (m, s, b) = (rng.random_range(-5.0..5.0), rng.random_range(0.0..3.0), rng.random_range(-5.0..5.0));
        if ei_min(m, s, b) < 0.0 {
            failures.push("negative EI".into());
            break;
        }
    }

    // non-dominated sort vs brute force
    for _ in 0..100 {
        let n = rng.random_range(2..40);
        let k = rng.random_range(2..4);
        let pts: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..k).map(|_| rng.random_range(0..6) as f64).collect())
            .collect();
        let fronts = fast_nondominated_sort(&pts);
        let mut rank = vec![usize::MAX; n];
        for (r, f) in fronts.iter().enumerate() {
            for &i in f {
                rank[i] = r;
            }
        }
        if rank != brute_force_fronts(&pts) {
            failures.push("non-dominated sort disagrees with brute force".into());
            break;
        }
    }

    // crowding distance hand cases
    let cd = crowding_distance(&[vec![0.0, 4.0], vec![1.0, 2.0], vec![3.0, 1.0], vec![4.0, 0.0]]);
    let expect = [f64::INFINITY, 0.75 + 0.75, 0.75 + 0.5, f64::INFINITY];
    if cd.iter().zip(&expect).any(|(a, b)| !(a == b || (a - b).abs() < 1e-12)) {
        failures.push(format!("crowding distance {cd:?}"));
    }
    if crowding_distance(&[vec![1.0, 1.0], vec![2.0, 0.0]]).iter().any(|d| d.is_finite()) {
        failures.push("two-point front should be all boundary".into());
    }

    // F cdf against numeric integration of the density
    for &(x, d1, d2) in &[(0.5, 3.0, 10.0), (1.0, 5.0, 5.0), (2.5, 4.0, 26.0), (4.0, 6.0, 12.0), (0.8, 10.0, 20.0)] {
        let numeric = simpson(|t| f_pdf(t, d1, d2), 1e-12, x, 20_000);
        if (numeric - f_cdf(x, d1, d2)).abs() > 1e-6 {
            failures.push(format!("F cdf mismatch at ({x}, {d1}, {d2})"));
        }
    }

    // coding round trip
    let bounds = space.natural_bounds();
    for _ in 0..1000 {
        let x: Vec<f64> = bounds.iter().map(|(lo, hi)| rng.random_range(*lo..*hi)).collect();
        let back = space.from_coded(&space.to_coded(&x).unwrap()).unwrap();
        if x.iter().zip(&back).any(|(a, b)| (a - b).abs() > 1e-12) {
            failures.push("coding round trip".into());
            break;
        }
    }

    // event-log replay determinism
    let plant = PlantOracle::moulding();
    let mut c = Campaign::start(default_config(Mode::Multi, 11)).unwrap();
    for round in 0..3 {
        for id in c.state.pending_ids() {
            let s = c.state.trial(&id).unwrap().settings.clone();
            c.observe(&id, plant.evaluate(&s, round).unwrap().to_vec()).unwrap();
        }
        if c.state.status != CampaignStatus::Proposing {
            break;
        }
        c.suggest(None).unwrap();
    }
    match Campaign::replay(&c.events) {
        Ok(again) if again == c => {}
        _ => failures.push("event-log replay differs".into()),
    }

    check(
        failures.is_empty(),
        if failures.is_empty() {
            "GP interpolation/variance, EI, sort vs brute force (100), crowding, F cdf, coding round trip, replay".into()
        } else {
            failures.join("; ")
        },
    )
}

fn main() {
    let mut all = true;
    let mut report = |n: usize, o: Outcome| {
        all &= o.pass;
        println!("criterion {n}: {} — {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    };

    let t = Instant::now();
    let o = criterion_1();
    report(1, within_budget(o, t.elapsed(), Duration::from_secs(1)));

    let t = Instant::now();
    let o = criterion_2();
    report(2, within_budget(o, t.elapsed(), Duration::from_secs(1)));

    report(3, criterion_3());

    let t = Instant::now();
    let o = criterion_4();
    report(4, within_budget(o, t.elapsed(), Duration::from_secs(5)));

    let (o, slowest) = criterion_5();
    report(5, within_budget(o, slowest, Duration::from_secs(30)));

    let t = Instant::now();
    let o = criterion_6();
    report(6, within_budget(o, t.elapsed(), Duration::from_secs(300)));

    let t = Instant::now();
    let o = criterion_7();
    report(7, within_budget(o, t.elapsed(), Duration::from_secs(300)));

    report(8, criterion_8());

    if !all {
        std::process::exit(1);
    }
}
