//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.
//!
//! Runs as a plain binary (`harness = false`) so the lines always show up in
//! `cargo test` output. Pass criterion numbers as arguments to run a subset,
//! e.g. `cargo test --test acceptance -- 1 7`.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use chrono::NaiveDate;
use helios::bnn::{
    elbo_with_noise, fit_bnn, init_model, predict_horizon, predict_mean, BnnConfig, BnnInput, Normalization,
    TrainingBatch, TransitionSet,
};
use helios::data::{split_by_years, ControlGrid, PriceSchedule};
use helios::light::{etr_from_ppfd, PhotosynthesisParams, Ppfd};
use helios::metrics::score;
use helios::optimizer::{cost_conversion_factor, solve_horizon, HorizonProblem, DEFAULT_LED_EFFICACY};
use helios::predict::{fit_markov, perfect_predictor};
use helios::sim::{run_campaign, run_day, CampaignMonth, CampaignReport, ControllerConfig, MonthModels, StrategyKind};
use helios::synth::{generate_records, generate_series, half_sine_month, write_irradiance_csv, SiteModel};
use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

const P: PhotosynthesisParams = PhotosynthesisParams { a: 121.0, k: 0.00277 };

// ---------------------------------------------------------------- criterion 1

/// Objective of the remaining-day program without the constant sunlight term.
fn oracle_objective(c: &[f64], s: &[f64], x: &[f64]) -> f64 {
    c.iter()
        .zip(s)
        .zip(x)
        .map(|((c, s), x)| c / P.k * (P.a / (P.a - x - s)).ln())
        .sum()
}

/// Marginal cost of one more unit at step `t`.
fn marginal(c: f64, s: f64, x: f64) -> f64 {
    c / (P.k * (P.a - x - s))
}

/// Independent solver: grid search for a starting point on `Σx = r`, then
/// pairwise exchange descent (each pair's 1-D convex subproblem solved by
/// bisection) until no exchange helps.
fn oracle_solve(c: &[f64], s: &[f64], u: &[f64], r: f64) -> Option<Vec<f64>> {
    let n = c.len();
    if r <= 0.0 {
        return Some(vec![0.0; n]);
    }
    if r > u.iter().sum::<f64>() {
        return None;
    }
    // grid over the first n-1 coordinates, last one absorbs the remainder
    const G: usize = 12;
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut idx = vec![0usize; n - 1];
    loop {
        let mut x: Vec<f64> = idx.iter().enumerate().map(|(i, j)| u[i] * *j as f64 / (G - 1) as f64).collect();
        let last = r - x.iter().sum::<f64>();
        if (0.0..=u[n - 1]).contains(&last) {
            x.push(last);
            let f = oracle_objective(c, s, &x);
            if best.as_ref().is_none_or(|(bf, _)| f < *bf) {
                best = Some((f, x));
            }
        }
        let mut k = 0;
        while k < n - 1 {
            idx[k] += 1;
            if idx[k] < G {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == n - 1 {
            break;
        }
    }
    // proportional fill is always feasible when the grid misses the plane
    let mut x = best.map(|(_, x)| x).unwrap_or_else(|| {
        let total: f64 = u.iter().sum();
        u.iter().map(|u| u * r / total).collect()
    });

    for _sweep in 0..500 {
        let mut moved = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                // shift up to `room` from j to i
                let room = (u[i] - x[i]).min(x[j]);
                if room <= 0.0 || marginal(c[i], s[i], x[i]) >= marginal(c[j], s[j], x[j]) {
                    continue;
                }
                let g = |d: f64| marginal(c[i], s[i], x[i] + d) - marginal(c[j], s[j], x[j] - d);
                let d = if g(room) <= 0.0 {
                    room
                } else {
                    let (mut lo, mut hi) = (0.0, room);
                    for _ in 0..200 {
                        let mid = 0.5 * (lo + hi);
                        if g(mid) <= 0.0 {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    lo
                };
                x[i] += d;
                x[j] -= d;
                moved = moved.max(d);
            }
        }
        if moved < 1e-13 {
            break;
        }
    }
    Some(x)
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20240601);
    let upper: f64 = 51.47;
    let (mut worst_obj, mut worst_res) = (0.0f64, f64::INFINITY);
    let mut solver_time = Duration::ZERO;
    let mut mismatches = Vec::new();
    let mut infeasible = 0;
    let started = Instant::now();
    for case in 0..1000 {
        let n = rng.random_range(2..=5);
        let prices: Vec<f64> = (0..n).map(|_| rng.random_range(1.0..20.0)).collect();
        let ppfd: Vec<f64> = (0..n)
            .map(|_| if rng.random_bool(0.3) { 0.0 } else { rng.random_range(0.0..1500.0) })
            .collect();
        let etr: Vec<f64> = ppfd.iter().map(|p| P.etr(*p)).collect();
        let eps = 1e-6 * P.a;
        let u: Vec<f64> = etr.iter().map(|s| upper.min(P.a - s - eps).max(0.0)).collect();
        let frac = rng.random_range(-0.2..1.2);
        let budget = etr.iter().sum::<f64>() + frac * u.iter().sum::<f64>();
        let problem = HorizonProblem::new(0, prices.clone(), etr.clone(), ppfd, P, upper, budget);

        let t0 = Instant::now();
        let sched = match solve_horizon(&problem) {
            Ok(s) => s,
            Err(e) => {
                mismatches.push(format!("case {case}: solver error {e}"));
                continue;
            }
        };
        solver_time += t0.elapsed();

        let r = budget - etr.iter().sum::<f64>();
        match oracle_solve(&prices, &etr, &u, r) {
            None => {
                infeasible += 1;
                if sched.feasible {
                    mismatches.push(format!("case {case}: solver feasible, oracle not"));
                }
            }
            Some(xo) => {
                if !sched.feasible {
                    mismatches.push(format!("case {case}: solver infeasible, oracle feasible"));
                    continue;
                }
                let fs = oracle_objective(&prices, &etr, &sched.led_etr);
                let fo = oracle_objective(&prices, &etr, &xo);
                let gap = fs - fo;
                worst_obj = worst_obj.max(gap.abs());
                let residual = sched.led_etr.iter().sum::<f64>() + etr.iter().sum::<f64>() - budget;
                worst_res = worst_res.min(residual);
                let in_bounds = sched.led_etr.iter().zip(&u).all(|(x, u)| *x >= 0.0 && *x <= u + 1e-12);
                if gap.abs() > 1e-5 || residual < -1e-6 || !in_bounds {
                    mismatches.push(format!("case {case}: gap {gap:.2e}, residual {residual:.2e}, in bounds {in_bounds}"));
                }
            }
        }
    }
    let pass = mismatches.is_empty() && solver_time < Duration::from_secs(10);
    outcome(
        pass,
        format!(
            "1000 problems ({infeasible} infeasible), worst objective gap {worst_obj:.2e}, worst residual {worst_res:.2e}, solver {:.3} s, with oracle {:.1} s{}",
            solver_time.as_secs_f64(),
            started.elapsed().as_secs_f64(),
            mismatches.first().map(|m| format!("; first mismatch: {m}")).unwrap_or_default()
        ),
    )
}

// ---------------------------------------------------------------- criterion 2

fn greenhouse_site() -> SiteModel {
    SiteModel {
        transmission: 0.5,
        sample_minutes: 15,
        ..SiteModel::default()
    }
}

fn criterion_2() -> Outcome {
    let grid = ControlGrid::default();
    let prices = PriceSchedule::default_time_of_use(&grid);
    let cfg = ControllerConfig::default();
    let days = generate_series(
        &greenhouse_site(),
        NaiveDate::from_ymd_opt(2011, 1, 1).unwrap(),
        NaiveDate::from_ymd_opt(2011, 12, 31).unwrap(),
        2,
        &grid,
        &P,
    )
    .expect("synthetic year");
    let mut worst = 0.0f64;
    let mut lit = 0;
    for day in days.iter().step_by(7).take(50) {
        let oracle = perfect_predictor(day);
        let base = run_day(StrategyKind::BaselineOracle, day, &oracle, &prices, &cfg).expect("baseline");
        let rh = run_day(StrategyKind::Bnn, day, &oracle, &prices, &cfg).expect("receding horizon");
        if base.total_cost > 0.0 {
            lit += 1;
        }
        let rel = (rh.total_cost - base.total_cost).abs() / base.total_cost.max(1e-12);
        worst = worst.max(if base.total_cost == 0.0 { rh.total_cost } else { rel });
    }
    outcome(worst <= 1e-6, format!("50 days ({lit} with LED cost), worst relative difference {worst:.2e}"))
}

// ----------------------------------------------------------- criteria 3 and 4

fn campaign_months(site: &SiteModel, train_years: &[i32], bnn: &BnnConfig, seed: u64) -> Vec<CampaignMonth> {
    let grid = ControlGrid::default();
    let first = *train_years.iter().min().unwrap();
    let days = generate_series(
        site,
        NaiveDate::from_ymd_opt(first, 1, 1).unwrap(),
        NaiveDate::from_ymd_opt(2004, 12, 31).unwrap(),
        seed,
        &grid,
        &P,
    )
    .expect("synthetic years");
    (1..=12)
        .map(|month| {
            let split = split_by_years(&days, train_years, &[2004], month).expect("split");
            let mut models = MonthModels::new(&split).expect("climatology");
            let cfg = BnnConfig {
                seed: month as u64,
                ..bnn.clone()
            };
            models.bnn = Some(fit_bnn(&cfg, &split.train).expect("bnn").model);
            models.markov = Some(fit_markov(&split.train, 10, 1.0).expect("markov"));
            CampaignMonth { split, models }
        })
        .collect()
}

fn cloudy_campaign() -> CampaignReport {
    let bnn = BnnConfig {
        hidden_sizes: [32, 32],
        epochs: 150,
        learning_rate: 1e-3,
        ..BnnConfig::default()
    };
    let months = campaign_months(&greenhouse_site(), &[2001, 2002, 2003], &bnn, 11);
    let grid = ControlGrid::default();
    run_campaign(
        &months,
        &StrategyKind::ALL,
        &PriceSchedule::default_time_of_use(&grid),
        &ControllerConfig::default(),
        3,
        5,
    )
    .expect("campaign")
}

fn criterion_3(report: &CampaignReport) -> Outcome {
    let target = ControllerConfig::default().dpi_target;
    let feasible: Vec<_> = report.days.iter().filter(|d| d.feasible).collect();
    let misses = feasible.iter().filter(|d| d.realized_dpi < target * (1.0 - 1e-6)).count();
    let lowest = feasible.iter().map(|d| d.realized_dpi).fold(f64::INFINITY, f64::min);
    // full-information reading, reported alongside
    let attainable_misses: Vec<String> = report
        .days
        .iter()
        .filter(|d| d.attainable && !d.dpi_met)
        .map(|d| format!("{} {} {:.3}", d.date, d.strategy, d.realized_dpi))
        .collect();
    outcome(
        misses == 0 && !feasible.is_empty(),
        format!(
            "{} feasible of {} day results, {misses} below target, lowest {lowest:.4}; days reachable with actual sun but missed: {} [{}]",
            feasible.len(),
            report.days.len(),
            attainable_misses.len(),
            attainable_misses.join(", ")
        ),
    )
}

fn criterion_4(report: &CampaignReport) -> Outcome {
    let mut violations = Vec::new();
    for month in 1..=12 {
        let base = report.monthly_row(month, StrategyKind::BaselineOracle).expect("baseline row").mean_cost;
        for s in [StrategyKind::Bnn, StrategyKind::Markov, StrategyKind::Heuristic] {
            let cost = report.monthly_row(month, s).expect("strategy row").mean_cost;
            if base > cost + 1e-12 * cost.max(1.0) {
                violations.push(format!("month {month} {s}: {cost:.4} < baseline {base:.4}"));
            }
        }
    }

    // noiseless, month-stationary clear sky: forecasts can be learned exactly
    let site = SiteModel {
        cloudy: false,
        mid_month_sun: true,
        ..greenhouse_site()
    };
    let bnn = BnnConfig {
        hidden_sizes: [32, 32],
        epochs: 300,
        learning_rate: 1e-3,
        ..BnnConfig::default()
    };
    let months = campaign_months(&site, &[2001, 2002, 2003], &bnn, 0);
    let grid = ControlGrid::default();
    let clear = run_campaign(
        &months,
        &[StrategyKind::BaselineOracle, StrategyKind::Bnn],
        &PriceSchedule::default_time_of_use(&grid),
        &ControllerConfig::default(),
        3,
        5,
    )
    .expect("clear-sky campaign");
    let total = |s| clear.monthly.iter().filter(|r| r.strategy == s).map(|r| r.mean_cost).sum::<f64>();
    let (base, bnn_cost) = (total(StrategyKind::BaselineOracle), total(StrategyKind::Bnn));
    let excess = (bnn_cost - base) / base;

    let mean = |s| report.monthly.iter().filter(|r| r.strategy == s).map(|r| r.mean_cost).sum::<f64>() / 12.0;
    outcome(
        violations.is_empty() && excess.abs() <= 0.01,
        format!(
            "cloudy campaign mean monthly cost: baseline {:.4}, bnn {:.4}, markov {:.4}, heuristic {:.4}, {} ordering violations{}; noiseless campaign bnn {bnn_cost:.4} vs baseline {base:.4} ({:+.3}%)",
            mean(StrategyKind::BaselineOracle),
            mean(StrategyKind::Bnn),
            mean(StrategyKind::Markov),
            mean(StrategyKind::Heuristic),
            violations.len(),
            violations.first().map(|v| format!(" ({v})")).unwrap_or_default(),
            100.0 * excess
        ),
    )
}

// ---------------------------------------------------------- criteria 5 and 6

fn criterion_5() -> Outcome {
    let etr = etr_from_ppfd(Ppfd::new(200.0).unwrap(), &PhotosynthesisParams::default()).value();
    outcome((etr - 51.47).abs() <= 0.01, format!("etr(200) = {etr:.4}"))
}

fn criterion_6() -> Outcome {
    let l = cost_conversion_factor(900.0, DEFAULT_LED_EFFICACY);
    let exact = l == 0.25 / 2800.0;
    let one_step = 10.0 * 200.0 * l;
    outcome(
        exact && (one_step - 0.1786).abs() <= 1e-4,
        format!("l = {l:e} (bitwise equal to 0.25/2800: {exact}), C=10 full-LED step = {one_step:.5} cent/m2"),
    )
}

// ---------------------------------------------------------------- criterion 7

fn criterion_7() -> Outcome {
    let started = Instant::now();
    let data = TransitionSet {
        inputs: [(0.0, 3.0), (120.0, 20.0), (640.0, 31.0), (905.0, 36.0), (75.0, 50.0)]
            .iter()
            .map(|(s, t)| BnnInput { sun_ppfd: *s, step: *t })
            .collect(),
        targets: vec![0.0, 180.0, 700.0, 860.0, 20.0],
    };
    let config = BnnConfig {
        seed: 17,
        normalization: Normalization::fit(&data),
        ..BnnConfig::default()
    };
    let mut model = init_model(&config);
    // spread the posterior so the sigma gradients are not negligible
    model.params.rho.mapv_inplace(|r| r + 1.0);
    let batch = TrainingBatch::from_set(&data, &config.normalization);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let noise: Vec<Array1<f64>> = (0..2)
        .map(|_| Array1::from_shape_fn(model.params.mu.len(), |_| rng.sample::<f64, _>(rand_distr::StandardNormal)))
        .collect();
    let kl_weight = 0.25;
    let (_, analytic) = elbo_with_noise(&model, &batch, &noise, kl_weight).expect("gradients");

    let h = 1e-6;
    let analytic: Vec<f64> = analytic.slices().iter().flat_map(|s| s.iter().copied()).collect();
    let mut worst = 0.0f64;
    let mut checked = 0;
    let mut k = 0;
    for block in 0..6 {
        let len = model.params.slices()[block].len();
        for i in 0..len {
            let orig = model.params.slices()[block][i];
            model.params.slices_mut()[block][i] = orig + h;
            let up = elbo_with_noise(&model, &batch, &noise, kl_weight).unwrap().0.total;
            model.params.slices_mut()[block][i] = orig - h;
            let down = elbo_with_noise(&model, &batch, &noise, kl_weight).unwrap().0.total;
            model.params.slices_mut()[block][i] = orig;
            let numeric = (up - down) / (2.0 * h);
            let a = analytic[k];
            // relative error with a floor for parameters whose gradient is ~0
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-3);
            worst = worst.max(rel);
            checked += 1;
            k += 1;
        }
    }
    let elapsed = started.elapsed();
    outcome(
        worst <= 1e-4 && elapsed < Duration::from_secs(5),
        format!("{checked} parameters, worst relative error {worst:.2e}, {:.2} s", elapsed.as_secs_f64()),
    )
}

// ---------------------------------------------------------------- criterion 8

fn criterion_8() -> Outcome {
    let start = NaiveDate::from_ymd_opt(2010, 6, 1).unwrap();
    let days = half_sine_month(start, 35, 64, |_| 1000.0, &P).expect("half-sine month");
    let (train_days, test_days) = days.split_at(30);
    let config = BnnConfig {
        epochs: 500,
        learning_rate: 1e-3,
        seed: 3,
        ..BnnConfig::default()
    };
    let started = Instant::now();
    let model = fit_bnn(&config, train_days).expect("training").model;
    let train_time = started.elapsed();

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut obs, mut one, mut roll_obs, mut roll) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for day in test_days {
        let s = day.ppfd();
        for t in 0..s.len() - 1 {
            obs.push(s[t + 1]);
            one.push(predict_mean(&model, BnnInput { sun_ppfd: s[t], step: t as f64 }, 10, &mut rng).value());
        }
        let h = predict_horizon(&model, 0, Ppfd::new(s[0]).unwrap(), s.len(), 10, &mut rng);
        roll_obs.extend_from_slice(&s[1..]);
        roll.extend(h.iter().map(|p| p.value()));
    }
    let r1 = score(&obs, &one).unwrap().r_squared.unwrap();
    let rd = score(&roll_obs, &roll).unwrap().r_squared.unwrap();
    outcome(
        r1 > 0.99 && rd > 0.95 && train_time < Duration::from_secs(300),
        format!(
            "500 epochs, 100x100 network: one-step R2 {r1:.5}, full-day rollout R2 {rd:.5}, trained in {:.1} s",
            train_time.as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------- criterion 9

fn criterion_9() -> Outcome {
    let s = score(&[0.0, 10.0, 20.0], &[0.0, 10.0, 26.0]).unwrap();
    let r2 = s.r_squared.unwrap();
    let pass = (s.rmse_abs - 12f64.sqrt()).abs() < 1e-12 && format!("{:.3}", s.rmse_abs) == "3.464" && (r2 - 0.82).abs() < 1e-12;
    outcome(pass, format!("RMSE {:.6}, R2 {r2:.6}", s.rmse_abs))
}

// --------------------------------------------------------------- criterion 10

fn run_cli(config: &Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_helios"))
        .arg("--config")
        .arg(config)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(String::from_utf8_lossy(&out.stderr).into_owned())
    }
}

fn collect_files(dir: &Path, base: &Path, out: &mut Vec<(String, Vec<u8>)>) {
    let mut entries: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    entries.sort();
    for p in entries {
        if p.is_dir() {
            collect_files(&p, base, out);
        } else {
            let rel = p.strip_prefix(base).unwrap().display().to_string();
            out.push((rel, std::fs::read(&p).unwrap()));
        }
    }
}

fn criterion_10() -> Outcome {
    let root = tempfile::tempdir().expect("temp dir");
    let data = root.path().join("data");
    let records = generate_records(
        &greenhouse_site(),
        NaiveDate::from_ymd_opt(2001, 1, 1).unwrap(),
        NaiveDate::from_ymd_opt(2002, 2, 28).unwrap(),
        8,
    )
    .expect("records");
    write_irradiance_csv(&records, data.join("ghi.csv")).expect("csv");

    let mut runs = Vec::new();
    for run in ["a", "b"] {
        let dir = root.path().join(run);
        std::fs::create_dir_all(&dir).unwrap();
        let config = dir.join("helios.toml");
        std::fs::write(
            &config,
            format!(
                "seed = 42\nmonths = [1, 2]\n[paths]\ndata = \"{}\"\nmodels = \"models\"\noutput = \"out\"\n[split]\ntrain_years = [2001]\ntest_years = [2002]\n[bnn]\nhidden_sizes = [16, 16]\nepochs = 15\nlearning_rate = 0.001\n",
                data.display()
            ),
        )
        .unwrap();
        if let Err(e) = run_cli(&config, &["train"]).and_then(|_| run_cli(&config, &["simulate"])) {
            return outcome(false, format!("run {run} failed: {e}"));
        }
        let mut files = Vec::new();
        collect_files(&dir.join("models"), &dir, &mut files);
        collect_files(&dir.join("out"), &dir, &mut files);
        runs.push(files);
    }
    let csvs = runs[0].iter().filter(|(n, _)| n.ends_with(".csv")).count();
    let identical = runs[0] == runs[1];
    outcome(
        identical && csvs > 0,
        format!("{} files per run ({csvs} CSV), byte-identical: {identical}", runs[0].len()),
    )
}

// ---------------------------------------------------------------------------

const DESCRIPTIONS: [&str; 10] = [
    "solver matches brute-force oracle",
    "perfect forecasts reproduce the one-shot baseline",
    "feasible days meet the DPI target",
    "baseline is cheapest; learned forecasts approach it",
    "light-response anchor",
    "cost conversion anchor",
    "BNN analytic gradients match finite differences",
    "BNN fits a noiseless half-sine month",
    "metrics hand example",
    "train + simulate are deterministic",
];

fn main() {
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let run = |n: usize| wanted.is_empty() || wanted.contains(&n);
    let mut campaign: Option<CampaignReport> = None;
    let mut failed = 0;
    for n in 1..=10 {
        if !run(n) {
            continue;
        }
        let started = Instant::now();
        let result = match n {
            1 => criterion_1(),
            2 => criterion_2(),
            3 => criterion_3(campaign.get_or_insert_with(cloudy_campaign)),
            4 => criterion_4(campaign.get_or_insert_with(cloudy_campaign)),
            5 => criterion_5(),
            6 => criterion_6(),
            7 => criterion_7(),
            8 => criterion_8(),
            9 => criterion_9(),
            _ => criterion_10(),
        };
        if !result.pass {
            failed += 1;
        }
        println!(
            "criterion {n:>2}: {} - {} ({}) [{:.1} s]",
            if result.pass { "PASS" } else { "FAIL" },
            DESCRIPTIONS[n - 1],
            result.detail,
            started.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

