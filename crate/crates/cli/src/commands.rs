//! The five subcommands: solve, optimize, sweep, simulate, case-study.
//!
//! Every command writes its artifacts under the output directory and
//! prints a short summary. Identical inputs produce byte-identical
//! artifacts: all numeric formatting is locale-free, all maps are
//! ordered, and the sweep's parallel workers assemble results in index
//! order.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sharebounty::sim::{run_scenario, Scenario, SimConfig};
use sharebounty::{
    case_study_params, optimize_epsilon, policy_csv, solve, sweep_cell, CaseStudyModel,
    MdpAction, MdpState, MetricsReport, Money, Phase, SweepGrid, SweepTable,
};

use crate::config::RunConfig;
use crate::svg;

/// Failures that map to exit code 1: the computation ran, but a scripted
/// assertion did not hold.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct AssertionFailure(pub String);

fn write_artifact(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(path)
}

fn to_pretty_json<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value).context("serializing summary")?;
    text.push('\n');
    Ok(text)
}

// ----------------------------------------------------------------------
// solve

#[derive(Serialize)]
struct SolveSummary {
    root_value: f64,
    n_shares: u32,
    horizon: u32,
    states: usize,
    action_counts: BTreeMap<String, usize>,
}

pub fn cmd_solve(config: &RunConfig, out_dir: &Path) -> Result<()> {
    let (policy, values) = solve(&config.game, &config.attacker, &config.reward)?;
    let mut action_counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut states = 0usize;
    let mut values_csv = String::from("k,t,d,value\n");
    for slot in 0..=config.game.horizon {
        for phase in [Phase::Attack, Phase::Stop] {
            for shares in 0..=config.game.n_shares {
                let state = MdpState::Live { shares, slot, phase };
                let name = match policy.action(&state)? {
                    MdpAction::Attack(_) => "attack",
                    MdpAction::Wait => "wait",
                    MdpAction::TurnIn => "turn_in",
                    MdpAction::Sell => "sell",
                };
                *action_counts.entry(name.to_string()).or_default() += 1;
                states += 1;
                values_csv.push_str(&format!(
                    "{shares},{slot},{},{}\n",
                    phase.index(),
                    values.value(&state)?
                ));
            }
        }
    }
    let summary = SolveSummary {
        root_value: values.root(),
        n_shares: config.game.n_shares,
        horizon: config.game.horizon,
        states,
        action_counts,
    };
    write_artifact(out_dir, "policy.csv", &policy_csv(&policy, &values)?)?;
    write_artifact(out_dir, "values.csv", &values_csv)?;
    write_artifact(out_dir, "summary.json", &to_pretty_json(&summary)?)?;
    println!(
        "solved {} states: root value {} (artifacts in {})",
        states,
        values.root(),
        out_dir.display()
    );
    Ok(())
}

// ----------------------------------------------------------------------
// optimize

#[derive(Serialize)]
struct OptimizeSummary {
    epsilon_star: f64,
    f_star: f64,
    grid_step: f64,
    points: usize,
}

pub fn cmd_optimize(config: &RunConfig, out_dir: &Path) -> Result<f64> {
    let search = optimize_epsilon(
        &config.game,
        &config.attacker,
        config.alpha_cap,
        config.eta(),
        config.grid_step,
        &config.weights,
    )?;
    let summary = OptimizeSummary {
        epsilon_star: search.epsilon_star,
        f_star: search.f_star,
        grid_step: config.grid_step,
        points: search.trace.len(),
    };
    write_artifact(out_dir, "epsilon_trace.csv", &search.trace_csv())?;
    write_artifact(out_dir, "optimize_summary.json", &to_pretty_json(&summary)?)?;
    println!(
        "best blend weight {} scores {} over {} grid points (artifacts in {})",
        search.epsilon_star,
        search.f_star,
        search.trace.len(),
        out_dir.display()
    );
    Ok(search.epsilon_star)
}

// ----------------------------------------------------------------------
// sweep

#[derive(Serialize)]
struct SweepSummary {
    epsilon_star: f64,
    labels: Vec<String>,
    dominance_vs: BTreeMap<String, f64>,
    max_f_cost_at_least_0_4: f64,
    cells_per_schedule: usize,
}

/// Run the full capability sweep. Cells are independent, so they are
/// evaluated on a thread pool (`jobs` threads; 0 picks the default) and
/// reassembled in grid order, keeping the artifacts byte-identical for
/// any worker count.
pub fn cmd_sweep(config: &RunConfig, out_dir: &Path, jobs: usize) -> Result<()> {
    let epsilon_star = cmd_optimize(config, out_dir)?;
    let grid = SweepGrid::standard(&config.game, epsilon_star, config.alpha_cap)?;
    let work: Vec<(usize, Money, f64)> = {
        let mut work = Vec::new();
        for (s, _) in grid.specs().iter().enumerate() {
            for &ca in grid.ca_values() {
                for &ps in grid.ps_values() {
                    work.push((s, ca, ps));
                }
            }
        }
        work
    };
    let run_cell = |&(s, ca, ps): &(usize, Money, f64)| -> Result<MetricsReport> {
        Ok(sweep_cell(&config.game, &grid.specs()[s].spec, ca, ps, &config.weights)?)
    };
    let cells: Vec<MetricsReport> = if jobs == 1 {
        work.iter().map(run_cell).collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .context("building sweep thread pool")?;
        pool.install(|| {
            use rayon::prelude::*;
            work.par_iter().map(run_cell).collect::<Result<_>>()
        })?
    };
    let table = SweepTable::from_parts(
        epsilon_star,
        grid.specs().iter().map(|s| s.label.clone()).collect(),
        grid.ca_values().to_vec(),
        grid.ps_values().to_vec(),
        cells,
    )?;
    write_artifact(out_dir, "sweep.csv", &table.to_csv())?;

    let col_names: Vec<String> = grid.ps_values().iter().map(|p| format!("{p}")).collect();
    let row_names: Vec<String> = grid.ca_values().iter().map(|c| format!("{c}")).collect();
    for label in table.labels().to_vec() {
        let mut values = Vec::with_capacity(col_names.len() * row_names.len());
        for &ca in grid.ca_values() {
            for &ps in grid.ps_values() {
                let report = table
                    .get(&label, ca, ps)
                    .ok_or_else(|| anyhow::anyhow!("missing sweep cell {label} {ca} {ps}"))?;
                values.push(report.f_score);
            }
        }
        let title = if label == "proposed" {
            format!("defender score, {label} schedule (blend weight {epsilon_star})")
        } else {
            format!("defender score, {label} schedule")
        };
        let image = svg::heatmap(
            &title,
            "attack success probability",
            "attack cost per enclave",
            &col_names,
            &row_names,
            &values,
        );
        write_artifact(out_dir, &format!("heatmap_{label}.svg"), &image)?;
    }

    let mut dominance_vs = BTreeMap::new();
    for baseline in table.labels() {
        if baseline != "proposed" {
            dominance_vs
                .insert(baseline.clone(), table.dominance_fraction("proposed", baseline)?);
        }
    }
    let summary = SweepSummary {
        epsilon_star,
        labels: table.labels().to_vec(),
        dominance_vs: dominance_vs.clone(),
        max_f_cost_at_least_0_4: table.max_f_at_or_above("proposed", Money::from_f64(0.4))?,
        cells_per_schedule: grid.ca_values().len() * grid.ps_values().len(),
    };
    write_artifact(out_dir, "sweep_summary.json", &to_pretty_json(&summary)?)?;
    for (baseline, fraction) in &dominance_vs {
        println!("champion at or below {baseline} in {:.1}% of cells", fraction * 100.0);
    }
    println!(
        "worst champion score with attack cost >= 0.4: {}",
        summary.max_f_cost_at_least_0_4
    );
    println!("sweep artifacts in {}", out_dir.display());
    Ok(())
}

// ----------------------------------------------------------------------
// simulate

pub fn cmd_simulate(
    scenario_path: &Path,
    seed: Option<u64>,
    out_dir: &Path,
) -> Result<()> {
    let text = fs::read_to_string(scenario_path)
        .with_context(|| format!("cannot read scenario {}", scenario_path.display()))?;
    let mut scenario =
        Scenario::from_json_str(&text).context("malformed scenario file")?;
    if let Some(seed) = seed {
        scenario.seed = Some(seed);
    }
    let sim_config = SimConfig::reference();
    let outcome = match run_scenario(&sim_config, &scenario) {
        Ok(outcome) => outcome,
        Err(err @ sharebounty::SimError::Scenario(_))
        | Err(err @ sharebounty::SimError::ConservationViolated { .. })
        | Err(err @ sharebounty::SimError::ShareLeak { .. }) => {
            return Err(AssertionFailure(format!("scenario {:?}: {err}", scenario.name)).into());
        }
        Err(err) => return Err(err.into()),
    };
    write_artifact(out_dir, "events.jsonl", &outcome.events_jsonl)?;
    #[derive(Serialize)]
    struct SimulateSummary<'a> {
        name: &'a str,
        steps_run: usize,
        checks: usize,
        results: &'a [String],
        report: &'a sharebounty::SimReport,
    }
    let summary = SimulateSummary {
        name: &outcome.name,
        steps_run: outcome.steps_run,
        checks: scenario.checks.len(),
        results: &outcome.results,
        report: &outcome.report,
    };
    write_artifact(out_dir, "report.json", &to_pretty_json(&summary)?)?;
    println!(
        "scenario {:?}: {} steps, {} checks passed, {} events (artifacts in {})",
        outcome.name,
        outcome.steps_run,
        scenario.checks.len(),
        outcome.report.events,
        out_dir.display()
    );
    Ok(())
}

// ----------------------------------------------------------------------
// case-study

#[derive(Debug, Clone, Copy)]
pub struct CaseStudyArgs {
    pub traces: u64,
    pub tx_per_day: u64,
    pub cloud_cost: f64,
    pub key_value: f64,
    pub threshold: u32,
    pub shares: u32,
    pub horizon_days: u32,
}

impl Default for CaseStudyArgs {
    fn default() -> Self {
        CaseStudyArgs {
            traces: 4096,
            tx_per_day: 230,
            cloud_cost: 97.9,
            key_value: 36_000.0,
            threshold: 10,
            shares: 20,
            horizon_days: 30,
        }
    }
}

#[derive(Serialize)]
struct CaseStudySummary {
    days_per_share: f64,
    days_per_share_exact: String,
    threshold: u32,
    recovery_cost: Money,
    costs: BTreeMap<u32, Money>,
}

pub fn cmd_case_study(args: &CaseStudyArgs, out_dir: &Path) -> Result<()> {
    let model: CaseStudyModel = case_study_params(
        args.traces,
        args.tx_per_day,
        Money::from_f64(args.cloud_cost),
        Money::from_f64(args.key_value),
        args.threshold,
        args.shares,
        args.horizon_days,
    )?;
    let mut csv = String::from("k,cost\n");
    let mut costs = BTreeMap::new();
    println!("days of tracing per share: {}", model.days_per_share_f64());
    println!("{:>4}  {:>16}", "k", "extraction cost");
    for k in 1..=args.threshold {
        let cost = model.cost.cost(k)?;
        csv.push_str(&format!("{k},{cost}\n"));
        costs.insert(k, cost);
        println!("{k:>4}  {:>16}", cost.to_string());
    }
    println!("recovering the key costs {}", model.recovery_cost());
    let summary = CaseStudySummary {
        days_per_share: model.days_per_share_f64(),
        days_per_share_exact: format!(
            "{}/{}",
            model.days_per_share().numer(),
            model.days_per_share().denom()
        ),
        threshold: args.threshold,
        recovery_cost: model.recovery_cost(),
        costs,
    };
    write_artifact(out_dir, "case_study.csv", &csv)?;
    write_artifact(out_dir, "case_study_summary.json", &to_pretty_json(&summary)?)?;
    println!("case-study artifacts in {}", out_dir.display());
    Ok(())
}
