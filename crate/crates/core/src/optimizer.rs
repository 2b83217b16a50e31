//! Defender-side search: tune the reward blend's exponent against an
//! estimated attacker, stress the tuned schedule across a grid of attacker
//! capabilities, and price the hardware-extraction case study.

use num::rational::Ratio;
use serde::Serialize;
use thiserror::Error;

use crate::game::{
    default_eta, AttackerParams, DeterministicCost, GameConfig, GameError, RewardSpec,
    ValueVariant,
};
use crate::mdp::{solve, MdpError};
use crate::metrics::{forward_metrics, MetricWeights, MetricsError, MetricsReport};
use crate::money::Money;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimError {
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Mdp(#[from] MdpError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("grid step {0} must lie in (0, 1]")]
    InvalidStep(f64),
    #[error("epsilon {0} must lie in [0, 1]")]
    InvalidEpsilon(f64),
    #[error("invalid sweep grid: {0}")]
    InvalidGrid(String),
    #[error("sweep table has no spec labeled {0:?}")]
    UnknownLabel(String),
    #[error("invalid case study: {0}")]
    InvalidCaseStudy(String),
}

/// Result of [`optimize_epsilon`]: the best exponent, its score, and the
/// full grid trace for inspection.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsilonSearch {
    pub epsilon_star: f64,
    pub f_star: f64,
    /// Every `(epsilon, f)` pair evaluated, in ascending epsilon order.
    pub trace: Vec<(f64, f64)>,
}

impl EpsilonSearch {
    /// CSV rendering of the trace, columns `epsilon,f`.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("epsilon,f\n");
        for (epsilon, f) in &self.trace {
            out.push_str(&format!("{epsilon},{f}\n"));
        }
        out
    }
}

/// Grid-search the blend exponent on a uniform partition of `[0, 1]`.
///
/// For each candidate the capped blend schedule is solved against
/// `est_params` and scored with [`forward_metrics`]; the lowest score wins
/// and ties go to the largest exponent, which front-loads the reward onto
/// early small claims. `grid_step` is rounded to the nearest `1/n`
/// partition; 0.01 — the default in shipped configs — evaluates 101 points.
pub fn optimize_epsilon(
    cfg: &GameConfig,
    est_params: &AttackerParams,
    alpha_cap: f64,
    eta: Money,
    grid_step: f64,
    weights: &MetricWeights,
) -> Result<EpsilonSearch, OptimError> {
    cfg.validate()?;
    est_params.validate()?;
    weights.validate()?;
    if !(grid_step > 0.0 && grid_step <= 1.0) {
        return Err(OptimError::InvalidStep(grid_step));
    }
    let intervals = (1.0 / grid_step).round().max(1.0) as u32;
    let mut best: Option<(f64, f64)> = None;
    let mut trace = Vec::with_capacity(intervals as usize + 1);
    for i in 0..=intervals {
        let epsilon = f64::from(i) / f64::from(intervals);
        let spec = RewardSpec::capped_proposed(epsilon, eta, alpha_cap);
        spec.validate()?;
        let (policy, _) = solve(cfg, est_params, &spec)?;
        let report = forward_metrics(cfg, est_params, &spec, &policy, weights)?;
        trace.push((epsilon, report.f_score));
        // `<=` so equal scores promote the later, larger epsilon.
        if best.map_or(true, |(_, f)| report.f_score <= f) {
            best = Some((epsilon, report.f_score));
        }
    }
    let (epsilon_star, f_star) = best.expect("grid has at least two points");
    Ok(EpsilonSearch { epsilon_star, f_star, trace })
}

/// One labeled reward schedule entering a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSpec {
    pub label: String,
    pub spec: RewardSpec,
}

/// Cross-product of attacker capabilities and reward schedules to evaluate.
///
/// Axis values are kept sorted and deduplicated, so two grids built from
/// permutations of the same values are identical.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepGrid {
    ca_values: Vec<Money>,
    ps_values: Vec<f64>,
    specs: Vec<SweepSpec>,
}

impl SweepGrid {
    pub fn new(
        ca_values: Vec<Money>,
        ps_values: Vec<f64>,
        specs: Vec<SweepSpec>,
    ) -> Result<Self, OptimError> {
        let mut ca_values = ca_values;
        ca_values.sort();
        ca_values.dedup();
        let mut ps_values = ps_values;
        if ps_values.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(OptimError::InvalidGrid(
                "success probabilities must lie in [0,1]".into(),
            ));
        }
        ps_values.sort_by(|a, b| a.partial_cmp(b).expect("no NaN after range check"));
        ps_values.dedup();
        if ca_values.is_empty() || ps_values.is_empty() {
            return Err(OptimError::InvalidGrid("axes must be non-empty".into()));
        }
        if ca_values.iter().any(|c| c.is_negative()) {
            return Err(OptimError::InvalidGrid("attack costs must be >= 0".into()));
        }
        if specs.is_empty() {
            return Err(OptimError::InvalidGrid("need at least one reward schedule".into()));
        }
        for spec in &specs {
            spec.spec.validate()?;
            if specs.iter().filter(|s| s.label == spec.label).count() > 1 {
                return Err(OptimError::InvalidGrid(format!(
                    "duplicate schedule label {:?}",
                    spec.label
                )));
            }
        }
        Ok(SweepGrid { ca_values, ps_values, specs })
    }

    /// The default 10×10 capability grid — both axes 0.1 to 1.0 in steps
    /// of 0.1, bracketing the 0.4/0.4 estimation point — comparing the
    /// tuned capped blend against the linear and no-bounty baselines.
    pub fn standard(
        cfg: &GameConfig,
        epsilon_star: f64,
        alpha_cap: f64,
    ) -> Result<Self, OptimError> {
        if !(0.0..=1.0).contains(&epsilon_star) {
            return Err(OptimError::InvalidEpsilon(epsilon_star));
        }
        let eta = default_eta(cfg);
        let ca_values = (1..=10).map(|i| Money::from_micros(i * 100_000)).collect();
        let ps_values = (1..=10).map(|i| f64::from(i) / 10.0).collect();
        let specs = vec![
            SweepSpec {
                label: "proposed".into(),
                spec: RewardSpec::capped_proposed(epsilon_star, eta, alpha_cap),
            },
            SweepSpec {
                label: "linear".into(),
                spec: RewardSpec::Linear { eta, delta: eta },
            },
            SweepSpec { label: "zero".into(), spec: RewardSpec::Zero },
        ];
        SweepGrid::new(ca_values, ps_values, specs)
    }

    pub fn ca_values(&self) -> &[Money] {
        &self.ca_values
    }

    pub fn ps_values(&self) -> &[f64] {
        &self.ps_values
    }

    pub fn specs(&self) -> &[SweepSpec] {
        &self.specs
    }
}

/// Metrics for every (schedule, attack cost, success probability) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub epsilon_star: f64,
    labels: Vec<String>,
    ca_values: Vec<Money>,
    ps_values: Vec<f64>,
    /// Schedule-major, then cost-major: `[spec][ca][ps]` flattened.
    cells: Vec<MetricsReport>,
}

impl SweepTable {
    /// Assemble a table from independently computed parts; shapes must
    /// match exactly.
    pub fn from_parts(
        epsilon_star: f64,
        labels: Vec<String>,
        ca_values: Vec<Money>,
        ps_values: Vec<f64>,
        cells: Vec<MetricsReport>,
    ) -> Result<Self, OptimError> {
        if cells.len() != labels.len() * ca_values.len() * ps_values.len() {
            return Err(OptimError::InvalidGrid(format!(
                "{} cells for a {}x{}x{} table",
                cells.len(),
                labels.len(),
                ca_values.len(),
                ps_values.len()
            )));
        }
        Ok(SweepTable { epsilon_star, labels, ca_values, ps_values, cells })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn ca_values(&self) -> &[Money] {
        &self.ca_values
    }

    pub fn ps_values(&self) -> &[f64] {
        &self.ps_values
    }

    fn label_index(&self, label: &str) -> Result<usize, OptimError> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| OptimError::UnknownLabel(label.to_string()))
    }

    pub fn get(&self, label: &str, ca: Money, ps: f64) -> Option<&MetricsReport> {
        let spec = self.labels.iter().position(|l| l == label)?;
        let i = self.ca_values.iter().position(|&c| c == ca)?;
        let j = self.ps_values.iter().position(|&p| p == ps)?;
        Some(&self.cells[(spec * self.ca_values.len() + i) * self.ps_values.len() + j])
    }

    /// Fraction of capability cells where `champion` scores no worse than
    /// `baseline`.
    pub fn dominance_fraction(&self, champion: &str, baseline: &str) -> Result<f64, OptimError> {
        let champ = self.label_index(champion)?;
        let base = self.label_index(baseline)?;
        let per_spec = self.ca_values.len() * self.ps_values.len();
        let dominated = (0..per_spec)
            .filter(|&cell| {
                self.cells[champ * per_spec + cell].f_score
                    <= self.cells[base * per_spec + cell].f_score
            })
            .count();
        Ok(dominated as f64 / per_spec as f64)
    }

    /// Worst (largest) score for one schedule over all cells with attack
    /// cost at least `ca_min`.
    pub fn max_f_at_or_above(&self, label: &str, ca_min: Money) -> Result<f64, OptimError> {
        let spec = self.label_index(label)?;
        let mut worst = f64::NEG_INFINITY;
        for (i, &ca) in self.ca_values.iter().enumerate() {
            if ca < ca_min {
                continue;
            }
            for j in 0..self.ps_values.len() {
                let f = self.cells
                    [(spec * self.ca_values.len() + i) * self.ps_values.len() + j]
                    .f_score;
                worst = worst.max(f);
            }
        }
        Ok(worst)
    }

    /// CSV rendering, columns `spec,c_a,p_s,p_e,t_h,c_d,f`, schedule-major
    /// in grid order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("spec,c_a,p_s,p_e,t_h,c_d,f\n");
        for (spec, label) in self.labels.iter().enumerate() {
            for (i, ca) in self.ca_values.iter().enumerate() {
                for (j, ps) in self.ps_values.iter().enumerate() {
                    let cell = &self.cells
                        [(spec * self.ca_values.len() + i) * self.ps_values.len() + j];
                    out.push_str(&format!(
                        "{label},{ca},{ps},{},{},{},{}\n",
                        cell.p_sell, cell.mean_hold_time, cell.defender_cost, cell.f_score
                    ));
                }
            }
        }
        out
    }
}

/// Solve and score one capability cell under one reward schedule.
pub fn sweep_cell(
    cfg: &GameConfig,
    spec: &RewardSpec,
    ca: Money,
    ps: f64,
    weights: &MetricWeights,
) -> Result<MetricsReport, OptimError> {
    let params = AttackerParams::new(ca, ps)?;
    let (policy, _) = solve(cfg, &params, spec)?;
    Ok(forward_metrics(cfg, &params, spec, &policy, weights)?)
}

/// Evaluate every grid cell: each (schedule, cost, probability) triple is
/// solved to the attacker's optimum and scored for the defender.
/// `epsilon_star` is carried into the table for provenance.
pub fn sweep(
    cfg: &GameConfig,
    epsilon_star: f64,
    grid: &SweepGrid,
    weights: &MetricWeights,
) -> Result<SweepTable, OptimError> {
    cfg.validate()?;
    weights.validate()?;
    if !(0.0..=1.0).contains(&epsilon_star) {
        return Err(OptimError::InvalidEpsilon(epsilon_star));
    }
    let mut cells =
        Vec::with_capacity(grid.specs.len() * grid.ca_values.len() * grid.ps_values.len());
    for spec in &grid.specs {
        for &ca in &grid.ca_values {
            for &ps in &grid.ps_values {
                cells.push(sweep_cell(cfg, &spec.spec, ca, ps, weights)?);
            }
        }
    }
    SweepTable::from_parts(
        epsilon_star,
        grid.specs.iter().map(|s| s.label.clone()).collect(),
        grid.ca_values.clone(),
        grid.ps_values.clone(),
        cells,
    )
}

/// Cost model of the hardware side-channel case study: extracting one
/// share needs a fixed number of signing traces, the wallet signs a fixed
/// number of transactions per day, and the attacker rents hardware daily.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseStudyModel {
    pub traces_required: u64,
    pub tx_per_day: u64,
    pub cloud_cost_per_day: Money,
    /// Ceiling-valued share pricing over the full share count.
    pub game: GameConfig,
    /// `C(k)` on the money grid, exact-rational before the final rounding.
    pub cost: DeterministicCost,
    days_per_share: Ratio<u64>,
}

impl CaseStudyModel {
    /// Days of observed traffic per extracted share, exact.
    pub fn days_per_share(&self) -> Ratio<u64> {
        self.days_per_share
    }

    pub fn days_per_share_f64(&self) -> f64 {
        *self.days_per_share.numer() as f64 / *self.days_per_share.denom() as f64
    }

    /// Total extraction cost of a key-recovering share set: `C(m)`.
    pub fn recovery_cost(&self) -> Money {
        self.cost
            .cost(self.game.threshold)
            .expect("cost table covers the threshold")
    }
}

/// Build the case-study model. Costs are computed as exact rationals
/// `cloud_cost · k · traces / tx_per_day` and rounded to the money grid
/// only at the end.
pub fn case_study_params(
    traces_required: u64,
    tx_per_day: u64,
    cloud_cost_per_day: Money,
    key_value: Money,
    threshold: u32,
    n_shares: u32,
    horizon_days: u32,
) -> Result<CaseStudyModel, OptimError> {
    if tx_per_day == 0 {
        return Err(OptimError::InvalidCaseStudy(
            "transaction rate must be positive".into(),
        ));
    }
    if traces_required == 0 {
        return Err(OptimError::InvalidCaseStudy(
            "trace requirement must be positive".into(),
        ));
    }
    if cloud_cost_per_day.is_negative() {
        return Err(OptimError::InvalidCaseStudy("rental cost must be >= 0".into()));
    }
    let game = GameConfig::new(n_shares, threshold, horizon_days, key_value, ValueVariant::CeilCapped)?;
    let cost = DeterministicCost::from_fn(n_shares, |k| {
        cloud_cost_per_day.mul_div(traces_required * u64::from(k), tx_per_day)
    })?;
    Ok(CaseStudyModel {
        traces_required,
        tx_per_day,
        cloud_cost_per_day,
        game,
        cost,
        days_per_share: Ratio::new(traces_required, tx_per_day),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn fig_config() -> GameConfig {
        GameConfig::new(3, 3, 30, Money::from_units(6), ValueVariant::LinearCapped).unwrap()
    }

    fn money(x: f64) -> Money {
        Money::from_f64(x)
    }

    #[test]
    fn coarse_grid_uses_the_nearest_uniform_partition() {
        let cfg = fig_config();
        let params = AttackerParams::new(money(0.4), 0.4).unwrap();
        let search = optimize_epsilon(
            &cfg,
            &params,
            0.8,
            default_eta(&cfg),
            0.5,
            &MetricWeights::balanced(),
        )
        .unwrap();
        let epsilons: Vec<f64> = search.trace.iter().map(|(e, _)| *e).collect();
        assert_eq!(epsilons, vec![0.0, 0.5, 1.0]);
        assert!(epsilons.contains(&search.epsilon_star));
    }

    #[test]
    fn priced_out_attacker_makes_all_scores_tie_and_the_largest_epsilon_wins() {
        let cfg = fig_config();
        // Each enclave costs more than the whole key is worth.
        let params = AttackerParams::new(Money::from_units(10), 0.9).unwrap();
        let search = optimize_epsilon(
            &cfg,
            &params,
            0.8,
            default_eta(&cfg),
            0.25,
            &MetricWeights::balanced(),
        )
        .unwrap();
        assert_eq!(search.epsilon_star, 1.0);
        assert_eq!(search.f_star, 0.0);
        assert!(search.trace.iter().all(|&(_, f)| f == 0.0));
    }

    #[test]
    fn reported_optimum_matches_a_recomputation() {
        let cfg = fig_config();
        let params = AttackerParams::new(money(0.4), 0.4).unwrap();
        let weights = MetricWeights::balanced();
        let eta = default_eta(&cfg);
        let search = optimize_epsilon(&cfg, &params, 0.8, eta, 0.1, &weights).unwrap();

        let spec = RewardSpec::capped_proposed(search.epsilon_star, eta, 0.8);
        let (policy, _) = solve(&cfg, &params, &spec).unwrap();
        let report = forward_metrics(&cfg, &params, &spec, &policy, &weights).unwrap();
        assert_eq!(report.f_score, search.f_star);
        // The trace is the whole grid and its minimum is the reported score.
        assert_eq!(search.trace.len(), 11);
        let min = search.trace.iter().map(|&(_, f)| f).fold(f64::INFINITY, f64::min);
        assert_eq!(min, search.f_star);
    }

    #[test]
    fn invalid_steps_are_rejected() {
        let cfg = fig_config();
        let params = AttackerParams::new(money(0.4), 0.4).unwrap();
        for step in [0.0, -0.5, 1.5, f64::NAN] {
            assert!(matches!(
                optimize_epsilon(
                    &cfg,
                    &params,
                    0.8,
                    default_eta(&cfg),
                    step,
                    &MetricWeights::balanced()
                ),
                Err(OptimError::InvalidStep(_))
            ));
        }
    }

    #[test]
    fn standard_grid_is_sorted_and_permutation_invariant() {
        let cfg = fig_config();
        let grid = SweepGrid::standard(&cfg, 0.95, 0.8).unwrap();
        assert_eq!(grid.ca_values().len(), 10);
        assert_eq!(grid.ps_values().len(), 10);
        assert_eq!(grid.specs().len(), 3);
        assert_eq!(grid.ca_values()[0], money(0.1));
        assert_eq!(grid.ca_values()[9], Money::from_units(1));

        let shuffled = SweepGrid::new(
            vec![money(0.3), money(0.1), money(0.2)],
            vec![0.9, 0.5, 0.7, 0.5],
            vec![SweepSpec { label: "zero".into(), spec: RewardSpec::Zero }],
        )
        .unwrap();
        let sorted = SweepGrid::new(
            vec![money(0.1), money(0.2), money(0.3)],
            vec![0.5, 0.7, 0.9],
            vec![SweepSpec { label: "zero".into(), spec: RewardSpec::Zero }],
        )
        .unwrap();
        assert_eq!(shuffled, sorted);
        let weights = MetricWeights::balanced();
        let a = sweep(&cfg, 0.95, &shuffled, &weights).unwrap();
        let b = sweep(&cfg, 0.95, &sorted, &weights).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn degenerate_grids_are_rejected() {
        assert!(matches!(
            SweepGrid::new(vec![], vec![0.5], vec![SweepSpec { label: "z".into(), spec: RewardSpec::Zero }]),
            Err(OptimError::InvalidGrid(_))
        ));
        assert!(matches!(
            SweepGrid::new(vec![Money::ZERO], vec![1.5], vec![SweepSpec { label: "z".into(), spec: RewardSpec::Zero }]),
            Err(OptimError::InvalidGrid(_))
        ));
        assert!(matches!(
            SweepGrid::new(
                vec![Money::ZERO],
                vec![0.5],
                vec![
                    SweepSpec { label: "z".into(), spec: RewardSpec::Zero },
                    SweepSpec { label: "z".into(), spec: RewardSpec::Zero },
                ]
            ),
            Err(OptimError::InvalidGrid(_))
        ));
    }

    #[test]
    fn single_cell_sweep_agrees_with_the_optimizer() {
        let cfg = fig_config();
        let params = AttackerParams::new(money(0.4), 0.4).unwrap();
        let weights = MetricWeights::balanced();
        let eta = default_eta(&cfg);
        let search = optimize_epsilon(&cfg, &params, 0.8, eta, 0.1, &weights).unwrap();

        let grid = SweepGrid::new(
            vec![money(0.4)],
            vec![0.4],
            vec![SweepSpec {
                label: "proposed".into(),
                spec: RewardSpec::capped_proposed(search.epsilon_star, eta, 0.8),
            }],
        )
        .unwrap();
        let table = sweep(&cfg, search.epsilon_star, &grid, &weights).unwrap();
        let cell = table.get("proposed", money(0.4), 0.4).unwrap();
        assert_eq!(cell.f_score, search.f_star);
        assert!(table.get("proposed", money(0.5), 0.4).is_none());
        assert!(matches!(
            table.dominance_fraction("proposed", "missing"),
            Err(OptimError::UnknownLabel(_))
        ));
    }

    #[test]
    fn sweep_csv_has_one_row_per_cell() {
        let cfg = fig_config();
        let grid = SweepGrid::new(
            vec![money(0.4), money(0.8)],
            vec![0.4, 0.8],
            vec![
                SweepSpec { label: "zero".into(), spec: RewardSpec::Zero },
                SweepSpec {
                    label: "linear".into(),
                    spec: RewardSpec::Linear { eta: money(0.06), delta: money(0.06) },
                },
            ],
        )
        .unwrap();
        let table = sweep(&cfg, 0.95, &grid, &MetricWeights::balanced()).unwrap();
        let csv = table.to_csv();
        let lines: Vec<&str> = csv.trim_end().lines().collect();
        assert_eq!(lines[0], "spec,c_a,p_s,p_e,t_h,c_d,f");
        assert_eq!(lines.len(), 1 + 2 * 2 * 2);
        assert!(lines[1].starts_with("zero,0.4,0.4,"));
        // Dominance against itself is total.
        assert_eq!(table.dominance_fraction("zero", "zero").unwrap(), 1.0);
    }

    #[test]
    fn without_a_bounty_dearer_attacks_never_raise_the_score() {
        let cfg = fig_config();
        let grid = SweepGrid::new(
            (1..=10).map(|i| Money::from_micros(i * 100_000)).collect(),
            (1..=10).map(|i| f64::from(i) / 10.0).collect(),
            vec![SweepSpec { label: "zero".into(), spec: RewardSpec::Zero }],
        )
        .unwrap();
        let table = sweep(&cfg, 1.0, &grid, &MetricWeights::balanced()).unwrap();
        for &ps in table.ps_values() {
            let mut prev = f64::INFINITY;
            for &ca in table.ca_values() {
                let f = table.get("zero", ca, ps).unwrap().f_score;
                assert!(
                    f <= prev + 1e-12,
                    "score rose from {prev} to {f} at ca={ca}, ps={ps}"
                );
                prev = f;
            }
        }
    }

    #[test]
    fn case_study_costs_are_exact() {
        let model = case_study_params(
            4096,
            230,
            money(97.9),
            Money::from_units(36_000),
            10,
            20,
            30,
        )
        .unwrap();
        assert_eq!(model.days_per_share(), Ratio::new(4096, 230));
        assert_abs_diff_eq!(model.days_per_share_f64(), 17.808695652173913, epsilon = 1e-12);
        // Exactly traces worth of days once multiplied back.
        assert_eq!(model.days_per_share() * 230, Ratio::from_integer(4096));
        // Ten shares recover the key; the rental bill lands on the money
        // grid at the exactly rounded rational.
        assert_eq!(model.recovery_cost(), Money::from_micros(17_434_713_043));
        assert_eq!(model.cost.cost(0).unwrap(), Money::ZERO);
        // Costs are linear in k up to the final per-entry rounding.
        let single = model.cost.cost(1).unwrap().micros();
        for k in 0..=20u32 {
            let exact = Ratio::new(97_900_000u64 * 4096 * u64::from(k), 230);
            // Twice the values stay integral, so half-away rounding means
            // the doubled table entry sits within 1 of the doubled rational.
            let twice_rounded = Ratio::from_integer(model.cost.cost(k).unwrap().micros() as u64 * 2);
            let twice_exact = exact * 2u64;
            let diff = if twice_exact >= twice_rounded {
                twice_exact - twice_rounded
            } else {
                twice_rounded - twice_exact
            };
            assert!(diff <= Ratio::from_integer(1), "C({k}) drifted from the rational");
            let ideal_linear = single * i64::from(k);
            assert!(
                (model.cost.cost(k).unwrap().micros() - ideal_linear).abs() <= i64::from(k),
                "C({k}) strayed from linear beyond rounding"
            );
        }
    }

    #[test]
    fn case_study_degenerate_inputs() {
        assert!(matches!(
            case_study_params(4096, 0, money(97.9), Money::from_units(36_000), 10, 20, 30),
            Err(OptimError::InvalidCaseStudy(_))
        ));
        let unit = case_study_params(230, 230, money(5.0), Money::from_units(100), 2, 4, 10)
            .unwrap();
        assert_eq!(unit.days_per_share(), Ratio::from_integer(1));
        assert_eq!(unit.cost.cost(3).unwrap(), Money::from_units(15));

        let free = case_study_params(4096, 230, Money::ZERO, Money::from_units(100), 2, 4, 10)
            .unwrap();
        for k in 0..=4 {
            assert_eq!(free.cost.cost(k).unwrap(), Money::ZERO);
        }
    }
}
