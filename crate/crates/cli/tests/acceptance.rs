//! Acceptance gate: one test per release criterion, each printing a
//! single `[criterion N] PASS`/`FAIL` line with the measured numbers.
//!
//! Criteria 1–3 encode the original evaluation's published outcomes. Our
//! measured results diverge from them for documented reasons — see
//! REPRODUCTION.md at the repository root — and those tests are expected
//! to fail rather than be weakened to pass.

use std::path::PathBuf;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use sharebounty::sim::{run_scenario, Scenario, SimConfig};
use sharebounty::{
    brute_force_value, case_study_params, det_best_response, det_optimal_constant_reward,
    forward_metrics, monte_carlo_metrics, optimize_epsilon, reward, share_value, solve, sweep,
    AttackerParams, BestResponse, DetAction, DeterministicCost, GameConfig, MetricWeights,
    Money, RewardSpec, SweepGrid, ValueVariant,
};

fn money(x: f64) -> Money {
    Money::from_f64(x)
}

fn reference_game() -> GameConfig {
    GameConfig::new(3, 3, 30, Money::from_units(6), ValueVariant::LinearCapped)
        .expect("reference game is valid")
}

fn reference_attacker() -> AttackerParams {
    AttackerParams::new(money(0.4), 0.4).expect("reference attacker is valid")
}

#[test]
fn criterion_1_blend_weight_reproduction() {
    let start = Instant::now();
    let search = optimize_epsilon(
        &reference_game(),
        &reference_attacker(),
        0.8,
        money(0.06),
        0.01,
        &MetricWeights::balanced(),
    )
    .expect("search runs");
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs() < 60,
        "[criterion 1] FAIL — search took {elapsed:?}, budget is 60 s"
    );
    let in_band = (0.85..=1.0).contains(&search.epsilon_star);
    assert!(
        in_band,
        "[criterion 1] FAIL — best blend weight {} (score {}) is outside [0.85, 1.0]; \
         the reference optimum is 0.95. Analyzed in REPRODUCTION.md: under the \
         same-slot attack-resolution law the score is flat up to the sell \
         boundary near 0.63 and minimizes at 0.74.",
        search.epsilon_star,
        search.f_star
    );
    println!(
        "[criterion 1] PASS — best blend weight {} in [0.85, 1.0], {} points in {elapsed:?}",
        search.epsilon_star,
        search.trace.len()
    );
}

/// The 10x10 capability sweep shared by criteria 2 and 3.
fn standard_sweep() -> sharebounty::SweepTable {
    let cfg = reference_game();
    let search = optimize_epsilon(
        &cfg,
        &reference_attacker(),
        0.8,
        money(0.06),
        0.01,
        &MetricWeights::balanced(),
    )
    .expect("search runs");
    let grid = SweepGrid::standard(&cfg, search.epsilon_star, 0.8).expect("grid builds");
    sweep(&cfg, search.epsilon_star, &grid, &MetricWeights::balanced()).expect("sweep runs")
}

#[test]
fn criterion_2_dominance_over_baselines() {
    let table = standard_sweep();
    let vs_linear = table.dominance_fraction("proposed", "linear").expect("labels exist");
    let vs_zero = table.dominance_fraction("proposed", "zero").expect("labels exist");
    assert!(
        vs_linear >= 0.8 && vs_zero >= 0.8,
        "[criterion 2] FAIL — tuned schedule at or below the baselines in \
         {:.1}% (linear) and {:.1}% (zero) of cells; the bar is 80% for both. \
         Analyzed in REPRODUCTION.md: the uncapped linear baseline outbids \
         every sale, so it zeroes the sell probability everywhere while the \
         capped schedule cannot.",
        vs_linear * 100.0,
        vs_zero * 100.0
    );
    println!(
        "[criterion 2] PASS — dominance {:.1}% vs linear, {:.1}% vs zero",
        vs_linear * 100.0,
        vs_zero * 100.0
    );
}

#[test]
fn criterion_3_robustness_band() {
    let table = standard_sweep();
    let worst = table
        .max_f_at_or_above("proposed", money(0.4))
        .expect("champion label exists");
    assert!(
        worst <= 0.35,
        "[criterion 3] FAIL — worst defender score {worst:.4} over cells with \
         attack cost >= 0.4 exceeds the 0.35 band. Analyzed in REPRODUCTION.md: \
         wherever extraction succeeds cheaply relative to its cost, selling \
         out-earns the capped bounty and the score approaches 2/3.",
    );
    println!("[criterion 3] PASS — worst score {worst:.4} with attack cost >= 0.4");
}

#[test]
fn criterion_4_deterministic_case_studies() {
    // Three-share toy: value 3, linear extraction cost 0.8 per share.
    let toy = GameConfig::new(3, 3, 30, Money::from_units(3), ValueVariant::LinearCapped)
        .expect("toy game is valid");
    let toy_cost = DeterministicCost::linear(money(0.8), 3).expect("cost table");
    let plan = det_optimal_constant_reward(&toy, &toy_cost, money(0.01), Money::ZERO)
        .expect("plan computes");
    assert_eq!(
        plan.spec,
        RewardSpec::DeterministicStart { level: money(1.41), delta: Money::ZERO },
        "[criterion 4] FAIL — toy constant-reward level is not 1.41"
    );

    // Quadratic extraction cost k^2/4: level is 1.25 plus the margin.
    let quad_cost =
        DeterministicCost::from_fn(3, |k| Money::from_micros(i64::from(k * k) * 250_000))
            .expect("cost table");
    for eta0 in [money(0.01), money(0.1), money(0.33)] {
        let plan = det_optimal_constant_reward(&toy, &quad_cost, eta0, Money::ZERO)
            .expect("plan computes");
        assert_eq!(
            plan.spec,
            RewardSpec::DeterministicStart { level: money(1.25) + eta0, delta: Money::ZERO },
            "[criterion 4] FAIL — quadratic-cost level is not 1.25 + margin"
        );
    }

    // Best responses: sell everything without a bounty, single-share
    // turn-in under the 1.41 flat reward.
    let no_bounty = det_best_response(&toy, &toy_cost, &RewardSpec::Zero).expect("runs");
    assert_eq!(
        no_bounty,
        BestResponse { shares: 3, action: DetAction::Sell, profit: money(0.6) },
        "[criterion 4] FAIL — no-bounty best response is not sell-3 at 0.6"
    );
    let with_bounty =
        det_best_response(&toy, &toy_cost, &RewardSpec::Constant { level: money(1.41) })
            .expect("runs");
    assert_eq!(
        with_bounty,
        BestResponse { shares: 1, action: DetAction::TurnIn, profit: money(0.61) },
        "[criterion 4] FAIL — flat-reward best response is not turn-in-1 at 0.61"
    );
    println!(
        "[criterion 4] PASS — levels 1.41 and 1.25+margin, profits 0.6 (sell) and 0.61 (turn in)"
    );
}

#[test]
fn criterion_5_oracle_equivalence() {
    // Exhaustive strategy enumeration agrees with the solver on small
    // instances.
    let mut rng = StdRng::seed_from_u64(0xacce_0005);
    let mut brute_checked = 0;
    while brute_checked < 50 {
        let n_shares = rng.gen_range(1..=2u32);
        // Two-share games blow past the enumeration cap at horizon 3.
        let horizon =
            if n_shares == 2 { rng.gen_range(1..=2u32) } else { rng.gen_range(1..=3u32) };
        let threshold = rng.gen_range(1..=n_shares);
        let cfg = GameConfig::new(
            n_shares,
            threshold,
            horizon,
            Money::from_micros(rng.gen_range(1_000_000..=5_000_000)),
            ValueVariant::LinearCapped,
        )
        .expect("random game is valid");
        let params = AttackerParams::new(
            Money::from_micros(rng.gen_range(0..=600_000)),
            rng.gen_range(0.0..=1.0),
        )
        .expect("random attacker is valid");
        let spec = match rng.gen_range(0..4) {
            0 => RewardSpec::Zero,
            1 => RewardSpec::Constant { level: Money::from_micros(rng.gen_range(0..=2_000_000)) },
            2 => RewardSpec::Linear {
                eta: Money::from_micros(rng.gen_range(0..=100_000)),
                delta: Money::from_micros(rng.gen_range(0..=500_000)),
            },
            _ => RewardSpec::capped_proposed(
                rng.gen_range(0.0..=1.0),
                Money::from_micros(rng.gen_range(0..=100_000)),
                rng.gen_range(0.5..=1.0),
            ),
        };
        let (_, values) = solve(&cfg, &params, &spec).expect("solver runs");
        let brute = brute_force_value(&cfg, &params, &spec).expect("enumeration runs");
        let diff = (values.root() - brute).abs();
        assert!(
            diff <= 1e-9,
            "[criterion 5] FAIL — solver {} vs enumeration {brute} (diff {diff:e}) on {cfg:?}",
            values.root()
        );
        brute_checked += 1;
    }

    // Exact propagated metrics agree with seeded sampling.
    let trajectories = 100_000u64;
    let mut mc_checked = 0;
    let mut attempts = 0;
    while mc_checked < 20 {
        attempts += 1;
        assert!(attempts < 400, "[criterion 5] FAIL — cannot find active instances");
        let n_shares = rng.gen_range(1..=3u32);
        let horizon = rng.gen_range(2..=5u32);
        let threshold = rng.gen_range(1..=n_shares);
        let cfg = GameConfig::new(
            n_shares,
            threshold,
            horizon,
            Money::from_micros(rng.gen_range(2_000_000..=6_000_000)),
            ValueVariant::LinearCapped,
        )
        .expect("random game is valid");
        let params = AttackerParams::new(
            Money::from_micros(rng.gen_range(0..=300_000)),
            rng.gen_range(0.4..=0.9),
        )
        .expect("random attacker is valid");
        let spec = RewardSpec::capped_proposed(
            rng.gen_range(0.0..=1.0),
            Money::from_micros(rng.gen_range(0..=100_000)),
            rng.gen_range(0.6..=1.0),
        );
        let weights = MetricWeights::balanced();
        let (policy, _) = solve(&cfg, &params, &spec).expect("solver runs");
        let exact = forward_metrics(&cfg, &params, &spec, &policy, &weights).expect("exact runs");
        // Screen out near-inactive instances: the conditional holding-time
        // bound below needs cash-out mass to normalize by.
        let share_mass = exact.p_sell + exact.p_claim;
        if share_mass < 0.1 {
            continue;
        }
        let mc = monte_carlo_metrics(
            &cfg,
            &params,
            &spec,
            &policy,
            &weights,
            trajectories,
            0xbeef + mc_checked,
        )
        .expect("sampling runs");
        let n = trajectories as f64;
        let sigma = |p: f64| (p * (1.0 - p) / n).sqrt();
        for (name, sampled, exact_p) in [
            ("sell probability", mc.p_sell, exact.p_sell),
            ("claim probability", mc.p_claim, exact.p_claim),
            ("abstain probability", mc.p_abstain, exact.p_abstain),
        ] {
            assert!(
                (sampled - exact_p).abs() <= 3.0 * sigma(exact_p) + 1e-9,
                "[criterion 5] FAIL — {name} {sampled} vs exact {exact_p} beyond 3 sigma on {cfg:?}"
            );
        }
        let payout_cap = reward(&spec, &cfg, cfg.n_shares, 0)
            .expect("reward in range")
            .to_f64()
            .max(cfg.key_value.to_f64());
        assert!(
            (mc.defender_cost - exact.defender_cost).abs() <= 3.0 * payout_cap / 2.0 / n.sqrt(),
            "[criterion 5] FAIL — defender cost {} vs exact {} beyond 3 sigma",
            mc.defender_cost,
            exact.defender_cost
        );
        assert!(
            (mc.mean_hold_time - exact.mean_hold_time).abs()
                <= 3.0 * f64::from(cfg.horizon) / 2.0 / (n * share_mass).sqrt() + 1e-9,
            "[criterion 5] FAIL — holding time {} vs exact {} beyond 3 sigma",
            mc.mean_hold_time,
            exact.mean_hold_time
        );
        mc_checked += 1;
    }
    println!(
        "[criterion 5] PASS — {brute_checked} enumeration matches within 1e-9, \
         {mc_checked} sampling matches within 3 sigma"
    );
}

#[test]
fn criterion_6_reward_boundary_identities() {
    let mut rng = StdRng::seed_from_u64(0xacce_0006);
    for _ in 0..200 {
        let n_shares = rng.gen_range(1..=6u32);
        let threshold = rng.gen_range(1..=n_shares);
        let horizon = rng.gen_range(1..=40u32);
        let cfg = GameConfig::new(
            n_shares,
            threshold,
            horizon,
            Money::from_micros(rng.gen_range(1_000_000..=20_000_000)),
            ValueVariant::LinearCapped,
        )
        .expect("random game is valid");
        let epsilon = rng.gen_range(0.0..=1.0);
        let eta = Money::from_micros(rng.gen_range(1..=200_000));
        let spec = RewardSpec::Proposed { epsilon, eta };
        for k in 0..=n_shares {
            let at_horizon = reward(&spec, &cfg, k, horizon).expect("reward in range");
            let value = share_value(&cfg, k).expect("value in range");
            assert_eq!(
                at_horizon, value,
                "[criterion 6] FAIL — R({k}, T) != V({k}) on {cfg:?} eps={epsilon}"
            );
            if k >= 1 {
                let at_start = reward(&spec, &cfg, k, 0).expect("reward in range");
                assert!(
                    at_start > value,
                    "[criterion 6] FAIL — R({k}, 0) = {at_start} not above V({k}) = {value} \
                     on {cfg:?} eps={epsilon}"
                );
            }
        }
    }
    println!("[criterion 6] PASS — horizon identity and slot-zero premium on 200 random games");
}

#[test]
fn criterion_7_case_study_numbers() {
    let model = case_study_params(
        4096,
        230,
        money(97.9),
        Money::from_units(36_000),
        10,
        20,
        30,
    )
    .expect("defaults are valid");
    let days = model.days_per_share_f64();
    assert!(
        (17.7..=17.9).contains(&days),
        "[criterion 7] FAIL — days per share {days} outside [17.7, 17.9]"
    );
    let total = model.recovery_cost().to_f64();
    assert!(
        (17_400.0..=17_450.0).contains(&total),
        "[criterion 7] FAIL — recovery cost {total} outside [17400, 17450]"
    );
    println!("[criterion 7] PASS — {days} days per share, {total} to recover the key");
}

#[test]
fn criterion_8_protocol_scenario_suite() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)
        .expect("scenarios dir exists")
        .map(|e| e.expect("entry readable").path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let required = [
        "availability_timeout",
        "bounty_claim",
        "bounty_forfeit",
        "duplicate_claim",
        "happy_path",
        "insufficient_balance",
        "red_flag_block",
        "rotation",
        "unauthorized_compensation",
    ];
    for name in required {
        assert!(
            paths.iter().any(|p| p.file_stem().is_some_and(|s| s == name)),
            "[criterion 8] FAIL — bundled scenario {name}.json is missing"
        );
    }
    let config = SimConfig::reference();
    let start = Instant::now();
    for path in &paths {
        let text = std::fs::read_to_string(path).expect("scenario readable");
        let scenario = Scenario::from_json_str(&text).expect("scenario parses");
        // Conservation and leak scanning run inside every scenario.
        if let Err(err) = run_scenario(&config, &scenario) {
            panic!("[criterion 8] FAIL — {}: {err}", path.display());
        }
    }
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs() < 10,
        "[criterion 8] FAIL — suite took {elapsed:?}, budget is 10 s"
    );
    println!(
        "[criterion 8] PASS — {} scenarios green in {elapsed:?}",
        paths.len()
    );
}
