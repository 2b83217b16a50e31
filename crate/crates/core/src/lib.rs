//! Attacker best-response analysis and contract simulation for
//! bounty-protected threshold-key wallets.
//!
//! A signing key of black-market value `v` is split into `N` shares, any
//! `m` of which recover it. An attacker extracts shares from hardware
//! enclaves over a bounded number of time slots and can either sell what
//! it holds or turn the shares in to a bounty contract that pays a
//! time-decaying reward. The crate answers three questions about that
//! standoff, exactly and reproducibly:
//!
//! - [`game`] / [`mdp`]: what does an optimal attacker do against a given
//!   reward schedule, both in closed form for deterministic costs and by
//!   backward induction for the stochastic campaign?
//! - [`metrics`] / [`optimizer`]: how good is a reward schedule for the
//!   defender — sale probability, holding time, expected payout — and
//!   which schedule parameters minimize that score across attacker
//!   profiles?
//! - [`sim`]: does a concrete wallet-plus-bounty contract protocol
//!   (commit–reveal claims, red flags, insurance, key rotation) uphold its
//!   accounting and privacy invariants end to end?
//!
//! All on-ledger arithmetic uses the fixed-point [`money::Money`] type so
//! contract balances and the worked deterministic examples are exact;
//! probability-weighted analysis runs in `f64`.

pub mod game;
pub mod mdp;
pub mod metrics;
pub mod money;
pub mod optimizer;
pub mod sim;

pub use game::{
    default_eta, det_best_response, det_optimal_constant_reward, reward, share_value,
    AttackerParams, BestResponse, ConstantRewardPlan, DetAction, DeterministicCost, GameConfig,
    GameError, RewardSpec, ValueVariant,
};
pub use mdp::{
    brute_force_value, policy_csv, solve, transition_distribution, MdpAction, MdpError, MdpState,
    Phase, Policy, Transition, ValueTable,
};
pub use metrics::{
    expected_claim_cost, forward_metrics, forward_metrics_with, monte_carlo_metrics,
    monte_carlo_metrics_with, service_fee, HoldTimeConvention, MetricWeights, MetricsError,
    MetricsReport,
};
pub use money::{Money, MONEY_SCALE};
pub use optimizer::{
    case_study_params, optimize_epsilon, sweep, sweep_cell, CaseStudyModel, EpsilonSearch,
    OptimError, SweepGrid, SweepSpec, SweepTable,
};
pub use sim::{
    run_scenario, Scenario, ScenarioOutcome, SimConfig, SimError, SimReport, SimWorld,
};
