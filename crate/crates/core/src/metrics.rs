//! Defender-side evaluation of a solved attacker policy: sale probability,
//! share holding time, expected payout, and their weighted score, plus the
//! insurance-economics helpers.
//!
//! [`forward_metrics`] propagates probability mass through the policy's
//! Markov chain exactly; [`monte_carlo_metrics`] estimates the same
//! quantities by seeded sampling and exists to cross-check the exact path.
//! Both consume [`transition_distribution`], so they cannot drift from the
//! dynamics the solver optimized against.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{AttackerParams, GameConfig, GameError, RewardSpec};
use crate::mdp::{transition_distribution, MdpAction, MdpError, MdpState, Phase, Policy};
use crate::money::Money;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Mdp(#[from] MdpError),
    #[error("invalid metric weights: {0}")]
    InvalidWeights(String),
    #[error("policy was built for {policy_shares} shares / horizon {policy_horizon}, game has {game_shares} / {game_horizon}")]
    ShapeMismatch {
        policy_shares: u32,
        policy_horizon: u32,
        game_shares: u32,
        game_horizon: u32,
    },
    #[error("probability {0} outside [0,1]")]
    ProbabilityOutOfRange(f64),
    #[error("security parameter {0} must exceed e for the fee factor to be positive")]
    SecurityParameterTooSmall(f64),
    #[error("need at least one trajectory")]
    NoTrajectories,
    #[error("propagated mass summed to {0}, not 1 — policy not total over reachable states?")]
    MassLeak(f64),
}

/// Weights of the defender's score: `alpha1` on the sale probability,
/// `alpha2` on normalized holding time, and the remainder on normalized
/// expected payout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricWeights {
    pub alpha1: f64,
    pub alpha2: f64,
}

impl MetricWeights {
    pub fn new(alpha1: f64, alpha2: f64) -> Result<Self, MetricsError> {
        let w = MetricWeights { alpha1, alpha2 };
        w.validate()?;
        Ok(w)
    }

    /// Equal thirds on all three components.
    pub fn balanced() -> Self {
        MetricWeights { alpha1: 1.0 / 3.0, alpha2: 1.0 / 3.0 }
    }

    pub fn validate(&self) -> Result<(), MetricsError> {
        if !(self.alpha1 >= 0.0 && self.alpha2 >= 0.0) {
            return Err(MetricsError::InvalidWeights(format!(
                "weights must be non-negative, got {} and {}",
                self.alpha1, self.alpha2
            )));
        }
        if self.alpha1 + self.alpha2 > 1.0 + 1e-12 {
            return Err(MetricsError::InvalidWeights(format!(
                "weights must sum to at most 1, got {}",
                self.alpha1 + self.alpha2
            )));
        }
        Ok(())
    }

    /// Weighted score of the three normalized components.
    pub fn combine(&self, p_sell: f64, hold_fraction: f64, cost_fraction: f64) -> f64 {
        self.alpha1 * p_sell
            + self.alpha2 * hold_fraction
            + (1.0 - self.alpha1 - self.alpha2) * cost_fraction
    }
}

/// How to average holding time over trajectories that never obtain a share.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HoldTimeConvention {
    /// Mean over trajectories with at least one share (0 if none exist).
    ConditionalOnShare,
    /// Mean over all trajectories, counting shareless ones as zero.
    UnconditionalZero,
}

/// Defender-side outcome distribution of one attacker policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Probability the attacker ends by selling at least one share.
    pub p_sell: f64,
    /// Probability the attacker ends by turning shares in for the bounty.
    pub p_claim: f64,
    /// Probability the attacker walks away with nothing cashed out.
    pub p_abstain: f64,
    /// Mean slots between first extraction and termination.
    pub mean_hold_time: f64,
    /// Expected money leaving the defender: sale value or bounty paid.
    pub defender_cost: f64,
    /// Weighted score of the three components, lower is better.
    pub f_score: f64,
}

impl MetricsReport {
    pub fn csv_header() -> &'static str {
        "p_sell,p_claim,p_abstain,mean_hold_time,defender_cost,f_score"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.p_sell,
            self.p_claim,
            self.p_abstain,
            self.mean_hold_time,
            self.defender_cost,
            self.f_score
        )
    }
}

fn check_shape(cfg: &GameConfig, policy: &Policy) -> Result<(), MetricsError> {
    if policy.n_shares() != cfg.n_shares || policy.horizon() != cfg.horizon {
        return Err(MetricsError::ShapeMismatch {
            policy_shares: policy.n_shares(),
            policy_horizon: policy.horizon(),
            game_shares: cfg.n_shares,
            game_horizon: cfg.horizon,
        });
    }
    Ok(())
}

/// Accumulates terminated probability mass into the final report.
#[derive(Default)]
struct Tally {
    p_sell: f64,
    p_claim: f64,
    p_abstain: f64,
    hold_slots: f64,
    share_mass: f64,
    cost: f64,
}

impl Tally {
    /// Record `mass` terminating at the stop substep of `slot` holding
    /// `shares`, via `action`, receiving `payout` from the defender.
    fn terminate(
        &mut self,
        mass: f64,
        shares: u32,
        slot: u32,
        first_share_slot: Option<u32>,
        action: MdpAction,
        payout: f64,
    ) {
        if shares >= 1 {
            let held = f64::from(slot - first_share_slot.expect("shares imply an extraction slot"));
            self.hold_slots += mass * held;
            self.share_mass += mass;
        }
        match action {
            MdpAction::Sell if shares >= 1 => self.p_sell += mass,
            MdpAction::TurnIn if shares >= 1 => self.p_claim += mass,
            // Cashing out nothing and running out the clock are both
            // abstentions.
            _ => self.p_abstain += mass,
        }
        self.cost += mass * payout;
    }

    fn into_report(
        self,
        cfg: &GameConfig,
        weights: &MetricWeights,
        convention: HoldTimeConvention,
        total_mass: f64,
    ) -> Result<MetricsReport, MetricsError> {
        let terminated = self.p_sell + self.p_claim + self.p_abstain;
        if (terminated - total_mass).abs() > 1e-9 * total_mass.max(1.0) {
            return Err(MetricsError::MassLeak(terminated / total_mass));
        }
        let scale = 1.0 / total_mass;
        let mean_hold_time = match convention {
            HoldTimeConvention::ConditionalOnShare => {
                if self.share_mass > 0.0 {
                    self.hold_slots / self.share_mass
                } else {
                    0.0
                }
            }
            HoldTimeConvention::UnconditionalZero => self.hold_slots * scale,
        };
        let defender_cost = self.cost * scale;
        let f_score = weights.combine(
            self.p_sell * scale,
            mean_hold_time / f64::from(cfg.horizon),
            defender_cost / cfg.key_value.to_f64(),
        );
        Ok(MetricsReport {
            p_sell: self.p_sell * scale,
            p_claim: self.p_claim * scale,
            p_abstain: self.p_abstain * scale,
            mean_hold_time,
            defender_cost,
            f_score,
        })
    }
}

/// Exact metrics by forward probability propagation, holding-time averaged
/// conditionally on obtaining a share.
pub fn forward_metrics(
    cfg: &GameConfig,
    params: &AttackerParams,
    spec: &RewardSpec,
    policy: &Policy,
    weights: &MetricWeights,
) -> Result<MetricsReport, MetricsError> {
    forward_metrics_with(cfg, params, spec, policy, weights, HoldTimeConvention::ConditionalOnShare)
}

/// Exact metrics with an explicit holding-time convention.
///
/// Probability mass flows from the entry state through the policy-induced
/// chain, keyed by share count and the slot of first extraction so the
/// holding time is exact, not just its mean bound.
pub fn forward_metrics_with(
    cfg: &GameConfig,
    params: &AttackerParams,
    spec: &RewardSpec,
    policy: &Policy,
    weights: &MetricWeights,
    convention: HoldTimeConvention,
) -> Result<MetricsReport, MetricsError> {
    cfg.validate()?;
    params.validate()?;
    spec.validate()?;
    weights.validate()?;
    check_shape(cfg, policy)?;

    let mut tally = Tally::default();
    // Mass per (shares, slot of first extraction), entering the attack
    // substep of the current slot.
    let mut layer: BTreeMap<(u32, Option<u32>), f64> = BTreeMap::new();
    layer.insert((0, None), 1.0);
    for slot in 0..=cfg.horizon {
        // Attack substep: one binomial branching per mass bucket.
        let mut stop_layer: BTreeMap<(u32, Option<u32>), f64> = BTreeMap::new();
        for (&(shares, first), &mass) in &layer {
            let state = MdpState::Live { shares, slot, phase: Phase::Attack };
            let action = policy.action(&state)?;
            for tr in transition_distribution(cfg, params, spec, &state, &action)? {
                let MdpState::Live { shares: gained, .. } = tr.state else {
                    unreachable!("attack substep always resolves into the stop substep")
                };
                let first = match first {
                    None if gained > 0 => Some(slot),
                    keep => keep,
                };
                *stop_layer.entry((gained, first)).or_insert(0.0) += mass * tr.probability;
            }
        }
        // Stop substep: cash out, or wait into the next slot.
        layer.clear();
        for (&(shares, first), &mass) in &stop_layer {
            let state = MdpState::Live { shares, slot, phase: Phase::Stop };
            let action = policy.action(&state)?;
            for tr in transition_distribution(cfg, params, spec, &state, &action)? {
                match tr.state {
                    MdpState::Terminal => {
                        tally.terminate(mass * tr.probability, shares, slot, first, action, tr.reward);
                    }
                    MdpState::Live { .. } => {
                        *layer.entry((shares, first)).or_insert(0.0) += mass * tr.probability;
                    }
                }
            }
        }
    }
    tally.into_report(cfg, weights, convention, 1.0)
}

/// Trajectories per derived RNG stream; estimates merge in block order, so
/// results are independent of how blocks might be scheduled.
const TRAJECTORIES_PER_BLOCK: u64 = 4096;

/// Seeded Monte Carlo estimate of [`forward_metrics`]; same defaults.
pub fn monte_carlo_metrics(
    cfg: &GameConfig,
    params: &AttackerParams,
    spec: &RewardSpec,
    policy: &Policy,
    weights: &MetricWeights,
    trajectories: u64,
    seed: u64,
) -> Result<MetricsReport, MetricsError> {
    monte_carlo_metrics_with(
        cfg,
        params,
        spec,
        policy,
        weights,
        trajectories,
        seed,
        HoldTimeConvention::ConditionalOnShare,
    )
}

/// Seeded Monte Carlo estimate with an explicit holding-time convention.
///
/// Sampling walks the same transition law the exact path uses, block by
/// block on per-block cipher streams: the same seed always produces the
/// same report, bit for bit.
#[allow(clippy::too_many_arguments)]
pub fn monte_carlo_metrics_with(
    cfg: &GameConfig,
    params: &AttackerParams,
    spec: &RewardSpec,
    policy: &Policy,
    weights: &MetricWeights,
    trajectories: u64,
    seed: u64,
    convention: HoldTimeConvention,
) -> Result<MetricsReport, MetricsError> {
    cfg.validate()?;
    params.validate()?;
    spec.validate()?;
    weights.validate()?;
    check_shape(cfg, policy)?;
    if trajectories == 0 {
        return Err(MetricsError::NoTrajectories);
    }

    let mut tally = Tally::default();
    let blocks = trajectories.div_ceil(TRAJECTORIES_PER_BLOCK);
    for block in 0..blocks {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(block);
        let in_block =
            TRAJECTORIES_PER_BLOCK.min(trajectories - block * TRAJECTORIES_PER_BLOCK);
        for _ in 0..in_block {
            sample_trajectory(cfg, params, spec, policy, &mut rng, &mut tally)?;
        }
    }
    tally.into_report(cfg, weights, convention, trajectories as f64)
}

fn sample_trajectory(
    cfg: &GameConfig,
    params: &AttackerParams,
    spec: &RewardSpec,
    policy: &Policy,
    rng: &mut ChaCha8Rng,
    tally: &mut Tally,
) -> Result<(), MetricsError> {
    let mut shares = 0u32;
    let mut first: Option<u32> = None;
    for slot in 0..=cfg.horizon {
        let state = MdpState::Live { shares, slot, phase: Phase::Attack };
        let action = policy.action(&state)?;
        let outcome = sample_transition(cfg, params, spec, &state, &action, rng)?;
        let MdpState::Live { shares: gained, .. } = outcome.0 else {
            unreachable!("attack substep always resolves into the stop substep")
        };
        if first.is_none() && gained > 0 {
            first = Some(slot);
        }
        shares = gained;

        let state = MdpState::Live { shares, slot, phase: Phase::Stop };
        let action = policy.action(&state)?;
        let (next, payout) = sample_transition(cfg, params, spec, &state, &action, rng)?;
        if matches!(next, MdpState::Terminal) {
            tally.terminate(1.0, shares, slot, first, action, payout);
            return Ok(());
        }
    }
    unreachable!("waiting at the final slot terminates")
}

/// Inverse-CDF draw over the transition law's successor list.
fn sample_transition(
    cfg: &GameConfig,
    params: &AttackerParams,
    spec: &RewardSpec,
    state: &MdpState,
    action: &MdpAction,
    rng: &mut ChaCha8Rng,
) -> Result<(MdpState, f64), MetricsError> {
    let transitions = transition_distribution(cfg, params, spec, state, action)?;
    let draw: f64 = rng.gen();
    let mut cumulative = 0.0;
    for tr in &transitions {
        cumulative += tr.probability;
        if draw < cumulative {
            return Ok((tr.state, tr.reward));
        }
    }
    let last = transitions.last().expect("transition lists are never empty");
    Ok((last.state, last.reward))
}

/// Expected insurance outlay `Σ first-share-reward · leak-probability`
/// over a book of covered users.
pub fn expected_claim_cost(users: &[(Money, f64)]) -> Result<Money, MetricsError> {
    let mut total = Money::ZERO;
    for &(first_share_reward, leak_prob) in users {
        if !(0.0..=1.0).contains(&leak_prob) {
            return Err(MetricsError::ProbabilityOutOfRange(leak_prob));
        }
        total = total
            .checked_add(first_share_reward.mul_f64(leak_prob))
            .expect("claim cost overflow");
    }
    Ok(total)
}

/// Operator's break-even service fee: the expected claim cost scaled by
/// `1 + ln λ · ln ln λ` for security parameter `λ`, plus operating cost.
/// Requires `λ > e` so the factor exceeds 1.
pub fn service_fee(mu: Money, op_cost: Money, lambda: f64) -> Result<Money, MetricsError> {
    if !(lambda > std::f64::consts::E) {
        return Err(MetricsError::SecurityParameterTooSmall(lambda));
    }
    if mu.is_negative() || op_cost.is_negative() {
        return Err(MetricsError::InvalidWeights(
            "claim cost and operating cost must be non-negative".into(),
        ));
    }
    let factor = 1.0 + lambda.ln() * lambda.ln().ln();
    Ok(mu.mul_f64(factor) + op_cost)
}
