//! Static game data: share values, attack costs, reward-function families,
//! and closed-form best responses for attackers with deterministic costs.
//!
//! A key of value `v` is split into `n_shares` shares with recovery
//! threshold `threshold`; the interaction lasts `horizon` time slots.
//! [`share_value`] prices a partial set of shares on the black market and
//! [`reward`] prices the same set at the bounty contract under a chosen
//! [`RewardSpec`]. Both are exact on the money grid, which is what makes
//! the worked deterministic examples reproduce to the cent.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::money::Money;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GameError {
    #[error("share count {shares} out of range 0..={max}")]
    ShareCountOutOfRange { shares: u32, max: u32 },
    #[error("time slot {slot} out of range 0..={horizon}")]
    SlotOutOfRange { slot: u32, horizon: u32 },
    #[error("invalid game config: {0}")]
    InvalidConfig(String),
    #[error("invalid attacker params: {0}")]
    InvalidParams(String),
    #[error("invalid reward spec: {0}")]
    InvalidSpec(String),
    #[error("invalid cost function: {0}")]
    InvalidCost(String),
}

/// How partial share sets are priced relative to the full key value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueVariant {
    /// `v·k/m` below the threshold, `v` at or above it.
    LinearCapped,
    /// `min(⌈v·k/m⌉, v)`, rounding up to whole currency units.
    CeilCapped,
}

/// The bounty game: `n_shares` shares, recovery threshold, slot horizon,
/// and the black-market value of the full key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    pub n_shares: u32,
    pub threshold: u32,
    pub horizon: u32,
    pub key_value: Money,
    pub value_variant: ValueVariant,
    /// Price share sets below the threshold at zero instead of pro rata.
    #[serde(default)]
    pub zero_below_threshold: bool,
}

impl GameConfig {
    pub fn new(
        n_shares: u32,
        threshold: u32,
        horizon: u32,
        key_value: Money,
        value_variant: ValueVariant,
    ) -> Result<Self, GameError> {
        let cfg = GameConfig {
            n_shares,
            threshold,
            horizon,
            key_value,
            value_variant,
            zero_below_threshold: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), GameError> {
        if self.threshold == 0 || self.threshold > self.n_shares {
            return Err(GameError::InvalidConfig(format!(
                "threshold must satisfy 1 <= m <= n_shares, got m={} n={}",
                self.threshold, self.n_shares
            )));
        }
        if self.horizon == 0 {
            return Err(GameError::InvalidConfig("horizon must be >= 1".into()));
        }
        if self.key_value <= Money::ZERO {
            return Err(GameError::InvalidConfig("key value must be positive".into()));
        }
        Ok(())
    }
}

/// Attacker capability: per-slot cost of one targeted enclave and the
/// per-enclave extraction success probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackerParams {
    pub cost_per_tee: Money,
    pub success_prob: f64,
}

impl AttackerParams {
    pub fn new(cost_per_tee: Money, success_prob: f64) -> Result<Self, GameError> {
        let params = AttackerParams { cost_per_tee, success_prob };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), GameError> {
        if self.cost_per_tee.is_negative() {
            return Err(GameError::InvalidParams("attack cost must be >= 0".into()));
        }
        if !(0.0..=1.0).contains(&self.success_prob) {
            return Err(GameError::InvalidParams(format!(
                "success probability must lie in [0,1], got {}",
                self.success_prob
            )));
        }
        Ok(())
    }
}

/// A non-decreasing total attack cost table `C(0..=max_k)` with `C(0) = 0`,
/// for the deterministic-cost analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeterministicCost {
    costs: Vec<Money>,
}

impl DeterministicCost {
    pub fn from_table(costs: Vec<Money>) -> Result<Self, GameError> {
        if costs.is_empty() {
            return Err(GameError::InvalidCost("cost table is empty".into()));
        }
        if costs[0] != Money::ZERO {
            return Err(GameError::InvalidCost("C(0) must be zero".into()));
        }
        if costs.windows(2).any(|w| w[1] < w[0]) {
            return Err(GameError::InvalidCost("cost table must be non-decreasing".into()));
        }
        Ok(DeterministicCost { costs })
    }

    /// `C(k) = k · per_share`.
    pub fn linear(per_share: Money, max_k: u32) -> Result<Self, GameError> {
        if per_share.is_negative() {
            return Err(GameError::InvalidCost("per-share cost must be >= 0".into()));
        }
        Self::from_table((0..=max_k).map(|k| per_share.mul_int(k)).collect())
    }

    pub fn from_fn(max_k: u32, f: impl FnMut(u32) -> Money) -> Result<Self, GameError> {
        Self::from_table((0..=max_k).map(f).collect())
    }

    pub fn max_k(&self) -> u32 {
        (self.costs.len() - 1) as u32
    }

    pub fn cost(&self, k: u32) -> Result<Money, GameError> {
        self.costs
            .get(k as usize)
            .copied()
            .ok_or(GameError::ShareCountOutOfRange { shares: k, max: self.max_k() })
    }
}

/// Reward-function families a bounty contract can pay for `k` shares turned
/// in at slot `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum RewardSpec {
    /// Pays nothing; the no-bounty baseline.
    Zero,
    /// Pays a flat `level` for any non-empty share set.
    Constant { level: Money },
    /// Pays `V(k) + (1 - t/T)·delta + eta`: share value plus a decaying
    /// early-bird bonus.
    Linear { eta: Money, delta: Money },
    /// Pays `level + (1 - t/T)·delta`, where `level` was derived from a
    /// deterministic cost model (see [`det_optimal_constant_reward`]).
    DeterministicStart { level: Money, delta: Money },
    /// Pays the blend `V(N)^epsilon · V(k)^(1-epsilon) + eta`, decayed so it
    /// meets `V(k)` exactly at the horizon. `epsilon` front-loads value onto
    /// small share sets.
    Proposed { epsilon: f64, eta: Money },
    /// Any inner family clamped to `cap_fraction · V(N)`.
    Capped { cap_fraction: f64, inner: Box<RewardSpec> },
}

impl RewardSpec {
    /// The capped blend used throughout the sweeps.
    pub fn capped_proposed(epsilon: f64, eta: Money, cap_fraction: f64) -> Self {
        RewardSpec::Capped {
            cap_fraction,
            inner: Box::new(RewardSpec::Proposed { epsilon, eta }),
        }
    }

    pub fn validate(&self) -> Result<(), GameError> {
        match self {
            RewardSpec::Zero => Ok(()),
            RewardSpec::Constant { level } => {
                if level.is_negative() {
                    return Err(GameError::InvalidSpec("constant level must be >= 0".into()));
                }
                Ok(())
            }
            RewardSpec::Linear { eta, delta } => {
                if eta.is_negative() || delta.is_negative() {
                    return Err(GameError::InvalidSpec("eta and delta must be >= 0".into()));
                }
                Ok(())
            }
            RewardSpec::DeterministicStart { delta, .. } => {
                if delta.is_negative() {
                    return Err(GameError::InvalidSpec("delta must be >= 0".into()));
                }
                Ok(())
            }
            RewardSpec::Proposed { epsilon, eta } => {
                if !(0.0..=1.0).contains(epsilon) {
                    return Err(GameError::InvalidSpec(format!(
                        "epsilon must lie in [0,1], got {epsilon}"
                    )));
                }
                if *eta <= Money::ZERO {
                    return Err(GameError::InvalidSpec("eta must be positive".into()));
                }
                Ok(())
            }
            RewardSpec::Capped { cap_fraction, inner } => {
                if !(*cap_fraction > 0.0 && *cap_fraction <= 1.0) {
                    return Err(GameError::InvalidSpec(format!(
                        "cap fraction must lie in (0,1], got {cap_fraction}"
                    )));
                }
                if matches!(**inner, RewardSpec::Capped { .. }) {
                    return Err(GameError::InvalidSpec("cap may not nest another cap".into()));
                }
                inner.validate()
            }
        }
    }
}

/// Default bonus margin: 1% of the key value.
pub fn default_eta(cfg: &GameConfig) -> Money {
    cfg.key_value.mul_div(1, 100)
}

/// Black-market value `V(k)` of `k` shares. `V(0) = 0`, non-decreasing,
/// and `V(k) = v` once the threshold is met.
pub fn share_value(cfg: &GameConfig, shares: u32) -> Result<Money, GameError> {
    if shares > cfg.n_shares {
        return Err(GameError::ShareCountOutOfRange { shares, max: cfg.n_shares });
    }
    if shares >= cfg.threshold {
        return Ok(cfg.key_value);
    }
    if cfg.zero_below_threshold {
        return Ok(Money::ZERO);
    }
    let pro_rata = cfg.key_value.mul_div(u64::from(shares), u64::from(cfg.threshold));
    Ok(match cfg.value_variant {
        ValueVariant::LinearCapped => pro_rata,
        ValueVariant::CeilCapped => pro_rata.ceil_units().min(cfg.key_value),
    })
}

/// Bounty payout `R(k, t)` for `k` shares turned in at slot `t`.
/// `k = 0` pays zero under every family.
pub fn reward(spec: &RewardSpec, cfg: &GameConfig, shares: u32, slot: u32) -> Result<Money, GameError> {
    if shares > cfg.n_shares {
        return Err(GameError::ShareCountOutOfRange { shares, max: cfg.n_shares });
    }
    if slot > cfg.horizon {
        return Err(GameError::SlotOutOfRange { slot, horizon: cfg.horizon });
    }
    if shares == 0 {
        return Ok(Money::ZERO);
    }
    let remaining = u64::from(cfg.horizon - slot);
    let horizon = u64::from(cfg.horizon);
    Ok(match spec {
        RewardSpec::Zero => Money::ZERO,
        RewardSpec::Constant { level } => *level,
        RewardSpec::Linear { eta, delta } => {
            share_value(cfg, shares)? + delta.mul_div(remaining, horizon) + *eta
        }
        RewardSpec::DeterministicStart { level, delta } => {
            *level + delta.mul_div(remaining, horizon)
        }
        RewardSpec::Proposed { epsilon, eta } => {
            let v_k = share_value(cfg, shares)?;
            let v_n = share_value(cfg, cfg.n_shares)?;
            let blend = v_n.to_f64().powf(*epsilon) * v_k.to_f64().powf(1.0 - *epsilon);
            // The decayed slack over V(k); non-negative because the blend
            // dominates V(k) for any epsilon in [0,1] and eta > 0. Writing
            // the payout as V(k) plus decayed slack makes R(k, T) = V(k)
            // hold exactly on the money grid.
            let slack = Money::from_f64(blend) + *eta - v_k;
            v_k + slack.mul_div(remaining, horizon)
        }
        RewardSpec::Capped { cap_fraction, inner } => {
            let cap = share_value(cfg, cfg.n_shares)?.mul_f64(*cap_fraction);
            reward(inner, cfg, shares, slot)?.min(cap)
        }
    })
}

/// What a deterministic-cost attacker does with its best share count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetAction {
    Sell,
    TurnIn,
    Abstain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestResponse {
    pub shares: u32,
    pub action: DetAction,
    pub profit: Money,
}

/// Best response of an attacker who pays exactly `C(k)` to obtain `k`
/// shares and then either sells them or turns them in at `t = 0`.
///
/// Ties prefer turning in over selling, and fewer shares over more; if no
/// option is strictly profitable the attacker abstains.
pub fn det_best_response(
    cfg: &GameConfig,
    cost: &DeterministicCost,
    spec: &RewardSpec,
) -> Result<BestResponse, GameError> {
    cfg.validate()?;
    spec.validate()?;
    if cost.max_k() < cfg.n_shares {
        return Err(GameError::InvalidCost(format!(
            "cost table covers 0..={} but the game has {} shares",
            cost.max_k(),
            cfg.n_shares
        )));
    }
    let mut best: Option<BestResponse> = None;
    for k in 1..=cfg.n_shares {
        let c = cost.cost(k)?;
        let candidates = [
            (DetAction::TurnIn, reward(spec, cfg, k, 0)?),
            (DetAction::Sell, share_value(cfg, k)?),
        ];
        for (action, gross) in candidates {
            let profit = gross - c;
            if best.as_ref().map_or(true, |b| profit > b.profit) {
                best = Some(BestResponse { shares: k, action, profit });
            }
        }
    }
    match best {
        Some(b) if b.profit > Money::ZERO => Ok(b),
        _ => Ok(BestResponse { shares: 0, action: DetAction::Abstain, profit: Money::ZERO }),
    }
}

/// A reward plan produced by [`det_optimal_constant_reward`]; when the
/// attacker cannot profit anywhere, `bounty_needed` is false and the plan
/// is advisory only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantRewardPlan {
    pub spec: RewardSpec,
    pub bounty_needed: bool,
}

/// Cheapest slot-zero constant reward that beats every sell option for an
/// attacker with deterministic costs: `max_k(V(k) − C(k)) + C(1) + eta0`,
/// decaying by `delta0` over the horizon.
pub fn det_optimal_constant_reward(
    cfg: &GameConfig,
    cost: &DeterministicCost,
    eta0: Money,
    delta0: Money,
) -> Result<ConstantRewardPlan, GameError> {
    cfg.validate()?;
    if eta0 <= Money::ZERO {
        return Err(GameError::InvalidSpec("eta0 must be positive".into()));
    }
    if delta0.is_negative() {
        return Err(GameError::InvalidSpec("delta0 must be >= 0".into()));
    }
    if cost.max_k() < cfg.n_shares {
        return Err(GameError::InvalidCost(format!(
            "cost table covers 0..={} but the game has {} shares",
            cost.max_k(),
            cfg.n_shares
        )));
    }
    let mut max_profit = None;
    for k in 1..=cfg.n_shares {
        let profit = share_value(cfg, k)? - cost.cost(k)?;
        if max_profit.map_or(true, |m| profit > m) {
            max_profit = Some(profit);
        }
    }
    let max_profit = max_profit.expect("n_shares >= 1");
    let level = max_profit + cost.cost(1)? + eta0;
    Ok(ConstantRewardPlan {
        spec: RewardSpec::DeterministicStart { level, delta: delta0 },
        bounty_needed: max_profit >= Money::ZERO,
    })
}
