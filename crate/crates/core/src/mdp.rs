//! Finite-horizon decision model of a share-extraction campaign.
//!
//! Each time slot has two substeps. In substep 0 the attacker chooses how
//! many enclaves to target; each targeted enclave independently yields its
//! share with probability `success_prob`, and the outcome resolves within
//! the slot. In substep 1 the attacker may cash out — sell the shares held
//! or turn them in for the bounty — or wait, which advances the clock.
//! Waiting past the final slot ends the game with nothing.
//!
//! [`transition_distribution`] is the single source of truth for this law;
//! the backward-induction solver, the brute-force oracle, and the metrics
//! propagation all consume it, so any change to the dynamics lives in one
//! place.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::game::{reward, share_value, AttackerParams, GameConfig, GameError, RewardSpec};

/// Substep within a slot: targeting enclaves, then deciding whether to stop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Attack,
    Stop,
}

impl Phase {
    /// Substep index used in tabular exports: 0 targets, 1 stops.
    pub fn index(self) -> u8 {
        match self {
            Phase::Attack => 0,
            Phase::Stop => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MdpState {
    Live { shares: u32, slot: u32, phase: Phase },
    Terminal,
}

impl MdpState {
    pub fn attack(shares: u32, slot: u32) -> Self {
        MdpState::Live { shares, slot, phase: Phase::Attack }
    }

    pub fn stop(shares: u32, slot: u32) -> Self {
        MdpState::Live { shares, slot, phase: Phase::Stop }
    }

    /// Game entry point: nothing extracted, clock at zero, targeting substep.
    pub fn root() -> Self {
        MdpState::attack(0, 0)
    }
}

impl fmt::Display for MdpState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MdpState::Live { shares, slot, phase } => {
                write!(f, "(k={shares}, t={slot}, d={})", phase.index())
            }
            MdpState::Terminal => write!(f, "terminal"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MdpAction {
    /// Target this many enclaves (substep 0 only; at most the shares still out).
    Attack(u32),
    /// Let the slot end without cashing out (substep 1 only).
    Wait,
    /// Claim the bounty for the shares held (substep 1 only).
    TurnIn,
    /// Sell the shares held at their black-market value (substep 1 only).
    Sell,
}

impl fmt::Display for MdpAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MdpAction::Attack(n) => write!(f, "attack({n})"),
            MdpAction::Wait => write!(f, "wait"),
            MdpAction::TurnIn => write!(f, "turn_in"),
            MdpAction::Sell => write!(f, "sell"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MdpError {
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("state {state} does not belong to a game with {max_shares} shares and horizon {horizon}")]
    IllegalState { state: MdpState, max_shares: u32, horizon: u32 },
    #[error("action {action} is illegal in state {state}")]
    IllegalAction { state: MdpState, action: MdpAction },
    #[error("brute force supports at most {max_shares} shares and horizon {max_horizon}")]
    BruteForceBounds { max_shares: u32, max_horizon: u32 },
    #[error("brute force would enumerate about {estimated} strategies (cap {cap})")]
    InstanceTooLarge { estimated: u64, cap: u64 },
    #[error("policy was built for {policy_shares} shares / horizon {policy_horizon}, value table for {table_shares} / {table_horizon}")]
    ShapeMismatch {
        policy_shares: u32,
        policy_horizon: u32,
        table_shares: u32,
        table_horizon: u32,
    },
}

/// One weighted successor of a (state, action) pair. `reward` is the
/// immediate payoff on that edge (negative for attack spending).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub state: MdpState,
    pub probability: f64,
    pub reward: f64,
}

fn check_state(cfg: &GameConfig, state: &MdpState) -> Result<(), MdpError> {
    match state {
        MdpState::Terminal => Ok(()),
        MdpState::Live { shares, slot, .. } => {
            if *shares > cfg.n_shares || *slot > cfg.horizon {
                Err(MdpError::IllegalState {
                    state: *state,
                    max_shares: cfg.n_shares,
                    horizon: cfg.horizon,
                })
            } else {
                Ok(())
            }
        }
    }
}

/// Legal actions in preference order: the solver breaks value ties by
/// picking the earliest entry, so substep 1 prefers turn-in over sell over
/// wait, and substep 0 prefers targeting fewer enclaves.
fn legal_actions(cfg: &GameConfig, state: &MdpState) -> Vec<MdpAction> {
    match state {
        MdpState::Terminal => Vec::new(),
        MdpState::Live { shares, phase: Phase::Attack, .. } => {
            (0..=cfg.n_shares - shares).map(MdpAction::Attack).collect()
        }
        MdpState::Live { phase: Phase::Stop, .. } => {
            vec![MdpAction::TurnIn, MdpAction::Sell, MdpAction::Wait]
        }
    }
}

/// Probability of exactly `i` successes in `n` independent trials.
fn binomial_pmf(n: u32, i: u32, p: f64) -> f64 {
    // Iterative coefficient keeps this exact for the small trial counts the
    // model uses and stable for large ones.
    let mut coeff = 1.0f64;
    for j in 0..i {
        coeff = coeff * f64::from(n - j) / f64::from(j + 1);
    }
    coeff * p.powi(i as i32) * (1.0 - p).powi((n - i) as i32)
}

/// The complete transition law: every weighted successor of `action` taken
/// in `state`, with immediate rewards. Every consumer of the dynamics —
/// solver, brute-force oracle, exact metrics, Monte Carlo — goes through
/// this function.
pub fn transition_distribution(
    cfg: &GameConfig,
    params: &AttackerParams,
    spec: &RewardSpec,
    state: &MdpState,
    action: &MdpAction,
) -> Result<Vec<Transition>, MdpError> {
    cfg.validate()?;
    params.validate()?;
    spec.validate()?;
    check_state(cfg, state)?;
    let illegal = || MdpError::IllegalAction { state: *state, action: *action };
    let MdpState::Live { shares, slot, phase } = *state else {
        return Err(illegal());
    };
    match (phase, action) {
        (Phase::Attack, MdpAction::Attack(n)) => {
            let n = *n;
            if n > cfg.n_shares - shares {
                return Err(illegal());
            }
            let spend = -params.cost_per_tee.mul_int(n).to_f64();
            let mut out = Vec::with_capacity(n as usize + 1);
            for i in 0..=n {
                let probability = binomial_pmf(n, i, params.success_prob);
                if probability > 0.0 {
                    out.push(Transition {
                        state: MdpState::stop(shares + i, slot),
                        probability,
                        reward: spend,
                    });
                }
            }
            Ok(out)
        }
        (Phase::Stop, MdpAction::TurnIn) => Ok(vec![Transition {
            state: MdpState::Terminal,
            probability: 1.0,
            reward: reward(spec, cfg, shares, slot)?.to_f64(),
        }]),
        (Phase::Stop, MdpAction::Sell) => Ok(vec![Transition {
            state: MdpState::Terminal,
            probability: 1.0,
            reward: share_value(cfg, shares)?.to_f64(),
        }]),
        (Phase::Stop, MdpAction::Wait) => {
            let state = if slot < cfg.horizon {
                MdpState::attack(shares, slot + 1)
            } else {
                MdpState::Terminal
            };
            Ok(vec![Transition { state, probability: 1.0, reward: 0.0 }])
        }
        _ => Err(illegal()),
    }
}

/// Expected immediate reward plus successor value of one action, where
/// `successor_value` prices the states the action can lead to.
fn action_value(
    cfg: &GameConfig,
    params: &AttackerParams,
    spec: &RewardSpec,
    state: &MdpState,
    action: &MdpAction,
    successor_value: &dyn Fn(&MdpState) -> f64,
) -> Result<f64, MdpError> {
    let mut total = 0.0;
    for tr in transition_distribution(cfg, params, spec, state, action)? {
        total += tr.probability * (tr.reward + successor_value(&tr.state));
    }
    Ok(total)
}

/// Expected future profit of every state under optimal play.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    n_shares: u32,
    horizon: u32,
    /// Indexed `[slot][shares]`.
    attack: Vec<Vec<f64>>,
    stop: Vec<Vec<f64>>,
}

impl ValueTable {
    pub fn n_shares(&self) -> u32 {
        self.n_shares
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    pub fn value(&self, state: &MdpState) -> Result<f64, MdpError> {
        match state {
            MdpState::Terminal => Ok(0.0),
            MdpState::Live { shares, slot, phase } => {
                if *shares > self.n_shares || *slot > self.horizon {
                    return Err(MdpError::IllegalState {
                        state: *state,
                        max_shares: self.n_shares,
                        horizon: self.horizon,
                    });
                }
                let table = match phase {
                    Phase::Attack => &self.attack,
                    Phase::Stop => &self.stop,
                };
                Ok(table[*slot as usize][*shares as usize])
            }
        }
    }

    /// Value of the whole game: expected profit from the entry state.
    pub fn root(&self) -> f64 {
        self.attack[0][0]
    }
}

/// Deterministic action choice for every live state.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    n_shares: u32,
    horizon: u32,
    /// Indexed `[slot][shares]`; the entry is the target count.
    attack: Vec<Vec<u32>>,
    stop: Vec<Vec<MdpAction>>,
}

impl Policy {
    pub fn n_shares(&self) -> u32 {
        self.n_shares
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    pub fn action(&self, state: &MdpState) -> Result<MdpAction, MdpError> {
        match state {
            MdpState::Terminal => Err(MdpError::IllegalState {
                state: *state,
                max_shares: self.n_shares,
                horizon: self.horizon,
            }),
            MdpState::Live { shares, slot, phase } => {
                if *shares > self.n_shares || *slot > self.horizon {
                    return Err(MdpError::IllegalState {
                        state: *state,
                        max_shares: self.n_shares,
                        horizon: self.horizon,
                    });
                }
                Ok(match phase {
                    Phase::Attack => {
                        MdpAction::Attack(self.attack[*slot as usize][*shares as usize])
                    }
                    Phase::Stop => self.stop[*slot as usize][*shares as usize],
                })
            }
        }
    }

    /// Build a policy from a closure, rejecting any illegal choice (wrong
    /// substep, or targeting more enclaves than remain).
    pub fn from_fn(
        n_shares: u32,
        horizon: u32,
        mut choose: impl FnMut(&MdpState) -> MdpAction,
    ) -> Result<Self, MdpError> {
        let mut attack = vec![vec![0u32; n_shares as usize + 1]; horizon as usize + 1];
        let mut stop =
            vec![vec![MdpAction::Wait; n_shares as usize + 1]; horizon as usize + 1];
        for slot in 0..=horizon {
            for shares in 0..=n_shares {
                let state = MdpState::attack(shares, slot);
                match choose(&state) {
                    MdpAction::Attack(n) if n <= n_shares - shares => {
                        attack[slot as usize][shares as usize] = n;
                    }
                    action => return Err(MdpError::IllegalAction { state, action }),
                }
                let state = MdpState::stop(shares, slot);
                match choose(&state) {
                    action @ (MdpAction::Wait | MdpAction::TurnIn | MdpAction::Sell) => {
                        stop[slot as usize][shares as usize] = action;
                    }
                    action => return Err(MdpError::IllegalAction { state, action }),
                }
            }
        }
        Ok(Policy { n_shares, horizon, attack, stop })
    }
}

/// Actions whose values sit within this relative tolerance of the best are
/// treated as tied when the policy is extracted.
///
/// Backward induction in `f64` cannot separate genuinely distinct optima
/// whose gap is below its accumulated rounding noise (for flat reward
/// schedules the gap between targeting plans is the horizon-truncation
/// mass, far below one ulp), and letting sub-noise rounding pick the
/// action would make reported policies — and every metric computed from
/// them — jitter across adjacent parameter values. Stored values are never
/// affected: they always keep the exact maximum.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Exact optimal policy and value table by backward induction.
///
/// Within each slot the stop values are computed before the targeting
/// values, because targeting resolves into the same slot's stop substep.
/// Ties — including near-ties within [`TIE_TOLERANCE`] — are broken
/// deterministically. Stopping prefers turn-in over sell over wait.
/// Targeting prefers the largest batch: whenever plans are separable at
/// all, extracting faster is the strict optimum (delay only adds
/// horizon-truncation risk and rewards never grow with time), so the
/// canonical representative of a tie band is its most aggressive member.
/// That choice also keeps the selected policy stable across parameter
/// changes that only move sub-tolerance value gaps.
pub fn solve(
    cfg: &GameConfig,
    params: &AttackerParams,
    spec: &RewardSpec,
) -> Result<(Policy, ValueTable), MdpError> {
    cfg.validate()?;
    params.validate()?;
    spec.validate()?;
    let n = cfg.n_shares as usize;
    let t_max = cfg.horizon as usize;
    let mut values = ValueTable {
        n_shares: cfg.n_shares,
        horizon: cfg.horizon,
        attack: vec![vec![0.0; n + 1]; t_max + 1],
        stop: vec![vec![0.0; n + 1]; t_max + 1],
    };
    let mut policy = Policy {
        n_shares: cfg.n_shares,
        horizon: cfg.horizon,
        attack: vec![vec![0u32; n + 1]; t_max + 1],
        stop: vec![vec![MdpAction::Wait; n + 1]; t_max + 1],
    };
    for slot in (0..=cfg.horizon).rev() {
        // Stop substep first: its wait branch looks at the next slot, which
        // is already solved, and the targeting substep below needs this
        // slot's stop values.
        for phase in [Phase::Stop, Phase::Attack] {
            for shares in 0..=cfg.n_shares {
                let state = MdpState::Live { shares, slot, phase };
                let mut candidates = Vec::new();
                for action in legal_actions(cfg, &state) {
                    let value = action_value(cfg, params, spec, &state, &action, &|next| {
                        values.value(next).expect("successors stay in range")
                    })?;
                    candidates.push((action, value));
                }
                let value = candidates
                    .iter()
                    .map(|&(_, v)| v)
                    .fold(f64::NEG_INFINITY, f64::max);
                let cutoff = value - TIE_TOLERANCE * value.abs().max(1.0);
                let action = match phase {
                    // Largest in-band batch: fastest extraction.
                    Phase::Attack => {
                        candidates.into_iter().filter(|&(_, v)| v >= cutoff).next_back()
                    }
                    // Turn-in over sell over wait.
                    Phase::Stop => candidates.into_iter().find(|&(_, v)| v >= cutoff),
                }
                .map(|(action, _)| action)
                .expect("every live state has actions");
                match phase {
                    Phase::Attack => {
                        values.attack[slot as usize][shares as usize] = value;
                        let MdpAction::Attack(count) = action else { unreachable!() };
                        policy.attack[slot as usize][shares as usize] = count;
                    }
                    Phase::Stop => {
                        values.stop[slot as usize][shares as usize] = value;
                        policy.stop[slot as usize][shares as usize] = action;
                    }
                }
            }
        }
    }
    Ok((policy, values))
}

/// Hard ceiling on the strategy count [`brute_force_value`] will enumerate.
const BRUTE_FORCE_CAP: u64 = 3_000_000;

/// Reachability-aware upper bound on the number of deterministic strategies,
/// used to refuse oversized instances before enumerating.
fn strategy_count_bound(
    cfg: &GameConfig,
    params: &AttackerParams,
    spec: &RewardSpec,
    state: &MdpState,
    memo: &mut HashMap<MdpState, u64>,
) -> Result<u64, MdpError> {
    if matches!(state, MdpState::Terminal) {
        return Ok(1);
    }
    if let Some(&count) = memo.get(state) {
        return Ok(count);
    }
    let mut total = 0u64;
    for action in legal_actions(cfg, state) {
        let mut combos = 1u64;
        for tr in transition_distribution(cfg, params, spec, state, &action)? {
            let below = strategy_count_bound(cfg, params, spec, &tr.state, memo)?;
            combos = combos.saturating_mul(below);
        }
        total = total.saturating_add(combos);
    }
    memo.insert(*state, total);
    Ok(total)
}

/// Expected profit of one fully specified strategy, by plain expectation
/// over its outcome tree — no optimization anywhere in the walk.
fn evaluate_strategy(
    cfg: &GameConfig,
    params: &AttackerParams,
    spec: &RewardSpec,
    assignment: &HashMap<MdpState, MdpAction>,
    state: &MdpState,
) -> Result<f64, MdpError> {
    if matches!(state, MdpState::Terminal) {
        return Ok(0.0);
    }
    let action = assignment[state];
    let mut total = 0.0;
    for tr in transition_distribution(cfg, params, spec, state, &action)? {
        total +=
            tr.probability * (tr.reward + evaluate_strategy(cfg, params, spec, assignment, &tr.state)?);
    }
    Ok(total)
}

fn enumerate_strategies(
    cfg: &GameConfig,
    params: &AttackerParams,
    spec: &RewardSpec,
    assignment: &mut HashMap<MdpState, MdpAction>,
    pending: &mut Vec<MdpState>,
    best: &mut f64,
) -> Result<(), MdpError> {
    let Some(state) = pending.pop() else {
        let value = evaluate_strategy(cfg, params, spec, assignment, &MdpState::root())?;
        if value > *best {
            *best = value;
        }
        return Ok(());
    };
    for action in legal_actions(cfg, &state) {
        assignment.insert(state, action);
        let mut newly_queued = 0;
        for tr in transition_distribution(cfg, params, spec, &state, &action)? {
            if matches!(tr.state, MdpState::Terminal) {
                continue;
            }
            if !assignment.contains_key(&tr.state) && !pending.contains(&tr.state) {
                pending.push(tr.state);
                newly_queued += 1;
            }
        }
        enumerate_strategies(cfg, params, spec, assignment, pending, best)?;
        for _ in 0..newly_queued {
            pending.pop();
        }
        assignment.remove(&state);
    }
    pending.push(state);
    Ok(())
}

/// Independent oracle for [`solve`] on tiny instances: enumerates every
/// deterministic strategy over the reachable states, evaluates each by
/// exact expectation, and returns the best profit found.
///
/// Refuses instances beyond 2 shares / horizon 3, or whose strategy space
/// outgrows an internal cap.
pub fn brute_force_value(
    cfg: &GameConfig,
    params: &AttackerParams,
    spec: &RewardSpec,
) -> Result<f64, MdpError> {
    cfg.validate()?;
    params.validate()?;
    spec.validate()?;
    const MAX_SHARES: u32 = 2;
    const MAX_HORIZON: u32 = 3;
    if cfg.n_shares > MAX_SHARES || cfg.horizon > MAX_HORIZON {
        return Err(MdpError::BruteForceBounds {
            max_shares: MAX_SHARES,
            max_horizon: MAX_HORIZON,
        });
    }
    let mut memo = HashMap::new();
    let estimated =
        strategy_count_bound(cfg, params, spec, &MdpState::root(), &mut memo)?;
    if estimated > BRUTE_FORCE_CAP {
        return Err(MdpError::InstanceTooLarge { estimated, cap: BRUTE_FORCE_CAP });
    }
    let mut assignment = HashMap::new();
    let mut pending = vec![MdpState::root()];
    // Doing nothing for the whole game is always available, so the optimum
    // is at least zero.
    let mut best = 0.0f64;
    enumerate_strategies(cfg, params, spec, &mut assignment, &mut pending, &mut best)?;
    Ok(best)
}

/// Render a solved game as CSV with columns `k,t,d,action,n,value`; the
/// `n` column is only filled for targeting rows.
pub fn policy_csv(policy: &Policy, values: &ValueTable) -> Result<String, MdpError> {
    if policy.n_shares != values.n_shares || policy.horizon != values.horizon {
        return Err(MdpError::ShapeMismatch {
            policy_shares: policy.n_shares,
            policy_horizon: policy.horizon,
            table_shares: values.n_shares,
            table_horizon: values.horizon,
        });
    }
    let mut out = String::from("k,t,d,action,n,value\n");
    for slot in 0..=policy.horizon {
        for phase in [Phase::Attack, Phase::Stop] {
            for shares in 0..=policy.n_shares {
                let state = MdpState::Live { shares, slot, phase };
                let action = policy.action(&state)?;
                let value = values.value(&state)?;
                let (name, count) = match action {
                    MdpAction::Attack(n) => ("attack", n.to_string()),
                    MdpAction::Wait => ("wait", String::new()),
                    MdpAction::TurnIn => ("turn_in", String::new()),
                    MdpAction::Sell => ("sell", String::new()),
                };
                out.push_str(&format!(
                    "{shares},{slot},{},{name},{count},{value}\n",
                    phase.index()
                ));
            }
        }
    }
    Ok(out)
}
