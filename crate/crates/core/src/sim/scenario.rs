//! Scriptable scenarios: a JSON file lists timestamped operations and
//! final-state checks, and the runner drives a [`SimWorld`] through them
//! deterministically.
//!
//! Scripts let the command line (and the test suite) exercise whole
//! protocol stories — compromise, dispute, bounty, recovery — without
//! writing Rust for each one.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::crypto::ShareSecret;
use super::pok::claim_commitment;
use super::world::{
    ProviderBehavior, RotationMode, SimConfig, SimError, SimReport, SimWorld, SignOutcome,
    TokenQuality, TxInfo,
};
use crate::money::Money;

/// One scripted run: operations in slot order plus end-state checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    /// Overrides the config seed so each script owns its randomness.
    #[serde(default)]
    pub seed: Option<u64>,
    pub steps: Vec<Step>,
    /// Slot to advance to after the last step (lets held rewards mature).
    #[serde(default)]
    pub final_slot: Option<u64>,
    #[serde(default)]
    pub checks: Vec<Check>,
}

impl Scenario {
    pub fn from_json_str(text: &str) -> Result<Self, SimError> {
        serde_json::from_str(text).map_err(|e| SimError::Scenario(format!("bad scenario: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub slot: u64,
    pub op: Op,
}

/// Token quality by name, for scripts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenName {
    Valid,
    WrongNonce,
    ForgedSignature,
}

impl From<TokenName> for TokenQuality {
    fn from(name: TokenName) -> Self {
        match name {
            TokenName::Valid => TokenQuality::Valid,
            TokenName::WrongNonce => TokenQuality::WrongNonce,
            TokenName::ForgedSignature => TokenQuality::ForgedSignature,
        }
    }
}

fn default_token() -> TokenName {
    TokenName::Valid
}

/// How a scripted transfer obtains its signature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransferRoute {
    /// Token-checked enclave signing.
    Authorized,
    /// The attacker signs with stolen key material; no token recorded.
    Unauthorized,
    /// A signature made up from thin air.
    Forged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Op {
    Mint { account: String, amount: f64 },
    RegisterUser {
        account: String,
        #[serde(default)]
        oauth_ids: Vec<String>,
        #[serde(default = "default_token")]
        token: TokenName,
    },
    Transfer {
        from: String,
        to: String,
        amount: f64,
        nonce: u64,
        route: TransferRoute,
        #[serde(default = "default_token")]
        token: TokenName,
    },
    ReplaceKey { from: String, to: String, attestation: bool },
    InsuranceClaim {
        account: String,
        from: String,
        to: String,
        amount: f64,
        nonce: u64,
        behavior: ProviderBehavior,
    },
    AvailabilityRequest { account: String, request: String, behavior: ProviderBehavior },
    /// Copy `count` of a user's shares into a named stash.
    Exfiltrate { account: String, count: u32, stash: String },
    BountyCommit { claimant: String, stash: String },
    BountyReveal { claimant: String, stash: String },
    RotateKeys { mode: RotationModeName },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RotationModeName {
    Correct,
    Mismatched,
}

impl From<RotationModeName> for RotationMode {
    fn from(name: RotationModeName) -> Self {
        match name {
            RotationModeName::Correct => RotationMode::Correct,
            RotationModeName::Mismatched => RotationMode::Mismatched,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Check {
    RedFlag { expected: bool },
    EpochEq { expected: u64 },
    BalanceEq { account: String, amount: f64 },
    BalanceMin { account: String, amount: f64 },
    BurnedEq { amount: f64 },
    BurnedMin { amount: f64 },
    HeldEq { amount: f64 },
    EventCountMin { event: String, count: usize },
    EventAbsent { event: String },
    LastResult { expected: String },
}

/// What a finished run hands back: the world snapshot, the per-step
/// result strings, and the full event log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioOutcome {
    pub name: String,
    pub steps_run: usize,
    pub results: Vec<String>,
    pub report: SimReport,
    pub events_jsonl: String,
}

struct Stash {
    shares: Vec<ShareSecret>,
    salts: BTreeMap<String, [u8; 16]>,
}

/// Execute a scenario against a fresh world built from `config`.
///
/// Always verifies money conservation and the share-leak scan at the end,
/// then evaluates the script's own checks; any failure is an error.
pub fn run_scenario(config: &SimConfig, scenario: &Scenario) -> Result<ScenarioOutcome, SimError> {
    let mut config = config.clone();
    if let Some(seed) = scenario.seed {
        config.seed = seed;
    }
    let mut world = SimWorld::new(config)?;
    let mut stashes: BTreeMap<String, Stash> = BTreeMap::new();
    let mut results: Vec<String> = Vec::new();
    let mut last_slot = 0;
    for (index, step) in scenario.steps.iter().enumerate() {
        if step.slot < last_slot {
            return Err(SimError::Scenario(format!(
                "step {index} goes back in time (slot {} after {})",
                step.slot, last_slot
            )));
        }
        last_slot = step.slot;
        world.advance_to(step.slot)?;
        let result = apply(&mut world, &mut stashes, &step.op)?;
        results.push(result);
    }
    if let Some(final_slot) = scenario.final_slot {
        world.advance_to(final_slot)?;
    }
    world.check_conservation()?;
    world.check_no_share_leak()?;
    let mut failures = Vec::new();
    for check in &scenario.checks {
        if let Err(reason) = evaluate(&world, &results, check) {
            failures.push(reason);
        }
    }
    if !failures.is_empty() {
        return Err(SimError::Scenario(format!(
            "{} check(s) failed: {}",
            failures.len(),
            failures.join("; ")
        )));
    }
    Ok(ScenarioOutcome {
        name: scenario.name.clone(),
        steps_run: scenario.steps.len(),
        results,
        report: world.final_report(),
        events_jsonl: world.events_jsonl(),
    })
}

fn apply(
    world: &mut SimWorld,
    stashes: &mut BTreeMap<String, Stash>,
    op: &Op,
) -> Result<String, SimError> {
    match op {
        Op::Mint { account, amount } => {
            world.mint(account, Money::from_f64(*amount))?;
            Ok(format!("minted {amount} to {account}"))
        }
        Op::RegisterUser { account, oauth_ids, token } => {
            let ids: Vec<&str> = oauth_ids.iter().map(String::as_str).collect();
            match world.register_user(account, &ids, (*token).into())? {
                Some(_) => Ok(format!("registered {account}")),
                None => Ok(format!("registration rejected for {account}")),
            }
        }
        Op::Transfer { from, to, amount, nonce, route, token } => {
            let tx = TxInfo {
                from: from.clone(),
                to: to.clone(),
                amount: Money::from_f64(*amount),
                nonce: *nonce,
            };
            let signature = match route {
                TransferRoute::Authorized => {
                    match world.sign_transaction(from, &tx, (*token).into())? {
                        SignOutcome::Signed(s) => s,
                        SignOutcome::Refused { reason, .. } => {
                            return Ok(format!("signing refused: {reason}"));
                        }
                    }
                }
                TransferRoute::Unauthorized => world.unauthorized_signature(from, &tx)?,
                TransferRoute::Forged => {
                    super::crypto::MockPki::forge(&tx.canonical_bytes())
                }
            };
            Ok(world.wallet_transfer(&tx, &signature)?.to_string())
        }
        Op::ReplaceKey { from, to, attestation } => {
            Ok(world.wallet_replace_key(from, to, *attestation)?.to_string())
        }
        Op::InsuranceClaim { account, from, to, amount, nonce, behavior } => {
            let tx = TxInfo {
                from: from.clone(),
                to: to.clone(),
                amount: Money::from_f64(*amount),
                nonce: *nonce,
            };
            world.insurance_claim(account, &tx, *behavior)?;
            Ok(format!("claim filed by {account}"))
        }
        Op::AvailabilityRequest { account, request, behavior } => {
            world.availability_request(account, request.as_bytes(), *behavior)?;
            Ok(format!("availability requested by {account}"))
        }
        Op::Exfiltrate { account, count, stash } => {
            let shares = world.exfiltrate_shares(account, *count)?;
            stashes.insert(stash.clone(), Stash { shares, salts: BTreeMap::new() });
            Ok(format!("stashed {count} share(s) as {stash}"))
        }
        Op::BountyCommit { claimant, stash } => {
            let salt = world.fresh_salt();
            let entry = stashes
                .get_mut(stash)
                .ok_or_else(|| SimError::Scenario(format!("unknown stash {stash:?}")))?;
            let commitment = claim_commitment(&entry.shares, &salt, claimant);
            entry.salts.insert(claimant.clone(), salt);
            world.bounty_commit(claimant, commitment);
            Ok(format!("committed {claimant} on {stash}"))
        }
        Op::BountyReveal { claimant, stash } => {
            let entry = stashes
                .get(stash)
                .ok_or_else(|| SimError::Scenario(format!("unknown stash {stash:?}")))?;
            let salt = entry.salts.get(claimant).ok_or_else(|| {
                SimError::Scenario(format!("{claimant:?} never committed on {stash:?}"))
            })?;
            match world.bounty_reveal(claimant, &entry.shares, salt)? {
                Some(amount) => Ok(format!("bounty accepted: {amount}")),
                None => Ok("bounty rejected".to_string()),
            }
        }
        Op::RotateKeys { mode } => {
            world.rotate_keys((*mode).into())?;
            Ok(format!("rotated to epoch {}", world.epoch()))
        }
    }
}

fn evaluate(world: &SimWorld, results: &[String], check: &Check) -> Result<(), String> {
    match check {
        Check::RedFlag { expected } => {
            if world.red_flag() != *expected {
                return Err(format!(
                    "red_flag is {}, expected {expected}",
                    world.red_flag()
                ));
            }
        }
        Check::EpochEq { expected } => {
            if world.epoch() != *expected {
                return Err(format!("epoch is {}, expected {expected}", world.epoch()));
            }
        }
        Check::BalanceEq { account, amount } => {
            let actual = world.balance(account);
            if actual != Money::from_f64(*amount) {
                return Err(format!("balance[{account}] is {actual}, expected {amount}"));
            }
        }
        Check::BalanceMin { account, amount } => {
            let actual = world.balance(account);
            if actual < Money::from_f64(*amount) {
                return Err(format!("balance[{account}] is {actual}, expected >= {amount}"));
            }
        }
        Check::BurnedEq { amount } => {
            if world.burned() != Money::from_f64(*amount) {
                return Err(format!("burned is {}, expected {amount}", world.burned()));
            }
        }
        Check::BurnedMin { amount } => {
            if world.burned() < Money::from_f64(*amount) {
                return Err(format!("burned is {}, expected >= {amount}", world.burned()));
            }
        }
        Check::HeldEq { amount } => {
            if world.held_total() != Money::from_f64(*amount) {
                return Err(format!("held is {}, expected {amount}", world.held_total()));
            }
        }
        Check::EventCountMin { event, count } => {
            let actual = world.count_events(event);
            if actual < *count {
                return Err(format!("{actual} {event:?} event(s), expected >= {count}"));
            }
        }
        Check::EventAbsent { event } => {
            let actual = world.count_events(event);
            if actual != 0 {
                return Err(format!("{actual} {event:?} event(s), expected none"));
            }
        }
        Check::LastResult { expected } => match results.last() {
            Some(last) if last == expected => {}
            Some(last) => return Err(format!("last result {last:?}, expected {expected:?}")),
            None => return Err("no steps ran".to_string()),
        },
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> SimConfig {
        SimConfig::reference()
    }

    #[test]
    fn scripted_happy_path_runs_and_checks() {
        let scenario = Scenario::from_json_str(
            r#"{
                "name": "inline happy path",
                "seed": 7,
                "steps": [
                    {"slot": 0, "op": {"type": "register_user", "account": "alice",
                                        "oauth_ids": ["alice@example.com"]}},
                    {"slot": 0, "op": {"type": "mint", "account": "alice", "amount": 20.0}},
                    {"slot": 1, "op": {"type": "transfer", "from": "alice", "to": "bob",
                                        "amount": 6.0, "nonce": 1, "route": "authorized"}}
                ],
                "final_slot": 5,
                "checks": [
                    {"type": "red_flag", "expected": false},
                    {"type": "balance_eq", "account": "bob", "amount": 6.0},
                    {"type": "balance_eq", "account": "alice", "amount": 14.0},
                    {"type": "burned_eq", "amount": 0.0},
                    {"type": "event_absent", "event": "red_flag_raised"},
                    {"type": "last_result", "expected": "Transfer Success"}
                ]
            }"#,
        )
        .expect("scenario parses");
        let outcome = run_scenario(&reference(), &scenario).expect("scenario passes");
        assert_eq!(outcome.steps_run, 3);
        assert_eq!(outcome.results.last().map(String::as_str), Some("Transfer Success"));
    }

    #[test]
    fn failing_check_reports_reason() {
        let scenario = Scenario::from_json_str(
            r#"{
                "name": "expected failure",
                "steps": [
                    {"slot": 0, "op": {"type": "mint", "account": "alice", "amount": 1.0}}
                ],
                "checks": [{"type": "balance_eq", "account": "alice", "amount": 2.0}]
            }"#,
        )
        .expect("scenario parses");
        let err = run_scenario(&reference(), &scenario).expect_err("check must fail");
        assert!(err.to_string().contains("balance[alice]"), "got: {err}");
    }

    #[test]
    fn bounty_script_end_to_end() {
        let scenario = Scenario::from_json_str(
            r#"{
                "name": "inline bounty",
                "steps": [
                    {"slot": 0, "op": {"type": "register_user", "account": "alice",
                                        "oauth_ids": ["alice@example.com"]}},
                    {"slot": 1, "op": {"type": "exfiltrate", "account": "alice",
                                        "count": 3, "stash": "loot"}},
                    {"slot": 1, "op": {"type": "bounty_commit", "claimant": "hunter",
                                        "stash": "loot"}},
                    {"slot": 2, "op": {"type": "bounty_reveal", "claimant": "hunter",
                                        "stash": "loot"}},
                    {"slot": 3, "op": {"type": "rotate_keys", "mode": "correct"}}
                ],
                "final_slot": 40,
                "checks": [
                    {"type": "red_flag", "expected": false},
                    {"type": "epoch_eq", "expected": 1},
                    {"type": "event_count_min", "event": "bounty_accepted", "count": 1},
                    {"type": "event_count_min", "event": "reward_released", "count": 1},
                    {"type": "balance_min", "account": "hunter", "amount": 4.7},
                    {"type": "held_eq", "amount": 0.0}
                ]
            }"#,
        )
        .expect("scenario parses");
        run_scenario(&reference(), &scenario).expect("scenario passes");
    }

    #[test]
    fn unknown_stash_is_a_script_error() {
        let scenario = Scenario::from_json_str(
            r#"{
                "name": "bad stash",
                "steps": [
                    {"slot": 0, "op": {"type": "bounty_commit", "claimant": "x",
                                        "stash": "missing"}}
                ]
            }"#,
        )
        .expect("scenario parses");
        assert!(matches!(
            run_scenario(&reference(), &scenario),
            Err(SimError::Scenario(_))
        ));
    }

    #[test]
    fn scenario_runs_are_deterministic() {
        let scenario = Scenario::from_json_str(
            r#"{
                "name": "determinism probe",
                "seed": 99,
                "steps": [
                    {"slot": 0, "op": {"type": "register_user", "account": "alice",
                                        "oauth_ids": ["alice@example.com"]}},
                    {"slot": 1, "op": {"type": "exfiltrate", "account": "alice",
                                        "count": 2, "stash": "loot"}},
                    {"slot": 1, "op": {"type": "bounty_commit", "claimant": "hunter",
                                        "stash": "loot"}},
                    {"slot": 2, "op": {"type": "bounty_reveal", "claimant": "hunter",
                                        "stash": "loot"}}
                ],
                "final_slot": 35
            }"#,
        )
        .expect("scenario parses");
        let a = run_scenario(&reference(), &scenario).expect("first run");
        let b = run_scenario(&reference(), &scenario).expect("second run");
        assert_eq!(a.events_jsonl, b.events_jsonl);
        assert_eq!(a.report, b.report);
    }
}
