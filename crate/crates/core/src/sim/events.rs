//! Append-only event log with a total order and stable JSON rendering.

use serde::Serialize;

use super::crypto::Digest;
use crate::money::Money;

/// One log entry. `slot` is the simulation clock, `seq` the global append
/// counter; together they totally order the log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Event {
    pub slot: u64,
    pub seq: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

/// Everything the simulation reports. Payloads carry digests, amounts, and
/// account names — never key material.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum EventKind {
    Minted { account: String, amount: Money },
    UserRegistered { account: String, receipt: Digest },
    RegistrationRejected { account: String, reason: String },
    SignatureIssued { account: String, tx: Digest },
    SignatureRefused { account: String, tx: Digest, reason: String, notice: Digest },
    Transfer { tx: Digest, from: String, to: String, amount: Money, result: String },
    KeyReplaced { from: String, to: String, moved: Money, result: String },
    InsuranceClaimFiled { account: String, tx: Digest, envelope: Digest },
    CompensationPaid { account: String, tx: Digest, amount: Money },
    DisputeIncorrect { account: String, tx: Digest },
    ClaimRejectedDuplicate { account: String, tx: Digest },
    InsuranceTimeout { account: String, tx: Digest, compensated: Money, burned: Money },
    AvailabilityRequested { account: String, request: Digest, deadline: u64 },
    AvailabilityServed { account: String, request: Digest },
    AvailabilityBurned { request: Digest, amount: Money },
    BountyCommitted { claimant: String, commitment: Digest },
    BountyRevealRejected { claimant: String, reason: String },
    BountyAccepted {
        claimant: String,
        shares_proven: u32,
        amount: Money,
        release_slot: u64,
        refunded_deposit: Money,
    },
    SharesInvalidated { epoch: u64 },
    RewardReleased { claimant: String, amount: Money },
    RewardForfeited { claimant: String, amount: Money },
    KeysRotated { epoch: u64, published_match: bool },
    SigningDisabled { reason: String },
    RedFlagRaised { cause: String },
    RedFlagCleared { attestation: Digest },
}

impl Event {
    /// One line of JSON; field order is declaration order, stable across
    /// runs.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("events serialize")
    }
}
