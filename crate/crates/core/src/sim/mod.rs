//! Deterministic protocol simulation.
//!
//! A self-contained, single-threaded model of the wallet protocol: a mock
//! enclave cluster holding key shares, a ledger with wallet/insurance/
//! availability/bounty contracts, hash-based mock cryptography, and a
//! scriptable scenario runner. Given the same configuration and inputs,
//! every run reproduces the same event log byte for byte.

pub mod crypto;
pub mod events;
pub mod pok;
pub mod scenario;
pub mod world;

pub use crypto::{digest_bytes, digest_parts, Digest, MockPki, PubKey, ShareSecret, Signature};
pub use events::{Event, EventKind};
pub use pok::{claim_commitment, pok_setup, pok_verify};
pub use scenario::{run_scenario, Check, Op, Scenario, ScenarioOutcome, Step};
pub use world::{
    split_rate_limited, ProviderBehavior, Receipt, RotationMode, SignOutcome, SimConfig,
    SimError, SimReport, SimWorld, TokenQuality, TxInfo, PROVIDER,
};
