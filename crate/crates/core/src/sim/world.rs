//! The deterministic protocol world: wallet, insurance, availability, and
//! bounty contracts around a mock enclave cluster.
//!
//! Everything is single-threaded and owned by one [`SimWorld`]; all
//! randomness flows from one seeded generator; every observable action
//! appends to an event log totally ordered by `(slot, seq)`. Replaying the
//! same configuration and operations reproduces the log byte for byte.

use std::collections::{BTreeMap, BTreeSet};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::crypto::{digest_bytes, digest_parts, Digest, MockPki, PubKey, ShareSecret, Signature};
use super::events::{Event, EventKind};
use super::pok::{claim_commitment, pok_setup, pok_verify};
use crate::game::{reward, GameConfig, GameError, RewardSpec, ValueVariant};
use crate::money::Money;

pub const RESULT_RED_FLAG: &str = "Red Flag is on";
pub const RESULT_INVALID_SIGNATURE: &str = "Invalid signature";
pub const RESULT_INSUFFICIENT_BALANCE: &str = "Insufficient balance";
pub const RESULT_TRANSFER_SUCCESS: &str = "Transfer Success";
pub const RESULT_KEY_REPLACEMENT_SUCCESS: &str = "Key Replacement Success";

/// The provider's reserved account name: deposits come out of it and
/// refunds flow back into it.
pub const PROVIDER: &str = "provider";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("unknown account {0:?}")]
    UnknownAccount(String),
    #[error("account {0:?} is already registered")]
    DuplicateAccount(String),
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("rate-limit cap must be positive")]
    NonPositiveCap,
    #[error("deposit exhausted: need {need} but only {have} remains")]
    DepositExhausted { need: Money, have: Money },
    #[error("clock cannot move backwards (now {now}, asked {asked})")]
    ClockBackwards { now: u64, asked: u64 },
    #[error("money conservation violated: minted {minted}, accounted {accounted}")]
    ConservationViolated { minted: Money, accounted: Money },
    #[error("raw share bytes leaked into {location}")]
    ShareLeak { location: String },
    #[error("scenario error: {0}")]
    Scenario(String),
}

/// Static parameters of one simulated deployment.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub game: GameConfig,
    /// Active bounty schedule; drives claim amounts and the bounty deposit.
    pub reward: RewardSpec,
    pub insurance_deposit: Money,
    pub availability_deposit: Money,
    /// Extra float minted to the provider beyond the deposits.
    pub provider_funds: Money,
    /// Slots a disputed claim waits before silence auto-compensates.
    pub insurance_deadline: u64,
    /// Slots an availability request waits before the deposit burns.
    pub availability_deadline: u64,
    /// Slots a bounty reward stays on hold before release.
    pub hold_period: u64,
    pub seed: u64,
}

impl SimConfig {
    /// The reference deployment: the default game parameters with the
    /// capped blend schedule, generously funded deposits, and a hold
    /// period of one full game horizon.
    pub fn reference() -> Self {
        let game =
            GameConfig::new(3, 3, 30, Money::from_units(6), ValueVariant::LinearCapped)
                .expect("reference parameters are valid");
        SimConfig {
            reward: RewardSpec::capped_proposed(0.95, Money::from_f64(0.06), 0.8),
            insurance_deposit: Money::from_units(50),
            availability_deposit: Money::from_units(10),
            provider_funds: Money::from_units(100),
            insurance_deadline: 3,
            availability_deadline: 2,
            hold_period: u64::from(game.horizon),
            game,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.game.validate()?;
        self.reward.validate()?;
        for (name, amount) in [
            ("insurance deposit", self.insurance_deposit),
            ("availability deposit", self.availability_deposit),
            ("provider funds", self.provider_funds),
        ] {
            if amount.is_negative() {
                return Err(SimError::InvalidConfig(format!("{name} must be >= 0")));
            }
        }
        if self.insurance_deadline == 0 || self.availability_deadline == 0 {
            return Err(SimError::InvalidConfig("deadlines must be at least one slot".into()));
        }
        Ok(())
    }

    /// Largest amount the bounty can ever owe: the most generous claim of
    /// the schedule, at full share count and slot zero.
    pub fn bounty_deposit(&self) -> Result<Money, SimError> {
        let mut max = Money::ZERO;
        for k in 1..=self.game.n_shares {
            let r = reward(&self.reward, &self.game, k, 0)?;
            if r > max {
                max = r;
            }
        }
        Ok(max)
    }
}

/// A transfer order. Canonical bytes (and therefore the digest) cover every
/// field, so a signature binds the whole order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TxInfo {
    pub from: String,
    pub to: String,
    pub amount: Money,
    pub nonce: u64,
}

impl TxInfo {
    pub fn canonical_bytes(&self) -> Vec<u8> {
        format!("tx|{}|{}|{}|{}", self.from, self.to, self.amount.micros(), self.nonce)
            .into_bytes()
    }

    pub fn digest(&self) -> Digest {
        digest_bytes(&self.canonical_bytes())
    }
}

/// Registration receipt handed back to a new user.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Receipt {
    pub verification_key: PubKey,
    pub oauth_ids: Vec<String>,
    pub attestation_signature: Signature,
}

impl Receipt {
    pub fn signed_bytes(&self) -> Vec<u8> {
        let mut bytes = self.verification_key.0 .0.to_vec();
        for id in &self.oauth_ids {
            bytes.extend_from_slice(id.as_bytes());
            bytes.push(0);
        }
        bytes
    }
}

/// Signing request outcome: a usable signature or an attestation-signed
/// refusal notice.
#[derive(Debug, Clone, PartialEq)]
pub enum SignOutcome {
    Signed(Signature),
    Refused { reason: String, notice: Signature },
}

/// How the provider behaves when an off-chain reply is expected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderBehavior {
    Reply,
    /// Replies, but the signed message covers the wrong request digest.
    ReplyMismatched,
    Silent,
}

/// Whether a rotation publishes the true new digests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RotationMode {
    Correct,
    Mismatched,
}

/// Token attached to a request, as minted by the mock identity provider.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenQuality {
    Valid,
    WrongNonce,
    ForgedSignature,
}

#[derive(Debug)]
struct UserKey {
    verification_key: PubKey,
    shares: Vec<ShareSecret>,
    oauth_ids: Vec<String>,
}

#[derive(Debug)]
struct TeeCluster {
    attestation_key: PubKey,
    envelope_key: PubKey,
    users: BTreeMap<String, UserKey>,
    epoch: u64,
    epoch_start: u64,
    /// False between a successful bounty reveal and the next rotation.
    shares_valid: bool,
    /// Request digest → token digest, appended on every authorized signing.
    tx_tokens_db: BTreeMap<Digest, Digest>,
    /// Every share ever created, for the leak scanner.
    historical_share_bytes: Vec<Vec<u8>>,
}

impl TeeCluster {
    /// True digests of the current shares: users in account order, each
    /// user's shares in creation order.
    fn current_digests(&self) -> Vec<Digest> {
        let mut out = Vec::new();
        for user in self.users.values() {
            out.extend(pok_setup(&user.shares));
        }
        out
    }

    /// Accounts owning any share whose digest appears in `digests`.
    fn owners_of(&self, digests: &BTreeSet<Digest>) -> Vec<String> {
        self.users
            .iter()
            .filter(|(_, user)| user.shares.iter().any(|s| digests.contains(&s.digest())))
            .map(|(account, _)| account.clone())
            .collect()
    }
}

#[derive(Debug)]
struct HeldReward {
    claimant: String,
    amount: Money,
    reveal_slot: u64,
    release_slot: u64,
    affected: Vec<String>,
    settled: bool,
}

#[derive(Debug)]
struct PendingDispute {
    account: String,
    tx: Digest,
    amount: Money,
    deadline: u64,
}

#[derive(Debug)]
struct PendingAvailability {
    request: Digest,
    deadline: u64,
    served: bool,
}

/// Final snapshot for reports and scenario checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub slot: u64,
    pub red_flag: bool,
    pub epoch: u64,
    pub balances: BTreeMap<String, Money>,
    pub insurance_deposit: Money,
    pub availability_deposit: Money,
    pub bounty_deposit: Money,
    pub held_rewards: Money,
    pub burned: Money,
    pub events: usize,
}

/// The complete mutable world. One owner, no interior mutability, no
/// global state.
#[derive(Debug)]
pub struct SimWorld {
    pub config: SimConfig,
    clock: u64,
    seq: u64,
    rng: ChaCha8Rng,
    pki: MockPki,
    oauth_key: PubKey,
    balances: BTreeMap<String, Money>,
    total_minted: Money,
    burned: Money,
    red_flag: bool,
    tee: TeeCluster,
    /// The on-ledger record of share digests (what the provider published;
    /// may diverge from the cluster's truth after a bad rotation).
    published_pp: Vec<Digest>,
    insurance_deposit: Money,
    compensated: BTreeSet<Digest>,
    /// Successful compensations as (account, slot), consulted when a held
    /// bounty reward matures.
    compensation_log: Vec<(String, u64)>,
    pending_disputes: Vec<PendingDispute>,
    availability_deposit: Money,
    served_requests: BTreeSet<Digest>,
    pending_availability: Vec<PendingAvailability>,
    bounty_deposit: Money,
    commits: BTreeMap<Digest, u64>,
    held: Vec<HeldReward>,
    claimed_epochs: BTreeSet<u64>,
    events: Vec<Event>,
}

impl SimWorld {
    pub fn new(config: SimConfig) -> Result<Self, SimError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut pki = MockPki::new();
        let attestation_key = pki.generate(&mut rng);
        let envelope_key = pki.generate(&mut rng);
        let oauth_key = pki.generate(&mut rng);
        let bounty_deposit = config.bounty_deposit()?;
        let total_minted = config.provider_funds
            + config.insurance_deposit
            + config.availability_deposit
            + bounty_deposit;
        let mut balances = BTreeMap::new();
        balances.insert(PROVIDER.to_string(), config.provider_funds);
        let mut world = SimWorld {
            clock: 0,
            seq: 0,
            rng,
            pki,
            oauth_key,
            balances,
            total_minted,
            burned: Money::ZERO,
            red_flag: false,
            tee: TeeCluster {
                attestation_key,
                envelope_key,
                users: BTreeMap::new(),
                epoch: 0,
                epoch_start: 0,
                shares_valid: true,
                tx_tokens_db: BTreeMap::new(),
                historical_share_bytes: Vec::new(),
            },
            published_pp: Vec::new(),
            insurance_deposit: config.insurance_deposit,
            compensated: BTreeSet::new(),
            compensation_log: Vec::new(),
            pending_disputes: Vec::new(),
            availability_deposit: config.availability_deposit,
            served_requests: BTreeSet::new(),
            pending_availability: Vec::new(),
            bounty_deposit,
            commits: BTreeMap::new(),
            held: Vec::new(),
            claimed_epochs: BTreeSet::new(),
            events: Vec::new(),
            config,
        };
        world.log(EventKind::Minted {
            account: PROVIDER.to_string(),
            amount: world.total_minted,
        });
        Ok(world)
    }

    // ------------------------------------------------------------------
    // Clock, log, and bookkeeping.

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn red_flag(&self) -> bool {
        self.red_flag
    }

    pub fn epoch(&self) -> u64 {
        self.tee.epoch
    }

    pub fn attestation_key(&self) -> PubKey {
        self.tee.attestation_key
    }

    pub fn published_pp(&self) -> &[Digest] {
        &self.published_pp
    }

    pub fn balance(&self, account: &str) -> Money {
        self.balances.get(account).copied().unwrap_or(Money::ZERO)
    }

    pub fn burned(&self) -> Money {
        self.burned
    }

    pub fn held_total(&self) -> Money {
        self.held
            .iter()
            .filter(|h| !h.settled)
            .fold(Money::ZERO, |acc, h| acc + h.amount)
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    /// The whole log as JSON lines.
    pub fn events_jsonl(&self) -> String {
        let mut out = String::new();
        for event in &self.events {
            out.push_str(&event.to_json_line());
            out.push('\n');
        }
        out
    }

    fn log(&mut self, kind: EventKind) {
        let event = Event { slot: self.clock, seq: self.seq, kind };
        self.seq += 1;
        self.events.push(event);
    }

    /// Mint fresh funds into an account (scenario setup only; the one
    /// operation allowed to change the conserved total).
    pub fn mint(&mut self, account: &str, amount: Money) -> Result<(), SimError> {
        if amount.is_negative() {
            return Err(SimError::InvalidConfig("cannot mint a negative amount".into()));
        }
        *self.balances.entry(account.to_string()).or_default() += amount;
        self.total_minted += amount;
        self.log(EventKind::Minted { account: account.to_string(), amount });
        Ok(())
    }

    /// Advance the clock, firing every timer in deterministic order:
    /// availability deadlines, then insurance deadlines, then bounty
    /// releases, each in creation order within a slot.
    pub fn advance_to(&mut self, slot: u64) -> Result<(), SimError> {
        if slot < self.clock {
            return Err(SimError::ClockBackwards { now: self.clock, asked: slot });
        }
        while self.clock < slot {
            self.clock += 1;
            self.fire_availability_deadlines();
            self.fire_insurance_deadlines()?;
            self.settle_matured_rewards();
        }
        Ok(())
    }

    fn fire_availability_deadlines(&mut self) {
        let now = self.clock;
        let mut burns = Vec::new();
        for pending in &mut self.pending_availability {
            if !pending.served && pending.deadline == now {
                burns.push(pending.request);
                pending.served = true; // consumed: one burn per request
            }
        }
        for request in burns {
            let amount = self.availability_deposit;
            self.availability_deposit = Money::ZERO;
            self.burned += amount;
            self.log(EventKind::AvailabilityBurned { request, amount });
        }
    }

    fn fire_insurance_deadlines(&mut self) -> Result<(), SimError> {
        let now = self.clock;
        let due: Vec<usize> = self
            .pending_disputes
            .iter()
            .enumerate()
            .filter(|(_, d)| d.deadline == now)
            .map(|(i, _)| i)
            .collect();
        for index in due {
            let (account, tx, amount) = {
                let d = &self.pending_disputes[index];
                (d.account.clone(), d.tx, d.amount)
            };
            if self.compensated.contains(&tx) {
                continue; // answered some other way in the meantime
            }
            if self.insurance_deposit < amount {
                return Err(SimError::DepositExhausted {
                    need: amount,
                    have: self.insurance_deposit,
                });
            }
            // Silence compensates the user from the deposit; whatever the
            // deposit still holds afterwards is destroyed as the penalty.
            self.insurance_deposit -= amount;
            *self.balances.entry(account.clone()).or_default() += amount;
            let remainder = self.insurance_deposit;
            self.insurance_deposit = Money::ZERO;
            self.burned += remainder;
            self.compensated.insert(tx);
            self.compensation_log.push((account.clone(), now));
            self.log(EventKind::InsuranceTimeout {
                account,
                tx,
                compensated: amount,
                burned: remainder,
            });
            self.raise_red_flag("insurance timeout");
        }
        self.pending_disputes.retain(|d| d.deadline > now);
        Ok(())
    }

    fn settle_matured_rewards(&mut self) {
        let now = self.clock;
        for i in 0..self.held.len() {
            if self.held[i].settled || self.held[i].release_slot != now {
                continue;
            }
            let claimant = self.held[i].claimant.clone();
            let amount = self.held[i].amount;
            let reveal_slot = self.held[i].reveal_slot;
            let affected = self.held[i].affected.clone();
            let tainted = self.compensation_log.iter().any(|(account, slot)| {
                *slot > reveal_slot && *slot <= now && affected.contains(account)
            });
            self.held[i].settled = true;
            if tainted {
                self.bounty_deposit += amount;
                self.log(EventKind::RewardForfeited { claimant, amount });
            } else {
                *self.balances.entry(claimant.clone()).or_default() += amount;
                self.log(EventKind::RewardReleased { claimant, amount });
            }
        }
    }

    fn raise_red_flag(&mut self, cause: &str) {
        if !self.red_flag {
            self.red_flag = true;
            self.log(EventKind::RedFlagRaised { cause: cause.to_string() });
        }
    }

    // ------------------------------------------------------------------
    // Identity and registration.

    fn mint_token(&self, quality: TokenQuality, request: &[u8]) -> (Digest, Signature) {
        let nonce = match quality {
            TokenQuality::WrongNonce => digest_bytes(b"unrelated request"),
            _ => digest_bytes(request),
        };
        let signature = match quality {
            TokenQuality::ForgedSignature => MockPki::forge(&nonce.0),
            _ => self.pki.sign(self.oauth_key, &nonce.0),
        };
        (nonce, signature)
    }

    fn token_valid(&self, request: &[u8], nonce: &Digest, signature: &Signature) -> bool {
        *nonce == digest_bytes(request) && self.pki.verify(self.oauth_key, &nonce.0, signature)
    }

    /// Register a wallet: fresh shares, a verification key, a TEE-signed
    /// receipt, and the published parameters extended on the ledger.
    pub fn register_user(
        &mut self,
        account: &str,
        oauth_ids: &[&str],
        token: TokenQuality,
    ) -> Result<Option<Receipt>, SimError> {
        if self.tee.users.contains_key(account) {
            return Err(SimError::DuplicateAccount(account.to_string()));
        }
        if self.red_flag {
            self.log(EventKind::RegistrationRejected {
                account: account.to_string(),
                reason: RESULT_RED_FLAG.to_string(),
            });
            return Ok(None);
        }
        let request = format!("register|{account}|{}", oauth_ids.join(",")).into_bytes();
        let (nonce, signature) = self.mint_token(token, &request);
        if !self.token_valid(&request, &nonce, &signature) {
            self.log(EventKind::RegistrationRejected {
                account: account.to_string(),
                reason: "invalid token".to_string(),
            });
            return Ok(None);
        }
        let verification_key = self.pki.generate(&mut self.rng);
        let shares: Vec<ShareSecret> = (0..self.config.game.n_shares)
            .map(|_| ShareSecret::generate(&mut self.rng))
            .collect();
        for share in &shares {
            self.tee.historical_share_bytes.push(share.bytes().to_vec());
        }
        self.tee.users.insert(
            account.to_string(),
            UserKey {
                verification_key,
                shares,
                oauth_ids: oauth_ids.iter().map(|s| s.to_string()).collect(),
            },
        );
        self.balances.entry(account.to_string()).or_default();
        self.published_pp = self.tee.current_digests();
        let receipt = Receipt {
            verification_key,
            oauth_ids: oauth_ids.iter().map(|s| s.to_string()).collect(),
            attestation_signature: Signature(digest_bytes(b"placeholder")),
        };
        let attestation_signature =
            self.pki.sign(self.tee.attestation_key, &receipt.signed_bytes());
        let receipt = Receipt { attestation_signature, ..receipt };
        self.log(EventKind::UserRegistered {
            account: account.to_string(),
            receipt: attestation_signature.0,
        });
        Ok(Some(receipt))
    }

    pub fn verify_receipt(&self, receipt: &Receipt) -> bool {
        self.pki.verify(
            self.tee.attestation_key,
            &receipt.signed_bytes(),
            &receipt.attestation_signature,
        )
    }

    /// Identities bound to a wallet at registration.
    pub fn registered_ids(&self, account: &str) -> Option<&[String]> {
        self.tee.users.get(account).map(|u| u.oauth_ids.as_slice())
    }

    // ------------------------------------------------------------------
    // Signing and transfers.

    fn refusal(&mut self, account: &str, tx: &TxInfo, reason: &str) -> SignOutcome {
        let notice = self.pki.sign(
            self.tee.attestation_key,
            &digest_parts(&[b"refusal", &tx.digest().0, reason.as_bytes()]).0,
        );
        self.log(EventKind::SignatureRefused {
            account: account.to_string(),
            tx: tx.digest(),
            reason: reason.to_string(),
            notice: notice.0,
        });
        SignOutcome::Refused { reason: reason.to_string(), notice }
    }

    /// Ask the cluster to sign a transfer. Checks run in a fixed order:
    /// epoch-stale shares, red flag, proof of publication, then the token;
    /// every refusal is attestation-signed and logged.
    pub fn sign_transaction(
        &mut self,
        account: &str,
        tx: &TxInfo,
        token: TokenQuality,
    ) -> Result<SignOutcome, SimError> {
        let user = self
            .tee
            .users
            .get(account)
            .ok_or_else(|| SimError::UnknownAccount(account.to_string()))?;
        let verification_key = user.verification_key;
        let live_shares = user.shares.len() as u32;
        if !self.tee.shares_valid {
            return Ok(self.refusal(account, tx, "epoch shares invalidated"));
        }
        if self.red_flag {
            return Ok(self.refusal(account, tx, RESULT_RED_FLAG));
        }
        if live_shares < self.config.game.threshold {
            return Ok(self.refusal(account, tx, "not enough live shares"));
        }
        if self.tee.current_digests() != self.published_pp {
            let outcome = self.refusal(account, tx, "publication mismatch");
            self.log(EventKind::SigningDisabled {
                reason: "publication mismatch".to_string(),
            });
            return Ok(outcome);
        }
        let request = tx.canonical_bytes();
        let (nonce, signature) = self.mint_token(token, &request);
        if !self.token_valid(&request, &nonce, &signature) {
            return Ok(self.refusal(account, tx, "invalid request"));
        }
        let tx_signature = self.pki.sign(verification_key, &request);
        self.tee.tx_tokens_db.insert(tx.digest(), nonce);
        self.log(EventKind::SignatureIssued { account: account.to_string(), tx: tx.digest() });
        Ok(SignOutcome::Signed(tx_signature))
    }

    /// Sign with the user's key material while bypassing the cluster's
    /// bookkeeping: the compromise path. The ledger will accept the
    /// signature, but no token is recorded, so a later dispute succeeds.
    pub fn unauthorized_signature(
        &mut self,
        account: &str,
        tx: &TxInfo,
    ) -> Result<Signature, SimError> {
        let user = self
            .tee
            .users
            .get(account)
            .ok_or_else(|| SimError::UnknownAccount(account.to_string()))?;
        Ok(self.pki.sign(user.verification_key, &tx.canonical_bytes()))
    }

    /// The wallet contract: checks in contract order, result strings
    /// bit-exact.
    pub fn wallet_transfer(
        &mut self,
        tx: &TxInfo,
        signature: &Signature,
    ) -> Result<&'static str, SimError> {
        let result = if self.red_flag {
            RESULT_RED_FLAG
        } else {
            let key = self
                .tee
                .users
                .get(&tx.from)
                .ok_or_else(|| SimError::UnknownAccount(tx.from.clone()))?
                .verification_key;
            if !self.pki.verify(key, &tx.canonical_bytes(), signature) {
                RESULT_INVALID_SIGNATURE
            } else if self.balance(&tx.from) < tx.amount || tx.amount.is_negative() {
                RESULT_INSUFFICIENT_BALANCE
            } else {
                *self.balances.get_mut(&tx.from).expect("payer exists") -= tx.amount;
                *self.balances.entry(tx.to.clone()).or_default() += tx.amount;
                RESULT_TRANSFER_SUCCESS
            }
        };
        self.log(EventKind::Transfer {
            tx: tx.digest(),
            from: tx.from.clone(),
            to: tx.to.clone(),
            amount: tx.amount,
            result: result.to_string(),
        });
        Ok(result)
    }

    /// Move a wallet's full balance to a replacement address. Only the
    /// attestation key authorizes this, and it works during a red flag —
    /// it is the recovery path.
    pub fn wallet_replace_key(
        &mut self,
        from: &str,
        to: &str,
        use_attestation_key: bool,
    ) -> Result<&'static str, SimError> {
        if !self.tee.users.contains_key(from) {
            return Err(SimError::UnknownAccount(from.to_string()));
        }
        let message = digest_parts(&[b"replace", from.as_bytes(), to.as_bytes()]);
        let (signer, signature) = if use_attestation_key {
            (self.tee.attestation_key, self.pki.sign(self.tee.attestation_key, &message.0))
        } else {
            let key = self.tee.users[from].verification_key;
            (key, self.pki.sign(key, &message.0))
        };
        let result = if signer != self.tee.attestation_key
            || !self.pki.verify(self.tee.attestation_key, &message.0, &signature)
        {
            RESULT_INVALID_SIGNATURE
        } else {
            let moved = self.balance(from);
            *self.balances.get_mut(from).expect("wallet exists") -= moved;
            *self.balances.entry(to.to_string()).or_default() += moved;
            self.log(EventKind::KeyReplaced {
                from: from.to_string(),
                to: to.to_string(),
                moved,
                result: RESULT_KEY_REPLACEMENT_SUCCESS.to_string(),
            });
            return Ok(RESULT_KEY_REPLACEMENT_SUCCESS);
        };
        self.log(EventKind::KeyReplaced {
            from: from.to_string(),
            to: to.to_string(),
            moved: Money::ZERO,
            result: result.to_string(),
        });
        Ok(result)
    }

    // ------------------------------------------------------------------
    // Insurance.

    /// Compensation bonus: one percent of the disputed value.
    pub fn compensation_bonus(amount: Money) -> Money {
        amount.mul_div(1, 100)
    }

    /// Dispute a ledger transfer. The claim body travels sealed to the
    /// enclave; the provider either replies (the enclave checks its token
    /// database) or stays silent (a timer later auto-compensates).
    pub fn insurance_claim(
        &mut self,
        account: &str,
        tx: &TxInfo,
        behavior: ProviderBehavior,
    ) -> Result<(), SimError> {
        let tx_digest = tx.digest();
        if self.compensated.contains(&tx_digest) {
            self.log(EventKind::ClaimRejectedDuplicate {
                account: account.to_string(),
                tx: tx_digest,
            });
            return Ok(());
        }
        let claim_body = format!("claim|{account}|{}", tx_digest).into_bytes();
        let envelope = self.pki.seal(self.tee.envelope_key, &claim_body);
        self.log(EventKind::InsuranceClaimFiled {
            account: account.to_string(),
            tx: tx_digest,
            envelope: envelope.commitment(),
        });
        match behavior {
            ProviderBehavior::Reply => {
                let opened = self.pki.open(self.tee.envelope_key, &envelope);
                debug_assert!(opened.is_some(), "enclave opens its own mail");
                if self.tee.tx_tokens_db.contains_key(&tx_digest) {
                    self.log(EventKind::DisputeIncorrect {
                        account: account.to_string(),
                        tx: tx_digest,
                    });
                } else {
                    let amount = tx.amount + Self::compensation_bonus(tx.amount);
                    if self.insurance_deposit < amount {
                        return Err(SimError::DepositExhausted {
                            need: amount,
                            have: self.insurance_deposit,
                        });
                    }
                    self.insurance_deposit -= amount;
                    *self.balances.entry(account.to_string()).or_default() += amount;
                    self.compensated.insert(tx_digest);
                    self.compensation_log.push((account.to_string(), self.clock));
                    self.log(EventKind::CompensationPaid {
                        account: account.to_string(),
                        tx: tx_digest,
                        amount,
                    });
                    self.raise_red_flag("unauthorized transaction");
                }
            }
            ProviderBehavior::ReplyMismatched | ProviderBehavior::Silent => {
                let amount = tx.amount + Self::compensation_bonus(tx.amount);
                self.pending_disputes.push(PendingDispute {
                    account: account.to_string(),
                    tx: tx_digest,
                    amount,
                    deadline: self.clock + self.config.insurance_deadline,
                });
            }
        }
        Ok(())
    }

    // ------------------------------------------------------------------
    // Availability.

    /// File an availability request. A timely attestation-signed reply
    /// covering the request digest marks it served; anything else burns
    /// the availability deposit at the deadline.
    pub fn availability_request(
        &mut self,
        account: &str,
        request: &[u8],
        behavior: ProviderBehavior,
    ) -> Result<(), SimError> {
        let request_digest = digest_bytes(request);
        let deadline = self.clock + self.config.availability_deadline;
        self.log(EventKind::AvailabilityRequested {
            account: account.to_string(),
            request: request_digest,
            deadline,
        });
        let answered = match behavior {
            ProviderBehavior::Reply => request_digest,
            // A reply about some other request: signed fine, covers the
            // wrong digest, so it cannot count.
            ProviderBehavior::ReplyMismatched => digest_bytes(b"some other request"),
            ProviderBehavior::Silent => {
                self.pending_availability.push(PendingAvailability {
                    request: request_digest,
                    deadline,
                    served: false,
                });
                return Ok(());
            }
        };
        let message = digest_parts(&[b"avail", &answered.0]);
        let signature = self.pki.sign(self.tee.attestation_key, &message.0);
        let covers_request = self
            .pki
            .verify(self.tee.attestation_key, &digest_parts(&[b"avail", &request_digest.0]).0, &signature);
        if covers_request {
            self.served_requests.insert(request_digest);
            self.log(EventKind::AvailabilityServed {
                account: account.to_string(),
                request: request_digest,
            });
        } else {
            self.pending_availability.push(PendingAvailability {
                request: request_digest,
                deadline,
                served: false,
            });
        }
        Ok(())
    }

    // ------------------------------------------------------------------
    // Bounty.

    /// Fresh commitment salt from the world's RNG.
    pub fn fresh_salt(&mut self) -> [u8; 16] {
        let mut salt = [0u8; 16];
        self.rng.fill_bytes(&mut salt);
        salt
    }

    /// Copies of `count` of a user's current shares: the extraction the
    /// bounty exists to reward. Returns raw secrets to the caller (the
    /// attacker); nothing is logged with share bytes.
    pub fn exfiltrate_shares(
        &self,
        account: &str,
        count: u32,
    ) -> Result<Vec<ShareSecret>, SimError> {
        let user = self
            .tee
            .users
            .get(account)
            .ok_or_else(|| SimError::UnknownAccount(account.to_string()))?;
        Ok(user.shares.iter().take(count as usize).cloned().collect())
    }

    /// Publish a claim commitment.
    pub fn bounty_commit(&mut self, claimant: &str, commitment: Digest) {
        self.commits.insert(commitment, self.clock);
        self.log(EventKind::BountyCommitted {
            claimant: claimant.to_string(),
            commitment,
        });
    }

    fn reject_reveal(&mut self, claimant: &str, reason: &str) {
        self.log(EventKind::BountyRevealRejected {
            claimant: claimant.to_string(),
            reason: reason.to_string(),
        });
    }

    /// Reveal a previously committed claim. On success the reward goes on
    /// hold, the epoch's shares are invalidated, the red flag rises, and
    /// the unspent deposit returns to the provider.
    pub fn bounty_reveal(
        &mut self,
        claimant: &str,
        proof: &[ShareSecret],
        salt: &[u8; 16],
    ) -> Result<Option<Money>, SimError> {
        let commitment = claim_commitment(proof, salt, claimant);
        match self.commits.get(&commitment) {
            None => {
                self.reject_reveal(claimant, "no matching commit");
                return Ok(None);
            }
            Some(&slot) if slot >= self.clock => {
                self.reject_reveal(claimant, "commit too recent");
                return Ok(None);
            }
            Some(_) => {}
        }
        if self.red_flag {
            self.reject_reveal(claimant, RESULT_RED_FLAG);
            return Ok(None);
        }
        if self.claimed_epochs.contains(&self.tee.epoch) {
            self.reject_reveal(claimant, "epoch already claimed");
            return Ok(None);
        }
        let k = proof.len() as u32;
        if k == 0 || !pok_verify(&self.published_pp, proof, k as usize) {
            self.reject_reveal(claimant, "Invalid proof");
            return Ok(None);
        }
        let slots_into_epoch =
            (self.clock - self.tee.epoch_start).min(u64::from(self.config.game.horizon)) as u32;
        let amount = reward(&self.config.reward, &self.config.game, k, slots_into_epoch)?;
        if self.bounty_deposit < amount {
            return Err(SimError::DepositExhausted { need: amount, have: self.bounty_deposit });
        }
        let proof_digests: BTreeSet<Digest> = proof.iter().map(|s| s.digest()).collect();
        let affected = self.tee.owners_of(&proof_digests);
        self.bounty_deposit -= amount;
        let refund = self.bounty_deposit;
        self.bounty_deposit = Money::ZERO;
        *self.balances.entry(PROVIDER.to_string()).or_default() += refund;
        let release_slot = self.clock + self.config.hold_period;
        self.held.push(HeldReward {
            claimant: claimant.to_string(),
            amount,
            reveal_slot: self.clock,
            release_slot,
            affected,
            settled: false,
        });
        self.claimed_epochs.insert(self.tee.epoch);
        self.tee.shares_valid = false;
        self.log(EventKind::BountyAccepted {
            claimant: claimant.to_string(),
            shares_proven: k,
            amount,
            release_slot,
            refunded_deposit: refund,
        });
        self.log(EventKind::SharesInvalidated { epoch: self.tee.epoch });
        self.raise_red_flag("bounty claim");
        Ok(Some(amount))
    }

    // ------------------------------------------------------------------
    // Rotation and recovery.

    /// Rotate every user's shares into a new epoch. A correct rotation
    /// republishes true digests and, if the red flag is up, clears it with
    /// an attestation-signed recovery message. A mismatched rotation
    /// publishes a wrong first digest, which disables signing until the
    /// next honest rotation.
    pub fn rotate_keys(&mut self, mode: RotationMode) -> Result<(), SimError> {
        for user in self.tee.users.values_mut() {
            let fresh: Vec<ShareSecret> = (0..self.config.game.n_shares)
                .map(|_| ShareSecret::generate(&mut self.rng))
                .collect();
            for share in &fresh {
                self.tee.historical_share_bytes.push(share.bytes().to_vec());
            }
            user.shares = fresh;
        }
        self.tee.epoch += 1;
        self.tee.epoch_start = self.clock;
        self.tee.shares_valid = true;
        let mut digests = self.tee.current_digests();
        if mode == RotationMode::Mismatched {
            if let Some(first) = digests.first_mut() {
                *first = digest_bytes(b"not the real share digest");
            }
        }
        self.published_pp = digests;
        // New deposit for the new epoch comes from the provider's float.
        let deposit = self.config.bounty_deposit()?;
        if self.bounty_deposit == Money::ZERO && self.balance(PROVIDER) >= deposit {
            *self.balances.get_mut(PROVIDER).expect("provider account") -= deposit;
            self.bounty_deposit = deposit;
        }
        self.log(EventKind::KeysRotated {
            epoch: self.tee.epoch,
            published_match: mode == RotationMode::Correct,
        });
        if mode == RotationMode::Mismatched {
            self.log(EventKind::SigningDisabled {
                reason: "publication mismatch".to_string(),
            });
        } else if self.red_flag {
            let message = digest_parts(&[b"recovery", &self.tee.epoch.to_be_bytes()]);
            let signature = self.pki.sign(self.tee.attestation_key, &message.0);
            debug_assert!(self.pki.verify(self.tee.attestation_key, &message.0, &signature));
            self.red_flag = false;
            self.log(EventKind::RedFlagCleared { attestation: signature.0 });
        }
        Ok(())
    }

    // ------------------------------------------------------------------
    // Invariant checks and reports.

    /// Everything minted is somewhere: balances, deposits, holds, or the
    /// burn sink.
    pub fn check_conservation(&self) -> Result<(), SimError> {
        let mut accounted = self.burned
            + self.insurance_deposit
            + self.availability_deposit
            + self.bounty_deposit
            + self.held_total();
        for amount in self.balances.values() {
            accounted += *amount;
        }
        if accounted != self.total_minted {
            return Err(SimError::ConservationViolated {
                minted: self.total_minted,
                accounted,
            });
        }
        Ok(())
    }

    /// Scan every outward surface — the event log and the published ledger
    /// records — for the bytes of any share that ever existed, in raw or
    /// hex form.
    pub fn check_no_share_leak(&self) -> Result<(), SimError> {
        let log = self.events_jsonl();
        let published = serde_json::to_string(&self.published_pp).expect("digests serialize");
        for (i, bytes) in self.tee.historical_share_bytes.iter().enumerate() {
            let hex = hex::encode(bytes);
            for (location, haystack) in [("event log", &log), ("published records", &published)]
            {
                if haystack.contains(&hex) {
                    return Err(SimError::ShareLeak {
                        location: format!("{location} (share {i})"),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn final_report(&self) -> SimReport {
        SimReport {
            slot: self.clock,
            red_flag: self.red_flag,
            epoch: self.tee.epoch,
            balances: self.balances.clone(),
            insurance_deposit: self.insurance_deposit,
            availability_deposit: self.availability_deposit,
            bounty_deposit: self.bounty_deposit,
            held_rewards: self.held_total(),
            burned: self.burned,
            events: self.events.len(),
        }
    }

    /// Count of events matching a predicate, for scenario checks.
    pub fn count_events(&self, name: &str) -> usize {
        self.events
            .iter()
            .filter(|e| {
                serde_json::to_value(&e.kind)
                    .ok()
                    .and_then(|v| v.get("event").and_then(|n| n.as_str().map(String::from)))
                    .is_some_and(|n| n == name)
            })
            .count()
    }

    #[cfg(test)]
    pub(crate) fn inject_event_for_tests(&mut self, kind: EventKind) {
        self.log(kind);
    }
}

/// Number of wallets needed so each stays under a per-wallet cap: the
/// ceiling of deposit over cap.
pub fn split_rate_limited(deposit: Money, cap: Money) -> Result<u64, SimError> {
    if cap <= Money::ZERO {
        return Err(SimError::NonPositiveCap);
    }
    if deposit <= Money::ZERO {
        return Ok(0);
    }
    let d = deposit.micros() as u128;
    let c = cap.micros() as u128;
    Ok(d.div_ceil(c) as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn world() -> SimWorld {
        SimWorld::new(SimConfig::reference()).expect("reference config is valid")
    }

    fn world_with_user(account: &str) -> SimWorld {
        let mut w = world();
        let receipt = w
            .register_user(account, &["alice@example.com"], TokenQuality::Valid)
            .expect("registration runs")
            .expect("registration accepted");
        assert!(w.verify_receipt(&receipt));
        assert_eq!(
            w.registered_ids(account).map(<[String]>::len),
            Some(1),
            "identity binding recorded"
        );
        w.mint(account, Money::from_units(20)).expect("mint setup funds");
        w
    }

    fn tx(from: &str, to: &str, units: i64, nonce: u64) -> TxInfo {
        TxInfo {
            from: from.to_string(),
            to: to.to_string(),
            amount: Money::from_units(units),
            nonce,
        }
    }

    #[test]
    fn registration_rejects_bad_tokens_and_red_flags() {
        let mut w = world();
        assert!(w
            .register_user("mallory", &["m@example.com"], TokenQuality::WrongNonce)
            .expect("runs")
            .is_none());
        assert!(w
            .register_user("mallory", &["m@example.com"], TokenQuality::ForgedSignature)
            .expect("runs")
            .is_none());
        assert_eq!(w.count_events("registration_rejected"), 2);
        // Raise the flag through the real path: a successful bounty claim.
        let mut w = world_with_user("alice");
        let shares = w.exfiltrate_shares("alice", 3).expect("shares exist");
        let salt = w.fresh_salt();
        let commitment = claim_commitment(&shares, &salt, "hunter");
        w.bounty_commit("hunter", commitment);
        w.advance_to(1).expect("clock moves");
        assert!(w.bounty_reveal("hunter", &shares, &salt).expect("runs").is_some());
        assert!(w.red_flag());
        assert!(w
            .register_user("bob", &["b@example.com"], TokenQuality::Valid)
            .expect("runs")
            .is_none());
        w.check_conservation().expect("money conserved");
    }

    #[test]
    fn authorized_transfer_moves_funds() {
        let mut w = world_with_user("alice");
        let t = tx("alice", "bob", 6, 1);
        let outcome = w.sign_transaction("alice", &t, TokenQuality::Valid).expect("runs");
        let signature = match outcome {
            SignOutcome::Signed(s) => s,
            SignOutcome::Refused { reason, .. } => panic!("unexpected refusal: {reason}"),
        };
        assert_eq!(w.wallet_transfer(&t, &signature).expect("runs"), RESULT_TRANSFER_SUCCESS);
        assert_eq!(w.balance("alice"), Money::from_units(14));
        assert_eq!(w.balance("bob"), Money::from_units(6));
        w.check_conservation().expect("money conserved");
    }

    #[test]
    fn bad_token_gets_signed_refusal_notice() {
        let mut w = world_with_user("alice");
        let t = tx("alice", "bob", 1, 2);
        match w.sign_transaction("alice", &t, TokenQuality::ForgedSignature).expect("runs") {
            SignOutcome::Refused { reason, notice } => {
                assert_eq!(reason, "invalid request");
                let message = digest_parts(&[b"refusal", &t.digest().0, reason.as_bytes()]);
                assert!(w.pki.verify(w.tee.attestation_key, &message.0, &notice));
            }
            SignOutcome::Signed(_) => panic!("forged token must not sign"),
        }
        // And the wallet rejects a signature that never existed.
        let forged = MockPki::forge(&t.canonical_bytes());
        assert_eq!(w.wallet_transfer(&t, &forged).expect("runs"), RESULT_INVALID_SIGNATURE);
    }

    #[test]
    fn wallet_checks_run_in_contract_order() {
        let mut w = world_with_user("alice");
        let t = tx("alice", "bob", 100, 3); // more than alice holds
        let outcome = w.sign_transaction("alice", &t, TokenQuality::Valid).expect("runs");
        let signature = match outcome {
            SignOutcome::Signed(s) => s,
            _ => panic!("signing succeeds"),
        };
        // Balance is the last check.
        assert_eq!(
            w.wallet_transfer(&t, &signature).expect("runs"),
            RESULT_INSUFFICIENT_BALANCE
        );
        // Invalid signature outranks balance.
        let forged = MockPki::forge(b"nothing");
        assert_eq!(w.wallet_transfer(&t, &forged).expect("runs"), RESULT_INVALID_SIGNATURE);
        // Red flag outranks everything, even a valid signature.
        w.raise_red_flag("test");
        assert_eq!(w.wallet_transfer(&t, &signature).expect("runs"), RESULT_RED_FLAG);
        assert_eq!(w.count_events("transfer"), 3);
    }

    #[test]
    fn key_replacement_requires_attestation_and_survives_red_flag() {
        let mut w = world_with_user("alice");
        w.raise_red_flag("test");
        assert_eq!(
            w.wallet_replace_key("alice", "alice-new", false).expect("runs"),
            RESULT_INVALID_SIGNATURE
        );
        assert_eq!(w.balance("alice-new"), Money::ZERO);
        assert_eq!(
            w.wallet_replace_key("alice", "alice-new", true).expect("runs"),
            RESULT_KEY_REPLACEMENT_SUCCESS
        );
        assert_eq!(w.balance("alice"), Money::ZERO);
        assert_eq!(w.balance("alice-new"), Money::from_units(20));
        w.check_conservation().expect("money conserved");
    }

    #[test]
    fn unauthorized_transfer_compensates_with_bonus_and_raises_flag() {
        let mut w = world_with_user("alice");
        let t = tx("alice", "thief", 6, 4);
        let signature = w.unauthorized_signature("alice", &t).expect("runs");
        assert_eq!(w.wallet_transfer(&t, &signature).expect("runs"), RESULT_TRANSFER_SUCCESS);
        let before = w.balance("alice");
        w.insurance_claim("alice", &t, ProviderBehavior::Reply).expect("runs");
        // 6 back plus the 1% bonus.
        assert_eq!(w.balance("alice") - before, Money::from_f64(6.06));
        assert!(w.red_flag());
        assert_eq!(w.count_events("compensation_paid"), 1);
        // The same transaction can never pay twice.
        w.insurance_claim("alice", &t, ProviderBehavior::Reply).expect("runs");
        assert_eq!(w.count_events("claim_rejected_duplicate"), 1);
        assert_eq!(w.count_events("compensation_paid"), 1);
        w.check_conservation().expect("money conserved");
    }

    #[test]
    fn authorized_dispute_is_ruled_incorrect() {
        let mut w = world_with_user("alice");
        let t = tx("alice", "bob", 2, 5);
        let signature = match w.sign_transaction("alice", &t, TokenQuality::Valid).expect("runs")
        {
            SignOutcome::Signed(s) => s,
            _ => panic!("signing succeeds"),
        };
        w.wallet_transfer(&t, &signature).expect("runs");
        w.insurance_claim("alice", &t, ProviderBehavior::Reply).expect("runs");
        assert_eq!(w.count_events("dispute_incorrect"), 1);
        assert_eq!(w.count_events("compensation_paid"), 0);
        assert!(!w.red_flag());
    }

    #[test]
    fn silent_insurance_times_out_compensates_and_burns_remainder() {
        let mut w = world_with_user("alice");
        let t = tx("alice", "thief", 6, 6);
        let signature = w.unauthorized_signature("alice", &t).expect("runs");
        w.wallet_transfer(&t, &signature).expect("runs");
        let before = w.balance("alice");
        w.insurance_claim("alice", &t, ProviderBehavior::Silent).expect("runs");
        // Nothing happens before the deadline.
        w.advance_to(w.clock() + w.config.insurance_deadline - 1).expect("clock moves");
        assert_eq!(w.balance("alice"), before);
        w.advance_to(w.clock() + 1).expect("clock moves");
        assert_eq!(w.balance("alice") - before, Money::from_f64(6.06));
        // The rest of the 50-unit insurance deposit burns.
        assert_eq!(w.burned(), Money::from_units(50) - Money::from_f64(6.06));
        assert!(w.red_flag());
        assert_eq!(w.count_events("insurance_timeout"), 1);
        w.check_conservation().expect("money conserved");
    }

    #[test]
    fn availability_served_and_burned_paths() {
        let mut w = world_with_user("alice");
        w.availability_request("alice", b"give me my backup", ProviderBehavior::Reply)
            .expect("runs");
        assert_eq!(w.count_events("availability_served"), 1);
        assert_eq!(w.burned(), Money::ZERO);
        // A mismatched reply does not count and burns at the deadline.
        w.availability_request("alice", b"second request", ProviderBehavior::ReplyMismatched)
            .expect("runs");
        w.advance_to(w.clock() + w.config.availability_deadline).expect("clock moves");
        assert_eq!(w.count_events("availability_burned"), 1);
        assert_eq!(w.burned(), Money::from_units(10));
        w.check_conservation().expect("money conserved");
    }

    #[test]
    fn silent_availability_burns_once() {
        let mut w = world_with_user("alice");
        w.availability_request("alice", b"request", ProviderBehavior::Silent).expect("runs");
        w.advance_to(10).expect("clock moves");
        assert_eq!(w.count_events("availability_burned"), 1);
        assert_eq!(w.burned(), Money::from_units(10));
        w.check_conservation().expect("money conserved");
    }

    #[test]
    fn bounty_claim_holds_capped_reward_and_refunds_remainder() {
        let mut w = world_with_user("alice");
        let shares = w.exfiltrate_shares("alice", 1).expect("shares exist");
        let salt = w.fresh_salt();
        let commitment = claim_commitment(&shares, &salt, "hunter");
        w.bounty_commit("hunter", commitment);
        // Same-slot reveal is front-running fodder: rejected.
        assert!(w.bounty_reveal("hunter", &shares, &salt).expect("runs").is_none());
        assert_eq!(w.count_events("bounty_reveal_rejected"), 1);
        w.advance_to(1).expect("clock moves");
        let held = w.bounty_reveal("hunter", &shares, &salt).expect("runs");
        // One share, one slot in: the cap pins the reward at 0.8 * 6 = 4.8.
        assert_eq!(held, Some(Money::from_f64(4.8)));
        assert_eq!(w.held_total(), Money::from_f64(4.8));
        assert!(w.red_flag());
        assert_eq!(w.count_events("shares_invalidated"), 1);
        // Deposit remainder went back to the provider.
        assert_eq!(w.final_report().bounty_deposit, Money::ZERO);
        w.check_conservation().expect("money conserved");
        // Invalidated shares refuse signing.
        let t = tx("alice", "bob", 1, 7);
        match w.sign_transaction("alice", &t, TokenQuality::Valid).expect("runs") {
            SignOutcome::Refused { reason, .. } => {
                assert_eq!(reason, "epoch shares invalidated")
            }
            SignOutcome::Signed(_) => panic!("stale epoch must refuse"),
        }
    }

    #[test]
    fn bounty_reveal_gates_reject_bad_claims() {
        let mut w = world_with_user("alice");
        let shares = w.exfiltrate_shares("alice", 2).expect("shares exist");
        let salt = w.fresh_salt();
        w.advance_to(1).expect("clock moves");
        // No commit at all.
        assert!(w.bounty_reveal("hunter", &shares, &salt).expect("runs").is_none());
        // Corrupted share fails the proof.
        let mut corrupt = shares.clone();
        corrupt[0] = corrupt[0].corrupted();
        let commitment = claim_commitment(&corrupt, &salt, "hunter");
        w.bounty_commit("hunter", commitment);
        w.advance_to(2).expect("clock moves");
        assert!(w.bounty_reveal("hunter", &corrupt, &salt).expect("runs").is_none());
        assert_eq!(w.count_events("bounty_reveal_rejected"), 2);
        // A fair claim now lands…
        let commitment = claim_commitment(&shares, &salt, "hunter");
        w.bounty_commit("hunter", commitment);
        w.advance_to(3).expect("clock moves");
        assert!(w.bounty_reveal("hunter", &shares, &salt).expect("runs").is_some());
        // …and clears the way for nothing else this epoch: rotate, claim,
        // then try the old epoch again after another rotation.
        w.rotate_keys(RotationMode::Correct).expect("runs");
        assert!(!w.red_flag());
        let shares = w.exfiltrate_shares("alice", 1).expect("shares exist");
        let salt = w.fresh_salt();
        let commitment = claim_commitment(&shares, &salt, "hunter");
        w.bounty_commit("hunter", commitment);
        w.advance_to(4).expect("clock moves");
        assert!(w.bounty_reveal("hunter", &shares, &salt).expect("runs").is_some());
        // Second claim in the same epoch: rejected even with fresh proof.
        let salt2 = w.fresh_salt();
        let commitment2 = claim_commitment(&shares, &salt2, "rival");
        w.bounty_commit("rival", commitment2);
        w.advance_to(5).expect("clock moves");
        assert!(w.bounty_reveal("rival", &shares, &salt2).expect("runs").is_none());
        w.check_conservation().expect("money conserved");
    }

    #[test]
    fn held_reward_releases_clean_after_hold() {
        let mut w = world_with_user("alice");
        let shares = w.exfiltrate_shares("alice", 3).expect("shares exist");
        let salt = w.fresh_salt();
        let commitment = claim_commitment(&shares, &salt, "hunter");
        w.bounty_commit("hunter", commitment);
        w.advance_to(1).expect("clock moves");
        let amount = w.bounty_reveal("hunter", &shares, &salt).expect("runs").expect("accepted");
        // Recovery rotation mid-hold clears the flag but keeps the hold.
        w.advance_to(5).expect("clock moves");
        w.rotate_keys(RotationMode::Correct).expect("runs");
        assert!(!w.red_flag());
        w.advance_to(1 + w.config.hold_period).expect("clock moves");
        assert_eq!(w.balance("hunter"), amount);
        assert_eq!(w.held_total(), Money::ZERO);
        assert_eq!(w.count_events("reward_released"), 1);
        w.check_conservation().expect("money conserved");
    }

    #[test]
    fn compensation_during_hold_forfeits_reward() {
        let mut w = world_with_user("alice");
        // The attacker drains alice before claiming the bounty.
        let t = tx("alice", "thief", 6, 8);
        let signature = w.unauthorized_signature("alice", &t).expect("runs");
        w.wallet_transfer(&t, &signature).expect("runs");
        let shares = w.exfiltrate_shares("alice", 3).expect("shares exist");
        let salt = w.fresh_salt();
        let commitment = claim_commitment(&shares, &salt, "hunter");
        w.bounty_commit("hunter", commitment);
        w.advance_to(2).expect("clock moves");
        w.bounty_reveal("hunter", &shares, &salt).expect("runs").expect("accepted");
        // Recovery rotation lowers the flag so the victim can dispute.
        w.advance_to(4).expect("clock moves");
        w.rotate_keys(RotationMode::Correct).expect("runs");
        w.insurance_claim("alice", &t, ProviderBehavior::Reply).expect("runs");
        assert_eq!(w.count_events("compensation_paid"), 1);
        // At maturity the reward bounces back to the deposit.
        w.advance_to(2 + w.config.hold_period).expect("clock moves");
        assert_eq!(w.balance("hunter"), Money::ZERO);
        assert_eq!(w.count_events("reward_forfeited"), 1);
        assert!(w.final_report().bounty_deposit >= Money::from_f64(4.8));
        w.check_conservation().expect("money conserved");
    }

    #[test]
    fn rotation_invalidates_old_proofs_and_mismatch_disables_signing() {
        let mut w = world_with_user("alice");
        let old_shares = w.exfiltrate_shares("alice", 3).expect("shares exist");
        w.rotate_keys(RotationMode::Correct).expect("runs");
        // Old shares no longer appear in the published record.
        let salt = w.fresh_salt();
        let commitment = claim_commitment(&old_shares, &salt, "hunter");
        w.bounty_commit("hunter", commitment);
        w.advance_to(1).expect("clock moves");
        assert!(w.bounty_reveal("hunter", &old_shares, &salt).expect("runs").is_none());
        // A dishonest republication stops signing.
        w.rotate_keys(RotationMode::Mismatched).expect("runs");
        let t = tx("alice", "bob", 1, 9);
        match w.sign_transaction("alice", &t, TokenQuality::Valid).expect("runs") {
            SignOutcome::Refused { reason, .. } => assert_eq!(reason, "publication mismatch"),
            SignOutcome::Signed(_) => panic!("mismatched publication must refuse"),
        }
        assert!(w.count_events("signing_disabled") >= 1);
        // The next honest rotation restores service.
        w.rotate_keys(RotationMode::Correct).expect("runs");
        let t = tx("alice", "bob", 1, 10);
        assert!(matches!(
            w.sign_transaction("alice", &t, TokenQuality::Valid).expect("runs"),
            SignOutcome::Signed(_)
        ));
    }

    #[test]
    fn share_leak_scanner_catches_planted_leak() {
        let mut w = world_with_user("alice");
        w.check_no_share_leak().expect("clean world has no leaks");
        let shares = w.exfiltrate_shares("alice", 1).expect("shares exist");
        w.inject_event_for_tests(EventKind::RedFlagRaised {
            cause: hex::encode(shares[0].bytes()),
        });
        assert!(matches!(w.check_no_share_leak(), Err(SimError::ShareLeak { .. })));
    }

    #[test]
    fn split_rate_limited_examples() {
        let m = Money::from_units;
        assert_eq!(split_rate_limited(m(250), m(100)).expect("valid"), 3);
        assert_eq!(split_rate_limited(m(100), m(100)).expect("valid"), 1);
        assert_eq!(split_rate_limited(m(101), m(100)).expect("valid"), 2);
        assert_eq!(split_rate_limited(Money::ZERO, m(100)).expect("valid"), 0);
        assert!(matches!(
            split_rate_limited(m(250), Money::ZERO),
            Err(SimError::NonPositiveCap)
        ));
        assert!(matches!(
            split_rate_limited(m(250), m(-1)),
            Err(SimError::NonPositiveCap)
        ));
    }

    #[test]
    fn identical_seeds_replay_identical_logs() {
        let run = || -> String {
            let mut w = world_with_user("alice");
            let t = tx("alice", "bob", 3, 1);
            if let SignOutcome::Signed(s) =
                w.sign_transaction("alice", &t, TokenQuality::Valid).expect("runs")
            {
                w.wallet_transfer(&t, &s).expect("runs");
            }
            let shares = w.exfiltrate_shares("alice", 2).expect("shares exist");
            let salt = w.fresh_salt();
            let commitment = claim_commitment(&shares, &salt, "hunter");
            w.bounty_commit("hunter", commitment);
            w.advance_to(2).expect("clock moves");
            w.bounty_reveal("hunter", &shares, &salt).expect("runs");
            w.rotate_keys(RotationMode::Correct).expect("runs");
            w.advance_to(40).expect("clock moves");
            w.events_jsonl()
        };
        assert_eq!(run(), run());
    }
}
