//! Hash-based proof of knowledge of key shares.
//!
//! The published parameters are the digests of the current epoch's shares;
//! a proof is the claimed share preimages themselves. Verification is set
//! semantics: duplicated preimages collapse, so presenting one share twice
//! never counts as knowing two.

use std::collections::BTreeSet;

use super::crypto::{digest_parts, Digest, ShareSecret};

/// Published parameters: one digest per share, in share order.
pub fn pok_setup(shares: &[ShareSecret]) -> Vec<Digest> {
    shares.iter().map(ShareSecret::digest).collect()
}

/// Returns true iff `proof` demonstrates knowledge of exactly `k` distinct
/// published shares: every element's digest appears in `pp`, and the
/// distinct-element count equals `k`.
pub fn pok_verify(pp: &[Digest], proof: &[ShareSecret], k: usize) -> bool {
    let published: BTreeSet<&Digest> = pp.iter().collect();
    let mut seen = BTreeSet::new();
    for share in proof {
        let digest = share.digest();
        if !published.contains(&digest) {
            return false;
        }
        seen.insert(digest);
    }
    seen.len() == k && proof.len() == k
}

/// Canonical byte encoding of a proof: the share digests sorted and
/// concatenated. Commitments bind to this form so the same share set
/// commits identically regardless of submission order.
pub fn canonical_proof_bytes(proof: &[ShareSecret]) -> Vec<u8> {
    let mut digests: Vec<Digest> = proof.iter().map(ShareSecret::digest).collect();
    digests.sort();
    let mut out = Vec::with_capacity(digests.len() * 32);
    for digest in digests {
        out.extend_from_slice(&digest.0);
    }
    out
}

/// The claim commitment: digest over (canonical proof bytes, salt, claim
/// address).
pub fn claim_commitment(proof: &[ShareSecret], salt: &[u8; 16], address: &str) -> Digest {
    digest_parts(&[b"claim", &canonical_proof_bytes(proof), salt, address.as_bytes()])
}
