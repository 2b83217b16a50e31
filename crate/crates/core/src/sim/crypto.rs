//! Mock cryptography for the protocol simulation.
//!
//! Everything here models interfaces, not hardness: digests are real
//! SHA-256 (so cross-implementation test vectors hold bit-exactly), while
//! signatures and public-key encryption are keyed hashes resolved through
//! a private key registry. A signature verifies if and only if it was
//! produced with the registered secret for that public key, which gives
//! the simulation standard correctness and non-forgeability without any
//! real cryptography.

use std::collections::BTreeMap;
use std::fmt;

use rand::RngCore;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize, Serializer};
use sha2::{Digest as _, Sha256};

/// SHA-256 output, hex-encoded wherever it is shown or serialized.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Digest(pub [u8; 32]);

impl Digest {
    pub fn hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({}…)", &self.hex()[..8])
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.hex())
    }
}

impl Serialize for Digest {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.hex())
    }
}

impl<'de> Deserialize<'de> for Digest {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        let bytes = hex::decode(&text).map_err(serde::de::Error::custom)?;
        let array: [u8; 32] =
            bytes.try_into().map_err(|_| serde::de::Error::custom("need 32 bytes"))?;
        Ok(Digest(array))
    }
}

/// SHA-256 over length-prefixed parts: unambiguous under concatenation.
pub fn digest_parts(parts: &[&[u8]]) -> Digest {
    let mut hasher = Sha256::new();
    for part in parts {
        hasher.update((part.len() as u64).to_be_bytes());
        hasher.update(part);
    }
    Digest(hasher.finalize().into())
}

/// Plain SHA-256 of one byte string (the test-vector entry point).
pub fn digest_bytes(data: &[u8]) -> Digest {
    Digest(Sha256::digest(data).into())
}

/// Mock public key: the digest of its secret.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PubKey(pub Digest);

impl fmt::Debug for PubKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PubKey({}…)", &self.0.hex()[..8])
    }
}

/// Mock signature: a keyed hash over the message.
#[derive(Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature(pub Digest);

impl fmt::Debug for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Signature({}…)", &self.0.hex()[..8])
    }
}

/// Key registry: owns every secret, so only it can sign or open envelopes.
///
/// Secrets never leave this struct; callers hold [`PubKey`] handles.
#[derive(Debug, Default)]
pub struct MockPki {
    secrets: BTreeMap<PubKey, [u8; 32]>,
}

impl MockPki {
    pub fn new() -> Self {
        Self::default()
    }

    /// Mint a fresh keypair from the world's RNG and return its handle.
    pub fn generate(&mut self, rng: &mut ChaCha8Rng) -> PubKey {
        let mut secret = [0u8; 32];
        rng.fill_bytes(&mut secret);
        let pk = PubKey(digest_parts(&[b"pk", &secret]));
        self.secrets.insert(pk, secret);
        pk
    }

    /// Sign on behalf of `signer`; panics if the key was not minted here,
    /// which would be a simulation bug rather than a protocol outcome.
    pub fn sign(&self, signer: PubKey, message: &[u8]) -> Signature {
        let secret = self.secrets.get(&signer).expect("signing key was minted by this registry");
        Signature(digest_parts(&[b"sig", secret, message]))
    }

    pub fn verify(&self, signer: PubKey, message: &[u8], signature: &Signature) -> bool {
        match self.secrets.get(&signer) {
            Some(secret) => {
                Signature(digest_parts(&[b"sig", secret, message])) == *signature
            }
            None => false,
        }
    }

    /// A syntactically valid signature that no key ever produced.
    pub fn forge(message: &[u8]) -> Signature {
        Signature(digest_parts(&[b"forged", message]))
    }

    /// Seal bytes to a recipient. Only [`MockPki::open`] with the same
    /// registry can read them back.
    pub fn seal(&self, recipient: PubKey, plaintext: &[u8]) -> SealedEnvelope {
        SealedEnvelope {
            recipient,
            commitment: digest_parts(&[b"sealed", &recipient.0 .0, plaintext]),
            payload: plaintext.to_vec(),
        }
    }

    /// Open an envelope addressed to `recipient`; `None` for wrong keys or
    /// tampered contents.
    pub fn open<'a>(
        &self,
        recipient: PubKey,
        envelope: &'a SealedEnvelope,
    ) -> Option<&'a [u8]> {
        if envelope.recipient != recipient || !self.secrets.contains_key(&recipient) {
            return None;
        }
        let expected =
            digest_parts(&[b"sealed", &recipient.0 .0, &envelope.payload]);
        (expected == envelope.commitment).then_some(envelope.payload.as_slice())
    }
}

/// Semantically opaque ciphertext: serialization and debug output expose
/// only the recipient and a commitment, never the payload.
#[derive(Clone, PartialEq, Eq)]
pub struct SealedEnvelope {
    recipient: PubKey,
    commitment: Digest,
    payload: Vec<u8>,
}

impl SealedEnvelope {
    pub fn commitment(&self) -> Digest {
        self.commitment
    }
}

impl fmt::Debug for SealedEnvelope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SealedEnvelope")
            .field("recipient", &self.recipient)
            .field("commitment", &self.commitment)
            .finish_non_exhaustive()
    }
}

impl Serialize for SealedEnvelope {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("SealedEnvelope", 2)?;
        st.serialize_field("recipient", &self.recipient)?;
        st.serialize_field("commitment", &self.commitment)?;
        st.end()
    }
}

/// One secret key share. Never serialized, never printed: every outward
/// representation is its digest.
#[derive(Clone, PartialEq, Eq)]
pub struct ShareSecret(Vec<u8>);

impl ShareSecret {
    pub fn generate(rng: &mut ChaCha8Rng) -> Self {
        let mut bytes = vec![0u8; 32];
        rng.fill_bytes(&mut bytes);
        ShareSecret(bytes)
    }

    /// The published commitment for this share.
    pub fn digest(&self) -> Digest {
        digest_parts(&[b"share", &self.0])
    }

    /// Raw bytes, for proof assembly and leak scanning only.
    pub(crate) fn bytes(&self) -> &[u8] {
        &self.0
    }

    /// A copy with one bit flipped, for mutation tests.
    pub fn corrupted(&self) -> Self {
        let mut bytes = self.0.clone();
        bytes[0] ^= 1;
        ShareSecret(bytes)
    }
}

impl fmt::Debug for ShareSecret {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ShareSecret(<redacted>)")
    }
}
