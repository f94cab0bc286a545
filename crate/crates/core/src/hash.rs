//! Hash primitives with invocation counting.
//!
//! Every digest in this crate is produced through [`HashAlgorithmId::hash_framed`],
//! which length-prefixes each operand and bumps a [`HashCounter`] once.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha1::Sha1;
use sha2::{Digest as _, Sha256};

/// Supported one-shot hash functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HashAlgorithmId {
    Sha1,
    Sha256,
}

impl HashAlgorithmId {
    pub const ALL: [HashAlgorithmId; 2] = [HashAlgorithmId::Sha1, HashAlgorithmId::Sha256];

    /// Output width in octets.
    pub const fn output_len(self) -> usize {
        match self {
            HashAlgorithmId::Sha1 => 20,
            HashAlgorithmId::Sha256 => 32,
        }
    }

    /// XML Signature algorithm identifier.
    pub const fn uri(self) -> &'static str {
        match self {
            HashAlgorithmId::Sha1 => "http://www.w3.org/2000/09/xmldsig#sha1",
            HashAlgorithmId::Sha256 => "http://www.w3.org/2001/04/xmlenc#sha256",
        }
    }

    pub fn from_uri(uri: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.uri() == uri.trim())
    }

    pub const fn name(self) -> &'static str {
        match self {
            HashAlgorithmId::Sha1 => "sha1",
            HashAlgorithmId::Sha256 => "sha256",
        }
    }

    /// One hash invocation over unframed `data`.
    pub fn hash(self, counter: &mut HashCounter, data: &[u8]) -> Digest {
        counter.bump();
        let bytes = match self {
            HashAlgorithmId::Sha1 => Sha1::digest(data).to_vec(),
            HashAlgorithmId::Sha256 => Sha256::digest(data).to_vec(),
        };
        Digest {
            algorithm: self,
            bytes,
        }
    }

    /// One hash invocation over `frame(item_1) ++ ... ++ frame(item_n)`, where
    /// `frame(x)` is `x.len()` as 4-byte big-endian followed by `x`.
    pub fn hash_framed(self, counter: &mut HashCounter, items: &[&[u8]]) -> Digest {
        counter.bump();
        let bytes = match self {
            HashAlgorithmId::Sha1 => framed::<Sha1>(items),
            HashAlgorithmId::Sha256 => framed::<Sha256>(items),
        };
        Digest {
            algorithm: self,
            bytes,
        }
    }
}

fn framed<H: sha2::Digest>(items: &[&[u8]]) -> Vec<u8> {
    let mut h = H::new();
    for item in items {
        let len = u32::try_from(item.len()).expect("framed item exceeds 4 GiB");
        h.update(len.to_be_bytes());
        h.update(item);
    }
    h.finalize().to_vec()
}

impl fmt::Display for HashAlgorithmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for HashAlgorithmId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "").as_str() {
            "sha1" => Ok(HashAlgorithmId::Sha1),
            "sha256" => Ok(HashAlgorithmId::Sha256),
            other => Err(format!("unknown hash algorithm `{other}` (expected sha1 or sha256)")),
        }
    }
}

/// A hash output tagged with the algorithm that produced it.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Digest {
    algorithm: HashAlgorithmId,
    bytes: Vec<u8>,
}

/// Octet string whose length does not match the algorithm width.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{algorithm} digest must be {expected} octets, got {actual}")]
pub struct WidthError {
    pub algorithm: HashAlgorithmId,
    pub expected: usize,
    pub actual: usize,
}

impl Digest {
    pub fn from_bytes(algorithm: HashAlgorithmId, bytes: impl Into<Vec<u8>>) -> Result<Self, WidthError> {
        let bytes = bytes.into();
        if bytes.len() != algorithm.output_len() {
            return Err(WidthError {
                algorithm,
                expected: algorithm.output_len(),
                actual: bytes.len(),
            });
        }
        Ok(Digest { algorithm, bytes })
    }

    pub fn algorithm(&self) -> HashAlgorithmId {
        self.algorithm
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn to_hex(&self) -> String {
        self.bytes.iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({}:{})", self.algorithm, self.to_hex())
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl AsRef<[u8]> for Digest {
    fn as_ref(&self) -> &[u8] {
        &self.bytes
    }
}

/// Monotone count of hash invocations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct HashCounter {
    count: u64,
}

impl HashCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    fn bump(&mut self) {
        self.count += 1;
    }
}
