//! Fine-grained integrity digests for XML.
//!
//! A signed element is bound to its content (CI), its labelled position in
//! the document (ST), and a signer-chosen set of context elements (CRI). The
//! three are combined into one CSR digest, optionally sealed with the
//! document's creation timestamp, and serialized as an integrity manifest
//! that a verifier can recheck facet by facet.
//!
//! ```
//! use xmlcsr::{csr_digest, parse_document, ContextSet, HashAlgorithmId, HashCounter};
//!
//! let doc = parse_document(b"<r><a>1</a><b>2</b></r>").unwrap();
//! let ctx = ContextSet::new(&doc, ["/r/b".parse().unwrap()]).unwrap();
//! let mut counter = HashCounter::new();
//! let d = csr_digest(&doc, &"/r/a".parse().unwrap(), &ctx, HashAlgorithmId::Sha256, &mut counter).unwrap();
//! assert_eq!(d.csr.as_bytes().len(), 32);
//! ```
//!
//! The crate also carries the DOM-HASH, XHASH and Merkle-tree baselines,
//! an analytical cost model, and a sweep harness that compares all four
//! schemes by hash invocations and wall time.

pub mod baselines;
pub mod bench;
pub mod cost;
pub mod csr;
pub mod demo;
pub mod fixtures;
pub mod hash;
pub mod manifest;
pub mod verify;
pub mod xml_tree;

pub use baselines::{bertino_digest, dom_hash_digest, xhash_digest, SpaceMode};
pub use cost::{hash_count, node_count, CostError, CostModelParams, TreeShape};
pub use csr::{
    content_integrity, context_referential_integrity, csr_digest, structure_integrity, timestamped_seal, ContextSet,
    CsrDigest, TimestampError,
};
pub use hash::{Digest, HashAlgorithmId, HashCounter};
pub use manifest::{emit_manifest, parse_manifest, DigestEncoding, IntegrityManifest, ManifestError};
pub use verify::{verify, Facet, Verdict};
pub use xml_tree::{node_label, node_path, parse_document, select_node, NodeLabel, NodePath, NodeSelector, XmlNode};

/// Root attribute read for the creation timestamp when none is supplied.
pub const DEFAULT_TIMESTAMP_ATTRIBUTE: &str = "created";

/// Cost model over `f64`.
pub type CostModel = CostModelParams<f64>;
/// Cost model over `f32`.
pub type CostModelF32 = CostModelParams<f32>;
/// Cost model over exact rationals.
pub type ExactCostModel = CostModelParams<num_rational::Ratio<i64>>;

/// Any failure surfaced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] xml_tree::ParseError),
    #[error(transparent)]
    Lookup(#[from] xml_tree::LookupError),
    #[error(transparent)]
    Timestamp(#[from] TimestampError),
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Sweep(#[from] bench::SweepError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
