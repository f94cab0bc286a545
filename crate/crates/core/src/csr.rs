//! Content, structure and context-referential integrity of a signed node.
//!
//! * CI: leaf `h(canonical)`; vertex `h(frame(h(canonical)) ++ frame(CI(c_1)) ++ ...)`,
//!   where `canonical` is [`XmlNode::canonical_bytes`] hashed as is.
//! * ST: `h(frame(path))` over the labelled root-to-node path.
//! * CRI: `h(frame(CI(w_1)) ++ frame(ST(w_1)) ++ ...)` over the context set in
//!   document order, or the empty string when no context is chosen.
//! * CSR: `h(frame(CI) ++ frame(ST) ++ frame(CRI))`.
//! * Seal: `h(frame(t) ++ frame(CSR))` for an RFC 3339 UTC timestamp `t`.

use crate::hash::{Digest, HashAlgorithmId, HashCounter};
use crate::xml_tree::{LookupError, NodePath, NodeSelector, XmlNode};

/// Content digest of `node` and its whole subtree.
pub fn content_integrity(node: &XmlNode, algo: HashAlgorithmId, counter: &mut HashCounter) -> Digest {
    let own = algo.hash(counter, &node.canonical_bytes());
    if node.is_leaf() {
        return own;
    }
    let children: Vec<Digest> = node
        .children()
        .iter()
        .map(|c| content_integrity(c, algo, counter))
        .collect();
    let mut items: Vec<&[u8]> = Vec::with_capacity(children.len() + 1);
    items.push(own.as_bytes());
    items.extend(children.iter().map(Digest::as_bytes));
    algo.hash_framed(counter, &items)
}

/// Structure digest of the node addressed by `target`.
pub fn structure_integrity(
    root: &XmlNode,
    target: &NodeSelector,
    algo: HashAlgorithmId,
    counter: &mut HashCounter,
) -> Result<Digest, LookupError> {
    let resolved = target.resolve(root)?;
    Ok(structure_at(root, &resolved.index_path, algo, counter))
}

fn structure_at(root: &XmlNode, index_path: &[usize], algo: HashAlgorithmId, counter: &mut HashCounter) -> Digest {
    let path = NodePath::along(root, index_path).expect("index path resolved against root");
    algo.hash_framed(counter, &[path.rendered().as_bytes()])
}

/// Context-related elements chosen for a signed node.
///
/// Entries are deduplicated by target node and kept in document order of
/// their targets in the document they were resolved against.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ContextSet {
    selectors: Vec<NodeSelector>,
}

impl ContextSet {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Resolves every selector against `root`, drops duplicates, and orders
    /// the result by document position.
    pub fn new(root: &XmlNode, selectors: impl IntoIterator<Item = NodeSelector>) -> Result<Self, LookupError> {
        let mut resolved: Vec<(Vec<usize>, NodeSelector)> = Vec::new();
        for selector in selectors {
            let index_path = selector.resolve(root)?.index_path;
            if !resolved.iter().any(|(p, _)| *p == index_path) {
                resolved.push((index_path, selector));
            }
        }
        // Lexicographic order on child-index paths is preorder.
        resolved.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(ContextSet {
            selectors: resolved.into_iter().map(|(_, s)| s).collect(),
        })
    }

    pub fn selectors(&self) -> &[NodeSelector] {
        &self.selectors
    }

    pub fn is_empty(&self) -> bool {
        self.selectors.is_empty()
    }

    pub fn len(&self) -> usize {
        self.selectors.len()
    }
}

/// Context digest bytes; empty when `context` is empty.
pub fn context_referential_integrity(
    root: &XmlNode,
    context: &ContextSet,
    algo: HashAlgorithmId,
    counter: &mut HashCounter,
) -> Result<Vec<u8>, LookupError> {
    if context.is_empty() {
        return Ok(Vec::new());
    }
    let mut parts = Vec::with_capacity(context.len() * 2);
    for selector in context.selectors() {
        let resolved = selector.resolve(root)?;
        parts.push(content_integrity(resolved.node, algo, counter));
        parts.push(structure_at(root, &resolved.index_path, algo, counter));
    }
    let items: Vec<&[u8]> = parts.iter().map(Digest::as_bytes).collect();
    Ok(algo.hash_framed(counter, &items).as_bytes().to_vec())
}

/// The combined digest of a signed node together with its facets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsrDigest {
    pub ci: Digest,
    pub st: Digest,
    pub cri: Vec<u8>,
    pub csr: Digest,
    pub seal: Option<Digest>,
    pub timestamp: Option<String>,
}

impl CsrDigest {
    pub fn algorithm(&self) -> HashAlgorithmId {
        self.csr.algorithm()
    }

    /// The value that is finally signed: the seal when present, else CSR.
    pub fn signed_value(&self) -> &Digest {
        self.seal.as_ref().unwrap_or(&self.csr)
    }
}

pub(crate) fn combine(ci: &Digest, st: &Digest, cri: &[u8], algo: HashAlgorithmId, counter: &mut HashCounter) -> Digest {
    algo.hash_framed(counter, &[ci.as_bytes(), st.as_bytes(), cri])
}

/// Computes CI, ST and CRI for `target` and combines them.
pub fn csr_digest(
    root: &XmlNode,
    target: &NodeSelector,
    context: &ContextSet,
    algo: HashAlgorithmId,
    counter: &mut HashCounter,
) -> Result<CsrDigest, LookupError> {
    let resolved = target.resolve(root)?;
    let ci = content_integrity(resolved.node, algo, counter);
    let st = structure_at(root, &resolved.index_path, algo, counter);
    let cri = context_referential_integrity(root, context, algo, counter)?;
    let csr = combine(&ci, &st, &cri, algo, counter);
    Ok(CsrDigest {
        ci,
        st,
        cri,
        csr,
        seal: None,
        timestamp: None,
    })
}

/// Timestamp that is not an RFC 3339 instant in UTC.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("`{0}` is not an RFC 3339 UTC timestamp")]
pub struct TimestampError(pub String);

/// Checks that `t` is an RFC 3339 timestamp with a zero UTC offset.
pub fn validate_timestamp(t: &str) -> Result<(), TimestampError> {
    match chrono::DateTime::parse_from_rfc3339(t) {
        Ok(dt) if dt.offset().local_minus_utc() == 0 => Ok(()),
        _ => Err(TimestampError(t.to_owned())),
    }
}

pub(crate) fn seal_value(t: &str, csr: &Digest, algo: HashAlgorithmId, counter: &mut HashCounter) -> Digest {
    algo.hash_framed(counter, &[t.as_bytes(), csr.as_bytes()])
}

/// Binds `csr` to the creation timestamp `t`, storing both on the digest.
pub fn timestamped_seal(
    csr: &mut CsrDigest,
    t: &str,
    algo: HashAlgorithmId,
    counter: &mut HashCounter,
) -> Result<Digest, TimestampError> {
    validate_timestamp(t)?;
    let seal = seal_value(t, &csr.csr, algo, counter);
    csr.seal = Some(seal.clone());
    csr.timestamp = Some(t.to_owned());
    Ok(seal)
}
