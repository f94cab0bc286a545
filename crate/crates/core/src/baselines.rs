//! Competing tree-digest schemes, run over the same canonical tree and hash
//! counter as the CSR digest so their invocation counts are comparable.
//!
//! DOM-HASH (and XHASH, which differs only in whitespace handling):
//!
//! ```text
//! dos(v) = h(frame(name) ++ frame(text) ++ frame(pi))
//! Res(v) = h(frame(h(attrs)) ++ frame(dos(v)) ++ frame(D(c_1)) ++ ... ++ frame(D(c_n)))
//! D(c)   = dos(c)  if c has no children and no attributes
//!          Res(c)  otherwise
//! ```
//!
//! The document digest is `Res(root)`. A plain leaf costs one hash; every
//! other element costs three.
//!
//! Bertino's Merkle model:
//!
//! ```text
//! attribute: h(frame(h(value)) ++ frame(h(name)))
//! element:   h(frame(h(text)) ++ frame(h(name)) ++ frame(M(a_1)) ++ ... ++ frame(M(c_1)) ++ ...)
//! ```
//!
//! Three hashes per element and per attribute.

use crate::hash::{Digest, HashAlgorithmId, HashCounter};
use crate::xml_tree::{frame_all, XmlNode};

/// Treatment of non-significant whitespace in XHASH.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpaceMode {
    /// Whitespace-only text nodes are dropped, as in the canonical tree.
    #[default]
    Default,
    /// All text is hashed verbatim.
    Preserved,
}

fn attribute_bytes(node: &XmlNode) -> Vec<u8> {
    let items: Vec<Vec<u8>> = node
        .attributes()
        .iter()
        .map(|(n, v)| {
            let mut item = Vec::with_capacity(n.len() + v.len() + 1);
            item.extend_from_slice(n.as_bytes());
            item.push(0);
            item.extend_from_slice(v.as_bytes());
            item
        })
        .collect();
    frame_all(items.iter().map(Vec::as_slice))
}

fn dos(node: &XmlNode, mode: SpaceMode, algo: HashAlgorithmId, counter: &mut HashCounter) -> Digest {
    let text = match mode {
        SpaceMode::Default => node.value(),
        SpaceMode::Preserved => node.raw_text(),
    };
    algo.hash_framed(counter, &[node.name().as_bytes(), text.as_bytes(), node.pi().as_bytes()])
}

fn res(node: &XmlNode, mode: SpaceMode, algo: HashAlgorithmId, counter: &mut HashCounter) -> Digest {
    let attrs = algo.hash(counter, &attribute_bytes(node));
    let own = dos(node, mode, algo, counter);
    let mut parts = Vec::with_capacity(node.children().len() + 2);
    parts.push(attrs);
    parts.push(own);
    for child in node.children() {
        let d = if child.is_leaf() && child.attributes().is_empty() {
            dos(child, mode, algo, counter)
        } else {
            res(child, mode, algo, counter)
        };
        parts.push(d);
    }
    let items: Vec<&[u8]> = parts.iter().map(Digest::as_bytes).collect();
    algo.hash_framed(counter, &items)
}

/// DOM-HASH digest of the subtree rooted at `root`.
pub fn dom_hash_digest(root: &XmlNode, algo: HashAlgorithmId, counter: &mut HashCounter) -> Digest {
    res(root, SpaceMode::Default, algo, counter)
}

/// XHASH digest: DOM-HASH with an explicit whitespace policy.
pub fn xhash_digest(root: &XmlNode, algo: HashAlgorithmId, counter: &mut HashCounter, space_mode: SpaceMode) -> Digest {
    res(root, space_mode, algo, counter)
}

/// Options for the Merkle baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BertinoOptions {
    /// Hash attributes as Merkle children. Disable for the attribute-blind
    /// variant of the model.
    pub include_attributes: bool,
}

impl Default for BertinoOptions {
    fn default() -> Self {
        BertinoOptions {
            include_attributes: true,
        }
    }
}

/// Merkle-model digest of the subtree rooted at `root`.
pub fn bertino_digest(root: &XmlNode, algo: HashAlgorithmId, counter: &mut HashCounter) -> Digest {
    bertino_digest_with(root, algo, counter, BertinoOptions::default())
}

pub fn bertino_digest_with(
    root: &XmlNode,
    algo: HashAlgorithmId,
    counter: &mut HashCounter,
    options: BertinoOptions,
) -> Digest {
    let content = algo.hash_framed(counter, &[root.value().as_bytes()]);
    let tag = algo.hash_framed(counter, &[root.name().as_bytes()]);
    let mut parts = vec![content, tag];
    if options.include_attributes {
        for (name, value) in root.attributes() {
            parts.push(bertino_attribute(name, value, algo, counter));
        }
    }
    for child in root.children() {
        parts.push(bertino_digest_with(child, algo, counter, options));
    }
    let items: Vec<&[u8]> = parts.iter().map(Digest::as_bytes).collect();
    algo.hash_framed(counter, &items)
}

/// Merkle hash of one attribute node.
pub fn bertino_attribute(name: &str, value: &str, algo: HashAlgorithmId, counter: &mut HashCounter) -> Digest {
    let v = algo.hash_framed(counter, &[value.as_bytes()]);
    let n = algo.hash_framed(counter, &[name.as_bytes()]);
    algo.hash_framed(counter, &[v.as_bytes(), n.as_bytes()])
}
