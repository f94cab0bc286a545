//! Rechecks a document against an integrity manifest.

use std::fmt;

use crate::csr::{combine, content_integrity, context_referential_integrity, seal_value, ContextSet};
use crate::hash::HashCounter;
use crate::manifest::IntegrityManifest;
use crate::xml_tree::{NodePath, XmlNode};

/// The aspect of integrity that failed verification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Facet {
    Content,
    Structure,
    Context,
    Timestamp,
}

impl Facet {
    pub fn as_str(self) -> &'static str {
        match self {
            Facet::Content => "content",
            Facet::Structure => "structure",
            Facet::Context => "context",
            Facet::Timestamp => "timestamp",
        }
    }
}

impl fmt::Display for Facet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail(Facet),
}

impl Verdict {
    pub fn is_pass(self) -> bool {
        self == Verdict::Pass
    }

    pub fn facet(self) -> Option<Facet> {
        match self {
            Verdict::Pass => None,
            Verdict::Fail(f) => Some(f),
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Pass => f.write_str("pass"),
            Verdict::Fail(facet) => write!(f, "fail ({facet})"),
        }
    }
}

/// Where the verifier looks for the document's creation timestamp.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyOptions {
    /// Root attribute holding the creation timestamp. When the document has
    /// it, that value is used for the seal instead of the manifest's.
    pub timestamp_attribute: String,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            timestamp_attribute: crate::DEFAULT_TIMESTAMP_ATTRIBUTE.to_owned(),
        }
    }
}

/// Recomputes every facet of `manifest` from `root` and reports the first
/// mismatch, in the order content, structure, context, timestamp.
pub fn verify(root: &XmlNode, manifest: &IntegrityManifest) -> Verdict {
    verify_with(root, manifest, &VerifyOptions::default())
}

pub fn verify_with(root: &XmlNode, manifest: &IntegrityManifest, options: &VerifyOptions) -> Verdict {
    let algo = manifest.algorithm;
    let mut counter = HashCounter::new();

    let Ok(target) = manifest.target.resolve(root) else {
        return Verdict::Fail(Facet::Structure);
    };
    let ci = content_integrity(target.node, algo, &mut counter);
    if ci != manifest.content_digest.digest {
        return Verdict::Fail(Facet::Content);
    }
    let path = NodePath::along(root, &target.index_path).expect("resolved path");
    let st = algo.hash_framed(&mut counter, &[path.rendered().as_bytes()]);
    if st != manifest.sti.digest_value.digest {
        return Verdict::Fail(Facet::Structure);
    }

    let Ok(context) = ContextSet::new(root, manifest.context_selectors().iter().cloned()) else {
        return Verdict::Fail(Facet::Structure);
    };
    let cri = context_referential_integrity(root, &context, algo, &mut counter).expect("context resolved");
    let expected_cri = manifest
        .cri
        .as_ref()
        .map_or(&[][..], |c| c.digest_value.digest.as_bytes());
    if cri != expected_cri {
        return Verdict::Fail(Facet::Context);
    }

    // Facets all match; a differing combined value means the reference
    // itself was altered.
    let csr = combine(&ci, &st, &cri, algo, &mut counter);
    if csr != manifest.csr.digest {
        return Verdict::Fail(Facet::Content);
    }

    if let Some(seal) = &manifest.seal {
        let t = root
            .attribute(&options.timestamp_attribute)
            .unwrap_or(&seal.timestamp);
        if t != seal.timestamp || seal_value(t, &csr, algo, &mut counter) != seal.digest.digest {
            return Verdict::Fail(Facet::Timestamp);
        }
    }
    Verdict::Pass
}
