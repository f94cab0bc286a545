//! Tampering scenarios on the bundled certificate, contrasting a
//! content-only digest with the CSR verdict.

use std::fmt;
use std::str::FromStr;

use crate::baselines::dom_hash_digest;
use crate::csr::{csr_digest, timestamped_seal, ContextSet};
use crate::fixtures::certificate;
use crate::hash::{HashAlgorithmId, HashCounter};
use crate::manifest::{parse_manifest, DigestEncoding, IntegrityManifest};
use crate::verify::{verify, Verdict};
use crate::xml_tree::{NodeSelector, XmlNode};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// Move the signed `Results` subtree under `Measurements`.
    Relocate,
    /// Paste the signed document into one with a different creation time.
    Copy,
    /// Replace the `Measurements` context element.
    ContextSwap,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::Relocate, Scenario::Copy, Scenario::ContextSwap];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Relocate => "relocate",
            Scenario::Copy => "copy",
            Scenario::ContextSwap => "context-swap",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| format!("unknown scenario `{s}` (expected relocate, copy or context-swap)"))
    }
}

/// Outcome of one scenario.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DemoReport {
    pub scenario: Scenario,
    /// Whether the DOM-HASH of the signed element is the same before and
    /// after tampering.
    pub dom_hash_unchanged: bool,
    /// CSR verdict on the original document.
    pub original: Verdict,
    /// CSR verdict on the tampered document.
    pub tampered: Verdict,
    pub transcript: Vec<String>,
}

pub const SIGNED_AT: &str = "2009-04-10T00:00:00Z";
pub const COPIED_AT: &str = "2011-02-01T09:30:00Z";

const TARGET: &str = "/Certificate/Results";
const CONTEXT: &str = "/Certificate/Measurements";

fn sel(s: &str) -> NodeSelector {
    s.parse().expect("static selector")
}

fn sign(root: &XmlNode, context: &[&str], algo: HashAlgorithmId) -> IntegrityManifest {
    let target = sel(TARGET);
    let ctx = ContextSet::new(root, context.iter().map(|s| sel(s))).expect("context resolves");
    let mut counter = HashCounter::new();
    let mut digest = csr_digest(root, &target, &ctx, algo, &mut counter).expect("target resolves");
    timestamped_seal(&mut digest, SIGNED_AT, algo, &mut counter).expect("valid timestamp");
    let xml = IntegrityManifest::from_digest(&digest, &target, &ctx, DigestEncoding::Base64).to_xml();
    parse_manifest(xml.as_bytes()).expect("emitted manifest parses")
}

/// Runs `scenario` with `algo`.
pub fn run(scenario: Scenario, algo: HashAlgorithmId) -> DemoReport {
    let mut original = certificate();
    original.set_attribute("created", SIGNED_AT);
    let mut log = Vec::new();

    let (manifest, tampered, moved_results) = match scenario {
        Scenario::Relocate => {
            log.push(format!("sign {TARGET} (no context), sealed at {SIGNED_AT}"));
            let manifest = sign(&original, &[], algo);
            let mut tampered = original.clone();
            let results = tampered.children_mut().remove(5);
            tampered.children_mut()[4].children_mut().push(results);
            log.push("move Results under Measurements".to_owned());
            (manifest, tampered, vec![4, 2])
        }
        Scenario::Copy => {
            log.push(format!("sign {TARGET} with context {CONTEXT}, sealed at {SIGNED_AT}"));
            let manifest = sign(&original, &[CONTEXT], algo);
            let mut tampered = original.clone();
            tampered.set_attribute("created", COPIED_AT);
            log.push(format!("copy into an identical document created at {COPIED_AT}"));
            (manifest, tampered, vec![5])
        }
        Scenario::ContextSwap => {
            log.push(format!("sign {TARGET} with context {CONTEXT}, sealed at {SIGNED_AT}"));
            let manifest = sign(&original, &[CONTEXT], algo);
            let mut tampered = original.clone();
            let measurements = &mut tampered.children_mut()[4];
            *measurements = XmlNode::new("Measurements")
                .with_child(XmlNode::new("Description").with_value("A different measurement technique"))
                .with_child(XmlNode::new("Table").with_value("Designed figure used in measurement"));
            log.push("replace Measurements with a different measurement".to_owned());
            (manifest, tampered, vec![5])
        }
    };

    let mut counter = HashCounter::new();
    let before = dom_hash_digest(original.descendant(&[5]).expect("Results"), algo, &mut counter);
    let after = dom_hash_digest(tampered.descendant(&moved_results).expect("signed element"), algo, &mut counter);
    let dom_hash_unchanged = before == after;
    log.push(format!(
        "DOM-HASH of signed element: {} -> {} ({})",
        short(&before.to_hex()),
        short(&after.to_hex()),
        if dom_hash_unchanged { "still verifies" } else { "changed" }
    ));

    let original_verdict = verify(&original, &manifest);
    let tampered_verdict = verify(&tampered, &manifest);
    log.push(format!("CSR verify original: {original_verdict}"));
    log.push(format!("CSR verify tampered: {tampered_verdict}"));

    DemoReport {
        scenario,
        dom_hash_unchanged,
        original: original_verdict,
        tampered: tampered_verdict,
        transcript: log,
    }
}

fn short(hex: &str) -> &str {
    &hex[..12.min(hex.len())]
}
