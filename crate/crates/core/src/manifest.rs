//! Integrity manifest: the serialized STI, CRI and digest records that a
//! verifier needs to recheck a signed node.
//!
//! ```xml
//! <?xml version="1.0" encoding="UTF-8"?>
//! <IntegrityManifest created="2009-04-10T00:00:00Z">
//!   <STI>
//!     <STIGenerate Algorithm="http://www.example.org/xmldsig-csr/#STI"/>
//!     <DigestMethod Algorithm="http://www.w3.org/2000/09/xmldsig#sha1"/>
//!     <DigestValue>...</DigestValue>
//!   </STI>
//!   <CRI>
//!     <CRIGenerate Algorithm="http://www.example.org/xmldsig-csr/#CRI"/>
//!     <RelatedNode>/Certificate/Measurements</RelatedNode>
//!     <DigestMethod Algorithm="http://www.w3.org/2000/09/xmldsig#sha1"/>
//!     <DigestValue>...</DigestValue>
//!   </CRI>
//!   <ContentDigest>
//!     <DigestMethod Algorithm="http://www.w3.org/2000/09/xmldsig#sha1"/>
//!     <DigestValue>...</DigestValue>
//!   </ContentDigest>
//!   <Reference URI="/Certificate/Results">
//!     <DigestMethod Algorithm="http://www.example.org/xmldsig-csr/#CSR"/>
//!     <DigestValue>...</DigestValue>
//!   </Reference>
//!   <Seal>
//!     <DigestMethod Algorithm="http://www.w3.org/2000/09/xmldsig#sha1"/>
//!     <DigestValue>...</DigestValue>
//!   </Seal>
//! </IntegrityManifest>
//! ```
//!
//! `CRI` is present only when a context was chosen; `created` and `Seal`
//! only when the digest was sealed. `RelatedNode` holds whitespace-separated
//! selectors so the element occurs exactly once.

use std::fmt::Write as _;

use base64::Engine as _;

use crate::csr::{ContextSet, CsrDigest};
use crate::hash::{Digest, HashAlgorithmId};
use crate::xml_tree::{parse_document, NodeSelector, ParseError, XmlNode};

pub const STI_ALGORITHM: &str = "http://www.example.org/xmldsig-csr/#STI";
pub const CRI_ALGORITHM: &str = "http://www.example.org/xmldsig-csr/#CRI";
pub const CSR_METHOD: &str = "http://www.example.org/xmldsig-csr/#CSR";

const ROOT: &str = "IntegrityManifest";
const TIMESTAMP_ATTR: &str = "created";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ManifestError {
    #[error(transparent)]
    Xml(#[from] ParseError),
    #[error("schema violation in <{element}>: {reason}")]
    Schema { element: String, reason: String },
    #[error("bad value in <{element}>: {reason}")]
    Format { element: String, reason: String },
}

impl ManifestError {
    fn format(element: &str, reason: impl Into<String>) -> Self {
        ManifestError::Format {
            element: element.to_owned(),
            reason: reason.into(),
        }
    }

    fn schema(element: &str, reason: impl Into<String>) -> Self {
        ManifestError::Schema {
            element: element.to_owned(),
            reason: reason.into(),
        }
    }
}

/// Text encoding of a `DigestValue`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DigestEncoding {
    #[default]
    Base64,
    /// Uppercase hex octets joined by `-`, e.g. `49-2A-ED`.
    HexDash,
}

impl std::str::FromStr for DigestEncoding {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "base64" => Ok(DigestEncoding::Base64),
            "hex" | "hex-dash" => Ok(DigestEncoding::HexDash),
            other => Err(format!("unknown digest encoding `{other}` (expected base64 or hex)")),
        }
    }
}

/// A digest together with the encoding it is written in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedDigest {
    pub digest: Digest,
    pub encoding: DigestEncoding,
}

impl EncodedDigest {
    pub fn new(digest: Digest, encoding: DigestEncoding) -> Self {
        EncodedDigest { digest, encoding }
    }

    pub fn encode(&self) -> String {
        encode_bytes(self.digest.as_bytes(), self.encoding)
    }

    /// Decodes either encoding: text containing `-` is hex-dash, anything
    /// else is base64. The result must be exactly `algorithm`'s width.
    pub fn decode(text: &str, algorithm: HashAlgorithmId) -> Result<Self, String> {
        let (bytes, encoding) = decode_bytes(text)?;
        let digest = Digest::from_bytes(algorithm, bytes).map_err(|e| e.to_string())?;
        Ok(EncodedDigest { digest, encoding })
    }
}

pub fn encode_bytes(bytes: &[u8], encoding: DigestEncoding) -> String {
    match encoding {
        DigestEncoding::Base64 => base64::engine::general_purpose::STANDARD.encode(bytes),
        DigestEncoding::HexDash => {
            let mut out = String::with_capacity(bytes.len() * 3);
            for (i, b) in bytes.iter().enumerate() {
                if i > 0 {
                    out.push('-');
                }
                write!(out, "{b:02X}").expect("write to String");
            }
            out
        }
    }
}

pub fn decode_bytes(text: &str) -> Result<(Vec<u8>, DigestEncoding), String> {
    let compact: String = text.chars().filter(|c| !c.is_ascii_whitespace()).collect();
    if compact.is_empty() {
        return Err("empty digest value".to_owned());
    }
    if compact.contains('-') {
        let bytes = compact
            .split('-')
            .map(|pair| {
                if pair.len() != 2 {
                    return Err(format!("hex group `{pair}` is not two digits"));
                }
                u8::from_str_radix(pair, 16).map_err(|_| format!("`{pair}` is not hexadecimal"))
            })
            .collect::<Result<Vec<u8>, String>>()?;
        Ok((bytes, DigestEncoding::HexDash))
    } else {
        let bytes = base64::engine::general_purpose::STANDARD
            .decode(compact.as_bytes())
            .map_err(|e| format!("invalid base64: {e}"))?;
        Ok((bytes, DigestEncoding::Base64))
    }
}

/// Structure integrity record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StiRecord {
    pub generate_algorithm: Option<String>,
    pub digest_method: Option<String>,
    pub digest_value: EncodedDigest,
}

/// Context referential integrity record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CriRecord {
    pub generate_algorithm: Option<String>,
    pub related_nodes: Vec<NodeSelector>,
    pub digest_method: Option<String>,
    pub digest_value: EncodedDigest,
}

/// Timestamp seal record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SealRecord {
    pub timestamp: String,
    pub digest: EncodedDigest,
}

/// Everything needed to verify one signed node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntegrityManifest {
    pub target: NodeSelector,
    pub algorithm: HashAlgorithmId,
    pub sti: StiRecord,
    pub cri: Option<CriRecord>,
    pub content_digest: EncodedDigest,
    /// Combined CSR value carried in the `Reference` element.
    pub csr: EncodedDigest,
    pub seal: Option<SealRecord>,
}

impl IntegrityManifest {
    pub fn from_digest(digest: &CsrDigest, target: &NodeSelector, context: &ContextSet, encoding: DigestEncoding) -> Self {
        let algorithm = digest.algorithm();
        let enc = |d: &Digest| EncodedDigest::new(d.clone(), encoding);
        let cri = if context.is_empty() {
            None
        } else {
            Some(CriRecord {
                generate_algorithm: Some(CRI_ALGORITHM.to_owned()),
                related_nodes: context.selectors().to_vec(),
                digest_method: Some(algorithm.uri().to_owned()),
                digest_value: EncodedDigest::new(
                    Digest::from_bytes(algorithm, digest.cri.clone()).expect("CRI has algorithm width"),
                    encoding,
                ),
            })
        };
        let seal = match (&digest.timestamp, &digest.seal) {
            (Some(timestamp), Some(seal)) => Some(SealRecord {
                timestamp: timestamp.clone(),
                digest: enc(seal),
            }),
            _ => None,
        };
        IntegrityManifest {
            target: target.clone(),
            algorithm,
            sti: StiRecord {
                generate_algorithm: Some(STI_ALGORITHM.to_owned()),
                digest_method: Some(algorithm.uri().to_owned()),
                digest_value: enc(&digest.st),
            },
            cri,
            content_digest: enc(&digest.ci),
            csr: enc(&digest.csr),
            seal,
        }
    }

    /// Related-node selectors, empty when no context was chosen.
    pub fn context_selectors(&self) -> &[NodeSelector] {
        self.cri.as_ref().map_or(&[], |c| &c.related_nodes)
    }

    /// Serializes to the manifest file format.
    pub fn to_xml(&self) -> String {
        let mut out = String::new();
        out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        out.push('<');
        out.push_str(ROOT);
        if let Some(seal) = &self.seal {
            write!(out, " {TIMESTAMP_ATTR}=\"{}\"", escape(&seal.timestamp)).unwrap();
        }
        out.push_str(">\n");

        out.push_str("  <STI>\n");
        algorithm_element(&mut out, "STIGenerate", self.sti.generate_algorithm.as_deref());
        algorithm_element(&mut out, "DigestMethod", self.sti.digest_method.as_deref());
        value_element(&mut out, "DigestValue", &self.sti.digest_value.encode());
        out.push_str("  </STI>\n");

        if let Some(cri) = &self.cri {
            out.push_str("  <CRI>\n");
            algorithm_element(&mut out, "CRIGenerate", cri.generate_algorithm.as_deref());
            let related: Vec<String> = cri.related_nodes.iter().map(ToString::to_string).collect();
            value_element(&mut out, "RelatedNode", &related.join(" "));
            algorithm_element(&mut out, "DigestMethod", cri.digest_method.as_deref());
            value_element(&mut out, "DigestValue", &cri.digest_value.encode());
            out.push_str("  </CRI>\n");
        }

        out.push_str("  <ContentDigest>\n");
        algorithm_element(&mut out, "DigestMethod", Some(self.algorithm.uri()));
        value_element(&mut out, "DigestValue", &self.content_digest.encode());
        out.push_str("  </ContentDigest>\n");

        writeln!(out, "  <Reference URI=\"{}\">", escape(&self.target.to_string())).unwrap();
        algorithm_element(&mut out, "DigestMethod", Some(CSR_METHOD));
        value_element(&mut out, "DigestValue", &self.csr.encode());
        out.push_str("  </Reference>\n");

        if let Some(seal) = &self.seal {
            out.push_str("  <Seal>\n");
            algorithm_element(&mut out, "DigestMethod", Some(self.algorithm.uri()));
            value_element(&mut out, "DigestValue", &seal.digest.encode());
            out.push_str("  </Seal>\n");
        }

        out.push_str("</");
        out.push_str(ROOT);
        out.push_str(">\n");
        out
    }
}

fn algorithm_element(out: &mut String, name: &str, algorithm: Option<&str>) {
    match algorithm {
        Some(uri) => writeln!(out, "    <{name} Algorithm=\"{}\"/>", escape(uri)).unwrap(),
        None => writeln!(out, "    <{name}/>").unwrap(),
    }
}

fn value_element(out: &mut String, name: &str, value: &str) {
    writeln!(out, "    <{name}>{}</{name}>", escape(value)).unwrap();
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Builds the manifest for `digest` and serializes it.
pub fn emit_manifest(digest: &CsrDigest, target: &NodeSelector, context: &ContextSet, encoding: DigestEncoding) -> Vec<u8> {
    IntegrityManifest::from_digest(digest, target, context, encoding)
        .to_xml()
        .into_bytes()
}

/// Parses a manifest file.
pub fn parse_manifest(xml: &[u8]) -> Result<IntegrityManifest, ManifestError> {
    let root = parse_document(xml)?;
    if root.name() != ROOT {
        return Err(ManifestError::schema(root.name(), format!("expected <{ROOT}> as document element")));
    }
    for (name, _) in root.attributes() {
        if name != TIMESTAMP_ATTR {
            return Err(ManifestError::schema(ROOT, format!("unexpected attribute `{name}`")));
        }
    }

    let mut children = root.children().iter().peekable();
    let mut take = |name: &str, required: bool| -> Result<Option<&XmlNode>, ManifestError> {
        match children.peek() {
            Some(c) if c.name() == name => Ok(children.next()),
            Some(c) if required => Err(ManifestError::schema(c.name(), format!("expected <{name}>"))),
            None if required => Err(ManifestError::schema(ROOT, format!("missing <{name}>"))),
            _ => Ok(None),
        }
    };
    let sti_el = take("STI", true)?.expect("required");
    let cri_el = take("CRI", false)?;
    let content_el = take("ContentDigest", true)?.expect("required");
    let reference_el = take("Reference", true)?.expect("required");
    let seal_el = take("Seal", false)?;
    if let Some(extra) = children.next() {
        return Err(ManifestError::schema(extra.name(), "unexpected element"));
    }

    let sti = sti_record(sti_el)?;
    let algorithm = algorithm_of("STI", sti.digest_method.as_deref())?;
    let cri = cri_el.map(cri_record).transpose()?;
    if let Some(cri) = &cri {
        if algorithm_of("CRI", cri.digest_method.as_deref())? != algorithm {
            return Err(ManifestError::format("CRI", "DigestMethod disagrees with STI"));
        }
    }

    let content_digest = digest_container(content_el, "ContentDigest", algorithm, None)?;
    let target_text = reference_el
        .attribute("URI")
        .ok_or_else(|| ManifestError::schema("Reference", "missing URI attribute"))?;
    let target: NodeSelector = target_text
        .parse()
        .map_err(|e| ManifestError::format("Reference", format!("{e}")))?;
    let csr = digest_container(reference_el, "Reference", algorithm, Some(CSR_METHOD))?;

    let seal = match (seal_el, root.attribute(TIMESTAMP_ATTR)) {
        (Some(el), Some(t)) => Some(SealRecord {
            timestamp: t.to_owned(),
            digest: digest_container(el, "Seal", algorithm, None)?,
        }),
        (None, None) => None,
        (Some(_), None) => return Err(ManifestError::schema("Seal", "sealed manifest lacks a `created` timestamp")),
        (None, Some(_)) => return Err(ManifestError::schema(ROOT, "`created` timestamp without <Seal>")),
    };

    Ok(IntegrityManifest {
        target,
        algorithm,
        sti,
        cri,
        content_digest,
        csr,
        seal,
    })
}

/// A `DigestMethod` + `DigestValue` pair inside `name`.
fn digest_container(
    el: &XmlNode,
    name: &str,
    algorithm: HashAlgorithmId,
    method: Option<&str>,
) -> Result<EncodedDigest, ManifestError> {
    let allowed: &[&str] = if name == "Reference" { &["URI"] } else { &[] };
    if let Some((a, _)) = el.attributes().iter().find(|(a, _)| !allowed.contains(&a.as_str())) {
        return Err(ManifestError::schema(name, format!("unexpected attribute `{a}`")));
    }
    let names: Vec<&str> = el.children().iter().map(XmlNode::name).collect();
    if names != ["DigestMethod", "DigestValue"] {
        return Err(ManifestError::schema(name, "expected DigestMethod followed by DigestValue"));
    }
    let declared = el.children()[0].attribute("Algorithm");
    match method {
        Some(expected) if declared != Some(expected) => {
            return Err(ManifestError::format(name, format!("DigestMethod must be {expected}")));
        }
        None if algorithm_of(name, declared)? != algorithm => {
            return Err(ManifestError::format(name, "DigestMethod disagrees with STI"));
        }
        _ => {}
    }
    EncodedDigest::decode(el.children()[1].value(), algorithm).map_err(|e| ManifestError::format("DigestValue", e))
}

/// Hash algorithm named by a `DigestMethod`; SHA-1 when unspecified.
fn algorithm_of(element: &str, uri: Option<&str>) -> Result<HashAlgorithmId, ManifestError> {
    match uri {
        None => Ok(HashAlgorithmId::Sha1),
        Some(uri) => HashAlgorithmId::from_uri(uri)
            .ok_or_else(|| ManifestError::format(element, format!("unsupported DigestMethod `{uri}`"))),
    }
}

/// Which record schema to check against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemaKind {
    Sti,
    Cri,
}

impl SchemaKind {
    fn root(self) -> &'static str {
        match self {
            SchemaKind::Sti => "STI",
            SchemaKind::Cri => "CRI",
        }
    }

    fn sequence(self) -> &'static [&'static str] {
        match self {
            SchemaKind::Sti => &["STIGenerate", "DigestMethod", "DigestValue"],
            SchemaKind::Cri => &["CRIGenerate", "RelatedNode", "DigestMethod", "DigestValue"],
        }
    }
}

/// Reason an element does not conform to its record schema.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("<{element}>: {reason}")]
pub struct SchemaViolation {
    pub element: String,
    pub reason: String,
}

fn violation(element: &str, reason: impl Into<String>) -> SchemaViolation {
    SchemaViolation {
        element: element.to_owned(),
        reason: reason.into(),
    }
}

/// Checks an STI or CRI document against its record schema.
pub fn validate_schema(xml: &[u8], which: SchemaKind) -> Result<(), SchemaViolation> {
    let root = parse_document(xml).map_err(|e| violation(which.root(), e.to_string()))?;
    validate_element(&root, which)
}

/// Checks an already-parsed STI or CRI element against its record schema.
///
/// The record elements carry no attributes other than an informational
/// `name`; `*Generate` and `DigestMethod` are empty with an optional
/// `Algorithm` URI; `DigestValue` and `RelatedNode` are plain text.
pub fn validate_element(el: &XmlNode, which: SchemaKind) -> Result<(), SchemaViolation> {
    if el.name() != which.root() {
        return Err(violation(el.name(), format!("expected <{}>", which.root())));
    }
    if let Some((a, _)) = el.attributes().iter().find(|(a, _)| a != "name") {
        return Err(violation(el.name(), format!("unexpected attribute `{a}`")));
    }
    let expected = which.sequence();
    let actual: Vec<&str> = el.children().iter().map(XmlNode::name).collect();
    if actual != expected {
        let at = actual
            .iter()
            .zip(expected)
            .position(|(a, e)| a != e)
            .unwrap_or(actual.len().min(expected.len()));
        let element = actual.get(at).copied().unwrap_or(which.root());
        let reason = match expected.get(at) {
            Some(e) => format!("expected <{e}> at position {}", at + 1),
            None => "unexpected trailing element".to_owned(),
        };
        return Err(violation(element, reason));
    }
    for child in el.children() {
        if !child.children().is_empty() {
            return Err(violation(child.name(), "must not contain elements"));
        }
        match child.name() {
            "STIGenerate" | "CRIGenerate" | "DigestMethod" => {
                if let Some((a, _)) = child.attributes().iter().find(|(a, _)| a != "Algorithm") {
                    return Err(violation(child.name(), format!("unexpected attribute `{a}`")));
                }
                if let Some(uri) = child.attribute("Algorithm") {
                    if uri.is_empty() || uri.chars().any(char::is_whitespace) {
                        return Err(violation(child.name(), "Algorithm is not a URI"));
                    }
                }
                if !child.value().is_empty() {
                    return Err(violation(child.name(), "must be empty"));
                }
            }
            _ => {
                if let Some((a, _)) = child.attributes().first() {
                    return Err(violation(child.name(), format!("unexpected attribute `{a}`")));
                }
            }
        }
    }
    Ok(())
}

fn schema_checked(el: &XmlNode, which: SchemaKind) -> Result<(), ManifestError> {
    validate_element(el, which).map_err(|v| ManifestError::Schema {
        element: v.element,
        reason: v.reason,
    })
}

fn sti_record(el: &XmlNode) -> Result<StiRecord, ManifestError> {
    schema_checked(el, SchemaKind::Sti)?;
    let c = el.children();
    let digest_method = c[1].attribute("Algorithm").map(str::to_owned);
    let algorithm = algorithm_of("DigestMethod", digest_method.as_deref())?;
    Ok(StiRecord {
        generate_algorithm: c[0].attribute("Algorithm").map(str::to_owned),
        digest_value: EncodedDigest::decode(c[2].value(), algorithm)
            .map_err(|e| ManifestError::format("DigestValue", e))?,
        digest_method,
    })
}

fn cri_record(el: &XmlNode) -> Result<CriRecord, ManifestError> {
    schema_checked(el, SchemaKind::Cri)?;
    let c = el.children();
    let related_nodes = c[1]
        .value()
        .split_whitespace()
        .map(|s| s.parse::<NodeSelector>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| ManifestError::format("RelatedNode", e.to_string()))?;
    if related_nodes.is_empty() {
        return Err(ManifestError::format("RelatedNode", "no related node given"));
    }
    let digest_method = c[2].attribute("Algorithm").map(str::to_owned);
    let algorithm = algorithm_of("DigestMethod", digest_method.as_deref())?;
    Ok(CriRecord {
        generate_algorithm: c[0].attribute("Algorithm").map(str::to_owned),
        related_nodes,
        digest_value: EncodedDigest::decode(c[3].value(), algorithm)
            .map_err(|e| ManifestError::format("DigestValue", e))?,
        digest_method,
    })
}

/// Parses a standalone `<STI>` element.
pub fn parse_sti(xml: &[u8]) -> Result<StiRecord, ManifestError> {
    sti_record(&parse_document(xml)?)
}

/// Parses a standalone `<CRI>` element.
pub fn parse_cri(xml: &[u8]) -> Result<CriRecord, ManifestError> {
    cri_record(&parse_document(xml)?)
}
