//! Bundled sample documents.

/// A calibration certificate with six top-level sections. `Results` depends
/// on `Measurements` for its meaning.
pub const CERTIFICATE_XML: &str = r#"<?xml version="1.0" encoding="UTF-8"?>
<Certificate>
  <Title>Certificate of calibration</Title>
  <ReferenceNumber>TDFRG</ReferenceNumber>
  <Description>A single-mode Fibre Attention
    Standard...</Description>
  <Data>This reported expanded uncertainty is based
    on...</Data>
  <Measurements>
    <Description>The measurement of the spectral
    attenuation...</Description>
    <Table>Designed figure used in measurement</Table>
  </Measurements>
  <Results>
    <Description>The total attenuation...</Description>
    <Graph>Chart related to measurement results</Graph>
    <Table>Figure of measurement results</Table>
  </Results>
</Certificate>
"#;

/// Parsed form of [`CERTIFICATE_XML`].
pub fn certificate() -> crate::XmlNode {
    crate::parse_document(CERTIFICATE_XML.as_bytes()).expect("bundled certificate parses")
}
