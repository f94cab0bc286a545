use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use super::{is_xml_name, XmlNode};

/// Failure to turn input bytes into a canonical tree.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("malformed XML at byte {offset}: {message}")]
    Malformed { offset: u64, message: String },
    #[error("duplicate attribute `{attribute}` on element `{element}` at byte {offset}")]
    DuplicateAttribute {
        offset: u64,
        element: String,
        attribute: String,
    },
}

impl ParseError {
    pub fn offset(&self) -> u64 {
        match self {
            ParseError::Malformed { offset, .. } | ParseError::DuplicateAttribute { offset, .. } => *offset,
        }
    }

    fn malformed(offset: u64, message: impl Into<String>) -> Self {
        ParseError::Malformed {
            offset,
            message: message.into(),
        }
    }
}

#[derive(Default)]
struct Open {
    name: String,
    attributes: Vec<(String, String)>,
    value: String,
    raw_text: String,
    pi: String,
    children: Vec<XmlNode>,
}

impl Open {
    fn push_text(&mut self, text: &str) {
        self.raw_text.push_str(text);
        if !text.chars().all(is_xml_whitespace) {
            self.value.push_str(text);
        }
    }

    fn close(self) -> XmlNode {
        XmlNode::from_parts(self.name, self.value, self.raw_text, self.pi, self.attributes, self.children)
    }
}

fn is_xml_whitespace(c: char) -> bool {
    matches!(c, ' ' | '\t' | '\r' | '\n')
}

/// Parses a UTF-8 document with a single root element into its canonical tree.
///
/// Whitespace-only text nodes are dropped from `value` (but kept in
/// `raw_text`); all other text is preserved verbatim. Comments, the document
/// type declaration, and namespace declarations are discarded.
pub fn parse_document(xml: &[u8]) -> Result<XmlNode, ParseError> {
    let text = std::str::from_utf8(xml).map_err(|e| ParseError::malformed(e.valid_up_to() as u64, "input is not valid UTF-8"))?;
    let mut reader = Reader::from_str(text);
    reader.config_mut().check_end_names = true;
    reader.config_mut().trim_text(false);

    let mut stack: Vec<Open> = Vec::new();
    let mut root: Option<XmlNode> = None;

    loop {
        let start = reader.buffer_position();
        let event = reader
            .read_event()
            .map_err(|e| ParseError::malformed(reader.error_position(), e.to_string()))?;
        match event {
            Event::Start(e) => {
                if root.is_some() && stack.is_empty() {
                    return Err(ParseError::malformed(start, "content after the root element"));
                }
                stack.push(open_element(&e, start)?);
            }
            Event::Empty(e) => {
                if root.is_some() && stack.is_empty() {
                    return Err(ParseError::malformed(start, "content after the root element"));
                }
                let node = open_element(&e, start)?.close();
                match stack.last_mut() {
                    Some(parent) => parent.children.push(node),
                    None => root = Some(node),
                }
            }
            Event::End(_) => {
                let node = stack
                    .pop()
                    .ok_or_else(|| ParseError::malformed(start, "unexpected end tag"))?
                    .close();
                match stack.last_mut() {
                    Some(parent) => parent.children.push(node),
                    None => root = Some(node),
                }
            }
            Event::Text(t) => {
                let unescaped = t
                    .unescape()
                    .map_err(|e| ParseError::malformed(start, e.to_string()))?;
                match stack.last_mut() {
                    Some(open) => open.push_text(&unescaped),
                    None if unescaped.chars().all(is_xml_whitespace) => {}
                    None => return Err(ParseError::malformed(start, "text outside the root element")),
                }
            }
            Event::CData(t) => {
                let raw = std::str::from_utf8(&t)
                    .map_err(|_| ParseError::malformed(start, "CDATA is not valid UTF-8"))?
                    .to_owned();
                match stack.last_mut() {
                    Some(open) => open.push_text(&raw),
                    None => return Err(ParseError::malformed(start, "CDATA outside the root element")),
                }
            }
            Event::PI(pi) => {
                if let Some(open) = stack.last_mut() {
                    let raw = std::str::from_utf8(&pi)
                        .map_err(|_| ParseError::malformed(start, "processing instruction is not valid UTF-8"))?;
                    if !open.pi.is_empty() {
                        open.pi.push('\n');
                    }
                    open.pi.push_str(raw.trim());
                }
            }
            Event::Comment(_) | Event::Decl(_) | Event::DocType(_) => {}
            Event::Eof => break,
        }
    }

    if let Some(open) = stack.last() {
        return Err(ParseError::malformed(
            reader.buffer_position(),
            format!("unclosed element `{}`", open.name),
        ));
    }
    root.ok_or_else(|| ParseError::malformed(0, "document has no root element"))
}

fn open_element(e: &BytesStart<'_>, offset: u64) -> Result<Open, ParseError> {
    let name = std::str::from_utf8(e.name().as_ref())
        .map_err(|_| ParseError::malformed(offset, "element name is not valid UTF-8"))?
        .to_owned();
    if !is_xml_name(&name) {
        return Err(ParseError::malformed(offset, format!("invalid element name `{name}`")));
    }

    let mut attributes = Vec::new();
    for attr in e.attributes().with_checks(false) {
        let attr = attr.map_err(|err| ParseError::malformed(offset, err.to_string()))?;
        let key = std::str::from_utf8(attr.key.as_ref())
            .map_err(|_| ParseError::malformed(offset, "attribute name is not valid UTF-8"))?
            .to_owned();
        if key == "xmlns" || key.starts_with("xmlns:") {
            continue;
        }
        if !is_xml_name(&key) {
            return Err(ParseError::malformed(offset, format!("invalid attribute name `{key}`")));
        }
        let value = attr
            .unescape_value()
            .map_err(|err| ParseError::malformed(offset, err.to_string()))?
            .into_owned();
        attributes.push((key, value));
    }
    attributes.sort_by(|a, b| a.0.cmp(&b.0));
    if let Some(w) = attributes.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(ParseError::DuplicateAttribute {
            offset,
            element: name,
            attribute: w[0].0.clone(),
        });
    }

    Ok(Open {
        name,
        attributes,
        ..Open::default()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::CERTIFICATE_XML;

    #[test]
    fn certificate_root() {
        let root = parse_document(CERTIFICATE_XML.as_bytes()).unwrap();
        assert_eq!(root.name(), "Certificate");
        let names: Vec<_> = root.children().iter().map(XmlNode::name).collect();
        assert_eq!(
            names,
            ["Title", "ReferenceNumber", "Description", "Data", "Measurements", "Results"]
        );
        assert_eq!(root.value(), "");
    }

    #[test]
    fn minimal_document() {
        let root = parse_document(b"<a/>").unwrap();
        assert_eq!(root, XmlNode::new("a"));
    }

    #[test]
    fn siblings_keep_document_order() {
        let root = parse_document(b"<a><b>1</b><b>2</b></a>").unwrap();
        assert_eq!(root.children().len(), 2);
        assert_eq!(root.children()[0].value(), "1");
        assert_eq!(root.children()[1].value(), "2");
    }

    #[test]
    fn whitespace_only_text_is_dropped_from_value() {
        let root = parse_document(b"<a>\n  <b> x </b>\n</a>").unwrap();
        assert_eq!(root.value(), "");
        assert_eq!(root.raw_text(), "\n  \n");
        assert_eq!(root.children()[0].value(), " x ");
    }

    #[test]
    fn mixed_content_concatenates_direct_text() {
        let root = parse_document(b"<a>x<b>inner</b>y<!-- c -->z</a>").unwrap();
        assert_eq!(root.value(), "xyz");
    }

    #[test]
    fn entities_and_cdata() {
        let root = parse_document(b"<a t='&lt;&amp;&#65;'>&quot;q&apos;<![CDATA[<raw>]]></a>").unwrap();
        assert_eq!(root.attribute("t"), Some("<&A"));
        assert_eq!(root.value(), "\"q'<raw>");
    }

    #[test]
    fn comments_and_pis_are_not_canonical() {
        let plain = parse_document(b"<a><b/></a>").unwrap();
        let noisy = parse_document(b"<?xml version='1.0'?><!-- c --><a><?style x?><!--d--><b/></a>").unwrap();
        assert_eq!(plain.canonical_bytes(), noisy.canonical_bytes());
        assert_eq!(noisy.pi(), "style x");
        assert_eq!(plain.pi(), "");
    }

    #[test]
    fn namespace_declarations_are_dropped() {
        let root = parse_document(br#"<a xmlns="urn:x" xmlns:p="urn:p" p:k="v"/>"#).unwrap();
        assert_eq!(root.attributes(), &[("p:k".to_owned(), "v".to_owned())]);
    }

    #[test]
    fn duplicate_attribute_is_rejected() {
        let err = parse_document(br#"<a><b x="1" x="2"/></a>"#).unwrap_err();
        assert!(matches!(err, ParseError::DuplicateAttribute { ref attribute, offset: 3, .. } if attribute == "x"), "{err:?}");
    }

    #[test]
    fn malformed_inputs() {
        for bad in [
            &b""[..],
            b"   ",
            b"<a>",
            b"<a></b>",
            b"<a/><b/>",
            b"text<a/>",
            b"<a>&unknown;</a>",
            b"<a></a></a>",
            b"\xff<a/>",
        ] {
            let err = parse_document(bad).unwrap_err();
            assert!(matches!(err, ParseError::Malformed { .. }), "{bad:?}: {err:?}");
        }
    }

    #[test]
    fn mismatched_end_tag_offset() {
        let err = parse_document(b"<a><b></c></a>").unwrap_err();
        assert_eq!(err.offset(), 6);
    }

    #[test]
    fn parse_is_deterministic() {
        let a = parse_document(CERTIFICATE_XML.as_bytes()).unwrap();
        let b = parse_document(CERTIFICATE_XML.as_bytes()).unwrap();
        assert_eq!(a, b);
    }
}
