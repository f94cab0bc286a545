//! Canonical ordered XML tree.
//!
//! A parsed document is reduced to element nodes only. Each node carries its
//! name, the concatenation of its direct text children, a sorted attribute
//! list, and its element children in document order. Comments, processing
//! instructions and namespace declarations do not take part in the canonical
//! model; processing-instruction text and unnormalized text are kept on the
//! side for the DOM-HASH and XHASH baselines.

mod parse;
mod selector;
mod write;

pub use parse::{parse_document, ParseError};
pub use selector::{LookupError, NodeSelector, Resolved, Step};

use std::fmt;

/// An element node of the canonical tree.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct XmlNode {
    name: String,
    value: String,
    attributes: Vec<(String, String)>,
    children: Vec<XmlNode>,
    raw_text: String,
    pi: String,
}

impl XmlNode {
    /// Creates an element with no value, attributes or children.
    ///
    /// Panics if `name` is not a well-formed XML name.
    pub fn new(name: impl Into<String>) -> Self {
        let name = name.into();
        assert!(is_xml_name(&name), "`{name}` is not a valid XML name");
        XmlNode {
            name,
            value: String::new(),
            attributes: Vec::new(),
            children: Vec::new(),
            raw_text: String::new(),
            pi: String::new(),
        }
    }

    pub fn with_value(mut self, value: impl Into<String>) -> Self {
        self.set_value(value);
        self
    }

    pub fn with_attribute(mut self, name: impl Into<String>, value: impl Into<String>) -> Self {
        self.set_attribute(name, value);
        self
    }

    pub fn with_child(mut self, child: XmlNode) -> Self {
        self.children.push(child);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Normalized direct text content.
    pub fn value(&self) -> &str {
        &self.value
    }

    /// Direct text content with whitespace-only text nodes kept verbatim.
    pub fn raw_text(&self) -> &str {
        &self.raw_text
    }

    /// Concatenated processing instructions found directly inside this element.
    pub fn pi(&self) -> &str {
        &self.pi
    }

    /// Attributes sorted by name.
    pub fn attributes(&self) -> &[(String, String)] {
        &self.attributes
    }

    pub fn attribute(&self, name: &str) -> Option<&str> {
        self.attributes
            .binary_search_by(|(n, _)| n.as_str().cmp(name))
            .ok()
            .map(|i| self.attributes[i].1.as_str())
    }

    pub fn children(&self) -> &[XmlNode] {
        &self.children
    }

    pub fn children_mut(&mut self) -> &mut Vec<XmlNode> {
        &mut self.children
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    /// Replaces the text content. Both the normalized and raw views are set.
    pub fn set_value(&mut self, value: impl Into<String>) {
        let value = value.into();
        self.raw_text = value.clone();
        self.value = value;
    }

    /// Inserts or replaces an attribute, keeping the list sorted.
    pub fn set_attribute(&mut self, name: impl Into<String>, value: impl Into<String>) {
        let name = name.into();
        let value = value.into();
        match self.attributes.binary_search_by(|(n, _)| n.as_str().cmp(&name)) {
            Ok(i) => self.attributes[i].1 = value,
            Err(i) => self.attributes.insert(i, (name, value)),
        }
    }

    pub fn remove_attribute(&mut self, name: &str) -> Option<String> {
        let i = self
            .attributes
            .binary_search_by(|(n, _)| n.as_str().cmp(name))
            .ok()?;
        Some(self.attributes.remove(i).1)
    }

    pub fn set_name(&mut self, name: impl Into<String>) {
        let name = name.into();
        assert!(is_xml_name(&name), "`{name}` is not a valid XML name");
        self.name = name;
    }

    /// Number of element nodes in this subtree, including `self`.
    pub fn element_count(&self) -> usize {
        1 + self.children.iter().map(XmlNode::element_count).sum::<usize>()
    }

    /// Number of elements in this subtree that have at least one child.
    pub fn internal_count(&self) -> usize {
        if self.is_leaf() {
            0
        } else {
            1 + self.children.iter().map(XmlNode::internal_count).sum::<usize>()
        }
    }

    /// Total number of attributes in this subtree.
    pub fn attribute_count(&self) -> usize {
        self.attributes.len() + self.children.iter().map(XmlNode::attribute_count).sum::<usize>()
    }

    /// Maximum number of levels below and including this node.
    pub fn depth(&self) -> usize {
        1 + self.children.iter().map(XmlNode::depth).max().unwrap_or(0)
    }

    /// Node reached by following child indices from `self`.
    pub fn descendant(&self, index_path: &[usize]) -> Option<&XmlNode> {
        index_path
            .iter()
            .try_fold(self, |node, &i| node.children.get(i))
    }

    pub fn descendant_mut(&mut self, index_path: &[usize]) -> Option<&mut XmlNode> {
        index_path
            .iter()
            .try_fold(self, |node, &i| node.children.get_mut(i))
    }

    /// Child-index paths of every node in document order (the root is `[]`).
    pub fn index_paths(&self) -> Vec<Vec<usize>> {
        fn walk(node: &XmlNode, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            out.push(prefix.clone());
            for (i, child) in node.children.iter().enumerate() {
                prefix.push(i);
                walk(child, prefix, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        walk(self, &mut Vec::new(), &mut out);
        out
    }

    /// Length-prefixed content layout: `frame(name) ++ frame(value) ++
    /// frame(attr_1) ++ ...` where each attribute is `name 0x00 value`.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(
            16 + self.name.len()
                + self.value.len()
                + self
                    .attributes
                    .iter()
                    .map(|(n, v)| n.len() + v.len() + 5)
                    .sum::<usize>(),
        );
        push_frame(&mut out, self.name.as_bytes());
        push_frame(&mut out, self.value.as_bytes());
        let mut attr = Vec::new();
        for (name, value) in &self.attributes {
            attr.clear();
            attr.extend_from_slice(name.as_bytes());
            attr.push(0);
            attr.extend_from_slice(value.as_bytes());
            push_frame(&mut out, &attr);
        }
        out
    }

    /// Serializes the subtree as compact XML text.
    pub fn to_xml(&self) -> String {
        write::to_xml(self)
    }

    pub(crate) fn from_parts(
        name: String,
        value: String,
        raw_text: String,
        pi: String,
        attributes: Vec<(String, String)>,
        children: Vec<XmlNode>,
    ) -> Self {
        XmlNode {
            name,
            value,
            attributes,
            children,
            raw_text,
            pi,
        }
    }
}

/// Appends a 4-byte big-endian length followed by `bytes`.
pub fn push_frame(out: &mut Vec<u8>, bytes: &[u8]) {
    let len = u32::try_from(bytes.len()).expect("framed item exceeds 4 GiB");
    out.extend_from_slice(&len.to_be_bytes());
    out.extend_from_slice(bytes);
}

/// Concatenates the framed form of each item.
pub fn frame_all<'a>(items: impl IntoIterator<Item = &'a [u8]>) -> Vec<u8> {
    let mut out = Vec::new();
    for item in items {
        push_frame(&mut out, item);
    }
    out
}

/// Position of a node: its level (root = 1) and 1-based order among its
/// element siblings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeLabel {
    pub level: u32,
    pub order: u32,
}

impl NodeLabel {
    pub const ROOT: NodeLabel = NodeLabel { level: 1, order: 1 };
}

impl fmt::Display for NodeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.level, self.order)
    }
}

/// Labelled path from the document root to a node.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NodePath {
    segments: Vec<(String, NodeLabel)>,
    rendered: String,
}

impl NodePath {
    /// Builds the path along `index_path` starting at `root`.
    pub fn along(root: &XmlNode, index_path: &[usize]) -> Option<NodePath> {
        let mut segments = Vec::with_capacity(index_path.len() + 1);
        segments.push((root.name.clone(), NodeLabel::ROOT));
        let mut node = root;
        for (depth, &i) in index_path.iter().enumerate() {
            node = node.children.get(i)?;
            segments.push((
                node.name.clone(),
                NodeLabel {
                    level: depth as u32 + 2,
                    order: i as u32 + 1,
                },
            ));
        }
        Some(NodePath::from_segments(segments))
    }

    fn from_segments(segments: Vec<(String, NodeLabel)>) -> NodePath {
        let mut rendered = String::new();
        for (i, (name, label)) in segments.iter().enumerate() {
            if i > 0 {
                rendered.push('/');
            }
            rendered.push_str(name);
            rendered.push('[');
            rendered.push_str(&label.to_string());
            rendered.push(']');
        }
        NodePath { segments, rendered }
    }

    pub fn segments(&self) -> &[(String, NodeLabel)] {
        &self.segments
    }

    /// `Name[level.order]` segments joined by `/`.
    pub fn rendered(&self) -> &str {
        &self.rendered
    }

    pub fn label(&self) -> NodeLabel {
        self.segments.last().expect("path has a root segment").1
    }
}

impl fmt::Display for NodePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.rendered)
    }
}

/// Label of the node addressed by `target`.
pub fn node_label(root: &XmlNode, target: &NodeSelector) -> Result<NodeLabel, LookupError> {
    Ok(node_path(root, target)?.label())
}

/// Labelled root-to-node path of the node addressed by `target`.
pub fn node_path(root: &XmlNode, target: &NodeSelector) -> Result<NodePath, LookupError> {
    let resolved = target.resolve(root)?;
    Ok(NodePath::along(root, &resolved.index_path).expect("resolved path is valid"))
}

/// Resolves `selector` to a node borrowed from `root`.
pub fn select_node<'a>(root: &'a XmlNode, selector: &NodeSelector) -> Result<&'a XmlNode, LookupError> {
    Ok(selector.resolve(root)?.node)
}

fn is_name_start(c: char) -> bool {
    matches!(c,
        ':' | '_' | 'A'..='Z' | 'a'..='z'
        | '\u{C0}'..='\u{D6}' | '\u{D8}'..='\u{F6}' | '\u{F8}'..='\u{2FF}'
        | '\u{370}'..='\u{37D}' | '\u{37F}'..='\u{1FFF}' | '\u{200C}'..='\u{200D}'
        | '\u{2070}'..='\u{218F}' | '\u{2C00}'..='\u{2FEF}' | '\u{3001}'..='\u{D7FF}'
        | '\u{F900}'..='\u{FDCF}' | '\u{FDF0}'..='\u{FFFD}' | '\u{10000}'..='\u{EFFFF}')
}

fn is_name_char(c: char) -> bool {
    is_name_start(c)
        || matches!(c, '-' | '.' | '0'..='9' | '\u{B7}' | '\u{300}'..='\u{36F}' | '\u{203F}'..='\u{2040}')
}

/// Checks the XML 1.0 `Name` production.
pub fn is_xml_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if is_name_start(c) => chars.all(is_name_char),
        _ => false,
    }
}
