use std::fmt;
use std::str::FromStr;

use super::{is_xml_name, XmlNode};

/// Failure to address a node.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LookupError {
    #[error("invalid selector `{text}`: {reason}")]
    Invalid { text: String, reason: String },
    #[error("no node matches selector segment `{segment}`")]
    NoMatch { segment: String },
    #[error("selector segment `{segment}` matches more than one node")]
    Ambiguous { segment: String },
}

/// One `/Name[i]` step; `index` is 1-based among same-named siblings.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Step {
    pub name: String,
    pub index: usize,
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.index == 1 {
            write!(f, "/{}", self.name)
        } else {
            write!(f, "/{}[{}]", self.name, self.index)
        }
    }
}

/// Addresses a single element.
///
/// Either an absolute path such as `/Certificate/Results[1]/Table`, or a
/// `#value` fragment matching the unique element whose `id` attribute equals
/// `value`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum NodeSelector {
    Path(Vec<Step>),
    Id(String),
}

impl NodeSelector {
    /// Resolves against `root`, returning the node and its child-index path.
    pub fn resolve<'a>(&self, root: &'a XmlNode) -> Result<Resolved<'a>, LookupError> {
        match self {
            NodeSelector::Path(steps) => resolve_path(root, steps),
            NodeSelector::Id(id) => resolve_id(root, id),
        }
    }

    /// Shortest path selector addressing the node at `index_path`.
    pub fn for_index_path(root: &XmlNode, index_path: &[usize]) -> Option<NodeSelector> {
        let mut steps = vec![Step {
            name: root.name().to_owned(),
            index: 1,
        }];
        let mut node = root;
        for &i in index_path {
            let child = node.children().get(i)?;
            let index = 1 + node.children()[..i]
                .iter()
                .filter(|c| c.name() == child.name())
                .count();
            steps.push(Step {
                name: child.name().to_owned(),
                index,
            });
            node = child;
        }
        Some(NodeSelector::Path(steps))
    }
}

/// A resolved selector: the node and the child indices leading to it.
#[derive(Debug, Clone)]
pub struct Resolved<'a> {
    pub node: &'a XmlNode,
    pub index_path: Vec<usize>,
}

fn resolve_path<'a>(root: &'a XmlNode, steps: &[Step]) -> Result<Resolved<'a>, LookupError> {
    let (first, rest) = steps.split_first().ok_or_else(|| LookupError::NoMatch {
        segment: "/".to_owned(),
    })?;
    if first.name != root.name() || first.index != 1 {
        return Err(LookupError::NoMatch {
            segment: first.to_string(),
        });
    }
    let mut node = root;
    let mut index_path = Vec::with_capacity(rest.len());
    for step in rest {
        let (pos, child) = node
            .children()
            .iter()
            .enumerate()
            .filter(|(_, c)| c.name() == step.name)
            .nth(step.index - 1)
            .ok_or_else(|| LookupError::NoMatch {
                segment: step.to_string(),
            })?;
        index_path.push(pos);
        node = child;
    }
    Ok(Resolved { node, index_path })
}

fn resolve_id<'a>(root: &'a XmlNode, id: &str) -> Result<Resolved<'a>, LookupError> {
    let mut found: Option<Vec<usize>> = None;
    for path in root.index_paths() {
        let node = root.descendant(&path).expect("path from index_paths");
        if node.attribute("id") == Some(id) {
            if found.is_some() {
                return Err(LookupError::Ambiguous {
                    segment: format!("#{id}"),
                });
            }
            found = Some(path);
        }
    }
    let index_path = found.ok_or_else(|| LookupError::NoMatch {
        segment: format!("#{id}"),
    })?;
    let node = root.descendant(&index_path).expect("path from index_paths");
    Ok(Resolved { node, index_path })
}

impl FromStr for NodeSelector {
    type Err = LookupError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let invalid = |reason: &str| LookupError::Invalid {
            text: text.to_owned(),
            reason: reason.to_owned(),
        };
        if let Some(id) = text.strip_prefix('#') {
            if id.is_empty() || id.chars().any(char::is_whitespace) {
                return Err(invalid("empty or whitespace-bearing id fragment"));
            }
            return Ok(NodeSelector::Id(id.to_owned()));
        }
        let body = text
            .strip_prefix('/')
            .ok_or_else(|| invalid("must start with `/` or `#`"))?;
        let mut steps = Vec::new();
        for segment in body.split('/') {
            let (name, index) = match segment.find('[') {
                Some(open) => {
                    let digits = segment[open + 1..]
                        .strip_suffix(']')
                        .ok_or_else(|| invalid("unterminated `[`"))?;
                    let index: usize = digits
                        .parse()
                        .map_err(|_| invalid("index must be a positive integer"))?;
                    if index == 0 {
                        return Err(invalid("indices are 1-based"));
                    }
                    (&segment[..open], index)
                }
                None => (segment, 1),
            };
            if !is_xml_name(name) {
                return Err(invalid(&format!("`{name}` is not an element name")));
            }
            steps.push(Step {
                name: name.to_owned(),
                index,
            });
        }
        Ok(NodeSelector::Path(steps))
    }
}

impl fmt::Display for NodeSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeSelector::Path(steps) => steps.iter().try_for_each(|s| s.fmt(f)),
            NodeSelector::Id(id) => write!(f, "#{id}"),
        }
    }
}
