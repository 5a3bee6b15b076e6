//! Rooted keyword taxonomy: XML import/export and structural queries.
//!
//! Nodes are stored in a flat arena in document (pre-order) position, with
//! depths precomputed at construction. A loaded [`Taxonomy`] is immutable.

use std::collections::HashMap;
use std::fmt;

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Identifier of a taxonomy node. Identity is by id only; labels are display text.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct KeywordId(String);

impl KeywordId {
    pub fn new(id: impl Into<String>) -> Self {
        KeywordId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for KeywordId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for KeywordId {
    fn from(s: &str) -> Self {
        KeywordId(s.to_string())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TaxonomyError {
    #[error("malformed taxonomy XML: {0}")]
    MalformedXml(String),
    #[error("duplicate keyword id `{0}`")]
    DuplicateId(String),
    #[error("taxonomy has more than one root")]
    MultipleRoots,
    #[error("taxonomy document contains no nodes")]
    EmptyDocument,
    #[error("unknown keyword `{0}`")]
    UnknownKeyword(String),
    #[error("keyword id must not be empty")]
    EmptyId,
    #[error("node `{0}` is not reachable from the root")]
    Unreachable(String),
}

impl TaxonomyError {
    pub fn name(&self) -> &'static str {
        match self {
            TaxonomyError::MalformedXml(_) => "MalformedXml",
            TaxonomyError::DuplicateId(_) => "DuplicateId",
            TaxonomyError::MultipleRoots => "MultipleRoots",
            TaxonomyError::EmptyDocument => "EmptyDocument",
            TaxonomyError::UnknownKeyword(_) => "UnknownKeyword",
            TaxonomyError::EmptyId => "EmptyId",
            TaxonomyError::Unreachable(_) => "Unreachable",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Node {
    id: KeywordId,
    label: String,
    parent: Option<usize>,
    children: Vec<usize>,
    depth: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Taxonomy {
    nodes: Vec<Node>,
    index: HashMap<KeywordId, usize>,
}

/// A node description used to build a taxonomy from parent links.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeSpec {
    pub id: KeywordId,
    pub label: String,
    pub parent: Option<KeywordId>,
}

impl NodeSpec {
    pub fn new(id: &str, label: &str, parent: Option<&str>) -> Self {
        NodeSpec {
            id: KeywordId::new(id),
            label: label.to_string(),
            parent: parent.map(KeywordId::new),
        }
    }
}

impl Taxonomy {
    /// Builds a taxonomy from parent links. Children keep the order in which
    /// they appear in `specs`.
    pub fn from_parent_links(specs: Vec<NodeSpec>) -> Result<Self, TaxonomyError> {
        if specs.is_empty() {
            return Err(TaxonomyError::EmptyDocument);
        }
        let mut index = HashMap::with_capacity(specs.len());
        for (i, s) in specs.iter().enumerate() {
            if s.id.as_str().is_empty() {
                return Err(TaxonomyError::EmptyId);
            }
            if index.insert(s.id.clone(), i).is_some() {
                return Err(TaxonomyError::DuplicateId(s.id.to_string()));
            }
        }
        let mut root = None;
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); specs.len()];
        let mut parents = vec![None; specs.len()];
        for (i, s) in specs.iter().enumerate() {
            match &s.parent {
                None => {
                    if root.replace(i).is_some() {
                        return Err(TaxonomyError::MultipleRoots);
                    }
                }
                Some(p) => {
                    let pi = *index
                        .get(p)
                        .ok_or_else(|| TaxonomyError::UnknownKeyword(p.to_string()))?;
                    children[pi].push(i);
                    parents[i] = Some(pi);
                }
            }
        }
        // A parent cycle leaves no parentless node, or leaves nodes off the root's tree.
        let root = root.ok_or_else(|| TaxonomyError::Unreachable(specs[0].id.to_string()))?;

        // Re-lay out in pre-order from the root so that arena order is document order.
        let mut order = Vec::with_capacity(specs.len());
        let mut depth = vec![usize::MAX; specs.len()];
        let mut stack = vec![root];
        depth[root] = 0;
        while let Some(n) = stack.pop() {
            order.push(n);
            for &c in children[n].iter().rev() {
                depth[c] = depth[n] + 1;
                stack.push(c);
            }
        }
        if order.len() != specs.len() {
            let lost = (0..specs.len()).find(|&i| depth[i] == usize::MAX).unwrap_or(0);
            return Err(TaxonomyError::Unreachable(specs[lost].id.to_string()));
        }
        let mut new_pos = vec![0usize; specs.len()];
        for (pos, &old) in order.iter().enumerate() {
            new_pos[old] = pos;
        }
        let mut nodes = Vec::with_capacity(specs.len());
        let mut specs: Vec<Option<NodeSpec>> = specs.into_iter().map(Some).collect();
        for &old in &order {
            let spec = specs[old].take().expect("each node visited once");
            nodes.push(Node {
                id: spec.id,
                label: spec.label,
                parent: parents[old].map(|p| new_pos[p]),
                children: children[old].iter().map(|&c| new_pos[c]).collect(),
                depth: depth[old],
            });
        }
        let index = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id.clone(), i))
            .collect();
        Ok(Taxonomy { nodes, index })
    }

    /// Parses the `<taxonomy><node id=".." label="..">...</node></taxonomy>` format.
    pub fn from_xml(document: &[u8]) -> Result<Self, TaxonomyError> {
        let text = std::str::from_utf8(document)
            .map_err(|e| TaxonomyError::MalformedXml(e.to_string()))?;
        if text.trim().is_empty() {
            return Err(TaxonomyError::EmptyDocument);
        }
        let mut reader = Reader::from_str(text);
        reader.config_mut().trim_text(true);

        let mut specs = Vec::new();
        let mut open: Vec<KeywordId> = Vec::new();
        let mut seen_taxonomy = false;
        let mut in_taxonomy = false;
        let mut top_level = 0usize;

        loop {
            let event = reader
                .read_event()
                .map_err(|e| TaxonomyError::MalformedXml(e.to_string()))?;
            match event {
                Event::Start(e) if !in_taxonomy && e.name().as_ref() == b"taxonomy" => {
                    if seen_taxonomy {
                        return Err(TaxonomyError::MalformedXml(
                            "more than one <taxonomy> element".into(),
                        ));
                    }
                    seen_taxonomy = true;
                    in_taxonomy = true;
                }
                Event::Empty(e) if !in_taxonomy && e.name().as_ref() == b"taxonomy" => {
                    if seen_taxonomy {
                        return Err(TaxonomyError::MalformedXml(
                            "more than one <taxonomy> element".into(),
                        ));
                    }
                    seen_taxonomy = true;
                }
                Event::Start(e) if in_taxonomy && e.name().as_ref() == b"node" => {
                    let spec = node_spec(&e, open.last())?;
                    if open.is_empty() {
                        top_level += 1;
                    }
                    open.push(spec.id.clone());
                    specs.push(spec);
                }
                Event::Empty(e) if in_taxonomy && e.name().as_ref() == b"node" => {
                    if open.is_empty() {
                        top_level += 1;
                    }
                    specs.push(node_spec(&e, open.last())?);
                }
                Event::End(e) if in_taxonomy && e.name().as_ref() == b"node" => {
                    open.pop();
                }
                Event::End(e) if e.name().as_ref() == b"taxonomy" => {
                    in_taxonomy = false;
                }
                Event::Start(e) | Event::Empty(e) => {
                    return Err(TaxonomyError::MalformedXml(format!(
                        "unexpected element <{}>",
                        String::from_utf8_lossy(e.name().as_ref())
                    )));
                }
                Event::Text(t) if !t.is_empty() => {
                    return Err(TaxonomyError::MalformedXml("unexpected text content".into()));
                }
                Event::Eof => break,
                _ => {}
            }
        }
        if !seen_taxonomy {
            return Err(TaxonomyError::MalformedXml("missing <taxonomy> root element".into()));
        }
        if top_level > 1 {
            return Err(TaxonomyError::MultipleRoots);
        }
        Taxonomy::from_parent_links(specs)
    }

    /// Serializes back to the import format; `from_xml(to_xml())` reproduces the taxonomy.
    pub fn to_xml(&self) -> String {
        let mut out = String::from("<taxonomy>\n");
        self.write_node(0, 1, &mut out);
        out.push_str("</taxonomy>\n");
        out
    }

    fn write_node(&self, i: usize, indent: usize, out: &mut String) {
        let n = &self.nodes[i];
        let pad = "  ".repeat(indent);
        let id = quick_xml::escape::escape(n.id.as_str());
        let label = quick_xml::escape::escape(n.label.as_str());
        if n.children.is_empty() {
            out.push_str(&format!("{pad}<node id=\"{id}\" label=\"{label}\"/>\n"));
        } else {
            out.push_str(&format!("{pad}<node id=\"{id}\" label=\"{label}\">\n"));
            for &c in &n.children {
                self.write_node(c, indent + 1, out);
            }
            out.push_str(&format!("{pad}</node>\n"));
        }
    }

    pub fn root(&self) -> &KeywordId {
        &self.nodes[0].id
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, id: &KeywordId) -> bool {
        self.index.contains_key(id)
    }

    /// Node ids in document order.
    pub fn ids(&self) -> impl Iterator<Item = &KeywordId> + '_ {
        self.nodes.iter().map(|n| &n.id)
    }

    pub fn label(&self, id: &KeywordId) -> Result<&str, TaxonomyError> {
        Ok(&self.nodes[self.position(id)?].label)
    }

    pub fn max_depth(&self) -> usize {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    /// Number of edges from the root.
    pub fn depth(&self, id: &KeywordId) -> Result<usize, TaxonomyError> {
        Ok(self.nodes[self.position(id)?].depth)
    }

    pub fn parent(&self, id: &KeywordId) -> Result<Option<&KeywordId>, TaxonomyError> {
        let n = &self.nodes[self.position(id)?];
        Ok(n.parent.map(|p| &self.nodes[p].id))
    }

    /// Direct children in document order.
    pub fn children(&self, id: &KeywordId) -> Result<Vec<&KeywordId>, TaxonomyError> {
        let n = &self.nodes[self.position(id)?];
        Ok(n.children.iter().map(|&c| &self.nodes[c].id).collect())
    }

    /// Deepest common ancestor-or-self of `a` and `b`.
    pub fn lca(&self, a: &KeywordId, b: &KeywordId) -> Result<&KeywordId, TaxonomyError> {
        let i = self.position(a)?;
        let j = self.position(b)?;
        Ok(&self.nodes[self.lca_pos(i, j)].id)
    }

    pub(crate) fn position(&self, id: &KeywordId) -> Result<usize, TaxonomyError> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| TaxonomyError::UnknownKeyword(id.to_string()))
    }

    pub(crate) fn depth_at(&self, pos: usize) -> usize {
        self.nodes[pos].depth
    }

    pub(crate) fn parent_at(&self, pos: usize) -> Option<usize> {
        self.nodes[pos].parent
    }

    pub(crate) fn children_at(&self, pos: usize) -> &[usize] {
        &self.nodes[pos].children
    }

    pub(crate) fn id_at(&self, pos: usize) -> &KeywordId {
        &self.nodes[pos].id
    }

    pub(crate) fn lca_pos(&self, mut i: usize, mut j: usize) -> usize {
        while self.nodes[i].depth > self.nodes[j].depth {
            i = self.nodes[i].parent.expect("non-root has a parent");
        }
        while self.nodes[j].depth > self.nodes[i].depth {
            j = self.nodes[j].parent.expect("non-root has a parent");
        }
        while i != j {
            i = self.nodes[i].parent.expect("non-root has a parent");
            j = self.nodes[j].parent.expect("non-root has a parent");
        }
        i
    }
}

fn node_spec(e: &BytesStart<'_>, parent: Option<&KeywordId>) -> Result<NodeSpec, TaxonomyError> {
    let mut id = None;
    let mut label = None;
    for attr in e.attributes() {
        let attr = attr.map_err(|err| TaxonomyError::MalformedXml(err.to_string()))?;
        let value = attr
            .unescape_value()
            .map_err(|err| TaxonomyError::MalformedXml(err.to_string()))?
            .into_owned();
        match attr.key.as_ref() {
            b"id" => id = Some(value),
            b"label" => label = Some(value),
            _ => {}
        }
    }
    let id = id.ok_or_else(|| TaxonomyError::MalformedXml("<node> missing `id`".into()))?;
    let label = label
        .ok_or_else(|| TaxonomyError::MalformedXml(format!("<node id=\"{id}\"> missing `label`")))?;
    if id.is_empty() {
        return Err(TaxonomyError::EmptyId);
    }
    Ok(NodeSpec {
        id: KeywordId(id),
        label,
        parent: parent.cloned(),
    })
}
