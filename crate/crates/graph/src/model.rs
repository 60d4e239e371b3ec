//! Property graph data model: scalar values, nodes, edges, and the graph
//! container with upsert, merge, and subgraph extraction.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use crate::error::GraphError;

/// Stable node identifier, unique within one graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u64);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Scalar property value. `Null` never lives in a property map; it only
/// appears during query evaluation when a property is missing.
#[derive(Clone, Debug)]
pub enum Value {
    Null,
    Bool(bool),
    Number(f64),
    Text(String),
}

impl Value {
    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Null => "null",
            Value::Bool(_) => "boolean",
            Value::Number(_) => "number",
            Value::Text(_) => "text",
        }
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Value::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            Value::Number(n) => Some(*n),
            _ => None,
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Value::Null => 0,
            Value::Bool(_) => 1,
            Value::Number(_) => 2,
            Value::Text(_) => 3,
        }
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Text(s.to_string())
    }
}

impl From<String> for Value {
    fn from(s: String) -> Self {
        Value::Text(s)
    }
}

impl From<f64> for Value {
    fn from(n: f64) -> Self {
        Value::Number(n)
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Value {}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Total order across types (Null < Bool < Number < Text) so result rows
/// sort deterministically.
impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Value::Bool(a), Value::Bool(b)) => a.cmp(b),
            (Value::Number(a), Value::Number(b)) => a.total_cmp(b),
            (Value::Text(a), Value::Text(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => write!(f, "null"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Number(n) => write!(f, "{n}"),
            Value::Text(s) => write!(f, "{s}"),
        }
    }
}

/// A labeled node with a property map. Every node stored through
/// [`PropertyGraph::upsert_node`] carries a `name` property, which together
/// with the label forms its identity for cross-graph merging.
#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub label: String,
    pub properties: BTreeMap<String, Value>,
}

impl Node {
    /// The `name` property, or the empty string when absent.
    pub fn name(&self) -> &str {
        self.properties
            .get("name")
            .and_then(Value::as_text)
            .unwrap_or("")
    }

    /// Canonical `label:name` form used by exports and serialized contexts.
    pub fn display_id(&self) -> String {
        format!("{}:{}", self.label, self.name())
    }
}

/// A directed, labeled edge. `(from, to, label)` is unique within a graph.
#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub from: NodeId,
    pub to: NodeId,
    pub label: String,
    pub properties: BTreeMap<String, Value>,
}

type EdgeKey = (NodeId, NodeId, String);

/// In-memory property graph.
///
/// Readers may share a graph freely; mutation requires exclusive access
/// (the usual `&`/`&mut` contract), so queries never observe a partial
/// merge.
#[derive(Clone, Debug, Default)]
pub struct PropertyGraph {
    nodes: BTreeMap<NodeId, Node>,
    edges: BTreeMap<EdgeKey, Edge>,
    by_label_name: BTreeMap<(String, String), NodeId>,
    next_id: u64,
}

impl PropertyGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes in ascending id order.
    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values()
    }

    /// Edges in (from, to, label) order.
    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.values()
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.nodes.get(&id)
    }

    pub fn find_node(&self, label: &str, name: &str) -> Option<&Node> {
        self.by_label_name
            .get(&(label.to_string(), name.to_string()))
            .and_then(|id| self.nodes.get(id))
    }

    /// Insert or update the node keyed by `(label, name)`. On update the
    /// property maps are merged with new keys winning. Returns the node id.
    pub fn upsert_node<I>(&mut self, label: &str, name: &str, props: I) -> NodeId
    where
        I: IntoIterator<Item = (String, Value)>,
    {
        let key = (label.to_string(), name.to_string());
        if let Some(&id) = self.by_label_name.get(&key) {
            let node = self.nodes.get_mut(&id).expect("index entry without node");
            for (k, v) in props {
                node.properties.insert(k, v);
            }
            node.properties
                .insert("name".to_string(), Value::Text(name.to_string()));
            return id;
        }
        let id = NodeId(self.next_id);
        self.next_id += 1;
        let mut properties: BTreeMap<String, Value> = props.into_iter().collect();
        properties.insert("name".to_string(), Value::Text(name.to_string()));
        self.nodes.insert(
            id,
            Node {
                id,
                label: label.to_string(),
                properties,
            },
        );
        self.by_label_name.insert(key, id);
        id
    }

    /// Insert or update the edge keyed by `(from, to, label)`; property maps
    /// merge with new keys winning.
    pub fn upsert_edge<I>(
        &mut self,
        from: NodeId,
        to: NodeId,
        label: &str,
        props: I,
    ) -> Result<(), GraphError>
    where
        I: IntoIterator<Item = (String, Value)>,
    {
        if !self.nodes.contains_key(&from) {
            return Err(GraphError::DanglingEndpoint(from));
        }
        if !self.nodes.contains_key(&to) {
            return Err(GraphError::DanglingEndpoint(to));
        }
        let key = (from, to, label.to_string());
        match self.edges.get_mut(&key) {
            Some(edge) => {
                for (k, v) in props {
                    edge.properties.insert(k, v);
                }
            }
            None => {
                self.edges.insert(
                    key,
                    Edge {
                        from,
                        to,
                        label: label.to_string(),
                        properties: props.into_iter().collect(),
                    },
                );
            }
        }
        Ok(())
    }

    /// Edges incident to `id` in either direction.
    pub fn edges_touching(&self, id: NodeId) -> impl Iterator<Item = &Edge> {
        self.edges
            .values()
            .filter(move |e| e.from == id || e.to == id)
    }

    /// Merge `other` into this graph. Nodes unify on `(label, name)` with
    /// `other`'s property values winning on conflict; edges union with
    /// endpoint remapping and `(from, to, label)` deduplication.
    pub fn merge_from(&mut self, other: &PropertyGraph) {
        let mut id_map: BTreeMap<NodeId, NodeId> = BTreeMap::new();
        for node in other.nodes() {
            let props: Vec<(String, Value)> = node
                .properties
                .iter()
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect();
            let new_id = self.upsert_node(&node.label, node.name(), props);
            id_map.insert(node.id, new_id);
        }
        for edge in other.edges() {
            let from = id_map[&edge.from];
            let to = id_map[&edge.to];
            let props: Vec<(String, Value)> = edge
                .properties
                .iter()
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect();
            self.upsert_edge(from, to, &edge.label, props)
                .expect("remapped endpoints exist");
        }
    }

    /// Breadth-first neighborhood of `Person{name}` out to `depth` hops
    /// (both edge directions), with all induced edges among the included
    /// nodes. Depth 0 yields the person node alone.
    pub fn subgraph_of(&self, person_name: &str, depth: usize) -> Result<PropertyGraph, GraphError> {
        let start = self
            .find_node("Person", person_name)
            .ok_or_else(|| GraphError::PersonNotFound(person_name.to_string()))?;

        let mut included: BTreeSet<NodeId> = BTreeSet::new();
        let mut queue: VecDeque<(NodeId, usize)> = VecDeque::new();
        included.insert(start.id);
        queue.push_back((start.id, 0));
        while let Some((id, d)) = queue.pop_front() {
            if d == depth {
                continue;
            }
            for edge in self.edges_touching(id) {
                let other = if edge.from == id { edge.to } else { edge.from };
                if included.insert(other) {
                    queue.push_back((other, d + 1));
                }
            }
        }

        let mut sub = PropertyGraph::new();
        let mut id_map: BTreeMap<NodeId, NodeId> = BTreeMap::new();
        for id in &included {
            let node = &self.nodes[id];
            let props: Vec<(String, Value)> = node
                .properties
                .iter()
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect();
            id_map.insert(*id, sub.upsert_node(&node.label, node.name(), props));
        }
        for edge in self.edges() {
            if included.contains(&edge.from) && included.contains(&edge.to) {
                let props: Vec<(String, Value)> = edge
                    .properties
                    .iter()
                    .map(|(k, v)| (k.clone(), v.clone()))
                    .collect();
                sub.upsert_edge(id_map[&edge.from], id_map[&edge.to], &edge.label, props)
                    .expect("included endpoints exist");
            }
        }
        Ok(sub)
    }

    /// Id-independent serialization: nodes sorted by `(label, name)`, edges
    /// by endpoint display ids. Two graphs are isomorphic under the
    /// `(label, name)` unification key iff their canonical forms are equal.
    pub fn canonical_form(&self) -> String {
        let mut out = String::new();
        let mut node_lines: Vec<String> = self
            .nodes()
            .map(|n| {
                format!(
                    "N\t{}\t{}\t{}",
                    n.label,
                    n.name(),
                    encode_props(&n.properties)
                )
            })
            .collect();
        node_lines.sort();
        let mut edge_lines: Vec<String> = self
            .edges()
            .map(|e| {
                format!(
                    "E\t{}\t{}\t{}\t{}",
                    self.nodes[&e.from].display_id(),
                    self.nodes[&e.to].display_id(),
                    e.label,
                    encode_props(&e.properties)
                )
            })
            .collect();
        edge_lines.sort();
        for line in node_lines.into_iter().chain(edge_lines) {
            out.push_str(&line);
            out.push('\n');
        }
        out
    }

    pub fn is_isomorphic(&self, other: &PropertyGraph) -> bool {
        self.canonical_form() == other.canonical_form()
    }

    pub(crate) fn insert_raw_node(
        &mut self,
        id: NodeId,
        label: String,
        properties: BTreeMap<String, Value>,
    ) -> Result<(), String> {
        if self.nodes.contains_key(&id) {
            return Err(format!("duplicate node id {id}"));
        }
        let name = properties
            .get("name")
            .and_then(Value::as_text)
            .unwrap_or("")
            .to_string();
        let key = (label.clone(), name);
        if self.by_label_name.contains_key(&key) {
            return Err(format!("duplicate node ({}, {})", key.0, key.1));
        }
        self.by_label_name.insert(key, id);
        self.next_id = self.next_id.max(id.0 + 1);
        self.nodes.insert(id, Node { id, label, properties });
        Ok(())
    }
}

/// Stable `key=value;...` rendering of a property map with type-tagged,
/// percent-escaped values. Shared by the canonical form and the line-based
/// persistence format.
pub(crate) fn encode_props(props: &BTreeMap<String, Value>) -> String {
    props
        .iter()
        .map(|(k, v)| format!("{}={}", escape(k), encode_value(v)))
        .collect::<Vec<_>>()
        .join(";")
}

pub(crate) fn encode_value(v: &Value) -> String {
    match v {
        Value::Null => "0:".to_string(),
        Value::Bool(b) => format!("b:{b}"),
        Value::Number(n) => format!("n:{n}"),
        Value::Text(s) => format!("s:{}", escape(s)),
    }
}

pub(crate) fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '%' => out.push_str("%25"),
            ';' => out.push_str("%3B"),
            '=' => out.push_str("%3D"),
            '\t' => out.push_str("%09"),
            '\n' => out.push_str("%0A"),
            _ => out.push(c),
        }
    }
    out
}

pub(crate) fn unescape(s: &str) -> Result<String, String> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '%' {
            out.push(c);
            continue;
        }
        let hi = chars.next().ok_or("truncated escape")?;
        let lo = chars.next().ok_or("truncated escape")?;
        let byte = u8::from_str_radix(&format!("{hi}{lo}"), 16).map_err(|_| "bad escape")?;
        out.push(byte as char);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn props(pairs: &[(&str, Value)]) -> Vec<(String, Value)> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
    }

    #[test]
    fn upsert_node_is_idempotent_on_label_name() {
        let mut g = PropertyGraph::new();
        let a = g.upsert_node("Person", "Anna", props(&[]));
        let b = g.upsert_node("Person", "Anna", props(&[]));
        assert_eq!(a, b);
        assert_eq!(g.node_count(), 1);
    }

    #[test]
    fn upsert_node_merges_properties_new_keys_win() {
        let mut g = PropertyGraph::new();
        g.upsert_node("Person", "Anna", props(&[("language", "en".into())]));
        g.upsert_node("Person", "Anna", props(&[("level", "beginner".into())]));
        let node = g.find_node("Person", "Anna").unwrap();
        assert_eq!(node.properties["language"], Value::Text("en".into()));
        assert_eq!(node.properties["level"], Value::Text("beginner".into()));
    }

    #[test]
    fn upsert_edge_to_missing_node_is_dangling() {
        let mut g = PropertyGraph::new();
        let a = g.upsert_node("Person", "Anna", props(&[]));
        let err = g.upsert_edge(a, NodeId(99), "PRACTICES", props(&[]));
        assert!(matches!(err, Err(GraphError::DanglingEndpoint(NodeId(99)))));
    }

    #[test]
    fn merge_unifies_shared_nodes() {
        let mut g1 = PropertyGraph::new();
        let a = g1.upsert_node("Person", "Anna", props(&[]));
        let s = g1.upsert_node("Sport", "Swimming", props(&[]));
        g1.upsert_edge(a, s, "PRACTICES", props(&[])).unwrap();

        let mut g2 = PropertyGraph::new();
        let b = g2.upsert_node("Person", "Bruno", props(&[]));
        let s2 = g2.upsert_node("Sport", "Swimming", props(&[]));
        g2.upsert_edge(b, s2, "PRACTICES", props(&[])).unwrap();

        let mut global = PropertyGraph::new();
        global.merge_from(&g1);
        global.merge_from(&g2);
        // one shared Sport node, two PRACTICES edges
        assert_eq!(global.node_count(), 3);
        assert_eq!(global.edge_count(), 2);
    }

    #[test]
    fn merge_disjoint_graphs_sums_node_counts() {
        let mut g1 = PropertyGraph::new();
        g1.upsert_node("Person", "Anna", props(&[]));
        let mut g2 = PropertyGraph::new();
        g2.upsert_node("Person", "Bruno", props(&[]));
        let mut global = PropertyGraph::new();
        global.merge_from(&g1);
        global.merge_from(&g2);
        assert_eq!(global.node_count(), 2);
    }

    #[test]
    fn merge_into_itself_is_identity() {
        let mut g = PropertyGraph::new();
        let a = g.upsert_node("Person", "Anna", props(&[]));
        let s = g.upsert_node("Sport", "Running", props(&[("popular", true.into())]));
        g.upsert_edge(a, s, "PRACTICES", props(&[("frequency_per_week", 3.0.into())]))
            .unwrap();
        let before = g.canonical_form();
        let copy = g.clone();
        g.merge_from(&copy);
        assert_eq!(g.canonical_form(), before);
    }

    #[test]
    fn subgraph_depth_one_keeps_neighbors_and_induced_edges() {
        let mut g = PropertyGraph::new();
        let a = g.upsert_node("Person", "Anna", props(&[]));
        let s = g.upsert_node("Sport", "Running", props(&[]));
        let h = g.upsert_node("Hobby", "Chess", props(&[]));
        let y = g.upsert_node("YogaPose", "tree", props(&[]));
        let far = g.upsert_node("Person", "Bruno", props(&[]));
        g.upsert_edge(a, s, "PRACTICES", props(&[])).unwrap();
        g.upsert_edge(a, h, "INTERESTED_IN", props(&[])).unwrap();
        g.upsert_edge(a, y, "PERFORMED", props(&[])).unwrap();
        g.upsert_edge(far, s, "PRACTICES", props(&[])).unwrap();

        let sub = g.subgraph_of("Anna", 1).unwrap();
        assert_eq!(sub.node_count(), 4);
        assert!(sub.edge_count() >= 3);
        assert!(sub.find_node("Person", "Bruno").is_none());
    }

    #[test]
    fn subgraph_depth_zero_is_single_node() {
        let mut g = PropertyGraph::new();
        let a = g.upsert_node("Person", "Anna", props(&[]));
        let s = g.upsert_node("Sport", "Running", props(&[]));
        g.upsert_edge(a, s, "PRACTICES", props(&[])).unwrap();
        let sub = g.subgraph_of("Anna", 0).unwrap();
        assert_eq!(sub.node_count(), 1);
        assert_eq!(sub.edge_count(), 0);
    }

    #[test]
    fn subgraph_unknown_person_errors() {
        let g = PropertyGraph::new();
        assert!(matches!(
            g.subgraph_of("Nobody", 1),
            Err(GraphError::PersonNotFound(_))
        ));
    }

    #[test]
    fn value_order_is_total_and_cross_type() {
        let mut vals = vec![
            Value::Text("b".into()),
            Value::Number(2.0),
            Value::Bool(true),
            Value::Null,
            Value::Number(-1.0),
            Value::Text("a".into()),
        ];
        vals.sort();
        assert_eq!(
            vals,
            vec![
                Value::Null,
                Value::Bool(true),
                Value::Number(-1.0),
                Value::Number(2.0),
                Value::Text("a".into()),
                Value::Text("b".into()),
            ]
        );
    }

    #[test]
    fn escape_round_trips() {
        let raw = "a=b;c%d\te\nf";
        assert_eq!(unescape(&escape(raw)).unwrap(), raw);
    }
}
