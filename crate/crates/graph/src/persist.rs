//! Line-based persistence and DOT export.
//!
//! One record per line, UTF-8:
//!
//! ```text
//! N<TAB>id<TAB>label<TAB>key=value;key=value
//! E<TAB>from<TAB>to<TAB>label<TAB>key=value;...
//! ```
//!
//! Values are type-tagged (`s:` text, `n:` number, `b:` boolean) and
//! percent-escaped, so `load(save(g))` reproduces the graph exactly.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::error::GraphError;
use crate::model::{encode_props, unescape, NodeId, PropertyGraph, Value};

pub fn to_string(graph: &PropertyGraph) -> String {
    let mut out = String::new();
    for node in graph.nodes() {
        out.push_str(&format!(
            "N\t{}\t{}\t{}\n",
            node.id.0,
            crate::model::escape(&node.label),
            encode_props(&node.properties)
        ));
    }
    for edge in graph.edges() {
        out.push_str(&format!(
            "E\t{}\t{}\t{}\t{}\n",
            edge.from.0,
            edge.to.0,
            crate::model::escape(&edge.label),
            encode_props(&edge.properties)
        ));
    }
    out
}

pub fn from_str(text: &str) -> Result<PropertyGraph, GraphError> {
    let mut graph = PropertyGraph::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.is_empty() {
            continue;
        }
        let err = |message: String| GraphError::FormatError { line: lineno, message };
        let fields: Vec<&str> = line.split('\t').collect();
        match fields[0] {
            "N" => {
                if fields.len() != 4 {
                    return Err(err(format!("expected 4 fields, got {}", fields.len())));
                }
                let id: u64 = fields[1].parse().map_err(|_| err("bad node id".into()))?;
                let label = unescape(fields[2]).map_err(|e| err(e.to_string()))?;
                let props = decode_props(fields[3]).map_err(err)?;
                graph
                    .insert_raw_node(NodeId(id), label, props)
                    .map_err(err)?;
            }
            "E" => {
                if fields.len() != 5 {
                    return Err(err(format!("expected 5 fields, got {}", fields.len())));
                }
                let from: u64 = fields[1].parse().map_err(|_| err("bad from id".into()))?;
                let to: u64 = fields[2].parse().map_err(|_| err("bad to id".into()))?;
                let label = unescape(fields[3]).map_err(|e| err(e.to_string()))?;
                let props = decode_props(fields[4]).map_err(err)?;
                graph
                    .upsert_edge(NodeId(from), NodeId(to), &label, props)
                    .map_err(|e| err(e.to_string()))?;
            }
            other => return Err(err(format!("unknown record type '{other}'"))),
        }
    }
    Ok(graph)
}

pub fn save(graph: &PropertyGraph, path: &Path) -> Result<(), GraphError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, to_string(graph))?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<PropertyGraph, GraphError> {
    let text = fs::read_to_string(path)?;
    from_str(&text)
}

fn decode_props(field: &str) -> Result<BTreeMap<String, Value>, String> {
    let mut props = BTreeMap::new();
    if field.is_empty() {
        return Ok(props);
    }
    for item in field.split(';') {
        let (key, value) = item.split_once('=').ok_or("property without '='")?;
        let key = unescape(key)?;
        let value = decode_value(value)?;
        props.insert(key, value);
    }
    Ok(props)
}

fn decode_value(encoded: &str) -> Result<Value, String> {
    let (tag, body) = encoded.split_once(':').ok_or("value without type tag")?;
    match tag {
        "s" => Ok(Value::Text(unescape(body)?)),
        "n" => body
            .parse::<f64>()
            .map(Value::Number)
            .map_err(|_| format!("bad number '{body}'")),
        "b" => match body {
            "true" => Ok(Value::Bool(true)),
            "false" => Ok(Value::Bool(false)),
            _ => Err(format!("bad boolean '{body}'")),
        },
        other => Err(format!("unknown value tag '{other}'")),
    }
}

/// DOT export; nodes are named `label:name`.
pub fn export_dot(graph: &PropertyGraph) -> String {
    let quote = |s: &str| format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""));
    let mut out = String::from("digraph memory {\n");
    for node in graph.nodes() {
        out.push_str(&format!("  {};\n", quote(&node.display_id())));
    }
    for edge in graph.edges() {
        let from = graph.node(edge.from).expect("endpoint").display_id();
        let to = graph.node(edge.to).expect("endpoint").display_id();
        out.push_str(&format!(
            "  {} -> {} [label={}];\n",
            quote(&from),
            quote(&to),
            quote(&edge.label)
        ));
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> PropertyGraph {
        let mut g = PropertyGraph::new();
        let a = g.upsert_node(
            "Person",
            "Anna",
            vec![
                ("language".to_string(), Value::Text("en".into())),
                ("age".to_string(), Value::Number(31.0)),
                ("active".to_string(), Value::Bool(true)),
            ],
        );
        let s = g.upsert_node("Sport", "odd; name=with%chars", vec![]);
        g.upsert_edge(
            a,
            s,
            "PRACTICES",
            vec![("frequency_per_week".to_string(), Value::Number(2.5))],
        )
        .unwrap();
        g
    }

    #[test]
    fn round_trip_preserves_graph() {
        let g = sample();
        let loaded = from_str(&to_string(&g)).unwrap();
        assert!(g.is_isomorphic(&loaded));
        assert_eq!(loaded.node_count(), 2);
        assert_eq!(loaded.edge_count(), 1);
    }

    #[test]
    fn empty_graph_round_trips() {
        let g = PropertyGraph::new();
        let loaded = from_str(&to_string(&g)).unwrap();
        assert!(loaded.is_empty());
    }

    #[test]
    fn truncated_record_is_format_error_with_line() {
        let g = sample();
        let mut text = to_string(&g);
        text.push_str("E\t0\t1\n");
        match from_str(&text) {
            Err(GraphError::FormatError { line, .. }) => assert_eq!(line, 4),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn dot_output_names_nodes_label_colon_name() {
        let g = sample();
        let dot = export_dot(&g);
        assert!(dot.contains("\"Person:Anna\""));
        assert!(dot.contains("[label=\"PRACTICES\"]"));
        assert!(dot.starts_with("digraph"));
    }
}
