//! Readable line serialization: nodes then edges in canonical order.
//!
//! ```text
//! (Person:Anna {language="en", training_level="beginner"})
//! (Sport:Running)
//! (Person:Anna)-[PRACTICES {frequency_per_week=3}]->(Sport:Running)
//! ```
//!
//! Text property values are double-quoted with backslash escapes; numbers
//! and booleans are bare. The `name` property is carried by the
//! `Label:name` head and omitted from the braces. `parse_readable` inverts
//! `render_readable`; node and edge names must not contain `)`, `:` in the
//! label position, or an embedded ` {`.

use std::collections::BTreeMap;

use crate::error::GraphError;
use crate::model::{Node, PropertyGraph, Value};

fn render_value(v: &Value) -> String {
    match v {
        Value::Text(s) => format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\"")),
        other => other.to_string(),
    }
}

fn render_props(props: &BTreeMap<String, Value>) -> String {
    let items: Vec<String> = props
        .iter()
        .filter(|(k, _)| k.as_str() != "name")
        .map(|(k, v)| format!("{k}={}", render_value(v)))
        .collect();
    if items.is_empty() {
        String::new()
    } else {
        format!(" {{{}}}", items.join(", "))
    }
}

fn node_head(node: &Node) -> String {
    format!("{}:{}", node.label, node.name())
}

/// Nodes (sorted by `label:name`) then edges (sorted by endpoints and
/// label), one per line.
pub fn render_readable(graph: &PropertyGraph) -> String {
    let mut node_lines: Vec<String> = graph
        .nodes()
        .map(|n| format!("({}{})", node_head(n), render_props(&n.properties)))
        .collect();
    node_lines.sort();
    let mut edge_lines: Vec<String> = graph
        .edges()
        .map(|e| {
            let from = graph.node(e.from).expect("endpoint exists");
            let to = graph.node(e.to).expect("endpoint exists");
            format!(
                "({})-[{}{}]->({})",
                node_head(from),
                e.label,
                render_props(&e.properties),
                node_head(to)
            )
        })
        .collect();
    edge_lines.sort();
    let mut out = String::new();
    for line in node_lines.into_iter().chain(edge_lines) {
        out.push_str(&line);
        out.push('\n');
    }
    out
}

fn parse_value(raw: &str, line: usize) -> Result<Value, GraphError> {
    let err = |message: String| GraphError::FormatError { line, message };
    if let Some(rest) = raw.strip_prefix('"') {
        let body = rest
            .strip_suffix('"')
            .ok_or_else(|| err(format!("unterminated string '{raw}'")))?;
        let mut out = String::new();
        let mut chars = body.chars();
        while let Some(c) = chars.next() {
            if c == '\\' {
                match chars.next() {
                    Some(e) => out.push(e),
                    None => return Err(err("dangling escape".into())),
                }
            } else {
                out.push(c);
            }
        }
        return Ok(Value::Text(out));
    }
    match raw {
        "true" => Ok(Value::Bool(true)),
        "false" => Ok(Value::Bool(false)),
        _ => raw
            .parse::<f64>()
            .map(Value::Number)
            .map_err(|_| err(format!("bad value '{raw}'"))),
    }
}

fn parse_props(raw: &str, line: usize) -> Result<Vec<(String, Value)>, GraphError> {
    let err = |message: String| GraphError::FormatError { line, message };
    let mut props = Vec::new();
    if raw.is_empty() {
        return Ok(props);
    }
    // split on ", " outside quotes
    let mut items: Vec<String> = Vec::new();
    let mut current = String::new();
    let mut in_quotes = false;
    let mut escaped = false;
    for c in raw.chars() {
        if escaped {
            current.push(c);
            escaped = false;
            continue;
        }
        match c {
            '\\' if in_quotes => {
                current.push(c);
                escaped = true;
            }
            '"' => {
                current.push(c);
                in_quotes = !in_quotes;
            }
            ',' if !in_quotes => {
                items.push(current.trim().to_string());
                current.clear();
            }
            _ => current.push(c),
        }
    }
    if !current.trim().is_empty() {
        items.push(current.trim().to_string());
    }
    for item in items {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| err(format!("property without '=': '{item}'")))?;
        props.push((key.trim().to_string(), parse_value(value.trim(), line)?));
    }
    Ok(props)
}

/// `Label:name {props}` (the part inside a node's parentheses).
fn parse_node_body(body: &str, line: usize) -> Result<(String, String, Vec<(String, Value)>), GraphError> {
    let err = |message: String| GraphError::FormatError { line, message };
    let (head, props_raw) = match body.find(" {") {
        Some(idx) => {
            let props = body[idx + 2..]
                .strip_suffix('}')
                .ok_or_else(|| err(format!("unterminated props in '{body}'")))?;
            (&body[..idx], props)
        }
        None => (body, ""),
    };
    let (label, name) = head
        .split_once(':')
        .ok_or_else(|| err(format!("expected Label:name, found '{head}'")))?;
    Ok((label.to_string(), name.to_string(), parse_props(props_raw, line)?))
}

/// Inverse of [`render_readable`].
pub fn parse_readable(text: &str) -> Result<PropertyGraph, GraphError> {
    let mut graph = PropertyGraph::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw_line.trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| GraphError::FormatError { line: lineno, message };
        if let Some(arrow) = line.find(")-[") {
            // edge line
            let from_body = line
                .strip_prefix('(')
                .ok_or_else(|| err("edge must start with '('".into()))?;
            let from_body = &from_body[..arrow - 1];
            let rest = &line[arrow + 3..];
            let close = rest
                .find("]->(")
                .ok_or_else(|| err("edge missing ']->('".into()))?;
            let edge_body = &rest[..close];
            let to_body = rest[close + 4..]
                .strip_suffix(')')
                .ok_or_else(|| err("edge must end with ')'".into()))?;

            let (from_label, from_name, _) = parse_node_body(from_body, lineno)?;
            let (to_label, to_name, _) = parse_node_body(to_body, lineno)?;
            let (edge_label, props_raw) = match edge_body.find(" {") {
                Some(i) => {
                    let props = edge_body[i + 2..]
                        .strip_suffix('}')
                        .ok_or_else(|| err("unterminated edge props".into()))?;
                    (&edge_body[..i], props)
                }
                None => (edge_body, ""),
            };
            let props = parse_props(props_raw, lineno)?;
            let from = graph.upsert_node(&from_label, &from_name, vec![]);
            let to = graph.upsert_node(&to_label, &to_name, vec![]);
            graph
                .upsert_edge(from, to, edge_label, props)
                .map_err(|e| err(e.to_string()))?;
        } else {
            // node line
            let body = line
                .strip_prefix('(')
                .and_then(|s| s.strip_suffix(')'))
                .ok_or_else(|| err(format!("expected (Label:name ...), found '{line}'")))?;
            let (label, name, props) = parse_node_body(body, lineno)?;
            graph.upsert_node(&label, &name, props);
        }
    }
    Ok(graph)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn readable_form_round_trips() {
        let mut g = PropertyGraph::new();
        let a = g.upsert_node(
            "Person",
            "Anna",
            vec![
                ("language".to_string(), Value::Text("en".into())),
                ("age".to_string(), Value::Number(31.0)),
            ],
        );
        let f = g.upsert_node("Feedback", "great session, thanks", vec![]);
        let s = g.upsert_node("Sport", "Running", vec![]);
        g.upsert_edge(
            a,
            s,
            "PRACTICES",
            vec![
                ("frequency_per_week".to_string(), Value::Number(3.0)),
                ("level".to_string(), Value::Text("intermediate".into())),
            ],
        )
        .unwrap();
        g.upsert_edge(a, f, "GAVE_FEEDBACK", vec![]).unwrap();

        let text = render_readable(&g);
        assert!(text.contains("(Person:Anna {age=31, language=\"en\"})"));
        assert!(text.contains(
            "(Person:Anna)-[PRACTICES {frequency_per_week=3, level=\"intermediate\"}]->(Sport:Running)"
        ));
        let parsed = parse_readable(&text).unwrap();
        assert!(g.is_isomorphic(&parsed), "\n{}\nvs\n{}", g.canonical_form(), parsed.canonical_form());
    }

    #[test]
    fn rendering_is_deterministic() {
        let mut g = PropertyGraph::new();
        let a = g.upsert_node("Person", "Zoe", vec![]);
        let b = g.upsert_node("Person", "Al", vec![]);
        g.upsert_edge(a, b, "KNOWS", vec![]).unwrap();
        assert_eq!(render_readable(&g), render_readable(&g.clone()));
        // sorted: node lines before edge lines, lexicographic
        let lines: Vec<&str> = render_readable(&g).lines().map(str::trim).collect();
        assert_eq!(lines[0], "(Person:Al)");
    }

    #[test]
    fn bad_line_reports_line_number() {
        match parse_readable("(Person:Anna)\nnot a line") {
            Err(GraphError::FormatError { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected format error, got {other:?}"),
        }
    }
}
