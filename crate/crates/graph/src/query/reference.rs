//! Brute-force reference evaluator.
//!
//! This is the executable semantics of the query language: it enumerates
//! every assignment of graph nodes to node-pattern slots (including
//! anonymous ones) and every edge per relationship slot, then checks all
//! constraints. It shares nothing with the production evaluator beyond the
//! AST and `Value` types, and it is intentionally exponential — use it only
//! on small graphs.

use std::collections::BTreeMap;

use crate::error::QueryError;
use crate::model::{Edge, Node, NodeId, PropertyGraph, Value};
use crate::query::ast::*;
use crate::query::eval::ResultTable;

#[derive(Clone, Debug, PartialEq)]
enum RefBound {
    Node(NodeId),
    /// Index into the graph's edge list.
    Edge(usize),
}

type Env = BTreeMap<String, RefBound>;

pub fn execute_reference(
    ast: &QueryAst,
    graph: &PropertyGraph,
) -> Result<ResultTable, QueryError> {
    // Flatten patterns into node slots plus per-path relationship lists.
    let mut slot_patterns: Vec<&NodePattern> = Vec::new();
    let mut paths: Vec<(Vec<usize>, Vec<&RelPattern>)> = Vec::new();
    for path in &ast.patterns {
        let mut slot_ids = vec![slot_patterns.len()];
        slot_patterns.push(&path.start);
        let mut rels = Vec::new();
        for (rel, node) in &path.segments {
            rels.push(rel);
            slot_ids.push(slot_patterns.len());
            slot_patterns.push(node);
        }
        paths.push((slot_ids, rels));
    }

    let nodes: Vec<&Node> = graph.nodes().collect();
    let edges: Vec<&Edge> = graph.edges().collect();

    let mut envs: Vec<Env> = Vec::new();
    let slot_count = slot_patterns.len();
    let mut assignment = vec![0usize; slot_count];

    if !nodes.is_empty() {
        loop {
            collect_envs(
                graph,
                &nodes,
                &edges,
                &slot_patterns,
                &paths,
                &assignment,
                &mut envs,
            );
            // odometer increment
            let mut i = 0;
            loop {
                if i == slot_count {
                    break;
                }
                assignment[i] += 1;
                if assignment[i] < nodes.len() {
                    break;
                }
                assignment[i] = 0;
                i += 1;
            }
            if i == slot_count {
                break;
            }
        }
    }

    // WHERE
    let mut kept: Vec<Env> = Vec::new();
    for env in envs {
        if match &ast.where_clause {
            Some(expr) => ref_eval_expr(graph, &edges, &env, expr)?,
            None => true,
        } {
            kept.push(env);
        }
    }

    // projection / aggregation
    let items = &ast.return_clause.items;
    let columns: Vec<String> = items.iter().map(ReturnItem::column_name).collect();
    let mut rows: Vec<Vec<Value>> = if items.iter().any(ReturnItem::is_aggregate) {
        ref_aggregate(graph, &edges, &kept, items)
    } else {
        kept.iter()
            .map(|env| items.iter().map(|i| ref_project(graph, &edges, env, i)).collect())
            .collect()
    };

    if ast.return_clause.distinct {
        let mut seen = std::collections::BTreeSet::new();
        rows.retain(|row| seen.insert(row.clone()));
    }

    let order_indices: Vec<(usize, bool)> = ast
        .order_by
        .iter()
        .map(|o| {
            (
                items.iter().position(|i| *i == o.item).expect("validated"),
                o.descending,
            )
        })
        .collect();
    rows.sort_by(|a, b| {
        for (idx, desc) in &order_indices {
            let ord = a[*idx].cmp(&b[*idx]);
            let ord = if *desc { ord.reverse() } else { ord };
            if ord != std::cmp::Ordering::Equal {
                return ord;
            }
        }
        a.cmp(b)
    });

    if let Some(limit) = ast.limit {
        rows.truncate(limit);
    }

    Ok(ResultTable { columns, rows })
}

fn slot_ok(node: &Node, pattern: &NodePattern) -> bool {
    if let Some(label) = &pattern.label {
        if node.label != *label {
            return false;
        }
    }
    pattern
        .props
        .iter()
        .all(|(k, v)| node.properties.get(k) == Some(v))
}

/// Check one full node-slot assignment, then enumerate candidate edges per
/// relationship slot and emit one environment per combination.
fn collect_envs(
    graph: &PropertyGraph,
    nodes: &[&Node],
    edges: &[&Edge],
    slot_patterns: &[&NodePattern],
    paths: &[(Vec<usize>, Vec<&RelPattern>)],
    assignment: &[usize],
    envs: &mut Vec<Env>,
) {
    let mut var_nodes: BTreeMap<&str, NodeId> = BTreeMap::new();
    for (slot, pattern) in slot_patterns.iter().enumerate() {
        let node = nodes[assignment[slot]];
        if !slot_ok(node, pattern) {
            return;
        }
        if let Some(var) = &pattern.var {
            match var_nodes.get(var.as_str()) {
                Some(existing) if *existing != node.id => return,
                _ => {
                    var_nodes.insert(var, node.id);
                }
            }
        }
    }

    // candidate edge lists per relationship slot, across all paths
    let mut rel_slots: Vec<(&RelPattern, Vec<usize>)> = Vec::new();
    for (slot_ids, rels) in paths {
        for (i, rel) in rels.iter().enumerate() {
            let a = nodes[assignment[slot_ids[i]]].id;
            let b = nodes[assignment[slot_ids[i + 1]]].id;
            let (want_from, want_to) = match rel.direction {
                Direction::Out => (a, b),
                Direction::In => (b, a),
            };
            let candidates: Vec<usize> = edges
                .iter()
                .enumerate()
                .filter(|(_, e)| {
                    e.from == want_from
                        && e.to == want_to
                        && rel.label.as_ref().is_none_or(|l| e.label == *l)
                })
                .map(|(i, _)| i)
                .collect();
            if candidates.is_empty() {
                return;
            }
            rel_slots.push((rel, candidates));
        }
    }

    // cartesian product over candidate lists
    let mut picks = vec![0usize; rel_slots.len()];
    loop {
        let mut env: Env = var_nodes
            .iter()
            .map(|(k, v)| (k.to_string(), RefBound::Node(*v)))
            .collect();
        for (slot, (rel, candidates)) in rel_slots.iter().enumerate() {
            if let Some(var) = &rel.var {
                env.insert(var.clone(), RefBound::Edge(candidates[picks[slot]]));
            }
        }
        let _ = graph;
        envs.push(env);

        if rel_slots.is_empty() {
            break;
        }
        let mut i = 0;
        loop {
            if i == rel_slots.len() {
                return;
            }
            picks[i] += 1;
            if picks[i] < rel_slots[i].1.len() {
                break;
            }
            picks[i] = 0;
            i += 1;
        }
    }
}

fn ref_property(graph: &PropertyGraph, edges: &[&Edge], bound: &RefBound, key: &str) -> Value {
    match bound {
        RefBound::Node(id) => graph
            .node(*id)
            .and_then(|n| n.properties.get(key).cloned())
            .unwrap_or(Value::Null),
        RefBound::Edge(i) => edges[*i].properties.get(key).cloned().unwrap_or(Value::Null),
    }
}

fn ref_operand(graph: &PropertyGraph, edges: &[&Edge], env: &Env, operand: &Operand) -> Value {
    match operand {
        Operand::Literal(v) => v.clone(),
        Operand::Property { var, key } => match env.get(var) {
            Some(bound) => ref_property(graph, edges, bound, key),
            None => Value::Null,
        },
    }
}

fn ref_compare(op: CmpOp, lhs: &Value, rhs: &Value) -> Result<bool, QueryError> {
    if lhs.is_null() || rhs.is_null() {
        return Ok(false);
    }
    if std::mem::discriminant(lhs) != std::mem::discriminant(rhs) {
        return Err(QueryError::TypeMismatch {
            lhs: lhs.type_name().to_string(),
            rhs: rhs.type_name().to_string(),
        });
    }
    use std::cmp::Ordering::*;
    let ord = lhs.cmp(rhs);
    Ok(match op {
        CmpOp::Eq => ord == Equal,
        CmpOp::Ne => ord != Equal,
        CmpOp::Lt => ord == Less,
        CmpOp::Le => ord != Greater,
        CmpOp::Gt => ord == Greater,
        CmpOp::Ge => ord != Less,
    })
}

fn ref_eval_expr(
    graph: &PropertyGraph,
    edges: &[&Edge],
    env: &Env,
    expr: &Expr,
) -> Result<bool, QueryError> {
    match expr {
        Expr::Cmp { op, lhs, rhs } => {
            let l = ref_operand(graph, edges, env, lhs);
            let r = ref_operand(graph, edges, env, rhs);
            ref_compare(*op, &l, &r)
        }
        Expr::And(a, b) => {
            Ok(ref_eval_expr(graph, edges, env, a)? && ref_eval_expr(graph, edges, env, b)?)
        }
        Expr::Or(a, b) => {
            Ok(ref_eval_expr(graph, edges, env, a)? || ref_eval_expr(graph, edges, env, b)?)
        }
        Expr::Not(e) => Ok(!ref_eval_expr(graph, edges, env, e)?),
    }
}

fn ref_project(graph: &PropertyGraph, edges: &[&Edge], env: &Env, item: &ReturnItem) -> Value {
    match item {
        ReturnItem::Var(v) => match env.get(v) {
            Some(RefBound::Node(id)) => ref_property(graph, edges, &RefBound::Node(*id), "name"),
            Some(RefBound::Edge(i)) => Value::Text(edges[*i].label.clone()),
            None => Value::Null,
        },
        ReturnItem::Property { var, key } => match env.get(var) {
            Some(bound) => ref_property(graph, edges, bound, key),
            None => Value::Null,
        },
        _ => unreachable!("aggregates handled separately"),
    }
}

fn ref_count_value(graph: &PropertyGraph, edges: &[&Edge], env: &Env, op: &CountOperand) -> Value {
    match op {
        CountOperand::Var(v) => match env.get(v) {
            Some(RefBound::Node(id)) => Value::Text(format!("node:{}", id.0)),
            Some(RefBound::Edge(i)) => Value::Text(format!("edge:{i}")),
            None => Value::Null,
        },
        CountOperand::Property { var, key } => match env.get(var) {
            Some(bound) => ref_property(graph, edges, bound, key),
            None => Value::Null,
        },
    }
}

fn ref_aggregate(
    graph: &PropertyGraph,
    edges: &[&Edge],
    envs: &[Env],
    items: &[ReturnItem],
) -> Vec<Vec<Value>> {
    let key_positions: Vec<usize> = items
        .iter()
        .enumerate()
        .filter(|(_, i)| !i.is_aggregate())
        .map(|(i, _)| i)
        .collect();

    let mut groups: BTreeMap<Vec<Value>, Vec<&Env>> = BTreeMap::new();
    for env in envs {
        let key: Vec<Value> = key_positions
            .iter()
            .map(|&i| ref_project(graph, edges, env, &items[i]))
            .collect();
        groups.entry(key).or_default().push(env);
    }
    if key_positions.is_empty() && groups.is_empty() {
        groups.insert(Vec::new(), Vec::new());
    }

    groups
        .into_iter()
        .map(|(key, members)| {
            let mut key_iter = key.into_iter();
            items
                .iter()
                .map(|item| match item {
                    ReturnItem::CountStar => Value::Number(members.len() as f64),
                    ReturnItem::Count { distinct, operand } => {
                        let values: Vec<Value> = members
                            .iter()
                            .map(|e| ref_count_value(graph, edges, e, operand))
                            .filter(|v| !v.is_null())
                            .collect();
                        let n = if *distinct {
                            let mut set = std::collections::BTreeSet::new();
                            values.into_iter().filter(|v| set.insert(v.clone())).count()
                        } else {
                            values.len()
                        };
                        Value::Number(n as f64)
                    }
                    _ => key_iter.next().expect("group key arity"),
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::eval::execute;
    use crate::query::parse_query;

    #[test]
    fn agrees_with_production_on_hand_cases() {
        let mut g = PropertyGraph::new();
        let a = g.upsert_node("Person", "Anna", vec![]);
        let b = g.upsert_node("Person", "Bruno", vec![]);
        let s = g.upsert_node("Sport", "Swimming", vec![]);
        g.upsert_edge(a, s, "PRACTICES", vec![]).unwrap();
        g.upsert_edge(b, s, "PRACTICES", vec![]).unwrap();
        g.upsert_edge(a, b, "KNOWS", vec![]).unwrap();

        for q in [
            "MATCH (p:Person) RETURN count(p)",
            "MATCH (p:Person)-[:PRACTICES]->(s:Sport) RETURN p.name",
            "MATCH (p)-[r]->(q) RETURN p.name, r, q.name",
            "MATCH (p:Person)-[:KNOWS]->(q:Person)-[:PRACTICES]->(s) RETURN q.name",
            "MATCH (p:Person), (q:Person) WHERE p.name < q.name RETURN p.name, q.name",
            "MATCH (x)-[:PRACTICES]->(s:Sport {name: 'Swimming'}) RETURN count(DISTINCT x)",
        ] {
            let ast = parse_query(q).unwrap();
            let fast = execute(&ast, &g).unwrap();
            let slow = execute_reference(&ast, &g).unwrap();
            assert_eq!(fast, slow, "divergence on {q}");
        }
    }
}
