//! Production query evaluator: pattern matching via candidate filtering and
//! path extension, then WHERE, projection/aggregation, DISTINCT, ORDER BY
//! and LIMIT, in that order.
//!
//! Matching uses homomorphism semantics: distinct variables may bind the
//! same node or edge. Rows without an ORDER BY are sorted lexicographically
//! over all columns; ORDER BY keys are applied first with the full row as
//! tie-break, so result order is always deterministic.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::QueryError;
use crate::model::{Edge, Node, NodeId, PropertyGraph, Value};
use crate::query::ast::*;

#[derive(Clone, Debug, PartialEq)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl ResultTable {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Tab-separated rendering with a header line.
    pub fn render(&self) -> String {
        let mut out = self.columns.join("\t");
        for row in &self.rows {
            out.push('\n');
            out.push_str(
                &row.iter().map(Value::to_string).collect::<Vec<_>>().join("\t"),
            );
        }
        out
    }
}

impl fmt::Display for ResultTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render())
    }
}

type EdgeKey = (NodeId, NodeId, String);

#[derive(Clone, Debug, PartialEq)]
enum Bound {
    Node(NodeId),
    Edge(EdgeKey),
}

type Binding = BTreeMap<String, Bound>;

pub fn execute(ast: &QueryAst, graph: &PropertyGraph) -> Result<ResultTable, QueryError> {
    execute_with_provenance(ast, graph).map(|(table, _)| table)
}

/// Like [`execute`], additionally returning the distinct node ids bound in
/// rows that survived the WHERE clause (named variables only).
pub fn execute_with_provenance(
    ast: &QueryAst,
    graph: &PropertyGraph,
) -> Result<(ResultTable, Vec<NodeId>), QueryError> {
    let mut bindings: Vec<Binding> = vec![Binding::new()];
    for path in &ast.patterns {
        bindings = match_path(graph, &bindings, path);
    }

    if let Some(expr) = &ast.where_clause {
        let mut kept = Vec::new();
        for binding in bindings {
            if eval_expr(graph, &binding, expr)? {
                kept.push(binding);
            }
        }
        bindings = kept;
    }

    let mut provenance: Vec<NodeId> = bindings
        .iter()
        .flat_map(|b| {
            b.values().filter_map(|bound| match bound {
                Bound::Node(id) => Some(*id),
                Bound::Edge(_) => None,
            })
        })
        .collect();
    provenance.sort();
    provenance.dedup();

    let items = &ast.return_clause.items;
    let columns: Vec<String> = items.iter().map(ReturnItem::column_name).collect();

    let mut rows: Vec<Vec<Value>> = if items.iter().any(ReturnItem::is_aggregate) {
        aggregate_rows(graph, &bindings, items)
    } else {
        bindings
            .iter()
            .map(|b| items.iter().map(|item| project_item(graph, b, item)).collect())
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
            let idx = items
                .iter()
                .position(|item| *item == o.item)
                .expect("checked by semantics");
            (idx, o.descending)
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

    Ok((ResultTable { columns, rows }, provenance))
}

fn node_matches(node: &Node, pattern: &NodePattern) -> bool {
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

fn edge_matches(edge: &Edge, pattern: &RelPattern) -> bool {
    match &pattern.label {
        Some(label) => edge.label == *label,
        None => true,
    }
}

/// Extend each binding with every assignment satisfying `path`.
fn match_path(graph: &PropertyGraph, bindings: &[Binding], path: &PathPattern) -> Vec<Binding> {
    let mut out = Vec::new();
    for binding in bindings {
        // start node candidates
        let starts: Vec<NodeId> = match path.start.var.as_ref().and_then(|v| binding.get(v)) {
            Some(Bound::Node(id)) => {
                if node_matches(&graph.node(*id).expect("bound node exists"), &path.start) {
                    vec![*id]
                } else {
                    vec![]
                }
            }
            Some(Bound::Edge(_)) => vec![],
            None => graph
                .nodes()
                .filter(|n| node_matches(n, &path.start))
                .map(|n| n.id)
                .collect(),
        };
        for start in starts {
            let mut base = binding.clone();
            if let Some(v) = &path.start.var {
                base.insert(v.clone(), Bound::Node(start));
            }
            extend_segments(graph, base, start, &path.segments, &mut out);
        }
    }
    out
}

fn extend_segments(
    graph: &PropertyGraph,
    binding: Binding,
    current: NodeId,
    segments: &[(RelPattern, NodePattern)],
    out: &mut Vec<Binding>,
) {
    let Some(((rel, node), rest)) = segments.split_first() else {
        out.push(binding);
        return;
    };
    for edge in graph.edges() {
        let next = match rel.direction {
            Direction::Out if edge.from == current => edge.to,
            Direction::In if edge.to == current => edge.from,
            _ => continue,
        };
        if !edge_matches(edge, rel) {
            continue;
        }
        let key: EdgeKey = (edge.from, edge.to, edge.label.clone());
        if let Some(v) = &rel.var {
            if let Some(existing) = binding.get(v) {
                if *existing != Bound::Edge(key.clone()) {
                    continue;
                }
            }
        }
        let next_node = graph.node(next).expect("edge endpoint exists");
        if !node_matches(next_node, node) {
            continue;
        }
        if let Some(v) = &node.var {
            if let Some(existing) = binding.get(v) {
                if *existing != Bound::Node(next) {
                    continue;
                }
            }
        }
        let mut extended = binding.clone();
        if let Some(v) = &rel.var {
            extended.insert(v.clone(), Bound::Edge(key));
        }
        if let Some(v) = &node.var {
            extended.insert(v.clone(), Bound::Node(next));
        }
        extend_segments(graph, extended, next, rest, out);
    }
}

fn property_of(graph: &PropertyGraph, bound: &Bound, key: &str) -> Value {
    match bound {
        Bound::Node(id) => graph
            .node(*id)
            .and_then(|n| n.properties.get(key).cloned())
            .unwrap_or(Value::Null),
        Bound::Edge(edge_key) => graph
            .edges()
            .find(|e| (e.from, e.to, e.label.clone()) == *edge_key)
            .and_then(|e| e.properties.get(key).cloned())
            .unwrap_or(Value::Null),
    }
}

fn operand_value(graph: &PropertyGraph, binding: &Binding, operand: &Operand) -> Value {
    match operand {
        Operand::Literal(v) => v.clone(),
        Operand::Property { var, key } => match binding.get(var) {
            Some(bound) => property_of(graph, bound, key),
            None => Value::Null,
        },
    }
}

/// Comparison semantics: any null operand makes the comparison false;
/// comparing two non-null values of different types is a `TypeMismatch`.
pub(crate) fn compare(op: CmpOp, lhs: &Value, rhs: &Value) -> Result<bool, QueryError> {
    if lhs.is_null() || rhs.is_null() {
        return Ok(false);
    }
    if std::mem::discriminant(lhs) != std::mem::discriminant(rhs) {
        return Err(QueryError::TypeMismatch {
            lhs: lhs.type_name().to_string(),
            rhs: rhs.type_name().to_string(),
        });
    }
    let ord = lhs.cmp(rhs);
    Ok(match op {
        CmpOp::Eq => ord == std::cmp::Ordering::Equal,
        CmpOp::Ne => ord != std::cmp::Ordering::Equal,
        CmpOp::Lt => ord == std::cmp::Ordering::Less,
        CmpOp::Le => ord != std::cmp::Ordering::Greater,
        CmpOp::Gt => ord == std::cmp::Ordering::Greater,
        CmpOp::Ge => ord != std::cmp::Ordering::Less,
    })
}

fn eval_expr(graph: &PropertyGraph, binding: &Binding, expr: &Expr) -> Result<bool, QueryError> {
    match expr {
        Expr::Cmp { op, lhs, rhs } => {
            let l = operand_value(graph, binding, lhs);
            let r = operand_value(graph, binding, rhs);
            compare(*op, &l, &r)
        }
        Expr::And(a, b) => Ok(eval_expr(graph, binding, a)? && eval_expr(graph, binding, b)?),
        Expr::Or(a, b) => Ok(eval_expr(graph, binding, a)? || eval_expr(graph, binding, b)?),
        Expr::Not(e) => Ok(!eval_expr(graph, binding, e)?),
    }
}

fn project_item(graph: &PropertyGraph, binding: &Binding, item: &ReturnItem) -> Value {
    match item {
        ReturnItem::Var(v) => match binding.get(v) {
            Some(Bound::Node(id)) => property_of(graph, &Bound::Node(*id), "name"),
            Some(Bound::Edge(key)) => Value::Text(key.2.clone()),
            None => Value::Null,
        },
        ReturnItem::Property { var, key } => match binding.get(var) {
            Some(bound) => property_of(graph, bound, key),
            None => Value::Null,
        },
        ReturnItem::CountStar | ReturnItem::Count { .. } => {
            unreachable!("aggregates handled by aggregate_rows")
        }
    }
}

fn count_value(graph: &PropertyGraph, binding: &Binding, operand: &CountOperand) -> Value {
    match operand {
        CountOperand::Var(v) => match binding.get(v) {
            Some(Bound::Node(id)) => Value::Text(format!("n{}", id.0)),
            Some(Bound::Edge(key)) => Value::Text(format!("e{}-{}-{}", key.0 .0, key.1 .0, key.2)),
            None => Value::Null,
        },
        CountOperand::Property { var, key } => match binding.get(var) {
            Some(bound) => property_of(graph, bound, key),
            None => Value::Null,
        },
    }
}

/// Implicit grouping: non-aggregate items are the group keys, count items
/// are computed per group. With no group keys the whole binding set is one
/// group, so `count(*)` over an empty match yields a single `0` row.
fn aggregate_rows(
    graph: &PropertyGraph,
    bindings: &[Binding],
    items: &[ReturnItem],
) -> Vec<Vec<Value>> {
    let key_positions: Vec<usize> = items
        .iter()
        .enumerate()
        .filter(|(_, item)| !item.is_aggregate())
        .map(|(i, _)| i)
        .collect();

    let mut groups: BTreeMap<Vec<Value>, Vec<&Binding>> = BTreeMap::new();
    for binding in bindings {
        let key: Vec<Value> = key_positions
            .iter()
            .map(|&i| project_item(graph, binding, &items[i]))
            .collect();
        groups.entry(key).or_default().push(binding);
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
                            .map(|b| count_value(graph, b, operand))
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
