//! Seeded random graphs and grammar-valid random queries for the
//! equivalence test suites.

use rand::rngs::StdRng;
use rand::seq::IndexedRandom;
use rand::Rng;

use crate::model::{NodeId, PropertyGraph, Value};
use crate::query::ast::*;

const NODE_LABELS: &[&str] = &["Person", "Sport", "Hobby", "YogaPose", "Tag"];
const EDGE_LABELS: &[&str] = &["PRACTICES", "INTERESTED_IN", "PERFORMED", "LINKED"];
const TEXT_PROPS: &[&str] = &["name", "outcome", "level"];
const NUM_PROPS: &[&str] = &["age", "frequency_per_week", "weight"];
const TEXT_VALUES: &[&str] = &["completed", "failed", "beginner", "advanced"];

/// Random graph with at most `max_nodes` nodes and `max_edges` edges. Every
/// node carries a name; extra text/number/bool properties are sprinkled in.
pub fn random_graph(rng: &mut StdRng, max_nodes: usize, max_edges: usize) -> PropertyGraph {
    let mut g = PropertyGraph::new();
    let n_nodes = rng.random_range(1..=max_nodes);
    let mut ids: Vec<NodeId> = Vec::with_capacity(n_nodes);
    for i in 0..n_nodes {
        let label = *NODE_LABELS.choose(rng).unwrap();
        let name = format!("n{i}");
        let mut props: Vec<(String, Value)> = Vec::new();
        if rng.random_bool(0.6) {
            props.push((
                "age".to_string(),
                Value::Number(rng.random_range(1..=60) as f64),
            ));
        }
        if rng.random_bool(0.4) {
            props.push((
                "outcome".to_string(),
                Value::Text(TEXT_VALUES.choose(rng).unwrap().to_string()),
            ));
        }
        if rng.random_bool(0.3) {
            props.push(("active".to_string(), Value::Bool(rng.random_bool(0.5))));
        }
        ids.push(g.upsert_node(label, &name, props));
    }
    let n_edges = rng.random_range(0..=max_edges);
    for _ in 0..n_edges {
        let from = *ids.choose(rng).unwrap();
        let to = *ids.choose(rng).unwrap();
        let label = *EDGE_LABELS.choose(rng).unwrap();
        let mut props: Vec<(String, Value)> = Vec::new();
        if rng.random_bool(0.5) {
            props.push((
                "frequency_per_week".to_string(),
                Value::Number(rng.random_range(1..=7) as f64),
            ));
        }
        if rng.random_bool(0.4) {
            props.push((
                "outcome".to_string(),
                Value::Text(TEXT_VALUES.choose(rng).unwrap().to_string()),
            ));
        }
        g.upsert_edge(from, to, label, props).expect("endpoints exist");
    }
    g
}

/// Grammar-valid random query over vocabulary drawn from `graph` so that a
/// useful fraction of queries produce non-empty results. Keeps the total
/// node-slot count at three or fewer so the brute-force reference stays
/// tractable.
pub fn random_query(rng: &mut StdRng, graph: &PropertyGraph) -> QueryAst {
    let shape = rng.random_range(0..10);
    let patterns: Vec<PathPattern> = match shape {
        // single node
        0 | 1 => {
            let p = node_pattern(rng, graph, Some("a"));
            vec![PathPattern { start: p, segments: vec![] }]
        }
        // one hop
        2..=5 => {
            let start = node_pattern(rng, graph, Some("a"));
            let rel = rel_pattern(rng, Some("r"));
            let end = node_pattern(rng, graph, Some("b"));
            vec![PathPattern { start, segments: vec![(rel, end)] }]
        }
        // two hops
        6 | 7 => {
            let start = node_pattern(rng, graph, Some("a"));
            let r1 = rel_pattern(rng, Some("r"));
            let mid = node_pattern(rng, graph, Some("b"));
            let r2 = rel_pattern(rng, Some("s"));
            let end = node_pattern(rng, graph, Some("c"));
            vec![PathPattern { start, segments: vec![(r1, mid), (r2, end)] }]
        }
        // two patterns joined on a shared variable
        _ => {
            let start1 = node_pattern(rng, graph, Some("a"));
            let rel1 = rel_pattern(rng, Some("r"));
            let end1 = node_pattern(rng, graph, Some("b"));
            let rel2 = rel_pattern(rng, Some("s"));
            let end2 = node_pattern(rng, graph, Some("c"));
            vec![
                PathPattern { start: start1, segments: vec![(rel1, end1)] },
                PathPattern {
                    start: NodePattern { var: Some("a".into()), label: None, props: vec![] },
                    segments: vec![(rel2, end2)],
                },
            ]
        }
    };

    // Variable pools come from the patterns actually built; the pattern
    // generators drop variables to exercise anonymous patterns.
    let mut node_vars: Vec<String> = Vec::new();
    let mut rel_vars: Vec<String> = Vec::new();
    for path in &patterns {
        if let Some(v) = &path.start.var {
            node_vars.push(v.clone());
        }
        for (rel, node) in &path.segments {
            if let Some(v) = &rel.var {
                rel_vars.push(v.clone());
            }
            if let Some(v) = &node.var {
                node_vars.push(v.clone());
            }
        }
    }
    node_vars.dedup();

    let where_clause = if !node_vars.is_empty() && rng.random_bool(0.55) {
        Some(random_expr(rng, &node_vars, &rel_vars, 0))
    } else {
        None
    };

    // RETURN items
    let mut items: Vec<ReturnItem> = Vec::new();
    let aggregate = node_vars.is_empty() || rng.random_bool(0.35);
    if aggregate {
        if !node_vars.is_empty() && rng.random_bool(0.5) {
            // optional group key
            items.push(random_plain_item(rng, &node_vars, &rel_vars));
        }
        let item = match node_vars.choose(rng) {
            None => ReturnItem::CountStar,
            Some(var) => match rng.random_range(0..4) {
                0 => ReturnItem::CountStar,
                1 => ReturnItem::Count {
                    distinct: false,
                    operand: CountOperand::Var(var.clone()),
                },
                2 => ReturnItem::Count {
                    distinct: true,
                    operand: CountOperand::Var(var.clone()),
                },
                _ => ReturnItem::Count {
                    distinct: rng.random_bool(0.5),
                    operand: CountOperand::Property {
                        var: var.clone(),
                        key: random_prop_key(rng),
                    },
                },
            },
        };
        items.push(item);
    } else {
        for _ in 0..rng.random_range(1..=2) {
            items.push(random_plain_item(rng, &node_vars, &rel_vars));
        }
        items.dedup();
    }

    let order_by = if rng.random_bool(0.4) {
        let item = items.choose(rng).unwrap().clone();
        vec![OrderItem { item, descending: rng.random_bool(0.5) }]
    } else {
        vec![]
    };

    let limit = if rng.random_bool(0.3) {
        Some(rng.random_range(1..=5))
    } else {
        None
    };

    QueryAst {
        patterns,
        where_clause,
        return_clause: ReturnClause { distinct: rng.random_bool(0.25), items },
        order_by,
        limit,
    }
}

fn random_prop_key(rng: &mut StdRng) -> String {
    let pool = [TEXT_PROPS, NUM_PROPS].concat();
    pool.choose(rng).unwrap().to_string()
}

fn random_plain_item(rng: &mut StdRng, node_vars: &[String], rel_vars: &[String]) -> ReturnItem {
    match rng.random_range(0..5) {
        0 => ReturnItem::Var(node_vars.choose(rng).unwrap().clone()),
        1 if !rel_vars.is_empty() => {
            ReturnItem::Property { var: rel_vars.choose(rng).unwrap().clone(), key: "outcome".into() }
        }
        _ => ReturnItem::Property {
            var: node_vars.choose(rng).unwrap().clone(),
            key: random_prop_key(rng),
        },
    }
}

fn node_pattern(rng: &mut StdRng, graph: &PropertyGraph, var: Option<&str>) -> NodePattern {
    let var = if rng.random_bool(0.85) {
        var.map(str::to_string)
    } else {
        None
    };
    let label = if rng.random_bool(0.6) {
        Some(NODE_LABELS.choose(rng).unwrap().to_string())
    } else {
        None
    };
    let mut props = Vec::new();
    if rng.random_bool(0.3) {
        // sample a real node name half the time so matches happen
        let name = if rng.random_bool(0.5) {
            graph
                .nodes()
                .map(|n| n.name().to_string())
                .nth(rng.random_range(0..graph.node_count().max(1)))
                .unwrap_or_else(|| "n0".to_string())
        } else {
            format!("n{}", rng.random_range(0..40))
        };
        props.push(("name".to_string(), Value::Text(name)));
    }
    NodePattern { var, label, props }
}

fn rel_pattern(rng: &mut StdRng, var: Option<&str>) -> RelPattern {
    RelPattern {
        var: if rng.random_bool(0.6) { var.map(str::to_string) } else { None },
        label: if rng.random_bool(0.6) {
            Some(EDGE_LABELS.choose(rng).unwrap().to_string())
        } else {
            None
        },
        direction: if rng.random_bool(0.7) { Direction::Out } else { Direction::In },
    }
}

/// Returns the operand and whether it leans numeric, so the literal side can
/// usually be type-consistent.
fn random_operand(
    rng: &mut StdRng,
    node_vars: &[String],
    rel_vars: &[String],
) -> (Operand, bool) {
    if rng.random_bool(0.7) || rel_vars.is_empty() {
        let var = node_vars.choose(rng).unwrap().clone();
        let key = random_prop_key(rng);
        let numeric = NUM_PROPS.contains(&key.as_str());
        (Operand::Property { var, key }, numeric)
    } else {
        let var = rel_vars.choose(rng).unwrap().clone();
        let key = if rng.random_bool(0.5) { "outcome" } else { "frequency_per_week" };
        (
            Operand::Property { var, key: key.to_string() },
            key == "frequency_per_week",
        )
    }
}

fn random_expr(
    rng: &mut StdRng,
    node_vars: &[String],
    rel_vars: &[String],
    depth: usize,
) -> Expr {
    if depth < 2 && rng.random_bool(0.3) {
        let a = random_expr(rng, node_vars, rel_vars, depth + 1);
        let b = random_expr(rng, node_vars, rel_vars, depth + 1);
        return match rng.random_range(0..3) {
            0 => Expr::And(Box::new(a), Box::new(b)),
            1 => Expr::Or(Box::new(a), Box::new(b)),
            _ => Expr::Not(Box::new(a)),
        };
    }
    let (lhs, numeric) = random_operand(rng, node_vars, rel_vars);
    let op = *[CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge]
        .choose(rng)
        .unwrap();
    // mostly type-consistent literals; occasional mismatch exercises the
    // TypeMismatch path in both evaluators
    let rhs = if rng.random_bool(0.95) {
        if numeric {
            Operand::Literal(Value::Number(rng.random_range(0..=60) as f64))
        } else {
            let v = if rng.random_bool(0.5) {
                TEXT_VALUES.choose(rng).unwrap().to_string()
            } else {
                format!("n{}", rng.random_range(0..30))
            };
            Operand::Literal(Value::Text(v))
        }
    } else if numeric {
        Operand::Literal(Value::Text("oops".into()))
    } else {
        Operand::Literal(Value::Number(1.0))
    };
    Expr::Cmp { op, lhs, rhs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn generated_queries_pass_semantic_checks_and_render_round_trip() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..200 {
            let g = random_graph(&mut rng, 12, 20);
            let ast = random_query(&mut rng, &g);
            ast.check_semantics().expect("generated query must be valid");
            let text = ast.to_string();
            let reparsed = crate::query::parse_query(&text)
                .unwrap_or_else(|e| panic!("generated query failed to parse: {text}: {e}"));
            assert_eq!(ast, reparsed, "render/parse mismatch for {text}");
        }
    }
}
