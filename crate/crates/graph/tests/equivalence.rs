//! Production evaluator vs brute-force reference on randomized graphs and
//! queries. Every query string also goes through the parser, so the full
//! lexer -> parser -> evaluator chain is exercised.

use rand::rngs::StdRng;
use rand::SeedableRng;

use mementor_graph::gen::{random_graph, random_query};
use mementor_graph::query::reference::execute_reference;
use mementor_graph::{execute, parse_query};

#[test]
fn evaluators_agree_on_random_graphs_and_queries() {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let mut nonempty = 0usize;
    for graph_idx in 0..100 {
        let graph = random_graph(&mut rng, 30, 60);
        for query_idx in 0..20 {
            let ast = random_query(&mut rng, &graph);
            let text = ast.to_string();
            let reparsed = parse_query(&text)
                .unwrap_or_else(|e| panic!("graph {graph_idx} query {query_idx}: {text}: {e}"));
            assert_eq!(ast, reparsed);

            let fast = execute(&reparsed, &graph);
            let slow = execute_reference(&reparsed, &graph);
            match (&fast, &slow) {
                (Ok(a), Ok(b)) => {
                    assert_eq!(a, b, "graph {graph_idx} query {query_idx} diverged: {text}");
                    if !a.is_empty() {
                        nonempty += 1;
                    }
                }
                (Err(a), Err(b)) => {
                    assert_eq!(a, b, "graph {graph_idx} query {query_idx} errors diverged: {text}")
                }
                _ => panic!(
                    "graph {graph_idx} query {query_idx}: one evaluator errored: {text}\nfast: {fast:?}\nslow: {slow:?}"
                ),
            }
        }
    }
    // the generator should produce a healthy share of non-trivial results
    assert!(nonempty > 200, "only {nonempty} non-empty results out of 2000");
}
