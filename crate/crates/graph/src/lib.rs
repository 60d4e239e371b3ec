//! In-memory property graph with a declarative query language.
//!
//! The graph is the long-term memory substrate for the tutor agent: nodes
//! and directed edges carry a label plus key/value properties, nodes are
//! unified across users on their `(label, name)` pair, and retrieval runs
//! through a small Cypher-style query language (`MATCH` / `WHERE` /
//! `RETURN` / `count` / `DISTINCT` / `ORDER BY` / `LIMIT`).
//!
//! The query pipeline is a classic lexer -> parser -> AST -> evaluator
//! chain. Next to the production evaluator lives [`reference`], a
//! deliberately naive brute-force evaluator that enumerates every node and
//! edge assignment; the two must agree on every query, which is what the
//! equivalence test suite checks on randomized graphs from [`gen`].
//!
//! The full grammar ships in `docs/query-grammar.md` at the repository
//! root.

pub mod error;
pub mod gen;
pub mod model;
pub mod persist;
pub mod query;
pub mod text;

pub use error::{GraphError, QueryError};
pub use model::{Edge, Node, NodeId, PropertyGraph, Value};
pub use persist::export_dot;
pub use query::ast::QueryAst;
pub use query::eval::{execute, execute_with_provenance, ResultTable};
pub use query::parse_query;
