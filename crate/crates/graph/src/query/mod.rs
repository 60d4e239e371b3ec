//! The query language: lexer -> parser -> AST -> evaluator, plus the
//! brute-force reference evaluator the production engine is checked
//! against.

pub mod ast;
pub mod eval;
pub mod lexer;
pub mod parser;
pub mod reference;

use crate::error::QueryError;
use ast::QueryAst;

/// Parse a query string into a checked AST. Every variable referenced in
/// WHERE, RETURN or ORDER BY must be bound in MATCH, and ORDER BY items
/// must appear among the RETURN items.
pub fn parse_query(text: &str) -> Result<QueryAst, QueryError> {
    let tokens = lexer::lex(text)?;
    let ast = parser::Parser::new(&tokens).parse()?;
    ast.check_semantics()?;
    Ok(ast)
}
