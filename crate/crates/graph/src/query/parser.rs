//! Recursive-descent parser producing a [`QueryAst`].

use crate::error::QueryError;
use crate::model::Value;
use crate::query::ast::*;
use crate::query::lexer::{Token, TokenKind};

pub struct Parser<'a> {
    tokens: &'a [Token],
    cursor: usize,
}

impl<'a> Parser<'a> {
    pub fn new(tokens: &'a [Token]) -> Self {
        Self { tokens, cursor: 0 }
    }

    fn peek(&self) -> &TokenKind {
        &self.tokens[self.cursor].kind
    }

    fn pos(&self) -> usize {
        self.tokens[self.cursor].pos
    }

    fn bump(&mut self) -> &TokenKind {
        let kind = &self.tokens[self.cursor].kind;
        if self.cursor + 1 < self.tokens.len() {
            self.cursor += 1;
        }
        kind
    }

    fn error(&self, expected: &str) -> QueryError {
        QueryError::SyntaxError {
            position: self.pos(),
            expected: expected.to_string(),
            found: self.peek().describe(),
        }
    }

    fn expect(&mut self, kind: TokenKind, expected: &str) -> Result<(), QueryError> {
        if *self.peek() == kind {
            self.bump();
            Ok(())
        } else {
            Err(self.error(expected))
        }
    }

    fn eat(&mut self, kind: TokenKind) -> bool {
        if *self.peek() == kind {
            self.bump();
            true
        } else {
            false
        }
    }

    fn ident(&mut self, expected: &str) -> Result<String, QueryError> {
        match self.peek().clone() {
            TokenKind::Ident(name) => {
                self.bump();
                Ok(name)
            }
            _ => Err(self.error(expected)),
        }
    }

    pub fn parse(&mut self) -> Result<QueryAst, QueryError> {
        self.expect(TokenKind::Match, "MATCH")?;
        let mut patterns = vec![self.path_pattern()?];
        while self.eat(TokenKind::Comma) {
            patterns.push(self.path_pattern()?);
        }

        let where_clause = if self.eat(TokenKind::Where) {
            Some(self.expr()?)
        } else {
            None
        };

        self.expect(TokenKind::Return, "RETURN")?;
        let distinct = self.eat(TokenKind::Distinct);
        let mut items = vec![self.return_item()?];
        while self.eat(TokenKind::Comma) {
            items.push(self.return_item()?);
        }

        let mut order_by = Vec::new();
        if self.eat(TokenKind::Order) {
            self.expect(TokenKind::By, "BY")?;
            loop {
                let item = self.return_item()?;
                let descending = if self.eat(TokenKind::Desc) {
                    true
                } else {
                    self.eat(TokenKind::Asc);
                    false
                };
                order_by.push(OrderItem { item, descending });
                if !self.eat(TokenKind::Comma) {
                    break;
                }
            }
        }

        let limit = if self.eat(TokenKind::Limit) {
            match self.peek().clone() {
                TokenKind::Num(n) if n >= 0.0 && n.fract() == 0.0 => {
                    self.bump();
                    Some(n as usize)
                }
                _ => return Err(self.error("non-negative integer")),
            }
        } else {
            None
        };

        if *self.peek() != TokenKind::Eof {
            return Err(self.error("end of query"));
        }

        Ok(QueryAst {
            patterns,
            where_clause,
            return_clause: ReturnClause { distinct, items },
            order_by,
            limit,
        })
    }

    fn path_pattern(&mut self) -> Result<PathPattern, QueryError> {
        let start = self.node_pattern()?;
        let mut segments = Vec::new();
        loop {
            let direction = if self.eat(TokenKind::Dash) {
                Direction::Out
            } else if self.eat(TokenKind::LeftArrow) {
                Direction::In
            } else {
                break;
            };
            self.expect(TokenKind::LBracket, "'['")?;
            let mut rel = RelPattern { var: None, label: None, direction };
            if let TokenKind::Ident(name) = self.peek().clone() {
                self.bump();
                rel.var = Some(name);
            }
            if self.eat(TokenKind::Colon) {
                rel.label = Some(self.ident("relationship label")?);
            }
            self.expect(TokenKind::RBracket, "']'")?;
            match direction {
                Direction::Out => self.expect(TokenKind::Arrow, "'->'")?,
                Direction::In => self.expect(TokenKind::Dash, "'-'")?,
            }
            let node = self.node_pattern()?;
            segments.push((rel, node));
        }
        Ok(PathPattern { start, segments })
    }

    fn node_pattern(&mut self) -> Result<NodePattern, QueryError> {
        self.expect(TokenKind::LParen, "'('")?;
        let mut pattern = NodePattern::default();
        if let TokenKind::Ident(name) = self.peek().clone() {
            self.bump();
            pattern.var = Some(name);
        }
        if self.eat(TokenKind::Colon) {
            pattern.label = Some(self.ident("node label")?);
        }
        if self.eat(TokenKind::LBrace) {
            if !self.eat(TokenKind::RBrace) {
                loop {
                    let key = self.ident("property key")?;
                    self.expect(TokenKind::Colon, "':'")?;
                    let value = self.literal()?;
                    pattern.props.push((key, value));
                    if !self.eat(TokenKind::Comma) {
                        break;
                    }
                }
                self.expect(TokenKind::RBrace, "'}'")?;
            }
        }
        self.expect(TokenKind::RParen, "')'")?;
        Ok(pattern)
    }

    fn literal(&mut self) -> Result<Value, QueryError> {
        match self.peek().clone() {
            TokenKind::Str(s) => {
                self.bump();
                Ok(Value::Text(s))
            }
            TokenKind::Num(n) => {
                self.bump();
                Ok(Value::Number(n))
            }
            TokenKind::True => {
                self.bump();
                Ok(Value::Bool(true))
            }
            TokenKind::False => {
                self.bump();
                Ok(Value::Bool(false))
            }
            _ => Err(self.error("literal value")),
        }
    }

    // expr := and_expr (OR and_expr)*
    fn expr(&mut self) -> Result<Expr, QueryError> {
        let mut lhs = self.and_expr()?;
        while self.eat(TokenKind::Or) {
            let rhs = self.and_expr()?;
            lhs = Expr::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Expr, QueryError> {
        let mut lhs = self.not_expr()?;
        while self.eat(TokenKind::And) {
            let rhs = self.not_expr()?;
            lhs = Expr::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> Result<Expr, QueryError> {
        if self.eat(TokenKind::Not) {
            return Ok(Expr::Not(Box::new(self.not_expr()?)));
        }
        if *self.peek() == TokenKind::LParen {
            // Parenthesized boolean expression. A '(' can only start a
            // comparison operand if it were grouping, which the grammar
            // does not allow for operands, so this is unambiguous.
            self.bump();
            let inner = self.expr()?;
            self.expect(TokenKind::RParen, "')'")?;
            return Ok(inner);
        }
        self.comparison()
    }

    fn comparison(&mut self) -> Result<Expr, QueryError> {
        let lhs = self.operand()?;
        let op = match self.peek() {
            TokenKind::Eq => CmpOp::Eq,
            TokenKind::Ne => CmpOp::Ne,
            TokenKind::Lt => CmpOp::Lt,
            TokenKind::Le => CmpOp::Le,
            TokenKind::Gt => CmpOp::Gt,
            TokenKind::Ge => CmpOp::Ge,
            _ => return Err(self.error("comparison operator")),
        };
        self.bump();
        let rhs = self.operand()?;
        Ok(Expr::Cmp { op, lhs, rhs })
    }

    fn operand(&mut self) -> Result<Operand, QueryError> {
        if let TokenKind::Ident(name) = self.peek().clone() {
            self.bump();
            self.expect(TokenKind::Dot, "'.' (operands are var.property or literals)")?;
            let key = self.ident("property key")?;
            return Ok(Operand::Property { var: name, key });
        }
        Ok(Operand::Literal(self.literal()?))
    }

    fn return_item(&mut self) -> Result<ReturnItem, QueryError> {
        if self.eat(TokenKind::Count) {
            self.expect(TokenKind::LParen, "'('")?;
            if self.eat(TokenKind::Star) {
                self.expect(TokenKind::RParen, "')'")?;
                return Ok(ReturnItem::CountStar);
            }
            let distinct = self.eat(TokenKind::Distinct);
            let var = self.ident("variable")?;
            let operand = if self.eat(TokenKind::Dot) {
                let key = self.ident("property key")?;
                CountOperand::Property { var, key }
            } else {
                CountOperand::Var(var)
            };
            self.expect(TokenKind::RParen, "')'")?;
            return Ok(ReturnItem::Count { distinct, operand });
        }
        let var = self.ident("variable or count(...)")?;
        if self.eat(TokenKind::Dot) {
            let key = self.ident("property key")?;
            Ok(ReturnItem::Property { var, key })
        } else {
            Ok(ReturnItem::Var(var))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::parse_query;

    #[test]
    fn parses_minimal_count_query() {
        let ast = parse_query("MATCH (p:Person) RETURN count(p)").unwrap();
        assert_eq!(ast.patterns.len(), 1);
        assert_eq!(ast.patterns[0].start.label.as_deref(), Some("Person"));
        assert_eq!(
            ast.return_clause.items,
            vec![ReturnItem::Count {
                distinct: false,
                operand: CountOperand::Var("p".to_string())
            }]
        );
    }

    #[test]
    fn parses_path_with_property_map() {
        let ast = parse_query(
            "MATCH (p:Person)-[:PRACTICES]->(s:Sport {name: 'Swimming'}) RETURN p.name",
        )
        .unwrap();
        let path = &ast.patterns[0];
        assert_eq!(path.segments.len(), 1);
        let (rel, node) = &path.segments[0];
        assert_eq!(rel.label.as_deref(), Some("PRACTICES"));
        assert_eq!(rel.direction, Direction::Out);
        assert_eq!(node.label.as_deref(), Some("Sport"));
        assert_eq!(
            node.props,
            vec![("name".to_string(), Value::Text("Swimming".to_string()))]
        );
    }

    #[test]
    fn unbound_return_variable_is_rejected() {
        let err = parse_query("MATCH (p) RETURN q.name").unwrap_err();
        assert_eq!(err, QueryError::UnboundVariable("q".to_string()));
    }

    #[test]
    fn unbound_where_variable_is_rejected() {
        let err = parse_query("MATCH (p) WHERE z.age > 3 RETURN p.name").unwrap_err();
        assert_eq!(err, QueryError::UnboundVariable("z".to_string()));
    }

    #[test]
    fn duplicate_rel_variable_is_rejected() {
        let err =
            parse_query("MATCH (a)-[r]->(b), (b)-[r]->(c) RETURN a.name").unwrap_err();
        assert_eq!(err, QueryError::DuplicateRelVariable("r".to_string()));
    }

    #[test]
    fn order_by_must_be_projected() {
        let err = parse_query("MATCH (p) RETURN p.name ORDER BY p.age").unwrap_err();
        assert_eq!(err, QueryError::OrderByNotProjected("p.age".to_string()));
    }

    #[test]
    fn syntax_error_carries_position_and_expectation() {
        let err = parse_query("MATCH (p RETURN p.name").unwrap_err();
        match err {
            QueryError::SyntaxError { position, expected, .. } => {
                assert_eq!(position, 9);
                assert!(expected.contains(')'), "expected ')' hint, got {expected}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn incoming_direction_and_where_parse() {
        let ast = parse_query(
            "MATCH (s:Sport)<-[r:PRACTICES]-(p:Person) \
             WHERE r.frequency_per_week >= 2 AND NOT p.name = 'Anna' \
             RETURN DISTINCT p.name ORDER BY p.name DESC LIMIT 3",
        )
        .unwrap();
        assert_eq!(ast.patterns[0].segments[0].0.direction, Direction::In);
        assert!(ast.return_clause.distinct);
        assert!(ast.order_by[0].descending);
        assert_eq!(ast.limit, Some(3));
    }

    #[test]
    fn render_reparses_to_equal_ast() {
        let queries = [
            "MATCH (p:Person) RETURN count(*)",
            "MATCH (p:Person {name: 'Anna'})-[r:PRACTICES]->(s:Sport) RETURN s.name, r.frequency_per_week",
            "MATCH (a)-[x:PERFORMED]->(y:YogaPose) WHERE x.outcome = 'failed' OR y.name <> 'tree' RETURN y.name, count(*) ORDER BY count(*) DESC LIMIT 2",
            "MATCH (a:Person), (b:Person) WHERE a.age < b.age RETURN DISTINCT a.name",
            "MATCH (p:Person) RETURN count(DISTINCT p.name)",
        ];
        for q in queries {
            let ast = parse_query(q).unwrap();
            let rendered = ast.to_string();
            let reparsed = parse_query(&rendered)
                .unwrap_or_else(|e| panic!("rendered query failed to parse: {rendered}: {e}"));
            assert_eq!(ast, reparsed, "round-trip mismatch for {q}");
        }
    }
}
