//! Abstract syntax tree for the query subset, with semantic checks and a
//! canonical rendering that reparses to an equal AST.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::QueryError;
use crate::model::Value;

#[derive(Clone, Debug, PartialEq)]
pub struct QueryAst {
    pub patterns: Vec<PathPattern>,
    pub where_clause: Option<Expr>,
    pub return_clause: ReturnClause,
    pub order_by: Vec<OrderItem>,
    pub limit: Option<usize>,
}

/// A linear path: a start node pattern plus zero or more (relationship,
/// node) hops.
#[derive(Clone, Debug, PartialEq)]
pub struct PathPattern {
    pub start: NodePattern,
    pub segments: Vec<(RelPattern, NodePattern)>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct NodePattern {
    pub var: Option<String>,
    pub label: Option<String>,
    /// Property constraints in source order.
    pub props: Vec<(String, Value)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RelPattern {
    pub var: Option<String>,
    pub label: Option<String>,
    pub direction: Direction,
}

/// `Out` is `-[..]->`, `In` is `<-[..]-` (reading left to right).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Out,
    In,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Cmp { op: CmpOp, lhs: Operand, rhs: Operand },
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Operand {
    Literal(Value),
    /// `var.key`
    Property { var: String, key: String },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReturnClause {
    pub distinct: bool,
    pub items: Vec<ReturnItem>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ReturnItem {
    /// Bare variable: a node projects its `name` property, a relationship
    /// projects its label.
    Var(String),
    Property { var: String, key: String },
    CountStar,
    Count { distinct: bool, operand: CountOperand },
}

#[derive(Clone, Debug, PartialEq)]
pub enum CountOperand {
    Var(String),
    Property { var: String, key: String },
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrderItem {
    pub item: ReturnItem,
    pub descending: bool,
}

impl ReturnItem {
    pub fn is_aggregate(&self) -> bool {
        matches!(self, ReturnItem::CountStar | ReturnItem::Count { .. })
    }

    /// Column header for this item in a result table.
    pub fn column_name(&self) -> String {
        format!("{self}")
    }
}

impl QueryAst {
    /// Variables bound by the MATCH clause (nodes and relationships).
    pub fn bound_vars(&self) -> BTreeSet<&str> {
        let mut vars = BTreeSet::new();
        for path in &self.patterns {
            if let Some(v) = &path.start.var {
                vars.insert(v.as_str());
            }
            for (rel, node) in &path.segments {
                if let Some(v) = &rel.var {
                    vars.insert(v.as_str());
                }
                if let Some(v) = &node.var {
                    vars.insert(v.as_str());
                }
            }
        }
        vars
    }

    /// Unbound-variable, duplicate-relationship-variable and ORDER BY
    /// projection checks.
    pub fn check_semantics(&self) -> Result<(), QueryError> {
        let bound = self.bound_vars();

        let mut rel_vars = BTreeSet::new();
        for path in &self.patterns {
            for (rel, _) in &path.segments {
                if let Some(v) = &rel.var {
                    if !rel_vars.insert(v.as_str()) {
                        return Err(QueryError::DuplicateRelVariable(v.clone()));
                    }
                }
            }
        }

        let check = |var: &str| -> Result<(), QueryError> {
            if bound.contains(var) {
                Ok(())
            } else {
                Err(QueryError::UnboundVariable(var.to_string()))
            }
        };

        if let Some(expr) = &self.where_clause {
            for var in expr.referenced_vars() {
                check(var)?;
            }
        }
        for item in &self.return_clause.items {
            for var in item.referenced_vars() {
                check(var)?;
            }
        }
        for order in &self.order_by {
            for var in order.item.referenced_vars() {
                check(var)?;
            }
            if !self.return_clause.items.contains(&order.item) {
                return Err(QueryError::OrderByNotProjected(order.item.column_name()));
            }
        }
        Ok(())
    }
}

impl Expr {
    pub fn referenced_vars(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Cmp { lhs, rhs, .. } => {
                for op in [lhs, rhs] {
                    if let Operand::Property { var, .. } = op {
                        out.push(var);
                    }
                }
            }
            Expr::And(a, b) | Expr::Or(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Expr::Not(e) => e.collect_vars(out),
        }
    }
}

impl ReturnItem {
    pub fn referenced_vars(&self) -> Vec<&str> {
        match self {
            ReturnItem::Var(v) => vec![v],
            ReturnItem::Property { var, .. } => vec![var],
            ReturnItem::CountStar => vec![],
            ReturnItem::Count { operand, .. } => match operand {
                CountOperand::Var(v) => vec![v],
                CountOperand::Property { var, .. } => vec![var],
            },
        }
    }
}

// --- canonical rendering -------------------------------------------------

fn fmt_literal(f: &mut fmt::Formatter<'_>, v: &Value) -> fmt::Result {
    match v {
        Value::Text(s) => write!(f, "'{}'", s.replace('\\', "\\\\").replace('\'', "\\'")),
        other => write!(f, "{other}"),
    }
}

impl fmt::Display for NodePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        if let Some(v) = &self.var {
            write!(f, "{v}")?;
        }
        if let Some(l) = &self.label {
            write!(f, ":{l}")?;
        }
        if !self.props.is_empty() {
            if self.var.is_some() || self.label.is_some() {
                write!(f, " ")?;
            }
            write!(f, "{{")?;
            for (i, (k, v)) in self.props.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{k}: ")?;
                fmt_literal(f, v)?;
            }
            write!(f, "}}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for RelPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let body = {
            let mut s = String::new();
            if let Some(v) = &self.var {
                s.push_str(v);
            }
            if let Some(l) = &self.label {
                s.push(':');
                s.push_str(l);
            }
            s
        };
        match self.direction {
            Direction::Out => write!(f, "-[{body}]->"),
            Direction::In => write!(f, "<-[{body}]-"),
        }
    }
}

impl fmt::Display for PathPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.start)?;
        for (rel, node) in &self.segments {
            write!(f, "{rel}{node}")?;
        }
        Ok(())
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "<>",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        };
        write!(f, "{s}")
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Literal(v) => fmt_literal(f, v),
            Operand::Property { var, key } => write!(f, "{var}.{key}"),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Cmp { op, lhs, rhs } => write!(f, "{lhs} {op} {rhs}"),
            Expr::And(a, b) => write!(f, "({a} AND {b})"),
            Expr::Or(a, b) => write!(f, "({a} OR {b})"),
            Expr::Not(e) => write!(f, "(NOT {e})"),
        }
    }
}

impl fmt::Display for ReturnItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReturnItem::Var(v) => write!(f, "{v}"),
            ReturnItem::Property { var, key } => write!(f, "{var}.{key}"),
            ReturnItem::CountStar => write!(f, "count(*)"),
            ReturnItem::Count { distinct, operand } => {
                write!(f, "count(")?;
                if *distinct {
                    write!(f, "DISTINCT ")?;
                }
                match operand {
                    CountOperand::Var(v) => write!(f, "{v}")?,
                    CountOperand::Property { var, key } => write!(f, "{var}.{key}")?,
                }
                write!(f, ")")
            }
        }
    }
}

impl fmt::Display for QueryAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MATCH ")?;
        for (i, p) in self.patterns.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{p}")?;
        }
        if let Some(w) = &self.where_clause {
            write!(f, " WHERE {w}")?;
        }
        write!(f, " RETURN ")?;
        if self.return_clause.distinct {
            write!(f, "DISTINCT ")?;
        }
        for (i, item) in self.return_clause.items.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{item}")?;
        }
        if !self.order_by.is_empty() {
            write!(f, " ORDER BY ")?;
            for (i, o) in self.order_by.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", o.item)?;
                if o.descending {
                    write!(f, " DESC")?;
                }
            }
        }
        if let Some(n) = self.limit {
            write!(f, " LIMIT {n}")?;
        }
        Ok(())
    }
}
