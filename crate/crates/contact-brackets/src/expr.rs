//! Symbolic scalar expressions over chart coordinates.
//!
//! The grammar is closed on purpose — it keeps differentiation total and
//! exact:
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := base ('^' integer)?
//! base   := number | ident | func '(' expr ')' | '(' expr ')' | '-' base
//! func   := sqrt | sin | cos | exp | log
//! ```
//!
//! Values are `f64` throughout. The only simplification performed is
//! constant folding at construction time; identity checks elsewhere in the
//! crate are numeric-at-sample-points, never canonical-form equality.
//! Expressions are immutable and evaluation is pure, so sharing one across
//! threads is safe.

use std::fmt;
use std::sync::Arc;

use crate::chart::{Chart, ChartPoint};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryFn {
    Sqrt,
    Sin,
    Cos,
    Exp,
    Log,
}

impl UnaryFn {
    fn name(self) -> &'static str {
        match self {
            UnaryFn::Sqrt => "sqrt",
            UnaryFn::Sin => "sin",
            UnaryFn::Cos => "cos",
            UnaryFn::Exp => "exp",
            UnaryFn::Log => "log",
        }
    }

    fn from_name(name: &str) -> Option<UnaryFn> {
        Some(match name {
            "sqrt" => UnaryFn::Sqrt,
            "sin" => UnaryFn::Sin,
            "cos" => UnaryFn::Cos,
            "exp" => UnaryFn::Exp,
            "log" => UnaryFn::Log,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Node {
    Const(f64),
    Var(usize),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    /// Power with a constant integer exponent.
    Pow(Box<Node>, i32),
    Neg(Box<Node>),
    Apply(UnaryFn, Box<Node>),
}

// Smart constructors with constant folding. `div` deliberately does not
// fold `0 / x`, which would erase a division-by-zero domain error.
fn add(a: Node, b: Node) -> Node {
    match (a, b) {
        (Node::Const(x), Node::Const(y)) => Node::Const(x + y),
        (Node::Const(0.0), b) => b,
        (a, Node::Const(0.0)) => a,
        (a, b) => Node::Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Node, b: Node) -> Node {
    match (a, b) {
        (Node::Const(x), Node::Const(y)) => Node::Const(x - y),
        (a, Node::Const(0.0)) => a,
        (Node::Const(0.0), b) => neg(b),
        (a, b) => Node::Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Node, b: Node) -> Node {
    match (a, b) {
        (Node::Const(x), Node::Const(y)) => Node::Const(x * y),
        (Node::Const(0.0), _) | (_, Node::Const(0.0)) => Node::Const(0.0),
        (Node::Const(1.0), b) => b,
        (a, Node::Const(1.0)) => a,
        (a, b) => Node::Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Node, b: Node) -> Node {
    match (a, b) {
        (Node::Const(x), Node::Const(y)) if y != 0.0 => Node::Const(x / y),
        (a, Node::Const(1.0)) => a,
        (a, b) => Node::Div(Box::new(a), Box::new(b)),
    }
}

fn pow(a: Node, k: i32) -> Node {
    match (a, k) {
        (_, 0) => Node::Const(1.0),
        (a, 1) => a,
        (Node::Const(x), k) => Node::Const(x.powi(k)),
        (a, k) => Node::Pow(Box::new(a), k),
    }
}

fn neg(a: Node) -> Node {
    match a {
        Node::Const(x) => Node::Const(-x),
        Node::Neg(inner) => *inner,
        a => Node::Neg(Box::new(a)),
    }
}

fn apply(f: UnaryFn, a: Node) -> Node {
    // No folding through functions: keeps domain errors observable.
    Node::Apply(f, Box::new(a))
}

impl Node {
    fn differentiate(&self, var: usize) -> Node {
        match self {
            Node::Const(_) => Node::Const(0.0),
            Node::Var(i) => Node::Const(if *i == var { 1.0 } else { 0.0 }),
            Node::Add(a, b) => add(a.differentiate(var), b.differentiate(var)),
            Node::Sub(a, b) => sub(a.differentiate(var), b.differentiate(var)),
            Node::Mul(a, b) => add(
                mul(a.differentiate(var), (**b).clone()),
                mul((**a).clone(), b.differentiate(var)),
            ),
            Node::Div(a, b) => {
                // (a/b)' = a'/b - a b' / b^2
                let da = a.differentiate(var);
                let db = b.differentiate(var);
                sub(
                    div(da, (**b).clone()),
                    div(mul((**a).clone(), db), pow((**b).clone(), 2)),
                )
            }
            Node::Pow(a, k) => mul(
                mul(Node::Const(f64::from(*k)), pow((**a).clone(), k - 1)),
                a.differentiate(var),
            ),
            Node::Neg(a) => neg(a.differentiate(var)),
            Node::Apply(f, a) => {
                let da = a.differentiate(var);
                let outer = match f {
                    UnaryFn::Sqrt => div(
                        Node::Const(1.0),
                        mul(Node::Const(2.0), apply(UnaryFn::Sqrt, (**a).clone())),
                    ),
                    UnaryFn::Sin => apply(UnaryFn::Cos, (**a).clone()),
                    UnaryFn::Cos => neg(apply(UnaryFn::Sin, (**a).clone())),
                    UnaryFn::Exp => apply(UnaryFn::Exp, (**a).clone()),
                    UnaryFn::Log => div(Node::Const(1.0), (**a).clone()),
                };
                mul(outer, da)
            }
        }
    }

    fn evaluate(&self, values: &[f64], chart: &Chart) -> Result<f64> {
        let v = match self {
            Node::Const(c) => *c,
            Node::Var(i) => values[*i],
            Node::Add(a, b) => a.evaluate(values, chart)? + b.evaluate(values, chart)?,
            Node::Sub(a, b) => a.evaluate(values, chart)? - b.evaluate(values, chart)?,
            Node::Mul(a, b) => a.evaluate(values, chart)? * b.evaluate(values, chart)?,
            Node::Div(a, b) => {
                let num = a.evaluate(values, chart)?;
                let den = b.evaluate(values, chart)?;
                if den == 0.0 {
                    return Err(self.domain_error(chart, "division by zero"));
                }
                num / den
            }
            Node::Pow(a, k) => {
                let base = a.evaluate(values, chart)?;
                if base == 0.0 && *k < 0 {
                    return Err(self.domain_error(chart, "zero base with negative exponent"));
                }
                base.powi(*k)
            }
            Node::Neg(a) => -a.evaluate(values, chart)?,
            Node::Apply(f, a) => {
                let x = a.evaluate(values, chart)?;
                match f {
                    UnaryFn::Sqrt if x < 0.0 => {
                        return Err(self.domain_error(chart, "sqrt of a negative number"))
                    }
                    UnaryFn::Log if x <= 0.0 => {
                        return Err(self.domain_error(chart, "log of a non-positive number"))
                    }
                    UnaryFn::Sqrt => x.sqrt(),
                    UnaryFn::Sin => x.sin(),
                    UnaryFn::Cos => x.cos(),
                    UnaryFn::Exp => x.exp(),
                    UnaryFn::Log => x.ln(),
                }
            }
        };
        if !v.is_finite() {
            return Err(self.domain_error(chart, "non-finite value"));
        }
        Ok(v)
    }

    fn domain_error(&self, chart: &Chart, reason: &str) -> Error {
        Error::Domain {
            expr: print_node(self, chart, 0),
            reason: reason.to_string(),
        }
    }

    fn depends_on(&self, var: usize) -> bool {
        match self {
            Node::Const(_) => false,
            Node::Var(i) => *i == var,
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.depends_on(var) || b.depends_on(var)
            }
            Node::Pow(a, _) | Node::Neg(a) | Node::Apply(_, a) => a.depends_on(var),
        }
    }

    fn substitute(&self, map: &[Node]) -> Node {
        match self {
            Node::Const(c) => Node::Const(*c),
            Node::Var(i) => map[*i].clone(),
            Node::Add(a, b) => add(a.substitute(map), b.substitute(map)),
            Node::Sub(a, b) => sub(a.substitute(map), b.substitute(map)),
            Node::Mul(a, b) => mul(a.substitute(map), b.substitute(map)),
            Node::Div(a, b) => div(a.substitute(map), b.substitute(map)),
            Node::Pow(a, k) => pow(a.substitute(map), *k),
            Node::Neg(a) => neg(a.substitute(map)),
            Node::Apply(f, a) => apply(*f, a.substitute(map)),
        }
    }
}

// Precedence levels used by the printer so that output re-parses to the
// same tree shape: 1 additive, 2 multiplicative, 3 power, 4 atoms.
fn print_node(node: &Node, chart: &Chart, parent: u8) -> String {
    let (text, prec) = match node {
        Node::Const(c) => {
            let s = format!("{c}");
            let prec = if s.starts_with('-') { 2 } else { 4 };
            (s, prec)
        }
        Node::Var(i) => (chart.coord_name(*i).to_string(), 4),
        Node::Add(a, b) => (
            format!("{} + {}", print_node(a, chart, 1), print_node(b, chart, 2)),
            1,
        ),
        Node::Sub(a, b) => (
            format!("{} - {}", print_node(a, chart, 1), print_node(b, chart, 2)),
            1,
        ),
        Node::Mul(a, b) => (
            format!("{}*{}", print_node(a, chart, 2), print_node(b, chart, 3)),
            2,
        ),
        Node::Div(a, b) => (
            format!("{}/{}", print_node(a, chart, 2), print_node(b, chart, 3)),
            2,
        ),
        Node::Pow(a, k) => (format!("{}^{}", print_node(a, chart, 4), k), 3),
        Node::Neg(a) => (format!("-{}", print_node(a, chart, 4)), 2),
        Node::Apply(f, a) => (format!("{}({})", f.name(), print_node(a, chart, 0)), 4),
    };
    if prec < parent {
        format!("({text})")
    } else {
        text
    }
}

/// A scalar expression bound to a chart.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    chart: Arc<Chart>,
    node: Node,
}

impl Expression {
    /// Parse `text` against `chart`'s coordinate names (and derived
    /// symbols, which are expanded in place).
    pub fn parse(text: &str, chart: &Arc<Chart>) -> Result<Expression> {
        let node = Parser::new(text, chart, true)?.parse_all()?;
        Ok(Expression {
            chart: Arc::clone(chart),
            node,
        })
    }

    pub fn constant(chart: &Arc<Chart>, value: f64) -> Expression {
        Expression {
            chart: Arc::clone(chart),
            node: Node::Const(value),
        }
    }

    pub fn coord(chart: &Arc<Chart>, name: &str) -> Result<Expression> {
        match chart.index_of(name) {
            Some(i) => Ok(Expression {
                chart: Arc::clone(chart),
                node: Node::Var(i),
            }),
            None => Err(Error::UnknownCoordinate {
                name: name.to_string(),
                chart: chart.id().to_string(),
            }),
        }
    }

    pub fn zero(chart: &Arc<Chart>) -> Expression {
        Expression::constant(chart, 0.0)
    }

    pub fn one(chart: &Arc<Chart>) -> Expression {
        Expression::constant(chart, 1.0)
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    /// Exact symbolic partial derivative with respect to a coordinate.
    pub fn differentiate(&self, coord: &str) -> Result<Expression> {
        let var = self.chart.index_of(coord).ok_or(Error::UnknownCoordinate {
            name: coord.to_string(),
            chart: self.chart.id().to_string(),
        })?;
        Ok(Expression {
            chart: Arc::clone(&self.chart),
            node: self.node.differentiate(var),
        })
    }

    /// Derivative with respect to the coordinate at a chart index.
    pub fn differentiate_index(&self, var: usize) -> Expression {
        Expression {
            chart: Arc::clone(&self.chart),
            node: self.node.differentiate(var),
        }
    }

    pub fn evaluate(&self, point: &ChartPoint) -> Result<f64> {
        point.check_chart(&self.chart)?;
        self.node.evaluate(point.values(), &self.chart)
    }

    pub fn depends_on(&self, coord: &str) -> bool {
        match self.chart.index_of(coord) {
            Some(i) => self.node.depends_on(i),
            None => false,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.node, Node::Const(c) if c == 0.0)
    }

    /// Rewrite this expression on `target` by substituting every
    /// coordinate with the expression `map(name)`. Coordinates without an
    /// entry must exist on the target chart and are carried over verbatim.
    pub fn substitute<F>(&self, target: &Arc<Chart>, mut map: F) -> Result<Expression>
    where
        F: FnMut(&str) -> Option<Expression>,
    {
        let mut subs = Vec::with_capacity(self.chart.dim());
        for name in self.chart.coords() {
            match map(name) {
                Some(e) => {
                    if e.chart.as_ref() != target.as_ref() {
                        return Err(target.mismatch(&e.chart));
                    }
                    subs.push(e.node);
                }
                None => match target.index_of(name) {
                    Some(i) => subs.push(Node::Var(i)),
                    None => {
                        return Err(Error::UnknownCoordinate {
                            name: name.to_string(),
                            chart: target.id().to_string(),
                        })
                    }
                },
            }
        }
        Ok(Expression {
            chart: Arc::clone(target),
            node: self.node.substitute(&subs),
        })
    }

    pub fn powi(&self, k: i32) -> Expression {
        Expression {
            chart: Arc::clone(&self.chart),
            node: pow(self.node.clone(), k),
        }
    }

    pub fn sqrt(&self) -> Expression {
        Expression {
            chart: Arc::clone(&self.chart),
            node: apply(UnaryFn::Sqrt, self.node.clone()),
        }
    }

    fn binary(self, other: Expression, f: fn(Node, Node) -> Node) -> Expression {
        assert_eq!(
            self.chart.as_ref(),
            other.chart.as_ref(),
            "expressions live on different charts"
        );
        Expression {
            chart: self.chart,
            node: f(self.node, other.node),
        }
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", print_node(&self.node, &self.chart, 0))
    }
}

impl std::ops::Add for Expression {
    type Output = Expression;
    fn add(self, rhs: Expression) -> Expression {
        self.binary(rhs, add)
    }
}

impl std::ops::Sub for Expression {
    type Output = Expression;
    fn sub(self, rhs: Expression) -> Expression {
        self.binary(rhs, sub)
    }
}

impl std::ops::Mul for Expression {
    type Output = Expression;
    fn mul(self, rhs: Expression) -> Expression {
        self.binary(rhs, mul)
    }
}

impl std::ops::Div for Expression {
    type Output = Expression;
    fn div(self, rhs: Expression) -> Expression {
        self.binary(rhs, div)
    }
}

impl std::ops::Neg for Expression {
    type Output = Expression;
    fn neg(self) -> Expression {
        Expression {
            chart: self.chart,
            node: neg(self.node),
        }
    }
}

// ---------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

struct Parser<'c> {
    tokens: Vec<(Token, usize)>,
    pos: usize,
    chart: &'c Arc<Chart>,
    /// Derived-symbol expansion is disabled while parsing a definition
    /// body, so definitions cannot recurse.
    expand_defs: bool,
}

impl<'c> Parser<'c> {
    fn new(text: &str, chart: &'c Arc<Chart>, expand_defs: bool) -> Result<Parser<'c>> {
        Ok(Parser {
            tokens: lex(text)?,
            pos: 0,
            chart,
            expand_defs,
        })
    }

    fn peek(&self) -> &Token {
        &self.tokens[self.pos].0
    }

    fn column(&self) -> usize {
        self.tokens[self.pos].1
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].0.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn parse_all(&mut self) -> Result<Node> {
        let node = self.expr()?;
        if *self.peek() != Token::End {
            return Err(Error::Syntax {
                column: self.column(),
                message: "unexpected trailing input".to_string(),
            });
        }
        Ok(node)
    }

    fn expr(&mut self) -> Result<Node> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Token::Plus => {
                    self.bump();
                    acc = add(acc, self.term()?);
                }
                Token::Minus => {
                    self.bump();
                    acc = sub(acc, self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Token::Star => {
                    self.bump();
                    acc = mul(acc, self.factor()?);
                }
                Token::Slash => {
                    self.bump();
                    acc = div(acc, self.factor()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<Node> {
        let base = self.base()?;
        if *self.peek() == Token::Caret {
            self.bump();
            let negative = if *self.peek() == Token::Minus {
                self.bump();
                true
            } else {
                false
            };
            let col = self.column();
            match self.bump() {
                Token::Number(x) if x.fract() == 0.0 && x.abs() <= f64::from(i32::MAX) => {
                    let k = x as i32;
                    Ok(pow(base, if negative { -k } else { k }))
                }
                _ => Err(Error::Syntax {
                    column: col,
                    message: "exponent must be an integer constant".to_string(),
                }),
            }
        } else {
            Ok(base)
        }
    }

    fn base(&mut self) -> Result<Node> {
        let col = self.column();
        match self.bump() {
            Token::Number(x) => Ok(Node::Const(x)),
            Token::Minus => Ok(neg(self.base()?)),
            Token::LParen => {
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Token::Ident(name) => {
                if UnaryFn::from_name(&name).is_some() && *self.peek() == Token::LParen {
                    let f = UnaryFn::from_name(&name).unwrap();
                    self.bump();
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    return Ok(apply(f, arg));
                }
                if let Some(i) = self.chart.index_of(&name) {
                    return Ok(Node::Var(i));
                }
                if self.expand_defs {
                    if let Some(body) = self.chart.def_of(&name) {
                        return Parser::new(body, self.chart, false)?.parse_all();
                    }
                }
                Err(Error::UnknownCoordinate {
                    name,
                    chart: self.chart.id().to_string(),
                })
            }
            _ => Err(Error::Syntax {
                column: col,
                message: "expected a number, coordinate, function or '('".to_string(),
            }),
        }
    }

    fn expect_rparen(&mut self) -> Result<()> {
        let col = self.column();
        match self.bump() {
            Token::RParen => Ok(()),
            _ => Err(Error::Syntax {
                column: col,
                message: "expected ')'".to_string(),
            }),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Token, usize)>> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        match c {
            ' ' | '\t' | '\n' | '\r' => {
                i += 1;
            }
            '+' => {
                tokens.push((Token::Plus, col));
                i += 1;
            }
            '-' => {
                tokens.push((Token::Minus, col));
                i += 1;
            }
            '*' => {
                tokens.push((Token::Star, col));
                i += 1;
            }
            '/' => {
                tokens.push((Token::Slash, col));
                i += 1;
            }
            '^' => {
                tokens.push((Token::Caret, col));
                i += 1;
            }
            '(' => {
                tokens.push((Token::LParen, col));
                i += 1;
            }
            ')' => {
                tokens.push((Token::RParen, col));
                i += 1;
            }
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                // Optional exponent part: e / E, optional sign, digits.
                if i < chars.len()
                    && (chars[i] == 'e' || chars[i] == 'E')
                    && i + 1 < chars.len()
                    && (chars[i + 1].is_ascii_digit()
                        || ((chars[i + 1] == '+' || chars[i + 1] == '-')
                            && i + 2 < chars.len()
                            && chars[i + 2].is_ascii_digit()))
                {
                    i += 2;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                let s: String = chars[start..i].iter().collect();
                let value = s.parse::<f64>().map_err(|_| Error::Syntax {
                    column: col,
                    message: format!("malformed number `{s}`"),
                })?;
                tokens.push((Token::Number(value), col));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                tokens.push((Token::Ident(chars[start..i].iter().collect()), col));
            }
            other => {
                return Err(Error::Syntax {
                    column: col,
                    message: format!("unexpected character `{other}`"),
                })
            }
        }
    }
    tokens.push((Token::End, chars.len() + 1));
    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::Chart;

    fn qps() -> Arc<Chart> {
        Chart::with_base("extended-1", &["q", "p", "s"], 2)
    }

    fn pt(chart: &Arc<Chart>, v: &[f64]) -> ChartPoint {
        ChartPoint::new(chart, v.to_vec()).unwrap()
    }

    #[test]
    fn parses_power_over_two() {
        let chart = qps();
        let e = Expression::parse("p^2/2", &chart).unwrap();
        assert_eq!(e.evaluate(&pt(&chart, &[0.0, 2.0, 0.0])).unwrap(), 2.0);
        assert_eq!(e.evaluate(&pt(&chart, &[1.0, 3.0, 5.0])).unwrap(), 4.5);
    }

    #[test]
    fn parses_single_variable() {
        let chart = qps();
        let e = Expression::parse("q", &chart).unwrap();
        assert_eq!(e.evaluate(&pt(&chart, &[7.0, 0.0, 0.0])).unwrap(), 7.0);
    }

    #[test]
    fn syntax_error_reports_column() {
        let chart = qps();
        match Expression::parse("p+*q", &chart) {
            Err(Error::Syntax { column, .. }) => assert_eq!(column, 3),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_variable_is_named() {
        let chart = qps();
        match Expression::parse("p + w", &chart) {
            Err(Error::UnknownCoordinate { name, .. }) => assert_eq!(name, "w"),
            other => panic!("expected unknown-coordinate error, got {other:?}"),
        }
    }

    #[test]
    fn derivative_examples() {
        let chart = qps();
        let h = Expression::parse("p^2/2", &chart).unwrap();
        let p0 = pt(&chart, &[0.3, 1.7, -0.4]);
        assert_eq!(h.differentiate("p").unwrap().evaluate(&p0).unwrap(), 1.7);
        assert_eq!(h.differentiate("q").unwrap().evaluate(&p0).unwrap(), 0.0);

        let e = Expression::parse("p^2*s/2", &chart).unwrap();
        let ds = e.differentiate("s").unwrap();
        assert!((ds.evaluate(&p0).unwrap() - 1.7 * 1.7 / 2.0).abs() < 1e-15);
    }

    #[test]
    fn evaluation_examples() {
        let chart = qps();
        let e = Expression::parse("sqrt(p^2 + 1)", &chart).unwrap();
        assert_eq!(e.evaluate(&pt(&chart, &[0.0, 0.0, 0.0])).unwrap(), 1.0);

        let inv = Expression::parse("1/p", &chart).unwrap();
        match inv.evaluate(&pt(&chart, &[0.0, 0.0, 0.0])) {
            Err(Error::Domain { expr, .. }) => assert!(expr.contains("1/p")),
            other => panic!("expected domain error, got {other:?}"),
        }
    }

    #[test]
    fn sqrt_of_negative_is_domain_error() {
        let chart = qps();
        let e = Expression::parse("sqrt(q)", &chart).unwrap();
        assert!(matches!(
            e.evaluate(&pt(&chart, &[-1.0, 0.0, 0.0])),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn expressions_are_shareable_across_threads() {
        // Immutable after construction; evaluation is pure.
        fn assert_send_sync<T: Send + Sync>() {}
        assert_send_sync::<Expression>();
        assert_send_sync::<crate::chart::ChartPoint>();
    }

    #[test]
    fn derived_symbols_expand() {
        let chart = Chart::with_base_and_defs(
            "shell-test",
            &["u0", "p1"],
            0,
            &[("p0", "sqrt(p1^2 + 1)".to_string()), ("m", "1".to_string())],
        );
        let e = Expression::parse("p0 + m", &chart).unwrap();
        let v = e
            .evaluate(&ChartPoint::new(&chart, vec![0.0, 0.0]).unwrap())
            .unwrap();
        assert_eq!(v, 2.0);
    }

    #[test]
    fn negative_exponent_round_trips() {
        let chart = qps();
        let e = Expression::parse("p^-2", &chart).unwrap();
        assert_eq!(e.evaluate(&pt(&chart, &[0.0, 2.0, 0.0])).unwrap(), 0.25);
        let printed = e.to_string();
        let again = Expression::parse(&printed, &chart).unwrap();
        assert_eq!(again.evaluate(&pt(&chart, &[0.0, 2.0, 0.0])).unwrap(), 0.25);
    }

    // Central finite-difference oracle used to validate symbolic
    // differentiation, step 1e-5, relative tolerance 1e-6.
    fn fd_derivative(e: &Expression, coord: &str, p: &ChartPoint) -> f64 {
        let chart = p.chart().clone();
        let i = chart.index_of(coord).unwrap();
        let h = 1e-5;
        let mut hi = p.values().to_vec();
        let mut lo = p.values().to_vec();
        hi[i] += h;
        lo[i] -= h;
        let fhi = e.evaluate(&ChartPoint::new(&chart, hi).unwrap()).unwrap();
        let flo = e.evaluate(&ChartPoint::new(&chart, lo).unwrap()).unwrap();
        (fhi - flo) / (2.0 * h)
    }

    #[test]
    fn symbolic_derivative_matches_finite_differences() {
        let chart = qps();
        let corpus = [
            "p^2/2",
            "q*p - s",
            "sin(q)*cos(p)",
            "exp(q/2) + log(p + 3)",
            "sqrt(q^2 + p^2 + 1)",
            "(q - p*s)^3/4 + p^-1",
            "-q^2 + 2*p/s",
        ];
        let mut rng = crate::sample::SplitMix64::new(42);
        for text in corpus {
            let e = Expression::parse(text, &chart).unwrap();
            for _ in 0..100 {
                // Sampled away from coordinate singularities.
                let v = vec![
                    0.3 + 1.5 * rng.next_f64(),
                    0.3 + 1.5 * rng.next_f64(),
                    0.3 + 1.5 * rng.next_f64(),
                ];
                let p = ChartPoint::new(&chart, v).unwrap();
                for coord in ["q", "p", "s"] {
                    let sym = e.differentiate(coord).unwrap().evaluate(&p).unwrap();
                    let fd = fd_derivative(&e, coord, &p);
                    let scale = sym.abs().max(fd.abs()).max(1.0);
                    assert!(
                        (sym - fd).abs() <= 1e-6 * scale,
                        "{text} d/d{coord} at {p}: sym={sym} fd={fd}"
                    );
                }
            }
        }
    }
}
