//! Arithmetic expressions over `x`, `y`, `t` for coefficient fields,
//! boundary data, nonlinearities and set predicates read from config files.
//!
//! The grammar is a precedence-climbing (Pratt) grammar:
//!
//! ```text
//! expr    := expr cmp expr | expr ('+'|'-') expr | expr ('*'|'/') expr
//!          | '-' expr | expr '^' expr | primary
//! primary := number | 'x' | 'y' | 't' | 'pi' | func '(' args ')' | '(' expr ')'
//! cmp     := '<' | '<=' | '>' | '>='
//! func    := exp | log | sqrt | abs | min | max | pow
//! ```
//!
//! Binding strength from weakest to strongest: comparisons, `+ -`, `* /`,
//! unary minus, `^` (right-associative). Comparisons evaluate to `1` or `0`,
//! which is how indicator factors such as `(y > 1) * max(t, 0)` are written.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("variable `{0}` is not bound")]
    Unbound(Var),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("evaluation produced a non-finite value")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    X,
    Y,
    T,
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Var::X => "x",
            Var::Y => "y",
            Var::T => "t",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Lt,
    Le,
    Gt,
    Ge,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
        }
    }

    fn binding_power(self) -> (u8, u8) {
        match self {
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => (1, 2),
            BinOp::Add | BinOp::Sub => (3, 4),
            BinOp::Mul | BinOp::Div => (5, 6),
            BinOp::Pow => (10, 9),
        }
    }
}

const PREFIX_NEG_BP: u8 = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sqrt,
    Abs,
    Min,
    Max,
    Pow,
}

impl Func {
    fn lookup(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "min" => Func::Min,
            "max" => Func::Max,
            "pow" => Func::Pow,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Min => "min",
            Func::Max => "max",
            Func::Pow => "pow",
        }
    }

    fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max | Func::Pow => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

/// Variable values; unset variables raise [`ExprError::Unbound`] when used.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Bindings {
    pub x: Option<f64>,
    pub y: Option<f64>,
    pub t: Option<f64>,
}

impl Bindings {
    pub fn xy(x: f64, y: f64) -> Self {
        Self {
            x: Some(x),
            y: Some(y),
            t: None,
        }
    }

    pub fn xyt(x: f64, y: f64, t: f64) -> Self {
        Self {
            x: Some(x),
            y: Some(y),
            t: Some(t),
        }
    }
}

fn checked_pow(base: f64, exponent: f64) -> Result<f64, ExprError> {
    if base < 0.0 && exponent.fract() != 0.0 {
        return Err(ExprError::Domain(format!("{base}^{exponent} is not real")));
    }
    if base == 0.0 && exponent < 0.0 {
        return Err(ExprError::Domain("division by zero in 0^negative".into()));
    }
    Ok(base.powf(exponent))
}

impl Expr {
    pub fn parse(text: &str) -> Result<Expr, ExprError> {
        let tokens = lex(text)?;
        let mut parser = Parser { tokens, pos: 0 };
        if parser.peek().kind == Tok::Eof {
            return Err(ExprError::Syntax {
                offset: 0,
                message: "empty expression".into(),
            });
        }
        let expr = parser.expr(0)?;
        let tok = parser.peek();
        if tok.kind != Tok::Eof {
            return Err(ExprError::Syntax {
                offset: tok.offset,
                message: format!("unexpected {}", tok.kind.describe()),
            });
        }
        Ok(expr)
    }

    pub fn constant(value: f64) -> Expr {
        Expr::Num(value)
    }

    /// True if the expression mentions `var` anywhere.
    pub fn uses(&self, var: Var) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var(v) => *v == var,
            Expr::Neg(e) => e.uses(var),
            Expr::Bin(_, l, r) => l.uses(var) || r.uses(var),
            Expr::Call(_, args) => args.iter().any(|a| a.uses(var)),
        }
    }

    /// Evaluates to a finite value or reports why it cannot.
    pub fn eval(&self, b: &Bindings) -> Result<f64, ExprError> {
        let v = self.eval_raw(b)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ExprError::NonFinite)
        }
    }

    fn eval_raw(&self, b: &Bindings) -> Result<f64, ExprError> {
        Ok(match self {
            Expr::Num(v) => *v,
            Expr::Var(var) => {
                let slot = match var {
                    Var::X => b.x,
                    Var::Y => b.y,
                    Var::T => b.t,
                };
                slot.ok_or(ExprError::Unbound(*var))?
            }
            Expr::Neg(e) => -e.eval_raw(b)?,
            Expr::Bin(op, l, r) => {
                let (l, r) = (l.eval_raw(b)?, r.eval_raw(b)?);
                match op {
                    BinOp::Add => l + r,
                    BinOp::Sub => l - r,
                    BinOp::Mul => l * r,
                    BinOp::Div => {
                        if r == 0.0 {
                            return Err(ExprError::Domain("division by zero".into()));
                        }
                        l / r
                    }
                    BinOp::Pow => checked_pow(l, r)?,
                    BinOp::Lt => f64::from(u8::from(l < r)),
                    BinOp::Le => f64::from(u8::from(l <= r)),
                    BinOp::Gt => f64::from(u8::from(l > r)),
                    BinOp::Ge => f64::from(u8::from(l >= r)),
                }
            }
            Expr::Call(func, args) => {
                let a = args[0].eval_raw(b)?;
                match func {
                    Func::Exp => a.exp(),
                    Func::Log => {
                        if a <= 0.0 {
                            return Err(ExprError::Domain(format!("log({a})")));
                        }
                        a.ln()
                    }
                    Func::Sqrt => {
                        if a < 0.0 {
                            return Err(ExprError::Domain(format!("sqrt({a})")));
                        }
                        a.sqrt()
                    }
                    Func::Abs => a.abs(),
                    Func::Min => a.min(args[1].eval_raw(b)?),
                    Func::Max => a.max(args[1].eval_raw(b)?),
                    Func::Pow => checked_pow(a, args[1].eval_raw(b)?)?,
                }
            }
        })
    }
}

/// Fully parenthesized output that re-parses to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Bin(op, l, r) => write!(f, "({l} {} {r})", op.symbol()),
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(BinOp),
    Minus,
    LParen,
    RParen,
    Comma,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Op(op) => format!("`{}`", op.symbol()),
            Tok::Minus => "`-`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: Tok,
    offset: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, ExprError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let kind = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let s = &text[start..i];
                let v: f64 = s.parse().map_err(|_| ExprError::Syntax {
                    offset: start,
                    message: format!("malformed number `{s}`"),
                })?;
                if !v.is_finite() {
                    return Err(ExprError::Syntax {
                        offset: start,
                        message: format!("number `{s}` overflows"),
                    });
                }
                Tok::Num(v)
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                Tok::Ident(text[start..i].to_string())
            }
            b'<' | b'>' => {
                i += 1;
                let eq = i < bytes.len() && bytes[i] == b'=';
                if eq {
                    i += 1;
                }
                Tok::Op(match (c, eq) {
                    (b'<', false) => BinOp::Lt,
                    (b'<', true) => BinOp::Le,
                    (b'>', false) => BinOp::Gt,
                    _ => BinOp::Ge,
                })
            }
            _ => {
                i += 1;
                match c {
                    b'+' => Tok::Op(BinOp::Add),
                    b'-' => Tok::Minus,
                    b'*' => Tok::Op(BinOp::Mul),
                    b'/' => Tok::Op(BinOp::Div),
                    b'^' => Tok::Op(BinOp::Pow),
                    b'(' => Tok::LParen,
                    b')' => Tok::RParen,
                    b',' => Tok::Comma,
                    _ => {
                        let ch = text[start..].chars().next().unwrap_or('?');
                        return Err(ExprError::Syntax {
                            offset: start,
                            message: format!("unexpected character `{ch}`"),
                        });
                    }
                }
            }
        };
        out.push(Token {
            kind,
            offset: start,
        });
    }
    out.push(Token {
        kind: Tok::Eof,
        offset: text.len(),
    });
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> Result<(), ExprError> {
        let t = self.next();
        if t.kind == want {
            Ok(())
        } else {
            Err(ExprError::Syntax {
                offset: t.offset,
                message: format!("expected {}, found {}", want.describe(), t.kind.describe()),
            })
        }
    }

    fn expr(&mut self, min_bp: u8) -> Result<Expr, ExprError> {
        let mut lhs = self.prefix()?;
        loop {
            let op = match self.peek().kind {
                Tok::Op(op) => op,
                Tok::Minus => BinOp::Sub,
                _ => break,
            };
            let (lbp, rbp) = op.binding_power();
            if lbp < min_bp {
                break;
            }
            self.next();
            let rhs = self.expr(rbp)?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn prefix(&mut self) -> Result<Expr, ExprError> {
        let tok = self.next();
        match tok.kind {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::Minus => Ok(Expr::Neg(Box::new(self.expr(PREFIX_NEG_BP)?))),
            Tok::LParen => {
                let e = self.expr(0)?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(name) => self.identifier(name, tok.offset),
            other => Err(ExprError::Syntax {
                offset: tok.offset,
                message: format!("unexpected {}", other.describe()),
            }),
        }
    }

    fn identifier(&mut self, name: String, offset: usize) -> Result<Expr, ExprError> {
        match name.as_str() {
            "x" => return Ok(Expr::Var(Var::X)),
            "y" => return Ok(Expr::Var(Var::Y)),
            "t" => return Ok(Expr::Var(Var::T)),
            "pi" => return Ok(Expr::Num(std::f64::consts::PI)),
            _ => {}
        }
        let func = Func::lookup(&name).ok_or(ExprError::UnknownIdentifier { name, offset })?;
        self.expect(Tok::LParen)?;
        let mut args = vec![self.expr(0)?];
        while self.peek().kind == Tok::Comma {
            self.next();
            args.push(self.expr(0)?);
        }
        self.expect(Tok::RParen)?;
        if args.len() != func.arity() {
            return Err(ExprError::Syntax {
                offset,
                message: format!(
                    "{} takes {} argument(s), got {}",
                    func.name(),
                    func.arity(),
                    args.len()
                ),
            });
        }
        Ok(Expr::Call(func, args))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn eval_at(s: &str, b: Bindings) -> Result<f64, ExprError> {
        Expr::parse(s)?.eval(&b)
    }

    #[test]
    fn power_of_max() {
        let e = Expr::parse("max(t,0)^0.5").unwrap();
        match &e {
            Expr::Bin(BinOp::Pow, base, _) => {
                assert!(matches!(**base, Expr::Call(Func::Max, _)))
            }
            other => panic!("unexpected tree {other:?}"),
        }
    }

    #[test]
    fn reciprocal_radius() {
        let e = Expr::parse("1/(x^2+y^2)").unwrap();
        assert_eq!(e.eval(&Bindings::xy(1.0, 1.0)).unwrap(), 0.5);
    }

    #[test]
    fn unary_plus_is_a_syntax_error() {
        assert_eq!(
            Expr::parse("2*+3").unwrap_err(),
            ExprError::Syntax {
                offset: 2,
                message: "unexpected `+`".into()
            }
        );
    }

    #[test]
    fn unknown_identifier_reports_offset() {
        assert_eq!(
            Expr::parse("1 + foo(x)").unwrap_err(),
            ExprError::UnknownIdentifier {
                name: "foo".into(),
                offset: 4
            }
        );
    }

    #[test]
    fn basic_values() {
        let b = Bindings {
            x: Some(0.5),
            ..Default::default()
        };
        assert_eq!(eval_at("x*(1-x)", b).unwrap(), 0.25);
        let b = Bindings {
            t: Some(-3.0),
            ..Default::default()
        };
        assert_eq!(eval_at("max(t,0)", b).unwrap(), 0.0);
        let b = Bindings {
            t: Some(-1.0),
            ..Default::default()
        };
        assert!(matches!(eval_at("sqrt(t)", b), Err(ExprError::Domain(_))));
    }

    #[test]
    fn domain_errors() {
        let b = Bindings::xyt(-1.0, 0.0, 0.0);
        assert!(matches!(eval_at("log(x)", b), Err(ExprError::Domain(_))));
        assert!(matches!(eval_at("1/y", b), Err(ExprError::Domain(_))));
        assert!(matches!(
            eval_at("pow(x, 0.5)", b),
            Err(ExprError::Domain(_))
        ));
        assert!(matches!(eval_at("x^0.5", b), Err(ExprError::Domain(_))));
        assert_eq!(eval_at("x^2", b).unwrap(), 1.0);
        assert_eq!(eval_at("exp(1000)", b), Err(ExprError::NonFinite));
        assert_eq!(
            eval_at(
                "x + t",
                Bindings {
                    x: Some(1.0),
                    ..Default::default()
                }
            ),
            Err(ExprError::Unbound(Var::T))
        );
    }

    #[test]
    fn precedence_and_associativity() {
        let b = Bindings::default();
        assert_eq!(eval_at("2^3^2", b).unwrap(), 512.0);
        assert_eq!(eval_at("-2^2", b).unwrap(), -4.0);
        assert_eq!(eval_at("2*-3", b).unwrap(), -6.0);
        assert_eq!(eval_at("1 - 2 - 3", b).unwrap(), -4.0);
        assert_eq!(eval_at("8 / 4 / 2", b).unwrap(), 1.0);
        assert_eq!(eval_at("(2 > 1) * 3 + 1", b).unwrap(), 4.0);
        assert_eq!(eval_at("1 + 1 >= 2", b).unwrap(), 1.0);
    }

    #[test]
    fn structural_errors() {
        assert!(matches!(
            Expr::parse(""),
            Err(ExprError::Syntax { offset: 0, .. })
        ));
        assert!(matches!(
            Expr::parse("(1 + 2"),
            Err(ExprError::Syntax { offset: 6, .. })
        ));
        assert!(matches!(
            Expr::parse("min(1)"),
            Err(ExprError::Syntax { .. })
        ));
        assert!(matches!(
            Expr::parse("1 2"),
            Err(ExprError::Syntax { offset: 2, .. })
        ));
        assert!(matches!(
            Expr::parse("x # 2"),
            Err(ExprError::Syntax { offset: 2, .. })
        ));
        assert!(matches!(
            Expr::parse("1e999"),
            Err(ExprError::Syntax { .. })
        ));
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0.0f64..10.0).prop_map(Expr::Num),
            Just(Expr::Var(Var::X)),
            Just(Expr::Var(Var::Y)),
            Just(Expr::Var(Var::T)),
        ];
        leaf.prop_recursive(5, 48, 3, |inner| {
            let ops = prop_oneof![
                Just(BinOp::Add),
                Just(BinOp::Sub),
                Just(BinOp::Mul),
                Just(BinOp::Div),
                Just(BinOp::Pow),
                Just(BinOp::Lt),
                Just(BinOp::Ge),
            ];
            let funcs = prop_oneof![
                Just(Func::Exp),
                Just(Func::Log),
                Just(Func::Sqrt),
                Just(Func::Abs),
                Just(Func::Min),
                Just(Func::Max),
                Just(Func::Pow),
            ];
            prop_oneof![
                inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
                (ops, inner.clone(), inner.clone()).prop_map(|(op, l, r)| Expr::Bin(
                    op,
                    Box::new(l),
                    Box::new(r)
                )),
                (funcs, inner.clone(), inner).prop_map(|(f, a, b)| {
                    let args = if f.arity() == 2 { vec![a, b] } else { vec![a] };
                    Expr::Call(f, args)
                }),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(e in arb_expr(),
            pts in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0, -3.0f64..3.0), 20)) {
            let printed = e.to_string();
            let reparsed = Expr::parse(&printed).unwrap();
            prop_assert_eq!(&reparsed, &e);
            for (x, y, t) in pts {
                let b = Bindings::xyt(x, y, t);
                match (e.eval(&b), reparsed.eval(&b)) {
                    (Ok(a), Ok(c)) => prop_assert_eq!(a.to_bits(), c.to_bits()),
                    (Err(a), Err(c)) => prop_assert_eq!(a, c),
                    (a, c) => prop_assert!(false, "{:?} vs {:?}", a, c),
                }
            }
        }

        #[test]
        fn product_binds_tighter_than_sum(a in -1e3f64..1e3, b in -1e3f64..1e3, c in -1e3f64..1e3) {
            let bind = Bindings::xyt(a, b, c);
            let v = eval_at("x+y*t", bind).unwrap();
            prop_assert_eq!(v.to_bits(), (a + (b * c)).to_bits());
        }
    }
}
