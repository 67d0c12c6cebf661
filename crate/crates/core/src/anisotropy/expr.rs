//! Small arithmetic expression language over the variables `theta` (or
//! `θ`), `s` and `absx`.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?          right-associative
//! atom   := number | constant | variable | func '(' expr ')' | '(' expr ')'
//! ```
//!
//! Constants: `pi`, `e`. Functions: `sin cos tan sinh cosh exp log sqrt abs`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    Theta,
    S,
    AbsX,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Tan => x.tan(),
            Func::Sinh => x.sinh(),
            Func::Cosh => x.cosh(),
            Func::Exp => x.exp(),
            Func::Log => x.ln(),
            Func::Sqrt => x.sqrt(),
            Func::Abs => x.abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Call(Func, Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
}

/// Variable bindings for evaluation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Vars {
    pub theta: f64,
    pub s: f64,
    pub absx: f64,
}

impl Vars {
    pub fn theta(theta: f64) -> Self {
        Vars {
            theta,
            ..Vars::default()
        }
    }
}

impl Expr {
    pub fn eval(&self, vars: &Vars) -> Result<f64> {
        Ok(match self {
            Expr::Num(v) => *v,
            Expr::Var(Var::Theta) => vars.theta,
            Expr::Var(Var::S) => vars.s,
            Expr::Var(Var::AbsX) => vars.absx,
            Expr::Neg(e) => -e.eval(vars)?,
            Expr::Call(f, e) => f.apply(e.eval(vars)?),
            Expr::Bin(op, a, b) => {
                let (x, y) = (a.eval(vars)?, b.eval(vars)?);
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if y == 0.0 {
                            return Err(Error::DivisionByZero);
                        }
                        x / y
                    }
                    BinOp::Pow => x.powf(y),
                }
            }
        })
    }

    pub fn uses(&self, var: Var) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var(v) => *v == var,
            Expr::Neg(e) | Expr::Call(_, e) => e.uses(var),
            Expr::Bin(_, a, b) => a.uses(var) || b.uses(var),
        }
    }
}

/// Fully parenthesized rendering that parses back to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Var(Var::Theta) => f.write_str("theta"),
            Expr::Var(Var::S) => f.write_str("s"),
            Expr::Var(Var::AbsX) => f.write_str("absx"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Call(func, e) => write!(f, "{}({e})", func.name()),
            Expr::Bin(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Op(c) => format!("`{c}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn tokenize(src: &str) -> Result<Vec<(usize, Tok)>> {
    let mut out = Vec::new();
    let mut chars = src.char_indices().peekable();
    while let Some(&(pos, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if c.is_ascii_digit() || c == '.' {
            let mut end = pos;
            let mut prev = ' ';
            while let Some(&(i, d)) = chars.peek() {
                let exp_sign = (d == '+' || d == '-') && (prev == 'e' || prev == 'E');
                if d.is_ascii_digit() || d == '.' || d == 'e' || d == 'E' || exp_sign {
                    end = i + d.len_utf8();
                    prev = d;
                    chars.next();
                } else {
                    break;
                }
            }
            let text = &src[pos..end];
            match text.parse::<f64>() {
                Ok(v) if v.is_finite() => out.push((pos, Tok::Num(v))),
                _ => {
                    return Err(Error::Parse {
                        position: pos,
                        expected: "finite number".into(),
                        found: format!("`{text}`"),
                    })
                }
            }
        } else if c.is_alphabetic() || c == '_' {
            let mut end = pos;
            while let Some(&(i, d)) = chars.peek() {
                if d.is_alphanumeric() || d == '_' {
                    end = i + d.len_utf8();
                    chars.next();
                } else {
                    break;
                }
            }
            out.push((pos, Tok::Ident(src[pos..end].to_string())));
        } else {
            chars.next();
            let tok = match c {
                '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                _ => {
                    return Err(Error::Parse {
                        position: pos,
                        expected: "operator, number, identifier or parenthesis".into(),
                        found: format!("`{c}`"),
                    })
                }
            };
            out.push((pos, tok));
        }
    }
    out.push((src.len(), Tok::End));
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].1
    }

    fn pos(&self) -> usize {
        self.toks[self.at].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].1.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn fail<T>(&self, expected: &str) -> Result<T> {
        Err(Error::Parse {
            position: self.pos(),
            expected: expected.into(),
            found: self.peek().describe(),
        })
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Op('+') => BinOp::Add,
                Tok::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Op('*') => BinOp::Mul,
                Tok::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if *self.peek() == Tok::Op('-') {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if *self.peek() == Tok::Op('^') {
            self.bump();
            let exp = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::Num(v))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.close()?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                if let Some(func) = Func::from_name(&name) {
                    if *self.peek() != Tok::LParen {
                        return self.fail("`(`");
                    }
                    self.bump();
                    let arg = self.expr()?;
                    self.close()?;
                    return Ok(Expr::Call(func, Box::new(arg)));
                }
                match name.as_str() {
                    "theta" | "θ" => Ok(Expr::Var(Var::Theta)),
                    "s" => Ok(Expr::Var(Var::S)),
                    "absx" => Ok(Expr::Var(Var::AbsX)),
                    "pi" | "π" => Ok(Expr::Num(std::f64::consts::PI)),
                    "e" => Ok(Expr::Num(std::f64::consts::E)),
                    _ => Err(Error::UnknownIdentifier { name, position: pos }),
                }
            }
            _ => self.fail("expression"),
        }
    }

    fn close(&mut self) -> Result<()> {
        if *self.peek() == Tok::RParen {
            self.bump();
            Ok(())
        } else {
            self.fail("`)`")
        }
    }
}

pub fn parse(src: &str) -> Result<Expr> {
    let mut p = Parser {
        toks: tokenize(src)?,
        at: 0,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return p.fail("operator or end of input");
    }
    Ok(e)
}

/// Parsed expression that remembers its source text; serializes as the text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Expression {
    source: String,
    tree: Expr,
}

impl Expression {
    pub fn parse(src: &str) -> Result<Self> {
        Ok(Expression {
            source: src.to_string(),
            tree: parse(src)?,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn tree(&self) -> &Expr {
        &self.tree
    }

    pub fn eval(&self, vars: &Vars) -> Result<f64> {
        self.tree.eval(vars)
    }

    pub fn uses(&self, var: Var) -> bool {
        self.tree.uses(var)
    }
}

impl TryFrom<String> for Expression {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        Expression::parse(&s)
    }
}

impl From<Expression> for String {
    fn from(e: Expression) -> String {
        e.source
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ev(src: &str, vars: Vars) -> f64 {
        parse(src).unwrap().eval(&vars).unwrap()
    }

    #[test]
    fn examples() {
        assert!((ev("1 + 0.2*cos(2*theta)", Vars::theta(0.0)) - 1.2).abs() < 1e-15);
        let v = Vars {
            s: 2.0,
            ..Vars::default()
        };
        assert_eq!(ev("s^(-2)", v), 0.25);
        match parse("cos(") {
            Err(Error::Parse { position, expected, .. }) => {
                assert_eq!(position, 4);
                assert_eq!(expected, "expression");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn precedence_and_associativity() {
        let z = Vars::default();
        assert_eq!(ev("2^3^2", z), 512.0);
        assert_eq!(ev("-2^2", z), -4.0);
        assert_eq!(ev("2^-1", z), 0.5);
        assert_eq!(ev("1 - 2 - 3", z), -4.0);
        assert_eq!(ev("8 / 4 / 2", z), 1.0);
        assert_eq!(ev("1 + 2 * 3", z), 7.0);
        assert_eq!(ev("1.5e2 + 1E-1", z), 150.1);
        assert!((ev("pi", z) - std::f64::consts::PI).abs() < 1e-16);
        assert!((ev("θ*2", Vars::theta(0.25)) - 0.5).abs() < 1e-16);
        assert!((ev("sqrt(abs(-4)) + log(e) + exp(0) + sinh(0) + cosh(0) + tan(0)", z) - 5.0).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            parse("1 + foo"),
            Err(Error::UnknownIdentifier { position: 4, .. })
        ));
        assert!(matches!(parse("(1 + 2"), Err(Error::Parse { position: 6, .. })));
        assert!(matches!(parse("1 2"), Err(Error::Parse { position: 2, .. })));
        assert!(matches!(parse("1 $ 2"), Err(Error::Parse { position: 2, .. })));
        assert!(matches!(parse("sin 2"), Err(Error::Parse { position: 4, .. })));
        assert!(matches!(parse("1e999"), Err(Error::Parse { position: 0, .. })));
        assert_eq!(
            parse("1/(s-2)").unwrap().eval(&Vars {
                s: 2.0,
                ..Vars::default()
            }),
            Err(Error::DivisionByZero)
        );
    }

    #[test]
    fn uses_and_serde() {
        let e = Expression::parse("s^(1-3)*absx").unwrap();
        assert!(e.uses(Var::S) && e.uses(Var::AbsX) && !e.uses(Var::Theta));
        let json = serde_json::to_string(&e).unwrap();
        assert_eq!(json, "\"s^(1-3)*absx\"");
        let back: Expression = serde_json::from_str(&json).unwrap();
        assert_eq!(back, e);
        assert!(serde_json::from_str::<Expression>("\"cos(\"").is_err());
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0.0f64..10.0).prop_map(Expr::Num),
            Just(Expr::Var(Var::Theta)),
            Just(Expr::Var(Var::S)),
            Just(Expr::Var(Var::AbsX)),
        ];
        leaf.prop_recursive(4, 24, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
                (
                    prop_oneof![Just(Func::Sin), Just(Func::Cos), Just(Func::Exp), Just(Func::Abs)],
                    inner.clone()
                )
                    .prop_map(|(f, e)| Expr::Call(f, Box::new(e))),
                (
                    prop_oneof![Just(BinOp::Add), Just(BinOp::Sub), Just(BinOp::Mul), Just(BinOp::Pow)],
                    inner.clone(),
                    inner
                )
                    .prop_map(|(op, a, b)| Expr::Bin(op, Box::new(a), Box::new(b))),
            ]
        })
    }

    proptest! {
        #[test]
        fn pretty_print_roundtrips(e in arb_expr(), theta in -3.0f64..3.0, s in 0.1f64..3.0, absx in 0.1f64..3.0) {
            let printed = e.to_string();
            let back = parse(&printed).unwrap();
            prop_assert_eq!(&back, &e);
            let vars = Vars { theta, s, absx };
            let (a, b) = (e.eval(&vars).unwrap(), back.eval(&vars).unwrap());
            prop_assert!(a == b || (a.is_nan() && b.is_nan()));
        }
    }
}
