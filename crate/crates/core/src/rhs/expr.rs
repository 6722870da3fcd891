//! Arithmetic expressions over the current state `x1..xN` and the delayed
//! state `y1..yN`.
//!
//! Grammar (EBNF):
//!
//! ```text
//! expr    = term { ("+" | "-") term } ;
//! term    = unary { ("*" | "/") unary } ;
//! unary   = "-" unary | power ;
//! power   = primary [ "^" unary ] ;
//! primary = number | variable | func "(" expr ")" | "(" expr ")" ;
//! func    = "sin" | "cos" | "exp" | "tanh" | "abs" ;
//! variable = ("x" | "y") digit { digit } ;
//! ```
//!
//! `^` binds tighter than unary minus and is right associative, so
//! `-x1^2` is `-(x1^2)` and `2^3^2` is `2^(3^2)`.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Tanh,
    Abs,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "tanh" => Func::Tanh,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Tanh => "tanh",
            Func::Abs => "abs",
        }
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Exp => x.exp(),
            Func::Tanh => x.tanh(),
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

/// Which state a variable refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    /// `x_i`, the state at time `t`.
    Current,
    /// `y_i`, the state at time `t - r`.
    Delayed,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprAst {
    Num(f64),
    /// Zero-based component index.
    Var(Slot, usize),
    Neg(Box<ExprAst>),
    Call(Func, Box<ExprAst>),
    Bin(BinOp, Box<ExprAst>, Box<ExprAst>),
}

impl ExprAst {
    pub fn eval(&self, u: &[f64], v: &[f64]) -> f64 {
        match self {
            ExprAst::Num(c) => *c,
            ExprAst::Var(Slot::Current, i) => u[*i],
            ExprAst::Var(Slot::Delayed, i) => v[*i],
            ExprAst::Neg(e) => -e.eval(u, v),
            ExprAst::Call(f, e) => f.apply(e.eval(u, v)),
            ExprAst::Bin(op, l, r) => {
                let (a, b) = (l.eval(u, v), r.eval(u, v));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => pow(a, b),
                }
            }
        }
    }
}

fn pow(a: f64, b: f64) -> f64 {
    if b.fract() == 0.0 && b.abs() <= i32::MAX as f64 {
        a.powi(b as i32)
    } else {
        a.powf(b)
    }
}

/// Fully parenthesized output that parses back to the same tree.
impl fmt::Display for ExprAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExprAst::Num(c) => write!(f, "{c:?}"),
            ExprAst::Var(Slot::Current, i) => write!(f, "x{}", i + 1),
            ExprAst::Var(Slot::Delayed, i) => write!(f, "y{}", i + 1),
            ExprAst::Neg(e) => write!(f, "(-{e})"),
            ExprAst::Call(func, e) => write!(f, "{}({e})", func.name()),
            ExprAst::Bin(op, l, r) => write!(f, "({l} {} {r})", op.symbol()),
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
            Tok::Num(c) => format!("number {c}"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Op(c) => format!("`{c}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(src: &str) -> Result<Vec<Spanned>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, col);
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        let tok = if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            col += i - start;
            match text.parse::<f64>() {
                Ok(v) => Tok::Num(v),
                Err(_) => {
                    return Err(Error::Syntax {
                        line: start_line,
                        column: start_col,
                        expected: vec!["number".into()],
                        found: format!("`{text}`"),
                    })
                }
            }
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            Tok::Ident(chars[start..i].iter().collect())
        } else {
            i += 1;
            col += 1;
            match c {
                '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                other => {
                    return Err(Error::Syntax {
                        line: start_line,
                        column: start_col,
                        expected: vec!["operator".into(), "operand".into()],
                        found: format!("`{other}`"),
                    })
                }
            }
        };
        out.push(Spanned {
            tok,
            line: start_line,
            column: start_col,
        });
    }
    out.push(Spanned {
        tok: Tok::End,
        line,
        column: col,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    dim: usize,
}

impl Parser {
    fn peek(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> Error {
        let t = self.peek();
        Error::Syntax {
            line: t.line,
            column: t.column,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: t.tok.describe(),
        }
    }

    fn expr(&mut self) -> Result<ExprAst> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().tok {
                Tok::Op('+') => BinOp::Add,
                Tok::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            lhs = ExprAst::Bin(op, Box::new(lhs), Box::new(self.term()?));
        }
    }

    fn term(&mut self) -> Result<ExprAst> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().tok {
                Tok::Op('*') => BinOp::Mul,
                Tok::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            lhs = ExprAst::Bin(op, Box::new(lhs), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> Result<ExprAst> {
        if self.peek().tok == Tok::Op('-') {
            self.bump();
            return Ok(ExprAst::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<ExprAst> {
        let base = self.primary()?;
        if self.peek().tok == Tok::Op('^') {
            self.bump();
            let exp = self.unary()?;
            return Ok(ExprAst::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<ExprAst> {
        let t = self.peek().clone();
        match t.tok {
            Tok::Num(c) => {
                self.bump();
                Ok(ExprAst::Num(c))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect_rparen()?;
                Ok(e)
            }
            Tok::Ident(ref name) => {
                self.bump();
                if let Some(func) = Func::from_name(name) {
                    if self.peek().tok != Tok::LParen {
                        return Err(self.error(&["`(`"]));
                    }
                    self.bump();
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    return Ok(ExprAst::Call(func, Box::new(arg)));
                }
                self.variable(name, t.line, t.column)
            }
            _ => Err(self.error(&["number", "variable", "function", "`(`", "`-`"])),
        }
    }

    fn variable(&self, name: &str, line: usize, column: usize) -> Result<ExprAst> {
        let unknown = || Error::UnknownIdentifier {
            name: name.to_string(),
            line,
            column,
        };
        let slot = match name.chars().next() {
            Some('x') => Slot::Current,
            Some('y') => Slot::Delayed,
            _ => return Err(unknown()),
        };
        let digits = &name[1..];
        if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
            return Err(unknown());
        }
        match digits.parse::<usize>() {
            Ok(i) if i >= 1 && i <= self.dim => Ok(ExprAst::Var(slot, i - 1)),
            _ => Err(unknown()),
        }
    }

    fn expect_rparen(&mut self) -> Result<()> {
        if self.peek().tok == Tok::RParen {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&["`)`", "operator"]))
        }
    }
}

/// Parses one component expression; variables must have index `<= dim`.
pub fn parse_expr(source: &str, dim: usize) -> Result<ExprAst> {
    let mut p = Parser {
        toks: lex(source)?,
        pos: 0,
        dim,
    };
    let e = p.expr()?;
    if p.peek().tok != Tok::End {
        return Err(p.error(&["operator", "end of input"]));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn var(slot: Slot, i: usize) -> Box<ExprAst> {
        Box::new(ExprAst::Var(slot, i))
    }

    #[test]
    fn parses_negation() {
        assert_eq!(
            parse_expr("-y1", 1).unwrap(),
            ExprAst::Neg(var(Slot::Delayed, 0))
        );
    }

    #[test]
    fn parses_product_of_difference() {
        let e = parse_expr("x1*(1 - y1)", 1).unwrap();
        let expect = ExprAst::Bin(
            BinOp::Mul,
            var(Slot::Current, 0),
            Box::new(ExprAst::Bin(
                BinOp::Sub,
                Box::new(ExprAst::Num(1.0)),
                var(Slot::Delayed, 0),
            )),
        );
        assert_eq!(e, expect);
    }

    #[test]
    fn mackey_glass_form_evaluates() {
        let e = parse_expr("2*y1/(1+y1^10) - 1*x1", 1).unwrap();
        assert_eq!(e.eval(&[1.0], &[1.0]), 0.0);
    }

    #[test]
    fn precedence_and_associativity() {
        let e = parse_expr("-x1^2", 1).unwrap();
        assert_eq!(e.eval(&[3.0], &[0.0]), -9.0);
        assert_eq!(parse_expr("2^3^2", 1).unwrap().eval(&[], &[]), 512.0);
        assert_eq!(parse_expr("8/4/2", 1).unwrap().eval(&[], &[]), 1.0);
        assert_eq!(parse_expr("1-2-3", 1).unwrap().eval(&[], &[]), -4.0);
        assert_eq!(parse_expr("2^-1", 1).unwrap().eval(&[], &[]), 0.5);
        assert_eq!(parse_expr("2e-1 * 10", 1).unwrap().eval(&[], &[]), 2.0);
    }

    #[test]
    fn functions_evaluate() {
        let e = parse_expr("sin(y1) + cos(x1) + exp(0) + tanh(0) + abs(-2)", 1).unwrap();
        let v = e.eval(&[0.0], &[0.0]);
        assert_eq!(v, 0.0 + 1.0 + 1.0 + 0.0 + 2.0);
    }

    #[test]
    fn reports_positions() {
        match parse_expr("x1 +\n  * y1", 1) {
            Err(Error::Syntax { line, column, .. }) => assert_eq!((line, column), (2, 3)),
            other => panic!("unexpected {other:?}"),
        }
        match parse_expr("x1 + y3", 2) {
            Err(Error::UnknownIdentifier { name, column, .. }) => {
                assert_eq!(name, "y3");
                assert_eq!(column, 6);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_expr("z1", 1),
            Err(Error::UnknownIdentifier { .. })
        ));
        assert!(matches!(
            parse_expr("x0", 1),
            Err(Error::UnknownIdentifier { .. })
        ));
        assert!(matches!(parse_expr("(x1", 1), Err(Error::Syntax { .. })));
        assert!(matches!(parse_expr("x1 x1", 1), Err(Error::Syntax { .. })));
        assert!(matches!(parse_expr("sin x1", 1), Err(Error::Syntax { .. })));
        assert!(matches!(parse_expr("x1 # 2", 1), Err(Error::Syntax { .. })));
    }

    fn arb_ast() -> impl Strategy<Value = ExprAst> {
        let leaf = prop_oneof![
            (0.0f64..1e6).prop_map(ExprAst::Num),
            (0usize..3).prop_map(|i| ExprAst::Var(Slot::Current, i)),
            (0usize..3).prop_map(|i| ExprAst::Var(Slot::Delayed, i)),
        ];
        leaf.prop_recursive(5, 48, 2, |inner| {
            let func = prop_oneof![
                Just(Func::Sin),
                Just(Func::Cos),
                Just(Func::Exp),
                Just(Func::Tanh),
                Just(Func::Abs)
            ];
            let op = prop_oneof![
                Just(BinOp::Add),
                Just(BinOp::Sub),
                Just(BinOp::Mul),
                Just(BinOp::Div),
                Just(BinOp::Pow)
            ];
            prop_oneof![
                inner.clone().prop_map(|e| ExprAst::Neg(Box::new(e))),
                (func, inner.clone()).prop_map(|(f, e)| ExprAst::Call(f, Box::new(e))),
                (op, inner.clone(), inner).prop_map(|(o, l, r)| ExprAst::Bin(
                    o,
                    Box::new(l),
                    Box::new(r)
                )),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_then_parse_is_identity(ast in arb_ast()) {
            let printed = ast.to_string();
            let reparsed = parse_expr(&printed, 3).unwrap();
            prop_assert_eq!(&reparsed, &ast);
            prop_assert_eq!(reparsed.to_string(), printed);
        }
    }
}
