//! Coordinate expression language.
//!
//! World sheets are described by one scalar expression per ambient
//! coordinate, in variables `u1..us` and `t` (any identifier list works;
//! those are the conventional names). The grammar, in EBNF (see also
//! `docs/grammar.ebnf`):
//!
//! ```text
//! expr    := term   { ("+" | "-") term }
//! term    := unary  { ("*" | "/") unary }
//! unary   := "-" unary | power
//! power   := atom [ "^" integer ]
//! atom    := number | identifier | function "(" expr ")" | "(" expr ")"
//! function:= "sin" | "cos" | "exp" | "log" | "sqrt"
//! integer := [ "-" ] digit { digit }
//! number  := digit { digit } [ "." digit { digit } ]
//!            [ ("e"|"E") [ "+" | "-" ] digit { digit } ]
//! ```
//!
//! `^` binds tighter than unary minus, so `-u1^2` is `-(u1^2)`. Exponents
//! are integer literals only — `u1^t` and `u1^2.5` are syntax errors.
//! `pi` is a built-in constant. `log` is the natural logarithm.
//!
//! Parse errors carry the byte offset of the offending token, and
//! [`unparse`] prints an AST back to text that reparses to the same tree.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FUNCTIONS: [&str; 5] = ["sin", "cos", "exp", "log", "sqrt"];

/// Expression AST. Variables are indices into the name list supplied to
/// [`parse_expr`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ExprNode {
    Const(f64),
    Var(usize),
    Add(Box<ExprNode>, Box<ExprNode>),
    Sub(Box<ExprNode>, Box<ExprNode>),
    Mul(Box<ExprNode>, Box<ExprNode>),
    Div(Box<ExprNode>, Box<ExprNode>),
    Neg(Box<ExprNode>),
    /// Integer power `base^k`.
    Pow(Box<ExprNode>, i32),
    Sin(Box<ExprNode>),
    Cos(Box<ExprNode>),
    Exp(Box<ExprNode>),
    Log(Box<ExprNode>),
    Sqrt(Box<ExprNode>),
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    offset: usize,
}

fn tokenize(text: &str) -> Result<Vec<Spanned>> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                toks.push(Spanned { tok: Tok::Plus, offset: i });
                i += 1;
            }
            '-' => {
                toks.push(Spanned { tok: Tok::Minus, offset: i });
                i += 1;
            }
            '*' => {
                toks.push(Spanned { tok: Tok::Star, offset: i });
                i += 1;
            }
            '/' => {
                toks.push(Spanned { tok: Tok::Slash, offset: i });
                i += 1;
            }
            '^' => {
                toks.push(Spanned { tok: Tok::Caret, offset: i });
                i += 1;
            }
            '(' => {
                toks.push(Spanned { tok: Tok::LParen, offset: i });
                i += 1;
            }
            ')' => {
                toks.push(Spanned { tok: Tok::RParen, offset: i });
                i += 1;
            }
            '0'..='9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    if i >= bytes.len() || !bytes[i].is_ascii_digit() {
                        return Err(Error::Parse {
                            offset: i,
                            message: "expected digit after decimal point".into(),
                        });
                    }
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                    // a bare `e` after a number is left to the identifier
                    // rules, which will reject it with a clearer message
                }
                let lit = &text[start..i];
                let value: f64 = lit.parse().map_err(|_| Error::Parse {
                    offset: start,
                    message: format!("invalid number literal `{lit}`"),
                })?;
                toks.push(Spanned {
                    tok: Tok::Num(value),
                    offset: start,
                });
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                toks.push(Spanned {
                    tok: Tok::Ident(text[start..i].to_string()),
                    offset: start,
                });
            }
            _ => {
                return Err(Error::Parse {
                    offset: i,
                    message: format!("unexpected character `{c}`"),
                });
            }
        }
    }
    Ok(toks)
}

struct Parser<'a> {
    toks: Vec<Spanned>,
    pos: usize,
    vars: &'a [String],
    end: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|s| s.offset).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Spanned> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        match self.peek() {
            Some(t) if *t == tok => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(Error::Parse {
                offset: self.offset(),
                message: format!("expected {what}"),
            }),
        }
    }

    fn expr(&mut self) -> Result<ExprNode> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = ExprNode::Add(Box::new(lhs), Box::new(rhs));
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = ExprNode::Sub(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<ExprNode> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    let rhs = self.unary()?;
                    lhs = ExprNode::Mul(Box::new(lhs), Box::new(rhs));
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    let rhs = self.unary()?;
                    lhs = ExprNode::Div(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<ExprNode> {
        if let Some(Tok::Minus) = self.peek() {
            self.pos += 1;
            let inner = self.unary()?;
            // fold literal negation so `-2` is the constant -2, not Neg(2);
            // this keeps unparse/parse round-trips structurally exact
            if let ExprNode::Const(v) = inner {
                return Ok(ExprNode::Const(-v));
            }
            return Ok(ExprNode::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<ExprNode> {
        let base = self.atom()?;
        if let Some(Tok::Caret) = self.peek() {
            self.pos += 1;
            let k = self.int_literal()?;
            return Ok(ExprNode::Pow(Box::new(base), k));
        }
        Ok(base)
    }

    fn int_literal(&mut self) -> Result<i32> {
        let mut neg = false;
        if let Some(Tok::Minus) = self.peek() {
            self.pos += 1;
            neg = true;
        }
        let off = self.offset();
        match self.bump() {
            Some(Spanned { tok: Tok::Num(v), .. }) => {
                if v.fract() != 0.0 || v.abs() > 1e6 {
                    return Err(Error::Parse {
                        offset: off,
                        message: "exponent must be an integer literal".into(),
                    });
                }
                let k = v as i32;
                Ok(if neg { -k } else { k })
            }
            _ => Err(Error::Parse {
                offset: off,
                message: "exponent must be an integer literal".into(),
            }),
        }
    }

    fn atom(&mut self) -> Result<ExprNode> {
        let off = self.offset();
        match self.bump() {
            Some(Spanned { tok: Tok::Num(v), .. }) => Ok(ExprNode::Const(v)),
            Some(Spanned { tok: Tok::LParen, .. }) => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Some(Spanned { tok: Tok::Ident(name), .. }) => {
                if let Some(idx) = self.vars.iter().position(|v| *v == name) {
                    return Ok(ExprNode::Var(idx));
                }
                if name == "pi" {
                    return Ok(ExprNode::Const(std::f64::consts::PI));
                }
                if FUNCTIONS.contains(&name.as_str()) {
                    self.expect(Tok::LParen, &format!("`(` after `{name}`"))?;
                    let arg = Box::new(self.expr()?);
                    self.expect(Tok::RParen, "`)`")?;
                    return Ok(match name.as_str() {
                        "sin" => ExprNode::Sin(arg),
                        "cos" => ExprNode::Cos(arg),
                        "exp" => ExprNode::Exp(arg),
                        "log" => ExprNode::Log(arg),
                        _ => ExprNode::Sqrt(arg),
                    });
                }
                Err(Error::UnknownIdentifier { name, offset: off })
            }
            _ => Err(Error::Parse {
                offset: off,
                message: "expected a number, variable, function call or `(`".into(),
            }),
        }
    }
}

/// Parses `text` into an AST over the given variable names.
///
/// Variable names must be valid identifiers, pairwise distinct, and must
/// not shadow the built-in functions or `pi`.
pub fn parse_expr(text: &str, vars: &[String]) -> Result<ExprNode> {
    for (i, v) in vars.iter().enumerate() {
        let ok = !v.is_empty()
            && v.chars().next().unwrap().is_ascii_alphabetic()
            && v.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
        if !ok {
            return Err(Error::Precondition(format!(
                "invalid variable name `{v}`"
            )));
        }
        if FUNCTIONS.contains(&v.as_str()) || v == "pi" {
            return Err(Error::Precondition(format!(
                "variable name `{v}` shadows a built-in"
            )));
        }
        if vars[..i].contains(v) {
            return Err(Error::Precondition(format!(
                "duplicate variable name `{v}`"
            )));
        }
    }
    let toks = tokenize(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        vars,
        end: text.len(),
    };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(Error::Parse {
            offset: p.offset(),
            message: "unexpected trailing input".into(),
        });
    }
    Ok(e)
}

fn precedence(e: &ExprNode) -> u8 {
    match e {
        ExprNode::Add(..) | ExprNode::Sub(..) => 1,
        ExprNode::Mul(..) | ExprNode::Div(..) => 2,
        ExprNode::Neg(..) => 3,
        ExprNode::Pow(..) => 4,
        _ => 5,
    }
}

fn write_child(out: &mut String, child: &ExprNode, vars: &[String], min_prec: u8) {
    if precedence(child) < min_prec {
        out.push('(');
        write_expr(out, child, vars);
        out.push(')');
    } else {
        write_expr(out, child, vars);
    }
}

fn write_expr(out: &mut String, e: &ExprNode, vars: &[String]) {
    match e {
        ExprNode::Const(v) => {
            if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) {
                // negative constants print as a negation so the text stays
                // inside the grammar
                out.push_str("(-");
                out.push_str(&format!("{}", -v));
                out.push(')');
            } else {
                out.push_str(&format!("{v}"));
            }
        }
        ExprNode::Var(i) => out.push_str(&vars[*i]),
        ExprNode::Add(a, b) => {
            write_child(out, a, vars, 1);
            out.push_str(" + ");
            write_child(out, b, vars, 2);
        }
        ExprNode::Sub(a, b) => {
            write_child(out, a, vars, 1);
            out.push_str(" - ");
            write_child(out, b, vars, 2);
        }
        ExprNode::Mul(a, b) => {
            write_child(out, a, vars, 2);
            out.push('*');
            write_child(out, b, vars, 3);
        }
        ExprNode::Div(a, b) => {
            write_child(out, a, vars, 2);
            out.push('/');
            write_child(out, b, vars, 3);
        }
        ExprNode::Neg(a) => {
            out.push('-');
            write_child(out, a, vars, 3);
        }
        ExprNode::Pow(a, k) => {
            write_child(out, a, vars, 5);
            out.push('^');
            out.push_str(&k.to_string());
        }
        ExprNode::Sin(a) | ExprNode::Cos(a) | ExprNode::Exp(a) | ExprNode::Log(a)
        | ExprNode::Sqrt(a) => {
            let name = match e {
                ExprNode::Sin(_) => "sin",
                ExprNode::Cos(_) => "cos",
                ExprNode::Exp(_) => "exp",
                ExprNode::Log(_) => "log",
                _ => "sqrt",
            };
            out.push_str(name);
            out.push('(');
            write_expr(out, a, vars);
            out.push(')');
        }
    }
}

/// Prints an AST back to expression text, with parentheses only where the
/// grammar needs them. `parse_expr(unparse(e)) == e` for every tree this
/// crate can produce.
pub fn unparse(e: &ExprNode, vars: &[String]) -> String {
    let mut out = String::new();
    write_expr(&mut out, e, vars);
    out
}

/// Variables actually referenced by the expression.
pub fn used_vars(e: &ExprNode, acc: &mut Vec<usize>) {
    match e {
        ExprNode::Const(_) => {}
        ExprNode::Var(i) => {
            if !acc.contains(i) {
                acc.push(*i);
            }
        }
        ExprNode::Add(a, b)
        | ExprNode::Sub(a, b)
        | ExprNode::Mul(a, b)
        | ExprNode::Div(a, b) => {
            used_vars(a, acc);
            used_vars(b, acc);
        }
        ExprNode::Neg(a)
        | ExprNode::Pow(a, _)
        | ExprNode::Sin(a)
        | ExprNode::Cos(a)
        | ExprNode::Exp(a)
        | ExprNode::Log(a)
        | ExprNode::Sqrt(a) => used_vars(a, acc),
    }
}
