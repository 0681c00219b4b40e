//! A small arithmetic expression language for field specifications.
//!
//! Grammar: `+ - * / ^`, unary minus, parentheses, numbers, the functions
//! `exp log ln sin cos tan tanh sqrt abs`, the constant `pi`, and whichever
//! of the symbols `x`, `t`, `eps`, `i` (1-based component), `U1..Un`,
//! `V1..Vn` the caller declares.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Slot {
    X,
    T,
    Eps,
    I,
    U(usize),
    V(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Tan,
    Tanh,
    Sqrt,
    Abs,
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Var(Slot),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

/// Which symbols an expression may reference.
#[derive(Debug, Clone, Copy, Default)]
pub struct Symbols {
    pub x: bool,
    pub eps: bool,
    pub t: bool,
    pub component: bool,
    /// Number of `U` components available.
    pub u: usize,
    /// Number of `V` components available.
    pub v: usize,
}

impl Symbols {
    fn describe(&self) -> String {
        let mut s = vec!["pi"];
        if self.eps {
            s.push("eps");
        }
        if self.x {
            s.push("x");
        }
        if self.t {
            s.push("t");
        }
        if self.component {
            s.push("i");
        }
        let mut out = s.join(", ");
        if self.u > 0 {
            out.push_str(&format!(", U1..U{}", self.u));
        }
        if self.v > 0 {
            out.push_str(&format!(", V1..V{}", self.v));
        }
        out
    }
}

/// Values bound to the symbols during evaluation.
#[derive(Debug, Clone, Copy)]
pub struct Env<'a> {
    pub x: f64,
    pub t: f64,
    pub eps: f64,
    /// 0-based component; exposed to expressions as `i + 1`.
    pub component: usize,
    pub u: &'a [f64],
    pub v: &'a [f64],
}

/// A parsed expression.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Node,
    source: String,
}

impl Expr {
    pub fn parse(source: &str, symbols: &Symbols) -> Result<Self> {
        let tokens = lex(source)?;
        let mut p = Parser {
            tokens,
            pos: 0,
            symbols,
            source,
        };
        let root = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(Self {
            root,
            source: source.to_string(),
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Whether the expression is the literal zero.
    pub fn is_zero(&self) -> bool {
        self.root == Node::Num(0.0)
    }

    pub fn eval(&self, env: &Env) -> f64 {
        eval(&self.root, env)
    }
}

fn eval(n: &Node, env: &Env) -> f64 {
    match n {
        Node::Num(v) => *v,
        Node::Var(s) => match s {
            Slot::X => env.x,
            Slot::T => env.t,
            Slot::Eps => env.eps,
            Slot::I => (env.component + 1) as f64,
            Slot::U(k) => env.u[*k],
            Slot::V(k) => env.v[*k],
        },
        Node::Neg(a) => -eval(a, env),
        Node::Add(a, b) => eval(a, env) + eval(b, env),
        Node::Sub(a, b) => eval(a, env) - eval(b, env),
        Node::Mul(a, b) => eval(a, env) * eval(b, env),
        Node::Div(a, b) => eval(a, env) / eval(b, env),
        Node::Pow(a, b) => {
            let base = eval(a, env);
            match b.as_ref() {
                Node::Num(e) if e.fract() == 0.0 && e.abs() <= 64.0 => base.powi(*e as i32),
                _ => base.powf(eval(b, env)),
            }
        }
        Node::Call(f, a) => {
            let v = eval(a, env);
            match f {
                Func::Exp => v.exp(),
                Func::Log => v.ln(),
                Func::Sin => v.sin(),
                Func::Cos => v.cos(),
                Func::Tan => v.tan(),
                Func::Tanh => v.tanh(),
                Func::Sqrt => v.sqrt(),
                Func::Abs => v.abs(),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>> {
    let b = src.as_bytes();
    let mut out = Vec::new();
    let mut k = 0;
    while k < b.len() {
        let c = b[k] as char;
        if c.is_ascii_whitespace() {
            k += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = k;
            while k < b.len() && ((b[k] as char).is_ascii_digit() || b[k] == b'.') {
                k += 1;
            }
            if k < b.len() && (b[k] == b'e' || b[k] == b'E') {
                let mut j = k + 1;
                if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
                    j += 1;
                }
                if j < b.len() && (b[j] as char).is_ascii_digit() {
                    k = j;
                    while k < b.len() && (b[k] as char).is_ascii_digit() {
                        k += 1;
                    }
                }
            }
            let text = &src[start..k];
            let v: f64 = text
                .parse()
                .map_err(|_| Error::Expr(format!("bad number '{text}' at {start} in '{src}'")))?;
            out.push((Tok::Num(v), start));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = k;
            while k < b.len() && ((b[k] as char).is_ascii_alphanumeric() || b[k] == b'_') {
                k += 1;
            }
            out.push((Tok::Ident(src[start..k].to_string()), start));
        } else if "+-*/^()".contains(c) {
            out.push((Tok::Op(c), k));
            k += 1;
        } else {
            return Err(Error::Expr(format!("unexpected character '{c}' at {k} in '{src}'")));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<(Tok, usize)>,
    pos: usize,
    symbols: &'a Symbols,
    source: &'a str,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> Error {
        let at = self.tokens.get(self.pos).map(|t| t.1).unwrap_or(self.source.len());
        Error::Expr(format!("{msg} at {at} in '{}'", self.source))
    }

    fn peek_op(&self) -> Option<char> {
        match self.tokens.get(self.pos) {
            Some((Tok::Op(c), _)) => Some(*c),
            _ => None,
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.peek_op() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected '{c}'")))
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        while let Some(c @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if c == '+' {
                Node::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Node::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        while let Some(c @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if c == '*' {
                Node::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Node::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node> {
        match self.peek_op() {
            Some('-') => {
                self.pos += 1;
                Ok(Node::Neg(Box::new(self.unary()?)))
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Node::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        let Some((tok, _)) = self.tokens.get(self.pos).cloned() else {
            return Err(self.error("unexpected end of expression"));
        };
        match tok {
            Tok::Num(v) => {
                self.pos += 1;
                Ok(Node::Num(v))
            }
            Tok::Op('(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if let Some(f) = function(&name) {
                    self.pos += 1;
                    self.expect('(')?;
                    let arg = self.expr()?;
                    self.expect(')')?;
                    return Ok(Node::Call(f, Box::new(arg)));
                }
                let node = self.symbol(&name)?;
                self.pos += 1;
                Ok(node)
            }
            Tok::Op(_) => Err(self.error("expected a number, symbol or '('")),
        }
    }

    fn symbol(&self, name: &str) -> Result<Node> {
        let s = self.symbols;
        let indexed = |prefix: char, count: usize| -> Option<usize> {
            let rest = name.strip_prefix(prefix)?;
            let k: usize = rest.parse().ok()?;
            (k >= 1 && k <= count).then_some(k - 1)
        };
        let node = match name {
            "pi" => Some(Node::Num(std::f64::consts::PI)),
            "eps" if s.eps => Some(Node::Var(Slot::Eps)),
            "x" if s.x => Some(Node::Var(Slot::X)),
            "t" if s.t => Some(Node::Var(Slot::T)),
            "i" if s.component => Some(Node::Var(Slot::I)),
            _ => indexed('U', s.u)
                .map(|k| Node::Var(Slot::U(k)))
                .or_else(|| indexed('V', s.v).map(|k| Node::Var(Slot::V(k)))),
        };
        node.ok_or_else(|| {
            self.error(&format!(
                "unknown symbol '{name}' (declared: {})",
                s.describe()
            ))
        })
    }
}

fn function(name: &str) -> Option<Func> {
    Some(match name {
        "exp" => Func::Exp,
        "log" | "ln" => Func::Log,
        "sin" => Func::Sin,
        "cos" => Func::Cos,
        "tan" => Func::Tan,
        "tanh" => Func::Tanh,
        "sqrt" => Func::Sqrt,
        "abs" => Func::Abs,
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env<'a>(u: &'a [f64], v: &'a [f64]) -> Env<'a> {
        Env {
            x: 0.25,
            t: 2.0,
            eps: 0.1,
            component: 1,
            u,
            v,
        }
    }

    #[test]
    fn precedence_and_associativity() {
        let s = Symbols {
            x: true,
            t: true,
            ..Default::default()
        };
        let e = Expr::parse("1 + 2 * 3 ^ 2 ^ 0.5 - -x / 4", &s).unwrap();
        let want = 1.0 + 2.0 * 3f64.powf(2f64.powf(0.5)) + 0.25 / 4.0;
        assert!((e.eval(&env(&[], &[])) - want).abs() < 1e-14);
        let e = Expr::parse("-t^2", &s).unwrap();
        assert_eq!(e.eval(&env(&[], &[])), -4.0);
    }

    #[test]
    fn functions_and_components() {
        let s = Symbols {
            x: true,
            component: true,
            u: 2,
            v: 2,
            ..Default::default()
        };
        let e = Expr::parse("exp(U1) * sin(pi*x) + 0.5*V2 + i + 1e-3", &s).unwrap();
        let got = e.eval(&env(&[0.0, 9.0], &[0.0, 4.0]));
        assert!((got - (std::f64::consts::FRAC_1_SQRT_2 + 2.0 + 2.0 + 1e-3)).abs() < 1e-14);
    }

    #[test]
    fn rejects_undeclared_symbols() {
        let s = Symbols {
            x: true,
            u: 1,
            ..Default::default()
        };
        assert!(Expr::parse("U2", &s).is_err());
        assert!(Expr::parse("t", &s).is_err());
        assert!(Expr::parse("V1", &s).is_err());
        let e = Expr::parse("y + 1", &s).unwrap_err().to_string();
        assert!(e.contains("unknown symbol 'y'"), "{e}");
        assert!(Expr::parse("(x", &s).is_err());
        assert!(Expr::parse("x x", &s).is_err());
        assert!(Expr::parse("2 $ x", &s).is_err());
    }

    #[test]
    fn zero_literal() {
        let s = Symbols {
            eps: true,
            ..Default::default()
        };
        assert!(Expr::parse("0", &s).unwrap().is_zero());
        assert!(!Expr::parse("0 * eps", &s).unwrap().is_zero());
    }
}
