//! Arithmetic expressions over `x1`, `x2` for custom initial guesses.
//!
//! Grammar (usual precedence, `^` right-associative and binding tighter than unary minus):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?
//! atom    := number | 'x1' | 'x2' | 'pi' | func '(' expr ')' | '(' expr ')' | '|' expr '|'
//! func    := abs | sqrt | exp | sin | cos
//! ```

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    X1,
    X2,
    Neg(Box<Node>),
    Bin(char, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Func {
    Abs,
    Sqrt,
    Exp,
    Sin,
    Cos,
}

/// A parsed expression.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Node,
    source: String,
}

impl Expr {
    pub fn parse(source: &str) -> Result<Self> {
        let mut parser = Parser { chars: source.chars().collect(), pos: 0 };
        let root = parser.expr()?;
        parser.skip_ws();
        if parser.pos < parser.chars.len() {
            return Err(parser.error("unexpected trailing input"));
        }
        Ok(Self { root, source: source.to_string() })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn eval(&self, x1: f64, x2: f64) -> f64 {
        eval(&self.root, x1, x2)
    }
}

fn eval(node: &Node, x1: f64, x2: f64) -> f64 {
    match node {
        Node::Num(v) => *v,
        Node::X1 => x1,
        Node::X2 => x2,
        Node::Neg(a) => -eval(a, x1, x2),
        Node::Bin(op, a, b) => {
            let (a, b) = (eval(a, x1, x2), eval(b, x1, x2));
            match op {
                '+' => a + b,
                '-' => a - b,
                '*' => a * b,
                '/' => a / b,
                '^' => a.powf(b),
                _ => unreachable!("parser only emits known operators"),
            }
        }
        Node::Call(f, a) => {
            let a = eval(a, x1, x2);
            match f {
                Func::Abs => a.abs(),
                Func::Sqrt => a.sqrt(),
                Func::Exp => a.exp(),
                Func::Sin => a.sin(),
                Func::Cos => a.cos(),
            }
        }
    }
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
}

impl Parser {
    fn error(&self, message: &str) -> Error {
        Error::Expression { column: self.pos + 1, message: message.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.chars.get(self.pos).is_some_and(|c| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected '{c}'")))
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        while let Some(op @ ('+' | '-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node> {
        if self.peek() == Some('-') {
            self.pos += 1;
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.peek() == Some('^') {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(Node::Bin('^', Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(')')?;
                Ok(inner)
            }
            Some('|') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect('|')?;
                Ok(Node::Call(Func::Abs, Box::new(inner)))
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.chars.get(self.pos).is_some_and(|c| c.is_ascii_alphanumeric()) {
                    self.pos += 1;
                }
                let name: String = self.chars[start..self.pos].iter().collect();
                let func = match name.as_str() {
                    "x1" => return Ok(Node::X1),
                    "x2" => return Ok(Node::X2),
                    "pi" => return Ok(Node::Num(std::f64::consts::PI)),
                    "abs" => Func::Abs,
                    "sqrt" => Func::Sqrt,
                    "exp" => Func::Exp,
                    "sin" => Func::Sin,
                    "cos" => Func::Cos,
                    _ => {
                        self.pos = start;
                        return Err(self.error(&format!("unknown identifier '{name}'")));
                    }
                };
                self.expect('(')?;
                let arg = self.expr()?;
                self.expect(')')?;
                Ok(Node::Call(func, Box::new(arg)))
            }
            Some(_) => Err(self.error("unexpected character")),
            None => Err(self.error("unexpected end of expression")),
        }
    }

    fn number(&mut self) -> Result<Node> {
        let start = self.pos;
        while self.chars.get(self.pos).is_some_and(|c| c.is_ascii_digit() || *c == '.') {
            self.pos += 1;
        }
        if matches!(self.chars.get(self.pos), Some('e' | 'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.chars.get(self.pos), Some('+' | '-')) {
                self.pos += 1;
            }
            if self.chars.get(self.pos).is_some_and(|c| c.is_ascii_digit()) {
                while self.chars.get(self.pos).is_some_and(|c| c.is_ascii_digit()) {
                    self.pos += 1;
                }
            } else {
                self.pos = save;
            }
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        text.parse().map(Node::Num).map_err(|_| {
            self.pos = start;
            self.error(&format!("malformed number '{text}'"))
        })
    }
}
