//! Recursive-descent parser for the textual STL syntax.
//!
//! ```text
//! formula  := or
//! or       := and ('|' and)*
//! and      := until ('&' until)*
//! until    := unary ('U' interval unary)?
//! unary    := '!' unary | '!' box | ('G' | 'F') interval '(' or ')'
//!           | '(' or ')' | atom
//! atom     := 'true'
//!           | 'ball' '(' 'x' ',' point ')' ('<=' | '<' | '>=' | '>') number
//!           | 'box' '(' 'x' ',' point ',' point ')'
//!           | 'halfplane' '(' coord ',' number (',' number)? ')'
//! interval := '[' number ',' number ']'
//! point    := '(' number ',' number ')'
//! coord    := 'x' | 'y' | 'x0' | 'x1'
//! ```
//!
//! Temporal operators may not be nested: intervals are absolute times, and a
//! nested operator would have no unambiguous anchor.

use crate::geometry::Point;

use super::ast::{Formula, Predicate, TimeInterval};
use super::StlError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Bang,
    Amp,
    Pipe,
    Le,
    Lt,
    Ge,
    Gt,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(n) => format!("number {n}"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Bang => "`!`".into(),
            Tok::Amp => "`&`".into(),
            Tok::Pipe => "`|`".into(),
            Tok::Le => "`<=`".into(),
            Tok::Lt => "`<`".into(),
            Tok::Ge => "`>=`".into(),
            Tok::Gt => "`>`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, StlError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, col);
        let push = |out: &mut Vec<Token>, tok| {
            out.push(Token {
                tok,
                line: start_line,
                column: start_col,
            })
        };
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
        let two = |next: char| chars.get(i + 1) == Some(&next);
        let single = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            ',' => Some(Tok::Comma),
            '!' => Some(Tok::Bang),
            '&' => Some(Tok::Amp),
            '|' => Some(Tok::Pipe),
            '<' if !two('=') => Some(Tok::Lt),
            '>' if !two('=') => Some(Tok::Gt),
            _ => None,
        };
        if let Some(tok) = single {
            push(&mut out, tok);
            i += 1;
            col += 1;
            continue;
        }
        if c == '<' || c == '>' {
            push(&mut out, if c == '<' { Tok::Le } else { Tok::Ge });
            i += 2;
            col += 2;
            continue;
        }
        if c.is_ascii_digit() || c == '.' || c == '-' || c == '+' {
            let begin = i;
            i += 1;
            while i < chars.len() {
                let d = chars[i];
                let exp_sign = (d == '-' || d == '+') && matches!(chars[i - 1], 'e' | 'E');
                if d.is_ascii_digit() || d == '.' || d == 'e' || d == 'E' || exp_sign {
                    i += 1;
                } else {
                    break;
                }
            }
            let lit: String = chars[begin..i].iter().collect();
            let value: f64 = lit.parse().map_err(|_| StlError::Syntax {
                line: start_line,
                column: start_col,
                expected: vec!["decimal number".into()],
                found: format!("`{lit}`"),
            })?;
            col += i - begin;
            push(&mut out, Tok::Number(value));
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let begin = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let ident: String = chars[begin..i].iter().collect();
            col += i - begin;
            push(&mut out, Tok::Ident(ident));
            continue;
        }
        return Err(StlError::Syntax {
            line,
            column: col,
            expected: vec!["formula token".into()],
            found: format!("`{c}`"),
        });
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        column: col,
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

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, expected: &[&str]) -> Result<T, StlError> {
        let t = self.peek();
        Err(StlError::Syntax {
            line: t.line,
            column: t.column,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: t.tok.describe(),
        })
    }

    fn expect(&mut self, tok: Tok) -> Result<Token, StlError> {
        if self.peek().tok == tok {
            Ok(self.bump())
        } else {
            self.error(&[&tok.describe()])
        }
    }

    fn is_ident(&self, name: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == name)
    }

    fn number(&mut self) -> Result<f64, StlError> {
        match self.peek().tok {
            Tok::Number(n) => {
                self.bump();
                Ok(n)
            }
            _ => self.error(&["number"]),
        }
    }

    fn formula(&mut self) -> Result<Formula, StlError> {
        let mut lhs = self.and()?;
        while self.peek().tok == Tok::Pipe {
            self.bump();
            let rhs = self.and()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Formula, StlError> {
        let mut lhs = self.until()?;
        while self.peek().tok == Tok::Amp {
            self.bump();
            let rhs = self.until()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn until(&mut self) -> Result<Formula, StlError> {
        let lhs = self.unary()?;
        if !self.is_ident("U") {
            return Ok(lhs);
        }
        let op = self.bump();
        let interval = self.interval()?;
        let rhs = self.unary()?;
        if !lhs.is_temporal_free() || !rhs.is_temporal_free() {
            return Err(StlError::NestedTemporal {
                line: op.line,
                column: op.column,
                op: "U".into(),
            });
        }
        Ok(Formula::until(lhs, rhs, interval))
    }

    fn unary(&mut self) -> Result<Formula, StlError> {
        match &self.peek().tok {
            Tok::Bang => {
                self.bump();
                if self.is_ident("box") {
                    let (lower, upper) = self.box_corners()?;
                    return Ok(Formula::Atom(Predicate::Box {
                        lower,
                        upper,
                        inside: false,
                    }));
                }
                Ok(Formula::not(self.unary()?))
            }
            Tok::LParen => {
                self.bump();
                let f = self.formula()?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            Tok::Ident(name) if name == "G" || name == "F" => {
                let always = name == "G";
                let op = self.bump();
                let interval = self.interval()?;
                self.expect(Tok::LParen)?;
                let body = self.formula()?;
                self.expect(Tok::RParen)?;
                if !body.is_temporal_free() {
                    return Err(StlError::NestedTemporal {
                        line: op.line,
                        column: op.column,
                        op: if always { "G" } else { "F" }.into(),
                    });
                }
                Ok(if always {
                    Formula::always(body, interval)
                } else {
                    Formula::eventually(body, interval)
                })
            }
            Tok::Ident(_) => self.atom(),
            _ => self.error(&[
                "`!`",
                "`(`",
                "`G`",
                "`F`",
                "`true`",
                "`ball`",
                "`box`",
                "`halfplane`",
            ]),
        }
    }

    fn interval(&mut self) -> Result<TimeInterval, StlError> {
        let open = self.expect(Tok::LBracket)?;
        let t1 = self.number()?;
        self.expect(Tok::Comma)?;
        let t2 = self.number()?;
        self.expect(Tok::RBracket)?;
        TimeInterval::new(t1, t2).map_err(|_| StlError::Interval {
            line: open.line,
            column: open.column,
            t1,
            t2,
        })
    }

    fn point(&mut self) -> Result<Point, StlError> {
        self.expect(Tok::LParen)?;
        let x = self.number()?;
        self.expect(Tok::Comma)?;
        let y = self.number()?;
        self.expect(Tok::RParen)?;
        Ok(Point::new(x, y))
    }

    fn signal_x(&mut self) -> Result<(), StlError> {
        if self.is_ident("x") {
            self.bump();
            Ok(())
        } else {
            self.error(&["`x`"])
        }
    }

    fn box_corners(&mut self) -> Result<(Point, Point), StlError> {
        let kw = self.bump();
        self.expect(Tok::LParen)?;
        self.signal_x()?;
        self.expect(Tok::Comma)?;
        let lower = self.point()?;
        self.expect(Tok::Comma)?;
        let upper = self.point()?;
        self.expect(Tok::RParen)?;
        if !(lower.x < upper.x && lower.y < upper.y) {
            return Err(StlError::Predicate {
                line: kw.line,
                column: kw.column,
                message: "box lower corner must be below upper corner".into(),
            });
        }
        Ok((lower, upper))
    }

    fn atom(&mut self) -> Result<Formula, StlError> {
        let name = match &self.peek().tok {
            Tok::Ident(s) => s.clone(),
            _ => unreachable!(),
        };
        match name.as_str() {
            "true" => {
                self.bump();
                Ok(Formula::True)
            }
            "box" => {
                let (lower, upper) = self.box_corners()?;
                Ok(Formula::Atom(Predicate::Box {
                    lower,
                    upper,
                    inside: true,
                }))
            }
            "ball" => {
                let kw = self.bump();
                self.expect(Tok::LParen)?;
                self.signal_x()?;
                self.expect(Tok::Comma)?;
                let center = self.point()?;
                self.expect(Tok::RParen)?;
                let inside = match self.peek().tok {
                    Tok::Le | Tok::Lt => true,
                    Tok::Ge | Tok::Gt => false,
                    _ => return self.error(&["`<=`", "`<`", "`>=`", "`>`"]),
                };
                self.bump();
                let radius = self.number()?;
                if radius < 0.0 {
                    return Err(StlError::Predicate {
                        line: kw.line,
                        column: kw.column,
                        message: format!("ball radius must be non-negative, got {radius}"),
                    });
                }
                Ok(Formula::Atom(Predicate::Ball {
                    center,
                    radius,
                    inside,
                }))
            }
            "halfplane" => {
                self.bump();
                self.expect(Tok::LParen)?;
                let axis = match &self.peek().tok {
                    Tok::Ident(s) if s == "x" || s == "x0" => 0,
                    Tok::Ident(s) if s == "y" || s == "x1" => 1,
                    _ => return self.error(&["`x`", "`y`", "`x0`", "`x1`"]),
                };
                self.bump();
                self.expect(Tok::Comma)?;
                let a = self.number()?;
                let b = if self.peek().tok == Tok::Comma {
                    self.bump();
                    Some(self.number()?)
                } else {
                    None
                };
                self.expect(Tok::RParen)?;
                Ok(Formula::Atom(Predicate::HalfPlane { axis, a, b }))
            }
            _ => self.error(&["`true`", "`ball`", "`box`", "`halfplane`", "`G`", "`F`"]),
        }
    }
}

/// Parses the concrete STL syntax into a [`Formula`].
pub fn parse_formula(text: &str) -> Result<Formula, StlError> {
    let tokens = lex(text)?;
    let mut p = Parser { tokens, pos: 0 };
    let f = p.formula()?;
    if p.peek().tok != Tok::Eof {
        return p.error(&["`&`", "`|`", "`U`", "end of input"]);
    }
    Ok(f)
}
