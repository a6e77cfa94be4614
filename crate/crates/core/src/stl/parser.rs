//! Recursive-descent parser for the ASCII formula syntax.
//!
//! ```text
//! formula  := or ('->' formula)?
//! or       := and ('or' and)*
//! and      := until ('and' until)*
//! until    := unary ('until' interval? unary)?
//! unary    := 'not' unary | 'alw' interval? unary | 'ev' interval? unary
//!           | 'rise' '(' formula ')' | 'fall' '(' formula ')'
//!           | 'true' | 'false' | predicate | '(' formula ')'
//! predicate:= term cmp term | term 'in' '{' literal (',' literal)* '}'
//! interval := '[' number ',' (number | 'inf') ']'
//! ```

use thiserror::Error;

use super::ast::{CmpOp, Formula, Interval, Literal, Term};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown operator `{op}` at {line}:{column}")]
    UnknownOperator {
        op: String,
        line: usize,
        column: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    Plus,
    Minus,
    Star,
    Arrow,
    Cmp(CmpOp),
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

const KEYWORDS: &[&str] = &[
    "true", "false", "not", "and", "or", "alw", "ev", "until", "rise", "fall", "abs", "in", "inf",
];

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let mut push = |tok: Tok, n: usize, i: &mut usize, col: &mut usize| {
            out.push(Token {
                tok,
                line: tl,
                column: tc,
            });
            *i += n;
            *col += n;
        };
        let next = chars.get(i + 1).copied();
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                i += 1;
                col += 1;
            }
            '(' => push(Tok::LParen, 1, &mut i, &mut col),
            ')' => push(Tok::RParen, 1, &mut i, &mut col),
            '[' => push(Tok::LBracket, 1, &mut i, &mut col),
            ']' => push(Tok::RBracket, 1, &mut i, &mut col),
            '{' => push(Tok::LBrace, 1, &mut i, &mut col),
            '}' => push(Tok::RBrace, 1, &mut i, &mut col),
            ',' => push(Tok::Comma, 1, &mut i, &mut col),
            '+' => push(Tok::Plus, 1, &mut i, &mut col),
            '*' => push(Tok::Star, 1, &mut i, &mut col),
            '-' if next == Some('>') => push(Tok::Arrow, 2, &mut i, &mut col),
            '-' => push(Tok::Minus, 1, &mut i, &mut col),
            '<' if next == Some('=') => push(Tok::Cmp(CmpOp::Le), 2, &mut i, &mut col),
            '<' => push(Tok::Cmp(CmpOp::Lt), 1, &mut i, &mut col),
            '>' if next == Some('=') => push(Tok::Cmp(CmpOp::Ge), 2, &mut i, &mut col),
            '>' => push(Tok::Cmp(CmpOp::Gt), 1, &mut i, &mut col),
            '=' if next == Some('=') => push(Tok::Cmp(CmpOp::Eq), 2, &mut i, &mut col),
            '!' if next == Some('=') => push(Tok::Cmp(CmpOp::Ne), 2, &mut i, &mut col),
            c if c.is_ascii_digit() || (c == '.' && next.is_some_and(|n| n.is_ascii_digit())) => {
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
                let s: String = chars[start..i].iter().collect();
                let v = s.parse::<f64>().map_err(|_| ParseError::Syntax {
                    line: tl,
                    column: tc,
                    message: format!("malformed number `{s}`"),
                })?;
                col += i - start;
                out.push(Token {
                    tok: Tok::Num(v),
                    line: tl,
                    column: tc,
                });
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                col += i - start;
                out.push(Token {
                    tok: Tok::Ident(chars[start..i].iter().collect()),
                    line: tl,
                    column: tc,
                });
            }
            _ => {
                let mut op = String::from(c);
                if let Some(n) = next.filter(|n| "=&|>".contains(*n)) {
                    op.push(n);
                }
                return Err(ParseError::UnknownOperator {
                    op,
                    line: tl,
                    column: tc,
                });
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        column: col,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let i = (self.pos + offset).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn advance(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> PResult<T> {
        let t = &self.toks[self.pos];
        Err(ParseError::Syntax {
            line: t.line,
            column: t.column,
            message: message.into(),
        })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> PResult<()> {
        if *self.peek() == tok {
            self.advance();
            Ok(())
        } else {
            self.error(format!("expected {what}, found {}", describe(self.peek())))
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn formula(&mut self) -> PResult<Formula> {
        let lhs = self.or()?;
        if *self.peek() == Tok::Arrow {
            self.advance();
            let rhs = self.formula()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> PResult<Formula> {
        let mut f = self.and()?;
        while self.is_keyword("or") {
            self.advance();
            f = Formula::or(f, self.and()?);
        }
        Ok(f)
    }

    fn and(&mut self) -> PResult<Formula> {
        let mut f = self.until()?;
        while self.is_keyword("and") {
            self.advance();
            f = Formula::and(f, self.until()?);
        }
        Ok(f)
    }

    fn until(&mut self) -> PResult<Formula> {
        let lhs = self.unary()?;
        if self.is_keyword("until") {
            self.advance();
            let i = self.opt_interval()?;
            let rhs = self.unary()?;
            return Ok(Formula::until(i, lhs, rhs));
        }
        Ok(lhs)
    }

    fn opt_interval(&mut self) -> PResult<Interval> {
        if *self.peek() != Tok::LBracket {
            return Ok(Interval::UNBOUNDED);
        }
        self.advance();
        let lo = self.number()?;
        self.expect(Tok::Comma, "`,`")?;
        let hi = if self.is_keyword("inf") {
            self.advance();
            f64::INFINITY
        } else {
            self.number()?
        };
        // accept `[a,inf)` as well as `[a,inf]`
        if hi.is_infinite() && *self.peek() == Tok::RParen {
            self.advance();
        } else {
            self.expect(Tok::RBracket, "`]`")?;
        }
        Interval::new(lo, hi)
            .map_or_else(|| self.error(format!("invalid interval [{lo},{hi}]")), Ok)
    }

    fn number(&mut self) -> PResult<f64> {
        let neg = if *self.peek() == Tok::Minus {
            self.advance();
            true
        } else {
            false
        };
        match self.peek().clone() {
            Tok::Num(v) => {
                self.advance();
                Ok(if neg { -v } else { v })
            }
            other => self.error(format!("expected number, found {}", describe(&other))),
        }
    }

    fn unary(&mut self) -> PResult<Formula> {
        if let Tok::Ident(word) = self.peek().clone() {
            match word.as_str() {
                "not" => {
                    self.advance();
                    return Ok(Formula::not(self.unary()?));
                }
                "alw" | "ev" => {
                    self.advance();
                    let i = self.opt_interval()?;
                    let body = self.unary()?;
                    return Ok(if word == "alw" {
                        Formula::always(i, body)
                    } else {
                        Formula::eventually(i, body)
                    });
                }
                "rise" | "fall" => {
                    self.advance();
                    self.expect(Tok::LParen, "`(`")?;
                    let body = Box::new(self.formula()?);
                    self.expect(Tok::RParen, "`)`")?;
                    return Ok(if word == "rise" {
                        Formula::Rise(body)
                    } else {
                        Formula::Fall(body)
                    });
                }
                "true" => {
                    self.advance();
                    return Ok(Formula::True);
                }
                "false" => {
                    self.advance();
                    return Ok(Formula::not(Formula::True));
                }
                _ => {}
            }
        }
        if *self.peek() == Tok::LParen {
            // either a parenthesised formula or a predicate starting with a
            // parenthesised term; try the predicate first
            let save = self.pos;
            match self.predicate() {
                Ok(p) => return Ok(p),
                Err(_) => self.pos = save,
            }
            self.advance();
            let f = self.formula()?;
            self.expect(Tok::RParen, "`)`")?;
            return Ok(f);
        }
        self.predicate()
    }

    fn predicate(&mut self) -> PResult<Formula> {
        let lhs = self.term()?;
        if self.is_keyword("in") {
            self.advance();
            self.expect(Tok::LBrace, "`{`")?;
            let mut set = vec![self.literal()?];
            while *self.peek() == Tok::Comma {
                self.advance();
                set.push(self.literal()?);
            }
            self.expect(Tok::RBrace, "`}`")?;
            return Ok(Formula::Member { term: lhs, set });
        }
        let op = match self.peek() {
            Tok::Cmp(op) => *op,
            other => return self.error(format!("expected comparison, found {}", describe(other))),
        };
        self.advance();
        let rhs = self.term()?;
        Ok(match (lhs, rhs) {
            (term, Term::Const(c)) => Formula::compare(term, op, c),
            (Term::Const(c), term) => Formula::compare(term, op.flipped(), c),
            (l, r) => Formula::compare(Term::sub(l, r), op, 0.0),
        })
    }

    fn literal(&mut self) -> PResult<Literal> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.advance();
                Ok(Literal::Label(s))
            }
            Tok::Num(_) | Tok::Minus => Ok(Literal::Num(self.number()?)),
            other => self.error(format!("expected set element, found {}", describe(&other))),
        }
    }

    fn term(&mut self) -> PResult<Term> {
        let mut t = self.product()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.advance();
                    t = Term::add(t, self.product()?);
                }
                Tok::Minus => {
                    self.advance();
                    t = Term::sub(t, self.product()?);
                }
                _ => return Ok(t),
            }
        }
    }

    fn product(&mut self) -> PResult<Term> {
        let mut t = self.signed()?;
        while *self.peek() == Tok::Star {
            self.advance();
            let rhs = self.signed()?;
            t = match (t, rhs) {
                (Term::Const(a), Term::Const(b)) => Term::Const(a * b),
                (Term::Const(c), other) | (other, Term::Const(c)) => Term::scale(c, other),
                _ => return self.error("product of two non-constant terms is not linear"),
            };
        }
        Ok(t)
    }

    fn signed(&mut self) -> PResult<Term> {
        if *self.peek() == Tok::Minus {
            if let Tok::Num(v) = self.peek_at(1).clone() {
                self.advance();
                self.advance();
                return Ok(Term::Const(-v));
            }
            self.advance();
            return Ok(Term::Neg(Box::new(self.signed()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> PResult<Term> {
        match self.peek().clone() {
            Tok::Num(v) => {
                self.advance();
                Ok(Term::Const(v))
            }
            Tok::LParen => {
                self.advance();
                let t = self.term()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(t)
            }
            Tok::Ident(name) if name == "abs" => {
                self.advance();
                self.expect(Tok::LParen, "`(` after abs")?;
                let t = self.term()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(Term::abs(t))
            }
            Tok::Ident(name) if KEYWORDS.contains(&name.as_str()) => {
                self.error(format!("unexpected keyword `{name}`"))
            }
            Tok::Ident(name) => {
                if *self.peek_at(1) == Tok::LParen {
                    let t = &self.toks[self.pos];
                    return Err(ParseError::UnknownOperator {
                        op: name,
                        line: t.line,
                        column: t.column,
                    });
                }
                self.advance();
                Ok(Term::Var(name))
            }
            other => self.error(format!("expected term, found {}", describe(&other))),
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Num(v) => format!("`{v}`"),
        Tok::Eof => "end of input".into(),
        other => format!("{other:?}"),
    }
}

/// Parses a formula from its concrete syntax.
pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
    };
    let f = p.formula()?;
    if *p.peek() != Tok::Eof {
        return p.error(format!("unexpected trailing {}", describe(p.peek())));
    }
    Ok(f)
}
