//! Text syntax: `[rid:] Head(args) :- Lit, ..., Lit.` with `%` comments and an
//! optional `@answer P.` directive.

use super::ast::{Atom, CmpOp, Literal, Program, Rule, Term};
use super::check::validate;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Str(String),
    Num(String),
    LParen,
    RParen,
    Comma,
    Dot,
    ColonDash,
    Colon,
    At,
    Op(CmpOp),
    Bang,
    Amp,
    Pipe,
    Eof,
}

impl Tok {
    fn text(&self) -> String {
        match self {
            Tok::Ident(s) | Tok::Num(s) => s.clone(),
            Tok::Str(s) => format!("\"{s}\""),
            Tok::LParen => "(".into(),
            Tok::RParen => ")".into(),
            Tok::Comma => ",".into(),
            Tok::Dot => ".".into(),
            Tok::ColonDash => ":-".into(),
            Tok::Colon => ":".into(),
            Tok::At => "@".into(),
            Tok::Op(op) => op.symbol().into(),
            Tok::Bang => "!".into(),
            Tok::Amp => "&".into(),
            Tok::Pipe => "|".into(),
            Tok::Eof => String::new(),
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Spanned {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

pub(crate) fn tokenize(text: &str) -> Result<Vec<Spanned>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let push = |out: &mut Vec<Spanned>, tok| out.push(Spanned { tok, line: l0, col: c0 });
        if c.is_whitespace() {
            bump!();
        } else if c == '%' {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
        } else if c.is_alphabetic() || c == '_' {
            let mut s = String::new();
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                s.push(chars[i]);
                bump!();
            }
            push(&mut out, Tok::Ident(s));
        } else if c.is_ascii_digit() || (c == '-' && chars.get(i + 1).is_some_and(char::is_ascii_digit)) {
            let mut s = String::new();
            s.push(c);
            bump!();
            while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                s.push(chars[i]);
                bump!();
            }
            push(&mut out, Tok::Num(s));
        } else if c == '"' {
            bump!();
            let mut s = String::new();
            loop {
                match chars.get(i) {
                    None => return Err(Error::syntax(l0, c0, "", "unterminated string")),
                    Some('"') => {
                        bump!();
                        break;
                    }
                    Some('\\') if i + 1 < chars.len() => {
                        bump!();
                        s.push(chars[i]);
                        bump!();
                    }
                    Some(&ch) => {
                        s.push(ch);
                        bump!();
                    }
                }
            }
            push(&mut out, Tok::Str(s));
        } else {
            let next = chars.get(i + 1).copied();
            let (tok, width) = match (c, next) {
                (':', Some('-')) => (Tok::ColonDash, 2),
                (':', _) => (Tok::Colon, 1),
                ('(', _) => (Tok::LParen, 1),
                (')', _) => (Tok::RParen, 1),
                (',', _) => (Tok::Comma, 1),
                ('.', _) => (Tok::Dot, 1),
                ('@', _) => (Tok::At, 1),
                ('&', _) => (Tok::Amp, 1),
                ('|', _) => (Tok::Pipe, 1),
                ('∧', _) => (Tok::Amp, 1),
                ('∨', _) => (Tok::Pipe, 1),
                ('¬', _) => (Tok::Bang, 1),
                ('!', Some('=')) => (Tok::Op(CmpOp::Ne), 2),
                ('!', _) => (Tok::Bang, 1),
                ('<', Some('=')) => (Tok::Op(CmpOp::Le), 2),
                ('>', Some('=')) => (Tok::Op(CmpOp::Ge), 2),
                ('<', _) => (Tok::Op(CmpOp::Lt), 1),
                ('>', _) => (Tok::Op(CmpOp::Gt), 1),
                ('=', _) => (Tok::Op(CmpOp::Eq), 1),
                ('≠', _) => (Tok::Op(CmpOp::Ne), 1),
                ('≤', _) => (Tok::Op(CmpOp::Le), 1),
                ('≥', _) => (Tok::Op(CmpOp::Ge), 1),
                _ => return Err(Error::syntax(l0, c0, &c.to_string(), "unexpected character")),
            };
            push(&mut out, tok);
            for _ in 0..width {
                bump!();
            }
        }
    }
    out.push(Spanned { tok: Tok::Eof, line, col });
    Ok(out)
}

pub(crate) struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

pub(crate) fn is_var_name(s: &str) -> bool {
    s.chars().next().is_some_and(|c| c.is_uppercase())
}

impl Parser {
    pub fn new(text: &str) -> Result<Parser> {
        Ok(Parser { toks: tokenize(text)?, pos: 0 })
    }

    pub fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    pub fn peek_at(&self, offset: usize) -> &Tok {
        &self.toks[(self.pos + offset).min(self.toks.len() - 1)].tok
    }

    pub fn next(&mut self) -> Tok {
        let tok = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        tok
    }

    pub fn error(&self, message: impl Into<String>) -> Error {
        let s = &self.toks[self.pos];
        Error::syntax(s.line, s.col, &s.tok.text(), message)
    }

    pub fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        if *self.peek() == tok {
            self.next();
            Ok(())
        } else {
            Err(self.error(format!("expected {what}")))
        }
    }

    pub fn at_eof(&self) -> bool {
        *self.peek() == Tok::Eof
    }

    pub fn ident(&mut self, what: &str) -> Result<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.next();
                Ok(s)
            }
            _ => Err(self.error(format!("expected {what}"))),
        }
    }

    /// A variable or constant; uppercase identifiers are variables.
    pub fn term(&mut self, allow_func: bool) -> Result<Term> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.next();
                if allow_func && *self.peek() == Tok::LParen {
                    self.next();
                    let args = self.term_list(true)?;
                    return Ok(Term::Func(s, args));
                }
                if is_var_name(&s) {
                    Ok(Term::Var(s))
                } else if s.starts_with('_') {
                    Ok(Term::Var(s))
                } else {
                    Ok(Term::Const(s))
                }
            }
            Tok::Str(s) | Tok::Num(s) => {
                self.next();
                Ok(Term::Const(s))
            }
            _ => Err(self.error("expected a term")),
        }
    }

    fn term_list(&mut self, allow_func: bool) -> Result<Vec<Term>> {
        let mut args = Vec::new();
        if *self.peek() == Tok::RParen {
            self.next();
            return Ok(args);
        }
        loop {
            args.push(self.term(allow_func)?);
            match self.next() {
                Tok::Comma => continue,
                Tok::RParen => return Ok(args),
                _ => {
                    self.pos -= 1;
                    return Err(self.error("expected `,` or `)`"));
                }
            }
        }
    }

    pub fn atom(&mut self, allow_func: bool) -> Result<Atom> {
        let pred = self.ident("a predicate name")?;
        self.expect(Tok::LParen, "`(`")?;
        let args = self.term_list(allow_func)?;
        Ok(Atom { pred, args })
    }

    fn literal(&mut self) -> Result<Literal> {
        if let Tok::Ident(s) = self.peek() {
            if s == "not" && matches!(self.peek_at(1), Tok::Ident(_)) {
                self.next();
                return Ok(Literal::Neg(self.atom(false)?));
            }
            if matches!(self.peek_at(1), Tok::LParen) {
                return Ok(Literal::Pos(self.atom(false)?));
            }
        }
        let left = self.term(false)?;
        let op = match self.next() {
            Tok::Op(op) => op,
            _ => {
                self.pos -= 1;
                return Err(self.error("expected a comparison operator"));
            }
        };
        let right = self.term(false)?;
        Ok(Literal::Cmp(left, op, right))
    }

    fn rule(&mut self, default_id: String) -> Result<Rule> {
        let mut id = default_id;
        if matches!(self.peek(), Tok::Ident(_)) && *self.peek_at(1) == Tok::Colon {
            id = self.ident("a rule label")?;
            self.next();
        }
        let head = self.atom(true)?;
        self.expect(Tok::ColonDash, "`:-`")?;
        let mut body = vec![self.literal()?];
        while *self.peek() == Tok::Comma {
            self.next();
            body.push(self.literal()?);
        }
        self.expect(Tok::Dot, "`.` ending the rule")?;
        Ok(Rule { id, head, body })
    }
}

/// Parses without validation; used by tools that build programs piecewise.
pub fn parse_rules(text: &str) -> Result<(Vec<Rule>, Option<String>)> {
    let mut p = Parser::new(text)?;
    let mut rules = Vec::new();
    let mut answer = None;
    while !p.at_eof() {
        if *p.peek() == Tok::At {
            p.next();
            let directive = p.ident("a directive")?;
            if directive != "answer" {
                return Err(p.error("unknown directive"));
            }
            answer = Some(p.ident("the answer predicate")?);
            p.expect(Tok::Dot, "`.`")?;
            continue;
        }
        let rule = p.rule(format!("r{}", rules.len() + 1))?;
        rules.push(rule);
    }
    Ok((rules, answer))
}

/// Parses and validates a program. The answer predicate is the `@answer`
/// directive if present, otherwise the head of the first rule.
pub fn parse_program(text: &str) -> Result<Program> {
    let (rules, answer) = parse_rules(text)?;
    let answer = match answer {
        Some(a) => a,
        None => rules
            .first()
            .map(|r| r.head.pred.clone())
            .ok_or_else(|| Error::syntax(1, 1, "", "program has no rules"))?,
    };
    let program = Program { rules, answer };
    validate(&program)?;
    Ok(program)
}

/// Parses a single atom such as `Q(n,X)`.
pub fn parse_atom(text: &str) -> Result<Atom> {
    let mut p = Parser::new(text)?;
    let atom = p.atom(false)?;
    if !p.at_eof() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(atom)
}
