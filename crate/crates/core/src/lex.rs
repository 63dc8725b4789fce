//! Tokenizer shared by the constraint, `.tdl`, `.msr` and `.cm` readers.

use crate::error::ParseError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Int(i64),
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    Semi,
    Colon,
    ColonEq,
    Bar,
    Eq,
    Neq,
    Gt,
    Lt,
    Arrow,
    Minus,
    Bang,
    Query,
    Slash,
    Dot,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(i) => format!("`{i}`"),
            other => format!("`{}`", other.symbol()),
        }
    }

    fn symbol(&self) -> &'static str {
        match self {
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::Comma => ",",
            Tok::Semi => ";",
            Tok::Colon => ":",
            Tok::ColonEq => ":=",
            Tok::Bar => "|",
            Tok::Eq => "=",
            Tok::Neq => "!=",
            Tok::Gt => ">",
            Tok::Lt => "<",
            Tok::Arrow => "->",
            Tok::Minus => "-",
            Tok::Bang => "!",
            Tok::Query => "?",
            Tok::Slash => "/",
            Tok::Dot => ".",
            Tok::Ident(_) | Tok::Int(_) => "",
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Spanned {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

fn ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn ident_cont(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\''
}

pub(crate) fn lex(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut out = Vec::new();
    for (lno, line) in text.lines().enumerate() {
        let line_no = lno + 1;
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
            let push = |out: &mut Vec<Spanned>, tok| out.push(Spanned { tok, line: line_no, col });
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            if c == '#' || (c == '/' && chars.get(i + 1) == Some(&'/')) {
                break;
            }
            if ident_start(c) && c != 'ε' && c != '⊥' {
                let start = i;
                while i < chars.len() && ident_cont(chars[i]) {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                push(&mut out, Tok::Ident(s));
                continue;
            }
            if c.is_ascii_digit() {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                let v = s
                    .parse::<i64>()
                    .map_err(|_| ParseError::new(line_no, col, "integer literal out of range"))?;
                push(&mut out, Tok::Int(v));
                continue;
            }
            let next = chars.get(i + 1).copied();
            let (tok, width) = match (c, next) {
                (':', Some('=')) => (Tok::ColonEq, 2),
                ('-', Some('>')) => (Tok::Arrow, 2),
                ('!', Some('=')) => (Tok::Neq, 2),
                ('→', _) => (Tok::Arrow, 1),
                ('≠', _) => (Tok::Neq, 1),
                ('⊥', _) => (Tok::Ident("bot".into()), 1),
                ('ε', _) => (Tok::Ident("eps".into()), 1),
                ('(', _) => (Tok::LParen, 1),
                (')', _) => (Tok::RParen, 1),
                ('[', _) => (Tok::LBracket, 1),
                (']', _) => (Tok::RBracket, 1),
                ('{', _) => (Tok::LBrace, 1),
                ('}', _) => (Tok::RBrace, 1),
                (',', _) => (Tok::Comma, 1),
                (';', _) => (Tok::Semi, 1),
                (':', _) => (Tok::Colon, 1),
                ('|', _) => (Tok::Bar, 1),
                ('=', _) => (Tok::Eq, 1),
                ('>', _) => (Tok::Gt, 1),
                ('<', _) => (Tok::Lt, 1),
                ('-', _) => (Tok::Minus, 1),
                ('!', _) => (Tok::Bang, 1),
                ('?', _) => (Tok::Query, 1),
                ('/', _) => (Tok::Slash, 1),
                ('.', _) => (Tok::Dot, 1),
                _ => {
                    return Err(ParseError::new(
                        line_no,
                        col,
                        format!("unexpected character `{c}`"),
                    ))
                }
            };
            push(&mut out, tok);
            i += width;
        }
    }
    Ok(out)
}

/// Cursor over a token slice with error helpers.
pub(crate) struct Cursor<'a> {
    toks: &'a [Spanned],
    pos: usize,
    eof_line: usize,
}

impl<'a> Cursor<'a> {
    pub(crate) fn new(toks: &'a [Spanned], eof_line: usize) -> Self {
        Cursor {
            toks,
            pos: 0,
            eof_line,
        }
    }

    pub(crate) fn peek(&self) -> Option<&'a Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    pub(crate) fn peek_at(&self, k: usize) -> Option<&'a Tok> {
        self.toks.get(self.pos + k).map(|s| &s.tok)
    }

    pub(crate) fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    pub(crate) fn position(&self) -> (usize, usize) {
        match self.toks.get(self.pos) {
            Some(s) => (s.line, s.col),
            None => match self.toks.last() {
                Some(s) => (s.line, s.col + 1),
                None => (self.eof_line, 1),
            },
        }
    }

    pub(crate) fn next(&mut self) -> Option<&'a Tok> {
        let t = self.toks.get(self.pos).map(|s| &s.tok);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn error(&self, msg: impl Into<String>) -> ParseError {
        let (l, c) = self.position();
        ParseError::new(l, c, msg)
    }

    pub(crate) fn unexpected(&self, wanted: &str) -> ParseError {
        match self.peek() {
            Some(t) => self.error(format!("expected {wanted}, found {}", t.describe())),
            None => self.error(format!("expected {wanted}, found end of input")),
        }
    }

    pub(crate) fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub(crate) fn expect(&mut self, t: &Tok) -> Result<(), ParseError> {
        if self.eat(t) {
            Ok(())
        } else {
            Err(self.unexpected(&t.describe()))
        }
    }

    pub(crate) fn ident(&mut self) -> Result<&'a str, ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    pub(crate) fn eat_keyword(&mut self, kw: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Ident(s)) if s == kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub(crate) fn int(&mut self) -> Result<i64, ParseError> {
        let neg = self.eat(&Tok::Minus);
        match self.peek() {
            Some(Tok::Int(v)) => {
                self.pos += 1;
                Ok(if neg { -*v } else { *v })
            }
            _ => Err(self.unexpected("integer")),
        }
    }
}
