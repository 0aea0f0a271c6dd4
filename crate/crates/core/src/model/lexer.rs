//! Tokenizer shared by model files, LTL formulas, VO parameters and views.

use crate::error::ParseError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    /// Byte offset of the first character.
    pub offset: usize,
    /// Byte offset one past the last character.
    pub end: usize,
    pub line: u32,
    pub col: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sym {
    Assign,
    Colon,
    Comma,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Dot,
    DotDot,
    Eq,
    Neq,
    Lt,
    Le,
    Gt,
    Ge,
    In,
    Plus,
    Minus,
    Star,
    Slash,
    Semi,
    Maplet,
    Override,
    Implies,
    And,
    Or,
    Not,
    TotalFn,
    PartialFn,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Ident(String),
    Int(i64),
    /// `@name`, stored without the `@`.
    Label(String),
    Sym(Sym),
    Eof,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

impl Token {
    pub fn describe(&self) -> String {
        match &self.kind {
            TokenKind::Ident(s) => format!("`{s}`"),
            TokenKind::Int(n) => format!("`{n}`"),
            TokenKind::Label(l) => format!("`@{l}`"),
            TokenKind::Sym(s) => format!("`{}`", sym_text(*s)),
            TokenKind::Eof => "end of input".to_string(),
        }
    }
}

pub fn sym_text(s: Sym) -> &'static str {
    match s {
        Sym::Assign => ":=",
        Sym::Colon => ":",
        Sym::Comma => ",",
        Sym::LParen => "(",
        Sym::RParen => ")",
        Sym::LBrace => "{",
        Sym::RBrace => "}",
        Sym::LBracket => "[",
        Sym::RBracket => "]",
        Sym::Dot => ".",
        Sym::DotDot => "..",
        Sym::Eq => "=",
        Sym::Neq => "/=",
        Sym::Lt => "<",
        Sym::Le => "<=",
        Sym::Gt => ">",
        Sym::Ge => ">=",
        Sym::In => "∈",
        Sym::Plus => "+",
        Sym::Minus => "-",
        Sym::Star => "*",
        Sym::Slash => "/",
        Sym::Semi => ";",
        Sym::Maplet => "|->",
        Sym::Override => "<+",
        Sym::Implies => "=>",
        Sym::And => "∧",
        Sym::Or => "∨",
        Sym::Not => "¬",
        Sym::TotalFn => "-->",
        Sym::PartialFn => "+->",
    }
}

// Longest match first.
const ASCII_SYMS: &[(&str, Sym)] = &[
    ("-->", Sym::TotalFn),
    ("+->", Sym::PartialFn),
    ("|->", Sym::Maplet),
    (":=", Sym::Assign),
    ("..", Sym::DotDot),
    ("/=", Sym::Neq),
    ("<=", Sym::Le),
    (">=", Sym::Ge),
    ("<+", Sym::Override),
    ("=>", Sym::Implies),
    ("->", Sym::Implies),
    (":", Sym::Colon),
    (",", Sym::Comma),
    ("(", Sym::LParen),
    (")", Sym::RParen),
    ("{", Sym::LBrace),
    ("}", Sym::RBrace),
    ("[", Sym::LBracket),
    ("]", Sym::RBracket),
    (".", Sym::Dot),
    ("=", Sym::Eq),
    ("<", Sym::Lt),
    (">", Sym::Gt),
    ("+", Sym::Plus),
    ("-", Sym::Minus),
    ("*", Sym::Star),
    ("/", Sym::Slash),
    (";", Sym::Semi),
    ("&", Sym::And),
    ("|", Sym::Or),
    ("!", Sym::Not),
];

fn unicode_sym(c: char) -> Option<Sym> {
    Some(match c {
        '∈' => Sym::In,
        '≠' => Sym::Neq,
        '≤' => Sym::Le,
        '≥' => Sym::Ge,
        '↦' => Sym::Maplet,
        '⇒' => Sym::Implies,
        '∧' => Sym::And,
        '∨' => Sym::Or,
        '¬' => Sym::Not,
        '→' => Sym::TotalFn,
        '⇸' => Sym::PartialFn,
        '\u{2025}' => Sym::DotDot,
        _ => return None,
    })
}

pub fn tokenize(file: &str, src: &str) -> Result<Vec<Token>, ParseError> {
    let mut tokens = Vec::new();
    let mut line = 1u32;
    let mut line_start = 0usize;
    let mut i = 0usize;
    let bytes = src.as_bytes();

    while i < src.len() {
        let c = src[i..].chars().next().expect("in bounds");
        let col = (src[line_start..i].chars().count() + 1) as u32;
        let start = i;
        if c == '\n' {
            line += 1;
            i += 1;
            line_start = i;
            continue;
        }
        if c.is_whitespace() {
            i += c.len_utf8();
            continue;
        }
        if c == '#' || src[i..].starts_with("//") {
            while i < src.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let span = |end: usize| Span { offset: start, end, line, col };
        if c.is_ascii_digit() {
            while i < src.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let n: i64 = src[start..i].parse().map_err(|_| {
                ParseError::new(file, line, col, format!("integer literal `{}` out of range", &src[start..i]))
            })?;
            tokens.push(Token { kind: TokenKind::Int(n), span: span(i) });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            while let Some(ch) = src[i..].chars().next() {
                if ch.is_alphanumeric() || ch == '_' || ch == '\'' {
                    i += ch.len_utf8();
                } else {
                    break;
                }
            }
            tokens.push(Token { kind: TokenKind::Ident(src[start..i].to_string()), span: span(i) });
            continue;
        }
        if c == '@' {
            i += 1;
            while let Some(ch) = src[i..].chars().next() {
                if ch.is_alphanumeric() || ch == '_' {
                    i += ch.len_utf8();
                } else {
                    break;
                }
            }
            if i == start + 1 {
                return Err(ParseError::new(file, line, col, "empty label after `@`"));
            }
            tokens.push(Token { kind: TokenKind::Label(src[start + 1..i].to_string()), span: span(i) });
            continue;
        }
        if let Some(sym) = unicode_sym(c) {
            i += c.len_utf8();
            tokens.push(Token { kind: TokenKind::Sym(sym), span: span(i) });
            continue;
        }
        if let Some((text, sym)) = ASCII_SYMS.iter().find(|(t, _)| src[i..].starts_with(t)) {
            i += text.len();
            tokens.push(Token { kind: TokenKind::Sym(*sym), span: span(i) });
            continue;
        }
        return Err(ParseError::new(file, line, col, format!("unexpected character `{c}`")));
    }
    let col = (src[line_start..].chars().count() + 1) as u32;
    tokens.push(Token {
        kind: TokenKind::Eof,
        span: Span { offset: src.len(), end: src.len(), line, col },
    });
    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        tokenize("t", src).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn unicode_and_ascii_operators_agree() {
        assert_eq!(kinds("x ∈ 1..5"), kinds("x ∈ 1 .. 5"));
        assert_eq!(kinds("a ↦ b"), kinds("a |-> b"));
        assert_eq!(kinds("f : A → B"), kinds("f : A --> B"));
    }

    #[test]
    fn range_is_not_a_decimal() {
        assert_eq!(
            kinds("1..5"),
            vec![TokenKind::Int(1), TokenKind::Sym(Sym::DotDot), TokenKind::Int(5), TokenKind::Eof]
        );
    }

    #[test]
    fn comments_and_positions() {
        let toks = tokenize("t", "// header\n  @grd1 x # trailing\n").unwrap();
        assert_eq!(toks[0].kind, TokenKind::Label("grd1".into()));
        assert_eq!((toks[0].span.line, toks[0].span.col), (2, 3));
        assert_eq!(toks[1].kind, TokenKind::Ident("x".into()));
        assert_eq!(toks.len(), 3);
    }

    #[test]
    fn stray_character_is_reported_with_position() {
        let err = tokenize("m.ebs", "x := $").unwrap_err();
        assert_eq!((err.line, err.col), (1, 6));
    }
}
