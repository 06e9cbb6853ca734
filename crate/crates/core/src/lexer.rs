//! Tokenizer for `.fcr` sources.

use crate::ast::Span;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    /// `[`
    LBrack,
    /// `]`
    RBrack,
    /// `[]`, the choice separator and the "always" operator.
    Box,
    /// `<>`, inequality and "eventually".
    Diamond,
    LParen,
    RParen,
    Comma,
    Semi,
    Colon,
    Assign,
    Slash,
    Amp,
    Par,
    Plus,
    Minus,
    Eq,
    Lt,
    Le,
    Gt,
    Ge,
    Arrow,
    DotDot,
    Ellipsis,
    Pipe,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(v) => format!("`{v}`"),
            Tok::Eof => "end of input".to_string(),
            other => format!("`{}`", other.text()),
        }
    }

    pub fn text(&self) -> String {
        match self {
            Tok::Ident(s) => s.clone(),
            Tok::Int(v) => v.to_string(),
            Tok::LBrack => "[".into(),
            Tok::RBrack => "]".into(),
            Tok::Box => "[]".into(),
            Tok::Diamond => "<>".into(),
            Tok::LParen => "(".into(),
            Tok::RParen => ")".into(),
            Tok::Comma => ",".into(),
            Tok::Semi => ";".into(),
            Tok::Colon => ":".into(),
            Tok::Assign => ":=".into(),
            Tok::Slash => "/".into(),
            Tok::Amp => "&".into(),
            Tok::Par => "||".into(),
            Tok::Plus => "+".into(),
            Tok::Minus => "-".into(),
            Tok::Eq => "=".into(),
            Tok::Lt => "<".into(),
            Tok::Le => "<=".into(),
            Tok::Gt => ">".into(),
            Tok::Ge => ">=".into(),
            Tok::Arrow => "=>".into(),
            Tok::DotDot => "..".into(),
            Tok::Ellipsis => "...".into(),
            Tok::Pipe => "|".into(),
            Tok::Eof => "".into(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexError {
    pub span: Span,
    pub found: String,
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, LexError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);

    let advance = |i: &mut usize, line: &mut u32, col: &mut u32, n: usize| {
        for _ in 0..n {
            if chars[*i] == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            *i += 1;
        }
    };

    while i < chars.len() {
        let c = chars[i];
        let next = chars.get(i + 1).copied();
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, 1);
            continue;
        }
        if c == '/' && next == Some('/') {
            while i < chars.len() && chars[i] != '\n' {
                advance(&mut i, &mut line, &mut col, 1);
            }
            continue;
        }
        if c == '/' && next == Some('*') {
            let start = Span {
                start_line: line,
                start_col: col,
                end_line: line,
                end_col: col,
            };
            advance(&mut i, &mut line, &mut col, 2);
            loop {
                if i + 1 >= chars.len() {
                    return Err(LexError {
                        span: start,
                        found: "unterminated comment".into(),
                    });
                }
                if chars[i] == '*' && chars[i + 1] == '/' {
                    advance(&mut i, &mut line, &mut col, 2);
                    break;
                }
                advance(&mut i, &mut line, &mut col, 1);
            }
            continue;
        }

        let (sl, sc) = (line, col);
        let (tok, len) = if c.is_ascii_alphabetic() || c == '_' {
            let mut j = i;
            while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                j += 1;
            }
            (Tok::Ident(chars[i..j].iter().collect()), j - i)
        } else if c.is_ascii_digit() {
            let mut j = i;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            let text: String = chars[i..j].iter().collect();
            let v = text.parse::<i64>().map_err(|_| LexError {
                span: Span {
                    start_line: sl,
                    start_col: sc,
                    end_line: sl,
                    end_col: sc,
                },
                found: text.clone(),
            })?;
            (Tok::Int(v), j - i)
        } else {
            let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
            let three: String = chars[i..(i + 3).min(chars.len())].iter().collect();
            if three == "..." {
                (Tok::Ellipsis, 3)
            } else {
                match two.as_str() {
                    "[]" => (Tok::Box, 2),
                    "<>" => (Tok::Diamond, 2),
                    ":=" => (Tok::Assign, 2),
                    "||" => (Tok::Par, 2),
                    "<=" => (Tok::Le, 2),
                    ">=" => (Tok::Ge, 2),
                    "=>" => (Tok::Arrow, 2),
                    ".." => (Tok::DotDot, 2),
                    _ => {
                        let t = match c {
                            '[' => Tok::LBrack,
                            ']' => Tok::RBrack,
                            '(' => Tok::LParen,
                            ')' => Tok::RParen,
                            ',' => Tok::Comma,
                            ';' => Tok::Semi,
                            ':' => Tok::Colon,
                            '/' => Tok::Slash,
                            '&' => Tok::Amp,
                            '+' => Tok::Plus,
                            '-' => Tok::Minus,
                            '=' => Tok::Eq,
                            '<' => Tok::Lt,
                            '>' => Tok::Gt,
                            '|' => Tok::Pipe,
                            other => {
                                return Err(LexError {
                                    span: Span {
                                        start_line: sl,
                                        start_col: sc,
                                        end_line: sl,
                                        end_col: sc,
                                    },
                                    found: other.to_string(),
                                })
                            }
                        };
                        (t, 1)
                    }
                }
            }
        };
        advance(&mut i, &mut line, &mut col, len);
        out.push(Token {
            tok,
            span: Span {
                start_line: sl,
                start_col: sc,
                end_line: line,
                end_col: col,
            },
        });
    }
    out.push(Token {
        tok: Tok::Eof,
        span: Span {
            start_line: line,
            start_col: col,
            end_line: line,
            end_col: col,
        },
    });
    Ok(out)
}
