//! Tokenizer and statement parser for scenario files.
//!
//! A scenario is a sequence of lines of the form
//!
//! ```text
//! let <name> : <kind> = <literal>
//! run <pipeline> key=value ... [expect key=value ...]
//! ```
//!
//! Newlines end a statement only outside brackets, so long literals may
//! span several lines. `#` starts a comment.

use std::fmt;

use cantor_core::clopen::Rational;
use num_bigint::BigInt;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{pos}: {message}")]
pub struct SyntaxError {
    pub pos: Pos,
    pub message: String,
}

fn error<T>(pos: Pos, message: impl Into<String>) -> Result<T, SyntaxError> {
    Err(SyntaxError {
        pos,
        message: message.into(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(BigInt),
    Str(String),
    Open(char),
    Close(char),
    Comma,
    Colon,
    Equals,
    Slash,
    Minus,
    Star,
    Newline,
}

fn tokenize(text: &str) -> Result<Vec<(Tok, Pos)>, SyntaxError> {
    let mut out = Vec::new();
    let mut depth: Vec<(char, Pos)> = Vec::new();
    for (index, line) in text.lines().enumerate() {
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let pos = Pos {
                line: index + 1,
                col: i + 1,
            };
            let c = chars[i];
            match c {
                '#' => break,
                c if c.is_whitespace() => {
                    i += 1;
                    continue;
                }
                '"' => {
                    let start = i + 1;
                    let Some(len) = chars[start..].iter().position(|&c| c == '"') else {
                        return error(pos, "unterminated string");
                    };
                    out.push((Tok::Str(chars[start..start + len].iter().collect()), pos));
                    i = start + len + 1;
                    continue;
                }
                c if c.is_ascii_digit() => {
                    let len = chars[i..].iter().take_while(|c| c.is_ascii_digit()).count();
                    let digits: String = chars[i..i + len].iter().collect();
                    out.push((Tok::Int(digits.parse().expect("digits")), pos));
                    i += len;
                    continue;
                }
                c if c.is_alphabetic() || c == '_' => {
                    let len = chars[i..]
                        .iter()
                        .take_while(|c| c.is_alphanumeric() || **c == '_' || **c == '-')
                        .count();
                    out.push((Tok::Ident(chars[i..i + len].iter().collect()), pos));
                    i += len;
                    continue;
                }
                '[' | '{' | '(' => {
                    depth.push((c, pos));
                    out.push((Tok::Open(c), pos));
                }
                ']' | '}' | ')' => {
                    let expected = match c {
                        ']' => '[',
                        '}' => '{',
                        _ => '(',
                    };
                    match depth.pop() {
                        Some((open, _)) if open == expected => out.push((Tok::Close(c), pos)),
                        _ => return error(pos, format!("unbalanced '{c}'")),
                    }
                }
                ',' => out.push((Tok::Comma, pos)),
                ':' => out.push((Tok::Colon, pos)),
                '=' => out.push((Tok::Equals, pos)),
                '/' => out.push((Tok::Slash, pos)),
                '-' => out.push((Tok::Minus, pos)),
                '*' => out.push((Tok::Star, pos)),
                other => return error(pos, format!("unexpected character '{other}'")),
            }
            i += 1;
        }
        if depth.is_empty() {
            out.push((
                Tok::Newline,
                Pos {
                    line: index + 1,
                    col: chars.len() + 1,
                },
            ));
        }
    }
    if let Some((c, pos)) = depth.pop() {
        return error(pos, format!("'{c}' is never closed"));
    }
    Ok(out)
}

/// Bracket kinds of a group expression.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Delim {
    /// `[...]`
    List,
    /// `{...}`
    Set,
    /// `(...)`
    Tuple,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Number(Rational),
    Str(String),
    Ident(String),
    Star,
    Group(Delim, Vec<Phrase>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Spanned {
    pub expr: Expr,
    pub pos: Pos,
}

/// Juxtaposed expressions, e.g. `complement ["1"] exhausted`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Phrase {
    pub items: Vec<Spanned>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Binding {
    pub key: String,
    pub value: Spanned,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Statement {
    Let {
        name: String,
        kind: String,
        value: Phrase,
        pos: Pos,
    },
    Run {
        pipeline: String,
        args: Vec<Binding>,
        expects: Vec<Binding>,
        pos: Pos,
    },
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|t| &t.0)
    }

    fn pos(&self) -> Pos {
        self.toks
            .get(self.at)
            .or_else(|| self.toks.last())
            .map_or(Pos { line: 1, col: 1 }, |t| t.1)
    }

    fn bump(&mut self) -> Option<(Tok, Pos)> {
        let t = self.toks.get(self.at).cloned();
        self.at += 1;
        t
    }

    fn ident(&mut self, what: &str) -> Result<(String, Pos), SyntaxError> {
        match self.bump() {
            Some((Tok::Ident(s), pos)) => Ok((s, pos)),
            Some((t, pos)) => error(pos, format!("expected {what}, found {}", describe(&t))),
            None => error(self.pos(), format!("expected {what}")),
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<Pos, SyntaxError> {
        match self.bump() {
            Some((t, pos)) if t == tok => Ok(pos),
            Some((t, pos)) => error(pos, format!("expected {}, found {}", describe(&tok), describe(&t))),
            None => error(self.pos(), format!("expected {}", describe(&tok))),
        }
    }

    fn statements(&mut self) -> Result<Vec<Statement>, SyntaxError> {
        let mut out = Vec::new();
        while let Some(tok) = self.peek() {
            match tok {
                Tok::Newline => {
                    self.at += 1;
                }
                Tok::Ident(word) if word == "let" => out.push(self.let_statement()?),
                Tok::Ident(word) if word == "run" => out.push(self.run_statement()?),
                other => {
                    let msg = format!("expected 'let' or 'run', found {}", describe(other));
                    return error(self.pos(), msg);
                }
            }
        }
        Ok(out)
    }

    fn let_statement(&mut self) -> Result<Statement, SyntaxError> {
        let (_, pos) = self.bump().expect("keyword");
        let (name, _) = self.ident("a name")?;
        self.expect(Tok::Colon)?;
        let (kind, _) = self.ident("a kind")?;
        self.expect(Tok::Equals)?;
        let value = self.phrase(&[Tok::Newline])?;
        self.expect(Tok::Newline)?;
        Ok(Statement::Let { name, kind, value, pos })
    }

    fn run_statement(&mut self) -> Result<Statement, SyntaxError> {
        let (_, pos) = self.bump().expect("keyword");
        let (pipeline, _) = self.ident("a pipeline name")?;
        let mut args = Vec::new();
        let mut expects = Vec::new();
        let mut in_expect = false;
        loop {
            match self.peek() {
                None | Some(Tok::Newline) => break,
                Some(Tok::Ident(word)) if word == "expect" && !in_expect => {
                    self.at += 1;
                    in_expect = true;
                }
                _ => {
                    let (key, key_pos) = self.ident("key=value")?;
                    self.expect(Tok::Equals)?;
                    let value = self.expr()?;
                    let binding = Binding {
                        key,
                        value,
                        pos: key_pos,
                    };
                    if in_expect {
                        expects.push(binding);
                    } else {
                        args.push(binding);
                    }
                }
            }
        }
        self.bump();
        Ok(Statement::Run {
            pipeline,
            args,
            expects,
            pos,
        })
    }

    fn phrase(&mut self, stops: &[Tok]) -> Result<Phrase, SyntaxError> {
        let pos = self.pos();
        let mut items = Vec::new();
        while let Some(tok) = self.peek() {
            if stops.contains(tok) || matches!(tok, Tok::Close(_)) {
                break;
            }
            items.push(self.expr()?);
        }
        if items.is_empty() {
            return error(pos, "expected a value");
        }
        Ok(Phrase { items, pos })
    }

    fn expr(&mut self) -> Result<Spanned, SyntaxError> {
        let Some((tok, pos)) = self.bump() else {
            return error(self.pos(), "expected a value");
        };
        let expr = match tok {
            Tok::Str(s) => Expr::Str(s),
            Tok::Ident(s) => Expr::Ident(s),
            Tok::Star => Expr::Star,
            Tok::Int(n) => Expr::Number(self.fraction(n, pos)?),
            Tok::Minus => match self.bump() {
                Some((Tok::Int(n), pos)) => Expr::Number(-self.fraction(n, pos)?),
                _ => return error(pos, "expected a number after '-'"),
            },
            Tok::Open(c) => {
                let delim = match c {
                    '[' => Delim::List,
                    '{' => Delim::Set,
                    _ => Delim::Tuple,
                };
                let mut items = Vec::new();
                while !matches!(self.peek(), Some(Tok::Close(_))) {
                    items.push(self.phrase(&[Tok::Comma])?);
                    if self.peek() == Some(&Tok::Comma) {
                        self.at += 1;
                    } else {
                        break;
                    }
                }
                match self.bump() {
                    Some((Tok::Close(_), _)) => {}
                    Some((t, pos)) => {
                        return error(pos, format!("expected ',' or closing bracket, found {}", describe(&t)))
                    }
                    None => return error(pos, "unclosed bracket"),
                }
                Expr::Group(delim, items)
            }
            other => return error(pos, format!("unexpected {}", describe(&other))),
        };
        Ok(Spanned { expr, pos })
    }

    fn fraction(&mut self, numerator: BigInt, pos: Pos) -> Result<Rational, SyntaxError> {
        if self.peek() != Some(&Tok::Slash) {
            return Ok(Rational::from_integer(numerator));
        }
        self.at += 1;
        match self.bump() {
            Some((Tok::Int(d), _)) if d != BigInt::from(0) => Ok(Rational::new(numerator, d)),
            Some((Tok::Int(_), pos)) => error(pos, "zero denominator"),
            _ => error(pos, "expected a denominator after '/'"),
        }
    }
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Ident(s) => format!("'{s}'"),
        Tok::Int(n) => format!("number {n}"),
        Tok::Str(s) => format!("string \"{s}\""),
        Tok::Open(c) | Tok::Close(c) => format!("'{c}'"),
        Tok::Comma => "','".into(),
        Tok::Colon => "':'".into(),
        Tok::Equals => "'='".into(),
        Tok::Slash => "'/'".into(),
        Tok::Minus => "'-'".into(),
        Tok::Star => "'*'".into(),
        Tok::Newline => "end of line".into(),
    }
}

pub fn parse(text: &str) -> Result<Vec<Statement>, SyntaxError> {
    let toks = tokenize(text)?;
    Parser { toks, at: 0 }.statements()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_let_and_run() {
        let text = "# demo\nlet a : clopen = {\"0\",\n  \"10\"}\nrun measure set=a expect measure=3/4\n";
        let stmts = parse(text).unwrap();
        assert_eq!(stmts.len(), 2);
        match &stmts[0] {
            Statement::Let { name, kind, value, .. } => {
                assert_eq!((name.as_str(), kind.as_str()), ("a", "clopen"));
                assert!(matches!(&value.items[0].expr, Expr::Group(Delim::Set, items) if items.len() == 2));
            }
            other => panic!("{other:?}"),
        }
        match &stmts[1] {
            Statement::Run {
                pipeline,
                args,
                expects,
                ..
            } => {
                assert_eq!(pipeline, "measure");
                assert_eq!(args[0].key, "set");
                assert_eq!(expects[0].value.expr, Expr::Number(Rational::new(3.into(), 4.into())));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn negative_numbers_and_tuples() {
        let stmts = parse("let f : function = [(-1/2, \"0\"), (2, \"\")]\n").unwrap();
        let Statement::Let { value, .. } = &stmts[0] else {
            panic!()
        };
        let Expr::Group(Delim::List, items) = &value.items[0].expr else {
            panic!()
        };
        let Expr::Group(Delim::Tuple, parts) = &items[0].items[0].expr else {
            panic!()
        };
        assert_eq!(
            parts[0].items[0].expr,
            Expr::Number(Rational::new((-1).into(), 2.into()))
        );
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse("let a : clopen = {\"0\"\n").unwrap_err();
        assert_eq!(e.pos, Pos { line: 1, col: 18 });
        let e = parse("let a : clopen = ]\n").unwrap_err();
        assert_eq!(e.pos.col, 18);
        let e = parse("measure a\n").unwrap_err();
        assert!(e.message.contains("expected 'let' or 'run'"));
        let e = parse("let a : rational = 1/0\n").unwrap_err();
        assert!(e.message.contains("zero denominator"));
    }
}
