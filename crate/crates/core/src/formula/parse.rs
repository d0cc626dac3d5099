//! Recursive-descent parser for the concrete formula syntax.
//!
//! ```text
//! formula := conj ('|' conj)*
//! conj    := unary ('&' unary)*
//! unary   := '~' IDENT | '<>' unary | '[]' unary | '(' formula ')' | atom | IDENT
//! atom    := 'dep' '(' list? ';' IDENT ')'
//!          | 'indep' '(' list ';' list? ';' list ')'
//!          | 'inc' '(' list ';' list ')' | 'exc' '(' list ';' list ')'
//!          | 'D' '[' IDENT ']' '(' list ')'
//! list    := IDENT (',' IDENT)*
//! ```

use thiserror::Error;

use super::{Formula, VarId};
use crate::atoms::{builtin_registry, AtomRegistry};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} at byte {pos}")]
pub struct ParseError {
    pub pos: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("unexpected character {0:?}")]
    UnexpectedChar(char),
    #[error("unexpected {found}, expected {expected}")]
    Unexpected { found: String, expected: String },
    #[error("`~` only applies to a proposition")]
    NegationOfCompound,
    #[error("unknown atom `{0}`")]
    UnknownAtom(String),
    #[error("atom `{atom}` does not accept {got} arguments")]
    ArityMismatch { atom: String, got: usize },
    #[error("empty argument list")]
    EmptyList,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Tilde,
    Amp,
    Bar,
    Diamond,
    BoxOp,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Tilde => "`~`".into(),
            Tok::Amp => "`&`".into(),
            Tok::Bar => "`|`".into(),
            Tok::Diamond => "`<>`".into(),
            Tok::BoxOp => "`[]`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let tok = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'~' => Tok::Tilde,
            b'&' => Tok::Amp,
            b'|' => Tok::Bar,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b',' => Tok::Comma,
            b';' => Tok::Semi,
            b']' => Tok::RBracket,
            b'<' if bytes.get(i + 1) == Some(&b'>') => {
                i += 1;
                Tok::Diamond
            }
            b'[' if bytes.get(i + 1) == Some(&b']') => {
                i += 1;
                Tok::BoxOp
            }
            b'[' => Tok::LBracket,
            c if c.is_ascii_alphabetic() => {
                while i + 1 < bytes.len()
                    && (bytes[i + 1].is_ascii_alphanumeric() || bytes[i + 1] == b'_')
                {
                    i += 1;
                }
                Tok::Ident(text[start..=i].to_string())
            }
            _ => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(ParseError {
                    pos: i,
                    kind: ParseErrorKind::UnexpectedChar(ch),
                });
            }
        };
        out.push((start, tok));
        i += 1;
    }
    out.push((text.len(), Tok::Eof));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    at: usize,
    registry: &'a AtomRegistry,
}

/// Parses with the built-in atoms (`dep`, `indep`, `inc`, `exc`, `zero`).
pub fn parse(text: &str) -> Result<Formula, ParseError> {
    parse_with(text, builtin_registry())
}

/// Parses, resolving `D[name]` atoms against `registry`.
pub fn parse_with(text: &str, registry: &AtomRegistry) -> Result<Formula, ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        at: 0,
        registry,
    };
    let f = p.formula()?;
    p.expect(Tok::Eof, "end of input")?;
    Ok(f)
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].1
    }

    fn peek2(&self) -> &Tok {
        self.toks
            .get(self.at + 1)
            .map(|(_, t)| t)
            .unwrap_or(&Tok::Eof)
    }

    fn pos(&self) -> usize {
        self.toks[self.at].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].1.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn err<T>(&self, kind: ParseErrorKind) -> Result<T, ParseError> {
        Err(ParseError {
            pos: self.pos(),
            kind,
        })
    }

    fn unexpected<T>(&self, expected: &str) -> Result<T, ParseError> {
        self.err(ParseErrorKind::Unexpected {
            found: self.peek().describe(),
            expected: expected.to_string(),
        })
    }

    fn expect(&mut self, tok: Tok, expected: &str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.unexpected(expected)
        }
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.conj()?;
        while *self.peek() == Tok::Bar {
            self.bump();
            let rhs = self.conj()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn conj(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.unary()?;
        while *self.peek() == Tok::Amp {
            self.bump();
            let rhs = self.unary()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek().clone() {
            Tok::Tilde => {
                self.bump();
                match self.peek().clone() {
                    Tok::Ident(name)
                        if !(is_atom_keyword(&name) && *self.peek2() == Tok::LParen)
                            && !(name == "D" && *self.peek2() == Tok::LBracket) =>
                    {
                        let v = self.ident()?;
                        Ok(Formula::NegProp(v))
                    }
                    Tok::Eof => self.unexpected("proposition"),
                    _ => self.err(ParseErrorKind::NegationOfCompound),
                }
            }
            Tok::Diamond => {
                self.bump();
                Ok(Formula::diamond(self.unary()?))
            }
            Tok::BoxOp => {
                self.bump();
                Ok(Formula::boxed(self.unary()?))
            }
            Tok::LParen => {
                self.bump();
                let f = self.formula()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            Tok::Ident(name) => {
                if is_atom_keyword(&name) && *self.peek2() == Tok::LParen {
                    self.keyword_atom(&name)
                } else if name == "D" && *self.peek2() == Tok::LBracket {
                    self.named_atom()
                } else {
                    Ok(Formula::Prop(self.ident()?))
                }
            }
            _ => self.unexpected("formula"),
        }
    }

    fn ident(&mut self) -> Result<VarId, ParseError> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.bump();
                // The lexer only produces valid identifiers.
                Ok(VarId::new(&name).expect("lexer yields identifiers"))
            }
            _ => self.unexpected("identifier"),
        }
    }

    /// Possibly empty comma-separated identifier list.
    fn list(&mut self) -> Result<Vec<VarId>, ParseError> {
        let mut out = Vec::new();
        if !matches!(self.peek(), Tok::Ident(_)) {
            return Ok(out);
        }
        out.push(self.ident()?);
        while *self.peek() == Tok::Comma {
            self.bump();
            out.push(self.ident()?);
        }
        Ok(out)
    }

    fn nonempty_list(&mut self) -> Result<Vec<VarId>, ParseError> {
        let pos = self.pos();
        let l = self.list()?;
        if l.is_empty() {
            if matches!(self.peek(), Tok::Semi | Tok::RParen) {
                return Err(ParseError {
                    pos,
                    kind: ParseErrorKind::EmptyList,
                });
            }
            return self.unexpected("identifier");
        }
        Ok(l)
    }

    fn keyword_atom(&mut self, name: &str) -> Result<Formula, ParseError> {
        let start = self.pos();
        self.bump();
        self.expect(Tok::LParen, "`(`")?;
        let f = match name {
            "dep" => {
                let determiners = self.list()?;
                self.expect(Tok::Semi, "`;`")?;
                let determined = self.ident()?;
                Formula::Dep {
                    determiners,
                    determined,
                }
            }
            "indep" => {
                let left = self.nonempty_list()?;
                self.expect(Tok::Semi, "`;`")?;
                let cond = self.list()?;
                self.expect(Tok::Semi, "`;`")?;
                let right = self.nonempty_list()?;
                Formula::Indep { left, cond, right }
            }
            "inc" | "exc" => {
                let p = self.nonempty_list()?;
                self.expect(Tok::Semi, "`;`")?;
                let q = self.nonempty_list()?;
                if p.len() != q.len() {
                    return Err(ParseError {
                        pos: start,
                        kind: ParseErrorKind::ArityMismatch {
                            atom: name.to_string(),
                            got: p.len() + q.len(),
                        },
                    });
                }
                let mut args = p;
                args.extend(q);
                self.check_registered(start, name, args.len())?;
                Formula::GenAtom {
                    atom: name.to_string(),
                    args,
                }
            }
            _ => unreachable!("caller checks keywords"),
        };
        self.expect(Tok::RParen, "`)`")?;
        Ok(f)
    }

    fn named_atom(&mut self) -> Result<Formula, ParseError> {
        let start = self.pos();
        self.bump();
        self.expect(Tok::LBracket, "`[`")?;
        let name = match self.bump() {
            Tok::Ident(n) => n,
            _ => {
                self.at -= 1;
                return self.unexpected("atom name");
            }
        };
        self.expect(Tok::RBracket, "`]`")?;
        self.expect(Tok::LParen, "`(`")?;
        let args = self.nonempty_list()?;
        self.expect(Tok::RParen, "`)`")?;
        self.check_registered(start, &name, args.len())?;
        Ok(Formula::GenAtom { atom: name, args })
    }

    fn check_registered(&self, pos: usize, name: &str, width: usize) -> Result<(), ParseError> {
        let atom = self.registry.get(name).ok_or(ParseError {
            pos,
            kind: ParseErrorKind::UnknownAtom(name.to_string()),
        })?;
        if !atom.arity().admits(width) {
            return Err(ParseError {
                pos,
                kind: ParseErrorKind::ArityMismatch {
                    atom: name.to_string(),
                    got: width,
                },
            });
        }
        Ok(())
    }
}

fn is_atom_keyword(name: &str) -> bool {
    matches!(name, "dep" | "indep" | "inc" | "exc")
}
