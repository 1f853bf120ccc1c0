//! Term syntax.
//!
//! ```text
//! term   := ("\" | "λ") ident "."? term | appseq
//! appseq := factor factor*
//! factor := ident | nat | "(" term ")" | ("\" | "λ") ...
//! ```
//!
//! Plain juxtaposition associates to the left. A parenthesized factor that is
//! followed by more factors is applied to everything after it, so
//! `(f)(f)x` reads as `f (f x)` and `(\f \x x) \y y` as an application.

use thiserror::Error;

use super::term::Term;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("syntax error at offset {pos}: {msg}")]
pub struct ParseError {
    pub pos: usize,
    pub msg: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Lambda,
    Dot,
    Open,
    Close,
    Ident(String),
    Nat(u64),
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let mut out = Vec::new();
    let mut it = src.char_indices().peekable();
    while let Some(&(i, c)) = it.peek() {
        match c {
            c if c.is_whitespace() => {
                it.next();
            }
            '\\' | 'λ' => {
                it.next();
                out.push((i, Tok::Lambda));
            }
            '.' => {
                it.next();
                out.push((i, Tok::Dot));
            }
            '(' => {
                it.next();
                out.push((i, Tok::Open));
            }
            ')' => {
                it.next();
                out.push((i, Tok::Close));
            }
            c if c.is_ascii_digit() => {
                let mut s = String::new();
                while let Some(&(_, d)) = it.peek() {
                    if !d.is_ascii_digit() {
                        break;
                    }
                    s.push(d);
                    it.next();
                }
                let n = s.parse().map_err(|_| ParseError {
                    pos: i,
                    msg: "numeral too large".into(),
                })?;
                out.push((i, Tok::Nat(n)));
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut s = String::new();
                while let Some(&(_, d)) = it.peek() {
                    if !(d.is_alphanumeric() || d == '_' || d == '\'') || d == 'λ' {
                        break;
                    }
                    s.push(d);
                    it.next();
                }
                out.push((i, Tok::Ident(s)));
            }
            c => {
                return Err(ParseError {
                    pos: i,
                    msg: format!("unexpected character `{c}`"),
                })
            }
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn fail<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            pos: self.pos(),
            msg: msg.into(),
        })
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        if self.peek() == Some(&Tok::Lambda) {
            return self.abstraction();
        }
        self.appseq()
    }

    fn abstraction(&mut self) -> Result<Term, ParseError> {
        self.at += 1;
        let name = match self.peek() {
            Some(Tok::Ident(x)) => x.clone(),
            _ => return self.fail("expected a variable after lambda"),
        };
        self.at += 1;
        if self.peek() == Some(&Tok::Dot) {
            self.at += 1;
        }
        if !self.starts_factor() {
            return self.fail("expected a lambda body");
        }
        Ok(Term::abs(&name, self.term()?))
    }

    fn starts_factor(&self) -> bool {
        matches!(
            self.peek(),
            Some(Tok::Ident(_) | Tok::Nat(_) | Tok::Open | Tok::Lambda)
        )
    }

    fn appseq(&mut self) -> Result<Term, ParseError> {
        let mut acc: Option<Term> = None;
        while self.starts_factor() {
            if self.peek() == Some(&Tok::Lambda) {
                // a trailing abstraction swallows the rest
                let lam = self.abstraction()?;
                acc = Some(match acc {
                    None => lam,
                    Some(f) => Term::app(f, lam),
                });
                break;
            }
            let parenthesized = self.peek() == Some(&Tok::Open);
            let f = self.factor()?;
            let item = if parenthesized && self.starts_factor() {
                Term::app(f, self.appseq()?)
            } else {
                f
            };
            acc = Some(match acc {
                None => item,
                Some(a) => Term::app(a, item),
            });
        }
        match acc {
            Some(t) => Ok(t),
            None => self.fail("expected a term"),
        }
    }

    fn factor(&mut self) -> Result<Term, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Ident(x)) => {
                self.at += 1;
                Ok(Term::Var(x))
            }
            Some(Tok::Nat(n)) => {
                self.at += 1;
                Ok(Term::church(n))
            }
            Some(Tok::Open) => {
                self.at += 1;
                let t = self.term()?;
                if self.peek() != Some(&Tok::Close) {
                    return self.fail("expected `)`");
                }
                self.at += 1;
                Ok(t)
            }
            _ => self.fail("expected a term"),
        }
    }
}

pub fn parse(src: &str) -> Result<Term, ParseError> {
    let mut p = Parser {
        toks: lex(src)?,
        at: 0,
        end: src.len(),
    };
    let t = p.term()?;
    if p.at != p.toks.len() {
        return p.fail("unexpected trailing input");
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &str) -> Term {
        Term::var(x)
    }

    #[test]
    fn krivine_style_application() {
        let t = parse(r"(\f \x (f)(f)x) \x x").unwrap();
        let expected = Term::app(
            Term::abs("f", Term::abs("x", Term::app(v("f"), Term::app(v("f"), v("x"))))),
            Term::abs("x", v("x")),
        );
        assert_eq!(t, expected);
    }

    #[test]
    fn juxtaposition_is_left_associative() {
        assert_eq!(
            parse("x y z").unwrap(),
            Term::app(Term::app(v("x"), v("y")), v("z"))
        );
        assert_eq!(
            parse("f (f x)").unwrap(),
            Term::app(v("f"), Term::app(v("f"), v("x")))
        );
    }

    #[test]
    fn numerals_and_dots() {
        assert_eq!(parse("2").unwrap(), Term::church(2));
        assert_eq!(parse(r"λx.x").unwrap(), parse(r"\x x").unwrap());
        assert_eq!(
            parse(r"(\x.x)(\x.x)").unwrap(),
            Term::app(Term::abs("x", v("x")), Term::abs("x", v("x")))
        );
    }

    #[test]
    fn display_reparses() {
        for src in [r"(\f \x (f)(f)x) \x x", "(2)(2)", r"((\x x) a) b", r"\x.x x", "f (g h) k"] {
            let t = parse(src).unwrap();
            assert_eq!(parse(&t.to_string()).unwrap(), t, "{src} -> {t}");
        }
    }

    #[test]
    fn errors_carry_positions() {
        assert_eq!(parse(r"\x").unwrap_err().pos, 2);
        assert_eq!(parse("(x").unwrap_err().pos, 2);
        assert_eq!(parse("x )").unwrap_err().pos, 2);
        assert!(parse("").is_err());
        assert_eq!(parse("x # y").unwrap_err().pos, 2);
    }
}
