//! Recursive-descent parser for the ASCII formula grammar.
//!
//! Quantifiers: `EX x.` / `AX x.` bind element variables, `ES X.` / `AS X.`
//! bind set variables, and each extends maximally to the right.
//! Connectives in decreasing binding strength: `!`, `&`, `|`, `->`, `<->`
//! (`&`/`|` left-associative, `->` right-associative).  Atoms: `x <= y`,
//! `x in S`, `S sub T`, `S = T`, `atom(S)`, `meager(S)`, and the fixed
//! predicate names such as `dense(S)`.  Set terms use `+` (union),
//! `*` (intersection), `-` (difference), and `Top`.

use super::ast::{Formula, SetTerm, Sort};
use super::morley;
use crate::error::{EngineError, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    Dot,
    Bang,
    Amp,
    Pipe,
    Arrow,
    DArrow,
    Le,
    Eq,
    Plus,
    Star,
    Minus,
}

#[derive(Debug, Clone)]
struct Lexed {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Lexed>> {
    let mut out = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let bytes: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let here = (line, col);
        let push = |tok: Tok, out: &mut Vec<Lexed>| {
            out.push(Lexed { tok, line: here.0, col: here.1 });
        };
        match c {
            '\n' => {
                line += 1;
                col = 1;
                i += 1;
                continue;
            }
            c if c.is_whitespace() => {}
            '(' => push(Tok::LParen, &mut out),
            ')' => push(Tok::RParen, &mut out),
            '.' => push(Tok::Dot, &mut out),
            '!' => push(Tok::Bang, &mut out),
            '&' => push(Tok::Amp, &mut out),
            '|' => push(Tok::Pipe, &mut out),
            '+' => push(Tok::Plus, &mut out),
            '*' => push(Tok::Star, &mut out),
            '=' => push(Tok::Eq, &mut out),
            '-' => {
                if bytes.get(i + 1) == Some(&'>') {
                    push(Tok::Arrow, &mut out);
                    i += 1;
                    col += 1;
                } else {
                    push(Tok::Minus, &mut out);
                }
            }
            '<' => {
                if bytes.get(i + 1) == Some(&'-') && bytes.get(i + 2) == Some(&'>') {
                    push(Tok::DArrow, &mut out);
                    i += 2;
                    col += 2;
                } else if bytes.get(i + 1) == Some(&'=') {
                    push(Tok::Le, &mut out);
                    i += 1;
                    col += 1;
                } else {
                    return Err(EngineError::Syntax {
                        line,
                        col,
                        msg: "expected `<=` or `<->`".into(),
                    });
                }
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_alphanumeric() || bytes[i] == '_' || bytes[i] == '\'')
                {
                    i += 1;
                    col += 1;
                }
                let word: String = bytes[start..i].iter().collect();
                out.push(Lexed { tok: Tok::Ident(word), line: here.0, col: here.1 });
                continue;
            }
            other => {
                return Err(EngineError::Syntax {
                    line,
                    col,
                    msg: format!("unexpected character `{other}`"),
                });
            }
        }
        i += 1;
        col += 1;
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Lexed>,
    pos: usize,
    /// Innermost binding last; shadowing allowed.
    scope: Vec<(String, Sort)>,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|l| &l.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map(|l| (l.line, l.col))
            .unwrap_or((1, 1))
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|l| l.tok.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            let (line, col) = self.here();
            Err(EngineError::Syntax { line, col, msg: format!("expected {what}") })
        }
    }

    fn err(&self, msg: impl Into<String>) -> EngineError {
        let (line, col) = self.here();
        EngineError::Syntax { line, col, msg: msg.into() }
    }

    fn sort_of(&self, name: &str) -> Option<Sort> {
        self.scope.iter().rev().find(|(n, _)| n == name).map(|(_, s)| *s)
    }

    fn formula(&mut self) -> Result<Formula> {
        let mut f = self.implies()?;
        while self.peek() == Some(&Tok::DArrow) {
            self.pos += 1;
            let g = self.implies()?;
            f = Formula::iff(f, g);
        }
        Ok(f)
    }

    fn implies(&mut self) -> Result<Formula> {
        let f = self.or()?;
        if self.peek() == Some(&Tok::Arrow) {
            self.pos += 1;
            let g = self.implies()?;
            Ok(Formula::implies(f, g))
        } else {
            Ok(f)
        }
    }

    fn or(&mut self) -> Result<Formula> {
        let mut f = self.and()?;
        while self.peek() == Some(&Tok::Pipe) {
            self.pos += 1;
            let g = self.and()?;
            f = Formula::or(f, g);
        }
        Ok(f)
    }

    fn and(&mut self) -> Result<Formula> {
        let mut f = self.unary()?;
        while self.peek() == Some(&Tok::Amp) {
            self.pos += 1;
            let g = self.unary()?;
            f = Formula::and(f, g);
        }
        Ok(f)
    }

    fn unary(&mut self) -> Result<Formula> {
        match self.peek() {
            Some(Tok::Bang) => {
                self.pos += 1;
                Ok(Formula::not(self.unary()?))
            }
            Some(Tok::Ident(w)) if matches!(w.as_str(), "EX" | "AX" | "ES" | "AS") => {
                let quant = w.clone();
                self.pos += 1;
                let name = match self.bump() {
                    Some(Tok::Ident(n)) => n,
                    _ => return Err(self.err("expected a variable name after quantifier")),
                };
                if is_reserved(&name) {
                    return Err(self.err(format!("`{name}` is reserved and cannot be a variable")));
                }
                self.expect(Tok::Dot, "`.` after quantified variable")?;
                let sort = if quant == "EX" || quant == "AX" { Sort::Elem } else { Sort::Set };
                self.scope.push((name.clone(), sort));
                let body = self.formula()?;
                self.scope.pop();
                Ok(match quant.as_str() {
                    "EX" => Formula::ExistsElem(name, Box::new(body)),
                    "AX" => Formula::ForallElem(name, Box::new(body)),
                    "ES" => Formula::ExistsSet(name, Box::new(body)),
                    _ => Formula::ForallSet(name, Box::new(body)),
                })
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Formula> {
        match self.peek().cloned() {
            Some(Tok::LParen) => {
                // Either a parenthesized formula or a parenthesized set term
                // followed by a relation; try the formula first.
                let save = self.pos;
                self.pos += 1;
                if let Ok(f) = self.formula() {
                    if self.peek() == Some(&Tok::RParen) {
                        let after = self.toks.get(self.pos + 1).map(|l| l.tok.clone());
                        // `(X) sub Y`-style terms never parse as formulas, so a
                        // successful formula parse followed by `)` wins unless a
                        // relation follows.
                        if !matches!(after, Some(Tok::Ident(ref w)) if w == "sub")
                            && !matches!(after, Some(Tok::Eq))
                        {
                            self.pos += 1;
                            return Ok(f);
                        }
                    }
                }
                self.pos = save;
                let s = self.set_term()?;
                self.relation(s)
            }
            Some(Tok::Ident(w)) => match w.as_str() {
                "true" => {
                    self.pos += 1;
                    Ok(Formula::True)
                }
                "false" => {
                    self.pos += 1;
                    Ok(Formula::False)
                }
                "atom" | "meager" => {
                    self.pos += 1;
                    self.expect(Tok::LParen, "`(`")?;
                    let s = self.set_term()?;
                    self.expect(Tok::RParen, "`)`")?;
                    Ok(if w == "atom" { Formula::IsAtom(s) } else { Formula::Meager(s) })
                }
                name if morley::signature().iter().any(|e| e.name == name) => {
                    self.pos += 1;
                    self.expect(Tok::LParen, "`(`")?;
                    let s = self.set_term()?;
                    self.expect(Tok::RParen, "`)`")?;
                    Ok(Formula::Pred(name.to_string(), s))
                }
                "Top" => {
                    self.pos += 1;
                    let s = self.set_term_tail(SetTerm::Top)?;
                    self.relation(s)
                }
                name => {
                    let (line, col) = self.here();
                    match self.sort_of(name) {
                        Some(Sort::Elem) => {
                            self.pos += 1;
                            match self.bump() {
                                Some(Tok::Le) => match self.bump() {
                                    Some(Tok::Ident(y)) => {
                                        self.check_elem(&y, line, col)?;
                                        Ok(Formula::Le(name.to_string(), y))
                                    }
                                    _ => Err(self.err("expected an element variable after `<=`")),
                                },
                                Some(Tok::Ident(ref w2)) if w2 == "in" => {
                                    let s = self.set_term()?;
                                    Ok(Formula::In(name.to_string(), s))
                                }
                                _ => Err(EngineError::Syntax {
                                    line,
                                    col,
                                    msg: format!("element variable `{name}` needs `<=` or `in`"),
                                }),
                            }
                        }
                        Some(Sort::Set) => {
                            let s = self.set_term()?;
                            self.relation(s)
                        }
                        None => Err(EngineError::Unbound { name: name.to_string(), line, col }),
                    }
                }
            },
            _ => Err(self.err("expected a formula")),
        }
    }

    fn relation(&mut self, s: SetTerm) -> Result<Formula> {
        match self.bump() {
            Some(Tok::Ident(ref w)) if w == "sub" => {
                let t = self.set_term()?;
                Ok(Formula::Sub(s, t))
            }
            Some(Tok::Eq) => {
                let t = self.set_term()?;
                Ok(Formula::Eq(s, t))
            }
            _ => {
                self.pos = self.pos.saturating_sub(1);
                Err(self.err("expected `sub` or `=` after set term"))
            }
        }
    }

    fn set_term(&mut self) -> Result<SetTerm> {
        let first = self.set_factor()?;
        self.set_term_tail(first)
    }

    fn set_term_tail(&mut self, first: SetTerm) -> Result<SetTerm> {
        let mut t = self.set_factor_tail(first)?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    let f = self.set_factor()?;
                    t = SetTerm::Union(Box::new(t), Box::new(f));
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    let f = self.set_factor()?;
                    t = SetTerm::Diff(Box::new(t), Box::new(f));
                }
                _ => return Ok(t),
            }
        }
    }

    fn set_factor(&mut self) -> Result<SetTerm> {
        let a = self.set_atom()?;
        self.set_factor_tail(a)
    }

    fn set_factor_tail(&mut self, first: SetTerm) -> Result<SetTerm> {
        let mut t = first;
        while self.peek() == Some(&Tok::Star) {
            self.pos += 1;
            let a = self.set_atom()?;
            t = SetTerm::Inter(Box::new(t), Box::new(a));
        }
        Ok(t)
    }

    fn set_atom(&mut self) -> Result<SetTerm> {
        let (line, col) = self.here();
        match self.bump() {
            Some(Tok::Ident(w)) if w == "Top" => Ok(SetTerm::Top),
            Some(Tok::Ident(name)) => match self.sort_of(&name) {
                Some(Sort::Set) => Ok(SetTerm::Var(name)),
                Some(Sort::Elem) => Err(EngineError::Sort {
                    line,
                    col,
                    msg: format!("`{name}` is an element variable but is used as a set"),
                }),
                None => Err(EngineError::Unbound { name, line, col }),
            },
            Some(Tok::LParen) => {
                let t = self.set_term()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(t)
            }
            _ => Err(EngineError::Syntax { line, col, msg: "expected a set term".into() }),
        }
    }

    fn check_elem(&self, name: &str, line: usize, col: usize) -> Result<()> {
        match self.sort_of(name) {
            Some(Sort::Elem) => Ok(()),
            Some(Sort::Set) => Err(EngineError::Sort {
                line,
                col,
                msg: format!("`{name}` is a set variable but is used as an element"),
            }),
            None => Err(EngineError::Unbound { name: name.to_string(), line, col }),
        }
    }
}

fn is_reserved(name: &str) -> bool {
    matches!(name, "EX" | "AX" | "ES" | "AS" | "in" | "sub" | "atom" | "meager" | "Top" | "true" | "false")
        || morley::signature().iter().any(|e| e.name == name)
}

/// Parses and sort-checks a formula; errors carry source positions.
pub fn parse_formula(text: &str) -> Result<Formula> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, scope: Vec::new() };
    let f = p.formula()?;
    if p.pos != p.toks.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_two_element_quantifiers() {
        let f = parse_formula("EX x. EX y. x <= y").unwrap();
        assert_eq!(
            f,
            Formula::exists_elem("x", Formula::exists_elem("y", Formula::Le("x".into(), "y".into())))
        );
    }

    #[test]
    fn parses_set_quantifier_tautology_shape() {
        let f = parse_formula("AS X. (meager(X) | !meager(X))").unwrap();
        match f {
            Formula::ForallSet(v, body) => {
                assert_eq!(v, "X");
                assert!(matches!(*body, Formula::Or(_, _)));
            }
            other => panic!("unexpected parse: {other:?}"),
        }
    }

    #[test]
    fn rejects_sort_confusion() {
        let err = parse_formula("EX x. x in y").unwrap_err();
        assert!(matches!(err, EngineError::Unbound { ref name, .. } if name == "y"));
        let err = parse_formula("EX x. ES X. X in X").unwrap_err();
        assert!(matches!(err, EngineError::Sort { .. } | EngineError::Syntax { .. }));
        let err = parse_formula("ES X. EX x. x <= X").unwrap_err();
        assert!(matches!(err, EngineError::Sort { .. }));
    }

    #[test]
    fn parses_set_operations_with_precedence() {
        let f = parse_formula("ES X. ES Y. ES Z. X + Y * Z sub X").unwrap();
        let expected_term = SetTerm::Union(
            Box::new(SetTerm::var("X")),
            Box::new(SetTerm::Inter(Box::new(SetTerm::var("Y")), Box::new(SetTerm::var("Z")))),
        );
        match f {
            Formula::ExistsSet(_, b1) => match *b1 {
                Formula::ExistsSet(_, b2) => match *b2 {
                    Formula::ExistsSet(_, b3) => {
                        assert_eq!(*b3, Formula::Sub(expected_term, SetTerm::var("X")));
                    }
                    other => panic!("{other:?}"),
                },
                other => panic!("{other:?}"),
            },
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn print_parse_round_trip() {
        let texts = [
            "EX x. AX y. x <= y",
            "AS X. (meager(X) | !meager(X))",
            "ES X. dense(X) & ES Y. dense(Y)",
            "AS X. AS Y. ((meager(X) & meager(Y)) -> meager(X + Y))",
            "ES X. atom(X - X) | Top sub X",
        ];
        for t in texts {
            let f = parse_formula(t).unwrap();
            let printed = f.to_string();
            let g = parse_formula(&printed).unwrap();
            assert_eq!(f, g, "round trip failed for {t}: printed as {printed}");
        }
    }

    #[test]
    fn reports_error_positions() {
        let err = parse_formula("EX x.\n x <= ?").unwrap_err();
        match err {
            EngineError::Syntax { line, .. } => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }
}
