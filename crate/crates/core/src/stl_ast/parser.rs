//! Recursive-descent parser for the formula grammar:
//!
//! ```text
//! formula := or
//! or      := and ("|" and)*
//! and     := unary ("&" unary)*
//! unary   := "!" unary | "F[" int "," int "]" unary | "G[" int "," int "]" unary | atom
//! atom    := ident | "(" formula ")" | atom "U[" int "," int "]" atom
//! ```
//!
//! Whitespace is insignificant. Precedence: `!` > `U` > `&` > `|`.

use super::{Formula, PredicateTable};
use crate::error::ParseError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Bang,
    Amp,
    Pipe,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Eof,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut toks = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        let (l, co) = (line, col);
        let mut push = |tok| toks.push(Spanned { tok, line: l, col: co });
        match c {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                chars.next();
                col += 1;
            }
            '!' => {
                chars.next();
                col += 1;
                push(Tok::Bang);
            }
            '&' => {
                chars.next();
                col += 1;
                push(Tok::Amp);
            }
            '|' => {
                chars.next();
                col += 1;
                push(Tok::Pipe);
            }
            '(' => {
                chars.next();
                col += 1;
                push(Tok::LParen);
            }
            ')' => {
                chars.next();
                col += 1;
                push(Tok::RParen);
            }
            '[' => {
                chars.next();
                col += 1;
                push(Tok::LBracket);
            }
            ']' => {
                chars.next();
                col += 1;
                push(Tok::RBracket);
            }
            ',' => {
                chars.next();
                col += 1;
                push(Tok::Comma);
            }
            c if c.is_ascii_digit() || c == '-' => {
                let mut s = String::new();
                if c == '-' {
                    s.push(c);
                    chars.next();
                    col += 1;
                }
                while let Some(&d) = chars.peek() {
                    if d.is_ascii_digit() {
                        s.push(d);
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                let v = s.parse::<i64>().map_err(|_| ParseError::Syntax {
                    line: l,
                    col: co,
                    msg: format!("bad integer literal `{s}`"),
                })?;
                push(Tok::Int(v));
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut s = String::new();
                while let Some(&d) = chars.peek() {
                    if d.is_alphanumeric() || d == '_' {
                        s.push(d);
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                push(Tok::Ident(s));
            }
            other => {
                return Err(ParseError::Syntax {
                    line,
                    col,
                    msg: format!("unexpected character `{other}`"),
                })
            }
        }
    }
    toks.push(Spanned { tok: Tok::Eof, line, col });
    Ok(toks)
}

struct Parser<'a> {
    toks: Vec<Spanned>,
    pos: usize,
    table: &'a PredicateTable,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        let t = self.next();
        if t.tok == tok {
            Ok(())
        } else {
            Err(ParseError::Syntax {
                line: t.line,
                col: t.col,
                msg: format!("expected {what}, found {:?}", t.tok),
            })
        }
    }

    fn interval(&mut self) -> Result<(u32, u32), ParseError> {
        self.expect(Tok::LBracket, "`[`")?;
        let t1_tok = self.next();
        let t1 = match t1_tok.tok {
            Tok::Int(v) => v,
            other => {
                return Err(ParseError::Syntax {
                    line: t1_tok.line,
                    col: t1_tok.col,
                    msg: format!("expected integer, found {other:?}"),
                })
            }
        };
        self.expect(Tok::Comma, "`,`")?;
        let t2_tok = self.next();
        let t2 = match t2_tok.tok {
            Tok::Int(v) => v,
            other => {
                return Err(ParseError::Syntax {
                    line: t2_tok.line,
                    col: t2_tok.col,
                    msg: format!("expected integer, found {other:?}"),
                })
            }
        };
        self.expect(Tok::RBracket, "`]`")?;
        if t1 < 0 || t2 < t1 {
            return Err(ParseError::MalformedInterval {
                t1,
                t2,
                line: t1_tok.line,
                col: t1_tok.col,
            });
        }
        Ok((t1 as u32, t2 as u32))
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        let first = self.and()?;
        let mut children = vec![first];
        while self.peek().tok == Tok::Pipe {
            self.next();
            children.push(self.and()?);
        }
        Ok(if children.len() == 1 {
            children.pop().unwrap()
        } else {
            Formula::Or(children)
        })
    }

    fn and(&mut self) -> Result<Formula, ParseError> {
        let first = self.unary()?;
        let mut children = vec![first];
        while self.peek().tok == Tok::Amp {
            self.next();
            children.push(self.unary()?);
        }
        Ok(if children.len() == 1 {
            children.pop().unwrap()
        } else {
            Formula::And(children)
        })
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match &self.peek().tok {
            Tok::Bang => {
                self.next();
                Ok(Formula::not(self.unary()?))
            }
            Tok::Ident(name) if (name == "F" || name == "G") && self.peek_bracket() => {
                let is_f = name == "F";
                self.next();
                let (t1, t2) = self.interval()?;
                let child = self.unary()?;
                Ok(if is_f {
                    Formula::Eventually(t1, t2, Box::new(child))
                } else {
                    Formula::Always(t1, t2, Box::new(child))
                })
            }
            _ => self.atom_chain(),
        }
    }

    fn peek_bracket(&self) -> bool {
        self.toks
            .get(self.pos + 1)
            .map_or(false, |t| t.tok == Tok::LBracket)
    }

    fn atom_chain(&mut self) -> Result<Formula, ParseError> {
        let mut left = self.primary()?;
        loop {
            match &self.peek().tok {
                Tok::Ident(name) if name == "U" && self.peek_bracket() => {
                    self.next();
                    let (t1, t2) = self.interval()?;
                    let right = self.primary()?;
                    left = Formula::Until(t1, t2, Box::new(left), Box::new(right));
                }
                _ => return Ok(left),
            }
        }
    }

    fn primary(&mut self) -> Result<Formula, ParseError> {
        let t = self.next();
        match t.tok {
            Tok::Ident(name) => match self.table.get(&name) {
                Some(pred) => Ok(Formula::Pred(pred.clone())),
                None => Err(ParseError::UnknownPredicate {
                    name,
                    line: t.line,
                    col: t.col,
                }),
            },
            Tok::LParen => {
                let f = self.formula()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            other => Err(ParseError::Syntax {
                line: t.line,
                col: t.col,
                msg: format!("expected predicate or `(`, found {other:?}"),
            }),
        }
    }
}

/// Parses a formula from text; identifiers resolve against `table`.
pub fn parse(text: &str, table: &PredicateTable) -> Result<Formula, ParseError> {
    let toks = lex(text)?;
    let mut parser = Parser { toks, pos: 0, table };
    let f = parser.formula()?;
    let t = parser.peek();
    if t.tok != Tok::Eof {
        return Err(ParseError::Syntax {
            line: t.line,
            col: t.col,
            msg: format!("trailing input, found {:?}", t.tok),
        });
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stl_ast::Predicate;

    fn table() -> PredicateTable {
        let mut t = PredicateTable::new();
        for name in ["obs1", "tar1", "tar2", "a", "b"] {
            t.insert(Predicate::affine(name, vec![1.0], 0.0));
        }
        t
    }

    #[test]
    fn parses_always_not() {
        let t = table();
        let f = parse("G[0,20](!obs1)", &t).unwrap();
        let expected = Formula::always(
            0,
            20,
            Formula::not(Formula::Pred(t.get("obs1").unwrap().clone())),
        );
        assert_eq!(f, expected);
    }

    #[test]
    fn eventually_binds_tighter_than_and() {
        let t = table();
        let f = parse("F[0,6] tar1 & F[6,12] tar2", &t).unwrap();
        let expected = Formula::and(vec![
            Formula::eventually(0, 6, Formula::Pred(t.get("tar1").unwrap().clone())),
            Formula::eventually(6, 12, Formula::Pred(t.get("tar2").unwrap().clone())),
        ]);
        assert_eq!(f, expected);
    }

    #[test]
    fn rejects_reversed_interval() {
        let t = table();
        assert!(matches!(
            parse("a U[3,2] b", &t),
            Err(ParseError::MalformedInterval { t1: 3, t2: 2, .. })
        ));
    }

    #[test]
    fn rejects_negative_interval() {
        let t = table();
        assert!(matches!(
            parse("F[-1,2] a", &t),
            Err(ParseError::MalformedInterval { .. })
        ));
    }

    #[test]
    fn unknown_identifier_reports_position() {
        let t = table();
        match parse("a & nope", &t) {
            Err(ParseError::UnknownPredicate { name, col, .. }) => {
                assert_eq!(name, "nope");
                assert_eq!(col, 5);
            }
            other => panic!("expected unknown predicate, got {other:?}"),
        }
    }

    #[test]
    fn chained_and_is_nary() {
        let t = table();
        let f = parse("a & b & tar1", &t).unwrap();
        match f {
            Formula::And(cs) => assert_eq!(cs.len(), 3),
            other => panic!("expected And, got {other:?}"),
        }
    }

    #[test]
    fn until_between_atoms() {
        let t = table();
        let f = parse("a U[0,5] (b | tar1)", &t).unwrap();
        assert!(matches!(f, Formula::Until(0, 5, _, _)));
    }

    #[test]
    fn print_parse_round_trip() {
        let t = table();
        for text in [
            "G[0,20](!obs1) & (F[0,6] tar1 | a U[1,4] b)",
            "a | b & tar1",
            "!(a & b)",
            "(a U[0,2] b) U[1,3] tar1",
        ] {
            let f = parse(text, &t).unwrap();
            let reparsed = parse(&f.to_text(), &t).unwrap();
            assert_eq!(f, reparsed, "round trip failed for `{text}`");
        }
    }
}
