//! Minimal s-expression reader shared by the trace and PDDL parsers.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Sexpr {
    Symbol(String, Pos),
    List(Vec<Sexpr>, Pos),
}

impl Sexpr {
    pub fn pos(&self) -> Pos {
        match self {
            Sexpr::Symbol(_, p) | Sexpr::List(_, p) => *p,
        }
    }

    pub fn as_symbol(&self) -> Option<&str> {
        match self {
            Sexpr::Symbol(s, _) => Some(s),
            Sexpr::List(..) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexpr]> {
        match self {
            Sexpr::List(items, _) => Some(items),
            Sexpr::Symbol(..) => None,
        }
    }

    /// Head symbol of a list, lowercased.
    pub fn head(&self) -> Option<String> {
        self.as_list()
            .and_then(|items| items.first())
            .and_then(Sexpr::as_symbol)
            .map(str::to_ascii_lowercase)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntaxError {
    pub pos: Pos,
    pub message: String,
}

/// Reads every top-level expression in `text`. Positions are 1-based and
/// offset by `first_line`/`first_column` so callers can parse fragments.
/// Comments run from `;` to end of line.
pub fn read_all(
    text: &str,
    first_line: usize,
    first_column: usize,
) -> Result<Vec<Sexpr>, SyntaxError> {
    let mut reader = Reader {
        chars: text.chars().collect(),
        idx: 0,
        line: first_line,
        column: first_column,
    };
    let mut out = Vec::new();
    loop {
        reader.skip_ws();
        if reader.peek().is_none() {
            return Ok(out);
        }
        out.push(reader.read()?);
    }
}

struct Reader {
    chars: Vec<char>,
    idx: usize,
    line: usize,
    column: usize,
}

impl Reader {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.idx).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.idx += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            column: self.column,
        }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c == ';' {
                while let Some(c) = self.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
            } else if c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    fn read(&mut self) -> Result<Sexpr, SyntaxError> {
        self.skip_ws();
        let start = self.pos();
        match self.peek() {
            None => Err(SyntaxError {
                pos: start,
                message: "unexpected end of input".into(),
            }),
            Some(')') => Err(SyntaxError {
                pos: start,
                message: "unbalanced ')'".into(),
            }),
            Some('(') => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_ws();
                    match self.peek() {
                        None => {
                            return Err(SyntaxError {
                                pos: start,
                                message: "unclosed '('".into(),
                            })
                        }
                        Some(')') => {
                            self.bump();
                            return Ok(Sexpr::List(items, start));
                        }
                        Some(_) => items.push(self.read()?),
                    }
                }
            }
            Some(_) => {
                let mut sym = String::new();
                while let Some(c) = self.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    if !c.is_ascii() {
                        return Err(SyntaxError {
                            pos: self.pos(),
                            message: format!("non-ASCII character {c:?}"),
                        });
                    }
                    sym.push(c);
                    self.bump();
                }
                Ok(Sexpr::Symbol(sym, start))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_nested_lists_with_positions() {
        let exprs = read_all("(a (b c)) ; note\n d", 1, 1).unwrap();
        assert_eq!(exprs.len(), 2);
        assert_eq!(exprs[0].head().as_deref(), Some("a"));
        assert_eq!(exprs[1].pos(), Pos { line: 2, column: 2 });
    }

    #[test]
    fn reports_unclosed_list() {
        let err = read_all("(a (b", 3, 5).unwrap_err();
        assert_eq!(err.pos, Pos { line: 3, column: 8 });
        assert!(err.message.contains("unclosed"));
    }

    #[test]
    fn rejects_stray_close() {
        assert!(read_all("a)", 1, 1).is_err());
    }
}
