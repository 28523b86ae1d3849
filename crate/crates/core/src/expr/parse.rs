use thiserror::Error;

use super::{Expr, Func, Variable};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. } | ParseError::UnknownIdentifier { offset, .. } => *offset,
        }
    }
}

/// Parses `text`, accepting either `x` or `y` (but not both) as the variable.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    Parser::new(text, None)?.run()
}

/// Parses `text` where only `var` is a valid variable name.
pub fn parse_in(text: &str, var: Variable) -> Result<Expr, ParseError> {
    Parser::new(text, Some(var))?.run()
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

impl Token {
    fn describe(&self) -> String {
        match self {
            Token::Number(v) => format!("number {v}"),
            Token::Ident(name) => format!("identifier `{name}`"),
            Token::Plus => "`+`".into(),
            Token::Minus => "`-`".into(),
            Token::Star => "`*`".into(),
            Token::Slash => "`/`".into(),
            Token::Caret => "`^`".into(),
            Token::LParen => "`(`".into(),
            Token::RParen => "`)`".into(),
            Token::End => "end of input".into(),
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<(Token, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let token = match c {
            b'+' => Token::Plus,
            b'-' => Token::Minus,
            b'*' => Token::Star,
            b'/' => Token::Slash,
            b'^' => Token::Caret,
            b'(' => Token::LParen,
            b')' => Token::RParen,
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                // Exponent only when followed by a digit (optionally signed),
                // so `2e` stays a syntax error rather than swallowing `e`.
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let literal = &text[start..i];
                let value: f64 = literal.parse().map_err(|_| ParseError::Syntax {
                    offset: start,
                    message: format!("malformed number `{literal}`"),
                })?;
                tokens.push((Token::Number(value), start));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                tokens.push((Token::Ident(text[start..i].to_string()), start));
                continue;
            }
            _ => {
                let ch = text[start..].chars().next().unwrap_or('?');
                return Err(ParseError::Syntax {
                    offset: start,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        };
        tokens.push((token, start));
        i += 1;
    }
    tokens.push((Token::End, text.len()));
    Ok(tokens)
}

struct Parser {
    tokens: Vec<(Token, usize)>,
    pos: usize,
    expected: Option<Variable>,
    seen: Option<Variable>,
}

impl Parser {
    fn new(text: &str, expected: Option<Variable>) -> Result<Self, ParseError> {
        if text.trim().is_empty() {
            return Err(ParseError::Syntax {
                offset: 0,
                message: "empty expression".into(),
            });
        }
        Ok(Parser {
            tokens: tokenize(text)?,
            pos: 0,
            expected,
            seen: None,
        })
    }

    fn run(mut self) -> Result<Expr, ParseError> {
        let e = self.expr()?;
        match self.peek() {
            Token::End => Ok(e),
            other => Err(self.unexpected(other.clone())),
        }
    }

    fn peek(&self) -> &Token {
        &self.tokens[self.pos].0
    }

    fn offset(&self) -> usize {
        self.tokens[self.pos].1
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].0.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, token: Token) -> ParseError {
        ParseError::Syntax {
            offset: self.offset(),
            message: format!("unexpected {}", token.describe()),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Token::Plus => {
                    self.bump();
                    lhs = lhs + self.term()?;
                }
                Token::Minus => {
                    self.bump();
                    lhs = lhs - self.term()?;
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Token::Star => {
                    self.bump();
                    lhs = lhs * self.unary()?;
                }
                Token::Slash => {
                    self.bump();
                    lhs = lhs / self.unary()?;
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Token::Minus => {
                self.bump();
                Ok(-self.unary()?)
            }
            Token::Plus => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if matches!(self.peek(), Token::Caret) {
            self.bump();
            let exponent = self.unary()?;
            return Ok(base.pow(exponent));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let offset = self.offset();
        match self.peek().clone() {
            Token::Number(v) => {
                self.bump();
                Ok(Expr::Const(v))
            }
            Token::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect_rparen()?;
                Ok(e)
            }
            Token::Ident(name) => {
                self.bump();
                self.identifier(name, offset)
            }
            other => Err(ParseError::Syntax {
                offset,
                message: format!("expected an operand, found {}", other.describe()),
            }),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            Token::RParen => {
                self.bump();
                Ok(())
            }
            other => Err(ParseError::Syntax {
                offset: self.offset(),
                message: format!("expected `)`, found {}", other.describe()),
            }),
        }
    }

    fn identifier(&mut self, name: String, offset: usize) -> Result<Expr, ParseError> {
        if let Some(func) = Func::from_name(&name) {
            match self.peek() {
                Token::LParen => {
                    self.bump();
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    return Ok(arg.call(func));
                }
                other => {
                    return Err(ParseError::Syntax {
                        offset: self.offset(),
                        message: format!("expected `(` after `{name}`, found {}", other.describe()),
                    })
                }
            }
        }
        match name.as_str() {
            "pi" => return Ok(Expr::Const(std::f64::consts::PI)),
            "e" => return Ok(Expr::Const(std::f64::consts::E)),
            _ => {}
        }
        let var = match name.as_str() {
            "x" => Variable::X,
            "y" => Variable::Y,
            _ => return Err(ParseError::UnknownIdentifier { name, offset }),
        };
        let allowed = match (self.expected, self.seen) {
            (Some(expected), _) => expected == var,
            (None, Some(seen)) => seen == var,
            (None, None) => true,
        };
        if !allowed {
            return Err(ParseError::UnknownIdentifier { name, offset });
        }
        self.seen = Some(var);
        Ok(Expr::Var)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reports_syntax_error_offset() {
        let err = parse("y+*2").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { offset: 2, .. }), "{err:?}");
    }

    #[test]
    fn reports_unknown_identifier() {
        let err = parse("2*z").unwrap_err();
        assert_eq!(
            err,
            ParseError::UnknownIdentifier {
                name: "z".into(),
                offset: 2
            }
        );
    }

    #[test]
    fn rejects_mixed_variables_and_wrong_variable() {
        assert!(matches!(parse("x+y"), Err(ParseError::UnknownIdentifier { offset: 2, .. })));
        assert!(matches!(parse_in("x^2", Variable::Y), Err(ParseError::UnknownIdentifier { offset: 0, .. })));
        assert!(parse_in("x^2", Variable::X).is_ok());
    }

    #[test]
    fn rejects_empty_and_unbalanced_input() {
        assert!(matches!(parse("   "), Err(ParseError::Syntax { offset: 0, .. })));
        assert!(matches!(parse("(y+1"), Err(ParseError::Syntax { offset: 4, .. })));
        assert!(matches!(parse("y+1)"), Err(ParseError::Syntax { offset: 3, .. })));
        assert!(matches!(parse("sin y"), Err(ParseError::Syntax { offset: 4, .. })));
        assert!(matches!(parse("y $ 2"), Err(ParseError::Syntax { offset: 2, .. })));
    }

    #[test]
    fn parses_scientific_notation_and_constants() {
        assert_eq!(parse("1.5e-3").unwrap(), Expr::Const(1.5e-3));
        assert_eq!(parse("2E2").unwrap(), Expr::Const(200.0));
        assert_eq!(parse("pi").unwrap(), Expr::Const(std::f64::consts::PI));
        // `2e` is the number 2 followed by the constant e: implicit
        // multiplication is not part of the grammar.
        assert!(parse("2e").is_err());
    }
}
