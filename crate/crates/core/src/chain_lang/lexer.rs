use std::fmt;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum TokenKind {
    Symbol,
    Number,
    Dot,
    Comma,
    Semicolon,
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
}

impl TokenKind {
    fn delimiter(c: char) -> Option<TokenKind> {
        Some(match c {
            '.' => TokenKind::Dot,
            ',' => TokenKind::Comma,
            ';' => TokenKind::Semicolon,
            '(' => TokenKind::LParen,
            ')' => TokenKind::RParen,
            '[' => TokenKind::LBracket,
            ']' => TokenKind::RBracket,
            '{' => TokenKind::LBrace,
            '}' => TokenKind::RBrace,
            _ => return None,
        })
    }

    pub fn is_delimiter(self) -> bool {
        !matches!(self, TokenKind::Symbol | TokenKind::Number)
    }
}

/// 1-based line and column of a token's first character.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Position {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub position: Position,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("lexical error at {position}: {message}")]
pub struct LexError {
    pub position: Position,
    pub message: String,
}

pub fn tokenize(input: &str) -> Result<Vec<Token>, LexError> {
    let mut tokens = Vec::new();
    let mut chars = input.char_indices().peekable();
    let (mut line, mut column) = (1usize, 1usize);

    while let Some(&(start, c)) = chars.peek() {
        let position = Position { line, column };
        if c == '\n' {
            chars.next();
            line += 1;
            column = 1;
            continue;
        }
        if c.is_whitespace() {
            chars.next();
            column += 1;
            continue;
        }
        if let Some(kind) = TokenKind::delimiter(c) {
            chars.next();
            column += 1;
            tokens.push(Token { kind, text: c.to_string(), position });
            continue;
        }
        if c.is_ascii_alphanumeric() || c == '_' {
            let mut end = start;
            while let Some(&(i, d)) = chars.peek() {
                if d.is_ascii_alphanumeric() || d == '_' {
                    end = i + d.len_utf8();
                    column += 1;
                    chars.next();
                } else {
                    break;
                }
            }
            let text = &input[start..end];
            let kind = if text.bytes().all(|b| b.is_ascii_digit()) {
                TokenKind::Number
            } else if c.is_ascii_digit() {
                return Err(LexError { position, message: format!("`{text}` is neither a number nor a symbol") });
            } else {
                TokenKind::Symbol
            };
            tokens.push(Token { kind, text: text.to_string(), position });
            continue;
        }
        return Err(LexError { position, message: format!("unexpected character `{c}`") });
    }
    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;
    use TokenKind::*;

    fn kinds(s: &str) -> Vec<TokenKind> {
        tokenize(s).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn linear_chain() {
        assert_eq!(kinds("a1 . u1 . a2"), vec![Symbol, Dot, Symbol, Dot, Symbol]);
    }

    #[test]
    fn parallel_module_tokens() {
        let toks = tokenize("u1 { u1 , u2 ; u3 ; 3 }").unwrap();
        assert_eq!(
            toks.iter().map(|t| t.kind).collect::<Vec<_>>(),
            vec![Symbol, LBrace, Symbol, Comma, Symbol, Semicolon, Symbol, Semicolon, Number, RBrace]
        );
        assert_eq!(toks[8].text, "3");
    }

    #[test]
    fn rejects_foreign_character() {
        let err = tokenize("u1 @ u2").unwrap_err();
        assert_eq!(err.position, Position { line: 1, column: 4 });
    }

    #[test]
    fn positions_track_lines() {
        let toks = tokenize("a1 .\n  u1").unwrap();
        assert_eq!(toks[2].position, Position { line: 2, column: 3 });
    }

    #[test]
    fn digit_led_identifier_is_lexical_error() {
        assert!(tokenize("a1 . 2u").is_err());
    }

    proptest::proptest! {
        #[test]
        fn token_texts_concatenate_to_input(parts in proptest::collection::vec(
            proptest::prop_oneof![
                proptest::string::string_regex("[a-z_][a-z0-9_]{0,3}").unwrap(),
                proptest::string::string_regex("[0-9]{1,2}").unwrap(),
                proptest::string::string_regex("[.,;()\\[\\]{}]").unwrap(),
            ],
            0..20,
        ), spaces in proptest::collection::vec(0usize..3, 20)) {
            let mut input = String::new();
            for (i, p) in parts.iter().enumerate() {
                input.push_str(p);
                input.push_str(&" ".repeat(spaces[i].max(1)));
            }
            let toks = tokenize(&input).unwrap();
            let joined: String = toks.iter().map(|t| t.text.as_str()).collect();
            let stripped: String = input.chars().filter(|c| !c.is_whitespace()).collect();
            proptest::prop_assert_eq!(joined, stripped);
            for t in &toks {
                let line = input.lines().nth(t.position.line - 1).unwrap();
                let at: String = line.chars().skip(t.position.column - 1).take(t.text.len()).collect();
                proptest::prop_assert_eq!(&at, &t.text);
            }
        }
    }
}
