use super::ast::{ChainAst, Module, ModuleSeq, Term};
use super::lexer::{tokenize, LexError, Position, Token, TokenKind};
use crate::net_model::DeploymentRequest;

/// Upper bound on the replication count of a parallel module.
pub const MAX_PARALLEL_COUNT: u32 = 64;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error("syntax error at {position}: expected {expected}, found {found}")]
    Syntax { expected: &'static str, found: String, position: Position },
    #[error("syntax error at {position}: count {value} outside 1..={max}", max = MAX_PARALLEL_COUNT)]
    CountOutOfRange { value: String, position: Position },
    #[error("unknown symbol `{symbol}` at {position}")]
    UnknownSymbol { symbol: String, position: Position },
    #[error("splitter `{splitter}` at {position} is missing from its preamble")]
    SplitterNotInPreamble { splitter: String, position: Position },
}

impl ParseError {
    /// Syntax-level failures (as opposed to name resolution failures).
    pub fn is_syntax(&self) -> bool {
        matches!(self, ParseError::Lex(_) | ParseError::Syntax { .. } | ParseError::CountOutOfRange { .. })
    }

    pub fn position(&self) -> Position {
        match self {
            ParseError::Lex(e) => e.position,
            ParseError::Syntax { position, .. }
            | ParseError::CountOutOfRange { position, .. }
            | ParseError::UnknownSymbol { position, .. }
            | ParseError::SplitterNotInPreamble { position, .. } => *position,
        }
    }
}

struct Parser<'t, F> {
    tokens: &'t [Token],
    pos: usize,
    known: F,
}

impl<'t, F: Fn(&str) -> bool> Parser<'t, F> {
    fn peek(&self) -> Option<&'t Token> {
        self.tokens.get(self.pos)
    }

    fn peek_kind(&self) -> Option<TokenKind> {
        self.peek().map(|t| t.kind)
    }

    fn here(&self) -> Position {
        match (self.peek(), self.tokens.last()) {
            (Some(t), _) => t.position,
            (None, Some(last)) => Position { line: last.position.line, column: last.position.column + last.text.len() },
            (None, None) => Position { line: 1, column: 1 },
        }
    }

    fn error(&self, expected: &'static str) -> ParseError {
        let found = match self.peek() {
            Some(t) => format!("`{}`", t.text),
            None => "end of input".to_string(),
        };
        ParseError::Syntax { expected, found, position: self.here() }
    }

    fn expect(&mut self, kind: TokenKind, expected: &'static str) -> Result<&'t Token, ParseError> {
        match self.peek() {
            Some(t) if t.kind == kind => {
                self.pos += 1;
                Ok(t)
            }
            _ => Err(self.error(expected)),
        }
    }

    fn term(&mut self) -> Result<(Term, Position), ParseError> {
        let tok = self.expect(TokenKind::Symbol, "<term>")?;
        if !(self.known)(&tok.text) {
            return Err(ParseError::UnknownSymbol { symbol: tok.text.clone(), position: tok.position });
        }
        Ok((Term::new(tok.text.clone()), tok.position))
    }

    fn term_list(&mut self, close: TokenKind, close_name: &'static str) -> Result<Vec<Term>, ParseError> {
        let mut terms = vec![self.term()?.0];
        loop {
            match self.peek_kind() {
                Some(TokenKind::Comma) => {
                    self.pos += 1;
                    terms.push(self.term()?.0);
                }
                Some(k) if k == close => return Ok(terms),
                _ => return Err(self.error(close_name)),
            }
        }
    }

    fn modules(&mut self) -> Result<ModuleSeq, ParseError> {
        let mut seq = vec![self.module()?];
        while self.peek_kind() == Some(TokenKind::Dot) {
            self.pos += 1;
            seq.push(self.module()?);
        }
        Ok(ModuleSeq(seq))
    }

    fn module(&mut self) -> Result<Module, ParseError> {
        match self.peek_kind() {
            Some(TokenKind::LParen) => {
                self.pos += 1;
                let terms = self.term_list(TokenKind::RParen, "`,` or `)` in <optorder>")?;
                self.pos += 1;
                Ok(Module::OptOrder(terms))
            }
            Some(TokenKind::Symbol) => {
                let (splitter, at) = self.term()?;
                match self.peek_kind() {
                    Some(TokenKind::LBracket) => {
                        self.pos += 1;
                        let mut branches = vec![self.modules()?];
                        loop {
                            match self.peek_kind() {
                                Some(TokenKind::Comma) => {
                                    self.pos += 1;
                                    branches.push(self.modules()?);
                                }
                                Some(TokenKind::RBracket) => {
                                    self.pos += 1;
                                    break;
                                }
                                _ => return Err(self.error("`.`, `,` or `]` in <split>")),
                            }
                        }
                        Ok(Module::Split { splitter, branches })
                    }
                    Some(TokenKind::LBrace) => {
                        self.pos += 1;
                        let preamble = self.term_list(TokenKind::Semicolon, "`,` or `;` in <parallel>")?;
                        self.pos += 1;
                        let body = self.modules()?;
                        self.expect(TokenKind::Semicolon, "`.` or `;` in <parallel>")?;
                        let num = self.expect(TokenKind::Number, "<num>")?;
                        let count = match num.text.parse::<u32>() {
                            Ok(n) if (1..=MAX_PARALLEL_COUNT).contains(&n) => n,
                            _ => {
                                return Err(ParseError::CountOutOfRange {
                                    value: num.text.clone(),
                                    position: num.position,
                                })
                            }
                        };
                        self.expect(TokenKind::RBrace, "`}` closing <parallel>")?;
                        if !preamble.contains(&splitter) {
                            return Err(ParseError::SplitterNotInPreamble { splitter: splitter.0, position: at });
                        }
                        Ok(Module::Parallel { splitter, preamble, body, count })
                    }
                    _ => Ok(Module::Term(splitter)),
                }
            }
            _ => Err(self.error("<mod>")),
        }
    }
}

/// Parses a token stream, resolving every symbol with `known`.
pub fn parse_with(tokens: &[Token], known: impl Fn(&str) -> bool) -> Result<ChainAst, ParseError> {
    let mut p = Parser { tokens, pos: 0, known };
    let root = p.modules()?;
    if p.peek().is_some() {
        return Err(p.error("`.` or end of input"));
    }
    Ok(ChainAst { root })
}

/// Parses a token stream against the uses and endpoints declared by `request`.
pub fn parse(tokens: &[Token], request: &DeploymentRequest) -> Result<ChainAst, ParseError> {
    parse_with(tokens, |s| request.use_by_id(s).is_some() || request.endpoint_by_id(s).is_some())
}

/// Tokenizes and parses `request.chain`.
pub fn parse_request(request: &DeploymentRequest) -> Result<ChainAst, ParseError> {
    parse(&tokenize(&request.chain)?, request)
}

/// Tokenizes and parses text, accepting any symbol.
pub fn parse_text(text: &str) -> Result<ChainAst, ParseError> {
    parse_with(&tokenize(text)?, |_| true)
}
