//! Lexer and recursive-descent parser for the chaining-request language.
//!
//! ```text
//! modules  := mod ( '.' mod )*
//! mod      := '(' term ( ',' term )* ')'
//!           | term '[' modules ( ',' modules )* ']'
//!           | term '{' term ( ',' term )* ';' modules ';' num '}'
//!           | term
//! ```
//!
//! Whitespace between tokens is ignored.

mod ast;
mod lexer;
mod parser;

pub use ast::{pretty_tree, unparse, ChainAst, Module, ModuleSeq, Term};
pub use lexer::{tokenize, LexError, Position, Token, TokenKind};
pub use parser::{parse, parse_request, parse_text, parse_with, ParseError, MAX_PARALLEL_COUNT};

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(ms: Vec<Module>) -> ModuleSeq {
        ModuleSeq(ms)
    }

    fn t(s: &str) -> Module {
        Module::Term(Term::new(s))
    }

    fn tm(s: &str) -> Term {
        Term::new(s)
    }

    #[test]
    fn optional_order_in_sequence() {
        let ast = parse_text("a1 . u1 . (u2, u3) . a2").unwrap();
        assert_eq!(ast.root, seq(vec![t("a1"), t("u1"), Module::OptOrder(vec![tm("u2"), tm("u3")]), t("a2")]));
    }

    #[test]
    fn split_module() {
        let ast = parse_text("a1 . u1 [ u2 . a2 , u3 . a3 ]").unwrap();
        assert_eq!(
            ast.root.0[1],
            Module::Split {
                splitter: tm("u1"),
                branches: vec![seq(vec![t("u2"), t("a2")]), seq(vec![t("u3"), t("a3")])],
            }
        );
    }

    #[test]
    fn parallel_module() {
        let ast = parse_text("a1 . u1 { u1 , u2 ; u3 . u4 ; 2 } ").unwrap();
        assert_eq!(
            ast.root.0[1],
            Module::Parallel {
                splitter: tm("u1"),
                preamble: vec![tm("u1"), tm("u2")],
                body: seq(vec![t("u3"), t("u4")]),
                count: 2,
            }
        );
    }

    #[test]
    fn double_dot_names_the_module_rule() {
        match parse_text("a1 . . u1").unwrap_err() {
            ParseError::Syntax { expected, position, .. } => {
                assert_eq!(expected, "<mod>");
                assert_eq!(position, Position { line: 1, column: 6 });
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn dangling_dot_is_rejected() {
        let err = parse_text("a1 . u1 .").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { expected: "<mod>", .. }), "{err}");
    }

    #[test]
    fn unparse_forms() {
        assert_eq!(unparse(&parse_text("a1").unwrap()), "a1");
        assert_eq!(unparse(&parse_text("(u2,u3)").unwrap()), "(u2, u3)");
        assert_eq!(unparse(&parse_text("u1[u2.a2,u3.a3]").unwrap()), "u1 [u2 . a2, u3 . a3]");
        assert_eq!(unparse(&parse_text("u1{u1,u2;u3.u4;2}").unwrap()), "u1 { u1, u2 ; u3 . u4 ; 2 }");
    }

    #[test]
    fn count_bounds() {
        assert!(matches!(parse_text("u1 { u1 ; u2 ; 0 }"), Err(ParseError::CountOutOfRange { .. })));
        assert!(matches!(parse_text("u1 { u1 ; u2 ; 65 }"), Err(ParseError::CountOutOfRange { .. })));
        assert!(parse_text("u1 { u1 ; u2 ; 64 }").is_ok());
    }

    #[test]
    fn splitter_must_be_in_preamble() {
        let err = parse_text("a1 . u1 { u2 ; u3 ; 2 }").unwrap_err();
        assert!(matches!(err, ParseError::SplitterNotInPreamble { .. }));
        assert!(!err.is_syntax());
    }

    #[test]
    fn unknown_symbol_points_at_token() {
        let toks = tokenize("a1 .\n u9").unwrap();
        let err = parse_with(&toks, |s| s != "u9").unwrap_err();
        assert_eq!(err, ParseError::UnknownSymbol { symbol: "u9".into(), position: Position { line: 2, column: 2 } });
    }

    #[test]
    fn error_at_first_offending_token() {
        for (text, col) in [("(u1 u2)", 5), ("u1 [ a1 ; a2 ]", 9), ("u1 { u1 ; u2 ; x }", 16), ("u1 )", 4), ("[", 1)] {
            let err = parse_text(text).unwrap_err();
            assert_eq!(err.position().column, col, "{text}: {err}");
        }
    }
}
