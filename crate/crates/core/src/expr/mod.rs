//! Expression language: tokens, pre-order trees, protected evaluation and
//! infix exchange format.

mod infix;
mod token;
mod tree;

pub use token::{Token, TokenKind, TokenSet, VAR_COUNT};
pub use tree::{
    remaining_arity, BatchEvaluation, Evaluation, ExprTree, DEFAULT_MAX_LENGTH, PROTECTED_DIV_EPS,
    PROTECTED_DIV_VALUE,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExprError {
    #[error("empty token sequence")]
    Empty,
    #[error("incomplete pre-order sequence: {missing} operand(s) missing")]
    IncompleteSequence { missing: i64 },
    #[error("dangling tokens: expression complete before position {position}")]
    DanglingTokens { position: usize },
    #[error("expression has {length} tokens, maximum is {max}")]
    TooLong { length: usize, max: usize },
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("token `{0}` is not in the active token set")]
    TokenNotInSet(String),
    #[error("token set has no variables")]
    NoVariables,
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("non-finite input value")]
    NonFiniteInput,
}
