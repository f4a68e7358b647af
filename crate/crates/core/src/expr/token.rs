use std::fmt;

use serde::{Deserialize, Serialize};

use super::ExprError;

/// Number of observation variables an expression can reference.
pub const VAR_COUNT: usize = 4;

/// One symbol of the expression language.
///
/// `Sin` and `Exp` exist only so the extended registry can parse textbook
/// examples; the regression token set never contains them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Token {
    Add,
    Sub,
    Mul,
    Div,
    Cos,
    Sin,
    Exp,
    X1,
    X2,
    X3,
    X4,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TokenKind {
    Binary,
    Unary,
    Variable,
}

impl Token {
    pub const ALL: [Token; 11] = [
        Token::Add,
        Token::Sub,
        Token::Mul,
        Token::Div,
        Token::Cos,
        Token::Sin,
        Token::Exp,
        Token::X1,
        Token::X2,
        Token::X3,
        Token::X4,
    ];

    pub const fn kind(self) -> TokenKind {
        match self {
            Token::Add | Token::Sub | Token::Mul | Token::Div => TokenKind::Binary,
            Token::Cos | Token::Sin | Token::Exp => TokenKind::Unary,
            Token::X1 | Token::X2 | Token::X3 | Token::X4 => TokenKind::Variable,
        }
    }

    pub const fn arity(self) -> usize {
        match self.kind() {
            TokenKind::Binary => 2,
            TokenKind::Unary => 1,
            TokenKind::Variable => 0,
        }
    }

    /// Zero-based observation index for variable tokens.
    pub const fn variable_index(self) -> Option<usize> {
        match self {
            Token::X1 => Some(0),
            Token::X2 => Some(1),
            Token::X3 => Some(2),
            Token::X4 => Some(3),
            _ => None,
        }
    }

    pub fn variable(index: usize) -> Option<Token> {
        [Token::X1, Token::X2, Token::X3, Token::X4]
            .get(index)
            .copied()
    }

    /// ASCII symbol used by the comma-separated pre-order format.
    pub const fn symbol(self) -> &'static str {
        match self {
            Token::Add => "+",
            Token::Sub => "-",
            Token::Mul => "*",
            Token::Div => "/",
            Token::Cos => "cos",
            Token::Sin => "sin",
            Token::Exp => "exp",
            Token::X1 => "x1",
            Token::X2 => "x2",
            Token::X3 => "x3",
            Token::X4 => "x4",
        }
    }

    /// Accepts the ASCII symbols plus the typographic `−`, `×`, `÷`.
    pub fn from_symbol(s: &str) -> Option<Token> {
        let t = match s.trim() {
            "+" => Token::Add,
            "-" | "−" => Token::Sub,
            "*" | "×" => Token::Mul,
            "/" | "÷" => Token::Div,
            "cos" => Token::Cos,
            "sin" => Token::Sin,
            "exp" => Token::Exp,
            "x1" => Token::X1,
            "x2" => Token::X2,
            "x3" => Token::X3,
            "x4" => Token::X4,
            _ => return None,
        };
        Some(t)
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// The registry of tokens an expression may be built from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSet {
    tokens: Vec<Token>,
}

impl TokenSet {
    /// `{+, -, *, /, cos}` plus `x1..x4`.
    pub fn regression() -> Self {
        Self {
            tokens: vec![
                Token::Add,
                Token::Sub,
                Token::Mul,
                Token::Div,
                Token::Cos,
                Token::X1,
                Token::X2,
                Token::X3,
                Token::X4,
            ],
        }
    }

    /// Regression set plus `sin` and `exp`.
    pub fn extended() -> Self {
        let mut set = Self::regression();
        set.tokens.insert(5, Token::Sin);
        set.tokens.insert(6, Token::Exp);
        set
    }

    /// Builds a custom registry. Must contain at least one variable, otherwise
    /// no expression can terminate.
    pub fn new(mut tokens: Vec<Token>) -> Result<Self, ExprError> {
        tokens.sort();
        tokens.dedup();
        if !tokens.iter().any(|t| t.kind() == TokenKind::Variable) {
            return Err(ExprError::NoVariables);
        }
        Ok(Self { tokens })
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn contains(&self, token: Token) -> bool {
        self.tokens.contains(&token)
    }

    pub fn index_of(&self, token: Token) -> Option<usize> {
        self.tokens.iter().position(|&t| t == token)
    }

    pub fn parse_symbol(&self, s: &str) -> Result<Token, ExprError> {
        match Token::from_symbol(s) {
            Some(t) if self.contains(t) => Ok(t),
            Some(t) => Err(ExprError::TokenNotInSet(t.symbol().to_string())),
            None => Err(ExprError::UnknownSymbol(s.trim().to_string())),
        }
    }
}

impl Default for TokenSet {
    fn default() -> Self {
        Self::regression()
    }
}
