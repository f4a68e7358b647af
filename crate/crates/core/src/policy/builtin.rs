//! The three closed-form policies distilled from an RL expert, written in the
//! nine-token language (no constants: `2·x` is `x + x`, `x³` is `x·x·x`).

use crate::expr::{ExprTree, Token, Token::*};

/// `cos(x2 + 2·x2 / (x1 / (x3³ + (x2 − x1)/x1) + x2))`, distilled from the
/// union of the single- and two-pair datasets.
pub const SP1: &[Token] = &[
    Cos, Add, X2, Div, Add, X2, X2, Add, Div, X1, Add, Mul, Mul, X3, X3, X3, Div, Sub, X2, X1, X1,
    X2,
];

/// `cos(x2/x1)/x3² − x3 / (x3 + (x1·x3/x2² + x3)/(x2·x3))`, distilled from the
/// single-pair dataset.
pub const SP2: &[Token] = &[
    Sub, Div, Cos, Div, X2, X1, Mul, X3, X3, Div, X3, Add, X3, Div, Add, Div, Mul, X1, X3, Mul, X2,
    X2, X3, Mul, X2, X3,
];

/// `cos(x2·x3·(x2·x3 + x2 + 2·x3 + x4) / (x1 + x2²·x3·x4 + x2·x3²))`,
/// distilled from the two-pair dataset. The only one of the three that reads
/// the loss ratio.
pub const SP3: &[Token] = &[
    Cos, Div, Mul, Mul, X2, X3, Add, Add, Add, Mul, X2, X3, X2, Add, X3, X3, X4, Add, Add, X1, Mul,
    Mul, Mul, X2, X2, X3, X4, Mul, Mul, X2, X3, X3,
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BuiltinExpr {
    Sp1,
    Sp2,
    Sp3,
}

impl BuiltinExpr {
    pub fn tokens(self) -> &'static [Token] {
        match self {
            BuiltinExpr::Sp1 => SP1,
            BuiltinExpr::Sp2 => SP2,
            BuiltinExpr::Sp3 => SP3,
        }
    }

    pub fn tree(self) -> ExprTree {
        ExprTree::parse_preorder(self.tokens()).expect("builtin expressions are well formed")
    }

    pub fn name(self) -> &'static str {
        match self {
            BuiltinExpr::Sp1 => "sp1",
            BuiltinExpr::Sp2 => "sp2",
            BuiltinExpr::Sp3 => "sp3",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sp1" => Some(BuiltinExpr::Sp1),
            "sp2" => Some(BuiltinExpr::Sp2),
            "sp3" => Some(BuiltinExpr::Sp3),
            _ => None,
        }
    }
}
