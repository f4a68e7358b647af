use std::fmt;

use super::{ExprError, Token, TokenSet, VAR_COUNT};

/// Default maximum expression length in tokens.
pub const DEFAULT_MAX_LENGTH: usize = 32;

/// Denominators with magnitude below this make `/` return [`PROTECTED_DIV_VALUE`].
pub const PROTECTED_DIV_EPS: f64 = 1e-9;
pub const PROTECTED_DIV_VALUE: f64 = 1.0;

/// `1 + Σ(arity − 1)` over a token prefix: how many subtrees are still
/// missing. Zero means the prefix is a complete expression.
///
/// The value can go negative for sequences with dangling tokens.
pub fn remaining_arity(prefix: &[Token]) -> i64 {
    prefix
        .iter()
        .fold(1i64, |deficit, t| deficit + t.arity() as i64 - 1)
}

/// A closed-form expression stored as its pre-order token sequence.
///
/// `subtree_end[i]` is one past the last token of the subtree rooted at `i`,
/// which is enough to recover children: the first child of `i` starts at
/// `i + 1`, the second at `subtree_end[i + 1]`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ExprTree {
    tokens: Vec<Token>,
    subtree_end: Vec<usize>,
}

/// Result of a scalar evaluation with the degeneracy flag exposed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    /// Some intermediate value was non-finite; `value` has been forced to 0.
    pub degenerate: bool,
}

/// Column-wise evaluation over a dataset.
#[derive(Clone, Debug)]
pub struct BatchEvaluation {
    pub values: Vec<f64>,
    pub degenerate_rows: usize,
}

impl BatchEvaluation {
    pub fn is_degenerate(&self) -> bool {
        self.degenerate_rows > 0
    }
}

impl ExprTree {
    pub fn parse_preorder(tokens: &[Token]) -> Result<Self, ExprError> {
        if tokens.is_empty() {
            return Err(ExprError::Empty);
        }
        let mut deficit = 1i64;
        for (i, t) in tokens.iter().enumerate() {
            if deficit == 0 {
                return Err(ExprError::DanglingTokens { position: i });
            }
            deficit += t.arity() as i64 - 1;
        }
        if deficit != 0 {
            return Err(ExprError::IncompleteSequence { missing: deficit });
        }
        let subtree_end = compute_subtree_ends(tokens);
        Ok(Self {
            tokens: tokens.to_vec(),
            subtree_end,
        })
    }

    /// Parses with a length ceiling.
    pub fn parse_preorder_bounded(tokens: &[Token], max_length: usize) -> Result<Self, ExprError> {
        if tokens.len() > max_length {
            return Err(ExprError::TooLong {
                length: tokens.len(),
                max: max_length,
            });
        }
        Self::parse_preorder(tokens)
    }

    /// Parses the comma-separated sidecar format, e.g. `+,cos,x1,x2`.
    pub fn parse_token_list(s: &str, registry: &TokenSet) -> Result<Self, ExprError> {
        let tokens = s
            .split(',')
            .filter(|p| !p.trim().is_empty())
            .map(|p| registry.parse_symbol(p))
            .collect::<Result<Vec<_>, _>>()?;
        Self::parse_preorder(&tokens)
    }

    pub fn variable(index: usize) -> Self {
        let t = Token::variable(index).expect("variable index out of range");
        Self::parse_preorder(&[t]).unwrap()
    }

    pub fn preorder(&self) -> &[Token] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn root(&self) -> Token {
        self.tokens[0]
    }

    /// Pre-order positions of the children of node `i`.
    pub fn children(&self, i: usize) -> Vec<usize> {
        match self.tokens[i].arity() {
            0 => vec![],
            1 => vec![i + 1],
            _ => vec![i + 1, self.subtree_end[i + 1]],
        }
    }

    /// Copy of the subtree rooted at pre-order position `i`.
    pub fn subtree(&self, i: usize) -> ExprTree {
        let end = self.subtree_end[i];
        let tokens = &self.tokens[i..end];
        ExprTree {
            tokens: tokens.to_vec(),
            subtree_end: self.subtree_end[i..end].iter().map(|e| e - i).collect(),
        }
    }

    pub fn uses_variable(&self, index: usize) -> bool {
        self.tokens
            .iter()
            .any(|t| t.variable_index() == Some(index))
    }

    /// Comma-separated pre-order symbols.
    pub fn to_token_list(&self) -> String {
        self.tokens
            .iter()
            .map(|t| t.symbol())
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Evaluates at one point. Non-finite inputs are a caller bug.
    pub fn evaluate(&self, vars: &[f64; VAR_COUNT]) -> f64 {
        debug_assert!(
            vars.iter().all(|v| v.is_finite()),
            "non-finite expression input {vars:?}"
        );
        self.evaluate_flagged(vars).value
    }

    pub fn try_evaluate(&self, vars: &[f64; VAR_COUNT]) -> Result<Evaluation, ExprError> {
        if vars.iter().any(|v| !v.is_finite()) {
            return Err(ExprError::NonFiniteInput);
        }
        Ok(self.evaluate_flagged(vars))
    }

    pub fn evaluate_flagged(&self, vars: &[f64; VAR_COUNT]) -> Evaluation {
        let mut stack: Vec<f64> = Vec::with_capacity(self.tokens.len());
        let mut degenerate = false;
        for &t in self.tokens.iter().rev() {
            let v = match t.arity() {
                0 => vars[t.variable_index().unwrap()],
                1 => {
                    let a = stack.pop().unwrap();
                    apply_unary(t, a)
                }
                _ => {
                    let a = stack.pop().unwrap();
                    let b = stack.pop().unwrap();
                    apply_binary(t, a, b)
                }
            };
            degenerate |= !v.is_finite();
            stack.push(v);
        }
        let value = stack.pop().unwrap();
        if degenerate {
            Evaluation {
                value: 0.0,
                degenerate: true,
            }
        } else {
            Evaluation {
                value,
                degenerate: false,
            }
        }
    }

    /// Evaluates every row of a column-major dataset. All columns must have
    /// equal length.
    pub fn evaluate_columns(&self, columns: &[Vec<f64>; VAR_COUNT]) -> BatchEvaluation {
        let n = columns[0].len();
        let mut bad = vec![false; n];
        let mut stack: Vec<Vec<f64>> = Vec::with_capacity(8);
        for &t in self.tokens.iter().rev() {
            let out = match t.arity() {
                0 => columns[t.variable_index().unwrap()].clone(),
                1 => {
                    let mut a = stack.pop().unwrap();
                    for (v, flag) in a.iter_mut().zip(bad.iter_mut()) {
                        *v = apply_unary(t, *v);
                        *flag |= !v.is_finite();
                    }
                    a
                }
                _ => {
                    let mut a = stack.pop().unwrap();
                    let b = stack.pop().unwrap();
                    for ((v, &w), flag) in a.iter_mut().zip(b.iter()).zip(bad.iter_mut()) {
                        *v = apply_binary(t, *v, w);
                        *flag |= !v.is_finite();
                    }
                    a
                }
            };
            stack.push(out);
        }
        let mut values = stack.pop().unwrap();
        let mut degenerate_rows = 0;
        for (v, &flag) in values.iter_mut().zip(bad.iter()) {
            if flag {
                *v = 0.0;
                degenerate_rows += 1;
            }
        }
        BatchEvaluation {
            values,
            degenerate_rows,
        }
    }
}

#[inline]
fn apply_unary(t: Token, a: f64) -> f64 {
    match t {
        Token::Cos => a.cos(),
        Token::Sin => a.sin(),
        Token::Exp => a.exp(),
        _ => unreachable!("{t} is not unary"),
    }
}

#[inline]
fn apply_binary(t: Token, a: f64, b: f64) -> f64 {
    match t {
        Token::Add => a + b,
        Token::Sub => a - b,
        Token::Mul => a * b,
        Token::Div => {
            if b.abs() < PROTECTED_DIV_EPS {
                PROTECTED_DIV_VALUE
            } else {
                a / b
            }
        }
        _ => unreachable!("{t} is not binary"),
    }
}

fn compute_subtree_ends(tokens: &[Token]) -> Vec<usize> {
    // Walk backwards: each token's subtree spans itself plus its children's
    // subtrees, which sit immediately after it.
    let mut ends = vec![0usize; tokens.len()];
    let mut stack: Vec<usize> = Vec::new();
    for i in (0..tokens.len()).rev() {
        let mut end = i + 1;
        for _ in 0..tokens[i].arity() {
            end = stack.pop().unwrap();
        }
        ends[i] = end;
        stack.push(end);
    }
    ends
}

impl fmt::Debug for ExprTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ExprTree({})", self.to_token_list())
    }
}

impl fmt::Display for ExprTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_infix())
    }
}
