//! Infix rendering and parsing.
//!
//! Rendering is fully parenthesized: every binary node becomes `(a op b)`,
//! unary nodes become `name(a)`. The parser accepts that form and also the
//! usual precedence rules (`*` and `/` bind tighter than `+` and `-`, all
//! left-associative), so hand-written formulas work too. There are no numeric
//! literals and no unary minus.

use super::{ExprError, ExprTree, Token, TokenKind, TokenSet};

impl ExprTree {
    pub fn to_infix(&self) -> String {
        let mut out = String::with_capacity(self.len() * 4);
        render(self, 0, &mut out);
        out
    }

    /// Parses an infix formula, restricted to the tokens in `registry`.
    pub fn parse_infix(s: &str, registry: &TokenSet) -> Result<Self, ExprError> {
        let lexemes = lex(s)?;
        let mut parser = Parser {
            lexemes,
            pos: 0,
            registry,
            out: Vec::new(),
        };
        parser.expr()?;
        if parser.pos != parser.lexemes.len() {
            return Err(ExprError::Syntax(format!(
                "unexpected `{}` at token {}",
                parser.lexemes[parser.pos], parser.pos
            )));
        }
        ExprTree::parse_preorder(&parser.out)
    }
}

fn render(tree: &ExprTree, i: usize, out: &mut String) {
    let t = tree.preorder()[i];
    match t.kind() {
        TokenKind::Variable => out.push_str(t.symbol()),
        TokenKind::Unary => {
            out.push_str(t.symbol());
            out.push('(');
            render(tree, i + 1, out);
            out.push(')');
        }
        TokenKind::Binary => {
            let kids = tree.children(i);
            out.push('(');
            render(tree, kids[0], out);
            out.push(' ');
            out.push_str(t.symbol());
            out.push(' ');
            render(tree, kids[1], out);
            out.push(')');
        }
    }
}

fn lex(s: &str) -> Result<Vec<String>, ExprError> {
    let mut out = Vec::new();
    let mut chars = s.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if c.is_ascii_alphanumeric() || c == '_' {
            let mut word = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    word.push(c);
                    chars.next();
                } else {
                    break;
                }
            }
            out.push(word);
        } else if "+-*/()−×÷".contains(c) {
            out.push(c.to_string());
            chars.next();
        } else {
            return Err(ExprError::Syntax(format!("unexpected character `{c}`")));
        }
    }
    if out.is_empty() {
        return Err(ExprError::Empty);
    }
    Ok(out)
}

struct Parser<'a> {
    lexemes: Vec<String>,
    pos: usize,
    registry: &'a TokenSet,
    // Pre-order output. Binary operators are inserted in front of their left
    // operand once the operator is seen.
    out: Vec<Token>,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&str> {
        self.lexemes.get(self.pos).map(String::as_str)
    }

    fn expect(&mut self, want: &str) -> Result<(), ExprError> {
        match self.peek() {
            Some(got) if got == want => {
                self.pos += 1;
                Ok(())
            }
            Some(got) => Err(ExprError::Syntax(format!(
                "expected `{want}`, found `{got}`"
            ))),
            None => Err(ExprError::Syntax(format!(
                "expected `{want}`, found end of input"
            ))),
        }
    }

    fn binary_level(
        &mut self,
        ops: &[&str],
        next: fn(&mut Self) -> Result<(), ExprError>,
    ) -> Result<(), ExprError> {
        let start = self.out.len();
        next(self)?;
        while let Some(op) = self.peek() {
            if !ops.contains(&op) {
                break;
            }
            let token = self.registry.parse_symbol(op)?;
            self.pos += 1;
            self.out.insert(start, token);
            next(self)?;
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<(), ExprError> {
        self.binary_level(&["+", "-", "−"], Self::term)
    }

    fn term(&mut self) -> Result<(), ExprError> {
        self.binary_level(&["*", "/", "×", "÷"], Self::factor)
    }

    fn factor(&mut self) -> Result<(), ExprError> {
        let Some(lex) = self.peek().map(str::to_owned) else {
            return Err(ExprError::Syntax("unexpected end of input".into()));
        };
        if lex == "(" {
            self.pos += 1;
            self.expr()?;
            return self.expect(")");
        }
        if lex == "-" || lex == "−" {
            return Err(ExprError::Syntax(
                "unary minus is not expressible without constants".into(),
            ));
        }
        let token = match Token::from_symbol(&lex) {
            Some(t) => self.registry.parse_symbol(t.symbol())?,
            None if lex.chars().all(|c| c.is_ascii_digit() || c == '.') => {
                return Err(ExprError::Syntax(format!(
                    "numeric constant `{lex}` is not part of the language"
                )))
            }
            None => return Err(ExprError::UnknownSymbol(lex)),
        };
        self.pos += 1;
        match token.kind() {
            TokenKind::Variable => {
                self.out.push(token);
                Ok(())
            }
            TokenKind::Unary => {
                self.out.push(token);
                self.expect("(")?;
                self.expr()?;
                self.expect(")")
            }
            TokenKind::Binary => Err(ExprError::Syntax(format!(
                "operator `{lex}` in operand position"
            ))),
        }
    }
}
