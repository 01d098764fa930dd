//! Rule-expression language: AST, lexer, recursive-descent parser and printers.
//!
//! Grammar, lowest precedence first, every binary level left-associative:
//!
//! ```text
//! or      := and ("or" and)*
//! and     := cmp ("and" cmp)*
//! cmp     := add (("==" | "!=" | "<" | "<=" | ">" | ">=") add)*
//! add     := mul (("+" | "-") mul)*
//! mul     := unary (("*" | "/") unary)*
//! unary   := ("not" | "-") unary | primary
//! primary := literal | "sum" "(" column ")" | column | "(" or ")"
//! column  := name ("." name)?        name := identifier | `quoted`
//! ```

use std::fmt;

/// A column reference, optionally qualified by its table.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ColumnRef {
    pub table: Option<String>,
    pub column: String,
}

impl ColumnRef {
    pub fn bare(column: impl Into<String>) -> Self {
        ColumnRef { table: None, column: column.into() }
    }

    pub fn qualified(table: impl Into<String>, column: impl Into<String>) -> Self {
        ColumnRef { table: Some(table.into()), column: column.into() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Not,
    Neg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinaryOp {
    fn precedence(self) -> u8 {
        match self {
            BinaryOp::Or => 1,
            BinaryOp::And => 2,
            BinaryOp::Eq | BinaryOp::Ne | BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge => 3,
            BinaryOp::Add | BinaryOp::Sub => 4,
            BinaryOp::Mul | BinaryOp::Div => 5,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::And => "and",
            BinaryOp::Or => "or",
        }
    }

    pub fn is_comparison(self) -> bool {
        self.precedence() == 3
    }

    pub fn is_arithmetic(self) -> bool {
        matches!(self, BinaryOp::Add | BinaryOp::Sub | BinaryOp::Mul | BinaryOp::Div)
    }

    pub fn is_logical(self) -> bool {
        matches!(self, BinaryOp::And | BinaryOp::Or)
    }
}

const UNARY_PRECEDENCE: u8 = 6;
const ATOM_PRECEDENCE: u8 = 7;

/// Parsed rule expression.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Column(ColumnRef),
    Literal(Literal),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    /// `sum(table.column)` over the rows joined through a cross-table reference.
    Sum(ColumnRef),
}

impl Expr {
    pub fn binary(op: BinaryOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn unary(op: UnaryOp, operand: Expr) -> Expr {
        Expr::Unary(op, Box::new(operand))
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(op, ..) => op.precedence(),
            Expr::Unary(..) => UNARY_PRECEDENCE,
            _ => ATOM_PRECEDENCE,
        }
    }

    /// Column references in order of first appearance, aggregates included.
    pub fn columns(&self) -> Vec<&ColumnRef> {
        let mut out = Vec::new();
        self.visit_columns(&mut |c| {
            if !out.contains(&c) {
                out.push(c);
            }
        });
        out
    }

    fn visit_columns<'a>(&'a self, f: &mut impl FnMut(&'a ColumnRef)) {
        match self {
            Expr::Column(c) | Expr::Sum(c) => f(c),
            Expr::Literal(_) => {}
            Expr::Unary(_, e) => e.visit_columns(f),
            Expr::Binary(_, l, r) => {
                l.visit_columns(f);
                r.visit_columns(f);
            }
        }
    }

    pub fn contains_aggregate(&self) -> bool {
        match self {
            Expr::Sum(_) => true,
            Expr::Column(_) | Expr::Literal(_) => false,
            Expr::Unary(_, e) => e.contains_aggregate(),
            Expr::Binary(_, l, r) => l.contains_aggregate() || r.contains_aggregate(),
        }
    }

    /// Renders every compound node inside its own parentheses.
    pub fn to_parenthesized(&self) -> String {
        match self {
            Expr::Column(_) | Expr::Literal(_) | Expr::Sum(_) => self.to_string(),
            Expr::Unary(op, e) => match op {
                UnaryOp::Not => format!("(not {})", e.to_parenthesized()),
                UnaryOp::Neg => format!("(-{})", e.to_parenthesized()),
            },
            Expr::Binary(op, l, r) => {
                format!("({} {} {})", l.to_parenthesized(), op.symbol(), r.to_parenthesized())
            }
        }
    }
}

fn is_plain_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    let first_ok = chars.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_');
    first_ok && chars.all(|c| c.is_ascii_alphanumeric() || c == '_') && keyword(name).is_none()
}

fn write_name(f: &mut fmt::Formatter<'_>, name: &str) -> fmt::Result {
    if is_plain_identifier(name) {
        f.write_str(name)
    } else {
        write!(f, "`{}`", name.replace('`', "``"))
    }
}

impl fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(table) = &self.table {
            write_name(f, table)?;
            f.write_str(".")?;
        }
        write_name(f, &self.column)
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Int(i) => write!(f, "{i}"),
            // Debug keeps a '.' or exponent so the literal re-lexes as a float.
            Literal::Float(x) => write!(f, "{x:?}"),
            Literal::Bool(b) => write!(f, "{b}"),
            Literal::Text(s) => {
                f.write_str("\"")?;
                for c in s.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        '\n' => f.write_str("\\n")?,
                        '\t' => f.write_str("\\t")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")
            }
        }
    }
}

/// Minimal-parenthesis rendering that reparses to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Column(c) => write!(f, "{c}"),
            Expr::Literal(l) => write!(f, "{l}"),
            Expr::Sum(c) => write!(f, "sum({c})"),
            Expr::Unary(op, e) => {
                match op {
                    UnaryOp::Not => f.write_str("not ")?,
                    UnaryOp::Neg => f.write_str("-")?,
                }
                if e.precedence() < UNARY_PRECEDENCE {
                    write!(f, "({e})")
                } else {
                    write!(f, "{e}")
                }
            }
            Expr::Binary(op, l, r) => {
                let p = op.precedence();
                if l.precedence() < p {
                    write!(f, "({l})")?;
                } else {
                    write!(f, "{l}")?;
                }
                write!(f, " {} ", op.symbol())?;
                if r.precedence() <= p {
                    write!(f, "({r})")
                } else {
                    write!(f, "{r}")
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExprErrorKind {
    Lexical,
    Syntax,
}

/// Lexical or syntax error with a byte offset into the source.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{} error at offset {position}: {message}", match .kind { ExprErrorKind::Lexical => "lexical", ExprErrorKind::Syntax => "syntax" })]
pub struct ExprError {
    pub kind: ExprErrorKind,
    pub position: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Quoted(String),
    Int(i64),
    Float(f64),
    Text(String),
    True,
    False,
    And,
    Or,
    Not,
    Plus,
    Minus,
    Star,
    Slash,
    EqEq,
    NotEq,
    Lt,
    Le,
    Gt,
    Ge,
    LParen,
    RParen,
    Dot,
    End,
}

fn keyword(word: &str) -> Option<Tok> {
    match word {
        "and" => Some(Tok::And),
        "or" => Some(Tok::Or),
        "not" => Some(Tok::Not),
        "true" => Some(Tok::True),
        "false" => Some(Tok::False),
        _ => None,
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ExprError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |position: usize, message: String| ExprError { kind: ExprErrorKind::Lexical, position, message };
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        match c {
            b' ' | b'\t' | b'\r' | b'\n' => {
                i += 1;
                continue;
            }
            b'+' => out.push((Tok::Plus, start)),
            b'-' => out.push((Tok::Minus, start)),
            b'*' => out.push((Tok::Star, start)),
            b'/' => out.push((Tok::Slash, start)),
            b'(' => out.push((Tok::LParen, start)),
            b')' => out.push((Tok::RParen, start)),
            b'.' => out.push((Tok::Dot, start)),
            b'=' | b'!' | b'<' | b'>' => {
                let next_eq = bytes.get(i + 1) == Some(&b'=');
                let tok = match (c, next_eq) {
                    (b'=', true) => Tok::EqEq,
                    (b'!', true) => Tok::NotEq,
                    (b'<', true) => Tok::Le,
                    (b'>', true) => Tok::Ge,
                    (b'<', false) => Tok::Lt,
                    (b'>', false) => Tok::Gt,
                    _ => return Err(err(start, format!("unexpected character {:?}", c as char))),
                };
                if next_eq {
                    i += 1;
                }
                out.push((tok, start));
            }
            b'"' => {
                let mut text = String::new();
                let mut chars = src[i + 1..].char_indices();
                let mut closed = false;
                while let Some((off, ch)) = chars.next() {
                    match ch {
                        '"' => {
                            i = i + 1 + off;
                            closed = true;
                            break;
                        }
                        '\\' => match chars.next() {
                            Some((_, '"')) => text.push('"'),
                            Some((_, '\\')) => text.push('\\'),
                            Some((_, 'n')) => text.push('\n'),
                            Some((_, 't')) => text.push('\t'),
                            Some((eo, other)) => {
                                return Err(err(i + 1 + eo, format!("unknown escape \\{other}")));
                            }
                            None => break,
                        },
                        ch => text.push(ch),
                    }
                }
                if !closed {
                    return Err(err(start, "unterminated string literal".into()));
                }
                out.push((Tok::Text(text), start));
            }
            b'`' => {
                let mut name = String::new();
                let mut j = i + 1;
                loop {
                    match src[j..].find('`') {
                        Some(off) => {
                            name.push_str(&src[j..j + off]);
                            j += off + 1;
                            if bytes.get(j) == Some(&b'`') {
                                name.push('`');
                                j += 1;
                            } else {
                                break;
                            }
                        }
                        None => return Err(err(start, "unterminated quoted identifier".into())),
                    }
                }
                if name.is_empty() {
                    return Err(err(start, "empty quoted identifier".into()));
                }
                i = j - 1;
                out.push((Tok::Quoted(name), start));
            }
            b'0'..=b'9' => {
                let mut j = i;
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                let mut is_float = false;
                if j + 1 < bytes.len() && bytes[j] == b'.' && bytes[j + 1].is_ascii_digit() {
                    is_float = true;
                    j += 1;
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                }
                if j < bytes.len() && (bytes[j] == b'e' || bytes[j] == b'E') {
                    let mut k = j + 1;
                    if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                        k += 1;
                    }
                    if k < bytes.len() && bytes[k].is_ascii_digit() {
                        while k < bytes.len() && bytes[k].is_ascii_digit() {
                            k += 1;
                        }
                        is_float = true;
                        j = k;
                    } else {
                        return Err(err(j, "malformed exponent".into()));
                    }
                }
                let text = &src[i..j];
                let tok = if is_float {
                    Tok::Float(text.parse().map_err(|_| err(start, format!("bad number {text:?}")))?)
                } else {
                    Tok::Int(text.parse().map_err(|_| err(start, format!("integer {text} out of range")))?)
                };
                if j < bytes.len() && (bytes[j].is_ascii_alphabetic() || bytes[j] == b'_') {
                    return Err(err(j, "identifier cannot start with a digit".into()));
                }
                i = j - 1;
                out.push((tok, start));
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let mut j = i;
                while j < bytes.len() && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_') {
                    j += 1;
                }
                let word = &src[i..j];
                i = j - 1;
                out.push((keyword(word).unwrap_or_else(|| Tok::Ident(word.to_string())), start));
            }
            _ => {
                let ch = src[i..].chars().next().unwrap_or('?');
                return Err(err(start, format!("unexpected character {ch:?}")));
            }
        }
        i += 1;
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

struct Parser {
    tokens: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].0
    }

    fn offset(&self) -> usize {
        self.tokens[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let tok = self.tokens[self.pos].0.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        tok
    }

    fn error(&self, message: impl Into<String>) -> ExprError {
        ExprError { kind: ExprErrorKind::Syntax, position: self.offset(), message: message.into() }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ExprError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(format!("expected {what}, found {}", describe(self.peek()))))
        }
    }

    fn binary_level(
        &mut self,
        next: fn(&mut Parser) -> Result<Expr, ExprError>,
        op_of: fn(&Tok) -> Option<BinaryOp>,
    ) -> Result<Expr, ExprError> {
        let mut lhs = next(self)?;
        while let Some(op) = op_of(self.peek()) {
            self.bump();
            let rhs = next(self)?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Expr, ExprError> {
        self.binary_level(Parser::and, |t| (*t == Tok::Or).then_some(BinaryOp::Or))
    }

    fn and(&mut self) -> Result<Expr, ExprError> {
        self.binary_level(Parser::comparison, |t| (*t == Tok::And).then_some(BinaryOp::And))
    }

    fn comparison(&mut self) -> Result<Expr, ExprError> {
        self.binary_level(Parser::additive, |t| match t {
            Tok::EqEq => Some(BinaryOp::Eq),
            Tok::NotEq => Some(BinaryOp::Ne),
            Tok::Lt => Some(BinaryOp::Lt),
            Tok::Le => Some(BinaryOp::Le),
            Tok::Gt => Some(BinaryOp::Gt),
            Tok::Ge => Some(BinaryOp::Ge),
            _ => None,
        })
    }

    fn additive(&mut self) -> Result<Expr, ExprError> {
        self.binary_level(Parser::multiplicative, |t| match t {
            Tok::Plus => Some(BinaryOp::Add),
            Tok::Minus => Some(BinaryOp::Sub),
            _ => None,
        })
    }

    fn multiplicative(&mut self) -> Result<Expr, ExprError> {
        self.binary_level(Parser::unary, |t| match t {
            Tok::Star => Some(BinaryOp::Mul),
            Tok::Slash => Some(BinaryOp::Div),
            _ => None,
        })
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        match self.peek() {
            Tok::Not => {
                self.bump();
                Ok(Expr::unary(UnaryOp::Not, self.unary()?))
            }
            Tok::Minus => {
                self.bump();
                Ok(Expr::unary(UnaryOp::Neg, self.unary()?))
            }
            _ => self.primary(),
        }
    }

    fn name(&mut self) -> Result<String, ExprError> {
        match self.bump() {
            Tok::Ident(s) | Tok::Quoted(s) => Ok(s),
            other => {
                self.pos -= 1;
                Err(self.error(format!("expected column name, found {}", describe(&other))))
            }
        }
    }

    fn column_after(&mut self, first: String) -> Result<ColumnRef, ExprError> {
        if *self.peek() == Tok::Dot {
            self.bump();
            let column = self.name()?;
            Ok(ColumnRef::qualified(first, column))
        } else {
            Ok(ColumnRef::bare(first))
        }
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        match self.peek().clone() {
            Tok::Int(i) => {
                self.bump();
                Ok(Expr::Literal(Literal::Int(i)))
            }
            Tok::Float(x) => {
                self.bump();
                Ok(Expr::Literal(Literal::Float(x)))
            }
            Tok::Text(s) => {
                self.bump();
                Ok(Expr::Literal(Literal::Text(s)))
            }
            Tok::True => {
                self.bump();
                Ok(Expr::Literal(Literal::Bool(true)))
            }
            Tok::False => {
                self.bump();
                Ok(Expr::Literal(Literal::Bool(false)))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.or()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(inner)
            }
            Tok::Ident(word) if word == "sum" && self.tokens[self.pos + 1].0 == Tok::LParen => {
                self.bump();
                self.bump();
                let first = self.name()?;
                let column = self.column_after(first)?;
                self.expect(Tok::RParen, "')' closing sum(")?;
                Ok(Expr::Sum(column))
            }
            Tok::Ident(_) | Tok::Quoted(_) => {
                let first = self.name()?;
                Ok(Expr::Column(self.column_after(first)?))
            }
            other => Err(self.error(format!("expected an operand, found {}", describe(&other)))),
        }
    }
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Ident(s) => format!("identifier {s:?}"),
        Tok::Quoted(s) => format!("identifier `{s}`"),
        Tok::Int(i) => format!("number {i}"),
        Tok::Float(x) => format!("number {x}"),
        Tok::Text(s) => format!("string {s:?}"),
        Tok::End => "end of input".into(),
        Tok::True => "'true'".into(),
        Tok::False => "'false'".into(),
        Tok::And => "'and'".into(),
        Tok::Or => "'or'".into(),
        Tok::Not => "'not'".into(),
        Tok::Plus => "'+'".into(),
        Tok::Minus => "'-'".into(),
        Tok::Star => "'*'".into(),
        Tok::Slash => "'/'".into(),
        Tok::EqEq => "'=='".into(),
        Tok::NotEq => "'!='".into(),
        Tok::Lt => "'<'".into(),
        Tok::Le => "'<='".into(),
        Tok::Gt => "'>'".into(),
        Tok::Ge => "'>='".into(),
        Tok::LParen => "'('".into(),
        Tok::RParen => "')'".into(),
        Tok::Dot => "'.'".into(),
    }
}

/// Parses one rule expression. Name resolution and type checking happen
/// later, against a schema (see [`crate::schema::resolve`]).
pub fn parse_rule_expr(text: &str) -> Result<Expr, ExprError> {
    let tokens = lex(text)?;
    let mut parser = Parser { tokens, pos: 0 };
    let expr = parser.or()?;
    if *parser.peek() != Tok::End {
        return Err(parser.error(format!("unexpected {} after expression", describe(parser.peek()))));
    }
    Ok(expr)
}
