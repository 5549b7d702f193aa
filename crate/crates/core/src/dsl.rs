//! Parser and printer for the declarative input language.
//!
//! The language is a closed subset of ProbLog: plain and annotated facts,
//! rules whose bodies combine literals with `,` (and), `;` (or), `\+`
//! (negation of an atom) and parentheses, and `query/1` statements. The only
//! built-ins are `V > k` and `V is W - k`, which is what a radius-bounded
//! trust predicate needs.
//!
//! ```text
//! program    ::= statement*
//! statement  ::= "query" "(" atom ")" "."
//!              | [ label "::" ] atom [ ":-" disj ] "."
//! label      ::= number | "(" number "," number ")"
//! disj       ::= conj { ";" conj }
//! conj       ::= literal { "," literal }
//! literal    ::= "\+" atom | "(" disj ")" | VAR ">" INT
//!              | VAR "is" VAR "-" INT | atom
//! atom       ::= NAME [ "(" term { "," term } ")" ]
//! term       ::= VAR | "_" | NAME [ "(" term { "," term } ")" ] | INT | list
//! list       ::= "[" [ term { "," term } [ "|" term ] ] "]"
//! ```
//!
//! `;` binds looser than `,`, as in Prolog. Comments run from `%` to the end
//! of the line.

use std::fmt;

/// A parsed program. Equality ignores source locations.
#[derive(Debug, Clone, Default)]
pub struct Program {
    pub statements: Vec<Statement>,
    pub spans: Vec<Span>,
    /// Name of the file the program came from, used in diagnostics.
    pub source_name: Option<String>,
}

impl PartialEq for Program {
    fn eq(&self, other: &Self) -> bool {
        self.statements == other.statements
    }
}

impl Program {
    pub fn new(statements: Vec<Statement>) -> Self {
        Self {
            statements,
            spans: Vec::new(),
            source_name: None,
        }
    }

    pub fn with_source_name(mut self, name: impl Into<String>) -> Self {
        self.source_name = Some(name.into());
        self
    }

    /// Source location of the `index`-th statement, if the program was parsed.
    pub fn span(&self, index: usize) -> Option<Span> {
        self.spans.get(index).copied()
    }
}

/// Byte range of a statement plus the 1-based line and column where it starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Statement {
    /// A ground fact. Plain facts carry [`Label::Certain`].
    Fact {
        label: Label,
        atom: Atom,
    },
    /// A clause. Unit clauses with variables (`trusts(X,X).`) have no body.
    Rule {
        head: Atom,
        body: Option<BodyExpr>,
    },
    Query(Atom),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Label {
    Certain,
    Prob(f64),
    Pair(f64, f64),
}

impl Label {
    pub fn is_certain(&self) -> bool {
        matches!(self, Label::Certain)
    }

    /// Checks the carrier bounds every label must respect regardless of the
    /// active semiring.
    pub fn check_range(&self) -> Result<(), String> {
        match *self {
            Label::Certain => Ok(()),
            Label::Prob(p) if (0.0..=1.0).contains(&p) => Ok(()),
            Label::Prob(p) => Err(format!("probability {p} outside [0,1]")),
            Label::Pair(t, c) => {
                if !(-1.0..=1.0).contains(&t) {
                    Err(format!("trust component {t} outside [-1,1]"))
                } else if !(0.0..=1.0).contains(&c) {
                    Err(format!("confidence component {c} outside [0,1]"))
                } else {
                    Ok(())
                }
            }
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Certain => Ok(()),
            Label::Prob(p) => write!(f, "{p}"),
            Label::Pair(t, c) => write!(f, "({t},{c})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(String),
    /// The anonymous variable `_`.
    Anon,
    Const(String),
    Int(i64),
    List(Vec<Term>, Option<Box<Term>>),
    Compound(String, Vec<Term>),
}

impl Term {
    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) | Term::Anon => false,
            Term::Const(_) | Term::Int(_) => true,
            Term::List(items, tail) => items.iter().all(Term::is_ground) && tail.as_ref().is_none_or(|t| t.is_ground()),
            Term::Compound(_, args) => args.iter().all(Term::is_ground),
        }
    }

    fn collect_vars<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Term::Var(v) => out.push(v),
            Term::List(items, tail) => {
                items.iter().for_each(|t| t.collect_vars(out));
                if let Some(t) = tail {
                    t.collect_vars(out);
                }
            }
            Term::Compound(_, args) => args.iter().for_each(|t| t.collect_vars(out)),
            _ => {}
        }
    }

    pub fn as_const(&self) -> Option<&str> {
        match self {
            Term::Const(c) => Some(c),
            _ => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(v),
            Term::Anon => f.write_str("_"),
            Term::Const(c) => f.write_str(c),
            Term::Int(i) => write!(f, "{i}"),
            Term::List(items, tail) => {
                f.write_str("[")?;
                write_joined(f, items, ", ")?;
                if let Some(t) = tail {
                    write!(f, "|{t}")?;
                }
                f.write_str("]")
            }
            Term::Compound(name, args) => {
                write!(f, "{name}(")?;
                write_joined(f, args, ", ")?;
                f.write_str(")")
            }
        }
    }
}

fn write_joined<T: fmt::Display>(f: &mut fmt::Formatter<'_>, items: &[T], sep: &str) -> fmt::Result {
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(sep)?;
        }
        write!(f, "{item}")?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: impl Into<String>, args: Vec<Term>) -> Self {
        Self {
            predicate: predicate.into(),
            args,
        }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_ground)
    }

    /// Named variables occurring in the atom, in order of appearance.
    pub fn variables(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.args.iter().for_each(|t| t.collect_vars(&mut out));
        out
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.predicate)?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            write_joined(f, &self.args, ", ")?;
            f.write_str(")")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BodyExpr {
    Conj(Vec<BodyExpr>),
    Disj(Vec<BodyExpr>),
    Lit {
        atom: Atom,
        positive: bool,
    },
    /// `Var > bound`
    Gt {
        var: String,
        bound: i64,
    },
    /// `target is source - delta`
    IsMinus {
        target: String,
        source: String,
        delta: i64,
    },
}

impl BodyExpr {
    pub fn pos(atom: Atom) -> Self {
        BodyExpr::Lit { atom, positive: true }
    }

    /// Visits every literal in the expression.
    pub fn literals(&self) -> Vec<(&Atom, bool)> {
        let mut out = Vec::new();
        self.walk_literals(&mut out);
        out
    }

    fn walk_literals<'a>(&'a self, out: &mut Vec<(&'a Atom, bool)>) {
        match self {
            BodyExpr::Conj(xs) | BodyExpr::Disj(xs) => xs.iter().for_each(|x| x.walk_literals(out)),
            BodyExpr::Lit { atom, positive } => out.push((atom, *positive)),
            BodyExpr::Gt { .. } | BodyExpr::IsMinus { .. } => {}
        }
    }

    /// Variables bound by positive literals, i.e. the ones a rule head may use.
    pub fn positive_variables(&self) -> Vec<&str> {
        let mut out = Vec::new();
        for (atom, positive) in self.literals() {
            if positive {
                out.extend(atom.variables());
            }
        }
        out
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, parent: Prec) -> fmt::Result {
        match self {
            BodyExpr::Conj(xs) => {
                let paren = parent != Prec::Top && parent != Prec::Disj;
                if paren {
                    f.write_str("(")?;
                }
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    x.fmt_prec(f, Prec::Conj)?;
                }
                if paren {
                    f.write_str(")")?;
                }
                Ok(())
            }
            BodyExpr::Disj(xs) => {
                let paren = parent != Prec::Top;
                if paren {
                    f.write_str("(")?;
                }
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str("; ")?;
                    }
                    x.fmt_prec(f, Prec::Disj)?;
                }
                if paren {
                    f.write_str(")")?;
                }
                Ok(())
            }
            BodyExpr::Lit { atom, positive } => {
                if !positive {
                    f.write_str("\\+")?;
                }
                write!(f, "{atom}")
            }
            BodyExpr::Gt { var, bound } => write!(f, "{var} > {bound}"),
            BodyExpr::IsMinus { target, source, delta } => write!(f, "{target} is {source} - {delta}"),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Prec {
    Top,
    Disj,
    Conj,
}

impl fmt::Display for BodyExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, Prec::Top)
    }
}

impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Statement::Fact { label, atom } => {
                if !label.is_certain() {
                    write!(f, "{label}::")?;
                }
                write!(f, "{atom}.")
            }
            Statement::Rule { head, body: None } => write!(f, "{head}."),
            Statement::Rule { head, body: Some(body) } => write!(f, "{head} :- {body}."),
            Statement::Query(atom) => write!(f, "query({atom})."),
        }
    }
}

/// Renders a program in canonical form, one statement per line.
pub fn print_program(program: &Program) -> String {
    let mut out = String::new();
    for stmt in &program.statements {
        out.push_str(&stmt.to_string());
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{}line {line}, column {column}: {message}", source_name.as_ref().map(|n| format!("{n}: ")).unwrap_or_default())]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
    /// Tokens that would have been accepted at the error position.
    pub expected: Vec<String>,
    pub source_name: Option<String>,
}

impl ParseError {
    pub fn with_source_name(mut self, name: impl Into<String>) -> Self {
        self.source_name = Some(name.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Name(String),
    Var(String),
    Num(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Dot,
    Bar,
    ColonColon,
    Neck,
    Not,
    Gt,
    Minus,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Name(n) => format!("name `{n}`"),
            Tok::Var(v) => format!("variable `{v}`"),
            Tok::Num(n) => format!("number `{n}`"),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::LBracket => "'['".into(),
            Tok::RBracket => "']'".into(),
            Tok::Comma => "','".into(),
            Tok::Semi => "';'".into(),
            Tok::Dot => "'.'".into(),
            Tok::Bar => "'|'".into(),
            Tok::ColonColon => "'::'".into(),
            Tok::Neck => "':-'".into(),
            Tok::Not => "'\\+'".into(),
            Tok::Gt => "'>'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    offset: usize,
    line: usize,
    column: usize,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    column: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Self {
            src,
            pos: 0,
            line: 1,
            column: 1,
        }
    }

    fn peek_char(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_char_at(&self, n: usize) -> Option<char> {
        self.src[self.pos..].chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek_char()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn error(&self, message: String) -> ParseError {
        ParseError {
            line: self.line,
            column: self.column,
            message,
            expected: Vec::new(),
            source_name: None,
        }
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek_char() {
            if c.is_whitespace() {
                self.bump();
            } else if c == '%' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn tokenize(mut self) -> Result<Vec<Token>, ParseError> {
        let mut out: Vec<Token> = Vec::new();
        loop {
            self.skip_trivia();
            let (offset, line, column) = (self.pos, self.line, self.column);
            let Some(c) = self.peek_char() else {
                out.push(Token {
                    tok: Tok::Eof,
                    offset,
                    line,
                    column,
                });
                return Ok(out);
            };
            // A leading '.' starts a number (".9::trusts(...)") only where a
            // statement or an argument may begin.
            let number_may_start = matches!(
                out.last().map(|t| &t.tok),
                None | Some(Tok::Dot) | Some(Tok::LParen) | Some(Tok::Comma)
            );
            let tok = if c.is_ascii_digit()
                || (c == '.' && number_may_start && self.peek_char_at(1).is_some_and(|d| d.is_ascii_digit()))
                || (c == '-'
                    && number_may_start
                    && self.peek_char_at(1).is_some_and(|d| d.is_ascii_digit() || d == '.'))
            {
                self.number()?
            } else if c.is_alphabetic() || c == '_' {
                let ident = self.ident();
                let first = ident.chars().next().unwrap();
                if first.is_uppercase() || first == '_' {
                    Tok::Var(ident)
                } else {
                    Tok::Name(ident)
                }
            } else {
                self.bump();
                match c {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '[' => Tok::LBracket,
                    ']' => Tok::RBracket,
                    ',' => Tok::Comma,
                    ';' => Tok::Semi,
                    '.' => Tok::Dot,
                    '|' => Tok::Bar,
                    '>' => Tok::Gt,
                    '-' => Tok::Minus,
                    ':' if self.peek_char() == Some(':') => {
                        self.bump();
                        Tok::ColonColon
                    }
                    ':' if self.peek_char() == Some('-') => {
                        self.bump();
                        Tok::Neck
                    }
                    '\\' if self.peek_char() == Some('+') => {
                        self.bump();
                        Tok::Not
                    }
                    other => {
                        let mut err = self.error(format!("unexpected character `{other}`"));
                        err.line = line;
                        err.column = column;
                        return Err(err);
                    }
                }
            };
            out.push(Token {
                tok,
                offset,
                line,
                column,
            });
        }
    }

    fn ident(&mut self) -> String {
        let start = self.pos;
        while let Some(c) = self.peek_char() {
            if c.is_alphanumeric() || c == '_' {
                self.bump();
            } else {
                break;
            }
        }
        self.src[start..self.pos].to_string()
    }

    fn number(&mut self) -> Result<Tok, ParseError> {
        let start = self.pos;
        if self.peek_char() == Some('-') {
            self.bump();
        }
        let mut seen_digit = false;
        while self.peek_char().is_some_and(|c| c.is_ascii_digit()) {
            self.bump();
            seen_digit = true;
        }
        // fractional part: only if a digit follows the dot, otherwise the dot
        // terminates the clause ("f(1).")
        if self.peek_char() == Some('.') && self.peek_char_at(1).is_some_and(|c| c.is_ascii_digit()) {
            self.bump();
            while self.peek_char().is_some_and(|c| c.is_ascii_digit()) {
                self.bump();
                seen_digit = true;
            }
        }
        if seen_digit && matches!(self.peek_char(), Some('e') | Some('E')) {
            let sign = matches!(self.peek_char_at(1), Some('+') | Some('-'));
            let digit_at = if sign { 2 } else { 1 };
            if self.peek_char_at(digit_at).is_some_and(|c| c.is_ascii_digit()) {
                for _ in 0..digit_at {
                    self.bump();
                }
                while self.peek_char().is_some_and(|c| c.is_ascii_digit()) {
                    self.bump();
                }
            }
        }
        if !seen_digit {
            return Err(self.error("malformed number".into()));
        }
        Ok(Tok::Num(self.src[start..self.pos].to_string()))
    }
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, expected: &[&str]) -> ParseError {
        let t = &self.tokens[self.pos];
        ParseError {
            line: t.line,
            column: t.column,
            message: format!("expected {} but found {}", expected.join(" or "), t.tok.describe()),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            source_name: None,
        }
    }

    fn error_at(&self, token: &Token, message: String) -> ParseError {
        ParseError {
            line: token.line,
            column: token.column,
            message,
            expected: Vec::new(),
            source_name: None,
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> PResult<Token> {
        if *self.peek() == tok {
            Ok(self.advance())
        } else {
            Err(self.error_here(&[what]))
        }
    }

    fn program(&mut self) -> PResult<Program> {
        let mut program = Program::default();
        while *self.peek() != Tok::Eof {
            let first = self.tokens[self.pos].clone();
            let stmt = self.statement()?;
            let last = &self.tokens[self.pos - 1];
            program.statements.push(stmt);
            program.spans.push(Span {
                start: first.offset,
                end: last.offset + 1,
                line: first.line,
                column: first.column,
            });
        }
        Ok(program)
    }

    fn statement(&mut self) -> PResult<Statement> {
        let start = self.tokens[self.pos].clone();
        let label = self.maybe_label()?;
        let head = self.atom()?;
        if label.is_none() && head.predicate == "query" && head.args.len() == 1 && *self.peek() == Tok::Dot {
            self.advance();
            let inner = match head.args.into_iter().next().unwrap() {
                Term::Const(name) => Atom::new(name, Vec::new()),
                Term::Compound(name, args) => Atom::new(name, args),
                _ => return Err(self.error_at(&start, "query/1 expects an atom".into())),
            };
            return Ok(Statement::Query(inner));
        }
        match self.peek() {
            Tok::Dot => {
                self.advance();
                match label {
                    Some(label) => {
                        if !head.is_ground() {
                            return Err(self.error_at(&start, format!("annotated fact `{head}` must be ground")));
                        }
                        Ok(Statement::Fact { label, atom: head })
                    }
                    None if head.is_ground() => Ok(Statement::Fact {
                        label: Label::Certain,
                        atom: head,
                    }),
                    None => Ok(Statement::Rule { head, body: None }),
                }
            }
            Tok::Neck => {
                if label.is_some() {
                    return Err(self.error_at(&start, "annotated rules are not supported".into()));
                }
                self.advance();
                let body = self.disjunction()?;
                self.expect(Tok::Dot, "'.'")?;
                Ok(Statement::Rule { head, body: Some(body) })
            }
            _ => Err(self.error_here(&["'.'", "':-'"])),
        }
    }

    fn maybe_label(&mut self) -> PResult<Option<Label>> {
        match (self.peek().clone(), self.peek_at(1).clone()) {
            (Tok::Num(_), Tok::ColonColon) => {
                let tok = self.advance();
                let p = self.float(&tok)?;
                self.advance();
                let label = Label::Prob(p);
                label.check_range().map_err(|m| self.error_at(&tok, m))?;
                Ok(Some(label))
            }
            (Tok::LParen, Tok::Num(_)) => {
                let open = self.advance();
                let t_tok = self.advance();
                let t = self.float(&t_tok)?;
                self.expect(Tok::Comma, "','")?;
                let c_tok = match self.peek() {
                    Tok::Num(_) => self.advance(),
                    _ => return Err(self.error_here(&["number"])),
                };
                let c = self.float(&c_tok)?;
                self.expect(Tok::RParen, "')'")?;
                self.expect(Tok::ColonColon, "'::'")?;
                let label = Label::Pair(t, c);
                label.check_range().map_err(|m| self.error_at(&open, m))?;
                Ok(Some(label))
            }
            _ => Ok(None),
        }
    }

    fn float(&self, tok: &Token) -> PResult<f64> {
        let Tok::Num(text) = &tok.tok else {
            return Err(self.error_at(tok, "expected number".into()));
        };
        text.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| self.error_at(tok, format!("invalid number `{text}`")))
    }

    fn int(&mut self) -> PResult<i64> {
        match self.peek().clone() {
            Tok::Num(text) => {
                let tok = self.advance();
                text.parse::<i64>()
                    .map_err(|_| self.error_at(&tok, format!("expected integer, found `{text}`")))
            }
            _ => Err(self.error_here(&["integer"])),
        }
    }

    fn atom(&mut self) -> PResult<Atom> {
        let name = match self.peek().clone() {
            Tok::Name(n) => {
                self.advance();
                n
            }
            _ => return Err(self.error_here(&["atom"])),
        };
        let args = if *self.peek() == Tok::LParen {
            self.advance();
            self.term_list(Tok::RParen, "')'")?
        } else {
            Vec::new()
        };
        Ok(Atom::new(name, args))
    }

    fn term_list(&mut self, close: Tok, close_name: &str) -> PResult<Vec<Term>> {
        let mut args = vec![self.term()?];
        loop {
            match self.peek() {
                Tok::Comma => {
                    self.advance();
                    args.push(self.term()?);
                }
                t if *t == close => {
                    self.advance();
                    return Ok(args);
                }
                _ => return Err(self.error_here(&["','", close_name])),
            }
        }
    }

    fn term(&mut self) -> PResult<Term> {
        match self.peek().clone() {
            Tok::Var(v) => {
                self.advance();
                Ok(if v == "_" { Term::Anon } else { Term::Var(v) })
            }
            Tok::Name(n) => {
                self.advance();
                if *self.peek() == Tok::LParen {
                    self.advance();
                    let args = self.term_list(Tok::RParen, "')'")?;
                    Ok(Term::Compound(n, args))
                } else {
                    Ok(Term::Const(n))
                }
            }
            Tok::Num(_) => Ok(Term::Int(self.int()?)),
            Tok::LBracket => {
                self.advance();
                if *self.peek() == Tok::RBracket {
                    self.advance();
                    return Ok(Term::List(Vec::new(), None));
                }
                let mut items = vec![self.term()?];
                loop {
                    match self.peek() {
                        Tok::Comma => {
                            self.advance();
                            items.push(self.term()?);
                        }
                        Tok::Bar => {
                            self.advance();
                            let tail = self.term()?;
                            self.expect(Tok::RBracket, "']'")?;
                            return Ok(Term::List(items, Some(Box::new(tail))));
                        }
                        Tok::RBracket => {
                            self.advance();
                            return Ok(Term::List(items, None));
                        }
                        _ => return Err(self.error_here(&["','", "'|'", "']'"])),
                    }
                }
            }
            _ => Err(self.error_here(&["term"])),
        }
    }

    fn disjunction(&mut self) -> PResult<BodyExpr> {
        let mut parts = vec![self.conjunction()?];
        while *self.peek() == Tok::Semi {
            self.advance();
            parts.push(self.conjunction()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            BodyExpr::Disj(parts)
        })
    }

    fn conjunction(&mut self) -> PResult<BodyExpr> {
        let mut parts = vec![self.literal()?];
        while *self.peek() == Tok::Comma {
            self.advance();
            parts.push(self.literal()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            BodyExpr::Conj(parts)
        })
    }

    fn literal(&mut self) -> PResult<BodyExpr> {
        match self.peek().clone() {
            Tok::Not => {
                self.advance();
                if *self.peek() == Tok::LParen {
                    return Err(self.error_here(&["atom"]));
                }
                Ok(BodyExpr::Lit {
                    atom: self.atom()?,
                    positive: false,
                })
            }
            Tok::LParen => {
                self.advance();
                let inner = self.disjunction()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(inner)
            }
            Tok::Var(var) => {
                self.advance();
                match self.peek().clone() {
                    Tok::Gt => {
                        self.advance();
                        Ok(BodyExpr::Gt {
                            var,
                            bound: self.int()?,
                        })
                    }
                    Tok::Name(kw) if kw == "is" => {
                        self.advance();
                        let source = match self.peek().clone() {
                            Tok::Var(v) => {
                                self.advance();
                                v
                            }
                            _ => return Err(self.error_here(&["variable"])),
                        };
                        self.expect(Tok::Minus, "'-'")?;
                        Ok(BodyExpr::IsMinus {
                            target: var,
                            source,
                            delta: self.int()?,
                        })
                    }
                    _ => Err(self.error_here(&["'>'", "'is'"])),
                }
            }
            Tok::Name(_) => Ok(BodyExpr::pos(self.atom()?)),
            _ => Err(self.error_here(&["literal"])),
        }
    }
}

/// Parses program text.
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let tokens = Lexer::new(text).tokenize()?;
    Parser { tokens, pos: 0 }.program()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(s: &str) -> Term {
        Term::Const(s.into())
    }

    fn single(text: &str) -> Statement {
        let p = parse_program(text).unwrap();
        assert_eq!(p.statements.len(), 1);
        p.statements.into_iter().next().unwrap()
    }

    #[test]
    fn annotated_fact() {
        assert_eq!(
            single("0.9999::firewall(cloud1)."),
            Statement::Fact {
                label: Label::Prob(0.9999),
                atom: Atom::new("firewall", vec![c("cloud1")])
            }
        );
    }

    #[test]
    fn leading_dot_probability() {
        assert_eq!(
            single(".9::trusts(appOp, edgeOp)."),
            Statement::Fact {
                label: Label::Prob(0.9),
                atom: Atom::new("trusts", vec![c("appOp"), c("edgeOp")])
            }
        );
    }

    #[test]
    fn pair_label() {
        assert_eq!(
            single("(0.9,0.8)::trusts(appOp, edgeOp)."),
            Statement::Fact {
                label: Label::Pair(0.9, 0.8),
                atom: Atom::new("trusts", vec![c("appOp"), c("edgeOp")])
            }
        );
        assert!(matches!(
            single("(-0.1,0.9)::trusts(cloudOp1, cloudOp2)."),
            Statement::Fact { label: Label::Pair(t, _), .. } if t == -0.1
        ));
    }

    #[test]
    fn unit_clause_with_variables_is_rule() {
        assert_eq!(
            single("trusts(X,X)."),
            Statement::Rule {
                head: Atom::new("trusts", vec![Term::Var("X".into()), Term::Var("X".into())]),
                body: None
            }
        );
    }

    #[test]
    fn missing_period() {
        let err = parse_program("f(a)").unwrap_err();
        assert_eq!((err.line, err.column), (1, 5));
        assert!(err.expected.contains(&"'.'".to_string()));
    }

    #[test]
    fn label_out_of_range() {
        assert!(parse_program("1.5::f(a).").is_err());
        assert!(parse_program("(0.5,1.2)::f(a).").is_err());
        assert!(parse_program("(-1.5,0.2)::f(a).").is_err());
    }

    #[test]
    fn annotated_nonground_rejected() {
        assert!(parse_program("0.5::f(X).").is_err());
    }

    #[test]
    fn precedence() {
        let Statement::Rule { body: Some(body), .. } = single("a :- b, c; d.") else {
            panic!()
        };
        let lit = |n: &str| BodyExpr::pos(Atom::new(n, vec![]));
        assert_eq!(
            body,
            BodyExpr::Disj(vec![BodyExpr::Conj(vec![lit("b"), lit("c")]), lit("d")])
        );
    }

    #[test]
    fn comments_skipped() {
        let p = parse_program("% infra\nnode(cloud, cloudOp). % owner\n\n% end").unwrap();
        assert_eq!(p.statements.len(), 1);
        assert_eq!(p.spans[0].line, 2);
    }

    #[test]
    fn query_statement() {
        assert_eq!(
            single("query(secFog(appOp,weatherApp,D))."),
            Statement::Query(Atom::new(
                "secFog",
                vec![c("appOp"), c("weatherApp"), Term::Var("D".into())]
            ))
        );
    }

    #[test]
    fn negation_only_on_atoms() {
        assert!(parse_program("a :- \\+(b; c).").is_err());
        let Statement::Rule { body: Some(body), .. } = single("t(A,B) :- \\+dir(A,B), i(A,B).") else {
            panic!()
        };
        assert!(!body.literals()[0].1);
    }

    #[test]
    fn radius_builtins() {
        let text = "trusts2(A,B,D) :- D > 0, trusts(A,C), NewD is D - 1, trusts2(C,B,NewD).";
        let Statement::Rule {
            body: Some(BodyExpr::Conj(parts)),
            ..
        } = single(text)
        else {
            panic!()
        };
        assert_eq!(
            parts[0],
            BodyExpr::Gt {
                var: "D".into(),
                bound: 0
            }
        );
        assert_eq!(
            parts[2],
            BodyExpr::IsMinus {
                target: "NewD".into(),
                source: "D".into(),
                delta: 1
            }
        );
    }

    #[test]
    fn lists_and_compounds() {
        let text = "deployment(_,[],[]).\ndeployment(OpA,[C|Cs],[d(C,N,OpN)|D]) :- node(N,OpN), securityRequirements(C,N), deployment(OpA,Cs,D).";
        let p = parse_program(text).unwrap();
        assert_eq!(p.statements.len(), 2);
        let app = single("app(smartbuilding, [iot_controller, data_storage, dashboard]).");
        assert!(
            matches!(app, Statement::Fact { atom, .. } if matches!(&atom.args[1], Term::List(v, None) if v.len() == 3))
        );
    }

    #[test]
    fn print_examples() {
        let p = Program::new(vec![Statement::Fact {
            label: Label::Certain,
            atom: Atom::new("f", vec![c("a")]),
        }]);
        assert_eq!(print_program(&p), "f(a).\n");
        let p = Program::new(vec![Statement::Fact {
            label: Label::Prob(0.5),
            atom: Atom::new("g", vec![c("b")]),
        }]);
        assert_eq!(print_program(&p), "0.5::g(b).\n");
    }

    #[test]
    fn disjunction_round_trip() {
        let text = "secureStorage(N) :- backup(N), (encrypted_storage(N); obfuscated_storage(N)).\n";
        let p = parse_program(text).unwrap();
        assert_eq!(print_program(&p), text);
        assert_eq!(parse_program(&print_program(&p)).unwrap(), p);
    }
}
