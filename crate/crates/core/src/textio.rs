//! Text formats for terms, interactions, taggings and theories.
//!
//! Terms: `f(#a, g(u, ?x))` where `#` marks a gate and `?` a variable.
//! Interactions: `seq(dc!dia, alt(tc!wrn, 0), vp(tc, con, dc))`, operators
//! given more than two arguments fold to the right.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::equational::{Attributes, Theory};
use crate::interaction::{self, atom_of, Atom, ValuePassing, ALT, LOOP, PAR, SEQ};
use crate::interaction::{TagEntry, Tagging};
use crate::term::{Position, Signature, Symbol, SymbolKind, Term, TermError, VarId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SourceSpan {
    pub start: usize,
    pub end: usize,
}

impl SourceSpan {
    fn at(offset: usize) -> SourceSpan {
        SourceSpan {
            start: offset,
            end: offset,
        }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at offset {}: {message}", span.start)]
    Syntax { span: SourceSpan, message: String },
    #[error("symbol {name} used with {found} arguments but declared with {declared}")]
    ArityMismatch {
        name: String,
        declared: usize,
        found: usize,
        span: SourceSpan,
    },
    #[error("unknown symbol {name} at offset {}", span.start)]
    UnknownSymbol { name: String, span: SourceSpan },
    #[error("value passing from {lifeline} to itself at offset {}", span.start)]
    SelfLoop { lifeline: String, span: SourceSpan },
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("line {line}: duplicate entry")]
    DuplicateEntry { line: usize },
}

impl ParseError {
    fn syntax(offset: usize, message: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            span: SourceSpan::at(offset),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Var(String),
    Gate(String),
    LParen,
    RParen,
    Comma,
    End,
}

fn ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

struct Lexer<'s> {
    text: &'s str,
    pos: usize,
}

impl<'s> Lexer<'s> {
    fn skip_ws(&mut self) {
        let rest = &self.text[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn word(&mut self) -> String {
        let rest = &self.text[self.pos..];
        let n = rest.find(|c| !ident_char(c)).unwrap_or(rest.len());
        self.pos += n;
        rest[..n].to_string()
    }

    /// An identifier, possibly joined to a second one by `!` or `?` (actions).
    fn ident(&mut self) -> String {
        let mut w = self.word();
        let rest = &self.text[self.pos..];
        let mut chars = rest.chars();
        if let (Some(d @ ('!' | '?')), Some(c)) = (chars.next(), chars.next()) {
            if ident_char(c) {
                self.pos += 1;
                w.push(d);
                w.push_str(&self.word());
            }
        }
        w
    }

    fn next(&mut self) -> Result<(Tok, SourceSpan), ParseError> {
        self.skip_ws();
        let start = self.pos;
        let Some(c) = self.text[self.pos..].chars().next() else {
            return Ok((Tok::End, SourceSpan::at(start)));
        };
        let tok = match c {
            '(' => {
                self.pos += 1;
                Tok::LParen
            }
            ')' => {
                self.pos += 1;
                Tok::RParen
            }
            ',' => {
                self.pos += 1;
                Tok::Comma
            }
            '?' | '#' => {
                self.pos += 1;
                let w = self.word();
                if w.is_empty() {
                    return Err(ParseError::syntax(
                        self.pos,
                        format!("expected a name after '{c}'"),
                    ));
                }
                if c == '?' {
                    Tok::Var(w)
                } else {
                    Tok::Gate(w)
                }
            }
            c if ident_char(c) => Tok::Ident(self.ident()),
            c => {
                return Err(ParseError::syntax(
                    start,
                    format!("unexpected character '{c}'"),
                ))
            }
        };
        Ok((
            tok,
            SourceSpan {
                start,
                end: self.pos,
            },
        ))
    }
}

/// Parsed term with variables still named.
enum Ast {
    Var(String, SourceSpan),
    Gate(String, SourceSpan),
    App(String, Vec<Ast>, SourceSpan),
}

struct Parser<'s> {
    lexer: Lexer<'s>,
    peeked: Option<(Tok, SourceSpan)>,
}

impl<'s> Parser<'s> {
    fn new(text: &'s str) -> Parser<'s> {
        Parser {
            lexer: Lexer { text, pos: 0 },
            peeked: None,
        }
    }

    fn peek(&mut self) -> Result<&(Tok, SourceSpan), ParseError> {
        if self.peeked.is_none() {
            self.peeked = Some(self.lexer.next()?);
        }
        Ok(self.peeked.as_ref().expect("just filled"))
    }

    fn bump(&mut self) -> Result<(Tok, SourceSpan), ParseError> {
        self.peek()?;
        Ok(self.peeked.take().expect("just filled"))
    }

    fn term(&mut self) -> Result<Ast, ParseError> {
        let (tok, span) = self.bump()?;
        match tok {
            Tok::Var(v) => Ok(Ast::Var(v, span)),
            Tok::Gate(g) => Ok(Ast::Gate(g, span)),
            Tok::Ident(name) => {
                let mut args = Vec::new();
                if self.peek()?.0 == Tok::LParen {
                    self.bump()?;
                    loop {
                        args.push(self.term()?);
                        let (tok, s) = self.bump()?;
                        match tok {
                            Tok::Comma => continue,
                            Tok::RParen => break,
                            _ => return Err(ParseError::syntax(s.start, "expected ',' or ')'")),
                        }
                    }
                }
                Ok(Ast::App(name, args, span))
            }
            Tok::End => Err(ParseError::syntax(span.start, "unexpected end of input")),
            _ => Err(ParseError::syntax(span.start, "expected a term")),
        }
    }

    fn finish(&mut self) -> Result<(), ParseError> {
        let (tok, span) = self.bump()?;
        if tok == Tok::End {
            Ok(())
        } else {
            Err(ParseError::syntax(span.start, "trailing input"))
        }
    }
}

/// Variables `?xN` keep the id `N`; other names get ids after all of those.
fn var_ids(names: &[String]) -> HashMap<String, VarId> {
    let numbered = |n: &str| {
        n.strip_prefix('x')
            .and_then(|d| d.parse::<u32>().ok().filter(|i| i.to_string() == d))
    };
    let mut next = names
        .iter()
        .filter_map(|n| numbered(n))
        .map(|i| i + 1)
        .max()
        .unwrap_or(0);
    let mut ids = HashMap::new();
    for n in names {
        if ids.contains_key(n) {
            continue;
        }
        let id = match numbered(n) {
            Some(i) => VarId(i),
            None => {
                next += 1;
                VarId(next - 1)
            }
        };
        ids.insert(n.clone(), id);
    }
    ids
}

fn collect_vars(ast: &Ast, out: &mut Vec<String>) {
    match ast {
        Ast::Var(v, _) => out.push(v.clone()),
        Ast::Gate(..) => {}
        Ast::App(_, args, _) => args.iter().for_each(|a| collect_vars(a, out)),
    }
}

/// Symbols seen so far; in strict mode every symbol must already be declared.
#[derive(Debug, Clone, Default)]
pub struct ParseContext {
    pub signature: Signature,
    pub strict: bool,
}

impl ParseContext {
    pub fn new() -> ParseContext {
        ParseContext::default()
    }

    pub fn strict(signature: Signature) -> ParseContext {
        ParseContext {
            signature,
            strict: true,
        }
    }

    fn symbol(
        &mut self,
        name: &str,
        arity: usize,
        special: bool,
        span: SourceSpan,
    ) -> Result<Symbol, ParseError> {
        if let Some(s) = self.signature.lookup(name, special) {
            if s.arity() != arity {
                return Err(ParseError::ArityMismatch {
                    name: name.to_string(),
                    declared: s.arity(),
                    found: arity,
                    span,
                });
            }
            return Ok(s.clone());
        }
        if self.strict {
            return Err(ParseError::UnknownSymbol {
                name: name.to_string(),
                span,
            });
        }
        let sym = match (special, arity) {
            (true, _) => Symbol::special(name),
            (false, 0) => Symbol::constant(name),
            (false, n) => Symbol::function(name, n),
        };
        self.signature.declare(sym.clone()).map_err(|e| match e {
            TermError::ArityMismatch {
                name,
                declared,
                found,
            } => ParseError::ArityMismatch {
                name,
                declared,
                found,
                span,
            },
            other => ParseError::syntax(span.start, other.to_string()),
        })?;
        Ok(sym)
    }
}

fn build(
    ast: &Ast,
    vars: &HashMap<String, VarId>,
    ctx: &mut ParseContext,
) -> Result<Term, ParseError> {
    Ok(match ast {
        Ast::Var(v, _) => Term::Var(vars[v]),
        Ast::Gate(g, span) => Term::constant(ctx.symbol(g, 0, true, *span)?),
        Ast::App(name, args, span) => {
            let sym = ctx.symbol(name, args.len(), false, *span)?;
            let children = args
                .iter()
                .map(|a| build(a, vars, ctx))
                .collect::<Result<Vec<_>, _>>()?;
            Term::app(sym, children)
        }
    })
}

pub fn parse_term_with(text: &str, ctx: &mut ParseContext) -> Result<Term, ParseError> {
    let mut p = Parser::new(text);
    let ast = p.term()?;
    p.finish()?;
    let mut names = Vec::new();
    collect_vars(&ast, &mut names);
    build(&ast, &var_ids(&names), ctx)
}

/// Parses a term, declaring symbols on first use.
pub fn parse_term(text: &str) -> Result<Term, ParseError> {
    parse_term_with(text, &mut ParseContext::new())
}

fn interaction_ast(
    ast: &Ast,
    extended: bool,
    vars: &HashMap<String, VarId>,
) -> Result<Term, ParseError> {
    match ast {
        Ast::Var(_, span) if !extended => Err(ParseError::syntax(
            span.start,
            "variables are not allowed here",
        )),
        Ast::Var(v, _) => Ok(Term::Var(vars[v])),
        Ast::Gate(g, _) if extended => Ok(Term::constant(Symbol::special(g))),
        Ast::Gate(g, span) => Err(ParseError::syntax(
            span.start,
            format!("gate #{g} is not allowed here"),
        )),
        Ast::App(name, args, span) => {
            let sub = |a: &Ast| interaction_ast(a, extended, vars);
            match (name.as_str(), args.len()) {
                ("vp", 3) => {
                    let mut parts = Vec::new();
                    for a in args {
                        match a {
                            Ast::App(n, inner, _)
                                if inner.is_empty() && !n.contains(['!', '?']) =>
                            {
                                parts.push(n.as_str())
                            }
                            _ => {
                                return Err(ParseError::syntax(
                                    span.start,
                                    "vp expects three names",
                                ))
                            }
                        }
                    }
                    ValuePassing::new(parts[0], parts[1], parts[2])
                        .map(|v| v.term())
                        .map_err(|_| ParseError::SelfLoop {
                            lifeline: parts[0].to_string(),
                            span: *span,
                        })
                }
                (LOOP, 1) => Ok(interaction::loop_(sub(&args[0])?)),
                (op @ (SEQ | ALT | PAR), n) if n >= 2 => {
                    let mut items = args.iter().map(sub).collect::<Result<Vec<_>, _>>()?;
                    let mut acc = items.pop().expect("at least two");
                    while let Some(prev) = items.pop() {
                        acc = interaction::op(op, prev, acc);
                    }
                    Ok(acc)
                }
                (_, 0) => {
                    let sym = Symbol::constant(name);
                    match atom_of(&sym) {
                        Some(Atom::Vp(_)) | None => Err(ParseError::syntax(
                            span.start,
                            format!("{name} is not an action or 0"),
                        )),
                        Some(_) => Ok(Term::constant(sym)),
                    }
                }
                _ => Err(ParseError::syntax(
                    span.start,
                    format!("{name} with {} arguments is not an interaction", args.len()),
                )),
            }
        }
    }
}

/// Parses an interaction; `extended` also accepts gates and variables.
pub fn parse_interaction(text: &str, extended: bool) -> Result<Term, ParseError> {
    let mut p = Parser::new(text);
    let ast = p.term()?;
    p.finish()?;
    let mut names = Vec::new();
    collect_vars(&ast, &mut names);
    interaction_ast(&ast, extended, &var_ids(&names))
}

fn var_names(t: &Term) -> HashMap<VarId, usize> {
    let mut names = HashMap::new();
    for v in t.vars_in_order() {
        let n = names.len();
        names.entry(v).or_insert(n);
    }
    names
}

fn render_symbol(s: &Symbol, out: &mut String) {
    if s.kind() == SymbolKind::Special {
        out.push('#');
    }
    out.push_str(s.name());
}

/// Canonical text of a term; variables are renumbered `?x0, ?x1, …` in order
/// of first occurrence.
pub fn render_term(t: &Term) -> String {
    fn go(t: &Term, names: &HashMap<VarId, usize>, out: &mut String) {
        match t {
            Term::Var(v) => {
                out.push_str("?x");
                out.push_str(&names[v].to_string());
            }
            Term::App(f, args) => {
                render_symbol(f, out);
                if !args.is_empty() {
                    out.push('(');
                    for (k, a) in args.iter().enumerate() {
                        if k > 0 {
                            out.push_str(", ");
                        }
                        go(a, names, out);
                    }
                    out.push(')');
                }
            }
        }
    }
    let mut out = String::new();
    go(t, &var_names(t), &mut out);
    out
}

/// Canonical text of an interaction; right-nested operator spines are
/// written n-ary.
pub fn render_interaction(t: &Term) -> String {
    fn go(t: &Term, names: &HashMap<VarId, usize>, out: &mut String) {
        match t {
            Term::Var(v) => {
                out.push_str("?x");
                out.push_str(&names[v].to_string());
            }
            Term::App(f, args) if args.is_empty() => match atom_of(f) {
                Some(Atom::Vp(v)) => {
                    out.push_str(&format!("vp({}, {}, {})", v.sender, v.message, v.receiver))
                }
                _ => render_symbol(f, out),
            },
            Term::App(f, args) => {
                out.push_str(f.name());
                out.push('(');
                let mut items = vec![&args[0]];
                let mut rest = args.get(1);
                let spine = f.arity() == 2 && [SEQ, ALT, PAR].contains(&f.name());
                while let Some(r) = rest {
                    match r {
                        Term::App(g, inner) if spine && g == f => {
                            items.push(&inner[0]);
                            rest = inner.get(1);
                        }
                        _ => {
                            items.push(r);
                            rest = None;
                        }
                    }
                }
                for (k, a) in items.into_iter().enumerate() {
                    if k > 0 {
                        out.push_str(", ");
                    }
                    go(a, names, out);
                }
                out.push(')');
            }
        }
    }
    let mut out = String::new();
    go(t, &var_names(t), &mut out);
    out
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(n, l)| (n + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

pub fn parse_position(text: &str) -> Option<Position> {
    let text = text.trim();
    if text == "eps" {
        return Some(Position::root());
    }
    text.split('.')
        .map(|p| p.parse::<usize>().ok().filter(|&i| i > 0))
        .collect::<Option<Vec<_>>>()
        .map(Position)
}

/// One `POSL ; POSR ; #GATE` entry per line.
pub fn parse_tagging(text: &str) -> Result<Tagging, ParseError> {
    let mut tagging = Tagging::new();
    let mut pairs = BTreeSet::new();
    for (line, l) in content_lines(text) {
        let bad = |message: &str| ParseError::Line {
            line,
            message: message.to_string(),
        };
        let fields: Vec<&str> = l.split(';').map(str::trim).collect();
        let [pl, pr, gate] = fields[..] else {
            return Err(bad("expected POSITION ; POSITION ; #GATE"));
        };
        let left = parse_position(pl).ok_or_else(|| bad("invalid left position"))?;
        let right = parse_position(pr).ok_or_else(|| bad("invalid right position"))?;
        let name = gate
            .strip_prefix('#')
            .filter(|n| !n.is_empty() && n.chars().all(ident_char))
            .ok_or_else(|| bad("invalid gate"))?;
        if !pairs.insert((left.clone(), right.clone())) {
            return Err(ParseError::DuplicateEntry { line });
        }
        tagging.insert(left, right, Symbol::special(name));
    }
    Ok(tagging)
}

pub fn render_tagging(gamma: &Tagging) -> String {
    gamma
        .entries
        .iter()
        .map(|TagEntry { left, right, gate }| format!("{left} ; {right} ; #{}\n", gate.name()))
        .collect()
}

/// Theory files: `symbol : assoc comm unit=0` per line, `interactions` to
/// load the interaction theory, `equation : LHS = RHS` for a raw equation.
pub fn parse_theory(text: &str) -> Result<Theory, ParseError> {
    let mut theory = Theory::empty();
    for (line, l) in content_lines(text) {
        let bad = |message: String| ParseError::Line { line, message };
        if l == "interactions" {
            for (name, attrs) in Theory::interactions().attributes() {
                theory.set(name, attrs.clone());
            }
            continue;
        }
        let Some((name, rest)) = l.split_once(':') else {
            return Err(bad("expected SYMBOL : ATTRIBUTES".into()));
        };
        let name = name.trim();
        if name == "equation" {
            let Some((lhs, rhs)) = rest.split_once('=') else {
                return Err(bad("expected equation : LHS = RHS".into()));
            };
            let mut ctx = ParseContext::new();
            let lhs = parse_term_with(lhs, &mut ctx).map_err(|e| bad(e.to_string()))?;
            let rhs = parse_term_with(rhs, &mut ctx).map_err(|e| bad(e.to_string()))?;
            theory.add_raw_equation(lhs, rhs);
            continue;
        }
        if name.is_empty() || !name.chars().all(ident_char) {
            return Err(bad(format!("invalid symbol name '{name}'")));
        }
        let mut attrs = Attributes::default();
        for word in rest.split_whitespace() {
            match word {
                "assoc" => attrs.assoc = true,
                "comm" => attrs.comm = true,
                w => match w.strip_prefix("unit=") {
                    Some(u) if !u.is_empty() && u.chars().all(ident_char) => {
                        attrs.unit = Some(Symbol::constant(u))
                    }
                    _ => return Err(bad(format!("unknown attribute '{w}'"))),
                },
            }
        }
        theory.set(name, attrs);
    }
    Ok(theory)
}
