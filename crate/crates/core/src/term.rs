//! First-order terms over a signature with special constants (gates).

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TermError {
    #[error("position {position} is not a position of the term")]
    InvalidPosition { position: Position },
    #[error("symbol `{name}` used with arity {found}, declared with arity {declared}")]
    ArityMismatch {
        name: String,
        declared: usize,
        found: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SymbolKind {
    Function,
    Constant,
    /// A gate. Witnessing substitutions may never introduce one.
    Special,
    /// A variable frozen into a constant, used when matching against terms with variables.
    VariableMarker,
}

/// A function symbol. Ordering is by name, then arity, then kind.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol {
    name: Arc<str>,
    arity: usize,
    kind: SymbolKind,
}

impl Symbol {
    pub fn function(name: &str, arity: usize) -> Symbol {
        let kind = if arity == 0 {
            SymbolKind::Constant
        } else {
            SymbolKind::Function
        };
        Symbol {
            name: name.into(),
            arity,
            kind,
        }
    }

    pub fn constant(name: &str) -> Symbol {
        Symbol::function(name, 0)
    }

    pub fn special(name: &str) -> Symbol {
        Symbol {
            name: name.into(),
            arity: 0,
            kind: SymbolKind::Special,
        }
    }

    pub(crate) fn marker(var: VarId) -> Symbol {
        Symbol {
            name: format!("?x{}", var.0).into(),
            arity: 0,
            kind: SymbolKind::VariableMarker,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn kind(&self) -> SymbolKind {
        self.kind
    }

    pub fn is_special(&self) -> bool {
        self.kind == SymbolKind::Special
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_special() {
            write!(f, "#{}", self.name)
        } else {
            write!(f, "{}/{}", self.name, self.arity)
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_special() {
            write!(f, "#{}", self.name)
        } else {
            f.write_str(&self.name)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub u32);

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "?x{}", self.0)
    }
}

/// An immutable first-order term.
///
/// The derived order puts variables first (by id), then applications by head
/// symbol and lexicographically by children. It is the order used to sort
/// arguments of commutative symbols.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(VarId),
    App(Symbol, Arc<[Term]>),
}

impl Term {
    pub fn var(id: u32) -> Term {
        Term::Var(VarId(id))
    }

    /// Builds an application. Panics if the argument count does not match the arity.
    pub fn app(symbol: Symbol, args: Vec<Term>) -> Term {
        assert_eq!(
            symbol.arity(),
            args.len(),
            "arity mismatch for {}",
            symbol.name()
        );
        Term::App(symbol, args.into())
    }

    pub fn constant(symbol: Symbol) -> Term {
        Term::app(symbol, Vec::new())
    }

    pub fn head(&self) -> Option<&Symbol> {
        match self {
            Term::Var(_) => None,
            Term::App(f, _) => Some(f),
        }
    }

    pub fn args(&self) -> &[Term] {
        match self {
            Term::Var(_) => &[],
            Term::App(_, args) => args,
        }
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn size(&self) -> usize {
        match self {
            Term::Var(_) => 1,
            Term::App(_, args) => 1 + args.iter().map(Term::size).sum::<usize>(),
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::App(_, args) => args.iter().all(Term::is_ground),
        }
    }

    pub fn vars(&self) -> BTreeSet<VarId> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<VarId>) {
        match self {
            Term::Var(v) => {
                out.insert(*v);
            }
            Term::App(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    /// Variables in left-to-right first-occurrence order.
    pub fn vars_in_order(&self) -> Vec<VarId> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        self.walk(&mut |t| {
            if let Term::Var(v) = t {
                if seen.insert(*v) {
                    out.push(*v);
                }
            }
        });
        out
    }

    pub fn max_var(&self) -> Option<VarId> {
        self.vars().into_iter().next_back()
    }

    /// Pre-order traversal.
    pub fn walk(&self, visit: &mut impl FnMut(&Term)) {
        visit(self);
        for a in self.args() {
            a.walk(visit);
        }
    }

    pub fn positions(&self) -> Vec<Position> {
        let mut out = Vec::new();
        let mut path = Vec::new();
        self.collect_positions(&mut path, &mut out);
        out
    }

    fn collect_positions(&self, path: &mut Vec<usize>, out: &mut Vec<Position>) {
        out.push(Position(path.clone()));
        for (i, a) in self.args().iter().enumerate() {
            path.push(i + 1);
            a.collect_positions(path, out);
            path.pop();
        }
    }

    pub fn subterm_at(&self, p: &Position) -> Result<&Term, TermError> {
        let mut cur = self;
        for &i in &p.0 {
            cur = i
                .checked_sub(1)
                .and_then(|k| cur.args().get(k))
                .ok_or_else(|| TermError::InvalidPosition {
                    position: p.clone(),
                })?;
        }
        Ok(cur)
    }

    /// Replaces the subterm at `p` with `replacement`.
    pub fn replace_at(&self, p: &Position, replacement: Term) -> Result<Term, TermError> {
        self.replace_path(&p.0, replacement)
            .ok_or_else(|| TermError::InvalidPosition {
                position: p.clone(),
            })
    }

    fn replace_path(&self, path: &[usize], replacement: Term) -> Option<Term> {
        let Some((&first, rest)) = path.split_first() else {
            return Some(replacement);
        };
        let Term::App(f, args) = self else {
            return None;
        };
        let k = first.checked_sub(1)?;
        let child = args.get(k)?.replace_path(rest, replacement)?;
        let mut new_args = args.to_vec();
        new_args[k] = child;
        Some(Term::App(f.clone(), new_args.into()))
    }

    pub fn apply(&self, sigma: &Substitution) -> Term {
        if sigma.is_empty() {
            return self.clone();
        }
        match self {
            Term::Var(v) => sigma.get(*v).cloned().unwrap_or_else(|| self.clone()),
            Term::App(f, args) => {
                Term::App(f.clone(), args.iter().map(|a| a.apply(sigma)).collect())
            }
        }
    }

    pub fn special_constants(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        self.walk(&mut |t| {
            if let Term::App(f, _) = t {
                if f.is_special() {
                    out.insert(f.clone());
                }
            }
        });
        out
    }

    pub fn has_special_constants(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::App(f, args) => f.is_special() || args.iter().any(Term::has_special_constants),
        }
    }

    /// Renames variables to `0, 1, ...` in first-occurrence order.
    pub fn canonical_renaming(&self) -> Term {
        let map: Substitution = self
            .vars_in_order()
            .into_iter()
            .enumerate()
            .map(|(i, v)| (v, Term::var(i as u32)))
            .collect();
        self.apply(&map)
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::App(sym, args) => {
                write!(f, "{sym}")?;
                if !args.is_empty() {
                    f.write_str("(")?;
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            f.write_str(", ")?;
                        }
                        write!(f, "{a}")?;
                    }
                    f.write_str(")")?;
                }
                Ok(())
            }
        }
    }
}

/// A position in a term: a list of 1-based child indices. The empty list is the root.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Position(pub Vec<usize>);

impl Position {
    pub fn root() -> Position {
        Position(Vec::new())
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, i: usize) -> Position {
        let mut p = self.0.clone();
        p.push(i);
        Position(p)
    }

    pub fn is_strict_prefix_of(&self, other: &Position) -> bool {
        self.0.len() < other.0.len() && other.0.starts_with(&self.0)
    }
}

impl From<Vec<usize>> for Position {
    fn from(v: Vec<usize>) -> Self {
        Position(v)
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("eps");
        }
        let parts: Vec<String> = self.0.iter().map(|i| i.to_string()).collect();
        f.write_str(&parts.join("."))
    }
}

impl fmt::Debug for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{self}]")
    }
}

/// A finite substitution. Identity bindings are never stored.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct Substitution {
    bindings: BTreeMap<VarId, Term>,
}

impl Substitution {
    pub fn new() -> Substitution {
        Substitution::default()
    }

    pub fn singleton(x: VarId, t: Term) -> Substitution {
        let mut s = Substitution::new();
        s.insert(x, t);
        s
    }

    /// Adds `x ↦ t`, dropping it if `t` is `x` itself.
    pub fn insert(&mut self, x: VarId, t: Term) {
        if t == Term::Var(x) {
            self.bindings.remove(&x);
        } else {
            self.bindings.insert(x, t);
        }
    }

    pub fn get(&self, x: VarId) -> Option<&Term> {
        self.bindings.get(&x)
    }

    pub fn remove(&mut self, x: VarId) -> Option<Term> {
        self.bindings.remove(&x)
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn domain(&self) -> BTreeSet<VarId> {
        self.bindings.keys().copied().collect()
    }

    pub fn range(&self) -> impl Iterator<Item = &Term> {
        self.bindings.values()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, &Term)> {
        self.bindings.iter().map(|(k, v)| (*k, v))
    }

    pub fn var_range(&self) -> BTreeSet<VarId> {
        self.range().flat_map(|t| t.vars()).collect()
    }

    /// SC(Ran(σ)).
    pub fn range_special_constants(&self) -> BTreeSet<Symbol> {
        self.range().flat_map(|t| t.special_constants()).collect()
    }

    /// `self` followed by `other`: `t.apply(&s.then(&o)) == t.apply(&s).apply(&o)`.
    pub fn then(&self, other: &Substitution) -> Substitution {
        let mut out = Substitution::new();
        for (x, t) in &self.bindings {
            out.insert(*x, t.apply(other));
        }
        for (x, t) in &other.bindings {
            if !self.bindings.contains_key(x) {
                out.insert(*x, t.clone());
            }
        }
        out
    }

    pub fn restrict(&self, vars: &BTreeSet<VarId>) -> Substitution {
        Substitution {
            bindings: self
                .bindings
                .iter()
                .filter(|(k, _)| vars.contains(k))
                .map(|(k, v)| (*k, v.clone()))
                .collect(),
        }
    }
}

impl FromIterator<(VarId, Term)> for Substitution {
    fn from_iter<I: IntoIterator<Item = (VarId, Term)>>(iter: I) -> Self {
        let mut s = Substitution::new();
        for (x, t) in iter {
            s.insert(x, t);
        }
        s
    }
}

impl fmt::Debug for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (x, t)) in self.bindings.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{x} ↦ {t}")?;
        }
        f.write_str("}")
    }
}

/// Conflict positions of two ground terms, split by whether the diverging
/// subterms contain special constants.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConflictReport {
    pub solvable: BTreeSet<Position>,
    pub failure: BTreeSet<Position>,
}

pub fn conflict_positions(s: &Term, t: &Term) -> ConflictReport {
    let mut report = ConflictReport::default();
    let mut path = Vec::new();
    collect_conflicts(s, t, &mut path, &mut report);
    report
}

fn collect_conflicts(s: &Term, t: &Term, path: &mut Vec<usize>, out: &mut ConflictReport) {
    if s.head() != t.head() || (s.is_var() || t.is_var()) && s != t {
        let p = Position(path.clone());
        if s.has_special_constants() || t.has_special_constants() {
            out.failure.insert(p);
        } else {
            out.solvable.insert(p);
        }
        return;
    }
    for (i, (a, b)) in s.args().iter().zip(t.args()).enumerate() {
        path.push(i + 1);
        collect_conflicts(a, b, path, out);
        path.pop();
    }
}

/// True iff some bijective variable renaming maps `a` onto `b`.
pub fn renaming_equivalent(a: &Term, b: &Term) -> bool {
    fn go(
        a: &Term,
        b: &Term,
        fwd: &mut HashMap<VarId, VarId>,
        bwd: &mut HashMap<VarId, VarId>,
    ) -> bool {
        match (a, b) {
            (Term::Var(x), Term::Var(y)) => {
                let f = *fwd.entry(*x).or_insert(*y);
                let g = *bwd.entry(*y).or_insert(*x);
                f == *y && g == *x
            }
            (Term::App(f, xs), Term::App(g, ys)) => {
                f == g && xs.iter().zip(ys.iter()).all(|(x, y)| go(x, y, fwd, bwd))
            }
            _ => false,
        }
    }
    go(a, b, &mut HashMap::new(), &mut HashMap::new())
}

/// Declared symbols. Terms are checked against it when parsed.
#[derive(Debug, Clone, Default)]
pub struct Signature {
    symbols: BTreeMap<String, Symbol>,
}

impl Signature {
    pub fn new() -> Signature {
        Signature::default()
    }

    pub fn declare(&mut self, symbol: Symbol) -> Result<(), TermError> {
        let key = key_of(symbol.name(), symbol.kind());
        if let Some(existing) = self.symbols.get(&key) {
            if existing.arity() != symbol.arity() {
                return Err(TermError::ArityMismatch {
                    name: symbol.name().to_string(),
                    declared: existing.arity(),
                    found: symbol.arity(),
                });
            }
            return Ok(());
        }
        self.symbols.insert(key, symbol);
        Ok(())
    }

    pub fn lookup(&self, name: &str, special: bool) -> Option<&Symbol> {
        let kind = if special {
            SymbolKind::Special
        } else {
            SymbolKind::Function
        };
        self.symbols.get(&key_of(name, kind))
    }

    pub fn symbols(&self) -> impl Iterator<Item = &Symbol> {
        self.symbols.values()
    }
}

fn key_of(name: &str, kind: SymbolKind) -> String {
    match kind {
        SymbolKind::Special => format!("#{name}"),
        SymbolKind::VariableMarker => format!("?{name}"),
        _ => name.to_string(),
    }
}

/// A monotone source of fresh variable ids.
#[derive(Debug, Clone, Copy)]
pub struct VarGen {
    next: u32,
}

impl VarGen {
    pub fn starting_at(next: u32) -> VarGen {
        VarGen { next }
    }

    /// A generator whose ids avoid every variable of the given terms.
    pub fn avoiding<'a>(terms: impl IntoIterator<Item = &'a Term>) -> VarGen {
        let next = terms
            .into_iter()
            .filter_map(|t| t.max_var())
            .map(|v| v.0 + 1)
            .max()
            .unwrap_or(0);
        VarGen { next }
    }

    pub fn fresh(&mut self) -> VarId {
        let v = VarId(self.next);
        self.next += 1;
        v
    }

    pub fn peek(&self) -> u32 {
        self.next
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub fn c(name: &str) -> Term {
        Term::constant(Symbol::constant(name))
    }

    pub fn g(name: &str) -> Term {
        Term::constant(Symbol::special(name))
    }

    pub fn f(name: &str, args: Vec<Term>) -> Term {
        Term::app(Symbol::function(name, args.len()), args)
    }

    pub fn x(i: u32) -> Term {
        Term::var(i)
    }

    fn fig1_t() -> Term {
        // seq(seq(v, #a), alt(seq(#b, #c), 0))
        f(
            "seq",
            vec![
                f("seq", vec![c("v"), g("a")]),
                f("alt", vec![f("seq", vec![g("b"), g("c")]), c("0")]),
            ],
        )
    }

    #[test]
    fn subterm_at_reads_fig1_gate() {
        let t = fig1_t();
        assert_eq!(t.subterm_at(&vec![1, 2].into()).unwrap(), &g("a"));
        assert_eq!(t.subterm_at(&Position::root()).unwrap(), &t);
        assert!(matches!(
            g("a").subterm_at(&vec![1].into()),
            Err(TermError::InvalidPosition { .. })
        ));
        assert!(t.subterm_at(&vec![0].into()).is_err());
        assert!(t.subterm_at(&vec![3].into()).is_err());
    }

    #[test]
    fn substitution_application() {
        let step1 = Substitution::singleton(VarId(0), f("f", vec![x(1), x(2)]));
        let step2 = Substitution::singleton(VarId(1), g("a"));
        assert_eq!(x(0).apply(&step1).apply(&step2), f("f", vec![g("a"), x(2)]));
        assert_eq!(x(0).apply(&step1.then(&step2)), f("f", vec![g("a"), x(2)]));

        let t = fig1_t();
        assert_eq!(t.apply(&Substitution::new()), t);

        let r = f(
            "seq",
            vec![
                f("seq", vec![x(0), g("a")]),
                f("alt", vec![f("seq", vec![g("b"), g("c")]), x(1)]),
            ],
        );
        let sigma_s: Substitution = [(VarId(0), c("0")), (VarId(1), c("u"))]
            .into_iter()
            .collect();
        assert_eq!(
            r.apply(&sigma_s),
            f(
                "seq",
                vec![
                    f("seq", vec![c("0"), g("a")]),
                    f("alt", vec![f("seq", vec![g("b"), g("c")]), c("u")]),
                ],
            )
        );
    }

    #[test]
    fn identity_bindings_are_dropped() {
        let mut s = Substitution::new();
        s.insert(VarId(3), x(3));
        assert!(s.is_empty());
        s.insert(VarId(3), x(4));
        s.insert(VarId(3), x(3));
        assert!(s.is_empty());
    }

    #[test]
    fn special_constants_collects_gates() {
        let t = f("f", vec![g("a"), f("g", vec![g("b"), c("u")])]);
        let names: Vec<_> = t
            .special_constants()
            .iter()
            .map(|s| s.name().to_string())
            .collect();
        assert_eq!(names, vec!["a", "b"]);
        assert!(f("g", vec![c("u"), c("v")]).special_constants().is_empty());
        let r = f(
            "seq",
            vec![
                f("seq", vec![x(0), g("a")]),
                f("alt", vec![f("seq", vec![g("b"), g("c")]), x(1)]),
            ],
        );
        assert_eq!(r.special_constants().len(), 3);
    }

    #[test]
    fn conflict_positions_examples() {
        let s = f("f", vec![g("a"), f("g", vec![g("b"), c("u")])]);
        let t = f("f", vec![g("a"), f("g", vec![c("v"), g("b")])]);
        let rep = conflict_positions(&s, &t);
        assert!(rep.solvable.is_empty());
        assert_eq!(
            rep.failure,
            [Position(vec![2, 1]), Position(vec![2, 2])]
                .into_iter()
                .collect()
        );

        let s = f("f", vec![g("a"), f("g", vec![c("u"), c("u")])]);
        let t = f("f", vec![g("a"), f("g", vec![c("v"), c("v")])]);
        let rep = conflict_positions(&s, &t);
        assert!(rep.failure.is_empty());
        assert_eq!(
            rep.solvable,
            [Position(vec![2, 1]), Position(vec![2, 2])]
                .into_iter()
                .collect()
        );

        assert_eq!(conflict_positions(&s, &s), ConflictReport::default());
    }

    #[test]
    fn renaming_equivalence() {
        let a = f("f", vec![x(0), f("g", vec![x(1), x(1)])]);
        let b = f("f", vec![x(5), f("g", vec![x(7), x(7)])]);
        assert!(renaming_equivalent(&a, &b));
        assert!(!renaming_equivalent(
            &f("f", vec![x(0), x(0)]),
            &f("f", vec![x(0), x(1)])
        ));
        assert!(!renaming_equivalent(
            &f("f", vec![x(0), x(1)]),
            &f("f", vec![x(0), x(0)])
        ));
        assert!(renaming_equivalent(
            &f("f", vec![g("a"), f("g", vec![x(3), x(3)])]),
            &f("f", vec![g("a"), f("g", vec![x(0), x(0)])])
        ));
    }

    #[test]
    fn size_and_positions() {
        let t = fig1_t();
        assert_eq!(t.size(), 9);
        assert_eq!(t.positions().len(), t.size());
        for p in t.positions() {
            let sub = t.subterm_at(&p).unwrap();
            assert!(sub.size() <= t.size());
            assert_eq!(sub.size() == t.size(), p.is_root());
        }
    }

    #[test]
    fn strict_prefix() {
        let p = Position(vec![1]);
        let q = Position(vec![1, 2]);
        assert!(p.is_strict_prefix_of(&q));
        assert!(!q.is_strict_prefix_of(&p));
        assert!(!p.is_strict_prefix_of(&p));
        assert!(Position::root().is_strict_prefix_of(&p));
    }

    #[test]
    fn signature_rejects_arity_clash() {
        let mut sig = Signature::new();
        sig.declare(Symbol::function("f", 2)).unwrap();
        assert!(sig.declare(Symbol::function("f", 2)).is_ok());
        assert!(matches!(
            sig.declare(Symbol::function("f", 1)),
            Err(TermError::ArityMismatch { .. })
        ));
        sig.declare(Symbol::special("f")).unwrap();
        assert!(sig.lookup("f", true).unwrap().is_special());
    }
}
