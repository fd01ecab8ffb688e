//! Interactions as terms: lifelines, projection, taggings and composition of
//! two partial views through gates.
//!
//! Atoms are ordinary constants: actions are named `l!m` / `l?m`, value
//! passings `vp(l1,m,l2)` and the empty interaction `0`. The operators are
//! `loop` (unary) and `seq`, `alt`, `par` (binary).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::antiunify::{
    canonical_form, GenOptions, GenResult, Generalizer, SearchObserver, SearchStats,
};
use crate::equational::{eq_modulo, normalize, Theory, EMPTY_INTERACTION};
use crate::term::{Position, Substitution, Symbol, SymbolKind, Term};

pub const SEQ: &str = "seq";
pub const ALT: &str = "alt";
pub const PAR: &str = "par";
pub const LOOP: &str = "loop";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InteractionError {
    #[error("lifelines shared by both views: {0:?}")]
    SharedLifelines(BTreeSet<String>),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("invalid tagging: {0}")]
    InvalidTagging(String),
    #[error("value passing from {0} to itself")]
    SelfLoop(String),
    #[error("no special-constant-preserving generalization ({} blocking pairs)", .0.len())]
    NoComposition(BTreeSet<(Term, Term)>),
    #[error("generalization timed out")]
    Timeout,
    #[error(transparent)]
    Engine(#[from] crate::antiunify::EngineError),
    #[error("composed interaction does not project back onto its views")]
    Unsound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    Emit,
    Receive,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Action {
    pub lifeline: String,
    pub direction: Direction,
    pub message: String,
}

impl Action {
    pub fn emit(lifeline: &str, message: &str) -> Action {
        Action {
            lifeline: lifeline.to_string(),
            direction: Direction::Emit,
            message: message.to_string(),
        }
    }

    pub fn receive(lifeline: &str, message: &str) -> Action {
        Action {
            lifeline: lifeline.to_string(),
            direction: Direction::Receive,
            message: message.to_string(),
        }
    }

    pub fn term(&self) -> Term {
        Term::constant(Symbol::constant(&self.to_string()))
    }

    /// `{self, other} = {l1!m, l2?m}` with `l1 ≠ l2`.
    pub fn compatible(&self, other: &Action) -> bool {
        self.direction != other.direction
            && self.message == other.message
            && self.lifeline != other.lifeline
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = match self.direction {
            Direction::Emit => '!',
            Direction::Receive => '?',
        };
        write!(f, "{}{}{}", self.lifeline, d, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ValuePassing {
    pub sender: String,
    pub message: String,
    pub receiver: String,
}

impl ValuePassing {
    pub fn new(
        sender: &str,
        message: &str,
        receiver: &str,
    ) -> Result<ValuePassing, InteractionError> {
        if sender == receiver {
            return Err(InteractionError::SelfLoop(sender.to_string()));
        }
        Ok(ValuePassing {
            sender: sender.to_string(),
            message: message.to_string(),
            receiver: receiver.to_string(),
        })
    }

    /// `vp(u, v)` for compatible actions, oriented from the emission.
    pub fn between(u: &Action, v: &Action) -> Option<ValuePassing> {
        if !u.compatible(v) {
            return None;
        }
        let (e, r) = if u.direction == Direction::Emit {
            (u, v)
        } else {
            (v, u)
        };
        ValuePassing::new(&e.lifeline, &e.message, &r.lifeline).ok()
    }

    pub fn emission(&self) -> Action {
        Action::emit(&self.sender, &self.message)
    }

    pub fn reception(&self) -> Action {
        Action::receive(&self.receiver, &self.message)
    }

    pub fn term(&self) -> Term {
        Term::constant(Symbol::constant(&self.to_string()))
    }
}

impl fmt::Display for ValuePassing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "vp({},{},{})", self.sender, self.message, self.receiver)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Atom {
    Empty,
    Action(Action),
    Vp(ValuePassing),
}

impl Atom {
    pub fn term(&self) -> Term {
        match self {
            Atom::Empty => empty(),
            Atom::Action(a) => a.term(),
            Atom::Vp(v) => v.term(),
        }
    }
}

fn is_ident(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_alphanumeric() || c == '_')
}

/// Decodes an ordinary constant of the interaction signature.
pub fn atom_of(sym: &Symbol) -> Option<Atom> {
    if sym.arity() != 0 || sym.kind() != SymbolKind::Constant {
        return None;
    }
    let name = sym.name();
    if name == EMPTY_INTERACTION {
        return Some(Atom::Empty);
    }
    if let Some(inner) = name.strip_prefix("vp(").and_then(|r| r.strip_suffix(')')) {
        let parts: Vec<&str> = inner.split(',').collect();
        if let [l1, m, l2] = parts[..] {
            if [l1, m, l2].iter().all(|p| is_ident(p)) {
                return ValuePassing::new(l1, m, l2).ok().map(Atom::Vp);
            }
        }
        return None;
    }
    let split = name.find(['!', '?'])?;
    let (l, rest) = name.split_at(split);
    let m = &rest[1..];
    if !is_ident(l) || !is_ident(m) {
        return None;
    }
    Some(Atom::Action(if rest.starts_with('!') {
        Action::emit(l, m)
    } else {
        Action::receive(l, m)
    }))
}

pub fn action_of(t: &Term) -> Option<Action> {
    match t.head().and_then(atom_of) {
        Some(Atom::Action(a)) if t.args().is_empty() => Some(a),
        _ => None,
    }
}

pub fn empty() -> Term {
    Term::constant(Symbol::constant(EMPTY_INTERACTION))
}

pub fn op(name: &str, a: Term, b: Term) -> Term {
    Term::app(Symbol::function(name, 2), vec![a, b])
}

pub fn seq(a: Term, b: Term) -> Term {
    op(SEQ, a, b)
}

pub fn alt(a: Term, b: Term) -> Term {
    op(ALT, a, b)
}

pub fn par(a: Term, b: Term) -> Term {
    op(PAR, a, b)
}

pub fn loop_(a: Term) -> Term {
    Term::app(Symbol::function(LOOP, 1), vec![a])
}

/// Whether `t` is built from interaction atoms and operators, optionally
/// also allowing gates and variables.
pub fn is_interaction(t: &Term, extended: bool) -> bool {
    match t {
        Term::Var(_) => extended,
        Term::App(f, args) => match (f.kind(), f.arity()) {
            (SymbolKind::Special, 0) => extended,
            (SymbolKind::Constant, 0) => atom_of(f).is_some(),
            (SymbolKind::Function, 1) if f.name() == LOOP => is_interaction(&args[0], extended),
            (SymbolKind::Function, 2) if [SEQ, ALT, PAR].contains(&f.name()) => {
                args.iter().all(|a| is_interaction(a, extended))
            }
            _ => false,
        },
    }
}

/// θ(i): lifelines occurring in the atoms of `t`.
pub fn lifelines_of(t: &Term) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    t.walk(&mut |s| {
        if let Some(atom) = s.head().and_then(atom_of) {
            match atom {
                Atom::Action(a) => {
                    out.insert(a.lifeline);
                }
                Atom::Vp(v) => {
                    out.insert(v.sender);
                    out.insert(v.receiver);
                }
                Atom::Empty => {}
            }
        }
    });
    out
}

/// π_L: keeps the parts of `t` local to the lifelines in `lifelines`.
pub fn project(t: &Term, lifelines: &BTreeSet<String>) -> Term {
    match t {
        Term::Var(_) => t.clone(),
        Term::App(f, args) if args.is_empty() => match atom_of(f) {
            Some(Atom::Action(a)) if !lifelines.contains(&a.lifeline) => empty(),
            Some(Atom::Vp(v)) => {
                match (
                    lifelines.contains(&v.sender),
                    lifelines.contains(&v.receiver),
                ) {
                    (true, true) => t.clone(),
                    (true, false) => v.emission().term(),
                    (false, true) => v.reception().term(),
                    (false, false) => empty(),
                }
            }
            _ => t.clone(),
        },
        Term::App(f, args) => Term::App(
            f.clone(),
            args.iter().map(|a| project(a, lifelines)).collect(),
        ),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TagEntry {
    pub left: Position,
    pub right: Position,
    pub gate: Symbol,
}

/// A set of `(position in i, position in j, gate)` triples.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Tagging {
    pub entries: BTreeSet<TagEntry>,
}

impl Tagging {
    pub fn new() -> Tagging {
        Tagging::default()
    }

    pub fn insert(&mut self, left: Position, right: Position, gate: Symbol) -> bool {
        self.entries.insert(TagEntry { left, right, gate })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn gates(&self) -> BTreeSet<Symbol> {
        self.entries.iter().map(|e| e.gate.clone()).collect()
    }
}

impl FromIterator<TagEntry> for Tagging {
    fn from_iter<I: IntoIterator<Item = TagEntry>>(iter: I) -> Self {
        Tagging {
            entries: iter.into_iter().collect(),
        }
    }
}

fn check_disjoint(i: &Term, j: &Term) -> Result<(), InteractionError> {
    let shared: BTreeSet<String> = lifelines_of(i)
        .intersection(&lifelines_of(j))
        .cloned()
        .collect();
    if shared.is_empty() {
        Ok(())
    } else {
        Err(InteractionError::SharedLifelines(shared))
    }
}

/// Explains why `γ` is not a tagging of `(i, j)`, if it is not.
fn tagging_problem(i: &Term, j: &Term, gamma: &Tagging) -> Option<String> {
    let mut by_gate: BTreeMap<&Symbol, (&Term, &Term)> = BTreeMap::new();
    for e in &gamma.entries {
        if !e.gate.is_special() {
            return Some(format!("{} is not a gate", e.gate));
        }
        let (Ok(u), Ok(v)) = (i.subterm_at(&e.left), j.subterm_at(&e.right)) else {
            return Some(format!(
                "invalid position in entry {} ; {} ; {}",
                e.left, e.right, e.gate
            ));
        };
        match (action_of(u), action_of(v)) {
            (Some(a), Some(b)) if a.compatible(&b) => {}
            _ => return Some(format!("{u} and {v} are not compatible actions")),
        }
        if let Some(&(u2, v2)) = by_gate.get(&e.gate) {
            if u2 != u || v2 != v {
                return Some(format!("gate {} tags different action pairs", e.gate));
            }
        }
        by_gate.insert(&e.gate, (u, v));
    }
    None
}

/// Conditions (1) and (2) of a tagging.
pub fn validate_tagging(i: &Term, j: &Term, gamma: &Tagging) -> Result<bool, InteractionError> {
    check_disjoint(i, j)?;
    Ok(tagging_problem(i, j, gamma).is_none())
}

/// Projects `k` onto both parts of a partition and tags every value passing
/// crossing it, with one gate per distinct crossing value passing.
pub fn derive_tagging(
    k: &Term,
    part1: &BTreeSet<String>,
    part2: &BTreeSet<String>,
) -> Result<(Term, Term, Tagging), InteractionError> {
    if let Some(l) = part1.intersection(part2).next() {
        return Err(InteractionError::InvalidPartition(format!(
            "{l} is in both parts"
        )));
    }
    if let Some(l) = lifelines_of(k)
        .iter()
        .find(|l| !part1.contains(*l) && !part2.contains(*l))
    {
        return Err(InteractionError::InvalidPartition(format!(
            "{l} is in neither part"
        )));
    }
    let i = project(k, part1);
    let j = project(k, part2);
    let mut gates: BTreeMap<ValuePassing, Symbol> = BTreeMap::new();
    let mut gamma = Tagging::new();
    for p in k.positions() {
        let Some(Atom::Vp(v)) = k.subterm_at(&p).ok().and_then(Term::head).and_then(atom_of) else {
            continue;
        };
        let crossing = (part1.contains(&v.sender) && part2.contains(&v.receiver))
            || (part2.contains(&v.sender) && part1.contains(&v.receiver));
        if !crossing {
            continue;
        }
        let next = gates.len();
        let gate = gates
            .entry(v)
            .or_insert_with(|| Symbol::special(&format!("g{next}")))
            .clone();
        gamma.insert(p.clone(), p, gate);
    }
    Ok((i, j, gamma))
}

/// λ: gates to the atoms they stand for.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GateMapping {
    pub bindings: BTreeMap<Symbol, Term>,
}

impl GateMapping {
    pub fn get(&self, gate: &Symbol) -> Option<&Term> {
        self.bindings.get(gate)
    }

    pub fn apply(&self, t: &Term) -> Term {
        match t {
            Term::Var(_) => t.clone(),
            Term::App(f, args) if args.is_empty() => {
                self.bindings.get(f).cloned().unwrap_or_else(|| t.clone())
            }
            Term::App(f, args) => {
                Term::App(f.clone(), args.iter().map(|a| self.apply(a)).collect())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Replaces each position tagged on `side` by its gate.
pub fn abstract_with_gates(i: &Term, side: Side, gamma: &Tagging) -> (Term, GateMapping) {
    let mut s = i.clone();
    let mut lambda = GateMapping::default();
    for e in &gamma.entries {
        let p = match side {
            Side::Left => &e.left,
            Side::Right => &e.right,
        };
        let Ok(action) = i.subterm_at(p) else {
            continue;
        };
        lambda.bindings.insert(e.gate.clone(), action.clone());
        s = s
            .replace_at(p, Term::constant(e.gate.clone()))
            .expect("position checked above");
    }
    (s, lambda)
}

#[derive(Debug, Clone)]
pub struct Composition {
    /// The composed interaction `rσ_rλ_k`.
    pub k: Term,
    /// The gated generalization it was built from.
    pub r: Term,
    pub sigma_s: Substitution,
    pub sigma_t: Substitution,
    pub lambda_k: GateMapping,
    pub stats: SearchStats,
}

/// Composes two views over disjoint lifelines through the gates of `gamma`.
pub fn compose(
    i: &Term,
    j: &Term,
    gamma: &Tagging,
    theory: &Theory,
    opts: &GenOptions,
) -> Result<Composition, InteractionError> {
    check_disjoint(i, j)?;
    if let Some(problem) = tagging_problem(i, j, gamma) {
        return Err(InteractionError::InvalidTagging(problem));
    }
    let (s, lambda_i) = abstract_with_gates(i, Side::Left, gamma);
    let (t, lambda_j) = abstract_with_gates(j, Side::Right, gamma);
    compose_gated(&s, &t, &lambda_i, &lambda_j, theory, opts).0
}

/// Composition from views already abstracted into gated terms `s` and `t`,
/// with `sλ_i` and `tλ_j` as the views. Search statistics are returned
/// whenever the generalization ran.
pub fn compose_gated(
    s: &Term,
    t: &Term,
    lambda_i: &GateMapping,
    lambda_j: &GateMapping,
    theory: &Theory,
    opts: &GenOptions,
) -> (Result<Composition, InteractionError>, Option<SearchStats>) {
    compose_gated_observed(s, t, lambda_i, lambda_j, theory, opts, None)
}

/// [`compose_gated`] with a hook on the generalization search.
pub fn compose_gated_observed(
    s: &Term,
    t: &Term,
    lambda_i: &GateMapping,
    lambda_j: &GateMapping,
    theory: &Theory,
    opts: &GenOptions,
    observer: Option<&mut dyn SearchObserver>,
) -> (Result<Composition, InteractionError>, Option<SearchStats>) {
    let opts = opts.clone().with_witness_filter(Some(projects_to_empty));
    let mut engine = Generalizer::new(theory, opts);
    if let Some(obs) = observer {
        engine = engine.observe(obs);
    }
    let outcome = match engine.run(s, t) {
        Ok(o) => o,
        Err(e) => return (Err(e.into()), None),
    };
    let stats = outcome.stats;
    let solutions = match outcome.result {
        GenResult::Solutions(sols) => sols,
        GenResult::Failure(blocking) => {
            return (Err(InteractionError::NoComposition(blocking)), Some(stats))
        }
        GenResult::Timeout => return (Err(InteractionError::Timeout), Some(stats)),
    };
    // largest, then smallest canonical form
    let chosen = solutions
        .into_iter()
        .map(|g| (canonical_form(&g.term, theory), g))
        .min_by(|(ca, a), (cb, b)| b.term.size().cmp(&a.term.size()).then_with(|| ca.cmp(cb)))
        .map(|(_, g)| g)
        .expect("non-empty solution set");

    let sigma_r: Substitution = chosen
        .left
        .iter()
        .map(|(x, ts)| {
            let tt = chosen.right.get(x).cloned().unwrap_or(Term::Var(x));
            (x, seq(ts.clone(), tt))
        })
        .collect();
    let mut lambda_k = GateMapping::default();
    for (gate, u) in &lambda_i.bindings {
        let vp = lambda_j
            .get(gate)
            .and_then(|v| match (action_of(u), action_of(v)) {
                (Some(a), Some(b)) => ValuePassing::between(&a, &b),
                _ => None,
            });
        let Some(vp) = vp else {
            let problem = format!("gate {gate} does not bind compatible actions");
            return (Err(InteractionError::InvalidTagging(problem)), Some(stats));
        };
        lambda_k.bindings.insert(gate.clone(), vp.term());
    }
    let k = lambda_k.apply(&chosen.term.apply(&sigma_r));
    let (i, j) = (lambda_i.apply(s), lambda_j.apply(t));
    if !check_composition_sound(&i, &j, &k, theory) {
        return (Err(InteractionError::Unsound), Some(stats));
    }
    let composition = Composition {
        k,
        r: chosen.term,
        sigma_s: chosen.left,
        sigma_t: chosen.right,
        lambda_k,
        stats: stats.clone(),
    };
    (Ok(composition), Some(stats))
}

/// Whether projecting `t` away from all of its lifelines leaves a term equal
/// to `0`, which holds exactly when no `alt` or `loop` occurs in it.
pub fn projects_to_empty(t: &Term) -> bool {
    let mut ok = true;
    t.walk(&mut |u| {
        if u.head()
            .is_some_and(|f| f.name() == ALT || f.name() == LOOP)
        {
            ok = false;
        }
    });
    ok
}

/// `π_θ(i)(k) =_E i` and `π_θ(j)(k) =_E j`.
pub fn check_composition_sound(i: &Term, j: &Term, k: &Term, theory: &Theory) -> bool {
    eq_modulo(&project(k, &lifelines_of(i)), i, theory)
        && eq_modulo(&project(k, &lifelines_of(j)), j, theory)
}

/// Normal form under the interaction theory.
pub fn normal_interaction(t: &Term) -> Term {
    normalize(t, &Theory::interactions()).into_term()
}
