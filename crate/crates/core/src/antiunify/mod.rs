//! Special-constant-preserving anti-unification.
//!
//! A run starts from the configuration `⟨{x₀ : s₀ ≜ t₀} | ∅ | Id | x₀⟩` and
//! applies transformation rules until the active set is empty. The
//! generalization is then `x₀θ`, witnessed by the left and right sides of the
//! solved store.

mod rules;
mod search;

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use crate::term::{Substitution, Term, VarGen, VarId};

pub use rules::{successors, Successors, WitnessFilter};
pub use search::canonical_form;
pub use search::{
    generalize, EngineError, GenOptions, Generalizer, Mode, Outcome, SearchObserver, SearchStats,
};

/// Which rule produced a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    Decompose,
    DecomposeComm,
    DecomposeAssoc,
    ExpandUnit,
    Solve,
    Recover,
    Fail,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Rule::Decompose => "Decompose",
            Rule::DecomposeComm => "Decompose-C",
            Rule::DecomposeAssoc => "Decompose-A",
            Rule::ExpandUnit => "Expand-Unit",
            Rule::Solve => "Solve",
            Rule::Recover => "Recover",
            Rule::Fail => "Fail",
        };
        f.write_str(s)
    }
}

/// An anti-unification triple `index : left ≜ right` over ground terms.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Aut {
    pub index: VarId,
    pub left: Term,
    pub right: Term,
    /// Set once a unit has been wrapped around the left (right) side.
    pub left_expanded: bool,
    pub right_expanded: bool,
}

impl Aut {
    pub fn new(index: VarId, left: Term, right: Term) -> Aut {
        Aut {
            index,
            left,
            right,
            left_expanded: false,
            right_expanded: false,
        }
    }

    pub fn size(&self) -> usize {
        self.left.size() + self.right.size()
    }

    pub fn expansions(&self) -> usize {
        self.left_expanded as usize + self.right_expanded as usize
    }

    pub fn pair(&self) -> (&Term, &Term) {
        (&self.left, &self.right)
    }

    pub fn sc_balanced(&self) -> bool {
        self.left.special_constants() == self.right.special_constants()
    }
}

impl fmt::Display for Aut {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} : {} ≜ {}", self.index, self.left, self.right)
    }
}

/// `⟨active | store | θ | root⟩`.
///
/// θ is kept in triangular form: each step binds a variable that no later
/// step binds again.
#[derive(Debug, Clone)]
pub struct Configuration {
    pub active: Vec<Aut>,
    pub store: Vec<Aut>,
    steps: Vec<(VarId, Term)>,
    pub root: VarId,
    vars: VarGen,
}

impl Configuration {
    pub fn bind(&mut self, x: VarId, t: Term) {
        self.steps.push((x, t));
    }

    pub fn fresh(&mut self) -> VarId {
        self.vars.fresh()
    }

    /// The accumulated substitution θ in composed form.
    pub fn theta(&self) -> Substitution {
        let mut theta = Substitution::new();
        for (x, t) in &self.steps {
            theta = theta.then(&Substitution::singleton(*x, t.clone()));
        }
        theta
    }

    /// `x₀θ`.
    pub fn generalization(&self) -> Term {
        let map: HashMap<VarId, &Term> = self.steps.iter().map(|(x, t)| (*x, t)).collect();
        fn resolve(t: &Term, map: &HashMap<VarId, &Term>) -> Term {
            match t {
                Term::Var(x) => match map.get(x) {
                    Some(b) => resolve(b, map),
                    None => t.clone(),
                },
                Term::App(f, args) => {
                    Term::App(f.clone(), args.iter().map(|a| resolve(a, map)).collect())
                }
            }
        }
        resolve(&Term::Var(self.root), &map)
    }

    fn all_auts(&self) -> impl Iterator<Item = &Aut> {
        self.active.iter().chain(self.store.iter())
    }

    pub fn left(&self) -> Substitution {
        self.all_auts().map(|a| (a.index, a.left.clone())).collect()
    }

    pub fn right(&self) -> Substitution {
        self.all_auts()
            .map(|a| (a.index, a.right.clone()))
            .collect()
    }

    pub fn indices(&self) -> BTreeSet<VarId> {
        self.all_auts().map(|a| a.index).collect()
    }

    pub fn is_solved(&self) -> bool {
        self.active.is_empty()
    }

    pub fn measure(&self) -> Measure {
        measure(self)
    }

    /// Number of unit expansions still visible on active triples.
    pub fn pending_expansions(&self) -> usize {
        self.active.iter().map(Aut::expansions).sum()
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |auts: &[Aut]| {
            auts.iter()
                .map(|a| a.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        };
        write!(
            f,
            "⟨{{{}}} | {{{}}} | {} | {}⟩",
            list(&self.active),
            list(&self.store),
            self.theta(),
            self.root
        )
    }
}

/// `⟨{x₀ : s₀ ≜ t₀} | ∅ | Id | x₀⟩`, with fresh variables numbered after `x₀`.
pub fn initial_config(s0: &Term, t0: &Term) -> Configuration {
    let mut vars = VarGen::starting_at(0);
    let root = vars.fresh();
    Configuration {
        active: vec![Aut::new(root, s0.clone(), t0.clone())],
        store: Vec::new(),
        steps: Vec::new(),
        root,
        vars,
    }
}

/// Multiset of active triple sizes, kept sorted in decreasing order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Measure(Vec<usize>);

impl Measure {
    pub fn from_sizes(mut sizes: Vec<usize>) -> Measure {
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        Measure(sizes)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// Dershowitz–Manna multiset ordering: `self` is obtained back from
    /// `other` by replacing elements with any number of smaller ones.
    pub fn greater_than(&self, other: &Measure) -> bool {
        if self == other {
            return false;
        }
        let mut counts: HashMap<usize, isize> = HashMap::new();
        for &m in &self.0 {
            *counts.entry(m).or_default() += 1;
        }
        for &n in &other.0 {
            *counts.entry(n).or_default() -= 1;
        }
        let max_removed = counts.iter().filter(|(_, &c)| c > 0).map(|(&k, _)| k).max();
        counts
            .iter()
            .filter(|(_, &c)| c < 0)
            .all(|(&added, _)| max_removed.is_some_and(|m| m > added))
    }
}

pub fn measure(c: &Configuration) -> Measure {
    Measure::from_sizes(c.active.iter().map(Aut::size).collect())
}

/// A generalization `term` of `(s₀, t₀)` with `term·left =_E s₀` and `term·right =_E t₀`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generalization {
    pub term: Term,
    pub left: Substitution,
    pub right: Substitution,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GenResult {
    Solutions(Vec<Generalization>),
    /// No special-constant-preserving generalization; the subterm pairs that block it.
    Failure(BTreeSet<(Term, Term)>),
    Timeout,
}

impl GenResult {
    pub fn solutions(&self) -> &[Generalization] {
        match self {
            GenResult::Solutions(s) => s,
            _ => &[],
        }
    }

    pub fn is_failure(&self) -> bool {
        matches!(self, GenResult::Failure(_))
    }
}
