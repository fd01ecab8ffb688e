//! Equational theories given as per-symbol attributes (associativity,
//! commutativity, unit element), decided through canonical forms.

mod matching;

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Deref;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::term::{Position, Symbol, SymbolKind, Term};

pub use matching::{match_modulo, subsumes, MatchError, Matcher, DEFAULT_NODE_BUDGET};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Attributes {
    pub assoc: bool,
    pub comm: bool,
    pub unit: Option<Symbol>,
}

impl Attributes {
    pub fn is_empty(&self) -> bool {
        !self.assoc && !self.comm && self.unit.is_none()
    }
}

/// A set of A/C/U axioms, keyed by binary symbol name, plus optional raw
/// equations that are only used for validation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Theory {
    attributes: BTreeMap<String, Attributes>,
    raw_equations: Vec<(Term, Term)>,
}

/// Name of the unit of the interaction operators.
pub const EMPTY_INTERACTION: &str = "0";

impl Theory {
    pub fn empty() -> Theory {
        Theory::default()
    }

    /// Associative `seq`, `alt` and `par`; commutative `alt` and `par`;
    /// `0` is the unit of `seq` and `par`.
    pub fn interactions() -> Theory {
        let unit = Some(Symbol::constant(EMPTY_INTERACTION));
        let mut th = Theory::empty();
        th.set(
            "seq",
            Attributes {
                assoc: true,
                comm: false,
                unit: unit.clone(),
            },
        );
        th.set(
            "alt",
            Attributes {
                assoc: true,
                comm: true,
                unit: None,
            },
        );
        th.set(
            "par",
            Attributes {
                assoc: true,
                comm: true,
                unit,
            },
        );
        th
    }

    pub fn set(&mut self, name: &str, attrs: Attributes) {
        if attrs.is_empty() {
            self.attributes.remove(name);
        } else {
            self.attributes.insert(name.to_string(), attrs);
        }
    }

    pub fn add_raw_equation(&mut self, lhs: Term, rhs: Term) {
        self.raw_equations.push((lhs, rhs));
    }

    pub fn raw_equations(&self) -> &[(Term, Term)] {
        &self.raw_equations
    }

    pub fn attributes(&self) -> impl Iterator<Item = (&str, &Attributes)> {
        self.attributes.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    /// Attributes of `f`, if it is a binary symbol with any.
    pub fn attrs(&self, f: &Symbol) -> Option<&Attributes> {
        if f.arity() != 2 || f.kind() != SymbolKind::Function {
            return None;
        }
        self.attributes.get(f.name())
    }

    pub fn is_assoc(&self, f: &Symbol) -> bool {
        self.attrs(f).is_some_and(|a| a.assoc)
    }

    pub fn is_comm(&self, f: &Symbol) -> bool {
        self.attrs(f).is_some_and(|a| a.comm)
    }

    pub fn unit_of(&self, f: &Symbol) -> Option<Term> {
        self.attrs(f)
            .and_then(|a| a.unit.clone())
            .map(Term::constant)
    }

    /// Argument list of `t` seen as an `f`-spine, with units of `f` dropped.
    /// A term not headed by `f` is a one-element list, the unit an empty one.
    pub fn flatten(&self, f: &Symbol, t: &Term) -> Vec<Term> {
        let unit = self.unit_of(f);
        let mut out = Vec::new();
        self.flatten_into(f, t, unit.as_ref(), &mut out);
        out
    }

    fn flatten_into(&self, f: &Symbol, t: &Term, unit: Option<&Term>, out: &mut Vec<Term>) {
        match t {
            Term::App(g, args) if g == f && self.is_assoc(f) => {
                for a in args.iter() {
                    self.flatten_into(f, a, unit, out);
                }
            }
            _ if Some(t) == unit => {}
            _ => out.push(t.clone()),
        }
    }

    /// Rebuilds an `f`-spine from normalized elements. The empty list is the
    /// unit (panics if `f` has none).
    pub fn build(&self, f: &Symbol, mut elems: Vec<Term>) -> Term {
        match elems.len() {
            0 => self
                .unit_of(f)
                .unwrap_or_else(|| panic!("empty argument list for {} without unit", f.name())),
            1 => elems.pop().unwrap(),
            _ => {
                if self.is_comm(f) {
                    elems.sort();
                }
                let mut it = elems.into_iter().rev();
                let mut acc = it.next().unwrap();
                for e in it {
                    acc = Term::App(f.clone(), vec![e, acc].into());
                }
                acc
            }
        }
    }

    pub(crate) fn normal_term(&self, t: &Term) -> Term {
        if self.is_empty() {
            return t.clone();
        }
        match t {
            Term::Var(_) => t.clone(),
            Term::App(f, args) => {
                let args: Vec<Term> = args.iter().map(|a| self.normal_term(a)).collect();
                let Some(attrs) = self.attrs(f) else {
                    return Term::App(f.clone(), args.into());
                };
                let unit = attrs.unit.clone().map(Term::constant);
                if attrs.assoc {
                    let mut elems = Vec::with_capacity(args.len());
                    for a in &args {
                        self.flatten_into(f, a, unit.as_ref(), &mut elems);
                    }
                    return self.build(f, elems);
                }
                let mut elems: Vec<Term> = args
                    .into_iter()
                    .filter(|a| Some(a) != unit.as_ref())
                    .collect();
                match (elems.len(), unit) {
                    (0, Some(u)) => u,
                    (1, Some(_)) => elems.pop().unwrap(),
                    _ => {
                        if attrs.comm {
                            elems.sort();
                        }
                        Term::App(f.clone(), elems.into())
                    }
                }
            }
        }
    }
}

impl fmt::Display for Theory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, a) in &self.attributes {
            write!(f, "{name} :")?;
            if a.assoc {
                f.write_str(" assoc")?;
            }
            if a.comm {
                f.write_str(" comm")?;
            }
            if let Some(u) = &a.unit {
                write!(f, " unit={}", u.name())?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// A term in canonical form for some theory: associative spines flattened and
/// right-nested, units removed, commutative arguments sorted.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NormalTerm(Term);

impl NormalTerm {
    pub fn into_term(self) -> Term {
        self.0
    }
}

impl Deref for NormalTerm {
    type Target = Term;

    fn deref(&self) -> &Term {
        &self.0
    }
}

impl fmt::Display for NormalTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

pub fn normalize(t: &Term, theory: &Theory) -> NormalTerm {
    NormalTerm(theory.normal_term(t))
}

pub fn eq_modulo(a: &Term, b: &Term, theory: &Theory) -> bool {
    a == b || theory.normal_term(a) == theory.normal_term(b)
}

/// Checks that every axiom `l ≈ r` of the theory satisfies
/// `SC(l) = SC(r)` and `Var(l) = Var(r)`.
///
/// This is sufficient for the theory to never equate terms with different
/// special constants. It rejects some theories that are safe in practice.
pub fn validate_sc_preserving(theory: &Theory) -> bool {
    let attrs_ok = theory.attributes.values().all(|a| match &a.unit {
        None => true,
        // f(u, x) ≈ x keeps SC and Var only for an ordinary constant u
        Some(u) => u.arity() == 0 && u.kind() == SymbolKind::Constant,
    });
    attrs_ok
        && theory
            .raw_equations
            .iter()
            .all(|(l, r)| l.special_constants() == r.special_constants() && l.vars() == r.vars())
}

/// Applies `count` argument swaps at uniformly chosen commutative positions.
pub fn mutate_commutative(t: &Term, theory: &Theory, count: usize, seed: u64) -> Term {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cur = t.clone();
    for _ in 0..count {
        let eligible: Vec<Position> = cur
            .positions()
            .into_iter()
            .filter(|p| {
                cur.subterm_at(p)
                    .ok()
                    .and_then(Term::head)
                    .is_some_and(|f| theory.is_comm(f))
            })
            .collect();
        if eligible.is_empty() {
            break;
        }
        let p = &eligible[rng.gen_range(0..eligible.len())];
        let sub = cur.subterm_at(p).expect("eligible position");
        let Term::App(f, args) = sub else {
            unreachable!()
        };
        let swapped = Term::App(f.clone(), vec![args[1].clone(), args[0].clone()].into());
        cur = cur.replace_at(p, swapped).expect("eligible position");
    }
    cur
}
