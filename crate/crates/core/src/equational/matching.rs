//! Matching modulo A/C/U attributes over normalized terms.

use std::collections::{HashMap, HashSet};
use std::rc::Rc;

use thiserror::Error;

use super::Theory;
use crate::term::{Substitution, Symbol, Term, VarId};

pub const DEFAULT_NODE_BUDGET: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatchError {
    /// The search budget ran out; the answer is unknown.
    #[error("matching node budget of {0} exhausted")]
    ResourceLimit(usize),
}

type Matches = Rc<Vec<Substitution>>;

/// A matcher with a run-local memo table and node budget.
pub struct Matcher<'a> {
    theory: &'a Theory,
    budget: usize,
    used: usize,
    memo: HashMap<(Term, Term), Matches>,
}

impl<'a> Matcher<'a> {
    pub fn new(theory: &'a Theory, budget: usize) -> Matcher<'a> {
        Matcher {
            theory,
            budget,
            used: 0,
            memo: HashMap::new(),
        }
    }

    pub fn nodes_used(&self) -> usize {
        self.used
    }

    /// All matchers of `pattern` onto `target` (both arbitrary terms; they
    /// are normalized first). Variables of `target` are treated as constants.
    pub fn matches(
        &mut self,
        pattern: &Term,
        target: &Term,
    ) -> Result<Vec<Substitution>, MatchError> {
        self.used = 0;
        let p = self.theory.normal_term(pattern);
        let t = self.theory.normal_term(target);
        Ok(self.match_normal(&p, &t)?.as_ref().clone())
    }

    fn tick(&mut self) -> Result<(), MatchError> {
        self.used += 1;
        if self.used > self.budget {
            Err(MatchError::ResourceLimit(self.budget))
        } else {
            Ok(())
        }
    }

    fn match_normal(&mut self, p: &Term, t: &Term) -> Result<Matches, MatchError> {
        self.tick()?;
        match p {
            Term::Var(x) => return Ok(Rc::new(vec![Substitution::singleton(*x, t.clone())])),
            _ if p.is_ground() => {
                return Ok(Rc::new(if p == t {
                    vec![Substitution::new()]
                } else {
                    Vec::new()
                }))
            }
            _ => {}
        }
        let key = (p.clone(), t.clone());
        if let Some(hit) = self.memo.get(&key) {
            return Ok(hit.clone());
        }
        let result = Rc::new(self.match_app(p, t)?);
        self.memo.insert(key, result.clone());
        Ok(result)
    }

    fn match_app(&mut self, p: &Term, t: &Term) -> Result<Vec<Substitution>, MatchError> {
        let Term::App(f, pargs) = p else {
            unreachable!("variables handled by caller")
        };
        let attrs = self.theory.attrs(f).cloned();
        let mut out = Vec::new();
        match attrs {
            Some(a) if a.assoc => {
                let ps = self.theory.flatten(f, p);
                let ts = self.theory.flatten(f, t);
                if a.unit.is_none() && ts.len() < ps.len() {
                    return Ok(out);
                }
                let start = vec![Substitution::new()];
                if a.comm {
                    let mut order: Vec<Term> = ps;
                    // pin down single-element patterns before flexible ones
                    order.sort_by_key(|e| self.collapsible(e));
                    self.match_multiset(f, &order, ts, start, &mut out)?;
                } else {
                    self.match_sequence(f, &ps, &ts, start, &mut out)?;
                }
            }
            attrs => {
                if t.head() == Some(f) {
                    let targs = t.args();
                    self.match_args(pargs, targs, &mut out)?;
                    if attrs.as_ref().is_some_and(|a| a.comm) {
                        let swapped = [targs[1].clone(), targs[0].clone()];
                        self.match_args(pargs, &swapped, &mut out)?;
                    }
                }
                if let Some(u) = attrs.and_then(|a| a.unit).map(Term::constant) {
                    // f(p1, p2) collapses onto t when one side becomes the unit
                    self.match_args(pargs, &[u.clone(), t.clone()], &mut out)?;
                    self.match_args(pargs, &[t.clone(), u], &mut out)?;
                }
            }
        }
        Ok(dedup(out))
    }

    fn match_args(
        &mut self,
        ps: &[Term],
        ts: &[Term],
        out: &mut Vec<Substitution>,
    ) -> Result<(), MatchError> {
        let mut acc = vec![Substitution::new()];
        for (p, t) in ps.iter().zip(ts) {
            let ms = self.match_normal(p, t)?;
            acc = merge_all(&acc, &ms);
            if acc.is_empty() {
                return Ok(());
            }
        }
        out.extend(acc);
        Ok(())
    }

    /// Whether an instance of `e` can stand for zero or several spine
    /// elements: variables, and terms headed by a unit-carrying symbol.
    fn collapsible(&self, e: &Term) -> bool {
        match e {
            Term::Var(_) => true,
            Term::App(g, _) => !e.is_ground() && self.theory.unit_of(g).is_some(),
        }
    }

    fn segment_lengths(
        &self,
        f: &Symbol,
        e: &Term,
        available: usize,
    ) -> std::ops::RangeInclusive<usize> {
        if self.collapsible(e) {
            let min = if self.theory.unit_of(f).is_some() {
                0
            } else {
                1
            };
            min..=available
        } else {
            1..=available.min(1)
        }
    }

    fn match_sequence(
        &mut self,
        f: &Symbol,
        ps: &[Term],
        ts: &[Term],
        acc: Vec<Substitution>,
        out: &mut Vec<Substitution>,
    ) -> Result<(), MatchError> {
        self.tick()?;
        let Some((e, rest)) = ps.split_first() else {
            if ts.is_empty() {
                out.extend(acc);
            }
            return Ok(());
        };
        for len in self.segment_lengths(f, e, ts.len()) {
            if rest.is_empty() && len != ts.len() {
                continue;
            }
            let seg = self.theory.build(f, ts[..len].to_vec());
            let ms = self.match_normal(e, &seg)?;
            let next = merge_all(&acc, &ms);
            if !next.is_empty() {
                self.match_sequence(f, rest, &ts[len..], next, out)?;
            }
        }
        Ok(())
    }

    fn match_multiset(
        &mut self,
        f: &Symbol,
        ps: &[Term],
        ts: Vec<Term>,
        acc: Vec<Substitution>,
        out: &mut Vec<Substitution>,
    ) -> Result<(), MatchError> {
        self.tick()?;
        let Some((e, rest)) = ps.split_first() else {
            if ts.is_empty() {
                out.extend(acc);
            }
            return Ok(());
        };
        let lens = self.segment_lengths(f, e, ts.len());
        let mut tried: HashSet<Vec<Term>> = HashSet::new();
        for (chosen, remaining) in sub_multisets(&ts, *lens.start(), *lens.end()) {
            if rest.is_empty() && !remaining.is_empty() {
                continue;
            }
            if !tried.insert(chosen.clone()) {
                continue;
            }
            self.tick()?;
            let seg = self.theory.build(f, chosen);
            let ms = self.match_normal(e, &seg)?;
            let next = merge_all(&acc, &ms);
            if !next.is_empty() {
                self.match_multiset(f, rest, remaining, next, out)?;
            }
        }
        Ok(())
    }
}

/// Every split of `items` into a chosen sub-multiset of size within
/// `[min, max]` and the rest, both keeping the original order.
fn sub_multisets(items: &[Term], min: usize, max: usize) -> Vec<(Vec<Term>, Vec<Term>)> {
    let n = items.len();
    assert!(n < 31, "spine too long for subset enumeration");
    let mut out = Vec::new();
    for mask in 0u32..(1 << n) {
        let k = mask.count_ones() as usize;
        if k < min || k > max {
            continue;
        }
        let mut chosen = Vec::with_capacity(k);
        let mut rest = Vec::with_capacity(n - k);
        for (i, t) in items.iter().enumerate() {
            if mask & (1 << i) != 0 {
                chosen.push(t.clone());
            } else {
                rest.push(t.clone());
            }
        }
        out.push((chosen, rest));
    }
    out
}

fn merge(a: &Substitution, b: &Substitution) -> Option<Substitution> {
    let mut out = a.clone();
    for (x, t) in b.iter() {
        match a.get(x) {
            Some(existing) if existing != t => return None,
            Some(_) => {}
            None => out.insert(x, t.clone()),
        }
    }
    Some(out)
}

fn merge_all(acc: &[Substitution], ms: &[Substitution]) -> Vec<Substitution> {
    let mut out = Vec::new();
    for a in acc {
        for m in ms {
            if let Some(s) = merge(a, m) {
                out.push(s);
            }
        }
    }
    dedup(out)
}

fn dedup(v: Vec<Substitution>) -> Vec<Substitution> {
    let mut seen = HashSet::new();
    v.into_iter().filter(|s| seen.insert(s.clone())).collect()
}

/// All substitutions σ over `Var(pattern)` with `pattern σ =_E target`.
/// Bound values are returned in normal form.
pub fn match_modulo(
    pattern: &Term,
    target: &Term,
    theory: &Theory,
) -> Result<Vec<Substitution>, MatchError> {
    Matcher::new(theory, DEFAULT_NODE_BUDGET).matches(pattern, target)
}

/// `general ⪯_E specific`: some σ makes `general σ =_E specific`. Variables
/// of `specific` are frozen into constants.
pub fn subsumes(general: &Term, specific: &Term, theory: &Theory) -> Result<bool, MatchError> {
    Matcher::new(theory, DEFAULT_NODE_BUDGET).subsumes(general, specific)
}

impl Matcher<'_> {
    pub fn subsumes(&mut self, general: &Term, specific: &Term) -> Result<bool, MatchError> {
        self.used = 0;
        let p = self.theory.normal_term(general);
        let t = self.theory.normal_term(&freeze(specific));
        self.solve(vec![Goal::Eq(p, t)], &mut Substitution::new())
    }

    /// Depth-first search for a single matcher of all `goals` extending `sigma`.
    fn solve(
        &mut self,
        mut goals: Vec<Goal>,
        sigma: &mut Substitution,
    ) -> Result<bool, MatchError> {
        self.tick()?;
        let Some(goal) = goals.pop() else {
            return Ok(true);
        };
        match goal {
            Goal::Eq(Term::Var(x), t) => match sigma.get(x) {
                Some(bound) => Ok(*bound == t && self.solve(goals, sigma)?),
                None => {
                    sigma.insert(x, t);
                    let found = self.solve(goals, sigma)?;
                    sigma.remove(x);
                    Ok(found)
                }
            },
            Goal::Eq(p, t) if p.is_ground() => Ok(p == t && self.solve(goals, sigma)?),
            Goal::Eq(p, t) => {
                let Term::App(f, pargs) = &p else {
                    unreachable!()
                };
                let attrs = self.theory.attrs(f).cloned();
                let mut options: Vec<Vec<Goal>> = Vec::new();
                match attrs {
                    Some(a) if a.assoc => {
                        let mut ps = self.theory.flatten(f, &p);
                        let ts = self.theory.flatten(f, &t);
                        if a.unit.is_some() || ts.len() >= ps.len() {
                            if a.comm {
                                ps.sort_by_key(|e| self.collapsible(e));
                                options.push(vec![Goal::Multiset(f.clone(), ps, ts)]);
                            } else {
                                options.push(vec![Goal::Sequence(f.clone(), ps, ts)]);
                            }
                        }
                    }
                    attrs => {
                        let pairs = |ts: &[Term]| -> Vec<Goal> {
                            pargs
                                .iter()
                                .zip(ts)
                                .rev()
                                .map(|(p, t)| Goal::Eq(p.clone(), t.clone()))
                                .collect()
                        };
                        if t.head() == Some(f) {
                            let targs = t.args();
                            options.push(pairs(targs));
                            if attrs.as_ref().is_some_and(|a| a.comm) {
                                options.push(pairs(&[targs[1].clone(), targs[0].clone()]));
                            }
                        }
                        if let Some(u) = attrs.and_then(|a| a.unit).map(Term::constant) {
                            options.push(pairs(&[u.clone(), t.clone()]));
                            options.push(pairs(&[t.clone(), u]));
                        }
                    }
                }
                for extra in options {
                    let mut next = goals.clone();
                    next.extend(extra);
                    if self.solve(next, sigma)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            Goal::Sequence(f, ps, ts) => {
                let Some((e, rest)) = ps.split_first() else {
                    return Ok(ts.is_empty() && self.solve(goals, sigma)?);
                };
                for len in self.segment_lengths(&f, e, ts.len()) {
                    if rest.is_empty() && len != ts.len() {
                        continue;
                    }
                    let seg = self.theory.build(&f, ts[..len].to_vec());
                    let mut next = goals.clone();
                    next.push(Goal::Sequence(f.clone(), rest.to_vec(), ts[len..].to_vec()));
                    next.push(Goal::Eq(e.clone(), seg));
                    if self.solve(next, sigma)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            Goal::Multiset(f, ps, ts) => {
                let Some((e, rest)) = ps.split_first() else {
                    return Ok(ts.is_empty() && self.solve(goals, sigma)?);
                };
                let lens = self.segment_lengths(&f, e, ts.len());
                let mut tried: HashSet<Vec<Term>> = HashSet::new();
                for (chosen, remaining) in sub_multisets(&ts, *lens.start(), *lens.end()) {
                    if rest.is_empty() && !remaining.is_empty() {
                        continue;
                    }
                    if !tried.insert(chosen.clone()) {
                        continue;
                    }
                    let seg = self.theory.build(&f, chosen);
                    let mut next = goals.clone();
                    next.push(Goal::Multiset(f.clone(), rest.to_vec(), remaining));
                    next.push(Goal::Eq(e.clone(), seg));
                    if self.solve(next, sigma)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
        }
    }
}

/// A pending matching problem; spines hold pattern and target elements.
#[derive(Clone)]
enum Goal {
    Eq(Term, Term),
    Sequence(Symbol, Vec<Term>, Vec<Term>),
    Multiset(Symbol, Vec<Term>, Vec<Term>),
}

fn freeze(t: &Term) -> Term {
    match t {
        Term::Var(v) => Term::constant(Symbol::marker(VarId(v.0))),
        Term::App(f, args) => Term::App(f.clone(), args.iter().map(freeze).collect()),
    }
}
