//! Depth-first search over rule applications.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::time::{Duration, Instant};

use thiserror::Error;

use super::rules::{aut_successors, fail_check, failure_pairs, WitnessFilter};
use super::{initial_config, Aut, Configuration, GenResult, Generalization, Rule};
use crate::equational::{normalize, validate_sc_preserving, Matcher, Theory, DEFAULT_NODE_BUDGET};
use crate::term::{Symbol, Term};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("theory is not special-constant preserving")]
    UnsafeTheory,
    #[error("{0} input term is not ground")]
    NonGround(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// The first solved configuration found.
    First,
    /// Every solved result, deduplicated up to renaming modulo E.
    All,
    /// The results not strictly subsumed by another result.
    #[default]
    Maximal,
}

#[derive(Debug, Clone)]
pub struct GenOptions {
    pub fail_rule: bool,
    pub mode: Mode,
    pub timeout: Option<Duration>,
    /// Maximum number of explored configurations.
    pub node_budget: Option<usize>,
    /// Node budget of each subsumption check in maximal mode.
    pub match_budget: usize,
    /// Restricts which subterm pairs may be solved into witnesses.
    pub witness_filter: Option<WitnessFilter>,
}

impl Default for GenOptions {
    fn default() -> Self {
        GenOptions {
            fail_rule: true,
            mode: Mode::Maximal,
            timeout: Some(Duration::from_secs(60)),
            node_budget: None,
            match_budget: DEFAULT_NODE_BUDGET,
            witness_filter: None,
        }
    }
}

impl GenOptions {
    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_fail_rule(mut self, fail_rule: bool) -> Self {
        self.fail_rule = fail_rule;
        self
    }

    pub fn with_timeout(mut self, timeout: Option<Duration>) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn with_witness_filter(mut self, filter: Option<WitnessFilter>) -> Self {
        self.witness_filter = filter;
        self
    }

    pub fn with_node_budget(mut self, budget: Option<usize>) -> Self {
        self.node_budget = budget;
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SearchStats {
    /// Configurations visited, including those closed by Fail.
    pub explored: usize,
    pub elapsed: Duration,
    pub interrupted: bool,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub result: GenResult,
    pub stats: SearchStats,
}

/// Hook called on every explored derivation step.
pub trait SearchObserver {
    fn on_node(&mut self, _c: &Configuration) {}
    fn on_edge(&mut self, _parent: &Configuration, _rule: Rule, _child: &Configuration) {}
}

pub struct Generalizer<'a> {
    theory: &'a Theory,
    opts: GenOptions,
    observer: Option<&'a mut dyn SearchObserver>,
}

type ActiveKey = Vec<(Term, Term, bool, bool)>;

struct Run<'r, 'a> {
    theory: &'a Theory,
    opts: &'r GenOptions,
    observer: Option<&'r mut (dyn SearchObserver + 'a)>,
    deadline: Option<Instant>,
    explored: usize,
    interrupted: bool,
    done: bool,
    failed: HashSet<ActiveKey>,
    visited: HashMap<Term, bool>,
    blocking: BTreeSet<(Term, Term)>,
    solutions: Vec<Generalization>,
}

impl<'a> Generalizer<'a> {
    pub fn new(theory: &'a Theory, opts: GenOptions) -> Generalizer<'a> {
        Generalizer {
            theory,
            opts,
            observer: None,
        }
    }

    pub fn observe(mut self, observer: &'a mut dyn SearchObserver) -> Self {
        self.observer = Some(observer);
        self
    }

    pub fn run(&mut self, s0: &Term, t0: &Term) -> Result<Outcome, EngineError> {
        if !validate_sc_preserving(self.theory) {
            return Err(EngineError::UnsafeTheory);
        }
        if !s0.is_ground() {
            return Err(EngineError::NonGround("left"));
        }
        if !t0.is_ground() {
            return Err(EngineError::NonGround("right"));
        }
        let start = Instant::now();
        let mut run = Run {
            theory: self.theory,
            opts: &self.opts,
            observer: self.observer.as_deref_mut(),
            deadline: self.opts.timeout.map(|d| start + d),
            explored: 0,
            interrupted: false,
            done: false,
            failed: HashSet::new(),
            visited: HashMap::new(),
            blocking: BTreeSet::new(),
            solutions: Vec::new(),
        };
        let s = normalize(s0, self.theory).into_term();
        let t = normalize(t0, self.theory).into_term();
        run.explore(initial_config(&s, &t));

        let result = if !run.solutions.is_empty() && (!run.interrupted || run.done) {
            GenResult::Solutions(run.finish())
        } else if run.interrupted {
            GenResult::Timeout
        } else {
            GenResult::Failure(std::mem::take(&mut run.blocking))
        };
        Ok(Outcome {
            result,
            stats: SearchStats {
                explored: run.explored,
                elapsed: start.elapsed(),
                interrupted: run.interrupted,
            },
        })
    }
}

pub fn generalize(
    s0: &Term,
    t0: &Term,
    theory: &Theory,
    opts: &GenOptions,
) -> Result<Outcome, EngineError> {
    Generalizer::new(theory, opts.clone()).run(s0, t0)
}

fn active_key(c: &Configuration) -> ActiveKey {
    let mut key: ActiveKey = c
        .active
        .iter()
        .map(|a| {
            (
                a.left.clone(),
                a.right.clone(),
                a.left_expanded,
                a.right_expanded,
            )
        })
        .collect();
    key.sort();
    key
}

/// `x₀θ` with every variable replaced by a label of its triple, normalized.
/// Configurations with equal fingerprints lead to the same results.
fn fingerprint(c: &Configuration, theory: &Theory) -> Term {
    let label = |a: &Aut, active: bool| {
        let name = format!(
            "\u{0}aut{}{}{}",
            active as u8, a.left_expanded as u8, a.right_expanded as u8
        );
        Term::app(
            Symbol::function(&name, 2),
            vec![a.left.clone(), a.right.clone()],
        )
    };
    let labels: crate::term::Substitution = c
        .active
        .iter()
        .map(|a| (a.index, label(a, true)))
        .chain(c.store.iter().map(|a| (a.index, label(a, false))))
        .collect();
    normalize(&c.generalization().apply(&labels), theory).into_term()
}

/// Representative of a term's class up to E and renaming.
pub fn canonical_form(t: &Term, theory: &Theory) -> Term {
    let mut cur = t.canonical_renaming();
    for _ in 0..=t.size() {
        let next = normalize(&cur, theory).into_term().canonical_renaming();
        if next == cur {
            break;
        }
        cur = next;
    }
    cur
}

impl<'r, 'a> Run<'r, 'a> {
    fn out_of_resources(&mut self) -> bool {
        if self.interrupted {
            return true;
        }
        let over_budget = self.opts.node_budget.is_some_and(|b| self.explored >= b);
        let over_time = self.deadline.is_some_and(|d| Instant::now() >= d);
        if over_budget || over_time {
            self.interrupted = true;
        }
        self.interrupted
    }

    /// Returns whether the subtree below `c` contains a solved configuration.
    fn explore(&mut self, c: Configuration) -> bool {
        if self.done || self.out_of_resources() {
            return false;
        }
        self.explored += 1;
        if let Some(obs) = self.observer.as_deref_mut() {
            obs.on_node(&c);
        }
        if self.opts.fail_rule {
            if let Some(b) = fail_check(&c) {
                self.blocking.extend(b);
                return false;
            }
        }
        if c.is_solved() {
            self.record(&c);
            if self.opts.mode == Mode::First {
                self.done = true;
            }
            return true;
        }
        let key = active_key(&c);
        if self.failed.contains(&key) {
            return false;
        }
        let print = if self.opts.mode == Mode::First {
            None
        } else {
            let fp = fingerprint(&c, self.theory);
            if let Some(&found) = self.visited.get(&fp) {
                return found;
            }
            Some(fp)
        };

        let mut found = None;
        for i in 0..c.active.len() {
            let mut next = aut_successors(
                &c,
                i,
                self.theory,
                self.opts.fail_rule,
                self.opts.witness_filter,
            )
            .peekable();
            if next.peek().is_none() {
                continue;
            }
            let mut any = false;
            for (rule, child) in next {
                if let Some(obs) = self.observer.as_deref_mut() {
                    obs.on_edge(&c, rule, &child);
                }
                any |= self.explore(child);
                if self.done || self.interrupted {
                    break;
                }
            }
            found = Some(any);
            break;
        }
        let found = match found {
            Some(f) => f,
            None => {
                // irreducible with a non-empty active set
                for a in &c.active {
                    self.blocking.extend(failure_pairs(&a.left, &a.right));
                }
                false
            }
        };
        if !self.interrupted {
            if !found {
                self.failed.insert(key);
            }
            if let Some(fp) = print {
                self.visited.insert(fp, found);
            }
        }
        found
    }

    fn record(&mut self, c: &Configuration) {
        let term = c.generalization();
        let vars = term.vars();
        self.solutions.push(Generalization {
            left: c.left().restrict(&vars),
            right: c.right().restrict(&vars),
            term,
        });
    }

    fn finish(&mut self) -> Vec<Generalization> {
        let mut seen = HashSet::new();
        let unique: Vec<(Term, Generalization)> = std::mem::take(&mut self.solutions)
            .into_iter()
            .map(|g| (canonical_form(&g.term, self.theory), g))
            .filter(|(c, _)| seen.insert(c.clone()))
            .collect();
        if self.opts.mode != Mode::Maximal {
            return unique.into_iter().map(|(_, g)| g).collect();
        }
        let mut matcher = Matcher::new(self.theory, self.opts.match_budget);
        // an error counts as no subsumption
        let mut subsumes = |a: &(Term, Generalization, Constants),
                            b: &(Term, Generalization, Constants)| {
            a.2.within(&b.2) && matcher.subsumes(&a.1.term, &b.1.term).unwrap_or(false)
        };
        // antichain of the most specific candidates, earlier ones win ties
        let mut keep: Vec<(Term, Generalization, Constants)> = Vec::new();
        for (c, g) in unique {
            let counts = Constants::of(&c);
            let cand = (c, g, counts);
            if keep.iter().any(|h| subsumes(&cand, h)) {
                continue;
            }
            keep.retain(|h| !subsumes(h, &cand));
            keep.push(cand);
        }
        keep.into_iter().map(|(_, g, _)| g).collect()
    }
}

/// Occurrences of each constant in a normal form; a generalization has at
/// most as many of each as its instances.
struct Constants(HashMap<Symbol, usize>);

impl Constants {
    fn of(t: &Term) -> Constants {
        let mut counts = HashMap::new();
        let mut stack = vec![t];
        while let Some(t) = stack.pop() {
            if let Term::App(f, args) = t {
                if args.is_empty() {
                    *counts.entry(f.clone()).or_insert(0) += 1;
                }
                stack.extend(args.iter());
            }
        }
        Constants(counts)
    }

    fn within(&self, other: &Constants) -> bool {
        self.0
            .iter()
            .all(|(f, n)| other.0.get(f).is_some_and(|m| m >= n))
    }
}
