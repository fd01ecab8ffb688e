//! Brute-force reference for syntactic special-constant-preserving
//! generalization, used to cross-check the rule-based engine.
//!
//! Candidates are enumerated inside the common structure of `s` and `t`
//! (any other term fails to match one of them): each common position is
//! either cut by a variable or keeps the shared head, and cut positions are
//! grouped into variables in every possible way.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::term::{Substitution, Term, VarId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("more than {0} candidate generalizations")]
    ResourceLimit(usize),
}

pub const DEFAULT_CANDIDATE_LIMIT: usize = 2_000_000;

/// Plain syntactic matching `pattern σ = target`.
pub fn match_syntactic(pattern: &Term, target: &Term) -> Option<Substitution> {
    fn go(p: &Term, t: &Term, sigma: &mut BTreeMap<VarId, Term>) -> bool {
        match p {
            Term::Var(x) => match sigma.get(x) {
                Some(bound) => bound == t,
                None => {
                    sigma.insert(*x, t.clone());
                    true
                }
            },
            Term::App(f, args) => match t {
                Term::App(g, targs) if f == g => {
                    args.iter().zip(targs.iter()).all(|(a, b)| go(a, b, sigma))
                }
                _ => false,
            },
        }
    }
    let mut sigma = BTreeMap::new();
    go(pattern, target, &mut sigma).then(|| sigma.into_iter().collect())
}

/// `general σ = specific` for some σ, variables of `specific` acting as constants.
pub fn subsumes_syntactic(general: &Term, specific: &Term) -> bool {
    fn go(p: &Term, t: &Term, sigma: &mut HashMap<VarId, Term>) -> bool {
        match p {
            Term::Var(x) => match sigma.get(x) {
                Some(bound) => bound == t,
                None => {
                    sigma.insert(*x, t.clone());
                    true
                }
            },
            Term::App(f, args) => match t {
                Term::App(g, targs) if f == g => {
                    args.iter().zip(targs.iter()).all(|(a, b)| go(a, b, sigma))
                }
                _ => false,
            },
        }
    }
    go(general, specific, &mut HashMap::new())
}

/// Whether `r` generalizes `(s, t)` with witnesses free of special constants.
pub fn is_sc_generalization(r: &Term, s: &Term, t: &Term) -> bool {
    let sc_free = |sigma: &Substitution| sigma.range().all(|u| !u.has_special_constants());
    match (match_syntactic(r, s), match_syntactic(r, t)) {
        (Some(a), Some(b)) => sc_free(&a) && sc_free(&b),
        _ => false,
    }
}

/// A term whose `Hole(k)` leaves are cut positions.
#[derive(Clone)]
enum Skeleton {
    Hole(usize),
    App(crate::term::Symbol, Vec<Skeleton>),
}

fn skeletons(
    s: &Term,
    t: &Term,
    holes: &mut Vec<(Term, Term)>,
    limit: usize,
) -> Result<Vec<(Skeleton, usize)>, OracleError> {
    // (skeleton, size) pairs; holes are shared across all skeletons by pair
    let hole = {
        let k = holes
            .iter()
            .position(|(a, b)| a == s && b == t)
            .unwrap_or_else(|| {
                holes.push((s.clone(), t.clone()));
                holes.len() - 1
            });
        (Skeleton::Hole(k), 1)
    };
    let mut out = vec![hole];
    if let (Term::App(f, a), Term::App(g, b)) = (s, t) {
        if f == g {
            let mut partial: Vec<(Vec<Skeleton>, usize)> = vec![(Vec::new(), 1)];
            for (x, y) in a.iter().zip(b.iter()) {
                let options = skeletons(x, y, holes, limit)?;
                let mut next = Vec::new();
                for (prefix, size) in &partial {
                    for (o, osize) in &options {
                        let mut p = prefix.clone();
                        p.push(o.clone());
                        next.push((p, size + osize));
                        if next.len() > limit {
                            return Err(OracleError::ResourceLimit(limit));
                        }
                    }
                }
                partial = next;
            }
            out.extend(
                partial
                    .into_iter()
                    .map(|(args, size)| (Skeleton::App(f.clone(), args), size)),
            );
        }
    }
    Ok(out)
}

fn hole_occurrences(sk: &Skeleton, out: &mut Vec<usize>) {
    match sk {
        Skeleton::Hole(k) => out.push(*k),
        Skeleton::App(_, args) => args.iter().for_each(|a| hole_occurrences(a, out)),
    }
}

fn bell(n: usize) -> usize {
    let mut row = vec![1usize];
    for _ in 0..n {
        let mut next = vec![*row.last().expect("non-empty")];
        for v in &row {
            next.push(next.last().expect("non-empty").saturating_add(*v));
        }
        row = next;
    }
    row[0]
}

/// Every set partition of `items` as a block index per item.
fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(n);
    fn go(n: usize, blocks: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for b in 0..=blocks {
            cur.push(b);
            go(n, blocks.max(b + 1), cur, out);
            cur.pop();
        }
    }
    go(n, 0, &mut cur, &mut out);
    out
}

fn fill(sk: &Skeleton, vars: &mut std::slice::Iter<'_, u32>) -> Term {
    match sk {
        Skeleton::Hole(_) => Term::Var(VarId(*vars.next().expect("one variable per hole"))),
        Skeleton::App(f, args) => {
            Term::App(f.clone(), args.iter().map(|a| fill(a, vars)).collect())
        }
    }
}

/// All sc-preserving generalizations of ground `s` and `t` of size at most
/// `max_size`, one per renaming class.
pub fn oracle_cpg(s: &Term, t: &Term, max_size: usize) -> Result<Vec<Term>, OracleError> {
    oracle_cpg_limited(s, t, max_size, DEFAULT_CANDIDATE_LIMIT)
}

pub fn oracle_cpg_limited(
    s: &Term,
    t: &Term,
    max_size: usize,
    limit: usize,
) -> Result<Vec<Term>, OracleError> {
    let mut holes = Vec::new();
    let sks = skeletons(s, t, &mut holes, limit)?;
    let mut found: BTreeSet<Term> = BTreeSet::new();
    let mut budget = limit;
    for (sk, size) in sks {
        if size > max_size {
            continue;
        }
        let mut occ = Vec::new();
        hole_occurrences(&sk, &mut occ);
        // a variable can only stand for positions with the same pair below
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (slot, &h) in occ.iter().enumerate() {
            groups.entry(h).or_default().push(slot);
        }
        let mut assignments: Vec<Vec<u32>> = vec![vec![0; occ.len()]];
        let mut offset = 0u32;
        for slots in groups.values() {
            if bell(slots.len()).saturating_mul(assignments.len()) > budget {
                return Err(OracleError::ResourceLimit(limit));
            }
            let parts = set_partitions(slots.len());
            let mut next = Vec::with_capacity(assignments.len() * parts.len());
            for a in &assignments {
                for p in &parts {
                    let mut a = a.clone();
                    for (slot, block) in slots.iter().zip(p) {
                        a[*slot] = offset + *block as u32;
                    }
                    next.push(a);
                }
            }
            if next.len() > budget {
                return Err(OracleError::ResourceLimit(limit));
            }
            assignments = next;
            offset += slots.len() as u32;
        }
        budget -= assignments.len().min(budget);
        for a in assignments {
            let r = fill(&sk, &mut a.iter());
            if is_sc_generalization(&r, s, t) {
                found.insert(r.canonical_renaming());
            }
        }
    }
    Ok(found.into_iter().collect())
}

/// Members not strictly below another member in the instantiation order.
pub fn maximal_elements(set: &[Term]) -> Vec<Term> {
    set.iter()
        .filter(|r| {
            !set.iter()
                .any(|o| subsumes_syntactic(r, o) && !subsumes_syntactic(o, r))
        })
        .cloned()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::renaming_equivalent;
    use crate::term::tests::{c, f, g, x};

    #[test]
    fn lattice_of_worked_example() {
        let s = f("f", vec![g("a"), f("g", vec![c("u"), c("u")])]);
        let t = f("f", vec![g("a"), f("g", vec![c("v"), c("v")])]);
        let all = oracle_cpg(&s, &t, 8).unwrap();
        let top = maximal_elements(&all);
        assert_eq!(top.len(), 1);
        assert!(renaming_equivalent(
            &top[0],
            &f("f", vec![g("a"), f("g", vec![x(0), x(0)])])
        ));
        // a lone variable would take the gate into its witness
        assert!(!all.contains(&x(0)));
        assert!(all
            .iter()
            .any(|r| renaming_equivalent(r, &f("f", vec![g("a"), f("g", vec![x(0), x(1)])]))));
        // f(x, g(y, y)) loses the gate
        assert!(!all
            .iter()
            .any(|r| renaming_equivalent(r, &f("f", vec![x(0), f("g", vec![x(1), x(1)])]))));
    }

    #[test]
    fn no_generalization_for_crossed_gates() {
        let s = f("f", vec![g("a"), f("g", vec![g("b"), c("u")])]);
        let t = f("f", vec![g("a"), f("g", vec![c("v"), g("b")])]);
        assert!(oracle_cpg(&s, &t, 8).unwrap().is_empty());
    }

    #[test]
    fn equal_constants() {
        let all = oracle_cpg(&c("u"), &c("u"), 2).unwrap();
        assert_eq!(all.len(), 2);
        assert!(all.contains(&c("u")) && all.contains(&x(0)));
        assert_eq!(maximal_elements(&all), vec![c("u")]);
    }

    #[test]
    fn limit_is_reported() {
        let s = f("f", vec![c("u"), c("u")]);
        assert_eq!(
            oracle_cpg_limited(&s, &s, 8, 1),
            Err(OracleError::ResourceLimit(1))
        );
    }

    #[test]
    fn partitions_count_bell_numbers() {
        let counts: Vec<usize> = (0..6).map(|n| set_partitions(n).len()).collect();
        assert_eq!(counts, vec![1, 1, 2, 5, 15, 52]);
        assert_eq!((0..6).map(bell).collect::<Vec<_>>(), counts);
    }
}
