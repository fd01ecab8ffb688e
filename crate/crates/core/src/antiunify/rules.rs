//! The transformation rules and successor generation.

use std::collections::{BTreeSet, HashMap, HashSet};

use super::{Aut, Configuration, Rule};
use crate::equational::Theory;
use crate::term::{conflict_positions, Symbol, Term};

/// One-step successors of a configuration, or ⊥ if the Fail rule fires.
#[derive(Debug)]
pub enum Successors {
    Bottom(BTreeSet<(Term, Term)>),
    Next(Vec<(Rule, Configuration)>),
}

/// All configurations reachable by one rule application on any active triple.
pub fn successors(c: &Configuration, theory: &Theory, fail_rule: bool) -> Successors {
    if fail_rule {
        if let Some(blocking) = fail_check(c) {
            return Successors::Bottom(blocking);
        }
    }
    let mut out = Vec::new();
    for i in 0..c.active.len() {
        out.extend(aut_successors(c, i, theory, false, None));
    }
    Successors::Next(out)
}

/// Fires when some active triple has different special constants on each side.
/// Returns the failure conflict pairs found below those triples.
pub(crate) fn fail_check(c: &Configuration) -> Option<BTreeSet<(Term, Term)>> {
    let mut blocking = BTreeSet::new();
    for a in &c.active {
        if !a.sc_balanced() {
            blocking.extend(failure_pairs(&a.left, &a.right));
        }
    }
    (!blocking.is_empty()).then_some(blocking)
}

pub(crate) fn failure_pairs(s: &Term, t: &Term) -> Vec<(Term, Term)> {
    let report = conflict_positions(s, t);
    let pairs: Vec<(Term, Term)> = report
        .failure
        .iter()
        .map(|p| {
            (
                s.subterm_at(p).expect("common position").clone(),
                t.subterm_at(p).expect("common position").clone(),
            )
        })
        .collect();
    if pairs.is_empty() {
        vec![(s.clone(), t.clone())]
    } else {
        pairs
    }
}

/// Extra condition on the terms a triple may be solved with.
pub type WitnessFilter = fn(&Term) -> bool;

type SuccIter<'a> = Box<dyn Iterator<Item = (Rule, Configuration)> + 'a>;

/// Successors obtained by rewriting the `i`-th active triple, in the fixed
/// rule order Recover, Decompose family, Expand-Unit, Solve. With `prune`,
/// splits creating a triple with unbalanced special constants are skipped.
/// Solve additionally requires `witness_ok` of both sides when given.
pub(crate) fn aut_successors<'a>(
    c: &'a Configuration,
    i: usize,
    theory: &'a Theory,
    prune: bool,
    witness_ok: Option<WitnessFilter>,
) -> SuccIter<'a> {
    let a = &c.active[i];
    if let Some(y) = c
        .store
        .iter()
        .find(|b| b.left == a.left && b.right == a.right)
        .map(|b| b.index)
    {
        let mut n = c.clone();
        let a = n.active.remove(i);
        n.bind(a.index, Term::Var(y));
        return Box::new(std::iter::once((Rule::Recover, n)));
    }
    match (a.left.head(), a.right.head()) {
        (Some(f), Some(g)) if f == g => decompose_family(c, i, f.clone(), theory, prune),
        _ => {
            let expanded = expand_unit(c, i, theory);
            if !expanded.is_empty() {
                return Box::new(expanded.into_iter());
            }
            if a.left.has_special_constants() || a.right.has_special_constants() {
                return Box::new(std::iter::empty());
            }
            if witness_ok.is_some_and(|ok| !ok(&a.left) || !ok(&a.right)) {
                return Box::new(std::iter::empty());
            }
            let mut n = c.clone();
            let a = n.active.remove(i);
            n.store.push(a);
            Box::new(std::iter::once((Rule::Solve, n)))
        }
    }
}

/// Replaces the `i`-th triple `x : s ≜ t` by `x₁ : s₁ ≜ t₁, …` and binds `x ↦ f(x₁, …)`.
fn replace_with(
    c: &Configuration,
    i: usize,
    f: &Symbol,
    pairs: Vec<(Term, Term)>,
) -> Configuration {
    let mut n = c.clone();
    let a = n.active.remove(i);
    let mut vars = Vec::with_capacity(pairs.len());
    let mut new_auts = Vec::with_capacity(pairs.len());
    for (s, t) in pairs {
        let x = n.fresh();
        vars.push(Term::Var(x));
        new_auts.push(Aut::new(x, s, t));
    }
    n.active.splice(i..i, new_auts);
    n.bind(a.index, Term::App(f.clone(), vars.into()));
    n
}

fn decompose_family<'a>(
    c: &'a Configuration,
    i: usize,
    f: Symbol,
    theory: &'a Theory,
    prune: bool,
) -> SuccIter<'a> {
    let a = &c.active[i];
    let attrs = theory.attrs(&f).cloned().unwrap_or_default();
    if attrs.assoc {
        return decompose_assoc(c, i, f, theory, prune);
    }
    let (ss, ts) = (a.left.args(), a.right.args());
    if attrs.comm {
        let straight = vec![
            (ss[0].clone(), ts[0].clone()),
            (ss[1].clone(), ts[1].clone()),
        ];
        let crossed = vec![
            (ss[0].clone(), ts[1].clone()),
            (ss[1].clone(), ts[0].clone()),
        ];
        let mut out = vec![(
            Rule::DecomposeComm,
            replace_with(c, i, &f, straight.clone()),
        )];
        if crossed != straight {
            out.push((Rule::DecomposeComm, replace_with(c, i, &f, crossed)));
        }
        return Box::new(out.into_iter());
    }
    let pairs = ss.iter().cloned().zip(ts.iter().cloned()).collect();
    Box::new(std::iter::once((
        Rule::Decompose,
        replace_with(c, i, &f, pairs),
    )))
}

/// Special-constant sets of list elements as bitsets, when there are few
/// enough distinct constants.
struct ScBits {
    left: Vec<u128>,
    right: Vec<u128>,
}

impl ScBits {
    fn new(left: &[Term], right: &[Term]) -> Option<ScBits> {
        let mut ids: HashMap<Symbol, u32> = HashMap::new();
        let mut encode = |t: &Term| -> Option<u128> {
            let mut bits = 0u128;
            for s in t.special_constants() {
                let next = ids.len() as u32;
                let id = *ids.entry(s).or_insert(next);
                if id >= 128 {
                    return None;
                }
                bits |= 1 << id;
            }
            Some(bits)
        };
        let left = left.iter().map(&mut encode).collect::<Option<Vec<_>>>()?;
        let right = right.iter().map(&mut encode).collect::<Option<Vec<_>>>()?;
        Some(ScBits { left, right })
    }

    fn union(bits: &[u128], mask: u32) -> u128 {
        bits.iter()
            .enumerate()
            .filter(|(k, _)| mask & (1 << k) != 0)
            .fold(0, |acc, (_, b)| acc | b)
    }
}

fn pick(items: &[Term], mask: u32, keep: bool) -> Vec<Term> {
    items
        .iter()
        .enumerate()
        .filter(|(k, _)| (mask & (1 << k) != 0) == keep)
        .map(|(_, t)| t.clone())
        .collect()
}

/// Gosper's enumeration of `n`-bit masks with exactly `k` bits set.
fn masks_with_popcount(n: usize, k: usize) -> Box<dyn Iterator<Item = u32>> {
    if k > n {
        return Box::new(std::iter::empty());
    }
    if k == 0 {
        return Box::new(std::iter::once(0));
    }
    let limit: u64 = 1 << n;
    let first: u64 = (1 << k) - 1;
    Box::new(
        std::iter::successors(Some(first), |&m| {
            let c = m & m.wrapping_neg();
            let r = m + c;
            let next = (((r ^ m) >> 2) / c) | r;
            Some(next)
        })
        .take_while(move |&m| m < limit)
        .map(|m| m as u32),
    )
}

/// Binary split decomposition of associative spines. A split pairs a first
/// block of each side and the remaining blocks; blocks are contiguous for
/// plain associativity and arbitrary sub-multisets with commutativity. An
/// empty block denotes the unit and is only allowed when the symbol has one,
/// and never on both sides of the same new triple.
fn decompose_assoc<'a>(
    c: &'a Configuration,
    i: usize,
    f: Symbol,
    theory: &'a Theory,
    prune: bool,
) -> SuccIter<'a> {
    let a = &c.active[i];
    let ss = theory.flatten(&f, &a.left);
    let ts = theory.flatten(&f, &a.right);
    let (n, m) = (ss.len(), ts.len());
    let has_unit = theory.unit_of(&f).is_some();
    let comm = theory.is_comm(&f);
    assert!(n < 31 && m < 31, "associative spine too long");
    let full_s: u32 = ((1u64 << n) - 1) as u32;
    let full_t: u32 = ((1u64 << m) - 1) as u32;
    let bits = if prune { ScBits::new(&ss, &ts) } else { None };

    // first blocks: at most one element per side with a unit, otherwise at
    // most one element on some side
    let valid = move |ks: usize, kt: usize| -> bool {
        let (rs, rt) = (n - ks, m - kt);
        if has_unit {
            ks.min(kt) <= 1 && ks + kt >= 1 && rs + rt >= 1
        } else {
            ks >= 1 && kt >= 1 && ks.min(kt) == 1 && rs >= 1 && rt >= 1
        }
    };

    // (first-block size left, first-block size right), smallest blocks first
    let mut sizes: Vec<(usize, usize)> = (0..=n)
        .flat_map(|ks| (0..=m).map(move |kt| (ks, kt)))
        .filter(|&(ks, kt)| valid(ks, kt))
        .collect();
    sizes.sort_by_key(|&(ks, kt)| (ks + kt, std::cmp::Reverse(ks)));

    let masks: Box<dyn Iterator<Item = (u32, u32)>> = if comm {
        // the first block holds the first left element, or the first right
        // one when the left spine is empty
        Box::new(sizes.into_iter().flat_map(move |(ks, kt)| {
            masks_with_popcount(n, ks)
                .filter(move |ms| n == 0 || ms & 1 != 0)
                .flat_map(move |ms| {
                    masks_with_popcount(m, kt)
                        .filter(move |mt| n > 0 || mt & 1 != 0)
                        .map(move |mt| (ms, mt))
                })
        }))
    } else {
        // contiguous prefixes
        Box::new(
            sizes
                .into_iter()
                .map(|(ks, kt)| (((1u64 << ks) - 1) as u32, ((1u64 << kt) - 1) as u32)),
        )
    };

    let mut seen: HashSet<(Term, Term, Term, Term)> = HashSet::new();
    Box::new(masks.filter_map(move |(ms, mt)| {
        if let Some(b) = &bits {
            let (l1, r1) = (ScBits::union(&b.left, ms), ScBits::union(&b.right, mt));
            let (l2, r2) = (
                ScBits::union(&b.left, full_s ^ ms),
                ScBits::union(&b.right, full_t ^ mt),
            );
            if l1 != r1 || l2 != r2 {
                return None;
            }
        }
        let s1 = theory.build(&f, pick(&ss, ms, true));
        let t1 = theory.build(&f, pick(&ts, mt, true));
        let s2 = theory.build(&f, pick(&ss, ms, false));
        let t2 = theory.build(&f, pick(&ts, mt, false));
        if !seen.insert((s1.clone(), t1.clone(), s2.clone(), t2.clone())) {
            return None;
        }
        Some((
            Rule::DecomposeAssoc,
            replace_with(c, i, &f, vec![(s1, t1), (s2, t2)]),
        ))
    }))
}

/// Wraps the side whose head lacks a unit-carrying symbol `f` into
/// `f(u, w)` / `f(w, u)`, at most once per side of a triple.
fn expand_unit(c: &Configuration, i: usize, theory: &Theory) -> Vec<(Rule, Configuration)> {
    let a = &c.active[i];
    let mut out = Vec::new();
    if a.left.head() == a.right.head() {
        return out;
    }
    let mut expand = |f: &Symbol, on_left: bool| {
        let Some(u) = theory.unit_of(f) else { return };
        let w = if on_left { &a.left } else { &a.right };
        let mut wrapped = vec![Term::App(f.clone(), vec![u.clone(), w.clone()].into())];
        if !theory.is_assoc(f) {
            wrapped.push(Term::App(f.clone(), vec![w.clone(), u].into()));
        }
        for w2 in wrapped {
            let mut n = c.clone();
            let b = &mut n.active[i];
            if on_left {
                b.left = w2;
                b.left_expanded = true;
            } else {
                b.right = w2;
                b.right_expanded = true;
            }
            out.push((Rule::ExpandUnit, n));
        }
    };
    if !a.right_expanded {
        if let Some(f) = a.left.head() {
            expand(f, false);
        }
    }
    if !a.left_expanded {
        if let Some(g) = a.right.head() {
            expand(g, true);
        }
    }
    out
}
