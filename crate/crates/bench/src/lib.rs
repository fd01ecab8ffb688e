//! Inputs shared by the engine benchmarks.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use scpau_core::interaction::{abstract_with_gates, derive_tagging, GateMapping, Side};
use scpau_core::textio::parse_interaction;
use scpau_core::Term;

/// Gated views of one interaction split between two lifeline sets.
pub struct Views {
    pub s: Term,
    pub t: Term,
    pub lambda_i: GateMapping,
    pub lambda_j: GateMapping,
}

pub fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

/// Parses a corpus file, skipping `//` comment lines.
pub fn load(name: &str) -> Term {
    let path = corpus_dir().join(name);
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let body: String = text
        .lines()
        .filter(|l| !l.trim_start().starts_with("//"))
        .collect::<Vec<_>>()
        .join("\n");
    parse_interaction(&body, true).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn views(k: &Term, left: &[&str], right: &[&str]) -> Views {
    let set = |ls: &[&str]| ls.iter().map(|l| l.to_string()).collect::<BTreeSet<_>>();
    let (i, j, gamma) = derive_tagging(k, &set(left), &set(right)).expect("disjoint lifelines");
    let (s, lambda_i) = abstract_with_gates(&i, Side::Left, &gamma);
    let (t, lambda_j) = abstract_with_gates(&j, Side::Right, &gamma);
    Views {
        s,
        t,
        lambda_i,
        lambda_j,
    }
}
