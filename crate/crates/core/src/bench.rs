//! Composition benchmark: split interactions into two views, perturb the
//! views, compose them back and compare with the original.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::antiunify::{GenOptions, Mode, SearchObserver};
use crate::equational::{mutate_commutative, normalize, Theory};
use crate::interaction::{
    abstract_with_gates, compose_gated_observed, derive_tagging, lifelines_of, normal_interaction,
    GateMapping, InteractionError, Side,
};
use crate::term::Term;
use crate::textio::parse_interaction;

pub type Partition = (BTreeSet<String>, BTreeSet<String>);

#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub partitions: usize,
    pub mutations: usize,
    /// Limit of each composition with the Fail rule.
    pub timeout: Duration,
    /// Limits of each composition without the Fail rule.
    pub nofail_timeout: Duration,
    pub nofail_budget: Option<usize>,
    /// Whether to also run without the Fail rule.
    pub run_nofail: bool,
    pub mode: Mode,
    pub seed: u64,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            partitions: 5,
            mutations: 7,
            timeout: Duration::from_secs(60),
            nofail_timeout: Duration::from_secs(60),
            nofail_budget: None,
            run_nofail: true,
            mode: Mode::Maximal,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Norm,
    Mut,
}

/// Outcome of composing one pair of views with and without Fail.
#[derive(Debug, Clone)]
pub struct VariantResult {
    pub duration_fail: Duration,
    pub explored_fail: usize,
    pub timed_out_fail: bool,
    /// The composition normalizes to the original interaction.
    pub success: bool,
    /// Whatever was composed projects back onto both views.
    pub sound: bool,
    pub error: Option<String>,
    pub nofail: NoFail,
}

/// Outcome of the same composition without the Fail rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoFail {
    Skipped,
    /// Hit the timeout or node budget.
    Exceeded,
    Completed {
        duration: Duration,
        explored: usize,
    },
}

impl NoFail {
    pub fn explored(&self) -> Option<usize> {
        match self {
            NoFail::Completed { explored, .. } => Some(*explored),
            _ => None,
        }
    }

    fn csv_duration(&self) -> String {
        match self {
            NoFail::Skipped => "skipped".into(),
            NoFail::Exceeded => "timeout".into(),
            NoFail::Completed { duration, .. } => ms(*duration),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchRecord {
    pub name: String,
    pub size_k: usize,
    pub partition: Partition,
    pub n_gates: usize,
    pub norm: VariantResult,
    pub mutated: VariantResult,
}

impl BenchRecord {
    pub fn success(&self) -> bool {
        self.norm.success && self.mutated.success
    }

    pub fn variants(&self) -> [(Variant, &VariantResult); 2] {
        [(Variant::Norm, &self.norm), (Variant::Mut, &self.mutated)]
    }
}

/// Splits of the lifelines into parts of sizes `⌊n/2⌋` and `⌈n/2⌉`, in a
/// seeded random order, at most `count` of them.
pub fn near_balanced_partitions(
    lifelines: &BTreeSet<String>,
    count: usize,
    seed: u64,
) -> Vec<Partition> {
    let all: Vec<&String> = lifelines.iter().collect();
    let n = all.len();
    assert!(n < 32, "too many lifelines");
    let half = n / 2;
    let mut masks: Vec<u32> = (0u32..(1u32 << n))
        .filter(|m| m.count_ones() as usize == half)
        // with equal halves each split is listed once
        .filter(|m| n % 2 == 1 || m & 1 == 1 || n == 0)
        .collect();
    masks.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    masks
        .into_iter()
        .take(count)
        .map(|m| {
            let (mut a, mut b) = (BTreeSet::new(), BTreeSet::new());
            for (k, l) in all.iter().enumerate() {
                if m & (1 << k) != 0 {
                    a.insert((*l).clone());
                } else {
                    b.insert((*l).clone());
                }
            }
            (a, b)
        })
        .collect()
}

fn compose_variant(
    k: &Term,
    s: &Term,
    t: &Term,
    views: (&GateMapping, &GateMapping),
    opts: &BenchOptions,
    mut observer: Option<&mut dyn SearchObserver>,
) -> VariantResult {
    let theory = Theory::interactions();
    let base = GenOptions::default().with_mode(opts.mode);
    let with = base
        .clone()
        .with_fail_rule(true)
        .with_timeout(Some(opts.timeout));
    let (result, stats) = compose_gated_observed(
        s,
        t,
        views.0,
        views.1,
        &theory,
        &with,
        reborrow(&mut observer),
    );
    let stats = stats.unwrap_or_default();
    let target = normal_interaction(k);
    let (success, sound, error) = match &result {
        Ok(c) => (normal_interaction(&c.k) == target, true, None),
        Err(InteractionError::Unsound) => (false, false, Some("unsound".to_string())),
        Err(e) => (false, true, Some(e.to_string())),
    };
    let mut out = VariantResult {
        duration_fail: stats.elapsed,
        explored_fail: stats.explored,
        timed_out_fail: stats.interrupted,
        success,
        sound,
        error,
        nofail: NoFail::Skipped,
    };
    if opts.run_nofail {
        let without = base
            .with_fail_rule(false)
            .with_timeout(Some(opts.nofail_timeout))
            .with_node_budget(opts.nofail_budget);
        let (_, stats) =
            compose_gated_observed(s, t, views.0, views.1, &theory, &without, observer);
        out.nofail = match stats {
            Some(st) if !st.interrupted => NoFail::Completed {
                duration: st.elapsed,
                explored: st.explored,
            },
            _ => NoFail::Exceeded,
        };
    }
    out
}

fn reborrow<'b>(
    observer: &'b mut Option<&mut dyn SearchObserver>,
) -> Option<&'b mut dyn SearchObserver> {
    match observer {
        Some(o) => Some(&mut **o),
        None => None,
    }
}

/// Runs both variants of one interaction and partition.
pub fn run_case(
    name: &str,
    k: &Term,
    partition: &Partition,
    opts: &BenchOptions,
    seed: u64,
) -> Result<BenchRecord, String> {
    run_case_observed(name, k, partition, opts, seed, None)
}

/// [`run_case`] with a hook on every generalization search it runs.
pub fn run_case_observed(
    name: &str,
    k: &Term,
    partition: &Partition,
    opts: &BenchOptions,
    seed: u64,
    mut observer: Option<&mut dyn SearchObserver>,
) -> Result<BenchRecord, String> {
    let (i, j, gamma) = derive_tagging(k, &partition.0, &partition.1).map_err(|e| e.to_string())?;
    let theory = Theory::interactions();
    let (s, lambda_i) = abstract_with_gates(&i, Side::Left, &gamma);
    let (t, lambda_j) = abstract_with_gates(&j, Side::Right, &gamma);
    let views = (&lambda_i, &lambda_j);

    let s_norm = normalize(&s, &theory).into_term();
    let t_norm = normalize(&t, &theory).into_term();
    let norm = compose_variant(k, &s_norm, &t_norm, views, opts, reborrow(&mut observer));

    let s_mut = mutate_commutative(&s, &theory, opts.mutations, seed);
    let t_mut = mutate_commutative(&t, &theory, opts.mutations, seed.wrapping_add(1));
    let mutated = compose_variant(k, &s_mut, &t_mut, views, opts, observer);

    Ok(BenchRecord {
        name: name.to_string(),
        size_k: k.size(),
        partition: partition.clone(),
        n_gates: gamma.gates().len(),
        norm,
        mutated,
    })
}

/// Every partition case of one interaction.
pub fn run_interaction(
    name: &str,
    k: &Term,
    opts: &BenchOptions,
) -> Vec<Result<BenchRecord, String>> {
    let parts = near_balanced_partitions(&lifelines_of(k), opts.partitions, opts.seed);
    parts
        .iter()
        .enumerate()
        .map(|(n, p)| {
            let case_seed = opts.seed.wrapping_mul(31).wrapping_add(n as u64 * 2);
            run_case(&format!("{name}/p{n}"), k, p, opts, case_seed)
        })
        .collect()
}

#[derive(Debug, Default)]
pub struct BenchReport {
    pub records: Vec<BenchRecord>,
    /// Corpus entries that could not be read or run.
    pub errors: Vec<(String, String)>,
}

/// The `.int` files of a directory, sorted by name.
pub fn corpus_files(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "int"))
        .collect();
    files.sort();
    Ok(files)
}

pub fn run_bench(dir: &Path, opts: &BenchOptions) -> std::io::Result<BenchReport> {
    let mut report = BenchReport::default();
    for path in corpus_files(dir)? {
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) => {
                report.errors.push((name, e.to_string()));
                continue;
            }
        };
        let k = match parse_interaction(strip_comments(&text).trim(), false) {
            Ok(k) => k,
            Err(e) => {
                report.errors.push((name, e.to_string()));
                continue;
            }
        };
        for rec in run_interaction(&name, &k, opts) {
            match rec {
                Ok(r) => report.records.push(r),
                Err(e) => report.errors.push((name.clone(), e)),
            }
        }
    }
    report.records.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(report)
}

/// Drops `//` line comments from corpus files.
pub fn strip_comments(text: &str) -> String {
    text.lines()
        .map(|l| l.split("//").next().unwrap_or(""))
        .collect::<Vec<_>>()
        .join("\n")
}

pub const CSV_HEADER: &str = "name,size_k,n_gates,dur_norm_fail_ms,dur_norm_nofail_ms,dur_mut_fail_ms,dur_mut_nofail_ms,success,explored_fail,explored_nofail";

fn ms(d: Duration) -> String {
    format!("{:.3}", d.as_secs_f64() * 1000.0)
}

pub fn to_csv(records: &[BenchRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        let nofail = |v: &VariantResult| v.nofail.csv_duration();
        let explored_nofail = match (r.norm.nofail, r.mutated.nofail) {
            (NoFail::Completed { explored: a, .. }, NoFail::Completed { explored: b, .. }) => {
                (a + b).to_string()
            }
            (NoFail::Skipped, _) | (_, NoFail::Skipped) => "skipped".into(),
            _ => "timeout".into(),
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.name,
            r.size_k,
            r.n_gates,
            ms(r.norm.duration_fail),
            nofail(&r.norm),
            ms(r.mutated.duration_fail),
            nofail(&r.mutated),
            r.success(),
            r.norm.explored_fail + r.mutated.explored_fail,
            explored_nofail
        );
    }
    out
}
