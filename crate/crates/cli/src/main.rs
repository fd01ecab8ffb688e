use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use scpau_core::antiunify::{generalize, GenOptions, GenResult, Mode};
use scpau_core::bench::{run_bench, strip_comments, to_csv, BenchOptions};
use scpau_core::equational::mutate_commutative;
use scpau_core::interaction::{compose, derive_tagging, project, InteractionError};
use scpau_core::oracle::{maximal_elements, oracle_cpg};
use scpau_core::textio::{
    parse_interaction, parse_tagging, parse_term, parse_theory, render_interaction, render_tagging,
    render_term,
};
use scpau_core::{eq_modulo, normalize, Term, Theory};

const SEED_VAR: &str = "SCPAU_SEED";

#[derive(Parser)]
#[command(
    name = "scpau",
    version,
    about = "Special-constant-preserving anti-unification and interaction composition"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generalize two ground terms.
    Generalize {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
        #[command(flatten)]
        theory: TheoryArgs,
        #[arg(long, value_enum, default_value_t = ModeArg::Maximal)]
        mode: ModeArg,
        /// Disable the Fail rule.
        #[arg(long)]
        no_fail: bool,
        #[arg(long, default_value_t = 60.0)]
        timeout: f64,
    },
    /// Compose two interactions along a tagging.
    Compose {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
        #[arg(long)]
        tagging: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = 60.0)]
        timeout: f64,
    },
    /// Project an interaction onto a set of lifelines.
    Project {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_delimiter = ',')]
        lifelines: Vec<String>,
    },
    /// Print the normal form of a term.
    Normalize {
        #[arg(long = "in")]
        input: PathBuf,
        #[command(flatten)]
        theory: TheoryArgs,
    },
    /// Decide equality modulo the theory; exits with 1 when not equal.
    Eq {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
        #[command(flatten)]
        theory: TheoryArgs,
    },
    /// Apply random commutativity rewrites.
    Mutate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 7)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        theory: TheoryArgs,
    },
    /// Split an interaction into two views and tag the crossing messages.
    DeriveTagging {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_delimiter = ',')]
        part1: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        part2: Vec<String>,
        /// Write the views and the tagging to `left.int`, `right.int` and
        /// `tagging.tag` in this directory instead of printing them.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Run the composition benchmark over a directory of `.int` files.
    Bench {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, default_value_t = 5)]
        partitions: usize,
        #[arg(long, default_value_t = 7)]
        mutations: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 60.0)]
        timeout: f64,
        /// Node budget of the runs without the Fail rule.
        #[arg(long)]
        nofail_budget: Option<usize>,
        /// Skip the runs without the Fail rule.
        #[arg(long)]
        skip_nofail: bool,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Enumerate the syntactic generalizations by brute force.
    Oracle {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
        #[arg(long, default_value_t = 12)]
        max_size: usize,
    },
}

#[derive(Args)]
struct TheoryArgs {
    /// Theory file.
    #[arg(long, conflicts_with = "builtin")]
    theory: Option<PathBuf>,
    /// Builtin theory; `.int` inputs default to `interactions`.
    #[arg(long, value_enum)]
    builtin: Option<Builtin>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Builtin {
    Interactions,
    Empty,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    First,
    All,
    Maximal,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::First => Mode::First,
            ModeArg::All => Mode::All,
            ModeArg::Maximal => Mode::Maximal,
        }
    }
}

/// Non-error results, mapped to exit codes 0, 1 and 2.
enum Status {
    Success,
    Negative,
    Timeout,
}

impl From<Status> for ExitCode {
    fn from(s: Status) -> ExitCode {
        match s {
            Status::Success => ExitCode::SUCCESS,
            Status::Negative => ExitCode::from(1),
            Status::Timeout => ExitCode::from(2),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(status) => status.into(),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}

fn is_interaction_file(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "int")
}

fn read(path: &Path) -> Result<String> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(strip_comments(&text))
}

/// `.int` files are read as interactions (gates and variables allowed),
/// anything else as plain terms.
fn read_term(path: &Path) -> Result<Term> {
    let text = read(path)?;
    let parsed = if is_interaction_file(path) {
        parse_interaction(text.trim(), true)
    } else {
        parse_term(text.trim())
    };
    parsed.with_context(|| format!("parsing {}", path.display()))
}

fn read_interaction(path: &Path) -> Result<Term> {
    let text = read(path)?;
    parse_interaction(text.trim(), false).with_context(|| format!("parsing {}", path.display()))
}

fn render(t: &Term, interaction: bool) -> String {
    if interaction {
        render_interaction(t)
    } else {
        render_term(t)
    }
}

fn load_theory(args: &TheoryArgs, inputs: &[&Path]) -> Result<Theory> {
    if let Some(path) = &args.theory {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        return parse_theory(&text).with_context(|| format!("parsing {}", path.display()));
    }
    Ok(match args.builtin {
        Some(Builtin::Interactions) => Theory::interactions(),
        Some(Builtin::Empty) => Theory::empty(),
        None if inputs.iter().all(|p| is_interaction_file(p)) => Theory::interactions(),
        None => Theory::empty(),
    })
}

fn seconds(s: f64) -> Result<Duration> {
    Duration::try_from_secs_f64(s).context("invalid timeout")
}

fn seed_override(seed: u64) -> Result<u64> {
    match std::env::var(SEED_VAR) {
        Ok(v) => v
            .trim()
            .parse()
            .with_context(|| format!("invalid {SEED_VAR}")),
        Err(_) => Ok(seed),
    }
}

fn lifeline_set(names: &[String]) -> BTreeSet<String> {
    names
        .iter()
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

/// Prints `r` and its witnesses with the variable names used in `r`.
fn print_generalization(
    r: &Term,
    left: &scpau_core::Substitution,
    right: &scpau_core::Substitution,
    interaction: bool,
) {
    println!("{}", render(r, interaction));
    let mut order = Vec::new();
    for v in r.vars_in_order() {
        if !order.contains(&v) {
            order.push(v);
        }
    }
    for (n, v) in order.iter().enumerate() {
        let show = |s: &scpau_core::Substitution| {
            s.get(*v)
                .map(|t| render(t, interaction))
                .unwrap_or_default()
        };
        println!("  ?x{n} = {} / {}", show(left), show(right));
    }
}

fn run(command: Command) -> Result<Status> {
    match command {
        Command::Generalize {
            left,
            right,
            theory,
            mode,
            no_fail,
            timeout,
        } => {
            let theory = load_theory(&theory, &[&left, &right])?;
            let interaction = is_interaction_file(&left);
            let (s, t) = (read_term(&left)?, read_term(&right)?);
            let opts = GenOptions::default()
                .with_mode(mode.into())
                .with_fail_rule(!no_fail)
                .with_timeout(Some(seconds(timeout)?));
            let outcome = generalize(&s, &t, &theory, &opts)?;
            eprintln!(
                "explored {} configurations in {:.3} ms",
                outcome.stats.explored,
                outcome.stats.elapsed.as_secs_f64() * 1000.0
            );
            match outcome.result {
                GenResult::Solutions(sols) => {
                    for g in &sols {
                        print_generalization(&g.term, &g.left, &g.right, interaction);
                    }
                    Ok(Status::Success)
                }
                GenResult::Failure(blocking) => {
                    println!("no generalization; blocking pairs:");
                    for (a, b) in &blocking {
                        println!("  {} / {}", render(a, interaction), render(b, interaction));
                    }
                    Ok(Status::Negative)
                }
                GenResult::Timeout => {
                    println!("timeout");
                    Ok(Status::Timeout)
                }
            }
        }
        Command::Compose {
            left,
            right,
            tagging,
            output,
            timeout,
        } => {
            let (i, j) = (read_interaction(&left)?, read_interaction(&right)?);
            let text = std::fs::read_to_string(&tagging)
                .with_context(|| format!("reading {}", tagging.display()))?;
            let gamma =
                parse_tagging(&text).with_context(|| format!("parsing {}", tagging.display()))?;
            let opts = GenOptions::default().with_timeout(Some(seconds(timeout)?));
            match compose(&i, &j, &gamma, &Theory::interactions(), &opts) {
                Ok(c) => {
                    let text = render_interaction(&c.k);
                    match output {
                        Some(path) => std::fs::write(&path, format!("{text}\n"))
                            .with_context(|| format!("writing {}", path.display()))?,
                        None => println!("{text}"),
                    }
                    Ok(Status::Success)
                }
                Err(InteractionError::NoComposition(blocking)) => {
                    println!("no composition; blocking pairs:");
                    for (a, b) in &blocking {
                        println!("  {} / {}", render_interaction(a), render_interaction(b));
                    }
                    Ok(Status::Negative)
                }
                Err(InteractionError::Unsound) => {
                    println!("{}", InteractionError::Unsound);
                    Ok(Status::Negative)
                }
                Err(InteractionError::Timeout) => {
                    println!("timeout");
                    Ok(Status::Timeout)
                }
                Err(e) => Err(e.into()),
            }
        }
        Command::Project { input, lifelines } => {
            let k = read_interaction(&input)?;
            println!(
                "{}",
                render_interaction(&project(&k, &lifeline_set(&lifelines)))
            );
            Ok(Status::Success)
        }
        Command::Normalize { input, theory } => {
            let theory = load_theory(&theory, &[&input])?;
            let t = read_term(&input)?;
            println!(
                "{}",
                render(
                    &normalize(&t, &theory).into_term(),
                    is_interaction_file(&input)
                )
            );
            Ok(Status::Success)
        }
        Command::Eq {
            left,
            right,
            theory,
        } => {
            let theory = load_theory(&theory, &[&left, &right])?;
            let equal = eq_modulo(&read_term(&left)?, &read_term(&right)?, &theory);
            println!("{}", if equal { "equal" } else { "not equal" });
            Ok(if equal {
                Status::Success
            } else {
                Status::Negative
            })
        }
        Command::Mutate {
            input,
            count,
            seed,
            theory,
        } => {
            let theory = load_theory(&theory, &[&input])?;
            let t = read_term(&input)?;
            let m = mutate_commutative(&t, &theory, count, seed_override(seed)?);
            println!("{}", render(&m, is_interaction_file(&input)));
            Ok(Status::Success)
        }
        Command::DeriveTagging {
            input,
            part1,
            part2,
            out_dir,
        } => {
            let k = read_interaction(&input)?;
            let (p1, p2) = (lifeline_set(&part1), lifeline_set(&part2));
            let (i, j, gamma) = derive_tagging(&k, &p1, &p2)?;
            let (i, j, gamma) = (
                render_interaction(&i),
                render_interaction(&j),
                render_tagging(&gamma),
            );
            match out_dir {
                Some(dir) => {
                    std::fs::create_dir_all(&dir)
                        .with_context(|| format!("creating {}", dir.display()))?;
                    for (name, text) in [
                        ("left.int", format!("{i}\n")),
                        ("right.int", format!("{j}\n")),
                        ("tagging.tag", gamma),
                    ] {
                        let path = dir.join(name);
                        std::fs::write(&path, text)
                            .with_context(|| format!("writing {}", path.display()))?;
                    }
                }
                None => {
                    println!("{i}\n{j}");
                    print!("{gamma}");
                }
            }
            Ok(Status::Success)
        }
        Command::Bench {
            dir,
            partitions,
            mutations,
            seed,
            timeout,
            nofail_budget,
            skip_nofail,
            report,
        } => {
            let timeout = seconds(timeout)?;
            let opts = BenchOptions {
                partitions,
                mutations,
                timeout,
                nofail_timeout: timeout,
                nofail_budget,
                run_nofail: !skip_nofail,
                seed: seed_override(seed)?,
                ..BenchOptions::default()
            };
            let result =
                run_bench(&dir, &opts).with_context(|| format!("reading {}", dir.display()))?;
            for (name, e) in &result.errors {
                eprintln!("{name}: {e}");
            }
            let csv = to_csv(&result.records);
            match report {
                Some(path) => std::fs::write(&path, csv)
                    .with_context(|| format!("writing {}", path.display()))?,
                None => print!("{csv}"),
            }
            let ok = result.records.iter().filter(|r| r.success()).count();
            eprintln!("{ok}/{} cases recomposed exactly", result.records.len());
            Ok(Status::Success)
        }
        Command::Oracle {
            left,
            right,
            max_size,
        } => {
            let (s, t) = (read_term(&left)?, read_term(&right)?);
            if !s.is_ground() || !t.is_ground() {
                bail!("oracle inputs must be ground");
            }
            let all = oracle_cpg(&s, &t, max_size)?;
            if all.is_empty() {
                println!("no generalization");
                return Ok(Status::Negative);
            }
            let top: BTreeSet<Term> = maximal_elements(&all).into_iter().collect();
            for r in &all {
                let mark = if top.contains(r) { "*" } else { " " };
                println!("{mark} {}", render_term(r));
            }
            Ok(Status::Success)
        }
    }
}
