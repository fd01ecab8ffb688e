use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn scpau() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_scpau"));
    cmd.env_remove("SCPAU_SEED");
    cmd
}

fn corpus(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../corpus")
        .join(name)
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn run(cmd: &mut Command) -> (i32, String) {
    let out = cmd.output().unwrap();
    (out.status.code().unwrap(), stdout(&out))
}

#[test]
fn generalize_prints_lgg_and_witnesses() {
    let dir = TempDir::new().unwrap();
    let s = write(&dir, "s.term", "f(#a, g(u, u))\n");
    let t = write(&dir, "t.term", "f(#a, g(v, v))\n");
    let (code, out) = run(scpau()
        .args(["generalize", "--left"])
        .arg(&s)
        .arg("--right")
        .arg(&t));
    assert_eq!(code, 0);
    assert_eq!(out, "f(#a, g(?x0, ?x0))\n  ?x0 = u / v\n");
}

#[test]
fn generalize_reports_blocking_pairs() {
    let dir = TempDir::new().unwrap();
    let s = write(&dir, "s.term", "f(#a, g(#b, u))");
    let t = write(&dir, "t.term", "f(#a, g(v, #b))");
    let (code, out) = run(scpau()
        .args(["generalize", "--left"])
        .arg(&s)
        .arg("--right")
        .arg(&t));
    assert_eq!(code, 1);
    assert!(out.contains("#b / v") && out.contains("u / #b"), "{out}");
}

#[test]
fn generalize_commutative_theory_file() {
    let dir = TempDir::new().unwrap();
    let s = write(&dir, "s.term", "f(#a, g(#b, u))");
    let t = write(&dir, "t.term", "f(#a, g(v, #b))");
    let thy = write(&dir, "c.thy", "# g is commutative\ng : comm\n");
    let (code, out) = run(scpau()
        .args(["generalize", "--left"])
        .arg(&s)
        .arg("--right")
        .arg(&t)
        .arg("--theory")
        .arg(&thy));
    assert_eq!(code, 0);
    assert!(
        out.starts_with("f(#a, g(#b, ?x0))\n") || out.starts_with("f(#a, g(?x0, #b))\n"),
        "{out}"
    );
}

#[test]
fn adversarial_pair_times_out_without_fail() {
    let left = corpus("adversarial/left.int");
    let right = corpus("adversarial/right.int");
    let (code, _) = run(scpau()
        .args(["generalize", "--left"])
        .arg(&left)
        .arg("--right")
        .arg(&right));
    assert_eq!(code, 1);
    let (code, out) = run(scpau()
        .args(["generalize", "--no-fail", "--timeout", "0.2", "--left"])
        .arg(&left)
        .arg("--right")
        .arg(&right));
    assert_eq!(code, 2);
    assert_eq!(out, "timeout\n");
}

#[test]
fn derive_compose_round_trip() {
    let dir = TempDir::new().unwrap();
    let views = dir.path().join("views");
    let (code, _) = run(scpau()
        .args(["derive-tagging", "--in"])
        .arg(corpus("fig1.int"))
        .args(["--part1", "tc", "--part2", "dc,ss", "--out-dir"])
        .arg(&views));
    assert_eq!(code, 0);
    let k = dir.path().join("k.int");
    let (code, _) = run(scpau()
        .args(["compose", "--left"])
        .arg(views.join("left.int"))
        .arg("--right")
        .arg(views.join("right.int"))
        .arg("--tagging")
        .arg(views.join("tagging.tag"))
        .arg("-o")
        .arg(&k));
    assert_eq!(code, 0);
    let (code, out) = run(scpau()
        .args(["eq", "--left"])
        .arg(&k)
        .arg("--right")
        .arg(corpus("fig1.int")));
    assert_eq!((code, out.as_str()), (0, "equal\n"));

    let (code, out) = run(scpau()
        .args(["project", "--lifelines", "tc", "--in"])
        .arg(&k));
    assert_eq!(code, 0);
    let projected = write(&dir, "p.int", &out);
    let (code, _) = run(scpau()
        .args(["eq", "--left"])
        .arg(&projected)
        .arg("--right")
        .arg(views.join("left.int")));
    assert_eq!(code, 0);
}

#[test]
fn compose_rejects_shared_lifelines() {
    let dir = TempDir::new().unwrap();
    let i = write(&dir, "i.int", "a!m");
    let tag = write(&dir, "t.tag", "");
    let (code, _) = run(scpau()
        .args(["compose", "--left"])
        .arg(&i)
        .arg("--right")
        .arg(&i)
        .arg("--tagging")
        .arg(&tag));
    assert_eq!(code, 3);
}

#[test]
fn eq_and_normalize_modulo_interactions() {
    let dir = TempDir::new().unwrap();
    let a = write(&dir, "a.int", "par(a!m, seq(0, b?m))");
    let b = write(&dir, "b.int", "par(b?m, a!m)");
    let c = write(&dir, "c.int", "seq(b?m, a!m)");
    assert_eq!(
        run(scpau()
            .args(["eq", "--left"])
            .arg(&a)
            .arg("--right")
            .arg(&b))
        .0,
        0
    );
    assert_eq!(
        run(scpau()
            .args(["eq", "--left"])
            .arg(&a)
            .arg("--right")
            .arg(&c)),
        (1, "not equal\n".into())
    );
    let (code, n1) = run(scpau().args(["normalize", "--in"]).arg(&a));
    let (_, n2) = run(scpau().args(["normalize", "--in"]).arg(&b));
    assert_eq!(code, 0);
    assert_eq!(n1, n2);
}

#[test]
fn input_errors_exit_with_3() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.term", "f(u,");
    assert_eq!(run(scpau().args(["normalize", "--in"]).arg(&bad)).0, 3);
    assert_eq!(
        run(scpau()
            .args(["normalize", "--in"])
            .arg(dir.path().join("missing.term")))
        .0,
        3
    );
    let self_loop = write(&dir, "loop.int", "vp(a, m, a)");
    assert_eq!(
        run(scpau().args(["normalize", "--in"]).arg(&self_loop)).0,
        3
    );
}

#[test]
fn seed_variable_overrides_flag() {
    let input = corpus("travel_synth.int");
    let with_flag = run(scpau()
        .args(["mutate", "--count", "7", "--seed", "11", "--in"])
        .arg(&input));
    let with_env = run(scpau()
        .env("SCPAU_SEED", "11")
        .args(["mutate", "--count", "7", "--seed", "3", "--in"])
        .arg(&input));
    assert_eq!(with_flag.0, 0);
    assert_eq!(with_flag, with_env);
}

#[test]
fn oracle_marks_maximal_elements() {
    let dir = TempDir::new().unwrap();
    let s = write(&dir, "s.term", "f(#a, g(u, u))");
    let t = write(&dir, "t.term", "f(#a, g(v, v))");
    let (code, out) = run(scpau()
        .args(["oracle", "--max-size", "8", "--left"])
        .arg(&s)
        .arg("--right")
        .arg(&t));
    assert_eq!(code, 0);
    let top: Vec<&str> = out.lines().filter(|l| l.starts_with('*')).collect();
    assert_eq!(top, vec!["* f(#a, g(?x0, ?x0))"]);
}

#[test]
fn bench_writes_csv_report() {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("corpus");
    std::fs::create_dir(&data).unwrap();
    std::fs::copy(corpus("fig1.int"), data.join("fig1.int")).unwrap();
    std::fs::write(data.join("broken.int"), "seq(").unwrap();
    let report = dir.path().join("out.csv");
    let out = scpau()
        .args(["bench", "--partitions", "2", "--timeout", "10", "--dir"])
        .arg(&data)
        .arg("--report")
        .arg(&report)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("broken"));
    let csv = std::fs::read_to_string(&report).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "name,size_k,n_gates,dur_norm_fail_ms,dur_norm_nofail_ms,dur_mut_fail_ms,dur_mut_nofail_ms,success,explored_fail,explored_nofail");
    assert_eq!(lines.len(), 3);
    assert!(lines[1..]
        .iter()
        .all(|l| l.starts_with("fig1/p") && l.contains(",true,")));
}
