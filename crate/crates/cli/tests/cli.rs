use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::OnceLock;

use domaininfer::pddl::parse_domain;
use domaininfer::taskgen::Task;
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_domaininfer"))
}

struct Out {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run(args: &[&str]) -> Out {
    let o = bin().args(args).output().expect("binary runs");
    Out {
        code: o.status.code().expect("exit code"),
        stdout: String::from_utf8_lossy(&o.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&o.stderr).into_owned(),
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Full task generation plus a trained checkpoint, built once per test run.
fn fixture() -> &'static Path {
    static DIR: OnceLock<PathBuf> = OnceLock::new();
    DIR.get_or_init(|| {
        let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli-fixture");
        let _ = std::fs::remove_dir_all(&dir);
        let out = run(&["taskgen", "--seed", "11", "--per-count", "1", "-o", s(&dir)]);
        assert_eq!(out.code, 0, "{}", out.stderr);
        let data = dir.join("basic.dataset.jsonl");
        let out = run(&["train", "--seed", "7", "--dataset", s(&data), "-o", s(&dir.join("model"))]);
        assert_eq!(out.code, 0, "{}", out.stderr);
        dir
    })
}

fn checkpoint() -> PathBuf {
    fixture().join("model/checkpoint.json")
}

fn names(domain: &Path) -> (BTreeSet<String>, BTreeSet<String>) {
    let d = parse_domain(&std::fs::read_to_string(domain).unwrap()).unwrap();
    (d.predicates.keys().cloned().collect(), d.actions.keys().cloned().collect())
}

fn files_under(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p);
            }
        }
    }
    out.sort();
    out
}

#[test]
fn taskgen_manifest_lists_every_file() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "taskgen", "--seed", "4", "--tasks", "stacking,hanoi,labeling", "--per-task", "3", "--per-count", "2",
        "--validation-size", "2", "-o", s(tmp.path()),
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let manifest: Value = serde_json::from_str(&std::fs::read_to_string(tmp.path().join("manifest.json")).unwrap()).unwrap();
    let files = manifest["files"].as_array().unwrap();
    // universe + dataset, then per task: ground truth, demo, demo problem, 2 validation, 2 per suite count
    let per_task = |t: Task| 1 + 2 + 2 + 2 * t.suite_counts().count();
    let expected = 2 + per_task(Task::Stacking) + per_task(Task::Hanoi) + per_task(Task::Labeling);
    assert_eq!(files.len(), expected);
    assert_eq!(files_under(tmp.path()).len(), expected + 1);
    let dataset = files.iter().find(|f| f["kind"] == "dataset").unwrap();
    assert_eq!(dataset["count"], 6);
    assert!(files.iter().all(|f| f["seed"].is_u64()));
}

#[test]
fn taskgen_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let out = run(&["taskgen", "--seed", "9", "--tasks", "sorting,unstacking", "--per-task", "2", "--per-count", "1", "-o", s(d.path())]);
        assert_eq!(out.code, 0, "{}", out.stderr);
    }
    let fa = files_under(a.path());
    assert_eq!(fa.len(), files_under(b.path()).len());
    for f in fa {
        let rel = f.strip_prefix(a.path()).unwrap();
        assert_eq!(std::fs::read(&f).unwrap(), std::fs::read(b.path().join(rel)).unwrap(), "{}", rel.display());
    }
}

#[test]
fn stochastic_commands_need_a_seed() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(run(&["taskgen", "-o", s(tmp.path())]).code, 2);
    let data = fixture().join("basic.dataset.jsonl");
    assert_eq!(run(&["train", "--dataset", s(&data), "-o", s(tmp.path())]).code, 2);
}

#[test]
fn config_file_with_flag_override() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.json");
    std::fs::write(&cfg, r#"{"seed": 5, "tasks": ["painting"], "per_task": 2, "per_count": 1}"#).unwrap();
    let out_dir = tmp.path().join("gen");
    let out = run(&["taskgen", "--config", s(&cfg), "--seed", "6", "-o", s(&out_dir)]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let manifest: Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 6);
    assert!(out_dir.join("ground_truth/painting.pddl").exists());
    assert!(!out_dir.join("ground_truth/stacking.pddl").exists());

    std::fs::write(&cfg, r#"{"seed": 5, "colour": "red"}"#).unwrap();
    assert_eq!(run(&["taskgen", "--config", s(&cfg), "-o", s(&out_dir)]).code, 2);
}

#[test]
fn missing_input_is_an_input_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&["train", "--seed", "1", "--dataset", "/nonexistent/data.jsonl", "-o", s(tmp.path())]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("no such file"));
}

#[test]
fn training_is_seed_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let data = fixture().join("basic.dataset.jsonl");
    let mut checkpoints = Vec::new();
    for (i, seed) in ["3", "3", "4"].iter().enumerate() {
        let dir = tmp.path().join(format!("m{i}"));
        let out = run(&["train", "--seed", seed, "--epochs", "3", "--dataset", s(&data), "-o", s(&dir)]);
        assert_eq!(out.code, 0, "{}", out.stderr);
        checkpoints.push(std::fs::read(dir.join("checkpoint.json")).unwrap());
        let metrics: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("metrics.json")).unwrap()).unwrap();
        assert_eq!(metrics["predicates"]["train_loss"].as_array().unwrap().len(), 3);
    }
    assert_eq!(checkpoints[0], checkpoints[1]);
    assert_ne!(checkpoints[0], checkpoints[2]);
}

#[test]
fn trained_estimator_separates_held_out_examples() {
    let metrics: Value =
        serde_json::from_str(&std::fs::read_to_string(fixture().join("model/metrics.json")).unwrap()).unwrap();
    for head in ["predicates", "actions"] {
        let acc = metrics[head]["validation_accuracy"].as_f64().unwrap();
        assert!(acc >= 0.9, "{head} held-out accuracy {acc}");
    }
}

#[test]
fn diverging_training_has_its_own_exit_code() {
    let tmp = tempfile::tempdir().unwrap();
    let data = fixture().join("basic.dataset.jsonl");
    let out = run(&["train", "--seed", "1", "--epochs", "2", "--learning-rate", "1e300", "--dataset", s(&data), "-o", s(tmp.path())]);
    assert_eq!(out.code, 6, "{}", out.stderr);
    assert!(out.stderr.contains("non-finite"));
}

#[test]
fn infer_stacking_recovers_ground_truth() {
    let fx = fixture();
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "infer", "--demos", s(&fx.join("demos/stacking.traj.jsonl")), "--validation", s(&fx.join("validation/stacking")),
        "--checkpoint", s(&checkpoint()), "-o", s(tmp.path()),
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert_eq!(names(&tmp.path().join("domain.pddl")), names(&fx.join("ground_truth/stacking.pddl")));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(tmp.path().join("report.json")).unwrap()).unwrap();
    for key in ["ledger", "omega_top", "omega_optm", "expansion_ledger", "contraction_ledger"] {
        assert!(report.get(key).is_some(), "report lacks {key}");
    }
    assert_eq!(report["outcome"], "optimal");
    assert_eq!(report["validation_problems"], 5);
}

#[test]
fn infer_composed_task_with_basic_estimator() {
    let fx = fixture();
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "infer", "--demos", s(&fx.join("demos/labeling.traj.jsonl")), "--validation", s(&fx.join("validation/labeling")),
        "--checkpoint", s(&checkpoint()), "-o", s(tmp.path()),
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(tmp.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["outcome"], "optimal");
    assert!(!report["added"].as_array().unwrap().is_empty(), "labeling needs elements beyond the top set");
    assert!(report["expansion_ledger"]["planner_calls"].as_u64().unwrap() > 0);
    assert_eq!(names(&tmp.path().join("domain.pddl")), names(&fx.join("ground_truth/labeling.pddl")));
}

#[test]
fn infer_with_frequency_estimator() {
    let fx = fixture();
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "infer", "--estimator", "frequency", "--dataset", s(&fx.join("basic.dataset.jsonl")),
        "--demos", s(&fx.join("demos/painting.traj.jsonl")), "--validation", s(&fx.join("validation/painting")),
        "-o", s(tmp.path()),
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert_eq!(names(&tmp.path().join("domain.pddl")), names(&fx.join("ground_truth/painting.pddl")));
}

#[test]
fn infer_without_validation_problems_is_a_usage_error() {
    let fx = fixture();
    let tmp = tempfile::tempdir().unwrap();
    let empty = tmp.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    let out = run(&[
        "infer", "--demos", s(&fx.join("demos/stacking.traj.jsonl")), "--validation", s(&empty),
        "--checkpoint", s(&checkpoint()), "-o", s(tmp.path()),
    ]);
    assert_eq!(out.code, 2);
    assert!(!tmp.path().join("domain.pddl").exists());
}

#[test]
fn infer_reports_when_more_demonstrations_are_needed() {
    // stacking demonstrates pick and stack only; unstacking needs place
    let fx = fixture();
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "infer", "--demos", s(&fx.join("demos/stacking.traj.jsonl")), "--validation", s(&fx.join("validation/unstacking")),
        "--checkpoint", s(&checkpoint()), "-o", s(tmp.path()),
    ]);
    assert_eq!(out.code, 3, "{}", out.stderr);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(tmp.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["outcome"], "needs_more_demonstrations");
}

fn write_problem(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn plan_trivial_goal_is_empty() {
    let fx = fixture();
    let tmp = tempfile::tempdir().unwrap();
    let p = write_problem(
        tmp.path(),
        "done.pddl",
        "(define (problem done) (:domain universe) (:objects r - robot c1 - item left right - region)
           (:init (handempty r) (on_table c1) (clear c1) (at_region c1 left))
           (:goal (and (at_region c1 left))))",
    );
    let out = run(&["plan", s(&fx.join("ground_truth/sorting.pddl")), s(&p), "--project", "-o", s(tmp.path())]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert_eq!(out.stdout.trim(), "");
    let stats: Value = serde_json::from_str(&std::fs::read_to_string(tmp.path().join("plan_stats.json")).unwrap()).unwrap();
    assert_eq!(stats["length"], 0);
}

#[test]
fn plan_three_disc_hanoi_and_validate() {
    let fx = fixture();
    let tmp = tempfile::tempdir().unwrap();
    let problem = fx.join("suites/hanoi/n6_0.pddl");
    let domain = fx.join("ground_truth/hanoi.pddl");
    let out = run(&["plan", s(&domain), s(&problem), "--mode", "bfs", "-o", s(tmp.path())]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    // the optimal three-disc tower move takes 2^3 - 1 steps
    assert_eq!(out.stdout.lines().count(), 7);
    let plan = tmp.path().join("plan.txt");
    assert_eq!(run(&["validate", s(&domain), s(&problem), s(&plan)]).code, 0);
    let text = std::fs::read_to_string(&plan).unwrap();
    let truncated = write_problem(tmp.path(), "short.txt", &text.lines().take(6).collect::<Vec<_>>().join("\n"));
    let out = run(&["validate", s(&domain), s(&problem), s(&truncated)]);
    assert_eq!(out.code, 1);
}

#[test]
fn plan_without_a_key_action_is_unsolvable() {
    let fx = fixture();
    let tmp = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fx.join("ground_truth/stacking.pddl")).unwrap();
    let cut = text.find("(:action stack").expect("stack action present");
    let domain = write_problem(tmp.path(), "nostack.pddl", &format!("{})\n", &text[..cut]));
    let out = run(&["plan", "--project", s(&domain), s(&fx.join("suites/stacking/n3_0.pddl"))]);
    assert_eq!(out.code, 5, "{}", out.stderr);
}

#[test]
fn plan_budget_exhaustion() {
    let fx = fixture();
    let out = run(&["plan", s(&fx.join("ground_truth/hanoi.pddl")), s(&fx.join("suites/hanoi/n9_0.pddl")), "--max-expansions", "3"]);
    assert_eq!(out.code, 4, "{}", out.stderr);
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path).unwrap().lines().map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn bench_queries_table() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "bench", "--mode", "queries", "--tasks", "stacking", "--seed", "2", "--per-count", "1",
        "--checkpoint", s(&checkpoint()), "-o", s(tmp.path()),
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let rows = csv_rows(&tmp.path().join("bench_queries.csv"));
    assert_eq!(rows[0], ["task", "method", "run", "planner_calls", "expansions", "status", "seed"]);
    assert_eq!(rows.len(), 1 + 1 + 5 + 1 + 1);
    let calls = |method: &str| -> Vec<u64> { rows[1..].iter().filter(|r| r[1] == method).map(|r| r[3].parse().unwrap()).collect() };
    let ours = calls("optimize")[0];
    let mut rib = calls("rib");
    rib.sort_unstable();
    assert!(ours <= rib[2] && ours <= calls("contraction")[0] && ours <= calls("blind_hillclimb")[0]);
}

#[test]
fn bench_success_and_sweep_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "bench", "--mode", "success", "--tasks", "painting,hanoi", "--seed", "2", "--per-count", "2", "--jobs", "2",
        "--checkpoint", s(&checkpoint()), "-o", s(tmp.path()),
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let rows = csv_rows(&tmp.path().join("bench_success.csv"));
    assert_eq!(rows.len(), 1 + Task::Painting.suite_counts().count() + Task::Hanoi.suite_counts().count());
    assert!(rows[1..].iter().all(|r| r[3] == "2"));

    let out = run(&[
        "bench", "--mode", "sweep", "--format", "json", "--tasks", "stacking", "--seed", "2", "--per-count", "1",
        "--checkpoint", s(&checkpoint()), "-o", s(tmp.path()),
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let rows: Value = serde_json::from_str(&std::fs::read_to_string(tmp.path().join("bench_sweep.json")).unwrap()).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 5);
    assert!(rows[4]["rate"].as_f64().unwrap() >= rows[0]["rate"].as_f64().unwrap());
}

#[test]
fn bench_output_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (d, jobs) in [(&a, "1"), (&b, "3")] {
        let out = run(&[
            "bench", "--mode", "queries", "--tasks", "painting,washing,hanoi", "--seed", "8", "--per-count", "1",
            "--jobs", jobs, "--checkpoint", s(&checkpoint()), "-o", s(d.path()),
        ]);
        assert_eq!(out.code, 0, "{}", out.stderr);
    }
    assert_eq!(
        std::fs::read(a.path().join("bench_queries.csv")).unwrap(),
        std::fs::read(b.path().join("bench_queries.csv")).unwrap()
    );
}
