//! Acceptance suite on the shipped configuration. Prints one PASS/FAIL line
//! per criterion, then fails if any criterion failed.
//!
//! Lines go to the raw stdout handle so they show up without `--nocapture`.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use burgerlab::{run_suite, Check, ExperimentConfig, SuiteOutcome};

struct Criterion {
    id: usize,
    title: &'static str,
    suite: &'static str,
    prefixes: &'static [&'static str],
}

const CRITERIA: [Criterion; 9] = [
    Criterion { id: 1, title: "forcing covariance matches closed form", suite: "covariance", prefixes: &["covariance."] },
    Criterion { id: 2, title: "exact discrete structure", suite: "structure", prefixes: &["structure."] },
    Criterion { id: 3, title: "moment and gradient bounds", suite: "moments", prefixes: &["moments."] },
    Criterion { id: 4, title: "growth curve from heights and polymers", suite: "gamma", prefixes: &["pde.", "polymer.", "cross."] },
    Criterion { id: 5, title: "crossing dissipation inequality", suite: "structure", prefixes: &["dissipation."] },
    Criterion { id: 6, title: "shear invariance", suite: "shear", prefixes: &["shear."] },
    Criterion { id: 7, title: "stability inside the sandwich", suite: "stability", prefixes: &["stability."] },
    Criterion { id: 8, title: "ordering of stationary pairs", suite: "ordering", prefixes: &["ordering."] },
    Criterion { id: 9, title: "Cole-Hopf refinement ladder", suite: "ladder", prefixes: &["ladder."] },
];

fn say(line: String) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
}

fn worst(checks: &[&Check]) -> String {
    match checks.iter().find(|c| !c.pass).or(checks.first()) {
        Some(c) => format!("{} = {:.4e} (threshold {:.4e})", c.name, c.value, c.threshold),
        None => "no checks".into(),
    }
}

#[test]
fn acceptance() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/default.json");
    let cfg = ExperimentConfig::load(&path).expect("shipped config loads");

    let mut outcomes: Vec<(&str, SuiteOutcome)> = vec![];
    let mut results = vec![];
    for c in &CRITERIA {
        if !outcomes.iter().any(|(s, _)| *s == c.suite) {
            let start = Instant::now();
            let outcome = run_suite(c.suite, &cfg).unwrap_or_else(|e| panic!("suite {} errored: {e}", c.suite));
            say(format!("suite {} finished in {:.1}s", c.suite, start.elapsed().as_secs_f64()));
            outcomes.push((c.suite, outcome));
        }
        let outcome = &outcomes.iter().find(|(s, _)| *s == c.suite).unwrap().1;
        let checks: Vec<&Check> =
            c.prefixes.iter().flat_map(|p| outcome.checks_under(p)).collect();
        let pass = !checks.is_empty() && checks.iter().all(|k| k.pass);
        say(format!(
            "criterion {} {:<40} {} [{} checks; {}]",
            c.id,
            c.title,
            if pass { "PASS" } else { "FAIL" },
            checks.len(),
            worst(&checks)
        ));
        results.push((c.id, pass));
    }
    let failed: Vec<usize> = results.iter().filter(|(_, p)| !p).map(|(id, _)| *id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
