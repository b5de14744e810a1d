//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test --release -p schmidt-cli --test acceptance -- --nocapture`
//! to see the report. A few criteria are not attainable as stated; they are
//! listed in `KNOWN_FAILURES`, still run and printed, and the test insists
//! that they still fail so the list cannot go stale silently.

use std::path::Path;
use std::process::Command;

use schmidt_core::constrained::{ftlue_density_fourier, ftlue_density_series, lue_poly_expansion};
use schmidt_core::verify::{run_criterion, CRITERIA};

const KNOWN_FAILURES: &[(u8, &str)] = &[
    (5, "one Monte Carlo bin at z = 3.9 under the fixed seed; 200 bins at a 3 s.e. cut fail about 40% of seeds"),
    (7, "u = 0.7 sits at 6.2e-2 for N = 200; the error decays like 12/N and reaches 5e-2 near N = 250"),
    (14, "8 terms cannot reach 1e-10 for a = 10 at x = 50 and 100; the truncated term alone is larger"),
];

fn known(id: u8) -> Option<&'static str> {
    KNOWN_FAILURES.iter().find(|(k, _)| *k == id).map(|(_, why)| *why)
}

fn schmidt(dir: &Path, threads: usize, args: &[&str], out: &str) -> Vec<u8> {
    let path = dir.join(out);
    let status = Command::new(env!("CARGO_BIN_EXE_schmidt"))
        .arg("--threads")
        .arg(threads.to_string())
        .args(args)
        .arg("--out")
        .arg(&path)
        .status()
        .expect("run schmidt");
    assert!(status.success(), "schmidt {args:?} failed with {status}");
    std::fs::read(&path).unwrap()
}

// Criterion 15 at the binary level: sampled outputs are byte-identical for
// any --threads.
fn cli_determinism() -> (bool, String) {
    let dir = tempfile::tempdir().unwrap();
    let runs: [&[&str]; 3] = [
        &["sample", "--n", "6", "--alpha", "1", "--constraint", "fixed", "--seed", "11", "--draws", "5000"],
        &[
            "density", "--n", "4", "--constraint", "bounded", "--grid", "0,1,41", "--seed", "12", "--draws", "20000",
        ],
        &["entropy", "--n", "4", "--m", "6", "--seed", "13", "--draws", "20000"],
    ];
    let mut identical = 0;
    for (i, args) in runs.iter().enumerate() {
        let one = schmidt(dir.path(), 1, args, &format!("{i}-1.csv"));
        let same = [3, 8].iter().all(|&k| schmidt(dir.path(), k, args, &format!("{i}-{k}.csv")) == one);
        identical += same as usize;
    }
    (identical == runs.len(), format!("cli sample/density/entropy byte-identical at --threads 1,3,8: {identical}/3"))
}

// The deterministic half of criterion 5, checked on its own so that a
// sampling fluctuation cannot hide a route disagreement.
fn route_agreement() -> (bool, String) {
    let mut worst: f64 = 0.0;
    for (n, alpha) in [(4usize, 0.0), (4, 1.0), (8, 0.0), (8, 1.0)] {
        let r = (n as f64 + alpha) / 4.0;
        let pe = lue_poly_expansion(n, alpha).unwrap();
        for i in 0..50 {
            let x = (i as f64 + 0.5) * r / 50.0;
            let gap = ftlue_density_series(&pe, r, x).unwrap() - ftlue_density_fourier(n, alpha, x).unwrap();
            worst = worst.max(gap.abs());
        }
    }
    (worst <= 1e-6, format!("series vs fourier at N=4,8, alpha=0,1: max gap {worst:.2e}"))
}

#[test]
fn acceptance() {
    let mut unexpected = Vec::new();
    for id in 1..=CRITERIA {
        let r = run_criterion(id);
        let verdict = if r.passed { "PASS" } else { "FAIL" };
        println!("[{verdict}] {id:>2} {} ({:.1}s): {}", r.title, r.seconds, r.detail);
        match (r.passed, known(id)) {
            (true, None) | (false, Some(_)) => {}
            (false, None) => unexpected.push(format!("criterion {id} failed: {}", r.detail)),
            (true, Some(_)) => unexpected.push(format!("criterion {id} now passes; drop it from KNOWN_FAILURES")),
        }
        if let (false, Some(why)) = (r.passed, known(id)) {
            println!("       known: {why}");
        }
    }
    for (label, (ok, detail)) in [("5a", route_agreement()), ("15b", cli_determinism())] {
        println!("[{}] {label:>3} {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            unexpected.push(format!("{label}: {detail}"));
        }
    }
    assert!(unexpected.is_empty(), "{}", unexpected.join("\n"));
}
