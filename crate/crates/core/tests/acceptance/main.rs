//! Acceptance criteria, one PASS/FAIL line each.
//!
//! `cargo test --test acceptance -- 1 6` runs a subset. Failing criteria are
//! reported without failing the run unless `TOMOSET_STRICT_ACCEPTANCE` is set.

mod criteria;
mod oracle;
mod properties;

use std::process::ExitCode;
use std::time::Instant;

pub type Outcome = Result<String, String>;

pub fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn main() -> ExitCode {
    let selected: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let all: [(usize, &str, fn() -> Outcome); 9] = [
        (1, "disc-model oracle", criteria::disc_model),
        (2, "informationally complete short-circuit", criteria::complete_data),
        (3, "two-qubit gamma trend", criteria::fig1_gamma),
        (4, "two-qubit detection ratio", criteria::fig1_detection),
        (5, "witness soundness on product states", criteria::witness_soundness),
        (6, "singlet certification", criteria::singlet),
        (7, "Bloch-ball oracle equivalence", criteria::bloch_oracle),
        (8, "pattern search against steepest ascent", criteria::fig2),
        (9, "invariant suite", properties::run),
    ];
    let mut failed = 0;
    for (id, name, run) in all {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let t0 = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = t0.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {id} {name}: PASS ({secs:.1} s) {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {id} {name}: FAIL ({secs:.1} s) {detail}");
            }
        }
    }
    println!("acceptance: {failed} failing");
    if failed > 0 && std::env::var_os("TOMOSET_STRICT_ACCEPTANCE").is_some() {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
