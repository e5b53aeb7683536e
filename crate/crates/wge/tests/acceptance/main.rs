//! Acceptance checks, one line per criterion.
//!
//! Runs without the libtest harness so the lines are printed as they finish.
//! Exits non-zero when any hard criterion fails. The two CoDEx-S criteria run
//! only when `CODEX_S_DIR` points at a directory with `train.txt`,
//! `valid.txt` and `test.txt`.

mod algebra;
mod desk;
mod gradients;
mod graphs;
mod overfit;
mod ranking;

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

pub enum Status {
    Pass(String),
    Fail(String),
    /// Soft criterion that did not hold; reported, not failed.
    Deviation(String),
    NotRun(String),
}

pub fn check(ok: bool, detail: String) -> Status {
    if ok {
        Status::Pass(detail)
    } else {
        Status::Fail(detail)
    }
}

/// Fails a passing status whose runtime exceeded `limit`.
pub fn within(status: Status, elapsed: Duration, limit: Duration) -> Status {
    match status {
        Status::Pass(d) if elapsed > limit => {
            Status::Fail(format!("{d}; took {:.1}s, limit {:.0}s", elapsed.as_secs_f64(), limit.as_secs_f64()))
        }
        s => s,
    }
}

fn run(id: u32, title: &str, f: impl FnOnce() -> Status) -> bool {
    let started = Instant::now();
    let status = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into());
        Status::Fail(msg)
    });
    let secs = started.elapsed().as_secs_f64();
    let (tag, detail, ok) = match status {
        Status::Pass(d) => ("PASS", d, true),
        Status::Fail(d) => ("FAIL", d, false),
        Status::Deviation(d) => ("DEVIATION", d, true),
        Status::NotRun(d) => ("NOT RUN", d, true),
    };
    println!("[{tag}] criterion {id}: {title}: {detail} ({secs:.2}s)");
    ok
}

fn main() -> ExitCode {
    // Accepts and ignores libtest arguments such as test-name filters.
    let results = [
        run(1, "quaternion algebra", algebra::criterion),
        run(2, "gradient correctness", gradients::criterion),
        run(3, "graph construction oracles", graphs::criterion),
        run(4, "filtered ranking oracle", ranking::criterion),
        run(5, "toy overfit", overfit::criterion),
        run(6, "CoDEx-S desk run", desk::desk_run),
        run(7, "CoDEx-S ablation trend", desk::ablation_trend),
    ];
    if results.iter().all(|&ok| ok) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
