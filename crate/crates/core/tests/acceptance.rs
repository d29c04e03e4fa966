use std::process::ExitCode;

use wva_core::verify::{run_all, VerifyOptions};

fn main() -> ExitCode {
    let report = run_all(&VerifyOptions::default());
    for criterion in &report.criteria {
        let verdict = if criterion.passed { "PASS" } else { "FAIL" };
        println!(
            "{verdict} criterion {:>2}: {} ({:.2} s)",
            criterion.id, criterion.title, criterion.elapsed_s
        );
        for check in &criterion.checks {
            let mark = if check.passed { "ok  " } else { "FAIL" };
            println!(
                "       {mark} {}: expected {}, got {} [{}]",
                check.name, check.expected, check.actual, check.tolerance
            );
        }
    }
    let failed = report.criteria.iter().filter(|c| !c.passed).count();
    println!(
        "acceptance: {} of {} criteria passed in {:.2} s",
        report.criteria.len() - failed,
        report.criteria.len(),
        report.elapsed_s
    );
    if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
