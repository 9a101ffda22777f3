//! Acceptance suite. Prints one verdict line per criterion and fails the
//! target if any criterion fails.

use std::process::ExitCode;

use polyshape_cli::selftest::run_reported;

fn main() -> ExitCode {
    let mut failed = 0;
    for id in 1..=11 {
        let r = run_reported(id);
        println!("{}", r.headline());
        if !r.passed {
            print!("{}", r.render());
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", 11 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
