//! Runs the ten acceptance criteria and prints one line per criterion.
//! Exits non-zero if any criterion fails.

use espider::check::run_all;

fn main() {
    let reports = run_all();
    for r in &reports {
        println!("{}", r.line());
    }
    let failed: Vec<u8> = reports.iter().filter(|r| !r.pass).map(|r| r.id).collect();
    println!(
        "acceptance: {} of {} criteria pass",
        reports.len() - failed.len(),
        reports.len()
    );
    if !failed.is_empty() {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
