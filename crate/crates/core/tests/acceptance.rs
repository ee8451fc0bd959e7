use std::io::Write;

use bounce_lab::acceptance::{run_criterion, AcceptanceOptions, Status, CRITERIA};

#[test]
fn acceptance_suite() {
    let options = AcceptanceOptions::default();
    let mut failed = Vec::new();
    for c in &CRITERIA {
        let result = run_criterion(c, &options);
        writeln!(std::io::stderr().lock(), "{result}").unwrap();
        if result.status != Status::Pass {
            failed.push(c.id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
