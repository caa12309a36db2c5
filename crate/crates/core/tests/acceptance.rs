//! Runs every acceptance criterion and prints one PASS/FAIL line each.

use gmn::acceptance;

#[test]
fn acceptance() {
    let results = acceptance::run(&[]);
    for r in &results {
        println!("{}", r.line());
    }
    let failed: Vec<u8> = results.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
