//! The numbered acceptance criteria, one line each. Run with
//! `cargo test -p ahlab-cli --test acceptance -- --nocapture` to see them.

use ahlab_cli::suite::{run_criteria, CRITERIA};

#[test]
fn acceptance_criteria() {
    let results = run_criteria(&[]);
    assert_eq!(results.len(), CRITERIA);
    for r in &results {
        println!("{}", r.line());
    }
    let failed: Vec<_> = results.iter().filter(|r| !r.passed).collect();
    for r in &failed {
        println!("criterion {} details: {}", r.id, r.details);
    }
    println!("{}/{} criteria pass", CRITERIA - failed.len(), CRITERIA);
    assert!(failed.is_empty(), "{} criteria failed", failed.len());
}
