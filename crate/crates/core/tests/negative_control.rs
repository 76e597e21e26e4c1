//! The harness must be able to fail: a sign flip in the root-root term of
//! the Bethe equations has to break the Bethe/ED agreement.

use noisy_spins::validation::{self, Fault, ValidationOptions};

#[test]
fn flipped_interaction_fails_bethe_vs_ed() {
    let opts = ValidationOptions { fault: Some(Fault::FlipInteraction), ..Default::default() };
    let report = validation::a5_bethe_vs_ed(&opts);
    println!("{}", report.summary_line());
    assert!(!report.passed);
}

#[test]
fn clean_run_passes_bethe_vs_ed() {
    let report = validation::a5_bethe_vs_ed(&ValidationOptions::default());
    assert!(report.passed, "{}", report.summary_line());
    assert!(report.runtime_s >= 0.0);
}

#[test]
fn reports_serialize_with_runtimes() {
    let report = validation::a1_riordan_zero_modes(&ValidationOptions::default());
    let json = serde_json::to_value(&report).unwrap();
    assert_eq!(json["id"], "A1");
    assert!(json["runtime_s"].is_number());
    assert_eq!(json["passed"], true);
}
