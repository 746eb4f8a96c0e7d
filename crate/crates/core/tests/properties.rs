//! Property suites checked against independent brute-force oracles.

mod suites;

#[test]
fn neighbour_index_equals_brute_force() {
    suites::neighbour_index().unwrap();
}

#[test]
fn knn_lof_abod_equal_brute_force() {
    suites::detector_oracles().unwrap();
}

#[test]
fn contamination_threshold_count_and_nesting() {
    suites::contamination_thresholds().unwrap();
}

#[test]
fn lr_objective_gradient_matches_central_differences() {
    suites::lr_gradient().unwrap();
}

#[test]
fn egl_closed_form_equals_weighted_sum() {
    suites::egl_closed_form().unwrap();
}

#[test]
fn pool_partition_survives_random_operation_sequences() {
    suites::pool_partition().unwrap();
}

#[test]
fn identical_runs_write_identical_bytes() {
    suites::seed_determinism().unwrap();
}
