use tripplan_testkit::ltl_oracle::check_depth3;

#[test]
fn no_false_verdict_has_a_satisfying_extension() {
    let report = check_depth3(3, 5);
    assert!(report.formulas > 1000);
    assert!(report.is_clean(), "{:?}", report.examples);
}
