//! Breaking the Born rule must be caught by the battery. Kept in its own
//! binary because the switch is process-wide.

use qkd_core::quantum::set_born_rule_mutation;
use qkd_core::verify::run_one;

#[test]
fn snapped_born_rule_fails_qber_signatures() {
    set_born_rule_mutation(true);
    let result = run_one("qber-signatures").expect("known criterion");
    set_born_rule_mutation(false);
    println!("{}", result.line());
    assert!(!result.passed, "mutated Born rule went unnoticed: {}", result.detail);
}
