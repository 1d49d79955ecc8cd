mod support;

use proptest::prelude::*;
use support::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(CASES))]

    #[test]
    fn agreement_at_exponent_zero(c in frobenius_case()) { solution_at_zero_matches_closed_form(c)?; }
}
