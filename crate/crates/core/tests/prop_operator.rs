mod support;

use proptest::prelude::*;
use support::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(CASES))]

    #[test]
    fn associativity(t in (op(), op(), op())) { composition_is_associative(t)?; }

    #[test]
    fn weyl_commutation(t in (-3i64..=3, -3i64..=3, 1u8..=2)) { derivation_past_a_monomial_shifts_by_its_exponent(t)?; }

    #[test]
    fn commutator_action(t in (op(), op(), series())) { commutator_acts_as_difference_of_actions(t)?; }

    #[test]
    fn nested_action(t in (op(), op(), series())) { composition_acts_as_nested_application(t)?; }

    #[test]
    fn frame_change(t in (op(), op())) { frame_change_is_a_ring_homomorphism(t)?; }

    #[test]
    fn leibniz(t in (series(), series(), 1u8..=2)) { derivations_satisfy_leibniz(t)?; }
}
