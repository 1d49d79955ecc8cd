mod support;

use proptest::prelude::*;
use support::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(CASES))]

    #[test]
    fn addition_forms_a_group(t in triple()) { addition_is_an_abelian_group(t)?; }

    #[test]
    fn multiplication_laws(t in triple()) { multiplication_is_commutative_associative_unital(t)?; }

    #[test]
    fn distributivity(t in triple()) { multiplication_distributes(t)?; }

    #[test]
    fn nilpotency(t in triple()) { nilpotent_part_dies_at_the_cap(t)?; }

    #[test]
    fn unit_inversion(a in unit()) { unit_inversion_round_trips(a)?; }

    #[test]
    fn dual_numbers(t in triple()) { dual_numbers_square_u_to_zero(t)?; }
}
