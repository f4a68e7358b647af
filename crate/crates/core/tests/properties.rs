use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use symcc_core::dsr::{build_controller, sample_expression, ControllerKind};
use symcc_core::expr::{ExprTree, Token, TokenSet};

fn arities(set: &TokenSet) -> Vec<usize> {
    set.tokens().iter().map(|t| t.arity()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn sampled_expressions_are_complete_and_bounded(
        seed in any::<u64>(),
        max_length in 1usize..=40,
        recurrent in any::<bool>(),
    ) {
        let set = TokenSet::regression();
        let kind = if recurrent { ControllerKind::Recurrent } else { ControllerKind::Tabular };
        let controller = build_controller(kind, set.len(), 8, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = sample_expression(controller.as_ref(), &arities(&set), max_length, &mut rng);
        prop_assert!(!s.tokens.is_empty() && s.tokens.len() <= max_length);
        let tokens: Vec<Token> = s.tokens.iter().map(|&i| set.tokens()[i as usize]).collect();
        let tree = ExprTree::parse_preorder_bounded(&tokens, max_length);
        prop_assert!(tree.is_ok(), "{:?}", tokens);
        // Every chosen token was allowed by its mask.
        for (i, &t) in s.tokens.iter().enumerate() {
            prop_assert!(s.masks[i] & (1 << t) != 0);
        }
    }

}
