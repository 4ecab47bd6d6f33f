// Property tests over randomized profiles and instances.

use proptest::prelude::*;

use ttclab_core::prefs::{LpTree, MarginalPreference, Preference};
use ttclab_core::schema::{parse_problem, problem_to_file};
use ttclab_core::{
    enumerate_allocations, is_balanced, run_ttc, suites, validate_allocation, Endowment, ObjSet,
    Problem,
};

fn arb_marginal(m: usize) -> impl Strategy<Value = MarginalPreference> {
    Just((0..m).collect::<Vec<usize>>())
        .prop_shuffle()
        .prop_map(move |order| MarginalPreference::new(order, m).unwrap())
}

/// A random problem: 2-3 agents, agents ≤ objects ≤ 5, random endowment
/// split, random lexicographic preferences.
fn arb_problem() -> impl Strategy<Value = Problem> {
    (2usize..=3)
        .prop_flat_map(|n| (Just(n), n..=5usize))
        .prop_flat_map(|(n, m)| {
            let owners = proptest::collection::vec(0..n, m);
            let prefs = proptest::collection::vec(arb_marginal(m), n);
            (Just(n), Just(m), owners, prefs)
        })
        .prop_filter_map("every agent owns something", |(n, m, owners, prefs)| {
            let mut parts = vec![ObjSet::EMPTY; n];
            for (o, &a) in owners.iter().enumerate() {
                parts[a] = parts[a].with(o);
            }
            if parts.iter().any(|p| p.is_empty()) {
                return None;
            }
            let agents: Vec<String> = (1..=n).map(|i| i.to_string()).collect();
            let objects: Vec<String> =
                (0..m).map(|i| ((b'a' + i as u8) as char).to_string()).collect();
            let endowment = Endowment::new(parts, m).ok()?;
            Problem::new(
                agents,
                objects,
                endowment,
                prefs.into_iter().map(Preference::Lex).collect(),
            )
            .ok()
        })
}

proptest! {
    /// The engine's outcome is a valid, balanced allocation respecting the
    /// marginal worst-endowment bound, reached within |O| steps.
    #[test]
    fn engine_outcomes_are_valid_balanced_and_bounded(prob in arb_problem()) {
        let trace = run_ttc(&prob).unwrap();
        prop_assert!(validate_allocation(&trace.allocation, &prob).is_ok());
        prop_assert!(is_balanced(&trace.allocation, prob.endowment()).unwrap());
        prop_assert!(trace.num_steps() <= prob.num_objects());
        for i in 0..prob.num_agents() {
            let marginal = prob.preference(i).marginal();
            let floor = marginal.worst_in(prob.endowment().part(i)).unwrap();
            for o in trace.allocation.part(i).iter() {
                prop_assert!(marginal.rank(o) <= marginal.rank(floor));
            }
        }
    }

    /// Everything the enumerator yields validates, and the balanced stream
    /// is the balanced sub-stream of the full one.
    #[test]
    fn enumeration_is_sound(prob in arb_problem()) {
        let all: Vec<_> = enumerate_allocations(&prob, false).unwrap().collect();
        for a in &all {
            prop_assert!(validate_allocation(a, &prob).is_ok());
        }
        let balanced: Vec<_> = enumerate_allocations(&prob, true).unwrap().collect();
        let filtered: Vec<_> = all
            .into_iter()
            .filter(|a| is_balanced(a, prob.endowment()).unwrap())
            .collect();
        prop_assert_eq!(balanced, filtered);
    }

    /// Instance files survive a parse -> serialize -> parse round trip.
    #[test]
    fn instance_files_round_trip(prob in arb_problem()) {
        let file = problem_to_file(&prob);
        let bytes = serde_json::to_vec(&file).unwrap();
        let reparsed = parse_problem(&bytes).unwrap();
        prop_assert_eq!(problem_to_file(&reparsed), file);
    }

    /// Random four-object trees materialize to conditionally lexicographic
    /// orders and survive the order -> tree round trip.
    #[test]
    fn random_trees_round_trip(seed in any::<u64>()) {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let tree = LpTree::random(4, &mut rng);
        let order = tree.to_order().unwrap();
        prop_assert!(ttclab_core::check_conditionally_lexicographic(&order).0);
        prop_assert!(ttclab_core::check_monotonic(&order));
        let back = LpTree::from_order(&order).unwrap();
        prop_assert!(tree.structural_eq(&back));
    }

    /// Additive responsive extensions restrict to their marginal and pass
    /// the responsiveness check.
    #[test]
    fn additive_extensions_are_responsive(seed in any::<u64>(), m in arb_marginal(4)) {
        let ext = ttclab_core::responsive_extension(
            &m,
            ttclab_core::ExtensionScheme::Additive { seed },
        )
        .unwrap();
        prop_assert!(ttclab_core::check_responsive(&ext).0);
        prop_assert_eq!(ext.marginal(), m);
    }

    /// The conditional marginal order read off a tree path agrees with the
    /// defining pairwise swap comparison.
    #[test]
    fn conditional_marginals_match_the_swap_comparison(seed in any::<u64>()) {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let tree = LpTree::random(3, &mut rng);
        for held in ObjSet::full(3).subsets() {
            let order = tree.path_order(held);
            for x in 0..3 {
                for y in 0..3 {
                    if x == y {
                        continue;
                    }
                    // x above y conditionally iff (held ∪ x) \ y beats
                    // (held ∪ y) \ x
                    let lhs = held.with(x).without(y);
                    let rhs = held.with(y).without(x);
                    let by_path = order.rank(x) < order.rank(y);
                    let by_swap =
                        tree.cmp_bundles(lhs, rhs) == std::cmp::Ordering::Greater;
                    prop_assert_eq!(by_path, by_swap);
                }
            }
        }
    }
}

#[test]
fn lexicographic_suite_profiles_are_marginal_welb_balanced() {
    // deterministic companion to the random sweeps: the full suite on the
    // pinned three-agent instance
    suites::for_each_lex_profile(&suites::instance_n3_abcd(), |prob| {
        let trace = run_ttc(prob).unwrap();
        assert!(validate_allocation(&trace.allocation, prob).is_ok());
    });
}
