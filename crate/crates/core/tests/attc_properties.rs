// The augmented engine over conditionally lexicographic profiles:
// balanced, individually rational, Pareto efficient, drop-proof, and
// equivalent to its deferred variant, exhaustively at three objects and on
// a deterministic four-object sample.

use ttclab_core::attc::{run_attc, run_attc_deferred};
use ttclab_core::axioms::{check_bal, check_ir, check_pareto_efficient, check_welb, find_improving_cycle};
use ttclab_core::rules::{Rule, RuleKind};
use ttclab_core::strategies::{audit_incentives, StrategyClass};
use ttclab_core::{suites, Problem};

fn audit_instance(prob: &Problem) {
    let attc = Rule::new(RuleKind::Attc);
    let trace = run_attc(prob).unwrap();
    let out = &trace.allocation;
    assert!(check_bal(out, prob.endowment()).unwrap().holds);
    assert!(check_welb(out, prob).unwrap().holds);
    assert!(check_ir(out, prob).unwrap().holds);
    assert!(check_pareto_efficient(out, prob).unwrap().holds);
    assert!(find_improving_cycle(out, prob).unwrap().holds);
    assert!(audit_incentives(&attc, prob, StrategyClass::Drop).unwrap().holds);
    for agent in 0..prob.num_agents() {
        let deferred = run_attc_deferred(prob, agent).unwrap();
        assert_eq!(&deferred.allocation, out);
    }
}

#[test]
fn all_three_object_tree_profiles_pass_every_audit() {
    let base = suites::instance_n2_abc();
    let mut count = 0;
    suites::for_each_tree_profile(&base, |prob| {
        audit_instance(prob);
        count += 1;
    });
    assert_eq!(count, 144);
}

#[test]
fn sampled_four_object_tree_profiles_pass_every_audit() {
    for prob in suites::sample_tree_profiles(&suites::instance_n2_abcd(), 1500, 0x5EED) {
        audit_instance(&prob);
    }
}

#[test]
fn the_branching_fixture_passes_every_audit() {
    audit_instance(&suites::branching_cl_problem());
}
