// Incentive audits against the engines and the fixtures: subset-drop
// immunity on the lexicographic suite, the drop decomposition, the
// responsive drop manipulation, and the obvious-manipulability audit with
// its negative control.

use std::cmp::Ordering;

use ttclab_core::prefs::Preference;
use ttclab_core::rules::{Rule, RuleKind};
use ttclab_core::strategies::{
    audit_incentives, audit_nom, gen_subset_drops, opportunity_set, StrategyClass,
};
use ttclab_core::{run_ttc, suites, ObjSet};

#[test]
fn engine_is_subset_drop_proof_on_the_exhaustive_lexicographic_suite() {
    let ttc = Rule::new(RuleKind::Ttc);
    for base in [suites::instance_n2_abc(), suites::instance_n3_abcd()] {
        suites::for_each_lex_profile(&base, |prob| {
            for cls in
                [StrategyClass::Truncation, StrategyClass::Drop, StrategyClass::SubsetDrop]
            {
                let report = audit_incentives(&ttc, prob, cls).unwrap();
                assert!(report.holds, "{:?} manipulation found", cls);
            }
        });
    }
}

/// Rule-level version of the drop decomposition: whenever the drop audit
/// passes on a lexicographic suite, so does the subset-drop audit, and each
/// successive drop in a subset-drop sequence weakly lowers the assignment.
#[test]
fn subset_drops_decompose_into_monotone_drop_chains() {
    let base = suites::instance_n2_abc();
    suites::for_each_lex_profile(&base, |prob| {
        let truth = run_ttc(prob).unwrap().allocation;
        for agent in 0..prob.num_agents() {
            let marginal = prob.preference(agent).marginal();
            let endow = prob.endowment().part(agent);
            for (dropped, _) in gen_subset_drops(&marginal, endow) {
                // drop the subset one object at a time, best first
                let mut order: Vec<usize> = dropped.iter().collect();
                order.sort_by_key(|&o| marginal.rank(o));
                let mut current = marginal.clone();
                let mut last_bundle = truth.part(agent);
                for x in order {
                    current = current.with_dropped(ObjSet::singleton(x));
                    let stepped = prob
                        .with_preference(agent, Preference::Lex(current.clone()))
                        .unwrap();
                    let outcome = run_ttc(&stepped).unwrap().allocation.part(agent);
                    assert_ne!(
                        marginal.cmp_sets_lex(outcome, last_bundle),
                        Ordering::Greater,
                        "a single drop in the chain improved the assignment"
                    );
                    last_bundle = outcome;
                }
            }
        }
    });
}

#[test]
fn responsive_drop_fixture_defeats_the_engine_but_not_truncations() {
    let ttc = Rule::new(RuleKind::Ttc);
    let prob = suites::responsive_drop_problem();
    let report = audit_incentives(&ttc, &prob, StrategyClass::Drop).unwrap();
    assert!(!report.holds);
    match report.witness {
        Some(ttclab_core::axioms::Witness::Manipulation(w)) => {
            assert_eq!(w.agent, 0);
            assert_eq!(prob.labels_of(w.truthful), vec!["a".to_string(), "d".into()]);
            assert_eq!(prob.labels_of(w.manipulated), vec!["b".to_string(), "c".into()]);
        }
        other => panic!("expected a manipulation witness, got {other:?}"),
    }
    assert!(audit_incentives(&ttc, &prob, StrategyClass::Truncation).unwrap().holds);
}

/// Every rule that passes the individual-rationality audit on the
/// responsive fixtures also passes balancedness and the worst-endowment
/// bound there.
#[test]
fn ir_implies_bal_and_welb_for_marginal_rules_on_the_responsive_suite() {
    use ttclab_core::axioms::{check_bal, check_ir, check_welb};
    let mut suite = vec![suites::responsive_swap_problem(), suites::responsive_drop_problem()];
    suites::for_each_lex_profile(&suites::instance_n3_abcd(), |p| suite.push(p.clone()));
    for rule in [Rule::new(RuleKind::Ttc), Rule::new(RuleKind::NoTrade), Rule::new(RuleKind::BalancedSerialDictatorship)]
    {
        let ir_everywhere = suite.iter().all(|p| {
            let out = rule.apply(p).unwrap();
            check_ir(&out, p).unwrap().holds
        });
        if ir_everywhere {
            for p in &suite {
                let out = rule.apply(p).unwrap();
                assert!(check_bal(&out, p.endowment()).unwrap().holds, "{}", rule.name());
                assert!(check_welb(&out, p).unwrap().holds, "{}", rule.name());
            }
        }
    }
}

#[test]
fn opportunity_sets_contain_the_endowment_and_top_the_best_subset() {
    let ttc = Rule::new(RuleKind::Ttc);
    let prob = suites::responsive_drop_problem();
    let truthful = prob.preference(0).marginal();
    let opp = opportunity_set(&ttc, &prob, 0, &truthful).unwrap();
    // the endowment is realized when everyone else top-ranks her own objects
    assert!(opp.contains(&prob.endowment().part(0)));
    // the best element is the top-|endowment| subset of the report
    let top: ObjSet = ObjSet::from_iter(truthful.order()[..2].iter().copied());
    let best = *opp
        .iter()
        .max_by(|&&a, &&b| prob.preference(0).cmp_bundles(a, b))
        .unwrap();
    assert_eq!(best, top);
}

#[test]
fn engine_is_not_obviously_manipulable_but_the_bribe_rule_is() {
    let ttc = Rule::new(RuleKind::Ttc);
    let drop_fixture = suites::responsive_drop_problem();
    // a profitable drop exists, yet the audit holds
    assert!(!audit_incentives(&ttc, &drop_fixture, StrategyClass::Drop).unwrap().holds);
    assert!(audit_nom(&ttc, &drop_fixture).unwrap().holds);

    // negative control: truth a,c,b for agent 1; lying c,a,b pays her
    // favorite pair, so both best and worst cases improve
    let base = suites::instance_n2_abc();
    let prob = ttclab_core::Problem::new(
        base.agent_labels().to_vec(),
        base.object_labels().to_vec(),
        base.endowment().clone(),
        vec![
            Preference::Lex(
                ttclab_core::prefs::MarginalPreference::new(vec![0, 2, 1], 3).unwrap(),
            ),
            Preference::Lex(
                ttclab_core::prefs::MarginalPreference::new(vec![0, 1, 2], 3).unwrap(),
            ),
        ],
    )
    .unwrap();
    let bribe = Rule::new(RuleKind::Bribe);
    let report = audit_nom(&bribe, &prob).unwrap();
    assert!(!report.holds);
}

#[test]
fn rules_with_no_profitable_misreports_pass_the_nom_audit_vacuously() {
    let no_trade = Rule::new(RuleKind::NoTrade);
    let prob = suites::responsive_drop_problem();
    assert!(audit_nom(&no_trade, &prob).unwrap().holds);
}

#[test]
fn full_misreport_audit_is_rejected_off_the_lexicographic_domain() {
    let ttc = Rule::new(RuleKind::Ttc);
    let prob = suites::responsive_drop_problem();
    assert!(audit_incentives(&ttc, &prob, StrategyClass::Any).is_err());
}
