// Desk-scale uniqueness sweeps: on exhaustive lexicographic suites, any
// registered rule either violates one of {balancedness, individual-good
// efficiency, worst-endowment bound, truncation-proofness} or coincides
// with the trading-cycles engine everywhere; the engine itself violates
// none. Also: marginality separates the comparator-sensitive rule.

use ttclab_core::axioms::{check_bal, check_welb, find_improving_cycle};
use ttclab_core::prefs::Preference;
use ttclab_core::rules::{registry, Rule, RuleKind};
use ttclab_core::strategies::{audit_incentives, StrategyClass};
use ttclab_core::{suites, Problem};

/// The lexicographic suite a rule is audited on: the two standard
/// instances where applicable, its own pinned instance otherwise.
fn suite_for(rule: &Rule) -> Vec<Problem> {
    let standard = [suites::instance_n2_abc(), suites::instance_n3_abcd()];
    let bases: Vec<Problem> = match rule.pinned_instance() {
        None => standard.to_vec(),
        Some((agents, objects, endow)) => {
            let pinned = suites::instance(agents, objects, endow).unwrap();
            if standard.iter().any(|s| {
                s.agent_labels() == pinned.agent_labels()
                    && s.object_labels() == pinned.object_labels()
                    && s.endowment() == pinned.endowment()
            }) {
                vec![pinned]
            } else {
                vec![pinned]
            }
        }
    };
    let mut out = Vec::new();
    for base in &bases {
        suites::for_each_lex_profile(base, |p| out.push(p.clone()));
    }
    out
}

fn fails_some_axiom(rule: &Rule, suite: &[Problem]) -> bool {
    for prob in suite {
        let outcome = rule.apply(prob).unwrap();
        if !check_bal(&outcome, prob.endowment()).unwrap().holds
            || !find_improving_cycle(&outcome, prob).unwrap().holds
            || !check_welb(&outcome, prob).unwrap().holds
        {
            return true;
        }
        if !audit_incentives(rule, prob, StrategyClass::Truncation).unwrap().holds {
            return true;
        }
    }
    false
}

fn coincides_with_engine(rule: &Rule, suite: &[Problem]) -> bool {
    suite.iter().all(|prob| {
        rule.apply(prob).unwrap() == Rule::new(RuleKind::Ttc).apply(prob).unwrap()
    })
}

#[test]
fn no_registered_rule_beats_the_four_axioms_without_being_the_engine() {
    for rule in registry() {
        let suite = suite_for(&rule);
        let clean = !fails_some_axiom(&rule, &suite);
        if clean {
            assert!(
                coincides_with_engine(&rule, &suite),
                "rule '{}' passes all four axioms yet differs from the engine",
                rule.name()
            );
        }
    }
}

#[test]
fn the_engine_itself_passes_all_four_axioms() {
    let ttc = Rule::new(RuleKind::Ttc);
    assert!(!fails_some_axiom(&ttc, &suite_for(&ttc)));
}

#[test]
fn each_counterexample_rule_fails_exactly_its_advertised_axiom_class() {
    let cases: Vec<(RuleKind, Box<dyn Fn(&Rule, &Problem) -> bool>)> = vec![
        (
            RuleKind::NotBal,
            Box::new(|r: &Rule, p: &Problem| {
                check_bal(&r.apply(p).unwrap(), p.endowment()).unwrap().holds
            }),
        ),
        (
            RuleKind::NotWelb,
            Box::new(|r: &Rule, p: &Problem| {
                check_welb(&r.apply(p).unwrap(), p).unwrap().holds
            }),
        ),
        (
            RuleKind::NotTp,
            Box::new(|r: &Rule, p: &Problem| {
                audit_incentives(r, p, StrategyClass::Truncation).unwrap().holds
            }),
        ),
    ];
    for (kind, holds) in cases {
        let rule = Rule::new(kind);
        let suite = suite_for(&rule);
        assert!(
            suite.iter().any(|p| !holds(&rule, p)),
            "rule '{}' never trips its advertised axiom",
            rule.name()
        );
    }
}

#[test]
fn the_comparator_sensitive_rule_is_not_marginal_and_emits_a_profile_pair() {
    let rule = Rule::new(RuleKind::NotMar);
    let sensitive = suites::comparator_gap_problem();
    let flattened = Problem::new(
        sensitive.agent_labels().to_vec(),
        sensitive.object_labels().to_vec(),
        sensitive.endowment().clone(),
        sensitive.preferences().iter().map(|p| Preference::Lex(p.marginal())).collect(),
    )
    .unwrap();
    let at_sensitive = rule.apply(&sensitive).unwrap();
    let at_flattened = rule.apply(&flattened).unwrap();
    assert_ne!(at_sensitive, at_flattened, "equal-marginal profiles should separate the rule");
    // the comparator-sensitive branch returns the pinned swap
    assert_eq!(
        sensitive.labels_of(at_sensitive.part(0)),
        vec!["b".to_string(), "c".into(), "e".into()]
    );
    assert_eq!(
        flattened.labels_of(at_flattened.part(0)),
        vec!["a".to_string(), "d".into(), "e".into()]
    );
}
