//! Deterministic enumeration helpers for exhaustive desk-scale sweeps:
//! all marginal orders, all lexicographic profiles of an instance, and the
//! standard pinned instances the property tables are audited on.

use crate::error::Result;
use crate::prefs::{LpTree, MarginalPreference, Preference};
use crate::problem::{Endowment, ObjIdx, ObjSet, Problem};

/// All strict marginal orders over `m` objects, in lexicographic order of
/// the underlying permutation.
pub fn all_marginals(m: usize) -> Vec<MarginalPreference> {
    let mut out = Vec::new();
    let mut perm: Vec<ObjIdx> = Vec::with_capacity(m);
    fn rec(m: usize, perm: &mut Vec<ObjIdx>, out: &mut Vec<MarginalPreference>) {
        if perm.len() == m {
            out.push(MarginalPreference::new(perm.clone(), m).expect("permutation"));
            return;
        }
        for o in 0..m {
            if !perm.contains(&o) {
                perm.push(o);
                rec(m, perm, out);
                perm.pop();
            }
        }
    }
    rec(m, &mut perm, &mut out);
    out
}

/// Visit every lexicographic profile of the instance (each agent ranging
/// over all `m!` marginal orders), replacing the instance's preferences.
pub fn for_each_lex_profile(base: &Problem, mut f: impl FnMut(&Problem)) {
    let marginals = all_marginals(base.num_objects());
    let n = base.num_agents();
    let mut choice = vec![0usize; n];
    loop {
        let prefs: Vec<Preference> =
            choice.iter().map(|&c| Preference::Lex(marginals[c].clone())).collect();
        let prob = Problem::new(
            base.agent_labels().to_vec(),
            base.object_labels().to_vec(),
            base.endowment().clone(),
            prefs,
        )
        .expect("profile substitution preserves validity");
        f(&prob);
        let mut k = n;
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            choice[k] += 1;
            if choice[k] < marginals.len() {
                break;
            }
            choice[k] = 0;
        }
    }
}

/// Visit every LP-tree profile of the instance (each agent ranging over all
/// LP trees on the object set).
pub fn for_each_tree_profile(base: &Problem, mut f: impl FnMut(&Problem)) {
    let trees = LpTree::all_trees(base.num_objects());
    let n = base.num_agents();
    let mut choice = vec![0usize; n];
    loop {
        let prefs: Vec<Preference> =
            choice.iter().map(|&c| Preference::Cl(trees[c].clone())).collect();
        let prob = Problem::new(
            base.agent_labels().to_vec(),
            base.object_labels().to_vec(),
            base.endowment().clone(),
            prefs,
        )
        .expect("profile substitution preserves validity");
        f(&prob);
        let mut k = n;
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            choice[k] += 1;
            if choice[k] < trees.len() {
                break;
            }
            choice[k] = 0;
        }
    }
}

/// Build a problem from labeled parts; preferences are placeholders
/// (identity-order lexicographic) meant to be replaced by a profile sweep.
pub fn instance(agents: &[&str], objects: &[&str], endow: &[&[&str]]) -> Result<Problem> {
    let object_labels: Vec<String> = objects.iter().map(|s| s.to_string()).collect();
    let obj_index = |label: &str| object_labels.iter().position(|l| l == label).unwrap();
    let parts: Vec<ObjSet> = endow
        .iter()
        .map(|part| ObjSet::from_iter(part.iter().map(|l| obj_index(l))))
        .collect();
    let endowment = Endowment::new(parts, objects.len())?;
    let identity = MarginalPreference::new((0..objects.len()).collect(), objects.len())?;
    Problem::new(
        agents.iter().map(|s| s.to_string()).collect(),
        object_labels,
        endowment,
        vec![Preference::Lex(identity); agents.len()],
    )
}

/// Two agents, three objects: endowment ({a,b},{c}).
pub fn instance_n2_abc() -> Problem {
    instance(&["1", "2"], &["a", "b", "c"], &[&["a", "b"], &["c"]]).expect("static instance")
}

/// Two agents, four objects: endowment ({a,b},{c,d}).
pub fn instance_n2_abcd() -> Problem {
    instance(&["1", "2"], &["a", "b", "c", "d"], &[&["a", "b"], &["c", "d"]])
        .expect("static instance")
}

/// Three agents, four objects: endowment ({a,b},{c},{d}).
pub fn instance_n3_abcd() -> Problem {
    instance(&["1", "2", "3"], &["a", "b", "c", "d"], &[&["a", "b"], &["c"], &["d"]])
        .expect("static instance")
}

/// Two agents, five objects: endowment ({a,b,d},{c,e}).
pub fn instance_n2_abcde() -> Problem {
    instance(&["1", "2"], &["a", "b", "c", "d", "e"], &[&["a", "b", "d"], &["c", "e"]])
        .expect("static instance")
}

/// A four-object LP tree with genuinely context-dependent orderings; the
/// standard non-lexicographic fixture (a=0, b=1, c=2, d=3). Its four
/// root-to-leaf label orders are
///   a∈,c∈: a,c,d,b    a∈,c∉: a,c,b,d    a∉,b∈: a,b,d,c    a∉,b∉: a,b,c,d
/// so {a,c} is preferred to {a,b}, and with endowment {b,c} the bundles
/// violating the conditional worst-endowment bound are exactly
/// {d},{a,d},{a,b,d},{c,d}.
pub fn branching_tree() -> LpTree {
    use crate::prefs::LpNode;
    let mut nodes = Vec::new();
    let mut leaf = |label: ObjIdx| {
        nodes.push(LpNode { label, in_child: None, out_child: None });
        nodes.len() - 1
    };
    let b1 = leaf(1);
    let b2 = leaf(1);
    let d1 = leaf(3);
    let d2 = leaf(3);
    let c1 = leaf(2);
    let c2 = leaf(2);
    let d3 = leaf(3);
    let d4 = leaf(3);
    let mut push = |label: ObjIdx, i: usize, o: usize| {
        nodes.push(LpNode { label, in_child: Some(i), out_child: Some(o) });
        nodes.len() - 1
    };
    let d_in = push(3, b1, b2);
    let b_out = push(1, d1, d2);
    let c = push(2, d_in, b_out);
    let d_b = push(3, c1, c2);
    let c_b = push(2, d3, d4);
    let b = push(1, d_b, c_b);
    let root = push(0, c, b);
    LpTree::new(nodes, root, 4).expect("static tree")
}

fn with_prefs(base: &Problem, prefs: Vec<Preference>) -> Problem {
    Problem::new(
        base.agent_labels().to_vec(),
        base.object_labels().to_vec(),
        base.endowment().clone(),
        prefs,
    )
    .expect("fixture preferences are valid")
}

/// Two agents with endowment ({a,d},{b,c}) and common marginals a,b,c,d;
/// each strictly prefers the other's endowment as a bundle. The marginal
/// engine leaves the endowment in place here, single-object swaps all trade
/// down, yet the bundle swap dominates.
pub fn responsive_swap_problem() -> Problem {
    use crate::prefs::{Comparator, ResponsivePref};
    let base =
        instance(&["1", "2"], &["a", "b", "c", "d"], &[&["a", "d"], &["b", "c"]]).unwrap();
    let marginal = MarginalPreference::new(vec![0, 1, 2, 3], 4).unwrap();
    let bc = ObjSet::from_iter([1, 2]);
    let ad = ObjSet::from_iter([0, 3]);
    let p1 = ResponsivePref::new(
        marginal.clone(),
        Comparator::Additive { utilities: vec![10.0, 7.0, 6.0, 1.0] },
        vec![(bc, ad)],
    )
    .unwrap();
    let p2 = ResponsivePref::new(
        marginal,
        Comparator::Additive { utilities: vec![10.0, 3.0, 2.0, 1.0] },
        vec![(ad, bc)],
    )
    .unwrap();
    with_prefs(&base, vec![Preference::Responsive(p1), Preference::Responsive(p2)])
}

/// Three agents with endowment ({a,b},{c},{d}); agent 1 is responsive with
/// marginal d,b,c,a but prefers {b,c} to {a,d}, so dropping d gains her a
/// better bundle under the marginal engine.
pub fn responsive_drop_problem() -> Problem {
    use crate::prefs::{Comparator, ResponsivePref};
    let base = instance_n3_abcd();
    let p1 = ResponsivePref::new(
        MarginalPreference::new(vec![3, 1, 2, 0], 4).unwrap(),
        Comparator::Additive { utilities: vec![1.0, 9.0, 8.0, 10.0] },
        vec![(ObjSet::from_iter([1, 2]), ObjSet::from_iter([0, 3]))],
    )
    .unwrap();
    with_prefs(
        &base,
        vec![
            Preference::Responsive(p1),
            Preference::Lex(MarginalPreference::new(vec![3, 1, 2, 0], 4).unwrap()),
            Preference::Lex(MarginalPreference::new(vec![1, 0, 2, 3], 4).unwrap()),
        ],
    )
}

/// Two agents with endowment ({a,b,d},{c,e}) and the comparator-sensitive
/// marginals a,e,b,c,d / a,c,b,d,e: both agents prefer the swap
/// ({b,c,e},{a,d}) to the marginal-engine outcome ({a,d,e},{b,c}), so a
/// comparator-reading rule can diverge from every marginal rule here.
pub fn comparator_gap_problem() -> Problem {
    use crate::prefs::{Comparator, ResponsivePref};
    let base = instance_n2_abcde();
    let p1 = ResponsivePref::new(
        MarginalPreference::new(vec![0, 4, 1, 2, 3], 5).unwrap(),
        Comparator::Additive { utilities: vec![50.0, 48.0, 47.0, 1.0, 49.0] },
        vec![],
    )
    .unwrap();
    let p2 = ResponsivePref::new(
        MarginalPreference::new(vec![0, 2, 1, 3, 4], 5).unwrap(),
        Comparator::Additive { utilities: vec![10.0, 2.5, 3.0, 2.0, 1.0] },
        vec![],
    )
    .unwrap();
    with_prefs(&base, vec![Preference::Responsive(p1), Preference::Responsive(p2)])
}

/// A conditionally lexicographic instance pairing the branching tree
/// (endowment {b,c}) with a spine d,c,b,a companion.
pub fn branching_cl_problem() -> Problem {
    let base =
        instance(&["1", "2"], &["a", "b", "c", "d"], &[&["b", "c"], &["a", "d"]]).unwrap();
    with_prefs(
        &base,
        vec![
            Preference::Cl(branching_tree()),
            Preference::Cl(LpTree::spine(
                &MarginalPreference::new(vec![3, 2, 1, 0], 4).unwrap(),
            )),
        ],
    )
}

/// Deterministically sampled LP-tree profiles on the given instance.
pub fn sample_tree_profiles(base: &Problem, count: usize, seed: u64) -> Vec<Problem> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let prefs: Vec<Preference> = (0..base.num_agents())
            .map(|_| Preference::Cl(LpTree::random(base.num_objects(), &mut rng)))
            .collect();
        out.push(with_prefs(base, prefs));
    }
    out
}

/// Single-object housing market with `n` agents: agent `i` owns object
/// `o<i>`.
pub fn housing_market(n: usize) -> Problem {
    let agents: Vec<String> = (1..=n).map(|i| i.to_string()).collect();
    let objects: Vec<String> = (1..=n).map(|i| format!("o{i}")).collect();
    let parts: Vec<ObjSet> = (0..n).map(ObjSet::singleton).collect();
    let endowment = Endowment::new(parts, n).expect("housing endowment");
    let identity = MarginalPreference::new((0..n).collect(), n).expect("identity");
    Problem::new(agents, objects, endowment, vec![Preference::Lex(identity); n])
        .expect("housing market")
}

/// All endowments of `m` labeled objects among `n` labeled agents (every
/// agent owns something), in canonical assignment order.
pub fn all_endowments(n: usize, m: usize) -> Vec<Vec<ObjSet>> {
    let mut out = Vec::new();
    let mut digits = vec![0usize; m];
    loop {
        let mut parts = vec![ObjSet::EMPTY; n];
        for (o, &a) in digits.iter().enumerate() {
            parts[a] = parts[a].with(o);
        }
        if parts.iter().all(|p| !p.is_empty()) {
            out.push(parts);
        }
        let mut k = m;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            digits[k] += 1;
            if digits[k] < n {
                break;
            }
            digits[k] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn marginal_enumeration_counts_factorials() {
        assert_eq!(all_marginals(3).len(), 6);
        assert_eq!(all_marginals(4).len(), 24);
    }

    #[test]
    fn lex_profile_sweep_covers_the_product_space() {
        let mut count = 0;
        for_each_lex_profile(&instance_n2_abc(), |_| count += 1);
        assert_eq!(count, 36);
    }

    #[test]
    fn tree_profile_sweep_covers_the_product_space() {
        let mut count = 0;
        for_each_tree_profile(&instance_n2_abc(), |_| count += 1);
        assert_eq!(count, 144);
    }

    #[test]
    fn endowment_enumeration_matches_surjection_counts() {
        assert_eq!(all_endowments(2, 3).len(), 6);
        assert_eq!(all_endowments(3, 4).len(), 36);
    }
}
