//! Lexicographic preference trees: rooted binary trees whose root-to-leaf
//! paths encode context-dependent object orderings via in/not-in branches.

use std::cmp::Ordering;

use rand::Rng;

use crate::error::{Error, Result};
use crate::prefs::{BundleOrder, MarginalPreference};
use crate::problem::{ObjIdx, ObjSet};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LpNode {
    pub label: ObjIdx,
    pub in_child: Option<usize>,
    pub out_child: Option<usize>,
}

/// An LP tree over objects `0..m`. Every object appears exactly once on
/// every root-to-leaf path; internal vertices carry an in-child (taken when
/// the vertex label is in the conditioning bundle) and a not-in child.
#[derive(Clone, Debug)]
pub struct LpTree {
    m: usize,
    nodes: Vec<LpNode>,
    root: usize,
}

impl LpTree {
    pub fn new(nodes: Vec<LpNode>, root: usize, num_objects: usize) -> Result<LpTree> {
        let tree = LpTree { m: num_objects, nodes, root };
        tree.validate()?;
        Ok(tree)
    }

    fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::Invalid("an LP tree needs at least one object".into()));
        }
        if self.root >= self.nodes.len() {
            return Err(Error::Invalid("LP tree root out of range".into()));
        }
        let mut reached = vec![false; self.nodes.len()];
        self.validate_walk(self.root, ObjSet::EMPTY, &mut reached)?;
        if let Some(orphan) = reached.iter().position(|r| !r) {
            return Err(Error::Invalid(format!("LP tree node {orphan} is unreachable")));
        }
        Ok(())
    }

    fn validate_walk(&self, id: usize, seen: ObjSet, reached: &mut [bool]) -> Result<()> {
        if id >= self.nodes.len() {
            return Err(Error::Invalid("LP tree child out of range".into()));
        }
        if reached[id] {
            return Err(Error::Invalid("LP tree shares a node between branches".into()));
        }
        reached[id] = true;
        let node = &self.nodes[id];
        if node.label >= self.m {
            return Err(Error::Invalid(format!("LP tree labels unknown object #{}", node.label)));
        }
        if seen.contains(node.label) {
            return Err(Error::Invalid(format!(
                "object #{} repeats on a root-to-leaf path",
                node.label
            )));
        }
        let seen = seen.with(node.label);
        match (node.in_child, node.out_child) {
            (None, None) => {
                if seen != ObjSet::full(self.m) {
                    return Err(Error::Invalid(
                        "a root-to-leaf path misses some object".into(),
                    ));
                }
                Ok(())
            }
            (Some(i), Some(o)) => {
                self.validate_walk(i, seen, reached)?;
                self.validate_walk(o, seen, reached)
            }
            _ => Err(Error::Invalid(
                "internal LP tree vertices need both an in- and a not-in child".into(),
            )),
        }
    }

    /// The purely lexicographic tree: all paths use the marginal order.
    pub fn spine(marginal: &MarginalPreference) -> LpTree {
        fn build(order: &[ObjIdx], nodes: &mut Vec<LpNode>) -> usize {
            let label = order[0];
            if order.len() == 1 {
                nodes.push(LpNode { label, in_child: None, out_child: None });
                return nodes.len() - 1;
            }
            let i = build(&order[1..], nodes);
            let o = build(&order[1..], nodes);
            nodes.push(LpNode { label, in_child: Some(i), out_child: Some(o) });
            nodes.len() - 1
        }
        let mut nodes = Vec::new();
        let root = build(marginal.order(), &mut nodes);
        LpTree { m: marginal.num_objects(), nodes, root }
    }

    pub fn num_objects(&self) -> usize {
        self.m
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn node(&self, id: usize) -> &LpNode {
        &self.nodes[id]
    }

    /// The unique root-to-leaf path consistent with `bundle`: traverse the
    /// in-edge exactly at vertices whose label lies in `bundle`. Returns the
    /// visited node ids, length `m`.
    pub fn path(&self, bundle: ObjSet) -> Vec<usize> {
        let mut ids = Vec::with_capacity(self.m);
        let mut cur = self.root;
        loop {
            ids.push(cur);
            let node = &self.nodes[cur];
            match if bundle.contains(node.label) { node.in_child } else { node.out_child } {
                Some(next) => cur = next,
                None => break,
            }
        }
        ids
    }

    /// The label order along [`path`](Self::path), read as a marginal
    /// preference: this is the conditional marginal preference given
    /// `bundle`.
    pub fn path_order(&self, bundle: ObjSet) -> MarginalPreference {
        let labels: Vec<ObjIdx> = self.path(bundle).iter().map(|&id| self.nodes[id].label).collect();
        MarginalPreference::new(labels, self.m).expect("paths are permutations")
    }

    /// The last vertex common to the paths of `a` and `b`; `None` iff `a == b`.
    /// Equivalently the first path vertex labeled inside the symmetric
    /// difference.
    pub fn last_common_vertex(&self, a: ObjSet, b: ObjSet) -> Option<usize> {
        if a == b {
            return None;
        }
        let mut cur = self.root;
        loop {
            let node = &self.nodes[cur];
            if a.contains(node.label) != b.contains(node.label) {
                return Some(cur);
            }
            // both paths take the same branch here
            cur = if a.contains(node.label) {
                node.in_child.expect("divergence occurs before any leaf")
            } else {
                node.out_child.expect("divergence occurs before any leaf")
            };
        }
    }

    /// Bundle comparison: the better set is the one containing the label of
    /// the last shared path vertex. `Greater` iff `a` preferred.
    pub fn cmp_bundles(&self, a: ObjSet, b: ObjSet) -> Ordering {
        match self.last_common_vertex(a, b) {
            None => Ordering::Equal,
            Some(v) => {
                if a.contains(self.nodes[v].label) {
                    Ordering::Greater
                } else {
                    Ordering::Less
                }
            }
        }
    }

    /// `w(endow | bundle)`: the last vertex on the path of `bundle` whose
    /// label is endowed. Returns `(position on path, node id)`.
    pub fn welb_vertex(&self, endow: ObjSet, bundle: ObjSet) -> Result<(usize, usize)> {
        if endow.is_empty() {
            return Err(Error::Invalid("endowment must be nonempty".into()));
        }
        let path = self.path(bundle);
        let pos = path
            .iter()
            .rposition(|&id| endow.contains(self.nodes[id].label))
            .expect("every object labels some path vertex");
        Ok((pos, path[pos]))
    }

    /// True iff every object of `bundle` labels a vertex at or before
    /// `w(endow | bundle)` on the path of `bundle` (the conditional
    /// worst-endowment lower bound admits the bundle).
    pub fn welb_admits(&self, endow: ObjSet, bundle: ObjSet) -> Result<bool> {
        let (pos, _) = self.welb_vertex(endow, bundle)?;
        let path = self.path(bundle);
        let ancestors =
            ObjSet::from_iter(path[..=pos].iter().map(|&id| self.nodes[id].label));
        Ok(bundle.is_subset_of(ancestors))
    }

    /// Materialize the induced strict order on all bundles.
    pub fn to_order(&self) -> Result<BundleOrder> {
        BundleOrder::from_cmp(self.m, |a, b| self.cmp_bundles(a, b))
    }

    /// Reconstruct the unique LP tree inducing a conditionally lexicographic
    /// bundle order. Fails with the first Definition witness `(X, Y)` when
    /// the order is not conditionally lexicographic.
    pub fn from_order(b: &BundleOrder) -> Result<LpTree> {
        let (ok, witness) = super::check_conditionally_lexicographic(b);
        if !ok {
            let (x, y) = witness.unwrap();
            return Err(Error::Domain(format!(
                "order is not conditionally lexicographic: no best addition from {x:?} given {y:?}"
            )));
        }
        let m = b.num_objects();
        let mut nodes = Vec::new();
        let root = Self::build_from_order(b, ObjSet::full(m), ObjSet::EMPTY, &mut nodes)?;
        let tree = LpTree { m, nodes, root };
        debug_assert_eq!(tree.to_order().unwrap(), *b);
        Ok(tree)
    }

    fn build_from_order(
        b: &BundleOrder,
        remaining: ObjSet,
        held: ObjSet,
        nodes: &mut Vec<LpNode>,
    ) -> Result<usize> {
        let label = super::conditional_best(b, remaining, held).ok_or_else(|| {
            Error::Domain(format!(
                "order is not conditionally lexicographic: no best addition from {remaining:?} \
                 given {held:?}"
            ))
        })?;
        let rest = remaining.without(label);
        if rest.is_empty() {
            nodes.push(LpNode { label, in_child: None, out_child: None });
            return Ok(nodes.len() - 1);
        }
        let in_child = Self::build_from_order(b, rest, held.with(label), nodes)?;
        let out_child = Self::build_from_order(b, rest, held, nodes)?;
        nodes.push(LpNode { label, in_child: Some(in_child), out_child: Some(out_child) });
        Ok(nodes.len() - 1)
    }

    /// Tree surgery for dropping object `x`: splice out every `x`-vertex
    /// (replacing its subtree by the not-in child's subtree), then append an
    /// `x`-leaf pair below every leaf, making `x` the least desirable
    /// addition to any bundle.
    pub fn drop_object(&self, x: ObjIdx) -> Result<LpTree> {
        if x >= self.m {
            return Err(Error::Invalid(format!("unknown object #{x}")));
        }
        if self.m < 2 {
            return Err(Error::Domain("cannot drop the only object".into()));
        }
        let mut nodes = Vec::new();
        let root = self
            .splice_without(self.root, x, &mut nodes)
            .expect("tree has more than one object");
        Ok(LpTree { m: self.m, nodes, root })
    }

    /// Clone the subtree at `id` skipping `x`-vertices; leaves of the
    /// spliced subtree sprout the appended `x`-leaf pair.
    fn splice_without(&self, id: usize, x: ObjIdx, nodes: &mut Vec<LpNode>) -> Option<usize> {
        let node = &self.nodes[id];
        if node.label == x {
            return node.out_child.and_then(|o| self.splice_without(o, x, nodes));
        }
        let children = match (node.in_child, node.out_child) {
            (Some(i), Some(o)) => {
                let si = self.splice_without(i, x, nodes);
                let so = self.splice_without(o, x, nodes);
                debug_assert_eq!(si.is_some(), so.is_some());
                si.zip(so)
            }
            _ => None,
        };
        let (in_child, out_child) = match children {
            Some((i, o)) => (Some(i), Some(o)),
            None => {
                // leaf after splicing: append the x-leaf pair
                nodes.push(LpNode { label: x, in_child: None, out_child: None });
                let i = nodes.len() - 1;
                nodes.push(LpNode { label: x, in_child: None, out_child: None });
                (Some(i), Some(nodes.len() - 1))
            }
        };
        nodes.push(LpNode { label: node.label, in_child, out_child });
        Some(nodes.len() - 1)
    }

    /// Structural equality (labels and branching, independent of arena ids).
    pub fn structural_eq(&self, other: &LpTree) -> bool {
        fn eq(a: &LpTree, an: usize, b: &LpTree, bn: usize) -> bool {
            let (x, y) = (&a.nodes[an], &b.nodes[bn]);
            if x.label != y.label {
                return false;
            }
            match ((x.in_child, x.out_child), (y.in_child, y.out_child)) {
                ((None, None), (None, None)) => true,
                ((Some(ai), Some(ao)), (Some(bi), Some(bo))) => {
                    eq(a, ai, b, bi) && eq(a, ao, b, bo)
                }
                _ => false,
            }
        }
        self.m == other.m && eq(self, self.root, other, other.root)
    }

    /// All LP trees over `m` objects, in a deterministic order.
    pub fn all_trees(m: usize) -> Vec<LpTree> {
        fn shapes(objs: &[ObjIdx]) -> Vec<Shape> {
            if objs.len() == 1 {
                return vec![Shape::Leaf(objs[0])];
            }
            let mut out = Vec::new();
            for (i, &root) in objs.iter().enumerate() {
                let mut rest = objs.to_vec();
                rest.remove(i);
                for inside in shapes(&rest) {
                    for outside in shapes(&rest) {
                        out.push(Shape::Node(root, Box::new(inside.clone()), Box::new(outside)));
                    }
                }
            }
            out
        }
        let objs: Vec<ObjIdx> = (0..m).collect();
        shapes(&objs).into_iter().map(|s| s.into_tree(m)).collect()
    }

    /// A uniformly structured random LP tree (labels and branches drawn
    /// independently at each vertex).
    pub fn random<R: Rng>(m: usize, rng: &mut R) -> LpTree {
        fn build<R: Rng>(objs: &[ObjIdx], rng: &mut R) -> Shape {
            if objs.len() == 1 {
                return Shape::Leaf(objs[0]);
            }
            let i = rng.random_range(0..objs.len());
            let mut rest = objs.to_vec();
            let root = rest.remove(i);
            Shape::Node(root, Box::new(build(&rest, rng)), Box::new(build(&rest, rng)))
        }
        let objs: Vec<ObjIdx> = (0..m).collect();
        build(&objs, rng).into_tree(m)
    }
}

#[derive(Clone)]
enum Shape {
    Leaf(ObjIdx),
    Node(ObjIdx, Box<Shape>, Box<Shape>),
}

impl Shape {
    fn into_tree(self, m: usize) -> LpTree {
        fn emit(s: &Shape, nodes: &mut Vec<LpNode>) -> usize {
            match s {
                Shape::Leaf(l) => {
                    nodes.push(LpNode { label: *l, in_child: None, out_child: None });
                    nodes.len() - 1
                }
                Shape::Node(l, i, o) => {
                    let ic = emit(i, nodes);
                    let oc = emit(o, nodes);
                    nodes.push(LpNode { label: *l, in_child: Some(ic), out_child: Some(oc) });
                    nodes.len() - 1
                }
            }
        }
        let mut nodes = Vec::new();
        let root = emit(&self, &mut nodes);
        LpTree { m, nodes, root }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prefs::check_conditionally_lexicographic;

    fn mp(order: &[ObjIdx], m: usize) -> MarginalPreference {
        MarginalPreference::new(order.to_vec(), m).unwrap()
    }

    fn set(objs: &[ObjIdx]) -> ObjSet {
        ObjSet::from_iter(objs.iter().copied())
    }

    fn figure_tree() -> LpTree {
        crate::suites::branching_tree()
    }

    #[test]
    fn spine_paths_all_share_the_marginal_order() {
        let t = LpTree::spine(&mp(&[0, 1, 2, 3], 4));
        for bundle in ObjSet::full(4).subsets() {
            assert_eq!(t.path_order(bundle).order(), &[0, 1, 2, 3]);
        }
    }

    #[test]
    fn figure_tree_divergence_and_comparisons() {
        let t = figure_tree();
        // paths of {a,b} and {a,c} diverge at the vertex labeled c,
        // and {a,c} is preferred
        let v = t.last_common_vertex(set(&[0, 1]), set(&[0, 2])).unwrap();
        assert_eq!(t.node(v).label, 2);
        assert_eq!(t.cmp_bundles(set(&[0, 2]), set(&[0, 1])), Ordering::Greater);
        assert_eq!(t.cmp_bundles(set(&[0]), set(&[0])), Ordering::Equal);
        // the spine a,b,c,d instead prefers {a,b}: divergence at b
        let spine = LpTree::spine(&mp(&[0, 1, 2, 3], 4));
        let w = spine.last_common_vertex(set(&[0, 1]), set(&[0, 2])).unwrap();
        assert_eq!(spine.node(w).label, 1);
        assert_eq!(spine.cmp_bundles(set(&[0, 1]), set(&[0, 2])), Ordering::Greater);
    }

    #[test]
    fn conditional_marginals_of_the_figure_tree_diverge_after_the_shared_prefix() {
        let t = figure_tree();
        assert_eq!(t.path_order(set(&[0, 1])).order(), &[0, 2, 1, 3]);
        assert_eq!(t.path_order(set(&[0, 2])).order(), &[0, 2, 3, 1]);
        assert_eq!(t.path_order(ObjSet::EMPTY).order(), &[0, 1, 2, 3]);
    }

    #[test]
    fn welb_preclusions_match_the_figure_fixture() {
        // endowment {b,c}: precluded bundles are exactly {d},{a,d},{a,b,d},{c,d}
        let t = figure_tree();
        let endow = set(&[1, 2]);
        let precluded: Vec<ObjSet> = ObjSet::full(4)
            .subsets()
            .filter(|&bundle| !t.welb_admits(endow, bundle).unwrap())
            .collect();
        assert_eq!(
            precluded,
            vec![set(&[3]), set(&[0, 3]), set(&[0, 1, 3]), set(&[2, 3])]
        );
        // on the spine a,b,c,d the same endowment precludes every bundle
        // containing d
        let spine = LpTree::spine(&mp(&[0, 1, 2, 3], 4));
        for bundle in ObjSet::full(4).subsets() {
            assert_eq!(spine.welb_admits(endow, bundle).unwrap(), !bundle.contains(3));
        }
        // owning everything admits every bundle
        for bundle in ObjSet::full(4).subsets() {
            assert!(t.welb_admits(ObjSet::full(4), bundle).unwrap());
            let (pos, _) = t.welb_vertex(ObjSet::full(4), bundle).unwrap();
            assert_eq!(pos, 3);
        }
    }

    #[test]
    fn tree_order_round_trip_is_the_identity_for_all_three_object_trees() {
        let trees = LpTree::all_trees(3);
        assert_eq!(trees.len(), 12);
        for t in &trees {
            let order = t.to_order().unwrap();
            assert!(check_conditionally_lexicographic(&order).0);
            let back = LpTree::from_order(&order).unwrap();
            assert!(t.structural_eq(&back), "round trip changed the tree");
            assert_eq!(back.to_order().unwrap(), order);
        }
    }

    #[test]
    fn spine_tree_materializes_the_lexicographic_order() {
        let t = LpTree::spine(&mp(&[0, 1, 2], 3));
        let order = t.to_order().unwrap();
        let lex = crate::prefs::responsive_extension(
            &mp(&[0, 1, 2], 3),
            crate::prefs::ExtensionScheme::Lexicographic,
        )
        .unwrap();
        assert_eq!(order, lex);
    }

    #[test]
    fn from_order_rejects_non_cl_orders_with_a_witness() {
        let order = crate::prefs::tests::footnote_monotone_not_responsive();
        let err = LpTree::from_order(&order).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn dropping_from_a_spine_rotates_the_dropped_object_to_the_bottom() {
        let t = LpTree::spine(&mp(&[0, 1, 2, 3], 4));
        let dropped = t.drop_object(1).unwrap();
        assert!(dropped.structural_eq(&LpTree::spine(&mp(&[0, 2, 3, 1], 4))));
    }

    #[test]
    fn dropping_b_from_the_figure_tree_splices_then_appends() {
        // splicing b out of the figure tree leaves every path a,c,d; the
        // append step then puts b below each leaf, yielding the spine a,c,d,b
        let t = figure_tree();
        let dropped = t.drop_object(1).unwrap();
        assert!(dropped.structural_eq(&LpTree::spine(&mp(&[0, 2, 3, 1], 4))));
    }

    #[test]
    fn every_cl_order_is_monotonic_at_three_and_four_objects() {
        for m in [3usize, 4] {
            for t in LpTree::all_trees(m) {
                assert!(crate::prefs::check_monotonic(&t.to_order().unwrap()));
            }
        }
    }

    #[test]
    fn tree_comparison_agrees_with_the_materialized_order() {
        for t in LpTree::all_trees(3) {
            let order = t.to_order().unwrap();
            for a in ObjSet::full(3).subsets() {
                for b in ObjSet::full(3).subsets() {
                    assert_eq!(t.cmp_bundles(a, b), order.cmp_bundles(a, b));
                }
            }
        }
    }
}
