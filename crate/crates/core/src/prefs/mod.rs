//! Preference representations for the three domains (lexicographic,
//! responsive, conditionally lexicographic), domain-membership validators,
//! marginal extraction, and responsive extensions of a marginal order.

use std::cmp::Ordering;

use rand::Rng;
use rand::SeedableRng;

use crate::error::{Error, Result};
use crate::problem::{ObjIdx, ObjSet};

mod lptree;
pub use lptree::{LpNode, LpTree};

/// Largest object count for which a full bundle order is materialized.
pub const MAX_MATERIALIZED: usize = 6;

/// A strict total order over individual objects, best first.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MarginalPreference {
    order: Vec<ObjIdx>,
    rank: Vec<usize>,
}

impl MarginalPreference {
    pub fn new(order: Vec<ObjIdx>, num_objects: usize) -> Result<MarginalPreference> {
        if order.len() != num_objects {
            return Err(Error::Invalid(format!(
                "marginal order lists {} objects, expected {num_objects}",
                order.len()
            )));
        }
        let mut rank = vec![usize::MAX; num_objects];
        for (r, &o) in order.iter().enumerate() {
            if o >= num_objects {
                return Err(Error::Invalid(format!("marginal order mentions unknown object #{o}")));
            }
            if rank[o] != usize::MAX {
                return Err(Error::Invalid(format!("marginal order repeats object #{o}")));
            }
            rank[o] = r;
        }
        Ok(MarginalPreference { order, rank })
    }

    pub fn num_objects(&self) -> usize {
        self.order.len()
    }

    /// Objects, best first.
    pub fn order(&self) -> &[ObjIdx] {
        &self.order
    }

    /// Position of `o` (0 = best).
    pub fn rank(&self, o: ObjIdx) -> usize {
        self.rank[o]
    }

    /// Most-preferred object of a nonempty set.
    pub fn best_in(&self, set: ObjSet) -> Option<ObjIdx> {
        set.iter().min_by_key(|&o| self.rank[o])
    }

    /// Least-preferred object of a nonempty set.
    pub fn worst_in(&self, set: ObjSet) -> Option<ObjIdx> {
        set.iter().max_by_key(|&o| self.rank[o])
    }

    /// `Greater` iff `x` is strictly preferred to `y`.
    pub fn cmp_objs(&self, x: ObjIdx, y: ObjIdx) -> Ordering {
        self.rank[y].cmp(&self.rank[x])
    }

    /// Lexicographic comparison of bundles induced by this marginal order:
    /// `Greater` iff `x` is strictly preferred, `Equal` iff `x == y`.
    pub fn cmp_sets_lex(&self, x: ObjSet, y: ObjSet) -> Ordering {
        let diff = x.sym_diff(y);
        match self.best_in(diff) {
            None => Ordering::Equal,
            Some(o) => {
                if x.contains(o) {
                    Ordering::Greater
                } else {
                    Ordering::Less
                }
            }
        }
    }

    /// The restriction of this order to `keep`, followed by `drop` (keeping
    /// relative order inside each block). Building block for drop/truncation
    /// strategies.
    pub fn with_dropped(&self, dropped: ObjSet) -> MarginalPreference {
        let mut order: Vec<ObjIdx> =
            self.order.iter().copied().filter(|&o| !dropped.contains(o)).collect();
        order.extend(self.order.iter().copied().filter(|&o| dropped.contains(o)));
        MarginalPreference::new(order, self.num_objects()).expect("permutation preserved")
    }

    /// True iff the sorted ranks of `x` weakly dominate those of `y`
    /// position by position (requires `|x| == |y|`). When it holds, every
    /// responsive preference with this marginal weakly prefers `x`.
    pub fn rank_dominates(&self, x: ObjSet, y: ObjSet) -> bool {
        if x.len() != y.len() {
            return false;
        }
        let mut rx: Vec<usize> = x.iter().map(|o| self.rank[o]).collect();
        let mut ry: Vec<usize> = y.iter().map(|o| self.rank[o]).collect();
        rx.sort_unstable();
        ry.sort_unstable();
        rx.iter().zip(&ry).all(|(a, b)| a <= b)
    }
}

/// Compare bundles under the lexicographic preference induced by a marginal
/// order: the better set is the one containing the best object of the
/// symmetric difference.
pub fn lex_compare(p: &MarginalPreference, x: ObjSet, y: ObjSet) -> Result<Ordering> {
    let all = ObjSet::full(p.num_objects());
    if !x.is_subset_of(all) || !y.is_subset_of(all) {
        return Err(Error::Invalid("bundle mentions an object outside the problem".into()));
    }
    Ok(p.cmp_sets_lex(x, y))
}

/// A strict total order over all subsets of the object set, best first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BundleOrder {
    m: usize,
    order: Vec<ObjSet>,
    rank: Vec<u32>,
}

impl BundleOrder {
    pub fn new(order: Vec<ObjSet>, num_objects: usize) -> Result<BundleOrder> {
        if num_objects > MAX_MATERIALIZED {
            return Err(Error::Cap(format!(
                "bundle orders are materialized only up to {MAX_MATERIALIZED} objects"
            )));
        }
        let size = 1usize << num_objects;
        if order.len() != size {
            return Err(Error::Invalid(format!(
                "bundle order lists {} bundles, expected 2^{num_objects} = {size}",
                order.len()
            )));
        }
        let mut rank = vec![u32::MAX; size];
        for (r, &b) in order.iter().enumerate() {
            let idx = b.0 as usize;
            if idx >= size {
                return Err(Error::Invalid("bundle order mentions an unknown object".into()));
            }
            if rank[idx] != u32::MAX {
                return Err(Error::Invalid(format!("bundle order repeats {:?}", b)));
            }
            rank[idx] = r as u32;
        }
        Ok(BundleOrder { m: num_objects, order, rank })
    }

    /// Materialize an order by sorting all bundles with a comparison
    /// function (`Greater` = first argument preferred). The function must
    /// induce a strict total order.
    pub fn from_cmp<F: Fn(ObjSet, ObjSet) -> Ordering>(
        num_objects: usize,
        cmp: F,
    ) -> Result<BundleOrder> {
        if num_objects > MAX_MATERIALIZED {
            return Err(Error::Cap(format!(
                "bundle orders are materialized only up to {MAX_MATERIALIZED} objects"
            )));
        }
        let mut order: Vec<ObjSet> = ObjSet::full(num_objects).subsets().collect();
        order.sort_by(|&a, &b| cmp(b, a).then(a.cmp(&b)));
        BundleOrder::new(order, num_objects)
    }

    pub fn num_objects(&self) -> usize {
        self.m
    }

    /// Bundles, best first.
    pub fn order(&self) -> &[ObjSet] {
        &self.order
    }

    pub fn rank(&self, b: ObjSet) -> u32 {
        self.rank[b.0 as usize]
    }

    /// `Greater` iff `x` is strictly preferred to `y`.
    pub fn cmp_bundles(&self, x: ObjSet, y: ObjSet) -> Ordering {
        self.rank(y).cmp(&self.rank(x))
    }

    /// The restriction to singletons, as a marginal order.
    pub fn marginal(&self) -> MarginalPreference {
        let mut singles: Vec<ObjIdx> = (0..self.m).collect();
        singles.sort_by_key(|&o| self.rank(ObjSet::singleton(o)));
        MarginalPreference::new(singles, self.m).expect("permutation")
    }
}

/// Check responsiveness: for any bundle `X` and objects `y, z` outside `X`,
/// `X ∪ y` is preferred to `X ∪ z` exactly when `y` is preferred to `z`.
/// Returns the first violating triple in canonical order.
pub fn check_responsive(b: &BundleOrder) -> (bool, Option<(ObjSet, ObjIdx, ObjIdx)>) {
    let full = ObjSet::full(b.num_objects());
    for x in full.subsets() {
        let rest: Vec<ObjIdx> = full.minus(x).iter().collect();
        for (i, &y) in rest.iter().enumerate() {
            for &z in &rest[i + 1..] {
                let bundles = b.cmp_bundles(x.with(y), x.with(z));
                let singles = b.cmp_bundles(ObjSet::singleton(y), ObjSet::singleton(z));
                if bundles != singles {
                    return (false, Some((x, y, z)));
                }
            }
        }
    }
    (true, None)
}

/// Check monotonicity: supersets are weakly preferred.
pub fn check_monotonic(b: &BundleOrder) -> bool {
    let full = ObjSet::full(b.num_objects());
    for x in full.subsets() {
        for y in x.subsets() {
            if b.cmp_bundles(x, y) == Ordering::Less {
                return false;
            }
        }
    }
    true
}

/// Check the conditionally lexicographic property: for all disjoint `X ≠ ∅`
/// and `Y` there is an object `x* ∈ X` with `Y ∪ x*` preferred to `Y ∪ Z`
/// for every `Z ⊆ X \ {x*}`. Returns the first failing pair `(X, Y)`.
///
/// (Uniqueness of `x*` is automatic for a strict order: two candidates would
/// each have to beat the other's singleton extension.)
pub fn check_conditionally_lexicographic(b: &BundleOrder) -> (bool, Option<(ObjSet, ObjSet)>) {
    let full = ObjSet::full(b.num_objects());
    for y in full.subsets() {
        for x in full.minus(y).subsets() {
            if x.is_empty() {
                continue;
            }
            if conditional_best(b, x, y).is_none() {
                return (false, Some((x, y)));
            }
        }
    }
    (true, None)
}

/// The unique `x* ∈ X` with `(Y ∪ x*) P (Y ∪ Z)` for all `Z ⊆ X \ x*`,
/// if one exists.
pub(crate) fn conditional_best(b: &BundleOrder, x: ObjSet, y: ObjSet) -> Option<ObjIdx> {
    'cand: for c in x.iter() {
        let with_c = y.with(c);
        for z in x.without(c).subsets() {
            if b.cmp_bundles(with_c, y.union(z)) != Ordering::Greater {
                continue 'cand;
            }
        }
        return Some(c);
    }
    None
}

/// Scheme for extending a marginal order to a full responsive bundle order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExtensionScheme {
    /// Smaller bundles first, ties broken lexicographically by the marginal.
    CardinalityFirst,
    /// Utilities drawn from the seed, strictly generic (redrawn on collision).
    Additive { seed: u64 },
    /// The unique lexicographic extension.
    Lexicographic,
}

/// Extend a marginal order to a full [`BundleOrder`] that passes
/// [`check_responsive`] and restricts back to the marginal.
pub fn responsive_extension(
    m: &MarginalPreference,
    scheme: ExtensionScheme,
) -> Result<BundleOrder> {
    let k = m.num_objects();
    match scheme {
        ExtensionScheme::Lexicographic => BundleOrder::from_cmp(k, |a, b| m.cmp_sets_lex(a, b)),
        ExtensionScheme::CardinalityFirst => BundleOrder::from_cmp(k, |a, b| {
            b.len().cmp(&a.len()).then_with(|| m.cmp_sets_lex(a, b))
        }),
        ExtensionScheme::Additive { seed } => {
            let utilities = generic_utilities(m, seed)?;
            BundleOrder::from_cmp(k, |a, b| additive_cmp(&utilities, a, b))
        }
    }
}

fn additive_sum(utilities: &[f64], s: ObjSet) -> f64 {
    s.iter().map(|o| utilities[o]).sum()
}

fn additive_cmp(utilities: &[f64], a: ObjSet, b: ObjSet) -> Ordering {
    additive_sum(utilities, a)
        .partial_cmp(&additive_sum(utilities, b))
        .unwrap_or(Ordering::Equal)
        .then(b.0.cmp(&a.0).reverse().reverse()) // stable fallback; generic draws never tie
}

/// Draw strictly generic utilities consistent with the marginal order,
/// reseeding until every pair of bundle sums is distinct.
fn generic_utilities(m: &MarginalPreference, seed: u64) -> Result<Vec<f64>> {
    if m.num_objects() > MAX_MATERIALIZED {
        return Err(Error::Cap("additive extension materializes all bundle sums".into()));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..64 {
        let mut draws: Vec<f64> = (0..m.num_objects()).map(|_| rng.random::<f64>()).collect();
        draws.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let mut utilities = vec![0.0; m.num_objects()];
        for (pos, &o) in m.order().iter().enumerate() {
            utilities[o] = draws[pos];
        }
        let mut sums: Vec<f64> = ObjSet::full(m.num_objects())
            .subsets()
            .map(|s| additive_sum(&utilities, s))
            .collect();
        sums.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if sums.windows(2).all(|w| w[0] != w[1]) {
            return Ok(utilities);
        }
    }
    Err(Error::Domain("could not draw strictly generic utilities".into()))
}

/// The bundle comparator carried by a responsive preference.
#[derive(Clone, Debug)]
pub enum Comparator {
    /// Bundles compared by summed utilities.
    Additive { utilities: Vec<f64> },
    /// Explicitly tabulated order (desk scale only).
    Table(BundleOrder),
}

/// A responsive preference: a marginal order plus a bundle comparator, with
/// optional exact-pair overrides consulted before the base comparator.
#[derive(Clone, Debug)]
pub struct ResponsivePref {
    marginal: MarginalPreference,
    comparator: Comparator,
    overrides: Vec<(ObjSet, ObjSet)>,
}

impl ResponsivePref {
    pub fn new(
        marginal: MarginalPreference,
        comparator: Comparator,
        overrides: Vec<(ObjSet, ObjSet)>,
    ) -> Result<ResponsivePref> {
        let m = marginal.num_objects();
        match &comparator {
            Comparator::Additive { utilities } => {
                if utilities.len() != m {
                    return Err(Error::Invalid("one utility per object required".into()));
                }
                if utilities.iter().any(|u| !u.is_finite()) {
                    return Err(Error::Invalid("utilities must be finite".into()));
                }
                for w in marginal.order().windows(2) {
                    if utilities[w[0]] <= utilities[w[1]] {
                        return Err(Error::Invalid(
                            "utilities do not induce the declared marginal order".into(),
                        ));
                    }
                }
            }
            Comparator::Table(t) => {
                if t.num_objects() != m {
                    return Err(Error::Invalid("comparator table has wrong object count".into()));
                }
                if t.marginal() != marginal {
                    return Err(Error::Invalid(
                        "comparator table does not restrict to the declared marginal".into(),
                    ));
                }
                let (ok, witness) = check_responsive(t);
                if !ok {
                    return Err(Error::Domain(format!(
                        "comparator table is not responsive, witness {:?}",
                        witness.unwrap()
                    )));
                }
            }
        }
        let full = ObjSet::full(m);
        for &(above, below) in &overrides {
            if !above.is_subset_of(full) || !below.is_subset_of(full) {
                return Err(Error::Invalid("override mentions unknown objects".into()));
            }
            if above == below {
                return Err(Error::Invalid("override relates a bundle to itself".into()));
            }
            if overrides.contains(&(below, above)) {
                return Err(Error::Invalid("contradictory override pair".into()));
            }
            // refuse overrides that contradict responsiveness outright
            if marginal.rank_dominates(below, above) {
                return Err(Error::Domain(
                    "override contradicts the marginal order under responsiveness".into(),
                ));
            }
        }
        Ok(ResponsivePref { marginal, comparator, overrides })
    }

    pub fn marginal(&self) -> &MarginalPreference {
        &self.marginal
    }

    pub fn comparator(&self) -> &Comparator {
        &self.comparator
    }

    pub fn overrides(&self) -> &[(ObjSet, ObjSet)] {
        &self.overrides
    }

    /// `Greater` iff `x` is strictly preferred to `y`.
    pub fn cmp_bundles(&self, x: ObjSet, y: ObjSet) -> Ordering {
        if x == y {
            return Ordering::Equal;
        }
        if self.overrides.contains(&(x, y)) {
            return Ordering::Greater;
        }
        if self.overrides.contains(&(y, x)) {
            return Ordering::Less;
        }
        match &self.comparator {
            Comparator::Additive { utilities } => additive_cmp(utilities, x, y),
            Comparator::Table(t) => t.cmp_bundles(x, y),
        }
    }
}

/// An agent's preference, tagged by domain kind.
#[derive(Clone, Debug)]
pub enum Preference {
    /// Lexicographic: fully determined by a marginal order.
    Lex(MarginalPreference),
    /// Responsive: marginal order plus bundle comparator.
    Responsive(ResponsivePref),
    /// Conditionally lexicographic, encoded as an LP tree.
    Cl(LpTree),
    /// Explicitly tabulated strict order on all bundles (no domain claim).
    Table(BundleOrder),
}

impl Preference {
    pub fn num_objects(&self) -> usize {
        match self {
            Preference::Lex(m) => m.num_objects(),
            Preference::Responsive(r) => r.marginal().num_objects(),
            Preference::Cl(t) => t.num_objects(),
            Preference::Table(b) => b.num_objects(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Preference::Lex(_) => "lex",
            Preference::Responsive(_) => "responsive",
            Preference::Cl(_) => "cl",
            Preference::Table(_) => "table",
        }
    }

    /// The marginal preference over individual objects (the report format
    /// of marginal rules).
    pub fn marginal(&self) -> MarginalPreference {
        match self {
            Preference::Lex(m) => m.clone(),
            Preference::Responsive(r) => r.marginal().clone(),
            Preference::Cl(t) => t.path_order(ObjSet::EMPTY),
            Preference::Table(b) => b.marginal(),
        }
    }

    /// Bundle comparison under this preference; `Greater` iff `x` preferred.
    pub fn cmp_bundles(&self, x: ObjSet, y: ObjSet) -> Ordering {
        match self {
            Preference::Lex(m) => m.cmp_sets_lex(x, y),
            Preference::Responsive(r) => r.cmp_bundles(x, y),
            Preference::Cl(t) => t.cmp_bundles(x, y),
            Preference::Table(b) => b.cmp_bundles(x, y),
        }
    }

    /// The conditional marginal preference given an already-held bundle.
    /// Defined for conditionally lexicographic preferences (a lexicographic
    /// preference is the constant special case).
    pub fn conditional_marginal(&self, held: ObjSet) -> Result<MarginalPreference> {
        match self {
            Preference::Lex(m) => Ok(m.clone()),
            Preference::Cl(t) => Ok(t.path_order(held)),
            other => Err(Error::Domain(format!(
                "conditional marginal preferences require a conditionally lexicographic \
                 preference, got kind '{}'",
                other.kind_name()
            ))),
        }
    }

    /// True for the kinds accepted by the augmented algorithm.
    pub fn is_conditionally_lexicographic(&self) -> bool {
        matches!(self, Preference::Lex(_) | Preference::Cl(_))
    }
}
