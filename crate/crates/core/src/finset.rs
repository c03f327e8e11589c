//! Exact kernel for finite sets and total maps.
//!
//! This module fixes the canonical representations every other layer relies
//! on: pullbacks are subsets of the lexicographically ordered product, sums
//! regroup the original elements, and products of fibers (pushforwards, slice
//! exponentials) are enumerated as tuples in fiber order. Isomorphic objects
//! are always compared through explicit bijections, never by label equality.
//! Empty sets and empty fibers are first-class throughout.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::Label;

/// An ordered finite set of distinct labels. Order is part of the value.
#[derive(Clone, PartialEq, Eq)]
pub struct FinSet {
    elems: Arc<Vec<Label>>,
    index: Arc<HashMap<Label, usize>>,
}

impl FinSet {
    pub fn new(elems: Vec<Label>) -> Result<Self> {
        let mut index = HashMap::with_capacity(elems.len());
        for (i, l) in elems.iter().enumerate() {
            if index.insert(l.clone(), i).is_some() {
                return Err(Error::DuplicateLabel(l.clone()));
            }
        }
        Ok(FinSet {
            elems: Arc::new(elems),
            index: Arc::new(index),
        })
    }

    /// The canonical n-element set `{0, .., n-1}`.
    pub fn canonical(n: u64) -> Self {
        FinSet::new((0..n).map(Label::Nat).collect()).unwrap()
    }

    pub fn empty() -> Self {
        FinSet::canonical(0)
    }

    /// The chosen terminal object: the one-point set `{0}`.
    pub fn terminal() -> Self {
        FinSet::canonical(1)
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Label> {
        self.elems.iter()
    }

    pub fn labels(&self) -> &[Label] {
        &self.elems
    }

    pub fn contains(&self, l: &Label) -> bool {
        self.index.contains_key(l)
    }

    pub fn position(&self, l: &Label) -> Option<usize> {
        self.index.get(l).copied()
    }

    pub fn label(&self, i: usize) -> &Label {
        &self.elems[i]
    }

    pub fn require(&self, l: &Label, set_name: &str) -> Result<usize> {
        self.position(l).ok_or_else(|| Error::UnknownLabel {
            set: set_name.to_string(),
            label: l.clone(),
        })
    }
}

impl fmt::Debug for FinSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FinSet{:?}", self.elems)
    }
}

impl Serialize for FinSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            elements: &'a [Label],
        }
        Repr {
            elements: &self.elems,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FinSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            elements: Vec<Label>,
        }
        let r = Repr::deserialize(d)?;
        FinSet::new(r.elements).map_err(serde::de::Error::custom)
    }
}

/// A total map between finite sets, stored as a table of codomain positions.
#[derive(Clone, PartialEq, Eq)]
pub struct FinMap {
    dom: FinSet,
    cod: FinSet,
    table: Arc<Vec<usize>>,
}

impl FinMap {
    pub fn new(dom: FinSet, cod: FinSet, table: Vec<usize>) -> Result<Self> {
        if table.len() != dom.len() {
            return Err(Error::boundary(
                "FinMap::new",
                format!("table has {} entries for domain of {}", table.len(), dom.len()),
            ));
        }
        if let Some(&bad) = table.iter().find(|&&j| j >= cod.len()) {
            return Err(Error::boundary(
                "FinMap::new",
                format!("table entry {bad} outside codomain of {}", cod.len()),
            ));
        }
        Ok(FinMap {
            dom,
            cod,
            table: Arc::new(table),
        })
    }

    /// Build from a label-level function; errors if an image is not in `cod`.
    pub fn from_fn(dom: FinSet, cod: FinSet, f: impl Fn(&Label) -> Label) -> Result<Self> {
        FinMap::try_from_fn(dom, cod, |l| Ok(f(l)))
    }

    /// Like [`FinMap::from_fn`] for fallible functions.
    pub fn try_from_fn(
        dom: FinSet,
        cod: FinSet,
        f: impl Fn(&Label) -> Result<Label>,
    ) -> Result<Self> {
        let mut table = Vec::with_capacity(dom.len());
        for l in dom.iter() {
            table.push(cod.require(&f(l)?, "codomain")?);
        }
        FinMap::new(dom, cod, table)
    }

    pub fn from_pairs(
        dom: FinSet,
        cod: FinSet,
        pairs: impl IntoIterator<Item = (Label, Label)>,
    ) -> Result<Self> {
        let mut table = vec![usize::MAX; dom.len()];
        for (x, y) in pairs {
            let i = dom.require(&x, "domain")?;
            table[i] = cod.require(&y, "codomain")?;
        }
        if let Some(i) = table.iter().position(|&j| j == usize::MAX) {
            return Err(Error::boundary(
                "FinMap::from_pairs",
                format!("no image for element {}", dom.label(i)),
            ));
        }
        FinMap::new(dom, cod, table)
    }

    pub fn identity(set: &FinSet) -> Self {
        FinMap {
            dom: set.clone(),
            cod: set.clone(),
            table: Arc::new((0..set.len()).collect()),
        }
    }

    pub fn constant(dom: FinSet, cod: FinSet, value: &Label) -> Result<Self> {
        let j = cod.require(value, "codomain")?;
        let n = dom.len();
        FinMap::new(dom, cod, vec![j; n])
    }

    /// The unique map to the terminal one-point set.
    pub fn to_terminal(dom: FinSet) -> Self {
        let n = dom.len();
        FinMap::new(dom, FinSet::terminal(), vec![0; n]).unwrap()
    }

    pub fn dom(&self) -> &FinSet {
        &self.dom
    }

    pub fn cod(&self) -> &FinSet {
        &self.cod
    }

    pub fn apply_idx(&self, i: usize) -> usize {
        self.table[i]
    }

    pub fn apply(&self, l: &Label) -> Result<&Label> {
        let i = self.dom.require(l, "domain")?;
        Ok(self.cod.label(self.table[i]))
    }

    pub fn table(&self) -> &[usize] {
        &self.table
    }

    pub fn is_injective(&self) -> bool {
        let mut seen = vec![false; self.cod.len()];
        self.table.iter().all(|&j| !std::mem::replace(&mut seen[j], true))
    }

    pub fn is_surjective(&self) -> bool {
        let mut seen = vec![false; self.cod.len()];
        for &j in self.table.iter() {
            seen[j] = true;
        }
        seen.into_iter().all(|b| b)
    }

    pub fn is_bijective(&self) -> bool {
        self.dom.len() == self.cod.len() && self.is_injective()
    }

    pub fn inverse(&self) -> Result<FinMap> {
        if !self.is_bijective() {
            return Err(Error::Invalid(format!(
                "cannot invert non-bijective map {} -> {}",
                self.dom.len(),
                self.cod.len()
            )));
        }
        let mut table = vec![0; self.cod.len()];
        for (i, &j) in self.table.iter().enumerate() {
            table[j] = i;
        }
        FinMap::new(self.cod.clone(), self.dom.clone(), table)
    }

    /// Tables agree entrywise (and boundaries are equal as ordered sets).
    pub fn same_table(&self, other: &FinMap) -> bool {
        self == other
    }
}

impl fmt::Debug for FinMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FinMap{{")?;
        for (i, &j) in self.table.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}↦{}", self.dom.label(i), self.cod.label(j))?;
        }
        write!(f, "}}")
    }
}

impl Serialize for FinMap {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("FinMap", 3)?;
        st.serialize_field("dom", &self.dom)?;
        st.serialize_field("cod", &self.cod)?;
        let table: std::collections::BTreeMap<String, &Label> = self
            .table
            .iter()
            .enumerate()
            .map(|(i, &j)| (self.dom.label(i).to_string(), self.cod.label(j)))
            .collect();
        st.serialize_field("table", &table)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for FinMap {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            dom: FinSet,
            cod: FinSet,
            table: HashMap<String, Label>,
        }
        let r = Repr::deserialize(d)?;
        let pairs: Result<Vec<(Label, Label)>> = r
            .table
            .into_iter()
            .map(|(k, v)| Ok((Label::parse(&k)?, v)))
            .collect();
        FinMap::from_pairs(r.dom, r.cod, pairs.map_err(serde::de::Error::custom)?)
            .map_err(serde::de::Error::custom)
    }
}

/// Composite `g ∘ f` (apply `f`, then `g`).
pub fn compose(g: &FinMap, f: &FinMap) -> Result<FinMap> {
    if f.cod != g.dom {
        return Err(Error::boundary(
            "compose",
            format!(
                "codomain of first factor ({} elems) differs from domain of second ({} elems)",
                f.cod.len(),
                g.dom.len()
            ),
        ));
    }
    let table = f.table.iter().map(|&i| g.table[i]).collect();
    FinMap::new(f.dom.clone(), g.cod.clone(), table)
}

/// A map presented with fiber access: an object of the slice over its base.
#[derive(Clone, PartialEq, Eq)]
pub struct Family {
    proj: FinMap,
    fibers: Arc<Vec<Vec<usize>>>,
}

impl Family {
    pub fn new(proj: FinMap) -> Self {
        let mut fibers = vec![Vec::new(); proj.cod.len()];
        for (i, &j) in proj.table.iter().enumerate() {
            fibers[j].push(i);
        }
        Family {
            proj,
            fibers: Arc::new(fibers),
        }
    }

    /// Canonical family with the given fiber sizes: total elements are
    /// `(b, i)` for `i < size(b)`, grouped in base order.
    pub fn from_fiber_sizes(base: FinSet, sizes: &[u64]) -> Result<Self> {
        if sizes.len() != base.len() {
            return Err(Error::boundary(
                "Family::from_fiber_sizes",
                format!("{} sizes for base of {}", sizes.len(), base.len()),
            ));
        }
        let mut elems = Vec::new();
        let mut table = Vec::new();
        for (b, &k) in sizes.iter().enumerate() {
            for i in 0..k {
                elems.push(Label::pair(base.label(b).clone(), Label::Nat(i)));
                table.push(b);
            }
        }
        let total = FinSet::new(elems)?;
        Ok(Family::new(FinMap::new(total, base, table)?))
    }

    pub fn proj(&self) -> &FinMap {
        &self.proj
    }

    pub fn total(&self) -> &FinSet {
        &self.proj.dom
    }

    pub fn base(&self) -> &FinSet {
        &self.proj.cod
    }

    pub fn fiber_size(&self, b: usize) -> usize {
        self.fibers[b].len()
    }

    pub fn fiber_indices(&self, b: usize) -> &[usize] {
        &self.fibers[b]
    }

    pub fn fiber_labels(&self, b: &Label) -> Result<Vec<Label>> {
        let j = self.base().require(b, "family base")?;
        Ok(self.fibers[j]
            .iter()
            .map(|&i| self.total().label(i).clone())
            .collect())
    }

    pub fn fiber_sizes(&self) -> Vec<usize> {
        self.fibers.iter().map(|f| f.len()).collect()
    }
}

impl fmt::Debug for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Family{{base: {:?}, fiber sizes: {:?}}}",
            self.base(),
            self.fiber_sizes()
        )
    }
}

impl Serialize for Family {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.proj.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Family {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(Family::new(FinMap::deserialize(d)?))
    }
}

/// The canonical pullback of a cospan `f : A → C ← B : g`.
///
/// Elements are pairs `(a, b)` with `f(a) = g(b)`, ordered lexicographically
/// by the enumeration orders of `A` and `B`.
pub fn pullback(f: &FinMap, g: &FinMap) -> Result<(FinSet, FinMap, FinMap)> {
    if f.cod != g.cod {
        return Err(Error::boundary(
            "pullback",
            "cospan legs have different codomains".to_string(),
        ));
    }
    // group B by image to avoid the full product scan
    let mut by_image = vec![Vec::new(); g.cod.len()];
    for (b, &c) in g.table.iter().enumerate() {
        by_image[c].push(b);
    }
    let mut elems = Vec::new();
    let mut t1 = Vec::new();
    let mut t2 = Vec::new();
    for (a, &c) in f.table.iter().enumerate() {
        for &b in &by_image[c] {
            elems.push(Label::pair(f.dom.label(a).clone(), g.dom.label(b).clone()));
            t1.push(a);
            t2.push(b);
        }
    }
    let p = FinSet::new(elems)?;
    let p1 = FinMap::new(p.clone(), f.dom.clone(), t1)?;
    let p2 = FinMap::new(p.clone(), g.dom.clone(), t2)?;
    Ok((p, p1, p2))
}

/// Binary product, as the pullback over the terminal object.
pub fn product(a: &FinSet, b: &FinSet) -> (FinSet, FinMap, FinMap) {
    let (p, p1, p2) = pullback(
        &FinMap::to_terminal(a.clone()),
        &FinMap::to_terminal(b.clone()),
    )
    .expect("product cospan is always compatible");
    (p, p1, p2)
}

/// A boundary-compatible square
///
/// ```text
///        top
///   TL -------> TR
///    |           |
///  left        right
///    |           |
///    v           v
///   BL -------> BR
///       bottom
/// ```
///
/// Commutativity is checked, not assumed.
#[derive(Clone, Debug)]
pub struct Square {
    pub top: FinMap,
    pub bottom: FinMap,
    pub left: FinMap,
    pub right: FinMap,
}

impl Square {
    pub fn new(top: FinMap, bottom: FinMap, left: FinMap, right: FinMap) -> Result<Self> {
        if top.dom != left.dom {
            return Err(Error::boundary("Square::new", "top/left domains differ"));
        }
        if top.cod != right.dom {
            return Err(Error::boundary("Square::new", "top codomain vs right domain"));
        }
        if left.cod != bottom.dom {
            return Err(Error::boundary("Square::new", "left codomain vs bottom domain"));
        }
        if bottom.cod != right.cod {
            return Err(Error::boundary("Square::new", "bottom/right codomains differ"));
        }
        Ok(Square {
            top,
            bottom,
            left,
            right,
        })
    }

    /// First top-left element where the two composites disagree.
    pub fn commutation_failure(&self) -> Option<Label> {
        (0..self.top.dom.len())
            .find(|&i| {
                self.right.apply_idx(self.top.apply_idx(i))
                    != self.bottom.apply_idx(self.left.apply_idx(i))
            })
            .map(|i| self.top.dom.label(i).clone())
    }

    pub fn commutes(&self) -> bool {
        self.commutation_failure().is_none()
    }
}

/// Outcome of the cartesianness check; non-commuting squares are reported as
/// not-a-square, distinct from a commuting-but-not-cartesian `false`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum PullbackStatus {
    Cartesian,
    NotCommuting { witness: Label },
    NotCartesian { base: Label, detail: String },
}

impl PullbackStatus {
    pub fn is_cartesian(&self) -> bool {
        matches!(self, PullbackStatus::Cartesian)
    }
}

/// Fiberwise cartesianness criterion: for every bottom-left element `x`, the
/// map induced by `top` from the `left`-fiber over `x` to the `right`-fiber
/// over `bottom(x)` must be a bijection.
pub fn is_pullback(sq: &Square) -> PullbackStatus {
    if let Some(witness) = sq.commutation_failure() {
        return PullbackStatus::NotCommuting { witness };
    }
    let left = Family::new(sq.left.clone());
    let right = Family::new(sq.right.clone());
    for (x, fiber) in left.fibers.iter().enumerate() {
        let target = sq.bottom.apply_idx(x);
        let expected = right.fiber_indices(target);
        if fiber.len() != expected.len() {
            return PullbackStatus::NotCartesian {
                base: sq.bottom.dom.label(x).clone(),
                detail: format!(
                    "fiber has {} elements, expected {}",
                    fiber.len(),
                    expected.len()
                ),
            };
        }
        let mut seen = vec![false; sq.right.dom.len()];
        for &e in fiber {
            let im = sq.top.apply_idx(e);
            // commutativity already guarantees im lies over target
            if std::mem::replace(&mut seen[im], true) {
                return PullbackStatus::NotCartesian {
                    base: sq.bottom.dom.label(x).clone(),
                    detail: format!(
                        "two fiber elements map to {}",
                        sq.right.dom.label(im)
                    ),
                };
            }
        }
    }
    PullbackStatus::Cartesian
}

/// Reindex a family along `f : X → Y`: the fiber over `x` is the fiber of
/// `fam` over `f(x)`, relabeled as the canonical pullback pairs `(x, e)`.
pub fn base_change(f: &FinMap, fam: &Family) -> Result<Family> {
    if f.cod != *fam.base() {
        return Err(Error::boundary(
            "base_change",
            "map codomain differs from family base",
        ));
    }
    let (_, p1, _) = pullback(f, fam.proj())?;
    Ok(Family::new(p1))
}

/// Sum a family along `f : X → Y`: the fiber over `y` is the disjoint union
/// of the fibers over `f⁻¹(y)`. Elements keep their labels, regrouped in
/// `(y, x, fiber)` order.
pub fn dependent_sum(f: &FinMap, fam: &Family) -> Result<Family> {
    if f.dom != *fam.base() {
        return Err(Error::boundary(
            "dependent_sum",
            "map domain differs from family base",
        ));
    }
    let xs_over = {
        let mut v = vec![Vec::new(); f.cod.len()];
        for (x, &y) in f.table.iter().enumerate() {
            v[y].push(x);
        }
        v
    };
    let mut elems = Vec::new();
    let mut table = Vec::new();
    for (y, xs) in xs_over.iter().enumerate() {
        for &x in xs {
            for &e in fam.fiber_indices(x) {
                elems.push(fam.total().label(e).clone());
                table.push(y);
            }
        }
    }
    let total = FinSet::new(elems)?;
    Ok(Family::new(FinMap::new(total, f.cod.clone(), table)?))
}

/// Enumerate all tuples with the i-th entry drawn from `choices[i]`, in
/// lexicographic order with the first coordinate most significant.
fn tuples_of(choices: &[Vec<Label>]) -> Vec<Vec<Label>> {
    let mut out = vec![Vec::new()];
    for c in choices {
        let mut next = Vec::with_capacity(out.len() * c.len());
        for prefix in &out {
            for l in c {
                let mut t = prefix.clone();
                t.push(l.clone());
                next.push(t);
            }
        }
        out = next;
    }
    out
}

/// Push a family forward along `f : X → Y`: the fiber over `y` is the set of
/// sections of `fam` over `f⁻¹(y)`, encoded as `(y, ⟨choices⟩)` tuples with
/// one entry per fiber point in enumeration order.
pub fn pushforward(f: &FinMap, fam: &Family) -> Result<Family> {
    if f.dom != *fam.base() {
        return Err(Error::boundary(
            "pushforward",
            "map domain differs from family base",
        ));
    }
    let mut xs_over = vec![Vec::new(); f.cod.len()];
    for (x, &y) in f.table.iter().enumerate() {
        xs_over[y].push(x);
    }
    let mut elems = Vec::new();
    let mut table = Vec::new();
    for (y, xs) in xs_over.iter().enumerate() {
        let choices: Vec<Vec<Label>> = xs
            .iter()
            .map(|&x| {
                fam.fiber_indices(x)
                    .iter()
                    .map(|&e| fam.total().label(e).clone())
                    .collect()
            })
            .collect();
        for section in tuples_of(&choices) {
            elems.push(Label::pair(f.cod.label(y).clone(), Label::tuple(section)));
            table.push(y);
        }
    }
    let total = FinSet::new(elems)?;
    Ok(Family::new(FinMap::new(total, f.cod.clone(), table)?))
}

/// Exponential in the slice over the common base: the fiber over `x` is the
/// set of all functions from `f1`'s fiber to `f2`'s fiber, encoded as
/// `(x, ⟨values⟩)` tuples indexed by `f1`'s fiber enumeration.
pub fn slice_exponential(f1: &Family, f2: &Family) -> Result<Family> {
    if f1.base() != f2.base() {
        return Err(Error::boundary(
            "slice_exponential",
            "families live over different bases",
        ));
    }
    let base = f1.base().clone();
    let mut elems = Vec::new();
    let mut table = Vec::new();
    for x in 0..base.len() {
        let values: Vec<Label> = f2
            .fiber_indices(x)
            .iter()
            .map(|&e| f2.total().label(e).clone())
            .collect();
        let choices = vec![values; f1.fiber_size(x)];
        for func in tuples_of(&choices) {
            elems.push(Label::pair(base.label(x).clone(), Label::tuple(func)));
            table.push(x);
        }
    }
    let total = FinSet::new(elems)?;
    Ok(Family::new(FinMap::new(total, base, table)?))
}

/// Evaluate an element of `slice_exponential(f1, f2)` at a point of `f1`'s
/// fiber over the same base point.
pub fn slice_eval(f1: &Family, exp_elem: &Label, arg: &Label) -> Result<Label> {
    let (x, func) = exp_elem.as_pair().ok_or(Error::Malformed {
        op: "slice_eval",
        expected: "(base, ⟨values⟩)",
        got: exp_elem.clone(),
    })?;
    let values = func.as_tuple().ok_or(Error::Malformed {
        op: "slice_eval",
        expected: "(base, ⟨values⟩)",
        got: exp_elem.clone(),
    })?;
    let b = f1.base().require(x, "exponential base")?;
    let pos = f1
        .fiber_indices(b)
        .iter()
        .position(|&e| f1.total().label(e) == arg)
        .ok_or_else(|| Error::UnknownLabel {
            set: format!("fiber over {x}"),
            label: arg.clone(),
        })?;
    Ok(values[pos].clone())
}

/// Transpose a fibered map `u : G ×ₓ F1 → F2` (given on pairs) into
/// `G → [F1, F2]`, the universal property of the slice exponential.
pub fn slice_transpose(
    g: &Family,
    f1: &Family,
    f2: &Family,
    u: impl Fn(&Label, &Label) -> Result<Label>,
) -> Result<FinMap> {
    let exp = slice_exponential(f1, f2)?;
    let mut table = Vec::with_capacity(g.total().len());
    for ge in g.total().iter() {
        let x = g.proj().apply(ge)?;
        let b = f1.base().require(x, "slice base")?;
        let mut values = Vec::with_capacity(f1.fiber_size(b));
        for &e in f1.fiber_indices(b) {
            values.push(u(ge, f1.total().label(e))?);
        }
        let elem = Label::pair(x.clone(), Label::tuple(values));
        table.push(exp.total().require(&elem, "slice exponential")?);
    }
    FinMap::new(g.total().clone(), exp.total().clone(), table)
}

/// All total maps from `dom` to `cod`, in lexicographic table order.
pub fn all_maps(dom: &FinSet, cod: &FinSet) -> Vec<FinMap> {
    let choices = vec![cod.labels().to_vec(); dom.len()];
    tuples_of(&choices)
        .into_iter()
        .map(|images| {
            let table = images
                .iter()
                .map(|l| cod.position(l).unwrap())
                .collect::<Vec<_>>();
            FinMap::new(dom.clone(), cod.clone(), table).unwrap()
        })
        .collect()
}

/// A bijection `lhs → rhs` matching elements by a key function; fails if the
/// key map is not a bijection.
pub fn bijection_by_key(
    lhs: &FinSet,
    rhs: &FinSet,
    key: impl Fn(&Label) -> Result<Label>,
) -> Result<FinMap> {
    if lhs.len() != rhs.len() {
        return Err(Error::Invalid(format!(
            "no bijection: sizes {} vs {}",
            lhs.len(),
            rhs.len()
        )));
    }
    let m = FinMap::from_fn(lhs.clone(), rhs.clone(), |l| key(l).unwrap_or(Label::Nat(u64::MAX)));
    let m = m?;
    if !m.is_bijective() {
        return Err(Error::Invalid("key map is not a bijection".into()));
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn swap2() -> FinMap {
        let s = FinSet::canonical(2);
        FinMap::new(s.clone(), s, vec![1, 0]).unwrap()
    }

    #[test]
    fn compose_identity_laws() {
        let f = FinMap::new(FinSet::canonical(3), FinSet::canonical(2), vec![0, 1, 1]).unwrap();
        let idd = FinMap::identity(f.dom());
        let idc = FinMap::identity(f.cod());
        assert_eq!(compose(&f, &idd).unwrap(), f);
        assert_eq!(compose(&idc, &f).unwrap(), f);
    }

    #[test]
    fn compose_constants() {
        let one = FinSet::canonical(1);
        let six = FinSet::canonical(6);
        let f = FinMap::constant(FinSet::canonical(2), one.clone(), &Label::Nat(0)).unwrap();
        let g = FinMap::constant(one, six.clone(), &Label::Nat(5)).unwrap();
        let gf = compose(&g, &f).unwrap();
        assert_eq!(gf.apply(&Label::Nat(0)).unwrap(), &Label::Nat(5));
        assert_eq!(gf.apply(&Label::Nat(1)).unwrap(), &Label::Nat(5));
    }

    #[test]
    fn compose_swap_involution() {
        let s = swap2();
        assert_eq!(compose(&s, &s).unwrap(), FinMap::identity(s.dom()));
    }

    #[test]
    fn compose_boundary_mismatch() {
        let f = FinMap::to_terminal(FinSet::canonical(2));
        let g = FinMap::to_terminal(FinSet::canonical(3));
        assert!(compose(&g, &f).is_err());
    }

    #[test]
    fn pullback_of_identities_is_diagonal() {
        let s = FinSet::canonical(2);
        let id = FinMap::identity(&s);
        let (p, p1, p2) = pullback(&id, &id).unwrap();
        assert_eq!(p.len(), 2);
        assert!(p1.is_bijective() && p2.is_bijective());
    }

    #[test]
    fn pullback_over_terminal_is_product() {
        let f = FinMap::to_terminal(FinSet::canonical(2));
        let g = FinMap::to_terminal(FinSet::canonical(3));
        let (p, _, _) = pullback(&f, &g).unwrap();
        assert_eq!(p.len(), 6);
        // lexicographic: (0,0),(0,1),(0,2),(1,0),...
        assert_eq!(p.label(1), &Label::pair(Label::Nat(0), Label::Nat(1)));
        assert_eq!(p.label(3), &Label::pair(Label::Nat(1), Label::Nat(0)));
    }

    #[test]
    fn pullback_along_identity_projects_bijectively() {
        let two = FinSet::canonical(2);
        let f = FinMap::identity(&two);
        // g : 3 → 2 with fibers (1, 2)
        let g = FinMap::new(FinSet::canonical(3), two, vec![0, 1, 1]).unwrap();
        let (p, _, p2) = pullback(&f, &g).unwrap();
        assert_eq!(p.len(), 3);
        assert!(p2.is_bijective());
    }

    #[test]
    fn pullback_square_is_cartesian_and_subset_is_not() {
        let f = FinMap::new(FinSet::canonical(2), FinSet::canonical(2), vec![0, 1]).unwrap();
        let g = FinMap::new(FinSet::canonical(3), FinSet::canonical(2), vec![0, 1, 1]).unwrap();
        let (p, p1, p2) = pullback(&f, &g).unwrap();
        let sq = Square::new(p2.clone(), f.clone(), p1.clone(), g.clone()).unwrap();
        assert!(is_pullback(&sq).is_cartesian());

        // drop one pullback element: still commutes, no longer cartesian
        let sub = FinSet::new(p.labels()[..p.len() - 1].to_vec()).unwrap();
        let incl = FinMap::from_fn(sub.clone(), p.clone(), |l| l.clone()).unwrap();
        let sq2 = Square::new(
            compose(&p2, &incl).unwrap(),
            f,
            compose(&p1, &incl).unwrap(),
            g,
        )
        .unwrap();
        match is_pullback(&sq2) {
            PullbackStatus::NotCartesian { .. } => {}
            other => panic!("expected NotCartesian, got {other:?}"),
        }
    }

    #[test]
    fn is_pullback_flags_non_commuting() {
        let two = FinSet::canonical(2);
        let id = FinMap::identity(&two);
        let sq = Square::new(swap2(), id.clone(), id.clone(), id).unwrap();
        match is_pullback(&sq) {
            PullbackStatus::NotCommuting { witness } => assert_eq!(witness, Label::Nat(0)),
            other => panic!("expected NotCommuting, got {other:?}"),
        }
    }

    #[test]
    fn base_change_cases() {
        let two = FinSet::canonical(2);
        let fam = Family::from_fiber_sizes(two.clone(), &[1, 3]).unwrap();
        // identity: sizes preserved
        let bc = base_change(&FinMap::identity(&two), &fam).unwrap();
        assert_eq!(bc.fiber_sizes(), vec![1, 3]);
        // constant at 0: both fibers are fam's fiber over 0
        let c = FinMap::constant(two.clone(), two.clone(), &Label::Nat(0)).unwrap();
        let bc = base_change(&c, &fam).unwrap();
        assert_eq!(bc.fiber_sizes(), vec![1, 1]);
        // swap: fibers exchanged
        let bc = base_change(&swap2(), &fam).unwrap();
        assert_eq!(bc.fiber_sizes(), vec![3, 1]);
    }

    #[test]
    fn dependent_sum_cases() {
        let two = FinSet::canonical(2);
        let fam = Family::from_fiber_sizes(two.clone(), &[2, 3]).unwrap();
        let id = FinMap::identity(&two);
        assert_eq!(dependent_sum(&id, &fam).unwrap().fiber_sizes(), vec![2, 3]);

        let f = FinMap::to_terminal(two);
        assert_eq!(dependent_sum(&f, &fam).unwrap().fiber_sizes(), vec![5]);

        // f : 3 → 2 with fibers (2, 1), fam fibers (1, 1, 4)
        let three = FinSet::canonical(3);
        let f = FinMap::new(three.clone(), FinSet::canonical(2), vec![0, 0, 1]).unwrap();
        let fam = Family::from_fiber_sizes(three, &[1, 1, 4]).unwrap();
        assert_eq!(dependent_sum(&f, &fam).unwrap().fiber_sizes(), vec![2, 4]);
    }

    #[test]
    fn pushforward_cases() {
        let three = FinSet::canonical(3);
        let fam = Family::from_fiber_sizes(three.clone(), &[2, 3, 4]).unwrap();
        let id = FinMap::identity(&three);
        // along the identity each section picks one point: sizes preserved
        assert_eq!(pushforward(&id, &fam).unwrap().fiber_sizes(), vec![2, 3, 4]);

        let f = FinMap::to_terminal(three.clone());
        assert_eq!(pushforward(&f, &fam).unwrap().fiber_sizes(), vec![24]);

        let empty = Family::from_fiber_sizes(three, &[2, 0, 4]).unwrap();
        let f2 = FinMap::to_terminal(empty.base().clone());
        assert_eq!(pushforward(&f2, &empty).unwrap().fiber_sizes(), vec![0]);
    }

    #[test]
    fn slice_exponential_cases() {
        let one = FinSet::canonical(1);
        let f1 = Family::from_fiber_sizes(one.clone(), &[2]).unwrap();
        let f2 = Family::from_fiber_sizes(one.clone(), &[3]).unwrap();
        assert_eq!(slice_exponential(&f1, &f2).unwrap().fiber_sizes(), vec![9]);

        // singleton exponent: result sizes equal f2's
        let two = FinSet::canonical(2);
        let ones = Family::from_fiber_sizes(two.clone(), &[1, 1]).unwrap();
        let f2 = Family::from_fiber_sizes(two, &[2, 5]).unwrap();
        assert_eq!(
            slice_exponential(&ones, &f2).unwrap().fiber_sizes(),
            vec![2, 5]
        );

        // empty exponent: a unique function
        let f1 = Family::from_fiber_sizes(one.clone(), &[0]).unwrap();
        let f2 = Family::from_fiber_sizes(one, &[5]).unwrap();
        assert_eq!(slice_exponential(&f1, &f2).unwrap().fiber_sizes(), vec![1]);
    }

    #[test]
    fn slice_eval_and_transpose_round_trip() {
        let one = FinSet::canonical(1);
        let f1 = Family::from_fiber_sizes(one.clone(), &[2]).unwrap();
        let f2 = Family::from_fiber_sizes(one.clone(), &[3]).unwrap();
        let g = Family::from_fiber_sizes(one, &[2]).unwrap();
        // u(ge, e) chosen to depend on both arguments
        let u = |ge: &Label, e: &Label| -> Result<Label> {
            let gi = ge.as_pair().unwrap().1.as_nat().unwrap();
            let ei = e.as_pair().unwrap().1.as_nat().unwrap();
            Ok(Label::pair(Label::Nat(0), Label::Nat((gi + ei) % 3)))
        };
        let tr = slice_transpose(&g, &f1, &f2, u).unwrap();
        for ge in g.total().iter() {
            let exp_elem = tr.apply(ge).unwrap();
            for e in f1.fiber_labels(&Label::Nat(0)).unwrap() {
                assert_eq!(slice_eval(&f1, exp_elem, &e).unwrap(), u(ge, &e).unwrap());
            }
        }
    }

    #[test]
    fn finmap_json_round_trip() {
        let f = FinMap::new(FinSet::canonical(3), FinSet::canonical(2), vec![0, 1, 1]).unwrap();
        let text = serde_json::to_string(&f).unwrap();
        let back: FinMap = serde_json::from_str(&text).unwrap();
        assert_eq!(back, f);
    }
}
