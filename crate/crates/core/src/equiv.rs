//! The classifier of type equivalences and its higher structure.
//!
//! Over a finite region of the type carrier, the classifier is the family
//! over pairs `(A, B)` whose fiber holds the equivalences `A ≃ B`. In the
//! extensional model an invertible map has a unique inversion witness and
//! proofs are propositional, so the fiber is stored directly as the set of
//! fiberwise bijections, encoded like slice-exponential elements; the
//! sum/product construction through the equality former is kept alongside as
//! a counting oracle. The groupoid operations, the lifting of equivalences
//! over a context, classifier invariance, and the two-cells between parallel
//! maps of classified families are all computed on this materialized region.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::finset::{
    base_change, compose, pullback, pushforward, slice_eval, slice_exponential, FinMap, FinSet,
    Family,
};
use crate::label::Label;
use crate::mlalg::{cartesian, comprehend, MLAlgebra};

/// Permutation-style encoding of an equivalence fiber element: the pair of
/// endpoint types together with the value table over the domain fiber.
fn equiv_elem(pair: &Label, values: Vec<Label>) -> Label {
    Label::pair(pair.clone(), Label::tuple(values))
}

/// The materialized classifier over a finite list of types.
#[derive(Clone, Debug)]
pub struct EquivClassifier {
    /// the region of types the classifier covers
    pub types: FinSet,
    /// base object: ordered pairs of types
    pub base: FinSet,
    pub pr1: FinMap,
    pub pr2: FinMap,
    /// the classifier family over `base`
    pub family: Family,
    /// construction trace: the slice exponential of the two pulled-back
    /// copies of the term family, with the universal arrow between them
    pub exponential: Family,
    pub epsilon: FinMap,
    /// inclusion of the classifier into the exponential's total
    pub to_exponential: FinMap,
    /// the universal equivalence: domain/codomain families over the
    /// classifier's total with the map between them
    pub e1: Family,
    pub e2: Family,
    pub universal: FinMap,
}

/// Build the classifier over the given types.
pub fn build_equiv(alg: &MLAlgebra, types: &[Label]) -> Result<EquivClassifier> {
    if !alg.has_eq() {
        return Err(Error::MissingEq);
    }
    let types = FinSet::new(types.to_vec())?;
    let t_fam = alg.t_truncation(types.labels())?.family().clone();

    let (base, pr1, pr2) = crate::finset::product(&types, &types);

    // pulled-back term families over the pair base and their exponential
    let u1 = base_change(&pr1, &t_fam)?;
    let u2 = base_change(&pr2, &t_fam)?;
    let exponential = slice_exponential(&u1, &u2)?;

    // universal arrow over the exponential: evaluate at the pulled-back point
    let e1_over_exp = base_change(exponential.proj(), &u1)?;
    let e2_over_exp = base_change(exponential.proj(), &u2)?;
    let epsilon = FinMap::try_from_fn(
        e1_over_exp.total().clone(),
        e2_over_exp.total().clone(),
        |l| {
            let (f, x) = l.as_pair().expect("pulled-back point");
            Ok(Label::pair(f.clone(), slice_eval(&u1, f, x)?))
        },
    )?;

    // the classifier itself: fiberwise bijections, direct representation
    let mut elems = Vec::new();
    let mut table = Vec::new();
    for (bi, pair) in base.iter().enumerate() {
        let (a, b) = pair.as_pair().expect("pair base");
        let dom_fiber = alg.t_fiber(a)?;
        let cod_fiber = alg.t_fiber(b)?;
        for values in cartesian(&vec![cod_fiber.clone(); dom_fiber.len()]) {
            let mut seen = std::collections::HashSet::new();
            if values.len() == cod_fiber.len() && values.iter().all(|v| seen.insert(v.clone())) {
                elems.push(equiv_elem(pair, values));
                table.push(bi);
            }
        }
    }
    let total = FinSet::new(elems)?;
    let family = Family::new(FinMap::new(total.clone(), base.clone(), table)?);

    let to_exponential = FinMap::try_from_fn(total.clone(), exponential.total().clone(), |l| {
        let (pair, values) = l.as_pair().expect("classifier element");
        let wrapped = values
            .as_tuple()
            .expect("value table")
            .iter()
            .map(|v| Label::pair(pair.clone(), v.clone()));
        Ok(Label::pair(pair.clone(), Label::tuple(wrapped)))
    })?;

    // universal equivalence over the classifier total
    let dom_types = compose(&pr1, family.proj())?;
    let cod_types = compose(&pr2, family.proj())?;
    let e1 = base_change(&dom_types, &t_fam)?;
    let e2 = base_change(&cod_types, &t_fam)?;
    let universal = FinMap::try_from_fn(e1.total().clone(), e2.total().clone(), |l| {
        let (eq, x) = l.as_pair().expect("pulled-back point");
        Ok(Label::pair(eq.clone(), apply_equiv(alg, eq, x)?))
    })?;

    Ok(EquivClassifier {
        types,
        base,
        pr1,
        pr2,
        family,
        exponential,
        epsilon,
        to_exponential,
        e1,
        e2,
        universal,
    })
}

/// Apply an equivalence element's value table to a term, given the domain
/// fiber enumeration the table is indexed by.
fn apply_table(eq: &Label, dom_fiber: &[Label], x: &Label) -> Result<Label> {
    let (_, values) = eq.as_pair().ok_or(Error::Malformed {
        op: "apply_equiv",
        expected: "((A,B), ⟨values⟩)",
        got: eq.clone(),
    })?;
    let values = values.as_tuple().unwrap();
    let pos = dom_fiber
        .iter()
        .position(|t| t == x)
        .ok_or_else(|| Error::UnknownLabel {
            set: "equivalence domain fiber".into(),
            label: x.clone(),
        })?;
    Ok(values[pos].clone())
}

/// Apply a classifier element's table to a term of its domain type.
pub fn apply_equiv(alg: &MLAlgebra, eq: &Label, x: &Label) -> Result<Label> {
    let (pair, _) = eq.as_pair().ok_or(Error::Malformed {
        op: "apply_equiv",
        expected: "((A,B), ⟨values⟩)",
        got: eq.clone(),
    })?;
    let (a, _) = pair.as_pair().ok_or(Error::Malformed {
        op: "apply_equiv",
        expected: "((A,B), ⟨values⟩)",
        got: eq.clone(),
    })?;
    apply_table(eq, &alg.t_fiber(a)?, x)
}

impl EquivClassifier {
    pub fn fiber_size(&self, a: &Label, b: &Label) -> Result<usize> {
        let pair = Label::pair(a.clone(), b.clone());
        let bi = self.base.require(&pair, "classifier base")?;
        Ok(self.family.fiber_size(bi))
    }

    /// Identity equivalences.
    pub fn refl_map(&self, alg: &MLAlgebra) -> Result<FinMap> {
        FinMap::try_from_fn(self.types.clone(), self.family.total().clone(), |a| {
            let values = alg.t_fiber(a)?;
            Ok(equiv_elem(&Label::pair(a.clone(), a.clone()), values))
        })
    }

    /// Inversion.
    pub fn sym_map(&self, alg: &MLAlgebra) -> Result<FinMap> {
        let total = self.family.total().clone();
        FinMap::try_from_fn(total.clone(), total, |l| {
            let (pair, values) = l.as_pair().expect("classifier element");
            let (a, b) = pair.as_pair().expect("pair");
            let values = values.as_tuple().unwrap();
            let dom_fiber = alg.t_fiber(a)?;
            let cod_fiber = alg.t_fiber(b)?;
            // invert the table positionwise
            let mut inverse = vec![None; values.len()];
            for (i, v) in values.iter().enumerate() {
                let j = cod_fiber.iter().position(|t| t == v).unwrap();
                inverse[j] = Some(dom_fiber[i].clone());
            }
            Ok(equiv_elem(
                &Label::pair(b.clone(), a.clone()),
                inverse.into_iter().map(|v| v.unwrap()).collect(),
            ))
        })
    }

    /// Composable pairs (matching middle type) with the composition map.
    pub fn trans_map(&self, alg: &MLAlgebra) -> Result<(FinSet, FinMap)> {
        let cod_of = compose(&self.pr2, self.family.proj())?;
        let dom_of = compose(&self.pr1, self.family.proj())?;
        let (pairs, left, right) = pullback(&cod_of, &dom_of)?;
        let table = FinMap::try_from_fn(pairs.clone(), self.family.total().clone(), |l| {
            let i = pairs.position(l).unwrap();
            let e1 = self.family.total().label(left.apply_idx(i));
            let e2 = self.family.total().label(right.apply_idx(i));
            let (p1, v1) = e1.as_pair().unwrap();
            let (a, _) = p1.as_pair().unwrap();
            let (p2, _) = e2.as_pair().unwrap();
            let (_, c) = p2.as_pair().unwrap();
            let composed: Result<Vec<Label>> = v1
                .as_tuple()
                .unwrap()
                .iter()
                .map(|mid| apply_equiv(alg, e2, mid))
                .collect();
            Ok(equiv_elem(&Label::pair(a.clone(), c.clone()), composed?))
        })?;
        Ok((pairs, table))
    }
}

/// Lift an equivalence `e` between two classified families over `X` to a map
/// into the classifier. Rejects non-equivalences with a witness element.
pub fn lift_equivalence(
    alg: &MLAlgebra,
    ec: &EquivClassifier,
    alpha: &FinMap,
    beta: &FinMap,
    e: &FinMap,
) -> Result<FinMap> {
    let a = comprehend(alg, alpha)?.family;
    let b = comprehend(alg, beta)?.family;
    if e.dom() != a.total() || e.cod() != b.total() {
        return Err(Error::boundary(
            "lift_equivalence",
            "map does not run between the comprehended families",
        ));
    }
    // over X and fiberwise bijective
    for (i, l) in a.total().iter().enumerate() {
        let img = e.cod().label(e.apply_idx(i));
        let (x, _) = l.as_pair().expect("comprehension point");
        let (x2, _) = img.as_pair().expect("comprehension point");
        if x != x2 {
            return Err(Error::NotEquivalence { witness: l.clone() });
        }
    }
    for (xi, x) in alpha.dom().iter().enumerate() {
        let fiber = a.fiber_indices(xi);
        let mut seen = std::collections::HashSet::new();
        let cod_size = b.fiber_size(xi);
        if fiber.len() != cod_size {
            return Err(Error::NotEquivalence { witness: x.clone() });
        }
        for &idx in fiber {
            if !seen.insert(e.apply_idx(idx)) {
                return Err(Error::NotEquivalence { witness: x.clone() });
            }
        }
    }
    FinMap::try_from_fn(alpha.dom().clone(), ec.family.total().clone(), |x| {
        let xi = alpha.dom().position(x).unwrap();
        let pair = Label::pair(alpha.apply(x)?.clone(), beta.apply(x)?.clone());
        let values: Vec<Label> = a
            .fiber_indices(xi)
            .iter()
            .map(|&idx| {
                let img = e.cod().label(e.apply_idx(idx));
                img.as_pair().unwrap().1.clone()
            })
            .collect();
        Ok(equiv_elem(&pair, values))
    })
}

/// Pull the universal equivalence back along a lift and compare with `e`:
/// the round trip must reproduce the original map exactly.
pub fn lift_round_trip(
    alg: &MLAlgebra,
    ec: &EquivClassifier,
    alpha: &FinMap,
    lift: &FinMap,
    e: &FinMap,
) -> Result<bool> {
    let a = comprehend(alg, alpha)?.family;
    for (i, l) in a.total().iter().enumerate() {
        let (x, term) = l.as_pair().expect("comprehension point");
        let eq = lift.apply(x)?;
        let image = Label::pair(x.clone(), apply_equiv(alg, eq, term)?);
        if e.cod().label(e.apply_idx(i)) != &image {
            return Ok(false);
        }
    }
    let _ = ec;
    Ok(true)
}

/// Reclassify a lifted equivalence along new classifying maps for the same
/// families, by composing with the two identity lifts in the stated order.
pub fn reclassify_equivalence(
    alg: &MLAlgebra,
    ec: &EquivClassifier,
    lift: &FinMap,
    alpha: &FinMap,
    beta: &FinMap,
    alpha2: &FinMap,
    beta2: &FinMap,
) -> Result<FinMap> {
    for (name, old, new) in [("domain", alpha, alpha2), ("codomain", beta, beta2)] {
        if old.dom() != new.dom() {
            return Err(Error::ClassifierMismatch(format!(
                "{name} classifiers have different contexts"
            )));
        }
        for x in old.dom().iter() {
            if old.apply(x)? != new.apply(x)? {
                return Err(Error::ClassifierMismatch(format!(
                    "{name} classifiers disagree at {x}: {} vs {}",
                    old.apply(x)?,
                    new.apply(x)?
                )));
            }
        }
    }
    let refl = ec.refl_map(alg)?;
    let (pairs, trans) = ec.trans_map(alg)?;
    // ℓ(α′, α) then the lift, then ℓ(β, β′)
    let l_a = FinMap::try_from_fn(alpha.dom().clone(), ec.family.total().clone(), |x| {
        refl.apply(alpha2.apply(x)?).cloned()
    })?;
    let l_b = FinMap::try_from_fn(beta.dom().clone(), ec.family.total().clone(), |x| {
        refl.apply(beta2.apply(x)?).cloned()
    })?;
    let step = |first: &FinMap, second: &FinMap| -> Result<FinMap> {
        FinMap::try_from_fn(first.dom().clone(), ec.family.total().clone(), |x| {
            let pt = Label::pair(first.apply(x)?.clone(), second.apply(x)?.clone());
            let i = pairs.require(&pt, "composable pairs")?;
            Ok(trans.cod().label(trans.apply_idx(i)).clone())
        })
    };
    let mid = step(&l_a, lift)?;
    step(&mid, &l_b)
}

/// The classifier for equivalences between fibers of one classified family,
/// pulled back along its classifying map on both sides.
#[derive(Clone, Debug)]
pub struct EquivOver {
    pub base: FinSet,
    pub pr1: FinMap,
    pub pr2: FinMap,
    pub family: Family,
    /// projection into the universal classifier total
    pub to_universal: FinMap,
}

/// Pull the classifier back along `β × β` for a classifier `β : Y → U`.
pub fn equiv_over(alg: &MLAlgebra, ec: &EquivClassifier, beta: &FinMap) -> Result<EquivOver> {
    let y = beta.dom().clone();
    let (base, pr1, pr2) = crate::finset::product(&y, &y);
    let mut elems = Vec::new();
    let mut table = Vec::new();
    for (bi, pt) in base.iter().enumerate() {
        let (y1, y2) = pt.as_pair().unwrap();
        let dom_fiber = alg.t_fiber(beta.apply(y1)?)?;
        let cod_fiber = alg.t_fiber(beta.apply(y2)?)?;
        for values in cartesian(&vec![cod_fiber.clone(); dom_fiber.len()]) {
            let mut seen = std::collections::HashSet::new();
            if values.len() == cod_fiber.len() && values.iter().all(|v| seen.insert(v.clone())) {
                elems.push(equiv_elem(pt, values));
                table.push(bi);
            }
        }
    }
    let total = FinSet::new(elems)?;
    let family = Family::new(FinMap::new(total.clone(), base.clone(), table)?);
    let to_universal = FinMap::try_from_fn(total, ec.family.total().clone(), |l| {
        let (pt, values) = l.as_pair().unwrap();
        let (y1, y2) = pt.as_pair().unwrap();
        Ok(Label::pair(
            Label::pair(beta.apply(y1)?.clone(), beta.apply(y2)?.clone()),
            values.clone(),
        ))
    })?;
    Ok(EquivOver {
        base,
        pr1,
        pr2,
        family,
        to_universal,
    })
}

/// A two-cell between parallel maps `h1, h2 : X → Y` of classified families:
/// an auto-map of the domain family together with a lift of `(h1, h2)`
/// through the pulled-back classifier.
#[derive(Clone, Debug)]
pub struct TwoCell {
    pub h1: FinMap,
    pub h2: FinMap,
    pub phi: FinMap,
    pub lift: FinMap,
}

#[derive(Clone, Debug, Serialize)]
pub struct TwoCellReport {
    pub valid: bool,
    pub failures: Vec<String>,
}

/// Build the two-cell determined by an auto-equivalence of the domain
/// family, with the lift computed from it.
pub fn two_cell(
    alg: &MLAlgebra,
    eo: &EquivOver,
    alpha: &FinMap,
    beta: &FinMap,
    h1: &FinMap,
    h2: &FinMap,
    phi: &FinMap,
) -> Result<TwoCell> {
    let _ = beta;
    let a = comprehend(alg, alpha)?.family;
    let lift = FinMap::try_from_fn(alpha.dom().clone(), eo.family.total().clone(), |x| {
        let xi = alpha.dom().position(x).unwrap();
        let pt = Label::pair(h1.apply(x)?.clone(), h2.apply(x)?.clone());
        let values: Result<Vec<Label>> = a
            .fiber_indices(xi)
            .iter()
            .map(|&idx| {
                let img = phi.apply(a.total().label(idx))?;
                Ok(img
                    .as_pair()
                    .ok_or(Error::Malformed {
                        op: "two_cell",
                        expected: "comprehension point",
                        got: img.clone(),
                    })?
                    .1
                    .clone())
            })
            .collect();
        Ok(equiv_elem(&pt, values?))
    })?;
    Ok(TwoCell {
        h1: h1.clone(),
        h2: h2.clone(),
        phi: phi.clone(),
        lift,
    })
}

/// Check all two-cell conditions: the parallel maps commute with the
/// classifiers, the auto-map lives over the context and is an equivalence,
/// the lift projects to `(h1, h2)`, and the auto-map is the pullback of the
/// universal equivalence along the lift.
pub fn verify_two_cell(
    alg: &MLAlgebra,
    eo: &EquivOver,
    alpha: &FinMap,
    beta: &FinMap,
    tc: &TwoCell,
) -> Result<TwoCellReport> {
    let mut failures = Vec::new();
    let a = comprehend(alg, alpha)?.family;

    for (name, h) in [("h1", &tc.h1), ("h2", &tc.h2)] {
        match compose(beta, h) {
            Ok(c) if &c == alpha => {}
            Ok(_) => failures.push(format!("{name} does not commute with the classifiers")),
            Err(e) => failures.push(format!("{name}: {e}")),
        }
    }

    // phi over X
    if tc.phi.dom() != a.total() || tc.phi.cod() != a.total() {
        failures.push("phi is not an endomap of the domain family".into());
    } else {
        for l in a.total().iter() {
            let img = tc.phi.apply(l)?;
            if l.as_pair().map(|p| p.0) != img.as_pair().map(|p| p.0) {
                failures.push(format!("phi is not over the context: {l} ↦ {img}"));
                break;
            }
        }
        if !tc.phi.is_bijective() {
            failures.push("phi is not an auto-equivalence".into());
        }
    }

    // lift projects to (h1, h2)
    for x in alpha.dom().iter() {
        let eq = tc.lift.apply(x)?;
        let (pt, _) = eq.as_pair().expect("classifier element");
        let expected = Label::pair(tc.h1.apply(x)?.clone(), tc.h2.apply(x)?.clone());
        if pt != &expected {
            failures.push(format!("lift at {x} sits over {pt}, expected {expected}"));
            break;
        }
    }

    // phi is the pullback of the universal equivalence along the lift
    if failures.is_empty() {
        'outer: for (xi, x) in alpha.dom().iter().enumerate() {
            let eq = tc.lift.apply(x)?;
            let dom_fiber = alg.t_fiber(alpha.apply(x)?)?;
            for &idx in a.fiber_indices(xi) {
                let term = a.total().label(idx).as_pair().unwrap().1;
                let via_lift = apply_table(eq, &dom_fiber, term)?;
                let via_phi = tc.phi.apply(a.total().label(idx))?;
                if via_phi.as_pair().unwrap().1 != &via_lift {
                    failures.push(format!(
                        "phi disagrees with the pulled-back equivalence at {x}: {term}"
                    ));
                    break 'outer;
                }
            }
        }
    }

    let _ = eo;
    Ok(TwoCellReport {
        valid: failures.is_empty(),
        failures,
    })
}

/// Vertical composition of two-cells `h1 ⇒ h2` and `h2 ⇒ h3`.
pub fn vertical_compose(
    alg: &MLAlgebra,
    eo: &EquivOver,
    alpha: &FinMap,
    beta: &FinMap,
    t1: &TwoCell,
    t2: &TwoCell,
) -> Result<TwoCell> {
    if t1.h2 != t2.h1 {
        return Err(Error::boundary(
            "vertical_compose",
            "inner one-cells do not match",
        ));
    }
    let phi = compose(&t2.phi, &t1.phi)?;
    two_cell(alg, eo, alpha, beta, &t1.h1, &t2.h2, &phi)
}

/// The category of two-cells between a fixed parallel pair: its objects,
/// exhibited in bijection with the auto-equivalences of the domain family.
#[derive(Clone, Debug)]
pub struct HomCategory {
    pub cells: Vec<TwoCell>,
    /// canonical encodings of the cells' auto-maps
    pub cell_set: FinSet,
    /// independent enumeration of the auto-equivalences
    pub aut_set: FinSet,
    /// the exhibited bijection
    pub to_aut: FinMap,
}

fn phi_key(a: &Family, phi: &FinMap) -> Label {
    let _ = a;
    Label::tuple((0..phi.dom().len()).map(|i| phi.cod().label(phi.apply_idx(i)).clone()))
}

/// Enumerate all two-cells `h1 ⇒ h2` and the isomorphism onto the
/// auto-equivalence set of the domain family.
pub fn hom_category(
    alg: &MLAlgebra,
    eo: &EquivOver,
    alpha: &FinMap,
    beta: &FinMap,
    h1: &FinMap,
    h2: &FinMap,
) -> Result<HomCategory> {
    let a = comprehend(alg, alpha)?.family;
    // independent enumeration: per-fiber permutations assembled over X
    let fiber_perms: Vec<Vec<Vec<usize>>> = (0..alpha.dom().len())
        .map(|xi| permutations(a.fiber_size(xi)))
        .collect();
    let mut auts: Vec<Vec<&Vec<usize>>> = vec![Vec::new()];
    for perms in &fiber_perms {
        let mut next = Vec::new();
        for prefix in &auts {
            for p in perms {
                let mut q = prefix.clone();
                q.push(p);
                next.push(q);
            }
        }
        auts = next;
    }
    let mut cells = Vec::new();
    let mut cell_labels = Vec::new();
    let mut aut_labels = Vec::new();
    for choice in &auts {
        let mut table = vec![0usize; a.total().len()];
        for (xi, perm) in choice.iter().enumerate() {
            let fiber = a.fiber_indices(xi);
            for (i, &pi) in perm.iter().enumerate() {
                table[fiber[i]] = fiber[pi];
            }
        }
        let phi = FinMap::new(a.total().clone(), a.total().clone(), table)?;
        aut_labels.push(phi_key(&a, &phi));
        let cell = two_cell(alg, eo, alpha, beta, h1, h2, &phi)?;
        cell_labels.push(phi_key(&a, &cell.phi));
        cells.push(cell);
    }
    let cell_set = FinSet::new(cell_labels)?;
    let aut_set = FinSet::new(aut_labels)?;
    let to_aut = FinMap::from_fn(cell_set.clone(), aut_set.clone(), |l| l.clone())?;
    Ok(HomCategory {
        cells,
        cell_set,
        aut_set,
        to_aut,
    })
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    let mut items: Vec<usize> = (0..n).collect();
    permute(&mut items, 0, &mut out);
    out.sort();
    out
}

fn permute(items: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == items.len() {
        out.push(items.clone());
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, out);
        items.swap(k, i);
    }
}

/// Count the equivalence fiber over `(a, b)` through the sum/product
/// construction: the number of triples of a map with two-sided inversion
/// data, each weighted by the product of equality-proof fiber sizes. An
/// independent oracle for the direct bijection representation.
pub fn equiv_fiber_count_via_formers(alg: &MLAlgebra, a: &Label, b: &Label) -> Result<usize> {
    let dom = alg.t_fiber(a)?;
    let cod = alg.t_fiber(b)?;
    let mut count = 0usize;
    for e in cartesian(&vec![cod.clone(); dom.len()]) {
        for f in cartesian(&vec![dom.clone(); cod.len()]) {
            for g in cartesian(&vec![dom.clone(); cod.len()]) {
                let mut weight = 1usize;
                // Π_{x:A} Id(f(e(x)), x)
                for (i, x) in dom.iter().enumerate() {
                    let j = cod.iter().position(|t| t == &e[i]).unwrap();
                    let idty = alg.eq_base(&Label::pair(f[j].clone(), x.clone()))?;
                    weight *= alg.t_fiber(&idty)?.len();
                }
                // Π_{y:B} Id(e(g(y)), y)
                for (j, y) in cod.iter().enumerate() {
                    let i = dom.iter().position(|t| t == &g[j]).unwrap();
                    let idty = alg.eq_base(&Label::pair(e[i].clone(), y.clone()))?;
                    weight *= alg.t_fiber(&idty)?.len();
                }
                count += weight;
            }
        }
    }
    Ok(count)
}

// --- type isomorphism witnesses ---

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TypeIsoLaw {
    SigmaAssoc,
    SigmaUnitL,
    SigmaUnitR,
    PiAssoc,
    PiUnit,
}

impl TypeIsoLaw {
    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "sigma-assoc" => TypeIsoLaw::SigmaAssoc,
            "sigma-unit-l" => TypeIsoLaw::SigmaUnitL,
            "sigma-unit-r" => TypeIsoLaw::SigmaUnitR,
            "pi-assoc" => TypeIsoLaw::PiAssoc,
            "pi-unit" => TypeIsoLaw::PiUnit,
            other => return Err(Error::Invalid(format!("unknown type-iso law {other:?}"))),
        })
    }

    pub const ALL: [TypeIsoLaw; 5] = [
        TypeIsoLaw::SigmaAssoc,
        TypeIsoLaw::SigmaUnitL,
        TypeIsoLaw::SigmaUnitR,
        TypeIsoLaw::PiAssoc,
        TypeIsoLaw::PiUnit,
    ];
}

/// Nested family data over a context: `a` over the context, `b` over `a`'s
/// total, `c` over `b`'s total.
#[derive(Clone, Debug)]
pub struct NestedInstance {
    pub a: Family,
    pub b: Family,
    pub c: Family,
}

impl NestedInstance {
    pub fn validate(&self) -> Result<()> {
        if self.b.base() != self.a.total() || self.c.base() != self.b.total() {
            return Err(Error::boundary(
                "NestedInstance",
                "families are not nested over one another",
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct TypeIsoWitness {
    pub law: TypeIsoLaw,
    pub lhs: Family,
    pub rhs: Family,
    pub bijection: FinMap,
}

impl TypeIsoWitness {
    /// The bijection is invertible and commutes with the projections to the
    /// common base.
    pub fn verify(&self) -> Result<()> {
        if !self.bijection.is_bijective() {
            return Err(Error::Invalid("witness is not a bijection".into()));
        }
        let inv = self.bijection.inverse()?;
        let round = compose(&inv, &self.bijection)?;
        if round != FinMap::identity(self.lhs.total()) {
            return Err(Error::Invalid("inverse does not cancel".into()));
        }
        let lhs_then = compose(self.rhs.proj(), &self.bijection)?;
        if &lhs_then != self.lhs.proj() {
            return Err(Error::Invalid(
                "witness does not commute over the base".into(),
            ));
        }
        Ok(())
    }

    /// Permutation-table export of the bijection.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "law": self.law,
            "size": self.lhs.total().len(),
            "table": self.bijection.dom().iter().map(|l| {
                serde_json::json!({
                    "from": l.to_string(),
                    "to": self.bijection.apply(l).unwrap().to_string(),
                })
            }).collect::<Vec<_>>(),
        })
    }
}

fn unit_over(base: &FinSet) -> Family {
    Family::from_fiber_sizes(base.clone(), &vec![1; base.len()]).unwrap()
}

/// Build the explicit bijection witnessing the selected law on the instance.
/// The algebra cross-checks the classifier-level cardinal identities.
pub fn typeiso_witness(
    law: TypeIsoLaw,
    alg: &MLAlgebra,
    inst: &NestedInstance,
) -> Result<TypeIsoWitness> {
    inst.validate()?;
    let gamma = inst.a.base().clone();
    let witness = match law {
        TypeIsoLaw::SigmaAssoc => {
            let mut lhs_elems = Vec::new();
            let mut rhs_elems = Vec::new();
            let mut table = Vec::new();
            let mut proj = Vec::new();
            for gi in 0..gamma.len() {
                for &ai in inst.a.fiber_indices(gi) {
                    let a = inst.a.total().label(ai);
                    for &bi in inst.b.fiber_indices(ai) {
                        let b = inst.b.total().label(bi);
                        for &ci in inst.c.fiber_indices(bi) {
                            let c = inst.c.total().label(ci);
                            lhs_elems
                                .push(Label::pair(a.clone(), Label::pair(b.clone(), c.clone())));
                            rhs_elems
                                .push(Label::pair(Label::pair(a.clone(), b.clone()), c.clone()));
                            table.push(table.len());
                            proj.push(gi);
                        }
                    }
                }
            }
            let lhs_set = FinSet::new(lhs_elems)?;
            let rhs_set = FinSet::new(rhs_elems)?;
            let lhs = Family::new(FinMap::new(lhs_set.clone(), gamma.clone(), proj.clone())?);
            let rhs = Family::new(FinMap::new(rhs_set.clone(), gamma, proj)?);
            let bijection = FinMap::new(lhs_set, rhs_set, table)?;
            sigma_cardinal_check(alg, inst)?;
            TypeIsoWitness {
                law,
                lhs,
                rhs,
                bijection,
            }
        }
        TypeIsoLaw::SigmaUnitR => {
            // Σ_{a:A} 1 → A over the context
            let ones = unit_over(inst.a.total());
            let sum = dependent_pairs(&inst.a, &ones)?;
            let bijection = FinMap::from_fn(sum.total().clone(), inst.a.total().clone(), |l| {
                l.as_pair().unwrap().0.clone()
            })?;
            TypeIsoWitness {
                law,
                lhs: sum,
                rhs: inst.a.clone(),
                bijection,
            }
        }
        TypeIsoLaw::SigmaUnitL => {
            // Σ_{x:1} A → A over the context
            let ones = unit_over(&gamma);
            let a_over_unit = base_change(ones.proj(), &inst.a)?;
            let sum = dependent_pairs(&ones, &a_over_unit)?;
            let bijection = FinMap::from_fn(sum.total().clone(), inst.a.total().clone(), |l| {
                // ((γ, •), ((γ, •), a)) ↦ a
                let (_, inner) = l.as_pair().unwrap();
                inner.as_pair().unwrap().1.clone()
            })?;
            TypeIsoWitness {
                law,
                lhs: sum,
                rhs: inst.a.clone(),
                bijection,
            }
        }
        TypeIsoLaw::PiAssoc => {
            let inner = pushforward(inst.b.proj(), &inst.c)?;
            let lhs = pushforward(inst.a.proj(), &inner)?;
            let composite = compose(inst.a.proj(), inst.b.proj())?;
            let rhs = pushforward(&composite, &inst.c)?;
            let comp_fam = Family::new(composite);
            let bijection =
                FinMap::try_from_fn(lhs.total().clone(), rhs.total().clone(), |l| {
                    curry_flatten(l, &inst.b, &comp_fam)
                })?;
            pi_cardinal_check(alg, inst)?;
            TypeIsoWitness {
                law,
                lhs,
                rhs,
                bijection,
            }
        }
        TypeIsoLaw::PiUnit => {
            let ones = unit_over(&gamma);
            let a_over_unit = base_change(ones.proj(), &inst.a)?;
            let lhs = pushforward(ones.proj(), &a_over_unit)?;
            let bijection = FinMap::from_fn(lhs.total().clone(), inst.a.total().clone(), |l| {
                // (γ, ⟨((γ,•), a)⟩) ↦ a
                let (_, tup) = l.as_pair().unwrap();
                let entry = &tup.as_tuple().unwrap()[0];
                entry.as_pair().unwrap().1.clone()
            })?;
            TypeIsoWitness {
                law,
                lhs,
                rhs: inst.a.clone(),
                bijection,
            }
        }
    };
    witness.verify()?;
    Ok(witness)
}

/// Pair-encoded dependent sum: elements `(a, b)` grouped over the base of
/// the outer family.
fn dependent_pairs(outer: &Family, inner: &Family) -> Result<Family> {
    let mut elems = Vec::new();
    let mut proj = Vec::new();
    for gi in 0..outer.base().len() {
        for &ai in outer.fiber_indices(gi) {
            let a = outer.total().label(ai);
            for &bi in inner.fiber_indices(ai) {
                elems.push(Label::pair(a.clone(), inner.total().label(bi).clone()));
                proj.push(gi);
            }
        }
    }
    let total = FinSet::new(elems)?;
    Ok(Family::new(FinMap::new(total, outer.base().clone(), proj)?))
}

/// Currying: flatten a nested section `(γ, ⟨(a, ⟨c..⟩)..⟩)` into the section
/// over the composite fiber, matching entries by their `b`-point.
fn curry_flatten(l: &Label, b_fam: &Family, comp: &Family) -> Result<Label> {
    let (gamma, outer) = l.as_pair().ok_or(Error::Malformed {
        op: "curry_flatten",
        expected: "(base, ⟨sections⟩)",
        got: l.clone(),
    })?;
    let mut by_b: std::collections::HashMap<Label, Label> = std::collections::HashMap::new();
    for entry in outer.as_tuple().unwrap() {
        let (a_elem, choices) = entry.as_pair().unwrap();
        let ai = b_fam.base().require(a_elem, "outer family total")?;
        for (k, &bi) in b_fam.fiber_indices(ai).iter().enumerate() {
            by_b.insert(
                b_fam.total().label(bi).clone(),
                choices.as_tuple().unwrap()[k].clone(),
            );
        }
    }
    let gi = comp.base().require(gamma, "context")?;
    let values: Vec<Label> = comp
        .fiber_indices(gi)
        .iter()
        .map(|&bi| by_b[comp.total().label(bi)].clone())
        .collect();
    Ok(Label::pair(gamma.clone(), Label::tuple(values)))
}

fn sigma_cardinal_check(alg: &MLAlgebra, inst: &NestedInstance) -> Result<()> {
    for gi in 0..inst.a.base().len() {
        let mut inner_sums = Vec::new();
        let mut flat = Vec::new();
        for &ai in inst.a.fiber_indices(gi) {
            let cs: Vec<Label> = inst
                .b
                .fiber_indices(ai)
                .iter()
                .map(|&bi| Label::Nat(inst.c.fiber_size(bi) as u64))
                .collect();
            flat.extend(cs.clone());
            inner_sums.push(alg.sigma_base(&Label::pair(
                Label::Nat(cs.len() as u64),
                Label::tuple(cs),
            ))?);
        }
        let nested = alg.sigma_base(&Label::pair(
            Label::Nat(inner_sums.len() as u64),
            Label::tuple(inner_sums),
        ))?;
        let flattened = alg.sigma_base(&Label::pair(
            Label::Nat(flat.len() as u64),
            Label::tuple(flat),
        ))?;
        if nested != flattened {
            return Err(Error::Invalid(format!(
                "sum former disagrees with itself at base index {gi}: {nested} vs {flattened}"
            )));
        }
    }
    Ok(())
}

fn pi_cardinal_check(alg: &MLAlgebra, inst: &NestedInstance) -> Result<()> {
    for gi in 0..inst.a.base().len() {
        let mut inner_prods = Vec::new();
        let mut flat = Vec::new();
        for &ai in inst.a.fiber_indices(gi) {
            let cs: Vec<Label> = inst
                .b
                .fiber_indices(ai)
                .iter()
                .map(|&bi| Label::Nat(inst.c.fiber_size(bi) as u64))
                .collect();
            flat.extend(cs.clone());
            inner_prods.push(alg.pi_base(&Label::pair(
                Label::Nat(cs.len() as u64),
                Label::tuple(cs),
            ))?);
        }
        let nested = alg.pi_base(&Label::pair(
            Label::Nat(inner_prods.len() as u64),
            Label::tuple(inner_prods),
        ))?;
        let flattened = alg.pi_base(&Label::pair(
            Label::Nat(flat.len() as u64),
            Label::tuple(flat),
        ))?;
        if nested != flattened {
            return Err(Error::Invalid(format!(
                "product former disagrees with itself at base index {gi}: {nested} vs {flattened}"
            )));
        }
    }
    Ok(())
}
