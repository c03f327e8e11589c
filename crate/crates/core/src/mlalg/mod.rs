//! Structured type universes over finite sets.
//!
//! An algebra here is a typing map `t : U̇ → U` equipped with structure maps
//! for the unit, sum, and product formers, each required to fit into a
//! pullback square against `t`. Squares are verified fiberwise over a finite
//! region of base elements, which makes the checks exact on the verified
//! region even when the carrier is unbounded and only lazily enumerated.
//!
//! Two backings are provided: the finite-cardinal instance, whose structure
//! maps are arithmetic rules (sums with offset encodings, products with
//! mixed-radix encodings), and fully tabulated algebras used for finite
//! carriers such as the sieve classifier of a presheaf topos.

mod idtypes;
mod nat;
mod table;
mod terms;
mod verify;

pub use idtypes::{id_comparison, id_structure, IdComparisonReport, IdStructureData};
pub use table::{TableAlgebra, TableEq};
pub use terms::{comprehend, pi_apply, pi_lambda, Comprehension};
pub use verify::{
    eq_structure_check, verify_ml_algebra, CheckStatus, MlReport, SquareReport,
};

use crate::error::{Error, Result};
use crate::finset::{FinMap, FinSet, Family};
use crate::label::Label;
use crate::polynomial::{compose_signatures, PolySignature};

use nat::NatRules;

/// The finite base region over which fiberwise square checks run.
///
/// `index_types` are the base types whose squares get verified; sections and
/// dependent data range over `value_types`. Both are subsets of the carrier.
#[derive(Clone, Debug)]
pub struct VerifyRegion {
    pub index_types: Vec<Label>,
    pub value_types: Vec<Label>,
}

impl VerifyRegion {
    /// For the finite-cardinal algebra: lists of length ≤ `max_len` with
    /// entries ≤ `max_entry`.
    pub fn nat_lists(max_len: u64, max_entry: u64) -> Self {
        VerifyRegion {
            index_types: (0..=max_len).map(Label::Nat).collect(),
            value_types: (0..=max_entry).map(Label::Nat).collect(),
        }
    }

    pub fn types(types: Vec<Label>) -> Self {
        VerifyRegion {
            index_types: types.clone(),
            value_types: types,
        }
    }
}

#[derive(Clone)]
enum Backing {
    Nat(NatRules),
    Table(Box<TableAlgebra>),
}

/// A typing map with unit/sum/product structure, queried by element label.
#[derive(Clone)]
pub struct MLAlgebra {
    backing: Backing,
}

impl MLAlgebra {
    /// The finite-cardinal algebra with carrier `{0, .., bound-1}`.
    ///
    /// Structure-map outputs at or above `bound` raise an out-of-bound error
    /// naming the operation and input instead of silently truncating.
    pub fn nat(bound: u64) -> Result<Self> {
        if bound < 1 {
            return Err(Error::Invalid("carrier bound must be at least 1".into()));
        }
        Ok(MLAlgebra {
            backing: Backing::Nat(NatRules::new(bound)),
        })
    }

    /// Wrap explicit map tables, validating all boundary compatibilities.
    pub fn from_table(table: TableAlgebra) -> Result<Self> {
        table.validate()?;
        Ok(MLAlgebra {
            backing: Backing::Table(Box::new(table)),
        })
    }

    pub fn describe(&self) -> String {
        match &self.backing {
            Backing::Nat(r) => format!("finite-cardinal algebra, carrier bound {}", r.bound()),
            Backing::Table(t) => format!(
                "tabulated algebra, |U| = {}, |U̇| = {}",
                t.t.base().len(),
                t.t.total().len()
            ),
        }
    }

    /// Carrier bound for lazily enumerated backings.
    pub fn bound(&self) -> Option<u64> {
        match &self.backing {
            Backing::Nat(r) => Some(r.bound()),
            Backing::Table(_) => None,
        }
    }

    /// The default exhaustive region: everything, for finite tabulated
    /// carriers. Lazily bounded carriers need an explicit region.
    pub fn full_region(&self) -> Result<VerifyRegion> {
        match &self.backing {
            Backing::Nat(_) => Err(Error::Invalid(
                "the finite-cardinal algebra needs an explicit verification region".into(),
            )),
            Backing::Table(t) => Ok(VerifyRegion::types(t.t.base().labels().to_vec())),
        }
    }

    /// The type carrier `U`, truncated at the bound for lazy backings.
    pub fn u_set(&self) -> FinSet {
        match &self.backing {
            Backing::Nat(r) => r.u_set(),
            Backing::Table(t) => t.t.base().clone(),
        }
    }

    /// The term carrier `U̇`, truncated likewise.
    pub fn udot_set(&self) -> FinSet {
        match &self.backing {
            Backing::Nat(r) => r.udot_set(),
            Backing::Table(t) => t.t.total().clone(),
        }
    }

    /// The typing map as a family (truncated at the carrier bound).
    pub fn t_family(&self) -> Family {
        match &self.backing {
            Backing::Nat(r) => r.t_family(),
            Backing::Table(t) => t.t.clone(),
        }
    }

    pub fn contains_type(&self, ty: &Label) -> bool {
        match &self.backing {
            Backing::Nat(r) => r.contains(ty),
            Backing::Table(t) => t.t.base().contains(ty),
        }
    }

    /// Fiber of the typing map over a type label.
    pub fn t_fiber(&self, ty: &Label) -> Result<Vec<Label>> {
        match &self.backing {
            Backing::Nat(r) => r.t_fiber(ty),
            Backing::Table(t) => t.t.fiber_labels(ty),
        }
    }

    /// Truncation of the typing map to the given base types, as a signature.
    pub fn t_truncation(&self, types: &[Label]) -> Result<PolySignature> {
        let base = FinSet::new(types.to_vec())?;
        let mut elems = Vec::new();
        let mut table = Vec::new();
        for (bi, ty) in types.iter().enumerate() {
            for e in self.t_fiber(ty)? {
                elems.push(e);
                table.push(bi);
            }
        }
        let total = FinSet::new(elems)?;
        Ok(PolySignature::new(Family::new(FinMap::new(
            total, base, table,
        )?)))
    }

    // structure maps, by element label

    /// Sum former on an element `(A, ⟨B₀..⟩)` of the composed base.
    pub fn sigma_base(&self, u2: &Label) -> Result<Label> {
        match &self.backing {
            Backing::Nat(r) => r.sigma_base(u2),
            Backing::Table(t) => t.sigma_bottom.apply(u2).cloned(),
        }
    }

    /// Pairing on an element of the composed total.
    pub fn sigma_total(&self, u2dot: &Label) -> Result<Label> {
        match &self.backing {
            Backing::Nat(r) => r.sigma_total(u2dot),
            Backing::Table(t) => t.sigma_top.apply(u2dot).cloned(),
        }
    }

    /// Product former on an extension element `(A, ⟨B₀..⟩)`.
    pub fn pi_base(&self, ptu: &Label) -> Result<Label> {
        match &self.backing {
            Backing::Nat(r) => r.pi_base(ptu),
            Backing::Table(t) => t.pi_bottom.apply(ptu).cloned(),
        }
    }

    /// Abstraction on an extension element `(A, ⟨b₀..⟩)` with term entries.
    pub fn lambda(&self, ptudot: &Label) -> Result<Label> {
        match &self.backing {
            Backing::Nat(r) => r.lambda(ptudot),
            Backing::Table(t) => t.pi_top.apply(ptudot).cloned(),
        }
    }

    // equality structure

    pub fn has_eq(&self) -> bool {
        match &self.backing {
            Backing::Nat(_) => true,
            Backing::Table(t) => t.eq.is_some(),
        }
    }

    /// Equality former on a pair `(x, y)` of terms of the same type.
    pub fn eq_base(&self, pair: &Label) -> Result<Label> {
        match &self.backing {
            Backing::Nat(r) => r.eq_base(pair),
            Backing::Table(t) => {
                let eq = t.eq.as_ref().ok_or(Error::MissingEq)?;
                eq.eq.apply(pair).cloned()
            }
        }
    }

    /// Reflexivity witness for a term.
    pub fn refl(&self, x: &Label) -> Result<Label> {
        match &self.backing {
            Backing::Nat(r) => r.refl(x),
            Backing::Table(t) => {
                let eq = t.eq.as_ref().ok_or(Error::MissingEq)?;
                eq.refl.apply(x).cloned()
            }
        }
    }

    /// The context object of the unit square with its three maps
    /// (left family, star on top, unit former on the bottom).
    pub fn unit_square_data(&self) -> Result<(Family, FinMap, FinMap)> {
        match &self.backing {
            Backing::Nat(r) => r.unit_square_data(),
            Backing::Table(t) => Ok((t.unit_left.clone(), t.star.clone(), t.one.clone())),
        }
    }

    /// The unit former applied at a point, when the context is a point.
    pub fn one_label(&self) -> Result<Label> {
        let (_, _, one) = self.unit_square_data()?;
        if one.dom().len() != 1 {
            return Err(Error::Invalid(
                "unit former context is not a point".into(),
            ));
        }
        Ok(one.cod().label(one.apply_idx(0)).clone())
    }

    pub fn star_label(&self) -> Result<Label> {
        let (_, star, _) = self.unit_square_data()?;
        if star.dom().len() != 1 {
            return Err(Error::Invalid(
                "unit former context is not a point".into(),
            ));
        }
        Ok(star.cod().label(star.apply_idx(0)).clone())
    }

    /// Base elements of the composed signature over the region, together
    /// with their fibers; computed by signature composition for rule
    /// backings, read from the stored tables otherwise.
    pub(crate) fn sigma_square_region(&self, region: &VerifyRegion) -> Result<(Vec<Label>, Vec<Vec<Label>>)> {
        match &self.backing {
            Backing::Nat(_) => {
                let outer = self.t_truncation(&region.index_types)?;
                let inner = self.t_truncation(&region.value_types)?;
                let composed = compose_signatures(&outer, &inner)?;
                let bases = composed.base().labels().to_vec();
                let fibers: Result<Vec<Vec<Label>>> = bases
                    .iter()
                    .map(|b| composed.family().fiber_labels(b))
                    .collect();
                Ok((bases, fibers?))
            }
            Backing::Table(t) => {
                let bases = t.sigma_left.base().labels().to_vec();
                let fibers: Result<Vec<Vec<Label>>> = bases
                    .iter()
                    .map(|b| t.sigma_left.fiber_labels(b))
                    .collect();
                Ok((bases, fibers?))
            }
        }
    }

    /// Extension elements `(A, B)` over the region with the fibers of the
    /// lifted typing map above them (all well-typed term sections).
    pub(crate) fn pi_square_region(&self, region: &VerifyRegion) -> Result<(Vec<Label>, Vec<Vec<Label>>)> {
        match &self.backing {
            Backing::Nat(_) => {
                let sig = self.t_truncation(&region.index_types)?;
                let values = FinSet::new(region.value_types.clone())?;
                let base = sig.extension(&values);
                let mut bases = Vec::with_capacity(base.len());
                let mut fibers = Vec::with_capacity(base.len());
                for l in base.iter() {
                    let (a, bs) = l.as_pair().expect("extension element");
                    let types = bs.as_tuple().expect("extension section");
                    let choices: Result<Vec<Vec<Label>>> =
                        types.iter().map(|ty| self.t_fiber(ty)).collect();
                    let mut fiber = Vec::new();
                    for terms in cartesian(&choices?) {
                        fiber.push(Label::pair(a.clone(), Label::tuple(terms)));
                    }
                    bases.push(l.clone());
                    fibers.push(fiber);
                }
                Ok((bases, fibers))
            }
            Backing::Table(t) => {
                let bases = t.pi_left.base().labels().to_vec();
                let fibers: Result<Vec<Vec<Label>>> = bases
                    .iter()
                    .map(|b| t.pi_left.fiber_labels(b))
                    .collect();
                Ok((bases, fibers?))
            }
        }
    }

    /// Pairs `(x, y)` of same-type terms over the region with the fibers of
    /// the diagonal above them.
    pub(crate) fn eq_square_region(&self, region: &VerifyRegion) -> Result<(Vec<Label>, Vec<Vec<Label>>)> {
        match &self.backing {
            Backing::Nat(_) => {
                let mut bases = Vec::new();
                let mut fibers = Vec::new();
                for ty in &region.index_types {
                    let fiber = self.t_fiber(ty)?;
                    for x in &fiber {
                        for y in &fiber {
                            bases.push(Label::pair(x.clone(), y.clone()));
                            fibers.push(if x == y { vec![x.clone()] } else { Vec::new() });
                        }
                    }
                }
                Ok((bases, fibers))
            }
            Backing::Table(t) => {
                let eq = t.eq.as_ref().ok_or(Error::MissingEq)?;
                let delta = Family::new(eq.delta.clone());
                let bases = delta.base().labels().to_vec();
                let fibers: Result<Vec<Vec<Label>>> =
                    bases.iter().map(|b| delta.fiber_labels(b)).collect();
                Ok((bases, fibers?))
            }
        }
    }

    /// Materialize the structure maps over a region as explicit tables.
    /// The result is an honest finite algebra usable wherever tables are
    /// (scenario files, fault injection in tests).
    pub fn materialize(&self, region: &VerifyRegion) -> Result<TableAlgebra> {
        let (unit_left, star, one) = self.unit_square_data()?;
        let u = self.u_set();
        let udot = self.udot_set();
        let t = Family::new(FinMap::try_from_fn(udot.clone(), u.clone(), |e| {
            self.type_of(e)
        })?);

        let (s_bases, s_fibers) = self.sigma_square_region(region)?;
        let u2 = FinSet::new(s_bases.clone())?;
        let u2dot = FinSet::new(s_fibers.iter().flatten().cloned().collect())?;
        let mut proj = Vec::new();
        for (bi, fiber) in s_fibers.iter().enumerate() {
            proj.extend(std::iter::repeat(bi).take(fiber.len()));
        }
        let sigma_left = Family::new(FinMap::new(u2dot.clone(), u2.clone(), proj)?);
        let sigma_top = FinMap::try_from_fn(u2dot, udot.clone(), |e| self.sigma_total(e))?;
        let sigma_bottom = FinMap::try_from_fn(u2.clone(), u.clone(), |e| self.sigma_base(e))?;

        let (p_bases, p_fibers) = self.pi_square_region(region)?;
        let ptu = FinSet::new(p_bases.clone())?;
        let ptudot = FinSet::new(p_fibers.iter().flatten().cloned().collect())?;
        let mut proj = Vec::new();
        for (bi, fiber) in p_fibers.iter().enumerate() {
            proj.extend(std::iter::repeat(bi).take(fiber.len()));
        }
        let pi_left = Family::new(FinMap::new(ptudot.clone(), ptu.clone(), proj)?);
        let pi_top = FinMap::try_from_fn(ptudot, udot.clone(), |e| self.lambda(e))?;
        let pi_bottom = FinMap::try_from_fn(ptu, u.clone(), |e| self.pi_base(e))?;

        let eq = if self.has_eq() {
            let (e_bases, _) = self.eq_square_region(region)?;
            let pairs = FinSet::new(e_bases)?;
            let delta_dom: Vec<Label> = pairs
                .iter()
                .filter(|p| {
                    let (x, y) = p.as_pair().expect("pair");
                    x == y
                })
                .map(|p| p.as_pair().unwrap().0.clone())
                .collect();
            let delta_dom = FinSet::new(delta_dom)?;
            let delta = FinMap::from_fn(delta_dom.clone(), pairs.clone(), |x| {
                Label::pair(x.clone(), x.clone())
            })?;
            let refl = FinMap::try_from_fn(delta_dom, udot, |x| self.refl(x))?;
            let eq_map = FinMap::try_from_fn(pairs, u, |p| self.eq_base(p))?;
            Some(TableEq {
                refl,
                eq: eq_map,
                delta,
            })
        } else {
            None
        };

        Ok(TableAlgebra {
            t,
            unit_left,
            star,
            one,
            sigma_left,
            sigma_top,
            sigma_bottom,
            pi_left,
            pi_top,
            pi_bottom,
            eq,
        })
    }

    /// The type of a carrier term.
    pub fn type_of(&self, term: &Label) -> Result<Label> {
        match &self.backing {
            Backing::Nat(r) => r.type_of(term),
            Backing::Table(t) => t.t.proj().apply(term).cloned(),
        }
    }
}

/// All tuples choosing one entry per slot, lexicographic, first slot most
/// significant.
pub(crate) fn cartesian(choices: &[Vec<Label>]) -> Vec<Vec<Label>> {
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

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nat_algebra_basics() {
        let alg = MLAlgebra::nat(16).unwrap();
        assert_eq!(alg.u_set().len(), 16);
        assert_eq!(alg.one_label().unwrap(), Label::Nat(1));
        assert_eq!(
            alg.star_label().unwrap(),
            Label::pair(Label::Nat(1), Label::Nat(0))
        );
        assert_eq!(alg.t_fiber(&Label::Nat(3)).unwrap().len(), 3);
        assert_eq!(alg.t_fiber(&Label::Nat(0)).unwrap().len(), 0);
    }

    #[test]
    fn sigma_pi_arithmetic() {
        let alg = MLAlgebra::nat(64).unwrap();
        // Σ⟨2,3⟩ = 5, Π⟨2,3⟩ = 6
        let list = Label::pair(
            Label::Nat(2),
            Label::tuple([Label::Nat(2), Label::Nat(3)]),
        );
        assert_eq!(alg.sigma_base(&list).unwrap(), Label::Nat(5));
        assert_eq!(alg.pi_base(&list).unwrap(), Label::Nat(6));
    }

    #[test]
    fn sigma_out_of_bound_is_explicit() {
        let alg = MLAlgebra::nat(4).unwrap();
        let list = Label::pair(
            Label::Nat(2),
            Label::tuple([Label::Nat(3), Label::Nat(3)]),
        );
        match alg.sigma_base(&list) {
            Err(Error::OutOfBound { op, .. }) => assert_eq!(op, "Sigma"),
            other => panic!("expected OutOfBound, got {other:?}"),
        }
    }

    #[test]
    fn sigma_offsets_are_bijective_fiberwise() {
        let alg = MLAlgebra::nat(64).unwrap();
        let region = VerifyRegion::nat_lists(3, 3);
        let (bases, fibers) = alg.sigma_square_region(&region).unwrap();
        for (b, fiber) in bases.iter().zip(&fibers) {
            let sum = alg.sigma_base(b).unwrap();
            let expected = alg.t_fiber(&sum).unwrap();
            let mut images: Vec<Label> =
                fiber.iter().map(|e| alg.sigma_total(e).unwrap()).collect();
            images.sort();
            images.dedup();
            assert_eq!(images.len(), fiber.len(), "injective over {b}");
            assert_eq!(fiber.len(), expected.len(), "sizes over {b}");
        }
    }

    #[test]
    fn lambda_mixed_radix_bijective() {
        let alg = MLAlgebra::nat(64).unwrap();
        let region = VerifyRegion::nat_lists(3, 3);
        let (bases, fibers) = alg.pi_square_region(&region).unwrap();
        for (b, fiber) in bases.iter().zip(&fibers) {
            let prod = alg.pi_base(b).unwrap();
            let expected = alg.t_fiber(&prod).unwrap();
            let mut images: Vec<Label> = fiber.iter().map(|e| alg.lambda(e).unwrap()).collect();
            images.sort();
            images.dedup();
            assert_eq!(images.len(), fiber.len(), "injective over {b}");
            assert_eq!(fiber.len(), expected.len(), "sizes over {b}");
        }
    }

    #[test]
    fn nat_extension_is_lists() {
        // lists of length ≤ 3 over a two-element set: 15 of them
        let alg = MLAlgebra::nat(8).unwrap();
        let sig = alg
            .t_truncation(&[Label::Nat(0), Label::Nat(1), Label::Nat(2), Label::Nat(3)])
            .unwrap();
        let ext = sig.extension(&FinSet::canonical(2));
        assert_eq!(ext.len(), 15);
    }

    #[test]
    fn materialized_table_round_trips() {
        let alg = MLAlgebra::nat(32).unwrap();
        let region = VerifyRegion::nat_lists(2, 2);
        let table = alg.materialize(&region).unwrap();
        let talg = MLAlgebra::from_table(table).unwrap();
        let report = verify_ml_algebra(&talg, &talg.full_region().unwrap()).unwrap();
        assert!(report.passed(), "{report:?}");
    }
}
