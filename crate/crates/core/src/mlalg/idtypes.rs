//! Identity structure and its comparison square.
//!
//! From the equality former we build the family of identity proofs `I` over
//! pairs of same-type terms, the signature `q : I → U`, and the restriction
//! transformation induced by the substitution `x ↦ (x, x, refl x)`. Its
//! naturality square at the typing map has a comparison map into the
//! pullback; the eliminator is a section of that comparison, and in the
//! extensional case the comparison is a bijection, so the section is forced.

use crate::error::{Error, Result};
use crate::finset::{pullback, FinMap, FinSet, Family, Square};
use crate::label::Label;
use crate::polynomial::PolySignature;

use super::{MLAlgebra, VerifyRegion};

/// The identity-proof family over the verification region.
#[derive(Clone, Debug)]
pub struct IdStructureData {
    /// `q : I → U` as a signature: the fiber over `A` holds all triples
    /// `((x, y), z)` with `z` an identity proof for `x, y : A`.
    pub q: PolySignature,
    /// `ρ : U̇ → I`, `x ↦ ((x, x), refl x)`.
    pub rho: FinMap,
}

#[derive(Clone, Debug)]
pub struct IdComparisonReport {
    pub data: IdStructureData,
    /// The naturality square of the restriction transformation at the
    /// typing map, materialized over the region.
    pub square: Square,
    /// Comparison from the square's top-left corner into the pullback of
    /// its cospan.
    pub comparison: FinMap,
    /// A section of the comparison, when one exists (the eliminator).
    pub j: Option<FinMap>,
    pub comparison_bijective: bool,
    /// `comparison ∘ j = id` on the pullback.
    pub section_law: bool,
}

fn udot_region(alg: &MLAlgebra, types: &[Label]) -> Result<FinSet> {
    let mut elems = Vec::new();
    for ty in types {
        elems.extend(alg.t_fiber(ty)?);
    }
    FinSet::new(elems)
}

/// Build the identity signature and `ρ` over the region's index types.
pub fn id_structure(alg: &MLAlgebra, region: &VerifyRegion) -> Result<IdStructureData> {
    if !alg.has_eq() {
        return Err(Error::MissingEq);
    }
    let base = FinSet::new(region.index_types.clone())?;
    let mut elems = Vec::new();
    let mut table = Vec::new();
    for (ai, ty) in region.index_types.iter().enumerate() {
        let fiber = alg.t_fiber(ty)?;
        for x in &fiber {
            for y in &fiber {
                let idty = alg.eq_base(&Label::pair(x.clone(), y.clone()))?;
                for z in alg.t_fiber(&idty)? {
                    elems.push(Label::pair(Label::pair(x.clone(), y.clone()), z));
                    table.push(ai);
                }
            }
        }
    }
    let total = FinSet::new(elems)?;
    let q = PolySignature::new(Family::new(FinMap::new(total.clone(), base, table)?));

    let udot = udot_region(alg, &region.index_types)?;
    let rho = FinMap::try_from_fn(udot, total, |x| {
        Ok(Label::pair(
            Label::pair(x.clone(), x.clone()),
            alg.refl(x)?,
        ))
    })?;
    Ok(IdStructureData { q, rho })
}

/// Component of the restriction transformation at a value set: precompose a
/// section over the identity fibers with `ρ`.
fn restriction_component(
    alg: &MLAlgebra,
    data: &IdStructureData,
    t_sig: &PolySignature,
    values: &FinSet,
) -> Result<FinMap> {
    let dom = data.q.extension(values);
    let cod = t_sig.extension(values);
    FinMap::try_from_fn(dom, cod, |l| {
        let (a, c) = l.as_pair().expect("extension element");
        let section = c.as_tuple().expect("extension section");
        let ai = data.q.base().require(a, "identity signature base")?;
        let i_fiber = data.q.family().fiber_indices(ai);
        let mut values_out = Vec::new();
        for x in alg.t_fiber(a)? {
            let rho_x = data.rho.apply(&x)?;
            let pos = i_fiber
                .iter()
                .position(|&e| data.q.total().label(e) == rho_x)
                .expect("rho lands in the identity fiber");
            values_out.push(section[pos].clone());
        }
        Ok(Label::pair(a.clone(), Label::tuple(values_out)))
    })
}

/// Apply the typing map to every entry of an extension section.
fn typed_projection(
    alg: &MLAlgebra,
    sig: &PolySignature,
    terms: &FinSet,
    types: &FinSet,
) -> Result<FinMap> {
    let dom = sig.extension(terms);
    let cod = sig.extension(types);
    FinMap::try_from_fn(dom, cod, |l| {
        let (a, c) = l.as_pair().expect("extension element");
        let section = c.as_tuple().expect("extension section");
        let tys: Result<Vec<Label>> = section.iter().map(|e| alg.type_of(e)).collect();
        Ok(Label::pair(a.clone(), Label::tuple(tys?)))
    })
}

/// Build the comparison square over the region and check the eliminator.
pub fn id_comparison(alg: &MLAlgebra, region: &VerifyRegion) -> Result<IdComparisonReport> {
    let data = id_structure(alg, region)?;
    let t_sig = alg.t_truncation(&region.index_types)?;
    let u_values = FinSet::new(region.value_types.clone())?;
    let udot_values = udot_region(alg, &region.value_types)?;

    let top = restriction_component(alg, &data, &t_sig, &udot_values)?;
    let bottom = restriction_component(alg, &data, &t_sig, &u_values)?;
    let left = typed_projection(alg, &data.q, &udot_values, &u_values)?;
    let right = typed_projection(alg, &t_sig, &udot_values, &u_values)?;
    let square = Square::new(top.clone(), bottom.clone(), left.clone(), right.clone())?;

    let (pb, _, _) = pullback(&bottom, &right)?;
    let comparison = FinMap::try_from_fn(top.dom().clone(), pb.clone(), |z| {
        Ok(Label::pair(left.apply(z)?.clone(), top.apply(z)?.clone()))
    })?;

    let comparison_bijective = comparison.is_bijective();
    let j = if comparison_bijective {
        Some(comparison.inverse()?)
    } else {
        // a section exists iff the comparison is surjective
        let mut table = Vec::with_capacity(pb.len());
        let mut total = true;
        for i in 0..pb.len() {
            match comparison.table().iter().position(|&img| img == i) {
                Some(pre) => table.push(pre),
                None => {
                    total = false;
                    break;
                }
            }
        }
        if total {
            Some(FinMap::new(pb.clone(), comparison.dom().clone(), table)?)
        } else {
            None
        }
    };
    let section_law = match &j {
        Some(j) => crate::finset::compose(&comparison, j)
            .map(|c| c == FinMap::identity(&pb))
            .unwrap_or(false),
        None => false,
    };

    Ok(IdComparisonReport {
        data,
        square,
        comparison,
        j,
        comparison_bijective,
        section_law,
    })
}
