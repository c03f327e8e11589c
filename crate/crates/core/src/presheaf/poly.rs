//! Polynomial extensions of presheaf signatures.
//!
//! For a signature `p : Y → X` of presheaves, the extension at `Z` has, at
//! each object `c`, the pairs `(x, φ)` of an element `x ∈ X(c)` and a
//! natural map from the pullback of `p` along the element's classifying map
//! into `Z`. This is not a pointwise construction: `φ` ranges over natural
//! families, enumerated exhaustively. Signature composition follows the
//! transpose-the-identity recipe of the finite-set layer, with pullbacks
//! taken pointwise.

use crate::error::{Error, Result};
use crate::finset::{FinMap, FinSet};
use crate::label::Label;

use super::{
    compose_nat, enumerate_nats, pullback_presheaf, yoneda_element, PNat, Presheaf,
};

/// The pullback of the signature along the classifying map of `x ∈ X(c)`:
/// at `d`, the pairs `(g : d → c, y ∈ Y(d))` with `p(y) = x·g`.
fn element_fiber(p: &PNat, c: usize, x: &Label) -> Result<Presheaf> {
    let x_hat = yoneda_element(p.cod(), c, x)?;
    let (q, _, _) = pullback_presheaf(&x_hat, p)?;
    Ok(q)
}

/// Encode a natural map `φ : Y_x → Z` as the tuple of its values over the
/// flattened domain.
fn encode_nat(phi: &PNat) -> Label {
    let mut values = Vec::new();
    for oi in 0..phi.dom().cat().object_count() {
        for l in phi.dom().at(oi).iter() {
            values.push(phi.component(oi).apply(l).expect("component").clone());
        }
    }
    Label::tuple(values)
}

/// Evaluate an encoded `φ` at an element of the fiber presheaf.
fn decode_apply(fiber: &Presheaf, phi: &Label, at_obj: usize, elem: &Label) -> Result<Label> {
    let values = phi.as_tuple().ok_or(Error::Malformed {
        op: "poly_extension",
        expected: "tuple-encoded natural map",
        got: phi.clone(),
    })?;
    let mut pos = 0usize;
    for oi in 0..fiber.cat().object_count() {
        if oi == at_obj {
            let inner = fiber.at(oi).require(elem, "fiber element")?;
            return Ok(values[pos + inner].clone());
        }
        pos += fiber.at(oi).len();
    }
    Err(Error::Presheaf("object out of range".into()))
}

/// The extension of a presheaf signature at `Z`.
pub fn poly_extension(p: &PNat, z: &Presheaf) -> Result<Presheaf> {
    let cat = p.dom().cat().clone();
    let mut at = Vec::new();
    for c in 0..cat.object_count() {
        let mut elems = Vec::new();
        for x in p.cod().at(c).iter() {
            let fiber = element_fiber(p, c, x)?;
            for phi in enumerate_nats(&fiber, z)? {
                elems.push(Label::pair(x.clone(), encode_nat(&phi)));
            }
        }
        at.push(FinSet::new(elems)?);
    }
    let restriction = (0..cat.arrow_count())
        .map(|fi| {
            let a = cat.arrow(fi);
            FinMap::try_from_fn(at[a.dst].clone(), at[a.src].clone(), |l| {
                let (x, phi) = l.as_pair().expect("extension element");
                let x_res = p.cod().restriction(fi).apply(x)?.clone();
                let src_fiber = element_fiber(p, a.src, &x_res)?;
                let dst_fiber = element_fiber(p, a.dst, x)?;
                // φ·f at (g', y) is φ at (f∘g', y)
                let mut values = Vec::new();
                for d in 0..cat.object_count() {
                    for el in src_fiber.at(d).iter() {
                        let (g2, y) = el.as_pair().expect("fiber pair");
                        let g2i = cat.arrow_position(g2).expect("arrow");
                        let fg2 = cat.composite(fi, g2i)?;
                        let outer = Label::pair(cat.arrow(fg2).name.clone(), y.clone());
                        values.push(decode_apply(&dst_fiber, phi, d, &outer)?);
                    }
                }
                Ok(Label::pair(x_res, Label::tuple(values)))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Presheaf::new(cat, at, restriction)
}

/// Functorial action of the extension on a map `h : Z → W`.
pub fn poly_extension_on_map(p: &PNat, h: &PNat) -> Result<PNat> {
    let dom = poly_extension(p, h.dom())?;
    let cod = poly_extension(p, h.cod())?;
    let cat = p.dom().cat().clone();
    PNat::from_fn(dom, cod, |c, l| {
        let (x, phi) = l.as_pair().expect("extension element");
        let fiber = element_fiber(p, c, x)?;
        let values = phi.as_tuple().expect("encoded map");
        let mut out = Vec::with_capacity(values.len());
        let mut pos = 0usize;
        for oi in 0..cat.object_count() {
            for _ in 0..fiber.at(oi).len() {
                out.push(h.component(oi).apply(&values[pos])?.clone());
                pos += 1;
            }
        }
        Ok(Label::pair(x.clone(), Label::tuple(out)))
    })
}

/// The composite of two presheaf signatures, with its construction data.
pub struct SignatureComposite {
    /// the composed signature, a map into the extension of `p` at `q`'s base
    pub signature: PNat,
    /// the extension `P_p(C)` the composite lives over
    pub base: Presheaf,
    /// projection `a` of the transposed identity
    pub a: PNat,
    /// evaluation `c` of the transposed identity, on the middle pullback
    pub c: PNat,
}

/// Compose presheaf signatures by transposing the identity of the extension:
/// pull `p` back along the first projection, evaluate to get the map into
/// `q`'s base, pull `q` back along that, and project down.
pub fn compose_signatures_presheaf(p: &PNat, q: &PNat) -> Result<SignatureComposite> {
    let base = poly_extension(p, q.cod())?;
    let cat = base.cat().clone();
    // a : P_p(C) → X projects out the element
    let a = PNat::from_fn(base.clone(), p.cod().clone(), |_, l| {
        Ok(l.as_pair().expect("extension element").0.clone())
    })?;
    // middle: the pullback of p along a
    let (middle, m1, m2) = pullback_presheaf(&a, p)?;
    let _ = m2;
    // c : middle → C evaluates φ at the generic point
    let c_map = PNat::from_fn(middle.clone(), q.cod().clone(), |oi, l| {
        let (ext, y) = l.as_pair().expect("pullback pair");
        let (x, phi) = ext.as_pair().expect("extension element");
        let fiber = element_fiber(p, oi, x)?;
        let ident = cat.arrow(cat.identity(oi)).name.clone();
        decode_apply(&fiber, phi, oi, &Label::pair(ident, y.clone()))
    })?;
    // total: the pullback of q along c
    let (_, t1, _) = pullback_presheaf(&c_map, q)?;
    let signature = compose_nat(&m1, &t1)?;
    Ok(SignatureComposite {
        signature,
        base,
        a,
        c: c_map,
    })
}
