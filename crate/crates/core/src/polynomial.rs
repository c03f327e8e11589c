//! Polynomial endofunctors of finite sets.
//!
//! A signature is a map `p : E → B` presented as a [`Family`]; its extension
//! at `X` is the set of pairs `(b, s)` with `b` in the base and `s` a tuple
//! assigning an element of `X` to every point of the fiber over `b`. The
//! module provides the functorial action, the transpose/untranspose pair of
//! the universal property, composition of signatures, and the dictionary
//! sending cartesian squares to natural transformations between extensions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::finset::{
    self, base_change, compose, dependent_sum, is_pullback, pullback, pushforward, FinMap, FinSet,
    Family, Square,
};
use crate::label::Label;

/// All length-`k` tuples over `0..n`, lexicographic, first coordinate most
/// significant. Empty tuple for `k = 0`; nothing for `n = 0 < k`.
fn sections(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    if n == 0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut cur = vec![0usize; k];
    loop {
        out.push(cur.clone());
        let mut pos = k;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            cur[pos] += 1;
            if cur[pos] < n {
                break;
            }
            cur[pos] = 0;
        }
    }
}

/// A map `p : E → B` viewed as a polynomial signature with base `B`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolySignature {
    map: Family,
}

impl PolySignature {
    pub fn new(map: Family) -> Self {
        PolySignature { map }
    }

    /// Canonical signature over base `{0..n-1}` with the given fiber sizes.
    pub fn from_fibers(sizes: &[u64]) -> Self {
        let base = FinSet::canonical(sizes.len() as u64);
        PolySignature::new(Family::from_fiber_sizes(base, sizes).unwrap())
    }

    /// The identity-like unit signature: a single fiber of size one.
    pub fn unit() -> Self {
        PolySignature::from_fibers(&[1])
    }

    pub fn family(&self) -> &Family {
        &self.map
    }

    pub fn base(&self) -> &FinSet {
        self.map.base()
    }

    pub fn total(&self) -> &FinSet {
        self.map.total()
    }

    /// Extension at `X`: all `(b, section)` pairs, base-major, sections in
    /// lexicographic order over the fiber enumeration.
    pub fn extension(&self, x: &FinSet) -> FinSet {
        let mut elems = Vec::new();
        for b in 0..self.base().len() {
            for section in sections(x.len(), self.map.fiber_size(b)) {
                elems.push(Label::pair(
                    self.base().label(b).clone(),
                    Label::tuple(section.iter().map(|&i| x.label(i).clone())),
                ));
            }
        }
        FinSet::new(elems).expect("extension labels are distinct")
    }

    /// The extension computed through the three-functor pipeline
    /// (reindex to the total, push forward along the signature, sum to the
    /// point), returned as produced by those operations.
    pub fn extension_via_pipeline(&self, x: &FinSet) -> Result<Family> {
        let x_fam = Family::new(FinMap::to_terminal(x.clone()));
        let over_total = base_change(&FinMap::to_terminal(self.total().clone()), &x_fam)?;
        let over_base = pushforward(self.map.proj(), &over_total)?;
        dependent_sum(&FinMap::to_terminal(self.base().clone()), &over_base)
    }

    /// Canonical bijection from the pipeline form onto the direct extension.
    pub fn pipeline_iso(&self, x: &FinSet) -> Result<FinMap> {
        let pipeline = self.extension_via_pipeline(x)?;
        let direct = self.extension(x);
        finset::bijection_by_key(pipeline.total(), &direct, |l| {
            // pipeline element: (b, ⟨(e_i, (x_i, •))⟩) over fiber order
            let (b, tup) = l.as_pair().ok_or(Error::Malformed {
                op: "pipeline_iso",
                expected: "(base, ⟨sections⟩)",
                got: l.clone(),
            })?;
            let entries = tup.as_tuple().ok_or(Error::Malformed {
                op: "pipeline_iso",
                expected: "(base, ⟨sections⟩)",
                got: l.clone(),
            })?;
            let values: Result<Vec<Label>> = entries
                .iter()
                .map(|entry| {
                    let (_, xe) = entry.as_pair().ok_or(Error::Malformed {
                        op: "pipeline_iso",
                        expected: "(fiber point, x)",
                        got: entry.clone(),
                    })?;
                    Ok(xe.clone())
                })
                .collect();
            Ok(Label::pair(b.clone(), Label::tuple(values?)))
        })
    }

    /// Functorial action on `h : X → Y`, sending `(b, s)` to `(b, h ∘ s)`.
    pub fn extension_on_map(&self, h: &FinMap) -> Result<FinMap> {
        let dom = self.extension(h.dom());
        let cod = self.extension(h.cod());
        FinMap::from_fn(dom, cod, |l| {
            let (b, s) = l.as_pair().expect("extension element");
            let values = s
                .as_tuple()
                .expect("extension section")
                .iter()
                .map(|v| h.apply(v).expect("section value in domain").clone());
            Label::pair(b.clone(), Label::tuple(values))
        })
    }

    fn decode_extension_elem<'l>(&self, l: &'l Label, op: &'static str) -> Result<(usize, &'l [Label])> {
        let (b, s) = l.as_pair().ok_or(Error::Malformed {
            op,
            expected: "(base, ⟨section⟩)",
            got: l.clone(),
        })?;
        let section = s.as_tuple().ok_or(Error::Malformed {
            op,
            expected: "(base, ⟨section⟩)",
            got: l.clone(),
        })?;
        let bi = self.base().require(b, "signature base")?;
        if section.len() != self.map.fiber_size(bi) {
            return Err(Error::Malformed {
                op,
                expected: "section matching fiber size",
                got: l.clone(),
            });
        }
        Ok((bi, section))
    }
}

impl Serialize for PolySignature {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        // canonical signatures have a compact form; general ones embed the family
        let canonical = self.base() == &FinSet::canonical(self.base().len() as u64)
            && self.map.total()
                == Family::from_fiber_sizes(
                    self.base().clone(),
                    &self.map.fiber_sizes().iter().map(|&k| k as u64).collect::<Vec<_>>(),
                )
                .unwrap()
                .total();
        if canonical {
            #[derive(Serialize)]
            struct Compact {
                base: usize,
                fibers: Vec<usize>,
            }
            Compact {
                base: self.base().len(),
                fibers: self.map.fiber_sizes(),
            }
            .serialize(s)
        } else {
            #[derive(Serialize)]
            struct General<'a> {
                family: &'a Family,
            }
            General { family: &self.map }.serialize(s)
        }
    }
}

impl<'de> Deserialize<'de> for PolySignature {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Compact { base: usize, fibers: Vec<u64> },
            General { family: Family },
        }
        match Repr::deserialize(d)? {
            Repr::Compact { base, fibers } => {
                if fibers.len() != base {
                    return Err(serde::de::Error::custom("fibers length differs from base"));
                }
                Ok(PolySignature::from_fibers(&fibers))
            }
            Repr::General { family } => Ok(PolySignature::new(family)),
        }
    }
}

/// The two maps corresponding to `f : Z → P_p(X)` under the universal
/// property: `f1 : Z → B` and `f2 : Z ×_B E → X` on the canonical pullback.
#[derive(Clone, Debug)]
pub struct PolyTranspose {
    pub f1: FinMap,
    pub f2: FinMap,
}

/// Transpose `f : Z → P_p(X)` into its pair of maps.
pub fn ump_transpose(sig: &PolySignature, x: &FinSet, f: &FinMap) -> Result<PolyTranspose> {
    let ext = sig.extension(x);
    if f.cod() != &ext {
        return Err(Error::boundary(
            "ump_transpose",
            "codomain is not the canonical extension",
        ));
    }
    let f1 = FinMap::from_fn(f.dom().clone(), sig.base().clone(), |z| {
        let (b, _) = f.apply(z).expect("domain element").as_pair().expect("extension element");
        b.clone()
    })?;
    let (pb, p1, p2) = pullback(&f1, sig.family().proj())?;
    let mut table = Vec::with_capacity(pb.len());
    for i in 0..pb.len() {
        let z = p1.apply_idx(i);
        let e = p2.apply_idx(i);
        let (bi, section) = sig.decode_extension_elem(f.cod().label(f.apply_idx(z)), "ump_transpose")?;
        let pos = sig
            .family()
            .fiber_indices(bi)
            .iter()
            .position(|&k| k == e)
            .expect("pullback element lies in the fiber");
        table.push(x.require(&section[pos], "extension target")?);
    }
    let f2 = FinMap::new(pb, x.clone(), table)?;
    Ok(PolyTranspose { f1, f2 })
}

/// Inverse of [`ump_transpose`]: rebuild `f : Z → P_p(X)` from the pair.
pub fn ump_untranspose(sig: &PolySignature, x: &FinSet, t: &PolyTranspose) -> Result<FinMap> {
    if t.f1.cod() != sig.base() {
        return Err(Error::boundary("ump_untranspose", "f1 codomain is not the base"));
    }
    if t.f2.cod() != x {
        return Err(Error::boundary("ump_untranspose", "f2 codomain is not X"));
    }
    let (pb, _, _) = pullback(&t.f1, sig.family().proj())?;
    if t.f2.dom() != &pb {
        return Err(Error::boundary(
            "ump_untranspose",
            "f2 domain is not the canonical pullback of the signature along f1",
        ));
    }
    let ext = sig.extension(x);
    let z_set = t.f1.dom().clone();
    FinMap::from_fn(z_set, ext, |z| {
        let b = t.f1.apply(z).expect("f1 total");
        let bi = sig.base().position(b).expect("base element");
        let values = sig.family().fiber_indices(bi).iter().map(|&e| {
            let pt = Label::pair(z.clone(), sig.total().label(e).clone());
            t.f2.apply(&pt).expect("pullback point").clone()
        });
        Label::pair(b.clone(), Label::tuple(values))
    })
}

/// Composite signature `p·q`, built by transposing the identity of
/// `P_p(C)` and pulling the signatures back along the resulting maps.
/// The base is the extension of `p` at `q`'s base; the fiber over `(a, s)`
/// collects a `q`-fiber point for every point of `p`'s fiber over `a`.
pub fn compose_signatures(p: &PolySignature, q: &PolySignature) -> Result<PolySignature> {
    let c = q.base();
    let ext = p.extension(c);
    let ident = FinMap::identity(&ext);
    let t = ump_transpose(p, c, &ident)?;
    // t.f1 = a : P_p(C) → A,  t.f2 = c : P_p(C) ×_A B → C
    let (q_tot, q1, _) = pullback(&t.f2, q.family().proj())?;
    // composite projection: ((z, b), d) ↦ (z, b) ↦ z
    let a_star_p = pullback(&t.f1, p.family().proj())?.1;
    let proj = compose(&a_star_p, &q1)?;
    let _ = q_tot;
    Ok(PolySignature::new(Family::new(proj)))
}

/// The canonical natural bijection `P_{p·q}(X) ≅ P_p(P_q(X))`.
pub fn compose_extension_iso(
    p: &PolySignature,
    q: &PolySignature,
    pq: &PolySignature,
    x: &FinSet,
) -> Result<FinMap> {
    let lhs = pq.extension(x);
    let inner = q.extension(x);
    let rhs = p.extension(&inner);
    finset::bijection_by_key(&lhs, &rhs, |l| {
        // lhs element: (z, w) with z = (a, s) ∈ P_p(C) and w a tuple over the
        // composite fiber, ordered (b-major, then d) by the pullback encoding
        let (z, w) = l.as_pair().ok_or(Error::Malformed {
            op: "compose_extension_iso",
            expected: "(base, ⟨section⟩)",
            got: l.clone(),
        })?;
        let w = w.as_tuple().ok_or(Error::Malformed {
            op: "compose_extension_iso",
            expected: "(base, ⟨section⟩)",
            got: l.clone(),
        })?;
        let (a, s) = z.as_pair().ok_or(Error::Malformed {
            op: "compose_extension_iso",
            expected: "((a, s), ⟨w⟩)",
            got: l.clone(),
        })?;
        let s = s.as_tuple().unwrap_or(&[]);
        let ai = p.base().require(a, "outer base")?;
        let mut cursor = 0usize;
        let mut outer = Vec::with_capacity(p.family().fiber_size(ai));
        for (pos, _) in p.family().fiber_indices(ai).iter().enumerate() {
            let cv = &s[pos];
            let ci = q.base().require(cv, "inner base")?;
            let k = q.family().fiber_size(ci);
            let section = &w[cursor..cursor + k];
            cursor += k;
            outer.push(Label::pair(cv.clone(), Label::tuple(section.to_vec())));
        }
        if cursor != w.len() {
            return Err(Error::Malformed {
                op: "compose_extension_iso",
                expected: "section consuming the whole composite fiber",
                got: l.clone(),
            });
        }
        Ok(Label::pair(a.clone(), Label::tuple(outer)))
    })
}

/// A cartesian square read as a morphism of signatures: `left` over `right`
/// through `top`/`bottom`, inducing a natural transformation of extensions.
#[derive(Clone, Debug)]
pub struct CartMorphism {
    square: Square,
    dom_sig: PolySignature,
    cod_sig: PolySignature,
}

impl CartMorphism {
    /// Accepts only verified cartesian squares.
    pub fn new(square: Square) -> Result<Self> {
        let status = is_pullback(&square);
        if !status.is_cartesian() {
            return Err(Error::NotCartesian {
                detail: format!("{status:?}"),
            });
        }
        let dom_sig = PolySignature::new(Family::new(square.left.clone()));
        let cod_sig = PolySignature::new(Family::new(square.right.clone()));
        Ok(CartMorphism {
            square,
            dom_sig,
            cod_sig,
        })
    }

    pub fn square(&self) -> &Square {
        &self.square
    }

    pub fn dom_signature(&self) -> &PolySignature {
        &self.dom_sig
    }

    pub fn cod_signature(&self) -> &PolySignature {
        &self.cod_sig
    }

    /// Component at `X` of the induced transformation between extensions:
    /// `(a, s) ↦ (bottom(a), s ∘ top⁻¹)` using the fiberwise bijection of the
    /// cartesian square.
    pub fn component(&self, x: &FinSet) -> Result<FinMap> {
        let dom_ext = self.dom_sig.extension(x);
        let cod_ext = self.cod_sig.extension(x);
        let sq = &self.square;
        let dom_fam = self.dom_sig.family();
        let cod_fam = self.cod_sig.family();
        FinMap::from_fn(dom_ext, cod_ext, |l| {
            let (a, s) = l.as_pair().expect("extension element");
            let section = s.as_tuple().expect("section tuple");
            let ai = dom_fam.base().position(a).expect("base element");
            let a_img = sq.bottom.apply_idx(ai);
            let mut values = Vec::with_capacity(cod_fam.fiber_size(a_img));
            for &e_img in cod_fam.fiber_indices(a_img) {
                // invert the fiber bijection induced by top
                let pos = dom_fam
                    .fiber_indices(ai)
                    .iter()
                    .position(|&e| sq.top.apply_idx(e) == e_img)
                    .expect("cartesian square: fiber bijection");
                values.push(section[pos].clone());
            }
            Label::pair(
                cod_fam.base().label(a_img).clone(),
                Label::tuple(values),
            )
        })
    }
}

/// Check naturality of the induced transformation at `h : X → Y`, returning
/// the naturality square for further inspection.
pub fn naturality_square(m: &CartMorphism, h: &FinMap) -> Result<Square> {
    let cx = m.component(h.dom())?;
    let cy = m.component(h.cod())?;
    let pf = m.dom_signature().extension_on_map(h)?;
    let pg = m.cod_signature().extension_on_map(h)?;
    if compose(&cy, &pf)? != compose(&pg, &cx)? {
        return Err(Error::Invalid(
            "induced transformation is not natural at the given map".into(),
        ));
    }
    Square::new(pf, pg, cx, cy)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extension_sizes() {
        // single base point with fiber 2 at |X| = 3: 3² = 9
        let sig = PolySignature::from_fibers(&[2]);
        assert_eq!(sig.extension(&FinSet::canonical(3)).len(), 9);

        // list signature truncated to lengths ≤ 3 at |X| = 2: 1+2+4+8 = 15
        let sig = PolySignature::from_fibers(&[0, 1, 2, 3]);
        assert_eq!(sig.extension(&FinSet::canonical(2)).len(), 15);

        // |X| = 0 keeps only empty-fiber summands: 0⁰ = 1
        let sig = PolySignature::from_fibers(&[0, 2]);
        assert_eq!(sig.extension(&FinSet::canonical(0)).len(), 1);
    }

    #[test]
    fn extension_matches_pipeline() {
        for fibers in [&[2u64][..], &[0, 1, 2, 3][..], &[0, 2][..], &[][..]] {
            let sig = PolySignature::from_fibers(fibers);
            for n in 0..4u64 {
                let x = FinSet::canonical(n);
                let iso = sig.pipeline_iso(&x).unwrap();
                assert!(iso.is_bijective());
            }
        }
    }

    #[test]
    fn extension_on_map_functorial() {
        let sig = PolySignature::from_fibers(&[0, 1, 2]);
        let x = FinSet::canonical(3);
        let idx = FinMap::identity(&x);
        let ext_id = sig.extension_on_map(&idx).unwrap();
        assert_eq!(ext_id, FinMap::identity(&sig.extension(&x)));

        let y = FinSet::canonical(2);
        let z = FinSet::canonical(2);
        let f = FinMap::new(x.clone(), y.clone(), vec![1, 0, 1]).unwrap();
        let g = FinMap::new(y, z, vec![1, 1]).unwrap();
        let lhs = sig.extension_on_map(&compose(&g, &f).unwrap()).unwrap();
        let rhs = compose(
            &sig.extension_on_map(&g).unwrap(),
            &sig.extension_on_map(&f).unwrap(),
        )
        .unwrap();
        assert_eq!(lhs, rhs);

        // constant h: all sections become constant
        let c = FinMap::constant(x.clone(), FinSet::canonical(1), &Label::Nat(0)).unwrap();
        let m = sig.extension_on_map(&c).unwrap();
        for l in m.cod().iter() {
            let (_, s) = l.as_pair().unwrap();
            assert!(s.as_tuple().unwrap().iter().all(|v| v == &Label::Nat(0)));
        }
    }

    #[test]
    fn transpose_round_trips() {
        let sig = PolySignature::from_fibers(&[1, 2]);
        for zn in 0..3u64 {
            let z = FinSet::canonical(zn);
            for xn in 0..3u64 {
                let x = FinSet::canonical(xn);
                for f in finset::all_maps(&z, &sig.extension(&x)) {
                    let t = ump_transpose(&sig, &x, &f).unwrap();
                    let back = ump_untranspose(&sig, &x, &t).unwrap();
                    assert_eq!(back, f);
                }
            }
        }
    }

    #[test]
    fn transpose_global_element() {
        // Z = 1 picking (b, s): transpose is the point at b plus s as a map
        let sig = PolySignature::from_fibers(&[2]);
        let x = FinSet::canonical(3);
        let ext = sig.extension(&x);
        let pick = Label::pair(Label::Nat(0), Label::tuple([Label::Nat(2), Label::Nat(1)]));
        let f = FinMap::constant(FinSet::terminal(), ext, &pick).unwrap();
        let t = ump_transpose(&sig, &x, &f).unwrap();
        assert_eq!(t.f1.apply(&Label::Nat(0)).unwrap(), &Label::Nat(0));
        assert_eq!(t.f2.dom().len(), 2);
        let vals: Vec<_> = t.f2.dom().iter().map(|p| t.f2.apply(p).unwrap().clone()).collect();
        assert_eq!(vals, vec![Label::Nat(2), Label::Nat(1)]);
    }

    #[test]
    fn transpose_empty_fiber() {
        let sig = PolySignature::from_fibers(&[0]);
        let x = FinSet::canonical(0);
        let ext = sig.extension(&x);
        assert_eq!(ext.len(), 1);
        let f = FinMap::to_terminal(FinSet::canonical(2));
        let f = FinMap::from_fn(f.dom().clone(), ext, |_| {
            Label::pair(Label::Nat(0), Label::tuple([]))
        })
        .unwrap();
        let t = ump_transpose(&sig, &x, &f).unwrap();
        assert_eq!(t.f2.dom().len(), 0);
        assert_eq!(ump_untranspose(&sig, &x, &t).unwrap(), f);
    }

    #[test]
    fn composition_counts() {
        // p : 2 → 1, q : 3 → 1: base of p·q is a point, fiber size 6
        let p = PolySignature::from_fibers(&[2]);
        let q = PolySignature::from_fibers(&[3]);
        let pq = compose_signatures(&p, &q).unwrap();
        assert_eq!(pq.base().len(), 1);
        assert_eq!(pq.total().len(), 6);
        // fiber over the single (a, s): |X|⁶ at |X| ∈ {1,2,3}
        for n in 1..4u64 {
            let x = FinSet::canonical(n);
            let iso = compose_extension_iso(&p, &q, &pq, &x).unwrap();
            assert!(iso.is_bijective());
            assert_eq!(pq.extension(&x).len(), p.extension(&q.extension(&x)).len());
        }
        // every fiber of p·q here has 6 points (two inner picks of 3-fibers)
        assert!(pq.family().fiber_sizes().iter().all(|&k| k == 6));
    }

    #[test]
    fn composition_unit() {
        let p = PolySignature::unit();
        let q = PolySignature::from_fibers(&[0, 2]);
        let pq = compose_signatures(&p, &q).unwrap();
        for n in 0..4u64 {
            let x = FinSet::canonical(n);
            assert_eq!(pq.extension(&x).len(), q.extension(&x).len());
            let iso = compose_extension_iso(&p, &q, &pq, &x).unwrap();
            assert!(iso.is_bijective());
        }
    }

    #[test]
    fn composition_empty_base() {
        let p = PolySignature::from_fibers(&[0, 2]);
        let q = PolySignature::from_fibers(&[]);
        let pq = compose_signatures(&p, &q).unwrap();
        // base = extension(p, ∅): only the empty-fiber summand survives
        assert_eq!(pq.base().len(), 1);
        assert_eq!(pq.total().len(), 0);
    }

    #[test]
    fn square_to_nat_identity_and_inclusion() {
        let sig = PolySignature::from_fibers(&[1, 2]);
        let idsq = Square::new(
            FinMap::identity(sig.total()),
            FinMap::identity(sig.base()),
            sig.family().proj().clone(),
            sig.family().proj().clone(),
        )
        .unwrap();
        let m = CartMorphism::new(idsq).unwrap();
        let x = FinSet::canonical(3);
        assert_eq!(m.component(&x).unwrap(), FinMap::identity(&sig.extension(&x)));

        // h : 1 → 2 selecting base point 1 of g (fiber 2): the component
        // injects the selected summand
        let g = PolySignature::from_fibers(&[1, 2]);
        let f_base = FinSet::canonical(1);
        let f_fam = Family::from_fiber_sizes(f_base.clone(), &[2]).unwrap();
        let h = FinMap::constant(f_base, g.base().clone(), &Label::Nat(1)).unwrap();
        let h_dot = FinMap::from_fn(f_fam.total().clone(), g.total().clone(), |l| {
            let (_, i) = l.as_pair().unwrap();
            Label::pair(Label::Nat(1), i.clone())
        })
        .unwrap();
        let sq = Square::new(h_dot, h, f_fam.proj().clone(), g.family().proj().clone()).unwrap();
        let m = CartMorphism::new(sq).unwrap();
        let comp = m.component(&x).unwrap();
        assert!(comp.is_injective());
        for l in comp.dom().iter() {
            let img = comp.apply(l).unwrap();
            assert_eq!(img.as_pair().unwrap().0, &Label::Nat(1));
        }
    }

    #[test]
    fn square_to_nat_naturality_squares_are_pullbacks() {
        let g = PolySignature::from_fibers(&[1, 2]);
        let f_base = FinSet::canonical(1);
        let f_fam = Family::from_fiber_sizes(f_base.clone(), &[2]).unwrap();
        let h = FinMap::constant(f_base, g.base().clone(), &Label::Nat(1)).unwrap();
        let h_dot = FinMap::from_fn(f_fam.total().clone(), g.total().clone(), |l| {
            let (_, i) = l.as_pair().unwrap();
            Label::pair(Label::Nat(1), i.clone())
        })
        .unwrap();
        let sq = Square::new(h_dot, h, f_fam.proj().clone(), g.family().proj().clone()).unwrap();
        let m = CartMorphism::new(sq).unwrap();
        for xn in 0..3u64 {
            for yn in 0..3u64 {
                let x = FinSet::canonical(xn);
                let y = FinSet::canonical(yn);
                for hmap in finset::all_maps(&x, &y) {
                    let nat_sq = naturality_square(&m, &hmap).unwrap();
                    assert!(is_pullback(&nat_sq).is_cartesian());
                }
            }
        }
    }

    #[test]
    fn non_cartesian_square_rejected() {
        // left has fibers (2), right has fibers (1,1) over swapped bases: not cartesian
        let f = Family::from_fiber_sizes(FinSet::canonical(1), &[2]).unwrap();
        let g = Family::from_fiber_sizes(FinSet::canonical(1), &[1]).unwrap();
        let top = FinMap::constant(
            f.total().clone(),
            g.total().clone(),
            g.total().label(0),
        )
        .unwrap();
        let bottom = FinMap::identity(&FinSet::canonical(1));
        let sq = Square::new(top, bottom, f.proj().clone(), g.proj().clone()).unwrap();
        assert!(CartMorphism::new(sq).is_err());
    }
}
