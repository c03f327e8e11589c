//! The subobject classifier of a finite presheaf category and its algebra
//! structure.
//!
//! A sieve on `c` is a set of arrows into `c` closed under precomposition;
//! the classifier assigns to each object its set of sieves, with restriction
//! by pulling back. Subobjects are pointwise label subsets closed under
//! restriction, and classification is the usual bijection onto maps into the
//! classifier. The structure maps of the classifier's algebra arise as
//! classifying maps: the composed signature is monic and its classifier is
//! the sum former; the lifted signature map is the partial map classifier of
//! the classifier itself, and its classifying map is the product former.

use std::collections::HashSet;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::finset::{FinMap, FinSet, Family};
use crate::label::Label;
use crate::mlalg::{MLAlgebra, TableAlgebra, TableEq};

use super::poly::{compose_signatures_presheaf, poly_extension, poly_extension_on_map};
use super::{IndexCategory, PNat, Presheaf};

/// A sieve as a sorted set of arrow indices (all with the same codomain).
fn sieve_label(cat: &IndexCategory, arrows: &[usize]) -> Label {
    Label::tuple(arrows.iter().map(|&i| cat.arrow(i).name.clone()))
}

/// All sieves on `c`, in ascending characteristic-bitmask order over the
/// arrows-into-`c` enumeration.
fn sieves_on(cat: &IndexCategory, c: usize) -> Vec<Vec<usize>> {
    let into: Vec<usize> = cat.arrows_into(c);
    let k = into.len();
    let mut out = Vec::new();
    'mask: for mask in 0u64..(1 << k) {
        let selected: Vec<usize> = into
            .iter()
            .enumerate()
            .filter(|(pos, _)| mask & (1 << pos) != 0)
            .map(|(_, &f)| f)
            .collect();
        // closure under precomposition
        let set: HashSet<usize> = selected.iter().copied().collect();
        for &f in &selected {
            for g in 0..cat.arrow_count() {
                if cat.arrow(g).dst == cat.arrow(f).src {
                    let fg = cat.composite(f, g).expect("composable");
                    if !set.contains(&fg) {
                        continue 'mask;
                    }
                }
            }
        }
        out.push(selected);
    }
    out
}

/// The classifier presheaf of sieves together with its point, the map from
/// the terminal presheaf picking the maximal sieve.
pub fn omega(cat: &Arc<IndexCategory>) -> Result<(Presheaf, PNat)> {
    let at: Vec<FinSet> = (0..cat.object_count())
        .map(|c| {
            FinSet::new(
                sieves_on(cat, c)
                    .into_iter()
                    .map(|s| sieve_label(cat, &s))
                    .collect(),
            )
        })
        .collect::<Result<_>>()?;
    let restriction = (0..cat.arrow_count())
        .map(|fi| {
            let a = cat.arrow(fi);
            FinMap::try_from_fn(at[a.dst].clone(), at[a.src].clone(), |s| {
                let names = s.as_tuple().expect("sieve label");
                let members: HashSet<usize> = names
                    .iter()
                    .map(|n| cat.arrow_position(n).expect("arrow"))
                    .collect();
                // f*S = {g : e → src f | f∘g ∈ S}
                let pulled: Vec<usize> = cat
                    .arrows_into(a.src)
                    .into_iter()
                    .filter(|&g| members.contains(&cat.composite(fi, g).expect("composable")))
                    .collect();
                Ok(sieve_label(cat, &pulled))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let om = Presheaf::new(cat.clone(), at, restriction)?;
    let top = PNat::from_fn(Presheaf::terminal(cat.clone()), om.clone(), |c, _| {
        Ok(sieve_label(cat, &cat.arrows_into(c)))
    })?;
    Ok((om, top))
}

/// A subobject presented as pointwise element subsets, closed under
/// restriction (validated).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubPresheaf {
    /// selected element indices per object, ascending
    pub at: Vec<Vec<usize>>,
}

impl SubPresheaf {
    pub fn validate(&self, x: &Presheaf) -> Result<()> {
        let cat = x.cat();
        if self.at.len() != cat.object_count() {
            return Err(Error::Presheaf("subobject has wrong object count".into()));
        }
        for fi in 0..cat.arrow_count() {
            let a = cat.arrow(fi);
            for &e in &self.at[a.dst] {
                let img = x.restriction(fi).apply_idx(e);
                if !self.at[a.src].contains(&img) {
                    return Err(Error::Presheaf(format!(
                        "subobject not closed under restriction along {}",
                        a.name
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn contains(&self, obj: usize, elem: usize) -> bool {
        self.at[obj].contains(&elem)
    }

    /// The inclusion as a presheaf map.
    pub fn inclusion(&self, x: &Presheaf) -> Result<PNat> {
        let cat = x.cat().clone();
        let sub = Presheaf::from_fns(
            cat.clone(),
            |oi| {
                FinSet::new(
                    self.at[oi]
                        .iter()
                        .map(|&e| x.at(oi).label(e).clone())
                        .collect(),
                )
            },
            |fi, l| x.restriction(fi).apply(l).cloned(),
        )?;
        PNat::from_fn(sub, x.clone(), |_, l| Ok(l.clone()))
    }
}

/// All subobjects of `x`, by exhaustive enumeration of closed pointwise
/// subsets; ordering follows ascending per-object bitmasks.
pub fn enumerate_subobjects(x: &Presheaf) -> Result<Vec<SubPresheaf>> {
    let cat = x.cat();
    let mut out = Vec::new();
    let mut masks = vec![0u64; cat.object_count()];
    loop {
        let candidate = SubPresheaf {
            at: masks
                .iter()
                .enumerate()
                .map(|(oi, &m)| {
                    (0..x.at(oi).len()).filter(|e| m & (1 << e) != 0).collect()
                })
                .collect(),
        };
        if candidate.validate(x).is_ok() {
            out.push(candidate);
        }
        // advance the multi-mask counter
        let mut oi = 0;
        loop {
            if oi == cat.object_count() {
                return Ok(out);
            }
            masks[oi] += 1;
            if masks[oi] < (1u64 << x.at(oi).len()) {
                break;
            }
            masks[oi] = 0;
            oi += 1;
        }
    }
}

/// The classifying map of a subobject: an element goes to the sieve of
/// arrows pulling it into the subobject.
pub fn classify_subobject(x: &Presheaf, s: &SubPresheaf) -> Result<PNat> {
    s.validate(x)?;
    let cat = x.cat().clone();
    let (om, _) = omega(&cat)?;
    PNat::from_fn(x.clone(), om, |c, l| {
        let e = x.at(c).position(l).expect("element");
        let arrows: Vec<usize> = cat
            .arrows_into(c)
            .into_iter()
            .filter(|&f| {
                let img = x.restriction(f).apply_idx(e);
                s.contains(cat.arrow(f).src, img)
            })
            .collect();
        Ok(sieve_label(&cat, &arrows))
    })
}

/// Recover a subobject from a map into the classifier: the elements whose
/// sieve is maximal.
pub fn subobject_from_classifier(chi: &PNat) -> Result<SubPresheaf> {
    let x = chi.dom();
    let cat = x.cat();
    let mut at = Vec::new();
    for c in 0..cat.object_count() {
        let top = sieve_label(cat, &cat.arrows_into(c));
        at.push(
            (0..x.at(c).len())
                .filter(|&e| {
                    chi.component(c).cod().label(chi.component(c).apply_idx(e)) == &top
                })
                .collect(),
        );
    }
    let s = SubPresheaf { at };
    s.validate(x)?;
    Ok(s)
}

/// The partial map classifier of `x`: the extension of the classifier's
/// point signature at `x`, with the monic unit.
pub fn partial_map_classifier(
    cat: &Arc<IndexCategory>,
    x: &Presheaf,
) -> Result<(Presheaf, PNat)> {
    let (_, top) = omega(cat)?;
    let tilde = poly_extension(&top, x)?;
    // η : x ↦ (maximal sieve, the restrictions of x along its arrows)
    let eta = PNat::from_fn(x.clone(), tilde.clone(), |c, l| {
        let mut values = Vec::new();
        // the fiber of the point signature over ⊤ is the sieve itself,
        // pointwise the arrows into c; pair order follows the pullback
        for d in 0..cat.object_count() {
            for g in cat.arrows_into(c) {
                if cat.arrow(g).src != d {
                    continue;
                }
                values.push(x.restriction(g).apply(l)?.clone());
            }
        }
        Ok(Label::pair(
            sieve_label(cat, &cat.arrows_into(c)),
            Label::tuple(values),
        ))
    })?;
    if !eta.is_monic() {
        return Err(Error::Presheaf("partial map unit is not monic".into()));
    }
    Ok((tilde, eta))
}

/// Build the classifier's algebra as explicit tables: the typing map is the
/// point of the classifier; the sum former classifies the (monic) composed
/// signature, and the product former classifies the lifted signature map.
pub fn omega_algebra(cat: &Arc<IndexCategory>) -> Result<MLAlgebra> {
    let (om, top) = omega(cat)?;
    let one = Presheaf::terminal(cat.clone());

    // composed signature over the extension of the point at the classifier
    let composite = compose_signatures_presheaf(&top, &top)?;
    if !composite.signature.is_monic() {
        return Err(Error::Presheaf(
            "composed point signature is not monic".into(),
        ));
    }
    let u2 = &composite.base;
    let q_sub = mono_image(&composite.signature)?;
    let sigma = classify_subobject(u2, &q_sub)?;

    // lifted signature map and the product former
    let p_one = poly_extension(&top, &one)?;
    let p_top = poly_extension_on_map(&top, &top)?;
    if !p_top.is_monic() {
        return Err(Error::Presheaf("lifted signature map is not monic".into()));
    }
    if p_top.dom() != &p_one {
        return Err(Error::Presheaf(
            "lifted signature domain is not the extension of the terminal".into(),
        ));
    }
    let pi_sub = mono_image(&p_top)?;
    let pi = classify_subobject(p_top.cod(), &pi_sub)?;

    // equality structure: the two projections of 1 ×_Ω 1 agree, the
    // diagonal is an isomorphism, and the equality former is the point
    let one_flat = one.flatten();
    let (pair_psh, _, _) = super::pullback_presheaf(&top, &top)?;
    let delta = PNat::from_fn(one.clone(), pair_psh.clone(), |_, l| {
        Ok(Label::pair(l.clone(), l.clone()))
    })?;
    let eq_map = PNat::from_fn(pair_psh.clone(), om.clone(), |c, _| {
        Ok(sieve_label(cat, &cat.arrows_into(c)))
    })?;

    let table = TableAlgebra {
        t: Family::new(top.flatten()),
        unit_left: Family::new(FinMap::identity(&one_flat)),
        star: FinMap::identity(&one_flat),
        one: top.flatten(),
        sigma_left: Family::new(composite.signature.flatten()),
        sigma_top: unique_to_point(&composite.signature.dom().flatten(), &one_flat)?,
        sigma_bottom: sigma.flatten(),
        pi_left: Family::new(p_top.flatten()),
        pi_top: unique_to_point(&p_one.flatten(), &one_flat)?,
        pi_bottom: pi.flatten(),
        eq: Some(TableEq {
            refl: FinMap::identity(&one_flat),
            eq: eq_map.flatten(),
            delta: delta.flatten(),
        }),
    };
    MLAlgebra::from_table(table)
}

/// The unique map to the flattened terminal presheaf, matching objects.
fn unique_to_point(dom: &FinSet, one_flat: &FinSet) -> Result<FinMap> {
    FinMap::try_from_fn(dom.clone(), one_flat.clone(), |l| {
        let (c, _) = l.as_pair().ok_or(Error::Malformed {
            op: "unique_to_point",
            expected: "flattened element",
            got: l.clone(),
        })?;
        Ok(Label::pair(c.clone(), Label::Nat(0)))
    })
}

/// The image of a monic map as a subobject of its codomain.
fn mono_image(m: &PNat) -> Result<SubPresheaf> {
    if !m.is_monic() {
        return Err(Error::Presheaf("map is not monic".into()));
    }
    let at = (0..m.cod().cat().object_count())
        .map(|c| {
            let mut v: Vec<usize> = m.component(c).table().to_vec();
            v.sort_unstable();
            v
        })
        .collect();
    let s = SubPresheaf { at };
    s.validate(m.cod())?;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlalg::{eq_structure_check, verify_ml_algebra};

    #[test]
    fn omega_sizes() {
        let (om, _) = omega(&IndexCategory::terminal()).unwrap();
        assert_eq!(om.sizes(), vec![2]);
        let (om, _) = omega(&IndexCategory::arrow_category()).unwrap();
        // objects in order 0, 1: 2 sieves on 0, 3 sieves on 1
        assert_eq!(om.sizes(), vec![2, 3]);
        let (om, _) = omega(&IndexCategory::composable_pair()).unwrap();
        assert_eq!(om.sizes(), vec![2, 3, 4]);
    }

    #[test]
    fn classification_round_trip_terminal() {
        let cat = IndexCategory::terminal();
        let x = Presheaf::from_fns(cat.clone(), |_| Ok(FinSet::canonical(3)), |_, l| Ok(l.clone()))
            .unwrap();
        let subs = enumerate_subobjects(&x).unwrap();
        assert_eq!(subs.len(), 8);
        for s in &subs {
            let chi = classify_subobject(&x, s).unwrap();
            assert_eq!(&subobject_from_classifier(&chi).unwrap(), s);
        }
    }

    #[test]
    fn classification_is_bijective_arrow_category() {
        let cat = IndexCategory::arrow_category();
        // X(0) = 2, X(1) = 2, restriction the identity-ish map
        let x = Presheaf::from_fns(
            cat.clone(),
            |_| Ok(FinSet::canonical(2)),
            |_, l| Ok(l.clone()),
        )
        .unwrap();
        let subs = enumerate_subobjects(&x).unwrap();
        let (om, _) = omega(&cat).unwrap();
        let nats = super::super::enumerate_nats(&x, &om).unwrap();
        assert_eq!(subs.len(), nats.len());
        // classification is injective and every map classifies a subobject
        let mut seen = std::collections::HashSet::new();
        for s in &subs {
            let chi = classify_subobject(&x, s).unwrap();
            let key: Vec<Vec<usize>> = (0..2)
                .map(|c| chi.component(c).table().to_vec())
                .collect();
            assert!(seen.insert(key));
            assert_eq!(&subobject_from_classifier(&chi).unwrap(), s);
        }
    }

    #[test]
    fn classify_top_is_maximal_sieve_map() {
        let cat = IndexCategory::arrow_category();
        let x = Presheaf::terminal(cat.clone());
        let s = SubPresheaf {
            at: vec![vec![0], vec![0]],
        };
        let chi = classify_subobject(&x, &s).unwrap();
        for c in 0..2 {
            let img = chi.component(c).cod().label(chi.component(c).apply_idx(0));
            assert_eq!(img, &sieve_label(&cat, &cat.arrows_into(c)));
        }
    }

    #[test]
    fn partial_map_classifier_sizes() {
        // over the terminal category: |X̃| = |X| + 1
        let cat = IndexCategory::terminal();
        for n in 0..4u64 {
            let x = Presheaf::from_fns(
                cat.clone(),
                |_| Ok(FinSet::canonical(n)),
                |_, l| Ok(l.clone()),
            )
            .unwrap();
            let (tilde, eta) = partial_map_classifier(&cat, &x).unwrap();
            assert_eq!(tilde.sizes(), vec![n as usize + 1]);
            assert!(eta.is_monic());
        }
    }

    #[test]
    fn partial_maps_biject_with_maps_into_classifier() {
        let cat = IndexCategory::arrow_category();
        let mk = |sizes: [u64; 2]| {
            let table = (0..sizes[1] as usize).map(|i| i.min(sizes[0] as usize - 1)).collect();
            crate::presheaf::test_support::arrow_presheaf(sizes[0], sizes[1], table)
        };
        for ysz in [[1, 1], [1, 2], [2, 2]] {
            for xsz in [[1, 1], [2, 1], [2, 2]] {
                let y = mk(ysz);
                let x = mk(xsz);
                // partial maps: a subobject of Y with a map into X
                let mut count = 0usize;
                for s in enumerate_subobjects(&y).unwrap() {
                    let incl = s.inclusion(&y).unwrap();
                    count += super::super::enumerate_nats(incl.dom(), &x).unwrap().len();
                }
                let (tilde, _) = partial_map_classifier(&cat, &x).unwrap();
                let maps = super::super::enumerate_nats(&y, &tilde).unwrap().len();
                assert_eq!(count, maps, "sizes {ysz:?} ⇀ {xsz:?}");
            }
        }
    }

    #[test]
    fn omega_algebra_terminal_tables() {
        let cat = IndexCategory::terminal();
        let alg = omega_algebra(&cat).unwrap();
        let report = verify_ml_algebra(&alg, &alg.full_region().unwrap()).unwrap();
        assert!(report.passed(), "{report:?}");

        // in the two-valued case: Σ(⊥, –) = ⊥, Σ(⊤, q) = q,
        // Π(⊥, –) = ⊤, Π(⊤, q) = q
        let obj = Label::Nat(0);
        let bot = Label::tuple([]);
        let top = sieve_label(&cat, &cat.arrows_into(0));
        let wrap = |s: &Label, phi: Vec<Label>| {
            Label::pair(obj.clone(), Label::pair(s.clone(), Label::tuple(phi)))
        };
        let flat = |s: &Label| Label::pair(obj.clone(), s.clone());
        assert_eq!(alg.sigma_base(&wrap(&bot, vec![])).unwrap(), flat(&bot));
        assert_eq!(alg.pi_base(&wrap(&bot, vec![])).unwrap(), flat(&top));
        for q in [&bot, &top] {
            assert_eq!(
                alg.sigma_base(&wrap(&top, vec![q.clone()])).unwrap(),
                flat(q)
            );
            assert_eq!(alg.pi_base(&wrap(&top, vec![q.clone()])).unwrap(), flat(q));
        }
    }

    #[test]
    fn omega_algebra_passes_on_arrow_category() {
        let cat = IndexCategory::arrow_category();
        let alg = omega_algebra(&cat).unwrap();
        let report = verify_ml_algebra(&alg, &alg.full_region().unwrap()).unwrap();
        assert!(report.passed(), "{report:?}");
        let eq = eq_structure_check(&alg, &alg.full_region().unwrap()).unwrap();
        assert!(eq.status.is_pass(), "{eq:?}");
    }

    #[test]
    fn omega_algebra_passes_on_composable_pair() {
        let cat = IndexCategory::composable_pair();
        let alg = omega_algebra(&cat).unwrap();
        let report = verify_ml_algebra(&alg, &alg.full_region().unwrap()).unwrap();
        assert!(report.passed(), "{report:?}");
    }

    #[test]
    fn biconditional_classifies_diagonal() {
        // over the terminal category the diagonal of Ω × Ω is classified by
        // the truth table of the biconditional
        let cat = IndexCategory::terminal();
        let (om, _) = omega(&cat).unwrap();
        let (prod, pr1, pr2) = super::super::pullback_presheaf(
            &PNat::from_fn(om.clone(), Presheaf::terminal(cat.clone()), |_, _| {
                Ok(Label::Nat(0))
            })
            .unwrap(),
            &PNat::from_fn(om.clone(), Presheaf::terminal(cat.clone()), |_, _| {
                Ok(Label::Nat(0))
            })
            .unwrap(),
        )
        .unwrap();
        let diag: Vec<usize> = (0..prod.at(0).len())
            .filter(|&i| pr1.component(0).apply_idx(i) == pr2.component(0).apply_idx(i))
            .collect();
        let s = SubPresheaf { at: vec![diag] };
        let iff = classify_subobject(&prod, &s).unwrap();
        let top = sieve_label(&cat, &cat.arrows_into(0));
        for i in 0..prod.at(0).len() {
            let equal = pr1.component(0).apply_idx(i) == pr2.component(0).apply_idx(i);
            let img = iff.component(0).cod().label(iff.component(0).apply_idx(i));
            assert_eq!(img == &top, equal);
        }
    }
}
