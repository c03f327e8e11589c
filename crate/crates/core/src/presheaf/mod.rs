//! Presheaves over a finite index category.
//!
//! An index category carries explicit object and arrow labels, a composition
//! table, and identities; the laws are checked exhaustively on construction.
//! Presheaves assign a finite set to every object and a restriction map to
//! every arrow, again validated on construction, and natural transformations
//! validate their naturality squares. Everything downstream (the sieve
//! classifier, polynomial extensions, nerves) stays within these types, and
//! pointwise constructions agree with the finite-set kernel at every object.

mod nerve;
mod omega;
mod poly;

pub use nerve::{
    elements_nerve_adjunction_counts, enumerate_functors, hs_universe, hs_universe_to_omega,
    nerve, slice_category, Functor, HsUniverse,
};
pub use omega::{
    classify_subobject, enumerate_subobjects, omega, omega_algebra, partial_map_classifier,
    subobject_from_classifier, SubPresheaf,
};
pub use poly::{compose_signatures_presheaf, poly_extension, poly_extension_on_map, SignatureComposite};

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::finset::{FinMap, FinSet};
use crate::label::Label;

#[derive(Clone, Debug)]
pub struct Arrow {
    pub name: Label,
    pub src: usize,
    pub dst: usize,
}

/// A finite category with named objects and arrows and an explicit
/// composition table. Unit and associativity laws are validated on
/// construction by exhaustive checks.
#[derive(Clone)]
pub struct IndexCategory {
    objects: Vec<Label>,
    arrows: Vec<Arrow>,
    /// `compose[g][f] = g ∘ f` where `cod f = dom g`
    compose: Vec<Vec<Option<usize>>>,
    identities: Vec<usize>,
    obj_index: HashMap<Label, usize>,
    arrow_index: HashMap<Label, usize>,
}

impl std::fmt::Debug for IndexCategory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "IndexCategory{{objects: {:?}, arrows: {}}}",
            self.objects,
            self.arrows.len()
        )
    }
}

impl IndexCategory {
    pub fn build(
        objects: Vec<Label>,
        arrows: Vec<(Label, Label, Label)>,
        identities: Vec<(Label, Label)>,
        composites: Vec<(Label, Label, Label)>,
    ) -> Result<Self> {
        let mut obj_index = HashMap::new();
        for (i, o) in objects.iter().enumerate() {
            if obj_index.insert(o.clone(), i).is_some() {
                return Err(Error::Category(format!("duplicate object {o}")));
            }
        }
        let mut arrow_index = HashMap::new();
        let mut arr = Vec::new();
        for (name, src, dst) in arrows {
            let src = *obj_index
                .get(&src)
                .ok_or_else(|| Error::Category(format!("unknown source object {src}")))?;
            let dst = *obj_index
                .get(&dst)
                .ok_or_else(|| Error::Category(format!("unknown target object {dst}")))?;
            if arrow_index.insert(name.clone(), arr.len()).is_some() {
                return Err(Error::Category(format!("duplicate arrow {name}")));
            }
            arr.push(Arrow { name, src, dst });
        }
        let lookup = |name: &Label| -> Result<usize> {
            arrow_index
                .get(name)
                .copied()
                .ok_or_else(|| Error::Category(format!("unknown arrow {name}")))
        };
        let mut identity_of = vec![None; objects.len()];
        for (obj, name) in identities {
            let oi = *obj_index
                .get(&obj)
                .ok_or_else(|| Error::Category(format!("unknown object {obj}")))?;
            identity_of[oi] = Some(lookup(&name)?);
        }
        let identities: Vec<usize> = identity_of
            .into_iter()
            .enumerate()
            .map(|(i, id)| {
                id.ok_or_else(|| Error::Category(format!("object {} has no identity", objects[i])))
            })
            .collect::<Result<_>>()?;

        let n = arr.len();
        let mut compose = vec![vec![None; n]; n];
        for (g, f, gf) in composites {
            let g = lookup(&g)?;
            let f = lookup(&f)?;
            let gf = lookup(&gf)?;
            compose[g][f] = Some(gf);
        }
        // identity composites may be omitted
        for (f, a) in arr.iter().enumerate() {
            compose[identities[a.dst]][f].get_or_insert(f);
            compose[f][identities[a.src]].get_or_insert(f);
        }
        let cat = IndexCategory {
            objects,
            arrows: arr,
            compose,
            identities,
            obj_index,
            arrow_index,
        };
        cat.validate()?;
        Ok(cat)
    }

    fn validate(&self) -> Result<()> {
        for (oi, &id) in self.identities.iter().enumerate() {
            let a = &self.arrows[id];
            if a.src != oi || a.dst != oi {
                return Err(Error::Category(format!(
                    "identity of {} is not an endo-arrow",
                    self.objects[oi]
                )));
            }
        }
        for g in 0..self.arrows.len() {
            for f in 0..self.arrows.len() {
                let composable = self.arrows[f].dst == self.arrows[g].src;
                match self.compose[g][f] {
                    None if composable => {
                        return Err(Error::Category(format!(
                            "missing composite {}∘{}",
                            self.arrows[g].name, self.arrows[f].name
                        )))
                    }
                    Some(gf) if !composable => {
                        return Err(Error::Category(format!(
                            "composite {}∘{} = {} declared for non-composable pair",
                            self.arrows[g].name, self.arrows[f].name, self.arrows[gf].name
                        )))
                    }
                    Some(gf) => {
                        let (f_, g_, gf_) = (&self.arrows[f], &self.arrows[g], &self.arrows[gf]);
                        if gf_.src != f_.src || gf_.dst != g_.dst {
                            return Err(Error::Category(format!(
                                "composite {}∘{} has wrong boundary",
                                g_.name, f_.name
                            )));
                        }
                    }
                    None => {}
                }
            }
        }
        // unit laws
        for (f, a) in self.arrows.iter().enumerate() {
            if self.compose[self.identities[a.dst]][f] != Some(f)
                || self.compose[f][self.identities[a.src]] != Some(f)
            {
                return Err(Error::Category(format!("unit law fails at {}", a.name)));
            }
        }
        // associativity
        for f in 0..self.arrows.len() {
            for g in 0..self.arrows.len() {
                if self.arrows[f].dst != self.arrows[g].src {
                    continue;
                }
                for h in 0..self.arrows.len() {
                    if self.arrows[g].dst != self.arrows[h].src {
                        continue;
                    }
                    let left = self.compose[h][self.compose[g][f].unwrap()];
                    let right = self.compose[self.compose[h][g].unwrap()][f];
                    if left != right {
                        return Err(Error::Category(format!(
                            "associativity fails at {}∘{}∘{}",
                            self.arrows[h].name, self.arrows[g].name, self.arrows[f].name
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    // canonical small categories

    /// One object, one identity arrow.
    pub fn terminal() -> Arc<Self> {
        Arc::new(
            IndexCategory::build(
                vec![Label::Nat(0)],
                vec![(Label::name("id0"), Label::Nat(0), Label::Nat(0))],
                vec![(Label::Nat(0), Label::name("id0"))],
                vec![],
            )
            .unwrap(),
        )
    }

    /// Two objects with a single arrow `a : 0 → 1`.
    pub fn arrow_category() -> Arc<Self> {
        Arc::new(
            IndexCategory::build(
                vec![Label::Nat(0), Label::Nat(1)],
                vec![
                    (Label::name("id0"), Label::Nat(0), Label::Nat(0)),
                    (Label::name("id1"), Label::Nat(1), Label::Nat(1)),
                    (Label::name("a"), Label::Nat(0), Label::Nat(1)),
                ],
                vec![
                    (Label::Nat(0), Label::name("id0")),
                    (Label::Nat(1), Label::name("id1")),
                ],
                vec![],
            )
            .unwrap(),
        )
    }

    /// Three objects with arrows `a : 0 → 1`, `b : 1 → 2` and the composite.
    pub fn composable_pair() -> Arc<Self> {
        Arc::new(
            IndexCategory::build(
                vec![Label::Nat(0), Label::Nat(1), Label::Nat(2)],
                vec![
                    (Label::name("id0"), Label::Nat(0), Label::Nat(0)),
                    (Label::name("id1"), Label::Nat(1), Label::Nat(1)),
                    (Label::name("id2"), Label::Nat(2), Label::Nat(2)),
                    (Label::name("a"), Label::Nat(0), Label::Nat(1)),
                    (Label::name("b"), Label::Nat(1), Label::Nat(2)),
                    (Label::name("ba"), Label::Nat(0), Label::Nat(2)),
                ],
                vec![
                    (Label::Nat(0), Label::name("id0")),
                    (Label::Nat(1), Label::name("id1")),
                    (Label::Nat(2), Label::name("id2")),
                ],
                vec![(Label::name("b"), Label::name("a"), Label::name("ba"))],
            )
            .unwrap(),
        )
    }

    pub fn by_name(name: &str) -> Option<Arc<Self>> {
        match name {
            "terminal" => Some(IndexCategory::terminal()),
            "arrow" => Some(IndexCategory::arrow_category()),
            "composable-pair" => Some(IndexCategory::composable_pair()),
            _ => None,
        }
    }

    pub fn objects(&self) -> &[Label] {
        &self.objects
    }

    pub fn object_count(&self) -> usize {
        self.objects.len()
    }

    pub fn arrow_count(&self) -> usize {
        self.arrows.len()
    }

    pub fn arrow(&self, i: usize) -> &Arrow {
        &self.arrows[i]
    }

    pub fn object_position(&self, l: &Label) -> Option<usize> {
        self.obj_index.get(l).copied()
    }

    pub fn arrow_position(&self, l: &Label) -> Option<usize> {
        self.arrow_index.get(l).copied()
    }

    pub fn identity(&self, obj: usize) -> usize {
        self.identities[obj]
    }

    /// `g ∘ f`; requires `cod f = dom g`.
    pub fn composite(&self, g: usize, f: usize) -> Result<usize> {
        self.compose[g][f].ok_or_else(|| {
            Error::Category(format!(
                "{}∘{} is not composable",
                self.arrows[g].name, self.arrows[f].name
            ))
        })
    }

    pub fn hom(&self, src: usize, dst: usize) -> Vec<usize> {
        (0..self.arrows.len())
            .filter(|&i| self.arrows[i].src == src && self.arrows[i].dst == dst)
            .collect()
    }

    pub fn arrows_into(&self, dst: usize) -> Vec<usize> {
        (0..self.arrows.len())
            .filter(|&i| self.arrows[i].dst == dst)
            .collect()
    }

    /// The opposite category; arrow names are preserved.
    pub fn opposite(&self) -> Result<Self> {
        let arrows = self
            .arrows
            .iter()
            .map(|a| {
                (
                    a.name.clone(),
                    self.objects[a.dst].clone(),
                    self.objects[a.src].clone(),
                )
            })
            .collect();
        let identities = self
            .identities
            .iter()
            .enumerate()
            .map(|(oi, &id)| (self.objects[oi].clone(), self.arrows[id].name.clone()))
            .collect();
        let mut composites = Vec::new();
        for g in 0..self.arrows.len() {
            for f in 0..self.arrows.len() {
                if let Some(gf) = self.compose[g][f] {
                    // (f ∘ᵒᵖ g) = g ∘ f
                    composites.push((
                        self.arrows[f].name.clone(),
                        self.arrows[g].name.clone(),
                        self.arrows[gf].name.clone(),
                    ));
                }
            }
        }
        IndexCategory::build(self.objects.clone(), arrows, identities, composites)
    }
}

// JSON form: objects, arrows with src/dst, identities, and a composition
// object keyed "g∘f".
#[derive(Serialize, Deserialize)]
struct IndexCategoryRepr {
    objects: Vec<Label>,
    arrows: Vec<ArrowRepr>,
    identities: HashMap<String, Label>,
    #[serde(default)]
    compose: HashMap<String, Label>,
}

#[derive(Serialize, Deserialize)]
struct ArrowRepr {
    name: Label,
    src: Label,
    dst: Label,
}

impl Serialize for IndexCategory {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = IndexCategoryRepr {
            objects: self.objects.clone(),
            arrows: self
                .arrows
                .iter()
                .map(|a| ArrowRepr {
                    name: a.name.clone(),
                    src: self.objects[a.src].clone(),
                    dst: self.objects[a.dst].clone(),
                })
                .collect(),
            identities: self
                .identities
                .iter()
                .enumerate()
                .map(|(oi, &id)| (self.objects[oi].to_string(), self.arrows[id].name.clone()))
                .collect(),
            compose: {
                let mut m = HashMap::new();
                for g in 0..self.arrows.len() {
                    for f in 0..self.arrows.len() {
                        if let Some(gf) = self.compose[g][f] {
                            m.insert(
                                format!("{}∘{}", self.arrows[g].name, self.arrows[f].name),
                                self.arrows[gf].name.clone(),
                            );
                        }
                    }
                }
                m
            },
        };
        repr.serialize(s)
    }
}

impl<'de> Deserialize<'de> for IndexCategory {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = IndexCategoryRepr::deserialize(d)?;
        let arrows = repr
            .arrows
            .into_iter()
            .map(|a| (a.name, a.src, a.dst))
            .collect();
        let identities: Vec<(Label, Label)> = repr
            .identities
            .into_iter()
            .map(|(k, v)| Label::parse(&k).map(|l| (l, v)))
            .collect::<Result<_>>()
            .map_err(D::Error::custom)?;
        let composites: Vec<(Label, Label, Label)> = repr
            .compose
            .into_iter()
            .map(|(k, v)| {
                let (g, f) = k.split_once('∘').ok_or_else(|| {
                    Error::Category(format!("composition key {k:?} is not of the form g∘f"))
                })?;
                Ok((Label::parse(g)?, Label::parse(f)?, v))
            })
            .collect::<Result<_>>()
            .map_err(D::Error::custom)?;
        IndexCategory::build(repr.objects, arrows, identities, composites)
            .map_err(D::Error::custom)
    }
}

/// A functor `C^op → FinSet`: a finite set per object and a restriction map
/// per arrow, functoriality validated exhaustively on construction.
#[derive(Clone, Debug)]
pub struct Presheaf {
    cat: Arc<IndexCategory>,
    at: Vec<FinSet>,
    /// for `f : c → d`, the restriction `X(f) : X(d) → X(c)`
    restriction: Vec<FinMap>,
}

impl PartialEq for Presheaf {
    fn eq(&self, other: &Self) -> bool {
        self.cat.objects == other.cat.objects
            && self.at == other.at
            && self.restriction == other.restriction
    }
}

impl Presheaf {
    pub fn new(cat: Arc<IndexCategory>, at: Vec<FinSet>, restriction: Vec<FinMap>) -> Result<Self> {
        if at.len() != cat.object_count() || restriction.len() != cat.arrow_count() {
            return Err(Error::Presheaf("component counts do not match the category".into()));
        }
        for (i, r) in restriction.iter().enumerate() {
            let a = cat.arrow(i);
            if r.dom() != &at[a.dst] || r.cod() != &at[a.src] {
                return Err(Error::Presheaf(format!(
                    "restriction along {} has wrong boundary",
                    a.name
                )));
            }
        }
        let psh = Presheaf {
            cat,
            at,
            restriction,
        };
        psh.validate()?;
        Ok(psh)
    }

    fn validate(&self) -> Result<()> {
        for (oi, &id) in self.cat.identities.iter().enumerate() {
            if self.restriction[id] != FinMap::identity(&self.at[oi]) {
                return Err(Error::Presheaf(format!(
                    "restriction along the identity of {} is not the identity",
                    self.cat.objects[oi]
                )));
            }
        }
        for g in 0..self.cat.arrow_count() {
            for f in 0..self.cat.arrow_count() {
                if let Some(gf) = self.cat.compose[g][f] {
                    let lhs = crate::finset::compose(&self.restriction[f], &self.restriction[g])?;
                    if lhs != self.restriction[gf] {
                        return Err(Error::Presheaf(format!(
                            "functoriality fails at {}∘{}",
                            self.cat.arrows[g].name, self.cat.arrows[f].name
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Build from a value function and restriction function, validating.
    pub fn from_fns(
        cat: Arc<IndexCategory>,
        at: impl Fn(usize) -> Result<FinSet>,
        restrict: impl Fn(usize, &Label) -> Result<Label>,
    ) -> Result<Self> {
        let sets: Vec<FinSet> = (0..cat.object_count())
            .map(at)
            .collect::<Result<_>>()?;
        let restriction = (0..cat.arrow_count())
            .map(|f| {
                let a = cat.arrow(f);
                FinMap::try_from_fn(sets[a.dst].clone(), sets[a.src].clone(), |l| restrict(f, l))
            })
            .collect::<Result<_>>()?;
        Presheaf::new(cat, sets, restriction)
    }

    pub fn cat(&self) -> &Arc<IndexCategory> {
        &self.cat
    }

    pub fn at(&self, obj: usize) -> &FinSet {
        &self.at[obj]
    }

    pub fn restriction(&self, arrow: usize) -> &FinMap {
        &self.restriction[arrow]
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.at.iter().map(|s| s.len()).collect()
    }

    pub fn total_size(&self) -> usize {
        self.at.iter().map(|s| s.len()).sum()
    }

    /// The constant singleton presheaf.
    pub fn terminal(cat: Arc<IndexCategory>) -> Self {
        let at = vec![FinSet::terminal(); cat.object_count()];
        let restriction = (0..cat.arrow_count())
            .map(|_| FinMap::identity(&FinSet::terminal()))
            .collect();
        Presheaf {
            cat,
            at,
            restriction,
        }
    }

    /// Flatten to a single finite set with `(object, element)` labels,
    /// objects in category order.
    pub fn flatten(&self) -> FinSet {
        let mut elems = Vec::new();
        for (oi, set) in self.at.iter().enumerate() {
            for l in set.iter() {
                elems.push(Label::pair(self.cat.objects[oi].clone(), l.clone()));
            }
        }
        FinSet::new(elems).expect("flattened labels are distinct")
    }
}

/// A natural transformation between presheaves on the same category.
#[derive(Clone, Debug, PartialEq)]
pub struct PNat {
    dom: Presheaf,
    cod: Presheaf,
    components: Vec<FinMap>,
}

impl PNat {
    pub fn new(dom: Presheaf, cod: Presheaf, components: Vec<FinMap>) -> Result<Self> {
        if !Arc::ptr_eq(&dom.cat, &cod.cat) && dom.cat.objects != cod.cat.objects {
            return Err(Error::Presheaf("presheaves live over different categories".into()));
        }
        if components.len() != dom.cat.object_count() {
            return Err(Error::Presheaf("one component per object required".into()));
        }
        for (oi, c) in components.iter().enumerate() {
            if c.dom() != &dom.at[oi] || c.cod() != &cod.at[oi] {
                return Err(Error::Presheaf(format!(
                    "component at {} has wrong boundary",
                    dom.cat.objects[oi]
                )));
            }
        }
        let nat = PNat {
            dom,
            cod,
            components,
        };
        nat.validate()?;
        Ok(nat)
    }

    fn validate(&self) -> Result<()> {
        for f in 0..self.dom.cat.arrow_count() {
            let a = self.dom.cat.arrow(f);
            let lhs = crate::finset::compose(&self.components[a.src], self.dom.restriction(f))?;
            let rhs = crate::finset::compose(self.cod.restriction(f), &self.components[a.dst])?;
            if lhs != rhs {
                return Err(Error::Presheaf(format!(
                    "naturality fails along {}",
                    a.name
                )));
            }
        }
        Ok(())
    }

    pub fn from_fn(
        dom: Presheaf,
        cod: Presheaf,
        component: impl Fn(usize, &Label) -> Result<Label>,
    ) -> Result<Self> {
        let components = (0..dom.cat.object_count())
            .map(|oi| {
                FinMap::try_from_fn(dom.at[oi].clone(), cod.at[oi].clone(), |l| component(oi, l))
            })
            .collect::<Result<Vec<_>>>()?;
        PNat::new(dom, cod, components)
    }

    pub fn identity(psh: &Presheaf) -> Self {
        PNat {
            dom: psh.clone(),
            cod: psh.clone(),
            components: psh.at.iter().map(FinMap::identity).collect(),
        }
    }

    pub fn dom(&self) -> &Presheaf {
        &self.dom
    }

    pub fn cod(&self) -> &Presheaf {
        &self.cod
    }

    pub fn component(&self, obj: usize) -> &FinMap {
        &self.components[obj]
    }

    pub fn is_monic(&self) -> bool {
        self.components.iter().all(FinMap::is_injective)
    }

    pub fn is_iso(&self) -> bool {
        self.components.iter().all(FinMap::is_bijective)
    }

    /// Flatten to a single map between the flattened sets.
    pub fn flatten(&self) -> FinMap {
        let dom = self.dom.flatten();
        let cod = self.cod.flatten();
        FinMap::from_fn(dom, cod, |l| {
            let (obj, x) = l.as_pair().expect("flattened element");
            let oi = self.dom.cat.object_position(obj).expect("object");
            Label::pair(obj.clone(), self.components[oi].apply(x).expect("component").clone())
        })
        .expect("flattened map")
    }
}

/// Compose natural transformations.
pub fn compose_nat(g: &PNat, f: &PNat) -> Result<PNat> {
    if f.cod != g.dom {
        return Err(Error::boundary("compose_nat", "middle presheaves differ"));
    }
    let components = (0..f.components.len())
        .map(|i| crate::finset::compose(&g.components[i], &f.components[i]))
        .collect::<Result<Vec<_>>>()?;
    PNat::new(f.dom.clone(), g.cod.clone(), components)
}

/// The representable presheaf of an object: `y(c)(d) = hom(d, c)`.
pub fn yoneda(cat: &Arc<IndexCategory>, c: usize) -> Presheaf {
    let at: Vec<FinSet> = (0..cat.object_count())
        .map(|d| {
            FinSet::new(
                cat.hom(d, c)
                    .into_iter()
                    .map(|i| cat.arrow(i).name.clone())
                    .collect(),
            )
            .expect("arrow names are distinct")
        })
        .collect();
    let restriction = (0..cat.arrow_count())
        .map(|f| {
            let a = cat.arrow(f);
            FinMap::from_fn(at[a.dst].clone(), at[a.src].clone(), |g| {
                let gi = cat.arrow_position(g).expect("arrow");
                cat.arrows[cat.compose[gi][f].expect("composable")].name.clone()
            })
            .expect("precomposition")
        })
        .collect();
    Presheaf {
        cat: cat.clone(),
        at,
        restriction,
    }
}

/// The natural transformation `y(c) → X` classifying an element `x ∈ X(c)`.
pub fn yoneda_element(x_psh: &Presheaf, c: usize, x: &Label) -> Result<PNat> {
    let cat = x_psh.cat.clone();
    let yc = yoneda(&cat, c);
    x_psh.at[c].require(x, "presheaf value")?;
    PNat::from_fn(yc, x_psh.clone(), |d, g| {
        let _ = d;
        let gi = cat.arrow_position(g).expect("arrow");
        x_psh.restriction(gi).apply(x).cloned()
    })
}

/// The category of elements: objects `(c, x)` with `x ∈ X(c)`, arrows
/// `(f, y) : (c, X(f)(y)) → (d, y)` for `f : c → d`.
pub fn elements(x_psh: &Presheaf) -> Result<IndexCategory> {
    let cat = &x_psh.cat;
    let mut objects = Vec::new();
    for (oi, set) in x_psh.at.iter().enumerate() {
        for l in set.iter() {
            objects.push(Label::pair(cat.objects[oi].clone(), l.clone()));
        }
    }
    let mut arrows = Vec::new();
    let mut identities = Vec::new();
    for f in 0..cat.arrow_count() {
        let a = cat.arrow(f);
        for y in x_psh.at[a.dst].iter() {
            let x = x_psh.restriction(f).apply(y)?;
            let name = Label::pair(a.name.clone(), y.clone());
            let src = Label::pair(cat.objects[a.src].clone(), x.clone());
            let dst = Label::pair(cat.objects[a.dst].clone(), y.clone());
            arrows.push((name.clone(), src, dst.clone()));
            if f == cat.identity(a.dst) {
                identities.push((dst, name));
            }
        }
    }
    let mut composites = Vec::new();
    for f in 0..cat.arrow_count() {
        for g in 0..cat.arrow_count() {
            let (af, ag) = (cat.arrow(f), cat.arrow(g));
            if af.dst != ag.src {
                continue;
            }
            let gf = cat.composite(g, f)?;
            for z in x_psh.at[ag.dst].iter() {
                let y = x_psh.restriction(g).apply(z)?;
                composites.push((
                    Label::pair(ag.name.clone(), z.clone()),
                    Label::pair(af.name.clone(), y.clone()),
                    Label::pair(cat.arrows[gf].name.clone(), z.clone()),
                ));
            }
        }
    }
    IndexCategory::build(objects, arrows, identities, composites)
}

/// Enumerate all natural transformations `X → Y`, deterministically, by
/// backtracking over per-object components with naturality pruning.
pub fn enumerate_nats(x: &Presheaf, y: &Presheaf) -> Result<Vec<PNat>> {
    let n = x.cat.object_count();
    let mut out = Vec::new();
    let mut chosen: Vec<Option<FinMap>> = vec![None; n];

    fn consistent(x: &Presheaf, y: &Presheaf, chosen: &[Option<FinMap>]) -> bool {
        for f in 0..x.cat.arrow_count() {
            let a = x.cat.arrow(f);
            if let (Some(cs), Some(cd)) = (&chosen[a.src], &chosen[a.dst]) {
                let lhs = crate::finset::compose(cs, x.restriction(f)).unwrap();
                let rhs = crate::finset::compose(y.restriction(f), cd).unwrap();
                if lhs != rhs {
                    return false;
                }
            }
        }
        true
    }

    fn go(
        x: &Presheaf,
        y: &Presheaf,
        oi: usize,
        chosen: &mut Vec<Option<FinMap>>,
        out: &mut Vec<PNat>,
    ) -> Result<()> {
        if oi == x.cat.object_count() {
            let components: Vec<FinMap> = chosen.iter().map(|c| c.clone().unwrap()).collect();
            out.push(PNat::new(x.clone(), y.clone(), components)?);
            return Ok(());
        }
        for cand in crate::finset::all_maps(&x.at[oi], &y.at[oi]) {
            chosen[oi] = Some(cand);
            if consistent(x, y, chosen) {
                go(x, y, oi + 1, chosen, out)?;
            }
            chosen[oi] = None;
        }
        Ok(())
    }

    go(x, y, 0, &mut chosen, &mut out)?;
    Ok(out)
}

/// Pointwise pullback of a cospan of natural transformations, with its two
/// projections. Agrees with the finite-set pullback at every object.
pub fn pullback_presheaf(f: &PNat, g: &PNat) -> Result<(Presheaf, PNat, PNat)> {
    if f.cod != g.cod {
        return Err(Error::boundary("pullback_presheaf", "cospan codomains differ"));
    }
    let cat = f.dom.cat.clone();
    let mut at = Vec::new();
    let mut p1_tables = Vec::new();
    let mut p2_tables = Vec::new();
    for oi in 0..cat.object_count() {
        let (p, p1, p2) = crate::finset::pullback(&f.components[oi], &g.components[oi])?;
        at.push(p);
        p1_tables.push(p1);
        p2_tables.push(p2);
    }
    let restriction = (0..cat.arrow_count())
        .map(|ai| {
            let a = cat.arrow(ai);
            FinMap::try_from_fn(at[a.dst].clone(), at[a.src].clone(), |l| {
                let (u, v) = l.as_pair().expect("pullback pair");
                Ok(Label::pair(
                    f.dom.restriction(ai).apply(u)?.clone(),
                    g.dom.restriction(ai).apply(v)?.clone(),
                ))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let p = Presheaf::new(cat, at, restriction)?;
    let p1 = PNat::new(p.clone(), f.dom.clone(), p1_tables)?;
    let p2 = PNat::new(p.clone(), g.dom.clone(), p2_tables)?;
    Ok((p, p1, p2))
}

/// A successful representability choice at one element.
#[derive(Clone, Debug, Serialize)]
pub struct RepresentabilityChoice {
    /// the base element `(c, x)` the pullback was taken along
    pub at: Label,
    /// the chosen representing object
    pub object: Label,
    /// the chosen arrow into the base object
    pub arrow: Label,
    /// the universal element of the domain presheaf
    pub element: Label,
}

#[derive(Clone, Debug, Serialize)]
pub struct RepresentabilityReport {
    pub representable: bool,
    pub choices: Vec<RepresentabilityChoice>,
    /// first element whose pullback is not representable
    pub failure: Option<Label>,
}

/// Check whether the pullback of `p` along every element of its codomain is
/// representable, exhibiting the chosen pullback data.
pub fn is_representable(p: &PNat) -> Result<RepresentabilityReport> {
    let cat = p.dom.cat.clone();
    let mut choices = Vec::new();
    for c in 0..cat.object_count() {
        for x in p.cod.at[c].iter() {
            let x_hat = yoneda_element(&p.cod, c, x)?;
            let (q, q1, _q2) = pullback_presheaf(&x_hat, p)?;
            // q(d) = {(g : d → c, y) | p(y) = x·g}; search a representing pair
            match representing_element(&q) {
                Some((d0, u)) => {
                    let (g, y) = u.as_pair().expect("pullback pair");
                    let _ = q1;
                    choices.push(RepresentabilityChoice {
                        at: Label::pair(cat.objects[c].clone(), x.clone()),
                        object: cat.objects[d0].clone(),
                        arrow: g.clone(),
                        element: y.clone(),
                    });
                }
                None => {
                    return Ok(RepresentabilityReport {
                        representable: false,
                        choices,
                        failure: Some(Label::pair(cat.objects[c].clone(), x.clone())),
                    })
                }
            }
        }
    }
    Ok(RepresentabilityReport {
        representable: true,
        choices,
        failure: None,
    })
}

/// Find `(d, u ∈ Q(d))` such that the induced map `y(d) → Q` is an
/// isomorphism, if one exists.
fn representing_element(q: &Presheaf) -> Option<(usize, Label)> {
    let cat = &q.cat;
    for d in 0..cat.object_count() {
        'candidates: for u in q.at[d].iter() {
            // the induced components: hom(e, d) → Q(e), h ↦ u·h
            for e in 0..cat.object_count() {
                let hom = cat.hom(e, d);
                if hom.len() != q.at[e].len() {
                    continue 'candidates;
                }
                let mut seen = std::collections::HashSet::new();
                for h in hom {
                    let img = q.restriction(h).apply(u).expect("restriction");
                    if !seen.insert(img.clone()) {
                        continue 'candidates;
                    }
                }
            }
            return Some((d, u.clone()));
        }
    }
    None
}

/// The comprehension pullback of a model `t` along a type `a : y(Γ) → U`:
/// the extension presheaf with its projection and generic-element maps.
pub struct ComprehensionPullback {
    pub extension: Presheaf,
    pub pi: PNat,
    pub q: PNat,
}

pub fn comprehension_pullback(t: &PNat, a: &PNat) -> Result<ComprehensionPullback> {
    if a.cod != t.cod {
        return Err(Error::boundary(
            "comprehension_pullback",
            "type map does not land in the model's type presheaf",
        ));
    }
    let (ext, pi, q) = pullback_presheaf(a, t)?;
    Ok(ComprehensionPullback {
        extension: ext,
        pi,
        q,
    })
}

/// Context extension for a representable model: additionally exhibits the
/// representing object and the projection arrow in the index category.
pub struct ContextExtension {
    pub pullback: ComprehensionPullback,
    /// representing object of the extension
    pub object: Label,
    /// the projection arrow in the index category
    pub projection: Label,
    /// the generic element of the model's term presheaf
    pub element: Label,
}

pub fn context_extension(t: &PNat, a: &PNat) -> Result<ContextExtension> {
    let cp = comprehension_pullback(t, a)?;
    match representing_element(&cp.extension) {
        Some((d0, u)) => {
            let (g, y) = u.as_pair().expect("pullback pair");
            Ok(ContextExtension {
                object: cp.extension.cat.objects[d0].clone(),
                projection: g.clone(),
                element: y.clone(),
                pullback: cp,
            })
        }
        None => Err(Error::NotRepresentable {
            at: Label::name("type"),
            detail: "the comprehension pullback is not representable".into(),
        }),
    }
}

/// The natural model induced by a set of display arrows: the coproduct of
/// the representables of their domains over those of their codomains.
pub fn clan_model(cat: &Arc<IndexCategory>, display: &[Label]) -> Result<PNat> {
    let mut ds = Vec::new();
    for name in display {
        ds.push(
            cat.arrow_position(name)
                .ok_or_else(|| Error::Category(format!("display arrow {name} not in the category")))?,
        );
    }
    // U(c) = ⊔_d hom(c, cod d), U̇(c) = ⊔_d hom(c, dom d)
    let u = Presheaf::from_fns(
        cat.clone(),
        |c| {
            let mut elems = Vec::new();
            for &d in &ds {
                for g in cat.hom(c, cat.arrow(d).dst) {
                    elems.push(Label::pair(
                        cat.arrow(d).name.clone(),
                        cat.arrow(g).name.clone(),
                    ));
                }
            }
            FinSet::new(elems)
        },
        |f, l| {
            let (d, g) = l.as_pair().expect("coproduct element");
            let gi = cat.arrow_position(g).expect("arrow");
            Ok(Label::pair(
                d.clone(),
                cat.arrows[cat.composite(gi, f)?].name.clone(),
            ))
        },
    )?;
    let udot = Presheaf::from_fns(
        cat.clone(),
        |c| {
            let mut elems = Vec::new();
            for &d in &ds {
                for g in cat.hom(c, cat.arrow(d).src) {
                    elems.push(Label::pair(
                        cat.arrow(d).name.clone(),
                        cat.arrow(g).name.clone(),
                    ));
                }
            }
            FinSet::new(elems)
        },
        |f, l| {
            let (d, g) = l.as_pair().expect("coproduct element");
            let gi = cat.arrow_position(g).expect("arrow");
            Ok(Label::pair(
                d.clone(),
                cat.arrows[cat.composite(gi, f)?].name.clone(),
            ))
        },
    )?;
    PNat::from_fn(udot, u, |_, l| {
        let (d, h) = l.as_pair().expect("coproduct element");
        let di = cat.arrow_position(d).expect("display arrow");
        let hi = cat.arrow_position(h).expect("arrow");
        Ok(Label::pair(
            d.clone(),
            cat.arrows[cat.composite(di, hi)?].name.clone(),
        ))
    })
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;

    /// A presheaf on the arrow category with the given sizes and an
    /// explicit table for the one non-identity restriction.
    pub fn arrow_presheaf(size0: u64, size1: u64, table: Vec<usize>) -> Presheaf {
        let cat = IndexCategory::arrow_category();
        let sets = vec![FinSet::canonical(size0), FinSet::canonical(size1)];
        let restriction = (0..cat.arrow_count())
            .map(|fi| {
                let a = cat.arrow(fi);
                if a.name == Label::name("a") {
                    FinMap::new(sets[1].clone(), sets[0].clone(), table.clone()).unwrap()
                } else {
                    FinMap::identity(&sets[a.src])
                }
            })
            .collect();
        Presheaf::new(cat, sets, restriction).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_categories_validate() {
        IndexCategory::terminal();
        IndexCategory::arrow_category();
        IndexCategory::composable_pair();
    }

    #[test]
    fn bad_category_rejected() {
        // missing composite b∘a
        let r = IndexCategory::build(
            vec![Label::Nat(0), Label::Nat(1), Label::Nat(2)],
            vec![
                (Label::name("id0"), Label::Nat(0), Label::Nat(0)),
                (Label::name("id1"), Label::Nat(1), Label::Nat(1)),
                (Label::name("id2"), Label::Nat(2), Label::Nat(2)),
                (Label::name("a"), Label::Nat(0), Label::Nat(1)),
                (Label::name("b"), Label::Nat(1), Label::Nat(2)),
            ],
            vec![
                (Label::Nat(0), Label::name("id0")),
                (Label::Nat(1), Label::name("id1")),
                (Label::Nat(2), Label::name("id2")),
            ],
            vec![],
        );
        assert!(r.is_err());
    }

    #[test]
    fn index_category_json_round_trip() {
        let cat = IndexCategory::composable_pair();
        let text = serde_json::to_string(&*cat).unwrap();
        let back: IndexCategory = serde_json::from_str(&text).unwrap();
        assert_eq!(back.objects, cat.objects);
        assert_eq!(back.arrow_count(), cat.arrow_count());
    }

    #[test]
    fn yoneda_of_terminal_is_singleton() {
        let cat = IndexCategory::terminal();
        let y = yoneda(&cat, 0);
        assert_eq!(y.sizes(), vec![1]);
    }

    #[test]
    fn yoneda_arrow_category() {
        let cat = IndexCategory::arrow_category();
        // y(1): hom(0,1) = {a}, hom(1,1) = {id1}
        let y1 = yoneda(&cat, 1);
        assert_eq!(y1.sizes(), vec![1, 1]);
        let y0 = yoneda(&cat, 0);
        assert_eq!(y0.sizes(), vec![1, 0]);
    }

    #[test]
    fn elements_of_constant_one_is_the_category() {
        let cat = IndexCategory::composable_pair();
        let one = Presheaf::terminal(cat.clone());
        let el = elements(&one).unwrap();
        assert_eq!(el.object_count(), cat.object_count());
        assert_eq!(el.arrow_count(), cat.arrow_count());
    }

    #[test]
    fn elements_size_is_total() {
        let x = test_support::arrow_presheaf(2, 3, vec![0, 1, 1]);
        let el = elements(&x).unwrap();
        assert_eq!(el.object_count(), x.total_size());
    }

    #[test]
    fn enumerate_nats_counts() {
        let cat = IndexCategory::terminal();
        let x = Presheaf::from_fns(cat.clone(), |_| Ok(FinSet::canonical(2)), |_, l| Ok(l.clone()))
            .unwrap();
        let y = Presheaf::from_fns(cat.clone(), |_| Ok(FinSet::canonical(3)), |_, l| Ok(l.clone()))
            .unwrap();
        assert_eq!(enumerate_nats(&x, &y).unwrap().len(), 9);
    }

    #[test]
    fn identity_nat_is_representable() {
        let cat = IndexCategory::arrow_category();
        let y1 = yoneda(&cat, 1);
        let p = PNat::identity(&y1);
        let report = is_representable(&p).unwrap();
        assert!(report.representable);
        // choices are identities
        for choice in &report.choices {
            let (c, _) = choice.at.as_pair().unwrap();
            assert_eq!(&choice.object, c);
        }
    }

    #[test]
    fn clan_model_is_representable() {
        let cat = IndexCategory::arrow_category();
        let display: Vec<Label> = vec![Label::name("id0"), Label::name("id1"), Label::name("a")];
        let t = clan_model(&cat, &display).unwrap();
        let report = is_representable(&t).unwrap();
        assert!(report.representable, "{report:?}");
    }

    #[test]
    fn clan_model_identity_display_is_yoneda_like() {
        let cat = IndexCategory::arrow_category();
        let t = clan_model(&cat, &[Label::name("id1")]).unwrap();
        // both total and base are y(1) up to labeling
        assert_eq!(t.dom().sizes(), yoneda(&cat, 1).sizes());
        assert_eq!(t.cod().sizes(), yoneda(&cat, 1).sizes());
        assert!(t.is_iso());
    }

    #[test]
    fn clan_model_empty_display() {
        let cat = IndexCategory::arrow_category();
        let t = clan_model(&cat, &[]).unwrap();
        assert_eq!(t.dom().total_size(), 0);
        assert_eq!(t.cod().total_size(), 0);
        assert!(is_representable(&t).unwrap().representable);
    }

    #[test]
    fn non_representable_detected() {
        // a two-element fiber over the terminal presheaf on the arrow
        // category cannot be a representable pullback at object 0
        let cat = IndexCategory::arrow_category();
        let one = Presheaf::terminal(cat.clone());
        let two = Presheaf::from_fns(
            cat.clone(),
            |_| Ok(FinSet::canonical(2)),
            |_, l| Ok(l.clone()),
        )
        .unwrap();
        let p = PNat::from_fn(two, one, |_, _| Ok(Label::Nat(0))).unwrap();
        let report = is_representable(&p).unwrap();
        assert!(!report.representable);
        assert!(report.failure.is_some());
    }

    #[test]
    fn context_extension_on_clan_model() {
        let cat = IndexCategory::arrow_category();
        let display: Vec<Label> = vec![Label::name("id0"), Label::name("id1"), Label::name("a")];
        let t = clan_model(&cat, &display).unwrap();
        // Γ = 1, a type over it: an element of U(1)
        let gamma = 1usize;
        for x in t.cod().at(gamma).clone().iter() {
            let a = yoneda_element(t.cod(), gamma, x).unwrap();
            let ext = context_extension(&t, &a).unwrap();
            // the square commutes: t ∘ q = a ∘ pi
            let lhs = compose_nat(&t.clone(), &ext.pullback.q).unwrap();
            let rhs = compose_nat(&a, &ext.pullback.pi).unwrap();
            assert_eq!(lhs.component(0), rhs.component(0));
            assert_eq!(lhs.component(1), rhs.component(1));
        }
    }

    #[test]
    fn context_extension_substitutes_by_pullback() {
        // extending along a reindexed type agrees with pulling the extension
        // back along the substitution
        let cat = IndexCategory::arrow_category();
        let display: Vec<Label> = vec![Label::name("id0"), Label::name("id1"), Label::name("a")];
        let t = clan_model(&cat, &display).unwrap();
        let gamma = 1usize;
        let sigma = 2usize; // the arrow a : 0 → 1 as a substitution
        for x in t.cod().at(gamma).clone().iter() {
            let a_ty = yoneda_element(t.cod(), gamma, x).unwrap();
            let ext_gamma = comprehension_pullback(&t, &a_ty).unwrap();
            // A[σ] = A ∘ yσ
            let y0 = yoneda(&cat, 0);
            let y_sigma = PNat::from_fn(y0, yoneda(&cat, gamma), |_, g| {
                let gi = cat.arrow_position(g).unwrap();
                Ok(cat.arrows[cat.composite(sigma, gi).unwrap()].name.clone())
            })
            .unwrap();
            let a_sub = compose_nat(&a_ty, &y_sigma).unwrap();
            let ext_delta = comprehension_pullback(&t, &a_sub).unwrap();
            // pullback of the extension along the substitution, pointwise
            let (pulled, _, _) = pullback_presheaf(&y_sigma, &ext_gamma.pi).unwrap();
            assert_eq!(ext_delta.extension.sizes(), pulled.sizes(), "type {x}");
        }
    }

    #[test]
    fn comprehension_over_terminal_matches_the_cardinal_model() {
        // over the one-object base, the model truncation is a plain map of
        // sets and comprehension pullbacks agree with the algebra's
        let cat = IndexCategory::terminal();
        let alg = crate::mlalg::MLAlgebra::nat(8).unwrap();
        let t_fam = alg.t_family();
        let u = Presheaf::from_fns(cat.clone(), |_| Ok(t_fam.base().clone()), |_, l| Ok(l.clone()))
            .unwrap();
        let udot = Presheaf::from_fns(cat.clone(), |_| Ok(t_fam.total().clone()), |_, l| Ok(l.clone()))
            .unwrap();
        let t = PNat::from_fn(udot, u.clone(), |_, l| t_fam.proj().apply(l).cloned()).unwrap();
        for n in 0..5u64 {
            let a_ty = PNat::from_fn(Presheaf::terminal(cat.clone()), u.clone(), |_, _| {
                Ok(Label::Nat(n))
            })
            .unwrap();
            let cp = comprehension_pullback(&t, &a_ty).unwrap();
            let alpha = crate::finset::FinMap::constant(
                crate::finset::FinSet::terminal(),
                alg.u_set(),
                &Label::Nat(n),
            )
            .unwrap();
            let comp = crate::mlalg::comprehend(&alg, &alpha).unwrap();
            assert_eq!(cp.extension.total_size(), comp.family.total().len());
        }
    }

    #[test]
    fn pullback_presheaf_is_pointwise() {
        let cat = IndexCategory::arrow_category();
        let x = Presheaf::from_fns(
            cat.clone(),
            |oi| Ok(FinSet::canonical([2, 2][oi] as u64)),
            |_, l| Ok(l.clone()),
        )
        .unwrap();
        let one = Presheaf::terminal(cat.clone());
        let f = PNat::from_fn(x.clone(), one.clone(), |_, _| Ok(Label::Nat(0))).unwrap();
        let (p, _, _) = pullback_presheaf(&f, &f).unwrap();
        for oi in 0..cat.object_count() {
            let (expected, _, _) =
                crate::finset::pullback(f.component(oi), f.component(oi)).unwrap();
            assert_eq!(p.at(oi), &expected);
        }
    }
}
