//! Nerves of finite categories and universes of small sets.
//!
//! The nerve of a category `D` along the index category assigns to each
//! object `c` the set of functors from the slice over `c` into `D`, with
//! restriction by precomposing the post-composition functor between slices.
//! Applying this to the opposite of the category of pointed small sets over
//! plain small sets produces the universe pair; at size two the result is
//! naturally isomorphic to the sieve classifier.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::finset::{FinMap, FinSet};
use crate::label::Label;

use super::{omega, IndexCategory, PNat, Presheaf};

/// A functor between finite index categories, stored positionally.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Functor {
    pub ob_map: Vec<usize>,
    pub arrow_map: Vec<usize>,
}

impl Functor {
    /// Canonical label: object assignments then arrow assignments.
    pub fn label(&self, dom: &IndexCategory, cod: &IndexCategory) -> Label {
        let _ = dom;
        Label::pair(
            Label::tuple(self.ob_map.iter().map(|&o| cod.objects()[o].clone())),
            Label::tuple(self.arrow_map.iter().map(|&a| cod.arrow(a).name.clone())),
        )
    }

    pub fn validate(&self, dom: &IndexCategory, cod: &IndexCategory) -> Result<()> {
        if self.ob_map.len() != dom.object_count() || self.arrow_map.len() != dom.arrow_count() {
            return Err(Error::Category("functor data has wrong lengths".into()));
        }
        for (ai, &img) in self.arrow_map.iter().enumerate() {
            let a = dom.arrow(ai);
            let b = cod.arrow(img);
            if b.src != self.ob_map[a.src] || b.dst != self.ob_map[a.dst] {
                return Err(Error::Category(format!(
                    "functor breaks boundaries at {}",
                    a.name
                )));
            }
        }
        for oi in 0..dom.object_count() {
            if self.arrow_map[dom.identity(oi)] != cod.identity(self.ob_map[oi]) {
                return Err(Error::Category("functor breaks an identity".into()));
            }
        }
        for g in 0..dom.arrow_count() {
            for f in 0..dom.arrow_count() {
                if dom.arrow(f).dst != dom.arrow(g).src {
                    continue;
                }
                let gf = dom.composite(g, f)?;
                let img = cod.composite(self.arrow_map[g], self.arrow_map[f])?;
                if self.arrow_map[gf] != img {
                    return Err(Error::Category("functor breaks a composite".into()));
                }
            }
        }
        Ok(())
    }

    /// Composite `self ∘ first`.
    pub fn after(&self, first: &Functor) -> Functor {
        Functor {
            ob_map: first.ob_map.iter().map(|&o| self.ob_map[o]).collect(),
            arrow_map: first.arrow_map.iter().map(|&a| self.arrow_map[a]).collect(),
        }
    }
}

/// Enumerate all functors `dom → cod` in lexicographic assignment order,
/// with identity constraints applied eagerly and composites checked on
/// completion of each arrow choice.
pub fn enumerate_functors(dom: &IndexCategory, cod: &IndexCategory) -> Vec<Functor> {
    let mut out = Vec::new();
    let mut ob_map = vec![0usize; dom.object_count()];
    enumerate_ob(dom, cod, 0, &mut ob_map, &mut out);
    out
}

fn enumerate_ob(
    dom: &IndexCategory,
    cod: &IndexCategory,
    oi: usize,
    ob_map: &mut Vec<usize>,
    out: &mut Vec<Functor>,
) {
    if oi == dom.object_count() {
        // non-identity arrows to assign, in index order
        let free: Vec<usize> = (0..dom.arrow_count())
            .filter(|&a| (0..dom.object_count()).all(|o| dom.identity(o) != a))
            .collect();
        let mut arrow_map = vec![usize::MAX; dom.arrow_count()];
        for o in 0..dom.object_count() {
            arrow_map[dom.identity(o)] = cod.identity(ob_map[o]);
        }
        enumerate_arrows(dom, cod, &free, 0, ob_map, &mut arrow_map, out);
        return;
    }
    for cand in 0..cod.object_count() {
        ob_map[oi] = cand;
        enumerate_ob(dom, cod, oi + 1, ob_map, out);
    }
}

fn enumerate_arrows(
    dom: &IndexCategory,
    cod: &IndexCategory,
    free: &[usize],
    k: usize,
    ob_map: &Vec<usize>,
    arrow_map: &mut Vec<usize>,
    out: &mut Vec<Functor>,
) {
    if k == free.len() {
        let f = Functor {
            ob_map: ob_map.clone(),
            arrow_map: arrow_map.clone(),
        };
        if f.validate(dom, cod).is_ok() {
            out.push(f);
        }
        return;
    }
    let ai = free[k];
    let a = dom.arrow(ai);
    for cand in cod.hom(ob_map[a.src], ob_map[a.dst]) {
        arrow_map[ai] = cand;
        // prune on composites already determined
        if composites_consistent(dom, cod, arrow_map) {
            enumerate_arrows(dom, cod, free, k + 1, ob_map, arrow_map, out);
        }
        arrow_map[ai] = usize::MAX;
    }
}

fn composites_consistent(dom: &IndexCategory, cod: &IndexCategory, arrow_map: &[usize]) -> bool {
    for g in 0..dom.arrow_count() {
        for f in 0..dom.arrow_count() {
            if dom.arrow(f).dst != dom.arrow(g).src {
                continue;
            }
            let gf = dom.composite(g, f).unwrap();
            let (mf, mg, mgf) = (arrow_map[f], arrow_map[g], arrow_map[gf]);
            if mf == usize::MAX || mg == usize::MAX || mgf == usize::MAX {
                continue;
            }
            if cod.composite(mg, mf).ok() != Some(mgf) {
                return false;
            }
        }
    }
    true
}

/// The slice category over `c`: objects are arrows into `c`, morphisms are
/// factorizations. Also returns the object list (arrow indices into `c`).
pub fn slice_category(cat: &IndexCategory, c: usize) -> Result<(IndexCategory, Vec<usize>)> {
    let into = cat.arrows_into(c);
    let objects: Vec<Label> = into.iter().map(|&i| cat.arrow(i).name.clone()).collect();
    let mut arrows = Vec::new();
    let mut identities = Vec::new();
    for &x in &into {
        for &y in &into {
            for g in cat.hom(cat.arrow(x).src, cat.arrow(y).src) {
                if cat.composite(y, g)? == x {
                    let name = Label::tuple([
                        cat.arrow(g).name.clone(),
                        cat.arrow(x).name.clone(),
                        cat.arrow(y).name.clone(),
                    ]);
                    arrows.push((name.clone(), cat.arrow(x).name.clone(), cat.arrow(y).name.clone()));
                    if x == y && g == cat.identity(cat.arrow(x).src) {
                        identities.push((cat.arrow(x).name.clone(), name));
                    }
                }
            }
        }
    }
    let mut composites = Vec::new();
    for &x in &into {
        for &y in &into {
            for &z in &into {
                for g in cat.hom(cat.arrow(x).src, cat.arrow(y).src) {
                    if cat.composite(y, g)? != x {
                        continue;
                    }
                    for h in cat.hom(cat.arrow(y).src, cat.arrow(z).src) {
                        if cat.composite(z, h)? != y {
                            continue;
                        }
                        let hg = cat.composite(h, g)?;
                        composites.push((
                            Label::tuple([
                                cat.arrow(h).name.clone(),
                                cat.arrow(y).name.clone(),
                                cat.arrow(z).name.clone(),
                            ]),
                            Label::tuple([
                                cat.arrow(g).name.clone(),
                                cat.arrow(x).name.clone(),
                                cat.arrow(y).name.clone(),
                            ]),
                            Label::tuple([
                                cat.arrow(hg).name.clone(),
                                cat.arrow(x).name.clone(),
                                cat.arrow(z).name.clone(),
                            ]),
                        ));
                    }
                }
            }
        }
    }
    Ok((IndexCategory::build(objects, arrows, identities, composites)?, into))
}

/// The post-composition functor between slices along `f : c → c'`.
fn slice_postcompose(
    cat: &IndexCategory,
    f: usize,
    src_slice: &(IndexCategory, Vec<usize>),
    dst_slice: &(IndexCategory, Vec<usize>),
) -> Result<Functor> {
    let (s_cat, s_into) = src_slice;
    let (d_cat, d_into) = dst_slice;
    let ob_map: Vec<usize> = s_into
        .iter()
        .map(|&x| {
            let fx = cat.composite(f, x).expect("composable");
            d_into.iter().position(|&y| y == fx).expect("slice object")
        })
        .collect();
    let mut arrow_map = Vec::with_capacity(s_cat.arrow_count());
    for ai in 0..s_cat.arrow_count() {
        let name = &s_cat.arrow(ai).name;
        let parts = name.as_tuple().expect("slice arrow label");
        let g = cat.arrow_position(&parts[0]).expect("arrow");
        let x = cat.arrow_position(&parts[1]).expect("arrow");
        let y = cat.arrow_position(&parts[2]).expect("arrow");
        let target = Label::tuple([
            cat.arrow(g).name.clone(),
            cat.arrow(cat.composite(f, x)?).name.clone(),
            cat.arrow(cat.composite(f, y)?).name.clone(),
        ]);
        arrow_map.push(
            d_cat
                .arrow_position(&target)
                .ok_or_else(|| Error::Category(format!("missing slice arrow {target}")))?,
        );
    }
    Ok(Functor { ob_map, arrow_map })
}

/// The nerve of `d` along the index category: at `c`, all functors from the
/// slice over `c` into `d`.
pub fn nerve(cat: &Arc<IndexCategory>, d: &IndexCategory) -> Result<Presheaf> {
    let slices: Vec<(IndexCategory, Vec<usize>)> = (0..cat.object_count())
        .map(|c| slice_category(cat, c))
        .collect::<Result<_>>()?;
    let functors: Vec<Vec<Functor>> = slices
        .iter()
        .map(|(s, _)| enumerate_functors(s, d))
        .collect();
    let at: Vec<FinSet> = functors
        .iter()
        .zip(&slices)
        .map(|(fs, (s, _))| FinSet::new(fs.iter().map(|f| f.label(s, d)).collect()))
        .collect::<Result<_>>()?;
    let restriction = (0..cat.arrow_count())
        .map(|fi| {
            let a = cat.arrow(fi);
            let post = slice_postcompose(cat, fi, &slices[a.src], &slices[a.dst])?;
            let table: Vec<usize> = functors[a.dst]
                .iter()
                .map(|func| {
                    let restricted = func.after(&post);
                    let lbl = restricted.label(&slices[a.src].0, d);
                    at[a.src].position(&lbl).expect("restricted functor")
                })
                .collect();
            FinMap::new(at[a.dst].clone(), at[a.src].clone(), table)
        })
        .collect::<Result<Vec<_>>>()?;
    Presheaf::new(cat.clone(), at, restriction)
}

/// The skeletal category of sets below `kappa`: objects are cardinals,
/// arrows are function tables.
fn set_category(kappa: u64) -> Result<IndexCategory> {
    let objects: Vec<Label> = (0..kappa).map(Label::Nat).collect();
    let mut arrows = Vec::new();
    let mut identities = Vec::new();
    for m in 0..kappa {
        for n in 0..kappa {
            for table in all_tables(m, n) {
                let name = fn_label(m, n, &table);
                arrows.push((name.clone(), Label::Nat(m), Label::Nat(n)));
                if m == n && table.iter().enumerate().all(|(i, &v)| i as u64 == v) {
                    identities.push((Label::Nat(m), name));
                }
            }
        }
    }
    let mut composites = Vec::new();
    for m in 0..kappa {
        for n in 0..kappa {
            for f in all_tables(m, n) {
                for p in 0..kappa {
                    for g in all_tables(n, p) {
                        let gf: Vec<u64> = f.iter().map(|&i| g[i as usize]).collect();
                        composites.push((
                            fn_label(n, p, &g),
                            fn_label(m, n, &f),
                            fn_label(m, p, &gf),
                        ));
                    }
                }
            }
        }
    }
    IndexCategory::build(objects, arrows, identities, composites)
}

/// The skeletal category of pointed sets below `kappa`: objects `(n, i)`
/// with `i < n`, arrows the point-preserving tables.
fn pointed_set_category(kappa: u64) -> Result<IndexCategory> {
    let mut objects = Vec::new();
    for n in 1..kappa {
        for i in 0..n {
            objects.push(Label::pair(Label::Nat(n), Label::Nat(i)));
        }
    }
    let mut arrows = Vec::new();
    let mut identities = Vec::new();
    let mut composites = Vec::new();
    let pointed: Vec<(u64, u64)> = objects
        .iter()
        .map(|o| {
            let (n, i) = o.as_pair().unwrap();
            (n.as_nat().unwrap(), i.as_nat().unwrap())
        })
        .collect();
    for &(m, i) in &pointed {
        for &(n, j) in &pointed {
            for table in all_tables(m, n) {
                if table[i as usize] != j {
                    continue;
                }
                let name = pointed_fn_label(m, i, n, j, &table);
                arrows.push((
                    name.clone(),
                    Label::pair(Label::Nat(m), Label::Nat(i)),
                    Label::pair(Label::Nat(n), Label::Nat(j)),
                ));
                if m == n && i == j && table.iter().enumerate().all(|(k, &v)| k as u64 == v) {
                    identities.push((Label::pair(Label::Nat(m), Label::Nat(i)), name));
                }
            }
        }
    }
    for &(m, i) in &pointed {
        for &(n, j) in &pointed {
            for f in all_tables(m, n) {
                if f[i as usize] != j {
                    continue;
                }
                for &(p, k) in &pointed {
                    for g in all_tables(n, p) {
                        if g[j as usize] != k {
                            continue;
                        }
                        let gf: Vec<u64> = f.iter().map(|&x| g[x as usize]).collect();
                        composites.push((
                            pointed_fn_label(n, j, p, k, &g),
                            pointed_fn_label(m, i, n, j, &f),
                            pointed_fn_label(m, i, p, k, &gf),
                        ));
                    }
                }
            }
        }
    }
    IndexCategory::build(objects, arrows, identities, composites)
}

fn all_tables(m: u64, n: u64) -> Vec<Vec<u64>> {
    if m == 0 {
        return vec![Vec::new()];
    }
    if n == 0 {
        return Vec::new();
    }
    let mut out = vec![Vec::new()];
    for _ in 0..m {
        let mut next = Vec::new();
        for prefix in &out {
            for v in 0..n {
                let mut t = prefix.clone();
                t.push(v);
                next.push(t);
            }
        }
        out = next;
    }
    out
}

fn fn_label(m: u64, n: u64, table: &[u64]) -> Label {
    Label::tuple([
        Label::Nat(m),
        Label::Nat(n),
        Label::tuple(table.iter().map(|&v| Label::Nat(v))),
    ])
}

fn pointed_fn_label(m: u64, i: u64, n: u64, j: u64, table: &[u64]) -> Label {
    Label::tuple([
        Label::pair(Label::Nat(m), Label::Nat(i)),
        Label::pair(Label::Nat(n), Label::Nat(j)),
        Label::tuple(table.iter().map(|&v| Label::Nat(v))),
    ])
}

/// The universe of `kappa`-small sets over the index category: the nerves
/// of the opposite pointed/unpointed skeletal set categories, with the
/// forgetful map between them.
pub struct HsUniverse {
    pub kappa: u64,
    pub v_dot: Presheaf,
    pub v: Presheaf,
    pub map: PNat,
}

pub fn hs_universe(cat: &Arc<IndexCategory>, kappa: u64) -> Result<HsUniverse> {
    if !(2..=3).contains(&kappa) {
        return Err(Error::Invalid(format!(
            "universe size {kappa} outside the supported range 2..=3"
        )));
    }
    let set_op = set_category(kappa)?.opposite()?;
    let pointed_op = pointed_set_category(kappa)?.opposite()?;
    let v = nerve(cat, &set_op)?;
    let v_dot = nerve(cat, &pointed_op)?;

    // the forgetful functor on the opposite categories
    let forget = Functor {
        ob_map: (0..pointed_op.object_count())
            .map(|oi| {
                let (n, _) = pointed_op.objects()[oi].as_pair().unwrap();
                set_op.object_position(n).expect("cardinal")
            })
            .collect(),
        arrow_map: (0..pointed_op.arrow_count())
            .map(|ai| {
                let parts = pointed_op.arrow(ai).name.as_tuple().unwrap();
                let (m, _) = parts[0].as_pair().unwrap();
                let (n, _) = parts[1].as_pair().unwrap();
                // in the opposite category the stored table still runs m → n
                let target = Label::tuple([m.clone(), n.clone(), parts[2].clone()]);
                set_op.arrow_position(&target).expect("function arrow")
            })
            .collect(),
    };
    forget.validate(&pointed_op, &set_op)?;

    let slices: Vec<(IndexCategory, Vec<usize>)> = (0..cat.object_count())
        .map(|c| slice_category(cat, c))
        .collect::<Result<_>>()?;
    let map = PNat::from_fn(v_dot.clone(), v.clone(), |c, l| {
        let func = decode_functor(&slices[c].0, &pointed_op, l)?;
        Ok(forget.after(&func).label(&slices[c].0, &set_op))
    })?;
    Ok(HsUniverse {
        kappa,
        v_dot,
        v,
        map,
    })
}

fn decode_functor(dom: &IndexCategory, cod: &IndexCategory, l: &Label) -> Result<Functor> {
    let (obs, arrs) = l.as_pair().ok_or(Error::Malformed {
        op: "decode_functor",
        expected: "functor label",
        got: l.clone(),
    })?;
    let ob_map = obs
        .as_tuple()
        .unwrap()
        .iter()
        .map(|o| cod.object_position(o).expect("object"))
        .collect();
    let arrow_map = arrs
        .as_tuple()
        .unwrap()
        .iter()
        .map(|a| cod.arrow_position(a).expect("arrow"))
        .collect();
    let f = Functor { ob_map, arrow_map };
    f.validate(dom, cod)?;
    Ok(f)
}

/// The natural isomorphism from the two-valued universe onto the sieve
/// classifier: a functor goes to the sieve of slice objects it sends to the
/// one-element cardinal. Also checks the point is carried to the maximal
/// sieve.
pub fn hs_universe_to_omega(cat: &Arc<IndexCategory>, hs: &HsUniverse) -> Result<PNat> {
    if hs.kappa != 2 {
        return Err(Error::Invalid(
            "only the two-valued universe compares to the sieve classifier".into(),
        ));
    }
    let (om, top) = omega(cat)?;
    let set_op = set_category(2)?.opposite()?;
    let one_obj = set_op.object_position(&Label::Nat(1)).expect("cardinal 1");
    let iso = PNat::from_fn(hs.v.clone(), om.clone(), |c, l| {
        let (slice, into) = slice_category(cat, c)?;
        let func = decode_functor(&slice, &set_op, l)?;
        let selected: Vec<usize> = into
            .iter()
            .enumerate()
            .filter(|(pos, _)| func.ob_map[*pos] == one_obj)
            .map(|(_, &x)| x)
            .collect();
        Ok(sieve_label_for(cat, &selected))
    })?;
    if !iso.is_iso() {
        return Err(Error::Presheaf(
            "two-valued universe is not isomorphic to the classifier".into(),
        ));
    }
    // the universe's point corresponds to the classifier's point
    let point = super::compose_nat(&iso, &hs.map)?;
    for c in 0..cat.object_count() {
        for l in hs.v_dot.at(c).iter() {
            if point.component(c).apply(l)? != top.component(c).apply(&Label::Nat(0))? {
                return Err(Error::Presheaf(
                    "universe point does not match the maximal sieve".into(),
                ));
            }
        }
    }
    Ok(iso)
}

fn sieve_label_for(cat: &IndexCategory, arrows: &[usize]) -> Label {
    Label::tuple(arrows.iter().map(|&i| cat.arrow(i).name.clone()))
}

/// Count functors and natural maps for the adjunction between the category
/// of elements and the nerve: `|Cat(∫X, D)| = |Hom(X, νD)|`.
pub fn elements_nerve_adjunction_counts(
    x: &Presheaf,
    d: &IndexCategory,
) -> Result<(usize, usize)> {
    let el = super::elements(x)?;
    let lhs = enumerate_functors(&el, d).len();
    let nu = nerve(x.cat(), d)?;
    let rhs = super::enumerate_nats(x, &nu)?.len();
    Ok((lhs, rhs))
}
