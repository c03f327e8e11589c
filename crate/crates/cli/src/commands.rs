//! Direct exploration subcommands.

use std::sync::Arc;

use serde_json::json;

use fintt_core::equiv::build_equiv;
use fintt_core::finset::{self, FinMap, FinSet};
use fintt_core::label::Label;
use fintt_core::mlalg::MLAlgebra;
use fintt_core::polynomial::{compose_signatures, PolySignature};
use fintt_core::presheaf::{hs_universe, hs_universe_to_omega, omega, IndexCategory, Presheaf};
use fintt_core::ttcheck::{elaborate, parse, Context};
use fintt_core::{Error, Result};

/// All presheaves over the category with at most `max` elements per object.
pub fn all_presheaves(cat: &Arc<IndexCategory>, max: u64) -> Vec<Presheaf> {
    let nobj = cat.object_count();
    let mut out = Vec::new();
    let mut sizes = vec![0u64; nobj];
    loop {
        let sets: Vec<FinSet> = sizes.iter().map(|&n| FinSet::canonical(n)).collect();
        let free: Vec<usize> = (0..cat.arrow_count())
            .filter(|&a| (0..nobj).all(|o| cat.identity(o) != a))
            .collect();
        let choice_space: Vec<Vec<FinMap>> = free
            .iter()
            .map(|&a| {
                let arr = cat.arrow(a);
                finset::all_maps(&sets[arr.dst], &sets[arr.src])
            })
            .collect();
        let feasible = choice_space.iter().all(|c| !c.is_empty());
        let mut picks = vec![0usize; free.len()];
        'inner: while feasible {
            let mut restriction: Vec<Option<FinMap>> = vec![None; cat.arrow_count()];
            for o in 0..nobj {
                restriction[cat.identity(o)] = Some(FinMap::identity(&sets[o]));
            }
            for (k, &a) in free.iter().enumerate() {
                restriction[a] = Some(choice_space[k][picks[k]].clone());
            }
            if let Ok(p) = Presheaf::new(
                cat.clone(),
                sets.clone(),
                restriction.into_iter().map(Option::unwrap).collect(),
            ) {
                out.push(p);
            }
            let mut k = 0;
            loop {
                if k == free.len() {
                    break 'inner;
                }
                picks[k] += 1;
                if picks[k] < choice_space[k].len() {
                    break;
                }
                picks[k] = 0;
                k += 1;
            }
            if free.is_empty() {
                break;
            }
        }
        let mut oi = 0;
        loop {
            if oi == nobj {
                return out;
            }
            sizes[oi] += 1;
            if sizes[oi] <= max {
                break;
            }
            sizes[oi] = 0;
            oi += 1;
        }
    }
}

pub fn resolve_category(spec: &str) -> Result<Arc<IndexCategory>> {
    if let Some(cat) = IndexCategory::by_name(spec) {
        return Ok(cat);
    }
    let text = std::fs::read_to_string(spec)
        .map_err(|e| Error::Invalid(format!("cannot read index category {spec:?}: {e}")))?;
    let cat: IndexCategory =
        serde_json::from_str(&text).map_err(|e| Error::Invalid(format!("index category: {e}")))?;
    Ok(Arc::new(cat))
}

/// `poly compose`: compose two canonical signatures and report sizes.
pub fn poly_compose(fibers_p: &[u64], fibers_q: &[u64], sizes: &[u64]) -> Result<serde_json::Value> {
    let p = PolySignature::from_fibers(fibers_p);
    let q = PolySignature::from_fibers(fibers_q);
    let pq = compose_signatures(&p, &q)?;
    let extensions: Vec<_> = sizes
        .iter()
        .map(|&n| {
            let x = FinSet::canonical(n);
            json!({
                "x": n,
                "composite_extension": pq.extension(&x).len(),
                "nested_extension": p.extension(&q.extension(&x)).len(),
            })
        })
        .collect();
    Ok(json!({
        "base": pq.base().len(),
        "total": pq.total().len(),
        "fibers": pq.family().fiber_sizes(),
        "extensions": extensions,
    }))
}

/// `presheaf omega`: sieve counts and the sieves themselves.
pub fn presheaf_omega(cat: &Arc<IndexCategory>) -> Result<serde_json::Value> {
    let (om, top) = omega(cat)?;
    let objects: Vec<_> = (0..cat.object_count())
        .map(|c| {
            json!({
                "object": cat.objects()[c].to_string(),
                "sieves": om.at(c).iter().map(|l| l.to_string()).collect::<Vec<_>>(),
                "top": top.component(c).cod().label(top.component(c).apply_idx(0)).to_string(),
            })
        })
        .collect();
    Ok(json!({
        "sizes": om.sizes(),
        "objects": objects,
    }))
}

/// `universe nerve`: construct the universe and compare at size two.
pub fn universe_nerve(cat: &Arc<IndexCategory>, kappa: u64) -> Result<serde_json::Value> {
    let hs = hs_universe(cat, kappa)?;
    let omega_iso = if kappa == 2 {
        let iso = hs_universe_to_omega(cat, &hs)?;
        Some(iso.is_iso())
    } else {
        None
    };
    Ok(json!({
        "kappa": kappa,
        "universe_sizes": hs.v.sizes(),
        "pointed_sizes": hs.v_dot.sizes(),
        "isomorphic_to_omega": omega_iso,
    }))
}

/// `equiv fibers`: fiber sizes of the equivalence classifier.
pub fn equiv_fibers(bound: u64, max_n: u64) -> Result<serde_json::Value> {
    let alg = MLAlgebra::nat(bound)?;
    let types: Vec<Label> = (0..=max_n).map(Label::Nat).collect();
    let ec = build_equiv(&alg, &types)?;
    let mut rows = Vec::new();
    for m in 0..=max_n {
        let row: Vec<usize> = (0..=max_n)
            .map(|n| ec.fiber_size(&Label::Nat(m), &Label::Nat(n)).unwrap())
            .collect();
        rows.push(row);
    }
    Ok(json!({
        "max_n": max_n,
        "fiber_sizes": rows,
        "total": ec.family.total().len(),
    }))
}

/// `tt eval`: cardinality or the full environment table of an expression.
pub fn tt_eval(source: &str, bound: u64, table: bool) -> Result<serde_json::Value> {
    let e = parse(source)?;
    let alg = MLAlgebra::nat(bound)?;
    let m = elaborate(&alg, &Context::empty(), &e)?;
    if table {
        let rows: Vec<_> = m
            .dom()
            .iter()
            .map(|env| {
                json!({
                    "environment": env.to_string(),
                    "cardinal": m.apply(env).unwrap().to_string(),
                })
            })
            .collect();
        Ok(json!({ "expression": e.to_string(), "table": rows }))
    } else {
        let value = m.cod().label(m.apply_idx(0));
        Ok(json!({
            "expression": e.to_string(),
            "cardinality": value.as_nat(),
        }))
    }
}
