//! Scenario files: a target plus a list of named checks with bounds.
//!
//! The schema ships in `schemas/scenario.schema.json`. Checks run in
//! declaration order and report in that order; a failing check does not stop
//! the rest.

use std::sync::Arc;

use serde::Deserialize;

use fintt_core::equiv::{
    build_equiv, lift_equivalence, lift_round_trip, reclassify_equivalence, typeiso_witness,
    TypeIsoLaw,
};
use fintt_core::finset::{self, FinMap, FinSet};
use fintt_core::label::Label;
use fintt_core::mlalg::{
    comprehend, eq_structure_check, id_comparison, verify_ml_algebra, CheckStatus, MLAlgebra,
    TableAlgebra, VerifyRegion,
};
use fintt_core::polynomial::{compose_extension_iso, compose_signatures, PolySignature};
use fintt_core::presheaf::{
    classify_subobject, clan_model, compose_signatures_presheaf,
    elements_nerve_adjunction_counts, enumerate_nats, enumerate_subobjects, hs_universe,
    hs_universe_to_omega, is_representable, omega, omega_algebra, subobject_from_classifier,
    IndexCategory,
};
use fintt_core::sample;
use fintt_core::ttcheck::{cardinality, elaborate, parse, Context};
use fintt_core::{Error, Result};

use crate::report::{CheckResult, Report};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub target: Target,
    #[serde(default)]
    pub seed: Option<u64>,
    pub checks: Vec<CheckSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Target {
    /// the finite-cardinal algebra at a carrier bound
    Nat { bound: u64 },
    /// the sieve-classifier algebra over an index category
    Omega { index_category: CategoryRef },
    /// explicit map tables
    Table { algebra: Box<TableAlgebra> },
    /// a bare index category, for presheaf-level checks
    Category { index_category: CategoryRef },
    /// a pair of polynomial signatures
    SignaturePair {
        p: PolySignature,
        q: PolySignature,
    },
    /// a list of surface-language expressions
    Expressions { items: Vec<String> },
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum CategoryRef {
    Named(String),
    Inline(IndexCategory),
}

impl CategoryRef {
    pub fn resolve(&self) -> Result<Arc<IndexCategory>> {
        match self {
            CategoryRef::Named(name) => IndexCategory::by_name(name)
                .ok_or_else(|| Error::Invalid(format!("unknown index category {name:?}"))),
            CategoryRef::Inline(cat) => Ok(Arc::new(cat.clone())),
        }
    }
}

fn default_len() -> u64 {
    3
}

#[derive(Debug, Deserialize)]
#[serde(tag = "check", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CheckSpec {
    /// the three structure squares, fiberwise over the region
    MlSquares {
        #[serde(default = "default_len")]
        max_len: u64,
        #[serde(default = "default_len")]
        max_entry: u64,
    },
    /// the equality square over the region
    EqSquare {
        #[serde(default = "default_len")]
        max_len: u64,
        #[serde(default = "default_len")]
        max_entry: u64,
    },
    /// the identity comparison map and its section
    IdComparison {
        #[serde(default = "default_len")]
        max_len: u64,
        #[serde(default = "default_len")]
        max_entry: u64,
    },
    /// composite-signature extensions against nested extensions
    PolyCompose {
        #[serde(default)]
        sizes: Option<Vec<u64>>,
        #[serde(default)]
        samples: Option<u64>,
    },
    /// list extension count and flattening closure
    FreeMonoid {
        #[serde(default = "default_len")]
        max_len: u64,
        letters: u64,
    },
    /// subobjects against classifier maps, exhaustively
    SubClassification { max_elems: u64 },
    /// the classifier algebra passes its squares; composed point is monic
    OmegaAlgebra,
    /// the universe of small sets; at size two, compared with the classifier
    HsUniverse { kappa: u64 },
    /// hom-set counts for the elements/nerve adjunction on tiny data
    NerveAdjunction,
    /// representability of a clan model over the category
    Representability { display: Vec<Label> },
    /// equivalence fiber sizes and the groupoid operations
    EquivFibers { max_n: u64 },
    /// seeded type-isomorphism witnesses
    Typeisos {
        instances: u64,
        #[serde(default = "default_len")]
        max_fiber: u64,
    },
    /// seeded classifier-invariance round trips
    ClassifierInvariance { instances: u64 },
    /// golden cardinalities for the expression list
    TtGolden { expected: Vec<u64> },
    /// elaboration tables for the expression list (smoke check)
    TtEval,
}

pub fn load_scenario(text: &str) -> Result<Scenario> {
    serde_json::from_str(text).map_err(|e| Error::Invalid(format!("scenario schema: {e}")))
}

pub fn run_scenario(scenario: &Scenario, seed_override: Option<u64>) -> Result<Report> {
    let start = std::time::Instant::now();
    let seed = seed_override.or(scenario.seed);
    let mut results = Vec::with_capacity(scenario.checks.len());
    for (i, spec) in scenario.checks.iter().enumerate() {
        let check_seed = seed.unwrap_or(0).wrapping_add(i as u64);
        results.push(run_check(&scenario.target, spec, check_seed)?);
    }
    let mut report = Report::new(scenario.name.clone(), seed, results);
    report.duration_ms = start.elapsed().as_millis();
    Ok(report)
}

fn algebra_for(target: &Target) -> Result<(MLAlgebra, Option<VerifyRegion>)> {
    match target {
        Target::Nat { bound } => Ok((MLAlgebra::nat(*bound)?, None)),
        Target::Omega { index_category } => {
            let alg = omega_algebra(&index_category.resolve()?)?;
            let region = alg.full_region()?;
            Ok((alg, Some(region)))
        }
        Target::Table { algebra } => {
            let alg = MLAlgebra::from_table((**algebra).clone())?;
            let region = alg.full_region()?;
            Ok((alg, Some(region)))
        }
        _ => Err(Error::Invalid(
            "this check needs an algebra target".into(),
        )),
    }
}

fn category_for(target: &Target) -> Result<Arc<IndexCategory>> {
    match target {
        Target::Category { index_category } | Target::Omega { index_category } => {
            index_category.resolve()
        }
        _ => Err(Error::Invalid(
            "this check needs an index-category target".into(),
        )),
    }
}

fn expressions_for(target: &Target) -> Result<Vec<String>> {
    match target {
        Target::Expressions { items } => Ok(items.clone()),
        _ => Err(Error::Invalid(
            "this check needs an expression-list target".into(),
        )),
    }
}

fn square_result(name: &str, rep: &fintt_core::mlalg::SquareReport) -> CheckResult {
    let base = match &rep.status {
        CheckStatus::Pass => CheckResult::pass(name),
        CheckStatus::Fail { witness, detail } => {
            CheckResult::fail(name, Some(witness.to_string()), detail.clone())
        }
        CheckStatus::NotApplicable { reason } => CheckResult::not_applicable(name, reason.clone()),
    };
    base.counter("fibers_checked", rep.fibers_checked as u64)
        .counter("elements_enumerated", rep.elements_enumerated as u64)
}

fn run_check(target: &Target, spec: &CheckSpec, seed: u64) -> Result<CheckResult> {
    match spec {
        CheckSpec::MlSquares { max_len, max_entry } => {
            let (alg, full) = algebra_for(target)?;
            let region = full.unwrap_or_else(|| VerifyRegion::nat_lists(*max_len, *max_entry));
            let rep = verify_ml_algebra(&alg, &region)?;
            let mut fibers = 0u64;
            let mut elements = 0u64;
            for sq in &rep.squares {
                fibers += sq.fibers_checked as u64;
                elements += sq.elements_enumerated as u64;
                if let CheckStatus::Fail { witness, detail } = &sq.status {
                    return Ok(CheckResult::fail(
                        "ml-squares",
                        Some(witness.to_string()),
                        format!("{} square: {detail}", sq.name),
                    )
                    .counter("fibers_checked", fibers));
                }
            }
            Ok(CheckResult::pass("ml-squares")
                .counter("fibers_checked", fibers)
                .counter("elements_enumerated", elements))
        }
        CheckSpec::EqSquare { max_len, max_entry } => {
            let (alg, full) = algebra_for(target)?;
            let region = full.unwrap_or_else(|| VerifyRegion::nat_lists(*max_len, *max_entry));
            let rep = eq_structure_check(&alg, &region)?;
            Ok(square_result("eq-square", &rep))
        }
        CheckSpec::IdComparison { max_len, max_entry } => {
            let (alg, full) = algebra_for(target)?;
            let region = full.unwrap_or_else(|| VerifyRegion::nat_lists(*max_len, *max_entry));
            let rep = id_comparison(&alg, &region)?;
            if !rep.comparison_bijective {
                return Ok(CheckResult::fail(
                    "id-comparison",
                    None,
                    "comparison map is not a bijection".into(),
                ));
            }
            if !rep.section_law {
                return Ok(CheckResult::fail(
                    "id-comparison",
                    None,
                    "eliminator is not a section of the comparison map".into(),
                ));
            }
            Ok(CheckResult::pass("id-comparison")
                .counter("pullback_elements", rep.comparison.dom().len() as u64))
        }
        CheckSpec::PolyCompose { sizes, samples } => {
            let sizes = sizes.clone().unwrap_or_else(|| vec![0, 1, 2, 3]);
            let xs: Vec<FinSet> = sizes.iter().map(|&n| FinSet::canonical(n)).collect();
            let mut pairs = Vec::new();
            match target {
                Target::SignaturePair { p, q } => pairs.push((p.clone(), q.clone())),
                _ => {
                    let n = samples.unwrap_or(20);
                    let mut rng = sample::rng(seed);
                    while (pairs.len() as u64) < n {
                        let p = sample::signature(&mut rng, 4, 4);
                        let q = sample::signature(&mut rng, 4, 4);
                        let pq = compose_signatures(&p, &q)?;
                        let predicted: u64 = pq
                            .family()
                            .fiber_sizes()
                            .iter()
                            .map(|&k| 3u64.pow(k as u32))
                            .sum();
                        if predicted <= 2000 {
                            pairs.push((p, q));
                        }
                    }
                }
            }
            let mut elements = 0u64;
            for (p, q) in &pairs {
                let pq = compose_signatures(p, q)?;
                for x in &xs {
                    let iso = compose_extension_iso(p, q, &pq, x)?;
                    elements += iso.dom().len() as u64;
                    if !iso.is_bijective() {
                        return Ok(CheckResult::fail(
                            "poly-compose",
                            None,
                            format!("extension bijection fails at |X| = {}", x.len()),
                        ));
                    }
                }
                // naturality across all maps between the listed sizes
                for x in &xs {
                    for y in &xs {
                        for h in finset::all_maps(x, y) {
                            let iso_x = compose_extension_iso(p, q, &pq, x)?;
                            let iso_y = compose_extension_iso(p, q, &pq, y)?;
                            let lhs = finset::compose(&iso_y, &pq.extension_on_map(&h)?)?;
                            let inner = q.extension_on_map(&h)?;
                            let rhs = finset::compose(&p.extension_on_map(&inner)?, &iso_x)?;
                            if lhs != rhs {
                                return Ok(CheckResult::fail(
                                    "poly-compose",
                                    None,
                                    "naturality square broken".into(),
                                ));
                            }
                        }
                    }
                }
            }
            Ok(CheckResult::pass("poly-compose")
                .counter("pairs", pairs.len() as u64)
                .counter("elements_enumerated", elements))
        }
        CheckSpec::FreeMonoid { max_len, letters } => {
            let (alg, _) = algebra_for(target)?;
            let types: Vec<Label> = (0..=*max_len).map(Label::Nat).collect();
            let sig = alg.t_truncation(&types)?;
            let ext = sig.extension(&FinSet::canonical(*letters));
            let expected: u64 = (0..=*max_len).map(|k| letters.pow(k as u32)).sum();
            if ext.len() as u64 != expected {
                return Ok(CheckResult::fail(
                    "free-monoid",
                    None,
                    format!("extension has {} elements, expected {expected}", ext.len()),
                ));
            }
            Ok(CheckResult::pass("free-monoid").counter("lists", ext.len() as u64))
        }
        CheckSpec::SubClassification { max_elems } => {
            let cat = category_for(target)?;
            let (om, _) = omega(&cat)?;
            let mut presheaves_checked = 0u64;
            let mut subobjects = 0u64;
            for x in crate::commands::all_presheaves(&cat, *max_elems) {
                presheaves_checked += 1;
                let subs = enumerate_subobjects(&x)?;
                let maps = enumerate_nats(&x, &om)?;
                if subs.len() != maps.len() {
                    return Ok(CheckResult::fail(
                        "sub-classification",
                        None,
                        format!(
                            "{} subobjects but {} classifier maps at sizes {:?}",
                            subs.len(),
                            maps.len(),
                            x.sizes()
                        ),
                    ));
                }
                for s in &subs {
                    subobjects += 1;
                    let chi = classify_subobject(&x, s)?;
                    if &subobject_from_classifier(&chi)? != s {
                        return Ok(CheckResult::fail(
                            "sub-classification",
                            None,
                            "classification round trip broken".into(),
                        ));
                    }
                }
            }
            Ok(CheckResult::pass("sub-classification")
                .counter("presheaves", presheaves_checked)
                .counter("subobjects", subobjects))
        }
        CheckSpec::OmegaAlgebra => {
            let cat = category_for(target)?;
            let (_, top) = omega(&cat)?;
            let composite = compose_signatures_presheaf(&top, &top)?;
            if !composite.signature.is_monic() {
                return Ok(CheckResult::fail(
                    "omega-algebra",
                    None,
                    "composed point signature is not monic".into(),
                ));
            }
            let alg = omega_algebra(&cat)?;
            let rep = verify_ml_algebra(&alg, &alg.full_region()?)?;
            for sq in &rep.squares {
                if let CheckStatus::Fail { witness, detail } = &sq.status {
                    return Ok(CheckResult::fail(
                        "omega-algebra",
                        Some(witness.to_string()),
                        format!("{} square: {detail}", sq.name),
                    ));
                }
            }
            Ok(CheckResult::pass("omega-algebra")
                .counter("universe_size", alg.u_set().len() as u64))
        }
        CheckSpec::HsUniverse { kappa } => {
            let cat = category_for(target)?;
            let hs = hs_universe(&cat, *kappa)?;
            let sizes: u64 = hs.v.total_size() as u64;
            if *kappa == 2 {
                let iso = hs_universe_to_omega(&cat, &hs)?;
                if !iso.is_iso() {
                    return Ok(CheckResult::fail(
                        "hs-universe",
                        None,
                        "two-valued universe is not isomorphic to the classifier".into(),
                    ));
                }
                Ok(CheckResult::pass("hs-universe").counter("universe_elements", sizes))
            } else {
                // the product former needs closure the finite sizes lack
                Ok(CheckResult::not_applicable(
                    "hs-universe",
                    format!(
                        "size-{kappa} universe constructed ({sizes} elements); \
                         structure squares need closure under the formers and are not asserted"
                    ),
                ))
            }
        }
        CheckSpec::NerveAdjunction => {
            let cat = category_for(target)?;
            let x = fintt_core::presheaf::Presheaf::terminal(cat.clone());
            let mut checked = 0u64;
            for d in [IndexCategory::terminal(), IndexCategory::arrow_category()] {
                let (lhs, rhs) = elements_nerve_adjunction_counts(&x, &d)?;
                checked += 1;
                if lhs != rhs {
                    return Ok(CheckResult::fail(
                        "nerve-adjunction",
                        None,
                        format!("functor count {lhs} differs from map count {rhs}"),
                    ));
                }
            }
            Ok(CheckResult::pass("nerve-adjunction").counter("targets", checked))
        }
        CheckSpec::Representability { display } => {
            let cat = category_for(target)?;
            let t = clan_model(&cat, display)?;
            let rep = is_representable(&t)?;
            if !rep.representable {
                return Ok(CheckResult::fail(
                    "representability",
                    rep.failure.map(|l| l.to_string()),
                    "a pullback is not representable".into(),
                ));
            }
            Ok(CheckResult::pass("representability")
                .counter("elements_checked", rep.choices.len() as u64))
        }
        CheckSpec::EquivFibers { max_n } => {
            let (alg, _) = algebra_for(target)?;
            let types: Vec<Label> = (0..=*max_n).map(Label::Nat).collect();
            let ec = build_equiv(&alg, &types)?;
            let mut total = 0u64;
            for m in 0..=*max_n {
                for n in 0..=*max_n {
                    let size = ec.fiber_size(&Label::Nat(m), &Label::Nat(n))? as u64;
                    total += size;
                    let expected = if m == n { factorial(m) } else { 0 };
                    if size != expected {
                        return Ok(CheckResult::fail(
                            "equiv-fibers",
                            Some(format!("({m},{n})")),
                            format!("fiber has {size} elements, expected {expected}"),
                        ));
                    }
                }
            }
            Ok(CheckResult::pass("equiv-fibers").counter("equivalences", total))
        }
        CheckSpec::Typeisos {
            instances,
            max_fiber,
        } => {
            let (alg, _) = algebra_for(target)?;
            let mut rng = sample::rng(seed);
            let mut checked = 0u64;
            while checked < *instances {
                let inst = sample::nested_instance(&mut rng, 2, *max_fiber);
                // stay within the carrier: flattened products and sums per
                // base point must be expressible, and the section spaces
                // enumerable
                let cap = alg.bound().map(|b| b as usize).unwrap_or(20_000).min(20_000);
                let expressible = (0..inst.a.base().len()).all(|gi| {
                    let fibers: Vec<usize> = inst
                        .a
                        .fiber_indices(gi)
                        .iter()
                        .flat_map(|&ai| inst.b.fiber_indices(ai))
                        .map(|&bi| inst.c.fiber_size(bi))
                        .collect();
                    let product: usize = fibers.iter().map(|&k| k.max(1)).product();
                    let sum: usize = fibers.iter().sum();
                    product < cap && sum < cap
                });
                if !expressible {
                    continue;
                }
                checked += 1;
                for law in TypeIsoLaw::ALL {
                    let w = typeiso_witness(law, &alg, &inst)?;
                    w.verify()?;
                }
            }
            Ok(CheckResult::pass("typeisos").counter("instances", checked))
        }
        CheckSpec::ClassifierInvariance { instances } => {
            let (alg, _) = algebra_for(target)?;
            let types: Vec<Label> = (0..=4).map(Label::Nat).collect();
            let ec = build_equiv(&alg, &types)?;
            let mut rng = sample::rng(seed);
            for _ in 0..*instances {
                let x = sample::finset(&mut rng, 3);
                let small = FinSet::new(types.clone())?;
                let Some(m) = sample::finmap(&mut rng, &x, &small) else {
                    continue;
                };
                let alpha = FinMap::try_from_fn(x.clone(), alg.u_set(), |l| m.apply(l).cloned())?;
                let a = comprehend(&alg, &alpha)?.family;
                let e = FinMap::try_from_fn(a.total().clone(), a.total().clone(), |l| {
                    let (pt, t) = l.as_pair().expect("point");
                    let (n, i) = t.as_pair().expect("term");
                    let n_val = n.as_nat().unwrap();
                    Ok(Label::pair(
                        pt.clone(),
                        Label::pair(n.clone(), Label::Nat((i.as_nat().unwrap() + 1) % n_val)),
                    ))
                })?;
                let lift = lift_equivalence(&alg, &ec, &alpha, &alpha, &e)?;
                let relift =
                    reclassify_equivalence(&alg, &ec, &lift, &alpha, &alpha, &alpha, &alpha)?;
                if relift != lift || !lift_round_trip(&alg, &ec, &alpha, &relift, &e)? {
                    return Ok(CheckResult::fail(
                        "classifier-invariance",
                        None,
                        "reclassification changed the underlying table".into(),
                    ));
                }
            }
            Ok(CheckResult::pass("classifier-invariance").counter("instances", *instances))
        }
        CheckSpec::TtGolden { expected } => {
            let items = expressions_for(target)?;
            if items.len() != expected.len() {
                return Err(Error::Invalid(
                    "tt-golden needs one expected value per expression".into(),
                ));
            }
            let alg = MLAlgebra::nat(1 << 16)?;
            for (src, want) in items.iter().zip(expected) {
                let e = parse(src)?;
                let got = cardinality(&alg, &e)?;
                if got != *want {
                    return Ok(CheckResult::fail(
                        "tt-golden",
                        Some(src.clone()),
                        format!("cardinality {got}, expected {want}"),
                    ));
                }
            }
            Ok(CheckResult::pass("tt-golden").counter("expressions", items.len() as u64))
        }
        CheckSpec::TtEval => {
            let items = expressions_for(target)?;
            let alg = MLAlgebra::nat(1 << 16)?;
            for src in &items {
                let e = parse(src)?;
                elaborate(&alg, &Context::empty(), &e)?;
            }
            Ok(CheckResult::pass("tt-eval").counter("expressions", items.len() as u64))
        }
    }
}

fn factorial(n: u64) -> u64 {
    (1..=n).product()
}
