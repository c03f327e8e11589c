//! Classified families and term-level product operations.

use crate::error::{Error, Result};
use crate::finset::{pullback, FinMap, Family, Square};
use crate::label::Label;

use super::{cartesian, MLAlgebra};

/// A family classified by a map into the type carrier: the canonical
/// pullback of the typing map along the classifier, with its cartesian
/// square.
#[derive(Clone, Debug)]
pub struct Comprehension {
    pub family: Family,
    pub square: Square,
}

/// Extend a context along a classifier `α : X → U`: the canonical pullback
/// of the typing map along `α`. Functorial in maps over the carrier.
pub fn comprehend(alg: &MLAlgebra, alpha: &FinMap) -> Result<Comprehension> {
    let t = alg.t_family();
    if alpha.cod() != t.base() {
        return Err(Error::boundary(
            "comprehend",
            "classifier codomain is not the type carrier",
        ));
    }
    let (_, p1, p2) = pullback(alpha, t.proj())?;
    let square = Square::new(p2, alpha.clone(), p1.clone(), t.proj().clone())?;
    Ok(Comprehension {
        family: Family::new(p1),
        square,
    })
}

fn check_typing(alg: &MLAlgebra, term: &Label, expected: &Label, what: &str) -> Result<()> {
    let actual = alg.type_of(term)?;
    if &actual != expected {
        return Err(Error::TypeMismatch(format!(
            "{what}: term {term} has type {actual}, expected {expected}"
        )));
    }
    Ok(())
}

/// Abstraction: tuple a term `b` over the extended context `X.A` into a
/// product-typed term over `X`.
///
/// `alpha : X → U` classifies the domain family, `beta : X.A → U` the
/// codomain family over the canonical extension, and `body : X.A → U̇` must
/// be typed by `beta`.
pub fn pi_lambda(
    alg: &MLAlgebra,
    alpha: &FinMap,
    beta: &FinMap,
    body: &FinMap,
) -> Result<FinMap> {
    let comp = comprehend(alg, alpha)?;
    let xa = comp.family.total();
    if beta.dom() != xa {
        return Err(Error::boundary(
            "pi_lambda",
            "codomain family is not over the canonical context extension",
        ));
    }
    if body.dom() != xa {
        return Err(Error::boundary("pi_lambda", "term is not over the extension"));
    }
    for e in xa.iter() {
        check_typing(alg, body.apply(e)?, beta.apply(e)?, "pi_lambda")?;
    }
    FinMap::try_from_fn(alpha.dom().clone(), alg.udot_set(), |x| {
        let xi = alpha.dom().position(x).unwrap();
        let values: Vec<Label> = comp
            .family
            .fiber_indices(xi)
            .iter()
            .map(|&e| body.apply(xa.label(e)).unwrap().clone())
            .collect();
        alg.lambda(&Label::pair(alpha.apply(x)?.clone(), Label::tuple(values)))
    })
}

/// Application: evaluate a product-typed term over `X` at every point of the
/// extended context `X.A`, by inverting the fiberwise abstraction bijection.
pub fn pi_apply(alg: &MLAlgebra, alpha: &FinMap, beta: &FinMap, fun: &FinMap) -> Result<FinMap> {
    let comp = comprehend(alg, alpha)?;
    let xa = comp.family.total();
    if beta.dom() != xa {
        return Err(Error::boundary(
            "pi_apply",
            "codomain family is not over the canonical context extension",
        ));
    }
    if fun.dom() != alpha.dom() {
        return Err(Error::boundary("pi_apply", "term is not over the context"));
    }

    // per context point: the section whose abstraction is the given term
    let mut sections: Vec<Vec<Label>> = Vec::with_capacity(alpha.dom().len());
    for (xi, x) in alpha.dom().iter().enumerate() {
        let fiber = comp.family.fiber_indices(xi);
        let types: Vec<Label> = fiber
            .iter()
            .map(|&e| beta.apply(xa.label(e)).unwrap().clone())
            .collect();
        let pi_ty = alg.pi_base(&Label::pair(
            alpha.apply(x)?.clone(),
            Label::tuple(types.clone()),
        ))?;
        check_typing(alg, fun.apply(x)?, &pi_ty, "pi_apply")?;
        let choices: Result<Vec<Vec<Label>>> = types.iter().map(|ty| alg.t_fiber(ty)).collect();
        let target = fun.apply(x)?;
        let found = cartesian(&choices?).into_iter().find(|section| {
            alg.lambda(&Label::pair(
                alpha.apply(x).unwrap().clone(),
                Label::tuple(section.clone()),
            ))
            .map(|l| &l == target)
            .unwrap_or(false)
        });
        let Some(section) = found else {
            return Err(Error::TypeMismatch(format!(
                "pi_apply: no section abstracts to {target} over {x}"
            )));
        };
        sections.push(section);
    }

    FinMap::try_from_fn(xa.clone(), alg.udot_set(), |pt| {
        let (x, _) = pt.as_pair().expect("extension point");
        let xi = alpha.dom().require(x, "context")?;
        let pos = comp
            .family
            .fiber_indices(xi)
            .iter()
            .position(|&e| xa.label(e) == pt)
            .expect("point of its own fiber");
        Ok(sections[xi][pos].clone())
    })
}
