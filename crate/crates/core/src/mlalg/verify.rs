//! Fiberwise verification of the structure squares.
//!
//! A commuting square of finite maps is a pullback exactly when, over every
//! base element, the top map restricts to a bijection between the left fiber
//! and the right fiber over the image. Each square is checked over every
//! base element of the requested region; a failure reports the first bad
//! fiber as a witness.

use serde::Serialize;

use crate::error::Result;
use crate::label::Label;

use super::{MLAlgebra, VerifyRegion};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum CheckStatus {
    Pass,
    Fail { witness: Label, detail: String },
    NotApplicable { reason: String },
}

impl CheckStatus {
    pub fn is_pass(&self) -> bool {
        matches!(self, CheckStatus::Pass)
    }

    pub fn is_failure(&self) -> bool {
        matches!(self, CheckStatus::Fail { .. })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SquareReport {
    pub name: &'static str,
    pub status: CheckStatus,
    pub fibers_checked: usize,
    pub elements_enumerated: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct MlReport {
    pub squares: Vec<SquareReport>,
}

impl MlReport {
    pub fn passed(&self) -> bool {
        self.squares.iter().all(|s| s.status.is_pass())
    }
}

/// Check one fibered square given the base elements, their left fibers, the
/// top map, and the bottom map; the right fiber is the algebra's typing map.
fn check_square(
    alg: &MLAlgebra,
    name: &'static str,
    bases: &[Label],
    left_fibers: &[Vec<Label>],
    top: impl Fn(&Label) -> Result<Label>,
    bottom: impl Fn(&Label) -> Result<Label>,
) -> Result<SquareReport> {
    let mut elements = 0usize;
    for (base, fiber) in bases.iter().zip(left_fibers) {
        let target = bottom(base)?;
        let expected = alg.t_fiber(&target)?;
        if fiber.len() != expected.len() {
            return Ok(SquareReport {
                name,
                status: CheckStatus::Fail {
                    witness: base.clone(),
                    detail: format!(
                        "fiber has {} elements but the fiber over {} has {}",
                        fiber.len(),
                        target,
                        expected.len()
                    ),
                },
                fibers_checked: bases.len(),
                elements_enumerated: elements,
            });
        }
        let mut seen = vec![false; expected.len()];
        for e in fiber {
            elements += 1;
            let image = top(e)?;
            let pos = expected.iter().position(|x| x == &image);
            let Some(pos) = pos else {
                return Ok(SquareReport {
                    name,
                    status: CheckStatus::Fail {
                        witness: base.clone(),
                        detail: format!("square does not commute at {e}: image {image} is not over {target}"),
                    },
                    fibers_checked: bases.len(),
                    elements_enumerated: elements,
                });
            };
            if std::mem::replace(&mut seen[pos], true) {
                return Ok(SquareReport {
                    name,
                    status: CheckStatus::Fail {
                        witness: base.clone(),
                        detail: format!("two fiber elements share the image {image}"),
                    },
                    fibers_checked: bases.len(),
                    elements_enumerated: elements,
                });
            }
        }
    }
    Ok(SquareReport {
        name,
        status: CheckStatus::Pass,
        fibers_checked: bases.len(),
        elements_enumerated: elements,
    })
}

/// Verify the unit, sum, and product squares fiberwise over the region.
/// Failures land in the report; genuine engine errors (malformed labels,
/// out-of-bound structure maps) propagate as errors.
pub fn verify_ml_algebra(alg: &MLAlgebra, region: &VerifyRegion) -> Result<MlReport> {
    let mut squares = Vec::with_capacity(3);

    let (unit_left, star, one) = alg.unit_square_data()?;
    let unit_bases = unit_left.base().labels().to_vec();
    let unit_fibers: Result<Vec<Vec<Label>>> = unit_bases
        .iter()
        .map(|b| unit_left.fiber_labels(b))
        .collect();
    squares.push(check_square(
        alg,
        "unit",
        &unit_bases,
        &unit_fibers?,
        |e| star.apply(e).cloned(),
        |b| one.apply(b).cloned(),
    )?);

    let (s_bases, s_fibers) = alg.sigma_square_region(region)?;
    squares.push(check_square(
        alg,
        "sigma",
        &s_bases,
        &s_fibers,
        |e| alg.sigma_total(e),
        |b| alg.sigma_base(b),
    )?);

    let (p_bases, p_fibers) = alg.pi_square_region(region)?;
    squares.push(check_square(
        alg,
        "pi",
        &p_bases,
        &p_fibers,
        |e| alg.lambda(e),
        |b| alg.pi_base(b),
    )?);

    Ok(MlReport { squares })
}

/// Verify the equality square fiberwise over the region.
pub fn eq_structure_check(alg: &MLAlgebra, region: &VerifyRegion) -> Result<SquareReport> {
    let (bases, fibers) = alg.eq_square_region(region)?;
    check_square(
        alg,
        "eq",
        &bases,
        &fibers,
        |e| alg.refl(e),
        |b| alg.eq_base(b),
    )
}
