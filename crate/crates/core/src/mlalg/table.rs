//! Fully tabulated algebras.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::finset::{FinMap, Family};

/// Equality structure given by explicit tables: the reflexivity map, the
/// equality former on same-type pairs, and the diagonal into those pairs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TableEq {
    pub refl: FinMap,
    pub eq: FinMap,
    pub delta: FinMap,
}

/// An algebra whose carriers are finite and whose structure maps are stored
/// as tables: the typing family plus the three squares' left/top/bottom data.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TableAlgebra {
    /// typing map `t : U̇ → U`
    pub t: Family,
    /// left leg of the unit square (context over context)
    pub unit_left: Family,
    pub star: FinMap,
    pub one: FinMap,
    /// left leg of the sum square (composed total over composed base)
    pub sigma_left: Family,
    pub sigma_top: FinMap,
    pub sigma_bottom: FinMap,
    /// left leg of the product square (term sections over type sections)
    pub pi_left: Family,
    pub pi_top: FinMap,
    pub pi_bottom: FinMap,
    pub eq: Option<TableEq>,
}

impl TableAlgebra {
    pub fn validate(&self) -> Result<()> {
        let u = self.t.base();
        let udot = self.t.total();
        let check = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::boundary("TableAlgebra::validate", what.to_string()))
            }
        };
        check(self.star.dom() == self.unit_left.total(), "star domain")?;
        check(self.star.cod() == udot, "star codomain")?;
        check(self.one.dom() == self.unit_left.base(), "unit former domain")?;
        check(self.one.cod() == u, "unit former codomain")?;
        check(self.sigma_top.dom() == self.sigma_left.total(), "sigma domain")?;
        check(self.sigma_top.cod() == udot, "sigma codomain")?;
        check(
            self.sigma_bottom.dom() == self.sigma_left.base(),
            "Sigma domain",
        )?;
        check(self.sigma_bottom.cod() == u, "Sigma codomain")?;
        check(self.pi_top.dom() == self.pi_left.total(), "lambda domain")?;
        check(self.pi_top.cod() == udot, "lambda codomain")?;
        check(self.pi_bottom.dom() == self.pi_left.base(), "Pi domain")?;
        check(self.pi_bottom.cod() == u, "Pi codomain")?;
        if let Some(eq) = &self.eq {
            check(eq.refl.dom() == eq.delta.dom(), "refl domain")?;
            check(eq.refl.cod() == udot, "refl codomain")?;
            check(eq.eq.dom() == eq.delta.cod(), "Eq domain")?;
            check(eq.eq.cod() == u, "Eq codomain")?;
        }
        Ok(())
    }
}
