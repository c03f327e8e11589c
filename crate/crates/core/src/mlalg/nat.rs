//! The finite-cardinal algebra.
//!
//! `U` is the set of naturals below the carrier bound, a term of type `n` is
//! a pair `(n, i)` with `i < n`. The sum former adds, with the pairing map
//! sending `((list, i), j)` to the running offset `B₀+..+Bᵢ₋₁+j`; the product
//! former multiplies, with abstraction encoding a section tuple as a
//! mixed-radix numeral. Both encodings are fiberwise bijections, which is
//! what the square checks verify.

use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::finset::{FinMap, FinSet, Family};
use crate::label::Label;

#[derive(Clone, Debug)]
pub(crate) struct NatRules {
    bound: u64,
    u_cache: Arc<OnceLock<FinSet>>,
    udot_cache: Arc<OnceLock<FinSet>>,
}

fn nat_of(l: &Label, op: &'static str) -> Result<u64> {
    l.as_nat().ok_or(Error::Malformed {
        op,
        expected: "natural number label",
        got: l.clone(),
    })
}

/// Decode a term `(n, i)`.
fn term_of(l: &Label, op: &'static str) -> Result<(u64, u64)> {
    let (n, i) = l.as_pair().ok_or(Error::Malformed {
        op,
        expected: "(type, index) term",
        got: l.clone(),
    })?;
    Ok((nat_of(n, op)?, nat_of(i, op)?))
}

/// Decode an extension element `(A, ⟨B₀..⟩)` with numeric entries.
fn list_of(l: &Label, op: &'static str) -> Result<(u64, Vec<u64>)> {
    let (a, tup) = l.as_pair().ok_or(Error::Malformed {
        op,
        expected: "(length, ⟨entries⟩)",
        got: l.clone(),
    })?;
    let n = nat_of(a, op)?;
    let entries = tup.as_tuple().ok_or(Error::Malformed {
        op,
        expected: "(length, ⟨entries⟩)",
        got: l.clone(),
    })?;
    if entries.len() as u64 != n {
        return Err(Error::Malformed {
            op,
            expected: "entry count matching the length",
            got: l.clone(),
        });
    }
    entries
        .iter()
        .map(|e| nat_of(e, op))
        .collect::<Result<Vec<u64>>>()
        .map(|v| (n, v))
}

impl NatRules {
    pub fn new(bound: u64) -> Self {
        NatRules {
            bound,
            u_cache: Arc::new(OnceLock::new()),
            udot_cache: Arc::new(OnceLock::new()),
        }
    }

    pub fn bound(&self) -> u64 {
        self.bound
    }

    pub fn contains(&self, ty: &Label) -> bool {
        matches!(ty.as_nat(), Some(n) if n < self.bound)
    }

    fn check_bound(&self, op: &'static str, n: u64, input: &Label) -> Result<u64> {
        if n < self.bound {
            Ok(n)
        } else {
            Err(Error::OutOfBound {
                op,
                input: input.to_string(),
            })
        }
    }

    pub fn u_set(&self) -> FinSet {
        self.u_cache
            .get_or_init(|| FinSet::canonical(self.bound))
            .clone()
    }

    pub fn udot_set(&self) -> FinSet {
        self.udot_cache
            .get_or_init(|| {
                let mut elems = Vec::new();
                for n in 0..self.bound {
                    for i in 0..n {
                        elems.push(Label::pair(Label::Nat(n), Label::Nat(i)));
                    }
                }
                FinSet::new(elems).unwrap()
            })
            .clone()
    }

    pub fn t_family(&self) -> Family {
        let udot = self.udot_set();
        let u = self.u_set();
        Family::new(
            FinMap::from_fn(udot, u, |l| {
                let (n, _) = l.as_pair().unwrap();
                n.clone()
            })
            .unwrap(),
        )
    }

    pub fn t_fiber(&self, ty: &Label) -> Result<Vec<Label>> {
        let n = nat_of(ty, "t_fiber")?;
        self.check_bound("t_fiber", n, ty)?;
        Ok((0..n)
            .map(|i| Label::pair(Label::Nat(n), Label::Nat(i)))
            .collect())
    }

    pub fn type_of(&self, term: &Label) -> Result<Label> {
        let (n, i) = term_of(term, "type_of")?;
        if i >= n {
            return Err(Error::Malformed {
                op: "type_of",
                expected: "index below the type",
                got: term.clone(),
            });
        }
        Ok(Label::Nat(n))
    }

    pub fn unit_square_data(&self) -> Result<(Family, FinMap, FinMap)> {
        let point = FinSet::terminal();
        let left = Family::new(FinMap::identity(&point));
        let one = Label::Nat(self.check_bound("one", 1, &Label::Nat(1))?);
        let star = FinMap::constant(
            point.clone(),
            self.udot_set(),
            &Label::pair(Label::Nat(1), Label::Nat(0)),
        )?;
        let one = FinMap::constant(point, self.u_set(), &one)?;
        Ok((left, star, one))
    }

    pub fn sigma_base(&self, u2: &Label) -> Result<Label> {
        let (_, entries) = list_of(u2, "Sigma")?;
        let sum: u64 = entries.iter().sum();
        Ok(Label::Nat(self.check_bound("Sigma", sum, u2)?))
    }

    /// `σ(((A,⟨B⟩), (A,i)), (Bᵢ,j)) = (ΣB, B₀+..+Bᵢ₋₁+j)`.
    pub fn sigma_total(&self, u2dot: &Label) -> Result<Label> {
        let (zb, d) = u2dot.as_pair().ok_or(Error::Malformed {
            op: "sigma",
            expected: "((base, fiber point), inner term)",
            got: u2dot.clone(),
        })?;
        let (z, b) = zb.as_pair().ok_or(Error::Malformed {
            op: "sigma",
            expected: "((base, fiber point), inner term)",
            got: u2dot.clone(),
        })?;
        let (len, entries) = list_of(z, "sigma")?;
        let (bn, i) = term_of(b, "sigma")?;
        let (m, j) = term_of(d, "sigma")?;
        if bn != len || i >= len || entries[i as usize] != m || j >= m {
            return Err(Error::Malformed {
                op: "sigma",
                expected: "fiber point consistent with the base element",
                got: u2dot.clone(),
            });
        }
        let sum: u64 = entries.iter().sum();
        let offset: u64 = entries[..i as usize].iter().sum::<u64>() + j;
        self.check_bound("sigma", sum, u2dot)?;
        Ok(Label::pair(Label::Nat(sum), Label::Nat(offset)))
    }

    pub fn pi_base(&self, ptu: &Label) -> Result<Label> {
        let (_, entries) = list_of(ptu, "Pi")?;
        let prod: u64 = entries.iter().product();
        Ok(Label::Nat(self.check_bound("Pi", prod, ptu)?))
    }

    /// `λ(A, ⟨(B₀,j₀)..⟩) = (ΠB, j)` with `j` the mixed-radix numeral whose
    /// first digit is most significant.
    pub fn lambda(&self, ptudot: &Label) -> Result<Label> {
        let (a, tup) = ptudot.as_pair().ok_or(Error::Malformed {
            op: "lambda",
            expected: "(length, ⟨terms⟩)",
            got: ptudot.clone(),
        })?;
        let n = nat_of(a, "lambda")?;
        let terms = tup.as_tuple().ok_or(Error::Malformed {
            op: "lambda",
            expected: "(length, ⟨terms⟩)",
            got: ptudot.clone(),
        })?;
        if terms.len() as u64 != n {
            return Err(Error::Malformed {
                op: "lambda",
                expected: "one term per fiber point",
                got: ptudot.clone(),
            });
        }
        let mut prod: u64 = 1;
        let mut idx: u64 = 0;
        for t in terms {
            let (m, j) = term_of(t, "lambda")?;
            if j >= m {
                return Err(Error::Malformed {
                    op: "lambda",
                    expected: "term index below its type",
                    got: ptudot.clone(),
                });
            }
            prod *= m;
            idx = idx * m + j;
        }
        self.check_bound("lambda", prod, ptudot)?;
        Ok(Label::pair(Label::Nat(prod), Label::Nat(idx)))
    }

    pub fn eq_base(&self, pair: &Label) -> Result<Label> {
        let (x, y) = pair.as_pair().ok_or(Error::Malformed {
            op: "Eq",
            expected: "pair of terms",
            got: pair.clone(),
        })?;
        let (n, i) = term_of(x, "Eq")?;
        let (n2, j) = term_of(y, "Eq")?;
        if n != n2 {
            return Err(Error::Malformed {
                op: "Eq",
                expected: "terms of the same type",
                got: pair.clone(),
            });
        }
        Ok(Label::Nat(if i == j { 1 } else { 0 }))
    }

    pub fn refl(&self, x: &Label) -> Result<Label> {
        term_of(x, "refl")?;
        self.check_bound("refl", 1, x)?;
        Ok(Label::pair(Label::Nat(1), Label::Nat(0)))
    }
}
