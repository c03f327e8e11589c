//! Exact computation engine for finite-scale models of dependent type theory.
//!
//! The crate is organized in layers:
//!
//! - [`finset`]: labeled finite sets, total maps, families with fiber access,
//!   and the locally cartesian closed structure (pullbacks, dependent sums,
//!   pushforwards, slice exponentials). Everything else is checked against
//!   this kernel.
//! - [`polynomial`]: polynomial endofunctors of finite sets determined by a
//!   signature map, their universal property, and signature composition.
//! - [`mlalg`]: structured type universes — a typing map together with unit,
//!   sum, and product structure maps whose defining squares are verified
//!   fiberwise — including the finite-cardinal instance and extensional
//!   equality/identity structure.
//! - [`presheaf`]: the same story one level up, over a finite index category:
//!   sieves and the subobject classifier, partial map classifiers, nerves,
//!   and universes of small sets.
//! - [`equiv`]: the classifier of type equivalences, its groupoid operations,
//!   two-cells between parallel maps of classified families, and explicit
//!   witnesses for the standard type isomorphisms.
//! - [`ttcheck`]: a small surface language of type expressions with a parser
//!   and an elaborator into the finite-cardinal model.

pub mod equiv;
pub mod error;
pub mod finset;
pub mod label;
pub mod mlalg;
pub mod polynomial;
pub mod presheaf;
pub mod sample;
pub mod ttcheck;

pub use error::{Error, Result};
pub use finset::{FinMap, FinSet, Family, Square};
pub use label::Label;
