//! Seeded random generators for the sampling suites.
//!
//! Every randomized check records its seed and draws from a fixed-algorithm
//! generator, so runs replay exactly.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::equiv::NestedInstance;
use crate::finset::{FinMap, FinSet, Family};
use crate::polynomial::PolySignature;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn finset(rng: &mut ChaCha8Rng, max_size: u64) -> FinSet {
    FinSet::canonical(rng.gen_range(0..=max_size))
}

/// A uniformly random total map, when one exists.
pub fn finmap(rng: &mut ChaCha8Rng, dom: &FinSet, cod: &FinSet) -> Option<FinMap> {
    if cod.is_empty() && !dom.is_empty() {
        return None;
    }
    let table = (0..dom.len())
        .map(|_| rng.gen_range(0..cod.len().max(1)))
        .collect();
    Some(FinMap::new(dom.clone(), cod.clone(), table).expect("table in range"))
}

/// A random canonical family over a fresh base.
pub fn family(rng: &mut ChaCha8Rng, max_base: u64, max_fiber: u64) -> Family {
    let base = finset(rng, max_base);
    let sizes: Vec<u64> = (0..base.len()).map(|_| rng.gen_range(0..=max_fiber)).collect();
    Family::from_fiber_sizes(base, &sizes).expect("canonical family")
}

/// A random signature with bounded base and total sizes.
pub fn signature(rng: &mut ChaCha8Rng, max_base: u64, max_total: u64) -> PolySignature {
    loop {
        let base = rng.gen_range(0..=max_base);
        let mut sizes = Vec::with_capacity(base as usize);
        let mut total = 0u64;
        for _ in 0..base {
            let k = rng.gen_range(0..=max_total);
            sizes.push(k);
            total += k;
        }
        if total <= max_total {
            return PolySignature::from_fibers(&sizes);
        }
    }
}

/// A random nested three-level family instance over a small context.
pub fn nested_instance(rng: &mut ChaCha8Rng, max_ctx: u64, max_fiber: u64) -> NestedInstance {
    let gamma = FinSet::canonical(rng.gen_range(1..=max_ctx.max(1)));
    let a_sizes: Vec<u64> = (0..gamma.len()).map(|_| rng.gen_range(0..=max_fiber)).collect();
    let a = Family::from_fiber_sizes(gamma, &a_sizes).unwrap();
    let b_sizes: Vec<u64> = (0..a.total().len())
        .map(|_| rng.gen_range(0..=max_fiber))
        .collect();
    let b = Family::from_fiber_sizes(a.total().clone(), &b_sizes).unwrap();
    let c_sizes: Vec<u64> = (0..b.total().len())
        .map(|_| rng.gen_range(0..=max_fiber))
        .collect();
    let c = Family::from_fiber_sizes(b.total().clone(), &c_sizes).unwrap();
    NestedInstance { a, b, c }
}
