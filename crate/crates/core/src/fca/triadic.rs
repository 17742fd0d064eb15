use std::collections::BTreeSet;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use super::dyadic::{concepts_from_singletons, set_of, DyadicContext};
use crate::error::{Error, Result};
use crate::quantizer::BitTensor;

/// A ternary relation `Y ⊆ K1 × K2 × K3`, stored as one `K2 × K3` slice per `x1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriadicContext {
    k1: usize,
    k2: usize,
    k3: usize,
    // slices[x1][x2] = {x3 | (x1, x2, x3) ∈ Y}
    slices: Vec<Vec<FixedBitSet>>,
}

impl TriadicContext {
    pub fn new(k1: usize, k2: usize, k3: usize) -> Self {
        TriadicContext {
            k1,
            k2,
            k3,
            slices: vec![vec![FixedBitSet::with_capacity(k3); k2]; k1],
        }
    }

    /// Cells × minterms × bit levels with a cross wherever the tensor bit is set.
    pub fn from_tensor(bt: &BitTensor) -> Self {
        let mut ctx = Self::new(bt.cells().len(), bt.n_minterms(), bt.n_bits() as usize);
        for x1 in 0..ctx.k1 {
            for x2 in 0..ctx.k2 {
                let v = bt.value(x1, x2);
                for x3 in 0..ctx.k3 {
                    if (v >> x3) & 1 == 1 {
                        ctx.slices[x1][x2].insert(x3);
                    }
                }
            }
        }
        ctx
    }

    pub fn from_triples(k1: usize, k2: usize, k3: usize, triples: &[(usize, usize, usize)]) -> Result<Self> {
        let mut ctx = Self::new(k1, k2, k3);
        for &(a, b, c) in triples {
            ctx.insert(a, b, c)?;
        }
        Ok(ctx)
    }

    pub fn insert(&mut self, x1: usize, x2: usize, x3: usize) -> Result<()> {
        if x1 >= self.k1 || x2 >= self.k2 || x3 >= self.k3 {
            return Err(Error::range(
                "triple",
                format!("({x1}, {x2}, {x3})"),
                format!("{}×{}×{}", self.k1, self.k2, self.k3),
            ));
        }
        self.slices[x1][x2].insert(x3);
        Ok(())
    }

    pub fn contains(&self, x1: usize, x2: usize, x3: usize) -> bool {
        self.slices[x1][x2].contains(x3)
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.k1, self.k2, self.k3)
    }

    pub fn len(&self) -> usize {
        self.slices.iter().flatten().map(|s| s.count_ones(..)).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.slices.iter().flatten().all(|s| s.is_clear())
    }

    pub fn triples(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.slices.iter().enumerate().flat_map(|(x1, slice)| {
            slice
                .iter()
                .enumerate()
                .flat_map(move |(x2, set)| set.ones().map(move |x3| (x1, x2, x3)))
        })
    }

    /// `Σ 2^x3` over all crosses; equals the tensor energy for a fresh tensor context.
    pub fn power(&self) -> u64 {
        self.triples().map(|(_, _, x3)| 1u64 << x3).sum()
    }

    /// Removes every cross of the cuboid `X1 × X2 × X3`.
    pub fn clear_cuboid(&mut self, c: &TriadicConcept) {
        for &x1 in &c.cells {
            for &x2 in &c.minterms {
                for &x3 in &c.levels {
                    self.slices[x1][x2].set(x3, false);
                }
            }
        }
    }

    /// `(X2, X3)^1`: the `x1` whose slices contain the whole rectangle `X2 × X3`.
    pub fn derive_1(&self, x2s: &FixedBitSet, x3s: &FixedBitSet) -> FixedBitSet {
        set_of(
            self.k1,
            (0..self.k1).filter(|&x1| x2s.ones().all(|x2| x3s.is_subset(&self.slices[x1][x2]))),
        )
    }

    /// `(X1, X3)^2`.
    pub fn derive_2(&self, x1s: &FixedBitSet, x3s: &FixedBitSet) -> FixedBitSet {
        set_of(
            self.k2,
            (0..self.k2).filter(|&x2| x1s.ones().all(|x1| x3s.is_subset(&self.slices[x1][x2]))),
        )
    }

    /// `(X1, X2)^3`.
    pub fn derive_3(&self, x1s: &FixedBitSet, x2s: &FixedBitSet) -> FixedBitSet {
        let mut out = FixedBitSet::with_capacity(self.k3);
        out.insert_range(..);
        for x1 in x1s.ones() {
            for x2 in x2s.ones() {
                out.intersect_with(&self.slices[x1][x2]);
            }
        }
        out
    }

    /// The dyadic `x1`-slice with `G = K2` and `M = K3`.
    pub fn slice(&self, x1: usize) -> DyadicContext {
        let mut ctx = DyadicContext::new(self.k2, self.k3);
        for (x2, set) in self.slices[x1].iter().enumerate() {
            for x3 in set.ones() {
                ctx.insert(x2, x3).expect("slice indices are in range");
            }
        }
        ctx
    }

    /// Whether `(X1, X2, X3)` satisfies all three closure equalities.
    pub fn is_concept(&self, c: &TriadicConcept) -> bool {
        let x1 = set_of(self.k1, c.cells.iter().copied());
        let x2 = set_of(self.k2, c.minterms.iter().copied());
        let x3 = set_of(self.k3, c.levels.iter().copied());
        self.derive_1(&x2, &x3) == x1 && self.derive_2(&x1, &x3) == x2 && self.derive_3(&x1, &x2) == x3
    }
}

/// A maximal cuboid `X1 × X2 × X3 ⊆ Y`: cell positions, minterm ids and bit levels, each sorted.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TriadicConcept {
    pub cells: Vec<usize>,
    pub minterms: Vec<usize>,
    pub levels: Vec<usize>,
}

impl TriadicConcept {
    /// `Σ_{x3 ∈ X3} 2^x3`.
    pub fn powersum(&self) -> u64 {
        self.levels.iter().map(|&x3| 1u64 << x3).sum()
    }

    /// `|X1| · |X2| · powersum`.
    pub fn power(&self) -> u64 {
        self.cells.len() as u64 * self.minterms.len() as u64 * self.powersum()
    }

    /// Energy counting each cell by its training support.
    pub fn support_weighted_power(&self, supports: &[usize]) -> u64 {
        self.support(supports) as u64 * self.minterms.len() as u64 * self.powersum()
    }

    pub fn support(&self, supports: &[usize]) -> usize {
        self.cells.iter().map(|&x1| supports[x1]).sum()
    }

    pub fn volume(&self) -> usize {
        self.cells.len() * self.minterms.len() * self.levels.len()
    }
}

/// Triadic concepts assembled slice by slice: the singleton-generated dyadic concepts
/// `(X2, X3)` of every `x1`-slice, closed to `((X2, X3)^1, X2, X3)`.
///
/// Concepts with an empty side enclose no cross and are dropped. The result is sorted.
pub fn triconcepts(ctx: &TriadicContext) -> Vec<TriadicConcept> {
    let mut found = BTreeSet::new();
    for x1 in 0..ctx.k1 {
        if ctx.slices[x1].iter().all(|s| s.is_clear()) {
            continue;
        }
        let slice = ctx.slice(x1);
        for dc in concepts_from_singletons(&slice) {
            if dc.extent.is_empty() || dc.intent.is_empty() {
                continue;
            }
            let x2 = set_of(ctx.k2, dc.extent.iter().copied());
            let x3 = set_of(ctx.k3, dc.intent.iter().copied());
            found.insert(TriadicConcept {
                cells: ctx.derive_1(&x2, &x3).ones().collect(),
                minterms: dc.extent,
                levels: dc.intent,
            });
        }
    }
    found.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// The single-cell context read off the worked-example bit rows.
    pub(crate) fn worked_context() -> TriadicContext {
        TriadicContext::from_triples(1, 4, 2, &[(0, 1, 0), (0, 2, 0), (0, 1, 1), (0, 2, 1), (0, 3, 1)]).unwrap()
    }

    #[test]
    fn worked_example_concepts() {
        let ctx = worked_context();
        assert_eq!(ctx.power(), 8);
        let cs = triconcepts(&ctx);
        assert_eq!(
            cs,
            vec![
                TriadicConcept {
                    cells: vec![0],
                    minterms: vec![1, 2],
                    levels: vec![0, 1]
                },
                TriadicConcept {
                    cells: vec![0],
                    minterms: vec![1, 2, 3],
                    levels: vec![1]
                },
            ]
        );
        assert!(cs.iter().all(|c| c.power() == 6));
        assert!(cs.iter().all(|c| ctx.is_concept(c)));
    }

    #[test]
    fn empty_context_has_no_concepts() {
        assert!(triconcepts(&TriadicContext::new(2, 4, 3)).is_empty());
    }

    #[test]
    fn power_helpers() {
        let c = TriadicConcept {
            cells: vec![0],
            minterms: vec![5],
            levels: vec![0],
        };
        assert_eq!(c.power(), 1);
        let c = TriadicConcept {
            cells: vec![0, 1, 2],
            minterms: vec![8],
            levels: vec![0, 4],
        };
        assert_eq!(c.powersum(), 17);
        assert_eq!(c.power(), 51);
        assert_eq!(c.support_weighted_power(&[10, 20, 5]), 35 * 17);
    }

    fn arb_context() -> impl Strategy<Value = TriadicContext> {
        (1usize..=3, 1usize..=4, 1usize..=3).prop_flat_map(|(a, b, c)| {
            prop::collection::vec(any::<bool>(), a * b * c).prop_map(move |bits| {
                let triples: Vec<_> = bits
                    .iter()
                    .enumerate()
                    .filter(|(_, x)| **x)
                    .map(|(i, _)| (i / (b * c), (i / c) % b, i % c))
                    .collect();
                TriadicContext::from_triples(a, b, c, &triples).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn slice_concepts_are_closed_cuboids(ctx in arb_context()) {
            let (k1, k2, k3) = ctx.dims();
            for c in triconcepts(&ctx) {
                prop_assert!(ctx.is_concept(&c));
                for &a in &c.cells { for &b in &c.minterms { for &d in &c.levels {
                    prop_assert!(ctx.contains(a, b, d));
                }}}
                // maximality, by brute force over single-element extensions
                for a in (0..k1).filter(|a| !c.cells.contains(a)) {
                    prop_assert!(!c.minterms.iter().all(|&b| c.levels.iter().all(|&d| ctx.contains(a, b, d))));
                }
                for b in (0..k2).filter(|b| !c.minterms.contains(b)) {
                    prop_assert!(!c.cells.iter().all(|&a| c.levels.iter().all(|&d| ctx.contains(a, b, d))));
                }
                for d in (0..k3).filter(|d| !c.levels.contains(d)) {
                    prop_assert!(!c.cells.iter().all(|&a| c.minterms.iter().all(|&b| ctx.contains(a, b, d))));
                }
            }
        }

        #[test]
        fn slice_concepts_cover_every_cross(ctx in arb_context()) {
            let cs = triconcepts(&ctx);
            for (a, b, d) in ctx.triples() {
                prop_assert!(cs.iter().any(|c| c.cells.contains(&a) && c.minterms.contains(&b) && c.levels.contains(&d)));
            }
        }
    }
}
