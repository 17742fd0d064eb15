use std::collections::BTreeSet;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A binary relation `I ⊆ G × M`, stored both row- and column-wise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DyadicContext {
    objects: Vec<String>,
    attributes: Vec<String>,
    intents: Vec<FixedBitSet>,
    extents: Vec<FixedBitSet>,
}

impl DyadicContext {
    pub fn new(n_objects: usize, n_attributes: usize) -> Self {
        let objects = (1..=n_objects).map(|i| format!("g{i}")).collect();
        let attributes = (1..=n_attributes).map(|i| format!("m{i}")).collect();
        Self::with_names(objects, attributes)
    }

    pub fn with_names(objects: Vec<String>, attributes: Vec<String>) -> Self {
        DyadicContext {
            intents: vec![FixedBitSet::with_capacity(attributes.len()); objects.len()],
            extents: vec![FixedBitSet::with_capacity(objects.len()); attributes.len()],
            objects,
            attributes,
        }
    }

    pub fn from_pairs(n_objects: usize, n_attributes: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut ctx = Self::new(n_objects, n_attributes);
        for &(g, m) in pairs {
            ctx.insert(g, m)?;
        }
        Ok(ctx)
    }

    pub fn insert(&mut self, g: usize, m: usize) -> Result<()> {
        if g >= self.objects.len() || m >= self.attributes.len() {
            return Err(Error::range(
                "incidence",
                format!("({g}, {m})"),
                format!("{}×{}", self.objects.len(), self.attributes.len()),
            ));
        }
        self.intents[g].insert(m);
        self.extents[m].insert(g);
        Ok(())
    }

    pub fn has(&self, g: usize, m: usize) -> bool {
        self.intents[g].contains(m)
    }

    pub fn n_objects(&self) -> usize {
        self.objects.len()
    }

    pub fn n_attributes(&self) -> usize {
        self.attributes.len()
    }

    pub fn object_names(&self) -> &[String] {
        &self.objects
    }

    pub fn attribute_names(&self) -> &[String] {
        &self.attributes
    }

    pub fn incidences(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.intents
            .iter()
            .enumerate()
            .flat_map(|(g, row)| row.ones().map(move |m| (g, m)))
    }

    /// `A' = {m ∈ M | g I m for all g ∈ A}`.
    pub fn derive_intent(&self, objects: &FixedBitSet) -> FixedBitSet {
        meet(objects, &self.intents, self.attributes.len())
    }

    /// `B' = {g ∈ G | g I m for all m ∈ B}`.
    pub fn derive_extent(&self, attributes: &FixedBitSet) -> FixedBitSet {
        meet(attributes, &self.extents, self.objects.len())
    }

    pub fn object_set<I: IntoIterator<Item = usize>>(&self, items: I) -> FixedBitSet {
        set_of(self.objects.len(), items)
    }

    pub fn attribute_set<I: IntoIterator<Item = usize>>(&self, items: I) -> FixedBitSet {
        set_of(self.attributes.len(), items)
    }
}

fn meet(selection: &FixedBitSet, rows: &[FixedBitSet], width: usize) -> FixedBitSet {
    let mut out = FixedBitSet::with_capacity(width);
    out.insert_range(..);
    for i in selection.ones() {
        out.intersect_with(&rows[i]);
    }
    out
}

pub(crate) fn set_of<I: IntoIterator<Item = usize>>(width: usize, items: I) -> FixedBitSet {
    let mut set = FixedBitSet::with_capacity(width);
    set.extend(items);
    set
}

/// A closed pair `(A, B)` with `A' = B` and `B' = A`, as sorted index lists.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DyadicConcept {
    pub extent: Vec<usize>,
    pub intent: Vec<usize>,
}

impl DyadicConcept {
    fn from_sets(extent: &FixedBitSet, intent: &FixedBitSet) -> Self {
        DyadicConcept {
            extent: extent.ones().collect(),
            intent: intent.ones().collect(),
        }
    }
}

/// Concepts generated by single objects `({g}'', {g}')` and single attributes `({m}', {m}'')`.
///
/// At most `|G| + |M|` concepts, deduplicated and sorted; together they cover every incidence.
pub fn concepts_from_singletons(ctx: &DyadicContext) -> Vec<DyadicConcept> {
    let mut found = BTreeSet::new();
    for g in 0..ctx.n_objects() {
        let intent = ctx.derive_intent(&ctx.object_set([g]));
        let extent = ctx.derive_extent(&intent);
        found.insert(DyadicConcept::from_sets(&extent, &intent));
    }
    for m in 0..ctx.n_attributes() {
        let extent = ctx.derive_extent(&ctx.attribute_set([m]));
        let intent = ctx.derive_intent(&extent);
        found.insert(DyadicConcept::from_sets(&extent, &intent));
    }
    found.into_iter().collect()
}
