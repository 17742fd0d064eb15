//! Dyadic and triadic concept analysis over bit tensors.

pub mod cxt;
pub mod dyadic;
pub mod exclusive;
pub mod triadic;

pub use cxt::{parse_cxt, write_cxt};
pub use dyadic::{concepts_from_singletons, DyadicConcept, DyadicContext};
pub use exclusive::{
    concept_fit, concept_implications, excl_triconcepts, relpower, score_concept, tensor_energy, CellObjects,
    ConceptFit, ExclusiveConcept, Selection, SelectionMethod,
};
pub use triadic::{triconcepts, TriadicConcept, TriadicContext};
