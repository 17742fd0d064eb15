//! Logic trees grown from concept minterm sets, their evaluation, scoring and path statistics.

mod tree;

pub use tree::{build_tree, LeafPath, Literal, LogicTree, Node};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fca::TriadicConcept;
use crate::minterm::AttributeVector;
use crate::network::best_positive_threshold;
use crate::quantizer::BitTensor;

/// A concept's tree together with its bit-level weight and the partition numbers it covers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptTree {
    pub tree: LogicTree,
    pub powersum: u64,
    pub cells: Vec<u32>,
    pub minterms: Vec<usize>,
}

impl ConceptTree {
    /// Builds the tree for a concept whose cell indices refer to positions in `bt`.
    pub fn from_concept(c: &TriadicConcept, bt: &BitTensor) -> Result<Self> {
        let cells = c
            .cells
            .iter()
            .map(|&ci| {
                bt.cells()
                    .get(ci)
                    .copied()
                    .ok_or_else(|| Error::Structure(format!("concept cell index {ci} outside the tensor")))
            })
            .collect::<Result<Vec<_>>>()?;
        let powersum = c.powersum();
        if powersum == 0 {
            return Err(Error::Structure("concept without bit levels".into()));
        }
        Ok(ConceptTree {
            tree: build_tree(&c.minterms, bt.n_atts())?,
            powersum,
            cells,
            minterms: c.minterms.clone(),
        })
    }

    pub fn covers(&self, p: u32) -> bool {
        self.cells.contains(&p)
    }

    /// `powersum · [qldt]^x`.
    pub fn weighted_eval(&self, x: &AttributeVector) -> f64 {
        self.powersum as f64 * self.tree.eval(x)
    }
}

/// Outcome of scoring one object against a concept set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeScore {
    pub score: f64,
    pub class: bool,
    pub covered: bool,
    /// Indices of the concepts whose cells contain the object's partition number.
    pub concepts: Vec<usize>,
}

/// Sum of the weighted tree evaluations of all concepts covering cell `p`.
/// Objects in no covered cell score 0 and fall into class 0.
pub fn score(x: &AttributeVector, p: u32, concepts: &[ConceptTree], tau_prime: f64) -> TreeScore {
    let hits: Vec<usize> = concepts
        .iter()
        .enumerate()
        .filter(|(_, c)| c.covers(p))
        .map(|(i, _)| i)
        .collect();
    if hits.is_empty() {
        return TreeScore {
            score: 0.0,
            class: false,
            covered: false,
            concepts: hits,
        };
    }
    let s: f64 = hits.iter().map(|&i| concepts[i].weighted_eval(x)).sum();
    TreeScore {
        score: s,
        class: s > tau_prime,
        covered: true,
        concepts: hits,
    }
}

/// Statistics of one leaf path over a set of labelled objects.
///
/// The path predicts 1 when `[l]^x > threshold`; the threshold maximizes accuracy among
/// those that predict at least one object positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathMetrics {
    pub depth: usize,
    pub covered_minterms: usize,
    pub objects: usize,
    pub threshold: f64,
    pub accuracy: f64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub avg0: Option<f64>,
    pub avg1: Option<f64>,
}

pub fn path_metrics<'a, I>(path: &LeafPath, n_atts: usize, objects: I) -> Result<PathMetrics>
where
    I: IntoIterator<Item = (&'a AttributeVector, bool)>,
{
    let (evals, targets): (Vec<f64>, Vec<bool>) = objects.into_iter().map(|(x, y)| (path.eval(x), y)).unzip();
    if evals.is_empty() {
        return Err(Error::Config("path metrics need at least one object".into()));
    }
    let fit = best_positive_threshold(&evals, &targets);
    let (mut tp, mut pp) = (0usize, 0usize);
    for (e, y) in evals.iter().zip(&targets) {
        if *e > fit.threshold {
            pp += 1;
            tp += *y as usize;
        }
    }
    let positives = targets.iter().filter(|y| **y).count();
    let mean = |class: bool| {
        let v: Vec<f64> = evals
            .iter()
            .zip(&targets)
            .filter(|(_, y)| **y == class)
            .map(|(e, _)| *e)
            .collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    };
    Ok(PathMetrics {
        depth: path.depth(),
        covered_minterms: path.covered_minterms(n_atts),
        objects: evals.len(),
        threshold: fit.threshold,
        accuracy: fit.accuracy(),
        precision: (pp > 0).then(|| tp as f64 / pp as f64),
        recall: (positives > 0).then(|| tp as f64 / positives as f64),
        avg0: mean(false),
        avg1: mean(true),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// The left path implies the right one.
    Forward,
    Backward,
    Equivalent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathImplication {
    pub left: usize,
    pub right: usize,
    pub direction: Direction,
}

/// A conjunction implies every conjunction made of a subset of its literals.
pub fn path_implications(left: &[LeafPath], right: &[LeafPath]) -> Vec<PathImplication> {
    let right_sets: Vec<Vec<Literal>> = right.iter().map(LeafPath::literal_set).collect();
    let mut out = Vec::new();
    for (i, a) in left.iter().enumerate() {
        let a = a.literal_set();
        for (j, b) in right_sets.iter().enumerate() {
            let a_in_b = a.iter().all(|l| b.contains(l));
            let b_in_a = b.iter().all(|l| a.contains(l));
            let direction = match (b_in_a, a_in_b) {
                (true, true) => Direction::Equivalent,
                (true, false) => Direction::Forward,
                (false, true) => Direction::Backward,
                (false, false) => continue,
            };
            out.push(PathImplication {
                left: i,
                right: j,
                direction,
            });
        }
    }
    out
}
