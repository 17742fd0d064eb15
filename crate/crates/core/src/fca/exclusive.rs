//! Greedy extraction of non-overlapping triadic concepts from a bit tensor.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use super::triadic::{triconcepts, TriadicConcept, TriadicContext};
use crate::error::{Error, Result};
use crate::minterm::MintermVector;
use crate::network::best_threshold;
use crate::quantizer::BitTensor;

/// How the greedy loop ranks candidate concepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum SelectionMethod {
    /// Relative energy `|X1|·|X2|·powersum / power(bt)`.
    #[default]
    M1,
    /// `|X1| · powersum`.
    M2,
    /// `powersum`.
    M3,
    /// Best-threshold accuracy of `powersum · [tree]` over the objects of the covered cells.
    M4,
}

impl SelectionMethod {
    pub const ALL: [SelectionMethod; 4] = [Self::M1, Self::M2, Self::M3, Self::M4];

    pub fn description(self) -> &'static str {
        match self {
            Self::M1 => "relative power (#cells * #minterms * powersum)",
            Self::M2 => "#cells * powersum",
            Self::M3 => "powersum",
            Self::M4 => "accuracy over objects of the covered cells",
        }
    }
}

impl fmt::Display for SelectionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for SelectionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "M1" => Ok(Self::M1),
            "M2" => Ok(Self::M2),
            "M3" => Ok(Self::M3),
            "M4" => Ok(Self::M4),
            _ => Err(Error::Config(format!(
                "unknown selection method `{s}`, expected M1..M4"
            ))),
        }
    }
}

/// Selection method plus the energy flavor: when `support_weighted`, every cell
/// counts with its training support instead of once in all energy formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Selection {
    pub method: SelectionMethod,
    pub support_weighted: bool,
}

impl Selection {
    pub fn new(method: SelectionMethod) -> Self {
        Selection {
            method,
            support_weighted: false,
        }
    }
}

/// Evaluation objects grouped by tensor cell position.
#[derive(Debug, Clone, Default)]
pub struct CellObjects {
    per_cell: Vec<Vec<(MintermVector, bool)>>,
}

impl CellObjects {
    /// Keeps the `(partition number, minterms, target)` items whose cell is in the tensor.
    pub fn new<I>(bt: &BitTensor, items: I) -> Self
    where
        I: IntoIterator<Item = (u32, MintermVector, bool)>,
    {
        let mut per_cell = vec![Vec::new(); bt.cells().len()];
        for (p, mt, target) in items {
            if let Some(ci) = bt.cell_index(p) {
                per_cell[ci].push((mt, target));
            }
        }
        CellObjects { per_cell }
    }

    pub fn cell(&self, ci: usize) -> &[(MintermVector, bool)] {
        self.per_cell.get(ci).map_or(&[], Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.per_cell.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Classification quality of `powersum · Σ_{k∈X2} mt[k]` over the objects of the concept's cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConceptFit {
    pub threshold: f64,
    pub correct: usize,
    pub total: usize,
    pub true_positive: usize,
    pub predicted_positive: usize,
    pub actual_positive: usize,
}

impl ConceptFit {
    pub fn accuracy(&self) -> Option<f64> {
        (self.total > 0).then(|| self.correct as f64 / self.total as f64)
    }

    pub fn precision(&self) -> Option<f64> {
        (self.predicted_positive > 0).then(|| self.true_positive as f64 / self.predicted_positive as f64)
    }

    pub fn recall(&self) -> Option<f64> {
        (self.actual_positive > 0).then(|| self.true_positive as f64 / self.actual_positive as f64)
    }
}

/// Thresholded fit of a concept's weighted tree evaluation on its covered objects.
pub fn concept_fit(c: &TriadicConcept, data: &CellObjects) -> ConceptFit {
    let weight = c.powersum() as f64;
    let (scores, targets): (Vec<f64>, Vec<bool>) = c
        .cells
        .iter()
        .flat_map(|&ci| data.cell(ci))
        .map(|(mt, y)| (weight * mt.mass(c.minterms.iter().copied()), *y))
        .unzip();
    let fit = best_threshold(&scores, &targets);
    let mut tp = 0;
    let mut pp = 0;
    for (s, y) in scores.iter().zip(&targets) {
        if *s > fit.threshold {
            pp += 1;
            tp += *y as usize;
        }
    }
    ConceptFit {
        threshold: fit.threshold,
        correct: fit.correct,
        total: fit.total,
        true_positive: tp,
        predicted_positive: pp,
        actual_positive: targets.iter().filter(|y| **y).count(),
    }
}

/// Energy of the tensor under the selection's energy flavor.
pub fn tensor_energy(bt: &BitTensor, support_weighted: bool) -> u64 {
    if support_weighted {
        bt.support_weighted_power()
    } else {
        bt.power()
    }
}

fn concept_energy(c: &TriadicConcept, bt: &BitTensor, support_weighted: bool) -> u64 {
    if support_weighted {
        c.support_weighted_power(bt.supports())
    } else {
        c.power()
    }
}

/// `power(c) / power(bt)`, exact.
pub fn relpower(c: &TriadicConcept, bt: &BitTensor, support_weighted: bool) -> Result<Ratio<u128>> {
    let total = tensor_energy(bt, support_weighted);
    if total == 0 {
        return Err(Error::ZeroEnergy);
    }
    Ok(Ratio::new(
        concept_energy(c, bt, support_weighted) as u128,
        total as u128,
    ))
}

fn score_exact(
    c: &TriadicConcept,
    bt: &BitTensor,
    selection: Selection,
    data: Option<&CellObjects>,
) -> Result<Ratio<u128>> {
    let cells = if selection.support_weighted {
        c.support(bt.supports()) as u128
    } else {
        c.cells.len() as u128
    };
    Ok(match selection.method {
        SelectionMethod::M1 => relpower(c, bt, selection.support_weighted)?,
        SelectionMethod::M2 => Ratio::from_integer(cells * c.powersum() as u128),
        SelectionMethod::M3 => Ratio::from_integer(c.powersum() as u128),
        SelectionMethod::M4 => {
            let data = data.ok_or_else(|| Error::Config("method M4 needs training objects".into()))?;
            let fit = concept_fit(c, data);
            if fit.total == 0 {
                Ratio::from_integer(0)
            } else {
                Ratio::new(fit.correct as u128, fit.total as u128)
            }
        }
    })
}

/// Ranking score of a concept under a selection method.
pub fn score_concept(
    c: &TriadicConcept,
    bt: &BitTensor,
    selection: Selection,
    data: Option<&CellObjects>,
) -> Result<f64> {
    Ok(score_exact(c, bt, selection, data)?.to_f64().unwrap_or(f64::NAN))
}

/// One concept of the exclusive cover with its energy share.
#[derive(Debug, Clone, PartialEq)]
pub struct ExclusiveConcept {
    pub concept: TriadicConcept,
    pub power: u64,
    pub relpower: Ratio<u128>,
    pub score: f64,
}

impl ExclusiveConcept {
    pub fn relpower_f64(&self) -> f64 {
        self.relpower.to_f64().unwrap_or(f64::NAN)
    }
}

/// Repeatedly takes the best triconcept of the remaining context and clears its cuboid,
/// until no set bit is left. The returned cuboids partition the tensor's set bits.
///
/// Ties are broken by the smallest sorted cell list, then minterm list, then level list.
pub fn excl_triconcepts(
    bt: &BitTensor,
    selection: Selection,
    data: Option<&CellObjects>,
) -> Result<Vec<ExclusiveConcept>> {
    if selection.method == SelectionMethod::M4 && data.is_none() {
        return Err(Error::Config("method M4 needs training objects".into()));
    }
    let mut ctx = TriadicContext::from_tensor(bt);
    let total = tensor_energy(bt, selection.support_weighted);
    let mut cache: HashMap<TriadicConcept, Ratio<u128>> = HashMap::new();
    let mut out = Vec::new();
    while !ctx.is_empty() {
        let mut best: Option<(Ratio<u128>, TriadicConcept)> = None;
        for c in triconcepts(&ctx) {
            let score = match cache.get(&c) {
                Some(s) => *s,
                None => {
                    let s = score_exact(&c, bt, selection, data)?;
                    cache.insert(c.clone(), s);
                    s
                }
            };
            // candidates arrive sorted, so only a strictly better score replaces the incumbent
            if best.as_ref().is_none_or(|(b, _)| score > *b) {
                best = Some((score, c));
            }
        }
        let (score, chosen) = best.expect("a non-empty context has at least one concept");
        ctx.clear_cuboid(&chosen);
        let power = concept_energy(&chosen, bt, selection.support_weighted);
        out.push(ExclusiveConcept {
            relpower: Ratio::new(power as u128, total.max(1) as u128),
            power,
            score: score.to_f64().unwrap_or(f64::NAN),
            concept: chosen,
        });
    }
    Ok(out)
}

/// Edges `c → d` where `c.X2 ⊆ d.X2` and `c.X1 ⊇ d.X1`, by position in `concepts`.
pub fn concept_implications(concepts: &[TriadicConcept]) -> Vec<(usize, usize)> {
    let subset = |a: &[usize], b: &[usize]| a.iter().all(|x| b.binary_search(x).is_ok());
    let mut edges = Vec::new();
    for (i, c) in concepts.iter().enumerate() {
        for (j, d) in concepts.iter().enumerate() {
            if i != j && subset(&c.minterms, &d.minterms) && subset(&d.cells, &c.cells) {
                edges.push((i, j));
            }
        }
    }
    edges
}
