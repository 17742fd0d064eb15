//! The constrained network: bias-free linear layers around a single ReLU
//! layer and one output node, fed with the `2^n` minterm values of an object.
//!
//! Restricting the ReLU nodes to a fixed activation pattern `p` turns the
//! network into one linear map `mw^p` over minterms. ReLU `i` (0-based)
//! owns bit `l - 1 - i` of `p`, so the first ReLU is the most significant bit.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::minterm::{to_minterms, AttributeVector, MintermVector, MAX_ATTRIBUTES};

/// Largest supported ReLU count; partition numbers are `u32` and cell sweeps enumerate `2^l` patterns.
pub const MAX_RELUS: usize = 24;

/// A bias-free dense layer computing `out = W · in` with `W` stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    rows: usize,
    cols: usize,
    weights: Vec<f64>,
}

impl Layer {
    pub fn new(rows: usize, cols: usize, weights: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Structure("layers need at least one row and column".into()));
        }
        if weights.len() != rows * cols {
            return Err(Error::Structure(format!(
                "layer {rows}x{cols} expects {} weights, got {}",
                rows * cols,
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Structure("layer weights must be finite".into()));
        }
        Ok(Layer { rows, cols, weights })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Structure("ragged layer rows".into()));
        }
        Layer::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.weights[r * self.cols + c]
    }

    pub fn apply(&self, input: &[f64]) -> Vec<f64> {
        debug_assert_eq!(input.len(), self.cols);
        self.weights
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(input).map(|(w, x)| w * x).sum())
            .collect()
    }

    /// `Wᵀ · grad`, used for backpropagation.
    fn apply_transposed(&self, grad: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (row, g) in self.weights.chunks_exact(self.cols).zip(grad) {
            for (o, w) in out.iter_mut().zip(row) {
                *o += w * g;
            }
        }
        out
    }

    fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Self {
        let weights = (0..rows * cols).map(|_| rng.random_range(-0.5..=0.5)).collect();
        Layer { rows, cols, weights }
    }
}

/// Linear layers, one ReLU layer, linear layers, one output node, plus the decision threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimpleAnnModel {
    n_atts: usize,
    below: Vec<Layer>,
    above: Vec<Layer>,
    threshold: f64,
}

impl SimpleAnnModel {
    /// `below` maps `2^n` minterms to the ReLU layer; `above` maps the ReLU outputs to one node.
    /// `above` may only be empty when there is a single ReLU node acting as the output.
    pub fn new(n_atts: usize, below: Vec<Layer>, above: Vec<Layer>, threshold: f64) -> Result<Self> {
        if n_atts == 0 || n_atts > MAX_ATTRIBUTES {
            return Err(Error::range(
                "attribute count",
                n_atts,
                format!("[1, {MAX_ATTRIBUTES}]"),
            ));
        }
        if !threshold.is_finite() {
            return Err(Error::Structure("threshold must be finite".into()));
        }
        let first = below
            .first()
            .ok_or_else(|| Error::Structure("at least one linear layer must precede the ReLU layer".into()))?;
        if first.cols != 1 << n_atts {
            return Err(Error::Structure(format!(
                "first layer takes {} inputs, expected 2^{n_atts} = {}",
                first.cols,
                1usize << n_atts
            )));
        }
        let chain = below.iter().chain(&above).collect::<Vec<_>>();
        for pair in chain.windows(2) {
            if pair[0].rows != pair[1].cols {
                return Err(Error::Structure(format!(
                    "layer with {} outputs feeds a layer with {} inputs",
                    pair[0].rows, pair[1].cols
                )));
            }
        }
        let relus = below.last().map_or(0, |l| l.rows);
        if relus > MAX_RELUS {
            return Err(Error::range("ReLU count", relus, format!("[1, {MAX_RELUS}]")));
        }
        let outputs = chain.last().map_or(0, |l| l.rows);
        if outputs != 1 {
            return Err(Error::Structure(format!(
                "expected a single output node, found {outputs}"
            )));
        }
        Ok(SimpleAnnModel {
            n_atts,
            below,
            above,
            threshold,
        })
    }

    pub fn n_atts(&self) -> usize {
        self.n_atts
    }

    pub fn input_dim(&self) -> usize {
        1 << self.n_atts
    }

    pub fn relu_count(&self) -> usize {
        self.below.last().map_or(0, Layer::rows)
    }

    pub fn below(&self) -> &[Layer] {
        &self.below
    }

    pub fn above(&self) -> &[Layer] {
        &self.above
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    fn check_input(&self, mt: &MintermVector) -> Result<()> {
        if mt.len() != self.input_dim() {
            return Err(Error::Structure(format!(
                "model expects {} minterms, got {}",
                self.input_dim(),
                mt.len()
            )));
        }
        Ok(())
    }

    /// Pre-activation values of the ReLU nodes.
    pub fn pre_activations(&self, mt: &MintermVector) -> Result<Vec<f64>> {
        self.check_input(mt)?;
        Ok(self.below_stack(mt.values()))
    }

    fn below_stack(&self, input: &[f64]) -> Vec<f64> {
        self.below.iter().fold(input.to_vec(), |acc, layer| layer.apply(&acc))
    }

    fn above_stack(&self, relu_out: Vec<f64>) -> f64 {
        self.above.iter().fold(relu_out, |acc, layer| layer.apply(&acc))[0]
    }

    /// Network score obtained by evaluating the layer stack with ReLU applied.
    pub fn forward(&self, mt: &MintermVector) -> Result<f64> {
        let pre = self.pre_activations(mt)?;
        Ok(self.above_stack(pre.into_iter().map(relu).collect()))
    }

    /// Partition number: bit of ReLU `i` is set iff its pre-activation is `>= 0`.
    pub fn relu_status(&self, mt: &MintermVector) -> Result<u32> {
        Ok(pattern_of(&self.pre_activations(mt)?))
    }

    /// Minterm weights `mw^p`: the stack evaluated on each unit vector with the ReLU nodes
    /// forced to identity (active in `p`) or zero.
    pub fn cell_weights(&self, p: u32) -> Result<Vec<f64>> {
        let l = self.relu_count();
        if (p as u64) >= 1u64 << l {
            return Err(Error::range("partition number", p, format!("[0, 2^{l})")));
        }
        let dim = self.input_dim();
        let mut unit = vec![0.0; dim];
        let mut weights = Vec::with_capacity(dim);
        for k in 0..dim {
            unit[k] = 1.0;
            let pre = self.below_stack(&unit);
            let masked = pre
                .into_iter()
                .enumerate()
                .map(|(i, z)| if relu_bit(p, i, l) { z } else { 0.0 })
                .collect();
            weights.push(self.above_stack(masked));
            unit[k] = 0.0;
        }
        Ok(weights)
    }

    /// Minterm weights of the `l` atomic cells, indexed by ReLU node.
    pub fn atomic_weights(&self) -> Vec<Vec<f64>> {
        let l = self.relu_count();
        (0..l)
            .map(|i| {
                self.cell_weights(atomic_cell(i, l))
                    .expect("atomic partition numbers are in range")
            })
            .collect()
    }

    /// Scores every object, returning `(partition number, score)` pairs.
    pub fn score_objects(&self, data: &LabeledDataset) -> Result<Vec<(u32, f64)>> {
        data.objects()
            .iter()
            .map(|o| {
                let mt = to_minterms(&o.values);
                let pre = self.pre_activations(&mt)?;
                let p = pattern_of(&pre);
                Ok((p, self.above_stack(pre.into_iter().map(relu).collect())))
            })
            .collect()
    }
}

#[inline]
fn relu(z: f64) -> f64 {
    if z >= 0.0 {
        z
    } else {
        0.0
    }
}

fn pattern_of(pre: &[f64]) -> u32 {
    pre.iter().fold(0u32, |p, &z| (p << 1) | (z >= 0.0) as u32)
}

/// Whether ReLU `i` (0-based) is active in partition number `p` of an `l`-node layer.
#[inline]
pub fn relu_bit(p: u32, i: usize, l: usize) -> bool {
    (p >> (l - 1 - i)) & 1 == 1
}

/// Partition number of the atomic cell where only ReLU `i` is active.
#[inline]
pub fn atomic_cell(i: usize, l: usize) -> u32 {
    1 << (l - 1 - i)
}

/// Active ReLU indices of a partition number.
pub fn active_set(p: u32, l: usize) -> Vec<usize> {
    (0..l).filter(|&i| relu_bit(p, i, l)).collect()
}

/// Sums the atomic weight vectors over the active ReLU nodes of `p`.
pub fn cell_weights_from_atoms(atoms: &[Vec<f64>], p: u32) -> Vec<f64> {
    let l = atoms.len();
    let dim = atoms.first().map_or(0, Vec::len);
    let mut out = vec![0.0; dim];
    for i in active_set(p, l) {
        for (o, w) in out.iter_mut().zip(&atoms[i]) {
            *o += w;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledObject {
    pub values: AttributeVector,
    pub target: bool,
}

/// Training objects with binary targets and per-attribute names.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LabeledDataset {
    attribute_names: Vec<String>,
    objects: Vec<LabeledObject>,
}

impl LabeledDataset {
    pub fn new(attribute_names: Vec<String>, objects: Vec<LabeledObject>) -> Result<Self> {
        let n = attribute_names.len();
        if n == 0 || n > MAX_ATTRIBUTES {
            return Err(Error::range("attribute count", n, format!("[1, {MAX_ATTRIBUTES}]")));
        }
        if let Some(pos) = objects.iter().position(|o| o.values.len() != n) {
            return Err(Error::Structure(format!(
                "object {pos} has {} values, expected {n}",
                objects[pos].values.len()
            )));
        }
        Ok(LabeledDataset {
            attribute_names,
            objects,
        })
    }

    /// Convenience constructor from raw rows; names default to `a1 … an`.
    pub fn from_rows(rows: &[(Vec<f64>, bool)]) -> Result<Self> {
        let n = rows.first().map_or(0, |r| r.0.len());
        let names = (1..=n).map(|j| format!("a{j}")).collect();
        let objects = rows
            .iter()
            .map(|(x, y)| {
                Ok(LabeledObject {
                    values: AttributeVector::new(x.clone())?,
                    target: *y,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        LabeledDataset::new(names, objects)
    }

    pub fn n_atts(&self) -> usize {
        self.attribute_names.len()
    }

    pub fn attribute_names(&self) -> &[String] {
        &self.attribute_names
    }

    pub fn objects(&self) -> &[LabeledObject] {
        &self.objects
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn targets(&self) -> Vec<bool> {
        self.objects.iter().map(|o| o.target).collect()
    }

    pub fn class_counts(&self) -> (usize, usize) {
        let ones = self.objects.iter().filter(|o| o.target).count();
        (self.objects.len() - ones, ones)
    }
}

/// A non-empty partition cell with its linear map and class supports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionCell {
    pub number: u32,
    pub relu_count: usize,
    pub active: Vec<usize>,
    pub mw: Vec<f64>,
    pub count_0: usize,
    pub count_1: usize,
}

impl PartitionCell {
    pub fn support(&self) -> usize {
        self.count_0 + self.count_1
    }

    /// Bit code of the partition number, first ReLU leftmost.
    pub fn code(&self) -> String {
        (0..self.relu_count)
            .map(|i| {
                if relu_bit(self.number, i, self.relu_count) {
                    '1'
                } else {
                    '0'
                }
            })
            .collect()
    }
}

/// One entry per observed partition number, ascending.
pub fn enumerate_cells(model: &SimpleAnnModel, data: &LabeledDataset) -> Result<Vec<PartitionCell>> {
    let mut counts: BTreeMap<u32, (usize, usize)> = BTreeMap::new();
    for (object, (p, _)) in data.objects().iter().zip(model.score_objects(data)?) {
        let entry = counts.entry(p).or_default();
        if object.target {
            entry.1 += 1;
        } else {
            entry.0 += 1;
        }
    }
    let l = model.relu_count();
    counts
        .into_iter()
        .map(|(number, (count_0, count_1))| {
            Ok(PartitionCell {
                number,
                relu_count: l,
                active: active_set(number, l),
                mw: model.cell_weights(number)?,
                count_0,
                count_1,
            })
        })
        .collect()
}

/// Cells with `support >= min_support` (and both classes present if `require_mixed`),
/// by descending support, ties by ascending partition number.
pub fn select_essential(
    cells: &[PartitionCell],
    min_support: usize,
    require_mixed: bool,
) -> Result<Vec<PartitionCell>> {
    if min_support == 0 {
        return Err(Error::Config("min_support must be at least 1".into()));
    }
    let mut selected: Vec<PartitionCell> = cells
        .iter()
        .filter(|c| c.support() >= min_support)
        .filter(|c| !require_mixed || (c.count_0 > 0 && c.count_1 > 0))
        .cloned()
        .collect();
    selected.sort_by(|a, b| b.support().cmp(&a.support()).then(a.number.cmp(&b.number)));
    Ok(selected)
}

/// Largest support threshold whose selected cells still cover `coverage` of all objects.
pub fn auto_min_support(cells: &[PartitionCell], coverage: f64) -> usize {
    let total: usize = cells.iter().map(PartitionCell::support).sum();
    let mut supports: Vec<usize> = cells.iter().map(PartitionCell::support).collect();
    supports.sort_unstable_by(|a, b| b.cmp(a));
    let mut covered = 0;
    for s in supports {
        covered += s;
        if covered as f64 >= coverage * total as f64 {
            return s.max(1);
        }
    }
    1
}

/// Outcome of a threshold sweep: `score > threshold` predicts class 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdFit {
    pub threshold: f64,
    pub correct: usize,
    pub total: usize,
}

impl ThresholdFit {
    pub fn accuracy(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.correct as f64 / self.total as f64
        }
    }
}

/// Accuracy-maximizing threshold over observed scores. The smallest best candidate wins
/// and is moved to the midpoint of the gap above it.
pub fn best_threshold(scores: &[f64], targets: &[bool]) -> ThresholdFit {
    sweep(scores, targets, false)
}

/// Like [`best_threshold`], but only thresholds below the top score are candidates, so at
/// least one object is predicted 1.
pub fn best_positive_threshold(scores: &[f64], targets: &[bool]) -> ThresholdFit {
    sweep(scores, targets, true)
}

fn sweep(scores: &[f64], targets: &[bool], require_positive: bool) -> ThresholdFit {
    debug_assert_eq!(scores.len(), targets.len());
    let total = scores.len();
    if total == 0 {
        return ThresholdFit {
            threshold: 0.0,
            correct: 0,
            total,
        };
    }
    let mut pairs: Vec<(f64, bool)> = scores.iter().copied().zip(targets.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let lowest = pairs[0].0;

    // Below every score all objects are predicted 1.
    let mut correct = pairs.iter().filter(|p| p.1).count();
    let mut best = (correct, None::<usize>);
    let mut i = 0;
    let mut distinct = Vec::new();
    while i < pairs.len() {
        let value = pairs[i].0;
        while i < pairs.len() && pairs[i].0 == value {
            if pairs[i].1 {
                correct -= 1;
            } else {
                correct += 1;
            }
            i += 1;
        }
        distinct.push(value);
        if require_positive && i == pairs.len() {
            break;
        }
        if correct > best.0 {
            best = (correct, Some(distinct.len() - 1));
        }
    }
    let threshold = match best.1 {
        None => lowest - 1f64.max(lowest.abs()),
        Some(j) => match distinct.get(j + 1) {
            Some(&next) => {
                let mid = distinct[j] + (next - distinct[j]) / 2.0;
                if mid < next {
                    mid
                } else {
                    distinct[j]
                }
            }
            None => distinct[j],
        },
    };
    ThresholdFit {
        threshold,
        correct: best.0,
        total,
    }
}

/// Decision threshold maximizing training accuracy of the model's scores.
pub fn fit_threshold(model: &SimpleAnnModel, data: &LabeledDataset) -> Result<ThresholdFit> {
    if data.is_empty() {
        return Err(Error::Config("cannot fit a threshold on an empty dataset".into()));
    }
    let scores: Vec<f64> = model.score_objects(data)?.into_iter().map(|(_, s)| s).collect();
    Ok(best_threshold(&scores, &data.targets()))
}

/// Fraction of objects classified correctly by `score > threshold`.
pub fn accuracy(model: &SimpleAnnModel, data: &LabeledDataset) -> Result<f64> {
    let scores = model.score_objects(data)?;
    let correct = scores
        .iter()
        .zip(data.objects())
        .filter(|((_, s), o)| (*s > model.threshold()) == o.target)
        .count();
    Ok(if data.is_empty() {
        0.0
    } else {
        correct as f64 / data.len() as f64
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainParams {
    pub relu_count: usize,
    /// Widths of extra linear layers between the input and the ReLU layer.
    pub hidden_below: Vec<usize>,
    /// Widths of extra linear layers between the ReLU layer and the output.
    pub hidden_above: Vec<usize>,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            relu_count: 5,
            hidden_below: Vec::new(),
            hidden_above: Vec::new(),
            epochs: 3000,
            learning_rate: 0.5,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs_run: usize,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub best_loss: f64,
    pub best_epoch: usize,
    /// Set when the loss became non-finite; the best weights seen are returned.
    pub diverged: bool,
    pub training_accuracy: f64,
}

/// Full-batch gradient descent on the squared error between output and target.
///
/// Weights start uniform in `[-0.5, 0.5]` from a ChaCha8 stream seeded by `params.seed`;
/// the returned model keeps the lowest-loss weights and a threshold fitted on `data`.
pub fn train(data: &LabeledDataset, params: &TrainParams) -> Result<(SimpleAnnModel, TrainReport)> {
    if params.relu_count == 0 || params.relu_count > MAX_RELUS {
        return Err(Error::Config(format!("relu_count must be in [1, {MAX_RELUS}]")));
    }
    if !(params.learning_rate > 0.0 && params.learning_rate.is_finite()) {
        return Err(Error::Config("learning_rate must be positive".into()));
    }
    if params.hidden_below.iter().chain(&params.hidden_above).any(|&w| w == 0) {
        return Err(Error::Config("hidden layer widths must be positive".into()));
    }
    if data.is_empty() {
        return Err(Error::Config("cannot train on an empty dataset".into()));
    }
    let n = data.n_atts();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut widths = vec![1usize << n];
    widths.extend(&params.hidden_below);
    widths.push(params.relu_count);
    let relu_position = widths.len() - 1;
    widths.extend(&params.hidden_above);
    widths.push(1);
    let mut layers: Vec<Layer> = widths.windows(2).map(|w| Layer::random(w[1], w[0], &mut rng)).collect();

    let inputs: Vec<Vec<f64>> = data
        .objects()
        .iter()
        .map(|o| to_minterms(&o.values).values().to_vec())
        .collect();
    let targets: Vec<f64> = data.objects().iter().map(|o| o.target as u8 as f64).collect();
    let count = inputs.len() as f64;

    let loss_of = |layers: &[Layer]| -> f64 {
        inputs
            .iter()
            .zip(&targets)
            .map(|(x, t)| {
                let out = forward_layers(layers, relu_position, x).0.last().unwrap()[0];
                (out - t) * (out - t)
            })
            .sum::<f64>()
            / count
    };

    let initial_loss = loss_of(&layers);
    let mut best = (initial_loss, 0usize, layers.clone());
    let mut diverged = false;
    let mut epochs_run = 0;
    for epoch in 1..=params.epochs {
        let mut grads: Vec<Vec<f64>> = layers.iter().map(|l| vec![0.0; l.weights.len()]).collect();
        for (x, t) in inputs.iter().zip(&targets) {
            let (acts, pre) = forward_layers(&layers, relu_position, x);
            let out = acts.last().unwrap()[0];
            let mut delta = vec![2.0 * (out - t) / count];
            for li in (0..layers.len()).rev() {
                let input = &acts[li];
                let layer = &layers[li];
                for (r, d) in delta.iter().enumerate() {
                    let row = &mut grads[li][r * layer.cols..(r + 1) * layer.cols];
                    for (g, xi) in row.iter_mut().zip(input) {
                        *g += d * xi;
                    }
                }
                if li > 0 {
                    delta = layer.apply_transposed(&delta);
                    if li == relu_position {
                        for (d, z) in delta.iter_mut().zip(&pre) {
                            if *z < 0.0 {
                                *d = 0.0;
                            }
                        }
                    }
                }
            }
        }
        for (layer, g) in layers.iter_mut().zip(&grads) {
            for (w, gw) in layer.weights.iter_mut().zip(g) {
                *w -= params.learning_rate * gw;
            }
        }
        epochs_run = epoch;
        let loss = loss_of(&layers);
        if !loss.is_finite() || layers.iter().any(|l| l.weights.iter().any(|w| !w.is_finite())) {
            diverged = true;
            break;
        }
        if loss < best.0 {
            best = (loss, epoch, layers.clone());
        }
    }
    let final_loss = if diverged { f64::NAN } else { loss_of(&layers) };
    let (best_loss, best_epoch, best_layers) = best;
    let above = best_layers[relu_position..].to_vec();
    let below = best_layers[..relu_position].to_vec();
    let model = SimpleAnnModel::new(n, below, above, 0.0)?;
    let fit = fit_threshold(&model, data)?;
    let model = model.with_threshold(fit.threshold);
    let report = TrainReport {
        epochs_run,
        initial_loss,
        final_loss,
        best_loss,
        best_epoch,
        diverged,
        training_accuracy: fit.accuracy(),
    };
    Ok((model, report))
}

/// Activations per layer boundary: `acts[0]` is the input, `acts[i]` the input of layer `i`,
/// the last entry the output. The ReLU is applied to the output of layer `relu_position - 1`,
/// whose pre-activations are returned alongside.
fn forward_layers(layers: &[Layer], relu_position: usize, x: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut acts = Vec::with_capacity(layers.len() + 1);
    let mut pre = Vec::new();
    acts.push(x.to_vec());
    for (i, layer) in layers.iter().enumerate() {
        let mut next = layer.apply(acts.last().unwrap());
        if i + 1 == relu_position {
            pre = next.clone();
            next.iter_mut().for_each(|z| *z = relu(*z));
        }
        acts.push(next);
    }
    (acts, pre)
}
