//! End-to-end interpretation: cells, quantization, exclusive concepts, trees and the report.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, StageExt};
use crate::fca::{
    concept_fit, concept_implications, excl_triconcepts, tensor_energy, write_cxt, CellObjects, DyadicContext,
    Selection, SelectionMethod, TriadicContext,
};
use crate::io::{ingest, load_model, write_model, write_tensor, Normalization, Scaler};
use crate::minterm::{bitcode_of, to_minterms, AttributeVector};
use crate::network::{
    auto_min_support, enumerate_cells, fit_threshold, relu_bit, select_essential, train, LabeledDataset, PartitionCell,
    SimpleAnnModel, TrainParams, TrainReport,
};
use crate::qldt::{path_implications, path_metrics, score, ConceptTree, LeafPath};
use crate::quantizer::{build_bit_tensor, fit_params, BitTensor, MAX_BITS};
use crate::report::{CellRow, ConceptRow, Coverage, PathEdge, PathRow, Report, ShapleyRow, Summary};
use crate::shapley::shapley_global;

const M4_NOTE: &str = "M4 scores a concept by the best-threshold accuracy of powersum * tree evaluation \
over the training objects of its cells";
const PATH_NOTE: &str = "path precision/recall/accuracy threshold the path evaluation at the accuracy-maximizing \
value among those predicting at least one object as class 1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub data: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub output: PathBuf,
    pub normalization: Normalization,
    /// Downsample the majority class to the minority size.
    pub balance: bool,
    pub balance_seed: u64,
    pub n_bits: u32,
    pub epsilon: Option<f64>,
    /// Fixed support threshold; when absent the smallest set of cells holding `coverage` of the objects is kept.
    pub min_support: Option<usize>,
    pub coverage: f64,
    pub require_mixed: bool,
    pub method: SelectionMethod,
    pub support_weighted: bool,
    /// Refit the threshold of a loaded model on the data.
    pub refit_threshold: bool,
    pub train: TrainParams,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            data: None,
            model: None,
            output: PathBuf::from("relu-tca-out"),
            normalization: Normalization::MinMax,
            balance: false,
            balance_seed: 0,
            n_bits: 7,
            epsilon: None,
            min_support: None,
            coverage: 0.8,
            require_mixed: false,
            method: SelectionMethod::M1,
            support_weighted: false,
            refit_threshold: false,
            train: TrainParams::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_bits == 0 || self.n_bits > MAX_BITS {
            return Err(Error::range("n_bits", self.n_bits, format!("[1, {MAX_BITS}]")));
        }
        if let Some(eps) = self.epsilon {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(Error::Config(format!("epsilon must be positive, got {eps}")));
            }
        }
        if self.min_support == Some(0) {
            return Err(Error::Config("min_support must be at least 1".into()));
        }
        if !(self.coverage > 0.0 && self.coverage <= 1.0) {
            return Err(Error::Config(format!(
                "coverage must be in (0, 1], got {}",
                self.coverage
            )));
        }
        if self.train.epochs == 0 {
            return Err(Error::Config("epochs must be positive".into()));
        }
        if !(self.train.learning_rate > 0.0 && self.train.learning_rate.is_finite()) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if self.train.relu_count == 0 {
            return Err(Error::Config("relu_count must be positive".into()));
        }
        Ok(())
    }
}

/// Everything `explain` needs to decompose the score of a new object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifacts {
    pub attribute_names: Vec<String>,
    pub scaler: Scaler,
    pub model: SimpleAnnModel,
    pub tau_prime: Option<f64>,
    pub essential_cells: Vec<u32>,
    pub concepts: Vec<ConceptTree>,
}

impl Artifacts {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("artifacts serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[derive(Debug, Clone)]
pub struct Interpretation {
    pub report: Report,
    pub artifacts: Artifacts,
    pub bit_tensor: Option<BitTensor>,
}

/// Ingests the data, trains or loads the model and interprets it.
pub fn run_pipeline(config: &PipelineConfig) -> Result<Interpretation> {
    config.validate()?;
    let data_path = config
        .data
        .as_ref()
        .ok_or_else(|| Error::Config("a data file is required".into()))?;
    let ingested = ingest(
        data_path,
        config.normalization,
        config.balance.then_some(config.balance_seed),
    )
    .stage("ingest")?;
    let (model, training) = match &config.model {
        Some(path) => {
            let model = load_model(path).stage("load model")?;
            if model.n_atts() != ingested.data.n_atts() {
                return Err(Error::Config(format!(
                    "model expects {} attributes but the data has {}",
                    model.n_atts(),
                    ingested.data.n_atts()
                )));
            }
            let model = if config.refit_threshold {
                let fit = fit_threshold(&model, &ingested.data).stage("fit threshold")?;
                model.with_threshold(fit.threshold)
            } else {
                model
            };
            (model, None)
        }
        None => {
            let (model, report) = train(&ingested.data, &config.train).stage("train")?;
            (model, Some(report))
        }
    };
    interpret(&model, &ingested.data, ingested.scaler, config, training)
}

/// The interpretation stages for a given model and dataset.
pub fn interpret(
    model: &SimpleAnnModel,
    data: &LabeledDataset,
    scaler: Scaler,
    config: &PipelineConfig,
    training: Option<TrainReport>,
) -> Result<Interpretation> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::Config("the dataset is empty".into()));
    }
    if model.n_atts() != data.n_atts() {
        return Err(Error::Config(format!(
            "model expects {} attributes but the data has {}",
            model.n_atts(),
            data.n_atts()
        )));
    }
    let names = data.attribute_names().to_vec();
    let n = data.n_atts();
    let tau = model.threshold();
    let selection = Selection {
        method: config.method,
        support_weighted: config.support_weighted,
    };

    let cells = enumerate_cells(model, data).stage("partition cells")?;
    let min_support = config
        .min_support
        .unwrap_or_else(|| auto_min_support(&cells, config.coverage));
    let essential = select_essential(&cells, min_support, config.require_mixed).stage("partition cells")?;

    let mut warnings = Vec::new();
    let mut notes = Vec::new();
    if config.method == SelectionMethod::M4 {
        notes.push(M4_NOTE.to_string());
    }
    notes.push(PATH_NOTE.to_string());

    let bt = if essential.is_empty() {
        warnings.push("no partition cell meets the support criteria; nothing to interpret".into());
        None
    } else {
        let params = fit_params(&essential, config.n_bits, config.epsilon).stage("quantize")?;
        Some(build_bit_tensor(&essential, params, tau).stage("quantize")?)
    };

    // per object: partition number, raw score, minterms
    let scored = model.score_objects(data).stage("partition cells")?;
    let minterms: Vec<_> = data.objects().iter().map(|o| to_minterms(&o.values)).collect();

    let mut concept_rows = Vec::new();
    let mut trees = Vec::new();
    let mut concept_edges = Vec::new();
    let mut path_edges = Vec::new();
    let mut energy = 0;
    if let Some(bt) = &bt {
        energy = tensor_energy(bt, config.support_weighted);
        let objects = CellObjects::new(
            bt,
            scored
                .iter()
                .zip(&minterms)
                .zip(data.objects())
                .map(|(((p, _), mt), o)| (*p, mt.clone(), o.target)),
        );
        let extracted = if bt.power() == 0 {
            warnings.push("every quantized weight is zero; no concepts".into());
            Vec::new()
        } else {
            excl_triconcepts(bt, selection, Some(&objects)).stage("exclusive concepts")?
        };
        for (i, ec) in extracted.iter().enumerate() {
            let c = &ec.concept;
            let tree = ConceptTree::from_concept(c, bt).stage("trees")?;
            let fit = concept_fit(c, &objects);
            let in_cells: Vec<(&AttributeVector, bool)> = data
                .objects()
                .iter()
                .zip(&scored)
                .filter(|(_, (p, _))| tree.covers(*p))
                .map(|(o, _)| (&o.values, o.target))
                .collect();
            let paths = tree
                .tree
                .leaf_paths()
                .iter()
                .map(|path| {
                    Ok(PathRow {
                        formula: path.render(&names),
                        metrics: path_metrics(path, n, in_cells.iter().copied())?,
                    })
                })
                .collect::<Result<Vec<_>>>()
                .stage("path metrics")?;
            concept_rows.push(ConceptRow {
                id: concept_id(i),
                cells: tree.cells.clone(),
                minterms: c.minterms.clone(),
                minterm_codes: c.minterms.iter().map(|&k| code(k, n)).collect(),
                levels: c.levels.clone(),
                powersum: c.powersum(),
                power: ec.power,
                relpower: format!("{}/{}", ec.relpower.numer(), ec.relpower.denom()),
                relpower_value: ec.relpower_f64(),
                selection_score: ec.score,
                support: c.support(bt.supports()),
                threshold: fit.threshold,
                precision: fit.precision(),
                recall: fit.recall(),
                accuracy: fit.accuracy(),
                paths,
            });
            trees.push(tree);
        }
        let plain: Vec<_> = extracted.iter().map(|e| e.concept.clone()).collect();
        concept_edges = concept_implications(&plain)
            .into_iter()
            .map(|(a, b)| (concept_id(a), concept_id(b)))
            .collect();
        let all_paths: Vec<Vec<LeafPath>> = trees.iter().map(|t| t.tree.leaf_paths()).collect();
        for i in 0..all_paths.len() {
            for j in i + 1..all_paths.len() {
                for e in path_implications(&all_paths[i], &all_paths[j]) {
                    path_edges.push(PathEdge {
                        left: format!("{}: {}", concept_id(i), all_paths[i][e.left].render(&names)),
                        right: format!("{}: {}", concept_id(j), all_paths[j][e.right].render(&names)),
                        direction: e.direction,
                    });
                }
            }
        }
    }

    let coverage = coverage(model, data, bt.as_ref(), &trees, &scored, &minterms)?;
    let shapley = essential
        .iter()
        .map(|c| {
            Ok(ShapleyRow {
                cell: c.number,
                code: c.code(),
                values: shapley_global(&c.mw, n, c.number)?.values,
            })
        })
        .collect::<Result<Vec<_>>>()
        .stage("shapley")?;

    let cell_rows = cells
        .iter()
        .map(|c| CellRow {
            number: c.number,
            code: c.code(),
            essential: essential.iter().any(|e| e.number == c.number),
            count_0: c.count_0,
            count_1: c.count_1,
            mw: c.mw.clone(),
            quantized: bt
                .as_ref()
                .and_then(|bt| bt.cell_index(c.number).map(|ci| bt.row(ci).to_vec())),
        })
        .collect();

    let report = Report {
        summary: Summary {
            attribute_names: names.clone(),
            objects: data.len(),
            class_counts: data.class_counts(),
            relu_count: model.relu_count(),
            threshold: tau,
            tau_prime: bt.as_ref().map(BitTensor::tau_prime),
            n_bits: config.n_bits,
            epsilon: bt.as_ref().map(|b| b.params().epsilon),
            weight_range: bt.as_ref().map(|b| (b.params().a, b.params().b)),
            min_support,
            require_mixed: config.require_mixed,
            method: config.method,
            support_weighted: config.support_weighted,
            tensor_energy: energy,
        },
        training,
        cells: cell_rows,
        cell_poset: cell_poset(&essential, model.relu_count()),
        shapley,
        concepts: concept_rows,
        concept_implications: concept_edges,
        path_implications: path_edges,
        coverage,
        notes,
        warnings,
    };
    let artifacts = Artifacts {
        attribute_names: names,
        scaler,
        model: model.clone(),
        tau_prime: bt.as_ref().map(BitTensor::tau_prime),
        essential_cells: essential.iter().map(|c| c.number).collect(),
        concepts: trees,
    };
    Ok(Interpretation {
        report,
        artifacts,
        bit_tensor: bt,
    })
}

fn concept_id(i: usize) -> String {
    format!("c{}", i + 1)
}

fn code(k: usize, n: usize) -> String {
    bitcode_of(k, n).map(|c| c.to_string()).unwrap_or_default()
}

fn cell_poset(essential: &[PartitionCell], l: usize) -> Vec<(u32, u32)> {
    let mut numbers: Vec<u32> = essential.iter().map(|c| c.number).collect();
    numbers.sort_unstable();
    let below = |p: u32, q: u32| p != q && (0..l).all(|i| !relu_bit(p, i, l) || relu_bit(q, i, l));
    let mut edges = Vec::new();
    for &p in &numbers {
        for &q in &numbers {
            if below(p, q) && !numbers.iter().any(|&r| below(p, r) && below(r, q)) {
                edges.push((p, q));
            }
        }
    }
    edges
}

fn coverage(
    model: &SimpleAnnModel,
    data: &LabeledDataset,
    bt: Option<&BitTensor>,
    trees: &[ConceptTree],
    scored: &[(u32, f64)],
    minterms: &[crate::minterm::MintermVector],
) -> Result<Coverage> {
    let ratio = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
    let tau = model.threshold();
    let (mut covered, mut net_all, mut net_cov, mut quant_cov, mut concept_cov, mut concept_all, mut agree) =
        (0, 0, 0, 0, 0, 0, 0);
    let mut gap: f64 = 0.0;
    for ((o, (p, raw)), mt) in data.objects().iter().zip(scored).zip(minterms) {
        let y = o.target;
        net_all += ((*raw > tau) == y) as usize;
        let Some(bt) = bt else { continue };
        let ts = score(&o.values, *p, trees, bt.tau_prime());
        if bt.cell_index(*p).is_none() {
            concept_all += (ts.class == y) as usize;
            continue;
        }
        covered += 1;
        let q = bt.score(*p, mt).stage("coverage")?;
        let q_class = q > bt.tau_prime();
        // a covered cell with no concept keeps its (zero) tensor score
        let t_class = ts.score > bt.tau_prime();
        gap = gap.max((ts.score - q).abs());
        net_cov += ((*raw > tau) == y) as usize;
        quant_cov += (q_class == y) as usize;
        concept_cov += (t_class == y) as usize;
        concept_all += (t_class == y) as usize;
        agree += (t_class == q_class) as usize;
    }
    Ok(Coverage {
        objects: data.len(),
        covered,
        network_accuracy: ratio(net_all, data.len()),
        network_accuracy_covered: ratio(net_cov, covered),
        quantized_accuracy_covered: ratio(quant_cov, covered),
        concept_accuracy_covered: ratio(concept_cov, covered),
        concept_accuracy_all: bt.and_then(|_| ratio(concept_all, data.len())),
        max_score_gap: gap,
        decision_agreement: ratio(agree, covered),
    })
}

/// Files written by [`write_outputs`], relative to the output directory.
pub fn write_outputs(interp: &Interpretation, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files: Vec<(String, String)> = vec![
        ("report.json".into(), interp.report.to_json()),
        ("report.txt".into(), interp.report.render_text()),
        ("artifacts.json".into(), interp.artifacts.to_json()),
        ("model.txt".into(), write_model(&interp.artifacts.model)),
    ];
    if let Some(bt) = &interp.bit_tensor {
        files.push(("tensor.txt".into(), write_tensor(bt)));
        for (name, text) in cell_contexts(bt) {
            files.push((name, text));
        }
    }
    for (name, dot) in concept_dots(&interp.artifacts) {
        files.push((name, dot));
    }
    let mut written = Vec::new();
    for (name, text) in files {
        let path = dir.join(&name);
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

/// One DOT document per concept tree, named `concept_<id>.dot`.
pub fn concept_dots(artifacts: &Artifacts) -> Vec<(String, String)> {
    artifacts
        .concepts
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let id = concept_id(i);
            (
                format!("concept_{id}.dot"),
                c.tree
                    .to_dot(&artifacts.attribute_names, &format!("{id} (powersum {})", c.powersum)),
            )
        })
        .collect()
}

/// The minterm × bit-level slice of every tensor cell as a `.cxt` document.
pub fn cell_contexts(bt: &BitTensor) -> Vec<(String, String)> {
    let ctx = TriadicContext::from_tensor(bt);
    let n = bt.n_atts();
    bt.cells()
        .iter()
        .enumerate()
        .map(|(ci, p)| {
            let objects = (0..bt.n_minterms()).map(|k| format!("mt{}", code(k, n))).collect();
            let attributes = (0..bt.n_bits()).map(|b| format!("bit{b}")).collect();
            let mut slice = DyadicContext::with_names(objects, attributes);
            for k in 0..bt.n_minterms() {
                for b in 0..bt.n_bits() as usize {
                    if ctx.contains(ci, k, b) {
                        slice.insert(k, b).expect("slice indices are in range");
                    }
                }
            }
            (format!("cell_{p}.cxt"), write_cxt(&slice, &format!("cell {p}")))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathContribution {
    pub formula: String,
    pub value: f64,
    pub weighted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeContribution {
    pub concept: String,
    pub powersum: u64,
    pub value: f64,
    pub weighted: f64,
    pub paths: Vec<PathContribution>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub values: Vec<f64>,
    pub cell: u32,
    pub cell_code: String,
    pub network_score: f64,
    pub network_class: bool,
    pub covered: bool,
    pub contributions: Vec<TreeContribution>,
    pub score: f64,
    pub tau_prime: Option<f64>,
    pub class: bool,
}

/// Decomposes the concept score of one object (already in `[0, 1]`) into tree and path terms.
pub fn explain(x: &AttributeVector, artifacts: &Artifacts) -> Result<Explanation> {
    let model = &artifacts.model;
    if x.len() != model.n_atts() {
        return Err(Error::range("attribute count", x.len(), model.n_atts()));
    }
    let mt = to_minterms(x);
    let p = model.relu_status(&mt)?;
    let raw = model.forward(&mt)?;
    let tau_prime = artifacts.tau_prime;
    let ts = score(x, p, &artifacts.concepts, tau_prime.unwrap_or(f64::INFINITY));
    let contributions = ts
        .concepts
        .iter()
        .map(|&i| {
            let c = &artifacts.concepts[i];
            let value = c.tree.eval(x);
            TreeContribution {
                concept: concept_id(i),
                powersum: c.powersum,
                value,
                weighted: c.powersum as f64 * value,
                paths: c
                    .tree
                    .leaf_paths()
                    .iter()
                    .map(|path| {
                        let v = path.eval(x);
                        PathContribution {
                            formula: path.render(&artifacts.attribute_names),
                            value: v,
                            weighted: c.powersum as f64 * v,
                        }
                    })
                    .collect(),
            }
        })
        .collect();
    let l = model.relu_count();
    Ok(Explanation {
        values: x.values().to_vec(),
        cell: p,
        cell_code: (0..l).map(|i| if relu_bit(p, i, l) { '1' } else { '0' }).collect(),
        network_score: raw,
        network_class: raw > model.threshold(),
        covered: ts.covered,
        contributions,
        score: ts.score,
        tau_prime,
        class: ts.class,
    })
}

impl Explanation {
    pub fn render_text(&self, names: &[String]) -> String {
        let mut out = String::new();
        let values: Vec<String> = names
            .iter()
            .zip(&self.values)
            .map(|(n, v)| format!("{n}={v:.4}"))
            .collect();
        let _ = writeln!(out, "object          {}", values.join(" "));
        let _ = writeln!(out, "partition cell  {} ({})", self.cell, self.cell_code);
        let _ = writeln!(
            out,
            "network score   {:.6} -> class {}",
            self.network_score, self.network_class as u8
        );
        if !self.covered {
            let _ = writeln!(out, "no concept covers this cell: score 0, fallback class 0");
            return out;
        }
        let width = self
            .contributions
            .iter()
            .flat_map(|c| &c.paths)
            .map(|p| p.formula.chars().count())
            .max()
            .unwrap_or(0);
        for c in &self.contributions {
            let _ = writeln!(
                out,
                "{} powersum {} x {:.6} = {:.6}",
                c.concept, c.powersum, c.value, c.weighted
            );
            for p in &c.paths {
                let _ = writeln!(out, "    {:<width$}  {:.6}  ({:.6})", p.formula, p.value, p.weighted);
            }
        }
        let _ = writeln!(
            out,
            "score           {:.6} vs tau' {:.6} -> class {}",
            self.score,
            self.tau_prime.unwrap_or(f64::NAN),
            self.class as u8
        );
        out
    }
}
