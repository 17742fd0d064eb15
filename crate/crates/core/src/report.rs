//! Machine-readable report types and their table rendering.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::fca::SelectionMethod;
use crate::network::TrainReport;
use crate::qldt::{Direction, PathMetrics};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub summary: Summary,
    pub training: Option<TrainReport>,
    pub cells: Vec<CellRow>,
    /// Cover relation of the essential cells ordered by inclusion of their active ReLU sets.
    pub cell_poset: Vec<(u32, u32)>,
    pub shapley: Vec<ShapleyRow>,
    pub concepts: Vec<ConceptRow>,
    pub concept_implications: Vec<(String, String)>,
    pub path_implications: Vec<PathEdge>,
    pub coverage: Coverage,
    pub notes: Vec<String>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub attribute_names: Vec<String>,
    pub objects: usize,
    pub class_counts: (usize, usize),
    pub relu_count: usize,
    pub threshold: f64,
    pub tau_prime: Option<f64>,
    pub n_bits: u32,
    pub epsilon: Option<f64>,
    pub weight_range: Option<(f64, f64)>,
    pub min_support: usize,
    pub require_mixed: bool,
    pub method: SelectionMethod,
    pub support_weighted: bool,
    pub tensor_energy: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRow {
    pub number: u32,
    pub code: String,
    pub essential: bool,
    pub count_0: usize,
    pub count_1: usize,
    pub mw: Vec<f64>,
    /// Floored weights, for essential cells.
    pub quantized: Option<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapleyRow {
    pub cell: u32,
    pub code: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptRow {
    pub id: String,
    pub cells: Vec<u32>,
    pub minterms: Vec<usize>,
    pub minterm_codes: Vec<String>,
    pub levels: Vec<usize>,
    pub powersum: u64,
    pub power: u64,
    /// Exact share of the tensor energy as `num/den`.
    pub relpower: String,
    pub relpower_value: f64,
    pub selection_score: f64,
    pub support: usize,
    pub threshold: f64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub accuracy: Option<f64>,
    pub paths: Vec<PathRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRow {
    pub formula: String,
    pub metrics: PathMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathEdge {
    pub left: String,
    pub right: String,
    pub direction: Direction,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    pub objects: usize,
    /// Objects whose partition cell is essential.
    pub covered: usize,
    pub network_accuracy: Option<f64>,
    pub network_accuracy_covered: Option<f64>,
    pub quantized_accuracy_covered: Option<f64>,
    pub concept_accuracy_covered: Option<f64>,
    /// Concept scores on all objects, uncovered ones counted as class 0.
    pub concept_accuracy_all: Option<f64>,
    /// Largest gap between the concept score and the bit-tensor score of a covered object.
    pub max_score_gap: f64,
    pub decision_agreement: Option<f64>,
}

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.digits$}"))
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{:.1}%", 100.0 * v))
}

fn table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
            .collect();
        format!("  {}\n", padded.join("  ").trim_end())
    };
    let mut out = line(headers.to_vec());
    out.push_str(&line(
        widths
            .iter()
            .map(|w| "-".repeat(*w))
            .collect::<Vec<_>>()
            .iter()
            .map(String::as_str)
            .collect(),
    ));
    for row in rows {
        out.push_str(&line(row.iter().map(String::as_str).collect()));
    }
    out
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn render_text(&self) -> String {
        let s = &self.summary;
        let mut out = String::new();
        let _ = writeln!(out, "ReLU network interpretation");
        let _ = writeln!(out, "===========================");
        let _ = writeln!(out, "attributes      {}", s.attribute_names.join(", "));
        let _ = writeln!(
            out,
            "objects         {} (class 0: {}, class 1: {})",
            s.objects, s.class_counts.0, s.class_counts.1
        );
        let _ = writeln!(out, "ReLU nodes      {}", s.relu_count);
        let _ = writeln!(out, "threshold       {:.6}", s.threshold);
        if let Some(t) = s.tau_prime {
            let _ = writeln!(out, "quantized tau   {t:.6}");
        }
        if let (Some((a, b)), Some(eps)) = (s.weight_range, s.epsilon) {
            let _ = writeln!(
                out,
                "quantization    {} bits over [{a:.6}, {b:.6}], epsilon {eps:.3e}",
                s.n_bits
            );
        }
        let _ = writeln!(
            out,
            "selection       {} ({}){}, min support {}{}",
            s.method,
            s.method.description(),
            if s.support_weighted {
                ", support-weighted energy"
            } else {
                ""
            },
            s.min_support,
            if s.require_mixed { ", mixed classes only" } else { "" }
        );
        let _ = writeln!(out, "tensor energy   {}", s.tensor_energy);
        if let Some(t) = &self.training {
            let _ = writeln!(
                out,
                "training        {} epochs, loss {:.5} -> best {:.5} (epoch {}), accuracy {:.1}%{}",
                t.epochs_run,
                t.initial_loss,
                t.best_loss,
                t.best_epoch,
                100.0 * t.training_accuracy,
                if t.diverged { ", diverged" } else { "" }
            );
        }
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }

        let _ = writeln!(out, "\nPartition cells");
        let rows: Vec<Vec<String>> = self
            .cells
            .iter()
            .map(|c| {
                vec![
                    c.number.to_string(),
                    c.code.clone(),
                    if c.essential { "*".into() } else { String::new() },
                    c.count_0.to_string(),
                    c.count_1.to_string(),
                    c.mw.iter().map(|w| format!("{w:.3}")).collect::<Vec<_>>().join(" "),
                    c.quantized.as_ref().map_or_else(String::new, |q| {
                        q.iter().map(u32::to_string).collect::<Vec<_>>().join(" ")
                    }),
                ]
            })
            .collect();
        out.push_str(&table(&["p", "code", "ess", "#0", "#1", "mw", "quantized"], &rows));

        if !self.cell_poset.is_empty() {
            let _ = writeln!(out, "\nCell order (fewer active nodes below more)");
            for (p, q) in &self.cell_poset {
                let _ = writeln!(out, "  {p} < {q}");
            }
        }

        if !self.shapley.is_empty() {
            let _ = writeln!(out, "\nShapley values");
            let mut headers = vec!["p", "code"];
            headers.extend(s.attribute_names.iter().map(String::as_str));
            let rows: Vec<Vec<String>> = self
                .shapley
                .iter()
                .map(|r| {
                    let mut row = vec![r.cell.to_string(), r.code.clone()];
                    row.extend(r.values.iter().map(|v| format!("{v:.4}")));
                    row
                })
                .collect();
            out.push_str(&table(&headers, &rows));
        }

        let _ = writeln!(out, "\nExclusive concepts");
        let rows: Vec<Vec<String>> = self
            .concepts
            .iter()
            .map(|c| {
                vec![
                    c.id.clone(),
                    format!(
                        "{{{}}}",
                        c.cells.iter().map(u32::to_string).collect::<Vec<_>>().join(",")
                    ),
                    format!("{{{}}}", c.minterm_codes.join(",")),
                    format!(
                        "{{{}}}",
                        c.levels.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
                    ),
                    c.power.to_string(),
                    format!("{:.2}%", 100.0 * c.relpower_value),
                    pct(c.precision),
                    pct(c.recall),
                    pct(c.accuracy),
                    c.support.to_string(),
                ]
            })
            .collect();
        out.push_str(&table(
            &[
                "id",
                "cells",
                "minterms",
                "levels",
                "power",
                "relpower",
                "precision",
                "recall",
                "accuracy",
                "support",
            ],
            &rows,
        ));

        if self.concepts.iter().any(|c| !c.paths.is_empty()) {
            let _ = writeln!(out, "\nLeaf paths");
            let rows: Vec<Vec<String>> = self
                .concepts
                .iter()
                .flat_map(|c| {
                    c.paths.iter().map(move |p| {
                        let m = &p.metrics;
                        vec![
                            c.id.clone(),
                            p.formula.clone(),
                            pct(m.precision),
                            pct(m.recall),
                            format!("{:.1}%", 100.0 * m.accuracy),
                            m.covered_minterms.to_string(),
                            opt(m.avg0, 3),
                            opt(m.avg1, 3),
                        ]
                    })
                })
                .collect();
            out.push_str(&table(
                &[
                    "concept",
                    "path",
                    "precision",
                    "recall",
                    "accuracy",
                    "#mt",
                    "0-avg",
                    "1-avg",
                ],
                &rows,
            ));
        }

        if !self.concept_implications.is_empty() {
            let _ = writeln!(out, "\nConcept implications");
            for (a, b) in &self.concept_implications {
                let _ = writeln!(out, "  {a} -> {b}");
            }
        }
        if !self.path_implications.is_empty() {
            let _ = writeln!(out, "\nPath implications");
            for e in &self.path_implications {
                let arrow = match e.direction {
                    Direction::Forward => "->",
                    Direction::Backward => "<-",
                    Direction::Equivalent => "<->",
                };
                let _ = writeln!(out, "  {}  {arrow}  {}", e.left, e.right);
            }
        }

        let c = &self.coverage;
        let _ = writeln!(out, "\nCoverage");
        let _ = writeln!(out, "  covered objects             {} of {}", c.covered, c.objects);
        let _ = writeln!(out, "  network accuracy            {}", pct(c.network_accuracy));
        let _ = writeln!(out, "  network accuracy (covered)  {}", pct(c.network_accuracy_covered));
        let _ = writeln!(
            out,
            "  quantized accuracy          {}",
            pct(c.quantized_accuracy_covered)
        );
        let _ = writeln!(out, "  concept accuracy            {}", pct(c.concept_accuracy_covered));
        let _ = writeln!(out, "  concept accuracy (all)      {}", pct(c.concept_accuracy_all));
        let _ = writeln!(out, "  decision agreement          {}", pct(c.decision_agreement));
        let _ = writeln!(out, "  max score gap               {:.3e}", c.max_score_gap);

        if !self.notes.is_empty() {
            let _ = writeln!(out, "\nNotes");
            for n in &self.notes {
                let _ = writeln!(out, "  - {n}");
            }
        }
        out
    }
}
