//! CSV ingestion, the model text format and the bit-tensor dump.

use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::minterm::AttributeVector;
use crate::network::{LabeledDataset, LabeledObject, Layer, SimpleAnnModel};
use crate::quantizer::BitTensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    /// Per-attribute `(v - min) / (max - min)`.
    #[default]
    MinMax,
    /// Values must already lie in `[0, 1]`.
    None,
}

impl std::str::FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "minmax" | "min-max" => Ok(Normalization::MinMax),
            "none" => Ok(Normalization::None),
            _ => Err(Error::Config(format!(
                "unknown normalization `{s}` (expected minmax or none)"
            ))),
        }
    }
}

/// Per-attribute affine map from raw values into `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub names: Vec<String>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Scaler {
    pub fn identity(names: Vec<String>) -> Self {
        let n = names.len();
        Scaler {
            names,
            min: vec![0.0; n],
            max: vec![1.0; n],
        }
    }

    /// Scales raw values, clamping anything outside the fitted range.
    pub fn apply(&self, raw: &[f64]) -> Result<AttributeVector> {
        if raw.len() != self.min.len() {
            return Err(Error::range("attribute count", raw.len(), self.min.len()));
        }
        let scaled = raw
            .iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(v, (lo, hi))| ((v - lo) / (hi - lo)).clamp(0.0, 1.0))
            .collect();
        AttributeVector::new(scaled)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ingested {
    pub data: LabeledDataset,
    pub scaler: Scaler,
    /// Rows read before balancing.
    pub raw_rows: usize,
}

/// Reads a headed CSV whose last column is a 0/1 target.
///
/// With `balance` set, the majority class is downsampled (seeded) to the minority size;
/// the kept rows stay in file order.
pub fn ingest_reader<R: Read>(reader: R, normalization: Normalization, balance: Option<u64>) -> Result<Ingested> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if headers.len() < 2 {
        return Err(Error::Ingest {
            column: headers.first().cloned().unwrap_or_default(),
            message: "need at least one attribute column and a target column".into(),
        });
    }
    let n = headers.len() - 1;
    let mut rows: Vec<(Vec<f64>, bool)> = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let line = i + 2;
        let mut values = Vec::with_capacity(n);
        for (j, column) in headers.iter().enumerate().take(n) {
            let cell = record.get(j).unwrap_or("");
            let v: f64 = cell.parse().map_err(|_| Error::Ingest {
                column: column.clone(),
                message: format!("non-numeric value `{cell}` on line {line}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Ingest {
                    column: column.clone(),
                    message: format!("non-finite value on line {line}"),
                });
            }
            values.push(v);
        }
        let cell = record.get(n).unwrap_or("");
        let target = match cell.parse::<f64>() {
            Ok(0.0) => false,
            Ok(1.0) => true,
            _ => {
                return Err(Error::Ingest {
                    column: headers[n].clone(),
                    message: format!("target `{cell}` on line {line} is not 0 or 1"),
                })
            }
        };
        rows.push((values, target));
    }
    if rows.is_empty() {
        return Err(Error::Ingest {
            column: headers[n].clone(),
            message: "no data rows".into(),
        });
    }

    let names: Vec<String> = headers[..n].to_vec();
    let scaler = match normalization {
        Normalization::None => Scaler::identity(names.clone()),
        Normalization::MinMax => {
            let mut min = vec![f64::INFINITY; n];
            let mut max = vec![f64::NEG_INFINITY; n];
            for (values, _) in &rows {
                for j in 0..n {
                    min[j] = min[j].min(values[j]);
                    max[j] = max[j].max(values[j]);
                }
            }
            if let Some(j) = (0..n).find(|&j| min[j] == max[j]) {
                return Err(Error::Ingest {
                    column: names[j].clone(),
                    message: format!("constant column (every value is {})", min[j]),
                });
            }
            Scaler {
                names: names.clone(),
                min,
                max,
            }
        }
    };

    let raw_rows = rows.len();
    let keep = match balance {
        Some(seed) => balanced_indices(&rows, seed),
        None => (0..rows.len()).collect(),
    };
    let objects = keep
        .into_iter()
        .map(|i| {
            let (values, target) = &rows[i];
            let values = match normalization {
                Normalization::MinMax => scaler.apply(values)?,
                Normalization::None => AttributeVector::new(values.clone()).map_err(|e| match e {
                    Error::Domain { index, value } => Error::Ingest {
                        column: names[index].clone(),
                        message: format!("value {value} on line {} outside [0, 1]", i + 2),
                    },
                    e => e,
                })?,
            };
            Ok(LabeledObject {
                values,
                target: *target,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Ingested {
        data: LabeledDataset::new(names, objects)?,
        scaler,
        raw_rows,
    })
}

fn balanced_indices(rows: &[(Vec<f64>, bool)], seed: u64) -> Vec<usize> {
    let (ones, zeros): (Vec<usize>, Vec<usize>) = (0..rows.len()).partition(|&i| rows[i].1);
    let (mut major, minor) = if ones.len() > zeros.len() {
        (ones, zeros)
    } else {
        (zeros, ones)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    major.shuffle(&mut rng);
    major.truncate(minor.len());
    let mut keep: Vec<usize> = major.into_iter().chain(minor).collect();
    keep.sort_unstable();
    keep
}

pub fn ingest(path: &Path, normalization: Normalization, balance: Option<u64>) -> Result<Ingested> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_reader(file, normalization, balance)
}

/// The dataset as CSV with its attribute names and a trailing `target` column.
pub fn dataset_to_csv(data: &LabeledDataset) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = data.attribute_names().to_vec();
    header.push("target".into());
    w.write_record(&header)?;
    for o in data.objects() {
        let mut row: Vec<String> = o.values.values().iter().map(|v| format!("{v}")).collect();
        row.push((o.target as u8).to_string());
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::io("<csv buffer>", e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

const MODEL_MAGIC: &str = "relu-tca-model 1";

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Text form of a model: a header, then every layer with its rows on separate lines.
///
/// ```text
/// relu-tca-model 1
/// n_atts 2
/// relu_count 1
/// threshold 2.0000000000000000e0
/// layers 1 0
/// layer 1 4
/// -8.0000000000000000e0 3.0000000000000000e0 6.0000000000000000e0 2.0000000000000000e0
/// ```
///
/// `layers` gives the counts below and above the ReLU layer.
pub fn write_model(model: &SimpleAnnModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MODEL_MAGIC}");
    let _ = writeln!(out, "n_atts {}", model.n_atts());
    let _ = writeln!(out, "relu_count {}", model.relu_count());
    let _ = writeln!(out, "threshold {}", fmt_f64(model.threshold()));
    let _ = writeln!(out, "layers {} {}", model.below().len(), model.above().len());
    for layer in model.below().iter().chain(model.above()) {
        let _ = writeln!(out, "layer {} {}", layer.rows(), layer.cols());
        for r in 0..layer.rows() {
            let row: Vec<String> = (0..layer.cols()).map(|c| fmt_f64(layer.get(r, c))).collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
    }
    out
}

pub fn parse_model(text: &str) -> Result<SimpleAnnModel> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let mut next = |what: &str| {
        lines.next().ok_or_else(|| Error::Parse {
            line: 0,
            message: format!("unexpected end of model, expected {what}"),
        })
    };
    let perr = |line: usize, message: String| Error::Parse { line, message };

    let (line, magic) = next("header")?;
    if magic != MODEL_MAGIC {
        return Err(perr(line, format!("expected `{MODEL_MAGIC}`")));
    }
    fn field<'a>(line: usize, text: &'a str, key: &str) -> Result<Vec<&'a str>> {
        let mut parts = text.split_whitespace();
        if parts.next() != Some(key) {
            return Err(Error::Parse {
                line,
                message: format!("expected `{key}`"),
            });
        }
        Ok(parts.collect())
    }
    fn num<T: std::str::FromStr>(line: usize, s: Option<&&str>) -> Result<T> {
        s.and_then(|s| s.parse().ok()).ok_or_else(|| Error::Parse {
            line,
            message: format!("invalid number `{}`", s.copied().unwrap_or("")),
        })
    }

    let (line, text) = next("n_atts")?;
    let n_atts: usize = num(line, field(line, text, "n_atts")?.first())?;
    let (line, text) = next("relu_count")?;
    let relu_count: usize = num(line, field(line, text, "relu_count")?.first())?;
    let (line, text) = next("threshold")?;
    let threshold: f64 = num(line, field(line, text, "threshold")?.first())?;
    let (line, text) = next("layers")?;
    let counts = field(line, text, "layers")?;
    let below_count: usize = num(line, counts.first())?;
    let above_count: usize = num(line, counts.get(1))?;

    let mut layers = Vec::new();
    for _ in 0..below_count + above_count {
        let (line, text) = next("layer")?;
        let dims = field(line, text, "layer")?;
        let rows: usize = num(line, dims.first())?;
        let cols: usize = num(line, dims.get(1))?;
        let mut weights = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let (line, text) = next("layer row")?;
            let row: Vec<&str> = text.split_whitespace().collect();
            if row.len() != cols {
                return Err(perr(line, format!("expected {cols} values, found {}", row.len())));
            }
            for v in &row {
                weights.push(num::<f64>(line, Some(v))?);
            }
        }
        layers.push(Layer::new(rows, cols, weights)?);
    }
    if let Some((line, _)) = lines.next() {
        return Err(perr(line, "trailing content after the last layer".into()));
    }
    let above = layers.split_off(below_count);
    let model = SimpleAnnModel::new(n_atts, layers, above, threshold)?;
    if model.relu_count() != relu_count {
        return Err(Error::Structure(format!(
            "header declares {relu_count} ReLU nodes but the layers give {}",
            model.relu_count()
        )));
    }
    Ok(model)
}

pub fn load_model(path: &Path) -> Result<SimpleAnnModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_model(&text)
}

/// Human-readable dump of the floored weights, one line per cell.
pub fn write_tensor(bt: &BitTensor) -> String {
    let q = bt.params();
    let mut out = String::new();
    let _ = writeln!(out, "relu-tca-tensor 1");
    let _ = writeln!(out, "n_atts {}", bt.n_atts());
    let _ = writeln!(out, "n_bits {}", bt.n_bits());
    let _ = writeln!(out, "range {} {}", fmt_f64(q.a), fmt_f64(q.b));
    let _ = writeln!(out, "epsilon {}", fmt_f64(q.epsilon));
    let _ = writeln!(out, "tau_prime {}", fmt_f64(bt.tau_prime()));
    let _ = writeln!(out, "cells {}", bt.cells().len());
    for (ci, p) in bt.cells().iter().enumerate() {
        let row: Vec<String> = bt.row(ci).iter().map(u32::to_string).collect();
        let _ = writeln!(out, "cell {p} support {} : {}", bt.supports()[ci], row.join(" "));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minmax_ingest() {
        let csv = "r,f,target\n1,10,1\n3,20,0\n2,30,0\n";
        let got = ingest_reader(csv.as_bytes(), Normalization::MinMax, None).unwrap();
        assert_eq!(got.data.attribute_names(), &["r".to_string(), "f".to_string()]);
        let xs: Vec<Vec<f64>> = got.data.objects().iter().map(|o| o.values.values().to_vec()).collect();
        assert_eq!(xs, vec![vec![0.0, 0.0], vec![1.0, 0.5], vec![0.5, 1.0]]);
        assert_eq!(got.data.targets(), vec![true, false, false]);
        assert_eq!(got.scaler.apply(&[5.0, 15.0]).unwrap().values(), &[1.0, 0.25]);
    }

    #[test]
    fn passthrough_ingest() {
        let csv = "a,b,y\n0.25,0.5,1\n0.75,1,0\n";
        let got = ingest_reader(csv.as_bytes(), Normalization::None, None).unwrap();
        assert_eq!(got.data.objects()[0].values.values(), &[0.25, 0.5]);
        let bad = "a,b,y\n0.25,1.5,1\n";
        match ingest_reader(bad.as_bytes(), Normalization::None, None) {
            Err(Error::Ingest { column, .. }) => assert_eq!(column, "b"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ingest_errors_name_the_column() {
        let cases = [
            ("a,b,y\n1,2,1\n1,3,0\n", "a"),
            ("a,b,y\n1,x,1\n2,3,0\n", "b"),
            ("a,b,y\n1,2,2\n2,3,0\n", "y"),
            ("a,b,y\n", "y"),
        ];
        for (csv, col) in cases {
            match ingest_reader(csv.as_bytes(), Normalization::MinMax, None) {
                Err(e @ Error::Ingest { .. }) => {
                    assert!(e.is_validation());
                    assert!(matches!(&e, Error::Ingest { column, .. } if column == col), "{e}");
                }
                other => panic!("unexpected {other:?}"),
            }
        }
    }

    #[test]
    fn balancing_is_seeded() {
        let mut csv = String::from("a,y\n");
        for i in 0..30 {
            csv.push_str(&format!("{i},{}\n", (i % 3 == 0) as u8));
        }
        let a = ingest_reader(csv.as_bytes(), Normalization::MinMax, Some(4)).unwrap();
        let b = ingest_reader(csv.as_bytes(), Normalization::MinMax, Some(4)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.data.class_counts(), (10, 10));
        assert_eq!(a.raw_rows, 30);
        let c = ingest_reader(csv.as_bytes(), Normalization::MinMax, Some(5)).unwrap();
        assert_ne!(a.data, c.data);
    }

    #[test]
    fn model_round_trip_is_byte_identical() {
        let below = vec![
            Layer::from_rows(&[vec![0.1, -0.2, 1.0 / 3.0, 4.0], vec![1e-300, 2.5, -7.0, 0.0]]).unwrap(),
            Layer::from_rows(&[vec![0.3, 0.7], vec![-1.1, 2.0], vec![0.5, 0.5]]).unwrap(),
        ];
        let above = vec![Layer::from_rows(&[vec![1.0, -2.0, std::f64::consts::PI]]).unwrap()];
        let model = SimpleAnnModel::new(2, below, above, 0.123456789).unwrap();
        let text = write_model(&model);
        let back = parse_model(&text).unwrap();
        assert_eq!(back, model);
        assert_eq!(write_model(&back), text);
    }

    #[test]
    fn worked_model_text() {
        let model = SimpleAnnModel::new(
            2,
            vec![Layer::from_rows(&[vec![-8.0, 3.0, 6.0, 2.0]]).unwrap()],
            vec![],
            2.0,
        )
        .unwrap();
        let text = write_model(&model);
        assert_eq!(
            text,
            "relu-tca-model 1\nn_atts 2\nrelu_count 1\nthreshold 2.0000000000000000e0\nlayers 1 0\nlayer 1 4\n\
             -8.0000000000000000e0 3.0000000000000000e0 6.0000000000000000e0 2.0000000000000000e0\n"
        );
    }

    #[test]
    fn malformed_models() {
        let good = "relu-tca-model 1\nn_atts 2\nrelu_count 1\nthreshold 2\nlayers 1 0\nlayer 1 4\n1 2 3 4\n";
        assert!(parse_model(good).is_ok());
        for bad in [
            "",
            "relu-tca-model 2\n",
            &good.replace("1 2 3 4", "1 2 3"),
            &good.replace("1 2 3 4", "1 2 x 4"),
            &good.replace("relu_count 1", "relu_count 2"),
            &format!("{good}1\n"),
            &good.replace("layer 1 4\n1 2 3 4\n", ""),
        ] {
            assert!(parse_model(bad).is_err(), "{bad:?}");
        }
    }
}
