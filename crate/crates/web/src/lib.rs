//! WebAssembly entry points for the browser demo. Every function takes plain numbers or
//! comma-separated lists and returns a JSON string; errors come back as messages.

use relu_tca::io::Scaler;
use relu_tca::minterm::{bitcode_of, to_minterms, AttributeVector};
use relu_tca::network::{LabeledDataset, Layer, SimpleAnnModel};
use relu_tca::pipeline::{explain, interpret, PipelineConfig};
use relu_tca::qldt::build_tree;
use relu_tca::quantizer::QuantizationParams;
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn numbers(text: &str, what: &str) -> Result<Vec<f64>, String> {
    text.split([',', ' '])
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| format!("{what}: `{s}` is not a number"))
        })
        .collect()
}

fn to_json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

fn n_from_len(len: usize) -> Result<usize, String> {
    if len < 2 || !len.is_power_of_two() {
        return Err(format!("need 2^n minterm weights, got {len}"));
    }
    Ok(len.trailing_zeros() as usize)
}

#[derive(Serialize)]
struct ObjectView {
    values: Vec<f64>,
    minterms: Vec<f64>,
    network_score: f64,
    network_class: bool,
    tree_score: f64,
    tree_class: bool,
    covered: bool,
    contributions: Vec<f64>,
}

#[derive(Serialize)]
struct ConceptView {
    minterms: Vec<String>,
    levels: Vec<usize>,
    powersum: u64,
    power: u64,
    relpower: String,
    paths: Vec<String>,
}

#[derive(Serialize)]
struct CellView {
    floors: Vec<u32>,
    tau_prime: Option<f64>,
    range: Option<(f64, f64)>,
    shapley: Vec<f64>,
    concepts: Vec<ConceptView>,
    objects: Vec<ObjectView>,
}

/// Interprets a network with one ReLU node whose minterm weights are `weights`.
///
/// `objects` holds attribute vectors separated by `;`. A non-positive `epsilon` selects the default.
#[wasm_bindgen]
pub fn explore_cell(weights: &str, n_bits: u32, tau: f64, epsilon: f64, objects: &str) -> Result<String, String> {
    let mw = numbers(weights, "weights")?;
    let n = n_from_len(mw.len())?;
    let model = SimpleAnnModel::new(
        n,
        vec![Layer::new(1, mw.len(), mw).map_err(|e| e.to_string())?],
        vec![],
        tau,
    )
    .map_err(|e| e.to_string())?;
    let mut xs = Vec::new();
    for part in objects.split(';').filter(|s| !s.trim().is_empty()) {
        xs.push(AttributeVector::new(numbers(part, "object")?).map_err(|e| e.to_string())?);
    }
    if xs.is_empty() {
        return Err("give at least one object".into());
    }
    // objects are labelled by the network itself
    let rows = xs
        .iter()
        .map(|x| {
            let s = model.forward(&to_minterms(x)).map_err(|e| e.to_string())?;
            Ok((x.values().to_vec(), s > tau))
        })
        .collect::<Result<Vec<_>, String>>()?;
    let data = LabeledDataset::from_rows(&rows).map_err(|e| e.to_string())?;
    let config = PipelineConfig {
        n_bits,
        epsilon: (epsilon > 0.0).then_some(epsilon),
        min_support: Some(1),
        ..PipelineConfig::default()
    };
    let run = interpret(
        &model,
        &data,
        Scaler::identity(data.attribute_names().to_vec()),
        &config,
        None,
    )
    .map_err(|e| e.to_string())?;
    let objects = xs
        .iter()
        .map(|x| {
            let e = explain(x, &run.artifacts).map_err(|e| e.to_string())?;
            Ok(ObjectView {
                values: x.values().to_vec(),
                minterms: to_minterms(x).values().to_vec(),
                network_score: e.network_score,
                network_class: e.network_class,
                tree_score: e.score,
                tree_class: e.class,
                covered: e.covered,
                contributions: e.contributions.iter().map(|c| c.weighted).collect(),
            })
        })
        .collect::<Result<Vec<_>, String>>()?;
    let r = &run.report;
    let view = CellView {
        floors: run.bit_tensor.as_ref().map(|bt| bt.row(0).to_vec()).unwrap_or_default(),
        tau_prime: r.summary.tau_prime,
        range: r.summary.weight_range,
        shapley: r.shapley.first().map(|s| s.values.clone()).unwrap_or_default(),
        concepts: r
            .concepts
            .iter()
            .map(|c| ConceptView {
                minterms: c.minterm_codes.clone(),
                levels: c.levels.clone(),
                powersum: c.powersum,
                power: c.power,
                relpower: c.relpower.clone(),
                paths: c.paths.iter().map(|p| p.formula.clone()).collect(),
            })
            .collect(),
        objects,
    };
    to_json(&view)
}

#[derive(Serialize)]
struct CurveView {
    levels: u32,
    epsilon: f64,
    points: Vec<(f64, f64)>,
    max_error: f64,
    mean_error: f64,
    quarter_step: f64,
    nominal_bound: f64,
    error_bound: f64,
}

/// Quantize-then-reconstruct over `samples` evenly spaced points of `[a, b]`.
#[wasm_bindgen]
pub fn quantizer_curve(a: f64, b: f64, n_bits: u32, epsilon: f64, samples: u32) -> Result<String, String> {
    let q = QuantizationParams::new(a, b, n_bits, (epsilon > 0.0).then_some(epsilon)).map_err(|e| e.to_string())?;
    let samples = samples.clamp(2, 1_000_000) as usize;
    let stride = samples.div_ceil(512);
    let (mut max_error, mut sum) = (0.0f64, 0.0);
    let mut points = Vec::new();
    for i in 0..samples {
        let v = a + (b - a) * i as f64 / (samples - 1) as f64;
        let back = q
            .reconstruct(q.quantize(v).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let err = (v - back).abs();
        max_error = max_error.max(err);
        sum += err;
        if i % stride == 0 || i == samples - 1 {
            points.push((v, back));
        }
    }
    let width = b - a;
    to_json(&CurveView {
        levels: q.levels(),
        epsilon: q.epsilon,
        points,
        max_error,
        mean_error: sum / samples as f64,
        quarter_step: width / 2f64.powi(n_bits as i32 + 2),
        nominal_bound: q.nominal_error_bound(),
        error_bound: q.error_bound(),
    })
}

#[derive(Serialize)]
struct PathView {
    formula: String,
    depth: usize,
    covered_minterms: usize,
    value: f64,
}

#[derive(Serialize)]
struct TreeView {
    minterms: Vec<String>,
    paths: Vec<PathView>,
    value: f64,
    minterm_mass: f64,
    dot: String,
}

/// Builds the tree of a minterm set over `n` attributes and evaluates it at `x`.
#[wasm_bindgen]
pub fn tree_builder(minterms: &str, n: u32, x: &str) -> Result<String, String> {
    let n = n as usize;
    let set = minterms
        .split([',', ' '])
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            let s = s.trim();
            // bit codes like 011 are accepted alongside plain ids
            if s.len() == n && n > 1 && s.chars().all(|c| c == '0' || c == '1') {
                usize::from_str_radix(s, 2).map_err(|e| e.to_string())
            } else {
                s.parse::<usize>().map_err(|_| format!("`{s}` is not a minterm id"))
            }
        })
        .collect::<Result<Vec<_>, String>>()?;
    let tree = build_tree(&set, n).map_err(|e| e.to_string())?;
    let x = AttributeVector::new(numbers(x, "object")?).map_err(|e| e.to_string())?;
    if x.len() != n {
        return Err(format!("object has {} values, expected {n}", x.len()));
    }
    let names: Vec<String> = (1..=n).map(|j| format!("a{j}")).collect();
    let paths = tree
        .leaf_paths()
        .iter()
        .map(|p| PathView {
            formula: p.render(&names),
            depth: p.depth(),
            covered_minterms: p.covered_minterms(n),
            value: p.eval(&x),
        })
        .collect();
    let mut ids = tree.minterms();
    ids.dedup();
    to_json(&TreeView {
        minterms: ids
            .iter()
            .map(|&k| bitcode_of(k, n).map(|c| c.to_string()).unwrap_or_default())
            .collect(),
        paths,
        value: tree.eval(&x),
        minterm_mass: to_minterms(&x).mass(ids.iter().copied()),
        dot: tree.to_dot(&names, "tree"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    fn parse(s: Result<String, String>) -> Value {
        serde_json::from_str(&s.unwrap()).unwrap()
    }

    #[test]
    fn worked_cell() {
        let v = parse(explore_cell("-8,3,6,2", 2, 2.0, 1e-3, "0.8,0.1; 0.5,0.6"));
        assert_eq!(v["floors"], serde_json::json!([0, 3, 3, 2]));
        assert_eq!(v["concepts"][0]["power"], 6);
        assert_eq!(v["concepts"][1]["relpower"], "1/4");
        let s1 = v["objects"][0]["tree_score"].as_f64().unwrap();
        let s2 = v["objects"][1]["tree_score"].as_f64().unwrap();
        assert!((s1 - 2.38).abs() < 1e-9 && (s2 - 2.1).abs() < 1e-9);
        assert!((v["objects"][0]["network_score"].as_f64().unwrap() - 3.1).abs() < 1e-9);
        assert_eq!(v["shapley"], serde_json::json!([6.5, 3.5]));
    }

    #[test]
    fn cell_input_errors() {
        assert!(explore_cell("1,2,3", 2, 0.0, 0.0, "0.1,0.2").is_err());
        assert!(explore_cell("1,2,3,4", 2, 0.0, 0.0, "").is_err());
        assert!(explore_cell("1,2,3,4", 2, 0.0, 0.0, "0.1,1.2").is_err());
        assert!(explore_cell("1,x,3,4", 2, 0.0, 0.0, "0.1,0.2").is_err());
    }

    #[test]
    fn curve_statistics() {
        let v = parse(quantizer_curve(-8.0, 6.0, 2, 0.0, 10_000));
        assert_eq!(v["levels"], 4);
        assert!(v["points"].as_array().unwrap().len() <= 513);
        let mean = v["mean_error"].as_f64().unwrap();
        let quarter = v["quarter_step"].as_f64().unwrap();
        assert!((mean - quarter).abs() / quarter < 0.1);
        let max = v["max_error"].as_f64().unwrap();
        // the top of the range lands past the nominal half step
        assert!(max > v["nominal_bound"].as_f64().unwrap());
        assert!(max <= v["error_bound"].as_f64().unwrap() * (1.0 + 1e-9));
        assert!(quantizer_curve(1.0, 1.0, 2, 0.0, 10).is_err());
    }

    #[test]
    fn xor_tree() {
        let v = parse(tree_builder("01,10", 2, "0.8,0.1"));
        assert_eq!(v["paths"].as_array().unwrap().len(), 2);
        assert!((v["value"].as_f64().unwrap() - 0.74).abs() < 1e-12);
        assert_eq!(v["value"], v["minterm_mass"]);
        assert!(v["dot"].as_str().unwrap().contains("dashed"));
        let ids = parse(tree_builder("1 2", 2, "0.8 0.1"));
        assert_eq!(ids["minterms"], v["minterms"]);
        assert!(tree_builder("4", 2, "0.1,0.2").is_err());
        assert!(tree_builder("1", 2, "0.1").is_err());
    }
}
