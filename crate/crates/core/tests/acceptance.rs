//! Acceptance criteria, one test per criterion. Each prints a single PASS or FAIL line;
//! run with `--nocapture --test-threads=1` to see them in order.

use std::collections::HashSet;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use num_rational::Ratio;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relu_tca::fca::{
    concepts_from_singletons, excl_triconcepts, CellObjects, DyadicConcept, DyadicContext, Selection, SelectionMethod,
};
use relu_tca::minterm::{to_minterms, AttributeVector, MintermVector};
use relu_tca::network::{cell_weights_from_atoms, enumerate_cells, LabeledDataset, Layer, SimpleAnnModel, TrainParams};
use relu_tca::pipeline::{run_pipeline, PipelineConfig};
use relu_tca::qldt::{build_tree, score, ConceptTree};
use relu_tca::quantizer::{build_bit_tensor, fit_params, BitTensor, QuantizationParams};
use relu_tca::shapley::{coalition_minterm, shapley_global, shapley_values};

type Outcome = Result<String, String>;

fn report(id: u32, name: &str, outcome: Outcome) {
    match outcome {
        Ok(detail) => println!("PASS  criterion {id:>2}  {name}: {detail}"),
        Err(detail) => {
            println!("FAIL  criterion {id:>2}  {name}: {detail}");
            panic!("criterion {id} failed: {detail}");
        }
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn random_x(rng: &mut ChaCha8Rng, n: usize) -> AttributeVector {
    AttributeVector::new((0..n).map(|_| rng.random::<f64>()).collect()).unwrap()
}

fn random_layer(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Layer {
    Layer::new(
        rows,
        cols,
        (0..rows * cols).map(|_| rng.random_range(-2.0..2.0)).collect(),
    )
    .unwrap()
}

fn worked_model() -> SimpleAnnModel {
    SimpleAnnModel::new(
        2,
        vec![Layer::from_rows(&[vec![-8.0, 3.0, 6.0, 2.0]]).unwrap()],
        vec![],
        2.0,
    )
    .unwrap()
}

fn worked_example() -> Outcome {
    let start = Instant::now();
    let model = worked_model();
    let xs = [vec![0.8, 0.1], vec![0.5, 0.6]];
    let expected_mt = [[0.18, 0.02, 0.72, 0.08], [0.2, 0.3, 0.2, 0.3]];
    let data =
        LabeledDataset::from_rows(&[(xs[0].clone(), true), (xs[1].clone(), false)]).map_err(|e| e.to_string())?;

    let cells = enumerate_cells(&model, &data).map_err(|e| e.to_string())?;
    ensure(cells.len() == 1 && cells[0].number == 1, || {
        format!("expected the single active cell, got {cells:?}")
    })?;
    let params = fit_params(&cells, 2, Some(1e-3)).map_err(|e| e.to_string())?;
    let bt = build_bit_tensor(&cells, params, 2.0).map_err(|e| e.to_string())?;
    ensure(bt.row(0) == [0, 3, 3, 2], || {
        format!("quantized weights {:?}", bt.row(0))
    })?;
    ensure(close(bt.tau_prime(), 2.35, 0.02), || {
        format!("tau' = {}", bt.tau_prime())
    })?;

    let concepts = excl_triconcepts(&bt, Selection::new(SelectionMethod::M1), None).map_err(|e| e.to_string())?;
    type Shape = (Vec<usize>, Vec<usize>, Vec<usize>, u64);
    let shape: Vec<Shape> = concepts
        .iter()
        .map(|c| {
            (
                c.concept.cells.clone(),
                c.concept.minterms.clone(),
                c.concept.levels.clone(),
                c.power,
            )
        })
        .collect();
    let want = vec![(vec![0], vec![1, 2], vec![0, 1], 6), (vec![0], vec![3], vec![1], 2)];
    ensure(shape == want, || format!("exclusive concepts {shape:?}"))?;
    let trees = concepts
        .iter()
        .map(|c| ConceptTree::from_concept(&c.concept, &bt))
        .collect::<relu_tca::Result<Vec<_>>>()
        .map_err(|e| e.to_string())?;

    let raw_want = [3.1, 1.1];
    let quant_want = [2.38, 2.1];
    let class_want = [true, false];
    for (i, x) in xs.iter().enumerate() {
        let x = AttributeVector::new(x.clone()).map_err(|e| e.to_string())?;
        let mt = to_minterms(&x);
        ensure(
            mt.values()
                .iter()
                .zip(&expected_mt[i])
                .all(|(a, b)| close(*a, *b, 1e-12)),
            || format!("minterms of object {i}: {:?}", mt.values()),
        )?;
        let raw = model.forward(&mt).map_err(|e| e.to_string())?;
        ensure(close(raw, raw_want[i], 1e-9), || format!("raw score {i} = {raw}"))?;
        let p = model.relu_status(&mt).map_err(|e| e.to_string())?;
        let q = bt.score(p, &mt).map_err(|e| e.to_string())?;
        ensure(close(q, quant_want[i], 1e-9), || format!("quantized score {i} = {q}"))?;
        let t = score(&x, p, &trees, bt.tau_prime());
        ensure(close(t.score, quant_want[i], 1e-9), || {
            format!("tree score {i} = {}", t.score)
        })?;
        ensure((raw > model.threshold()) == class_want[i], || {
            format!("raw class of object {i}")
        })?;
        ensure(bt.classify(p, &mt).map_err(|e| e.to_string())? == class_want[i], || {
            format!("quantized class of object {i}")
        })?;
        ensure(t.class == class_want[i], || format!("tree class of object {i}"))?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "scores 3.1/1.1 -> 2.38/2.1, tau' {:.4}, powers 6 and 2, {elapsed:.2?}",
        bt.tau_prime()
    ))
}

#[test]
fn criterion_01_worked_example() {
    report(1, "worked example", worked_example());
}

fn dyadic_table() -> Outcome {
    // objects g1..g3, attributes m1..m3
    let ctx = DyadicContext::from_pairs(3, 3, &[(1, 0), (1, 1), (2, 1), (0, 2), (1, 2), (2, 2)])
        .map_err(|e| e.to_string())?;
    let got = concepts_from_singletons(&ctx);
    let want = vec![
        DyadicConcept {
            extent: vec![0, 1, 2],
            intent: vec![2],
        },
        DyadicConcept {
            extent: vec![1],
            intent: vec![0, 1, 2],
        },
        DyadicConcept {
            extent: vec![1, 2],
            intent: vec![1, 2],
        },
    ];
    ensure(got == want, || format!("got {got:?}"))?;
    Ok("({g1,g2,g3},{m3}), ({g2},{m1,m2,m3}), ({g2,g3},{m2,m3})".into())
}

#[test]
fn criterion_02_dyadic_concepts() {
    report(2, "dyadic singleton concepts", dyadic_table());
}

fn random_model(rng: &mut ChaCha8Rng, n: usize, l: usize) -> SimpleAnnModel {
    let below = vec![random_layer(rng, l, 1 << n)];
    let above = if l == 1 && rng.random_bool(0.5) {
        vec![]
    } else {
        vec![random_layer(rng, 1, l)]
    };
    SimpleAnnModel::new(n, below, above, rng.random_range(-1.0..1.0)).unwrap()
}

fn score_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut instances, mut checked, mut worst) = (0, 0usize, 0.0f64);
    let mut attempts = 0;
    while instances < 250 {
        attempts += 1;
        ensure(attempts < 10_000, || "could not draw enough instances".into())?;
        let n = rng.random_range(1..=4);
        let l = rng.random_range(1..=3);
        let n_bits = rng.random_range(1..=5);
        let model = random_model(&mut rng, n, l);
        let rows: Vec<(Vec<f64>, bool)> = (0..40)
            .map(|_| (random_x(&mut rng, n).values().to_vec(), rng.random_bool(0.5)))
            .collect();
        let data = LabeledDataset::from_rows(&rows).unwrap();
        let cells = enumerate_cells(&model, &data).map_err(|e| e.to_string())?;
        let Ok(params) = fit_params(&cells, n_bits, None) else {
            continue;
        };
        let bt = build_bit_tensor(&cells, params, model.threshold()).map_err(|e| e.to_string())?;
        let method = SelectionMethod::ALL[instances % 4];
        let items: Vec<(u32, MintermVector, bool)> = data
            .objects()
            .iter()
            .map(|o| {
                let mt = to_minterms(&o.values);
                (model.relu_status(&mt).unwrap(), mt, o.target)
            })
            .collect();
        let objects = CellObjects::new(&bt, items.clone());
        let selection = Selection {
            method,
            support_weighted: rng.random_bool(0.5),
        };
        let concepts = excl_triconcepts(&bt, selection, Some(&objects)).map_err(|e| e.to_string())?;
        let trees = concepts
            .iter()
            .map(|c| ConceptTree::from_concept(&c.concept, &bt))
            .collect::<relu_tca::Result<Vec<_>>>()
            .map_err(|e| e.to_string())?;
        for (o, (p, mt, _)) in data.objects().iter().zip(&items) {
            let expected = bt.score(*p, mt).map_err(|e| e.to_string())?;
            let got = score(&o.values, *p, &trees, bt.tau_prime());
            // a cell whose floors are all zero has no set bit and no concept
            if !got.covered {
                ensure(expected == 0.0, || {
                    format!("uncovered object with bit-tensor score {expected}")
                })?;
                continue;
            }
            let gap = (got.score - expected).abs();
            worst = worst.max(gap);
            ensure(gap <= 1e-9, || {
                format!(
                    "n={n} l={l} bits={n_bits} {method:?}: tree {} vs tensor {expected}",
                    got.score
                )
            })?;
            checked += 1;
        }
        instances += 1;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "{instances} instances, {checked} objects, max gap {worst:.2e}, {elapsed:.2?}"
    ))
}

#[test]
fn criterion_03_score_equivalence() {
    report(3, "score equivalence", score_equivalence());
}

fn quantization_error() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let samples = 100_000;
    let mut lines = Vec::new();
    let mut failures = Vec::new();
    for &(a, b, n_bits) in &[(-8.0, 6.0, 2), (-1.0, 1.0, 4), (0.0, 3.5, 7), (-2.5, 10.0, 5)] {
        let q = QuantizationParams::new(a, b, n_bits, None).map_err(|e| e.to_string())?;
        let bound = (b - a) / f64::from(1u32 << (n_bits + 1));
        let quarter = (b - a) / f64::from(1u32 << (n_bits + 2));
        let (mut max, mut sum, mut violations) = (0.0f64, 0.0, 0usize);
        for _ in 0..samples {
            let v = rng.random_range(a..=b);
            let back = q
                .reconstruct(q.quantize(v).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?;
            let err = (v - back).abs();
            max = max.max(err);
            sum += err;
            violations += usize::from(err > bound);
        }
        let mean = sum / samples as f64;
        let mean_ok = (mean - quarter).abs() <= 0.1 * quarter;
        let line = format!(
            "[{a},{b}] {n_bits} bits: max {max:.6} vs bound {bound:.6} ({violations} over), mean {mean:.6} vs {quarter:.6}"
        );
        if violations > 0 || !mean_ok {
            failures.push(line.clone());
        }
        lines.push(line);
    }
    if failures.is_empty() {
        Ok(lines.join("; "))
    } else {
        Err(failures.join("; "))
    }
}

#[test]
fn criterion_04_quantization_error() {
    report(4, "quantization error bounds", quantization_error());
}

fn random_tensor(rng: &mut ChaCha8Rng) -> BitTensor {
    let k1 = rng.random_range(1..=4);
    let n = rng.random_range(1..=4);
    let n_bits = rng.random_range(1..=7);
    let params = QuantizationParams::new(0.0, 1.0, n_bits, None).unwrap();
    let density = rng.random_range(0.1..0.9);
    let values = (0..k1 << n)
        .map(|_| {
            (0..n_bits)
                .filter(|_| rng.random_bool(density))
                .map(|bl| 1u32 << bl)
                .sum()
        })
        .collect();
    let supports = (0..k1).map(|_| rng.random_range(1..20)).collect();
    let cells = (0..k1 as u32).map(|c| 2 * c + 1).collect();
    BitTensor::from_floors(cells, supports, n, values, params, 0.5).unwrap()
}

fn exclusive_cover() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut runs = 0;
    let mut total_concepts = 0;
    while runs < 200 {
        let bt = random_tensor(&mut rng);
        if bt.power() == 0 {
            continue;
        }
        let method = SelectionMethod::ALL[runs % 4];
        let items: Vec<(u32, MintermVector, bool)> = bt
            .cells()
            .iter()
            .flat_map(|&p| (0..3).map(move |_| p))
            .map(|p| (p, to_minterms(&random_x(&mut rng, bt.n_atts())), rng.random_bool(0.5)))
            .collect();
        let objects = CellObjects::new(&bt, items);
        let selection = Selection {
            method,
            support_weighted: runs % 8 >= 4,
        };
        let concepts = excl_triconcepts(&bt, selection, Some(&objects)).map_err(|e| e.to_string())?;
        let mut seen = HashSet::new();
        for c in &concepts {
            for &x1 in &c.concept.cells {
                for &x2 in &c.concept.minterms {
                    for &x3 in &c.concept.levels {
                        ensure(bt.bit(x1, x2, x3 as u32), || {
                            format!("{method:?}: cuboid holds an unset bit")
                        })?;
                        ensure(seen.insert((x1, x2, x3)), || {
                            format!("{method:?}: cuboids overlap at {:?}", (x1, x2, x3))
                        })?;
                    }
                }
            }
        }
        let mut set_bits = 0;
        for ci in 0..bt.cells().len() {
            for k in 0..bt.n_minterms() {
                set_bits += (0..bt.n_bits()).filter(|&bl| bt.bit(ci, k, bl)).count();
            }
        }
        ensure(seen.len() == set_bits, || {
            format!("{method:?}: {} of {set_bits} bits covered", seen.len())
        })?;
        let sum = concepts.iter().fold(Ratio::<u128>::zero(), |acc, c| acc + c.relpower);
        ensure(sum.is_one(), || format!("{method:?}: relpowers sum to {sum}"))?;
        total_concepts += concepts.len();
        runs += 1;
    }
    Ok(format!(
        "{runs} tensors up to 4x16x7, {total_concepts} cuboids, relpowers sum to exactly 1"
    ))
}

#[test]
fn criterion_05_exclusive_cover() {
    report(5, "exclusive cover", exclusive_cover());
}

fn atomic_additivity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut models, mut cells, mut worst) = (0, 0usize, 0.0f64);
    for _ in 0..120 {
        let n = rng.random_range(1..=4);
        let l = rng.random_range(1..=6);
        // optional extra linear layers on either side of the ReLU layer
        let mut below = Vec::new();
        let mut width = 1 << n;
        if rng.random_bool(0.3) {
            let h = rng.random_range(1..=5);
            below.push(random_layer(&mut rng, h, width));
            width = h;
        }
        below.push(random_layer(&mut rng, l, width));
        let mut above = Vec::new();
        let mut width = l;
        if rng.random_bool(0.3) {
            let h = rng.random_range(1..=5);
            above.push(random_layer(&mut rng, h, width));
            width = h;
        }
        above.push(random_layer(&mut rng, 1, width));
        let model = SimpleAnnModel::new(n, below, above, 0.0).map_err(|e| e.to_string())?;
        let atoms = model.atomic_weights();
        for p in 0..1u32 << l {
            let direct = model.cell_weights(p).map_err(|e| e.to_string())?;
            let summed = cell_weights_from_atoms(&atoms, p);
            for (d, s) in direct.iter().zip(&summed) {
                worst = worst.max((d - s).abs());
                ensure(close(*d, *s, 1e-9), || format!("l={l} p={p}: {d} vs {s}"))?;
            }
            cells += 1;
        }
        models += 1;
    }
    Ok(format!("{models} models, {cells} cells, max gap {worst:.2e}"))
}

#[test]
fn criterion_06_atomic_additivity() {
    report(6, "atomic additivity", atomic_additivity());
}

fn check_tree(set: &[usize], n: usize, rng: &mut ChaCha8Rng, worst: &mut f64) -> Result<(), String> {
    let tree = build_tree(set, n).map_err(|e| e.to_string())?;
    for _ in 0..50 {
        let x = random_x(rng, n);
        let got = tree.eval(&x);
        let want = to_minterms(&x).mass(set.iter().copied());
        *worst = worst.max((got - want).abs());
        ensure(close(got, want, 1e-12), || format!("n={n} X2={set:?}: {got} vs {want}"))?;
    }
    Ok(())
}

fn tree_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut sets, mut worst) = (0, 0.0f64);
    for n in 1..=3 {
        let m = 1usize << n;
        for bits in 0..1u64 << m {
            let set: Vec<usize> = (0..m).filter(|k| bits >> k & 1 == 1).collect();
            check_tree(&set, n, &mut rng, &mut worst)?;
            sets += 1;
        }
    }
    for n in 4..=5 {
        let m = 1usize << n;
        for _ in 0..500 {
            let density = rng.random::<f64>();
            let set: Vec<usize> = (0..m).filter(|_| rng.random_bool(density)).collect();
            check_tree(&set, n, &mut rng, &mut worst)?;
            sets += 1;
        }
    }
    Ok(format!("{sets} minterm sets, 50 points each, max gap {worst:.2e}"))
}

#[test]
fn criterion_07_tree_exactness() {
    report(7, "tree exactness", tree_exactness());
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Average marginal contribution over all `n!` orderings.
fn permutation_oracle(mw: &[f64], n: usize) -> Vec<f64> {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut out = vec![0.0; n];
    let mut visit = |perm: &[usize]| {
        let mut mask = 0;
        for &i in perm {
            let before = mw[coalition_minterm(mask, n)];
            mask |= 1 << i;
            out[i] += mw[coalition_minterm(mask, n)] - before;
        }
    };
    // Heap's algorithm
    let mut c = vec![0; n];
    visit(&perm);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            let j = if i % 2 == 0 { 0 } else { c[i] };
            perm.swap(j, i);
            visit(&perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    let total = factorial(n);
    out.iter().map(|v| v / total).collect()
}

fn shapley() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for round in 0..300 {
        let n = rng.random_range(1..=5);
        let m = 1usize << n;
        let exact: Vec<Ratio<i128>> = (0..m)
            .map(|_| Ratio::new(rng.random_range(-1000..=1000), rng.random_range(1..=64)))
            .collect();
        let sh = shapley_values(&exact, n).map_err(|e| e.to_string())?;
        let sum = sh.iter().fold(Ratio::zero(), |acc, v| acc + v);
        ensure(sum == exact[m - 1] - exact[0], || {
            format!("round {round}: efficiency {sum} vs {}", exact[m - 1] - exact[0])
        })?;

        let mw: Vec<f64> = (0..m).map(|_| rng.random_range(-10.0..10.0)).collect();
        let fast = shapley_values(&mw, n).map_err(|e| e.to_string())?;
        let oracle = permutation_oracle(&mw, n);
        for (f, o) in fast.iter().zip(&oracle) {
            worst = worst.max((f - o).abs());
            ensure(close(*f, *o, 1e-9), || {
                format!("round {round}: {fast:?} vs oracle {oracle:?}")
            })?;
        }
    }
    let table = shapley_global(&[-8.0, 3.0, 6.0, 2.0], 2, 1).map_err(|e| e.to_string())?;
    ensure(table.values == [6.5, 3.5], || {
        format!("worked cell gives {:?}", table.values)
    })?;
    Ok(format!(
        "exact efficiency on 300 games, oracle gap {worst:.2e}, worked cell (6.5, 3.5)"
    ))
}

#[test]
fn criterion_08_shapley() {
    report(8, "Shapley values", shapley());
}

fn transfusion() -> Outcome {
    let start = Instant::now();
    let data = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/transfusion_synthetic.csv");
    let mut best = 0.0f64;
    let mut runs = Vec::new();
    for seed in 0..5 {
        let config = PipelineConfig {
            data: Some(data.clone()),
            balance: true,
            n_bits: 7,
            train: TrainParams {
                relu_count: 5,
                seed,
                ..TrainParams::default()
            },
            ..PipelineConfig::default()
        };
        let run = run_pipeline(&config).map_err(|e| format!("seed {seed}: {e}"))?;
        let training = run
            .report
            .training
            .as_ref()
            .ok_or("no training report")?
            .training_accuracy;
        let cov = &run.report.coverage;
        let (Some(concept), Some(quantized)) = (cov.concept_accuracy_covered, cov.quantized_accuracy_covered) else {
            return Err(format!("seed {seed}: no covered objects"));
        };
        ensure((concept - quantized).abs() <= 0.01, || {
            format!("seed {seed}: concept accuracy {concept:.4} vs quantized {quantized:.4}")
        })?;
        best = best.max(training);
        runs.push(format!("{seed}:{:.1}%", 100.0 * training));
    }
    let elapsed = start.elapsed();
    ensure(best >= 0.70, || {
        format!("best training accuracy {best:.4} over seeds [{}]", runs.join(" "))
    })?;
    ensure(elapsed < Duration::from_secs(120), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "training accuracy by seed [{}], concept = quantized on covered objects, {elapsed:.1?}",
        runs.join(" ")
    ))
}

#[test]
fn criterion_09_transfusion() {
    report(9, "transfusion end to end", transfusion());
}

fn minterm_normalization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst = 0.0f64;
    for i in 0..10_000 {
        let n = rng.random_range(1..=10);
        let x = random_x(&mut rng, n);
        let total: f64 = to_minterms(&x).values().iter().sum();
        worst = worst.max((total - 1.0).abs());
        ensure(close(total, 1.0, 1e-9), || format!("vector {i}: sum {total}"))?;
    }
    Ok(format!("10000 vectors, max deviation {worst:.2e}"))
}

#[test]
fn criterion_10_minterm_normalization() {
    report(10, "minterm normalization", minterm_normalization());
}
