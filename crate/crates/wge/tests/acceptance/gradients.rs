use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wge_core::dataset::{LabeledBatch, Triple};
use wge_core::decoder;
use wge_core::encoder::{ModelGraphs, Variant};
use wge_core::graph::{build_entity_focused, renormalize};
use wge_core::optim::ParamId;
use wge_core::tape::{Tape, Var};
use wge_core::tensor::Tensor;
use wge_core::train::{Model, TrainConfig};

use crate::{check, within, Status};

const STEP: f64 = 1e-6;
const TOL: f64 = 1e-4;

fn random(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor {
    Tensor::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
}

/// Values bounded away from zero, for kinked functions.
fn away_from_zero(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor {
    Tensor::from_fn(rows, cols, |_, _| rng.gen_range(0.1..1.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 })
}

fn norm(xs: impl Iterator<Item = f64>) -> f64 {
    xs.map(|x| x * x).sum::<f64>().sqrt()
}

fn relative_error(analytic: &Tensor, numeric: &Tensor) -> f64 {
    let diff = norm(analytic.data().iter().zip(numeric.data()).map(|(a, b)| a - b));
    let scale = norm(analytic.data().iter().copied()).max(norm(numeric.data().iter().copied())).max(1e-8);
    diff / scale
}

/// Reduces `out` to a scalar as `Σ c ⊙ out` with fixed pseudo-random `c`.
fn reduce(tape: &mut Tape<'_>, out: Var) -> Var {
    let (rows, cols) = tape.value(out).shape();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let c = tape.constant(Tensor::from_fn(rows, cols, |_, _| rng.gen_range(0.5..1.5)));
    let weighted = tape.mul(out, c);
    tape.sum(weighted)
}

/// Worst relative error over all inputs of `build`.
fn primitive<'a>(inputs: Vec<Tensor>, build: impl Fn(&mut Tape<'a>, &[Var]) -> Var) -> f64 {
    let eval = |values: &[Tensor]| {
        let mut tape = Tape::new();
        let vars: Vec<Var> = values.iter().enumerate().map(|(n, v)| tape.param(ParamId(n), v.clone())).collect();
        let out = build(&mut tape, &vars);
        let loss = reduce(&mut tape, out);
        (tape, vars, loss)
    };
    let (tape, vars, loss) = eval(&inputs);
    let grads = tape.backward(loss).expect("backward");
    let mut worst = 0.0f64;
    for (n, input) in inputs.iter().enumerate() {
        let analytic = grads.wrt(vars[n]).cloned().unwrap_or_else(|| Tensor::zeros(input.rows(), input.cols()));
        let mut numeric = Tensor::zeros(input.rows(), input.cols());
        for at in 0..input.len() {
            let shifted = |delta: f64| {
                let mut values = inputs.to_vec();
                values[n].data_mut()[at] += delta;
                let (tape, _, loss) = eval(&values);
                tape.value(loss).item()
            };
            numeric.data_mut()[at] = (shifted(STEP) - shifted(-STEP)) / (2.0 * STEP);
        }
        worst = worst.max(relative_error(&analytic, &numeric));
    }
    worst
}

fn five_triple_loss() -> f64 {
    let train: Vec<Triple> =
        [(0, 0, 1), (1, 1, 2), (2, 0, 3), (3, 1, 4), (1, 0, 3)].map(|(h, r, t)| Triple::new(h, r, t)).to_vec();
    let mut triples = train.clone();
    let mut labels = vec![1.0; train.len()];
    for (h, r, t) in [(4, 0, 0), (2, 1, 0), (3, 0, 1), (0, 1, 4)] {
        triples.push(Triple::new(h, r, t));
        labels.push(0.0);
    }
    let batch = LabeledBatch { triples, labels };
    let mut worst = 0.0f64;
    for variant in Variant::ALL {
        let config = TrainConfig { variant, layers: 2, dim: 2, beta: 0.5, seed: 5, ..TrainConfig::default() };
        let graphs = ModelGraphs::build(variant, 5, 2, &train, config.beta).expect("graphs");
        let mut model = Model::init(&config, &graphs, 5, 2).expect("model");
        let mut tape = Tape::new();
        let layers = model.encoder.forward(&mut tape, &model.params, &graphs);
        let loss = decoder::record_loss(&mut tape, &layers, &model.weights, &batch).expect("loss");
        let grads = tape.backward(loss).expect("backward");
        model.params.zero_grad();
        model.params.accumulate(&tape, &grads);
        let ids: Vec<ParamId> = model.params.iter().map(|(id, _, _)| id).collect();
        for id in ids {
            let analytic = model.params.get(id).grad.clone();
            let mut numeric = Tensor::zeros(analytic.rows(), analytic.cols());
            for at in 0..analytic.len() {
                let mut shifted = |delta: f64| {
                    model.params.get_mut(id).value.data_mut()[at] += delta;
                    let l = decoder::loss(&model.encode(&graphs), &model.weights, &batch).expect("loss");
                    model.params.get_mut(id).value.data_mut()[at] -= delta;
                    l
                };
                numeric.data_mut()[at] = (shifted(STEP) - shifted(-STEP)) / (2.0 * STEP);
            }
            worst = worst.max(relative_error(&analytic, &numeric));
        }
    }
    worst
}

pub fn criterion() -> Status {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let kg: Vec<Triple> = [(0, 0, 1), (1, 0, 2), (2, 1, 3), (3, 1, 0)].map(|(h, r, t)| Triple::new(h, r, t)).to_vec();
    let adj = renormalize(&build_entity_focused(5, &kg));
    let adj = &adj;
    let mut r = |rows, cols| random(&mut rng, rows, cols);
    let (x58, y58, x38, y38, w38) = (r(5, 8), r(2, 8), r(3, 8), r(3, 8), r(3, 8));
    let (x35, w45, x34, y34) = (r(3, 5), r(4, 5), r(3, 4), r(3, 4));
    let (ent48, rel28, logits) = (r(4, 8), r(2, 8), r(6, 1));
    let kinked = away_from_zero(&mut rng, 3, 4);

    let checks: Vec<(&str, f64)> = vec![
        ("gather", primitive(vec![x58.clone()], |t, v| t.gather_rows(v[0], vec![0, 2, 2, 4, 1]))),
        (
            "select",
            primitive(vec![x38.clone(), y58.clone()], |t, v| {
                t.select_rows(&[v[0], v[1]], vec![(0, 1), (1, 0), (0, 1), (1, 1)])
            }),
        ),
        ("spmm", primitive(vec![x58.clone()], |t, v| t.spmm(adj, v[0]))),
        ("quat_linear", primitive(vec![x38.clone(), w38.clone()], |t, v| t.quat_linear(v[0], v[1]))),
        ("linear", primitive(vec![x35, w45], |t, v| t.linear(v[0], v[1]))),
        ("tanh", primitive(vec![x34.clone()], |t, v| t.tanh(v[0]))),
        ("relu", primitive(vec![kinked], |t, v| t.relu(v[0]))),
        ("sigmoid", primitive(vec![x34.clone()], |t, v| t.sigmoid(v[0]))),
        ("mul", primitive(vec![x34.clone(), y34.clone()], |t, v| t.mul(v[0], v[1]))),
        ("add", primitive(vec![x34.clone(), y34], |t, v| t.add(v[0], v[1]))),
        ("scale", primitive(vec![x34.clone()], |t, v| t.scale(v[0], -1.7))),
        ("sum", primitive(vec![x34], |t, v| t.sum(v[0]))),
        ("quat_normalize", primitive(vec![x38.clone()], |t, v| t.quat_normalize(v[0]).expect("non-zero entries"))),
        ("hamilton", primitive(vec![x38.clone(), y38.clone()], |t, v| t.hamilton(v[0], v[1]))),
        ("row_inner", primitive(vec![x38, y38], |t, v| t.row_inner(v[0], v[1]))),
        (
            "triple_scores",
            primitive(vec![ent48, rel28], |t, v| {
                t.triple_scores(v[0], v[1], vec![(0, 0, 1), (1, 1, 2), (3, 0, 3), (2, 1, 0)])
            }),
        ),
        (
            "bce_with_logits",
            primitive(vec![logits], |t, v| t.bce_with_logits(v[0], vec![1.0, 0.0, 1.0, 0.0, 0.0, 1.0])),
        ),
        ("full loss, 5-triple KG, all variants", five_triple_loss()),
    ];
    let worst = checks.iter().map(|c| c.1).fold(0.0, f64::max);
    let failing: Vec<&str> = checks.iter().filter(|c| c.1.is_nan() || c.1 >= TOL).map(|c| c.0).collect();
    let detail = if failing.is_empty() {
        format!("{} checks, worst rel err {worst:.1e} (<{TOL:e})", checks.len())
    } else {
        format!("rel err >= {TOL:e} for {}", failing.join(", "))
    };
    within(check(failing.is_empty(), detail), started.elapsed(), Duration::from_secs(60))
}
