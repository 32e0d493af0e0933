//! Fully-connected ReLU network mapping `(x, y, W, L)` of a UE in a
//! rectangular room to `(g_i, g_p)`.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analysis::{room_grid_eval, GridOptions};
use crate::error::{Error, Result};
use crate::geometry::RoomSpec;
use crate::propagation::Scenario;

pub const MODEL_HEADER: &str = "bwp-mlp v1";

/// Layer sizes of the default network.
pub const DEFAULT_LAYERS: [usize; 4] = [4, 30, 30, 2];

/// One labelled UE location.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    /// `(x, y, W, L)` in meters.
    pub input: [f64; 4],
    /// `(g_i, g_p)`.
    pub target: [f64; 2],
}

/// Labels every grid cell of every `(area, aspect ratio)` room.
pub fn generate_dataset(
    areas_m2: &[f64],
    aspect_ratios: &[f64],
    scenario: &Scenario,
    opts: &GridOptions,
) -> Result<Vec<Sample>> {
    let rooms = areas_m2
        .iter()
        .flat_map(|&a| aspect_ratios.iter().map(move |&r| (a, r)))
        .map(|(a, r)| RoomSpec::from_area_aspect(a, r))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();
    for room in rooms {
        let grid = room_grid_eval(room, scenario, opts)?;
        out.extend(grid.cells.iter().map(|c| Sample {
            input: [c.ue.x, c.ue.y, room.width(), room.length()],
            target: [c.g_i, c.g_p],
        }));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    sizes: Vec<usize>,
    /// Per layer, `out x in` row-major.
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
    input_mean: Vec<f64>,
    input_std: Vec<f64>,
    output_mean: Vec<f64>,
    output_std: Vec<f64>,
}

impl MlpModel {
    /// Uniform fan-in initialisation, `U(-sqrt(6/fan_in), sqrt(6/fan_in))`,
    /// zero biases and identity normalisation.
    pub fn new(sizes: &[usize], seed: u64) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::Argument {
                name: "layers",
                reason: format!("need at least two positive layer sizes, got {sizes:?}"),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for w in sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = (6.0 / fan_in as f64).sqrt();
            weights.push((0..fan_in * fan_out).map(|_| rng.random_range(-bound..bound)).collect());
            biases.push(vec![0.0; fan_out]);
        }
        let (n_in, n_out) = (sizes[0], sizes[sizes.len() - 1]);
        Ok(Self {
            sizes: sizes.to_vec(),
            weights,
            biases,
            input_mean: vec![0.0; n_in],
            input_std: vec![1.0; n_in],
            output_mean: vec![0.0; n_out],
            output_std: vec![1.0; n_out],
        })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn n_inputs(&self) -> usize {
        self.sizes[0]
    }

    pub fn n_outputs(&self) -> usize {
        self.sizes[self.sizes.len() - 1]
    }

    pub fn weights_mut(&mut self, layer: usize) -> &mut [f64] {
        &mut self.weights[layer]
    }

    pub fn biases_mut(&mut self, layer: usize) -> &mut [f64] {
        &mut self.biases[layer]
    }

    pub fn set_normalization(
        &mut self,
        input_mean: Vec<f64>,
        input_std: Vec<f64>,
        output_mean: Vec<f64>,
        output_std: Vec<f64>,
    ) -> Result<()> {
        let ok = |v: &[f64], n: usize, positive: bool| {
            v.len() == n && v.iter().all(|x| x.is_finite() && (!positive || *x > 0.0))
        };
        if !(ok(&input_mean, self.n_inputs(), false)
            && ok(&input_std, self.n_inputs(), true)
            && ok(&output_mean, self.n_outputs(), false)
            && ok(&output_std, self.n_outputs(), true))
        {
            return Err(Error::Numerical("normalization constants must be finite with positive scales".into()));
        }
        self.input_mean = input_mean;
        self.input_std = input_std;
        self.output_mean = output_mean;
        self.output_std = output_std;
        Ok(())
    }

    fn n_params(&self) -> usize {
        self.weights.iter().map(Vec::len).sum::<usize>() + self.biases.iter().map(Vec::len).sum::<usize>()
    }

    /// Output in original units for an input in original units.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.n_inputs() {
            return Err(Error::Shape {
                expected: self.n_inputs(),
                got: input.len(),
            });
        }
        let z: Vec<f64> = input
            .iter()
            .zip(self.input_mean.iter().zip(&self.input_std))
            .map(|(x, (m, s))| (x - m) / s)
            .collect();
        let y = self.forward_normalized(&z);
        Ok(y.iter()
            .zip(self.output_mean.iter().zip(&self.output_std))
            .map(|(y, (m, s))| y * s + m)
            .collect())
    }

    fn forward_normalized(&self, z: &[f64]) -> Vec<f64> {
        let mut a = z.to_vec();
        let last = self.weights.len() - 1;
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let n_in = self.sizes[l];
            let mut next: Vec<f64> = b.clone();
            for (o, v) in next.iter_mut().enumerate() {
                let row = &w[o * n_in..(o + 1) * n_in];
                *v += row.iter().zip(&a).map(|(w, x)| w * x).sum::<f64>();
                if l < last {
                    *v = v.max(0.0);
                }
            }
            a = next;
        }
        a
    }

    /// Adds `∂L/∂θ` for one normalized sample to `grad` (laid out as the
    /// weights then biases of each layer) and returns the squared error
    /// `Σ (y - t)²`.
    fn backprop(&self, z: &[f64], t: &[f64], scale: f64, grad: &mut [f64], acts: &mut Vec<Vec<f64>>) -> f64 {
        let last = self.weights.len() - 1;
        acts.clear();
        acts.push(z.to_vec());
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let n_in = self.sizes[l];
            let prev = &acts[l];
            let mut next: Vec<f64> = b.clone();
            for (o, v) in next.iter_mut().enumerate() {
                let row = &w[o * n_in..(o + 1) * n_in];
                *v += row.iter().zip(prev).map(|(w, x)| w * x).sum::<f64>();
                if l < last {
                    *v = v.max(0.0);
                }
            }
            acts.push(next);
        }
        let y = &acts[last + 1];
        let mut sq = 0.0;
        let mut delta: Vec<f64> = y
            .iter()
            .zip(t)
            .map(|(y, t)| {
                sq += (y - t) * (y - t);
                2.0 * (y - t) * scale
            })
            .collect();

        let offsets = self.offsets();
        for l in (0..=last).rev() {
            let n_in = self.sizes[l];
            let prev = &acts[l];
            let (w_off, b_off) = offsets[l];
            for (o, d) in delta.iter().enumerate() {
                if *d == 0.0 {
                    continue;
                }
                let g = &mut grad[w_off + o * n_in..w_off + (o + 1) * n_in];
                for (gi, x) in g.iter_mut().zip(prev) {
                    *gi += d * x;
                }
                grad[b_off + o] += d;
            }
            if l > 0 {
                let w = &self.weights[l];
                let mut back = vec![0.0; n_in];
                for (o, d) in delta.iter().enumerate() {
                    if *d == 0.0 {
                        continue;
                    }
                    for (bi, wv) in back.iter_mut().zip(&w[o * n_in..(o + 1) * n_in]) {
                        *bi += d * wv;
                    }
                }
                for (bi, a) in back.iter_mut().zip(prev) {
                    if *a <= 0.0 {
                        *bi = 0.0;
                    }
                }
                delta = back;
            }
        }
        sq
    }

    /// `(weights offset, biases offset)` of each layer in the flat gradient.
    fn offsets(&self) -> Vec<(usize, usize)> {
        let mut off = 0;
        self.weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| {
                let o = (off, off + w.len());
                off += w.len() + b.len();
                o
            })
            .collect()
    }

    fn param_mut(&mut self, mut k: usize) -> &mut f64 {
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            if k < w.len() {
                return &mut w[k];
            }
            k -= w.len();
            if k < b.len() {
                return &mut b[k];
            }
            k -= b.len();
        }
        panic!("parameter index out of range")
    }

    fn apply(&mut self, step: &[f64]) {
        let mut k = 0;
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            for v in w.iter_mut().chain(b.iter_mut()) {
                *v += step[k];
                k += 1;
            }
        }
    }

    /// Mean squared error on normalized pairs and its gradient.
    pub fn loss_and_gradient(&self, inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.n_params()];
        let scale = 1.0 / (inputs.len() * self.n_outputs()) as f64;
        let mut acts = Vec::new();
        let mut loss = 0.0;
        for (z, t) in inputs.iter().zip(targets) {
            loss += self.backprop(z, t, scale, &mut grad, &mut acts);
        }
        (loss * scale, grad)
    }

    fn loss(&self, inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> f64 {
        let scale = 1.0 / (inputs.len() * self.n_outputs()) as f64;
        inputs
            .iter()
            .zip(targets)
            .map(|(z, t)| {
                self.forward_normalized(z)
                    .iter()
                    .zip(t)
                    .map(|(y, t)| (y - t) * (y - t))
                    .sum::<f64>()
            })
            .sum::<f64>()
            * scale
    }
}

/// Largest relative difference between backpropagated and central-difference
/// gradients over all parameters, `|a - n| / max(|a|, |n|, floor)`.
pub fn gradient_check(model: &MlpModel, inputs: &[Vec<f64>], targets: &[Vec<f64>], step: f64) -> f64 {
    const FLOOR: f64 = 1e-7;
    let (_, analytic) = model.loss_and_gradient(inputs, targets);
    let mut probe = model.clone();
    let mut worst: f64 = 0.0;
    for (k, a) in analytic.iter().enumerate() {
        let orig = *probe.param_mut(k);
        *probe.param_mut(k) = orig + step;
        let up = probe.loss(inputs, targets);
        *probe.param_mut(k) = orig - step;
        let down = probe.loss(inputs, targets);
        *probe.param_mut(k) = orig;
        let numeric = (up - down) / (2.0 * step);
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(FLOOR);
        worst = worst.max(rel);
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub validation_fraction: f64,
    /// The step size follows a cosine from `learning_rate` down to
    /// `learning_rate * final_lr_fraction`.
    pub final_lr_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.02,
            momentum: 0.9,
            batch_size: 32,
            epochs: 600,
            seed: 42,
            validation_fraction: 0.2,
            final_lr_fraction: 0.01,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason: String| Err(Error::Argument { name, reason });
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning-rate", format!("must be positive, got {}", self.learning_rate));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum", format!("must lie in [0, 1), got {}", self.momentum));
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return bad("epochs", "batch size and epoch count must be positive".into());
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return bad("validation-fraction", format!("must lie in (0, 1), got {}", self.validation_fraction));
        }
        if !(self.final_lr_fraction > 0.0 && self.final_lr_fraction <= 1.0) {
            return bad("final-lr-fraction", format!("must lie in (0, 1], got {}", self.final_lr_fraction));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Normalized training MSE after each epoch.
    pub loss_curve: Vec<f64>,
    /// RMSE per output on the validation split, original units.
    pub validation_rmse: Vec<f64>,
    pub train_rmse: Vec<f64>,
    pub n_train: usize,
    pub n_validation: usize,
}

fn mean_std(rows: &[&[f64]], dim: usize) -> (Vec<f64>, Vec<f64>) {
    let n = rows.len() as f64;
    let mut mean = vec![0.0; dim];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r.iter()) {
            *m += v / n;
        }
    }
    let mut std = vec![0.0; dim];
    for r in rows {
        for ((s, v), m) in std.iter_mut().zip(r.iter()).zip(&mean) {
            *s += (v - m) * (v - m) / n;
        }
    }
    // A constant column gets unit scale.
    let std = std
        .into_iter()
        .map(|v| if v.sqrt() > 1e-12 { v.sqrt() } else { 1.0 })
        .collect();
    (mean, std)
}

/// Root-mean-square error per output, original units.
pub fn rmse(model: &MlpModel, data: &[Sample]) -> Result<Vec<f64>> {
    if data.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    let mut acc = vec![0.0; model.n_outputs()];
    for s in data {
        let y = model.forward(&s.input)?;
        for ((a, y), t) in acc.iter_mut().zip(&y).zip(&s.target) {
            *a += (y - t) * (y - t);
        }
    }
    Ok(acc.into_iter().map(|a| (a / data.len() as f64).sqrt()).collect())
}

/// Seeded split into `(train, validation)`.
pub fn split(data: &[Sample], validation_fraction: f64, seed: u64) -> (Vec<Sample>, Vec<Sample>) {
    let mut idx: Vec<usize> = (0..data.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    idx.shuffle(&mut rng);
    let n_val = ((data.len() as f64 * validation_fraction).round() as usize).min(data.len().saturating_sub(1));
    let (val, train) = idx.split_at(n_val);
    (
        train.iter().map(|&i| data[i]).collect(),
        val.iter().map(|&i| data[i]).collect(),
    )
}

/// Mini-batch gradient descent with momentum on the mean squared error of
/// normalized outputs. Normalization constants are fitted on the training
/// split.
pub fn train(mut model: MlpModel, data: &[Sample], cfg: &TrainConfig) -> Result<(MlpModel, TrainReport)> {
    cfg.validate()?;
    if model.n_inputs() != 4 || model.n_outputs() != 2 {
        return Err(Error::Shape {
            expected: 4,
            got: model.n_inputs(),
        });
    }
    if data.len() < 2 {
        return Err(Error::Empty("dataset"));
    }
    let (train_set, val_set) = split(data, cfg.validation_fraction, cfg.seed);
    let inputs: Vec<&[f64]> = train_set.iter().map(|s| &s.input[..]).collect();
    let targets: Vec<&[f64]> = train_set.iter().map(|s| &s.target[..]).collect();
    let (im, is) = mean_std(&inputs, 4);
    let (om, os) = mean_std(&targets, 2);
    model.set_normalization(im.clone(), is.clone(), om.clone(), os.clone())?;

    let z: Vec<Vec<f64>> = train_set
        .iter()
        .map(|s| s.input.iter().zip(im.iter().zip(&is)).map(|(x, (m, s))| (x - m) / s).collect())
        .collect();
    let t: Vec<Vec<f64>> = train_set
        .iter()
        .map(|s| s.target.iter().zip(om.iter().zip(&os)).map(|(x, (m, s))| (x - m) / s).collect())
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..z.len()).collect();
    let mut velocity = vec![0.0; model.n_params()];
    let mut loss_curve = Vec::with_capacity(cfg.epochs);
    let mut acts = Vec::new();
    let mut grad = vec![0.0; model.n_params()];
    for epoch in 0..cfg.epochs {
        let progress = epoch as f64 / cfg.epochs as f64;
        let lr = cfg.learning_rate
            * (cfg.final_lr_fraction + (1.0 - cfg.final_lr_fraction) * 0.5 * (1.0 + (std::f64::consts::PI * progress).cos()));
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let scale = 1.0 / (batch.len() * 2) as f64;
            for &i in batch {
                epoch_loss += model.backprop(&z[i], &t[i], scale, &mut grad, &mut acts);
            }
            for (v, g) in velocity.iter_mut().zip(&grad) {
                *v = cfg.momentum * *v - lr * g;
            }
            model.apply(&velocity);
        }
        let epoch_loss = epoch_loss / (z.len() * 2) as f64;
        if !epoch_loss.is_finite() {
            return Err(Error::Diverged {
                epoch,
                detail: format!("training loss became {epoch_loss} (learning rate {lr})"),
            });
        }
        loss_curve.push(epoch_loss);
    }
    let validation_rmse = if val_set.is_empty() {
        vec![f64::NAN; 2]
    } else {
        rmse(&model, &val_set)?
    };
    let report = TrainReport {
        loss_curve,
        validation_rmse,
        train_rmse: rmse(&model, &train_set)?,
        n_train: train_set.len(),
        n_validation: val_set.len(),
    };
    Ok((model, report))
}

/// Predictions for many inputs, in order.
pub fn predict_all(model: &MlpModel, inputs: &[[f64; 4]]) -> Result<Vec<Vec<f64>>> {
    inputs.par_iter().map(|x| model.forward(x)).collect()
}

pub fn format_model(model: &MlpModel) -> String {
    let mut out = String::new();
    let join = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(" ");
    let _ = writeln!(out, "{MODEL_HEADER}");
    let _ = writeln!(
        out,
        "layers {}",
        model.sizes.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
    );
    for (l, (w, b)) in model.weights.iter().zip(&model.biases).enumerate() {
        let n_in = model.sizes[l];
        let _ = writeln!(out, "layer {l}");
        for row in w.chunks(n_in) {
            let _ = writeln!(out, "w {}", join(row));
        }
        let _ = writeln!(out, "b {}", join(b));
    }
    let _ = writeln!(out, "input_mean {}", join(&model.input_mean));
    let _ = writeln!(out, "input_std {}", join(&model.input_std));
    let _ = writeln!(out, "output_mean {}", join(&model.output_mean));
    let _ = writeln!(out, "output_std {}", join(&model.output_std));
    out
}

pub fn parse_model(text: &str) -> Result<MlpModel> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let mut next = |what: &str| {
        lines
            .next()
            .ok_or_else(|| Error::parse(text.lines().count().max(1), format!("unexpected end of file, expected {what}")))
    };
    let (n, header) = next("header")?;
    if header != MODEL_HEADER {
        return Err(Error::parse(n, format!("expected header `{MODEL_HEADER}`, found `{header}`")));
    }
    let (n, line) = next("layer sizes")?;
    let sizes = record(n, line, "layers")?
        .iter()
        .map(|s| {
            s.parse::<usize>()
                .map_err(|_| Error::parse(n, format!("`{s}` is not a layer size")))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut model = MlpModel::new(&sizes, 0).map_err(|e| Error::parse(n, e.to_string()))?;
    for l in 0..sizes.len() - 1 {
        let (n, line) = next("layer")?;
        if line != format!("layer {l}") {
            return Err(Error::parse(n, format!("expected `layer {l}`, found `{line}`")));
        }
        let (n_in, n_out) = (sizes[l], sizes[l + 1]);
        for o in 0..n_out {
            let (n, line) = next("weight row")?;
            let row = numbers(n, line, "w", n_in)?;
            model.weights[l][o * n_in..(o + 1) * n_in].copy_from_slice(&row);
        }
        let (n, line) = next("biases")?;
        model.biases[l] = numbers(n, line, "b", n_out)?;
    }
    let (n_in, n_out) = (model.n_inputs(), model.n_outputs());
    let mut norm = Vec::new();
    let mut last = 1;
    for (key, len) in [("input_mean", n_in), ("input_std", n_in), ("output_mean", n_out), ("output_std", n_out)] {
        let (n, line) = next(key)?;
        last = n;
        norm.push(numbers(n, line, key, len)?);
    }
    let mut it = norm.into_iter();
    let (a, b, c, d) = (it.next().unwrap(), it.next().unwrap(), it.next().unwrap(), it.next().unwrap());
    model
        .set_normalization(a, b, c, d)
        .map_err(|e| Error::parse(last, e.to_string()))?;
    if let Some((n, line)) = lines.next() {
        return Err(Error::parse(n, format!("unexpected trailing content `{line}`")));
    }
    Ok(model)
}

fn record<'a>(n: usize, line: &'a str, key: &str) -> Result<Vec<&'a str>> {
    let mut fields = line.split_whitespace();
    if fields.next() != Some(key) {
        return Err(Error::parse(n, format!("expected `{key} ...`, found `{line}`")));
    }
    Ok(fields.collect())
}

fn numbers(n: usize, line: &str, key: &str, len: usize) -> Result<Vec<f64>> {
    let values = record(n, line, key)?
        .iter()
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| Error::parse(n, format!("`{s}` is not a number")))
        })
        .collect::<Result<Vec<_>>>()?;
    if values.len() != len {
        return Err(Error::parse(n, format!("`{key}` needs {len} values, found {}", values.len())));
    }
    Ok(values)
}
