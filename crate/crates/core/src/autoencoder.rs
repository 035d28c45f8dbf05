//! Single-hidden-layer autoencoder over binary matrix rows.
//!
//! Each matrix row is one training sample. The encoder is
//! `h = ReLU(w_in·x + b_in)`, the decoder `x' = σ(w_out·h + b_out)`, and the
//! reconstruction loss is binary cross-entropy summed over the row. Training
//! uses mini-batch Adam in 64-bit floats. After training, the hidden code of
//! every row is the compressed word embedding.

use std::io::{self, BufRead, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, SparseBinaryMatrix};

/// Probability clamp used by the loss so `log` never sees 0 or 1.
pub const LOSS_EPSILON: f64 = 1e-7;

/// Batches are split into this many fixed parts for parallel gradient
/// accumulation; fixed so the reduction order never depends on thread count.
const GRADIENT_PARTS: usize = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub dim: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_epsilon: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            dim: 100,
            learning_rate: 1e-3,
            epochs: 100,
            batch_size: 128,
            seed: 0,
            beta1: 0.9,
            beta2: 0.999,
            adam_epsilon: 1e-8,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.dim == 0 {
            return bad("autoencoder dim must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be a positive number");
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return bad("epochs and batch_size must be positive");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("beta1 and beta2 must lie in [0, 1)");
        }
        Ok(())
    }
}

/// Encoder and decoder weights. `w_in` is `d × n` and `w_out` is `n × d`,
/// both row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct AeParams {
    pub n: usize,
    pub d: usize,
    pub w_in: Vec<f64>,
    pub b_in: Vec<f64>,
    pub w_out: Vec<f64>,
    pub b_out: Vec<f64>,
}

impl AeParams {
    pub fn zeros(n: usize, d: usize) -> Self {
        Self {
            n,
            d,
            w_in: vec![0.0; d * n],
            b_in: vec![0.0; d],
            w_out: vec![0.0; n * d],
            b_out: vec![0.0; n],
        }
    }

    fn parts(&self) -> [&[f64]; 4] {
        [&self.w_in, &self.b_in, &self.w_out, &self.b_out]
    }

    fn parts_mut(&mut self) -> [&mut [f64]; 4] {
        [&mut self.w_in, &mut self.b_in, &mut self.w_out, &mut self.b_out]
    }

    fn add_assign(&mut self, other: &AeParams) {
        for (dst, src) in self.parts_mut().into_iter().zip(other.parts()) {
            dst.iter_mut().zip(src).for_each(|(a, b)| *a += b);
        }
    }

    fn scale(&mut self, factor: f64) {
        for part in self.parts_mut() {
            part.iter_mut().for_each(|v| *v *= factor);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.parts().iter().all(|p| p.iter().all(|v| v.is_finite()))
    }

    fn check_shapes(&self) -> Result<()> {
        let (n, d) = (self.n, self.d);
        if self.w_in.len() != d * n
            || self.b_in.len() != d
            || self.w_out.len() != n * d
            || self.b_out.len() != n
        {
            return Err(Error::ShapeMismatch(format!(
                "autoencoder parameters inconsistent with n={n}, d={d}"
            )));
        }
        Ok(())
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "ae-params v1")?;
        writeln!(out, "n {}", self.n)?;
        writeln!(out, "d {}", self.d)?;
        let mut block = |name: &str, values: &[f64], width: usize| -> io::Result<()> {
            writeln!(out, "{name}")?;
            for row in values.chunks(width.max(1)) {
                let line: Vec<String> = row.iter().map(f64::to_string).collect();
                writeln!(out, "{}", line.join(" "))?;
            }
            Ok(())
        };
        block("w_in", &self.w_in, self.n)?;
        block("b_in", &self.b_in, self.d)?;
        block("w_out", &self.w_out, self.d)?;
        block("b_out", &self.b_out, self.n)?;
        Ok(())
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().enumerate();
        let mut next = |expect: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((i, line)) => Ok((i + 1, line?)),
                None => Err(Error::Parse {
                    line: 0,
                    msg: format!("unexpected end of file, expected {expect}"),
                }),
            }
        };
        let (line, header) = next("header")?;
        if header.trim() != "ae-params v1" {
            return Err(Error::Parse {
                line,
                msg: "not an ae-params v1 file".into(),
            });
        }
        let mut field = |name: &str| -> Result<usize> {
            let (line, text) = next(name)?;
            text.strip_prefix(name)
                .and_then(|v| v.trim().parse().ok())
                .ok_or(Error::Parse {
                    line,
                    msg: format!("expected `{name} <int>`"),
                })
        };
        let n = field("n")?;
        let d = field("d")?;
        let mut params = AeParams::zeros(n, d);
        for (name, width) in [("w_in", n), ("b_in", d), ("w_out", d), ("b_out", n)] {
            let (line, text) = next(name)?;
            if text.trim() != name {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected section {name}"),
                });
            }
            let target = match name {
                "w_in" => &mut params.w_in,
                "b_in" => &mut params.b_in,
                "w_out" => &mut params.w_out,
                _ => &mut params.b_out,
            };
            let rows = target.len() / width.max(1);
            for r in 0..rows {
                let (line, text) = next(name)?;
                let values: Vec<f64> = text
                    .split_whitespace()
                    .map(str::parse)
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| Error::Parse {
                        line,
                        msg: format!("{e}"),
                    })?;
                if values.len() != width {
                    return Err(Error::DimInconsistent {
                        line,
                        expected: width,
                        found: values.len(),
                    });
                }
                target[r * width..(r + 1) * width].copy_from_slice(&values);
            }
        }
        Ok(params)
    }
}

/// Uniform Glorot initialisation for both weight matrices, zero biases.
pub fn init_params(n: usize, d: usize, seed: u64) -> AeParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let limit = (6.0 / (n + d) as f64).sqrt();
    let mut params = AeParams::zeros(n, d);
    for w in params.w_in.iter_mut().chain(params.w_out.iter_mut()) {
        *w = rng.random_range(-limit..=limit);
    }
    params
}

#[derive(Clone, Debug, PartialEq)]
pub struct Activations {
    pub hidden: Vec<f64>,
    pub output: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn active_indices(x: &[f64]) -> Vec<u32> {
    x.iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, _)| i as u32)
        .collect()
}

/// Pre-activation of the hidden layer for a binary input given by its ones.
fn hidden_pre(params: &AeParams, active: &[u32]) -> Vec<f64> {
    let n = params.n;
    (0..params.d)
        .map(|j| {
            let row = &params.w_in[j * n..(j + 1) * n];
            params.b_in[j] + active.iter().map(|&i| row[i as usize]).sum::<f64>()
        })
        .collect()
}

fn decode(params: &AeParams, hidden: &[f64]) -> Vec<f64> {
    let d = params.d;
    (0..params.n)
        .map(|k| {
            let row = &params.w_out[k * d..(k + 1) * d];
            let z = params.b_out[k] + row.iter().zip(hidden).map(|(w, h)| w * h).sum::<f64>();
            sigmoid(z)
        })
        .collect()
}

fn forward_active(params: &AeParams, active: &[u32]) -> Result<Activations> {
    let hidden: Vec<f64> = hidden_pre(params, active)
        .into_iter()
        .map(|v| v.max(0.0))
        .collect();
    if hidden.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteActivation { layer: "hidden" });
    }
    let output = decode(params, &hidden);
    if output.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteActivation { layer: "output" });
    }
    Ok(Activations { hidden, output })
}

/// Runs the network on a binary input vector of length `n`.
pub fn forward(params: &AeParams, x: &[f64]) -> Result<Activations> {
    if x.len() != params.n {
        return Err(Error::ShapeMismatch(format!(
            "input of length {} for n={}",
            x.len(),
            params.n
        )));
    }
    forward_active(params, &active_indices(x))
}

/// Binary cross-entropy summed over components, with the reconstruction
/// clamped to `[ε, 1-ε]`.
pub fn loss(x: &[f64], reconstruction: &[f64]) -> f64 {
    x.iter()
        .zip(reconstruction)
        .map(|(&t, &y)| {
            let y = y.clamp(LOSS_EPSILON, 1.0 - LOSS_EPSILON);
            -(t * y.ln() + (1.0 - t) * (1.0 - y).ln())
        })
        .sum()
}

fn loss_active(active: &[u32], output: &[f64]) -> f64 {
    let mut total = 0.0;
    let mut ones = active.iter().peekable();
    for (k, &y) in output.iter().enumerate() {
        let y = y.clamp(LOSS_EPSILON, 1.0 - LOSS_EPSILON);
        let is_one = ones.peek().is_some_and(|&&i| i as usize == k);
        if is_one {
            ones.next();
            total -= y.ln();
        } else {
            total -= (1.0 - y).ln();
        }
    }
    total
}

/// Adds the gradient of one sample's loss into `grad` and returns the loss.
/// `active` must be sorted.
fn accumulate_gradient(params: &AeParams, active: &[u32], grad: &mut AeParams) -> Result<f64> {
    let (n, d) = (params.n, params.d);
    let pre = hidden_pre(params, active);
    let hidden: Vec<f64> = pre.iter().map(|v| v.max(0.0)).collect();
    let output = decode(params, &hidden);
    if output.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteActivation { layer: "output" });
    }
    let loss = loss_active(active, &output);

    // dL/dz for sigmoid + BCE is y - t; zero where the clamp is active
    let mut delta = output;
    let mut ones = active.iter().peekable();
    for (k, y) in delta.iter_mut().enumerate() {
        let t = if ones.peek().is_some_and(|&&i| i as usize == k) {
            ones.next();
            1.0
        } else {
            0.0
        };
        *y = if *y < LOSS_EPSILON || *y > 1.0 - LOSS_EPSILON {
            0.0
        } else {
            *y - t
        };
    }

    let mut grad_hidden = vec![0.0; d];
    for (k, &dk) in delta.iter().enumerate() {
        if dk == 0.0 {
            continue;
        }
        grad.b_out[k] += dk;
        let w_row = &params.w_out[k * d..(k + 1) * d];
        let g_row = &mut grad.w_out[k * d..(k + 1) * d];
        for j in 0..d {
            g_row[j] += dk * hidden[j];
            grad_hidden[j] += dk * w_row[j];
        }
    }
    for j in 0..d {
        if pre[j] <= 0.0 {
            continue;
        }
        let g = grad_hidden[j];
        grad.b_in[j] += g;
        let g_row = &mut grad.w_in[j * n..(j + 1) * n];
        for &i in active {
            g_row[i as usize] += g;
        }
    }
    Ok(loss)
}

/// Loss and parameter gradient for a single binary input.
pub fn gradient(params: &AeParams, x: &[f64]) -> Result<(f64, AeParams)> {
    let mut grad = AeParams::zeros(params.n, params.d);
    let loss = accumulate_gradient(params, &active_indices(x), &mut grad)?;
    Ok((loss, grad))
}

fn batch_gradient(params: &AeParams, matrix: &SparseBinaryMatrix, batch: &[usize]) -> Result<AeParams> {
    let part_len = batch.len().div_ceil(GRADIENT_PARTS);
    let partials: Vec<AeParams> = batch
        .par_chunks(part_len.max(1))
        .map(|part| {
            let mut grad = AeParams::zeros(params.n, params.d);
            for &row in part {
                accumulate_gradient(params, matrix.row(row), &mut grad)?;
            }
            Ok(grad)
        })
        .collect::<Result<_>>()?;
    let mut total = AeParams::zeros(params.n, params.d);
    for g in &partials {
        total.add_assign(g);
    }
    total.scale(1.0 / batch.len() as f64);
    Ok(total)
}

/// Mean per-row reconstruction loss over the whole matrix.
pub fn mean_loss(params: &AeParams, matrix: &SparseBinaryMatrix) -> Result<f64> {
    let losses: Vec<f64> = (0..matrix.n_rows())
        .into_par_iter()
        .map(|i| forward_active(params, matrix.row(i)).map(|a| loss_active(matrix.row(i), &a.output)))
        .collect::<Result<_>>()?;
    Ok(losses.iter().sum::<f64>() / matrix.n_rows().max(1) as f64)
}

struct Adam {
    m: AeParams,
    v: AeParams,
    t: i32,
}

impl Adam {
    fn new(n: usize, d: usize) -> Self {
        Self {
            m: AeParams::zeros(n, d),
            v: AeParams::zeros(n, d),
            t: 0,
        }
    }

    fn step(&mut self, params: &mut AeParams, grad: &AeParams, cfg: &TrainConfig) {
        self.t += 1;
        let (b1, b2) = (cfg.beta1, cfg.beta2);
        let correction1 = 1.0 - b1.powi(self.t);
        let correction2 = 1.0 - b2.powi(self.t);
        let step = cfg.learning_rate * correction2.sqrt() / correction1;
        let eps = cfg.adam_epsilon * correction2.sqrt();
        for (((p, g), m), v) in params
            .parts_mut()
            .into_iter()
            .zip(grad.parts())
            .zip(self.m.parts_mut())
            .zip(self.v.parts_mut())
        {
            for i in 0..p.len() {
                m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                p[i] -= step * m[i] / (v[i].sqrt() + eps);
            }
        }
    }
}

/// Trains on every row of `matrix`. The returned history holds the mean
/// loss before training (index 0) and after each epoch.
pub fn train(matrix: &SparseBinaryMatrix, cfg: &TrainConfig) -> Result<(AeParams, Vec<f64>)> {
    cfg.validate()?;
    if matrix.n_rows() == 0 || matrix.n_cols() == 0 {
        return Err(Error::ShapeMismatch("cannot train on an empty matrix".into()));
    }
    let (n, d) = (matrix.n_cols(), cfg.dim);
    if d >= n {
        log::warn!("autoencoder code size {d} is not smaller than input width {n}");
    }
    let mut params = init_params(n, d, cfg.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let batch_size = cfg.batch_size.min(matrix.n_rows());
    let mut order: Vec<usize> = (0..matrix.n_rows()).collect();
    let mut adam = Adam::new(n, d);

    let mut history = vec![mean_loss(&params, matrix)?];
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(batch_size) {
            let grad = batch_gradient(&params, matrix, batch)?;
            adam.step(&mut params, &grad, cfg);
        }
        let epoch_loss = match mean_loss(&params, matrix) {
            Ok(l) if l.is_finite() && params.is_finite() => l,
            _ => return Err(Error::DivergedLoss { epoch }),
        };
        log::debug!("autoencoder epoch {epoch}: mean loss {epoch_loss:.6}");
        history.push(epoch_loss);
    }
    Ok((params, history))
}

/// `epoch,mean_loss` lines, epoch 0 being the untrained network.
pub fn write_loss_csv<W: Write>(history: &[f64], mut out: W) -> io::Result<()> {
    writeln!(out, "epoch,mean_loss")?;
    for (epoch, loss) in history.iter().enumerate() {
        writeln!(out, "{epoch},{loss}")?;
    }
    Ok(())
}

/// Compressed word embeddings: row `i` is the hidden code of matrix row `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct WordEmbeddingMatrix {
    pub words: Vec<String>,
    pub dim: usize,
    pub data: Vec<f64>,
}

impl WordEmbeddingMatrix {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

pub fn encode(params: &AeParams, matrix: &SparseBinaryMatrix) -> Result<WordEmbeddingMatrix> {
    params.check_shapes()?;
    if matrix.n_cols() != params.n {
        return Err(Error::ShapeMismatch(format!(
            "matrix has {} columns, autoencoder expects {}",
            matrix.n_cols(),
            params.n
        )));
    }
    let rows: Vec<Vec<f64>> = (0..matrix.n_rows())
        .into_par_iter()
        .map(|i| {
            let h: Vec<f64> = hidden_pre(params, matrix.row(i))
                .into_iter()
                .map(|v| v.max(0.0))
                .collect();
            if h.iter().all(|v| v.is_finite()) {
                Ok(h)
            } else {
                Err(Error::NonFiniteActivation { layer: "hidden" })
            }
        })
        .collect::<Result<_>>()?;
    Ok(WordEmbeddingMatrix {
        words: matrix.row_labels().to_vec(),
        dim: params.d,
        data: rows.concat(),
    })
}
