//! Layer-wise interpolation of training checkpoints.
//!
//! Each named layer of the smoothed model is a convex combination of the same
//! layer across checkpoints. Per-layer weights live on the probability
//! simplex and are tuned against a held-out loss.

use std::collections::HashSet;
use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SmoothingError {
    #[error("duplicate layer name {0:?}")]
    DuplicateLayer(String),
    #[error("layer {name:?}: {message}")]
    InvalidLayer { name: String, message: String },
    #[error("schema mismatch at layer {index} ({name:?}): {message}")]
    SchemaMismatch {
        index: usize,
        name: String,
        message: String,
    },
    #[error("weights: {0}")]
    InvalidWeights(String),
    #[error("no models")]
    NoModels,
    #[error("loss evaluator returned non-finite value {0}")]
    NonFiniteLoss(f64),
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("only {found} of {wanted} checkpoints exist at interval {interval}")]
    InsufficientCheckpoints {
        found: usize,
        wanted: usize,
        interval: u64,
    },
    #[error("invalid checkpoint request: {0}")]
    InvalidRequest(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub name: String,
    pub values: Vec<f64>,
}

/// Named, ordered parameter arrays of one model.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamBundle {
    layers: Vec<Layer>,
}

impl ParamBundle {
    pub fn new(layers: Vec<Layer>) -> Result<Self, SmoothingError> {
        let mut names = HashSet::new();
        for l in &layers {
            if !names.insert(l.name.as_str()) {
                return Err(SmoothingError::DuplicateLayer(l.name.clone()));
            }
            if l.name.is_empty() || l.name.chars().any(char::is_whitespace) {
                return Err(SmoothingError::InvalidLayer {
                    name: l.name.clone(),
                    message: "name must be non-empty without whitespace".into(),
                });
            }
            if l.values.is_empty() {
                return Err(SmoothingError::InvalidLayer {
                    name: l.name.clone(),
                    message: "dimension must be positive".into(),
                });
            }
            if l.values.iter().any(|v| !v.is_finite()) {
                return Err(SmoothingError::InvalidLayer {
                    name: l.name.clone(),
                    message: "values must be finite".into(),
                });
            }
        }
        Ok(ParamBundle { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layer(&self, name: &str) -> Option<&[f64]> {
        self.layers
            .iter()
            .find(|l| l.name == name)
            .map(|l| l.values.as_slice())
    }

    pub fn layer_names(&self) -> Vec<&str> {
        self.layers.iter().map(|l| l.name.as_str()).collect()
    }

    fn check_schema(&self, other: &ParamBundle) -> Result<(), SmoothingError> {
        if self.layers.len() != other.layers.len() {
            let index = self.layers.len().min(other.layers.len());
            let name = self
                .layers
                .get(index)
                .or(other.layers.get(index))
                .map_or(String::new(), |l| l.name.clone());
            return Err(SmoothingError::SchemaMismatch {
                index,
                name,
                message: format!("{} vs {} layers", self.layers.len(), other.layers.len()),
            });
        }
        for (index, (a, b)) in self.layers.iter().zip(&other.layers).enumerate() {
            if a.name != b.name || a.values.len() != b.values.len() {
                return Err(SmoothingError::SchemaMismatch {
                    index,
                    name: a.name.clone(),
                    message: format!(
                        "{}[{}] vs {}[{}]",
                        a.name,
                        a.values.len(),
                        b.name,
                        b.values.len()
                    ),
                });
            }
        }
        Ok(())
    }
}

/// `PBUNDLE 1`, then per layer `layer <name> <dim>` and `<dim>` reals.
pub fn parse_bundle(content: &str) -> Result<ParamBundle, SmoothingError> {
    let mut tokens = content
        .lines()
        .enumerate()
        .flat_map(|(i, l)| l.split_whitespace().map(move |t| (i + 1, t)));
    let header: Vec<(usize, &str)> = tokens.by_ref().take(2).collect();
    if header.iter().map(|t| t.1).ne(["PBUNDLE", "1"]) {
        return Err(SmoothingError::Parse {
            line: 1,
            message: "expected header \"PBUNDLE 1\"".into(),
        });
    }
    let mut layers = Vec::new();
    let mut last_line = 1;
    while let Some((line, tok)) = tokens.next() {
        let perr = |line, message: String| SmoothingError::Parse { line, message };
        if tok != "layer" {
            return Err(perr(line, format!("expected \"layer\", got {tok:?}")));
        }
        let (_, name) = tokens
            .next()
            .ok_or_else(|| perr(line, "missing layer name".into()))?;
        let (dline, dim) = tokens
            .next()
            .ok_or_else(|| perr(line, "missing layer dimension".into()))?;
        let dim: usize = dim
            .parse()
            .map_err(|_| perr(dline, format!("bad dimension {dim:?}")))?;
        let mut values = Vec::with_capacity(dim);
        last_line = dline;
        for _ in 0..dim {
            let (vline, v) = tokens.next().ok_or_else(|| {
                perr(last_line, format!("layer {name:?}: expected {dim} values, got {}", values.len()))
            })?;
            last_line = vline;
            values.push(
                v.parse::<f64>()
                    .map_err(|_| perr(vline, format!("bad value {v:?}")))?,
            );
        }
        layers.push(Layer {
            name: name.to_owned(),
            values,
        });
    }
    ParamBundle::new(layers).map_err(|e| SmoothingError::Parse {
        line: last_line,
        message: e.to_string(),
    })
}

pub fn render_bundle(bundle: &ParamBundle) -> String {
    let mut out = String::from("PBUNDLE 1\n");
    for l in &bundle.layers {
        let _ = writeln!(out, "layer {} {}", l.name, l.values.len());
        let vals: Vec<String> = l.values.iter().map(|v| v.to_string()).collect();
        out.push_str(&vals.join(" "));
        out.push('\n');
    }
    out
}

/// Per-layer simplex weights over `M` models.
#[derive(Clone, Debug, PartialEq)]
pub struct SmoothingWeights {
    layer_names: Vec<String>,
    matrix: Vec<Vec<f64>>,
}

const SIMPLEX_TOL: f64 = 1e-9;

impl SmoothingWeights {
    pub fn new(layer_names: Vec<String>, matrix: Vec<Vec<f64>>) -> Result<Self, SmoothingError> {
        if layer_names.len() != matrix.len() {
            return Err(SmoothingError::InvalidWeights(format!(
                "{} layer names for {} weight rows",
                layer_names.len(),
                matrix.len()
            )));
        }
        let models = matrix.first().map_or(0, Vec::len);
        for (name, row) in layer_names.iter().zip(&matrix) {
            if row.is_empty() || row.len() != models {
                return Err(SmoothingError::InvalidWeights(format!(
                    "layer {name:?}: ragged or empty weight row"
                )));
            }
            if row.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
                return Err(SmoothingError::InvalidWeights(format!(
                    "layer {name:?}: negative or non-finite weight"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > SIMPLEX_TOL {
                return Err(SmoothingError::InvalidWeights(format!(
                    "layer {name:?}: weights sum to {sum}"
                )));
            }
        }
        Ok(SmoothingWeights {
            layer_names,
            matrix,
        })
    }

    pub fn uniform(layer_names: Vec<String>, models: usize) -> Result<Self, SmoothingError> {
        let row = vec![1.0 / models as f64; models];
        let matrix = vec![row; layer_names.len()];
        Self::new(layer_names, matrix)
    }

    /// Same weights for every layer.
    pub fn tied(layer_names: Vec<String>, weights: &[f64]) -> Result<Self, SmoothingError> {
        let matrix = vec![weights.to_vec(); layer_names.len()];
        Self::new(layer_names, matrix)
    }

    pub fn layer_names(&self) -> &[String] {
        &self.layer_names
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.matrix
    }

    pub fn num_models(&self) -> usize {
        self.matrix.first().map_or(0, Vec::len)
    }
}

/// `SMOOTHW 1`, then `layer <name> w1 ... wM` per layer.
pub fn render_weights(weights: &SmoothingWeights) -> String {
    let mut out = String::from("SMOOTHW 1\n");
    for (name, row) in weights.layer_names.iter().zip(&weights.matrix) {
        let vals: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "layer {name} {}", vals.join(" "));
    }
    out
}

pub fn parse_weights(content: &str) -> Result<SmoothingWeights, SmoothingError> {
    let mut lines = content
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, l)) if l.split_whitespace().eq(["SMOOTHW", "1"]) => {}
        _ => {
            return Err(SmoothingError::Parse {
                line: 1,
                message: "expected header \"SMOOTHW 1\"".into(),
            })
        }
    }
    let mut names = Vec::new();
    let mut matrix = Vec::new();
    let mut last = 1;
    for (i, l) in lines {
        last = i + 1;
        let mut toks = l.split_whitespace();
        let (Some("layer"), Some(name)) = (toks.next(), toks.next()) else {
            return Err(SmoothingError::Parse {
                line: last,
                message: "expected \"layer <name> w1 ... wM\"".into(),
            });
        };
        let row = toks
            .map(str::parse::<f64>)
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| SmoothingError::Parse {
                line: last,
                message: format!("bad weight: {e}"),
            })?;
        names.push(name.to_owned());
        matrix.push(row);
    }
    SmoothingWeights::new(names, matrix).map_err(|e| SmoothingError::Parse {
        line: last,
        message: e.to_string(),
    })
}

/// Picks `count` checkpoints spaced `interval` apart, walking back from the
/// last available iteration. Returned newest first.
pub fn select_checkpoints(
    available: &[u64],
    count: usize,
    interval: u64,
) -> Result<Vec<u64>, SmoothingError> {
    if count == 0 || interval == 0 {
        return Err(SmoothingError::InvalidRequest(
            "count and interval must be at least 1".into(),
        ));
    }
    let set: HashSet<u64> = available.iter().copied().collect();
    let last = *available
        .iter()
        .max()
        .ok_or_else(|| SmoothingError::InvalidRequest("no checkpoints available".into()))?;
    let selected: Vec<u64> = (0..=last / interval)
        .map(|k| last - k * interval)
        .filter(|i| set.contains(i))
        .take(count)
        .collect();
    if selected.len() < count {
        return Err(SmoothingError::InsufficientCheckpoints {
            found: selected.len(),
            wanted: count,
            interval,
        });
    }
    Ok(selected)
}

fn check_models(models: &[ParamBundle]) -> Result<(), SmoothingError> {
    let first = models.first().ok_or(SmoothingError::NoModels)?;
    models[1..].iter().try_for_each(|m| first.check_schema(m))
}

/// Layer `L` of the result is `sum_m weights[L][m] * models[m].L`.
pub fn interpolate(
    models: &[ParamBundle],
    weights: &SmoothingWeights,
) -> Result<ParamBundle, SmoothingError> {
    check_models(models)?;
    let first = &models[0];
    if weights.num_models() != models.len() {
        return Err(SmoothingError::InvalidWeights(format!(
            "weights cover {} models, got {}",
            weights.num_models(),
            models.len()
        )));
    }
    if weights
        .layer_names
        .iter()
        .map(String::as_str)
        .ne(first.layer_names())
    {
        return Err(SmoothingError::InvalidWeights(
            "weight layers do not match the model schema".into(),
        ));
    }

    let layers = first
        .layers
        .par_iter()
        .enumerate()
        .map(|(li, layer)| {
            let mut values = vec![0.0; layer.values.len()];
            for (model, &alpha) in models.iter().zip(&weights.matrix[li]) {
                for (acc, v) in values.iter_mut().zip(&model.layers[li].values) {
                    *acc += alpha * v;
                }
            }
            Layer {
                name: layer.name.clone(),
                values,
            }
        })
        .collect();
    Ok(ParamBundle { layers })
}

/// Held-out loss of a parameter bundle. Must be deterministic.
pub trait LossEvaluator: Sync {
    fn loss(&self, bundle: &ParamBundle) -> Result<f64, SmoothingError>;
}

impl<F> LossEvaluator for F
where
    F: Fn(&ParamBundle) -> f64 + Sync,
{
    fn loss(&self, bundle: &ParamBundle) -> Result<f64, SmoothingError> {
        Ok(self(bundle))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmoothingOptions {
    pub max_iters: usize,
    pub tol: f64,
    /// Central finite-difference step.
    pub fd_step: f64,
    /// Initial step on the logits. Logit gradients scale with the weights
    /// themselves, so this starts large and is halved on every rejected step.
    pub learning_rate: f64,
}

impl Default for SmoothingOptions {
    fn default() -> Self {
        SmoothingOptions {
            max_iters: 200,
            tol: 1e-8,
            fd_step: 1e-4,
            learning_rate: 100.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SmoothingFit {
    pub weights: SmoothingWeights,
    pub loss: f64,
    pub initial_loss: f64,
    pub iterations: usize,
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|x| (x - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

struct Objective<'a, E: ?Sized> {
    models: &'a [ParamBundle],
    names: Vec<String>,
    evaluator: &'a E,
}

impl<E: LossEvaluator + ?Sized> Objective<'_, E> {
    fn weights(&self, logits: &[Vec<f64>]) -> SmoothingWeights {
        let matrix: Vec<Vec<f64>> = logits.iter().map(|row| softmax(row)).collect();
        SmoothingWeights {
            layer_names: self.names.clone(),
            matrix,
        }
    }

    fn eval_weights(&self, weights: &SmoothingWeights) -> Result<f64, SmoothingError> {
        let bundle = interpolate(self.models, weights)?;
        let loss = self.evaluator.loss(&bundle)?;
        if loss.is_finite() {
            Ok(loss)
        } else {
            Err(SmoothingError::NonFiniteLoss(loss))
        }
    }

    fn eval(&self, logits: &[Vec<f64>]) -> Result<f64, SmoothingError> {
        self.eval_weights(&self.weights(logits))
    }

    fn gradient(&self, logits: &[Vec<f64>], h: f64) -> Result<Vec<Vec<f64>>, SmoothingError> {
        let coords: Vec<(usize, usize)> = logits
            .iter()
            .enumerate()
            .flat_map(|(l, row)| (0..row.len()).map(move |m| (l, m)))
            .collect();
        let partials = coords
            .par_iter()
            .map(|&(l, m)| {
                let mut probe = logits.to_vec();
                probe[l][m] += h;
                let up = self.eval(&probe)?;
                probe[l][m] -= 2.0 * h;
                let down = self.eval(&probe)?;
                Ok((up - down) / (2.0 * h))
            })
            .collect::<Result<Vec<f64>, SmoothingError>>()?;
        let mut grad: Vec<Vec<f64>> = logits.iter().map(|r| vec![0.0; r.len()]).collect();
        for (&(l, m), g) in coords.iter().zip(partials) {
            grad[l][m] = g;
        }
        Ok(grad)
    }
}

/// Tunes per-layer interpolation weights to minimize the evaluator's loss.
///
/// Weights are a per-layer softmax of free logits, starting uniform. Plain
/// gradient descent on central finite-difference gradients; a rejected step
/// halves the learning rate. Stops after `max_iters` steps or once an
/// accepted step improves the loss by less than `tol`. The returned loss
/// never exceeds the uniform starting point or any single model, since each
/// checkpoint on its own is a simplex vertex and is checked at the end.
pub fn estimate_weights<E: LossEvaluator + ?Sized>(
    models: &[ParamBundle],
    evaluator: &E,
    opts: &SmoothingOptions,
) -> Result<SmoothingFit, SmoothingError> {
    check_models(models)?;
    let m = models.len();
    let names: Vec<String> = models[0].layers.iter().map(|l| l.name.clone()).collect();
    let objective = Objective {
        models,
        names: names.clone(),
        evaluator,
    };

    let mut logits = vec![vec![0.0; m]; names.len()];
    let initial_loss = objective.eval(&logits)?;
    let mut loss = initial_loss;
    let mut lr = opts.learning_rate;
    let mut iterations = 0;

    if m > 1 {
        while iterations < opts.max_iters {
            iterations += 1;
            let grad = objective.gradient(&logits, opts.fd_step)?;
            let candidate: Vec<Vec<f64>> = logits
                .iter()
                .zip(&grad)
                .map(|(row, g)| row.iter().zip(g).map(|(x, d)| x - lr * d).collect())
                .collect();
            let next = objective.eval(&candidate)?;
            if next < loss {
                let improvement = loss - next;
                logits = candidate;
                loss = next;
                if improvement < opts.tol {
                    break;
                }
            } else {
                lr *= 0.5;
                if lr < f64::EPSILON {
                    break;
                }
            }
        }
    }

    let mut weights = objective.weights(&logits);
    for vertex in 0..m {
        let mut row = vec![0.0; m];
        row[vertex] = 1.0;
        let w = SmoothingWeights::tied(names.clone(), &row)?;
        let l = objective.eval_weights(&w)?;
        if l < loss {
            loss = l;
            weights = w;
        }
    }

    Ok(SmoothingFit {
        weights,
        loss,
        initial_loss,
        iterations,
    })
}

/// Dense features with integer class labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

impl Dataset {
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<Self, SmoothingError> {
        let bad = |m: String| SmoothingError::InvalidRequest(m);
        if features.is_empty() || features.len() != labels.len() {
            return Err(bad("dataset needs one label per non-empty feature row".into()));
        }
        let dim = features[0].len();
        if dim == 0 || features.iter().any(|f| f.len() != dim) {
            return Err(bad("feature rows must share a positive dimension".into()));
        }
        if features.iter().flatten().any(|v| !v.is_finite()) {
            return Err(bad("features must be finite".into()));
        }
        Ok(Dataset { features, labels })
    }

    pub fn dim(&self) -> usize {
        self.features[0].len()
    }
}

/// `label<TAB>f1 f2 ... fD` per line.
pub fn parse_dataset(content: &str) -> Result<Dataset, SmoothingError> {
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (idx, raw) in content.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let perr = |message: String| SmoothingError::Parse { line, message };
        let (label, feats) = raw
            .split_once('\t')
            .ok_or_else(|| perr("expected \"label<TAB>features\"".into()))?;
        labels.push(
            label
                .trim()
                .parse::<usize>()
                .map_err(|_| perr(format!("bad label {label:?}")))?,
        );
        features.push(
            feats
                .split_whitespace()
                .map(str::parse::<f64>)
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| perr(format!("bad feature: {e}")))?,
        );
    }
    Dataset::new(features, labels).map_err(|e| SmoothingError::Parse {
        line: 1,
        message: e.to_string(),
    })
}

/// Mean cross-entropy of a linear softmax classifier.
///
/// Bundles must hold `W` (classes x features, row-major) and `b` (classes).
#[derive(Clone, Debug)]
pub struct LinearSoftmaxLoss {
    data: Dataset,
}

impl LinearSoftmaxLoss {
    pub fn new(data: Dataset) -> Self {
        LinearSoftmaxLoss { data }
    }

    pub fn dataset(&self) -> &Dataset {
        &self.data
    }
}

pub fn builtin_evaluator(data: Dataset) -> LinearSoftmaxLoss {
    LinearSoftmaxLoss::new(data)
}

impl LossEvaluator for LinearSoftmaxLoss {
    fn loss(&self, bundle: &ParamBundle) -> Result<f64, SmoothingError> {
        let schema_err = |message: String| SmoothingError::SchemaMismatch {
            index: 0,
            name: "W".into(),
            message,
        };
        let w = bundle.layer("W").ok_or_else(|| schema_err("missing layer W".into()))?;
        let b = bundle.layer("b").ok_or_else(|| schema_err("missing layer b".into()))?;
        let classes = b.len();
        let dim = self.data.dim();
        if w.len() != classes * dim {
            return Err(schema_err(format!(
                "W has {} values, expected {classes} x {dim}",
                w.len()
            )));
        }

        let mut total = 0.0;
        let mut logits = vec![0.0; classes];
        for (x, &label) in self.data.features.iter().zip(&self.data.labels) {
            if label >= classes {
                return Err(SmoothingError::LabelOutOfRange { label, classes });
            }
            for (c, logit) in logits.iter_mut().enumerate() {
                let row = &w[c * dim..(c + 1) * dim];
                *logit = b[c] + row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>();
            }
            let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
            total += lse - logits[label];
        }
        Ok(total / self.data.labels.len() as f64)
    }
}
