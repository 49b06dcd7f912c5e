//! Quality-evaluation primitives built on meta-tasks: ordered-attribute
//! scoring, per-task regression gradients, gradient-direction task ranking
//! and joint-gradient model fitting.
//!
//! The regression model is linear (`w . x + b`) with a mean-squared-error
//! loss. Everything that consumes it only needs [`task_gradient`] and
//! [`task_loss`].

use std::collections::HashMap;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QualityError {
    #[error("matrix must be {k}x{k}: row {row} has {len} entries")]
    NotSquare { k: usize, row: usize, len: usize },
    #[error("weight vector has length {got}, expected {expected}")]
    WeightLength { expected: usize, got: usize },
    #[error("feature length {got} does not match expected {expected}")]
    FeatureLength { expected: usize, got: usize },
    #[error("vectors have different lengths: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("task {0:?} has no samples")]
    EmptyTask(String),
    #[error("task {id:?} has {inputs} inputs but {targets} targets")]
    TargetCount {
        id: String,
        inputs: usize,
        targets: usize,
    },
    #[error("gradient similarity is undefined for a zero vector")]
    ZeroGradient,
    #[error("requested {requested} tasks but only {available} exist")]
    TooMany { requested: usize, available: usize },
    #[error("at least one task is required")]
    NoTasks,
    #[error("learning rate must be positive and finite")]
    LearningRate,
    #[error("loss became non-finite at step {0}")]
    Diverged(usize),
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
}

/// Square attribute matrix `d` and weight vector `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalMatrix {
    d: Vec<Vec<f64>>,
    p: Vec<f64>,
}

impl EvalMatrix {
    pub fn new(d: Vec<Vec<f64>>, p: Vec<f64>) -> Result<Self, QualityError> {
        let k = d.len();
        if let Some((row, r)) = d.iter().enumerate().find(|(_, r)| r.len() != k) {
            return Err(QualityError::NotSquare {
                k,
                row,
                len: r.len(),
            });
        }
        if p.len() != k {
            return Err(QualityError::WeightLength {
                expected: k,
                got: p.len(),
            });
        }
        if !d.iter().flatten().chain(&p).all(|v| v.is_finite()) {
            return Err(QualityError::NonFinite("evaluation matrix"));
        }
        Ok(Self { d, p })
    }

    pub fn k(&self) -> usize {
        self.p.len()
    }
}

/// `x = d . p`, i.e. `x_i = sum_j d_ij p_j`.
pub fn ordered_attribute_eval(e: &EvalMatrix) -> Vec<f64> {
    e.d.iter()
        .map(|row| row.iter().zip(&e.p).map(|(d, p)| d * p).sum())
        .collect()
}

/// One rater's quality dataset: feature vectors and their scores.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaTask {
    id: String,
    inputs: Vec<Vec<f64>>,
    targets: Vec<f64>,
}

impl MetaTask {
    pub fn new(
        id: impl Into<String>,
        inputs: Vec<Vec<f64>>,
        targets: Vec<f64>,
    ) -> Result<Self, QualityError> {
        let id = id.into();
        if inputs.is_empty() {
            return Err(QualityError::EmptyTask(id));
        }
        if inputs.len() != targets.len() {
            return Err(QualityError::TargetCount {
                id,
                inputs: inputs.len(),
                targets: targets.len(),
            });
        }
        let m = inputs[0].len();
        if let Some(bad) = inputs.iter().find(|x| x.len() != m) {
            return Err(QualityError::FeatureLength {
                expected: m,
                got: bad.len(),
            });
        }
        if !inputs
            .iter()
            .flatten()
            .chain(&targets)
            .all(|v| v.is_finite())
        {
            return Err(QualityError::NonFinite("task samples"));
        }
        Ok(Self {
            id,
            inputs,
            targets,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn feature_len(&self) -> usize {
        self.inputs[0].len()
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl RegressionModel {
    pub fn zeros(m: usize) -> Self {
        Self {
            weights: vec![0.0; m],
            bias: 0.0,
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + self.bias
    }

    /// Parameters as `(w_1, ..., w_m, b)`.
    pub fn parameters(&self) -> Vec<f64> {
        let mut p = self.weights.clone();
        p.push(self.bias);
        p
    }

    fn check(&self, task: &MetaTask) -> Result<(), QualityError> {
        if task.feature_len() != self.weights.len() {
            return Err(QualityError::FeatureLength {
                expected: self.weights.len(),
                got: task.feature_len(),
            });
        }
        Ok(())
    }
}

/// Mean squared error of `model` on `task`.
pub fn task_loss(task: &MetaTask, model: &RegressionModel) -> Result<f64, QualityError> {
    model.check(task)?;
    let n = task.targets.len() as f64;
    Ok(task
        .inputs
        .iter()
        .zip(&task.targets)
        .map(|(x, y)| (model.predict(x) - y).powi(2))
        .sum::<f64>()
        / n)
}

/// Gradient of [`task_loss`] with respect to `(weights, bias)`:
/// `(2/n) sum (w . x + b - y) (x, 1)`.
pub fn task_gradient(task: &MetaTask, model: &RegressionModel) -> Result<Vec<f64>, QualityError> {
    model.check(task)?;
    let m = model.weights.len();
    let n = task.targets.len() as f64;
    let mut g = vec![0.0; m + 1];
    for (x, y) in task.inputs.iter().zip(&task.targets) {
        let r = model.predict(x) - y;
        for (gi, xi) in g.iter_mut().zip(x) {
            *gi += r * xi;
        }
        g[m] += r;
    }
    g.iter_mut().for_each(|v| *v *= 2.0 / n);
    Ok(g)
}

/// Cosine of the angle between two gradients.
pub fn gradient_cosine(g1: &[f64], g2: &[f64]) -> Result<f64, QualityError> {
    if g1.len() != g2.len() {
        return Err(QualityError::LengthMismatch(g1.len(), g2.len()));
    }
    let dot: f64 = g1.iter().zip(g2).map(|(a, b)| a * b).sum();
    let s1: f64 = g1.iter().map(|v| v * v).sum();
    let s2: f64 = g2.iter().map(|v| v * v).sum();
    if s1 == 0.0 || s2 == 0.0 {
        return Err(QualityError::ZeroGradient);
    }
    Ok((dot / (s1 * s2).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskSelection {
    /// Selected task ids, most similar first.
    pub ids: Vec<String>,
    /// Cosine similarity of each selected task to the anchor.
    pub similarities: Vec<f64>,
    /// Candidates skipped because their gradient vanished.
    pub excluded: Vec<String>,
    /// The anchor's own gradient vanished, so nothing could be ranked.
    pub anchor_excluded: bool,
}

/// Ranks `tasks` by how closely their gradient at `model` points in the
/// anchor's gradient direction and keeps the top `n`. Ties go to the
/// lexicographically smaller id.
pub fn select_meta_tasks(
    tasks: &[MetaTask],
    anchor: &MetaTask,
    model: &RegressionModel,
    n: usize,
) -> Result<TaskSelection, QualityError> {
    if n > tasks.len() {
        return Err(QualityError::TooMany {
            requested: n,
            available: tasks.len(),
        });
    }
    let anchor_grad = task_gradient(anchor, model)?;
    let gradients = tasks
        .iter()
        .map(|t| task_gradient(t, model))
        .collect::<Result<Vec<_>, _>>()?;
    if anchor_grad.iter().all(|&v| v == 0.0) {
        return Ok(TaskSelection {
            ids: Vec::new(),
            similarities: Vec::new(),
            excluded: tasks.iter().map(|t| t.id.clone()).collect(),
            anchor_excluded: true,
        });
    }
    let mut scored = Vec::with_capacity(tasks.len());
    let mut excluded = Vec::new();
    for (task, g) in tasks.iter().zip(&gradients) {
        match gradient_cosine(&anchor_grad, g) {
            Ok(c) => scored.push((c, task.id.as_str())),
            Err(QualityError::ZeroGradient) => excluded.push(task.id.clone()),
            Err(e) => return Err(e),
        }
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    scored.truncate(n);
    Ok(TaskSelection {
        ids: scored.iter().map(|(_, id)| id.to_string()).collect(),
        similarities: scored.iter().map(|(c, _)| *c).collect(),
        excluded,
        anchor_excluded: false,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: RegressionModel,
    /// Mean-over-tasks loss after each update.
    pub trace: Vec<f64>,
}

/// Mean task loss over a task set.
pub fn joint_loss(tasks: &[MetaTask], model: &RegressionModel) -> Result<f64, QualityError> {
    let mut sum = 0.0;
    for t in tasks {
        sum += task_loss(t, model)?;
    }
    Ok(sum / tasks.len() as f64)
}

/// Gradient descent from the zero model on the unweighted mean of the
/// per-task gradients.
pub fn joint_gradient_fit(
    tasks: &[MetaTask],
    steps: usize,
    lr: f64,
) -> Result<FitResult, QualityError> {
    let first = tasks.first().ok_or(QualityError::NoTasks)?;
    if !(lr > 0.0 && lr.is_finite()) {
        return Err(QualityError::LearningRate);
    }
    let m = first.feature_len();
    let mut model = RegressionModel::zeros(m);
    let mut trace = Vec::with_capacity(steps);
    let k = tasks.len() as f64;
    for step in 0..steps {
        let mut joint = vec![0.0; m + 1];
        for t in tasks {
            for (j, g) in joint.iter_mut().zip(task_gradient(t, &model)?) {
                *j += g;
            }
        }
        for (w, g) in model.weights.iter_mut().zip(&joint) {
            *w -= lr * g / k;
        }
        model.bias -= lr * joint[m] / k;
        let loss = joint_loss(tasks, &model)?;
        if !loss.is_finite() {
            return Err(QualityError::Diverged(step + 1));
        }
        trace.push(loss);
    }
    Ok(FitResult { model, trace })
}

fn numeric_records(
    bytes: &[u8],
) -> impl Iterator<Item = Result<(u64, csv::StringRecord), QualityError>> + '_ {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes)
        .into_records()
        .map(|r| {
            r.map(|rec| (rec.position().map(|p| p.line()).unwrap_or(0), rec))
                .map_err(|e| QualityError::Parse {
                    line: e.position().map(|p| p.line()).unwrap_or(0),
                    message: e.to_string(),
                })
        })
        .filter(|r| !matches!(r, Ok((_, rec)) if rec.len() == 1 && rec[0].is_empty()))
}

fn parse_f64(text: &str, line: u64) -> Result<f64, QualityError> {
    text.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| QualityError::Parse {
            line,
            message: format!("not a finite number: {text:?}"),
        })
}

/// Reads `task_id,y,x1,...,xm` rows. Rows are grouped by task id in order
/// of first appearance; a first row with a non-numeric `y` is a header.
pub fn parse_tasks_csv(bytes: &[u8]) -> Result<Vec<MetaTask>, QualityError> {
    let mut order: Vec<String> = Vec::new();
    let mut rows: HashMap<String, (Vec<Vec<f64>>, Vec<f64>)> = HashMap::new();
    for (i, rec) in numeric_records(bytes).enumerate() {
        let (line, rec) = rec?;
        if rec.len() < 3 {
            return Err(QualityError::Parse {
                line,
                message: format!("expected task_id,y,x1,... but found {} columns", rec.len()),
            });
        }
        if i == 0 && rec[1].parse::<f64>().is_err() {
            continue;
        }
        let y = parse_f64(&rec[1], line)?;
        let x = (2..rec.len())
            .map(|c| parse_f64(&rec[c], line))
            .collect::<Result<Vec<_>, _>>()?;
        let id = rec[0].to_string();
        let entry = rows.entry(id.clone()).or_insert_with(|| {
            order.push(id);
            (Vec::new(), Vec::new())
        });
        entry.0.push(x);
        entry.1.push(y);
    }
    order
        .into_iter()
        .map(|id| {
            let (inputs, targets) = rows.remove(&id).expect("grouped id");
            MetaTask::new(id, inputs, targets)
        })
        .collect()
}

/// Reads a numeric matrix, one row per line.
pub fn parse_matrix_csv(bytes: &[u8]) -> Result<Vec<Vec<f64>>, QualityError> {
    numeric_records(bytes)
        .map(|r| {
            let (line, rec) = r?;
            rec.iter().map(|t| parse_f64(t, line)).collect()
        })
        .collect()
}

/// Reads every number in the file, row by row, into one vector (accepts
/// both a single row and a single column).
pub fn parse_vector_csv(bytes: &[u8]) -> Result<Vec<f64>, QualityError> {
    Ok(parse_matrix_csv(bytes)?.into_iter().flatten().collect())
}
