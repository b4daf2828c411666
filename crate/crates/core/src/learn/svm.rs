//! Soft-margin SVM trained by sequential minimal optimization, one binary
//! classifier per persona.

use serde::{Deserialize, Serialize};

use super::{from_model_file, to_model_file, LearnError};
use crate::labeling::LabelSet;
use crate::trace::{FeatureVector, Normalizer};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

impl Kernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Kernel::Linear => dot(a, b),
            Kernel::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmConfig {
    /// Soft-margin penalty.
    pub c: f64,
    pub kernel: Kernel,
    /// Training stops once primal minus dual objective falls below this.
    pub gap_tolerance: f64,
    pub max_passes: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self { c: 1.0, kernel: Kernel::Linear, gap_tolerance: 1e-6, max_passes: 1000 }
    }
}

impl SvmConfig {
    fn validate(&self) -> Result<(), LearnError> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(LearnError::InvalidConfig(format!("C must be positive, got {}", self.c)));
        }
        if let Kernel::Rbf { gamma } = self.kernel {
            if !(gamma > 0.0 && gamma.is_finite()) {
                return Err(LearnError::InvalidConfig(format!("RBF gamma must be positive, got {gamma}")));
            }
        }
        if self.max_passes == 0 {
            return Err(LearnError::InvalidConfig("max_passes must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportVector {
    /// `alpha * y`.
    pub coef: f64,
    pub x: Vec<f64>,
}

/// One persona's classifier: `decision(x) > 0` predicts the persona.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinarySvm {
    pub kernel: Kernel,
    /// Primal weights; empty for kernelized models.
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Kept only for kernelized models.
    pub support: Vec<SupportVector>,
    /// Set when the training labels held a single class; the classifier
    /// then always answers that class.
    pub degenerate: Option<bool>,
    /// Primal objective after each optimizer pass.
    pub hinge_history: Vec<f64>,
    pub dual_gap: f64,
    pub passes: usize,
}

impl BinarySvm {
    pub fn decision(&self, x: &[f64]) -> f64 {
        match self.kernel {
            Kernel::Linear => dot(&self.weights, x) + self.bias,
            k => self.support.iter().map(|s| s.coef * k.eval(&s.x, x)).sum::<f64>() + self.bias,
        }
    }
}

/// A binary classifier with the final dual variables.
#[derive(Clone, Debug)]
pub struct BinaryTraining {
    pub model: BinarySvm,
    pub alphas: Vec<f64>,
    pub converged: bool,
}

const TAU: f64 = 1e-12;

/// A feasible dual point with its offset. `qa` caches `Q * alpha`.
struct Iterate {
    alpha: Vec<f64>,
    qa: Vec<f64>,
    rho: f64,
}

impl Iterate {
    /// `1/2 |w|^2 + C * sum of hinge losses`.
    fn primal(&self, y: &[f64], c: f64) -> f64 {
        let mut quad = 0.0;
        let mut hinge = 0.0;
        for t in 0..self.alpha.len() {
            quad += self.alpha[t] * self.qa[t];
            // y_t f(x_t) = (Q a)_t - y_t rho
            hinge += (1.0 - (self.qa[t] - y[t] * self.rho)).max(0.0);
        }
        0.5 * quad + c * hinge
    }

    fn dual(&self) -> f64 {
        self.alpha.iter().zip(&self.qa).map(|(a, qa)| a - 0.5 * a * qa).sum()
    }

    /// The point `theta` of the way to `other`; feasibility is preserved
    /// because the constraints are convex.
    fn towards(&self, other: &Iterate, theta: f64) -> Iterate {
        let mix = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (1.0 - theta) * x + theta * y).collect();
        Iterate { alpha: mix(&self.alpha, &other.alpha), qa: mix(&self.qa, &other.qa), rho: (1.0 - theta) * self.rho + theta * other.rho }
    }
}

/// Golden-section minimum of a convex function on [0, 1].
fn line_search(f: impl Fn(f64) -> f64) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut a = hi - ratio * (hi - lo);
    let mut b = lo + ratio * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..80 {
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - ratio * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + ratio * (hi - lo);
            fb = f(b);
        }
    }
    (lo + hi) / 2.0
}

/// Trains one classifier on labels `y` in {-1, +1}.
pub fn train_binary_svm(xs: &[Vec<f64>], y: &[f64], config: &SvmConfig) -> Result<BinaryTraining, LearnError> {
    config.validate()?;
    if xs.len() != y.len() {
        return Err(LearnError::LengthMismatch { inputs: xs.len(), labels: y.len() });
    }
    let n = xs.len();
    if n == 0 {
        return Err(LearnError::EmptyDataset("no training points".into()));
    }
    if y.iter().any(|v| *v != 1.0 && *v != -1.0) {
        return Err(LearnError::InvalidConfig("labels must be +1 or -1".into()));
    }
    let dims = xs[0].len();
    if let Some(x) = xs.iter().find(|x| x.len() != dims) {
        return Err(LearnError::InputSize { expected: dims, got: x.len() });
    }
    let positive = y[0] > 0.0;
    if y.iter().all(|v| (*v > 0.0) == positive) {
        let model = BinarySvm {
            kernel: config.kernel,
            weights: if config.kernel == Kernel::Linear { vec![0.0; dims] } else { Vec::new() },
            bias: if positive { 1.0 } else { -1.0 },
            support: Vec::new(),
            degenerate: Some(positive),
            hinge_history: Vec::new(),
            dual_gap: 0.0,
            passes: 0,
        };
        return Ok(BinaryTraining { model, alphas: vec![0.0; n], converged: true });
    }

    let c = config.c;
    let k: Vec<f64> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| config.kernel.eval(&xs[i], &xs[j])).collect();
    let q = |i: usize, j: usize| y[i] * y[j] * k[i * n + j];
    let mut alpha = vec![0.0; n];
    // Gradient of the dual objective 1/2 a'Qa - e'a.
    let mut grad = vec![-1.0; n];
    // The returned model only moves when its primal objective does not
    // rise; otherwise it steps part of the way toward the dual iterate.
    let mut model = Iterate { alpha: alpha.clone(), qa: vec![0.0; n], rho: 0.0 };
    let mut model_primal = model.primal(y, c);
    let mut history = Vec::new();
    let mut converged = false;
    let mut gap = f64::INFINITY;
    let mut passes = 0;

    while passes < config.max_passes {
        passes += 1;
        let mut optimal = false;
        for _ in 0..n {
            let Some((i, j)) = select_pair(&alpha, &grad, y, c) else {
                optimal = true;
                break;
            };
            let (old_i, old_j) = (alpha[i], alpha[j]);
            update_pair(&mut alpha, &grad, y, c, i, j, q(i, i), q(j, j), q(i, j));
            let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
            for (t, g) in grad.iter_mut().enumerate() {
                *g += q(t, i) * di + q(t, j) * dj;
            }
        }
        let candidate = Iterate { alpha: alpha.clone(), qa: grad.iter().map(|g| g + 1.0).collect(), rho: compute_rho(&alpha, &grad, y, c) };
        let candidate_primal = candidate.primal(y, c);
        let candidate_dual = candidate.dual();
        if candidate_primal <= model_primal {
            model = candidate;
            model_primal = candidate_primal;
        } else {
            let theta = line_search(|t| model.towards(&candidate, t).primal(y, c));
            let next = model.towards(&candidate, theta);
            let p = next.primal(y, c);
            if p <= model_primal {
                model = next;
                model_primal = p;
            }
        }
        history.push(model_primal);
        gap = model_primal - candidate_dual;
        if optimal || gap < config.gap_tolerance {
            converged = true;
            break;
        }
    }

    let (alpha, rho) = (model.alpha, model.rho);
    let (weights, support) = match config.kernel {
        Kernel::Linear => {
            let mut w = vec![0.0; dims];
            for (i, x) in xs.iter().enumerate() {
                if alpha[i] > 0.0 {
                    for (wd, xd) in w.iter_mut().zip(x) {
                        *wd += alpha[i] * y[i] * xd;
                    }
                }
            }
            (w, Vec::new())
        }
        Kernel::Rbf { .. } => (
            Vec::new(),
            (0..n).filter(|i| alpha[*i] > 0.0).map(|i| SupportVector { coef: alpha[i] * y[i], x: xs[i].clone() }).collect(),
        ),
    };
    let model = BinarySvm {
        kernel: config.kernel,
        weights,
        bias: -rho,
        support,
        degenerate: None,
        hinge_history: history,
        dual_gap: gap,
        passes,
    };
    Ok(BinaryTraining { model, alphas: alpha, converged })
}

fn in_up(a: f64, y: f64, c: f64) -> bool {
    (y > 0.0 && a < c) || (y < 0.0 && a > 0.0)
}

fn in_low(a: f64, y: f64, c: f64) -> bool {
    (y < 0.0 && a < c) || (y > 0.0 && a > 0.0)
}

/// Maximal violating pair, or `None` at optimality.
fn select_pair(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> Option<(usize, usize)> {
    let mut best_up = (f64::NEG_INFINITY, usize::MAX);
    let mut best_low = (f64::INFINITY, usize::MAX);
    for t in 0..alpha.len() {
        let v = -y[t] * grad[t];
        if in_up(alpha[t], y[t], c) && v > best_up.0 {
            best_up = (v, t);
        }
        if in_low(alpha[t], y[t], c) && v < best_low.0 {
            best_low = (v, t);
        }
    }
    if best_up.1 == usize::MAX || best_low.1 == usize::MAX || best_up.0 - best_low.0 < TAU {
        return None;
    }
    Some((best_up.1, best_low.1))
}

/// Solves the two-variable subproblem exactly, keeping the box and the
/// equality constraint.
#[allow(clippy::too_many_arguments)]
fn update_pair(alpha: &mut [f64], grad: &[f64], y: &[f64], c: f64, i: usize, j: usize, qii: f64, qjj: f64, qij: f64) {
    if y[i] != y[j] {
        let quad = (qii + qjj + 2.0 * qij).max(TAU);
        let delta = (-grad[i] - grad[j]) / quad;
        let diff = alpha[i] - alpha[j];
        alpha[i] += delta;
        alpha[j] += delta;
        if diff > 0.0 {
            if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = diff;
            }
        } else if alpha[i] < 0.0 {
            alpha[i] = 0.0;
            alpha[j] = -diff;
        }
        if diff > 0.0 {
            if alpha[i] > c {
                alpha[i] = c;
                alpha[j] = c - diff;
            }
        } else if alpha[j] > c {
            alpha[j] = c;
            alpha[i] = c + diff;
        }
    } else {
        let quad = (qii + qjj - 2.0 * qij).max(TAU);
        let delta = (grad[i] - grad[j]) / quad;
        let sum = alpha[i] + alpha[j];
        alpha[i] -= delta;
        alpha[j] += delta;
        if sum > c {
            if alpha[i] > c {
                alpha[i] = c;
                alpha[j] = sum - c;
            }
        } else if alpha[j] < 0.0 {
            alpha[j] = 0.0;
            alpha[i] = sum;
        }
        if sum > c {
            if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = sum - c;
            }
        } else if alpha[i] < 0.0 {
            alpha[i] = 0.0;
            alpha[j] = sum;
        }
    }
}

/// Offset from free support vectors, or the middle of the feasible
/// interval when none are free.
fn compute_rho(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut sum) = (0usize, 0.0);
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum += yg;
        }
    }
    if free > 0 {
        sum / free as f64
    } else {
        (ub + lb) / 2.0
    }
}

/// Three one-vs-rest classifiers with the normalizer fitted on their
/// training data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    /// Runner, treasure collector, monster killer.
    pub classifiers: Vec<BinarySvm>,
    pub normalizer: Normalizer,
    pub config: SvmConfig,
    pub trained_on: usize,
}

/// Trains on normalized feature vectors.
pub fn train_svm(
    features: &[FeatureVector],
    labels: &[LabelSet],
    normalizer: Normalizer,
    config: &SvmConfig,
) -> Result<SvmModel, LearnError> {
    if features.len() != labels.len() {
        return Err(LearnError::LengthMismatch { inputs: features.len(), labels: labels.len() });
    }
    if features.iter().any(|f| !f.normalized) {
        return Err(LearnError::UnnormalizedInput);
    }
    let xs: Vec<Vec<f64>> = features.iter().map(|f| f.values.to_vec()).collect();
    let mut classifiers = Vec::with_capacity(3);
    for k in 0..3 {
        let y: Vec<f64> = labels.iter().map(|l| if l.flags()[k] { 1.0 } else { -1.0 }).collect();
        classifiers.push(train_binary_svm(&xs, &y, config)?.model);
    }
    Ok(SvmModel { classifiers, normalizer, config: *config, trained_on: features.len() })
}

/// Predicted labels and the three margins for a normalized vector.
pub fn svm_predict(model: &SvmModel, v: &FeatureVector) -> Result<(LabelSet, [f64; 3]), LearnError> {
    if !v.normalized {
        return Err(LearnError::UnnormalizedInput);
    }
    let margins = [0, 1, 2].map(|k| model.classifiers[k].decision(&v.values));
    Ok((LabelSet::above(margins, [0.0; 3]), margins))
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl SvmModel {
    /// Normalizes raw counts with the stored normalizer, then predicts.
    pub fn predict_raw(&self, raw: &FeatureVector) -> Result<(LabelSet, [f64; 3]), LearnError> {
        let v = self.normalizer.apply(raw).map_err(|_| LearnError::UnnormalizedInput)?;
        svm_predict(self, &v)
    }

    /// Margins squashed to (0, 1) for display.
    pub fn probabilities(margins: [f64; 3]) -> [f64; 3] {
        margins.map(sigmoid)
    }

    pub fn degenerate_labels(&self) -> Vec<usize> {
        (0..self.classifiers.len()).filter(|k| self.classifiers[*k].degenerate.is_some()).collect()
    }

    pub fn to_json(&self) -> Result<String, LearnError> {
        to_model_file("svm", self)
    }

    pub fn from_json(text: &str) -> Result<Self, LearnError> {
        from_model_file("svm", text)
    }
}
