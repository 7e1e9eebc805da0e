//! Training: masked l1 loss, exact reverse-mode gradients through the SCNN,
//! the Adam optimizer, the full-batch training loop, and a finite-difference
//! gradient checker.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complex::LaplacianSet;
use crate::data::ImputationTask;
use crate::filter::{combine_powers, shift_powers};
use crate::linalg::LinalgError;
use crate::scnn::{model_forward, FilterSpec, ModelError, Nonlinearity, ScnnModel, Tape};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("{what}: expected length {expected}, got {got}")]
    ShapeMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("mask has no known entries")]
    EmptyMask,
    #[error("loss became non-finite ({loss}) at iteration {iter}; training aborted")]
    NonFiniteLoss { iter: usize, loss: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Sum of absolute errors over the known entries (mask = true). The sum is
/// unnormalized; any normalization is a rescaling absorbed by the learning
/// rate.
pub fn masked_l1(pred: &[f64], target: &[f64], mask: &[bool]) -> Result<f64, TrainError> {
    if pred.len() != target.len() || pred.len() != mask.len() {
        return Err(TrainError::ShapeMismatch {
            what: "masked_l1",
            expected: pred.len(),
            got: target.len().min(mask.len()),
        });
    }
    if !mask.iter().any(|&m| m) {
        return Err(TrainError::EmptyMask);
    }
    Ok(pred
        .iter()
        .zip(target)
        .zip(mask)
        .filter(|&(_, &m)| m)
        .map(|((p, t), _)| (p - t).abs())
        .sum())
}

fn l1_sign(d: f64) -> f64 {
    if d > 0.0 {
        1.0
    } else if d < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Gradient of one filter's coefficients, mirroring (epsilon, alpha, beta).
#[derive(Debug, Clone, PartialEq)]
pub struct FilterGradient {
    pub epsilon: f64,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

/// Gradients for every filter of every layer, congruent to the model shape:
/// `layers[p][f * f_in + g]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet {
    pub layers: Vec<Vec<FilterGradient>>,
}

impl GradientSet {
    /// Flattens in the same order as [`ScnnModel::flatten_params`]; for tied
    /// models the shared coefficient gradient is d/d_alpha + d/d_beta.
    pub fn flatten(&self, tied: bool) -> Vec<f64> {
        let mut out = Vec::new();
        for layer in &self.layers {
            for g in layer {
                out.push(g.epsilon);
                if tied {
                    out.extend(g.alpha.iter().zip(&g.beta).map(|(a, b)| a + b));
                } else {
                    out.extend_from_slice(&g.alpha);
                    out.extend_from_slice(&g.beta);
                }
            }
        }
        out
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Reverse-mode gradients of the masked l1 loss with respect to every filter
/// coefficient. The tape must come from a matching forward pass; the filter
/// matrix is symmetric, so the input adjoint reuses filter application on the
/// output adjoint.
pub fn backward(
    lap: &LaplacianSet,
    model: &ScnnModel,
    tape: &Tape,
    target: &[f64],
    mask: &[bool],
) -> Result<GradientSet, TrainError> {
    if tape.layers.len() != model.layers.len() {
        return Err(TrainError::Model(ModelError::TapeMismatch {
            reason: "layer count differs",
        }));
    }
    let output = tape.output();
    if target.len() != output.len() || mask.len() != output.len() {
        return Err(TrainError::ShapeMismatch {
            what: "backward target/mask",
            expected: output.len(),
            got: target.len().min(mask.len()),
        });
    }

    // d loss / d output, with sign(0) = 0.
    let mut output_adjoint: Vec<Vec<f64>> = vec![output
        .iter()
        .zip(target)
        .zip(mask)
        .map(|((o, t), &m)| if m { l1_sign(o - t) } else { 0.0 })
        .collect()];

    let mut layer_grads: Vec<Vec<FilterGradient>> = Vec::with_capacity(model.layers.len());
    for (layer, ltape) in model.layers.iter().zip(&tape.layers).rev() {
        if ltape.outputs.len() != layer.f_out || ltape.inputs.len() != layer.f_in {
            return Err(TrainError::Model(ModelError::TapeMismatch {
                reason: "feature widths differ",
            }));
        }
        // Pre-activation adjoints: dL/dz_f = dL/dx_f * sigma'(z_f).
        let pre_adjoints: Vec<Vec<f64>> = output_adjoint
            .iter()
            .zip(&ltape.pre_activations)
            .map(|(adj, z)| {
                adj.iter()
                    .zip(z)
                    .map(|(a, &zi)| a * layer.nonlinearity.derivative(zi))
                    .collect()
            })
            .collect();

        // Coefficient gradients from the cached shift powers of the inputs.
        let mut grads = Vec::with_capacity(layer.f_in * layer.f_out);
        for f in 0..layer.f_out {
            for g in 0..layer.f_in {
                let adj = &pre_adjoints[f];
                let epsilon = dot(adj, &ltape.inputs[g]);
                let alpha = ltape.lower_powers[g][..layer.lower_order]
                    .iter()
                    .map(|p| dot(adj, p))
                    .collect();
                let beta = ltape.upper_powers[g][..layer.upper_order]
                    .iter()
                    .map(|p| dot(adj, p))
                    .collect();
                grads.push(FilterGradient {
                    epsilon,
                    alpha,
                    beta,
                });
            }
        }
        layer_grads.push(grads);

        // Input adjoints: dL/dx_g = sum_f H_fg^T dz_f = sum_f H_fg dz_f.
        let rounds = layer.lower_order.max(layer.upper_order);
        let mut adjoint_lower = Vec::with_capacity(layer.f_out);
        let mut adjoint_upper = Vec::with_capacity(layer.f_out);
        for adj in &pre_adjoints {
            adjoint_lower.push(shift_powers(&lap.lower, adj, rounds)?);
            adjoint_upper.push(shift_powers(&lap.upper, adj, rounds)?);
        }
        let n = output_adjoint[0].len();
        let mut input_adjoint = vec![vec![0.0; n]; layer.f_in];
        for (g, target_adj) in input_adjoint.iter_mut().enumerate() {
            for f in 0..layer.f_out {
                let y = combine_powers(
                    layer.filter(f, g),
                    &pre_adjoints[f],
                    &adjoint_lower[f],
                    &adjoint_upper[f],
                );
                for (t, yi) in target_adj.iter_mut().zip(&y) {
                    *t += yi;
                }
            }
        }
        output_adjoint = input_adjoint;
    }

    layer_grads.reverse();
    Ok(GradientSet {
        layers: layer_grads,
    })
}

/// Adam optimizer state; moments congruent to the flat parameter vector.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: usize,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl AdamState {
    pub fn new(lr: f64, num_params: usize) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
        }
    }

    /// One bias-corrected Adam update in place.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        assert_eq!(params.len(), self.m.len(), "parameter count changed");
        assert_eq!(grads.len(), self.m.len(), "gradient count changed");
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grads[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grads[i] * grads[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

/// Training hyperparameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub iters: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            iters: 1000,
        }
    }
}

/// Full experiment cell description: model shape plus training settings.
/// Serializable as the training-config JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainSpec {
    pub layers: usize,
    pub features: usize,
    pub filter: FilterSpec,
    pub nonlinearity: Nonlinearity,
    pub lr: f64,
    pub iters: usize,
    pub seed: u64,
}

/// Full-batch Adam training on an imputation task. Returns the loss trace,
/// one entry per iteration (loss before that iteration's update). Training is
/// deterministic: all randomness lives in model initialization and task
/// generation.
pub fn train(
    lap: &LaplacianSet,
    model: &mut ScnnModel,
    task: &ImputationTask,
    config: &TrainConfig,
) -> Result<Vec<f64>, TrainError> {
    let mut params = model.flatten_params();
    let mut adam = AdamState::new(config.lr, params.len());
    let mut trace = Vec::with_capacity(config.iters);
    for iter in 0..config.iters {
        let (output, tape) = model_forward(lap, model, &task.input)?;
        let loss = masked_l1(&output, &task.target, &task.mask)?;
        if !loss.is_finite() {
            return Err(TrainError::NonFiniteLoss { iter, loss });
        }
        trace.push(loss);
        let grads = backward(lap, model, &tape, &task.target, &task.mask)?;
        adam.step(&mut params, &grads.flatten(model.tied));
        model.set_flat_params(&params)?;
    }
    Ok(trace)
}

/// Moving average with the given window; entry i averages `trace[i..i+window]`.
pub fn moving_average(trace: &[f64], window: usize) -> Vec<f64> {
    if trace.len() < window || window == 0 {
        return trace.to_vec();
    }
    (0..=trace.len() - window)
        .map(|i| trace[i..i + window].iter().sum::<f64>() / window as f64)
        .collect()
}

/// Qualitative convergence check: the smoothed trace never rises by more
/// than `rel_slack` relative per step and ends strictly below its start.
///
/// Full-batch Adam on an l1 objective orbits the optimum at the
/// learning-rate scale instead of settling, so the smoothed trace keeps an
/// oscillation floor; the slack admits that floor while still rejecting any
/// genuine upward trend.
pub fn is_smoothly_decreasing(trace: &[f64], window: usize, rel_slack: f64) -> bool {
    let smoothed = moving_average(trace, window);
    if smoothed.len() < 2 {
        return true;
    }
    let monotone = smoothed
        .windows(2)
        .all(|w| w[1] <= w[0] * (1.0 + rel_slack));
    monotone && smoothed.last().unwrap() < smoothed.first().unwrap()
}

/// Outcome of a finite-difference gradient check.
#[derive(Debug, Clone, Copy)]
pub struct GradCheckReport {
    /// Worst relative error max(|analytic - fd|) / max(|fd|, floor).
    pub max_rel_error: f64,
    pub checked: usize,
    /// Coordinates excluded because a probe pass sat on a kink.
    pub skipped: usize,
}

/// Compares analytic gradients against central finite differences
/// (step `fd_step`) coordinate by coordinate.
///
/// The loss is piecewise smooth: LeakyRelu pre-activations and the masked
/// residuals of |.| introduce kinks. A coordinate is skipped when the three
/// probe points (base, +step, -step) do not sit strictly on the same side of
/// every kink, with `kink_tol` as the ambiguity band: across a kink the
/// two-sided difference quotient does not estimate the subgradient.
pub fn gradient_check(
    lap: &LaplacianSet,
    model: &ScnnModel,
    task: &ImputationTask,
    fd_step: f64,
    kink_tol: f64,
) -> Result<GradCheckReport, TrainError> {
    let base_params = model.flatten_params();
    let (_, tape) = model_forward(lap, model, &task.input)?;
    let analytic = backward(lap, model, &tape, &task.target, &task.mask)?.flatten(model.tied);
    let base_kinks = kink_values(model, &tape, task);

    let mut probe = model.clone();
    let mut max_rel_error: f64 = 0.0;
    let mut checked = 0;
    let mut skipped = 0;
    for i in 0..base_params.len() {
        let mut eval = |delta: f64| -> Result<(f64, Vec<f64>), TrainError> {
            let mut params = base_params.clone();
            params[i] += delta;
            probe.set_flat_params(&params)?;
            let (output, tape) = model_forward(lap, &probe, &task.input)?;
            let loss = masked_l1(&output, &task.target, &task.mask)?;
            Ok((loss, kink_values(&probe, &tape, task)))
        };
        let (loss_plus, kinks_plus) = eval(fd_step)?;
        let (loss_minus, kinks_minus) = eval(-fd_step)?;
        let crossing = base_kinks
            .iter()
            .zip(&kinks_plus)
            .zip(&kinks_minus)
            .any(|((&b, &p), &m)| kink_crossed(b, p, m, kink_tol));
        if crossing {
            skipped += 1;
            continue;
        }
        let fd = (loss_plus - loss_minus) / (2.0 * fd_step);
        // The 1e-2 denominator floor folds an absolute tolerance of
        // 1e-7 into the 1e-5 relative bound: |a - fd| <= max(1e-5 |fd|, 1e-7)
        // iff |a - fd| / max(|fd|, 1e-2) <= 1e-5.
        let denom = fd.abs().max(1e-2);
        max_rel_error = max_rel_error.max((analytic[i] - fd).abs() / denom);
        checked += 1;
    }
    Ok(GradCheckReport {
        max_rel_error,
        checked,
        skipped,
    })
}

/// Whether the probes straddle (or sit inside the ambiguity band of) a kink
/// the coordinate actually influences. Untouched values (bit-identical in
/// all passes) never skip.
fn kink_crossed(base: f64, plus: f64, minus: f64, tol: f64) -> bool {
    if base == plus && base == minus {
        return false;
    }
    let side = |v: f64| v > 0.0;
    if side(base) != side(plus) || side(base) != side(minus) {
        return true;
    }
    // Interior crossings between the sampled points cannot be ruled out this
    // close to the kink.
    base.abs() < tol || plus.abs() < tol || minus.abs() < tol
}

/// All kink-relevant values of one forward pass in a fixed order: LeakyRelu
/// pre-activations, then masked residuals.
fn kink_values(model: &ScnnModel, tape: &Tape, task: &ImputationTask) -> Vec<f64> {
    let mut values = Vec::new();
    for (layer, ltape) in model.layers.iter().zip(&tape.layers) {
        if matches!(layer.nonlinearity, Nonlinearity::LeakyRelu { .. }) {
            for z in &ltape.pre_activations {
                values.extend_from_slice(z);
            }
        }
    }
    let output = tape.output();
    for ((o, t), &m) in output.iter().zip(&task.target).zip(&task.mask) {
        if m {
            values.push(o - t);
        }
    }
    values
}
