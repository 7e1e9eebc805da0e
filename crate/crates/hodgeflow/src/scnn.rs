//! Simplicial convolutional neural networks: layers of filter banks with
//! elementwise nonlinearities, a tape-recording forward pass, and parameter
//! flattening for the optimizer.
//!
//! Feature widths follow the (1, F, ..., F, 1) shape: a single input signal
//! fans out to F features, intermediate layers map F to F, and the last
//! layer collapses back to one output. Layers carry no bias terms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complex::LaplacianSet;
use crate::filter::{combine_powers, shift_powers, SimplicialFilter};
use crate::linalg::LinalgError;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("{what}: expected {expected}, got {got}")]
    Shape {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("tape does not match the model ({reason})")]
    TapeMismatch { reason: &'static str },
}

/// Elementwise nonlinearity applied after each filter bank.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Nonlinearity {
    Identity,
    Tanh,
    LeakyRelu { slope: f64 },
}

impl Nonlinearity {
    pub fn leaky_relu_default() -> Self {
        Nonlinearity::LeakyRelu { slope: 0.01 }
    }

    pub fn apply(self, z: f64) -> f64 {
        match self {
            Nonlinearity::Identity => z,
            Nonlinearity::Tanh => z.tanh(),
            Nonlinearity::LeakyRelu { slope } => {
                if z >= 0.0 {
                    z
                } else {
                    slope * z
                }
            }
        }
    }

    /// Derivative; the LeakyRelu subgradient at 0 is the negative-side slope.
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Nonlinearity::Identity => 1.0,
            Nonlinearity::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
            Nonlinearity::LeakyRelu { slope } => {
                if z > 0.0 {
                    1.0
                } else {
                    slope
                }
            }
        }
    }

    /// Odd nonlinearities commute with sign flips (orientation changes).
    pub fn is_odd(self) -> bool {
        matches!(self, Nonlinearity::Identity | Nonlinearity::Tanh)
    }
}

/// Applies a nonlinearity elementwise.
pub fn apply_nonlinearity(kind: Nonlinearity, z: &[f64]) -> Vec<f64> {
    z.iter().map(|&v| kind.apply(v)).collect()
}

/// One SCNN layer: an `f_out x f_in` bank of filters sharing the same
/// (L1, L2) orders, followed by a nonlinearity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScnnLayer {
    pub f_in: usize,
    pub f_out: usize,
    pub lower_order: usize,
    pub upper_order: usize,
    pub nonlinearity: Nonlinearity,
    /// Row-major grid: `filters[f * f_in + g]` maps input g to output f.
    filters: Vec<SimplicialFilter>,
}

impl ScnnLayer {
    pub fn new(
        f_in: usize,
        f_out: usize,
        lower_order: usize,
        upper_order: usize,
        nonlinearity: Nonlinearity,
        filters: Vec<SimplicialFilter>,
    ) -> Result<Self, ModelError> {
        if filters.len() != f_in * f_out {
            return Err(ModelError::Shape {
                what: "filter grid",
                expected: f_in * f_out,
                got: filters.len(),
            });
        }
        for h in &filters {
            if h.lower_order() != lower_order || h.upper_order() != upper_order {
                return Err(ModelError::Shape {
                    what: "filter orders",
                    expected: lower_order + upper_order,
                    got: h.lower_order() + h.upper_order(),
                });
            }
        }
        Ok(Self {
            f_in,
            f_out,
            lower_order,
            upper_order,
            nonlinearity,
            filters,
        })
    }

    pub fn filter(&self, f: usize, g: usize) -> &SimplicialFilter {
        &self.filters[f * self.f_in + g]
    }

    pub fn filter_mut(&mut self, f: usize, g: usize) -> &mut SimplicialFilter {
        &mut self.filters[f * self.f_in + g]
    }

    pub fn filters(&self) -> &[SimplicialFilter] {
        &self.filters
    }
}

/// Filter parameterization: independent lower/upper coefficients, or a
/// single tied set shared between them (the basic polynomial-in-L filter).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FilterSpec {
    /// Free coefficients: 1 + l1 + l2 parameters per filter.
    Scnn { lower: usize, upper: usize },
    /// Tied coefficients h_0..h_degree: 1 + degree parameters per filter,
    /// with alpha = beta = h[1..].
    Snn { degree: usize },
}

impl FilterSpec {
    pub fn lower_order(self) -> usize {
        match self {
            FilterSpec::Scnn { lower, .. } => lower,
            FilterSpec::Snn { degree } => degree,
        }
    }

    pub fn upper_order(self) -> usize {
        match self {
            FilterSpec::Scnn { upper, .. } => upper,
            FilterSpec::Snn { degree } => degree,
        }
    }

    /// Free parameters per filter.
    pub fn params_per_filter(self) -> usize {
        match self {
            FilterSpec::Scnn { lower, upper } => 1 + lower + upper,
            FilterSpec::Snn { degree } => 1 + degree,
        }
    }
}

/// A P-layer SCNN over k-simplicial signals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScnnModel {
    /// Simplex order the model operates on.
    pub order: usize,
    /// Tied models share one coefficient vector between alpha and beta.
    pub tied: bool,
    pub layers: Vec<ScnnLayer>,
}

/// Draws a model with i.i.d. uniform coefficients on [-s, s], where
/// `s = (f_in * params_per_filter)^(-1/2)`; deterministic per seed.
pub fn init_model(
    order: usize,
    num_layers: usize,
    features: usize,
    spec: FilterSpec,
    nonlinearity: Nonlinearity,
    seed: u64,
) -> ScnnModel {
    assert!(num_layers >= 1, "a model needs at least one layer");
    assert!(features >= 1, "a model needs at least one feature");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let widths = feature_widths(num_layers, features);

    let mut layers = Vec::with_capacity(num_layers);
    for p in 0..num_layers {
        let (f_in, f_out) = (widths[p], widths[p + 1]);
        let scale = 1.0 / ((f_in * spec.params_per_filter()) as f64).sqrt();
        let mut filters = Vec::with_capacity(f_in * f_out);
        for _ in 0..f_in * f_out {
            filters.push(draw_filter(&mut rng, spec, scale));
        }
        layers.push(
            ScnnLayer::new(
                f_in,
                f_out,
                spec.lower_order(),
                spec.upper_order(),
                nonlinearity,
                filters,
            )
            .expect("grid built to size"),
        );
    }
    ScnnModel {
        order,
        tied: matches!(spec, FilterSpec::Snn { .. }),
        layers,
    }
}

/// Feature widths (1, F, ..., F, 1) for a P-layer model.
pub fn feature_widths(num_layers: usize, features: usize) -> Vec<usize> {
    let mut widths = vec![1];
    for _ in 1..num_layers {
        widths.push(features);
    }
    widths.push(1);
    widths
}

fn draw_filter(rng: &mut ChaCha8Rng, spec: FilterSpec, scale: f64) -> SimplicialFilter {
    let mut draw = |n: usize| -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-scale..scale)).collect()
    };
    match spec {
        FilterSpec::Scnn { lower, upper } => {
            let epsilon = draw(1)[0];
            SimplicialFilter::new(epsilon, draw(lower), draw(upper))
        }
        FilterSpec::Snn { degree } => {
            let epsilon = draw(1)[0];
            let shared = draw(degree);
            SimplicialFilter::new(epsilon, shared.clone(), shared)
        }
    }
}

impl ScnnModel {
    /// Number of free parameters (tied filters count alpha and beta once).
    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|layer| layer.filters.len() * self.params_per_filter(layer))
            .sum()
    }

    fn params_per_filter(&self, layer: &ScnnLayer) -> usize {
        if self.tied {
            1 + layer.lower_order
        } else {
            1 + layer.lower_order + layer.upper_order
        }
    }

    /// Flattens the free parameters in a fixed order: layers in order, grid
    /// row-major, then (epsilon, alpha.., beta..) per filter (beta omitted
    /// when tied).
    pub fn flatten_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for layer in &self.layers {
            for h in &layer.filters {
                out.push(h.epsilon);
                out.extend_from_slice(&h.alpha);
                if !self.tied {
                    out.extend_from_slice(&h.beta);
                }
            }
        }
        out
    }

    /// Writes a flat parameter vector back into the model; tied models
    /// mirror alpha into beta.
    pub fn set_flat_params(&mut self, params: &[f64]) -> Result<(), ModelError> {
        if params.len() != self.num_params() {
            return Err(ModelError::Shape {
                what: "flat parameters",
                expected: self.num_params(),
                got: params.len(),
            });
        }
        let tied = self.tied;
        let mut it = params.iter();
        for layer in &mut self.layers {
            for h in &mut layer.filters {
                h.epsilon = *it.next().unwrap();
                for a in h.alpha.iter_mut() {
                    *a = *it.next().unwrap();
                }
                if tied {
                    h.beta.clone_from(&h.alpha);
                } else {
                    for b in h.beta.iter_mut() {
                        *b = *it.next().unwrap();
                    }
                }
            }
        }
        Ok(())
    }

    /// Checks the chained feature widths (first f_in and last f_out are 1).
    pub fn validate(&self) -> Result<(), ModelError> {
        let first = self.layers.first().ok_or(ModelError::Shape {
            what: "layer count",
            expected: 1,
            got: 0,
        })?;
        if first.f_in != 1 {
            return Err(ModelError::Shape {
                what: "first layer f_in",
                expected: 1,
                got: first.f_in,
            });
        }
        let last = self.layers.last().unwrap();
        if last.f_out != 1 {
            return Err(ModelError::Shape {
                what: "last layer f_out",
                expected: 1,
                got: last.f_out,
            });
        }
        for pair in self.layers.windows(2) {
            if pair[0].f_out != pair[1].f_in {
                return Err(ModelError::Shape {
                    what: "adjacent layer widths",
                    expected: pair[0].f_out,
                    got: pair[1].f_in,
                });
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(json: &str) -> serde_json::Result<Self> {
        serde_json::from_str(json)
    }
}

/// Per-layer forward records kept for the backward pass.
#[derive(Debug, Clone)]
pub struct LayerTape {
    /// Input features x_{p-1}, one column per g.
    pub inputs: Vec<Vec<f64>>,
    /// lower_powers[g][l-1] = L_low^l x_g, up to the layer's shift rounds.
    pub lower_powers: Vec<Vec<Vec<f64>>>,
    /// upper_powers[g][l-1] = L_up^l x_g.
    pub upper_powers: Vec<Vec<Vec<f64>>>,
    /// Pre-activations z_p^f (after summing the filter bank over g).
    pub pre_activations: Vec<Vec<f64>>,
    /// Outputs x_p^f = sigma(z_p^f).
    pub outputs: Vec<Vec<f64>>,
}

/// Forward tape of a whole model evaluation.
#[derive(Debug, Clone)]
pub struct Tape {
    pub layers: Vec<LayerTape>,
}

impl Tape {
    /// Final single-feature output.
    pub fn output(&self) -> &[f64] {
        &self.layers.last().expect("nonempty model").outputs[0]
    }
}

fn layer_powers(
    lap: &LaplacianSet,
    layer: &ScnnLayer,
    inputs: &[Vec<f64>],
) -> Result<(Vec<Vec<Vec<f64>>>, Vec<Vec<Vec<f64>>>), ModelError> {
    let rounds = layer.lower_order.max(layer.upper_order);
    let mut lower = Vec::with_capacity(inputs.len());
    let mut upper = Vec::with_capacity(inputs.len());
    for x in inputs {
        lower.push(shift_powers(&lap.lower, x, rounds)?);
        upper.push(shift_powers(&lap.upper, x, rounds)?);
    }
    Ok((lower, upper))
}

fn layer_outputs(
    layer: &ScnnLayer,
    inputs: &[Vec<f64>],
    lower_powers: &[Vec<Vec<f64>>],
    upper_powers: &[Vec<Vec<f64>>],
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = inputs[0].len();
    let mut pre_activations = Vec::with_capacity(layer.f_out);
    for f in 0..layer.f_out {
        let mut z = vec![0.0; n];
        // Sum over input features in ascending order for reproducibility.
        for g in 0..layer.f_in {
            let y = combine_powers(
                layer.filter(f, g),
                &inputs[g],
                &lower_powers[g],
                &upper_powers[g],
            );
            for (zi, yi) in z.iter_mut().zip(&y) {
                *zi += yi;
            }
        }
        pre_activations.push(z);
    }
    let outputs = pre_activations
        .iter()
        .map(|z| apply_nonlinearity(layer.nonlinearity, z))
        .collect();
    (pre_activations, outputs)
}

/// Applies one layer to a set of input features.
pub fn layer_forward(
    lap: &LaplacianSet,
    layer: &ScnnLayer,
    inputs: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>, ModelError> {
    check_layer_inputs(lap, layer, inputs)?;
    let (lower_powers, upper_powers) = layer_powers(lap, layer, inputs)?;
    let (_, outputs) = layer_outputs(layer, inputs, &lower_powers, &upper_powers);
    Ok(outputs)
}

fn check_layer_inputs(
    lap: &LaplacianSet,
    layer: &ScnnLayer,
    inputs: &[Vec<f64>],
) -> Result<(), ModelError> {
    if inputs.len() != layer.f_in {
        return Err(ModelError::Shape {
            what: "layer inputs",
            expected: layer.f_in,
            got: inputs.len(),
        });
    }
    for x in inputs {
        if x.len() != lap.dim() {
            return Err(ModelError::Shape {
                what: "signal length",
                expected: lap.dim(),
                got: x.len(),
            });
        }
    }
    Ok(())
}

/// Full forward pass, recording a tape for the backward pass.
pub fn model_forward(
    lap: &LaplacianSet,
    model: &ScnnModel,
    x0: &[f64],
) -> Result<(Vec<f64>, Tape), ModelError> {
    model.validate()?;
    let mut features = vec![x0.to_vec()];
    let mut tapes = Vec::with_capacity(model.layers.len());
    for layer in &model.layers {
        check_layer_inputs(lap, layer, &features)?;
        let (lower_powers, upper_powers) = layer_powers(lap, layer, &features)?;
        let (pre_activations, outputs) =
            layer_outputs(layer, &features, &lower_powers, &upper_powers);
        tapes.push(LayerTape {
            inputs: std::mem::take(&mut features),
            lower_powers,
            upper_powers,
            pre_activations,
            outputs: outputs.clone(),
        });
        features = outputs;
    }
    let output = features[0].clone();
    Ok((output, Tape { layers: tapes }))
}

/// Forward pass without keeping the tape.
pub fn model_output(
    lap: &LaplacianSet,
    model: &ScnnModel,
    x0: &[f64],
) -> Result<Vec<f64>, ModelError> {
    model.validate()?;
    let mut features = vec![x0.to_vec()];
    for layer in &model.layers {
        check_layer_inputs(lap, layer, &features)?;
        features = layer_forward(lap, layer, &features)?;
    }
    Ok(features.into_iter().next().unwrap())
}
