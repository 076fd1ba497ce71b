//! Leaky integrate-and-fire network with surrogate-gradient BPTT.
//!
//! Forward dynamics per layer, with `M_0 = 0`, `S_0 = 0`:
//!
//! ```text
//! M_t = W * X_t + alpha .* M_{t-1} - alpha .* S_{t-1}
//! S_t = (M_t > threshold)
//! ```
//!
//! Layers are fully connected and feed the next layer within the same time
//! step. The decay `alpha = sigmoid(decay_raw)` is a trainable per-neuron
//! parameter; the reset is by subtraction, not to zero.
//!
//! The backward pass is exact reverse-mode differentiation of this
//! recurrence with the Heaviside derivative replaced by the arctan
//! surrogate ([`surrogate_derivative`]). [`forward_relaxed`] swaps the hard
//! threshold for the surrogate's smooth primitive, making the whole network
//! differentiable so the BPTT machinery can be validated against finite
//! differences; in that mode the backward pass is mathematically exact, not
//! an approximation.
//!
//! Internally, per-layer state is held time-major (T x channels) so the
//! recurrence walks contiguous rows and weight updates reduce to one GEMM
//! per layer. Public matrices are channels x time, matching the dense form
//! of [`crate::types::SpikeTrain`].

use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::Path;

use byteorder::{LittleEndian, WriteBytesExt};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::io::Parser;

/// Firing threshold shared by every neuron.
pub const DEFAULT_THRESHOLD: f64 = 1.0;

/// Initial decay constant; `decay_raw` starts at `sigmoid^-1(0.9)`.
pub const DECAY_INIT: f64 = 0.9;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"PETW";
pub const CHECKPOINT_VERSION: u32 = 1;

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Transposed copy in standard (row-major) layout, so rows of the result
/// are contiguous slices.
fn transposed(a: &Array2<f64>) -> Array2<f64> {
    a.t().as_standard_layout().into_owned()
}

/// Arctan surrogate for the Heaviside derivative, evaluated at the
/// threshold-relative membrane `m = M - threshold`:
/// `1 / (pi * (1 + (m * pi)^2))`.
pub fn surrogate_derivative(m: f64) -> f64 {
    1.0 / (PI * (1.0 + (m * PI) * (m * PI)))
}

/// Spike nonlinearity used by the forward pass.
///
/// `Hard` is the production mode: Heaviside forward, [`surrogate_derivative`]
/// backward. `Relaxed` replaces the Heaviside with the smooth
/// `atan(pi*m)/pi + 1/2` and backpropagates its true derivative
/// `1 / (1 + (pi*m)^2)`, so gradients are exact and finite-difference
/// checkable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpikeMode {
    Hard,
    Relaxed,
}

impl SpikeMode {
    fn activate(self, m: f64) -> f64 {
        match self {
            SpikeMode::Hard => {
                if m > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            SpikeMode::Relaxed => (PI * m).atan() / PI + 0.5,
        }
    }

    fn derivative(self, m: f64) -> f64 {
        match self {
            SpikeMode::Hard => surrogate_derivative(m),
            SpikeMode::Relaxed => 1.0 / (1.0 + (PI * m) * (PI * m)),
        }
    }
}

/// One fully connected LIF layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LifLayer {
    weights: Array2<f64>,
    decay_raw: Array1<f64>,
    threshold: f64,
}

impl LifLayer {
    /// Fresh layer: weights uniform in +-sqrt(1/in_dim), decay at
    /// [`DECAY_INIT`], threshold at [`DEFAULT_THRESHOLD`].
    pub fn init(in_dim: usize, out_dim: usize, rng: &mut impl Rng) -> Self {
        let bound = (1.0 / in_dim as f64).sqrt();
        let data: Vec<f64> = (0..in_dim * out_dim)
            .map(|_| rng.random_range(-bound..=bound))
            .collect();
        let weights =
            Array2::from_shape_vec((out_dim, in_dim), data).expect("shape matches data length");
        let raw = (DECAY_INIT / (1.0 - DECAY_INIT)).ln();
        Self {
            weights,
            decay_raw: Array1::from_elem(out_dim, raw),
            threshold: DEFAULT_THRESHOLD,
        }
    }

    /// Builds a layer from explicit parameters.
    ///
    /// `weights` is out_dim x in_dim; `decay_raw` must have one entry per
    /// output neuron. Finite raw values keep `alpha` strictly inside (0, 1);
    /// infinities pin it to the corresponding boundary.
    pub fn from_parts(weights: Array2<f64>, decay_raw: Array1<f64>, threshold: f64) -> Result<Self> {
        if weights.nrows() != decay_raw.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} decay entries", weights.nrows()),
                found: format!("{}", decay_raw.len()),
            });
        }
        if weights.nrows() == 0 || weights.ncols() == 0 {
            return Err(Error::InvalidConfig("layer dims must be at least 1".into()));
        }
        Ok(Self {
            weights,
            decay_raw,
            threshold,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut Array2<f64> {
        &mut self.weights
    }

    pub fn decay_raw(&self) -> &Array1<f64> {
        &self.decay_raw
    }

    pub fn decay_raw_mut(&mut self) -> &mut Array1<f64> {
        &mut self.decay_raw
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn set_threshold(&mut self, threshold: f64) {
        self.threshold = threshold;
    }

    /// Per-neuron decay constants `sigmoid(decay_raw)`.
    pub fn alphas(&self) -> Array1<f64> {
        self.decay_raw.mapv(sigmoid)
    }
}

/// Stack of LIF layers with chained dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct LifNetwork {
    layers: Vec<LifLayer>,
}

impl LifNetwork {
    /// Initializes a network with the given layer widths `[in, .., out]`,
    /// seeding all weights from `seed`.
    pub fn new(dims: &[usize], seed: u64) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::InvalidConfig(
                "a network needs at least an input and an output width".into(),
            ));
        }
        if dims.contains(&0) {
            return Err(Error::InvalidConfig("layer dims must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = dims
            .windows(2)
            .map(|w| LifLayer::init(w[0], w[1], &mut rng))
            .collect();
        Ok(Self { layers })
    }

    /// Assembles a network from prebuilt layers, checking the dimension
    /// chain.
    pub fn from_layers(layers: Vec<LifLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidConfig("a network needs at least one layer".into()));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::DimensionMismatch {
                    expected: format!("layer {} input width {}", i + 1, pair[0].out_dim()),
                    found: format!("{}", pair[1].in_dim()),
                });
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[LifLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [LifLayer] {
        &mut self.layers
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    /// Layer widths as `[in, hidden.., out]`.
    pub fn dims(&self) -> Vec<usize> {
        let mut dims = vec![self.in_dim()];
        dims.extend(self.layers.iter().map(|l| l.out_dim()));
        dims
    }

    /// Writes the checkpoint. Thresholds are not stored; they are fixed at
    /// [`DEFAULT_THRESHOLD`]. Returns the number of bytes written.
    pub fn save<W: Write>(&self, mut dest: W) -> Result<u64> {
        dest.write_all(CHECKPOINT_MAGIC)?;
        dest.write_u32::<LittleEndian>(CHECKPOINT_VERSION)?;
        dest.write_u32::<LittleEndian>(self.layers.len() as u32)?;
        let mut written = 12u64;
        for layer in &self.layers {
            dest.write_u32::<LittleEndian>(layer.in_dim() as u32)?;
            dest.write_u32::<LittleEndian>(layer.out_dim() as u32)?;
            for &w in layer.weights.iter() {
                dest.write_f64::<LittleEndian>(w)?;
            }
            for &d in layer.decay_raw.iter() {
                dest.write_f64::<LittleEndian>(d)?;
            }
            written += 8 + 8 * (layer.weights.len() as u64 + layer.decay_raw.len() as u64);
        }
        dest.flush()?;
        Ok(written)
    }

    pub fn save_file<P: AsRef<Path>>(&self, path: P) -> Result<u64> {
        let file = fs::File::create(path)?;
        self.save(std::io::BufWriter::new(file))
    }

    /// Parses a checkpoint, validating magic, version, and the dimension
    /// chain. Errors carry the byte offset of the offending field.
    pub fn load(bytes: &[u8]) -> Result<Self> {
        let mut p = Parser { bytes, pos: 0 };
        if p.take(4)? != CHECKPOINT_MAGIC {
            return Err(Error::BadMagic { offset: 0 });
        }
        let version = p.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::UnsupportedVersion {
                found: version,
                expected: CHECKPOINT_VERSION,
            });
        }
        let layer_count = p.u32()?;
        if layer_count == 0 {
            return Err(Error::InvalidField {
                offset: 8,
                reason: "layer count must be at least 1".into(),
            });
        }

        let mut layers = Vec::with_capacity(layer_count as usize);
        let mut prev_out: Option<usize> = None;
        for _ in 0..layer_count {
            let offset = p.pos as u64;
            let in_dim = p.u32()? as usize;
            let out_dim = p.u32()? as usize;
            if in_dim == 0 || out_dim == 0 {
                return Err(Error::InvalidField {
                    offset,
                    reason: "layer dims must be at least 1".into(),
                });
            }
            if let Some(prev) = prev_out {
                if in_dim != prev {
                    return Err(Error::InvalidField {
                        offset,
                        reason: format!(
                            "layer input width {in_dim} does not chain from previous output {prev}"
                        ),
                    });
                }
            }
            prev_out = Some(out_dim);

            let weight_bytes = (in_dim as u64 * out_dim as u64)
                .checked_mul(8)
                .ok_or_else(|| Error::InvalidField {
                    offset,
                    reason: "weight matrix size overflows".into(),
                })? as usize;
            let weights: Vec<f64> = p
                .take(weight_bytes)?
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            let weights = Array2::from_shape_vec((out_dim, in_dim), weights)
                .expect("length checked against dims");
            let decay: Vec<f64> = p
                .take(out_dim * 8)?
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            layers.push(LifLayer {
                weights,
                decay_raw: Array1::from_vec(decay),
                threshold: DEFAULT_THRESHOLD,
            });
        }
        if p.pos != bytes.len() {
            return Err(Error::InvalidField {
                offset: p.pos as u64,
                reason: format!("{} trailing bytes after last layer", bytes.len() - p.pos),
            });
        }
        Self::from_layers(layers)
    }

    pub fn load_file<P: AsRef<Path>>(path: P) -> Result<Self> {
        let bytes = fs::read(path)?;
        Self::load(&bytes)
    }
}

/// Per-layer membranes and spikes, time-major (T x out).
struct LayerTrace {
    membranes: Array2<f64>,
    spikes: Array2<f64>,
}

/// Everything the backward pass needs from a forward run.
pub struct ForwardTrace {
    mode: SpikeMode,
    /// Network input, time-major (T x in).
    input: Array2<f64>,
    layers: Vec<LayerTrace>,
}

impl ForwardTrace {
    pub fn mode(&self) -> SpikeMode {
        self.mode
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn num_timesteps(&self) -> usize {
        self.input.nrows()
    }

    /// Membrane potentials of one layer, channels x time.
    pub fn membranes(&self, layer: usize) -> Array2<f64> {
        transposed(&self.layers[layer].membranes)
    }

    /// Spike outputs of one layer, channels x time.
    pub fn spikes(&self, layer: usize) -> Array2<f64> {
        transposed(&self.layers[layer].spikes)
    }
}

fn layer_forward(layer: &LifLayer, x_tm: &Array2<f64>, mode: SpikeMode) -> LayerTrace {
    let t_len = x_tm.nrows();
    let out = layer.out_dim();
    let alphas = layer.alphas();
    // One GEMM for all time steps; the recurrence then runs elementwise.
    let mut membranes = x_tm.dot(&layer.weights.t());
    let mut spikes = Array2::zeros((t_len, out));
    for t in 0..t_len {
        for j in 0..out {
            if t > 0 {
                membranes[(t, j)] += alphas[j] * (membranes[(t - 1, j)] - spikes[(t - 1, j)]);
            }
            spikes[(t, j)] = mode.activate(membranes[(t, j)] - layer.threshold);
        }
    }
    LayerTrace { membranes, spikes }
}

fn run(net: &LifNetwork, x: &Array2<f64>, mode: SpikeMode) -> Result<(Array2<f64>, ForwardTrace)> {
    if x.nrows() != net.in_dim() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} input channels", net.in_dim()),
            found: format!("{}", x.nrows()),
        });
    }
    let input = transposed(x);
    let mut layers: Vec<LayerTrace> = Vec::with_capacity(net.layers.len());
    for (idx, layer) in net.layers.iter().enumerate() {
        let x_tm = if idx == 0 {
            &input
        } else {
            &layers[idx - 1].spikes
        };
        layers.push(layer_forward(layer, x_tm, mode));
    }
    let output = transposed(
        &layers
            .last()
            .expect("networks have at least one layer")
            .spikes,
    );
    Ok((output, ForwardTrace { mode, input, layers }))
}

/// Runs the hard-threshold forward pass.
///
/// `x` is dense binary, channels x time. Returns binary output spikes
/// (channels x time) and the trace for [`backward`].
pub fn forward(net: &LifNetwork, x: &Array2<f64>) -> Result<(Array2<f64>, ForwardTrace)> {
    run(net, x, SpikeMode::Hard)
}

/// Runs the smooth forward pass; outputs are real-valued in (0, 1).
pub fn forward_relaxed(net: &LifNetwork, x: &Array2<f64>) -> Result<(Array2<f64>, ForwardTrace)> {
    run(net, x, SpikeMode::Relaxed)
}

/// Gradient of one layer's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradients {
    pub weights: Array2<f64>,
    pub decay_raw: Array1<f64>,
}

/// Gradients for every layer of a network, in layer order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGradients>,
}

impl Gradients {
    pub fn zeros_like(net: &LifNetwork) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGradients {
                    weights: Array2::zeros((l.out_dim(), l.in_dim())),
                    decay_raw: Array1::zeros(l.out_dim()),
                })
                .collect(),
        }
    }

    /// Elementwise sum; shapes must match.
    pub fn accumulate(&mut self, other: &Gradients) {
        assert_eq!(self.layers.len(), other.layers.len());
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weights += &b.weights;
            a.decay_raw += &b.decay_raw;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for l in &mut self.layers {
            l.weights *= factor;
            l.decay_raw *= factor;
        }
    }
}

/// Reverse pass through one layer.
///
/// `gs` is dL/dS for this layer's spikes (time-major); `gm` is an optional
/// extra dL/dM injected at the membranes (used by probe losses). Returns the
/// parameter gradients and dL/dX for the layer below.
///
/// With `lambda_t = dL/dM_t`, the recurrence (walked backward in time) is
/// `lambda_t = (gs_t - alpha*lambda_{t+1}) * f'(m_t) + alpha*lambda_{t+1}`:
/// the spike path picks up the surrogate factor while the membrane carry
/// `alpha*(M - S)` passes both through the decay and through the reset.
fn layer_backward(
    layer: &LifLayer,
    x_tm: &Array2<f64>,
    trace: &LayerTrace,
    gs: &Array2<f64>,
    gm: Option<&Array2<f64>>,
    mode: SpikeMode,
) -> (LayerGradients, Array2<f64>) {
    let t_len = trace.membranes.nrows();
    let out = layer.out_dim();
    let alphas = layer.alphas();

    let mut lambda: Array2<f64> = Array2::zeros((t_len, out));
    let mut g_alpha: Array1<f64> = Array1::zeros(out);
    for t in (0..t_len).rev() {
        for j in 0..out {
            let carry = if t + 1 < t_len {
                alphas[j] * lambda[(t + 1, j)]
            } else {
                0.0
            };
            let fprime = mode.derivative(trace.membranes[(t, j)] - layer.threshold);
            let mut l = (gs[(t, j)] - carry) * fprime + carry;
            if let Some(gm) = gm {
                l += gm[(t, j)];
            }
            lambda[(t, j)] = l;
            if t > 0 {
                g_alpha[j] += l * (trace.membranes[(t - 1, j)] - trace.spikes[(t - 1, j)]);
            }
        }
    }

    let g_weights = lambda.t().dot(x_tm);
    let g_input = lambda.dot(&layer.weights);
    let g_decay_raw = alphas.mapv(|a| a * (1.0 - a)) * g_alpha;
    (
        LayerGradients {
            weights: g_weights,
            decay_raw: g_decay_raw,
        },
        g_input,
    )
}

fn check_trace(net: &LifNetwork, trace: &ForwardTrace, grad: &Array2<f64>) -> Result<()> {
    let mismatch = |expected: String, found: String| {
        Err(Error::DimensionMismatch { expected, found })
    };
    if trace.layers.len() != net.layers.len() {
        return mismatch(
            format!("{} layer traces", net.layers.len()),
            format!("{}", trace.layers.len()),
        );
    }
    if trace.input.ncols() != net.in_dim() {
        return mismatch(
            format!("trace input width {}", net.in_dim()),
            format!("{}", trace.input.ncols()),
        );
    }
    let t_len = trace.input.nrows();
    for (idx, (layer, lt)) in net.layers.iter().zip(&trace.layers).enumerate() {
        if lt.membranes.dim() != (t_len, layer.out_dim()) || lt.spikes.dim() != (t_len, layer.out_dim()) {
            return mismatch(
                format!("layer {idx} trace {}x{}", t_len, layer.out_dim()),
                format!("{}x{}", lt.membranes.nrows(), lt.membranes.ncols()),
            );
        }
    }
    if grad.dim() != (net.out_dim(), t_len) {
        return mismatch(
            format!("output gradient {}x{}", net.out_dim(), t_len),
            format!("{}x{}", grad.nrows(), grad.ncols()),
        );
    }
    Ok(())
}

fn backward_impl(
    net: &LifNetwork,
    trace: &ForwardTrace,
    grad_output: &Array2<f64>,
    grad_membranes: Option<&Array2<f64>>,
) -> Result<Gradients> {
    check_trace(net, trace, grad_output)?;
    if let Some(gm) = grad_membranes {
        if gm.dim() != grad_output.dim() {
            return Err(Error::DimensionMismatch {
                expected: format!("membrane gradient {}x{}", grad_output.nrows(), grad_output.ncols()),
                found: format!("{}x{}", gm.nrows(), gm.ncols()),
            });
        }
    }

    let last = net.layers.len() - 1;
    let mut gs = transposed(grad_output);
    let gm_top = grad_membranes.map(transposed);

    let mut reversed: Vec<LayerGradients> = Vec::with_capacity(net.layers.len());
    for idx in (0..net.layers.len()).rev() {
        let x_tm = if idx == 0 {
            &trace.input
        } else {
            &trace.layers[idx - 1].spikes
        };
        let gm = if idx == last { gm_top.as_ref() } else { None };
        let (lg, gx) = layer_backward(
            &net.layers[idx],
            x_tm,
            &trace.layers[idx],
            &gs,
            gm,
            trace.mode,
        );
        reversed.push(lg);
        gs = gx;
    }
    reversed.reverse();
    Ok(Gradients { layers: reversed })
}

/// BPTT through the trace; `grad_output` is dL/dS of the network output,
/// channels x time.
pub fn backward(net: &LifNetwork, trace: &ForwardTrace, grad_output: &Array2<f64>) -> Result<Gradients> {
    backward_impl(net, trace, grad_output, None)
}

/// [`backward`] with an additional gradient injected at the top layer's
/// membrane potentials (channels x time). Lets probe losses defined on
/// membranes (rather than spikes) reuse the same machinery.
pub fn backward_with_membrane_grad(
    net: &LifNetwork,
    trace: &ForwardTrace,
    grad_output: &Array2<f64>,
    grad_membranes: &Array2<f64>,
) -> Result<Gradients> {
    backward_impl(net, trace, grad_output, Some(grad_membranes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::array;

    fn single_neuron(weight: f64, decay_raw: f64) -> LifNetwork {
        let layer = LifLayer::from_parts(
            array![[weight]],
            array![decay_raw],
            DEFAULT_THRESHOLD,
        )
        .unwrap();
        LifNetwork::from_layers(vec![layer]).unwrap()
    }

    fn alpha_09_raw() -> f64 {
        (0.9f64 / 0.1).ln()
    }

    #[test]
    fn hand_simulation_of_the_recurrence() {
        // Unit weight, alpha 0.9, spikes driven in at the first two steps:
        // M = [1.0, 1.9, 0.81], only the middle step crosses threshold 1.
        let net = single_neuron(1.0, alpha_09_raw());
        let x = array![[1.0, 1.0, 0.0]];
        let (out, trace) = forward(&net, &x).unwrap();

        let m = trace.membranes(0);
        assert_relative_eq!(m[(0, 0)], 1.0, epsilon = 1e-12);
        assert_relative_eq!(m[(0, 1)], 1.9, epsilon = 1e-12);
        assert_relative_eq!(m[(0, 2)], 0.81, epsilon = 1e-12);
        assert_eq!(out, array![[0.0, 1.0, 0.0]]);
    }

    #[test]
    fn threshold_is_strict() {
        // Membrane exactly at threshold must not fire.
        let net = single_neuron(1.0, alpha_09_raw());
        let x = array![[1.0]];
        let (out, trace) = forward(&net, &x).unwrap();
        assert_eq!(trace.membranes(0)[(0, 0)], 1.0);
        assert_eq!(out[(0, 0)], 0.0);
    }

    #[test]
    fn zero_input_stays_silent() {
        let net = LifNetwork::new(&[3, 5, 3], 7).unwrap();
        let x = Array2::zeros((3, 10));
        let (out, trace) = forward(&net, &x).unwrap();
        assert_eq!(out, Array2::zeros((3, 10)));
        for layer in 0..2 {
            assert_eq!(trace.membranes(layer).sum(), 0.0);
            assert_eq!(trace.spikes(layer).sum(), 0.0);
        }
    }

    #[test]
    fn zero_decay_is_memoryless() {
        // alpha = sigmoid(-inf) = 0: the membrane is just W*X_t each step.
        let net = single_neuron(0.7, f64::NEG_INFINITY);
        let x = array![[1.0, 0.0, 1.0, 1.0]];
        let (_, trace) = forward(&net, &x).unwrap();
        let m = trace.membranes(0);
        for (t, want) in [0.7, 0.0, 0.7, 0.7].into_iter().enumerate() {
            assert_relative_eq!(m[(0, t)], want, epsilon = 1e-15);
        }
    }

    #[test]
    fn surrogate_peaks_at_threshold_and_decays_symmetrically() {
        assert_relative_eq!(surrogate_derivative(0.0), 1.0 / PI, epsilon = 1e-12);
        for m in [0.1, 0.5, 2.0, 17.0] {
            assert_relative_eq!(
                surrogate_derivative(m),
                surrogate_derivative(-m),
                epsilon = 1e-15
            );
            assert!(surrogate_derivative(m) < surrogate_derivative(0.0));
        }
        assert!(surrogate_derivative(1e4) < 1e-6);
        assert_eq!(surrogate_derivative(f64::INFINITY), 0.0);
    }

    #[test]
    fn relaxed_mode_is_half_at_threshold_and_saturates() {
        let net = single_neuron(1.0, alpha_09_raw());
        let x = array![[1.0]];
        let (soft, _) = forward_relaxed(&net, &x).unwrap();
        assert_relative_eq!(soft[(0, 0)], 0.5, epsilon = 1e-12);

        // Far from threshold the smooth spike approaches the hard one.
        for (weight, hard) in [(100.0, 1.0), (-100.0, 0.0)] {
            let net = single_neuron(weight, alpha_09_raw());
            let (soft, _) = forward_relaxed(&net, &x).unwrap();
            assert!(
                (soft[(0, 0)] - hard).abs() < 0.01,
                "weight {weight}: soft {} vs hard {hard}",
                soft[(0, 0)]
            );
        }
    }

    #[test]
    fn relaxed_derivative_matches_finite_differences_of_activate() {
        for m in [-2.0, -0.3, 0.0, 0.4, 1.7] {
            let step = 1e-6;
            let fd = (SpikeMode::Relaxed.activate(m + step)
                - SpikeMode::Relaxed.activate(m - step))
                / (2.0 * step);
            assert_relative_eq!(SpikeMode::Relaxed.derivative(m), fd, epsilon = 1e-8);
        }
    }

    #[test]
    fn forward_is_deterministic() {
        let net = LifNetwork::new(&[4, 6, 4], 3).unwrap();
        let mut x = Array2::zeros((4, 20));
        x[(0, 1)] = 1.0;
        x[(2, 5)] = 1.0;
        x[(3, 19)] = 1.0;
        let (a, _) = forward(&net, &x).unwrap();
        let (b, _) = forward(&net, &x).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn membrane_carry_is_bounded_after_input_stops() {
        // Zero drive: |M_t| = alpha*|M_{t-1} - S_{t-1}| <= alpha*(|M_{t-1}| + 1).
        let net = single_neuron(3.0, alpha_09_raw());
        let mut x = Array2::zeros((1, 30));
        x[(0, 0)] = 1.0;
        x[(0, 2)] = 1.0;
        let (_, trace) = forward(&net, &x).unwrap();
        let m = trace.membranes(0);
        let alpha = net.layers()[0].alphas()[0];
        for t in 3..30 {
            assert!(m[(0, t)].abs() <= alpha * (m[(0, t - 1)].abs() + 1.0) + 1e-12);
        }
    }

    #[test]
    fn input_dimension_mismatch_is_rejected() {
        let net = LifNetwork::new(&[4, 4], 0).unwrap();
        let x = Array2::zeros((3, 10));
        assert!(matches!(
            forward(&net, &x),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn network_construction_validates_dims() {
        assert!(LifNetwork::new(&[4], 0).is_err());
        assert!(LifNetwork::new(&[4, 0, 4], 0).is_err());
        assert!(LifNetwork::new(&[4, 8, 4], 0).is_ok());

        let a = LifLayer::init(4, 8, &mut ChaCha8Rng::seed_from_u64(0));
        let b = LifLayer::init(5, 4, &mut ChaCha8Rng::seed_from_u64(0));
        assert!(LifNetwork::from_layers(vec![a, b]).is_err());

        assert!(LifLayer::from_parts(array![[1.0], [2.0]], array![0.0], 1.0).is_err());
    }

    #[test]
    fn init_respects_bounds_and_seed() {
        let net = LifNetwork::new(&[16, 8], 42).unwrap();
        let bound = (1.0f64 / 16.0).sqrt();
        for &w in net.layers()[0].weights().iter() {
            assert!(w.abs() <= bound);
        }
        for &a in net.layers()[0].alphas().iter() {
            assert_relative_eq!(a, 0.9, epsilon = 1e-12);
        }

        let same = LifNetwork::new(&[16, 8], 42).unwrap();
        assert_eq!(net, same);
        let other = LifNetwork::new(&[16, 8], 43).unwrap();
        assert_ne!(net, other);
    }

    #[test]
    fn zero_output_gradient_gives_zero_parameter_gradients() {
        let net = LifNetwork::new(&[4, 6, 4], 9).unwrap();
        let mut x = Array2::zeros((4, 15));
        x[(1, 3)] = 1.0;
        x[(2, 8)] = 1.0;
        let (_, trace) = forward(&net, &x).unwrap();
        let grads = backward(&net, &trace, &Array2::zeros((4, 15))).unwrap();
        for lg in &grads.layers {
            assert_eq!(lg.weights.sum(), 0.0);
            assert_eq!(lg.decay_raw.sum(), 0.0);
        }
    }

    #[test]
    fn backward_rejects_mismatched_traces() {
        let net = LifNetwork::new(&[4, 6, 4], 9).unwrap();
        let x = Array2::zeros((4, 15));
        let (_, trace) = forward(&net, &x).unwrap();

        // Wrong gradient shape.
        assert!(backward(&net, &trace, &Array2::zeros((4, 14))).is_err());
        assert!(backward(&net, &trace, &Array2::zeros((6, 15))).is_err());

        // Trace from a structurally different net.
        let other = LifNetwork::new(&[4, 4], 9).unwrap();
        assert!(backward(&other, &trace, &Array2::zeros((4, 15))).is_err());
    }

    #[test]
    fn gradients_zeros_accumulate_and_scale() {
        let net = LifNetwork::new(&[3, 5, 3], 1).unwrap();
        let mut x = Array2::zeros((3, 8));
        x[(0, 0)] = 1.0;
        x[(1, 2)] = 1.0;
        let (out, trace) = forward_relaxed(&net, &x).unwrap();
        let grads = backward(&net, &trace, &out).unwrap();

        let mut acc = Gradients::zeros_like(&net);
        acc.accumulate(&grads);
        acc.accumulate(&grads);
        acc.scale(0.5);
        for (a, b) in acc.layers.iter().zip(&grads.layers) {
            assert_relative_eq!(
                a.weights.sum(),
                b.weights.sum(),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn checkpoint_round_trips_and_is_byte_stable() {
        let net = LifNetwork::new(&[6, 9, 6], 123).unwrap();
        let mut bytes = Vec::new();
        let written = net.save(&mut bytes).unwrap();
        assert_eq!(written as usize, bytes.len());
        // 12 header + (8 + 54*8 + 9*8) + (8 + 54*8 + 6*8)
        assert_eq!(bytes.len(), 12 + 8 + 432 + 72 + 8 + 432 + 48);

        let loaded = LifNetwork::load(&bytes).unwrap();
        assert_eq!(loaded, net);
        assert_eq!(loaded.layers()[0].threshold(), DEFAULT_THRESHOLD);

        let mut again = Vec::new();
        loaded.save(&mut again).unwrap();
        assert_eq!(bytes, again);
    }

    #[test]
    fn checkpoint_parser_rejects_corruption() {
        let net = LifNetwork::new(&[4, 4], 5).unwrap();
        let mut bytes = Vec::new();
        net.save(&mut bytes).unwrap();

        let err = LifNetwork::load(b"XYZW000").unwrap_err();
        assert!(matches!(err, Error::BadMagic { offset: 0 }));

        let err = LifNetwork::load(&bytes[..bytes.len() - 3]).unwrap_err();
        assert!(matches!(err, Error::Truncated { .. }));

        let mut wrong_version = bytes.clone();
        wrong_version[4] = 9;
        assert!(matches!(
            LifNetwork::load(&wrong_version).unwrap_err(),
            Error::UnsupportedVersion { found: 9, .. }
        ));

        let mut trailing = bytes.clone();
        trailing.push(0);
        assert!(matches!(
            LifNetwork::load(&trailing).unwrap_err(),
            Error::InvalidField { .. }
        ));
    }

    #[test]
    fn chained_layers_see_upstream_spikes_in_the_same_step() {
        // Layer 0 fires at t=1 (after charging at t=0); with weight 2 the
        // second layer's membrane jumps the same step.
        let l0 = LifLayer::from_parts(array![[1.0]], array![alpha_09_raw()], 1.0).unwrap();
        let l1 = LifLayer::from_parts(array![[2.0]], array![alpha_09_raw()], 1.0).unwrap();
        let net = LifNetwork::from_layers(vec![l0, l1]).unwrap();
        let x = array![[1.0, 1.0, 0.0]];
        let (out, trace) = forward(&net, &x).unwrap();
        assert_eq!(trace.spikes(0), array![[0.0, 1.0, 0.0]]);
        assert_eq!(trace.membranes(1)[(0, 1)], 2.0);
        assert_eq!(out, array![[0.0, 1.0, 0.0]]);
    }
}
