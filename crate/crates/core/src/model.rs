//! The learnable network: a 1×1 reduction filter collapsing each R×T
//! channel block to a scalar, two shared two-layer graph convolutions
//! producing per-user gains a and b, the power projection β, and the
//! K-layer unfolded forward pass that feeds those gains into the
//! block-coordinate sweeps.
//!
//! One parameter set serves every unfolding layer and every network size
//! M: the gains are computed once per forward pass from the reduced
//! channel and reused by all K sweeps.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::csi::{CsiTensor, LiftedCsi};
use crate::error::Error;
use crate::mat::Mat;
use crate::real::{relu, sigmoid, Real};
use crate::wmmse::{initial_v, sum_rate, sweep, ProblemConfig};

/// Lower bound of the a-gain head; keeps the weight update invertible
/// even when the sigmoid saturates at zero.
pub const GAIN_FLOOR: f64 = 1e-3;
pub const DEFAULT_A_MAX: f64 = 2.0;
pub const DEFAULT_B_MAX: f64 = 2.0;

/// The shared 1×1 filter: one weight per antenna pair plus a bias,
/// applied identically to every (i, j) channel block.
#[derive(Clone, Debug, PartialEq)]
pub struct ReductionFilter {
    /// Length R·T, index r·T + t.
    pub weights: Vec<f64>,
    pub bias: f64,
}

/// One graph-convolution layer with separate self and neighbor weights,
/// both row-major `in_dim × out_dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct GcnLayer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub w_self: Vec<f64>,
    pub w_neigh: Vec<f64>,
    pub bias: Vec<f64>,
}

impl GcnLayer {
    pub fn zeroed(in_dim: usize, out_dim: usize) -> Self {
        Self {
            in_dim,
            out_dim,
            w_self: alloc::vec![0.0; in_dim * out_dim],
            w_neigh: alloc::vec![0.0; in_dim * out_dim],
            bias: alloc::vec![0.0; out_dim],
        }
    }

    pub fn param_count(&self) -> usize {
        2 * self.in_dim * self.out_dim + self.out_dim
    }
}

/// A two-layer GCN of widths 1 → hidden → 1.
#[derive(Clone, Debug, PartialEq)]
pub struct GcnParams {
    pub hidden: usize,
    pub layer1: GcnLayer,
    pub layer2: GcnLayer,
}

impl GcnParams {
    pub fn zeroed(hidden: usize) -> Self {
        Self {
            hidden,
            layer1: GcnLayer::zeroed(1, hidden),
            layer2: GcnLayer::zeroed(hidden, 1),
        }
    }

    pub fn param_count(&self) -> usize {
        self.layer1.param_count() + self.layer2.param_count()
    }
}

/// The full trainable set: the two gain networks, the reduction filter,
/// the unfolding depth and the head bounds. Independent of the user
/// count M.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub theta_a: GcnParams,
    pub theta_b: GcnParams,
    pub omega: ReductionFilter,
    /// Unfolded layer count K.
    pub layers: usize,
    pub a_max: f64,
    pub b_max: f64,
}

/// Actual trainable-scalar count next to the closed-form count
/// 12h + R·T + 6 sometimes quoted for this architecture; the layer
/// shapes used here (widths 1 → h → 1, two weight matrices and a bias
/// per layer) give 10h + R·T + 3 instead, so the two are reported side
/// by side rather than forced to agree.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParamCensus {
    pub actual: usize,
    pub nominal: usize,
}

impl ModelParams {
    /// Fan-in-scaled uniform weights, zero biases (so the initial gains
    /// sit at the center of their ranges), and an averaging filter
    /// ω = 1/(R·T) with zero bias. Weight matrices are drawn in flatten
    /// order from a ChaCha8 stream keyed by `seed`.
    pub fn init(seed: u64, rx: usize, tx: usize, hidden: usize, layers: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fill = |layer: &mut GcnLayer| {
            let s = 1.0 / (layer.in_dim as f64).sqrt();
            for w in layer.w_self.iter_mut().chain(layer.w_neigh.iter_mut()) {
                *w = rng.gen_range(-s..=s);
            }
        };
        let mut theta_a = GcnParams::zeroed(hidden);
        fill(&mut theta_a.layer1);
        fill(&mut theta_a.layer2);
        let mut theta_b = GcnParams::zeroed(hidden);
        fill(&mut theta_b.layer1);
        fill(&mut theta_b.layer2);
        let rt = rx * tx;
        Self {
            theta_a,
            theta_b,
            omega: ReductionFilter { weights: alloc::vec![1.0 / rt as f64; rt], bias: 0.0 },
            layers,
            a_max: DEFAULT_A_MAX,
            b_max: DEFAULT_B_MAX,
        }
    }

    pub fn validate(&self, rx: usize, tx: usize) -> Result<(), Error> {
        if self.layers == 0 {
            return Err(Error::Config("unfolded layer count must be >= 1".into()));
        }
        if !(self.a_max > GAIN_FLOOR) || !(self.b_max >= 0.0) {
            return Err(Error::Config(format!(
                "head bounds a_max={} (must exceed {GAIN_FLOOR}), b_max={} (must be >= 0)",
                self.a_max, self.b_max
            )));
        }
        if self.omega.weights.len() != rx * tx {
            return Err(Error::Dim(format!(
                "reduction filter has {} weights, channel blocks are {rx}x{tx}",
                self.omega.weights.len()
            )));
        }
        for (name, g) in [("theta_a", &self.theta_a), ("theta_b", &self.theta_b)] {
            let ok = g.layer1.in_dim == 1
                && g.layer1.out_dim == g.hidden
                && g.layer2.in_dim == g.hidden
                && g.layer2.out_dim == 1;
            if !ok {
                return Err(Error::Dim(format!("{name} layer widths are not 1 -> h -> 1")));
            }
        }
        for x in self.flatten() {
            if !x.is_finite() {
                return Err(Error::Config("non-finite model parameter".into()));
            }
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        self.theta_a.param_count() + self.theta_b.param_count() + self.omega.weights.len() + 1
    }

    pub fn census(&self, rx: usize, tx: usize) -> ParamCensus {
        ParamCensus {
            actual: self.param_count(),
            nominal: 12 * self.theta_a.hidden + rx * tx + 6,
        }
    }

    /// All trainable scalars in the canonical order: theta_a layer 1
    /// (w_self, w_neigh, bias), theta_a layer 2, theta_b likewise, then
    /// omega weights and bias. [`ModelParams::unflatten`],
    /// [`ModelParams::lift_with`] and [`ModelParams::param_path`] use
    /// the same order.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for g in [&self.theta_a, &self.theta_b] {
            for l in [&g.layer1, &g.layer2] {
                out.extend_from_slice(&l.w_self);
                out.extend_from_slice(&l.w_neigh);
                out.extend_from_slice(&l.bias);
            }
        }
        out.extend_from_slice(&self.omega.weights);
        out.push(self.omega.bias);
        out
    }

    pub fn unflatten(&mut self, flat: &[f64]) -> Result<(), Error> {
        if flat.len() != self.param_count() {
            return Err(Error::Dim(format!(
                "flat parameter vector has {} entries, model needs {}",
                flat.len(),
                self.param_count()
            )));
        }
        let mut it = flat.iter().copied();
        for g in [&mut self.theta_a, &mut self.theta_b] {
            for l in [&mut g.layer1, &mut g.layer2] {
                for w in l.w_self.iter_mut().chain(l.w_neigh.iter_mut()).chain(l.bias.iter_mut())
                {
                    *w = it.next().unwrap();
                }
            }
        }
        for w in self.omega.weights.iter_mut() {
            *w = it.next().unwrap();
        }
        self.omega.bias = it.next().unwrap();
        Ok(())
    }

    /// Maps every scalar through `f` in flatten order; instantiating
    /// with a tape-leaf constructor makes the first `param_count()`
    /// tape adjoints line up with the flat parameter vector.
    pub fn lift_with<R: Real, F: FnMut(f64) -> R>(&self, mut f: F) -> LiftedModel<R> {
        let mut lift_gcn = |g: &GcnParams| LiftedGcn {
            hidden: g.hidden,
            layer1: lift_layer(&g.layer1, &mut f),
            layer2: lift_layer(&g.layer2, &mut f),
        };
        let theta_a = lift_gcn(&self.theta_a);
        let theta_b = lift_gcn(&self.theta_b);
        LiftedModel {
            theta_a,
            theta_b,
            omega_weights: self.omega.weights.iter().map(|&w| f(w)).collect(),
            omega_bias: f(self.omega.bias),
            layers: self.layers,
            a_max: self.a_max,
            b_max: self.b_max,
        }
    }

    /// Human-readable name of the idx-th scalar in flatten order, for
    /// gradient diagnostics.
    pub fn param_path(&self, idx: usize) -> String {
        let h = self.theta_a.hidden;
        let rt = self.omega.weights.len();
        let segments: [(&str, usize); 14] = [
            ("theta_a.layer1.w_self", h),
            ("theta_a.layer1.w_neigh", h),
            ("theta_a.layer1.bias", h),
            ("theta_a.layer2.w_self", h),
            ("theta_a.layer2.w_neigh", h),
            ("theta_a.layer2.bias", 1),
            ("theta_b.layer1.w_self", h),
            ("theta_b.layer1.w_neigh", h),
            ("theta_b.layer1.bias", h),
            ("theta_b.layer2.w_self", h),
            ("theta_b.layer2.w_neigh", h),
            ("theta_b.layer2.bias", 1),
            ("omega.weights", rt),
            ("omega.bias", 1),
        ];
        let mut rest = idx;
        for (name, len) in segments {
            if rest < len {
                return if len == 1 { String::from(name) } else { format!("{name}[{rest}]") };
            }
            rest -= len;
        }
        format!("<out of range: {idx}>")
    }

    /// Pins the heads at a = 1, b = 0 by zeroing all weights and setting
    /// the output biases, turning the unfolded pass into plain truncated
    /// sweeps; used to check equivalence with the classical solver.
    pub fn pin_classical_gains(&mut self) {
        let h = self.theta_a.hidden;
        self.theta_a = GcnParams::zeroed(h);
        self.theta_b = GcnParams::zeroed(h);
        // sigmoid(z) = p with p = (1 - floor)/(a_max - floor) makes the
        // a-head exactly 1 up to rounding; -800 underflows the b-head
        // sigmoid to exactly 0.
        let p = (1.0 - GAIN_FLOOR) / (self.a_max - GAIN_FLOOR);
        self.theta_a.layer2.bias[0] = (p / (1.0 - p)).ln();
        self.theta_b.layer2.bias[0] = -800.0;
    }
}

fn lift_layer<R: Real, F: FnMut(f64) -> R>(l: &GcnLayer, f: &mut F) -> LiftedLayer<R> {
    LiftedLayer {
        in_dim: l.in_dim,
        out_dim: l.out_dim,
        w_self: l.w_self.iter().map(|&w| f(w)).collect(),
        w_neigh: l.w_neigh.iter().map(|&w| f(w)).collect(),
        bias: l.bias.iter().map(|&w| f(w)).collect(),
    }
}

#[derive(Clone, Debug)]
pub struct LiftedLayer<R> {
    in_dim: usize,
    out_dim: usize,
    w_self: Vec<R>,
    w_neigh: Vec<R>,
    bias: Vec<R>,
}

#[derive(Clone, Debug)]
pub struct LiftedGcn<R> {
    hidden: usize,
    layer1: LiftedLayer<R>,
    layer2: LiftedLayer<R>,
}

/// [`ModelParams`] mapped onto an arbitrary scalar type; the form every
/// forward pass consumes.
#[derive(Clone, Debug)]
pub struct LiftedModel<R> {
    pub theta_a: LiftedGcn<R>,
    pub theta_b: LiftedGcn<R>,
    pub omega_weights: Vec<R>,
    pub omega_bias: R,
    pub layers: usize,
    pub a_max: f64,
    pub b_max: f64,
}

/// The reduced channel H̄: each R×T block collapsed to one scalar. `raw`
/// is the filter output (its diagonal serves as the node features);
/// `normalized` is the absolute-valued, row-normalized matrix the GCNs
/// mix over.
#[derive(Clone, Debug)]
pub struct ReducedChannel<R> {
    m: usize,
    raw: Vec<R>,
    normalized: Vec<R>,
}

impl<R: Real> ReducedChannel<R> {
    pub fn users(&self) -> usize {
        self.m
    }

    pub fn raw(&self) -> &[R] {
        &self.raw
    }

    pub fn normalized(&self) -> &[R] {
        &self.normalized
    }

    /// Direct-channel scalars H̄_ii, the per-node input features.
    pub fn raw_diag(&self) -> Vec<R> {
        (0..self.m).map(|i| self.raw[i * self.m + i]).collect()
    }
}

/// Applies the 1×1 filter to every block, then row-normalizes the
/// absolute values so each row sums to one. A row of zeros stays zero.
pub fn reduce_channel<R: Real>(
    h: &LiftedCsi<R>,
    weights: &[R],
    bias: R,
) -> Result<ReducedChannel<R>, Error> {
    let (m, r, t) = (h.users(), h.rx(), h.tx());
    if weights.len() != r * t {
        return Err(Error::Dim(format!(
            "reduction filter has {} weights, channel blocks are {r}x{t}",
            weights.len()
        )));
    }
    let mut raw = Vec::with_capacity(m * m);
    for i in 0..m {
        for j in 0..m {
            let block = h.block(i, j);
            let mut acc = bias;
            for rr in 0..r {
                for tt in 0..t {
                    acc = acc + weights[rr * t + tt] * block[(rr, tt)];
                }
            }
            raw.push(acc);
        }
    }
    let mut normalized = Vec::with_capacity(m * m);
    for i in 0..m {
        let row = &raw[i * m..(i + 1) * m];
        let mut sum = R::lit(0.0);
        for &x in row {
            sum = sum + x.abs();
        }
        if sum.value() == 0.0 {
            normalized.extend(row.iter().map(|&x| x.abs()));
        } else {
            normalized.extend(row.iter().map(|&x| x.abs() / sum));
        }
    }
    Ok(ReducedChannel { m, raw, normalized })
}

/// Two graph-convolution layers over the normalized reduced channel:
/// X' = act(X W₀ + H̄ X W₁ + 1 bᵀ), rectified after the hidden layer and
/// linear at the output so the bounded heads can reach their full range.
/// Returns one raw scalar per node.
pub fn gcn_forward<R: Real>(red: &ReducedChannel<R>, x: &[R], p: &LiftedGcn<R>) -> Vec<R> {
    assert_eq!(x.len(), red.users(), "one feature per node");
    let hidden = layer_forward(red, x, 1, &p.layer1, true);
    let out = layer_forward(red, &hidden, p.hidden, &p.layer2, false);
    out
}

fn layer_forward<R: Real>(
    red: &ReducedChannel<R>,
    x: &[R],
    width_in: usize,
    l: &LiftedLayer<R>,
    rectify: bool,
) -> Vec<R> {
    assert_eq!(width_in, l.in_dim);
    let m = red.users();
    let n = red.normalized();
    // mixed = H̄ X, row per node, column per input feature
    let mut mixed = alloc::vec![R::lit(0.0); m * l.in_dim];
    for i in 0..m {
        for j in 0..m {
            let nij = n[i * m + j];
            if nij.value() != 0.0 {
                for c in 0..l.in_dim {
                    mixed[i * l.in_dim + c] =
                        mixed[i * l.in_dim + c] + nij * x[j * l.in_dim + c];
                }
            }
        }
    }
    let mut out = Vec::with_capacity(m * l.out_dim);
    for i in 0..m {
        for o in 0..l.out_dim {
            let mut acc = l.bias[o];
            for c in 0..l.in_dim {
                acc = acc + x[i * l.in_dim + c] * l.w_self[c * l.out_dim + o];
                acc = acc + mixed[i * l.in_dim + c] * l.w_neigh[c * l.out_dim + o];
            }
            out.push(if rectify { relu(acc) } else { acc });
        }
    }
    out
}

/// Bounded head for the multiplicative gain: a ∈ (GAIN_FLOOR, a_max).
pub fn head_a<R: Real>(z: R, a_max: f64) -> R {
    R::lit(GAIN_FLOOR) + R::lit(a_max - GAIN_FLOOR) * sigmoid(z)
}

/// Bounded head for the additive gain: b ∈ [0, b_max) (zero is reached
/// when the sigmoid underflows).
pub fn head_b<R: Real>(z: R, b_max: f64) -> R {
    R::lit(b_max) * sigmoid(z)
}

/// Runs both gain networks on the reduced channel's diagonal features.
pub fn gains<R: Real>(red: &ReducedChannel<R>, params: &LiftedModel<R>) -> (Vec<R>, Vec<R>) {
    let x = red.raw_diag();
    let a = gcn_forward(red, &x, &params.theta_a)
        .into_iter()
        .map(|z| head_a(z, params.a_max))
        .collect();
    let b = gcn_forward(red, &x, &params.theta_b)
        .into_iter()
        .map(|z| head_b(z, params.b_max))
        .collect();
    (a, b)
}

/// Projection onto the Frobenius power ball: identity inside
/// Tr(AAᵀ) ≤ p_max, radial scaling to the boundary outside. The scaling
/// branch's derivative is used on the boundary set.
pub fn beta_project<R: Real>(a: &Mat<R>, p_max: f64) -> Mat<R> {
    let power = a.fro_sq();
    if power.value() <= p_max {
        a.clone()
    } else {
        a.scale(R::lit(p_max.sqrt()) / power.sqrt())
    }
}

/// Per-layer transmit beamformers of a K-layer unfolded pass with the
/// gains fixed explicitly; element k is V after k+1 sweeps.
pub fn unfolded_with_gains<R: Real>(
    h: &LiftedCsi<R>,
    a: &[R],
    b: &[R],
    layers: usize,
    cfg: &ProblemConfig,
) -> Result<Vec<Vec<Mat<R>>>, Error> {
    cfg.validate(h.rx(), h.tx())?;
    let mut v = initial_v(h.users(), h.tx(), cfg.streams, cfg.p_max);
    let mut per_layer = Vec::with_capacity(layers);
    for _ in 0..layers {
        let (_, _, nv) = sweep(h, &v, a, b, cfg)?;
        v = nv;
        per_layer.push(v.clone());
    }
    Ok(per_layer)
}

/// Full forward pass over an already lifted channel.
pub struct UnfoldedOutput<R> {
    /// V after each of the K layers; the last entry is the output.
    pub layer_v: Vec<Vec<Mat<R>>>,
    pub gains_a: Vec<R>,
    pub gains_b: Vec<R>,
}

impl<R> UnfoldedOutput<R> {
    pub fn final_v(&self) -> &Vec<Mat<R>> {
        self.layer_v.last().expect("at least one layer")
    }
}

pub fn unfolded_forward_lifted<R: Real>(
    h: &LiftedCsi<R>,
    params: &LiftedModel<R>,
    cfg: &ProblemConfig,
) -> Result<UnfoldedOutput<R>, Error> {
    if params.layers == 0 {
        return Err(Error::Config("unfolded layer count must be >= 1".into()));
    }
    let red = reduce_channel(h, &params.omega_weights, params.omega_bias)?;
    let (a, b) = gains(&red, params);
    let layer_v = unfolded_with_gains(h, &a, &b, params.layers, cfg)?;
    Ok(UnfoldedOutput { layer_v, gains_a: a, gains_b: b })
}

/// Inference on one channel: returns the final transmit beamformers and
/// the sum-rate achieved after each layer.
pub fn unfolded_forward(
    h: &CsiTensor,
    params: &ModelParams,
    cfg: &ProblemConfig,
) -> Result<(Vec<Mat<f64>>, Vec<f64>), Error> {
    params.validate(h.rx(), h.tx())?;
    let hl: LiftedCsi<f64> = h.lift();
    let lifted = params.lift_with(|x| x);
    let out = unfolded_forward_lifted(&hl, &lifted, cfg)?;
    let mut layer_rates = Vec::with_capacity(out.layer_v.len());
    for v in &out.layer_v {
        layer_rates.push(sum_rate(&hl, v, cfg)?);
    }
    Ok((out.layer_v.into_iter().next_back().unwrap(), layer_rates))
}

/// Inference without any rate computation; the path to time.
pub fn unfolded_allocate(
    h: &CsiTensor,
    params: &ModelParams,
    cfg: &ProblemConfig,
) -> Result<Vec<Mat<f64>>, Error> {
    params.validate(h.rx(), h.tx())?;
    let hl: LiftedCsi<f64> = h.lift();
    let lifted = params.lift_with(|x| x);
    let out = unfolded_forward_lifted(&hl, &lifted, cfg)?;
    Ok(out.layer_v.into_iter().next_back().unwrap())
}
