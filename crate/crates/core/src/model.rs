//! Network architecture, parameters and the forward pass.
//!
//! Layer 0 is the (folded) input `X⁽⁰⁾` of width `r₀ = n`. For hidden layers
//! `l = 1..=s`:
//!
//! ```text
//! Y⁽¹⁾ = X⁽⁰⁾·V⁽¹⁾
//! Y⁽ˡ⁾ = X⁽ˡ⁻¹⁾·V⁽ˡ⁾ + X⁽⁰⁾·Ṽ⁽ˡ⁾        l ≥ 2 (input guidance)
//! X⁽ˡ⁾ = σ(Y⁽ˡ⁾)
//! Z    = X⁽ˢ⁾·W
//! X̂    = ReLU(Z)
//! ```
//!
//! There are no bias terms. `B = X⁽ˢ⁾` is the low-dimensional embedding.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Coefficient matrix `W` constrained to be non-negative.
    Nmf,
    /// Relaxed: `W` unconstrained.
    Rnmf,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Nmf => "nmf",
            Variant::Rnmf => "rnmf",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nmf" => Ok(Variant::Nmf),
            "rnmf" => Ok(Variant::Rnmf),
            other => Err(Error::Parameter(format!("unknown variant '{other}'"))),
        }
    }
}

/// Layer widths `r₀ > r₁ > … > r_s ≥ 1` and the variant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArchitectureSpec {
    widths: Vec<usize>,
    variant: Variant,
}

impl ArchitectureSpec {
    pub fn new(widths: Vec<usize>, variant: Variant) -> Result<Self> {
        if widths.len() < 3 {
            return Err(Error::Parameter(format!(
                "need at least 2 hidden layers (3 widths), got widths {widths:?}"
            )));
        }
        if widths.windows(2).any(|w| w[0] <= w[1]) || widths[widths.len() - 1] == 0 {
            return Err(Error::Parameter(format!(
                "widths must be strictly decreasing and positive, got {widths:?}"
            )));
        }
        Ok(Self { widths, variant })
    }

    /// Like [`ArchitectureSpec::new`] but only requires `s ≥ 2` and positive
    /// widths. Useful for hand-checkable toy networks (e.g. one unit per
    /// layer); such a network is not a dimension reduction.
    pub fn new_relaxed(widths: Vec<usize>, variant: Variant) -> Result<Self> {
        if widths.len() < 3 || widths.contains(&0) {
            return Err(Error::Parameter(format!(
                "need at least 3 positive widths, got {widths:?}"
            )));
        }
        Ok(Self { widths, variant })
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    /// Number of hidden layers `s`.
    pub fn hidden_layers(&self) -> usize {
        self.widths.len() - 1
    }

    pub fn input_width(&self) -> usize {
        self.widths[0]
    }

    /// Width `r` of the slender layer.
    pub fn latent_width(&self) -> usize {
        self.widths[self.widths.len() - 1]
    }
}

/// Geometric width schedule `r_l = round(n·(r/n)^(l/s))`, pinned to `n` and
/// `r` at the ends and forced strictly decreasing.
pub fn default_layer_schedule(n: usize, r: usize, s: usize) -> Result<Vec<usize>> {
    if s < 2 {
        return Err(Error::Parameter(format!(
            "need s >= 2 hidden layers, got {s}"
        )));
    }
    if r == 0 || r >= n {
        return Err(Error::Parameter(format!(
            "need n > r >= 1, got n={n}, r={r}"
        )));
    }
    if n - r < s {
        return Err(Error::Parameter(format!(
            "cannot fit {s} strictly decreasing layers between n={n} and r={r}"
        )));
    }
    let ratio = r as f64 / n as f64;
    let mut widths: Vec<usize> = (0..=s)
        .map(|l| (n as f64 * ratio.powf(l as f64 / s as f64)).round() as usize)
        .collect();
    widths[0] = n;
    widths[s] = r;
    for l in 1..s {
        widths[l] = widths[l].min(widths[l - 1] - 1);
    }
    for l in (1..s).rev() {
        widths[l] = widths[l].max(widths[l + 1] + 1);
    }
    Ok(widths)
}

/// Weight matrices `V⁽¹⁾…V⁽ˢ⁾`, `Ṽ⁽²⁾…Ṽ⁽ˢ⁾` and `W`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub spec: ArchitectureSpec,
    /// `v[l-1]` is `V⁽ˡ⁾`, shape `r_{l-1} × r_l`.
    pub v: Vec<Matrix>,
    /// `v_tilde[l-2]` is `Ṽ⁽ˡ⁾`, shape `r₀ × r_l`.
    pub v_tilde: Vec<Matrix>,
    /// Shape `r_s × r₀`.
    pub w: Matrix,
}

/// Identifies one weight matrix within [`ModelParams`]. Layer numbers are
/// 1-based as in the layer equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WeightKind {
    V(usize),
    VTilde(usize),
    W,
}

impl std::fmt::Display for WeightKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WeightKind::V(l) => write!(f, "V{l}"),
            WeightKind::VTilde(l) => write!(f, "Vtilde{l}"),
            WeightKind::W => write!(f, "W"),
        }
    }
}

/// A single scalar weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WeightCoord {
    pub kind: WeightKind,
    pub row: usize,
    pub col: usize,
}

/// Shapes of every weight matrix in canonical order: `V⁽¹⁾…V⁽ˢ⁾`,
/// `Ṽ⁽²⁾…Ṽ⁽ˢ⁾`, `W`.
pub fn weight_layout(spec: &ArchitectureSpec) -> Vec<(WeightKind, usize, usize)> {
    let w = spec.widths();
    let s = spec.hidden_layers();
    let mut layout = Vec::with_capacity(2 * s);
    for l in 1..=s {
        layout.push((WeightKind::V(l), w[l - 1], w[l]));
    }
    for l in 2..=s {
        layout.push((WeightKind::VTilde(l), w[0], w[l]));
    }
    layout.push((WeightKind::W, w[s], w[0]));
    layout
}

impl ModelParams {
    /// All-zero parameters of the right shapes.
    pub fn zeros(spec: &ArchitectureSpec) -> Self {
        Self::from_layout(spec, |_, rows, cols| Matrix::zeros(rows, cols))
    }

    fn from_layout(
        spec: &ArchitectureSpec,
        mut make: impl FnMut(WeightKind, usize, usize) -> Matrix,
    ) -> Self {
        let mut v = Vec::new();
        let mut v_tilde = Vec::new();
        let mut w = None;
        for (kind, rows, cols) in weight_layout(spec) {
            let m = make(kind, rows, cols);
            match kind {
                WeightKind::V(_) => v.push(m),
                WeightKind::VTilde(_) => v_tilde.push(m),
                WeightKind::W => w = Some(m),
            }
        }
        Self {
            spec: spec.clone(),
            v,
            v_tilde,
            w: w.expect("layout always ends with W"),
        }
    }

    /// Assembles parameters from explicit matrices, checking every shape.
    pub fn from_parts(
        spec: ArchitectureSpec,
        v: Vec<Matrix>,
        v_tilde: Vec<Matrix>,
        w: Matrix,
    ) -> Result<Self> {
        let params = Self {
            spec,
            v,
            v_tilde,
            w,
        };
        params.validate()?;
        if params.spec.variant() == Variant::Nmf && params.w.min() < 0.0 {
            return Err(Error::Domain("NMF variant requires W >= 0".into()));
        }
        Ok(params)
    }

    /// Checks matrix count and shapes against the architecture.
    pub fn validate(&self) -> Result<()> {
        let s = self.spec.hidden_layers();
        if self.v.len() != s || self.v_tilde.len() != s - 1 {
            return Err(Error::Shape(format!(
                "expected {s} V and {} Vtilde matrices, got {} and {}",
                s - 1,
                self.v.len(),
                self.v_tilde.len()
            )));
        }
        for ((kind, rows, cols), m) in weight_layout(&self.spec).into_iter().zip(self.matrices()) {
            if m.shape() != (rows, cols) {
                return Err(Error::Shape(format!(
                    "{kind} is {}x{}, expected {rows}x{cols}",
                    m.rows(),
                    m.cols()
                )));
            }
        }
        Ok(())
    }

    /// Weight matrices in canonical order (see [`weight_layout`]).
    pub fn matrices(&self) -> impl Iterator<Item = &Matrix> {
        self.v
            .iter()
            .chain(&self.v_tilde)
            .chain(std::iter::once(&self.w))
    }

    pub fn matrices_mut(&mut self) -> impl Iterator<Item = &mut Matrix> {
        self.v
            .iter_mut()
            .chain(self.v_tilde.iter_mut())
            .chain(std::iter::once(&mut self.w))
    }

    pub fn matrix(&self, kind: WeightKind) -> &Matrix {
        match kind {
            WeightKind::V(l) => &self.v[l - 1],
            WeightKind::VTilde(l) => &self.v_tilde[l - 2],
            WeightKind::W => &self.w,
        }
    }

    pub fn matrix_mut(&mut self, kind: WeightKind) -> &mut Matrix {
        match kind {
            WeightKind::V(l) => &mut self.v[l - 1],
            WeightKind::VTilde(l) => &mut self.v_tilde[l - 2],
            WeightKind::W => &mut self.w,
        }
    }

    /// Every scalar weight coordinate in canonical order.
    pub fn coords(&self) -> Vec<WeightCoord> {
        let mut out = Vec::new();
        for (kind, rows, cols) in weight_layout(&self.spec) {
            for row in 0..rows {
                for col in 0..cols {
                    out.push(WeightCoord { kind, row, col });
                }
            }
        }
        out
    }
}

/// Xavier-normal initialization: each matrix draws from
/// `N(0, 2 / (fan_in + fan_out))` with `fan_in = rows`, `fan_out = cols`.
/// Under [`Variant::Nmf`] the draws for `W` are replaced by their absolute
/// values.
pub fn xavier_init(spec: &ArchitectureSpec, seed: u64) -> ModelParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ModelParams::from_layout(spec, |kind, rows, cols| {
        let std = (2.0 / (rows + cols) as f64).sqrt();
        let normal = Normal::new(0.0, std).expect("std is finite and positive");
        let m = Matrix::from_fn(rows, cols, |_, _| normal.sample(&mut rng));
        if kind == WeightKind::W && spec.variant() == Variant::Nmf {
            m.map(f64::abs)
        } else {
            m
        }
    })
}

// Largest double below 1 and smallest positive normal double: the open
// interval (0,1) survives saturation.
const SIGMOID_MAX: f64 = 1.0 - f64::EPSILON / 2.0;
const SIGMOID_MIN: f64 = f64::MIN_POSITIVE;

/// Logistic function, evaluated without overflow and kept inside (0,1).
#[inline]
pub fn sigmoid(y: f64) -> f64 {
    let s = if y >= 0.0 {
        1.0 / (1.0 + (-y).exp())
    } else {
        let e = y.exp();
        e / (1.0 + e)
    };
    s.clamp(SIGMOID_MIN, SIGMOID_MAX)
}

#[inline]
pub fn relu(z: f64) -> f64 {
    if z > 0.0 {
        z
    } else {
        0.0
    }
}

/// Cached intermediates of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    /// `X⁽⁰⁾ … X⁽ˢ⁾`.
    pub x_layers: Vec<Matrix>,
    /// `Y⁽¹⁾ … Y⁽ˢ⁾` (index `l-1`).
    pub y_layers: Vec<Matrix>,
    pub z: Matrix,
    pub x_hat: Matrix,
}

impl ForwardTrace {
    /// Slender-layer activation `B = X⁽ˢ⁾`.
    pub fn embedding(&self) -> &Matrix {
        self.x_layers.last().expect("trace always has layers")
    }
}

pub fn forward(params: &ModelParams, x0: &Matrix) -> Result<ForwardTrace> {
    params.validate()?;
    let spec = &params.spec;
    if x0.cols() != spec.input_width() {
        return Err(Error::Shape(format!(
            "input layer: data has {} columns, model expects {}",
            x0.cols(),
            spec.input_width()
        )));
    }
    let s = spec.hidden_layers();
    let mut x_layers = Vec::with_capacity(s + 1);
    let mut y_layers = Vec::with_capacity(s);
    x_layers.push(x0.clone());
    for l in 1..=s {
        let layer_err = |e: Error| Error::Shape(format!("hidden layer {l}: {e}"));
        let mut y = x_layers[l - 1]
            .matmul(&params.v[l - 1])
            .map_err(layer_err)?;
        if l >= 2 {
            let guide = x0.matmul(&params.v_tilde[l - 2]).map_err(layer_err)?;
            y = y.add(&guide).map_err(layer_err)?;
        }
        x_layers.push(y.map(sigmoid));
        y_layers.push(y);
    }
    let z = x_layers[s]
        .matmul(&params.w)
        .map_err(|e| Error::Shape(format!("output layer: {e}")))?;
    let x_hat = z.map(relu);
    Ok(ForwardTrace {
        x_layers,
        y_layers,
        z,
        x_hat,
    })
}

/// The factor pair `(B, W)` with `Z = B·W`.
pub fn extract_factors(trace: &ForwardTrace, params: &ModelParams) -> (Matrix, Matrix) {
    (trace.embedding().clone(), params.w.clone())
}
