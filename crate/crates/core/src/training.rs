//! Cost, backpropagation, Adam and the training loop.
//!
//! The cost is `Φ = 1/(2mn) · Σ (x − x̂)²`. Gradients are derived by hand for
//! the fixed topology:
//!
//! ```text
//! Δ_Z   = (X̂ − X)/(mn) ⊙ 1[Z > 0]
//! ∂W    = X⁽ˢ⁾ᵀ · Δ_Z
//! Δ_s   = (Δ_Z · Wᵀ) ⊙ X⁽ˢ⁾ ⊙ (1 − X⁽ˢ⁾)
//! Δ_l   = (Δ_{l+1} · V⁽ˡ⁺¹⁾ᵀ) ⊙ X⁽ˡ⁾ ⊙ (1 − X⁽ˡ⁾)
//! ∂V⁽ˡ⁾ = X⁽ˡ⁻¹⁾ᵀ · Δ_l
//! ∂Ṽ⁽ˡ⁾ = X⁽⁰⁾ᵀ · Δ_l
//! ```
//!
//! The guidance products only feed the `Ṽ` gradients; the input is constant
//! so nothing flows back through them. ReLU′(0) is taken as 0.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::{self, ForwardTrace, ModelParams, Variant, WeightCoord, WeightKind};
use crate::ArchitectureSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchMode {
    Full,
    MiniBatch(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Training stops once `|Φ_t − Φ_{t−1}|` falls below this value.
    pub stop_threshold: f64,
    pub max_epochs: usize,
    pub seed: u64,
    pub batch_mode: BatchMode,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            stop_threshold: 1e-6,
            max_epochs: 5000,
            seed: 0,
            batch_mode: BatchMode::Full,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let in_unit = |b: f64| b > 0.0 && b < 1.0;
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Parameter(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !in_unit(self.beta1) || !in_unit(self.beta2) {
            return Err(Error::Parameter(format!(
                "beta1 and beta2 must lie in (0,1), got {} and {}",
                self.beta1, self.beta2
            )));
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(Error::Parameter(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.stop_threshold.is_nan() || self.stop_threshold < 0.0 {
            return Err(Error::Parameter(format!(
                "stop threshold must be non-negative, got {}",
                self.stop_threshold
            )));
        }
        if self.max_epochs == 0 {
            return Err(Error::Parameter("max_epochs must be at least 1".into()));
        }
        if self.batch_mode == BatchMode::MiniBatch(0) {
            return Err(Error::Parameter("minibatch size must be at least 1".into()));
        }
        Ok(())
    }
}

/// `∂Φ/∂` every weight matrix, laid out like [`ModelParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub v: Vec<Matrix>,
    pub v_tilde: Vec<Matrix>,
    pub w: Matrix,
}

impl Gradients {
    pub fn matrices(&self) -> impl Iterator<Item = &Matrix> {
        self.v
            .iter()
            .chain(&self.v_tilde)
            .chain(std::iter::once(&self.w))
    }

    pub fn get(&self, coord: WeightCoord) -> f64 {
        let m = match coord.kind {
            WeightKind::V(l) => &self.v[l - 1],
            WeightKind::VTilde(l) => &self.v_tilde[l - 2],
            WeightKind::W => &self.w,
        };
        m.get(coord.row, coord.col)
    }
}

/// Adam moment estimates, one pair of accumulators per weight matrix in
/// canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub first: Vec<Matrix>,
    pub second: Vec<Matrix>,
    pub t: u64,
}

impl AdamState {
    pub fn new(params: &ModelParams) -> Self {
        let zeros: Vec<Matrix> = params
            .matrices()
            .map(|m| Matrix::zeros(m.rows(), m.cols()))
            .collect();
        Self {
            first: zeros.clone(),
            second: zeros,
            t: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Threshold,
    MaxEpochs,
}

impl StopReason {
    pub fn name(self) -> &'static str {
        match self {
            StopReason::Threshold => "threshold",
            StopReason::MaxEpochs => "max_epochs",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainLog {
    pub cost_per_epoch: Vec<f64>,
    pub epochs_run: usize,
    /// `None` only while training is in progress or after an abort.
    pub stop_reason: Option<StopReason>,
}

impl TrainLog {
    pub fn initial_cost(&self) -> Option<f64> {
        self.cost_per_epoch.first().copied()
    }

    pub fn final_cost(&self) -> Option<f64> {
        self.cost_per_epoch.last().copied()
    }
}

/// A training failure together with the log accumulated before it.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{error} (after {} epochs)", log.epochs_run)]
pub struct TrainError {
    pub error: Error,
    pub log: TrainLog,
}

/// Mean-square reconstruction cost `1/(2mn) · Σ (x − x̂)²`.
pub fn cost(x: &Matrix, x_hat: &Matrix) -> Result<f64> {
    if x.shape() != x_hat.shape() {
        return Err(Error::Shape(format!(
            "cost of {}x{} against {}x{}",
            x.rows(),
            x.cols(),
            x_hat.rows(),
            x_hat.cols()
        )));
    }
    let (m, n) = x.shape();
    let sum: f64 = x
        .data()
        .iter()
        .zip(x_hat.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum / (2.0 * m as f64 * n as f64))
}

fn ensure_finite(m: &Matrix, what: &str) -> Result<()> {
    if m.is_finite() {
        Ok(())
    } else {
        Err(Error::Numeric(format!("non-finite gradient in {what}")))
    }
}

fn sigmoid_prime_from_output(x: &Matrix) -> Matrix {
    x.map(|a| a * (1.0 - a))
}

/// Exact gradients of [`cost`] with respect to every weight.
pub fn backward(trace: &ForwardTrace, params: &ModelParams, x: &Matrix) -> Result<Gradients> {
    let s = params.spec.hidden_layers();
    let x0 = &trace.x_layers[0];
    if x.shape() != trace.x_hat.shape() || trace.x_layers.len() != s + 1 {
        return Err(Error::Shape(
            "trace does not match the data or the model".into(),
        ));
    }
    let (m, n) = x.shape();
    let norm = (m * n) as f64;

    let delta_z =
        trace
            .x_hat
            .sub(x)?
            .zip_map(&trace.z, |d, z| if z > 0.0 { d / norm } else { 0.0 })?;
    let grad_w = trace.x_layers[s].transpose().matmul(&delta_z)?;
    ensure_finite(&grad_w, "W")?;

    let mut grad_v = vec![None; s];
    let mut grad_vt = vec![None; s.saturating_sub(1)];
    let mut upstream = delta_z.matmul(&params.w.transpose())?;
    for l in (1..=s).rev() {
        let delta = upstream.hadamard(&sigmoid_prime_from_output(&trace.x_layers[l]))?;
        let gv = trace.x_layers[l - 1].transpose().matmul(&delta)?;
        ensure_finite(&gv, &format!("V{l}"))?;
        grad_v[l - 1] = Some(gv);
        if l >= 2 {
            let gvt = x0.transpose().matmul(&delta)?;
            ensure_finite(&gvt, &format!("Vtilde{l}"))?;
            grad_vt[l - 2] = Some(gvt);
            upstream = delta.matmul(&params.v[l - 1].transpose())?;
        }
    }
    Ok(Gradients {
        v: grad_v
            .into_iter()
            .map(|g| g.expect("filled above"))
            .collect(),
        v_tilde: grad_vt
            .into_iter()
            .map(|g| g.expect("filled above"))
            .collect(),
        w: grad_w,
    })
}

/// Central difference `(Φ(w+h) − Φ(w−h)) / 2h` for one weight.
pub fn finite_difference_grad(
    params: &ModelParams,
    x: &Matrix,
    which: WeightCoord,
    h: f64,
) -> Result<f64> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Parameter(format!(
            "step h must be positive, got {h}"
        )));
    }
    let mut probe = params.clone();
    let base = params.matrix(which.kind).get(which.row, which.col);
    let mut eval = |w: f64| -> Result<f64> {
        probe.matrix_mut(which.kind).set(which.row, which.col, w);
        let trace = model::forward(&probe, x)?;
        cost(x, &trace.x_hat)
    };
    let plus = eval(base + h)?;
    let minus = eval(base - h)?;
    Ok((plus - minus) / (2.0 * h))
}

/// One Adam update of every weight matrix.
pub fn adam_step(
    params: &mut ModelParams,
    grads: &Gradients,
    state: &mut AdamState,
    cfg: &TrainConfig,
) -> Result<()> {
    state.t += 1;
    let t = state.t as i32;
    let bias1 = 1.0 - cfg.beta1.powi(t);
    let bias2 = 1.0 - cfg.beta2.powi(t);
    let layout = model::weight_layout(&params.spec);
    for ((((w, g), m), v), (kind, _, _)) in params
        .matrices_mut()
        .zip(grads.matrices())
        .zip(state.first.iter_mut())
        .zip(state.second.iter_mut())
        .zip(layout)
    {
        if w.shape() != g.shape() || w.shape() != m.shape() {
            return Err(Error::Shape(format!(
                "{kind}: gradient or moment shape mismatch"
            )));
        }
        let wd = w.data_mut();
        let md = m.data_mut();
        let vd = v.data_mut();
        for (((wi, &gi), mi), vi) in wd
            .iter_mut()
            .zip(g.data())
            .zip(md.iter_mut())
            .zip(vd.iter_mut())
        {
            *mi = cfg.beta1 * *mi + (1.0 - cfg.beta1) * gi;
            *vi = cfg.beta2 * *vi + (1.0 - cfg.beta2) * gi * gi;
            let m_hat = *mi / bias1;
            let v_hat = *vi / bias2;
            *wi -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
            if !wi.is_finite() {
                return Err(Error::Numeric(format!("non-finite update in {kind}")));
            }
        }
    }
    Ok(())
}

/// Replaces negative entries with zero.
pub fn project_nonnegative(w: &Matrix) -> Matrix {
    w.map(|x| x.max(0.0))
}

fn apply_constraints(params: &mut ModelParams) {
    if params.spec.variant() == Variant::Nmf {
        params.w = project_nonnegative(&params.w);
    }
}

/// Trains from Xavier initialization; see [`fit_from`].
pub fn fit(
    x: &Matrix,
    spec: &ArchitectureSpec,
    cfg: &TrainConfig,
) -> std::result::Result<(ModelParams, TrainLog), TrainError> {
    fit_from(model::xavier_init(spec, cfg.seed), x, cfg, |_, _, _| {})
}

/// Trains starting from `params`.
///
/// Each epoch evaluates the cost of the current parameters on all of `x`,
/// records it, checks the stopping rule, and only then updates. The returned
/// parameters are therefore exactly those whose cost is the last log entry.
/// `observe(epoch, params, trace)` sees every evaluated state (epochs are
/// 1-based).
pub fn fit_from(
    mut params: ModelParams,
    x: &Matrix,
    cfg: &TrainConfig,
    mut observe: impl FnMut(usize, &ModelParams, &ForwardTrace),
) -> std::result::Result<(ModelParams, TrainLog), TrainError> {
    let mut log = TrainLog::default();
    macro_rules! bail {
        ($e:expr) => {
            return Err(TrainError {
                error: $e,
                log: log.clone(),
            })
        };
    }
    if let Err(e) = cfg.validate().and_then(|_| params.validate()) {
        bail!(e);
    }
    if x.min() < 0.0 {
        bail!(Error::Domain(
            "training data must be entrywise non-negative".into()
        ));
    }
    apply_constraints(&mut params);

    let mut state = AdamState::new(&params);
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x9E37_79B9_7F4A_7C15));
    let mut order: Vec<usize> = (0..x.rows()).collect();

    for epoch in 1..=cfg.max_epochs {
        let trace = match model::forward(&params, x) {
            Ok(t) => t,
            Err(e) => bail!(e),
        };
        let phi = match cost(x, &trace.x_hat) {
            Ok(c) if c.is_finite() => c,
            Ok(c) => bail!(Error::Numeric(format!("cost became {c} at epoch {epoch}"))),
            Err(e) => bail!(e),
        };
        log.cost_per_epoch.push(phi);
        log.epochs_run = epoch;
        observe(epoch, &params, &trace);

        if epoch >= 2 {
            let prev = log.cost_per_epoch[epoch - 2];
            if (phi - prev).abs() < cfg.stop_threshold {
                log.stop_reason = Some(StopReason::Threshold);
                break;
            }
        }
        if epoch == cfg.max_epochs {
            log.stop_reason = Some(StopReason::MaxEpochs);
            break;
        }

        let step = match cfg.batch_mode {
            BatchMode::Full => backward(&trace, &params, x)
                .and_then(|g| adam_step(&mut params, &g, &mut state, cfg))
                .map(|_| apply_constraints(&mut params)),
            BatchMode::MiniBatch(size) => {
                order.shuffle(&mut shuffle_rng);
                order.chunks(size).try_for_each(|idx| {
                    let batch = x.select_rows(idx)?;
                    let t = model::forward(&params, &batch)?;
                    let g = backward(&t, &params, &batch)?;
                    adam_step(&mut params, &g, &mut state, cfg)?;
                    apply_constraints(&mut params);
                    Ok(())
                })
            }
        };
        if let Err(e) = step {
            bail!(e);
        }
    }
    Ok((params, log))
}

/// Worst relative disagreement `|analytic − numeric| / max(1, |analytic|)`
/// between [`backward`] and [`finite_difference_grad`] over every weight.
pub fn max_gradient_error(params: &ModelParams, x: &Matrix, h: f64) -> Result<f64> {
    let trace = model::forward(params, x)?;
    let grads = backward(&trace, params, x)?;
    let mut worst = 0.0f64;
    for coord in params.coords() {
        let analytic = grads.get(coord);
        let numeric = finite_difference_grad(params, x, coord, h)?;
        worst = worst.max((analytic - numeric).abs() / analytic.abs().max(1.0));
    }
    Ok(worst)
}

/// Seeded gradient-check fixture: 8 random signed samples of 3 features,
/// z-scored and folded to 8×6, with widths `[6, 5, 4, 3]`.
pub fn gradient_check_problem(seed: u64, variant: Variant) -> (ModelParams, Matrix) {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = Matrix::from_fn(8, 3, |_, _| rng.random_range(-2.0..2.0));
    let (z, _) = crate::preprocess::zscore_normalize(&u).expect("8 rows");
    let x = crate::preprocess::fold(&z).x;
    let spec = ArchitectureSpec::new(vec![6, 5, 4, 3], variant).expect("valid widths");
    (model::xavier_init(&spec, seed), x)
}
