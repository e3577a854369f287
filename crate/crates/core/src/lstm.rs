//! Single-layer LSTM with a linear readout, trained by full-batch gradient
//! descent with backpropagation through time.
//!
//! Per step, with `x` the scalar input and `h`, `c` the previous state:
//!
//! ```text
//! i = σ(W_i x + U_i h + b_i)      f = σ(W_f x + U_f h + b_f)
//! o = σ(W_o x + U_o h + b_o)      g = tanh(W_g x + U_g h + b_g)
//! c' = f ∘ c + i ∘ g              h' = o ∘ tanh(c')
//! ```
//!
//! The prediction after the last step is `w_y · h + b_y`. Losses are squared
//! errors on min-max normalized values.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::math::{sigmoid, sqrt, tanh};
use crate::series::{fit_normalizer, NormalizerParams};
use crate::{Error, Result};

/// Weights of one gate for a univariate input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateParams {
    /// Input weight per unit.
    pub w: Vec<f64>,
    /// Recurrent weights, row-major `H x H`: `u[j * H + k]` maps `h[k]` to unit `j`.
    pub u: Vec<f64>,
    pub b: Vec<f64>,
}

impl GateParams {
    fn zeros(h: usize) -> Self {
        Self {
            w: vec![0.0; h],
            u: vec![0.0; h * h],
            b: vec![0.0; h],
        }
    }

    fn pre_activation(&self, x: f64, h_prev: &[f64], out: &mut [f64]) {
        let h = h_prev.len();
        for (j, o) in out.iter_mut().enumerate() {
            let row = &self.u[j * h..(j + 1) * h];
            let rec: f64 = row.iter().zip(h_prev).map(|(u, h)| u * h).sum();
            *o = self.w[j] * x + rec + self.b[j];
        }
    }

    fn slices(&self) -> [&[f64]; 3] {
        [&self.w, &self.u, &self.b]
    }

    fn slices_mut(&mut self) -> [&mut Vec<f64>; 3] {
        [&mut self.w, &mut self.u, &mut self.b]
    }
}

/// Network parameters. Gradients use the same shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    pub hidden_size: usize,
    pub input_gate: GateParams,
    pub forget_gate: GateParams,
    pub output_gate: GateParams,
    pub candidate: GateParams,
    pub w_y: Vec<f64>,
    pub b_y: f64,
}

impl LstmParams {
    /// All-zero parameters.
    pub fn zeros(hidden_size: usize) -> Self {
        Self {
            hidden_size,
            input_gate: GateParams::zeros(hidden_size),
            forget_gate: GateParams::zeros(hidden_size),
            output_gate: GateParams::zeros(hidden_size),
            candidate: GateParams::zeros(hidden_size),
            w_y: vec![0.0; hidden_size],
            b_y: 0.0,
        }
    }

    fn gates(&self) -> [&GateParams; 4] {
        [
            &self.input_gate,
            &self.forget_gate,
            &self.output_gate,
            &self.candidate,
        ]
    }

    fn gates_mut(&mut self) -> [&mut GateParams; 4] {
        [
            &mut self.input_gate,
            &mut self.forget_gate,
            &mut self.output_gate,
            &mut self.candidate,
        ]
    }

    /// Number of scalar parameters: `4 H (H + 2) + H + 1`.
    pub fn count(&self) -> usize {
        let h = self.hidden_size;
        4 * h * (h + 2) + h + 1
    }

    /// Parameters in a fixed order: gates (input, forget, output, candidate;
    /// each `w`, `u`, `b`), then `w_y`, then `b_y`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.count());
        for gate in self.gates() {
            for s in gate.slices() {
                out.extend_from_slice(s);
            }
        }
        out.extend_from_slice(&self.w_y);
        out.push(self.b_y);
        out
    }

    /// Inverse of [`to_flat`](Self::to_flat).
    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.count() {
            return Err(Error::DimensionMismatch {
                expected: self.count(),
                found: flat.len(),
            });
        }
        let mut rest = flat;
        for gate in self.gates_mut() {
            for s in gate.slices_mut() {
                let (head, tail) = rest.split_at(s.len());
                s.copy_from_slice(head);
                rest = tail;
            }
        }
        let (head, tail) = rest.split_at(self.w_y.len());
        self.w_y.copy_from_slice(head);
        self.b_y = tail[0];
        Ok(())
    }

    fn is_finite(&self) -> bool {
        self.to_flat().iter().all(|v| v.is_finite())
    }
}

/// Hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LstmConfig {
    pub hidden_size: usize,
    /// Input window length.
    pub window: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub grad_clip_norm: f64,
    pub seed: u64,
}

impl Default for LstmConfig {
    fn default() -> Self {
        Self {
            hidden_size: 8,
            window: 5,
            learning_rate: 0.01,
            epochs: 200,
            grad_clip_norm: 5.0,
            seed: 0,
        }
    }
}

impl LstmConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.into()));
        if self.hidden_size == 0 {
            return bad("hidden_size must be at least 1");
        }
        if self.window == 0 {
            return bad("window must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if !(self.grad_clip_norm > 0.0) {
            return bad("grad_clip_norm must be positive");
        }
        Ok(())
    }
}

/// Seeded initialization: weights uniform in `(-0.1, 0.1)`, forget-gate
/// biases 1, other biases 0. The generator is ChaCha8 seeded with `cfg.seed`
/// and draws weights in [`LstmParams::to_flat`] order.
pub fn lstm_init(cfg: &LstmConfig) -> Result<LstmParams> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = LstmParams::zeros(cfg.hidden_size);
    let mut draw = |v: &mut Vec<f64>| {
        for x in v.iter_mut() {
            *x = rng.random_range(-0.1..0.1);
        }
    };
    for gate in params.gates_mut() {
        draw(&mut gate.w);
        draw(&mut gate.u);
    }
    draw(&mut params.w_y);
    params.forget_gate.b.fill(1.0);
    Ok(params)
}

/// Hidden and cell state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

#[derive(Debug, Clone)]
struct StepCache {
    x: f64,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    i: Vec<f64>,
    f: Vec<f64>,
    o: Vec<f64>,
    g: Vec<f64>,
    tanh_c: Vec<f64>,
}

struct Trace {
    steps: Vec<StepCache>,
    h_last: Vec<f64>,
    prediction: f64,
}

fn run(params: &LstmParams, window: &[f64]) -> Trace {
    let h_size = params.hidden_size;
    let mut h = vec![0.0; h_size];
    let mut c = vec![0.0; h_size];
    let mut steps = Vec::with_capacity(window.len());
    let mut buf = vec![0.0; h_size];
    for &x in window {
        let mut act = |gate: &GateParams, f: fn(f64) -> f64| {
            gate.pre_activation(x, &h, &mut buf);
            buf.iter().map(|&a| f(a)).collect::<Vec<f64>>()
        };
        let i = act(&params.input_gate, sigmoid);
        let f = act(&params.forget_gate, sigmoid);
        let o = act(&params.output_gate, sigmoid);
        let g = act(&params.candidate, tanh);
        let c_new: Vec<f64> = (0..h_size).map(|j| f[j] * c[j] + i[j] * g[j]).collect();
        let tanh_c: Vec<f64> = c_new.iter().map(|&v| tanh(v)).collect();
        let h_new: Vec<f64> = (0..h_size).map(|j| o[j] * tanh_c[j]).collect();
        steps.push(StepCache {
            x,
            h_prev: core::mem::replace(&mut h, h_new),
            c_prev: core::mem::replace(&mut c, c_new),
            i,
            f,
            o,
            g,
            tanh_c,
        });
    }
    let prediction = params.w_y.iter().zip(&h).map(|(w, h)| w * h).sum::<f64>() + params.b_y;
    Trace {
        steps,
        h_last: h,
        prediction,
    }
}

fn check_window(params: &LstmParams, window: &[f64], expected: Option<usize>) -> Result<()> {
    if let Some(expected) = expected {
        if window.len() != expected {
            return Err(Error::WindowLengthMismatch {
                expected,
                found: window.len(),
            });
        }
    }
    if window.is_empty() {
        return Err(Error::EmptyWindow);
    }
    if params.w_y.len() != params.hidden_size {
        return Err(Error::DimensionMismatch {
            expected: params.hidden_size,
            found: params.w_y.len(),
        });
    }
    Ok(())
}

/// Forward pass from a zero state. Returns the prediction and the state
/// after every step.
pub fn lstm_forward(params: &LstmParams, window: &[f64]) -> Result<(f64, Vec<LstmState>)> {
    check_window(params, window, None)?;
    let trace = run(params, window);
    let mut states: Vec<LstmState> = trace
        .steps
        .iter()
        .skip(1)
        .map(|s| LstmState {
            h: s.h_prev.clone(),
            c: s.c_prev.clone(),
        })
        .collect();
    let last = trace.steps.last().expect("window is nonempty");
    states.push(LstmState {
        h: trace.h_last.clone(),
        c: (0..params.hidden_size)
            .map(|j| last.f[j] * last.c_prev[j] + last.i[j] * last.g[j])
            .collect(),
    });
    Ok((trace.prediction, states))
}

/// Like [`lstm_forward`] but only the prediction.
pub fn lstm_predict(params: &LstmParams, window: &[f64]) -> Result<f64> {
    check_window(params, window, None)?;
    Ok(run(params, window).prediction)
}

fn accumulate_grads(
    params: &LstmParams,
    window: &[f64],
    target: f64,
    grads: &mut LstmParams,
) -> f64 {
    let h_size = params.hidden_size;
    let trace = run(params, window);
    let err = trace.prediction - target;
    let dy = 2.0 * err;

    for (g, h) in grads.w_y.iter_mut().zip(&trace.h_last) {
        *g += dy * h;
    }
    grads.b_y += dy;

    let mut dh: Vec<f64> = params.w_y.iter().map(|w| dy * w).collect();
    let mut dc_next = vec![0.0; h_size];
    let mut da = [
        vec![0.0; h_size],
        vec![0.0; h_size],
        vec![0.0; h_size],
        vec![0.0; h_size],
    ];
    for step in trace.steps.iter().rev() {
        for j in 0..h_size {
            let tc = step.tanh_c[j];
            let d_o = dh[j] * tc;
            let dc = dh[j] * step.o[j] * (1.0 - tc * tc) + dc_next[j];
            let d_i = dc * step.g[j];
            let d_g = dc * step.i[j];
            let d_f = dc * step.c_prev[j];
            dc_next[j] = dc * step.f[j];
            da[0][j] = d_i * step.i[j] * (1.0 - step.i[j]);
            da[1][j] = d_f * step.f[j] * (1.0 - step.f[j]);
            da[2][j] = d_o * step.o[j] * (1.0 - step.o[j]);
            da[3][j] = d_g * (1.0 - step.g[j] * step.g[j]);
        }
        let mut dh_prev = vec![0.0; h_size];
        for ((gate, grad), da) in params.gates().into_iter().zip(grads.gates_mut()).zip(&da) {
            for j in 0..h_size {
                let a = da[j];
                grad.w[j] += a * step.x;
                grad.b[j] += a;
                let row = j * h_size;
                for k in 0..h_size {
                    grad.u[row + k] += a * step.h_prev[k];
                    dh_prev[k] += a * gate.u[row + k];
                }
            }
        }
        dh = dh_prev;
    }
    err * err
}

/// Squared-error loss and its exact gradient with respect to every parameter.
pub fn lstm_grads(params: &LstmParams, window: &[f64], target: f64) -> Result<(LstmParams, f64)> {
    check_window(params, window, None)?;
    let mut grads = LstmParams::zeros(params.hidden_size);
    let loss = accumulate_grads(params, window, target, &mut grads);
    Ok((grads, loss))
}

/// Training pairs: every window of `p` consecutive values and the value after it.
pub fn training_pairs(values: &[f64], p: usize) -> Vec<(&[f64], f64)> {
    if values.len() <= p {
        return Vec::new();
    }
    (0..values.len() - p)
        .map(|s| (&values[s..s + p], values[s + p]))
        .collect()
}

/// Mean squared error over the pairs.
pub fn training_loss(params: &LstmParams, pairs: &[(&[f64], f64)]) -> f64 {
    let sum: f64 = pairs
        .iter()
        .map(|(w, t)| {
            let e = run(params, w).prediction - t;
            e * e
        })
        .sum();
    sum / pairs.len() as f64
}

/// One full-batch step: average the gradients over `pairs`, clip their
/// global norm to `clip`, move against them by `learning_rate`. Returns the
/// loss before the update.
pub fn gradient_step(
    params: &mut LstmParams,
    pairs: &[(&[f64], f64)],
    learning_rate: f64,
    clip: f64,
) -> f64 {
    let mut grads = LstmParams::zeros(params.hidden_size);
    let mut loss = 0.0;
    for (w, t) in pairs {
        loss += accumulate_grads(params, w, *t, &mut grads);
    }
    let scale = 1.0 / pairs.len() as f64;
    let mut g = grads.to_flat();
    g.iter_mut().for_each(|v| *v *= scale);
    let norm = sqrt(g.iter().map(|v| v * v).sum());
    let factor = if norm > clip { clip / norm } else { 1.0 };
    let mut flat = params.to_flat();
    for (p, g) in flat.iter_mut().zip(&g) {
        *p -= learning_rate * factor * g;
    }
    params
        .set_flat(&flat)
        .expect("gradient has the parameter shape");
    loss * scale
}

/// A trained network with the normalizer fitted on its training values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedLstm {
    pub config: LstmConfig,
    pub params: LstmParams,
    pub normalizer: NormalizerParams,
    /// Training loss at the start of each epoch, plus the final loss.
    pub loss_history: Vec<f64>,
}

impl TrainedLstm {
    /// Forecast of the value following `recent` (the last `window` observations).
    pub fn predict_next(&self, recent: &[f64]) -> Result<f64> {
        lstm_predict_next(&self.params, &self.normalizer, recent, self.config.window)
    }
}

/// Fits a normalizer on `train`, builds sliding-window pairs and runs
/// `cfg.epochs` full-batch descent steps from [`lstm_init`].
pub fn lstm_train(train: &[f64], cfg: &LstmConfig) -> Result<TrainedLstm> {
    cfg.validate()?;
    if train.len() <= cfg.window {
        return Err(Error::SeriesTooShort {
            needed: cfg.window + 1,
            found: train.len(),
        });
    }
    if let Some(index) = train.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let normalizer = fit_normalizer(train)?;
    let scaled: Vec<f64> = train.iter().map(|&x| normalizer.normalize(x)).collect();
    let pairs = training_pairs(&scaled, cfg.window);
    let mut params = lstm_init(cfg)?;
    let mut loss_history = Vec::with_capacity(cfg.epochs + 1);
    for _ in 0..cfg.epochs {
        loss_history.push(gradient_step(
            &mut params,
            &pairs,
            cfg.learning_rate,
            cfg.grad_clip_norm,
        ));
    }
    loss_history.push(training_loss(&params, &pairs));
    debug_assert!(params.is_finite());
    Ok(TrainedLstm {
        config: *cfg,
        params,
        normalizer,
        loss_history,
    })
}

/// Normalizes `recent`, runs the network and maps the output back to the
/// original units.
pub fn lstm_predict_next(
    params: &LstmParams,
    normalizer: &NormalizerParams,
    recent: &[f64],
    window: usize,
) -> Result<f64> {
    check_window(params, recent, Some(window))?;
    let scaled: Vec<f64> = recent.iter().map(|&x| normalizer.normalize(x)).collect();
    Ok(normalizer.denormalize(run(params, &scaled).prediction))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(h: usize, p: usize, seed: u64) -> LstmConfig {
        LstmConfig {
            hidden_size: h,
            window: p,
            seed,
            ..LstmConfig::default()
        }
    }

    #[test]
    fn init_is_deterministic() {
        let a = lstm_init(&cfg(3, 4, 7)).unwrap();
        let b = lstm_init(&cfg(3, 4, 7)).unwrap();
        assert_eq!(a.to_flat(), b.to_flat());
        assert_ne!(a.to_flat(), lstm_init(&cfg(3, 4, 8)).unwrap().to_flat());
        assert!(a.forget_gate.b.iter().all(|&b| b == 1.0));
        assert!(a.input_gate.b.iter().all(|&b| b == 0.0));
        assert_eq!(a.b_y, 0.0);
        assert!(a.input_gate.u.iter().all(|w| w.abs() < 0.1));
    }

    #[test]
    fn parameter_count() {
        let p = lstm_init(&cfg(2, 3, 0)).unwrap();
        assert_eq!(p.count(), 35);
        assert_eq!(p.to_flat().len(), 35);
    }

    #[test]
    fn flat_round_trip() {
        let p = lstm_init(&cfg(3, 2, 1)).unwrap();
        let mut q = LstmParams::zeros(3);
        q.set_flat(&p.to_flat()).unwrap();
        assert_eq!(p, q);
        assert!(q.set_flat(&[0.0; 3]).is_err());
    }

    #[test]
    fn zero_params_fixed_point() {
        let p = LstmParams::zeros(3);
        let (y, states) = lstm_forward(&p, &[0.2, 0.9, 0.4]).unwrap();
        assert_eq!(y, 0.0);
        assert_eq!(states.len(), 3);
        for s in &states {
            assert!(s.h.iter().chain(&s.c).all(|&v| v == 0.0));
        }
    }

    #[test]
    fn gradient_at_exact_fit_is_zero() {
        let p = lstm_init(&cfg(2, 3, 3)).unwrap();
        let window = [0.1, 0.5, 0.3];
        let y = lstm_predict(&p, &window).unwrap();
        let (g, loss) = lstm_grads(&p, &window, y).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.to_flat().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn readout_bias_gradient() {
        let p = lstm_init(&cfg(3, 4, 11)).unwrap();
        let window = [0.3, 0.1, 0.8, 0.5];
        let y = lstm_predict(&p, &window).unwrap();
        let (g, _) = lstm_grads(&p, &window, 0.7).unwrap();
        assert_eq!(g.b_y, 2.0 * (y - 0.7));
    }

    #[test]
    fn config_validation() {
        let bad = LstmConfig {
            epochs: 0,
            ..LstmConfig::default()
        };
        assert!(matches!(bad.validate(), Err(Error::InvalidConfig(_))));
        assert!(lstm_train(&[1.0; 20], &bad).is_err());
        assert!(matches!(
            lstm_train(&[1.0; 5], &LstmConfig::default()),
            Err(Error::SeriesTooShort { .. })
        ));
    }

    #[test]
    fn predict_window_length_checked() {
        let p = LstmParams::zeros(2);
        let n = NormalizerParams {
            min: 0.0,
            max: 10.0,
        };
        assert_eq!(
            lstm_predict_next(&p, &n, &[1.0, 2.0], 3),
            Err(Error::WindowLengthMismatch {
                expected: 3,
                found: 2
            })
        );
        assert_eq!(lstm_predict_next(&p, &n, &[1.0, 2.0, 3.0], 3).unwrap(), 0.0);
    }
}
