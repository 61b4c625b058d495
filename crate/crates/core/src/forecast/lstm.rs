//! Single-layer LSTM with a scalar input and a linear read-out, plus
//! backpropagation through time.
//!
//! Per step, with z = [h_prev, x]:
//!
//! ```text
//! f = σ(W_f·z + b_f)     i = σ(W_i·z + b_i)     g = tanh(W_g·z + b_g)
//! o = σ(W_o·z + b_o)     c = f⊙c_prev + i⊙g     h = o⊙tanh(c)
//! ```
//!
//! The window prediction is `w_y·h_T + b_y` and the window loss is the
//! squared error against the target.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ForecastError, Window};

/// Row blocks of the stacked gate matrix, in storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Forget = 0,
    Input = 1,
    Candidate = 2,
    Output = 3,
}

const GATES: usize = 4;

/// Weights of the cell and the read-out head.
///
/// `gate_weights` is row-major with 4·H rows (forget, input, candidate,
/// output blocks of H rows each) and H + 1 columns: the previous hidden
/// state followed by the scalar input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParameters", into = "RawParameters")]
pub struct LstmParameters {
    hidden_size: usize,
    gate_weights: Vec<f64>,
    gate_bias: Vec<f64>,
    head_weights: Vec<f64>,
    head_bias: f64,
}

#[derive(Serialize, Deserialize)]
struct RawParameters {
    hidden_size: usize,
    gate_weights: Vec<f64>,
    gate_bias: Vec<f64>,
    head_weights: Vec<f64>,
    head_bias: f64,
}

impl TryFrom<RawParameters> for LstmParameters {
    type Error = ForecastError;

    fn try_from(r: RawParameters) -> Result<Self, Self::Error> {
        let p = LstmParameters {
            hidden_size: r.hidden_size,
            gate_weights: r.gate_weights,
            gate_bias: r.gate_bias,
            head_weights: r.head_weights,
            head_bias: r.head_bias,
        };
        p.validate()?;
        Ok(p)
    }
}

impl From<LstmParameters> for RawParameters {
    fn from(p: LstmParameters) -> Self {
        RawParameters {
            hidden_size: p.hidden_size,
            gate_weights: p.gate_weights,
            gate_bias: p.gate_bias,
            head_weights: p.head_weights,
            head_bias: p.head_bias,
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl LstmParameters {
    pub fn zeros(hidden_size: usize) -> Self {
        let h = hidden_size;
        Self {
            hidden_size: h,
            gate_weights: vec![0.0; GATES * h * (h + 1)],
            gate_bias: vec![0.0; GATES * h],
            head_weights: vec![0.0; h],
            head_bias: 0.0,
        }
    }

    /// Uniform(−1/√H, 1/√H) for every weight, forget-gate bias set to 1.
    pub fn init<R: Rng + ?Sized>(hidden_size: usize, rng: &mut R) -> Result<Self, ForecastError> {
        if hidden_size == 0 {
            return Err(ForecastError::InvalidConfig("hidden size must be at least 1".into()));
        }
        let bound = 1.0 / (hidden_size as f64).sqrt();
        let mut p = Self::zeros(hidden_size);
        for w in p
            .gate_weights
            .iter_mut()
            .chain(p.gate_bias.iter_mut())
            .chain(p.head_weights.iter_mut())
        {
            *w = rng.gen_range(-bound..bound);
        }
        p.head_bias = rng.gen_range(-bound..bound);
        for b in &mut p.gate_bias[..hidden_size] {
            *b = 1.0;
        }
        Ok(p)
    }

    pub fn hidden_size(&self) -> usize {
        self.hidden_size
    }

    fn cols(&self) -> usize {
        self.hidden_size + 1
    }

    pub fn num_params(&self) -> usize {
        self.gate_weights.len() + self.gate_bias.len() + self.head_weights.len() + 1
    }

    pub fn gate_weights(&self) -> &[f64] {
        &self.gate_weights
    }

    pub fn gate_weights_mut(&mut self) -> &mut [f64] {
        &mut self.gate_weights
    }

    pub fn gate_bias(&self) -> &[f64] {
        &self.gate_bias
    }

    pub fn gate_bias_mut(&mut self) -> &mut [f64] {
        &mut self.gate_bias
    }

    pub fn head_weights(&self) -> &[f64] {
        &self.head_weights
    }

    pub fn head_weights_mut(&mut self) -> &mut [f64] {
        &mut self.head_weights
    }

    pub fn head_bias(&self) -> f64 {
        self.head_bias
    }

    pub fn set_head_bias(&mut self, b: f64) {
        self.head_bias = b;
    }

    /// Weight from column `col` (hidden unit, or `H` for the input) into
    /// `unit` of `gate`.
    pub fn gate_weight(&self, gate: Gate, unit: usize, col: usize) -> f64 {
        self.gate_weights[(gate as usize * self.hidden_size + unit) * self.cols() + col]
    }

    pub fn validate(&self) -> Result<(), ForecastError> {
        let h = self.hidden_size;
        if h == 0
            || self.gate_weights.len() != GATES * h * (h + 1)
            || self.gate_bias.len() != GATES * h
            || self.head_weights.len() != h
        {
            return Err(ForecastError::Shape(format!(
                "parameter arrays do not match hidden size {h}"
            )));
        }
        if !self.to_flat().iter().all(|v| v.is_finite()) {
            return Err(ForecastError::Shape("parameters must be finite".into()));
        }
        Ok(())
    }

    /// gate weights, gate biases, head weights, head bias.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        out.extend_from_slice(&self.gate_weights);
        out.extend_from_slice(&self.gate_bias);
        out.extend_from_slice(&self.head_weights);
        out.push(self.head_bias);
        out
    }

    pub fn from_flat(hidden_size: usize, flat: &[f64]) -> Result<Self, ForecastError> {
        let mut p = Self::zeros(hidden_size);
        if flat.len() != p.num_params() {
            return Err(ForecastError::Shape(format!(
                "expected {} parameters, got {}",
                p.num_params(),
                flat.len()
            )));
        }
        let (gw, rest) = flat.split_at(p.gate_weights.len());
        let (gb, rest) = rest.split_at(p.gate_bias.len());
        let (hw, hb) = rest.split_at(hidden_size);
        p.gate_weights.copy_from_slice(gw);
        p.gate_bias.copy_from_slice(gb);
        p.head_weights.copy_from_slice(hw);
        p.head_bias = hb[0];
        Ok(p)
    }

    /// Mutable access by flat index, in [`LstmParameters::to_flat`] order.
    pub fn flat_mut(&mut self, mut idx: usize) -> &mut f64 {
        if idx < self.gate_weights.len() {
            return &mut self.gate_weights[idx];
        }
        idx -= self.gate_weights.len();
        if idx < self.gate_bias.len() {
            return &mut self.gate_bias[idx];
        }
        idx -= self.gate_bias.len();
        if idx < self.head_weights.len() {
            return &mut self.head_weights[idx];
        }
        assert_eq!(idx, self.head_weights.len(), "parameter index out of range");
        &mut self.head_bias
    }

    fn slices_mut(&mut self) -> [&mut [f64]; 4] {
        [
            &mut self.gate_weights,
            &mut self.gate_bias,
            &mut self.head_weights,
            std::slice::from_mut(&mut self.head_bias),
        ]
    }

    fn slices(&self) -> [&[f64]; 4] {
        [
            &self.gate_weights,
            &self.gate_bias,
            &self.head_weights,
            std::slice::from_ref(&self.head_bias),
        ]
    }

    pub fn norm(&self) -> f64 {
        self.slices()
            .iter()
            .flat_map(|s| s.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    /// self += alpha · other
    pub fn axpy(&mut self, alpha: f64, other: &LstmParameters) {
        debug_assert_eq!(self.hidden_size, other.hidden_size);
        for (dst, src) in self.slices_mut().into_iter().zip(other.slices()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += alpha * s;
            }
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for s in self.slices_mut() {
            s.iter_mut().for_each(|v| *v *= alpha);
        }
    }
}

/// Activations of one step, kept for the backward pass.
#[derive(Debug, Clone)]
struct StepCache {
    x: f64,
    /// [f, i, g, o] blocks after their nonlinearities.
    gates: Vec<f64>,
    c: Vec<f64>,
    tanh_c: Vec<f64>,
    h: Vec<f64>,
}

fn step_into(p: &LstmParameters, x: f64, h_prev: &[f64], c_prev: &[f64]) -> StepCache {
    let hs = p.hidden_size;
    let cols = p.cols();
    let mut gates = vec![0.0; GATES * hs];
    for (r, a) in gates.iter_mut().enumerate() {
        let row = &p.gate_weights[r * cols..(r + 1) * cols];
        let mut acc = p.gate_bias[r] + row[hs] * x;
        for (w, h) in row[..hs].iter().zip(h_prev) {
            acc += w * h;
        }
        *a = if r / hs == Gate::Candidate as usize {
            acc.tanh()
        } else {
            sigmoid(acc)
        };
    }
    let mut c = vec![0.0; hs];
    let mut tanh_c = vec![0.0; hs];
    let mut h = vec![0.0; hs];
    for k in 0..hs {
        let (f, i, g, o) = (gates[k], gates[hs + k], gates[2 * hs + k], gates[3 * hs + k]);
        c[k] = f * c_prev[k] + i * g;
        tanh_c[k] = c[k].tanh();
        h[k] = o * tanh_c[k];
    }
    StepCache {
        x,
        gates,
        c,
        tanh_c,
        h,
    }
}

/// One cell update: returns (h, c).
pub fn lstm_step(
    params: &LstmParameters,
    x: f64,
    h_prev: &[f64],
    c_prev: &[f64],
) -> Result<(Vec<f64>, Vec<f64>), ForecastError> {
    let hs = params.hidden_size;
    if h_prev.len() != hs || c_prev.len() != hs {
        return Err(ForecastError::Shape(format!(
            "state vectors have lengths {} and {}, hidden size is {hs}",
            h_prev.len(),
            c_prev.len()
        )));
    }
    let s = step_into(params, x, h_prev, c_prev);
    Ok((s.h, s.c))
}

fn forward(p: &LstmParameters, inputs: &[f64]) -> (Vec<StepCache>, f64) {
    let hs = p.hidden_size;
    let zeros = vec![0.0; hs];
    let mut steps: Vec<StepCache> = Vec::with_capacity(inputs.len());
    for &x in inputs {
        let (h_prev, c_prev) = match steps.last() {
            Some(s) => (&s.h[..], &s.c[..]),
            None => (&zeros[..], &zeros[..]),
        };
        let s = step_into(p, x, h_prev, c_prev);
        steps.push(s);
    }
    let h_last = steps.last().map_or(&zeros[..], |s| &s.h[..]);
    let y = p.head_bias + p.head_weights.iter().zip(h_last).map(|(w, h)| w * h).sum::<f64>();
    (steps, y)
}

/// Read-out after running the window from zero state.
pub fn predict(params: &LstmParameters, inputs: &[f64]) -> f64 {
    forward(params, inputs).1
}

/// Squared error of one window.
pub fn window_loss(params: &LstmParameters, window: &Window) -> f64 {
    let e = predict(params, &window.inputs) - window.target;
    e * e
}

/// Squared-error loss and its gradient by backpropagation through time.
pub fn loss_and_gradient(params: &LstmParameters, window: &Window) -> (f64, LstmParameters) {
    let hs = params.hidden_size;
    let cols = params.cols();
    let (steps, y) = forward(params, &window.inputs);
    let err = y - window.target;
    let dy = 2.0 * err;

    let mut grad = LstmParameters::zeros(hs);
    grad.head_bias = dy;
    let zeros = vec![0.0; hs];
    if let Some(last) = steps.last() {
        for (g, h) in grad.head_weights.iter_mut().zip(&last.h) {
            *g = dy * h;
        }
    }

    let mut dh: Vec<f64> = params.head_weights.iter().map(|w| dy * w).collect();
    let mut dc = vec![0.0; hs];
    let mut da = vec![0.0; GATES * hs];
    for t in (0..steps.len()).rev() {
        let s = &steps[t];
        let (h_prev, c_prev) = if t > 0 {
            (&steps[t - 1].h[..], &steps[t - 1].c[..])
        } else {
            (&zeros[..], &zeros[..])
        };
        for k in 0..hs {
            let (f, i, g, o) = (
                s.gates[k],
                s.gates[hs + k],
                s.gates[2 * hs + k],
                s.gates[3 * hs + k],
            );
            let tc = s.tanh_c[k];
            let dck = dc[k] + dh[k] * o * (1.0 - tc * tc);
            da[k] = dck * c_prev[k] * f * (1.0 - f);
            da[hs + k] = dck * g * i * (1.0 - i);
            da[2 * hs + k] = dck * i * (1.0 - g * g);
            da[3 * hs + k] = dh[k] * tc * o * (1.0 - o);
            dc[k] = dck * f;
        }
        dh.iter_mut().for_each(|v| *v = 0.0);
        for (r, &dar) in da.iter().enumerate() {
            grad.gate_bias[r] += dar;
            let grow = &mut grad.gate_weights[r * cols..(r + 1) * cols];
            let prow = &params.gate_weights[r * cols..(r + 1) * cols];
            for j in 0..hs {
                grow[j] += dar * h_prev[j];
                dh[j] += prow[j] * dar;
            }
            grow[hs] += dar * s.x;
        }
    }
    (err * err, grad)
}

/// Largest relative disagreement between analytic and central-difference
/// gradients: |ga − gn| / max(|ga|, |gn|, 1e-8) over every parameter.
pub fn gradient_check(params: &LstmParameters, window: &Window, epsilon: f64) -> f64 {
    gradient_check_with(params, window, epsilon, |p, w| loss_and_gradient(p, w).1)
}

/// [`gradient_check`] against a caller-supplied analytic gradient.
pub fn gradient_check_with<F>(
    params: &LstmParameters,
    window: &Window,
    epsilon: f64,
    analytic: F,
) -> f64
where
    F: Fn(&LstmParameters, &Window) -> LstmParameters,
{
    let ga = analytic(params, window).to_flat();
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get()).min(ga.len().max(1));
    let chunk = ga.len().div_ceil(threads.max(1)).max(1);
    // max is order independent, so the split does not change the result
    std::thread::scope(|scope| {
        let handles: Vec<_> = ga
            .chunks(chunk)
            .enumerate()
            .map(|(c, part)| {
                scope.spawn(move || {
                    let mut probe = params.clone();
                    let mut worst: f64 = 0.0;
                    for (k, &g) in part.iter().enumerate() {
                        let idx = c * chunk + k;
                        let orig = *probe.flat_mut(idx);
                        *probe.flat_mut(idx) = orig + epsilon;
                        let up = window_loss(&probe, window);
                        *probe.flat_mut(idx) = orig - epsilon;
                        let down = window_loss(&probe, window);
                        *probe.flat_mut(idx) = orig;
                        let gn = (up - down) / (2.0 * epsilon);
                        let rel = (g - gn).abs() / g.abs().max(gn.abs()).max(1e-8);
                        worst = worst.max(rel);
                    }
                    worst
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("gradient check worker panicked"))
            .fold(0.0, f64::max)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_params(hidden: usize, seed: u64) -> LstmParameters {
        LstmParameters::init(hidden, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
    }

    #[test]
    fn zero_parameters_give_zero_state() {
        let p = LstmParameters::zeros(4);
        let (h, c) = lstm_step(&p, 3.7, &[0.0; 4], &[0.0; 4]).unwrap();
        assert_eq!(h, vec![0.0; 4]);
        assert_eq!(c, vec![0.0; 4]);
    }

    #[test]
    fn saturated_forget_gate_keeps_cell() {
        let hs = 3;
        let mut p = random_params(hs, 5);
        for k in 0..hs {
            p.gate_bias[k] = 20.0;
            // input gate closed
            p.gate_bias[hs + k] = -40.0;
        }
        for r in 0..2 * hs {
            for col in 0..=hs {
                if r >= hs {
                    p.gate_weights[r * (hs + 1) + col] = 0.0;
                }
            }
        }
        for r in 0..hs {
            for col in 0..=hs {
                p.gate_weights[r * (hs + 1) + col] = 0.0;
            }
        }
        let c_prev = [0.7, -0.3, 1.5];
        let (_, c) = lstm_step(&p, 0.4, &[0.1, 0.2, -0.1], &c_prev).unwrap();
        for (a, b) in c.iter().zip(c_prev) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn matches_scalar_transcription() {
        let hs = 5;
        let p = random_params(hs, 42);
        let x = 0.37;
        let h_prev = [0.1, -0.2, 0.3, -0.4, 0.05];
        let c_prev = [0.5, -0.1, 0.2, 0.0, -0.7];
        let (h, c) = lstm_step(&p, x, &h_prev, &c_prev).unwrap();

        let pre = |gate: Gate, k: usize| {
            let mut a = p.gate_bias()[gate as usize * hs + k] + p.gate_weight(gate, k, hs) * x;
            for j in 0..hs {
                a += p.gate_weight(gate, k, j) * h_prev[j];
            }
            a
        };
        let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
        for k in 0..hs {
            let f = sig(pre(Gate::Forget, k));
            let i = sig(pre(Gate::Input, k));
            let g = pre(Gate::Candidate, k).tanh();
            let o = sig(pre(Gate::Output, k));
            let ck = f * c_prev[k] + i * g;
            let hk = o * ck.tanh();
            assert!((c[k] - ck).abs() < 1e-14);
            assert!((h[k] - hk).abs() < 1e-14);
        }
    }

    #[test]
    fn step_shape_error() {
        let p = LstmParameters::zeros(3);
        assert!(matches!(
            lstm_step(&p, 0.0, &[0.0; 2], &[0.0; 3]),
            Err(ForecastError::Shape(_))
        ));
    }

    #[test]
    fn bptt_matches_finite_differences() {
        for seed in 0..5 {
            let p = random_params(6, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
            let w = Window {
                inputs: (0..8).map(|_| rng.gen_range(0.0..1.0)).collect(),
                target: rng.gen_range(0.0..1.0),
            };
            let err = gradient_check(&p, &w, 1e-5);
            assert!(err < 1e-4, "seed {seed}: {err}");
        }
    }

    #[test]
    fn sign_flip_is_detected() {
        let p = random_params(4, 9);
        let w = Window {
            inputs: vec![0.2, 0.5, 0.9],
            target: 0.3,
        };
        let (_, g) = loss_and_gradient(&p, &w);
        // pick a weight with a clearly non-zero gradient
        let flat = g.to_flat();
        let idx = (0..flat.len())
            .max_by(|a, b| flat[*a].abs().total_cmp(&flat[*b].abs()))
            .unwrap();
        let err = gradient_check_with(&p, &w, 1e-5, |p, w| {
            let (_, mut g) = loss_and_gradient(p, w);
            *g.flat_mut(idx) = -*g.flat_mut(idx);
            g
        });
        assert!((err - 2.0).abs() < 1e-4, "{err}");
    }

    #[test]
    fn zero_model_gradient_check_is_finite() {
        let p = LstmParameters::zeros(4);
        let w = Window {
            inputs: vec![0.1, 0.2],
            target: 0.5,
        };
        let err = gradient_check(&p, &w, 1e-5);
        assert!(err.is_finite());
    }

    #[test]
    fn flat_round_trip() {
        let p = random_params(3, 1);
        let flat = p.to_flat();
        assert_eq!(flat.len(), p.num_params());
        assert_eq!(LstmParameters::from_flat(3, &flat).unwrap(), p);
        assert!(LstmParameters::from_flat(3, &flat[1..]).is_err());
        let mut q = p.clone();
        *q.flat_mut(flat.len() - 1) = 9.0;
        assert_eq!(q.head_bias(), 9.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::{prop, prop_assert, proptest, ProptestConfig};

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn bptt_agrees_with_central_differences(
                seed in 0u64..10_000,
                hidden in 1usize..9,
                len in 1usize..13,
            ) {
                let p = random_params(hidden, seed);
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
                let w = Window {
                    inputs: (0..len).map(|_| rng.gen_range(0.0..1.0)).collect(),
                    target: rng.gen_range(0.0..1.0),
                };
                let err = gradient_check(&p, &w, 1e-5);
                prop_assert!(err < 1e-4, "hidden {} len {}: {}", hidden, len, err);
            }
        }

        proptest! {
            #[test]
            fn hidden_state_bounded(
                seed in 0u64..1000,
                x in -10.0f64..10.0,
                h0 in prop::collection::vec(-1.0f64..1.0, 4),
                c0 in prop::collection::vec(-5.0f64..5.0, 4),
            ) {
                let p = random_params(4, seed);
                let (h, _) = lstm_step(&p, x, &h0, &c0).unwrap();
                prop_assert!(h.iter().all(|v| *v > -1.0 && *v < 1.0));
            }

            // tanh and σ round to ±1 in f64 once saturated
            #[test]
            fn hidden_state_bounded_when_saturated(
                seed in 0u64..1000,
                x in -1e3f64..1e3,
                c0 in prop::collection::vec(-50.0f64..50.0, 4),
            ) {
                let p = random_params(4, seed);
                let (h, _) = lstm_step(&p, x, &[0.0; 4], &c0).unwrap();
                prop_assert!(h.iter().all(|v| v.abs() <= 1.0));
            }
        }
    }
}
