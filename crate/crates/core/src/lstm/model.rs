//! Single-layer LSTM regressor with a linear read-out of the final hidden
//! state.
//!
//! All weights live in one flat vector so that optimizers and persistence
//! can treat them uniformly. Layout, row-major throughout:
//!
//! | block            | shape      |
//! |------------------|------------|
//! | `W_f W_i W_o W_c` | 4 × (H×k) |
//! | `U_f U_i U_o U_c` | 4 × (H×H) |
//! | `b_f b_i b_o b_c` | 4 × H (only with biases) |
//! | `w_out`          | H          |
//!
//! Stacking the four gate blocks makes `W` a `4H × k` matrix and `U` a
//! `4H × H` matrix, which is how the kernels below walk them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Activation of the candidate cell value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Tanh,
    Sigmoid,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Sigmoid => sigmoid(z),
        }
    }

    /// Derivative expressed through the activation's output.
    #[inline]
    fn deriv_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Sigmoid => a * (1.0 - a),
        }
    }
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Forget,
    Input,
    Output,
    Candidate,
}

impl Gate {
    pub const ALL: [Gate; 4] = [Gate::Forget, Gate::Input, Gate::Output, Gate::Candidate];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Gate::Forget => "forget",
            Gate::Input => "input",
            Gate::Output => "output",
            Gate::Candidate => "candidate",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmModel {
    input_dim: usize,
    hidden_dim: usize,
    candidate: Activation,
    use_bias: bool,
    params: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl LstmState {
    pub fn zeros(hidden_dim: usize) -> Self {
        Self {
            h: vec![0.0; hidden_dim],
            c: vec![0.0; hidden_dim],
        }
    }
}

/// Every intermediate of one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepTrace {
    pub forget: Vec<f64>,
    pub input: Vec<f64>,
    pub output: Vec<f64>,
    pub candidate: Vec<f64>,
    pub state: LstmState,
    pub y: f64,
}

impl LstmModel {
    pub fn param_count(input_dim: usize, hidden_dim: usize, use_bias: bool) -> usize {
        let h = hidden_dim;
        4 * h * input_dim + 4 * h * h + if use_bias { 4 * h } else { 0 } + h
    }

    pub fn zeros(input_dim: usize, hidden_dim: usize, candidate: Activation, use_bias: bool) -> Self {
        Self {
            input_dim,
            hidden_dim,
            candidate,
            use_bias,
            params: vec![0.0; Self::param_count(input_dim, hidden_dim, use_bias)],
        }
    }

    pub fn from_params(
        input_dim: usize,
        hidden_dim: usize,
        candidate: Activation,
        use_bias: bool,
        params: Vec<f64>,
    ) -> Result<Self> {
        if input_dim == 0 || hidden_dim == 0 {
            return Err(Error::Config("LSTM dimensions must be positive".into()));
        }
        let want = Self::param_count(input_dim, hidden_dim, use_bias);
        if params.len() != want {
            return Err(Error::LengthMismatch {
                left: want,
                right: params.len(),
            });
        }
        if params.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("model weights".into()));
        }
        Ok(Self {
            input_dim,
            hidden_dim,
            candidate,
            use_bias,
            params,
        })
    }

    /// Weights drawn uniformly from `[-1/sqrt(H), 1/sqrt(H)]`; biases start
    /// at zero.
    pub fn init_uniform(
        input_dim: usize,
        hidden_dim: usize,
        candidate: Activation,
        use_bias: bool,
        seed: u64,
    ) -> Self {
        let mut m = Self::zeros(input_dim, hidden_dim, candidate, use_bias);
        let a = 1.0 / (hidden_dim as f64).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (bias_lo, bias_hi) = m.bias_span();
        for (i, p) in m.params.iter_mut().enumerate() {
            if i < bias_lo || i >= bias_hi {
                *p = rng.random_range(-a..=a);
            }
        }
        m
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    pub fn candidate(&self) -> Activation {
        self.candidate
    }

    pub fn use_bias(&self) -> bool {
        self.use_bias
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn off_u(&self) -> usize {
        4 * self.hidden_dim * self.input_dim
    }

    fn off_b(&self) -> usize {
        self.off_u() + 4 * self.hidden_dim * self.hidden_dim
    }

    fn off_out(&self) -> usize {
        self.off_b() + if self.use_bias { 4 * self.hidden_dim } else { 0 }
    }

    fn bias_span(&self) -> (usize, usize) {
        (self.off_b(), self.off_out())
    }

    /// `W_gate`, H×k row-major.
    pub fn w(&self, g: Gate) -> &[f64] {
        let n = self.hidden_dim * self.input_dim;
        &self.params[g.index() * n..(g.index() + 1) * n]
    }

    pub fn w_mut(&mut self, g: Gate) -> &mut [f64] {
        let n = self.hidden_dim * self.input_dim;
        &mut self.params[g.index() * n..(g.index() + 1) * n]
    }

    /// `U_gate`, H×H row-major.
    pub fn u(&self, g: Gate) -> &[f64] {
        let n = self.hidden_dim * self.hidden_dim;
        let o = self.off_u() + g.index() * n;
        &self.params[o..o + n]
    }

    pub fn u_mut(&mut self, g: Gate) -> &mut [f64] {
        let n = self.hidden_dim * self.hidden_dim;
        let o = self.off_u() + g.index() * n;
        &mut self.params[o..o + n]
    }

    pub fn b(&self, g: Gate) -> Option<&[f64]> {
        self.use_bias.then(|| {
            let o = self.off_b() + g.index() * self.hidden_dim;
            &self.params[o..o + self.hidden_dim]
        })
    }

    pub fn b_mut(&mut self, g: Gate) -> Option<&mut [f64]> {
        if !self.use_bias {
            return None;
        }
        let o = self.off_b() + g.index() * self.hidden_dim;
        Some(&mut self.params[o..o + self.hidden_dim])
    }

    pub fn w_out(&self) -> &[f64] {
        &self.params[self.off_out()..]
    }

    pub fn w_out_mut(&mut self) -> &mut [f64] {
        let o = self.off_out();
        &mut self.params[o..]
    }

    /// Gate pre-activations `z = W x + U h (+ b)`, stacked `[f; i; o; c]`.
    #[inline]
    fn preactivations(&self, x: &[f64], h: &[f64], z: &mut [f64]) {
        let k = self.input_dim;
        let hd = self.hidden_dim;
        let w = &self.params[..self.off_u()];
        let u = &self.params[self.off_u()..self.off_b()];
        for (r, zr) in z.iter_mut().enumerate() {
            let wr = &w[r * k..(r + 1) * k];
            let ur = &u[r * hd..(r + 1) * hd];
            let mut s = 0.0;
            for j in 0..k {
                s += wr[j] * x[j];
            }
            for j in 0..hd {
                s += ur[j] * h[j];
            }
            *zr = s;
        }
        if self.use_bias {
            let b = &self.params[self.off_b()..self.off_out()];
            for (zr, br) in z.iter_mut().zip(b) {
                *zr += br;
            }
        }
    }

    /// One step in place: activations into `gates`, new state into `c`, `h`.
    #[inline]
    fn step_into(&self, x: &[f64], h_prev: &[f64], c_prev: &[f64], gates: &mut [f64], c: &mut [f64], h: &mut [f64]) {
        let hd = self.hidden_dim;
        self.preactivations(x, h_prev, gates);
        for v in &mut gates[..3 * hd] {
            *v = sigmoid(*v);
        }
        for v in &mut gates[3 * hd..] {
            *v = self.candidate.apply(*v);
        }
        for r in 0..hd {
            let f = gates[r];
            let i = gates[hd + r];
            let o = gates[2 * hd + r];
            let ct = gates[3 * hd + r];
            c[r] = f * c_prev[r] + i * ct;
            h[r] = o * c[r].tanh();
        }
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(Error::LengthMismatch {
                left: self.input_dim,
                right: x.len(),
            });
        }
        Ok(())
    }

    /// One step with every intermediate exposed; non-finite values are
    /// reported with the name of the gate that produced them.
    pub fn step_trace(&self, x: &[f64], s: &LstmState) -> Result<StepTrace> {
        self.check_input(x)?;
        let hd = self.hidden_dim;
        if s.h.len() != hd || s.c.len() != hd {
            return Err(Error::LengthMismatch {
                left: hd,
                right: s.h.len().max(s.c.len()),
            });
        }
        let mut gates = vec![0.0; 4 * hd];
        let mut state = LstmState::zeros(hd);
        self.step_into(x, &s.h, &s.c, &mut gates, &mut state.c, &mut state.h);
        for g in Gate::ALL {
            let block = &gates[g.index() * hd..(g.index() + 1) * hd];
            if block.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("{} gate", g.name())));
            }
        }
        if state.c.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("cell state".into()));
        }
        if state.h.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("hidden state".into()));
        }
        let y = dot(self.w_out(), &state.h);
        if !y.is_finite() {
            return Err(Error::NonFinite("output".into()));
        }
        Ok(StepTrace {
            forget: gates[..hd].to_vec(),
            input: gates[hd..2 * hd].to_vec(),
            output: gates[2 * hd..3 * hd].to_vec(),
            candidate: gates[3 * hd..].to_vec(),
            state,
            y,
        })
    }

    pub fn forward_step(&self, x: &[f64], s: &LstmState) -> Result<(LstmState, f64)> {
        let t = self.step_trace(x, s)?;
        Ok((t.state, t.y))
    }

    /// Prediction from the final step of a window, starting from the zero
    /// state.
    pub fn forward_sequence(&self, window: &[Vec<f64>]) -> Result<f64> {
        if window.is_empty() {
            return Err(Error::Config("empty input window".into()));
        }
        let hd = self.hidden_dim;
        let mut h = vec![0.0; hd];
        let mut c = vec![0.0; hd];
        let mut h2 = vec![0.0; hd];
        let mut c2 = vec![0.0; hd];
        let mut gates = vec![0.0; 4 * hd];
        for x in window {
            self.check_input(x)?;
            self.step_into(x, &h, &c, &mut gates, &mut c2, &mut h2);
            std::mem::swap(&mut h, &mut h2);
            std::mem::swap(&mut c, &mut c2);
        }
        let y = dot(self.w_out(), &h);
        if !y.is_finite() {
            // rerun with tracing to name the offending gate
            let mut s = LstmState::zeros(hd);
            for x in window {
                s = self.forward_step(x, &s)?.0;
            }
            return Err(Error::NonFinite("output".into()));
        }
        Ok(y)
    }

    pub fn predict(&self, windows: &[Vec<Vec<f64>>]) -> Result<Vec<f64>> {
        windows.iter().map(|w| self.forward_sequence(w)).collect()
    }

    /// Mean squared error over the pairs in `batch`.
    pub fn loss(&self, inputs: &[Vec<Vec<f64>>], targets: &[f64], batch: &[usize]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::Config("empty batch".into()));
        }
        let mut s = 0.0;
        for &b in batch {
            let e = self.forward_sequence(&inputs[b])? - targets[b];
            s += e * e;
        }
        Ok(s / batch.len() as f64)
    }

    /// Mean squared error over `batch` and its gradient with respect to
    /// every parameter (backpropagation through time). `grad` is
    /// overwritten.
    pub fn loss_and_gradient(
        &self,
        inputs: &[Vec<Vec<f64>>],
        targets: &[f64],
        batch: &[usize],
        grad: &mut [f64],
        ws: &mut Workspace,
    ) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::Config("empty batch".into()));
        }
        if grad.len() != self.params.len() {
            return Err(Error::LengthMismatch {
                left: self.params.len(),
                right: grad.len(),
            });
        }
        grad.fill(0.0);
        let k = self.input_dim;
        let hd = self.hidden_dim;
        let g4 = 4 * hd;
        let off_u = self.off_u();
        let off_b = self.off_b();
        let off_out = self.off_out();
        let n = batch.len() as f64;
        let mut loss = 0.0;

        for &b in batch {
            let window = &inputs[b];
            let steps = window.len();
            if steps == 0 {
                return Err(Error::Config("empty input window".into()));
            }
            ws.reserve(steps, hd);
            // forward, caching gates and states; state t+1 follows step t
            for (t, x) in window.iter().enumerate() {
                self.check_input(x)?;
                let (prev, next) = ws.h.split_at_mut((t + 1) * hd);
                let (cprev, cnext) = ws.c.split_at_mut((t + 1) * hd);
                self.step_into(
                    x,
                    &prev[t * hd..],
                    &cprev[t * hd..],
                    &mut ws.gates[t * g4..(t + 1) * g4],
                    &mut cnext[..hd],
                    &mut next[..hd],
                );
            }
            let h_last = &ws.h[steps * hd..(steps + 1) * hd];
            let y = dot(self.w_out(), h_last);
            let err = y - targets[b];
            loss += err * err;
            let dy = 2.0 * err / n;

            for r in 0..hd {
                grad[off_out + r] += dy * h_last[r];
                ws.dh[r] = dy * self.params[off_out + r];
                ws.dc[r] = 0.0;
            }
            for t in (0..steps).rev() {
                let gates = &ws.gates[t * g4..(t + 1) * g4];
                let c_prev = &ws.c[t * hd..(t + 1) * hd];
                let c_t = &ws.c[(t + 1) * hd..(t + 2) * hd];
                for r in 0..hd {
                    let f = gates[r];
                    let i = gates[hd + r];
                    let o = gates[2 * hd + r];
                    let ct = gates[3 * hd + r];
                    let tc = c_t[r].tanh();
                    let dh = ws.dh[r];
                    let dc = ws.dc[r] + dh * o * (1.0 - tc * tc);
                    ws.dz[r] = dc * c_prev[r] * f * (1.0 - f);
                    ws.dz[hd + r] = dc * ct * i * (1.0 - i);
                    ws.dz[2 * hd + r] = dh * tc * o * (1.0 - o);
                    ws.dz[3 * hd + r] = dc * i * self.candidate.deriv_from_output(ct);
                    ws.dc[r] = dc * f;
                }
                let x = &window[t];
                let h_prev = &ws.h[t * hd..(t + 1) * hd];
                let (gw, rest) = grad.split_at_mut(off_u);
                let (gu, rest) = rest.split_at_mut(off_b - off_u);
                for (row, &d) in ws.dz.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    let gwr = &mut gw[row * k..(row + 1) * k];
                    for j in 0..k {
                        gwr[j] += d * x[j];
                    }
                    let gur = &mut gu[row * hd..(row + 1) * hd];
                    for j in 0..hd {
                        gur[j] += d * h_prev[j];
                    }
                }
                if self.use_bias {
                    for (gb, &d) in rest[..g4].iter_mut().zip(&ws.dz) {
                        *gb += d;
                    }
                }
                if t > 0 {
                    ws.dh.fill(0.0);
                    let u = &self.params[off_u..off_b];
                    for (row, &d) in ws.dz.iter().enumerate() {
                        if d == 0.0 {
                            continue;
                        }
                        let ur = &u[row * hd..(row + 1) * hd];
                        for j in 0..hd {
                            ws.dh[j] += d * ur[j];
                        }
                    }
                }
            }
        }
        let loss = loss / n;
        if !loss.is_finite() {
            return Err(Error::NonFinite("training loss".into()));
        }
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("gradient".into()));
        }
        Ok(loss)
    }
}

/// Scratch buffers reused across gradient evaluations.
#[derive(Debug, Default, Clone)]
pub struct Workspace {
    h: Vec<f64>,
    c: Vec<f64>,
    gates: Vec<f64>,
    dh: Vec<f64>,
    dc: Vec<f64>,
    dz: Vec<f64>,
}

impl Workspace {
    fn reserve(&mut self, steps: usize, hd: usize) {
        let states = (steps + 1) * hd;
        if self.h.len() < states {
            self.h.resize(states, 0.0);
            self.c.resize(states, 0.0);
        }
        if self.gates.len() < steps * 4 * hd {
            self.gates.resize(steps * 4 * hd, 0.0);
        }
        self.dh.resize(hd, 0.0);
        self.dc.resize(hd, 0.0);
        self.dz.resize(4 * hd, 0.0);
        self.h[..hd].fill(0.0);
        self.c[..hd].fill(0.0);
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_model(k: usize, h: usize, bias: bool, act: Activation, seed: u64) -> LstmModel {
        let mut m = LstmModel::zeros(k, h, act, bias);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for p in m.params_mut() {
            *p = rng.random_range(-0.8..0.8);
        }
        m
    }

    fn random_windows(n: usize, l: usize, k: usize, seed: u64) -> (Vec<Vec<Vec<f64>>>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = (0..n)
            .map(|_| (0..l).map(|_| (0..k).map(|_| rng.random_range(-1.5..1.5)).collect()).collect())
            .collect();
        let t = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        (w, t)
    }

    #[test]
    fn zero_model_step() {
        let m = LstmModel::zeros(3, 4, Activation::Tanh, false);
        let t = m.step_trace(&[1.0, -2.0, 3.0], &LstmState::zeros(4)).unwrap();
        assert!(t.forget.iter().chain(&t.input).chain(&t.output).all(|&v| v == 0.5));
        assert!(t.candidate.iter().all(|&v| v == 0.0));
        assert_eq!(t.state, LstmState::zeros(4));
        assert_eq!(t.y, 0.0);
    }

    #[test]
    fn scalar_model_hand_values() {
        let m = LstmModel::from_params(1, 1, Activation::Tanh, false, vec![0.5; 9]).unwrap();
        let (s, y) = m.forward_step(&[1.0], &LstmState::zeros(1)).unwrap();
        // independent evaluation of the cell equations
        let sg = 1.0 / (1.0 + (-0.5f64).exp());
        let c = sg * 0.5f64.tanh();
        let h = sg * c.tanh();
        assert!((s.c[0] - c).abs() < 1e-15);
        assert!((s.h[0] - h).abs() < 1e-15);
        assert!((y - 0.5 * h).abs() < 1e-15);
        assert!((s.c[0] - 0.287_649_14).abs() < 1e-8);
        assert!((s.h[0] - 0.174_269_72).abs() < 1e-8);
        assert!((y - 0.087_134_86).abs() < 1e-8);
    }

    #[test]
    fn sequence_of_one_is_a_step() {
        let m = random_model(3, 5, true, Activation::Tanh, 1);
        let x = vec![0.3, -0.2, 0.9];
        let (_, y) = m.forward_step(&x, &LstmState::zeros(5)).unwrap();
        assert_eq!(m.forward_sequence(&[x]).unwrap(), y);
    }

    #[test]
    fn order_matters() {
        let m = random_model(2, 4, false, Activation::Tanh, 2);
        let w = vec![vec![1.0, 0.0], vec![0.0, -1.0], vec![0.5, 0.5]];
        let mut r = w.clone();
        r.reverse();
        assert_ne!(m.forward_sequence(&w).unwrap(), m.forward_sequence(&r).unwrap());
    }

    #[test]
    fn overflow_names_a_gate() {
        let mut m = LstmModel::zeros(1, 1, Activation::Tanh, false);
        m.w_mut(Gate::Input)[0] = f64::NAN;
        let err = m.forward_step(&[1.0], &LstmState::zeros(1)).unwrap_err();
        assert!(err.to_string().contains("input gate"), "{err}");
    }

    fn gradient_check(k: usize, h: usize, l: usize, bias: bool, act: Activation, seed: u64) -> f64 {
        let m = random_model(k, h, bias, act, seed);
        let (w, t) = random_windows(5, l, k, seed + 1000);
        let batch: Vec<usize> = (0..5).collect();
        let mut grad = vec![0.0; m.params().len()];
        let mut ws = Workspace::default();
        m.loss_and_gradient(&w, &t, &batch, &mut grad, &mut ws).unwrap();
        let eps = 1e-5;
        let mut worst: f64 = 0.0;
        for p in 0..grad.len() {
            let mut plus = m.clone();
            plus.params_mut()[p] += eps;
            let mut minus = m.clone();
            minus.params_mut()[p] -= eps;
            let fd = (plus.loss(&w, &t, &batch).unwrap() - minus.loss(&w, &t, &batch).unwrap()) / (2.0 * eps);
            let rel = (fd - grad[p]).abs() / fd.abs().max(grad[p].abs()).max(1e-6);
            worst = worst.max(rel);
        }
        worst
    }

    #[test]
    fn gradients_match_finite_differences() {
        for seed in 0..5 {
            assert!(gradient_check(3, 4, 3, false, Activation::Tanh, seed) < 1e-4);
        }
        assert!(gradient_check(2, 3, 4, true, Activation::Tanh, 11) < 1e-4);
        assert!(gradient_check(2, 3, 2, true, Activation::Sigmoid, 12) < 1e-4);
    }

    #[test]
    fn duplicated_batch_same_loss_and_gradient() {
        let m = random_model(3, 4, false, Activation::Tanh, 5);
        let (w, t) = random_windows(4, 3, 3, 6);
        let mut ws = Workspace::default();
        let mut g1 = vec![0.0; m.params().len()];
        let mut g2 = g1.clone();
        let l1 = m.loss_and_gradient(&w, &t, &[0, 1, 2, 3], &mut g1, &mut ws).unwrap();
        let l2 = m
            .loss_and_gradient(&w, &t, &[0, 1, 2, 3, 0, 1, 2, 3], &mut g2, &mut ws)
            .unwrap();
        assert!((l1 - l2).abs() < 1e-14);
        for (a, b) in g1.iter().zip(&g2) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn perfect_fit_has_zero_gradient() {
        let m = random_model(2, 3, false, Activation::Tanh, 8);
        let w = vec![vec![vec![0.4, -0.1], vec![0.2, 0.7]]];
        let t = vec![m.forward_sequence(&w[0]).unwrap()];
        let mut g = vec![0.0; m.params().len()];
        let loss = m
            .loss_and_gradient(&w, &t, &[0], &mut g, &mut Workspace::default())
            .unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.iter().all(|&v| v == 0.0));
    }

    proptest! {
        #[test]
        fn gate_ranges(seed in 0u64..1000, x in prop::collection::vec(-5.0f64..5.0, 3)) {
            for act in [Activation::Tanh, Activation::Sigmoid] {
                let m = random_model(3, 4, true, act, seed);
                let mut s = LstmState::zeros(4);
                for _ in 0..3 {
                    let t = m.step_trace(&x, &s).unwrap();
                    for v in t.forget.iter().chain(&t.input).chain(&t.output) {
                        prop_assert!(*v > 0.0 && *v < 1.0);
                    }
                    for (r, v) in t.state.h.iter().enumerate() {
                        prop_assert!(v.abs() < 1.0);
                        let want = t.forget[r] * s.c[r] + t.input[r] * t.candidate[r];
                        prop_assert_eq!(t.state.c[r], want);
                    }
                    s = t.state;
                }
            }
        }
    }
}
