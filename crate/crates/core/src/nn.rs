//! Feed-forward network substrate: batched MLP forward/backward, a diagonal
//! Gaussian policy head, and Adam. Everything is f64; gradients are exact
//! reverse-mode and checked against finite differences in the tests.

use rand::rngs::StdRng;
use rand::RngExt;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |v| v.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c);
            data.extend(row);
        }
        Self { rows: r, cols: c, data }
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }
}

/// Batch size above which matrix products fan out across threads. Work is
/// split by output row, so results are bit-identical to the serial path.
const PAR_THRESHOLD: usize = 64;

/// `out[b] = x[b] · Wᵀ + bias` for every batch row.
fn affine_batch(x: &Mat, w: &Mat, bias: &[f64], out: &mut Mat) {
    debug_assert_eq!(x.cols, w.cols);
    debug_assert_eq!(w.rows, bias.len());
    let n = w.rows;
    let run_row = |xr: &[f64], or: &mut [f64]| {
        for j in 0..n {
            let wr = w.row(j);
            let mut acc = bias[j];
            for k in 0..xr.len() {
                acc += xr[k] * wr[k];
            }
            or[j] = acc;
        }
    };
    if x.rows >= PAR_THRESHOLD {
        out.data
            .par_chunks_mut(n)
            .zip(x.data.par_chunks(x.cols))
            .for_each(|(or, xr)| run_row(xr, or));
    } else {
        for b in 0..x.rows {
            let xr = &x.data[b * x.cols..(b + 1) * x.cols];
            let or = &mut out.data[b * n..(b + 1) * n];
            run_row(xr, or);
        }
    }
}

#[inline]
fn elu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        x.exp() - 1.0
    }
}

/// ELU derivative recovered from the activation value.
#[inline]
fn elu_grad_from_act(a: f64) -> f64 {
    if a > 0.0 {
        1.0
    } else {
        a + 1.0
    }
}

/// Multi-layer perceptron: ELU hidden layers, linear output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    /// Layer widths: input, hidden…, output.
    pub sizes: Vec<usize>,
    /// `weights[l]` maps `sizes[l] -> sizes[l+1]`, row-major out×in.
    pub weights: Vec<Mat>,
    pub biases: Vec<Vec<f64>>,
}

/// Activations kept from a forward pass: `layers[0]` is the input batch,
/// `layers[l]` the post-activation output of layer l, the last entry the
/// linear network output.
pub struct ForwardCache {
    pub layers: Vec<Mat>,
}

impl ForwardCache {
    pub fn output(&self) -> &Mat {
        self.layers.last().expect("cache holds at least the input")
    }
}

/// Parameter gradients matching an [`Mlp`]'s layout.
#[derive(Debug, Clone)]
pub struct MlpGrads {
    pub dw: Vec<Mat>,
    pub db: Vec<Vec<f64>>,
}

impl MlpGrads {
    pub fn zeros_like(mlp: &Mlp) -> Self {
        Self {
            dw: mlp.weights.iter().map(|w| Mat::zeros(w.rows, w.cols)).collect(),
            db: mlp.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    /// Global L2 norm over all parameter gradients.
    pub fn l2_norm(&self) -> f64 {
        let mut acc = 0.0;
        for m in &self.dw {
            acc += m.data.iter().map(|v| v * v).sum::<f64>();
        }
        for b in &self.db {
            acc += b.iter().map(|v| v * v).sum::<f64>();
        }
        acc.sqrt()
    }

    pub fn scale(&mut self, s: f64) {
        for m in &mut self.dw {
            for v in &mut m.data {
                *v *= s;
            }
        }
        for b in &mut self.db {
            for v in b.iter_mut() {
                *v *= s;
            }
        }
    }
}

impl Mlp {
    /// Scaled-uniform (Glorot-style) initialization; the output layer is
    /// multiplied by `output_gain` so a policy can start near zero.
    pub fn new(input: usize, hidden: &[usize], output: usize, output_gain: f64, rng: &mut StdRng) -> Self {
        let mut sizes = vec![input];
        sizes.extend_from_slice(hidden);
        sizes.push(output);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in 0..sizes.len() - 1 {
            let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
            let gain = if l == sizes.len() - 2 { output_gain } else { 1.0 };
            let bound = gain * (6.0 / (fan_in + fan_out) as f64).sqrt();
            let mut w = Mat::zeros(fan_out, fan_in);
            for v in &mut w.data {
                *v = rng.random_range(-bound..=bound);
            }
            weights.push(w);
            biases.push(vec![0.0; fan_out]);
        }
        Self { sizes, weights, biases }
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn param_count(&self) -> usize {
        self.weights.iter().map(|w| w.data.len()).sum::<usize>()
            + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    /// Forward pass for a batch, keeping activations for backward.
    pub fn forward_batch(&self, x: &Mat) -> ForwardCache {
        assert_eq!(x.cols, self.input_dim(), "input dimension mismatch");
        let n_layers = self.weights.len();
        let mut layers = Vec::with_capacity(n_layers + 1);
        layers.push(x.clone());
        for l in 0..n_layers {
            let mut out = Mat::zeros(x.rows, self.sizes[l + 1]);
            affine_batch(&layers[l], &self.weights[l], &self.biases[l], &mut out);
            if l + 1 < n_layers {
                for v in &mut out.data {
                    *v = elu(*v);
                }
            }
            layers.push(out);
        }
        ForwardCache { layers }
    }

    /// Single-sample forward without keeping the cache.
    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let m = Mat::from_rows(vec![x.to_vec()]);
        self.forward_batch(&m).output().row(0).to_vec()
    }

    /// Exact reverse-mode gradients for the batch in `cache`.
    ///
    /// `dout` is dL/d(output), one row per batch sample. Returns parameter
    /// gradients summed over the batch and dL/d(input).
    pub fn backward_batch(&self, cache: &ForwardCache, dout: &Mat) -> (MlpGrads, Mat) {
        let n_layers = self.weights.len();
        assert_eq!(cache.layers.len(), n_layers + 1, "stale forward cache");
        assert_eq!(dout.rows, cache.layers[0].rows);
        assert_eq!(dout.cols, self.output_dim());
        let mut grads = MlpGrads::zeros_like(self);
        let mut delta = dout.clone();
        for l in (0..n_layers).rev() {
            let a_in = &cache.layers[l];
            let (rows, cols) = (self.weights[l].rows, self.weights[l].cols);
            // dW = deltaᵀ · a_in, db = column sums of delta.
            let dw = &mut grads.dw[l];
            if rows >= PAR_THRESHOLD {
                dw.data
                    .par_chunks_mut(cols)
                    .enumerate()
                    .for_each(|(j, dwr)| {
                        for b in 0..delta.rows {
                            let d = delta.data[b * delta.cols + j];
                            if d != 0.0 {
                                let ar = a_in.row(b);
                                for k in 0..cols {
                                    dwr[k] += d * ar[k];
                                }
                            }
                        }
                    });
            } else {
                for b in 0..delta.rows {
                    let dr = delta.row(b);
                    let ar = a_in.row(b);
                    for j in 0..rows {
                        let d = dr[j];
                        if d != 0.0 {
                            let dwr = dw.row_mut(j);
                            for k in 0..cols {
                                dwr[k] += d * ar[k];
                            }
                        }
                    }
                }
            }
            let db = &mut grads.db[l];
            for b in 0..delta.rows {
                let dr = delta.row(b);
                for j in 0..rows {
                    db[j] += dr[j];
                }
            }
            // delta_in = delta · W, times the activation derivative of the
            // previous layer (except at the input).
            let mut next = Mat::zeros(delta.rows, cols);
            let w = &self.weights[l];
            let run_row = |dr: &[f64], nr: &mut [f64]| {
                for j in 0..rows {
                    let d = dr[j];
                    if d != 0.0 {
                        let wr = w.row(j);
                        for k in 0..cols {
                            nr[k] += d * wr[k];
                        }
                    }
                }
            };
            if delta.rows >= PAR_THRESHOLD {
                next.data
                    .par_chunks_mut(cols)
                    .zip(delta.data.par_chunks(delta.cols))
                    .for_each(|(nr, dr)| run_row(dr, nr));
            } else {
                for b in 0..delta.rows {
                    let dr = delta.row(b);
                    let nr = &mut next.data[b * cols..(b + 1) * cols];
                    run_row(dr, nr);
                }
            }
            if l > 0 {
                for (v, a) in next.data.iter_mut().zip(&cache.layers[l].data) {
                    *v *= elu_grad_from_act(*a);
                }
            }
            delta = next;
        }
        (grads, delta)
    }
}

// ---------------------------------------------------------------------------
// Gaussian policy head
// ---------------------------------------------------------------------------

const LN_2PI: f64 = 1.8378770664093453;

/// Diagonal Gaussian policy: mean from an MLP, state-independent learned
/// log-std.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianPolicy {
    pub mlp: Mlp,
    pub log_std: Vec<f64>,
}

impl GaussianPolicy {
    pub fn new(mlp: Mlp, init_std: f64) -> Self {
        let dim = mlp.output_dim();
        Self {
            mlp,
            log_std: vec![init_std.ln(); dim],
        }
    }

    pub fn action_dim(&self) -> usize {
        self.log_std.len()
    }

    /// Draw an action from N(mean, diag(std²)).
    pub fn sample(&self, mean: &[f64], rng: &mut StdRng) -> Vec<f64> {
        mean.iter()
            .zip(&self.log_std)
            .map(|(&m, &ls)| {
                let z: f64 = rng.sample(StandardNormal);
                m + ls.exp() * z
            })
            .collect()
    }

    /// Log-density of `action` under N(mean, diag(std²)).
    pub fn log_prob(&self, mean: &[f64], action: &[f64]) -> f64 {
        assert_eq!(mean.len(), action.len());
        assert_eq!(mean.len(), self.log_std.len());
        let mut lp = 0.0;
        for i in 0..mean.len() {
            let ls = self.log_std[i];
            let z = (action[i] - mean[i]) / ls.exp();
            lp += -0.5 * z * z - ls - 0.5 * LN_2PI;
        }
        lp
    }

    /// Gradients of the log-density w.r.t. the mean and the log-std vector.
    pub fn log_prob_grads(&self, mean: &[f64], action: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut d_mean = vec![0.0; mean.len()];
        let mut d_log_std = vec![0.0; mean.len()];
        for i in 0..mean.len() {
            let inv_var = (-2.0 * self.log_std[i]).exp();
            let diff = action[i] - mean[i];
            d_mean[i] = diff * inv_var;
            d_log_std[i] = diff * diff * inv_var - 1.0;
        }
        (d_mean, d_log_std)
    }

    /// Entropy of the diagonal Gaussian (mean-independent).
    pub fn entropy(&self) -> f64 {
        self.log_std
            .iter()
            .map(|ls| ls + 0.5 * (1.0 + LN_2PI))
            .sum()
    }
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

/// Adam with bias correction over named parameter groups.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    moments: Vec<(Vec<f64>, Vec<f64>)>,
}

impl Adam {
    pub fn new(group_lens: &[usize], lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            moments: group_lens
                .iter()
                .map(|&n| (vec![0.0; n], vec![0.0; n]))
                .collect(),
        }
    }

    /// Group layout for an MLP: w0, b0, w1, b1, …
    pub fn for_mlp(mlp: &Mlp, lr: f64) -> Self {
        let mut lens = Vec::new();
        for l in 0..mlp.weights.len() {
            lens.push(mlp.weights[l].data.len());
            lens.push(mlp.biases[l].len());
        }
        Self::new(&lens, lr)
    }

    /// MLP groups followed by one extra group (e.g. a policy's log-std).
    pub fn for_mlp_plus(mlp: &Mlp, extra: usize, lr: f64) -> Self {
        let mut lens = Vec::new();
        for l in 0..mlp.weights.len() {
            lens.push(mlp.weights[l].data.len());
            lens.push(mlp.biases[l].len());
        }
        lens.push(extra);
        Self::new(&lens, lr)
    }

    /// Advance the shared step counter; call once per optimizer step before
    /// updating groups.
    pub fn next_step(&mut self) {
        self.step += 1;
    }

    /// Bias-corrected update of one parameter group.
    pub fn update_group(&mut self, group: usize, params: &mut [f64], grads: &[f64]) {
        assert_eq!(params.len(), grads.len(), "parameter/gradient shape mismatch");
        let (m, v) = &mut self.moments[group];
        assert_eq!(params.len(), m.len(), "group {group} shape mismatch");
        let t = self.step as i32;
        let corr1 = 1.0 - self.beta1.powi(t);
        let corr2 = 1.0 - self.beta2.powi(t);
        for i in 0..params.len() {
            m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * grads[i];
            v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * grads[i] * grads[i];
            let m_hat = m[i] / corr1;
            let v_hat = v[i] / corr2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }

    /// Convenience: one full Adam step over an MLP's parameters.
    pub fn update_mlp(&mut self, mlp: &mut Mlp, grads: &MlpGrads) {
        self.next_step();
        self.update_mlp_grouped(mlp, grads, 0);
    }

    /// Update an MLP whose groups start at `base` (after `next_step`).
    pub fn update_mlp_grouped(&mut self, mlp: &mut Mlp, grads: &MlpGrads, base: usize) {
        for l in 0..mlp.weights.len() {
            let g = base + 2 * l;
            // Split borrows: moments are indexed per group.
            let w = &mut mlp.weights[l];
            self.update_group(g, &mut w.data, &grads.dw[l].data);
            self.update_group(g + 1, &mut mlp.biases[l], &grads.db[l]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng(seed: u64) -> StdRng {
        StdRng::seed_from_u64(seed)
    }

    #[test]
    fn zero_weights_output_bias() {
        let mut net = Mlp::new(3, &[4, 4], 2, 1.0, &mut rng(0));
        for w in &mut net.weights {
            w.data.iter_mut().for_each(|v| *v = 0.0);
        }
        net.biases[2] = vec![0.7, -0.3];
        let out = net.forward(&[1.0, -2.0, 3.0]);
        // Hidden activations are elu(0) = 0, so the output is its bias.
        assert_eq!(out, vec![0.7, -0.3]);
    }

    #[test]
    fn hand_computed_affine_map() {
        let mut net = Mlp::new(2, &[], 2, 1.0, &mut rng(0));
        net.weights[0] = Mat::from_rows(vec![vec![1.0, 2.0], vec![-0.5, 0.25]]);
        net.biases[0] = vec![0.1, -0.1];
        let out = net.forward(&[3.0, -1.0]);
        assert!((out[0] - (3.0 - 2.0 + 0.1)).abs() < 1e-15);
        assert!((out[1] - (-1.5 - 0.25 - 0.1)).abs() < 1e-15);
    }

    #[test]
    fn forward_deterministic() {
        let net = Mlp::new(5, &[16, 16], 3, 1.0, &mut rng(42));
        let x = vec![0.3, -0.2, 0.9, 0.0, -1.5];
        assert_eq!(net.forward(&x), net.forward(&x));
    }

    #[test]
    fn parallel_batch_matches_serial() {
        let net = Mlp::new(7, &[32, 32], 4, 1.0, &mut rng(3));
        let mut r = rng(9);
        let big: Vec<Vec<f64>> = (0..PAR_THRESHOLD + 13)
            .map(|_| (0..7).map(|_| r.random_range(-1.0..1.0)).collect())
            .collect();
        let batch = Mat::from_rows(big.clone());
        let cache = net.forward_batch(&batch);
        for (i, row) in big.iter().enumerate() {
            let single = net.forward(row);
            for (a, b) in cache.output().row(i).iter().zip(&single) {
                assert_eq!(a, b, "row {i} differs between batch and single");
            }
        }
    }

    /// Central finite differences over every parameter of a small net.
    #[test]
    fn gradients_match_finite_differences() {
        let mut r = rng(7);
        let net = Mlp::new(4, &[8, 8, 8], 3, 1.0, &mut r);
        let x: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..4).map(|_| r.random_range(-1.0..1.0)).collect())
            .collect();
        let batch = Mat::from_rows(x);
        // Scalar loss: weighted sum of outputs, fixed weights.
        let wsum: Vec<f64> = (0..3).map(|i| 0.5 + 0.25 * i as f64).collect();
        let loss = |net: &Mlp| -> f64 {
            let out = net.forward_batch(&batch);
            let o = out.output();
            let mut acc = 0.0;
            for b in 0..o.rows {
                for j in 0..o.cols {
                    acc += wsum[j] * o.row(b)[j].tanh();
                }
            }
            acc
        };
        let cache = net.forward_batch(&batch);
        let mut dout = Mat::zeros(5, 3);
        for b in 0..5 {
            for j in 0..3 {
                let o = cache.output().row(b)[j];
                dout.row_mut(b)[j] = wsum[j] * (1.0 - o.tanh().powi(2));
            }
        }
        let (grads, _) = net.backward_batch(&cache, &dout);

        let eps = 1e-6;
        let mut max_rel: f64 = 0.0;
        let mut probe = net.clone();
        for l in 0..net.weights.len() {
            for i in 0..net.weights[l].data.len() {
                let orig = probe.weights[l].data[i];
                probe.weights[l].data[i] = orig + eps;
                let up = loss(&probe);
                probe.weights[l].data[i] = orig - eps;
                let down = loss(&probe);
                probe.weights[l].data[i] = orig;
                let fd = (up - down) / (2.0 * eps);
                let an = grads.dw[l].data[i];
                let rel = (an - fd).abs() / fd.abs().max(1e-4);
                max_rel = max_rel.max(rel);
            }
            for i in 0..net.biases[l].len() {
                let orig = probe.biases[l][i];
                probe.biases[l][i] = orig + eps;
                let up = loss(&probe);
                probe.biases[l][i] = orig - eps;
                let down = loss(&probe);
                probe.biases[l][i] = orig;
                let fd = (up - down) / (2.0 * eps);
                let an = grads.db[l][i];
                let rel = (an - fd).abs() / fd.abs().max(1e-4);
                max_rel = max_rel.max(rel);
            }
        }
        assert!(max_rel < 1e-4, "max relative gradient error {max_rel}");
    }

    #[test]
    fn zero_output_gradient_gives_zero_parameter_gradients() {
        let net = Mlp::new(3, &[8], 2, 1.0, &mut rng(1));
        let batch = Mat::from_rows(vec![vec![0.5, -0.5, 1.0]]);
        let cache = net.forward_batch(&batch);
        let dout = Mat::zeros(1, 2);
        let (grads, dx) = net.backward_batch(&cache, &dout);
        assert!(grads.dw.iter().all(|m| m.data.iter().all(|&v| v == 0.0)));
        assert!(grads.db.iter().all(|b| b.iter().all(|&v| v == 0.0)));
        assert!(dx.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sum_of_outputs_bias_gradient_is_one() {
        let net = Mlp::new(3, &[8], 2, 1.0, &mut rng(1));
        let batch = Mat::from_rows(vec![vec![0.5, -0.5, 1.0]]);
        let cache = net.forward_batch(&batch);
        let mut dout = Mat::zeros(1, 2);
        dout.data.fill(1.0);
        let (grads, _) = net.backward_batch(&cache, &dout);
        for &g in grads.db.last().unwrap() {
            assert_eq!(g, 1.0);
        }
    }

    #[test]
    fn gaussian_log_prob_closed_form() {
        let mlp = Mlp::new(2, &[4], 2, 1.0, &mut rng(0));
        let mut policy = GaussianPolicy::new(mlp, 1.0);
        policy.log_std = vec![0.0, 0.0];
        let mean = vec![0.3, -0.7];
        // action == mean, unit std, dim 2: log p = -log(2π).
        let lp = policy.log_prob(&mean, &mean);
        assert!((lp + LN_2PI).abs() < 1e-12, "{lp}");
    }

    #[test]
    fn gaussian_log_prob_grads_match_finite_differences() {
        let mlp = Mlp::new(2, &[4], 3, 1.0, &mut rng(0));
        let mut policy = GaussianPolicy::new(mlp, 0.4);
        policy.log_std = vec![-0.3, 0.2, -1.0];
        let mean = vec![0.1, -0.5, 0.8];
        let action = vec![0.4, -0.2, 0.5];
        let (d_mean, d_ls) = policy.log_prob_grads(&mean, &action);
        let eps = 1e-7;
        for i in 0..3 {
            let mut m2 = mean.clone();
            m2[i] += eps;
            let up = policy.log_prob(&m2, &action);
            m2[i] -= 2.0 * eps;
            let down = policy.log_prob(&m2, &action);
            let fd = (up - down) / (2.0 * eps);
            assert!(
                (d_mean[i] - fd).abs() / fd.abs().max(1e-6) < 1e-6,
                "mean grad {i}: {} vs {}",
                d_mean[i],
                fd
            );
            let mut p2 = policy.clone();
            p2.log_std[i] += eps;
            let up = p2.log_prob(&mean, &action);
            p2.log_std[i] -= 2.0 * eps;
            let down = p2.log_prob(&mean, &action);
            let fd = (up - down) / (2.0 * eps);
            assert!(
                (d_ls[i] - fd).abs() / fd.abs().max(1e-6) < 1e-6,
                "log-std grad {i}: {} vs {}",
                d_ls[i],
                fd
            );
        }
    }

    #[test]
    fn small_std_sample_near_mean() {
        let mlp = Mlp::new(2, &[4], 2, 1.0, &mut rng(0));
        let mut policy = GaussianPolicy::new(mlp, 1e-9);
        policy.log_std = vec![(1e-9f64).ln(); 2];
        let mean = vec![0.25, -0.75];
        let s = policy.sample(&mean, &mut rng(5));
        assert!((s[0] - 0.25).abs() < 1e-7 && (s[1] + 0.75).abs() < 1e-7);
    }

    #[test]
    fn adam_zero_gradient_keeps_parameters() {
        let mut adam = Adam::new(&[3], 1e-3);
        let mut params = vec![0.5, -0.5, 1.0];
        adam.next_step();
        adam.update_group(0, &mut params, &[0.0, 0.0, 0.0]);
        assert_eq!(params, vec![0.5, -0.5, 1.0]);
    }

    #[test]
    fn adam_first_step_matches_hand_formula() {
        let mut adam = Adam::new(&[1], 1e-3);
        let mut params = vec![0.0];
        adam.next_step();
        adam.update_group(0, &mut params, &[1.0]);
        // Bias-corrected first step: -lr * 1 / (1 + eps).
        let expected = -1e-3 / (1.0 + 1e-8);
        assert!((params[0] - expected).abs() < 1e-12, "{}", params[0]);
    }

    #[test]
    fn adam_constant_gradient_monotone_bounded_steps() {
        let mut adam = Adam::new(&[1], 1e-3);
        let mut params = vec![0.0];
        let mut last = 0.0;
        for _ in 0..500 {
            adam.next_step();
            adam.update_group(0, &mut params, &[2.5]);
            let step = params[0] - last;
            assert!(step < 0.0, "drift is monotone decreasing");
            assert!(step.abs() <= 1e-3 / (1.0 - 0.9) + 1e-9, "step bounded");
            last = params[0];
        }
    }

    #[test]
    fn serialization_round_trip_bit_exact() {
        let mlp = Mlp::new(6, &[32, 32], 4, 0.01, &mut rng(11));
        let policy = GaussianPolicy::new(mlp, 0.25);
        let json = serde_json::to_string(&policy).unwrap();
        let back: GaussianPolicy = serde_json::from_str(&json).unwrap();
        assert_eq!(back, policy);
    }
}
