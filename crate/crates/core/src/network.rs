//! Feed-forward generator network with hand-written reverse mode and Adam.

use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::Matrix;

pub const LEAKY_RELU_SLOPE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Linear,
    Relu,
    /// Leaky ReLU with slope [`LEAKY_RELU_SLOPE`] on the negative side.
    LeakyRelu,
    /// `u · sigmoid(u)`.
    Swish,
}

impl Activation {
    pub fn apply(self, u: f64) -> f64 {
        match self {
            Activation::Linear => u,
            Activation::Relu => u.max(0.0),
            Activation::LeakyRelu => {
                if u > 0.0 {
                    u
                } else {
                    LEAKY_RELU_SLOPE * u
                }
            }
            Activation::Swish => u * sigmoid(u),
        }
    }

    pub fn derivative(self, u: f64) -> f64 {
        match self {
            Activation::Linear => 1.0,
            Activation::Relu => {
                if u > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::LeakyRelu => {
                if u > 0.0 {
                    1.0
                } else {
                    LEAKY_RELU_SLOPE
                }
            }
            Activation::Swish => {
                let s = sigmoid(u);
                s + u * s * (1.0 - s)
            }
        }
    }
}

fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// Layer widths of the generator: `input → hidden… → output`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkShape {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub output_dim: usize,
}

impl NetworkShape {
    /// Input layer, three hidden layers of `width` and the output layer.
    pub fn five_layer(input_dim: usize, width: usize, output_dim: usize) -> Self {
        Self { input_dim, hidden: vec![width; 3], output_dim }
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut d = Vec::with_capacity(self.hidden.len() + 2);
        d.push(self.input_dim);
        d.extend_from_slice(&self.hidden);
        d.push(self.output_dim);
        d
    }
}

/// Weights (`out × in`, row-major) and biases of every affine layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpParams {
    pub layer_weights: Vec<Matrix>,
    pub layer_biases: Vec<Vec<f64>>,
    pub hidden_activation: Activation,
    pub output_activation: Activation,
}

impl MlpParams {
    /// He-uniform hidden layers, Xavier-uniform output layer, zero biases.
    pub fn init<R: Rng + ?Sized>(shape: &NetworkShape, output_activation: Activation, rng: &mut R) -> Result<Self> {
        let dims = shape.dims();
        if dims.contains(&0) {
            return Err(Error::ConfigInvalid("layer widths must be positive".into()));
        }
        let n_layers = dims.len() - 1;
        let mut layer_weights = Vec::with_capacity(n_layers);
        let mut layer_biases = Vec::with_capacity(n_layers);
        for l in 0..n_layers {
            let (fan_in, fan_out) = (dims[l], dims[l + 1]);
            let limit = if l + 1 == n_layers {
                (6.0 / (fan_in + fan_out) as f64).sqrt()
            } else {
                (6.0 / fan_in as f64).sqrt()
            };
            let dist = Uniform::new_inclusive(-limit, limit).expect("finite limit");
            layer_weights.push(Matrix::from_fn(fan_out, fan_in, |_, _| dist.sample(rng)));
            layer_biases.push(vec![0.0; fan_out]);
        }
        Ok(Self { layer_weights, layer_biases, hidden_activation: Activation::Relu, output_activation })
    }

    pub fn zeros(shape: &NetworkShape, output_activation: Activation) -> Self {
        let dims = shape.dims();
        Self {
            layer_weights: dims.windows(2).map(|w| Matrix::zeros(w[1], w[0])).collect(),
            layer_biases: dims[1..].iter().map(|&d| vec![0.0; d]).collect(),
            hidden_activation: Activation::Relu,
            output_activation,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_weights.is_empty() || self.layer_weights.len() != self.layer_biases.len() {
            return Err(Error::ConfigInvalid("network needs matching weight and bias layers".into()));
        }
        for (l, (w, b)) in self.layer_weights.iter().zip(&self.layer_biases).enumerate() {
            check_dim(w.rows(), b.len())?;
            if l > 0 {
                check_dim(self.layer_weights[l - 1].rows(), w.cols())?;
            }
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layer_weights[0].cols()
    }

    pub fn output_dim(&self) -> usize {
        self.layer_weights.last().map_or(0, Matrix::rows)
    }

    pub fn num_layers(&self) -> usize {
        self.layer_weights.len()
    }

    pub fn activation(&self, layer: usize) -> Activation {
        if layer + 1 == self.layer_weights.len() {
            self.output_activation
        } else {
            self.hidden_activation
        }
    }

    pub fn num_params(&self) -> usize {
        self.layer_weights.iter().map(|w| w.data().len()).sum::<usize>()
            + self.layer_biases.iter().map(Vec::len).sum::<usize>()
    }

    /// All parameters in layer order, weights before biases within a layer.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for (w, b) in self.layer_weights.iter().zip(&self.layer_biases) {
            out.extend_from_slice(w.data());
            out.extend_from_slice(b);
        }
        out
    }

    /// Inverse of [`MlpParams::flatten`].
    pub fn assign_flat(&mut self, flat: &[f64]) -> Result<()> {
        check_dim(self.num_params(), flat.len())?;
        let mut offset = 0;
        for (w, b) in self.layer_weights.iter_mut().zip(self.layer_biases.iter_mut()) {
            let n = w.data().len();
            w.data_mut().copy_from_slice(&flat[offset..offset + n]);
            offset += n;
            let m = b.len();
            b.copy_from_slice(&flat[offset..offset + m]);
            offset += m;
        }
        Ok(())
    }
}

/// Conditioning inputs and the noise vector concatenated in front of the network.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorInput {
    pub x: Vec<f64>,
    pub s: Vec<f64>,
}

impl GeneratorInput {
    pub fn concat(&self) -> impl Iterator<Item = f64> + '_ {
        self.x.iter().chain(&self.s).copied()
    }
}

/// Activations recorded by [`forward`]: `pre[l]` before the nonlinearity of
/// layer `l`, `post[l]` the input to layer `l` (so `post[0]` is the batch).
#[derive(Debug, Clone)]
pub struct Tape {
    pre: Vec<Matrix>,
    post: Vec<Matrix>,
}

impl Tape {
    pub fn batch_size(&self) -> usize {
        self.post[0].rows()
    }

    /// Pre-activation values of every layer, for kink diagnostics.
    pub fn pre_activations(&self) -> &[Matrix] {
        &self.pre
    }
}

/// Runs the batch through the network.
pub fn forward(params: &MlpParams, inputs: &[GeneratorInput]) -> Result<(Vec<Vec<f64>>, Tape)> {
    let in_dim = params.input_dim();
    let mut x = Matrix::zeros(inputs.len(), in_dim);
    for (i, inp) in inputs.iter().enumerate() {
        check_dim(in_dim, inp.x.len() + inp.s.len())?;
        for (dst, v) in x.row_mut(i).iter_mut().zip(inp.concat()) {
            *dst = v;
        }
    }
    forward_matrix(params, x)
}

/// As [`forward`], with the concatenated inputs already laid out as rows.
pub fn forward_matrix(params: &MlpParams, input: Matrix) -> Result<(Vec<Vec<f64>>, Tape)> {
    check_dim(params.input_dim(), input.cols())?;
    let n = input.rows();
    let mut pre = Vec::with_capacity(params.num_layers());
    let mut post = Vec::with_capacity(params.num_layers() + 1);
    post.push(input);
    for (l, (w, b)) in params.layer_weights.iter().zip(&params.layer_biases).enumerate() {
        let h = post.last().expect("input pushed");
        let act = params.activation(l);
        let mut z = Matrix::zeros(n, w.rows());
        for r in 0..n {
            let hr = h.row(r);
            for (o, zo) in z.row_mut(r).iter_mut().enumerate() {
                *zo = b[o] + crate::linalg::dot(w.row(o), hr);
            }
        }
        let mut a = z.clone();
        for v in a.data_mut() {
            *v = act.apply(*v);
        }
        pre.push(z);
        post.push(a);
    }
    let out = post.last().expect("at least one layer");
    let outputs = (0..n).map(|r| out.row(r).to_vec()).collect();
    Ok((outputs, Tape { pre, post }))
}

/// Gradient record shaped like [`MlpParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads {
    pub layer_weights: Vec<Matrix>,
    pub layer_biases: Vec<Vec<f64>>,
}

impl MlpGrads {
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.layer_weights.iter().zip(&self.layer_biases) {
            out.extend_from_slice(w.data());
            out.extend_from_slice(b);
        }
        out
    }
}

/// Reverse pass: gradient of `Σ_i ⟨d_outputs[i], outputs[i]⟩` with respect to
/// every weight and bias.
pub fn backward(params: &MlpParams, tape: &Tape, d_outputs: &[Vec<f64>]) -> Result<MlpGrads> {
    let n_layers = params.num_layers();
    if tape.pre.len() != n_layers || tape.post.len() != n_layers + 1 || tape.batch_size() != d_outputs.len() {
        return Err(Error::StaleTape);
    }
    for (l, w) in params.layer_weights.iter().enumerate() {
        if tape.pre[l].cols() != w.rows() || tape.post[l].cols() != w.cols() {
            return Err(Error::StaleTape);
        }
    }
    let n = d_outputs.len();
    let out_dim = params.output_dim();
    let mut delta = Matrix::zeros(n, out_dim);
    for (r, d) in d_outputs.iter().enumerate() {
        if d.len() != out_dim {
            return Err(Error::StaleTape);
        }
        delta.row_mut(r).copy_from_slice(d);
    }

    let mut gw: Vec<Matrix> = Vec::with_capacity(n_layers);
    let mut gb: Vec<Vec<f64>> = Vec::with_capacity(n_layers);
    for l in (0..n_layers).rev() {
        let act = params.activation(l);
        let z = &tape.pre[l];
        for (dv, zv) in delta.data_mut().iter_mut().zip(z.data()) {
            *dv *= act.derivative(*zv);
        }
        let w = &params.layer_weights[l];
        let h = &tape.post[l];
        let mut dw = Matrix::zeros(w.rows(), w.cols());
        let mut db = vec![0.0; w.rows()];
        for r in 0..n {
            let dr = delta.row(r);
            let hr = h.row(r);
            for (o, &g) in dr.iter().enumerate() {
                if g == 0.0 {
                    continue;
                }
                db[o] += g;
                for (dwv, hv) in dw.row_mut(o).iter_mut().zip(hr) {
                    *dwv += g * hv;
                }
            }
        }
        if l > 0 {
            let mut next = Matrix::zeros(n, w.cols());
            for r in 0..n {
                let dr = delta.row(r);
                let nr = next.row_mut(r);
                for (o, &g) in dr.iter().enumerate() {
                    if g == 0.0 {
                        continue;
                    }
                    for (nv, wv) in nr.iter_mut().zip(w.row(o)) {
                        *nv += g * wv;
                    }
                }
            }
            delta = next;
        }
        gw.push(dw);
        gb.push(db);
    }
    gw.reverse();
    gb.reverse();
    Ok(MlpGrads { layer_weights: gw, layer_biases: gb })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamSettings {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamSettings {
    fn default() -> Self {
        Self { learning_rate: 1e-3, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

impl AdamSettings {
    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::ConfigInvalid(format!("invalid Adam settings {self:?}")))
        }
    }
}

/// Adam with bias correction over a flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub step_count: u64,
    pub settings: AdamSettings,
}

impl AdamState {
    pub fn new(num_params: usize, settings: AdamSettings) -> Self {
        Self { first_moment: vec![0.0; num_params], second_moment: vec![0.0; num_params], step_count: 0, settings }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        check_dim(self.first_moment.len(), params.len())?;
        check_dim(params.len(), grads.len())?;
        let AdamSettings { learning_rate, beta1, beta2, epsilon } = self.settings;
        self.step_count += 1;
        let t = self.step_count as i32;
        let bc1 = 1.0 - beta1.powi(t);
        let bc2 = 1.0 - beta2.powi(t);
        for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut self.first_moment).zip(&mut self.second_moment) {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn input(x: &[f64], s: &[f64]) -> GeneratorInput {
        GeneratorInput { x: x.to_vec(), s: s.to_vec() }
    }

    /// Independent scalar-loop forward pass used as an oracle.
    fn reference_forward(p: &MlpParams, v: &[f64]) -> Vec<f64> {
        let mut h = v.to_vec();
        for l in 0..p.num_layers() {
            let w = &p.layer_weights[l];
            let mut next = vec![0.0; w.rows()];
            for o in 0..w.rows() {
                let mut z = p.layer_biases[l][o];
                for i in 0..w.cols() {
                    z += w[(o, i)] * h[i];
                }
                let act = if l + 1 == p.num_layers() { p.output_activation } else { p.hidden_activation };
                next[o] = act.apply(z);
            }
            h = next;
        }
        h
    }

    #[test]
    fn zero_network_outputs_zero() {
        let shape = NetworkShape::five_layer(2, 8, 1);
        let p = MlpParams::zeros(&shape, Activation::Linear);
        let (out, _) = forward(&p, &[input(&[0.3], &[1.0]), input(&[-2.0], &[0.5])]).unwrap();
        assert_eq!(out, vec![vec![0.0], vec![0.0]]);
    }

    #[test]
    fn identity_single_layer() {
        let shape = NetworkShape { input_dim: 3, hidden: vec![], output_dim: 3 };
        let mut p = MlpParams::zeros(&shape, Activation::Linear);
        p.layer_weights[0] = Matrix::identity(3);
        let (out, _) = forward(&p, &[input(&[1.0, -2.0], &[0.5])]).unwrap();
        assert_eq!(out[0], vec![1.0, -2.0, 0.5]);
    }

    #[test]
    fn forward_matches_reference_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for act in [Activation::Linear, Activation::Swish, Activation::LeakyRelu, Activation::Relu] {
            let shape = NetworkShape::five_layer(4, 7, 1);
            let p = MlpParams::init(&shape, act, &mut rng).unwrap();
            let batch: Vec<GeneratorInput> =
                (0..6).map(|_| input(&[rng.random_range(-1.0..1.0)], &[rng.random(), rng.random(), rng.random()])).collect();
            let (out, _) = forward(&p, &batch).unwrap();
            for (o, b) in out.iter().zip(&batch) {
                let v: Vec<f64> = b.concat().collect();
                let r = reference_forward(&p, &v);
                assert!((o[0] - r[0]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn forward_rejects_wrong_width() {
        let p = MlpParams::zeros(&NetworkShape::five_layer(3, 4, 1), Activation::Linear);
        assert!(matches!(forward(&p, &[input(&[1.0], &[1.0])]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let p = MlpParams::init(&NetworkShape::five_layer(2, 5, 1), Activation::Swish, &mut rng).unwrap();
        let (_, tape) = forward(&p, &[input(&[0.2], &[0.1]), input(&[0.4], &[-0.3])]).unwrap();
        let g = backward(&p, &tape, &[vec![0.0], vec![0.0]]).unwrap();
        assert!(g.flatten().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn linear_layer_gradient_is_outer_product() {
        let shape = NetworkShape { input_dim: 3, hidden: vec![], output_dim: 2 };
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let p = MlpParams::init(&shape, Activation::Linear, &mut rng).unwrap();
        let inp = input(&[0.5, -1.0], &[2.0]);
        let (_, tape) = forward(&p, std::slice::from_ref(&inp)).unwrap();
        let d = vec![0.3, -0.7];
        let g = backward(&p, &tape, std::slice::from_ref(&d)).unwrap();
        let v: Vec<f64> = inp.concat().collect();
        for o in 0..2 {
            for i in 0..3 {
                assert!((g.layer_weights[0][(o, i)] - d[o] * v[i]).abs() < 1e-15);
            }
            assert_eq!(g.layer_biases[0][o], d[o]);
        }
    }

    #[test]
    fn stale_tape_is_detected() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = MlpParams::init(&NetworkShape::five_layer(2, 4, 1), Activation::Linear, &mut rng).unwrap();
        let q = MlpParams::init(&NetworkShape::five_layer(2, 5, 1), Activation::Linear, &mut rng).unwrap();
        let (_, tape) = forward(&p, &[input(&[0.1], &[0.2])]).unwrap();
        assert_eq!(backward(&q, &tape, &[vec![1.0]]).unwrap_err(), Error::StaleTape);
        assert_eq!(backward(&p, &tape, &[vec![1.0], vec![1.0]]).unwrap_err(), Error::StaleTape);
    }

    #[test]
    fn backward_matches_finite_differences() {
        let h = 1e-5;
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut checked = 0;
        while checked < 10 {
            let act = [Activation::Linear, Activation::Swish, Activation::LeakyRelu][checked % 3];
            let shape = NetworkShape::five_layer(3, 5, 2);
            let p = MlpParams::init(&shape, act, &mut rng).unwrap();
            let batch: Vec<GeneratorInput> =
                (0..4).map(|_| input(&[rng.random_range(-1.0..1.0)], &[rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])).collect();
            let up: Vec<Vec<f64>> = (0..4).map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
            let (_, tape) = forward(&p, &batch).unwrap();
            if tape.pre_activations().iter().flat_map(|m| m.data()).any(|z| z.abs() < 1e-3) {
                continue;
            }
            let g = backward(&p, &tape, &up).unwrap().flatten();
            let objective = |q: &MlpParams| -> f64 {
                let (o, _) = forward(q, &batch).unwrap();
                o.iter().zip(&up).map(|(a, b)| a[0] * b[0] + a[1] * b[1]).sum()
            };
            let flat = p.flatten();
            for k in 0..flat.len() {
                let mut qp = p.clone();
                let mut qm = p.clone();
                let mut f = flat.clone();
                f[k] += h;
                qp.assign_flat(&f).unwrap();
                f[k] -= 2.0 * h;
                qm.assign_flat(&f).unwrap();
                let fd = (objective(&qp) - objective(&qm)) / (2.0 * h);
                assert!((g[k] - fd).abs() <= 1e-5 * g[k].abs().max(fd.abs()).max(1e-4), "param {k}: {} vs {fd}", g[k]);
            }
            checked += 1;
        }
    }

    #[test]
    fn flatten_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let p = MlpParams::init(&NetworkShape::five_layer(2, 3, 1), Activation::Relu, &mut rng).unwrap();
        let mut q = MlpParams::zeros(&NetworkShape::five_layer(2, 3, 1), Activation::Relu);
        q.assign_flat(&p.flatten()).unwrap();
        assert_eq!(p, q);
        assert!(q.assign_flat(&[1.0]).is_err());
    }

    #[test]
    fn adam_zero_gradient_is_noop() {
        let mut st = AdamState::new(3, AdamSettings::default());
        let mut p = vec![1.0, -2.0, 3.0];
        st.step(&mut p, &[0.0; 3]).unwrap();
        assert_eq!(p, vec![1.0, -2.0, 3.0]);
        assert_eq!(st.step_count, 1);
    }

    #[test]
    fn adam_first_step_moves_by_learning_rate() {
        let settings = AdamSettings::default();
        let mut st = AdamState::new(2, settings);
        let mut p = vec![0.0, 0.0];
        st.step(&mut p, &[2.5, -0.01]).unwrap();
        // m̂ = g, v̂ = g², so Δ = −lr·g/(|g| + ε).
        assert!((p[0] + settings.learning_rate * 2.5 / (2.5 + 1e-8)).abs() < 1e-15);
        assert!((p[1] - settings.learning_rate * 0.01 / (0.01 + 1e-8)).abs() < 1e-15);
    }

    #[test]
    fn adam_constant_gradient_step_tends_to_learning_rate() {
        let settings = AdamSettings::default();
        let mut st = AdamState::new(1, settings);
        let mut p = vec![0.0];
        let mut last = 0.0;
        for _ in 0..1000 {
            let before = p[0];
            st.step(&mut p, &[0.7]).unwrap();
            last = p[0] - before;
        }
        assert!(last < 0.0);
        assert!((last.abs() - settings.learning_rate).abs() <= 0.01 * settings.learning_rate);
        assert!(st.step(&mut p, &[0.0, 1.0]).is_err());
    }

    #[test]
    fn activations_match_definitions() {
        assert_eq!(Activation::LeakyRelu.apply(-2.0), -0.02);
        assert_eq!(Activation::Relu.apply(-2.0), 0.0);
        assert!((Activation::Swish.apply(1.0) - 1.0 / (1.0 + (-1.0f64).exp())).abs() < 1e-15);
        let h = 1e-6;
        for act in [Activation::Swish, Activation::Linear] {
            for u in [-3.0, -0.4, 0.7, 5.0] {
                let fd = (act.apply(u + h) - act.apply(u - h)) / (2.0 * h);
                assert!((act.derivative(u) - fd).abs() < 1e-8);
            }
        }
    }
}
