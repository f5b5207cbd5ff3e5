//! Empirical MMD and conditional MMD in gram-matrix form.
//!
//! The conditional estimate compares the regularised conditional embedding
//! operators of two datasets `d` and `s`:
//!
//! ```text
//! Tr(K_d K̃_d⁻¹ L_d K̃_d⁻¹) + Tr(K_s K̃_s⁻¹ L_s K̃_s⁻¹) − 2 Tr(K_sd K̃_d⁻¹ L_ds K̃_s⁻¹)
//! ```
//!
//! with `K` gram matrices over inputs, `L` over outputs and `K̃ = K + λI`.
//! When both datasets share the same inputs (a training mini-batch) this
//! collapses to `Σ_ij A_ij [l(d_i, d_j) + l(s_i, s_j) − 2 l(d_i, s_j)]` with
//! `A = K̃⁻¹ K K̃⁻¹`, which [`CmmdWorkspace`] caches per batch.

use crate::error::{check_dim, Error, Result};
use crate::kernels::{common_dim, gram, gram_symmetric, squared_distance, Kernel, KernelConfig, KernelParamGrad};
use crate::linalg::{trace_product, Cholesky, Matrix};

/// Smoothing added under the square root of the training loss.
pub const LOSS_EPSILON: f64 = 1e-12;

/// Biased (V-statistic) MMD²: `mean k(X,X') − 2 mean k(X,Y) + mean k(Y,Y')`.
pub fn mmd_squared_biased<K: Kernel + ?Sized>(k: &K, xs: &[Vec<f64>], ys: &[Vec<f64>]) -> Result<f64> {
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::EmptySample);
    }
    common_dim(xs.iter().chain(ys))?;
    let mean = |a: &[Vec<f64>], b: &[Vec<f64>]| {
        let mut s = 0.0;
        for u in a {
            for v in b {
                s += k.value(u, v);
            }
        }
        s / (a.len() * b.len()) as f64
    };
    Ok(mean(xs, xs) - 2.0 * mean(xs, ys) + mean(ys, ys))
}

fn check_pairs(inputs: &[Vec<f64>], outputs: &[Vec<f64>]) -> Result<()> {
    if inputs.is_empty() || outputs.is_empty() {
        return Err(Error::EmptySample);
    }
    check_dim(inputs.len(), outputs.len())?;
    common_dim(inputs.iter())?;
    common_dim(outputs.iter())?;
    Ok(())
}

/// Three-trace CMMD² between datasets `d` and `s` with arbitrary inputs.
pub fn cmmd_squared_general(
    cfg: &KernelConfig,
    d_inputs: &[Vec<f64>],
    d_outputs: &[Vec<f64>],
    s_inputs: &[Vec<f64>],
    s_outputs: &[Vec<f64>],
) -> Result<f64> {
    cfg.validate()?;
    check_pairs(d_inputs, d_outputs)?;
    check_pairs(s_inputs, s_outputs)?;
    check_dim(d_inputs[0].len(), s_inputs[0].len())?;
    check_dim(d_outputs[0].len(), s_outputs[0].len())?;

    let kx = &cfg.input_kernel;
    let ky = &cfg.output_kernel;

    let k_d = gram_symmetric(kx, d_inputs)?;
    let k_s = gram_symmetric(kx, s_inputs)?;
    let chol_d = Cholesky::factor(&k_d.add_diagonal(cfg.lambda)?)?;
    let chol_s = Cholesky::factor(&k_s.add_diagonal(cfg.lambda)?)?;
    let l_d = gram_symmetric(ky, d_outputs)?;
    let l_s = gram_symmetric(ky, s_outputs)?;

    // K and K̃⁻¹ commute, so Tr(K K̃⁻¹ L K̃⁻¹) = Tr((K̃⁻¹K)(K̃⁻¹L)ᵀ).
    let self_term = |chol: &Cholesky, k: &Matrix, l: &Matrix| -> Result<f64> {
        let p = chol.solve(k)?;
        let q = chol.solve(l)?;
        trace_product(&p, &q.transpose())
    };
    let t_d = self_term(&chol_d, &k_d, &l_d)?;
    let t_s = self_term(&chol_s, &k_s, &l_s)?;

    // Tr(K_sd K̃_d⁻¹ L_ds K̃_s⁻¹) = Tr((K̃_s⁻¹ K_sd)(K̃_d⁻¹ L_ds)).
    let k_sd = gram(kx, s_inputs, d_inputs)?;
    let l_ds = gram(ky, d_outputs, s_outputs)?;
    let y = chol_s.solve(&k_sd)?;
    let x = chol_d.solve(&l_ds)?;
    let cross = trace_product(&y, &x)?;

    Ok(t_d + t_s - 2.0 * cross)
}

/// Per-batch cache for the shared-input CMMD: the weight matrix
/// `A = K̃⁻¹ K K̃⁻¹` together with the batch inputs and observed outputs.
#[derive(Debug, Clone)]
pub struct CmmdWorkspace {
    a_matrix: Matrix,
    batch_inputs: Vec<Vec<f64>>,
    data_outputs: Vec<Vec<f64>>,
    lambda: f64,
}

impl CmmdWorkspace {
    pub fn new(cfg: &KernelConfig, batch_inputs: Vec<Vec<f64>>, data_outputs: Vec<Vec<f64>>) -> Result<Self> {
        cfg.validate()?;
        check_pairs(&batch_inputs, &data_outputs)?;
        let k = gram_symmetric(&cfg.input_kernel, &batch_inputs)?;
        let chol = Cholesky::factor(&k.add_diagonal(cfg.lambda)?)?;
        let p = chol.solve(&k)?;
        let a = chol.solve(&p.transpose())?;
        let n = a.rows();
        let a_matrix = Matrix::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]));
        Ok(Self { a_matrix, batch_inputs, data_outputs, lambda: cfg.lambda })
    }

    pub fn a_matrix(&self) -> &Matrix {
        &self.a_matrix
    }

    pub fn batch_inputs(&self) -> &[Vec<f64>] {
        &self.batch_inputs
    }

    pub fn data_outputs(&self) -> &[Vec<f64>] {
        &self.data_outputs
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn len(&self) -> usize {
        self.batch_inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.batch_inputs.is_empty()
    }

    fn check_generated(&self, s_outputs: &[Vec<f64>]) -> Result<()> {
        check_dim(self.data_outputs.len(), s_outputs.len())?;
        let dim = self.data_outputs[0].len();
        for s in s_outputs {
            check_dim(dim, s.len())?;
        }
        Ok(())
    }
}

/// Shared-input CMMD² using the cached weight matrix.
pub fn cmmd_squared_paired(ws: &CmmdWorkspace, cfg: &KernelConfig, s_outputs: &[Vec<f64>]) -> Result<f64> {
    ws.check_generated(s_outputs)?;
    let ky = &cfg.output_kernel;
    let d = &ws.data_outputs;
    let a = &ws.a_matrix;
    let n = d.len();
    let mut total = 0.0;
    for i in 0..n {
        let a_row = a.row(i);
        let mut row = 0.0;
        for j in 0..n {
            row += a_row[j] * (ky.value(&d[i], &d[j]) + ky.value(&s_outputs[i], &s_outputs[j]) - 2.0 * ky.value(&d[i], &s_outputs[j]));
        }
        total += row;
    }
    Ok(total)
}

/// Loss value and gradients returned by [`cmmd_loss_and_grad`].
#[derive(Debug, Clone)]
pub struct CmmdGrad {
    /// `sqrt(CMMD² + ε)`.
    pub loss: f64,
    pub cmmd_squared: f64,
    /// `∂loss/∂s_i` for every generated output.
    pub d_outputs: Vec<Vec<f64>>,
    /// Output-kernel parameter gradient; components for frozen parameters are zero.
    pub d_kernel: KernelParamGrad,
}

/// Square-root CMMD loss with its gradient with respect to the generated
/// outputs and the trainable output-kernel parameters. `A` is held fixed.
pub fn cmmd_loss_and_grad(ws: &CmmdWorkspace, cfg: &KernelConfig, s_outputs: &[Vec<f64>]) -> Result<CmmdGrad> {
    ws.check_generated(s_outputs)?;
    let ky = &cfg.output_kernel;
    let d = &ws.data_outputs;
    let a = &ws.a_matrix;
    let n = d.len();
    let dim = d[0].len();
    let inv_l2 = (-2.0 * ky.log_lengthscale).exp();

    let mut value = 0.0;
    let mut d_log_l = 0.0;
    let mut d_log_s = 0.0;
    let mut d_out = vec![vec![0.0; dim]; n];

    for i in 0..n {
        let a_row = a.row(i);
        for j in 0..n {
            let w = a_row[j];
            let dist_dd = squared_distance(&d[i], &d[j]);
            let dist_ss = squared_distance(&s_outputs[i], &s_outputs[j]);
            let dist_ds = squared_distance(&d[i], &s_outputs[j]);
            let l_dd = ky.value(&d[i], &d[j]);
            let l_ss = ky.value(&s_outputs[i], &s_outputs[j]);
            let l_ds = ky.value(&d[i], &s_outputs[j]);

            value += w * (l_dd + l_ss - 2.0 * l_ds);
            d_log_l += w * inv_l2 * (l_dd * dist_dd + l_ss * dist_ss - 2.0 * l_ds * dist_ds);
            d_log_s += w * 2.0 * (l_dd + l_ss - 2.0 * l_ds);

            // Both arguments of l(s_i, s_j) move; A is symmetric so the two
            // contributions fold into 2·A_ij·∂₂l(s_i, s_j) on s_j.
            let c_ss = 2.0 * w * l_ss * inv_l2;
            let c_ds = -2.0 * w * l_ds * inv_l2;
            let out = &mut d_out[j];
            for k in 0..dim {
                out[k] += c_ss * (s_outputs[i][k] - s_outputs[j][k]) + c_ds * (d[i][k] - s_outputs[j][k]);
            }
        }
    }

    let loss = (value + LOSS_EPSILON).max(LOSS_EPSILON).sqrt();
    let scale = 0.5 / loss;
    for g in d_out.iter_mut().flat_map(|v| v.iter_mut()) {
        *g *= scale;
    }
    let d_kernel = KernelParamGrad {
        d_log_lengthscale: if ky.trainable_lengthscale { d_log_l * scale } else { 0.0 },
        d_log_amplitude: if ky.trainable_amplitude { d_log_s * scale } else { 0.0 },
    };
    Ok(CmmdGrad { loss, cmmd_squared: value, d_outputs: d_out, d_kernel })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{LinearKernel, SeKernel};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg(lambda: f64) -> KernelConfig {
        KernelConfig::new(SeKernel::new(1.0, 1.0).unwrap(), SeKernel::new(1.0, 1.0).unwrap(), lambda).unwrap()
    }

    fn random_points(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
        (0..n).map(|_| (0..dim).map(|_| rng.random_range(-1.5..1.5)).collect()).collect()
    }

    #[test]
    fn mmd_identical_samples_is_zero() {
        let xs = random_points(&mut ChaCha8Rng::seed_from_u64(1), 30, 2);
        let k = SeKernel::new(0.8, 1.0).unwrap();
        assert!(mmd_squared_biased(&k, &xs, &xs).unwrap().abs() < 1e-12);
    }

    #[test]
    fn mmd_far_point_masses() {
        let k = SeKernel::new(1e-3, 1.0).unwrap();
        let v = mmd_squared_biased(&k, &[vec![0.0]], &[vec![1.0]]).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn mmd_linear_kernel_is_mean_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let xs = random_points(&mut rng, 17, 3);
        let ys = random_points(&mut rng, 9, 3);
        let mean = |p: &[Vec<f64>]| -> Vec<f64> {
            (0..3).map(|k| p.iter().map(|v| v[k]).sum::<f64>() / p.len() as f64).collect()
        };
        let expected = squared_distance(&mean(&xs), &mean(&ys));
        let got = mmd_squared_biased(&LinearKernel, &xs, &ys).unwrap();
        assert!((got - expected).abs() < 1e-10);
    }

    #[test]
    fn mmd_errors() {
        let k = SeKernel::new(1.0, 1.0).unwrap();
        assert_eq!(mmd_squared_biased(&k, &[], &[vec![1.0]]).unwrap_err(), Error::EmptySample);
        assert!(matches!(
            mmd_squared_biased(&k, &[vec![1.0]], &[vec![1.0, 2.0]]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn general_identical_datasets_vanish() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_points(&mut rng, 12, 2);
        let y = random_points(&mut rng, 12, 1);
        let v = cmmd_squared_general(&cfg(1e-2), &x, &y, &x, &y).unwrap();
        assert!(v.abs() < 1e-10, "{v}");
    }

    #[test]
    fn general_size_one_hand_expansion() {
        for delta in [0.0, 0.3, 1.0, 2.5] {
            let v = cmmd_squared_general(&cfg(1.0), &[vec![0.2]], &[vec![0.0]], &[vec![0.2]], &[vec![delta]]).unwrap();
            let expected = 0.25 * (2.0 - 2.0 * (-0.5 * delta * delta).exp());
            assert!((v - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn paired_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = random_points(&mut rng, 20, 1);
        let y = random_points(&mut rng, 20, 1);
        let s = random_points(&mut rng, 20, 1);
        let c = cfg(1e-2);
        let ws = CmmdWorkspace::new(&c, x.clone(), y.clone()).unwrap();
        assert!(ws.a_matrix().is_symmetric(1e-9));
        assert!(cmmd_squared_paired(&ws, &c, &y).unwrap().abs() < 1e-10);
        let paired = cmmd_squared_paired(&ws, &c, &s).unwrap();
        let general = cmmd_squared_general(&c, &x, &y, &x, &s).unwrap();
        assert!((paired - general).abs() < 1e-10, "{paired} vs {general}");
    }

    #[test]
    fn paired_far_inputs_reduce_to_pointwise_mmd() {
        let lambda = 0.5;
        let c = KernelConfig::new(SeKernel::new(1e-3, 1.0).unwrap(), SeKernel::new(1.0, 1.0).unwrap(), lambda).unwrap();
        let x = vec![vec![0.0], vec![10.0]];
        let y = vec![vec![0.1], vec![-0.4]];
        let s = vec![vec![0.9], vec![0.2]];
        let ws = CmmdWorkspace::new(&c, x, y.clone()).unwrap();
        let w = 1.0 / ((1.0 + lambda) * (1.0 + lambda));
        for i in 0..2 {
            assert!((ws.a_matrix()[(i, i)] - w).abs() < 1e-14);
        }
        let ky = SeKernel::new(1.0, 1.0).unwrap();
        let expected: f64 = (0..2)
            .map(|i| w * mmd_squared_biased(&ky, &[y[i].clone()], &[s[i].clone()]).unwrap())
            .sum();
        assert!((cmmd_squared_paired(&ws, &c, &s).unwrap() - expected).abs() < 1e-12);
    }

    fn fd_check(seed: u64, n: usize, dim: usize, c: KernelConfig) {
        let h = 1e-5;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_points(&mut rng, n, 1);
        let y = random_points(&mut rng, n, dim);
        let s = random_points(&mut rng, n, dim);
        let ws = CmmdWorkspace::new(&c, x, y).unwrap();
        let loss = |c: &KernelConfig, s: &[Vec<f64>]| (cmmd_squared_paired(&ws, c, s).unwrap() + LOSS_EPSILON).sqrt();
        let g = cmmd_loss_and_grad(&ws, &c, &s).unwrap();
        assert!((g.loss - loss(&c, &s)).abs() < 1e-12);
        for i in 0..n {
            for k in 0..dim {
                let mut sp = s.clone();
                let mut sm = s.clone();
                sp[i][k] += h;
                sm[i][k] -= h;
                let fd = (loss(&c, &sp) - loss(&c, &sm)) / (2.0 * h);
                let an = g.d_outputs[i][k];
                assert!((an - fd).abs() <= 1e-5 * an.abs().max(fd.abs()).max(1e-3), "{an} vs {fd}");
            }
        }
        let mut cp = c;
        let mut cm = c;
        cp.output_kernel.log_lengthscale += h;
        cm.output_kernel.log_lengthscale -= h;
        let fd = (loss(&cp, &s) - loss(&cm, &s)) / (2.0 * h);
        let an = g.d_kernel.d_log_lengthscale;
        assert!((an - fd).abs() <= 1e-5 * an.abs().max(fd.abs()).max(1e-3), "{an} vs {fd}");
        if c.output_kernel.trainable_amplitude {
            let mut cp = c;
            let mut cm = c;
            cp.output_kernel.log_amplitude += h;
            cm.output_kernel.log_amplitude -= h;
            let fd = (loss(&cp, &s) - loss(&cm, &s)) / (2.0 * h);
            let an = g.d_kernel.d_log_amplitude;
            assert!((an - fd).abs() <= 1e-5 * an.abs().max(fd.abs()).max(1e-3), "{an} vs {fd}");
        } else {
            assert_eq!(g.d_kernel.d_log_amplitude, 0.0);
        }
    }

    #[test]
    fn loss_gradient_matches_finite_differences() {
        let base = cfg(1e-2);
        let mut trained = base;
        trained.output_kernel = SeKernel::new(0.8, 1.2).unwrap().trainable(true, true);
        for seed in 0..5 {
            fd_check(seed, 10, 1, trained);
            fd_check(100 + seed, 8, 2, trained);
        }
        let mut ls_only = base;
        ls_only.output_kernel = ls_only.output_kernel.trainable(true, false);
        fd_check(42, 10, 1, ls_only);
    }

    #[test]
    fn loss_at_data_is_sqrt_epsilon() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = random_points(&mut rng, 6, 1);
        let y = random_points(&mut rng, 6, 1);
        let c = cfg(1e-3);
        let ws = CmmdWorkspace::new(&c, x, y.clone()).unwrap();
        let g = cmmd_loss_and_grad(&ws, &c, &y).unwrap();
        assert!((g.loss - LOSS_EPSILON.sqrt()).abs() < 1e-9);
        // Every generated point sits on its data twin, so the gradient vanishes.
        assert!(g.d_outputs.iter().flatten().all(|v| v.abs() < 1e-6));
    }

    #[test]
    fn generated_length_must_match() {
        let c = cfg(1e-3);
        let ws = CmmdWorkspace::new(&c, vec![vec![0.0], vec![1.0]], vec![vec![0.0], vec![1.0]]).unwrap();
        assert!(cmmd_squared_paired(&ws, &c, &[vec![0.0]]).is_err());
        assert!(cmmd_loss_and_grad(&ws, &c, &[vec![0.0, 1.0], vec![0.0, 1.0]]).is_err());
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(64))]

        #[test]
        fn general_is_nonnegative_and_permutation_invariant(seed in 0u64..100_000, nd in 1usize..10, ns in 1usize..10) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let c = cfg(rng.random_range(1e-3..1.0));
            let xd = random_points(&mut rng, nd, 2);
            let yd = random_points(&mut rng, nd, 1);
            let xs = random_points(&mut rng, ns, 2);
            let ys = random_points(&mut rng, ns, 1);
            let v = cmmd_squared_general(&c, &xd, &yd, &xs, &ys).unwrap();
            proptest::prop_assert!(v >= -1e-10);
            let mut order: Vec<usize> = (0..nd).collect();
            order.reverse();
            order.rotate_left(seed as usize % nd);
            let xp: Vec<_> = order.iter().map(|&i| xd[i].clone()).collect();
            let yp: Vec<_> = order.iter().map(|&i| yd[i].clone()).collect();
            let vp = cmmd_squared_general(&c, &xp, &yp, &xs, &ys).unwrap();
            proptest::prop_assert!((v - vp).abs() < 1e-10);
        }
    }
}
