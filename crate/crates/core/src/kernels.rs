//! Squared-exponential kernel, gram assembly and analytic derivatives.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::Matrix;

/// A positive-definite kernel over real vectors of equal dimension.
///
/// `value` assumes the caller has already checked dimensions.
pub trait Kernel {
    fn value(&self, u: &[f64], v: &[f64]) -> f64;
}

/// `k(u, v) = σ² exp(−‖u − v‖² / 2ℓ²)`, with `ℓ` and `σ` stored in log space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeKernel {
    pub log_lengthscale: f64,
    pub log_amplitude: f64,
    pub trainable_lengthscale: bool,
    pub trainable_amplitude: bool,
}

/// Partial derivatives of a kernel value with respect to its log parameters.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KernelParamGrad {
    pub d_log_lengthscale: f64,
    pub d_log_amplitude: f64,
}

impl std::ops::AddAssign for KernelParamGrad {
    fn add_assign(&mut self, rhs: Self) {
        self.d_log_lengthscale += rhs.d_log_lengthscale;
        self.d_log_amplitude += rhs.d_log_amplitude;
    }
}

impl SeKernel {
    /// Fixed kernel with the given lengthscale and amplitude.
    pub fn new(lengthscale: f64, amplitude: f64) -> Result<Self> {
        if !(lengthscale > 0.0 && lengthscale.is_finite()) {
            return Err(Error::ConfigInvalid(format!("lengthscale must be positive, got {lengthscale}")));
        }
        if !(amplitude > 0.0 && amplitude.is_finite()) {
            return Err(Error::ConfigInvalid(format!("amplitude must be positive, got {amplitude}")));
        }
        Ok(Self {
            log_lengthscale: lengthscale.ln(),
            log_amplitude: amplitude.ln(),
            trainable_lengthscale: false,
            trainable_amplitude: false,
        })
    }

    pub fn trainable(mut self, lengthscale: bool, amplitude: bool) -> Self {
        self.trainable_lengthscale = lengthscale;
        self.trainable_amplitude = amplitude;
        self
    }

    pub fn lengthscale(&self) -> f64 {
        self.log_lengthscale.exp()
    }

    pub fn amplitude(&self) -> f64 {
        self.log_amplitude.exp()
    }

    pub fn variance(&self) -> f64 {
        (2.0 * self.log_amplitude).exp()
    }

    pub fn eval(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        check_dim(u.len(), v.len())?;
        Ok(self.value(u, v))
    }

    /// `∂k(u, v)/∂v = k(u, v) (u − v) / ℓ²`.
    pub fn grad_wrt_second(&self, u: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        check_dim(u.len(), v.len())?;
        let mut out = vec![0.0; v.len()];
        self.accumulate_grad_wrt_second(u, v, 1.0, &mut out);
        Ok(out)
    }

    /// Adds `scale · ∂k(u, v)/∂v` into `out`.
    pub(crate) fn accumulate_grad_wrt_second(&self, u: &[f64], v: &[f64], scale: f64, out: &mut [f64]) {
        let inv_l2 = (-2.0 * self.log_lengthscale).exp();
        let c = scale * self.value(u, v) * inv_l2;
        for ((o, a), b) in out.iter_mut().zip(u).zip(v) {
            *o += c * (a - b);
        }
    }

    /// Derivatives with respect to `log ℓ` and `log σ`.
    pub fn grad_wrt_params(&self, u: &[f64], v: &[f64]) -> Result<KernelParamGrad> {
        check_dim(u.len(), v.len())?;
        Ok(self.param_grad_unchecked(u, v))
    }

    pub(crate) fn param_grad_unchecked(&self, u: &[f64], v: &[f64]) -> KernelParamGrad {
        let d2 = squared_distance(u, v);
        let k = self.variance() * (-0.5 * d2 * (-2.0 * self.log_lengthscale).exp()).exp();
        KernelParamGrad {
            d_log_lengthscale: k * d2 * (-2.0 * self.log_lengthscale).exp(),
            d_log_amplitude: 2.0 * k,
        }
    }
}

impl Kernel for SeKernel {
    fn value(&self, u: &[f64], v: &[f64]) -> f64 {
        let d2 = squared_distance(u, v);
        self.variance() * (-0.5 * d2 * (-2.0 * self.log_lengthscale).exp()).exp()
    }
}

/// `k(u, v) = u · v`. Its feature map is the identity.
#[derive(Debug, Clone, Copy, Default)]
pub struct LinearKernel;

impl Kernel for LinearKernel {
    fn value(&self, u: &[f64], v: &[f64]) -> f64 {
        crate::linalg::dot(u, v)
    }
}

pub fn squared_distance(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Gram matrix `G[i][j] = k(xs[i], ys[j])`.
pub fn gram<K: Kernel + ?Sized>(k: &K, xs: &[Vec<f64>], ys: &[Vec<f64>]) -> Result<Matrix> {
    common_dim(xs.iter().chain(ys))?;
    Ok(Matrix::from_fn(xs.len(), ys.len(), |i, j| k.value(&xs[i], &ys[j])))
}

/// Symmetric gram matrix of one point set; only the upper triangle is evaluated.
pub fn gram_symmetric<K: Kernel + ?Sized>(k: &K, xs: &[Vec<f64>]) -> Result<Matrix> {
    common_dim(xs.iter())?;
    let n = xs.len();
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = k.value(&xs[i], &xs[j]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

pub(crate) fn common_dim<'a>(mut it: impl Iterator<Item = &'a Vec<f64>>) -> Result<Option<usize>> {
    let Some(first) = it.next() else { return Ok(None) };
    let d = first.len();
    for v in it {
        check_dim(d, v.len())?;
    }
    Ok(Some(d))
}

/// Median pairwise Euclidean distance; falls back to 1 when it is zero or
/// there are fewer than two points.
pub fn median_heuristic(points: &[Vec<f64>]) -> f64 {
    let mut d = Vec::with_capacity(points.len() * points.len().saturating_sub(1) / 2);
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            d.push(squared_distance(&points[i], &points[j]).sqrt());
        }
    }
    if d.is_empty() {
        return 1.0;
    }
    d.sort_by(f64::total_cmp);
    let n = d.len();
    let med = if n % 2 == 1 { d[n / 2] } else { 0.5 * (d[n / 2 - 1] + d[n / 2]) };
    if med > 0.0 {
        med
    } else {
        1.0
    }
}

/// Kernel state for the input space (`x`) and output space (`y`), plus the
/// ridge regulariser of the conditional embedding estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub input_kernel: SeKernel,
    pub output_kernel: SeKernel,
    pub lambda: f64,
}

impl KernelConfig {
    pub fn new(input_kernel: SeKernel, output_kernel: SeKernel, lambda: f64) -> Result<Self> {
        let cfg = Self { input_kernel, output_kernel, lambda };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::ConfigInvalid(format!("lambda must be positive, got {}", self.lambda)));
        }
        Ok(())
    }
}
