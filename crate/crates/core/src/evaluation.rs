//! Density estimation, Hellinger distance and surrogate scoring.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::seed::derive_seed;
use crate::simulators::{
    generate_dataset, DesignSampling, ExperimentalDesign, ReferenceDistribution, Simulator, SimulatorKind,
    REFERENCE_POOL_SIZE,
};
use crate::training::{train, TrainedSurrogate, TrainingConfig};

pub const DEFAULT_KDE_GRID: usize = 1024;
pub const DEFAULT_HELLINGER_GRID: usize = 4096;
const MAX_HELLINGER_GRID: usize = 1 << 16;
/// Gaussian kernel contributions beyond this many bandwidths are dropped.
const KDE_CUTOFF: f64 = 8.0;
/// Standard normal tail cut used as the support of analytic densities.
const ANALYTIC_TAIL_Z: f64 = 8.0;
const Z_90: f64 = 1.281_551_565_544_600_4;

/// Density tabulated on a uniform grid, linearly interpolated in between
/// and zero outside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalPdf {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub bandwidth: f64,
}

impl EmpiricalPdf {
    pub fn support(&self) -> (f64, f64) {
        (self.grid[0], self.grid[self.grid.len() - 1])
    }

    pub fn eval(&self, y: f64) -> f64 {
        let (lo, hi) = self.support();
        if !(y >= lo && y <= hi) {
            return 0.0;
        }
        let step = (hi - lo) / (self.grid.len() - 1) as f64;
        let t = (y - lo) / step;
        let i = (t.floor() as usize).min(self.grid.len() - 2);
        let w = t - i as f64;
        self.density[i] * (1.0 - w) + self.density[i + 1] * w
    }

    pub fn integral(&self) -> f64 {
        trapezoid(&self.grid, &self.density)
    }
}

fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2).zip(y.windows(2)).map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1])).sum()
}

fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| if i + 1 == n { hi } else { lo + step * i as f64 }).collect()
}

/// Linear-interpolated quantile of sorted data.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    if i + 1 >= sorted.len() {
        return sorted[sorted.len() - 1];
    }
    let w = pos - i as f64;
    sorted[i] + w * (sorted[i + 1] - sorted[i])
}

fn sorted_finite(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalBlowup("non-finite sample".into()));
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(s)
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let ss: f64 = v.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Gaussian kernel density estimate with Silverman's rule-of-thumb bandwidth.
///
/// When the interquartile range is zero (heavily tied data) the bandwidth
/// falls back to the standard deviation alone.
pub fn kde(samples: &[f64], grid_size: usize) -> Result<EmpiricalPdf> {
    if grid_size < 2 {
        return Err(Error::GridError("KDE grid needs at least two points".into()));
    }
    if samples.len() < 2 {
        return Err(Error::DegenerateSample("KDE needs at least two samples".into()));
    }
    let sorted = sorted_finite(samples)?;
    let (min, max) = (sorted[0], sorted[sorted.len() - 1]);
    if min == max {
        return Err(Error::DegenerateSample("all samples are equal".into()));
    }
    let n = sorted.len() as f64;
    let (_, std) = mean_std(&sorted);
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let spread = if iqr > 0.0 { std.min(iqr / 1.34) } else { std };
    let h = 0.9 * spread * n.powf(-0.2);

    let grid = uniform_grid(min - 3.0 * h, max + 3.0 * h, grid_size);
    let norm = 1.0 / (n * h * (2.0 * PI).sqrt());
    let (mut lo, mut hi) = (0usize, 0usize);
    let mut density = Vec::with_capacity(grid_size);
    for &g in &grid {
        while lo < sorted.len() && sorted[lo] < g - KDE_CUTOFF * h {
            lo += 1;
        }
        while hi < sorted.len() && sorted[hi] <= g + KDE_CUTOFF * h {
            hi += 1;
        }
        let s: f64 = sorted[lo..hi]
            .iter()
            .map(|&v| {
                let u = (g - v) / h;
                (-0.5 * u * u).exp()
            })
            .sum();
        density.push(s * norm);
    }
    let total = trapezoid(&grid, &density);
    for d in &mut density {
        *d /= total;
    }
    Ok(EmpiricalPdf { grid, density, bandwidth: h })
}

/// Anything [`hellinger`] can compare.
#[derive(Debug, Clone, PartialEq)]
pub enum Density {
    Empirical(EmpiricalPdf),
    Normal { mean: f64, std: f64 },
    /// `log Y ~ N(mu, sigma²)`.
    LogNormal { mu: f64, sigma: f64 },
}

impl Density {
    pub fn pdf(&self, y: f64) -> f64 {
        match self {
            Density::Empirical(p) => p.eval(y),
            Density::Normal { mean, std } => {
                let u = (y - mean) / std;
                (-0.5 * u * u).exp() / (std * (2.0 * PI).sqrt())
            }
            Density::LogNormal { mu, sigma } => {
                if y <= 0.0 {
                    return 0.0;
                }
                let u = (y.ln() - mu) / sigma;
                (-0.5 * u * u).exp() / (y * sigma * (2.0 * PI).sqrt())
            }
        }
    }

    pub fn support(&self) -> (f64, f64) {
        match self {
            Density::Empirical(p) => p.support(),
            Density::Normal { mean, std } => (mean - ANALYTIC_TAIL_Z * std, mean + ANALYTIC_TAIL_Z * std),
            Density::LogNormal { mu, sigma } => {
                ((mu - ANALYTIC_TAIL_Z * sigma).exp(), (mu + ANALYTIC_TAIL_Z * sigma).exp())
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            Density::Empirical(p) => p.grid.len() >= 2 && p.grid.len() == p.density.len(),
            Density::Normal { mean, std } => mean.is_finite() && *std > 0.0 && std.is_finite(),
            Density::LogNormal { mu, sigma } => mu.is_finite() && *sigma > 0.0 && sigma.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::GridError("density is not evaluable".into()))
        }
    }

    fn resolution(&self) -> Option<f64> {
        match self {
            Density::Empirical(p) => Some(p.bandwidth),
            _ => None,
        }
    }
}

impl From<EmpiricalPdf> for Density {
    fn from(p: EmpiricalPdf) -> Self {
        Density::Empirical(p)
    }
}

/// Hellinger distance `sqrt(1 − BC)` on a common uniform grid spanning both
/// supports.
///
/// The Bhattacharyya coefficient is taken relative to the grid masses of the
/// two densities, `∫√(pq) / sqrt(∫p ∫q)`, so that `H(p, p)` is exactly zero
/// whatever the quadrature error. The grid has at least `grid_size` points
/// and is refined until its step is below an eighth of any KDE bandwidth.
pub fn hellinger(p: &Density, q: &Density, grid_size: usize) -> Result<f64> {
    p.validate()?;
    q.validate()?;
    if grid_size < 2 {
        return Err(Error::GridError("Hellinger grid needs at least two points".into()));
    }
    let (plo, phi) = p.support();
    let (qlo, qhi) = q.support();
    if phi < qlo || qhi < plo {
        return Ok(1.0);
    }
    let (lo, hi) = (plo.min(qlo), phi.max(qhi));
    let mut n = grid_size;
    if let Some(h) = [p.resolution(), q.resolution()].into_iter().flatten().reduce(f64::min) {
        let wanted = ((hi - lo) / (h / 8.0)).ceil() as usize + 1;
        n = n.max(wanted.min(MAX_HELLINGER_GRID));
    }
    let grid = uniform_grid(lo, hi, n);
    let pv: Vec<f64> = grid.iter().map(|&y| p.pdf(y)).collect();
    let qv: Vec<f64> = grid.iter().map(|&y| q.pdf(y)).collect();
    let mass_p = trapezoid(&grid, &pv);
    let mass_q = trapezoid(&grid, &qv);
    if !(mass_p > 0.0 && mass_q > 0.0) {
        return Err(Error::GridError("density has no mass on the common grid".into()));
    }
    let root: Vec<f64> = pv.iter().zip(&qv).map(|(a, b)| (a * b).sqrt()).collect();
    let bc = trapezoid(&grid, &root) / (mass_p * mass_q).sqrt();
    Ok((1.0 - bc.min(1.0)).max(0.0).sqrt().clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistStats {
    pub mean: f64,
    pub std: f64,
    pub q10: f64,
    pub q50: f64,
    pub q90: f64,
}

/// Sample mean, unbiased standard deviation and linearly interpolated
/// quantiles.
pub fn dist_stats(samples: &[f64]) -> Result<DistStats> {
    if samples.len() < 2 {
        return Err(Error::DegenerateSample("statistics need at least two samples".into()));
    }
    let sorted = sorted_finite(samples)?;
    let (mean, std) = mean_std(&sorted);
    Ok(DistStats {
        mean,
        std,
        q10: quantile_sorted(&sorted, 0.1),
        q50: quantile_sorted(&sorted, 0.5),
        q90: quantile_sorted(&sorted, 0.9),
    })
}

fn lognormal_stats(mu: f64, sigma: f64) -> DistStats {
    let mean = (mu + 0.5 * sigma * sigma).exp();
    DistStats {
        mean,
        std: mean * (sigma * sigma).exp_m1().sqrt(),
        q10: (mu - Z_90 * sigma).exp(),
        q50: mu.exp(),
        q90: (mu + Z_90 * sigma).exp(),
    }
}

/// Spearman rank correlation, ties given their average rank.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    check_dim(a.len(), b.len())?;
    if a.len() < 2 {
        return Err(Error::DegenerateSample("rank correlation needs at least two pairs".into()));
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let (ma, _) = mean_std(&ra);
    let (mb, _) = mean_std(&rb);
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in ra.iter().zip(&rb) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::DegenerateSample("constant ranks".into()));
    }
    Ok(sab / (saa * sbb).sqrt())
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Something that can draw scalar outputs conditional on `x`.
pub trait ConditionalSampler: Sync {
    fn input_dim(&self) -> usize;
    fn sample_at(&self, x: &[f64], n: usize, seed: u64) -> Result<Vec<f64>>;
}

impl ConditionalSampler for TrainedSurrogate {
    fn input_dim(&self) -> usize {
        TrainedSurrogate::input_dim(self)
    }

    fn sample_at(&self, x: &[f64], n: usize, seed: u64) -> Result<Vec<f64>> {
        self.sample_scalar(x, n, seed)
    }
}

/// Replays the simulator itself; scoring it measures the estimator's own
/// noise floor at matched sample counts.
#[derive(Debug, Clone)]
pub struct OraclePassthrough(pub Simulator);

impl ConditionalSampler for OraclePassthrough {
    fn input_dim(&self) -> usize {
        self.0.input_dim()
    }

    fn sample_at(&self, x: &[f64], n: usize, seed: u64) -> Result<Vec<f64>> {
        self.0.sample(x, n, seed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationSettings {
    pub samples_per_point: usize,
    pub kde_grid_size: usize,
    pub hellinger_grid_size: usize,
    /// Size of the oracle pool for simulators without a closed-form law.
    pub reference_pool_size: usize,
    pub seed: u64,
}

impl Default for EvaluationSettings {
    fn default() -> Self {
        Self {
            samples_per_point: 2000,
            kde_grid_size: DEFAULT_KDE_GRID,
            hellinger_grid_size: DEFAULT_HELLINGER_GRID,
            reference_pool_size: REFERENCE_POOL_SIZE,
            seed: 0,
        }
    }
}

/// Reference density and statistics at one input.
#[derive(Debug, Clone)]
pub struct Reference {
    pub density: Density,
    pub stats: DistStats,
}

pub fn reference_at(sim: &Simulator, x: &[f64], settings: &EvaluationSettings) -> Result<Reference> {
    match sim.reference(x, settings.reference_pool_size)? {
        ReferenceDistribution::LogNormal { mu, sigma } => {
            Ok(Reference { density: Density::LogNormal { mu, sigma }, stats: lognormal_stats(mu, sigma) })
        }
        ReferenceDistribution::Empirical { samples } => Ok(Reference {
            density: Density::Empirical(kde(&samples, settings.kde_grid_size)?),
            stats: dist_stats(&samples)?,
        }),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointReport {
    pub x: Vec<f64>,
    pub hellinger: f64,
    pub predicted: DistStats,
    pub reference: DistStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub points: Vec<PointReport>,
    /// Statistics of the per-point Hellinger distances; absent for fewer
    /// than two points.
    pub summary: Option<DistStats>,
}

fn score_point<S: ConditionalSampler + ?Sized>(
    sampler: &S,
    x: &[f64],
    reference: &Reference,
    settings: &EvaluationSettings,
    seed: u64,
) -> Result<PointReport> {
    let draws = sampler.sample_at(x, settings.samples_per_point, seed)?;
    let predicted = dist_stats(&draws)?;
    let h = match kde(&draws, settings.kde_grid_size) {
        Ok(pdf) => hellinger(&Density::Empirical(pdf), &reference.density, settings.hellinger_grid_size)?,
        // A surrogate that collapsed to a point mass shares no density with the reference.
        Err(Error::DegenerateSample(_)) => 1.0,
        Err(e) => return Err(e),
    };
    Ok(PointReport { x: x.to_vec(), hellinger: h, predicted, reference: reference.stats })
}

/// Scores `sampler` against the simulator's reference law at every test
/// point. Points are processed in parallel; each draws from its own stream
/// keyed by the point index, so results do not depend on scheduling.
pub fn evaluate_surrogate<S: ConditionalSampler + ?Sized>(
    sampler: &S,
    sim: &Simulator,
    test_points: &[Vec<f64>],
    settings: &EvaluationSettings,
) -> Result<EvaluationReport> {
    for x in test_points {
        check_dim(sim.input_dim(), x.len())?;
        check_dim(sampler.input_dim(), x.len())?;
        sim.check_input(x)?;
    }
    let points = test_points
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            let reference = reference_at(sim, x, settings)?;
            score_point(sampler, x, &reference, settings, derive_seed(settings.seed, "evaluate", &[i as u64]))
        })
        .collect::<Result<Vec<_>>>()?;
    let hs: Vec<f64> = points.iter().map(|p| p.hellinger).collect();
    let summary = if hs.len() >= 2 { Some(dist_stats(&hs)?) } else { None };
    Ok(EvaluationReport { points, summary })
}

/// `n` uniformly random inputs over the simulator domain.
pub fn random_test_points(sim: &Simulator, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let design = ExperimentalDesign {
        ranges: sim.domain(),
        n_points: n,
        replications: 1,
        sampling: DesignSampling::UniformRandom,
        seed: derive_seed(seed, "test-points", &[]),
    };
    Ok(design.points()?.iter().map(|x| sim.canonical_input(x)).collect())
}

impl EvaluationReport {
    pub fn to_csv(&self, input_dim: usize) -> String {
        let mut out = String::from("point_id,");
        for i in 1..=input_dim {
            let _ = write!(out, "x{i},");
        }
        out.push_str(
            "hellinger,mean_pred,mean_ref,std_pred,std_ref,q10_pred,q10_ref,q50_pred,q50_ref,q90_pred,q90_ref\n",
        );
        for (i, p) in self.points.iter().enumerate() {
            let _ = write!(out, "{i},");
            for v in &p.x {
                let _ = write!(out, "{v},");
            }
            let (a, b) = (&p.predicted, &p.reference);
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                p.hellinger, a.mean, b.mean, a.std, b.std, a.q10, b.q10, a.q50, b.q50, a.q90, b.q90
            );
        }
        out
    }

    pub fn summary_json(&self) -> String {
        #[derive(Serialize)]
        struct Summary<'a> {
            n_points: usize,
            hellinger: &'a Option<DistStats>,
        }
        let mut s = serde_json::to_string_pretty(&Summary { n_points: self.points.len(), hellinger: &self.summary })
            .expect("summary serialises");
        s.push('\n');
        s
    }
}

/// Design size, probe points and training settings of one reference benchmark.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkPreset {
    pub simulator: Simulator,
    pub n_points: usize,
    pub replications: usize,
    pub probe_points: Vec<Vec<f64>>,
    pub training: TrainingConfig,
}

pub fn benchmark_preset(kind: SimulatorKind, seed: u64) -> BenchmarkPreset {
    let (n_points, replications, probe_points) = match kind {
        SimulatorKind::Sim1d => (60, 50, vec![vec![0.1], vec![0.4], vec![0.85]]),
        SimulatorKind::BlackScholes => (60, 50, vec![vec![0.08, 0.375], vec![0.05, 0.23], vec![0.01, 0.15]]),
        SimulatorKind::SdeEm => (60, 50, vec![vec![1.2, 0.3], vec![1.4, 0.5], vec![1.8, 0.8]]),
        SimulatorKind::Sir => (60, 40, vec![vec![1714.0, 165.0], vec![1600.0, 100.0], vec![1364.0, 61.0]]),
    };
    BenchmarkPreset {
        simulator: Simulator::standard(kind),
        n_points,
        replications,
        probe_points,
        training: TrainingConfig::benchmark(kind, seed),
    }
}

/// Which experiment size a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepVariable {
    /// Number of design points.
    N,
    /// Replications per point.
    R,
    /// Both at once: a level `L` means `N = R = L`.
    NxR,
    /// Noise dimension.
    Nz,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub varying: SweepVariable,
    pub levels: Vec<usize>,
    /// Values used for whichever of `N`, `R`, `N_z` is not varied.
    pub n_points: usize,
    pub replications: usize,
    pub noise_dim: usize,
    pub probe_points: Vec<Vec<f64>>,
    pub repeats: usize,
    pub seed: u64,
}

impl SweepSpec {
    pub fn validate(&self, sim: &Simulator) -> Result<()> {
        if self.levels.is_empty() || self.levels.contains(&0) {
            return Err(Error::ConfigInvalid("sweep levels must be non-empty and positive".into()));
        }
        if self.repeats == 0 || self.n_points == 0 || self.replications == 0 || self.noise_dim == 0 {
            return Err(Error::ConfigInvalid("sweep repeats, N, R and N_z must be positive".into()));
        }
        if self.probe_points.is_empty() {
            return Err(Error::ConfigInvalid("sweep needs at least one probe point".into()));
        }
        for x in &self.probe_points {
            check_dim(sim.input_dim(), x.len())?;
            sim.check_input(x)?;
        }
        Ok(())
    }

    /// `(N, R, N_z)` at a level.
    pub fn sizes(&self, level: usize) -> (usize, usize, usize) {
        match self.varying {
            SweepVariable::N => (level, self.replications, self.noise_dim),
            SweepVariable::R => (self.n_points, level, self.noise_dim),
            SweepVariable::NxR => (level, level, self.noise_dim),
            SweepVariable::Nz => (self.n_points, self.replications, level),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub level: usize,
    pub repeat: usize,
    pub probe_id: usize,
    pub hellinger: f64,
}

/// Trains and scores one `(level, repeat)` cell. Data, training and
/// evaluation seeds are keyed by the level value and repeat index, so a cell's
/// result does not depend on which other cells exist.
pub fn run_sweep_cell(
    spec: &SweepSpec,
    sim: &Simulator,
    template: &TrainingConfig,
    references: &[Reference],
    settings: &EvaluationSettings,
    level: usize,
    repeat: usize,
) -> Result<Vec<SweepRow>> {
    check_dim(spec.probe_points.len(), references.len())?;
    let key = [level as u64, repeat as u64];
    let (n, r, nz) = spec.sizes(level);
    let data = generate_dataset(
        &ExperimentalDesign::for_simulator(sim, n, r, derive_seed(spec.seed, "sweep-data", &key)),
        sim,
    )?;
    let mut cfg = template.clone();
    cfg.noise_dim = nz;
    cfg.batch_size = cfg.batch_size.min(data.n_rows());
    cfg.seed = derive_seed(spec.seed, "sweep-train", &key);
    let model = train(&data, &cfg)?;
    spec.probe_points
        .iter()
        .zip(references)
        .enumerate()
        .map(|(probe_id, (x, reference))| {
            let seed = derive_seed(spec.seed, "sweep-eval", &[level as u64, repeat as u64, probe_id as u64]);
            let p = score_point(&model, x, reference, settings, seed)?;
            Ok(SweepRow { level, repeat, probe_id, hellinger: p.hellinger })
        })
        .collect()
}

pub fn probe_references(spec: &SweepSpec, sim: &Simulator, settings: &EvaluationSettings) -> Result<Vec<Reference>> {
    spec.probe_points.iter().map(|x| reference_at(sim, x, settings)).collect()
}

/// Every `(level, repeat)` cell, in level-major order.
pub fn run_sweep(
    spec: &SweepSpec,
    sim: &Simulator,
    template: &TrainingConfig,
    settings: &EvaluationSettings,
) -> Result<Vec<SweepRow>> {
    spec.validate(sim)?;
    template.validate()?;
    let references = probe_references(spec, sim, settings)?;
    let cells: Vec<(usize, usize)> =
        spec.levels.iter().flat_map(|&l| (0..spec.repeats).map(move |r| (l, r))).collect();
    let rows = cells
        .par_iter()
        .map(|&(l, r)| run_sweep_cell(spec, sim, template, &references, settings, l, r))
        .collect::<Result<Vec<_>>>()?;
    Ok(rows.into_iter().flatten().collect())
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("level,repeat,probe_id,hellinger\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{}", r.level, r.repeat, r.probe_id, r.hellinger);
    }
    out
}

/// Mean Hellinger over repeats and probe points, per level, in level order
/// of first appearance.
pub fn level_means(rows: &[SweepRow]) -> Vec<(usize, f64)> {
    let mut out: Vec<(usize, f64, usize)> = Vec::new();
    for r in rows {
        match out.iter_mut().find(|(l, _, _)| *l == r.level) {
            Some(e) => {
                e.1 += r.hellinger;
                e.2 += 1;
            }
            None => out.push((r.level, r.hellinger, 1)),
        }
    }
    out.into_iter().map(|(l, s, c)| (l, s / c as f64)).collect()
}
