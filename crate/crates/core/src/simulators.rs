//! Benchmark stochastic simulators and experimental-design generation.
//!
//! * `sim1d`: `Y = sin(2π/3·x + π/6) · (Z₁Z₂)^{cos x}` with lognormal latents.
//! * `black_scholes`: the closed-form stock price after one year,
//!   `Y = exp(x₁ − x₂²/2 + x₂ z)`.
//! * `sde_em`: Euler–Maruyama paths of `dY = (x₁ − Y)dt + (νY + 1)x₂ dW`,
//!   read at `t = 10`.
//! * `sir`: Gillespie simulation of the stochastic SIR chain until the
//!   infected compartment empties; the output is the outbreak's final size.

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Provenance};
use crate::error::{check_dim, Error, Result};
use crate::seed::{derive_rng, derive_seed, rng_from_seed};

/// Seed for empirical reference pools; kept apart from any training seed.
pub const ORACLE_SEED: u64 = 0x0DDB_1A5E_5EED_0001;
/// Default size of an empirical reference pool.
pub const REFERENCE_POOL_SIZE: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimulatorKind {
    Sim1d,
    BlackScholes,
    SdeEm,
    Sir,
}

impl SimulatorKind {
    pub const ALL: [SimulatorKind; 4] =
        [SimulatorKind::Sim1d, SimulatorKind::BlackScholes, SimulatorKind::SdeEm, SimulatorKind::Sir];

    pub fn name(self) -> &'static str {
        match self {
            SimulatorKind::Sim1d => "sim1d",
            SimulatorKind::BlackScholes => "black_scholes",
            SimulatorKind::SdeEm => "sde_em",
            SimulatorKind::Sir => "sir",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| Error::ConfigInvalid(format!("unknown simulator '{name}'")))
    }
}

impl std::fmt::Display for SimulatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Which signed quantity the SIR simulator reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SirQoi {
    /// `S₀ − S_{t_a}`, the number of infections during the outbreak (≥ 0).
    #[default]
    FinalSize,
    /// `S_{t_a} − S₀` (≤ 0).
    SusceptibleChange,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sim1dParams {
    /// Standard deviation of `log Z` for each latent. The default `sqrt(3/16)`
    /// gives `σ(x) = sqrt(3/8)·cos x` for `log Y`.
    pub latent_log_std: f64,
}

impl Default for Sim1dParams {
    fn default() -> Self {
        Self { latent_log_std: (3.0_f64 / 16.0).sqrt() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SdeParams {
    pub nu: f64,
    pub dt: f64,
    pub horizon: f64,
    pub y0: f64,
}

impl Default for SdeParams {
    fn default() -> Self {
        Self { nu: 0.2, dt: 0.01, horizon: 10.0, y0: 0.0 }
    }
}

impl SdeParams {
    pub fn n_steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SirParams {
    pub population: u32,
    pub beta: f64,
    pub gamma: f64,
    pub qoi: SirQoi,
}

impl Default for SirParams {
    fn default() -> Self {
        Self { population: 2000, beta: 0.5, gamma: 0.5, qoi: SirQoi::FinalSize }
    }
}

/// A configured benchmark simulator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Simulator {
    Sim1d(Sim1dParams),
    BlackScholes,
    SdeEm(SdeParams),
    Sir(SirParams),
}

impl Simulator {
    pub fn standard(kind: SimulatorKind) -> Self {
        match kind {
            SimulatorKind::Sim1d => Simulator::Sim1d(Sim1dParams::default()),
            SimulatorKind::BlackScholes => Simulator::BlackScholes,
            SimulatorKind::SdeEm => Simulator::SdeEm(SdeParams::default()),
            SimulatorKind::Sir => Simulator::Sir(SirParams::default()),
        }
    }

    pub fn kind(&self) -> SimulatorKind {
        match self {
            Simulator::Sim1d(_) => SimulatorKind::Sim1d,
            Simulator::BlackScholes => SimulatorKind::BlackScholes,
            Simulator::SdeEm(_) => SimulatorKind::SdeEm,
            Simulator::Sir(_) => SimulatorKind::Sir,
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Simulator::Sim1d(_) => 1,
            _ => 2,
        }
    }

    /// Input ranges of the benchmark's design distribution.
    pub fn domain(&self) -> Vec<(f64, f64)> {
        match self {
            Simulator::Sim1d(_) => vec![(0.0, 1.0)],
            Simulator::BlackScholes => vec![(0.0, 0.1), (0.0, 0.4)],
            Simulator::SdeEm(_) => vec![(0.9, 2.0), (0.1, 1.0)],
            Simulator::Sir(_) => vec![(1200.0, 1800.0), (20.0, 200.0)],
        }
    }

    /// Maps a raw design coordinate onto what the simulator actually runs
    /// (SIR populations are integers).
    pub fn canonical_input(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Simulator::Sir(_) => x.iter().map(|v| v.round()).collect(),
            _ => x.to_vec(),
        }
    }

    pub fn check_input(&self, x: &[f64]) -> Result<()> {
        check_dim(self.input_dim(), x.len())?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::DomainError("non-finite input".into()));
        }
        match self {
            Simulator::Sim1d(_) => {
                if sim1d_scale(x[0]) <= 0.0 {
                    return Err(Error::DomainError(format!("sim1d requires sin(2π/3·x + π/6) > 0, x = {}", x[0])));
                }
            }
            Simulator::BlackScholes => {
                if !(0.0..=0.1).contains(&x[0]) || !(0.0..=0.4).contains(&x[1]) {
                    return Err(Error::DomainError(format!("black_scholes requires x1 ∈ [0, 0.1], x2 ∈ [0, 0.4], got {x:?}")));
                }
            }
            Simulator::SdeEm(_) => {}
            Simulator::Sir(p) => {
                sir_initial_state(p, x)?;
            }
        }
        Ok(())
    }

    /// `n` independent draws of the output at `x`, seeded by `seed`.
    pub fn sample(&self, x: &[f64], n: usize, seed: u64) -> Result<Vec<f64>> {
        self.sample_with(x, n, &mut rng_from_seed(seed))
    }

    pub fn sample_with(&self, x: &[f64], n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            out.push(self.draw(x, rng)?);
        }
        Ok(out)
    }

    fn draw(&self, x: &[f64], rng: &mut ChaCha8Rng) -> Result<f64> {
        match self {
            Simulator::Sim1d(p) => Ok(sim1d_draw(p, x[0], rng)),
            Simulator::BlackScholes => Ok(black_scholes_draw(x[0], x[1], rng)),
            Simulator::SdeEm(p) => sde_em_draw(p, x[0], x[1], rng),
            Simulator::Sir(p) => {
                let (s0, i0) = sir_initial_state(p, x)?;
                let s_end = gillespie_sir(p, s0, i0, rng, |_| {});
                Ok(match p.qoi {
                    SirQoi::FinalSize => f64::from(s0 - s_end),
                    SirQoi::SusceptibleChange => f64::from(s_end) - f64::from(s0),
                })
            }
        }
    }

    /// Reference law of the output at `x`: closed form where it exists,
    /// otherwise a pool of draws from a fixed oracle seed.
    pub fn reference(&self, x: &[f64], pool_size: usize) -> Result<ReferenceDistribution> {
        self.check_input(x)?;
        match self {
            Simulator::Sim1d(p) => {
                let cos = x[0].cos();
                Ok(ReferenceDistribution::LogNormal {
                    mu: sim1d_scale(x[0]).ln(),
                    sigma: (2.0_f64).sqrt() * p.latent_log_std * cos.abs(),
                })
            }
            Simulator::BlackScholes => {
                Ok(ReferenceDistribution::LogNormal { mu: x[0] - 0.5 * x[1] * x[1], sigma: x[1] })
            }
            Simulator::SdeEm(_) | Simulator::Sir(_) => {
                let key: Vec<u64> = x.iter().map(|v| v.to_bits()).collect();
                let seed = derive_seed(ORACLE_SEED, self.kind().name(), &key);
                Ok(ReferenceDistribution::Empirical { samples: self.sample(x, pool_size, seed)? })
            }
        }
    }
}

fn sim1d_scale(x: f64) -> f64 {
    (2.0 * std::f64::consts::PI / 3.0 * x + std::f64::consts::PI / 6.0).sin()
}

fn sim1d_draw(p: &Sim1dParams, x: f64, rng: &mut ChaCha8Rng) -> f64 {
    let z1: f64 = StandardNormal.sample(rng);
    let z2: f64 = StandardNormal.sample(rng);
    let latent = (p.latent_log_std * z1).exp() * (p.latent_log_std * z2).exp();
    sim1d_scale(x) * latent.powf(x.cos())
}

fn black_scholes_draw(x1: f64, x2: f64, rng: &mut ChaCha8Rng) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    (x1 - 0.5 * x2 * x2 + x2 * z).exp()
}

/// One Euler–Maruyama path; returns `Y` at the horizon.
pub fn sde_em_draw(p: &SdeParams, x1: f64, x2: f64, rng: &mut ChaCha8Rng) -> Result<f64> {
    let sqrt_dt = p.dt.sqrt();
    let mut y = p.y0;
    for _ in 0..p.n_steps() {
        let xi: f64 = StandardNormal.sample(rng);
        y += (x1 - y) * p.dt + (p.nu * y + 1.0) * x2 * sqrt_dt * xi;
    }
    if !y.is_finite() {
        return Err(Error::NumericalBlowup(format!("Euler–Maruyama path diverged at x = ({x1}, {x2})")));
    }
    Ok(y)
}

fn sir_initial_state(p: &SirParams, x: &[f64]) -> Result<(u32, u32)> {
    let (s0, i0) = (x[0].round(), x[1].round());
    if s0 < 0.0 || i0 < 0.0 || s0 + i0 > f64::from(p.population) {
        return Err(Error::InvalidPopulation(format!(
            "need S0, I0 ≥ 0 and S0 + I0 ≤ {}, got ({s0}, {i0})",
            p.population
        )));
    }
    Ok((s0 as u32, i0 as u32))
}

/// State of the SIR chain right after an event (or at the start).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SirEvent {
    pub time: f64,
    pub susceptible: u32,
    pub infected: u32,
    pub recovered: u32,
}

/// Simulates the chain to absorption (`I = 0`) and returns `S_{t_a}`.
/// `observe` sees the initial state and the state after every event.
///
/// Infection `S→S−1, I→I+1` fires at rate `β S I / N`, recovery `I→I−1`
/// at rate `γ I`.
pub fn gillespie_sir(
    p: &SirParams,
    s0: u32,
    i0: u32,
    rng: &mut ChaCha8Rng,
    mut observe: impl FnMut(SirEvent),
) -> u32 {
    let n = f64::from(p.population);
    let (mut s, mut i) = (s0, i0);
    let mut r = p.population - s0 - i0;
    let mut t = 0.0;
    observe(SirEvent { time: t, susceptible: s, infected: i, recovered: r });
    let unit = Uniform::new(0.0, 1.0).expect("valid range");
    while i > 0 {
        let infect = p.beta * f64::from(s) * f64::from(i) / n;
        let recover = p.gamma * f64::from(i);
        let total = infect + recover;
        let wait: f64 = Exp1.sample(rng);
        t += wait / total;
        if unit.sample(rng) * total < infect {
            s -= 1;
            i += 1;
        } else {
            i -= 1;
            r += 1;
        }
        observe(SirEvent { time: t, susceptible: s, infected: i, recovered: r });
    }
    s
}

/// Reference law used when scoring a surrogate.
#[derive(Debug, Clone, PartialEq)]
pub enum ReferenceDistribution {
    /// `log Y ~ N(mu, sigma²)`.
    LogNormal { mu: f64, sigma: f64 },
    Empirical { samples: Vec<f64> },
}

impl ReferenceDistribution {
    pub fn sample_count(&self) -> Option<usize> {
        match self {
            ReferenceDistribution::LogNormal { .. } => None,
            ReferenceDistribution::Empirical { samples } => Some(samples.len()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DesignSampling {
    #[default]
    UniformRandom,
    /// Interior-centred tensor grid: `lo + (i + 1)/(k + 1)·(hi − lo)` per axis.
    Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentalDesign {
    pub ranges: Vec<(f64, f64)>,
    pub n_points: usize,
    pub replications: usize,
    #[serde(default)]
    pub sampling: DesignSampling,
    pub seed: u64,
}

impl ExperimentalDesign {
    /// Uniform random design over the simulator's benchmark domain.
    pub fn for_simulator(sim: &Simulator, n_points: usize, replications: usize, seed: u64) -> Self {
        Self { ranges: sim.domain(), n_points, replications, sampling: DesignSampling::UniformRandom, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_points == 0 || self.replications == 0 {
            return Err(Error::ConfigInvalid("design needs N ≥ 1 and R ≥ 1".into()));
        }
        if self.ranges.is_empty() {
            return Err(Error::ConfigInvalid("design needs at least one input range".into()));
        }
        for &(lo, hi) in &self.ranges {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::ConfigInvalid(format!("invalid range ({lo}, {hi})")));
            }
        }
        Ok(())
    }

    /// The `N` design points, before simulator canonicalisation.
    pub fn points(&self) -> Result<Vec<Vec<f64>>> {
        self.validate()?;
        let d = self.ranges.len();
        match self.sampling {
            DesignSampling::UniformRandom => {
                let mut rng = derive_rng(self.seed, "design", &[]);
                let unit = Uniform::new(0.0, 1.0).expect("valid range");
                Ok((0..self.n_points)
                    .map(|_| self.ranges.iter().map(|&(lo, hi)| lo + (hi - lo) * unit.sample(&mut rng)).collect())
                    .collect())
            }
            DesignSampling::Grid => {
                let k = (self.n_points as f64).powf(1.0 / d as f64).round() as usize;
                if k.pow(d as u32) != self.n_points {
                    return Err(Error::ConfigInvalid(format!(
                        "grid sampling needs N to be a perfect {d}-th power, got {}",
                        self.n_points
                    )));
                }
                let axis = |j: usize, (lo, hi): (f64, f64)| lo + (j + 1) as f64 / (k + 1) as f64 * (hi - lo);
                Ok((0..self.n_points)
                    .map(|mut idx| {
                        let mut p = vec![0.0; d];
                        for a in (0..d).rev() {
                            p[a] = axis(idx % k, self.ranges[a]);
                            idx /= k;
                        }
                        p
                    })
                    .collect())
            }
        }
    }
}

/// Runs the simulator `R` times at each of the `N` design points. Each
/// replication draws from its own stream keyed by `(seed, point, replication)`.
pub fn generate_dataset(design: &ExperimentalDesign, sim: &Simulator) -> Result<Dataset> {
    design.validate()?;
    check_dim(sim.input_dim(), design.ranges.len())?;
    for (&(lo, hi), &(dlo, dhi)) in design.ranges.iter().zip(&sim.domain()) {
        if lo < dlo || hi > dhi {
            return Err(Error::DomainError(format!(
                "design range ({lo}, {hi}) exceeds {} domain ({dlo}, {dhi})",
                sim.kind()
            )));
        }
    }
    let points: Vec<Vec<f64>> = design.points()?.iter().map(|x| sim.canonical_input(x)).collect();
    let mut replications = Vec::with_capacity(points.len());
    for (i, x) in points.iter().enumerate() {
        sim.check_input(x)?;
        let mut reps = Vec::with_capacity(design.replications);
        for r in 0..design.replications {
            let mut rng = derive_rng(design.seed, "replication", &[i as u64, r as u64]);
            reps.push(vec![sim.draw(x, &mut rng)?]);
        }
        replications.push(reps);
    }
    Dataset::new(
        points,
        replications,
        Provenance { simulator: Some(sim.kind().name().to_string()), seed: Some(design.seed) },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_and_se(v: &[f64]) -> (f64, f64) {
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
        (m, (var / n).sqrt())
    }

    #[test]
    fn sim1d_reference_parameters() {
        let sim = Simulator::standard(SimulatorKind::Sim1d);
        let ReferenceDistribution::LogNormal { mu, sigma } = sim.reference(&[0.85], 0).unwrap() else { panic!() };
        let arg = 0.85 * 2.0 * std::f64::consts::PI / 3.0 + std::f64::consts::PI / 6.0;
        assert!((mu - arg.sin().ln()).abs() < 1e-14);
        assert!((sigma - (3.0_f64 / 8.0).sqrt() * 0.85_f64.cos()).abs() < 1e-14);
    }

    #[test]
    fn sim1d_deterministic_limit() {
        let sim = Simulator::Sim1d(Sim1dParams { latent_log_std: 0.0 });
        for y in sim.sample(&[0.3], 5, 1).unwrap() {
            assert!((y - sim1d_scale(0.3)).abs() < 1e-15);
        }
        assert!(matches!(sim.sample(&[1.3], 1, 1), Err(Error::DomainError(_))));
    }

    #[test]
    fn black_scholes_reference_and_limit() {
        let sim = Simulator::BlackScholes;
        assert_eq!(
            sim.reference(&[0.08, 0.375], 0).unwrap(),
            ReferenceDistribution::LogNormal { mu: 0.08 - 0.375 * 0.375 / 2.0, sigma: 0.375 }
        );
        for y in sim.sample(&[0.05, 0.0], 4, 2).unwrap() {
            assert!((y - 0.05_f64.exp()).abs() < 1e-15);
        }
        assert!(sim.sample(&[0.2, 0.1], 1, 1).is_err());
    }

    #[test]
    fn sde_zero_volatility_relaxes_to_mean() {
        let sim = Simulator::SdeEm(SdeParams::default());
        let y = sim.sample(&[1.5, 0.0], 1, 3).unwrap()[0];
        let exact = 1.5 * (1.0 - (-10.0_f64).exp());
        assert!((y - exact).abs() < 1e-2);
    }

    #[test]
    fn sde_paths_are_seed_deterministic() {
        let sim = Simulator::standard(SimulatorKind::SdeEm);
        let a = sim.sample(&[1.2, 0.3], 20, 99).unwrap();
        let b = sim.sample(&[1.2, 0.3], 20, 99).unwrap();
        assert_eq!(a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        assert_ne!(a, sim.sample(&[1.2, 0.3], 20, 100).unwrap());
    }

    #[test]
    fn sir_trivial_cases() {
        let sim = Simulator::standard(SimulatorKind::Sir);
        assert_eq!(sim.sample(&[1500.0, 0.0], 3, 1).unwrap(), vec![0.0; 3]);
        assert_eq!(sim.sample(&[0.0, 50.0], 3, 1).unwrap(), vec![0.0; 3]);
        assert!(matches!(sim.sample(&[1900.0, 200.0], 1, 1), Err(Error::InvalidPopulation(_))));
        assert!(matches!(sim.sample(&[-1.0, 20.0], 1, 1), Err(Error::InvalidPopulation(_))));
        let ys = sim.sample(&[1600.0, 100.0], 50, 4).unwrap();
        assert!(ys.iter().all(|y| *y >= 0.0 && y.fract() == 0.0));
        let signed = Simulator::Sir(SirParams { qoi: SirQoi::SusceptibleChange, ..SirParams::default() });
        let neg = signed.sample(&[1600.0, 100.0], 50, 4).unwrap();
        assert!(ys.iter().zip(&neg).all(|(a, b)| *a == -*b));
    }

    #[test]
    fn sir_conserves_population_and_time_increases() {
        let p = SirParams::default();
        let mut rng = rng_from_seed(5);
        for _ in 0..20 {
            let mut last_t = -1.0;
            gillespie_sir(&p, 1700, 150, &mut rng, |e| {
                assert_eq!(e.susceptible + e.infected + e.recovered, 2000);
                assert!(e.time > last_t);
                last_t = e.time;
            });
        }
    }

    #[test]
    fn black_scholes_mean_within_three_se() {
        let ys = Simulator::BlackScholes.sample(&[0.08, 0.3], 200_000, 8).unwrap();
        let (m, se) = mean_and_se(&ys);
        assert!((m - 0.08_f64.exp()).abs() < 3.0 * se);
    }

    #[test]
    fn grid_design_is_interior_centred() {
        let d = ExperimentalDesign {
            ranges: vec![(0.0, 1.0)],
            n_points: 3,
            replications: 1,
            sampling: DesignSampling::Grid,
            seed: 0,
        };
        assert_eq!(d.points().unwrap(), vec![vec![0.25], vec![0.5], vec![0.75]]);
        let d2 = ExperimentalDesign { ranges: vec![(0.0, 1.0), (0.0, 2.0)], n_points: 4, ..d.clone() };
        assert_eq!(d2.points().unwrap().len(), 4);
        let bad = ExperimentalDesign { n_points: 3, ..d2 };
        assert!(bad.points().is_err());
    }

    #[test]
    fn dataset_generation_shapes_and_determinism() {
        let sim = Simulator::standard(SimulatorKind::Sim1d);
        let one = generate_dataset(&ExperimentalDesign::for_simulator(&sim, 1, 1, 3), &sim).unwrap();
        assert_eq!(one.n_rows(), 1);
        let design = ExperimentalDesign::for_simulator(&sim, 60, 50, 3);
        let ds = generate_dataset(&design, &sim).unwrap();
        assert_eq!(ds.n_rows(), 3000);
        assert_eq!(ds.n_points(), 60);
        assert_eq!(ds, generate_dataset(&design, &sim).unwrap());
        assert_eq!(ds.provenance.simulator.as_deref(), Some("sim1d"));

        let sir = Simulator::standard(SimulatorKind::Sir);
        let ds = generate_dataset(&ExperimentalDesign::for_simulator(&sir, 4, 2, 1), &sir).unwrap();
        assert!(ds.design_points.iter().flatten().all(|v| v.fract() == 0.0));

        let outside = ExperimentalDesign { ranges: vec![(0.0, 2.0)], ..design };
        assert!(matches!(generate_dataset(&outside, &sim), Err(Error::DomainError(_))));
    }

    #[test]
    fn empirical_reference_pool_is_fixed() {
        let sim = Simulator::standard(SimulatorKind::SdeEm);
        let a = sim.reference(&[1.2, 0.3], 200).unwrap();
        assert_eq!(a.sample_count(), Some(200));
        assert_eq!(a, sim.reference(&[1.2, 0.3], 200).unwrap());
    }
}
