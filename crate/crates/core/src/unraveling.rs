//! Monte Carlo unraveling into random unitary trajectories.
//!
//! Each trajectory applies `exp(-i(H dt + Σ_k γ_k L_k ΔB_k))` per step with
//! independent real increments `ΔB_k ~ N(0, dt)`. For Hermitian `L_k` the
//! average over increments reproduces `-½ γ_k² [L_k, [L_k, ρ]]` with no drift
//! correction, so the ensemble mean converges to the master equation.
//!
//! # Seeds
//!
//! Trajectory `i` draws from `ChaCha8Rng::from_seed(trajectory_seed(master, i))`
//! where, with `splitmix64` the standard SplitMix64 output function
//! (increment `0x9E3779B97F4A7C15`, multipliers `0xBF58476D1CE4E5B9` and
//! `0x94D049BB133111EB`):
//!
//! ```text
//! state = master ^ splitmix64(&mut i)       // i mixed once on its own
//! seed  = le_bytes(splitmix64(&mut state)) ×4  // 32 bytes
//! ```
//!
//! Increments are `sqrt(dt) · z` with `z` from `rand_distr::StandardNormal`,
//! drawn per step in channel order. Streams therefore depend only on
//! `(master, i)`, never on execution order.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::Matrix2;
use num_traits::Float;
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use crate::algebra::{BlochVector, GeneratorBasis};
use crate::grid::TimeGrid;
use crate::linalg::{expm, trace, HermitianExp};
use crate::oracle::MatrixProblem;
use crate::propagator::{EvolutionProblem, Method, Picture, Trajectory, TrajectoryMeta};
use crate::{CMatrix, Error, RMatrix, RVector, Result, C64};

const UNIT_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseConfig {
    pub master_seed: u64,
    pub trajectories: usize,
    pub dt: f64,
    pub channels: usize,
}

impl NoiseConfig {
    pub fn new(master_seed: u64, trajectories: usize, dt: f64, channels: usize) -> Result<Self> {
        let config = Self {
            master_seed,
            trajectories,
            dt,
            channels,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trajectories == 0 {
            return Err(Error::EmptyEnsemble);
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "dt {} must be positive",
                self.dt
            )));
        }
        Ok(())
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 32-byte ChaCha seed for trajectory `index`.
pub fn trajectory_seed(master_seed: u64, index: u64) -> [u8; 32] {
    let mut i = index;
    let mut state = master_seed ^ splitmix64(&mut i);
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    seed
}

/// Brownian increments of one trajectory.
#[derive(Clone, Debug)]
pub struct IncrementStream {
    rng: ChaCha8Rng,
    channels: usize,
    sqrt_dt: f64,
}

impl IncrementStream {
    pub fn new(config: &NoiseConfig, index: u64) -> Self {
        Self::with_step(config.master_seed, index, config.channels, config.dt)
    }

    fn with_step(master_seed: u64, index: u64, channels: usize, dt: f64) -> Self {
        Self {
            rng: ChaCha8Rng::from_seed(trajectory_seed(master_seed, index)),
            channels,
            sqrt_dt: Float::sqrt(dt),
        }
    }

    /// Next per-channel increment vector.
    pub fn next_increment(&mut self) -> RVector {
        let mut out = RVector::zeros(self.channels);
        self.fill(out.as_mut_slice());
        out
    }

    fn fill(&mut self, out: &mut [f64]) {
        for x in out {
            let z: f64 = StandardNormal.sample(&mut self.rng);
            *x = self.sqrt_dt * z;
        }
    }
}

/// Every increment of every trajectory over `grid`, indexed
/// `[trajectory][step]`. Intended for inspection; the ensembles draw
/// increments on the fly.
pub fn sample_increments(config: &NoiseConfig, grid: &TimeGrid) -> Result<Vec<Vec<RVector>>> {
    config.validate()?;
    let steps: usize = grid.exact_substeps(config.dt)?.iter().sum();
    Ok((0..config.trajectories as u64)
        .map(|i| {
            let mut stream = IncrementStream::new(config, i);
            (0..steps).map(|_| stream.next_increment()).collect()
        })
        .collect())
}

/// Pure or mixed trajectory state.
#[derive(Clone, Debug, PartialEq)]
pub enum QuantumState {
    Pure(nalgebra::DVector<C64>),
    Mixed(CMatrix),
}

/// `exp(-i(H dt + Σ_k γ_k L_k ΔB_k))`.
pub fn step_unitary(
    h: &CMatrix,
    lindblads: &[CMatrix],
    gammas: &[f64],
    increments: &RVector,
    dt: f64,
) -> Result<CMatrix> {
    if lindblads.len() != gammas.len() || lindblads.len() != increments.len() {
        return Err(Error::DimensionMismatch {
            expected: lindblads.len(),
            found: if gammas.len() != lindblads.len() {
                gammas.len()
            } else {
                increments.len()
            },
        });
    }
    let mut x = h * C64::new(dt, 0.0);
    for ((l, g), db) in lindblads.iter().zip(gammas).zip(increments.iter()) {
        x += l * C64::new(g * db, 0.0);
    }
    Ok(expm(&(x * C64::new(0.0, -1.0))))
}

/// One exact unitary step of a normalized state.
pub fn trajectory_step(
    state: &QuantumState,
    h: &CMatrix,
    lindblads: &[CMatrix],
    gammas: &[f64],
    increments: &RVector,
    dt: f64,
) -> Result<QuantumState> {
    let u = step_unitary(h, lindblads, gammas, increments, dt)?;
    match state {
        QuantumState::Pure(psi) => {
            let deviation = (psi.norm() - 1.0).abs();
            if deviation > UNIT_TOL {
                return Err(Error::NotNormalized { deviation });
            }
            Ok(QuantumState::Pure(u * psi))
        }
        QuantumState::Mixed(rho) => {
            let tr = trace(rho);
            if (tr - C64::new(1.0, 0.0)).norm() > UNIT_TOL {
                return Err(Error::TraceNotUnity { trace: tr.re });
            }
            Ok(QuantumState::Mixed(&u * rho * u.adjoint()))
        }
    }
}

/// Mean Bloch trajectory with standard errors.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleResult {
    pub trajectory: Trajectory,
    pub trajectories: usize,
}

/// Per-step schedule shared by all trajectories.
struct Schedule {
    /// Step size and midpoint time of each step.
    steps: Vec<(f64, f64)>,
    /// Number of steps preceding each output point.
    outputs: Vec<usize>,
}

impl Schedule {
    fn new(grid: &TimeGrid, dt: f64) -> Result<Self> {
        let counts = grid.exact_substeps(dt)?;
        let mut steps = Vec::new();
        let mut outputs = Vec::with_capacity(grid.len());
        outputs.push(0);
        for (w, &n) in grid.times().windows(2).zip(&counts) {
            let h = (w[1] - w[0]) / n as f64;
            for j in 0..n {
                steps.push((h, w[0] + (j as f64 + 0.5) * h));
            }
            outputs.push(steps.len());
        }
        Ok(Self { steps, outputs })
    }
}

/// Running mean and sum of squared deviations, accumulated in trajectory
/// order so the reduction is deterministic.
struct Welford {
    count: usize,
    mean: Vec<RVector>,
    m2: Vec<RVector>,
}

impl Welford {
    fn new(points: usize, dim: usize) -> Self {
        Self {
            count: 0,
            mean: alloc::vec![RVector::zeros(dim); points],
            m2: alloc::vec![RVector::zeros(dim); points],
        }
    }

    fn push(&mut self, samples: &[RVector]) {
        self.count += 1;
        let n = self.count as f64;
        for ((mean, m2), x) in self.mean.iter_mut().zip(&mut self.m2).zip(samples) {
            let delta = x - &*mean;
            *mean += &delta / n;
            let delta2 = x - &*mean;
            *m2 += delta.component_mul(&delta2);
        }
    }

    /// Sample standard deviation over `√M`; infinite for a single trajectory.
    fn finish(self) -> (Vec<BlochVector>, Vec<RVector>) {
        let m = self.count as f64;
        let stderr = self
            .m2
            .iter()
            .map(|m2| {
                if self.count < 2 {
                    m2.map(|_| f64::INFINITY)
                } else {
                    m2.map(|s| Float::sqrt(s / (m - 1.0) / m))
                }
            })
            .collect();
        (
            self.mean.into_iter().map(BlochVector::new).collect(),
            stderr,
        )
    }
}

fn ensemble_meta(method: Method, config: &NoiseConfig) -> TrajectoryMeta {
    let mut meta = TrajectoryMeta::new(method);
    meta.dt = Some(config.dt);
    meta.trajectories = Some(config.trajectories);
    meta.seed = Some(config.master_seed);
    meta
}

/// `(N/s) Re Tr(ρ λ_k)` without the validation done by `bloch_encode`.
struct Encoder {
    matrices: Vec<CMatrix>,
    factor: f64,
}

impl Encoder {
    fn new(basis: &GeneratorBasis) -> Self {
        Self {
            matrices: basis.matrices().to_vec(),
            factor: basis.dim() as f64 / basis.scale(),
        }
    }

    fn encode(&self, rho: &CMatrix) -> RVector {
        RVector::from_iterator(
            self.matrices.len(),
            self.matrices.iter().map(|l| {
                let mut acc = 0.0;
                for i in 0..rho.nrows() {
                    for k in 0..rho.ncols() {
                        acc += (rho[(i, k)] * l[(k, i)]).re;
                    }
                }
                self.factor * acc
            }),
        )
    }
}

/// Matrix-level ensemble: averages the Bloch vectors of `U ρ(0) U†` over
/// `config.trajectories` random unitaries.
///
/// With [`Picture::Heisenberg`] every sample is mapped by
/// `e^{iHt} ρ e^{-iHt}` before encoding. Channel strengths are evaluated at
/// each step's midpoint.
pub fn ensemble_bloch(
    problem: &MatrixProblem,
    basis: &GeneratorBasis,
    config: &NoiseConfig,
    grid: &TimeGrid,
    picture: Picture,
) -> Result<EnsembleResult> {
    config.validate()?;
    let n = problem.dim();
    if basis.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: basis.dim(),
        });
    }
    let k = problem.lindblads().len();
    if config.channels != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: config.channels,
        });
    }
    let schedule = Schedule::new(grid, config.dt)?;
    let gammas: Vec<Vec<f64>> = schedule
        .steps
        .iter()
        .map(|&(_, t)| problem.gammas().iter().map(|g| g.at(t)).collect())
        .collect();
    let frame: Vec<CMatrix> = match picture {
        Picture::Heisenberg => {
            let e = HermitianExp::new(problem.h());
            grid.times().iter().map(|&t| e.unitary(t)).collect()
        }
        Picture::Schroedinger => Vec::new(),
    };
    let encoder = Encoder::new(basis);
    let mut stats = Welford::new(grid.len(), basis.bloch_dim());
    let mut samples = alloc::vec![RVector::zeros(basis.bloch_dim()); grid.len()];
    let mut db = alloc::vec![0.0; k];

    let qubit = (n == 2).then(|| QubitKernel::new(problem));
    for i in 0..config.trajectories as u64 {
        let mut stream = IncrementStream::new(config, i);
        let mut out = 0;
        let emit = |rho: &CMatrix, out: &mut usize, samples: &mut [RVector]| {
            let rho = match frame.get(*out) {
                Some(u) => u.adjoint() * rho * u,
                None => rho.clone(),
            };
            samples[*out] = encoder.encode(&rho);
            *out += 1;
        };
        match &qubit {
            Some(kernel) => {
                let mut rho = kernel.rho0;
                for (s, &(h, _)) in schedule.steps.iter().enumerate() {
                    while schedule.outputs[out] == s {
                        emit(&kernel.to_dynamic(&rho), &mut out, &mut samples);
                    }
                    stream.fill(&mut db);
                    let u = kernel.unitary(h, &gammas[s], &db);
                    rho = u * rho * u.adjoint();
                }
                while out < grid.len() {
                    emit(&kernel.to_dynamic(&rho), &mut out, &mut samples);
                }
            }
            None => {
                let mut rho = problem.rho0().clone();
                let mut inc = RVector::zeros(k);
                for (s, &(h, _)) in schedule.steps.iter().enumerate() {
                    while schedule.outputs[out] == s {
                        emit(&rho, &mut out, &mut samples);
                    }
                    stream.fill(inc.as_mut_slice());
                    let u = step_unitary(problem.h(), problem.lindblads(), &gammas[s], &inc, h)?;
                    rho = &u * rho * u.adjoint();
                }
                while out < grid.len() {
                    emit(&rho, &mut out, &mut samples);
                }
            }
        }
        stats.push(&samples);
    }

    let (bloch, stderr) = stats.finish();
    Ok(EnsembleResult {
        trajectory: Trajectory {
            times: grid.times().to_vec(),
            bloch,
            stderr: Some(stderr),
            meta: ensemble_meta(Method::MonteCarlo, config),
        },
        trajectories: config.trajectories,
    })
}

type C2 = Matrix2<C64>;

/// Allocation-free step for two-level systems, using
/// `exp(-i(a₀ + a·σ)) = e^{-ia₀}(cos|a| - i sin|a| â·σ)`.
struct QubitKernel {
    h: C2,
    lindblads: Vec<C2>,
    rho0: C2,
}

impl QubitKernel {
    fn new(problem: &MatrixProblem) -> Self {
        let fixed = |m: &CMatrix| C2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
        Self {
            h: fixed(problem.h()),
            lindblads: problem.lindblads().iter().map(fixed).collect(),
            rho0: fixed(problem.rho0()),
        }
    }

    fn unitary(&self, dt: f64, gammas: &[f64], db: &[f64]) -> C2 {
        let mut x = self.h * C64::new(dt, 0.0);
        for ((l, g), b) in self.lindblads.iter().zip(gammas).zip(db) {
            x += l * C64::new(g * b, 0.0);
        }
        // Hermitian part only; the operators are Hermitian so this is exact
        let a0 = 0.5 * (x[(0, 0)].re + x[(1, 1)].re);
        let az = 0.5 * (x[(0, 0)].re - x[(1, 1)].re);
        let off = 0.5 * (x[(0, 1)] + x[(1, 0)].conj());
        let (ax, ay) = (off.re, -off.im);
        let norm = Float::sqrt(ax * ax + ay * ay + az * az);
        let (s, c) = Float::sin_cos(norm);
        let k = if norm > 0.0 { s / norm } else { 1.0 };
        let phase = C64::from_polar(1.0, -a0);
        C2::new(
            C64::new(c, -k * az),
            C64::new(-k * ay, -k * ax),
            C64::new(k * ay, -k * ax),
            C64::new(c, k * az),
        ) * phase
    }

    fn to_dynamic(&self, m: &C2) -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]])
    }
}

/// Matrix-free ensemble on Bloch vectors: each trajectory applies the
/// orthogonal step `r ← exp(-Σ_k γ_k ΔB_k A_k) r`, with `A_k` the adjoint
/// matrix of `l_k` transformed to the step's midpoint. The result is in the
/// Heisenberg picture unless the problem asks otherwise.
pub fn bloch_space_unraveling(
    problem: &EvolutionProblem,
    config: &NoiseConfig,
    grid: &TimeGrid,
) -> Result<EnsembleResult> {
    config.validate()?;
    let k = problem.channels().len();
    if config.channels != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: config.channels,
        });
    }
    let f = problem.structure();
    let d = problem.dim();
    let schedule = Schedule::new(grid, config.dt)?;
    let rotation = HermitianExp::from_antisymmetric(&f.adjoint_matrix(&problem.h().vector)?);

    // weighted generators per step: γ_k(t) A_{l_k^H(t)}
    let generators: Vec<Vec<RMatrix>> = schedule
        .steps
        .iter()
        .map(|&(_, t)| {
            let rot = rotation.rotation(t);
            problem
                .channels()
                .iter()
                .map(|ch| {
                    let lh = &rot * &ch.l.vector;
                    f.adjoint_matrix(&lh).map(|a| a * ch.gamma.at(t))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let frame: Vec<RMatrix> = match problem.picture() {
        Picture::Heisenberg => Vec::new(),
        Picture::Schroedinger => grid
            .times()
            .iter()
            .map(|&t| rotation.rotation(-t))
            .collect(),
    };

    let mut stats = Welford::new(grid.len(), d);
    let mut samples = alloc::vec![RVector::zeros(d); grid.len()];
    let mut db = alloc::vec![0.0; k];
    for i in 0..config.trajectories as u64 {
        let mut stream = IncrementStream::new(config, i);
        let mut r = problem.r0().components().clone();
        let mut out = 0;
        for (s, gens) in generators.iter().enumerate() {
            while schedule.outputs[out] == s {
                samples[out] = r.clone();
                out += 1;
            }
            stream.fill(&mut db);
            let mut m = RMatrix::zeros(d, d);
            for (a, b) in gens.iter().zip(&db) {
                m -= a * *b;
            }
            r = expm(&m) * r;
        }
        while out < grid.len() {
            samples[out] = r.clone();
            out += 1;
        }
        if !frame.is_empty() {
            for (sample, rot) in samples.iter_mut().zip(&frame) {
                *sample = rot * &*sample;
            }
        }
        stats.push(&samples);
    }

    let (bloch, stderr) = stats.finish();
    Ok(EnsembleResult {
        trajectory: Trajectory {
            times: grid.times().to_vec(),
            bloch,
            stderr: Some(stderr),
            meta: ensemble_meta(Method::BlochMonteCarlo, config),
        },
        trajectories: config.trajectories,
    })
}
