//! Closed-form Bloch propagation.
//!
//! In the Heisenberg picture the Bloch vector of
//! `dρ/dt = -i[H, ρ] - ½ Σ_k γ_k(t)² [L_k, [L_k, ρ]]` is the time-ordered
//! exponential
//!
//! ```text
//! r(t) = T exp( ∫₀ᵗ G(s) ds ) r(0),    G(s) = ½ Σ_k γ_k(s)² B_k(s)
//! ```
//!
//! where `B_k(s)` is the matrix of `l_k(s) ⊡ ·` and `l_k(s) = exp(s h⊙) l_k`
//! is the Heisenberg transform of the jump operator's Bloch part. Scalar
//! parts of `H` and `L_k` drop out of every commutator.
//!
//! [`evolve_formula`] integrates the equivalent linear ODE, [`dyson_series`]
//! sums the time-ordered series directly, [`perturbation_series`] expands in
//! the coupling, and the remaining functions are closed forms for special
//! cases.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_traits::Float;

use crate::algebra::{BlochVector, CoeffVector, StructureTensor};
use crate::grid::TimeGrid;
use crate::linalg::{expm, symmetric_norm, HermitianExp};
use crate::quadrature::GaussLegendre;
use crate::{Error, RMatrix, RVector, Result};

/// Deviation between full and half step above which a trajectory carries an
/// accuracy warning.
pub const STEP_HALVING_TOLERANCE: f64 = 1e-6;

/// Default Gauss-Legendre nodes per nesting level.
pub const DEFAULT_QUADRATURE_NODES: usize = 32;

const COMMUTE_TOL: f64 = 1e-12;

/// Time profile `γ(t)` multiplying a jump operator; the dissipator scales
/// with `γ(t)²`.
#[derive(Clone, Debug, PartialEq)]
pub enum GammaProfile {
    Constant(f64),
    /// `γ₀ exp(-t / τ)`.
    ExponentialDecay {
        gamma0: f64,
        tau: f64,
    },
    /// Piecewise-linear interpolation, clamped outside the table.
    Tabulated {
        times: Vec<f64>,
        values: Vec<f64>,
    },
}

impl GammaProfile {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidGamma(msg));
        match self {
            Self::Constant(g) if !(*g >= 0.0) || !g.is_finite() => bad(format!("constant {g}")),
            Self::ExponentialDecay { gamma0, tau }
                if !(*gamma0 >= 0.0) || !(*tau > 0.0) || !gamma0.is_finite() =>
            {
                bad(format!("exponential decay gamma0 {gamma0}, tau {tau}"))
            }
            Self::Tabulated { times, values } => {
                if times.is_empty() || times.len() != values.len() {
                    return bad(format!(
                        "table needs matching non-empty columns ({} times, {} values)",
                        times.len(),
                        values.len()
                    ));
                }
                if times.windows(2).any(|w| !(w[1] > w[0])) {
                    return bad("table times must be strictly increasing".into());
                }
                if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                    return bad("table values must be finite and non-negative".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn at(&self, t: f64) -> f64 {
        match self {
            Self::Constant(g) => *g,
            Self::ExponentialDecay { gamma0, tau } => gamma0 * Float::exp(-t / tau),
            Self::Tabulated { times, values } => {
                let last = times.len() - 1;
                if t <= times[0] {
                    return values[0];
                }
                if t >= times[last] {
                    return values[last];
                }
                let i = times.partition_point(|&x| x <= t) - 1;
                let w = (t - times[i]) / (times[i + 1] - times[i]);
                values[i] + w * (values[i + 1] - values[i])
            }
        }
    }

    /// Supremum over `t >= 0`.
    pub fn sup(&self) -> f64 {
        match self {
            Self::Constant(g) => *g,
            Self::ExponentialDecay { gamma0, .. } => *gamma0,
            Self::Tabulated { values, .. } => values.iter().copied().fold(0.0, f64::max),
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            Self::Constant(g) => Some(*g),
            _ => None,
        }
    }
}

/// One dissipative channel: a Hermitian jump operator (as coefficients over
/// `(I, λ)`) and its strength profile.
#[derive(Clone, Debug, PartialEq)]
pub struct Channel {
    pub l: CoeffVector,
    pub gamma: GammaProfile,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Picture {
    #[default]
    Heisenberg,
    Schroedinger,
}

#[derive(Clone, Debug)]
pub struct EvolutionProblem {
    structure: StructureTensor,
    h: CoeffVector,
    channels: Vec<Channel>,
    r0: BlochVector,
    picture: Picture,
}

impl EvolutionProblem {
    pub fn new(structure: StructureTensor, h: CoeffVector, r0: BlochVector) -> Result<Self> {
        let d = structure.dim();
        for found in [h.vector.len(), r0.dim()] {
            if found != d {
                return Err(Error::DimensionMismatch { expected: d, found });
            }
        }
        Ok(Self {
            structure,
            h,
            channels: Vec::new(),
            r0,
            picture: Picture::Heisenberg,
        })
    }

    pub fn with_channel(mut self, l: CoeffVector, gamma: GammaProfile) -> Result<Self> {
        if l.vector.len() != self.structure.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.structure.dim(),
                found: l.vector.len(),
            });
        }
        gamma.validate()?;
        self.channels.push(Channel { l, gamma });
        Ok(self)
    }

    pub fn with_picture(mut self, picture: Picture) -> Self {
        self.picture = picture;
        self
    }

    pub fn with_r0(mut self, r0: BlochVector) -> Result<Self> {
        if r0.dim() != self.structure.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.structure.dim(),
                found: r0.dim(),
            });
        }
        self.r0 = r0;
        Ok(self)
    }

    pub fn structure(&self) -> &StructureTensor {
        &self.structure
    }

    pub fn h(&self) -> &CoeffVector {
        &self.h
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn r0(&self) -> &BlochVector {
        &self.r0
    }

    pub fn picture(&self) -> Picture {
        self.picture
    }

    pub fn dim(&self) -> usize {
        self.structure.dim()
    }

    fn check_nontrivial(&self) -> Result<()> {
        if self.channels.is_empty() && self.h.vector.amax() == 0.0 {
            return Err(Error::InvalidProblem(
                "neither a Hamiltonian nor a dissipative channel is present".into(),
            ));
        }
        Ok(())
    }
}

/// Evaluation route that produced a trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Formula,
    Series,
    Perturbation,
    ClosedForm,
    MonteCarlo,
    BlochMonteCarlo,
    Oracle,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Formula => "formula",
            Self::Series => "series",
            Self::Perturbation => "perturbation",
            Self::ClosedForm => "closed-form",
            Self::MonteCarlo => "mc",
            Self::BlochMonteCarlo => "mc-bloch",
            Self::Oracle => "oracle",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryMeta {
    pub method: Method,
    pub dt: Option<f64>,
    pub order: Option<usize>,
    pub tail_bound: Option<f64>,
    /// Max deviation between the run and a rerun at half the step.
    pub step_halving_deviation: Option<f64>,
    pub accuracy_warning: bool,
    pub trajectories: Option<usize>,
    pub seed: Option<u64>,
}

impl TrajectoryMeta {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            dt: None,
            order: None,
            tail_bound: None,
            step_halving_deviation: None,
            accuracy_warning: false,
            trajectories: None,
            seed: None,
        }
    }
}

/// Bloch vectors sampled on a time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub bloch: Vec<BlochVector>,
    /// Componentwise standard errors, for Monte Carlo estimates.
    pub stderr: Option<Vec<RVector>>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.bloch.first().map_or(0, BlochVector::dim)
    }

    /// Time series of one Bloch component.
    pub fn component(&self, k: usize) -> Vec<f64> {
        self.bloch.iter().map(|r| r.components()[k]).collect()
    }

    /// Sup-norm deviation from `other` at each time. Grids must match.
    pub fn deviations(&self, other: &Trajectory) -> Result<Vec<f64>> {
        if self.times.len() != other.times.len()
            || self
                .times
                .iter()
                .zip(&other.times)
                .any(|(a, b)| (a - b).abs() > 1e-12 * a.abs().max(1.0))
        {
            return Err(Error::InvalidGrid(
                "trajectories are on different grids".into(),
            ));
        }
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(self
            .bloch
            .iter()
            .zip(&other.bloch)
            .map(|(a, b)| (a.components() - b.components()).amax())
            .collect())
    }

    pub fn max_deviation(&self, other: &Trajectory) -> Result<f64> {
        Ok(self.deviations(other)?.into_iter().fold(0.0, f64::max))
    }
}

/// `l^H(t) = exp(t A_h) l` by scaling-and-squaring.
pub fn heisenberg_transform(
    l: &RVector,
    h: &RVector,
    t: f64,
    f: &StructureTensor,
) -> Result<RVector> {
    if l.len() != f.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            found: l.len(),
        });
    }
    let a = f.adjoint_matrix(h)? * t;
    Ok(expm(&a) * l)
}

/// Precomputed pieces of `G(t)` for one problem.
struct Generator<'a> {
    problem: &'a EvolutionProblem,
    rotation: HermitianExp,
    omega: f64,
    // Σ_k ½ sup γ_k² ‖B_k‖, time-independent because exp(t h⊙) is an
    // automorphism of the product
    rate_bound: f64,
}

impl<'a> Generator<'a> {
    fn new(problem: &'a EvolutionProblem) -> Result<Self> {
        let f = &problem.structure;
        let a_h = f.adjoint_matrix(&problem.h.vector)?;
        let rotation = HermitianExp::from_antisymmetric(&a_h);
        let omega = rotation.spectral_radius();
        let mut rate_bound = 0.0;
        for ch in &problem.channels {
            let b = f.boxdot_matrix(&ch.l.vector)?;
            let g = ch.gamma.sup();
            rate_bound += 0.5 * g * g * symmetric_norm(&b);
        }
        Ok(Self {
            problem,
            rotation,
            omega,
            rate_bound,
        })
    }

    fn rotation(&self, t: f64) -> RMatrix {
        self.rotation.rotation(t)
    }

    /// `G(t) = ½ Σ_k γ_k(t)² B_k(t)`.
    fn at(&self, t: f64) -> RMatrix {
        let d = self.problem.dim();
        let mut g = RMatrix::zeros(d, d);
        if self.problem.channels.is_empty() {
            return g;
        }
        let rot = self.rotation(t);
        for ch in &self.problem.channels {
            let gamma = ch.gamma.at(t);
            if gamma == 0.0 {
                continue;
            }
            let lh = &rot * &ch.l.vector;
            let b = self
                .problem
                .structure
                .boxdot_matrix(&lh)
                .expect("dimensions checked at construction");
            g += b * (0.5 * gamma * gamma);
        }
        g
    }

    fn default_dt(&self, grid: &TimeGrid) -> f64 {
        let fastest = self.omega.max(self.rate_bound);
        if fastest > 0.0 {
            0.01 / fastest
        } else {
            grid.last().max(1.0)
        }
    }

    /// Moves a Heisenberg-picture vector into the problem's picture.
    fn to_picture(&self, r: RVector, t: f64) -> RVector {
        match self.problem.picture {
            Picture::Heisenberg => r,
            Picture::Schroedinger => self.rotation(-t) * r,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FormulaOptions {
    /// Largest RK4 step; `None` picks `0.01 / max(ω, κ)` with `ω` the fastest
    /// precession frequency and `κ` the largest dissipation rate.
    pub dt: Option<f64>,
    /// Rerun at half the step and record the deviation.
    pub step_check: bool,
}

impl Default for FormulaOptions {
    fn default() -> Self {
        Self {
            dt: None,
            step_check: true,
        }
    }
}

/// Time-ordered ⊡ exponential, evaluated as `dr/dt = G(t) r` with classic
/// RK4 between grid points.
pub fn evolve_formula(problem: &EvolutionProblem, grid: &TimeGrid) -> Result<Trajectory> {
    evolve_formula_with(problem, grid, FormulaOptions::default())
}

pub fn evolve_formula_with(
    problem: &EvolutionProblem,
    grid: &TimeGrid,
    options: FormulaOptions,
) -> Result<Trajectory> {
    problem.check_nontrivial()?;
    let generator = Generator::new(problem)?;
    let dt = options.dt.unwrap_or_else(|| generator.default_dt(grid));
    if !(dt > 0.0) {
        return Err(Error::InvalidGrid(format!("step {dt} must be positive")));
    }
    let heisenberg = integrate_rk4(&generator, grid, dt);

    let mut meta = TrajectoryMeta::new(Method::Formula);
    meta.dt = Some(dt);
    if options.step_check {
        let fine = integrate_rk4(&generator, grid, 0.5 * dt);
        let dev = heisenberg
            .iter()
            .zip(&fine)
            .map(|(a, b)| (a - b).amax())
            .fold(0.0, f64::max);
        meta.step_halving_deviation = Some(dev);
        meta.accuracy_warning = dev > STEP_HALVING_TOLERANCE;
    }

    let bloch = heisenberg
        .into_iter()
        .zip(grid.times())
        .map(|(r, &t)| BlochVector::new(generator.to_picture(r, t)))
        .collect();
    Ok(Trajectory {
        times: grid.times().to_vec(),
        bloch,
        stderr: None,
        meta,
    })
}

fn integrate_rk4(generator: &Generator<'_>, grid: &TimeGrid, max_dt: f64) -> Vec<RVector> {
    let mut r = generator.problem.r0.components().clone();
    let mut out = Vec::with_capacity(grid.len());
    out.push(r.clone());
    if generator.problem.channels.is_empty() {
        out.resize(grid.len(), r);
        return out;
    }
    for (t0, h, n) in grid.substeps(max_dt) {
        for step in 0..n {
            let t = t0 + step as f64 * h;
            let g0 = generator.at(t);
            let gm = generator.at(t + 0.5 * h);
            let g1 = generator.at(t + h);
            let k1 = &g0 * &r;
            let k2 = &gm * (&r + &k1 * (0.5 * h));
            let k3 = &gm * (&r + &k2 * (0.5 * h));
            let k4 = &g1 * (&r + &k3 * h);
            r += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
        out.push(r.clone());
    }
    out
}

/// A truncated series value with a bound on the neglected terms.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesValue {
    pub value: BlochVector,
    pub order: usize,
    pub tail_bound: f64,
}

/// `‖r₀‖ Σ_{m > order} x^m / m!`.
fn exponential_tail(x: f64, order: usize, scale: f64) -> f64 {
    if x == 0.0 || scale == 0.0 {
        return 0.0;
    }
    let mut term = 1.0;
    let mut tail = 0.0;
    let mut m = 0usize;
    loop {
        m += 1;
        term *= x / m as f64;
        if m > order {
            tail += term;
            if (m as f64) > x && term <= 1e-17 * tail {
                break;
            }
        }
        if m > order + 10_000 {
            break;
        }
    }
    scale * tail
}

/// Time-ordered ⊡ series truncated after `order` terms,
///
/// ```text
/// r(t) = Σ_n ∫₀ᵗ dt_n ∫₀^{t_n} dt_{n-1} … ∫₀^{t_2} dt_1 G(t_n) … G(t_1) r(0),
/// ```
///
/// with every nesting level evaluated on the same Gauss-Legendre nodes.
pub fn dyson_series(problem: &EvolutionProblem, t: f64, order: usize) -> Result<SeriesValue> {
    dyson_series_with(problem, t, order, DEFAULT_QUADRATURE_NODES)
}

/// [`dyson_series`] with `nodes` quadrature points per level.
///
/// The inner integrals `∫₀^{s_i}` at each node are taken from the spectral
/// integration matrix of the rule, so the cost is linear in `order`.
pub fn dyson_series_with(
    problem: &EvolutionProblem,
    t: f64,
    order: usize,
    nodes: usize,
) -> Result<SeriesValue> {
    if !(t >= 0.0) {
        return Err(Error::InvalidGrid(format!("time {t} must be non-negative")));
    }
    problem.check_nontrivial()?;
    let generator = Generator::new(problem)?;
    let r0 = problem.r0.components();
    let d = problem.dim();

    let mut sum = r0.clone();
    if t > 0.0 && order > 0 && !problem.channels.is_empty() {
        let rule = GaussLegendre::new(nodes.max(1));
        let m = rule.len();
        let (points, weights) = rule.on_interval(0.0, t);
        let weights = RVector::from_vec(weights);
        let integ = rule.integration_matrix().transpose() * (0.5 * t);
        let g: Vec<RMatrix> = points.iter().map(|&s| generator.at(s)).collect();

        // column j holds the previous level's partial sum at node j
        let mut v = RMatrix::from_fn(d, m, |i, _| r0[i]);
        let mut u = RMatrix::zeros(d, m);
        for _ in 0..order {
            for (j, gj) in g.iter().enumerate() {
                u.set_column(j, &(gj * v.column(j)));
            }
            sum += &u * &weights;
            v = &u * &integ;
        }
    }

    let x = generator.rate_bound * t;
    let tail_bound = exponential_tail(x, order, r0.norm());
    Ok(SeriesValue {
        value: BlochVector::new(generator.to_picture(sum, t)),
        order,
        tail_bound,
    })
}

/// [`dyson_series`] at every grid point; the recorded tail bound is the
/// largest over the grid.
pub fn dyson_trajectory(
    problem: &EvolutionProblem,
    grid: &TimeGrid,
    order: usize,
    nodes: usize,
) -> Result<Trajectory> {
    let mut bloch = Vec::with_capacity(grid.len());
    let mut tail = 0.0f64;
    for &t in grid.times() {
        let s = dyson_series_with(problem, t, order, nodes)?;
        tail = tail.max(s.tail_bound);
        bloch.push(s.value);
    }
    let mut meta = TrajectoryMeta::new(Method::Series);
    meta.order = Some(order);
    meta.tail_bound = Some(tail);
    Ok(Trajectory {
        times: grid.times().to_vec(),
        bloch,
        stderr: None,
        meta,
    })
}

/// Expansion to second order in the coupling of a single constant channel,
///
/// ```text
/// r(t) = r(0) + (γ/2) ∫₀ᵗ l(t₁) ⊡ r(0) dt₁
///             + (γ²/4) ∫₀ᵗ dt₁ ∫₀^{t₁} dt₂ l(t₁) ⊡ (l(t₂) ⊡ r(0)) + O(γ³),
/// ```
///
/// where `l(t)` is the Heisenberg transform of the channel's Bloch vector
/// and `γ = g²` for the channel's constant profile `g`.
pub fn perturbation_series(
    problem: &EvolutionProblem,
    t: f64,
    order: usize,
) -> Result<BlochVector> {
    perturbation_series_with(problem, t, order, DEFAULT_QUADRATURE_NODES)
}

pub fn perturbation_series_with(
    problem: &EvolutionProblem,
    t: f64,
    order: usize,
    nodes: usize,
) -> Result<BlochVector> {
    if order > 2 {
        return Err(Error::UnsupportedOrder { order, max: 2 });
    }
    let [channel] = problem.channels() else {
        return Err(Error::InvalidProblem(format!(
            "perturbation series needs exactly one channel, found {}",
            problem.channels().len()
        )));
    };
    let g = channel.gamma.as_constant().ok_or_else(|| {
        Error::InvalidProblem("perturbation series needs a constant gamma".into())
    })?;
    let gamma = g * g;
    let f = problem.structure();
    let h = &problem.h().vector;
    let l = &channel.l.vector;
    let r0 = problem.r0().components();
    let rule = GaussLegendre::new(nodes.max(1));

    let mut r = r0.clone();
    if order >= 1 && t > 0.0 {
        let (outer, outer_w) = rule.on_interval(0.0, t);
        let mut first = RVector::zeros(r0.len());
        let mut second = RVector::zeros(r0.len());
        for (&t1, &w1) in outer.iter().zip(&outer_w) {
            let l1 = heisenberg_transform(l, h, t1, f)?;
            first += f.boxdot(&l1, r0)? * w1;
            if order >= 2 {
                let (inner, inner_w) = rule.on_interval(0.0, t1);
                let mut nested = RVector::zeros(r0.len());
                for (&t2, &w2) in inner.iter().zip(&inner_w) {
                    let l2 = heisenberg_transform(l, h, t2, f)?;
                    nested += f.boxdot(&l2, r0)? * w2;
                }
                second += f.boxdot(&l1, &nested)? * w1;
            }
        }
        r += first * (0.5 * gamma);
        if order >= 2 {
            r += second * (0.25 * gamma * gamma);
        }
    }
    if problem.picture() == Picture::Schroedinger {
        r = heisenberg_transform(&r, h, -t, f)?;
    }
    Ok(BlochVector::new(r))
}

/// `exp(Σ_k ½ γ_k² t B_k) r(0)` when every `l_k` commutes with `h`, so the
/// generator is constant and no time ordering is needed.
pub fn commuting_closed_form(problem: &EvolutionProblem, t: f64) -> Result<BlochVector> {
    let f = problem.structure();
    let h = &problem.h().vector;
    let d = problem.dim();
    let mut g = RMatrix::zeros(d, d);
    for (k, ch) in problem.channels().iter().enumerate() {
        let residual = f.odot(h, &ch.l.vector)?.amax();
        if residual > COMMUTE_TOL * (h.norm() * ch.l.vector.norm()).max(1.0) {
            return Err(Error::NotCommuting {
                channel: k,
                residual,
            });
        }
        let gamma = ch
            .gamma
            .as_constant()
            .ok_or_else(|| Error::InvalidProblem(format!("channel {k} needs a constant gamma")))?;
        g += f.boxdot_matrix(&ch.l.vector)? * (0.5 * gamma * gamma);
    }
    let mut r = expm(&(g * t)) * problem.r0().components();
    if problem.picture() == Picture::Schroedinger {
        r = heisenberg_transform(&r, h, -t, f)?;
    }
    Ok(BlochVector::new(r))
}

/// [`commuting_closed_form`] on a grid.
pub fn closed_form_trajectory(problem: &EvolutionProblem, grid: &TimeGrid) -> Result<Trajectory> {
    let bloch = grid
        .times()
        .iter()
        .map(|&t| commuting_closed_form(problem, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory {
        times: grid.times().to_vec(),
        bloch,
        stderr: None,
        meta: TrajectoryMeta::new(Method::ClosedForm),
    })
}

/// [`perturbation_series`] on a grid.
pub fn perturbation_trajectory(
    problem: &EvolutionProblem,
    grid: &TimeGrid,
    order: usize,
    nodes: usize,
) -> Result<Trajectory> {
    let bloch = grid
        .times()
        .iter()
        .map(|&t| perturbation_series_with(problem, t, order, nodes))
        .collect::<Result<Vec<_>>>()?;
    let mut meta = TrajectoryMeta::new(Method::Perturbation);
    meta.order = Some(order);
    Ok(Trajectory {
        times: grid.times().to_vec(),
        bloch,
        stderr: None,
        meta,
    })
}

/// `sin x / x` with `sinc 0 = 1`.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        Float::sin(x) / x
    }
}

/// Second-order (in `γ/ω₀`) Heisenberg Bloch vector of a qubit with
/// `H = ω₀σ_z`, `L = √γ σ_x` and `f = ε/2`, i.e. `h = (0, 0, ω₀)` and
/// `l = √γ (1, 0, 0)` with `⊙ = -×`.
///
/// The `x(0)` coefficient of `y(t)` at second order is
/// `(a²/16)(sin 2ω₀t - 2ω₀t cos 2ω₀t)` with `a = γ/2ω₀`; this sign is the one
/// that agrees with direct quadrature of the nested integral.
/// `z(t)` is `exp(-γt/2) z(0)` truncated at the same order.
pub fn qubit_second_order(
    r0: &BlochVector,
    omega0: f64,
    gamma: f64,
    t: f64,
) -> Result<BlochVector> {
    if r0.dim() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            found: r0.dim(),
        });
    }
    let (x0, y0, z0) = (r0.components()[0], r0.components()[1], r0.components()[2]);
    let a = gamma / (2.0 * omega0);
    let wt = omega0 * t;
    let (s2, c2) = Float::sin_cos(2.0 * wt);
    let s1 = sinc(wt);
    let q = a * a / 16.0;

    let xx = 1.0 - a * wt / 2.0 * (1.0 - sinc(2.0 * wt))
        + q * (1.0 + 2.0 * wt * wt - c2 - 2.0 * wt * s2);
    let xy = -a * wt * wt / 2.0 * s1 * s1 + q * (4.0 * wt - 2.0 * wt * c2 - s2);
    let yy = 1.0 - a * wt / 2.0 * (1.0 + sinc(2.0 * wt))
        + q * (1.0 + 2.0 * wt * wt - c2 + 2.0 * wt * s2);
    let yx = -a * wt * wt / 2.0 * s1 * s1 + q * (s2 - 2.0 * wt * c2);
    let g = gamma * t / 2.0;
    let z = (1.0 - g + 0.5 * g * g) * z0;
    Ok(BlochVector::from_slice(&[
        xx * x0 + xy * y0,
        yy * y0 + yx * x0,
        z,
    ]))
}

/// `‖r(t)‖² ≈ 1 - (γt/2)(1 - sinc 2ω₀t)` for the qubit of
/// [`qubit_second_order`] started at `r(0) = (1, 0, 0)`, to first order in
/// `γ`; meaningful while `γt ≪ 1`.
pub fn purity_first_order(omega0: f64, gamma: f64, t: f64) -> f64 {
    1.0 - gamma * t / 2.0 * (1.0 - sinc(2.0 * omega0 * t))
}

/// Default RK4 step for `problem` on `grid` (see [`FormulaOptions::dt`]).
pub fn default_step(problem: &EvolutionProblem, grid: &TimeGrid) -> Result<f64> {
    Ok(Generator::new(problem)?.default_dt(grid))
}
