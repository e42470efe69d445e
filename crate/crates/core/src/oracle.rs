//! Direct RK4 integration of the density-matrix master equation.
//!
//! Nothing here uses structure constants or Bloch vectors, so it serves as an
//! independent reference for the other evaluation paths.

use alloc::format;
use alloc::vec::Vec;

use num_traits::Float;

use crate::grid::TimeGrid;
use crate::linalg::{commutator, hermitian_residual, min_eigenvalue, trace, HermitianExp};
use crate::propagator::GammaProfile;
use crate::{CMatrix, Error, Result, C64};

/// Largest accepted `|Tr ρ - 1|`.
pub const TRACE_TOLERANCE: f64 = 1e-8;
/// Most negative accepted eigenvalue of `ρ`.
pub const POSITIVITY_TOLERANCE: f64 = -1e-6;

const HERMITIAN_TOL: f64 = 1e-10;
const RHO0_TRACE_TOL: f64 = 1e-10;
const RHO0_POSITIVITY_TOL: f64 = -1e-10;

#[derive(Clone, Debug)]
pub struct MatrixProblem {
    h: CMatrix,
    lindblads: Vec<CMatrix>,
    gammas: Vec<GammaProfile>,
    rho0: CMatrix,
    all_hermitian: bool,
}

impl MatrixProblem {
    pub fn new(h: CMatrix, rho0: CMatrix) -> Result<Self> {
        let n = h.nrows();
        if n < 2 || !h.is_square() {
            return Err(Error::InvalidDimension(n));
        }
        check_square(&rho0, n)?;
        let residual = hermitian_residual(&h);
        if residual > HERMITIAN_TOL {
            return Err(Error::NotHermitian { residual });
        }
        let residual = hermitian_residual(&rho0);
        if residual > HERMITIAN_TOL {
            return Err(Error::NotHermitian { residual });
        }
        let tr = trace(&rho0);
        if (tr - C64::new(1.0, 0.0)).norm() > RHO0_TRACE_TOL {
            return Err(Error::TraceNotUnity { trace: tr.re });
        }
        let min_eigenvalue = min_eigenvalue(&rho0);
        if min_eigenvalue < RHO0_POSITIVITY_TOL {
            return Err(Error::NotPositive { min_eigenvalue });
        }
        Ok(Self {
            h,
            lindblads: Vec::new(),
            gammas: Vec::new(),
            rho0,
            all_hermitian: true,
        })
    }

    /// Adds a channel contributing `γ(t)²` times the Lindblad dissipator of
    /// `l`; `l` need not be Hermitian.
    pub fn with_lindblad(mut self, l: CMatrix, gamma: GammaProfile) -> Result<Self> {
        check_square(&l, self.dim())?;
        gamma.validate()?;
        self.all_hermitian &= hermitian_residual(&l) <= HERMITIAN_TOL;
        self.lindblads.push(l);
        self.gammas.push(gamma);
        Ok(self)
    }

    pub fn with_rho0(self, rho0: CMatrix) -> Result<Self> {
        let fresh = Self::new(self.h, rho0)?;
        Ok(Self {
            lindblads: self.lindblads,
            gammas: self.gammas,
            all_hermitian: self.all_hermitian,
            ..fresh
        })
    }

    pub fn dim(&self) -> usize {
        self.h.nrows()
    }

    pub fn h(&self) -> &CMatrix {
        &self.h
    }

    pub fn lindblads(&self) -> &[CMatrix] {
        &self.lindblads
    }

    pub fn gammas(&self) -> &[GammaProfile] {
        &self.gammas
    }

    pub fn rho0(&self) -> &CMatrix {
        &self.rho0
    }

    pub fn all_hermitian(&self) -> bool {
        self.all_hermitian
    }

    /// `0.01 / max(ω, κ)` with `ω` the spread of `H`'s spectrum and `κ` the
    /// summed `½ sup γ² ‖[L, [L, ·]]‖` estimate; for Hermitian operators these
    /// are the same rates the Bloch propagator uses.
    pub fn default_dt(&self, grid: &TimeGrid) -> f64 {
        let omega = spread(&self.h);
        let kappa: f64 = self
            .lindblads
            .iter()
            .zip(&self.gammas)
            .map(|(l, g)| {
                let width = if hermitian_residual(l) <= HERMITIAN_TOL {
                    spread(l)
                } else {
                    2.0 * operator_norm(l)
                };
                0.5 * g.sup() * g.sup() * width * width
            })
            .sum();
        let fastest = omega.max(kappa);
        if fastest > 0.0 {
            0.01 / fastest
        } else {
            grid.last().max(1.0)
        }
    }
}

fn check_square(m: &CMatrix, n: usize) -> Result<()> {
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: m.nrows().max(m.ncols()),
        });
    }
    Ok(())
}

fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

fn spread(m: &CMatrix) -> f64 {
    let e = hermitian_part(m).symmetric_eigenvalues();
    e.max() - e.min()
}

fn operator_norm(m: &CMatrix) -> f64 {
    let top = (m.adjoint() * m).symmetric_eigenvalues().max();
    Float::sqrt(top.max(0.0))
}

/// `-i[H, ρ] + ½ Σ_k γ_k(t)² ([L_k ρ, L_k†] + [L_k, ρ L_k†])`.
pub fn rhs_general(rho: &CMatrix, problem: &MatrixProblem, t: f64) -> CMatrix {
    let mut out = commutator(&problem.h, rho) * C64::new(0.0, -1.0);
    for (l, g) in problem.lindblads.iter().zip(&problem.gammas) {
        let w = g.at(t);
        if w == 0.0 {
            continue;
        }
        let ld = l.adjoint();
        let term = commutator(&(l * rho), &ld) + commutator(l, &(rho * &ld));
        out += term * C64::new(0.5 * w * w, 0.0);
    }
    out
}

/// `-i[H, ρ] - ½ Σ_k γ_k(t)² [L_k, [L_k, ρ]]`; every `L_k` must be Hermitian.
pub fn rhs_hermitian(rho: &CMatrix, problem: &MatrixProblem, t: f64) -> Result<CMatrix> {
    if !problem.all_hermitian {
        let residual = problem
            .lindblads
            .iter()
            .map(hermitian_residual)
            .fold(0.0, f64::max);
        return Err(Error::NotHermitian { residual });
    }
    let mut out = commutator(&problem.h, rho) * C64::new(0.0, -1.0);
    for (l, g) in problem.lindblads.iter().zip(&problem.gammas) {
        let w = g.at(t);
        if w == 0.0 {
            continue;
        }
        out -= commutator(l, &commutator(l, rho)) * C64::new(0.5 * w * w, 0.0);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Rhs {
    /// [`rhs_hermitian`] when every operator is Hermitian, else [`rhs_general`].
    #[default]
    Auto,
    General,
    Hermitian,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct OracleOptions {
    pub dt: Option<f64>,
    pub rhs: Rhs,
}

/// Invariant extremes over an accepted run.
#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostics {
    pub dt: f64,
    /// Over every internal step.
    pub max_trace_deviation: f64,
    /// Over every internal step.
    pub max_hermitian_residual: f64,
    /// Over output points.
    pub min_eigenvalue: f64,
    /// `Tr ρ²` at each output point.
    pub purity: Vec<f64>,
    /// Largest rise of `Tr ρ²` between consecutive output points.
    pub max_purity_increase: f64,
}

#[derive(Clone, Debug)]
pub struct MatrixTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<CMatrix>,
    pub diagnostics: Diagnostics,
}

pub fn integrate(problem: &MatrixProblem, grid: &TimeGrid) -> Result<MatrixTrajectory> {
    integrate_with(problem, grid, OracleOptions::default())
}

/// Classic RK4 between grid points, with trace and Hermiticity checked every
/// step and the spectrum at every output point.
pub fn integrate_with(
    problem: &MatrixProblem,
    grid: &TimeGrid,
    options: OracleOptions,
) -> Result<MatrixTrajectory> {
    let hermitian = match options.rhs {
        Rhs::Auto => problem.all_hermitian,
        Rhs::General => false,
        Rhs::Hermitian => {
            rhs_hermitian(&problem.rho0, problem, 0.0)?;
            true
        }
    };
    let rhs = |rho: &CMatrix, t: f64| {
        if hermitian {
            rhs_hermitian(rho, problem, t).expect("operators checked Hermitian")
        } else {
            rhs_general(rho, problem, t)
        }
    };
    let dt = options.dt.unwrap_or_else(|| problem.default_dt(grid));
    if !(dt > 0.0) {
        return Err(Error::InvalidGrid(format!("step {dt} must be positive")));
    }

    let mut rho = problem.rho0.clone();
    let mut diag = Diagnostics {
        dt,
        max_trace_deviation: 0.0,
        max_hermitian_residual: 0.0,
        min_eigenvalue: f64::INFINITY,
        purity: Vec::with_capacity(grid.len()),
        max_purity_increase: 0.0,
    };
    let mut states = Vec::with_capacity(grid.len());
    record(&rho, 0.0, &mut diag)?;
    states.push(rho.clone());

    let half = C64::new(0.5, 0.0);
    for (t0, h, n) in grid.substeps(dt) {
        let hc = C64::new(h, 0.0);
        for step in 0..n {
            let t = t0 + step as f64 * h;
            let k1 = rhs(&rho, t);
            let k2 = rhs(&(&rho + &k1 * hc * half), t + 0.5 * h);
            let k3 = rhs(&(&rho + &k2 * hc * half), t + 0.5 * h);
            let k4 = rhs(&(&rho + &k3 * hc), t + h);
            rho += (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * C64::new(h / 6.0, 0.0);
            check_step(&rho, t + h, &mut diag)?;
        }
        record(&rho, t0 + n as f64 * h, &mut diag)?;
        states.push(rho.clone());
    }
    Ok(MatrixTrajectory {
        times: grid.times().to_vec(),
        states,
        diagnostics: diag,
    })
}

fn check_step(rho: &CMatrix, t: f64, diag: &mut Diagnostics) -> Result<()> {
    let deviation = (trace(rho) - C64::new(1.0, 0.0)).norm();
    diag.max_trace_deviation = diag.max_trace_deviation.max(deviation);
    diag.max_hermitian_residual = diag.max_hermitian_residual.max(hermitian_residual(rho));
    if !(deviation <= TRACE_TOLERANCE) {
        return Err(Error::Diverged {
            time: t,
            reason: format!("trace deviates from 1 by {deviation:e}"),
        });
    }
    Ok(())
}

fn record(rho: &CMatrix, t: f64, diag: &mut Diagnostics) -> Result<()> {
    check_step(rho, t, diag)?;
    let min = min_eigenvalue(rho);
    diag.min_eigenvalue = diag.min_eigenvalue.min(min);
    if !(min >= POSITIVITY_TOLERANCE) {
        return Err(Error::Diverged {
            time: t,
            reason: format!("minimum eigenvalue {min:e}"),
        });
    }
    let purity = trace(&(rho * rho)).re;
    if let Some(&prev) = diag.purity.last() {
        diag.max_purity_increase = diag.max_purity_increase.max(purity - prev);
    }
    diag.purity.push(purity);
    Ok(())
}

/// `ρ^H(t) = e^{iHt} ρ(t) e^{-iHt}` at every point of `trajectory`.
pub fn to_heisenberg(trajectory: &MatrixTrajectory, h: &CMatrix) -> MatrixTrajectory {
    let exp = HermitianExp::new(h);
    let states = trajectory
        .times
        .iter()
        .zip(&trajectory.states)
        .map(|(&t, rho)| {
            let u = exp.unitary(t);
            u.adjoint() * rho * u
        })
        .collect();
    MatrixTrajectory {
        times: trajectory.times.clone(),
        states,
        diagnostics: trajectory.diagnostics.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{expm, max_abs};
    use crate::GeneratorBasis;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn mat2(a: [C64; 4]) -> CMatrix {
        CMatrix::from_row_slice(2, 2, &a)
    }

    fn sz() -> CMatrix {
        mat2([c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)])
    }

    fn sx() -> CMatrix {
        mat2([c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
    }

    fn plus() -> CMatrix {
        mat2([c(0.5, 0.0); 4])
    }

    fn random_hermitian(n: usize, v: &[f64]) -> CMatrix {
        let m = CMatrix::from_fn(n, n, |i, j| {
            c(v[(i * n + j) % v.len()], v[(i + 3 * j + 1) % v.len()])
        });
        hermitian_part(&m)
    }

    fn random_state(n: usize, v: &[f64]) -> CMatrix {
        let a = CMatrix::from_fn(n, n, |i, j| {
            c(v[(2 * i + j) % v.len()], v[(i * j + 2) % v.len()])
        });
        let m = &a * a.adjoint() + CMatrix::identity(n, n) * c(0.05, 0.0);
        let tr = trace(&m);
        m / tr
    }

    #[test]
    fn rejects_invalid_inputs() {
        let bad_rho = mat2([c(0.7, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.7, 0.0)]);
        assert!(matches!(
            MatrixProblem::new(sz(), bad_rho),
            Err(Error::TraceNotUnity { .. })
        ));
        let neg = mat2([c(1.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-0.5, 0.0)]);
        assert!(matches!(
            MatrixProblem::new(sz(), neg),
            Err(Error::NotPositive { .. })
        ));
        let nh = mat2([c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert!(matches!(
            MatrixProblem::new(nh.clone(), plus()),
            Err(Error::NotHermitian { .. })
        ));
        let p = MatrixProblem::new(sz(), plus()).unwrap();
        assert!(p
            .clone()
            .with_lindblad(CMatrix::identity(3, 3), GammaProfile::Constant(1.0))
            .is_err());
        let p = p.with_lindblad(nh, GammaProfile::Constant(1.0)).unwrap();
        assert!(!p.all_hermitian());
        assert!(matches!(
            rhs_hermitian(&plus(), &p, 0.0),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn maximally_mixed_is_stationary_without_dissipation() {
        let p = MatrixProblem::new(
            random_hermitian(3, &[0.3, -1.0, 0.2, 0.7]),
            CMatrix::identity(3, 3) / c(3.0, 0.0),
        )
        .unwrap();
        assert!(max_abs(&rhs_general(p.rho0(), &p, 0.0)) < 1e-15);
    }

    #[test]
    fn pauli_dephasing_rate_is_two() {
        let p = MatrixProblem::new(CMatrix::zeros(2, 2), plus())
            .unwrap()
            .with_lindblad(sz(), GammaProfile::Constant(1.0))
            .unwrap();
        let d = rhs_hermitian(&plus(), &p, 0.0).unwrap();
        assert!((d[(0, 1)] - c(-1.0, 0.0)).norm() < 1e-15);
        assert!(d[(0, 0)].norm() < 1e-15);
    }

    #[test]
    fn qnd_fixed_point() {
        let h = sz() * c(0.7, 0.0);
        let rho = mat2([c(0.3, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.7, 0.0)]);
        let p = MatrixProblem::new(h, rho.clone())
            .unwrap()
            .with_lindblad(sz(), GammaProfile::Constant(1.3))
            .unwrap();
        assert!(max_abs(&rhs_hermitian(&rho, &p, 0.0).unwrap()) < 1e-15);
    }

    #[test]
    fn unitary_evolution_matches_exact_conjugation() {
        let h = random_hermitian(3, &[0.4, -0.9, 0.1, 0.6, -0.2]);
        let rho0 = random_state(3, &[0.5, 0.1, -0.3, 0.8]);
        let p = MatrixProblem::new(h.clone(), rho0.clone()).unwrap();
        let grid = TimeGrid::uniform(3.0, 0.5).unwrap();
        let traj = integrate(&p, &grid).unwrap();
        for (t, rho) in traj.times.iter().zip(&traj.states) {
            let u = expm(&(&h * c(0.0, -t)));
            let exact = &u * &rho0 * u.adjoint();
            assert!(max_abs(&(rho - exact)) < 1e-8);
        }
        let heis = to_heisenberg(&traj, &h);
        for rho in &heis.states {
            assert!(max_abs(&(rho - &rho0)) < 1e-8);
        }
    }

    #[test]
    fn dephasing_keeps_populations() {
        let rho0 = mat2([c(0.8, 0.0), c(0.1, 0.3), c(0.1, -0.3), c(0.2, 0.0)]);
        let p = MatrixProblem::new(sz() * c(0.5, 0.0), rho0.clone())
            .unwrap()
            .with_lindblad(sz(), GammaProfile::Constant(0.8))
            .unwrap();
        let traj = integrate(&p, &TimeGrid::uniform(5.0, 0.5).unwrap()).unwrap();
        for (t, rho) in traj.times.iter().zip(&traj.states) {
            assert!((rho[(0, 0)] - rho0[(0, 0)]).norm() < 1e-10);
            assert!((rho[(1, 1)] - rho0[(1, 1)]).norm() < 1e-10);
            // coherence magnitude decays at 2γ²
            let expected = rho0[(0, 1)].norm() * (-2.0 * 0.64 * t).exp();
            assert!((rho[(0, 1)].norm() - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn heisenberg_dephasing_is_a_z_rotation() {
        let w0 = 0.9;
        let rho0 = mat2([c(0.6, 0.0), c(0.2, 0.1), c(0.2, -0.1), c(0.4, 0.0)]);
        let p = MatrixProblem::new(sz() * c(w0, 0.0), rho0)
            .unwrap()
            .with_lindblad(sz(), GammaProfile::Constant(0.5))
            .unwrap();
        let traj = integrate(&p, &TimeGrid::uniform(2.0, 0.5).unwrap()).unwrap();
        let heis = to_heisenberg(&traj, p.h());
        for ((t, s), hz) in traj.times.iter().zip(&traj.states).zip(&heis.states) {
            // e^{iω σ_z t} multiplies ρ01 by e^{2iωt}
            let rotated = s[(0, 1)] * C64::from_polar(1.0, 2.0 * w0 * t);
            assert!((hz[(0, 1)] - rotated).norm() < 1e-12);
            assert!((hz[(0, 0)] - s[(0, 0)]).norm() < 1e-12);
        }
    }

    #[test]
    fn divergence_is_reported_with_time() {
        // a huge step makes RK4 overshoot past positivity
        let p = MatrixProblem::new(CMatrix::zeros(2, 2), plus())
            .unwrap()
            .with_lindblad(sz(), GammaProfile::Constant(3.0))
            .unwrap();
        let opts = OracleOptions {
            dt: Some(1.0),
            rhs: Rhs::Auto,
        };
        let err = integrate_with(&p, &TimeGrid::uniform(4.0, 1.0).unwrap(), opts).unwrap_err();
        assert!(matches!(err, Error::Diverged { time, .. } if time == 1.0));
    }

    #[test]
    fn bloch_encoding_tracks_heisenberg_precession() {
        // L = 0: Heisenberg Bloch vector is frozen at r0
        let basis = GeneratorBasis::gell_mann(2).unwrap();
        let rho0 = random_state(2, &[0.3, 0.9, -0.4]);
        let p = MatrixProblem::new(sx(), rho0.clone()).unwrap();
        let traj = integrate(&p, &TimeGrid::uniform(2.0, 0.5).unwrap()).unwrap();
        let heis = to_heisenberg(&traj, p.h());
        let r0 = basis.bloch_encode(&rho0).unwrap();
        for rho in &heis.states {
            let r = basis.bloch_encode(rho).unwrap();
            assert!((r.components() - r0.components()).amax() < 1e-8);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn rhs_forms_agree_for_hermitian_operators(
            n in 2usize..=4,
            v in proptest::collection::vec(-1.0f64..1.0, 7),
            w in proptest::collection::vec(-1.0f64..1.0, 5),
        ) {
            let h = random_hermitian(n, &v);
            let l = random_hermitian(n, &w);
            let rho = random_state(n, &w);
            let p = MatrixProblem::new(h, rho.clone()).unwrap().with_lindblad(l, GammaProfile::Constant(0.7)).unwrap();
            let a = rhs_general(&rho, &p, 0.3);
            let b = rhs_hermitian(&rho, &p, 0.3).unwrap();
            prop_assert!(max_abs(&(&a - &b)) < 1e-12);
            prop_assert!(hermitian_residual(&a) < 1e-12);
            prop_assert!(trace(&a).norm() < 1e-12);
        }

        #[test]
        fn general_rhs_is_hermitian_and_traceless(
            n in 2usize..=3,
            v in proptest::collection::vec(-1.0f64..1.0, 6),
            w in proptest::collection::vec(-1.0f64..1.0, 9),
        ) {
            let l = CMatrix::from_fn(n, n, |i, j| c(w[(i * n + j) % 9], w[(i + 2 * j + 4) % 9]));
            let rho = random_state(n, &v);
            let p = MatrixProblem::new(random_hermitian(n, &v), rho.clone()).unwrap().with_lindblad(l, GammaProfile::Constant(1.0)).unwrap();
            let a = rhs_general(&rho, &p, 0.0);
            prop_assert!(hermitian_residual(&a) < 1e-12);
            prop_assert!(trace(&a).norm() < 1e-12);
        }

        #[test]
        fn hermitian_runs_stay_physical(
            n in 2usize..=3,
            v in proptest::collection::vec(-1.0f64..1.0, 6),
            w in proptest::collection::vec(-1.0f64..1.0, 5),
        ) {
            let p = MatrixProblem::new(random_hermitian(n, &v), random_state(n, &w))
                .unwrap()
                .with_lindblad(random_hermitian(n, &w), GammaProfile::Constant(1.0))
                .unwrap();
            let traj = integrate(&p, &TimeGrid::uniform(2.0, 0.25).unwrap()).unwrap();
            let d = &traj.diagnostics;
            prop_assert!(d.max_trace_deviation < 1e-8);
            prop_assert!(d.max_hermitian_residual < 1e-10);
            prop_assert!(d.min_eigenvalue >= -1e-6);
            prop_assert!(d.max_purity_increase <= 1e-12);
        }
    }
}
