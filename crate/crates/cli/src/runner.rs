//! Executes scenario methods and compares their trajectories.

use bloch_core::oracle::{self, OracleOptions};
use bloch_core::propagator::{self, FormulaOptions, Method as CoreMethod, TrajectoryMeta};
use bloch_core::unraveling::{bloch_space_unraveling, ensemble_bloch, NoiseConfig};
use bloch_core::{Picture, Trajectory};

use crate::model::Model;
use crate::scenario::{
    Estimator, Method, Scenario, DEFAULT_PERTURBATION_ORDER, DEFAULT_SERIES_ORDER,
};
use crate::CliError;

/// Deterministic methods must agree to this absolute tolerance.
pub const DETERMINISTIC_TOLERANCE: f64 = 1e-6;
/// Monte Carlo estimates must sit within this many standard errors.
pub const MC_SIGMAS: f64 = 3.0;
/// Deviations below this are roundoff, even against a zero standard error.
pub const ROUNDOFF_FLOOR: f64 = 1e-12;

/// One method's trajectory with extra key/value diagnostics for the meta file.
pub struct Run {
    pub method: Method,
    pub trajectory: Trajectory,
    pub notes: Vec<(String, String)>,
}

pub fn run_method(s: &Scenario, model: &Model, method: Method) -> Result<Run, CliError> {
    let mut notes = Vec::new();
    let trajectory = match method {
        Method::Formula => {
            let opts = FormulaOptions {
                dt: Some(s.dt),
                step_check: true,
            };
            let traj = propagator::evolve_formula_with(&model.problem, &model.grid, opts)?;
            notes.push((
                "default_dt".into(),
                fmt(propagator::default_step(&model.problem, &model.grid)?),
            ));
            traj
        }
        Method::Series => propagator::dyson_trajectory(
            &model.problem,
            &model.grid,
            s.order.unwrap_or(DEFAULT_SERIES_ORDER),
            s.nodes,
        )?,
        Method::Perturbation => propagator::perturbation_trajectory(
            &model.problem,
            &model.grid,
            s.order.unwrap_or(DEFAULT_PERTURBATION_ORDER),
            s.nodes,
        )?,
        Method::Oracle => {
            let mp = model.matrix_problem(s)?;
            let opts = OracleOptions {
                dt: Some(s.dt),
                ..OracleOptions::default()
            };
            let mut states = oracle::integrate_with(&mp, &model.grid, opts)?;
            let d = &states.diagnostics;
            notes.push(("max_trace_deviation".into(), fmt(d.max_trace_deviation)));
            notes.push((
                "max_hermitian_residual".into(),
                fmt(d.max_hermitian_residual),
            ));
            notes.push(("min_eigenvalue".into(), fmt(d.min_eigenvalue)));
            notes.push(("max_purity_increase".into(), fmt(d.max_purity_increase)));
            if s.picture == Picture::Heisenberg {
                states = oracle::to_heisenberg(&states, mp.h());
            }
            let basis = model.basis.as_ref().expect("oracle needs trace2");
            let bloch = states
                .states
                .iter()
                .map(|rho| basis.bloch_encode(rho))
                .collect::<Result<Vec<_>, _>>()?;
            let mut meta = TrajectoryMeta::new(CoreMethod::Oracle);
            meta.dt = Some(states.diagnostics.dt);
            Trajectory {
                times: states.times,
                bloch,
                stderr: None,
                meta,
            }
        }
        Method::Mc => {
            let config = NoiseConfig::new(s.seed, s.trajectories, s.dt, s.lindblads.len())?;
            let result = match s.estimator() {
                Estimator::Matrix => {
                    let mp = model.matrix_problem(s)?;
                    let basis = model.basis.as_ref().expect("matrix estimator needs trace2");
                    ensemble_bloch(&mp, basis, &config, &model.grid, s.picture)?
                }
                Estimator::Bloch => bloch_space_unraveling(&model.problem, &config, &model.grid)?,
            };
            result.trajectory
        }
        Method::Compare => unreachable!("compare is not a single method"),
    };
    Ok(Run {
        method,
        trajectory,
        notes,
    })
}

/// Deviations between two runs at every output time.
pub struct Pair {
    pub a: Method,
    pub b: Method,
    /// Max absolute componentwise deviation.
    pub deviation: Vec<f64>,
    /// Max deviation in standard errors; present when either run is Monte Carlo.
    pub sigmas: Option<Vec<f64>>,
    pub verdict: Verdict,
    /// Threshold applied, in absolute units or standard errors.
    pub threshold: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// No threshold applies; reported for information.
    Info,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Pass => "PASS",
            Self::Fail => "FAIL",
            Self::Info => "INFO",
        }
    }
}

pub fn compare_pair(a: &Run, b: &Run) -> Pair {
    let (ta, tb) = (&a.trajectory, &b.trajectory);
    let mut deviation = Vec::with_capacity(ta.len());
    let mc = ta.stderr.is_some() || tb.stderr.is_some();
    let mut sigmas = mc.then(Vec::new);
    for i in 0..ta.len() {
        let diff = ta.bloch[i].components() - tb.bloch[i].components();
        deviation.push(diff.amax());
        if let Some(sig) = sigmas.as_mut() {
            let se = |t: &Trajectory, k: usize| t.stderr.as_ref().map_or(0.0, |s| s[i][k]);
            let z = diff
                .iter()
                .enumerate()
                .map(|(k, dev)| {
                    let dev = dev.abs();
                    if dev < ROUNDOFF_FLOOR {
                        0.0
                    } else {
                        dev / se(ta, k).hypot(se(tb, k))
                    }
                })
                .fold(0.0, f64::max);
            sig.push(z);
        }
    }
    let perturbative = a.method == Method::Perturbation || b.method == Method::Perturbation;
    let (verdict, threshold) = if perturbative {
        (Verdict::Info, None)
    } else if let Some(sig) = &sigmas {
        let worst = sig.iter().copied().fold(0.0, f64::max);
        (pass(worst <= MC_SIGMAS), Some(MC_SIGMAS))
    } else {
        let tail = |t: &Trajectory| t.meta.tail_bound.unwrap_or(0.0);
        let tol = DETERMINISTIC_TOLERANCE + tail(ta) + tail(tb);
        let worst = deviation.iter().copied().fold(0.0, f64::max);
        (pass(worst <= tol), Some(tol))
    };
    Pair {
        a: a.method,
        b: b.method,
        deviation,
        sigmas,
        verdict,
        threshold,
    }
}

fn pass(ok: bool) -> Verdict {
    if ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

pub fn compare_all(runs: &[Run]) -> Vec<Pair> {
    let mut pairs = Vec::new();
    for (i, a) in runs.iter().enumerate() {
        for b in &runs[i + 1..] {
            pairs.push(compare_pair(a, b));
        }
    }
    pairs
}

pub(crate) fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}
