//! Scenario files, method runners and CSV output for the `bloch` tool.

pub mod model;
pub mod output;
pub mod runner;
pub mod scenario;

use std::path::PathBuf;

pub use bloch_core::CMatrix;
pub use scenario::{parse_scenario, serialize_scenario, Method, ParseError, Scenario};

/// Exit status for validation problems.
pub const EXIT_INVALID: u8 = 1;
/// Exit status for numerical failures and failed comparisons.
pub const EXIT_FAILED: u8 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}", render(.0))]
    Scenario(Vec<ParseError>),
    #[error("{0}")]
    Core(#[from] bloch_core::Error),
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

fn render(errors: &[ParseError]) -> String {
    errors
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("\n")
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use bloch_core::Error as E;
        match self {
            Self::Scenario(_) => EXIT_INVALID,
            Self::Core(E::Diverged { .. }) => EXIT_FAILED,
            Self::Core(_) => EXIT_INVALID,
            Self::Io { .. } => EXIT_FAILED,
        }
    }
}

/// Overrides from the command line; `None` keeps the scenario value.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub method: Option<Method>,
    pub seed: Option<u64>,
    pub dt: Option<f64>,
    pub order: Option<usize>,
    pub trajectories: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, s: &mut Scenario) -> Result<(), CliError> {
        if let Some(m) = self.method {
            s.method = m;
        }
        if let Some(x) = self.seed {
            s.seed = x;
        }
        if let Some(x) = self.dt {
            s.dt = x;
        }
        if let Some(x) = self.order {
            s.order = Some(x);
        }
        if let Some(x) = self.trajectories {
            s.trajectories = x;
        }
        let errors = s.validate();
        if errors.is_empty() {
            Ok(())
        } else {
            Err(CliError::Scenario(errors))
        }
    }
}

/// Files written by [`run_scenario`] and the comparison outcome.
#[derive(Debug)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    /// Set for `compare`.
    pub report: Option<String>,
    pub passed: bool,
    pub warnings: Vec<String>,
}

/// Runs the scenario's method and writes `<name>.<method>.csv`,
/// `<name>.meta` and, for `compare`, `<name>.compare.csv` and
/// `<name>.compare.txt` into `out`.
pub fn run_scenario(s: &Scenario, out: &std::path::Path) -> Result<Outcome, CliError> {
    let model = model::Model::build(s)?;
    let methods = match s.method {
        Method::Compare => s.compare_methods(),
        m => vec![m],
    };
    let runs = methods
        .iter()
        .map(|&m| runner::run_method(s, &model, m))
        .collect::<Result<Vec<_>, _>>()?;
    std::fs::create_dir_all(out).map_err(|source| CliError::Io {
        path: out.to_path_buf(),
        source,
    })?;
    let mut files = Vec::new();
    let mut warnings = Vec::new();
    for run in &runs {
        let csv = output::trajectory_csv(run, s.dimension);
        files.push(output::write(
            out,
            format!("{}.{}.csv", s.name, run.method),
            &csv,
        )?);
        if run.trajectory.meta.accuracy_warning {
            warnings.push(format!(
                "{}: step-halving deviation {:.3e} exceeds {:.0e}; consider a smaller dt",
                run.method,
                run.trajectory
                    .meta
                    .step_halving_deviation
                    .unwrap_or(f64::NAN),
                bloch_core::propagator::STEP_HALVING_TOLERANCE
            ));
        }
    }
    let meta = output::meta_text(&s.name, s.dimension, &runs);
    files.push(output::write(out, format!("{}.meta", s.name), &meta)?);
    let (report, passed) = if s.method == Method::Compare {
        let pairs = runner::compare_all(&runs);
        let csv = output::compare_csv(&runs[0].trajectory.times, &pairs);
        files.push(output::write(out, format!("{}.compare.csv", s.name), &csv)?);
        let report = output::compare_report(&pairs);
        files.push(output::write(
            out,
            format!("{}.compare.txt", s.name),
            &report,
        )?);
        let passed = pairs.iter().all(|p| p.verdict != runner::Verdict::Fail);
        (Some(report), passed)
    } else {
        (None, true)
    };
    Ok(Outcome {
        files,
        report,
        passed,
        warnings,
    })
}
