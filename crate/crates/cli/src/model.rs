//! Turns a parsed [`Scenario`] into core problem types.

use bloch_core::oracle::MatrixProblem;
use bloch_core::{
    BlochVector, CMatrix, CoeffVector, EvolutionProblem, GeneratorBasis, StructureTensor, TimeGrid,
};

use crate::scenario::{Convention, Initial, Operator, Scenario};
use crate::CliError;

pub struct Model {
    /// Present for the trace2 convention only.
    pub basis: Option<GeneratorBasis>,
    pub problem: EvolutionProblem,
    pub grid: TimeGrid,
}

impl Model {
    pub fn build(s: &Scenario) -> Result<Self, CliError> {
        let (basis, structure) = match &s.convention {
            Convention::Trace2 => {
                let basis = GeneratorBasis::gell_mann(s.dimension)?;
                let f = basis.structure_constants()?;
                (Some(basis), f)
            }
            Convention::CustomF(entries) => {
                let zero_based = entries
                    .iter()
                    .map(|&(i, j, k, f)| ((i - 1, j - 1, k - 1), f));
                (
                    None,
                    StructureTensor::from_entries(s.bloch_dim(), zero_based)?,
                )
            }
        };
        let coeffs = |op: &Operator| -> Result<CoeffVector, CliError> {
            Ok(match op {
                Operator::Bloch { scalar, vector } => CoeffVector::from_slice(*scalar, vector),
                Operator::Matrix(m) => {
                    let basis = basis.as_ref().expect("matrices need trace2");
                    basis.decompose_hermitian(&square(s.dimension, m))?
                }
            })
        };
        let r0 = match &s.initial {
            Initial::R0(r) => BlochVector::from_slice(r),
            Initial::Rho0(m) => {
                let basis = basis.as_ref().expect("rho0 needs trace2");
                basis.bloch_encode(&square(s.dimension, m))?
            }
        };
        let mut problem =
            EvolutionProblem::new(structure, coeffs(&s.hamiltonian)?, r0)?.with_picture(s.picture);
        for l in &s.lindblads {
            problem = problem.with_channel(coeffs(&l.operator)?, l.gamma.clone())?;
        }
        let grid = TimeGrid::uniform(s.t_final, s.output_step())?;
        Ok(Self {
            basis,
            problem,
            grid,
        })
    }

    /// Density-matrix form of the same problem, for the oracle and the
    /// matrix estimator.
    pub fn matrix_problem(&self, s: &Scenario) -> Result<MatrixProblem, CliError> {
        let basis = self.basis.as_ref().ok_or_else(|| {
            CliError::Core(bloch_core::Error::InvalidProblem(
                "density matrices need the trace2 convention".into(),
            ))
        })?;
        let operator = |op: &Operator| -> Result<CMatrix, CliError> {
            Ok(match op {
                Operator::Bloch { scalar, vector } => {
                    basis.operator(&CoeffVector::from_slice(*scalar, vector))?
                }
                Operator::Matrix(m) => square(s.dimension, m),
            })
        };
        let rho0 = match &s.initial {
            Initial::R0(_) => basis.bloch_decode(self.problem.r0())?,
            Initial::Rho0(m) => square(s.dimension, m),
        };
        let mut p = MatrixProblem::new(operator(&s.hamiltonian)?, rho0)?;
        for l in &s.lindblads {
            p = p.with_lindblad(operator(&l.operator)?, l.gamma.clone())?;
        }
        Ok(p)
    }
}

fn square(n: usize, entries: &[bloch_core::C64]) -> CMatrix {
    CMatrix::from_row_slice(n, n, entries)
}
