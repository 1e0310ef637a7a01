//! Regression Monte Carlo solvers and property checks for one-dimensional
//! quadratic BSDEs and reflected BSDEs with one-sided growth in `y`.

pub mod bsde;
pub mod checks;
pub mod error;
pub mod func;
pub mod generator;
pub mod harness;
pub mod ode;
pub mod quadrature;
pub mod rbsde;
pub mod regression;
pub mod stochastic;
pub mod transforms;

pub use bsde::{solve_bsde, SolutionProcess, SolverConfig, TerminalCondition};
pub use checks::{CheckItem, CheckReport, Status};
pub use error::{Error, Result};
pub use func::{ScalarFn, StateFn};
pub use generator::{Domain, GeneratorFamily, GeneratorSpec, GrowthEnvelope};
pub use regression::{BasisKind, RegressionBasis};
pub use stochastic::{PathBundle, TimeGrid};
pub use ode::EnvelopeSolution;
pub use rbsde::{solve_rbsde, Obstacle};
pub use transforms::{ClosedForm, LambdaWeight, UPhiTransform};
pub use harness::{Relation, Scenario, ScenarioResult};
