//! Constructive solution machinery for semilinear hyperbolic systems with
//! nonlocal boundary conditions.

pub mod analysis;
pub mod characteristics;
pub mod error;
pub mod expr;
pub mod fit;
pub mod gfunc;
pub mod interp;
pub mod mollifier;
pub mod numfmt;
pub mod output;
pub mod quadrature;
pub mod scenario;
pub mod solver;
pub mod system;

pub use analysis::{NonlinearityClass, SweepResult, UniquenessResult, VerificationReport};
pub use characteristics::CharTrace;
pub use error::{Error, Result};
pub use gfunc::{GrowthReport, Verdict};
pub use mollifier::{Mollifier, SingularDatum};
pub use scenario::ScenarioConfig;
pub use solver::{PicardConfig, SolutionGrid, SolveConfig, SolveReport};
pub use system::{FrozenSystem, SystemSpec};
