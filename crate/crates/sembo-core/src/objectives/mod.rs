//! Benchmark objectives: synthetic functions with randomized transforms and
//! combinatorial problems with hidden coefficients.

pub mod bbob;
pub mod combo;
pub mod synthetic;

pub use bbob::BbobFunction;
pub use combo::{ComboEval, ComboKind, CombinatorialProblem};
pub use synthetic::{SyntheticObjective, TransformOptions};
