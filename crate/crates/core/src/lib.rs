//! Linear Weston-Watkins multiclass SVM.
//!
//! The trainer runs block coordinate descent on a reparametrized dual in
//! which every block subproblem is a box-constrained QP with Hessian
//! `I + 11'`. [`subproblem`] solves that QP exactly in `O(k log k)` with a
//! sorted threshold sweep; [`bcd`] drives the outer loop with
//! duality-gap stopping; [`reparam`] holds the change of variables and the
//! objectives; [`oracle`] has slow independent solvers for verification;
//! [`data`] and [`model`] cover LIBSVM input and model files.
//!
//! ```
//! use wwsvm::{parse_libsvm, train, TrainConfig};
//!
//! let text = "1 1:1 2:0.2\n2 1:-0.3 2:1\n3 1:-1 2:-1\n1 1:0.9\n";
//! let data = parse_libsvm(text.as_bytes()).unwrap();
//! let out = train(&data, &TrainConfig { c: 1.0, delta: 1e-6, ..Default::default() }).unwrap();
//! assert_eq!(out.model.accuracy(&data).unwrap(), 1.0);
//! ```

// `!(x > 0.0)` style checks reject NaN on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bcd;
pub mod data;
pub mod error;
pub mod model;
pub mod oracle;
pub mod reparam;
pub mod subproblem;

pub use bcd::{train, train_with_observer, HaltReason, LogRow, TrainConfig, TrainOutput, TrainReport, Trainer};
pub use data::{parse_libsvm, parse_libsvm_keep_all, read_libsvm_file, LabelMap, SparseDataset, SparseInstance};
pub use error::{Error, Result};
pub use model::{load_model, save_model, Model};
pub use reparam::{DualState, WeightMatrix};
pub use subproblem::{solve_subproblem, SubproblemInput, SubproblemSolution, SubproblemSolver};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/subproblem.md")]
    mod subproblem {}
    #[doc = include_str!("../../../book/src/reparametrization.md")]
    mod reparametrization {}
    #[doc = include_str!("../../../book/src/training.md")]
    mod training {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
    #[doc = include_str!("../../../book/src/formats.md")]
    mod formats {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
