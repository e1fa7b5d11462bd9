//! Sparse best rank-1 tensor approximation.
//!
//! Four approximation algorithms with worst-case guarantees, alternating
//! maximization refinement, and a deflation-based clustering pipeline built
//! on top of them.

pub mod am;
pub mod bench;
pub mod clustering;
pub mod error;
pub mod io;
pub mod linalg;
pub mod rank1;
pub mod sparse;
pub mod tensor;
pub mod unit_vector;

pub use am::{am_l0, am_l1, random_feasible, AmConfig, AmModel, AmTrace, L1Result};
pub use clustering::{
    cluster_error, deflate, kmeans, reduced_samples, select_k, select_model, stack_samples, stc_pipeline,
    ClusterAssignment, DeflationConfig, DeflationModel, GapRule, Init, KChoice, StcConfig,
};
pub use error::{Error, Result};
pub use linalg::{lambda_max, leading_singular_triple, MatRef, SingularTriple};
pub use rank1::{
    algorithm_a, algorithm_b, algorithm_c, algorithm_d, approximate, brute_force_oracle, objective,
    upper_bound, Algorithm, Diagnostics, Rank1Result, SparseFactorSet, SparsityBudget,
};
pub use sparse::{soft_threshold_normalize, truncate, truncate_normalize, Truncation};
pub use tensor::DenseTensor;
pub use unit_vector::UnitVector;
