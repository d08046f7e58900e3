//! Fair grading for randomized exams.
//!
//! Students receive random subsets of a question bank. Outcomes follow the
//! Bradley-Terry-Luce (Rasch) model: student `i` answers question `j`
//! correctly with probability `f(u_i − u_j)`. This crate
//!
//! - samples random task assignments ([`graph::sample_assignment`]),
//! - analyses the directed exam result graph (strongly connected
//!   components and the reachability order of their condensation),
//! - fits merits by maximum likelihood inside each component
//!   ([`model::mle_fit`]) or by MAP over the whole graph,
//! - grades students with the structural four-case rule
//!   ([`grading::grade`]) or simple averaging,
//! - measures ex-post bias, variance and cross-validated error of any
//!   grading rule ([`simulation`]).
//!
//! The `examples/` directory holds one runnable program per capability and
//! the `fairgrade` binary exposes the experiment pipelines.

pub mod cli;
pub mod error;
pub mod grading;
pub mod graph;
pub mod io;
pub mod model;
pub mod rng;
pub mod simulation;

pub use error::{Error, Result};
pub use grading::{grade, predict_matrix, simple_average, GradeVector, GradingRule, PredictionMatrix, Rule};
pub use graph::{
    classify_pair, generate_assignment, is_strongly_connected, strongly_connected_components, AnswerMatrix,
    ComponentStructure, ExamResultGraph, PairCase, Roster, TaskAssignmentGraph,
};
pub use model::{benchmark, logistic, map_fit, mle_fit, FitOptions, FitReport, MeritVector, PriorSpec};
