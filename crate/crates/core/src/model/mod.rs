//! The Bradley-Terry-Luce answering model and its estimators.
//!
//! A student with ability `u_i` answers a question of difficulty `u_j`
//! correctly with probability `f(u_i - u_j)`, where `f` is the logistic
//! function. Abilities and difficulties share one scale and one vector.

mod map;
mod mle;

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grading::GradeVector;
use crate::graph::{ExamResultGraph, Roster, TaskAssignmentGraph};

pub use map::map_fit;
pub use mle::{likelihood_residual, mle_fit, mle_fit_from, MmSolver};

/// `1 / (1 + e^{-x})`.
#[inline]
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln f(x)` without cancellation for large `|x|`.
#[inline]
pub fn log_logistic(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// How a merit vector is pinned down along the additive gauge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Normalization {
    /// Raw values, e.g. ground truth or a MAP estimate.
    Unnormalized,
    /// Entries sum to zero.
    MeanZero,
    /// The given vertex is exactly zero.
    Anchored(usize),
}

/// Merits for a set of vertices (a whole roster or one component).
#[derive(Debug, Clone, PartialEq)]
pub struct MeritVector {
    vertices: Vec<usize>,
    values: Vec<f64>,
    normalization: Normalization,
}

impl MeritVector {
    /// `vertices` must be strictly increasing and `values` finite.
    pub fn new(vertices: Vec<usize>, values: Vec<f64>, normalization: Normalization) -> Result<Self> {
        if vertices.len() != values.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} vertices but {} merits",
                vertices.len(),
                values.len()
            )));
        }
        if vertices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::ParameterOutOfRange(
                "merit vertices must be strictly increasing".into(),
            ));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::ParameterOutOfRange(format!(
                "merit for vertex {} is not finite",
                vertices[k]
            )));
        }
        let merits = Self {
            vertices,
            values,
            normalization,
        };
        Ok(match normalization {
            Normalization::Unnormalized => merits,
            Normalization::MeanZero => merits.mean_zero(),
            Normalization::Anchored(v) => merits.anchored(v)?,
        })
    }

    /// Abilities for students then difficulties for questions, covering a whole roster.
    pub fn from_parts(abilities: &[f64], difficulties: &[f64]) -> Result<Self> {
        let values: Vec<f64> = abilities.iter().chain(difficulties).copied().collect();
        Self::new((0..values.len()).collect(), values, Normalization::Unnormalized)
    }

    /// Every vertex of `roster` at the same merit.
    pub fn constant(roster: &Roster, value: f64) -> Self {
        let n = roster.num_vertices();
        Self {
            vertices: (0..n).collect(),
            values: vec![value; n],
            normalization: Normalization::Unnormalized,
        }
    }

    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.vertices.iter().copied().zip(self.values.iter().copied())
    }

    #[inline]
    pub fn get(&self, vertex: usize) -> Option<f64> {
        // Whole-roster vectors index directly.
        if self.vertices.get(vertex) == Some(&vertex) {
            return Some(self.values[vertex]);
        }
        self.vertices.binary_search(&vertex).ok().map(|k| self.values[k])
    }

    pub fn try_get(&self, vertex: usize) -> Result<f64> {
        self.get(vertex).ok_or(Error::MissingMerit(vertex))
    }

    /// Shifted so the entries sum to zero.
    pub fn mean_zero(&self) -> Self {
        let mean = self.values.iter().sum::<f64>() / self.values.len().max(1) as f64;
        let mut values: Vec<f64> = self.values.iter().map(|v| v - mean).collect();
        // One correction pass to bring the sum closer to zero.
        let drift = values.iter().sum::<f64>() / values.len().max(1) as f64;
        values.iter_mut().for_each(|v| *v -= drift);
        Self {
            vertices: self.vertices.clone(),
            values,
            normalization: Normalization::MeanZero,
        }
    }

    /// Shifted so `vertex` sits at exactly zero.
    pub fn anchored(&self, vertex: usize) -> Result<Self> {
        let base = self.try_get(vertex)?;
        Ok(Self {
            vertices: self.vertices.clone(),
            values: self.values.iter().map(|v| v - base).collect(),
            normalization: Normalization::Anchored(vertex),
        })
    }

    /// Every entry plus `c`; the tag becomes `Unnormalized`.
    pub fn shifted(&self, c: f64) -> Self {
        Self {
            vertices: self.vertices.clone(),
            values: self.values.iter().map(|v| v + c).collect(),
            normalization: Normalization::Unnormalized,
        }
    }

    /// Restriction to `vertices` (ascending), failing on uncovered ones.
    pub fn restrict(&self, vertices: &[usize]) -> Result<Self> {
        let values = vertices.iter().map(|&v| self.try_get(v)).collect::<Result<Vec<_>>>()?;
        Self::new(vertices.to_vec(), values, Normalization::Unnormalized)
    }

    /// Largest pairwise merit difference.
    pub fn span(&self) -> f64 {
        merit_span(self)
    }

    /// `‖self − other‖∞` after shifting both to mean zero over the common support.
    pub fn aligned_distance(&self, other: &MeritVector) -> Result<f64> {
        let a = self.restrict(other.vertices())?.mean_zero();
        let b = other.mean_zero();
        Ok(a.values
            .iter()
            .zip(&b.values)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max))
    }
}

/// `max u − min u`.
pub fn merit_span(u: &MeritVector) -> f64 {
    let (lo, hi) = u
        .values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if u.values.is_empty() {
        0.0
    } else {
        hi - lo
    }
}

/// Independent Gaussian priors on abilities and on difficulties.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub student_mean: f64,
    pub student_std: f64,
    pub question_mean: f64,
    pub question_std: f64,
}

impl PriorSpec {
    pub fn new(student_mean: f64, student_std: f64, question_mean: f64, question_std: f64) -> Result<Self> {
        let prior = Self {
            student_mean,
            student_std,
            question_mean,
            question_std,
        };
        prior.validate()?;
        Ok(prior)
    }

    pub fn standard() -> Self {
        Self::new(0.0, 1.0, 0.0, 1.0).expect("standard prior is valid")
    }

    pub fn validate(&self) -> Result<()> {
        let ok = [self.student_mean, self.question_mean].iter().all(|m| m.is_finite())
            && [self.student_std, self.question_std]
                .iter()
                .all(|s| s.is_finite() && *s > 0.0);
        if ok {
            Ok(())
        } else {
            Err(Error::ParameterOutOfRange(format!("invalid prior {self:?}")))
        }
    }
}

/// Outcome of a likelihood-based fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub merits: MeritVector,
    pub iterations: usize,
    /// ∞-norm of the first-order condition at `merits`.
    pub residual: f64,
    pub converged: bool,
}

/// Stopping rule shared by the fitters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 10_000,
        }
    }
}

impl FitOptions {
    pub fn validate(&self) -> Result<()> {
        if self.tol > 0.0 && self.tol.is_finite() && self.max_iter >= 1 {
            Ok(())
        } else {
            Err(Error::ParameterOutOfRange(format!("invalid fit options {self:?}")))
        }
    }
}

/// Probability that student `i` answers question `j` correctly.
pub fn answer_probability(u: &MeritVector, roster: &Roster, i: usize, j: usize) -> Result<f64> {
    let ui = u.try_get(roster.student_vertex(i))?;
    let uj = u.try_get(roster.question_vertex(j))?;
    Ok(logistic(ui - uj))
}

/// Draws exam outcomes on a fixed assignment; the edge probabilities are
/// computed once.
#[derive(Debug, Clone)]
pub struct ExamSampler {
    assignment: TaskAssignmentGraph,
    probabilities: Vec<f64>,
}

impl ExamSampler {
    pub fn new(assignment: &TaskAssignmentGraph, u: &MeritVector) -> Result<Self> {
        let roster = assignment.roster();
        let probabilities = assignment
            .edges()
            .map(|(i, j)| answer_probability(u, roster, i, j))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            assignment: assignment.clone(),
            probabilities,
        })
    }

    /// Success probability per edge, in student-major edge order.
    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn assignment(&self) -> &TaskAssignmentGraph {
        &self.assignment
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ExamResultGraph {
        let mut p = self.probabilities.iter();
        ExamResultGraph::from_fn(self.assignment.clone(), |_, _| {
            let p = *p.next().expect("one probability per edge");
            rng.random::<f64>() < p
        })
    }
}

/// One exam: an independent Bernoulli outcome per assigned pair.
pub fn sample_exam_result<R: Rng + ?Sized>(
    g: &TaskAssignmentGraph,
    u: &MeritVector,
    rng: &mut R,
) -> Result<ExamResultGraph> {
    Ok(ExamSampler::new(g, u)?.sample(rng))
}

/// Expected accuracy of each student on a uniformly random bank question.
pub fn benchmark(u: &MeritVector, roster: &Arc<Roster>) -> Result<GradeVector> {
    let q = roster.num_questions();
    let difficulties = (0..q)
        .map(|j| u.try_get(roster.question_vertex(j)))
        .collect::<Result<Vec<_>>>()?;
    let grades = (0..roster.num_students())
        .map(|i| {
            let ui = u.try_get(roster.student_vertex(i))?;
            Ok(difficulties.iter().map(|uj| logistic(ui - uj)).sum::<f64>() / q as f64)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GradeVector::new(roster.clone(), grades, "opt"))
}

/// `Σ log f(u_winner − u_loser)` over every directed edge of `g`.
pub fn log_likelihood(u: &MeritVector, g: &ExamResultGraph) -> Result<f64> {
    let roster = g.roster();
    let mut total = 0.0;
    for (i, j, w) in g.outcomes() {
        let diff = u.try_get(roster.student_vertex(i))? - u.try_get(roster.question_vertex(j))?;
        total += log_logistic(if w { diff } else { -diff });
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn logistic_values() {
        assert_eq!(logistic(0.0), 0.5);
        assert!((logistic(3f64.ln()) - 0.75).abs() < 1e-15);
        for x in [-30.0, -2.5, 0.1, 7.0, 40.0] {
            assert!((logistic(x) + logistic(-x) - 1.0).abs() <= 1e-15);
            assert!((log_logistic(x) - logistic(x).ln()).abs() < 1e-12);
        }
        assert!(log_logistic(-800.0).is_finite());
    }

    #[test]
    fn reference_extremes() {
        let roster = Roster::numbered(1, 1).unwrap();
        let u = MeritVector::from_parts(&[1.149], &[-3.090]).unwrap();
        let p = answer_probability(&u, &roster, 0, 0).unwrap();
        assert!((p - 0.9858).abs() < 5e-5);
        assert!((merit_span(&u) - 4.239).abs() < 1e-12);
        let shifted = u.shifted(2.5);
        assert!((answer_probability(&shifted, &roster, 0, 0).unwrap() - p).abs() < 1e-15);
    }

    #[test]
    fn missing_merit_is_an_error() {
        let roster = Roster::numbered(1, 2).unwrap();
        let u = MeritVector::new(vec![0, 1], vec![0.0, 0.0], Normalization::Unnormalized).unwrap();
        assert!(matches!(
            answer_probability(&u, &roster, 0, 1),
            Err(Error::MissingMerit(2))
        ));
    }

    #[test]
    fn normalizations() {
        let u = MeritVector::new(vec![0, 3, 5], vec![1.0, 2.0, 6.0], Normalization::MeanZero).unwrap();
        assert!(u.values().iter().sum::<f64>().abs() < 1e-9);
        let a = u.anchored(3).unwrap();
        assert_eq!(a.get(3), Some(0.0));
        assert_eq!(a.get(4), None);
        assert!(MeritVector::new(vec![1, 0], vec![0.0, 0.0], Normalization::Unnormalized).is_err());
        assert!(MeritVector::new(vec![0], vec![f64::NAN], Normalization::Unnormalized).is_err());
    }

    #[test]
    fn span_examples() {
        let u = MeritVector::new(vec![0, 1, 2], vec![-1.0, 0.0, 2.0], Normalization::Unnormalized).unwrap();
        assert_eq!(merit_span(&u), 3.0);
        let c = MeritVector::constant(&Roster::numbered(2, 2).unwrap(), 0.7);
        assert_eq!(merit_span(&c), 0.0);
    }

    #[test]
    fn benchmark_examples() {
        let roster = Arc::new(Roster::numbered(1, 3).unwrap());
        let u = MeritVector::from_parts(&[0.0], &[-1.0, 0.0, 1.0]).unwrap();
        let opt = benchmark(&u, &roster).unwrap();
        assert!((opt.grades()[0] - 0.5).abs() < 1e-15);

        let roster = Arc::new(Roster::numbered(3, 4).unwrap());
        let opt = benchmark(&MeritVector::constant(&roster, 1.3), &roster).unwrap();
        assert!(opt.grades().iter().all(|&g| g == 0.5));
    }

    #[test]
    fn log_likelihood_examples() {
        let roster = Arc::new(Roster::numbered(2, 1).unwrap());
        let empty = ExamResultGraph::from_triples(roster.clone(), []).unwrap();
        let u = MeritVector::from_parts(&[0.3, -0.2], &[0.1]).unwrap();
        assert_eq!(log_likelihood(&u, &empty).unwrap(), 0.0);

        let g = ExamResultGraph::from_triples(roster, [(0, 0, true), (1, 0, false)]).unwrap();
        let expected = logistic(0.2).ln() + logistic(0.3).ln();
        assert!((log_likelihood(&u, &g).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn saturated_merits_always_correct() {
        let roster = Arc::new(Roster::numbered(1000, 1).unwrap());
        let g = TaskAssignmentGraph::complete(roster.clone());
        let u = MeritVector::from_parts(&vec![25.0; 1000], &[-25.0]).unwrap();
        let exam = sample_exam_result(&g, &u, &mut rng_from_seed(5)).unwrap();
        assert!(exam.outcomes().all(|(_, _, w)| w));
    }

    #[test]
    fn equal_merits_half_correct() {
        let roster = Arc::new(Roster::numbered(100, 100).unwrap());
        let g = TaskAssignmentGraph::complete(roster.clone());
        let u = MeritVector::constant(&roster, 0.0);
        let exam = sample_exam_result(&g, &u, &mut rng_from_seed(11)).unwrap();
        let rate = exam.outcomes().filter(|o| o.2).count() as f64 / 10_000.0;
        assert!((rate - 0.5).abs() < 0.02);

        let again = sample_exam_result(&g, &u, &mut rng_from_seed(11)).unwrap();
        assert_eq!(exam, again);
    }
}
