//! Maximum a posteriori merits under independent Gaussian priors.
//!
//! The penalized log-likelihood is strictly concave, so damped Newton with
//! a backtracking line search converges from the prior means without any
//! connectivity requirement.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graph::ExamResultGraph;

use super::{log_logistic, logistic, FitOptions, FitReport, MeritVector, Normalization, PriorSpec};

struct Posterior {
    /// `(student vertex, question vertex, correct)`
    edges: Vec<(usize, usize, bool)>,
    mean: Vec<f64>,
    precision: Vec<f64>,
}

impl Posterior {
    fn new(g: &ExamResultGraph, prior: &PriorSpec) -> Self {
        let roster = g.roster();
        let n = roster.num_students();
        let size = roster.num_vertices();
        let mean = (0..size)
            .map(|v| if v < n { prior.student_mean } else { prior.question_mean })
            .collect();
        let precision = (0..size)
            .map(|v| {
                let s = if v < n { prior.student_std } else { prior.question_std };
                1.0 / (s * s)
            })
            .collect();
        let edges = g
            .outcomes()
            .map(|(i, j, w)| (roster.student_vertex(i), roster.question_vertex(j), w))
            .collect();
        Self { edges, mean, precision }
    }

    fn objective(&self, u: &[f64]) -> f64 {
        let fit: f64 = self
            .edges
            .iter()
            .map(|&(s, q, w)| {
                let d = u[s] - u[q];
                log_logistic(if w { d } else { -d })
            })
            .sum();
        let penalty: f64 = u
            .iter()
            .zip(&self.mean)
            .zip(&self.precision)
            .map(|((x, m), p)| 0.5 * p * (x - m) * (x - m))
            .sum();
        fit - penalty
    }

    fn gradient(&self, u: &[f64]) -> DVector<f64> {
        let mut grad = DVector::from_iterator(
            u.len(),
            u.iter()
                .zip(&self.mean)
                .zip(&self.precision)
                .map(|((x, m), p)| -p * (x - m)),
        );
        for &(s, q, w) in &self.edges {
            let r = if w { 1.0 } else { 0.0 } - logistic(u[s] - u[q]);
            grad[s] += r;
            grad[q] -= r;
        }
        grad
    }

    /// Negative Hessian: weighted graph Laplacian plus the prior precisions.
    fn curvature(&self, u: &[f64]) -> DMatrix<f64> {
        let mut h = DMatrix::from_diagonal(&DVector::from_column_slice(&self.precision));
        for &(s, q, _) in &self.edges {
            let p = logistic(u[s] - u[q]);
            let c = p * (1.0 - p);
            h[(s, s)] += c;
            h[(q, q)] += c;
            h[(s, q)] -= c;
            h[(q, s)] -= c;
        }
        h
    }
}

/// MAP merits for every vertex of `g`'s roster.
///
/// The result is left unnormalized because the prior fixes the location.
/// `residual` is the ∞-norm of the posterior gradient.
pub fn map_fit(g: &ExamResultGraph, prior: &PriorSpec, opts: FitOptions) -> Result<FitReport> {
    prior.validate()?;
    opts.validate()?;
    let post = Posterior::new(g, prior);
    let mut u = post.mean.clone();
    let mut value = post.objective(&u);
    let mut grad = post.gradient(&u);
    let mut iterations = 0;

    let report = |u: Vec<f64>, iterations, residual, converged| -> Result<FitReport> {
        let merits = MeritVector::new((0..u.len()).collect(), u, Normalization::Unnormalized)?;
        Ok(FitReport {
            merits,
            iterations,
            residual,
            converged,
        })
    };

    loop {
        let residual = grad.amax();
        if residual <= opts.tol {
            return report(u, iterations, residual, true);
        }
        if iterations >= opts.max_iter {
            let best = report(u, iterations, residual, false)?.merits;
            return Err(Error::NonConvergence {
                iterations,
                residual,
                best: Box::new(best),
            });
        }
        let step = post
            .curvature(&u)
            .cholesky()
            .ok_or_else(|| Error::NonConvergence {
                iterations,
                residual,
                best: Box::new(
                    MeritVector::new((0..u.len()).collect(), u.clone(), Normalization::Unnormalized).expect("finite"),
                ),
            })?
            .solve(&grad);
        let slope = grad.dot(&step);
        let mut t = 1.0;
        let mut candidate;
        loop {
            candidate = u.iter().zip(step.iter()).map(|(x, s)| x + t * s).collect::<Vec<_>>();
            let next = post.objective(&candidate);
            if next >= value + 1e-4 * t * slope || t < 1e-12 {
                value = next;
                break;
            }
            t *= 0.5;
        }
        u = candidate;
        grad = post.gradient(&u);
        iterations += 1;
    }
}
