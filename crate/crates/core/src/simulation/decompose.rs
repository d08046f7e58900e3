//! Ex-post error = ex-post bias + variance, averaged over graphs and students.

use serde::Serialize;

use super::bias::replicate_grades;
use super::exact::exact_grade_moments;
use super::stats::{mean, sample_variance, standard_error};
use crate::error::{Error, Result};
use crate::grading::GradingRule;
use crate::graph::TaskAssignmentGraph;
use crate::model::{benchmark, ExamSampler, MeritVector};
use crate::rng::SeedStream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorDecomposition {
    pub bias: f64,
    pub variance: f64,
    pub error: f64,
    /// Standard errors over per-(graph, student) contributions; zero when exact.
    pub bias_se: f64,
    pub variance_se: f64,
    pub error_se: f64,
    /// Replications per graph that produced grades, summed over graphs.
    pub replications: usize,
    pub failed: usize,
}

impl ErrorDecomposition {
    /// `error − (bias + variance)`.
    pub fn identity_residual(&self) -> f64 {
        self.error - (self.bias + self.variance)
    }
}

/// Monte-Carlo decomposition with unbiased per-cell estimators.
///
/// For each (graph, student) cell with `R` grades `a_r`: error is the mean of
/// `(a_r − opt)²`, variance is the sample variance `s²`, and squared bias is
/// `(ā − opt)² − s²/R`. Error is computed from the raw grades, not from the
/// other two.
pub fn decompose_error(
    rule: &dyn GradingRule,
    graphs: &[TaskAssignmentGraph],
    u: &MeritVector,
    replications: usize,
    seed: u64,
) -> Result<ErrorDecomposition> {
    if replications < 2 {
        return Err(Error::ParameterOutOfRange(
            "decomposition needs at least 2 replications".into(),
        ));
    }
    if graphs.is_empty() {
        return Err(Error::ParameterOutOfRange(
            "decomposition needs at least one graph".into(),
        ));
    }
    let stream = SeedStream::new(seed);
    let (mut biases, mut variances, mut errors) = (Vec::new(), Vec::new(), Vec::new());
    let (mut used, mut failed) = (0, 0);
    for (k, g) in graphs.iter().enumerate() {
        let opt = benchmark(u, g.roster())?;
        let sampler = ExamSampler::new(g, u)?;
        let runs = replicate_grades(&[rule], &sampler, replications, stream.child(k as u64));
        let mut grades = Vec::with_capacity(replications);
        let mut first_error = None;
        for mut run in runs {
            match run.remove(0) {
                Ok(a) => grades.push(a),
                Err(e) => {
                    first_error.get_or_insert(e);
                }
            }
        }
        failed += replications - grades.len();
        if grades.len() < 2 {
            return Err(first_error.unwrap_or_else(|| {
                Error::ParameterOutOfRange(format!("graph {k} has fewer than 2 successful replications"))
            }));
        }
        used += grades.len();
        let r = grades.len() as f64;
        for (i, &o) in opt.grades().iter().enumerate() {
            let column: Vec<f64> = grades.iter().map(|a| a[i]).collect();
            let abar = mean(&column);
            let s2 = sample_variance(&column);
            errors.push(column.iter().map(|a| (a - o) * (a - o)).sum::<f64>() / r);
            variances.push(s2);
            biases.push((abar - o) * (abar - o) - s2 / r);
        }
    }
    let (error_se, variance_se) = (standard_error(&errors), standard_error(&variances));
    Ok(ErrorDecomposition {
        bias: mean(&biases),
        variance: mean(&variances),
        error: mean(&errors),
        bias_se: (error_se * error_se + variance_se * variance_se).sqrt(),
        variance_se,
        error_se,
        replications: used,
        failed,
    })
}

/// Exact decomposition by outcome enumeration on each graph.
pub fn decompose_error_exact(
    rule: &dyn GradingRule,
    graphs: &[TaskAssignmentGraph],
    u: &MeritVector,
) -> Result<ErrorDecomposition> {
    if graphs.is_empty() {
        return Err(Error::ParameterOutOfRange(
            "decomposition needs at least one graph".into(),
        ));
    }
    let (mut biases, mut variances, mut errors) = (Vec::new(), Vec::new(), Vec::new());
    for g in graphs {
        let opt = benchmark(u, g.roster())?;
        let m = exact_grade_moments(rule, g, u, Some(opt.grades()))?;
        let err = m.error.expect("benchmark supplied");
        for (i, &o) in opt.grades().iter().enumerate() {
            biases.push((m.mean[i] - o) * (m.mean[i] - o));
            variances.push(m.variance[i]);
            errors.push(err[i]);
        }
    }
    Ok(ErrorDecomposition {
        bias: mean(&biases),
        variance: mean(&variances),
        error: mean(&errors),
        bias_se: 0.0,
        variance_se: 0.0,
        error_se: 0.0,
        replications: graphs.len(),
        failed: 0,
    })
}
