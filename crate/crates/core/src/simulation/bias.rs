use rayon::prelude::*;
use serde::Serialize;

use super::stats::{mean, standard_error};
use crate::error::{Error, Result};
use crate::grading::GradingRule;
use crate::graph::TaskAssignmentGraph;
use crate::model::{benchmark, ExamSampler, MeritVector};
use crate::rng::SeedStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Estimator {
    MonteCarlo,
    ExactEnumeration,
}

/// Ex-post bias of one rule on one fixed assignment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiasReport {
    pub rule: String,
    /// `E_w[alg_i] − opt_i`.
    pub per_student_deviation: Vec<f64>,
    /// Standard error of each expected-grade estimate (zero when exact).
    pub per_student_se: Vec<f64>,
    /// Squared deviation.
    pub per_student_bias: Vec<f64>,
    pub max_bias: f64,
    pub avg_bias: f64,
    /// Replications that produced grades.
    pub replications: usize,
    /// Replications excluded because grading failed.
    pub failed: usize,
    pub estimator: Estimator,
}

impl BiasReport {
    pub(crate) fn from_deviation(
        rule: &str,
        deviation: Vec<f64>,
        se: Vec<f64>,
        replications: usize,
        failed: usize,
        estimator: Estimator,
    ) -> Self {
        let bias: Vec<f64> = deviation.iter().map(|d| d * d).collect();
        Self {
            rule: rule.to_string(),
            max_bias: bias.iter().copied().fold(0.0, f64::max),
            avg_bias: mean(&bias),
            per_student_bias: bias,
            per_student_deviation: deviation,
            per_student_se: se,
            replications,
            failed,
            estimator,
        }
    }
}

/// Grades of every replication for every rule: `[replication][rule]`.
pub(crate) fn replicate_grades(
    rules: &[&dyn GradingRule],
    sampler: &ExamSampler,
    replications: usize,
    seed: SeedStream,
) -> Vec<Vec<Result<Vec<f64>>>> {
    (0..replications)
        .into_par_iter()
        .map(|r| {
            let exam = sampler.sample(&mut seed.child(r as u64).rng());
            rules
                .iter()
                .map(|rule| rule.grade(&exam).map(|g| g.into_grades()))
                .collect()
        })
        .collect()
}

/// Monte-Carlo ex-post bias of several rules against an explicit benchmark,
/// grading the same sampled exams with every rule.
pub fn ex_post_bias_against(
    rules: &[&dyn GradingRule],
    g: &TaskAssignmentGraph,
    u: &MeritVector,
    opt: &[f64],
    replications: usize,
    seed: SeedStream,
) -> Result<Vec<BiasReport>> {
    if replications == 0 {
        return Err(Error::ParameterOutOfRange("replications must be at least 1".into()));
    }
    let n = g.roster().num_students();
    if opt.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} benchmark values for {n} students",
            opt.len()
        )));
    }
    let sampler = ExamSampler::new(g, u)?;
    let mut runs = replicate_grades(rules, &sampler, replications, seed);

    let mut reports = Vec::with_capacity(rules.len());
    for (k, rule) in rules.iter().enumerate() {
        let mut ok = Vec::with_capacity(replications);
        let mut first_error = None;
        for run in runs.iter_mut() {
            match std::mem::replace(&mut run[k], Ok(Vec::new())) {
                Ok(grades) => ok.push(grades),
                Err(e) => {
                    first_error.get_or_insert(e);
                }
            }
        }
        if ok.is_empty() {
            return Err(first_error.expect("every replication failed"));
        }
        let mut deviation = Vec::with_capacity(n);
        let mut se = Vec::with_capacity(n);
        let mut column = vec![0.0; ok.len()];
        for i in 0..n {
            for (c, grades) in column.iter_mut().zip(&ok) {
                *c = grades[i];
            }
            deviation.push(mean(&column) - opt[i]);
            se.push(standard_error(&column));
        }
        reports.push(BiasReport::from_deviation(
            rule.name(),
            deviation,
            se,
            ok.len(),
            replications - ok.len(),
            Estimator::MonteCarlo,
        ));
    }
    Ok(reports)
}

/// [`estimate_ex_post_bias`] for several rules on common exam samples.
pub fn estimate_ex_post_bias_many(
    rules: &[&dyn GradingRule],
    g: &TaskAssignmentGraph,
    u: &MeritVector,
    replications: usize,
    seed: SeedStream,
) -> Result<Vec<BiasReport>> {
    let opt = benchmark(u, g.roster())?;
    ex_post_bias_against(rules, g, u, opt.grades(), replications, seed)
}

/// Monte-Carlo estimate of `(E_w[alg_i] − opt_i)²` on a fixed assignment.
pub fn estimate_ex_post_bias(
    rule: &dyn GradingRule,
    g: &TaskAssignmentGraph,
    u: &MeritVector,
    replications: usize,
    seed: u64,
) -> Result<BiasReport> {
    let mut reports = estimate_ex_post_bias_many(&[rule], g, u, replications, SeedStream::new(seed))?;
    Ok(reports.remove(0))
}
