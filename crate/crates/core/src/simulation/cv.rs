//! Cross-validation on complete answer matrices: train on a random sparse
//! subset of each sampled student's answers, score against the full row mean.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use super::stats::{mean, standard_error};
use crate::error::{Error, Result};
use crate::grading::GradingRule;
use crate::graph::{sample_assignment, AnswerMatrix, ExamResultGraph, Roster, TaskAssignmentGraph};
use crate::model::{ExamSampler, MeritVector, PriorSpec};
use crate::rng::SeedStream;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvRuleScore {
    pub rule: String,
    pub mse: f64,
    /// Standard error over repetitions.
    pub se: f64,
    /// Repetitions excluded because grading failed.
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvPoint {
    /// Student sample size.
    pub d1: usize,
    /// Questions per sampled student.
    pub d2: usize,
    pub repetitions: usize,
    pub rules: Vec<CvRuleScore>,
}

impl CvPoint {
    pub fn mse(&self, rule: &str) -> Option<f64> {
        self.rules.iter().find(|r| r.rule == rule).map(|r| r.mse)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvResult {
    pub points: Vec<CvPoint>,
    /// For each `d1`, the smallest `d2` at which `ours` has a strictly
    /// smaller MSE than `avg`, if any.
    pub threshold_table: Vec<(usize, Option<usize>)>,
}

impl CvResult {
    fn new(points: Vec<CvPoint>) -> Self {
        let mut d1s: Vec<usize> = points.iter().map(|p| p.d1).collect();
        d1s.dedup();
        let threshold_table = d1s
            .into_iter()
            .map(|d1| {
                let first = points
                    .iter()
                    .filter(|p| p.d1 == d1)
                    .find(|p| matches!((p.mse("ours"), p.mse("avg")), (Some(o), Some(a)) if o < a))
                    .map(|p| p.d2);
                (d1, first)
            })
            .collect();
        Self {
            points,
            threshold_table,
        }
    }
}

/// Squared-error mean over the sampled students, per rule.
fn repetition<R: Rng + ?Sized>(
    answers: &AnswerMatrix,
    d1: usize,
    d2: usize,
    rules: &[&dyn GradingRule],
    rng: &mut R,
) -> Result<Vec<Result<f64>>> {
    let full = answers.roster();
    let q = full.num_questions();
    let mut students: Vec<usize> = (0..full.num_students()).collect();
    let (chosen, _) = students.partial_shuffle(rng, d1);
    let chosen = chosen.to_vec();
    let roster = Arc::new(Roster::new(
        chosen.iter().map(|&i| full.students()[i].clone()).collect(),
        full.questions().to_vec(),
    )?);
    let assignment: TaskAssignmentGraph = sample_assignment(roster, q, d2, rng)?;
    let train = ExamResultGraph::from_fn(assignment, |i, j| {
        answers.get(chosen[i], j).expect("complete answer matrix")
    });
    let target: Vec<f64> = chosen.iter().map(|&i| answers.row_mean(i)).collect();
    Ok(rules
        .iter()
        .map(|rule| {
            let grades = rule.grade(&train)?;
            let sq: Vec<f64> = grades
                .grades()
                .iter()
                .zip(&target)
                .map(|(a, t)| (a - t) * (a - t))
                .collect();
            Ok(mean(&sq))
        })
        .collect())
}

fn summarize(rules: &[&dyn GradingRule], d1: usize, d2: usize, runs: Vec<Vec<Result<f64>>>) -> Result<CvPoint> {
    let repetitions = runs.len();
    let scores = rules
        .iter()
        .enumerate()
        .map(|(k, rule)| {
            let mut ok = Vec::with_capacity(repetitions);
            let mut first_error = None;
            for run in &runs {
                match &run[k] {
                    Ok(x) => ok.push(*x),
                    Err(e) => {
                        first_error.get_or_insert_with(|| e.to_string());
                    }
                }
            }
            if ok.is_empty() {
                return Err(Error::ParameterOutOfRange(format!(
                    "rule {} failed on every repetition: {}",
                    rule.name(),
                    first_error.unwrap_or_default()
                )));
            }
            Ok(CvRuleScore {
                rule: rule.name().to_string(),
                mse: mean(&ok),
                se: standard_error(&ok),
                failed: repetitions - ok.len(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CvPoint {
        d1,
        d2,
        repetitions,
        rules: scores,
    })
}

fn check_sizes(answers: &AnswerMatrix, d1: usize, d2: usize, repetitions: usize) -> Result<()> {
    let (n, q) = (answers.roster().num_students(), answers.roster().num_questions());
    if !answers.is_complete() {
        return Err(Error::DimensionMismatch(
            "cross-validation needs a complete answer matrix".into(),
        ));
    }
    if d1 == 0 || d1 > n || d2 == 0 || d2 > q {
        return Err(Error::DimensionMismatch(format!(
            "need 1 <= d1 <= {n} and 1 <= d2 <= {q}, got d1={d1}, d2={d2}"
        )));
    }
    if repetitions == 0 {
        return Err(Error::ParameterOutOfRange("repetitions must be at least 1".into()));
    }
    Ok(())
}

/// MSE of each rule for one `(d1, d2)` on a complete answer matrix.
pub fn cross_validate(
    answers: &AnswerMatrix,
    d1: usize,
    d2: usize,
    repetitions: usize,
    rules: &[&dyn GradingRule],
    seed: u64,
) -> Result<CvPoint> {
    check_sizes(answers, d1, d2, repetitions)?;
    let stream = SeedStream::new(seed).child(d1 as u64).child(d2 as u64);
    let runs = (0..repetitions)
        .into_par_iter()
        .map(|r| repetition(answers, d1, d2, rules, &mut stream.child(r as u64).rng()))
        .collect::<Result<Vec<_>>>()?;
    summarize(rules, d1, d2, runs)
}

/// [`cross_validate`] over every `(d1, d2)` pair, with the threshold table.
pub fn cross_validate_grid(
    answers: &AnswerMatrix,
    d1_values: &[usize],
    d2_values: &[usize],
    repetitions: usize,
    rules: &[&dyn GradingRule],
    seed: u64,
) -> Result<CvResult> {
    let mut d1s = d1_values.to_vec();
    d1s.sort_unstable();
    d1s.dedup();
    let mut d2s = d2_values.to_vec();
    d2s.sort_unstable();
    d2s.dedup();
    let mut points = Vec::with_capacity(d1s.len() * d2s.len());
    for &d1 in &d1s {
        for &d2 in &d2s {
            points.push(cross_validate(answers, d1, d2, repetitions, rules, seed)?);
        }
    }
    Ok(CvResult::new(points))
}

/// Synthetic answer matrix: merits drawn from `prior`, every pair answered.
pub fn simulated_answers<R: Rng + ?Sized>(prior: &PriorSpec, n: usize, q: usize, rng: &mut R) -> Result<AnswerMatrix> {
    prior.validate()?;
    let roster = Arc::new(Roster::numbered(n, q)?);
    let ability = Normal::new(prior.student_mean, prior.student_std).expect("validated prior");
    let difficulty = Normal::new(prior.question_mean, prior.question_std).expect("validated prior");
    let abilities: Vec<f64> = (0..n).map(|_| ability.sample(rng)).collect();
    let difficulties: Vec<f64> = (0..q).map(|_| difficulty.sample(rng)).collect();
    let u = MeritVector::from_parts(&abilities, &difficulties)?;
    let exam = ExamSampler::new(&TaskAssignmentGraph::complete(roster), &u)?.sample(rng);
    Ok(AnswerMatrix::from_exam_result(&exam))
}

/// Cross-validation on synthetic complete exams of `n` students and `q`
/// questions. Each repetition draws one exam, shared by every `d2`.
pub fn simulated_cross_validate(
    prior: &PriorSpec,
    n: usize,
    q: usize,
    d2_values: &[usize],
    repetitions: usize,
    rules: &[&dyn GradingRule],
    seed: u64,
) -> Result<CvResult> {
    if n == 0 || q == 0 {
        return Err(Error::DimensionMismatch(
            "need at least one student and one question".into(),
        ));
    }
    let mut d2s = d2_values.to_vec();
    d2s.sort_unstable();
    d2s.dedup();
    if let Some(&d2) = d2s.iter().find(|&&d2| d2 == 0 || d2 > q) {
        return Err(Error::DimensionMismatch(format!("need 1 <= d2 <= {q}, got {d2}")));
    }
    if repetitions == 0 {
        return Err(Error::ParameterOutOfRange("repetitions must be at least 1".into()));
    }
    let stream = SeedStream::new(seed);
    // [repetition][d2][rule]
    let runs = (0..repetitions)
        .into_par_iter()
        .map(|r| {
            let rep = stream.child(r as u64);
            let answers = simulated_answers(prior, n, q, &mut rep.child(0).rng())?;
            d2s.iter()
                .map(|&d2| repetition(&answers, n, d2, rules, &mut rep.child(1).child(d2 as u64).rng()))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut by_d2: Vec<Vec<Vec<Result<f64>>>> = d2s.iter().map(|_| Vec::with_capacity(repetitions)).collect();
    for run in runs {
        for (slot, per_rule) in by_d2.iter_mut().zip(run) {
            slot.push(per_rule);
        }
    }
    let points = d2s
        .iter()
        .zip(by_d2)
        .map(|(&d2, runs)| summarize(rules, n, d2, runs))
        .collect::<Result<Vec<_>>>()?;
    Ok(CvResult::new(points))
}
