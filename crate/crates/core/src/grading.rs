//! Grading rules.
//!
//! The structural rule fills a student × bank prediction matrix in four
//! passes and grades each student by its row mean:
//!
//! 1. assigned pairs keep the observed outcome;
//! 2. missing pairs inside one strongly connected component get
//!    `f(u*_i − u*_j)` from that component's maximum-likelihood merits;
//! 3. missing pairs in comparable components get 1 when only the student
//!    reaches the question and 0 when only the question reaches the student;
//! 4. remaining pairs get the mean of the row's cells from passes 1–3.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{classify_pair, strongly_connected_components, ExamResultGraph, PairCase, Roster};
use crate::model::{logistic, map_fit, mle_fit, FitOptions, FitReport, MeritVector, PriorSpec};

/// Per-student grades in `[0, 1]` with the name of the rule that made them.
#[derive(Debug, Clone, PartialEq)]
pub struct GradeVector {
    roster: Arc<Roster>,
    grades: Vec<f64>,
    rule: String,
}

impl GradeVector {
    pub fn new(roster: Arc<Roster>, grades: Vec<f64>, rule: impl Into<String>) -> Self {
        debug_assert_eq!(grades.len(), roster.num_students());
        Self {
            roster,
            grades,
            rule: rule.into(),
        }
    }

    pub fn roster(&self) -> &Arc<Roster> {
        &self.roster
    }

    pub fn grades(&self) -> &[f64] {
        &self.grades
    }

    pub fn rule(&self) -> &str {
        &self.rule
    }

    pub fn into_grades(self) -> Vec<f64> {
        self.grades
    }
}

/// Predicted correctness for every student × bank question, with the case
/// that produced each cell.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionMatrix {
    roster: Arc<Roster>,
    entries: Vec<f64>,
    cases: Vec<PairCase>,
}

impl PredictionMatrix {
    pub fn roster(&self) -> &Arc<Roster> {
        &self.roster
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.roster.num_questions() + j]
    }

    #[inline]
    pub fn case(&self, i: usize, j: usize) -> PairCase {
        self.cases[i * self.roster.num_questions() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let q = self.roster.num_questions();
        &self.entries[i * q..(i + 1) * q]
    }

    /// Row means over the whole bank.
    pub fn grades(&self, rule: &str) -> GradeVector {
        let q = self.roster.num_questions() as f64;
        let grades = (0..self.roster.num_students())
            .map(|i| self.row(i).iter().sum::<f64>() / q)
            .collect();
        GradeVector::new(self.roster.clone(), grades, rule)
    }
}

/// Fraction of assigned questions answered correctly.
pub fn simple_average(g: &ExamResultGraph) -> Result<GradeVector> {
    let a = g.assignment();
    a.check_student_degrees()?;
    let grades = (0..g.roster().num_students())
        .map(|i| g.correct_count(i) as f64 / a.degree(i) as f64)
        .collect();
    Ok(GradeVector::new(g.roster().clone(), grades, "avg"))
}

/// The four-case prediction matrix.
pub fn predict_matrix(g: &ExamResultGraph, opts: FitOptions) -> Result<PredictionMatrix> {
    g.assignment().check_student_degrees()?;
    let roster = g.roster().clone();
    let (n, q) = (roster.num_students(), roster.num_questions());
    let structure = strongly_connected_components(g);

    let cases: Vec<PairCase> = (0..n * q).map(|k| classify_pair(&structure, g, k / q, k % q)).collect();
    let mut entries = vec![f64::NAN; n * q];

    for (i, j, w) in g.outcomes() {
        entries[i * q + j] = if w { 1.0 } else { 0.0 };
    }

    for (id, members) in structure.components().iter().enumerate() {
        let students: Vec<usize> = members.iter().copied().take_while(|&v| v < n).collect();
        let questions: Vec<usize> = members.iter().copied().skip(students.len()).map(|v| v - n).collect();
        let missing = students
            .iter()
            .any(|&i| questions.iter().any(|&j| cases[i * q + j] == PairCase::SameComponent));
        if !missing {
            continue;
        }
        let fit = mle_fit(g, members, opts).map_err(|e| Error::ComponentFit {
            component: id,
            source: Box::new(e),
        })?;
        for &i in &students {
            let ui = fit.merits.try_get(roster.student_vertex(i))?;
            for &j in &questions {
                if cases[i * q + j] == PairCase::SameComponent {
                    entries[i * q + j] = logistic(ui - fit.merits.try_get(roster.question_vertex(j))?);
                }
            }
        }
    }

    for (k, case) in cases.iter().enumerate() {
        match case {
            PairCase::ComparableStudentAbove => entries[k] = 1.0,
            PairCase::ComparableQuestionAbove => entries[k] = 0.0,
            _ => {}
        }
    }

    for i in 0..n {
        let row = i * q..(i + 1) * q;
        let (sum, count) = cases[row.clone()]
            .iter()
            .zip(&entries[row.clone()])
            .filter(|(c, _)| **c != PairCase::Incomparable)
            .fold((0.0, 0usize), |(s, c), (_, h)| (s + h, c + 1));
        // count >= 1: every student has an assigned question.
        let fill = sum / count as f64;
        for k in row {
            if cases[k] == PairCase::Incomparable {
                entries[k] = fill;
            }
        }
    }

    Ok(PredictionMatrix { roster, entries, cases })
}

/// Row means of [`predict_matrix`].
pub fn grade(g: &ExamResultGraph, opts: FitOptions) -> Result<GradeVector> {
    Ok(predict_matrix(g, opts)?.grades("ours"))
}

/// Grades from MAP merits: observed outcomes on assigned pairs and
/// `f(u*_i − u*_j)` elsewhere.
pub fn map_grade(g: &ExamResultGraph, prior: &PriorSpec, opts: FitOptions) -> Result<GradeVector> {
    g.assignment().check_student_degrees()?;
    let fit = map_fit(g, prior, opts)?;
    let roster = g.roster();
    let q = roster.num_questions();
    let u = fit.merits.values();
    let grades = (0..roster.num_students())
        .map(|i| {
            let total: f64 = (0..q)
                .map(|j| match g.outcome(i, j) {
                    Some(w) => f64::from(u8::from(w)),
                    None => logistic(u[roster.student_vertex(i)] - u[roster.question_vertex(j)]),
                })
                .sum();
            total / q as f64
        })
        .collect();
    Ok(GradeVector::new(roster.clone(), grades, "map"))
}

/// `¼‖u − u*‖∞²` with both vectors mean-zero over the fitted vertices.
///
/// When the whole result graph is strongly connected, the likelihood
/// equation makes each student's observed correct count equal its fitted
/// expectation, so the structural grade equals the row mean of
/// `f(u*_i − u*_j)` and its squared distance to the benchmark is at most
/// this bound.
pub fn per_student_error_bound(fit: &FitReport, truth: &MeritVector) -> Result<f64> {
    let dist = truth.aligned_distance(&fit.merits)?;
    Ok(0.25 * dist * dist)
}

/// A grading rule: exam result graph in, one grade per student out.
pub trait GradingRule: Sync {
    fn name(&self) -> &str;
    fn grade(&self, g: &ExamResultGraph) -> Result<GradeVector>;
}

/// The rules the harness and command line know by name.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Rule {
    /// Structural four-case rule.
    Ours { fit: FitOptions },
    /// Simple averaging.
    Avg,
    /// MAP merits under Gaussian priors.
    Map { prior: PriorSpec, fit: FitOptions },
}

impl Rule {
    pub fn ours() -> Self {
        Rule::Ours {
            fit: FitOptions::default(),
        }
    }

    pub fn map(prior: PriorSpec) -> Self {
        Rule::Map {
            prior,
            fit: FitOptions::default(),
        }
    }
}

impl GradingRule for Rule {
    fn name(&self) -> &str {
        match self {
            Rule::Ours { .. } => "ours",
            Rule::Avg => "avg",
            Rule::Map { .. } => "map",
        }
    }

    fn grade(&self, g: &ExamResultGraph) -> Result<GradeVector> {
        match self {
            Rule::Ours { fit } => grade(g, *fit),
            Rule::Avg => simple_average(g),
            Rule::Map { prior, fit } => map_grade(g, prior, *fit),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roster(n: usize, q: usize) -> Arc<Roster> {
        Arc::new(Roster::numbered(n, q).unwrap())
    }

    #[test]
    fn averaging_examples() {
        let g = ExamResultGraph::from_triples(roster(1, 10), (0..10).map(|j| (0, j, j < 7))).unwrap();
        assert!((simple_average(&g).unwrap().grades()[0] - 0.7).abs() < 1e-15);

        let g = ExamResultGraph::from_triples(roster(2, 2), [(0, 0, true), (1, 1, true)]).unwrap();
        assert_eq!(simple_average(&g).unwrap().grades(), &[1.0, 1.0]);
    }

    #[test]
    fn zero_degree_rejected() {
        let g = ExamResultGraph::from_triples(roster(2, 2), [(0, 0, true)]).unwrap();
        assert!(matches!(simple_average(&g), Err(Error::ZeroDegreeStudent(1))));
        assert!(matches!(
            grade(&g, FitOptions::default()),
            Err(Error::ZeroDegreeStudent(1))
        ));
    }

    #[test]
    fn incomparable_cells_take_frozen_row_mean() {
        // S1 -> Q1 -> S2 -> Q3 puts Q3 below S1; Q4 is isolated.
        let r = roster(2, 4);
        let g = ExamResultGraph::from_triples(r, [(0, 0, true), (0, 1, false), (1, 0, false), (1, 2, true)]).unwrap();
        let h = predict_matrix(&g, FitOptions::default()).unwrap();
        assert_eq!(h.case(0, 2), PairCase::ComparableStudentAbove);
        assert_eq!(h.get(0, 2), 1.0);
        assert_eq!(h.case(0, 3), PairCase::Incomparable);
        assert!((h.get(0, 3) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(h.get(0, 1), 0.0);
    }

    #[test]
    fn all_correct_exam_grades_one() {
        let r = roster(3, 5);
        let g = ExamResultGraph::from_triples(
            r,
            [(0, 0, true), (0, 1, true), (1, 1, true), (1, 2, true), (2, 4, true)],
        )
        .unwrap();
        let alg = grade(&g, FitOptions::default()).unwrap();
        assert!(alg.grades().iter().all(|&x| x == 1.0));
    }

    #[test]
    fn error_bound_formula() {
        let truth = MeritVector::from_parts(&[0.2, -0.2], &[0.0]).unwrap();
        let fit = FitReport {
            merits: MeritVector::from_parts(&[0.0, 0.0], &[0.0]).unwrap(),
            iterations: 0,
            residual: 0.0,
            converged: true,
        };
        assert!((per_student_error_bound(&fit, &truth).unwrap() - 0.01).abs() < 1e-15);
        let same = FitReport {
            merits: truth.mean_zero(),
            ..fit
        };
        assert!(per_student_error_bound(&same, &truth).unwrap() < 1e-30);
    }
}
