//! Exact expectations by enumerating every outcome of a small exam.

use std::sync::Arc;

use super::bias::{BiasReport, Estimator};
use crate::error::{Error, Result};
use crate::grading::GradingRule;
use crate::graph::{ExamResultGraph, Roster, TaskAssignmentGraph};
use crate::model::{benchmark, ExamSampler, MeritVector};

/// Largest edge count the outcome enumeration accepts.
pub const MAX_ENUMERATED_EDGES: usize = 22;

/// Largest number of assignment graphs [`ex_ante_expected_grade`] visits.
const MAX_ENUMERATED_GRAPHS: u128 = 1 << 16;

/// Exact first and second moments of each student's grade over outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactMoments {
    /// `E_w[alg_i]`
    pub mean: Vec<f64>,
    /// `E_w[(alg_i − E_w[alg_i])²]`
    pub variance: Vec<f64>,
    /// `E_w[(alg_i − opt_i)²]`, present when a benchmark was supplied.
    pub error: Option<Vec<f64>>,
}

/// Calls `visit(probability, exam)` for each of the `2^|E|` outcomes.
fn for_each_outcome(
    g: &TaskAssignmentGraph,
    u: &MeritVector,
    mut visit: impl FnMut(f64, &ExamResultGraph) -> Result<()>,
) -> Result<()> {
    let edges = g.num_edges();
    if edges > MAX_ENUMERATED_EDGES {
        return Err(Error::InstanceTooLarge(format!(
            "{edges} edges; outcome enumeration is limited to {MAX_ENUMERATED_EDGES}"
        )));
    }
    let p = ExamSampler::new(g, u)?.probabilities().to_vec();
    for mask in 0u64..1 << edges {
        let mut weight = 1.0;
        let mut k = 0;
        let exam = ExamResultGraph::from_fn(g.clone(), |_, _| {
            let correct = mask >> k & 1 == 1;
            weight *= if correct { p[k] } else { 1.0 - p[k] };
            k += 1;
            correct
        });
        visit(weight, &exam)?;
    }
    Ok(())
}

/// `E_w[alg_i]` for every student, summed over all `2^|E|` outcomes.
pub fn exact_expected_grade(rule: &dyn GradingRule, g: &TaskAssignmentGraph, u: &MeritVector) -> Result<Vec<f64>> {
    let mut mean = vec![0.0; g.roster().num_students()];
    for_each_outcome(g, u, |w, exam| {
        for (m, a) in mean.iter_mut().zip(rule.grade(exam)?.grades()) {
            *m += w * a;
        }
        Ok(())
    })?;
    Ok(mean)
}

/// Exact grade moments; with `opt` also the expected squared error.
///
/// Two passes: the mean first, then squared deviations around it, so that
/// error, squared bias and variance are each computed directly.
pub fn exact_grade_moments(
    rule: &dyn GradingRule,
    g: &TaskAssignmentGraph,
    u: &MeritVector,
    opt: Option<&[f64]>,
) -> Result<ExactMoments> {
    let n = g.roster().num_students();
    if let Some(opt) = opt {
        if opt.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} benchmark values for {n} students",
                opt.len()
            )));
        }
    }
    let mean = exact_expected_grade(rule, g, u)?;
    let mut variance = vec![0.0; n];
    let mut error = opt.map(|_| vec![0.0; n]);
    for_each_outcome(g, u, |w, exam| {
        let grades = rule.grade(exam)?;
        for (i, a) in grades.grades().iter().enumerate() {
            variance[i] += w * (a - mean[i]) * (a - mean[i]);
            if let (Some(err), Some(opt)) = (error.as_mut(), opt) {
                err[i] += w * (a - opt[i]) * (a - opt[i]);
            }
        }
        Ok(())
    })?;
    Ok(ExactMoments { mean, variance, error })
}

/// Ex-post bias from exact enumeration.
pub fn exact_ex_post_bias(rule: &dyn GradingRule, g: &TaskAssignmentGraph, u: &MeritVector) -> Result<BiasReport> {
    let opt = benchmark(u, g.roster())?;
    let mean = exact_expected_grade(rule, g, u)?;
    let deviation = mean.iter().zip(opt.grades()).map(|(a, o)| a - o).collect();
    let n = mean.len();
    Ok(BiasReport::from_deviation(
        rule.name(),
        deviation,
        vec![0.0; n],
        1,
        0,
        Estimator::ExactEnumeration,
    ))
}

fn binomial(n: usize, k: usize) -> u128 {
    (0..k as u128).fold(1, |acc, i| acc * (n as u128 - i) / (i + 1))
}

/// All `k`-subsets of `items`, in lexicographic order of positions.
fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    fn extend(items: &[usize], k: usize, start: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        for pos in start..=items.len() - (k - current.len()) {
            current.push(items[pos]);
            extend(items, k, pos + 1, current, out);
            current.pop();
        }
    }
    let mut out = Vec::new();
    extend(items, k, 0, &mut Vec::with_capacity(k), &mut out);
    out
}

/// `E_G E_w[alg_i]` over every graph the random assignment can produce.
///
/// Each `m`-subset of the bank is equally likely, and given it each
/// student's `d`-subset is independent and uniform, so every (bank subset,
/// per-student subsets) tuple carries the same probability.
pub fn ex_ante_expected_grade(
    rule: &dyn GradingRule,
    roster: &Arc<Roster>,
    m: usize,
    d: usize,
    u: &MeritVector,
) -> Result<Vec<f64>> {
    let (n, q) = (roster.num_students(), roster.num_questions());
    if d == 0 || d > m || m > q {
        return Err(Error::ParameterOutOfRange(format!(
            "need 1 <= d <= m <= |Q|, got d={d}, m={m}, |Q|={q}"
        )));
    }
    let graphs = (0..n).try_fold(binomial(q, m), |acc, _| acc.checked_mul(binomial(m, d)));
    match graphs {
        Some(count) if count <= MAX_ENUMERATED_GRAPHS && n * d <= MAX_ENUMERATED_EDGES => {}
        _ => {
            return Err(Error::InstanceTooLarge(format!(
                "{n} students, |Q|={q}, m={m}, d={d} is too large to enumerate"
            )))
        }
    }

    let bank: Vec<usize> = (0..q).collect();
    let mut total = vec![0.0; n];
    let mut count = 0usize;
    for subset in combinations(&bank, m) {
        let choices = combinations(&subset, d);
        // Odometer over one choice index per student.
        let mut pick = vec![0usize; n];
        loop {
            let edges = pick
                .iter()
                .enumerate()
                .flat_map(|(i, &c)| choices[c].iter().map(move |&j| (i, j)));
            let g = TaskAssignmentGraph::from_edges(roster.clone(), edges)?;
            for (t, e) in total.iter_mut().zip(exact_expected_grade(rule, &g, u)?) {
                *t += e;
            }
            count += 1;

            let mut s = 0;
            while s < n {
                pick[s] += 1;
                if pick[s] < choices.len() {
                    break;
                }
                pick[s] = 0;
                s += 1;
            }
            if s == n {
                break;
            }
        }
    }
    Ok(total.into_iter().map(|t| t / count as f64).collect())
}

/// Whether `E_G E_w[alg_i] == opt_i` within `1e-12` for every student.
pub fn verify_ex_ante_fairness(
    rule: &dyn GradingRule,
    roster: &Arc<Roster>,
    m: usize,
    d: usize,
    u: &MeritVector,
) -> Result<bool> {
    let expected = ex_ante_expected_grade(rule, roster, m, d, u)?;
    let opt = benchmark(u, roster)?;
    Ok(expected.iter().zip(opt.grades()).all(|(e, o)| (e - o).abs() <= 1e-12))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grading::Rule;

    #[test]
    fn combinations_are_lexicographic() {
        assert_eq!(combinations(&[4, 5, 6], 2), vec![vec![4, 5], vec![4, 6], vec![5, 6]]);
        assert_eq!(combinations(&[1, 2], 2).len(), 1);
        assert_eq!(binomial(22, 10), 646_646);
    }

    #[test]
    fn single_edge_average_is_half() {
        let r = Arc::new(Roster::numbered(1, 1).unwrap());
        let g = TaskAssignmentGraph::complete(r.clone());
        let u = MeritVector::constant(&r, 0.0);
        assert_eq!(exact_expected_grade(&Rule::Avg, &g, &u).unwrap(), vec![0.5]);
    }

    #[test]
    fn too_many_edges_rejected() {
        let r = Arc::new(Roster::numbered(5, 5).unwrap());
        let g = TaskAssignmentGraph::complete(r.clone());
        let u = MeritVector::constant(&r, 0.0);
        assert!(matches!(
            exact_expected_grade(&Rule::Avg, &g, &u),
            Err(Error::InstanceTooLarge(_))
        ));
    }

    #[test]
    fn one_student_two_questions_is_fair() {
        let r = Arc::new(Roster::numbered(1, 2).unwrap());
        let u = MeritVector::from_parts(&[0.3], &[-1.0, 0.7]).unwrap();
        assert!(verify_ex_ante_fairness(&Rule::Avg, &r, 2, 1, &u).unwrap());
    }
}
