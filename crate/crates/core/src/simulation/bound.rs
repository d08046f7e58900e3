use serde::Serialize;

use super::signatures::collect_until;
use crate::error::Result;
use crate::grading::{grade, per_student_error_bound};
use crate::graph::{is_strongly_connected, TaskAssignmentGraph};
use crate::model::{benchmark, mle_fit, ExamSampler, FitOptions, MeritVector};
use crate::rng::SeedStream;

/// Outcome of checking `(alg_i − opt_i)² ≤ ¼‖u − u*‖∞² + 1e-9` on strongly
/// connected exams.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    /// Strongly connected exams checked.
    pub checked: usize,
    /// Exams drawn, including the skipped ones that were not strongly connected.
    pub attempts: usize,
    /// `(replication index, student)` pairs over the bound.
    pub violations: Vec<(usize, usize)>,
    /// Largest `(alg_i − opt_i)² − bound` seen.
    pub max_excess: f64,
    /// Largest bound seen.
    pub max_bound: f64,
}

impl BoundCheck {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

pub const BOUND_SLACK: f64 = 1e-9;

/// Draws exams on `g` until `target` are strongly connected (or
/// `max_attempts` is reached) and checks the bound on each.
pub fn bound_compliance(
    g: &TaskAssignmentGraph,
    u: &MeritVector,
    target: usize,
    max_attempts: usize,
    seed: u64,
    opts: FitOptions,
) -> Result<BoundCheck> {
    let sampler = ExamSampler::new(g, u)?;
    let opt = benchmark(u, g.roster())?;
    let all: Vec<usize> = (0..g.roster().num_vertices()).collect();
    let stream = SeedStream::new(seed);
    let (rows, attempts) = collect_until(target, max_attempts, |k| {
        let exam = sampler.sample(&mut stream.child(k as u64).rng());
        if !is_strongly_connected(&exam) {
            return Ok(None);
        }
        let fit = mle_fit(&exam, &all, opts)?;
        let bound = per_student_error_bound(&fit, u)?;
        let alg = grade(&exam, opts)?;
        let excess: Vec<f64> = alg
            .grades()
            .iter()
            .zip(opt.grades())
            .map(|(a, o)| (a - o) * (a - o) - bound)
            .collect();
        Ok(Some((k, bound, excess)))
    })?;
    let mut check = BoundCheck {
        checked: rows.len(),
        attempts,
        violations: Vec::new(),
        max_excess: f64::NEG_INFINITY,
        max_bound: 0.0,
    };
    for (k, bound, excess) in rows {
        check.max_bound = check.max_bound.max(bound);
        for (i, e) in excess.into_iter().enumerate() {
            check.max_excess = check.max_excess.max(e);
            if e > BOUND_SLACK {
                check.violations.push((k, i));
            }
        }
    }
    Ok(check)
}
