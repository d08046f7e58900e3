//! Empirical checks of two asymptotic properties: strong connectivity
//! becomes likely as the degree grows, and the fitted merits approach the
//! true ones.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{is_strongly_connected, sample_assignment, ExamResultGraph, Roster};
use crate::model::{mle_fit, ExamSampler, FitOptions, MeritVector};
use crate::rng::SeedStream;

const BATCH: usize = 64;

/// Runs `attempt(index)` in index order until `target` successes or
/// `max_attempts` tries. Returns the successes (in index order) and the number
/// of attempts consumed. Batches run in parallel; surplus successes past the
/// target are dropped, so the result does not depend on the thread count.
pub(crate) fn collect_until<T: Send>(
    target: usize,
    max_attempts: usize,
    attempt: impl Fn(usize) -> Result<Option<T>> + Sync,
) -> Result<(Vec<T>, usize)> {
    let mut found = Vec::with_capacity(target);
    let mut next = 0;
    while found.len() < target && next < max_attempts {
        let end = (next + BATCH).min(max_attempts);
        let batch = (next..end).into_par_iter().map(&attempt).collect::<Result<Vec<_>>>()?;
        for (offset, item) in batch.into_iter().enumerate() {
            if let Some(t) = item {
                found.push(t);
                if found.len() == target {
                    return Ok((found, next + offset + 1));
                }
            }
        }
        next = end;
    }
    Ok((found, next))
}

/// Draws an `m`, `d` assignment and an exam on it.
pub(crate) fn sample_exam(
    roster: &Arc<Roster>,
    u: &MeritVector,
    m: usize,
    d: usize,
    stream: SeedStream,
) -> Result<ExamResultGraph> {
    let mut rng = stream.rng();
    let g = sample_assignment(roster.clone(), m, d, &mut rng)?;
    Ok(ExamSampler::new(&g, u)?.sample(&mut rng))
}

/// Fraction of `samples` random exams that are strongly connected.
pub fn connectivity_fraction(
    roster: &Arc<Roster>,
    u: &MeritVector,
    m: usize,
    d: usize,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if samples == 0 {
        return Err(Error::ParameterOutOfRange("samples must be at least 1".into()));
    }
    let stream = SeedStream::new(seed);
    let connected = (0..samples)
        .into_par_iter()
        .map(|k| {
            Ok(is_strongly_connected(&sample_exam(
                roster,
                u,
                m,
                d,
                stream.child(k as u64),
            )?))
        })
        .collect::<Result<Vec<bool>>>()?;
    Ok(connected.iter().filter(|&&c| c).count() as f64 / samples as f64)
}

/// `‖u* − u‖∞` after mean-zero alignment, for the first `target` strongly
/// connected exams among at most `max_attempts` draws. Returns the errors
/// and the attempts used.
#[allow(clippy::too_many_arguments)]
pub fn consistency_errors(
    roster: &Arc<Roster>,
    u: &MeritVector,
    m: usize,
    d: usize,
    target: usize,
    max_attempts: usize,
    seed: u64,
    opts: FitOptions,
) -> Result<(Vec<f64>, usize)> {
    let stream = SeedStream::new(seed);
    let all: Vec<usize> = (0..roster.num_vertices()).collect();
    collect_until(target, max_attempts, |k| {
        let exam = sample_exam(roster, u, m, d, stream.child(k as u64))?;
        if !is_strongly_connected(&exam) {
            return Ok(None);
        }
        let fit = mle_fit(&exam, &all, opts)?;
        Ok(Some(u.aligned_distance(&fit.merits)?))
    })
}
