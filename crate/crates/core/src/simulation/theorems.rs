//! Random instances on which the structural rule must reproduce simple
//! averaging exactly.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grading::{grade, simple_average};
use crate::graph::{sample_assignment, ExamResultGraph, Roster, TaskAssignmentGraph};
use crate::model::{ExamSampler, FitOptions, MeritVector};
use crate::rng::SeedStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EquivalenceFamily {
    /// Every student answers every question.
    Complete,
    /// Every student answers exactly one question.
    SingleQuestion,
    /// No two students share a question.
    DisjointNeighborhoods,
}

impl EquivalenceFamily {
    pub const ALL: [EquivalenceFamily; 3] = [
        EquivalenceFamily::Complete,
        EquivalenceFamily::SingleQuestion,
        EquivalenceFamily::DisjointNeighborhoods,
    ];
}

fn random_merits<R: Rng + ?Sized>(n: usize, q: usize, rng: &mut R) -> MeritVector {
    let a: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    let b: Vec<f64> = (0..q).map(|_| rng.random_range(-2.0..2.0)).collect();
    MeritVector::from_parts(&a, &b).expect("finite merits")
}

/// A random exam from `family` with random merits.
pub fn random_equivalence_instance<R: Rng + ?Sized>(family: EquivalenceFamily, rng: &mut R) -> Result<ExamResultGraph> {
    let g = match family {
        EquivalenceFamily::Complete => {
            let (n, q) = (rng.random_range(1..=8), rng.random_range(1..=8));
            TaskAssignmentGraph::complete(Arc::new(Roster::numbered(n, q)?))
        }
        EquivalenceFamily::SingleQuestion => {
            let (n, q) = (rng.random_range(1..=12), rng.random_range(1..=8));
            let m = rng.random_range(1..=q);
            sample_assignment(Arc::new(Roster::numbered(n, q)?), m, 1, rng)?
        }
        EquivalenceFamily::DisjointNeighborhoods => {
            let n = rng.random_range(1..=6);
            let degrees: Vec<usize> = (0..n).map(|_| rng.random_range(1..=4)).collect();
            let used: usize = degrees.iter().sum();
            let q = used + rng.random_range(0..=3);
            let mut bank: Vec<usize> = (0..q).collect();
            bank.shuffle(rng);
            let mut next = 0;
            let mut edges = Vec::with_capacity(used);
            for (i, &d) in degrees.iter().enumerate() {
                edges.extend(bank[next..next + d].iter().map(|&j| (i, j)));
                next += d;
            }
            TaskAssignmentGraph::from_edges(Arc::new(Roster::numbered(n, q)?), edges)?
        }
    };
    let u = random_merits(g.roster().num_students(), g.roster().num_questions(), rng);
    Ok(ExamSampler::new(&g, &u)?.sample(rng))
}

/// Largest `|ours_i − avg_i|` over `instances` random exams of `family`.
pub fn equivalence_gap(family: EquivalenceFamily, instances: usize, seed: u64, opts: FitOptions) -> Result<f64> {
    let stream = SeedStream::new(seed);
    let mut worst: f64 = 0.0;
    for k in 0..instances {
        let exam = random_equivalence_instance(family, &mut stream.child(k as u64).rng())?;
        let ours = grade(&exam, opts)?;
        let avg = simple_average(&exam)?;
        for (a, b) in ours.grades().iter().zip(avg.grades()) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(worst)
}
