use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{Roster, TaskAssignmentGraph};
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Random task assignment: `m` bank questions are drawn without replacement,
/// then each student independently receives `d` of those `m`.
///
/// Unsampled bank questions stay in the roster as isolated vertices.
pub fn sample_assignment<R: Rng + ?Sized>(
    roster: Arc<Roster>,
    m: usize,
    d: usize,
    rng: &mut R,
) -> Result<TaskAssignmentGraph> {
    let bank = roster.num_questions();
    if d < 1 || d > m || m > bank {
        return Err(Error::ParameterOutOfRange(format!(
            "need 1 <= d <= m <= |Q|, got d={d}, m={m}, |Q|={bank}"
        )));
    }
    let mut pool: Vec<usize> = (0..bank).collect();
    let (eligible, _) = pool.partial_shuffle(rng, m);
    let mut eligible = eligible.to_vec();

    let mut edges = Vec::with_capacity(roster.num_students() * d);
    for i in 0..roster.num_students() {
        let (picked, _) = eligible.partial_shuffle(rng, d);
        edges.extend(picked.iter().map(|&j| (i, j)));
    }
    TaskAssignmentGraph::from_edges(roster, edges)
}

/// [`sample_assignment`] driven by a seed.
pub fn generate_assignment(roster: Arc<Roster>, m: usize, d: usize, seed: u64) -> Result<TaskAssignmentGraph> {
    sample_assignment(roster, m, d, &mut rng_from_seed(seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn roster(n: usize, q: usize) -> Arc<Roster> {
        Arc::new(Roster::numbered(n, q).unwrap())
    }

    #[test]
    fn classroom_scale_degrees() {
        let g = generate_assignment(roster(35, 22), 22, 10, 1).unwrap();
        assert!((0..35).all(|i| g.degree(i) == 10));
        assert_eq!(g.num_edges(), 350);
    }

    #[test]
    fn full_degree_gives_complete_graph() {
        let g = generate_assignment(roster(4, 6), 6, 6, 3).unwrap();
        assert_eq!(g, TaskAssignmentGraph::complete(roster(4, 6)));
    }

    #[test]
    fn seed_reproduces_graph() {
        let a = generate_assignment(roster(2, 3), 3, 2, 42).unwrap();
        let b = generate_assignment(roster(2, 3), 3, 2, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.num_edges(), 4);
    }

    #[test]
    fn only_m_questions_used() {
        for seed in 0..20 {
            let g = generate_assignment(roster(30, 20), 5, 3, seed).unwrap();
            let used: BTreeSet<_> = g.edges().map(|(_, j)| j).collect();
            assert!(used.len() <= 5);
        }
    }

    #[test]
    fn out_of_range_parameters() {
        assert!(generate_assignment(roster(2, 3), 3, 4, 0).is_err());
        assert!(generate_assignment(roster(2, 3), 4, 2, 0).is_err());
        assert!(generate_assignment(roster(2, 3), 3, 0, 0).is_err());
    }
}
