mod common;

use std::sync::Arc;

use approx::assert_abs_diff_eq;
use common::{brute_force_mle, independent_residual, random_exam, uniform_merits};
use fairgrade::model::{likelihood_residual, log_likelihood, sample_exam_result, MmSolver};
use fairgrade::rng::SeedStream;
use fairgrade::{
    generate_assignment, is_strongly_connected, map_fit, mle_fit, strongly_connected_components, Error,
    ExamResultGraph, FitOptions, MeritVector, PriorSpec, Roster,
};

fn whole(g: &ExamResultGraph) -> Vec<usize> {
    (0..g.roster().num_vertices()).collect()
}

#[test]
fn mle_matches_grid_search_on_small_components() {
    let stream = SeedStream::new(21);
    let mut checked = 0;
    for k in 0.. {
        if checked == 12 {
            break;
        }
        let mut rng = stream.child(k).rng();
        let (n, q) = if k % 2 == 0 { (2, 2) } else { (2, 3) };
        let g = random_exam(n, q, 1.0, &mut rng);
        if !is_strongly_connected(&g) {
            continue;
        }
        let fit = mle_fit(&g, &whole(&g), FitOptions::default()).unwrap();
        let oracle = brute_force_mle(&g, &whole(&g));
        assert!(fit.merits.aligned_distance(&oracle).unwrap() < 1e-4, "instance {k}");
        checked += 1;
    }
}

#[test]
fn running_example_component_fit() {
    let roster = Arc::new(Roster::numbered(2, 3).unwrap());
    let g = ExamResultGraph::from_triples(
        roster,
        [(0, 0, false), (0, 1, true), (0, 2, true), (1, 0, true), (1, 1, false)],
    )
    .unwrap();
    let component = [0, 1, 2, 3];
    let fit = mle_fit(&g, &component, FitOptions::default()).unwrap();
    let oracle = brute_force_mle(&g, &component);
    assert!(fit.merits.aligned_distance(&oracle).unwrap() < 1e-4);
    // Each vertex wins once and loses once: all merits equal.
    for (_, x) in fit.merits.iter() {
        assert_abs_diff_eq!(x, 0.0, epsilon = 1e-8);
    }
}

#[test]
fn fitted_merits_satisfy_the_likelihood_equation() {
    let stream = SeedStream::new(4);
    let roster = Arc::new(Roster::numbered(20, 15).unwrap());
    for k in 0..20 {
        let u = uniform_merits(20, 15, -1.0, 1.0, &mut stream.child(k).rng());
        let g = generate_assignment(roster.clone(), 15, 7, stream.child(k).child(1).master()).unwrap();
        let exam = sample_exam_result(&g, &u, &mut stream.child(k).child(2).rng()).unwrap();
        for members in strongly_connected_components(&exam).components() {
            if members.len() < 2 {
                continue;
            }
            let fit = mle_fit(&exam, members, FitOptions::default()).unwrap();
            assert!(fit.converged && fit.residual <= 1e-8);
            let sub_residual = independent_residual(&fit.merits, &exam);
            assert!(sub_residual <= 1e-8, "independent residual {sub_residual}");
            assert!(likelihood_residual(&fit.merits, &exam) <= 1e-8);
        }
    }
}

#[test]
fn mm_steps_never_decrease_the_likelihood() {
    let u = uniform_merits(6, 6, -1.5, 1.5, &mut SeedStream::new(2).rng());
    let roster = Arc::new(Roster::numbered(6, 6).unwrap());
    let g = fairgrade::TaskAssignmentGraph::complete(roster);
    let stream = SeedStream::new(3);
    let exam = (0..)
        .map(|k| sample_exam_result(&g, &u, &mut stream.child(k).rng()).unwrap())
        .find(is_strongly_connected)
        .unwrap();
    let mut solver = MmSolver::new(&exam, &whole(&exam)).unwrap();
    let mut last = log_likelihood(&solver.merits(), &exam).unwrap();
    for _ in 0..50 {
        solver.step();
        let ll = log_likelihood(&solver.merits(), &exam).unwrap();
        assert!(ll >= last - 1e-12);
        last = ll;
    }
}

#[test]
fn mle_is_a_gauge_invariant_fixed_point() {
    let mut rng = SeedStream::new(8).rng();
    let g = (0..)
        .map(|_| random_exam(4, 4, 0.8, &mut rng))
        .find(is_strongly_connected)
        .unwrap();
    let a = mle_fit(&g, &whole(&g), FitOptions::default()).unwrap();
    let start: Vec<f64> = (0..8).map(|v| v as f64 * 0.3 + 5.0).collect();
    let b = fairgrade::model::mle_fit_from(&g, &whole(&g), &start, FitOptions::default()).unwrap();
    assert!(a.merits.aligned_distance(&b.merits).unwrap() < 1e-6);
    let ll = log_likelihood(&a.merits, &g).unwrap();
    assert_abs_diff_eq!(log_likelihood(&a.merits.shifted(3.7), &g).unwrap(), ll, epsilon = 1e-9);
}

#[test]
fn fit_errors() {
    let roster = Arc::new(Roster::numbered(2, 2).unwrap());
    let g = ExamResultGraph::from_triples(roster, [(0, 0, true), (1, 1, true)]).unwrap();
    assert!(matches!(
        mle_fit(&g, &[0, 1, 2, 3], FitOptions::default()),
        Err(Error::NotStronglyConnected { .. })
    ));

    let mut rng = SeedStream::new(1).rng();
    let g = (0..)
        .map(|_| random_exam(5, 5, 1.0, &mut rng))
        .find(is_strongly_connected)
        .unwrap();
    let tight = FitOptions {
        tol: 1e-14,
        max_iter: 2,
    };
    match mle_fit(&g, &whole(&g), tight) {
        Err(Error::NonConvergence {
            iterations, residual, ..
        }) => {
            assert_eq!(iterations, 2);
            assert!(residual > 1e-14);
        }
        other => panic!("expected non-convergence, got {other:?}"),
    }
    let bad = FitOptions { tol: 0.0, max_iter: 10 };
    assert!(mle_fit(&g, &whole(&g), bad).is_err());
}

#[test]
fn map_single_comparison_matches_scalar_oracle() {
    // One correct answer, N(0,1) priors: by symmetry b = -a and x = a - b
    // solves 1 - f(x) = x / 2.
    let roster = Arc::new(Roster::numbered(1, 1).unwrap());
    let g = ExamResultGraph::from_triples(roster, [(0, 0, true)]).unwrap();
    let (mut lo, mut hi) = (0.0f64, 2.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if 1.0 - 1.0 / (1.0 + (-mid).exp()) > mid / 2.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let fit = map_fit(&g, &PriorSpec::standard(), FitOptions::default()).unwrap();
    assert_abs_diff_eq!(fit.merits.get(0).unwrap(), lo / 2.0, epsilon = 1e-9);
    assert_abs_diff_eq!(fit.merits.get(1).unwrap(), -lo / 2.0, epsilon = 1e-9);
}

#[test]
fn map_with_flat_prior_approaches_mle() {
    let mut rng = SeedStream::new(12).rng();
    let g = (0..)
        .map(|_| random_exam(4, 5, 0.9, &mut rng))
        .find(is_strongly_connected)
        .unwrap();
    let mle = mle_fit(&g, &whole(&g), FitOptions::default()).unwrap();
    let flat = PriorSpec::new(0.0, 1e6, 0.0, 1e6).unwrap();
    let map = map_fit(&g, &flat, FitOptions::default()).unwrap();
    assert!(map.merits.aligned_distance(&mle.merits).unwrap() < 1e-3);
}

#[test]
fn map_exists_without_connectivity() {
    let roster = Arc::new(Roster::numbered(3, 2).unwrap());
    let g = ExamResultGraph::from_triples(roster, [(0, 0, true), (1, 0, true), (2, 1, true)]).unwrap();
    let fit = map_fit(&g, &PriorSpec::standard(), FitOptions::default()).unwrap();
    assert!(fit.converged);
    assert!(fit.merits.values().iter().all(|x| x.is_finite()));
    assert!(fit.merits.get(0).unwrap() > 0.0 && fit.merits.get(3).unwrap() < 0.0);
}

#[test]
fn merit_vector_validation() {
    assert!(MeritVector::from_parts(&[0.0, f64::NAN], &[1.0]).is_err());
    assert!(PriorSpec::new(0.0, 0.0, 0.0, 1.0).is_err());
    let u = MeritVector::from_parts(&[1.0, 2.0], &[3.0]).unwrap();
    assert_abs_diff_eq!(u.mean_zero().values().iter().sum::<f64>(), 0.0, epsilon = 1e-12);
    assert_abs_diff_eq!(u.span(), 2.0);
}
