//! Checks the exact grading guarantees: averaging is fair before the
//! assignment is drawn, both rules agree on the special assignment shapes,
//! and the structural rule respects its error bound.

use std::sync::Arc;

use fairgrade::simulation::{bound_compliance, equivalence_gap, verify_ex_ante_fairness, EquivalenceFamily};
use fairgrade::{generate_assignment, FitOptions, MeritVector, Roster, Rule};

fn main() -> fairgrade::Result<()> {
    let opts = FitOptions::default();

    let roster = Arc::new(Roster::numbered(2, 3)?);
    let u = MeritVector::from_parts(&[0.4, -0.7], &[-1.0, 0.2, 1.5])?;
    println!(
        "averaging ex-ante fair: {}",
        verify_ex_ante_fairness(&Rule::Avg, &roster, 3, 2, &u)?
    );
    println!(
        "structural ex-ante fair: {}",
        verify_ex_ante_fairness(&Rule::ours(), &roster, 3, 2, &u)?
    );

    for family in EquivalenceFamily::ALL {
        println!(
            "{family:?}: max |ours - avg| = {:e}",
            equivalence_gap(family, 50, 2, opts)?
        );
    }

    let roster = Arc::new(Roster::numbered(10, 10)?);
    let a: Vec<f64> = (0..10).map(|i| -1.0 + 0.2 * i as f64).collect();
    let b: Vec<f64> = (0..10).map(|j| 0.9 - 0.2 * j as f64).collect();
    let u = MeritVector::from_parts(&a, &b)?;
    let g = generate_assignment(roster, 10, 6, 4)?;
    let check = bound_compliance(&g, &u, 100, 100_000, 5, opts)?;
    println!(
        "error bound: {} violations over {} strongly connected exams ({} drawn)",
        check.violations.len(),
        check.checked,
        check.attempts
    );
    Ok(())
}
