//! MAP merits exist even when the exam is not strongly connected; with a
//! flat prior they approach the maximum-likelihood fit.

use std::sync::Arc;

use fairgrade::grading::map_grade;
use fairgrade::simulation::range_prior;
use fairgrade::{grade, is_strongly_connected, map_fit, ExamResultGraph, FitOptions, PriorSpec, Roster};

fn main() -> fairgrade::Result<()> {
    let roster = Arc::new(Roster::numbered(3, 3)?);
    let exam = ExamResultGraph::from_triples(
        roster.clone(),
        [
            (0, 0, true),
            (0, 1, true),
            (1, 1, true),
            (1, 2, false),
            (2, 0, false),
            (2, 2, true),
        ],
    )?;
    println!("strongly connected: {}", is_strongly_connected(&exam));

    let opts = FitOptions::default();
    for (label, prior) in [
        ("range prior", range_prior()),
        ("flat prior", PriorSpec::new(0.0, 100.0, 0.0, 100.0)?),
    ] {
        let fit = map_fit(&exam, &prior, opts)?;
        let merits: Vec<String> = fit.merits.values().iter().map(|x| format!("{x:+.3}")).collect();
        println!("{label}: {} ({} Newton steps)", merits.join(" "), fit.iterations);
        let grades = map_grade(&exam, &prior, opts)?;
        println!("  MAP grades {:.3?}", grades.grades());
    }
    println!("ours grades  {:.3?}", grade(&exam, opts)?.grades());
    Ok(())
}
