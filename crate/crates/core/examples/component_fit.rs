//! Draws an exam, fits merits inside every strongly connected component and
//! compares them with the truth.

use std::sync::Arc;

use fairgrade::model::sample_exam_result;
use fairgrade::rng::SeedStream;
use fairgrade::{generate_assignment, mle_fit, strongly_connected_components, FitOptions, MeritVector, Roster};
use rand::Rng;

fn main() -> fairgrade::Result<()> {
    let (n, q) = (30, 20);
    let stream = SeedStream::new(11);
    let mut rng = stream.child(0).rng();
    let a: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let b: Vec<f64> = (0..q).map(|_| rng.random_range(-1.0..1.0)).collect();
    let truth = MeritVector::from_parts(&a, &b)?;

    let roster = Arc::new(Roster::numbered(n, q)?);
    let g = generate_assignment(roster, q, 8, stream.child(1).master())?;
    let exam = sample_exam_result(&g, &truth, &mut stream.child(2).rng())?;

    let scc = strongly_connected_components(&exam);
    println!("{} components", scc.num_components());
    for (k, members) in scc.components().iter().enumerate().filter(|(_, c)| c.len() > 1) {
        let fit = mle_fit(&exam, members, FitOptions::default())?;
        let err = truth.restrict(members)?.aligned_distance(&fit.merits)?;
        println!(
            "component {k}: {} vertices, {} MM iterations, residual {:.1e}, max error {err:.3}",
            members.len(),
            fit.iterations,
            fit.residual
        );
    }
    Ok(())
}
