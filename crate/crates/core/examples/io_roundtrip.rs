//! Writes an exam in both file formats and reads it back.

use std::sync::Arc;

use fairgrade::io::{load_exam, save_exam, ExamFormat};
use fairgrade::model::sample_exam_result;
use fairgrade::rng::SeedStream;
use fairgrade::{generate_assignment, ExamResultGraph, MeritVector, Roster};

/// Outcomes keyed by ids, so rosters in different orders compare equal.
fn triples(g: &ExamResultGraph) -> Vec<(String, String, bool)> {
    let r = g.roster();
    let mut t: Vec<_> = g
        .outcomes()
        .map(|(i, j, w)| (r.students()[i].clone(), r.questions()[j].clone(), w))
        .collect();
    t.sort();
    t
}

fn main() -> fairgrade::Result<()> {
    let roster = Arc::new(Roster::numbered(4, 5)?);
    let u = MeritVector::constant(&roster, 0.0);
    let stream = SeedStream::new(8);
    let g = generate_assignment(roster, 5, 3, stream.child(0).master())?;
    let exam = sample_exam_result(&g, &u, &mut stream.child(1).rng())?;

    let dir = std::env::temp_dir().join("fairgrade-io-example");
    for (format, name) in [
        (ExamFormat::EdgeList, "exam-edges.csv"),
        (ExamFormat::DenseCsv, "exam-dense.csv"),
    ] {
        let path = dir.join(name);
        save_exam(&exam, &path, format)?;
        let back = load_exam(&path, Some(format))?;
        println!("{}:\n{}", path.display(), std::fs::read_to_string(&path)?);
        println!("same outcomes: {}", triples(&back) == triples(&exam));
    }
    Ok(())
}
