//! Grades the small exam where one student's missing answer is implied by
//! the comparison order, and prints the prediction matrix with its cases.

use std::sync::Arc;

use fairgrade::{predict_matrix, simple_average, strongly_connected_components, ExamResultGraph, FitOptions, Roster};

fn main() -> fairgrade::Result<()> {
    let roster = Arc::new(Roster::numbered(2, 3)?);
    // S1 answers everything; S2 only sees Q1 and Q2.
    let exam = ExamResultGraph::from_triples(
        roster.clone(),
        [(0, 0, false), (0, 1, true), (0, 2, true), (1, 0, true), (1, 1, false)],
    )?;

    let scc = strongly_connected_components(&exam);
    for (k, members) in scc.components().iter().enumerate() {
        let ids: Vec<&str> = members.iter().map(|&v| roster.vertex_id(v)).collect();
        println!("component {k}: {}", ids.join(" "));
    }

    let h = predict_matrix(&exam, FitOptions::default())?;
    for (i, s) in roster.students().iter().enumerate() {
        let cells: Vec<String> = (0..roster.num_questions())
            .map(|j| format!("{:.3} ({})", h.get(i, j), h.case(i, j).as_str()))
            .collect();
        println!("{s}: {}", cells.join("  "));
    }

    let ours = h.grades("ours");
    let avg = simple_average(&exam)?;
    for (i, s) in roster.students().iter().enumerate() {
        println!("{s}: ours {:.3}  avg {:.3}", ours.grades()[i], avg.grades()[i]);
    }
    Ok(())
}
