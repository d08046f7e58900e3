//! File formats.
//!
//! | data | layout |
//! |---|---|
//! | exam, edge list | `student,question,correct` with `correct` in {0,1} |
//! | exam, dense | `student,<question ids...>`, cells in {0,1,NA} |
//! | merits | `vertex,kind,merit`, kind in {student,question} |
//! | grades | `student,grade,rule` |
//! | prediction matrix | `student,<question ids...>` plus a parallel case-tag file |
//! | reports | tidy `parameter,value,rule,statistic,estimate,se` plus JSON |
//!
//! Readers report malformed rows with their 1-based line number (the header
//! is line 1).

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grading::{GradeVector, PredictionMatrix};
use crate::graph::{AnswerMatrix, ExamResultGraph, Roster};
use crate::model::{MeritVector, Normalization};
use crate::simulation::{BiasReport, CvResult, ErrorDecomposition, SweepResult};

pub const EDGE_LIST_HEADER: [&str; 3] = ["student", "question", "correct"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExamFormat {
    EdgeList,
    DenseCsv,
}

fn malformed(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::MalformedRow {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.position() {
        Some(pos) => malformed(path, pos.line(), e.to_string()),
        None => Error::Csv(e),
    }
}

fn reader<R: Read>(source: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source)
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path)?))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn parse_bit(cell: &str) -> Option<bool> {
    match cell {
        "0" => Some(false),
        "1" => Some(true),
        _ => None,
    }
}

/// Reads an edge list. Without `roster`, students and questions are
/// numbered in order of first appearance.
pub fn read_edge_list<R: Read>(source: R, path: &Path, roster: Option<Arc<Roster>>) -> Result<ExamResultGraph> {
    let mut rdr = reader(source);
    let header = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.iter().ne(EDGE_LIST_HEADER) {
        return Err(malformed(
            path,
            1,
            format!("expected header {}", EDGE_LIST_HEADER.join(",")),
        ));
    }

    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let correct = parse_bit(&record[2])
            .ok_or_else(|| malformed(path, line, format!("correct must be 0 or 1, got {:?}", &record[2])))?;
        if record[0].is_empty() || record[1].is_empty() {
            return Err(malformed(path, line, "empty identifier"));
        }
        rows.push((line, record[0].to_string(), record[1].to_string(), correct));
    }

    let roster = match roster {
        Some(r) => r,
        None => {
            let mut students: Vec<String> = Vec::new();
            let mut questions: Vec<String> = Vec::new();
            let (mut seen_s, mut seen_q) = (HashSet::new(), HashSet::new());
            for (_, s, q, _) in &rows {
                if seen_s.insert(s.as_str()) {
                    students.push(s.clone());
                }
                if seen_q.insert(q.as_str()) {
                    questions.push(q.clone());
                }
            }
            if students.is_empty() {
                return Err(malformed(path, 1, "no rows"));
            }
            Arc::new(Roster::new(students, questions).map_err(|e| malformed(path, 1, e.to_string()))?)
        }
    };

    let q = roster.num_questions();
    let mut seen = vec![false; roster.num_students() * q];
    let mut triples = Vec::with_capacity(rows.len());
    for (line, s, qid, correct) in rows {
        let i = roster
            .student_index(&s)
            .ok_or_else(|| malformed(path, line, format!("unknown student {s:?}")))?;
        let j = roster
            .question_index(&qid)
            .ok_or_else(|| malformed(path, line, format!("unknown question {qid:?}")))?;
        if std::mem::replace(&mut seen[i * q + j], true) {
            return Err(Error::DuplicateEdge {
                path: path.to_path_buf(),
                line,
                student: s,
                question: qid,
            });
        }
        triples.push((i, j, correct));
    }
    ExamResultGraph::from_triples(roster, triples)
}

/// Reads a dense answer table; `NA` marks an unassigned pair.
pub fn read_dense<R: Read>(source: R, path: &Path) -> Result<AnswerMatrix> {
    let mut rdr = reader(source);
    let header = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.len() < 2 {
        return Err(malformed(
            path,
            1,
            "need a student column and at least one question column",
        ));
    }
    let questions: Vec<String> = header.iter().skip(1).map(str::to_string).collect();

    let mut students = Vec::new();
    let mut cells = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record[0].is_empty() {
            return Err(malformed(path, line, "empty student identifier"));
        }
        students.push(record[0].to_string());
        for (k, cell) in record.iter().skip(1).enumerate() {
            let value = match cell {
                "NA" => None,
                other => Some(parse_bit(other).ok_or_else(|| {
                    malformed(
                        path,
                        line,
                        format!("cell for {} must be 0, 1 or NA, got {other:?}", questions[k]),
                    )
                })?),
            };
            cells.push(value);
        }
    }
    if students.is_empty() {
        return Err(malformed(path, 1, "no rows"));
    }
    let roster = Roster::new(students, questions).map_err(|e| malformed(path, 1, e.to_string()))?;
    AnswerMatrix::new(Arc::new(roster), cells)
}

/// Guesses the format from the header line.
pub fn detect_format(path: &Path) -> Result<ExamFormat> {
    let mut rdr = reader(open(path)?);
    let header = rdr.headers().map_err(|e| csv_error(path, e))?;
    Ok(if header.iter().eq(EDGE_LIST_HEADER) {
        ExamFormat::EdgeList
    } else {
        ExamFormat::DenseCsv
    })
}

pub fn load_exam(path: &Path, format: Option<ExamFormat>) -> Result<ExamResultGraph> {
    let format = match format {
        Some(f) => f,
        None => detect_format(path)?,
    };
    match format {
        ExamFormat::EdgeList => read_edge_list(open(path)?, path, None),
        ExamFormat::DenseCsv => Ok(read_dense(open(path)?, path)?.to_exam_result()),
    }
}

pub fn load_answers(path: &Path) -> Result<AnswerMatrix> {
    read_dense(open(path)?, path)
}

pub fn write_edge_list<W: Write>(g: &ExamResultGraph, sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(EDGE_LIST_HEADER)?;
    let roster = g.roster();
    for (i, j, correct) in g.outcomes() {
        w.write_record([
            roster.students()[i].as_str(),
            roster.questions()[j].as_str(),
            if correct { "1" } else { "0" },
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_dense<W: Write>(answers: &AnswerMatrix, sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    let roster = answers.roster();
    w.write_record(std::iter::once("student").chain(roster.questions().iter().map(String::as_str)))?;
    for (i, s) in roster.students().iter().enumerate() {
        let cells = (0..roster.num_questions()).map(|j| match answers.get(i, j) {
            Some(true) => "1",
            Some(false) => "0",
            None => "NA",
        });
        w.write_record(std::iter::once(s.as_str()).chain(cells))?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_exam(g: &ExamResultGraph, path: &Path, format: ExamFormat) -> Result<()> {
    let file = create(path)?;
    match format {
        ExamFormat::EdgeList => write_edge_list(g, file),
        ExamFormat::DenseCsv => write_dense(&AnswerMatrix::from_exam_result(g), file),
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct MeritRow {
    vertex: String,
    kind: String,
    merit: f64,
}

pub fn write_merits<W: Write>(u: &MeritVector, roster: &Roster, sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    let n = roster.num_students();
    for (v, merit) in u.iter() {
        w.serialize(MeritRow {
            vertex: roster.vertex_id(v).to_string(),
            kind: if v < n { "student" } else { "question" }.into(),
            merit,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Reads merits for `roster`'s vertices; rows may come in any order.
pub fn read_merits<R: Read>(source: R, path: &Path, roster: &Roster) -> Result<MeritVector> {
    let mut rdr = reader(source);
    let header = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    let mut values: Vec<Option<f64>> = vec![None; roster.num_vertices()];
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let row: MeritRow = record
            .deserialize(Some(&header))
            .map_err(|e| malformed(path, line, e.to_string()))?;
        let v = match row.kind.as_str() {
            "student" => roster.student_index(&row.vertex).map(|i| roster.student_vertex(i)),
            "question" => roster.question_index(&row.vertex).map(|j| roster.question_vertex(j)),
            other => {
                return Err(malformed(
                    path,
                    line,
                    format!("kind must be student or question, got {other:?}"),
                ))
            }
        }
        .ok_or_else(|| malformed(path, line, format!("unknown {} {:?}", row.kind, row.vertex)))?;
        if !row.merit.is_finite() {
            return Err(malformed(path, line, format!("non-finite merit for {}", row.vertex)));
        }
        if values[v].replace(row.merit).is_some() {
            return Err(malformed(path, line, format!("duplicate merit for {}", row.vertex)));
        }
    }
    let (vertices, merits): (Vec<usize>, Vec<f64>) =
        values.iter().enumerate().filter_map(|(v, m)| m.map(|m| (v, m))).unzip();
    MeritVector::new(vertices, merits, Normalization::Unnormalized)
}

/// Reads a merit table and the roster it implies: students and questions in
/// order of appearance.
pub fn read_merit_table<R: Read>(source: R, path: &Path) -> Result<(Arc<Roster>, MeritVector)> {
    let mut text = String::new();
    let mut source = source;
    source.read_to_string(&mut text)?;
    let mut rdr = reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    let (mut students, mut questions) = (Vec::new(), Vec::new());
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let row: MeritRow = record
            .deserialize(Some(&header))
            .map_err(|e| malformed(path, line, e.to_string()))?;
        match row.kind.as_str() {
            "student" => students.push(row.vertex),
            "question" => questions.push(row.vertex),
            other => {
                return Err(malformed(
                    path,
                    line,
                    format!("kind must be student or question, got {other:?}"),
                ))
            }
        }
    }
    if students.is_empty() || questions.is_empty() {
        return Err(malformed(path, 1, "need at least one student and one question"));
    }
    let roster = Arc::new(Roster::new(students, questions).map_err(|e| malformed(path, 1, e.to_string()))?);
    let u = read_merits(text.as_bytes(), path, &roster)?;
    Ok((roster, u))
}

pub fn load_merit_table(path: &Path) -> Result<(Arc<Roster>, MeritVector)> {
    read_merit_table(open(path)?, path)
}

pub fn load_merits(path: &Path, roster: &Roster) -> Result<MeritVector> {
    read_merits(open(path)?, path, roster)
}

pub fn save_merits(u: &MeritVector, roster: &Roster, path: &Path) -> Result<()> {
    write_merits(u, roster, create(path)?)
}

/// One row per student per grade vector.
pub fn write_grades<W: Write>(grades: &[&GradeVector], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["student", "grade", "rule"])?;
    for g in grades {
        for (s, x) in g.roster().students().iter().zip(g.grades()) {
            w.write_record([s.as_str(), &x.to_string(), g.rule()])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn save_grades(grades: &[&GradeVector], path: &Path) -> Result<()> {
    write_grades(grades, create(path)?)
}

/// The matrix and its case tags as two CSV files of identical shape.
pub fn write_prediction_matrix<W: Write, T: Write>(h: &PredictionMatrix, values: W, tags: T) -> Result<()> {
    let roster = h.roster();
    let header = || std::iter::once("student").chain(roster.questions().iter().map(String::as_str));
    let mut wv = csv::Writer::from_writer(values);
    let mut wt = csv::Writer::from_writer(tags);
    wv.write_record(header())?;
    wt.write_record(header())?;
    for (i, s) in roster.students().iter().enumerate() {
        let q = roster.num_questions();
        wv.write_record(std::iter::once(s.clone()).chain((0..q).map(|j| h.get(i, j).to_string())))?;
        wt.write_record(std::iter::once(s.as_str()).chain((0..q).map(|j| h.case(i, j).as_str())))?;
    }
    wv.flush()?;
    wt.flush()?;
    Ok(())
}

/// One long-format report row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TidyRow {
    pub parameter: String,
    pub value: String,
    pub rule: String,
    pub statistic: String,
    pub estimate: f64,
    pub se: Option<f64>,
}

impl TidyRow {
    fn new(parameter: &str, value: impl ToString, rule: &str, statistic: &str, estimate: f64, se: Option<f64>) -> Self {
        Self {
            parameter: parameter.into(),
            value: value.to_string(),
            rule: rule.into(),
            statistic: statistic.into(),
            estimate,
            se,
        }
    }
}

pub fn sweep_rows(sweep: &SweepResult) -> Vec<TidyRow> {
    let mut rows = Vec::new();
    for p in &sweep.points {
        for r in &p.rules {
            rows.push(TidyRow::new(
                &sweep.axis,
                p.value,
                &r.rule,
                "max_bias",
                r.max_bias,
                Some(r.max_bias_se),
            ));
            rows.push(TidyRow::new(
                &sweep.axis,
                p.value,
                &r.rule,
                "avg_bias",
                r.avg_bias,
                Some(r.avg_bias_se),
            ));
            rows.push(TidyRow::new(
                &sweep.axis,
                p.value,
                &r.rule,
                "failed",
                r.failed as f64,
                None,
            ));
        }
        if let (Some(gm), Some(ga)) = (p.paired_gap("ours", "avg", true), p.paired_gap("ours", "avg", false)) {
            rows.push(TidyRow::new(
                &sweep.axis,
                p.value,
                "ours-avg",
                "max_bias",
                gm.0,
                Some(gm.1),
            ));
            rows.push(TidyRow::new(
                &sweep.axis,
                p.value,
                "ours-avg",
                "avg_bias",
                ga.0,
                Some(ga.1),
            ));
        }
    }
    rows
}

pub fn cv_rows(cv: &CvResult) -> Vec<TidyRow> {
    let mut rows = Vec::new();
    for p in &cv.points {
        let value = format!("{}x{}", p.d1, p.d2);
        for r in &p.rules {
            rows.push(TidyRow::new("d1xd2", &value, &r.rule, "mse", r.mse, Some(r.se)));
        }
    }
    for (d1, d2) in &cv.threshold_table {
        rows.push(TidyRow::new(
            "d1",
            d1,
            "ours-vs-avg",
            "threshold_d2",
            d2.map_or(f64::NAN, |d| d as f64),
            None,
        ));
    }
    rows
}

/// Per-student deviation and bias plus the aggregates.
pub fn bias_rows(reports: &[BiasReport], roster: &Roster) -> Vec<TidyRow> {
    let mut rows = Vec::new();
    for r in reports {
        for (i, s) in roster.students().iter().enumerate() {
            rows.push(TidyRow::new(
                "student",
                s,
                &r.rule,
                "deviation",
                r.per_student_deviation[i],
                Some(r.per_student_se[i]),
            ));
            rows.push(TidyRow::new("student", s, &r.rule, "bias", r.per_student_bias[i], None));
        }
        rows.push(TidyRow::new("all", "all", &r.rule, "max_bias", r.max_bias, None));
        rows.push(TidyRow::new("all", "all", &r.rule, "avg_bias", r.avg_bias, None));
        rows.push(TidyRow::new("all", "all", &r.rule, "failed", r.failed as f64, None));
    }
    rows
}

pub fn decomposition_rows(parts: &[(String, ErrorDecomposition)]) -> Vec<TidyRow> {
    let mut rows = Vec::new();
    for (rule, d) in parts {
        rows.push(TidyRow::new("all", "all", rule, "bias", d.bias, Some(d.bias_se)));
        rows.push(TidyRow::new(
            "all",
            "all",
            rule,
            "variance",
            d.variance,
            Some(d.variance_se),
        ));
        rows.push(TidyRow::new("all", "all", rule, "error", d.error, Some(d.error_se)));
    }
    rows
}

pub fn write_tidy<W: Write>(rows: &[TidyRow], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_tidy<R: Read>(source: R, path: &Path) -> Result<Vec<TidyRow>> {
    reader(source)
        .deserialize()
        .map(|r| r.map_err(|e| csv_error(path, e)))
        .collect()
}

pub fn save_tidy(rows: &[TidyRow], path: &Path) -> Result<()> {
    write_tidy(rows, create(path)?)
}

pub fn save_json<T: Serialize + ?Sized>(value: &T, path: &Path) -> Result<()> {
    let mut file = create(path)?;
    serde_json::to_writer_pretty(&mut file, value)?;
    file.write_all(b"\n")?;
    file.flush()?;
    Ok(())
}
