//! Student–question graphs.
//!
//! Vertices are numbered with students first: student `i` is vertex `i`,
//! question `j` is vertex `n + j`. The task assignment graph records who was
//! asked what; the exam result graph orients each assigned pair by its
//! outcome (student → question when correct, question → student otherwise).

mod assign;
mod scc;

use std::collections::HashSet;
use std::sync::Arc;

use fixedbitset::FixedBitSet;

use crate::error::{Error, Result};

pub use assign::{generate_assignment, sample_assignment};
pub(crate) use scc::scc_count;
pub use scc::{classify_pair, is_strongly_connected, strongly_connected_components, ComponentStructure, PairCase};

/// A vertex of the bipartite graph, by role.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Vertex {
    Student(usize),
    Question(usize),
}

/// Ordered student and question identifiers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Roster {
    students: Vec<String>,
    questions: Vec<String>,
}

impl Roster {
    pub fn new(students: Vec<String>, questions: Vec<String>) -> Result<Self> {
        if students.is_empty() || questions.is_empty() {
            return Err(Error::InvalidGraph(
                "roster needs at least one student and one question".into(),
            ));
        }
        let mut seen = HashSet::new();
        for id in students.iter().chain(&questions) {
            if !seen.insert(id.as_str()) {
                return Err(Error::InvalidGraph(format!("identifier {id:?} is not unique")));
            }
        }
        Ok(Self { students, questions })
    }

    /// Roster with generated ids `S1..Sn` and `Q1..Qq`.
    pub fn numbered(students: usize, questions: usize) -> Result<Self> {
        Self::new(
            (1..=students).map(|i| format!("S{i}")).collect(),
            (1..=questions).map(|j| format!("Q{j}")).collect(),
        )
    }

    pub fn num_students(&self) -> usize {
        self.students.len()
    }

    pub fn num_questions(&self) -> usize {
        self.questions.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.students.len() + self.questions.len()
    }

    pub fn students(&self) -> &[String] {
        &self.students
    }

    pub fn questions(&self) -> &[String] {
        &self.questions
    }

    pub fn student_index(&self, id: &str) -> Option<usize> {
        self.students.iter().position(|s| s == id)
    }

    pub fn question_index(&self, id: &str) -> Option<usize> {
        self.questions.iter().position(|q| q == id)
    }

    #[inline]
    pub fn student_vertex(&self, i: usize) -> usize {
        i
    }

    #[inline]
    pub fn question_vertex(&self, j: usize) -> usize {
        self.students.len() + j
    }

    pub fn vertex(&self, v: usize) -> Vertex {
        let n = self.students.len();
        if v < n {
            Vertex::Student(v)
        } else {
            Vertex::Question(v - n)
        }
    }

    pub fn vertex_id(&self, v: usize) -> &str {
        match self.vertex(v) {
            Vertex::Student(i) => &self.students[i],
            Vertex::Question(j) => &self.questions[j],
        }
    }
}

/// Undirected bipartite graph of assigned (student, question) pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskAssignmentGraph {
    roster: Arc<Roster>,
    neighbors: Vec<Vec<usize>>,
    assigned: FixedBitSet,
}

impl TaskAssignmentGraph {
    /// Builds the graph from `(student, question)` index pairs.
    pub fn from_edges<I>(roster: Arc<Roster>, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let (n, q) = (roster.num_students(), roster.num_questions());
        let mut neighbors = vec![Vec::new(); n];
        let mut assigned = FixedBitSet::with_capacity(n * q);
        for (i, j) in edges {
            if i >= n || j >= q {
                return Err(Error::InvalidGraph(format!("edge ({i}, {j}) outside a {n}x{q} roster")));
            }
            if assigned.put(i * q + j) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({i}, {j})")));
            }
            neighbors[i].push(j);
        }
        for row in &mut neighbors {
            row.sort_unstable();
        }
        Ok(Self {
            roster,
            neighbors,
            assigned,
        })
    }

    /// Every student assigned every question.
    pub fn complete(roster: Arc<Roster>) -> Self {
        let (n, q) = (roster.num_students(), roster.num_questions());
        let edges: Vec<_> = (0..n).flat_map(|i| (0..q).map(move |j| (i, j))).collect();
        Self::from_edges(roster, edges).expect("complete graph edges are valid")
    }

    pub fn roster(&self) -> &Arc<Roster> {
        &self.roster
    }

    #[inline]
    pub fn is_assigned(&self, i: usize, j: usize) -> bool {
        self.assigned.contains(i * self.roster.num_questions() + j)
    }

    /// Questions assigned to student `i`, ascending.
    pub fn questions_of(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn num_edges(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum()
    }

    /// Edges in student-major order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.neighbors
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().map(move |&j| (i, j)))
    }

    /// Fails if some student has no assigned question.
    pub fn check_student_degrees(&self) -> Result<()> {
        match self.neighbors.iter().position(Vec::is_empty) {
            Some(i) => Err(Error::ZeroDegreeStudent(i)),
            None => Ok(()),
        }
    }
}

/// Directed bipartite graph of observed outcomes on an assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExamResultGraph {
    assignment: TaskAssignmentGraph,
    correct: FixedBitSet,
}

impl ExamResultGraph {
    /// Outcome of every assigned pair from `outcome(i, j)`.
    pub fn from_fn(assignment: TaskAssignmentGraph, mut outcome: impl FnMut(usize, usize) -> bool) -> Self {
        let q = assignment.roster.num_questions();
        let mut correct = FixedBitSet::with_capacity(assignment.roster.num_students() * q);
        for (i, j) in assignment.edges() {
            if outcome(i, j) {
                correct.insert(i * q + j);
            }
        }
        Self { assignment, correct }
    }

    /// Builds both graphs from `(student, question, correct)` triples.
    pub fn from_triples<I>(roster: Arc<Roster>, triples: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, bool)>,
    {
        let triples: Vec<_> = triples.into_iter().collect();
        let assignment = TaskAssignmentGraph::from_edges(roster, triples.iter().map(|&(i, j, _)| (i, j)))?;
        let q = assignment.roster.num_questions();
        let mut correct = FixedBitSet::with_capacity(assignment.roster.num_students() * q);
        for &(i, j, w) in &triples {
            if w {
                correct.insert(i * q + j);
            }
        }
        Ok(Self { assignment, correct })
    }

    pub fn assignment(&self) -> &TaskAssignmentGraph {
        &self.assignment
    }

    pub fn roster(&self) -> &Arc<Roster> {
        &self.assignment.roster
    }

    /// `Some(w_ij)` on assigned pairs, `None` otherwise.
    #[inline]
    pub fn outcome(&self, i: usize, j: usize) -> Option<bool> {
        self.assignment
            .is_assigned(i, j)
            .then(|| self.correct.contains(i * self.assignment.roster.num_questions() + j))
    }

    /// `(student, question, correct)` in student-major order.
    pub fn outcomes(&self) -> impl Iterator<Item = (usize, usize, bool)> + '_ {
        let q = self.assignment.roster.num_questions();
        self.assignment
            .edges()
            .map(move |(i, j)| (i, j, self.correct.contains(i * q + j)))
    }

    /// Number of questions student `i` answered correctly (out-degree).
    pub fn correct_count(&self, i: usize) -> usize {
        let q = self.assignment.roster.num_questions();
        self.assignment.neighbors[i]
            .iter()
            .filter(|&&j| self.correct.contains(i * q + j))
            .count()
    }

    /// Out-neighbour lists of the directed graph over all `n + |Q|` vertices.
    pub fn successors(&self) -> Vec<Vec<usize>> {
        let roster = &self.assignment.roster;
        let mut out = vec![Vec::new(); roster.num_vertices()];
        for (i, j, w) in self.outcomes() {
            let (s, t) = (roster.student_vertex(i), roster.question_vertex(j));
            if w {
                out[s].push(t);
            } else {
                out[t].push(s);
            }
        }
        out
    }
}

/// A full or partial student × question answer table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnswerMatrix {
    roster: Arc<Roster>,
    cells: Vec<Option<bool>>,
}

impl AnswerMatrix {
    pub fn new(roster: Arc<Roster>, cells: Vec<Option<bool>>) -> Result<Self> {
        let expected = roster.num_students() * roster.num_questions();
        if cells.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "{} cells for a {expected}-cell roster",
                cells.len()
            )));
        }
        Ok(Self { roster, cells })
    }

    pub fn roster(&self) -> &Arc<Roster> {
        &self.roster
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Option<bool> {
        self.cells[i * self.roster.num_questions() + j]
    }

    pub fn is_complete(&self) -> bool {
        self.cells.iter().all(Option::is_some)
    }

    /// Fraction of correct answers in row `i` over the non-missing cells.
    pub fn row_mean(&self, i: usize) -> f64 {
        let q = self.roster.num_questions();
        let row = &self.cells[i * q..(i + 1) * q];
        let seen = row.iter().filter(|c| c.is_some()).count();
        let correct = row.iter().filter(|c| **c == Some(true)).count();
        correct as f64 / seen as f64
    }

    pub fn to_exam_result(&self) -> ExamResultGraph {
        let q = self.roster.num_questions();
        let triples = self
            .cells
            .iter()
            .enumerate()
            .filter_map(|(k, c)| c.map(|w| (k / q, k % q, w)));
        ExamResultGraph::from_triples(self.roster.clone(), triples).expect("cells map to distinct edges")
    }

    pub fn from_exam_result(g: &ExamResultGraph) -> Self {
        let roster = g.roster().clone();
        let q = roster.num_questions();
        let mut cells = vec![None; roster.num_students() * q];
        for (i, j, w) in g.outcomes() {
            cells[i * q + j] = Some(w);
        }
        Self { roster, cells }
    }
}
