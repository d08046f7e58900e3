use fixedbitset::FixedBitSet;

use super::ExamResultGraph;

/// Which rule of the grading algorithm a (student, question) cell falls under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PairCase {
    ExistingEdge,
    SameComponent,
    /// Only the student reaches the question.
    ComparableStudentAbove,
    /// Only the question reaches the student.
    ComparableQuestionAbove,
    Incomparable,
}

impl PairCase {
    pub fn as_str(self) -> &'static str {
        match self {
            PairCase::ExistingEdge => "existing",
            PairCase::SameComponent => "same",
            PairCase::ComparableStudentAbove => "student-above",
            PairCase::ComparableQuestionAbove => "question-above",
            PairCase::Incomparable => "incomparable",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "existing" => PairCase::ExistingEdge,
            "same" => PairCase::SameComponent,
            "student-above" => PairCase::ComparableStudentAbove,
            "question-above" => PairCase::ComparableQuestionAbove,
            "incomparable" => PairCase::Incomparable,
            _ => return None,
        })
    }
}

/// Strongly connected components of an exam result graph and the
/// reachability closure of its condensation.
///
/// Component ids follow Tarjan completion order, so every condensation edge
/// goes from a larger id to a smaller one.
#[derive(Debug, Clone)]
pub struct ComponentStructure {
    component_of: Vec<usize>,
    components: Vec<Vec<usize>>,
    reach: Vec<FixedBitSet>,
}

impl ComponentStructure {
    pub fn component_of(&self, vertex: usize) -> usize {
        self.component_of[vertex]
    }

    pub fn components(&self) -> &[Vec<usize>] {
        &self.components
    }

    pub fn num_components(&self) -> usize {
        self.components.len()
    }

    /// Whether component `a` reaches component `b` (reflexive).
    #[inline]
    pub fn component_reaches(&self, a: usize, b: usize) -> bool {
        self.reach[a].contains(b)
    }

    /// Whether a directed path leads from vertex `u` to vertex `v`.
    #[inline]
    pub fn reaches(&self, u: usize, v: usize) -> bool {
        self.component_reaches(self.component_of[u], self.component_of[v])
    }
}

/// Tarjan's algorithm over an adjacency list, iteratively.
fn tarjan(succ: &[Vec<usize>]) -> (Vec<usize>, Vec<Vec<usize>>) {
    const UNVISITED: usize = usize::MAX;
    let n = succ.len();
    let mut index = vec![UNVISITED; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut component_of = vec![UNVISITED; n];
    let mut components = Vec::new();
    let mut next = 0;
    // (vertex, position in its successor list)
    let mut call: Vec<(usize, usize)> = Vec::new();

    for root in 0..n {
        if index[root] != UNVISITED {
            continue;
        }
        call.push((root, 0));
        index[root] = next;
        low[root] = next;
        next += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            if let Some(&w) = succ[v].get(*pos) {
                *pos += 1;
                if index[w] == UNVISITED {
                    index[w] = next;
                    low[w] = next;
                    next += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let id = components.len();
                let mut members = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack holds the component");
                    on_stack[w] = false;
                    component_of[w] = id;
                    members.push(w);
                    if w == v {
                        break;
                    }
                }
                members.sort_unstable();
                components.push(members);
            }
        }
    }
    (component_of, components)
}

/// Number of SCCs of an arbitrary adjacency list.
pub(crate) fn scc_count(succ: &[Vec<usize>]) -> usize {
    tarjan(succ).1.len()
}

/// SCCs of the result digraph over all students and bank questions.
///
/// Isolated vertices (including unsampled questions) are singleton components.
pub fn strongly_connected_components(g: &ExamResultGraph) -> ComponentStructure {
    let succ = g.successors();
    let (component_of, components) = tarjan(&succ);
    let k = components.len();

    let mut reach: Vec<FixedBitSet> = Vec::with_capacity(k);
    for (c, members) in components.iter().enumerate() {
        let mut set = FixedBitSet::with_capacity(k);
        set.insert(c);
        for &v in members {
            for &w in &succ[v] {
                let d = component_of[w];
                if d != c {
                    debug_assert!(d < c);
                    set.union_with(&reach[d]);
                }
            }
        }
        reach.push(set);
    }

    ComponentStructure {
        component_of,
        components,
        reach,
    }
}

/// True iff the whole result graph is one strongly connected component.
pub fn is_strongly_connected(g: &ExamResultGraph) -> bool {
    strongly_connected_components(g).num_components() == 1
}

/// Case of cell `(i, j)` for student `i` and question `j`.
pub fn classify_pair(c: &ComponentStructure, g: &ExamResultGraph, i: usize, j: usize) -> PairCase {
    if g.assignment().is_assigned(i, j) {
        return PairCase::ExistingEdge;
    }
    let roster = g.roster();
    let a = c.component_of(roster.student_vertex(i));
    let b = c.component_of(roster.question_vertex(j));
    if a == b {
        return PairCase::SameComponent;
    }
    match (c.component_reaches(a, b), c.component_reaches(b, a)) {
        (true, false) => PairCase::ComparableStudentAbove,
        (false, true) => PairCase::ComparableQuestionAbove,
        _ => PairCase::Incomparable,
    }
}
