//! Brute-force oracles shared by the integration tests.
#![allow(dead_code, clippy::needless_range_loop)]

use std::sync::Arc;

use fairgrade::model::Normalization;
use fairgrade::{ExamResultGraph, MeritVector, Roster};
use rand::Rng;

/// Every exam result graph on `n` students and `q` questions: each cell is
/// unassigned, correct or wrong.
pub fn all_exams(n: usize, q: usize) -> impl Iterator<Item = ExamResultGraph> {
    let roster = Arc::new(Roster::numbered(n, q).unwrap());
    let cells = n * q;
    (0..3usize.pow(cells as u32)).map(move |mut code| {
        let mut triples = Vec::new();
        for c in 0..cells {
            match code % 3 {
                1 => triples.push((c / q, c % q, true)),
                2 => triples.push((c / q, c % q, false)),
                _ => {}
            }
            code /= 3;
        }
        ExamResultGraph::from_triples(roster.clone(), triples).unwrap()
    })
}

/// A random exam: each cell is assigned with probability `density`, then
/// answered correctly with probability one half.
pub fn random_exam<R: Rng>(n: usize, q: usize, density: f64, rng: &mut R) -> ExamResultGraph {
    let roster = Arc::new(Roster::numbered(n, q).unwrap());
    let mut triples = Vec::new();
    for i in 0..n {
        for j in 0..q {
            if rng.random::<f64>() < density {
                triples.push((i, j, rng.random::<bool>()));
            }
        }
    }
    ExamResultGraph::from_triples(roster, triples).unwrap()
}

/// Transitive closure by Floyd–Warshall; `r[u][v]` is reflexive.
pub fn reach_matrix(g: &ExamResultGraph) -> Vec<Vec<bool>> {
    let succ = g.successors();
    let v = succ.len();
    let mut r = vec![vec![false; v]; v];
    for (a, out) in succ.iter().enumerate() {
        r[a][a] = true;
        for &b in out {
            r[a][b] = true;
        }
    }
    for k in 0..v {
        for a in 0..v {
            if r[a][k] {
                for b in 0..v {
                    if r[k][b] {
                        r[a][b] = true;
                    }
                }
            }
        }
    }
    r
}

/// Maximises the log-likelihood over mean-zero merits of `vertices` by a
/// grid scan followed by compass search.
pub fn brute_force_mle(g: &ExamResultGraph, vertices: &[usize]) -> MeritVector {
    let k = vertices.len();
    let free = k - 1;
    let roster = g.roster();
    let local = |v: usize| vertices.iter().position(|&x| x == v);
    let inner: Vec<(usize, usize, bool)> = g
        .outcomes()
        .filter_map(|(i, j, w)| Some((local(roster.student_vertex(i))?, local(roster.question_vertex(j))?, w)))
        .collect();
    let eval = |x: &[f64]| {
        let mut values = x.to_vec();
        values.push(-x.iter().sum::<f64>());
        inner
            .iter()
            .map(|&(s, q, w)| {
                let d = if w {
                    values[s] - values[q]
                } else {
                    values[q] - values[s]
                };
                -(-d).exp().ln_1p()
            })
            .sum::<f64>()
    };

    let grid: Vec<f64> = (-8..=8).map(|s| s as f64 * 0.5).collect();
    let mut best = vec![0.0; free];
    let mut best_ll = f64::NEG_INFINITY;
    let mut idx = vec![0usize; free];
    loop {
        let x: Vec<f64> = idx.iter().map(|&t| grid[t]).collect();
        let ll = eval(&x);
        if ll > best_ll {
            best_ll = ll;
            best = x;
        }
        let mut pos = 0;
        while pos < free {
            idx[pos] += 1;
            if idx[pos] < grid.len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
        if pos == free {
            break;
        }
    }

    let mut step = 0.25;
    while step > 1e-9 {
        let mut improved = false;
        for c in 0..free {
            for sign in [1.0, -1.0] {
                let mut x = best.clone();
                x[c] += sign * step;
                let ll = eval(&x);
                if ll > best_ll {
                    best_ll = ll;
                    best = x;
                    improved = true;
                }
            }
        }
        if !improved {
            step /= 2.0;
        }
    }
    best.push(-best.iter().sum::<f64>());
    MeritVector::new(vertices.to_vec(), best, Normalization::MeanZero).unwrap()
}

/// First-order defect of the likelihood over `u`'s vertices, computed per
/// vertex from wins and expected wins.
pub fn independent_residual(u: &MeritVector, g: &ExamResultGraph) -> f64 {
    let roster = g.roster();
    let f = |x: f64| 1.0 / (1.0 + (-x).exp());
    let mut worst: f64 = 0.0;
    for &v in u.vertices() {
        let uv = u.get(v).unwrap();
        let (mut wins, mut expected) = (0.0, 0.0);
        for (i, j, w) in g.outcomes() {
            let (s, qv) = (roster.student_vertex(i), roster.question_vertex(j));
            let (other, won) = if s == v {
                (qv, w)
            } else if qv == v {
                (s, !w)
            } else {
                continue;
            };
            let Some(uo) = u.get(other) else { continue };
            wins += if won { 1.0 } else { 0.0 };
            expected += f(uv - uo);
        }
        worst = worst.max((wins - expected).abs());
    }
    worst
}

pub fn uniform_merits<R: Rng>(n: usize, q: usize, lo: f64, hi: f64, rng: &mut R) -> MeritVector {
    let a: Vec<f64> = (0..n).map(|_| rng.random_range(lo..hi)).collect();
    let b: Vec<f64> = (0..q).map(|_| rng.random_range(lo..hi)).collect();
    MeritVector::from_parts(&a, &b).unwrap()
}

/// `E_w[rule]` by recursion over assigned pairs, branching on each outcome.
pub fn recursive_expected_grade(
    rule: &dyn fairgrade::GradingRule,
    g: &fairgrade::TaskAssignmentGraph,
    u: &MeritVector,
) -> Vec<f64> {
    let edges: Vec<(usize, usize)> = g.edges().collect();
    let roster = g.roster().clone();
    let probs: Vec<f64> = edges
        .iter()
        .map(|&(i, j)| {
            let x = u.get(roster.student_vertex(i)).unwrap() - u.get(roster.question_vertex(j)).unwrap();
            1.0 / (1.0 + (-x).exp())
        })
        .collect();
    let mut acc = vec![0.0; roster.num_students()];
    let mut chosen = Vec::with_capacity(edges.len());
    #[allow(clippy::too_many_arguments)]
    fn go(
        k: usize,
        weight: f64,
        chosen: &mut Vec<(usize, usize, bool)>,
        edges: &[(usize, usize)],
        probs: &[f64],
        roster: &Arc<Roster>,
        rule: &dyn fairgrade::GradingRule,
        acc: &mut [f64],
    ) {
        if k == edges.len() {
            let exam = ExamResultGraph::from_triples(roster.clone(), chosen.iter().copied()).unwrap();
            for (a, x) in acc.iter_mut().zip(rule.grade(&exam).unwrap().grades()) {
                *a += weight * x;
            }
            return;
        }
        for (w, p) in [(true, probs[k]), (false, 1.0 - probs[k])] {
            chosen.push((edges[k].0, edges[k].1, w));
            go(k + 1, weight * p, chosen, edges, probs, roster, rule, acc);
            chosen.pop();
        }
    }
    go(0, 1.0, &mut chosen, &edges, &probs, &roster, rule, &mut acc);
    acc
}
