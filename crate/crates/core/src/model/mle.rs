//! Maximum-likelihood merits inside one strongly connected component.
//!
//! Hunter's minorization–maximization update in the `γ = e^u` scale:
//!
//! ```text
//! γ_i ← W_i / Σ_{j ~ i} 1 / (γ_i + γ_j)
//! ```
//!
//! where `W_i` counts the comparisons vertex `i` won inside the component
//! and `j ~ i` ranges over its assigned partners there. Every update is an
//! ascent step of the log-likelihood. The fixed points are exactly the
//! solutions of the likelihood equation `W_i = Σ_{j ~ i} f(u_i − u_j)`,
//! whose ∞-norm defect is the stopping criterion.

use crate::error::{Error, Result};
use crate::graph::ExamResultGraph;

use super::{logistic, FitOptions, FitReport, MeritVector, Normalization};

const NOT_IN_COMPONENT: usize = usize::MAX;

/// Step-by-step MM iteration on one component.
#[derive(Debug, Clone)]
pub struct MmSolver {
    vertices: Vec<usize>,
    wins: Vec<f64>,
    partners: Vec<Vec<usize>>,
    gamma: Vec<f64>,
    denom: Vec<f64>,
    residual: f64,
    iterations: usize,
}

impl MmSolver {
    /// Starts from all-zero merits.
    pub fn new(g: &ExamResultGraph, component: &[usize]) -> Result<Self> {
        Self::with_initial(g, component, &vec![0.0; component.len()])
    }

    /// Starts from `initial[k]` for `component[k]`.
    pub fn with_initial(g: &ExamResultGraph, component: &[usize], initial: &[f64]) -> Result<Self> {
        if initial.len() != component.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} initial merits for {} vertices",
                initial.len(),
                component.len()
            )));
        }
        let roster = g.roster();
        let mut order: Vec<usize> = (0..component.len()).collect();
        order.sort_by_key(|&k| component[k]);
        let vertices: Vec<usize> = order.iter().map(|&k| component[k]).collect();
        if vertices.windows(2).any(|w| w[0] == w[1]) || vertices.last().is_some_and(|&v| v >= roster.num_vertices()) {
            return Err(Error::ParameterOutOfRange(
                "component vertices must be distinct roster vertices".into(),
            ));
        }

        let mut local = vec![NOT_IN_COMPONENT; roster.num_vertices()];
        for (k, &v) in vertices.iter().enumerate() {
            local[v] = k;
        }
        let size = vertices.len();
        let mut wins = vec![0.0; size];
        let mut partners = vec![Vec::new(); size];
        let mut successors = vec![Vec::new(); size];
        for (i, j, w) in g.outcomes() {
            let (a, b) = (local[roster.student_vertex(i)], local[roster.question_vertex(j)]);
            if a == NOT_IN_COMPONENT || b == NOT_IN_COMPONENT {
                continue;
            }
            partners[a].push(b);
            partners[b].push(a);
            let (winner, loser) = if w { (a, b) } else { (b, a) };
            wins[winner] += 1.0;
            successors[winner].push(loser);
        }
        if size < 2 || crate::graph::scc_count(&successors) != 1 {
            return Err(Error::NotStronglyConnected { size });
        }

        let gamma = order.iter().map(|&k| initial[k].exp()).collect();
        let mut solver = Self {
            vertices,
            wins,
            partners,
            gamma,
            denom: vec![0.0; size],
            residual: f64::INFINITY,
            iterations: 0,
        };
        solver.rescale();
        solver.refresh();
        Ok(solver)
    }

    /// Recomputes `Σ 1/(γ_i+γ_j)` and the likelihood-equation defect.
    fn refresh(&mut self) {
        let mut residual: f64 = 0.0;
        for i in 0..self.gamma.len() {
            let gi = self.gamma[i];
            let d: f64 = self.partners[i].iter().map(|&j| 1.0 / (gi + self.gamma[j])).sum();
            self.denom[i] = d;
            residual = residual.max((self.wins[i] - gi * d).abs());
        }
        self.residual = residual;
    }

    /// Divides by the geometric mean so `ln γ` stays centred.
    fn rescale(&mut self) {
        let mean = self.gamma.iter().map(|g| g.ln()).sum::<f64>() / self.gamma.len() as f64;
        let scale = (-mean).exp();
        self.gamma.iter_mut().for_each(|g| *g *= scale);
    }

    /// One simultaneous MM update of every vertex.
    pub fn step(&mut self) {
        for i in 0..self.gamma.len() {
            self.gamma[i] = self.wins[i] / self.denom[i];
        }
        self.rescale();
        self.refresh();
        self.iterations += 1;
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    /// Current iterate, mean-zero over the component.
    pub fn merits(&self) -> MeritVector {
        let values = self.gamma.iter().map(|g| g.ln()).collect();
        MeritVector::new(self.vertices.clone(), values, Normalization::MeanZero).expect("finite merits")
    }

    /// Iterates until the defect is at most `opts.tol`.
    pub fn run(mut self, opts: FitOptions) -> Result<FitReport> {
        opts.validate()?;
        while self.residual > opts.tol {
            if self.iterations >= opts.max_iter {
                return Err(Error::NonConvergence {
                    iterations: self.iterations,
                    residual: self.residual,
                    best: Box::new(self.merits()),
                });
            }
            self.step();
        }
        Ok(FitReport {
            merits: self.merits(),
            iterations: self.iterations,
            residual: self.residual,
            converged: true,
        })
    }
}

/// MLE of the merits of `component`, mean-zero.
///
/// `component` must be strongly connected in `g`; only edges with both
/// endpoints inside it enter the likelihood.
pub fn mle_fit(g: &ExamResultGraph, component: &[usize], opts: FitOptions) -> Result<FitReport> {
    MmSolver::new(g, component)?.run(opts)
}

/// [`mle_fit`] from a chosen starting point.
pub fn mle_fit_from(g: &ExamResultGraph, component: &[usize], initial: &[f64], opts: FitOptions) -> Result<FitReport> {
    MmSolver::with_initial(g, component, initial)?.run(opts)
}

/// ∞-norm of `Σ_j A'_ij − Σ_j A_ij f(u_i − u_j)` over the vertices of `u`,
/// counting only edges between covered vertices.
pub fn likelihood_residual(u: &MeritVector, g: &ExamResultGraph) -> f64 {
    let roster = g.roster();
    let mut defect = vec![0.0; roster.num_vertices()];
    for (i, j, w) in g.outcomes() {
        let (s, q) = (roster.student_vertex(i), roster.question_vertex(j));
        let (Some(us), Some(uq)) = (u.get(s), u.get(q)) else {
            continue;
        };
        let p = logistic(us - uq);
        let y = if w { 1.0 } else { 0.0 };
        defect[s] += y - p;
        defect[q] += (1.0 - y) - (1.0 - p);
    }
    u.vertices().iter().map(|&v| defect[v].abs()).fold(0.0, f64::max)
}
