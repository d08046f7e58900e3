//! Expected aggregated ex-post bias across a design parameter.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bias::ex_post_bias_against;
use super::sampler::DifficultySampler;
use super::stats::{mean, standard_error};
use crate::error::{Error, Result};
use crate::grading::GradingRule;
use crate::graph::{sample_assignment, Roster};
use crate::model::{benchmark, MeritVector};
use crate::rng::SeedStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepSettings {
    /// Assignment graphs per parameter value (outer expectation).
    pub graphs: usize,
    /// Exam samples per graph (inner expectation).
    pub replications: usize,
    pub seed: u64,
}

impl SweepSettings {
    fn validate(&self) -> Result<()> {
        if self.graphs == 0 || self.replications == 0 {
            return Err(Error::ParameterOutOfRange(
                "graphs and replications must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// What a student's grade is compared against when the bank is resampled.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BenchmarkScope {
    /// Expected accuracy on a fresh question from the difficulty distribution.
    #[default]
    Population,
    /// Mean accuracy over the `m` questions drawn for that graph.
    RealizedBank,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuleStats {
    pub rule: String,
    pub max_bias: f64,
    pub max_bias_se: f64,
    pub avg_bias: f64,
    pub avg_bias_se: f64,
    /// Per-graph values, in graph index order.
    pub per_graph_max: Vec<f64>,
    pub per_graph_avg: Vec<f64>,
    /// Failed replications summed over graphs.
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub value: usize,
    pub graphs: usize,
    pub replications: usize,
    pub rules: Vec<RuleStats>,
}

impl SweepPoint {
    pub fn rule(&self, name: &str) -> Option<&RuleStats> {
        self.rules.iter().find(|r| r.rule == name)
    }

    /// Mean and standard error of the per-graph difference `a − b`, for the
    /// maximum (`max == true`) or average bias.
    pub fn paired_gap(&self, a: &str, b: &str, max: bool) -> Option<(f64, f64)> {
        let (a, b) = (self.rule(a)?, self.rule(b)?);
        let (xa, xb) = if max {
            (&a.per_graph_max, &b.per_graph_max)
        } else {
            (&a.per_graph_avg, &b.per_graph_avg)
        };
        let diff: Vec<f64> = xa.iter().zip(xb).map(|(x, y)| x - y).collect();
        Some((mean(&diff), standard_error(&diff)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    /// `"d"` or `"m"`.
    pub axis: String,
    pub points: Vec<SweepPoint>,
}

/// Per-graph work for one parameter value: `[graph][rule] -> (max, avg, failed)`.
fn collect_point(
    rules: &[&dyn GradingRule],
    value: usize,
    settings: &SweepSettings,
    per_graph: impl Fn(SeedStream) -> Result<Vec<(f64, f64, usize)>> + Sync,
) -> Result<SweepPoint> {
    let stream = SeedStream::new(settings.seed).child(value as u64);
    let runs = (0..settings.graphs)
        .into_par_iter()
        .map(|k| per_graph(stream.child(k as u64)))
        .collect::<Result<Vec<_>>>()?;
    let rules = rules
        .iter()
        .enumerate()
        .map(|(r, rule)| {
            let per_graph_max: Vec<f64> = runs.iter().map(|g| g[r].0).collect();
            let per_graph_avg: Vec<f64> = runs.iter().map(|g| g[r].1).collect();
            RuleStats {
                rule: rule.name().to_string(),
                max_bias: mean(&per_graph_max),
                max_bias_se: standard_error(&per_graph_max),
                avg_bias: mean(&per_graph_avg),
                avg_bias_se: standard_error(&per_graph_avg),
                failed: runs.iter().map(|g| g[r].2).sum(),
                per_graph_max,
                per_graph_avg,
            }
        })
        .collect();
    Ok(SweepPoint {
        value,
        graphs: settings.graphs,
        replications: settings.replications,
        rules,
    })
}

fn sorted_unique(values: &[usize]) -> Vec<usize> {
    let mut v = values.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

/// Sweep over the degree constraint `d` with fixed merits and bank.
///
/// Each value's graphs draw from a stream keyed by the value itself, so a
/// point's numbers do not depend on which other values are swept.
pub fn sweep_degree(
    rules: &[&dyn GradingRule],
    roster: &Arc<Roster>,
    u: &MeritVector,
    m: usize,
    d_values: &[usize],
    settings: SweepSettings,
) -> Result<SweepResult> {
    settings.validate()?;
    let q = roster.num_questions();
    if d_values.is_empty() {
        return Err(Error::ParameterOutOfRange("no degree values".into()));
    }
    if let Some(&d) = d_values.iter().find(|&&d| d == 0 || d > m || m > q) {
        return Err(Error::ParameterOutOfRange(format!(
            "need 1 <= d <= m <= |Q|, got d={d}, m={m}, |Q|={q}"
        )));
    }
    let opt = benchmark(u, roster)?;
    let points = sorted_unique(d_values)
        .into_iter()
        .map(|d| {
            collect_point(rules, d, &settings, |gs| {
                let g = sample_assignment(roster.clone(), m, d, &mut gs.child(0).rng())?;
                let reports = ex_post_bias_against(rules, &g, u, opt.grades(), settings.replications, gs.child(1))?;
                Ok(reports.iter().map(|r| (r.max_bias, r.avg_bias, r.failed)).collect())
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        axis: "d".into(),
        points,
    })
}

/// Sweep over the number `m` of questions drawn for an exam.
///
/// For every graph, `m` fresh difficulties come from `sampler`, the
/// assignment gives each student `d` of them, and biases are measured
/// against `scope`.
pub fn sweep_question_sample_size(
    rules: &[&dyn GradingRule],
    abilities: &[f64],
    sampler: &DifficultySampler,
    m_values: &[usize],
    d: usize,
    settings: SweepSettings,
    scope: BenchmarkScope,
) -> Result<SweepResult> {
    settings.validate()?;
    if abilities.is_empty() || m_values.is_empty() {
        return Err(Error::ParameterOutOfRange(
            "need at least one student and one m value".into(),
        ));
    }
    if let Some(&m) = m_values.iter().find(|&&m| d == 0 || d > m) {
        return Err(Error::ParameterOutOfRange(format!(
            "need 1 <= d <= m, got d={d}, m={m}"
        )));
    }
    let population: Vec<f64> = abilities.iter().map(|&a| sampler.expected_accuracy(a)).collect();
    let points = sorted_unique(m_values)
        .into_iter()
        .map(|m| {
            collect_point(rules, m, &settings, |gs| {
                let mut rng = gs.child(0).rng();
                let difficulties = sampler.sample_n(m, &mut rng);
                let roster = Arc::new(Roster::numbered(abilities.len(), m)?);
                let u = MeritVector::from_parts(abilities, &difficulties)?;
                let g = sample_assignment(roster.clone(), m, d, &mut rng)?;
                let opt = match scope {
                    BenchmarkScope::Population => population.clone(),
                    BenchmarkScope::RealizedBank => benchmark(&u, &roster)?.into_grades(),
                };
                let reports = ex_post_bias_against(rules, &g, &u, &opt, settings.replications, gs.child(1))?;
                Ok(reports.iter().map(|r| (r.max_bias, r.avg_bias, r.failed)).collect())
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        axis: "m".into(),
        points,
    })
}
