//! Per-student ex-post bias of both rules on one random assignment, plus
//! the bias-variance decomposition over several assignments.

use std::sync::Arc;

use fairgrade::rng::SeedStream;
use fairgrade::simulation::{
    decompose_error, estimate_ex_post_bias_many, REFERENCE_ABILITY_RANGE, REFERENCE_DIFFICULTY_RANGE,
};
use fairgrade::{generate_assignment, GradingRule, MeritVector, Result, Roster, Rule, TaskAssignmentGraph};
use rand::Rng;

fn main() -> Result<()> {
    let (n, q, d) = (35, 22, 10);
    let stream = SeedStream::new(3);
    let mut rng = stream.child(0).rng();
    let a: Vec<f64> = (0..n)
        .map(|_| rng.random_range(REFERENCE_ABILITY_RANGE.0..REFERENCE_ABILITY_RANGE.1))
        .collect();
    let b: Vec<f64> = (0..q)
        .map(|_| rng.random_range(REFERENCE_DIFFICULTY_RANGE.0..REFERENCE_DIFFICULTY_RANGE.1))
        .collect();
    let u = MeritVector::from_parts(&a, &b)?;
    let roster = Arc::new(Roster::numbered(n, q)?);

    let rules = [Rule::ours(), Rule::Avg];
    let dyn_rules: Vec<&dyn GradingRule> = rules.iter().map(|r| r as &dyn GradingRule).collect();
    let g = generate_assignment(roster.clone(), q, d, stream.child(1).master())?;
    for report in estimate_ex_post_bias_many(&dyn_rules, &g, &u, 200, stream.child(2))? {
        println!(
            "{:>4}: max bias {:.2e}, mean bias {:.2e}",
            report.rule, report.max_bias, report.avg_bias
        );
    }

    let graphs: Vec<TaskAssignmentGraph> = (0..10)
        .map(|k| generate_assignment(roster.clone(), q, d, stream.child(3).child(k).master()))
        .collect::<Result<_>>()?;
    for rule in &rules {
        let dec = decompose_error(rule, &graphs, &u, 100, stream.child(4).master())?;
        println!(
            "{:>4}: error {:.4} = bias {:.2e} + variance {:.4}",
            rule.name(),
            dec.error,
            dec.bias,
            dec.variance
        );
    }
    Ok(())
}
