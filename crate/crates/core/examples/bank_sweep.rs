//! Exam design: five students answer five questions drawn from an `m`-question
//! sample of the bank. Bias is measured against the whole difficulty
//! distribution.

use fairgrade::simulation::{sweep_question_sample_size, BenchmarkScope, DifficultySampler, SweepSettings};
use fairgrade::{GradingRule, Rule};

fn main() -> fairgrade::Result<()> {
    let abilities = [-1.2, -0.5, 0.0, 0.6, 1.1];
    let sampler = DifficultySampler::default();
    let rules = [Rule::ours(), Rule::Avg];
    let dyn_rules: Vec<&dyn GradingRule> = rules.iter().map(|r| r as &dyn GradingRule).collect();
    let settings = SweepSettings {
        graphs: 100,
        replications: 50,
        seed: 9,
    };
    let sweep = sweep_question_sample_size(
        &dyn_rules,
        &abilities,
        &sampler,
        &[5, 8, 10, 15, 30, 100],
        5,
        settings,
        BenchmarkScope::Population,
    )?;

    println!("     m    ours max     avg max");
    for p in &sweep.points {
        let (o, a) = (p.rule("ours").unwrap(), p.rule("avg").unwrap());
        println!("{:>6}  {:.3e}  {:.3e}", p.value, o.max_bias, a.max_bias);
    }
    Ok(())
}
