//! Hold-out evaluation on synthetic complete exams: each student keeps `d2`
//! answers and is scored against their full-bank accuracy.

use fairgrade::simulation::{range_prior, simulated_cross_validate};
use fairgrade::{GradingRule, Rule};

fn main() -> fairgrade::Result<()> {
    let rules = [Rule::ours(), Rule::Avg];
    let dyn_rules: Vec<&dyn GradingRule> = rules.iter().map(|r| r as &dyn GradingRule).collect();
    let result = simulated_cross_validate(&range_prior(), 35, 22, &[2, 5, 10, 15, 20, 22], 50, &dyn_rules, 1)?;

    println!("  d2    ours mse     avg mse");
    for p in &result.points {
        println!(
            "{:>4}  {:.3e}  {:.3e}",
            p.d2,
            p.mse("ours").unwrap(),
            p.mse("avg").unwrap()
        );
    }
    for (d1, d2) in &result.threshold_table {
        match d2 {
            Some(d2) => println!("with {d1} students, ours wins from d2 = {d2}"),
            None => println!("with {d1} students, ours never wins"),
        }
    }
    Ok(())
}
