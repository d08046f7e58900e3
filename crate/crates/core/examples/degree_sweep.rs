//! How the expected ex-post bias of each rule changes with the number of
//! questions per student.

use std::sync::Arc;

use fairgrade::simulation::{sweep_degree, SweepSettings};
use fairgrade::{GradingRule, MeritVector, Roster, Rule};

fn main() -> fairgrade::Result<()> {
    let (n, q) = (12, 10);
    let a: Vec<f64> = (0..n).map(|i| -1.2 + 2.4 * i as f64 / (n - 1) as f64).collect();
    let b: Vec<f64> = (0..q).map(|j| -2.5 + 4.5 * j as f64 / (q - 1) as f64).collect();
    let u = MeritVector::from_parts(&a, &b)?;
    let roster = Arc::new(Roster::numbered(n, q)?);

    let rules = [Rule::ours(), Rule::Avg];
    let dyn_rules: Vec<&dyn GradingRule> = rules.iter().map(|r| r as &dyn GradingRule).collect();
    let settings = SweepSettings {
        graphs: 20,
        replications: 50,
        seed: 5,
    };
    let sweep = sweep_degree(&dyn_rules, &roster, &u, q, &[1, 2, 4, 6, 8, 10], settings)?;

    println!("   d    ours max     avg max");
    for p in &sweep.points {
        let (o, a) = (p.rule("ours").unwrap(), p.rule("avg").unwrap());
        println!("{:>4}  {:.3e}  {:.3e}", p.value, o.max_bias, a.max_bias);
    }
    Ok(())
}
