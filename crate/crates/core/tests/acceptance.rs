//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any fails.

mod common;

use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use common::{brute_force_mle, independent_residual, random_exam, reach_matrix, uniform_merits};
use fairgrade::model::{benchmark, sample_exam_result};
use fairgrade::rng::SeedStream;
use fairgrade::simulation::{
    bound_compliance, consistency_errors, decompose_error, decompose_error_exact, equivalence_gap,
    ex_ante_expected_grade, range_prior, simulated_cross_validate, sweep_degree, sweep_question_sample_size,
    BenchmarkScope, DifficultySampler, EquivalenceFamily, SweepSettings, REFERENCE_ABILITY_RANGE,
    REFERENCE_DIFFICULTY_RANGE,
};
use fairgrade::{
    generate_assignment, is_strongly_connected, mle_fit, strongly_connected_components, FitOptions, GradingRule,
    MeritVector, Roster, Rule, TaskAssignmentGraph,
};
use rand::Rng;

type Outcome = Result<String, String>;

/// Name, check and time limit in seconds.
type Criterion = (&'static str, fn() -> Outcome, u64);

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn opts() -> FitOptions {
    FitOptions::default()
}

fn both_rules() -> [Rule; 2] {
    [Rule::ours(), Rule::Avg]
}

fn as_dyn(rules: &[Rule]) -> Vec<&dyn GradingRule> {
    rules.iter().map(|r| r as &dyn GradingRule).collect()
}

fn whole(n: usize) -> Vec<usize> {
    (0..n).collect()
}

fn mle_oracle() -> Outcome {
    let stream = SeedStream::new(1);
    let (mut checked, mut worst) = (0, 0.0f64);
    for k in 0.. {
        if checked == 10 {
            break;
        }
        let (n, q) = if k % 2 == 0 { (2, 3) } else { (2, 2) };
        let g = random_exam(n, q, 1.0, &mut stream.child(k).rng());
        if !is_strongly_connected(&g) {
            continue;
        }
        let vertices = whole(n + q);
        let fit = mle_fit(&g, &vertices, opts()).map_err(|e| e.to_string())?;
        let oracle = brute_force_mle(&g, &vertices);
        worst = worst.max(fit.merits.aligned_distance(&oracle).map_err(|e| e.to_string())?);
        checked += 1;
    }
    check(worst <= 1e-3, format!("10 instances, max ∞-norm gap {worst:.2e}"))
}

fn first_order_residual() -> Outcome {
    let stream = SeedStream::new(2);
    let (mut fits, mut worst) = (0, 0.0f64);
    for k in 0..40 {
        let (n, q, d) = [(2, 3, 3), (8, 6, 3), (20, 15, 7), (40, 30, 10)][k % 4];
        let roster = Arc::new(Roster::numbered(n, q).unwrap());
        let u = uniform_merits(n, q, -1.0, 1.0, &mut stream.child(k as u64).rng());
        let g = generate_assignment(roster, q, d, stream.child(k as u64).child(1).master()).unwrap();
        let exam = sample_exam_result(&g, &u, &mut stream.child(k as u64).child(2).rng()).unwrap();
        for members in strongly_connected_components(&exam)
            .components()
            .iter()
            .filter(|m| m.len() > 1)
        {
            let fit = mle_fit(&exam, members, opts()).map_err(|e| e.to_string())?;
            if fit.converged {
                worst = worst.max(independent_residual(&fit.merits, &exam)).max(fit.residual);
                fits += 1;
            }
        }
    }
    check(
        fits > 0 && worst <= 1e-8,
        format!("{fits} converged fits, max residual {worst:.2e}"),
    )
}

fn condition_a() -> Outcome {
    let mut rng = SeedStream::new(3).rng();
    let mut agree = 0;
    let mut connected = 0;
    for _ in 0..200 {
        let (n, q) = (rng.random_range(1..=8), rng.random_range(1..=8));
        // Dense graphs, so connected and disconnected verdicts both occur.
        let density = rng.random_range(0.85..1.0);
        let g = random_exam(n, q, density, &mut rng);
        let r = reach_matrix(&g);
        let oracle = r.iter().all(|row| row.iter().all(|&x| x));
        connected += oracle as usize;
        agree += (is_strongly_connected(&g) == oracle) as usize;
    }
    check(
        agree == 200,
        format!("{agree}/200 agree ({connected} strongly connected)"),
    )
}

fn equivalence_theorems() -> Outcome {
    let mut parts = Vec::new();
    let mut worst = 0.0f64;
    for (k, family) in EquivalenceFamily::ALL.into_iter().enumerate() {
        let gap = equivalence_gap(family, 50, 40 + k as u64, opts()).map_err(|e| e.to_string())?;
        worst = worst.max(gap);
        parts.push(format!("{family:?} {gap:.1e}"));
    }
    check(worst <= 1e-12, format!("max |ours - avg|: {}", parts.join(", ")))
}

fn ex_ante_fairness() -> Outcome {
    let stream = SeedStream::new(5);
    let mut worst = 0.0f64;
    let cases = [(2, 3, 2), (1, 3, 1), (1, 3, 2)];
    for (k, &(n, q, d)) in cases.iter().enumerate() {
        for r in 0..5 {
            let roster = Arc::new(Roster::numbered(n, q).unwrap());
            let u = uniform_merits(n, q, -2.0, 2.0, &mut stream.child(k as u64).child(r).rng());
            let e = ex_ante_expected_grade(&Rule::Avg, &roster, q, d, &u).map_err(|e| e.to_string())?;
            let opt = benchmark(&u, &roster).unwrap();
            for (a, b) in e.iter().zip(opt.grades()) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    check(
        worst <= 1e-12,
        format!("3 designs x 5 merit draws, max |E avg - opt| {worst:.1e}"),
    )
}

fn decomposition_identity() -> Outcome {
    let roster = Arc::new(Roster::numbered(4, 4).unwrap());
    let u = uniform_merits(4, 4, -1.5, 1.5, &mut SeedStream::new(6).rng());
    let g = generate_assignment(roster, 4, 3, 6).unwrap();
    let edges = g.num_edges();
    let graphs = vec![g];
    let mut details = Vec::new();
    let mut ok = edges <= 12;
    for rule in both_rules() {
        let exact = decompose_error_exact(&rule, &graphs, &u).map_err(|e| e.to_string())?;
        let mc = decompose_error(&rule, &graphs, &u, 1000, 7).map_err(|e| e.to_string())?;
        let z = [
            (mc.error - exact.error).abs() / mc.error_se,
            (mc.bias - exact.bias).abs() / mc.bias_se,
            (mc.variance - exact.variance).abs() / mc.variance_se,
        ];
        let zmax = z.iter().cloned().fold(0.0, f64::max);
        ok &= exact.identity_residual().abs() <= 1e-12 && mc.identity_residual().abs() <= 1e-12 && zmax <= 4.0;
        details.push(format!(
            "{}: exact residual {:.1e}, MC residual {:.1e}, MC vs exact {:.2} SE",
            rule.name(),
            exact.identity_residual().abs(),
            mc.identity_residual().abs(),
            zmax
        ));
    }
    check(ok, format!("{edges} edges; {}", details.join("; ")))
}

fn error_bound() -> Outcome {
    let roster = Arc::new(Roster::numbered(10, 10).unwrap());
    let u = uniform_merits(10, 10, -1.0, 1.0, &mut SeedStream::new(8).rng());
    let g = generate_assignment(roster, 10, 6, 8).unwrap();
    let c = bound_compliance(&g, &u, 100, 100_000, 8, opts()).map_err(|e| e.to_string())?;
    check(
        c.checked == 100 && c.holds(),
        format!(
            "{} strongly connected exams ({} drawn), {} violations, max excess {:.2e}",
            c.checked,
            c.attempts,
            c.violations.len(),
            c.max_excess
        ),
    )
}

fn consistency() -> Outcome {
    let roster = Arc::new(Roster::numbered(100, 100).unwrap());
    let u = uniform_merits(100, 100, -1.0, 1.0, &mut SeedStream::new(9).rng());
    let mut medians = Vec::new();
    for d in [10, 20, 40] {
        let (mut e, attempts) =
            consistency_errors(&roster, &u, 100, d, 20, 5000, 9 + d as u64, opts()).map_err(|e| e.to_string())?;
        if e.len() < 20 {
            return Err(format!(
                "only {} strongly connected exams at d={d} in {attempts} draws",
                e.len()
            ));
        }
        e.sort_by(f64::total_cmp);
        medians.push(0.5 * (e[9] + e[10]));
    }
    check(
        medians.windows(2).all(|w| w[0] > w[1]),
        format!(
            "median ‖u* - u‖∞ at d = 10, 20, 40: {:.3}, {:.3}, {:.3}",
            medians[0], medians[1], medians[2]
        ),
    )
}

fn reference_range_merits(seed: u64) -> (Arc<Roster>, MeritVector) {
    let mut rng = SeedStream::new(seed).rng();
    let a: Vec<f64> = (0..35)
        .map(|_| rng.random_range(REFERENCE_ABILITY_RANGE.0..REFERENCE_ABILITY_RANGE.1))
        .collect();
    let b: Vec<f64> = (0..22)
        .map(|_| rng.random_range(REFERENCE_DIFFICULTY_RANGE.0..REFERENCE_DIFFICULTY_RANGE.1))
        .collect();
    (
        Arc::new(Roster::numbered(35, 22).unwrap()),
        MeritVector::from_parts(&a, &b).unwrap(),
    )
}

fn bias_ratio() -> Outcome {
    let (roster, u) = reference_range_merits(10);
    let rules = both_rules();
    let settings = SweepSettings {
        graphs: 100,
        replications: 200,
        seed: 10,
    };
    let sweep = sweep_degree(&as_dyn(&rules), &roster, &u, 22, &[10], settings).map_err(|e| e.to_string())?;
    let p = &sweep.points[0];
    let (o, a) = (p.rule("ours").unwrap(), p.rule("avg").unwrap());
    check(
        o.max_bias <= 0.1 * a.max_bias,
        format!(
            "expected max bias ours {:.2e} ± {:.1e}, avg {:.2e} ± {:.1e}, ratio {:.3}",
            o.max_bias,
            o.max_bias_se,
            a.max_bias,
            a.max_bias_se,
            o.max_bias / a.max_bias
        ),
    )
}

fn constant_merits() -> Outcome {
    let roster = Arc::new(Roster::numbered(35, 22).unwrap());
    let u = MeritVector::constant(&roster, 0.0);
    let rules = both_rules();
    let settings = SweepSettings {
        graphs: 100,
        replications: 200,
        seed: 11,
    };
    let sweep = sweep_degree(&as_dyn(&rules), &roster, &u, 22, &[10], settings).map_err(|e| e.to_string())?;
    let p = &sweep.points[0];
    let graphs: Vec<TaskAssignmentGraph> = (0..100)
        .map(|k| generate_assignment(roster.clone(), 22, 10, 1000 + k).unwrap())
        .collect();
    let vo = decompose_error(&rules[0], &graphs, &u, 200, 12)
        .map_err(|e| e.to_string())?
        .variance;
    let va = decompose_error(&rules[1], &graphs, &u, 200, 12)
        .map_err(|e| e.to_string())?
        .variance;
    let (bo, ba) = (p.rule("ours").unwrap().avg_bias, p.rule("avg").unwrap().avg_bias);
    let gap = (vo - va).abs() / va;
    check(
        bo <= 1e-3 && ba <= 1e-3 && gap <= 0.10,
        format!(
            "avg bias ours {bo:.2e}, avg {ba:.2e}; variance ours {vo:.5}, avg {va:.5}, gap {:.1}%",
            100.0 * gap
        ),
    )
}

fn cross_validation() -> Outcome {
    let rules = both_rules();
    let cv = simulated_cross_validate(&range_prior(), 35, 22, &[10, 15, 20, 22], 200, &as_dyn(&rules), 13)
        .map_err(|e| e.to_string())?;
    let mut ok = true;
    let mut parts = Vec::new();
    for p in &cv.points {
        let (o, a) = (p.mse("ours").unwrap(), p.mse("avg").unwrap());
        ok &= if p.d2 == 22 { o == 0.0 && a == 0.0 } else { o < a };
        parts.push(format!("d2={}: {o:.2e} vs {a:.2e}", p.d2));
    }
    check(ok, format!("MSE ours vs avg: {}", parts.join(", ")))
}

fn design_endpoints() -> Outcome {
    let mut rng = SeedStream::new(14).rng();
    let abilities: Vec<f64> = (0..5)
        .map(|_| rng.random_range(REFERENCE_ABILITY_RANGE.0..REFERENCE_ABILITY_RANGE.1))
        .collect();
    let rules = both_rules();
    let settings = SweepSettings {
        graphs: 100,
        replications: 100,
        seed: 14,
    };
    let sweep = sweep_question_sample_size(
        &as_dyn(&rules),
        &abilities,
        &DifficultySampler::default(),
        &[5, 250],
        5,
        settings,
        BenchmarkScope::Population,
    )
    .map_err(|e| e.to_string())?;
    let (lo, hi) = (&sweep.points[0], &sweep.points[1]);
    let (o5, a5) = (lo.rule("ours").unwrap(), lo.rule("avg").unwrap());
    let gap5 = (o5.max_bias - a5.max_bias).abs().max((o5.avg_bias - a5.avg_bias).abs());
    let (o, a) = (hi.rule("ours").unwrap(), hi.rule("avg").unwrap());
    let gap = (o.max_bias - a.max_bias).abs();
    let noise = 4.0 * (o.max_bias_se.powi(2) + a.max_bias_se.powi(2)).sqrt();
    check(
        gap5 <= 1e-12 && gap <= noise,
        format!("m=5 gap {gap5:.1e}; m=250 gap {gap:.2e} vs 4 SE {noise:.2e}"),
    )
}

fn run_cli(args: &[&str], cwd: &Path) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_fairgrade"))
        .args(args)
        .current_dir(cwd)
        .env_remove("FAIRGRADE_OUT_DIR")
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr).trim()))
    }
}

fn dir_bytes(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (PathBuf::from(p.file_name().unwrap()), std::fs::read(&p).unwrap())
        })
        .collect();
    v.sort();
    v
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dir = tmp.path();
    std::fs::write(
        dir.join("exam.csv"),
        "student,question,correct\nS1,Q1,0\nS1,Q2,1\nS1,Q3,1\nS2,Q1,1\nS2,Q2,0\n",
    )
    .unwrap();
    std::fs::write(
        dir.join("answers.csv"),
        "student,Q1,Q2,Q3,Q4\nA,1,1,0,1\nB,0,0,0,1\nC,1,1,1,1\nD,0,1,0,1\n",
    )
    .unwrap();
    let sim = [
        "--seed",
        "7",
        "--students",
        "12",
        "--questions",
        "10",
        "--graphs",
        "8",
        "--reps",
        "20",
    ];
    let runs: Vec<(&str, Vec<&str>)> = vec![
        (
            "grade",
            vec![
                "--input", "exam.csv", "--rule", "ours", "--rule", "avg", "--rule", "map",
            ],
        ),
        ("fit", vec!["--input", "exam.csv"]),
        ("simulate-bias", [&["--d", "4"][..], &sim].concat()),
        ("sweep-degree", [&["--d", "1..10"][..], &sim].concat()),
        ("sweep-bank", [&["--m", "5,8,20", "--d", "5"][..], &sim].concat()),
        (
            "cv",
            vec![
                "--input",
                "answers.csv",
                "--seed",
                "7",
                "--d1",
                "3,4",
                "--d2",
                "1..4",
                "--reps",
                "20",
            ],
        ),
        ("cv-sim", [&["--d2", "2..10"][..], &sim].concat()),
        ("verify", vec!["--seed", "7", "--instances", "10"]),
    ];
    for (cmd, args) in &runs {
        let mut outputs = Vec::new();
        for threads in ["1", "2", "8"] {
            let out = format!("{cmd}-{threads}");
            let mut full = vec!["--threads", threads, cmd, "--out", out.as_str()];
            full.extend(args.iter());
            run_cli(&full, dir)?;
            outputs.push(dir_bytes(&dir.join(&out)));
        }
        if outputs.iter().any(|o| o != &outputs[0]) {
            return Err(format!("{cmd} output differs across thread counts"));
        }
    }
    Ok(format!(
        "{} subcommands byte-identical at 1, 2 and 8 threads",
        runs.len()
    ))
}

fn main() {
    let criteria: [Criterion; 13] = [
        ("MLE matches brute-force maximisation", mle_oracle, 10),
        ("first-order residual", first_order_residual, 60),
        ("strong connectivity matches reachability oracle", condition_a, 5),
        ("equivalence with averaging", equivalence_theorems, 10),
        ("ex-ante fairness of averaging", ex_ante_fairness, 60),
        ("bias-variance identity", decomposition_identity, 60),
        ("error-bound compliance", error_bound, 60),
        ("consistency trend", consistency, 120),
        ("bias ratio at realistic scale", bias_ratio, 300),
        ("all-the-same merits", constant_merits, 300),
        ("cross-validation endpoints", cross_validation, 300),
        ("exam-design sweep endpoints", design_endpoints, 300),
        ("determinism across thread counts", determinism, 300),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (k, (name, f, limit)) in criteria.iter().enumerate() {
        let id = k + 1;
        if !filter.is_empty() && !filter.iter().any(|a| a == &id.to_string()) {
            continue;
        }
        let start = Instant::now();
        let result = f();
        let elapsed = start.elapsed();
        let (status, detail) = match result {
            Ok(d) if elapsed <= Duration::from_secs(*limit) => ("PASS", d),
            Ok(d) => ("FAIL", format!("{d}; took longer than {limit} s")),
            Err(d) => ("FAIL", d),
        };
        failed += (status == "FAIL") as usize;
        println!("{status} {id:>2} {name}: {detail} [{:.1} s]", elapsed.as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
