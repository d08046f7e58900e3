//! Command-line pipelines.
//!
//! Every subcommand reads a [`RunConfig`], assembled from an optional TOML
//! file (`--config`) overridden by flags, and writes CSV/JSON reports plus a
//! `manifest.json` into the output directory. The manifest echoes the
//! resolved configuration, so `--config <dir>/manifest.json` replays the run.
//!
//! Output directory: `--out`, else `out-dir` in the config file, else the
//! `FAIRGRADE_OUT_DIR` environment variable, else `fairgrade-out`.
//!
//! Exit status: 0 success, 1 a `verify` check failed, 2 invalid
//! configuration, 3 unreadable or malformed data, 4 numeric failure.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grading::{predict_matrix, GradeVector, GradingRule, Rule};
use crate::graph::{
    generate_assignment, is_strongly_connected, strongly_connected_components, Roster, TaskAssignmentGraph,
};
use crate::io::{self, ExamFormat};
use crate::model::{map_fit, merit_span, mle_fit, FitOptions, MeritVector, PriorSpec};
use crate::rng::SeedStream;
use crate::simulation::{
    self, bound_compliance, cross_validate_grid, decompose_error, equivalence_gap, estimate_ex_post_bias_many,
    simulated_cross_validate, sweep_degree, sweep_question_sample_size, verify_ex_ante_fairness, BenchmarkScope,
    DifficultySampler, EquivalenceFamily, SweepSettings, REFERENCE_ABILITY_RANGE, REFERENCE_DIFFICULTY_RANGE,
};

pub const OUT_DIR_ENV: &str = "FAIRGRADE_OUT_DIR";
const DEFAULT_OUT_DIR: &str = "fairgrade-out";

#[derive(Debug, Parser)]
#[command(name = "fairgrade", version, about = "Fair grading for randomized exams")]
pub struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Grade an exam with one or more rules.
    Grade(Flags),
    /// Fit merits per strongly connected component (or MAP over all).
    Fit(Flags),
    /// Ex-post bias per student on one random assignment, plus a
    /// bias-variance decomposition over several.
    SimulateBias(Flags),
    /// Expected ex-post bias across degree constraints.
    SweepDegree(Flags),
    /// Expected ex-post bias across question sample sizes.
    SweepBank(Flags),
    /// Cross-validation on a complete answer matrix.
    Cv(Flags),
    /// Cross-validation on synthetic complete exams.
    CvSim(Flags),
    /// Exact and randomized checks of the grading theorems.
    Verify(Flags),
}

impl Command {
    pub fn name(&self) -> CommandName {
        match self {
            Command::Grade(_) => CommandName::Grade,
            Command::Fit(_) => CommandName::Fit,
            Command::SimulateBias(_) => CommandName::SimulateBias,
            Command::SweepDegree(_) => CommandName::SweepDegree,
            Command::SweepBank(_) => CommandName::SweepBank,
            Command::Cv(_) => CommandName::Cv,
            Command::CvSim(_) => CommandName::CvSim,
            Command::Verify(_) => CommandName::Verify,
        }
    }

    pub fn flags(&self) -> &Flags {
        match self {
            Command::Grade(f)
            | Command::Fit(f)
            | Command::SimulateBias(f)
            | Command::SweepDegree(f)
            | Command::SweepBank(f)
            | Command::Cv(f)
            | Command::CvSim(f)
            | Command::Verify(f) => f,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandName {
    Grade,
    Fit,
    SimulateBias,
    SweepDegree,
    SweepBank,
    Cv,
    CvSim,
    Verify,
}

impl CommandName {
    fn needs_seed(self) -> bool {
        !matches!(self, CommandName::Grade | CommandName::Fit)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum RuleName {
    Ours,
    Avg,
    Map,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FitMethod {
    Mle,
    Map,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    /// Uniform over `difficulty-range`.
    Uniform,
    /// Interpolated ECDF of the question merits in `merits`.
    Empirical,
}

/// Sorted, de-duplicated list of counts. Parses `5`, `1,3,8`, `1..22`
/// (inclusive) and mixtures such as `1..5,10,20`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(into = "Vec<usize>")]
pub struct ValueList(pub Vec<usize>);

impl From<ValueList> for Vec<usize> {
    fn from(v: ValueList) -> Self {
        v.0
    }
}

impl FromStr for ValueList {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}"));
            match part.split_once("..") {
                Some((lo, hi)) => {
                    let (lo, hi) = (parse(lo)?, parse(hi.trim_start_matches('='))?);
                    if lo > hi {
                        return Err(format!("empty range {part}"));
                    }
                    out.extend(lo..=hi);
                }
                None => out.push(parse(part)?),
            }
        }
        if out.is_empty() {
            return Err("empty list".into());
        }
        out.sort_unstable();
        out.dedup();
        Ok(ValueList(out))
    }
}

impl fmt::Display for ValueList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(usize::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

impl<'de> Deserialize<'de> for ValueList {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            One(usize),
            Many(Vec<usize>),
            Text(String),
        }
        let text = match Raw::deserialize(d)? {
            Raw::One(x) => x.to_string(),
            Raw::Many(v) => v.iter().map(usize::to_string).collect::<Vec<_>>().join(","),
            Raw::Text(s) => s,
        };
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Flags shared by every subcommand; each overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// TOML config file, or a previous run's manifest.json.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Exam or answer-matrix file.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<ExamFormat>,
    /// Grading rule; repeat for several.
    #[arg(long = "rule", value_enum)]
    pub rules: Vec<RuleName>,
    #[arg(long, value_enum)]
    pub method: Option<FitMethod>,
    /// Questions drawn per exam (list for sweep-bank).
    #[arg(long)]
    pub m: Option<ValueList>,
    /// Questions per student (list for sweep-degree).
    #[arg(long)]
    pub d: Option<ValueList>,
    /// Student sample sizes for cross-validation.
    #[arg(long)]
    pub d1: Option<ValueList>,
    /// Questions per sampled student for cross-validation.
    #[arg(long)]
    pub d2: Option<ValueList>,
    /// Assignment graphs per parameter value.
    #[arg(long)]
    pub graphs: Option<usize>,
    /// Exam samples per graph, or cross-validation repetitions.
    #[arg(long = "reps")]
    pub replications: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Output directory.
    #[arg(long = "out")]
    pub out_dir: Option<PathBuf>,
    /// Merit table `vertex,kind,merit`; otherwise merits are drawn.
    #[arg(long)]
    pub merits: Option<PathBuf>,
    #[arg(long)]
    pub students: Option<usize>,
    #[arg(long)]
    pub questions: Option<usize>,
    /// Give every student and question merit 0.
    #[arg(long)]
    pub constant_merits: bool,
    #[arg(long, value_enum)]
    pub benchmark: Option<BenchmarkScopeArg>,
    #[arg(long, value_enum)]
    pub sampler: Option<SamplerKind>,
    /// Random instances per family for verify.
    #[arg(long)]
    pub instances: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BenchmarkScopeArg {
    Population,
    RealizedBank,
}

impl From<BenchmarkScopeArg> for BenchmarkScope {
    fn from(b: BenchmarkScopeArg) -> Self {
        match b {
            BenchmarkScopeArg::Population => BenchmarkScope::Population,
            BenchmarkScopeArg::RealizedBank => BenchmarkScope::RealizedBank,
        }
    }
}

/// Declarative run configuration. Every key is optional in the file; the
/// resolved form written to the manifest has all defaults filled in.
///
/// ```toml
/// command = "sweep-degree"
/// seed = 7
/// d = "1..22"
/// graphs = 100
/// replications = 100
/// rules = ["ours", "avg"]
/// students = 35
/// questions = 22
/// ```
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<CommandName>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<ExamFormat>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rules: Option<Vec<RuleName>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<FitMethod>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<ValueList>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<ValueList>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d1: Option<ValueList>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d2: Option<ValueList>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub graphs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replications: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub merits: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub students: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub questions: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constant_merits: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ability_range: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub difficulty_range: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub benchmark: Option<BenchmarkScope>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sampler: Option<SamplerKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prior: Option<PriorSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instances: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    tool: String,
    version: String,
    command: CommandName,
    seed: Option<u64>,
    config: RunConfig,
    files: Vec<String>,
}

impl RunConfig {
    /// Reads a TOML config, or the `config` of a JSON manifest.
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e == "json") {
            let manifest: Manifest =
                serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            Ok(manifest.config)
        } else {
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
        }
    }

    /// `self` with every value set in `flags` replaced.
    pub fn with_flags(mut self, flags: &Flags) -> Self {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if flags.$field.is_some() { self.$field = flags.$field.clone(); })*
            };
        }
        take!(
            input,
            format,
            method,
            m,
            d,
            d1,
            d2,
            graphs,
            replications,
            seed,
            tol,
            max_iter,
            out_dir,
            merits,
            students,
            questions,
            instances
        );
        if !flags.rules.is_empty() {
            self.rules = Some(flags.rules.clone());
        }
        if flags.constant_merits {
            self.constant_merits = Some(true);
        }
        if let Some(b) = flags.benchmark {
            self.benchmark = Some(b.into());
        }
        if let Some(s) = flags.sampler {
            self.sampler = Some(s);
        }
        self
    }

    fn fit_options(&self) -> Result<FitOptions> {
        let defaults = FitOptions::default();
        let opts = FitOptions {
            tol: self.tol.unwrap_or(defaults.tol),
            max_iter: self.max_iter.unwrap_or(defaults.max_iter),
        };
        opts.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(opts)
    }

    fn seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::Config("a seed is required (--seed)".into()))
    }

    fn input(&self) -> Result<&Path> {
        let path = self
            .input
            .as_deref()
            .ok_or_else(|| Error::Config("an input file is required (--input)".into()))?;
        if !path.exists() {
            return Err(Error::Config(format!("input file {} does not exist", path.display())));
        }
        Ok(path)
    }

    fn rules(&self, default: &[RuleName]) -> Vec<RuleName> {
        self.rules.clone().unwrap_or_else(|| default.to_vec())
    }

    fn prior(&self) -> Result<PriorSpec> {
        let prior = self.prior.unwrap_or_else(simulation::range_prior);
        prior.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(prior)
    }

    fn count(value: Option<usize>, default: usize, name: &str) -> Result<usize> {
        match value.unwrap_or(default) {
            0 => Err(Error::Config(format!("{name} must be at least 1"))),
            x => Ok(x),
        }
    }

    fn single(list: &Option<ValueList>, name: &str) -> Result<Option<usize>> {
        match list {
            None => Ok(None),
            Some(ValueList(v)) if v.len() == 1 => Ok(Some(v[0])),
            Some(_) => Err(Error::Config(format!("{name} takes a single value for this command"))),
        }
    }

    fn out_dir(&self) -> PathBuf {
        self.out_dir
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }
}

fn build_rules(names: &[RuleName], fit: FitOptions, prior: PriorSpec) -> Vec<Rule> {
    names
        .iter()
        .map(|r| match r {
            RuleName::Ours => Rule::Ours { fit },
            RuleName::Avg => Rule::Avg,
            RuleName::Map => Rule::Map { prior, fit },
        })
        .collect()
}

fn as_dyn(rules: &[Rule]) -> Vec<&dyn GradingRule> {
    rules.iter().map(|r| r as &dyn GradingRule).collect()
}

/// Merits from `merits`, or drawn uniformly from the configured ranges.
fn merit_source(cfg: &mut RunConfig, stream: SeedStream) -> Result<(Arc<Roster>, MeritVector)> {
    if let Some(path) = &cfg.merits {
        if !path.exists() {
            return Err(Error::Config(format!("merit file {} does not exist", path.display())));
        }
        return io::load_merit_table(path);
    }
    let n = RunConfig::count(cfg.students, 35, "students")?;
    let q = RunConfig::count(cfg.questions, 22, "questions")?;
    cfg.students = Some(n);
    cfg.questions = Some(q);
    let roster = Arc::new(Roster::numbered(n, q)?);
    if cfg.constant_merits == Some(true) {
        return Ok((roster.clone(), MeritVector::constant(&roster, 0.0)));
    }
    let ar = *cfg.ability_range.get_or_insert(REFERENCE_ABILITY_RANGE);
    let dr = *cfg.difficulty_range.get_or_insert(REFERENCE_DIFFICULTY_RANGE);
    let abilities = draw_uniform(n, ar, &mut stream.rng())?;
    let difficulties = draw_uniform(q, dr, &mut stream.child(1).rng())?;
    Ok((roster, MeritVector::from_parts(&abilities, &difficulties)?))
}

fn draw_uniform<R: Rng + ?Sized>(count: usize, (lo, hi): (f64, f64), rng: &mut R) -> Result<Vec<f64>> {
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(Error::Config(format!("invalid range ({lo}, {hi})")));
    }
    Ok((0..count).map(|_| lo + (hi - lo) * rng.random::<f64>()).collect())
}

/// Files written by a run and whether its checks passed.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub passed: bool,
}

struct Output {
    dir: PathBuf,
    files: Vec<String>,
}

impl Output {
    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }
}

/// Runs one subcommand with a fully merged configuration.
pub fn run(command: CommandName, mut cfg: RunConfig) -> Result<RunOutcome> {
    cfg.command = Some(command);
    if command.needs_seed() {
        cfg.seed()?;
    }
    let dir = cfg.out_dir();
    std::fs::create_dir_all(&dir)?;
    let mut out = Output { dir, files: Vec::new() };
    let passed = match command {
        CommandName::Grade => run_grade(&mut cfg, &mut out)?,
        CommandName::Fit => run_fit(&mut cfg, &mut out)?,
        CommandName::SimulateBias => run_simulate_bias(&mut cfg, &mut out)?,
        CommandName::SweepDegree => run_sweep_degree(&mut cfg, &mut out)?,
        CommandName::SweepBank => run_sweep_bank(&mut cfg, &mut out)?,
        CommandName::Cv => run_cv(&mut cfg, &mut out)?,
        CommandName::CvSim => run_cv_sim(&mut cfg, &mut out)?,
        CommandName::Verify => run_verify(&mut cfg, &mut out)?,
    };

    let mut echo = cfg.clone();
    echo.out_dir = None;
    let manifest_path = out.path("manifest.json");
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command,
        seed: cfg.seed,
        config: echo,
        files: out.files.clone(),
    };
    io::save_json(&manifest, &manifest_path)?;
    Ok(RunOutcome {
        files: out.files.iter().map(|f| out.dir.join(f)).collect(),
        out_dir: out.dir,
        passed,
    })
}

#[derive(Serialize)]
struct GradeSummary<'a> {
    students: usize,
    questions: usize,
    edges: usize,
    strongly_connected: bool,
    components: usize,
    mean_grade: Vec<(&'a str, f64)>,
}

fn run_grade(cfg: &mut RunConfig, out: &mut Output) -> Result<bool> {
    let fit = cfg.fit_options()?;
    let names = cfg.rules(&[RuleName::Ours]);
    cfg.rules = Some(names.clone());
    let prior = if names.contains(&RuleName::Map) {
        cfg.prior()?
    } else {
        PriorSpec::standard()
    };
    let exam = io::load_exam(cfg.input()?, cfg.format)?;
    let rules = build_rules(&names, fit, prior);

    let grades = rules
        .iter()
        .map(|r| r.grade(&exam))
        .collect::<Result<Vec<GradeVector>>>()?;
    io::save_grades(&grades.iter().collect::<Vec<_>>(), &out.path("grades.csv"))?;
    if names.contains(&RuleName::Ours) {
        let h = predict_matrix(&exam, fit)?;
        let values = std::fs::File::create(out.path("predictions.csv"))?;
        let tags = std::fs::File::create(out.path("cases.csv"))?;
        io::write_prediction_matrix(&h, values, tags)?;
    }
    let roster = exam.roster();
    let summary = GradeSummary {
        students: roster.num_students(),
        questions: roster.num_questions(),
        edges: exam.assignment().num_edges(),
        strongly_connected: is_strongly_connected(&exam),
        components: strongly_connected_components(&exam).num_components(),
        mean_grade: grades
            .iter()
            .map(|g| (g.rule(), simulation::mean(g.grades())))
            .collect(),
    };
    io::save_json(&summary, &out.path("summary.json"))?;
    Ok(true)
}

#[derive(Serialize)]
struct ComponentFitSummary {
    component: usize,
    size: usize,
    iterations: usize,
    residual: f64,
    converged: bool,
    span: f64,
}

fn run_fit(cfg: &mut RunConfig, out: &mut Output) -> Result<bool> {
    let fit = cfg.fit_options()?;
    let method = *cfg.method.get_or_insert(FitMethod::Mle);
    let exam = io::load_exam(cfg.input()?, cfg.format)?;
    let roster = exam.roster().clone();

    match method {
        FitMethod::Map => {
            let prior = cfg.prior()?;
            cfg.prior = Some(prior);
            let report = map_fit(&exam, &prior, fit)?;
            io::save_merits(&report.merits, &roster, &out.path("merits.csv"))?;
            let summary = ComponentFitSummary {
                component: 0,
                size: roster.num_vertices(),
                iterations: report.iterations,
                residual: report.residual,
                converged: report.converged,
                span: merit_span(&report.merits),
            };
            io::save_json(&[summary], &out.path("summary.json"))?;
        }
        FitMethod::Mle => {
            let structure = strongly_connected_components(&exam);
            let mut vertices = Vec::new();
            let mut values = Vec::new();
            let mut summaries = Vec::new();
            let mut membership = Vec::with_capacity(roster.num_vertices());
            for (id, members) in structure.components().iter().enumerate() {
                for &v in members {
                    membership.push((v, id));
                }
                if members.len() < 2 {
                    continue;
                }
                let report = mle_fit(&exam, members, fit).map_err(|e| Error::ComponentFit {
                    component: id,
                    source: Box::new(e),
                })?;
                summaries.push(ComponentFitSummary {
                    component: id,
                    size: members.len(),
                    iterations: report.iterations,
                    residual: report.residual,
                    converged: report.converged,
                    span: merit_span(&report.merits),
                });
                for (v, x) in report.merits.iter() {
                    vertices.push(v);
                    values.push(x);
                }
            }
            let mut order: Vec<usize> = (0..vertices.len()).collect();
            order.sort_by_key(|&k| vertices[k]);
            let merits = MeritVector::new(
                order.iter().map(|&k| vertices[k]).collect(),
                order.iter().map(|&k| values[k]).collect(),
                crate::model::Normalization::Unnormalized,
            )?;
            io::save_merits(&merits, &roster, &out.path("merits.csv"))?;

            membership.sort_unstable();
            let mut w = csv::Writer::from_path(out.path("components.csv"))?;
            w.write_record(["vertex", "kind", "component"])?;
            for (v, id) in membership {
                let kind = if v < roster.num_students() {
                    "student"
                } else {
                    "question"
                };
                w.write_record([roster.vertex_id(v), kind, &id.to_string()])?;
            }
            w.flush()?;
            io::save_json(&summaries, &out.path("summary.json"))?;
        }
    }
    Ok(true)
}

fn run_simulate_bias(cfg: &mut RunConfig, out: &mut Output) -> Result<bool> {
    let fit = cfg.fit_options()?;
    let stream = SeedStream::new(cfg.seed()?);
    let (roster, u) = merit_source(cfg, stream.child(100))?;
    let q = roster.num_questions();
    let m = RunConfig::single(&cfg.m, "m")?.unwrap_or(q);
    let d = RunConfig::single(&cfg.d, "d")?.ok_or_else(|| Error::Config("d is required (--d)".into()))?;
    let reps = RunConfig::count(cfg.replications, 100, "replications")?;
    let graphs = cfg.graphs.unwrap_or(10);
    let names = cfg.rules(&[RuleName::Ours, RuleName::Avg]);
    let prior = cfg.prior()?;
    (cfg.m, cfg.d, cfg.replications, cfg.graphs) = (
        Some(ValueList(vec![m])),
        Some(ValueList(vec![d])),
        Some(reps),
        Some(graphs),
    );
    cfg.rules = Some(names.clone());
    if names.contains(&RuleName::Map) {
        cfg.prior = Some(prior);
    }
    let rules = build_rules(&names, fit, prior);
    let dyn_rules = as_dyn(&rules);

    let g = generate_assignment(roster.clone(), m, d, stream.child(0).master()).map_err(config_range)?;
    let reports = estimate_ex_post_bias_many(&dyn_rules, &g, &u, reps, stream.child(1))?;
    io::save_tidy(&io::bias_rows(&reports, &roster), &out.path("bias.csv"))?;

    let mut parts = Vec::new();
    if graphs > 0 {
        let sample: Vec<TaskAssignmentGraph> = (0..graphs)
            .map(|k| generate_assignment(roster.clone(), m, d, stream.child(2).child(k as u64).master()))
            .collect::<Result<_>>()?;
        for rule in &rules {
            let reps = reps.max(2);
            parts.push((
                rule.name().to_string(),
                decompose_error(rule, &sample, &u, reps, stream.child(3).master())?,
            ));
        }
        io::save_tidy(&io::decomposition_rows(&parts), &out.path("decomposition.csv"))?;
    }
    io::save_merits(&u, &roster, &out.path("merits.csv"))?;

    #[derive(Serialize)]
    struct Summary<'a> {
        bias: &'a [simulation::BiasReport],
        decomposition: &'a [(String, simulation::ErrorDecomposition)],
    }
    io::save_json(
        &Summary {
            bias: &reports,
            decomposition: &parts,
        },
        &out.path("summary.json"),
    )?;
    Ok(true)
}

/// Range errors in user-supplied sizes are configuration errors.
fn config_range(e: Error) -> Error {
    match e {
        Error::ParameterOutOfRange(msg) => Error::Config(msg),
        other => other,
    }
}

fn run_sweep_degree(cfg: &mut RunConfig, out: &mut Output) -> Result<bool> {
    let fit = cfg.fit_options()?;
    let stream = SeedStream::new(cfg.seed()?);
    let (roster, u) = merit_source(cfg, stream.child(100))?;
    let q = roster.num_questions();
    let m = RunConfig::single(&cfg.m, "m")?.unwrap_or(q);
    let ds = cfg.d.clone().unwrap_or_else(|| ValueList((1..=m).collect()));
    let settings = SweepSettings {
        graphs: RunConfig::count(cfg.graphs, 100, "graphs")?,
        replications: RunConfig::count(cfg.replications, 100, "replications")?,
        seed: stream.child(0).master(),
    };
    let names = cfg.rules(&[RuleName::Ours, RuleName::Avg]);
    let prior = cfg.prior()?;
    (cfg.m, cfg.d, cfg.graphs, cfg.replications) = (
        Some(ValueList(vec![m])),
        Some(ds.clone()),
        Some(settings.graphs),
        Some(settings.replications),
    );
    cfg.rules = Some(names.clone());
    let rules = build_rules(&names, fit, prior);

    let sweep = sweep_degree(&as_dyn(&rules), &roster, &u, m, &ds.0, settings).map_err(config_range)?;
    io::save_tidy(&io::sweep_rows(&sweep), &out.path("sweep.csv"))?;
    io::save_json(&sweep, &out.path("summary.json"))?;
    Ok(true)
}

fn run_sweep_bank(cfg: &mut RunConfig, out: &mut Output) -> Result<bool> {
    let fit = cfg.fit_options()?;
    let stream = SeedStream::new(cfg.seed()?);
    let kind = *cfg.sampler.get_or_insert(SamplerKind::Uniform);
    let (abilities, sampler) = match &cfg.merits {
        Some(_) => {
            let (roster, u) = merit_source(cfg, stream.child(100))?;
            let values = u.values();
            let n = roster.num_students();
            let sampler = match kind {
                SamplerKind::Empirical => DifficultySampler::empirical(values[n..].to_vec())?,
                SamplerKind::Uniform => {
                    let (lo, hi) = *cfg.difficulty_range.get_or_insert(REFERENCE_DIFFICULTY_RANGE);
                    DifficultySampler::uniform(lo, hi).map_err(config_range)?
                }
            };
            (values[..n].to_vec(), sampler)
        }
        None => {
            if kind == SamplerKind::Empirical {
                return Err(Error::Config(
                    "the empirical sampler needs a merit table (--merits)".into(),
                ));
            }
            let n = RunConfig::count(cfg.students, 5, "students")?;
            cfg.students = Some(n);
            let ar = *cfg.ability_range.get_or_insert(REFERENCE_ABILITY_RANGE);
            let (lo, hi) = *cfg.difficulty_range.get_or_insert(REFERENCE_DIFFICULTY_RANGE);
            let abilities = if cfg.constant_merits == Some(true) {
                vec![0.0; n]
            } else {
                draw_uniform(n, ar, &mut stream.child(100).rng())?
            };
            (abilities, DifficultySampler::uniform(lo, hi).map_err(config_range)?)
        }
    };
    let d = RunConfig::single(&cfg.d, "d")?.unwrap_or(5);
    let ms = cfg
        .m
        .clone()
        .unwrap_or_else(|| "5..15,20,30,50,100,250".parse().expect("valid default list"));
    let settings = SweepSettings {
        graphs: RunConfig::count(cfg.graphs, 100, "graphs")?,
        replications: RunConfig::count(cfg.replications, 100, "replications")?,
        seed: stream.child(0).master(),
    };
    let scope = *cfg.benchmark.get_or_insert(BenchmarkScope::Population);
    let names = cfg.rules(&[RuleName::Ours, RuleName::Avg]);
    let prior = cfg.prior()?;
    (cfg.m, cfg.d, cfg.graphs, cfg.replications) = (
        Some(ms.clone()),
        Some(ValueList(vec![d])),
        Some(settings.graphs),
        Some(settings.replications),
    );
    cfg.rules = Some(names.clone());
    let rules = build_rules(&names, fit, prior);

    let sweep = sweep_question_sample_size(&as_dyn(&rules), &abilities, &sampler, &ms.0, d, settings, scope)
        .map_err(config_range)?;
    io::save_tidy(&io::sweep_rows(&sweep), &out.path("sweep.csv"))?;
    io::save_json(&sweep, &out.path("summary.json"))?;
    Ok(true)
}

fn run_cv(cfg: &mut RunConfig, out: &mut Output) -> Result<bool> {
    let fit = cfg.fit_options()?;
    let seed = SeedStream::new(cfg.seed()?).child(0).master();
    let answers = io::load_answers(cfg.input()?)?;
    let (n, q) = (answers.roster().num_students(), answers.roster().num_questions());
    let d1 = cfg.d1.clone().unwrap_or(ValueList(vec![n]));
    let d2 = cfg.d2.clone().unwrap_or_else(|| ValueList((1..=q).collect()));
    let reps = RunConfig::count(cfg.replications, 100, "replications")?;
    let names = cfg.rules(&[RuleName::Ours, RuleName::Avg]);
    let prior = cfg.prior()?;
    (cfg.d1, cfg.d2, cfg.replications) = (Some(d1.clone()), Some(d2.clone()), Some(reps));
    cfg.rules = Some(names.clone());
    let rules = build_rules(&names, fit, prior);

    let result = cross_validate_grid(&answers, &d1.0, &d2.0, reps, &as_dyn(&rules), seed)?;
    io::save_tidy(&io::cv_rows(&result), &out.path("cv.csv"))?;
    io::save_json(&result, &out.path("summary.json"))?;
    Ok(true)
}

fn run_cv_sim(cfg: &mut RunConfig, out: &mut Output) -> Result<bool> {
    let fit = cfg.fit_options()?;
    let seed = SeedStream::new(cfg.seed()?).child(0).master();
    let n = RunConfig::count(cfg.students, 35, "students")?;
    let q = RunConfig::count(cfg.questions, 22, "questions")?;
    let d2 = cfg.d2.clone().unwrap_or_else(|| ValueList((1..=q).collect()));
    let reps = RunConfig::count(cfg.replications, 100, "replications")?;
    let prior = cfg.prior()?;
    let names = cfg.rules(&[RuleName::Ours, RuleName::Avg]);
    (cfg.students, cfg.questions, cfg.d2, cfg.replications, cfg.prior) =
        (Some(n), Some(q), Some(d2.clone()), Some(reps), Some(prior));
    cfg.rules = Some(names.clone());
    let rules = build_rules(&names, fit, prior);

    let result = simulated_cross_validate(&prior, n, q, &d2.0, reps, &as_dyn(&rules), seed)?;
    io::save_tidy(&io::cv_rows(&result), &out.path("cv.csv"))?;
    io::save_json(&result, &out.path("summary.json"))?;
    Ok(true)
}

#[derive(Serialize)]
struct Check {
    name: String,
    passed: bool,
    detail: String,
}

fn run_verify(cfg: &mut RunConfig, out: &mut Output) -> Result<bool> {
    let fit = cfg.fit_options()?;
    let stream = SeedStream::new(cfg.seed()?);
    let instances = RunConfig::count(cfg.instances, 50, "instances")?;
    cfg.instances = Some(instances);
    let mut checks = Vec::new();

    let cases: [(usize, &[f64], &[f64]); 3] = [
        (2, &[0.5, -0.5], &[-1.0, 0.0, 1.0]),
        (1, &[0.2], &[-1.0, 0.5, 2.0]),
        (2, &[0.2], &[-1.0, 0.5, 2.0]),
    ];
    for (d, a, b) in cases {
        let (n, q) = (a.len(), b.len());
        let roster = Arc::new(Roster::numbered(n, q)?);
        let u = MeritVector::from_parts(a, b)?;
        let fair = verify_ex_ante_fairness(&Rule::Avg, &roster, q, d, &u)?;
        checks.push(Check {
            name: format!("ex-ante fairness of averaging, {n} students, {q} questions, d={d}"),
            passed: fair,
            detail: "exact enumeration of assignments and outcomes".into(),
        });
    }

    for (k, family) in EquivalenceFamily::ALL.into_iter().enumerate() {
        let gap = equivalence_gap(family, instances, stream.child(k as u64).master(), fit)?;
        checks.push(Check {
            name: format!("structural rule equals averaging on {family:?} instances"),
            passed: gap <= 1e-12,
            detail: format!("max |ours - avg| = {gap:e} over {instances} instances"),
        });
    }

    let roster = Arc::new(Roster::numbered(10, 10)?);
    let mut rng = stream.child(10).rng();
    // A moderate spread keeps strongly connected exams common.
    let a = draw_uniform(10, (-1.0, 1.0), &mut rng)?;
    let b = draw_uniform(10, (-1.0, 1.0), &mut rng)?;
    let u = MeritVector::from_parts(&a, &b)?;
    let g = generate_assignment(roster, 10, 6, stream.child(11).master())?;
    let bound = bound_compliance(&g, &u, 100, 100_000, stream.child(12).master(), fit)?;
    checks.push(Check {
        name: "error bound on strongly connected exams".into(),
        passed: bound.holds() && bound.checked == 100,
        detail: format!(
            "{} exams checked ({} drawn), {} violations, max excess {:e}",
            bound.checked,
            bound.attempts,
            bound.violations.len(),
            bound.max_excess
        ),
    });

    let passed = checks.iter().all(|c| c.passed);
    io::save_json(&checks, &out.path("verify.json"))?;
    Ok(passed)
}

/// Parses arguments, runs the command in a pool of `--threads` workers and
/// returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("{}", f.display());
            }
            if outcome.passed {
                0
            } else {
                eprintln!("fairgrade: some checks failed; see verify.json");
                1
            }
        }
        Err(e) => {
            eprintln!("fairgrade: {e}");
            e.exit_code()
        }
    }
}

/// Merges config file and flags and runs the command.
pub fn execute(cli: &Cli) -> Result<RunOutcome> {
    let flags = cli.command.flags();
    let base = match &flags.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(c) = base.command {
        if c != cli.command.name() {
            return Err(Error::Config(format!(
                "config file is for {c:?}, not {:?}",
                cli.command.name()
            )));
        }
    }
    let cfg = base.with_flags(flags);
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        pool = pool.num_threads(t);
    }
    let pool = pool.build().map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| run(cli.command.name(), cfg))
}
