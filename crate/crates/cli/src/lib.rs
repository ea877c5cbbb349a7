//! The `semisym` command line: graph generation, encoding, factoring,
//! verification, solving, statistics and benchmarks.

pub mod bench;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use semisym_core::{
    decode_and_validate, exhaustive_solve, factor_semi_symmetries, random_permutation,
    simulated_anneal, verify_equivalence, AnnealParams, Assignment, Graph, Penalty, Problem,
    ProblemKind, QuboMatrix, ReductionTrace, Solution, VariableMap, VerifyLimits, ZMode,
    DEFAULT_ANCILLA_CAP, DEFAULT_ENUMERATION_CAP,
};

use crate::bench::{run_benchmark, write_csv, BenchConfig};

#[derive(Debug, Parser)]
#[command(
    name = "semisym",
    version,
    about = "Factor semi-symmetries out of QUBO problems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a seeded Erdős–Rényi graph.
    GenGraph(GenGraphArgs),
    /// Encode a graph problem as a QUBO.
    Encode(EncodeArgs),
    /// Factor semi-symmetric pairs into ancillas.
    Reduce(ReduceArgs),
    /// Check a reduction exhaustively; exits nonzero when a required check fails.
    Verify(VerifyArgs),
    /// Minimize a QUBO.
    Solve(SolveArgs),
    /// Print size and gate-count statistics.
    Stats(StatsArgs),
    /// Run the benchmark sweep and write CSV.
    Bench(BenchArgs),
    /// Read an assignment back as a problem solution.
    Decode(DecodeArgs),
}

#[derive(Debug, Args)]
pub struct GenGraphArgs {
    #[arg(long)]
    pub vertices: usize,
    #[arg(long)]
    pub p_edge: f64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write a randomly relabelled copy, for isomorphism instances.
    #[arg(long)]
    pub permuted_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProblemArgs {
    #[arg(long)]
    pub problem: ProblemKind,
    #[arg(long)]
    pub graph: PathBuf,
    /// Second graph for isomorphism.
    #[arg(long)]
    pub graph2: Option<PathBuf>,
    /// Color count for coloring.
    #[arg(long)]
    pub colors: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Defaults to 3 for maxclique and the variable count plus one otherwise.
    #[arg(long)]
    pub penalty: Option<Penalty>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub map: Option<PathBuf>,
}

/// An ancilla budget: a count or `max`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget(pub usize);

impl FromStr for Budget {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "max" {
            return Ok(Budget(usize::MAX));
        }
        s.parse()
            .map(Budget)
            .map_err(|_| format!("expected a count or `max`, got `{s}`"))
    }
}

#[derive(Debug, Args)]
pub struct ReduceArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value = "max")]
    pub ancillas: Budget,
    /// `safe`, `tight` or a positive number.
    #[arg(long, default_value = "tight")]
    pub z: ZMode,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub trace: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Requirement {
    /// Valid energies, invalid non-decrease and the optimum.
    All,
    /// Valid energies and the optimum.
    Optimum,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub original: PathBuf,
    #[arg(long)]
    pub reduced: PathBuf,
    #[arg(long)]
    pub trace: PathBuf,
    #[arg(long, value_enum, default_value_t = Requirement::All)]
    pub require: Requirement,
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    pub max_original: usize,
    #[arg(long, default_value_t = DEFAULT_ANCILLA_CAP)]
    pub max_ancillas: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SolveMethod {
    Exhaustive,
    Sa,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = SolveMethod::Exhaustive)]
    pub method: SolveMethod,
    #[arg(long, default_value_t = 1000)]
    pub sweeps: usize,
    #[arg(long, default_value_t = 20)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Known optimum; annealing then reports its success fraction.
    #[arg(long, allow_hyphen_values = true)]
    pub reference: Option<String>,
    /// Write the best assignment here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Layer count used for the CNOT count.
    #[arg(long, default_value_t = 1)]
    pub p: u64,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub problem: ProblemKind,
    /// Vertex counts: `6..12` (inclusive) or `6,8,10`.
    #[arg(long, default_value = "6..12")]
    pub sizes: String,
    /// Seeds per size, starting at `--seed`.
    #[arg(long, default_value_t = 3)]
    pub seeds: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Comma-separated ancilla budgets; `max` means unlimited.
    #[arg(long, default_value = "0,5,10")]
    pub budgets: String,
    #[arg(long, default_value = "tight")]
    pub z: ZMode,
    #[arg(long, default_value_t = 0.5)]
    pub p_edge: f64,
    #[arg(long, default_value_t = 3)]
    pub colors: usize,
    #[arg(long)]
    pub penalty: Option<Penalty>,
    #[arg(long, default_value_t = 16)]
    pub verify_cap: usize,
    #[arg(long, default_value_t = 200)]
    pub sweeps: usize,
    /// 0 disables the annealing columns.
    #[arg(long, default_value_t = 20)]
    pub restarts: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Directory for each row's reduced matrix and trace.
    #[arg(long)]
    pub emit_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long)]
    pub map: PathBuf,
    /// Bit string over the problem variables; ancilla bits beyond them are ignored.
    #[arg(long)]
    pub assignment: String,
}

/// Outcome of a command that ran to completion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// A required check did not hold.
    CheckFailed,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn load_qubo(path: &Path) -> Result<QuboMatrix> {
    QuboMatrix::parse(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn load_graph(path: &Path) -> Result<Graph> {
    Graph::parse(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn load_problem(args: &ProblemArgs) -> Result<Problem> {
    let g = load_graph(&args.graph)?;
    let kind = args.problem;
    ensure!(
        args.graph2.is_none() || kind == ProblemKind::GraphIsomorphism,
        "--graph2 only applies to isomorphism"
    );
    ensure!(
        args.colors.is_none() || kind == ProblemKind::GraphColoring,
        "--colors only applies to coloring"
    );
    Ok(match kind {
        ProblemKind::MaxClique => Problem::MaxClique(g),
        ProblemKind::HamiltonCycles => Problem::HamiltonCycles(g),
        ProblemKind::GraphColoring => Problem::GraphColoring {
            graph: g,
            colors: args.colors.context("coloring needs --colors")?,
        },
        ProblemKind::GraphIsomorphism => Problem::GraphIsomorphism {
            g1: g,
            g2: load_graph(
                args.graph2
                    .as_deref()
                    .context("isomorphism needs --graph2")?,
            )?,
        },
    })
}

fn parse_sizes(s: &str) -> Result<Vec<usize>> {
    if let Some((a, b)) = s.split_once("..") {
        let (a, b): (usize, usize) = (a.trim().parse()?, b.trim().parse()?);
        ensure!(a <= b, "empty size range `{s}`");
        return Ok((a..=b).collect());
    }
    s.split(',')
        .map(|v| v.trim().parse().with_context(|| format!("bad size `{v}`")))
        .collect()
}

fn parse_budgets(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|v| {
            Budget::from_str(v.trim())
                .map(|b| b.0)
                .map_err(anyhow::Error::msg)
        })
        .collect()
}

fn format_option(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |f| format!("{f:.4}"))
}

/// Runs one command, writing human-readable output to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<Outcome> {
    match cli.command {
        Command::GenGraph(a) => {
            let g = Graph::erdos_renyi(a.vertices, a.p_edge, a.seed)?;
            write(&a.out, &g.to_text())?;
            if let Some(path) = &a.permuted_out {
                let perm = random_permutation(a.vertices, a.seed);
                write(path, &g.permute(&perm)?.to_text())?;
            }
            writeln!(
                out,
                "vertices: {}, edges: {}",
                g.num_vertices(),
                g.num_edges()
            )?;
        }
        Command::Encode(a) => {
            let problem = load_problem(&a.problem)?;
            let penalty = a.penalty.unwrap_or_else(|| problem.default_penalty());
            let enc = problem.encode(penalty)?;
            write(&a.out, &enc.qubo.to_text())?;
            if let Some(path) = &a.map {
                write(path, &enc.map.to_text())?;
            }
            writeln!(
                out,
                "variables: {}, couplings: {}, penalty: {}",
                enc.qubo.n(),
                enc.qubo.num_couplings(),
                penalty.value()
            )?;
        }
        Command::Reduce(a) => {
            let q = load_qubo(&a.input)?;
            let (qmod, trace) = factor_semi_symmetries(&q, a.ancillas.0, a.z)?;
            write(&a.out, &qmod.to_text())?;
            write(&a.trace, &trace.to_text())?;
            writeln!(
                out,
                "ancillas: {}, couplings: {} -> {}",
                trace.num_ancillas(),
                q.num_couplings(),
                qmod.num_couplings()
            )?;
        }
        Command::Verify(a) => {
            let q = load_qubo(&a.original)?;
            let qmod = load_qubo(&a.reduced)?;
            let trace = ReductionTrace::parse(&read(&a.trace)?)
                .with_context(|| format!("parsing {}", a.trace.display()))?;
            let replayed = trace.replay(&q)?;
            ensure!(
                replayed == qmod,
                "{} is not the result of applying {} to {}",
                a.reduced.display(),
                a.trace.display(),
                a.original.display()
            );
            let limits = VerifyLimits {
                max_original: a.max_original,
                max_ancillas: a.max_ancillas,
            };
            let rep = verify_equivalence(&q, &qmod, &trace, limits)?;
            write!(out, "{}", rep.render())?;
            let ok = match a.require {
                Requirement::All => rep.passed(),
                Requirement::Optimum => rep.valid_energy_preserved() && rep.optimum_preserved,
            };
            writeln!(out, "status: {}", if ok { "pass" } else { "fail" })?;
            if !ok {
                return Ok(Outcome::CheckFailed);
            }
        }
        Command::Solve(a) => {
            let q = load_qubo(&a.input)?;
            let reference = a
                .reference
                .as_deref()
                .map(semisym_core::parse_rational)
                .transpose()
                .map_err(anyhow::Error::msg)?;
            let res = match a.method {
                SolveMethod::Exhaustive => exhaustive_solve(&q, DEFAULT_ENUMERATION_CAP)?,
                SolveMethod::Sa => {
                    ensure!(a.sweeps >= 1, "--sweeps must be at least 1");
                    let params = AnnealParams {
                        sweeps: a.sweeps,
                        restarts: a.restarts,
                        seed: a.seed,
                        schedule: None,
                    };
                    simulated_anneal(&q, params, reference)?
                }
            };
            writeln!(out, "method: {}", res.method)?;
            writeln!(out, "energy: {}", res.best_energy)?;
            writeln!(out, "assignment: {}", res.best_assignment)?;
            writeln!(out, "samples: {}", res.samples)?;
            if reference.is_some() && res.success_fraction.is_some() {
                writeln!(
                    out,
                    "successFraction: {}",
                    format_option(res.success_fraction)
                )?;
            }
            if let Some(path) = &a.out {
                write(path, &format!("{}\n", res.best_assignment))?;
            }
        }
        Command::Stats(a) => {
            let s = load_qubo(&a.input)?.stats(a.p);
            writeln!(
                out,
                "variables: {}, couplings: {}, cnot: {}, density: {:.6}, zz_layers: {}",
                s.num_variables, s.num_couplings, s.cnot_count, s.density, s.zz_layer_count
            )?;
        }
        Command::Bench(a) => {
            let defaults = BenchConfig::default();
            let cfg = BenchConfig {
                problem: a.problem,
                sizes: parse_sizes(&a.sizes)?,
                seeds: (a.seed..a.seed + a.seeds).collect(),
                budgets: parse_budgets(&a.budgets)?,
                z_mode: a.z,
                p_edge: a.p_edge,
                colors: a.colors,
                penalty: a.penalty,
                verify_cap: a.verify_cap,
                anneal: AnnealParams {
                    sweeps: a.sweeps,
                    restarts: a.restarts,
                    ..defaults.anneal
                },
                emit_dir: a.emit_dir,
            };
            let rows = run_benchmark(&cfg)?;
            let mut buf = Vec::new();
            write_csv(&rows, &mut buf)?;
            fs::write(&a.out, buf).with_context(|| format!("writing {}", a.out.display()))?;
            let failed = rows
                .iter()
                .filter(|r| r.verify_status == bench::VerifyStatus::Failed)
                .count();
            writeln!(out, "rows: {}, failed verifications: {failed}", rows.len())?;
            if failed > 0 {
                return Ok(Outcome::CheckFailed);
            }
        }
        Command::Decode(a) => {
            let problem = load_problem(&a.problem)?;
            let map = VariableMap::parse(&read(&a.map)?)
                .with_context(|| format!("parsing {}", a.map.display()))?;
            let x: Assignment = a.assignment.parse()?;
            if x.len() < map.len() {
                bail!(
                    "assignment has {} bits, the map needs {}",
                    x.len(),
                    map.len()
                );
            }
            let d = decode_and_validate(&problem, &map, &x.prefix(map.len()))?;
            let show = |v: &[Option<usize>]| {
                v.iter()
                    .map(|o| o.map_or_else(|| "-".to_string(), |t| t.to_string()))
                    .collect::<Vec<_>>()
                    .join(" ")
            };
            let text = match &d.solution {
                Solution::Clique(vs) => format!(
                    "clique: {}",
                    vs.iter()
                        .map(ToString::to_string)
                        .collect::<Vec<_>>()
                        .join(" ")
                ),
                Solution::Tour(t) => format!("tour: {}", show(t)),
                Solution::Coloring(c) => format!("coloring: {}", show(c)),
                Solution::Mapping(m) => format!("mapping: {}", show(m)),
            };
            writeln!(out, "{text}")?;
            writeln!(out, "feasible: {}, valid: {}", d.feasible, d.valid)?;
        }
    }
    Ok(Outcome::Success)
}
