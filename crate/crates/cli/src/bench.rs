//! Benchmark harness: coupling, gate-count and solver metrics before and
//! after factoring, one row per instance and ancilla budget.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use rayon::prelude::*;
use semisym_core::{
    exhaustive_solve, factor_semi_symmetries, projected_success, random_permutation,
    simulated_anneal, verify_equivalence, AnnealParams, Graph, Penalty, Problem, ProblemKind,
    QuboMatrix, Rational, VerifyLimits, ZMode, DEFAULT_ANCILLA_CAP, DEFAULT_ENUMERATION_CAP,
};

/// Leading comment of every CSV.
pub const OUT_OF_SCOPE_NOTE: &str =
    "# physical qubits, chain length and chain-break fraction are hardware embedding metrics and are not measured";

pub const HEADER: [&str; 18] = [
    "problem",
    "vertices",
    "seed",
    "budget",
    "penalty",
    "ancillas_used",
    "couplings_before",
    "couplings_after",
    "qubits_before",
    "qubits_after",
    "cnot_before",
    "cnot_after",
    "zz_layers_before",
    "zz_layers_after",
    "reduction_percent",
    "success_before",
    "success_after",
    "verify_status",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VerifyStatus {
    Checked,
    Skipped,
    Failed,
}

impl VerifyStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            VerifyStatus::Checked => "checked",
            VerifyStatus::Skipped => "skipped",
            VerifyStatus::Failed => "failed",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub problem: ProblemKind,
    pub vertices: usize,
    pub seed: u64,
    pub budget: usize,
    pub penalty: String,
    pub ancillas_used: usize,
    pub couplings_before: usize,
    pub couplings_after: usize,
    pub qubits_before: usize,
    pub qubits_after: usize,
    pub cnot_before: u64,
    pub cnot_after: u64,
    pub zz_layers_before: usize,
    pub zz_layers_after: usize,
    /// `(before - after) / before`, as a fraction.
    pub reduction_percent: f64,
    pub success_before: Option<f64>,
    pub success_after: Option<f64>,
    /// Lowest original-problem energy reached by annealing the reduced matrix
    /// and projecting, minus the exact optimum. Never negative.
    pub projected_gap: Option<Rational>,
    pub verify_status: VerifyStatus,
}

impl BenchRow {
    fn record(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(|f| format!("{f:.4}")).unwrap_or_default();
        vec![
            self.problem.name().to_string(),
            self.vertices.to_string(),
            self.seed.to_string(),
            budget_label(self.budget),
            self.penalty.clone(),
            self.ancillas_used.to_string(),
            self.couplings_before.to_string(),
            self.couplings_after.to_string(),
            self.qubits_before.to_string(),
            self.qubits_after.to_string(),
            self.cnot_before.to_string(),
            self.cnot_after.to_string(),
            self.zz_layers_before.to_string(),
            self.zz_layers_after.to_string(),
            format!("{:.6}", self.reduction_percent),
            opt(self.success_before),
            opt(self.success_after),
            self.verify_status.as_str().to_string(),
        ]
    }
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub problem: ProblemKind,
    pub sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    /// `usize::MAX` means no limit.
    pub budgets: Vec<usize>,
    pub z_mode: ZMode,
    pub p_edge: f64,
    pub colors: usize,
    pub penalty: Option<Penalty>,
    /// Instances with more original variables are not verified.
    pub verify_cap: usize,
    /// Annealing is skipped when `restarts` is 0.
    pub anneal: AnnealParams,
    /// Writes `<problem>_<v>_<seed>_<budget>.{qubo,trace}` per row when set.
    pub emit_dir: Option<PathBuf>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            problem: ProblemKind::MaxClique,
            sizes: (6..=12).collect(),
            seeds: (0..3).collect(),
            budgets: vec![0, 5, 10],
            z_mode: ZMode::Tight,
            p_edge: 0.5,
            colors: 3,
            penalty: None,
            verify_cap: 16,
            anneal: AnnealParams {
                sweeps: 200,
                restarts: 20,
                seed: 0,
                schedule: None,
            },
            emit_dir: None,
        }
    }
}

/// The instance for `(kind, vertices, seed)`. Isomorphism pairs a graph with
/// a relabelled copy of itself.
pub fn instance(
    kind: ProblemKind,
    vertices: usize,
    p_edge: f64,
    colors: usize,
    seed: u64,
) -> Result<Problem> {
    let g = Graph::erdos_renyi(vertices, p_edge, seed)?;
    Ok(match kind {
        ProblemKind::MaxClique => Problem::MaxClique(g),
        ProblemKind::HamiltonCycles => Problem::HamiltonCycles(g),
        ProblemKind::GraphColoring => Problem::GraphColoring { graph: g, colors },
        ProblemKind::GraphIsomorphism => {
            let g2 = g.permute(&random_permutation(vertices, seed))?;
            Problem::GraphIsomorphism { g1: g, g2 }
        }
    })
}

pub fn budget_label(budget: usize) -> String {
    if budget == usize::MAX {
        "max".to_string()
    } else {
        budget.to_string()
    }
}

/// Everything about an instance that does not depend on the budget.
struct Baseline {
    vertices: usize,
    seed: u64,
    qubo: QuboMatrix,
    penalty: Penalty,
    /// Exact optimum, when the instance is small enough to enumerate.
    reference: Option<Rational>,
    success_before: Option<f64>,
}

fn measure(cfg: &BenchConfig, base: &Baseline, budget: usize) -> Result<BenchRow> {
    let Baseline {
        vertices,
        seed,
        qubo: ref q,
        penalty,
        reference,
        success_before,
    } = *base;
    let (qmod, trace) = factor_semi_symmetries(q, budget, cfg.z_mode)?;
    let (before, after) = (q.stats(1), qmod.stats(1));

    let verify_status = if q.n() <= cfg.verify_cap && trace.num_ancillas() <= DEFAULT_ANCILLA_CAP {
        let limits = VerifyLimits {
            max_original: cfg.verify_cap,
            max_ancillas: DEFAULT_ANCILLA_CAP,
        };
        if verify_equivalence(q, &qmod, &trace, limits)?.passed() {
            VerifyStatus::Checked
        } else {
            VerifyStatus::Failed
        }
    } else {
        VerifyStatus::Skipped
    };

    let (success_after, projected_gap) = match (cfg.anneal.restarts, reference) {
        (0, _) | (_, None) => (None, None),
        (_, Some(opt)) => {
            let run = simulated_anneal(&qmod, AnnealParams { seed, ..cfg.anneal }, None)?;
            let (frac, lowest) = projected_success(q, &trace, &run, opt)?;
            (Some(frac), Some(lowest - opt))
        }
    };

    if let Some(dir) = &cfg.emit_dir {
        let stem = format!(
            "{}_{}_{}_{}",
            cfg.problem.name(),
            vertices,
            seed,
            budget_label(budget)
        );
        fs::write(dir.join(format!("{stem}.qubo")), qmod.to_text())?;
        fs::write(dir.join(format!("{stem}.trace")), trace.to_text())?;
    }

    Ok(BenchRow {
        problem: cfg.problem,
        vertices,
        seed,
        budget,
        penalty: penalty.value().to_string(),
        ancillas_used: trace.num_ancillas(),
        couplings_before: before.num_couplings,
        couplings_after: after.num_couplings,
        qubits_before: before.num_variables,
        qubits_after: after.num_variables,
        cnot_before: before.cnot_count,
        cnot_after: after.cnot_count,
        zz_layers_before: before.zz_layer_count,
        zz_layers_after: after.zz_layer_count,
        reduction_percent: if before.num_couplings == 0 {
            0.0
        } else {
            (before.num_couplings - after.num_couplings) as f64 / before.num_couplings as f64
        },
        success_before,
        success_after,
        projected_gap,
        verify_status,
    })
}

/// One row per (size, seed, budget), sorted by (problem, vertices, seed,
/// budget). Instances run in parallel; the output does not depend on it.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    if let Some(dir) = &cfg.emit_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let jobs: Vec<(usize, u64)> = cfg
        .sizes
        .iter()
        .flat_map(|&v| cfg.seeds.iter().map(move |&s| (v, s)))
        .collect();
    let nested = jobs
        .par_iter()
        .map(|&(vertices, seed)| -> Result<Vec<BenchRow>> {
            let problem = instance(cfg.problem, vertices, cfg.p_edge, cfg.colors, seed)?;
            let penalty = cfg.penalty.unwrap_or_else(|| problem.default_penalty());
            let q = problem.encode(penalty)?.qubo;
            // only annealing needs the exact optimum
            let reference = if cfg.anneal.restarts > 0 && q.n() <= DEFAULT_ENUMERATION_CAP {
                Some(exhaustive_solve(&q, DEFAULT_ENUMERATION_CAP)?.best_energy)
            } else {
                None
            };
            let success_before = match (cfg.anneal.restarts, reference) {
                (0, _) | (_, None) => None,
                (_, Some(opt)) => {
                    simulated_anneal(&q, AnnealParams { seed, ..cfg.anneal }, Some(opt))?
                        .success_fraction
                }
            };
            let base = Baseline {
                vertices,
                seed,
                qubo: q,
                penalty,
                reference,
                success_before,
            };
            cfg.budgets
                .iter()
                .map(|&b| measure(cfg, &base, b))
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows: Vec<BenchRow> = nested.into_iter().flatten().collect();
    rows.sort_by(|a, b| {
        (a.problem.name(), a.vertices, a.seed, a.budget).cmp(&(
            b.problem.name(),
            b.vertices,
            b.seed,
            b.budget,
        ))
    });
    Ok(rows)
}

pub fn write_csv<W: Write>(rows: &[BenchRow], mut out: W) -> Result<()> {
    writeln!(out, "{OUT_OF_SCOPE_NOTE}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for row in rows {
        w.write_record(row.record())?;
    }
    w.flush()?;
    Ok(())
}

/// Median of the reduction fractions; the mean of the middle pair for even counts.
pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    Some(if values.len() % 2 == 1 {
        values[m]
    } else {
        (values[m - 1] + values[m]) / 2.0
    })
}
