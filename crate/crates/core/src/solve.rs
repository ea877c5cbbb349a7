//! Classical QUBO solvers: exhaustive search and simulated annealing.

use std::fmt;

use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::qubo::{lex_rank, Assignment, IntegerQubo, LocalFields, QuboMatrix, Rational};
use crate::reduce::ReductionTrace;
use crate::verify::project_assignment;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Exhaustive,
    Annealing,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Exhaustive => "exhaustive",
            Method::Annealing => "sa",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveResult {
    pub best_assignment: Assignment,
    pub best_energy: Rational,
    pub method: Method,
    /// Assignments evaluated (exhaustive) or restarts run (annealing).
    pub samples: u64,
    /// Share of restarts whose best state reached the reference optimum.
    pub success_fraction: Option<f64>,
    /// Best state of each restart, in restart order.
    pub restarts: Vec<(Assignment, Rational)>,
}

/// Global minimum; the lexicographically smallest minimizer is reported.
pub fn exhaustive_solve(q: &QuboMatrix, cap: usize) -> Result<SolveResult> {
    let n = q.n();
    if n > cap || n > 62 {
        return Err(Error::EnumerationCap {
            n,
            cap: cap.min(62),
        });
    }
    let iq = IntegerQubo::from_matrix(q)?;
    let low = n.min(16);
    let (energy, mask) = (0..1u64 << (n - low))
        .into_par_iter()
        .map(|high| {
            let mut walk = LocalFields::new(&iq, high << low);
            let mut best = (walk.energy(), lex_rank(walk.mask(), n), walk.mask());
            for step in 1u64..1 << low {
                walk.flip(step.trailing_zeros() as usize);
                let cand = (walk.energy(), lex_rank(walk.mask(), n), walk.mask());
                best = best.min(cand);
            }
            best
        })
        .min()
        .map(|(e, _, m)| (e, m))
        .expect("at least one assignment");
    Ok(SolveResult {
        best_assignment: Assignment::from_mask(mask, n),
        best_energy: iq.to_rational(energy)?,
        method: Method::Exhaustive,
        samples: 1 << n,
        success_fraction: None,
        restarts: Vec::new(),
    })
}

/// Geometric cooling schedule over sweeps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Schedule {
    pub t_initial: f64,
    pub t_final: f64,
}

impl Schedule {
    /// From the largest `|Q_ij|` down to 1% of the smallest nonzero `|Q_ij|`.
    pub fn for_matrix(q: &QuboMatrix) -> Self {
        let hi = q.max_abs_entry().to_f64().unwrap_or(1.0);
        let lo = q.min_abs_entry().to_f64().unwrap_or(1.0);
        if q.num_entries() == 0 {
            return Schedule {
                t_initial: 1.0,
                t_final: 0.01,
            };
        }
        Schedule {
            t_initial: hi,
            t_final: 0.01 * lo,
        }
    }

    pub fn temperature(&self, sweep: usize, sweeps: usize) -> f64 {
        if sweeps <= 1 {
            return self.t_final;
        }
        let frac = sweep as f64 / (sweeps - 1) as f64;
        self.t_initial * (self.t_final / self.t_initial).powf(frac)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnnealParams {
    pub sweeps: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Defaults to [`Schedule::for_matrix`].
    pub schedule: Option<Schedule>,
}

impl Default for AnnealParams {
    fn default() -> Self {
        AnnealParams {
            sweeps: 1000,
            restarts: 20,
            seed: 0,
            schedule: None,
        }
    }
}

/// Single-bit-flip Metropolis annealing.
///
/// Restart `r` draws from ChaCha8 seeded with `seed` on stream `r`, so
/// restarts are independent and the result does not depend on how they are
/// scheduled. Each restart starts from uniform random bits and sweeps the
/// variables in index order once per temperature.
pub fn simulated_anneal(
    q: &QuboMatrix,
    params: AnnealParams,
    reference: Option<Rational>,
) -> Result<SolveResult> {
    if params.restarts == 0 {
        return Err(Error::InvalidArgument("need at least one restart".into()));
    }
    let n = q.n();
    if n > 64 {
        return Err(Error::InvalidArgument(format!(
            "annealing supports at most 64 variables, got {n}"
        )));
    }
    let iq = IntegerQubo::from_matrix(q)?;
    let schedule = params.schedule.unwrap_or_else(|| Schedule::for_matrix(q));
    let scale = iq.scale as f64;

    let runs: Vec<(i128, u64)> = (0..params.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            rng.set_stream(r as u64);
            let start = (0..n).fold(0u64, |m, i| if rng.gen::<bool>() { m | 1 << i } else { m });
            let mut walk = LocalFields::new(&iq, start);
            let mut best = (walk.energy(), walk.mask());
            for sweep in 0..params.sweeps {
                let t = schedule.temperature(sweep, params.sweeps);
                for k in 0..n {
                    let delta = walk.flip_delta(k);
                    let accept = delta <= 0 || {
                        let p = (-(delta as f64) / (scale * t)).exp();
                        rng.gen::<f64>() < p
                    };
                    if accept {
                        walk.flip(k);
                        if walk.energy() < best.0 {
                            best = (walk.energy(), walk.mask());
                        }
                    }
                }
            }
            best
        })
        .collect();

    let restarts = runs
        .iter()
        .map(|&(e, m)| Ok((Assignment::from_mask(m, n), iq.to_rational(e)?)))
        .collect::<Result<Vec<_>>>()?;
    let (best_assignment, best_energy) = restarts
        .iter()
        .min_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)))
        .cloned()
        .expect("at least one restart");
    let success_fraction = reference.map(|opt| {
        restarts.iter().filter(|(_, e)| *e == opt).count() as f64 / restarts.len() as f64
    });
    Ok(SolveResult {
        best_assignment,
        best_energy,
        method: Method::Annealing,
        samples: params.restarts as u64,
        success_fraction,
        restarts,
    })
}

/// Success of a run on a reduced matrix, judged on the original problem:
/// each restart's best state is projected onto the original variables and
/// re-evaluated under `original`. Returns the fraction of restarts at
/// `reference` and the lowest projected energy seen.
pub fn projected_success(
    original: &QuboMatrix,
    trace: &ReductionTrace,
    reduced_run: &SolveResult,
    reference: Rational,
) -> Result<(f64, Rational)> {
    let mut hits = 0;
    let mut lowest: Option<Rational> = None;
    for (xmod, _) in &reduced_run.restarts {
        let e = original.energy(&project_assignment(trace, xmod)?)?;
        if e == reference {
            hits += 1;
        }
        lowest = Some(lowest.map_or(e, |l| l.min(e)));
    }
    let total = reduced_run.restarts.len().max(1);
    Ok((
        hits as f64 / total as f64,
        lowest.unwrap_or_else(Rational::zero),
    ))
}
