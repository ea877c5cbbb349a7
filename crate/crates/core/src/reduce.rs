//! Factoring semi-symmetries into ancilla variables.
//!
//! Two variables `i`, `j` conflict when setting both is always worse than any
//! other combination. A conflicting pair is semi-symmetric when it shares the
//! same nonzero coupling to at least three other variables `syms`. Those
//! `2 |syms|` couplings are replaced by `|syms|` couplings to a fresh ancilla
//! `a` that is driven to `x_i OR x_j`:
//!
//! ```text
//! Q_ii += z   Q_jj += z   Q_aa = z   Q_ia = Q_ja = -2z   Q_ij += 2z
//! Q_ka = Q_ik,  Q_ik = Q_jk = 0      for k in syms
//! ```
//!
//! Each step changes the coupling count by `2 - |syms|`.

use std::fmt;
use std::str::FromStr;

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::qubo::{content_lines, parse_rational, QuboMatrix, Rational};

/// Pairs `(i, j)`, `i < j`, in lexicographic order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConflictList(Vec<(usize, usize)>);

impl ConflictList {
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, pair: (usize, usize)) -> bool {
        self.0.binary_search(&pair).is_ok()
    }
}

/// Sum of the negative entries of each row, diagonal included.
pub fn negative_row_sums(q: &QuboMatrix) -> Vec<Rational> {
    (0..q.n())
        .map(|i| q.row(i).map(|(_, v)| v).filter(|v| v.is_negative()).sum())
        .collect()
}

/// Pairs with `Q_ij > -Z[i] - Z[j]` where `Z` are the negative row sums.
///
/// Setting both variables then costs more than the most either could gain
/// from the rest of its row, so every assignment with `x_i = x_j = 1` is
/// strictly improved by clearing one of them. Only positive couplings can pass.
pub fn conflict_list(q: &QuboMatrix) -> ConflictList {
    let z = negative_row_sums(q);
    ConflictList(
        q.couplings()
            .filter(|&(i, j, v)| v > -z[i] - z[j])
            .map(|(i, j, _)| (i, j))
            .collect(),
    )
}

/// Variables `k` outside `{i, j}` with `Q_ik = Q_jk != 0`, ascending.
pub fn shared_couplings(q: &QuboMatrix, i: usize, j: usize) -> Vec<usize> {
    q.neighbors(i)
        .filter(|&(k, v)| k != j && q.get(j, k) == v)
        .map(|(k, _)| k)
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymmetricPair {
    pub pair: (usize, usize),
    pub syms: Vec<usize>,
}

/// The conflicting pair with the most shared couplings. Among ties the last
/// one in list order wins.
pub fn most_symmetric_pair(q: &QuboMatrix, conflicts: &ConflictList) -> Result<SymmetricPair> {
    let mut best: Option<SymmetricPair> = None;
    for &(i, j) in conflicts.pairs() {
        let syms = shared_couplings(q, i, j);
        if best.as_ref().is_none_or(|b| syms.len() >= b.syms.len()) {
            best = Some(SymmetricPair { pair: (i, j), syms });
        }
    }
    best.ok_or(Error::EmptyConflictList)
}

/// Applies one factoring step in place and returns the ancilla index.
pub fn enhance_in_place(
    q: &mut QuboMatrix,
    (i, j): (usize, usize),
    syms: &[usize],
    z: Rational,
) -> Result<usize> {
    let n = q.n();
    let fail = |msg: String| Err(Error::Precondition(msg));
    if z <= Rational::zero() {
        return fail(format!("z must be positive, got {z}"));
    }
    if !(i < j && j < n) {
        return fail(format!("pair ({i}, {j}) must satisfy i < j < {n}"));
    }
    if q.get(i, j).is_zero() {
        return fail(format!("pair ({i}, {j}) has no coupling"));
    }
    for (idx, &k) in syms.iter().enumerate() {
        if k >= n || k == i || k == j || syms[..idx].contains(&k) {
            return fail(format!("bad syms entry {k} for pair ({i}, {j})"));
        }
        let v = q.get(i, k);
        if v.is_zero() || q.get(j, k) != v {
            return fail(format!("variable {k} is not shared by pair ({i}, {j})"));
        }
    }

    let a = q.grow(1);
    q.add(i, i, z)?;
    q.add(j, j, z)?;
    q.set(a, a, z)?;
    q.set(i, a, z * -2)?;
    q.set(j, a, z * -2)?;
    q.add(i, j, z * 2)?;
    for &k in syms {
        let v = q.get(i, k);
        q.set(k, a, v)?;
        q.set(i, k, Rational::zero())?;
        q.set(j, k, Rational::zero())?;
    }
    Ok(a)
}

pub fn enhance(
    q: &QuboMatrix,
    pair: (usize, usize),
    syms: &[usize],
    z: Rational,
) -> Result<QuboMatrix> {
    let mut out = q.clone();
    enhance_in_place(&mut out, pair, syms, z)?;
    Ok(out)
}

/// How `z` is chosen for each factoring step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ZMode {
    /// Sum of `|Q_ij|` over all couplings of the input matrix, fixed for the run.
    Safe,
    /// Per step, the largest magnitude any subset of the shared couplings can
    /// sum to; `|sum_k Q_ik|` when they share a sign.
    Tight,
    Fixed(Rational),
}

impl FromStr for ZMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "safe" => Ok(ZMode::Safe),
            "tight" => Ok(ZMode::Tight),
            other => parse_rational(other).map(ZMode::Fixed).map_err(|_| {
                Error::InvalidArgument(format!("z must be safe, tight or a number, got `{s}`"))
            }),
        }
    }
}

impl fmt::Display for ZMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ZMode::Safe => f.write_str("safe"),
            ZMode::Tight => f.write_str("tight"),
            ZMode::Fixed(v) => write!(f, "{v}"),
        }
    }
}

pub fn safe_z(q: &QuboMatrix) -> Rational {
    q.couplings().map(|(_, _, v)| v.abs()).sum()
}

pub fn tight_z(q: &QuboMatrix, i: usize, syms: &[usize]) -> Rational {
    let (pos, neg) = syms.iter().map(|&k| q.get(i, k)).fold(
        (Rational::zero(), Rational::zero()),
        |(p, n), v| {
            if v.is_positive() {
                (p + v, n)
            } else {
                (p, n - v)
            }
        },
    );
    pos.max(neg)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub ancilla: usize,
    pub pair: (usize, usize),
    pub z: Rational,
    pub syms: Vec<usize>,
}

/// Ordered record of the factoring steps applied to a matrix of
/// `original_n` variables. Step `s` introduces ancilla `original_n + s`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReductionTrace {
    pub original_n: usize,
    pub steps: Vec<Step>,
}

impl ReductionTrace {
    pub fn empty(original_n: usize) -> Self {
        ReductionTrace {
            original_n,
            steps: Vec::new(),
        }
    }

    pub fn num_ancillas(&self) -> usize {
        self.steps.len()
    }

    pub fn reduced_n(&self) -> usize {
        self.original_n + self.steps.len()
    }

    /// Coupling reduction implied by the trace: `sum (|syms| - 2)`.
    pub fn coupling_reduction(&self) -> usize {
        self.steps.iter().map(|s| s.syms.len() - 2).sum()
    }

    /// Matrices after each step, starting with the original.
    pub fn replay_each(&self, original: &QuboMatrix) -> Result<Vec<QuboMatrix>> {
        if original.n() != self.original_n {
            return Err(Error::TraceMismatch(format!(
                "trace expects {} variables, matrix has {}",
                self.original_n,
                original.n()
            )));
        }
        let mut out = vec![original.clone()];
        for step in &self.steps {
            let mut next = out.last().expect("non-empty").clone();
            let a = enhance_in_place(&mut next, step.pair, &step.syms, step.z)?;
            if a != step.ancilla {
                return Err(Error::TraceMismatch(format!(
                    "step produced ancilla {a}, trace says {}",
                    step.ancilla
                )));
            }
            out.push(next);
        }
        Ok(out)
    }

    pub fn replay(&self, original: &QuboMatrix) -> Result<QuboMatrix> {
        Ok(self.replay_each(original)?.pop().expect("non-empty"))
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("trace {}\n", self.original_n);
        for s in &self.steps {
            let syms: Vec<String> = s.syms.iter().map(ToString::to_string).collect();
            out.push_str(&format!(
                "ancilla {} pair {} {} z {} syms {}\n",
                s.ancilla,
                s.pair.0,
                s.pair.1,
                s.z,
                syms.join(",")
            ));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = content_lines(text);
        let (hline, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "missing `trace <originalN>` header"))?;
        let original_n = match header.split_whitespace().collect::<Vec<_>>().as_slice() {
            ["trace", n] => n
                .parse::<usize>()
                .map_err(|_| Error::parse(hline, "bad variable count"))?,
            _ => return Err(Error::parse(hline, "expected `trace <originalN>`")),
        };
        let mut trace = ReductionTrace::empty(original_n);
        for (line, content) in lines {
            let f: Vec<&str> = content.split_whitespace().collect();
            let ["ancilla", a, "pair", i, j, "z", z, "syms", syms] = f.as_slice() else {
                return Err(Error::parse(
                    line,
                    "expected `ancilla <a> pair <i> <j> z <value> syms <k1,k2,...>`",
                ));
            };
            let num = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| Error::parse(line, format!("bad index `{s}`")))
            };
            let step = Step {
                ancilla: num(a)?,
                pair: (num(i)?, num(j)?),
                z: parse_rational(z).map_err(|m| Error::parse(line, m))?,
                syms: syms.split(',').map(num).collect::<Result<Vec<_>>>()?,
            };
            if step.ancilla != trace.reduced_n() {
                return Err(Error::parse(
                    line,
                    format!(
                        "expected ancilla {}, found {}",
                        trace.reduced_n(),
                        step.ancilla
                    ),
                ));
            }
            if step.pair.0 >= step.pair.1 {
                return Err(Error::parse(line, "pair must satisfy i < j"));
            }
            if step.syms.len() < 3 {
                return Err(Error::parse(
                    line,
                    "a step factors at least 3 shared couplings",
                ));
            }
            if step.z <= Rational::zero() {
                return Err(Error::parse(line, "z must be positive"));
            }
            trace.steps.push(step);
        }
        Ok(trace)
    }
}

/// Greedily factors the most semi-symmetric conflicting pair until no pair
/// shares at least three couplings or `max_ancillas` ancillas were added.
pub fn factor_semi_symmetries(
    q: &QuboMatrix,
    max_ancillas: usize,
    z_mode: ZMode,
) -> Result<(QuboMatrix, ReductionTrace)> {
    if let ZMode::Fixed(z) = z_mode {
        if z <= Rational::zero() {
            return Err(Error::InvalidArgument(format!(
                "z must be positive, got {z}"
            )));
        }
    }
    let safe = safe_z(q);
    let mut work = q.clone();
    let mut trace = ReductionTrace::empty(q.n());

    let mut conflicts = conflict_list(&work);
    while !conflicts.is_empty() {
        let SymmetricPair { pair, syms } = most_symmetric_pair(&work, &conflicts)?;
        if syms.len() < 3 || trace.num_ancillas() >= max_ancillas {
            break;
        }
        let z = match z_mode {
            ZMode::Safe => safe,
            ZMode::Tight => tight_z(&work, pair.0, &syms),
            ZMode::Fixed(z) => z,
        };
        let ancilla = enhance_in_place(&mut work, pair, &syms, z)?;
        trace.steps.push(Step {
            ancilla,
            pair,
            z,
            syms,
        });
        conflicts = conflict_list(&work);
    }
    Ok((work, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encode::{encode_max_clique, Penalty};
    use crate::graph::Graph;
    use proptest::prelude::*;

    fn r(v: i64) -> Rational {
        Rational::from_integer(v)
    }

    fn example_qubo() -> QuboMatrix {
        let g = Graph::from_edges(6, [(0, 2), (0, 3), (0, 5), (1, 3), (2, 5), (3, 4)]).unwrap();
        encode_max_clique(&g, Penalty::new(r(3)).unwrap())
            .unwrap()
            .qubo
    }

    /// The six-vertex example after factoring pair (1, 4) with z = 3.
    fn example_reduced() -> QuboMatrix {
        let mut q = QuboMatrix::new(7);
        for (i, v) in [-1, 2, -1, -1, 2, -1, 3].into_iter().enumerate() {
            q.set(i, i, r(v)).unwrap();
        }
        for (i, j, v) in [
            (1, 4, 9),
            (0, 6, 3),
            (2, 6, 3),
            (5, 6, 3),
            (1, 6, -6),
            (4, 6, -6),
            (2, 3, 3),
            (3, 5, 3),
        ] {
            q.set(i, j, r(v)).unwrap();
        }
        q
    }

    #[test]
    fn conflict_list_examples() {
        let q = example_qubo();
        assert!(negative_row_sums(&q).iter().all(|&z| z == r(-1)));
        let cl = conflict_list(&q);
        assert_eq!(cl.len(), 9);
        assert!(cl.contains((1, 4)));

        let mut neg = QuboMatrix::new(3);
        neg.set(0, 1, r(-2)).unwrap();
        neg.set(1, 2, r(-1)).unwrap();
        assert!(conflict_list(&neg).is_empty());

        let two =
            QuboMatrix::from_entries(2, [(0, 0, r(-1)), (1, 1, r(-1)), (0, 1, r(3))]).unwrap();
        assert_eq!(conflict_list(&two).pairs(), &[(0, 1)]);
        // 2 is not > 2
        let edge =
            QuboMatrix::from_entries(2, [(0, 0, r(-1)), (1, 1, r(-1)), (0, 1, r(2))]).unwrap();
        assert!(conflict_list(&edge).is_empty());
    }

    #[test]
    fn most_symmetric_pair_examples() {
        let q = example_qubo();
        let best = most_symmetric_pair(&q, &conflict_list(&q)).unwrap();
        assert_eq!(best.pair, (1, 4));
        assert_eq!(best.syms, vec![0, 2, 5]);

        assert!(matches!(
            most_symmetric_pair(&q, &ConflictList::default()),
            Err(Error::EmptyConflictList)
        ));

        // disjoint stars: 0,1 couple to nothing else in common
        let mut q = QuboMatrix::new(4);
        q.set(0, 1, r(5)).unwrap();
        q.set(0, 2, r(1)).unwrap();
        q.set(1, 3, r(1)).unwrap();
        let best = most_symmetric_pair(&q, &conflict_list(&q)).unwrap();
        assert!(best.syms.is_empty());
    }

    #[test]
    fn ties_go_to_the_later_pair() {
        // (0,1) and (2,3) each share couplings to 4, 5, 6
        let mut q = QuboMatrix::new(7);
        for (i, j) in [(0, 1), (2, 3)] {
            q.set(i, j, r(10)).unwrap();
            for k in 4..7 {
                q.set(i, k, r(1)).unwrap();
                q.set(j, k, r(1)).unwrap();
            }
        }
        let cl = conflict_list(&q);
        assert!(cl.contains((0, 1)) && cl.contains((2, 3)));
        let best = most_symmetric_pair(&q, &cl).unwrap();
        assert_eq!(best.pair, (2, 3));
        assert_eq!(best.syms, vec![4, 5, 6]);
    }

    #[test]
    fn enhance_reproduces_reference_reduction() {
        let q = example_qubo();
        let out = enhance(&q, (1, 4), &[0, 2, 5], r(3)).unwrap();
        assert_eq!(out, example_reduced());
        assert_eq!(q.num_couplings(), 9);
        assert_eq!(out.num_couplings(), 8);
    }

    #[test]
    fn enhance_rejects_bad_preconditions() {
        let q = example_qubo();
        for (pair, syms, z) in [
            ((1, 4), vec![0, 2, 5], r(0)),
            ((4, 1), vec![0, 2, 5], r(3)),
            ((1, 4), vec![0, 2, 4], r(3)),
            ((1, 4), vec![0, 2, 2], r(3)),
            ((1, 4), vec![0, 2, 3], r(3)),
            ((0, 2), vec![1, 3, 4], r(3)),
            ((1, 9), vec![0, 2, 5], r(3)),
        ] {
            assert!(
                matches!(enhance(&q, pair, &syms, z), Err(Error::Precondition(_))),
                "{pair:?} {syms:?}"
            );
        }
    }

    #[test]
    fn factor_examples() {
        let q = example_qubo();
        let (out, trace) = factor_semi_symmetries(&q, 1, ZMode::Fixed(r(3))).unwrap();
        assert_eq!(out, example_reduced());
        assert_eq!(trace.steps.len(), 1);
        assert_eq!(trace.steps[0].syms.len(), 3);

        let (_, trace) = factor_semi_symmetries(&q, 1, ZMode::Tight).unwrap();
        assert_eq!(trace.steps[0].z, r(9));
        let (_, trace) = factor_semi_symmetries(&q, 1, ZMode::Safe).unwrap();
        assert_eq!(trace.steps[0].z, r(27));

        let (out, trace) = factor_semi_symmetries(&q, 0, ZMode::Safe).unwrap();
        assert_eq!(out, q);
        assert!(trace.steps.is_empty());

        assert!(factor_semi_symmetries(&q, 1, ZMode::Fixed(r(0))).is_err());
        assert!(factor_semi_symmetries(&q, 1, ZMode::Fixed(r(-2))).is_err());
    }

    #[test]
    fn tight_z_covers_mixed_signs() {
        let q = QuboMatrix::from_entries(
            5,
            [
                (0, 2, r(4)),
                (0, 3, r(-4)),
                (0, 4, r(1)),
                (1, 2, r(4)),
                (1, 3, r(-4)),
                (1, 4, r(1)),
            ],
        )
        .unwrap();
        assert_eq!(tight_z(&q, 0, &[2, 3, 4]), r(5));
    }

    #[test]
    fn trace_text_round_trip_and_validation() {
        let q = example_qubo();
        let (out, trace) = factor_semi_symmetries(&q, 1, ZMode::Fixed(r(3))).unwrap();
        let text = trace.to_text();
        assert_eq!(text, "trace 6\nancilla 6 pair 1 4 z 3 syms 0,2,5\n");
        let parsed = ReductionTrace::parse(&text).unwrap();
        assert_eq!(parsed, trace);
        assert_eq!(parsed.replay(&q).unwrap().to_text(), out.to_text());

        for bad in [
            "trace 6\nancilla 7 pair 1 4 z 3 syms 0,2,5\n",
            "trace 6\nancilla 6 pair 4 1 z 3 syms 0,2,5\n",
            "trace 6\nancilla 6 pair 1 4 z 3 syms 0,2\n",
            "trace 6\nancilla 6 pair 1 4 z 0 syms 0,2,5\n",
            "trace 6\nancilla 6 pair 1 4 syms 0,2,5\n",
        ] {
            assert!(ReductionTrace::parse(bad).is_err(), "{bad}");
        }
        let wrong = ReductionTrace::parse("trace 6\nancilla 6 pair 0 2 z 3 syms 1,3,4\n").unwrap();
        assert!(wrong.replay(&q).is_err());
        assert!(trace.replay(&QuboMatrix::new(5)).is_err());
    }

    fn arb_problem_matrix() -> impl Strategy<Value = QuboMatrix> {
        (5usize..12, 0.0f64..0.7, any::<u64>(), 1i64..5).prop_map(|(n, p, seed, a)| {
            let g = Graph::erdos_renyi(n, p, seed).unwrap();
            encode_max_clique(&g, Penalty::new(r(a)).unwrap())
                .unwrap()
                .qubo
        })
    }

    proptest! {
        #[test]
        fn each_step_removes_syms_minus_two_couplings(
            q in arb_problem_matrix(),
            budget in 0usize..6,
            tight in any::<bool>(),
        ) {
            let mode = if tight { ZMode::Tight } else { ZMode::Safe };
            let (out, trace) = factor_semi_symmetries(&q, budget, mode).unwrap();
            prop_assert_eq!(out.n(), q.n() + trace.steps.len());
            prop_assert!(trace.steps.len() <= budget);
            let mats = trace.replay_each(&q).unwrap();
            for (s, step) in trace.steps.iter().enumerate() {
                let (before, after) = (&mats[s], &mats[s + 1]);
                prop_assert!(step.syms.len() >= 3);
                prop_assert_eq!(
                    after.num_couplings() as i64,
                    before.num_couplings() as i64 + 2 - step.syms.len() as i64
                );
                for &k in &step.syms {
                    prop_assert!(after.get(step.pair.0, k).is_zero());
                    prop_assert!(after.get(step.pair.1, k).is_zero());
                    prop_assert_eq!(after.get(k, step.ancilla), before.get(step.pair.0, k));
                }
            }
            prop_assert_eq!(mats.last().unwrap(), &out);
        }

        #[test]
        fn rerun_at_fixpoint_adds_nothing(q in arb_problem_matrix()) {
            let (out, _) = factor_semi_symmetries(&q, usize::MAX, ZMode::Tight).unwrap();
            let (again, trace) = factor_semi_symmetries(&out, usize::MAX, ZMode::Tight).unwrap();
            prop_assert!(trace.steps.is_empty());
            prop_assert_eq!(again, out);
        }
    }
}
