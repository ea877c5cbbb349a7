//! Exhaustive checks that a reduced matrix keeps the energy landscape of the
//! original.
//!
//! For an assignment `x` of the original variables the reduced energy is
//! taken with the best ancilla values. An `x` is *invalid* when it sets both
//! variables of a conflicting pair of the original matrix, or of any factored
//! pair, and *valid* otherwise. Valid energies must be unchanged, invalid ones
//! must not drop, and the minimizers of the reduced matrix must project onto
//! minimizers of the original.

use std::fmt::Write as _;

use num_traits::Zero;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::qubo::{
    lex_rank, Assignment, IntegerQubo, LocalFields, QuboMatrix, Rational, DEFAULT_ENUMERATION_CAP,
};
use crate::reduce::{conflict_list, ReductionTrace, Step};

pub const DEFAULT_ANCILLA_CAP: usize = 20;

/// Counterexamples kept in a report, lexicographically smallest first.
pub const MAX_COUNTEREXAMPLES: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VerifyLimits {
    pub max_original: usize,
    pub max_ancillas: usize,
}

impl Default for VerifyLimits {
    fn default() -> Self {
        VerifyLimits {
            max_original: DEFAULT_ENUMERATION_CAP,
            max_ancillas: DEFAULT_ANCILLA_CAP,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Validity {
    Valid,
    Invalid,
}

pub fn project_assignment(trace: &ReductionTrace, xmod: &Assignment) -> Result<Assignment> {
    if xmod.len() != trace.reduced_n() {
        return Err(Error::DimensionMismatch {
            expected: trace.reduced_n(),
            got: xmod.len(),
        });
    }
    Ok(xmod.prefix(trace.original_n))
}

fn check_original(trace: &ReductionTrace, x: &Assignment) -> Result<()> {
    if x.len() != trace.original_n {
        return Err(Error::DimensionMismatch {
            expected: trace.original_n,
            got: x.len(),
        });
    }
    Ok(())
}

/// Ancilla values `a_s = y_i OR y_j`, step by step, where `y` is `x`
/// extended by the ancillas fixed so far.
pub fn canonical_ancillas(trace: &ReductionTrace, x: &Assignment) -> Result<Assignment> {
    check_original(trace, x)?;
    let mut y = x.clone();
    for step in &trace.steps {
        let a = y.get(step.pair.0) || y.get(step.pair.1);
        y = y.concat(&Assignment::new(vec![a]));
    }
    Ok(Assignment::new(y.bits()[trace.original_n..].to_vec()))
}

/// Per variable, the mask of variables it conflicts with in the original matrix.
#[derive(Clone, Debug)]
struct ConflictMasks(Vec<u64>);

impl ConflictMasks {
    fn new(q: &QuboMatrix) -> Self {
        let mut m = vec![0u64; q.n()];
        for &(i, j) in conflict_list(q).pairs() {
            m[i] |= 1 << j;
            m[j] |= 1 << i;
        }
        ConflictMasks(m)
    }

    fn violated(&self, mask: u64) -> bool {
        self.0
            .iter()
            .enumerate()
            .any(|(i, &c)| mask >> i & 1 == 1 && mask & c != 0)
    }
}

fn classify_mask(conflicts: &ConflictMasks, trace: &ReductionTrace, mask: u64) -> Validity {
    if conflicts.violated(mask) {
        return Validity::Invalid;
    }
    let mut y = mask;
    for step in &trace.steps {
        let (bi, bj) = (y >> step.pair.0 & 1, y >> step.pair.1 & 1);
        if bi & bj == 1 {
            return Validity::Invalid;
        }
        y |= (bi | bj) << step.ancilla;
    }
    Validity::Valid
}

/// Invalid iff `x` sets both variables of a pair that conflicts in
/// `original` or of a pair factored by `trace`. Factored pairs that involve
/// an ancilla read it from [`canonical_ancillas`].
pub fn classify_solution(
    original: &QuboMatrix,
    trace: &ReductionTrace,
    x: &Assignment,
) -> Result<Validity> {
    check_original(trace, x)?;
    if original.n() != trace.original_n {
        return Err(Error::TraceMismatch(format!(
            "original matrix has {} variables, trace expects {}",
            original.n(),
            trace.original_n
        )));
    }
    if trace.reduced_n() > 64 {
        return Err(Error::InvalidArgument("more than 64 variables".into()));
    }
    Ok(classify_mask(
        &ConflictMasks::new(original),
        trace,
        x.to_mask(),
    ))
}

/// Ancillas grouped into connected components of their mutual couplings;
/// components are minimized independently.
#[derive(Clone, Debug)]
struct AncillaBlocks {
    blocks: Vec<Block>,
}

#[derive(Clone, Debug)]
struct Block {
    /// Ancilla offsets, ascending.
    members: Vec<usize>,
    /// `(local a, local b, w)` couplings inside the block.
    couplings: Vec<(usize, usize, i128)>,
}

impl AncillaBlocks {
    fn new(q: &IntegerQubo, first: usize) -> Self {
        let count = q.n - first;
        let mut parent: Vec<usize> = (0..count).collect();
        fn root(p: &mut [usize], mut v: usize) -> usize {
            while p[v] != v {
                p[v] = p[p[v]];
                v = p[v];
            }
            v
        }
        for s in 0..count {
            for &(j, _) in &q.adj[first + s] {
                if j >= first {
                    let (a, b) = (root(&mut parent, s), root(&mut parent, j - first));
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        let mut blocks: Vec<Block> = Vec::new();
        let mut block_of = vec![usize::MAX; count];
        for s in 0..count {
            let r = root(&mut parent, s);
            if block_of[r] == usize::MAX {
                block_of[r] = blocks.len();
                blocks.push(Block {
                    members: Vec::new(),
                    couplings: Vec::new(),
                });
            }
            block_of[s] = block_of[r];
            blocks[block_of[s]].members.push(s);
        }
        for block in &mut blocks {
            for (la, &s) in block.members.iter().enumerate() {
                for &(j, w) in &q.adj[first + s] {
                    if j > first + s {
                        let lb = block
                            .members
                            .binary_search(&(j - first))
                            .expect("same block");
                        block.couplings.push((la, lb, w));
                    }
                }
            }
        }
        AncillaBlocks { blocks }
    }

    fn has_mutual_couplings(&self) -> bool {
        self.blocks.iter().any(|b| !b.couplings.is_empty())
    }

    /// Minimum of `sum a_s field[s] + sum a_s a_t w_st` and, if `bits` is
    /// given, the lexicographically smallest minimizer.
    fn minimize(&self, field: &[i128], mut bits: Option<&mut [bool]>) -> i128 {
        let mut total = 0;
        for block in &self.blocks {
            let c = block.members.len();
            if c == 1 && bits.is_none() {
                total += field[block.members[0]].min(0);
                continue;
            }
            let mut best = i128::MAX;
            let mut best_r = 0u64;
            for r in 0..1u64 << c {
                let on = |l: usize| r >> (c - 1 - l) & 1 == 1;
                let mut e: i128 = (0..c)
                    .filter(|&l| on(l))
                    .map(|l| field[block.members[l]])
                    .sum();
                e += block
                    .couplings
                    .iter()
                    .filter(|&&(a, b, _)| on(a) && on(b))
                    .map(|&(_, _, w)| w)
                    .sum::<i128>();
                if e < best {
                    best = e;
                    best_r = r;
                }
            }
            if let Some(bits) = bits.as_deref_mut() {
                for (l, &s) in block.members.iter().enumerate() {
                    bits[s] = best_r >> (c - 1 - l) & 1 == 1;
                }
            }
            total += best;
        }
        total
    }
}

fn check_shapes(qmod: &QuboMatrix, trace: &ReductionTrace, cap: usize) -> Result<()> {
    if qmod.n() != trace.reduced_n() {
        return Err(Error::TraceMismatch(format!(
            "reduced matrix has {} variables, trace implies {}",
            qmod.n(),
            trace.reduced_n()
        )));
    }
    if trace.num_ancillas() > cap {
        return Err(Error::EnumerationCap {
            n: trace.num_ancillas(),
            cap,
        });
    }
    if trace.reduced_n() > 64 {
        return Err(Error::InvalidArgument("more than 64 variables".into()));
    }
    Ok(())
}

/// Minimum reduced energy over all ancilla completions of `x`, with the
/// lexicographically smallest minimizing completion.
pub fn best_ancilla_energy(
    qmod: &QuboMatrix,
    trace: &ReductionTrace,
    x: &Assignment,
    ancilla_cap: usize,
) -> Result<(Rational, Assignment)> {
    check_original(trace, x)?;
    check_shapes(qmod, trace, ancilla_cap)?;
    let n = trace.original_n;
    let iq = IntegerQubo::from_matrix(qmod)?;
    let blocks = AncillaBlocks::new(&iq, n);
    let fields = LocalFields::new(&iq, x.to_mask());
    let field: Vec<i128> = (n..iq.n).map(|k| fields.field(k)).collect();
    let mut bits = vec![false; trace.num_ancillas()];
    let e = fields.energy() + blocks.minimize(&field, Some(&mut bits));
    Ok((iq.to_rational(e)?, Assignment::new(bits)))
}

/// Reduced energy with every ancilla set to `x_i OR x_j` of its pair.
/// `None` when ancillas couple to each other, where the closed form does not
/// apply.
pub fn or_completion_energy(
    qmod: &QuboMatrix,
    trace: &ReductionTrace,
    x: &Assignment,
) -> Result<Option<Rational>> {
    check_shapes(qmod, trace, usize::MAX)?;
    let iq = IntegerQubo::from_matrix(qmod)?;
    if AncillaBlocks::new(&iq, trace.original_n).has_mutual_couplings() {
        return Ok(None);
    }
    let full = x.concat(&canonical_ancillas(trace, x)?);
    qmod.energy(&full).map(Some)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EquivalenceReport {
    pub valid_count: u64,
    pub invalid_count: u64,
    pub max_valid_energy_deviation: Rational,
    pub invalid_non_decrease: bool,
    pub optimum_preserved: bool,
    pub min_energy_original: Rational,
    pub min_energy_reduced: Rational,
    pub counterexamples: Vec<Assignment>,
}

impl EquivalenceReport {
    pub fn valid_energy_preserved(&self) -> bool {
        self.max_valid_energy_deviation.is_zero()
    }

    pub fn passed(&self) -> bool {
        self.valid_energy_preserved() && self.invalid_non_decrease && self.optimum_preserved
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "validCount: {}", self.valid_count);
        let _ = writeln!(out, "invalidCount: {}", self.invalid_count);
        let _ = writeln!(
            out,
            "maxValidEnergyDeviation: {}",
            self.max_valid_energy_deviation
        );
        let _ = writeln!(
            out,
            "validEnergyPreserved: {}",
            self.valid_energy_preserved()
        );
        let _ = writeln!(out, "invalidNonDecrease: {}", self.invalid_non_decrease);
        let _ = writeln!(out, "optimumPreserved: {}", self.optimum_preserved);
        let _ = writeln!(out, "minEnergyOriginal: {}", self.min_energy_original);
        let _ = writeln!(out, "minEnergyReduced: {}", self.min_energy_reduced);
        let ce: Vec<String> = self
            .counterexamples
            .iter()
            .map(ToString::to_string)
            .collect();
        let _ = writeln!(
            out,
            "counterexamples: {}",
            if ce.is_empty() {
                "none".to_string()
            } else {
                ce.join(" ")
            }
        );
        out
    }
}

/// Partial report over a slice of the assignment space. Merging is
/// associative and commutative, so any partition gives the same result.
#[derive(Clone, Debug)]
struct Tally {
    valid: u64,
    invalid: u64,
    max_dev: i128,
    non_decrease: bool,
    min_orig: i128,
    min_red: i128,
    /// Largest original energy among assignments reaching `min_red`.
    orig_at_min_red: i128,
    /// `(lex rank, mask)` of counterexamples, smallest kept.
    counter: Vec<(u64, u64)>,
}

impl Tally {
    fn empty() -> Self {
        Tally {
            valid: 0,
            invalid: 0,
            max_dev: 0,
            non_decrease: true,
            min_orig: i128::MAX,
            min_red: i128::MAX,
            orig_at_min_red: i128::MIN,
            counter: Vec::new(),
        }
    }

    fn push_counter(&mut self, rank: u64, mask: u64) {
        if self.counter.len() < MAX_COUNTEREXAMPLES {
            self.counter.push((rank, mask));
        } else if let Some(worst) = self.counter.iter_mut().max() {
            if (rank, mask) < *worst {
                *worst = (rank, mask);
            }
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.valid += other.valid;
        self.invalid += other.invalid;
        self.max_dev = self.max_dev.max(other.max_dev);
        self.non_decrease &= other.non_decrease;
        self.min_orig = self.min_orig.min(other.min_orig);
        self.orig_at_min_red = match self.min_red.cmp(&other.min_red) {
            std::cmp::Ordering::Less => self.orig_at_min_red,
            std::cmp::Ordering::Greater => other.orig_at_min_red,
            std::cmp::Ordering::Equal => self.orig_at_min_red.max(other.orig_at_min_red),
        };
        self.min_red = self.min_red.min(other.min_red);
        self.counter.extend(other.counter);
        self.counter.sort_unstable();
        self.counter.truncate(MAX_COUNTEREXAMPLES);
        self
    }
}

/// Checks every assignment of the original variables.
pub fn verify_equivalence(
    q: &QuboMatrix,
    qmod: &QuboMatrix,
    trace: &ReductionTrace,
    limits: VerifyLimits,
) -> Result<EquivalenceReport> {
    let n = q.n();
    if n != trace.original_n {
        return Err(Error::TraceMismatch(format!(
            "original matrix has {n} variables, trace expects {}",
            trace.original_n
        )));
    }
    if n > limits.max_original {
        return Err(Error::EnumerationCap {
            n,
            cap: limits.max_original,
        });
    }
    check_shapes(qmod, trace, limits.max_ancillas)?;

    let mut scaled = IntegerQubo::with_common_scale(&[q, qmod])?;
    let iqmod = scaled.pop().expect("two matrices");
    let iq = scaled.pop().expect("two matrices");
    let blocks = AncillaBlocks::new(&iqmod, n);
    let conflicts = ConflictMasks::new(q);

    let low = n.min(14);
    let tally = (0..1u64 << (n - low))
        .into_par_iter()
        .map(|high| {
            let mut t = Tally::empty();
            let mut fo = LocalFields::new(&iq, high << low);
            let mut fm = LocalFields::new(&iqmod, high << low);
            let mut field = vec![0i128; trace.num_ancillas()];
            for step in 0u64..1 << low {
                if step > 0 {
                    let k = step.trailing_zeros() as usize;
                    fo.flip(k);
                    fm.flip(k);
                }
                let mask = fo.mask();
                for (s, f) in field.iter_mut().enumerate() {
                    *f = fm.field(n + s);
                }
                let e = fo.energy();
                let best = fm.energy() + blocks.minimize(&field, None);
                let bad = match classify_mask(&conflicts, trace, mask) {
                    Validity::Valid => {
                        t.valid += 1;
                        t.max_dev = t.max_dev.max((best - e).abs());
                        best != e
                    }
                    Validity::Invalid => {
                        t.invalid += 1;
                        t.non_decrease &= best >= e;
                        best < e
                    }
                };
                if bad {
                    t.push_counter(lex_rank(mask, n), mask);
                }
                t.min_orig = t.min_orig.min(e);
                if best < t.min_red {
                    t.min_red = best;
                    t.orig_at_min_red = e;
                } else if best == t.min_red {
                    t.orig_at_min_red = t.orig_at_min_red.max(e);
                }
            }
            t
        })
        .reduce(Tally::empty, Tally::merge);

    Ok(EquivalenceReport {
        valid_count: tally.valid,
        invalid_count: tally.invalid,
        max_valid_energy_deviation: iq.to_rational(tally.max_dev)?,
        invalid_non_decrease: tally.non_decrease,
        optimum_preserved: tally.min_red == tally.min_orig
            && tally.orig_at_min_red == tally.min_orig,
        min_energy_original: iq.to_rational(tally.min_orig)?,
        min_energy_reduced: iq.to_rational(tally.min_red)?,
        counterexamples: tally
            .counter
            .iter()
            .map(|&(_, m)| Assignment::from_mask(m, n))
            .collect(),
    })
}

/// One of the eight `(x_i, x_j, x_a)` cases of a factoring step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CaseCheck {
    /// 1-based case number: 000, 001, 100, 101, 010, 011, 110, 111.
    pub case: u8,
    pub bits: (bool, bool, bool),
    pub measured: Rational,
    pub expected: Rational,
}

impl CaseCheck {
    pub fn holds(&self) -> bool {
        self.measured == self.expected
    }
}

/// Energy change of a single step for each `(x_i, x_j, x_a)`, with the other
/// variables taken from `context`, against the closed form in terms of `z`
/// and `S = sum_{k in syms} Q_ik x_k`.
pub fn certify_step(
    before: &QuboMatrix,
    after: &QuboMatrix,
    step: &Step,
    context: &Assignment,
) -> Result<Vec<CaseCheck>> {
    if context.len() != before.n() {
        return Err(Error::DimensionMismatch {
            expected: before.n(),
            got: context.len(),
        });
    }
    if after.n() != before.n() + 1 || step.ancilla != before.n() {
        return Err(Error::TraceMismatch(
            "step does not add exactly one trailing ancilla".into(),
        ));
    }
    let (i, j) = step.pair;
    let z = step.z;
    let s: Rational = step
        .syms
        .iter()
        .filter(|&&k| context.get(k))
        .map(|&k| before.get(i, k))
        .sum();
    let cases = [
        ((false, false, false), Rational::zero()),
        ((false, false, true), z + s),
        ((true, false, false), z - s),
        ((true, false, true), Rational::zero()),
        ((false, true, false), z - s),
        ((false, true, true), Rational::zero()),
        ((true, true, false), z * 4 - s * 2),
        ((true, true, true), z - s),
    ];
    cases
        .iter()
        .enumerate()
        .map(|(c, &((xi, xj, xa), expected))| {
            let mut y = context.clone();
            y.set(i, xi);
            y.set(j, xj);
            let measured =
                after.energy(&y.concat(&Assignment::new(vec![xa])))? - before.energy(&y)?;
            Ok(CaseCheck {
                case: c as u8 + 1,
                bits: (xi, xj, xa),
                measured,
                expected,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encode::{encode_max_clique, Penalty};
    use crate::graph::Graph;
    use crate::reduce::{factor_semi_symmetries, ZMode};

    fn r(v: i64) -> Rational {
        Rational::from_integer(v)
    }

    fn example(z: ZMode) -> (QuboMatrix, QuboMatrix, ReductionTrace) {
        let g = Graph::from_edges(6, [(0, 2), (0, 3), (0, 5), (1, 3), (2, 5), (3, 4)]).unwrap();
        let q = encode_max_clique(&g, Penalty::new(r(3)).unwrap())
            .unwrap()
            .qubo;
        let (qmod, trace) = factor_semi_symmetries(&q, 1, z).unwrap();
        (q, qmod, trace)
    }

    /// All `2^a` ancilla completions in lexicographic order.
    fn brute_best(
        qmod: &QuboMatrix,
        trace: &ReductionTrace,
        x: &Assignment,
    ) -> (Rational, Assignment) {
        let a = trace.num_ancillas();
        (0..1u64 << a)
            .map(|r| {
                let bits = Assignment::new((0..a).map(|l| r >> (a - 1 - l) & 1 == 1).collect());
                (qmod.energy(&x.concat(&bits)).unwrap(), bits)
            })
            .min_by(|p, q| p.0.cmp(&q.0).then(p.1.cmp(&q.1)))
            .unwrap()
    }

    #[test]
    fn best_ancilla_cases_on_example() {
        let (q, qmod, trace) = example(ZMode::Fixed(r(3)));
        // variables 1 and 4 are the factored pair
        let x: Assignment = "101001".parse().unwrap();
        let (e, bits) = best_ancilla_energy(&qmod, &trace, &x, 20).unwrap();
        assert_eq!(bits, "0".parse().unwrap());
        assert_eq!(e, q.energy(&x).unwrap());

        let x: Assignment = "010000".parse().unwrap();
        let (e, bits) = best_ancilla_energy(&qmod, &trace, &x, 20).unwrap();
        assert_eq!(bits, "1".parse().unwrap());
        assert_eq!(e, q.energy(&x).unwrap());

        // with x_0 set as well, ancilla 0 and 1 tie; the smaller completion wins
        let x: Assignment = "110000".parse().unwrap();
        let (e, bits) = best_ancilla_energy(&qmod, &trace, &x, 20).unwrap();
        assert_eq!(bits, "0".parse().unwrap());
        assert_eq!(e, q.energy(&x).unwrap());

        let empty = ReductionTrace::empty(6);
        let (e, bits) = best_ancilla_energy(&q, &empty, &x, 20).unwrap();
        assert_eq!((e, bits.len()), (q.energy(&x).unwrap(), 0));

        assert!(best_ancilla_energy(&qmod, &trace, &Assignment::zeros(7), 20).is_err());
        assert!(matches!(
            best_ancilla_energy(&qmod, &trace, &x, 0),
            Err(Error::EnumerationCap { .. })
        ));
    }

    #[test]
    fn block_minimization_matches_brute_force() {
        let g = Graph::erdos_renyi(12, 0.25, 5).unwrap();
        let q = encode_max_clique(&g, Penalty::new(r(3)).unwrap())
            .unwrap()
            .qubo;
        for mode in [ZMode::Safe, ZMode::Tight, ZMode::Fixed(r(1))] {
            let (qmod, trace) = factor_semi_symmetries(&q, 6, mode).unwrap();
            assert!(trace.num_ancillas() > 1);
            for m in (0..1u64 << 12).step_by(37) {
                let x = Assignment::from_mask(m, 12);
                assert_eq!(
                    best_ancilla_energy(&qmod, &trace, &x, 20).unwrap(),
                    brute_best(&qmod, &trace, &x)
                );
                if mode != ZMode::Fixed(r(1)) {
                    if let Some(e) = or_completion_energy(&qmod, &trace, &x).unwrap() {
                        assert_eq!(e, brute_best(&qmod, &trace, &x).0);
                    }
                }
            }
        }
    }

    #[test]
    fn classify_examples() {
        let (q, _, trace) = example(ZMode::Fixed(r(3)));
        let c = |s: &str| classify_solution(&q, &trace, &s.parse().unwrap()).unwrap();
        assert_eq!(c("000000"), Validity::Valid);
        assert_eq!(c("010010"), Validity::Invalid);
        assert_eq!(c("010000"), Validity::Valid);
        assert_eq!(c("000010"), Validity::Valid);
        assert_eq!(c("101001"), Validity::Valid);
        // 0 and 1 conflict in the original matrix
        assert_eq!(c("110000"), Validity::Invalid);
        assert!(classify_solution(&q, &trace, &Assignment::zeros(7)).is_err());

        // factored pairs count even when the original has no conflicts left to flag
        let plain = QuboMatrix::new(6);
        assert_eq!(
            classify_solution(&plain, &trace, &"010010".parse().unwrap()).unwrap(),
            Validity::Invalid
        );
        assert_eq!(
            classify_solution(&plain, &trace, &"110000".parse().unwrap()).unwrap(),
            Validity::Valid
        );
    }

    #[test]
    fn project_examples() {
        let (_, _, trace) = example(ZMode::Fixed(r(3)));
        let xm: Assignment = "1010011".parse().unwrap();
        assert_eq!(
            project_assignment(&trace, &xm).unwrap(),
            "101001".parse().unwrap()
        );
        assert!(project_assignment(&trace, &"101001".parse().unwrap()).is_err());
        let empty = ReductionTrace::empty(3);
        let x: Assignment = "011".parse().unwrap();
        assert_eq!(project_assignment(&empty, &x).unwrap(), x);

        let (_, qmod, trace) = example(ZMode::Tight);
        for m in 0..64 {
            let x = Assignment::from_mask(m, 6);
            let (_, bits) = best_ancilla_energy(&qmod, &trace, &x, 20).unwrap();
            assert_eq!(project_assignment(&trace, &x.concat(&bits)).unwrap(), x);
        }
    }

    #[test]
    fn example_with_z9_passes_everything() {
        let (q, qmod, trace) = example(ZMode::Tight);
        let rep = verify_equivalence(&q, &qmod, &trace, VerifyLimits::default()).unwrap();
        assert!(rep.passed(), "{}", rep.render());
        assert_eq!(rep.valid_count + rep.invalid_count, 64);
        assert_eq!(rep.max_valid_energy_deviation, r(0));
        assert_eq!(rep.min_energy_reduced, r(-3));
        assert!(rep.counterexamples.is_empty());
    }

    #[test]
    fn example_with_z3_keeps_optimum_only() {
        let (q, qmod, trace) = example(ZMode::Fixed(r(3)));
        let rep = verify_equivalence(&q, &qmod, &trace, VerifyLimits::default()).unwrap();
        assert!(rep.valid_energy_preserved());
        assert!(!rep.invalid_non_decrease);
        assert!(rep.optimum_preserved);
        assert_eq!(
            (rep.min_energy_original, rep.min_energy_reduced),
            (r(-3), r(-3))
        );
        assert!(!rep.counterexamples.is_empty());
        for x in &rep.counterexamples {
            assert_eq!(classify_solution(&q, &trace, x).unwrap(), Validity::Invalid);
            let (best, _) = best_ancilla_energy(&qmod, &trace, x, 20).unwrap();
            assert!(best < q.energy(x).unwrap());
        }
        assert!(rep.render().contains("optimumPreserved: true"));
    }

    #[test]
    fn trivial_trace_passes() {
        let (q, _, _) = example(ZMode::Tight);
        let rep =
            verify_equivalence(&q, &q, &ReductionTrace::empty(6), VerifyLimits::default()).unwrap();
        assert!(rep.passed());
        // the cliques of the 6-vertex graph, empty set included
        assert_eq!((rep.valid_count, rep.invalid_count), (14, 50));
    }

    #[test]
    fn mismatched_inputs_are_rejected() {
        let (q, qmod, trace) = example(ZMode::Tight);
        let lim = VerifyLimits::default();
        assert!(verify_equivalence(&qmod, &qmod, &trace, lim).is_err());
        assert!(verify_equivalence(&q, &q, &trace, lim).is_err());
        let small = VerifyLimits {
            max_original: 5,
            ..lim
        };
        assert!(matches!(
            verify_equivalence(&q, &qmod, &trace, small),
            Err(Error::EnumerationCap { .. })
        ));
    }

    #[test]
    fn counterexamples_are_lexicographically_smallest() {
        let (q, qmod, trace) = example(ZMode::Fixed(r(1)));
        let rep = verify_equivalence(&q, &qmod, &trace, VerifyLimits::default()).unwrap();
        let mut expected = Vec::new();
        for m in 0..64u64 {
            let x = Assignment::from_mask(m, 6);
            let e = q.energy(&x).unwrap();
            let (best, _) = best_ancilla_energy(&qmod, &trace, &x, 20).unwrap();
            let bad = match classify_solution(&q, &trace, &x).unwrap() {
                Validity::Valid => best != e,
                Validity::Invalid => best < e,
            };
            if bad {
                expected.push(x);
            }
        }
        expected.sort();
        expected.truncate(MAX_COUNTEREXAMPLES);
        assert_eq!(rep.counterexamples, expected);
    }

    #[test]
    fn step_cases_on_example() {
        let (q, qmod, trace) = example(ZMode::Fixed(r(3)));
        let step = &trace.steps[0];
        // all ones: S = 3 + 3 + 3
        let checks = certify_step(&q, &qmod, step, &Assignment::new(vec![true; 6])).unwrap();
        assert!(checks.iter().all(CaseCheck::holds));
        let exp: Vec<Rational> = checks.iter().map(|c| c.expected).collect();
        assert_eq!(
            exp,
            vec![r(0), r(12), r(-6), r(0), r(-6), r(0), r(-6), r(-6)]
        );
    }
}
