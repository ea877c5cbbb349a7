//! Sparse symmetric QUBO matrices with exact rational entries.
//!
//! Entries are stored once per unordered index pair. The energy of an
//! assignment `x` is the upper-triangular sum
//!
//! ```text
//! H(x) = sum_{i <= j} x_i x_j Q_ij
//! ```
//!
//! so a diagonal entry is a linear term and an off-diagonal entry is a
//! coupling that is paid once when both variables are set.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use num_traits::{Signed, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};

pub type Rational = num_rational::Rational64;

/// Largest variable count accepted by exhaustive enumeration unless the
/// caller raises it.
pub const DEFAULT_ENUMERATION_CAP: usize = 24;

/// A binary solution vector.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assignment(Vec<bool>);

impl Assignment {
    pub fn new(bits: Vec<bool>) -> Self {
        Assignment(bits)
    }

    pub fn zeros(n: usize) -> Self {
        Assignment(vec![false; n])
    }

    /// Bit `i` of `mask` becomes variable `i`.
    pub fn from_mask(mask: u64, n: usize) -> Self {
        Assignment((0..n).map(|i| mask >> i & 1 == 1).collect())
    }

    pub fn to_mask(&self) -> u64 {
        debug_assert!(self.0.len() <= 64);
        self.0
            .iter()
            .enumerate()
            .fold(0, |m, (i, &b)| if b { m | 1 << i } else { m })
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn set(&mut self, i: usize, value: bool) {
        self.0[i] = value;
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    /// `self ++ tail`
    pub fn concat(&self, tail: &Assignment) -> Assignment {
        let mut bits = self.0.clone();
        bits.extend_from_slice(&tail.0);
        Assignment(bits)
    }

    pub fn prefix(&self, len: usize) -> Assignment {
        Assignment(self.0[..len].to_vec())
    }
}

impl From<Vec<bool>> for Assignment {
    fn from(bits: Vec<bool>) -> Self {
        Assignment(bits)
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Assignment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidArgument(format!(
                    "assignment contains '{other}', expected only 0 and 1"
                ))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Assignment)
    }
}

/// Rank of `mask` in lexicographic order of the bit vectors it encodes
/// (variable 0 is the most significant position).
pub(crate) fn lex_rank(mask: u64, n: usize) -> u64 {
    if n == 0 {
        0
    } else {
        mask.reverse_bits() >> (64 - n)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuboStats {
    pub num_variables: usize,
    pub num_couplings: usize,
    pub density: f64,
    pub cnot_count: u64,
    pub zz_layer_count: usize,
}

/// Symmetric sparse matrix. Row `i` keeps every nonzero `(i, j)`, including
/// the diagonal, so both orientations of a coupling are stored and always
/// updated together.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct QuboMatrix {
    n: usize,
    rows: Vec<BTreeMap<usize, Rational>>,
    couplings: usize,
}

impl QuboMatrix {
    pub fn new(n: usize) -> Self {
        QuboMatrix {
            n,
            rows: vec![BTreeMap::new(); n],
            couplings: 0,
        }
    }

    pub fn from_entries<I>(n: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, Rational)>,
    {
        let mut q = QuboMatrix::new(n);
        for (i, j, v) in entries {
            q.set(i, j, v)?;
        }
        Ok(q)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn check(&self, i: usize, j: usize) -> Result<()> {
        if i >= self.n || j >= self.n {
            return Err(Error::IndexOutOfRange { i, j, n: self.n });
        }
        Ok(())
    }

    /// Symmetric read; absent entries are zero. Out-of-range indices read as zero.
    pub fn get(&self, i: usize, j: usize) -> Rational {
        self.rows
            .get(i)
            .and_then(|row| row.get(&j))
            .copied()
            .unwrap_or_else(Rational::zero)
    }

    /// Stores `v` at the unordered pair `{i, j}`; writing zero removes the entry.
    pub fn set(&mut self, i: usize, j: usize, v: Rational) -> Result<()> {
        self.check(i, j)?;
        let existed = self.rows[i].contains_key(&j);
        if v.is_zero() {
            self.rows[i].remove(&j);
            self.rows[j].remove(&i);
            if existed && i != j {
                self.couplings -= 1;
            }
        } else {
            self.rows[i].insert(j, v);
            self.rows[j].insert(i, v);
            if !existed && i != j {
                self.couplings += 1;
            }
        }
        Ok(())
    }

    pub fn add(&mut self, i: usize, j: usize, v: Rational) -> Result<()> {
        let cur = self.get(i, j);
        self.set(i, j, cur + v)
    }

    /// Appends `extra` variables with no entries and returns the first new index.
    pub fn grow(&mut self, extra: usize) -> usize {
        let first = self.n;
        self.n += extra;
        self.rows.resize(self.n, BTreeMap::new());
        first
    }

    /// Entries `(i, j, v)` with `i <= j`, sorted by `(i, j)`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, Rational)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.range(i..).map(move |(&j, &v)| (i, j, v)))
    }

    pub fn couplings(&self) -> impl Iterator<Item = (usize, usize, Rational)> + '_ {
        self.entries().filter(|&(i, j, _)| i != j)
    }

    /// Off-diagonal nonzeros of row `i` as `(j, Q_ij)`, sorted by `j`.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, Rational)> + '_ {
        self.rows[i]
            .iter()
            .filter(move |(&j, _)| j != i)
            .map(|(&j, &v)| (j, v))
    }

    /// All nonzeros of row `i`, diagonal included.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, Rational)> + '_ {
        self.rows[i].iter().map(|(&j, &v)| (j, v))
    }

    pub fn num_entries(&self) -> usize {
        self.entries().count()
    }

    pub fn num_couplings(&self) -> usize {
        self.couplings
    }

    pub fn coupling_degree(&self, i: usize) -> usize {
        self.rows[i].len() - usize::from(self.rows[i].contains_key(&i))
    }

    pub fn energy(&self, x: &Assignment) -> Result<Rational> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        Ok(self
            .entries()
            .filter(|&(i, j, _)| x.get(i) && x.get(j))
            .map(|(_, _, v)| v)
            .sum())
    }

    pub fn stats(&self, layers: u64) -> QuboStats {
        let c = self.couplings;
        let pairs = self.n * self.n.saturating_sub(1) / 2;
        QuboStats {
            num_variables: self.n,
            num_couplings: c,
            density: if pairs == 0 {
                0.0
            } else {
                c as f64 / pairs as f64
            },
            cnot_count: 2 * c as u64 * layers,
            zz_layer_count: self.zz_layer_count(),
        }
    }

    /// Greedy edge coloring of the coupling graph, edges taken in `(i, j)`
    /// order. Each color class is a set of two-qubit interactions with no
    /// shared qubit, so the class count is a proxy for ZZ-layer depth.
    pub fn zz_layer_count(&self) -> usize {
        let mut used: Vec<Vec<bool>> = vec![Vec::new(); self.n];
        let mut colors = 0;
        for (i, j, _) in self.couplings() {
            let c = (0..)
                .find(|&c| {
                    !used[i].get(c).copied().unwrap_or(false)
                        && !used[j].get(c).copied().unwrap_or(false)
                })
                .expect("unbounded search");
            for v in [i, j] {
                if used[v].len() <= c {
                    used[v].resize(c + 1, false);
                }
                used[v][c] = true;
            }
            colors = colors.max(c + 1);
        }
        colors
    }

    pub fn max_abs_entry(&self) -> Rational {
        self.entries()
            .map(|(_, _, v)| v.abs())
            .max()
            .unwrap_or_else(Rational::zero)
    }

    pub fn min_abs_entry(&self) -> Rational {
        self.entries()
            .map(|(_, _, v)| v.abs())
            .min()
            .unwrap_or_else(Rational::zero)
    }

    /// All `2^n` assignments sorted by energy, ties in lexicographic bit order.
    pub fn enumerate_spectrum(&self, cap: usize) -> Result<Spectrum> {
        if self.n > cap || self.n > 62 {
            return Err(Error::EnumerationCap {
                n: self.n,
                cap: cap.min(62),
            });
        }
        let iq = IntegerQubo::from_matrix(self)?;
        let energies = iq.all_energies();
        let mut order: Vec<u64> = (0..1u64 << self.n).collect();
        order.par_sort_unstable_by_key(|&m| (energies[m as usize], lex_rank(m, self.n)));
        let entries = order
            .into_iter()
            .map(|m| Ok((m, iq.to_rational(energies[m as usize])?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Spectrum { n: self.n, entries })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = content_lines(text);
        let (hline, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "missing `qubo <n> <m>` header"))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let (n, m) = match fields.as_slice() {
            ["qubo", n, m] => (
                n.parse::<usize>()
                    .map_err(|_| Error::parse(hline, "bad variable count"))?,
                m.parse::<usize>()
                    .map_err(|_| Error::parse(hline, "bad entry count"))?,
            ),
            _ => return Err(Error::parse(hline, "expected `qubo <n> <m>`")),
        };
        let mut q = QuboMatrix::new(n);
        let mut seen = std::collections::BTreeSet::new();
        let mut count = 0;
        for (line, content) in lines {
            let fields: Vec<&str> = content.split_whitespace().collect();
            let [i, j, v] = fields.as_slice() else {
                return Err(Error::parse(line, "expected `<i> <j> <value>`"));
            };
            let i: usize = i.parse().map_err(|_| Error::parse(line, "bad row index"))?;
            let j: usize = j
                .parse()
                .map_err(|_| Error::parse(line, "bad column index"))?;
            let v = parse_rational(v).map_err(|msg| Error::parse(line, msg))?;
            if i > j {
                return Err(Error::parse(line, format!("entry ({i}, {j}) has i > j")));
            }
            if j >= n {
                return Err(Error::parse(
                    line,
                    format!("index {j} out of range for {n} variables"),
                ));
            }
            if !seen.insert((i, j)) {
                return Err(Error::parse(line, format!("duplicate entry ({i}, {j})")));
            }
            q.set(i, j, v)?;
            count += 1;
        }
        if count != m {
            return Err(Error::parse(
                hline,
                format!("header declares {m} entries, found {count}"),
            ));
        }
        Ok(q)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("qubo {} {}\n", self.n, self.num_entries());
        for (i, j, v) in self.entries() {
            out.push_str(&format!("{i} {j} {v}\n"));
        }
        out
    }
}

/// Non-empty lines with `#` comments stripped, paired with 1-based line numbers.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(k, raw)| {
        let content = raw.split('#').next().unwrap_or("").trim();
        (!content.is_empty()).then_some((k + 1, content))
    })
}

/// Parses `p/q`, an integer, or a plain decimal such as `-0.25` exactly.
pub fn parse_rational(s: &str) -> std::result::Result<Rational, String> {
    let bad = || format!("cannot parse `{s}` as a rational");
    if let Some((p, q)) = s.split_once('/') {
        let p: i64 = p.trim().parse().map_err(|_| bad())?;
        let q: i64 = q.trim().parse().map_err(|_| bad())?;
        if q == 0 {
            return Err(format!("zero denominator in `{s}`"));
        }
        return Ok(Rational::new(p, q));
    }
    if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) || frac.len() > 18 {
            return Err(bad());
        }
        let negative = int.trim_start().starts_with('-');
        let int_part: i64 = match int.trim_start_matches(['-', '+']) {
            "" => 0,
            digits => digits.parse().map_err(|_| bad())?,
        };
        let den = 10i64.pow(frac.len() as u32);
        let num = int_part
            .checked_mul(den)
            .and_then(|v| v.checked_add(frac.parse::<i64>().ok()?))
            .ok_or_else(bad)?;
        let r = Rational::new(num, den);
        return Ok(if negative { -r } else { r });
    }
    s.parse::<i64>()
        .map(Rational::from_integer)
        .map_err(|_| bad())
}

/// Exhaustive spectrum. Assignments are stored as masks (bit `i` is variable `i`).
#[derive(Clone, Debug)]
pub struct Spectrum {
    n: usize,
    entries: Vec<(u64, Rational)>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn min_energy(&self) -> Rational {
        self.entries[0].1
    }

    pub fn iter(&self) -> impl Iterator<Item = (Assignment, Rational)> + '_ {
        self.entries
            .iter()
            .map(|&(m, e)| (Assignment::from_mask(m, self.n), e))
    }

    pub fn energies(&self) -> impl Iterator<Item = Rational> + '_ {
        self.entries.iter().map(|&(_, e)| e)
    }
}

/// A matrix scaled by the least common denominator of its entries, for
/// enumeration in integer arithmetic. Energies convert back exactly.
#[derive(Clone, Debug)]
pub struct IntegerQubo {
    pub n: usize,
    pub scale: i128,
    pub linear: Vec<i128>,
    pub adj: Vec<Vec<(usize, i128)>>,
}

impl IntegerQubo {
    pub fn from_matrix(q: &QuboMatrix) -> Result<Self> {
        Ok(Self::with_common_scale(&[q])?.remove(0))
    }

    /// Scales several matrices by one shared denominator so their energies
    /// compare directly.
    pub fn with_common_scale(qs: &[&QuboMatrix]) -> Result<Vec<Self>> {
        let mut scale: i128 = 1;
        for q in qs {
            for (_, _, v) in q.entries() {
                scale = scale.lcm(&(*v.denom() as i128));
                if scale > i64::MAX as i128 {
                    return Err(Error::Overflow);
                }
            }
        }
        qs.iter()
            .map(|q| {
                let mut linear = vec![0i128; q.n()];
                let mut adj = vec![Vec::new(); q.n()];
                for (i, row) in q.rows.iter().enumerate() {
                    for (&j, v) in row {
                        let w = (*v.numer() as i128)
                            .checked_mul(scale / *v.denom() as i128)
                            .ok_or(Error::Overflow)?;
                        if i == j {
                            linear[i] = w;
                        } else {
                            adj[i].push((j, w));
                        }
                    }
                }
                Ok(IntegerQubo {
                    n: q.n(),
                    scale,
                    linear,
                    adj,
                })
            })
            .collect()
    }

    pub fn to_rational(&self, v: i128) -> Result<Rational> {
        let g = v.gcd(&self.scale);
        let (num, den) = if g == 0 {
            (0, 1)
        } else {
            (v / g, self.scale / g)
        };
        Ok(Rational::new(
            i64::try_from(num).map_err(|_| Error::Overflow)?,
            i64::try_from(den).map_err(|_| Error::Overflow)?,
        ))
    }

    pub fn energy_mask(&self, mask: u64) -> i128 {
        let mut e = 0;
        for i in 0..self.n {
            if mask >> i & 1 == 1 {
                e += self.linear[i];
                e += self.adj[i]
                    .iter()
                    .filter(|&&(j, _)| j > i && mask >> j & 1 == 1)
                    .map(|&(_, w)| w)
                    .sum::<i128>();
            }
        }
        e
    }

    /// Energies of all `2^n` masks, indexed by mask.
    pub fn all_energies(&self) -> Vec<i128> {
        let n = self.n;
        let low = n.min(16);
        let high = n - low;
        let chunks: Vec<Vec<i128>> = (0..1u64 << high)
            .into_par_iter()
            .map(|h| {
                let mut out = vec![0i128; 1 << low];
                let mut walk = LocalFields::new(self, h << low);
                out[0] = walk.energy();
                for step in 1u64..1 << low {
                    walk.flip(step.trailing_zeros() as usize);
                    out[(walk.mask() & ((1 << low) - 1)) as usize] = walk.energy();
                }
                out
            })
            .collect();
        chunks.concat()
    }
}

/// Incremental energy tracker for single-bit flips.
///
/// `field[k] = Q_kk + sum_{j != k} Q_kj x_j`, so flipping bit `k` changes the
/// energy by `(1 - 2 x_k) * field[k]`.
#[derive(Clone, Debug)]
pub struct LocalFields<'a> {
    q: &'a IntegerQubo,
    mask: u64,
    energy: i128,
    field: Vec<i128>,
}

impl<'a> LocalFields<'a> {
    pub fn new(q: &'a IntegerQubo, mask: u64) -> Self {
        let field = (0..q.n)
            .map(|k| {
                q.linear[k]
                    + q.adj[k]
                        .iter()
                        .filter(|&&(j, _)| mask >> j & 1 == 1)
                        .map(|&(_, w)| w)
                        .sum::<i128>()
            })
            .collect();
        LocalFields {
            q,
            mask,
            energy: q.energy_mask(mask),
            field,
        }
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    pub fn energy(&self) -> i128 {
        self.energy
    }

    pub fn field(&self, k: usize) -> i128 {
        self.field[k]
    }

    pub fn flip_delta(&self, k: usize) -> i128 {
        if self.mask >> k & 1 == 1 {
            -self.field[k]
        } else {
            self.field[k]
        }
    }

    pub fn flip(&mut self, k: usize) {
        self.energy += self.flip_delta(k);
        self.mask ^= 1 << k;
        let on = self.mask >> k & 1 == 1;
        for &(j, w) in &self.q.adj[k] {
            if on {
                self.field[j] += w;
            } else {
                self.field[j] -= w;
            }
        }
    }
}
