//! Penalty QUBO encodings of four graph problems.
//!
//! Every encoding rewards each set variable with `-1` and charges a penalty
//! `A` once for every unordered pair of variables that may not both be set.
//! Variable layouts are row-major:
//!
//! | problem            | tuple                  | index              |
//! |--------------------|------------------------|--------------------|
//! | maximum clique     | `vertex`               | `v`                |
//! | Hamilton cycles    | `(vertex, position)`   | `v * n + p`        |
//! | graph coloring     | `(vertex, color)`      | `v * k + c`        |
//! | graph isomorphism  | `(source, target)`     | `i * n + j`        |

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::qubo::{content_lines, parse_rational, Assignment, QuboMatrix, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProblemKind {
    MaxClique,
    HamiltonCycles,
    GraphColoring,
    GraphIsomorphism,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 4] = [
        ProblemKind::MaxClique,
        ProblemKind::HamiltonCycles,
        ProblemKind::GraphColoring,
        ProblemKind::GraphIsomorphism,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::MaxClique => "maxclique",
            ProblemKind::HamiltonCycles => "hamilton",
            ProblemKind::GraphColoring => "coloring",
            ProblemKind::GraphIsomorphism => "isomorphism",
        }
    }

    fn arity(self) -> usize {
        match self {
            ProblemKind::MaxClique => 1,
            _ => 2,
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProblemKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown problem `{s}`")))
    }
}

/// Penalty weight `A > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Penalty(Rational);

impl Penalty {
    pub fn new(value: Rational) -> Result<Self> {
        if value <= Rational::zero() {
            return Err(Error::InvalidArgument(format!(
                "penalty must be positive, got {value}"
            )));
        }
        Ok(Penalty(value))
    }

    pub fn value(self) -> Rational {
        self.0
    }
}

impl FromStr for Penalty {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Penalty::new(parse_rational(s).map_err(Error::InvalidArgument)?)
    }
}

/// Semantic meaning of one QUBO variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Semantic {
    Vertex(usize),
    /// Vertex at a cycle position.
    Position {
        vertex: usize,
        position: usize,
    },
    Color {
        vertex: usize,
        color: usize,
    },
    /// Vertex of the first graph mapped onto a vertex of the second.
    Mapping {
        source: usize,
        target: usize,
    },
}

impl Semantic {
    fn fields(self) -> Vec<usize> {
        match self {
            Semantic::Vertex(v) => vec![v],
            Semantic::Position { vertex, position } => vec![vertex, position],
            Semantic::Color { vertex, color } => vec![vertex, color],
            Semantic::Mapping { source, target } => vec![source, target],
        }
    }

    fn from_fields(kind: ProblemKind, f: &[usize]) -> Option<Self> {
        Some(match (kind, f) {
            (ProblemKind::MaxClique, &[v]) => Semantic::Vertex(v),
            (ProblemKind::HamiltonCycles, &[vertex, position]) => {
                Semantic::Position { vertex, position }
            }
            (ProblemKind::GraphColoring, &[vertex, color]) => Semantic::Color { vertex, color },
            (ProblemKind::GraphIsomorphism, &[source, target]) => {
                Semantic::Mapping { source, target }
            }
            _ => return None,
        })
    }
}

/// Bijection between semantic tuples and variable indices `0..len`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VariableMap {
    kind: ProblemKind,
    vars: Vec<Semantic>,
    index: HashMap<Semantic, usize>,
}

impl VariableMap {
    fn new(kind: ProblemKind, vars: Vec<Semantic>) -> Result<Self> {
        let mut index = HashMap::with_capacity(vars.len());
        for (i, &s) in vars.iter().enumerate() {
            if index.insert(s, i).is_some() {
                return Err(Error::InvalidArgument(format!(
                    "variable tuple {s:?} appears twice"
                )));
            }
        }
        Ok(VariableMap { kind, vars, index })
    }

    pub fn kind(&self) -> ProblemKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn semantic(&self, index: usize) -> Option<Semantic> {
        self.vars.get(index).copied()
    }

    pub fn index_of(&self, s: Semantic) -> Option<usize> {
        self.index.get(&s).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, Semantic)> + '_ {
        self.vars.iter().copied().enumerate()
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("map {} {}\n", self.kind, self.vars.len());
        for (i, s) in self.iter() {
            out.push_str(&format!("var {i}"));
            for f in s.fields() {
                out.push_str(&format!(" {f}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = content_lines(text);
        let (hline, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "missing `map <problem> <n>` header"))?;
        let (kind, n) = match header.split_whitespace().collect::<Vec<_>>().as_slice() {
            ["map", kind, n] => (
                kind.parse::<ProblemKind>()
                    .map_err(|e| Error::parse(hline, e.to_string()))?,
                n.parse::<usize>()
                    .map_err(|_| Error::parse(hline, "bad variable count"))?,
            ),
            _ => return Err(Error::parse(hline, "expected `map <problem> <n>`")),
        };
        let mut vars = Vec::with_capacity(n);
        for (line, content) in lines {
            let mut fields = content.split_whitespace();
            if fields.next() != Some("var") {
                return Err(Error::parse(line, "expected `var <index> <fields...>`"));
            }
            let nums = fields
                .map(|f| f.parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| Error::parse(line, "bad integer field"))?;
            if nums.len() != 1 + kind.arity() {
                return Err(Error::parse(
                    line,
                    format!("{kind} variables take {} fields", kind.arity()),
                ));
            }
            if nums[0] != vars.len() {
                return Err(Error::parse(
                    line,
                    format!("expected variable {}, found {}", vars.len(), nums[0]),
                ));
            }
            vars.push(Semantic::from_fields(kind, &nums[1..]).expect("arity checked"));
        }
        if vars.len() != n {
            return Err(Error::parse(
                hline,
                format!("header declares {n} variables, found {}", vars.len()),
            ));
        }
        VariableMap::new(kind, vars).map_err(|e| Error::parse(hline, e.to_string()))
    }
}

/// A problem instance together with everything needed to decode solutions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Problem {
    MaxClique(Graph),
    HamiltonCycles(Graph),
    GraphColoring { graph: Graph, colors: usize },
    GraphIsomorphism { g1: Graph, g2: Graph },
}

#[derive(Clone, Debug)]
pub struct Encoded {
    pub qubo: QuboMatrix,
    pub map: VariableMap,
}

impl Problem {
    pub fn kind(&self) -> ProblemKind {
        match self {
            Problem::MaxClique(_) => ProblemKind::MaxClique,
            Problem::HamiltonCycles(_) => ProblemKind::HamiltonCycles,
            Problem::GraphColoring { .. } => ProblemKind::GraphColoring,
            Problem::GraphIsomorphism { .. } => ProblemKind::GraphIsomorphism,
        }
    }

    pub fn num_vertices(&self) -> usize {
        match self {
            Problem::MaxClique(g) | Problem::HamiltonCycles(g) => g.num_vertices(),
            Problem::GraphColoring { graph, .. } => graph.num_vertices(),
            Problem::GraphIsomorphism { g1, .. } => g1.num_vertices(),
        }
    }

    pub fn num_variables(&self) -> usize {
        let n = self.num_vertices();
        match self {
            Problem::MaxClique(_) => n,
            Problem::GraphColoring { colors, .. } => n * colors,
            _ => n * n,
        }
    }

    /// 3 for maximum clique; one more than the variable count otherwise, so
    /// a single violated constraint outweighs every reward.
    pub fn default_penalty(&self) -> Penalty {
        match self {
            Problem::MaxClique(_) => Penalty(Rational::from_integer(3)),
            _ => Penalty(Rational::from_integer(self.num_variables() as i64 + 1)),
        }
    }

    pub fn encode(&self, penalty: Penalty) -> Result<Encoded> {
        match self {
            Problem::MaxClique(g) => encode_max_clique(g, penalty),
            Problem::HamiltonCycles(g) => encode_hamilton_cycles(g, penalty),
            Problem::GraphColoring { graph, colors } => {
                encode_graph_coloring(graph, *colors, penalty)
            }
            Problem::GraphIsomorphism { g1, g2 } => encode_graph_isomorphism(g1, g2, penalty),
        }
    }
}

/// Builds `-1` on every diagonal and `A` on every pair `a < b` for which
/// `conflict` holds.
fn build<F>(
    kind: ProblemKind,
    vars: Vec<Semantic>,
    penalty: Penalty,
    conflict: F,
) -> Result<Encoded>
where
    F: Fn(Semantic, Semantic) -> bool,
{
    let n = vars.len();
    let mut q = QuboMatrix::new(n);
    for a in 0..n {
        q.set(a, a, -Rational::one())?;
        for b in a + 1..n {
            if conflict(vars[a], vars[b]) {
                q.set(a, b, penalty.value())?;
            }
        }
    }
    Ok(Encoded {
        qubo: q,
        map: VariableMap::new(kind, vars)?,
    })
}

fn pairs(rows: usize, cols: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..rows).flat_map(move |r| (0..cols).map(move |c| (r, c)))
}

fn cycle_adjacent(p1: usize, p2: usize, len: usize) -> bool {
    (p1 + 1) % len == p2 || (p2 + 1) % len == p1
}

pub fn encode_max_clique(g: &Graph, penalty: Penalty) -> Result<Encoded> {
    let vars = (0..g.num_vertices()).map(Semantic::Vertex).collect();
    build(ProblemKind::MaxClique, vars, penalty, |a, b| match (a, b) {
        (Semantic::Vertex(u), Semantic::Vertex(v)) => !g.has_edge(u, v),
        _ => unreachable!(),
    })
}

pub fn encode_hamilton_cycles(g: &Graph, penalty: Penalty) -> Result<Encoded> {
    let n = g.num_vertices();
    if n < 3 {
        return Err(Error::InvalidArgument(format!(
            "Hamilton cycles need at least 3 vertices, got {n}"
        )));
    }
    let vars = pairs(n, n)
        .map(|(vertex, position)| Semantic::Position { vertex, position })
        .collect();
    build(ProblemKind::HamiltonCycles, vars, penalty, |a, b| {
        match (a, b) {
            (
                Semantic::Position {
                    vertex: v1,
                    position: p1,
                },
                Semantic::Position {
                    vertex: v2,
                    position: p2,
                },
            ) => v1 == v2 || p1 == p2 || (cycle_adjacent(p1, p2, n) && !g.has_edge(v1, v2)),
            _ => unreachable!(),
        }
    })
}

pub fn encode_graph_coloring(g: &Graph, colors: usize, penalty: Penalty) -> Result<Encoded> {
    if colors == 0 {
        return Err(Error::InvalidArgument("need at least one color".into()));
    }
    let vars = pairs(g.num_vertices(), colors)
        .map(|(vertex, color)| Semantic::Color { vertex, color })
        .collect();
    build(ProblemKind::GraphColoring, vars, penalty, |a, b| {
        match (a, b) {
            (
                Semantic::Color {
                    vertex: i,
                    color: c1,
                },
                Semantic::Color {
                    vertex: j,
                    color: c2,
                },
            ) => i == j || (c1 == c2 && g.has_edge(i, j)),
            _ => unreachable!(),
        }
    })
}

pub fn encode_graph_isomorphism(g1: &Graph, g2: &Graph, penalty: Penalty) -> Result<Encoded> {
    let n = g1.num_vertices();
    if g2.num_vertices() != n {
        return Err(Error::InvalidArgument(format!(
            "graphs have {} and {} vertices",
            n,
            g2.num_vertices()
        )));
    }
    let vars = pairs(n, n)
        .map(|(source, target)| Semantic::Mapping { source, target })
        .collect();
    build(
        ProblemKind::GraphIsomorphism,
        vars,
        penalty,
        |a, b| match (a, b) {
            (
                Semantic::Mapping {
                    source: i1,
                    target: j1,
                },
                Semantic::Mapping {
                    source: i2,
                    target: j2,
                },
            ) => i1 == i2 || j1 == j2 || g1.has_edge(i1, i2) != g2.has_edge(j1, j2),
            _ => unreachable!(),
        },
    )
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Solution {
    /// Selected vertices in ascending order.
    Clique(Vec<usize>),
    /// Vertex at each cycle position; `None` where zero or several are set.
    Tour(Vec<Option<usize>>),
    /// Color of each vertex; `None` where zero or several are set.
    Coloring(Vec<Option<usize>>),
    /// Target of each source vertex; `None` where zero or several are set.
    Mapping(Vec<Option<usize>>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decoded {
    pub solution: Solution,
    /// No pairwise constraint is violated (no penalty term is active).
    pub feasible: bool,
    /// Feasible and complete: a clique, a Hamilton cycle, a proper coloring
    /// of every vertex, or an isomorphism.
    pub valid: bool,
}

/// `slots[r]` lists the columns set in row `r` of a row-major 0/1 grid.
fn grid(x: &Assignment, rows: usize, cols: usize) -> Vec<Vec<usize>> {
    (0..rows)
        .map(|r| (0..cols).filter(|&c| x.get(r * cols + c)).collect())
        .collect()
}

fn single(v: &[usize]) -> Option<usize> {
    match v {
        [one] => Some(*one),
        _ => None,
    }
}

fn transpose(rows: &[Vec<usize>], cols: usize) -> Vec<Vec<usize>> {
    let mut t = vec![Vec::new(); cols];
    for (r, cs) in rows.iter().enumerate() {
        for &c in cs {
            t[c].push(r);
        }
    }
    t
}

/// Reads `x` back into problem terms and checks it classically, without
/// consulting the QUBO. Invalid assignments are reported, never rejected.
pub fn decode_and_validate(
    problem: &Problem,
    map: &VariableMap,
    x: &Assignment,
) -> Result<Decoded> {
    if map.kind() != problem.kind() {
        return Err(Error::InvalidArgument(format!(
            "map is for {} but problem is {}",
            map.kind(),
            problem.kind()
        )));
    }
    if x.len() != map.len() || map.len() != problem.num_variables() {
        return Err(Error::DimensionMismatch {
            expected: map.len(),
            got: x.len(),
        });
    }
    let n = problem.num_vertices();
    Ok(match problem {
        Problem::MaxClique(g) => {
            let set: Vec<usize> = (0..n).filter(|&v| x.get(v)).collect();
            let ok = set
                .iter()
                .enumerate()
                .all(|(a, &u)| set[a + 1..].iter().all(|&v| g.has_edge(u, v)));
            Decoded {
                solution: Solution::Clique(set),
                feasible: ok,
                valid: ok,
            }
        }
        Problem::HamiltonCycles(g) => {
            let by_vertex = grid(x, n, n);
            let by_position = transpose(&by_vertex, n);
            let at_most_one =
                by_vertex.iter().all(|p| p.len() <= 1) && by_position.iter().all(|v| v.len() <= 1);
            let tour: Vec<Option<usize>> = by_position.iter().map(|v| single(v)).collect();
            let edges_ok = (0..n).all(|p| match (tour[p], tour[(p + 1) % n]) {
                (Some(u), Some(v)) => g.has_edge(u, v),
                _ => true,
            });
            let feasible = at_most_one && edges_ok;
            Decoded {
                valid: feasible && tour.iter().all(Option::is_some),
                solution: Solution::Tour(tour),
                feasible,
            }
        }
        Problem::GraphColoring { graph, colors } => {
            let by_vertex = grid(x, n, *colors);
            let coloring: Vec<Option<usize>> = by_vertex.iter().map(|c| single(c)).collect();
            let feasible = by_vertex.iter().all(|c| c.len() <= 1)
                && graph
                    .edges()
                    .all(|(u, v)| coloring[u].is_none() || coloring[u] != coloring[v]);
            Decoded {
                valid: feasible && coloring.iter().all(Option::is_some),
                solution: Solution::Coloring(coloring),
                feasible,
            }
        }
        Problem::GraphIsomorphism { g1, g2 } => {
            let by_source = grid(x, n, n);
            let by_target = transpose(&by_source, n);
            let mapping: Vec<Option<usize>> = by_source.iter().map(|t| single(t)).collect();
            let injective =
                by_source.iter().all(|t| t.len() <= 1) && by_target.iter().all(|s| s.len() <= 1);
            let preserving = (0..n).all(|a| {
                (a + 1..n).all(|b| match (mapping[a], mapping[b]) {
                    (Some(ja), Some(jb)) => g1.has_edge(a, b) == g2.has_edge(ja, jb),
                    _ => true,
                })
            });
            let feasible = injective && preserving;
            Decoded {
                valid: feasible && mapping.iter().all(Option::is_some),
                solution: Solution::Mapping(mapping),
                feasible,
            }
        }
    })
}
