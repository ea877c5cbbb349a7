//! Undirected simple graphs and the edge-list file format.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::qubo::content_lines;

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Graph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Graph {
            n,
            edges: BTreeSet::new(),
        }
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Graph::empty(n);
        for u in 0..n {
            for v in u + 1..n {
                g.edges.insert((u, v));
            }
        }
        g
    }

    /// Path `0 - 1 - ... - (n-1)`.
    pub fn path(n: usize) -> Self {
        Graph::from_edges(n, (1..n).map(|v| (v - 1, v))).expect("path edges are valid")
    }

    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut g = Graph::empty(n);
        for (u, v) in edges {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<()> {
        if u == v {
            return Err(Error::Graph(format!("self-loop at vertex {u}")));
        }
        if u >= self.n || v >= self.n {
            return Err(Error::Graph(format!(
                "edge ({u}, {v}) out of range for {} vertices",
                self.n
            )));
        }
        self.edges.insert((u.min(v), u.max(v)));
        Ok(())
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.contains(&(u.min(v), u.max(v)))
    }

    /// Edges `(u, v)` with `u < v` in sorted order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges
            .iter()
            .filter(|&&(a, b)| a == v || b == v)
            .count()
    }

    pub fn complement(&self) -> Graph {
        let mut g = Graph::empty(self.n);
        for u in 0..self.n {
            for v in u + 1..self.n {
                if !self.has_edge(u, v) {
                    g.edges.insert((u, v));
                }
            }
        }
        g
    }

    /// Relabels vertex `v` as `perm[v]`.
    pub fn permute(&self, perm: &[usize]) -> Result<Graph> {
        if perm.len() != self.n {
            return Err(Error::Graph(format!(
                "permutation has {} entries for {} vertices",
                perm.len(),
                self.n
            )));
        }
        let mut hit = vec![false; self.n];
        for &p in perm {
            if p >= self.n || std::mem::replace(&mut hit[p], true) {
                return Err(Error::Graph(format!("{perm:?} is not a bijection")));
            }
        }
        Graph::from_edges(self.n, self.edges().map(|(u, v)| (perm[u], perm[v])))
    }

    /// G(n, p) with a ChaCha8 stream seeded by `seed`. Pairs are visited
    /// row-major over `u < v` and each is kept with probability `p_edge`, so a
    /// given `(n, p_edge, seed)` yields the same graph on every platform.
    pub fn erdos_renyi(n: usize, p_edge: f64, seed: u64) -> Result<Graph> {
        if !(0.0..=1.0).contains(&p_edge) {
            return Err(Error::InvalidArgument(format!(
                "edge probability {p_edge} not in [0, 1]"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = Graph::empty(n);
        for u in 0..n {
            for v in u + 1..n {
                if rng.gen_bool(p_edge) {
                    g.edges.insert((u, v));
                }
            }
        }
        Ok(g)
    }

    pub fn parse(text: &str) -> Result<Graph> {
        let mut lines = content_lines(text);
        let (hline, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "missing `graph <numVertices>` header"))?;
        let n = match header.split_whitespace().collect::<Vec<_>>().as_slice() {
            ["graph", n] => n
                .parse::<usize>()
                .map_err(|_| Error::parse(hline, "bad vertex count"))?,
            _ => return Err(Error::parse(hline, "expected `graph <numVertices>`")),
        };
        let mut g = Graph::empty(n);
        for (line, content) in lines {
            let fields: Vec<&str> = content.split_whitespace().collect();
            let [u, v] = fields.as_slice() else {
                return Err(Error::parse(line, "expected `<u> <v>`"));
            };
            let u: usize = u.parse().map_err(|_| Error::parse(line, "bad vertex"))?;
            let v: usize = v.parse().map_err(|_| Error::parse(line, "bad vertex"))?;
            g.add_edge(u, v).map_err(|e| match e {
                Error::Graph(msg) => Error::parse(line, msg),
                other => other,
            })?;
        }
        Ok(g)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("graph {}\n", self.n);
        for (u, v) in self.edges() {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }
}

/// Uniform permutation of `0..n` from a ChaCha8 stream seeded by `seed`.
pub fn random_permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    perm
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_examples() {
        let g = Graph::parse("graph 3\n0 1\n1 2").unwrap();
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1), (1, 2)]);
        assert!(!g.has_edge(0, 2));

        let g = Graph::parse("graph 2\n0 1\n1 0").unwrap();
        assert_eq!(g.num_edges(), 1);

        let err = Graph::parse("graph 2\n1 1").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, ref msg } if msg.contains("self-loop")));
        assert!(matches!(
            Graph::parse("graph 2\n0 2"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            Graph::parse("# c\ngraph 2\n0 1 2"),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(Graph::parse("vertices 2").is_err());
    }

    #[test]
    fn writer_sorts_edges() {
        let g = Graph::from_edges(4, [(3, 2), (1, 0), (0, 3)]).unwrap();
        assert_eq!(g.to_text(), "graph 4\n0 1\n0 3\n2 3\n");
        assert_eq!(Graph::parse(&g.to_text()).unwrap(), g);
    }

    #[test]
    fn erdos_renyi_examples() {
        assert_eq!(Graph::erdos_renyi(5, 0.0, 7).unwrap().num_edges(), 0);
        assert_eq!(Graph::erdos_renyi(5, 1.0, 7).unwrap(), Graph::complete(5));
        assert_eq!(
            Graph::erdos_renyi(6, 0.5, 1).unwrap(),
            Graph::erdos_renyi(6, 0.5, 1).unwrap()
        );
        assert!(Graph::erdos_renyi(6, 1.5, 1).is_err());
    }

    #[test]
    fn complement_examples() {
        assert_eq!(Graph::complete(5).complement(), Graph::empty(5));
        assert_eq!(Graph::empty(4).complement(), Graph::complete(4));
    }

    #[test]
    fn permute_examples() {
        let g = Graph::path(3);
        assert_eq!(g.permute(&[0, 1, 2]).unwrap(), g);
        // path 0-1-2 relabelled by 0->2, 1->0, 2->1 is the path 2-0-1
        let p = g.permute(&[2, 0, 1]).unwrap();
        assert_eq!(p.edges().collect::<Vec<_>>(), vec![(0, 1), (0, 2)]);

        let iso = Graph::from_edges(4, [(0, 1)]).unwrap();
        assert_eq!(iso.permute(&[0, 1, 3, 2]).unwrap(), iso);

        assert!(g.permute(&[0, 0, 1]).is_err());
        assert!(g.permute(&[0, 1]).is_err());
        assert!(g.permute(&[0, 1, 3]).is_err());
    }

    proptest! {
        #[test]
        fn complement_partitions_pairs(n in 0usize..12, p in 0.0f64..=1.0, seed in any::<u64>()) {
            let g = Graph::erdos_renyi(n, p, seed).unwrap();
            let c = g.complement();
            prop_assert_eq!(g.num_edges() + c.num_edges(), n * n.saturating_sub(1) / 2);
            prop_assert_eq!(c.complement(), g);
        }

        #[test]
        fn permutation_preserves_degrees(n in 1usize..12, seed in any::<u64>()) {
            let g = Graph::erdos_renyi(n, 0.4, seed).unwrap();
            let perm = random_permutation(n, seed ^ 0x5eed);
            let h = g.permute(&perm).unwrap();
            prop_assert_eq!(g.num_edges(), h.num_edges());
            let mut dg: Vec<_> = (0..n).map(|v| g.degree(v)).collect();
            let mut dh: Vec<_> = (0..n).map(|v| h.degree(v)).collect();
            dg.sort_unstable();
            dh.sort_unstable();
            prop_assert_eq!(dg, dh);
            for (u, v) in g.edges() {
                prop_assert!(h.has_edge(perm[u], perm[v]));
            }
        }
    }
}
