use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{content_lines, parse_err, parse_usize, Builder, ReductionOutput};
use crate::error::{Error, Result};

/// Simple undirected graph on nodes `1..=n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UndirectedGraph {
    n: usize,
    /// Pairs `(lo, hi)` with `lo < hi`.
    edges: BTreeSet<(usize, usize)>,
}

impl UndirectedGraph {
    pub fn new(n: usize) -> Self {
        UndirectedGraph {
            n,
            edges: BTreeSet::new(),
        }
    }

    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut g = UndirectedGraph::new(n);
        for (u, v) in edges {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<bool> {
        if u == v {
            return Err(Error::InvalidParameters(format!("self-loop at node {u}")));
        }
        if u == 0 || v == 0 || u > self.n || v > self.n {
            return Err(Error::InvalidParameters(format!(
                "edge {u}-{v} outside nodes 1..={}",
                self.n
            )));
        }
        Ok(self.edges.insert((u.min(v), u.max(v))))
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.contains(&(u.min(v), u.max(v)))
    }

    /// Edges as `(lo, hi)`, sorted.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }
}

/// `s ∈ pts(c_1)` iff the graph has a triangle.
///
/// For every edge `{i, j}` with `j < i`: `a_i = b_j`, `b_i = &c_j` and
/// `*a_i = d_j`. Chains `d_1 = &s`, `d_k = &d_{k-1}` and
/// `c_{k-1} = *c_k` connect the levels.
pub fn reduce_triangle(h: &UndirectedGraph) -> Result<ReductionOutput> {
    let n = h.n();
    if n < 3 {
        return Err(Error::InvalidParameters(format!(
            "triangle reduction needs at least 3 nodes, got {n}"
        )));
    }
    let mut b = Builder::new();
    b.ptr("s");
    for i in 1..=n {
        for p in ["a", "b", "c", "d"] {
            b.ptr(&format!("{p}_{i}"));
        }
    }
    for (j, i) in h.edges() {
        b.assign(&format!("a_{i}"), &format!("b_{j}"));
        b.address_of(&format!("b_{i}"), &format!("c_{j}"));
    }
    for (j, i) in h.edges() {
        b.store(&format!("a_{i}"), &format!("d_{j}"));
    }
    b.address_of("d_1", "s");
    for k in 2..=n {
        b.address_of(&format!("d_{k}"), &format!("d_{}", k - 1));
    }
    for k in 2..=n {
        b.load(&format!("c_{}", k - 1), &format!("c_{k}"));
    }
    Ok(b.finish("c_1", "s"))
}

/// Brute-force triple scan.
pub fn check_triangle(h: &UndirectedGraph) -> bool {
    let n = h.n();
    (1..=n).any(|i| {
        (i + 1..=n).any(|j| h.has_edge(i, j) && (j + 1..=n).any(|k| h.has_edge(j, k) && h.has_edge(i, k)))
    })
}

/// Number of triangles as `trace(A³) / 6`.
pub fn count_triangles_by_matrix(h: &UndirectedGraph) -> usize {
    let n = h.n();
    let mut a = vec![vec![0u64; n]; n];
    for (u, v) in h.edges() {
        a[u - 1][v - 1] = 1;
        a[v - 1][u - 1] = 1;
    }
    let mut trace = 0;
    for i in 0..n {
        for j in 0..n {
            if a[i][j] == 0 {
                continue;
            }
            for k in 0..n {
                trace += a[j][k] * a[k][i];
            }
        }
    }
    (trace / 6) as usize
}

/// `G(n, p)`.
pub fn random_graph(n: usize, p: f64, seed: u64) -> UndirectedGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = UndirectedGraph::new(n);
    for u in 1..=n {
        for v in u + 1..=n {
            if rng.gen_bool(p) {
                g.edges.insert((u, v));
            }
        }
    }
    g
}

/// First line `n`, then one `i j` line per edge (nodes `1..=n`).
pub fn parse_graph(text: &str) -> Result<UndirectedGraph> {
    let mut lines = content_lines(text);
    let (line, header) = lines.next().ok_or_else(|| parse_err(1, "missing node count"))?;
    let mut toks = header.split_whitespace();
    let n = parse_usize(toks.next().unwrap_or(""), line)?;
    if toks.next().is_some() {
        return Err(parse_err(line, "node count line has extra tokens"));
    }
    let mut g = UndirectedGraph::new(n);
    for (line, l) in lines {
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(parse_err(line, "expected `i j`"));
        }
        let (u, v) = (parse_usize(toks[0], line)?, parse_usize(toks[1], line)?);
        g.add_edge(u, v).map_err(|e| parse_err(line, e.to_string()))?;
    }
    Ok(g)
}

pub fn serialize_graph(h: &UndirectedGraph) -> String {
    let mut out = format!("{}\n", h.n());
    for (u, v) in h.edges() {
        out.push_str(&format!("{u} {v}\n"));
    }
    out
}
