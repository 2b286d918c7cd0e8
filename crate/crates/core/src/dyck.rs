//! Dyck graphs over the one-parenthesis alphabet `{ε, &, *}`, the graph
//! representation of APA instances, and the resolved graph.
//!
//! Statement `a = b` becomes `b -ε-> a`, `a = &b` becomes `b -&-> a`, and
//! `a = *b` becomes `b -*-> a`. Stores `*a = b` are kept aside; resolving
//! them adds `b -ε-> c` for every `c` flowing into `a`.

use std::collections::HashSet;
use std::fmt;

use crate::boolmat::BoolMatrix;
use crate::error::{Error, Result};
use crate::instance::{ApaInstance, PointerId, StatementKind};
use crate::oracle;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeLabel {
    Eps,
    /// `&`
    Open,
    /// `*`
    Close,
}

impl EdgeLabel {
    pub const ALL: [EdgeLabel; 3] = [EdgeLabel::Eps, EdgeLabel::Open, EdgeLabel::Close];

    pub fn as_str(self) -> &'static str {
        match self {
            EdgeLabel::Eps => "eps",
            EdgeLabel::Open => "open",
            EdgeLabel::Close => "close",
        }
    }

    /// Change in stack height when traversing an edge with this label.
    #[inline]
    pub fn delta(self) -> i64 {
        match self {
            EdgeLabel::Eps => 0,
            EdgeLabel::Open => 1,
            EdgeLabel::Close => -1,
        }
    }
}

impl fmt::Display for EdgeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DyckEdge {
    pub src: u32,
    pub dst: u32,
    pub label: EdgeLabel,
}

/// Edge-labeled digraph with unique `(src, dst, label)` triples.
#[derive(Clone, Default)]
pub struct DyckGraph {
    n: usize,
    edges: Vec<DyckEdge>,
    index: HashSet<DyckEdge>,
}

impl DyckGraph {
    pub fn new(n: usize) -> Self {
        DyckGraph {
            n,
            edges: Vec::new(),
            index: HashSet::new(),
        }
    }

    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize, EdgeLabel)>) -> Result<Self> {
        let mut g = DyckGraph::new(n);
        for (s, d, l) in edges {
            g.add_edge(s, d, l)?;
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[DyckEdge] {
        &self.edges
    }

    pub fn contains(&self, src: usize, dst: usize, label: EdgeLabel) -> bool {
        self.index.contains(&DyckEdge {
            src: src as u32,
            dst: dst as u32,
            label,
        })
    }

    /// Adds an edge; `Ok(false)` if it was already present.
    pub fn add_edge(&mut self, src: usize, dst: usize, label: EdgeLabel) -> Result<bool> {
        if src >= self.n || dst >= self.n {
            return Err(Error::InvalidParameters(format!(
                "edge {src} -> {dst} out of range for n = {}",
                self.n
            )));
        }
        let e = DyckEdge {
            src: src as u32,
            dst: dst as u32,
            label,
        };
        if self.index.insert(e) {
            self.edges.push(e);
            Ok(true)
        } else {
            Ok(false)
        }
    }

    pub fn edges_with(&self, label: EdgeLabel) -> impl Iterator<Item = &DyckEdge> {
        self.edges.iter().filter(move |e| e.label == label)
    }

    /// Per-label successor lists, indexed `[label][node]`.
    pub fn adjacency(&self) -> [Vec<Vec<u32>>; 3] {
        let mut adj: [Vec<Vec<u32>>; 3] = std::array::from_fn(|_| vec![Vec::new(); self.n]);
        for e in &self.edges {
            adj[e.label as usize][e.src as usize].push(e.dst);
        }
        adj
    }

    /// Adjacency matrix of the edges carrying `label`.
    pub fn label_matrix(&self, label: EdgeLabel) -> BoolMatrix {
        BoolMatrix::from_pairs(
            self.n,
            self.edges_with(label).map(|e| (e.src as usize, e.dst as usize)),
        )
    }

    /// Edge set as a sorted vector, for equality checks independent of
    /// insertion order.
    pub fn sorted_edges(&self) -> Vec<DyckEdge> {
        let mut v = self.edges.clone();
        v.sort_unstable();
        v
    }
}

impl PartialEq for DyckGraph {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.index == other.index
    }
}

impl Eq for DyckGraph {}

impl fmt::Debug for DyckGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DyckGraph(n = {}) ", self.n)?;
        f.debug_list()
            .entries(self.sorted_edges().iter().map(|e| (e.src, e.dst, e.label)))
            .finish()
    }
}

/// All-pairs D-reachability: `(x, y)` is set iff `y` is reachable from `x`
/// along a path whose label is a balanced word.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ReachRelation {
    matrix: BoolMatrix,
}

impl ReachRelation {
    /// Wraps a matrix, forcing the diagonal (the empty path is balanced).
    pub fn from_matrix(mut matrix: BoolMatrix) -> Self {
        matrix.set_diagonal();
        ReachRelation { matrix }
    }

    pub fn n(&self) -> usize {
        self.matrix.dim()
    }

    #[inline]
    pub fn reaches(&self, x: usize, y: usize) -> bool {
        self.matrix.get(x, y)
    }

    pub fn matrix(&self) -> &BoolMatrix {
        &self.matrix
    }

    pub fn pair_count(&self) -> usize {
        self.matrix.count_ones()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.matrix.pairs()
    }
}

/// Dyck graph of the non-store statements plus the store list `(a, b)` for
/// every `*a = b`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DyckRepresentation {
    pub graph: DyckGraph,
    pub type4: Vec<(PointerId, PointerId)>,
}

pub fn build_representation(inst: &ApaInstance) -> DyckRepresentation {
    let mut graph = DyckGraph::new(inst.n());
    let mut type4 = Vec::new();
    for s in inst.statements() {
        let (a, b) = (s.lhs.index(), s.rhs.index());
        let label = match s.kind {
            StatementKind::Assign => EdgeLabel::Eps,
            StatementKind::AddressOf => EdgeLabel::Open,
            StatementKind::LoadDeref => EdgeLabel::Close,
            StatementKind::StoreDeref => {
                type4.push((s.lhs, s.rhs));
                continue;
            }
        };
        graph
            .add_edge(b, a, label)
            .expect("instance ids are in range");
    }
    DyckRepresentation { graph, type4 }
}

/// `b` flows into `a` iff some `b -&-> c` exists with `a` D-reachable
/// from `c`.
pub fn flows_into(g: &DyckGraph, b: usize, a: usize, reach: &ReachRelation) -> bool {
    g.edges_with(EdgeLabel::Open)
        .any(|e| e.src as usize == b && reach.reaches(e.dst as usize, a))
}

/// All flows-into facts as a matrix: row `a` holds every `b` flowing into
/// `a`. Equivalent to applying [`flows_into`] to every pair.
pub fn flows_into_matrix(g: &DyckGraph, reach: &ReachRelation) -> BoolMatrix {
    let mut out = BoolMatrix::zeros(g.n());
    for e in g.edges_with(EdgeLabel::Open) {
        let (b, c) = (e.src as usize, e.dst as usize);
        for a in reach.matrix().row_ones(c) {
            out.set(a, b);
        }
    }
    out
}

/// Reference construction of the resolved graph: recompute exact
/// D-reachability with the bounded-stack oracle, add `b -ε-> c` for every
/// store `*a = b` and every `c` flowing into `a`, and repeat until the edge
/// count stops growing.
pub fn resolve_reference(rep: &DyckRepresentation) -> DyckGraph {
    let mut g = rep.graph.clone();
    if rep.type4.is_empty() {
        return g;
    }
    loop {
        let before = g.edge_count();
        let reach = oracle::dyck_reach_exact(&g);
        let flows = flows_into_matrix(&g, &reach);
        for &(a, b) in &rep.type4 {
            let sources: Vec<usize> = flows.row_ones(a.index()).collect();
            for c in sources {
                g.add_edge(b.index(), c, EdgeLabel::Eps)
                    .expect("ids in range");
            }
        }
        if g.edge_count() == before {
            return g;
        }
    }
}

/// Parses the edge-list format: one `src dst eps|open|close` per line,
/// `#` comments. The node count is one past the largest id, or the value
/// of an optional `nodes <n>` line if larger.
pub fn parse_edge_list(text: &str) -> Result<DyckGraph> {
    let mut declared = 0usize;
    let mut raw = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let err = |message: String| Error::Parse {
            line: lineno,
            message,
        };
        if toks.len() == 2 && toks[0] == "nodes" {
            declared = toks[1]
                .parse()
                .map_err(|_| err(format!("bad node count `{}`", toks[1])))?;
            continue;
        }
        if toks.len() != 3 {
            return Err(err(format!("expected `src dst label`, found `{line}`")));
        }
        let src: usize = toks[0]
            .parse()
            .map_err(|_| err(format!("bad node id `{}`", toks[0])))?;
        let dst: usize = toks[1]
            .parse()
            .map_err(|_| err(format!("bad node id `{}`", toks[1])))?;
        let label = match toks[2] {
            "eps" => EdgeLabel::Eps,
            "open" => EdgeLabel::Open,
            "close" => EdgeLabel::Close,
            other => return Err(err(format!("unknown label `{other}`"))),
        };
        raw.push((src, dst, label));
    }
    let n = raw
        .iter()
        .map(|&(s, d, _)| s.max(d) + 1)
        .max()
        .unwrap_or(0)
        .max(declared);
    DyckGraph::from_edges(n, raw)
}

pub fn serialize_edge_list(g: &DyckGraph) -> String {
    let mut out = format!("nodes {}\n", g.n());
    for e in g.edges() {
        out.push_str(&format!("{} {} {}\n", e.src, e.dst, e.label));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse_instance;
    use EdgeLabel::*;

    pub(crate) const FIG2: &str = "b = &a\nd = &a\nc = &b\nd = &c\n*d = c\nd = *e\ne = *d\ne = &f\n";

    fn id(inst: &ApaInstance, name: &str) -> usize {
        inst.pointer(name).unwrap().index()
    }

    #[test]
    fn address_of_becomes_open_edge() {
        let inst = parse_instance("a = &b").unwrap();
        let rep = build_representation(&inst);
        assert_eq!(rep.graph.edges(), &[DyckEdge { src: 1, dst: 0, label: Open }]);
        assert!(rep.type4.is_empty());
    }

    #[test]
    fn fig2_representation() {
        let inst = parse_instance(FIG2).unwrap();
        let rep = build_representation(&inst);
        let n = |s| id(&inst, s);
        let mut expected = DyckGraph::new(6);
        for (s, d, l) in [
            ("a", "b", Open),
            ("b", "c", Open),
            ("c", "d", Open),
            ("a", "d", Open),
            ("d", "e", Close),
            ("e", "d", Close),
            ("f", "e", Open),
        ] {
            expected.add_edge(n(s), n(d), l).unwrap();
        }
        assert_eq!(rep.graph, expected);
        assert_eq!(
            rep.type4,
            vec![(PointerId(n("d") as u32), PointerId(n("c") as u32))]
        );
    }

    #[test]
    fn store_only_instance() {
        let rep = build_representation(&parse_instance("*a = b\n*b = a\n").unwrap());
        assert_eq!(rep.graph.edge_count(), 0);
        assert_eq!(rep.type4.len(), 2);
    }

    #[test]
    fn flows_into_with_empty_path() {
        let g = DyckGraph::from_edges(2, [(0, 1, Open)]).unwrap();
        let reach = oracle::dyck_reach_exact(&g);
        assert!(flows_into(&g, 0, 1, &reach));
    }

    #[test]
    fn unbalanced_chain_does_not_flow() {
        let g = DyckGraph::from_edges(3, [(0, 1, Open), (1, 2, Open)]).unwrap();
        let reach = oracle::dyck_reach_exact(&g);
        assert!(!flows_into(&g, 0, 2, &reach));
    }

    #[test]
    fn fig3_a_flows_into_d() {
        let inst = parse_instance(FIG2).unwrap();
        let rep = build_representation(&inst);
        let reach = oracle::dyck_reach_exact(&rep.graph);
        assert!(flows_into(&rep.graph, id(&inst, "a"), id(&inst, "d"), &reach));
        // b -&-> c -&-> d -*-> e -*-> d is balanced.
        assert!(reach.reaches(id(&inst, "b"), id(&inst, "d")));
    }

    #[test]
    fn flows_matrix_agrees_with_pairwise_query() {
        let inst = parse_instance(FIG2).unwrap();
        let rep = build_representation(&inst);
        let reach = oracle::dyck_reach_exact(&rep.graph);
        let m = flows_into_matrix(&rep.graph, &reach);
        for a in 0..6 {
            for b in 0..6 {
                assert_eq!(m.get(a, b), flows_into(&rep.graph, b, a, &reach));
            }
        }
    }

    #[test]
    fn resolve_without_stores_is_identity() {
        let rep = build_representation(&parse_instance("a = &b\nc = *a\n").unwrap());
        assert_eq!(resolve_reference(&rep), rep.graph);
    }

    #[test]
    fn resolve_single_step() {
        // x = &a gives a -&-> x; *x = y resolves to y -ε-> a.
        let inst = parse_instance("x = &a\n*x = y\n").unwrap();
        let rep = build_representation(&inst);
        let resolved = resolve_reference(&rep);
        assert!(resolved.contains(id(&inst, "y"), id(&inst, "a"), Eps));
        assert_eq!(resolved.edge_count(), rep.graph.edge_count() + 1);
    }

    #[test]
    fn fig3_resolved_graph_fixture() {
        // Frozen from the reference fixpoint: in the instance as listed only
        // a and c flow into d, so the resolved graph gains c -ε-> a and
        // c -ε-> c (no c -ε-> b).
        let inst = parse_instance(FIG2).unwrap();
        let rep = build_representation(&inst);
        let resolved = resolve_reference(&rep);
        let added: Vec<(usize, usize)> = resolved
            .sorted_edges()
            .into_iter()
            .filter(|e| !rep.graph.contains(e.src as usize, e.dst as usize, e.label))
            .map(|e| (e.src as usize, e.dst as usize))
            .collect();
        let c = id(&inst, "c");
        let mut expected = vec![(c, id(&inst, "a")), (c, c)];
        expected.sort_unstable();
        assert_eq!(added, expected);
        assert!(added.iter().all(|&(s, _)| s == c));
    }

    #[test]
    fn resolve_is_monotone_and_idempotent() {
        let inst = parse_instance(FIG2).unwrap();
        let rep = build_representation(&inst);
        let once = resolve_reference(&rep);
        for e in rep.graph.edges() {
            assert!(once.contains(e.src as usize, e.dst as usize, e.label));
        }
        let twice = resolve_reference(&DyckRepresentation {
            graph: once.clone(),
            type4: rep.type4.clone(),
        });
        assert_eq!(once, twice);
    }

    #[test]
    fn edge_list_round_trip() {
        let g = DyckGraph::from_edges(5, [(0, 1, Open), (1, 2, Close), (3, 3, Eps)]).unwrap();
        let text = serialize_edge_list(&g);
        assert_eq!(parse_edge_list(&text).unwrap(), g);
        assert!(matches!(
            parse_edge_list("0 1 paren\n"),
            Err(Error::Parse { line: 1, .. })
        ));
    }
}
