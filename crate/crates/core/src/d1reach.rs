//! All-pairs D1-reachability by successive doubling over layered graphs.
//!
//! `bell_reach` summarizes bell-shaped paths of growing stack height in a
//! three-copy layered graph; `d1_reach` repeatedly folds those summaries
//! back into the Dyck graph as ε-edges until nothing new appears.

use serde::Serialize;

use crate::boolmat::{ceil_log2, BoolMatrix};
use crate::dyck::{DyckGraph, EdgeLabel, ReachRelation};
use crate::error::{Error, Result};

/// The label of a path.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct PathLabel {
    pub symbols: Vec<EdgeLabel>,
}

impl PathLabel {
    pub fn new(symbols: Vec<EdgeLabel>) -> Self {
        PathLabel { symbols }
    }

    /// Heights after each symbol; the empty prefix (height 0) is omitted.
    pub fn heights(&self) -> Vec<i64> {
        let mut h = 0;
        self.symbols
            .iter()
            .map(|s| {
                h += s.delta();
                h
            })
            .collect()
    }

    pub fn is_balanced(&self) -> bool {
        let p = height_profile(self);
        p.sh == 0 && p.min_h >= 0
    }
}

impl FromIterator<EdgeLabel> for PathLabel {
    fn from_iter<I: IntoIterator<Item = EdgeLabel>>(iter: I) -> Self {
        PathLabel::new(iter.into_iter().collect())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct HeightProfile {
    pub sh: i64,
    pub msh: i64,
    pub min_h: i64,
}

pub fn height_profile(label: &PathLabel) -> HeightProfile {
    let mut p = HeightProfile::default();
    for h in label.heights() {
        p.sh = h;
        p.msh = p.msh.max(h);
        p.min_h = p.min_h.min(h);
    }
    p
}

/// 1-based positions `i` where the path has a local maximum: the height
/// strictly rises into `i` (or `i = 1`), and every later prefix that is
/// strictly higher is preceded by a dip strictly below height `i`.
pub fn local_maxima(label: &PathLabel) -> Vec<usize> {
    let h = label.heights();
    let l = h.len();
    (1..=l)
        .filter(|&i| {
            let hi = h[i - 1];
            if i > 1 && h[i - 2] >= hi {
                return false;
            }
            (i + 1..=l).all(|j| h[j - 1] <= hi || (i + 1..j).any(|m| h[m - 1] < hi))
        })
        .collect()
}

pub fn is_bell_shaped(label: &PathLabel) -> bool {
    local_maxima(label).len() == 1
}

/// Whether the label splits as a monotonically increasing path followed by
/// a monotonically decreasing one. Monotonicity constrains consecutive
/// prefixes of the piece, so its first symbol is free.
pub fn splits_increasing_decreasing(label: &PathLabel) -> bool {
    let s = &label.symbols;
    let increasing = |piece: &[EdgeLabel]| piece.iter().skip(1).all(|&x| x != EdgeLabel::Close);
    let decreasing = |piece: &[EdgeLabel]| piece.iter().skip(1).all(|&x| x != EdgeLabel::Open);
    (0..=s.len()).any(|k| increasing(&s[..k]) && decreasing(&s[k..]))
}

/// Plain digraph over three copies of the Dyck graph's nodes; copy `k` of
/// node `x` has id `(k-1)·base_n + x`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayeredGraph {
    pub base_n: usize,
    pub edges: BoolMatrix,
}

impl LayeredGraph {
    pub fn id(&self, copy: usize, x: usize) -> usize {
        debug_assert!((1..=3).contains(&copy));
        (copy - 1) * self.base_n + x
    }

    /// Single edges: ε as `x₁→y₁` and `x₂→y₂`, `&` as `x₁→y₃`, `*` as
    /// `x₃→y₁`.
    pub fn base(g: &DyckGraph) -> Self {
        let n = g.n();
        let mut edges = BoolMatrix::zeros(3 * n);
        for e in g.edges() {
            let (x, y) = (e.src as usize, e.dst as usize);
            match e.label {
                EdgeLabel::Eps => {
                    edges.set(x, y);
                    edges.set(n + x, n + y);
                }
                EdgeLabel::Open => {
                    edges.set(x, 2 * n + y);
                }
                EdgeLabel::Close => {
                    edges.set(2 * n + x, y);
                }
            }
        }
        LayeredGraph { base_n: n, edges }
    }

    /// The next layered graph from the reachability relation of the
    /// previous one. Copy 2 sits at the previous copy-3 height and copy 3
    /// at twice that.
    pub fn next(base_n: usize, reach: &BoolMatrix) -> Self {
        let n = base_n;
        let mut edges = BoolMatrix::zeros(3 * n);
        let mut buf = vec![0u64; n.div_ceil(64)];
        // (target row copy, target col copy) <- (source row copy, source col copy)
        const RULES: [((usize, usize), (usize, usize)); 6] = [
            ((1, 1), (1, 1)),
            ((2, 2), (1, 1)),
            ((1, 2), (1, 3)),
            ((2, 1), (3, 1)),
            ((2, 3), (1, 3)),
            ((3, 2), (3, 1)),
        ];
        for ((tr, tc), (sr, sc)) in RULES {
            for x in 0..n {
                read_bits(reach.row((sr - 1) * n + x), (sc - 1) * n, n, &mut buf);
                or_bits(edges.row_mut((tr - 1) * n + x), (tc - 1) * n, &buf);
            }
        }
        LayeredGraph { base_n: n, edges }
    }
}

/// Copies `len` bits starting at bit `start` of `row` into `out`.
fn read_bits(row: &[u64], start: usize, len: usize, out: &mut [u64]) {
    let shift = start % 64;
    let first = start / 64;
    for (w, slot) in out.iter_mut().enumerate() {
        let i = first + w;
        let lo = row.get(i).copied().unwrap_or(0);
        *slot = if shift == 0 {
            lo
        } else {
            let hi = row.get(i + 1).copied().unwrap_or(0);
            (lo >> shift) | (hi << (64 - shift))
        };
    }
    let tail = len % 64;
    if tail != 0 {
        if let Some(last) = out.last_mut() {
            *last &= (1u64 << tail) - 1;
        }
    }
}

/// ORs `bits` into `row` starting at bit `start`. `bits` must be clear
/// past its logical length.
fn or_bits(row: &mut [u64], start: usize, bits: &[u64]) {
    let shift = start % 64;
    let first = start / 64;
    for (w, &v) in bits.iter().enumerate() {
        if v == 0 {
            continue;
        }
        let i = first + w;
        if shift == 0 {
            row[i] |= v;
        } else {
            row[i] |= v << shift;
            if i + 1 < row.len() {
                row[i + 1] |= v >> (64 - shift);
            }
        }
    }
}

/// Distance cap `L = n² + 1`.
pub fn distance_cap(n: usize) -> usize {
    n * n + 1
}

/// Bound on both outer iterations and inner doublings:
/// `⌈log₂(n²+1)⌉ + 1`.
pub fn iteration_cap(n: usize) -> usize {
    ceil_log2(distance_cap(n)) + 1
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct BellStats {
    /// Layered graphs built after the base one.
    pub doublings: usize,
    pub squarings: usize,
}

/// Pairs `(x, y)` with `x₁ ⇝ y₁` in the final layered closure.
///
/// This contains every bell-shape-reachable pair, and the closure also
/// composes such paths end to end, so the result can be larger. Every
/// reported pair is D-reachable.
pub fn bell_reach(g: &DyckGraph) -> ReachRelation {
    bell_reach_with_stats(g).0
}

pub fn bell_reach_with_stats(g: &DyckGraph) -> (ReachRelation, BellStats) {
    let n = g.n();
    let cap = distance_cap(n);
    let (mut reach, mut squarings) = LayeredGraph::base(g).edges.transitive_closure_counted(true);
    let mut doublings = 0;
    while (1usize << doublings) - 1 < cap {
        doublings += 1;
        let layered = LayeredGraph::next(n, &reach);
        let (next, sq) = layered.edges.transitive_closure_counted(true);
        squarings += sq;
        let stable = next == reach;
        reach = next;
        if stable {
            break;
        }
    }
    (
        ReachRelation::from_matrix(copy_one_block(&reach, n)),
        BellStats { doublings, squarings },
    )
}

/// The reflexive closures of the base layered graph and of each doubling,
/// `rounds + 1` matrices in all, without early exit.
pub fn layered_closures(g: &DyckGraph, rounds: usize) -> Vec<BoolMatrix> {
    let n = g.n();
    let mut out = vec![LayeredGraph::base(g).edges.transitive_closure(true)];
    for _ in 0..rounds {
        let next = LayeredGraph::next(n, out.last().expect("nonempty")).edges.transitive_closure(true);
        out.push(next);
    }
    out
}

pub fn copy_one_block(reach: &BoolMatrix, n: usize) -> BoolMatrix {
    let mut out = BoolMatrix::zeros(n);
    let mut buf = vec![0u64; n.div_ceil(64)];
    for x in 0..n {
        read_bits(reach.row(x), 0, n, &mut buf);
        out.row_mut(x).copy_from_slice(&buf);
    }
    out
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct D1Stats {
    /// Calls to `bell_reach`, counting the last one that adds nothing.
    pub outer_iterations: usize,
    pub max_doublings: usize,
    pub total_doublings: usize,
    pub total_squarings: usize,
    pub eps_added: usize,
    /// Reachable pairs after each outer iteration.
    pub pairs_per_iteration: Vec<usize>,
}

pub fn d1_reach(g: &DyckGraph) -> ReachRelation {
    d1_reach_with_stats(g)
        .expect("D1 doubling stabilizes within the iteration cap")
        .0
}

pub fn d1_reach_with_stats(g: &DyckGraph) -> Result<(ReachRelation, D1Stats)> {
    d1_reach_limited(g, iteration_cap(g.n()))
}

/// Runs at most `max_outer` outer iterations; running out before the
/// ε-edge set stabilizes is an internal invariant failure.
pub fn d1_reach_limited(g: &DyckGraph, max_outer: usize) -> Result<(ReachRelation, D1Stats)> {
    let mut cur = g.clone();
    let mut stats = D1Stats::default();
    let inner_cap = iteration_cap(g.n());
    while stats.outer_iterations < max_outer {
        stats.outer_iterations += 1;
        let (reach, bell) = bell_reach_with_stats(&cur);
        if bell.doublings > inner_cap {
            return Err(Error::InternalInvariant(format!(
                "bell_reach used {} doublings, cap is {inner_cap}",
                bell.doublings
            )));
        }
        stats.max_doublings = stats.max_doublings.max(bell.doublings);
        stats.total_doublings += bell.doublings;
        stats.total_squarings += bell.squarings;
        stats.pairs_per_iteration.push(reach.pair_count());
        let mut added = 0;
        for (x, y) in reach.pairs() {
            if x != y && cur.add_edge(x, y, EdgeLabel::Eps)? {
                added += 1;
            }
        }
        stats.eps_added += added;
        if added == 0 {
            return Ok((reach, stats));
        }
    }
    Err(Error::InternalInvariant(format!(
        "D1 doubling did not stabilize within {max_outer} outer iterations"
    )))
}
