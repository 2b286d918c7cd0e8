//! Cubic worklist solver and the sparsity report.
//!
//! Facts are triples `(a, b, tag)`: `(a, b, Eps)` says `pts(a) ⊆ pts(b)`
//! and `(a, b, Open)` says `a ∈ pts(b)`.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::instance::{ApaInstance, PointerId, PointsToMap, StatementKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FactTag {
    Eps,
    Open,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fact {
    pub src: PointerId,
    pub dst: PointerId,
    pub tag: FactTag,
}

/// Extraction discipline. Results do not depend on it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum WorklistOrder {
    #[default]
    Fifo,
    Lifo,
    /// Extract a uniformly random pending fact.
    Shuffled(u64),
}

/// Bit rows that stay unallocated until first written.
#[derive(Clone, Debug)]
struct LazyRows {
    words: usize,
    rows: Vec<Vec<u64>>,
}

impl LazyRows {
    fn new(n: usize) -> Self {
        LazyRows {
            words: n.div_ceil(64),
            rows: vec![Vec::new(); n],
        }
    }

    fn get(&self, r: usize, c: usize) -> bool {
        self.rows[r]
            .get(c / 64)
            .is_some_and(|w| w >> (c % 64) & 1 == 1)
    }

    fn set(&mut self, r: usize, c: usize) -> bool {
        let row = &mut self.rows[r];
        if row.is_empty() {
            row.resize(self.words, 0);
        }
        let bit = 1u64 << (c % 64);
        let fresh = row[c / 64] & bit == 0;
        row[c / 64] |= bit;
        fresh
    }
}

enum Pending {
    Fifo(VecDeque<Fact>),
    Lifo(Vec<Fact>),
    Shuffled(Vec<Fact>, ChaCha8Rng),
}

impl Pending {
    fn new(order: WorklistOrder) -> Self {
        match order {
            WorklistOrder::Fifo => Pending::Fifo(VecDeque::new()),
            WorklistOrder::Lifo => Pending::Lifo(Vec::new()),
            WorklistOrder::Shuffled(seed) => Pending::Shuffled(Vec::new(), ChaCha8Rng::seed_from_u64(seed)),
        }
    }

    fn push(&mut self, f: Fact) {
        match self {
            Pending::Fifo(q) => q.push_back(f),
            Pending::Lifo(v) | Pending::Shuffled(v, _) => v.push(f),
        }
    }

    fn pop(&mut self) -> Option<Fact> {
        match self {
            Pending::Fifo(q) => q.pop_front(),
            Pending::Lifo(v) => v.pop(),
            Pending::Shuffled(v, rng) => {
                if v.is_empty() {
                    None
                } else {
                    let i = rng.gen_range(0..v.len());
                    Some(v.swap_remove(i))
                }
            }
        }
    }
}

/// Worklist `W` and the `Done` set with per-tag membership bits and
/// adjacency lists.
pub struct SolverState {
    pending: Pending,
    eps_bits: LazyRows,
    /// `pts_bits[a]` has bit `c` iff `(c, a, Open)` is done.
    pts_bits: LazyRows,
    eps_out: Vec<Vec<u32>>,
    pts_list: Vec<Vec<u32>>,
    done: Vec<Fact>,
    in_flight: usize,
}

impl SolverState {
    pub fn new(n: usize, order: WorklistOrder) -> Self {
        SolverState {
            pending: Pending::new(order),
            eps_bits: LazyRows::new(n),
            pts_bits: LazyRows::new(n),
            eps_out: vec![Vec::new(); n],
            pts_list: vec![Vec::new(); n],
            done: Vec::new(),
            in_flight: 0,
        }
    }

    pub fn is_done(&self, f: Fact) -> bool {
        let (s, d) = (f.src.index(), f.dst.index());
        match f.tag {
            FactTag::Eps => self.eps_bits.get(s, d),
            FactTag::Open => self.pts_bits.get(d, s),
        }
    }

    /// Inserts `f` into `Done` and `W` unless already done.
    pub fn establish(&mut self, f: Fact) -> bool {
        let (s, d) = (f.src.index(), f.dst.index());
        let fresh = match f.tag {
            FactTag::Eps => {
                let fresh = self.eps_bits.set(s, d);
                if fresh {
                    self.eps_out[s].push(d as u32);
                }
                fresh
            }
            FactTag::Open => {
                let fresh = self.pts_bits.set(d, s);
                if fresh {
                    self.pts_list[d].push(s as u32);
                }
                fresh
            }
        };
        if fresh {
            self.done.push(f);
            self.pending.push(f);
            self.in_flight += 1;
        }
        fresh
    }

    pub fn done(&self) -> &[Fact] {
        &self.done
    }

    /// Number of facts established but not yet extracted.
    pub fn pending(&self) -> usize {
        self.in_flight
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct WorklistStats {
    pub extractions: usize,
    pub eps_facts: usize,
    pub open_facts: usize,
}

pub struct WorklistRun {
    pub points_to: PointsToMap,
    /// Final `Done` set in order of establishment.
    pub done: Vec<Fact>,
    pub stats: WorklistStats,
}

pub fn solve_worklist(inst: &ApaInstance) -> PointsToMap {
    solve_worklist_detailed(inst, WorklistOrder::Fifo).points_to
}

pub fn solve_worklist_detailed(inst: &ApaInstance, order: WorklistOrder) -> WorklistRun {
    let n = inst.n();
    let mut loads_from: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut stores_through: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut st = SolverState::new(n, order);
    let fact = |src: usize, dst: usize, tag| Fact {
        src: PointerId::from(src),
        dst: PointerId::from(dst),
        tag,
    };
    for s in inst.statements() {
        let (a, b) = (s.lhs.index(), s.rhs.index());
        match s.kind {
            StatementKind::Assign => {
                st.establish(fact(b, a, FactTag::Eps));
            }
            StatementKind::AddressOf => {
                st.establish(fact(b, a, FactTag::Open));
            }
            StatementKind::LoadDeref => loads_from[b].push(a as u32),
            StatementKind::StoreDeref => stores_through[a].push(b as u32),
        }
    }

    let mut extractions = 0;
    while let Some(f) = st.pending.pop() {
        st.in_flight -= 1;
        extractions += 1;
        let (a, b) = (f.src.index(), f.dst.index());
        match f.tag {
            FactTag::Eps => {
                let mut k = 0;
                while k < st.pts_list[a].len() {
                    let c = st.pts_list[a][k] as usize;
                    st.establish(fact(c, b, FactTag::Open));
                    k += 1;
                }
            }
            FactTag::Open => {
                let mut k = 0;
                while k < st.eps_out[b].len() {
                    let c = st.eps_out[b][k] as usize;
                    st.establish(fact(a, c, FactTag::Open));
                    k += 1;
                }
                for &c in &loads_from[b] {
                    st.establish(fact(a, c as usize, FactTag::Eps));
                }
                for &c in &stores_through[b] {
                    st.establish(fact(c as usize, a, FactTag::Eps));
                }
            }
        }
    }
    assert_eq!(
        extractions,
        st.done.len(),
        "every fact is extracted exactly once"
    );

    let mut points_to = PointsToMap::empty(n);
    let mut stats = WorklistStats {
        extractions,
        ..Default::default()
    };
    for f in &st.done {
        match f.tag {
            FactTag::Eps => stats.eps_facts += 1,
            FactTag::Open => {
                stats.open_facts += 1;
                points_to.insert(f.dst, f.src);
            }
        }
    }
    WorklistRun {
        points_to,
        done: st.done,
        stats,
    }
}

/// Sparsity quantities of an instance together with its final edge set.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SparsityReport {
    pub n: usize,
    pub edges: usize,
    /// `|Ê| / n`.
    pub c_edges: f64,
    /// Most loads and stores dereferencing a single pointer.
    pub max_derefs: usize,
    /// Most address-of statements taking the address of a single pointer.
    pub max_refs: usize,
    pub pts_sum: usize,
    /// `Σ_a |{c : (c,a,&)}| · |{b : (a,b,ε)}|`.
    pub q_sum: u64,
}

impl SparsityReport {
    pub fn is_c_sparse(&self, c: f64) -> bool {
        self.c_edges <= c && self.max_derefs as f64 <= c && self.max_refs as f64 <= c
    }
}

pub fn check_sparsity(inst: &ApaInstance, final_edges: &[Fact]) -> SparsityReport {
    let n = inst.n();
    let mut derefs = vec![0usize; n];
    let mut refs = vec![0usize; n];
    for s in inst.statements() {
        match s.kind {
            StatementKind::LoadDeref => derefs[s.rhs.index()] += 1,
            StatementKind::StoreDeref => derefs[s.lhs.index()] += 1,
            StatementKind::AddressOf => refs[s.rhs.index()] += 1,
            StatementKind::Assign => {}
        }
    }
    let mut pts_in = vec![0u64; n];
    let mut eps_out = vec![0u64; n];
    for f in final_edges {
        match f.tag {
            FactTag::Open => pts_in[f.dst.index()] += 1,
            FactTag::Eps => eps_out[f.src.index()] += 1,
        }
    }
    SparsityReport {
        n,
        edges: final_edges.len(),
        c_edges: if n == 0 { 0.0 } else { final_edges.len() as f64 / n as f64 },
        max_derefs: derefs.into_iter().max().unwrap_or(0),
        max_refs: refs.into_iter().max().unwrap_or(0),
        pts_sum: pts_in.iter().sum::<u64>() as usize,
        q_sum: pts_in.iter().zip(&eps_out).map(|(p, e)| p * e).sum(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse_instance;
    use crate::oracle::fixpoint_semantics;

    const FIG2: &str = "b = &a\nd = &a\nc = &b\nd = &c\n*d = c\nd = *e\ne = *d\ne = &f\n";

    #[test]
    fn one_eps_propagation() {
        let inst = parse_instance("a = &b\nc = a\n").unwrap();
        let pts = solve_worklist(&inst);
        let (a, b, c) = (PointerId(0), PointerId(1), PointerId(2));
        assert_eq!(pts.points_to(c).collect::<Vec<_>>(), vec![b]);
        assert_eq!(pts.points_to(a).collect::<Vec<_>>(), vec![b]);
        assert_eq!(pts.total_size(), 2);
    }

    #[test]
    fn fig2_matches_semantics_under_every_order() {
        let inst = parse_instance(FIG2).unwrap();
        let want = fixpoint_semantics(&inst);
        for order in [WorklistOrder::Fifo, WorklistOrder::Lifo, WorklistOrder::Shuffled(3)] {
            assert_eq!(solve_worklist_detailed(&inst, order).points_to, want);
        }
    }

    #[test]
    fn done_open_facts_are_the_answer() {
        let inst = parse_instance(FIG2).unwrap();
        let run = solve_worklist_detailed(&inst, WorklistOrder::Fifo);
        let mut from_done = PointsToMap::empty(inst.n());
        for f in run.done.iter().filter(|f| f.tag == FactTag::Open) {
            from_done.insert(f.dst, f.src);
        }
        assert_eq!(from_done, run.points_to);
        assert_eq!(run.stats.extractions, run.done.len());
        assert_eq!(run.stats.open_facts, run.points_to.total_size());
    }

    #[test]
    fn state_rejects_repeat_facts() {
        let mut st = SolverState::new(3, WorklistOrder::Fifo);
        let f = Fact {
            src: PointerId(0),
            dst: PointerId(2),
            tag: FactTag::Open,
        };
        assert!(st.establish(f));
        assert!(!st.establish(f));
        assert!(st.is_done(f));
        assert!(!st.is_done(Fact { tag: FactTag::Eps, ..f }));
        assert_eq!(st.done().len(), 1);
        assert_eq!(st.pending(), 1);
    }

    #[test]
    fn empty_instance_report() {
        let inst = ApaInstance::new();
        let r = check_sparsity(&inst, &[]);
        assert_eq!(r, SparsityReport::default());
        assert!(r.is_c_sparse(0.0));
    }

    #[test]
    fn five_derefs_of_one_pointer() {
        let inst = parse_instance("a = *p\nb = *p\nc = *p\n*p = a\n*p = b\nq = &p\n").unwrap();
        let run = solve_worklist_detailed(&inst, WorklistOrder::Fifo);
        let r = check_sparsity(&inst, &run.done);
        assert_eq!(r.max_derefs, 5);
        assert_eq!(r.max_refs, 1);
    }

    #[test]
    fn q_sum_counts_in_times_out() {
        // pts(a) = {x, y}, a flows to b and c: q_a = 2 * 2.
        let inst = parse_instance("a = &x\na = &y\nb = a\nc = a\n").unwrap();
        let run = solve_worklist_detailed(&inst, WorklistOrder::Fifo);
        let r = check_sparsity(&inst, &run.done);
        assert_eq!(r.q_sum, 4);
        assert_eq!(r.pts_sum, 6);
        assert_eq!(r.edges, 8);
    }
}
