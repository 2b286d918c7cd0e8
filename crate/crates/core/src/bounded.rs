//! Store-bounded exhaustive solving by rounds of D1-reachability.
//!
//! Round `i` computes D1-reachability in the current Dyck graph `G_i`,
//! reads points-to facts off a flow graph `H_i` over two copies of the
//! pointers, and resolves every `*a = b` against those facts into new
//! ε-edges for `G_{i+1}`. After `j + 1` rounds every fact with a witness
//! executing at most `j` stores is reported.

use serde::Serialize;

use crate::boolmat::BoolMatrix;
use crate::d1reach::d1_reach;
use crate::dyck::{build_representation, DyckGraph, EdgeLabel};
use crate::error::{Error, Result};
use crate::instance::{ApaInstance, PointerId, PointsToMap};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct RoundStats {
    pub round: usize,
    /// ε-edges this round's store resolution added for the next round.
    pub eps_added: usize,
    /// ε-edges in the graph after this round.
    pub total: usize,
}

/// Snapshot of one round.
#[derive(Clone, Debug)]
pub struct RoundState {
    pub round: usize,
    /// `G_i`, before this round's resolution.
    pub graph: DyckGraph,
    /// Reflexive closure of `H_i`; copy 1 of `a` is `a`, copy 2 is `n + a`.
    pub flow_graph: BoolMatrix,
}

/// Runs the rounds one at a time. After `i` calls to [`step`](Self::step)
/// the current answer equals `solve_bounded(inst, i - 1)`.
pub struct BoundedSolver {
    n: usize,
    graph: DyckGraph,
    stores: Vec<(PointerId, PointerId)>,
    address_of: Vec<(usize, usize)>,
    round: usize,
    current: PointsToMap,
    history: Vec<RoundStats>,
    last_flow: Option<BoolMatrix>,
}

impl BoundedSolver {
    pub fn new(inst: &ApaInstance) -> Result<Self> {
        if let Some(a) = inst.first_unnormalized_store_target() {
            return Err(Error::NotNormalized(format!(
                "pointer `{}` is the target of more than one store; normalize the instance first",
                inst.name(a)
            )));
        }
        let rep = build_representation(inst);
        let address_of = rep
            .graph
            .edges_with(EdgeLabel::Open)
            .map(|e| (e.src as usize, e.dst as usize))
            .collect();
        Ok(BoundedSolver {
            n: inst.n(),
            graph: rep.graph,
            stores: rep.type4,
            address_of,
            round: 0,
            current: PointsToMap::empty(inst.n()),
            history: Vec::new(),
            last_flow: None,
        })
    }

    /// Rounds completed so far.
    pub fn round(&self) -> usize {
        self.round
    }

    /// Facts known after the completed rounds (empty before the first).
    pub fn current(&self) -> &PointsToMap {
        &self.current
    }

    pub fn history(&self) -> &[RoundStats] {
        &self.history
    }

    pub fn graph(&self) -> &DyckGraph {
        &self.graph
    }

    pub fn last_flow_graph(&self) -> Option<&BoolMatrix> {
        self.last_flow.as_ref()
    }

    /// Runs one round and returns its stats. The graph is extended with
    /// the round's resolution edges, ready for the next round.
    pub fn step(&mut self) -> RoundStats {
        let n = self.n;
        self.round += 1;
        let reach = d1_reach(&self.graph);
        let mut h = BoolMatrix::zeros(2 * n);
        for &(a, b) in &self.address_of {
            h.set(a, n + b);
        }
        for (a, b) in reach.pairs() {
            h.set(n + a, n + b);
        }
        let h = h.transitive_closure(true);

        let mut pts = PointsToMap::empty(n);
        for b in 0..n {
            for a in h.row_ones(b).filter(|&v| v >= n) {
                pts.insert(PointerId::from(a - n), PointerId::from(b));
            }
        }

        let mut added = 0;
        for &(a, b) in &self.stores {
            for c in pts.points_to(a).collect::<Vec<_>>() {
                if self
                    .graph
                    .add_edge(b.index(), c.index(), EdgeLabel::Eps)
                    .expect("ids in range")
                {
                    added += 1;
                }
            }
        }
        let stats = RoundStats {
            round: self.round,
            eps_added: added,
            total: self.graph.edges_with(EdgeLabel::Eps).count(),
        };
        self.current = pts;
        self.history.push(stats);
        self.last_flow = Some(h);
        stats
    }

    pub fn snapshot(&self) -> Option<RoundState> {
        self.last_flow.as_ref().map(|h| RoundState {
            round: self.round,
            graph: self.graph.clone(),
            flow_graph: h.clone(),
        })
    }
}

/// Facts witnessed by programs executing at most `j` stores, plus possibly
/// more. Every reported fact holds.
pub fn solve_bounded(inst: &ApaInstance, j: usize) -> Result<PointsToMap> {
    Ok(solve_bounded_with_rounds(inst, j)?.0)
}

pub fn solve_bounded_with_rounds(inst: &ApaInstance, j: usize) -> Result<(PointsToMap, Vec<RoundStats>)> {
    let mut solver = BoundedSolver::new(inst)?;
    for _ in 0..=j {
        if solver.step().eps_added == 0 {
            break;
        }
    }
    let history = solver.history().to_vec();
    Ok((solver.current, history))
}

/// Runs rounds until the resolution adds no edge; the answer is then the
/// exact solution.
pub fn solve_to_fixpoint(inst: &ApaInstance) -> Result<PointsToMap> {
    Ok(solve_to_fixpoint_with_rounds(inst)?.0)
}

pub fn solve_to_fixpoint_with_rounds(inst: &ApaInstance) -> Result<(PointsToMap, Vec<RoundStats>)> {
    let mut solver = BoundedSolver::new(inst)?;
    let limit = solver.stores.len() * solver.n + 1;
    loop {
        let stats = solver.step();
        if stats.eps_added == 0 {
            break;
        }
        if solver.round >= limit {
            return Err(Error::InternalInvariant(format!(
                "no fixpoint after {limit} rounds"
            )));
        }
    }
    let history = solver.history().to_vec();
    Ok((solver.current, history))
}

/// `round,eps_added,total` lines with a header.
pub fn rounds_csv(rounds: &[RoundStats]) -> String {
    let mut out = String::from("round,eps_added,total\n");
    for r in rounds {
        out.push_str(&format!("{},{},{}\n", r.round, r.eps_added, r.total));
    }
    out
}
