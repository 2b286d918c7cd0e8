//! Ground-truth engines.
//!
//! These are deliberately naive: a chaotic-iteration interpreter for the
//! operational semantics, an exhaustive breadth-first witness enumerator
//! for bounded APA on tiny instances, a provenance-tracking witness
//! extractor, and a bounded-stack BFS for D1-reachability. None of them
//! share code with the fast engines they certify.

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::boolmat::BoolMatrix;
use crate::dyck::{DyckGraph, EdgeLabel, ReachRelation};
use crate::error::{Error, Result};
use crate::instance::{ApaInstance, PointerId, PointsToMap, Statement, StatementKind};

/// Global store `A -> 2^A`, initially empty.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Store {
    cells: BoolMatrix,
}

impl Store {
    pub fn empty(n: usize) -> Self {
        Store {
            cells: BoolMatrix::zeros(n),
        }
    }

    pub fn get(&self, a: PointerId, b: PointerId) -> bool {
        self.cells.get(a.index(), b.index())
    }

    pub fn members(&self, a: PointerId) -> Vec<PointerId> {
        self.cells.row_ones(a.index()).map(PointerId::from).collect()
    }

    /// Executes one statement; returns whether the store changed.
    pub fn execute(&mut self, s: &Statement) -> bool {
        let (a, b) = (s.lhs.index(), s.rhs.index());
        match s.kind {
            StatementKind::Assign => {
                let src = self.cells.row(b).to_vec();
                or_into(self.cells.row_mut(a), &src)
            }
            StatementKind::AddressOf => self.cells.set(a, b),
            StatementKind::LoadDeref => {
                let mut acc = vec![0u64; self.cells.words_per_row()];
                for c in self.cells.row_ones(b) {
                    or_into(&mut acc, self.cells.row(c));
                }
                or_into(self.cells.row_mut(a), &acc)
            }
            StatementKind::StoreDeref => {
                let src = self.cells.row(b).to_vec();
                let targets: Vec<usize> = self.cells.row_ones(a).collect();
                let mut changed = false;
                for c in targets {
                    changed |= or_into(self.cells.row_mut(c), &src);
                }
                changed
            }
        }
    }

    pub fn is_subset_of(&self, other: &Store) -> bool {
        self.cells.is_subset_of(&other.cells)
    }

    pub fn into_points_to(self) -> PointsToMap {
        PointsToMap::from_matrix(self.cells)
    }
}

fn or_into(dst: &mut [u64], src: &[u64]) -> bool {
    let mut changed = false;
    for (d, s) in dst.iter_mut().zip(src) {
        let next = *d | *s;
        changed |= next != *d;
        *d = next;
    }
    changed
}

/// Least store closed under every statement, by chaotic iteration in
/// statement order.
pub fn fixpoint_semantics(inst: &ApaInstance) -> PointsToMap {
    let order: Vec<usize> = (0..inst.m()).collect();
    fixpoint_semantics_scheduled(inst, &order)
}

/// Chaotic iteration that sweeps the statements in `schedule` order until
/// a full sweep changes nothing. Any permutation gives the same result.
pub fn fixpoint_semantics_scheduled(inst: &ApaInstance, schedule: &[usize]) -> PointsToMap {
    let mut store = Store::empty(inst.n());
    let stmts = inst.statements();
    loop {
        let mut changed = false;
        for &i in schedule {
            changed |= store.execute(&stmts[i]);
        }
        if !changed {
            return store.into_points_to();
        }
    }
}

/// A sequence of statements drawn from an instance, repetition allowed.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WitnessProgram {
    pub statements: Vec<Statement>,
}

impl WitnessProgram {
    pub fn new(statements: Vec<Statement>) -> Self {
        WitnessProgram { statements }
    }

    pub fn len(&self) -> usize {
        self.statements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statements.is_empty()
    }

    pub fn count_of(&self, kind: StatementKind) -> usize {
        self.statements.iter().filter(|s| s.kind == kind).count()
    }

    /// Whether the program executes at most `budget` statements of `kind`.
    pub fn is_bounded(&self, kind: StatementKind, budget: usize) -> bool {
        self.count_of(kind) <= budget
    }

    pub fn render(&self, inst: &ApaInstance) -> String {
        self.statements
            .iter()
            .enumerate()
            .map(|(i, s)| format!("{}. {}\n", i + 1, inst.display_statement(s)))
            .collect()
    }
}

/// Executes `w` from the empty store.
pub fn replay_witness(inst: &ApaInstance, w: &WitnessProgram) -> Result<Store> {
    let mut store = Store::empty(inst.n());
    for s in &w.statements {
        if !inst.contains(s) {
            return Err(Error::ForeignStatement(inst.display_statement(s)));
        }
        store.execute(s);
    }
    Ok(store)
}

/// Which statements a bounded query counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundedQuery {
    /// `None` counts every statement.
    pub kind: Option<StatementKind>,
    pub budget: usize,
}

impl BoundedQuery {
    pub fn of_type(kind: StatementKind, budget: usize) -> Self {
        BoundedQuery {
            kind: Some(kind),
            budget,
        }
    }

    pub fn all(budget: usize) -> Self {
        BoundedQuery { kind: None, budget }
    }

    fn counts(&self, s: &Statement) -> bool {
        self.kind.is_none_or(|k| k == s.kind)
    }
}

/// Facts certified by short bounded witnesses, with one shortest witness
/// per fact.
#[derive(Clone, Debug)]
pub struct BoundedCertificate {
    pub facts: PointsToMap,
    pub witnesses: BTreeMap<(PointerId, PointerId), WitnessProgram>,
}

pub const BOUNDED_MAX_POINTERS: usize = 8;
pub const BOUNDED_MAX_LEN: usize = 12;
pub const BOUNDED_MAX_STATES: usize = 4_000_000;

/// Exhaustive enumeration of witness programs of length at most `max_len`
/// that execute at most `q.budget` counted statements.
///
/// Breadth-first over store states; statements that leave the store
/// unchanged are skipped since dropping them only shortens a witness.
/// Every reported fact holds in the exact solution, and any valid bounded
/// solver must report at least these facts.
pub fn bounded_points_to(inst: &ApaInstance, q: BoundedQuery, max_len: usize) -> Result<BoundedCertificate> {
    let n = inst.n();
    if n > BOUNDED_MAX_POINTERS {
        return Err(Error::ScaleGuard(format!(
            "bounded enumeration supports at most {BOUNDED_MAX_POINTERS} pointers, got {n}"
        )));
    }
    if max_len > BOUNDED_MAX_LEN {
        return Err(Error::ScaleGuard(format!(
            "bounded enumeration supports witnesses up to length {BOUNDED_MAX_LEN}, got {max_len}"
        )));
    }
    let budget = q.budget.min(max_len) as u16;
    let stmts = inst.statements();

    type State = (u64, u16);
    let mut parent: HashMap<State, (State, usize)> = HashMap::new();
    let mut seen: HashSet<State> = HashSet::new();
    let start: State = (0, 0);
    seen.insert(start);
    let mut frontier = vec![start];
    let mut facts = PointsToMap::empty(n);
    let mut witnesses = BTreeMap::new();
    let mut covered = 0u64;

    for _depth in 0..max_len {
        let mut next = Vec::new();
        for &state in &frontier {
            let (mask, used) = state;
            for (idx, s) in stmts.iter().enumerate() {
                let cost = u16::from(q.counts(s));
                if used + cost > budget {
                    continue;
                }
                let after = execute_mask(mask, s);
                if after == mask {
                    continue;
                }
                let child = (after, used + cost);
                if !seen.insert(child) {
                    continue;
                }
                if seen.len() > BOUNDED_MAX_STATES {
                    return Err(Error::ScaleGuard(format!(
                        "more than {BOUNDED_MAX_STATES} store states"
                    )));
                }
                parent.insert(child, (state, idx));
                let fresh = after & !covered;
                if fresh != 0 {
                    let program = rebuild(&parent, child, stmts);
                    let mut bits = fresh;
                    while bits != 0 {
                        let bit = bits.trailing_zeros() as usize;
                        bits &= bits - 1;
                        let (a, b) = (PointerId::from(bit / 8), PointerId::from(bit % 8));
                        facts.insert(a, b);
                        witnesses.insert((a, b), program.clone());
                    }
                    covered |= fresh;
                }
                next.push(child);
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    Ok(BoundedCertificate { facts, witnesses })
}

fn rebuild(parent: &HashMap<(u64, u16), ((u64, u16), usize)>, mut state: (u64, u16), stmts: &[Statement]) -> WitnessProgram {
    let mut rev = Vec::new();
    while let Some(&(prev, idx)) = parent.get(&state) {
        rev.push(stmts[idx]);
        state = prev;
    }
    rev.reverse();
    WitnessProgram::new(rev)
}

#[inline]
fn row_of(mask: u64, p: usize) -> u64 {
    (mask >> (8 * p)) & 0xff
}

fn execute_mask(mask: u64, s: &Statement) -> u64 {
    let (a, b) = (s.lhs.index(), s.rhs.index());
    match s.kind {
        StatementKind::Assign => mask | (row_of(mask, b) << (8 * a)),
        StatementKind::AddressOf => mask | (1u64 << (8 * a + b)),
        StatementKind::LoadDeref => {
            let mut acc = 0;
            let mut targets = row_of(mask, b);
            while targets != 0 {
                let c = targets.trailing_zeros() as usize;
                targets &= targets - 1;
                acc |= row_of(mask, c);
            }
            mask | (acc << (8 * a))
        }
        StatementKind::StoreDeref => {
            let src = row_of(mask, b);
            let mut out = mask;
            let mut targets = row_of(mask, a);
            while targets != 0 {
                let c = targets.trailing_zeros() as usize;
                targets &= targets - 1;
                out |= src << (8 * c);
            }
            out
        }
    }
}

/// Builds a witness for `b ∈ pts(a)` from a derivation, or `None` if the
/// fact does not hold.
///
/// Facts are derived in synchronous rounds (every statement reads the
/// store of the previous round), recording for each fact its first
/// deriving statement and premises. The witness executes the statements of
/// the fact's support in round order, one execution per (round, statement)
/// pair.
pub fn derive_witness(inst: &ApaInstance, a: PointerId, b: PointerId) -> Option<WitnessProgram> {
    #[derive(Clone)]
    struct Origin {
        round: usize,
        stmt: usize,
        premises: Vec<(usize, usize)>,
    }
    let n = inst.n();
    let stmts = inst.statements();
    let mut store = BoolMatrix::zeros(n);
    let mut origin: HashMap<(usize, usize), Origin> = HashMap::new();
    let mut round = 0;
    loop {
        round += 1;
        let mut fresh: Vec<((usize, usize), Origin)> = Vec::new();
        let mut push = |fact: (usize, usize), stmt: usize, premises: Vec<(usize, usize)>| {
            if !store.get(fact.0, fact.1) && !fresh.iter().any(|(f, _)| *f == fact) {
                fresh.push((fact, Origin { round, stmt, premises }));
            }
        };
        for (idx, s) in stmts.iter().enumerate() {
            let (l, r) = (s.lhs.index(), s.rhs.index());
            match s.kind {
                StatementKind::Assign => {
                    for x in store.row_ones(r) {
                        push((l, x), idx, vec![(r, x)]);
                    }
                }
                StatementKind::AddressOf => push((l, r), idx, vec![]),
                StatementKind::LoadDeref => {
                    for c in store.row_ones(r) {
                        for x in store.row_ones(c) {
                            push((l, x), idx, vec![(r, c), (c, x)]);
                        }
                    }
                }
                StatementKind::StoreDeref => {
                    for c in store.row_ones(l) {
                        for x in store.row_ones(r) {
                            push((c, x), idx, vec![(l, c), (r, x)]);
                        }
                    }
                }
            }
        }
        if fresh.is_empty() {
            break;
        }
        for (fact, o) in fresh {
            store.set(fact.0, fact.1);
            origin.insert(fact, o);
        }
    }

    let target = (a.index(), b.index());
    origin.get(&target)?;
    let mut support = HashSet::new();
    let mut stack = vec![target];
    while let Some(f) = stack.pop() {
        if support.insert(f) {
            stack.extend(origin[&f].premises.iter().copied());
        }
    }
    let mut steps: Vec<(usize, usize)> = support
        .iter()
        .map(|f| (origin[f].round, origin[f].stmt))
        .collect();
    steps.sort_unstable();
    steps.dedup();
    Some(WitnessProgram::new(
        steps.into_iter().map(|(_, idx)| stmts[idx]).collect(),
    ))
}

/// D1-reachability by BFS over `(node, stack height)` states.
///
/// `(x, y)` is reported iff some path from `x` to `y` of at most `max_len`
/// edges has a balanced label whose prefix heights stay within
/// `[0, max_height]`.
pub fn dyck_reach_oracle(g: &DyckGraph, max_height: usize, max_len: usize) -> ReachRelation {
    let n = g.n();
    let adj = g.adjacency();
    let levels = max_height + 1;
    let mut dist = vec![u32::MAX; n * levels];
    let mut queue = std::collections::VecDeque::new();
    let mut out = BoolMatrix::zeros(n);
    let len_cap = u32::try_from(max_len).unwrap_or(u32::MAX);
    for x in 0..n {
        dist.fill(u32::MAX);
        queue.clear();
        dist[x * levels] = 0;
        queue.push_back((x, 0usize));
        while let Some((v, h)) = queue.pop_front() {
            let d = dist[v * levels + h];
            if h == 0 {
                out.set(x, v);
            }
            if d >= len_cap {
                continue;
            }
            for label in EdgeLabel::ALL {
                let nh = match label {
                    EdgeLabel::Eps => h,
                    EdgeLabel::Open if h < max_height => h + 1,
                    EdgeLabel::Close if h > 0 => h - 1,
                    _ => continue,
                };
                for &w in &adj[label as usize][v] {
                    let slot = &mut dist[w as usize * levels + nh];
                    if *slot == u32::MAX {
                        *slot = d + 1;
                        queue.push_back((w as usize, nh));
                    }
                }
            }
        }
    }
    ReachRelation::from_matrix(out)
}

/// Height cap used in exact mode: `n² + 1`.
pub fn exact_height_cap(n: usize) -> usize {
    n * n + 1
}

/// Exact D1-reachability: the bounded oracle at height `n² + 1`, checked
/// to be stable when the cap is doubled.
pub fn try_dyck_reach_exact(g: &DyckGraph) -> Result<ReachRelation> {
    let cap = exact_height_cap(g.n());
    let at_cap = dyck_reach_oracle(g, cap, usize::MAX);
    let doubled = dyck_reach_oracle(g, 2 * cap, usize::MAX);
    if at_cap != doubled {
        return Err(Error::InternalInvariant(format!(
            "bounded-stack oracle not stable at height cap {cap}"
        )));
    }
    Ok(at_cap)
}

pub fn dyck_reach_exact(g: &DyckGraph) -> ReachRelation {
    try_dyck_reach_exact(g).expect("exact D1 oracle stabilizes at n²+1")
}
