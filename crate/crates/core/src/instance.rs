//! APA instances: a pointer universe plus a set of statements of the four
//! kinds `a = b`, `a = &b`, `a = *b` and `*a = b`.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::Serialize;

use crate::boolmat::BoolMatrix;
use crate::error::{Error, Result};

/// Dense pointer index, `0..n` within an instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct PointerId(pub u32);

impl PointerId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for PointerId {
    fn from(i: usize) -> Self {
        PointerId(i as u32)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum StatementKind {
    /// `a = b`
    Assign,
    /// `a = &b`
    AddressOf,
    /// `a = *b`
    LoadDeref,
    /// `*a = b`
    StoreDeref,
}

impl StatementKind {
    pub const ALL: [StatementKind; 4] = [
        StatementKind::Assign,
        StatementKind::AddressOf,
        StatementKind::LoadDeref,
        StatementKind::StoreDeref,
    ];

    /// The conventional type number, 1 through 4.
    pub fn type_index(self) -> u8 {
        match self {
            StatementKind::Assign => 1,
            StatementKind::AddressOf => 2,
            StatementKind::LoadDeref => 3,
            StatementKind::StoreDeref => 4,
        }
    }

    pub fn from_type_index(t: u8) -> Option<Self> {
        Self::ALL.get((t as usize).wrapping_sub(1)).copied()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Statement {
    pub kind: StatementKind,
    pub lhs: PointerId,
    pub rhs: PointerId,
}

impl Statement {
    pub fn new(kind: StatementKind, lhs: impl Into<PointerId>, rhs: impl Into<PointerId>) -> Self {
        Statement {
            kind,
            lhs: lhs.into(),
            rhs: rhs.into(),
        }
    }
}

impl From<(StatementKind, usize, usize)> for Statement {
    fn from((kind, lhs, rhs): (StatementKind, usize, usize)) -> Self {
        Statement::new(kind, lhs, rhs)
    }
}

/// Pointer universe plus a duplicate-free statement list.
///
/// Statement order is insertion order; it carries no meaning for the
/// analysis but keeps serialization stable.
#[derive(Clone, Debug, Default)]
pub struct ApaInstance {
    names: Vec<String>,
    by_name: HashMap<String, PointerId>,
    statements: Vec<Statement>,
    seen: HashSet<Statement>,
}

impl ApaInstance {
    pub fn new() -> Self {
        Self::default()
    }

    /// Instance with pointers named `names`, in order.
    ///
    /// Duplicate names are kept as-is so that [`validate`](Self::validate)
    /// can report them.
    pub fn with_pointers<S: AsRef<str>>(names: &[S]) -> Self {
        let mut inst = Self::new();
        for name in names {
            let id = PointerId(inst.names.len() as u32);
            inst.names.push(name.as_ref().to_string());
            inst.by_name.entry(name.as_ref().to_string()).or_insert(id);
        }
        inst
    }

    /// Builds an instance from raw parts without checking anything;
    /// duplicate statements are dropped.
    pub fn from_parts<S: AsRef<str>>(names: &[S], statements: impl IntoIterator<Item = Statement>) -> Self {
        let mut inst = Self::with_pointers(names);
        for s in statements {
            inst.push_statement_unchecked(s);
        }
        inst
    }

    pub fn n(&self) -> usize {
        self.names.len()
    }

    pub fn m(&self) -> usize {
        self.statements.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, p: PointerId) -> &str {
        &self.names[p.index()]
    }

    pub fn pointer(&self, name: &str) -> Option<PointerId> {
        self.by_name.get(name).copied()
    }

    pub fn pointers(&self) -> impl Iterator<Item = PointerId> {
        (0..self.names.len() as u32).map(PointerId)
    }

    pub fn statements(&self) -> &[Statement] {
        &self.statements
    }

    pub fn contains(&self, s: &Statement) -> bool {
        self.seen.contains(s)
    }

    pub fn statements_of(&self, kind: StatementKind) -> impl Iterator<Item = &Statement> {
        self.statements.iter().filter(move |s| s.kind == kind)
    }

    /// Returns the id of `name`, adding a fresh pointer if it is new.
    pub fn intern(&mut self, name: &str) -> PointerId {
        if let Some(id) = self.by_name.get(name) {
            return *id;
        }
        let id = PointerId(self.names.len() as u32);
        self.names.push(name.to_string());
        self.by_name.insert(name.to_string(), id);
        id
    }

    /// Adds a statement over existing pointers. Returns `false` if it was
    /// already present.
    pub fn add(&mut self, kind: StatementKind, lhs: PointerId, rhs: PointerId) -> Result<bool> {
        for p in [lhs, rhs] {
            if p.index() >= self.n() {
                return Err(Error::InvalidParameters(format!(
                    "pointer id {} out of range for n = {}",
                    p.0,
                    self.n()
                )));
            }
        }
        Ok(self.push_statement_unchecked(Statement { kind, lhs, rhs }))
    }

    /// Adds a statement by pointer names, interning unknown names.
    pub fn add_named(&mut self, kind: StatementKind, lhs: &str, rhs: &str) -> bool {
        let l = self.intern(lhs);
        let r = self.intern(rhs);
        self.push_statement_unchecked(Statement { kind, lhs: l, rhs: r })
    }

    fn push_statement_unchecked(&mut self, s: Statement) -> bool {
        if self.seen.insert(s) {
            self.statements.push(s);
            true
        } else {
            false
        }
    }

    /// Pointer count and per-kind statement counts `[|S1|, |S2|, |S3|, |S4|]`.
    pub fn kind_counts(&self) -> [usize; 4] {
        let mut counts = [0; 4];
        for s in &self.statements {
            counts[s.kind.type_index() as usize - 1] += 1;
        }
        counts
    }

    pub fn display_statement(&self, s: &Statement) -> String {
        let name = |p: PointerId| {
            self.names
                .get(p.index())
                .cloned()
                .unwrap_or_else(|| format!("#{}", p.0))
        };
        let (l, r) = (name(s.lhs), name(s.rhs));
        match s.kind {
            StatementKind::Assign => format!("{l} = {r}"),
            StatementKind::AddressOf => format!("{l} = &{r}"),
            StatementKind::LoadDeref => format!("{l} = *{r}"),
            StatementKind::StoreDeref => format!("*{l} = {r}"),
        }
    }

    /// Structural equality up to id relabeling: same name set and the same
    /// statements when read by name.
    pub fn is_isomorphic_to(&self, other: &ApaInstance) -> bool {
        if self.n() != other.n() || self.m() != other.m() {
            return false;
        }
        let mut map = Vec::with_capacity(self.n());
        for name in &self.names {
            match other.pointer(name) {
                Some(id) => map.push(id),
                None => return false,
            }
        }
        self.statements.iter().all(|s| {
            other.contains(&Statement {
                kind: s.kind,
                lhs: map[s.lhs.index()],
                rhs: map[s.rhs.index()],
            })
        })
    }

    /// Sub-instance keeping only the statements selected by `keep`; the
    /// pointer universe is unchanged.
    pub fn retain_statements(&self, mut keep: impl FnMut(usize, &Statement) -> bool) -> ApaInstance {
        let statements = self
            .statements
            .iter()
            .enumerate()
            .filter(|(i, s)| keep(*i, s))
            .map(|(_, s)| *s)
            .collect::<Vec<_>>();
        ApaInstance::from_parts(&self.names, statements)
    }

    pub fn validate(&self) -> ValidationReport {
        let mut findings = Vec::new();
        let mut names = HashSet::new();
        for (i, name) in self.names.iter().enumerate() {
            if !names.insert(name.as_str()) {
                findings.push(Finding::DuplicateName {
                    name: name.clone(),
                    id: PointerId(i as u32),
                });
            }
        }
        let mut stmts = HashSet::new();
        for (i, s) in self.statements.iter().enumerate() {
            for p in [s.lhs, s.rhs] {
                if p.index() >= self.n() {
                    findings.push(Finding::IdOutOfRange {
                        statement: i,
                        id: p,
                        n: self.n(),
                    });
                }
            }
            if !stmts.insert(*s) {
                findings.push(Finding::DuplicateStatement { statement: i });
            }
        }
        ValidationReport { findings }
    }

    /// Whether every pointer is the left-hand side of at most one store.
    pub fn is_type4_normalized(&self) -> bool {
        self.first_unnormalized_store_target().is_none()
    }

    pub(crate) fn first_unnormalized_store_target(&self) -> Option<PointerId> {
        let mut seen = HashSet::new();
        self.statements_of(StatementKind::StoreDeref)
            .find(|s| !seen.insert(s.lhs))
            .map(|s| s.lhs)
    }

    /// Rewrites the instance so that no pointer is the target of more than
    /// one `*a = b` statement.
    ///
    /// For every `a` with stores `*a = b1, …, *a = bk` (k ≥ 2) a fresh
    /// pointer `c` named `$aux<k>` is added, the stores are replaced by
    /// `c = b1, …, c = bk` and a single `*a = c` is kept. Points-to facts
    /// between original pointers are unchanged.
    pub fn normalize_type4(&self) -> ApaInstance {
        let mut store_count: HashMap<PointerId, usize> = HashMap::new();
        for s in self.statements_of(StatementKind::StoreDeref) {
            *store_count.entry(s.lhs).or_default() += 1;
        }
        if store_count.values().all(|&c| c <= 1) {
            return self.clone();
        }

        let mut out = ApaInstance::with_pointers(&self.names);
        let mut aux_for: HashMap<PointerId, PointerId> = HashMap::new();
        let mut next_aux = 0usize;
        for s in &self.statements {
            let needs_aux = s.kind == StatementKind::StoreDeref && store_count[&s.lhs] > 1;
            if !needs_aux {
                out.push_statement_unchecked(*s);
                continue;
            }
            let aux = match aux_for.get(&s.lhs) {
                Some(aux) => *aux,
                None => {
                    let name = loop {
                        let candidate = format!("$aux{next_aux}");
                        next_aux += 1;
                        if out.pointer(&candidate).is_none() {
                            break candidate;
                        }
                    };
                    let aux = out.intern(&name);
                    aux_for.insert(s.lhs, aux);
                    out.push_statement_unchecked(Statement {
                        kind: StatementKind::StoreDeref,
                        lhs: s.lhs,
                        rhs: aux,
                    });
                    aux
                }
            };
            out.push_statement_unchecked(Statement {
                kind: StatementKind::Assign,
                lhs: aux,
                rhs: s.rhs,
            });
        }
        out
    }
}

impl PartialEq for ApaInstance {
    fn eq(&self, other: &Self) -> bool {
        self.names == other.names && self.statements == other.statements
    }
}

impl Eq for ApaInstance {}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Finding {
    IdOutOfRange { statement: usize, id: PointerId, n: usize },
    DuplicateName { name: String, id: PointerId },
    DuplicateStatement { statement: usize },
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Finding::IdOutOfRange { statement, id, n } => {
                write!(f, "statement {statement}: pointer id {} out of range (n = {n})", id.0)
            }
            Finding::DuplicateName { name, id } => {
                write!(f, "pointer id {}: duplicate name `{name}`", id.0)
            }
            Finding::DuplicateStatement { statement } => {
                write!(f, "statement {statement}: duplicate")
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.findings.is_empty()
    }
}

/// Per-pointer points-to sets; row `a` of the underlying matrix is `pts(a)`.
#[derive(Clone, PartialEq, Eq)]
pub struct PointsToMap {
    sets: BoolMatrix,
}

impl PointsToMap {
    pub fn empty(n: usize) -> Self {
        PointsToMap {
            sets: BoolMatrix::zeros(n),
        }
    }

    pub fn from_matrix(sets: BoolMatrix) -> Self {
        PointsToMap { sets }
    }

    pub fn n(&self) -> usize {
        self.sets.dim()
    }

    pub fn contains(&self, a: PointerId, b: PointerId) -> bool {
        self.sets.get(a.index(), b.index())
    }

    pub fn insert(&mut self, a: PointerId, b: PointerId) -> bool {
        self.sets.set(a.index(), b.index())
    }

    pub fn points_to(&self, a: PointerId) -> impl Iterator<Item = PointerId> + '_ {
        self.sets.row_ones(a.index()).map(PointerId::from)
    }

    pub fn len_of(&self, a: PointerId) -> usize {
        self.sets.row_count(a.index())
    }

    /// `Σ |pts(a)|`.
    pub fn total_size(&self) -> usize {
        self.sets.count_ones()
    }

    /// All facts `(a, b)` meaning `b ∈ pts(a)`.
    pub fn facts(&self) -> impl Iterator<Item = (PointerId, PointerId)> + '_ {
        self.sets.pairs().map(|(a, b)| (PointerId::from(a), PointerId::from(b)))
    }

    pub fn is_subset_of(&self, other: &PointsToMap) -> bool {
        self.sets.is_subset_of(&other.sets)
    }

    pub fn matrix(&self) -> &BoolMatrix {
        &self.sets
    }

    /// Restriction to the first `n` pointers (used after normalization,
    /// which appends auxiliary pointers at the end).
    pub fn restrict(&self, n: usize) -> PointsToMap {
        let mut out = PointsToMap::empty(n);
        for (a, b) in self.sets.pairs() {
            if a < n && b < n {
                out.sets.set(a, b);
            }
        }
        out
    }

    /// Facts present in `self` but not in `other`, for diagnostics.
    pub fn difference(&self, other: &PointsToMap) -> Vec<(PointerId, PointerId)> {
        self.facts()
            .filter(|&(a, b)| a.index() >= other.n() || b.index() >= other.n() || !other.contains(a, b))
            .collect()
    }

    /// One line per pointer, `name: {members sorted by name}`.
    pub fn render(&self, inst: &ApaInstance) -> String {
        let mut out = String::new();
        for a in 0..self.n().min(inst.n()) {
            let mut members: Vec<&str> = self
                .sets
                .row_ones(a)
                .filter(|&b| b < inst.n())
                .map(|b| inst.names()[b].as_str())
                .collect();
            members.sort_unstable();
            out.push_str(&inst.names()[a]);
            out.push_str(": {");
            out.push_str(&members.join(", "));
            out.push_str("}\n");
        }
        out
    }
}

impl fmt::Debug for PointsToMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut map = f.debug_map();
        for a in 0..self.n() {
            let row: Vec<usize> = self.sets.row_ones(a).collect();
            if !row.is_empty() {
                map.entry(&a, &row);
            }
        }
        map.finish()
    }
}
