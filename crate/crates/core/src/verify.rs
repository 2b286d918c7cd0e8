//! Property suites that cross-check the engines against the oracles.
//!
//! Every case draws its own seed from the run seed, so a failing case can
//! be replayed alone. Failures on APA instances and Dyck graphs are
//! shrunk greedily (statements or edges dropped while the property still
//! fails) before being reported.

use std::fmt;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bounded::{solve_bounded, solve_to_fixpoint};
use crate::d1reach::{d1_reach_with_stats, iteration_cap, D1Stats};
use crate::dyck::{build_representation, flows_into_matrix, resolve_reference, serialize_edge_list, DyckGraph, ReachRelation};
use crate::error::{Error, Result};
use crate::format::serialize_instance;
use crate::hardness::{
    check_cvp, check_ov, check_triangle, gen_random_dyck, gen_random_instance, random_circuit, random_graph,
    random_vectors, reduce_cvp, reduce_ov, reduce_triangle, serialize_circuit, serialize_graph, serialize_vectors,
    ReductionOutput,
};
use crate::instance::{ApaInstance, PointsToMap, StatementKind};
use crate::oracle::{bounded_points_to, dyck_reach_exact, fixpoint_semantics, BoundedQuery};
use crate::worklist::solve_worklist;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    OracleEq,
    D1Eq,
    BoundedEq,
    Reductions,
    Invariants,
    All,
}

impl Suite {
    pub const EACH: [Suite; 5] = [Suite::OracleEq, Suite::D1Eq, Suite::BoundedEq, Suite::Reductions, Suite::Invariants];

    pub fn name(self) -> &'static str {
        match self {
            Suite::OracleEq => "oracle-eq",
            Suite::D1Eq => "d1-eq",
            Suite::BoundedEq => "bounded-eq",
            Suite::Reductions => "reductions",
            Suite::Invariants => "invariants",
            Suite::All => "all",
        }
    }

    pub fn parse(s: &str) -> Result<Suite> {
        [Suite::All]
            .into_iter()
            .chain(Suite::EACH)
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidParameters(format!("unknown suite `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scale {
    Small,
    Medium,
    Large,
}

impl Scale {
    pub fn parse(s: &str) -> Result<Scale> {
        match s {
            "small" => Ok(Scale::Small),
            "medium" => Ok(Scale::Medium),
            "large" => Ok(Scale::Large),
            _ => Err(Error::InvalidParameters(format!("unknown scale `{s}`"))),
        }
    }

    fn pick(self, small: usize, medium: usize, large: usize) -> usize {
        match self {
            Scale::Small => small,
            Scale::Medium => medium,
            Scale::Large => large,
        }
    }
}

/// The engines under test. Tests swap in broken ones to check that the
/// suites notice.
#[derive(Clone, Copy)]
pub struct Engines {
    pub worklist: fn(&ApaInstance) -> PointsToMap,
    pub fixpoint: fn(&ApaInstance) -> Result<PointsToMap>,
    pub bounded: fn(&ApaInstance, usize) -> Result<PointsToMap>,
    pub d1: fn(&DyckGraph) -> Result<(ReachRelation, D1Stats)>,
}

impl Default for Engines {
    fn default() -> Self {
        Engines {
            worklist: solve_worklist,
            fixpoint: solve_to_fixpoint,
            bounded: solve_bounded,
            d1: d1_reach_with_stats,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Reproducer {
    Instance(String),
    Edges(String),
}

impl Reproducer {
    pub fn extension(&self) -> &'static str {
        match self {
            Reproducer::Instance(_) => "apa",
            Reproducer::Edges(_) => "edges",
        }
    }

    pub fn text(&self) -> &str {
        match self {
            Reproducer::Instance(t) | Reproducer::Edges(t) => t,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Failure {
    pub suite: Suite,
    pub property: &'static str,
    pub case_seed: u64,
    pub detail: String,
    pub reproducer: Reproducer,
}

impl Failure {
    pub fn file_name(&self) -> String {
        format!("{}-{}-{}.{}", self.suite.name(), self.property, self.case_seed, self.reproducer.extension())
    }
}

#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub suite: Suite,
    pub cases: usize,
    pub failures: Vec<Failure>,
}

#[derive(Clone, Debug, Default)]
pub struct VerifyReport {
    pub suites: Vec<SuiteReport>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(|s| s.failures.is_empty())
    }

    pub fn failures(&self) -> impl Iterator<Item = &Failure> {
        self.suites.iter().flat_map(|s| &s.failures)
    }

    /// Writes one reproducer per failure into `dir` and returns the paths.
    pub fn dump_reproducers(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut paths = Vec::new();
        for f in self.failures() {
            let path = dir.join(f.file_name());
            std::fs::write(&path, f.reproducer.text())?;
            paths.push(path);
        }
        Ok(paths)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.suites {
            let status = if s.failures.is_empty() { "PASS" } else { "FAIL" };
            writeln!(f, "{status} {}: {} cases, {} failures", s.suite.name(), s.cases, s.failures.len())?;
            for x in &s.failures {
                writeln!(f, "  {} (case seed {}): {}", x.property, x.case_seed, x.detail)?;
            }
        }
        Ok(())
    }
}

pub fn run_verify(suite: Suite, scale: Scale, seed: u64) -> VerifyReport {
    run_verify_with(suite, scale, seed, &Engines::default())
}

pub fn run_verify_with(suite: Suite, scale: Scale, seed: u64, engines: &Engines) -> VerifyReport {
    let suites: Vec<Suite> = if suite == Suite::All { Suite::EACH.to_vec() } else { vec![suite] };
    let suites = suites
        .into_iter()
        .map(|s| {
            let mut ctx = Ctx {
                suite: s,
                cases: 0,
                failures: Vec::new(),
                engines,
            };
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ suite_salt(s));
            match s {
                Suite::OracleEq => oracle_eq(&mut ctx, &mut rng, scale),
                Suite::D1Eq => d1_eq(&mut ctx, &mut rng, scale),
                Suite::BoundedEq => bounded_eq(&mut ctx, &mut rng, scale),
                Suite::Reductions => reductions(&mut ctx, &mut rng, scale),
                Suite::Invariants => invariants(&mut ctx, &mut rng, scale),
                Suite::All => unreachable!("expanded above"),
            }
            SuiteReport {
                suite: s,
                cases: ctx.cases,
                failures: ctx.failures,
            }
        })
        .collect();
    VerifyReport { suites }
}

fn suite_salt(s: Suite) -> u64 {
    match s {
        Suite::OracleEq => 0x11,
        Suite::D1Eq => 0x22,
        Suite::BoundedEq => 0x33,
        Suite::Reductions => 0x44,
        Suite::Invariants => 0x55,
        Suite::All => 0,
    }
}

struct Ctx<'e> {
    suite: Suite,
    cases: usize,
    failures: Vec<Failure>,
    engines: &'e Engines,
}

impl Ctx<'_> {
    /// Checks `prop` on `inst`; on failure shrinks the instance and records it.
    fn check_instance(&mut self, property: &'static str, case_seed: u64, inst: &ApaInstance, prop: impl Fn(&ApaInstance) -> Option<String>) {
        if let Some(detail) = prop(inst) {
            let small = shrink_instance(inst, |i| prop(i).is_some());
            let detail = prop(&small).unwrap_or(detail);
            self.failures.push(Failure {
                suite: self.suite,
                property,
                case_seed,
                detail: format!("{detail} ({} of {} statements kept)", small.m(), inst.m()),
                reproducer: Reproducer::Instance(serialize_instance(&small)),
            });
        }
    }

    fn check_graph(&mut self, property: &'static str, case_seed: u64, g: &DyckGraph, prop: impl Fn(&DyckGraph) -> Option<String>) {
        if let Some(detail) = prop(g) {
            let small = shrink_graph(g, |h| prop(h).is_some());
            let detail = prop(&small).unwrap_or(detail);
            self.failures.push(Failure {
                suite: self.suite,
                property,
                case_seed,
                detail: format!("{detail} ({} of {} edges kept)", small.edge_count(), g.edge_count()),
                reproducer: Reproducer::Edges(serialize_edge_list(&small)),
            });
        }
    }

    fn check_reduction(&mut self, property: &'static str, case_seed: u64, input: String, out: &ReductionOutput, expected: bool) {
        let got = out.answer_in(&(self.engines.worklist)(&out.instance));
        if got != expected {
            self.failures.push(Failure {
                suite: self.suite,
                property,
                case_seed,
                detail: format!("engine says {}, checker says {}; input:\n{}", yes_no(got), yes_no(expected), input.trim_end()),
                reproducer: Reproducer::Instance(out.to_apa()),
            });
        }
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "YES"
    } else {
        "NO"
    }
}

/// Greedy one-at-a-time statement deletion until no single deletion keeps
/// `fails` true.
pub fn shrink_instance(inst: &ApaInstance, fails: impl Fn(&ApaInstance) -> bool) -> ApaInstance {
    let mut cur = inst.clone();
    let mut i = 0;
    while i < cur.m() {
        let cand = cur.retain_statements(|k, _| k != i);
        if fails(&cand) {
            cur = cand;
        } else {
            i += 1;
        }
    }
    cur
}

/// Same as [`shrink_instance`] for edges.
pub fn shrink_graph(g: &DyckGraph, fails: impl Fn(&DyckGraph) -> bool) -> DyckGraph {
    let mut cur = g.clone();
    let mut i = 0;
    while i < cur.edge_count() {
        let edges = cur.edges().iter().enumerate().filter(|(k, _)| *k != i).map(|(_, e)| (e.src as usize, e.dst as usize, e.label));
        let cand = DyckGraph::from_edges(cur.n(), edges).expect("edges of a valid graph");
        if fails(&cand) {
            cur = cand;
        } else {
            i += 1;
        }
    }
    cur
}

fn diff_message(name: &str, got: &PointsToMap, want: &PointsToMap, inst: &ApaInstance) -> Option<String> {
    if got == want {
        return None;
    }
    let show = |pairs: Vec<(crate::PointerId, crate::PointerId)>| {
        pairs
            .iter()
            .take(4)
            .map(|&(a, b)| format!("{} -> {}", inst.name(a), inst.name(b)))
            .collect::<Vec<_>>()
            .join(", ")
    };
    let extra = got.difference(want);
    let missing = want.difference(got);
    Some(format!(
        "{name}: {} extra [{}], {} missing [{}]",
        extra.len(),
        show(extra.clone()),
        missing.len(),
        show(missing.clone())
    ))
}

fn random_case(rng: &mut ChaCha8Rng, max_n: usize, max_m: usize) -> (u64, ApaInstance) {
    let case_seed = rng.gen();
    let mut r = ChaCha8Rng::seed_from_u64(case_seed);
    let n = r.gen_range(1..=max_n);
    let m = r.gen_range(0..=max_m);
    (case_seed, gen_random_instance(n, m, case_seed).expect("n > 0"))
}

fn random_graph_case(rng: &mut ChaCha8Rng, max_n: usize, max_density: f64) -> (u64, DyckGraph) {
    let case_seed = rng.gen();
    let mut r = ChaCha8Rng::seed_from_u64(case_seed);
    let n = r.gen_range(1..=max_n);
    let density = r.gen_range(0.0..=max_density);
    (case_seed, gen_random_dyck(n, density, case_seed).expect("valid parameters"))
}

fn oracle_eq(ctx: &mut Ctx, rng: &mut ChaCha8Rng, scale: Scale) {
    let e = *ctx.engines;
    for _ in 0..scale.pick(200, 1000, 3000) {
        let (case_seed, inst) = random_case(rng, scale.pick(8, 12, 16), scale.pick(20, 30, 45));
        ctx.cases += 1;
        ctx.check_instance("worklist", case_seed, &inst, |i| {
            diff_message("worklist vs semantics", &(e.worklist)(i), &fixpoint_semantics(i), i)
        });
        ctx.check_instance("fixpoint", case_seed, &inst, |i| {
            let norm = i.normalize_type4();
            match (e.fixpoint)(&norm) {
                Ok(p) => diff_message("bounded fixpoint vs semantics", &p.restrict(i.n()), &fixpoint_semantics(i), i),
                Err(err) => Some(format!("bounded fixpoint failed: {err}")),
            }
        });
    }
}

fn d1_eq(ctx: &mut Ctx, rng: &mut ChaCha8Rng, scale: Scale) {
    let e = *ctx.engines;
    for _ in 0..scale.pick(100, 500, 1000) {
        let (case_seed, g) = random_graph_case(rng, scale.pick(12, 20, 28), 0.3);
        ctx.cases += 1;
        ctx.check_graph("d1-vs-oracle", case_seed, &g, |h| match (e.d1)(h) {
            Err(err) => Some(format!("d1 reach failed: {err}")),
            Ok((got, stats)) => {
                let want = dyck_reach_exact(h);
                let cap = iteration_cap(h.n());
                if got != want {
                    let extra = got.pairs().filter(|&(x, y)| !want.reaches(x, y)).count();
                    let missing = want.pairs().filter(|&(x, y)| !got.reaches(x, y)).count();
                    Some(format!("d1 reach differs from oracle: {extra} extra, {missing} missing pairs"))
                } else if stats.outer_iterations > cap || stats.max_doublings > cap {
                    Some(format!(
                        "iteration cap {cap} exceeded: {} outer, {} doublings",
                        stats.outer_iterations, stats.max_doublings
                    ))
                } else {
                    None
                }
            }
        });
    }
}

fn bounded_eq(ctx: &mut Ctx, rng: &mut ChaCha8Rng, scale: Scale) {
    let e = *ctx.engines;
    for _ in 0..scale.pick(60, 300, 600) {
        let (case_seed, raw) = random_case(rng, 6, 10);
        let inst = raw.normalize_type4();
        if inst.n() > crate::oracle::BOUNDED_MAX_POINTERS {
            continue;
        }
        ctx.cases += 1;
        ctx.check_instance("sandwich", case_seed, &inst, |i| bounded_sandwich(&e, i));
    }
}

/// `cert(j) ⊆ bounded(j) ⊆ fixpoint` and `bounded(j) ⊆ bounded(j+1)` for
/// `j ∈ {0, 1, 2}`.
fn bounded_sandwich(e: &Engines, inst: &ApaInstance) -> Option<String> {
    let exact = match (e.fixpoint)(inst) {
        Ok(p) => p,
        Err(err) => return Some(format!("fixpoint failed: {err}")),
    };
    let mut prev: Option<PointsToMap> = None;
    for j in 0..=3 {
        let got = match (e.bounded)(inst, j) {
            Ok(p) => p,
            Err(err) => return Some(format!("bounded j={j} failed: {err}")),
        };
        if !got.is_subset_of(&exact) {
            return Some(format!("bounded j={j} reports facts outside the exact solution"));
        }
        if prev.as_ref().is_some_and(|p| !p.is_subset_of(&got)) {
            return Some(format!("bounded j={} is not contained in j={j}", j - 1));
        }
        if j < 3 {
            match bounded_points_to(inst, BoundedQuery::of_type(StatementKind::StoreDeref, j), 6) {
                Ok(cert) if !cert.facts.is_subset_of(&got) => {
                    return Some(format!("bounded j={j} misses a fact with a witness using at most {j} stores"))
                }
                Ok(_) => {}
                Err(err) => return Some(format!("bounded witness search failed: {err}")),
            }
        }
        prev = Some(got);
    }
    None
}

fn reductions(ctx: &mut Ctx, rng: &mut ChaCha8Rng, scale: Scale) {
    let per = scale.pick(30, 200, 400);
    for _ in 0..per {
        let case_seed: u64 = rng.gen();
        let mut r = ChaCha8Rng::seed_from_u64(case_seed);
        let n = r.gen_range(3..=25);
        let p = r.gen_range(0.05..0.35);
        let h = random_graph(n, p, case_seed);
        ctx.cases += 1;
        let out = reduce_triangle(&h).expect("n ≥ 3");
        ctx.check_reduction("triangle", case_seed, serialize_graph(&h), &out, check_triangle(&h));
    }
    for _ in 0..per {
        let case_seed: u64 = rng.gen();
        let mut r = ChaCha8Rng::seed_from_u64(case_seed);
        let n = r.gen_range(1..=16);
        let dim = 2 * r.gen_range(1..=4);
        let p = r.gen_range(0.3..0.8);
        let v = random_vectors(n, dim, p, case_seed);
        ctx.cases += 1;
        let out = reduce_ov(&v).expect("even positive dimension");
        ctx.check_reduction("ov", case_seed, serialize_vectors(&v), &out, check_ov(&v));
    }
    for _ in 0..per {
        let case_seed: u64 = rng.gen();
        let n = ChaCha8Rng::seed_from_u64(case_seed).gen_range(1..=20);
        let c = random_circuit(n, case_seed).expect("n ≥ 1");
        ctx.cases += 1;
        let out = reduce_cvp(&c).expect("valid circuit");
        ctx.check_reduction("cvp", case_seed, serialize_circuit(&c), &out, check_cvp(&c));
    }
}

/// pts equals flows-into in `G` when there are no stores and in `Ḡ` in
/// general; the worklist's extraction count equals its final fact count.
fn invariants(ctx: &mut Ctx, rng: &mut ChaCha8Rng, scale: Scale) {
    let e = *ctx.engines;
    for _ in 0..scale.pick(100, 500, 1000) {
        let (case_seed, inst) = random_case(rng, 8, scale.pick(14, 20, 28));
        ctx.cases += 1;
        ctx.check_instance("flows-into", case_seed, &inst, |i| {
            let rep = build_representation(i);
            let g = if rep.type4.is_empty() { rep.graph.clone() } else { resolve_reference(&rep) };
            let flows = PointsToMap::from_matrix(flows_into_matrix(&g, &dyck_reach_exact(&g)));
            diff_message("flows-into vs semantics", &flows, &fixpoint_semantics(i), i)
        });
        ctx.check_instance("worklist-extractions", case_seed, &inst, |i| {
            let run = crate::worklist::solve_worklist_detailed(i, crate::worklist::WorklistOrder::Fifo);
            let facts = run.stats.eps_facts + run.stats.open_facts;
            (run.stats.extractions != facts || run.done.len() != facts)
                .then(|| format!("{} extractions for {facts} facts", run.stats.extractions))
        });
        ctx.check_instance("worklist-engine", case_seed, &inst, |i| {
            diff_message("worklist vs semantics", &(e.worklist)(i), &fixpoint_semantics(i), i)
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn engine_suites_pass_at_small_scale() {
        for s in [Suite::OracleEq, Suite::D1Eq, Suite::BoundedEq, Suite::Invariants] {
            let r = run_verify(s, Scale::Small, 7);
            assert!(r.passed(), "{r}");
            assert!(r.suites[0].cases > 0);
        }
    }

    #[test]
    fn reductions_suite_is_deterministic() {
        let a = run_verify(Suite::Reductions, Scale::Small, 3).to_string();
        assert_eq!(a, run_verify(Suite::Reductions, Scale::Small, 3).to_string());
        assert!(a.contains("90 cases"), "{a}");
    }

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::EACH.into_iter().chain([Suite::All]) {
            assert_eq!(Suite::parse(s.name()).unwrap(), s);
        }
        assert!(Suite::parse("nope").is_err());
        assert!(Scale::parse("huge").is_err());
    }

    fn lossy_d1(g: &DyckGraph) -> Result<(ReachRelation, D1Stats)> {
        let (r, s) = d1_reach_with_stats(g)?;
        let mut m = r.matrix().clone();
        if let Some((x, y)) = r.pairs().find(|&(x, y)| x != y) {
            m.clear(x, y);
        }
        Ok((ReachRelation::from_matrix(m), s))
    }

    #[test]
    fn mutated_d1_is_caught_and_minimized() {
        let engines = Engines {
            d1: lossy_d1,
            ..Engines::default()
        };
        let r = run_verify_with(Suite::D1Eq, Scale::Small, 7, &engines);
        assert!(!r.passed());
        let f = r.failures().next().unwrap();
        assert_eq!(f.property, "d1-vs-oracle");
        // One non-loop edge is the smallest graph with a non-reflexive pair.
        let Reproducer::Edges(text) = &f.reproducer else { panic!("expected an edge list") };
        let g = crate::dyck::parse_edge_list(text).unwrap();
        assert_eq!(g.edge_count(), 1, "{text}");
        let dir = tempfile::tempdir().unwrap();
        let paths = r.dump_reproducers(dir.path()).unwrap();
        assert_eq!(paths.len(), r.failures().count());
        assert_eq!(std::fs::read_to_string(&paths[0]).unwrap(), *text);
    }

    #[test]
    fn shrinking_keeps_a_failing_core() {
        let inst = crate::format::parse_instance("pointers a b c d\na = &b\nc = &d\nd = a\n*c = a\nb = &c\n").unwrap();
        let has_b = |i: &ApaInstance| {
            let p = fixpoint_semantics(i);
            p.contains(i.pointer("d").unwrap(), i.pointer("b").unwrap())
        };
        assert!(has_b(&inst));
        let small = shrink_instance(&inst, has_b);
        assert_eq!(small.m(), 2);
    }
}
