//! Benchmark harness: one CSV row per (engine, size, seed) cell.
//!
//! Cells run on worker threads (`APA_THREADS` caps the count) and each one
//! builds its own instance from the seed. Rows come back sorted by size,
//! seed and engine, so every column except `ms` is reproducible.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use crate::boolmat::{ceil_log2, worker_threads};
use crate::bounded::solve_to_fixpoint_with_rounds;
use crate::d1reach::d1_reach_with_stats;
use crate::dyck::DyckGraph;
use crate::error::{Error, Result};
use crate::hardness::{
    gen_random_dyck, gen_random_instance, gen_sparse_instance, random_circuit, random_graph, random_vectors, reduce_cvp,
    reduce_ov, reduce_triangle,
};
use crate::instance::ApaInstance;
use crate::oracle::{dyck_reach_exact, fixpoint_semantics};
use crate::worklist::{solve_worklist_detailed, WorklistOrder};

pub const CSV_HEADER: &str = "engine,n,m,seed,ms,facts,rounds";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Random,
    Sparse,
    Triangle,
    Ov,
    Cvp,
    Dyck,
}

impl Family {
    pub const ALL: [Family; 6] = [Family::Random, Family::Sparse, Family::Triangle, Family::Ov, Family::Cvp, Family::Dyck];

    pub fn name(self) -> &'static str {
        match self {
            Family::Random => "random",
            Family::Sparse => "sparse",
            Family::Triangle => "triangle",
            Family::Ov => "ov",
            Family::Cvp => "cvp",
            Family::Dyck => "dyck",
        }
    }

    pub fn parse(s: &str) -> Result<Family> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::InvalidParameters(format!("unknown family `{s}`")))
    }

    pub fn default_engines(self) -> Vec<BenchEngine> {
        match self {
            Family::Dyck => vec![BenchEngine::D1],
            _ => vec![BenchEngine::Worklist, BenchEngine::BoundedFixpoint],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum BenchEngine {
    Worklist,
    BoundedFixpoint,
    Oracle,
    D1,
    DyckOracle,
}

impl BenchEngine {
    pub const ALL: [BenchEngine; 5] = [
        BenchEngine::Worklist,
        BenchEngine::BoundedFixpoint,
        BenchEngine::Oracle,
        BenchEngine::D1,
        BenchEngine::DyckOracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BenchEngine::Worklist => "worklist",
            BenchEngine::BoundedFixpoint => "bounded-fixpoint",
            BenchEngine::Oracle => "oracle",
            BenchEngine::D1 => "d1",
            BenchEngine::DyckOracle => "dyck-oracle",
        }
    }

    pub fn parse(s: &str) -> Result<BenchEngine> {
        BenchEngine::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::InvalidParameters(format!("unknown engine `{s}`")))
    }

    fn on_graphs(self) -> bool {
        matches!(self, BenchEngine::D1 | BenchEngine::DyckOracle)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRecord {
    pub engine: String,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub ms: f64,
    /// Σ|pts(a)| for APA engines, reachable pairs for graph engines.
    pub facts: usize,
    /// Worklist extractions, bounded rounds or outer D1 iterations; 0 for
    /// the oracles.
    pub rounds: usize,
}

impl BenchRecord {
    pub fn csv_row(&self) -> String {
        format!("{},{},{},{},{:.3},{},{}", self.engine, self.n, self.m, self.seed, self.ms, self.facts, self.rounds)
    }
}

pub fn to_csv(records: &[BenchRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

enum Subject {
    Apa(ApaInstance),
    Graph(DyckGraph),
}

/// The instance of `family` at `size` for `seed`.
fn build(family: Family, size: usize, seed: u64) -> Result<Subject> {
    Ok(match family {
        Family::Random => Subject::Apa(gen_random_instance(size, 2 * size, seed)?),
        Family::Sparse => Subject::Apa(gen_sparse_instance(size, 4, seed)?),
        Family::Triangle => {
            let p = (2.0 / size.max(1) as f64).min(0.5);
            Subject::Apa(reduce_triangle(&random_graph(size, p, seed))?.instance)
        }
        Family::Ov => {
            let dim = 2 * ceil_log2(size.max(2)).div_ceil(2).max(1);
            Subject::Apa(reduce_ov(&random_vectors(size, dim, 0.5, seed))?.instance)
        }
        Family::Cvp => Subject::Apa(reduce_cvp(&random_circuit(size, seed)?)?.instance),
        Family::Dyck => Subject::Graph(gen_random_dyck(size, (2.0 / size.max(1) as f64).min(0.3), seed)?),
    })
}

fn run_cell(family: Family, engine: BenchEngine, size: usize, seed: u64) -> Result<BenchRecord> {
    let subject = build(family, size, seed)?;
    let record = |n, m, ms, facts, rounds| BenchRecord {
        engine: engine.name().to_string(),
        n,
        m,
        seed,
        ms,
        facts,
        rounds,
    };
    let ms = |t: Instant| t.elapsed().as_secs_f64() * 1e3;
    match subject {
        Subject::Apa(inst) => {
            let (n, m) = (inst.n(), inst.m());
            let t = Instant::now();
            let (facts, rounds) = match engine {
                BenchEngine::Worklist => {
                    let run = solve_worklist_detailed(&inst, WorklistOrder::Fifo);
                    (run.points_to.total_size(), run.stats.extractions)
                }
                BenchEngine::BoundedFixpoint => {
                    let (pts, rounds) = solve_to_fixpoint_with_rounds(&inst.normalize_type4())?;
                    (pts.restrict(n).total_size(), rounds.len())
                }
                BenchEngine::Oracle => (fixpoint_semantics(&inst).total_size(), 0),
                BenchEngine::D1 | BenchEngine::DyckOracle => unreachable!("checked by run_bench"),
            };
            Ok(record(n, m, ms(t), facts, rounds))
        }
        Subject::Graph(g) => {
            let (n, m) = (g.n(), g.edge_count());
            let t = Instant::now();
            let (facts, rounds) = match engine {
                BenchEngine::D1 => {
                    let (r, stats) = d1_reach_with_stats(&g)?;
                    (r.pair_count(), stats.outer_iterations)
                }
                BenchEngine::DyckOracle => (dyck_reach_exact(&g).pair_count(), 0),
                _ => unreachable!("checked by run_bench"),
            };
            Ok(record(n, m, ms(t), facts, rounds))
        }
    }
}

pub fn run_bench(family: Family, sizes: &[usize], engines: &[BenchEngine], seeds: &[u64]) -> Result<Vec<BenchRecord>> {
    if let Some(e) = engines.iter().find(|e| e.on_graphs() != (family == Family::Dyck)) {
        return Err(Error::InvalidParameters(format!(
            "engine `{}` does not run on the `{}` family",
            e.name(),
            family.name()
        )));
    }
    let mut cells = Vec::new();
    for (si, &size) in sizes.iter().enumerate() {
        for (di, &seed) in seeds.iter().enumerate() {
            for &engine in engines {
                cells.push(((si, di, engine), size, seed));
            }
        }
    }
    let next = AtomicUsize::new(0);
    let results = Mutex::new(Vec::with_capacity(cells.len()));
    let workers = worker_threads().min(cells.len()).max(1);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(key, size, seed)) = cells.get(k) else { break };
                let out = run_cell(family, key.2, size, seed);
                results.lock().expect("no worker panicked").push((key, out));
            });
        }
    });
    let mut results = results.into_inner().expect("no worker panicked");
    results.sort_by_key(|(key, _)| *key);
    results.into_iter().map(|(_, r)| r).collect()
}
