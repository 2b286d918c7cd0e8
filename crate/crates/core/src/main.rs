use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use apa::bench::{run_bench, to_csv, BenchEngine, Family};
use apa::bounded::{rounds_csv, solve_bounded_with_rounds, solve_to_fixpoint_with_rounds};
use apa::d1reach::d1_reach;
use apa::dyck::{parse_edge_list, serialize_edge_list, ReachRelation};
use apa::format::{parse_instance, parse_query_comment};
use apa::hardness::{
    gen_random_dyck, gen_random_instance, gen_sparse_instance, parse_circuit, parse_graph, parse_vectors,
    random_circuit, random_graph, random_vectors, reduce_cvp, reduce_ov, reduce_triangle, ReductionOutput,
};
use apa::oracle::{dyck_reach_exact, fixpoint_semantics};
use apa::verify::{run_verify, Scale, Suite};
use apa::worklist::{check_sparsity, solve_worklist_detailed, WorklistOrder};
use apa::{ApaInstance, Error, PointsToMap, Result};

#[derive(Parser)]
#[command(name = "apa", version, about = "Andersen points-to analysis workbench")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Worklist,
    Oracle,
    Bounded,
    BoundedFixpoint,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReachAlgo {
    Oracle,
    D1,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    Triangle,
    Ov,
    Cvp,
    Random,
    Sparse,
    Dyck,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the points-to set of every pointer.
    Solve {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "worklist")]
        algo: Algo,
        /// Round budget for `--algo bounded`.
        #[arg(long)]
        budget: Option<usize>,
        /// Sparsity report as a JSON line on stderr (worklist only).
        #[arg(long)]
        stats: bool,
        /// Write per-round ε-edge counts as CSV (bounded engines only).
        #[arg(long)]
        emit_rounds: Option<PathBuf>,
    },
    /// Is `b` in pts(`a`)? Exit 0 for YES, 1 for NO.
    Query {
        file: PathBuf,
        a: Option<String>,
        b: Option<String>,
        /// Take the pair from the file's `# query a b` line.
        #[arg(long)]
        from_file_query: bool,
        #[arg(long, value_enum, default_value = "worklist")]
        algo: Algo,
        #[arg(long)]
        budget: Option<usize>,
    },
    /// D-reachable pairs of an edge-list graph.
    Reach {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "d1")]
        algo: ReachAlgo,
        /// Print only the number of pairs.
        #[arg(long)]
        count: bool,
    },
    /// Emit an instance; reductions read their input from `--input` or draw a random one.
    Gen {
        #[arg(value_enum)]
        kind: GenKind,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        n: usize,
        /// Statements for `random`.
        #[arg(short, long)]
        m: Option<usize>,
        /// Sparsity constant for `sparse`.
        #[arg(short, long, default_value_t = 4)]
        c: usize,
        /// Dimension for `ov` (odd values are padded).
        #[arg(long)]
        dim: Option<usize>,
        /// Edge probability (`triangle`), one-bit probability (`ov`) or label density (`dyck`).
        #[arg(short, long)]
        p: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Run property suites; exits nonzero if any property fails.
    Verify {
        #[arg(default_value = "all")]
        suite: String,
        #[arg(long, default_value = "small")]
        scale: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Where failing cases are written.
        #[arg(long, default_value = "apa-repro")]
        out_dir: PathBuf,
    },
    /// Time engines over a generated family and write CSV.
    Bench {
        family: String,
        #[arg(long, value_delimiter = ',', default_value = "50,100,200")]
        sizes: Vec<usize>,
        #[arg(long, value_delimiter = ',')]
        engines: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "0")]
        seeds: Vec<u64>,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::InvalidParameters(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Solution over the pointers of `inst`; bounded engines run on the
/// store-normalized instance.
fn solve(inst: &ApaInstance, algo: Algo, budget: Option<usize>, stats: bool, rounds_out: Option<&Path>) -> Result<PointsToMap> {
    if rounds_out.is_some() && matches!(algo, Algo::Worklist | Algo::Oracle) {
        return Err(Error::InvalidParameters("--emit-rounds needs a bounded engine".into()));
    }
    match algo {
        Algo::Worklist => {
            let run = solve_worklist_detailed(inst, WorklistOrder::Fifo);
            if stats {
                let report = check_sparsity(inst, &run.done);
                eprintln!("{}", serde_json::to_string(&report).expect("plain struct"));
                eprintln!("{}", serde_json::to_string(&run.stats).expect("plain struct"));
            }
            Ok(run.points_to)
        }
        Algo::Oracle => Ok(fixpoint_semantics(inst)),
        Algo::Bounded | Algo::BoundedFixpoint => {
            let norm = inst.normalize_type4();
            let (pts, rounds) = match algo {
                Algo::Bounded => {
                    let j = budget.ok_or_else(|| Error::InvalidParameters("--algo bounded needs --budget".into()))?;
                    solve_bounded_with_rounds(&norm, j)?
                }
                _ => solve_to_fixpoint_with_rounds(&norm)?,
            };
            if let Some(p) = rounds_out {
                fs::write(p, rounds_csv(&rounds))?;
            }
            Ok(pts.restrict(inst.n()))
        }
    }
}

fn print_pairs(r: &ReachRelation, count: bool) -> String {
    if count {
        return format!("{}\n", r.pair_count());
    }
    r.pairs().map(|(x, y)| format!("{x} {y}\n")).collect()
}

fn gen_reduction(kind: GenKind, a: &GenArgs) -> Result<ReductionOutput> {
    let text = a.input.as_deref().map(read).transpose()?;
    match kind {
        GenKind::Triangle => {
            let h = match text {
                Some(t) => parse_graph(&t)?,
                None => random_graph(a.n, a.p.unwrap_or(0.3), a.seed),
            };
            reduce_triangle(&h)
        }
        GenKind::Ov => {
            let v = match text {
                Some(t) => parse_vectors(&t)?,
                None => random_vectors(a.n, a.dim.unwrap_or(4), a.p.unwrap_or(0.5), a.seed),
            };
            reduce_ov(&v.padded_to_even())
        }
        GenKind::Cvp => {
            let c = match text {
                Some(t) => parse_circuit(&t)?,
                None => random_circuit(a.n, a.seed)?,
            };
            reduce_cvp(&c)
        }
        _ => unreachable!("only reductions"),
    }
}

struct GenArgs {
    input: Option<PathBuf>,
    n: usize,
    dim: Option<usize>,
    p: Option<f64>,
    seed: u64,
}

fn run(cli: Cli) -> Result<u8> {
    match cli.cmd {
        Cmd::Solve {
            file,
            algo,
            budget,
            stats,
            emit_rounds,
        } => {
            let inst = parse_instance(&read(&file)?)?;
            let pts = solve(&inst, algo, budget, stats, emit_rounds.as_deref())?;
            emit(None, &pts.render(&inst))?;
            Ok(0)
        }
        Cmd::Query {
            file,
            a,
            b,
            from_file_query,
            algo,
            budget,
        } => {
            let text = read(&file)?;
            let inst = parse_instance(&text)?;
            let (a, b) = match (a, b, from_file_query) {
                (Some(a), Some(b), false) => (a, b),
                (None, None, true) => parse_query_comment(&text)
                    .ok_or_else(|| Error::InvalidParameters("no `# query a b` line in the file".into()))?,
                _ => return Err(Error::InvalidParameters("give either `a b` or --from-file-query".into())),
            };
            let id = |name: &str| inst.pointer(name).ok_or_else(|| Error::UnknownPointer(name.to_string()));
            let (ia, ib) = (id(&a)?, id(&b)?);
            let pts = solve(&inst, algo, budget, false, None)?;
            let yes = pts.contains(ia, ib);
            println!("{}", if yes { "YES" } else { "NO" });
            Ok(if yes { 0 } else { 1 })
        }
        Cmd::Reach { file, algo, count } => {
            let g = parse_edge_list(&read(&file)?)?;
            let r = match algo {
                ReachAlgo::Oracle => dyck_reach_exact(&g),
                ReachAlgo::D1 => d1_reach(&g),
            };
            emit(None, &print_pairs(&r, count))?;
            Ok(0)
        }
        Cmd::Gen {
            kind,
            input,
            n,
            m,
            c,
            dim,
            p,
            seed,
            out,
        } => {
            let text = match kind {
                GenKind::Random => apa::format::serialize_instance(&gen_random_instance(n, m.unwrap_or(2 * n), seed)?),
                GenKind::Sparse => apa::format::serialize_instance(&gen_sparse_instance(n, c, seed)?),
                GenKind::Dyck => serialize_edge_list(&gen_random_dyck(n, p.unwrap_or(0.1), seed)?),
                _ => gen_reduction(
                    kind,
                    &GenArgs {
                        input,
                        n,
                        dim,
                        p,
                        seed,
                    },
                )?
                .to_apa(),
            };
            emit(out.as_deref(), &text)?;
            Ok(0)
        }
        Cmd::Verify {
            suite,
            scale,
            seed,
            out_dir,
        } => {
            let report = run_verify(Suite::parse(&suite)?, Scale::parse(&scale)?, seed);
            print!("{report}");
            if report.passed() {
                return Ok(0);
            }
            for p in report.dump_reproducers(&out_dir)? {
                println!("reproducer: {}", p.display());
            }
            Ok(1)
        }
        Cmd::Bench {
            family,
            sizes,
            engines,
            seeds,
            out,
        } => {
            let family = Family::parse(&family)?;
            let engines = if engines.is_empty() {
                family.default_engines()
            } else {
                engines.iter().map(|e| BenchEngine::parse(e)).collect::<Result<_>>()?
            };
            let rows = run_bench(family, &sizes, &engines, &seeds)?;
            emit(out.as_deref(), &to_csv(&rows))?;
            Ok(0)
        }
    }
}
