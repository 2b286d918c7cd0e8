//! Hard-instance generators: reductions from triangle detection,
//! orthogonal vectors and monotone circuit evaluation, with brute-force
//! checkers, plus random instance factories.

mod cvp;
mod generate;
mod ov;
mod triangle;

pub use cvp::{check_cvp, evaluate_circuit, parse_circuit, random_circuit, reduce_cvp, serialize_circuit, Gate, MonotoneCircuit};
pub use generate::{gen_random_dyck, gen_random_instance, gen_sparse_instance, SPARSE_MODULE_SIZE};
pub use ov::{check_ov, parse_vectors, random_vectors, reduce_ov, serialize_vectors, VectorSets};
pub use triangle::{
    check_triangle, count_triangles_by_matrix, parse_graph, random_graph, reduce_triangle, serialize_graph, UndirectedGraph,
};

use crate::error::{Error, Result};
use crate::format::serialize_instance;
use crate::instance::{ApaInstance, PointerId, PointsToMap};

/// An instance with an on-demand question "is `query.1` in pts(`query.0`)?".
#[derive(Clone, Debug)]
pub struct ReductionOutput {
    pub instance: ApaInstance,
    pub query: (PointerId, PointerId),
}

impl ReductionOutput {
    pub fn answer_in(&self, pts: &PointsToMap) -> bool {
        pts.contains(self.query.0, self.query.1)
    }

    /// The `.apa` text followed by a `# query a b` line.
    pub fn to_apa(&self) -> String {
        let mut out = serialize_instance(&self.instance);
        out.push_str(&format!(
            "# query {} {}\n",
            self.instance.name(self.query.0),
            self.instance.name(self.query.1)
        ));
        out
    }
}

struct Builder {
    inst: ApaInstance,
}

impl Builder {
    fn new() -> Self {
        Builder { inst: ApaInstance::new() }
    }

    fn ptr(&mut self, name: &str) -> PointerId {
        self.inst.intern(name)
    }

    /// `lhs = rhs`
    fn assign(&mut self, lhs: &str, rhs: &str) {
        self.inst.add_named(crate::instance::StatementKind::Assign, lhs, rhs);
    }

    /// `lhs = &rhs`
    fn address_of(&mut self, lhs: &str, rhs: &str) {
        self.inst.add_named(crate::instance::StatementKind::AddressOf, lhs, rhs);
    }

    /// `lhs = *rhs`
    fn load(&mut self, lhs: &str, rhs: &str) {
        self.inst.add_named(crate::instance::StatementKind::LoadDeref, lhs, rhs);
    }

    /// `*lhs = rhs`
    fn store(&mut self, lhs: &str, rhs: &str) {
        self.inst.add_named(crate::instance::StatementKind::StoreDeref, lhs, rhs);
    }

    fn finish(self, a: &str, b: &str) -> ReductionOutput {
        let query = (
            self.inst.pointer(a).expect("query pointer exists"),
            self.inst.pointer(b).expect("query pointer exists"),
        );
        ReductionOutput {
            instance: self.inst,
            query,
        }
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Non-empty, comment-stripped lines with 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then_some((i + 1, line))
    })
}

fn parse_usize(tok: &str, line: usize) -> Result<usize> {
    tok.parse()
        .map_err(|_| parse_err(line, format!("expected a number, found `{tok}`")))
}
