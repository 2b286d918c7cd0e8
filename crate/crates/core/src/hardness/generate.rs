use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dyck::{DyckGraph, EdgeLabel};
use crate::error::{Error, Result};
use crate::instance::{ApaInstance, PointerId, StatementKind};

/// Pointers per module in [`gen_sparse_instance`]. Statements never cross
/// module boundaries.
pub const SPARSE_MODULE_SIZE: usize = 16;

fn pointer_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("p{i}")).collect()
}

/// `n` pointers `p0..`, `m` statement draws with uniform kind and operands.
/// Repeated draws collapse, so the instance may have fewer than `m`
/// statements.
pub fn gen_random_instance(n: usize, m: usize, seed: u64) -> Result<ApaInstance> {
    if n == 0 {
        return Err(Error::InvalidParameters("random instance needs n > 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inst = ApaInstance::with_pointers(&pointer_names(n));
    for _ in 0..m {
        let kind = StatementKind::ALL[rng.gen_range(0..4)];
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        inst.add(kind, PointerId::from(a), PointerId::from(b))?;
    }
    Ok(inst)
}

/// A `c`-sparse instance: at most `c·n` statements, every pointer
/// dereferenced (loads from it plus stores through it) at most `c` times
/// and address-taken at most `c` times. Pointers are split into modules of
/// [`SPARSE_MODULE_SIZE`] and each module gets about `c/2` statements per
/// pointer over its own members.
pub fn gen_sparse_instance(n: usize, c: usize, seed: u64) -> Result<ApaInstance> {
    if n == 0 || c == 0 {
        return Err(Error::InvalidParameters(format!(
            "sparse instance needs n > 0 and c > 0, got n = {n}, c = {c}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inst = ApaInstance::with_pointers(&pointer_names(n));
    let mut derefs = vec![0usize; n];
    let mut refs = vec![0usize; n];
    let mut start = 0;
    while start < n {
        let size = SPARSE_MODULE_SIZE.min(n - start);
        let target = (c * size).div_ceil(2);
        let mut added = 0;
        let mut attempts = 0;
        while added < target && attempts < 8 * target {
            attempts += 1;
            let kind = StatementKind::ALL[rng.gen_range(0..4)];
            let a = start + rng.gen_range(0..size);
            let b = start + rng.gen_range(0..size);
            let counter = match kind {
                StatementKind::Assign => None,
                StatementKind::AddressOf => Some(&mut refs[b]),
                StatementKind::LoadDeref => Some(&mut derefs[b]),
                StatementKind::StoreDeref => Some(&mut derefs[a]),
            };
            if counter.as_ref().is_some_and(|k| **k >= c) {
                continue;
            }
            if inst.add(kind, PointerId::from(a), PointerId::from(b))? {
                if let Some(k) = counter {
                    *k += 1;
                }
                added += 1;
            }
        }
        start += size;
    }
    Ok(inst)
}

/// Every ordered pair `(x, y)` carries each label independently with
/// probability `density`.
pub fn gen_random_dyck(n: usize, density: f64, seed: u64) -> Result<DyckGraph> {
    if n == 0 || !(0.0..=1.0).contains(&density) {
        return Err(Error::InvalidParameters(format!(
            "random Dyck graph needs n > 0 and density in [0, 1], got n = {n}, density = {density}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = DyckGraph::new(n);
    for x in 0..n {
        for y in 0..n {
            for label in EdgeLabel::ALL {
                if rng.gen_bool(density) {
                    g.add_edge(x, y, label)?;
                }
            }
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::serialize_instance;

    #[test]
    fn seeded_calls_are_reproducible() {
        let a = serialize_instance(&gen_random_instance(10, 25, 5).unwrap());
        assert_eq!(a, serialize_instance(&gen_random_instance(10, 25, 5).unwrap()));
        assert_ne!(a, serialize_instance(&gen_random_instance(10, 25, 6).unwrap()));
        let s = serialize_instance(&gen_sparse_instance(200, 4, 1).unwrap());
        assert_eq!(s, serialize_instance(&gen_sparse_instance(200, 4, 1).unwrap()));
        let d = gen_random_dyck(15, 0.2, 3).unwrap();
        assert_eq!(d.edges(), gen_random_dyck(15, 0.2, 3).unwrap().edges());
    }

    #[test]
    fn sparse_counts_hold() {
        for seed in 0..3 {
            let inst = gen_sparse_instance(1000, 4, seed).unwrap();
            assert!(inst.m() <= 4 * 1000);
            let mut derefs = vec![0; inst.n()];
            let mut refs = vec![0; inst.n()];
            for s in inst.statements() {
                match s.kind {
                    StatementKind::LoadDeref => derefs[s.rhs.index()] += 1,
                    StatementKind::StoreDeref => derefs[s.lhs.index()] += 1,
                    StatementKind::AddressOf => refs[s.rhs.index()] += 1,
                    StatementKind::Assign => {}
                }
            }
            assert!(derefs.iter().all(|&k| k <= 4));
            assert!(refs.iter().all(|&k| k <= 4));
            assert!(inst.m() >= 1000, "generator should not be nearly empty");
        }
    }

    #[test]
    fn sparse_statements_stay_in_modules() {
        let inst = gen_sparse_instance(100, 3, 2).unwrap();
        for s in inst.statements() {
            assert_eq!(s.lhs.index() / SPARSE_MODULE_SIZE, s.rhs.index() / SPARSE_MODULE_SIZE);
        }
    }

    #[test]
    fn dyck_edge_count_is_binomial() {
        let (n, p) = (20usize, 0.2);
        let trials = (3 * n * n) as f64;
        let (mean, sd) = (trials * p, (trials * p * (1.0 - p)).sqrt());
        for seed in 0..10 {
            let k = gen_random_dyck(n, p, seed).unwrap().edge_count() as f64;
            assert!((k - mean).abs() <= 6.0 * sd, "seed {seed}: {k} edges");
        }
    }

    #[test]
    fn bad_parameters_are_rejected() {
        assert!(gen_random_instance(0, 3, 0).is_err());
        assert!(gen_sparse_instance(10, 0, 0).is_err());
        assert!(gen_random_dyck(5, 1.5, 0).is_err());
        assert!(gen_random_dyck(0, 0.1, 0).is_err());
    }
}
