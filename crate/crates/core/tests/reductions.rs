use std::path::Path;

use apa::bounded::BoundedSolver;
use apa::d1reach::d1_reach;
use apa::dyck::flows_into;
use apa::hardness::*;
use apa::oracle::{derive_witness, replay_witness};
use apa::worklist::solve_worklist;

/// Bound on `witness length / D` for OV instances, frozen from the
/// construction's per-coordinate statement count plus headroom.
const OV_WITNESS_K: usize = 8;

fn data(name: &str) -> String {
    std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)).unwrap()
}

fn engine_says(out: &ReductionOutput) -> bool {
    out.answer_in(&solve_worklist(&out.instance))
}

#[test]
fn figure_fixtures_are_yes() {
    let h = parse_graph(&data("fig5.graph")).unwrap();
    assert!(check_triangle(&h));
    assert!(engine_says(&reduce_triangle(&h).unwrap()));

    let v = parse_vectors(&data("fig6.vectors")).unwrap();
    assert!(check_ov(&v));
    assert!(engine_says(&reduce_ov(&v).unwrap()));

    let c = parse_circuit(&data("fig7.circuit")).unwrap();
    assert!(check_cvp(&c));
    assert!(engine_says(&reduce_cvp(&c).unwrap()));
}

#[test]
fn triangle_pointer_count() {
    for seed in 0..30 {
        let n = 3 + seed as usize % 23;
        let out = reduce_triangle(&random_graph(n, 0.2, seed)).unwrap();
        assert_eq!(out.instance.n(), 4 * n + 1);
    }
}

#[test]
fn triangle_and_cvp_match_checkers() {
    for seed in 0..100 {
        let h = random_graph(3 + seed as usize % 23, 0.15, seed);
        assert_eq!(engine_says(&reduce_triangle(&h).unwrap()), check_triangle(&h), "graph seed {seed}");
        let c = random_circuit(1 + seed as usize % 20, seed).unwrap();
        assert_eq!(engine_says(&reduce_cvp(&c).unwrap()), check_cvp(&c), "circuit seed {seed}");
    }
}

#[test]
fn cvp_gates_are_reachability_facts() {
    for seed in 0..25 {
        let c = random_circuit(4 + seed as usize % 12, 50 + seed).unwrap();
        let values = evaluate_circuit(&c);
        let out = reduce_cvp(&c).unwrap();
        let mut solver = BoundedSolver::new(&out.instance).unwrap();
        while solver.step().eps_added > 0 {}
        let resolved = solver.graph().clone();
        let reach = d1_reach(&resolved);
        for (k, &value) in values.iter().enumerate() {
            let i = k + 1;
            let id = |name: String| out.instance.pointer(&name).unwrap().index();
            let (x, z) = (id(format!("x_{i}")), id(format!("z_{i}")));
            assert_eq!(reach.reaches(z, x), value, "seed {seed} gate {i}");
            if i > 1 && !matches!(c.gates()[k], Gate::Const(_)) {
                assert_eq!(flows_into(&resolved, x, id(format!("y_{i}")), &reach), value, "seed {seed} gate {i}");
            }
        }
    }
}

#[test]
fn ov_yes_instances_are_found() {
    for seed in 0..120 {
        let v = random_vectors(1 + seed as usize % 16, 2 * (1 + seed as usize % 4), 0.5, seed);
        if check_ov(&v) {
            assert!(engine_says(&reduce_ov(&v).unwrap()), "seed {seed}");
        }
    }
}

#[test]
fn ov_witnesses_are_short() {
    let mut checked = 0;
    for seed in 0..200 {
        let d = 2 * (1 + seed as usize % 2);
        let v = random_vectors(1 + seed as usize % 6, d, 0.5, seed);
        if !check_ov(&v) {
            continue;
        }
        let out = reduce_ov(&v).unwrap();
        let w = derive_witness(&out.instance, out.query.0, out.query.1).expect("YES instance has a witness");
        assert!(w.len() <= OV_WITNESS_K * d, "seed {seed}: {} statements for D = {d}", w.len());
        assert!(replay_witness(&out.instance, &w).unwrap().get(out.query.0, out.query.1));
        checked += 1;
    }
    assert!(checked > 100);
}
