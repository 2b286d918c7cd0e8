//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Each export takes the same text formats as the command-line tool and
//! returns text. The plain functions below the bindings do the work so they
//! can be tested natively.

use wasm_bindgen::prelude::*;

use apa::bounded::solve_to_fixpoint;
use apa::d1reach::d1_reach_with_stats;
use apa::dyck::parse_edge_list;
use apa::format::parse_instance;
use apa::hardness::{parse_circuit, parse_graph, parse_vectors, reduce_cvp, reduce_ov, reduce_triangle, ReductionOutput};
use apa::worklist::solve_worklist;

/// Points-to sets of an `.apa` program, one `a: {..}` line per pointer.
/// `engine` is `worklist` or `rounds`.
#[wasm_bindgen]
pub fn solve(program: &str, engine: &str) -> Result<String, JsError> {
    solve_text(program, engine).map_err(|e| JsError::new(&e))
}

/// D-reachable pairs of an edge list, with a summary line first.
#[wasm_bindgen]
pub fn reach(edges: &str) -> Result<String, JsError> {
    reach_text(edges).map_err(|e| JsError::new(&e))
}

/// Builds the points-to instance for `kind` (`triangle`, `ov`, `cvp`) from
/// its input text and answers its query.
#[wasm_bindgen]
pub fn reduce(kind: &str, input: &str) -> Result<String, JsError> {
    reduce_text(kind, input).map_err(|e| JsError::new(&e))
}

pub fn solve_text(program: &str, engine: &str) -> Result<String, String> {
    let inst = parse_instance(program).map_err(|e| e.to_string())?;
    let pts = match engine {
        "worklist" => solve_worklist(&inst),
        "rounds" => solve_to_fixpoint(&inst.normalize_type4())
            .map_err(|e| e.to_string())?
            .restrict(inst.n()),
        other => return Err(format!("unknown engine `{other}`")),
    };
    Ok(pts.render(&inst))
}

pub fn reach_text(edges: &str) -> Result<String, String> {
    let g = parse_edge_list(edges).map_err(|e| e.to_string())?;
    let (r, stats) = d1_reach_with_stats(&g).map_err(|e| e.to_string())?;
    let mut out = format!(
        "# {} nodes, {} edges, {} pairs, {} outer iterations\n",
        g.n(),
        g.edge_count(),
        r.pair_count(),
        stats.outer_iterations
    );
    for (x, y) in r.pairs().filter(|(x, y)| x != y) {
        out.push_str(&format!("{x} {y}\n"));
    }
    Ok(out)
}

pub fn reduce_text(kind: &str, input: &str) -> Result<String, String> {
    let err = |e: apa::Error| e.to_string();
    let out: ReductionOutput = match kind {
        "triangle" => reduce_triangle(&parse_graph(input).map_err(err)?),
        "ov" => reduce_ov(&parse_vectors(input).map_err(err)?.padded_to_even()),
        "cvp" => reduce_cvp(&parse_circuit(input).map_err(err)?),
        other => return Err(format!("unknown reduction `{other}`")),
    }
    .map_err(err)?;
    let yes = out.answer_in(&solve_worklist(&out.instance));
    Ok(format!("# answer: {}\n{}", if yes { "YES" } else { "NO" }, out.to_apa()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_both_engines() {
        let program = "b = &a\nd = &a\nc = &b\nd = &c\n*d = c\nd = *e\ne = *d\ne = &f\n";
        let a = solve_text(program, "worklist").unwrap();
        assert_eq!(a, solve_text(program, "rounds").unwrap());
        assert!(a.contains("d: {a, c}"));
        assert!(solve_text(program, "nope").is_err());
        assert!(solve_text("a = ", "worklist").is_err());
    }

    #[test]
    fn reach_lists_pairs() {
        let out = reach_text("0 1 open\n1 2 eps\n2 3 close\n").unwrap();
        assert!(out.starts_with("# 4 nodes, 3 edges"));
        assert!(out.lines().any(|l| l == "0 3"));
        assert!(!out.lines().any(|l| l == "0 1"));
    }

    #[test]
    fn reduce_triangle_answers() {
        let yes = reduce_text("triangle", "3\n1 2\n2 3\n1 3\n").unwrap();
        assert!(yes.starts_with("# answer: YES\n"));
        assert!(yes.contains("# query "));
        let no = reduce_text("triangle", "3\n1 2\n2 3\n").unwrap();
        assert!(no.starts_with("# answer: NO\n"));
        assert!(reduce_text("sat", "").is_err());
    }
}
