use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{content_lines, parse_err, parse_usize, Builder, ReductionOutput};
use crate::error::{Error, Result};

/// One assignment `A_i`. Operand indices are 1-based and refer to
/// earlier assignments.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gate {
    Const(bool),
    And(usize, usize),
    Or(usize, usize),
}

/// A monotone circuit `A_1, …, A_n`; the output is `A_n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonotoneCircuit {
    gates: Vec<Gate>,
}

impl MonotoneCircuit {
    /// Checks `j < k < i` for every gate `A_i = A_j op A_k`.
    pub fn new(gates: Vec<Gate>) -> Result<Self> {
        if gates.is_empty() {
            return Err(Error::InvalidParameters("circuit has no assignments".into()));
        }
        for (idx, g) in gates.iter().enumerate() {
            let i = idx + 1;
            if let Gate::And(j, k) | Gate::Or(j, k) = *g {
                if !(1 <= j && j < k && k < i) {
                    return Err(Error::InvalidParameters(format!(
                        "gate {i} reads {j} and {k}; operands must satisfy j < k < i"
                    )));
                }
            }
        }
        Ok(MonotoneCircuit { gates })
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }
}

/// Values of all assignments in order.
pub fn evaluate_circuit(c: &MonotoneCircuit) -> Vec<bool> {
    let mut val: Vec<bool> = Vec::with_capacity(c.len());
    for g in c.gates() {
        let v = match *g {
            Gate::Const(b) => b,
            Gate::And(j, k) => val[j - 1] && val[k - 1],
            Gate::Or(j, k) => val[j - 1] || val[k - 1],
        };
        val.push(v);
    }
    val
}

pub fn check_cvp(c: &MonotoneCircuit) -> bool {
    *evaluate_circuit(c).last().expect("nonempty circuit")
}

/// `s ∈ pts(x_n)` iff the circuit evaluates to 1.
///
/// Inputs get `x_i = z_i` when true. Gate `i` gets an address-of chain of
/// `i + 1` edges from `x_i` ending in `z_j = &x_i_i` (and a hatted one
/// ending in `z_k` for OR), a load chain of `i` edges into `y_i` starting
/// at `x_k` (AND) or at `x_j` and `x_k` (OR), the link `z_k = x_j` for
/// AND, and `*y_i = z_i`. Finally `z_n = &s`.
pub fn reduce_cvp(c: &MonotoneCircuit) -> Result<ReductionOutput> {
    let mut b = Builder::new();
    let x = |i: usize| format!("x_{i}");
    let y = |i: usize| format!("y_{i}");
    let z = |i: usize| format!("z_{i}");
    for (idx, g) in c.gates().iter().enumerate() {
        let i = idx + 1;
        match *g {
            Gate::Const(v) => {
                b.ptr(&x(i));
                b.ptr(&z(i));
                if v {
                    b.assign(&x(i), &z(i));
                }
            }
            Gate::And(j, k) => {
                b.ptr(&x(i));
                b.ptr(&y(i));
                b.ptr(&z(i));
                address_chain(&mut b, i, "x", &z(j));
                b.assign(&z(k), &x(j));
                load_chain(&mut b, i, "y", &x(k));
                b.store(&y(i), &z(i));
            }
            Gate::Or(j, k) => {
                b.ptr(&x(i));
                b.ptr(&y(i));
                b.ptr(&z(i));
                address_chain(&mut b, i, "x", &z(j));
                address_chain(&mut b, i, "xh", &z(k));
                load_chain(&mut b, i, "y", &x(j));
                load_chain(&mut b, i, "yh", &x(k));
                b.store(&y(i), &z(i));
            }
        }
    }
    let n = c.len();
    b.address_of(&z(n), "s");
    Ok(b.finish(&x(n), "s"))
}

/// `p_i_1 = &x_i`, `p_i_m = &p_i_{m-1}` up to `m = i`, then
/// `target = &p_i_i`.
fn address_chain(b: &mut Builder, i: usize, p: &str, target: &str) {
    let mut prev = format!("x_{i}");
    for m in 1..=i {
        let cur = format!("{p}_{i}_{m}");
        b.address_of(&cur, &prev);
        prev = cur;
    }
    b.address_of(target, &prev);
}

/// `p_i_{i-1} = *source`, `p_i_{m-1} = *p_i_m` down to `m = 2`, then
/// `y_i = *p_i_1`. For `i = 1` this is the single `y_1 = *source`.
fn load_chain(b: &mut Builder, i: usize, p: &str, source: &str) {
    let mut prev = source.to_string();
    for m in (1..i).rev() {
        let cur = format!("{p}_{i}_{m}");
        b.load(&cur, &prev);
        prev = cur;
    }
    b.load(&format!("y_{i}"), &prev);
}

/// Random circuit with `n` assignments: gates read two distinct earlier
/// assignments, each assignment feeding at most two gates. Assignments
/// that cannot find two free operands become inputs.
pub fn random_circuit(n: usize, seed: u64) -> Result<MonotoneCircuit> {
    if n == 0 {
        return Err(Error::InvalidParameters("circuit needs at least one assignment".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fanout = vec![0u8; n];
    let mut gates = Vec::with_capacity(n);
    let inputs = (n / 3).max(2).min(n);
    for idx in 0..n {
        let free: Vec<usize> = (0..idx).filter(|&p| fanout[p] < 2).collect();
        if idx < inputs || free.len() < 2 {
            gates.push(Gate::Const(rng.gen_bool(0.5)));
            continue;
        }
        // Prefer the latest assignment so the output depends on most gates.
        let k = if fanout[idx - 1] < 2 && rng.gen_bool(0.6) {
            idx - 1
        } else {
            free[rng.gen_range(0..free.len())]
        };
        let rest: Vec<usize> = free.iter().copied().filter(|&p| p != k).collect();
        let j = rest[rng.gen_range(0..rest.len())];
        let (j, k) = (j.min(k), j.max(k));
        fanout[j] += 1;
        fanout[k] += 1;
        gates.push(if rng.gen_bool(0.5) {
            Gate::And(j + 1, k + 1)
        } else {
            Gate::Or(j + 1, k + 1)
        });
    }
    MonotoneCircuit::new(gates)
}

/// Lines `i CONST 0|1` or `i AND|OR j k`, with `i` running `1, 2, …`.
pub fn parse_circuit(text: &str) -> Result<MonotoneCircuit> {
    let mut gates = Vec::new();
    for (line, l) in content_lines(text) {
        let toks: Vec<&str> = l.split_whitespace().collect();
        let i = parse_usize(toks[0], line)?;
        if i != gates.len() + 1 {
            return Err(parse_err(line, format!("expected assignment {}, found {i}", gates.len() + 1)));
        }
        let gate = match (toks.get(1).map(|t| t.to_ascii_uppercase()).as_deref(), toks.len()) {
            (Some("CONST"), 3) => match toks[2] {
                "0" => Gate::Const(false),
                "1" => Gate::Const(true),
                other => return Err(parse_err(line, format!("constant must be 0 or 1, found `{other}`"))),
            },
            (Some("AND"), 4) => Gate::And(parse_usize(toks[2], line)?, parse_usize(toks[3], line)?),
            (Some("OR"), 4) => Gate::Or(parse_usize(toks[2], line)?, parse_usize(toks[3], line)?),
            _ => return Err(parse_err(line, "expected `i CONST 0|1` or `i AND|OR j k`")),
        };
        if let Gate::And(j, k) | Gate::Or(j, k) = gate {
            if !(1 <= j && j < k && k < i) {
                return Err(parse_err(line, format!("operands {j} {k} must satisfy j < k < {i}")));
            }
        }
        gates.push(gate);
    }
    MonotoneCircuit::new(gates).map_err(|e| parse_err(1, e.to_string()))
}

pub fn serialize_circuit(c: &MonotoneCircuit) -> String {
    let mut out = String::new();
    for (idx, g) in c.gates().iter().enumerate() {
        let i = idx + 1;
        match *g {
            Gate::Const(v) => out.push_str(&format!("{i} CONST {}\n", u8::from(v))),
            Gate::And(j, k) => out.push_str(&format!("{i} AND {j} {k}\n")),
            Gate::Or(j, k) => out.push_str(&format!("{i} OR {j} {k}\n")),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::worklist::solve_worklist;

    fn fig7() -> MonotoneCircuit {
        MonotoneCircuit::new(vec![
            Gate::Const(true),
            Gate::Const(true),
            Gate::Const(false),
            Gate::And(1, 2),
            Gate::And(2, 3),
            Gate::Or(4, 5),
        ])
        .unwrap()
    }

    fn answer(c: &MonotoneCircuit) -> bool {
        let out = reduce_cvp(c).unwrap();
        out.answer_in(&solve_worklist(&out.instance))
    }

    #[test]
    fn fig7_is_yes() {
        let c = fig7();
        assert_eq!(evaluate_circuit(&c), vec![true, true, false, true, false, true]);
        assert!(answer(&c));
    }

    #[test]
    fn fig7_store_statements() {
        let out = reduce_cvp(&fig7()).unwrap();
        let inst = &out.instance;
        let mut stores: Vec<String> = inst
            .statements_of(crate::instance::StatementKind::StoreDeref)
            .map(|s| inst.display_statement(s))
            .collect();
        stores.sort();
        assert_eq!(stores, ["*y_4 = z_4", "*y_5 = z_5", "*y_6 = z_6"]);
    }

    #[test]
    fn single_false_input_is_no() {
        let c = MonotoneCircuit::new(vec![Gate::Const(false)]).unwrap();
        assert!(!check_cvp(&c));
        assert!(!answer(&c));
        let c = MonotoneCircuit::new(vec![Gate::Const(true)]).unwrap();
        assert!(answer(&c));
    }

    #[test]
    fn and_of_two_true_inputs() {
        let c = MonotoneCircuit::new(vec![Gate::Const(true), Gate::Const(true), Gate::And(1, 2)]).unwrap();
        assert!(check_cvp(&c));
        assert!(answer(&c));
    }

    #[test]
    fn index_condition_is_enforced() {
        assert!(MonotoneCircuit::new(vec![Gate::Const(true), Gate::And(1, 1)]).is_err());
        assert!(MonotoneCircuit::new(vec![Gate::Const(true), Gate::Const(true), Gate::Or(2, 1)]).is_err());
        assert!(MonotoneCircuit::new(vec![Gate::Const(true), Gate::Const(true), Gate::Or(1, 3)]).is_err());
    }

    #[test]
    fn reduction_matches_evaluation() {
        for seed in 0..60 {
            let c = random_circuit(1 + seed as usize % 14, seed).unwrap();
            assert_eq!(answer(&c), check_cvp(&c), "seed {seed}: {c:?}");
        }
    }

    #[test]
    fn every_gate_is_encoded() {
        // x_i flows into y_i exactly when gate i is true.
        for seed in 0..30 {
            let c = random_circuit(3 + seed as usize % 10, 50 + seed).unwrap();
            let out = reduce_cvp(&c).unwrap();
            let inst = &out.instance;
            let pts = solve_worklist(inst);
            for (idx, (g, v)) in c.gates().iter().zip(evaluate_circuit(&c)).enumerate() {
                if matches!(g, Gate::Const(_)) {
                    continue;
                }
                let i = idx + 1;
                let (x, y) = (inst.pointer(&format!("x_{i}")).unwrap(), inst.pointer(&format!("y_{i}")).unwrap());
                assert_eq!(pts.contains(y, x), v, "seed {seed} gate {i}");
            }
        }
    }

    #[test]
    fn random_circuits_respect_fanout() {
        for seed in 0..30 {
            let c = random_circuit(20, seed).unwrap();
            let mut fanout = vec![0; c.len() + 1];
            for g in c.gates() {
                if let Gate::And(j, k) | Gate::Or(j, k) = *g {
                    fanout[j] += 1;
                    fanout[k] += 1;
                }
            }
            assert!(fanout.iter().all(|&f| f <= 2));
        }
    }

    #[test]
    fn circuit_file_round_trip() {
        let c = random_circuit(12, 4).unwrap();
        assert_eq!(parse_circuit(&serialize_circuit(&c)).unwrap(), c);
        assert!(matches!(parse_circuit("1 CONST 1\n2 AND 1 2\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_circuit("1 CONST 2\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_circuit("2 CONST 1\n"), Err(Error::Parse { line: 1, .. })));
    }
}
