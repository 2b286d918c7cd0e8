use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{content_lines, parse_err, parse_usize, Builder, ReductionOutput};
use crate::error::{Error, Result};

/// Two lists of 0/1 vectors of a common dimension.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VectorSets {
    pub dim: usize,
    pub x: Vec<Vec<bool>>,
    pub y: Vec<Vec<bool>>,
}

impl VectorSets {
    pub fn new(dim: usize, x: Vec<Vec<bool>>, y: Vec<Vec<bool>>) -> Result<Self> {
        if let Some(bad) = x.iter().chain(&y).find(|v| v.len() != dim) {
            return Err(Error::InvalidParameters(format!(
                "vector of length {} in a set of dimension {dim}",
                bad.len()
            )));
        }
        Ok(VectorSets { dim, x, y })
    }

    pub fn from_bits(x: &[&[u8]], y: &[&[u8]]) -> Result<Self> {
        let conv = |vs: &[&[u8]]| vs.iter().map(|v| v.iter().map(|&b| b != 0).collect()).collect::<Vec<Vec<bool>>>();
        let dim = x.first().or(y.first()).map_or(0, |v| v.len());
        VectorSets::new(dim, conv(x), conv(y))
    }

    /// Appends a zero coordinate to every vector when the dimension is
    /// odd; orthogonality is unchanged.
    pub fn padded_to_even(&self) -> VectorSets {
        if self.dim % 2 == 0 {
            return self.clone();
        }
        let pad = |vs: &[Vec<bool>]| {
            vs.iter()
                .map(|v| {
                    let mut v = v.clone();
                    v.push(false);
                    v
                })
                .collect()
        };
        VectorSets {
            dim: self.dim + 1,
            x: pad(&self.x),
            y: pad(&self.y),
        }
    }
}

/// `s ∈ pts(t)` iff some `x ∈ X`, `y ∈ Y` are orthogonal.
///
/// Pointers are named `a_i_j`, `ah_i_j`, `b_i_j` for the `i`-th x-vector
/// and `u_i_j`, `uh_i_j`, `v_i_j` for the `i`-th y-vector, coordinates
/// `j` from 1.
pub fn reduce_ov(v: &VectorSets) -> Result<ReductionOutput> {
    let d = v.dim;
    if d == 0 || d % 2 == 1 {
        return Err(Error::InvalidParameters(format!(
            "orthogonal-vectors reduction needs a positive even dimension, got {d}"
        )));
    }
    let mut bld = Builder::new();
    bld.ptr("z");
    bld.ptr("s");
    bld.ptr("t");
    let a = |i: usize, j: usize| format!("a_{i}_{j}");
    let ah = |i: usize, j: usize| format!("ah_{i}_{j}");
    let b = |i: usize, j: usize| format!("b_{i}_{j}");
    let u = |i: usize, j: usize| format!("u_{i}_{j}");
    let uh = |i: usize, j: usize| format!("uh_{i}_{j}");
    let vv = |i: usize, j: usize| format!("v_{i}_{j}");

    for (idx, x) in v.x.iter().enumerate() {
        let i = idx + 1;
        bld.address_of("z", &a(i, 1));
        if !x[0] {
            bld.address_of("z", &ah(i, 1));
            bld.address_of(&ah(i, 1), &a(i, 1));
        }
        for j in 2..=d {
            let zero = !x[j - 1];
            if j % 2 == 0 {
                bld.store(&a(i, j), &b(i, j));
                bld.load(&a(i, j), &a(i, j - 1));
                if zero {
                    bld.assign(&a(i, j), &a(i, j - 1));
                }
            } else {
                bld.address_of(&b(i, j - 1), &a(i, j));
                if zero {
                    bld.address_of(&b(i, j - 1), &ah(i, j));
                    bld.address_of(&ah(i, j), &a(i, j));
                }
            }
        }
    }
    for (idx, y) in v.y.iter().enumerate() {
        let i = idx + 1;
        bld.load(&u(i, 1), "z");
        if !y[0] {
            bld.assign(&u(i, 1), "z");
        }
        for j in 1..=d {
            let zero = !y[j - 1];
            if j % 2 == 1 {
                bld.store(&u(i, j), &vv(i, j));
                if j > 1 {
                    bld.load(&u(i, j), &u(i, j - 1));
                    if zero {
                        bld.assign(&u(i, j), &u(i, j - 1));
                    }
                }
            } else {
                bld.address_of(&vv(i, j - 1), &u(i, j));
                if zero {
                    bld.address_of(&vv(i, j - 1), &uh(i, j));
                    bld.address_of(&uh(i, j), &u(i, j));
                }
            }
        }
    }
    for i in 1..=v.x.len() {
        bld.address_of(&b(i, d), "s");
    }
    for i in 1..=v.y.len() {
        bld.assign("t", &u(i, d));
    }
    Ok(bld.finish("t", "s"))
}

/// Quadratic scan over all pairs.
pub fn check_ov(v: &VectorSets) -> bool {
    v.x.iter()
        .any(|x| v.y.iter().any(|y| x.iter().zip(y).all(|(&p, &q)| !(p && q))))
}

/// `n` vectors per side with independent coordinates, each 1 with
/// probability `p`.
pub fn random_vectors(n: usize, dim: usize, p: f64, seed: u64) -> VectorSets {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut side = || (0..n).map(|_| (0..dim).map(|_| rng.gen_bool(p)).collect()).collect();
    let x = side();
    let y = side();
    VectorSets { dim, x, y }
}

/// First line `n D`, then `n` rows of `X` and `n` rows of `Y`, each row
/// `D` entries `0`/`1` separated by whitespace (or written contiguously).
pub fn parse_vectors(text: &str) -> Result<VectorSets> {
    let mut lines = content_lines(text);
    let (line, header) = lines.next().ok_or_else(|| parse_err(1, "missing `n D` header"))?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() != 2 {
        return Err(parse_err(line, "expected `n D`"));
    }
    let (n, dim) = (parse_usize(toks[0], line)?, parse_usize(toks[1], line)?);
    let mut rows = Vec::with_capacity(2 * n);
    for (line, l) in lines {
        let bits: Vec<bool> = l
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(parse_err(line, format!("expected 0 or 1, found `{other}`"))),
            })
            .collect::<Result<_>>()?;
        if bits.len() != dim {
            return Err(parse_err(line, format!("row has {} entries, expected {dim}", bits.len())));
        }
        if rows.len() == 2 * n {
            return Err(parse_err(line, format!("more than {} rows", 2 * n)));
        }
        rows.push(bits);
    }
    if rows.len() != 2 * n {
        return Err(parse_err(text.lines().count().max(1), format!("expected {} rows, found {}", 2 * n, rows.len())));
    }
    let y = rows.split_off(n);
    Ok(VectorSets { dim, x: rows, y })
}

pub fn serialize_vectors(v: &VectorSets) -> String {
    let mut out = format!("{} {}\n", v.x.len(), v.dim);
    for row in v.x.iter().chain(&v.y) {
        let cells: Vec<&str> = row.iter().map(|&b| if b { "1" } else { "0" }).collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::worklist::solve_worklist;

    fn answer(v: &VectorSets) -> bool {
        let out = reduce_ov(v).unwrap();
        out.answer_in(&solve_worklist(&out.instance))
    }

    #[test]
    fn fig6_is_yes() {
        let v = VectorSets::from_bits(&[&[1, 1], &[0, 1]], &[&[1, 0], &[0, 1]]).unwrap();
        assert!(check_ov(&v));
        assert!(answer(&v));
    }

    #[test]
    fn single_padded_pair_is_no() {
        let v = VectorSets::from_bits(&[&[1]], &[&[1]]).unwrap().padded_to_even();
        assert_eq!(v.x, vec![vec![true, false]]);
        assert!(!check_ov(&v));
        assert!(!answer(&v));
    }

    #[test]
    fn all_zero_is_yes() {
        let v = VectorSets::from_bits(&[&[0u8, 0, 0, 0][..]; 3], &[&[0u8, 0, 0, 0][..]; 3]).unwrap();
        assert!(check_ov(&v));
        assert!(answer(&v));
    }

    #[test]
    fn odd_dimension_is_rejected() {
        let v = VectorSets::from_bits(&[&[1, 0, 1]], &[&[0, 1, 0]]).unwrap();
        assert!(matches!(reduce_ov(&v), Err(Error::InvalidParameters(_))));
        assert!(answer(&v.padded_to_even()));
    }

    #[test]
    fn orthogonal_pairs_are_always_found() {
        for seed in 0..80 {
            let n = 1 + seed as usize % 6;
            let dim = 2 * (1 + seed as usize % 3);
            let v = random_vectors(n, dim, 0.5, seed);
            if check_ov(&v) {
                assert!(answer(&v), "seed {seed}");
            }
        }
    }

    // The construction can also answer yes without an orthogonal pair:
    // `u_1_1 = z` puts a_1_1 in pts(u_1_1), the store through u_1_1 then
    // puts u_1_2 in pts(a_1_1), and `u_1_1 = *z` reads it back.
    #[test]
    fn smallest_false_yes() {
        let v = VectorSets::from_bits(&[&[1, 1]], &[&[0, 1]]).unwrap();
        assert!(!check_ov(&v));
        let out = reduce_ov(&v).unwrap();
        let pts = solve_worklist(&out.instance);
        let (u1, u2) = (out.instance.pointer("u_1_1").unwrap(), out.instance.pointer("u_1_2").unwrap());
        assert!(pts.contains(u1, u2));
        assert!(out.answer_in(&pts));
    }

    #[test]
    fn pointer_count_is_linear() {
        let v = random_vectors(5, 6, 0.5, 1);
        let out = reduce_ov(&v).unwrap();
        // At most a, ah, b per x coordinate and u, uh, v per y coordinate.
        assert!(out.instance.n() <= 3 + 2 * 5 * 6 * 3);
    }

    #[test]
    fn vector_file_round_trip() {
        let v = random_vectors(4, 6, 0.5, 9);
        assert_eq!(parse_vectors(&serialize_vectors(&v)).unwrap(), v);
        assert_eq!(parse_vectors("1 2\n10\n01\n").unwrap().y, vec![vec![false, true]]);
        assert!(matches!(parse_vectors("1 2\n1 0\n0 2\n"), Err(Error::Parse { line: 3, .. })));
        assert!(parse_vectors("1 2\n1 0\n").is_err());
    }
}
