//! Square bit-packed boolean matrices.
//!
//! Row `i` bit `j` set means an edge `i -> j`. Rows are stored contiguously,
//! `words_per_row` 64-bit words each, with the unused tail of the last word
//! kept at zero. Multiplication is word-parallel: for every set bit `k` of
//! row `i` of the left operand, row `k` of the right operand is OR-ed into
//! the output row.

use std::fmt;

use crate::error::{Error, Result};

const WORD_BITS: usize = 64;

#[inline]
fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD_BITS)
}

/// Iterator over the set bit positions of a word slice.
pub struct Ones<'a> {
    words: &'a [u64],
    idx: usize,
    cur: u64,
}

impl<'a> Ones<'a> {
    pub fn new(words: &'a [u64]) -> Self {
        let cur = words.first().copied().unwrap_or(0);
        Ones { words, idx: 0, cur }
    }
}

impl Iterator for Ones<'_> {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        loop {
            if self.cur != 0 {
                let tz = self.cur.trailing_zeros() as usize;
                self.cur &= self.cur - 1;
                return Some(self.idx * WORD_BITS + tz);
            }
            self.idx += 1;
            if self.idx >= self.words.len() {
                return None;
            }
            self.cur = self.words[self.idx];
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BoolMatrix {
    dim: usize,
    words_per_row: usize,
    data: Vec<u64>,
}

impl BoolMatrix {
    pub fn zeros(dim: usize) -> Self {
        let words_per_row = words_for(dim);
        BoolMatrix {
            dim,
            words_per_row,
            data: vec![0; dim * words_per_row],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i);
        }
        m
    }

    pub fn from_pairs<I: IntoIterator<Item = (usize, usize)>>(dim: usize, pairs: I) -> Self {
        let mut m = Self::zeros(dim);
        for (i, j) in pairs {
            m.set(i, j);
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn words_per_row(&self) -> usize {
        self.words_per_row
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        debug_assert!(i < self.dim && j < self.dim);
        self.data[i * self.words_per_row + j / WORD_BITS] >> (j % WORD_BITS) & 1 == 1
    }

    /// Sets bit `(i, j)`; returns `true` if it was previously clear.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize) -> bool {
        debug_assert!(i < self.dim && j < self.dim);
        let w = &mut self.data[i * self.words_per_row + j / WORD_BITS];
        let mask = 1u64 << (j % WORD_BITS);
        let fresh = *w & mask == 0;
        *w |= mask;
        fresh
    }

    #[inline]
    pub fn clear(&mut self, i: usize, j: usize) {
        self.data[i * self.words_per_row + j / WORD_BITS] &= !(1u64 << (j % WORD_BITS));
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[u64] {
        &self.data[i * self.words_per_row..(i + 1) * self.words_per_row]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [u64] {
        &mut self.data[i * self.words_per_row..(i + 1) * self.words_per_row]
    }

    pub fn row_ones(&self, i: usize) -> Ones<'_> {
        Ones::new(self.row(i))
    }

    pub fn row_count(&self, i: usize) -> usize {
        self.row(i).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&w| w == 0)
    }

    /// All set pairs in row-major order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.dim).flat_map(move |i| self.row_ones(i).map(move |j| (i, j)))
    }

    pub fn set_diagonal(&mut self) {
        for i in 0..self.dim {
            self.set(i, i);
        }
    }

    /// In-place union; returns whether anything changed.
    pub fn union_with(&mut self, other: &BoolMatrix) -> Result<bool> {
        self.check_dim(other)?;
        let mut changed = false;
        for (w, o) in self.data.iter_mut().zip(&other.data) {
            let next = *w | *o;
            changed |= next != *w;
            *w = next;
        }
        Ok(changed)
    }

    /// `self ⊆ other`, bitwise.
    pub fn is_subset_of(&self, other: &BoolMatrix) -> bool {
        self.dim == other.dim && self.data.iter().zip(&other.data).all(|(a, b)| a & !b == 0)
    }

    pub fn transpose(&self) -> BoolMatrix {
        let mut t = BoolMatrix::zeros(self.dim);
        for (i, j) in self.pairs() {
            t.set(j, i);
        }
        t
    }

    fn check_dim(&self, other: &BoolMatrix) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        Ok(())
    }

    /// Boolean product `self · rhs`.
    pub fn multiply(&self, rhs: &BoolMatrix) -> Result<BoolMatrix> {
        self.check_dim(rhs)?;
        let mut out = BoolMatrix::zeros(self.dim);
        let threads = worker_threads();
        if threads > 1 && self.dim >= PARALLEL_MIN_DIM {
            multiply_parallel(self, rhs, &mut out, threads);
        } else {
            multiply_rows(self, rhs, 0, &mut out.data);
        }
        Ok(out)
    }

    /// Reachability matrix of the digraph `self`.
    ///
    /// Computed by repeated squaring of `self ∨ I`, at most `⌈log₂ n⌉`
    /// squarings; a squaring that changes nothing ends the loop early. With
    /// `reflexive == false` the result is `A · (A ∨ I)*`, i.e. only pairs
    /// joined by a path with at least one edge.
    pub fn transitive_closure(&self, reflexive: bool) -> BoolMatrix {
        self.transitive_closure_counted(reflexive).0
    }

    /// Like [`transitive_closure`](Self::transitive_closure), also returning
    /// the number of squarings performed.
    pub fn transitive_closure_counted(&self, reflexive: bool) -> (BoolMatrix, usize) {
        let mut reach = self.clone();
        reach.set_diagonal();
        let max_squarings = ceil_log2(self.dim);
        let mut squarings = 0;
        while squarings < max_squarings {
            let next = reach.multiply(&reach).expect("same dimension");
            squarings += 1;
            if next == reach {
                break;
            }
            reach = next;
        }
        if reflexive {
            (reach, squarings)
        } else {
            (self.multiply(&reach).expect("same dimension"), squarings)
        }
    }
}

/// `⌈log₂ n⌉`, with `ceil_log2(0) == ceil_log2(1) == 0`.
pub fn ceil_log2(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

const PARALLEL_MIN_DIM: usize = 256;

/// Worker count for row-partitioned multiplication: `APA_THREADS` if set,
/// otherwise the available parallelism.
pub fn worker_threads() -> usize {
    std::env::var("APA_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&t| t > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn multiply_rows(lhs: &BoolMatrix, rhs: &BoolMatrix, first_row: usize, out: &mut [u64]) {
    let wpr = lhs.words_per_row;
    if wpr == 0 {
        return;
    }
    for (offset, out_row) in out.chunks_mut(wpr).enumerate() {
        let i = first_row + offset;
        for k in lhs.row_ones(i) {
            let src = rhs.row(k);
            for (o, s) in out_row.iter_mut().zip(src) {
                *o |= *s;
            }
        }
    }
}

fn multiply_parallel(lhs: &BoolMatrix, rhs: &BoolMatrix, out: &mut BoolMatrix, threads: usize) {
    let wpr = lhs.words_per_row;
    let rows_per_chunk = lhs.dim.div_ceil(threads);
    std::thread::scope(|scope| {
        for (chunk_idx, chunk) in out.data.chunks_mut(rows_per_chunk * wpr).enumerate() {
            scope.spawn(move || multiply_rows(lhs, rhs, chunk_idx * rows_per_chunk, chunk));
        }
    });
}

impl fmt::Debug for BoolMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BoolMatrix({})", self.dim)?;
        for i in 0..self.dim.min(64) {
            let line: String = (0..self.dim.min(64))
                .map(|j| if self.get(i, j) { '1' } else { '.' })
                .collect();
            writeln!(f, "  {line}")?;
        }
        Ok(())
    }
}
