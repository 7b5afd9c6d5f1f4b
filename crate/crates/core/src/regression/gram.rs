//! Compensated accumulation of cross-product matrices.

use rayon::prelude::*;

/// Rows per shard. Shards are merged in index order, so results do not
/// depend on the number of worker threads.
pub const SHARD_ROWS: usize = 16_384;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.comp += other.comp;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Upper triangle of `Σ z zᵀ` for rows `z` of a fixed width, where each
/// row is shifted by a constant vector before accumulation.
#[derive(Debug, Clone, PartialEq)]
pub struct GramAccumulator {
    dim: usize,
    shift: Vec<f64>,
    count: usize,
    entries: Vec<CompensatedSum>,
}

impl GramAccumulator {
    pub fn new(dim: usize) -> Self {
        Self::with_shift(vec![0.0; dim])
    }

    pub fn with_shift(shift: Vec<f64>) -> Self {
        let dim = shift.len();
        Self {
            dim,
            shift,
            count: 0,
            entries: vec![CompensatedSum::default(); dim * (dim + 1) / 2],
        }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        // row-major upper triangle, i <= j
        i * self.dim - i * (i + 1) / 2 + j
    }

    pub fn push(&mut self, row: &[f64]) {
        debug_assert_eq!(row.len(), self.dim);
        let mut z = [0.0f64; 16];
        let z: &mut [f64] = if self.dim <= 16 {
            &mut z[..self.dim]
        } else {
            return self.push_slow(row);
        };
        for (k, (v, s)) in row.iter().zip(&self.shift).enumerate() {
            z[k] = v - s;
        }
        let mut e = 0;
        for i in 0..self.dim {
            for j in i..self.dim {
                self.entries[e].add(z[i] * z[j]);
                e += 1;
            }
        }
        self.count += 1;
    }

    fn push_slow(&mut self, row: &[f64]) {
        let z: Vec<f64> = row.iter().zip(&self.shift).map(|(v, s)| v - s).collect();
        let mut e = 0;
        for i in 0..self.dim {
            for j in i..self.dim {
                self.entries[e].add(z[i] * z[j]);
                e += 1;
            }
        }
        self.count += 1;
    }

    /// Adds another accumulator built with the same shift.
    pub fn merge(&mut self, other: &GramAccumulator) {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        for (a, b) in self.entries.iter_mut().zip(&other.entries) {
            a.merge(b);
        }
        self.count += other.count;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        self.entries[self.idx(i, j)].value()
    }

    /// Full symmetric matrix, row-major.
    pub fn matrix(&self) -> Vec<f64> {
        let d = self.dim;
        let mut m = vec![0.0; d * d];
        for i in 0..d {
            for j in i..d {
                let v = self.get(i, j);
                m[i * d + j] = v;
                m[j * d + i] = v;
            }
        }
        m
    }
}

/// Accumulates the columns (all of equal length) in fixed shards of
/// [`SHARD_ROWS`] rows, in parallel, merging shards in order.
pub fn accumulate_columns(columns: &[&[f64]], shift: &[f64]) -> GramAccumulator {
    let n = columns.first().map_or(0, |c| c.len());
    let dim = columns.len();
    let shards: Vec<GramAccumulator> = (0..n.div_ceil(SHARD_ROWS))
        .into_par_iter()
        .map(|s| {
            let mut acc = GramAccumulator::with_shift(shift.to_vec());
            let mut row = vec![0.0; dim];
            for r in s * SHARD_ROWS..((s + 1) * SHARD_ROWS).min(n) {
                for (k, col) in columns.iter().enumerate() {
                    row[k] = col[r];
                }
                acc.push(&row);
            }
            acc
        })
        .collect();
    let mut total = GramAccumulator::with_shift(shift.to_vec());
    for s in &shards {
        total.merge(s);
    }
    total
}

/// Compensated sum of `f(r)` over `0..n` using the same shard layout.
pub fn sharded_sum(n: usize, f: impl Fn(usize) -> f64 + Sync) -> f64 {
    let parts: Vec<CompensatedSum> = (0..n.div_ceil(SHARD_ROWS))
        .into_par_iter()
        .map(|s| {
            let mut acc = CompensatedSum::default();
            for r in s * SHARD_ROWS..((s + 1) * SHARD_ROWS).min(n) {
                acc.add(f(r));
            }
            acc
        })
        .collect();
    let mut total = CompensatedSum::default();
    for p in &parts {
        total.merge(p);
    }
    total.value()
}
