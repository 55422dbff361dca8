//! Joint `(in, out)` degree frequencies on a truncated grid.

use serde::Serialize;

/// Integer counts on `{0..=kmax} x {0..=lmax}` plus everything outside it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CountGrid {
    pub kmax: usize,
    pub lmax: usize,
    /// Row-major: cell `(k, l)` is at `k * (lmax + 1) + l`.
    pub cells: Vec<u64>,
    pub overflow: u64,
}

impl CountGrid {
    pub fn new(kmax: usize, lmax: usize) -> Self {
        CountGrid { kmax, lmax, cells: vec![0; (kmax + 1) * (lmax + 1)], overflow: 0 }
    }

    #[inline]
    pub fn add(&mut self, k: u64, l: u64) {
        self.add_n(k, l, 1);
    }

    #[inline]
    pub fn add_n(&mut self, k: u64, l: u64, n: u64) {
        if k as usize <= self.kmax && l as usize <= self.lmax {
            self.cells[k as usize * (self.lmax + 1) + l as usize] += n;
        } else {
            self.overflow += n;
        }
    }

    pub fn get(&self, k: usize, l: usize) -> u64 {
        self.cells[k * (self.lmax + 1) + l]
    }

    pub fn total(&self) -> u64 {
        self.cells.iter().sum::<u64>() + self.overflow
    }

    pub fn merge(&mut self, other: &CountGrid) {
        assert_eq!((self.kmax, self.lmax), (other.kmax, other.lmax), "grid shapes differ");
        for (a, b) in self.cells.iter_mut().zip(&other.cells) {
            *a += b;
        }
        self.overflow += other.overflow;
    }
}

/// Normalized joint pmf estimate, overall and per group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointPmfEstimate {
    pub kmax: usize,
    pub lmax: usize,
    /// Row-major probabilities, same layout as [`CountGrid::cells`].
    pub grid: Vec<f64>,
    pub overflow_mass: f64,
    /// Samples requested.
    pub replicates: u64,
    /// Samples discarded (event budget exceeded); not part of the mass.
    pub failed: u64,
    pub counts: CountGrid,
    pub groups: Vec<CountGrid>,
}

impl JointPmfEstimate {
    pub fn from_counts(counts: CountGrid, groups: Vec<CountGrid>, replicates: u64, failed: u64) -> Self {
        let total = counts.total().max(1) as f64;
        JointPmfEstimate {
            kmax: counts.kmax,
            lmax: counts.lmax,
            grid: counts.cells.iter().map(|&c| c as f64 / total).collect(),
            overflow_mass: counts.overflow as f64 / total,
            replicates,
            failed,
            counts,
            groups,
        }
    }

    pub fn prob(&self, k: usize, l: usize) -> f64 {
        self.grid[k * (self.lmax + 1) + l]
    }

    pub fn total_mass(&self) -> f64 {
        self.grid.iter().sum::<f64>() + self.overflow_mass
    }

    /// Conditional pmf of one group, normalized by that group's sample count.
    pub fn group_pmf(&self, m: usize) -> Vec<f64> {
        let g = &self.groups[m];
        let total = g.total().max(1) as f64;
        g.cells.iter().map(|&c| c as f64 / total).collect()
    }

    /// `(k, l, probability)` rows in grid order.
    pub fn rows(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let w = self.lmax + 1;
        self.grid.iter().enumerate().map(move |(i, &p)| (i / w, i % w, p))
    }
}
