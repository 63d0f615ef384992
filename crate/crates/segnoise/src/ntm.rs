//! Noise transition matrices: validation, numerical rank, and the
//! complete-randomization distance between class columns.
//!
//! An `M×M` matrix is stored column-major: column `i` is the distribution
//! of the observed class given true class `i`, so entry `(j, i)` is the
//! probability that a true class-`i` pixel is observed as class `j`.
//! Class indices are 0-based; file formats document the mapping from any
//! 1-based source material.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column sums may drift from 1 by at most this much.
pub const COLUMN_SUM_TOL: f64 = 1e-9;

/// Column-stochastic flip-probability matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ntm {
    m: usize,
    /// `columns[i][j]` = P(observed = j | true = i).
    columns: Vec<Vec<f64>>,
}

impl Ntm {
    /// Builds and validates a matrix from its columns.
    pub fn from_columns(columns: Vec<Vec<f64>>) -> Result<Self> {
        let m = columns.len();
        let ntm = Self { m, columns };
        ntm.validate()?;
        Ok(ntm)
    }

    /// Builds a matrix from row-major entries, e.g. values read off a
    /// printed table.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        let mut columns = vec![vec![0.0; m]; m];
        for (j, row) in rows.iter().enumerate() {
            if row.len() != m {
                return Err(Error::InvalidNtm {
                    column: j,
                    reason: format!("row {j} has {} entries, expected {m}", row.len()),
                });
            }
            for (i, &v) in row.iter().enumerate() {
                columns[i][j] = v;
            }
        }
        Self::from_columns(columns)
    }

    pub fn identity(m: usize) -> Self {
        let columns = (0..m)
            .map(|i| {
                let mut col = vec![0.0; m];
                col[i] = 1.0;
                col
            })
            .collect();
        Self { m, columns }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn column(&self, i: usize) -> &[f64] {
        &self.columns[i]
    }

    /// P(observed = j | true = i).
    #[inline]
    pub fn prob(&self, observed_j: usize, true_i: usize) -> f64 {
        self.columns[true_i][observed_j]
    }

    /// Checks both matrix invariants, reporting the first violating column.
    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(Error::InvalidNtm {
                column: 0,
                reason: format!("matrix must be at least 2x2, got {}x{}", self.m, self.m),
            });
        }
        for (i, col) in self.columns.iter().enumerate() {
            if col.len() != self.m {
                return Err(Error::InvalidNtm {
                    column: i,
                    reason: format!("column has {} entries, expected {}", col.len(), self.m),
                });
            }
            if let Some(&v) = col.iter().find(|&&v| !(0.0..=1.0).contains(&v)) {
                return Err(Error::InvalidNtm {
                    column: i,
                    reason: format!("entry {v} outside [0, 1]"),
                });
            }
            let sum: f64 = col.iter().sum();
            if (sum - 1.0).abs() > COLUMN_SUM_TOL {
                return Err(Error::InvalidNtm {
                    column: i,
                    reason: format!("column sums to {sum}, expected 1"),
                });
            }
        }
        Ok(())
    }

    /// Numerical rank: pivots above `1e-9 * M` after Gaussian elimination
    /// with partial pivoting.
    pub fn rank(&self) -> usize {
        let m = self.m;
        let tol = 1e-9 * m as f64;
        // work on a row-major copy
        let mut a = vec![0.0f64; m * m];
        for i in 0..m {
            for j in 0..m {
                a[j * m + i] = self.columns[i][j];
            }
        }
        let mut rank = 0;
        let mut row = 0;
        for col in 0..m {
            let (mut pivot_row, mut pivot_val) = (row, 0.0f64);
            for r in row..m {
                let v = a[r * m + col].abs();
                if v > pivot_val {
                    pivot_val = v;
                    pivot_row = r;
                }
            }
            if pivot_val <= tol {
                continue;
            }
            if pivot_row != row {
                for c in 0..m {
                    a.swap(row * m + c, pivot_row * m + c);
                }
            }
            for r in row + 1..m {
                let factor = a[r * m + col] / a[row * m + col];
                for c in col..m {
                    a[r * m + c] -= factor * a[row * m + c];
                }
            }
            rank += 1;
            row += 1;
            if row == m {
                break;
            }
        }
        rank
    }

    /// L1 distance between the columns of true classes `u` and `v`.
    pub fn crd_pair(&self, u: usize, v: usize) -> f64 {
        self.columns[u]
            .iter()
            .zip(&self.columns[v])
            .map(|(a, b)| (a - b).abs())
            .sum()
    }

    /// Full pairwise distance table plus the minimum pair.
    pub fn crd(&self) -> CrdTable {
        let m = self.m;
        let mut d = vec![vec![0.0; m]; m];
        let mut min_pair = (0, 1);
        let mut min_d = f64::INFINITY;
        for u in 0..m {
            for v in u + 1..m {
                let dist = self.crd_pair(u, v);
                d[u][v] = dist;
                d[v][u] = dist;
                if dist < min_d {
                    min_d = dist;
                    min_pair = (u, v);
                }
            }
        }
        CrdTable {
            m,
            d,
            min_pair,
            min_distance: min_d,
        }
    }
}

/// Pairwise complete-randomization distances of one matrix.
#[derive(Debug, Clone)]
pub struct CrdTable {
    pub m: usize,
    /// Symmetric `M×M` table, zero diagonal.
    pub d: Vec<Vec<f64>>,
    /// Class pair `(u, v)` with `u < v` attaining the minimum; ties go to
    /// the lexicographically first pair.
    pub min_pair: (usize, usize),
    pub min_distance: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    use crate::fixtures::rcl_ntm_suite;

    #[test]
    fn identity_is_valid() {
        Ntm::identity(2).validate().unwrap();
    }

    #[test]
    fn near_random_binary_matrix_is_valid() {
        Ntm::from_columns(vec![vec![0.79, 0.21], vec![0.8, 0.2]]).unwrap();
    }

    #[test]
    fn bad_column_sum_reports_column() {
        let err = Ntm::from_columns(vec![vec![0.5, 0.4], vec![0.5, 0.5]]).unwrap_err();
        match err {
            Error::InvalidNtm { column, reason } => {
                assert_eq!(column, 0);
                assert!(reason.contains("0.9"), "{reason}");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn negative_entry_rejected() {
        let err = Ntm::from_columns(vec![vec![1.2, -0.2], vec![0.0, 1.0]]).unwrap_err();
        assert!(matches!(err, Error::InvalidNtm { column: 0, .. }));
    }

    #[test]
    fn rank_of_identity_is_full() {
        for m in 2..=8 {
            assert_eq!(Ntm::identity(m).rank(), m);
        }
    }

    #[test]
    fn three_class_suite_ranks_and_min_crd() {
        for (ntm, rank, min_d) in rcl_ntm_suite() {
            assert_eq!(ntm.rank(), rank, "{ntm:?}");
            assert_abs_diff_eq!(ntm.crd().min_distance, min_d, epsilon = 1e-12);
        }
    }

    #[test]
    fn duplicated_columns_give_rank_one() {
        let col = vec![0.4, 0.3, 0.3];
        let ntm = Ntm::from_columns(vec![col.clone(), col.clone(), col]).unwrap();
        assert_eq!(ntm.rank(), 1);
    }

    #[test]
    fn crd_identity_binary_is_two() {
        let t = Ntm::identity(2).crd();
        assert_abs_diff_eq!(t.d[0][1], 2.0, epsilon = 0.0);
        assert_eq!(t.min_pair, (0, 1));
    }

    #[test]
    fn crd_near_random_binary() {
        let ntm = Ntm::from_columns(vec![vec![0.79, 0.21], vec![0.8, 0.2]]).unwrap();
        assert_abs_diff_eq!(ntm.crd().min_distance, 0.02, epsilon = 1e-12);
    }

    #[test]
    fn crd_min_pair_for_rank3_table_matrix() {
        let (ntm, _, _) = rcl_ntm_suite().into_iter().next().unwrap();
        let t = ntm.crd();
        assert_eq!(t.min_pair, (0, 2));
        assert_abs_diff_eq!(t.min_distance, 0.6, epsilon = 1e-12);
    }

    #[test]
    fn json_round_trip() {
        let ntm = Ntm::from_columns(vec![vec![0.79, 0.21], vec![0.8, 0.2]]).unwrap();
        let text = serde_json::to_string(&ntm).unwrap();
        assert!(text.contains("\"m\":2"));
        let back: Ntm = serde_json::from_str(&text).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(back.prob(j, i), ntm.prob(j, i), epsilon = 1e-12);
            }
        }
    }
}
