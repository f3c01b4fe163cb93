//! Exact rank of small integer matrices.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

/// Rank over `Q` by Gaussian elimination on exact rationals.
pub fn exact_rank(rows: &[Vec<i64>]) -> usize {
    let Some(width) = rows.first().map(Vec::len) else {
        return 0;
    };
    let mut m: Vec<Vec<BigRational>> = rows
        .iter()
        .map(|r| {
            assert_eq!(r.len(), width, "ragged matrix");
            r.iter().map(|&v| BigRational::from_integer(BigInt::from(v))).collect()
        })
        .collect();
    let mut rank = 0;
    for col in 0..width {
        let Some(pivot) = (rank..m.len()).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(rank, pivot);
        let lead = m[rank][col].clone();
        for r in rank + 1..m.len() {
            if m[r][col].is_zero() {
                continue;
            }
            let factor = &m[r][col] / &lead;
            for c in col..width {
                let delta = &factor * &m[rank][c];
                m[r][c] -= delta;
            }
        }
        rank += 1;
        if rank == m.len() {
            break;
        }
    }
    debug_assert!(m[rank..].iter().all(|r| r.iter().all(|v| v.abs().is_zero())));
    rank
}
