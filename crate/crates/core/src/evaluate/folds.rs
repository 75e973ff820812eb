use rand::seq::SliceRandom;

use crate::error::{ClareError, Result};
use crate::rng::{RngSpec, Stream};

/// Assignment of N observations to cross-validation folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub assignment: Vec<usize>,
    pub k_folds: usize,
    pub seed: u64,
}

impl FoldPlan {
    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_loo(&self) -> bool {
        self.k_folds == self.n()
    }

    /// (training rows, validation rows) of a fold, each in ascending order.
    pub fn split(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        (0..self.n()).partition(|&i| self.assignment[i] != fold)
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k_folds];
        for &f in &self.assignment {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Shuffle rows with the fold stream and deal them into `k_folds`
/// contiguous blocks whose sizes differ by at most one (larger blocks
/// first). Leave-one-out (`k_folds == n`) is not shuffled: row i is fold i.
pub fn make_folds(n: usize, k_folds: usize, seed: u64) -> Result<FoldPlan> {
    if k_folds < 2 || k_folds > n {
        return Err(ClareError::InvalidArgument(format!(
            "number of folds {k_folds} must be in 2..={n}"
        )));
    }
    let mut assignment = vec![0; n];
    if k_folds == n {
        for (i, a) in assignment.iter_mut().enumerate() {
            *a = i;
        }
    } else {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut RngSpec::new(seed, Stream::FoldShuffle).rng());
        let (base, extra) = (n / k_folds, n % k_folds);
        let mut pos = 0;
        for fold in 0..k_folds {
            let size = base + usize::from(fold < extra);
            for &row in &order[pos..pos + size] {
                assignment[row] = fold;
            }
            pos += size;
        }
    }
    Ok(FoldPlan {
        assignment,
        k_folds,
        seed,
    })
}
