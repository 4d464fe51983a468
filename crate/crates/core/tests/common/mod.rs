#![allow(dead_code)]

use proptest::prelude::*;
use wwsvm::SparseDataset;

/// Subproblem inputs: `v` of length `1..=max_dim` with entries in
/// `[-10, 10]`, `C` log-uniform in `[1e-3, 1e3]`.
pub fn subproblem_case(max_dim: usize) -> impl Strategy<Value = (Vec<f64>, f64)> {
    (prop::collection::vec(-10.0f64..10.0, 1..=max_dim), -3.0f64..3.0).prop_map(|(v, e)| (v, 10f64.powf(e)))
}

/// Inputs on a grid of thousandths, so ties and boundary hits are common.
pub fn grid_case(max_dim: usize) -> impl Strategy<Value = (Vec<i64>, i64)> {
    (prop::collection::vec(-3000i64..3000, 1..=max_dim), 1i64..3000)
}

/// Small dense datasets with every row nonzero.
pub fn dataset(max_n: usize, max_k: usize, max_d: usize) -> impl Strategy<Value = SparseDataset> {
    (1..=max_n, 2..=max_k, 1..=max_d)
        .prop_flat_map(|(n, k, d)| {
            (
                prop::collection::vec(prop::collection::vec(-2.0f64..2.0, d), n),
                prop::collection::vec(0..k, n),
                Just(k),
            )
        })
        .prop_map(|(mut rows, labels, k)| {
            for row in &mut rows {
                if row.iter().all(|&x| x == 0.0) {
                    row[0] = 1.0;
                }
            }
            SparseDataset::from_dense(&rows, &labels, k).unwrap()
        })
}

/// A dataset together with a feasible β for it, as concatenated blocks.
pub fn dataset_and_beta(max_n: usize, max_k: usize, max_d: usize) -> impl Strategy<Value = (SparseDataset, f64, Vec<f64>)> {
    (dataset(max_n, max_k, max_d), 0.01f64..10.0).prop_flat_map(|(ds, c)| {
        let len = ds.len() * (ds.k() - 1);
        (Just(ds), Just(c), prop::collection::vec(0.0..=c, len))
    })
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
