//! Slow reference solvers for the subproblem, kept independent of the sweep.
//!
//! Used by tests and benchmarks only. [`oracle_solve`] tries every
//! `(n_free, n_upper)` block pattern and checks the full KKT characterization
//! coordinate by coordinate; [`projected_descent_solve`] runs cyclic exact
//! coordinate minimization and knows nothing about block patterns.

use crate::error::{Error, Result};
use crate::subproblem::{argsort_desc, Scalar, SubproblemInput, SubproblemSolution};

/// Sweep cap for [`projected_descent_solve`].
pub const MAX_DESCENT_SWEEPS: usize = 1_000_000;

/// One block pattern that satisfies the KKT conditions.
#[derive(Clone, Debug, PartialEq)]
pub struct KktCandidate<T = f64> {
    pub n_free: usize,
    pub n_upper: usize,
    pub gamma: T,
}

fn pattern_gamma<T: Scalar>(sorted: &[T], n_free: usize, n_upper: usize, c: T) -> T {
    let mut s = T::zero();
    for &x in &sorted[n_upper..n_upper + n_free] {
        s = s + x;
    }
    (c * T::from_count(n_upper) + s) / T::from_count(n_free + 1)
}

/// Checks, for every rank `i`, `v⟨i⟩ ≥ C + γ` on the upper block,
/// `v⟨i⟩ ∈ [γ, C + γ]` on the free block and `v⟨i⟩ ≤ γ` on the rest.
fn pattern_satisfies_kkt<T: Scalar>(sorted: &[T], n_free: usize, n_upper: usize, gamma: T, c: T) -> bool {
    sorted.iter().enumerate().all(|(rank, &x)| {
        if rank < n_upper {
            x >= c + gamma
        } else if rank < n_upper + n_free {
            gamma <= x && x <= c + gamma
        } else {
            x <= gamma
        }
    })
}

/// Every `(n_free, n_upper)` pattern whose candidate passes the KKT check,
/// enumerated with `n_upper` outer and `n_free` inner.
pub fn kkt_candidates<T: Scalar>(input: &SubproblemInput<T>) -> Vec<KktCandidate<T>> {
    let c = input.c();
    let order = argsort_desc(input.v());
    let sorted: Vec<T> = order.iter().map(|&i| input.v()[i]).collect();
    let m = sorted.len();
    let mut found = Vec::new();
    for n_upper in 0..=m {
        for n_free in 0..=(m - n_upper) {
            let gamma = pattern_gamma(&sorted, n_free, n_upper, c);
            if pattern_satisfies_kkt(&sorted, n_free, n_upper, gamma, c) {
                found.push(KktCandidate { n_free, n_upper, gamma });
            }
        }
    }
    found
}

/// Brute-force `O(k²)`-candidate solve. Returns the first passing pattern.
pub fn oracle_solve<T: Scalar>(input: &SubproblemInput<T>) -> Result<SubproblemSolution<T>> {
    let c = input.c();
    let order = argsort_desc(input.v());
    let sorted: Vec<T> = order.iter().map(|&i| input.v()[i]).collect();
    let m = sorted.len();
    for n_upper in 0..=m {
        for n_free in 0..=(m - n_upper) {
            let gamma = pattern_gamma(&sorted, n_free, n_upper, c);
            if !pattern_satisfies_kkt(&sorted, n_free, n_upper, gamma, c) {
                continue;
            }
            let mut b = vec![T::zero(); m];
            for (rank, &idx) in order.iter().enumerate() {
                if rank < n_upper {
                    b[idx] = c;
                } else if rank < n_upper + n_free {
                    b[idx] = sorted[rank] - gamma;
                }
            }
            return Ok(SubproblemSolution {
                b,
                gamma,
                halting_iteration: 0,
                event_count: 0,
                degenerate: false,
            });
        }
    }
    Err(Error::NoKktCandidate)
}

/// Cyclic coordinate minimization with exact 1-D updates
/// `bᵢ ← clip((vᵢ − Σ_{j≠i} bⱼ) / 2)`, stopped once a full sweep moves no
/// coordinate by more than `tol`.
pub fn projected_descent_solve(input: &SubproblemInput<f64>, tol: f64) -> Result<Vec<f64>> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    let c = input.c();
    let v = input.v();
    let mut b = vec![0.0; v.len()];
    let mut total = 0.0;
    for _ in 0..MAX_DESCENT_SWEEPS {
        let mut largest_step: f64 = 0.0;
        for (bi, &vi) in b.iter_mut().zip(v) {
            let others = total - *bi;
            let next = ((vi - others) / 2.0).clamp(0.0, c);
            largest_step = largest_step.max((next - *bi).abs());
            total = others + next;
            *bi = next;
        }
        // keep the running total from drifting
        total = b.iter().sum();
        if largest_step <= tol {
            return Ok(b);
        }
    }
    Err(Error::IterationCapExceeded(MAX_DESCENT_SWEEPS))
}
