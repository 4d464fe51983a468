//! Change of variables between the two dual parametrizations, and the
//! objectives that go with them.
//!
//! Class indices are 0-based here: `y ∈ 0..k`. The operator `π = [1  −I]`
//! maps `ℝ^k → ℝ^{k−1}` and `T_y` swaps coordinates `0` and `y`. Neither is
//! ever stored as a matrix.
//!
//! * α-form: block `αᵢ ∈ ℝ^k` with `0 ≤ α_{ij} ≤ C` for `j ≠ yᵢ` and
//!   `α_{i,yᵢ} = −Σ_{j≠yᵢ} α_{ij}`; objective
//!   `f(α) = ½ Σ_{i,s} x_s'xᵢ αᵢ'α_s − Σᵢ Σ_{j≠yᵢ} α_{ij}`.
//! * β-form: block `βᵢ ∈ [0, C]^{k−1}`; objective
//!   `g(β) = ½ Σ_{i,s} x_s'xᵢ βᵢ'π T_{yᵢ} T_{y_s} π'β_s − Σᵢ 1'βᵢ`.
//!
//! `αᵢ = −T_{yᵢ} π'βᵢ` maps one onto the other, `f(α) = g(β)`, and the
//! primal weights are `W = −Σᵢ xᵢ αᵢ' = Σᵢ xᵢ (T_{yᵢ} π'βᵢ)'`.

use crate::data::{SparseDataset, SparseInstance};
use crate::error::{Error, Result};

/// `π'b = (1'b, −b₁, …, −b_{k−1})`, written into `out` (length `b.len() + 1`).
#[inline]
pub fn apply_pi_transpose_into(b: &[f64], out: &mut [f64]) {
    debug_assert_eq!(out.len(), b.len() + 1);
    out[0] = b.iter().sum();
    for (o, &x) in out[1..].iter_mut().zip(b) {
        *o = -x;
    }
}

pub fn apply_pi_transpose(b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; b.len() + 1];
    apply_pi_transpose_into(b, &mut out);
    out
}

/// `πu = (u₀ − u₁, u₀ − u₂, …, u₀ − u_{k−1})`.
pub fn apply_pi(u: &[f64]) -> Vec<f64> {
    u[1..].iter().map(|&x| u[0] - x).collect()
}

/// `T_y u`: swaps entries `0` and `y`.
pub fn apply_swap(y: usize, u: &[f64]) -> Vec<f64> {
    let mut out = u.to_vec();
    out.swap(0, y);
    out
}

/// Dense `d × k` weight matrix, row-major (row = feature, column = class).
#[derive(Clone, Debug, PartialEq)]
pub struct WeightMatrix {
    d: usize,
    k: usize,
    w: Vec<f64>,
}

impl WeightMatrix {
    pub fn zeros(d: usize, k: usize) -> Self {
        WeightMatrix { d, k, w: vec![0.0; d * k] }
    }

    pub fn from_rows(d: usize, k: usize, w: Vec<f64>) -> Result<Self> {
        if w.len() != d * k {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {d}x{k} matrix",
                w.len()
            )));
        }
        Ok(WeightMatrix { d, k, w })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, feature: usize, class: usize) -> f64 {
        self.w[feature * self.k + class]
    }

    pub fn set(&mut self, feature: usize, class: usize, value: f64) {
        self.w[feature * self.k + class] = value;
    }

    pub fn row(&self, feature: usize) -> &[f64] {
        &self.w[feature * self.k..(feature + 1) * self.k]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }

    /// Class scores `W'x`; features beyond `d` are ignored.
    pub fn scores_into(&self, x: &SparseInstance, out: &mut [f64]) {
        out.iter_mut().for_each(|s| *s = 0.0);
        for (f, xv) in x.iter() {
            if f >= self.d {
                break;
            }
            for (s, &w) in out.iter_mut().zip(self.row(f)) {
                *s += xv * w;
            }
        }
    }

    pub fn scores(&self, x: &SparseInstance) -> Vec<f64> {
        let mut out = vec![0.0; self.k];
        self.scores_into(x, &mut out);
        out
    }

    /// `W += x u'` restricted to the nonzero rows of `x`.
    pub fn add_outer(&mut self, x: &SparseInstance, u: &[f64]) {
        debug_assert_eq!(u.len(), self.k);
        let k = self.k;
        for (f, xv) in x.iter() {
            if f >= self.d {
                break;
            }
            for (w, &uj) in self.w[f * k..(f + 1) * k].iter_mut().zip(u) {
                *w += xv * uj;
            }
        }
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.w.iter().map(|x| x * x).sum()
    }

    pub fn scaled(&self, factor: f64) -> WeightMatrix {
        WeightMatrix { d: self.d, k: self.k, w: self.w.iter().map(|x| x * factor).collect() }
    }

    /// `‖self − other‖_F`.
    pub fn distance(&self, other: &WeightMatrix) -> f64 {
        assert_eq!((self.d, self.k), (other.d, other.k));
        self.w.iter().zip(&other.w).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }
}

/// β-form dual variables: `n` blocks of length `k − 1`, each in `[0, C]`.
#[derive(Clone, Debug, PartialEq)]
pub struct DualState {
    n: usize,
    k: usize,
    c: f64,
    beta: Vec<f64>,
}

impl DualState {
    pub fn zeros(n: usize, k: usize, c: f64) -> Self {
        DualState { n, k, c, beta: vec![0.0; n * (k - 1)] }
    }

    /// Builds a state from concatenated blocks, checking the box constraints.
    pub fn from_blocks(k: usize, c: f64, beta: Vec<f64>) -> Result<Self> {
        if k < 2 || !beta.len().is_multiple_of(k - 1) {
            return Err(Error::DimensionMismatch(format!(
                "{} entries do not split into blocks of {}",
                beta.len(),
                k.saturating_sub(1)
            )));
        }
        if let Some(x) = beta.iter().find(|&&x| !(0.0..=c).contains(&x)) {
            return Err(Error::InvalidInput(format!("beta entry {x} outside [0, {c}]")));
        }
        Ok(DualState { n: beta.len() / (k - 1), k, c, beta })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn block(&self, i: usize) -> &[f64] {
        let m = self.k - 1;
        &self.beta[i * m..(i + 1) * m]
    }

    pub fn block_mut(&mut self, i: usize) -> &mut [f64] {
        let m = self.k - 1;
        &mut self.beta[i * m..(i + 1) * m]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.beta
    }

    pub fn is_feasible(&self) -> bool {
        self.beta.iter().all(|&x| (0.0..=self.c).contains(&x))
    }

    /// `Σᵢ 1'βᵢ`.
    pub fn total(&self) -> f64 {
        self.beta.iter().sum()
    }
}

/// α-form dual variables: `n` blocks of length `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct AlphaState {
    n: usize,
    k: usize,
    alpha: Vec<f64>,
}

impl AlphaState {
    /// Builds a state from concatenated blocks, checking membership in the
    /// α-feasible set up to `1e-12` relative slack on the equality constraint.
    pub fn from_blocks(k: usize, c: f64, labels: &[usize], alpha: Vec<f64>) -> Result<Self> {
        if alpha.len() != labels.len() * k {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for {} blocks of {k}",
                alpha.len(),
                labels.len()
            )));
        }
        let state = AlphaState { n: labels.len(), k, alpha };
        for (i, &y) in labels.iter().enumerate() {
            let block = state.block(i);
            let mut off_sum = 0.0;
            for (j, &a) in block.iter().enumerate() {
                if j != y {
                    if !(0.0..=c).contains(&a) {
                        return Err(Error::InvalidInput(format!("alpha[{i}][{j}] = {a} outside [0, {c}]")));
                    }
                    off_sum += a;
                }
            }
            if (block[y] + off_sum).abs() > 1e-12 * (1.0 + off_sum) {
                return Err(Error::InvalidInput(format!(
                    "alpha[{i}][{y}] = {} but the other entries sum to {off_sum}",
                    block[y]
                )));
            }
        }
        Ok(state)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn block(&self, i: usize) -> &[f64] {
        &self.alpha[i * self.k..(i + 1) * self.k]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.alpha
    }
}

/// `Ψ`: block-wise `αᵢ = −T_{yᵢ} π'βᵢ`.
pub fn psi(state: &DualState, labels: &[usize]) -> AlphaState {
    assert_eq!(labels.len(), state.n());
    let k = state.k();
    let mut alpha = vec![0.0; state.n() * k];
    for (i, &y) in labels.iter().enumerate() {
        let out = &mut alpha[i * k..(i + 1) * k];
        apply_pi_transpose_into(state.block(i), out);
        out.swap(0, y);
        out.iter_mut().for_each(|a| *a = -*a);
    }
    AlphaState { n: state.n(), k, alpha }
}

/// `Ξ`, the inverse of [`psi`]: `βᵢ` is entries `1..k` of `T_{yᵢ}αᵢ`.
pub fn xi(state: &AlphaState, labels: &[usize], c: f64) -> DualState {
    assert_eq!(labels.len(), state.n());
    let k = state.k();
    let mut beta = Vec::with_capacity(state.n() * (k - 1));
    for (i, &y) in labels.iter().enumerate() {
        let swapped = apply_swap(y, state.block(i));
        beta.extend_from_slice(&swapped[1..]);
    }
    DualState { n: state.n(), k, c, beta }
}

/// `W = Σᵢ xᵢ (T_{yᵢ} π'βᵢ)'`, built from scratch.
pub fn weights_from_beta(state: &DualState, dataset: &SparseDataset) -> WeightMatrix {
    let k = state.k();
    let mut w = WeightMatrix::zeros(dataset.d(), k);
    let mut u = vec![0.0; k];
    for i in 0..state.n() {
        apply_pi_transpose_into(state.block(i), &mut u);
        u.swap(0, dataset.label(i));
        w.add_outer(dataset.instance(i), &u);
    }
    w
}

fn hinge_total(w: &WeightMatrix, dataset: &SparseDataset, margin_scale: f64) -> f64 {
    let mut scores = vec![0.0; w.k()];
    let mut total = 0.0;
    for (x, &y) in dataset.instances().iter().zip(dataset.labels()) {
        w.scores_into(x, &mut scores);
        let sy = scores[y];
        for (j, &sj) in scores.iter().enumerate() {
            if j != y {
                total += (1.0 - (sy - sj) * margin_scale).max(0.0);
            }
        }
    }
    total
}

/// `½‖W‖²_F + C Σᵢ Σ_{j≠yᵢ} max(0, 1 − (w_{yᵢ} − w_j)'xᵢ)`.
pub fn primal_objective(w: &WeightMatrix, dataset: &SparseDataset, c: f64) -> f64 {
    0.5 * w.frobenius_sq() + c * hinge_total(w, dataset, 1.0)
}

/// The alternative scaling `½‖U‖²_F + A Σ hinge((u_{yᵢ} − u_j)'xᵢ / 2)`.
/// It satisfies `primal_objective(U/2, C) = variant_primal_objective(U, 4C) / 4`.
pub fn variant_primal_objective(u: &WeightMatrix, dataset: &SparseDataset, a: f64) -> f64 {
    0.5 * u.frobenius_sq() + a * hinge_total(u, dataset, 0.5)
}

/// `g(β)` given `W = weights_from_beta(β)`.
pub fn dual_objective_with_weights(w: &WeightMatrix, state: &DualState) -> f64 {
    0.5 * w.frobenius_sq() - state.total()
}

/// `g(β) = ½‖W‖²_F − Σᵢ 1'βᵢ` with `W` rebuilt from `β`.
pub fn dual_objective(state: &DualState, dataset: &SparseDataset) -> f64 {
    dual_objective_with_weights(&weights_from_beta(state, dataset), state)
}

/// `g(β)` by the `O(n²)` double sum over instance pairs. Reference only.
pub fn dual_objective_direct(state: &DualState, dataset: &SparseDataset) -> f64 {
    let k = state.k();
    let n = state.n();
    // T_{yᵢ} π'βᵢ for every block; the quadratic form pairs these up
    let lifted: Vec<Vec<f64>> = (0..n)
        .map(|i| apply_swap(dataset.label(i), &apply_pi_transpose(state.block(i))))
        .collect();
    let mut quad = 0.0;
    for i in 0..n {
        for s in 0..n {
            let gram = dataset.instance(s).dot(dataset.instance(i));
            let inner: f64 = (0..k).map(|j| lifted[i][j] * lifted[s][j]).sum();
            quad += gram * inner;
        }
    }
    0.5 * quad - state.total()
}

/// `f(α)` by the `O(n²)` double sum. Reference only.
pub fn alpha_objective_direct(state: &AlphaState, dataset: &SparseDataset) -> f64 {
    let n = state.n();
    let mut quad = 0.0;
    for i in 0..n {
        for s in 0..n {
            let gram = dataset.instance(s).dot(dataset.instance(i));
            let inner: f64 = state.block(i).iter().zip(state.block(s)).map(|(a, b)| a * b).sum();
            quad += gram * inner;
        }
    }
    let linear: f64 = (0..n)
        .map(|i| {
            let y = dataset.label(i);
            state.block(i).iter().enumerate().filter(|&(j, _)| j != y).map(|(_, a)| a).sum::<f64>()
        })
        .sum();
    0.5 * quad - linear
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> SparseDataset {
        SparseDataset::from_dense(&[vec![1.0, 0.0], vec![0.5, -2.0], vec![0.0, 1.5]], &[0, 1, 2], 3).unwrap()
    }

    #[test]
    fn pi_transpose_examples() {
        assert_eq!(apply_pi_transpose(&[0.0, 0.0]), vec![0.0, 0.0, 0.0]);
        assert_eq!(apply_pi_transpose(&[1.0, 2.0]), vec![3.0, -1.0, -2.0]);
        assert_eq!(apply_pi_transpose(&[0.7]), vec![0.7, -0.7]);
        assert_eq!(apply_pi(&[3.0, -1.0, -2.0]), vec![4.0, 5.0]);
    }

    #[test]
    fn swap_examples() {
        let u = [1.0, 2.0, 3.0];
        assert_eq!(apply_swap(0, &u), u.to_vec());
        assert_eq!(apply_swap(2, &u), vec![3.0, 2.0, 1.0]);
        assert_eq!(apply_swap(2, &apply_swap(2, &u)), u.to_vec());
    }

    #[test]
    fn psi_and_xi_examples() {
        let c = 1.5;
        let beta = DualState::from_blocks(3, c, vec![c, 0.0]).unwrap();
        assert_eq!(psi(&beta, &[0]).as_slice(), &[-c, c, 0.0]);

        let alpha = AlphaState::from_blocks(3, 1.0, &[1], vec![0.4, -0.4, 0.0]).unwrap();
        assert_eq!(xi(&alpha, &[1], 1.0).as_slice(), &[0.4, 0.0]);

        let zero = DualState::zeros(2, 4, 1.0);
        assert!(psi(&zero, &[3, 1]).as_slice().iter().all(|&a| a == 0.0));
    }

    #[test]
    fn alpha_membership_checks() {
        assert!(AlphaState::from_blocks(3, 1.0, &[0], vec![-0.5, 0.2, 0.3]).is_ok());
        assert!(AlphaState::from_blocks(3, 1.0, &[0], vec![-0.4, 0.2, 0.3]).is_err());
        assert!(AlphaState::from_blocks(3, 1.0, &[0], vec![-1.5, 1.2, 0.3]).is_err());
        assert!(DualState::from_blocks(3, 1.0, vec![0.5, 1.1]).is_err());
    }

    #[test]
    fn objectives_at_zero() {
        let ds = toy();
        let w = WeightMatrix::zeros(ds.d(), 3);
        assert_eq!(primal_objective(&w, &ds, 0.7), 0.7 * 3.0 * 2.0);
        assert_eq!(variant_primal_objective(&w, &ds, 0.7), 0.7 * 3.0 * 2.0);
        assert_eq!(dual_objective(&DualState::zeros(3, 3, 1.0), &ds), 0.0);
    }

    #[test]
    fn primal_without_loss_term() {
        let ds = toy();
        let w = WeightMatrix::from_rows(2, 3, vec![1.0, -2.0, 0.5, 0.0, 3.0, 1.0]).unwrap();
        assert_eq!(primal_objective(&w, &ds, 0.0), 0.5 * w.frobenius_sq());
        assert_eq!(variant_primal_objective(&w, &ds, 0.0), 0.5 * w.frobenius_sq());
    }

    #[test]
    fn separating_weights_pay_no_hinge() {
        let ds = toy();
        // scores put the true class ahead by at least 1 everywhere
        let w = WeightMatrix::from_rows(2, 3, vec![4.0, 0.0, 0.0, -2.0, -6.0, 2.0]).unwrap();
        for (x, &y) in ds.instances().iter().zip(ds.labels()) {
            let s = w.scores(x);
            assert!((0..3).filter(|&j| j != y).all(|j| s[y] - s[j] >= 1.0), "{s:?}");
        }
        assert_eq!(primal_objective(&w, &ds, 5.0), 0.5 * w.frobenius_sq());
    }

    #[test]
    fn single_instance_weights_are_rank_one() {
        let ds = SparseDataset::from_dense(&[vec![2.0, 0.0, -1.0]], &[1], 3).unwrap();
        let beta = DualState::from_blocks(3, 1.0, vec![0.25, 0.5]).unwrap();
        let alpha = psi(&beta, ds.labels());
        let w = weights_from_beta(&beta, &ds);
        let x = [2.0, 0.0, -1.0];
        for (f, xf) in x.iter().enumerate() {
            for j in 0..3 {
                assert!((w.get(f, j) + xf * alpha.block(0)[j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn shortcut_matches_double_sum() {
        let ds = toy();
        let beta = DualState::from_blocks(3, 1.0, vec![0.2, 0.9, 1.0, 0.0, 0.3, 0.6]).unwrap();
        let fast = dual_objective(&beta, &ds);
        let slow = dual_objective_direct(&beta, &ds);
        let via_alpha = alpha_objective_direct(&psi(&beta, ds.labels()), &ds);
        assert!((fast - slow).abs() < 1e-12 * (1.0 + slow.abs()));
        assert!((fast - via_alpha).abs() < 1e-12 * (1.0 + slow.abs()));
    }
}
