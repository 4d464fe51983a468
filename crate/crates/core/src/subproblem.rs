//! Exact solver for the per-block dual subproblem
//!
//! ```text
//! minimize   ½ b'(I + O)b − v'b
//! subject to 0 ≤ b ≤ C
//! ```
//!
//! where `O` is the all-ones matrix. The minimizer has the form
//! `b = clip(v − γ·1)` with `γ = Σ b`, and the block of coordinates that are
//! clamped at `C`, strictly inside the box, or clamped at `0` is always a
//! contiguous run of the descending argsort of `v`. The solver sweeps `γ`
//! downward through the thresholds `vᵢ` (a coordinate enters the free block)
//! and `vᵢ − C` (a coordinate leaves the free block for the upper bound),
//! keeping the block sizes and the free-block sum up to date, and stops at the
//! first candidate that passes the KKT check. Sorting dominates, so a solve
//! costs `O(k log k)`.
//!
//! The matrix `I + O` is never formed.
//!
//! All routines are generic over [`Scalar`] so that the same code can run in
//! exact rational arithmetic; production callers use `f64`.

use std::cmp::Ordering;
use std::fmt;

use num_rational::Ratio;
use num_traits::Num;

use crate::error::{Error, Result};

/// Number type the sweep runs on.
pub trait Scalar: Copy + PartialOrd + Num + fmt::Debug {
    /// Converts a coordinate count into the scalar type.
    fn from_count(n: usize) -> Self;

    fn is_finite(self) -> bool {
        true
    }
}

impl Scalar for f64 {
    #[inline]
    fn from_count(n: usize) -> Self {
        n as f64
    }

    #[inline]
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

impl Scalar for Ratio<i64> {
    fn from_count(n: usize) -> Self {
        Ratio::from_integer(n as i64)
    }
}

#[inline]
fn clamp_box<T: Scalar>(x: T, c: T) -> T {
    if x < T::zero() {
        T::zero()
    } else if x > c {
        c
    } else {
        x
    }
}

#[inline]
fn positive_part<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        x
    } else {
        T::zero()
    }
}

/// Coordinatewise projection onto `[0, C]`.
pub fn clip<T: Scalar>(w: &[T], c: T) -> Vec<T> {
    w.iter().map(|&x| clamp_box(x, c)).collect()
}

/// The pair `(v, C)` defining one subproblem.
#[derive(Clone, Debug, PartialEq)]
pub struct SubproblemInput<T = f64> {
    v: Vec<T>,
    c: T,
}

impl<T: Scalar> SubproblemInput<T> {
    pub fn new(v: Vec<T>, c: T) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::InvalidInput("v must have at least one entry".into()));
        }
        if !(c.is_finite() && c > T::zero()) {
            return Err(Error::InvalidInput(format!("C must be positive and finite, got {c:?}")));
        }
        if let Some(i) = v.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(format!("v[{i}] is not finite")));
        }
        Ok(SubproblemInput { v, c })
    }

    pub fn v(&self) -> &[T] {
        &self.v
    }

    pub fn c(&self) -> T {
        self.c
    }

    /// Number of coordinates, `k − 1`.
    pub fn dim(&self) -> usize {
        self.v.len()
    }

    /// Objective value `½ b'(I + O)b − v'b`.
    pub fn objective(&self, b: &[T]) -> T {
        subproblem_objective(&self.v, b)
    }
}

/// `½ b'(I + O)b − v'b` evaluated in `O(k)`.
pub fn subproblem_objective<T: Scalar>(v: &[T], b: &[T]) -> T {
    let two = T::one() + T::one();
    let mut sum = T::zero();
    let mut sq = T::zero();
    let mut lin = T::zero();
    for (&bi, &vi) in b.iter().zip(v) {
        sum = sum + bi;
        sq = sq + bi * bi;
        lin = lin + vi * bi;
    }
    (sq + sum * sum) / two - lin
}

/// Which block boundary a threshold belongs to.
///
/// `Up` sorts before `Dn`, which is the order required inside a group of
/// equal thresholds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventKind {
    /// `γ` crosses `v⟨j⟩ − C`: rank `j` leaves the free block for the upper bound.
    Up,
    /// `γ` crosses `v⟨j⟩`: rank `j` enters the free block.
    Dn,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventKind::Up => "up",
            EventKind::Dn => "dn",
        })
    }
}

/// One threshold of the sweep. `source_rank` is the 0-based position, in the
/// descending argsort of `v`, of the coordinate that generated it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UpDnEvent<T = f64> {
    pub gamma: T,
    pub kind: EventKind,
    pub source_rank: usize,
}

/// Running bookkeeping of the sweep after `t` events.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepState<T = f64> {
    pub t: usize,
    /// Coordinates strictly inside `(0, C)`.
    pub n_free: usize,
    /// Coordinates clamped at `C`.
    pub n_upper: usize,
    /// Sum of `v` over the free block, ranks `n_upper .. n_upper + n_free`.
    pub sum: T,
    pub gamma_hat: T,
}

impl<T: Scalar> SweepState<T> {
    pub fn initial() -> Self {
        SweepState {
            t: 0,
            n_free: 0,
            n_upper: 0,
            sum: T::zero(),
            gamma_hat: T::zero(),
        }
    }

    /// Advances the state past one event and recomputes the candidate multiplier.
    pub fn apply(&mut self, kind: EventKind, sorted_v: &[T], c: T) {
        match kind {
            EventKind::Up => {
                self.n_upper += 1;
                self.n_free -= 1;
                // the largest free entry is the one that just hit the upper bound
                self.sum = self.sum - sorted_v[self.n_upper - 1];
            }
            EventKind::Dn => {
                self.n_free += 1;
                self.sum = self.sum + sorted_v[self.n_upper + self.n_free - 1];
            }
        }
        self.t += 1;
        self.gamma_hat = candidate_gamma(self.n_free, self.n_upper, self.sum, c);
    }

    /// Writes the candidate `b̂` into `b` (indexed by original coordinate).
    pub fn fill_solution(&self, sorted_v: &[T], order: &[usize], c: T, b: &mut [T]) {
        let free_end = self.n_upper + self.n_free;
        for (rank, &idx) in order.iter().enumerate() {
            b[idx] = if rank < self.n_upper {
                c
            } else if rank < free_end {
                clamp_box(sorted_v[rank] - self.gamma_hat, c)
            } else {
                T::zero()
            };
        }
    }
}

/// `(C·n_upper + S) / (n_free + 1)`.
#[inline]
pub fn candidate_gamma<T: Scalar>(n_free: usize, n_upper: usize, sum: T, c: T) -> T {
    (c * T::from_count(n_upper) + sum) / T::from_count(n_free + 1)
}

/// Indices of `v` ordered by decreasing value; ties keep index order.
pub fn argsort_desc<T: Scalar>(v: &[T]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    sort_desc(v, &mut order);
    order
}

fn sort_desc<T: Scalar>(v: &[T], order: &mut [usize]) {
    order.sort_unstable_by(|&a, &b| v[b].partial_cmp(&v[a]).unwrap_or(Ordering::Equal).then(a.cmp(&b)));
}

/// Merges the `dn` thresholds (the positive prefix of `sorted_v`) with the
/// `up` thresholds (`v − C` over the prefix above `C`). Both runs are already
/// descending, so this is linear.
fn events_from_sorted<T: Scalar>(sorted_v: &[T], c: T, events: &mut Vec<UpDnEvent<T>>) {
    events.clear();
    let n_dn = sorted_v.iter().take_while(|&&x| x > T::zero()).count();
    let n_up = sorted_v[..n_dn].iter().take_while(|&&x| x > c).count();
    let (mut i, mut j) = (0, 0);
    while i < n_dn || j < n_up {
        if j < n_up && (i == n_dn || sorted_v[j] - c >= sorted_v[i]) {
            events.push(UpDnEvent { gamma: sorted_v[j] - c, kind: EventKind::Up, source_rank: j });
            j += 1;
        } else {
            events.push(UpDnEvent { gamma: sorted_v[i], kind: EventKind::Dn, source_rank: i });
            i += 1;
        }
    }
}

/// Positive thresholds of the sweep in the order they are crossed.
///
/// Contains `(vᵢ, dn)` for every `vᵢ > 0` and `(vᵢ − C, up)` for every
/// `vᵢ > C`, sorted by decreasing `gamma`. Equal thresholds put every `up`
/// before every `dn`, then order by source rank.
pub fn get_up_dn_seq<T: Scalar>(v: &[T], c: T) -> Vec<UpDnEvent<T>> {
    let order = argsort_desc(v);
    let sorted: Vec<T> = order.iter().map(|&i| v[i]).collect();
    let mut events = Vec::with_capacity(2 * v.len());
    events_from_sorted(&sorted, c, &mut events);
    events
}

/// KKT test for the candidate described by `state`.
///
/// Exact, non-strict comparisons:
/// * `C + γ̂ ≤ v⟨n_upper⟩` when the upper block is nonempty,
/// * `v⟨n_upper+1⟩ ≤ C + γ̂` and `γ̂ ≤ v⟨n_upper+n_free⟩` when the free block is nonempty,
/// * `v⟨n_upper+n_free+1⟩ ≤ γ̂` when some coordinate is left at zero.
///
/// (Ranks above are 1-based.)
pub fn kkt_cond<T: Scalar>(state: &SweepState<T>, sorted_v: &[T], c: T) -> bool {
    let g = state.gamma_hat;
    let free_end = state.n_upper + state.n_free;
    if state.n_upper > 0 && !(c + g <= sorted_v[state.n_upper - 1]) {
        return false;
    }
    if state.n_free > 0 && !(sorted_v[state.n_upper] <= c + g && g <= sorted_v[free_end - 1]) {
        return false;
    }
    if free_end < sorted_v.len() && !(sorted_v[free_end] <= g) {
        return false;
    }
    true
}

/// Sum of the positive parts of the inequalities checked by [`kkt_cond`].
pub fn kkt_violation<T: Scalar>(state: &SweepState<T>, sorted_v: &[T], c: T) -> T {
    let g = state.gamma_hat;
    let free_end = state.n_upper + state.n_free;
    let mut total = T::zero();
    if state.n_upper > 0 {
        total = total + positive_part(c + g - sorted_v[state.n_upper - 1]);
    }
    if state.n_free > 0 {
        total = total + positive_part(sorted_v[state.n_upper] - (c + g));
        total = total + positive_part(g - sorted_v[free_end - 1]);
    }
    if free_end < sorted_v.len() {
        total = total + positive_part(sorted_v[free_end] - g);
    }
    total
}

/// Minimizer of one subproblem.
#[derive(Clone, Debug, PartialEq)]
pub struct SubproblemSolution<T = f64> {
    pub b: Vec<T>,
    /// The multiplier `γ` with `b = clip(v − γ·1)`; equals `Σ b`.
    pub gamma: T,
    /// Sweep step at which the KKT check passed; 0 when `max(v) ≤ 0`.
    pub halting_iteration: usize,
    /// Number of events in the sweep.
    pub event_count: usize,
    /// Set when rounding kept every candidate from passing the KKT check and
    /// the least-violating candidate was returned instead.
    pub degenerate: bool,
}

impl<T> SubproblemSolution<T> {
    /// Turns a degenerate fallback result into [`Error::DegenerateNoHalt`].
    pub fn strict(self) -> Result<Self> {
        if self.degenerate {
            Err(Error::DegenerateNoHalt { events: self.event_count })
        } else {
            Ok(self)
        }
    }
}

/// Outcome of [`SubproblemSolver::solve_into`]; the vector itself is written
/// to the caller's buffer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveSummary<T = f64> {
    pub gamma: T,
    pub halting_iteration: usize,
    pub event_count: usize,
    pub degenerate: bool,
}

/// Reusable scratch space for repeated solves.
#[derive(Clone, Debug, Default)]
pub struct SubproblemSolver<T = f64> {
    order: Vec<usize>,
    sorted: Vec<T>,
    events: Vec<UpDnEvent<T>>,
}

impl<T: Scalar> SubproblemSolver<T> {
    pub fn new() -> Self {
        SubproblemSolver {
            order: Vec::new(),
            sorted: Vec::new(),
            events: Vec::new(),
        }
    }

    /// Solves for `(v, c)` and writes the minimizer into `b`.
    ///
    /// `v` must be finite and `c` positive; `b.len()` must equal `v.len()`.
    pub fn solve_into(&mut self, v: &[T], c: T, b: &mut [T]) -> SolveSummary<T> {
        debug_assert_eq!(v.len(), b.len());
        self.order.clear();
        self.order.extend(0..v.len());
        sort_desc(v, &mut self.order);
        self.sorted.clear();
        self.sorted.extend(self.order.iter().map(|&i| v[i]));

        if self.sorted.first().is_none_or(|&x| x <= T::zero()) {
            b.iter_mut().for_each(|x| *x = T::zero());
            return SolveSummary {
                gamma: T::zero(),
                halting_iteration: 0,
                event_count: 0,
                degenerate: false,
            };
        }

        events_from_sorted(&self.sorted, c, &mut self.events);
        run_sweep(&self.sorted, &self.order, &self.events, c, b)
    }
}

/// Sweeps `events` over the sorted view, writing the first KKT-passing
/// candidate (or the least-violating one) into `b`.
fn run_sweep<T: Scalar>(
    sorted: &[T],
    order: &[usize],
    events: &[UpDnEvent<T>],
    c: T,
    b: &mut [T],
) -> SolveSummary<T> {
    let mut state = SweepState::initial();
    let mut best: Option<(T, SweepState<T>)> = None;
    for event in events {
        state.apply(event.kind, sorted, c);
        if kkt_cond(&state, sorted, c) {
            state.fill_solution(sorted, order, c, b);
            return SolveSummary {
                gamma: state.gamma_hat,
                halting_iteration: state.t,
                event_count: events.len(),
                degenerate: false,
            };
        }
        let violation = kkt_violation(&state, sorted, c);
        if best.as_ref().is_none_or(|(v, _)| violation < *v) {
            best = Some((violation, state));
        }
    }

    // Unreachable in exact arithmetic.
    let fallback = best.map(|(_, s)| s).unwrap_or(state);
    log::warn!(
        "subproblem sweep found no KKT-passing candidate in {} events; using least-violating step {}",
        events.len(),
        fallback.t
    );
    fallback.fill_solution(sorted, order, c, b);
    SolveSummary {
        gamma: fallback.gamma_hat,
        halting_iteration: fallback.t,
        event_count: events.len(),
        degenerate: true,
    }
}

/// Exact minimizer of `½ b'(I + O)b − v'b` over `[0, C]^{k−1}`.
pub fn solve_subproblem<T: Scalar>(input: &SubproblemInput<T>) -> SubproblemSolution<T> {
    let mut b = vec![T::zero(); input.dim()];
    let summary = SubproblemSolver::new().solve_into(input.v(), input.c(), &mut b);
    SubproblemSolution {
        b,
        gamma: summary.gamma,
        halting_iteration: summary.halting_iteration,
        event_count: summary.event_count,
        degenerate: summary.degenerate,
    }
}

/// One row of [`trace_sweep`].
#[derive(Clone, Debug, PartialEq)]
pub struct SweepStep<T = f64> {
    pub event: UpDnEvent<T>,
    pub state: SweepState<T>,
    pub kkt: bool,
}

/// Replays the whole sweep without halting, recording the state and the KKT
/// verdict after every event.
pub fn trace_sweep<T: Scalar>(input: &SubproblemInput<T>) -> Vec<SweepStep<T>> {
    let c = input.c();
    let order = argsort_desc(input.v());
    let sorted: Vec<T> = order.iter().map(|&i| input.v()[i]).collect();
    let mut events = Vec::new();
    events_from_sorted(&sorted, c, &mut events);
    let mut state = SweepState::initial();
    events
        .into_iter()
        .map(|event| {
            state.apply(event.kind, &sorted, c);
            SweepStep { event, state, kkt: kkt_cond(&state, &sorted, c) }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve(v: &[f64], c: f64) -> SubproblemSolution {
        solve_subproblem(&SubproblemInput::new(v.to_vec(), c).unwrap())
    }

    #[test]
    fn clip_examples() {
        assert_eq!(clip(&[-1.0, 0.5, 7.0], 1.0), vec![0.0, 0.5, 1.0]);
        assert_eq!(clip(&[0.0, 1.0], 1.0), vec![0.0, 1.0]);
        assert_eq!(clip(&[2.3], 2.3), vec![2.3]);
    }

    #[test]
    fn input_validation() {
        assert!(SubproblemInput::new(vec![], 1.0).is_err());
        assert!(SubproblemInput::new(vec![1.0], 0.0).is_err());
        assert!(SubproblemInput::new(vec![1.0], -2.0).is_err());
        assert!(SubproblemInput::new(vec![1.0, f64::NAN], 1.0).is_err());
        assert!(SubproblemInput::new(vec![f64::INFINITY], 1.0).is_err());
        assert!(SubproblemInput::new(vec![1.0], f64::INFINITY).is_err());
    }

    #[test]
    fn empty_and_single_event_sequences() {
        assert!(get_up_dn_seq(&[-1.0, -2.0], 1.0).is_empty());
        let seq = get_up_dn_seq(&[0.5], 1.0);
        assert_eq!(seq, vec![UpDnEvent { gamma: 0.5, kind: EventKind::Dn, source_rank: 0 }]);
    }

    #[test]
    fn ties_put_up_before_dn() {
        // v = 2 gives up at 1.0; v = 1 gives dn at 1.0
        let seq = get_up_dn_seq(&[1.0, 2.0], 1.0);
        let kinds: Vec<_> = seq.iter().map(|e| (e.gamma, e.kind)).collect();
        assert_eq!(
            kinds,
            vec![(2.0, EventKind::Dn), (1.0, EventKind::Up), (1.0, EventKind::Dn)]
        );
    }

    #[test]
    fn up_events_after_the_last_dn() {
        let seq = get_up_dn_seq(&[5.0, 0.5, 3.0], 1.0);
        let kinds: Vec<_> = seq.iter().map(|e| (e.gamma, e.kind, e.source_rank)).collect();
        assert_eq!(
            kinds,
            vec![
                (5.0, EventKind::Dn, 0),
                (4.0, EventKind::Up, 0),
                (3.0, EventKind::Dn, 1),
                (2.0, EventKind::Up, 1),
                (0.5, EventKind::Dn, 2),
            ]
        );
        let seq = get_up_dn_seq(&[5.0], 1.0);
        assert_eq!(seq.len(), 2);
        assert_eq!(seq[1].kind, EventKind::Up);
    }

    #[test]
    fn nonpositive_v_gives_zero() {
        let sol = solve(&[-0.3, -5.0], 1.0);
        assert_eq!(sol.b, vec![0.0, 0.0]);
        assert_eq!(sol.gamma, 0.0);
        assert_eq!(sol.halting_iteration, 0);
        let sol = solve(&[0.0, -1.0, 0.0], 3.0);
        assert_eq!(sol.b, vec![0.0; 3]);
    }

    #[test]
    fn one_dimensional_case() {
        let sol = solve(&[1.0], 10.0);
        assert_eq!(sol.b, vec![0.5]);
        assert_eq!(sol.gamma, 0.5);
    }

    #[test]
    fn both_coordinates_saturate() {
        let sol = solve(&[3.0, 3.0], 1.0);
        assert_eq!(sol.b, vec![1.0, 1.0]);
        assert_eq!(sol.gamma, 2.0);
        assert!(!sol.degenerate);
    }

    #[test]
    fn kkt_all_interior_and_unabsorbed() {
        // v = (1, 0.9), C = 5: both free, γ̂ = 1.9/3
        let sorted = [1.0, 0.9];
        let state = SweepState { t: 2, n_free: 2, n_upper: 0, sum: 1.9, gamma_hat: 1.9 / 3.0 };
        assert!(kkt_cond(&state, &sorted, 5.0));
        assert_eq!(kkt_violation(&state, &sorted, 5.0), 0.0);

        let state = SweepState { t: 0, n_free: 0, n_upper: 0, sum: 0.0, gamma_hat: 0.0 };
        assert!(!kkt_cond(&state, &sorted, 5.0));
        assert!(kkt_violation(&state, &sorted, 5.0) > 0.0);
    }

    #[test]
    fn sweep_sum_matches_recomputation() {
        let v = [1.8, 1.4, 1.4, 1.4, 1.2, 0.7, 0.4, 0.4, 0.1, -0.2];
        let input = SubproblemInput::new(v.to_vec(), 1.0).unwrap();
        let sorted: Vec<f64> = argsort_desc(&v).iter().map(|&i| v[i]).collect();
        for step in trace_sweep(&input) {
            let s = step.state;
            assert!(s.n_free + s.n_upper <= v.len());
            let expect: f64 = sorted[s.n_upper..s.n_upper + s.n_free].iter().sum();
            assert!((s.sum - expect).abs() < 1e-12, "{s:?}");
            let g = (1.0 * s.n_upper as f64 + s.sum) / (s.n_free as f64 + 1.0);
            assert!((s.gamma_hat - g).abs() < 1e-15);
        }
    }

    #[test]
    fn fallback_returns_least_violating_candidate() {
        // A corrupted event list (second dn missing) cannot reach the optimum
        // of v = (2, 1.5), C = 10, whose free block holds both coordinates.
        let sorted = [2.0, 1.5];
        let order = [0, 1];
        let events = [UpDnEvent { gamma: 2.0, kind: EventKind::Dn, source_rank: 0 }];
        let mut b = [0.0; 2];
        let summary = run_sweep(&sorted, &order, &events, 10.0, &mut b);
        assert!(summary.degenerate);
        assert_eq!(summary.halting_iteration, 1);
        assert_eq!(b, [1.0, 0.0]);
        let sol = SubproblemSolution {
            b: b.to_vec(),
            gamma: summary.gamma,
            halting_iteration: 1,
            event_count: 1,
            degenerate: true,
        };
        assert!(matches!(sol.strict(), Err(Error::DegenerateNoHalt { events: 1 })));
    }

    #[test]
    fn solver_reuse_matches_fresh_solves() {
        let mut solver = SubproblemSolver::new();
        let cases: [(&[f64], f64); 3] = [(&[3.0, 3.0], 1.0), (&[1.0], 10.0), (&[0.2, 2.0, -1.0, 0.7], 0.5)];
        for (v, c) in cases {
            let mut b = vec![0.0; v.len()];
            let summary = solver.solve_into(v, c, &mut b);
            let fresh = solve(v, c);
            assert_eq!(b, fresh.b);
            assert_eq!(summary.gamma, fresh.gamma);
        }
    }

    #[test]
    fn objective_helper() {
        // ½(1 + 4 + 9) − (1·1 + 1·2) with b = (1, 2), v = (1, 1)
        assert_eq!(subproblem_objective(&[1.0, 1.0], &[1.0, 2.0]), 4.0);
    }
}
