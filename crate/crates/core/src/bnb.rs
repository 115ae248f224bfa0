//! Best-first branch and bound with optimality-gap termination.
//!
//! The engine always minimizes. A problem supplies `split`, `lower_bound` and
//! `upper_bound`; subproblems are kept in a priority queue keyed by their lower
//! bound and the one with the lowest bound is split next. The gap between the
//! best achievable value and the lowest open lower bound is checked every
//! `stop_frequency` iterations (and before the first split).

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// The three callbacks branch and bound is built from.
pub trait BranchProblem<T: Scalar> {
    type Cell: Clone;
    type Witness: Clone;

    /// Children must cover the cell. `Error::DegenerateSplit` marks a cell that
    /// cannot be divided further; its cached lower bound becomes final.
    fn split(&self, cell: &Self::Cell) -> Result<Vec<Self::Cell>>;

    /// Must not exceed the objective anywhere in the cell.
    fn lower_bound(&self, cell: &Self::Cell) -> Result<T>;

    /// An achievable objective value in the cell and the point attaining it.
    fn upper_bound(&self, cell: &Self::Cell) -> Result<(T, Self::Witness)>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Timeout,
    MaxIter,
}

/// Order among subproblems with equal lower bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    #[default]
    Fifo,
    Lifo,
}

#[derive(Debug, Clone)]
pub struct BnbOptions<T> {
    pub stop_gap: T,
    pub stop_frequency: usize,
    pub max_iterations: usize,
    pub timeout: Option<Duration>,
    pub tie_break: TieBreak,
    /// Stop as soon as an achievable value strictly below this is found.
    pub upper_below: Option<T>,
    /// Stop as soon as the certified lower bound strictly exceeds this.
    pub lower_above: Option<T>,
}

impl<T: Scalar> Default for BnbOptions<T> {
    fn default() -> Self {
        Self {
            stop_gap: T::lit(1e-4),
            stop_frequency: 1,
            max_iterations: 10_000_000,
            timeout: Some(Duration::from_secs(300)),
            tie_break: TieBreak::Fifo,
            upper_below: None,
            lower_above: None,
        }
    }
}

impl<T: Scalar> BnbOptions<T> {
    pub fn with_gap(stop_gap: T) -> Self {
        Self {
            stop_gap,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.stop_gap > T::zero()) {
            return Err(Error::invalid("stop_gap must be positive"));
        }
        if self.stop_frequency == 0 {
            return Err(Error::invalid("stop_frequency must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Progress<T> {
    pub iteration: usize,
    pub best_lower: T,
    pub best_upper: T,
    pub queue_len: usize,
}

impl<T: Scalar> Progress<T> {
    pub fn gap(&self) -> T {
        self.best_upper - self.best_lower
    }
}

#[derive(Debug, Clone)]
pub struct Solution<T, W> {
    pub status: SolveStatus,
    pub best_lower: T,
    pub best_upper: T,
    pub witness: W,
    pub iterations: usize,
    pub expansions: usize,
    pub wall_time: Duration,
}

impl<T: Scalar, W> Solution<T, W> {
    pub fn gap(&self) -> T {
        self.best_upper - self.best_lower
    }
}

#[derive(Debug, Clone)]
pub struct Subproblem<T, C> {
    pub cell: C,
    pub lower_bound: T,
    pub depth: usize,
}

struct Entry<T, C> {
    key: T,
    seq: u64,
    item: Subproblem<T, C>,
}

impl<T: Scalar, C> PartialEq for Entry<T, C> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T: Scalar, C> Eq for Entry<T, C> {}

impl<T: Scalar, C> PartialOrd for Entry<T, C> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Scalar, C> Ord for Entry<T, C> {
    // BinaryHeap is a max-heap: reverse so the smallest (key, seq) is on top.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .key
            .partial_cmp(&self.key)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Min-priority queue of subproblems keyed by lower bound.
pub struct SubproblemQueue<T, C> {
    heap: BinaryHeap<Entry<T, C>>,
    next_seq: u64,
    tie_break: TieBreak,
}

impl<T: Scalar, C> SubproblemQueue<T, C> {
    pub fn new(tie_break: TieBreak) -> Self {
        Self {
            heap: BinaryHeap::new(),
            next_seq: 0,
            tie_break,
        }
    }

    pub fn push(&mut self, item: Subproblem<T, C>) {
        let seq = match self.tie_break {
            TieBreak::Fifo => self.next_seq,
            TieBreak::Lifo => u64::MAX - self.next_seq,
        };
        self.next_seq += 1;
        self.heap.push(Entry {
            key: item.lower_bound,
            seq,
            item,
        });
    }

    pub fn pop(&mut self) -> Option<Subproblem<T, C>> {
        self.heap.pop().map(|e| e.item)
    }

    pub fn min_lower_bound(&self) -> Option<T> {
        self.heap.peek().map(|e| e.key)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

pub fn solve<P, T>(problem: &P, root: P::Cell, opts: &BnbOptions<T>) -> Result<Solution<T, P::Witness>>
where
    P: BranchProblem<T>,
    T: Scalar,
{
    solve_with_progress(problem, root, opts, &mut |_| {})
}

pub fn solve_with_progress<P, T>(
    problem: &P,
    root: P::Cell,
    opts: &BnbOptions<T>,
    progress: &mut dyn FnMut(&Progress<T>),
) -> Result<Solution<T, P::Witness>>
where
    P: BranchProblem<T>,
    T: Scalar,
{
    opts.validate()?;
    let start = Instant::now();
    let deadline = opts.timeout.map(|t| start + t);

    let root_lower = checked(problem.lower_bound(&root)?, "lower bound")?;
    let (root_upper, root_witness) = problem.upper_bound(&root)?;
    let mut best_upper = checked(root_upper, "upper bound")?;
    let mut witness = root_witness;
    // Lowest lower bound among cells that could not be split further.
    let mut finalized_lower = T::infinity();

    let mut queue = SubproblemQueue::new(opts.tie_break);
    queue.push(Subproblem {
        cell: root,
        lower_bound: root_lower,
        depth: 0,
    });

    let mut best_lower = T::neg_infinity();
    let mut iterations = 0usize;
    let mut expansions = 0usize;

    let finish = |status, best_lower, best_upper, witness, iterations, expansions| Solution {
        status,
        best_lower,
        best_upper,
        witness,
        iterations,
        expansions,
        wall_time: start.elapsed(),
    };

    loop {
        let must_check = iterations % opts.stop_frequency == 0 || queue.is_empty();
        if must_check {
            let open = queue.min_lower_bound().unwrap_or(T::infinity());
            // When nothing is open every remaining cell was pruned above best_upper
            // or finalized, so the optimum is bracketed by those values.
            let current = open.min(finalized_lower).min(if queue.is_empty() {
                best_upper
            } else {
                T::infinity()
            });
            best_lower = best_lower.max(current);
            progress(&Progress {
                iteration: iterations,
                best_lower,
                best_upper,
                queue_len: queue.len(),
            });
            let gap_closed = best_upper - best_lower <= opts.stop_gap;
            let target_hit = opts.upper_below.is_some_and(|t| best_upper < t)
                || opts.lower_above.is_some_and(|t| best_lower > t);
            if gap_closed || target_hit {
                return Ok(finish(SolveStatus::Optimal, best_lower, best_upper, witness, iterations, expansions));
            }
            if queue.is_empty() {
                return Err(Error::Internal(format!(
                    "queue exhausted with gap {} above stop_gap; bounds are unsound",
                    (best_upper - best_lower).to_f64_lossy()
                )));
            }
        }
        if iterations >= opts.max_iterations {
            return Ok(finish(SolveStatus::MaxIter, best_lower, best_upper, witness, iterations, expansions));
        }
        if deadline.is_some_and(|d| Instant::now() >= d) {
            return Ok(finish(SolveStatus::Timeout, best_lower, best_upper, witness, iterations, expansions));
        }

        iterations += 1;
        let sub = queue
            .pop()
            .ok_or_else(|| Error::Internal("pop on empty queue".into()))?;
        let children = match problem.split(&sub.cell) {
            Ok(children) => children,
            Err(Error::DegenerateSplit(_)) => {
                finalized_lower = finalized_lower.min(sub.lower_bound);
                continue;
            }
            Err(e) => return Err(e),
        };
        expansions += 1;
        for cell in children {
            // Children lie inside their parent, so the parent's bound still applies.
            let lower = checked(problem.lower_bound(&cell)?, "lower bound")?.max(sub.lower_bound);
            let (upper, w) = problem.upper_bound(&cell)?;
            if checked(upper, "upper bound")? < best_upper {
                best_upper = upper;
                witness = w;
            }
            if lower <= best_upper {
                queue.push(Subproblem {
                    cell,
                    lower_bound: lower,
                    depth: sub.depth + 1,
                });
            }
        }
    }
}

fn checked<T: Scalar>(v: T, what: &str) -> Result<T> {
    if v.is_nan() {
        Err(Error::SolverFailure(format!("{what} evaluated to NaN")))
    } else {
        Ok(v)
    }
}
