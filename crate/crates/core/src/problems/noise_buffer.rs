//! Two networks in series with a set of allowed perturbations between them:
//! minimize `g(second(first(x) + z))` over `x ∈ X`, `z ∈ buffer`.

use std::time::Instant;

use crate::bnb::{solve, solve_with_progress, BnbOptions, BranchProblem, Progress};
use crate::error::{check_dim, Result};
use crate::geometry::Zonotope;
use crate::network::FeedForwardNetwork;
use crate::propagation::propagate;
use crate::scalar::Scalar;

use super::{ConvexProblem, InputSet, Objective, Outcome, Sense, SubsolverSettings};

#[derive(Debug, Clone)]
pub struct NoiseBufferProblem<T> {
    pub first: FeedForwardNetwork<T>,
    pub second: FeedForwardNetwork<T>,
    pub buffer: Zonotope<T>,
    pub objective: Objective<T>,
}

impl<T: Scalar> NoiseBufferProblem<T> {
    pub fn new(
        first: FeedForwardNetwork<T>,
        second: FeedForwardNetwork<T>,
        buffer: Zonotope<T>,
        objective: Objective<T>,
    ) -> Result<Self> {
        check_dim("buffer dimension", first.output_dim(), buffer.dim())?;
        check_dim("second network input", first.output_dim(), second.input_dim())?;
        check_dim("objective dimension", second.output_dim(), objective.dim())?;
        Ok(Self {
            first,
            second,
            buffer,
            objective,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseBufferWitness<T> {
    /// Input to the first network.
    pub input: Vec<T>,
    /// Input to the second network: `first(input)` plus a buffer perturbation.
    pub second_input: Vec<T>,
}

/// Iteration budget of each inner solve. A capped inner solve still returns
/// valid bounds, and the outer search refines cells whose bounds are loose, so
/// it is better to split early than to solve large cells exactly.
pub fn inner_iteration_share(outer_max_iterations: usize) -> usize {
    (outer_max_iterations / 10_000).clamp(1, 1_000).max(outer_max_iterations.min(64))
}

/// Outer search over input cells. Each bound is itself a branch-and-bound
/// solve over the second network.
pub struct NoiseBufferBnb<'a, T: Scalar> {
    problem: &'a NoiseBufferProblem<T>,
    inner: ConvexProblem<'a, T>,
    inner_opts: BnbOptions<T>,
    upper_gap: T,
    deadline: Option<Instant>,
}

impl<'a, T: Scalar> NoiseBufferBnb<'a, T> {
    /// Lower-bound solves run to half the outer gap and upper-bound solves to a
    /// quarter. If both used half, their errors alone could fill the outer gap
    /// and the search would never close it.
    pub fn new(problem: &'a NoiseBufferProblem<T>, opts: &BnbOptions<T>) -> Result<Self> {
        let inner_gap = opts.stop_gap * T::lit(0.5);
        let inner = ConvexProblem::new(
            &problem.second,
            &problem.objective,
            Sense::Minimize,
            SubsolverSettings::for_gap(inner_gap),
        )?;
        let inner_opts = BnbOptions {
            stop_gap: inner_gap,
            stop_frequency: 1,
            max_iterations: inner_iteration_share(opts.max_iterations),
            timeout: None,
            tie_break: opts.tie_break,
            upper_below: None,
            lower_above: None,
        };
        Ok(Self {
            problem,
            inner,
            inner_opts,
            upper_gap: opts.stop_gap * T::lit(0.25),
            deadline: opts.timeout.map(|t| Instant::now() + t),
        })
    }

    fn inner_options(&self) -> BnbOptions<T> {
        let mut opts = self.inner_opts.clone();
        opts.timeout = self
            .deadline
            .map(|d| d.saturating_duration_since(Instant::now()));
        opts
    }
}

impl<T: Scalar> BranchProblem<T> for NoiseBufferBnb<'_, T> {
    type Cell = InputSet<T>;
    type Witness = NoiseBufferWitness<T>;

    fn split(&self, cell: &InputSet<T>) -> Result<Vec<InputSet<T>>> {
        cell.split()
    }

    fn lower_bound(&self, cell: &InputSet<T>) -> Result<T> {
        let first_out = propagate(&self.problem.first, &cell.to_zonotope())?;
        // Parallel generators would each add a search dimension to the inner solve.
        let buffered = first_out.minkowski_sum(&self.problem.buffer)?.merge_parallel_generators();
        let sol = solve(&self.inner, InputSet::Zonotope(buffered), &self.inner_options())?;
        Ok(sol.best_lower)
    }

    fn upper_bound(&self, cell: &InputSet<T>) -> Result<(T, NoiseBufferWitness<T>)> {
        let input = cell.center().to_vec();
        let y1 = self.problem.first.evaluate(&input)?;
        let shifted = self.problem.buffer.translate(&y1)?.merge_parallel_generators();
        let mut opts = self.inner_options();
        opts.stop_gap = self.upper_gap;
        let sol = solve(&self.inner, InputSet::Zonotope(shifted), &opts)?;
        Ok((
            sol.best_upper,
            NoiseBufferWitness {
                input,
                second_input: sol.witness,
            },
        ))
    }
}

pub fn solve_noise_buffer<T: Scalar>(
    problem: &NoiseBufferProblem<T>,
    input: &InputSet<T>,
    opts: &BnbOptions<T>,
    progress: &mut dyn FnMut(&Progress<T>),
) -> Result<Outcome<T, NoiseBufferWitness<T>>> {
    check_dim("input set dimension", problem.first.input_dim(), input.dim())?;
    let bnb = NoiseBufferBnb::new(problem, opts)?;
    let sol = solve_with_progress(&bnb, input.clone(), opts, progress)?;
    Ok(Outcome::from_solution(sol, Sense::Minimize))
}
