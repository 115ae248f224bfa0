//! Optimization problems over the outputs of ReLU networks.
//!
//! Each problem implements [`BranchProblem`]: cells are input regions, the
//! upper bound evaluates the objective at the cell center, and the lower bound
//! propagates the cell to a zonotope and optimizes the objective over it.

mod difference;
mod noise_buffer;
mod polytope;

pub use difference::{max_network_difference, DifferenceBnb, NetworkDifferenceProblem};
pub use noise_buffer::{solve_noise_buffer, NoiseBufferBnb, NoiseBufferProblem, NoiseBufferWitness};
pub use polytope::{
    check_containment, check_reachability, Containment, ContainmentReport, MaxViolationBnb,
    MinViolationBnb, Reachability, ReachabilityReport, CONTAINMENT_TOL, REACH_TOL,
};

use std::borrow::Cow;
use std::time::Duration;

use crate::bnb::{solve_with_progress, BnbOptions, BranchProblem, Progress, Solution, SolveStatus};
use crate::error::{check_dim, Error, Result};
use crate::geometry::{Hyperrectangle, Norm, Polytope, Zonotope};
use crate::network::FeedForwardNetwork;
use crate::propagation::propagate;
use crate::scalar::{dot, Scalar};
use crate::subsolvers::{self, box_ls_lower_bound_with};

/// Input region of a branch-and-bound cell. The root set fixes the variant.
#[derive(Debug, Clone, PartialEq)]
pub enum InputSet<T> {
    Box(Hyperrectangle<T>),
    Zonotope(Zonotope<T>),
}

impl<T: Scalar> InputSet<T> {
    pub fn dim(&self) -> usize {
        match self {
            InputSet::Box(h) => h.dim(),
            InputSet::Zonotope(z) => z.dim(),
        }
    }

    pub fn center(&self) -> &[T] {
        match self {
            InputSet::Box(h) => h.center(),
            InputSet::Zonotope(z) => z.center(),
        }
    }

    pub fn to_zonotope(&self) -> Cow<'_, Zonotope<T>> {
        match self {
            InputSet::Box(h) => Cow::Owned(h.to_zonotope()),
            InputSet::Zonotope(z) => Cow::Borrowed(z),
        }
    }

    pub fn split(&self) -> Result<Vec<Self>> {
        Ok(match self {
            InputSet::Box(h) => {
                let (a, b) = h.split()?;
                vec![InputSet::Box(a), InputSet::Box(b)]
            }
            InputSet::Zonotope(z) => {
                let (a, b) = z.split()?;
                vec![InputSet::Zonotope(a), InputSet::Zonotope(b)]
            }
        })
    }
}

impl<T> From<Hyperrectangle<T>> for InputSet<T> {
    fn from(h: Hyperrectangle<T>) -> Self {
        InputSet::Box(h)
    }
}

impl<T> From<Zonotope<T>> for InputSet<T> {
    fn from(z: Zonotope<T>) -> Self {
        InputSet::Zonotope(z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceNorm {
    L1,
    L2,
    LInf,
}

impl DistanceNorm {
    pub fn as_norm(self) -> Norm {
        match self {
            DistanceNorm::L1 => Norm::L1,
            DistanceNorm::L2 => Norm::L2,
            DistanceNorm::LInf => Norm::LInf,
        }
    }
}

/// Convex objective `g(y)` on the network output.
#[derive(Debug, Clone, PartialEq)]
pub enum Objective<T> {
    /// `aᵀy + b`
    Affine { a: Vec<T>, b: T },
    /// `max_i max(a_iᵀy − b_i, 0)`
    PolytopeViolation(Polytope<T>),
    /// `‖y − target‖`
    Distance { target: Vec<T>, norm: DistanceNorm },
}

impl<T: Scalar> Objective<T> {
    pub fn dim(&self) -> usize {
        match self {
            Objective::Affine { a, .. } => a.len(),
            Objective::PolytopeViolation(p) => p.dim(),
            Objective::Distance { target, .. } => target.len(),
        }
    }

    pub fn eval(&self, y: &[T]) -> T {
        match self {
            Objective::Affine { a, b } => dot(a, y) + *b,
            Objective::PolytopeViolation(p) => p.violation(y),
            Objective::Distance { target, norm } => norm.as_norm().distance(y, target),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sense {
    #[default]
    Minimize,
    Maximize,
}

/// Inner-solver settings for objectives that are not analytic over a zonotope.
#[derive(Debug, Clone, Copy)]
pub struct SubsolverSettings<T> {
    pub least_squares_tol: T,
    pub least_squares_max_iterations: usize,
}

impl<T: Scalar> SubsolverSettings<T> {
    pub fn for_gap(stop_gap: T) -> Self {
        Self {
            least_squares_tol: stop_gap * T::lit(0.1),
            least_squares_max_iterations: subsolvers::box_ls::DEFAULT_MAX_ITERATIONS,
        }
    }
}

/// Certified result reported in the caller's optimization sense.
#[derive(Debug, Clone)]
pub struct Outcome<T, W = Vec<T>> {
    pub status: SolveStatus,
    pub lower_bound: T,
    pub upper_bound: T,
    /// Objective value attained at `witness`.
    pub value: T,
    pub witness: W,
    pub iterations: usize,
    pub expansions: usize,
    pub wall_time: Duration,
}

impl<T: Scalar, W> Outcome<T, W> {
    pub fn gap(&self) -> T {
        self.upper_bound - self.lower_bound
    }

    pub(crate) fn from_solution(sol: Solution<T, W>, sense: Sense) -> Self {
        let (lower_bound, upper_bound, value) = match sense {
            Sense::Minimize => (sol.best_lower, sol.best_upper, sol.best_upper),
            Sense::Maximize => (-sol.best_upper, -sol.best_lower, -sol.best_upper),
        };
        Self {
            status: sol.status,
            lower_bound,
            upper_bound,
            value,
            witness: sol.witness,
            iterations: sol.iterations,
            expansions: sol.expansions,
            wall_time: sol.wall_time,
        }
    }
}

/// Lower bound on `min_{z∈Z} g(z)`; exact for affine, violation and ℓ1/ℓ∞ objectives.
pub fn lower_bound_over_zonotope<T: Scalar>(
    z: &Zonotope<T>,
    objective: &Objective<T>,
    settings: &SubsolverSettings<T>,
) -> Result<T> {
    check_dim("objective dimension", z.dim(), objective.dim())?;
    match objective {
        Objective::Affine { a, b } => z.support_min(a, *b),
        Objective::PolytopeViolation(p) => {
            let quick = subsolvers::min_violation_quick(z, p)?;
            if quick > T::zero() {
                Ok(quick)
            } else {
                subsolvers::min_violation_exact(z, p)
            }
        }
        Objective::Distance { target, norm } => match norm {
            DistanceNorm::L1 => subsolvers::min_l1_distance(z, target),
            DistanceNorm::LInf => z.linf_residual(target),
            DistanceNorm::L2 => Ok(box_ls_lower_bound_with(
                z.generators(),
                z.center(),
                target,
                settings.least_squares_tol,
                settings.least_squares_max_iterations,
            )?
            .lower),
        },
    }
}

pub fn lower_bound_convex<T: Scalar>(
    net: &FeedForwardNetwork<T>,
    cell: &InputSet<T>,
    objective: &Objective<T>,
) -> Result<T> {
    let settings = SubsolverSettings::for_gap(T::lit(1e-4));
    let out = propagate(net, &cell.to_zonotope())?;
    lower_bound_over_zonotope(&out, objective, &settings)
}

/// Objective at the network image of the cell center, with the center as witness.
pub fn upper_bound_center<T: Scalar>(
    net: &FeedForwardNetwork<T>,
    cell: &InputSet<T>,
    objective: &Objective<T>,
) -> Result<(T, Vec<T>)> {
    let x = cell.center().to_vec();
    let y = net.evaluate(&x)?;
    check_dim("objective dimension", y.len(), objective.dim())?;
    Ok((objective.eval(&y), x))
}

/// Convex objective (or affine objective in either sense) over one network.
pub struct ConvexProblem<'a, T: Scalar> {
    net: &'a FeedForwardNetwork<T>,
    objective: Cow<'a, Objective<T>>,
    settings: SubsolverSettings<T>,
}

impl<'a, T: Scalar> ConvexProblem<'a, T> {
    pub fn new(
        net: &'a FeedForwardNetwork<T>,
        objective: &'a Objective<T>,
        sense: Sense,
        settings: SubsolverSettings<T>,
    ) -> Result<Self> {
        check_dim("objective dimension", net.output_dim(), objective.dim())?;
        let objective = match (sense, objective) {
            (Sense::Minimize, _) => Cow::Borrowed(objective),
            (Sense::Maximize, Objective::Affine { a, b }) => Cow::Owned(Objective::Affine {
                a: a.iter().map(|&v| -v).collect(),
                b: -*b,
            }),
            (Sense::Maximize, _) => {
                return Err(Error::invalid("only affine objectives can be maximized"))
            }
        };
        Ok(Self {
            net,
            objective,
            settings,
        })
    }
}

impl<T: Scalar> BranchProblem<T> for ConvexProblem<'_, T> {
    type Cell = InputSet<T>;
    type Witness = Vec<T>;

    fn split(&self, cell: &InputSet<T>) -> Result<Vec<InputSet<T>>> {
        cell.split()
    }

    fn lower_bound(&self, cell: &InputSet<T>) -> Result<T> {
        let out = propagate(self.net, &cell.to_zonotope())?;
        lower_bound_over_zonotope(&out, &self.objective, &self.settings)
            .map_err(|e| e.with_context(format!("lower bound on cell centered at {:?}", cell.center())))
    }

    fn upper_bound(&self, cell: &InputSet<T>) -> Result<(T, Vec<T>)> {
        upper_bound_center(self.net, cell, &self.objective)
    }
}

fn check_input<T: Scalar>(net: &FeedForwardNetwork<T>, input: &InputSet<T>) -> Result<()> {
    check_dim("input set dimension", net.input_dim(), input.dim())
}

/// Certified optimum of a convex (or, when maximizing, affine) objective over `net(X)`.
pub fn optimize_convex<T: Scalar>(
    net: &FeedForwardNetwork<T>,
    input: &InputSet<T>,
    objective: &Objective<T>,
    sense: Sense,
    opts: &BnbOptions<T>,
    progress: &mut dyn FnMut(&Progress<T>),
) -> Result<Outcome<T>> {
    check_input(net, input)?;
    let problem = ConvexProblem::new(net, objective, sense, SubsolverSettings::for_gap(opts.stop_gap))?;
    let sol = solve_with_progress(&problem, input.clone(), opts, progress)?;
    Ok(Outcome::from_solution(sol, sense))
}

pub fn minimize_convex<T: Scalar>(
    net: &FeedForwardNetwork<T>,
    input: &InputSet<T>,
    objective: &Objective<T>,
    opts: &BnbOptions<T>,
) -> Result<Outcome<T>> {
    optimize_convex(net, input, objective, Sense::Minimize, opts, &mut |_| {})
}

/// Certified distance from `target` to the range of `net` over `X`.
pub fn project_onto_range<T: Scalar>(
    net: &FeedForwardNetwork<T>,
    input: &InputSet<T>,
    target: &[T],
    norm: DistanceNorm,
    opts: &BnbOptions<T>,
) -> Result<Outcome<T>> {
    let objective = Objective::Distance {
        target: target.to_vec(),
        norm,
    };
    minimize_convex(net, input, &objective, opts)
}
