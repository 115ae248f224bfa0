//! Output-set containment and reachability against a polytope `{y : A·y ≤ b}`.

use crate::bnb::{solve_with_progress, BnbOptions, BranchProblem, Progress};
use crate::error::{check_dim, Result};
use crate::geometry::Polytope;
use crate::network::FeedForwardNetwork;
use crate::propagation::propagate;
use crate::scalar::Scalar;
use crate::subsolvers::{max_polytope_violation, min_violation_exact, min_violation_quick};

use super::{upper_bound_center, InputSet, Objective, Outcome, Sense};

/// Containment holds once the certified maximum violation is below this.
pub const CONTAINMENT_TOL: f64 = 1e-9;
/// A point counts as reaching the polytope when its violation is below this,
/// and reachability is refuted once the certified minimum violation exceeds it.
pub const REACH_TOL: f64 = 1e-9;

/// Maximizes the violation by minimizing its negation.
pub struct MaxViolationBnb<'a, T> {
    net: &'a FeedForwardNetwork<T>,
    objective: Objective<T>,
}

impl<'a, T: Scalar> MaxViolationBnb<'a, T> {
    pub fn new(net: &'a FeedForwardNetwork<T>, polytope: &Polytope<T>) -> Result<Self> {
        check_dim("polytope dimension", net.output_dim(), polytope.dim())?;
        Ok(Self {
            net,
            objective: Objective::PolytopeViolation(polytope.clone()),
        })
    }

    fn polytope(&self) -> &Polytope<T> {
        match &self.objective {
            Objective::PolytopeViolation(p) => p,
            _ => unreachable!("constructed with a polytope"),
        }
    }
}

impl<T: Scalar> BranchProblem<T> for MaxViolationBnb<'_, T> {
    type Cell = InputSet<T>;
    type Witness = Vec<T>;

    fn split(&self, cell: &InputSet<T>) -> Result<Vec<InputSet<T>>> {
        cell.split()
    }

    fn lower_bound(&self, cell: &InputSet<T>) -> Result<T> {
        let out = propagate(self.net, &cell.to_zonotope())?;
        Ok(-max_polytope_violation(&out, self.polytope())?)
    }

    fn upper_bound(&self, cell: &InputSet<T>) -> Result<(T, Vec<T>)> {
        let (v, x) = upper_bound_center(self.net, cell, &self.objective)?;
        Ok((-v, x))
    }
}

pub struct MinViolationBnb<'a, T> {
    net: &'a FeedForwardNetwork<T>,
    objective: Objective<T>,
}

impl<'a, T: Scalar> MinViolationBnb<'a, T> {
    pub fn new(net: &'a FeedForwardNetwork<T>, polytope: &Polytope<T>) -> Result<Self> {
        check_dim("polytope dimension", net.output_dim(), polytope.dim())?;
        Ok(Self {
            net,
            objective: Objective::PolytopeViolation(polytope.clone()),
        })
    }
}

impl<T: Scalar> BranchProblem<T> for MinViolationBnb<'_, T> {
    type Cell = InputSet<T>;
    type Witness = Vec<T>;

    fn split(&self, cell: &InputSet<T>) -> Result<Vec<InputSet<T>>> {
        cell.split()
    }

    fn lower_bound(&self, cell: &InputSet<T>) -> Result<T> {
        let out = propagate(self.net, &cell.to_zonotope())?;
        let Objective::PolytopeViolation(p) = &self.objective else {
            unreachable!("constructed with a polytope")
        };
        let quick = min_violation_quick(&out, p)?;
        if quick > T::zero() {
            Ok(quick)
        } else {
            min_violation_exact(&out, p)
        }
    }

    fn upper_bound(&self, cell: &InputSet<T>) -> Result<(T, Vec<T>)> {
        upper_bound_center(self.net, cell, &self.objective)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Containment<T> {
    /// Every output lies in the polytope.
    Holds,
    /// The network maps `input` outside the polytope by `violation > 0`.
    Violated { input: Vec<T>, violation: T },
    Unknown,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Reachability<T> {
    /// `input` maps into the polytope (violation below [`REACH_TOL`]).
    Reachable { input: Vec<T>, violation: T },
    Unreachable,
    Unknown,
}

/// Verdict plus bounds on the maximum violation over the input set.
#[derive(Debug, Clone)]
pub struct ContainmentReport<T> {
    pub verdict: Containment<T>,
    pub outcome: Outcome<T>,
}

/// Verdict plus bounds on the minimum violation over the input set.
#[derive(Debug, Clone)]
pub struct ReachabilityReport<T> {
    pub verdict: Reachability<T>,
    pub outcome: Outcome<T>,
}

/// Decides whether `net(X) ⊆ P`. The search stops at the first concrete
/// counterexample or once the certified maximum violation drops below
/// [`CONTAINMENT_TOL`]; otherwise it runs to the gap like any maximization.
pub fn check_containment<T: Scalar>(
    net: &FeedForwardNetwork<T>,
    input: &InputSet<T>,
    polytope: &Polytope<T>,
    opts: &BnbOptions<T>,
    progress: &mut dyn FnMut(&Progress<T>),
) -> Result<ContainmentReport<T>> {
    check_dim("input set dimension", net.input_dim(), input.dim())?;
    let problem = MaxViolationBnb::new(net, polytope)?;
    let tol = T::lit(CONTAINMENT_TOL);
    let mut opts = opts.clone();
    opts.upper_below.get_or_insert(T::zero());
    opts.lower_above.get_or_insert(-tol);
    let sol = solve_with_progress(&problem, input.clone(), &opts, progress)?;
    let outcome = Outcome::from_solution(sol, Sense::Maximize);

    let violation = polytope.violation(&net.evaluate(&outcome.witness)?);
    let verdict = if violation > T::zero() {
        Containment::Violated {
            input: outcome.witness.clone(),
            violation,
        }
    } else if outcome.upper_bound < tol {
        Containment::Holds
    } else {
        Containment::Unknown
    };
    Ok(ContainmentReport { verdict, outcome })
}

/// Decides whether `net(X) ∩ P ≠ ∅`. The search stops at the first input whose
/// image lies in `P` (to [`REACH_TOL`]) or once the certified minimum violation
/// exceeds [`REACH_TOL`].
pub fn check_reachability<T: Scalar>(
    net: &FeedForwardNetwork<T>,
    input: &InputSet<T>,
    polytope: &Polytope<T>,
    opts: &BnbOptions<T>,
    progress: &mut dyn FnMut(&Progress<T>),
) -> Result<ReachabilityReport<T>> {
    check_dim("input set dimension", net.input_dim(), input.dim())?;
    let problem = MinViolationBnb::new(net, polytope)?;
    let tol = T::lit(REACH_TOL);
    let mut opts = opts.clone();
    opts.upper_below.get_or_insert(tol);
    opts.lower_above.get_or_insert(tol);
    let sol = solve_with_progress(&problem, input.clone(), &opts, progress)?;
    let outcome = Outcome::from_solution(sol, Sense::Minimize);

    let violation = polytope.violation(&net.evaluate(&outcome.witness)?);
    let verdict = if violation < tol {
        Reachability::Reachable {
            input: outcome.witness.clone(),
            violation,
        }
    } else if outcome.lower_bound > tol {
        Reachability::Unreachable
    } else {
        Reachability::Unknown
    };
    Ok(ReachabilityReport { verdict, outcome })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Hyperrectangle;
    use crate::linalg::Matrix;

    fn interval(lo: f64, hi: f64) -> Polytope<f64> {
        Polytope::new(Matrix::from_rows(&[vec![1.0], vec![-1.0]], 1).unwrap(), vec![hi, -lo]).unwrap()
    }

    fn abs_net() -> FeedForwardNetwork<f64> {
        FeedForwardNetwork::from_parameters(vec![
            (Matrix::from_rows(&[vec![1.0], vec![-1.0]], 1).unwrap(), vec![0.0, 0.0]),
            (Matrix::from_rows(&[vec![1.0, 1.0]], 2).unwrap(), vec![0.0]),
        ])
        .unwrap()
    }

    fn unit() -> InputSet<f64> {
        Hyperrectangle::new(vec![0.0], vec![1.0]).unwrap().into()
    }

    #[test]
    fn containment_of_abs() {
        let net = abs_net();
        let holds = check_containment(&net, &unit(), &interval(-0.1, 1.0), &BnbOptions::default(), &mut |_| {})
            .unwrap();
        assert_eq!(holds.verdict, Containment::Holds);
        let broken = check_containment(&net, &unit(), &interval(-0.1, 0.9), &BnbOptions::default(), &mut |_| {})
            .unwrap();
        match broken.verdict {
            Containment::Violated { input, violation } => {
                assert!(violation > 0.0);
                assert!(input[0].abs() > 0.9);
            }
            other => panic!("expected violation, got {other:?}"),
        }
    }

    #[test]
    fn reachability_of_abs() {
        let net = abs_net();
        let r = check_reachability(&net, &unit(), &interval(0.7, 0.8), &BnbOptions::default(), &mut |_| {})
            .unwrap();
        match r.verdict {
            Reachability::Reachable { input, .. } => {
                let y = input[0].abs();
                assert!((0.7 - 1e-9..=0.8 + 1e-9).contains(&y));
            }
            other => panic!("expected reachable, got {other:?}"),
        }
        let r = check_reachability(&net, &unit(), &interval(-0.5, -0.1), &BnbOptions::default(), &mut |_| {})
            .unwrap();
        assert_eq!(r.verdict, Reachability::Unreachable);
        assert!(r.outcome.lower_bound > REACH_TOL);
    }
}
