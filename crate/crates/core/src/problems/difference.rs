//! Maximum output difference `max_{x∈X} ‖N₁(x) − N₂(x)‖_p` between two networks.
//!
//! Each cell is propagated through both networks independently and the two
//! output zonotopes are boxed, so the bound ignores that both images share `x`.

use crate::bnb::{solve_with_progress, BnbOptions, BranchProblem, Progress};
use crate::error::{check_dim, Result};
use crate::geometry::{max_hyperrect_distance, Norm};
use crate::network::FeedForwardNetwork;
use crate::propagation::propagate;
use crate::scalar::Scalar;

use super::{InputSet, Outcome, Sense};

#[derive(Debug, Clone)]
pub struct NetworkDifferenceProblem<T> {
    pub net1: FeedForwardNetwork<T>,
    pub net2: FeedForwardNetwork<T>,
    pub norm: Norm,
}

impl<T: Scalar> NetworkDifferenceProblem<T> {
    pub fn new(net1: FeedForwardNetwork<T>, net2: FeedForwardNetwork<T>, norm: Norm) -> Result<Self> {
        check_dim("second network input", net1.input_dim(), net2.input_dim())?;
        check_dim("second network output", net1.output_dim(), net2.output_dim())?;
        Ok(Self { net1, net2, norm })
    }
}

/// Minimizes the negated difference.
pub struct DifferenceBnb<'a, T> {
    problem: &'a NetworkDifferenceProblem<T>,
}

impl<'a, T: Scalar> DifferenceBnb<'a, T> {
    pub fn new(problem: &'a NetworkDifferenceProblem<T>) -> Self {
        Self { problem }
    }
}

impl<T: Scalar> BranchProblem<T> for DifferenceBnb<'_, T> {
    type Cell = InputSet<T>;
    type Witness = Vec<T>;

    fn split(&self, cell: &InputSet<T>) -> Result<Vec<InputSet<T>>> {
        cell.split()
    }

    fn lower_bound(&self, cell: &InputSet<T>) -> Result<T> {
        let z = cell.to_zonotope();
        let b1 = propagate(&self.problem.net1, &z)?.bounding_box();
        let b2 = propagate(&self.problem.net2, &z)?.bounding_box();
        Ok(-max_hyperrect_distance(&b1, &b2, self.problem.norm)?.value)
    }

    fn upper_bound(&self, cell: &InputSet<T>) -> Result<(T, Vec<T>)> {
        let x = cell.center().to_vec();
        let y1 = self.problem.net1.evaluate(&x)?;
        let y2 = self.problem.net2.evaluate(&x)?;
        Ok((-self.problem.norm.distance(&y1, &y2), x))
    }
}

pub fn max_network_difference<T: Scalar>(
    problem: &NetworkDifferenceProblem<T>,
    input: &InputSet<T>,
    opts: &BnbOptions<T>,
    progress: &mut dyn FnMut(&Progress<T>),
) -> Result<Outcome<T>> {
    check_dim("input set dimension", problem.net1.input_dim(), input.dim())?;
    let sol = solve_with_progress(&DifferenceBnb::new(problem), input.clone(), opts, progress)?;
    Ok(Outcome::from_solution(sol, Sense::Maximize))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Hyperrectangle;
    use crate::linalg::Matrix;

    fn small_net(out_bias: f64) -> FeedForwardNetwork<f64> {
        FeedForwardNetwork::from_parameters(vec![
            (Matrix::from_rows(&[vec![1.0, -0.5], vec![0.3, 0.8]], 2).unwrap(), vec![0.1, -0.2]),
            (Matrix::from_rows(&[vec![1.0, -1.0]], 2).unwrap(), vec![out_bias]),
        ])
        .unwrap()
    }

    fn input() -> InputSet<f64> {
        Hyperrectangle::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap().into()
    }

    #[test]
    fn identical_networks_differ_by_zero() {
        let p = NetworkDifferenceProblem::new(small_net(0.0), small_net(0.0), Norm::L1).unwrap();
        let out = max_network_difference(&p, &input(), &BnbOptions::with_gap(0.1), &mut |_| {}).unwrap();
        assert_eq!(out.value, 0.0);
        assert!(out.upper_bound <= 0.1);
    }

    #[test]
    fn constant_offset_is_exact() {
        let p = NetworkDifferenceProblem::new(small_net(0.0), small_net(1.0), Norm::L1).unwrap();
        let out = max_network_difference(&p, &input(), &BnbOptions::with_gap(0.1), &mut |_| {}).unwrap();
        assert!((out.value - 1.0).abs() < 1e-12);
        assert!(out.upper_bound >= 1.0 - 1e-12 && out.upper_bound <= 1.1);
    }
}
