//! Convex subproblem solvers over the generator box of a zonotope.

pub mod box_ls;
pub mod simplex;

pub use box_ls::{box_ls_lower_bound, box_ls_lower_bound_with, BoxLeastSquares};
pub use simplex::{simplex_lp, simplex_lp_with, LinearProgram, LpOptions, LpOutcome};

use crate::error::{check_dim, Error, Result};
use crate::geometry::{Polytope, Zonotope};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Analytic lower bound on `min_{z∈Z} max_i max(a_iᵀz − b_i, 0)`.
///
/// Each term `min_z (a_iᵀz − b_i)` is exact, and a max of minima never exceeds
/// the minimum of the max.
pub fn min_violation_quick<T: Scalar>(z: &Zonotope<T>, polytope: &Polytope<T>) -> Result<T> {
    check_dim("polytope dimension", z.dim(), polytope.dim())?;
    let mut lb = T::zero();
    for i in 0..polytope.num_constraints() {
        lb = lb.max(z.support_min(polytope.a().row(i), -polytope.b()[i])?);
    }
    Ok(lb)
}

/// Exact `min_{z∈Z} max_i max(a_iᵀz − b_i, 0)` by LP over `(x, t)`:
/// minimize `t` with `a_iᵀ(G·x + c) − b_i ≤ t`, `t ≥ 0`, `x ∈ [-1,1]^k`.
pub fn min_violation_exact<T: Scalar>(z: &Zonotope<T>, polytope: &Polytope<T>) -> Result<T> {
    check_dim("polytope dimension", z.dim(), polytope.dim())?;
    let k = z.num_generators();
    let m = polytope.num_constraints();
    // Rows: (a_iᵀG) x − t ≤ b_i − a_iᵀc.
    let ag = polytope.a().matmul(z.generators())?;
    let ac = polytope.a().mul_vec(z.center())?;
    let mut constraints = Matrix::zeros(m, k + 1);
    let mut rhs = Vec::with_capacity(m);
    for i in 0..m {
        constraints.row_mut(i)[..k].copy_from_slice(ag.row(i));
        constraints[(i, k)] = -T::one();
        rhs.push(polytope.b()[i] - ac[i]);
    }
    let mut objective = vec![T::zero(); k + 1];
    objective[k] = T::one();
    let mut lower = vec![-T::one(); k + 1];
    let mut upper = vec![T::one(); k + 1];
    lower[k] = T::zero();
    upper[k] = T::infinity();
    let lp = LinearProgram::new(objective, constraints, rhs, lower, upper)?;
    match simplex_lp(&lp)? {
        LpOutcome::Optimal { value, .. } => Ok(value.max(T::zero())),
        other => Err(Error::SolverFailure(format!(
            "violation LP is always feasible and bounded, got {other:?}"
        ))),
    }
}

/// Exact `min_{z∈Z} ‖z − y₀‖₁` by LP over `(x, s)`:
/// minimize `Σ s_i` with `|G_i·x + c_i − y₀_i| ≤ s_i`, `x ∈ [-1,1]^k`.
pub fn min_l1_distance<T: Scalar>(z: &Zonotope<T>, target: &[T]) -> Result<T> {
    check_dim("distance target", z.dim(), target.len())?;
    let n = z.dim();
    let k = z.num_generators();
    let mut constraints = Matrix::zeros(2 * n, k + n);
    let mut rhs = Vec::with_capacity(2 * n);
    for i in 0..n {
        let d = target[i] - z.center()[i];
        let g = z.generators().row(i);
        constraints.row_mut(2 * i)[..k].copy_from_slice(g);
        constraints[(2 * i, k + i)] = -T::one();
        rhs.push(d);
        for (dst, &v) in constraints.row_mut(2 * i + 1)[..k].iter_mut().zip(g) {
            *dst = -v;
        }
        constraints[(2 * i + 1, k + i)] = -T::one();
        rhs.push(-d);
    }
    let mut objective = vec![T::zero(); k + n];
    let mut lower = vec![-T::one(); k + n];
    let mut upper = vec![T::one(); k + n];
    for j in k..k + n {
        objective[j] = T::one();
        lower[j] = T::zero();
        upper[j] = T::infinity();
    }
    let lp = LinearProgram::new(objective, constraints, rhs, lower, upper)?;
    match simplex_lp(&lp)? {
        LpOutcome::Optimal { value, .. } => Ok(value.max(T::zero())),
        other => Err(Error::SolverFailure(format!(
            "l1 distance LP is always feasible and bounded, got {other:?}"
        ))),
    }
}

/// Returns `(quick lower bound, exact minimum)` of the polytope violation over `Z`.
pub fn min_polytope_violation<T: Scalar>(z: &Zonotope<T>, polytope: &Polytope<T>) -> Result<(T, T)> {
    let quick = min_violation_quick(z, polytope)?;
    let exact = min_violation_exact(z, polytope)?;
    Ok((quick, exact))
}

/// Exact `max_{z∈Z} max_i max(a_iᵀz − b_i, 0)`: maxima commute, and each inner
/// maximum is a support-function evaluation.
pub fn max_polytope_violation<T: Scalar>(z: &Zonotope<T>, polytope: &Polytope<T>) -> Result<T> {
    check_dim("polytope dimension", z.dim(), polytope.dim())?;
    let mut v = T::zero();
    for i in 0..polytope.num_constraints() {
        v = v.max(z.support_max(polytope.a().row(i), -polytope.b()[i])?);
    }
    Ok(v)
}
