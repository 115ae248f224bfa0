//! Dense bounded-variable primal simplex with Bland's pivoting rule.
//!
//! Problems have the form
//!
//! ```text
//! minimize    cᵀx
//! subject to  A x ≤ b
//!             l ≤ x ≤ u      (l may be -inf, u may be +inf)
//! ```
//!
//! Every row receives a slack; rows whose initial residual is negative get an
//! artificial variable and a phase-one objective. Variable bounds are handled
//! implicitly (nonbasic variables sit at a bound), so box-constrained generator
//! coordinates do not add rows. The tableau is rebuilt from the original data
//! with a partial-pivoting factorization every `refactor_interval` pivots.

use crate::error::{check_dim, Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram<T> {
    pub objective: Vec<T>,
    pub constraints: Matrix<T>,
    pub rhs: Vec<T>,
    pub lower: Vec<T>,
    pub upper: Vec<T>,
}

impl<T: Scalar> LinearProgram<T> {
    pub fn new(
        objective: Vec<T>,
        constraints: Matrix<T>,
        rhs: Vec<T>,
        lower: Vec<T>,
        upper: Vec<T>,
    ) -> Result<Self> {
        let n = objective.len();
        check_dim("LP constraint columns", n, constraints.ncols())?;
        check_dim("LP right-hand side", constraints.nrows(), rhs.len())?;
        check_dim("LP lower bounds", n, lower.len())?;
        check_dim("LP upper bounds", n, upper.len())?;
        if !objective.iter().all(|v| v.is_finite())
            || !constraints.is_finite()
            || !rhs.iter().all(|v| v.is_finite())
        {
            return Err(Error::invalid("LP data must be finite"));
        }
        for (j, (&l, &u)) in lower.iter().zip(&upper).enumerate() {
            if l.is_nan() || u.is_nan() || l > u || l == T::infinity() || u == T::neg_infinity() {
                return Err(Error::invalid(format!(
                    "variable {j} has inconsistent bounds [{l}, {u}]"
                )));
            }
        }
        Ok(Self {
            objective,
            constraints,
            rhs,
            lower,
            upper,
        })
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LpOptions<T> {
    pub feasibility_tol: T,
    pub optimality_tol: T,
    pub refactor_interval: usize,
}

impl<T: Scalar> Default for LpOptions<T> {
    fn default() -> Self {
        let floor = T::epsilon() * T::lit(16.0);
        let tol = T::lit(1e-8).max(floor);
        Self {
            feasibility_tol: tol,
            optimality_tol: tol,
            refactor_interval: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome<T> {
    Optimal { value: T, point: Vec<T> },
    Infeasible,
    Unbounded,
}

impl<T: Scalar> LpOutcome<T> {
    pub fn optimal_value(&self) -> Option<T> {
        match self {
            LpOutcome::Optimal { value, .. } => Some(*value),
            _ => None,
        }
    }
}

pub fn simplex_lp<T: Scalar>(lp: &LinearProgram<T>) -> Result<LpOutcome<T>> {
    simplex_lp_with(lp, &LpOptions::default())
}

pub fn simplex_lp_with<T: Scalar>(lp: &LinearProgram<T>, opts: &LpOptions<T>) -> Result<LpOutcome<T>> {
    let mut tableau = Tableau::build(lp, opts);
    if tableau.num_artificial > 0 {
        let cost: Vec<T> = (0..tableau.ncols)
            .map(|k| if tableau.is_artificial(k) { T::one() } else { T::zero() })
            .collect();
        tableau.set_cost(cost);
        if tableau.run()? == Phase::Unbounded {
            return Err(Error::SolverFailure("phase one reported unbounded".into()));
        }
        let infeasibility: T = (tableau.first_artificial..tableau.ncols)
            .map(|k| tableau.x[k])
            .sum();
        let scale = T::one() + lp.rhs.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
        if infeasibility > opts.feasibility_tol * scale {
            return Ok(LpOutcome::Infeasible);
        }
        for k in tableau.first_artificial..tableau.ncols {
            tableau.upper[k] = T::zero();
        }
    }

    let n = lp.num_vars();
    let mut cost = vec![T::zero(); tableau.ncols];
    cost[..n].copy_from_slice(&lp.objective);
    tableau.set_cost(cost);
    if tableau.run()? == Phase::Unbounded {
        return Ok(LpOutcome::Unbounded);
    }
    let point: Vec<T> = (0..n)
        .map(|j| tableau.x[j].max(lp.lower[j]).min(lp.upper[j]))
        .collect();
    let value = lp
        .objective
        .iter()
        .zip(&point)
        .map(|(&c, &x)| c * x)
        .sum();
    Ok(LpOutcome::Optimal { value, point })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarState {
    Basic,
    AtLower,
    AtUpper,
    FreeZero,
}

#[derive(Debug, PartialEq, Eq)]
enum Phase {
    Optimal,
    Unbounded,
}

struct Tableau<T> {
    m: usize,
    ncols: usize,
    first_artificial: usize,
    num_artificial: usize,
    /// Original column data `[A | I | -e_i ...]`, row-major m × ncols.
    full: Vec<T>,
    rhs: Vec<T>,
    /// `B⁻¹ · full`.
    tab: Vec<T>,
    basis: Vec<usize>,
    state: Vec<VarState>,
    x: Vec<T>,
    lower: Vec<T>,
    upper: Vec<T>,
    cost: Vec<T>,
    reduced: Vec<T>,
    pivots_since_refactor: usize,
    opts: LpOptions<T>,
    pivot_tol: T,
}

impl<T: Scalar> Tableau<T> {
    fn build(lp: &LinearProgram<T>, opts: &LpOptions<T>) -> Self {
        let n = lp.num_vars();
        let m = lp.rhs.len();

        let mut x = Vec::with_capacity(n + 2 * m);
        let mut state = Vec::with_capacity(n + 2 * m);
        for j in 0..n {
            let (l, u) = (lp.lower[j], lp.upper[j]);
            if l.is_finite() {
                x.push(l);
                state.push(VarState::AtLower);
            } else if u.is_finite() {
                x.push(u);
                state.push(VarState::AtUpper);
            } else {
                x.push(T::zero());
                state.push(VarState::FreeZero);
            }
        }
        let residual: Vec<T> = (0..m)
            .map(|i| {
                let row = lp.constraints.row(i);
                lp.rhs[i] - row.iter().zip(&x).map(|(&a, &v)| a * v).sum::<T>()
            })
            .collect();
        let needs_artificial: Vec<usize> = (0..m).filter(|&i| residual[i] < T::zero()).collect();
        let num_artificial = needs_artificial.len();
        let first_artificial = n + m;
        let ncols = n + m + num_artificial;

        let mut full = vec![T::zero(); m * ncols];
        for i in 0..m {
            let row = lp.constraints.row(i);
            full[i * ncols..i * ncols + n].copy_from_slice(row);
            full[i * ncols + n + i] = T::one();
        }
        let mut lower = lp.lower.clone();
        let mut upper = lp.upper.clone();
        lower.extend(std::iter::repeat(T::zero()).take(m + num_artificial));
        upper.extend(std::iter::repeat(T::infinity()).take(m + num_artificial));

        let mut basis = vec![0; m];
        x.extend(std::iter::repeat(T::zero()).take(m + num_artificial));
        state.extend(std::iter::repeat(VarState::AtLower).take(m + num_artificial));
        for i in 0..m {
            basis[i] = n + i;
        }
        for (k, &i) in needs_artificial.iter().enumerate() {
            let col = first_artificial + k;
            full[i * ncols + col] = -T::one();
            basis[i] = col;
        }
        for i in 0..m {
            let b = basis[i];
            state[b] = VarState::Basic;
            x[b] = residual[i].abs();
        }

        // The initial basis is diagonal with entries ±1.
        let mut tab = full.clone();
        for &i in &needs_artificial {
            for v in &mut tab[i * ncols..(i + 1) * ncols] {
                *v = -*v;
            }
        }

        Self {
            m,
            ncols,
            first_artificial,
            num_artificial,
            full,
            rhs: lp.rhs.clone(),
            tab,
            basis,
            state,
            x,
            lower,
            upper,
            cost: vec![T::zero(); ncols],
            reduced: vec![T::zero(); ncols],
            pivots_since_refactor: 0,
            opts: *opts,
            pivot_tol: T::epsilon().sqrt() * T::lit(0.1),
        }
    }

    fn is_artificial(&self, k: usize) -> bool {
        k >= self.first_artificial
    }

    fn set_cost(&mut self, cost: Vec<T>) {
        self.cost = cost;
        self.recompute_reduced_costs();
    }

    fn recompute_reduced_costs(&mut self) {
        let ncols = self.ncols;
        for k in 0..ncols {
            let mut d = self.cost[k];
            for i in 0..self.m {
                let cb = self.cost[self.basis[i]];
                if cb != T::zero() {
                    d -= cb * self.tab[i * ncols + k];
                }
            }
            self.reduced[k] = d;
        }
        for &b in &self.basis {
            self.reduced[b] = T::zero();
        }
    }

    fn run(&mut self) -> Result<Phase> {
        let cap = 10_000 + 200 * (self.m + self.ncols);
        for _ in 0..cap {
            if self.pivots_since_refactor >= self.opts.refactor_interval {
                self.refactor()?;
            }
            let Some((enter, dir)) = self.choose_entering() else {
                return Ok(Phase::Optimal);
            };
            if !self.step(enter, dir) {
                return Ok(Phase::Unbounded);
            }
        }
        Err(Error::SolverFailure(format!(
            "simplex exceeded {cap} iterations"
        )))
    }

    /// Bland: lowest-index nonbasic variable whose reduced cost improves the objective.
    fn choose_entering(&self) -> Option<(usize, T)> {
        let tol = self.opts.optimality_tol;
        for j in 0..self.ncols {
            if self.lower[j] == self.upper[j] {
                continue;
            }
            let d = self.reduced[j];
            match self.state[j] {
                VarState::Basic => {}
                VarState::AtLower if d < -tol => return Some((j, T::one())),
                VarState::AtUpper if d > tol => return Some((j, -T::one())),
                VarState::FreeZero if d < -tol => return Some((j, T::one())),
                VarState::FreeZero if d > tol => return Some((j, -T::one())),
                _ => {}
            }
        }
        None
    }

    /// Performs one ratio test and update. Returns `false` when the direction is unbounded.
    fn step(&mut self, enter: usize, dir: T) -> bool {
        let ncols = self.ncols;
        let span = self.upper[enter] - self.lower[enter];
        let mut theta = if span.is_finite() { span } else { T::infinity() };
        // `None` means the entering variable flips to its opposite bound.
        let mut leave: Option<(usize, bool)> = None;
        let mut leave_index = enter;

        for i in 0..self.m {
            let alpha = dir * self.tab[i * ncols + enter];
            let b = self.basis[i];
            let (ratio, to_upper) = if alpha > self.pivot_tol {
                if !self.lower[b].is_finite() {
                    continue;
                }
                ((self.x[b] - self.lower[b]).max(T::zero()) / alpha, false)
            } else if alpha < -self.pivot_tol {
                if !self.upper[b].is_finite() {
                    continue;
                }
                ((self.upper[b] - self.x[b]).max(T::zero()) / -alpha, true)
            } else {
                continue;
            };
            if ratio < theta || (ratio == theta && b < leave_index) {
                theta = ratio;
                leave = Some((i, to_upper));
                leave_index = b;
            }
        }

        if !theta.is_finite() {
            return false;
        }

        if theta > T::zero() {
            self.x[enter] += dir * theta;
            for i in 0..self.m {
                let a = self.tab[i * ncols + enter];
                if a != T::zero() {
                    let b = self.basis[i];
                    self.x[b] -= dir * theta * a;
                }
            }
        }

        match leave {
            None => {
                if dir > T::zero() {
                    self.state[enter] = VarState::AtUpper;
                    self.x[enter] = self.upper[enter];
                } else {
                    self.state[enter] = VarState::AtLower;
                    self.x[enter] = self.lower[enter];
                }
            }
            Some((row, to_upper)) => {
                let out = self.basis[row];
                if to_upper {
                    self.state[out] = VarState::AtUpper;
                    self.x[out] = self.upper[out];
                } else {
                    self.state[out] = VarState::AtLower;
                    self.x[out] = self.lower[out];
                }
                self.pivot(row, enter);
                self.basis[row] = enter;
                self.state[enter] = VarState::Basic;
                self.pivots_since_refactor += 1;
            }
        }
        true
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let ncols = self.ncols;
        let p = self.tab[row * ncols + col];
        let inv = T::one() / p;
        for v in &mut self.tab[row * ncols..(row + 1) * ncols] {
            *v *= inv;
        }
        self.tab[row * ncols + col] = T::one();
        let (before, rest) = self.tab.split_at_mut(row * ncols);
        let (pivot_row, after) = rest.split_at_mut(ncols);
        for other in before.chunks_mut(ncols).chain(after.chunks_mut(ncols)) {
            let f = other[col];
            if f != T::zero() {
                for (o, &pr) in other.iter_mut().zip(pivot_row.iter()) {
                    *o -= f * pr;
                }
                other[col] = T::zero();
            }
        }
        let f = self.reduced[col];
        if f != T::zero() {
            for (d, &pr) in self.reduced.iter_mut().zip(pivot_row.iter()) {
                *d -= f * pr;
            }
        }
        self.reduced[col] = T::zero();
    }

    /// Rebuilds `B⁻¹·full`, the basic values and reduced costs from the original data.
    fn refactor(&mut self) -> Result<()> {
        let m = self.m;
        let ncols = self.ncols;
        // Augmented [B | full | r] with r = b - N x_N.
        let width = m + ncols + 1;
        let mut aug = vec![T::zero(); m * width];
        for i in 0..m {
            for (k, &b) in self.basis.iter().enumerate() {
                aug[i * width + k] = self.full[i * ncols + b];
            }
            aug[i * width + m..i * width + m + ncols]
                .copy_from_slice(&self.full[i * ncols..(i + 1) * ncols]);
            let mut r = self.rhs[i];
            for k in 0..ncols {
                if self.state[k] != VarState::Basic {
                    r -= self.full[i * ncols + k] * self.x[k];
                }
            }
            aug[i * width + width - 1] = r;
        }

        let mut max_pivot = T::zero();
        let mut min_pivot = T::infinity();
        for c in 0..m {
            let (prow, pval) = (c..m)
                .map(|r| (r, aug[r * width + c].abs()))
                .fold((c, -T::one()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if !(pval > T::zero()) {
                return Err(Error::SolverFailure("singular basis during refactorization".into()));
            }
            max_pivot = max_pivot.max(pval);
            min_pivot = min_pivot.min(pval);
            if prow != c {
                for k in 0..width {
                    aug.swap(c * width + k, prow * width + k);
                }
            }
            let inv = T::one() / aug[c * width + c];
            for k in 0..width {
                aug[c * width + k] *= inv;
            }
            for r in 0..m {
                if r == c {
                    continue;
                }
                let f = aug[r * width + c];
                if f != T::zero() {
                    for k in 0..width {
                        let v = aug[c * width + k];
                        aug[r * width + k] -= f * v;
                    }
                }
            }
        }
        if m > 0 && max_pivot / min_pivot > T::lit(1e14).min(T::one() / T::epsilon()) {
            return Err(Error::SolverFailure(format!(
                "basis condition estimate {} exceeds limit",
                (max_pivot / min_pivot).to_f64_lossy()
            )));
        }

        for i in 0..m {
            self.tab[i * ncols..(i + 1) * ncols]
                .copy_from_slice(&aug[i * width + m..i * width + m + ncols]);
            self.x[self.basis[i]] = aug[i * width + width - 1];
        }
        self.recompute_reduced_costs();
        self.pivots_since_refactor = 0;
        Ok(())
    }
}
