//! Zonotopes, hyperrectangles and polytopes.
//!
//! A zonotope is the affine image of the unit box, `{ G·x + c : x ∈ [-1, 1]^k }`.
//! Everything the solver needs from it (support values, splitting, bounding boxes,
//! Minkowski sums) is available in closed form; only membership requires an LP.

use crate::error::{check_dim, Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{dot, Scalar};
use crate::subsolvers::simplex::{simplex_lp, LinearProgram, LpOutcome};

/// Norm order `p ≥ 1` or `∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Norm {
    L1,
    L2,
    LInf,
    P(f64),
}

impl Norm {
    pub fn new(p: f64) -> Result<Self> {
        if p == f64::INFINITY {
            Ok(Norm::LInf)
        } else if p == 1.0 {
            Ok(Norm::L1)
        } else if p == 2.0 {
            Ok(Norm::L2)
        } else if p > 1.0 && p.is_finite() {
            Ok(Norm::P(p))
        } else {
            Err(Error::invalid(format!("norm order must be >= 1, got {p}")))
        }
    }

    pub fn order(self) -> f64 {
        match self {
            Norm::L1 => 1.0,
            Norm::L2 => 2.0,
            Norm::LInf => f64::INFINITY,
            Norm::P(p) => p,
        }
    }

    pub fn eval<T: Scalar>(self, v: &[T]) -> T {
        match self {
            Norm::L1 => v.iter().map(|x| x.abs()).sum(),
            Norm::L2 => v.iter().map(|&x| x * x).sum::<T>().sqrt(),
            Norm::LInf => v.iter().fold(T::zero(), |acc, x| acc.max(x.abs())),
            Norm::P(p) => {
                let p = T::lit(p);
                v.iter().map(|x| x.abs().powf(p)).sum::<T>().powf(T::one() / p)
            }
        }
    }

    pub fn distance<T: Scalar>(self, a: &[T], b: &[T]) -> T {
        let diff: Vec<T> = a.iter().zip(b).map(|(&x, &y)| x - y).collect();
        self.eval(&diff)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Zonotope<T> {
    center: Vec<T>,
    generators: Matrix<T>,
}

impl<T: Scalar> Zonotope<T> {
    pub fn new(center: Vec<T>, generators: Matrix<T>) -> Result<Self> {
        check_dim("zonotope generator rows", center.len(), generators.nrows())?;
        Ok(Self { center, generators })
    }

    pub fn point(center: Vec<T>) -> Self {
        let n = center.len();
        Self {
            center,
            generators: Matrix::zeros(n, 0),
        }
    }

    pub fn center(&self) -> &[T] {
        &self.center
    }

    pub fn generators(&self) -> &Matrix<T> {
        &self.generators
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn num_generators(&self) -> usize {
        self.generators.ncols()
    }

    /// Maps generator coordinates `x ∈ [-1,1]^k` to the point `G·x + c`.
    pub fn point_at(&self, coords: &[T]) -> Result<Vec<T>> {
        let mut p = self.generators.mul_vec(coords)?;
        for (v, &c) in p.iter_mut().zip(&self.center) {
            *v += c;
        }
        Ok(p)
    }

    /// `max { aᵀz + offset : z ∈ Z } = cᵀa + ‖Gᵀa‖₁ + offset`.
    pub fn support_max(&self, direction: &[T], offset: T) -> Result<T> {
        check_dim("support direction", self.dim(), direction.len())?;
        let spread: T = self.generators.tr_mul_vec(direction)?.iter().map(|v| v.abs()).sum();
        Ok(dot(&self.center, direction) + spread + offset)
    }

    /// `min { aᵀz + offset : z ∈ Z } = cᵀa − ‖Gᵀa‖₁ + offset`.
    pub fn support_min(&self, direction: &[T], offset: T) -> Result<T> {
        check_dim("support direction", self.dim(), direction.len())?;
        let spread: T = self.generators.tr_mul_vec(direction)?.iter().map(|v| v.abs()).sum();
        Ok(dot(&self.center, direction) - spread + offset)
    }

    /// Halves the generator of largest ℓ₂ norm (lowest index on ties).
    pub fn split(&self) -> Result<(Self, Self)> {
        if self.num_generators() == 0 {
            return Err(Error::DegenerateSplit("zonotope has no generators"));
        }
        let mut best = 0;
        let mut best_norm = self.generators.column_norm2(0);
        for j in 1..self.num_generators() {
            let norm = self.generators.column_norm2(j);
            if norm > best_norm {
                best = j;
                best_norm = norm;
            }
        }
        if !(best_norm > T::zero()) {
            return Err(Error::DegenerateSplit("all generators are zero"));
        }
        let half = T::lit(0.5);
        let mut generators = self.generators.clone();
        let mut lo = self.center.clone();
        let mut hi = self.center.clone();
        for i in 0..self.dim() {
            let g = generators[(i, best)] * half;
            generators[(i, best)] = g;
            lo[i] -= g;
            hi[i] += g;
        }
        Ok((
            Self {
                center: lo,
                generators: generators.clone(),
            },
            Self {
                center: hi,
                generators,
            },
        ))
    }

    pub fn bounding_box(&self) -> Hyperrectangle<T> {
        let radius = (0..self.dim())
            .map(|i| self.generators.row(i).iter().map(|v| v.abs()).sum())
            .collect();
        Hyperrectangle {
            center: self.center.clone(),
            radius,
        }
    }

    pub fn minkowski_sum(&self, other: &Self) -> Result<Self> {
        check_dim("Minkowski sum", self.dim(), other.dim())?;
        Ok(Self {
            center: self
                .center
                .iter()
                .zip(&other.center)
                .map(|(&a, &b)| a + b)
                .collect(),
            generators: self.generators.hcat(&other.generators)?,
        })
    }

    /// Same set with zero generators dropped and parallel generators summed
    /// (`g` and `αg` span `±(1+|α|)g`). Parallel means equal up to rounding.
    pub fn merge_parallel_generators(&self) -> Self {
        let n = self.dim();
        let eps = T::epsilon() * T::lit(8.0);
        let inf_norm = |v: &[T]| v.iter().fold(T::zero(), |m, x| m.max(x.abs()));
        let mut merged: Vec<Vec<T>> = Vec::new();
        for j in 0..self.num_generators() {
            let g: Vec<T> = self.generators.column(j).collect();
            let gn = inf_norm(&g);
            if gn == T::zero() {
                continue;
            }
            let parallel = merged.iter().position(|m| {
                let tol = eps * inf_norm(m) * gn;
                (0..n).all(|a| (a + 1..n).all(|b| (m[a] * g[b] - m[b] * g[a]).abs() <= tol))
            });
            match parallel {
                Some(i) => {
                    let sign = dot(&merged[i], &g).sign_nonneg();
                    for (m, &v) in merged[i].iter_mut().zip(&g) {
                        *m += sign * v;
                    }
                }
                None => merged.push(g),
            }
        }
        Self {
            center: self.center.clone(),
            generators: Matrix::from_columns(n, &merged).expect("columns have the zonotope's dimension"),
        }
    }

    pub fn translate(&self, offset: &[T]) -> Result<Self> {
        check_dim("translation", self.dim(), offset.len())?;
        Ok(Self {
            center: self.center.iter().zip(offset).map(|(&c, &o)| c + o).collect(),
            generators: self.generators.clone(),
        })
    }

    pub fn scale_generators(&self, s: T) -> Self {
        Self {
            center: self.center.clone(),
            generators: self.generators.scale(s),
        }
    }

    /// Smallest `‖G·x + c − p‖_∞` over the generator box, solved as an LP.
    pub fn linf_residual(&self, p: &[T]) -> Result<T> {
        check_dim("membership point", self.dim(), p.len())?;
        let n = self.dim();
        let k = self.num_generators();
        if k == 0 {
            return Ok(Norm::LInf.distance(&self.center, p));
        }
        // Variables (x_1..x_k, t); rows ±(G x − d) − t ≤ ∓... with d = p − c.
        let mut constraints = Matrix::zeros(2 * n, k + 1);
        let mut rhs = Vec::with_capacity(2 * n);
        for i in 0..n {
            let d = p[i] - self.center[i];
            for j in 0..k {
                let g = self.generators[(i, j)];
                constraints[(2 * i, j)] = g;
                constraints[(2 * i + 1, j)] = -g;
            }
            constraints[(2 * i, k)] = -T::one();
            constraints[(2 * i + 1, k)] = -T::one();
            rhs.push(d);
            rhs.push(-d);
        }
        let mut objective = vec![T::zero(); k + 1];
        objective[k] = T::one();
        let mut lower = vec![-T::one(); k + 1];
        let mut upper = vec![T::one(); k + 1];
        lower[k] = T::zero();
        upper[k] = T::infinity();
        let lp = LinearProgram::new(objective, constraints, rhs, lower, upper)?;
        match simplex_lp(&lp)? {
            LpOutcome::Optimal { value, .. } => Ok(value),
            other => Err(Error::SolverFailure(format!(
                "membership LP should be feasible and bounded, got {other:?}"
            ))),
        }
    }

    /// `∃ x ∈ [-1,1]^k : ‖G·x + c − p‖_∞ ≤ tol`.
    pub fn contains(&self, p: &[T], tol: T) -> Result<bool> {
        Ok(self.linf_residual(p)? <= tol)
    }

    pub fn cast<U: Scalar>(&self) -> Zonotope<U> {
        Zonotope {
            center: self.center.iter().map(|&v| U::lit(v.to_f64_lossy())).collect(),
            generators: self.generators.cast(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hyperrectangle<T> {
    center: Vec<T>,
    radius: Vec<T>,
}

impl<T: Scalar> Hyperrectangle<T> {
    pub fn new(center: Vec<T>, radius: Vec<T>) -> Result<Self> {
        check_dim("hyperrectangle radius", center.len(), radius.len())?;
        if let Some(r) = radius.iter().find(|r| !(**r >= T::zero()) || !r.is_finite()) {
            return Err(Error::invalid(format!("radius entries must be finite and >= 0, got {r}")));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("hyperrectangle center must be finite"));
        }
        Ok(Self { center, radius })
    }

    pub fn from_bounds(low: &[T], high: &[T]) -> Result<Self> {
        check_dim("hyperrectangle bounds", low.len(), high.len())?;
        let half = T::lit(0.5);
        let center = low.iter().zip(high).map(|(&l, &h)| (l + h) * half).collect();
        let radius = low.iter().zip(high).map(|(&l, &h)| (h - l) * half).collect();
        Self::new(center, radius)
    }

    pub fn center(&self) -> &[T] {
        &self.center
    }

    pub fn radius(&self) -> &[T] {
        &self.radius
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn low(&self) -> Vec<T> {
        self.center.iter().zip(&self.radius).map(|(&c, &r)| c - r).collect()
    }

    pub fn high(&self) -> Vec<T> {
        self.center.iter().zip(&self.radius).map(|(&c, &r)| c + r).collect()
    }

    pub fn volume(&self) -> T {
        self.radius.iter().map(|&r| r + r).fold(T::one(), |a, b| a * b)
    }

    pub fn contains(&self, p: &[T], tol: T) -> bool {
        p.len() == self.dim()
            && p
                .iter()
                .zip(self.center.iter().zip(&self.radius))
                .all(|(&x, (&c, &r))| (x - c).abs() <= r + tol)
    }

    pub fn to_zonotope(&self) -> Zonotope<T> {
        Zonotope {
            center: self.center.clone(),
            generators: Matrix::from_diagonal(&self.radius),
        }
    }

    /// Halves the dimension of largest radius (lowest index on ties).
    pub fn split(&self) -> Result<(Self, Self)> {
        let mut best = None;
        for (i, &r) in self.radius.iter().enumerate() {
            if r > T::zero() && best.map_or(true, |b: usize| r > self.radius[b]) {
                best = Some(i);
            }
        }
        let Some(i) = best else {
            return Err(Error::DegenerateSplit("all radii are zero"));
        };
        let half = self.radius[i] * T::lit(0.5);
        let mut lo = self.clone();
        let mut hi = self.clone();
        lo.radius[i] = half;
        hi.radius[i] = half;
        lo.center[i] = self.center[i] - half;
        hi.center[i] = self.center[i] + half;
        Ok((lo, hi))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Polytope<T> {
    a: Matrix<T>,
    b: Vec<T>,
}

impl<T: Scalar> Polytope<T> {
    /// `{ x | A·x ≤ b }` with at least one constraint.
    pub fn new(a: Matrix<T>, b: Vec<T>) -> Result<Self> {
        check_dim("polytope right-hand side", a.nrows(), b.len())?;
        if b.is_empty() {
            return Err(Error::invalid("polytope needs at least one constraint"));
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> &Matrix<T> {
        &self.a
    }

    pub fn b(&self) -> &[T] {
        &self.b
    }

    pub fn dim(&self) -> usize {
        self.a.ncols()
    }

    pub fn num_constraints(&self) -> usize {
        self.b.len()
    }

    /// `max_i max(a_iᵀy − b_i, 0)`.
    pub fn violation(&self, y: &[T]) -> T {
        (0..self.num_constraints())
            .map(|i| dot(self.a.row(i), y) - self.b[i])
            .fold(T::zero(), T::max)
    }
}

/// Analytic maximum of `‖h₁ − h₂‖_p` over two boxes, with the maximizing corners.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDistance<T> {
    pub value: T,
    pub h1: Vec<T>,
    pub h2: Vec<T>,
}

pub fn max_hyperrect_distance<T: Scalar>(
    h1: &Hyperrectangle<T>,
    h2: &Hyperrectangle<T>,
    norm: Norm,
) -> Result<BoxDistance<T>> {
    check_dim("hyperrectangle distance", h1.dim(), h2.dim())?;
    let mut p1 = Vec::with_capacity(h1.dim());
    let mut p2 = Vec::with_capacity(h1.dim());
    for i in 0..h1.dim() {
        let (c1, c2) = (h1.center[i], h2.center[i]);
        // One shared sign: with equal centers the corners must still be opposite.
        let s = (c1 - c2).sign_nonneg();
        p1.push(c1 + s * h1.radius[i]);
        p2.push(c2 - s * h2.radius[i]);
    }
    Ok(BoxDistance {
        value: norm.distance(&p1, &p2),
        h1: p1,
        h2: p2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zono(center: Vec<f64>, rows: &[Vec<f64>], ngen: usize) -> Zonotope<f64> {
        Zonotope::new(center, Matrix::from_rows(rows, ngen).unwrap()).unwrap()
    }

    #[test]
    fn support_examples() {
        let z = zono(vec![1.0, 2.0], &[vec![1.0, 0.0], vec![0.0, 1.0]], 2);
        assert_eq!(z.support_max(&[1.0, 0.0], 0.0).unwrap(), 2.0);
        assert_eq!(z.support_min(&[1.0, 0.0], 0.0).unwrap(), 0.0);
        let z = zono(vec![0.0], &[vec![3.0, -1.0]], 2);
        assert_eq!(z.support_max(&[2.0], 1.0).unwrap(), 9.0);
        assert!(matches!(
            z.support_max(&[1.0, 1.0], 0.0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn zonotope_split_examples() {
        let z = zono(vec![0.0, 0.0], &[vec![2.0, 0.0], vec![0.0, 1.0]], 2);
        let (a, b) = z.split().unwrap();
        assert_eq!(a, zono(vec![-1.0, 0.0], &[vec![1.0, 0.0], vec![0.0, 1.0]], 2));
        assert_eq!(b, zono(vec![1.0, 0.0], &[vec![1.0, 0.0], vec![0.0, 1.0]], 2));

        let (a, b) = zono(vec![5.0], &[vec![2.0]], 1).split().unwrap();
        assert_eq!(a, zono(vec![4.0], &[vec![1.0]], 1));
        assert_eq!(b, zono(vec![6.0], &[vec![1.0]], 1));
    }

    #[test]
    fn zonotope_split_ties_take_lowest_index() {
        let z = zono(vec![0.0, 0.0], &[vec![1.0, 0.0], vec![0.0, 1.0]], 2);
        let (a, _) = z.split().unwrap();
        assert_eq!(a.center(), &[-0.5, 0.0]);
    }

    #[test]
    fn degenerate_splits() {
        assert!(matches!(Zonotope::point(vec![1.0]).split(), Err(Error::DegenerateSplit(_))));
        assert!(matches!(
            zono(vec![1.0], &[vec![0.0, 0.0]], 2).split(),
            Err(Error::DegenerateSplit(_))
        ));
        let h = Hyperrectangle::new(vec![0.0, 1.0], vec![0.0, 0.0]).unwrap();
        assert!(matches!(h.split(), Err(Error::DegenerateSplit(_))));
    }

    #[test]
    fn hyperrectangle_split_examples() {
        let h = Hyperrectangle::new(vec![0.0, 0.0], vec![2.0, 1.0]).unwrap();
        let (a, b) = h.split().unwrap();
        assert_eq!(a, Hyperrectangle::new(vec![-1.0, 0.0], vec![1.0, 1.0]).unwrap());
        assert_eq!(b, Hyperrectangle::new(vec![1.0, 0.0], vec![1.0, 1.0]).unwrap());
        let (a, b) = Hyperrectangle::new(vec![3.0], vec![4.0]).unwrap().split().unwrap();
        assert_eq!(a, Hyperrectangle::new(vec![1.0], vec![2.0]).unwrap());
        assert_eq!(b, Hyperrectangle::new(vec![5.0], vec![2.0]).unwrap());
    }

    #[test]
    fn negative_radius_rejected() {
        assert!(Hyperrectangle::new(vec![0.0], vec![-1.0]).is_err());
    }

    #[test]
    fn bounding_box_examples() {
        let h = zono(vec![0.0], &[vec![1.0, 2.0]], 2).bounding_box();
        assert_eq!(h, Hyperrectangle::new(vec![0.0], vec![3.0]).unwrap());
        let h = zono(vec![1.0, 1.0], &[vec![1.0, 0.0], vec![0.0, 0.5]], 2).bounding_box();
        assert_eq!(h, Hyperrectangle::new(vec![1.0, 1.0], vec![1.0, 0.5]).unwrap());
    }

    #[test]
    fn hyperrectangle_roundtrip_through_zonotope() {
        let h = Hyperrectangle::new(vec![1.0, -2.0], vec![0.5, 3.0]).unwrap();
        assert_eq!(h.to_zonotope().bounding_box(), h);
    }

    #[test]
    fn merging_parallel_generators_keeps_the_set() {
        let z = zono(vec![1.0, 0.0], &[vec![1.0, -2.0, 0.0, 1.0], vec![1.0, -2.0, 0.0, 0.0]], 4);
        let m = z.merge_parallel_generators();
        assert_eq!(m.num_generators(), 2);
        assert_eq!(m.generators().column(0).collect::<Vec<_>>(), vec![3.0, 3.0]);
        for a in [[1.0, 0.0], [0.3, -0.7], [-1.0, 2.0]] {
            assert!((m.support_max(&a, 0.0).unwrap() - z.support_max(&a, 0.0).unwrap()).abs() < 1e-12);
        }
        let line = zono(vec![0.0], &[vec![0.5, -0.25, 0.0]], 3).merge_parallel_generators();
        assert_eq!(line.generators().as_slice(), &[0.75]);
    }

    #[test]
    fn minkowski_examples() {
        let s = zono(vec![1.0], &[vec![1.0]], 1)
            .minkowski_sum(&zono(vec![2.0], &[vec![0.5]], 1))
            .unwrap();
        assert_eq!(s, zono(vec![3.0], &[vec![1.0, 0.5]], 2));
        let z = zono(vec![1.0, 2.0], &[vec![1.0], vec![3.0]], 1);
        assert_eq!(z.minkowski_sum(&Zonotope::point(vec![0.0, 0.0])).unwrap(), z);
        assert!(z.minkowski_sum(&Zonotope::point(vec![0.0])).is_err());
    }

    #[test]
    fn membership_examples() {
        let z = zono(vec![0.0], &[vec![1.0]], 1);
        assert!(z.contains(&[0.5], 0.0).unwrap());
        assert!(!z.contains(&[1.5], 1e-9).unwrap());
        assert!(Zonotope::point(vec![2.0]).contains(&[2.0], 0.0).unwrap());
    }

    #[test]
    fn box_distance_examples() {
        let h1 = Hyperrectangle::new(vec![0.0], vec![1.0]).unwrap();
        let h2 = Hyperrectangle::new(vec![3.0], vec![1.0]).unwrap();
        let d = max_hyperrect_distance(&h1, &h2, Norm::L2).unwrap();
        assert_eq!(d, BoxDistance { value: 5.0, h1: vec![-1.0], h2: vec![4.0] });

        let h = Hyperrectangle::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let d = max_hyperrect_distance(&h, &h, Norm::LInf).unwrap();
        assert_eq!(d, BoxDistance { value: 2.0, h1: vec![1.0, 1.0], h2: vec![-1.0, -1.0] });
    }

    #[test]
    fn norms() {
        let v = [3.0, -4.0];
        assert_eq!(Norm::L1.eval(&v), 7.0);
        assert_eq!(Norm::L2.eval(&v), 5.0);
        assert_eq!(Norm::LInf.eval(&v), 4.0);
        assert!((Norm::P(3.0).eval(&v) - 91f64.powf(1.0 / 3.0)).abs() < 1e-12);
        assert!(Norm::new(0.5).is_err());
        assert_eq!(Norm::new(f64::INFINITY).unwrap(), Norm::LInf);
    }

    #[test]
    fn polytope_violation() {
        let p = Polytope::new(Matrix::from_rows(&[vec![1.0], vec![-1.0]], 1).unwrap(), vec![1.0, 0.0]).unwrap();
        assert_eq!(p.violation(&[3.0]), 2.0);
        assert_eq!(p.violation(&[0.5]), 0.0);
        assert!(Polytope::<f64>::new(Matrix::zeros(0, 1), vec![]).is_err());
    }
}
