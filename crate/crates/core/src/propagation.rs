//! Zonotope abstract transformers for affine and ReLU layers.
//!
//! Affine maps are exact. The ReLU transformer uses the minimal-area parallel
//! relaxation: a neuron with pre-activation bounds `l < 0 < u` is replaced by
//! `λ·z + μ + μ·ε_new` with `λ = u/(u−l)` and `μ = −λ·l/2`.

use crate::error::{check_dim, Result};
use crate::geometry::Zonotope;
use crate::linalg::Matrix;
use crate::network::{Activation, FeedForwardNetwork};
use crate::scalar::Scalar;

/// Pre-activation bounds for every layer, taken from the propagated zonotope rows.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuronBounds<T> {
    pub lower: Vec<Vec<T>>,
    pub upper: Vec<Vec<T>>,
}

impl<T: Scalar> NeuronBounds<T> {
    pub fn unstable_count(&self) -> usize {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| l.iter().zip(u).filter(|(&l, &u)| l < T::zero() && u > T::zero()).count())
            .sum()
    }
}

pub fn affine_transform<T: Scalar>(z: &Zonotope<T>, weights: &Matrix<T>, bias: &[T]) -> Result<Zonotope<T>> {
    check_dim("affine transform input", weights.ncols(), z.dim())?;
    check_dim("affine transform bias", weights.nrows(), bias.len())?;
    let mut center = weights.mul_vec(z.center())?;
    for (c, &b) in center.iter_mut().zip(bias) {
        *c += b;
    }
    Zonotope::new(center, weights.matmul(z.generators())?)
}

pub fn relu_transform<T: Scalar>(z: &Zonotope<T>) -> Zonotope<T> {
    relu_transform_with_bounds(z).0
}

fn relu_transform_with_bounds<T: Scalar>(z: &Zonotope<T>) -> (Zonotope<T>, Vec<T>, Vec<T>) {
    let n = z.dim();
    let k = z.num_generators();
    let bbox = z.bounding_box();
    let lower = bbox.low();
    let upper = bbox.high();

    let unstable: Vec<usize> = (0..n)
        .filter(|&i| lower[i] < T::zero() && upper[i] > T::zero())
        .collect();
    let mut center = z.center().to_vec();
    let mut generators = Matrix::zeros(n, k + unstable.len());
    for i in 0..n {
        let (l, u) = (lower[i], upper[i]);
        let src = z.generators().row(i);
        let dst = &mut generators.row_mut(i)[..k];
        if u <= T::zero() {
            center[i] = T::zero();
        } else if l >= T::zero() {
            dst.copy_from_slice(src);
        }
    }
    let half = T::lit(0.5);
    for (fresh, &i) in unstable.iter().enumerate() {
        let (l, u) = (lower[i], upper[i]);
        let lambda = u / (u - l);
        let mu = -lambda * l * half;
        center[i] = lambda * center[i] + mu;
        let src = z.generators().row(i).to_vec();
        let dst = generators.row_mut(i);
        for (d, s) in dst[..k].iter_mut().zip(src) {
            *d = lambda * s;
        }
        dst[k + fresh] = mu;
    }
    let out = Zonotope::new(center, generators).expect("row count preserved");
    (out, lower, upper)
}

pub fn propagate<T: Scalar>(net: &FeedForwardNetwork<T>, input: &Zonotope<T>) -> Result<Zonotope<T>> {
    Ok(propagate_with_bounds(net, input)?.0)
}

/// Propagation with a caller-supplied ReLU transformer, for testing alternatives.
pub fn propagate_with<T, F>(net: &FeedForwardNetwork<T>, input: &Zonotope<T>, relu: F) -> Result<Zonotope<T>>
where
    T: Scalar,
    F: Fn(&Zonotope<T>) -> Zonotope<T>,
{
    check_dim("propagation input", net.input_dim(), input.dim())?;
    let mut z = input.clone();
    for layer in net.layers() {
        z = affine_transform(&z, &layer.weights, &layer.bias)?;
        if layer.activation == Activation::Relu {
            z = relu(&z);
        }
    }
    Ok(z)
}

pub fn propagate_with_bounds<T: Scalar>(
    net: &FeedForwardNetwork<T>,
    input: &Zonotope<T>,
) -> Result<(Zonotope<T>, NeuronBounds<T>)> {
    check_dim("propagation input", net.input_dim(), input.dim())?;
    let mut bounds = NeuronBounds {
        lower: Vec::with_capacity(net.layers().len()),
        upper: Vec::with_capacity(net.layers().len()),
    };
    let mut z = input.clone();
    for layer in net.layers() {
        z = affine_transform(&z, &layer.weights, &layer.bias)?;
        match layer.activation {
            Activation::Relu => {
                let (next, l, u) = relu_transform_with_bounds(&z);
                bounds.lower.push(l);
                bounds.upper.push(u);
                z = next;
            }
            Activation::Identity => {
                let bbox = z.bounding_box();
                bounds.lower.push(bbox.low());
                bounds.upper.push(bbox.high());
            }
        }
    }
    Ok((z, bounds))
}
