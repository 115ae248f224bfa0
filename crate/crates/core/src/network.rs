//! Feedforward ReLU networks.

use crate::error::{check_dim, Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply<T: Scalar>(self, v: T) -> T {
        match self {
            // A pre-activation of exactly zero takes the nonnegative branch.
            Activation::Relu => {
                if v >= T::zero() {
                    v
                } else {
                    T::zero()
                }
            }
            Activation::Identity => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AffineLayer<T> {
    pub weights: Matrix<T>,
    pub bias: Vec<T>,
    pub activation: Activation,
}

impl<T: Scalar> AffineLayer<T> {
    pub fn new(weights: Matrix<T>, bias: Vec<T>, activation: Activation) -> Result<Self> {
        check_dim("layer bias", weights.nrows(), bias.len())?;
        if !weights.is_finite() || bias.iter().any(|b| !b.is_finite()) {
            return Err(Error::invalid("layer parameters must be finite"));
        }
        Ok(Self {
            weights,
            bias,
            activation,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn pre_activation(&self, x: &[T]) -> Result<Vec<T>> {
        let mut z = self.weights.mul_vec(x)?;
        for (v, &b) in z.iter_mut().zip(&self.bias) {
            *v += b;
        }
        Ok(z)
    }
}

/// Affine layers with ReLU on every hidden layer and an identity output layer.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedForwardNetwork<T> {
    layers: Vec<AffineLayer<T>>,
}

impl<T: Scalar> FeedForwardNetwork<T> {
    pub fn new(layers: Vec<AffineLayer<T>>) -> Result<Self> {
        let Some(last) = layers.last() else {
            return Err(Error::invalid("a network needs at least one layer"));
        };
        if last.activation != Activation::Identity {
            return Err(Error::invalid("the output layer must use the identity activation"));
        }
        for (k, layer) in layers[..layers.len() - 1].iter().enumerate() {
            if layer.activation != Activation::Relu {
                return Err(Error::invalid(format!(
                    "hidden layer {k} must use ReLU, found {:?}",
                    layer.activation
                )));
            }
        }
        for pair in layers.windows(2) {
            check_dim("consecutive layer sizes", pair[0].output_dim(), pair[1].input_dim())?;
        }
        Ok(Self { layers })
    }

    /// Builds a network from `(weights, bias)` pairs, assigning activations by position.
    pub fn from_parameters(params: Vec<(Matrix<T>, Vec<T>)>) -> Result<Self> {
        let n = params.len();
        let layers = params
            .into_iter()
            .enumerate()
            .map(|(k, (w, b))| {
                let act = if k + 1 == n {
                    Activation::Identity
                } else {
                    Activation::Relu
                };
                AffineLayer::new(w, b, act)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(layers)
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            layers: vec![AffineLayer {
                weights: Matrix::identity(dim),
                bias: vec![T::zero(); dim],
                activation: Activation::Identity,
            }],
        }
    }

    pub fn layers(&self) -> &[AffineLayer<T>] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    pub fn num_hidden_neurons(&self) -> usize {
        self.layers[..self.layers.len() - 1]
            .iter()
            .map(AffineLayer::output_dim)
            .sum()
    }

    pub fn evaluate(&self, x: &[T]) -> Result<Vec<T>> {
        check_dim("network input", self.input_dim(), x.len())?;
        let mut cur = x.to_vec();
        for layer in &self.layers {
            cur = layer.pre_activation(&cur)?;
            if layer.activation == Activation::Relu {
                for v in &mut cur {
                    *v = Activation::Relu.apply(*v);
                }
            }
        }
        Ok(cur)
    }

    /// `second ∘ self`. The identity output layer of `self` is folded into the
    /// first layer of `second` so every hidden layer stays ReLU.
    pub fn compose(&self, second: &Self) -> Result<Self> {
        check_dim("network composition", self.output_dim(), second.input_dim())?;
        let last = &self.layers[self.layers.len() - 1];
        let head = &second.layers[0];
        let weights = head.weights.matmul(&last.weights)?;
        let mut bias = head.weights.mul_vec(&last.bias)?;
        for (v, &b) in bias.iter_mut().zip(&head.bias) {
            *v += b;
        }
        let mut layers = self.layers[..self.layers.len() - 1].to_vec();
        layers.push(AffineLayer {
            weights,
            bias,
            activation: head.activation,
        });
        layers.extend_from_slice(&second.layers[1..]);
        Self::new(layers)
    }

    pub fn cast<U: Scalar>(&self) -> FeedForwardNetwork<U> {
        FeedForwardNetwork {
            layers: self
                .layers
                .iter()
                .map(|l| AffineLayer {
                    weights: l.weights.cast(),
                    bias: l.bias.iter().map(|&b| U::lit(b.to_f64_lossy())).collect(),
                    activation: l.activation,
                })
                .collect(),
        }
    }
}
