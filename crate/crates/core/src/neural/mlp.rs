use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;

use crate::error::{check_len, Error, Result};

/// Slope of the leaky ReLU on negative inputs.
pub const LEAK: f64 = 0.01;

/// Hidden layout used by every surrogate in the experiments.
pub const HIDDEN_LAYERS: [usize; 4] = [80; 4];

/// `[input, 80, 80, 80, 80, output]`.
pub fn architecture(input: usize, output: usize) -> Vec<usize> {
    let mut dims = vec![input];
    dims.extend_from_slice(&HIDDEN_LAYERS);
    dims.push(output);
    dims
}

/// Affine map `z = a W + b`. `weights` is `fan_in × fan_out`.
///
/// Gradients share this shape, so the same type carries both.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl DenseLayer {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self {
            weights: Array2::zeros((fan_in, fan_out)),
            bias: Array1::zeros(fan_out),
        }
    }

    pub fn fan_in(&self) -> usize {
        self.weights.nrows()
    }

    pub fn fan_out(&self) -> usize {
        self.weights.ncols()
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(self.bias.iter()).all(|v| v.is_finite())
    }
}

#[inline]
fn leaky(v: f64) -> f64 {
    if v < 0.0 {
        LEAK * v
    } else {
        v
    }
}

/// Dense feedforward network with leaky-ReLU hidden activations and a
/// linear output layer.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpNetwork {
    layers: Vec<DenseLayer>,
}

impl MlpNetwork {
    /// All-zero network with the given layer widths.
    pub fn zeros(dims: &[usize]) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::InvalidArgument(format!("invalid layer widths {dims:?}")));
        }
        let layers = dims.windows(2).map(|w| DenseLayer::zeros(w[0], w[1])).collect();
        Ok(Self { layers })
    }

    /// He-uniform weights `U(−√(6/fan_in), √(6/fan_in))`, zero biases.
    pub fn he_uniform(dims: &[usize], rng: &mut impl Rng) -> Result<Self> {
        let mut net = Self::zeros(dims)?;
        for layer in &mut net.layers {
            let bound = (6.0 / layer.fan_in() as f64).sqrt();
            layer.weights.mapv_inplace(|_| rng.gen_range(-bound..bound));
        }
        Ok(net)
    }

    pub fn from_layers(layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidArgument("network needs at least one layer".into()));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            check_len("layer chaining", pair[0].fan_out(), pair[1].fan_in()).map_err(|_| {
                Error::InvalidArgument(format!("layer {i} output does not feed layer {}", i + 1))
            })?;
        }
        for l in &layers {
            check_len("bias length", l.fan_out(), l.bias.len())?;
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.input_dim()];
        d.extend(self.layers.iter().map(DenseLayer::fan_out));
        d
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].fan_in()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].fan_out()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(DenseLayer::is_finite)
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let batch = ArrayView2::from_shape((1, x.len()), x).expect("row view of a slice");
        Ok(self.forward_batch(batch)?.into_raw_vec_and_offset().0)
    }

    /// Rows of `x` are samples.
    pub fn forward_batch(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        check_len("network input", self.input_dim(), x.ncols())?;
        let last = self.layers.len() - 1;
        let mut a = x.to_owned();
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = a.dot(&layer.weights);
            z += &layer.bias;
            if i < last {
                z.mapv_inplace(leaky);
            }
            a = z;
        }
        Ok(a)
    }

    /// Mean squared error over all batch entries and outputs.
    pub fn loss(&self, x: ArrayView2<f64>, y: ArrayView2<f64>) -> Result<f64> {
        let out = self.forward_batch(x)?;
        check_len("target batch", out.nrows(), y.nrows())?;
        check_len("target width", out.ncols(), y.ncols())?;
        Ok((&out - &y).mapv(|d| d * d).mean().unwrap_or(0.0))
    }

    /// MSE loss and its exact gradient with respect to every parameter.
    pub fn gradient(&self, x: ArrayView2<f64>, y: ArrayView2<f64>) -> Result<(f64, Vec<DenseLayer>)> {
        check_len("network input", self.input_dim(), x.ncols())?;
        check_len("target width", self.output_dim(), y.ncols())?;
        check_len("target batch", x.nrows(), y.nrows())?;
        if x.nrows() == 0 {
            return Err(Error::InvalidArgument("gradient of an empty batch".into()));
        }

        // Keep each layer's input; pre-activations are recovered from the
        // sign of the activated value since leaky ReLU preserves sign.
        let last = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut a = x.to_owned();
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = a.dot(&layer.weights);
            z += &layer.bias;
            if i < last {
                z.mapv_inplace(leaky);
            }
            inputs.push(a);
            a = z;
        }

        let mut delta = &a - &y;
        let loss = delta.mapv(|d| d * d).mean().unwrap_or(0.0);
        delta *= 2.0 / delta.len() as f64;

        let mut grads: Vec<DenseLayer> = Vec::with_capacity(self.layers.len());
        for i in (0..self.layers.len()).rev() {
            let input = &inputs[i];
            grads.push(DenseLayer {
                weights: input.t().dot(&delta),
                bias: delta.sum_axis(Axis(0)),
            });
            if i > 0 {
                let mut back = delta.dot(&self.layers[i].weights.t());
                // `input` is the activated output of layer i − 1.
                back.zip_mut_with(input, |d, &act| {
                    if act < 0.0 {
                        *d *= LEAK;
                    }
                });
                delta = back;
            }
        }
        grads.reverse();
        Ok((loss, grads))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_network_outputs_zero() {
        let net = MlpNetwork::zeros(&architecture(5, 3)).unwrap();
        assert_eq!(net.forward(&[1.0, -2.0, 3.0, 0.5, 9.0]).unwrap(), vec![0.0; 3]);
        assert_eq!(net.dims(), vec![5, 80, 80, 80, 80, 3]);
    }

    #[test]
    fn negative_inputs_leak() {
        let mut net = MlpNetwork::zeros(&[1, 1, 1]).unwrap();
        net.layers_mut()[0].weights[[0, 0]] = 1.0;
        net.layers_mut()[1].weights[[0, 0]] = 1.0;
        assert!((net.forward(&[-1.0]).unwrap()[0] + 0.01).abs() < 1e-15);
        assert_eq!(net.forward(&[2.0]).unwrap()[0], 2.0);
    }

    #[test]
    fn identity_stack_passes_nonnegative_input() {
        let eye = DenseLayer {
            weights: Array2::eye(3),
            bias: Array1::zeros(3),
        };
        let net = MlpNetwork::from_layers(vec![eye.clone(), eye.clone(), eye]).unwrap();
        assert_eq!(net.forward(&[0.0, 1.5, 4.0]).unwrap(), vec![0.0, 1.5, 4.0]);
    }

    #[test]
    fn single_neuron_gradient() {
        let mut net = MlpNetwork::zeros(&[1, 1]).unwrap();
        net.layers_mut()[0].weights[[0, 0]] = 0.7;
        let (loss, g) = net.gradient(array![[1.0]].view(), array![[0.0]].view()).unwrap();
        assert!((loss - 0.49).abs() < 1e-15);
        assert!((g[0].weights[[0, 0]] - 1.4).abs() < 1e-15);
    }

    #[test]
    fn exact_fit_has_zero_gradient() {
        let net = MlpNetwork::he_uniform(&[3, 6, 2], &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let x = array![[0.1, 0.2, -0.3], [1.0, -1.0, 0.5]];
        let y = net.forward_batch(x.view()).unwrap();
        let (loss, g) = net.gradient(x.view(), y.view()).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.iter().all(|l| l.weights.iter().chain(l.bias.iter()).all(|&v| v == 0.0)));
    }

    #[test]
    fn rejects_bad_shapes() {
        let net = MlpNetwork::zeros(&[2, 3]).unwrap();
        assert!(net.forward(&[1.0]).is_err());
        assert!(MlpNetwork::zeros(&[2]).is_err());
        let empty = Array2::<f64>::zeros((0, 2));
        assert!(net.gradient(empty.view(), Array2::zeros((0, 3)).view()).is_err());
        assert!(MlpNetwork::from_layers(vec![DenseLayer::zeros(2, 3), DenseLayer::zeros(2, 1)]).is_err());
    }
}
