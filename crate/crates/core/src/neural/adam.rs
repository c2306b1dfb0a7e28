use ndarray::Zip;

use super::mlp::{DenseLayer, MlpNetwork};
use crate::error::{check_len, Error, Result};

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// Adam optimizer state (first and second moment per parameter).
#[derive(Debug, Clone)]
pub struct Adam {
    learning_rate: f64,
    steps: i32,
    m: Vec<DenseLayer>,
    v: Vec<DenseLayer>,
}

impl Adam {
    pub fn new(net: &MlpNetwork, learning_rate: f64) -> Result<Self> {
        if !(learning_rate > 0.0 && learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!("learning rate {learning_rate}")));
        }
        let zeros: Vec<DenseLayer> = net
            .layers()
            .iter()
            .map(|l| DenseLayer::zeros(l.fan_in(), l.fan_out()))
            .collect();
        Ok(Self {
            learning_rate,
            steps: 0,
            m: zeros.clone(),
            v: zeros,
        })
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    pub fn steps(&self) -> i32 {
        self.steps
    }

    /// One bias-corrected Adam update of `net` in place.
    pub fn step(&mut self, net: &mut MlpNetwork, grads: &[DenseLayer]) -> Result<()> {
        check_len("adam gradient layers", self.m.len(), grads.len())?;
        if !grads.iter().all(DenseLayer::is_finite) {
            return Err(Error::NonFinite("gradient".into()));
        }
        self.steps += 1;
        let c1 = 1.0 - BETA1.powi(self.steps);
        let c2 = 1.0 - BETA2.powi(self.steps);
        let lr = self.learning_rate;
        let update = |p: &mut f64, m: &mut f64, v: &mut f64, &g: &f64| {
            *m = BETA1 * *m + (1.0 - BETA1) * g;
            *v = BETA2 * *v + (1.0 - BETA2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + EPSILON);
        };
        for (((layer, m), v), g) in net.layers_mut().iter_mut().zip(&mut self.m).zip(&mut self.v).zip(grads) {
            Zip::from(&mut layer.weights)
                .and(&mut m.weights)
                .and(&mut v.weights)
                .and(&g.weights)
                .for_each(update);
            Zip::from(&mut layer.bias)
                .and(&mut m.bias)
                .and(&mut v.bias)
                .and(&g.bias)
                .for_each(update);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_grads(net: &MlpNetwork, g: f64) -> Vec<DenseLayer> {
        net.layers()
            .iter()
            .map(|l| {
                let mut d = DenseLayer::zeros(l.fan_in(), l.fan_out());
                d.weights.fill(g);
                d.bias.fill(g);
                d
            })
            .collect()
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut net = MlpNetwork::zeros(&[2, 3, 1]).unwrap();
        net.layers_mut()[0].weights.fill(0.25);
        let before = net.clone();
        let mut adam = Adam::new(&net, 1e-3).unwrap();
        adam.step(&mut net, &constant_grads(&before, 0.0)).unwrap();
        assert_eq!(net, before);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut net = MlpNetwork::zeros(&[2, 2]).unwrap();
        let mut adam = Adam::new(&net, 1e-3).unwrap();
        let g = constant_grads(&net, -4.0);
        adam.step(&mut net, &g).unwrap();
        for &w in net.layers()[0].weights.iter() {
            assert!((w - 1e-3).abs() < 1e-9);
        }
        // A second identical step cannot exceed the step-size bound.
        let before = net.clone();
        adam.step(&mut net, &constant_grads(&before, -4.0)).unwrap();
        let moved = net.layers()[0].weights[[0, 0]] - before.layers()[0].weights[[0, 0]];
        assert!(moved.abs() <= 1e-3 * (1.0 + 1e-9));
    }

    #[test]
    fn rejects_bad_input() {
        let mut net = MlpNetwork::zeros(&[1, 1]).unwrap();
        assert!(Adam::new(&net, 0.0).is_err());
        let mut adam = Adam::new(&net, 1e-3).unwrap();
        let g = constant_grads(&net, f64::NAN);
        assert!(adam.step(&mut net, &g).is_err());
    }
}
