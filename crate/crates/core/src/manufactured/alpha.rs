use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Train / validation / test partition of the solution parameter `α`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaSplit {
    pub train: Vec<f64>,
    pub val: Vec<f64>,
    pub test: Vec<f64>,
}

impl AlphaSplit {
    /// `{0.1, …, 2.0}` minus the validation and test values.
    pub fn standard() -> Self {
        let val = vec![0.8, 1.1];
        let test = vec![-0.5, 0.7, 1.5, 2.5];
        let train = (1..=20)
            .map(|i| i as f64 / 10.0)
            .filter(|a| !val.contains(a) && !test.contains(a))
            .collect();
        Self { train, val, test }
    }

    pub fn new(train: Vec<f64>, val: Vec<f64>, test: Vec<f64>) -> Result<Self> {
        let split = Self { train, val, test };
        split.validate()?;
        Ok(split)
    }

    pub fn validate(&self) -> Result<()> {
        if self.train.is_empty() || self.val.is_empty() {
            return Err(Error::InvalidArgument(
                "training and validation α sets must be non-empty".into(),
            ));
        }
        let all = self.train.iter().chain(&self.val).chain(&self.test);
        if all.clone().any(|a| !a.is_finite()) {
            return Err(Error::InvalidArgument("α values must be finite".into()));
        }
        let sets = [&self.train, &self.val, &self.test];
        for (i, a) in sets.iter().enumerate() {
            for b in &sets[i + 1..] {
                if let Some(x) = a.iter().find(|x| b.contains(x)) {
                    return Err(Error::InvalidArgument(format!(
                        "α = {x} appears in more than one set"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Whether a test value lies inside the range spanned by training values.
    pub fn is_interpolation(&self, alpha: f64) -> bool {
        let lo = self.train.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.train.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo..=hi).contains(&alpha)
    }

    pub fn interpolation(&self) -> Vec<f64> {
        self.test.iter().copied().filter(|&a| self.is_interpolation(a)).collect()
    }

    pub fn extrapolation(&self) -> Vec<f64> {
        self.test.iter().copied().filter(|&a| !self.is_interpolation(a)).collect()
    }
}

impl Default for AlphaSplit {
    fn default() -> Self {
        Self::standard()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_split_matches_table() {
        let s = AlphaSplit::standard();
        assert_eq!(s.train.len(), 16);
        assert_eq!(s.val, vec![0.8, 1.1]);
        assert_eq!(s.interpolation(), vec![0.7, 1.5]);
        assert_eq!(s.extrapolation(), vec![-0.5, 2.5]);
        s.validate().unwrap();
        assert!(s.train.contains(&0.3) && s.train.contains(&2.0) && !s.train.contains(&1.5));
        let expected = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.9, 1.0, 1.2, 1.3, 1.4, 1.6, 1.7, 1.8, 1.9, 2.0];
        assert_eq!(s.train, expected);
    }

    #[test]
    fn overlapping_sets_rejected() {
        assert!(AlphaSplit::new(vec![0.1, 0.2], vec![0.2], vec![]).is_err());
        assert!(AlphaSplit::new(vec![], vec![0.2], vec![]).is_err());
    }
}
