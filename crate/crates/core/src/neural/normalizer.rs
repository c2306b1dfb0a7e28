use ndarray::{Array2, ArrayView2, Axis};

use crate::error::{check_len, Error, Result};

/// Per-feature z-score scaling fitted on training data.
///
/// Features with zero spread map to 0 and invert to their mean.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    mean: Vec<f64>,
    std: Vec<f64>,
}

impl Normalizer {
    /// Fits on the rows of `data` using the sample (`N − 1`) deviation.
    pub fn fit(data: ArrayView2<f64>) -> Result<Self> {
        let n = data.nrows();
        if n < 2 {
            return Err(Error::InvalidArgument(format!("normalizer needs at least 2 samples, got {n}")));
        }
        let mean = data.mean_axis(Axis(0)).expect("non-empty rows");
        let std = data.std_axis(Axis(0), 1.0);
        Ok(Self {
            mean: mean.to_vec(),
            std: std.to_vec(),
        })
    }

    pub fn from_parts(mean: Vec<f64>, std: Vec<f64>) -> Result<Self> {
        check_len("normalizer std", mean.len(), std.len())?;
        if std.iter().any(|s| !(*s >= 0.0)) || mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::InvalidArgument("normalizer statistics must be finite and non-negative".into()));
        }
        Ok(Self { mean, std })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            std: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn std(&self) -> &[f64] {
        &self.std
    }

    pub fn apply_in_place(&self, row: &mut [f64]) -> Result<()> {
        check_len("normalizer apply", self.dim(), row.len())?;
        for ((x, m), s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
            *x = if *s > 0.0 { (*x - m) / s } else { 0.0 };
        }
        Ok(())
    }

    pub fn invert_in_place(&self, row: &mut [f64]) -> Result<()> {
        check_len("normalizer invert", self.dim(), row.len())?;
        for ((x, m), s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
            *x = if *s > 0.0 { *x * s + m } else { *m };
        }
        Ok(())
    }

    pub fn apply(&self, row: &[f64]) -> Result<Vec<f64>> {
        let mut out = row.to_vec();
        self.apply_in_place(&mut out)?;
        Ok(out)
    }

    pub fn invert(&self, row: &[f64]) -> Result<Vec<f64>> {
        let mut out = row.to_vec();
        self.invert_in_place(&mut out)?;
        Ok(out)
    }

    pub fn apply_rows(&self, data: ArrayView2<f64>) -> Result<Array2<f64>> {
        let mut out = data.to_owned();
        for mut row in out.rows_mut() {
            self.apply_in_place(row.as_slice_mut().expect("owned rows are contiguous"))?;
        }
        Ok(out)
    }

    pub fn invert_rows(&self, data: ArrayView2<f64>) -> Result<Array2<f64>> {
        let mut out = data.to_owned();
        for mut row in out.rows_mut() {
            self.invert_in_place(row.as_slice_mut().expect("owned rows are contiguous"))?;
        }
        Ok(out)
    }
}
