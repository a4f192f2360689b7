use crate::error::{Error, Result};

/// Scenario inputs (row-major, `len() x dim()`) and their simulated outputs.
///
/// Identical input rows are rejected: the simulator is deterministic, so a
/// repeat carries no information and makes the noiseless Gram matrix singular.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    inputs: Vec<f64>,
    outputs: Vec<f64>,
}

impl Dataset {
    pub fn new(dim: usize) -> Self {
        Dataset {
            dim,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn from_rows<R: AsRef<[f64]>>(dim: usize, rows: &[R], outputs: &[f64]) -> Result<Self> {
        if rows.len() != outputs.len() {
            return Err(Error::DimensionMismatch {
                expected: rows.len(),
                got: outputs.len(),
            });
        }
        let mut ds = Dataset::new(dim);
        for (r, &y) in rows.iter().zip(outputs) {
            ds.push(r.as_ref(), y)?;
        }
        Ok(ds)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.inputs.chunks_exact(self.dim.max(1)).take(self.len())
    }

    pub fn inputs_flat(&self) -> &[f64] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[f64] {
        &self.outputs
    }

    /// Index of a row exactly equal to `x`, if any.
    pub fn find(&self, x: &[f64]) -> Option<usize> {
        self.rows().position(|r| r == x)
    }

    pub fn push(&mut self, x: &[f64], y: f64) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        if !y.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite dataset entry".into()));
        }
        if let Some(existing) = self.find(x) {
            return Err(Error::DuplicateInput {
                row: self.len(),
                existing,
            });
        }
        self.inputs.extend_from_slice(x);
        self.outputs.push(y);
        Ok(())
    }

    /// Per-dimension `max - min` of the inputs.
    pub fn input_range(&self) -> Vec<f64> {
        (0..self.dim)
            .map(|j| {
                let (lo, hi) = self
                    .rows()
                    .map(|r| r[j])
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
                if self.is_empty() {
                    0.0
                } else {
                    hi - lo
                }
            })
            .collect()
    }
}
