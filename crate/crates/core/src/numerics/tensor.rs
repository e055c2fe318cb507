use crate::error::{contract, Result};

/// Dense row-major tensor of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(contract(format!(
                "tensor shape {:?} needs {} values, got {}",
                shape,
                expected,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(contract(format!("non-finite tensor entry at {i}")));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self {
            shape,
            data: vec![0.0; n],
        }
    }

    pub fn from_vec(data: Vec<f64>) -> Result<Self> {
        Self::new(vec![data.len()], data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// `self` viewed as a `[rows, cols]` matrix applied to `x`.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        let (rows, cols) = self.as_matrix()?;
        if x.len() != cols {
            return Err(contract(format!(
                "matvec: matrix has {cols} columns, vector has {}",
                x.len()
            )));
        }
        Ok(self
            .data
            .chunks_exact(cols)
            .take(rows)
            .map(|row| row.iter().zip(x).map(|(w, v)| w * v).sum())
            .collect())
    }

    /// Transposed product `selfᵀ · g`.
    pub fn matvec_t(&self, g: &[f64]) -> Result<Vec<f64>> {
        let (rows, cols) = self.as_matrix()?;
        if g.len() != rows {
            return Err(contract(format!(
                "matvec_t: matrix has {rows} rows, vector has {}",
                g.len()
            )));
        }
        let mut out = vec![0.0; cols];
        for (row, &gi) in self.data.chunks_exact(cols).zip(g) {
            if gi == 0.0 {
                continue;
            }
            for (o, w) in out.iter_mut().zip(row) {
                *o += w * gi;
            }
        }
        Ok(out)
    }

    fn as_matrix(&self) -> Result<(usize, usize)> {
        match self.shape.as_slice() {
            [r, c] => Ok((*r, *c)),
            s => Err(contract(format!("expected a matrix, got shape {s:?}"))),
        }
    }
}
