use crate::TensorError;

/// Order-N real dense tensor with a fixed first-index-fastest layout.
///
/// The linear index of element `(i_1, ..., i_N)` is
/// `i_1 + i_2*I_1 + i_3*I_1*I_2 + ...` (all indices zero-based).
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl DenseTensor {
    /// Builds a tensor from a shape and a buffer in layout order.
    ///
    /// Rejects empty shapes, zero extents, length mismatches and non-finite
    /// values.
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self, TensorError> {
        if shape.is_empty() {
            return Err(TensorError::EmptyShape);
        }
        for (mode, &extent) in shape.iter().enumerate() {
            if extent == 0 {
                return Err(TensorError::ZeroExtent { mode });
            }
        }
        let expected: usize = shape.iter().product();
        if data.len() != expected {
            return Err(TensorError::DataLength {
                got: data.len(),
                expected,
            });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(TensorError::NonFinite { index });
        }
        Ok(Self { shape, data })
    }

    /// All-zero tensor of the given shape.
    pub fn zeros(shape: Vec<usize>) -> Result<Self, TensorError> {
        let len: usize = shape.iter().product();
        Self::new(shape, vec![0.0; len])
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    /// Number of modes N.
    pub fn order(&self) -> usize {
        self.shape.len()
    }

    /// Total number of elements.
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Linear index of a multi-index under the layout convention.
    pub fn linear_index(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.shape.len());
        let mut linear = 0;
        let mut stride = 1;
        for (i, &extent) in index.iter().zip(self.shape.iter()) {
            debug_assert!(*i < extent);
            linear += i * stride;
            stride *= extent;
        }
        linear
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.data[self.linear_index(index)]
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>()
    }

    /// Elementwise difference `self - other`.
    pub fn sub(&self, other: &DenseTensor) -> Result<DenseTensor, TensorError> {
        if self.shape != other.shape {
            return Err(TensorError::ShapeMismatch {
                context: format!("{:?} vs {:?}", self.shape, other.shape),
            });
        }
        let data = self
            .data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| a - b)
            .collect();
        DenseTensor::new(self.shape.clone(), data)
    }
}
