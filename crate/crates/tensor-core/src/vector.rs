use crate::{Matrix, Result, Scalar, TensorError};

/// Fixed-length dense vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector<T> {
    data: Vec<T>,
}

impl<T: Scalar> Vector<T> {
    /// Builds a vector, validating finiteness.
    pub fn from_vec(data: Vec<T>) -> Result<Self> {
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(TensorError::NonFinite { index });
        }
        Ok(Self { data })
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            data: vec![T::zero(); len],
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn get(&self, i: usize) -> Result<T> {
        self.data
            .get(i)
            .copied()
            .ok_or(TensorError::OutOfRange {
                index: i,
                len: self.data.len(),
            })
    }

    pub fn dot(&self, other: &Self) -> Result<T> {
        if self.len() != other.len() {
            return Err(TensorError::LenMismatch {
                op: "dot",
                left: self.len(),
                right: other.len(),
            });
        }
        let mut acc = 0.0f64;
        for (&a, &b) in self.data.iter().zip(&other.data) {
            acc += a.to_f64().unwrap() * b.to_f64().unwrap();
        }
        Ok(T::from_f64(acc).unwrap())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            data: self.data.iter().map(|&v| v * s).collect(),
        }
    }

    /// Row-vector times matrix: `self (1xn) * m (nxk) -> (1xk)`.
    pub fn matmul(&self, m: &Matrix<T>) -> Result<Self> {
        if self.len() != m.rows() {
            return Err(TensorError::DimMismatch {
                op: "vec_matmul",
                left_rows: 1,
                left_cols: self.len(),
                right_rows: m.rows(),
                right_cols: m.cols(),
            });
        }
        let mut acc = vec![0.0f64; m.cols()];
        for (p, &a) in self.data.iter().enumerate() {
            let a = a.to_f64().unwrap();
            if a == 0.0 {
                continue;
            }
            for (o, &b) in acc.iter_mut().zip(m.row(p)) {
                *o += a * b.to_f64().unwrap();
            }
        }
        Ok(Self {
            data: acc.iter().map(|&v| T::from_f64(v).unwrap()).collect(),
        })
    }

    pub fn convert<U: Scalar>(&self) -> Vector<U> {
        Vector {
            data: self
                .data
                .iter()
                .map(|&v| U::from_f64(v.to_f64().unwrap()).unwrap())
                .collect(),
        }
    }

    fn zip_with(&self, other: &Self, op: &'static str, f: impl Fn(T, T) -> T) -> Result<Self> {
        if self.len() != other.len() {
            return Err(TensorError::LenMismatch {
                op,
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(Self {
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }
}

impl<T: Scalar> From<Vector<T>> for Vec<T> {
    fn from(v: Vector<T>) -> Self {
        v.data
    }
}
