use crate::{cast, Scalar, Vector};

/// Mean and standard deviation as used by layer normalization.
///
/// Population variance (divide by the length) with the model epsilon added
/// inside the square root, matching the GPT-2 convention.
pub fn layer_norm_stats<T: Scalar>(x: &[T], eps: T) -> (T, T) {
    let n = x.len() as f64;
    let mut mean = 0.0f64;
    for &v in x {
        mean += v.to_f64().unwrap();
    }
    mean /= n;
    let mut var = 0.0f64;
    for &v in x {
        let d = v.to_f64().unwrap() - mean;
        var += d * d;
    }
    var /= n;
    let std = (var + eps.to_f64().unwrap()).sqrt();
    (cast::<T>(mean), cast::<T>(std))
}

/// Numerically stable softmax over a slice, in place.
pub fn softmax_in_place<T: Scalar>(x: &mut [T]) {
    if x.is_empty() {
        return;
    }
    let mut max = x[0];
    for &v in x.iter() {
        if v > max {
            max = v;
        }
    }
    let mut sum = T::zero();
    for v in x.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in x.iter_mut() {
        *v = *v / sum;
    }
}

/// Max-subtracted softmax; output sums to 1.
pub fn softmax_row<T: Scalar>(x: &Vector<T>) -> Vector<T> {
    let mut data: Vec<T> = x.as_slice().to_vec();
    softmax_in_place(&mut data);
    Vector::from_vec(data).expect("softmax of finite input is finite")
}

/// GELU with the tanh approximation used by GPT-2.
pub fn gelu<T: Scalar>(x: &Vector<T>) -> Vector<T> {
    let data = x.as_slice().iter().map(|&v| gelu_scalar(v)).collect();
    Vector::from_vec(data).expect("gelu of finite input is finite")
}

pub(crate) fn gelu_scalar<T: Scalar>(v: T) -> T {
    let half = cast::<T>(0.5);
    let c = cast::<T>(0.7978845608028654); // sqrt(2/pi)
    let k = cast::<T>(0.044715);
    half * v * (T::one() + (c * (v + k * v * v * v)).tanh())
}

/// Sum of absolute values (f64 accumulation).
pub fn l1_norm<T: Scalar>(x: &[T]) -> T {
    let mut acc = 0.0f64;
    for &v in x {
        acc += v.abs().to_f64().unwrap();
    }
    cast::<T>(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stats_constant_vector() {
        let eps = 1e-5f64;
        let (mean, std) = layer_norm_stats(&[5.0, 5.0, 5.0, 5.0], eps);
        assert_eq!(mean, 5.0);
        assert!((std - eps.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn stats_symmetric_pair() {
        let eps = 1e-5f64;
        let (mean, std) = layer_norm_stats(&[1.0, -1.0], eps);
        assert_eq!(mean, 0.0);
        assert!((std - (1.0 + eps).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn softmax_symmetry() {
        let v = Vector::from_vec(vec![0.0f32, 0.0]).unwrap();
        let s = softmax_row(&v);
        assert_eq!(s.as_slice(), &[0.5, 0.5]);
    }

    #[test]
    fn softmax_large_magnitude_is_stable() {
        let v = Vector::from_vec(vec![1.0e4f32, -1.0e4, 0.0]).unwrap();
        let s = softmax_row(&v);
        let sum: f32 = s.as_slice().iter().sum();
        assert!((sum - 1.0).abs() <= 1e-6);
        assert!(s.as_slice().iter().all(|p| p.is_finite()));
    }

    #[test]
    fn gelu_fixed_point_and_sign() {
        let v = Vector::from_vec(vec![0.0f64, 3.0, -3.0]).unwrap();
        let g = gelu(&v);
        assert_eq!(g.as_slice()[0], 0.0);
        assert!(g.as_slice()[1] > 2.9); // near identity for large positive
        assert!(g.as_slice()[2].abs() < 0.01); // near zero for large negative
    }

    #[test]
    fn l1_hand_checked() {
        assert_eq!(l1_norm(&[3.0f32, -4.0]), 7.0);
    }
}
