use rand::Rng;

use super::Tensor;
use crate::scalar::Scalar;

/// Half-width of the unit-variance-preserving uniform range, `√(3 / fan_in)`.
pub fn unit_scaling_bound(fan_in: usize) -> f64 {
    (3.0 / fan_in.max(1) as f64).sqrt()
}

/// Fills an `out × in` matrix uniformly in `±√(3 / in)`.
pub fn init_uniform<T: Scalar, R: Rng>(t: &mut Tensor<T>, rng: &mut R) {
    let bound = unit_scaling_bound(t.cols());
    fill_uniform(t, bound, rng);
}

pub(crate) fn fill_uniform<T: Scalar, R: Rng>(t: &mut Tensor<T>, bound: f64, rng: &mut R) {
    for v in t.data_mut() {
        *v = T::cast(rng.gen_range(-bound..=bound));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng;

    #[test]
    fn within_bound() {
        let mut t = Tensor::<f32>::zeros(&[16, 12]);
        init_uniform(&mut t, &mut rng(1));
        let b = unit_scaling_bound(12) as f32;
        assert!(t.data().iter().all(|v| v.abs() <= b));
        assert!(t.data().iter().any(|v| v.abs() > b / 2.0));
    }
}
