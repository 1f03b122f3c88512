use super::ParamSet;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Numeric gradients smaller than this are compared in absolute terms.
const ABS_FLOOR: f64 = 1e-7;

/// `|analytic − numeric| / max(|numeric|, 1e-7)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let diff = (analytic - numeric).abs();
    if diff == 0.0 {
        return 0.0;
    }
    diff / numeric.abs().max(ABS_FLOOR)
}

/// Compares `analytic` against central differences of `loss` at the given
/// flat coordinates and returns the largest relative error.
///
/// `params` is perturbed in place and restored before returning.
pub fn grad_check<T, P, F>(
    params: &mut P,
    analytic: &P,
    coords: &[usize],
    eps: f64,
    mut loss: F,
) -> Result<f64>
where
    T: Scalar,
    P: ParamSet<T> + ?Sized,
    F: FnMut(&P) -> Result<f64>,
{
    let mut worst = 0.0f64;
    for &k in coords {
        let orig = params.flat_get(k);
        let plus = T::cast(orig.as_f64() + eps);
        let minus = T::cast(orig.as_f64() - eps);

        params.flat_set(k, plus);
        let up = loss(params);
        params.flat_set(k, minus);
        let down = loss(params);
        params.flat_set(k, orig);

        let (up, down) = (up?, down?);
        if !up.is_finite() || !down.is_finite() {
            return Err(Error::NonFinite);
        }
        let numeric = (up - down) / (plus.as_f64() - minus.as_f64());
        worst = worst.max(relative_error(analytic.flat_get(k).as_f64(), numeric));
    }
    Ok(worst)
}
