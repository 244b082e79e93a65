//! Numerical gradient verification.
//!
//! Central finite differences over the flat parameter vector, used as the
//! independent oracle against every analytic gradient in this crate. The
//! probes only evaluate the supplied closure, so they stay decoupled from the
//! backward passes they check.

use crate::params::ParamSet;

/// Central difference `(f(x + h e_i) - f(x - h e_i)) / 2h` for every flat
/// coordinate of `params`.
pub fn central_difference_params<F>(params: &ParamSet, h: f64, mut f: F) -> Vec<f64>
where
    F: FnMut(&ParamSet) -> f64,
{
    let n = params.flat_len();
    let mut probe = params.clone();
    let mut grad = Vec::with_capacity(n);
    for i in 0..n {
        let orig = probe.get_flat(i);
        probe.set_flat(i, orig + h);
        let up = f(&probe);
        probe.set_flat(i, orig - h);
        let down = f(&probe);
        probe.set_flat(i, orig);
        grad.push((up - down) / (2.0 * h));
    }
    grad
}

/// Central difference over a plain vector.
pub fn central_difference_vec<F>(x: &[f64], h: f64, mut f: F) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let orig = probe[i];
        probe[i] = orig + h;
        let up = f(&probe);
        probe[i] = orig - h;
        let down = f(&probe);
        probe[i] = orig;
        grad.push((up - down) / (2.0 * h));
    }
    grad
}

/// Largest relative deviation between an analytic and a numeric gradient,
/// with the denominator floored at 1 so that near-zero components are
/// compared absolutely.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len(), "gradient length mismatch");
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / f64::max(1.0, n.abs()))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_gradient_matches() {
        let x = vec![1.5, -2.0, 0.25];
        let fd = central_difference_vec(&x, 1e-6, |v| v.iter().map(|a| a * a).sum());
        let analytic: Vec<f64> = x.iter().map(|a| 2.0 * a).collect();
        assert!(max_relative_error(&analytic, &fd) < 1e-9);
    }
}
