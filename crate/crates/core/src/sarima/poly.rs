//! Lag-polynomial arithmetic and the stationarity-preserving
//! reparameterization used by the optimizer.

/// Unconstrained values are clamped here before `tanh`, which keeps partial
/// autocorrelations at most `tanh(7) ~ 1 - 1.7e-6` in magnitude.
const UNCONSTRAINED_LIMIT: f64 = 7.0;

pub fn multiply(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if *x == 0.0 {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// `1 - c_1 L^step - c_2 L^{2 step} - ...`
pub fn ar_factor(coef: &[f64], step: usize) -> Vec<f64> {
    let mut out = vec![0.0; coef.len() * step + 1];
    out[0] = 1.0;
    for (i, c) in coef.iter().enumerate() {
        out[(i + 1) * step] = -c;
    }
    out
}

/// `1 + c_1 L^step + c_2 L^{2 step} + ...`
pub fn ma_factor(coef: &[f64], step: usize) -> Vec<f64> {
    let mut out = vec![0.0; coef.len() * step + 1];
    out[0] = 1.0;
    for (i, c) in coef.iter().enumerate() {
        out[(i + 1) * step] = *c;
    }
    out
}

/// `(1 - L)^d (1 - L^s)^D`
pub fn differencing_polynomial(d: usize, seasonal_d: usize, period: usize) -> Vec<f64> {
    let mut out = vec![1.0];
    for _ in 0..d {
        out = multiply(&out, &[1.0, -1.0]);
    }
    for _ in 0..seasonal_d {
        out = multiply(&out, &ar_factor(&[1.0], period));
    }
    out
}

/// Partial autocorrelations of `1 - phi_1 z - ... - phi_p z^p` by the
/// Levinson step-down recursion, or `None` once one reaches modulus 1.
fn step_down(phi: &[f64]) -> Option<Vec<f64>> {
    let mut cur = phi.to_vec();
    let mut pacf = vec![0.0; phi.len()];
    for k in (0..phi.len()).rev() {
        let r = cur[k];
        if !r.is_finite() || r.abs() >= 1.0 {
            return None;
        }
        pacf[k] = r;
        let denom = 1.0 - r * r;
        cur = (0..k).map(|j| (cur[j] + r * cur[k - 1 - j]) / denom).collect();
    }
    Some(pacf)
}

/// Durbin-Levinson step-up: AR coefficients from partial autocorrelations.
fn step_up(pacf: &[f64]) -> Vec<f64> {
    let mut phi: Vec<f64> = Vec::with_capacity(pacf.len());
    for (k, &r) in pacf.iter().enumerate() {
        let next: Vec<f64> = (0..k).map(|j| phi[j] - r * phi[k - 1 - j]).collect();
        phi = next;
        phi.push(r);
    }
    phi
}

/// True when `1 - phi_1 z - ... - phi_p z^p` has all roots outside the unit
/// circle.
pub fn ar_is_stationary(phi: &[f64]) -> bool {
    step_down(phi).is_some()
}

/// True when `1 + theta_1 z + ... + theta_q z^q` has all roots outside the
/// unit circle.
pub fn ma_is_invertible(theta: &[f64]) -> bool {
    let neg: Vec<f64> = theta.iter().map(|t| -t).collect();
    step_down(&neg).is_some()
}

/// Roots of the lag polynomial `1 + c_1 z + ... + c_n z^n` all lie outside
/// the unit circle.
pub fn is_stationary(poly: &[f64]) -> bool {
    let phi: Vec<f64> = poly[1..].iter().map(|c| -c).collect();
    let trimmed = match phi.iter().rposition(|c| *c != 0.0) {
        Some(last) => &phi[..=last],
        None => &phi[..0],
    };
    step_down(trimmed).is_some()
}

/// Lower bound on the smallest root modulus reachable through the
/// unconstrained transform for a first-order factor.
pub fn min_root_modulus_bound() -> f64 {
    1.0 / UNCONSTRAINED_LIMIT.tanh()
}

/// Maps unconstrained values to the coefficients of a stationary AR factor
/// `1 - phi_1 L - ...` through partial autocorrelations `tanh(x)`.
pub fn ar_from_unconstrained(x: &[f64]) -> Vec<f64> {
    let pacf: Vec<f64> = x
        .iter()
        .map(|v| v.clamp(-UNCONSTRAINED_LIMIT, UNCONSTRAINED_LIMIT).tanh())
        .collect();
    step_up(&pacf)
}

/// Same map for an invertible MA factor `1 + theta_1 L + ...`.
pub fn ma_from_unconstrained(x: &[f64]) -> Vec<f64> {
    ar_from_unconstrained(x).into_iter().map(|c| -c).collect()
}

/// Inverse of [`ar_from_unconstrained`]; `None` outside the stationary region.
#[cfg(test)]
pub fn ar_to_unconstrained(phi: &[f64]) -> Option<Vec<f64>> {
    step_down(phi).map(|p| p.into_iter().map(f64::atanh).collect())
}

#[cfg(test)]
pub fn ma_to_unconstrained(theta: &[f64]) -> Option<Vec<f64>> {
    let neg: Vec<f64> = theta.iter().map(|t| -t).collect();
    ar_to_unconstrained(&neg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn products_and_factors() {
        assert_eq!(multiply(&[1.0, -0.5], &[1.0, 0.5]), [1.0, 0.0, -0.25]);
        assert_eq!(ar_factor(&[0.3], 3), [1.0, 0.0, 0.0, -0.3]);
        assert_eq!(ma_factor(&[0.3, 0.1], 1), [1.0, 0.3, 0.1]);
        assert_eq!(differencing_polynomial(2, 0, 7), [1.0, -2.0, 1.0]);
        let airline = differencing_polynomial(1, 1, 4);
        assert_eq!(airline, [1.0, -1.0, 0.0, 0.0, -1.0, 1.0]);
    }

    #[test]
    fn stationarity_checks() {
        assert!(ar_is_stationary(&[0.9]));
        assert!(!ar_is_stationary(&[1.0]));
        assert!(!ar_is_stationary(&[1.2]));
        // 1 - 1.5z + 0.56z^2 = (1 - 0.7z)(1 - 0.8z)
        assert!(ar_is_stationary(&[1.5, -0.56]));
        // (1 - 0.5z)(1 - 1.25z)
        assert!(!ar_is_stationary(&[1.75, -0.625]));
        assert!(ma_is_invertible(&[0.5]));
        assert!(!ma_is_invertible(&[1.5]));
        assert!(ma_is_invertible(&[]));
        assert!(is_stationary(&[1.0, -0.5, 0.0]));
        assert!(!is_stationary(&[1.0, -1.0]));
    }

    proptest! {
        #[test]
        fn transform_round_trips(x in proptest::collection::vec(-3.0f64..3.0, 1..5)) {
            let phi = ar_from_unconstrained(&x);
            prop_assert!(ar_is_stationary(&phi));
            let back = ar_to_unconstrained(&phi).unwrap();
            for (a, b) in x.iter().zip(&back) {
                prop_assert!((a - b).abs() < 1e-8);
            }
            let theta = ma_from_unconstrained(&x);
            prop_assert!(ma_is_invertible(&theta));
            let back = ma_to_unconstrained(&theta).unwrap();
            for (a, b) in x.iter().zip(&back) {
                prop_assert!((a - b).abs() < 1e-8);
            }
        }
    }
}
