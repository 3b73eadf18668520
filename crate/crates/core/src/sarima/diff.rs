use crate::error::{Error, Result};

fn lag_difference(y: &[f64], lag: usize) -> Vec<f64> {
    y.iter().skip(lag).zip(y).map(|(a, b)| a - b).collect()
}

/// Applies `(1 - L)^d` then `(1 - L^s)^D`. The output is `d + D*s` shorter.
pub fn difference(y: &[f64], d: usize, seasonal_d: usize, period: usize) -> Result<Vec<f64>> {
    let lost = d + seasonal_d * period;
    if y.len() <= lost {
        return Err(Error::TooShort {
            needed: lost,
            got: y.len(),
        });
    }
    let mut out = y.to_vec();
    for _ in 0..d {
        out = lag_difference(&out, 1);
    }
    for _ in 0..seasonal_d {
        out = lag_difference(&out, period);
    }
    Ok(out)
}

/// Inverse of differencing with zero pre-sample values: the result `y` has
/// the same length as `w` and satisfies `(1 - L)^d (1 - L^s)^D y = w` when
/// `y` is extended by zeros to the left.
pub fn integrate(w: &[f64], d: usize, seasonal_d: usize, period: usize) -> Vec<f64> {
    let mut y = w.to_vec();
    for _ in 0..seasonal_d {
        for t in period..y.len() {
            y[t] += y[t - period];
        }
    }
    for _ in 0..d {
        for t in 1..y.len() {
            y[t] += y[t - 1];
        }
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn annihilates_polynomials_and_cycles() {
        assert_eq!(difference(&[1.0, 2.0, 3.0, 4.0, 5.0], 1, 0, 1).unwrap(), [1.0; 4]);
        let sq: Vec<f64> = (0..6).map(|t| (t * t) as f64).collect();
        assert_eq!(difference(&sq, 2, 0, 1).unwrap(), [2.0; 4]);
        let cycle: Vec<f64> = (0..21)
            .map(|t| [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0][t % 7])
            .collect();
        let w = difference(&cycle, 0, 1, 7).unwrap();
        assert_eq!(w.len(), 14);
        assert!(w.iter().all(|&v| v == 0.0));
        assert!(matches!(
            difference(&[1.0; 8], 1, 1, 7),
            Err(Error::TooShort { .. })
        ));
    }

    #[test]
    fn integration_inverts_differencing() {
        let w: Vec<f64> = (0..40).map(|t| ((t * 7919) % 13) as f64 - 6.0).collect();
        for (d, sd) in [(0, 0), (1, 0), (0, 1), (1, 1), (2, 1)] {
            let y = integrate(&w, d, sd, 7);
            let back = difference(&y, d, sd, 7).unwrap();
            let lost = d + 7 * sd;
            assert_eq!(back, &w[lost..], "d={d} D={sd}");
        }
    }
}
