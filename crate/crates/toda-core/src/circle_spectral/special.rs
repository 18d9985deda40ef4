use num_rational::Ratio;
use num_traits::Zero;

use crate::{Result, TodaError, C64};

const EIN_RADIUS: f64 = 20.0;

/// `Ein(x) = -Σ_{n>=1} (-x)^n / (n!·n)`, the entire exponential integral with
/// `x·Ein'(x) = 1 - e^{-x}`. Supported for `|x| <= 20`.
pub fn ein(x: C64) -> Result<C64> {
    if x.norm() > EIN_RADIUS {
        return Err(TodaError::EinOutOfRange(x.norm()));
    }
    Ok(ein_unchecked(x))
}

pub(crate) fn ein_unchecked(x: C64) -> C64 {
    if x.is_zero() {
        return C64::zero();
    }
    let mut term = C64::new(1.0, 0.0);
    let mut sum = C64::zero();
    let mut n = 1u32;
    loop {
        term *= -x / n as f64;
        let contrib = term / n as f64;
        sum += contrib;
        if contrib.norm() < 1e-18 * sum.norm() || n > 400 {
            break;
        }
        n += 1;
    }
    -sum
}

/// Harmonic number `c_p = 1 + 1/2 + … + 1/p`, with `c_0 = c_{-1} = 0`.
pub fn harmonic(p: i32) -> Result<Ratio<i64>> {
    if p < -1 {
        return Err(TodaError::HarmonicIndex(p));
    }
    let mut c = Ratio::zero();
    for j in 1..=p.max(0) as i64 {
        c += Ratio::new(1, j);
    }
    Ok(c)
}

/// [`harmonic`] as a float; any `p <= 0` gives 0.
pub fn harmonic_f64(p: i32) -> f64 {
    (1..=p.max(0)).map(|j| 1.0 / j as f64).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ein_at_zero_and_one() {
        assert_eq!(ein(C64::zero()).unwrap(), C64::zero());
        let mut partial = 0.0;
        let mut fact = 1.0;
        for n in 1..=30 {
            fact *= n as f64;
            let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
            partial += sign / (fact * n as f64);
        }
        assert!((ein(C64::new(1.0, 0.0)).unwrap() - partial).norm() < 1e-15);
    }

    #[test]
    fn ein_derivative_identity() {
        let z = C64::new(0.7, 0.3);
        let h = 1e-5;
        let d = (ein(z + h).unwrap() - ein(z - h).unwrap()) / (2.0 * h);
        assert!((z * d - (1.0 - (-z).exp())).norm() < 1e-8);
    }

    #[test]
    fn ein_range() {
        assert!(matches!(ein(C64::new(25.0, 0.0)), Err(TodaError::EinOutOfRange(_))));
    }

    #[test]
    fn harmonic_values() {
        assert_eq!(harmonic(-1).unwrap(), Ratio::zero());
        assert_eq!(harmonic(0).unwrap(), Ratio::zero());
        assert_eq!(harmonic(1).unwrap(), Ratio::from_integer(1));
        assert_eq!(harmonic(3).unwrap(), Ratio::new(11, 6));
        assert!(harmonic(-2).is_err());
        assert!((harmonic_f64(3) - 11.0 / 6.0).abs() < 1e-15);
    }
}
