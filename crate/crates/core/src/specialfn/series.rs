use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Coefficients of a formal power series, lowest order first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesCoefficients {
    pub coeffs: Vec<f64>,
}

impl SeriesCoefficients {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    fn get(&self, i: usize) -> f64 {
        self.coeffs.get(i).copied().unwrap_or(0.0)
    }

    /// Cauchy product truncated to `n + 1` coefficients.
    pub fn convolve(&self, other: &SeriesCoefficients, n: usize) -> SeriesCoefficients {
        let coeffs = (0..=n)
            .map(|s| (0..=s).map(|i| self.get(i) * other.get(s - i)).sum())
            .collect();
        SeriesCoefficients { coeffs }
    }
}

/// Coefficients `c_0..=c_n` of `numer / denom`, from the triangular system
/// `Σ_{i+j=s} b_i c_j = a_s`. Missing trailing coefficients are zero.
pub fn series_quotient(
    numer: &SeriesCoefficients,
    denom: &SeriesCoefficients,
    n: usize,
) -> Result<SeriesCoefficients> {
    let b0 = denom.get(0);
    if b0 == 0.0 || !b0.is_finite() {
        return Err(Error::domain("series_quotient: leading denominator coefficient is zero"));
    }
    let mut c: Vec<f64> = Vec::with_capacity(n + 1);
    for s in 0..=n {
        let conv: f64 = (1..=s).map(|i| denom.get(i) * c[s - i]).sum();
        c.push((numer.get(s) - conv) / b0);
    }
    Ok(SeriesCoefficients { coeffs: c })
}

/// Lazily generated quotient of two hypergeometric-type series with unit
/// leading coefficients, where each series term is the previous one times a
/// step factor. Used by both ratio expansions with the argument power folded
/// into the step, so `next()` yields `c_s x^s` directly.
pub(crate) struct QuotientStream<FA, FB> {
    numer_step: FA,
    denom_step: FB,
    numer_term: f64,
    denom: Vec<f64>,
    out: Vec<f64>,
}

impl<FA, FB> QuotientStream<FA, FB>
where
    FA: Fn(usize) -> f64,
    FB: Fn(usize) -> f64,
{
    pub fn new(numer_step: FA, denom_step: FB) -> Self {
        Self {
            numer_step,
            denom_step,
            numer_term: 1.0,
            denom: vec![1.0],
            out: Vec::new(),
        }
    }

    /// Next quotient coefficient. The first call returns `1`.
    pub fn next_coeff(&mut self) -> f64 {
        let s = self.out.len();
        if s == 0 {
            self.out.push(1.0);
            return 1.0;
        }
        self.numer_term *= (self.numer_step)(s);
        let d = *self.denom.last().unwrap() * (self.denom_step)(s);
        self.denom.push(d);
        let conv: f64 = (1..=s).map(|i| self.denom[i] * self.out[s - i]).sum();
        let c = self.numer_term - conv;
        self.out.push(c);
        c
    }

    pub fn len(&self) -> usize {
        self.out.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_denominator() {
        let exp: Vec<f64> = (0..6).scan(1.0, |f, k| {
            let v = *f;
            *f /= (k + 1) as f64;
            Some(v)
        }).collect();
        let a = SeriesCoefficients::new(exp.clone());
        let b = SeriesCoefficients::new(vec![1.0]);
        assert_eq!(series_quotient(&a, &b, 5).unwrap().coeffs, exp);
    }

    #[test]
    fn geometric_inverse() {
        let a = SeriesCoefficients::new(vec![1.0, 0.0]);
        let b = SeriesCoefficients::new(vec![1.0, 1.0]);
        assert_eq!(series_quotient(&a, &b, 1).unwrap().coeffs, vec![1.0, -1.0]);
        let c = series_quotient(&a, &b, 4).unwrap();
        assert_eq!(c.coeffs, vec![1.0, -1.0, 1.0, -1.0, 1.0]);
    }

    #[test]
    fn zero_leading_denominator() {
        let a = SeriesCoefficients::new(vec![1.0]);
        let b = SeriesCoefficients::new(vec![0.0, 1.0]);
        assert!(matches!(series_quotient(&a, &b, 3), Err(Error::Domain(_))));
    }

    #[test]
    fn stream_matches_dense_quotient() {
        let (theta, omega, x) = (1.7, 2.2, 0.8);
        let mut stream = QuotientStream::new(
            |s| (theta - 2.0 + s as f64) * x / (s as f64 * (omega + s as f64 - 1.0)),
            |s| (theta - 1.0 + s as f64) * x / (s as f64 * (omega + s as f64 - 1.0)),
        );
        let streamed: Vec<f64> = (0..12).map(|_| stream.next_coeff()).collect();
        let mut a = vec![1.0];
        let mut b = vec![1.0];
        for s in 1..12 {
            let sf = s as f64;
            a.push(a[s - 1] * (theta - 2.0 + sf) * x / (sf * (omega + sf - 1.0)));
            b.push(b[s - 1] * (theta - 1.0 + sf) * x / (sf * (omega + sf - 1.0)));
        }
        let dense = series_quotient(&SeriesCoefficients::new(a), &SeriesCoefficients::new(b), 11).unwrap();
        for (u, v) in streamed.iter().zip(&dense.coeffs) {
            assert!((u - v).abs() <= 1e-13 * v.abs() + 1e-18, "{u} vs {v}");
        }
        assert_eq!(stream.len(), 12);
    }

    proptest! {
        #[test]
        fn quotient_inverts_multiplication(
            numer in prop::collection::vec(-3.0f64..3.0, 1..12),
            mut denom in prop::collection::vec(-3.0f64..3.0, 1..12),
            lead in 0.5f64..2.0,
        ) {
            denom[0] = lead;
            let n = numer.len().max(denom.len()) - 1;
            let a = SeriesCoefficients::new(numer);
            let b = SeriesCoefficients::new(denom);
            let c = series_quotient(&a, &b, n).unwrap();
            let back = c.convolve(&b, n);
            let scale: f64 = c.coeffs.iter().map(|v| v.abs()).fold(1.0, f64::max)
                * b.coeffs.iter().map(|v| v.abs()).fold(1.0, f64::max);
            for s in 0..=n {
                prop_assert!((back.coeffs[s] - a.get(s)).abs() <= 1e-12 * scale * (n as f64 + 1.0));
            }
        }
    }
}
