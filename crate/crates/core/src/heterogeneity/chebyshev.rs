use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChebyshevMode {
    Forward,
    Middle,
    Inverse,
    /// Window starting at the given index.
    Offset(usize),
}

/// A window of `n` active terms inside a basis of `m` Chebyshev polynomials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChebyshevSpaceSpec {
    pub m: usize,
    pub n: usize,
    pub mode: ChebyshevMode,
}

impl ChebyshevSpaceSpec {
    pub const DEFAULT_M: usize = 10;

    pub fn new(m: usize, n: usize, mode: ChebyshevMode) -> Result<Self> {
        if n == 0 || n > m {
            return Err(Error::usage(format!("need 1 <= n <= M, got n = {n}, M = {m}")));
        }
        Ok(ChebyshevSpaceSpec { m, n, mode })
    }

    /// The whole space.
    pub fn full(m: usize) -> Self {
        ChebyshevSpaceSpec { m, n: m, mode: ChebyshevMode::Forward }
    }

    /// Window for client `k` of `clients`: forward for the first, inverse for
    /// the last, and evenly spread offsets in between (the middle window
    /// for three clients).
    pub fn for_client(m: usize, n: usize, k: usize, clients: usize) -> Result<Self> {
        if k >= clients {
            return Err(Error::usage(format!("client {k} out of range for {clients} clients")));
        }
        let mode = if k == 0 {
            ChebyshevMode::Forward
        } else if k + 1 == clients {
            ChebyshevMode::Inverse
        } else if clients == 3 {
            ChebyshevMode::Middle
        } else {
            ChebyshevMode::Offset(k * (m.saturating_sub(n)) / (clients - 1))
        };
        Self::new(m, n, mode)
    }
}

/// Inclusive index window `[lo, hi]`.
pub fn chebyshev_support(spec: &ChebyshevSpaceSpec) -> (usize, usize) {
    let (m, n) = (spec.m, spec.n.clamp(1, spec.m));
    let lo = match spec.mode {
        ChebyshevMode::Forward => 0,
        ChebyshevMode::Inverse => m - n,
        ChebyshevMode::Middle => (m - n) / 2,
        ChebyshevMode::Offset(s) => s.min(m - n),
    };
    (lo, lo + n - 1)
}

/// `p(x) = Σ a_i T_i(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebyshevFunction {
    pub coeffs: Vec<f64>,
}

impl ChebyshevFunction {
    pub fn new(coeffs: Vec<f64>) -> Self {
        ChebyshevFunction { coeffs }
    }

    /// Three-term recurrence, evaluated at `x` as given (no domain mapping).
    pub fn eval(&self, x: f64) -> f64 {
        let mut sum = 0.0;
        let (mut t_prev, mut t) = (1.0, x);
        for (k, &a) in self.coeffs.iter().enumerate() {
            let tk = match k {
                0 => 1.0,
                1 => x,
                _ => {
                    let next = 2.0 * x * t - t_prev;
                    t_prev = t;
                    t = next;
                    next
                }
            };
            sum += a * tk;
        }
        sum
    }

    /// Coefficients of `∫₀ˣ p`, in the monomial basis.
    pub fn antiderivative_poly(&self) -> Vec<f64> {
        let mono = self.monomial();
        let mut out = vec![0.0; mono.len() + 1];
        for (k, c) in mono.iter().enumerate() {
            out[k + 1] = c / (k + 1) as f64;
        }
        out
    }

    /// Monomial coefficients of the same polynomial.
    pub fn monomial(&self) -> Vec<f64> {
        let n = self.coeffs.len().max(1);
        let mut out = vec![0.0; n];
        let mut prev = vec![0.0; n];
        let mut cur = vec![0.0; n];
        for (k, &a) in self.coeffs.iter().enumerate() {
            let tk = match k {
                0 => {
                    cur[0] = 1.0;
                    cur.clone()
                }
                1 => {
                    prev = cur.clone();
                    cur = vec![0.0; n];
                    cur[1] = 1.0;
                    cur.clone()
                }
                _ => {
                    let mut next = vec![0.0; n];
                    for i in 0..n - 1 {
                        next[i + 1] += 2.0 * cur[i];
                    }
                    for i in 0..n {
                        next[i] -= prev[i];
                    }
                    prev = std::mem::replace(&mut cur, next);
                    cur.clone()
                }
            };
            for (o, t) in out.iter_mut().zip(&tk) {
                *o += a * t;
            }
        }
        out
    }
}

/// Horner evaluation of monomial coefficients.
pub fn horner_eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// `count` functions with coefficients uniform on `[-1,1]` inside the
/// support window and zero elsewhere.
pub fn sample_chebyshev<R: Rng>(spec: &ChebyshevSpaceSpec, rng: &mut R, count: usize) -> Vec<ChebyshevFunction> {
    let (lo, hi) = chebyshev_support(spec);
    (0..count)
        .map(|_| {
            let mut coeffs = vec![0.0; spec.m];
            for c in &mut coeffs[lo..=hi] {
                *c = rng.gen_range(-1.0..=1.0);
            }
            ChebyshevFunction { coeffs }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    fn unit(k: usize) -> ChebyshevFunction {
        let mut c = vec![0.0; 10];
        c[k] = 1.0;
        ChebyshevFunction::new(c)
    }

    #[test]
    fn windows() {
        let w = |n, mode| chebyshev_support(&ChebyshevSpaceSpec::new(10, n, mode).unwrap());
        assert_eq!(w(10, ChebyshevMode::Forward), (0, 9));
        assert_eq!(w(10, ChebyshevMode::Inverse), (0, 9));
        assert_eq!(w(3, ChebyshevMode::Inverse), (7, 9));
        assert_eq!(w(4, ChebyshevMode::Middle), (3, 6));
        assert_eq!(w(1, ChebyshevMode::Forward), (0, 0));
        assert!(ChebyshevSpaceSpec::new(10, 0, ChebyshevMode::Forward).is_err());
        assert!(ChebyshevSpaceSpec::new(10, 11, ChebyshevMode::Forward).is_err());
    }

    #[test]
    fn client_windows() {
        let s = |k, kk| chebyshev_support(&ChebyshevSpaceSpec::for_client(10, 4, k, kk).unwrap());
        assert_eq!(s(0, 2), (0, 3));
        assert_eq!(s(1, 2), (6, 9));
        assert_eq!(s(1, 3), (3, 6));
        assert_eq!(s(1, 4), (2, 5));
        assert_eq!(s(2, 4), (4, 7));
    }

    #[test]
    fn basis_values() {
        assert_eq!(unit(0).eval(0.37), 1.0);
        assert_eq!(unit(1).eval(0.5), 0.5);
        assert_eq!(unit(2).eval(0.5), -0.5);
    }

    #[test]
    fn recurrence_matches_trig_definition() {
        for k in 0..10 {
            for i in 0..=50 {
                let theta = std::f64::consts::PI * i as f64 / 50.0;
                let x = theta.cos();
                assert!((unit(k).eval(x) - (k as f64 * theta).cos()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn monomial_form_agrees() {
        let mut rng = stream(1, Stream::Sampling, 0);
        for f in sample_chebyshev(&ChebyshevSpaceSpec::full(10), &mut rng, 20) {
            let mono = f.monomial();
            for x in [0.0, 0.3, 0.77, 1.0] {
                assert!((horner_eval(&mono, x) - f.eval(x)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn sampling_respects_window_and_seed() {
        let spec = ChebyshevSpaceSpec::new(10, 3, ChebyshevMode::Inverse).unwrap();
        let a = sample_chebyshev(&spec, &mut stream(5, Stream::Sampling, 1), 30);
        let b = sample_chebyshev(&spec, &mut stream(5, Stream::Sampling, 1), 30);
        assert_eq!(a, b);
        for f in &a {
            assert!(f.coeffs[..7].iter().all(|&c| c == 0.0));
            assert!(f.coeffs[7..].iter().all(|&c| (-1.0..=1.0).contains(&c) && c != 0.0));
        }
    }
}
