//! Real polynomials with companion-matrix root extraction.
//!
//! Coefficients are stored in ascending order of degree. Real roots are
//! the companion-matrix eigenvalues whose imaginary part is below
//! `1e-8 * (1 + |re|)`, each polished by two Newton steps.

use crate::error::Result;
use crate::linalg::hessenberg_eigenvalues;
use crate::tensor::Matrix;

/// Relative imaginary-part tolerance for accepting an eigenvalue as a
/// real root.
pub const IMAG_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    /// coeffs[k] multiplies x^k
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Polynomial { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Degree after stripping leading coefficients that are negligible
    /// relative to the largest one.
    pub fn effective_degree(&self) -> usize {
        let max_abs = self.coeffs.iter().fold(0.0f64, |acc, c| acc.max(c.abs()));
        if max_abs == 0.0 {
            return 0;
        }
        let tol = 1e-14 * max_abs;
        let mut d = self.coeffs.len().saturating_sub(1);
        while d > 0 && self.coeffs[d].abs() <= tol {
            d -= 1;
        }
        d
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Polynomial {
        if self.coeffs.len() <= 1 {
            return Polynomial::new(vec![0.0]);
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| k as f64 * c)
            .collect();
        Polynomial::new(coeffs)
    }

    /// All real roots (by the companion-matrix criterion), unsorted,
    /// possibly with multiplicity collapsed by the eigen-solver only.
    pub fn real_roots(&self) -> Result<Vec<f64>> {
        let d = self.effective_degree();
        if d == 0 {
            return Ok(Vec::new());
        }
        if d == 1 {
            return Ok(vec![-self.coeffs[0] / self.coeffs[1]]);
        }
        if d == 2 {
            let (c, b, a) = (self.coeffs[0], self.coeffs[1], self.coeffs[2]);
            let disc = b * b - 4.0 * a * c;
            if disc < 0.0 {
                return Ok(Vec::new());
            }
            let sq = disc.sqrt();
            // numerically stable quadratic formula
            let q = -0.5 * (b + b.signum() * sq);
            let mut roots = vec![q / a];
            if q != 0.0 {
                roots.push(c / q);
            } else {
                roots.push(0.0);
            }
            return Ok(self.polish(roots));
        }
        // monic companion matrix, already upper Hessenberg
        let lead = self.coeffs[d];
        let mut comp = Matrix::zeros(d, d);
        for i in 1..d {
            comp.set(i, i - 1, 1.0);
        }
        for i in 0..d {
            comp.set(i, d - 1, -self.coeffs[i] / lead);
        }
        let eig = hessenberg_eigenvalues(&comp)?;
        let roots = eig
            .into_iter()
            .filter(|&(re, im)| im.abs() <= IMAG_TOL * (1.0 + re.abs()))
            .map(|(re, _)| re)
            .collect();
        Ok(self.polish(roots))
    }

    fn polish(&self, roots: Vec<f64>) -> Vec<f64> {
        let dp = self.derivative();
        roots
            .into_iter()
            .map(|mut x| {
                for _ in 0..2 {
                    let d = dp.eval(x);
                    if d.abs() < 1e-300 {
                        break;
                    }
                    let step = self.eval(x) / d;
                    if !step.is_finite() {
                        break;
                    }
                    let next = x - step;
                    // keep the polish local; a diverging Newton step means
                    // the eigenvalue was already the better estimate
                    if (next - x).abs() > 1.0 + x.abs() {
                        break;
                    }
                    x = next;
                }
                x
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand::Rng;

    fn from_roots(roots: &[f64]) -> Polynomial {
        let mut coeffs = vec![1.0];
        for &r in roots {
            let mut next = vec![0.0; coeffs.len() + 1];
            for (k, &c) in coeffs.iter().enumerate() {
                next[k + 1] += c;
                next[k] -= r * c;
            }
            coeffs = next;
        }
        Polynomial::new(coeffs)
    }

    #[test]
    fn recovers_known_roots() {
        let p = from_roots(&[-3.0, 1.0, 2.0]);
        let mut roots = p.real_roots().unwrap();
        roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(roots.len(), 3);
        for (got, want) in roots.iter().zip([-3.0, 1.0, 2.0]) {
            assert!((got - want).abs() < 1e-10);
        }
    }

    #[test]
    fn random_degree6_roots_are_roots() {
        let mut rng = stream(5, &[]);
        for _ in 0..200 {
            let roots: Vec<f64> = (0..6).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let p = from_roots(&roots);
            let got = p.real_roots().unwrap();
            assert_eq!(got.len(), 6, "lost roots: {:?}", got);
            let scale: f64 = p.coeffs().iter().fold(0.0f64, |a, c| a.max(c.abs()));
            for &x in &got {
                assert!(
                    p.eval(x).abs() < 1e-7 * scale.max(1.0),
                    "p({}) = {}",
                    x,
                    p.eval(x)
                );
            }
        }
    }

    #[test]
    fn complex_roots_are_rejected() {
        // (x^2 + 1)(x - 1) has one real root
        let p = Polynomial::new(vec![-1.0, 1.0, -1.0, 1.0]);
        let roots = p.real_roots().unwrap();
        assert_eq!(roots.len(), 1);
        assert!((roots[0] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn degenerate_degrees() {
        assert!(Polynomial::new(vec![3.0]).real_roots().unwrap().is_empty());
        let lin = Polynomial::new(vec![2.0, -4.0]);
        assert_eq!(lin.real_roots().unwrap(), vec![0.5]);
        let quad = Polynomial::new(vec![-1.0, 0.0, 1.0]);
        let mut r = quad.real_roots().unwrap();
        r.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((r[0] + 1.0).abs() < 1e-14 && (r[1] - 1.0).abs() < 1e-14);
        // leading-zero stripping: 0*x^3 + x^2 - 1
        let padded = Polynomial::new(vec![-1.0, 0.0, 1.0, 0.0]);
        assert_eq!(padded.effective_degree(), 2);
        assert_eq!(padded.real_roots().unwrap().len(), 2);
    }
}
