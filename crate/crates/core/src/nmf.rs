//! Classic multiplicative-update NMF, used as a comparison baseline.
//!
//! Minimizes `½‖X − B·W‖²_F` with the alternating Lee–Seung updates
//!
//! ```text
//! W ← W ⊙ (BᵀX) ⊘ max(BᵀBW, ε)
//! B ← B ⊙ (XWᵀ) ⊘ max(BWWᵀ, ε)
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

const DENOMINATOR_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct NmfResult {
    /// m×r basis.
    pub b: Matrix,
    /// r×n coefficients.
    pub w: Matrix,
    /// `½‖X − BW‖²_F` after each iteration.
    pub objective_per_iter: Vec<f64>,
}

impl NmfResult {
    pub fn reconstruction(&self) -> Matrix {
        self.b
            .matmul(&self.w)
            .expect("factor shapes are conformant")
    }
}

fn half_sq_error(x: &Matrix, b: &Matrix, w: &Matrix) -> Result<f64> {
    let d = x.frobenius_distance(&b.matmul(w)?)?;
    Ok(0.5 * d * d)
}

fn multiplicative(factor: &Matrix, numer: &Matrix, denom: &Matrix) -> Matrix {
    let data = factor
        .data()
        .iter()
        .zip(numer.data())
        .zip(denom.data())
        .map(|((&f, &n), &d)| f * n / d.max(DENOMINATOR_FLOOR))
        .collect();
    Matrix::new(factor.rows(), factor.cols(), data).expect("same shape as factor")
}

pub fn nmf_multiplicative(x: &Matrix, r: usize, iters: usize, seed: u64) -> Result<NmfResult> {
    let (m, n) = x.shape();
    if x.min() < 0.0 {
        return Err(Error::Domain(
            "NMF input must be entrywise non-negative".into(),
        ));
    }
    if r == 0 || r > m.min(n) {
        return Err(Error::Parameter(format!(
            "rank r must lie in [1, {}], got {r}",
            m.min(n)
        )));
    }
    if iters == 0 {
        return Err(Error::Parameter(
            "iteration count must be at least 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // uniform on (0, 1]
    let mut b = Matrix::from_fn(m, r, |_, _| 1.0 - rng.random::<f64>());
    let mut w = Matrix::from_fn(r, n, |_, _| 1.0 - rng.random::<f64>());

    let mut objective = Vec::with_capacity(iters);
    for _ in 0..iters {
        let bt = b.transpose();
        let numer = bt.matmul(x)?;
        let denom = bt.matmul(&b)?.matmul(&w)?;
        w = multiplicative(&w, &numer, &denom);

        let wt = w.transpose();
        let numer = x.matmul(&wt)?;
        let denom = b.matmul(&w.matmul(&wt)?)?;
        b = multiplicative(&b, &numer, &denom);

        objective.push(half_sq_error(x, &b, &w)?);
    }
    Ok(NmfResult {
        b,
        w,
        objective_per_iter: objective,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_rank_one() {
        let x = Matrix::from_rows(&[[3.0, 4.0], [6.0, 8.0]]).unwrap();
        let res = nmf_multiplicative(&x, 1, 500, 0).unwrap();
        let rel = x.frobenius_distance(&res.reconstruction()).unwrap() / x.frobenius_norm();
        assert!(rel < 1e-3, "relative error {rel}");
    }

    #[test]
    fn zero_input_collapses() {
        let x = Matrix::zeros(4, 3);
        let res = nmf_multiplicative(&x, 2, 20, 1).unwrap();
        assert_eq!(*res.objective_per_iter.last().unwrap(), 0.0);
        assert!(res.reconstruction().data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn monotone_and_non_negative_on_random_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let x = Matrix::from_fn(20, 10, |_, _| rng.random::<f64>());
        let res = nmf_multiplicative(&x, 4, 200, 7).unwrap();
        assert!(res.b.min() >= 0.0 && res.w.min() >= 0.0);
        for pair in res.objective_per_iter.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-10, "{} -> {}", pair[0], pair[1]);
        }
        assert_eq!(res, nmf_multiplicative(&x, 4, 200, 7).unwrap());
    }

    #[test]
    fn argument_errors() {
        let x = Matrix::ones(3, 4);
        assert!(matches!(
            nmf_multiplicative(&x, 0, 10, 0),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            nmf_multiplicative(&x, 4, 10, 0),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            nmf_multiplicative(&x, 2, 0, 0),
            Err(Error::Parameter(_))
        ));
        let neg = Matrix::from_rows(&[[1.0, -1.0]]).unwrap();
        assert!(matches!(
            nmf_multiplicative(&neg, 1, 10, 0),
            Err(Error::Domain(_))
        ));
    }
}
