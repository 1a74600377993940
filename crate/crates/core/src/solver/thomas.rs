//! Tridiagonal solves (the sweep / Thomas algorithm).

use crate::{Error, Result};

/// Relative size below which an elimination pivot counts as zero.
const PIVOT_TOLERANCE: f64 = 1e-14;

/// Factored tridiagonal matrix, reusable across right-hand sides.
///
/// `lower[i]` couples row `i + 1` to column `i`, `upper[i]` couples row `i`
/// to column `i + 1`; both have length `n - 1`.
#[derive(Debug, Clone)]
pub struct TridiagonalLu {
    lower: Vec<f64>,
    // 1 / pivot
    inv_pivot: Vec<f64>,
    // upper[i] / pivot[i]
    upper_scaled: Vec<f64>,
}

impl TridiagonalLu {
    pub fn factor(lower: &[f64], diag: &[f64], upper: &[f64]) -> Result<Self> {
        let n = diag.len();
        if n == 0 {
            return Err(Error::InvalidGrid("empty tridiagonal system".into()));
        }
        for (what, len) in [("lower diagonal", lower.len()), ("upper diagonal", upper.len())] {
            if len != n - 1 {
                return Err(Error::LengthMismatch {
                    what,
                    expected: n - 1,
                    got: len,
                });
            }
        }
        let mut inv_pivot = vec![0.0; n];
        let mut upper_scaled = vec![0.0; n.saturating_sub(1)];
        for i in 0..n {
            let correction = if i > 0 { lower[i - 1] * upper_scaled[i - 1] } else { 0.0 };
            let pivot = diag[i] - correction;
            let scale = diag[i].abs() + correction.abs();
            if !pivot.is_finite() || pivot.abs() <= PIVOT_TOLERANCE * scale {
                return Err(Error::SingularSystem { row: i, pivot });
            }
            inv_pivot[i] = 1.0 / pivot;
            if i + 1 < n {
                upper_scaled[i] = upper[i] * inv_pivot[i];
            }
        }
        Ok(Self {
            lower: lower.to_vec(),
            inv_pivot,
            upper_scaled,
        })
    }

    pub fn len(&self) -> usize {
        self.inv_pivot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inv_pivot.is_empty()
    }

    /// Solves in place: `x` holds the right-hand side on entry.
    pub fn solve_in_place(&self, x: &mut [f64]) -> Result<()> {
        let n = self.len();
        if x.len() != n {
            return Err(Error::LengthMismatch {
                what: "right-hand side",
                expected: n,
                got: x.len(),
            });
        }
        x[0] *= self.inv_pivot[0];
        for i in 1..n {
            x[i] = (x[i] - self.lower[i - 1] * x[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            x[i] -= self.upper_scaled[i] * x[i + 1];
        }
        Ok(())
    }
}

/// Solves a tridiagonal system by forward elimination and back substitution.
pub fn thomas_solve(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let lu = TridiagonalLu::factor(lower, diag, upper)?;
    let mut x = rhs.to_vec();
    lu.solve_in_place(&mut x)?;
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
                .unwrap();
            a.swap(col, piv);
            b.swap(col, piv);
            for row in col + 1..n {
                let f = a[row][col] / a[col][col];
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
            x[i] = (b[i] - s) / a[i][i];
        }
        x
    }

    #[test]
    fn identity_returns_rhs() {
        let rhs = vec![1.5, -2.0, 3.25, 0.0];
        let x = thomas_solve(&[0.0; 3], &[1.0; 4], &[0.0; 3], &rhs).unwrap();
        assert_eq!(x, rhs);
    }

    #[test]
    fn two_by_two() {
        let x = thomas_solve(&[1.0], &[2.0, 2.0], &[1.0], &[3.0, 3.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_pivot_detected() {
        let err = thomas_solve(&[1.0], &[1.0, 1.0], &[1.0], &[1.0, 2.0]).unwrap_err();
        assert!(matches!(err, Error::SingularSystem { row: 1, .. }));
        let err = thomas_solve(&[1.0], &[0.0, 1.0], &[1.0], &[1.0, 2.0]).unwrap_err();
        assert!(matches!(err, Error::SingularSystem { row: 0, .. }));
    }

    #[test]
    fn length_mismatch() {
        assert!(thomas_solve(&[1.0, 1.0], &[2.0, 2.0], &[1.0], &[1.0, 1.0]).is_err());
        assert!(thomas_solve(&[1.0], &[2.0, 2.0], &[1.0], &[1.0]).is_err());
    }

    #[test]
    fn random_dominant_matches_dense_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let n = 100;
        let lower: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let upper: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let diag: Vec<f64> = (0..n).map(|_| rng.gen_range(2.5..4.0)).collect();
        let rhs: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let mut dense = vec![vec![0.0; n]; n];
        for i in 0..n {
            dense[i][i] = diag[i];
            if i + 1 < n {
                dense[i][i + 1] = upper[i];
                dense[i + 1][i] = lower[i];
            }
        }
        let x = thomas_solve(&lower, &diag, &upper, &rhs).unwrap();
        let y = dense_solve(dense, rhs);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0));
        }
    }

    proptest! {
        #[test]
        fn residual_small_for_dominant_systems(
            seed in any::<u64>(),
            n in 2usize..60,
        ) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let lower: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let upper: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let diag: Vec<f64> = (0..n).map(|_| rng.gen_range(2.1..3.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 }).collect();
            let rhs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let x = thomas_solve(&lower, &diag, &upper, &rhs).unwrap();
            for i in 0..n {
                let mut r = diag[i] * x[i] - rhs[i];
                if i > 0 { r += lower[i - 1] * x[i - 1]; }
                if i + 1 < n { r += upper[i] * x[i + 1]; }
                prop_assert!(r.abs() < 1e-12);
            }
        }
    }
}
