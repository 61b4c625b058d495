use serde::{Deserialize, Serialize};

use super::{AhpError, JudgmentMatrix};

/// Dominant eigenpair found by power iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenResult {
    pub lambda_max: f64,
    /// Componentwise positive, scaled so the largest component is 1.
    pub vector: Vec<f64>,
    pub iterations: usize,
    /// ‖M·v − λ·v‖∞ / ‖v‖∞ at the returned pair.
    pub residual: f64,
}

/// Power iteration from the all-ones vector.
///
/// A positive matrix has a simple dominant eigenvalue with a positive
/// eigenvector, so the iteration converges for every valid judgment matrix.
/// λ is estimated as the mean of the componentwise ratios (M·v)ᵢ / vᵢ.
pub fn principal_eigen(
    m: &JudgmentMatrix,
    tol: f64,
    max_iter: usize,
) -> Result<EigenResult, AhpError> {
    principal_eigen_from(m, &vec![1.0; m.order()], tol, max_iter)
}

/// Power iteration from a caller-supplied positive start vector.
pub fn principal_eigen_from(
    m: &JudgmentMatrix,
    start: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<EigenResult, AhpError> {
    let n = m.order();
    if tol.is_nan() || tol <= 0.0 {
        return Err(AhpError::InvalidInput(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    if start.len() != n || start.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(AhpError::InvalidInput(
            "start vector must have one positive entry per criterion".into(),
        ));
    }

    let mut v = start.to_vec();
    let mut residual = f64::INFINITY;
    for iteration in 0..=max_iter {
        let w = m.mul_vec(&v);
        let lambda = w.iter().zip(&v).map(|(wi, vi)| wi / vi).sum::<f64>() / n as f64;
        let v_norm = max_abs(&v);
        residual = w
            .iter()
            .zip(&v)
            .map(|(wi, vi)| (wi - lambda * vi).abs())
            .fold(0.0, f64::max)
            / v_norm;
        if residual <= tol {
            let vector = v.iter().map(|x| x / v_norm).collect();
            return Ok(EigenResult {
                lambda_max: lambda,
                vector,
                iterations: iteration,
                residual,
            });
        }
        if iteration == max_iter {
            break;
        }
        let w_norm = max_abs(&w);
        v = w.into_iter().map(|x| x / w_norm).collect();
    }
    Err(AhpError::NonConvergence {
        iterations: max_iter,
        residual,
    })
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn consistent_three_by_three() {
        let m = JudgmentMatrix::from_rows(vec![vec![1.0; 3]; 3]).unwrap();
        let e = principal_eigen(&m, 1e-10, 10_000).unwrap();
        assert_abs_diff_eq!(e.lambda_max, 3.0, epsilon = 1e-12);
        assert_eq!(e.vector, vec![1.0, 1.0, 1.0]);
        assert_eq!(e.iterations, 0);
    }

    #[test]
    fn reciprocal_two_by_two() {
        let m = JudgmentMatrix::from_rows(vec![vec![1.0, 4.0], vec![0.25, 1.0]]).unwrap();
        let e = principal_eigen(&m, 1e-10, 10_000).unwrap();
        assert_abs_diff_eq!(e.lambda_max, 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(e.vector[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.vector[1], 0.25, epsilon = 1e-10);
    }

    #[test]
    fn residual_bound_holds() {
        let m = JudgmentMatrix::from_rows(vec![
            vec![1.0, 3.0, 5.0],
            vec![1.0 / 3.0, 1.0, 2.0],
            vec![0.2, 0.5, 1.0],
        ])
        .unwrap();
        let e = principal_eigen(&m, 1e-10, 10_000).unwrap();
        assert!(e.residual <= 1e-10);
        let mv = m.mul_vec(&e.vector);
        for (a, b) in mv.iter().zip(&e.vector) {
            assert!((a - e.lambda_max * b).abs() <= 1e-10);
        }
        assert!(e.lambda_max >= 3.0 - 1e-8);
    }

    #[test]
    fn iteration_budget_exhausted() {
        let m = JudgmentMatrix::from_rows(vec![
            vec![1.0, 9.0, 0.2],
            vec![1.0 / 9.0, 1.0, 7.0],
            vec![5.0, 1.0 / 7.0, 1.0],
        ])
        .unwrap();
        match principal_eigen(&m, 1e-10, 1) {
            Err(AhpError::NonConvergence { iterations, residual }) => {
                assert_eq!(iterations, 1);
                assert!(residual.is_finite() && residual > 1e-10);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_settings() {
        let m = JudgmentMatrix::from_rows(vec![vec![1.0; 2]; 2]).unwrap();
        assert!(principal_eigen(&m, 0.0, 10).is_err());
        assert!(principal_eigen_from(&m, &[1.0, 0.0], 1e-10, 10).is_err());
    }

    #[test]
    fn deterministic() {
        let m = JudgmentMatrix::from_rows(vec![
            vec![1.0, 2.0, 7.0],
            vec![0.5, 1.0, 3.0],
            vec![1.0 / 7.0, 1.0 / 3.0, 1.0],
        ])
        .unwrap();
        let a = principal_eigen(&m, 1e-10, 10_000).unwrap();
        let b = principal_eigen(&m, 1e-10, 10_000).unwrap();
        assert_eq!(a, b);
    }
}
