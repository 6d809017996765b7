//! Weighted ridge regression with an unpenalized intercept.

use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Surrogate {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    /// Weighted coefficient of determination on the fitting samples.
    pub fidelity_r2: f64,
}

/// Minimizes `Σ w_s (y_s − β·m_s − β₀)² + λ‖β‖²` over binary masks.
///
/// Solves the `(n + 1)`-dimensional normal equations directly. With
/// `lambda == 0` a rank-deficient design is reported as
/// [`Error::SingularSystem`].
pub fn fit_surrogate(
    masks: &[Vec<bool>],
    targets: &[f64],
    sample_weights: &[f64],
    lambda: f64,
) -> Result<Surrogate> {
    let n_samples = masks.len();
    if n_samples != targets.len() || n_samples != sample_weights.len() {
        return Err(Error::Config(
            "masks, targets and weights must have equal length".into(),
        ));
    }
    let distinct: std::collections::HashSet<&Vec<bool>> = masks.iter().collect();
    if distinct.len() < 2 {
        return Err(Error::EmptyInput("surrogate fit needs at least two distinct masks"));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::Config("ridge_lambda must be >= 0".into()));
    }
    let n = masks[0].len();
    let dim = n + 1;
    // Row 0 / column 0 belong to the intercept.
    let mut gram = vec![vec![0.0; dim]; dim];
    let mut rhs = vec![0.0; dim];
    for ((mask, &y), &w) in masks.iter().zip(targets).zip(sample_weights) {
        let active: Vec<usize> = std::iter::once(0)
            .chain(mask.iter().enumerate().filter(|(_, &m)| m).map(|(j, _)| j + 1))
            .collect();
        for &a in &active {
            rhs[a] += w * y;
            for &b in &active {
                gram[a][b] += w;
            }
        }
    }
    for (j, row) in gram.iter_mut().enumerate().skip(1) {
        row[j] += lambda;
    }
    let solution = solve(gram, rhs)?;

    let intercept = solution[0];
    let coefficients = solution[1..].to_vec();
    let total_weight: f64 = sample_weights.iter().sum();
    let mean = targets
        .iter()
        .zip(sample_weights)
        .map(|(y, w)| y * w)
        .sum::<f64>()
        / total_weight;
    let (mut sse, mut sst) = (0.0, 0.0);
    for ((mask, &y), &w) in masks.iter().zip(targets).zip(sample_weights) {
        let fitted = intercept
            + mask
                .iter()
                .zip(&coefficients)
                .filter(|(&m, _)| m)
                .map(|(_, c)| c)
                .sum::<f64>();
        sse += w * (y - fitted).powi(2);
        sst += w * (y - mean).powi(2);
    }
    let fidelity_r2 = if sst <= f64::MIN_POSITIVE {
        1.0
    } else {
        1.0 - sse / sst
    };
    Ok(Surrogate {
        coefficients,
        intercept,
        fidelity_r2,
    })
}

/// Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    let scale = (0..n).map(|i| a[i][i].abs()).fold(0.0, f64::max).max(1.0);
    let tolerance = scale * 1e-12;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[pivot][col].abs() <= tolerance {
            return Err(Error::SingularSystem);
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            let (upper, lower) = a.split_at_mut(row);
            for (target, &source) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                *target -= factor * source;
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Ok(x)
}
