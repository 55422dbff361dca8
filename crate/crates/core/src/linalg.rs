//! Tiny dense helpers for the fixed-size matrices that show up in the analysis.

/// Outcome of [`power_iteration`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerIteration<const N: usize> {
    pub value: f64,
    pub vector: [f64; N],
    pub iterations: usize,
    pub converged: bool,
}

/// Dominant eigenpair of a nonnegative matrix by power iteration.
///
/// The iterate is kept at unit 1-norm; the eigenvalue estimate is the 1-norm
/// growth factor, which is exact at a positive eigenvector. Stops when the
/// estimate changes by less than `rel_tol` relative to itself.
pub fn power_iteration<const N: usize>(
    m: &[[f64; N]; N],
    start: [f64; N],
    rel_tol: f64,
    max_iter: usize,
) -> PowerIteration<N> {
    let norm = |x: &[f64; N]| x.iter().map(|v| v.abs()).sum::<f64>();
    let mut x = start;
    let s = norm(&x);
    x.iter_mut().for_each(|v| *v /= s);
    let mut value = f64::NAN;
    for it in 1..=max_iter {
        let mut y = [0.0; N];
        for (i, row) in m.iter().enumerate() {
            y[i] = row.iter().zip(&x).map(|(a, b)| a * b).sum();
        }
        let growth = norm(&y);
        if growth == 0.0 {
            return PowerIteration { value: 0.0, vector: x, iterations: it, converged: true };
        }
        y.iter_mut().for_each(|v| *v /= growth);
        let delta = (growth - value).abs();
        value = growth;
        x = y;
        if delta <= rel_tol * growth.abs() {
            return PowerIteration { value, vector: x, iterations: it, converged: true };
        }
    }
    PowerIteration { value, vector: x, iterations: max_iter, converged: false }
}

/// Maximum absolute column sum.
pub fn norm_one(m: &[Vec<f64>]) -> f64 {
    let cols = m.first().map_or(0, Vec::len);
    (0..cols).map(|j| m.iter().map(|row| row[j].abs()).sum::<f64>()).fold(0.0, f64::max)
}

pub fn norm_frobenius(m: &[Vec<f64>]) -> f64 {
    m.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_iteration_on_diagonal() {
        let m = [[3.0, 0.0], [0.0, 1.0]];
        let r = power_iteration(&m, [1.0, 1.0], 1e-14, 10_000);
        assert!(r.converged);
        assert!((r.value - 3.0).abs() < 1e-12);
    }

    #[test]
    fn power_iteration_positive_3x3() {
        // upper triangular, spectrum {4, 2, 1}, dominant eigenvector e1
        let m = [[4.0, 1.0, 0.0], [0.0, 2.0, 1.0], [0.0, 0.0, 1.0]];
        let r = power_iteration(&m, [1.0, 1.0, 1.0], 1e-15, 10_000);
        assert!((r.value - 4.0).abs() < 1e-12);
        assert!((r.vector[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn norms() {
        let m = vec![vec![1.0, -2.0], vec![3.0, 0.5]];
        assert_eq!(norm_one(&m), 4.0);
        assert!((norm_frobenius(&m) - (1.0f64 + 4.0 + 9.0 + 0.25).sqrt()).abs() < 1e-15);
    }
}
