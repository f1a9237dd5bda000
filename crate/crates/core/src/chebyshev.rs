//! Chebyshev-Lobatto nodes and differentiation matrices.

use nalgebra::DMatrix;

/// Nodes `x_j = cos(pi j / n)`, `j = 0..=n`, ordered from `1` down to `-1`.
pub fn nodes(n: usize) -> Vec<f64> {
    (0..=n)
        .map(|j| {
            // Symmetric sine form keeps the nodes exactly antisymmetric.
            (std::f64::consts::PI * (n as f64 - 2.0 * j as f64) / (2.0 * n as f64)).sin()
        })
        .collect()
}

/// Differentiation matrix on [`nodes`], with the diagonal fixed by the
/// negative-sum trick.
pub fn diff_matrix(n: usize) -> DMatrix<f64> {
    let x = nodes(n);
    let c = |j: usize| -> f64 {
        let w = if j == 0 || j == n { 2.0 } else { 1.0 };
        if j % 2 == 0 {
            w
        } else {
            -w
        }
    };
    let mut d = DMatrix::<f64>::zeros(n + 1, n + 1);
    for i in 0..=n {
        for j in 0..=n {
            if i != j {
                d[(i, j)] = c(i) / c(j) / (x[i] - x[j]);
            }
        }
    }
    for i in 0..=n {
        let s: f64 = (0..=n).filter(|&j| j != i).map(|j| d[(i, j)]).sum();
        d[(i, i)] = -s;
    }
    d
}

/// Clenshaw-Curtis quadrature weights on [`nodes`] for `[-1, 1]`.
pub fn clenshaw_curtis_weights(n: usize) -> Vec<f64> {
    let theta: Vec<f64> = (0..=n)
        .map(|j| std::f64::consts::PI * j as f64 / n as f64)
        .collect();
    let mut w = vec![0.0; n + 1];
    let interior: Vec<usize> = (1..n).collect();
    let mut v = vec![1.0; n.saturating_sub(1)];
    if n % 2 == 0 {
        w[0] = 1.0 / ((n * n) as f64 - 1.0);
        w[n] = w[0];
        for k in 1..n / 2 {
            for (vi, &j) in v.iter_mut().zip(&interior) {
                *vi -= 2.0 * (2.0 * k as f64 * theta[j]).cos() / (4.0 * (k * k) as f64 - 1.0);
            }
        }
        for (vi, &j) in v.iter_mut().zip(&interior) {
            *vi -= (n as f64 * theta[j]).cos() / ((n * n) as f64 - 1.0);
        }
    } else {
        w[0] = 1.0 / (n * n) as f64;
        w[n] = w[0];
        for k in 1..=(n - 1) / 2 {
            for (vi, &j) in v.iter_mut().zip(&interior) {
                *vi -= 2.0 * (2.0 * k as f64 * theta[j]).cos() / (4.0 * (k * k) as f64 - 1.0);
            }
        }
    }
    for (vi, &j) in v.iter().zip(&interior) {
        w[j] = 2.0 * vi / n as f64;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn differentiates_polynomials_exactly() {
        let n = 12;
        let x = nodes(n);
        let d = diff_matrix(n);
        let f: Vec<f64> = x.iter().map(|t| t.powi(5) - 3.0 * t * t).collect();
        for i in 0..=n {
            let df: f64 = (0..=n).map(|j| d[(i, j)] * f[j]).sum();
            let exact = 5.0 * x[i].powi(4) - 6.0 * x[i];
            assert!((df - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn spectral_accuracy_on_exponential() {
        let n = 24;
        let x = nodes(n);
        let d = diff_matrix(n);
        for i in 0..=n {
            let df: f64 = (0..=n).map(|j| d[(i, j)] * (3.0 * x[j]).exp()).sum();
            assert!((df - 3.0 * (3.0 * x[i]).exp()).abs() < 1e-10);
        }
    }

    #[test]
    fn quadrature_weights_integrate_polynomials() {
        for n in [8, 9, 16] {
            let x = nodes(n);
            let w = clenshaw_curtis_weights(n);
            let total: f64 = w.iter().sum();
            assert!((total - 2.0).abs() < 1e-14);
            let q: f64 = x.iter().zip(&w).map(|(t, wi)| wi * t.powi(4)).sum();
            assert!((q - 0.4).abs() < 1e-14);
        }
    }
}
