//! Restarted GMRES for real vectors with right preconditioning.

#[derive(Debug, Clone, Copy)]
pub struct GmresOptions {
    pub restart: usize,
    pub max_iterations: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for GmresOptions {
    fn default() -> Self {
        GmresOptions {
            restart: 40,
            max_iterations: 200,
            rel_tol: 1e-10,
            abs_tol: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GmresOutcome {
    pub x: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `A x = b` with `A` applied through `apply` and the right
/// preconditioner `precond` (approximating `A^{-1}`), starting from zero.
pub fn gmres(
    apply: &mut dyn FnMut(&[f64]) -> Vec<f64>,
    precond: &mut dyn FnMut(&[f64]) -> Vec<f64>,
    b: &[f64],
    opts: GmresOptions,
) -> GmresOutcome {
    let n = b.len();
    let mut x = vec![0.0; n];
    let bnorm = norm(b);
    let target = (opts.rel_tol * bnorm).max(opts.abs_tol);
    if bnorm == 0.0 {
        return GmresOutcome {
            x,
            residual: 0.0,
            iterations: 0,
            converged: true,
        };
    }
    let mut r = b.to_vec();
    let mut beta = bnorm;
    let mut total = 0;
    while total < opts.max_iterations {
        let m = opts.restart.min(opts.max_iterations - total);
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|t| t / beta).collect()];
        let mut z: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut h = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..m {
            let zk = precond(&v[k]);
            let mut w = apply(&zk);
            z.push(zk);
            for i in 0..=k {
                h[i][k] = dot(&w, &v[i]);
                for (wj, vj) in w.iter_mut().zip(&v[i]) {
                    *wj -= h[i][k] * vj;
                }
            }
            // Second Gram-Schmidt pass for orthogonality.
            for i in 0..=k {
                let c = dot(&w, &v[i]);
                h[i][k] += c;
                for (wj, vj) in w.iter_mut().zip(&v[i]) {
                    *wj -= c * vj;
                }
            }
            h[k + 1][k] = norm(&w);
            for i in 0..k {
                let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let den = h[k][k].hypot(h[k + 1][k]);
            if den == 0.0 {
                cs[k] = 1.0;
                sn[k] = 0.0;
            } else {
                cs[k] = h[k][k] / den;
                sn[k] = h[k + 1][k] / den;
            }
            let hk1 = h[k + 1][k];
            h[k][k] = cs[k] * h[k][k] + sn[k] * hk1;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            total += 1;
            k_used = k + 1;
            let wn = norm(&w);
            if g[k + 1].abs() <= target || wn == 0.0 {
                break;
            }
            v.push(w.iter().map(|t| t / wn).collect());
        }
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let s: f64 = (i + 1..k_used).map(|j| h[i][j] * y[j]).sum();
            y[i] = if h[i][i] != 0.0 { (g[i] - s) / h[i][i] } else { 0.0 };
        }
        for (i, yi) in y.iter().enumerate() {
            for (xj, zj) in x.iter_mut().zip(&z[i]) {
                *xj += yi * zj;
            }
        }
        let ax = apply(&x);
        r = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        beta = norm(&r);
        if beta <= target {
            return GmresOutcome {
                x,
                residual: beta,
                iterations: total,
                converged: true,
            };
        }
    }
    GmresOutcome {
        x,
        residual: beta,
        iterations: total,
        converged: beta <= target,
    }
}
