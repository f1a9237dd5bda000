//! Independent closed-form oracles shared by the integration tests.
#![allow(dead_code)]

/// `(beta0, omega, gamma0)` of the critical point for constant `mu` at `omega / beta0 = wt`.
pub fn constant_mu_setup(mu: f64, wt: f64) -> (f64, f64, f64) {
    let a = mu * (mu - 1.0).powi(2);
    let h = |x: f64| mu / x.tanh() + 1.0 / x.tanh();
    let hd = |x: f64| -mu / x.sinh().powi(2) - 1.0 / x.sinh().powi(2);
    let b = a / (2.0 * wt) * (h(wt) - wt * hd(wt)) / h(wt).powi(2);
    let w = wt * b;
    let g0 = (a / (w * h(wt)) - 1.0) * w * w;
    (b, w, g0)
}

fn c2(mu: f64, w: f64, g0: f64, t1: f64, t2: f64) -> f64 {
    1.0 / (2.0 * (mu * mu - 1.0) * w) / (2.0 * (g0 + w * w) * t2 / t1 - g0 - 4.0 * w * w)
}

fn c2_term(mu: f64, w: f64, g0: f64, t1: f64, t2: f64) -> f64 {
    -mu * c2(mu, w, g0, t1, t2)
        * ((8.0 * (mu + 1.0) * w * w * (4.0 * w * w + g0) / t2 - 4.0 * (mu * mu - 1.0).powi(2) * w.powi(3))
            * (1.0 - t1 * t2).powi(2)
            + w.powi(3)
                * (mu - 1.0).powi(4)
                * (2.0 * (1.0 + t1 * t1) * (1.0 - t1 * t2) - 0.25 * (1.0 + t1 * t1).powi(2)))
}

/// Closed-form `gamma2` for rolls with constant permeability `mu`.
pub fn gamma2_rolls(mu: f64, wt: f64) -> f64 {
    let (_, w, g0) = constant_mu_setup(mu, wt);
    let t1 = wt.tanh();
    let t2 = (2.0 * wt).tanh();
    let inner = c2_term(mu, w, g0, t1, t2)
        - mu * w * w / (4.0 * g0) * (mu - 1.0).powi(3) / (mu + 1.0) * (1.0 - t1 * t1).powi(2)
        - (mu + 1.0).powi(2) * w / (mu - 1.0) * t1 * (3.0 * w * w / (8.0 * (g0 + w * w)) - 1.5 + t1 * t2);
    -mu * (mu - 1.0) / (mu + 1.0) * w * w * inner
}

/// Closed-form `gamma2` for rectangles (squares) with constant permeability `mu`.
pub fn gamma2_rectangles(mu: f64, wt: f64) -> f64 {
    let (_, w, g0) = constant_mu_setup(mu, wt);
    let r2 = 2f64.sqrt();
    let t1 = wt.tanh();
    let t2 = (2.0 * wt).tanh();
    let tr = (r2 * wt).tanh();
    let cr = 1.0 / (r2 * (mu * mu - 1.0) * w) / (r2 * (w * w + g0) * tr / t1 - g0 - 2.0 * w * w);
    let inner = -mu
        * cr
        * ((8.0 * (mu + 1.0) * w * w * (2.0 * w * w + g0) / tr - 2.0 * r2 * (mu * mu - 1.0).powi(2) * w.powi(3))
            * (1.0 - r2 * t1 * tr).powi(2)
            - w.powi(3) * (mu - 1.0).powi(4) / 2.0 * r2 * (t1.powi(4) - 4.0 * t1 * t1 * (1.0 - r2 * t1 * tr)))
        + c2_term(mu, w, g0, t1, t2)
        - w * (mu + 1.0).powi(2) / (2.0 * (mu - 1.0))
            * t1
            * (5.0 * w * w / (4.0 * (g0 + w * w)) - 9.0 + 2.0 * t1 * t2 + 4.0 * r2 * t1 * tr)
        - w * w * mu * (mu - 1.0).powi(3) / (2.0 * g0 * (mu + 1.0)) * (1.0 - t1 * t1).powi(2);
    -mu * (mu - 1.0) / (mu + 1.0) * w * w * inner
}

/// Root of `f` in `[a, b]` by bisection.
pub fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

pub fn mu_c_rolls() -> f64 {
    21.0 / 11.0 + 8.0 / 11.0 * 5f64.sqrt()
}

pub fn mu_c_rectangles() -> f64 {
    let r2 = 2f64.sqrt();
    (115.0 + 160.0 * r2 + 8.0 * (184.0 + 11.0 * r2).sqrt()) / (141.0 + 128.0 * r2)
}
