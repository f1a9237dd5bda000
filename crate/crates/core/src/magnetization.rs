//! Magnetisation laws `mu(s)`, their derivatives at `s = 1`, the potential
//! `M(s) = int_0^s t mu(t) dt` and the Taylor forms of
//! `nu(T) = mu(|T + e_y|)` about `T = 0`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Taylor coefficients of `coth x - 1/x`, i.e. `2^{2n} B_{2n} / (2n)!` for
/// `n = 1, 2, ...`, so that `(coth x - 1/x) / x = sum_n c_n x^{2n-2}`.
const COTH_SERIES: [f64; 12] = [
    1.0 / 3.0,
    -1.0 / 45.0,
    2.0 / 945.0,
    -1.0 / 4725.0,
    2.0 / 93555.0,
    -1382.0 / 638512875.0,
    4.0 / 18243225.0,
    -3617.0 / 162820783125.0,
    2.2507846516808994e-09,
    -2.2805151204592183e-10,
    2.3106432599002624e-11,
    -2.3411706819824882e-12,
];

const SERIES_SWITCH: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MagnetizationLaw {
    /// Linearly magnetisable fluid, `mu(s) = mu`.
    Constant { mu: f64 },
    /// `mu(s) = 1 + (M/s)(coth(gamma s) - 1/(gamma s))`.
    Langevin { m: f64, gamma: f64 },
    /// `mu(s) = sum_i c_i (s - 1)^i`.
    Polynomial { coeffs: Vec<f64> },
    /// Monotone cubic interpolation of `(s, mu(s))` samples.
    Table { s: Vec<f64>, mu: Vec<f64>, slopes: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LawConstants {
    pub mu1: f64,
    pub dmu1: f64,
    pub ddmu1: f64,
    pub dddmu1: f64,
    pub s1: f64,
}

impl MagnetizationLaw {
    pub fn constant(mu: f64) -> Result<Self> {
        let law = MagnetizationLaw::Constant { mu };
        law.validate()?;
        Ok(law)
    }

    pub fn langevin(m: f64, gamma: f64) -> Result<Self> {
        let law = MagnetizationLaw::Langevin { m, gamma };
        law.validate()?;
        Ok(law)
    }

    pub fn polynomial(coeffs: Vec<f64>) -> Result<Self> {
        let law = MagnetizationLaw::Polynomial { coeffs };
        law.validate()?;
        Ok(law)
    }

    /// Builds a tabulated law with Fritsch-Carlson monotone cubic slopes.
    pub fn table(s: Vec<f64>, mu: Vec<f64>) -> Result<Self> {
        if s.len() != mu.len() || s.len() < 2 {
            return Err(Error::InvalidArgument(
                "table needs at least two (s, mu) samples of equal length".into(),
            ));
        }
        if s.windows(2).any(|w| !(w[1] > w[0])) || s[0] < 0.0 {
            return Err(Error::InvalidArgument(
                "table abscissae must be nonnegative and strictly increasing".into(),
            ));
        }
        let slopes = pchip_slopes(&s, &mu);
        let law = MagnetizationLaw::Table { s, mu, slopes };
        law.validate()?;
        Ok(law)
    }

    pub fn name(&self) -> &'static str {
        match self {
            MagnetizationLaw::Constant { .. } => "constant",
            MagnetizationLaw::Langevin { .. } => "langevin",
            MagnetizationLaw::Polynomial { .. } => "polynomial",
            MagnetizationLaw::Table { .. } => "custom-table",
        }
    }

    /// Named scalar parameters of the law.
    pub fn parameters(&self) -> Vec<(String, f64)> {
        match self {
            MagnetizationLaw::Constant { mu } => vec![("mu".into(), *mu)],
            MagnetizationLaw::Langevin { m, gamma } => {
                vec![("M".into(), *m), ("gamma".into(), *gamma)]
            }
            MagnetizationLaw::Polynomial { coeffs } => coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| (format!("c{i}"), *c))
                .collect(),
            MagnetizationLaw::Table { s, .. } => vec![("samples".into(), s.len() as f64)],
        }
    }

    /// Checks `mu >= 1` on sampled `s` and the ellipticity condition at `s = 1`.
    pub fn validate(&self) -> Result<()> {
        match self {
            MagnetizationLaw::Constant { mu } => {
                if !(mu.is_finite() && *mu >= 1.0) {
                    return Err(Error::Domain(format!("constant permeability {mu} < 1")));
                }
            }
            MagnetizationLaw::Langevin { m, gamma } => {
                if !(m.is_finite() && *m >= 0.0 && gamma.is_finite() && *gamma > 0.0) {
                    return Err(Error::Domain(format!(
                        "Langevin law needs M >= 0 and gamma > 0 (got M = {m}, gamma = {gamma})"
                    )));
                }
            }
            MagnetizationLaw::Polynomial { coeffs } => {
                if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(Error::InvalidArgument("polynomial law needs finite coefficients".into()));
                }
                for i in 1..=400 {
                    let s = i as f64 * 0.01;
                    if self.mu(s) < 1.0 - 1e-12 {
                        return Err(Error::Domain(format!("mu({s}) = {} < 1", self.mu(s))));
                    }
                }
            }
            MagnetizationLaw::Table { mu, .. } => {
                if mu.iter().any(|&v| !(v.is_finite() && v >= 1.0)) {
                    return Err(Error::Domain("tabulated permeability below 1".into()));
                }
            }
        }
        let (m0, m1) = (self.mu(1.0), self.derivative(1.0, 1));
        if !(m0 + m1 > 0.0) {
            return Err(Error::Domain(format!(
                "ellipticity violated: mu(1) + mu'(1) = {} <= 0",
                m0 + m1
            )));
        }
        Ok(())
    }

    pub fn mu(&self, s: f64) -> f64 {
        self.derivative(s, 0)
    }

    /// `d^order mu / ds^order` at `s`, for `order <= 3`.
    pub fn derivative(&self, s: f64, order: usize) -> f64 {
        match self {
            MagnetizationLaw::Constant { mu } => {
                if order == 0 {
                    *mu
                } else {
                    0.0
                }
            }
            MagnetizationLaw::Langevin { m, gamma } => {
                let g = langevin_ratio(gamma * s, order);
                let base = m * gamma.powi(order as i32 + 1) * g;
                if order == 0 {
                    1.0 + base
                } else {
                    base
                }
            }
            MagnetizationLaw::Polynomial { coeffs } => {
                let u = s - 1.0;
                coeffs
                    .iter()
                    .enumerate()
                    .skip(order)
                    .rev()
                    .fold(0.0, |acc, (i, c)| {
                        let fall: f64 = (0..order).map(|j| (i - j) as f64).product();
                        acc * u + c * fall
                    })
            }
            MagnetizationLaw::Table { .. } => {
                if order == 0 {
                    self.table_value(s)
                } else {
                    richardson_derivative(|t| self.table_value(t), s, order)
                }
            }
        }
    }

    fn table_value(&self, x: f64) -> f64 {
        let MagnetizationLaw::Table { s, mu, slopes } = self else {
            unreachable!()
        };
        let n = s.len();
        if x <= s[0] {
            return mu[0];
        }
        if x >= s[n - 1] {
            return mu[n - 1];
        }
        let i = s.partition_point(|&t| t <= x) - 1;
        let h = s[i + 1] - s[i];
        let t = (x - s[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * mu[i] + h10 * h * slopes[i] + h01 * mu[i + 1] + h11 * h * slopes[i + 1]
    }

    fn is_analytic(&self) -> bool {
        !matches!(self, MagnetizationLaw::Table { .. })
    }

    pub fn constants_at_one(&self) -> Result<LawConstants> {
        let mu1 = self.derivative(1.0, 0);
        let dmu1 = self.derivative(1.0, 1);
        let ddmu1 = self.derivative(1.0, 2);
        let dddmu1 = self.derivative(1.0, 3);
        if !(mu1 + dmu1 > 0.0) {
            return Err(Error::Domain(format!(
                "ellipticity violated: mu(1) + mu'(1) = {} <= 0",
                mu1 + dmu1
            )));
        }
        if self.is_analytic() {
            let exact = [dmu1, ddmu1, dddmu1];
            for (k, &d) in exact.iter().enumerate() {
                let fd = richardson_derivative(|t| self.mu(t), 1.0, k + 1);
                let scale = 1.0 + mu1.abs() + d.abs();
                if (fd - d).abs() > 1e-5 * scale {
                    return Err(Error::Domain(format!(
                        "derivative {} of mu at s = 1 disagrees with finite differences ({d} vs {fd})",
                        k + 1
                    )));
                }
            }
        }
        Ok(LawConstants {
            mu1,
            dmu1,
            ddmu1,
            dddmu1,
            s1: (mu1 / (mu1 + dmu1)).sqrt(),
        })
    }

    /// `M(s) = int_0^s t mu(t) dt`.
    pub fn potential(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return Err(Error::InvalidArgument(format!("potential needs s >= 0, got {s}")));
        }
        Ok(match self {
            MagnetizationLaw::Constant { mu } => 0.5 * mu * s * s,
            MagnetizationLaw::Langevin { m, gamma } => {
                0.5 * s * s + m / gamma * ln_sinhc(gamma * s)
            }
            MagnetizationLaw::Polynomial { coeffs } => {
                let anti = |u: f64| -> f64 {
                    coeffs
                        .iter()
                        .enumerate()
                        .map(|(i, c)| {
                            c * (u.powi(i as i32 + 2) / (i as f64 + 2.0)
                                + u.powi(i as i32 + 1) / (i as f64 + 1.0))
                        })
                        .sum()
                };
                anti(s - 1.0) - anti(-1.0)
            }
            MagnetizationLaw::Table { s: knots, .. } => {
                let mut pts = vec![0.0];
                pts.extend(knots.iter().copied().filter(|&k| k > 0.0 && k < s));
                pts.push(s);
                pts.windows(2)
                    .map(|w| adaptive_simpson(&|t| t * self.table_value(t), w[0], w[1], 1e-14))
                    .sum()
            }
        })
    }
}

impl LawConstants {
    /// First-order form `nu^1(T) = mu'_1 T_y`.
    pub fn nu1(&self, t: [f64; 3]) -> f64 {
        self.dmu1 * t[1]
    }

    /// Symmetric bilinear form `nu^2`.
    pub fn nu2(&self, a: [f64; 3], b: [f64; 3]) -> f64 {
        0.5 * self.dmu1 * (a[0] * b[0] + a[2] * b[2]) + 0.5 * self.ddmu1 * a[1] * b[1]
    }

    /// Symmetric trilinear form `nu^3`.
    pub fn nu3(&self, a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
        let h = |p: [f64; 3], q: [f64; 3]| p[0] * q[0] + p[2] * q[2];
        let mixed = (a[1] * h(b, c) + b[1] * h(a, c) + c[1] * h(a, b)) / 3.0;
        0.5 * (self.ddmu1 - self.dmu1) * mixed + self.dddmu1 / 6.0 * a[1] * b[1] * c[1]
    }

    /// `nu^j(args)` for `j = args.len() <= 3`.
    pub fn nu_apply(&self, j: usize, args: &[[f64; 3]]) -> Result<f64> {
        if j > 3 {
            return Err(Error::UnsupportedOrder(j, "0..=3"));
        }
        if args.len() != j {
            return Err(Error::InvalidArgument(format!(
                "nu^{j} takes {j} arguments, got {}",
                args.len()
            )));
        }
        Ok(match j {
            0 => self.mu1,
            1 => self.nu1(args[0]),
            2 => self.nu2(args[0], args[1]),
            _ => self.nu3(args[0], args[1], args[2]),
        })
    }
}

/// `d^order/dx^order [(coth x - 1/x) / x]`, even in `x`.
fn langevin_ratio(x: f64, order: usize) -> f64 {
    let ax = x.abs();
    if ax < SERIES_SWITCH {
        let mut acc = 0.0;
        for (i, c) in COTH_SERIES.iter().enumerate() {
            let p = 2 * i;
            if p < order {
                continue;
            }
            let fall: f64 = (0..order).map(|j| (p - j) as f64).product();
            acc += c * fall * x.powi((p - order) as i32);
        }
        return acc;
    }
    let c = 1.0 / x.tanh();
    let c1 = 1.0 - c * c;
    let c2 = -2.0 * c * c1;
    let c3 = -2.0 * (c1 * c1 + c * c2);
    let (x2, x3, x4) = (x * x, x * x * x, x * x * x * x);
    match order {
        0 => c / x - 1.0 / x2,
        1 => c1 / x - c / x2 + 2.0 / x3,
        2 => c2 / x - 2.0 * c1 / x2 + 2.0 * c / x3 - 6.0 / x4,
        3 => c3 / x - 3.0 * c2 / x2 + 6.0 * c1 / x3 - 6.0 * c / x4 + 24.0 / (x4 * x),
        _ => unreachable!("derivative order above 3"),
    }
}

/// `ln(sinh x / x)` without overflow or cancellation.
fn ln_sinhc(x: f64) -> f64 {
    if x < SERIES_SWITCH {
        let x2 = x * x;
        let t = x2 / 6.0 * (1.0 + x2 / 20.0 * (1.0 + x2 / 42.0 * (1.0 + x2 / 72.0 * (1.0 + x2 / 110.0))));
        t.ln_1p()
    } else if x < 20.0 {
        (x.sinh() / x).ln()
    } else {
        x - std::f64::consts::LN_2 - x.ln() + (-(-2.0 * x).exp()).ln_1p()
    }
}

/// Richardson-extrapolated central differences for derivatives of order 1..=3.
pub(crate) fn richardson_derivative(f: impl Fn(f64) -> f64, x: f64, order: usize) -> f64 {
    let stencil = |h: f64| -> f64 {
        match order {
            1 => (f(x + h) - f(x - h)) / (2.0 * h),
            2 => (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h),
            3 => (f(x + 2.0 * h) - 2.0 * f(x + h) + 2.0 * f(x - h) - f(x - 2.0 * h)) / (2.0 * h * h * h),
            _ => f(x),
        }
    };
    let h = match order {
        1 => 1e-3,
        2 => 4e-3,
        _ => 1e-2,
    };
    let a = stencil(h);
    let b = stencil(h / 2.0);
    let c = stencil(h / 4.0);
    let ab = (4.0 * b - a) / 3.0;
    let bc = (4.0 * c - b) / 3.0;
    (16.0 * bc - ab) / 15.0
}

fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let d: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    let mut m = vec![0.0; n];
    if n == 2 {
        m[0] = d[0];
        m[1] = d[0];
        return m;
    }
    for i in 1..n - 1 {
        if d[i - 1] * d[i] <= 0.0 {
            m[i] = 0.0;
        } else {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            m[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
        }
    }
    let end = |h0: f64, h1: f64, d0: f64, d1: f64| -> f64 {
        let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if s * d0 <= 0.0 {
            0.0
        } else if d0 * d1 <= 0.0 && s.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            s
        }
    };
    m[0] = end(h[0], h[1], d[0], d[1]);
    m[n - 1] = end(h[n - 2], h[n - 3], d[n - 2], d[n - 3]);
    m
}

pub(crate) fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    if a == b {
        return 0.0;
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = simpson(fa, fm, fb, a, b);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}
