//! Linear pencil `L0(|k|)`, dispersion relation, critical point, kernel,
//! projection and mode-wise resolvent of the linearised interface problem.

use std::fmt::Write as _;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::fields::{StateTriple, SurfaceField};
use crate::lattice::LatticeSpec;
use crate::magnetization::{LawConstants, MagnetizationLaw};
use crate::{Error, Result};

/// Distance of `|k|` from `omega` below which a mode counts as near-resonant.
pub const RESONANCE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearPencil {
    pub kmag: f64,
    pub matrix: Matrix3<f64>,
    pub beta0: f64,
    pub gamma0: f64,
    pub consts: LawConstants,
}

impl LinearPencil {
    pub fn new(kmag: f64, beta0: f64, gamma0: f64, consts: &LawConstants) -> Self {
        LinearPencil {
            kmag,
            matrix: pencil_matrix(kmag, beta0, gamma0, consts),
            beta0,
            gamma0,
            consts: *consts,
        }
    }

    pub fn det(&self) -> f64 {
        self.matrix.determinant()
    }

    /// Closed form `mu1 (mu1-1)^2 S1^-1 k^2 tanh(k/b) tanh(S1 k/b) - (k^2 + g)(k tanh(k/b) + mu1 S1^-1 k tanh(S1 k/b))`.
    pub fn det_closed_form(&self) -> f64 {
        let c = &self.consts;
        let k = self.kmag;
        let t = (k / self.beta0).tanh();
        let ts = (c.s1 * k / self.beta0).tanh();
        c.mu1 * (c.mu1 - 1.0).powi(2) / c.s1 * k * k * t * ts
            - (k * k + self.gamma0) * (k * t + c.mu1 / c.s1 * k * ts)
    }
}

pub fn pencil_matrix(kmag: f64, beta0: f64, gamma0: f64, c: &LawConstants) -> Matrix3<f64> {
    let t = kmag * (kmag / beta0).tanh();
    let ts = c.mu1 / c.s1 * kmag * (c.s1 * kmag / beta0).tanh();
    Matrix3::new(
        c.mu1 - 1.0, 1.0, -1.0,
        0.0, t, ts,
        -kmag * kmag - gamma0, -c.mu1 * t, -ts,
    )
}

fn coth(x: f64) -> f64 {
    1.0 / x.tanh()
}

fn csch2(x: f64) -> f64 {
    let s = x.sinh();
    1.0 / (s * s)
}

/// `mu1 (mu1 - 1)^2`, the numerator constant of the dispersion relation.
fn numerator(c: &LawConstants) -> f64 {
    c.mu1 * (c.mu1 - 1.0).powi(2)
}

/// `h(x) = mu1 coth x + S1 coth(S1 x)` and its first two derivatives.
fn h_funcs(x: f64, c: &LawConstants) -> (f64, f64, f64) {
    let s = c.s1;
    let h = c.mu1 * coth(x) + s * coth(s * x);
    let h1 = -c.mu1 * csch2(x) - s * s * csch2(s * x);
    let h2 = 2.0 * c.mu1 * csch2(x) * coth(x) + 2.0 * s.powi(3) * csch2(s * x) * coth(s * x);
    (h, h1, h2)
}

/// `r(|k|) = (mu1 (mu1-1)^2 / (mu1 |k| coth(|k|/b) + S1 |k| coth(S1 |k|/b)) - 1) |k|^2`, with `r(0) = 0`.
pub fn dispersion_r(kmag: f64, beta0: f64, c: &LawConstants) -> f64 {
    if kmag <= 0.0 {
        return 0.0;
    }
    let (h, _, _) = h_funcs(kmag / beta0, c);
    numerator(c) * kmag / h - kmag * kmag
}

/// `(r, r', r'')` at `kmag`.
pub fn dispersion_derivatives(kmag: f64, beta0: f64, c: &LawConstants) -> (f64, f64, f64) {
    let a = numerator(c);
    let (h, h1, h2) = h_funcs(kmag / beta0, c);
    // Derivatives of h(k / beta0) with respect to k.
    let (hk1, hk2) = (h1 / beta0, h2 / (beta0 * beta0));
    let r = a * kmag / h - kmag * kmag;
    let r1 = a / h - a * kmag * hk1 / (h * h) - 2.0 * kmag;
    let r2 = -2.0 * a * hk1 / (h * h) - a * kmag * hk2 / (h * h)
        + 2.0 * a * kmag * hk1 * hk1 / (h * h * h)
        - 2.0;
    (r, r1, r2)
}

/// Depth threshold `mu1 (mu1-1)^2 / (mu1 + 1)` above which `r < 0` for all `|k| > 0`.
pub fn dispersion_threshold(c: &LawConstants) -> f64 {
    numerator(c) / (c.mu1 + 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub omega: f64,
    pub gamma0: f64,
    pub omega_tilde: f64,
    pub beta0: f64,
    pub v: [f64; 3],
    pub v_star: [f64; 3],
    pub c_star: f64,
    pub consts: LawConstants,
    /// Number of local maxima of `r` found by the scan (1 in the regular case).
    pub local_maxima: usize,
}

impl CriticalPoint {
    pub fn pencil(&self, kmag: f64) -> Matrix3<f64> {
        pencil_matrix(kmag, self.beta0, self.gamma0, &self.consts)
    }

    fn build(omega: f64, beta0: f64, gamma0: f64, c: &LawConstants, local_maxima: usize) -> Self {
        let wt = omega / beta0;
        let ratio = (c.s1 * wt).tanh() * coth(wt);
        let v = [
            (c.mu1 / c.s1 * ratio + 1.0) / (c.mu1 - 1.0),
            -c.mu1 / c.s1 * ratio,
            1.0,
        ];
        let q = gamma0 + omega * omega;
        let v_star = [
            q / (c.mu1 - 1.0),
            1.0 + q / ((c.mu1 - 1.0) * c.mu1 / c.s1 * omega * (c.s1 * wt).tanh()),
            1.0,
        ];
        let vv: f64 = v.iter().zip(&v_star).map(|(a, b)| a * b).sum();
        CriticalPoint {
            omega,
            gamma0,
            omega_tilde: wt,
            beta0,
            v,
            v_star,
            c_star: 1.0 / vv,
            consts: *c,
            local_maxima,
        }
    }

    /// Residual of `beta0 = mu1 (mu1-1)^2 / (2 w) (h(w) - w h'(w)) / h(w)^2` at `w = omega_tilde`.
    pub fn omega_tilde_identity_defect(&self) -> f64 {
        (beta0_of_omega_tilde(self.omega_tilde, &self.consts) - self.beta0).abs()
    }
}

/// Depth parameter at which the critical wavenumber satisfies `omega / beta0 = wt`.
pub fn beta0_of_omega_tilde(wt: f64, c: &LawConstants) -> f64 {
    let (h, h1, _) = h_funcs(wt, c);
    numerator(c) / (2.0 * wt) * (h - wt * h1) / (h * h)
}

fn law_constants(law: &MagnetizationLaw) -> Result<LawConstants> {
    let c = law.constants_at_one()?;
    if !(c.mu1 > 1.0) {
        return Err(Error::Domain(format!(
            "critical point needs mu(1) > 1, got {}",
            c.mu1
        )));
    }
    Ok(c)
}

/// Maximiser of the dispersion relation.
pub fn critical_point(beta0: f64, law: &MagnetizationLaw) -> Result<CriticalPoint> {
    critical_point_with(beta0, &law_constants(law)?)
}

pub fn critical_point_with(beta0: f64, c: &LawConstants) -> Result<CriticalPoint> {
    if !(beta0 > 0.0 && beta0.is_finite()) {
        return Err(Error::InvalidArgument(format!("beta0 must be positive, got {beta0}")));
    }
    let threshold = dispersion_threshold(c);
    if beta0 >= threshold {
        return Err(Error::NoPositiveMaximum { beta0, threshold });
    }
    // r < 0 beyond mu1 (mu1-1)^2 / (mu1 + S1); scan below that bound.
    let kmax = numerator(c) / (c.mu1 + c.s1);
    let samples = 2000;
    let dk = kmax / samples as f64;
    let mut brackets = Vec::new();
    let mut prev = dispersion_derivatives(dk * 0.5, beta0, c).1;
    for i in 1..=samples {
        let k = dk * (i as f64 + 0.5);
        let d = dispersion_derivatives(k, beta0, c).1;
        if prev > 0.0 && d <= 0.0 {
            brackets.push((k - dk, k));
        }
        prev = d;
    }
    if brackets.is_empty() {
        return Err(Error::NoPositiveMaximum { beta0, threshold });
    }
    let mut best: Option<(f64, f64)> = None;
    for &(lo, hi) in &brackets {
        let k = polish_maximum(lo, hi, beta0, c);
        let r = dispersion_r(k, beta0, c);
        if best.is_none_or(|(_, rb)| r > rb) {
            best = Some((k, r));
        }
    }
    let (omega, gamma0) = best.expect("non-empty brackets");
    if !(gamma0 > 0.0) {
        return Err(Error::NoPositiveMaximum { beta0, threshold });
    }
    Ok(CriticalPoint::build(omega, beta0, gamma0, c, brackets.len()))
}

/// Root of `r'` in `[lo, hi]` by safeguarded Newton.
fn polish_maximum(mut lo: f64, mut hi: f64, beta0: f64, c: &LawConstants) -> f64 {
    let mut k = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (_, d1, d2) = dispersion_derivatives(k, beta0, c);
        if d1 > 0.0 {
            lo = k;
        } else {
            hi = k;
        }
        let mut next = k - d1 / d2;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - k).abs() <= 1e-15 * k {
            return next;
        }
        k = next;
        if hi - lo <= 1e-15 * k {
            break;
        }
    }
    k
}

/// Critical point parameterised by `omega_tilde = omega / beta0`.
pub fn critical_point_from_omega_tilde(wt: f64, law: &MagnetizationLaw) -> Result<CriticalPoint> {
    critical_point_from_omega_tilde_with(wt, &law_constants(law)?)
}

pub fn critical_point_from_omega_tilde_with(wt: f64, c: &LawConstants) -> Result<CriticalPoint> {
    if !(wt > 0.0 && wt.is_finite()) {
        return Err(Error::InvalidArgument(format!("omega_tilde must be positive, got {wt}")));
    }
    let beta0 = beta0_of_omega_tilde(wt, c);
    if !(beta0 > 0.0) {
        return Err(Error::NoPositiveMaximum {
            beta0,
            threshold: dispersion_threshold(c),
        });
    }
    let omega = wt * beta0;
    let (h, _, _) = h_funcs(wt, c);
    let gamma0 = numerator(c) * omega / h - omega * omega;
    if !(gamma0 > 0.0) {
        return Err(Error::NoPositiveMaximum {
            beta0,
            threshold: dispersion_threshold(c),
        });
    }
    Ok(CriticalPoint::build(omega, beta0, gamma0, c, 1))
}

/// Critical point with the strip depth capped at `omega / beta0 <= cap`.
pub fn capped_critical_point(beta0: f64, law: &MagnetizationLaw, cap: f64) -> Result<CriticalPoint> {
    let cp = critical_point(beta0, law)?;
    if cp.omega_tilde > cap {
        critical_point_from_omega_tilde(cap, law)
    } else {
        Ok(cp)
    }
}

fn check_lattice(lat: &LatticeSpec, cp: &CriticalPoint) -> Result<()> {
    if (lat.omega - cp.omega).abs() > 1e-9 * cp.omega {
        return Err(Error::InvalidArgument(format!(
            "lattice wavenumber {} differs from critical wavenumber {}",
            lat.omega, cp.omega
        )));
    }
    Ok(())
}

/// Basis `{v cos(k.x), v sin(k.x)}` of `ker L0` over the `k` with `|k| = omega`.
pub fn kernel_basis(lat: &LatticeSpec, cp: &CriticalPoint) -> Result<Vec<StateTriple>> {
    check_lattice(lat, cp)?;
    let ks = lat.dual_vectors_of_length(cp.omega, lat.default_length_tol());
    let mut seen = Vec::new();
    let mut out = Vec::new();
    for k in ks {
        if seen.contains(&(-k.m, -k.n)) {
            continue;
        }
        seen.push((k.m, k.n));
        out.push(StateTriple::from_vector(cp.v, &SurfaceField::cosine(lat, k.m, k.n)));
        out.push(StateTriple::from_vector(cp.v, &SurfaceField::sine(lat, k.m, k.n)));
    }
    Ok(out)
}

/// The symmetric kernel vector `v0 = v e_1`.
pub fn kernel_vector(lat: &LatticeSpec, cp: &CriticalPoint) -> Result<StateTriple> {
    check_lattice(lat, cp)?;
    Ok(StateTriple::from_vector(cp.v, &SurfaceField::fundamental(lat)))
}

/// Mode-wise action of `L0` on a state.
pub fn apply_pencil(lat: &LatticeSpec, cp: &CriticalPoint, x: &StateTriple) -> StateTriple {
    let mut out = StateTriple::zeros(lat);
    for k in lat.wavevectors() {
        let m = cp.pencil(k.norm());
        let v = x.mode(k.m, k.n);
        out.set_mode(k.m, k.n, mat_apply(&m, v));
    }
    out
}

fn mat_apply(m: &Matrix3<f64>, v: [Complex64; 3]) -> [Complex64; 3] {
    let mut out = [Complex64::new(0.0, 0.0); 3];
    for (i, o) in out.iter_mut().enumerate() {
        for (j, vj) in v.iter().enumerate() {
            *o += vj * m[(i, j)];
        }
    }
    out
}

/// `P f = C* ([f]_1 . v*) v e_1`.
pub fn projection_p(lat: &LatticeSpec, cp: &CriticalPoint, f: &StateTriple) -> StateTriple {
    let b = f.bracket();
    let coef = cp.c_star * (b[0] * cp.v_star[0] + b[1] * cp.v_star[1] + b[2] * cp.v_star[2]);
    StateTriple::from_vector(cp.v, &SurfaceField::fundamental(lat).scale(coef))
}

/// Solves `L0 x = rhs` mode by mode for `rhs` in the range of `L0`; on the
/// critical circle the solution is fixed by `x_k . v* = 0`, so `P x = 0`.
pub fn resolvent_solve(lat: &LatticeSpec, cp: &CriticalPoint, rhs: &StateTriple) -> Result<StateTriple> {
    check_lattice(lat, cp)?;
    let scale = rhs.max_abs().max(1e-300);
    let p = projection_p(lat, cp, rhs);
    if p.max_abs() > 1e-8 * scale.max(1.0) {
        return Err(Error::NotInRange(format!(
            "projection onto the kernel direction has size {:.3e}",
            p.max_abs()
        )));
    }
    if rhs.phi_up.coeff(0, 0).norm() > 1e-10 * scale.max(1.0) {
        return Err(Error::NotInRange("second component has nonzero mean".into()));
    }
    let tol = lat.default_length_tol();
    let vs = Vector3::from(cp.v_star);
    let mut out = StateTriple::zeros(lat);
    for k in lat.wavevectors() {
        let b = rhs.mode(k.m, k.n);
        let kmag = k.norm();
        if k.m == 0 && k.n == 0 {
            let (chi, psi) = (b[0], b[2]);
            let eta = -psi / cp.gamma0;
            let phi = -chi - psi * ((cp.consts.mu1 - 1.0) / cp.gamma0);
            out.set_mode(0, 0, [eta, Complex64::new(0.0, 0.0), phi]);
            continue;
        }
        let m = cp.pencil(kmag);
        if (kmag - cp.omega).abs() <= tol {
            let along: Complex64 = b.iter().zip(vs.iter()).map(|(x, y)| x * y).sum();
            if along.norm() > 1e-8 * scale.max(1.0) {
                return Err(Error::NotInRange(format!(
                    "mode ({}, {}) has a component {:.3e} outside the range",
                    k.m,
                    k.n,
                    along.norm()
                )));
            }
            let aug = m + vs * vs.transpose();
            let inv = aug.try_inverse().ok_or_else(|| {
                Error::NotInRange("bordered critical pencil is singular".into())
            })?;
            out.set_mode(k.m, k.n, mat_apply(&inv, b));
            continue;
        }
        if (kmag - cp.omega).abs() < RESONANCE_TOL {
            return Err(Error::NearResonance {
                m: k.m,
                n: k.n,
                kmag,
                omega: cp.omega,
            });
        }
        let inv = m.try_inverse().ok_or(Error::NearResonance {
            m: k.m,
            n: k.n,
            kmag,
            omega: cp.omega,
        })?;
        out.set_mode(k.m, k.n, mat_apply(&inv, b));
    }
    Ok(out)
}

/// Coefficient of `v e_1` in `P L1 v0`, where `L1 (eta, Phi', Phi) = (0, 0, -eta)`.
pub fn transversality(cp: &CriticalPoint) -> f64 {
    -cp.c_star * cp.v[0] * cp.v_star[2]
}

/// The displayed closed form of the transversality coefficient.
pub fn transversality_closed_form(cp: &CriticalPoint) -> f64 {
    let c = &cp.consts;
    let wt = cp.omega_tilde;
    -cp.c_star / (c.mu1 - 1.0) / c.s1
        * (c.s1 * wt).tanh()
        * (c.mu1 * coth(wt) + c.s1 * coth(c.s1 * wt))
}

/// CSV `kmag,r,is_maximum` on `n` uniform samples of `[0, kmax]`, followed by
/// a marker row for the maximum (or its absence).
pub fn dispersion_csv(beta0: f64, law: &MagnetizationLaw, kmax: f64, n: usize) -> Result<String> {
    let c = law.constants_at_one()?;
    let cp = critical_point_with(beta0, &c);
    let mut s = String::from("kmag,r,is_maximum\n");
    for i in 0..n {
        let k = if n > 1 { kmax * i as f64 / (n - 1) as f64 } else { 0.0 };
        let _ = writeln!(s, "{:.16e},{:.16e},0", k, dispersion_r(k, beta0, &c));
    }
    match cp {
        Ok(cp) => {
            let _ = writeln!(s, "{:.16e},{:.16e},1", cp.omega, cp.gamma0);
        }
        Err(Error::NoPositiveMaximum { .. }) => {
            s.push_str("# no-maximum\n");
        }
        Err(e) => return Err(e),
    }
    Ok(s)
}
